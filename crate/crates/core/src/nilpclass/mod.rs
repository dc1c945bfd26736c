//! Nilpotent division fields: admissibility, the prime-level searches, the
//! 2-power and odd prime-square rules, j = 0 images and the classifier.

mod admissible;
mod classify;
mod j0;

pub use admissible::*;
pub use classify::*;
pub use j0::*;

//! The group engine: closure, structure, conjugacy and subgroup enumeration.

mod conjugacy;
mod enumerate;
mod group;
pub mod lift;

pub use conjugacy::{are_conjugate, find_conjugator, is_conjugate_into, Ambient, Mode};
pub use enumerate::{
    enumerate_subgroups, maximal_classes, sort_classes, ConjClassRep, KernelFn, Pred, Search, Strategy, FULL_LIMIT,
};
pub use group::{Fingerprint, GroupSummary, MatGroup, DEFAULT_BUDGET};
pub use lift::{lift_search, stable_trace_lines, KernelChoice};

use crate::modmat::Mat2;
use crate::Result;

/// Closure of `gens` at level `n` (default budget).
pub fn generate(gens: &[Mat2], n: u32) -> Result<MatGroup> {
    MatGroup::generate(gens, n)
}

pub fn is_nilpotent(g: &MatGroup) -> bool {
    g.is_nilpotent()
}

pub fn reduce_group(g: &MatGroup, m: u32) -> Result<MatGroup> {
    g.reduce(m)
}

pub fn kernel_of_reduction(g: &MatGroup, m: u32) -> Result<MatGroup> {
    g.kernel_of_reduction(m)
}

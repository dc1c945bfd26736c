//! Holds the `acceptance` test target, which runs every acceptance criterion
//! against `divfield-core` and prints one PASS/FAIL line per criterion.
//!
//! Run it with `cargo test -p divfield-validation --test acceptance`.

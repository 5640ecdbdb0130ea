//! Exact enumeration of norm balls in SL(d,ℤ) and orbit statistics.

mod enumerate;
mod orbit;
mod testfn;

pub use enumerate::{
    entry_bound, enumerate_ball, enumerate_ball_with_cap, ext_gcd, fold_ball, gamma_count,
    predicted_candidates, BallEnumeration, LatticeFamily, LatticeSpec, DEFAULT_BUDGET,
};
pub use orbit::{
    act, count_in_set, orbit_sum, orbit_sum_complex, orbit_sums_streaming, Action, OrbitPoint,
};
pub use testfn::{Region, TestFunction};

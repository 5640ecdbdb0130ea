//! Haar volumes of balls and skew balls, asymptotic constants and limit ratios.

mod constants;
mod haar;
mod riemann;
mod skew;
mod sweep;
mod xi;

pub use constants::{
    asymptotic_constant_c, asymptotic_constant_c_skew, asymptotic_constant_d, default_k_method,
    DEFAULT_TOL,
};
pub use haar::{
    chamber_sector_volume, chamber_sector_volume_with, haar_volume, haar_volume_windowed, k_rule,
    ChamberWindow, Method, SkewBallSpec, VolumeEstimate, WindowedVolume,
};
pub use riemann::{
    busemann_rank1, busemann_rank1_with_tail, chamber_exp_integral_2d, exp_ball_integral,
    exp_sector_integral_2d, hyperbolic_distance, rank1_constant, riemannian_exponents,
    riemannian_skew_volume_sl2, ymax, InnerProduct, RiemannianExponents,
};
pub use skew::{
    limit_ratio_alpha, richardson, spiral_h_element, spiral_h_volume, spiral_norm, spiral_s_n,
    spiral_skew_volume, spiral_t_n, unipotent_skewball_volume, AlphaEstimate, SkewFamily,
    SpiralProfile,
};
pub use sweep::{volume_sweep, write_sweep_csv, SweepPoint};
pub use xi::{xi, xi_t, ExpPoly};

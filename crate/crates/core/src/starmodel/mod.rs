//! The closed-form 1 2 model and general star models: free energy, its
//! derivatives, Newton inversion of densities and the Legendre-dual entropy.

mod dilog;
mod free_energy;
mod mahonian;
mod star12;

pub use dilog::li2;
pub use free_energy::{
    free_energy, grad_free_energy, hessian_free_energy, solve_star, solve_star_with, star23_bounds, star_shape,
    NewtonOptions, StarEval, StarModel, StarSolution, StarTerm,
};
pub(crate) use mahonian::{log_add, log_factorial};
pub use mahonian::mahonian_log_gf;
pub use star12::{
    star12_cdf, star12_density, star12_entropy, star12_entropy_of_rho, star12_grid, star12_r_from_rho,
    star12_rho, Star12Params,
};

use crate::regions::RegionCurve;

/// Boundary of the (ρ_{*2}, ρ_{**3}) feasible region: the lower curve
/// `(2t - t², 3t² - 2t³)` and the upper curve `(1 - t², 1 - t³)`, `t ∈ [0, 1]`.
pub fn region_star23_boundary(t_samples: usize) -> (RegionCurve, RegionCurve) {
    let lower = RegionCurve::sample("star23-lower", t_samples, |t| (2.0 * t - t * t, 3.0 * t * t - 2.0 * t * t * t));
    let upper = RegionCurve::sample("star23-upper", t_samples, |t| (1.0 - t * t, 1.0 - t * t * t));
    (lower, upper)
}

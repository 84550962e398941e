//! Permuton entropy of step permutons, refinement diagnostics and heat-flow
//! smoothing.
//!
//! The heat flow multiplies the cosine coefficients of the grid density by
//! `e^{-(μ_j + μ_k) t}`. With the default lattice symbol
//! `μ_j = (2m/π · sin(πj / 2m))²` (which tends to `j²` for `j ≪ m`) the flow is
//! the heat semigroup of the grid's Neumann Laplacian: a nonnegative, doubly
//! stochastic averaging, so it preserves marginals and never lowers entropy.
//! The continuum symbol `j²` is available too; its kernel can dip below zero,
//! in which case cells are clipped and marginals rebalanced.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::GridPermuton;

/// `H(γ^m) = -Σ w_ij log(m² w_ij)`, with `0 log 0 = 0`.
pub fn entropy_grid(g: &GridPermuton) -> f64 {
    let m2 = (g.m() * g.m()) as f64;
    let h = -g.masses().iter().filter(|&&w| w > 0.0).map(|&w| w * (m2 * w).ln()).sum::<f64>();
    // H <= 0 by Jensen; only round-off can push it above
    h.min(0.0)
}

/// `(m, H(γ^m))` for each level `m` dividing the native resolution, in the given order.
pub fn riemann_refinement(g: &GridPermuton, levels: &[usize]) -> Result<Vec<(usize, f64)>> {
    levels.iter().map(|&m| Ok((m, entropy_grid(&g.coarsen(m)?)))).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HeatSymbol {
    /// Eigenvalues of the grid Neumann Laplacian; positivity-preserving.
    Lattice,
    /// `j²`, the continuum symbol; may need clipping.
    Continuum,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatFlowSpec {
    pub t: f64,
    /// Cosine modes `j < j_max` (in x) and `k < k_max` (in y) are kept.
    pub j_max: usize,
    pub k_max: usize,
    pub symbol: HeatSymbol,
}

impl HeatFlowSpec {
    /// Full-resolution flow for time `t` with the lattice symbol.
    pub fn new(t: f64, m: usize) -> Self {
        HeatFlowSpec { t, j_max: m, k_max: m, symbol: HeatSymbol::Lattice }
    }

    fn validate(&self) -> Result<()> {
        if !(self.t >= 0.0) {
            return Err(Error::invalid(format!("diffusion time must be nonnegative, got {}", self.t)));
        }
        if self.j_max == 0 || self.k_max == 0 {
            return Err(Error::invalid("mode cutoffs must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct HeatFlowOutcome {
    pub grid: GridPermuton,
    /// Number of cells clipped at zero before rebalancing.
    pub clipped: usize,
    /// L1 size of the rebalancing correction (0 if none was needed).
    pub correction: f64,
}

pub fn heat_flow(g: &GridPermuton, spec: &HeatFlowSpec) -> Result<GridPermuton> {
    Ok(heat_flow_detailed(g, spec)?.grid)
}

pub fn heat_flow_detailed(g: &GridPermuton, spec: &HeatFlowSpec) -> Result<HeatFlowOutcome> {
    spec.validate()?;
    let m = g.m();
    let kx = smoothing_kernel(m, spec.t, spec.j_max, spec.symbol);
    let ky = if spec.k_max == spec.j_max { kx.clone() } else { smoothing_kernel(m, spec.t, spec.k_max, spec.symbol) };
    // masses and densities differ by the constant m², so smooth masses directly
    let w = DMatrix::from_row_slice(m, m, g.masses());
    let smoothed = &kx * w * ky.transpose();
    let mut out: Vec<f64> = (0..m).flat_map(|i| (0..m).map(move |j| (i, j))).map(|(i, j)| smoothed[(i, j)]).collect();
    let mut clipped = 0;
    for v in out.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
            clipped += 1;
        }
    }
    let candidate = GridPermuton::from_masses(m, out.clone());
    match candidate {
        Ok(grid) if clipped == 0 => Ok(HeatFlowOutcome { grid, clipped, correction: 0.0 }),
        _ => {
            let r = GridPermuton::rebalance(m, out)?;
            Ok(HeatFlowOutcome { grid: r.grid, clipped, correction: r.correction })
        }
    }
}

/// One-dimensional operator `Φᵀ S diag(e^{-μ t}) Φ` on `m` cells, where `Φ` is
/// the DCT-II basis and `S` its inverse normalization.
fn smoothing_kernel(m: usize, t: f64, modes: usize, symbol: HeatSymbol) -> DMatrix<f64> {
    let mf = m as f64;
    let mu = |j: usize| match symbol {
        HeatSymbol::Lattice => {
            let s = 2.0 * mf / PI * (PI * j as f64 / (2.0 * mf)).sin();
            s * s
        }
        HeatSymbol::Continuum => (j * j) as f64,
    };
    let mut k = DMatrix::zeros(m, m);
    for j in 0..modes.min(m) {
        let factor = if j == 0 { 1.0 / mf } else { 2.0 / mf } * (-mu(j) * t).exp();
        let basis: Vec<f64> = (0..m).map(|i| (PI * j as f64 * (i as f64 + 0.5) / mf).cos()).collect();
        for a in 0..m {
            for b in 0..m {
                k[(a, b)] += factor * basis[a] * basis[b];
            }
        }
    }
    k
}

/// Whether the entropy sequence of a refinement is nonincreasing (within `tol`).
pub fn is_nonincreasing(seq: &[(usize, f64)], tol: f64) -> bool {
    seq.windows(2).all(|w| w[1].1 <= w[0].1 + tol)
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Permutation;
    use crate::starmodel::{star12_entropy, star12_grid};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_grid(m: usize, seed: u64) -> GridPermuton {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        GridPermuton::rebalance(m, (0..m * m).map(|_| rng.random::<f64>().powi(4)).collect()).unwrap().grid
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy_grid(&GridPermuton::uniform(7)), 0.0);
        let pi: Permutation = "3142".parse().unwrap();
        let g = GridPermuton::from_permutation(&pi, 4).unwrap();
        assert!((entropy_grid(&g) + 4f64.ln()).abs() < 1e-15);
        assert!((entropy_grid(&GridPermuton::identity(16)) + 16f64.ln()).abs() < 1e-14);
        let r = random_grid(8, 1);
        assert!(entropy_grid(&r) < 0.0);
        assert!(entropy_grid(&r.coarsen(4).unwrap()) >= entropy_grid(&r));
    }

    #[test]
    fn refinement() {
        let id = GridPermuton::identity(64);
        let seq = riemann_refinement(&id, &[1, 2, 4, 8, 16, 32, 64]).unwrap();
        for &(m, h) in &seq {
            assert!((h + (m as f64).ln()).abs() < 1e-13);
        }
        assert!(seq.windows(2).all(|w| w[1].1 < w[0].1));
        let s = star12_grid(-3.0, 64).unwrap();
        let seq = riemann_refinement(&s, &[8, 16, 32, 64]).unwrap();
        assert!(is_nonincreasing(&seq, 0.0));
        let exact = star12_entropy(-3.0);
        assert!(seq.iter().all(|&(_, h)| h >= exact));
        assert!(seq[3].1 - exact < 1e-3 && seq[3].1 - exact < seq[0].1 - exact);
        assert!(riemann_refinement(&s, &[5]).is_err());
    }

    #[test]
    fn flow_time_zero_and_infinity() {
        let g = random_grid(12, 2);
        let same = heat_flow(&g, &HeatFlowSpec::new(0.0, 12)).unwrap();
        for (a, b) in same.masses().iter().zip(g.masses()) {
            assert!((a - b).abs() < 1e-10);
        }
        let flat = heat_flow(&g, &HeatFlowSpec::new(1e3, 12)).unwrap();
        assert!(flat.masses().iter().all(|v| (v - 1.0 / 144.0).abs() < 1e-15));
        assert!(heat_flow(&g, &HeatFlowSpec::new(-1.0, 12)).is_err());
    }

    #[test]
    fn identity_smooths_out() {
        let id = GridPermuton::identity(32);
        let out = heat_flow_detailed(&id, &HeatFlowSpec::new(0.05, 32)).unwrap();
        assert_eq!(out.clipped, 0);
        assert!(out.grid.marginal_error() < 1e-12);
        assert!(entropy_grid(&out.grid) > -(32f64.ln()));
    }

    #[test]
    fn monotone_entropy_and_semigroup() {
        for seed in 0..5 {
            let g = random_grid(16, seed);
            let mut prev = entropy_grid(&g);
            let mut cur = g.clone();
            for _ in 0..5 {
                cur = heat_flow(&cur, &HeatFlowSpec::new(0.01, 16)).unwrap();
                assert!(cur.marginal_error() < 1e-12);
                let h = entropy_grid(&cur);
                assert!(h >= prev - 1e-15);
                prev = h;
            }
            let once = heat_flow(&g, &HeatFlowSpec::new(0.05, 16)).unwrap();
            for (a, b) in once.masses().iter().zip(cur.masses()) {
                assert!((a - b).abs() < 1e-8 / 256.0);
            }
        }
    }

    #[test]
    fn continuum_symbol_needs_clipping() {
        let id = GridPermuton::identity(32);
        let spec = HeatFlowSpec { t: 1e-3, j_max: 32, k_max: 32, symbol: HeatSymbol::Continuum };
        let out = heat_flow_detailed(&id, &spec).unwrap();
        assert!(out.clipped > 0);
        assert!(out.grid.marginal_error() < 1e-12);
        // truncating modes also works as a low-pass filter
        let spec = HeatFlowSpec { t: 0.0, j_max: 4, k_max: 4, symbol: HeatSymbol::Lattice };
        let low = heat_flow(&random_grid(16, 3), &spec).unwrap();
        assert!(low.marginal_error() < 1e-12);
    }
}

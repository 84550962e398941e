//! Star-model free energy and its Legendre dual.
//!
//! For `p(t, x) = Σ α_i t^{r_i} (x - t)^{s_i} / (r_i! s_i!)` the normalized
//! free energy is
//!
//! ```text
//! F(α) = 1 + ∫_0^1 log ∫_0^x e^{p(t,x)} dt dx = ∫_0^1 log ∫_0^1 e^{p(xu,x)} du dx,
//! ```
//!
//! so `F(0) = 0`. Its gradient is the integrated tilted mean of the monomials
//! and its Hessian the integrated covariance, hence `F` is convex. The entropy
//! of the maximizing permuton is `H = F - Σ α_i ∂F/∂α_i`, and pattern-class
//! densities are `ρ_i = k_i! ∂F/∂α_i` with `k_i = r_i + s_i + 1`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::composite_unit_rule;

/// One monomial `α t^r (x - t)^s / (r! s!)`; weights patterns of length `r + s + 1`
/// whose last entry has `r` smaller and `s` larger predecessors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StarTerm {
    pub r: u32,
    pub s: u32,
    pub alpha: f64,
}

impl StarTerm {
    pub fn k(&self) -> u32 {
        self.r + self.s + 1
    }

    /// `k!`, the factor converting `∂F/∂α` into a pattern density.
    pub fn k_factorial(&self) -> f64 {
        (1..=self.k()).map(f64::from).product()
    }

    fn norm(&self) -> f64 {
        let f = |n: u32| (1..=n).map(f64::from).product::<f64>();
        1.0 / (f(self.r) * f(self.s))
    }
}

/// Exponential family over insertion processes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StarModel {
    pub terms: Vec<StarTerm>,
    /// Target accuracy of the adaptive quadrature (relative once values exceed 1).
    pub quad_tol: f64,
}

/// Everything [`solve_star`] produces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StarSolution {
    pub shape: Vec<(u32, u32)>,
    pub alpha: Vec<f64>,
    pub densities: Vec<f64>,
    pub free_energy: f64,
    pub entropy: f64,
    pub hessian: Vec<Vec<f64>>,
    pub newton_iterations: usize,
}

/// `F`, `∇F` and `∇²F` from one quadrature pass.
#[derive(Clone, Debug)]
pub struct StarEval {
    pub value: f64,
    pub grad: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

const NODES: usize = 10;
const MAX_PANELS: usize = 512;

impl StarModel {
    pub fn new(terms: Vec<StarTerm>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::invalid("a star model needs at least one term"));
        }
        for (i, t) in terms.iter().enumerate() {
            if t.k() < 2 {
                return Err(Error::invalid("star terms need pattern length k >= 2"));
            }
            if !t.alpha.is_finite() {
                return Err(Error::invalid(format!("coefficient {} is not finite", t.alpha)));
            }
            if terms[..i].iter().any(|u| (u.r, u.s) == (t.r, t.s)) {
                return Err(Error::invalid(format!("exponent pair ({}, {}) repeated", t.r, t.s)));
            }
        }
        Ok(StarModel { terms, quad_tol: 1e-13 })
    }

    /// Model with the given exponent pairs and coefficients.
    pub fn with_shape(shape: &[(u32, u32)], alpha: &[f64]) -> Result<Self> {
        if shape.len() != alpha.len() {
            return Err(Error::invalid("one coefficient per exponent pair"));
        }
        Self::new(shape.iter().zip(alpha).map(|(&(r, s), &alpha)| StarTerm { r, s, alpha }).collect())
    }

    pub fn shape(&self) -> Vec<(u32, u32)> {
        self.terms.iter().map(|t| (t.r, t.s)).collect()
    }

    pub fn alpha(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.alpha).collect()
    }

    pub fn set_alpha(&mut self, alpha: &[f64]) {
        for (t, &a) in self.terms.iter_mut().zip(alpha) {
            t.alpha = a;
        }
    }

    /// `p(t, x)`.
    pub fn exponent(&self, t: f64, x: f64) -> f64 {
        self.terms.iter().map(|term| term.alpha * self.monomial(term, t, x)).sum()
    }

    fn monomial(&self, term: &StarTerm, t: f64, x: f64) -> f64 {
        term.norm() * t.powi(term.r as i32) * (x - t).powi(term.s as i32)
    }

    /// Insertion density `e^{p(y,x)} / ∫_0^x e^{p(t,x)} dt` at `0 <= y <= x`.
    pub fn insertion_density(&self, x: f64, y: f64) -> f64 {
        let rule = composite_unit_rule(16, NODES);
        let peak = rule.iter().map(|&(u, _)| self.exponent(u * x, x)).fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = rule.iter().map(|&(u, w)| w * (self.exponent(u * x, x) - peak).exp()).sum::<f64>() * x;
        (self.exponent(y, x) - peak).exp() / z
    }

    /// Single-resolution evaluation with `panels` panels in each direction.
    fn eval_at(&self, panels: usize) -> StarEval {
        let k = self.terms.len();
        let inner = composite_unit_rule(panels, NODES);
        let outer = composite_unit_rule(panels, NODES);
        let columns: Vec<(f64, DVector<f64>, DMatrix<f64>)> = outer
            .par_iter()
            .map(|&(x, wx)| {
                // tilted moments of the monomials on column x, in the log domain
                let ps: Vec<f64> = inner.iter().map(|&(u, _)| self.exponent(u * x, x)).collect();
                let peak = ps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let mut z = 0.0;
                let mut mean = DVector::zeros(k);
                let mut second = DMatrix::zeros(k, k);
                let mut phi = DVector::zeros(k);
                for (&(u, wu), &p) in inner.iter().zip(&ps) {
                    let e = wu * (p - peak).exp();
                    for (i, term) in self.terms.iter().enumerate() {
                        phi[i] = self.monomial(term, u * x, x);
                    }
                    z += e;
                    mean.axpy(e, &phi, 1.0);
                    second.ger(e, &phi, &phi, 1.0);
                }
                mean /= z;
                second /= z;
                let cov = second - &mean * mean.transpose();
                (wx * (peak + z.ln()), wx * mean, wx * cov)
            })
            .collect();
        let mut value = 0.0;
        let mut grad = DVector::zeros(k);
        let mut hessian = DMatrix::zeros(k, k);
        for (v, g, h) in columns {
            value += v;
            grad += g;
            hessian += h;
        }
        StarEval { value, grad, hessian }
    }

    /// `F`, gradient and Hessian, refining the quadrature until two successive
    /// resolutions agree to `quad_tol`.
    pub fn evaluate(&self) -> Result<StarEval> {
        let mut panels = 2;
        let mut prev = self.eval_at(panels);
        loop {
            panels *= 2;
            let next = self.eval_at(panels);
            // relative to each block's size: at large |α| the values outgrow f64
            // resolution of an absolute tolerance
            let rel = |d: f64, size: f64| d / size.max(1.0);
            let diff = rel((next.value - prev.value).abs(), next.value.abs())
                .max(rel((&next.grad - &prev.grad).amax(), next.grad.amax()))
                .max(rel((&next.hessian - &prev.hessian).amax(), next.hessian.amax()));
            if diff <= self.quad_tol {
                return Ok(next);
            }
            if panels >= MAX_PANELS {
                return Err(Error::Quadrature { residual: diff });
            }
            prev = next;
        }
    }

    /// Pattern-class densities `k_i! ∂F/∂α_i`.
    pub fn densities(&self) -> Result<Vec<f64>> {
        let e = self.evaluate()?;
        Ok(self.terms.iter().zip(e.grad.iter()).map(|(t, g)| t.k_factorial() * g).collect())
    }

    /// Legendre dual `F - Σ α_i ∂F/∂α_i`: entropy of the maximizing permuton.
    pub fn entropy(&self) -> Result<f64> {
        let e = self.evaluate()?;
        Ok(e.value - self.terms.iter().zip(e.grad.iter()).map(|(t, g)| t.alpha * g).sum::<f64>())
    }
}

pub fn free_energy(model: &StarModel) -> Result<f64> {
    Ok(model.evaluate()?.value)
}

pub fn grad_free_energy(model: &StarModel) -> Result<Vec<f64>> {
    Ok(model.evaluate()?.grad.iter().copied().collect())
}

pub fn hessian_free_energy(model: &StarModel) -> Result<DMatrix<f64>> {
    Ok(model.evaluate()?.hessian)
}

/// Newton options for [`solve_star`].
#[derive(Clone, Copy, Debug)]
pub struct NewtonOptions {
    pub max_iterations: usize,
    pub max_halvings: usize,
    /// Convergence threshold on `max_i |ρ_i(α) - target_i|`.
    pub tol: f64,
    /// Coefficients beyond this size mean the target is on or outside the
    /// boundary, where `α` diverges.
    pub max_alpha: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { max_iterations: 100, max_halvings: 30, tol: 1e-10, max_alpha: 1e4 }
    }
}

/// Finds `α` with `k_i! ∂F/∂α_i = targets_i`.
pub fn solve_star(shape: &[(u32, u32)], targets: &[f64]) -> Result<StarSolution> {
    solve_star_with(shape, targets, NewtonOptions::default())
}

pub fn solve_star_with(shape: &[(u32, u32)], targets: &[f64], opts: NewtonOptions) -> Result<StarSolution> {
    if shape.len() != targets.len() {
        return Err(Error::invalid("one target per exponent pair"));
    }
    if let Some(t) = targets.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
        return Err(Error::invalid(format!("targets must lie in (0, 1), got {t}")));
    }
    if let Some(msg) = known_region_violation(shape, targets) {
        return Err(Error::Infeasible(msg));
    }
    let mut model = StarModel::with_shape(shape, &vec![0.0; shape.len()])?;
    let scale: DVector<f64> = DVector::from_iterator(shape.len(), model.terms.iter().map(StarTerm::k_factorial));
    let goal = DVector::from_column_slice(targets).component_div(&scale);
    let residual_of = |e: &StarEval| (e.grad.component_mul(&scale) - goal.component_mul(&scale)).amax();

    let mut eval = model.evaluate()?;
    let mut residual = residual_of(&eval);
    let mut iterations = 0;
    while residual > opts.tol {
        if iterations == opts.max_iterations {
            return Err(Error::NotConverged { iterations, residual });
        }
        iterations += 1;
        let chol = eval
            .hessian
            .clone()
            .cholesky()
            .ok_or_else(|| Error::invalid("free-energy Hessian is not positive definite"))?;
        let step = chol.solve(&(&goal - &eval.grad));
        let alpha = DVector::from_vec(model.alpha());
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let trial = &alpha + t * &step;
            let mut candidate = model.clone();
            candidate.set_alpha(trial.as_slice());
            if let Ok(e) = candidate.evaluate() {
                let r = residual_of(&e);
                if r < residual {
                    accepted = Some((candidate, e, r));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((m, e, r)) = accepted else {
            // no descent along the Newton direction: target on or beyond the boundary
            return Err(Error::NotConverged { iterations, residual });
        };
        model = m;
        eval = e;
        residual = r;
        if model.alpha().iter().any(|a| a.abs() > opts.max_alpha) {
            return Err(Error::NotConverged { iterations, residual });
        }
    }
    let densities: Vec<f64> = eval.grad.component_mul(&scale).iter().copied().collect();
    let alpha = model.alpha();
    let entropy = eval.value - alpha.iter().zip(eval.grad.iter()).map(|(a, g)| a * g).sum::<f64>();
    let k = shape.len();
    Ok(StarSolution {
        shape: shape.to_vec(),
        alpha,
        densities,
        free_energy: eval.value,
        entropy,
        hessian: (0..k).map(|i| (0..k).map(|j| eval.hessian[(i, j)]).collect()).collect(),
        newton_iterations: iterations,
    })
}

/// Targets for the `(*2, **3)` pair outside the known feasible region.
fn known_region_violation(shape: &[(u32, u32)], targets: &[f64]) -> Option<String> {
    let find = |pair| shape.iter().position(|&p| p == pair);
    let (i2, i3) = (find((1, 0))?, find((2, 0))?);
    if shape.len() != 2 {
        return None;
    }
    let (a, b) = (targets[i2], targets[i3]);
    let (lo, hi) = star23_bounds(a);
    (b <= lo || b >= hi).then(|| format!("rho_**3 = {b} is outside ({lo}, {hi}) at rho_*2 = {a}"))
}

/// Range of `ρ_{**3}` at fixed `ρ_{*2}`: the lower curve `(2t - t², 3t² - 2t³)`
/// and the upper curve `(1 - t², 1 - t³)` solved for the first coordinate.
pub fn star23_bounds(rho2: f64) -> (f64, f64) {
    let t = 1.0 - (1.0 - rho2).sqrt();
    let u = (1.0 - rho2).sqrt();
    (3.0 * t * t - 2.0 * t * t * t, 1.0 - u * u * u)
}

/// Exponent pairs of the named pattern classes: `*2`, `**1`, `**2`, `**3`.
pub fn star_shape(class: &str) -> Result<(u32, u32)> {
    match class.trim() {
        "*2" | "12" => Ok((1, 0)),
        "*1" | "21" => Ok((0, 1)),
        "**3" => Ok((2, 0)),
        "**2" => Ok((1, 1)),
        "**1" => Ok((0, 2)),
        other => Err(Error::invalid(format!("unknown star class {other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::starmodel::{mahonian_log_gf, star12_entropy, star12_r_from_rho, star12_rho};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn model(shape: &[(u32, u32)], alpha: &[f64]) -> StarModel {
        StarModel::with_shape(shape, alpha).unwrap()
    }

    #[test]
    fn uniform_point() {
        let m = model(&[(1, 0), (2, 0)], &[0.0, 0.0]);
        let e = m.evaluate().unwrap();
        assert!(e.value.abs() < 1e-15);
        assert!((e.grad[0] - 0.25).abs() < 1e-14);
        assert!((e.grad[1] - 1.0 / 18.0).abs() < 1e-14);
        let rho = m.densities().unwrap();
        assert!((rho[0] - 0.5).abs() < 1e-14 && (rho[1] - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_models() {
        assert!(StarModel::with_shape(&[(0, 0)], &[1.0]).is_err());
        assert!(StarModel::with_shape(&[(1, 0), (1, 0)], &[1.0, 2.0]).is_err());
        assert!(StarModel::with_shape(&[(1, 0)], &[]).is_err());
        assert!(StarModel::new(vec![]).is_err());
    }

    #[test]
    fn one_term_is_the_12_model() {
        for &r in &[-3.0, -0.7, 2.0] {
            let m = model(&[(1, 0)], &[-r]);
            assert!((m.densities().unwrap()[0] - star12_rho(r)).abs() < 1e-12);
            assert!((m.entropy().unwrap() - star12_entropy(r)).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_and_hessian_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let shape = [(1, 0), (2, 0), (1, 1)];
        for _ in 0..3 {
            let alpha: Vec<f64> = (0..3).map(|_| rng.random_range(-4.0..4.0)).collect();
            let base = model(&shape, &alpha).evaluate().unwrap();
            let h = 1e-5;
            for i in 0..3 {
                let mut up = alpha.clone();
                up[i] += h;
                let mut dn = alpha.clone();
                dn[i] -= h;
                let (eu, ed) = (model(&shape, &up).evaluate().unwrap(), model(&shape, &dn).evaluate().unwrap());
                assert!(((eu.value - ed.value) / (2.0 * h) - base.grad[i]).abs() < 1e-6);
                for j in 0..3 {
                    let fd = (eu.grad[j] - ed.grad[j]) / (2.0 * h);
                    assert!((fd - base.hessian[(i, j)]).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn convex_along_segments() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let shape = [(1, 0), (0, 2)];
        for _ in 0..10 {
            let a: Vec<f64> = (0..2).map(|_| rng.random_range(-6.0..6.0)).collect();
            let b: Vec<f64> = (0..2).map(|_| rng.random_range(-6.0..6.0)).collect();
            let lam: f64 = rng.random();
            let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| lam * x + (1.0 - lam) * y).collect();
            let f = |v: &[f64]| free_energy(&model(&shape, v)).unwrap();
            assert!(f(&mid) <= lam * f(&a) + (1.0 - lam) * f(&b) + 1e-9);
        }
    }

    #[test]
    fn finite_n_generating_function() {
        // (1/n) log(Σ_i C_i e^{α i/n} / n!) -> F(α) for the single term (1, 0)
        let alpha = -3.0;
        let n = 400;
        let logs = mahonian_log_gf(n).unwrap();
        let terms: Vec<f64> = logs.iter().enumerate().map(|(i, l)| l + alpha * i as f64 / n as f64).collect();
        let peak = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let log_z = peak + terms.iter().map(|t| (t - peak).exp()).sum::<f64>().ln();
        let log_nfact: f64 = (2..=n).map(|k| (k as f64).ln()).sum();
        let finite = (log_z - log_nfact) / n as f64;
        let f = free_energy(&model(&[(1, 0)], &[alpha])).unwrap();
        assert!((finite - f).abs() < 0.02, "{finite} vs {f}");
    }

    #[test]
    fn newton_recovers_closed_form() {
        let sol = solve_star(&[(1, 0)], &[0.3]).unwrap();
        let r = star12_r_from_rho(0.3).unwrap();
        assert!((sol.alpha[0] + r).abs() < 1e-8);
        assert!((sol.entropy - star12_entropy(r)).abs() < 1e-9);
        let sol = solve_star(&[(1, 0), (2, 0)], &[0.5, 1.0 / 3.0]).unwrap();
        assert_eq!(sol.newton_iterations, 0);
        assert!(sol.alpha.iter().all(|a| a.abs() < 1e-8) && sol.entropy.abs() < 1e-8);
    }

    #[test]
    fn newton_round_trip() {
        for targets in [[0.5, 0.21], [0.5, 0.53], [0.6, 0.4]] {
            let sol = solve_star(&[(1, 0), (2, 0)], &targets).unwrap();
            let back = model(&[(1, 0), (2, 0)], &sol.alpha).densities().unwrap();
            for (b, t) in back.iter().zip(&targets) {
                assert!((b - t).abs() < 1e-8);
            }
            assert!(sol.entropy < 0.0);
        }
        // outside the feasible region
        assert!(solve_star(&[(1, 0), (2, 0)], &[0.1, 0.9]).is_err());
        // just below the lower boundary: at rho_*2 = 1/2 the minimum of rho_**3 is
        // 3t^2 - 2t^3 with t = 1 - sqrt(1/2), about 0.2071
        assert!(matches!(solve_star(&[(1, 0), (2, 0)], &[0.5, 0.2]), Err(Error::Infeasible(_))));
        let (lo, hi) = star23_bounds(0.5);
        assert!((lo - 0.207_106_781_186_547_5).abs() < 1e-12 && (hi - 0.646_446_609_406_726_2).abs() < 1e-12);
        // the same shape without the region shortcut diverges in Newton
        let general = solve_star(&[(1, 0), (2, 0), (0, 2)], &[0.5, 0.05, 0.3]);
        assert!(general.is_err());
        assert!(solve_star(&[(1, 0)], &[1.2]).is_err());
    }
}

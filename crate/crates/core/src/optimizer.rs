//! Maximum-entropy step permutons under pattern-density constraints, and
//! Euler-Lagrange residual checks.
//!
//! The outer loop is an augmented Lagrangian on the constraints
//! `c_l(w) = ρ_l(w) - target_l`:
//!
//! ```text
//! Φ(w) = H(w) - Σ λ_l c_l(w) - (μ/2) Σ c_l(w)²,
//! ```
//!
//! maximized over the uniform-marginal polytope by entropic mirror ascent:
//! `w ← KL-projection(w ⊙ exp(η ∇Φ))`, where the KL projection is Sinkhorn
//! scaling. Multiplicative updates keep every cell positive, so the entropy
//! stays finite. Stationarity means `∇Φ_ij = a_i + b_j`; the distance from that
//! form (weighted by `w`) is the projected-gradient norm.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::entropy::entropy_grid;
use crate::error::{Error, Result};
use crate::measure::{derive_seed, rect_distance, sinkhorn, GridPermuton};
use crate::patterns::{density_gradient, PatternSpec};

/// Pattern-density equality constraints.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintSet {
    items: Vec<(PatternSpec, f64)>,
}

impl ConstraintSet {
    pub fn new(items: Vec<(PatternSpec, f64)>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::invalid("at least one constraint is required"));
        }
        for (i, (spec, target)) in items.iter().enumerate() {
            if !(2..=3).contains(&spec.len()) {
                return Err(Error::invalid(format!("constraint {spec}: pattern length must be 2 or 3")));
            }
            if !(*target > 0.0 && *target < 1.0) {
                return Err(Error::invalid(format!("constraint {spec}: target {target} not in (0, 1)")));
            }
            if items[..i].iter().any(|(s, _)| s == spec) {
                return Err(Error::invalid(format!("constraint {spec} given twice")));
            }
        }
        Ok(ConstraintSet { items })
    }

    pub fn single(spec: &str, target: f64) -> Result<Self> {
        Self::new(vec![(spec.parse()?, target)])
    }

    pub fn items(&self) -> &[(PatternSpec, f64)] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

impl FromStr for ConstraintSet {
    type Err = Error;

    /// `"12=0.4,123=0.25"`.
    fn from_str(s: &str) -> Result<Self> {
        let items = s
            .split(',')
            .filter(|p| !p.trim().is_empty())
            .map(|part| {
                let (spec, target) =
                    part.split_once('=').ok_or_else(|| Error::Parse(format!("expected pattern=target, got {part:?}")))?;
                let target: f64 =
                    target.trim().parse().map_err(|_| Error::Parse(format!("bad target in {part:?}")))?;
                Ok((spec.trim().parse()?, target))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(items)
    }
}

impl fmt::Display for ConstraintSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.items.iter().map(|(s, t)| format!("{s}={t}")).collect();
        write!(f, "{}", parts.join(","))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerOptions {
    pub constraint_tol: f64,
    pub gradient_tol: f64,
    pub max_inner: usize,
    pub max_outer: usize,
    /// Extra runs from seeded perturbations of the uniform start.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions { constraint_tol: 1e-6, gradient_tol: 1e-6, max_inner: 10_000, max_outer: 50, restarts: 0, seed: 0 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OptimizerResult {
    #[serde(skip)]
    pub grid: Option<GridPermuton>,
    pub m: usize,
    pub entropy: f64,
    pub achieved: Vec<f64>,
    pub residuals: Vec<f64>,
    pub multipliers: Vec<f64>,
    pub projected_gradient: f64,
    /// Total inner (mirror-ascent) iterations.
    pub iterations: usize,
    pub outer_iterations: usize,
    pub converged: bool,
    /// Largest rect distance between restart solutions and the reported one.
    pub restart_spread: Option<f64>,
    /// Augmented-Lagrangian objective at each accepted inner step of the last
    /// outer iteration (nondecreasing).
    #[serde(skip)]
    pub objective_trace: Vec<f64>,
}

impl OptimizerResult {
    pub fn grid(&self) -> &GridPermuton {
        self.grid.as_ref().expect("optimizer result carries its grid")
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |a, r| a.max(r.abs()))
    }
}

pub fn maximize_entropy(cons: &ConstraintSet, m: usize, opts: &OptimizerOptions) -> Result<OptimizerResult> {
    if m < 8 {
        return Err(Error::invalid("grid resolution must be at least 8"));
    }
    let mut best = run(cons, m, GridPermuton::uniform(m).into_masses(), opts)?;
    if opts.restarts > 0 {
        let mut spread: f64 = 0.0;
        for k in 0..opts.restarts {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(opts.seed, k as u64));
            let start: Vec<f64> = (0..m * m).map(|_| 1.0 + 0.5 * rng.random::<f64>()).collect();
            let start = GridPermuton::rebalance(m, start)?.grid.into_masses();
            let other = run(cons, m, start, opts)?;
            spread = spread.max(rect_distance(best.grid(), other.grid())?);
            if better(&other, &best) {
                best = other;
            }
        }
        best.restart_spread = Some(spread);
    }
    Ok(best)
}

fn better(a: &OptimizerResult, b: &OptimizerResult) -> bool {
    match (a.converged, b.converged) {
        (true, false) => true,
        (false, true) => false,
        _ => a.entropy > b.entropy,
    }
}

struct Eval {
    phi: f64,
    grad: Vec<f64>,
    /// `∇ρ_l` per constraint.
    cgrad: Vec<Vec<f64>>,
    values: Vec<f64>,
}

/// `Φ` and `∇Φ` at `w`.
fn evaluate(cons: &ConstraintSet, m: usize, w: &[f64], lambda: &[f64], mu: f64) -> Result<Eval> {
    let m2 = (m * m) as f64;
    let mut phi = 0.0;
    let mut grad = vec![0.0; m * m];
    for (g, &v) in grad.iter_mut().zip(w) {
        let l = (m2 * v).ln();
        phi -= v * l;
        *g = -(l + 1.0);
    }
    let mut values = Vec::with_capacity(cons.len());
    let mut cgrad = Vec::with_capacity(cons.len());
    for (l, (spec, target)) in cons.items().iter().enumerate() {
        let (value, dv) = density_gradient(m, w, spec)?;
        let c = value - target;
        phi -= lambda[l] * c + 0.5 * mu * c * c;
        let coef = lambda[l] + mu * c;
        for (g, d) in grad.iter_mut().zip(&dv) {
            *g -= coef * d;
        }
        values.push(value);
        cgrad.push(dv);
    }
    Ok(Eval { phi, grad, cgrad, values })
}

/// `g` minus its `w`-weighted least-squares fit by `a_i + b_j`. Directions of
/// that separable form only rescale rows and columns, which Sinkhorn undoes.
fn separable_residual(m: usize, w: &[f64], g: &[f64]) -> Vec<f64> {
    let mut a = vec![0.0; m];
    let mut b = vec![0.0; m];
    // alternating weighted least squares; row and column weights are all 1/m
    for _ in 0..200 {
        let mut change: f64 = 0.0;
        for i in 0..m {
            let s: f64 = (0..m).map(|j| w[i * m + j] * (g[i * m + j] - b[j])).sum();
            let new = s * m as f64;
            change = change.max((new - a[i]).abs());
            a[i] = new;
        }
        for j in 0..m {
            let s: f64 = (0..m).map(|i| w[i * m + j] * (g[i * m + j] - a[i])).sum();
            let new = s * m as f64;
            change = change.max((new - b[j]).abs());
            b[j] = new;
        }
        if change < 1e-15 {
            break;
        }
    }
    (0..m * m).map(|c| g[c] - a[c / m] - b[c % m]).collect()
}

fn weighted_dot(w: &[f64], x: &[f64], y: &[f64]) -> f64 {
    w.iter().zip(x).zip(y).map(|((w, x), y)| w * x * y).sum()
}

/// `w`-weighted RMS distance of `g` from the separable form `a_i + b_j`.
pub(crate) fn projected_gradient_norm(m: usize, w: &[f64], g: &[f64]) -> f64 {
    let r = separable_residual(m, w, g);
    weighted_dot(w, &r, &r).sqrt()
}

/// Ascent direction in log-mass coordinates: the projected gradient
/// preconditioned by `I + μ Σ_l ∇c_l ∇c_lᵀ` (in the `w` metric), which absorbs
/// the stiff penalty curvature exactly via a `k × k` Woodbury solve.
fn preconditioned_direction(m: usize, w: &[f64], eval: &Eval, mu: f64) -> Vec<f64> {
    let g = separable_residual(m, w, &eval.grad);
    let cs: Vec<Vec<f64>> = eval.cgrad.iter().map(|c| separable_residual(m, w, c)).collect();
    let k = cs.len();
    let gram = DMatrix::from_fn(k, k, |l, q| weighted_dot(w, &cs[l], &cs[q]) + if l == q { 1.0 / mu } else { 0.0 });
    let rhs = DVector::from_fn(k, |l, _| weighted_dot(w, &cs[l], &g));
    let beta = match gram.cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => return g,
    };
    let mut d = g;
    for (l, c) in cs.iter().enumerate() {
        for (d, c) in d.iter_mut().zip(c) {
            *d -= beta[l] * c;
        }
    }
    d
}

const MU_MAX: f64 = 1e6;
const STALL_WINDOW: usize = 100;
const STALL_ROUNDS: usize = 5;
/// Inner steps per outer round; the multiplier update tolerates inexact solves.
const INNER_BUDGET: usize = 200;

fn run(cons: &ConstraintSet, m: usize, mut w: Vec<f64>, opts: &OptimizerOptions) -> Result<OptimizerResult> {
    let k = cons.len();
    let mut lambda = vec![0.0; k];
    let mut mu = 10.0;
    let mut iterations = 0;
    let mut outer = 0;
    let mut trace = Vec::new();
    let mut last_violation = f64::INFINITY;
    let mut best_violation = f64::INFINITY;
    let mut stalled = 0;
    let mut converged = false;
    let mut pg = f64::INFINITY;
    let mut eval = evaluate(cons, m, &w, &lambda, mu)?;
    while outer < opts.max_outer {
        outer += 1;
        trace.clear();
        trace.push(eval.phi);
        // inner mirror ascent on Φ at fixed (λ, μ)
        let mut inner = 0;
        let mut eta = 1.0;
        loop {
            pg = projected_gradient_norm(m, &w, &eval.grad);
            if pg <= opts.gradient_tol {
                break;
            }
            if iterations == opts.max_inner || inner == INNER_BUDGET {
                break;
            }
            let dir = preconditioned_direction(m, &w, &eval, mu);
            let shift = dir.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            let mut accepted = false;
            for _ in 0..40 {
                let mut trial: Vec<f64> =
                    w.iter().zip(&dir).map(|(v, d)| v * (eta * (d - shift)).exp()).collect();
                if sinkhorn(m, &mut trial, 1e-15, 2_000).is_err() || trial.iter().any(|v| !(*v > 0.0)) {
                    eta *= 0.5;
                    continue;
                }
                let next = evaluate(cons, m, &trial, &lambda, mu)?;
                if next.phi >= eval.phi {
                    w = trial;
                    eval = next;
                    accepted = true;
                    break;
                }
                eta *= 0.5;
            }
            inner += 1;
            iterations += 1;
            if !accepted {
                // no ascent at any step: Φ is stationary to rounding
                break;
            }
            trace.push(eval.phi);
            eta = (eta * 2.0).min(1.0);
            if trace.len() > STALL_WINDOW
                && eval.phi - trace[trace.len() - 1 - STALL_WINDOW] <= 1e-12 * (1.0 + eval.phi.abs())
            {
                break;
            }
        }
        let violation: f64 =
            eval.values.iter().zip(cons.items()).map(|(v, (_, t))| (v - t).abs()).fold(0.0, f64::max);
        if violation <= opts.constraint_tol && pg <= opts.gradient_tol {
            converged = true;
            break;
        }
        for (l, (_, t)) in cons.items().iter().enumerate() {
            lambda[l] += mu * (eval.values[l] - t);
        }
        if violation >= 0.9 * best_violation {
            // the violation has stopped shrinking: boundary or infeasible target
            stalled += 1;
            if stalled == STALL_ROUNDS {
                break;
            }
        } else {
            stalled = 0;
        }
        best_violation = best_violation.min(violation);
        if violation > 0.25 * last_violation {
            mu = (mu * 10.0).min(MU_MAX);
        }
        last_violation = violation;
        if iterations == opts.max_inner {
            break;
        }
        eval = evaluate(cons, m, &w, &lambda, mu)?;
    }
    let grid = GridPermuton::from_masses(m, w.clone()).or_else(|_| GridPermuton::rebalance(m, w).map(|r| r.grid))?;
    let residuals: Vec<f64> = eval.values.iter().zip(cons.items()).map(|(v, (_, t))| v - t).collect();
    // multipliers of the equality-constrained problem
    let multipliers: Vec<f64> = lambda.iter().zip(&residuals).map(|(l, r)| l + mu * r).collect();
    Ok(OptimizerResult {
        entropy: entropy_grid(&grid),
        m,
        grid: Some(grid),
        achieved: eval.values,
        residuals,
        multipliers,
        projected_gradient: pg,
        iterations,
        outer_iterations: outer,
        converged,
        restart_spread: None,
        objective_trace: trace,
    })
}

/// Least-squares fit of `α` and the RMS residual of an Euler-Lagrange equation
/// `D + α E = 0` over interior nodes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PdeFit {
    pub alpha: f64,
    pub rms_residual: f64,
}

fn fit(d: &[f64], e: &[f64]) -> PdeFit {
    let ee: f64 = e.iter().map(|v| v * v).sum();
    let de: f64 = d.iter().zip(e).map(|(a, b)| a * b).sum();
    let alpha = if ee > 0.0 { -de / ee } else { 0.0 };
    let ss: f64 = d.iter().zip(e).map(|(a, b)| (a + alpha * b).powi(2)).sum();
    PdeFit { alpha, rms_residual: (ss / d.len().max(1) as f64).sqrt() }
}

const MARGIN: usize = 2;


fn interior(m: usize) -> Result<impl Iterator<Item = (usize, usize)>> {
    if m < 2 * MARGIN + 1 {
        return Err(Error::invalid(format!("grid too small for the residual stencil (m = {m})")));
    }
    Ok((MARGIN..m - MARGIN).flat_map(move |i| (MARGIN..m - MARGIN).map(move |j| (i, j))))
}

fn positive_density(g: &GridPermuton) -> Result<Vec<f64>> {
    let m = g.m();
    for i in 1..m - 1 {
        for j in 1..m - 1 {
            if g.mass(i, j) <= 0.0 {
                return Err(Error::invalid(format!("zero cell ({}, {}) in the interior", i + 1, j + 1)));
            }
        }
    }
    Ok((0..m * m).map(|c| g.density(c / m, c % m)).collect())
}

/// Mixed central difference `u_xy` at cell `(i, j)` with spacing `h`.
fn mixed(u: &[f64], m: usize, i: usize, j: usize, h: f64) -> f64 {
    let at = |a: usize, b: usize| u[a * m + b];
    (at(i + 1, j + 1) - at(i + 1, j - 1) - at(i - 1, j + 1) + at(i - 1, j - 1)) / (4.0 * h * h)
}

/// Residual of `(log g)_xy + 2α g = 0`, the equation of the 1 2 model.
///
/// The closed-form 1 2 density satisfies it with `α = r`, i.e. with the
/// opposite sign to the star-model coefficient.
pub fn pde_residual_12(g: &GridPermuton) -> Result<PdeFit> {
    let m = g.m();
    let h = 1.0 / m as f64;
    let dens = positive_density(g)?;
    let logs: Vec<f64> = dens.iter().map(|v| v.ln()).collect();
    let (mut d, mut e) = (Vec::new(), Vec::new());
    for (i, j) in interior(m)? {
        d.push(mixed(&logs, m, i, j, h));
        e.push(2.0 * dens[i * m + j]);
    }
    Ok(fit(&d, &e))
}

/// Residual of the 1 2 3 equation in the form
/// `(log K_xy)_xy + 3α (2 K_xy K + K_x K_y - 1) = 0`, with `K = 2G - x - y + 1`,
/// evaluated at cell centres.
pub fn pde_residual_123(g: &GridPermuton) -> Result<PdeFit> {
    let m = g.m();
    let h = 1.0 / m as f64;
    let dens = positive_density(g)?;
    let cdf = g.cdf();
    let logk: Vec<f64> = dens.iter().map(|v| (2.0 * v).ln()).collect();
    let (mut d, mut e) = (Vec::new(), Vec::new());
    for (i, j) in interior(m)? {
        let (x, y) = ((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
        let gc = cdf.eval(x, y);
        // G_x, G_y at the centre: averages of the corner differences
        let gx = 0.5 * ((cdf.at(i + 1, j) - cdf.at(i, j)) + (cdf.at(i + 1, j + 1) - cdf.at(i, j + 1))) / h;
        let gy = 0.5 * ((cdf.at(i, j + 1) - cdf.at(i, j)) + (cdf.at(i + 1, j + 1) - cdf.at(i + 1, j))) / h;
        let k = 2.0 * gc - x - y + 1.0;
        let (kx, ky, kxy) = (2.0 * gx - 1.0, 2.0 * gy - 1.0, 2.0 * dens[i * m + j]);
        d.push(mixed(&logk, m, i, j, h));
        e.push(3.0 * (2.0 * kxy * k + kx * ky - 1.0));
    }
    Ok(fit(&d, &e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patterns::{densities_of_masses, GridDensities};
    use crate::starmodel::{star12_entropy_of_rho, star12_grid};

    #[test]
    fn parse_constraints() {
        let c: ConstraintSet = "12=0.4, 123=0.25".parse().unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.to_string(), "12=0.4,123=0.25");
        assert!("12=1.2".parse::<ConstraintSet>().is_err());
        assert!("12=0.3,12=0.4".parse::<ConstraintSet>().is_err());
        assert!("1234=0.1".parse::<ConstraintSet>().is_err());
        assert!("12".parse::<ConstraintSet>().is_err());
        assert!("".parse::<ConstraintSet>().is_err());
    }

    #[test]
    fn uniform_targets_stay_uniform() {
        for cons in ["12=0.5", "12=0.5,123=0.16666666666666666"] {
            let res = maximize_entropy(&cons.parse().unwrap(), 12, &OptimizerOptions::default()).unwrap();
            assert!(res.converged, "{cons}");
            assert!(res.entropy.abs() < 1e-10);
            assert!(rect_distance(res.grid(), &GridPermuton::uniform(12)).unwrap() < 1e-8);
        }
    }

    #[test]
    fn single_12_constraint_matches_closed_form() {
        let res = maximize_entropy(&ConstraintSet::single("12", 0.3).unwrap(), 16, &OptimizerOptions::default()).unwrap();
        assert!(res.converged);
        assert!(res.max_residual() <= 1e-6);
        assert!(res.grid().marginal_error() < 1e-10);
        let h = star12_entropy_of_rho(0.3).unwrap();
        assert!((res.entropy - h).abs() < 2e-2, "{} vs {h}", res.entropy);
        assert!(res.objective_trace.windows(2).all(|w| w[1] >= w[0]));
        // ρ12 < 1/2 means r > 0, and the fitted PDE coefficient is r
        let fit = pde_residual_12(res.grid()).unwrap();
        assert!(fit.alpha > 0.0);
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        let g = star12_grid(-1.5, 8).unwrap();
        let w = g.masses().to_vec();
        let cons: ConstraintSet = "12=0.4,123=0.2".parse().unwrap();
        let lambda = [0.3, -0.7];
        let e = evaluate(&cons, 8, &w, &lambda, 5.0).unwrap();
        for c in [0, 9, 27, 63] {
            let h = 1e-7;
            let mut up = w.clone();
            up[c] += h;
            let mut dn = w.clone();
            dn[c] -= h;
            let fd = (evaluate(&cons, 8, &up, &lambda, 5.0).unwrap().phi - evaluate(&cons, 8, &dn, &lambda, 5.0).unwrap().phi)
                / (2.0 * h);
            assert!((fd - e.grad[c]).abs() < 1e-6, "cell {c}: {fd} vs {}", e.grad[c]);
        }
        let d: GridDensities = densities_of_masses(8, &w);
        assert!((e.values[0] - d.p12).abs() < 1e-15);
    }

    #[test]
    fn projected_gradient_vanishes_on_separable_fields() {
        let m = 6;
        let w = GridPermuton::uniform(m).into_masses();
        let g: Vec<f64> = (0..m * m).map(|c| (c / m) as f64 * 0.3 - (c % m) as f64).collect();
        assert!(projected_gradient_norm(m, &w, &g) < 1e-12);
        let mut h = g.clone();
        h[7] += 1.0;
        assert!(projected_gradient_norm(m, &w, &h) > 0.1);
    }

    #[test]
    fn pde_checks() {
        let u = GridPermuton::uniform(32);
        for f in [pde_residual_12(&u).unwrap(), pde_residual_123(&u).unwrap()] {
            assert!(f.alpha.abs() < 1e-12 && f.rms_residual < 1e-12);
        }
        // (log g)_xy = -2 r g for the 1 2 model, so the fitted α is r itself
        let s = star12_grid(-2.0, 256).unwrap();
        let f12 = pde_residual_12(&s).unwrap();
        assert!(f12.rms_residual < 1e-3, "{f12:?}");
        assert!((f12.alpha + 2.0).abs() < 1e-3, "{f12:?}");
        // negative control: the 1 2 model does not solve the 1 2 3 equation
        let f123 = pde_residual_123(&s).unwrap();
        assert!(f123.rms_residual > 10.0 * f12.rms_residual, "{f123:?}");
        assert!(pde_residual_12(&GridPermuton::identity(16)).is_err());
        assert!(pde_residual_12(&GridPermuton::uniform(4)).is_err());
    }
}

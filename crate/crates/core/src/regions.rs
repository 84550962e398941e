//! Feasible-region boundaries.
//!
//! In `(ρ_123, ρ_321)` coordinates the region is bounded below by the axes and
//! the segment `C: x + y = 1/4`, and above by the curves
//! `F1 = (t³, (1-t)³ + 3t(1-t)²)` and its mirror `F2`, which cross at a concave
//! dimple `(r, r)`. The 1 2 / 1 2 3 region is represented by densities of the
//! two-parameter segment family `γ_{a,b}`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{derive_seed, gamma_ab, Permutation, Sampleable};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

/// A labelled parametric curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionCurve {
    pub label: String,
    pub points: Vec<CurvePoint>,
}

impl RegionCurve {
    /// `samples` equally spaced parameters in `[0, 1]` (at least the two endpoints).
    pub fn sample(label: &str, samples: usize, f: impl Fn(f64) -> (f64, f64)) -> Self {
        let n = samples.max(2);
        let points = (0..n)
            .map(|i| {
                // exact endpoints
                let t = if i == n - 1 { 1.0 } else { i as f64 / (n - 1) as f64 };
                let (x, y) = f(t);
                CurvePoint { t, x, y }
            })
            .collect();
        RegionCurve { label: label.to_string(), points }
    }

    pub fn first(&self) -> (f64, f64) {
        let p = self.points[0];
        (p.x, p.y)
    }

    pub fn last(&self) -> (f64, f64) {
        let p = self.points[self.points.len() - 1];
        (p.x, p.y)
    }
}

/// `(1-t)³ + 3t(1-t)² = 1 - 3t² + 2t³`.
fn upper_arm(t: f64) -> f64 {
    (1.0 - t) * (1.0 - t) * (1.0 + 2.0 * t)
}

/// Boundary curves of the 1 2 3 / 3 2 1 region.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region123Curves {
    pub f1: RegionCurve,
    pub f2: RegionCurve,
    pub c: RegionCurve,
    pub d: RegionCurve,
    pub e: RegionCurve,
}

impl Region123Curves {
    pub fn all(&self) -> [&RegionCurve; 5] {
        [&self.f1, &self.f2, &self.c, &self.d, &self.e]
    }
}

pub fn region_123_321(t_samples: usize) -> Region123Curves {
    Region123Curves {
        f1: RegionCurve::sample("F1", t_samples, |t| (t * t * t, upper_arm(t))),
        f2: RegionCurve::sample("F2", t_samples, |t| (upper_arm(t), t * t * t)),
        c: RegionCurve::sample("C", t_samples, |t| (0.25 * t, 0.25 * (1.0 - t))),
        d: RegionCurve::sample("D", t_samples, |t| (0.25 + 0.75 * t, 0.0)),
        e: RegionCurve::sample("E", t_samples, |t| (0.0, 0.25 + 0.75 * t)),
    }
}

/// The dimple: `s ∈ (0, 1)` with `s³ = (1-s)³ + 3s(1-s)²`, and `r = s³`.
pub fn dimple() -> (f64, f64) {
    let f = |s: f64| s * s * s - upper_arm(s);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > 1e-15 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = 0.5 * (lo + hi);
    (s, s * s * s)
}

/// The upper boundary as a function: `y` on `F1` above `x = t³`.
fn f1_height(x: f64) -> f64 {
    upper_arm(x.clamp(0.0, 1.0).cbrt())
}

/// Whether `(ρ_123, ρ_321)` lies in the region, allowing a box of half-widths
/// `(dx, dy)` (e.g. 3σ Monte-Carlo noise).
///
/// The upper constraint is tested at the lower-left box corner and the lower
/// constraints at the upper-right corner.
pub fn inside_123_321(x: f64, y: f64, dx: f64, dy: f64) -> bool {
    let (xl, yl) = ((x - dx).max(0.0), (y - dy).max(0.0));
    let (xu, yu) = (x + dx, y + dy);
    let below_upper = yl <= f1_height(xl) + 1e-12 || xl <= f1_height(yl) + 1e-12;
    let above_lower = xu + yu >= 0.25 - 1e-12 && xu >= 0.0 && yu >= 0.0;
    below_upper && above_lower && xl <= 1.0 && yl <= 1.0
}

/// Monte-Carlo densities of one `γ_{a,b}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub a: f64,
    pub b: f64,
    pub rho12: f64,
    pub rho12_stderr: f64,
    pub rho123: f64,
    pub rho123_stderr: f64,
    pub rho321: f64,
    pub rho321_stderr: f64,
    pub trials: u64,
}

/// The `(a, b)` grid: `a_i = i/(na-1)`, `b_j = (a_i/2) j/(nb-1)`.
pub fn sweep_parameters(a_samples: usize, b_samples: usize) -> Vec<(f64, f64)> {
    let frac = |i: usize, n: usize| if n <= 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
    (0..a_samples)
        .flat_map(|i| {
            let a = frac(i, a_samples);
            (0..b_samples).map(move |j| (a, 0.5 * a * frac(j, b_samples)))
        })
        .collect()
}

/// Densities of `ρ_12`, `ρ_123`, `ρ_321` across the `γ_{a,b}` family.
///
/// Each trial draws three points; `ρ_12` is estimated from its three pairs.
/// Every parameter point gets its own derived seed.
pub fn gamma_ab_sweep(a_samples: usize, b_samples: usize, mc_trials: u64, seed: u64) -> Result<Vec<SweepPoint>> {
    if a_samples == 0 || b_samples == 0 || mc_trials == 0 {
        return Err(Error::invalid("sweep needs at least one sample and one trial"));
    }
    sweep_parameters(a_samples, b_samples)
        .into_par_iter()
        .enumerate()
        .map(|(idx, (a, b))| sweep_point(a, b, mc_trials, derive_seed(seed, idx as u64)))
        .collect()
}

pub fn sweep_point(a: f64, b: f64, trials: u64, seed: u64) -> Result<SweepPoint> {
    let sampler = gamma_ab(a, b)?.sampler();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = Vec::with_capacity(3);
    let (mut n123, mut n321) = (0u64, 0u64);
    let (mut s12, mut s12sq) = (0.0, 0.0);
    for _ in 0..trials {
        sampler.draw_distinct(&mut rng, 3, &mut pts);
        let p = Permutation::from_points(&pts);
        let v = p.as_slice();
        let asc = (v[0] < v[1]) as u32 + (v[0] < v[2]) as u32 + (v[1] < v[2]) as u32;
        match asc {
            3 => n123 += 1,
            0 => n321 += 1,
            _ => {}
        }
        let f = asc as f64 / 3.0;
        s12 += f;
        s12sq += f * f;
    }
    let n = trials as f64;
    let binom = |k: u64| {
        let p = k as f64 / n;
        (p, (p * (1.0 - p) / n).sqrt())
    };
    let mean12 = s12 / n;
    let var12 = (s12sq / n - mean12 * mean12).max(0.0);
    let (rho123, rho123_stderr) = binom(n123);
    let (rho321, rho321_stderr) = binom(n321);
    Ok(SweepPoint {
        a,
        b,
        rho12: mean12,
        rho12_stderr: (var12 / n).sqrt(),
        rho123,
        rho123_stderr,
        rho321,
        rho321_stderr,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_endpoints() {
        let r = region_123_321(101);
        assert_eq!(r.f1.first(), (0.0, 1.0));
        assert_eq!(r.f1.last(), (1.0, 0.0));
        assert_eq!(r.c.first(), (0.0, 0.25));
        assert_eq!(r.c.last(), (0.25, 0.0));
        for (p, q) in r.f1.points.iter().zip(&r.f2.points) {
            assert_eq!((p.x, p.y), (q.y, q.x));
        }
        let s = r.f1.points.iter().find(|p| (p.t - 0.65).abs() < 1e-9).unwrap();
        assert!((s.x - 0.274_625).abs() < 1e-12);
    }

    #[test]
    fn dimple_values() {
        let (s, r) = dimple();
        assert!((s - 0.653).abs() < 1e-3);
        assert!((r - 0.278).abs() < 1e-3);
        assert!((s.powi(3) - ((1.0 - s).powi(3) + 3.0 * s * (1.0 - s).powi(2))).abs() < 1e-12);
        // F1 passes through the dimple at t = s, F2 at t = s as well
        assert!((f1_height(r) - r).abs() < 1e-12);
    }

    #[test]
    fn inside_test() {
        assert!(inside_123_321(1.0 / 6.0, 1.0 / 6.0, 0.0, 0.0));
        assert!(inside_123_321(1.0, 0.0, 0.0, 0.0));
        assert!(inside_123_321(0.0, 0.25, 0.0, 0.0));
        assert!(!inside_123_321(0.1, 0.1, 0.0, 0.0)); // below C
        assert!(!inside_123_321(0.3, 0.3, 0.0, 0.0)); // above the dimple
        assert!(inside_123_321(0.28, 0.28, 0.01, 0.01));
    }

    #[test]
    fn parameter_grid() {
        let p = sweep_parameters(3, 3);
        assert_eq!(p.len(), 9);
        assert_eq!(p[0], (0.0, 0.0));
        assert_eq!(p[8], (1.0, 0.5));
        assert_eq!(p[7], (1.0, 0.25));
    }

    #[test]
    fn sweep_corner_cases() {
        let p = sweep_point(0.0, 0.0, 2000, 1).unwrap();
        assert_eq!((p.rho12, p.rho123, p.rho321), (0.0, 0.0, 1.0));
        let p = sweep_point(1.0, 0.0, 2000, 1).unwrap();
        assert_eq!((p.rho12, p.rho123, p.rho321), (1.0, 1.0, 0.0));
    }

    #[test]
    fn three_blocks_match_clique_counts() {
        // γ_{1,1/3}: three descending blocks; pairs ascend iff in different blocks
        let p = sweep_point(1.0, 1.0 / 3.0, 400_000, 7).unwrap();
        assert!((p.rho12 - 2.0 / 3.0).abs() < 4.0 * p.rho12_stderr);
        assert!((p.rho123 - 2.0 / 9.0).abs() < 4.0 * p.rho123_stderr);
        assert!((p.rho321 - 1.0 / 9.0).abs() < 4.0 * p.rho321_stderr);
    }

    #[test]
    fn sweep_is_deterministic_and_feasible() {
        let a = gamma_ab_sweep(4, 3, 20_000, 11).unwrap();
        let b = gamma_ab_sweep(4, 3, 20_000, 11).unwrap();
        assert_eq!(a, b);
        for p in &a {
            assert!(inside_123_321(p.rho123, p.rho321, 3.0 * p.rho123_stderr, 3.0 * p.rho321_stderr), "{p:?}");
        }
    }
}

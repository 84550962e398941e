//! The closed-form 1 2 model.
//!
//! For rate `r` the insertion densities are truncated exponentials
//! `f(x, y) = r e^{-ry} / (1 - e^{-rx})` on `[0, x]`, which integrate to
//!
//! ```text
//! G(x, y) = (1/r) log(1 + (e^{rx} - 1)(e^{ry} - 1) / (e^r - 1)),
//! g(x, y) = r (e^r - 1) e^{r(x+y)} / ((e^r - 1) + (e^{rx} - 1)(e^{ry} - 1))^2.
//! ```
//!
//! Negative `r` favors 1 2 patterns: `rho(r)` decreases from 1 to 0 as `r`
//! runs over the real line. Positive `r` is obtained from `-r` by reflecting
//! `x`, which keeps every exponential bounded.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::dilog::li2;
use crate::error::{Error, Result};
use crate::measure::GridPermuton;

/// Rate parameter and the 1 2 density it induces.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Star12Params {
    pub r: f64,
    pub rho: f64,
}

impl Star12Params {
    pub fn from_r(r: f64) -> Self {
        Star12Params { r, rho: star12_rho(r) }
    }

    pub fn from_rho(rho: f64) -> Result<Self> {
        Ok(Star12Params { r: star12_r_from_rho(rho)?, rho })
    }

    pub fn entropy(&self) -> f64 {
        star12_entropy(self.r)
    }
}

/// Below this `|r|` the closed forms for `rho` and `H` lose digits to
/// cancellation and their Taylor series take over.
const SERIES_CUTOFF: f64 = 0.05;

// Taylor coefficients of rho(r) - 1/2 (odd powers) and H(r) (even powers).
const RHO_SERIES: [f64; 7] = [
    -1.0 / 18.0,
    1.0 / 1800.0,
    -9.448_223_733_938_02e-6,
    1.837_154_614_932_392_7e-7,
    -3.795_773_997_794_2e-9,
    8.129_523_290_288_451e-11,
    -1.784_338_204_091_290_4e-12,
];
const H_SERIES: [f64; 7] = [
    -1.0 / 72.0,
    1.0 / 4800.0,
    -3.936_759_889_140_842e-6,
    8.037_551_440_329_218e-8,
    -1.708_098_299_007_39e-9,
    3.726_031_508_048_873_4e-11,
    -8.284_427_376_138_134e-13,
];

/// CDF `G(x, y)` of the 1 2 model; `r = 0` is the uniform permuton.
pub fn star12_cdf(r: f64, x: f64, y: f64) -> f64 {
    if r == 0.0 {
        x * y
    } else if r > 0.0 {
        y - cdf_neg(-r, 1.0 - x, y)
    } else {
        cdf_neg(r, x, y)
    }
}

fn cdf_neg(r: f64, x: f64, y: f64) -> f64 {
    // expm1/ln_1p keep full relative accuracy down to tiny |r|
    let c = r.exp_m1();
    let ratio = (r * x).exp_m1() * (r * y).exp_m1() / c;
    ratio.ln_1p() / r
}

/// Density `g(x, y) = ∂²G/∂x∂y` of the 1 2 model.
pub fn star12_density(r: f64, x: f64, y: f64) -> f64 {
    if r == 0.0 {
        1.0
    } else if r > 0.0 {
        density_neg(-r, 1.0 - x, y)
    } else {
        density_neg(r, x, y)
    }
}

fn density_neg(r: f64, x: f64, y: f64) -> f64 {
    let c = r.exp_m1();
    let den = c + (r * x).exp_m1() * (r * y).exp_m1();
    r * c * (r * (x + y)).exp() / (den * den)
}

fn odd_series(r: f64, c: &[f64]) -> f64 {
    let r2 = r * r;
    c.iter().rev().fold(0.0, |acc, &a| acc * r2 + a) * r
}

fn even_series(r: f64, c: &[f64]) -> f64 {
    odd_series(r, c) * r
}

/// 1 2 density `rho(r)`; `rho(-r) = 1 - rho(r)`, `rho(0) = 1/2`.
pub fn star12_rho(r: f64) -> f64 {
    if r.abs() < SERIES_CUTOFF {
        return 0.5 + odd_series(r, &RHO_SERIES);
    }
    if r > 0.0 {
        return 1.0 - star12_rho(-r);
    }
    // r < 0: e^r < 1, every term real
    let log1m = (-r.exp_m1()).ln(); // log(1 - e^r)
    (r * (r - 2.0 * log1m + 2.0) - 2.0 * li2(r.exp()) + PI * PI / 3.0) / (r * r)
}

/// Entropy `H(r)` of the 1 2 model; even in `r`, `H(0) = 0`.
pub fn star12_entropy(r: f64) -> f64 {
    if r.abs() < SERIES_CUTOFF {
        return even_series(r, &H_SERIES);
    }
    let r = -r.abs();
    let log1m = (-r.exp_m1()).ln();
    -2.0 * li2(r.exp()) / r + PI * PI / (3.0 * r) - log1m - (-r).ln() + 2.0
}

/// Inverse of [`star12_rho`] by bisection.
pub fn star12_r_from_rho(rho: f64) -> Result<f64> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::invalid(format!("1 2 density must lie in (0, 1), got {rho}")));
    }
    if rho == 0.5 {
        return Ok(0.0);
    }
    // rho is decreasing: grow the bracket until it straddles the target
    let mut span = 1.0;
    while (star12_rho(-span) - rho) * (star12_rho(span) - rho) > 0.0 {
        span *= 2.0;
        if span > 1e12 {
            return Err(Error::invalid(format!("1 2 density {rho} too close to 0 or 1")));
        }
    }
    let (mut lo, mut hi) = (-span, span);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if star12_rho(mid) > rho {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi.abs().max(lo.abs()).max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Maximal entropy among permutons with 1 2 density `rho`.
pub fn star12_entropy_of_rho(rho: f64) -> Result<f64> {
    Ok(star12_entropy(star12_r_from_rho(rho)?))
}

/// The 1 2 model discretized exactly onto an `m x m` grid (cell masses from the CDF).
pub fn star12_grid(r: f64, m: usize) -> Result<GridPermuton> {
    if m == 0 {
        return Err(Error::invalid("grid resolution must be positive"));
    }
    GridPermuton::from_cdf_fn(m, |x, y| star12_cdf(r, x, y))
}

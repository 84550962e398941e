//! Pattern counts in permutations and pattern densities of permutons.
//!
//! Exact grid densities (`k <= 3`) are integrals of the step density against
//! the probabilities of the four quadrants around a point,
//!
//! ```text
//! LL = G,  LU = x - G,  UL = y - G,  UU = 1 - x - y + G,
//! ```
//!
//! all bilinear on each cell, so a 2x2 Gauss rule per cell is exact. The
//! x-middle point gives `rho_123 = 6∫ g LL UU` and `rho_321 = 6∫ g LU UL`; the
//! x-first and x-last points give the four "corner" events (e.g. the last
//! point is highest: `3∫ g LL^2`), which fix the remaining four patterns.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measure::{derive_seed, GridPermuton, Permutation, Sampleable};

/// A pattern `tau` or a star class `*...*l` (all patterns of length `k` ending in `l`).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum PatternSpec {
    Explicit(Permutation),
    /// `len` = k, `last` = l (1-based).
    Star { len: usize, last: usize },
}

impl PatternSpec {
    pub fn explicit(s: &str) -> Result<Self> {
        Ok(PatternSpec::Explicit(s.parse()?))
    }

    pub fn star(len: usize, last: usize) -> Result<Self> {
        if len < 1 || last < 1 || last > len {
            return Err(Error::invalid(format!("star class needs 1 <= l <= k, got k={len}, l={last}")));
        }
        Ok(PatternSpec::Star { len, last })
    }

    pub fn len(&self) -> usize {
        match self {
            PatternSpec::Explicit(p) => p.len(),
            PatternSpec::Star { len, .. } => *len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Whether a length-`k` pattern belongs to this spec.
    pub fn matches(&self, pattern: &Permutation) -> bool {
        match self {
            PatternSpec::Explicit(p) => p == pattern,
            PatternSpec::Star { len, last } => {
                pattern.len() == *len && pattern.get(len - 1) + 1 == *last
            }
        }
    }

    /// Explicit patterns covered by this spec.
    pub fn members(&self) -> Vec<Permutation> {
        match self {
            PatternSpec::Explicit(p) => vec![p.clone()],
            PatternSpec::Star { len, .. } => {
                Permutation::all(*len).into_iter().filter(|p| self.matches(p)).collect()
            }
        }
    }
}

impl fmt::Display for PatternSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternSpec::Explicit(p) => write!(f, "{p}"),
            PatternSpec::Star { len, last } => write!(f, "{}{last}", "*".repeat(len - 1)),
        }
    }
}

impl FromStr for PatternSpec {
    type Err = Error;

    /// `"12"`, `"123"`, `"2413"` or `"*2"`, `"**3"`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let stars = s.chars().take_while(|&c| c == '*').count();
        if stars > 0 {
            let last: usize = s[stars..]
                .parse()
                .map_err(|_| Error::Parse(format!("star class {s:?}")))?;
            PatternSpec::star(stars + 1, last)
        } else {
            Ok(PatternSpec::Explicit(s.parse()?))
        }
    }
}

/// Monte-Carlo (or exact, with `stderr = 0`) density value.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DensityEstimate {
    pub value: f64,
    pub stderr: f64,
    pub trials: u64,
}

/// Number of index `k`-subsets of `pi` whose pattern belongs to `tau`.
pub fn pattern_count(pi: &Permutation, tau: &PatternSpec) -> Result<u64> {
    let (n, k) = (pi.len(), tau.len());
    if k == 0 || k > n {
        return Err(Error::invalid(format!("pattern length {k} exceeds permutation length {n}")));
    }
    let mut idx: Vec<usize> = (0..k).collect();
    let mut count = 0;
    loop {
        if tau.matches(&pi.pattern_at(&idx)) {
            count += 1;
        }
        // next k-subset in lexicographic order
        let Some(p) = (0..k).rev().find(|&p| idx[p] < n - k + p) else {
            return Ok(count);
        };
        idx[p] += 1;
        for q in p + 1..k {
            idx[q] = idx[q - 1] + 1;
        }
    }
}

/// All exact densities of patterns of length 2 and 3 for a step permuton.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridDensities {
    /// `rho_12`
    pub p12: f64,
    /// `rho_123, rho_132, rho_213, rho_231, rho_312, rho_321` in lexicographic order.
    pub s3: [f64; 6],
}

impl GridDensities {
    pub fn of(&self, tau: &PatternSpec) -> Result<f64> {
        match tau.len() {
            1 => Ok(1.0),
            2 => Ok(tau.members().iter().map(|p| self.two(p)).sum()),
            3 => Ok(tau.members().iter().map(|p| self.s3[lex_index3(p)]).sum()),
            k => Err(Error::invalid(format!("exact grid densities need k <= 3, got {k}"))),
        }
    }

    fn two(&self, p: &Permutation) -> f64 {
        if p.get(0) == 0 {
            self.p12
        } else {
            1.0 - self.p12
        }
    }
}

fn lex_index3(p: &Permutation) -> usize {
    let v = p.as_slice();
    v[0] * 2 + usize::from(v[1] > v[2])
}

// The seven base functionals, in this order.
const F12: usize = 0;
const F123: usize = 1;
const F321: usize = 2;
const M11: usize = 3;
const M33: usize = 4;
const M13: usize = 5;
const M31: usize = 6;
const NF: usize = 7;

/// Integrands `P(G, x, y)` and `dP/dG` for the base functionals.
#[inline]
fn integrands(gv: f64, x: f64, y: f64) -> ([f64; NF], [f64; NF]) {
    let ll = gv;
    let lu = x - gv;
    let ul = y - gv;
    let uu = 1.0 - x - y + gv;
    (
        [2.0 * ll, 6.0 * ll * uu, 6.0 * lu * ul, 3.0 * uu * uu, 3.0 * ll * ll, 3.0 * ul * ul, 3.0 * lu * lu],
        [2.0, 6.0 * (uu + ll), -6.0 * (ul + lu), 6.0 * uu, 6.0 * ll, -6.0 * ul, -6.0 * lu],
    )
}

const GAUSS2: [f64; 2] = [0.211_324_865_405_187_1, 0.788_675_134_594_812_9];

fn prefix_cdf(m: usize, w: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; (m + 1) * (m + 1)];
    for i in 0..m {
        let mut row = 0.0;
        for j in 0..m {
            row += w[i * m + j];
            g[(i + 1) * (m + 1) + j + 1] = g[i * (m + 1) + j + 1] + row;
        }
    }
    g
}

/// Values of the base functionals, optionally with gradients w.r.t. each cell mass.
///
/// Works on any nonnegative mass vector (the polynomial extension off the
/// permuton set), which is what finite-difference checks perturb.
fn base_functionals(m: usize, w: &[f64], want_grad: bool) -> ([f64; NF], Vec<[f64; NF]>) {
    let mf = m as f64;
    let h = 1.0 / mf;
    let g = prefix_cdf(m, w);
    let at = |a: usize, b: usize| g[a * (m + 1) + b];
    let mut val = [0.0; NF];
    // direct part of the gradient (through g = m^2 w) and adjoints of the corners
    let mut grad = if want_grad { vec![[0.0; NF]; m * m] } else { Vec::new() };
    let mut d_corner = if want_grad { vec![[0.0; NF]; (m + 1) * (m + 1)] } else { Vec::new() };
    for i in 0..m {
        for j in 0..m {
            let (g00, g10, g01, g11) = (at(i, j), at(i + 1, j), at(i, j + 1), at(i + 1, j + 1));
            let dens = mf * mf * w[i * m + j];
            let mut cell = [0.0; NF];
            let mut dg = [[0.0; NF]; 4];
            for &u in &GAUSS2 {
                for &v in &GAUSS2 {
                    let phi = [(1.0 - u) * (1.0 - v), u * (1.0 - v), (1.0 - u) * v, u * v];
                    let gv = phi[0] * g00 + phi[1] * g10 + phi[2] * g01 + phi[3] * g11;
                    let (p, pg) = integrands(gv, (i as f64 + u) * h, (j as f64 + v) * h);
                    // quadrature weight 1/4 times the cell area h^2
                    let qw = 0.25 * h * h;
                    for f in 0..NF {
                        cell[f] += qw * p[f];
                        if want_grad {
                            for c in 0..4 {
                                dg[c][f] += qw * pg[f] * phi[c];
                            }
                        }
                    }
                }
            }
            for f in 0..NF {
                val[f] += dens * cell[f];
            }
            if want_grad {
                for f in 0..NF {
                    grad[i * m + j][f] += mf * mf * cell[f];
                }
                let corners = [(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)];
                for (c, &(a, b)) in corners.iter().enumerate() {
                    for f in 0..NF {
                        d_corner[a * (m + 1) + b][f] += dens * dg[c][f];
                    }
                }
            }
        }
    }
    if want_grad {
        // G[a][b] = sum_{i<a, j<b} w[i][j]  =>  dJ/dw[i][j] += sum_{a>i, b>j} dJ/dG[a][b]
        let mut suffix = vec![[0.0; NF]; (m + 2) * (m + 2)];
        let idx = |a: usize, b: usize| a * (m + 2) + b;
        for a in (1..=m).rev() {
            for b in (1..=m).rev() {
                let mut s = d_corner[a * (m + 1) + b];
                for f in 0..NF {
                    s[f] += suffix[idx(a + 1, b)][f] + suffix[idx(a, b + 1)][f] - suffix[idx(a + 1, b + 1)][f];
                }
                suffix[idx(a, b)] = s;
            }
        }
        for i in 0..m {
            for j in 0..m {
                let s = suffix[idx(i + 1, j + 1)];
                for f in 0..NF {
                    grad[i * m + j][f] += s[f];
                }
            }
        }
    }
    (val, grad)
}

/// Linear combination of base functionals giving each S_3 pattern (lex order).
const S3_COMBOS: [[f64; NF]; 6] = {
    let mut c = [[0.0; NF]; 6];
    c[0][F123] = 1.0; // 123
    c[1][M11] = 1.0; // 132 = (x-first is y-lowest) - 123
    c[1][F123] = -1.0;
    c[2][M33] = 1.0; // 213 = (x-last is y-highest) - 123
    c[2][F123] = -1.0;
    c[3][M31] = 1.0; // 231 = (x-last is y-lowest) - 321
    c[3][F321] = -1.0;
    c[4][M13] = 1.0; // 312 = (x-first is y-highest) - 321
    c[4][F321] = -1.0;
    c[5][F321] = 1.0; // 321
    c
};

fn combine(combo: &[f64; NF], base: &[f64; NF]) -> f64 {
    combo.iter().zip(base).map(|(a, b)| a * b).sum()
}

/// Exact densities of all patterns of length 2 and 3.
pub fn grid_densities(g: &GridPermuton) -> GridDensities {
    densities_of_masses(g.m(), g.masses())
}

pub(crate) fn densities_of_masses(m: usize, w: &[f64]) -> GridDensities {
    let (base, _) = base_functionals(m, w, false);
    let mut s3 = [0.0; 6];
    for (k, combo) in S3_COMBOS.iter().enumerate() {
        s3[k] = combine(combo, &base);
    }
    GridDensities { p12: base[F12], s3 }
}

/// Exact `rho_tau` of the step permuton for `|tau| <= 3`.
pub fn density_grid_exact(g: &GridPermuton, tau: &PatternSpec) -> Result<f64> {
    if tau.len() > 3 {
        return Err(Error::invalid("exact grid densities need k <= 3; use density_mc"));
    }
    grid_densities(g).of(tau)
}

/// Density of `tau` (k <= 3) and its gradient with respect to every cell mass.
pub fn density_gradient(m: usize, w: &[f64], tau: &PatternSpec) -> Result<(f64, Vec<f64>)> {
    let k = tau.len();
    if !(2..=3).contains(&k) {
        return Err(Error::invalid(format!("density gradients need k in 2..=3, got {k}")));
    }
    let (base, grad) = base_functionals(m, w, true);
    let mut combo = [0.0; NF];
    let mut constant = 0.0;
    for p in tau.members() {
        if k == 2 {
            if p.get(0) == 0 {
                combo[F12] += 1.0;
            } else {
                constant += 1.0;
                combo[F12] -= 1.0;
            }
        } else {
            let c = &S3_COMBOS[lex_index3(&p)];
            for f in 0..NF {
                combo[f] += c[f];
            }
        }
    }
    let value = constant + combine(&combo, &base);
    let gradient = grad.iter().map(|gc| combine(&combo, gc)).collect();
    Ok((value, gradient))
}

/// Monte-Carlo density: fraction of trials whose `k` i.i.d. points realize `tau`.
///
/// Trials are split into a fixed number of partitions with derived seeds, so the
/// result does not depend on the thread count.
pub fn density_mc<S: Sampleable + ?Sized>(
    source: &S,
    tau: &PatternSpec,
    trials: u64,
    seed: u64,
) -> Result<DensityEstimate> {
    if trials == 0 {
        return Err(Error::invalid("need at least one trial"));
    }
    let k = tau.len();
    let sampler = source.sampler();
    const PARTS: u64 = 64;
    let parts = PARTS.min(trials);
    let hits: u64 = (0..parts)
        .into_par_iter()
        .map(|part| {
            let n = trials / parts + u64::from(part < trials % parts);
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, part));
            let mut pts = Vec::with_capacity(k);
            let mut hits = 0u64;
            for _ in 0..n {
                sampler.draw_distinct(&mut rng, k, &mut pts);
                if tau.matches(&Permutation::from_points(&pts)) {
                    hits += 1;
                }
            }
            hits
        })
        .sum();
    let p = hits as f64 / trials as f64;
    Ok(DensityEstimate { value: p, stderr: (p * (1.0 - p) / trials as f64).sqrt(), trials })
}

use crate::error::{Error, Result};
use crate::measure::Permutation;

/// Tolerance for the structural identities (marginals, total mass).
pub const STRUCTURAL_TOL: f64 = 1e-12;

/// Step permuton on an `m x m` grid.
///
/// `w[i][j]` is the mass of the half-open cell `((i-1)/m, i/m] x ((j-1)/m, j/m]`
/// (1-based in the docs, 0-based in code). Row index `i` runs along `x`.
/// Every row and column carries mass `1/m`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridPermuton {
    m: usize,
    w: Vec<f64>,
}

/// Cumulative distribution function on the grid corners:
/// `G[i][j] = gamma([0, i/m] x [0, j/m])`.
#[derive(Clone, Debug, PartialEq)]
pub struct CdfField {
    m: usize,
    g: Vec<f64>,
}

/// Outcome of a marginal rebalancing pass.
#[derive(Clone, Debug)]
pub struct Rebalanced {
    pub grid: GridPermuton,
    /// L1 distance between the (mass-normalized) input and the output.
    pub correction: f64,
    pub iterations: usize,
}

impl GridPermuton {
    /// Validates `w` (row-major, length `m*m`) against the permuton invariants.
    pub fn from_masses(m: usize, w: Vec<f64>) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("grid resolution must be positive"));
        }
        if w.len() != m * m {
            return Err(Error::invalid(format!("expected {} masses, got {}", m * m, w.len())));
        }
        if let Some(bad) = w.iter().position(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::invalid(format!(
                "cell ({}, {}) has mass {}",
                bad / m + 1,
                bad % m + 1,
                w[bad]
            )));
        }
        let g = GridPermuton { m, w };
        let err = g.marginal_error();
        if err > STRUCTURAL_TOL {
            return Err(Error::invalid(format!("marginals deviate from 1/m by {err:e}")));
        }
        Ok(g)
    }

    pub fn uniform(m: usize) -> Self {
        let v = 1.0 / (m * m) as f64;
        GridPermuton { m, w: vec![v; m * m] }
    }

    pub fn identity(m: usize) -> Self {
        Self::from_permutation(&Permutation::identity(m), m).expect("m divides m")
    }

    pub fn reverse(m: usize) -> Self {
        Self::from_permutation(&Permutation::reverse(m), m).expect("m divides m")
    }

    /// Aggregates `gamma_pi` onto an `m x m` grid; `m` must divide `n`.
    pub fn from_permutation(pi: &Permutation, m: usize) -> Result<Self> {
        let n = pi.len();
        if m == 0 || n == 0 || !n.is_multiple_of(m) {
            return Err(Error::NotDivisor { divisor: m, n });
        }
        let block = n / m;
        let mut w = vec![0.0; m * m];
        for i in 0..n {
            w[(i / block) * m + pi.get(i) / block] += 1.0 / n as f64;
        }
        Ok(GridPermuton { m, w })
    }

    /// Cell masses from a CDF by inclusion-exclusion on the corners `(i/m, j/m)`.
    ///
    /// Round-off negatives are clipped and the marginals rebalanced.
    pub fn from_cdf_fn(m: usize, cdf: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let h = 1.0 / m as f64;
        let mut corners = vec![0.0; (m + 1) * (m + 1)];
        for i in 0..=m {
            for j in 0..=m {
                corners[i * (m + 1) + j] = cdf(i as f64 * h, j as f64 * h);
            }
        }
        let mut w = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                let at = |a: usize, b: usize| corners[a * (m + 1) + b];
                let v = at(i + 1, j + 1) - at(i, j + 1) - at(i + 1, j) + at(i, j);
                w[i * m + j] = v.max(0.0);
            }
        }
        Ok(Self::rebalance(m, w)?.grid)
    }

    /// Restores uniform marginals by alternating row/column scaling.
    pub fn rebalance(m: usize, mut w: Vec<f64>) -> Result<Rebalanced> {
        if w.len() != m * m || m == 0 {
            return Err(Error::invalid("mass vector does not match resolution"));
        }
        let total: f64 = w.iter().sum();
        if !(total > 0.0) || w.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::invalid("masses must be nonnegative with positive total"));
        }
        w.iter_mut().for_each(|v| *v /= total);
        let original = w.clone();
        let iterations = sinkhorn(m, &mut w, STRUCTURAL_TOL * 0.1, 100_000)?;
        let correction = original.iter().zip(&w).map(|(a, b)| (a - b).abs()).sum();
        Ok(Rebalanced { grid: GridPermuton { m, w }, correction, iterations })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn masses(&self) -> &[f64] {
        &self.w
    }

    pub fn into_masses(self) -> Vec<f64> {
        self.w
    }

    /// Mass of cell `(i, j)`, 0-based, `i` along `x`.
    #[inline]
    pub fn mass(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.m + j]
    }

    /// Step density `m^2 w[i][j]` on cell `(i, j)`.
    #[inline]
    pub fn density(&self, i: usize, j: usize) -> f64 {
        let m = self.m as f64;
        m * m * self.mass(i, j)
    }

    /// Largest deviation of a row/column sum from `1/m`, or of the total from 1.
    pub fn marginal_error(&self) -> f64 {
        let (rows, cols) = marginals(self.m, &self.w);
        let target = 1.0 / self.m as f64;
        let total: f64 = rows.iter().sum();
        rows.iter()
            .chain(&cols)
            .map(|s| (s - target).abs())
            .fold((total - 1.0).abs(), f64::max)
    }

    pub fn cdf(&self) -> CdfField {
        let m = self.m;
        let mut g = vec![0.0; (m + 1) * (m + 1)];
        for i in 0..m {
            let mut row = 0.0;
            for j in 0..m {
                row += self.w[i * m + j];
                g[(i + 1) * (m + 1) + j + 1] = g[i * (m + 1) + j + 1] + row;
            }
        }
        CdfField { m, g }
    }

    /// Block sums onto an `m2 x m2` grid; `m2` must divide `m`.
    pub fn coarsen(&self, m2: usize) -> Result<Self> {
        if m2 == 0 || !self.m.is_multiple_of(m2) {
            return Err(Error::NotDivisor { divisor: m2, n: self.m });
        }
        let b = self.m / m2;
        let mut w = vec![0.0; m2 * m2];
        for i in 0..self.m {
            for j in 0..self.m {
                w[(i / b) * m2 + j / b] += self.w[i * self.m + j];
            }
        }
        Ok(GridPermuton { m: m2, w })
    }

    /// Mirror image `x -> 1 - x`.
    pub fn reflect_x(&self) -> Self {
        let m = self.m;
        let mut w = vec![0.0; m * m];
        for i in 0..m {
            w[(m - 1 - i) * m..(m - i) * m].copy_from_slice(&self.w[i * m..(i + 1) * m]);
        }
        GridPermuton { m, w }
    }

    /// Swap of the axes (the permuton of the inverse permutation).
    pub fn transpose(&self) -> Self {
        let m = self.m;
        let mut w = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                w[j * m + i] = self.w[i * m + j];
            }
        }
        GridPermuton { m, w }
    }
}

impl CdfField {
    pub fn m(&self) -> usize {
        self.m
    }

    /// `G(i/m, j/m)` for `0 <= i, j <= m`.
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.g[i * (self.m + 1) + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.g
    }

    /// Bilinear interpolation, exact for the step permuton.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let m = self.m as f64;
        let (fx, fy) = ((x.clamp(0.0, 1.0) * m), (y.clamp(0.0, 1.0) * m));
        let i = (fx.floor() as usize).min(self.m - 1);
        let j = (fy.floor() as usize).min(self.m - 1);
        let (u, v) = (fx - i as f64, fy - j as f64);
        (1.0 - u) * (1.0 - v) * self.at(i, j)
            + u * (1.0 - v) * self.at(i + 1, j)
            + (1.0 - u) * v * self.at(i, j + 1)
            + u * v * self.at(i + 1, j + 1)
    }

    /// Cell masses recovered by inclusion-exclusion.
    pub fn cell_masses(&self) -> Vec<f64> {
        let m = self.m;
        let mut w = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                w[i * m + j] =
                    self.at(i + 1, j + 1) - self.at(i, j + 1) - self.at(i + 1, j) + self.at(i, j);
            }
        }
        w
    }
}

fn marginals(m: usize, w: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut rows = vec![0.0; m];
    let mut cols = vec![0.0; m];
    for i in 0..m {
        for j in 0..m {
            rows[i] += w[i * m + j];
            cols[j] += w[i * m + j];
        }
    }
    (rows, cols)
}

/// Alternating row/column scaling to marginals `1/m`; returns the sweep count.
pub(crate) fn sinkhorn(m: usize, w: &mut [f64], tol: f64, max_sweeps: usize) -> Result<usize> {
    let target = 1.0 / m as f64;
    let mut cols = vec![0.0; m];
    let mut worst = f64::INFINITY;
    for sweep in 0..max_sweeps {
        for i in 0..m {
            let row = &mut w[i * m..(i + 1) * m];
            let s: f64 = row.iter().sum();
            if s <= 0.0 {
                return Err(Error::invalid(format!("row {} has no mass", i + 1)));
            }
            let f = target / s;
            row.iter_mut().for_each(|v| *v *= f);
        }
        cols.iter_mut().for_each(|c| *c = 0.0);
        for i in 0..m {
            for j in 0..m {
                cols[j] += w[i * m + j];
            }
        }
        if let Some(j) = cols.iter().position(|&c| c <= 0.0) {
            return Err(Error::invalid(format!("column {} has no mass", j + 1)));
        }
        for i in 0..m {
            for j in 0..m {
                w[i * m + j] *= target / cols[j];
            }
        }
        // columns are exact now; check rows
        worst = (0..m)
            .map(|i| (w[i * m..(i + 1) * m].iter().sum::<f64>() - target).abs())
            .fold(0.0, f64::max);
        if worst <= tol {
            return Ok(sweep + 1);
        }
    }
    Err(Error::NotConverged { iterations: max_sweeps, residual: worst })
}

//! Insertion measures.
//!
//! A permuton is grown by inserting the element with x-coordinate `x` at a
//! random position `Y ~ ν_x` on `[0, x]`. An element inserted at `(x₀, Z)` is
//! pushed up by later insertions below it, so its position follows
//!
//! ```text
//! dX/dx = F(x, X),   X(x₀) = Z,
//! ```
//!
//! with `F(x, ·)` the CDF of `ν_x`; its final position `X(1)` is the
//! y-coordinate. Conversely `F(x, G(x, ỹ)) = G_x(x, ỹ)` recovers the family from
//! the permuton's CDF `G`, and the entropy is
//! `H = ∫_0^1 ∫_0^x -f log(x f) dy dx`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::GridPermuton;
use crate::quadrature::{composite_unit_rule, integrate};
use crate::starmodel::StarModel;

/// Analytic families, evaluated exactly instead of from the bins.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ClosedForm {
    /// `f(x, y) = r e^{-ry} / (1 - e^{-rx})`; `r = 0` is the flat family `1/x`.
    TruncatedExponential { r: f64 },
}

impl ClosedForm {
    fn density(&self, x: f64, y: f64) -> f64 {
        match *self {
            ClosedForm::TruncatedExponential { r } if r == 0.0 => 1.0 / x,
            // r e^{-ry} / (1 - e^{-rx}) = -r e^{-ry} / expm1(-rx)
            ClosedForm::TruncatedExponential { r } => -r * (-r * y).exp() / (-r * x).exp_m1(),
        }
    }

    fn cdf(&self, x: f64, y: f64) -> f64 {
        match *self {
            ClosedForm::TruncatedExponential { r } if r == 0.0 => y / x,
            ClosedForm::TruncatedExponential { r } => (-r * y).exp_m1() / (-r * x).exp_m1(),
        }
    }
}

/// Gridded insertion densities on the triangle `0 <= y <= x <= 1`.
///
/// Column `i` sits at `x_i = (i + 1/2)/m_t` and stores bin averages of
/// `f(x_i, ·)` on `max(8, ⌈x_i m_y⌉)` equal bins of `[0, x_i]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InsertionFamily {
    mt: usize,
    my: usize,
    columns: Vec<Vec<f64>>,
    tag: Option<ClosedForm>,
}

/// Normalization tolerance for each column.
pub const COLUMN_TOL: f64 = 1e-8;

impl InsertionFamily {
    pub fn bins_for(mt: usize, my: usize, i: usize) -> usize {
        let x = (i as f64 + 0.5) / mt as f64;
        ((x * my as f64).ceil() as usize).max(8)
    }

    /// Validates a gridded family.
    pub fn from_columns(mt: usize, my: usize, columns: Vec<Vec<f64>>) -> Result<Self> {
        if mt == 0 || my == 0 {
            return Err(Error::invalid("insertion grid needs positive resolutions"));
        }
        if columns.len() != mt {
            return Err(Error::invalid(format!("expected {mt} columns, got {}", columns.len())));
        }
        for (i, col) in columns.iter().enumerate() {
            let n = Self::bins_for(mt, my, i);
            if col.len() != n {
                return Err(Error::invalid(format!("column {} needs {n} bins, got {}", i + 1, col.len())));
            }
            if let Some(v) = col.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
                return Err(Error::invalid(format!("column {} has density {v}", i + 1)));
            }
            let x = (i as f64 + 0.5) / mt as f64;
            let total: f64 = col.iter().sum::<f64>() * x / n as f64;
            if (total - 1.0).abs() > COLUMN_TOL {
                return Err(Error::invalid(format!("column {} integrates to {total}", i + 1)));
            }
        }
        Ok(InsertionFamily { mt, my, columns, tag: None })
    }

    /// Bins a family given by its per-column CDF `cdf(x, y)`.
    fn from_cdf(mt: usize, my: usize, tag: Option<ClosedForm>, cdf: impl Fn(f64, f64) -> f64 + Sync) -> Result<Self> {
        if mt == 0 || my == 0 {
            return Err(Error::invalid("insertion grid needs positive resolutions"));
        }
        let columns = (0..mt)
            .into_par_iter()
            .map(|i| {
                let x = (i as f64 + 0.5) / mt as f64;
                let n = Self::bins_for(mt, my, i);
                let width = x / n as f64;
                let edges: Vec<f64> = (0..=n).map(|k| cdf(x, x * k as f64 / n as f64)).collect();
                let total = edges[n] - edges[0];
                edges.windows(2).map(|e| (e[1] - e[0]).max(0.0) / (total * width)).collect()
            })
            .collect();
        let mut fam = Self::from_columns(mt, my, columns)?;
        fam.tag = tag;
        Ok(fam)
    }

    /// The flat family `f = 1/x` of the uniform permuton.
    pub fn flat(mt: usize, my: usize) -> Result<Self> {
        Self::truncated_exponential(0.0, mt, my)
    }

    /// `f = r e^{-ry} / (1 - e^{-rx})`, the insertion family of the 1 2 model.
    pub fn truncated_exponential(r: f64, mt: usize, my: usize) -> Result<Self> {
        if !r.is_finite() {
            return Err(Error::invalid("rate must be finite"));
        }
        let form = ClosedForm::TruncatedExponential { r };
        Self::from_cdf(mt, my, Some(form), move |x, y| form.cdf(x, y))
    }

    /// Insertion densities `∝ e^{p(y, x)}` of a star model.
    pub fn from_star_model(model: &StarModel, mt: usize, my: usize) -> Result<Self> {
        let rule = composite_unit_rule(4, 8);
        Self::from_cdf(mt, my, None, |x, y| {
            // unnormalized CDF; `from_cdf` divides by the column total.
            // Exponents are shifted by the column maximum on a fine scan.
            let peak = (0..=64).map(|k| model.exponent(x * k as f64 / 64.0, x)).fold(f64::NEG_INFINITY, f64::max);
            if y <= 0.0 {
                return 0.0;
            }
            let panels = 64;
            (0..panels)
                .map(|p| {
                    let (a, b) = (y * p as f64 / panels as f64, y * (p + 1) as f64 / panels as f64);
                    integrate(a, b, &rule, |t| (model.exponent(t, x) - peak).exp())
                })
                .sum()
        })
    }

    pub fn mt(&self) -> usize {
        self.mt
    }

    pub fn my(&self) -> usize {
        self.my
    }

    pub fn tag(&self) -> Option<ClosedForm> {
        self.tag
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn column_x(&self, i: usize) -> f64 {
        (i as f64 + 0.5) / self.mt as f64
    }

    /// Largest deviation of a column integral from 1.
    pub fn normalization_error(&self) -> f64 {
        self.columns
            .iter()
            .enumerate()
            .map(|(i, c)| (c.iter().sum::<f64>() * self.column_x(i) / c.len() as f64 - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `f(x, y)`: exact for tagged families, otherwise the bin value of the
    /// nearest column in the scaled coordinate `y/x`.
    pub fn density(&self, x: f64, y: f64) -> f64 {
        if let Some(form) = self.tag {
            return form.density(x, y);
        }
        let i = ((x * self.mt as f64) as usize).min(self.mt - 1);
        let col = &self.columns[i];
        let u = (y / x).clamp(0.0, 1.0);
        let k = ((u * col.len() as f64) as usize).min(col.len() - 1);
        // density rescales with the support length
        col[k] * self.column_x(i) / x
    }

    /// `F(x, y) = ν_x([0, y])`, interpolated linearly in `x` between columns
    /// in the scaled coordinate `y/x`.
    pub fn cdf(&self, x: f64, y: f64) -> f64 {
        if let Some(form) = self.tag {
            return form.cdf(x, y.clamp(0.0, x));
        }
        let u = (y / x).clamp(0.0, 1.0);
        let pos = (x * self.mt as f64 - 0.5).clamp(0.0, (self.mt - 1) as f64);
        let i = (pos as usize).min(self.mt - 1);
        let lam = pos - i as f64;
        let c0 = column_cdf(&self.columns[i], u);
        if lam == 0.0 || i + 1 == self.mt {
            return c0;
        }
        (1.0 - lam) * c0 + lam * column_cdf(&self.columns[i + 1], u)
    }
}

/// Piecewise-linear CDF of a normalized bin column at scaled position `u`.
fn column_cdf(col: &[f64], u: f64) -> f64 {
    let n = col.len();
    let total: f64 = col.iter().sum();
    let s = u * n as f64;
    let k = (s as usize).min(n - 1);
    let below: f64 = col[..k].iter().sum();
    ((below + (s - k as f64) * col[k]) / total).clamp(0.0, 1.0)
}

/// Insertion family of a grid permuton.
///
/// At `x_i` the strip `[0, x_i]` has y-density `m S_ij` on cell row `j`, where
/// `S_ij = Σ_{i'<i} w_{i'j} + w_ij / 2`; the family is `f = m w_ij / S_ij` on
/// `[G(x_i, j/m), G(x_i, (j+1)/m)]`. A zero `S_ij` makes `G(x_i, ·)` flat on a
/// band, and the column is rejected.
pub fn insertion_from_permuton(g: &GridPermuton, my: usize) -> Result<InsertionFamily> {
    let m = g.m();
    let mf = m as f64;
    let mut acc = vec![0.0; m]; // Σ_{i'<i} w_{i'j}
    let mut columns = Vec::with_capacity(m);
    for i in 0..m {
        let x = (i as f64 + 0.5) / mf;
        let strip: Vec<f64> = (0..m).map(|j| acc[j] + 0.5 * g.mass(i, j)).collect();
        if let Some(j) = strip.iter().position(|&s| s <= 0.0) {
            return Err(Error::SingularColumn { column: i + 1, row: j + 1 });
        }
        // piecewise-linear CDF of ν_x: knots at y_j = G(x, j/m), values m Σ_{j'<j} w_ij'
        let mut knots_y = vec![0.0];
        let mut knots_f = vec![0.0];
        for j in 0..m {
            knots_y.push(knots_y[j] + strip[j]);
            knots_f.push(knots_f[j] + mf * g.mass(i, j));
        }
        let n = InsertionFamily::bins_for(m, my, i);
        let width = x / n as f64;
        let edge_cdf = |y: f64| {
            let j = knots_y.partition_point(|&k| k <= y).clamp(1, m) - 1;
            let t = ((y - knots_y[j]) / strip[j]).clamp(0.0, 1.0);
            knots_f[j] + t * (knots_f[j + 1] - knots_f[j])
        };
        let edges: Vec<f64> = (0..=n).map(|k| if k == n { knots_f[m] } else { edge_cdf(x * k as f64 / n as f64) }).collect();
        let total = edges[n];
        columns.push(edges.windows(2).map(|e| (e[1] - e[0]).max(0.0) / (total * width)).collect());
        for j in 0..m {
            acc[j] += g.mass(i, j);
        }
    }
    InsertionFamily::from_columns(m, my, columns)
}

/// `∫_0^1 ∫_0^x -f log(x f) dy dx`.
///
/// Gridded families use the composite midpoint rule per column (bin averages);
/// tagged families are integrated with Gauss-Legendre panels.
pub fn insertion_entropy(fam: &InsertionFamily) -> f64 {
    let integrand = |x: f64, f: f64| if f > 0.0 { -f * (x * f).ln() } else { 0.0 };
    if let Some(form) = fam.tag {
        let rule = composite_unit_rule(32, 10);
        return integrate(0.0, 1.0, &rule, |x| integrate(0.0, x, &rule, |y| integrand(x, form.density(x, y))));
    }
    let mt = fam.mt as f64;
    fam.columns
        .iter()
        .enumerate()
        .map(|(i, col)| {
            let x = fam.column_x(i);
            let width = x / col.len() as f64;
            col.iter().map(|&f| integrand(x, f) * width).sum::<f64>() / mt
        })
        .sum()
}

/// Output of [`permuton_from_insertion`].
#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub grid: GridPermuton,
    /// L1 size of the final marginal rebalancing.
    pub correction: f64,
}

/// Options of the characteristic-flow reconstruction.
#[derive(Clone, Copy, Debug)]
pub struct FlowOptions {
    /// RK4 step in `x`.
    pub step: f64,
    /// Insertion times per output column.
    pub seeds_per_cell: usize,
    /// Insertion-location quantiles per insertion time.
    pub quantiles: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions { step: 1.0 / 512.0, seeds_per_cell: 4, quantiles: 256 }
    }
}

pub fn permuton_from_insertion(fam: &InsertionFamily, m_out: usize) -> Result<Reconstruction> {
    permuton_from_insertion_with(fam, m_out, FlowOptions::default())
}

/// Transports insertions `(x₀, Z)` to time 1 along `dX/dx = F(x, X)`.
///
/// For each insertion time `x₀` the map `Z ↦ X(1)` is monotone, so the
/// y-distribution of that column is known at the pushed quantiles of `ν_{x₀}`
/// and interpolated linearly between them (with `X(1) = 0` for `Z = 0` and
/// `X(1) = 1` for `Z = x₀`). Columns are averaged per output cell and the
/// marginals rebalanced.
pub fn permuton_from_insertion_with(fam: &InsertionFamily, m_out: usize, opts: FlowOptions) -> Result<Reconstruction> {
    if m_out == 0 || opts.seeds_per_cell == 0 || opts.quantiles == 0 || !(opts.step > 0.0) {
        return Err(Error::invalid("reconstruction needs positive resolution, seeds and step"));
    }
    let seeds = m_out * opts.seeds_per_cell;
    let rows: Vec<Vec<f64>> = (0..seeds)
        .into_par_iter()
        .map(|s| column_masses(fam, (s as f64 + 0.5) / seeds as f64, m_out, opts))
        .collect::<Result<_>>()?;
    let mut w = vec![0.0; m_out * m_out];
    for (s, row) in rows.iter().enumerate() {
        let i = s / opts.seeds_per_cell;
        for (j, v) in row.iter().enumerate() {
            w[i * m_out + j] += v / seeds as f64;
        }
    }
    let r = GridPermuton::rebalance(m_out, w)?;
    Ok(Reconstruction { grid: r.grid, correction: r.correction })
}

/// Distribution over the `m_out` y-cells of elements inserted at time `x0`.
fn column_masses(fam: &InsertionFamily, x0: f64, m_out: usize, opts: FlowOptions) -> Result<Vec<f64>> {
    let q = opts.quantiles;
    let mut pushed = Vec::with_capacity(q + 2);
    pushed.push((0.0, 0.0));
    for k in 0..q {
        let level = (k as f64 + 0.5) / q as f64;
        let z = invert_cdf(fam, x0, level);
        pushed.push((flow(fam, x0, z, opts.step)?, level));
    }
    pushed.push((1.0, 1.0));
    // monotone up to integration error
    for k in 1..pushed.len() {
        if pushed[k].0 < pushed[k - 1].0 {
            pushed[k].0 = pushed[k - 1].0;
        }
    }
    let cdf_at = |y: f64| {
        let k = pushed.partition_point(|p| p.0 <= y);
        if k == 0 {
            return 0.0;
        }
        if k == pushed.len() {
            return 1.0;
        }
        let (a, b) = (pushed[k - 1], pushed[k]);
        if b.0 > a.0 {
            a.1 + (b.1 - a.1) * (y - a.0) / (b.0 - a.0)
        } else {
            b.1
        }
    };
    let edges: Vec<f64> = (0..=m_out).map(|j| cdf_at(j as f64 / m_out as f64)).collect();
    Ok(edges.windows(2).map(|e| (e[1] - e[0]).max(0.0)).collect())
}

/// `Z` with `F(x0, Z) = level`, by bisection.
fn invert_cdf(fam: &InsertionFamily, x0: f64, level: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, x0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if fam.cdf(x0, mid) < level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// RK4 for `dX/dx = F(x, X)` from `(x0, z)` to `x = 1`.
fn flow(fam: &InsertionFamily, x0: f64, z: f64, step: f64) -> Result<f64> {
    let n = ((1.0 - x0) / step).ceil().max(1.0) as usize;
    let h = (1.0 - x0) / n as f64;
    let rhs = |x: f64, v: f64| fam.cdf(x, v.clamp(0.0, x));
    let mut x = x0;
    let mut v = z;
    for _ in 0..n {
        let k1 = rhs(x, v);
        let k2 = rhs(x + 0.5 * h, v + 0.5 * h * k1);
        let k3 = rhs(x + 0.5 * h, v + 0.5 * h * k2);
        let k4 = rhs(x + h, v + h * k3);
        v += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        x += h;
        if v < -1e-9 || v > x + 1e-9 {
            return Err(Error::FlowEscaped { x, value: v });
        }
        v = v.clamp(0.0, x);
    }
    Ok(v)
}

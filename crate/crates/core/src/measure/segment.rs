use crate::error::{Error, Result};
use crate::measure::GridPermuton;

/// Direction of a slope-±1 segment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Slope {
    Up,
    Down,
}

impl Slope {
    pub fn sign(self) -> f64 {
        match self {
            Slope::Up => 1.0,
            Slope::Down => -1.0,
        }
    }
}

/// Uniform 1-D mass on the line from `(x0, y0)` to `(x1, y0 + slope * (x1 - x0))`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Segment {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub slope: Slope,
    pub mass: f64,
}

impl Segment {
    pub fn y_at(&self, x: f64) -> f64 {
        self.y0 + self.slope.sign() * (x - self.x0)
    }

    pub fn y_range(&self) -> (f64, f64) {
        let y1 = self.y_at(self.x1);
        (self.y0.min(y1), self.y0.max(y1))
    }
}

/// Permuton supported on finitely many segments of slope ±1.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentPermuton {
    segments: Vec<Segment>,
}

const MARGINAL_TOL: f64 = 1e-9;

impl SegmentPermuton {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::invalid("segment permuton needs at least one segment"));
        }
        for (k, s) in segments.iter().enumerate() {
            if !(s.x0 < s.x1) || !(s.mass >= 0.0) {
                return Err(Error::invalid(format!("segment {k}: need x0 < x1 and mass >= 0")));
            }
            let (lo, hi) = s.y_range();
            if s.x0 < -MARGINAL_TOL || s.x1 > 1.0 + MARGINAL_TOL || lo < -MARGINAL_TOL || hi > 1.0 + MARGINAL_TOL {
                return Err(Error::invalid(format!("segment {k} leaves the unit square")));
            }
        }
        let total: f64 = segments.iter().map(|s| s.mass).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("segment masses sum to {total}")));
        }
        let p = SegmentPermuton { segments };
        let err = p.marginal_error();
        if err > MARGINAL_TOL {
            return Err(Error::invalid(format!("projected marginals deviate by {err:e}")));
        }
        Ok(p)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// The anti-diagonal `y = 1 - x`.
    pub fn reverse_diagonal() -> Self {
        SegmentPermuton {
            segments: vec![Segment { x0: 0.0, x1: 1.0, y0: 1.0, slope: Slope::Down, mass: 1.0 }],
        }
    }

    pub fn diagonal() -> Self {
        SegmentPermuton {
            segments: vec![Segment { x0: 0.0, x1: 1.0, y0: 0.0, slope: Slope::Up, mass: 1.0 }],
        }
    }

    /// Largest deviation of the projected CDFs from the identity.
    ///
    /// Both projections are piecewise linear, so checking the breakpoints is exact.
    pub fn marginal_error(&self) -> f64 {
        let mut xs = vec![0.0, 1.0];
        let mut ys = vec![0.0, 1.0];
        for s in &self.segments {
            let (lo, hi) = s.y_range();
            xs.extend([s.x0, s.x1]);
            ys.extend([lo, hi]);
        }
        let proj_x = |t: f64| -> f64 {
            self.segments
                .iter()
                .map(|s| s.mass * ((t - s.x0) / (s.x1 - s.x0)).clamp(0.0, 1.0))
                .sum()
        };
        let proj_y = |t: f64| -> f64 {
            self.segments
                .iter()
                .map(|s| {
                    let (lo, hi) = s.y_range();
                    s.mass * ((t - lo) / (hi - lo)).clamp(0.0, 1.0)
                })
                .sum()
        };
        let ex = xs.iter().map(|&t| (proj_x(t) - t.clamp(0.0, 1.0)).abs());
        let ey = ys.iter().map(|&t| (proj_y(t) - t.clamp(0.0, 1.0)).abs());
        ex.chain(ey).fold(0.0, f64::max)
    }

    /// Exact cell masses on an `m x m` grid.
    pub fn rasterize(&self, m: usize) -> Result<GridPermuton> {
        let mf = m as f64;
        let mut w = vec![0.0; m * m];
        for s in &self.segments {
            let mut cuts = vec![s.x0, s.x1];
            for k in 1..m {
                let g = k as f64 / mf;
                if g > s.x0 && g < s.x1 {
                    cuts.push(g);
                }
                // x where the segment crosses y = g
                let xc = s.x0 + (g - s.y0) * s.slope.sign();
                if xc > s.x0 && xc < s.x1 {
                    cuts.push(xc);
                }
            }
            cuts.sort_by(f64::total_cmp);
            let density = s.mass / (s.x1 - s.x0);
            for pair in cuts.windows(2) {
                let (a, b) = (pair[0], pair[1]);
                if b <= a {
                    continue;
                }
                let mid = 0.5 * (a + b);
                let i = ((mid * mf) as usize).min(m - 1);
                let j = ((s.y_at(mid) * mf) as usize).min(m - 1);
                w[i * m + j] += density * (b - a);
            }
        }
        GridPermuton::from_masses(m, w)
    }
}

/// The two-parameter family realizing the 1 2 / 1 2 3 feasible region.
///
/// Valid for `0 <= a <= 1`, `0 <= b <= a/2`. Built from the anti-diagonal on
/// `[0, 1-a]`, a staircase of `k = floor(a/b)` descending steps of width `b`
/// covering heights `[0, kb]`, and a descending remainder covering `[kb, a]`.
/// For `b = 0` the staircase degenerates to the ascent from `(1-a, 0)` to `(1, a)`.
pub fn gamma_ab(a: f64, b: f64) -> Result<SegmentPermuton> {
    if !(0.0..=1.0).contains(&a) || !(b >= 0.0) || b > a / 2.0 + 1e-15 {
        return Err(Error::invalid(format!("(a, b) = ({a}, {b}) outside 0 <= b <= a/2 <= 1/2")));
    }
    const EMPTY: f64 = 1e-14;
    let mut segs = Vec::new();
    let mut push = |x0: f64, x1: f64, y0: f64, slope: Slope| {
        if x1 - x0 > EMPTY {
            segs.push(Segment { x0, x1, y0, slope, mass: x1 - x0 });
        }
    };
    push(0.0, 1.0 - a, 1.0, Slope::Down);
    if b == 0.0 {
        push(1.0 - a, 1.0, 0.0, Slope::Up);
    } else {
        let k = (a / b + 1e-12).floor() as usize;
        for j in 1..=k {
            let x0 = 1.0 - a + (j - 1) as f64 * b;
            push(x0, x0 + b, j as f64 * b, Slope::Down);
        }
        let x0 = 1.0 - a + k as f64 * b;
        push(x0, 1.0, a, Slope::Down);
    }
    // renormalize away round-off in the widths
    let total: f64 = segs.iter().map(|s| s.mass).sum();
    segs.iter_mut().for_each(|s| s.mass /= total);
    SegmentPermuton::new(segs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn breakpoints(p: &SegmentPermuton) -> Vec<f64> {
        p.segments().iter().map(|s| s.x0).skip(1).collect()
    }

    #[test]
    fn gamma_00_is_reverse_diagonal() {
        let g = gamma_ab(0.0, 0.0).unwrap();
        assert_eq!(g.segments().len(), 1);
        assert_eq!(g.segments()[0].slope, Slope::Down);
        assert_eq!(g.segments()[0].y0, 1.0);
    }

    #[test]
    fn gamma_1_half_is_two_blocks() {
        let g = gamma_ab(1.0, 0.5).unwrap();
        let s = g.segments();
        assert_eq!(s.len(), 2);
        assert!(s.iter().all(|s| s.slope == Slope::Down && (s.mass - 0.5).abs() < 1e-12));
        // [0,1/2]^2 then [1/2,1]^2
        assert!((s[0].y0 - 0.5).abs() < 1e-15 && (s[0].y_at(0.5)).abs() < 1e-15);
        assert!((s[1].y0 - 1.0).abs() < 1e-15 && (s[1].y_at(1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn gamma_07_02_structure() {
        let g = gamma_ab(0.7, 0.2).unwrap();
        assert_eq!(g.segments().len(), 5);
        let bp = breakpoints(&g);
        for (got, want) in bp.iter().zip([0.3, 0.5, 0.7, 0.9]) {
            assert!((got - want).abs() < 1e-12, "{bp:?}");
        }
        assert!(g.marginal_error() < 1e-12);
        // staircase steps cover heights [0, 0.6], remainder [0.6, 0.7]
        assert!((g.segments()[1].y_at(0.5) - 0.0).abs() < 1e-12);
        assert!((g.segments()[4].y_range().0 - 0.6).abs() < 1e-12);
    }

    #[test]
    fn gamma_a0_ascends_to_a() {
        let g = gamma_ab(0.7, 0.0).unwrap();
        let up = g.segments()[1];
        assert_eq!(up.slope, Slope::Up);
        assert!((up.y_at(1.0) - 0.7).abs() < 1e-12);
    }

    #[test]
    fn rejects_outside_triangle() {
        assert!(gamma_ab(0.5, 0.3).is_err());
        assert!(gamma_ab(1.2, 0.1).is_err());
        assert!(gamma_ab(0.5, -0.1).is_err());
    }

    #[test]
    fn rejects_non_uniform_segments() {
        let half = Segment { x0: 0.0, x1: 0.5, y0: 0.0, slope: Slope::Up, mass: 1.0 };
        assert!(SegmentPermuton::new(vec![half]).is_err());
    }

    #[test]
    fn rasterize_has_uniform_marginals() {
        for (a, b) in [(0.7, 0.2), (1.0, 1.0 / 3.0), (0.45, 0.0), (0.9, 0.11)] {
            let g = gamma_ab(a, b).unwrap().rasterize(16).unwrap();
            assert!(g.marginal_error() < 1e-12);
        }
        let r = SegmentPermuton::reverse_diagonal().rasterize(4).unwrap();
        assert_eq!(r, GridPermuton::reverse(4));
    }
}

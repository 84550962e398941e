use crate::error::{Error, Result};
use crate::measure::GridPermuton;

fn same_resolution(a: &GridPermuton, b: &GridPermuton) -> Result<()> {
    if a.m() != b.m() {
        return Err(Error::ResolutionMismatch { left: a.m(), right: b.m() });
    }
    Ok(())
}

/// Rectangle distance: `max_R |gamma1(R) - gamma2(R)|` over grid-aligned rectangles.
///
/// Maximum absolute subrectangle sum of the difference matrix by a 2-D Kadane
/// scan, O(m^3).
pub fn rect_distance(a: &GridPermuton, b: &GridPermuton) -> Result<f64> {
    same_resolution(a, b)?;
    let m = a.m();
    let diff: Vec<f64> = a.masses().iter().zip(b.masses()).map(|(p, q)| p - q).collect();
    let mut best = 0.0_f64;
    let mut strip = vec![0.0; m];
    for top in 0..m {
        strip.iter_mut().for_each(|v| *v = 0.0);
        for bottom in top..m {
            for (j, s) in strip.iter_mut().enumerate() {
                *s += diff[bottom * m + j];
            }
            // Kadane for max and min simultaneously
            let (mut hi, mut lo) = (0.0_f64, 0.0_f64);
            for &v in &strip {
                hi = (hi + v).max(v);
                lo = (lo + v).min(v);
                best = best.max(hi).max(-lo);
            }
        }
    }
    Ok(best)
}

/// `max |G1 - G2|` over grid corners.
pub fn cdf_linf_distance(a: &GridPermuton, b: &GridPermuton) -> Result<f64> {
    same_resolution(a, b)?;
    let (ga, gb) = (a.cdf(), b.cdf());
    Ok(ga.values().iter().zip(gb.values()).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Every aligned rectangle, O(m^6).
    fn brute_rect(a: &GridPermuton, b: &GridPermuton) -> f64 {
        let m = a.m();
        let mut best = 0.0_f64;
        for i0 in 0..m {
            for i1 in i0..m {
                for j0 in 0..m {
                    for j1 in j0..m {
                        let mut s = 0.0;
                        for i in i0..=i1 {
                            for j in j0..=j1 {
                                s += a.mass(i, j) - b.mass(i, j);
                            }
                        }
                        best = best.max(s.abs());
                    }
                }
            }
        }
        best
    }

    #[test]
    fn examples() {
        let (u, id, rev) = (GridPermuton::uniform(2), GridPermuton::identity(2), GridPermuton::reverse(2));
        assert_eq!(rect_distance(&id, &id).unwrap(), 0.0);
        assert!((rect_distance(&id, &rev).unwrap() - 0.5).abs() < 1e-15);
        assert!((rect_distance(&u, &id).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(cdf_linf_distance(&id, &id).unwrap(), 0.0);
        assert!((cdf_linf_distance(&id, &rev).unwrap() - 0.5).abs() < 1e-15);
        assert!((cdf_linf_distance(&u, &id).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn kadane_matches_enumeration() {
        let a = GridPermuton::from_permutation(&"531642".parse().unwrap(), 6).unwrap();
        let b = GridPermuton::from_permutation(&"214365".parse().unwrap(), 6).unwrap();
        assert!((rect_distance(&a, &b).unwrap() - brute_rect(&a, &b)).abs() < 1e-14);
    }

    #[test]
    fn mismatch_is_an_error() {
        let r = rect_distance(&GridPermuton::uniform(2), &GridPermuton::uniform(4));
        assert!(matches!(r, Err(Error::ResolutionMismatch { .. })));
        assert!(cdf_linf_distance(&GridPermuton::uniform(2), &GridPermuton::uniform(4)).is_err());
    }
}

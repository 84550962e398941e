use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

/// Gauss-Legendre nodes and weights mapped to `[0, 1]`.
pub(crate) fn unit_rule(n: usize) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(NonZeroUsize::new(n).expect("rule size must be positive"));
    let mut out: Vec<(f64, f64)> =
        rule.as_node_weight_pairs().iter().map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w)).collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Composite rule: `panels` equal panels on `[0, 1]`, `n` points each.
pub(crate) fn composite_unit_rule(panels: usize, n: usize) -> Vec<(f64, f64)> {
    let base = unit_rule(n);
    let h = 1.0 / panels as f64;
    (0..panels)
        .flat_map(|p| base.iter().map(move |&(x, w)| ((p as f64 + x) * h, w * h)))
        .collect()
}

/// `∫_a^b f` by composite Gauss-Legendre.
pub(crate) fn integrate(a: f64, b: f64, rule: &[(f64, f64)], mut f: impl FnMut(f64) -> f64) -> f64 {
    let len = b - a;
    rule.iter().map(|&(x, w)| w * f(a + len * x)).sum::<f64>() * len
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        let r = unit_rule(3);
        let v = integrate(0.0, 2.0, &r, |x| x.powi(5));
        assert!((v - 64.0 / 6.0).abs() < 1e-12);
        let c = composite_unit_rule(4, 8);
        assert!((integrate(0.0, 1.0, &c, f64::exp) - (1f64.exp() - 1.0)).abs() < 1e-14);
    }
}

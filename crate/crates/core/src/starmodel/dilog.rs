use std::f64::consts::PI;

const PI2_6: f64 = PI * PI / 6.0;

/// `B_{2k}` for `k = 1..=10`.
const BERNOULLI: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
];

/// Real dilogarithm `Li2(x) = -∫_0^x log(1-t)/t dt` for `x <= 1`.
///
/// The argument is reduced to `[-1, 1/2]` by the inversion and reflection
/// identities, then summed as a Bernoulli series in `z = -log(1 - x)`.
pub fn li2(x: f64) -> f64 {
    assert!(x <= 1.0, "li2 is real only for x <= 1 (got {x})");
    if x == 1.0 {
        PI2_6
    } else if x > 0.5 {
        // reflection: Li2(x) + Li2(1-x) = pi^2/6 - log x log(1-x)
        let y = 1.0 - x;
        PI2_6 - x.ln() * y.ln() - bernoulli_series(y)
    } else if x < -1.0 {
        // inversion: Li2(x) + Li2(1/x) = -pi^2/6 - log^2(-x)/2
        let l = (-x).ln();
        -PI2_6 - 0.5 * l * l - bernoulli_series(1.0 / x)
    } else {
        bernoulli_series(x)
    }
}

/// `Li2(x) = z - z^2/4 + Σ B_{2k} z^{2k+1} / (2k+1)!` with `z = -log(1-x)`.
/// Valid for `|z| < 2 pi`; used for `x ∈ [-1, 1/2]` where `|z| <= log 2`.
fn bernoulli_series(x: f64) -> f64 {
    let z = -(-x).ln_1p();
    let z2 = z * z;
    let mut sum = z - 0.25 * z2;
    let mut pow = z; // z^{2k+1} / (2k+1)!
    for (k, b) in BERNOULLI.iter().enumerate() {
        let n = 2 * k + 3;
        pow *= z2 / ((n - 1) * n) as f64;
        sum += b * pow;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct(x: f64) -> f64 {
        (1..4000).map(|k| x.powi(k) / (k * k) as f64).sum()
    }

    #[test]
    fn special_values() {
        let l2 = 2f64.ln();
        assert!((li2(0.5) - (PI * PI / 12.0 - 0.5 * l2 * l2)).abs() < 1e-15);
        assert!((li2(-1.0) + PI * PI / 12.0).abs() < 1e-15);
        assert_eq!(li2(0.0), 0.0);
        assert_eq!(li2(1.0), PI2_6);
        // Li2(-phi) with phi the golden ratio: -pi^2/10 - log^2(phi)
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((li2(-phi) - (-PI * PI / 10.0 - phi.ln().powi(2))).abs() < 1e-14);
    }

    #[test]
    fn matches_power_series() {
        for &x in &[-0.9, -0.5, -0.1, 0.01, 0.3, 0.49, 0.51, 0.7, 0.9] {
            assert!((li2(x) - direct(x)).abs() < 1e-14, "x = {x}");
        }
        // near 1 the power series is too slow; check the derivative -log(1-x)/x
        // (central-difference truncation h^2 f'''/6 ~ 2e-9 here)
        let (x, h) = (0.999, 1e-7);
        let d = (li2(x + h) - li2(x - h)) / (2.0 * h);
        assert!((d + (1.0 - x).ln() / x).abs() < 1e-7);
    }
}

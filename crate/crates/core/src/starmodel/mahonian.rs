use crate::error::{Error, Result};

/// `log(e^a + e^b)` with `-inf` as the additive identity.
#[inline]
pub(crate) fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Log of the number of permutations of `n` with exactly `i` occurrences of
/// 1 2, for `i = 0..=n(n-1)/2`.
///
/// The counts are the coefficients of `Π_{j=0}^{n-1} (1 + x + ... + x^j)`.
/// Multiplying by one factor is a sliding window sum of width `j + 1`; each
/// window is assembled from block prefix/suffix aggregates, so no log-domain
/// subtraction (and no cancellation) ever occurs.
pub fn mahonian_log_gf(n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::invalid("mahonian_log_gf needs n >= 1"));
    }
    let mut c = vec![0.0]; // log 1
    for j in 1..n {
        c = window_log_sums(&c, j + 1);
    }
    Ok(c)
}

/// `out[i] = log Σ_{t=0}^{w-1} exp(c[i - t])` for `i = 0..len + w - 1`.
fn window_log_sums(c: &[f64], w: usize) -> Vec<f64> {
    let pad = w - 1;
    let len = c.len() + 2 * pad;
    let at = |k: usize| if k < pad || k >= pad + c.len() { f64::NEG_INFINITY } else { c[k - pad] };
    // block prefix and suffix aggregates over blocks of size w
    let mut prefix = vec![f64::NEG_INFINITY; len];
    let mut suffix = vec![f64::NEG_INFINITY; len];
    for k in 0..len {
        prefix[k] = if k % w == 0 { at(k) } else { log_add(prefix[k - 1], at(k)) };
    }
    for k in (0..len).rev() {
        suffix[k] = if k % w == w - 1 || k == len - 1 { at(k) } else { log_add(suffix[k + 1], at(k)) };
    }
    (0..c.len() + pad)
        .map(|a| {
            let b = a + w - 1;
            if a % w == 0 {
                prefix[b]
            } else {
                log_add(suffix[a], prefix[b])
            }
        })
        .collect()
}

/// `log n!`.
pub(crate) fn log_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

//! Exact combinatorial oracles: joint star-pattern counts over all of `S_n`
//! and large-deviation estimates from Mahonian numbers.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::Permutation;
use crate::starmodel::{log_add, log_factorial, mahonian_log_gf, star12_entropy_of_rho};

/// Counts of (∗2, ∗∗3, ∗∗2, ∗∗1): pairs whose last entry is the larger, and
/// triples whose last entry is the largest, middle and smallest.
pub type StarCounts = [u32; 4];

pub const MAX_ENUMERATION_N: usize = 8;
pub const MAX_LDP_N: usize = 500;

/// Star statistics by direct enumeration of pairs and triples.
pub fn star_statistics(pi: &Permutation) -> StarCounts {
    let v = pi.as_slice();
    let n = v.len();
    let mut c = [0u32; 4];
    for b in 0..n {
        for a in 0..b {
            if v[a] < v[b] {
                c[0] += 1;
            }
        }
    }
    for last in 0..n {
        for b in 0..last {
            for a in 0..b {
                let below = (v[a] < v[last]) as u32 + (v[b] < v[last]) as u32;
                c[3 - below as usize] += 1;
            }
        }
    }
    c
}

/// Star statistics accumulated position by position: an entry with `j`
/// predecessors, `i` of them smaller, adds `i`, `C(i,2)`, `i(j-i)` and
/// `C(j-i,2)`.
pub fn star_statistics_by_insertion(pi: &Permutation) -> StarCounts {
    let v = pi.as_slice();
    let mut c = [0u32; 4];
    for (j, &x) in v.iter().enumerate() {
        let i = v[..j].iter().filter(|&&y| y < x).count() as u32;
        let above = j as u32 - i;
        c[0] += i;
        c[1] += i * i.saturating_sub(1) / 2;
        c[2] += i * above;
        c[3] += above * above.saturating_sub(1) / 2;
    }
    c
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 || n > MAX_ENUMERATION_N {
        return Err(Error::invalid(format!("enumeration needs 1 <= n <= {MAX_ENUMERATION_N}, got {n}")));
    }
    Ok(())
}

/// Number of permutations of `n` with each joint value of the star counts.
pub fn joint_star_counts(n: usize) -> Result<BTreeMap<StarCounts, u64>> {
    check_n(n)?;
    let mut out = BTreeMap::new();
    for pi in Permutation::all(n) {
        *out.entry(star_statistics(&pi)).or_insert(0) += 1;
    }
    Ok(out)
}

/// Whether the insertion rule reproduces the enumerated statistics on every
/// permutation of `n`.
pub fn insertion_rule_holds(n: usize) -> Result<bool> {
    check_n(n)?;
    Ok(Permutation::all(n).iter().all(|pi| star_statistics(pi) == star_statistics_by_insertion(pi)))
}

/// Marginal of one coordinate of the joint counts.
pub fn marginal(counts: &BTreeMap<StarCounts, u64>, coordinate: usize) -> BTreeMap<u32, u64> {
    let mut out = BTreeMap::new();
    for (k, &c) in counts {
        *out.entry(k[coordinate]).or_insert(0) += c;
    }
    out
}

/// `(1/n)(log Σ_{i∈W} C_i − log n!)` where `C_i` counts permutations with `i`
/// occurrences of 1 2 and `W = {i : |i/C(n,2) − ρ| < ε}`.
pub fn ldp_estimate(n: usize, rho: f64, eps: f64) -> Result<f64> {
    if !(2..=MAX_LDP_N).contains(&n) {
        return Err(Error::invalid(format!("ldp needs 2 <= n <= {MAX_LDP_N}, got {n}")));
    }
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::invalid(format!("rho = {rho} not in (0, 1)")));
    }
    if !(eps > 0.0) {
        return Err(Error::invalid(format!("eps = {eps} must be positive")));
    }
    let logs = mahonian_log_gf(n)?;
    let pairs = (n * (n - 1) / 2) as f64;
    let total = logs
        .iter()
        .enumerate()
        .filter(|(i, _)| (*i as f64 / pairs - rho).abs() < eps)
        .fold(f64::NEG_INFINITY, |acc, (_, &l)| log_add(acc, l));
    if total == f64::NEG_INFINITY {
        return Err(Error::invalid(format!("no 1 2 count i with |i/{pairs} - {rho}| < {eps} at n = {n}")));
    }
    Ok((total - log_factorial(n)) / n as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LdpPoint {
    pub n: usize,
    pub estimate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LdpReport {
    pub rho: f64,
    pub eps: f64,
    /// Closed-form limit `s(ρ)`, the entropy of the 1 2 model at density ρ.
    pub limit: f64,
    /// Limit of the estimates at this fixed `ε`: the supremum of `s` over the
    /// window, which is `s(ρ+ε)` for `ρ+ε < 1/2`.
    pub window_limit: f64,
    pub points: Vec<LdpPoint>,
}

impl LdpReport {
    /// Whether the estimates increase with `n`.
    pub fn is_increasing(&self) -> bool {
        self.points.windows(2).all(|w| w[1].estimate > w[0].estimate)
    }

    pub fn last_gap(&self) -> Option<f64> {
        self.points.last().map(|p| (p.estimate - self.limit).abs())
    }
}

pub fn ldp_report(ns: &[usize], rho: f64, eps: f64) -> Result<LdpReport> {
    let points = ns
        .iter()
        .map(|&n| Ok(LdpPoint { n, estimate: ldp_estimate(n, rho, eps)? }))
        .collect::<Result<Vec<_>>>()?;
    Ok(LdpReport { rho, eps, limit: star12_entropy_of_rho(rho)?, window_limit: window_limit(rho, eps)?, points })
}

/// `sup { s(x) : |x − ρ| < ε }`; `s` is concave with maximum 0 at 1/2.
fn window_limit(rho: f64, eps: f64) -> Result<f64> {
    if rho + eps < 0.5 {
        star12_entropy_of_rho(rho + eps)
    } else if rho - eps > 0.5 {
        star12_entropy_of_rho(rho - eps)
    } else {
        Ok(0.0)
    }
}

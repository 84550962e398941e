use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A permutation of `{1, ..., n}`, stored 0-based.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Permutation {
    values: Vec<usize>,
}

impl Permutation {
    /// Builds a permutation from 1-based values, e.g. `[2, 4, 1, 3]`.
    pub fn new(one_based: Vec<usize>) -> Result<Self> {
        if one_based.contains(&0) {
            return Err(Error::invalid("permutation values are 1-based"));
        }
        Self::from_zero_based(one_based.into_iter().map(|v| v - 1).collect())
    }

    pub fn from_zero_based(values: Vec<usize>) -> Result<Self> {
        let n = values.len();
        let mut seen = vec![false; n];
        for &v in &values {
            if v >= n || seen[v] {
                return Err(Error::invalid(format!("{values:?} is not a bijection")));
            }
            seen[v] = true;
        }
        Ok(Permutation { values })
    }

    pub fn identity(n: usize) -> Self {
        Permutation { values: (0..n).collect() }
    }

    pub fn reverse(n: usize) -> Self {
        Permutation { values: (0..n).rev().collect() }
    }

    /// Pattern of a point set: sort by `x`, read the ranks of `y`.
    ///
    /// Coordinates must be pairwise distinct in each axis.
    pub fn from_points(points: &[(f64, f64)]) -> Self {
        let mut by_x: Vec<usize> = (0..points.len()).collect();
        by_x.sort_by(|&a, &b| points[a].0.total_cmp(&points[b].0));
        let mut by_y: Vec<usize> = (0..points.len()).collect();
        by_y.sort_by(|&a, &b| points[a].1.total_cmp(&points[b].1));
        let mut y_rank = vec![0; points.len()];
        for (rank, &p) in by_y.iter().enumerate() {
            y_rank[p] = rank;
        }
        Permutation { values: by_x.iter().map(|&p| y_rank[p]).collect() }
    }

    /// Standardization of a subsequence: the pattern of `self` at `indices`.
    pub fn pattern_at(&self, indices: &[usize]) -> Permutation {
        let picked: Vec<usize> = indices.iter().map(|&i| self.values[i]).collect();
        let mut order: Vec<usize> = (0..picked.len()).collect();
        order.sort_by_key(|&a| picked[a]);
        let mut ranks = vec![0; picked.len()];
        for (rank, &a) in order.iter().enumerate() {
            ranks[a] = rank;
        }
        Permutation { values: ranks }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// 0-based image of position `i`.
    pub fn get(&self, i: usize) -> usize {
        self.values[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.values
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.values.iter().map(|v| v + 1).collect()
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.values.len()];
        for (i, &v) in self.values.iter().enumerate() {
            inv[v] = i;
        }
        Permutation { values: inv }
    }

    /// All permutations of length `n` in lexicographic order.
    pub fn all(n: usize) -> Vec<Permutation> {
        let mut out = Vec::new();
        let mut cur: Vec<usize> = (0..n).collect();
        loop {
            out.push(Permutation { values: cur.clone() });
            // next lexicographic permutation
            let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else {
                break;
            };
            let j = (i..n).rev().find(|&j| cur[j] > cur[i - 1]).unwrap();
            cur.swap(i - 1, j);
            cur[i..].reverse();
        }
        out
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sep = if self.values.len() > 9 { " " } else { "" };
        let parts: Vec<String> = self.values.iter().map(|v| (v + 1).to_string()).collect();
        f.write_str(&parts.join(sep))
    }
}

impl FromStr for Permutation {
    type Err = Error;

    /// Accepts `"2413"` (single digits) or `"2 4 1 3"` / `"2,4,1,3"`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse(format!("permutation {s:?}"));
        let values = if s.contains([' ', ',']) {
            s.split([' ', ','])
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<usize>().map_err(|_| bad()))
                .collect::<Result<Vec<_>>>()?
        } else {
            s.chars()
                .map(|c| c.to_digit(10).map(|d| d as usize).ok_or_else(bad))
                .collect::<Result<Vec<_>>>()?
        };
        Permutation::new(values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_both_syntaxes() {
        let a: Permutation = "2413".parse().unwrap();
        let b: Permutation = "2, 4, 1, 3".parse().unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_string(), "2413");
        assert!("2213".parse::<Permutation>().is_err());
        assert!("20".parse::<Permutation>().is_err());
    }

    #[test]
    fn pattern_of_prefix() {
        // first three indices of 4312 form 321
        let p: Permutation = "4312".parse().unwrap();
        assert_eq!(p.pattern_at(&[0, 1, 2]).to_string(), "321");
    }

    #[test]
    fn enumerates_factorial_many() {
        assert_eq!(Permutation::all(4).len(), 24);
        assert_eq!(Permutation::all(1).len(), 1);
        let s3: Vec<String> = Permutation::all(3).iter().map(|p| p.to_string()).collect();
        assert_eq!(s3, ["123", "132", "213", "231", "312", "321"]);
    }

    #[test]
    fn points_to_pattern() {
        let p = Permutation::from_points(&[(0.9, 0.1), (0.1, 0.5), (0.5, 0.7)]);
        assert_eq!(p.to_string(), "231");
        assert_eq!(p.inverse().inverse(), p);
    }
}

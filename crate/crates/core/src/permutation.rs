//! Permutations, Kendall's-τ distance, uniform sampling and the max-min design.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A bijection of `0..n`, stored as the sequence `p[0], …, p[n-1]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(seq: Vec<usize>) -> Result<Self> {
        let n = seq.len();
        let mut seen = vec![false; n];
        for &v in &seq {
            if v >= n {
                return Err(Error::Permutation(format!("value {v} out of range 0..{n}")));
            }
            if std::mem::replace(&mut seen[v], true) {
                return Err(Error::Permutation(format!("value {v} repeated")));
            }
        }
        Ok(Self(seq))
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn reversed(n: usize) -> Self {
        Self((0..n).rev().collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }

    /// `q[p[i]] = i`.
    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.0.len()];
        for (i, &v) in self.0.iter().enumerate() {
            inv[v] = i;
        }
        Self(inv)
    }

    /// `(self ∘ other)[i] = self[other[i]]`.
    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(self.len(), other.len(), "composing permutations of different length");
        Self(other.0.iter().map(|&i| self.0[i]).collect())
    }

    /// Exchange the values at positions `i` and `j`.
    pub fn swap(&mut self, i: usize, j: usize) {
        self.0.swap(i, j);
    }
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Self {
        p.0
    }
}

impl std::ops::Index<usize> for Permutation {
    type Output = usize;

    fn index(&self, i: usize) -> &usize {
        &self.0[i]
    }
}

/// Dash-separated indices, e.g. `2-0-1`.
impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str("-")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl FromStr for Permutation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::Permutation("empty permutation".into()));
        }
        let seq = s
            .split(['-', ','])
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Permutation(format!("bad index {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(seq)
    }
}

/// Whether the optimizer's internal permutation is read as a visiting order
/// or as the rank (visiting step) of each asteroid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    Order,
    Rank,
}

impl Representation {
    /// Internal permutation to visiting order.
    pub fn to_order(self, p: &Permutation) -> Permutation {
        match self {
            Representation::Order => p.clone(),
            Representation::Rank => p.inverse(),
        }
    }

    /// Visiting order to internal permutation.
    pub fn from_order(self, order: &Permutation) -> Permutation {
        self.to_order(order)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Representation::Order => "order",
            Representation::Rank => "rank",
        }
    }
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Representation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "order" => Ok(Self::Order),
            "rank" | "ranking" => Ok(Self::Rank),
            other => Err(Error::domain(format!("unknown representation {other:?}"))),
        }
    }
}

pub fn inverse(p: &Permutation) -> Permutation {
    p.inverse()
}

/// Number of position pairs ordered differently by `p` and `q`.
pub fn kendall_distance(p: &Permutation, q: &Permutation) -> Result<usize> {
    if p.len() != q.len() {
        return Err(Error::domain(format!(
            "Kendall distance of permutations with lengths {} and {}",
            p.len(),
            q.len()
        )));
    }
    let q_inv = q.inverse();
    let mut seq: Vec<usize> = q_inv.0.iter().map(|&i| p.0[i]).collect();
    let mut scratch = vec![0; seq.len()];
    Ok(count_inversions(&mut seq, &mut scratch))
}

/// Kendall distance given the precomputed inverse of `q`; `buf` and
/// `scratch` must have the permutation length.
pub(crate) fn kendall_with_inverse(p: &[usize], q_inv: &[usize], buf: &mut [usize], scratch: &mut [usize]) -> usize {
    for (b, &i) in buf.iter_mut().zip(q_inv) {
        *b = p[i];
    }
    count_inversions(buf, scratch)
}

/// Merge-sort inversion count; sorts `seq` in place.
fn count_inversions(seq: &mut [usize], scratch: &mut [usize]) -> usize {
    let n = seq.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut count = {
        let (left, right) = seq.split_at_mut(mid);
        let (sl, sr) = scratch.split_at_mut(mid);
        count_inversions(left, sl) + count_inversions(right, sr)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if seq[i] <= seq[j] {
            scratch[k] = seq[i];
            i += 1;
        } else {
            scratch[k] = seq[j];
            count += mid - i;
            j += 1;
        }
        k += 1;
    }
    scratch[k..k + mid - i].copy_from_slice(&seq[i..mid]);
    k += mid - i;
    scratch[k..k + n - j].copy_from_slice(&seq[j..n]);
    seq.copy_from_slice(&scratch[..n]);
    count
}

/// Largest possible Kendall distance between permutations of length `n`.
pub fn max_kendall(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Uniform index in `0..bound` drawn through a 64-bit sample so streams are
/// identical on 32- and 64-bit targets.
pub(crate) fn uniform_index<R: Rng + ?Sized>(rng: &mut R, bound: usize) -> usize {
    rng.gen_range(0..bound as u64) as usize
}

/// Fisher–Yates draw from the uniform distribution over permutations of `0..n`.
pub fn sample_uniform<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Permutation {
    let mut seq: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = uniform_index(rng, i + 1);
        seq.swap(i, j);
    }
    Permutation(seq)
}

/// Every permutation of `0..n` in lexicographic order.
pub fn all_permutations(n: usize) -> Vec<Permutation> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    loop {
        out.push(Permutation(cur.clone()));
        // next lexicographic permutation
        let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else {
            break;
        };
        let j = (i..n).rev().find(|&j| cur[j] > cur[i - 1]).expect("successor exists");
        cur.swap(i - 1, j);
        cur[i..].reverse();
    }
    out
}

fn factorial_at_most(n: usize, limit: usize) -> Option<usize> {
    let mut acc: usize = 1;
    for k in 2..=n {
        acc = acc.checked_mul(k)?;
        if acc > limit {
            return None;
        }
    }
    Some(acc)
}

/// Candidate pool size per design step.
pub fn maxmin_pool_size(n: usize) -> usize {
    100 * n
}

/// Sequential max-min-distance design of `k` permutations of length `n`.
///
/// `seeds` become the first members. Further members are picked from a pool
/// of `100·n` uniform candidates (or all of S_n when that is smaller) to
/// maximize the minimum Kendall distance to the current members; ties go to
/// the first candidate drawn.
pub fn maxmin_design<R: Rng + ?Sized>(
    n: usize,
    k: usize,
    rng: &mut R,
    seeds: &[Permutation],
) -> Result<Vec<Permutation>> {
    if let Some(bad) = seeds.iter().find(|s| s.len() != n) {
        return Err(Error::domain(format!("seed {bad} does not have length {n}")));
    }
    let mut design: Vec<Permutation> = seeds.iter().take(k).cloned().collect();
    if design.is_empty() && k > 0 {
        design.push(sample_uniform(n, rng));
    }
    let pool_size = maxmin_pool_size(n);
    let exhaustive = factorial_at_most(n, pool_size).map(|_| all_permutations(n));

    let mut inverses: Vec<Vec<usize>> = design.iter().map(|p| p.inverse().0).collect();
    let mut buf = vec![0; n];
    let mut scratch = vec![0; n];
    while design.len() < k {
        let mut best: Option<(usize, Permutation)> = None;
        let mut consider = |cand: Permutation, best: &mut Option<(usize, Permutation)>| {
            let dmin = inverses
                .iter()
                .map(|qi| kendall_with_inverse(&cand.0, qi, &mut buf, &mut scratch))
                .min()
                .unwrap_or(usize::MAX);
            if best.as_ref().is_none_or(|(d, _)| dmin > *d) {
                *best = Some((dmin, cand));
            }
        };
        match &exhaustive {
            Some(all) => all.iter().for_each(|c| consider(c.clone(), &mut best)),
            None => (0..pool_size).for_each(|_| consider(sample_uniform(n, rng), &mut best)),
        }
        let (_, chosen) = best.expect("non-empty candidate pool");
        inverses.push(chosen.inverse().0);
        design.push(chosen);
    }
    Ok(design)
}

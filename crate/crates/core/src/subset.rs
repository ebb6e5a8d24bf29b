//! Sorted index sets and lexicographic combination enumeration.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A model: a strictly increasing list of column indices.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModelSubset(Vec<usize>);

impl ModelSubset {
    /// Builds a subset from arbitrary indices, sorting and removing duplicates.
    pub fn new(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        ModelSubset(indices)
    }

    /// Builds a subset from indices that must already be strictly increasing.
    pub fn from_sorted(indices: Vec<usize>) -> Result<Self> {
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput(format!(
                "subset indices must be strictly increasing: {indices:?}"
            )));
        }
        Ok(ModelSubset(indices))
    }

    pub(crate) fn from_sorted_unchecked(indices: Vec<usize>) -> Self {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        ModelSubset(indices)
    }

    pub fn empty() -> Self {
        ModelSubset(Vec::new())
    }

    pub fn range(start: usize, end: usize) -> Self {
        ModelSubset((start..end).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.0.binary_search(&j).is_ok()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.0.last().copied()
    }

    pub fn is_subset_of(&self, other: &ModelSubset) -> bool {
        self.0.iter().all(|&j| other.contains(j))
    }

    /// `self \ other`
    pub fn difference(&self, other: &ModelSubset) -> ModelSubset {
        ModelSubset(self.iter().filter(|&j| !other.contains(j)).collect())
    }

    pub fn intersection(&self, other: &ModelSubset) -> ModelSubset {
        ModelSubset(self.iter().filter(|&j| other.contains(j)).collect())
    }

    pub fn union(&self, other: &ModelSubset) -> ModelSubset {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        ModelSubset::new(v)
    }

    /// Indices of `[0, p)` not in the subset.
    pub fn complement(&self, p: usize) -> ModelSubset {
        ModelSubset((0..p).filter(|&j| !self.contains(j)).collect())
    }

    /// Positions of `other`'s elements inside `self` (both sorted); `None`
    /// if `other` is not a subset.
    pub fn positions_of(&self, other: &ModelSubset) -> Option<Vec<usize>> {
        other
            .iter()
            .map(|j| self.0.binary_search(&j).ok())
            .collect()
    }

    /// Merges two disjoint sorted lists into a subset.
    pub(crate) fn merge_disjoint(a: &[usize], b: &[usize]) -> ModelSubset {
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            if a[i] < b[j] {
                out.push(a[i]);
                i += 1;
            } else {
                out.push(b[j]);
                j += 1;
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        ModelSubset(out)
    }
}

impl From<Vec<usize>> for ModelSubset {
    fn from(v: Vec<usize>) -> Self {
        ModelSubset::new(v)
    }
}

impl fmt::Display for ModelSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, j) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{j}")?;
        }
        write!(f, "}}")
    }
}

/// Binomial coefficient, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Lexicographic `k`-combinations of a sorted pool.
#[derive(Debug, Clone)]
pub struct Combinations {
    pool: Vec<usize>,
    idx: Vec<usize>,
    done: bool,
}

impl Combinations {
    pub fn new(pool: Vec<usize>, k: usize) -> Self {
        let done = k > pool.len();
        Combinations {
            pool,
            idx: (0..k).collect(),
            done,
        }
    }

    fn advance(&mut self) {
        let k = self.idx.len();
        let n = self.pool.len();
        let mut i = k;
        while i > 0 {
            i -= 1;
            if self.idx[i] < n - k + i {
                self.idx[i] += 1;
                for j in i + 1..k {
                    self.idx[j] = self.idx[j - 1] + 1;
                }
                return;
            }
        }
        self.done = true;
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out: Vec<usize> = self.idx.iter().map(|&i| self.pool[i]).collect();
        if self.idx.is_empty() {
            self.done = true;
        } else {
            self.advance();
        }
        Some(out)
    }
}

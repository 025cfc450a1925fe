//! Input index subsets (ANOVA components).

use serde::{Deserialize, Serialize};
use std::fmt;

/// A sorted set of 0-based input indices. The empty subset is the mean term.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Subset(Vec<usize>);

impl Subset {
    pub fn new(indices: impl IntoIterator<Item = usize>) -> Self {
        let mut v: Vec<usize> = indices.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Subset(v)
    }

    pub fn empty() -> Self {
        Subset(Vec::new())
    }

    pub fn singleton(j: usize) -> Self {
        Subset(vec![j])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.0.binary_search(&j).is_ok()
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.0.last().copied()
    }

    pub fn is_subset_of(&self, other: &[usize]) -> bool {
        self.0.iter().all(|j| other.contains(j))
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (n, j) in self.0.iter().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "X{}", j + 1)?;
        }
        write!(f, "}}")
    }
}

/// All subsets of `inputs` with `1 <= |v| <= max_order`, ordered by size then lexicographically.
pub fn subsets_up_to(inputs: &[usize], max_order: usize) -> Vec<Subset> {
    let mut inputs = inputs.to_vec();
    inputs.sort_unstable();
    inputs.dedup();
    let mut out = Vec::new();
    for k in 1..=max_order.min(inputs.len()) {
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            out.push(Subset(idx.iter().map(|&i| inputs[i]).collect()));
            // advance to the next k-combination
            let mut pos = k;
            while pos > 0 && idx[pos - 1] == inputs.len() - k + pos - 1 {
                pos -= 1;
            }
            if pos == 0 {
                break;
            }
            idx[pos - 1] += 1;
            for q in pos..k {
                idx[q] = idx[q - 1] + 1;
            }
        }
    }
    out
}

/// Every subset of `{0, .., d-1}` including the empty one.
pub fn power_set(d: usize) -> Vec<Subset> {
    let all: Vec<usize> = (0..d).collect();
    let mut out = vec![Subset::empty()];
    out.extend(subsets_up_to(&all, d));
    out
}

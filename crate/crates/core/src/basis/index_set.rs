use std::cmp::Reverse;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexScheme {
    /// Every component at most `p`.
    TensorGrid,
    /// Component sum at most `p`.
    TotalOrder,
    /// `prod (j_k + 1) <= p + 1`.
    HyperbolicCross,
}

impl IndexScheme {
    fn admits(self, tuple: &[usize], p: usize) -> bool {
        match self {
            IndexScheme::TensorGrid => tuple.iter().all(|&j| j <= p),
            IndexScheme::TotalOrder => tuple.iter().sum::<usize>() <= p,
            IndexScheme::HyperbolicCross => {
                let mut prod: usize = 1;
                for &j in tuple {
                    prod = prod.saturating_mul(j + 1);
                    if prod > p + 1 {
                        return false;
                    }
                }
                true
            }
        }
    }
}

/// A set of multi-indices in graded lexicographic order: sorted by total
/// degree, ties broken by descending lexicographic order, so the constant
/// term is always first and `(1,0,..)` precedes `(0,1,..)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiIndexSet {
    dim: usize,
    scheme: IndexScheme,
    max_degree: usize,
    indices: Vec<Vec<usize>>,
}

impl MultiIndexSet {
    pub fn build(scheme: IndexScheme, dim: usize, max_degree: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument(
                "index set dimension must be at least 1".into(),
            ));
        }
        let mut indices = Vec::new();
        let mut current = vec![0usize; dim];
        // All three schemes are downward closed, so a prefix that fails with
        // zero tail can be pruned.
        fn recurse(
            scheme: IndexScheme,
            p: usize,
            k: usize,
            current: &mut Vec<usize>,
            out: &mut Vec<Vec<usize>>,
        ) {
            if k == current.len() {
                out.push(current.clone());
                return;
            }
            let mut j = 0;
            loop {
                current[k] = j;
                if !scheme.admits(current, p) {
                    break;
                }
                recurse(scheme, p, k + 1, current, out);
                j += 1;
            }
            current[k] = 0;
        }
        recurse(scheme, max_degree, 0, &mut current, &mut indices);
        sort_graded(&mut indices);
        Ok(MultiIndexSet {
            dim,
            scheme,
            max_degree,
            indices,
        })
    }

    /// Index set from an explicit list, keeping the parent's metadata.
    /// Duplicates are removed and the result re-sorted.
    pub(crate) fn derived(&self, mut indices: Vec<Vec<usize>>) -> Self {
        sort_graded(&mut indices);
        indices.dedup();
        MultiIndexSet {
            dim: self.dim,
            scheme: self.scheme,
            max_degree: self.max_degree,
            indices,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn scheme(&self) -> IndexScheme {
        self.scheme
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// Cardinality `N`.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[Vec<usize>] {
        &self.indices
    }

    pub fn get(&self, i: usize) -> Option<&[usize]> {
        self.indices.get(i).map(|v| v.as_slice())
    }

    pub fn iter(&self) -> impl Iterator<Item = &[usize]> {
        self.indices.iter().map(|v| v.as_slice())
    }

    pub fn contains(&self, tuple: &[usize]) -> bool {
        self.indices.iter().any(|t| t == tuple)
    }

    /// Largest single-axis degree in the set.
    pub fn max_component(&self) -> usize {
        self.indices
            .iter()
            .flat_map(|t| t.iter().copied())
            .max()
            .unwrap_or(0)
    }

    /// Positions of `other`'s tuples within `self`; errors if `other` is not
    /// a subset.
    pub fn positions_of(&self, other: &MultiIndexSet) -> Result<Vec<usize>> {
        let lookup: HashMap<&[usize], usize> = self
            .indices
            .iter()
            .enumerate()
            .map(|(i, t)| (t.as_slice(), i))
            .collect();
        other
            .iter()
            .map(|t| {
                lookup.get(t).copied().ok_or_else(|| {
                    Error::InvalidArgument(format!("multi-index {t:?} not in parent set"))
                })
            })
            .collect()
    }
}

fn sort_graded(indices: &mut [Vec<usize>]) {
    indices.sort_by_key(|t| (t.iter().sum::<usize>(), Reverse(t.clone())));
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Node to community (or component, or cluster) assignment.
///
/// Ids always form the contiguous range `0..n_communities`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    assign: Vec<usize>,
    n_communities: usize,
}

impl Partition {
    /// Relabels arbitrary ids by order of first appearance over node ids.
    pub fn from_labels(labels: &[usize]) -> Partition {
        let mut map = std::collections::HashMap::new();
        let assign = labels
            .iter()
            .map(|&l| {
                let next = map.len();
                *map.entry(l).or_insert(next)
            })
            .collect();
        Partition {
            assign,
            n_communities: map.len(),
        }
    }

    /// Keeps the given ids, which must already be contiguous.
    pub fn from_contiguous(assign: Vec<usize>) -> Result<Partition> {
        let n_communities = assign.iter().max().map_or(0, |m| m + 1);
        let mut seen = vec![false; n_communities];
        for &c in &assign {
            seen[c] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Invalid("community ids are not contiguous".into()));
        }
        Ok(Partition {
            assign,
            n_communities,
        })
    }

    pub fn singletons(n: usize) -> Partition {
        Partition {
            assign: (0..n).collect(),
            n_communities: n,
        }
    }

    pub fn whole(n: usize) -> Partition {
        Partition {
            assign: vec![0; n],
            n_communities: usize::from(n > 0),
        }
    }

    pub fn assign(&self) -> &[usize] {
        &self.assign
    }

    pub fn len(&self) -> usize {
        self.assign.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assign.is_empty()
    }

    pub fn n_communities(&self) -> usize {
        self.n_communities
    }

    pub fn community_of(&self, node: usize) -> usize {
        self.assign[node]
    }

    /// Members of each community, ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_communities];
        for (v, &c) in self.assign.iter().enumerate() {
            out[c].push(v);
        }
        out
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.n_communities];
        for &c in &self.assign {
            s[c] += 1;
        }
        s
    }

    pub fn canonical(&self) -> Partition {
        Partition::from_labels(&self.assign)
    }
}

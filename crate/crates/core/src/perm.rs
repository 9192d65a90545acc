//! Permutations of {0, .., k−1} for small k, with cycle-type utilities.

use crate::error::{Error, Result};

/// A permutation stored in one-line notation: `map[i]` is the image of i.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn identity(k: usize) -> Self {
        Permutation { map: (0..k).collect() }
    }

    pub fn from_one_line(map: Vec<usize>) -> Result<Self> {
        let k = map.len();
        let mut seen = vec![false; k];
        for &v in &map {
            if v >= k || seen[v] {
                return Err(Error::InvalidArgument(format!("not a bijection on 0..{k}: {map:?}")));
            }
            seen[v] = true;
        }
        Ok(Permutation { map })
    }

    pub fn order(&self) -> usize {
        self.map.len()
    }

    pub fn apply(&self, i: usize) -> usize {
        self.map[i]
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.map.len()];
        for (i, &v) in self.map.iter().enumerate() {
            inv[v] = i;
        }
        Permutation { map: inv }
    }

    /// Composition acting right-to-left: (self ∘ other)(i) = self(other(i)).
    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(self.order(), other.order());
        let map = (0..self.map.len()).map(|i| self.map[other.map[i]]).collect();
        Permutation { map }
    }

    /// Number of cycles, fixed points included.
    pub fn cycle_count(&self) -> usize {
        let k = self.map.len();
        let mut seen = vec![false; k];
        let mut cycles = 0;
        for start in 0..k {
            if seen[start] {
                continue;
            }
            cycles += 1;
            let mut cur = start;
            while !seen[cur] {
                seen[cur] = true;
                cur = self.map[cur];
            }
        }
        cycles
    }

    /// Cycle lengths sorted descending, e.g. [2, 1, 1] for a transposition in S4.
    pub fn cycle_type(&self) -> Vec<usize> {
        let k = self.map.len();
        let mut seen = vec![false; k];
        let mut lens = Vec::new();
        for start in 0..k {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut cur = start;
            while !seen[cur] {
                seen[cur] = true;
                cur = self.map[cur];
                len += 1;
            }
            lens.push(len);
        }
        lens.sort_unstable_by(|a, b| b.cmp(a));
        lens
    }
}

/// All k! permutations of {0, .., k−1} in lexicographic one-line order.
pub fn enumerate_permutations(k: usize) -> Result<Vec<Permutation>> {
    if k == 0 || k > 4 {
        return Err(Error::InvalidArgument(format!(
            "permutation order {k} out of supported range 1..=4"
        )));
    }
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..k).collect();
    loop {
        out.push(Permutation { map: current.clone() });
        // Next lexicographic permutation.
        let Some(i) = (0..k.saturating_sub(1)).rev().find(|&i| current[i] < current[i + 1]) else {
            break;
        };
        let j = (i + 1..k).rev().find(|&j| current[j] > current[i]).unwrap();
        current.swap(i, j);
        current[i + 1..].reverse();
    }
    Ok(out)
}

//! Set partitions of `{0, ..., r-1}` as restricted growth strings.
//!
//! A partition `pi` stands for the coincidence subspace where `t_i = t_j`
//! whenever `i` and `j` share a block. Finer partitions give larger
//! subspaces; the all-singletons partition is the whole space.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SetPartition {
    /// `labels[i]` is the block of `i`; first occurrences are `0, 1, 2, ...`.
    labels: Vec<u8>,
}

impl SetPartition {
    /// Any labelling; equal labels share a block.
    pub fn from_labels<T: PartialEq + Copy>(labels: &[T]) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidArgument("partition of the empty set".into()));
        }
        if labels.len() > u8::MAX as usize {
            return Err(Error::range("partition size", labels.len(), "at most 255"));
        }
        let mut seen: Vec<T> = Vec::new();
        let rgs = labels
            .iter()
            .map(|l| match seen.iter().position(|s| s == l) {
                Some(i) => i as u8,
                None => {
                    seen.push(*l);
                    (seen.len() - 1) as u8
                }
            })
            .collect();
        Ok(SetPartition { labels: rgs })
    }

    /// Builds from explicit blocks, which must cover `{0..r-1}` disjointly.
    pub fn from_blocks(r: usize, blocks: &[Vec<usize>]) -> Result<Self> {
        let mut labels = vec![usize::MAX; r];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::InvalidArgument("empty block".into()));
            }
            for &i in block {
                if i >= r || labels[i] != usize::MAX {
                    return Err(Error::InvalidArgument(format!(
                        "blocks do not partition 0..{r}"
                    )));
                }
                labels[i] = b;
            }
        }
        if labels.contains(&usize::MAX) {
            return Err(Error::InvalidArgument(format!("blocks do not cover 0..{r}")));
        }
        Self::from_labels(&labels)
    }

    pub fn singletons(r: usize) -> Self {
        SetPartition {
            labels: (0..r as u8).collect(),
        }
    }

    pub fn merged(r: usize) -> Self {
        SetPartition { labels: vec![0; r] }
    }

    /// The partition of `{0..r-1}` by equal values.
    pub fn of_values(values: &[u64]) -> Self {
        Self::from_labels(values).expect("nonempty")
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn block_count(&self) -> usize {
        self.labels.iter().copied().max().map_or(0, |m| m as usize + 1)
    }

    /// Codimension of the coincidence subspace: `r - #blocks`.
    pub fn codim(&self) -> usize {
        self.size() - self.block_count()
    }

    pub fn is_singletons(&self) -> bool {
        self.codim() == 0
    }

    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut blocks = vec![Vec::new(); self.block_count()];
        for (i, &l) in self.labels.iter().enumerate() {
            blocks[l as usize].push(i);
        }
        blocks
    }

    /// Is `self` at least as fine as `other` (every block of `self` inside a
    /// block of `other`)? Equivalently `L_self ⊇ L_other`.
    pub fn refines(&self, other: &SetPartition) -> bool {
        if self.size() != other.size() {
            return false;
        }
        let mut image = vec![u8::MAX; self.block_count()];
        for (&a, &b) in self.labels.iter().zip(&other.labels) {
            let slot = &mut image[a as usize];
            if *slot == u8::MAX {
                *slot = b;
            } else if *slot != b {
                return false;
            }
        }
        true
    }

    /// Do the values `t` agree within every block? That is, `t ∈ L_self`.
    pub fn holds_on(&self, t: &[u64]) -> bool {
        self.labels.iter().enumerate().all(|(i, &l)| {
            let first = self.labels.iter().position(|&x| x == l).expect("present");
            t[first] == t[i]
        })
    }
}

impl fmt::Display for SetPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for block in self.blocks() {
            write!(f, "{{")?;
            for (j, i) in block.iter().enumerate() {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{i}")?;
            }
            write!(f, "}}")?;
        }
        Ok(())
    }
}

impl Serialize for SetPartition {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Every partition of `{0..r-1}` in restricted-growth-string order.
pub fn all_partitions(r: usize) -> Vec<SetPartition> {
    if r == 0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut labels = vec![0u8; r];
    fn rec(i: usize, max: u8, labels: &mut Vec<u8>, out: &mut Vec<SetPartition>) {
        if i == labels.len() {
            out.push(SetPartition {
                labels: labels.clone(),
            });
            return;
        }
        for l in 0..=max + 1 {
            labels[i] = l;
            rec(i + 1, max.max(l), labels, out);
        }
    }
    labels[0] = 0;
    rec(1, 0, &mut labels, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bell_numbers() {
        let counts: Vec<usize> = (1..=7).map(|r| all_partitions(r).len()).collect();
        assert_eq!(counts, vec![1, 2, 5, 15, 52, 203, 877]);
    }

    #[test]
    fn refinement_order() {
        let s = SetPartition::singletons(3);
        let m = SetPartition::merged(3);
        let p = SetPartition::from_blocks(3, &[vec![0, 2], vec![1]]).unwrap();
        assert!(s.refines(&p) && p.refines(&m) && s.refines(&m));
        assert!(!p.refines(&s) && !m.refines(&p));
        assert!(p.refines(&p));
        assert_eq!(p.codim(), 1);
        assert_eq!(p.to_string(), "{0,2}{1}");
    }

    #[test]
    fn from_values_groups_equal_entries() {
        let p = SetPartition::of_values(&[0, 2, 0]);
        assert_eq!(p.blocks(), vec![vec![0, 2], vec![1]]);
        assert!(p.holds_on(&[4, 1, 4]));
        assert!(!p.holds_on(&[4, 1, 3]));
    }

    #[test]
    fn bad_blocks() {
        assert!(SetPartition::from_blocks(3, &[vec![0, 1]]).is_err());
        assert!(SetPartition::from_blocks(3, &[vec![0, 1], vec![1, 2]]).is_err());
        assert!(SetPartition::from_blocks(2, &[vec![0, 1], vec![]]).is_err());
    }
}

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::check_permutation;

/// A bijection from output channels to reference sources: channel `c` is
/// trained against source `perm[c]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Assignment(Vec<usize>);

impl Assignment {
    pub fn new(perm: Vec<usize>) -> Result<Self> {
        check_permutation(&perm, perm.len())?;
        Ok(Self(perm))
    }

    pub(crate) fn new_unchecked(perm: Vec<usize>) -> Self {
        Self(perm)
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn swap2() -> Self {
        Self(vec![1, 0])
    }

    pub fn perm(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<usize>> for Assignment {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        Assignment::new(v)
    }
}

impl From<Assignment> for Vec<usize> {
    fn from(a: Assignment) -> Self {
        a.0
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, j) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{j}")?;
        }
        Ok(())
    }
}

/// One assignment per mixture id, indexed densely by id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignmentTable {
    pub entries: Vec<Assignment>,
    pub epoch_tag: Option<usize>,
}

impl AssignmentTable {
    pub fn new(entries: Vec<Assignment>) -> Self {
        Self { entries, epoch_tag: None }
    }

    pub fn with_epoch(mut self, epoch: usize) -> Self {
        self.epoch_tag = Some(epoch);
        self
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, mixture_id: usize) -> Option<&Assignment> {
        self.entries.get(mixture_id)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if let Some(e) = self.epoch_tag {
            out.push_str(&format!("# epoch={e}\n"));
        }
        out.push_str("mixture_id,perm\n");
        for (i, a) in self.entries.iter().enumerate() {
            out.push_str(&format!("{i},{a}\n"));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let bad = |d: String| Error::format("assignment table", d);
        let mut epoch_tag = None;
        let mut entries = Vec::new();
        let mut header = false;
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(v) = comment.trim().strip_prefix("epoch=") {
                    epoch_tag = Some(v.trim().parse().map_err(|_| bad(format!("line {}: bad epoch", ln + 1)))?);
                }
                continue;
            }
            if !header {
                if line != "mixture_id,perm" {
                    return Err(bad(format!("line {}: expected header 'mixture_id,perm'", ln + 1)));
                }
                header = true;
                continue;
            }
            let (id, perm) = line.split_once(',').ok_or_else(|| bad(format!("line {}: missing ','", ln + 1)))?;
            let id: usize = id.trim().parse().map_err(|_| bad(format!("line {}: bad mixture id", ln + 1)))?;
            if id != entries.len() {
                return Err(bad(format!("line {}: mixture id {id} out of order", ln + 1)));
            }
            let perm = perm
                .split_whitespace()
                .map(|t| t.parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| bad(format!("line {}: bad permutation", ln + 1)))?;
            entries.push(Assignment::new(perm)?);
        }
        if !header {
            return Err(bad("missing header".into()));
        }
        Ok(Self { entries, epoch_tag })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_csv(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

fn differing(a: &AssignmentTable, b: &AssignmentTable) -> Result<usize> {
    if a.len() != b.len() {
        return Err(Error::CoverageMismatch);
    }
    Ok(a.entries.iter().zip(&b.entries).filter(|(x, y)| x != y).count())
}

fn percent(count: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * count as f64 / total as f64
    }
}

/// Number and percentage of mixtures whose assignment changed between two snapshots.
pub fn switch_count(prev: &AssignmentTable, curr: &AssignmentTable) -> Result<(usize, f64)> {
    let count = differing(prev, curr)?;
    Ok((count, percent(count, curr.len())))
}

/// Percentage of mixtures labeled differently by two tables.
pub fn diff_labels(a: &AssignmentTable, b: &AssignmentTable) -> Result<f64> {
    Ok(percent(differing(a, b)?, a.len()))
}

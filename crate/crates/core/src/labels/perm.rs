use crate::error::{Error, Result};

use super::Assignment;

/// Largest source count accepted by the exhaustive search.
pub const MAX_SOURCES: usize = 8;

pub fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    let ok = perm.len() == n
        && perm.iter().all(|&j| j < n && !std::mem::replace(&mut seen[j], true));
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidPermutation { perm: perm.to_vec(), n })
    }
}

/// Advances `p` to the next permutation in lexicographic order.
fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = p.windows(2).rposition(|w| w[0] < w[1]) else {
        return false;
    };
    let j = p.iter().rposition(|&x| x > p[i]).expect("successor exists");
    p.swap(i, j);
    p[i + 1..].reverse();
    true
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut p: Vec<usize> = (0..n).collect();
    let mut out = vec![p.clone()];
    while next_permutation(&mut p) {
        out.push(p.clone());
    }
    out
}

/// Minimum-total-loss pairing by exhaustive search; `loss[c][j]` scores output
/// `c` against source `j`. Ties go to the lexicographically smallest permutation.
pub fn best_permutation(loss: &[Vec<f64>]) -> Result<Assignment> {
    let n = loss.len();
    if n > MAX_SOURCES {
        return Err(Error::TooManySources(n));
    }
    if n == 0 || loss.iter().any(|row| row.len() != n) {
        return Err(Error::ShapeMismatch(format!("loss matrix must be square and non-empty, got {n} rows")));
    }
    if loss.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::InvalidConfig("loss matrix has non-finite entries".into()));
    }
    let total = |p: &[usize]| p.iter().enumerate().map(|(c, &j)| loss[c][j]).sum::<f64>();
    let mut p: Vec<usize> = (0..n).collect();
    let mut best = p.clone();
    let mut best_total = total(&p);
    while next_permutation(&mut p) {
        let t = total(&p);
        if t < best_total {
            best_total = t;
            best.copy_from_slice(&p);
        }
    }
    Ok(Assignment::new_unchecked(best))
}

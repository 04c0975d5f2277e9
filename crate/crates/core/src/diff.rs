//! Token-level longest-common-subsequence diff.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EditOp {
    Keep,
    Insert,
    Delete,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DiffSummary {
    pub kept: usize,
    pub inserted: usize,
    pub deleted: usize,
}

/// Edit script turning `old` into `new`, built from an LCS table.
/// Deletions are emitted before insertions at each divergence point.
pub fn diff<T: PartialEq>(old: &[T], new: &[T]) -> Vec<EditOp> {
    let (n, m) = (old.len(), new.len());
    // lcs[i][j] = LCS length of old[i..] and new[j..]
    let mut lcs = vec![vec![0u32; m + 1]; n + 1];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            lcs[i][j] = if old[i] == new[j] { lcs[i + 1][j + 1] + 1 } else { lcs[i + 1][j].max(lcs[i][j + 1]) };
        }
    }
    let mut ops = Vec::with_capacity(n + m);
    let (mut i, mut j) = (0, 0);
    while i < n && j < m {
        if old[i] == new[j] {
            ops.push(EditOp::Keep);
            i += 1;
            j += 1;
        } else if lcs[i + 1][j] >= lcs[i][j + 1] {
            ops.push(EditOp::Delete);
            i += 1;
        } else {
            ops.push(EditOp::Insert);
            j += 1;
        }
    }
    ops.extend(std::iter::repeat_n(EditOp::Delete, n - i));
    ops.extend(std::iter::repeat_n(EditOp::Insert, m - j));
    ops
}

pub fn summarize(ops: &[EditOp]) -> DiffSummary {
    ops.iter().fold(DiffSummary::default(), |mut s, op| {
        match op {
            EditOp::Keep => s.kept += 1,
            EditOp::Insert => s.inserted += 1,
            EditOp::Delete => s.deleted += 1,
        }
        s
    })
}

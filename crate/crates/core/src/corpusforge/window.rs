use std::ops::Range;

use crate::error::{Error, Result};

/// `(n - w) / t + 1` (floored) for `w <= n`.
pub fn window_count(n: usize, w: usize, t: usize) -> Result<usize> {
    if w == 0 || t == 0 {
        return Err(Error::Config("window size and step must be positive".into()));
    }
    if w > n {
        return Err(Error::Data(format!("window size {w} exceeds corpus size {n}")));
    }
    Ok((n - w) / t + 1)
}

/// Index ranges of the sliding windows over `n` documents: window `k`
/// covers `[k * t, k * t + w)`.
pub fn window(n: usize, w: usize, t: usize) -> Result<impl Iterator<Item = Range<usize>>> {
    let count = window_count(n, w, t)?;
    Ok((0..count).map(move |k| k * t..k * t + w))
}

use std::ops::Range;

use crate::error::{Error, Result};

/// Splits `0..batch_size` into `workers` contiguous micro-batches.
///
/// Sizes differ by at most one and the larger micro-batches come first.
pub fn partition_batch(batch_size: usize, workers: usize) -> Result<Vec<Range<usize>>> {
    if workers == 0 {
        return Err(Error::BadConfig(vec!["workers must be at least 1".into()]));
    }
    if batch_size < workers {
        return Err(Error::BatchTooSmall {
            batch: batch_size,
            workers,
        });
    }
    let base = batch_size / workers;
    let extra = batch_size % workers;
    let mut start = 0;
    Ok((0..workers)
        .map(|w| {
            let len = base + usize::from(w < extra);
            let range = start..start + len;
            start += len;
            range
        })
        .collect())
}

//! Small descriptive-statistics helpers shared by the bootstrap routines.

/// Linear-interpolation percentile (`q` in `[0, 100]`) of unsorted data.
///
/// Uses the same rank rule as NumPy's default (`(n - 1) * q / 100`).
pub fn percentile(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty(), "percentile of empty sample");
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    percentile_sorted(&sorted, q)
}

pub fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let rank = (sorted.len() - 1) as f64 * q.clamp(0.0, 100.0) / 100.0;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Parallel sum over `items` in fixed-size blocks. Each block is folded
/// sequentially and block totals are added in index order, so the result is
/// bit-identical for any thread count.
pub fn par_block_sum<T, F>(items: &[T], f: F) -> f64
where
    T: Sync,
    F: Fn(&T) -> f64 + Sync,
{
    use rayon::prelude::*;
    const BLOCK: usize = 4096;
    let partials: Vec<f64> = items
        .par_chunks(BLOCK)
        .map(|chunk| chunk.iter().map(&f).sum::<f64>())
        .collect();
    partials.iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentile_interpolates() {
        let v = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(percentile(&v, 0.0), 1.0);
        assert_eq!(percentile(&v, 100.0), 4.0);
        assert_eq!(percentile(&v, 50.0), 2.5);
    }

    #[test]
    fn single_value_percentiles_collapse() {
        assert_eq!(percentile(&[0.3], 2.5), 0.3);
        assert_eq!(percentile(&[0.3], 97.5), 0.3);
    }
}

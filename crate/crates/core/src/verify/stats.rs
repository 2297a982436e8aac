/// Normalized histogram of 1-D values over `[lo, hi]` with `bins` equal bins.
/// Values on the upper edge fall in the last bin.
pub fn histogram(values: impl IntoIterator<Item = f64>, lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    let mut counts = vec![0.0; bins];
    let mut n = 0usize;
    for v in values {
        let b = (((v - lo) / (hi - lo)) * bins as f64).floor();
        let b = (b.max(0.0) as usize).min(bins - 1);
        counts[b] += 1.0;
        n += 1;
    }
    if n > 0 {
        counts.iter_mut().for_each(|c| *c /= n as f64);
    }
    counts
}

/// Half the L1 distance between two probability vectors.
pub fn tv_distance(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// TV distance between the histograms of two 1-D samples.
pub fn histogram_tv(a: &[f64], b: &[f64], lo: f64, hi: f64, bins: usize) -> f64 {
    tv_distance(
        &histogram(a.iter().copied(), lo, hi, bins),
        &histogram(b.iter().copied(), lo, hi, bins),
    )
}

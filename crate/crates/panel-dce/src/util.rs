//! Small numeric helpers shared across modules.

/// Pairwise (cascade) summation. Gives a deterministic, well-conditioned sum
/// independent of how work was scheduled upstream.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn pairwise_mean(xs: &[f64]) -> f64 {
    pairwise_sum(xs) / xs.len() as f64
}

/// Pairwise sum of `f(k)` for `k` in `range` without materialising a buffer.
pub fn pairwise_sum_by(range: std::ops::Range<usize>, f: &dyn Fn(usize) -> f64) -> f64 {
    let len = range.end - range.start;
    if len <= 32 {
        return range.map(f).sum();
    }
    let mid = range.start + len / 2;
    pairwise_sum_by(range.start..mid, f) + pairwise_sum_by(mid..range.end, f)
}

/// Pearson correlation of two equal-length samples. `None` when either sample
/// is degenerate.
pub fn pearson_correlation(xs: &[f64], ys: &[f64]) -> Option<f64> {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = pairwise_mean(xs);
    let my = pairwise_mean(ys);
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    if sxx <= 0.0 || syy <= 0.0 || !(sxx * syy).is_finite() {
        return None;
    }
    let r = sxy / (sxx * syy).sqrt();
    let _ = n;
    Some(r)
}

/// Empirical quantile (linear interpolation between order statistics) of an
/// already sorted sample.
pub fn sorted_quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let q = q.clamp(0.0, 1.0);
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let frac = pos - lo as f64;
        sorted[lo] * (1.0 - frac) + sorted[hi] * frac
    }
}

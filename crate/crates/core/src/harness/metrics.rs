//! Learning-curve post-processing.

/// Trailing moving average: entry `i` is the mean of `values[i+1-window ..= i]`
/// (fewer at the start). `window = 1` is the identity.
pub fn smooth(values: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    let mut prefix = Vec::with_capacity(values.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for v in values {
        acc += v;
        prefix.push(acc);
    }
    (0..values.len())
        .map(|i| {
            let lo = (i + 1).saturating_sub(window);
            if window == 1 {
                values[i]
            } else {
                (prefix[i + 1] - prefix[lo]) / (i + 1 - lo) as f64
            }
        })
        .collect()
}

/// Mean of the last `window` entries.
pub fn tail_mean(values: &[f64], window: usize) -> f64 {
    let lo = values.len().saturating_sub(window.max(1));
    let tail = &values[lo..];
    tail.iter().sum::<f64>() / tail.len() as f64
}

/// Element-wise mean of equally long curves.
pub fn mean_curve(curves: &[Vec<f64>]) -> Vec<f64> {
    let len = curves.iter().map(Vec::len).min().unwrap_or(0);
    (0..len)
        .map(|i| curves.iter().map(|c| c[i]).sum::<f64>() / curves.len() as f64)
        .collect()
}

/// First index from which the curve stays within `rel_tol * |target|` of
/// `target` until the end, or `None` if the final point is outside the band.
pub fn settling_index(curve: &[f64], target: f64, rel_tol: f64) -> Option<usize> {
    let band = rel_tol * target.abs();
    let inside = |v: f64| (v - target).abs() <= band;
    if !curve.last().is_some_and(|&v| inside(v)) {
        return None;
    }
    let mut idx = curve.len() - 1;
    while idx > 0 && inside(curve[idx - 1]) {
        idx -= 1;
    }
    Some(idx)
}

/// First index at which the curve is within the band, regardless of what follows.
pub fn first_entry(curve: &[f64], target: f64, rel_tol: f64) -> Option<usize> {
    let band = rel_tol * target.abs();
    curve.iter().position(|&v| (v - target).abs() <= band)
}

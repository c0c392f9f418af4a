//! Least-squares fits and checkpoint grids.

/// Least-squares slope and intercept of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    if n < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Slope of `log y` against `log x`, ignoring pairs with a nonpositive entry.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let (lx, ly): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .unzip();
    linear_fit(&lx, &ly).map(|(s, _)| s)
}

/// About `count` integers spread geometrically over `[lo, hi]`, deduplicated,
/// always including both ends.
pub fn geometric_grid(lo: usize, hi: usize, count: usize) -> Vec<usize> {
    assert!(lo >= 1 && lo <= hi);
    if count < 2 || lo == hi {
        return if lo == hi { vec![lo] } else { vec![lo, hi] };
    }
    let r = (hi as f64 / lo as f64).ln() / (count - 1) as f64;
    let mut out: Vec<usize> = (0..count)
        .map(|k| ((lo as f64) * (r * k as f64).exp()).round() as usize)
        .map(|v| v.clamp(lo, hi))
        .collect();
    out[0] = lo;
    out[count - 1] = hi;
    out.dedup();
    out
}

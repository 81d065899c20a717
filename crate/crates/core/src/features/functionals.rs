//! Summary statistics over a sequence.

pub const ACOUSTIC_FUNCTIONALS: [&str; 6] = ["mean", "std", "min", "max", "median", "range"];
pub const TURN_FUNCTIONALS: [&str; 9] = ["min", "max", "mean", "std", "median", "q1", "q3", "range", "iqr"];

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Population standard deviation.
pub fn std_pop(x: &[f64]) -> f64 {
    let m = mean(x);
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64).sqrt()
}

/// Linearly interpolated quantile of sorted data at position `(n - 1) q`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = (sorted.len() - 1) as f64 * q;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (sorted[hi] - sorted[lo]) * frac
    }
}

fn sorted(x: &[f64]) -> Vec<f64> {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// `[mean, std, min, max, median, range]`; `x` must be non-empty.
pub fn acoustic(x: &[f64]) -> [f64; 6] {
    let s = sorted(x);
    let (lo, hi) = (s[0], s[s.len() - 1]);
    [mean(x), std_pop(x), lo, hi, quantile_sorted(&s, 0.5), hi - lo]
}

/// `[min, max, mean, std, median, q1, q3, range, iqr]`, all zero for an
/// empty sequence.
pub fn turn(x: &[f64]) -> [f64; 9] {
    if x.is_empty() {
        return [0.0; 9];
    }
    let s = sorted(x);
    let (lo, hi) = (s[0], s[s.len() - 1]);
    let q1 = quantile_sorted(&s, 0.25);
    let q3 = quantile_sorted(&s, 0.75);
    [lo, hi, mean(x), std_pop(x), quantile_sorted(&s, 0.5), q1, q3, hi - lo, q3 - q1]
}

pub fn delta(x: &[f64]) -> Vec<f64> {
    x.windows(2).map(|w| w[1] - w[0]).collect()
}

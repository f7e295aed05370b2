//! Empirical distribution utilities shared by the simulators.

use sha2::{Digest, Sha256};

use crate::{Error, Result};

/// Empirical `prob`-quantile of sorted data with the midpoint convention: when
/// `prob * n` is an integer `k`, return the average of the `k`-th and
/// `(k+1)`-th order statistics, otherwise the `ceil(prob * n)`-th.
pub fn empirical_quantile_sorted(sorted: &[f64], prob: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::invalid("empirical quantile of an empty sample"));
    }
    if !(prob > 0.0 && prob < 1.0) {
        return Err(Error::invalid(format!(
            "quantile level {prob} not in (0, 1)"
        )));
    }
    let n = sorted.len();
    let h = prob * n as f64;
    let k = h.round();
    if (h - k).abs() <= 1e-9 * h.max(1.0) && k >= 1.0 && (k as usize) < n {
        let k = k as usize;
        Ok(0.5 * (sorted[k - 1] + sorted[k]))
    } else {
        let idx = (h.ceil() as usize).clamp(1, n);
        Ok(sorted[idx - 1])
    }
}

/// Sort a copy of `data` ascending (NaN-free input assumed).
pub fn sorted(data: &[f64]) -> Vec<f64> {
    let mut v = data.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Two-sample Kolmogorov-Smirnov distance `sup_x |F_a(x) - F_b(x)|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return f64::NAN;
    }
    let a = sorted(a);
    let b = sorted(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// One-sample Kolmogorov-Smirnov distance against a CDF that may have atoms.
pub fn ks_one_sample(data: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let s = sorted(data);
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < s.len() {
        let x = s[i];
        let mut j = i;
        while j < s.len() && s[j] == x {
            j += 1;
        }
        let below = i as f64 / n;
        let upto = j as f64 / n;
        d = d
            .max((upto - cdf(x)).abs())
            .max((cdf(x.next_down()) - below).abs());
        i = j;
    }
    d
}

/// Half-width of the Dvoretzky-Kiefer-Wolfowitz band at level `alpha`.
pub fn dkw_epsilon(n: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * n as f64)).sqrt()
}

/// Short hex fingerprint of a sequence of floats (first 16 hex digits of SHA-256).
pub fn fingerprint(tag: &str, values: impl IntoIterator<Item = f64>) -> String {
    let mut h = Sha256::new();
    h.update(tag.as_bytes());
    for v in values {
        h.update(v.to_bits().to_le_bytes());
    }
    hex::encode(&h.finalize()[..8])
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

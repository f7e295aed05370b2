//! Chi-bar-squared mixtures: weights, distribution function, quantiles and
//! noncentral sampling.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::cone::{PolyhedralCone, MAX_DIM};
use crate::{par, rng, special, stats, Error, Result};

const MC_BLOCK: usize = 4096;

/// Mixture weights `w_0..w_p` of `sum_j w_j chi2_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChiBarWeights {
    weights: Vec<f64>,
}

impl ChiBarWeights {
    /// Validate and wrap a weight vector.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("weight vector is empty"));
        }
        if weights.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return Err(Error::invalid("weights must lie in [0, 1]"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("weights sum to {total}, not 1")));
        }
        Ok(Self { weights })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    /// Largest degrees of freedom `p`.
    pub fn p(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn get(&self, j: usize) -> f64 {
        self.weights.get(j).copied().unwrap_or(0.0)
    }
}

/// Weights with binomial standard errors from Monte Carlo.
#[derive(Clone, Debug, PartialEq)]
pub struct MonteCarloWeights {
    pub weights: ChiBarWeights,
    pub std_errors: Vec<f64>,
    pub n_samples: usize,
}

/// Closed-form weights for cones with at most two inequality constraints.
///
/// Equality constraints reduce the effective dimension; the inequality rows
/// are first projected onto their null space.
pub fn weights_closed_form(cone: &impl AsRef<PolyhedralCone>) -> Result<ChiBarWeights> {
    let cone = cone.as_ref();
    let p = cone.dim();
    let r = cone.n_constraints();
    let top = cone.span_dim();
    let mut w = vec![0.0; p + 1];
    match r {
        0 => w[top] = 1.0,
        1 => {
            w[top] = 0.5;
            w[top - 1] = 0.5;
        }
        2 => {
            let u1 = cone.project_span(cone.rows().row(0).transpose().as_slice());
            let u2 = cone.project_span(cone.rows().row(1).transpose().as_slice());
            let n1 = dot(&u1, &u1).sqrt();
            let n2 = dot(&u2, &u2).sqrt();
            let cosine = (-dot(&u1, &u2) / (n1 * n2)).clamp(-1.0, 1.0);
            let wp = cosine.acos() / (2.0 * PI);
            w[top] = wp;
            w[top - 1] = 0.5;
            w[top - 2] = 0.5 - wp;
        }
        _ => return Err(Error::UnsupportedRank(r)),
    }
    ChiBarWeights::new(w)
}

fn normal_vector(g: &mut impl Rng, out: &mut [f64]) {
    for v in out.iter_mut() {
        *v = g.sample(StandardNormal);
    }
}

/// Face-dimension frequencies of standard normal draws projected onto the cone.
pub fn weights_monte_carlo(
    cone: &impl AsRef<PolyhedralCone>,
    n_samples: usize,
    seed: u64,
) -> Result<MonteCarloWeights> {
    if n_samples == 0 {
        return Err(Error::invalid("n_samples must be at least 1"));
    }
    let freqs = face_frequencies(cone.as_ref(), &[], n_samples, seed)?;
    let n = n_samples as f64;
    let std_errors = freqs.iter().map(|w| (w * (1.0 - w) / n).sqrt()).collect();
    Ok(MonteCarloWeights {
        weights: renormalised(freqs)?,
        std_errors,
        n_samples,
    })
}

/// Empirical face-dimension frequencies of `P(mu + eps)`; `mu` may be empty
/// for the central case.
pub fn face_frequencies(
    cone: &PolyhedralCone,
    mu: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let p = cone.dim();
    if !mu.is_empty() {
        check_mean(mu, p)?;
    }
    let counts = par::map_blocks(n_samples, MC_BLOCK, |b, range| {
        let mut g = rng::substream(seed, b as u64);
        let mut z = [0.0f64; MAX_DIM];
        let mut c = vec![0u64; p + 1];
        for _ in range {
            normal_vector(&mut g, &mut z[..p]);
            for (zi, m) in z.iter_mut().zip(mu) {
                *zi += m;
            }
            c[cone.face_dimension_unchecked(&z[..p])] += 1;
        }
        c
    });
    let mut total = vec![0u64; p + 1];
    for c in counts {
        for (t, v) in total.iter_mut().zip(c) {
            *t += v;
        }
    }
    Ok(total
        .into_iter()
        .map(|c| c as f64 / n_samples as f64)
        .collect())
}

fn renormalised(freqs: Vec<f64>) -> Result<ChiBarWeights> {
    let total: f64 = freqs.iter().sum();
    ChiBarWeights::new(freqs.into_iter().map(|f| f / total).collect())
}

/// `sum_j w_j F_{chi2_j}(x)`.
pub fn chibar_cdf(w: &ChiBarWeights, x: f64) -> f64 {
    w.weights
        .iter()
        .enumerate()
        .filter(|(_, &wj)| wj > 0.0)
        .map(|(j, &wj)| wj * special::chi2_cdf(j, x))
        .sum::<f64>()
        .min(1.0)
}

/// Upper tail `1 - chibar_cdf(w, x)` without cancellation.
pub fn chibar_sf(w: &ChiBarWeights, x: f64) -> f64 {
    w.weights
        .iter()
        .enumerate()
        .filter(|(_, &wj)| wj > 0.0)
        .map(|(j, &wj)| wj * special::chi2_sf(j, x))
        .sum()
}

/// Smallest `x > 0` with `chibar_cdf(w, x) = prob`, by bisection.
pub fn chibar_quantile(w: &ChiBarWeights, prob: f64) -> Result<f64> {
    if !(prob > 0.0 && prob < 1.0) {
        return Err(Error::invalid(format!("probability {prob} outside (0, 1)")));
    }
    let atom = w.get(0);
    if prob <= atom {
        return Err(Error::NoFiniteQuantile { prob, atom });
    }
    let mut hi = 1.0;
    while chibar_cdf(w, hi) < prob {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::invalid("quantile search did not bracket"));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if chibar_cdf(w, mid) < prob {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi.max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Draws of `|P(mu + eps)|^2` with metadata for reproduction.
#[derive(Clone, Debug, PartialEq)]
pub struct NoncentralSample {
    pub draws: Vec<f64>,
    pub mu: Vec<f64>,
    pub cone_id: String,
    pub seed: u64,
}

fn check_mean(mu: &[f64], p: usize) -> Result<()> {
    if mu.len() != p {
        return Err(Error::invalid(format!(
            "mean has length {}, cone dimension is {p}",
            mu.len()
        )));
    }
    if mu.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite mean"));
    }
    Ok(())
}

/// Sample `|P_Delta(mu + eps)|^2` with `eps` standard normal.
pub fn noncentral_sample(
    cone: &impl AsRef<PolyhedralCone>,
    mu: &[f64],
    n: usize,
    seed: u64,
) -> Result<NoncentralSample> {
    let cone = cone.as_ref();
    let p = cone.dim();
    check_mean(mu, p)?;
    if n == 0 {
        return Err(Error::invalid("sample size must be at least 1"));
    }
    let blocks = par::map_blocks(n, MC_BLOCK, |b, range| {
        let mut g = rng::substream(seed, b as u64);
        let mut z = [0.0f64; MAX_DIM];
        range
            .map(|_| {
                normal_vector(&mut g, &mut z[..p]);
                for (zi, m) in z.iter_mut().zip(mu) {
                    *zi += m;
                }
                cone.projected_sq_norm(&z[..p])
            })
            .collect::<Vec<_>>()
    });
    Ok(NoncentralSample {
        draws: blocks.concat(),
        mu: mu.to_vec(),
        cone_id: cone.id(),
        seed,
    })
}

/// Empirical CDF comparison helper: sup distance between the sample and the mixture.
pub fn ks_against(w: &ChiBarWeights, draws: &[f64]) -> f64 {
    stats::ks_one_sample(draws, |x| chibar_cdf(w, x))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

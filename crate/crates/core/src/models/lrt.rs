//! Finite-sample likelihood-ratio statistics for the normal mixtures.
//!
//! For each grid value `t` the log-likelihood ratio against the null is
//! maximised over the mixing parameters and `X_n(t) = 2 (l_hat - l_0)`;
//! `Lambda_n` is the maximum over the grid. The one-component mixture is
//! concave in `xi` and uses golden-section search. The two-parameter mixture
//! uses projected Newton on the box `[-T, T] x [0, 1/2]` and falls back to a
//! `101 x 101` grid followed by a polish when Newton does not converge.

use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;

use super::{FiniteSampleKind, ModelSpec};
use crate::gp::GridSpec;
use crate::par;
use crate::rng::{substream, StreamRng};
use crate::{Error, Result};

/// Tolerance of the golden-section searches.
pub const GOLDEN_TOL: f64 = 1e-8;
/// Newton iteration cap before the grid fallback.
pub const MAX_NEWTON_ITER: usize = 200;
/// Points per axis of the fallback grid.
pub const FALLBACK_GRID: usize = 101;
/// Upper bound of the mixing weight in the two-parameter box.
pub const XI2_MAX: f64 = 0.5;

const CLAMP_SLACK: f64 = 1e-9;
const DECREMENT_TOL: f64 = 1e-12;

/// Data-generating parameter: mixing parameters `xi` and index `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct Theta {
    pub xi: Vec<f64>,
    pub t: f64,
}

impl Theta {
    /// Parameter of the simple null (`xi = 0`).
    pub fn null(kind: FiniteSampleKind) -> Self {
        match kind {
            FiniteSampleKind::Mix1 => Self {
                xi: vec![0.0],
                t: 0.0,
            },
            _ => Self {
                xi: vec![0.0, 0.0],
                t: 0.0,
            },
        }
    }
}

fn check_theta(kind: FiniteSampleKind, theta: &Theta) -> Result<()> {
    let ok = theta.t.is_finite()
        && match kind {
            FiniteSampleKind::Mix1 => theta.xi.len() == 1 && (0.0..=1.0).contains(&theta.xi[0]),
            _ => {
                theta.xi.len() == 2 && theta.xi[0].is_finite() && (0.0..=1.0).contains(&theta.xi[1])
            }
        };
    if ok {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "parameter {theta:?} outside the parameter space"
        )))
    }
}

fn draw(kind: FiniteSampleKind, theta: &Theta, n: usize, g: &mut StreamRng) -> Vec<f64> {
    let (base, weight) = match kind {
        FiniteSampleKind::Mix1 => (0.0, theta.xi[0]),
        _ => (theta.xi[0], theta.xi[1]),
    };
    (0..n)
        .map(|_| {
            let u: f64 = g.random();
            let e: f64 = g.sample(StandardNormal);
            if u < weight {
                theta.t + e
            } else {
                base + e
            }
        })
        .collect()
}

/// `n` draws from the mixture at `theta`, reproducible per seed.
pub fn generate_data(
    kind: FiniteSampleKind,
    theta: &Theta,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    check_theta(kind, theta)?;
    Ok(draw(kind, theta, n, &mut substream(seed, 0)))
}

/// Optimiser bookkeeping for one statistic.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Diagnostics {
    /// Total optimiser iterations over the grid.
    pub iterations: usize,
    /// Grid points where Newton did not converge.
    pub fallbacks: usize,
}

/// `Lambda_n` and the profile `X_n(t)` on the unmasked grid points.
#[derive(Clone, Debug, PartialEq)]
pub struct LrtStatistic {
    pub lambda: f64,
    pub profile: Vec<f64>,
    /// `X_n^0` of the composite null (zero for simple nulls).
    pub null_value: f64,
    pub diagnostics: Diagnostics,
}

fn clamp(x: f64) -> f64 {
    if x >= -CLAMP_SLACK {
        x.max(0.0)
    } else {
        x
    }
}

/// Golden-section maximisation of a unimodal `f` on `[lo, hi]`.
fn golden_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64, usize) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut iter = 0;
    while b - a > tol {
        iter += 1;
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let mut best = if fc >= fd { (c, fc) } else { (d, fd) };
    for x in [lo, hi] {
        let fx = f(x);
        if fx > best.1 {
            best = (x, fx);
        }
    }
    (best.0, best.1, iter)
}

/// `X_n(t)` of the one-component mixture with `d_i = exp(t y_i - t^2/2) - 1`.
fn mix1_profile(d: &[f64]) -> (f64, usize) {
    if d.iter().sum::<f64>() <= 0.0 {
        return (0.0, 0);
    }
    let ll = |xi: f64| d.iter().map(|&di| (xi * di).ln_1p()).sum::<f64>();
    let (_, value, iter) = golden_max(ll, 0.0, 1.0, GOLDEN_TOL);
    (clamp(2.0 * value), iter)
}

/// Signed distance from `x` to the bound in the direction of `g`.
fn to_bound(x: f64, g: f64, lo: f64, hi: f64) -> f64 {
    if g > 0.0 {
        hi - x
    } else if g < 0.0 {
        lo - x
    } else {
        0.0
    }
}

struct Mix3Problem<'a> {
    y: &'a [f64],
    b: Vec<f64>,
    t_max: f64,
}

impl Mix3Problem<'_> {
    fn value(&self, x1: f64, x2: f64) -> f64 {
        self.y
            .iter()
            .zip(&self.b)
            .map(|(&y, &b)| ((1.0 - x2) * (x1 * y - 0.5 * x1 * x1).exp() + x2 * b).ln())
            .sum()
    }

    /// Value, gradient and Hessian.
    fn derivatives(&self, x1: f64, x2: f64) -> (f64, [f64; 2], [f64; 3]) {
        let (mut f, mut g1, mut g2, mut h11, mut h12, mut h22) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        let w = 1.0 - x2;
        for (&y, &b) in self.y.iter().zip(&self.b) {
            let a = (x1 * y - 0.5 * x1 * x1).exp();
            let m = w * a + x2 * b;
            let r = y - x1;
            let da = w * a * r / m;
            let db = (b - a) / m;
            f += m.ln();
            g1 += da;
            g2 += db;
            h11 += w * a * (r * r - 1.0) / m - da * da;
            h12 += -a * r / m - da * db;
            h22 += -db * db;
        }
        (f, [g1, g2], [h11, h12, h22])
    }

    fn project(&self, x: [f64; 2]) -> [f64; 2] {
        [
            x[0].clamp(-self.t_max, self.t_max),
            x[1].clamp(0.0, XI2_MAX),
        ]
    }

    /// Projected Newton ascent with a bound active set and Armijo backtracking.
    fn newton(&self, start: [f64; 2], max_iter: usize) -> ([f64; 2], f64, usize, bool) {
        let lo = [-self.t_max, 0.0];
        let hi = [self.t_max, XI2_MAX];
        let mut x = self.project(start);
        let (mut f, mut g, mut h) = self.derivatives(x[0], x[1]);
        let scale = self.y.len() as f64;
        for iter in 1..=max_iter {
            let free: [bool; 2] = std::array::from_fn(|j| {
                let at_lo = x[j] <= lo[j] + 1e-14 && g[j] <= 0.0;
                let at_hi = x[j] >= hi[j] - 1e-14 && g[j] >= 0.0;
                !(at_lo || at_hi)
            });
            let pg: f64 = (0..2)
                .filter(|&j| free[j])
                .map(|j| g[j] * g[j])
                .sum::<f64>()
                .sqrt();
            if pg <= 1e-9 * scale.max(1.0) {
                return (x, f, iter - 1, true);
            }
            let (dir, newton_step) = match (free[0], free[1]) {
                (false, false) => return (x, f, iter - 1, true),
                (true, true) if h[0] < 0.0 && h[0] * h[2] - h[1] * h[1] > 0.0 => {
                    let det = h[0] * h[2] - h[1] * h[1];
                    (
                        [
                            (-h[2] * g[0] + h[1] * g[1]) / det,
                            (h[1] * g[0] - h[0] * g[1]) / det,
                        ],
                        true,
                    )
                }
                (true, true) => (self.curvature_step(x, g, h, lo, hi), false),
                (true, false) if h[0] < 0.0 => ([-g[0] / h[0], 0.0], true),
                (false, true) if h[2] < 0.0 => ([0.0, -g[1] / h[2]], true),
                (true, false) => ([to_bound(x[0], g[0], lo[0], hi[0]), 0.0], false),
                (false, true) => ([0.0, to_bound(x[1], g[1], lo[1], hi[1])], false),
            };
            // Newton decrement
            if newton_step && 0.5 * (g[0] * dir[0] + g[1] * dir[1]) < DECREMENT_TOL {
                return (x, f, iter - 1, true);
            }
            let mut step = 1.0;
            let mut moved = false;
            while step > 1e-12 {
                let cand = self.project([x[0] + step * dir[0], x[1] + step * dir[1]]);
                let gain = g[0] * (cand[0] - x[0]) + g[1] * (cand[1] - x[1]);
                let fc = self.value(cand[0], cand[1]);
                if fc.is_finite() && fc >= f + 1e-4 * gain {
                    let dx = (cand[0] - x[0]).abs().max((cand[1] - x[1]).abs());
                    x = cand;
                    (f, g, h) = self.derivatives(x[0], x[1]);
                    moved = true;
                    if dx < 1e-12 {
                        return (x, f, iter, true);
                    }
                    break;
                }
                step *= 0.5;
            }
            if !moved {
                return (x, f, iter, true);
            }
        }
        (x, f, max_iter, false)
    }

    /// Step along the eigenvector of the largest Hessian eigenvalue (oriented
    /// uphill) to the edge of the box, used when the Hessian is not negative
    /// definite.
    fn curvature_step(
        &self,
        x: [f64; 2],
        g: [f64; 2],
        h: [f64; 3],
        lo: [f64; 2],
        hi: [f64; 2],
    ) -> [f64; 2] {
        let half = 0.5 * (h[0] - h[2]);
        let lmax = 0.5 * (h[0] + h[2]) + (half * half + h[1] * h[1]).sqrt();
        let mut v = if h[1].abs() > 1e-300 {
            [h[1], lmax - h[0]]
        } else if h[0] >= h[2] {
            [1.0, 0.0]
        } else {
            [0.0, 1.0]
        };
        let norm = v[0].hypot(v[1]);
        v = [v[0] / norm, v[1] / norm];
        if g[0] * v[0] + g[1] * v[1] < 0.0 {
            v = [-v[0], -v[1]];
        }
        let reach = (0..2)
            .filter(|&j| v[j] != 0.0)
            .map(|j| {
                if v[j] > 0.0 {
                    (hi[j] - x[j]) / v[j]
                } else {
                    (lo[j] - x[j]) / v[j]
                }
            })
            .fold(f64::INFINITY, f64::min);
        if reach > 1e-12 {
            [reach * v[0], reach * v[1]]
        } else {
            [
                to_bound(x[0], g[0], lo[0], hi[0]),
                to_bound(x[1], g[1], lo[1], hi[1]),
            ]
        }
    }

    fn grid_search(&self) -> [f64; 2] {
        let mut best = ([0.0, 0.0], f64::NEG_INFINITY);
        for i in 0..FALLBACK_GRID {
            let x1 = -self.t_max + 2.0 * self.t_max * i as f64 / (FALLBACK_GRID - 1) as f64;
            for j in 0..FALLBACK_GRID {
                let x2 = XI2_MAX * j as f64 / (FALLBACK_GRID - 1) as f64;
                let v = self.value(x1, x2);
                if v > best.1 {
                    best = ([x1, x2], v);
                }
            }
        }
        best.0
    }

    /// Maximiser and `max l(xi) - l_0` over the box, with iteration count and
    /// fallback flag.
    fn maximise(&self, start: [f64; 2]) -> ([f64; 2], f64, usize, bool) {
        let (x, f, iter, converged) = self.newton(start, MAX_NEWTON_ITER);
        if converged {
            return (x, f, iter, false);
        }
        let (xp, fp, iter2, _) = self.newton(self.grid_search(), MAX_NEWTON_ITER);
        let (x, f) = if fp >= f { (xp, fp) } else { (x, f) };
        (x, f, iter + iter2, true)
    }
}

/// Index bound `T` used for the box of the mixing parameters.
fn box_bound(model: &ModelSpec) -> f64 {
    let (lo, hi, _) = model.axes[0];
    lo.abs().max(hi.abs())
}

fn kind_of(model: &ModelSpec) -> Result<FiniteSampleKind> {
    model
        .finite_sample
        .ok_or_else(|| Error::invalid(format!("model {} has no finite-sample engine", model.name)))
}

/// `Lambda_n` for a data set on the unmasked points of `grid`.
pub fn lrt_statistic(model: &ModelSpec, data: &[f64], grid: &GridSpec) -> Result<LrtStatistic> {
    let kind = kind_of(model)?;
    if data.is_empty() || data.iter().any(|y| !y.is_finite()) {
        return Err(Error::invalid("data must be a nonempty finite sample"));
    }
    let points = grid.unmasked_points();
    if points.is_empty() {
        return Err(Error::invalid("grid has no unmasked points"));
    }
    let t_max = box_bound(model);
    let n = data.len() as f64;
    let ybar = data.iter().sum::<f64>() / n;
    let mut diagnostics = Diagnostics::default();
    let mut profile = Vec::with_capacity(points.len());
    let null_value = match kind {
        FiniteSampleKind::Mix3Composite => {
            let ll = |x1: f64| n * (x1 * ybar - 0.5 * x1 * x1);
            let (_, v, iter) = golden_max(ll, -t_max, t_max, GOLDEN_TOL);
            diagnostics.iterations += iter;
            2.0 * v
        }
        _ => 0.0,
    };
    for t in points {
        let t = t[0];
        let b: Vec<f64> = data.iter().map(|&y| (t * y - 0.5 * t * t).exp()).collect();
        let x = match kind {
            FiniteSampleKind::Mix1 => {
                let d: Vec<f64> = b.iter().map(|bi| bi - 1.0).collect();
                let (x, iter) = mix1_profile(&d);
                diagnostics.iterations += iter;
                x
            }
            _ => {
                let problem = Mix3Problem { y: data, b, t_max };
                let (xi, f, iter, fallback) = problem.maximise([ybar.clamp(-t_max, t_max), 0.0]);
                diagnostics.iterations += iter;
                diagnostics.fallbacks += fallback as usize;
                if kind == FiniteSampleKind::Mix3Composite && xi[1] == 0.0 {
                    // maximiser lies in the null space
                    0.0
                } else {
                    clamp(2.0 * f - null_value)
                }
            }
        };
        profile.push(x);
    }
    let lambda = profile.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(LrtStatistic {
        lambda,
        profile,
        null_value,
        diagnostics,
    })
}

/// Replicated `Lambda_n` draws.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteSampleResult {
    pub lambda_draws: Vec<f64>,
    pub n: usize,
    pub model: String,
    pub seed: u64,
    pub grid_size: usize,
    /// Total optimiser iterations over all replicates.
    pub iterations: usize,
    /// Replicates where at least one grid point needed the fallback.
    pub failures: usize,
}

impl FiniteSampleResult {
    pub fn failure_rate(&self) -> f64 {
        self.failures as f64 / self.lambda_draws.len().max(1) as f64
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "rep,lambda_n")?;
        for (i, x) in self.lambda_draws.iter().enumerate() {
            writeln!(out, "{i},{x}")?;
        }
        Ok(())
    }
}

/// `reps` replicates of `Lambda_n` from samples of size `n` drawn at `theta`
/// (the null when `None`); replicate `k` uses substream `k` of `seed`.
pub fn finite_sample(
    model: &ModelSpec,
    grid: &GridSpec,
    n: usize,
    reps: usize,
    seed: u64,
    theta: Option<&Theta>,
) -> Result<FiniteSampleResult> {
    let kind = kind_of(model)?;
    if n == 0 || reps == 0 {
        return Err(Error::invalid(
            "sample size and replicate count must be positive",
        ));
    }
    let theta = theta.cloned().unwrap_or_else(|| Theta::null(kind));
    check_theta(kind, &theta)?;
    let stats = par::map_indices(reps, |rep| {
        let data = draw(kind, &theta, n, &mut substream(seed, rep as u64));
        lrt_statistic(model, &data, grid)
    });
    let mut draws = Vec::with_capacity(reps);
    let (mut iterations, mut failures) = (0, 0);
    for s in stats {
        let s = s?;
        draws.push(s.lambda);
        iterations += s.diagnostics.iterations;
        failures += (s.diagnostics.fallbacks > 0) as usize;
    }
    Ok(FiniteSampleResult {
        lambda_draws: draws,
        n,
        model: model.name.clone(),
        seed,
        grid_size: grid.unmasked().len(),
        iterations,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{composite_limit_mix3, mix1, mix3, ModelConfig};
    use crate::stats::mean;

    fn normal_quantiles(n: usize) -> Vec<f64> {
        (1..=n)
            .map(|i| probit((i as f64 - 0.5) / n as f64))
            .collect()
    }

    // bisection on the chi-square(1) cdf of x^2
    fn probit(p: f64) -> f64 {
        let cdf = |x: f64| 0.5 * (1.0 + (crate::special::chi2_cdf(1, x * x) * x.signum()));
        let (mut lo, mut hi) = (-10.0, 10.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn generated_data_follows_theta() {
        let k = FiniteSampleKind::Mix1;
        let a = generate_data(
            k,
            &Theta {
                xi: vec![0.0],
                t: 5.0,
            },
            4000,
            1,
        )
        .unwrap();
        let b = generate_data(
            k,
            &Theta {
                xi: vec![0.0],
                t: -2.0,
            },
            4000,
            1,
        )
        .unwrap();
        assert_eq!(a, b);
        let c = generate_data(
            k,
            &Theta {
                xi: vec![1.0],
                t: 3.0,
            },
            4000,
            2,
        )
        .unwrap();
        assert!((mean(&c) - 3.0).abs() < 4.0 / 4000f64.sqrt());
        let n = 20000;
        let d = generate_data(
            k,
            &Theta {
                xi: vec![0.5],
                t: 2.0,
            },
            n,
            3,
        )
        .unwrap();
        assert!((mean(&d) - 1.0).abs() < 4.0 / (n as f64).sqrt());
        assert!(generate_data(
            k,
            &Theta {
                xi: vec![1.5],
                t: 0.0
            },
            10,
            1
        )
        .is_err());
    }

    #[test]
    fn golden_section_finds_interior_max() {
        let (x, _, _) = golden_max(|x| -(x - 0.3f64).powi(2), 0.0, 1.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-8);
        let (x, _, _) = golden_max(|x| x, 0.0, 1.0, 1e-10);
        assert_eq!(x, 1.0);
    }

    #[test]
    fn mix1_profile_nonnegative_on_symmetric_data() {
        let m = mix1(&ModelConfig::default()).unwrap();
        let grid = m.grid(Some(41)).unwrap();
        let data = normal_quantiles(500);
        let s = lrt_statistic(&m, &data, &grid).unwrap();
        assert!(s.profile.iter().all(|x| x.is_finite() && *x >= 0.0));
        let mut rev = data.clone();
        rev.reverse();
        assert_eq!(
            lrt_statistic(&m, &rev, &grid).unwrap().lambda.to_bits(),
            s.lambda.to_bits()
        );
    }

    #[test]
    fn mix1_matches_dense_grid() {
        let m = mix1(&ModelConfig::default()).unwrap();
        let grid = GridSpec::uniform(0.7, 0.7, 1).unwrap();
        let data = generate_data(
            FiniteSampleKind::Mix1,
            &Theta {
                xi: vec![0.3],
                t: 0.7,
            },
            300,
            11,
        )
        .unwrap();
        let s = lrt_statistic(&m, &data, &grid).unwrap();
        let best = (0..=10000)
            .map(|k| {
                let xi = k as f64 / 10000.0;
                2.0 * data
                    .iter()
                    .map(|&y| (xi * ((0.7 * y - 0.245f64).exp() - 1.0)).ln_1p())
                    .sum::<f64>()
            })
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(s.lambda >= best - 1e-6);
        assert!(s.lambda - best < 1e-3);
    }

    #[test]
    fn mix3_newton_agrees_with_grid() {
        let m = mix3(&ModelConfig::default()).unwrap();
        let theta = Theta {
            xi: vec![0.1, 0.2],
            t: 0.8,
        };
        let data = generate_data(FiniteSampleKind::Mix3, &theta, 400, 5).unwrap();
        let b: Vec<f64> = data.iter().map(|&y| (0.8 * y - 0.32f64).exp()).collect();
        let p = Mix3Problem {
            y: &data,
            b,
            t_max: 1.0,
        };
        let (x, f, _, converged) = p.newton([mean(&data), 0.0], MAX_NEWTON_ITER);
        assert!(converged);
        assert!(x[1] >= 0.0 && x[1] <= XI2_MAX);
        let g = p.grid_search();
        assert!(f >= p.value(g[0], g[1]) - 1e-9);
        let grid = m.grid(Some(9)).unwrap();
        assert!(lrt_statistic(&m, &data, &grid).unwrap().lambda >= 0.0);
    }

    #[test]
    fn composite_is_simple_minus_mean_square() {
        let cfg = ModelConfig::default();
        let simple = mix3(&cfg).unwrap();
        let comp = composite_limit_mix3(&cfg).unwrap().reduced;
        let grid = simple.grid(Some(21)).unwrap();
        for seed in 0..5 {
            let data = generate_data(
                FiniteSampleKind::Mix3,
                &Theta::null(FiniteSampleKind::Mix3),
                500,
                seed,
            )
            .unwrap();
            let n = data.len() as f64;
            let ybar = mean(&data);
            let a = lrt_statistic(&simple, &data, &grid).unwrap();
            let b = lrt_statistic(&comp, &data, &grid).unwrap();
            assert!((b.null_value - n * ybar * ybar).abs() < 1e-6);
            assert!((b.lambda - (a.lambda - n * ybar * ybar).max(0.0)).abs() < 1e-6);
        }
    }

    #[test]
    fn replicates_reproducible() {
        let m = mix1(&ModelConfig::default()).unwrap();
        let grid = m.grid(Some(11)).unwrap();
        let a = finite_sample(&m, &grid, 100, 20, 9, None).unwrap();
        let b = finite_sample(&m, &grid, 100, 20, 9, None).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.grid_size, 10);
        assert!(a.lambda_draws.iter().all(|x| *x >= 0.0));
    }
}

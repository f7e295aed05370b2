//! Correlation kernels of the normal-mixture and polar-coordinate models.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix2};

use crate::gp::Kernel;
use crate::{Error, Result};

/// Information below which an index value is treated as singular.
pub const SINGULAR_TOL: f64 = 1e-8;

/// `e^x - 1 - x`, accurate near zero.
pub fn expm1_minus_x(x: f64) -> f64 {
    if x.abs() < 0.5 {
        let mut term = x * x / 2.0;
        let mut sum: f64 = 0.0;
        let mut k = 2.0;
        while term.abs() > 1e-18 * sum.abs() || sum == 0.0 {
            sum += term;
            k += 1.0;
            term *= x / k;
            if term == 0.0 {
                break;
            }
        }
        sum
    } else {
        x.exp_m1() - x
    }
}

/// One-component mixture `(1 - xi) N(0,1) + xi N(t,1)`:
/// `rho(t,t') = (e^{tt'} - 1) / sqrt((e^{t^2} - 1)(e^{t'^2} - 1))`.
#[derive(Clone, Debug, Default)]
pub struct Mix1Kernel;

impl Mix1Kernel {
    pub fn information(t: f64, s: f64) -> f64 {
        (t * s).exp_m1()
    }
}

impl Kernel for Mix1Kernel {
    fn dim(&self) -> usize {
        1
    }
    fn index_dim(&self) -> usize {
        1
    }
    fn rho(&self, t: &[f64], s: &[f64]) -> DMatrix<f64> {
        let (t, s) = (t[0], s[0]);
        let v =
            Self::information(t, s) / (Self::information(t, t) * Self::information(s, s)).sqrt();
        DMatrix::from_element(1, 1, v)
    }
    fn root_transpose(&self, t: &[f64]) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, Self::information(t[0], t[0]).sqrt())
    }
    fn is_singular(&self, t: &[f64]) -> bool {
        !(Self::information(t[0], t[0]) >= SINGULAR_TOL)
    }
    fn name(&self) -> String {
        "mix1".into()
    }
}

/// Mixture with unknown mean and variance of the second component,
/// `t = (t1, t2)` with `0 < t2 < 2`.
#[derive(Clone, Debug, Default)]
pub struct Mix2Kernel;

impl Mix2Kernel {
    fn check(t: &[f64]) -> Result<()> {
        if !(t[1] > 0.0 && t[1] < 2.0) {
            return Err(Error::Domain(format!(
                "variance t2 = {} outside (0, 2)",
                t[1]
            )));
        }
        Ok(())
    }

    /// `E[r_t(Y) r_s(Y)] - 1` for `Y ~ N(0,1)` in closed form, where `r_t` is
    /// the density ratio `N(t1, t2) / N(0, 1)`.
    pub fn information(t: &[f64], s: &[f64]) -> Result<f64> {
        Self::check(t)?;
        Self::check(s)?;
        let (a, b) = (t[0], t[1]);
        let (a2, b2) = (s[0], s[1]);
        let c = 1.0 / b + 1.0 / b2 - 1.0;
        let d = a / b + a2 / b2;
        let log_e =
            d * d / (2.0 * c) - a * a / (2.0 * b) - a2 * a2 / (2.0 * b2) - 0.5 * (b * b2 * c).ln();
        Ok(log_e.exp_m1())
    }

    /// Score `r_t(y) - 1`.
    pub fn score(t: &[f64], y: f64) -> f64 {
        let (a, b) = (t[0], t[1]);
        (0.5 * (1.0 - 1.0 / b) * y * y + a / b * y - a * a / (2.0 * b) - 0.5 * b.ln()).exp() - 1.0
    }

    /// Same quantity by Gauss-Hermite quadrature with `nodes` nodes.
    pub fn information_quadrature(t: &[f64], s: &[f64], nodes: usize) -> Result<f64> {
        Self::check(t)?;
        Self::check(s)?;
        let (x, w) = gauss_hermite(nodes);
        Ok(x.iter()
            .zip(&w)
            .map(|(&y, &wk)| wk * Self::score(t, y) * Self::score(s, y))
            .sum())
    }
}

impl Kernel for Mix2Kernel {
    fn dim(&self) -> usize {
        1
    }
    fn index_dim(&self) -> usize {
        2
    }
    fn rho(&self, t: &[f64], s: &[f64]) -> DMatrix<f64> {
        let i = |a: &[f64], b: &[f64]| Self::information(a, b).unwrap_or(f64::NAN);
        DMatrix::from_element(1, 1, i(t, s) / (i(t, t) * i(s, s)).sqrt())
    }
    fn root_transpose(&self, t: &[f64]) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, Self::information(t, t).unwrap_or(f64::NAN).sqrt())
    }
    fn is_singular(&self, t: &[f64]) -> bool {
        (t[0] == 0.0 && t[1] == 1.0) || !(Self::information(t, t).unwrap_or(0.0) >= SINGULAR_TOL)
    }
    fn name(&self) -> String {
        "mix2".into()
    }
}

/// Nodes and weights of the `n`-point Gauss-Hermite rule for `E f(Y)`,
/// `Y ~ N(0,1)` (Golub-Welsch).
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            (i.max(j) as f64).sqrt()
        } else {
            0.0
        }
    });
    let eig = jacobi.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| (eig.eigenvalues[k], eig.eigenvectors[(0, k)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// `sigma_t = sqrt(e^{t^2} - 1 - t^2)`.
pub fn sigma(t: f64) -> f64 {
    expm1_minus_x(t * t).sqrt()
}

/// Smallest eigenvalue of `[[1, t], [t, e^{t^2} - 1]]`.
pub fn mix3_min_eigenvalue(t: f64) -> f64 {
    let i22 = (t * t).exp_m1();
    let det = expm1_minus_x(t * t);
    let tr = 1.0 + i22;
    let big = 0.5 * (tr + ((1.0 - i22).powi(2) + 4.0 * t * t).sqrt());
    det / big
}

/// Two-parameter mixture `(1 - xi2) N(xi1, 1) + xi2 N(t, 1)`:
/// `rho(t,t') = diag(1, sigma_{tt'} / (sigma_t sigma_t'))`.
#[derive(Clone, Debug, Default)]
pub struct Mix3Kernel;

impl Mix3Kernel {
    /// Lower-triangular root `A(t)` of `[[1, t], [t, e^{t^2} - 1]]`.
    pub fn root(t: f64) -> Matrix2<f64> {
        Matrix2::new(1.0, 0.0, t, sigma(t))
    }
}

impl Kernel for Mix3Kernel {
    fn dim(&self) -> usize {
        2
    }
    fn index_dim(&self) -> usize {
        1
    }
    fn rho(&self, t: &[f64], s: &[f64]) -> DMatrix<f64> {
        let r = SigmaKernel::correlation(t[0], s[0]);
        DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, r])
    }
    fn root_transpose(&self, t: &[f64]) -> DMatrix<f64> {
        let a = Self::root(t[0]).transpose();
        DMatrix::from_column_slice(2, 2, a.as_slice())
    }
    fn is_singular(&self, t: &[f64]) -> bool {
        !(mix3_min_eigenvalue(t[0]) >= SINGULAR_TOL)
    }
    fn name(&self) -> String {
        "mix3".into()
    }
}

/// Scalar kernel `sigma_{tt'} / (sigma_t sigma_t')` of the second component
/// of [`Mix3Kernel`].
#[derive(Clone, Debug, Default)]
pub struct SigmaKernel;

impl SigmaKernel {
    pub fn correlation(t: f64, s: f64) -> f64 {
        expm1_minus_x(t * s) / (sigma(t) * sigma(s))
    }
}

impl Kernel for SigmaKernel {
    fn dim(&self) -> usize {
        1
    }
    fn index_dim(&self) -> usize {
        1
    }
    fn rho(&self, t: &[f64], s: &[f64]) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, Self::correlation(t[0], s[0]))
    }
    fn root_transpose(&self, t: &[f64]) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, sigma(t[0]))
    }
    fn is_singular(&self, t: &[f64]) -> bool {
        !(mix3_min_eigenvalue(t[0]) >= SINGULAR_TOL)
    }
    fn name(&self) -> String {
        "mix3-composite".into()
    }
}

/// Polar reparametrisation `eta = eta0 + xi (cos t, sin t)` of a bivariate
/// problem with information `I_bar`: `rho(t,t') = cos(g(t) - g(t'))` where
/// `(cos g, sin g)` is the direction of `A_bar J(t)`.
#[derive(Clone, Debug)]
pub struct PolarKernel {
    ibar: Matrix2<f64>,
    abar: Matrix2<f64>,
}

impl PolarKernel {
    pub fn new(ibar: Matrix2<f64>) -> Result<Self> {
        let abar = crate::linkage::information_root(&ibar, crate::linkage::RootKind::Symmetric)
            .map_err(|_| Error::invalid("polar information matrix must be positive definite"))?;
        Ok(Self { ibar, abar })
    }

    pub fn ibar(&self) -> &Matrix2<f64> {
        &self.ibar
    }

    /// Symmetric root `A_bar`.
    pub fn abar(&self) -> &Matrix2<f64> {
        &self.abar
    }

    /// `A_bar J(t)`.
    pub fn direction(&self, t: f64) -> (f64, f64) {
        let v = self.abar * nalgebra::Vector2::new(t.cos(), t.sin());
        (v[0], v[1])
    }

    /// Transformed angle `g(t)` in `[0, 2 pi)`.
    pub fn angle(&self, t: f64) -> f64 {
        let (x, y) = self.direction(t);
        y.atan2(x).rem_euclid(2.0 * PI)
    }
}

impl Kernel for PolarKernel {
    fn dim(&self) -> usize {
        1
    }
    fn index_dim(&self) -> usize {
        1
    }
    fn rho(&self, t: &[f64], s: &[f64]) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, (self.angle(t[0]) - self.angle(s[0])).cos())
    }
    fn root_transpose(&self, t: &[f64]) -> DMatrix<f64> {
        let (x, y) = self.direction(t[0]);
        DMatrix::from_element(1, 1, x.hypot(y))
    }
    fn features(&self, t: &[f64]) -> Option<DMatrix<f64>> {
        let (x, y) = self.direction(t[0]);
        let n = x.hypot(y);
        Some(DMatrix::from_row_slice(1, 2, &[x / n, y / n]))
    }
    fn name(&self) -> String {
        "polar".into()
    }
}

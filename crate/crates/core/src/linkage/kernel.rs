//! Stationary correlation kernels `rho(s) = sum_l kappa_l exp(-2 l |s|)`.

use nalgebra::{DMatrix, Matrix2};

use super::spectral::{SpectralDecomposition, UnilinealModel};
use crate::gp::Kernel;
use crate::{Error, Result};

/// Tolerance on `sum_l kappa_l = Id` for computed decompositions.
pub const DECOMPOSITION_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct LinkageKernel {
    kappas: Vec<(usize, DMatrix<f64>)>,
    root_transpose: DMatrix<f64>,
    name: String,
}

fn deviation_from_identity(kappas: &[(usize, DMatrix<f64>)], p: usize) -> f64 {
    let total = kappas
        .iter()
        .fold(DMatrix::zeros(p, p), |acc, (_, k)| acc + k);
    (total - DMatrix::<f64>::identity(p, p)).amax()
}

impl LinkageKernel {
    /// Kernel from `(l, kappa_l)` pairs; fails when their sum is further than
    /// `tol` from the identity.
    pub fn new(
        name: impl Into<String>,
        kappas: Vec<(usize, DMatrix<f64>)>,
        root_transpose: DMatrix<f64>,
        tol: f64,
    ) -> Result<Self> {
        let p = root_transpose.nrows();
        if root_transpose.ncols() != p || kappas.iter().any(|(_, k)| k.shape() != (p, p)) {
            return Err(Error::invalid(
                "kappa matrices and root must be square of equal order",
            ));
        }
        if kappas.iter().any(|(l, _)| *l == 0) {
            return Err(Error::invalid("kappa index l must be at least 1"));
        }
        let deviation = deviation_from_identity(&kappas, p);
        if !(deviation <= tol) {
            return Err(Error::InconsistentDecomposition { deviation });
        }
        let kappas = kappas.into_iter().filter(|(_, k)| k.amax() > 0.0).collect();
        Ok(Self {
            kappas,
            root_transpose,
            name: name.into(),
        })
    }

    pub fn from_decomposition(name: impl Into<String>, d: &SpectralDecomposition) -> Result<Self> {
        let kappas = d
            .kappas()
            .into_iter()
            .map(|(l, k)| (l, to_dmatrix(&k)))
            .collect();
        Self::new(
            name,
            kappas,
            to_dmatrix(&d.root().transpose()),
            DECOMPOSITION_TOL,
        )
    }

    /// Kernel from rounded printed matrices: accepted when the sum is within
    /// `tol` of the identity, then rescaled as `S^{-1/2} kappa_l S^{-1/2}` so
    /// the sum is exactly the identity.
    pub fn from_rounded(
        name: impl Into<String>,
        kappas: &[(usize, Matrix2<f64>)],
        root_transpose: Matrix2<f64>,
        tol: f64,
    ) -> Result<Self> {
        let raw: Vec<(usize, DMatrix<f64>)> =
            kappas.iter().map(|(l, k)| (*l, to_dmatrix(k))).collect();
        let deviation = deviation_from_identity(&raw, 2);
        if !(deviation <= tol) {
            return Err(Error::InconsistentDecomposition { deviation });
        }
        let total: Matrix2<f64> = kappas.iter().map(|(_, k)| k).sum();
        let eig = total.symmetric_eigen();
        let inv_sqrt = eig.eigenvectors
            * Matrix2::from_diagonal(&eig.eigenvalues.map(|x| 1.0 / x.sqrt()))
            * eig.eigenvectors.transpose();
        let scaled = kappas
            .iter()
            .map(|(l, k)| (*l, to_dmatrix(&(inv_sqrt * k * inv_sqrt))))
            .collect();
        Self::new(name, scaled, to_dmatrix(&root_transpose), 1e-12)
    }

    pub fn unilineal(name: impl Into<String>, model: &UnilinealModel) -> Result<Self> {
        let kappas = model
            .kappas
            .iter()
            .enumerate()
            .skip(1)
            .map(|(l, &k)| (l, DMatrix::from_element(1, 1, k)))
            .collect();
        Self::new(
            name,
            kappas,
            DMatrix::from_element(1, 1, model.information.sqrt()),
            DECOMPOSITION_TOL,
        )
    }

    /// `rho(s)` at lag `s`.
    pub fn rho_at(&self, s: f64) -> DMatrix<f64> {
        let p = self.root_transpose.nrows();
        self.kappas
            .iter()
            .fold(DMatrix::zeros(p, p), |acc, (l, k)| {
                acc + k * (-2.0 * *l as f64 * s.abs()).exp()
            })
    }

    pub fn kappas(&self) -> &[(usize, DMatrix<f64>)] {
        &self.kappas
    }
}

impl Kernel for LinkageKernel {
    fn dim(&self) -> usize {
        self.root_transpose.nrows()
    }
    fn index_dim(&self) -> usize {
        1
    }
    fn rho(&self, t: &[f64], s: &[f64]) -> DMatrix<f64> {
        self.rho_at(s[0] - t[0])
    }
    fn root_transpose(&self, _t: &[f64]) -> DMatrix<f64> {
        self.root_transpose.clone()
    }
    fn name(&self) -> String {
        self.name.clone()
    }
}

pub(crate) fn to_dmatrix(m: &Matrix2<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(2, 2, m.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linkage::{walsh_decompose, Pedigree, RootKind, ScoreTable};
    use approx::assert_abs_diff_eq;

    #[test]
    fn sib_pair_kernel() {
        let t = ScoreTable::new(&Pedigree::sibship(2).unwrap(), 0.1).unwrap();
        let k = LinkageKernel::from_decomposition(
            "sib",
            &walsh_decompose(&t, RootKind::Cholesky).unwrap(),
        )
        .unwrap();
        assert_abs_diff_eq!(k.rho_at(0.0), DMatrix::identity(2, 2), epsilon = 1e-10);
        let want = DMatrix::from_row_slice(2, 2, &[(-2.0f64).exp(), 0.0, 0.0, (-4.0f64).exp()]);
        assert_abs_diff_eq!(k.rho(&[0.0], &[0.5]), want, epsilon = 1e-10);
    }

    #[test]
    fn inconsistent_kappas_rejected() {
        let half = DMatrix::identity(2, 2) * 0.5;
        let err =
            LinkageKernel::new("x", vec![(1, half)], DMatrix::identity(2, 2), 1e-8).unwrap_err();
        assert!(matches!(err, Error::InconsistentDecomposition { .. }));
    }
}

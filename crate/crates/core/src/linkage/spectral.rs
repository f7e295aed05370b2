//! Spectral decomposition of the score covariance, chi-bar weights of the
//! linkage boundary, family-type mixtures, unilineal pairs and MLS scores.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix2};

use super::pedigree::Pedigree;
use super::score::ScoreTable;
use crate::chibar::ChiBarWeights;
use crate::cone::{PolyhedralCone, TransformedCone};
use crate::{Error, Result};

/// Which square root `A` of the information (`A A^T = I`) to use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RootKind {
    /// Lower-triangular `A`, so `A^T` is upper triangular.
    #[default]
    Cholesky,
    /// The symmetric positive definite root.
    Symmetric,
}

fn check_pd(i: &Matrix2<f64>) -> Result<()> {
    let det = i[(0, 0)] * i[(1, 1)] - i[(0, 1)] * i[(1, 0)];
    let ok = i.iter().all(|x| x.is_finite())
        && (i[(0, 1)] - i[(1, 0)]).abs() <= 1e-12 * i.amax()
        && i[(0, 0)] > 0.0
        && i[(1, 1)] > 0.0
        && det > 1e-14 * i[(0, 0)] * i[(1, 1)];
    if ok {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "information matrix {i:?} is not positive definite"
        )))
    }
}

/// Root `A` with `A A^T = I`.
pub fn information_root(i: &Matrix2<f64>, kind: RootKind) -> Result<Matrix2<f64>> {
    check_pd(i).map_err(|e| Error::SingularInformation(e.to_string()))?;
    match kind {
        RootKind::Cholesky => Ok(i.cholesky().expect("positive definite").l()),
        RootKind::Symmetric => {
            let eig = i.symmetric_eigen();
            let d = Matrix2::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
            Ok(eig.eigenvectors * d * eig.eigenvectors.transpose())
        }
    }
}

/// Weight of the `chi2_2` component, `acos(I12 / sqrt(I11 I22)) / (2 pi)`.
pub fn linkage_w2(i: &Matrix2<f64>) -> Result<f64> {
    check_pd(i)?;
    let c = (i[(0, 1)] / (i[(0, 0)] * i[(1, 1)]).sqrt()).clamp(-1.0, 1.0);
    Ok(c.acos() / (2.0 * PI))
}

/// `Delta = A^T [0, inf)^2` for the given root.
pub fn linkage_cone(i: &Matrix2<f64>, kind: RootKind) -> Result<TransformedCone> {
    let a = information_root(i, kind)?;
    let base = PolyhedralCone::orthant(2)?;
    TransformedCone::new(base, DMatrix::from_column_slice(2, 2, a.as_slice()))
}

/// Rows of `U = A^{-T}` scaled to unit length.
pub fn boundary_u(i: &Matrix2<f64>, kind: RootKind) -> Result<Matrix2<f64>> {
    let cone = linkage_cone(i, kind)?;
    let u = cone.unit_rows_u();
    Ok(Matrix2::from_iterator(u.iter().copied()))
}

/// `chi2_0, chi2_1, chi2_2` weights `(0.5 - w2, 0.5, w2)`.
pub fn linkage_weights(i: &Matrix2<f64>) -> Result<ChiBarWeights> {
    let w2 = linkage_w2(i)?;
    ChiBarWeights::new(vec![0.5 - w2, 0.5, w2])
}

/// Walsh spectrum of a score table grouped by Hamming weight.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralDecomposition {
    m: usize,
    information: Matrix2<f64>,
    root: Matrix2<f64>,
    group_sums: Vec<Matrix2<f64>>,
    kappas: Vec<Matrix2<f64>>,
}

impl SpectralDecomposition {
    pub fn n_meioses(&self) -> usize {
        self.m
    }

    pub fn information(&self) -> &Matrix2<f64> {
        &self.information
    }

    /// Root `A` used for the normalisation.
    pub fn root(&self) -> &Matrix2<f64> {
        &self.root
    }

    /// `sum_{|w| = l} R(w) R(w)^T`.
    pub fn group_sum(&self, l: usize) -> Matrix2<f64> {
        self.group_sums
            .get(l)
            .copied()
            .unwrap_or_else(Matrix2::zeros)
    }

    /// `kappa_l = A^{-1} group_sum(l) A^{-T}`, zero outside `1..=m`.
    pub fn kappa(&self, l: usize) -> Matrix2<f64> {
        if l == 0 {
            return Matrix2::zeros();
        }
        self.kappas.get(l).copied().unwrap_or_else(Matrix2::zeros)
    }

    /// `(l, kappa_l)` for `l = 1..=m`.
    pub fn kappas(&self) -> Vec<(usize, Matrix2<f64>)> {
        (1..=self.m).map(|l| (l, self.kappa(l))).collect()
    }
}

/// Group the Walsh coefficients of `table` by Hamming weight and normalise
/// them by a root of the information.
pub fn walsh_decompose(table: &ScoreTable, kind: RootKind) -> Result<SpectralDecomposition> {
    let group_sums = table.group_sums(table)?;
    let information = group_sums.iter().sum::<Matrix2<f64>>();
    let root = information_root(&information, kind)?;
    let inv = root
        .try_inverse()
        .ok_or_else(|| Error::SingularInformation("root is singular".into()))?;
    let kappas = group_sums
        .iter()
        .map(|g| inv * g * inv.transpose())
        .collect();
    Ok(SpectralDecomposition {
        m: table.n_meioses(),
        information,
        root,
        group_sums,
        kappas,
    })
}

/// Pooled information of several family types with proportions `beta_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct MixtureInformation {
    pub information: Matrix2<f64>,
    /// `None` when the pooled information is singular.
    pub w2: Option<f64>,
}

pub fn mixture_information(components: &[(f64, &ScoreTable)]) -> Result<MixtureInformation> {
    let parts: Vec<(f64, Matrix2<f64>)> = components
        .iter()
        .map(|(b, t)| (*b, t.information()))
        .collect();
    mixture_of_informations(&parts)
}

/// As [`mixture_information`] with precomputed information matrices.
pub fn mixture_of_informations(components: &[(f64, Matrix2<f64>)]) -> Result<MixtureInformation> {
    if components.is_empty() {
        return Err(Error::invalid("no family types given"));
    }
    if components.iter().any(|(b, _)| !(*b >= 0.0 && *b <= 1.0)) {
        return Err(Error::invalid("proportions must lie in [0, 1]"));
    }
    let total: f64 = components.iter().map(|(b, _)| b).sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::invalid(format!("proportions sum to {total}, not 1")));
    }
    let information = components.iter().map(|(b, i)| i * *b).sum::<Matrix2<f64>>();
    Ok(MixtureInformation {
        information,
        w2: linkage_w2(&information).ok(),
    })
}

/// One-component model of a unilineal relative pair.
#[derive(Clone, Debug, PartialEq)]
pub struct UnilinealModel {
    /// Variance of the first score component.
    pub information: f64,
    /// `(0.5, 0.5)` on `chi2_0, chi2_1`.
    pub weights: ChiBarWeights,
    /// Scalar `kappa_l` for `l = 1..=m` (index 0 unused).
    pub kappas: Vec<f64>,
}

/// Reduce a pedigree whose second score is constant to the `p = 1` model
/// with `Delta = [0, inf)`.
pub fn unilineal_limit(table: &ScoreTable) -> Result<UnilinealModel> {
    let groups = table.group_sums(table)?;
    let i = groups.iter().sum::<Matrix2<f64>>();
    let n = table.s2().len() as f64;
    let mean2 = table.s2().iter().sum::<f64>() / n;
    let var2 = table.s2().iter().map(|x| (x - mean2).powi(2)).sum::<f64>() / n;
    if var2 >= 1e-12 {
        return Err(Error::Precondition(format!(
            "second score component varies (variance {var2:e}); the pedigree is not unilineal"
        )));
    }
    let i11 = i[(0, 0)];
    if !(i11 > 1e-12) {
        return Err(Error::SingularInformation(
            "first score component is constant".into(),
        ));
    }
    Ok(UnilinealModel {
        information: i11,
        weights: ChiBarWeights::new(vec![0.5, 0.5])?,
        kappas: groups.iter().map(|g| g[(0, 0)] / i11).collect(),
    })
}

/// MLS parametrisation of the affected sib pair.
#[derive(Clone, Debug)]
pub struct MlsModel {
    /// Null information `I_0` of the score in `(z_0, z_1)`.
    pub information: Matrix2<f64>,
    /// `C = {c : V c >= 0}` with `V = [[-2, 1], [0, -1]]`.
    pub constraints: Matrix2<f64>,
    pub cone: TransformedCone,
    /// Unit-normalised rows of `U = V A^{-T}`.
    pub u: Matrix2<f64>,
    pub w2: f64,
}

/// Score of the MLS likelihood in `(z_0, z_1)` at the null `(1/4, 1/2)` for a
/// sib pair sharing `ibd` alleles.
pub fn mls_score(ibd: u8) -> (f64, f64) {
    match ibd {
        0 => (4.0, 0.0),
        1 => (0.0, 2.0),
        _ => (-4.0, -4.0),
    }
}

pub fn mls_model() -> Result<MlsModel> {
    let ped = Pedigree::sibship(2)?;
    let mut information = Matrix2::zeros();
    for v in 0..16u64 {
        let (a, b) = mls_score(ped.ibd_count(v, 3, 4)?);
        information += Matrix2::new(a * a, a * b, a * b, b * b);
    }
    information /= 16.0;
    let constraints = Matrix2::new(-2.0, 1.0, 0.0, -1.0);
    let a = information_root(&information, RootKind::Cholesky)?;
    let base = PolyhedralCone::new(2, DMatrix::from_row_slice(2, 2, &[-2.0, 1.0, 0.0, -1.0]))?;
    let cone = TransformedCone::new(base, DMatrix::from_column_slice(2, 2, a.as_slice()))?;
    let u = Matrix2::from_iterator(cone.unit_rows_u().iter().copied());
    let w2 = crate::chibar::weights_closed_form(&cone)?.get(2);
    Ok(MlsModel {
        information,
        constraints,
        cone,
        u,
        w2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn diagonal_information_gives_quarter() {
        assert_abs_diff_eq!(
            linkage_w2(&Matrix2::new(2.0, 0.0, 0.0, 5.0)).unwrap(),
            0.25,
            epsilon = 1e-15
        );
        assert!(linkage_w2(&Matrix2::new(1.0, 1.0, 1.0, 1.0)).is_err());
    }

    #[test]
    fn roots_reproduce_information() {
        let i = Matrix2::new(0.7969, 0.2813, 0.2813, 0.1875);
        for kind in [RootKind::Cholesky, RootKind::Symmetric] {
            let a = information_root(&i, kind).unwrap();
            assert_abs_diff_eq!(a * a.transpose(), i, epsilon = 1e-14);
        }
        let l = information_root(&i, RootKind::Cholesky).unwrap();
        assert_eq!(l[(0, 1)], 0.0);
    }

    #[test]
    fn sib_pair_kappas() {
        let t = ScoreTable::new(&Pedigree::sibship(2).unwrap(), 0.25).unwrap();
        let d = walsh_decompose(&t, RootKind::Cholesky).unwrap();
        assert_abs_diff_eq!(
            d.kappa(2),
            Matrix2::new(1.0, 0.0, 0.0, 0.0),
            epsilon = 1e-10
        );
        assert_abs_diff_eq!(
            d.kappa(4),
            Matrix2::new(0.0, 0.0, 0.0, 1.0),
            epsilon = 1e-10
        );
        for l in [1, 3] {
            assert!(d.kappa(l).amax() < 1e-10);
        }
    }

    #[test]
    fn constant_scores_are_singular() {
        let t = ScoreTable::from_raw(2, vec![1.0; 4], vec![2.0; 4], 0.1).unwrap();
        assert!((0..4).all(|w| t.coefficient(w) == (0.0, 0.0)));
        assert!(matches!(
            walsh_decompose(&t, RootKind::Cholesky),
            Err(Error::SingularInformation(_))
        ));
    }

    #[test]
    fn mls_exact_information() {
        let m = mls_model().unwrap();
        assert_eq!(m.information, Matrix2::new(8.0, 4.0, 4.0, 6.0));
        assert_abs_diff_eq!(
            m.u,
            Matrix2::new(-0.57735, 0.81650, 0.0, -1.0),
            epsilon = 1e-4
        );
        assert!((m.w2 - 0.0980).abs() < 5e-4);
    }

    #[test]
    fn unilineal_detection() {
        let cousins = ScoreTable::new(&Pedigree::first_cousins(), 0.1).unwrap();
        let model = unilineal_limit(&cousins).unwrap();
        assert_eq!(model.weights.as_slice(), &[0.5, 0.5]);
        let sibs = ScoreTable::new(&Pedigree::sibship(2).unwrap(), 0.1).unwrap();
        assert!(matches!(
            unilineal_limit(&sibs),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn mixture_validation() {
        let i = Matrix2::identity();
        assert!(mixture_of_informations(&[(0.5, i), (0.6, i)]).is_err());
        assert!(mixture_of_informations(&[(-0.1, i), (1.1, i)]).is_err());
        let mix = mixture_of_informations(&[(0.3, i), (0.7, i * 2.0)]).unwrap();
        assert_abs_diff_eq!(mix.information, i * 1.7, epsilon = 1e-15);
    }
}

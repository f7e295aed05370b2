//! Published information and spectral matrices of the pedigree types, and
//! regeneration of the corresponding tables.
//!
//! Types 1-4 (sibships of 2-5 affected children with untyped parents) are
//! enumerated. Types 5-7 are only available through their printed matrices,
//! which ship as CSV fixtures with four decimals.

use nalgebra::Matrix2;

use super::kernel::LinkageKernel;
use super::pedigree::Pedigree;
use super::score::ScoreTable;
use super::spectral::{
    boundary_u, information_root, linkage_w2, mixture_of_informations, walsh_decompose, RootKind,
};
use crate::{Error, Result};

const INFORMATION_CSV: &str = include_str!("../../fixtures/information.csv");
const SPECTRAL_CSV: &str = include_str!("../../fixtures/spectral.csv");

/// Tolerance on `sum_l kappa_l = Id` for matrices printed to four decimals.
pub const PRINTED_TOL: f64 = 2e-3;

/// One row of the information/boundary table.
#[derive(Clone, Debug, PartialEq)]
pub struct InformationRow {
    pub pedigree_type: usize,
    /// `K^4 I(t)`.
    pub information: Matrix2<f64>,
    /// Unit-normalised `U`.
    pub u: Matrix2<f64>,
    pub w2: f64,
}

fn parse_csv(text: &str, n_fields: usize) -> Vec<Vec<f64>> {
    text.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let row: Vec<f64> = l
                .split(',')
                .map(|x| x.trim().parse().expect("numeric fixture"))
                .collect();
            assert_eq!(row.len(), n_fields, "fixture row width");
            row
        })
        .collect()
}

/// Printed information table (all seven types).
pub fn printed_information() -> Vec<InformationRow> {
    parse_csv(INFORMATION_CSV, 9)
        .into_iter()
        .map(|r| InformationRow {
            pedigree_type: r[0] as usize,
            information: Matrix2::new(r[1], r[2], r[2], r[3]),
            u: Matrix2::new(r[4], r[5], r[6], r[7]),
            w2: r[8],
        })
        .collect()
}

/// Printed `(l, kappa_l)` for a pedigree type, nonzero entries only.
pub fn printed_spectral(pedigree_type: usize) -> Vec<(usize, Matrix2<f64>)> {
    parse_csv(SPECTRAL_CSV, 5)
        .into_iter()
        .filter(|r| r[0] as usize == pedigree_type)
        .map(|r| (r[1] as usize, Matrix2::new(r[2], r[3], r[3], r[4])))
        .collect()
}

/// Sibship size of the enumerable types 1-4.
pub fn sibship_size(pedigree_type: usize) -> Option<usize> {
    (1..=4)
        .contains(&pedigree_type)
        .then_some(pedigree_type + 1)
}

fn check_type(pedigree_type: usize) -> Result<()> {
    if (1..=7).contains(&pedigree_type) {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "pedigree type {pedigree_type} outside 1..=7"
        )))
    }
}

/// Prevalence-free information `K^4 I(t)` of an all-affected pedigree.
pub fn scaled_information(ped: &Pedigree) -> Result<Matrix2<f64>> {
    // K = 1/2 keeps every score dyadic, so the rescaling is exact
    let table = ScoreTable::new(ped, 0.5)?;
    Ok(table.information() * 0.0625)
}

/// `K^4 I(t)` of a pedigree type: enumerated for 1-4, printed for 5-7.
pub fn type_information(pedigree_type: usize) -> Result<Matrix2<f64>> {
    check_type(pedigree_type)?;
    match sibship_size(pedigree_type) {
        Some(n) => scaled_information(&Pedigree::sibship(n)?),
        None => Ok(printed_information()
            .into_iter()
            .find(|r| r.pedigree_type == pedigree_type)
            .expect("fixture row")
            .information),
    }
}

/// Regenerate the information table with the Cholesky root.
pub fn information_table() -> Result<Vec<InformationRow>> {
    (1..=7)
        .map(|j| {
            let information = type_information(j)?;
            Ok(InformationRow {
                pedigree_type: j,
                information,
                u: boundary_u(&information, RootKind::Cholesky)?,
                w2: linkage_w2(&information)?,
            })
        })
        .collect()
}

/// `(l, kappa_l)` for `l = 1..=6`: enumerated for types 1-4, printed for 5-7.
pub fn spectral_row(pedigree_type: usize) -> Result<Vec<(usize, Matrix2<f64>)>> {
    check_type(pedigree_type)?;
    let nonzero = match sibship_size(pedigree_type) {
        Some(n) => {
            let t = ScoreTable::new(&Pedigree::sibship(n)?, 0.5)?;
            walsh_decompose(&t, RootKind::Cholesky)?.kappas()
        }
        None => printed_spectral(pedigree_type),
    };
    Ok((1..=6)
        .map(|l| {
            let k = nonzero
                .iter()
                .find(|(m, _)| *m == l)
                .map(|(_, k)| *k)
                .unwrap_or_else(Matrix2::zeros);
            (l, k)
        })
        .collect())
}

/// Correlation kernel of a pedigree type (Cholesky normalisation).
pub fn type_kernel(pedigree_type: usize) -> Result<LinkageKernel> {
    check_type(pedigree_type)?;
    let name = format!("linkage:type{pedigree_type}");
    match sibship_size(pedigree_type) {
        Some(n) => {
            let t = ScoreTable::new(&Pedigree::sibship(n)?, 0.5)?;
            LinkageKernel::from_decomposition(name, &walsh_decompose(&t, RootKind::Cholesky)?)
        }
        None => {
            let root = information_root(&type_information(pedigree_type)?, RootKind::Cholesky)?;
            LinkageKernel::from_rounded(
                name,
                &printed_spectral(pedigree_type),
                root.transpose(),
                PRINTED_TOL,
            )
        }
    }
}

/// `K^4 I` of affected first cousins.
pub fn cousin_information() -> Result<Matrix2<f64>> {
    scaled_information(&Pedigree::first_cousins())
}

/// `w2(beta)` for a proportion `beta` of affected sib pairs among sib and
/// first-cousin pairs; `None` at `beta = 0`, where the information is singular.
pub fn sib_cousin_w2(betas: &[f64]) -> Result<Vec<(f64, Option<f64>)>> {
    let sib = type_information(1)?;
    let cousin = cousin_information()?;
    betas
        .iter()
        .map(|&b| {
            Ok((
                b,
                mixture_of_informations(&[(b, sib), (1.0 - b, cousin)])?.w2,
            ))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn fixtures_parse() {
        let t1 = printed_information();
        assert_eq!(t1.len(), 7);
        assert_eq!(t1[4].information[(0, 1)], 0.2813);
        assert_eq!(printed_spectral(6).len(), 6);
        assert_eq!(printed_spectral(5).len(), 3);
    }

    #[test]
    fn enumerated_rows_match_print() {
        let printed = printed_information();
        for row in information_table().unwrap().iter().take(4) {
            let want = &printed[row.pedigree_type - 1];
            assert_abs_diff_eq!(row.information, want.information, epsilon = 1e-4);
            assert_abs_diff_eq!(row.u, want.u, epsilon = 1e-4);
        }
    }

    #[test]
    fn fixture_kernels_are_normalised() {
        for j in 5..=7 {
            let k = type_kernel(j).unwrap();
            assert_abs_diff_eq!(
                k.rho_at(0.0),
                nalgebra::DMatrix::identity(2, 2),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn cousin_block() {
        let c = cousin_information().unwrap();
        assert_abs_diff_eq!(c, Matrix2::new(3.0 / 64.0, 0.0, 0.0, 0.0), epsilon = 1e-15);
        let curve = sib_cousin_w2(&[0.0, 1e-6, 1.0]).unwrap();
        assert_eq!(curve[0].1, None);
        assert!((curve[1].1.unwrap() - 0.25).abs() < 1e-3);
        assert!((curve[2].1.unwrap() - 0.0980).abs() < 5e-4);
    }
}

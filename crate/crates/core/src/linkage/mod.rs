//! Genetic linkage MOD scores.
//!
//! A [`Pedigree`] is enumerated over its `2^m` inheritance vectors to build a
//! [`ScoreTable`] of centred scores `(S_1, S_2)`. The fast Walsh-Hadamard
//! transform of the table gives coefficients `R_S(w)` from which the cross
//! information between loci at distance `s` follows as
//! `sum_w R_A(w) R_B(w)^T exp(-2 |w| s)`, and grouping by `|w|` yields the
//! matrices `kappa_l` of the stationary correlation kernel.

mod kernel;
mod pedigree;
mod score;
mod spectral;
pub mod tables;

pub use kernel::{LinkageKernel, DECOMPOSITION_TOL};
pub use pedigree::{shared, InheritanceVector, Member, Pedigree, Phenotype, MAX_MEIOSES};
pub use score::{cross_information, fwht, pair_weight, ScoreTable};
pub use spectral::{
    boundary_u, information_root, linkage_cone, linkage_w2, linkage_weights, mixture_information,
    mixture_of_informations, mls_model, mls_score, unilineal_limit, walsh_decompose,
    MixtureInformation, MlsModel, RootKind, SpectralDecomposition, UnilinealModel,
};

use crate::{Error, Result};

/// Built-in pedigrees by name: `sib-pair`, `sibship-N` (N = 2..=8),
/// `type1`..`type4`, `first-cousins`, `uncle-nephew`.
pub fn named_pedigree(name: &str) -> Result<Pedigree> {
    match name {
        "sib-pair" => Pedigree::sibship(2),
        "first-cousins" => Ok(Pedigree::first_cousins()),
        "uncle-nephew" => Ok(Pedigree::uncle_nephew()),
        _ => {
            if let Some(k) = name
                .strip_prefix("sibship-")
                .and_then(|s| s.parse::<usize>().ok())
            {
                if (2..=8).contains(&k) {
                    return Pedigree::sibship(k);
                }
            }
            if let Some(j) = name
                .strip_prefix("type")
                .and_then(|s| s.parse::<usize>().ok())
            {
                if let Some(n) = tables::sibship_size(j) {
                    return Pedigree::sibship(n);
                }
            }
            Err(Error::invalid(format!("unknown pedigree {name:?}")))
        }
    }
}

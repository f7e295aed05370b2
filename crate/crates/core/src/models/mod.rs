//! Registry of worked models and the finite-sample LRT engine.
//!
//! A [`ModelSpec`] binds a correlation kernel, the cone `Delta(t)` at every
//! index value and a default grid. Models are looked up by name with
//! [`model`]:
//!
//! | name | p | q | r | s |
//! |------|---|---|---|---|
//! | `mix1` | 1 | 1 | 1 | 0 |
//! | `mix2` | 1 | 2 | 1 | 0 |
//! | `mix3` | 2 | 1 | 1 | 0 |
//! | `mix3-composite` | 1 | 1 | 1 | 1 |
//! | `polar`, `polar-quadrant` | 1 | 1 | 1 | 0 |
//! | `linkage:<pedigree>` | 2 (1 for unilineal pairs) | 1 | 2 (1) | 0 |
//! | `mls` | 2 | 1 | 2 | 0 |

mod kernels;
pub mod lrt;

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, Matrix2};

pub use kernels::{
    expm1_minus_x, gauss_hermite, mix3_min_eigenvalue, sigma, Mix1Kernel, Mix2Kernel, Mix3Kernel,
    PolarKernel, SigmaKernel, SINGULAR_TOL,
};

use crate::chibar::{weights_closed_form, ChiBarWeights};
use crate::cone::{decompose_cone, ConeDecomposition, PolyhedralCone, Subspace, TransformedCone};
use crate::gp::{GridSpec, Kernel, KernelSpec};
use crate::linkage::{self, LinkageKernel, RootKind, ScoreTable};
use crate::{Error, Result};

/// Default number of grid points per index dimension.
pub const DEFAULT_GRID_N: usize = 41;

type ConeFn = dyn Fn(&[f64]) -> Result<TransformedCone> + Send + Sync;

/// Finite-sample engines available for a model.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FiniteSampleKind {
    /// One-parameter mixture, simple null `xi = 0`.
    Mix1,
    /// Two-parameter mixture, simple null `xi = (0, 0)`.
    Mix3,
    /// Two-parameter mixture, composite null `xi2 = 0` with `xi1` free.
    Mix3Composite,
}

/// A registered model.
#[derive(Clone)]
pub struct ModelSpec {
    pub name: String,
    pub p: usize,
    pub q: usize,
    pub r: usize,
    pub s: usize,
    pub kernel: Arc<dyn Kernel>,
    cone_at: Arc<ConeFn>,
    /// Default grid axes `(lo, hi, n)`.
    pub axes: Vec<(f64, f64, usize)>,
    pub singular_set: String,
    pub finite_sample: Option<FiniteSampleKind>,
}

impl std::fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ModelSpec")
            .field("name", &self.name)
            .field("p", &self.p)
            .field("q", &self.q)
            .field("r", &self.r)
            .field("s", &self.s)
            .field("axes", &self.axes)
            .field("singular_set", &self.singular_set)
            .finish()
    }
}

impl ModelSpec {
    /// `Delta(t)`.
    pub fn cone_at(&self, t: &[f64]) -> Result<TransformedCone> {
        if t.len() != self.q {
            return Err(Error::invalid(format!(
                "index value must have {} coordinates",
                self.q
            )));
        }
        (self.cone_at)(t)
    }

    pub fn kernel_spec(&self) -> KernelSpec {
        KernelSpec::null(self.kernel.clone())
    }

    /// Default grid with `n` points per axis when given, masked on the singular set.
    pub fn grid(&self, n: Option<usize>) -> Result<GridSpec> {
        let axes: Vec<_> = self
            .axes
            .iter()
            .map(|&(lo, hi, d)| (lo, hi, n.unwrap_or(d)))
            .collect();
        Ok(GridSpec::product(&axes)?.masked_by(self.kernel.as_ref()))
    }

    /// Grid on custom axes, masked on the singular set.
    pub fn grid_on(&self, axes: &[(f64, f64, usize)]) -> Result<GridSpec> {
        if axes.len() != self.q {
            return Err(Error::invalid(format!(
                "model {} needs {} grid axes",
                self.name, self.q
            )));
        }
        Ok(GridSpec::product(axes)?.masked_by(self.kernel.as_ref()))
    }

    /// Cones at the unmasked grid points.
    pub fn cones(&self, grid: &GridSpec) -> Result<Vec<TransformedCone>> {
        grid.unmasked_points()
            .into_iter()
            .map(|t| self.cone_at(t))
            .collect()
    }

    /// Closed-form marginal weights of `X(t)`.
    pub fn marginal_weights(&self, t: &[f64]) -> Result<ChiBarWeights> {
        weights_closed_form(&self.cone_at(t)?)
    }
}

/// Settings shared by the model constructors.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    /// Half-width `T` of the mixture index sets and length of the linkage interval.
    pub t_max: f64,
    /// Prevalence `K` for linkage scores.
    pub prevalence: f64,
    /// Lower bound `eps` with `eps <= K <= 1 - eps`.
    pub prevalence_margin: f64,
    /// Variance range `[T21, T22]` of the second mixture component.
    pub mix2_variance: (f64, f64),
    /// Information of the bivariate problem behind the polar models.
    pub polar_information: Matrix2<f64>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            t_max: 1.0,
            prevalence: 0.1,
            prevalence_margin: 0.01,
            mix2_variance: (0.5, 1.5),
            polar_information: Matrix2::identity(),
        }
    }
}

fn constant_cone(cone: TransformedCone) -> Arc<ConeFn> {
    Arc::new(move |_t: &[f64]| Ok(cone.clone()))
}

fn half_line() -> Result<TransformedCone> {
    Ok(TransformedCone::identity(PolyhedralCone::orthant(1)?))
}

fn mixture_axes(cfg: &ModelConfig) -> Result<Vec<(f64, f64, usize)>> {
    if !(cfg.t_max > 0.0 && cfg.t_max.is_finite()) {
        return Err(Error::invalid("index bound T must be positive"));
    }
    Ok(vec![(-cfg.t_max, cfg.t_max, DEFAULT_GRID_N)])
}

/// Example 1: `(1 - xi) N(0,1) + xi N(t,1)`, `Delta = [0, inf)`.
pub fn mix1(cfg: &ModelConfig) -> Result<ModelSpec> {
    Ok(ModelSpec {
        name: "mix1".into(),
        p: 1,
        q: 1,
        r: 1,
        s: 0,
        kernel: Arc::new(Mix1Kernel),
        cone_at: constant_cone(half_line()?),
        axes: mixture_axes(cfg)?,
        singular_set: "t = 0".into(),
        finite_sample: Some(FiniteSampleKind::Mix1),
    })
}

/// Example 2: `(1 - xi) N(0,1) + xi N(t1, t2)` on `[-T, T] x [T21, T22]`.
pub fn mix2(cfg: &ModelConfig) -> Result<ModelSpec> {
    let (lo, hi) = cfg.mix2_variance;
    if !(lo > 0.0 && lo < hi && hi < 2.0) {
        return Err(Error::Domain(format!(
            "variance range [{lo}, {hi}] must satisfy 0 < T21 < T22 < 2"
        )));
    }
    let mut axes = mixture_axes(cfg)?;
    axes.push((lo, hi, DEFAULT_GRID_N));
    Ok(ModelSpec {
        name: "mix2".into(),
        p: 1,
        q: 2,
        r: 1,
        s: 0,
        kernel: Arc::new(Mix2Kernel),
        cone_at: constant_cone(half_line()?),
        axes,
        singular_set: "t = (0, 1) and I(t) < 1e-8".into(),
        finite_sample: None,
    })
}

/// Example 3: `(1 - xi2) N(xi1, 1) + xi2 N(t, 1)`, `C = {c2 >= 0}`.
pub fn mix3(cfg: &ModelConfig) -> Result<ModelSpec> {
    let base = PolyhedralCone::half_space(&[0.0, 1.0])?;
    let cone_at: Arc<ConeFn> = Arc::new(move |t: &[f64]| {
        let a = Mix3Kernel::root(t[0]);
        TransformedCone::new(base.clone(), DMatrix::from_column_slice(2, 2, a.as_slice()))
    });
    Ok(ModelSpec {
        name: "mix3".into(),
        p: 2,
        q: 1,
        r: 1,
        s: 0,
        kernel: Arc::new(Mix3Kernel),
        cone_at,
        axes: mixture_axes(cfg)?,
        singular_set: "t = 0".into(),
        finite_sample: Some(FiniteSampleKind::Mix3),
    })
}

/// Composite null of Example 3 and its reduction to a `p = 1` model.
#[derive(Clone, Debug)]
pub struct CompositeModel {
    /// Reduced model with kernel `sigma_{tt'} / (sigma_t sigma_t')` and `Delta = [0, inf)`.
    pub reduced: ModelSpec,
    /// `Delta = {delta2 >= 0}` split against `Delta0 = span{e1}`.
    pub decomposition: ConeDecomposition,
}

pub fn composite_limit_mix3(cfg: &ModelConfig) -> Result<CompositeModel> {
    let delta = PolyhedralCone::half_space(&[0.0, 1.0])?;
    let null = Subspace::new(DMatrix::from_column_slice(2, 1, &[1.0, 0.0]))?;
    let decomposition = decompose_cone(&delta, &null)?;
    let reduced = ModelSpec {
        name: "mix3-composite".into(),
        p: 1,
        q: 1,
        r: 1,
        s: 1,
        kernel: Arc::new(SigmaKernel),
        cone_at: constant_cone(half_line()?),
        axes: mixture_axes(cfg)?,
        singular_set: "t = 0".into(),
        finite_sample: Some(FiniteSampleKind::Mix3Composite),
    };
    Ok(CompositeModel {
        reduced,
        decomposition,
    })
}

/// Polar-coordinate model over the full circle or the first quadrant.
pub fn polar_model(ibar: Matrix2<f64>, quadrant: bool) -> Result<ModelSpec> {
    let kernel = PolarKernel::new(ibar)?;
    let hi = if quadrant { PI / 2.0 } else { 2.0 * PI };
    Ok(ModelSpec {
        name: if quadrant { "polar-quadrant" } else { "polar" }.into(),
        p: 1,
        q: 1,
        r: 1,
        s: 0,
        kernel: Arc::new(kernel),
        cone_at: constant_cone(half_line()?),
        axes: vec![(0.0, hi, DEFAULT_GRID_N)],
        singular_set: "empty".into(),
        finite_sample: None,
    })
}

/// `chi2_2` weight of `sup_{[0, pi/2]} X(t)` in the quadrant case.
pub fn polar_quadrant_w2(ibar: &Matrix2<f64>) -> Result<f64> {
    linkage::linkage_w2(ibar)
}

fn check_prevalence(cfg: &ModelConfig) -> Result<()> {
    let eps = cfg.prevalence_margin;
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::invalid(format!(
            "prevalence margin {eps} outside (0, 0.5)"
        )));
    }
    if !(cfg.prevalence >= eps && cfg.prevalence <= 1.0 - eps) {
        return Err(Error::Domain(format!(
            "prevalence {} outside [{eps}, {}]",
            cfg.prevalence,
            1.0 - eps
        )));
    }
    Ok(())
}

fn linkage_axes(cfg: &ModelConfig) -> Result<Vec<(f64, f64, usize)>> {
    if !(cfg.t_max > 0.0 && cfg.t_max.is_finite()) {
        return Err(Error::invalid("linkage interval length T must be positive"));
    }
    Ok(vec![(0.0, cfg.t_max, DEFAULT_GRID_N)])
}

/// Linkage model of a named pedigree (`sib-pair`, `sibship-N`, `type1`..`type7`,
/// `first-cousins`, `uncle-nephew`).
pub fn linkage_model(pedigree: &str, cfg: &ModelConfig) -> Result<ModelSpec> {
    check_prevalence(cfg)?;
    let name = format!("linkage:{pedigree}");
    let fixture_type = pedigree
        .strip_prefix("type")
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|j| (5..=7).contains(j));
    let (kernel, information) = if let Some(j) = fixture_type {
        let i = linkage::tables::type_information(j)? / cfg.prevalence.powi(4);
        (linkage::tables::type_kernel(j)?, Some(i))
    } else {
        let ped = linkage::named_pedigree(pedigree)?;
        let table = ScoreTable::new(&ped, cfg.prevalence)?;
        match linkage::walsh_decompose(&table, RootKind::Cholesky) {
            Ok(d) => (
                LinkageKernel::from_decomposition(name.clone(), &d)?,
                Some(*d.information()),
            ),
            Err(Error::SingularInformation(_)) => {
                let uni = linkage::unilineal_limit(&table)?;
                (LinkageKernel::unilineal(name.clone(), &uni)?, None)
            }
            Err(e) => return Err(e),
        }
    };
    let (p, r, cone) = match information {
        Some(i) => (2, 2, linkage::linkage_cone(&i, RootKind::Cholesky)?),
        None => (1, 1, half_line()?),
    };
    Ok(ModelSpec {
        name,
        p,
        q: 1,
        r,
        s: 0,
        kernel: Arc::new(kernel),
        cone_at: constant_cone(cone),
        axes: linkage_axes(cfg)?,
        singular_set: "empty".into(),
        finite_sample: None,
    })
}

/// MLS parametrisation of affected sib pairs along the chromosome.
pub fn mls(cfg: &ModelConfig) -> Result<ModelSpec> {
    let m = linkage::mls_model()?;
    let ped = linkage::Pedigree::sibship(2)?;
    let mut s1 = Vec::with_capacity(16);
    let mut s2 = Vec::with_capacity(16);
    for v in 0..16u64 {
        let (a, b) = linkage::mls_score(ped.ibd_count(v, 3, 4)?);
        s1.push(a);
        s2.push(b);
    }
    let table = ScoreTable::from_raw(4, s1, s2, cfg.prevalence)?;
    let kernel = LinkageKernel::from_decomposition(
        "mls",
        &linkage::walsh_decompose(&table, RootKind::Cholesky)?,
    )?;
    Ok(ModelSpec {
        name: "mls".into(),
        p: 2,
        q: 1,
        r: 2,
        s: 0,
        kernel: Arc::new(kernel),
        cone_at: constant_cone(m.cone),
        axes: linkage_axes(cfg)?,
        singular_set: "empty".into(),
        finite_sample: None,
    })
}

/// Names accepted by [`model`] (linkage entries listed by pedigree).
pub fn model_names() -> Vec<String> {
    let mut names: Vec<String> = [
        "mix1",
        "mix2",
        "mix3",
        "mix3-composite",
        "polar",
        "polar-quadrant",
        "mls",
    ]
    .map(String::from)
    .to_vec();
    for p in [
        "sib-pair",
        "sibship-3",
        "sibship-4",
        "sibship-5",
        "type1",
        "type2",
        "type3",
        "type4",
        "type5",
        "type6",
        "type7",
        "first-cousins",
        "uncle-nephew",
    ] {
        names.push(format!("linkage:{p}"));
    }
    names
}

/// Look a model up by name.
pub fn model(name: &str, cfg: &ModelConfig) -> Result<ModelSpec> {
    match name {
        "mix1" => mix1(cfg),
        "mix2" => mix2(cfg),
        "mix3" => mix3(cfg),
        "mix3-composite" => Ok(composite_limit_mix3(cfg)?.reduced),
        "polar" => polar_model(cfg.polar_information, false),
        "polar-quadrant" => polar_model(cfg.polar_information, true),
        "mls" => mls(cfg),
        _ => match name.strip_prefix("linkage:") {
            Some(p) => linkage_model(p, cfg),
            None => Err(Error::invalid(format!("unknown model {name:?}"))),
        },
    }
}

/// Fixed seed of the `random-r3` cone.
pub const RANDOM_CONE_SEED: u64 = 0x5eed_c0e3;

/// Names accepted by [`named_cone`].
pub const CONE_NAMES: [&str; 7] = [
    "orthant1",
    "orthant2",
    "orthant3",
    "halfplane2",
    "random-r3",
    "mls",
    "polar-quadrant",
];

/// Stand-alone cones addressable by name.
///
/// `random-r3` is the simplicial cone `{x : Vx >= 0}` in `R^3` with standard
/// normal rows drawn from a fixed seed; `polar-quadrant` is the quadrant
/// transformed by the root of `cfg.polar_information`.
pub fn named_cone(name: &str, cfg: &ModelConfig) -> Result<TransformedCone> {
    match name {
        "orthant1" => Ok(TransformedCone::identity(PolyhedralCone::orthant(1)?)),
        "orthant2" => Ok(TransformedCone::identity(PolyhedralCone::orthant(2)?)),
        "orthant3" => Ok(TransformedCone::identity(PolyhedralCone::orthant(3)?)),
        "halfplane2" => Ok(TransformedCone::identity(PolyhedralCone::half_space(&[
            0.0, 1.0,
        ])?)),
        "random-r3" => {
            use rand::Rng;
            let mut g = crate::rng::substream(RANDOM_CONE_SEED, 0);
            let v: Vec<f64> = (0..9)
                .map(|_| g.sample(rand_distr::StandardNormal))
                .collect();
            Ok(TransformedCone::identity(PolyhedralCone::new(
                3,
                DMatrix::from_row_slice(3, 3, &v),
            )?))
        }
        "mls" => Ok(linkage::mls_model()?.cone),
        "polar-quadrant" => linkage::linkage_cone(&cfg.polar_information, RootKind::Symmetric),
        _ => Err(Error::invalid(format!("unknown cone {name:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn every_registered_model_builds() {
        let cfg = ModelConfig::default();
        for name in model_names() {
            let m = model(&name, &cfg).unwrap_or_else(|e| panic!("{name}: {e}"));
            let grid = m.grid(Some(5)).unwrap();
            let cones = m.cones(&grid).unwrap();
            assert!(cones.iter().all(|c| c.dim() == m.p), "{name}");
            assert_eq!(m.kernel.dim(), m.p, "{name}");
        }
        assert!(model("nope", &cfg).is_err());
    }

    #[test]
    fn mix3_delta_is_upper_half_plane() {
        let m = mix3(&ModelConfig::default()).unwrap();
        for t in [-0.9, 0.4, 1.0] {
            let c = m.cone_at(&[t]).unwrap();
            let u = c.unit_rows_u();
            assert_abs_diff_eq!(u[(0, 0)], 0.0, epsilon = 1e-15);
            assert_abs_diff_eq!(u[(0, 1)], 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn composite_decomposition_geometry() {
        let c = composite_limit_mix3(&ModelConfig::default()).unwrap();
        let k = c.decomposition.embedded();
        assert!(k.contains(&[0.0, 2.0]));
        assert!(!k.contains(&[1.0, 2.0]));
        assert!(!k.contains(&[0.0, -2.0]));
    }

    #[test]
    fn unilineal_models_have_one_component() {
        let cfg = ModelConfig::default();
        for p in ["first-cousins", "uncle-nephew"] {
            let m = linkage_model(p, &cfg).unwrap();
            assert_eq!((m.p, m.r), (1, 1));
            assert_eq!(m.marginal_weights(&[0.0]).unwrap().as_slice(), &[0.5, 0.5]);
        }
    }

    #[test]
    fn prevalence_margin_enforced() {
        let cfg = ModelConfig {
            prevalence: 0.005,
            ..ModelConfig::default()
        };
        assert!(matches!(
            linkage_model("sib-pair", &cfg),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn polar_quadrant_weights() {
        assert_abs_diff_eq!(
            polar_quadrant_w2(&Matrix2::identity()).unwrap(),
            0.25,
            epsilon = 1e-15
        );
        let i = Matrix2::new(1.0, 0.5, 0.5, 1.0);
        assert_abs_diff_eq!(polar_quadrant_w2(&i).unwrap(), 1.0 / 6.0, epsilon = 1e-15);
    }
}

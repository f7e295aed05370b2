//! Discretised chi-bar-squared processes.
//!
//! A [`Kernel`] supplies the matrix correlation `rho(t, t')` of the
//! standardised score process `Z`. On a finite [`GridSpec`] the joint
//! covariance of `Z(t_1), ..., Z(t_N)` is factored once; every replicate then
//! draws `Z = L e (+ mu)` from its own substream, projects each block onto
//! the local cone and records `Lambda = max_i |P_{Delta(t_i)} Z(t_i)|^2`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::cone::PolyhedralCone;
use crate::{par, rng, stats, Error, Result};

/// Matrix correlation kernel of a standardised score process.
pub trait Kernel: Send + Sync {
    /// Dimension `p` of the process.
    fn dim(&self) -> usize;

    /// Dimension `q` of the index set.
    fn index_dim(&self) -> usize;

    /// `rho(t, s)`, a `p x p` matrix with `rho(t, t) = Id`.
    fn rho(&self, t: &[f64], s: &[f64]) -> DMatrix<f64>;

    /// `A(t)^T` for a root of the information `A A^T = I(t)`.
    fn root_transpose(&self, t: &[f64]) -> DMatrix<f64>;

    /// True on the singular set, where the kernel is not evaluated.
    fn is_singular(&self, _t: &[f64]) -> bool {
        false
    }

    /// Optional finite feature map with `rho(t, s) = F(t) F(s)^T`.
    fn features(&self, _t: &[f64]) -> Option<DMatrix<f64>> {
        None
    }

    fn name(&self) -> String;
}

/// Contiguous alternative `xi_0 + v / sqrt(n)` at nuisance value `t0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Alternative {
    pub t0: Vec<f64>,
    pub v: Vec<f64>,
}

/// A kernel together with an optional alternative defining the mean.
#[derive(Clone)]
pub struct KernelSpec {
    pub kernel: Arc<dyn Kernel>,
    pub alternative: Option<Alternative>,
}

impl std::fmt::Debug for KernelSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KernelSpec")
            .field("kernel", &self.kernel.name())
            .field("alternative", &self.alternative)
            .finish()
    }
}

impl KernelSpec {
    pub fn null(kernel: Arc<dyn Kernel>) -> Self {
        Self {
            kernel,
            alternative: None,
        }
    }

    pub fn with_alternative(&self, t0: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        let k = &self.kernel;
        if t0.len() != k.index_dim() || v.len() != k.dim() {
            return Err(Error::invalid(
                "alternative does not match kernel dimensions",
            ));
        }
        if t0.iter().chain(&v).any(|x| !x.is_finite()) {
            return Err(Error::invalid("non-finite alternative"));
        }
        if k.is_singular(&t0) {
            return Err(Error::Domain(
                "alternative placed on the singular set".into(),
            ));
        }
        Ok(Self {
            kernel: self.kernel.clone(),
            alternative: Some(Alternative { t0, v }),
        })
    }

    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    /// `mu(t) = rho(t, t0) A(t0)^T v`, zero under the null.
    pub fn mean(&self, t: &[f64]) -> DVector<f64> {
        match &self.alternative {
            None => DVector::zeros(self.dim()),
            Some(alt) => {
                let shift =
                    self.kernel.root_transpose(&alt.t0) * DVector::from_column_slice(&alt.v);
                self.kernel.rho(t, &alt.t0) * shift
            }
        }
    }
}

/// Grid over the index set with a singular-set mask.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    points: Vec<Vec<f64>>,
    mask: Vec<bool>,
}

impl GridSpec {
    pub fn new(points: Vec<Vec<f64>>, mask: Vec<bool>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("grid has no points"));
        }
        if mask.len() != points.len() {
            return Err(Error::invalid(
                "mask length differs from the number of points",
            ));
        }
        let q = points[0].len();
        if q == 0
            || points
                .iter()
                .any(|t| t.len() != q || t.iter().any(|x| !x.is_finite()))
        {
            return Err(Error::invalid(
                "grid points must be finite and of equal dimension",
            ));
        }
        let mut sorted: Vec<&Vec<f64>> = points.iter().collect();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("grid points must be distinct"));
        }
        Ok(Self { points, mask })
    }

    /// `n` equally spaced points on `[lo, hi]` (just `lo` when `n = 1`).
    pub fn uniform(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::product(&[(lo, hi, n)])
    }

    /// Cartesian product of uniform axes, last axis varying fastest.
    pub fn product(axes: &[(f64, f64, usize)]) -> Result<Self> {
        let mut coords = Vec::with_capacity(axes.len());
        for &(lo, hi, n) in axes {
            if n == 0 || !(lo.is_finite() && hi.is_finite()) || (n > 1 && !(hi > lo)) {
                return Err(Error::invalid(format!(
                    "bad grid axis [{lo}, {hi}] with {n} points"
                )));
            }
            coords.push(axis_points(lo, hi, n));
        }
        let mut points = vec![Vec::new()];
        for axis in &coords {
            points = points
                .into_iter()
                .flat_map(|prefix: Vec<f64>| {
                    axis.iter().map(move |&x| {
                        let mut t = prefix.clone();
                        t.push(x);
                        t
                    })
                })
                .collect();
        }
        let n = points.len();
        Self::new(points, vec![false; n])
    }

    /// Mask every point on which the kernel reports a singularity.
    pub fn masked_by(mut self, kernel: &dyn Kernel) -> Self {
        for (m, t) in self.mask.iter_mut().zip(&self.points) {
            *m = *m || kernel.is_singular(t);
        }
        self
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Indices of unmasked points in grid order.
    pub fn unmasked(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| !self.mask[i]).collect()
    }

    pub fn unmasked_points(&self) -> Vec<&[f64]> {
        self.unmasked()
            .into_iter()
            .map(|i| self.points[i].as_slice())
            .collect()
    }

    pub fn id(&self) -> String {
        let values = self.points.iter().zip(&self.mask).flat_map(|(t, &m)| {
            t.iter()
                .copied()
                .chain(std::iter::once(if m { 1.0 } else { 0.0 }))
        });
        stats::fingerprint("grid", values)
    }
}

fn axis_points(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { hi } else { lo + step * i as f64 })
        .collect()
}

/// Check `rho(t, t) = Id` and `rho(t, s) = rho(s, t)^T` on the unmasked grid.
pub fn check_kernel(kernel: &dyn Kernel, grid: &GridSpec, tol: f64) -> Result<()> {
    let pts = grid.unmasked_points();
    let p = kernel.dim();
    for (i, t) in pts.iter().enumerate() {
        let diag = kernel.rho(t, t);
        let err = (diag - DMatrix::<f64>::identity(p, p)).amax();
        if !(err <= tol) {
            return Err(Error::Precondition(format!(
                "rho(t,t) differs from identity by {err:e} at {t:?}"
            )));
        }
        for s in pts.iter().skip(i + 1) {
            let err = (kernel.rho(t, s) - kernel.rho(s, t).transpose()).amax();
            if !(err <= tol) {
                return Err(Error::Precondition(format!(
                    "rho is not symmetric at {t:?}, {s:?}"
                )));
            }
        }
    }
    Ok(())
}

/// Factor `L` with `L L^T` equal to the joint covariance (plus jitter).
#[derive(Clone, Debug)]
pub struct CovarianceFactor {
    factor: DMatrix<f64>,
    jitter: f64,
    p: usize,
    points: Vec<Vec<f64>>,
    lower_triangular: bool,
}

impl CovarianceFactor {
    /// Diagonal jitter added before factorisation (absolute).
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn factor(&self) -> &DMatrix<f64> {
        &self.factor
    }

    /// Number of unmasked points.
    pub fn n_points(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Length of a joint draw, `N p`.
    pub fn len(&self) -> usize {
        self.factor.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.factor.nrows() == 0
    }

    /// Number of standard normal inputs per draw.
    pub fn rank(&self) -> usize {
        self.factor.ncols()
    }

    /// Fill `z` with a joint draw using standard normals from `g`.
    pub fn sample_into(&self, g: &mut impl Rng, e: &mut [f64], z: &mut [f64]) {
        for v in e.iter_mut() {
            *v = g.sample(StandardNormal);
        }
        z.iter_mut().for_each(|v| *v = 0.0);
        let m = self.len();
        for (j, &ej) in e.iter().enumerate() {
            if ej == 0.0 {
                continue;
            }
            let start = if self.lower_triangular { j } else { 0 };
            let col = &self.factor.column(j);
            let col = &col.as_slice()[start..m];
            for (zi, l) in z[start..].iter_mut().zip(col) {
                *zi += ej * l;
            }
        }
    }
}

/// Assemble `[rho(t_i, t_j)]` over the unmasked grid and factor it.
///
/// Kernels with a finite feature map are factored exactly by stacking the
/// features. Otherwise a Cholesky factorisation is attempted without jitter,
/// then with `lambda * trace / (N p)` on the diagonal for `lambda` doubling
/// from `1e-12` up to `1e-6`.
pub fn build_covariance(kernel: &dyn Kernel, grid: &GridSpec) -> Result<CovarianceFactor> {
    let points: Vec<Vec<f64>> = grid.unmasked_points().iter().map(|t| t.to_vec()).collect();
    if points.is_empty() {
        return Err(Error::invalid("every grid point is masked"));
    }
    if points[0].len() != kernel.index_dim() {
        return Err(Error::invalid(
            "grid dimension does not match the kernel index dimension",
        ));
    }
    let p = kernel.dim();
    let n = points.len();
    let m = n * p;

    if let Some(f0) = kernel.features(&points[0]) {
        let k = f0.ncols();
        let mut factor = DMatrix::zeros(m, k);
        for (i, t) in points.iter().enumerate() {
            let f = kernel.features(t).expect("feature map defined everywhere");
            factor.view_mut((i * p, 0), (p, k)).copy_from(&f);
        }
        return Ok(CovarianceFactor {
            factor,
            jitter: 0.0,
            p,
            points,
            lower_triangular: false,
        });
    }

    let mut cov = DMatrix::zeros(m, m);
    for i in 0..n {
        for j in 0..=i {
            let block = kernel.rho(&points[i], &points[j]);
            cov.view_mut((i * p, j * p), (p, p)).copy_from(&block);
            if i != j {
                cov.view_mut((j * p, i * p), (p, p))
                    .copy_from(&block.transpose());
            }
        }
    }
    if cov.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain(
            "kernel produced non-finite covariance entries".into(),
        ));
    }
    let scale = cov.trace() / m as f64;
    let mut lambda = 0.0;
    loop {
        let mut trial = cov.clone();
        let jitter = lambda * scale;
        for d in 0..m {
            trial[(d, d)] += jitter;
        }
        if let Some(ch) = trial.cholesky() {
            return Ok(CovarianceFactor {
                factor: ch.unpack(),
                jitter,
                p,
                points,
                lower_triangular: true,
            });
        }
        lambda = if lambda == 0.0 { 1e-12 } else { lambda * 2.0 };
        if lambda > 1e-6 {
            let min_eigenvalue = cov.symmetric_eigenvalues().min();
            return Err(Error::IllConditionedKernel { min_eigenvalue });
        }
    }
}

/// Mean of the stacked process on the factor's points.
pub fn mean_vector(spec: &KernelSpec, factor: &CovarianceFactor) -> Option<Vec<f64>> {
    spec.alternative.as_ref()?;
    Some(
        factor
            .points()
            .iter()
            .flat_map(|t| spec.mean(t).iter().copied().collect::<Vec<_>>())
            .collect(),
    )
}

/// Monte Carlo sample of the supremum statistic.
#[derive(Clone, Debug, PartialEq)]
pub struct SupSample {
    pub draws: Vec<f64>,
    pub grid_id: String,
    pub seed: u64,
    pub cone_ids: Vec<String>,
}

impl SupSample {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    /// `rep,lambda` rows.
    pub fn write_csv<W: std::io::Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "rep,lambda")?;
        for (i, d) in self.draws.iter().enumerate() {
            writeln!(out, "{i},{d}")?;
        }
        Ok(())
    }
}

/// Replicate engine over a fixed factor, optional mean and per-point cones.
pub struct Simulator<'a, C> {
    factor: &'a CovarianceFactor,
    mean: Option<Vec<f64>>,
    cones: &'a [C],
}

const REP_BLOCK: usize = 64;

impl<'a, C: AsRef<PolyhedralCone> + Sync> Simulator<'a, C> {
    /// `cones` holds one cone per unmasked point, or a single cone used everywhere.
    pub fn new(
        factor: &'a CovarianceFactor,
        mean: Option<Vec<f64>>,
        cones: &'a [C],
    ) -> Result<Self> {
        let n = factor.n_points();
        if cones.len() != 1 && cones.len() != n {
            return Err(Error::invalid(format!(
                "expected 1 or {n} cones, got {}",
                cones.len()
            )));
        }
        if cones.iter().any(|c| c.as_ref().dim() != factor.p()) {
            return Err(Error::invalid(
                "cone dimension differs from the process dimension",
            ));
        }
        if let Some(m) = &mean {
            if m.len() != factor.len() {
                return Err(Error::invalid("mean vector has the wrong length"));
            }
        }
        Ok(Self {
            factor,
            mean,
            cones,
        })
    }

    fn cone(&self, i: usize) -> &PolyhedralCone {
        if self.cones.len() == 1 {
            self.cones[0].as_ref()
        } else {
            self.cones[i].as_ref()
        }
    }

    /// Joint draw `Z` of replicate `rep`.
    pub fn draw(&self, seed: u64, rep: u64, e: &mut [f64], z: &mut [f64]) {
        let mut g = rng::substream(seed, rep);
        self.factor.sample_into(&mut g, e, z);
        if let Some(m) = &self.mean {
            for (zi, mi) in z.iter_mut().zip(m) {
                *zi += mi;
            }
        }
    }

    /// `X(t_i) = |P_i Z(t_i)|^2` for every point.
    pub fn profile(&self, z: &[f64], out: &mut [f64]) {
        let p = self.factor.p();
        for (i, x) in out.iter_mut().enumerate() {
            *x = self.cone(i).projected_sq_norm(&z[i * p..(i + 1) * p]);
        }
    }

    fn sup(&self, z: &[f64]) -> f64 {
        let p = self.factor.p();
        (0..self.factor.n_points())
            .map(|i| self.cone(i).projected_sq_norm(&z[i * p..(i + 1) * p]))
            .fold(0.0, f64::max)
    }

    /// `Lambda` for replicates `0..n_reps`.
    pub fn run(&self, n_reps: usize, seed: u64) -> Vec<f64> {
        let blocks = par::map_blocks(n_reps, REP_BLOCK, |_, range| {
            let mut e = vec![0.0; self.factor.rank()];
            let mut z = vec![0.0; self.factor.len()];
            range
                .map(|rep| {
                    self.draw(seed, rep as u64, &mut e, &mut z);
                    self.sup(&z)
                })
                .collect::<Vec<_>>()
        });
        blocks.concat()
    }

    /// Pointwise profiles `X(t_i)` for replicates `0..n_reps`.
    pub fn profiles(&self, n_reps: usize, seed: u64) -> Vec<Vec<f64>> {
        par::map_indices(n_reps, |rep| {
            let mut e = vec![0.0; self.factor.rank()];
            let mut z = vec![0.0; self.factor.len()];
            let mut x = vec![0.0; self.factor.n_points()];
            self.draw(seed, rep as u64, &mut e, &mut z);
            self.profile(&z, &mut x);
            x
        })
    }

    /// Raw joint draws `Z` for replicates `0..n_reps`.
    pub fn paths(&self, n_reps: usize, seed: u64) -> Vec<Vec<f64>> {
        par::map_indices(n_reps, |rep| {
            let mut e = vec![0.0; self.factor.rank()];
            let mut z = vec![0.0; self.factor.len()];
            self.draw(seed, rep as u64, &mut e, &mut z);
            z
        })
    }
}

/// Simulate `Lambda = max_i |P_{Delta(t_i)} Z(t_i)|^2` over the unmasked grid.
pub fn simulate_sup<C: AsRef<PolyhedralCone> + Sync>(
    spec: &KernelSpec,
    grid: &GridSpec,
    cones: &[C],
    n_reps: usize,
    seed: u64,
) -> Result<SupSample> {
    let factor = build_covariance(spec.kernel.as_ref(), grid)?;
    simulate_sup_with(spec, &factor, grid, cones, n_reps, seed)
}

/// As [`simulate_sup`] with a prebuilt factor.
pub fn simulate_sup_with<C: AsRef<PolyhedralCone> + Sync>(
    spec: &KernelSpec,
    factor: &CovarianceFactor,
    grid: &GridSpec,
    cones: &[C],
    n_reps: usize,
    seed: u64,
) -> Result<SupSample> {
    if n_reps == 0 {
        return Err(Error::invalid("n_reps must be at least 1"));
    }
    let sim = Simulator::new(factor, mean_vector(spec, factor), cones)?;
    Ok(SupSample {
        draws: sim.run(n_reps, seed),
        grid_id: grid.id(),
        seed,
        cone_ids: cones.iter().map(|c| c.as_ref().id()).collect(),
    })
}

/// Empirical `1 - alpha` quantile of the draws (midpoint convention).
pub fn critical_value(sample: &SupSample, alpha: f64) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::invalid("empty sample"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha {alpha} outside (0, 1)")));
    }
    stats::empirical_quantile_sorted(&stats::sorted(&sample.draws), 1.0 - alpha)
}

/// `(1 + #{draws >= observed}) / (n + 1)`.
pub fn p_value(sample: &SupSample, observed: f64) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::invalid("empty sample"));
    }
    let exceed = sample.draws.iter().filter(|&&d| d >= observed).count();
    Ok((1 + exceed) as f64 / (sample.len() + 1) as f64)
}

/// One row of a power curve.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerPoint {
    pub v: Vec<f64>,
    pub power: f64,
    pub std_error: f64,
}

/// Limiting rejection probabilities of the level-`alpha` test for each `v`.
///
/// The null critical value uses `seed`; every alternative reuses one derived
/// seed so the curve is computed with common random numbers.
#[allow(clippy::too_many_arguments)]
pub fn power_curve<C: AsRef<PolyhedralCone> + Sync>(
    spec: &KernelSpec,
    grid: &GridSpec,
    cones: &[C],
    t0: &[f64],
    v_list: &[Vec<f64>],
    alpha: f64,
    n_reps: usize,
    seed: u64,
) -> Result<(f64, Vec<PowerPoint>)> {
    let factor = build_covariance(spec.kernel.as_ref(), grid)?;
    let null = KernelSpec::null(spec.kernel.clone());
    let null_sample = simulate_sup_with(&null, &factor, grid, cones, n_reps, seed)?;
    let crit = critical_value(&null_sample, alpha)?;
    let alt_seed = rng::derive_seed(seed, 1);
    let mut out = Vec::with_capacity(v_list.len());
    for v in v_list {
        let alt = null.with_alternative(t0.to_vec(), v.clone())?;
        let s = simulate_sup_with(&alt, &factor, grid, cones, n_reps, alt_seed)?;
        let power = s.draws.iter().filter(|&&d| d > crit).count() as f64 / n_reps as f64;
        let std_error = (power * (1.0 - power) / n_reps as f64).sqrt();
        out.push(PowerPoint {
            v: v.clone(),
            power,
            std_error,
        });
    }
    Ok((crit, out))
}

/// Kernel of a process that is the same standard normal vector at every index.
#[derive(Clone, Debug)]
pub struct ConstantKernel {
    pub p: usize,
}

impl Kernel for ConstantKernel {
    fn dim(&self) -> usize {
        self.p
    }
    fn index_dim(&self) -> usize {
        1
    }
    fn rho(&self, _t: &[f64], _s: &[f64]) -> DMatrix<f64> {
        DMatrix::identity(self.p, self.p)
    }
    fn root_transpose(&self, _t: &[f64]) -> DMatrix<f64> {
        DMatrix::identity(self.p, self.p)
    }
    fn name(&self) -> String {
        format!("constant-{}", self.p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::PolyhedralCone;

    fn single_point() -> GridSpec {
        GridSpec::uniform(0.0, 1.0, 1).unwrap()
    }

    #[test]
    fn single_point_factor_is_identity() {
        let f = build_covariance(&ConstantKernel { p: 3 }, &single_point()).unwrap();
        assert_eq!(f.factor(), &DMatrix::<f64>::identity(3, 3));
        assert_eq!(f.jitter(), 0.0);
    }

    #[test]
    fn perfectly_correlated_process_needs_small_jitter() {
        let grid = GridSpec::uniform(0.0, 1.0, 20).unwrap();
        let f = build_covariance(&ConstantKernel { p: 2 }, &grid).unwrap();
        assert!(f.jitter() > 0.0 && f.jitter() <= 1e-8);
    }

    #[test]
    fn trivial_cone_gives_zero_draws() {
        let spec = KernelSpec::null(Arc::new(ConstantKernel { p: 2 }));
        let cone = PolyhedralCone::zero(2).unwrap();
        let s = simulate_sup(&spec, &single_point(), &[cone], 100, 1).unwrap();
        assert!(s.draws.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn critical_value_and_p_value() {
        let s = SupSample {
            draws: vec![5.0; 20],
            grid_id: String::new(),
            seed: 0,
            cone_ids: vec![],
        };
        assert_eq!(critical_value(&s, 0.05).unwrap(), 5.0);
        assert_eq!(p_value(&s, 6.0).unwrap(), 1.0 / 21.0);
        let empty = SupSample { draws: vec![], ..s };
        assert!(critical_value(&empty, 0.05).is_err());
        assert!(p_value(&empty, 1.0).is_err());
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(vec![vec![0.0], vec![0.0]], vec![false, false]).is_err());
        assert!(GridSpec::uniform(1.0, 0.0, 3).is_err());
        let g = GridSpec::product(&[(0.0, 1.0, 3), (2.0, 3.0, 2)]).unwrap();
        assert_eq!(g.len(), 6);
        assert_eq!(g.points()[1], vec![0.0, 3.0]);
    }

    #[test]
    fn all_masked_grid_is_rejected() {
        let g = GridSpec::new(vec![vec![0.0]], vec![true]).unwrap();
        assert!(build_covariance(&ConstantKernel { p: 1 }, &g).is_err());
    }
}

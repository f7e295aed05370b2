//! Polyhedral convex cones `{x : V x >= 0, E x = 0}`, their images under an
//! invertible root of an information matrix, and exact Euclidean projection
//! onto them.
//!
//! Projection enumerates every subset of inequality constraints as a candidate
//! active set. Each candidate's equality-constrained least-squares solution and
//! its KKT multipliers are precomputed at construction, so a projection is a
//! handful of small matrix-vector products. Candidates are tried in order of
//! increasing size; the first one that is primal feasible with nonnegative
//! multipliers is the projection, which also resolves measure-zero ties in
//! favour of the smaller active set.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{rng, stats, Error, Result};

/// Largest ambient dimension supported by the enumeration projector.
pub const MAX_DIM: usize = 8;

/// Smallest singular value allowed for the unit-normalised constraint rows.
pub const RANK_TOL: f64 = 1e-10;
/// Relative slack of the membership test.
pub const MEMBERSHIP_TOL: f64 = 1e-12;
/// A constraint is active when `|u_i . x| <= ACTIVE_TOL * (1 + |z|)`.
pub const ACTIVE_TOL: f64 = 1e-9;
const KKT_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
struct Candidate {
    /// Active inequality indices.
    ineq: Vec<usize>,
    /// `p x p` row-major projector onto the null space of the active rows.
    proj: Vec<f64>,
    /// `k x p` row-major, `lambda = -mult * z`; rows follow the equalities
    /// first, then `ineq`.
    mult: Vec<f64>,
}

/// The cone `{x in R^p : v_i . x >= 0 (i < r), e_j . x = 0 (j < e)}`.
#[derive(Clone, Debug)]
pub struct PolyhedralCone {
    dim: usize,
    rows: DMatrix<f64>,
    equalities: DMatrix<f64>,
    unit_rows: Vec<f64>,
    candidates: Vec<Candidate>,
}

/// Result of projecting a point onto a cone.
#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    pub point: DVector<f64>,
    /// Inequality constraints satisfied with equality at `point`.
    pub active: Vec<usize>,
}

fn normalize_rows(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mut out = m.clone();
    for (i, mut row) in out.row_iter_mut().enumerate() {
        let n = row.norm();
        if !(n > 0.0) {
            return Err(Error::DegenerateCone(format!("constraint row {i} is zero")));
        }
        row /= n;
    }
    Ok(out)
}

impl PolyhedralCone {
    /// Cone defined by inequality rows `V` (`r x p`).
    pub fn new(dim: usize, rows: DMatrix<f64>) -> Result<Self> {
        Self::with_equalities(dim, rows, DMatrix::zeros(0, dim))
    }

    /// Cone defined by inequality rows and additional equality rows.
    pub fn with_equalities(
        dim: usize,
        rows: DMatrix<f64>,
        equalities: DMatrix<f64>,
    ) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::invalid(format!(
                "cone dimension {dim} outside 1..={MAX_DIM}"
            )));
        }
        if rows.ncols() != dim || equalities.ncols() != dim {
            return Err(Error::invalid(
                "constraint rows do not match the cone dimension",
            ));
        }
        if rows.iter().chain(equalities.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite constraint entry"));
        }
        let r = rows.nrows();
        let e = equalities.nrows();
        if r + e > dim {
            return Err(Error::DegenerateCone(format!(
                "{} constraints exceed the dimension {dim}",
                r + e
            )));
        }
        let unit_ineq = normalize_rows(&rows)?;
        let unit_eq = normalize_rows(&equalities)?;
        let mut stacked = DMatrix::zeros(r + e, dim);
        stacked.rows_mut(0, e).copy_from(&unit_eq);
        stacked.rows_mut(e, r).copy_from(&unit_ineq);
        if r + e > 0 {
            let sv = stacked.clone().singular_values();
            let smin = sv.min();
            if smin < RANK_TOL {
                return Err(Error::DegenerateCone(format!(
                    "constraint rows are linearly dependent (smallest singular value {smin:e})"
                )));
            }
        }

        let mut masks: Vec<u32> = (0..(1u32 << r)).collect();
        masks.sort_by_key(|m| (m.count_ones(), *m));
        let mut candidates = Vec::with_capacity(masks.len());
        for mask in masks {
            let ineq: Vec<usize> = (0..r).filter(|i| mask & (1 << i) != 0).collect();
            let k = e + ineq.len();
            let mut active = DMatrix::zeros(k, dim);
            active.rows_mut(0, e).copy_from(&unit_eq);
            for (j, &i) in ineq.iter().enumerate() {
                active.row_mut(e + j).copy_from(&unit_ineq.row(i));
            }
            let (proj, mult) = if k == 0 {
                (DMatrix::identity(dim, dim), DMatrix::zeros(0, dim))
            } else if k == dim {
                let inv = active
                    .clone()
                    .try_inverse()
                    .ok_or_else(|| Error::DegenerateCone("singular active-set matrix".into()))?;
                (DMatrix::zeros(dim, dim), inv.transpose())
            } else {
                let gram = &active * active.transpose();
                let inv = gram.try_inverse().ok_or_else(|| {
                    Error::DegenerateCone("singular active-set Gram matrix".into())
                })?;
                let mult = inv * &active;
                let proj = DMatrix::identity(dim, dim) - active.transpose() * &mult;
                (proj, mult)
            };
            candidates.push(Candidate {
                ineq,
                proj: proj.transpose().as_slice().to_vec(),
                mult: mult.transpose().as_slice().to_vec(),
            });
        }

        Ok(Self {
            dim,
            rows,
            equalities,
            unit_rows: unit_ineq.transpose().as_slice().to_vec(),
            candidates,
        })
    }

    /// The whole space `R^p` (no constraints).
    pub fn whole_space(dim: usize) -> Result<Self> {
        Self::new(dim, DMatrix::zeros(0, dim))
    }

    /// The nonnegative orthant `[0, inf)^p`.
    pub fn orthant(dim: usize) -> Result<Self> {
        Self::new(dim, DMatrix::identity(dim, dim))
    }

    /// The trivial cone `{0}`.
    pub fn zero(dim: usize) -> Result<Self> {
        Self::with_equalities(dim, DMatrix::zeros(0, dim), DMatrix::identity(dim, dim))
    }

    /// Half-space `{x : normal . x >= 0}`.
    pub fn half_space(normal: &[f64]) -> Result<Self> {
        Self::new(
            normal.len(),
            DMatrix::from_row_slice(1, normal.len(), normal),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of inequality constraints `r`.
    pub fn n_constraints(&self) -> usize {
        self.rows.nrows()
    }

    pub fn n_equalities(&self) -> usize {
        self.equalities.nrows()
    }

    /// Inequality rows as supplied (not normalised).
    pub fn rows(&self) -> &DMatrix<f64> {
        &self.rows
    }

    pub fn equalities(&self) -> &DMatrix<f64> {
        &self.equalities
    }

    /// Dimension of the linear span of the cone, `p - e`.
    pub fn span_dim(&self) -> usize {
        self.dim - self.n_equalities()
    }

    fn unit_row(&self, i: usize) -> &[f64] {
        &self.unit_rows[i * self.dim..(i + 1) * self.dim]
    }

    /// Membership with relative slack `MEMBERSHIP_TOL * |x|`.
    pub fn contains(&self, x: &[f64]) -> bool {
        self.contains_with_tol(x, MEMBERSHIP_TOL)
    }

    pub fn contains_with_tol(&self, x: &[f64], tol: f64) -> bool {
        assert_eq!(x.len(), self.dim);
        let norm = dot(x, x).sqrt();
        let slack = tol * norm;
        let ineq_ok = (0..self.n_constraints()).all(|i| dot(self.unit_row(i), x) >= -slack);
        let eq_ok = self.equalities.row_iter().all(|row| {
            let n = row.norm();
            let v: f64 = row.iter().zip(x).map(|(a, b)| a * b).sum();
            (v / n).abs() <= slack
        });
        ineq_ok && eq_ok
    }

    /// Project `z` into `out`, returning the number of the candidate used.
    /// Panics if the lengths do not match the cone dimension.
    pub fn project_into(&self, z: &[f64], out: &mut [f64]) -> usize {
        let p = self.dim;
        assert!(z.len() == p && out.len() == p);
        let e = self.n_equalities();
        let r = self.n_constraints();
        let tol = KKT_TOL * (1.0 + dot(z, z).sqrt());
        let mut best = (f64::INFINITY, 0usize);
        let mut x = [0.0f64; MAX_DIM];
        for (ci, cand) in self.candidates.iter().enumerate() {
            for (i, xi) in x.iter_mut().enumerate().take(p) {
                *xi = dot(&cand.proj[i * p..(i + 1) * p], z);
            }
            let mut violation: f64 = 0.0;
            for (j, _) in cand.ineq.iter().enumerate() {
                let row = e + j;
                let lambda = -dot(&cand.mult[row * p..(row + 1) * p], z);
                violation = violation.max(-lambda);
            }
            let mut next_active = cand.ineq.iter().peekable();
            for i in 0..r {
                if next_active.peek() == Some(&&i) {
                    next_active.next();
                    continue;
                }
                violation = violation.max(-dot(self.unit_row(i), &x[..p]));
            }
            if violation <= tol {
                out.copy_from_slice(&x[..p]);
                return ci;
            }
            if violation < best.0 {
                best = (violation, ci);
            }
        }
        let cand = &self.candidates[best.1];
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(&cand.proj[i * p..(i + 1) * p], z);
        }
        best.1
    }

    /// `|P z|^2` without allocating.
    pub fn projected_sq_norm(&self, z: &[f64]) -> f64 {
        let mut buf = [0.0f64; MAX_DIM];
        let out = &mut buf[..self.dim];
        self.project_into(z, out);
        dot(out, out)
    }

    /// Inequality constraints active at the projection `x` of `z`.
    pub fn active_at(&self, z: &[f64], x: &[f64]) -> Vec<usize> {
        let tol = ACTIVE_TOL * (1.0 + dot(z, z).sqrt());
        (0..self.n_constraints())
            .filter(|&i| dot(self.unit_row(i), x).abs() <= tol)
            .collect()
    }

    /// Projection of `z` onto the cone together with its active set.
    pub fn project(&self, z: &[f64]) -> Result<Projection> {
        check_point(z, self.dim)?;
        let mut out = vec![0.0; self.dim];
        self.project_into(z, &mut out);
        let active = self.active_at(z, &out);
        Ok(Projection {
            point: DVector::from_vec(out),
            active,
        })
    }

    /// Dimension of the face containing the projection of `z`.
    pub fn face_dimension(&self, z: &[f64]) -> Result<usize> {
        let proj = self.project(z)?;
        Ok(self.span_dim() - proj.active.len())
    }

    /// Allocation-free variant of [`face_dimension`](Self::face_dimension) for
    /// finite inputs of the right length.
    pub fn face_dimension_unchecked(&self, z: &[f64]) -> usize {
        let mut buf = [0.0f64; MAX_DIM];
        let out = &mut buf[..self.dim];
        self.project_into(z, out);
        let tol = ACTIVE_TOL * (1.0 + dot(z, z).sqrt());
        let n_active = (0..self.n_constraints())
            .filter(|&i| dot(self.unit_row(i), out).abs() <= tol)
            .count();
        self.span_dim() - n_active
    }

    /// Projection of `z` onto the linear span `{x : E x = 0}`.
    pub fn project_span(&self, z: &[f64]) -> Vec<f64> {
        let p = self.dim;
        let cand = &self.candidates[0];
        (0..p)
            .map(|i| dot(&cand.proj[i * p..(i + 1) * p], z))
            .collect()
    }

    /// Stable identifier derived from the constraint rows.
    pub fn id(&self) -> String {
        stats::fingerprint(
            &format!(
                "cone:{}:{}:{}",
                self.dim,
                self.n_constraints(),
                self.n_equalities()
            ),
            self.rows
                .transpose()
                .iter()
                .chain(self.equalities.transpose().iter())
                .copied(),
        )
    }

    fn to_record(&self, root: Option<&DMatrix<f64>>) -> ConeRecord {
        ConeRecord {
            dim: self.dim,
            rows: matrix_rows(&self.rows),
            equalities: matrix_rows(&self.equalities),
            root_a: root.map(matrix_rows),
        }
    }

    /// JSON record with fields `dim`, `rows` and `equalities`.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_record(None)).expect("cone record serializes")
    }
}

impl AsRef<PolyhedralCone> for PolyhedralCone {
    fn as_ref(&self) -> &PolyhedralCone {
        self
    }
}

/// `Delta = A^T C` for a cone `C = {V x >= 0}` and an invertible root `A` of
/// the information matrix (`A A^T = I`). Internally `Delta = {U d >= 0}` with
/// `U = V A^{-T}`.
#[derive(Clone, Debug)]
pub struct TransformedCone {
    base: PolyhedralCone,
    root_a: DMatrix<f64>,
    delta: PolyhedralCone,
}

impl TransformedCone {
    pub fn new(base: PolyhedralCone, root_a: DMatrix<f64>) -> Result<Self> {
        let p = base.dim();
        if root_a.nrows() != p || root_a.ncols() != p {
            return Err(Error::invalid(format!("root must be {p}x{p}")));
        }
        if root_a.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite root entry"));
        }
        let sv = root_a.clone().singular_values();
        if !(sv.min() > 1e-12 * sv.max()) {
            return Err(Error::invalid("root of the information matrix is singular"));
        }
        let inv_t = root_a
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::invalid("root of the information matrix is singular"))?
            .transpose();
        let u = base.rows() * &inv_t;
        let eq = base.equalities() * &inv_t;
        let delta = PolyhedralCone::with_equalities(p, u, eq)?;
        Ok(Self {
            base,
            root_a,
            delta,
        })
    }

    /// The untransformed cone with the identity root.
    pub fn identity(base: PolyhedralCone) -> Self {
        let p = base.dim();
        Self {
            delta: base.clone(),
            base,
            root_a: DMatrix::identity(p, p),
        }
    }

    pub fn base(&self) -> &PolyhedralCone {
        &self.base
    }

    pub fn root(&self) -> &DMatrix<f64> {
        &self.root_a
    }

    /// Rows of `U = V A^{-T}`.
    pub fn rows_u(&self) -> &DMatrix<f64> {
        self.delta.rows()
    }

    /// Rows of `U` scaled to unit length.
    pub fn unit_rows_u(&self) -> DMatrix<f64> {
        normalize_rows(self.delta.rows()).expect("rows validated at construction")
    }

    /// `Delta` as a polyhedral cone.
    pub fn delta(&self) -> &PolyhedralCone {
        &self.delta
    }

    pub fn dim(&self) -> usize {
        self.delta.dim()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.base.to_record(Some(&self.root_a)))
            .expect("cone record serializes")
    }
}

impl AsRef<PolyhedralCone> for TransformedCone {
    fn as_ref(&self) -> &PolyhedralCone {
        &self.delta
    }
}

/// Serialized form of a cone: `dim`, inequality `rows`, optional
/// `equalities` and optional root `rootA` (rows of `A`).
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ConeRecord {
    pub dim: usize,
    pub rows: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub equalities: Vec<Vec<f64>>,
    #[serde(rename = "rootA", default, skip_serializing_if = "Option::is_none")]
    pub root_a: Option<Vec<Vec<f64>>>,
}

impl ConeRecord {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::invalid(format!("cone record: {e}")))
    }

    /// Build the transformed cone (identity root when `rootA` is absent).
    pub fn build(&self) -> Result<TransformedCone> {
        let rows = rows_matrix(&self.rows, self.dim)?;
        let eq = rows_matrix(&self.equalities, self.dim)?;
        let base = PolyhedralCone::with_equalities(self.dim, rows, eq)?;
        match &self.root_a {
            None => Ok(TransformedCone::identity(base)),
            Some(a) => TransformedCone::new(base, rows_matrix(a, self.dim)?),
        }
    }
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn rows_matrix(rows: &[Vec<f64>], dim: usize) -> Result<DMatrix<f64>> {
    if rows.iter().any(|r| r.len() != dim) {
        return Err(Error::invalid(format!("every row must have {dim} entries")));
    }
    Ok(DMatrix::from_fn(rows.len(), dim, |i, j| rows[i][j]))
}

/// Project `z` onto `cone` (a [`PolyhedralCone`] or [`TransformedCone`]).
pub fn project_cone(z: &[f64], cone: &impl AsRef<PolyhedralCone>) -> Result<Projection> {
    cone.as_ref().project(z)
}

/// Dimension of the smallest face of `cone` containing the projection of `z`.
pub fn face_dimension(z: &[f64], cone: &impl AsRef<PolyhedralCone>) -> Result<usize> {
    cone.as_ref().face_dimension(z)
}

fn check_point(z: &[f64], dim: usize) -> Result<()> {
    if z.len() != dim {
        return Err(Error::invalid(format!(
            "point has length {}, cone dimension is {dim}",
            z.len()
        )));
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite point"));
    }
    Ok(())
}

/// Linear subspace with an orthonormal basis (columns).
#[derive(Clone, Debug)]
pub struct Subspace {
    basis: DMatrix<f64>,
}

impl Subspace {
    /// Wrap an orthonormal basis, checked to `1e-12`.
    pub fn new(basis: DMatrix<f64>) -> Result<Self> {
        let k = basis.ncols();
        let gram = basis.transpose() * &basis;
        let err = (gram - DMatrix::<f64>::identity(k, k)).amax();
        if err > 1e-12 {
            return Err(Error::invalid(format!(
                "basis is not orthonormal (error {err:e})"
            )));
        }
        Ok(Self { basis })
    }

    /// Orthonormalised span of the given columns.
    pub fn span(vectors: &DMatrix<f64>) -> Result<Self> {
        if vectors.ncols() == 0 {
            return Ok(Self::trivial(vectors.nrows()));
        }
        let sv = vectors.clone().singular_values();
        if sv.min() < RANK_TOL * sv.max().max(1.0) {
            return Err(Error::invalid("spanning vectors are linearly dependent"));
        }
        let q = vectors.clone().qr().q();
        Ok(Self { basis: q })
    }

    /// The zero subspace of `R^dim`.
    pub fn trivial(dim: usize) -> Self {
        Self {
            basis: DMatrix::zeros(dim, 0),
        }
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn project(&self, z: &[f64]) -> DVector<f64> {
        let z = DVector::from_column_slice(z);
        &self.basis * (self.basis.transpose() * z)
    }

    /// Orthonormal basis of the orthogonal complement, built greedily from the
    /// coordinate axes with the largest residual.
    pub fn complement(&self) -> DMatrix<f64> {
        let p = self.ambient_dim();
        let mut accepted: Vec<DVector<f64>> =
            self.basis.column_iter().map(|c| c.into_owned()).collect();
        let mut out = Vec::new();
        while accepted.len() < p {
            let mut best: Option<(f64, DVector<f64>)> = None;
            for i in 0..p {
                let mut v = DVector::zeros(p);
                v[i] = 1.0;
                for _ in 0..2 {
                    for a in &accepted {
                        let c = a.dot(&v);
                        v -= a * c;
                    }
                }
                let n = v.norm();
                if best.as_ref().is_none_or(|(bn, _)| n > *bn + 1e-12) {
                    best = Some((n, v));
                }
            }
            let (n, v) = best.expect("p > 0");
            let v = v / n;
            accepted.push(v.clone());
            out.push(v);
        }
        if out.is_empty() {
            DMatrix::zeros(p, 0)
        } else {
            DMatrix::from_columns(&out)
        }
    }
}

/// `Delta = Delta0 (+) K` with `K = Delta ∩ Delta0^perp`.
#[derive(Clone, Debug)]
pub struct ConeDecomposition {
    subspace: Subspace,
    complement: DMatrix<f64>,
    reduced: Option<PolyhedralCone>,
    embedded: PolyhedralCone,
}

impl ConeDecomposition {
    /// `K` in coordinates of the orthogonal complement basis, `None` when
    /// `Delta0` is the whole space.
    pub fn reduced(&self) -> Option<&PolyhedralCone> {
        self.reduced.as_ref()
    }

    /// `K` in the original coordinates (the null subspace appears as equality rows).
    pub fn embedded(&self) -> &PolyhedralCone {
        &self.embedded
    }

    /// Orthonormal basis (columns) of `Delta0^perp`.
    pub fn complement_basis(&self) -> &DMatrix<f64> {
        &self.complement
    }

    pub fn subspace(&self) -> &Subspace {
        &self.subspace
    }

    /// Projection onto `K` in the original coordinates.
    pub fn project_k(&self, z: &[f64]) -> DVector<f64> {
        let p = self.complement.nrows();
        match &self.reduced {
            None => DVector::zeros(p),
            Some(cone) => {
                let y = self.complement.transpose() * DVector::from_column_slice(z);
                let mut out = vec![0.0; cone.dim()];
                cone.project_into(y.as_slice(), &mut out);
                &self.complement * DVector::from_vec(out)
            }
        }
    }
}

/// Split `delta` against a linear subspace it contains.
pub fn decompose_cone(
    delta: &impl AsRef<PolyhedralCone>,
    null_subspace: &Subspace,
) -> Result<ConeDecomposition> {
    let delta = delta.as_ref();
    let p = delta.dim();
    if null_subspace.ambient_dim() != p {
        return Err(Error::invalid("subspace dimension does not match the cone"));
    }
    for (j, col) in null_subspace.basis().column_iter().enumerate() {
        let plus: Vec<f64> = col.iter().copied().collect();
        let minus: Vec<f64> = plus.iter().map(|v| -v).collect();
        if !delta.contains_with_tol(&plus, 1e-9) || !delta.contains_with_tol(&minus, 1e-9) {
            return Err(Error::Precondition(format!(
                "null subspace basis vector {j} is not a lineality direction of the cone"
            )));
        }
    }
    let q = null_subspace.complement();
    let k = null_subspace.dim();
    let reduced = if q.ncols() == 0 {
        None
    } else {
        Some(PolyhedralCone::with_equalities(
            q.ncols(),
            delta.rows() * &q,
            delta.equalities() * &q,
        )?)
    };
    let mut eq = DMatrix::zeros(delta.n_equalities() + k, p);
    eq.rows_mut(0, delta.n_equalities())
        .copy_from(delta.equalities());
    eq.rows_mut(delta.n_equalities(), k)
        .copy_from(&null_subspace.basis().transpose());
    let embedded = PolyhedralCone::with_equalities(p, delta.rows().clone(), eq)?;
    Ok(ConeDecomposition {
        subspace: null_subspace.clone(),
        complement: q,
        reduced,
        embedded,
    })
}

/// Sampled Hausdorff-type distance between two cones.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SetDistance {
    /// `d_M` at the requested radius.
    pub d_radius: f64,
    /// `sum_{M=1}^{20} 2^{-M} min(d_M, 1)`.
    pub d: f64,
}

fn van_der_corput(mut i: u64) -> f64 {
    let mut x = 0.0;
    let mut base = 0.5;
    while i > 0 {
        if i & 1 == 1 {
            x += base;
        }
        base *= 0.5;
        i >>= 1;
    }
    x
}

/// First `n` unit directions of a nested quasi-uniform sequence on the sphere.
fn sphere_directions(dim: usize, n: usize) -> Vec<Vec<f64>> {
    match dim {
        1 => (0..n.max(2))
            .map(|i| vec![if i % 2 == 0 { 1.0 } else { -1.0 }])
            .collect(),
        2 => (0..n)
            .map(|i| {
                let a = 2.0 * std::f64::consts::PI * van_der_corput(i as u64);
                vec![a.cos(), a.sin()]
            })
            .collect(),
        _ => {
            let mut g = rng::substream(0x5e7_d157, 0);
            (0..n)
                .map(|_| {
                    let v: Vec<f64> = (0..dim).map(|_| g.sample(StandardNormal)).collect();
                    let n = dot(&v, &v).sqrt();
                    v.into_iter().map(|x| x / n).collect()
                })
                .collect()
        }
    }
}

fn one_sided(a: &PolyhedralCone, b: &PolyhedralCone, dirs: &[Vec<f64>]) -> f64 {
    let p = a.dim();
    let mut worst: f64 = 0.0;
    let mut x = vec![0.0; p];
    let mut y = vec![0.0; p];
    for u in dirs {
        a.project_into(u, &mut x);
        let n = dot(&x, &x).sqrt();
        if n <= 1e-12 {
            continue;
        }
        x.iter_mut().for_each(|v| *v /= n);
        b.project_into(&x, &mut y);
        let d: f64 = x
            .iter()
            .zip(&y)
            .map(|(s, t)| (s - t) * (s - t))
            .sum::<f64>()
            .sqrt();
        worst = worst.max(d);
    }
    worst
}

/// Diagnostic approximation of the set distance: unit members of each cone
/// are sampled by projecting `n_dirs` quasi-uniform directions, and the
/// worst distance to the other cone is scaled by the radius (both sets are
/// cones). Direction sets are nested, so estimates are nondecreasing in
/// `n_dirs`.
pub fn set_distance(
    a: &impl AsRef<PolyhedralCone>,
    b: &impl AsRef<PolyhedralCone>,
    max_radius: f64,
    n_dirs: usize,
) -> Result<SetDistance> {
    let (a, b) = (a.as_ref(), b.as_ref());
    if a.dim() != b.dim() {
        return Err(Error::invalid("cones live in different dimensions"));
    }
    if !(max_radius > 0.0) || n_dirs == 0 {
        return Err(Error::invalid(
            "radius must be positive and n_dirs at least 1",
        ));
    }
    let dirs = sphere_directions(a.dim(), n_dirs);
    let unit = one_sided(a, b, &dirs).max(one_sided(b, a, &dirs));
    let d = (1..=20)
        .map(|m| 0.5f64.powi(m) * (m as f64 * unit).min(1.0))
        .sum();
    Ok(SetDistance {
        d_radius: max_radius * unit,
        d,
    })
}

/// Write `case,z_1..z_p,x_1..x_p,active` rows for cross-implementation checks.
pub fn write_projection_csv<W: Write>(
    out: &mut W,
    cone: &impl AsRef<PolyhedralCone>,
    points: &[Vec<f64>],
) -> Result<()> {
    let cone = cone.as_ref();
    let p = cone.dim();
    let io = |e: std::io::Error| Error::invalid(format!("write failed: {e}"));
    let mut header = vec!["case".to_string()];
    header.extend((1..=p).map(|i| format!("z{i}")));
    header.extend((1..=p).map(|i| format!("x{i}")));
    header.push("active".into());
    writeln!(out, "{}", header.join(",")).map_err(io)?;
    for (case, z) in points.iter().enumerate() {
        let proj = cone.project(z)?;
        let mut fields = vec![case.to_string()];
        fields.extend(z.iter().map(|v| format!("{v:e}")));
        fields.extend(proj.point.iter().map(|v| format!("{v:e}")));
        fields.push(
            proj.active
                .iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(" "),
        );
        writeln!(out, "{}", fields.join(",")).map_err(io)?;
    }
    Ok(())
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

//! Dense complex linear algebra: Hermitian spectral decomposition, the
//! lattice operations on subspace projections, and ray utilities.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Numerical thresholds shared by every operation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// General equality / membership threshold.
    pub tol: f64,
    /// Eigenvalues of `P + Q` within this distance of 2 span the meet.
    pub meet_tol: f64,
    /// Eigenvalues closer than this are merged into one spectral projection.
    pub merge_tol: f64,
    /// Eigenvalues of a projection within this distance of 1 count towards its rank.
    pub rank_tol: f64,
    /// Spectral components with norm above this are considered nonzero.
    pub comp_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            tol: 1e-9,
            meet_tol: 1e-7,
            merge_tol: 1e-8,
            rank_tol: 1e-7,
            comp_tol: 1e-8,
        }
    }
}

impl Tolerances {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_rank_tol(mut self, rank_tol: f64) -> Self {
        self.rank_tol = rank_tol;
        self
    }
}

pub fn frobenius(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest singular value.
pub fn operator_norm(a: &CMatrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone().singular_values().iter().cloned().fold(0.0, f64::max)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn zeros(n: usize) -> CMatrix {
    CMatrix::zeros(n, n)
}

pub fn outer(v: &CVector, w: &CVector) -> CMatrix {
    v * w.adjoint()
}

/// `⟨v, w⟩ = v* w`.
pub fn inner(v: &CVector, w: &CVector) -> C64 {
    v.dotc(w)
}

pub fn basis_vector(n: usize, j: usize) -> CVector {
    let mut e = CVector::zeros(n);
    e[j] = ONE;
    e
}

pub fn hermitian_residual(a: &CMatrix) -> f64 {
    frobenius(&(a - a.adjoint()))
}

/// Relative Hermitian check: `‖A − A*‖ ≤ tol · max(1, ‖A‖)`.
pub fn check_hermitian(a: &CMatrix, tol: f64) -> Result<()> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    let residual = hermitian_residual(a);
    if residual <= tol * frobenius(a).max(1.0) {
        Ok(())
    } else {
        Err(Error::NonHermitian { residual })
    }
}

pub fn is_unitary(u: &CMatrix, tol: f64) -> bool {
    u.is_square() && frobenius(&(u.adjoint() * u - identity(u.nrows()))) <= tol * (u.nrows() as f64).max(1.0)
}

fn same_dim(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: a,
            found: b,
        })
    }
}

/// Raw eigendecomposition of a Hermitian matrix: eigenvalues ascending and
/// the matching orthonormal eigenvectors as columns.
pub(crate) fn eigh(a: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = a.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let sym = (a + a.adjoint()).scale(0.5);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

fn columns(v: &CMatrix, idx: &[usize]) -> CMatrix {
    let mut out = CMatrix::zeros(v.nrows(), idx.len());
    for (dst, &src) in idx.iter().enumerate() {
        out.set_column(dst, &v.column(src));
    }
    out
}

/// An orthogonal projection `P = P* = P²`, validated on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection(CMatrix);

impl Projection {
    pub fn new(m: CMatrix, tol: f64) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NotAProjection("matrix is not square".into()));
        }
        let herm = hermitian_residual(&m);
        if herm > tol {
            return Err(Error::NotAProjection(format!("‖P − P*‖ = {herm:.3e}")));
        }
        let idem = frobenius(&(&m * &m - &m));
        if idem > tol {
            return Err(Error::NotAProjection(format!("‖P² − P‖ = {idem:.3e}")));
        }
        Ok(Projection(m))
    }

    /// Wraps a matrix the caller has built as a projection.
    pub(crate) fn trusted(m: CMatrix) -> Self {
        Projection(m)
    }

    pub fn zero(n: usize) -> Self {
        Projection(zeros(n))
    }

    pub fn identity(n: usize) -> Self {
        Projection(identity(n))
    }

    /// `vv*` for the normalized direction of `v`.
    pub fn onto_ray(v: &CVector) -> Result<Self> {
        let norm = v.norm();
        if norm == 0.0 {
            return Err(Error::ZeroVector);
        }
        let u = v.unscale(norm);
        Ok(Projection(outer(&u, &u)))
    }

    /// `VV*` for a matrix `V` with orthonormal columns.
    pub fn onto_columns(v: &CMatrix) -> Self {
        Projection(v * v.adjoint())
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn complement(&self) -> Self {
        Projection(identity(self.dim()) - &self.0)
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        frobenius(&self.0) <= tol
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        frobenius(&(identity(self.dim()) - &self.0)) <= tol
    }

    pub fn approx_eq(&self, other: &Projection, tol: f64) -> bool {
        self.dim() == other.dim() && frobenius(&(&self.0 - &other.0)) <= tol
    }

    pub fn commutes_with(&self, other: &Projection, tol: f64) -> bool {
        self.dim() == other.dim() && frobenius(&(&self.0 * &other.0 - &other.0 * &self.0)) <= tol
    }

    /// Orthonormal basis of the range, one column per eigenvalue near 1.
    pub fn range_basis(&self, tol: &Tolerances) -> CMatrix {
        let (values, vectors) = eigh(&self.0);
        let idx: Vec<usize> = values
            .iter()
            .enumerate()
            .filter(|(_, &l)| (l - 1.0).abs() <= tol.rank_tol)
            .map(|(i, _)| i)
            .collect();
        columns(&vectors, &idx)
    }
}

/// A partial isometry `θ`: both `θ*θ` and `θθ*` are projections.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialIsometry(CMatrix);

impl PartialIsometry {
    pub fn new(m: CMatrix, tol: f64) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NotAPartialIsometry);
        }
        let src = m.adjoint() * &m;
        let dst = &m * m.adjoint();
        if Projection::new(src, tol).is_err() || Projection::new(dst, tol).is_err() {
            return Err(Error::NotAPartialIsometry);
        }
        Ok(PartialIsometry(m))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    /// `θ*θ`.
    pub fn source(&self) -> Projection {
        Projection(self.0.adjoint() * &self.0)
    }

    /// `θθ*`.
    pub fn target(&self) -> Projection {
        Projection(&self.0 * self.0.adjoint())
    }

    pub fn adjoint(&self) -> PartialIsometry {
        PartialIsometry(self.0.adjoint())
    }
}

/// Spectral resolution `A = Σ μ Π_μ` with distinct (merged) eigenvalues.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub eigenvalues: Vec<f64>,
    pub projections: Vec<Projection>,
    /// Orthonormal eigenbasis of each eigenspace, aligned with `eigenvalues`.
    pub bases: Vec<CMatrix>,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.projections.first().map_or(0, Projection::dim)
    }

    pub fn reconstruct(&self) -> CMatrix {
        let mut out = zeros(self.dim());
        for (mu, p) in self.eigenvalues.iter().zip(&self.projections) {
            out += p.matrix().scale(*mu);
        }
        out
    }
}

pub fn hermitian_spectral(a: &CMatrix, tol: &Tolerances) -> Result<EigenSystem> {
    check_hermitian(a, tol.tol)?;
    let (values, vectors) = eigh(a);
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for (i, &l) in values.iter().enumerate() {
        match clusters.last_mut() {
            Some(c) if l - values[*c.last().unwrap()] <= tol.merge_tol => c.push(i),
            _ => clusters.push(vec![i]),
        }
    }
    let mut eigenvalues = Vec::with_capacity(clusters.len());
    let mut projections = Vec::with_capacity(clusters.len());
    let mut bases = Vec::with_capacity(clusters.len());
    for c in clusters {
        eigenvalues.push(c.iter().map(|&i| values[i]).sum::<f64>() / c.len() as f64);
        let basis = columns(&vectors, &c);
        projections.push(Projection::onto_columns(&basis));
        bases.push(basis);
    }
    Ok(EigenSystem {
        eigenvalues,
        projections,
        bases,
    })
}

/// Projection onto `ran P ∩ ran Q`, read off the eigenvalue-2 eigenspace of `P + Q`.
pub fn project_meet(p: &Projection, q: &Projection, tol: &Tolerances) -> Result<Projection> {
    same_dim(p.dim(), q.dim())?;
    let (values, vectors) = eigh(&(p.matrix() + q.matrix()));
    let idx: Vec<usize> = values
        .iter()
        .enumerate()
        .filter(|(_, &l)| (l - 2.0).abs() <= tol.meet_tol)
        .map(|(i, _)| i)
        .collect();
    Ok(Projection::onto_columns(&columns(&vectors, &idx)))
}

/// `P ∨ Q = I − ((I − P) ∧ (I − Q))`.
pub fn project_join(p: &Projection, q: &Projection, tol: &Tolerances) -> Result<Projection> {
    same_dim(p.dim(), q.dim())?;
    Ok(project_meet(&p.complement(), &q.complement(), tol)?.complement())
}

/// `P ≤ Q` iff `‖QP − P‖ ≤ tol`.
pub fn project_leq(p: &Projection, q: &Projection, tol: &Tolerances) -> Result<bool> {
    same_dim(p.dim(), q.dim())?;
    Ok(frobenius(&(q.matrix() * p.matrix() - p.matrix())) <= tol.tol)
}

pub fn rank_of(p: &Projection, tol: &Tolerances) -> usize {
    let (values, _) = eigh(p.matrix());
    values.iter().filter(|&&l| (l - 1.0).abs() <= tol.rank_tol).count()
}

/// Rescales `v` so that its largest-magnitude coordinate (first one on ties)
/// is real and positive.
pub fn canonical_phase(v: &CVector) -> CVector {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return v.clone();
    }
    let lead = v
        .iter()
        .find(|z| z.norm() >= max * (1.0 - 1e-12))
        .copied()
        .unwrap_or(ONE);
    let phase = lead.conj() / lead.norm();
    v.map(|z| z * phase)
}

/// Normalizes and phase-canonicalizes a nonzero vector.
pub fn canonical_ray(v: &CVector) -> Result<CVector> {
    let norm = v.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::ZeroVector);
    }
    Ok(canonical_phase(&v.unscale(norm)))
}

/// `|⟨v, w⟩| ≥ 1 − tol` for unit vectors.
pub fn same_ray(v: &CVector, w: &CVector, tol: f64) -> bool {
    v.len() == w.len() && inner(v, w).norm() >= 1.0 - tol
}

/// A unitary `T` with `Tv = c·w`, `|c| = 1`: a Householder reflection
/// taking `v` to the phase-aligned copy of `w`.
pub fn unitary_mapping_ray(v: &CVector, w: &CVector, tol: &Tolerances) -> Result<CMatrix> {
    same_dim(v.len(), w.len())?;
    let v = v.unscale(nonzero_norm(v)?);
    let w = w.unscale(nonzero_norm(w)?);
    let n = v.len();
    let overlap = inner(&w, &v);
    if overlap.norm() >= 1.0 - tol.tol {
        return Ok(identity(n));
    }
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        ONE
    };
    let target = w.map(|z| z * phase);
    let u = &v - &target;
    let uu = u.norm_squared();
    Ok(identity(n) - outer(&u, &u).scale(2.0 / uu))
}

fn nonzero_norm(v: &CVector) -> Result<f64> {
    let norm = v.norm();
    if norm == 0.0 {
        Err(Error::ZeroVector)
    } else {
        Ok(norm)
    }
}

/// Extends the unit vector `v` to an orthonormal basis whose first column is `v`,
/// filling with Gram–Schmidt over the standard basis.
pub fn complete_basis(v: &CVector) -> Result<CMatrix> {
    let n = v.len();
    let v = v.unscale(nonzero_norm(v)?);
    let mut cols: Vec<CVector> = vec![v];
    for j in 0..n {
        if cols.len() == n {
            break;
        }
        let mut x = basis_vector(n, j);
        for c in &cols {
            let proj = inner(c, &x);
            x -= c * proj;
        }
        // second pass for numerical orthogonality
        for c in &cols {
            let proj = inner(c, &x);
            x -= c * proj;
        }
        let norm = x.norm();
        if norm > 1e-6 {
            cols.push(x.unscale(norm));
        }
    }
    Ok(CMatrix::from_columns(&cols))
}

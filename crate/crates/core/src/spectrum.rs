//! Quasipoints of `R` as `(block, ray)` pairs.
//!
//! A quasipoint over the center atom `i` with ray `v` is the maximal dual ideal
//! `{P : P_i v = v}`, the principal filter generated by the minimal abelian
//! projection `vv*` placed at block `i`. Every quasipoint of a finite block
//! algebra has this form, so the dual ideal itself is only ever exposed
//! through [`qp_contains`].

use std::collections::BTreeMap;

use crate::algebra::{
    self, central_support, ensure_shape, extend_abelian_full_support, is_abelian_projection, AlgebraShape,
    BlockOperator, BlockProjection, CenterAtom, CenterPartitionSubalgebra, CentralProjection,
};
use crate::error::{Error, Result};
use crate::matrix::{
    canonical_ray, frobenius, identity, inner, outer, project_leq, same_ray, unitary_mapping_ray, CVector,
    PartialIsometry, Projection, Tolerances,
};
use crate::rng::{self, SeedStream};

#[derive(Debug, Clone, PartialEq)]
pub struct Quasipoint {
    shape: AlgebraShape,
    block: usize,
    ray: CVector,
}

impl Quasipoint {
    /// Normalizes and phase-canonicalizes `v`.
    pub fn new(shape: AlgebraShape, block: usize, v: &CVector) -> Result<Self> {
        if block >= shape.m {
            return Err(Error::BadBlockIndex { index: block, m: shape.m });
        }
        if v.len() != shape.n {
            return Err(Error::DimensionMismatch {
                expected: shape.n,
                found: v.len(),
            });
        }
        Ok(Quasipoint {
            shape,
            block,
            ray: canonical_ray(v)?,
        })
    }

    pub fn shape(&self) -> AlgebraShape {
        self.shape
    }

    pub fn block(&self) -> usize {
        self.block
    }

    pub fn atom(&self) -> CenterAtom {
        CenterAtom(self.block)
    }

    pub fn ray(&self) -> &CVector {
        &self.ray
    }

    /// Same atom and `|⟨v, v′⟩| ≥ 1 − tol`.
    pub fn same_as(&self, other: &Quasipoint, tol: f64) -> bool {
        self.shape == other.shape && self.block == other.block && same_ray(&self.ray, &other.ray, tol)
    }

    /// The minimal abelian element `vv*` at block `i`, zero elsewhere.
    pub fn generator(&self) -> BlockProjection {
        BlockProjection::at_block(self.shape, self.block, Projection::trusted(outer(&self.ray, &self.ray)))
    }
}

pub fn qp_contains(q: &Quasipoint, p: &BlockProjection, tol: &Tolerances) -> Result<bool> {
    ensure_shape(q.shape, p.shape())?;
    let pv = p.block(q.block).matrix() * &q.ray;
    Ok((pv - &q.ray).norm() <= tol.tol)
}

/// `𝔅 ↦ 𝔅 ∩ C`.
pub fn zeta_center(q: &Quasipoint) -> CenterAtom {
    q.atom()
}

/// `𝔅 ↦ 𝔅 ∩ A`, identified with the cell of `A` containing the atom.
pub fn zeta_subalgebra(q: &Quasipoint, a: &CenterPartitionSubalgebra) -> Result<CentralProjection> {
    if a.blocks() != q.shape.m {
        return Err(Error::ShapeMismatch("partition block count differs from algebra".into()));
    }
    Ok(a.cell_of(q.block))
}

/// The unique quasipoint over `β` containing the abelian projection `E`.
pub fn quasipoint_from_abelian(e: &BlockProjection, beta: CenterAtom, tol: &Tolerances) -> Result<Quasipoint> {
    if !is_abelian_projection(e, tol) {
        return Err(Error::NotAbelian);
    }
    let shape = e.shape();
    shape.atom(beta.0)?;
    let basis = e.block(beta.0).range_basis(tol);
    if basis.ncols() == 0 {
        return Err(Error::NotOverBeta(beta.0));
    }
    Quasipoint::new(shape, beta.0, &basis.column(0).into_owned())
}

/// `σ_E : Q_{s_C(E)}(C) → Q(R)`, one quasipoint per atom of the support.
pub fn section_sigma(e: &BlockProjection, tol: &Tolerances) -> Result<BTreeMap<CenterAtom, Quasipoint>> {
    if !is_abelian_projection(e, tol) {
        return Err(Error::NotAbelian);
    }
    let support = central_support(e, tol);
    if support.is_empty() {
        return Err(Error::ZeroProjection);
    }
    support
        .support()
        .into_iter()
        .map(|k| Ok((CenterAtom(k), quasipoint_from_abelian(e, CenterAtom(k), tol)?)))
        .collect()
}

/// The central `p` with `P ∧ E = pE` for abelian `E`.
pub fn meet_with_abelian_central_factor(p: &BlockProjection, e: &BlockProjection, tol: &Tolerances) -> Result<CentralProjection> {
    ensure_shape(p.shape(), e.shape())?;
    if !is_abelian_projection(e, tol) {
        return Err(Error::NotAbelian);
    }
    let support = central_support(e, tol);
    let mut keep = Vec::new();
    for k in support.support() {
        if project_leq(e.block(k), p.block(k), tol)? {
            keep.push(k);
        }
    }
    CentralProjection::from_support(p.shape().m, keep)
}

fn check_unitary(t: &BlockOperator, tol: &Tolerances) -> Result<()> {
    if t.is_unitary(tol.tol) {
        Ok(())
    } else {
        Err(Error::NotUnitary)
    }
}

/// `θ_*𝔅` for a partial isometry with `θ*θ ∈ 𝔅`.
pub fn theta_pushforward(theta: &BlockOperator, q: &Quasipoint, tol: &Tolerances) -> Result<Quasipoint> {
    ensure_shape(theta.shape(), q.shape)?;
    let blocks = theta
        .blocks()
        .iter()
        .map(|b| PartialIsometry::new(b.clone(), tol.tol))
        .collect::<Result<Vec<_>>>()?;
    let source = BlockProjection::from_blocks(q.shape, blocks.iter().map(PartialIsometry::source).collect())?;
    if !qp_contains(q, &source, tol)? {
        return Err(Error::NotInDomain);
    }
    Quasipoint::new(q.shape, q.block, &(theta.block(q.block) * &q.ray))
}

/// `T.𝔅 = {TPT* : P ∈ 𝔅}`.
pub fn unitary_action(t: &BlockOperator, q: &Quasipoint, tol: &Tolerances) -> Result<Quasipoint> {
    ensure_shape(t.shape(), q.shape)?;
    check_unitary(t, tol)?;
    Quasipoint::new(q.shape, q.block, &(t.block(q.block) * &q.ray))
}

/// A block unitary carrying `𝔅` to `𝔅′` (same fibre of `ζ_C`).
pub fn transitive_witness(q: &Quasipoint, q2: &Quasipoint, tol: &Tolerances) -> Result<BlockOperator> {
    ensure_shape(q.shape, q2.shape)?;
    if q.block != q2.block {
        return Err(Error::DifferentFibre(q.block, q2.block));
    }
    let t_i = unitary_mapping_ray(&q.ray, &q2.ray, tol)?;
    let n = q.shape.n;
    Ok(BlockOperator::from_fn(q.shape, |k| if k == q.block { t_i.clone() } else { identity(n) }))
}

/// The four equivalent isotropy conditions for `T` at `𝔅`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IsotropyReport {
    /// `T.𝔅 = 𝔅`.
    pub fixes_quasipoint: bool,
    /// `TET* ∈ 𝔅` for the generating abelian `E`.
    pub some_abelian: bool,
    /// `TET* ∈ 𝔅` for every abelian `E` in the tested family.
    pub all_abelian: bool,
    /// `T_i` commutes with `vv*`.
    pub commutes: bool,
}

impl IsotropyReport {
    pub fn agree(&self) -> bool {
        let v = self.fixes_quasipoint;
        self.some_abelian == v && self.all_abelian == v && self.commutes == v
    }
}

pub fn isotropy_test(t: &BlockOperator, q: &Quasipoint, tol: &Tolerances) -> Result<(bool, IsotropyReport)> {
    ensure_shape(t.shape(), q.shape)?;
    check_unitary(t, tol)?;
    let t_i = t.block(q.block);
    let overlap = inner(&q.ray, &(t_i * &q.ray)).norm();
    let generator = q.generator();
    let family = [generator.clone(), extend_abelian_full_support(&generator, tol)?];
    let some_abelian = qp_contains(q, &generator.conjugate_by(t), tol)?;
    let mut all_abelian = true;
    for e in &family {
        all_abelian &= qp_contains(q, &e.conjugate_by(t), tol)?;
    }
    let vv = outer(&q.ray, &q.ray);
    let commutes = frobenius(&(t_i * &vv - &vv * t_i)) <= tol.tol;
    let report = IsotropyReport {
        fixes_quasipoint: same_ray(&q.ray, &(t_i * &q.ray), tol.tol),
        some_abelian,
        all_abelian,
        commutes,
    };
    Ok((overlap >= 1.0 - tol.tol, report))
}

/// A finite family of projections whose total meet must be nonzero.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBase {
    shape: AlgebraShape,
    projections: Vec<BlockProjection>,
}

impl FilterBase {
    pub fn new(shape: AlgebraShape, projections: Vec<BlockProjection>) -> Result<Self> {
        for p in &projections {
            ensure_shape(shape, p.shape())?;
        }
        Ok(FilterBase { shape, projections })
    }

    pub fn shape(&self) -> AlgebraShape {
        self.shape
    }

    pub fn projections(&self) -> &[BlockProjection] {
        &self.projections
    }

    /// Blockwise iterated meet; `I` for the empty family.
    pub fn total_meet(&self, tol: &Tolerances) -> Result<BlockProjection> {
        self.projections
            .iter()
            .try_fold(BlockProjection::identity(self.shape), |acc, p| acc.meet(p, tol))
    }
}

/// Extends a filter base to a quasipoint containing it.
///
/// With `G` the total meet, the atom is `preferred_atom` when it lies in the
/// central support of `G`, otherwise the smallest such index. `G` has the
/// minimal rank over that atom among all members of the filter, and any unit
/// vector of `ran G_i` spans an abelian subprojection lying under every member;
/// the first vector of the spectral range basis is used.
pub fn extend_filterbase(f: &FilterBase, preferred_atom: Option<CenterAtom>, tol: &Tolerances) -> Result<Quasipoint> {
    let g = f.total_meet(tol)?;
    let support = central_support(&g, tol);
    if support.is_empty() {
        return Err(Error::NotAFilterBase);
    }
    let atom = match preferred_atom {
        Some(a) if support.contains(a.0) => a.0,
        Some(a) => return Err(Error::AtomNotAdmissible(a.0)),
        None => support.support()[0],
    };
    let basis = g.block(atom).range_basis(tol);
    Quasipoint::new(f.shape, atom, &basis.column(0).into_owned())
}

/// `count` quasipoints over `β` with rays uniform on the unit sphere.
pub fn fibre_sample(shape: AlgebraShape, beta: CenterAtom, count: usize, seed: u64) -> Result<Vec<Quasipoint>> {
    shape.atom(beta.0)?;
    let mut r = SeedStream::new(seed).split("fibre").split_index(beta.0 as u64).rng();
    (0..count)
        .map(|_| Quasipoint::new(shape, beta.0, &rng::unit_vector(shape.n, &mut r)))
        .collect()
}

/// The `F`-socle `{P ∈ 𝔅 : P ≤ F}`, described by its least element.
#[derive(Debug, Clone, PartialEq)]
pub struct SocleDescriptor {
    pub quasipoint: Quasipoint,
    pub bound: BlockProjection,
    pub minimal: BlockProjection,
}

pub fn socle(q: &Quasipoint, f: &BlockProjection, tol: &Tolerances) -> Result<SocleDescriptor> {
    if !qp_contains(q, f, tol)? {
        return Err(Error::NotInDomain);
    }
    Ok(SocleDescriptor {
        quasipoint: q.clone(),
        bound: f.clone(),
        minimal: q.generator(),
    })
}

/// For `P ∉ 𝔅`, a member `Q ∈ 𝔅` with `P ∧ Q = 0`; `None` when `P ∈ 𝔅`.
pub fn separating_member(q: &Quasipoint, p: &BlockProjection, tol: &Tolerances) -> Result<Option<BlockProjection>> {
    if qp_contains(q, p, tol)? {
        Ok(None)
    } else {
        Ok(Some(q.generator()))
    }
}

/// The abelian projection with full central support that `𝔅` contains.
pub fn full_support_abelian_member(q: &Quasipoint, tol: &Tolerances) -> Result<BlockProjection> {
    algebra::extend_abelian_full_support(&q.generator(), tol)
}

//! The algebra `R = M_n ⊕ ⋯ ⊕ M_n` (m blocks) over its center `C ≅ ℂ^m`.
//!
//! Every quasipoint of `C` is the principal filter at a single block, so the
//! "there is some central `p ∈ β`" conditions below all reduce to statements
//! about the block `β.index`.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{
    self, basis_vector, frobenius, identity, inner, operator_norm, project_join, project_leq, project_meet, rank_of,
    zeros, CMatrix, CVector, Projection, Tolerances, C64, ONE,
};

/// Maximum number of blocks; central projections are `u64` bitmasks.
pub const MAX_BLOCKS: usize = 64;

/// Default bound on `m·n` for generated workloads.
pub const DEFAULT_SHAPE_CAP: usize = 64;

/// Environment variable overriding [`DEFAULT_SHAPE_CAP`].
pub const SHAPE_CAP_VAR: &str = "STONESPEC_CAP";

/// The `m·n` cap from `STONESPEC_CAP`, or the default when unset.
pub fn shape_cap() -> Result<usize> {
    match std::env::var(SHAPE_CAP_VAR) {
        Err(_) => Ok(DEFAULT_SHAPE_CAP),
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&c| c > 0)
            .ok_or_else(|| Error::InvalidInput(format!("{SHAPE_CAP_VAR} must be a positive integer, got '{v}'"))),
    }
}

pub fn check_shape_cap(shape: AlgebraShape, cap: usize) -> Result<()> {
    let size = shape.m * shape.n;
    if size > cap {
        return Err(Error::ShapeCapExceeded { size, cap });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AlgebraShape {
    pub m: usize,
    pub n: usize,
}

impl AlgebraShape {
    pub fn new(m: usize, n: usize) -> Result<Self> {
        if m == 0 || n == 0 || m > MAX_BLOCKS {
            return Err(Error::BadShape { m, n });
        }
        Ok(AlgebraShape { m, n })
    }

    pub fn atoms(&self) -> impl Iterator<Item = CenterAtom> {
        (0..self.m).map(CenterAtom)
    }

    pub fn atom(&self, index: usize) -> Result<CenterAtom> {
        if index < self.m {
            Ok(CenterAtom(index))
        } else {
            Err(Error::BadBlockIndex { index, m: self.m })
        }
    }
}

pub(crate) fn ensure_shape(a: AlgebraShape, b: AlgebraShape) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::ShapeMismatch(format!(
            "({}, {}) vs ({}, {})",
            a.m, a.n, b.m, b.n
        )))
    }
}

/// A quasipoint of the center: the principal filter at one block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CenterAtom(pub usize);

impl CenterAtom {
    pub fn index(&self) -> usize {
        self.0
    }
}

/// An element of `R`: one `n × n` complex matrix per block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockOperator {
    shape: AlgebraShape,
    blocks: Vec<CMatrix>,
}

impl BlockOperator {
    pub fn new(shape: AlgebraShape, blocks: Vec<CMatrix>) -> Result<Self> {
        if blocks.len() != shape.m {
            return Err(Error::ShapeMismatch(format!(
                "expected {} blocks, found {}",
                shape.m,
                blocks.len()
            )));
        }
        for b in &blocks {
            if b.nrows() != shape.n || b.ncols() != shape.n {
                return Err(Error::ShapeMismatch(format!(
                    "expected {n}×{n} block, found {}×{}",
                    b.nrows(),
                    b.ncols(),
                    n = shape.n
                )));
            }
            if b.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::InvalidInput("non-finite matrix entry".into()));
            }
        }
        Ok(BlockOperator { shape, blocks })
    }

    pub fn from_fn(shape: AlgebraShape, mut f: impl FnMut(usize) -> CMatrix) -> Self {
        BlockOperator {
            shape,
            blocks: (0..shape.m).map(&mut f).collect(),
        }
    }

    pub fn identity(shape: AlgebraShape) -> Self {
        Self::from_fn(shape, |_| identity(shape.n))
    }

    pub fn zero(shape: AlgebraShape) -> Self {
        Self::from_fn(shape, |_| zeros(shape.n))
    }

    /// The central element with scalar `values[k]` on block `k`.
    pub fn central(shape: AlgebraShape, values: &[C64]) -> Result<Self> {
        if values.len() != shape.m {
            return Err(Error::ShapeMismatch(format!(
                "expected {} central values, found {}",
                shape.m,
                values.len()
            )));
        }
        Ok(Self::from_fn(shape, |k| identity(shape.n) * values[k]))
    }

    pub fn shape(&self) -> AlgebraShape {
        self.shape
    }

    pub fn block(&self, k: usize) -> &CMatrix {
        &self.blocks[k]
    }

    pub fn blocks(&self) -> &[CMatrix] {
        &self.blocks
    }

    pub fn with_block(mut self, k: usize, block: CMatrix) -> Result<Self> {
        if k >= self.shape.m {
            return Err(Error::BadBlockIndex { index: k, m: self.shape.m });
        }
        self.blocks[k] = block;
        Self::new(self.shape, self.blocks)
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.shape, |k| self.blocks[k].adjoint())
    }

    pub fn scale(&self, c: C64) -> Self {
        Self::from_fn(self.shape, |k| &self.blocks[k] * c)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.blocks.iter().all(|b| matrix::check_hermitian(b, tol).is_ok())
    }

    pub fn check_hermitian(&self, tol: f64) -> Result<()> {
        self.blocks.iter().try_for_each(|b| matrix::check_hermitian(b, tol))
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.blocks.iter().all(|b| matrix::is_unitary(b, tol))
    }

    pub fn approx_eq(&self, other: &BlockOperator, tol: f64) -> bool {
        self.shape == other.shape
            && self
                .blocks
                .iter()
                .zip(&other.blocks)
                .all(|(a, b)| frobenius(&(a - b)) <= tol)
    }

    /// `pA` for a central projection `p`.
    pub fn restrict(&self, p: &CentralProjection) -> Self {
        Self::from_fn(self.shape, |k| {
            if p.contains(k) {
                self.blocks[k].clone()
            } else {
                zeros(self.shape.n)
            }
        })
    }

    /// `TAT*`.
    pub fn conjugate_by(&self, t: &BlockOperator) -> Self {
        t * &(self * &t.adjoint())
    }
}

fn zip_blocks(a: &BlockOperator, b: &BlockOperator, f: impl Fn(&CMatrix, &CMatrix) -> CMatrix) -> BlockOperator {
    assert_eq!(a.shape, b.shape, "block operator shape mismatch");
    BlockOperator::from_fn(a.shape, |k| f(&a.blocks[k], &b.blocks[k]))
}

impl Mul for &BlockOperator {
    type Output = BlockOperator;
    fn mul(self, rhs: &BlockOperator) -> BlockOperator {
        zip_blocks(self, rhs, |a, b| a * b)
    }
}

impl Add for &BlockOperator {
    type Output = BlockOperator;
    fn add(self, rhs: &BlockOperator) -> BlockOperator {
        zip_blocks(self, rhs, |a, b| a + b)
    }
}

impl Sub for &BlockOperator {
    type Output = BlockOperator;
    fn sub(self, rhs: &BlockOperator) -> BlockOperator {
        zip_blocks(self, rhs, |a, b| a - b)
    }
}

/// A projection of `R`: every block is a projection.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockProjection {
    shape: AlgebraShape,
    blocks: Vec<Projection>,
}

impl BlockProjection {
    pub fn new(op: &BlockOperator, tol: f64) -> Result<Self> {
        let blocks = op
            .blocks
            .iter()
            .map(|b| Projection::new(b.clone(), tol))
            .collect::<Result<Vec<_>>>()?;
        Ok(BlockProjection { shape: op.shape, blocks })
    }

    pub fn from_blocks(shape: AlgebraShape, blocks: Vec<Projection>) -> Result<Self> {
        if blocks.len() != shape.m || blocks.iter().any(|b| b.dim() != shape.n) {
            return Err(Error::ShapeMismatch("projection blocks do not match shape".into()));
        }
        Ok(BlockProjection { shape, blocks })
    }

    pub fn from_fn(shape: AlgebraShape, mut f: impl FnMut(usize) -> Projection) -> Self {
        BlockProjection {
            shape,
            blocks: (0..shape.m).map(&mut f).collect(),
        }
    }

    pub fn zero(shape: AlgebraShape) -> Self {
        Self::from_fn(shape, |_| Projection::zero(shape.n))
    }

    pub fn identity(shape: AlgebraShape) -> Self {
        Self::from_fn(shape, |_| Projection::identity(shape.n))
    }

    /// `p` on block `k`, zero elsewhere.
    pub fn at_block(shape: AlgebraShape, k: usize, p: Projection) -> Self {
        Self::padded(shape, k, p, false)
    }

    /// `p` on block `k`, identity (if `pad_identity`) or zero on the other blocks.
    pub fn padded(shape: AlgebraShape, k: usize, p: Projection, pad_identity: bool) -> Self {
        let mut p = Some(p);
        Self::from_fn(shape, |j| {
            if j == k {
                p.take().expect("single block")
            } else if pad_identity {
                Projection::identity(shape.n)
            } else {
                Projection::zero(shape.n)
            }
        })
    }

    pub fn shape(&self) -> AlgebraShape {
        self.shape
    }

    pub fn block(&self, k: usize) -> &Projection {
        &self.blocks[k]
    }

    pub fn blocks(&self) -> &[Projection] {
        &self.blocks
    }

    pub fn to_operator(&self) -> BlockOperator {
        BlockOperator::from_fn(self.shape, |k| self.blocks[k].matrix().clone())
    }

    pub fn complement(&self) -> Self {
        Self::from_fn(self.shape, |k| self.blocks[k].complement())
    }

    pub fn restrict(&self, p: &CentralProjection) -> Self {
        Self::from_fn(self.shape, |k| {
            if p.contains(k) {
                self.blocks[k].clone()
            } else {
                Projection::zero(self.shape.n)
            }
        })
    }

    pub fn meet(&self, other: &BlockProjection, tol: &Tolerances) -> Result<Self> {
        ensure_shape(self.shape, other.shape)?;
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(p, q)| project_meet(p, q, tol))
            .collect::<Result<Vec<_>>>()?;
        Ok(BlockProjection { shape: self.shape, blocks })
    }

    pub fn join(&self, other: &BlockProjection, tol: &Tolerances) -> Result<Self> {
        ensure_shape(self.shape, other.shape)?;
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(p, q)| project_join(p, q, tol))
            .collect::<Result<Vec<_>>>()?;
        Ok(BlockProjection { shape: self.shape, blocks })
    }

    pub fn leq(&self, other: &BlockProjection, tol: &Tolerances) -> Result<bool> {
        ensure_shape(self.shape, other.shape)?;
        for (p, q) in self.blocks.iter().zip(&other.blocks) {
            if !project_leq(p, q, tol)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn ranks(&self, tol: &Tolerances) -> Vec<usize> {
        self.blocks.iter().map(|b| rank_of(b, tol)).collect()
    }

    pub fn is_zero(&self, tol: &Tolerances) -> bool {
        self.ranks(tol).iter().all(|&r| r == 0)
    }

    pub fn approx_eq(&self, other: &BlockProjection, tol: f64) -> bool {
        self.shape == other.shape && self.blocks.iter().zip(&other.blocks).all(|(a, b)| a.approx_eq(b, tol))
    }

    /// `TPT*` for a block unitary `T`.
    pub fn conjugate_by(&self, t: &BlockOperator) -> Self {
        Self::from_fn(self.shape, |k| {
            let tk = t.block(k);
            Projection::trusted(tk * self.blocks[k].matrix() * tk.adjoint())
        })
    }
}

/// A central projection, identified with the set of blocks on which it is `I`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CentralProjection {
    m: usize,
    mask: u64,
}

fn full_mask(m: usize) -> u64 {
    if m >= 64 {
        u64::MAX
    } else {
        (1u64 << m) - 1
    }
}

impl CentralProjection {
    pub fn from_mask(m: usize, mask: u64) -> Self {
        CentralProjection { m, mask: mask & full_mask(m) }
    }

    pub fn from_support(m: usize, support: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut mask = 0u64;
        for k in support {
            if k >= m {
                return Err(Error::BadBlockIndex { index: k, m });
            }
            mask |= 1 << k;
        }
        Ok(CentralProjection { m, mask })
    }

    pub fn empty(m: usize) -> Self {
        CentralProjection { m, mask: 0 }
    }

    pub fn full(m: usize) -> Self {
        CentralProjection { m, mask: full_mask(m) }
    }

    pub fn atom(m: usize, k: usize) -> Self {
        Self::from_mask(m, 1 << k)
    }

    pub fn blocks(&self) -> usize {
        self.m
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    pub fn contains(&self, k: usize) -> bool {
        k < self.m && self.mask & (1 << k) != 0
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.m).filter(|&k| self.contains(k)).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.mask == 0
    }

    pub fn complement(&self) -> Self {
        Self::from_mask(self.m, !self.mask)
    }

    pub fn intersect(&self, other: &Self) -> Self {
        Self::from_mask(self.m, self.mask & other.mask)
    }

    pub fn union(&self, other: &Self) -> Self {
        Self::from_mask(self.m, self.mask | other.mask)
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.mask & !other.mask == 0
    }

    pub fn to_projection(&self, n: usize) -> BlockProjection {
        let shape = AlgebraShape { m: self.m, n };
        BlockProjection::from_fn(shape, |k| {
            if self.contains(k) {
                Projection::identity(n)
            } else {
                Projection::zero(n)
            }
        })
    }
}

/// A unital von Neumann subalgebra of the center, given by a partition of
/// the blocks: its projections are the unions of cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CenterPartitionSubalgebra {
    m: usize,
    cells: Vec<u64>,
}

impl CenterPartitionSubalgebra {
    pub fn new(m: usize, cells: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = 0u64;
        let mut masks = Vec::with_capacity(cells.len());
        for cell in cells {
            if cell.is_empty() {
                return Err(Error::InvalidInput("empty partition cell".into()));
            }
            let mask = CentralProjection::from_support(m, cell)?.mask;
            if mask & seen != 0 {
                return Err(Error::InvalidInput("partition cells overlap".into()));
            }
            seen |= mask;
            masks.push(mask);
        }
        if seen != full_mask(m) {
            return Err(Error::InvalidInput("partition does not cover all blocks".into()));
        }
        masks.sort_by_key(|c| c.trailing_zeros());
        Ok(CenterPartitionSubalgebra { m, cells: masks })
    }

    /// The whole center.
    pub fn discrete(m: usize) -> Self {
        CenterPartitionSubalgebra {
            m,
            cells: (0..m).map(|k| 1u64 << k).collect(),
        }
    }

    /// `ℂ·I`.
    pub fn trivial(m: usize) -> Self {
        CenterPartitionSubalgebra {
            m,
            cells: vec![full_mask(m)],
        }
    }

    pub fn blocks(&self) -> usize {
        self.m
    }

    pub fn cells(&self) -> Vec<CentralProjection> {
        self.cells.iter().map(|&c| CentralProjection::from_mask(self.m, c)).collect()
    }

    pub fn cell_of(&self, k: usize) -> CentralProjection {
        let mask = self.cells.iter().copied().find(|c| c & (1 << k) != 0).unwrap_or(0);
        CentralProjection::from_mask(self.m, mask)
    }

    pub fn contains(&self, p: &CentralProjection) -> bool {
        self.cells.iter().all(|&c| c & p.mask == 0 || c & p.mask == c)
    }
}

/// An element of the `C`-module `Cⁿ`, stored as one vector per block.
#[derive(Debug, Clone, PartialEq)]
pub struct ModuleVector {
    shape: AlgebraShape,
    blocks: Vec<CVector>,
}

impl ModuleVector {
    pub fn new(shape: AlgebraShape, blocks: Vec<CVector>) -> Result<Self> {
        if blocks.len() != shape.m || blocks.iter().any(|b| b.len() != shape.n) {
            return Err(Error::ShapeMismatch("module vector does not match shape".into()));
        }
        Ok(ModuleVector { shape, blocks })
    }

    /// The same vector `v` in every block.
    pub fn constant(shape: AlgebraShape, v: &CVector) -> Result<Self> {
        Self::new(shape, vec![v.clone(); shape.m])
    }

    /// `e = (1, …, 1)/√n` in every block.
    pub fn uniform(shape: AlgebraShape) -> Self {
        let v = CVector::from_element(shape.n, ONE.unscale((shape.n as f64).sqrt()));
        ModuleVector {
            shape,
            blocks: vec![v; shape.m],
        }
    }

    /// The unit vector `e_j` in every block.
    pub fn unit(shape: AlgebraShape, j: usize) -> Self {
        ModuleVector {
            shape,
            blocks: vec![basis_vector(shape.n, j); shape.m],
        }
    }

    pub fn shape(&self) -> AlgebraShape {
        self.shape
    }

    pub fn block(&self, k: usize) -> &CVector {
        &self.blocks[k]
    }

    pub fn blocks(&self) -> &[CVector] {
        &self.blocks
    }

    /// Componentwise multiplication by a central element `u = (u_1, …, u_m)`.
    pub fn central_scale(&self, u: &[C64]) -> Self {
        ModuleVector {
            shape: self.shape,
            blocks: self.blocks.iter().zip(u).map(|(b, &z)| b * z).collect(),
        }
    }

    /// `(a|a)`, one real value per block.
    pub fn self_inner(&self) -> Vec<f64> {
        self.blocks.iter().map(|b| b.norm_squared()).collect()
    }

    fn check_subnormalized(&self, tol: f64) -> Result<()> {
        for (k, b) in self.blocks.iter().enumerate() {
            let norm = b.norm();
            if norm > tol && (norm - 1.0).abs() > tol {
                return Err(Error::NotSubnormalized { block: k, norm });
            }
        }
        Ok(())
    }
}

pub fn central_support(p: &BlockProjection, tol: &Tolerances) -> CentralProjection {
    let ranks = p.ranks(tol);
    CentralProjection::from_mask(
        p.shape.m,
        ranks.iter().enumerate().filter(|(_, &r)| r > 0).fold(0, |acc, (k, _)| acc | 1 << k),
    )
}

/// Smallest projection of the partition subalgebra `A` dominating `P`.
pub fn subalgebra_support(p: &BlockProjection, a: &CenterPartitionSubalgebra, tol: &Tolerances) -> Result<CentralProjection> {
    if a.m != p.shape.m {
        return Err(Error::ShapeMismatch("partition block count differs from algebra".into()));
    }
    let s = central_support(p, tol);
    let mask = a.cells.iter().filter(|&&c| c & s.mask != 0).fold(0, |acc, c| acc | c);
    Ok(CentralProjection::from_mask(a.m, mask))
}

/// Largest central projection below `Q`.
pub fn central_kernel(q: &BlockProjection, tol: &Tolerances) -> CentralProjection {
    let n = q.shape.n;
    let ranks = q.ranks(tol);
    CentralProjection::from_mask(
        q.shape.m,
        ranks.iter().enumerate().filter(|(_, &r)| r == n).fold(0, |acc, (k, _)| acc | 1 << k),
    )
}

/// The central projections `p_j = {k : rank P_k = j}`, `1 ≤ j ≤ n`.
pub fn rank_decomposition(p: &BlockProjection, tol: &Tolerances) -> Result<BTreeMap<usize, CentralProjection>> {
    let ranks = p.ranks(tol);
    if ranks.iter().all(|&r| r == 0) {
        return Err(Error::ZeroProjection);
    }
    let m = p.shape.m;
    Ok((1..=p.shape.n)
        .map(|j| {
            let mask = ranks.iter().enumerate().filter(|(_, &r)| r == j).fold(0, |acc, (k, _)| acc | 1 << k);
            (j, CentralProjection::from_mask(m, mask))
        })
        .collect())
}

pub fn is_projection_over_beta(p: &BlockProjection, beta: CenterAtom, tol: &Tolerances) -> bool {
    central_support(p, tol).contains(beta.0)
}

pub fn rank_over_beta(p: &BlockProjection, beta: CenterAtom, tol: &Tolerances) -> Result<usize> {
    if beta.0 >= p.shape.m {
        return Err(Error::BadBlockIndex { index: beta.0, m: p.shape.m });
    }
    match rank_of(&p.blocks[beta.0], tol) {
        0 => Err(Error::NotOverBeta(beta.0)),
        r => Ok(r),
    }
}

pub fn beta_equivalent(a: &BlockOperator, b: &BlockOperator, beta: CenterAtom, tol: &Tolerances) -> Result<bool> {
    ensure_shape(a.shape, b.shape)?;
    Ok(frobenius(&(a.block(beta.0) - b.block(beta.0))) <= tol.tol)
}

pub fn beta_class_leq(p: &BlockProjection, q: &BlockProjection, beta: CenterAtom, tol: &Tolerances) -> Result<bool> {
    ensure_shape(p.shape, q.shape)?;
    project_leq(p.block(beta.0), q.block(beta.0), tol)
}

/// A representative of `[P] ∧_β [Q] = [P ∧ Q]`.
pub fn beta_class_meet(p: &BlockProjection, q: &BlockProjection, _beta: CenterAtom, tol: &Tolerances) -> Result<BlockProjection> {
    p.meet(q, tol)
}

/// `inf{‖pA‖ : p ∈ β}`, attained at the indicator of the block.
pub fn beta_seminorm(a: &BlockOperator, beta: CenterAtom) -> f64 {
    operator_norm(a.block(beta.0))
}

/// The value at block `β` of a central element.
pub fn tau_beta(c: &BlockOperator, beta: CenterAtom, tol: &Tolerances) -> Result<C64> {
    let n = c.shape.n as f64;
    for b in &c.blocks {
        let scalar = b.trace() / n;
        let dev = frobenius(&(b - identity(c.shape.n) * scalar));
        if dev > tol.tol * frobenius(b).max(1.0) {
            return Err(Error::NotCentral);
        }
    }
    Ok(c.block(beta.0).trace() / n)
}

/// `E_a : b ↦ (b|a)a`, block `k` equal to `a⁽ᵏ⁾a⁽ᵏ⁾*`.
pub fn abelian_from_vector(a: &ModuleVector, tol: &Tolerances) -> Result<BlockProjection> {
    a.check_subnormalized(tol.tol)?;
    Ok(BlockProjection::from_fn(a.shape, |k| {
        Projection::trusted(matrix::outer(&a.blocks[k], &a.blocks[k]))
    }))
}

pub fn is_abelian_projection(p: &BlockProjection, tol: &Tolerances) -> bool {
    p.ranks(tol).iter().all(|&r| r <= 1)
}

/// A module vector `a` with `E_a = P` for an abelian `P`.
pub fn abelian_vector_of(p: &BlockProjection, tol: &Tolerances) -> Result<ModuleVector> {
    if !is_abelian_projection(p, tol) {
        return Err(Error::NotAbelian);
    }
    let blocks = p
        .blocks
        .iter()
        .map(|b| {
            let basis = b.range_basis(tol);
            if basis.ncols() == 0 {
                CVector::zeros(p.shape.n)
            } else {
                matrix::canonical_phase(&basis.column(0).into_owned())
            }
        })
        .collect();
    ModuleVector::new(p.shape, blocks)
}

/// Central unitary `u` with `a′ = u·a` whenever `E_a = E_{a′}`; `None` otherwise.
/// Blocks where both vectors vanish get phase 1.
pub fn abelian_equality_phase(a: &ModuleVector, a2: &ModuleVector, tol: &Tolerances) -> Result<Option<Vec<C64>>> {
    ensure_shape(a.shape, a2.shape)?;
    a.check_subnormalized(tol.tol)?;
    a2.check_subnormalized(tol.tol)?;
    let mut phases = Vec::with_capacity(a.shape.m);
    for (x, y) in a.blocks.iter().zip(&a2.blocks) {
        let (zx, zy) = (x.norm() <= tol.tol, y.norm() <= tol.tol);
        match (zx, zy) {
            (true, true) => phases.push(ONE),
            (false, false) => {
                // (a′|a) = Σ a′_j conj(a_j)
                let u = inner(x, y);
                if u.norm() < 1.0 - tol.tol {
                    return Ok(None);
                }
                phases.push(u / u.norm());
            }
            _ => return Ok(None),
        }
    }
    Ok(Some(phases))
}

/// `G = E + (I − s_C(E))F` with `F = E_{e₁}`: abelian with full central support.
pub fn extend_abelian_full_support(e: &BlockProjection, tol: &Tolerances) -> Result<BlockProjection> {
    if !is_abelian_projection(e, tol) {
        return Err(Error::NotAbelian);
    }
    let support = central_support(e, tol);
    let n = e.shape.n;
    Ok(BlockProjection::from_fn(e.shape, |k| {
        if support.contains(k) {
            e.blocks[k].clone()
        } else {
            Projection::trusted(matrix::outer(&basis_vector(n, 0), &basis_vector(n, 0)))
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::matrix::C64;

    fn t() -> Tolerances {
        Tolerances::default()
    }

    fn shape(m: usize, n: usize) -> AlgebraShape {
        AlgebraShape::new(m, n).unwrap()
    }

    fn rank_proj(n: usize, r: usize, seed: u64) -> Projection {
        rng::random_projection(n, r, seed).unwrap()
    }

    fn with_ranks(n: usize, ranks: &[usize], seed: u64) -> BlockProjection {
        let s = shape(ranks.len(), n);
        BlockProjection::from_fn(s, |k| rank_proj(n, ranks[k], seed + k as u64))
    }

    #[test]
    fn shape_validation() {
        assert!(AlgebraShape::new(0, 2).is_err());
        assert!(AlgebraShape::new(2, 0).is_err());
        assert!(AlgebraShape::new(65, 1).is_err());
    }

    #[test]
    fn central_support_cases() {
        let s = shape(2, 2);
        assert!(central_support(&BlockProjection::zero(s), &t()).is_empty());
        assert_eq!(central_support(&BlockProjection::identity(s), &t()), CentralProjection::full(2));
        let p = with_ranks(2, &[1, 0], 5);
        let supp = central_support(&p, &t());
        assert_eq!(supp.support(), vec![0]);
        // minimal among the four central projections dominating P
        for mask in 0..4u64 {
            let q = CentralProjection::from_mask(2, mask);
            let dominates = p.leq(&q.to_projection(2), &t()).unwrap();
            assert_eq!(dominates, supp.is_subset(&q), "mask {mask}");
        }
    }

    #[test]
    fn subalgebra_support_cases() {
        let p = with_ranks(2, &[0, 1, 0, 0], 1);
        let a = CenterPartitionSubalgebra::new(4, vec![vec![0, 1], vec![2, 3]]).unwrap();
        let s = subalgebra_support(&p, &a, &t()).unwrap();
        assert_eq!(s.support(), vec![0, 1]);
        // minimal by enumeration over the A-projections
        let dominating: Vec<_> = (0..16u64)
            .map(|mask| CentralProjection::from_mask(4, mask))
            .filter(|q| a.contains(q) && p.leq(&q.to_projection(2), &t()).unwrap())
            .collect();
        assert!(dominating.iter().all(|q| s.is_subset(q)));
        assert!(dominating.contains(&s));
        assert_eq!(
            subalgebra_support(&p, &CenterPartitionSubalgebra::trivial(4), &t()).unwrap(),
            CentralProjection::full(4)
        );
        assert_eq!(
            subalgebra_support(&p, &CenterPartitionSubalgebra::discrete(4), &t()).unwrap(),
            central_support(&p, &t())
        );
    }

    #[test]
    fn partition_validation() {
        assert!(CenterPartitionSubalgebra::new(3, vec![vec![0, 1], vec![1, 2]]).is_err());
        assert!(CenterPartitionSubalgebra::new(3, vec![vec![0, 1]]).is_err());
        assert!(CenterPartitionSubalgebra::new(3, vec![vec![0, 1], vec![]]).is_err());
    }

    #[test]
    fn central_kernel_cases() {
        let s = shape(2, 2);
        assert_eq!(central_kernel(&BlockProjection::identity(s), &t()), CentralProjection::full(2));
        assert!(central_kernel(&BlockProjection::zero(s), &t()).is_empty());
        let q = with_ranks(2, &[2, 1], 3);
        let c = central_kernel(&q, &t());
        assert_eq!(c.support(), vec![0]);
        assert_eq!(c, central_support(&q.complement(), &t()).complement());
    }

    #[test]
    fn rank_decomposition_cases() {
        let s = shape(3, 3);
        let d = rank_decomposition(&BlockProjection::identity(s), &t()).unwrap();
        assert_eq!(d[&3], CentralProjection::full(3));
        assert!(d[&1].is_empty() && d[&2].is_empty());
        let p = with_ranks(3, &[2, 1, 2], 11);
        let d = rank_decomposition(&p, &t()).unwrap();
        assert_eq!(d[&1].support(), vec![1]);
        assert_eq!(d[&2].support(), vec![0, 2]);
        assert!(d[&3].is_empty());
        assert_eq!(rank_decomposition(&BlockProjection::zero(s), &t()), Err(Error::ZeroProjection));
    }

    #[test]
    fn rank_over_beta_cases() {
        let s = shape(2, 3);
        assert_eq!(rank_over_beta(&BlockProjection::identity(s), CenterAtom(1), &t()).unwrap(), 3);
        let e = abelian_from_vector(&ModuleVector::uniform(s), &t()).unwrap();
        assert_eq!(rank_over_beta(&e, CenterAtom(0), &t()).unwrap(), 1);
        let p = with_ranks(3, &[2, 0], 4);
        assert_eq!(rank_over_beta(&p.complement(), CenterAtom(0), &t()).unwrap(), 1);
        assert_eq!(rank_over_beta(&p, CenterAtom(1), &t()), Err(Error::NotOverBeta(1)));
    }

    #[test]
    fn projection_over_beta_cases() {
        let s = shape(2, 2);
        assert!(is_projection_over_beta(&BlockProjection::identity(s), CenterAtom(0), &t()));
        assert!(!is_projection_over_beta(&BlockProjection::zero(s), CenterAtom(1), &t()));
        let p = with_ranks(2, &[0, 1], 8);
        assert!(!is_projection_over_beta(&p, CenterAtom(0), &t()));
    }

    #[test]
    fn beta_equivalence_cases() {
        let s = shape(3, 2);
        let mut r = rng::SeedStream::new(1).rng();
        let a = BlockOperator::from_fn(s, |_| rng::gaussian_matrix(2, 2, &mut r));
        assert!(beta_equivalent(&a, &a, CenterAtom(1), &t()).unwrap());
        let b = a.clone().with_block(2, rng::gaussian_matrix(2, 2, &mut r)).unwrap();
        assert!(beta_equivalent(&a, &b, CenterAtom(0), &t()).unwrap());
        assert!(!beta_equivalent(&a, &b, CenterAtom(2), &t()).unwrap());
        let other = BlockOperator::zero(shape(2, 2));
        assert!(matches!(beta_equivalent(&a, &other, CenterAtom(0), &t()), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn beta_class_order_and_meet() {
        let s = shape(2, 3);
        let p = with_ranks(3, &[2, 1], 21);
        let beta = CenterAtom(0);
        assert!(beta_class_leq(&BlockProjection::zero(s), &p, beta, &t()).unwrap());
        let m = beta_class_meet(&p, &p, beta, &t()).unwrap();
        assert!(beta_equivalent(&m.to_operator(), &p.to_operator(), beta, &Tolerances::default().with_tol(1e-8)).unwrap());
        // equal rank + [P] ≤ [Q] forces [P] = [Q]
        let q = p.restrict(&CentralProjection::atom(2, 0));
        assert!(beta_class_leq(&q, &p, beta, &t()).unwrap());
        assert_eq!(rank_over_beta(&q, beta, &t()).unwrap(), rank_over_beta(&p, beta, &t()).unwrap());
        assert!(beta_equivalent(&q.to_operator(), &p.to_operator(), beta, &t()).unwrap());
    }

    #[test]
    fn seminorm_and_character() {
        let s = shape(3, 2);
        let beta = CenterAtom(1);
        assert_eq!(beta_seminorm(&BlockOperator::zero(s), beta), 0.0);
        let vals = [C64::new(1.0, 2.0), C64::new(-3.0, 4.0), C64::new(0.5, 0.0)];
        let a = BlockOperator::central(s, &vals).unwrap();
        let tau = tau_beta(&a, beta, &t()).unwrap();
        assert!((tau - vals[1]).norm() < 1e-12);
        assert!((beta_seminorm(&a, beta) - 5.0).abs() < 1e-12);
        assert_eq!(tau_beta(&BlockOperator::identity(s), beta, &t()).unwrap(), ONE);
        let p = CentralProjection::from_support(3, [1]).unwrap().to_projection(2).to_operator();
        assert_eq!(tau_beta(&p, CenterAtom(0), &t()).unwrap(), C64::new(0.0, 0.0));
        assert_eq!(tau_beta(&p, beta, &t()).unwrap(), ONE);
        let mut r = rng::SeedStream::new(2).rng();
        let x = BlockOperator::from_fn(s, |_| rng::gaussian_matrix(2, 2, &mut r));
        assert_eq!(tau_beta(&x, beta, &t()), Err(Error::NotCentral));
    }

    #[test]
    fn e_vector_projection() {
        let s = shape(2, 3);
        let e = abelian_from_vector(&ModuleVector::uniform(s), &t()).unwrap();
        assert_eq!(central_support(&e, &t()), CentralProjection::full(2));
        assert!(is_abelian_projection(&e, &t()));
        for b in e.blocks() {
            assert!(frobenius(&(b.matrix() * b.matrix() - b.matrix())) < 1e-12);
        }
        let mut blocks = ModuleVector::uniform(s).blocks().to_vec();
        blocks[1] = CVector::zeros(3);
        let a = ModuleVector::new(s, blocks).unwrap();
        let ea = abelian_from_vector(&a, &t()).unwrap();
        assert!(ea.block(1).is_zero(0.0));
        let bad = ModuleVector::constant(s, &CVector::from_element(3, C64::new(0.5, 0.0))).unwrap();
        assert!(matches!(abelian_from_vector(&bad, &t()), Err(Error::NotSubnormalized { .. })));
    }

    #[test]
    fn abelian_detection_and_recovery() {
        let s = shape(2, 3);
        assert!(!is_abelian_projection(&BlockProjection::identity(s), &t()));
        let p = with_ranks(3, &[1, 1], 33);
        assert!(is_abelian_projection(&p, &t()));
        let a = abelian_vector_of(&p, &t()).unwrap();
        assert!(abelian_from_vector(&a, &t()).unwrap().approx_eq(&p, 1e-10));
    }

    #[test]
    fn equality_phase_cases() {
        let s = shape(2, 2);
        let e = ModuleVector::uniform(s);
        assert_eq!(abelian_equality_phase(&e, &e, &t()).unwrap(), Some(vec![ONE, ONE]));
        let i = C64::new(0.0, 1.0);
        let rotated = e.central_scale(&[i, ONE]);
        let u = abelian_equality_phase(&e, &rotated, &t()).unwrap().unwrap();
        assert!((u[0] - i).norm() < 1e-12 && (u[1] - ONE).norm() < 1e-12);
        assert_eq!(abelian_equality_phase(&e, &ModuleVector::unit(s, 0), &t()).unwrap(), None);
    }

    #[test]
    fn full_support_extension() {
        let s = shape(3, 2);
        let full = abelian_from_vector(&ModuleVector::uniform(s), &t()).unwrap();
        assert!(extend_abelian_full_support(&full, &t()).unwrap().approx_eq(&full, 0.0));
        let g = extend_abelian_full_support(&BlockProjection::zero(s), &t()).unwrap();
        let e1 = abelian_from_vector(&ModuleVector::unit(s, 0), &t()).unwrap();
        assert!(g.approx_eq(&e1, 0.0));
        let mixed = with_ranks(2, &[1, 0, 1], 5);
        let g = extend_abelian_full_support(&mixed, &t()).unwrap();
        assert!(is_abelian_projection(&g, &t()));
        assert_eq!(central_support(&g, &t()), CentralProjection::full(3));
        assert!(g.block(0).approx_eq(mixed.block(0), 0.0));
        assert_eq!(
            extend_abelian_full_support(&BlockProjection::identity(s), &t()),
            Err(Error::NotAbelian)
        );
    }
}

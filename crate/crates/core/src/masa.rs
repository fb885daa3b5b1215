//! Maximal abelian subalgebras given by eigenbases, traces of quasipoints on them,
//! and explicit witnesses against the prime property.

use rand::Rng;

use crate::algebra::{
    abelian_equality_phase, abelian_from_vector, ensure_shape, AlgebraShape, BlockOperator, BlockProjection,
    CenterPartitionSubalgebra, ModuleVector,
};
use crate::error::{Error, Result};
use crate::matrix::{basis_vector, complete_basis, identity, inner, outer, CMatrix, CVector, Projection, Tolerances};
use crate::rng::{unit_vector, SeedStream};
use crate::spectrum::{qp_contains, Quasipoint};

/// The algebra `{⊕ U_k D_k U_k* : D_k diagonal}` for unitaries `U_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Masa {
    shape: AlgebraShape,
    bases: Vec<CMatrix>,
}

impl Masa {
    pub fn new(shape: AlgebraShape, bases: Vec<CMatrix>, tol: &Tolerances) -> Result<Self> {
        let op = BlockOperator::new(shape, bases)?;
        if !op.is_unitary(tol.tol.max(1e-12) * 10.0) {
            return Err(Error::NotUnitary);
        }
        Ok(Masa {
            shape,
            bases: op.blocks().to_vec(),
        })
    }

    /// Diagonal matrices in the standard basis.
    pub fn standard(shape: AlgebraShape) -> Self {
        Masa {
            shape,
            bases: vec![identity(shape.n); shape.m],
        }
    }

    pub fn shape(&self) -> AlgebraShape {
        self.shape
    }

    pub fn bases(&self) -> &[CMatrix] {
        &self.bases
    }

    pub fn column(&self, k: usize, j: usize) -> CVector {
        self.bases[k].column(j).into_owned()
    }

    /// Minimal projection of `M`: column `j` of block `k`, zero elsewhere.
    pub fn column_projection(&self, k: usize, j: usize) -> BlockProjection {
        let c = self.column(k, j);
        BlockProjection::at_block(self.shape, k, Projection::onto_columns(&CMatrix::from_columns(&[c])))
    }

    /// `T M T*`.
    pub fn conjugate_by(&self, t: &BlockOperator) -> Result<Self> {
        ensure_shape(self.shape, t.shape())?;
        Ok(Masa {
            shape: self.shape,
            bases: self.bases.iter().zip(t.blocks()).map(|(u, tk)| tk * u).collect(),
        })
    }
}

/// A quasipoint of `M`: the principal filter at column `column` of block `block`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MasaQuasipoint {
    pub shape: AlgebraShape,
    pub block: usize,
    pub column: usize,
}

/// A projection `D` of `M` with neither `D` nor `I − D` in `𝔅`.
#[derive(Debug, Clone)]
pub struct TraceFailure {
    pub column: usize,
    pub projection: BlockProjection,
    pub projection_in: bool,
    pub complement_in: bool,
}

#[derive(Debug, Clone)]
pub enum TraceOutcome {
    Quasipoint(MasaQuasipoint),
    Failure(TraceFailure),
}

impl TraceOutcome {
    pub fn is_quasipoint(&self) -> bool {
        matches!(self, TraceOutcome::Quasipoint(_))
    }
}

/// `𝔅 ∩ M`: a quasipoint of `M` exactly when the ray of `𝔅` is a basis column.
pub fn masa_trace(q: &Quasipoint, m: &Masa, tol: &Tolerances) -> Result<TraceOutcome> {
    ensure_shape(q.shape(), m.shape)?;
    let i = q.block();
    let overlaps: Vec<f64> = (0..m.shape.n).map(|j| inner(&m.column(i, j), q.ray()).norm()).collect();
    let (best, &overlap) = overlaps
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
        .expect("n ≥ 1");
    if overlap >= 1.0 - tol.tol {
        return Ok(TraceOutcome::Quasipoint(MasaQuasipoint {
            shape: m.shape,
            block: i,
            column: best,
        }));
    }
    let d = m.column_projection(i, best);
    let projection_in = qp_contains(q, &d, tol)?;
    let complement_in = qp_contains(q, &d.complement(), tol)?;
    Ok(TraceOutcome::Failure(TraceFailure {
        column: best,
        projection: d,
        projection_in,
        complement_in,
    }))
}

/// A MASA on which the trace of `𝔅` is a quasipoint: `v` completed to a basis at block `i`.
pub fn admissible_masa_for(q: &Quasipoint) -> Masa {
    let s = q.shape();
    let completed = complete_basis(q.ray()).expect("quasipoint rays are unit vectors");
    Masa {
        shape: s,
        bases: (0..s.m).map(|k| if k == q.block() { completed.clone() } else { identity(s.n) }).collect(),
    }
}

/// `Q(R)_M`: the `m·n` quasipoints whose rays are basis columns of `M`.
pub fn admissible_set_descriptor(m: &Masa) -> Vec<Quasipoint> {
    let s = m.shape;
    (0..s.m)
        .flat_map(|k| (0..s.n).map(move |j| (k, j)))
        .map(|(k, j)| Quasipoint::new(s, k, &m.column(k, j)).expect("basis columns are unit vectors"))
        .collect()
}

/// Projections whose join lies in `𝔅` while none of them does, with the membership checks.
#[derive(Debug, Clone)]
pub struct PrimenessWitness {
    pub quasipoint: Quasipoint,
    pub projections: Vec<BlockProjection>,
    pub join: BlockProjection,
    pub join_in: bool,
    pub members_in: Vec<bool>,
}

impl PrimenessWitness {
    pub fn verified(&self) -> bool {
        self.join_in && self.members_in.iter().all(|x| !x)
    }

    /// Recomputes the join and every membership from the stored projections.
    pub fn recheck(&self, tol: &Tolerances) -> Result<bool> {
        let mut join = BlockProjection::zero(self.quasipoint.shape());
        for p in &self.projections {
            join = join.join(p, tol)?;
        }
        let mut ok = qp_contains(&self.quasipoint, &join, tol)?;
        for p in &self.projections {
            ok &= !qp_contains(&self.quasipoint, p, tol)?;
        }
        Ok(ok)
    }
}

/// For `n ≥ 2`, `P₁ = ww*` at block `i` with `w = (v + u)/√2`, and `P₂ = I − P₁`;
/// `None` for `n = 1`, where the prime property holds.
pub fn join_prime_violation(q: &Quasipoint, tol: &Tolerances) -> Result<Option<PrimenessWitness>> {
    let s = q.shape();
    if s.n < 2 {
        return Ok(None);
    }
    let v = q.ray();
    let u = (0..s.n)
        .map(|j| {
            let e = basis_vector(s.n, j);
            &e - v * inner(v, &e)
        })
        .find(|x| x.norm() > 1e-6)
        .expect("n ≥ 2 leaves room orthogonal to v");
    let u = u.unscale(u.norm());
    let w = (v + &u).unscale(2f64.sqrt());
    let p1 = BlockProjection::at_block(s, q.block(), Projection::onto_ray(&w)?);
    let p2 = p1.complement();
    let join = p1.join(&p2, tol)?;
    let join_in = qp_contains(q, &join, tol)?;
    let members_in = vec![qp_contains(q, &p1, tol)?, qp_contains(q, &p2, tol)?];
    Ok(Some(PrimenessWitness {
        quasipoint: q.clone(),
        projections: vec![p1, p2],
        join,
        join_in,
        members_in,
    }))
}

/// Witness at a quasipoint drawn from `seed`; requires `n ≥ 2`.
pub fn random_witness(shape: AlgebraShape, seed: u64, tol: &Tolerances) -> Result<PrimenessWitness> {
    if shape.n < 2 {
        return Err(Error::RequiresNGe2);
    }
    let mut rng = SeedStream::new(seed).split("witness").rng();
    let block = rng.random_range(0..shape.m);
    let q = Quasipoint::new(shape, block, &unit_vector(shape.n, &mut rng))?;
    join_prime_violation(&q, tol)?.ok_or(Error::RequiresNGe2)
}

/// Certification at one atom for the quasipoint generated by `e = (1, …, 1)/√n`.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomCertificate {
    pub block: usize,
    pub sum_is_identity: bool,
    pub join_in: bool,
    pub members_in: Vec<bool>,
    pub phase_recovered: Vec<bool>,
}

impl AtomCertificate {
    pub fn certified(&self) -> bool {
        self.sum_is_identity
            && self.join_in
            && self.members_in.iter().all(|x| !x)
            && self.phase_recovered.iter().all(|x| !x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EVectorReport {
    pub shape: AlgebraShape,
    pub atoms: Vec<AtomCertificate>,
}

impl EVectorReport {
    pub fn certified(&self) -> bool {
        self.atoms.iter().all(AtomCertificate::certified)
    }
}

/// With `E_k = e_k e_k*` in every block: `Σ E_k = I ∈ 𝔅`, yet no `E_k ∈ 𝔅`
/// and no central phase carries `e` to any `e_k`.
pub fn e_vector_experiment(shape: AlgebraShape, tol: &Tolerances) -> Result<EVectorReport> {
    if shape.n < 2 {
        return Err(Error::RequiresNGe2);
    }
    let e = ModuleVector::uniform(shape);
    let units: Vec<ModuleVector> = (0..shape.n).map(|k| ModuleVector::unit(shape, k)).collect();
    let projections = units
        .iter()
        .map(|a| abelian_from_vector(a, tol))
        .collect::<Result<Vec<_>>>()?;
    let sum = projections
        .iter()
        .fold(BlockOperator::zero(shape), |acc, p| &acc + &p.to_operator());
    let sum_is_identity = sum.approx_eq(&BlockOperator::identity(shape), tol.tol);
    let mut join = BlockProjection::zero(shape);
    for p in &projections {
        join = join.join(p, tol)?;
    }
    let phase_recovered = units
        .iter()
        .map(|a| abelian_equality_phase(&e, a, tol).map(|p| p.is_some()))
        .collect::<Result<Vec<_>>>()?;
    let mut atoms = Vec::with_capacity(shape.m);
    for i in 0..shape.m {
        let q = Quasipoint::new(shape, i, e.block(i))?;
        atoms.push(AtomCertificate {
            block: i,
            sum_is_identity,
            join_in: qp_contains(&q, &join, tol)?,
            members_in: projections
                .iter()
                .map(|p| qp_contains(&q, p, tol))
                .collect::<Result<Vec<_>>>()?,
            phase_recovered: phase_recovered.clone(),
        });
    }
    Ok(EVectorReport { shape, atoms })
}

/// Subalgebras that [`center_detector`] can classify.
#[derive(Debug, Clone)]
pub enum Subalgebra {
    Masa(Masa),
    Partition(CenterPartitionSubalgebra),
}

impl Subalgebra {
    /// Minimal projections of the subalgebra.
    fn atoms(&self, shape: AlgebraShape) -> Vec<BlockProjection> {
        match self {
            Subalgebra::Masa(m) => (0..shape.m)
                .flat_map(|k| (0..shape.n).map(move |j| m.column_projection(k, j)))
                .collect(),
            Subalgebra::Partition(p) => p.cells().iter().map(|c| c.to_projection(shape.n)).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CenterVerdict {
    pub central: bool,
    pub samples_checked: usize,
    /// A quasipoint whose trace is not a quasipoint of the subalgebra.
    pub failing: Option<Quasipoint>,
}

/// Classifies a subalgebra as central when every sampled trace is a quasipoint of it,
/// i.e. contains one of its minimal projections.
pub fn center_detector(
    sub: &Subalgebra,
    shape: AlgebraShape,
    samples: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<CenterVerdict> {
    match sub {
        Subalgebra::Masa(m) => ensure_shape(shape, m.shape)?,
        Subalgebra::Partition(p) if p.blocks() != shape.m => {
            return Err(Error::ShapeMismatch(format!("partition has {} blocks, shape has {}", p.blocks(), shape.m)))
        }
        Subalgebra::Partition(_) => {}
    }
    let atoms = sub.atoms(shape);
    let mut candidates = Vec::with_capacity(samples + 1);
    if let (Subalgebra::Masa(m), true) = (sub, shape.n >= 2) {
        let mixed = (m.column(0, 0) + m.column(0, 1)).unscale(2f64.sqrt());
        candidates.push(Quasipoint::new(shape, 0, &mixed)?);
    }
    let mut rng = SeedStream::new(seed).split("center-detector").rng();
    for s in 0..samples {
        candidates.push(Quasipoint::new(shape, s % shape.m, &unit_vector(shape.n, &mut rng))?);
    }
    for (checked, q) in candidates.iter().enumerate() {
        let mut hit = false;
        for a in &atoms {
            if qp_contains(q, a, tol)? {
                hit = true;
                break;
            }
        }
        if !hit {
            return Ok(CenterVerdict {
                central: false,
                samples_checked: checked + 1,
                failing: Some(q.clone()),
            });
        }
    }
    Ok(CenterVerdict {
        central: true,
        samples_checked: candidates.len(),
        failing: None,
    })
}

/// The two-element prime test: `P ∈ 𝔅` or `I − P ∈ 𝔅`.
pub fn two_element_property(q: &Quasipoint, p: &BlockProjection, tol: &Tolerances) -> Result<bool> {
    Ok(qp_contains(q, p, tol)? || qp_contains(q, &p.complement(), tol)?)
}

/// The block projection `vv*` at block `k` for a unit vector `v`.
pub fn ray_projection(shape: AlgebraShape, k: usize, v: &CVector) -> BlockProjection {
    BlockProjection::at_block(shape, k, Projection::trusted(outer(v, v)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{projection, unitary};
    use crate::spectrum::unitary_action;

    fn t() -> Tolerances {
        Tolerances::default()
    }

    fn shape(m: usize, n: usize) -> AlgebraShape {
        AlgebraShape::new(m, n).unwrap()
    }

    #[test]
    fn trace_on_standard_masa() {
        let s = shape(1, 2);
        let m = Masa::standard(s);
        let q = Quasipoint::new(s, 0, &basis_vector(2, 1)).unwrap();
        assert!(matches!(masa_trace(&q, &m, &t()).unwrap(), TraceOutcome::Quasipoint(MasaQuasipoint { column: 1, .. })));
        let w = (basis_vector(2, 0) + basis_vector(2, 1)).unscale(2f64.sqrt());
        let q = Quasipoint::new(s, 0, &w).unwrap();
        match masa_trace(&q, &m, &t()).unwrap() {
            TraceOutcome::Failure(f) => {
                assert_eq!(f.column, 0);
                assert!(!f.projection_in && !f.complement_in);
            }
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn abelian_shape_always_traces() {
        let s = shape(4, 1);
        for k in 0..4 {
            let q = Quasipoint::new(s, k, &basis_vector(1, 0)).unwrap();
            assert!(masa_trace(&q, &Masa::standard(s), &t()).unwrap().is_quasipoint());
        }
    }

    #[test]
    fn admissible_masa_and_conjugation() {
        let mut rng = SeedStream::new(4).rng();
        let s = shape(2, 3);
        for _ in 0..20 {
            let q = Quasipoint::new(s, 1, &unit_vector(3, &mut rng)).unwrap();
            let m = admissible_masa_for(&q);
            assert!(Masa::new(s, m.bases().to_vec(), &t()).is_ok());
            assert!(masa_trace(&q, &m, &t()).unwrap().is_quasipoint());
            let u = BlockOperator::from_fn(s, |_| unitary(3, &mut rng));
            let moved = unitary_action(&u, &q, &t()).unwrap();
            assert!(masa_trace(&moved, &m.conjugate_by(&u).unwrap(), &t()).unwrap().is_quasipoint());
            assert!(masa_trace(&moved, &admissible_masa_for(&moved), &t()).unwrap().is_quasipoint());
        }
    }

    #[test]
    fn admissible_set_has_mn_points() {
        let s = shape(3, 2);
        let m = Masa::standard(s);
        let pts = admissible_set_descriptor(&m);
        assert_eq!(pts.len(), 6);
        assert!(pts.iter().all(|q| masa_trace(q, &m, &t()).unwrap().is_quasipoint()));
    }

    #[test]
    fn witness_for_first_basis_vector() {
        let s = shape(1, 2);
        let q = Quasipoint::new(s, 0, &basis_vector(2, 0)).unwrap();
        let w = join_prime_violation(&q, &t()).unwrap().unwrap();
        assert!(w.verified());
        assert!(w.recheck(&t()).unwrap());
        let expected = (basis_vector(2, 0) + basis_vector(2, 1)).unscale(2f64.sqrt());
        assert!(w.projections[0].block(0).approx_eq(&Projection::onto_ray(&expected).unwrap(), 1e-12));
        let abelian = Quasipoint::new(shape(3, 1), 2, &basis_vector(1, 0)).unwrap();
        assert!(join_prime_violation(&abelian, &t()).unwrap().is_none());
    }

    #[test]
    fn random_witnesses_verify() {
        let mut rng = SeedStream::new(5).rng();
        for n in 2..=4 {
            let s = shape(2, n);
            for k in 0..10 {
                let q = Quasipoint::new(s, k % 2, &unit_vector(n, &mut rng)).unwrap();
                let w = join_prime_violation(&q, &t()).unwrap().unwrap();
                assert!(w.verified() && w.recheck(&t()).unwrap());
                assert!(!two_element_property(&q, &w.projections[0], &t()).unwrap());
            }
        }
    }

    #[test]
    fn abelian_shape_is_prime() {
        let mut rng = SeedStream::new(6).rng();
        let s = shape(3, 1);
        for k in 0..30 {
            let q = Quasipoint::new(s, k % 3, &basis_vector(1, 0)).unwrap();
            let p = BlockProjection::from_fn(s, |_| projection(1, usize::from(rand::Rng::random::<bool>(&mut rng)), &mut rng).unwrap());
            assert!(two_element_property(&q, &p, &t()).unwrap());
        }
    }

    #[test]
    fn e_vector_certificates() {
        assert!(e_vector_experiment(shape(1, 2), &t()).unwrap().certified());
        let r = e_vector_experiment(shape(2, 3), &t()).unwrap();
        assert_eq!(r.atoms.len(), 2);
        assert!(r.certified());
        assert_eq!(e_vector_experiment(shape(2, 1), &t()), Err(Error::RequiresNGe2));
    }

    #[test]
    fn detector_separates() {
        let s = shape(4, 2);
        let part = CenterPartitionSubalgebra::new(4, vec![vec![0, 2], vec![1], vec![3]]).unwrap();
        assert!(center_detector(&Subalgebra::Partition(part), s, 30, 1, &t()).unwrap().central);
        let v = center_detector(&Subalgebra::Masa(Masa::standard(s)), s, 30, 1, &t()).unwrap();
        assert!(!v.central && v.failing.is_some());
        let s1 = shape(3, 1);
        assert!(center_detector(&Subalgebra::Masa(Masa::standard(s1)), s1, 30, 1, &t()).unwrap().central);
    }
}

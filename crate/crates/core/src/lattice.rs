//! Explicit finite lattices and a brute-force oracle for their Stone spectra.

use std::fmt;

use crate::algebra::{BlockProjection, CentralProjection, AlgebraShape};
use crate::error::{Error, Result};
use crate::matrix::Tolerances;

/// Default cap on lattice size for maximal dual ideal enumeration.
pub const DEFAULT_ENUMERATION_CAP: usize = 256;
/// Cap on the closure of commuting generators.
pub const CLOSURE_CAP: usize = 4096;
/// Above this size, filters are enumerated from antichain seeds instead of raw subsets.
const RAW_SUBSET_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteLattice {
    labels: Vec<String>,
    leq: Vec<Vec<bool>>,
    meet: Vec<Vec<usize>>,
    join: Vec<Vec<usize>>,
    bottom: usize,
    top: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagnosticKind {
    NotReflexive,
    NotAntisymmetric,
    NotTransitive,
    BadMeet,
    BadJoin,
    BadBounds,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub detail: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.kind, self.detail)
    }
}

fn square(size: usize, rows: &[Vec<bool>]) -> bool {
    rows.len() == size && rows.iter().all(|r| r.len() == size)
}

impl FiniteLattice {
    /// Builds a lattice from its order relation, deriving meet and join tables.
    pub fn from_order(labels: Vec<String>, leq: Vec<Vec<bool>>) -> Result<Self> {
        let size = labels.len();
        if size == 0 {
            return Err(Error::InvalidLattice("lattice has no elements".into()));
        }
        if !square(size, &leq) {
            return Err(Error::InvalidLattice("order table is not square".into()));
        }
        let order_only = FiniteLattice {
            labels,
            leq,
            meet: Vec::new(),
            join: Vec::new(),
            bottom: 0,
            top: 0,
        };
        if let Some(d) = order_only.order_diagnostics().into_iter().next() {
            return Err(Error::InvalidLattice(d.to_string()));
        }
        let FiniteLattice { labels, leq, .. } = order_only;
        let bound = |a: usize, b: usize, lower: bool| -> Option<usize> {
            let rel = |x: usize, y: usize| if lower { leq[x][y] } else { leq[y][x] };
            let candidates: Vec<usize> = (0..size).filter(|&c| rel(c, a) && rel(c, b)).collect();
            candidates
                .iter()
                .copied()
                .find(|&c| candidates.iter().all(|&d| rel(d, c)))
        };
        let mut meet = vec![vec![0; size]; size];
        let mut join = vec![vec![0; size]; size];
        for a in 0..size {
            for b in 0..size {
                meet[a][b] = bound(a, b, true).ok_or_else(|| {
                    Error::InvalidLattice(format!("no greatest lower bound for {} and {}", labels[a], labels[b]))
                })?;
                join[a][b] = bound(a, b, false).ok_or_else(|| {
                    Error::InvalidLattice(format!("no least upper bound for {} and {}", labels[a], labels[b]))
                })?;
            }
        }
        let bottom = (0..size).find(|&x| (0..size).all(|y| leq[x][y])).expect("finite lattice has a bottom");
        let top = (0..size).find(|&x| (0..size).all(|y| leq[y][x])).expect("finite lattice has a top");
        Ok(FiniteLattice {
            labels,
            leq,
            meet,
            join,
            bottom,
            top,
        })
    }

    /// Assembles a lattice from explicit tables without checking them; see [`validate_lattice`].
    pub fn from_tables(
        labels: Vec<String>,
        leq: Vec<Vec<bool>>,
        meet: Vec<Vec<usize>>,
        join: Vec<Vec<usize>>,
        bottom: usize,
        top: usize,
    ) -> Result<Self> {
        let size = labels.len();
        let idx_ok = |t: &Vec<Vec<usize>>| t.len() == size && t.iter().all(|r| r.len() == size && r.iter().all(|&x| x < size));
        if size == 0 || !square(size, &leq) || !idx_ok(&meet) || !idx_ok(&join) || bottom >= size || top >= size {
            return Err(Error::InvalidLattice("table dimensions do not match element count".into()));
        }
        Ok(FiniteLattice {
            labels,
            leq,
            meet,
            join,
            bottom,
            top,
        })
    }

    /// The Boolean lattice `2^k` of subsets of `{0, …, k−1}`; element `s` is the bitmask `s`.
    pub fn boolean(k: usize) -> Self {
        let size = 1usize << k;
        let labels = (0..size).map(|s| format!("{s:0width$b}", width = k.max(1))).collect();
        let leq = (0..size).map(|a| (0..size).map(|b| a & !b == 0).collect()).collect();
        Self::from_order(labels, leq).expect("Boolean lattice")
    }

    /// A chain with `len` elements `0 < 1 < ⋯ < len−1`.
    pub fn chain(len: usize) -> Self {
        let labels = (0..len).map(|i| i.to_string()).collect();
        let leq = (0..len).map(|a| (0..len).map(|b| a <= b).collect()).collect();
        Self::from_order(labels, leq).expect("chain")
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn leq(&self, a: usize, b: usize) -> bool {
        self.leq[a][b]
    }

    pub fn order(&self) -> &[Vec<bool>] {
        &self.leq
    }

    pub fn meet(&self, a: usize, b: usize) -> usize {
        self.meet[a][b]
    }

    pub fn join(&self, a: usize, b: usize) -> usize {
        self.join[a][b]
    }

    pub fn meet_table(&self) -> &[Vec<usize>] {
        &self.meet
    }

    pub fn join_table(&self) -> &[Vec<usize>] {
        &self.join
    }

    pub fn bottom(&self) -> usize {
        self.bottom
    }

    pub fn top(&self) -> usize {
        self.top
    }

    /// Replaces one meet table entry (both orders). Used to exercise validation.
    pub fn with_meet_entry(mut self, a: usize, b: usize, value: usize) -> Self {
        self.meet[a][b] = value;
        self.meet[b][a] = value;
        self
    }

    /// Elements covering the bottom.
    pub fn atoms(&self) -> Vec<usize> {
        let size = self.len();
        (0..size)
            .filter(|&a| a != self.bottom)
            .filter(|&a| (0..size).all(|c| c == self.bottom || c == a || !self.leq[c][a]))
            .collect()
    }

    fn order_diagnostics(&self) -> Vec<Diagnostic> {
        let size = self.len();
        let mut out = Vec::new();
        for a in 0..size {
            if !self.leq[a][a] {
                out.push(Diagnostic {
                    kind: DiagnosticKind::NotReflexive,
                    detail: format!("{} ≰ {}", self.labels[a], self.labels[a]),
                });
            }
            for b in 0..size {
                if a != b && self.leq[a][b] && self.leq[b][a] {
                    out.push(Diagnostic {
                        kind: DiagnosticKind::NotAntisymmetric,
                        detail: format!("{} and {}", self.labels[a], self.labels[b]),
                    });
                }
                for c in 0..size {
                    if self.leq[a][b] && self.leq[b][c] && !self.leq[a][c] {
                        out.push(Diagnostic {
                            kind: DiagnosticKind::NotTransitive,
                            detail: format!("{} ≤ {} ≤ {}", self.labels[a], self.labels[b], self.labels[c]),
                        });
                    }
                }
            }
        }
        out
    }
}

/// Checks order axioms, meet/join tables against the order, and the bounds.
pub fn validate_lattice(l: &FiniteLattice) -> Vec<Diagnostic> {
    let mut out = l.order_diagnostics();
    let size = l.len();
    for a in 0..size {
        for b in 0..size {
            let m = l.meet[a][b];
            let glb = l.leq[m][a] && l.leq[m][b] && (0..size).all(|c| !(l.leq[c][a] && l.leq[c][b]) || l.leq[c][m]);
            if !glb {
                out.push(Diagnostic {
                    kind: DiagnosticKind::BadMeet,
                    detail: format!("{} ∧ {} = {}", l.labels[a], l.labels[b], l.labels[m]),
                });
            }
            let j = l.join[a][b];
            let lub = l.leq[a][j] && l.leq[b][j] && (0..size).all(|c| !(l.leq[a][c] && l.leq[b][c]) || l.leq[j][c]);
            if !lub {
                out.push(Diagnostic {
                    kind: DiagnosticKind::BadJoin,
                    detail: format!("{} ∨ {} = {}", l.labels[a], l.labels[b], l.labels[j]),
                });
            }
        }
        if !l.leq[l.bottom][a] || !l.leq[a][l.top] {
            out.push(Diagnostic {
                kind: DiagnosticKind::BadBounds,
                detail: format!("{} is not between the bounds", l.labels[a]),
            });
        }
    }
    out
}

/// A dual ideal (filter), as the sorted list of its element indices.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DualIdeal {
    pub elements: Vec<usize>,
}

impl DualIdeal {
    pub fn contains(&self, a: usize) -> bool {
        self.elements.binary_search(&a).is_ok()
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct BitSet(Vec<u64>);

impl BitSet {
    fn new(size: usize) -> Self {
        BitSet(vec![0; size.div_ceil(64)])
    }
    fn insert(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }
    fn contains(&self, i: usize) -> bool {
        self.0[i / 64] & (1 << (i % 64)) != 0
    }
    fn union_with(&mut self, other: &BitSet) {
        self.0.iter_mut().zip(&other.0).for_each(|(a, b)| *a |= b);
    }
    fn is_subset(&self, other: &BitSet) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a & !b == 0)
    }
    fn iter(&self, size: usize) -> impl Iterator<Item = usize> + '_ {
        (0..size).filter(move |&i| self.contains(i))
    }
}

fn up_sets(l: &FiniteLattice) -> Vec<BitSet> {
    let size = l.len();
    (0..size)
        .map(|a| {
            let mut s = BitSet::new(size);
            (0..size).filter(|&b| l.leq[a][b]).for_each(|b| s.insert(b));
            s
        })
        .collect()
}

fn is_filter(l: &FiniteLattice, set: &BitSet) -> bool {
    let size = l.len();
    if set.contains(l.bottom) {
        return false;
    }
    let members: Vec<usize> = set.iter(size).collect();
    if members.is_empty() {
        return false;
    }
    members.iter().all(|&a| (0..size).all(|b| !l.leq[a][b] || set.contains(b)))
        && members
            .iter()
            .all(|&a| members.iter().all(|&b| set.contains(l.meet[a][b])))
}

fn keep_maximal(filters: Vec<BitSet>, size: usize) -> Vec<DualIdeal> {
    let mut out: Vec<DualIdeal> = filters
        .iter()
        .filter(|f| !filters.iter().any(|g| g != *f && f.is_subset(g)))
        .map(|f| DualIdeal {
            elements: f.iter(size).collect(),
        })
        .collect();
    out.sort();
    out.dedup();
    out
}

/// All maximal dual ideals, found by exhaustive search over candidate subsets.
///
/// Up to 20 elements every subset is tested. Beyond that the search walks
/// antichains (the minimal elements of an upset) and prunes any antichain
/// containing an incomparable pair `a, c`: the generated upset would need an
/// element below `a ∧ c < a`, which no antichain through `a` supplies.
pub fn enumerate_maximal_dual_ideals(l: &FiniteLattice, cap: usize) -> Result<Vec<DualIdeal>> {
    let size = l.len();
    if size > cap {
        return Err(Error::TooLarge { size, cap });
    }
    let mut filters = Vec::new();
    if size <= RAW_SUBSET_LIMIT {
        let up: Vec<u64> = (0..size)
            .map(|a| (0..size).filter(|&b| l.leq[a][b]).fold(0, |acc, b| acc | 1 << b))
            .collect();
        let is_filter_mask = |mask: u64| {
            let members = || (0..size).filter(move |&i| mask & (1 << i) != 0);
            mask & (1 << l.bottom) == 0
                && members().all(|a| up[a] & !mask == 0)
                && members().all(|a| members().all(|b| mask & (1 << l.meet[a][b]) != 0))
        };
        for mask in 1u64..(1u64 << size) {
            if is_filter_mask(mask) {
                let mut set = BitSet::new(size);
                (0..size).filter(|&i| mask & (1 << i) != 0).for_each(|i| set.insert(i));
                filters.push(set);
            }
        }
    } else {
        let ups = up_sets(l);
        let mut stack: Vec<usize> = Vec::new();
        antichain_search(l, &ups, 0, &mut stack, &mut filters);
    }
    Ok(keep_maximal(filters, size))
}

fn antichain_search(l: &FiniteLattice, ups: &[BitSet], start: usize, chain: &mut Vec<usize>, out: &mut Vec<BitSet>) {
    let size = l.len();
    for c in start..size {
        if chain.iter().any(|&a| l.leq[a][c] || l.leq[c][a]) {
            continue;
        }
        let closes = chain
            .iter()
            .all(|&a| chain.iter().chain(std::iter::once(&c)).any(|&x| l.leq[x][l.meet[a][c]]));
        if !closes {
            continue;
        }
        chain.push(c);
        let mut set = BitSet::new(size);
        chain.iter().for_each(|&a| set.union_with(&ups[a]));
        if is_filter(l, &set) {
            out.push(set);
        }
        antichain_search(l, ups, c + 1, chain, out);
        chain.pop();
    }
}

/// The principal filters `↑a` at the atoms `a`.
pub fn principal_atom_filters(l: &FiniteLattice) -> Vec<DualIdeal> {
    let size = l.len();
    let mut out: Vec<DualIdeal> = l
        .atoms()
        .into_iter()
        .map(|a| DualIdeal {
            elements: (0..size).filter(|&b| l.leq[a][b]).collect(),
        })
        .collect();
    out.sort();
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoneBaseReport {
    pub ideals: usize,
    pub bottom_open_empty: bool,
    pub top_open_full: bool,
    pub pairs_checked: usize,
    /// Pairs `(a, b)` with `Q_a ∩ Q_b ≠ Q_{a∧b}`.
    pub meet_law_failures: Vec<(usize, usize)>,
}

impl StoneBaseReport {
    pub fn passed(&self) -> bool {
        self.bottom_open_empty && self.top_open_full && self.meet_law_failures.is_empty()
    }
}

/// Exhaustive check of `Q_0 = ∅`, `Q_1 = Q(L)` and `Q_a ∩ Q_b = Q_{a∧b}`.
pub fn stone_base_check(l: &FiniteLattice, cap: usize) -> Result<StoneBaseReport> {
    let ideals = enumerate_maximal_dual_ideals(l, cap)?;
    let size = l.len();
    let basic_open = |a: usize| -> Vec<bool> { ideals.iter().map(|d| d.contains(a)).collect() };
    let opens: Vec<Vec<bool>> = (0..size).map(basic_open).collect();
    let mut failures = Vec::new();
    for a in 0..size {
        for b in 0..size {
            let lhs: Vec<bool> = opens[a].iter().zip(&opens[b]).map(|(x, y)| *x && *y).collect();
            if lhs != opens[l.meet[a][b]] {
                failures.push((a, b));
            }
        }
    }
    Ok(StoneBaseReport {
        ideals: ideals.len(),
        bottom_open_empty: opens[l.bottom].iter().all(|x| !x),
        top_open_full: opens[l.top].iter().all(|&x| x),
        pairs_checked: size * size,
        meet_law_failures: failures,
    })
}

/// A finite lattice of commuting projections together with the projections themselves.
#[derive(Debug, Clone)]
pub struct ProjectionSublattice {
    pub lattice: FiniteLattice,
    pub elements: Vec<BlockProjection>,
}

fn canonical_key(p: &BlockProjection, tol: &Tolerances) -> (usize, Vec<i64>) {
    let rank: usize = p.ranks(tol).iter().sum();
    let entries = p
        .blocks()
        .iter()
        .flat_map(|b| b.matrix().iter().flat_map(|z| [z.re, z.im]).collect::<Vec<_>>())
        .map(|x| (x * 1e6).round() as i64)
        .collect();
    (rank, entries)
}

fn label_of(p: &BlockProjection) -> String {
    let blocks: Vec<Vec<Vec<[f64; 2]>>> = p
        .blocks()
        .iter()
        .map(|b| {
            let m = b.matrix();
            (0..m.nrows())
                .map(|i| {
                    (0..m.ncols())
                        .map(|j| {
                            let z = m[(i, j)];
                            [round6(z.re), round6(z.im)]
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    serde_json::to_string(&blocks).expect("label serialization")
}

fn round6(x: f64) -> f64 {
    let r = (x * 1e6).round() / 1e6;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Closure of pairwise commuting projections (plus `0` and `I`) under blockwise meet and join.
pub fn commuting_projection_sublattice(
    shape: AlgebraShape,
    generators: &[BlockProjection],
    tol: &Tolerances,
) -> Result<ProjectionSublattice> {
    for g in generators {
        crate::algebra::ensure_shape(shape, g.shape())?;
    }
    for i in 0..generators.len() {
        for j in i + 1..generators.len() {
            let commute = generators[i]
                .blocks()
                .iter()
                .zip(generators[j].blocks())
                .all(|(p, q)| p.commutes_with(q, tol.tol.max(1e-12) * 10.0));
            if !commute {
                return Err(Error::NotCommuting(i, j));
            }
        }
    }
    let same = tol.meet_tol;
    let mut elements: Vec<BlockProjection> = vec![BlockProjection::zero(shape), BlockProjection::identity(shape)];
    let push = |elements: &mut Vec<BlockProjection>, p: BlockProjection| -> Result<bool> {
        if elements.iter().any(|e| e.approx_eq(&p, same)) {
            return Ok(false);
        }
        if elements.len() >= CLOSURE_CAP {
            return Err(Error::ClosureCapExceeded(CLOSURE_CAP));
        }
        elements.push(p);
        Ok(true)
    };
    for g in generators {
        push(&mut elements, g.clone())?;
    }
    let mut frontier = 0;
    while frontier < elements.len() {
        let current = elements.len();
        for i in 0..current {
            for j in frontier.max(i)..current {
                let meet = elements[i].meet(&elements[j], tol)?;
                let join = elements[i].join(&elements[j], tol)?;
                push(&mut elements, meet)?;
                push(&mut elements, join)?;
            }
        }
        frontier = current;
    }
    elements.sort_by_cached_key(|p| canonical_key(p, tol));
    let labels = elements.iter().map(label_of).collect();
    let mut leq = Vec::with_capacity(elements.len());
    for a in &elements {
        let row = elements.iter().map(|b| a.leq(b, tol)).collect::<Result<Vec<_>>>()?;
        leq.push(row);
    }
    Ok(ProjectionSublattice {
        lattice: FiniteLattice::from_order(labels, leq)?,
        elements,
    })
}

/// The lattice of central projections `2^m` of the given shape, as a projection sublattice.
pub fn center_sublattice(shape: AlgebraShape, tol: &Tolerances) -> Result<ProjectionSublattice> {
    let generators: Vec<BlockProjection> = (0..shape.m)
        .map(|k| CentralProjection::atom(shape.m, k).to_projection(shape.n))
        .collect();
    commuting_projection_sublattice(shape, &generators, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{basis_vector, Projection};

    fn diamond_with_extra() -> FiniteLattice {
        // 0 < a, b < 1 with a, b incomparable (Boolean 2²)
        FiniteLattice::boolean(2)
    }

    #[test]
    fn builtin_lattices_validate() {
        assert!(validate_lattice(&diamond_with_extra()).is_empty());
        assert!(validate_lattice(&FiniteLattice::chain(3)).is_empty());
        assert!(validate_lattice(&FiniteLattice::boolean(4)).is_empty());
    }

    #[test]
    fn corrupted_meet_is_reported() {
        let l = FiniteLattice::boolean(2).with_meet_entry(1, 2, 3);
        let diags = validate_lattice(&l);
        assert!(diags.iter().any(|d| d.kind == DiagnosticKind::BadMeet));
    }

    #[test]
    fn non_lattice_orders_rejected() {
        // two maximal elements, no top
        let leq = vec![vec![true, true, true], vec![false, true, false], vec![false, false, true]];
        let labels = vec!["0".into(), "a".into(), "b".into()];
        assert!(matches!(FiniteLattice::from_order(labels, leq), Err(Error::InvalidLattice(_))));
        let cyclic = vec![vec![true, true], vec![true, true]];
        assert!(FiniteLattice::from_order(vec!["x".into(), "y".into()], cyclic).is_err());
    }

    #[test]
    fn boolean_ideals_are_atom_filters() {
        for k in 1..=4 {
            let l = FiniteLattice::boolean(k);
            let ideals = enumerate_maximal_dual_ideals(&l, 256).unwrap();
            assert_eq!(ideals.len(), k);
            assert_eq!(ideals, principal_atom_filters(&l));
        }
    }

    #[test]
    fn chain_has_single_ideal() {
        let l = FiniteLattice::chain(3);
        let ideals = enumerate_maximal_dual_ideals(&l, 256).unwrap();
        assert_eq!(ideals, vec![DualIdeal { elements: vec![1, 2] }]);
    }

    #[test]
    fn antichain_route_matches_subset_route() {
        // 2⁵ = 32 elements goes through the antichain search
        let l = FiniteLattice::boolean(5);
        let ideals = enumerate_maximal_dual_ideals(&l, 256).unwrap();
        assert_eq!(ideals.len(), 5);
        assert_eq!(ideals, principal_atom_filters(&l));
        let chain = FiniteLattice::chain(25);
        assert_eq!(enumerate_maximal_dual_ideals(&chain, 256).unwrap(), principal_atom_filters(&chain));
    }

    #[test]
    fn enumeration_cap() {
        let l = FiniteLattice::boolean(3);
        assert_eq!(enumerate_maximal_dual_ideals(&l, 4), Err(Error::TooLarge { size: 8, cap: 4 }));
    }

    #[test]
    fn stone_base_identities() {
        assert!(stone_base_check(&FiniteLattice::boolean(3), 256).unwrap().passed());
        assert!(stone_base_check(&FiniteLattice::chain(5), 256).unwrap().passed());
    }

    #[test]
    fn sublattice_closures() {
        let t = Tolerances::default();
        let s = AlgebraShape::new(1, 2).unwrap();
        let p = BlockProjection::at_block(s, 0, Projection::onto_ray(&basis_vector(2, 0)).unwrap());
        let single = commuting_projection_sublattice(s, std::slice::from_ref(&p), &t).unwrap();
        assert_eq!(single.lattice.len(), 3);
        let q = BlockProjection::at_block(s, 0, Projection::onto_ray(&basis_vector(2, 1)).unwrap());
        let two = commuting_projection_sublattice(s, &[p.clone(), q], &t).unwrap();
        assert_eq!(two.lattice.len(), 4);
        assert_eq!(enumerate_maximal_dual_ideals(&two.lattice, 256).unwrap().len(), 2);
        let center = center_sublattice(AlgebraShape::new(3, 2).unwrap(), &t).unwrap();
        assert_eq!(center.lattice.len(), 8);
        assert_eq!(enumerate_maximal_dual_ideals(&center.lattice, 256).unwrap().len(), 3);
        let w = Projection::onto_ray(&crate::matrix::CVector::from_element(2, crate::matrix::ONE)).unwrap();
        let r = BlockProjection::at_block(s, 0, w);
        assert_eq!(
            commuting_projection_sublattice(s, &[p, r], &t).map(|_| ()),
            Err(Error::NotCommuting(0, 1))
        );
    }
}

//! Seeded property suites behind `stonespec verify`.
//!
//! Each suite draws from its own named substream of the run seed, so a suite's
//! results do not depend on which other suites run or in which order.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::algebra::{
    abelian_equality_phase, abelian_from_vector, beta_class_leq, beta_equivalent, beta_seminorm, central_kernel,
    central_support, is_abelian_projection, is_projection_over_beta, rank_decomposition, rank_over_beta, tau_beta,
    AlgebraShape, BlockOperator, BlockProjection, CenterAtom, CenterPartitionSubalgebra, CentralProjection,
    ModuleVector,
};
use crate::error::{Error, Result};
use crate::io::{BlockOperatorJson, QuasipointJson, ShapeJson};
use crate::lattice::{
    center_sublattice, commuting_projection_sublattice, enumerate_maximal_dual_ideals, principal_atom_filters,
    stone_base_check, validate_lattice, FiniteLattice, ProjectionSublattice, DEFAULT_ENUMERATION_CAP,
};
use crate::masa::{
    admissible_masa_for, admissible_set_descriptor, center_detector, e_vector_experiment, join_prime_violation,
    masa_trace, two_element_property, Masa, Subalgebra, TraceOutcome,
};
use crate::matrix::{complete_basis, CMatrix, CVector, Projection, Tolerances, C64, ONE};
use crate::observable::{max_component_value, observable_value, spectral_family};
use crate::rng::{self, SeedStream};
use crate::spectrum::{
    extend_filterbase, full_support_abelian_member, meet_with_abelian_central_factor, qp_contains, section_sigma,
    separating_member, socle, theta_pushforward, transitive_witness, unitary_action, isotropy_test, zeta_center,
    zeta_subalgebra, FilterBase, Quasipoint,
};

pub const SUITES: [&str; 6] = ["lattice-oracle", "rank", "stone", "observable", "masa", "ks"];

/// Counterexamples kept per property.
const MAX_COUNTEREXAMPLES: usize = 5;

#[derive(Debug, Clone, Copy)]
pub struct RunConfig {
    pub shape: AlgebraShape,
    pub seed: u64,
    pub trials: usize,
    pub tol: Tolerances,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyResult {
    pub name: String,
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub counterexamples: Vec<Value>,
}

/// Results of one suite. The duration is kept out of the serialized form so
/// that reports are byte-identical across runs.
#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub suite: String,
    pub shape: ShapeJson,
    pub seed: u64,
    pub trials: usize,
    pub passed: bool,
    pub properties: Vec<PropertyResult>,
    #[serde(skip)]
    pub duration: Duration,
}

impl VerificationReport {
    pub fn failures(&self) -> usize {
        self.properties.iter().map(|p| p.failed).sum()
    }

    pub fn property(&self, name: &str) -> Option<&PropertyResult> {
        self.properties.iter().find(|p| p.name == name)
    }
}

#[derive(Default)]
struct Recorder {
    order: Vec<String>,
    results: BTreeMap<String, PropertyResult>,
}

impl Recorder {
    fn check(&mut self, name: &str, outcome: Result<bool>, counterexample: impl FnOnce() -> Value) {
        if !self.results.contains_key(name) {
            self.order.push(name.to_string());
            self.results.insert(
                name.to_string(),
                PropertyResult {
                    name: name.to_string(),
                    total: 0,
                    passed: 0,
                    failed: 0,
                    counterexamples: Vec::new(),
                },
            );
        }
        let r = self.results.get_mut(name).expect("inserted above");
        r.total += 1;
        match outcome {
            Ok(true) => r.passed += 1,
            other => {
                r.failed += 1;
                if r.counterexamples.len() < MAX_COUNTEREXAMPLES {
                    let mut ce = counterexample();
                    if let (Err(e), Value::Object(map)) = (&other, &mut ce) {
                        map.insert("error".into(), Value::String(e.to_string()));
                    }
                    r.counterexamples.push(ce);
                }
            }
        }
    }

    fn finish(mut self, suite: &str, config: &RunConfig, started: Instant) -> VerificationReport {
        let properties: Vec<PropertyResult> = self
            .order
            .iter()
            .map(|n| self.results.remove(n).expect("recorded"))
            .collect();
        VerificationReport {
            suite: suite.to_string(),
            shape: config.shape.into(),
            seed: config.seed,
            trials: config.trials,
            passed: properties.iter().all(|p| p.failed == 0),
            properties,
            duration: started.elapsed(),
        }
    }
}

pub fn run_suite(name: &str, config: &RunConfig) -> Result<VerificationReport> {
    if config.trials == 0 {
        return Err(Error::InvalidInput("trials must be at least 1".into()));
    }
    let stream = SeedStream::new(config.seed).split(name);
    let started = Instant::now();
    let mut rec = Recorder::default();
    match name {
        "lattice-oracle" => lattice_suite(config, stream, &mut rec),
        "rank" => rank_suite(config, stream, &mut rec),
        "stone" => stone_suite(config, stream, &mut rec),
        "observable" => observable_suite(config, stream, &mut rec),
        "masa" => masa_suite(config, stream, &mut rec),
        "ks" => ks_suite(config, stream, &mut rec),
        other => return Err(Error::InvalidInput(format!("unknown suite '{other}'"))),
    }
    Ok(rec.finish(name, config, started))
}

/// Runs the named suites in suite-name order.
pub fn run_suites(names: &[&str], config: &RunConfig) -> Result<Vec<VerificationReport>> {
    let mut sorted: Vec<&str> = names.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    sorted.iter().map(|n| run_suite(n, config)).collect()
}

// ---------------------------------------------------------------------------
// generators

fn op_json(p: &BlockProjection) -> Value {
    serde_json::to_value(BlockOperatorJson::from(p)).expect("serializable")
}

fn operator_json(a: &BlockOperator) -> Value {
    serde_json::to_value(BlockOperatorJson::from(a)).expect("serializable")
}

fn qp_json(q: &Quasipoint) -> Value {
    serde_json::to_value(QuasipointJson::from(q)).expect("serializable")
}

fn random_block_projection(shape: AlgebraShape, rng: &mut ChaCha8Rng) -> BlockProjection {
    BlockProjection::from_fn(shape, |_| {
        let r = rng.random_range(0..=shape.n);
        rng::projection(shape.n, r, rng).expect("rank within range")
    })
}

fn random_quasipoint(shape: AlgebraShape, rng: &mut ChaCha8Rng) -> Quasipoint {
    let block = rng.random_range(0..shape.m);
    Quasipoint::new(shape, block, &rng::unit_vector(shape.n, rng)).expect("unit vector")
}

fn random_block_unitary(shape: AlgebraShape, rng: &mut ChaCha8Rng) -> BlockOperator {
    BlockOperator::from_fn(shape, |_| rng::unitary(shape.n, rng))
}

fn random_central(m: usize, rng: &mut ChaCha8Rng) -> CentralProjection {
    let mask = if m == 64 { rng.random::<u64>() } else { rng.random_range(0..1u64 << m) };
    CentralProjection::from_mask(m, mask)
}

/// Projection onto the span of the given columns.
fn span_projection(cols: CMatrix) -> Projection {
    let k = cols.ncols();
    let q = cols.qr().q();
    Projection::onto_columns(&q.columns(0, k).into_owned())
}

/// Projection onto `span(v, g₁, …, g_extra)` with Gaussian `g`.
fn projection_containing(v: &CVector, extra: usize, rng: &mut ChaCha8Rng) -> Projection {
    let n = v.len();
    let mut cols = vec![v.clone()];
    cols.extend((0..extra.min(n - 1)).map(|_| rng::gaussian_vector(n, rng)));
    span_projection(CMatrix::from_columns(&cols))
}

/// A projection in `𝔅`: its block `i` contains the ray, other blocks are random.
fn member_projection(q: &Quasipoint, rng: &mut ChaCha8Rng) -> BlockProjection {
    let shape = q.shape();
    let extra = rng.random_range(0..shape.n);
    let inside = projection_containing(q.ray(), extra, rng);
    let mut p = random_block_projection(shape, rng);
    let mut blocks = p.blocks().to_vec();
    blocks[q.block()] = inside;
    p = BlockProjection::from_blocks(shape, blocks).expect("same shape");
    p
}

fn random_hermitian(shape: AlgebraShape, rng: &mut ChaCha8Rng) -> BlockOperator {
    BlockOperator::from_fn(shape, |_| rng::hermitian(shape.n, rng))
}

/// `U diag(d) U*` with small integer eigenvalues, so repeated eigenvalues occur.
fn degenerate_hermitian(shape: AlgebraShape, rng: &mut ChaCha8Rng) -> BlockOperator {
    BlockOperator::from_fn(shape, |_| {
        let u = rng::unitary(shape.n, rng);
        let d = CVector::from_fn(shape.n, |_, _| C64::new(rng.random_range(-2..=2) as f64, 0.0));
        &u * CMatrix::from_diagonal(&d) * u.adjoint()
    })
}

fn random_abelian(shape: AlgebraShape, rng: &mut ChaCha8Rng) -> ModuleVector {
    let keep = rng.random_range(0..shape.m);
    let blocks = (0..shape.m)
        .map(|k| {
            if k == keep || rng.random_bool(0.67) {
                rng::unit_vector(shape.n, rng)
            } else {
                CVector::zeros(shape.n)
            }
        })
        .collect();
    ModuleVector::new(shape, blocks).expect("block lengths match")
}

/// 2–5 projections sharing a common unit vector on a random nonempty set of blocks.
pub fn random_filter_base(shape: AlgebraShape, rng: &mut ChaCha8Rng) -> (FilterBase, CentralProjection) {
    let mut support = random_central(shape.m, rng);
    if support.is_empty() {
        support = CentralProjection::atom(shape.m, rng.random_range(0..shape.m));
    }
    let common: Vec<CVector> = (0..shape.m).map(|_| rng::unit_vector(shape.n, rng)).collect();
    let count = rng.random_range(2..=5);
    let projections = (0..count)
        .map(|_| {
            BlockProjection::from_fn(shape, |k| {
                if support.contains(k) {
                    let extra = rng.random_range(0..shape.n);
                    projection_containing(&common[k], extra, rng)
                } else {
                    let r = rng.random_range(0..=shape.n);
                    rng::projection(shape.n, r, rng).expect("rank within range")
                }
            })
        })
        .collect();
    (FilterBase::new(shape, projections).expect("same shape"), support)
}

fn random_masa(shape: AlgebraShape, rng: &mut ChaCha8Rng, tol: &Tolerances) -> Masa {
    Masa::new(shape, (0..shape.m).map(|_| rng::unitary(shape.n, rng)).collect(), tol).expect("Haar unitaries")
}

fn random_partition(m: usize, rng: &mut ChaCha8Rng) -> CenterPartitionSubalgebra {
    let labels: Vec<usize> = (0..m).map(|_| rng.random_range(0..m)).collect();
    let mut cells: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (k, l) in labels.into_iter().enumerate() {
        cells.entry(l).or_default().push(k);
    }
    CenterPartitionSubalgebra::new(m, cells.into_values().collect()).expect("partition of blocks")
}

// ---------------------------------------------------------------------------
// lattice-oracle

fn ideals_json(l: &FiniteLattice, ideals: &[crate::lattice::DualIdeal]) -> Value {
    let named: Vec<Vec<&str>> = ideals
        .iter()
        .map(|d| d.elements.iter().map(|&i| l.labels()[i].as_str()).collect())
        .collect();
    json!(named)
}

fn check_lattice(rec: &mut Recorder, family: &str, l: &FiniteLattice) {
    let diagnostics = validate_lattice(l);
    rec.check("lattice-valid", Ok(diagnostics.is_empty()), || {
        json!({"lattice": family, "diagnostics": diagnostics.iter().map(ToString::to_string).collect::<Vec<_>>()})
    });
    let brute = enumerate_maximal_dual_ideals(l, DEFAULT_ENUMERATION_CAP);
    let atoms = principal_atom_filters(l);
    let agree = brute.as_ref().map(|b| *b == atoms).map_err(Clone::clone);
    rec.check("ideals-equal-atom-filters", agree, || {
        json!({
            "lattice": family,
            "brute_force": brute.as_ref().map(|b| ideals_json(l, b)).unwrap_or(Value::Null),
            "atom_filters": ideals_json(l, &atoms),
        })
    });
    let stone = stone_base_check(l, DEFAULT_ENUMERATION_CAP);
    let pairs: Vec<(String, String)> = stone
        .as_ref()
        .map(|r| {
            r.meet_law_failures
                .iter()
                .map(|&(a, b)| (l.labels()[a].clone(), l.labels()[b].clone()))
                .collect()
        })
        .unwrap_or_default();
    rec.check("stone-base", stone.as_ref().map(|r| r.passed()).map_err(Clone::clone), || {
        json!({"lattice": family, "meet_law_failures": pairs})
    });
}

/// Every maximal dual ideal of a projection sublattice is the trace of a quasipoint
/// whose ray lies in the range of an atom, and conversely.
fn check_oracle_agreement(rec: &mut Recorder, family: &str, sub: &ProjectionSublattice, tol: &Tolerances) {
    let l = &sub.lattice;
    let outcome = (|| -> Result<bool> {
        let ideals = enumerate_maximal_dual_ideals(l, DEFAULT_ENUMERATION_CAP)?;
        let mut traces = Vec::new();
        for a in l.atoms() {
            let atom = &sub.elements[a];
            let block = central_support(atom, tol).support()[0];
            let ray = atom.block(block).range_basis(tol).column(0).into_owned();
            let q = Quasipoint::new(atom.shape(), block, &ray)?;
            let mut members = Vec::new();
            for (i, p) in sub.elements.iter().enumerate() {
                if qp_contains(&q, p, tol)? {
                    members.push(i);
                }
            }
            traces.push(crate::lattice::DualIdeal { elements: members });
        }
        traces.sort();
        Ok(traces == ideals)
    })();
    rec.check("oracle-agreement", outcome, || json!({"lattice": family, "elements": l.labels()}));
}

fn lattice_suite(config: &RunConfig, stream: SeedStream, rec: &mut Recorder) {
    let tol = &config.tol;
    for k in 1..=6 {
        check_lattice(rec, &format!("boolean-{k}"), &FiniteLattice::boolean(k));
    }
    for len in 1..=8 {
        check_lattice(rec, &format!("chain-{len}"), &FiniteLattice::chain(len));
    }
    let corrupted = FiniteLattice::boolean(2).with_meet_entry(1, 2, 3);
    rec.check("corruption-detected", Ok(!validate_lattice(&corrupted).is_empty()), || {
        json!({"lattice": "boolean-2 with 01∧10 := 11"})
    });

    let shape = config.shape;
    if shape.m <= 6 {
        match center_sublattice(shape, tol) {
            Ok(sub) => {
                rec.check("center-is-boolean", Ok(sub.lattice.len() == 1 << shape.m), || {
                    json!({"m": shape.m, "elements": sub.lattice.len()})
                });
                check_lattice(rec, "center", &sub.lattice);
                check_oracle_agreement(rec, "center", &sub, tol);
            }
            Err(e) => rec.check("center-is-boolean", Err(e), || json!({"m": shape.m})),
        }
    }

    let samples = config.trials.min(20);
    for t in 0..samples {
        let mut rng = stream.split("sublattice").split_index(t as u64).rng();
        let masa = random_masa(shape, &mut rng, tol);
        let count = rng.random_range(1..=3);
        let generators: Vec<BlockProjection> = (0..count)
            .map(|_| {
                BlockProjection::from_fn(shape, |k| {
                    let cols: Vec<CVector> =
                        (0..shape.n).filter(|_| rng.random_bool(0.5)).map(|j| masa.column(k, j)).collect();
                    if cols.is_empty() {
                        Projection::zero(shape.n)
                    } else {
                        Projection::onto_columns(&CMatrix::from_columns(&cols))
                    }
                })
            })
            .collect();
        let family = format!("sublattice-{t}");
        match commuting_projection_sublattice(shape, &generators, tol) {
            Ok(sub) => {
                rec.check("sublattice-size", Ok(sub.lattice.len() <= 64), || {
                    json!({"lattice": family, "elements": sub.lattice.len()})
                });
                check_lattice(rec, &family, &sub.lattice);
                check_oracle_agreement(rec, &family, &sub, tol);
            }
            Err(e) => rec.check("sublattice-size", Err(e), || {
                json!({"lattice": family, "generators": generators.iter().map(op_json).collect::<Vec<_>>()})
            }),
        }
    }
}

// ---------------------------------------------------------------------------
// rank

fn rank_suite(config: &RunConfig, stream: SeedStream, rec: &mut Recorder) {
    let shape = config.shape;
    let tol = &config.tol;
    let n = shape.n;
    for t in 0..config.trials {
        let mut rng = stream.split_index(t as u64).rng();
        let p = random_block_projection(shape, &mut rng);
        let beta = CenterAtom(rng.random_range(0..shape.m));
        let ce = || json!({"trial": t, "p": op_json(&p), "beta": beta.0});
        let support = central_support(&p, tol);

        let decomposition = rank_decomposition(&p, tol);
        let ranks = p.ranks(tol);
        let partition_ok = match &decomposition {
            Err(Error::ZeroProjection) => Ok(support.is_empty()),
            Err(e) => Err(e.clone()),
            Ok(parts) => {
                let union = parts.values().fold(CentralProjection::empty(shape.m), |acc, c| acc.union(c));
                let disjoint = parts
                    .values()
                    .enumerate()
                    .all(|(i, a)| parts.values().skip(i + 1).all(|b| a.intersect(b).is_empty()));
                let consistent = parts.iter().all(|(j, c)| c.support().iter().all(|&k| ranks[k] == *j));
                Ok(union == support && disjoint && consistent)
            }
        };
        rec.check("rank-decomposition", partition_ok, ce);

        // local constancy: β ↦ rk_β(P) is defined exactly on supp(P) and constant on each p_j
        let local = (0..shape.m).all(|k| match rank_over_beta(&p, CenterAtom(k), tol) {
            Ok(r) => support.contains(k) && decomposition.as_ref().is_ok_and(|d| d[&r].contains(k)),
            Err(Error::NotOverBeta(_)) => !support.contains(k),
            Err(_) => false,
        });
        rec.check("rank-locally-constant", Ok(local), ce);

        let stable = p.ranks(&tol.with_rank_tol(1e-6)) == p.ranks(&tol.with_rank_tol(1e-8));
        rec.check("rank-tolerance-stability", Ok(stable), ce);

        if !is_projection_over_beta(&p, beta, tol) {
            continue;
        }
        let rk = match rank_over_beta(&p, beta, tol) {
            Ok(r) => r,
            Err(e) => {
                rec.check("rank-defined-on-support", Err(e), ce);
                continue;
            }
        };

        let mut c = random_central(shape.m, &mut rng);
        c = c.union(&CentralProjection::atom(shape.m, beta.0));
        rec.check("rank-central-cut", rank_over_beta(&p.restrict(&c), beta, tol).map(|r| r == rk), || {
            json!({"trial": t, "p": op_json(&p), "beta": beta.0, "central": c.support()})
        });

        let full = central_kernel(&p, tol).contains(beta.0);
        rec.check("rank-full-iff-central-below", Ok((rk == n) == full), ce);

        let cut = p.restrict(&CentralProjection::atom(shape.m, beta.0));
        rec.check("rank-one-iff-abelian-cut", Ok((rk == 1) == is_abelian_projection(&cut, tol)), ce);

        let r = random_block_projection(shape, &mut rng);
        let monotone = p.join(&r, tol).and_then(|q| {
            let rq = rank_over_beta(&q, beta, tol)?;
            Ok(p.leq(&q, tol)? && rk <= rq)
        });
        rec.check("rank-monotone", monotone, || json!({"trial": t, "p": op_json(&p), "r": op_json(&r), "beta": beta.0}));

        // equal rank and [P] ≤ [Q] force [P] = [Q]; Q agrees with P on β or is random
        let same_on_beta = {
            let mut blocks = random_block_projection(shape, &mut rng).blocks().to_vec();
            blocks[beta.0] = p.block(beta.0).clone();
            BlockProjection::from_blocks(shape, blocks).expect("same shape")
        };
        for q in [same_on_beta, random_block_projection(shape, &mut rng)] {
            let implication = (|| -> Result<bool> {
                if !is_projection_over_beta(&q, beta, tol) {
                    return Ok(true);
                }
                let premise = rank_over_beta(&q, beta, tol)? == rk && beta_class_leq(&p, &q, beta, tol)?;
                Ok(!premise || beta_equivalent(&p.to_operator(), &q.to_operator(), beta, tol)?)
            })();
            rec.check("rank-equal-classes", implication, || {
                json!({"trial": t, "p": op_json(&p), "q": op_json(&q), "beta": beta.0})
            });
        }

        if rk < n {
            let c = p.complement();
            let ok = is_projection_over_beta(&c, beta, tol)
                && rank_over_beta(&c, beta, tol).map(|r| r == n - rk).unwrap_or(false);
            rec.check("rank-complement", Ok(ok), ce);
        }
    }

    for t in 0..config.trials {
        let mut rng = stream.split("seminorm").split_index(t as u64).rng();
        let values: Vec<C64> = (0..shape.m).map(|_| rng::gaussian_complex(&mut rng)).collect();
        let c = BlockOperator::central(shape, &values).expect("m values");
        for beta in shape.atoms() {
            let ok = tau_beta(&c, beta, tol).map(|tau| (beta_seminorm(&c, beta) - tau.norm()).abs() <= 1e-9);
            rec.check("seminorm-identity", ok, || json!({"trial": t, "c": operator_json(&c), "beta": beta.0}));
        }
        let a = BlockOperator::from_fn(shape, |_| rng::gaussian_matrix(shape.n, shape.n, &mut rng));
        let aa = &a.adjoint() * &a;
        for beta in shape.atoms() {
            let lhs = beta_seminorm(&aa, beta);
            let rhs = beta_seminorm(&a, beta).powi(2);
            rec.check("cstar-identity", Ok((lhs - rhs).abs() <= 1e-7 * rhs.max(1.0)), || {
                json!({"trial": t, "a": operator_json(&a), "beta": beta.0})
            });
        }
        let va = random_abelian(shape, &mut rng);
        let u: Vec<C64> = (0..shape.m)
            .map(|_| C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU)))
            .collect();
        let recovered = abelian_equality_phase(&va, &va.central_scale(&u), tol).map(|phases| {
            phases.is_some_and(|ph| {
                ph.iter().enumerate().all(|(k, z)| {
                    let expected = if va.block(k).norm() > tol.tol { u[k] } else { ONE };
                    (z - expected).norm() <= 1e-9
                })
            })
        });
        rec.check("phase-round-trip", recovered, || json!({"trial": t}));
    }
}

// ---------------------------------------------------------------------------
// stone

fn fixing_unitary(q: &Quasipoint, rng: &mut ChaCha8Rng) -> BlockOperator {
    let shape = q.shape();
    let basis = complete_basis(q.ray()).expect("unit ray");
    let mut inner_unitary = CMatrix::zeros(shape.n, shape.n);
    inner_unitary[(0, 0)] = C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
    if shape.n > 1 {
        let w = rng::unitary(shape.n - 1, rng);
        inner_unitary.view_mut((1, 1), (shape.n - 1, shape.n - 1)).copy_from(&w);
    }
    let t_i = &basis * inner_unitary * basis.adjoint();
    let mut t = random_block_unitary(shape, rng);
    t = t.with_block(q.block(), t_i).expect("square block");
    t
}

fn stone_suite(config: &RunConfig, stream: SeedStream, rec: &mut Recorder) {
    let shape = config.shape;
    let tol = &config.tol;
    for t in 0..config.trials {
        let mut rng = stream.split_index(t as u64).rng();
        let q = random_quasipoint(shape, &mut rng);
        let p = member_projection(&q, &mut rng);
        let p2 = member_projection(&q, &mut rng);
        let x = random_block_projection(shape, &mut rng);
        let ce = || json!({"trial": t, "quasipoint": qp_json(&q), "p": op_json(&p), "p2": op_json(&p2), "x": op_json(&x)});

        rec.check(
            "upward-closure",
            p.join(&x, tol).and_then(|j| Ok(qp_contains(&q, &p, tol)? && qp_contains(&q, &j, tol)?)),
            ce,
        );
        rec.check(
            "meet-closure",
            p.meet(&p2, tol).and_then(|m| qp_contains(&q, &m, tol)),
            ce,
        );
        let base_law = (|| -> Result<bool> {
            for (a, b) in [(&p, &p2), (&p, &x), (&x, &p2)] {
                let both = qp_contains(&q, a, tol)? && qp_contains(&q, b, tol)?;
                if both != qp_contains(&q, &a.meet(b, tol)?, tol)? {
                    return Ok(false);
                }
            }
            Ok(true)
        })();
        rec.check("basic-open-meet-law", base_law, ce);

        let maximal = (|| -> Result<bool> {
            match separating_member(&q, &x, tol)? {
                None => qp_contains(&q, &x, tol),
                Some(s) => Ok(qp_contains(&q, &s, tol)? && x.meet(&s, tol)?.is_zero(tol)),
            }
        })();
        rec.check("maximality", maximal, ce);

        let g = q.generator();
        rec.check(
            "contains-abelian",
            qp_contains(&q, &g, tol).map(|inside| inside && is_abelian_projection(&g, tol)),
            ce,
        );
        let full = full_support_abelian_member(&q, tol).and_then(|f| {
            Ok(qp_contains(&q, &f, tol)?
                && is_abelian_projection(&f, tol)
                && central_support(&f, tol) == CentralProjection::full(shape.m))
        });
        rec.check("full-support-abelian", full, ce);

        let other = Quasipoint::new(shape, q.block(), &rng::unit_vector(shape.n, &mut rng)).expect("unit vector");
        if !q.same_as(&other, tol.tol) {
            rec.check("fibre-discreteness", qp_contains(&q, &other.generator(), tol).map(|b| !b), || {
                json!({"trial": t, "quasipoint": qp_json(&q), "other": qp_json(&other)})
            });
        }

        let soc = socle(&q, &p, tol).and_then(|s| Ok(s.minimal.leq(&p, tol)? && qp_contains(&q, &s.minimal, tol)?));
        rec.check("socle-minimal", soc, ce);

        // ζ(Q_P) = Q_{s(P)}: some quasipoint over β contains P iff β ∈ s(P)
        let beta = rng.random_range(0..shape.m);
        let image = (|| -> Result<bool> {
            let in_support = central_support(&x, tol).contains(beta);
            let basis = x.block(beta).range_basis(tol);
            if in_support {
                let witness = Quasipoint::new(shape, beta, &basis.column(0).into_owned())?;
                qp_contains(&witness, &x, tol)
            } else {
                let probe = Quasipoint::new(shape, beta, &rng::unit_vector(shape.n, &mut rng))?;
                Ok(basis.ncols() == 0 && !qp_contains(&probe, &x, tol)?)
            }
        })();
        rec.check("basic-open-image", image, || json!({"trial": t, "x": op_json(&x), "beta": beta}));

        let c = random_central(shape.m, &mut rng);
        let part = random_partition(shape.m, &mut rng);
        let preimage = (|| -> Result<bool> {
            let central_law = qp_contains(&q, &c.to_projection(shape.n), tol)? == c.contains(zeta_center(&q).0);
            let cell = zeta_subalgebra(&q, &part)?;
            Ok(central_law && cell.contains(q.block()) && qp_contains(&q, &cell.to_projection(shape.n), tol)?)
        })();
        rec.check("basic-open-preimage", preimage, || {
            json!({"trial": t, "quasipoint": qp_json(&q), "central": c.support()})
        });

        let a = random_abelian(shape, &mut rng);
        let e = match abelian_from_vector(&a, tol) {
            Ok(e) => e,
            Err(err) => {
                rec.check("section-identity", Err(err), || json!({"trial": t}));
                continue;
            }
        };
        let sections = section_sigma(&e, tol).and_then(|s| {
            let support = central_support(&e, tol);
            let mut ok = s.keys().map(|b| b.0).collect::<Vec<_>>() == support.support();
            for (b, qb) in &s {
                ok &= zeta_center(qb) == *b && qp_contains(qb, &e, tol)?;
            }
            Ok(ok)
        });
        rec.check("section-identity", sections, || json!({"trial": t, "e": op_json(&e)}));
        let factor = meet_with_abelian_central_factor(&x, &e, tol).and_then(|c| {
            let meet = x.meet(&e, tol)?;
            Ok(meet.approx_eq(&e.restrict(&c), 1e-6))
        });
        rec.check("abelian-meet-factor", factor, || json!({"trial": t, "x": op_json(&x), "e": op_json(&e)}));

        let (fb, support) = random_filter_base(shape, &mut rng);
        let fb_ce = || {
            json!({"trial": t, "filter_base": fb.projections().iter().map(op_json).collect::<Vec<_>>()})
        };
        let extension = extend_filterbase(&fb, None, tol).and_then(|ext| {
            let mut ok = qp_contains(&ext, &ext.generator(), tol)? && is_abelian_projection(&ext.generator(), tol);
            for member in fb.projections() {
                ok &= qp_contains(&ext, member, tol)?;
            }
            let g = full_support_abelian_member(&ext, tol)?;
            ok &= qp_contains(&ext, &g, tol)? && central_support(&g, tol) == CentralProjection::full(shape.m);
            Ok(ok)
        });
        rec.check("filter-base-extension", extension, fb_ce);
        let preferred = rng.random_range(0..shape.m);
        let fibre = (|| -> Result<bool> {
            let meet_support = central_support(&fb.total_meet(tol)?, tol);
            match extend_filterbase(&fb, Some(CenterAtom(preferred)), tol) {
                Ok(ext) => Ok(meet_support.contains(preferred) && ext.block() == preferred),
                Err(Error::AtomNotAdmissible(_)) => Ok(!meet_support.contains(preferred)),
                Err(e) => Err(e),
            }
        })();
        rec.check("filter-base-preferred-atom", fibre, fb_ce);
        rec.check(
            "filter-base-nonzero-meet",
            fb.total_meet(tol).map(|g| support.is_subset(&central_support(&g, tol))),
            fb_ce,
        );

        let q2 = Quasipoint::new(shape, q.block(), &rng::unit_vector(shape.n, &mut rng)).expect("unit vector");
        let transitive = transitive_witness(&q, &q2, tol).and_then(|w| {
            Ok(w.is_unitary(1e-9) && unitary_action(&w, &q, tol)?.same_as(&q2, tol.tol))
        });
        rec.check("transitive-witness", transitive, || {
            json!({"trial": t, "from": qp_json(&q), "to": qp_json(&q2)})
        });
        if shape.m > 1 {
            let shifted = Quasipoint::new(shape, (q.block() + 1) % shape.m, q2.ray()).expect("unit vector");
            let refused = matches!(transitive_witness(&q, &shifted, tol), Err(Error::DifferentFibre(..)));
            rec.check("different-fibre-refused", Ok(refused), || {
                json!({"trial": t, "from": qp_json(&q), "to": qp_json(&shifted)})
            });
        }

        let u = if rng.random_bool(0.5) { fixing_unitary(&q, &mut rng) } else { random_block_unitary(shape, &mut rng) };
        let iso = isotropy_test(&u, &q, tol).map(|(fixed, report)| report.agree() && report.fixes_quasipoint == fixed);
        rec.check("isotropy-agreement", iso, || json!({"trial": t, "t": operator_json(&u), "quasipoint": qp_json(&q)}));

        let theta = &u * &p.to_operator();
        let push = (|| -> Result<bool> {
            let pushed = theta_pushforward(&theta, &q, tol)?;
            Ok(pushed.same_as(&unitary_action(&u, &q, tol)?, tol.tol))
        })();
        rec.check("pushforward", push, ce);
    }
}

// ---------------------------------------------------------------------------
// observable

fn observable_suite(config: &RunConfig, stream: SeedStream, rec: &mut Recorder) {
    let shape = config.shape;
    let tol = &config.tol;
    for t in 0..config.trials {
        let mut rng = stream.split_index(t as u64).rng();
        let degenerate = t % 2 == 1;
        let a = if degenerate { degenerate_hermitian(shape, &mut rng) } else { random_hermitian(shape, &mut rng) };
        let mut q = random_quasipoint(shape, &mut rng);
        if degenerate && rng.random_bool(0.5) {
            // an eigenvector, so that some spectral components vanish exactly
            if let Ok(f) = spectral_family(&a, tol) {
                let b = &f.block(q.block()).components;
                let j = rng.random_range(0..b.len());
                let v = b[j].range_basis(tol).column(0).into_owned();
                q = Quasipoint::new(shape, q.block(), &v).expect("unit vector");
            }
        }
        let ce = || json!({"trial": t, "a": operator_json(&a), "quasipoint": qp_json(&q)});

        let family = spectral_family(&a, tol).map(|f| f.check(tol));
        rec.check("spectral-family", family, ce);

        let value = observable_value(&a, &q, tol);
        let agree = value
            .clone()
            .and_then(|f| Ok((f - max_component_value(&a, &q, tol)?).abs() <= 1e-12));
        rec.check("formula-agreement", agree, ce);

        let Ok(f) = value else { continue };
        let contained = spectral_family(&a, tol)
            .map(|fam| fam.block(q.block()).eigenvalues.iter().any(|&mu| (mu - f).abs() <= 1e-12));
        rec.check("range-containment", contained, ce);

        let c: f64 = rng.random_range(-3.0..3.0);
        let shifted = &a + &BlockOperator::identity(shape).scale(C64::new(c, 0.0));
        rec.check(
            "shift-equivariance",
            observable_value(&shifted, &q, tol).map(|g| (g - f - c).abs() <= 1e-8),
            ce,
        );

        let u = random_block_unitary(shape, &mut rng);
        let equivariant = unitary_action(&u, &q, tol)
            .and_then(|moved| observable_value(&a.conjugate_by(&u), &moved, tol))
            .map(|g| (g - f).abs() <= 1e-8);
        rec.check("unitary-equivariance", equivariant, || {
            json!({"trial": t, "a": operator_json(&a), "quasipoint": qp_json(&q), "t": operator_json(&u)})
        });
    }

    // abelian shape: f_A is the Gelfand transform, for every m ≤ 6
    for t in 0..config.trials {
        let mut rng = stream.split("gelfand").split_index(t as u64).rng();
        let s = AlgebraShape::new(1 + t % 6, 1).expect("valid shape");
        let values: Vec<C64> = (0..s.m).map(|_| C64::new(rng.random_range(-5.0..5.0), 0.0)).collect();
        let a = BlockOperator::central(s, &values).expect("m values");
        for beta in s.atoms() {
            let q = Quasipoint::new(s, beta.0, &CVector::from_element(1, ONE)).expect("unit vector");
            let ok = (|| -> Result<bool> {
                Ok((observable_value(&a, &q, tol)? - tau_beta(&a, beta, tol)?.re).abs() <= 1e-9)
            })();
            rec.check("gelfand-coincidence", ok, || json!({"trial": t, "a": operator_json(&a), "beta": beta.0}));
        }
    }
}

// ---------------------------------------------------------------------------
// masa

fn masa_suite(config: &RunConfig, stream: SeedStream, rec: &mut Recorder) {
    let shape = config.shape;
    let tol = &config.tol;
    for t in 0..config.trials {
        let mut rng = stream.split_index(t as u64).rng();
        let q = random_quasipoint(shape, &mut rng);
        let admissible = admissible_masa_for(&q);
        rec.check("admissible-masa", masa_trace(&q, &admissible, tol).map(|o| o.is_quasipoint()), || {
            json!({"trial": t, "quasipoint": qp_json(&q)})
        });

        let m = random_masa(shape, &mut rng, tol);
        let masa_ce = || json!({"trial": t, "masa": serde_json::to_value(crate::io::masa_json(&m)).expect("serializable")});
        if shape.n >= 2 {
            let block = rng.random_range(0..shape.m);
            let mixed = (m.column(block, 0) + m.column(block, 1)).unscale(2f64.sqrt());
            let bad = Quasipoint::new(shape, block, &mixed).expect("unit vector");
            let witnessed = masa_trace(&bad, &m, tol).map(|o| match o {
                TraceOutcome::Failure(f) => !f.projection_in && !f.complement_in,
                TraceOutcome::Quasipoint(_) => false,
            });
            rec.check("non-admissible-witness", witnessed, masa_ce);
        } else {
            rec.check("abelian-always-admissible", masa_trace(&q, &m, tol).map(|o| o.is_quasipoint()), masa_ce);
        }

        let points = admissible_set_descriptor(&m);
        let count_ok = (|| -> Result<bool> {
            let mut ok = points.len() == shape.m * shape.n;
            for (i, a) in points.iter().enumerate() {
                ok &= masa_trace(a, &m, tol)?.is_quasipoint();
                ok &= points[i + 1..].iter().all(|b| !a.same_as(b, tol.tol));
            }
            Ok(ok)
        })();
        rec.check("admissible-set-size", count_ok, masa_ce);

        let probe = random_quasipoint(shape, &mut rng);
        let negative = masa_trace(&probe, &m, tol).map(|o| {
            let listed = points.iter().any(|a| a.same_as(&probe, tol.tol));
            o.is_quasipoint() == listed && (shape.n == 1 || !listed)
        });
        rec.check("admissible-set-membership", negative, || {
            json!({"trial": t, "quasipoint": qp_json(&probe), "masa": serde_json::to_value(crate::io::masa_json(&m)).expect("serializable")})
        });

        let u = random_block_unitary(shape, &mut rng);
        for (label, sample) in [("admissible", &q), ("random", &probe)] {
            let base = if label == "admissible" { admissible.clone() } else { m.clone() };
            let invariant = (|| -> Result<bool> {
                let before = masa_trace(sample, &base, tol)?.is_quasipoint();
                let after = masa_trace(&unitary_action(&u, sample, tol)?, &base.conjugate_by(&u)?, tol)?.is_quasipoint();
                Ok(before == after)
            })();
            rec.check("unitary-invariance", invariant, || {
                json!({"trial": t, "quasipoint": qp_json(sample), "t": operator_json(&u)})
            });
        }

        let part = random_partition(shape.m, &mut rng);
        let detector_seed = rng.random::<u64>();
        let verdicts = (|| -> Result<bool> {
            let central_ok = center_detector(&Subalgebra::Partition(part.clone()), shape, 8, detector_seed, tol)?.central;
            let masa_verdict = center_detector(&Subalgebra::Masa(m.clone()), shape, 8, detector_seed, tol)?;
            let masa_ok = masa_verdict.central == (shape.n == 1)
                && masa_verdict.failing.as_ref().is_none_or(|f| !masa_trace(f, &m, tol).map(|o| o.is_quasipoint()).unwrap_or(true));
            Ok(central_ok && masa_ok)
        })();
        rec.check("center-detector", verdicts, masa_ce);
    }
}

// ---------------------------------------------------------------------------
// ks

fn ks_suite(config: &RunConfig, stream: SeedStream, rec: &mut Recorder) {
    let shape = config.shape;
    let tol = &config.tol;
    let abelian = shape.n == 1;
    for t in 0..config.trials {
        let mut rng = stream.split_index(t as u64).rng();
        let q = random_quasipoint(shape, &mut rng);
        let p = random_block_projection(shape, &mut rng);
        let witness = join_prime_violation(&q, tol);
        if abelian {
            rec.check("prime-property", two_element_property(&q, &p, tol), || {
                json!({"trial": t, "quasipoint": qp_json(&q), "p": op_json(&p)})
            });
            rec.check("no-violation-witness", witness.map(|w| w.is_none()), || json!({"trial": t, "quasipoint": qp_json(&q)}));
            // every projection of the abelian algebra is central: enumerate them when feasible
            if shape.m <= 12 {
                let all = (0..1u64 << shape.m).try_fold(true, |acc, mask| {
                    let c = CentralProjection::from_mask(shape.m, mask).to_projection(1);
                    Ok::<bool, Error>(acc && two_element_property(&q, &c, tol)?)
                });
                rec.check("prime-property-exhaustive", all, || json!({"trial": t, "quasipoint": qp_json(&q)}));
            }
        } else {
            let verified = witness.and_then(|w| match w {
                None => Ok(false),
                Some(w) => Ok(w.verified() && w.recheck(tol)? && !two_element_property(&q, &w.projections[0], tol)?),
            });
            rec.check("violation-witness", verified, || json!({"trial": t, "quasipoint": qp_json(&q)}));
        }
    }
    let e = e_vector_experiment(shape, tol);
    if abelian {
        rec.check("e-vector-requires-n2", Ok(matches!(e, Err(Error::RequiresNGe2))), || json!({"n": 1}));
    } else {
        rec.check("e-vector-contradiction", e.as_ref().map(|r| r.certified()).map_err(Clone::clone), || {
            e.as_ref().map(crate::io::e_vector_json).unwrap_or(json!({}))
        });
    }
}

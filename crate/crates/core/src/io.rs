//! JSON and CSV formats.
//!
//! Complex numbers are `[re, im]` pairs and matrices are row-major nested arrays.
//! Every parser validates shapes and returns [`Error::InvalidInput`] instead of panicking.

use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::algebra::{AlgebraShape, BlockOperator, BlockProjection, CentralProjection, ModuleVector};
use crate::error::{Error, Result};
use crate::lattice::FiniteLattice;
use crate::masa::{EVectorReport, Masa, PrimenessWitness};
use crate::matrix::{CMatrix, CVector, Tolerances, C64};
use crate::observable::ObservableRow;
use crate::spectrum::{FilterBase, Quasipoint};

pub type ComplexJson = [f64; 2];
pub type MatrixJson = Vec<Vec<ComplexJson>>;

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

fn from_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| invalid(format!("malformed JSON: {e}")))
}

fn to_complex(z: &ComplexJson) -> Result<C64> {
    if z.iter().all(|x| x.is_finite()) {
        Ok(C64::new(z[0], z[1]))
    } else {
        Err(invalid("non-finite complex entry"))
    }
}

pub fn complex_json(z: C64) -> ComplexJson {
    [z.re, z.im]
}

pub fn vector_json(v: &CVector) -> Vec<ComplexJson> {
    v.iter().map(|z| complex_json(*z)).collect()
}

pub fn vector_from_json(v: &[ComplexJson]) -> Result<CVector> {
    let entries = v.iter().map(to_complex).collect::<Result<Vec<_>>>()?;
    Ok(CVector::from_vec(entries))
}

pub fn matrix_json(m: &CMatrix) -> MatrixJson {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| complex_json(m[(i, j)])).collect())
        .collect()
}

pub fn matrix_from_json(rows: &MatrixJson) -> Result<CMatrix> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != c) {
        return Err(invalid("ragged matrix rows"));
    }
    let entries = rows.iter().flatten().map(to_complex).collect::<Result<Vec<_>>>()?;
    Ok(CMatrix::from_row_slice(r, c, &entries))
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ShapeJson {
    pub m: usize,
    pub n: usize,
}

impl ShapeJson {
    pub fn to_shape(self) -> Result<AlgebraShape> {
        AlgebraShape::new(self.m, self.n)
    }
}

impl From<AlgebraShape> for ShapeJson {
    fn from(s: AlgebraShape) -> Self {
        ShapeJson { m: s.m, n: s.n }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockOperatorJson {
    pub shape: ShapeJson,
    pub blocks: Vec<MatrixJson>,
}

impl BlockOperatorJson {
    pub fn to_operator(&self) -> Result<BlockOperator> {
        let shape = self.shape.to_shape()?;
        let blocks = self.blocks.iter().map(matrix_from_json).collect::<Result<Vec<_>>>()?;
        BlockOperator::new(shape, blocks)
    }
}

impl From<&BlockOperator> for BlockOperatorJson {
    fn from(a: &BlockOperator) -> Self {
        BlockOperatorJson {
            shape: a.shape().into(),
            blocks: a.blocks().iter().map(matrix_json).collect(),
        }
    }
}

impl From<&BlockProjection> for BlockOperatorJson {
    fn from(p: &BlockProjection) -> Self {
        (&p.to_operator()).into()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CentralProjectionJson {
    pub support: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModuleVectorJson {
    pub blocks: Vec<Vec<ComplexJson>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuasipointJson {
    pub block: usize,
    pub ray: Vec<ComplexJson>,
}

impl QuasipointJson {
    pub fn to_quasipoint(&self, shape: AlgebraShape) -> Result<Quasipoint> {
        let v = vector_from_json(&self.ray)?;
        if v.len() != shape.n {
            return Err(Error::DimensionMismatch {
                expected: shape.n,
                found: v.len(),
            });
        }
        Quasipoint::new(shape, self.block, &v)
    }
}

impl From<&Quasipoint> for QuasipointJson {
    fn from(q: &Quasipoint) -> Self {
        QuasipointJson {
            block: q.block(),
            ray: vector_json(q.ray()),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FilterBaseJson {
    pub projections: Vec<BlockOperatorJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LatticeJson {
    pub elements: Vec<String>,
    pub leq: Vec<Vec<bool>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MasaJson {
    pub bases: Vec<MatrixJson>,
}

pub fn parse_operator(text: &str) -> Result<BlockOperator> {
    from_json::<BlockOperatorJson>(text)?.to_operator()
}

pub fn parse_block_projection(text: &str, tol: &Tolerances) -> Result<BlockProjection> {
    BlockProjection::new(&parse_operator(text)?, tol.tol)
}

pub fn parse_central_projection(text: &str, m: usize) -> Result<CentralProjection> {
    CentralProjection::from_support(m, from_json::<CentralProjectionJson>(text)?.support)
}

/// Module vectors carry their shape implicitly: `m` blocks of length `n`.
pub fn parse_module_vector(text: &str) -> Result<ModuleVector> {
    let dto: ModuleVectorJson = from_json(text)?;
    let n = dto.blocks.first().map_or(0, Vec::len);
    let shape = AlgebraShape::new(dto.blocks.len(), n)?;
    let blocks = dto.blocks.iter().map(|b| vector_from_json(b)).collect::<Result<Vec<_>>>()?;
    ModuleVector::new(shape, blocks)
}

/// Accepts one quasipoint object or an array of them.
pub fn parse_quasipoints(text: &str, shape: AlgebraShape) -> Result<Vec<Quasipoint>> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(QuasipointJson),
        Many(Vec<QuasipointJson>),
    }
    let dtos = match from_json::<OneOrMany>(text)? {
        OneOrMany::One(q) => vec![q],
        OneOrMany::Many(qs) => qs,
    };
    dtos.iter().map(|q| q.to_quasipoint(shape)).collect()
}

pub fn parse_filter_base(text: &str, shape: AlgebraShape, tol: &Tolerances) -> Result<FilterBase> {
    let dto: FilterBaseJson = from_json(text)?;
    let projections = dto
        .projections
        .iter()
        .map(|p| BlockProjection::new(&p.to_operator()?, tol.tol))
        .collect::<Result<Vec<_>>>()?;
    FilterBase::new(shape, projections)
}

pub fn parse_lattice_json(text: &str) -> Result<LatticeJson> {
    from_json(text)
}

pub fn lattice_from_json(dto: LatticeJson) -> Result<FiniteLattice> {
    FiniteLattice::from_order(dto.elements, dto.leq)
}

pub fn lattice_json(l: &FiniteLattice) -> LatticeJson {
    LatticeJson {
        elements: l.labels().to_vec(),
        leq: l.order().to_vec(),
    }
}

/// MASAs carry their shape implicitly: `m` unitaries of size `n`.
pub fn parse_masa(text: &str, tol: &Tolerances) -> Result<Masa> {
    let dto: MasaJson = from_json(text)?;
    let bases = dto.bases.iter().map(matrix_from_json).collect::<Result<Vec<_>>>()?;
    let n = bases.first().map_or(0, CMatrix::nrows);
    Masa::new(AlgebraShape::new(bases.len(), n)?, bases, tol)
}

pub fn masa_json(m: &Masa) -> MasaJson {
    MasaJson {
        bases: m.bases().iter().map(matrix_json).collect(),
    }
}

/// Witness JSON with the stored membership flags and an independent re-check.
pub fn witness_json(w: &PrimenessWitness, tol: &Tolerances) -> Result<Value> {
    let projections: Vec<BlockOperatorJson> = w.projections.iter().map(Into::into).collect();
    Ok(serde_json::json!({
        "kind": "join-prime-violation",
        "shape": ShapeJson::from(w.quasipoint.shape()),
        "quasipoint": QuasipointJson::from(&w.quasipoint),
        "projections": projections,
        "join": BlockOperatorJson::from(&w.join),
        "join_in": w.join_in,
        "members_in": w.members_in,
        "verified": w.verified(),
        "recheck": w.recheck(tol)?,
    }))
}

pub fn e_vector_json(r: &EVectorReport) -> Value {
    let atoms: Vec<Value> = r
        .atoms
        .iter()
        .map(|a| {
            serde_json::json!({
                "block": a.block,
                "sum_is_identity": a.sum_is_identity,
                "join_in": a.join_in,
                "members_in": a.members_in,
                "phase_recovered": a.phase_recovered,
                "certified": a.certified(),
            })
        })
        .collect();
    serde_json::json!({
        "kind": "e-vector",
        "shape": ShapeJson::from(r.shape),
        "atoms": atoms,
        "certified": r.certified(),
    })
}

pub fn observable_rows_json(rows: &[ObservableRow]) -> Value {
    let rows: Vec<Value> = rows
        .iter()
        .map(|r| serde_json::json!({"block": r.block, "ray": vector_json(&r.ray), "value": r.value}))
        .collect();
    Value::Array(rows)
}

/// CSV with header `block,ray,value`; the ray column holds the JSON-encoded vector.
pub fn write_observable_csv<W: Write>(rows: &[ObservableRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| invalid(format!("csv write failed: {e}"));
    w.write_record(["block", "ray", "value"]).map_err(io)?;
    for r in rows {
        let ray = serde_json::to_string(&vector_json(&r.ray)).expect("finite floats serialize");
        w.write_record([r.block.to_string(), ray, r.value.to_string()]).map_err(io)?;
    }
    w.flush().map_err(|e| invalid(format!("csv write failed: {e}")))?;
    Ok(())
}

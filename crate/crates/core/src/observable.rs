//! Spectral families of self-adjoint block operators and the observable function
//! `f_A(𝔅) = inf{λ : E_λ ∈ 𝔅}`.

use crate::algebra::{ensure_shape, AlgebraShape, BlockOperator, BlockProjection};
use crate::error::Result;
use crate::matrix::{hermitian_spectral, CVector, Projection, Tolerances};
use crate::spectrum::{qp_contains, Quasipoint};

/// Spectral data of one block: distinct eigenvalues, eigenprojections and
/// cumulative projections `E_{λ_j} = Σ_{i ≤ j} Π_{λ_i}`.
#[derive(Debug, Clone)]
pub struct BlockSpectrum {
    pub eigenvalues: Vec<f64>,
    pub components: Vec<Projection>,
    pub cumulative: Vec<Projection>,
}

impl BlockSpectrum {
    /// `E_λ` for arbitrary real `λ`.
    pub fn at(&self, lambda: f64) -> Projection {
        let n = self.components[0].dim();
        match self.eigenvalues.iter().rposition(|&mu| mu <= lambda) {
            Some(j) => self.cumulative[j].clone(),
            None => Projection::zero(n),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpectralFamily {
    shape: AlgebraShape,
    blocks: Vec<BlockSpectrum>,
}

impl SpectralFamily {
    pub fn shape(&self) -> AlgebraShape {
        self.shape
    }

    pub fn block(&self, k: usize) -> &BlockSpectrum {
        &self.blocks[k]
    }

    pub fn blocks(&self) -> &[BlockSpectrum] {
        &self.blocks
    }

    /// Blockwise `E_λ`.
    pub fn at(&self, lambda: f64) -> BlockProjection {
        BlockProjection::from_fn(self.shape, |k| self.blocks[k].at(lambda))
    }

    /// Cumulative projection at jump `j` of block `k`, padded with `I` on the other blocks.
    pub fn padded_jump(&self, k: usize, j: usize) -> BlockProjection {
        BlockProjection::padded(self.shape, k, self.blocks[k].cumulative[j].clone(), true)
    }

    /// Monotonicity, `E_{λ_r} = I` and idempotence of every cumulative projection.
    pub fn check(&self, tol: &Tolerances) -> bool {
        self.blocks.iter().all(|b| {
            let monotone = b
                .cumulative
                .windows(2)
                .all(|w| crate::matrix::project_leq(&w[0], &w[1], tol).unwrap_or(false));
            let top = b.cumulative.last().is_some_and(|e| e.is_identity(tol.meet_tol));
            let idempotent = b.cumulative.iter().all(|e| Projection::new(e.matrix().clone(), tol.meet_tol).is_ok());
            monotone && top && idempotent
        })
    }
}

pub fn spectral_family(a: &BlockOperator, tol: &Tolerances) -> Result<SpectralFamily> {
    let blocks = a
        .blocks()
        .iter()
        .map(|b| {
            let es = hermitian_spectral(b, tol)?;
            let mut cumulative: Vec<Projection> = Vec::with_capacity(es.projections.len());
            for p in &es.projections {
                let next = match cumulative.last() {
                    Some(prev) => Projection::trusted(prev.matrix() + p.matrix()),
                    None => p.clone(),
                };
                cumulative.push(next);
            }
            Ok(BlockSpectrum {
                eigenvalues: es.eigenvalues,
                components: es.projections,
                cumulative,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectralFamily { shape: a.shape(), blocks })
}

/// Smallest jump `λ` of block `i` with `E_λ ∈ 𝔅`.
pub fn observable_value_in(family: &SpectralFamily, q: &Quasipoint, tol: &Tolerances) -> Result<f64> {
    ensure_shape(family.shape(), q.shape())?;
    let i = q.block();
    let spectrum = family.block(i);
    for (j, &lambda) in spectrum.eigenvalues.iter().enumerate() {
        if qp_contains(q, &family.padded_jump(i, j), tol)? {
            return Ok(lambda);
        }
    }
    Ok(*spectrum.eigenvalues.last().expect("nonempty spectrum"))
}

pub fn observable_value(a: &BlockOperator, q: &Quasipoint, tol: &Tolerances) -> Result<f64> {
    ensure_shape(a.shape(), q.shape())?;
    observable_value_in(&spectral_family(a, tol)?, q, tol)
}

/// `max{μ ∈ spec(A_i) : ‖Π_μ v‖ > comp_tol}`.
pub fn max_component_value(a: &BlockOperator, q: &Quasipoint, tol: &Tolerances) -> Result<f64> {
    ensure_shape(a.shape(), q.shape())?;
    let es = hermitian_spectral(a.block(q.block()), tol)?;
    let value = es
        .eigenvalues
        .iter()
        .zip(&es.projections)
        .filter(|(_, p)| (p.matrix() * q.ray()).norm() > tol.comp_tol)
        .map(|(mu, _)| *mu)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(value)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservableRow {
    pub block: usize,
    pub ray: CVector,
    pub value: f64,
}

/// One row per quasipoint, in input order.
pub fn observable_table(a: &BlockOperator, quasipoints: &[Quasipoint], tol: &Tolerances) -> Result<Vec<ObservableRow>> {
    let family = spectral_family(a, tol)?;
    quasipoints
        .iter()
        .map(|q| {
            Ok(ObservableRow {
                block: q.block(),
                ray: q.ray().clone(),
                value: observable_value_in(&family, q, tol)?,
            })
        })
        .collect()
}

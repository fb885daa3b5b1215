//! Seeded, splittable random generation of vectors, projections and unitaries.
//!
//! A [`SeedStream`] names a ChaCha keystream by `(seed, stream)`. Splitting by
//! name hashes the name into a new stream id, so substreams are independent of
//! the order in which they are consumed.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matrix::{CMatrix, CVector, Projection, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedStream {
    seed: u64,
    stream: u64,
}

fn fnv1a(bytes: &[u8], mut hash: u64) -> u64 {
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;

impl SeedStream {
    pub fn new(seed: u64) -> Self {
        SeedStream { seed, stream: 0 }
    }

    pub fn split(&self, name: &str) -> SeedStream {
        let h = fnv1a(&self.stream.to_le_bytes(), FNV_OFFSET);
        SeedStream {
            seed: self.seed,
            stream: fnv1a(name.as_bytes(), h),
        }
    }

    pub fn split_index(&self, index: u64) -> SeedStream {
        let h = fnv1a(&self.stream.to_le_bytes(), FNV_OFFSET);
        SeedStream {
            seed: self.seed,
            stream: fnv1a(&index.to_le_bytes(), fnv1a(b"#", h)),
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

pub fn gaussian_complex<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

pub fn gaussian_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CVector {
    CVector::from_fn(n, |_, _| gaussian_complex(rng))
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| gaussian_complex(rng))
}

/// Uniform on the unit sphere of `ℂⁿ`.
pub fn unit_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CVector {
    loop {
        let v = gaussian_vector(n, rng);
        let norm = v.norm();
        if norm > 1e-12 {
            return v.unscale(norm);
        }
    }
}

/// Haar-distributed unitary: QR of a Gaussian matrix with the phases of
/// `diag(R)` moved into `Q`.
pub fn unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    if n == 0 {
        return CMatrix::zeros(0, 0);
    }
    let qr = gaussian_matrix(n, n, rng).qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            let phase = d / d.norm();
            q.column_mut(j).iter_mut().for_each(|z| *z *= phase);
        }
    }
    q
}

/// Projection onto the span of the first `rank` columns of a random unitary.
pub fn projection<R: Rng + ?Sized>(n: usize, rank: usize, rng: &mut R) -> Result<Projection> {
    if rank > n {
        return Err(Error::BadRank { rank, dim: n });
    }
    if rank == 0 {
        return Ok(Projection::zero(n));
    }
    if rank == n {
        return Ok(Projection::identity(n));
    }
    let u = unitary(n, rng);
    Ok(Projection::onto_columns(&u.columns(0, rank).into_owned()))
}

/// Hermitian matrix `(X + X*)/2` with Gaussian `X`.
pub fn hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let x = gaussian_matrix(n, n, rng);
    (&x + x.adjoint()).scale(0.5)
}

pub fn random_unit_vector(n: usize, seed: u64) -> CVector {
    unit_vector(n, &mut SeedStream::new(seed).rng())
}

pub fn random_projection(n: usize, rank: usize, seed: u64) -> Result<Projection> {
    projection(n, rank, &mut SeedStream::new(seed).rng())
}

pub fn random_unitary(n: usize, seed: u64) -> CMatrix {
    unitary(n, &mut SeedStream::new(seed).rng())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{frobenius, identity, is_unitary, rank_of, Tolerances};

    #[test]
    fn deterministic_for_fixed_seed() {
        assert_eq!(random_unit_vector(4, 9), random_unit_vector(4, 9));
        assert_ne!(random_unit_vector(4, 9), random_unit_vector(4, 10));
        let s = SeedStream::new(3);
        assert_eq!(s.split("rank").rng().random::<u64>(), s.split("rank").rng().random::<u64>());
        assert_ne!(s.split("rank").rng().random::<u64>(), s.split("ks").rng().random::<u64>());
    }

    #[test]
    fn projection_edge_ranks() {
        assert!(random_projection(3, 0, 1).unwrap().is_zero(0.0));
        assert!(random_projection(3, 3, 1).unwrap().is_identity(0.0));
        assert_eq!(random_projection(3, 4, 1), Err(Error::BadRank { rank: 4, dim: 3 }));
    }

    #[test]
    fn generated_objects_satisfy_invariants() {
        let t = Tolerances::default();
        let u = random_unitary(2, 7);
        assert!(frobenius(&(u.adjoint() * &u - identity(2))) <= 1e-12);
        for seed in 0..20 {
            let n = 2 + (seed as usize % 4);
            let r = seed as usize % (n + 1);
            let p = random_projection(n, r, seed).unwrap();
            assert!(Projection::new(p.matrix().clone(), 1e-12).is_ok());
            assert_eq!(rank_of(&p, &t), r);
            assert!(is_unitary(&random_unitary(n, seed), 1e-12));
            assert!((random_unit_vector(n, seed).norm() - 1.0).abs() < 1e-12);
        }
    }
}

//! Seeded random inputs for scenario checks and property tests.
//!
//! Entries are drawn uniformly from `[-1, 1]` (real and imaginary parts
//! independently) with a ChaCha generator, so a seed fixes every object.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::integral::OperatorField;
use crate::measure::{Povm, SampleSpace};
use crate::operator::{Channel, Operator, State, C64};

pub type Rng64 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng64 {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A seed derived from a base seed and a path, stable across runs and
/// independent of construction order.
pub fn derive_seed(seed: u64, path: &str) -> u64 {
    let digest = Sha256::digest(format!("{seed}:{path}").as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

fn entry(rng: &mut Rng64) -> C64 {
    C64::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0))
}

pub fn random_matrix(rng: &mut Rng64, rows: usize, cols: usize) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |_, _| entry(rng))
}

pub fn random_operator(rng: &mut Rng64, dim: usize) -> Operator {
    Operator::new(random_matrix(rng, dim, dim)).expect("finite square matrix")
}

pub fn random_hermitian(rng: &mut Rng64, dim: usize) -> Operator {
    let a = random_operator(rng, dim);
    (&a + &a.adjoint()).scale_real(0.5)
}

/// `A A* / tr[A A*]` for a random `A`; full rank with probability one.
pub fn random_state(rng: &mut Rng64, dim: usize) -> State {
    let a = random_operator(rng, dim);
    let p = &a * &a.adjoint();
    let t = p.trace().re;
    State::new_unchecked(p.scale_real(1.0 / t))
}

/// A unitary from the QR decomposition of a random matrix, with the phases
/// of `R`'s diagonal absorbed.
pub fn random_unitary(rng: &mut Rng64, dim: usize) -> Operator {
    let (q, r) = random_matrix(rng, dim, dim).qr().unpack();
    let mut q = q;
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    Operator::new(q).expect("finite square matrix")
}

/// A channel with `kraus` Kraus operators of shape `rows x cols`, sliced
/// from a random isometry `C^cols → C^(kraus·rows)`.
pub fn random_channel(rng: &mut Rng64, rows: usize, cols: usize, kraus: usize) -> Channel {
    let tall = kraus * rows;
    assert!(tall >= cols, "need kraus·rows >= cols for an isometry");
    let (q, _) = random_matrix(rng, tall, cols).qr().unpack();
    let blocks = (0..kraus).map(|k| q.rows(k * rows, rows).into_owned()).collect();
    Channel::new(blocks, 1e-9).expect("isometry slices are complete")
}

/// `E_x = S^{-1/2} A_x S^{-1/2}` with random positive `A_x` and `S = Σ A_x`.
pub fn random_povm(rng: &mut Rng64, dim: usize, outcomes: usize) -> Povm {
    let parts: Vec<Operator> = (0..outcomes)
        .map(|_| {
            let b = random_operator(rng, dim);
            &b * &b.adjoint()
        })
        .collect();
    let mut sum = Operator::zeros(dim);
    for p in &parts {
        sum += p;
    }
    let (values, vectors) = sum.hermitian_eigen();
    let inv_sqrt = Operator::new(
        &vectors * DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            dim,
            values.iter().map(|v| C64::new(1.0 / v.sqrt(), 0.0)),
        )) * vectors.adjoint(),
    )
    .expect("finite matrix");
    let effects: Vec<Operator> = parts
        .iter()
        .map(|p| {
            let e = &(&inv_sqrt * p) * &inv_sqrt;
            (&e + &e.adjoint()).scale_real(0.5)
        })
        .collect();
    Povm::new(SampleSpace::indexed(outcomes), effects, 1e-8).expect("normalized by construction")
}

pub fn random_field(rng: &mut Rng64, points: usize, dim: usize) -> OperatorField {
    let values = (0..points).map(|_| random_operator(rng, dim)).collect();
    OperatorField::new(SampleSpace::indexed(points), values).expect("values share a dimension")
}

/// A probability vector with strictly positive entries.
pub fn random_distribution(rng: &mut Rng64, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..=1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / s).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_objects_are_valid() {
        let mut r = rng(7);
        let s = random_state(&mut r, 3);
        assert!(State::new(s.into_op(), 1e-10).is_ok());
        let u = random_unitary(&mut r, 4);
        assert!((&u.adjoint() * &u).distance(&Operator::identity(4)) < 1e-10);
        let ch = random_channel(&mut r, 2, 3, 3);
        assert_eq!((ch.heisenberg_input_dim(), ch.heisenberg_output_dim()), (2, 3));
        let e = random_povm(&mut r, 3, 5);
        assert_eq!(e.space().len(), 5);
    }

    #[test]
    fn seeds_are_reproducible() {
        let a = random_operator(&mut rng(derive_seed(1, "x")), 3);
        let b = random_operator(&mut rng(derive_seed(1, "x")), 3);
        let c = random_operator(&mut rng(derive_seed(1, "y")), 3);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}

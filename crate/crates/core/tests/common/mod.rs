//! Independent reference computations on raw matrices. Nothing here calls
//! into the crate's linear algebra; the tests compare the crate against
//! these.
#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64 as C;

pub type M = DMatrix<C>;

pub fn c(re: f64) -> C {
    C::new(re, 0.0)
}

pub fn kron(a: &M, b: &M) -> M {
    let (ar, ac, br, bc) = (a.nrows(), a.ncols(), b.nrows(), b.ncols());
    let mut out = M::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    out
}

pub fn dagger(a: &M) -> M {
    M::from_fn(a.ncols(), a.nrows(), |i, j| a[(j, i)].conj())
}

/// `tr[a b]` by explicit summation.
pub fn tr_prod(a: &M, b: &M) -> C {
    let mut s = C::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            s += a[(i, j)] * b[(j, i)];
        }
    }
    s
}

pub fn max_diff(a: &M, b: &M) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn projector(dim: usize, i: usize) -> M {
    M::from_fn(dim, dim, |r, s| if r == i && s == i { c(1.0) } else { c(0.0) })
}

/// `U|i> = |perm[i]>`.
pub fn perm_matrix(perm: &[usize]) -> M {
    let n = perm.len();
    M::from_fn(n, n, |r, s| if perm[s] == r { c(1.0) } else { c(0.0) })
}

/// Trace over the second factor of `C^d0 ⊗ C^d1`.
pub fn trace_second(a: &M, d0: usize, d1: usize) -> M {
    M::from_fn(d0, d0, |i, j| (0..d1).map(|k| a[(i * d1 + k, j * d1 + k)]).sum())
}

/// Trace over the first factor of `C^d0 ⊗ C^d1`.
pub fn trace_first(a: &M, d0: usize, d1: usize) -> M {
    M::from_fn(d1, d1, |i, j| (0..d0).map(|k| a[(k * d1 + i, k * d1 + j)]).sum())
}

/// `Σ_g U_g* a U_g ⊗ |g><g|`, the relativization against the ideal frame.
pub fn ideal_relativization(a: &M, unitaries: &[M]) -> M {
    let n = unitaries.len();
    let mut out = M::zeros(a.nrows() * n, a.ncols() * n);
    for (g, u) in unitaries.iter().enumerate() {
        out += kron(&(dagger(u) * a * u), &projector(n, g));
    }
    out
}

/// `Σ_g μ(g) U_g ρ U_g*`.
pub fn averaged_state(rho: &M, mu: &[f64], unitaries: &[M]) -> M {
    let mut out = M::zeros(rho.nrows(), rho.ncols());
    for (m, u) in mu.iter().zip(unitaries) {
        out += (u * rho * dagger(u)) * c(*m);
    }
    out
}

/// Permutation images of `x ↦ t + s x (mod n)` for the dihedral element
/// `(t, l)` with `s = (-1)^l`, indexed `t + n l`.
pub fn dihedral_point_perms(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for l in 0..2 {
        for t in 0..n {
            out.push((0..n).map(|x| if l == 0 { (t + x) % n } else { (t + n - x) % n }).collect());
        }
    }
    out
}

/// Composition `s ∘ t` of one-line permutations.
pub fn compose(s: &[usize], t: &[usize]) -> Vec<usize> {
    t.iter().map(|&i| s[i]).collect()
}

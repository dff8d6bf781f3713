//! Dense complex operators on finite-dimensional Hilbert spaces.
//!
//! [`Operator`] is the universal value type of the crate. [`State`] and
//! [`Effect`] wrap it with validated spectral invariants, and [`Channel`]
//! holds a Kraus representation usable in both the Heisenberg and the
//! Schrödinger picture.
//!
//! Tensor factors are always ordered (system, frame) and combined with the
//! row-major Kronecker convention: `(a ⊗ b)[i*db + k, j*db + l] = a[i,j] b[k,l]`.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Default tolerance for identity checks.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Default cap on the dimension of a tensor product.
pub const DEFAULT_DIM_CAP: usize = 4096;

/// Above this dimension spectral checks first try a Gershgorin bound.
const EIG_DIM_LIMIT: usize = 64;

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// A square complex matrix with finite entries.
#[derive(Clone, PartialEq)]
pub struct Operator(DMatrix<C64>);

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Operator({}x{}) {}", self.dim(), self.dim(), self.0)
    }
}

impl Operator {
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        if m.nrows() == 0 {
            return Err(Error::Empty);
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self(m))
    }

    /// Wraps a matrix without validation. Callers guarantee squareness.
    pub(crate) fn from_matrix_unchecked(m: DMatrix<C64>) -> Self {
        debug_assert_eq!(m.nrows(), m.ncols());
        Self(m)
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self(DMatrix::from_fn(dim, dim, f))
    }

    /// Builds an operator from a row-major list of real entries.
    pub fn from_real(dim: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        Self::new(DMatrix::from_fn(dim, dim, |i, j| c(entries[i * dim + j], 0.0)))
    }

    /// Builds an operator from a row-major list of complex entries.
    pub fn from_complex(dim: usize, entries: &[C64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        Self::new(DMatrix::from_fn(dim, dim, |i, j| entries[i * dim + j]))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, |i, j| if i == j { c(diag[i], 0.0) } else { C64::default() })
    }

    /// The matrix unit `|i><j|`.
    pub fn matrix_unit(dim: usize, i: usize, j: usize) -> Self {
        let mut m = DMatrix::zeros(dim, dim);
        m[(i, j)] = c(1.0, 0.0);
        Self(m)
    }

    /// The rank-one projector `|i><i|`.
    pub fn basis_projector(dim: usize, i: usize) -> Self {
        Self::matrix_unit(dim, i, i)
    }

    /// `|v><v|` for an (unnormalized) vector `v`.
    pub fn ket_bra(v: &[C64]) -> Self {
        let n = v.len();
        Self::from_fn(n, |i, j| v[i] * v[j].conj())
    }

    pub fn pauli_x() -> Self {
        Self::from_real(2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    pub fn pauli_y() -> Self {
        Self::from_complex(2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]).unwrap()
    }

    pub fn pauli_z() -> Self {
        Self::diagonal(&[1.0, -1.0])
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self(&self.0 * s)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self(&self.0 * c(s, 0.0))
    }

    /// Kronecker product without the dimension cap; see [`tensor`].
    pub fn kron(&self, other: &Operator) -> Self {
        Self(self.0.kronecker(&other.0))
    }

    /// Operator (spectral) norm.
    pub fn norm(&self) -> f64 {
        spectral_norm(&self.0)
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Spectral norm of `self - other`.
    pub fn distance(&self, other: &Operator) -> f64 {
        if self.dim() != other.dim() {
            return f64::INFINITY;
        }
        spectral_norm(&(&self.0 - &other.0))
    }

    pub fn hermitian_deviation(&self) -> f64 {
        (&self.0 - self.0.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    /// Eigenvalues of the Hermitian part `(A + A*)/2`, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let h = (&self.0 + self.0.adjoint()) * c(0.5, 0.0);
        let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    /// Spectral decomposition of the Hermitian part: eigenvalues and
    /// orthonormal eigenvectors (as columns).
    pub(crate) fn hermitian_eigen(&self) -> (Vec<f64>, DMatrix<C64>) {
        let h = (&self.0 + self.0.adjoint()) * c(0.5, 0.0);
        let eig = SymmetricEigen::new(h);
        (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
    }

    /// Spectral bounds of the Hermitian part. Large matrices are first tested
    /// against `[lo, hi]` with Gershgorin discs; if the discs fit, the disc
    /// hull is returned instead of the exact spectrum.
    pub fn spectral_bounds(&self, lo: f64, hi: f64) -> (f64, f64) {
        if self.dim() > EIG_DIM_LIMIT {
            let (glo, ghi) = self.gershgorin_bounds();
            if glo >= lo && ghi <= hi {
                return (glo, ghi);
            }
        }
        let ev = self.hermitian_eigenvalues();
        (ev[0], ev[ev.len() - 1])
    }

    fn gershgorin_bounds(&self) -> (f64, f64) {
        let n = self.dim();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let center = self.0[(i, i)].re;
            let radius: f64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| (0.5 * (self.0[(i, j)] + self.0[(j, i)].conj())).norm())
                .sum();
            lo = lo.min(center - radius);
            hi = hi.max(center + radius);
        }
        (lo, hi)
    }

    pub fn is_idempotent(&self, tol: f64) -> bool {
        self.idempotency_violation() <= tol
    }

    pub fn idempotency_violation(&self) -> f64 {
        spectral_norm(&(&self.0 * &self.0 - &self.0))
    }

    /// `U* A U` for a unitary `u`.
    pub fn conjugate_by(&self, u: &Operator) -> Self {
        Self(u.0.adjoint() * &self.0 * &u.0)
    }

    /// Vectorization in row-major order.
    pub fn to_vec(&self) -> Vec<C64> {
        let n = self.dim();
        (0..n * n).map(|k| self.0[(k / n, k % n)]).collect()
    }
}

pub(crate) fn spectral_norm(m: &DMatrix<C64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().iter().copied().fold(0.0, f64::max)
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        Operator(&self.0 + &rhs.0)
    }
}

impl Add for Operator {
    type Output = Operator;
    fn add(self, rhs: Operator) -> Operator {
        Operator(self.0 + rhs.0)
    }
}

impl AddAssign<&Operator> for Operator {
    fn add_assign(&mut self, rhs: &Operator) {
        self.0 += &rhs.0;
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        Operator(&self.0 - &rhs.0)
    }
}

impl Sub for Operator {
    type Output = Operator;
    fn sub(self, rhs: Operator) -> Operator {
        Operator(self.0 - rhs.0)
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        Operator(&self.0 * &rhs.0)
    }
}

impl Mul for Operator {
    type Output = Operator;
    fn mul(self, rhs: Operator) -> Operator {
        Operator(self.0 * rhs.0)
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        Operator(-&self.0)
    }
}

impl Neg for Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        Operator(-self.0)
    }
}

/// Kronecker product `a ⊗ b`, refusing results larger than [`DEFAULT_DIM_CAP`].
pub fn tensor(a: &Operator, b: &Operator) -> Result<Operator> {
    tensor_capped(a, b, DEFAULT_DIM_CAP)
}

pub fn tensor_capped(a: &Operator, b: &Operator, cap: usize) -> Result<Operator> {
    let dim = a
        .dim()
        .checked_mul(b.dim())
        .ok_or(Error::DimensionCap { dim: usize::MAX, cap })?;
    if dim > cap {
        return Err(Error::DimensionCap { dim, cap });
    }
    Ok(a.kron(b))
}

/// Which tensor factor to trace out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    First,
    Second,
}

/// Partial trace of an operator on `C^d0 ⊗ C^d1` over the named factor.
pub fn partial_trace(a: &Operator, which: Subsystem, dims: (usize, usize)) -> Result<Operator> {
    let (d0, d1) = dims;
    if d0 == 0 || d1 == 0 || d0 * d1 != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: d0 * d1,
            found: a.dim(),
        });
    }
    let m = a.matrix();
    Ok(match which {
        Subsystem::Second => Operator::from_fn(d0, |i, j| {
            (0..d1).map(|k| m[(i * d1 + k, j * d1 + k)]).sum()
        }),
        Subsystem::First => Operator::from_fn(d1, |k, l| {
            (0..d0).map(|i| m[(i * d1 + k, i * d1 + l)]).sum()
        }),
    })
}

fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        Err(Error::DimensionMismatch { expected, found })
    } else {
        Ok(())
    }
}

/// Born functional `tr[ρ a]`.
pub fn expect(rho: &State, a: &Operator) -> Result<C64> {
    check_dims(rho.dim(), a.dim())?;
    Ok(trace_product(rho.op(), a))
}

/// `tr[a b]` without forming the product.
pub(crate) fn trace_product(a: &Operator, b: &Operator) -> C64 {
    let n = a.dim();
    let (ma, mb) = (a.matrix(), b.matrix());
    let mut acc = C64::default();
    for i in 0..n {
        for k in 0..n {
            acc += ma[(i, k)] * mb[(k, i)];
        }
    }
    acc
}

/// A density operator.
#[derive(Clone, Debug, PartialEq)]
pub struct State(Operator);

impl State {
    pub fn new(op: Operator, tol: f64) -> Result<Self> {
        let deviation = op.hermitian_deviation();
        if deviation > tol {
            return Err(Error::NotHermitian { deviation });
        }
        let trace = op.trace();
        if (trace.re - 1.0).abs() > tol || trace.im.abs() > tol {
            return Err(Error::TraceNotOne { trace: trace.re });
        }
        let (min, _) = op.spectral_bounds(-tol, f64::INFINITY);
        if min < -tol {
            return Err(Error::NotPositive { min_eigenvalue: min });
        }
        Ok(Self(op))
    }

    /// Skips validation; for intermediates known to be states.
    pub fn new_unchecked(op: Operator) -> Self {
        Self(op)
    }

    /// The pure state of a (normalized on the fly) vector.
    pub fn pure(amplitudes: &[C64]) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if amplitudes.is_empty() || norm == 0.0 || !norm.is_finite() {
            return Err(Error::Empty);
        }
        let v: Vec<C64> = amplitudes.iter().map(|z| z / norm).collect();
        Ok(Self(Operator::ket_bra(&v)))
    }

    pub fn basis(dim: usize, i: usize) -> Self {
        Self(Operator::basis_projector(dim, i))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(Operator::identity(dim).scale_real(1.0 / dim as f64))
    }

    /// Diagonal state `diag(p)`; `p` must be a probability vector.
    pub fn diagonal(p: &[f64], tol: f64) -> Result<Self> {
        Self::new(Operator::diagonal(p), tol)
    }

    /// `λ a + (1 - λ) b`.
    pub fn mix(lambda: f64, a: &State, b: &State) -> Result<Self> {
        check_dims(a.dim(), b.dim())?;
        Ok(Self(&a.0.scale_real(lambda) + &b.0.scale_real(1.0 - lambda)))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn op(&self) -> &Operator {
        &self.0
    }

    pub fn into_op(self) -> Operator {
        self.0
    }

    pub fn tensor(&self, other: &State) -> Result<State> {
        Ok(State(tensor(&self.0, &other.0)?))
    }
}

/// A positive operator bounded by the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct Effect(Operator);

impl Effect {
    pub fn new(op: Operator, tol: f64) -> Result<Self> {
        let deviation = op.hermitian_deviation();
        if deviation > tol {
            return Err(Error::NotHermitian { deviation });
        }
        let (min, max) = op.spectral_bounds(-tol, 1.0 + tol);
        if min < -tol || max > 1.0 + tol {
            return Err(Error::EffectOutOfRange { min, max });
        }
        Ok(Self(op))
    }

    pub fn new_unchecked(op: Operator) -> Self {
        Self(op)
    }

    pub fn op(&self) -> &Operator {
        &self.0
    }

    pub fn into_op(self) -> Operator {
        self.0
    }
}

/// A completely positive, trace-preserving map in Kraus form.
///
/// Each Kraus operator is a `rows x cols` matrix. In the Schrödinger picture
/// the channel sends states on `C^cols` to states on `C^rows`; its
/// Heisenberg dual sends operators on `C^rows` to operators on `C^cols`.
/// A frame channel `ψ: B(H_R) → B(H_R')` is thus stored with `rows = dim H_R`
/// and `cols = dim H_R'`.
#[derive(Clone, Debug, PartialEq)]
pub struct Channel {
    kraus: Vec<DMatrix<C64>>,
}

impl Channel {
    pub fn new(kraus: Vec<DMatrix<C64>>, tol: f64) -> Result<Self> {
        let first = kraus.first().ok_or(Error::Empty)?;
        let (rows, cols) = first.shape();
        if rows == 0 || cols == 0 {
            return Err(Error::Empty);
        }
        for k in &kraus {
            if k.shape() != (rows, cols) {
                return Err(Error::DimensionMismatch {
                    expected: rows * cols,
                    found: k.nrows() * k.ncols(),
                });
            }
            if k.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::NonFinite);
            }
        }
        let mut sum = DMatrix::<C64>::zeros(cols, cols);
        for k in &kraus {
            sum += k.adjoint() * k;
        }
        let deviation = spectral_norm(&(sum - DMatrix::identity(cols, cols)));
        if deviation > tol {
            return Err(Error::NotTracePreserving { deviation });
        }
        Ok(Self { kraus })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            kraus: vec![DMatrix::identity(dim, dim)],
        }
    }

    /// Heisenberg action `a ↦ U* a U`.
    pub fn unitary(u: &Operator, tol: f64) -> Result<Self> {
        let deviation = (u.adjoint() * u.clone()).distance(&Operator::identity(u.dim()));
        if deviation > tol {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Self {
            kraus: vec![u.matrix().clone()],
        })
    }

    /// Heisenberg action `a ↦ Σ w_i U_i* a U_i` for probability weights `w`.
    pub fn mixed_unitary(weights: &[f64], unitaries: &[Operator], tol: f64) -> Result<Self> {
        if weights.len() != unitaries.len() {
            return Err(Error::DimensionMismatch {
                expected: weights.len(),
                found: unitaries.len(),
            });
        }
        if weights.iter().any(|&w| w < 0.0) {
            return Err(Error::Precondition("negative mixing weight".into()));
        }
        let kraus = weights
            .iter()
            .zip(unitaries)
            .filter(|(w, _)| **w > 0.0)
            .map(|(w, u)| u.matrix() * c(w.sqrt(), 0.0))
            .collect();
        Self::new(kraus, tol)
    }

    /// The completely depolarizing channel `ρ ↦ tr[ρ] I/d`, written with the
    /// `d²` Weyl operators `X^a Z^b / d` as Kraus set.
    pub fn completely_depolarizing(dim: usize) -> Self {
        let d = dim as f64;
        let omega = |k: usize| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / d;
            c(t.cos(), t.sin())
        };
        let mut kraus = Vec::with_capacity(dim * dim);
        for a in 0..dim {
            for b in 0..dim {
                // X^a Z^b |j> = ω^{bj} |j + a>
                let m = DMatrix::from_fn(dim, dim, |i, j| {
                    if i == (j + a) % dim {
                        omega((b * j) % dim) / d
                    } else {
                        C64::default()
                    }
                });
                kraus.push(m);
            }
        }
        Self { kraus }
    }

    /// Trace-and-replace: in the Schrödinger picture `ρ ↦ tr[ρ] σ`, where `ρ`
    /// lives on `C^in_dim`.
    pub fn replace(sigma: &State, in_dim: usize) -> Self {
        let (values, vectors) = sigma.op().hermitian_eigen();
        let out = sigma.dim();
        let mut kraus = Vec::new();
        for (k, &lam) in values.iter().enumerate() {
            if lam <= 0.0 {
                continue;
            }
            let s = lam.sqrt();
            for j in 0..in_dim {
                kraus.push(DMatrix::from_fn(out, in_dim, |r, col| {
                    if col == j {
                        vectors[(r, k)] * s
                    } else {
                        C64::default()
                    }
                }));
            }
        }
        Self { kraus }
    }

    /// `id_S ⊗ ψ` for a system of dimension `sys_dim`.
    pub fn extend_left(&self, sys_dim: usize) -> Self {
        let id = DMatrix::<C64>::identity(sys_dim, sys_dim);
        Self {
            kraus: self.kraus.iter().map(|k| id.kronecker(k)).collect(),
        }
    }

    pub fn kraus(&self) -> &[DMatrix<C64>] {
        &self.kraus
    }

    /// Dimension of the operators the Heisenberg map accepts.
    pub fn heisenberg_input_dim(&self) -> usize {
        self.kraus[0].nrows()
    }

    /// Dimension of the operators the Heisenberg map returns.
    pub fn heisenberg_output_dim(&self) -> usize {
        self.kraus[0].ncols()
    }

    /// Heisenberg picture: `Σ K* a K`.
    pub fn heisenberg(&self, a: &Operator) -> Result<Operator> {
        check_dims(self.heisenberg_input_dim(), a.dim())?;
        let n = self.heisenberg_output_dim();
        let mut out = DMatrix::<C64>::zeros(n, n);
        for k in &self.kraus {
            out += k.adjoint() * a.matrix() * k;
        }
        Ok(Operator::from_matrix_unchecked(out))
    }

    /// Schrödinger picture on arbitrary operators: `Σ K ρ K*`.
    pub fn schrodinger_op(&self, rho: &Operator) -> Result<Operator> {
        check_dims(self.heisenberg_output_dim(), rho.dim())?;
        let n = self.heisenberg_input_dim();
        let mut out = DMatrix::<C64>::zeros(n, n);
        for k in &self.kraus {
            out += k * rho.matrix() * k.adjoint();
        }
        Ok(Operator::from_matrix_unchecked(out))
    }

    pub fn schrodinger(&self, rho: &State) -> Result<State> {
        Ok(State::new_unchecked(self.schrodinger_op(rho.op())?))
    }
}

/// Heisenberg action of `psi` on `a`.
pub fn apply_channel_heisenberg(psi: &Channel, a: &Operator) -> Result<Operator> {
    psi.heisenberg(a)
}

/// Schrödinger action of `psi` on `rho`.
pub fn apply_channel_schrodinger(psi: &Channel, rho: &State) -> Result<State> {
    psi.schrodinger(rho)
}

// JSON form: rows of entries, each entry either a real number or `[re, im]`.

#[derive(Deserialize)]
#[serde(untagged)]
enum EntryRepr {
    Real(f64),
    Pair([f64; 2]),
}

/// Parses a (possibly rectangular) matrix from its JSON form.
pub fn matrix_from_json(value: &serde_json::Value) -> std::result::Result<DMatrix<C64>, String> {
    let rows: Vec<Vec<EntryRepr>> =
        serde_json::from_value(value.clone()).map_err(|e| format!("bad matrix: {e}"))?;
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if nrows == 0 || ncols == 0 {
        return Err("empty matrix".into());
    }
    if rows.iter().any(|r| r.len() != ncols) {
        return Err("ragged matrix rows".into());
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| match rows[i][j] {
        EntryRepr::Real(x) => c(x, 0.0),
        EntryRepr::Pair([re, im]) => c(re, im),
    }))
}

/// Serializes a matrix as rows of `[re, im]` pairs.
pub fn matrix_to_json(m: &DMatrix<C64>) -> serde_json::Value {
    serde_json::Value::Array(
        (0..m.nrows())
            .map(|i| {
                serde_json::Value::Array(
                    (0..m.ncols())
                        .map(|j| serde_json::json!([m[(i, j)].re, m[(i, j)].im]))
                        .collect(),
                )
            })
            .collect(),
    )
}

impl Serialize for Operator {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        matrix_to_json(&self.0).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Operator {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        let m = matrix_from_json(&v).map_err(D::Error::custom)?;
        Operator::new(m).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &Operator, b: &Operator) -> bool {
        a.distance(b) <= 1e-12
    }

    #[test]
    fn tensor_identity_and_diagonal() {
        let i2 = Operator::identity(2);
        assert_eq!(tensor(&i2, &i2).unwrap(), Operator::identity(4));
        let zz = tensor(&Operator::pauli_z(), &Operator::pauli_z()).unwrap();
        assert_eq!(zz, Operator::diagonal(&[1.0, -1.0, -1.0, 1.0]));
    }

    #[test]
    fn tensor_x_with_projector() {
        let t = tensor(&Operator::pauli_x(), &Operator::basis_projector(2, 0)).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expected = if (i, j) == (2, 0) || (i, j) == (0, 2) { 1.0 } else { 0.0 };
                assert_eq!(t.get(i, j), c(expected, 0.0), "entry ({i},{j})");
            }
        }
    }

    #[test]
    fn tensor_cap_is_enforced() {
        let a = Operator::identity(65);
        assert!(matches!(
            tensor(&a, &a),
            Err(Error::DimensionCap { dim: 4225, cap: 4096 })
        ));
        assert!(tensor_capped(&a, &a, 5000).is_ok());
    }

    #[test]
    fn heisenberg_examples() {
        let z = Operator::pauli_z();
        assert_eq!(Channel::identity(2).heisenberg(&z).unwrap(), z);
        let dep = Channel::completely_depolarizing(2);
        assert!(dep.heisenberg(&z).unwrap().max_abs() < 1e-14);
        let flip = Channel::unitary(&Operator::pauli_x(), 1e-12).unwrap();
        assert!(close(&flip.heisenberg(&z).unwrap(), &-&z));
    }

    #[test]
    fn schrodinger_examples() {
        let zero = State::basis(2, 0);
        assert_eq!(Channel::identity(2).schrodinger(&zero).unwrap(), zero);
        let flip = Channel::unitary(&Operator::pauli_x(), 1e-12).unwrap();
        assert!(close(flip.schrodinger(&zero).unwrap().op(), State::basis(2, 1).op()));
        let dep = Channel::completely_depolarizing(2);
        let plus = State::pure(&[c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        for rho in [&zero, &plus] {
            let out = dep.schrodinger(rho).unwrap();
            assert!(close(out.op(), State::maximally_mixed(2).op()));
        }
    }

    #[test]
    fn depolarizing_is_trace_preserving_in_higher_dims() {
        for d in 2..5 {
            let ch = Channel::completely_depolarizing(d);
            assert!(Channel::new(ch.kraus().to_vec(), 1e-12).is_ok());
            let out = ch.heisenberg(&Operator::identity(d)).unwrap();
            assert!(close(&out, &Operator::identity(d)));
        }
    }

    #[test]
    fn replace_channel_prepares_sigma() {
        let sigma = State::basis(2, 0);
        let ch = Channel::replace(&sigma, 3);
        assert!(Channel::new(ch.kraus().to_vec(), 1e-12).is_ok());
        let out = ch.schrodinger(&State::maximally_mixed(3)).unwrap();
        assert!(close(out.op(), sigma.op()));
        assert_eq!(ch.heisenberg_input_dim(), 2);
        assert_eq!(ch.heisenberg_output_dim(), 3);
    }

    #[test]
    fn expectation_examples() {
        let z = Operator::pauli_z();
        assert!(expect(&State::maximally_mixed(2), &z).unwrap().norm() < 1e-15);
        assert_eq!(expect(&State::basis(2, 0), &z).unwrap(), c(1.0, 0.0));
        let plus = State::pure(&[c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!((expect(&plus, &Operator::pauli_x()).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
        assert!(expect(&plus, &Operator::identity(3)).is_err());
    }

    #[test]
    fn partial_trace_examples() {
        let a = Operator::pauli_x();
        let b = Operator::diagonal(&[2.0, 3.0]);
        let ab = tensor(&a, &b).unwrap();
        assert!(close(
            &partial_trace(&ab, Subsystem::Second, (2, 2)).unwrap(),
            &a.scale_real(5.0)
        ));
        assert!(close(
            &partial_trace(&ab, Subsystem::First, (2, 2)).unwrap(),
            &b.scale_real(0.0)
        ));
        assert!(close(
            &partial_trace(&Operator::identity(4), Subsystem::Second, (2, 2)).unwrap(),
            &Operator::identity(2).scale_real(2.0)
        ));
        let s = 1.0 / 2f64.sqrt();
        let bell = State::pure(&[c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)]).unwrap();
        let reduced = partial_trace(bell.op(), Subsystem::Second, (2, 2)).unwrap();
        assert!(close(&reduced, State::maximally_mixed(2).op()));
        assert!(partial_trace(&Operator::identity(4), Subsystem::First, (3, 2)).is_err());
    }

    #[test]
    fn state_validation() {
        assert!(State::new(Operator::identity(2), 1e-10).is_err());
        assert!(matches!(
            State::new(Operator::diagonal(&[1.5, -0.5]), 1e-10),
            Err(Error::NotPositive { .. })
        ));
        assert!(matches!(
            State::new(Operator::pauli_x(), 1e-10),
            Err(Error::TraceNotOne { .. })
        ));
        let skew = Operator::from_real(2, &[0.5, 1.0, 0.0, 0.5]).unwrap();
        assert!(matches!(State::new(skew, 1e-10), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn effect_validation() {
        assert!(Effect::new(Operator::basis_projector(3, 1), 1e-10).is_ok());
        assert!(matches!(
            Effect::new(Operator::identity(2).scale_real(2.0), 1e-10),
            Err(Error::EffectOutOfRange { .. })
        ));
        assert!(Effect::new(Operator::pauli_z(), 1e-10).is_err());
    }

    #[test]
    fn large_effect_uses_gershgorin_shortcut() {
        let op = Operator::identity(80).scale_real(0.5);
        assert!(Effect::new(op, 1e-10).is_ok());
        let bad = Operator::diagonal(&[1.5; 70]);
        assert!(Effect::new(bad, 1e-10).is_err());
    }

    #[test]
    fn operator_rejects_bad_matrices() {
        assert!(matches!(
            Operator::new(DMatrix::zeros(2, 3)),
            Err(Error::NotSquare { .. })
        ));
        let mut m = DMatrix::<C64>::zeros(2, 2);
        m[(0, 1)] = c(f64::NAN, 0.0);
        assert_eq!(Operator::new(m), Err(Error::NonFinite));
    }

    #[test]
    fn channel_rejects_incomplete_kraus() {
        let k = DMatrix::<C64>::identity(2, 2) * c(0.5, 0.0);
        assert!(matches!(
            Channel::new(vec![k], 1e-10),
            Err(Error::NotTracePreserving { .. })
        ));
    }

    #[test]
    fn json_round_trip() {
        let y = Operator::pauli_y();
        let v = serde_json::to_value(&y).unwrap();
        assert_eq!(v, serde_json::json!([[[0.0, 0.0], [0.0, -1.0]], [[0.0, 1.0], [0.0, 0.0]]]));
        let back: Operator = serde_json::from_value(v).unwrap();
        assert_eq!(back, y);
        let short: Operator = serde_json::from_value(serde_json::json!([[1, 0], [0, -1]])).unwrap();
        assert_eq!(short, Operator::pauli_z());
    }
}

//! Linear difference operators on finite grids, lifted to operator-valued
//! fields.
//!
//! A scalar operator `T` acts on functions `U → C`. Its lift is fixed by
//! duality: `tr[ρ T̂(φ)(p)] = T(φ_ρ)(p)` with `φ_ρ(q) = tr[ρ φ(q)]`. Since
//! `T` is linear this is entrywise application, `T̂(φ)(p) = Σ_q T[p, q] φ(q)`;
//! [`lift_apply_by_duality`] rebuilds the same field from matrix-unit
//! functionals so the two readings can be compared.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::integral::OperatorField;
use crate::measure::{space_from_json, SampleSpace};
use crate::operator::{matrix_from_json, trace_product, Operator, State, C64};
use crate::symmetry::FiniteGroup;

/// A linear map on scalar functions over a finite grid.
#[derive(Clone, Debug, PartialEq)]
pub struct DifferenceOperator {
    grid: SampleSpace,
    matrix: DMatrix<C64>,
}

impl DifferenceOperator {
    pub fn new(grid: SampleSpace, matrix: DMatrix<C64>) -> Result<Self> {
        let n = grid.len();
        if matrix.shape() != (n, n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: matrix.nrows(),
            });
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { grid, matrix })
    }

    pub fn zero(grid: SampleSpace) -> Self {
        let n = grid.len();
        Self {
            grid,
            matrix: DMatrix::zeros(n, n),
        }
    }

    pub fn identity(grid: SampleSpace) -> Self {
        let n = grid.len();
        Self {
            grid,
            matrix: DMatrix::identity(n, n),
        }
    }

    /// `(Sf)(p) = f(p + k mod n)` on `Z_n`.
    pub fn shift(n: usize, k: usize) -> Self {
        let matrix = DMatrix::from_fn(n, n, |p, q| {
            if q == (p + k) % n {
                C64::new(1.0, 0.0)
            } else {
                C64::default()
            }
        });
        Self {
            grid: SampleSpace::indexed(n),
            matrix,
        }
    }

    /// Periodic forward difference `(Tf)(p) = f(p + 1) − f(p)` on `Z_n`.
    pub fn forward_difference(n: usize) -> Self {
        let s = Self::shift(n, 1);
        Self {
            matrix: s.matrix - DMatrix::identity(n, n),
            grid: s.grid,
        }
    }

    /// `S − e^{2πik/n} I`, whose kernel is spanned by `p ↦ e^{2πikp/n}`.
    pub fn mode_annihilator(n: usize, k: usize) -> Self {
        let s = Self::shift(n, 1);
        let t = 2.0 * PI * k as f64 / n as f64;
        let w = C64::new(t.cos(), t.sin());
        Self {
            matrix: s.matrix - DMatrix::identity(n, n) * w,
            grid: s.grid,
        }
    }

    pub fn grid(&self) -> &SampleSpace {
        &self.grid
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    /// Applies `T` to a scalar function.
    pub fn apply_scalar(&self, f: &[C64]) -> Result<Vec<C64>> {
        if f.len() != self.grid.len() {
            return Err(Error::DimensionMismatch {
                expected: self.grid.len(),
                found: f.len(),
            });
        }
        let v = &self.matrix * DVector::from_column_slice(f);
        Ok(v.iter().copied().collect())
    }

    /// Reads `{grid: [labels], matrix: [[...]]}`.
    pub fn from_json(value: &Value) -> Result<Self> {
        let grid = space_from_json(value.get("grid"))?;
        let m = value
            .get("matrix")
            .ok_or_else(|| Error::Precondition("difference operator needs a `matrix`".into()))?;
        Self::new(grid, matrix_from_json(m).map_err(Error::Precondition)?)
    }
}

fn check_grid(t: &DifferenceOperator, field: &OperatorField) -> Result<()> {
    if t.grid() != field.space() {
        return Err(Error::SpaceMismatch(format!(
            "operator grid has {} points, field space {}",
            t.grid().len(),
            field.space().len()
        )));
    }
    Ok(())
}

/// `T̂(φ)(p) = Σ_q T[p, q] φ(q)`.
pub fn lift_apply(t: &DifferenceOperator, field: &OperatorField) -> Result<OperatorField> {
    check_grid(t, field)?;
    let n = t.grid().len();
    let values = (0..n)
        .map(|p| {
            let mut acc = Operator::zeros(field.dim());
            for q in 0..n {
                let w = t.matrix[(p, q)];
                if w != C64::default() {
                    acc += &field.value(q).scale(w);
                }
            }
            acc
        })
        .collect();
    OperatorField::new(field.space().clone(), values)
}

/// Rebuilds `T̂(φ)` entry by entry: the `(i, j)` entry at `p` is
/// `T(q ↦ tr[|j><i| φ(q)])(p)`.
pub fn lift_apply_by_duality(t: &DifferenceOperator, field: &OperatorField) -> Result<OperatorField> {
    check_grid(t, field)?;
    let (n, d) = (t.grid().len(), field.dim());
    let mut out = vec![DMatrix::<C64>::zeros(d, d); n];
    for i in 0..d {
        for j in 0..d {
            let functional = Operator::matrix_unit(d, j, i);
            let scalar: Vec<C64> = field.values().iter().map(|v| trace_product(&functional, v)).collect();
            for (p, z) in t.apply_scalar(&scalar)?.into_iter().enumerate() {
                out[p][(i, j)] = z;
            }
        }
    }
    let values = out.into_iter().map(Operator::new).collect::<Result<_>>()?;
    OperatorField::new(field.space().clone(), values)
}

/// `max_p ‖T̂(φ)(p) − T̂_dual(φ)(p)‖` between the two readings of the lift.
pub fn duality_residual(t: &DifferenceOperator, field: &OperatorField) -> Result<f64> {
    let a = lift_apply(t, field)?;
    let b = lift_apply_by_duality(t, field)?;
    Ok(max_pointwise_distance(&a, &b))
}

/// `max_{ρ, p} |tr[ρ T̂(φ)(p)] − T(φ_ρ)(p)|` over the given states.
pub fn state_duality_residual(t: &DifferenceOperator, field: &OperatorField, states: &[State]) -> Result<f64> {
    let lifted = lift_apply(t, field)?;
    let mut worst = 0.0f64;
    for rho in states {
        let scalar = field.expectation(rho)?;
        let rhs = t.apply_scalar(&scalar)?;
        for (p, r) in rhs.iter().enumerate() {
            let lhs = crate::operator::expect(rho, lifted.value(p))?;
            worst = worst.max((lhs - r).norm());
        }
    }
    Ok(worst)
}

fn max_pointwise_distance(a: &OperatorField, b: &OperatorField) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| x.distance(y))
        .fold(0.0, f64::max)
}

/// `(member, max_p ‖T̂(φ)(p)‖)`.
pub fn kernel_membership(t: &DifferenceOperator, field: &OperatorField, tol: f64) -> Result<(bool, f64)> {
    let lifted = lift_apply(t, field)?;
    let residual = lifted.values().iter().map(Operator::norm).fold(0.0, f64::max);
    Ok((residual <= tol, residual))
}

/// Orthonormal basis of `ker T` from the singular value decomposition.
pub fn kernel_basis(t: &DifferenceOperator, tol: f64) -> Vec<DVector<C64>> {
    let svd = t.matrix.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    svd.singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s <= tol)
        .map(|(k, _)| v_t.row(k).adjoint())
        .collect()
}

/// A linear right action of a group on scalar functions over a grid:
/// `f.g = M_g f` with `M_{gh} = M_h M_g`.
#[derive(Clone, Debug)]
pub struct ScalarAction {
    group: Arc<FiniteGroup>,
    grid: SampleSpace,
    matrices: Vec<DMatrix<C64>>,
}

impl ScalarAction {
    pub fn new(group: Arc<FiniteGroup>, grid: SampleSpace, matrices: Vec<DMatrix<C64>>, tol: f64) -> Result<Self> {
        let n = grid.len();
        if matrices.len() != group.order() || matrices.iter().any(|m| m.shape() != (n, n)) {
            return Err(Error::DimensionMismatch {
                expected: group.order(),
                found: matrices.len(),
            });
        }
        let id = DMatrix::<C64>::identity(n, n);
        if crate::operator::spectral_norm(&(&matrices[group.identity()] - &id)) > tol {
            return Err(Error::NotHomomorphism("identity acts nontrivially".into()));
        }
        for g in group.elements() {
            for h in group.elements() {
                let lhs = &matrices[h] * &matrices[g];
                if crate::operator::spectral_norm(&(lhs - &matrices[group.mul(g, h)])) > tol {
                    return Err(Error::NotHomomorphism(format!(
                        "not a right action at ({g}, {h})"
                    )));
                }
            }
        }
        Ok(Self { group, grid, matrices })
    }

    /// `Z_n` acting on functions over `Z_n` by `(f.h)(p) = f(p + h)`.
    pub fn translations(n: usize) -> Self {
        let group = Arc::new(FiniteGroup::cyclic(n));
        let matrices = (0..n).map(|h| DifferenceOperator::shift(n, h).matrix).collect();
        Self {
            group,
            grid: SampleSpace::indexed(n),
            matrices,
        }
    }

    pub fn group(&self) -> &Arc<FiniteGroup> {
        &self.group
    }

    pub fn matrix(&self, g: usize) -> &DMatrix<C64> {
        &self.matrices[g]
    }

    /// Max over kernel basis vectors `v` and `g` of `‖T (v.g)‖`.
    pub fn kernel_preservation_violation(&self, t: &DifferenceOperator, tol: f64) -> f64 {
        let basis = kernel_basis(t, tol);
        let mut worst = 0.0f64;
        for m in &self.matrices {
            for v in &basis {
                worst = worst.max((&t.matrix * (m * v)).norm());
            }
        }
        worst
    }
}

/// `(φ.g)(p) = Σ_q M_g[p, q] φ(q)`, the lift of the scalar action, after
/// checking that the scalar action preserves `ker T`.
pub fn symmetry_action_on_solutions(
    action: &ScalarAction,
    t: &DifferenceOperator,
    field: &OperatorField,
    g: usize,
    tol: f64,
) -> Result<OperatorField> {
    action.group.check_element(g)?;
    if action.grid != *t.grid() {
        return Err(Error::SpaceMismatch("action and operator use different grids".into()));
    }
    let violation = action.kernel_preservation_violation(t, tol);
    if violation > tol {
        return Err(Error::Precondition(format!(
            "scalar action does not preserve the kernel (violation {violation:e})"
        )));
    }
    let as_operator = DifferenceOperator {
        grid: action.grid.clone(),
        matrix: action.matrices[g].clone(),
    };
    lift_apply(&as_operator, field)
}

/// Max over `g` of the kernel residual of `φ.g`.
pub fn lifted_kernel_preservation(
    action: &ScalarAction,
    t: &DifferenceOperator,
    field: &OperatorField,
    tol: f64,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for g in action.group.elements() {
        let moved = symmetry_action_on_solutions(action, t, field, g, tol)?;
        worst = worst.max(kernel_membership(t, &moved, tol)?.1);
    }
    Ok(worst)
}

/// The field `p ↦ e^{2πikp/n} a` on `Z_n`.
pub fn fourier_mode_field(n: usize, k: usize, a: &Operator) -> OperatorField {
    let values = (0..n)
        .map(|p| {
            let t = 2.0 * PI * (k * p) as f64 / n as f64;
            a.scale(C64::new(t.cos(), t.sin()))
        })
        .collect();
    OperatorField::new(SampleSpace::indexed(n), values).expect("values share a dimension")
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-12;

    fn a() -> Operator {
        Operator::from_real(2, &[1.0, 2.0, -1.0, 0.5]).unwrap()
    }

    #[test]
    fn trivial_lifts() {
        let grid = SampleSpace::indexed(4);
        let f = fourier_mode_field(4, 3, &a());
        let zero = lift_apply(&DifferenceOperator::zero(grid.clone()), &f).unwrap();
        assert!(zero.values().iter().all(|v| v.max_abs() == 0.0));
        let same = lift_apply(&DifferenceOperator::identity(grid), &f).unwrap();
        assert_eq!(same, f);
    }

    #[test]
    fn forward_difference_kernel() {
        let t = DifferenceOperator::forward_difference(4);
        let constant = OperatorField::constant(SampleSpace::indexed(4), a());
        assert_eq!(kernel_membership(&t, &constant, TOL).unwrap(), (true, 0.0));
        let alt = fourier_mode_field(4, 2, &a());
        let (member, residual) = kernel_membership(&t, &alt, TOL).unwrap();
        assert!(!member);
        assert!((residual - 2.0 * a().norm()).abs() < 1e-10);
    }

    #[test]
    fn mode_annihilator_kernel() {
        let t = DifferenceOperator::mode_annihilator(4, 1);
        let f = fourier_mode_field(4, 1, &a());
        assert!(f.value(1).distance(&a().scale(C64::new(0.0, 1.0))) < TOL);
        assert!(kernel_membership(&t, &f, 1e-10).unwrap().0);
        assert_eq!(kernel_basis(&t, 1e-10).len(), 1);
    }

    #[test]
    fn duality_agrees_with_entrywise() {
        let t = DifferenceOperator::mode_annihilator(5, 2);
        let f = OperatorField::new(
            SampleSpace::indexed(5),
            (0..5).map(|p| Operator::from_real(2, &[p as f64, 1.0, -2.0, 0.5 * p as f64]).unwrap()).collect(),
        )
        .unwrap();
        assert!(duality_residual(&t, &f).unwrap() < TOL);
        let states = [State::basis(2, 0), State::maximally_mixed(2)];
        assert!(state_duality_residual(&t, &f, &states).unwrap() < 1e-10);
    }

    #[test]
    fn translations_act_on_solutions() {
        let t = DifferenceOperator::mode_annihilator(4, 1);
        let action = ScalarAction::translations(4);
        let f = fourier_mode_field(4, 1, &a());
        let same = symmetry_action_on_solutions(&action, &t, &f, 0, 1e-10).unwrap();
        assert_eq!(same, f);
        let moved = symmetry_action_on_solutions(&action, &t, &f, 1, 1e-10).unwrap();
        for p in 0..4 {
            assert!(moved.value(p).distance(&f.value(p).scale(C64::new(0.0, 1.0))) < 1e-10);
        }
        assert!(lifted_kernel_preservation(&action, &t, &f, 1e-10).unwrap() < 1e-10);

        let constant = OperatorField::constant(SampleSpace::indexed(4), a());
        let d = DifferenceOperator::forward_difference(4);
        let shifted = symmetry_action_on_solutions(&action, &d, &constant, 3, 1e-10).unwrap();
        assert_eq!(shifted, constant);
    }

    #[test]
    fn kernel_breaking_action_rejected() {
        // a reflection p ↦ -p maps mode 1 to mode 3
        let z2 = Arc::new(FiniteGroup::cyclic(2));
        let refl = DMatrix::from_fn(4, 4, |p, q| {
            if q == (4 - p) % 4 {
                C64::new(1.0, 0.0)
            } else {
                C64::default()
            }
        });
        let action = ScalarAction::new(z2, SampleSpace::indexed(4), vec![DMatrix::identity(4, 4), refl], TOL).unwrap();
        let t = DifferenceOperator::mode_annihilator(4, 1);
        let f = fourier_mode_field(4, 1, &a());
        let err = symmetry_action_on_solutions(&action, &t, &f, 1, 1e-10);
        assert!(matches!(err, Err(Error::Precondition(_))));
    }
}

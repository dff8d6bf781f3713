//! Operator-valued integration against a POVM on a finite sample space.
//!
//! `∫ f ⊗ dE = Σ_x f(x) ⊗ E({x})` is the unique operator whose pairing with
//! product states reproduces `Σ_x tr[ρ f(x)] μ_ω(x)`. The checks here return
//! residual norms; callers compare them with their own tolerance.

use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::measure::{born_measure, compose_with_channel, ideal_povm, push_forward, space_from_json, Povm, SampleSpace};
use crate::operator::{matrix_from_json, matrix_to_json, partial_trace, tensor, trace_product, Channel, Operator, State, Subsystem, C64};

/// A map from sample points to operators of a common dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorField {
    space: SampleSpace,
    values: Vec<Operator>,
}

impl OperatorField {
    pub fn new(space: SampleSpace, values: Vec<Operator>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::DimensionMismatch {
                expected: space.len(),
                found: values.len(),
            });
        }
        let dim = values[0].dim();
        if let Some(v) = values.iter().find(|v| v.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: v.dim(),
            });
        }
        Ok(Self { space, values })
    }

    pub fn constant(space: SampleSpace, value: Operator) -> Self {
        let values = vec![value; space.len()];
        Self { space, values }
    }

    pub fn space(&self) -> &SampleSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.values[0].dim()
    }

    pub fn value(&self, x: usize) -> &Operator {
        &self.values[x]
    }

    pub fn values(&self) -> &[Operator] {
        &self.values
    }

    /// `f_ρ(x) = tr[ρ f(x)]`.
    pub fn expectation(&self, rho: &State) -> Result<Vec<C64>> {
        self.values.iter().map(|v| crate::operator::expect(rho, v)).collect()
    }

    /// `x ↦ f(φ(x))` for a point map into this field's space.
    pub fn pull_back(&self, domain: &SampleSpace, phi: &[usize]) -> Result<Self> {
        if phi.len() != domain.len() {
            return Err(Error::SpaceMismatch("map length differs from domain size".into()));
        }
        let values = phi
            .iter()
            .map(|&y| {
                self.space.check_point(y)?;
                Ok(self.values[y].clone())
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            space: domain.clone(),
            values,
        })
    }

    /// Pointwise `a f + b g`.
    pub fn linear_combination(&self, a: C64, other: &OperatorField, b: C64) -> Result<Self> {
        check_same_space(&self.space, &other.space)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(f, g)| f.scale(a) + g.scale(b))
            .collect();
        Ok(Self {
            space: self.space.clone(),
            values,
        })
    }

    pub fn to_json(&self) -> Value {
        let mut values = Map::new();
        for (l, v) in self.space.labels().iter().zip(&self.values) {
            values.insert(l.clone(), matrix_to_json(v.matrix()));
        }
        serde_json::json!({ "space": self.space.labels(), "values": values })
    }

    /// Reads `{space: [labels], values: {label: matrix}}`.
    pub fn from_json(value: &Value) -> Result<Self> {
        let space = space_from_json(value.get("space"))?;
        let map = value
            .get("values")
            .and_then(Value::as_object)
            .ok_or_else(|| Error::SampleSpace("field needs a `values` object".into()))?;
        let values = space
            .labels()
            .iter()
            .map(|l| {
                let m = map
                    .get(l)
                    .ok_or_else(|| Error::SampleSpace(format!("no value at point {l:?}")))?;
                Operator::new(matrix_from_json(m).map_err(Error::Precondition)?)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(space, values)
    }
}

fn check_same_space(a: &SampleSpace, b: &SampleSpace) -> Result<()> {
    if a != b {
        return Err(Error::SpaceMismatch(format!(
            "{} points vs {} points",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

/// `Σ_x f(x) ⊗ E({x})` on system ⊗ frame.
pub fn ov_integrate(f: &OperatorField, e: &Povm) -> Result<Operator> {
    check_same_space(f.space(), e.space())?;
    let mut acc = Operator::zeros(f.dim() * e.dim());
    for (v, eff) in f.values().iter().zip(e.effects()) {
        acc += &tensor(v, eff)?;
    }
    Ok(acc)
}

/// The right-hand side of the defining pairing,
/// `Σ_x tr[ρ f(x)] tr[ω E({x})]`, computed without forming the integral.
pub fn integral_pairing(f: &OperatorField, e: &Povm, rho: &State, omega: &State) -> Result<C64> {
    check_same_space(f.space(), e.space())?;
    let mu = born_measure(e, omega)?;
    let fr = f.expectation(rho)?;
    Ok(fr.iter().zip(&mu).map(|(a, m)| a * m).sum())
}

/// The same pairing for arbitrary (not necessarily positive) operators:
/// `Σ_x tr[a f(x)] tr[b E({x})]`. On matrix units this spans all functionals.
pub fn bilinear_pairing(f: &OperatorField, e: &Povm, a: &Operator, b: &Operator) -> Result<C64> {
    check_same_space(f.space(), e.space())?;
    Ok(f
        .values()
        .iter()
        .zip(e.effects())
        .map(|(v, eff)| trace_product(a, v) * trace_product(b, eff))
        .sum())
}

/// `|tr[(ρ ⊗ ω) ∫ f ⊗ dE] − Σ_x tr[ρ f(x)] μ_ω(x)|`.
pub fn pairing_residual(f: &OperatorField, e: &Povm, rho: &State, omega: &State) -> Result<f64> {
    let integral = ov_integrate(f, e)?;
    let lhs = trace_product(rho.tensor(omega)?.op(), &integral);
    Ok((lhs - integral_pairing(f, e, rho, omega)?).norm())
}

/// Max over all matrix-unit pairs `(|i><j|, |k><l|)` of the pairing residual.
pub fn matrix_unit_pairing_residual(f: &OperatorField, e: &Povm) -> Result<f64> {
    let integral = ov_integrate(f, e)?;
    let (ds, dr) = (f.dim(), e.dim());
    let mut worst = 0.0f64;
    for i in 0..ds {
        for j in 0..ds {
            let a = Operator::matrix_unit(ds, i, j);
            for k in 0..dr {
                for l in 0..dr {
                    let b = Operator::matrix_unit(dr, k, l);
                    let lhs = trace_product(&tensor(&a, &b)?, &integral);
                    let rhs = bilinear_pairing(f, e, &a, &b)?;
                    worst = worst.max((lhs - rhs).norm());
                }
            }
        }
    }
    Ok(worst)
}

/// `‖∫_Σ (f ∘ φ) ⊗ dE − ∫_{Σ'} f ⊗ d(E ∘ φ⁻¹)‖`.
pub fn change_of_variables_check(f: &OperatorField, phi: &[usize], e: &Povm) -> Result<f64> {
    let lhs = ov_integrate(&f.pull_back(e.space(), phi)?, e)?;
    let rhs = ov_integrate(f, &push_forward(e, f.space(), phi)?)?;
    Ok(lhs.distance(&rhs))
}

/// `‖∫ f ⊗ d(ψ ∘ E) − (id ⊗ ψ)(∫ f ⊗ dE)‖`.
pub fn channel_interchange_check(f: &OperatorField, e: &Povm, psi: &Channel) -> Result<f64> {
    let lhs = ov_integrate(f, &compose_with_channel(psi, e)?)?;
    let rhs = psi.extend_left(f.dim()).heisenberg(&ov_integrate(f, e)?)?;
    Ok(lhs.distance(&rhs))
}

/// Recovers `f` from `∫ f ⊗ dE_ideal` by `f(x) = tr_frame[(I ⊗ |x><x|) X]`.
pub fn reconstruct_from_ideal(integral: &Operator, space: &SampleSpace) -> Result<OperatorField> {
    let n = space.len();
    if integral.dim() % n != 0 {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: integral.dim(),
        });
    }
    let ds = integral.dim() / n;
    let values = (0..n)
        .map(|x| {
            let proj = tensor(&Operator::identity(ds), &Operator::basis_projector(n, x))?;
            partial_trace(&(&proj * integral), Subsystem::Second, (ds, n))
        })
        .collect::<Result<_>>()?;
    OperatorField::new(space.clone(), values)
}

/// Max pointwise distance between `f` and its reconstruction from the ideal
/// integral.
pub fn uniqueness_residual(f: &OperatorField) -> Result<f64> {
    let e = ideal_povm(f.space());
    let back = reconstruct_from_ideal(&ov_integrate(f, &e)?, f.space())?;
    Ok(f
        .values()
        .iter()
        .zip(back.values())
        .map(|(a, b)| a.distance(b))
        .fold(0.0, f64::max))
}

/// `max(0, ‖∫ f ⊗ dE‖ − |Σ| max_x ‖f(x)‖)`.
pub fn norm_bound_excess(f: &OperatorField, e: &Povm) -> Result<f64> {
    let bound = f.values().iter().map(Operator::norm).fold(0.0, f64::max) * f.space().len() as f64;
    Ok((ov_integrate(f, e)?.norm() - bound).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::c;
    use crate::symmetry::{FiniteGroup, UnitaryRep};
    use std::sync::Arc;

    const TOL: f64 = 1e-12;

    fn z2_field() -> OperatorField {
        let z = Operator::pauli_z();
        OperatorField::new(SampleSpace::indexed(2), vec![z.clone(), -&z]).unwrap()
    }

    fn projective() -> Povm {
        ideal_povm(&SampleSpace::indexed(2))
    }

    #[test]
    fn z2_integral_is_zz() {
        let got = ov_integrate(&z2_field(), &projective()).unwrap();
        let zz = Operator::pauli_z().kron(&Operator::pauli_z());
        assert!(got.distance(&zz) < TOL);
    }

    #[test]
    fn point_mass_and_constant_fields() {
        let space = SampleSpace::indexed(3);
        let e = Povm::new(
            space.clone(),
            vec![Operator::zeros(2), Operator::identity(2), Operator::zeros(2)],
            TOL,
        )
        .unwrap();
        let f = OperatorField::new(
            space.clone(),
            vec![Operator::pauli_x(), Operator::pauli_y(), Operator::pauli_z()],
        )
        .unwrap();
        let expected = Operator::pauli_y().kron(&Operator::identity(2));
        assert!(ov_integrate(&f, &e).unwrap().distance(&expected) < TOL);

        let a = Operator::from_real(2, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        let constant = OperatorField::constant(space.clone(), a.clone());
        let ideal = ideal_povm(&space);
        let expected = a.kron(&Operator::identity(3));
        assert!(ov_integrate(&constant, &ideal).unwrap().distance(&expected) < TOL);
    }

    #[test]
    fn pairing_matches_on_states_and_matrix_units() {
        let f = z2_field();
        let e = projective();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus = State::pure(&[c(s, 0.0), c(s, 0.0)]).unwrap();
        for omega in [State::basis(2, 0), plus.clone(), State::maximally_mixed(2)] {
            assert!(pairing_residual(&f, &e, &plus, &omega).unwrap() < TOL);
        }
        assert!(matrix_unit_pairing_residual(&f, &e).unwrap() < TOL);
    }

    #[test]
    fn change_of_variables_examples() {
        let e = projective();
        let f = z2_field();
        assert!(change_of_variables_check(&f, &[0, 1], &e).unwrap() < TOL);
        let target = SampleSpace::indexed(1);
        let g = OperatorField::constant(target, Operator::pauli_x());
        assert!(change_of_variables_check(&g, &[0, 0], &e).unwrap() < TOL);
    }

    #[test]
    fn channel_interchange_examples() {
        let f = z2_field();
        let e = projective();
        assert!(channel_interchange_check(&f, &e, &Channel::identity(2)).unwrap() < TOL);
        let h = Operator::from_real(2, &[1.0, 1.0, 1.0, -1.0]).unwrap().scale_real(0.5f64.sqrt());
        let u = Channel::unitary(&h, TOL).unwrap();
        assert!(channel_interchange_check(&f, &e, &u).unwrap() < TOL);
        let depol = Channel::completely_depolarizing(2);
        assert!(channel_interchange_check(&f, &e, &depol).unwrap() < TOL);
        let killed = ov_integrate(&f, &compose_with_channel(&depol, &e).unwrap()).unwrap();
        assert!(killed.max_abs() < TOL);
    }

    #[test]
    fn reconstruction_recovers_field() {
        let space = SampleSpace::indexed(3);
        let f = OperatorField::new(
            space,
            vec![Operator::pauli_x(), Operator::pauli_y(), Operator::diagonal(&[1.0, -2.0])],
        )
        .unwrap();
        assert!(uniqueness_residual(&f).unwrap() < TOL);
    }

    #[test]
    fn linear_in_field() {
        let g = Arc::new(FiniteGroup::cyclic(2));
        let e = crate::measure::compose_with_channel(
            &UnitaryRep::right_regular(g).partial_twirl(0.25, TOL).unwrap(),
            &projective(),
        )
        .unwrap();
        let f = z2_field();
        let h = OperatorField::new(SampleSpace::indexed(2), vec![Operator::pauli_x(), Operator::pauli_y()]).unwrap();
        let (a, b) = (c(0.5, 1.0), c(-2.0, 0.0));
        let lhs = ov_integrate(&f.linear_combination(a, &h, b).unwrap(), &e).unwrap();
        let rhs = ov_integrate(&f, &e).unwrap().scale(a) + ov_integrate(&h, &e).unwrap().scale(b);
        assert!(lhs.distance(&rhs) < TOL);
        assert_eq!(norm_bound_excess(&f, &e).unwrap(), 0.0);
    }

    #[test]
    fn mismatched_spaces_rejected() {
        let f = z2_field();
        let e = ideal_povm(&SampleSpace::indexed(3));
        assert!(matches!(ov_integrate(&f, &e), Err(Error::SpaceMismatch(_))));
    }

    #[test]
    fn json_round_trip() {
        let f = z2_field();
        assert_eq!(OperatorField::from_json(&f.to_json()).unwrap(), f);
    }
}

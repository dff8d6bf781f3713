//! Reference frames covariant under a finite group.
//!
//! A [`GroupFrame`] carries a POVM on the carrier of a group `G` that is
//! covariant under right translation by a subgroup `K ↪ G` (usually `K = G`).
//! Reduced frames, obtained by pushing a frame for a subgroup forward along
//! the inclusion, keep `K` as their covariance group.
//!
//! Relativization `a ↦ Σ_g (a.g) ⊗ E({g})` sends system operators into the
//! algebra invariant under the diagonal action of `K`; restriction along a
//! frame state `ω` then yields `Σ_g μ_ω(g) a.g`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::integral::{ov_integrate, OperatorField};
use crate::measure::{born_measure, check_covariance, compose_with_channel, ideal_povm, push_forward_inclusion, CovariantPovm, Povm, SampleSpace, SpaceAction};
use crate::operator::{partial_trace, tensor, Channel, Operator, State, Subsystem};
use crate::symmetry::{FiniteGroup, SemidirectProduct, SubgroupInclusion, Torsor, UnitaryRep};

/// A frame observable on the carrier of `group`, covariant under a subgroup.
#[derive(Clone, Debug)]
pub struct GroupFrame {
    group: Arc<FiniteGroup>,
    inclusion: SubgroupInclusion,
    observable: CovariantPovm,
}

impl GroupFrame {
    /// A frame covariant under the whole group.
    pub fn new(frame_rep: UnitaryRep, povm: Povm, tol: f64) -> Result<Self> {
        let inc = SubgroupInclusion::identity(frame_rep.group().clone());
        Self::with_covariance(inc, frame_rep, povm, tol)
    }

    /// A frame whose observable lives on `inc.parent()` but is only covariant
    /// under `inc.sub()`, which `frame_rep` represents.
    pub fn with_covariance(inc: SubgroupInclusion, frame_rep: UnitaryRep, povm: Povm, tol: f64) -> Result<Self> {
        let group = inc.parent().clone();
        if povm.space().len() != group.order() {
            return Err(Error::SpaceMismatch(format!(
                "frame POVM has {} outcomes, group has {} elements",
                povm.space().len(),
                group.order()
            )));
        }
        if **frame_rep.group() != **inc.sub() {
            return Err(Error::Precondition("frame rep is not a rep of the covariance group".into()));
        }
        let action = SpaceAction::right_translation(group.clone()).restrict(&inc)?;
        let observable = CovariantPovm::new_checked(povm, frame_rep, action, tol)?;
        Ok(Self {
            group,
            inclusion: inc,
            observable,
        })
    }

    /// The sharp frame on `C^|G|` with the right regular representation.
    pub fn ideal(group: Arc<FiniteGroup>) -> Self {
        Self {
            inclusion: SubgroupInclusion::identity(group.clone()),
            observable: CovariantPovm::ideal(group.clone()),
            group,
        }
    }

    pub fn group(&self) -> &Arc<FiniteGroup> {
        &self.group
    }

    /// The subgroup under which the observable is covariant.
    pub fn covariance(&self) -> &SubgroupInclusion {
        &self.inclusion
    }

    pub fn povm(&self) -> &Povm {
        self.observable.povm()
    }

    pub fn frame_rep(&self) -> &UnitaryRep {
        self.observable.rep()
    }

    pub fn observable(&self) -> &CovariantPovm {
        &self.observable
    }

    pub fn dim(&self) -> usize {
        self.povm().dim()
    }

    pub fn covariance_violation(&self) -> f64 {
        check_covariance(&self.observable)
    }

    /// `μ_ω(g) = tr[ω E({g})]`.
    pub fn measure(&self, omega: &State) -> Result<Vec<f64>> {
        born_measure(self.povm(), omega)
    }
}

/// The representation of `G` on the system.
#[derive(Clone, Debug)]
pub struct SystemAction {
    rep: UnitaryRep,
}

impl SystemAction {
    pub fn new(rep: UnitaryRep) -> Self {
        Self { rep }
    }

    pub fn rep(&self) -> &UnitaryRep {
        &self.rep
    }

    pub fn dim(&self) -> usize {
        self.rep.dim()
    }

    fn check(&self, frame: &GroupFrame) -> Result<()> {
        if **self.rep.group() != **frame.group() {
            return Err(Error::Precondition("system and frame use different groups".into()));
        }
        Ok(())
    }

    fn check_op(&self, a: &Operator) -> Result<()> {
        if a.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: a.dim(),
            });
        }
        Ok(())
    }
}

/// `Σ_g μ(g) g.ρ` for a probability vector over group elements.
pub fn average_state(rho: &State, mu: &[f64], sys: &SystemAction) -> Result<State> {
    let mut acc = Operator::zeros(rho.dim());
    for (g, &m) in mu.iter().enumerate() {
        if m != 0.0 {
            acc += &sys.rep.act_left(g, rho.op())?.scale_real(m);
        }
    }
    Ok(State::new_unchecked(acc))
}

/// `Σ_g μ(g) a.g`.
pub fn average_operator(a: &Operator, mu: &[f64], sys: &SystemAction) -> Result<Operator> {
    let mut acc = Operator::zeros(a.dim());
    for (g, &m) in mu.iter().enumerate() {
        if m != 0.0 {
            acc += &sys.rep.act_on_operator(a, g)?.scale_real(m);
        }
    }
    Ok(acc)
}

/// The state of the system relative to the frame prepared in `ω`:
/// `ρ^(ω) = Σ_g μ_ω(g) g.ρ`.
pub fn relative_state(rho: &State, omega: &State, frame: &GroupFrame, sys: &SystemAction) -> Result<State> {
    sys.check(frame)?;
    average_state(rho, &frame.measure(omega)?, sys)
}

/// The field `g ↦ a.g` on the group carrier.
pub fn orbit_field(a: &Operator, sys: &SystemAction) -> Result<OperatorField> {
    sys.check_op(a)?;
    let g = sys.rep.group();
    let values = g
        .elements()
        .map(|x| sys.rep.act_on_operator(a, x))
        .collect::<Result<_>>()?;
    OperatorField::new(SampleSpace::of_group(g), values)
}

/// `¥(a) = Σ_g (a.g) ⊗ E({g})` on system ⊗ frame.
pub fn relativize(a: &Operator, frame: &GroupFrame, sys: &SystemAction) -> Result<Operator> {
    sys.check(frame)?;
    let field = orbit_field(a, sys)?;
    let povm = Povm::new_unchecked(field.space().clone(), frame.povm().effects().cloned().collect());
    ov_integrate(&field, &povm)
}

/// `|tr[ρ^(ω) a] − tr[(ρ ⊗ ω) ¥(a)]|`.
pub fn duality_residual(rho: &State, omega: &State, a: &Operator, frame: &GroupFrame, sys: &SystemAction) -> Result<f64> {
    let lhs = crate::operator::expect(&relative_state(rho, omega, frame, sys)?, a)?;
    let rhs = crate::operator::expect(&rho.tensor(omega)?, &relativize(a, frame, sys)?)?;
    Ok((lhs - rhs).norm())
}

/// Max over `h` in the covariance group of
/// `|tr[(h.ρ ⊗ h.ω) ¥(a)] − tr[(ρ ⊗ ω) ¥(a)]|`.
pub fn orbit_residual(rho: &State, omega: &State, a: &Operator, frame: &GroupFrame, sys: &SystemAction) -> Result<f64> {
    let y = relativize(a, frame, sys)?;
    let base = crate::operator::expect(&rho.tensor(omega)?, &y)?;
    let inc = frame.covariance();
    let mut worst = 0.0f64;
    for h in inc.sub().elements() {
        let moved_rho = sys.rep.act_on_state(inc.embed(h), rho)?;
        let moved_omega = frame.frame_rep().act_on_state(h, omega)?;
        let v = crate::operator::expect(&moved_rho.tensor(&moved_omega)?, &y)?;
        worst = worst.max((v - base).norm());
    }
    Ok(worst)
}

/// Max over `h` in the covariance group of `‖¥(a).(h, h) − ¥(a)‖`.
pub fn invariance_residual(a: &Operator, frame: &GroupFrame, sys: &SystemAction) -> Result<f64> {
    let y = relativize(a, frame, sys)?;
    let diag = sys.rep.restrict(frame.covariance())?.tensor(frame.frame_rep())?;
    let mut worst = 0.0f64;
    for h in diag.group().elements() {
        worst = worst.max(diag.act_on_operator(&y, h)?.distance(&y));
    }
    Ok(worst)
}

/// Max over `h` in the covariance group of `‖ρ^{h.ω} − (h⁻¹.ρ)^(ω)‖`.
///
/// For abelian groups this is the statement `ρ^{h.ω} = h⁻¹.ρ^(ω)`.
pub fn frame_covariance_residual(rho: &State, omega: &State, frame: &GroupFrame, sys: &SystemAction) -> Result<f64> {
    let inc = frame.covariance();
    let g = frame.group();
    let mut worst = 0.0f64;
    for h in inc.sub().elements() {
        let moved = frame.frame_rep().act_on_state(h, omega)?;
        let lhs = relative_state(rho, &moved, frame, sys)?;
        let back = sys.rep.act_on_state(g.inv(inc.embed(h)), rho)?;
        let rhs = relative_state(&back, omega, frame, sys)?;
        worst = worst.max(lhs.op().distance(rhs.op()));
    }
    Ok(worst)
}

/// Max over `h` of `‖ρ^{h.ω} − h⁻¹.ρ^(ω)‖`, the literal abelian form.
pub fn abelian_frame_covariance_residual(rho: &State, omega: &State, frame: &GroupFrame, sys: &SystemAction) -> Result<f64> {
    let inc = frame.covariance();
    let g = frame.group();
    let base = relative_state(rho, omega, frame, sys)?;
    let mut worst = 0.0f64;
    for h in inc.sub().elements() {
        let moved = frame.frame_rep().act_on_state(h, omega)?;
        let lhs = relative_state(rho, &moved, frame, sys)?;
        let rhs = sys.rep.act_on_state(g.inv(inc.embed(h)), &base)?;
        worst = worst.max(lhs.op().distance(rhs.op()));
    }
    Ok(worst)
}

/// `¥_ω(a) = Σ_g μ_ω(g) a.g`.
pub fn restrict(a: &Operator, omega: &State, frame: &GroupFrame, sys: &SystemAction) -> Result<Operator> {
    sys.check(frame)?;
    sys.check_op(a)?;
    average_operator(a, &frame.measure(omega)?, sys)
}

/// `Γ_ω(B) = tr_frame[(I ⊗ ω) B]` for `B` on system ⊗ frame.
pub fn restriction_map(b: &Operator, omega: &State, sys_dim: usize) -> Result<Operator> {
    let fd = omega.dim();
    if b.dim() != sys_dim * fd {
        return Err(Error::DimensionMismatch {
            expected: sys_dim * fd,
            found: b.dim(),
        });
    }
    let weighted = &tensor(&Operator::identity(sys_dim), omega.op())? * b;
    partial_trace(&weighted, Subsystem::Second, (sys_dim, fd))
}

/// `‖Γ_ω(¥(a)) − ¥_ω(a)‖`.
pub fn factorization_residual(a: &Operator, omega: &State, frame: &GroupFrame, sys: &SystemAction) -> Result<f64> {
    let composed = restriction_map(&relativize(a, frame, sys)?, omega, sys.dim())?;
    Ok(composed.distance(&restrict(a, omega, frame, sys)?))
}

/// `‖¥(1) − 1 ⊗ 1‖`.
pub fn unitality_residual(frame: &GroupFrame, sys: &SystemAction) -> Result<f64> {
    let d = sys.dim() * frame.dim();
    Ok(relativize(&Operator::identity(sys.dim()), frame, sys)?.distance(&Operator::identity(d)))
}

/// `t ↦ ‖¥_{ω_t}(a) − a‖` along a family of frame states.
pub fn localizability_probe(a: &Operator, frame: &GroupFrame, sys: &SystemAction, family: &[State]) -> Result<Vec<f64>> {
    if family.is_empty() {
        return Err(Error::Precondition("empty state family".into()));
    }
    family
        .iter()
        .map(|w| Ok(restrict(a, w, frame, sys)?.distance(a)))
        .collect()
}

/// Pushes a frame for a subgroup forward along `inc`. The result has the
/// observable `F ∘ inc⁻¹` on the larger group and stays covariant under the
/// sub-frame's covariance group.
pub fn reduce_frame(sub_frame: &GroupFrame, inc: &SubgroupInclusion) -> Result<GroupFrame> {
    if **inc.sub() != **sub_frame.group() {
        return Err(Error::Precondition("inclusion source differs from the frame group".into()));
    }
    let povm = push_forward_inclusion(sub_frame.povm(), inc)?;
    let covariance = sub_frame.covariance().then(inc)?;
    let action = SpaceAction::right_translation(inc.parent().clone()).restrict(&covariance)?;
    let observable = CovariantPovm::new(povm, sub_frame.frame_rep().clone(), action)?;
    Ok(GroupFrame {
        group: inc.parent().clone(),
        inclusion: covariance,
        observable,
    })
}

/// `‖Σ_{g ∈ G} (a.g) ⊗ E(g) − Σ_{h ∈ G_R} (a.h) ⊗ F(h)‖` where `E` is the
/// reduced frame's observable; the second sum is evaluated independently.
pub fn reduction_residual(a: &Operator, sub_frame: &GroupFrame, inc: &SubgroupInclusion, sys: &SystemAction) -> Result<f64> {
    let reduced = reduce_frame(sub_frame, inc)?;
    let lhs = relativize(a, &reduced, sys)?;
    let mut rhs = Operator::zeros(lhs.dim());
    for h in inc.sub().elements() {
        let moved = sys.rep.act_on_operator(a, inc.embed(h))?;
        rhs += &tensor(&moved, sub_frame.povm().effect(h))?;
    }
    Ok(lhs.distance(&rhs))
}

/// Max over matrix units `b` and `g` of `‖ψ(b.g) − ψ(b).g‖`, where
/// `ψ: B(H_in) → B(H_out)` acts in the Heisenberg picture and the two
/// representations are of the same group.
pub fn channel_equivariance_violation(psi: &Channel, rep_in: &UnitaryRep, rep_out: &UnitaryRep) -> Result<f64> {
    if rep_in.group().order() != rep_out.group().order() {
        return Err(Error::Precondition("representations of different groups".into()));
    }
    if psi.heisenberg_input_dim() != rep_in.dim() || psi.heisenberg_output_dim() != rep_out.dim() {
        return Err(Error::DimensionMismatch {
            expected: rep_in.dim(),
            found: psi.heisenberg_input_dim(),
        });
    }
    let d = rep_in.dim();
    let mut worst = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            let b = Operator::matrix_unit(d, i, j);
            let image = psi.heisenberg(&b)?;
            for g in rep_in.group().elements() {
                let lhs = psi.heisenberg(&rep_in.act_on_operator(&b, g)?)?;
                let rhs = rep_out.act_on_operator(&image, g)?;
                worst = worst.max(lhs.distance(&rhs));
            }
        }
    }
    Ok(worst)
}

/// `‖¥^{R'}(a) − (id ⊗ ψ)(¥^R(a))‖` for an equivariant `ψ` carrying frame
/// `R` to frame `R'`. Failed preconditions are errors, not residuals.
pub fn external_frame_transform(
    a: &Operator,
    from: &GroupFrame,
    to: &GroupFrame,
    psi: &Channel,
    sys: &SystemAction,
    tol: f64,
) -> Result<f64> {
    if **from.group() != **to.group() || from.covariance().images() != to.covariance().images() {
        return Err(Error::Precondition("frames have different symmetry structure".into()));
    }
    let violation = channel_equivariance_violation(psi, from.frame_rep(), to.frame_rep())?;
    if violation > tol {
        return Err(Error::Precondition(format!(
            "channel is not equivariant (violation {violation:e})"
        )));
    }
    let mapped = compose_with_channel(psi, from.povm())?;
    let mismatch = mapped
        .effects()
        .zip(to.povm().effects())
        .map(|(x, y)| x.distance(y))
        .fold(0.0, f64::max);
    if mismatch > tol {
        return Err(Error::Precondition(format!(
            "target observable differs from the transformed one by {mismatch:e}"
        )));
    }
    let lhs = relativize(a, to, sys)?;
    let rhs = psi.extend_left(sys.dim()).heisenberg(&relativize(a, from, sys)?)?;
    Ok(lhs.distance(&rhs))
}

/// `Â(x) = A.(x, e)` over the translation part of a semidirect product,
/// with `sys` a representation of the product.
pub fn translation_field(a: &Operator, sd: &SemidirectProduct, sys: &SystemAction) -> Result<OperatorField> {
    if **sys.rep.group() != **sd.product() {
        return Err(Error::Precondition("system rep is not a rep of the product group".into()));
    }
    let inc = sd.normal_inclusion();
    let values = sd
        .normal()
        .elements()
        .map(|x| sys.rep.act_on_operator(a, inc.embed(x)))
        .collect::<Result<_>>()?;
    OperatorField::new(SampleSpace::of_group(sd.normal()), values)
}

/// Points where the frame distribution exceeds `tol`.
pub fn support(mu: &[f64], tol: f64) -> Vec<usize> {
    (0..mu.len()).filter(|&x| mu[x] > tol).collect()
}

/// `Σ_{x ∈ U} Â(x) μ_ω(x)` with `U` the support of the frame distribution.
pub fn relational_local_observable(field: &OperatorField, frame: &GroupFrame, omega: &State, tol: f64) -> Result<Operator> {
    if field.space().len() != frame.group().order() {
        return Err(Error::SpaceMismatch("field and frame live on different groups".into()));
    }
    let mu = frame.measure(omega)?;
    let mut acc = Operator::zeros(field.dim());
    for x in support(&mu, tol) {
        acc += &field.value(x).scale_real(mu[x]);
    }
    Ok(acc)
}

/// `Σ_{(x, l)} μ_ω(x, l) Â(x).l` for a frame on the full product, where
/// `.l` is the action of `(e, l)`.
pub fn gauge_extended_local_observable(
    a: &Operator,
    sd: &SemidirectProduct,
    frame: &GroupFrame,
    omega: &State,
    sys: &SystemAction,
) -> Result<Operator> {
    sys.check(frame)?;
    let field = translation_field(a, sd, sys)?;
    let mu = frame.measure(omega)?;
    let lift = sd.acting_inclusion();
    let mut acc = Operator::zeros(a.dim());
    for l in sd.acting().elements() {
        for x in sd.normal().elements() {
            let m = mu[sd.element(x, l)];
            if m != 0.0 {
                acc += &sys.rep.act_on_operator(field.value(x), lift.embed(l))?.scale_real(m);
            }
        }
    }
    Ok(acc)
}

/// `Σ_x μ(x) g_x.ρ` for a distribution over torsor points, where `g_x`
/// carries the torsor's origin to `x`.
pub fn relative_state_on_torsor(rho: &State, mu: &[f64], torsor: &Torsor, sys: &SystemAction) -> Result<State> {
    let mut weights = vec![0.0; torsor.group().order()];
    for (x, &m) in mu.iter().enumerate() {
        weights[torsor.element_of(x)] += m;
    }
    average_state(rho, &weights, sys)
}

/// The sharp frame on `C^|G|` localized at `g`: its Born measure is `δ_g`.
pub fn localized_state(group: &FiniteGroup, g: usize) -> Result<State> {
    group.check_element(g)?;
    Ok(State::basis(group.order(), g))
}

/// The ideal POVM on a group carrier.
pub fn ideal_group_povm(group: &FiniteGroup) -> Povm {
    ideal_povm(&SampleSpace::of_group(group))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::c;

    const TOL: f64 = 1e-12;

    fn z2() -> (GroupFrame, SystemAction) {
        let g = Arc::new(FiniteGroup::cyclic(2));
        let rep = UnitaryRep::new(g, vec![Operator::identity(2), Operator::pauli_x()], TOL).unwrap();
        let frame = GroupFrame::new(rep.clone(), ideal_povm(&SampleSpace::indexed(2)), TOL).unwrap();
        (frame, SystemAction::new(rep))
    }

    fn plus() -> State {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        State::pure(&[c(s, 0.0), c(s, 0.0)]).unwrap()
    }

    fn some_state() -> State {
        State::new(
            Operator::from_complex(2, &[c(0.6, 0.0), c(0.2, -0.1), c(0.2, 0.1), c(0.4, 0.0)]).unwrap(),
            TOL,
        )
        .unwrap()
    }

    #[test]
    fn relative_state_examples() {
        let (frame, sys) = z2();
        let rho = some_state();
        let localized = relative_state(&rho, &State::basis(2, 0), &frame, &sys).unwrap();
        assert!(localized.op().distance(rho.op()) < TOL);
        let x = Operator::pauli_x();
        let expected = (rho.op() + &(&(&x * rho.op()) * &x)).scale_real(0.5);
        let mixed = relative_state(&rho, &State::maximally_mixed(2), &frame, &sys).unwrap();
        assert!(mixed.op().distance(&expected) < TOL);
    }

    #[test]
    fn relativize_examples() {
        let (frame, sys) = z2();
        let z = Operator::pauli_z();
        let zz = relativize(&z, &frame, &sys).unwrap();
        assert!(zz.distance(&z.kron(&z)) < TOL);
        let xi = relativize(&Operator::pauli_x(), &frame, &sys).unwrap();
        assert!(xi.distance(&Operator::pauli_x().kron(&Operator::identity(2))) < TOL);

        let trivial = Arc::new(FiniteGroup::trivial());
        let one = Povm::new(SampleSpace::indexed(1), vec![Operator::identity(3)], TOL).unwrap();
        let frame = GroupFrame::new(UnitaryRep::trivial(trivial.clone(), 3), one, TOL).unwrap();
        let sys = SystemAction::new(UnitaryRep::trivial(trivial, 2));
        let a = Operator::from_real(2, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        let y = relativize(&a, &frame, &sys).unwrap();
        assert!(y.distance(&a.kron(&Operator::identity(3))) < TOL);
    }

    #[test]
    fn restriction_examples() {
        let (frame, sys) = z2();
        let z = Operator::pauli_z();
        assert!(restrict(&z, &plus(), &frame, &sys).unwrap().max_abs() < TOL);
        assert!(restrict(&z, &State::basis(2, 0), &frame, &sys).unwrap().distance(&z) < TOL);
        for w in [plus(), some_state()] {
            assert!(factorization_residual(&z, &w, &frame, &sys).unwrap() < TOL);
            assert!(duality_residual(&some_state(), &w, &z, &frame, &sys).unwrap() < TOL);
            assert!(orbit_residual(&some_state(), &w, &z, &frame, &sys).unwrap() < TOL);
        }
        assert!(invariance_residual(&Operator::pauli_y(), &frame, &sys).unwrap() < TOL);
        assert!(unitality_residual(&frame, &sys).unwrap() < TOL);
    }

    #[test]
    fn localizability_curve_is_linear() {
        let (frame, sys) = z2();
        let family: Vec<State> = [1.0, 0.5, 0.25, 0.125]
            .iter()
            .map(|&t| State::mix(1.0 - t, &State::basis(2, 0), &State::maximally_mixed(2)).unwrap())
            .collect();
        let errors = localizability_probe(&Operator::pauli_z(), &frame, &sys, &family).unwrap();
        for (e, t) in errors.iter().zip([1.0, 0.5, 0.25, 0.125]) {
            assert!((e - t).abs() < TOL);
        }
        let wrong = localizability_probe(&Operator::pauli_z(), &frame, &sys, &[State::basis(2, 1)]).unwrap();
        assert!((wrong[0] - 2.0).abs() < TOL);
    }

    #[test]
    fn reductions() {
        let z4 = Arc::new(FiniteGroup::cyclic(4));
        let sys = SystemAction::new(UnitaryRep::left_regular(z4.clone()));
        let a = Operator::diagonal(&[1.0, -1.0, 2.0, 0.5]);

        let frame = GroupFrame::ideal(z4.clone());
        let same = reduce_frame(&frame, &SubgroupInclusion::identity(z4.clone())).unwrap();
        assert_eq!(same.povm(), frame.povm());

        let z2 = Arc::new(FiniteGroup::cyclic(2));
        let inc = SubgroupInclusion::new(z2.clone(), z4.clone(), vec![0, 2]).unwrap();
        let sub = GroupFrame::ideal(z2);
        assert!(reduction_residual(&a, &sub, &inc, &sys).unwrap() < TOL);
        let reduced = reduce_frame(&sub, &inc).unwrap();
        assert!(reduced.covariance_violation() < TOL);
        assert!(invariance_residual(&a, &reduced, &sys).unwrap() < TOL);

        let point = GroupFrame::ideal(Arc::new(FiniteGroup::trivial()));
        let triv = reduce_frame(&point, &SubgroupInclusion::trivial(z4)).unwrap();
        let y = relativize(&a, &triv, &sys).unwrap();
        assert!(y.distance(&a.kron(&Operator::identity(1))) < TOL);
    }

    #[test]
    fn non_abelian_frame_covariance() {
        let s3 = Arc::new(FiniteGroup::symmetric(3));
        let frame = GroupFrame::ideal(s3.clone());
        let sys = SystemAction::new(UnitaryRep::symmetric_defining(3));
        let rho = State::diagonal(&[0.5, 0.3, 0.2], TOL).unwrap();
        let omega = State::diagonal(&[0.3, 0.1, 0.05, 0.15, 0.25, 0.15], TOL).unwrap();
        assert!(frame_covariance_residual(&rho, &omega, &frame, &sys).unwrap() < TOL);
        assert!(orbit_residual(&rho, &omega, &Operator::diagonal(&[1.0, 2.0, 3.0]), &frame, &sys).unwrap() < TOL);
    }

    #[test]
    fn abelian_covariance_literal() {
        let (frame, sys) = z2();
        let omega = State::mix(0.7, &State::basis(2, 0), &plus()).unwrap();
        assert!(abelian_frame_covariance_residual(&some_state(), &omega, &frame, &sys).unwrap() < TOL);
    }

    #[test]
    fn external_transforms() {
        let (frame, sys) = z2();
        let z = Operator::pauli_z();
        let id = external_frame_transform(&z, &frame, &frame, &Channel::identity(2), &sys, TOL).unwrap();
        assert!(id < TOL);

        let u = Operator::pauli_x();
        let psi = Channel::unitary(&u, TOL).unwrap();
        let moved = compose_with_channel(&psi, frame.povm()).unwrap();
        let target = GroupFrame::new(frame.frame_rep().clone(), moved, TOL).unwrap();
        assert!(external_frame_transform(&z, &frame, &target, &psi, &sys, TOL).unwrap() < TOL);

        let reprepare = Channel::replace(&State::basis(2, 0), 2);
        let err = external_frame_transform(&z, &frame, &frame, &reprepare, &sys, TOL);
        assert!(matches!(err, Err(Error::Precondition(_))));
    }

    #[test]
    fn non_abelian_external_transform_by_commuting_unitary() {
        let s3 = Arc::new(FiniteGroup::symmetric(3));
        let frame = GroupFrame::ideal(s3.clone());
        let sys = SystemAction::new(UnitaryRep::symmetric_defining(3));
        let left = UnitaryRep::left_regular(s3);
        let psi = Channel::unitary(left.matrix(3), TOL).unwrap();
        let moved = compose_with_channel(&psi, frame.povm()).unwrap();
        let target = GroupFrame::new(frame.frame_rep().clone(), moved, TOL).unwrap();
        let a = Operator::diagonal(&[1.0, 0.0, -1.0]);
        assert!(external_frame_transform(&a, &frame, &target, &psi, &sys, TOL).unwrap() < TOL);
    }

    #[test]
    fn local_observables_on_dihedral() {
        let sd = SemidirectProduct::dihedral(4);
        let d4 = sd.product().clone();
        let sys = SystemAction::new(UnitaryRep::left_regular(d4.clone()));
        let a = Operator::diagonal(&[1.0, 2.0, 3.0, 4.0, 0.0, 0.0, 0.0, 0.0]);
        let field = translation_field(&a, &sd, &sys).unwrap();
        let tframe = GroupFrame::ideal(sd.normal().clone());

        let at2 = relational_local_observable(&field, &tframe, &State::basis(4, 2), TOL).unwrap();
        assert!(at2.distance(field.value(2)) < TOL);

        let uniform = relational_local_observable(&field, &tframe, &State::maximally_mixed(4), TOL).unwrap();
        let mut avg = Operator::zeros(8);
        for x in 0..4 {
            avg += &field.value(x).scale_real(0.25);
        }
        assert!(uniform.distance(&avg) < TOL);

        // the gauge-extended sum is the restriction against a frame on the whole product
        let full = GroupFrame::ideal(d4);
        let omega = State::diagonal(&[0.2, 0.1, 0.05, 0.15, 0.1, 0.1, 0.2, 0.1], TOL).unwrap();
        let ext = gauge_extended_local_observable(&a, &sd, &full, &omega, &sys).unwrap();
        let direct = restrict(&a, &omega, &full, &sys).unwrap();
        assert!(ext.distance(&direct) < TOL);
    }

    #[test]
    fn torsor_origin_shift() {
        let s3 = Arc::new(FiniteGroup::symmetric(3));
        let sys = SystemAction::new(UnitaryRep::symmetric_defining(3));
        let rho = State::diagonal(&[0.6, 0.3, 0.1], TOL).unwrap();
        let t = Torsor::new(s3.clone(), 0).unwrap();
        let mu = [0.1, 0.2, 0.3, 0.1, 0.2, 0.1];
        let shifted = t.shifted(4);
        let mut relabelled = vec![0.0; 6];
        for g in s3.elements() {
            relabelled[shifted.point_of(g)] = mu[t.point_of(g)];
        }
        let a = relative_state_on_torsor(&rho, &mu, &t, &sys).unwrap();
        let b = relative_state_on_torsor(&rho, &relabelled, &shifted, &sys).unwrap();
        assert!(a.op().distance(b.op()) < TOL);
    }

    #[test]
    fn broken_frame_rejected() {
        let g = Arc::new(FiniteGroup::cyclic(2));
        let rep = UnitaryRep::trivial(g, 2);
        let err = GroupFrame::new(rep, ideal_povm(&SampleSpace::indexed(2)), TOL);
        assert!(matches!(err, Err(Error::NotCovariant { .. })));
    }
}

//! POVMs on finite sample spaces.
//!
//! A sample space carries the full power set as its event algebra, so a POVM
//! is fixed by its atomic effects and `E(X) = Σ_{x ∈ X} E({x})`.

use std::collections::HashSet;
use std::sync::Arc;

use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::operator::{matrix_from_json, matrix_to_json, trace_product, Channel, Effect, Operator, State};
use crate::symmetry::{FiniteGroup, SubgroupInclusion, UnitaryRep};

/// A finite, ordered set of uniquely labelled points.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleSpace {
    labels: Vec<String>,
}

impl SampleSpace {
    pub fn new(labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::SampleSpace("no points".into()));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = labels.iter().find(|l| !seen.insert(*l)) {
            return Err(Error::SampleSpace(format!("duplicate label {dup:?}")));
        }
        Ok(Self { labels })
    }

    /// Points labelled `0..n`.
    pub fn indexed(n: usize) -> Self {
        Self {
            labels: (0..n).map(|i| i.to_string()).collect(),
        }
    }

    /// The carrier of a group, labelled by its element labels.
    pub fn of_group(group: &FiniteGroup) -> Self {
        Self {
            labels: group.labels().to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, x: usize) -> &str {
        &self.labels[x]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn check_point(&self, x: usize) -> Result<()> {
        if x < self.len() {
            Ok(())
        } else {
            Err(Error::InvalidPoint {
                point: x,
                size: self.len(),
            })
        }
    }
}

/// A normalized POVM given by its atomic effects.
#[derive(Clone, Debug, PartialEq)]
pub struct Povm {
    space: SampleSpace,
    effects: Vec<Effect>,
}

impl Povm {
    /// Validates each effect and `Σ_x E({x}) = I`.
    pub fn new(space: SampleSpace, effects: Vec<Operator>, tol: f64) -> Result<Self> {
        if effects.len() != space.len() {
            return Err(Error::DimensionMismatch {
                expected: space.len(),
                found: effects.len(),
            });
        }
        let dim = effects[0].dim();
        let mut sum = Operator::zeros(dim);
        let mut checked = Vec::with_capacity(effects.len());
        for e in effects {
            if e.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: e.dim(),
                });
            }
            sum += &e;
            checked.push(Effect::new(e, tol)?);
        }
        let deviation = sum.distance(&Operator::identity(dim));
        if deviation > tol {
            return Err(Error::NotNormalized { deviation });
        }
        Ok(Self {
            space,
            effects: checked,
        })
    }

    pub(crate) fn new_unchecked(space: SampleSpace, effects: Vec<Operator>) -> Self {
        Self {
            space,
            effects: effects.into_iter().map(Effect::new_unchecked).collect(),
        }
    }

    pub fn space(&self) -> &SampleSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.effects[0].op().dim()
    }

    pub fn effect(&self, x: usize) -> &Operator {
        self.effects[x].op()
    }

    pub fn effects(&self) -> impl Iterator<Item = &Operator> + '_ {
        self.effects.iter().map(Effect::op)
    }

    /// `E(X)` for a subset of point indices.
    pub fn event(&self, points: &[usize]) -> Result<Operator> {
        let mut sum = Operator::zeros(self.dim());
        for &x in points {
            self.space.check_point(x)?;
            sum += self.effect(x);
        }
        Ok(sum)
    }

    /// True iff every atomic effect is a projection within `tol`.
    pub fn is_sharp(&self, tol: f64) -> bool {
        self.effects().all(|e| e.is_idempotent(tol))
    }

    pub fn to_json(&self) -> Value {
        let mut effects = Map::new();
        for (label, e) in self.space.labels().iter().zip(self.effects()) {
            effects.insert(label.clone(), matrix_to_json(e.matrix()));
        }
        serde_json::json!({ "space": self.space.labels(), "effects": effects })
    }

    /// Reads `{space: [labels], effects: {label: matrix}}`.
    pub fn from_json(value: &Value, tol: f64) -> Result<Self> {
        let space = space_from_json(value.get("space"))?;
        let effects = value
            .get("effects")
            .and_then(Value::as_object)
            .ok_or_else(|| Error::SampleSpace("POVM needs an `effects` object".into()))?;
        let ops = space
            .labels()
            .iter()
            .map(|l| {
                let m = effects
                    .get(l)
                    .ok_or_else(|| Error::SampleSpace(format!("no effect for point {l:?}")))?;
                Operator::new(matrix_from_json(m).map_err(Error::Precondition)?)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(space, ops, tol)
    }
}

pub(crate) fn space_from_json(value: Option<&Value>) -> Result<SampleSpace> {
    let arr = value
        .and_then(Value::as_array)
        .ok_or_else(|| Error::SampleSpace("`space` must be an array of labels".into()))?;
    let labels = arr
        .iter()
        .map(|v| match v {
            Value::String(s) => Ok(s.clone()),
            Value::Number(n) => Ok(n.to_string()),
            _ => Err(Error::SampleSpace("labels must be strings or numbers".into())),
        })
        .collect::<Result<Vec<_>>>()?;
    SampleSpace::new(labels)
}

/// A right action of a group on the points of a sample space:
/// `table[g][x] = x.g`, with `(x.g).h = x.(gh)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceAction {
    group: Arc<FiniteGroup>,
    table: Vec<Vec<usize>>,
}

impl SpaceAction {
    pub fn new(group: Arc<FiniteGroup>, table: Vec<Vec<usize>>) -> Result<Self> {
        if table.len() != group.order() {
            return Err(Error::DimensionMismatch {
                expected: group.order(),
                found: table.len(),
            });
        }
        let n = table[0].len();
        for row in &table {
            if row.len() != n {
                return Err(Error::SampleSpace("action rows differ in length".into()));
            }
            if let Some(&bad) = row.iter().find(|&&y| y >= n) {
                return Err(Error::InvalidPoint { point: bad, size: n });
            }
        }
        for x in 0..n {
            if table[group.identity()][x] != x {
                return Err(Error::NotHomomorphism("identity moves a point".into()));
            }
            for g in group.elements() {
                for h in group.elements() {
                    if table[h][table[g][x]] != table[group.mul(g, h)][x] {
                        return Err(Error::NotHomomorphism(format!(
                            "not a right action at point {x}, elements ({g}, {h})"
                        )));
                    }
                }
            }
        }
        Ok(Self { group, table })
    }

    /// `x.g = x·g` on the carrier of `G`.
    pub fn right_translation(group: Arc<FiniteGroup>) -> Self {
        let table = group
            .elements()
            .map(|g| group.elements().map(|x| group.mul(x, g)).collect())
            .collect();
        Self { group, table }
    }

    /// Every element fixes every point.
    pub fn trivial(group: Arc<FiniteGroup>, points: usize) -> Self {
        let table = vec![(0..points).collect(); group.order()];
        Self { group, table }
    }

    /// Pullback along a subgroup inclusion.
    pub fn restrict(&self, inc: &SubgroupInclusion) -> Result<Self> {
        if **inc.parent() != *self.group {
            return Err(Error::Precondition("inclusion parent differs from action group".into()));
        }
        Ok(Self {
            group: inc.sub().clone(),
            table: inc.sub().elements().map(|h| self.table[inc.embed(h)].clone()).collect(),
        })
    }

    pub fn group(&self) -> &Arc<FiniteGroup> {
        &self.group
    }

    pub fn points(&self) -> usize {
        self.table[0].len()
    }

    /// `x.g`.
    pub fn act(&self, x: usize, g: usize) -> usize {
        self.table[g][x]
    }

    pub fn table(&self) -> &[Vec<usize>] {
        &self.table
    }
}

/// A POVM together with a representation and a point action that are
/// expected to satisfy `E({x}).g = E({x.g})`.
///
/// Construction does not enforce covariance: [`check_covariance`] reports
/// the violation so that broken inputs stay inspectable.
#[derive(Clone, Debug)]
pub struct CovariantPovm {
    povm: Povm,
    rep: UnitaryRep,
    action: SpaceAction,
}

impl CovariantPovm {
    pub fn new(povm: Povm, rep: UnitaryRep, action: SpaceAction) -> Result<Self> {
        if rep.dim() != povm.dim() {
            return Err(Error::DimensionMismatch {
                expected: povm.dim(),
                found: rep.dim(),
            });
        }
        if action.points() != povm.space().len() {
            return Err(Error::SpaceMismatch(format!(
                "action on {} points, POVM on {}",
                action.points(),
                povm.space().len()
            )));
        }
        if *rep.group() != *action.group() && **rep.group() != **action.group() {
            return Err(Error::Precondition("rep and action use different groups".into()));
        }
        Ok(Self { povm, rep, action })
    }

    /// Like [`CovariantPovm::new`] but also fails when the covariance
    /// violation exceeds `tol`.
    pub fn new_checked(povm: Povm, rep: UnitaryRep, action: SpaceAction, tol: f64) -> Result<Self> {
        let cp = Self::new(povm, rep, action)?;
        let violation = check_covariance(&cp);
        if violation > tol {
            return Err(Error::NotCovariant { violation });
        }
        Ok(cp)
    }

    /// The ideal POVM on `C^|G|` with the right regular representation and
    /// right translation on `G`.
    pub fn ideal(group: Arc<FiniteGroup>) -> Self {
        let povm = ideal_povm(&SampleSpace::of_group(&group));
        Self {
            povm,
            rep: UnitaryRep::right_regular(group.clone()),
            action: SpaceAction::right_translation(group),
        }
    }

    pub fn povm(&self) -> &Povm {
        &self.povm
    }

    pub fn rep(&self) -> &UnitaryRep {
        &self.rep
    }

    pub fn action(&self) -> &SpaceAction {
        &self.action
    }

    pub fn group(&self) -> &Arc<FiniteGroup> {
        self.rep.group()
    }

    /// Restricts the symmetry group along an inclusion; the POVM is unchanged.
    pub fn restrict(&self, inc: &SubgroupInclusion) -> Result<Self> {
        Ok(Self {
            povm: self.povm.clone(),
            rep: self.rep.restrict(inc)?,
            action: self.action.restrict(inc)?,
        })
    }
}

/// `μ(x) = tr[ω E({x})]`.
pub fn born_measure(povm: &Povm, omega: &State) -> Result<Vec<f64>> {
    if omega.dim() != povm.dim() {
        return Err(Error::DimensionMismatch {
            expected: povm.dim(),
            found: omega.dim(),
        });
    }
    Ok(povm.effects().map(|e| trace_product(omega.op(), e).re).collect())
}

/// Max over `(g, x)` of `‖E({x}).g − E({x.g})‖`.
pub fn check_covariance(cp: &CovariantPovm) -> f64 {
    let group = cp.group();
    let mut worst = 0.0f64;
    for g in group.elements() {
        for x in 0..cp.povm.space().len() {
            let moved = cp.povm.effect(x).conjugate_by(cp.rep.matrix(g));
            worst = worst.max(moved.distance(cp.povm.effect(cp.action.act(x, g))));
        }
    }
    worst
}

/// `E'({y}) = Σ_{f(x) = y} E({x})`, with `f` given as a table of target indices.
pub fn push_forward(povm: &Povm, target: &SampleSpace, f: &[usize]) -> Result<Povm> {
    if f.len() != povm.space().len() {
        return Err(Error::SpaceMismatch(format!(
            "map defined on {} points, POVM on {}",
            f.len(),
            povm.space().len()
        )));
    }
    let mut effects = vec![Operator::zeros(povm.dim()); target.len()];
    for (x, &y) in f.iter().enumerate() {
        target.check_point(y)?;
        effects[y] += povm.effect(x);
    }
    Ok(Povm::new_unchecked(target.clone(), effects))
}

/// Push-forward along a subgroup inclusion of group carriers.
pub fn push_forward_inclusion(povm: &Povm, inc: &SubgroupInclusion) -> Result<Povm> {
    if povm.space().len() != inc.sub().order() {
        return Err(Error::SpaceMismatch("POVM space is not the subgroup carrier".into()));
    }
    push_forward(povm, &SampleSpace::of_group(inc.parent()), inc.images())
}

/// `x ↦ ψ(E({x}))` in the Heisenberg picture.
pub fn compose_with_channel(psi: &Channel, povm: &Povm) -> Result<Povm> {
    if psi.heisenberg_input_dim() != povm.dim() {
        return Err(Error::DimensionMismatch {
            expected: povm.dim(),
            found: psi.heisenberg_input_dim(),
        });
    }
    let effects = povm.effects().map(|e| psi.heisenberg(e)).collect::<Result<Vec<_>>>()?;
    Ok(Povm::new_unchecked(povm.space().clone(), effects))
}

/// The sharp POVM of basis projectors on `C^|Σ|`.
pub fn ideal_povm(space: &SampleSpace) -> Povm {
    let n = space.len();
    Povm::new_unchecked(space.clone(), (0..n).map(|x| Operator::basis_projector(n, x)).collect())
}

/// True iff every atomic effect is a projection within `tol`.
pub fn is_sharp(povm: &Povm, tol: f64) -> bool {
    povm.is_sharp(tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::c;

    const TOL: f64 = 1e-12;

    fn projective() -> Povm {
        ideal_povm(&SampleSpace::indexed(2))
    }

    fn z2_covariant(action: SpaceAction) -> CovariantPovm {
        let g = action.group().clone();
        let rep = UnitaryRep::new(g, vec![Operator::identity(2), Operator::pauli_x()], TOL).unwrap();
        CovariantPovm::new(projective(), rep, action).unwrap()
    }

    fn plus() -> State {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        State::pure(&[c(s, 0.0), c(s, 0.0)]).unwrap()
    }

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < TOL)
    }

    #[test]
    fn born_examples() {
        let e = projective();
        assert!(close(&born_measure(&e, &State::maximally_mixed(2)).unwrap(), &[0.5, 0.5]));
        assert!(close(&born_measure(&e, &State::basis(2, 0)).unwrap(), &[1.0, 0.0]));
        assert!(close(&born_measure(&e, &plus()).unwrap(), &[0.5, 0.5]));
        assert!(born_measure(&e, &State::basis(3, 0)).is_err());
    }

    #[test]
    fn covariance_examples() {
        let z2 = Arc::new(FiniteGroup::cyclic(2));
        let good = z2_covariant(SpaceAction::right_translation(z2.clone()));
        assert!(check_covariance(&good) < TOL);
        let broken = z2_covariant(SpaceAction::trivial(z2, 2));
        assert!((check_covariance(&broken) - 1.0).abs() < TOL);
        let trivial = Arc::new(FiniteGroup::trivial());
        let cp = CovariantPovm::new(
            projective(),
            UnitaryRep::trivial(trivial.clone(), 2),
            SpaceAction::trivial(trivial, 2),
        )
        .unwrap();
        assert_eq!(check_covariance(&cp), 0.0);
    }

    #[test]
    fn ideal_frames_are_covariant() {
        for g in [FiniteGroup::cyclic(4), FiniteGroup::symmetric(3), FiniteGroup::dihedral(4)] {
            let cp = CovariantPovm::ideal(Arc::new(g));
            assert!(check_covariance(&cp) < TOL);
            assert!(cp.povm().is_sharp(TOL));
        }
    }

    #[test]
    fn push_forward_examples() {
        let e = projective();
        let same = push_forward(&e, e.space(), &[0, 1]).unwrap();
        assert_eq!(same, e);
        let point = SampleSpace::indexed(1);
        let collapsed = push_forward(&e, &point, &[0, 0]).unwrap();
        assert!(collapsed.effect(0).distance(&Operator::identity(2)) < TOL);

        let z2 = Arc::new(FiniteGroup::cyclic(2));
        let z4 = Arc::new(FiniteGroup::cyclic(4));
        let inc = SubgroupInclusion::new(z2, z4, vec![0, 2]).unwrap();
        let pushed = push_forward_inclusion(&e, &inc).unwrap();
        assert_eq!(pushed.effect(0), e.effect(0));
        assert_eq!(pushed.effect(2), e.effect(1));
        assert_eq!(pushed.effect(1), &Operator::zeros(2));
        assert_eq!(pushed.effect(3), &Operator::zeros(2));
    }

    #[test]
    fn channel_composition_examples() {
        let e = projective();
        assert_eq!(compose_with_channel(&Channel::identity(2), &e).unwrap(), e);
        let depol = compose_with_channel(&Channel::completely_depolarizing(2), &e).unwrap();
        for x in 0..2 {
            assert!(depol.effect(x).distance(&Operator::identity(2).scale_real(0.5)) < TOL);
        }
        let h = Operator::from_real(2, &[1.0, 1.0, 1.0, -1.0]).unwrap().scale_real(0.5f64.sqrt());
        let rotated = compose_with_channel(&Channel::unitary(&h, TOL).unwrap(), &e).unwrap();
        assert!(Povm::new(rotated.space().clone(), rotated.effects().cloned().collect(), TOL).is_ok());
    }

    #[test]
    fn born_of_composed_povm_is_born_of_evolved_state() {
        let psi = UnitaryRep::right_regular(Arc::new(FiniteGroup::cyclic(2)))
            .partial_twirl(0.3, TOL)
            .unwrap();
        let e = projective();
        let omega = State::new(
            Operator::from_complex(2, &[c(0.7, 0.0), c(0.1, 0.2), c(0.1, -0.2), c(0.3, 0.0)]).unwrap(),
            TOL,
        )
        .unwrap();
        let lhs = born_measure(&compose_with_channel(&psi, &e).unwrap(), &omega).unwrap();
        let rhs = born_measure(&e, &psi.schrodinger(&omega).unwrap()).unwrap();
        assert!(close(&lhs, &rhs));
    }

    #[test]
    fn ideal_born_recovers_diagonal() {
        let e = ideal_povm(&SampleSpace::indexed(4));
        let p = [0.1, 0.2, 0.3, 0.4];
        let mu = born_measure(&e, &State::diagonal(&p, TOL).unwrap()).unwrap();
        assert!(close(&mu, &p));
        let one = ideal_povm(&SampleSpace::indexed(1));
        assert_eq!(one.effect(0), &Operator::identity(1));
    }

    #[test]
    fn povm_validation() {
        let space = SampleSpace::indexed(2);
        let doubled = vec![Operator::identity(2), Operator::identity(2)];
        assert!(matches!(Povm::new(space.clone(), doubled, TOL), Err(Error::NotNormalized { .. })));
        let negative = vec![Operator::diagonal(&[2.0, 0.0]), Operator::diagonal(&[-1.0, 1.0])];
        assert!(matches!(Povm::new(space, negative, TOL), Err(Error::EffectOutOfRange { .. })));
        assert!(SampleSpace::new(vec!["a".into(), "a".into()]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let e = projective();
        let back = Povm::from_json(&e.to_json(), TOL).unwrap();
        assert_eq!(back, e);
    }

    #[test]
    fn unsharp_povm_detected() {
        let space = SampleSpace::indexed(2);
        let e = Povm::new(space, vec![Operator::diagonal(&[0.5, 0.2]), Operator::diagonal(&[0.5, 0.8])], TOL)
            .unwrap();
        assert!(!e.is_sharp(TOL));
    }
}

//! Reference frames on finite principal bundles.
//!
//! A [`PrincipalBundle`] is an explicit total space with a projection onto a
//! finite base and a free right action of `H` that is transitive on fibers.
//! A [`BundleFrame`] fixes a local section over a domain `U` and a POVM on
//! `π⁻¹(U)` covariant under the fiberwise action.
//!
//! Points of `π⁻¹(U)` are coordinatized by the section: the coordinate of `b`
//! is the unique `k(b)` with `σ(π(b)).k(b) = b`. It satisfies
//! `k(b.h) = k(b) h`, which is what makes relativized fields invariant.
//! The orientation `h_σ(b)` with `b.h_σ(b) = σ(π(b))` is its inverse.

use std::collections::BTreeSet;
use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::group_frame::channel_equivariance_violation;
use crate::measure::{born_measure, compose_with_channel, ideal_povm, CovariantPovm, Povm, SampleSpace, SpaceAction};
use crate::operator::{tensor, Channel, Operator, State, C64};
use crate::symmetry::{FiniteGroup, SubgroupInclusion, UnitaryRep};

/// A finite principal `H`-bundle `π: B → M`.
#[derive(Clone, Debug, PartialEq)]
pub struct PrincipalBundle {
    base: Vec<String>,
    group: Arc<FiniteGroup>,
    total: Vec<String>,
    proj: Vec<usize>,
    action: Vec<Vec<usize>>,
}

impl PrincipalBundle {
    /// `action[b][g] = b.g`. Checks the right-action law, fiberwise action,
    /// freeness and that each fiber is a single orbit.
    pub fn new(
        base: Vec<String>,
        group: Arc<FiniteGroup>,
        total: Vec<String>,
        proj: Vec<usize>,
        action: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let nb = total.len();
        if proj.len() != nb || action.len() != nb {
            return Err(Error::Bundle("projection and action must cover every point".into()));
        }
        let unique = |labels: &[String]| labels.iter().collect::<BTreeSet<_>>().len() == labels.len();
        if !unique(&base) || !unique(&total) {
            return Err(Error::Bundle("duplicate point labels".into()));
        }
        for (b, &p) in proj.iter().enumerate() {
            if p >= base.len() {
                return Err(Error::Bundle(format!("point {} projects outside the base", total[b])));
            }
        }
        for (b, row) in action.iter().enumerate() {
            if row.len() != group.order() {
                return Err(Error::Bundle(format!("action row for {} has wrong length", total[b])));
            }
            if row.iter().any(|&x| x >= nb) {
                return Err(Error::Bundle(format!("action moves {} outside the total space", total[b])));
            }
            if row[group.identity()] != b {
                return Err(Error::Bundle(format!("identity moves {}", total[b])));
            }
            for g in group.elements() {
                if proj[row[g]] != proj[b] {
                    return Err(Error::Bundle(format!("action leaves the fiber of {}", total[b])));
                }
                if g != group.identity() && row[g] == b {
                    return Err(Error::Bundle(format!("action is not free at {}", total[b])));
                }
                for h in group.elements() {
                    if action[row[g]][h] != row[group.mul(g, h)] {
                        return Err(Error::Bundle(format!("not a right action at {}", total[b])));
                    }
                }
            }
        }
        for p in 0..base.len() {
            let size = proj.iter().filter(|&&q| q == p).count();
            if size != group.order() {
                return Err(Error::Bundle(format!(
                    "fiber over {} has {size} points, expected {}",
                    base[p],
                    group.order()
                )));
            }
        }
        Ok(Self {
            base,
            group,
            total,
            proj,
            action,
        })
    }

    /// `M × H` with `(p, h).g = (p, h g)`; point `(p, h)` has index
    /// `p |H| + h` and label `"p:h"`.
    pub fn trivial(base: Vec<String>, group: Arc<FiniteGroup>) -> Result<Self> {
        let n = group.order();
        let mut total = Vec::new();
        let mut proj = Vec::new();
        let mut action = Vec::new();
        for (p, pl) in base.iter().enumerate() {
            for h in group.elements() {
                total.push(format!("{pl}:{}", group.label(h)));
                proj.push(p);
                action.push(group.elements().map(|g| p * n + group.mul(h, g)).collect());
            }
        }
        Self::new(base, group, total, proj, action)
    }

    pub fn base_len(&self) -> usize {
        self.base.len()
    }

    pub fn total_len(&self) -> usize {
        self.total.len()
    }

    pub fn group(&self) -> &Arc<FiniteGroup> {
        &self.group
    }

    pub fn base_labels(&self) -> &[String] {
        &self.base
    }

    pub fn total_labels(&self) -> &[String] {
        &self.total
    }

    pub fn base_index(&self, label: &str) -> Option<usize> {
        self.base.iter().position(|l| l == label)
    }

    pub fn total_index(&self, label: &str) -> Option<usize> {
        self.total.iter().position(|l| l == label)
    }

    pub fn proj(&self, b: usize) -> usize {
        self.proj[b]
    }

    /// `b.g`.
    pub fn act(&self, b: usize, g: usize) -> usize {
        self.action[b][g]
    }

    pub fn action_table(&self) -> &[Vec<usize>] {
        &self.action
    }

    pub fn fiber(&self, p: usize) -> Vec<usize> {
        (0..self.total.len()).filter(|&b| self.proj[b] == p).collect()
    }

    /// The unique `g` with `from.g = to`, if both lie in one fiber.
    pub fn element_between(&self, from: usize, to: usize) -> Option<usize> {
        self.group.elements().find(|&g| self.action[from][g] == to)
    }

    fn check_total(&self, b: usize) -> Result<()> {
        if b < self.total.len() {
            Ok(())
        } else {
            Err(Error::InvalidPoint {
                point: b,
                size: self.total.len(),
            })
        }
    }
}

/// A section `σ: U → B` over a subset of the base.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalSection {
    images: Vec<Option<usize>>,
}

impl LocalSection {
    /// `pairs` lists `(p, σ(p))`.
    pub fn new(bundle: &PrincipalBundle, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut images = vec![None; bundle.base_len()];
        for &(p, b) in pairs {
            if p >= bundle.base_len() {
                return Err(Error::Section(format!("base point {p} out of range")));
            }
            bundle.check_total(b).map_err(|_| Error::Section(format!("point {b} out of range")))?;
            if bundle.proj(b) != p {
                return Err(Error::Section(format!(
                    "{} does not lie over {}",
                    bundle.total[b], bundle.base[p]
                )));
            }
            if images[p].replace(b).is_some() {
                return Err(Error::Section(format!("{} assigned twice", bundle.base[p])));
            }
        }
        if images.iter().all(Option::is_none) {
            return Err(Error::Section("empty domain".into()));
        }
        Ok(Self { images })
    }

    /// The section `p ↦ (p, h)` of a bundle built by [`PrincipalBundle::trivial`].
    pub fn constant(bundle: &PrincipalBundle, h: usize) -> Result<Self> {
        let pairs = (0..bundle.base_len())
            .map(|p| {
                find_trivial_point(bundle, p, h)
                    .map(|b| (p, b))
                    .ok_or_else(|| Error::Section("bundle is not labelled as a product".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(bundle, &pairs)
    }

    pub fn domain(&self) -> Vec<usize> {
        (0..self.images.len()).filter(|&p| self.images[p].is_some()).collect()
    }

    pub fn contains(&self, p: usize) -> bool {
        self.images.get(p).is_some_and(Option::is_some)
    }

    pub fn at(&self, p: usize) -> Option<usize> {
        self.images.get(p).copied().flatten()
    }

    /// `π⁻¹(U)` in ascending order.
    pub fn preimage(&self, bundle: &PrincipalBundle) -> Vec<usize> {
        (0..bundle.total_len()).filter(|&b| self.contains(bundle.proj(b))).collect()
    }
}

fn find_trivial_point(bundle: &PrincipalBundle, p: usize, h: usize) -> Option<usize> {
    let label = format!("{}:{}", bundle.base[p], bundle.group.label(h));
    bundle.total_index(&label)
}

/// `h_σ(b)` with `b.h_σ(b) = σ(π(b))`.
pub fn orientation(bundle: &PrincipalBundle, section: &LocalSection, b: usize) -> Result<usize> {
    bundle.check_total(b)?;
    let s = section
        .at(bundle.proj(b))
        .ok_or_else(|| Error::Section(format!("{} lies outside the section's domain", bundle.total[b])))?;
    Ok(bundle.element_between(b, s).expect("fibers are single orbits"))
}

/// `k(b) = h_σ(b)⁻¹`, so that `σ(π(b)).k(b) = b`.
pub fn section_coordinate(bundle: &PrincipalBundle, section: &LocalSection, b: usize) -> Result<usize> {
    Ok(bundle.group.inv(orientation(bundle, section, b)?))
}

/// A POVM on `π⁻¹(U)` covariant under the fiberwise right action of a
/// subgroup of `H`.
#[derive(Clone, Debug)]
pub struct BundleFrame {
    bundle: PrincipalBundle,
    section: LocalSection,
    points: Vec<usize>,
    inclusion: SubgroupInclusion,
    observable: CovariantPovm,
}

impl BundleFrame {
    pub fn new(bundle: PrincipalBundle, section: LocalSection, frame_rep: UnitaryRep, povm: Povm, tol: f64) -> Result<Self> {
        let inc = SubgroupInclusion::identity(bundle.group.clone());
        Self::with_covariance(bundle, section, inc, frame_rep, povm, tol)
    }

    /// A frame only covariant under `inc.sub()`, which `frame_rep` represents.
    pub fn with_covariance(
        bundle: PrincipalBundle,
        section: LocalSection,
        inc: SubgroupInclusion,
        frame_rep: UnitaryRep,
        povm: Povm,
        tol: f64,
    ) -> Result<Self> {
        let frame = Self::assemble(bundle, section, inc, frame_rep, povm)?;
        let violation = crate::measure::check_covariance(&frame.observable);
        if violation > tol {
            return Err(Error::NotCovariant { violation });
        }
        Ok(frame)
    }

    fn assemble(
        bundle: PrincipalBundle,
        section: LocalSection,
        inc: SubgroupInclusion,
        frame_rep: UnitaryRep,
        povm: Povm,
    ) -> Result<Self> {
        if **inc.parent() != *bundle.group {
            return Err(Error::Precondition("covariance group is not a subgroup of the structure group".into()));
        }
        if section.images.len() != bundle.base_len() {
            return Err(Error::Section("section belongs to a different bundle".into()));
        }
        let points = section.preimage(&bundle);
        if povm.space().len() != points.len() {
            return Err(Error::SpaceMismatch(format!(
                "frame POVM has {} outcomes, π⁻¹(U) has {} points",
                povm.space().len(),
                points.len()
            )));
        }
        let local = local_indexer(&points, bundle.total_len());
        let table = inc
            .sub()
            .elements()
            .map(|h| points.iter().map(|&b| local[bundle.act(b, inc.embed(h))]).collect())
            .collect();
        let action = SpaceAction::new(inc.sub().clone(), table)?;
        let observable = CovariantPovm::new(povm, frame_rep, action)?;
        Ok(Self {
            bundle,
            section,
            points,
            inclusion: inc,
            observable,
        })
    }

    /// The sharp frame on `C^|π⁻¹(U)|` with `U_R(g)|b> = |b.g⁻¹>`.
    pub fn ideal(bundle: PrincipalBundle, section: LocalSection) -> Result<Self> {
        let points = section.preimage(&bundle);
        let n = points.len();
        let local = local_indexer(&points, bundle.total_len());
        let group = bundle.group.clone();
        let perms: Vec<Vec<usize>> = group
            .elements()
            .map(|g| points.iter().map(|&b| local[bundle.act(b, group.inv(g))]).collect())
            .collect();
        let rep = UnitaryRep::from_permutations(group.clone(), &perms, 1e-12)?;
        let labels = points.iter().map(|&b| bundle.total[b].clone()).collect();
        let povm = ideal_povm(&SampleSpace::new(labels)?);
        debug_assert_eq!(povm.dim(), n);
        Self::assemble(bundle, section, SubgroupInclusion::identity(group), rep, povm)
    }

    pub fn bundle(&self) -> &PrincipalBundle {
        &self.bundle
    }

    pub fn section(&self) -> &LocalSection {
        &self.section
    }

    /// `π⁻¹(U)` in the order of the POVM's outcomes.
    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn covariance(&self) -> &SubgroupInclusion {
        &self.inclusion
    }

    pub fn povm(&self) -> &Povm {
        self.observable.povm()
    }

    pub fn frame_rep(&self) -> &UnitaryRep {
        self.observable.rep()
    }

    pub fn dim(&self) -> usize {
        self.povm().dim()
    }

    pub fn covariance_violation(&self) -> f64 {
        crate::measure::check_covariance(&self.observable)
    }

    pub fn is_sharp(&self, tol: f64) -> bool {
        self.povm().is_sharp(tol)
    }

    /// Outcome index of a total-space point, if it lies over `U`.
    pub fn local_index(&self, b: usize) -> Option<usize> {
        self.points.binary_search(&b).ok()
    }

    /// Born measure over `π⁻¹(U)`, in outcome order.
    pub fn measure(&self, omega: &State) -> Result<Vec<f64>> {
        born_measure(self.povm(), omega)
    }
}

fn local_indexer(points: &[usize], total: usize) -> Vec<usize> {
    let mut local = vec![usize::MAX; total];
    for (i, &b) in points.iter().enumerate() {
        local[b] = i;
    }
    local
}

/// A field `M → B(H_S)`, possibly undefined at some base points, together
/// with the representation of `H` on the system.
#[derive(Clone, Debug)]
pub struct QuantumField {
    values: Vec<Option<Operator>>,
    sys_rep: UnitaryRep,
}

impl QuantumField {
    pub fn new(values: Vec<Option<Operator>>, sys_rep: UnitaryRep) -> Result<Self> {
        for v in values.iter().flatten() {
            if v.dim() != sys_rep.dim() {
                return Err(Error::DimensionMismatch {
                    expected: sys_rep.dim(),
                    found: v.dim(),
                });
            }
        }
        Ok(Self { values, sys_rep })
    }

    /// A field defined everywhere.
    pub fn total(values: Vec<Operator>, sys_rep: UnitaryRep) -> Result<Self> {
        Self::new(values.into_iter().map(Some).collect(), sys_rep)
    }

    pub fn constant(base_len: usize, value: Operator, sys_rep: UnitaryRep) -> Result<Self> {
        Self::total(vec![value; base_len], sys_rep)
    }

    pub fn base_len(&self) -> usize {
        self.values.len()
    }

    pub fn dim(&self) -> usize {
        self.sys_rep.dim()
    }

    pub fn sys_rep(&self) -> &UnitaryRep {
        &self.sys_rep
    }

    pub fn value(&self, p: usize) -> Result<&Operator> {
        self.values
            .get(p)
            .and_then(Option::as_ref)
            .ok_or_else(|| Error::FieldUndefined(p.to_string()))
    }

    pub fn values(&self) -> &[Option<Operator>] {
        &self.values
    }

    /// `p ↦ φ(f(p))` for a base map given as a partial table into this field's base.
    pub fn pull_back(&self, f: &[Option<usize>]) -> Self {
        let values = f
            .iter()
            .map(|q| q.and_then(|q| self.values.get(q).cloned().flatten()))
            .collect();
        Self {
            values,
            sys_rep: self.sys_rep.clone(),
        }
    }

    /// Pointwise `φ + ψ`, defined where both are.
    pub fn add(&self, other: &QuantumField) -> Result<Self> {
        if self.values.len() != other.values.len() {
            return Err(Error::DimensionMismatch {
                expected: self.values.len(),
                found: other.values.len(),
            });
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| match (a, b) {
                (Some(a), Some(b)) => Some(a + b),
                _ => None,
            })
            .collect();
        Self::new(values, self.sys_rep.clone())
    }

    fn check(&self, frame: &BundleFrame) -> Result<()> {
        if self.values.len() != frame.bundle.base_len() {
            return Err(Error::DimensionMismatch {
                expected: frame.bundle.base_len(),
                found: self.values.len(),
            });
        }
        if **self.sys_rep.group() != *frame.bundle.group {
            return Err(Error::Precondition("field rep and bundle use different groups".into()));
        }
        for p in frame.section.domain() {
            if self.values[p].is_none() {
                return Err(Error::FieldUndefined(frame.bundle.base[p].clone()));
            }
        }
        Ok(())
    }
}

/// `φ̂(π(b)).k(b)` for every `b ∈ π⁻¹(U)`, in outcome order.
pub fn field_orbit(field: &QuantumField, frame: &BundleFrame) -> Result<Vec<Operator>> {
    field.check(frame)?;
    frame
        .points
        .iter()
        .map(|&b| {
            let k = section_coordinate(&frame.bundle, &frame.section, b)?;
            field.sys_rep.act_on_operator(field.value(frame.bundle.proj(b))?, k)
        })
        .collect()
}

/// `Σ_{b ∈ π⁻¹(U)} φ̂(π(b)).k(b) ⊗ E({b})`.
pub fn relativize_field(field: &QuantumField, frame: &BundleFrame) -> Result<Operator> {
    let orbit = field_orbit(field, frame)?;
    let mut acc = Operator::zeros(field.dim() * frame.dim());
    for (v, e) in orbit.iter().zip(frame.povm().effects()) {
        acc += &tensor(v, e)?;
    }
    Ok(acc)
}

/// `Σ_b φ̂(π(b)).k(b) μ_ω({b})`.
pub fn restrict_field(field: &QuantumField, frame: &BundleFrame, omega: &State) -> Result<Operator> {
    let orbit = field_orbit(field, frame)?;
    let mu = frame.measure(omega)?;
    let mut acc = Operator::zeros(field.dim());
    for (v, m) in orbit.iter().zip(&mu) {
        if *m != 0.0 {
            acc += &v.scale_real(*m);
        }
    }
    Ok(acc)
}

/// Max over `k` in the covariance group of `‖¥(φ̂).(k, k) − ¥(φ̂)‖`.
pub fn field_invariance_residual(field: &QuantumField, frame: &BundleFrame) -> Result<f64> {
    let y = relativize_field(field, frame)?;
    let diag = field.sys_rep.restrict(&frame.inclusion)?.tensor(frame.frame_rep())?;
    let mut worst = 0.0f64;
    for k in diag.group().elements() {
        worst = worst.max(diag.act_on_operator(&y, k)?.distance(&y));
    }
    Ok(worst)
}

/// `(‖¥_ω(φ̂) − φ̂(p)‖, TV(μ_ω, δ_{σ(p)}) · 2 max_b ‖φ̂(π(b)).k(b)‖)`: the
/// localization error and its bound.
pub fn localization_error(field: &QuantumField, frame: &BundleFrame, omega: &State, p: usize) -> Result<(f64, f64)> {
    let target = frame
        .section
        .at(p)
        .and_then(|b| frame.local_index(b))
        .ok_or_else(|| Error::Section(format!("base point {p} outside the domain")))?;
    let mu = frame.measure(omega)?;
    let tv = 0.5
        * mu.iter()
            .enumerate()
            .map(|(i, m)| (m - if i == target { 1.0 } else { 0.0 }).abs())
            .sum::<f64>();
    let bound = field_orbit(field, frame)?.iter().map(Operator::norm).fold(0.0, f64::max);
    let err = restrict_field(field, frame, omega)?.distance(field.value(p)?);
    Ok((err, tv * 2.0 * bound))
}

/// An embedding of a sub-bundle `B_R → M_R` with structure group `H_R`
/// into `B → M`.
#[derive(Clone, Debug)]
pub struct BundleEmbedding {
    sub: PrincipalBundle,
    parent: PrincipalBundle,
    group: SubgroupInclusion,
    total: Vec<usize>,
    base: Vec<usize>,
}

impl BundleEmbedding {
    /// Checks injectivity, `π ∘ i = j ∘ π_R` and `i(b.h) = i(b).h`.
    pub fn new(
        sub: PrincipalBundle,
        parent: PrincipalBundle,
        group: SubgroupInclusion,
        total: Vec<usize>,
        base: Vec<usize>,
    ) -> Result<Self> {
        if **group.sub() != *sub.group || **group.parent() != *parent.group {
            return Err(Error::Bundle("group inclusion does not match the bundles".into()));
        }
        if total.len() != sub.total_len() || base.len() != sub.base_len() {
            return Err(Error::Bundle("embedding tables have the wrong size".into()));
        }
        let injective = |m: &[usize], n: usize| {
            m.iter().all(|&x| x < n) && m.iter().collect::<BTreeSet<_>>().len() == m.len()
        };
        if !injective(&total, parent.total_len()) || !injective(&base, parent.base_len()) {
            return Err(Error::Bundle("embedding is not injective".into()));
        }
        for b in 0..sub.total_len() {
            if parent.proj(total[b]) != base[sub.proj(b)] {
                return Err(Error::Bundle(format!("projection square fails at {}", sub.total[b])));
            }
            for h in sub.group.elements() {
                if total[sub.act(b, h)] != parent.act(total[b], group.embed(h)) {
                    return Err(Error::Bundle(format!("embedding not equivariant at {}", sub.total[b])));
                }
            }
        }
        Ok(Self {
            sub,
            parent,
            group,
            total,
            base,
        })
    }

    /// `U × {e} → B` along a section, as an `{e}`-bundle over the section's domain.
    pub fn along_section(parent: &PrincipalBundle, section: &LocalSection) -> Result<Self> {
        let domain = section.domain();
        let labels: Vec<String> = domain.iter().map(|&p| parent.base[p].clone()).collect();
        let trivial = Arc::new(FiniteGroup::trivial());
        let sub = PrincipalBundle::trivial(labels, trivial)?;
        let total = domain.iter().map(|&p| section.at(p).unwrap()).collect();
        Self::new(
            sub,
            parent.clone(),
            SubgroupInclusion::trivial(parent.group.clone()),
            total,
            domain,
        )
    }

    pub fn sub(&self) -> &PrincipalBundle {
        &self.sub
    }

    pub fn parent(&self) -> &PrincipalBundle {
        &self.parent
    }

    pub fn group_inclusion(&self) -> &SubgroupInclusion {
        &self.group
    }

    pub fn total_map(&self) -> &[usize] {
        &self.total
    }

    pub fn base_map(&self) -> &[usize] {
        &self.base
    }
}

/// The frame on the parent bundle with observable `F_R ∘ i⁻¹` and section
/// `i ∘ γ_R ∘ j⁻¹`, covariant under the sub-frame's covariance group.
pub fn reduce_bundle_frame(sub: &BundleFrame, emb: &BundleEmbedding) -> Result<BundleFrame> {
    if sub.bundle != emb.sub {
        return Err(Error::Precondition("sub-frame lives on a different bundle".into()));
    }
    let pairs: Vec<(usize, usize)> = sub
        .section
        .domain()
        .into_iter()
        .map(|p| (emb.base[p], emb.total[sub.section.at(p).unwrap()]))
        .collect();
    let section = LocalSection::new(&emb.parent, &pairs)?;
    let points = section.preimage(&emb.parent);
    let local = local_indexer(&points, emb.parent.total_len());
    let mut effects = vec![Operator::zeros(sub.dim()); points.len()];
    for (i, &b) in sub.points.iter().enumerate() {
        effects[local[emb.total[b]]] = sub.povm().effect(i).clone();
    }
    let labels = points.iter().map(|&b| emb.parent.total[b].clone()).collect();
    let povm = Povm::new_unchecked(SampleSpace::new(labels)?, effects);
    let inc = sub.inclusion.then(&emb.group)?;
    BundleFrame::assemble(emb.parent.clone(), section, inc, sub.frame_rep().clone(), povm)
}

/// `‖¥(φ̂) − Σ_{b ∈ π_R⁻¹(U_R)} φ̂(j(π_R(b))).k_γ(b) ⊗ F_R({b})‖`, with the
/// left side computed on the reduced frame and the right side summed over
/// the sub-bundle directly.
pub fn reduction_residual(field: &QuantumField, sub: &BundleFrame, emb: &BundleEmbedding) -> Result<f64> {
    let reduced = reduce_bundle_frame(sub, emb)?;
    let lhs = relativize_field(field, &reduced)?;
    let mut rhs = Operator::zeros(lhs.dim());
    for (i, &b) in sub.points.iter().enumerate() {
        let k = section_coordinate(&sub.bundle, &sub.section, b)?;
        let v = field.value(emb.base[sub.bundle.proj(b)])?;
        let moved = field.sys_rep.act_on_operator(v, emb.group.embed(k))?;
        rhs += &tensor(&moved, sub.povm().effect(i))?;
    }
    Ok(lhs.distance(&rhs))
}

/// Summary of the algebra generated by a set of restricted fields.
#[derive(Clone, Debug)]
pub struct LocalAlgebraReport {
    pub operators: Vec<Operator>,
    pub span_dim: usize,
    pub closed_under_products: bool,
    pub algebra_dim: usize,
}

/// `{¥_ω(φ̂)}` for each state, with the dimension of their span and of the
/// algebra they generate (unit included).
pub fn relational_local_algebra(field: &QuantumField, frame: &BundleFrame, states: &[State], tol: f64) -> Result<LocalAlgebraReport> {
    if frame.bundle.group.order() != 1 {
        return Err(Error::Precondition("relational local algebras need a trivial structure group".into()));
    }
    let operators = states
        .iter()
        .map(|w| restrict_field(field, frame, w))
        .collect::<Result<Vec<_>>>()?;
    let basis = span_basis(&operators, tol);
    let span_dim = basis.len();
    let closed = products_stay_in(&basis, field.dim(), tol);
    let algebra_dim = generated_algebra(&operators, field.dim(), tol).len();
    Ok(LocalAlgebraReport {
        operators,
        span_dim,
        closed_under_products: closed,
        algebra_dim,
    })
}

fn vectorize(a: &Operator) -> DVector<C64> {
    DVector::from_iterator(a.dim() * a.dim(), a.matrix().iter().copied())
}

fn unvectorize(v: &DVector<C64>, dim: usize) -> Operator {
    Operator::from_fn(dim, |i, j| v[i + dim * j])
}

/// Orthonormal basis (Gram-Schmidt) of the span of `ops`.
fn span_basis(ops: &[Operator], tol: f64) -> Vec<DVector<C64>> {
    let mut basis: Vec<DVector<C64>> = Vec::new();
    for a in ops {
        push_if_independent(&mut basis, vectorize(a), tol);
    }
    basis
}

fn push_if_independent(basis: &mut Vec<DVector<C64>>, mut v: DVector<C64>, tol: f64) -> bool {
    let scale = v.norm().max(1.0);
    for _ in 0..2 {
        for e in basis.iter() {
            let proj = e.dotc(&v);
            v -= e * proj;
        }
    }
    let n = v.norm();
    if n > tol * scale {
        basis.push(v / C64::new(n, 0.0));
        true
    } else {
        false
    }
}

fn products_stay_in(basis: &[DVector<C64>], dim: usize, tol: f64) -> bool {
    let ops: Vec<Operator> = basis.iter().map(|v| unvectorize(v, dim)).collect();
    let mut probe = basis.to_vec();
    for a in &ops {
        for b in &ops {
            if push_if_independent(&mut probe, vectorize(&(a * b)), tol) {
                return false;
            }
        }
    }
    true
}

/// Basis of the unital algebra generated by `ops`.
fn generated_algebra(ops: &[Operator], dim: usize, tol: f64) -> Vec<DVector<C64>> {
    let mut basis = span_basis(ops, tol);
    push_if_independent(&mut basis, vectorize(&Operator::identity(dim)), tol);
    let mut start = 0;
    loop {
        let before = basis.len();
        let ops: Vec<Operator> = basis.iter().map(|v| unvectorize(v, dim)).collect();
        for i in 0..ops.len() {
            for j in 0..ops.len() {
                if i < start && j < start {
                    continue;
                }
                push_if_independent(&mut basis, vectorize(&(&ops[i] * &ops[j])), tol);
            }
        }
        if basis.len() == before {
            return basis;
        }
        start = before;
    }
}

/// A frame morphism `(ψ, θ): R → R'`.
#[derive(Clone, Debug)]
pub struct FrameMorphism {
    psi: Channel,
    theta: Vec<usize>,
    base_map: Vec<Option<usize>>,
}

impl FrameMorphism {
    /// `theta[i]` is the image (a total-space point of the target bundle) of
    /// the `i`-th outcome point of `from`. Verifies surjectivity onto
    /// `π'⁻¹(U')`, fiber preservation, equivariance of `θ`, the commuting
    /// square `θ ∘ σ = σ' ∘ φ_θ`, `E_{R'} = ψ ∘ E_R ∘ θ⁻¹` and equivariance
    /// of `ψ`.
    pub fn new(psi: Channel, theta: Vec<usize>, from: &BundleFrame, to: &BundleFrame, tol: f64) -> Result<Self> {
        let (b, b2) = (&from.bundle, &to.bundle);
        if *b.group != *b2.group {
            return Err(Error::Precondition("frames have different structure groups".into()));
        }
        if theta.len() != from.points.len() {
            return Err(Error::Precondition("θ must be defined on all of π⁻¹(U)".into()));
        }
        let mut hit = vec![false; to.points.len()];
        for &t in &theta {
            let i = to
                .local_index(t)
                .ok_or_else(|| Error::Precondition(format!("θ leaves π'⁻¹(U') at point {t}")))?;
            hit[i] = true;
        }
        if hit.contains(&false) {
            return Err(Error::Precondition("θ is not surjective onto π'⁻¹(U')".into()));
        }
        let mut base_map = vec![None; b.base_len()];
        for (i, &x) in from.points.iter().enumerate() {
            let image = b2.proj(theta[i]);
            match base_map[b.proj(x)] {
                None => base_map[b.proj(x)] = Some(image),
                Some(q) if q != image => {
                    return Err(Error::Precondition("θ does not preserve fibers".into()));
                }
                _ => {}
            }
            for h in b.group.elements() {
                let j = from.local_index(b.act(x, h)).unwrap();
                if theta[j] != b2.act(theta[i], h) {
                    return Err(Error::Precondition("θ is not equivariant".into()));
                }
            }
        }
        for p in from.section.domain() {
            let s = from.section.at(p).unwrap();
            let q = base_map[p].unwrap();
            if to.section.at(q) != Some(theta[from.local_index(s).unwrap()]) {
                return Err(Error::Precondition(format!(
                    "θ ∘ σ ≠ σ' ∘ φ_θ at {}",
                    b.base[p]
                )));
            }
        }
        if from.inclusion.images() != to.inclusion.images() {
            return Err(Error::Precondition("frames have different covariance groups".into()));
        }
        let violation = channel_equivariance_violation(&psi, from.frame_rep(), to.frame_rep())?;
        if violation > tol {
            return Err(Error::Precondition(format!(
                "channel is not equivariant (violation {violation:e})"
            )));
        }
        let mapped = compose_with_channel(&psi, from.povm())?;
        let mut pushed = vec![Operator::zeros(to.dim()); to.points.len()];
        for (i, e) in mapped.effects().enumerate() {
            pushed[to.local_index(theta[i]).unwrap()] += e;
        }
        let mismatch = pushed
            .iter()
            .zip(to.povm().effects())
            .map(|(x, y)| x.distance(y))
            .fold(0.0, f64::max);
        if mismatch > tol {
            return Err(Error::Precondition(format!(
                "E_R' differs from ψ ∘ E_R ∘ θ⁻¹ by {mismatch:e}"
            )));
        }
        Ok(Self { psi, theta, base_map })
    }

    /// `θ` given on total-space points of the source bundle.
    pub fn from_point_map(psi: Channel, map: &[usize], from: &BundleFrame, to: &BundleFrame, tol: f64) -> Result<Self> {
        let theta = from
            .points
            .iter()
            .map(|&b| {
                map.get(b)
                    .copied()
                    .ok_or_else(|| Error::Precondition(format!("θ undefined at point {b}")))
            })
            .collect::<Result<_>>()?;
        Self::new(psi, theta, from, to, tol)
    }

    pub fn psi(&self) -> &Channel {
        &self.psi
    }

    pub fn theta(&self) -> &[usize] {
        &self.theta
    }

    /// `φ_θ = π' ∘ θ ∘ π⁻¹` on `U`.
    pub fn base_map(&self) -> &[Option<usize>] {
        &self.base_map
    }
}

/// `‖¥^{R'}(φ̂) − (id ⊗ ψ)(¥^R(φ̂ ∘ φ_θ))‖`.
pub fn apply_frame_morphism(m: &FrameMorphism, field: &QuantumField, from: &BundleFrame, to: &BundleFrame) -> Result<f64> {
    let lhs = relativize_field(field, to)?;
    let pulled = field.pull_back(&m.base_map);
    let rhs = m.psi.extend_left(field.dim()).heisenberg(&relativize_field(&pulled, from)?)?;
    Ok(lhs.distance(&rhs))
}

/// The permutation unitary `V|b> = |θ(b)>` between ideal frames of equal
/// size, as the channel `a ↦ V a V*` carrying `E_R` to `E_R ∘ θ⁻¹`.
pub fn permutation_channel(theta_local: &[usize], tol: f64) -> Result<Channel> {
    let n = theta_local.len();
    let v = Operator::from_fn(n, |i, j| {
        if theta_local[j] == i {
            C64::new(1.0, 0.0)
        } else {
            C64::default()
        }
    });
    Channel::unitary(&v.adjoint(), tol)
}

/// Outcome indices in `to` of the images of `from`'s points under `map`.
pub fn local_theta(map: &[usize], from: &BundleFrame, to: &BundleFrame) -> Result<Vec<usize>> {
    from.points
        .iter()
        .map(|&b| {
            map.get(b)
                .and_then(|&t| to.local_index(t))
                .ok_or_else(|| Error::Precondition(format!("θ undefined or off-domain at point {b}")))
        })
        .collect()
}

/// Transition elements `t(p)` with `σ'(p) = σ(p).t(p)` on `U ∩ U'`.
pub fn transition_function(bundle: &PrincipalBundle, sigma: &LocalSection, sigma2: &LocalSection) -> Vec<(usize, usize)> {
    sigma
        .domain()
        .into_iter()
        .filter_map(|p| {
            let (a, b) = (sigma.at(p)?, sigma2.at(p)?);
            Some((p, bundle.element_between(a, b)?))
        })
        .collect()
}

/// Number of overlap points fixed by `φ_θ` at which `θ(σ(p)) ≠ σ(p).t(p)`.
pub fn gluing_violations(m: &FrameMorphism, from: &BundleFrame, to: &BundleFrame) -> usize {
    if from.bundle != to.bundle {
        return 0;
    }
    transition_function(&from.bundle, &from.section, &to.section)
        .into_iter()
        .filter(|&(p, t)| {
            if m.base_map[p] != Some(p) {
                return false;
            }
            let s = from.section.at(p).unwrap();
            m.theta[from.local_index(s).unwrap()] != from.bundle.act(s, t)
        })
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-12;

    fn z2() -> Arc<FiniteGroup> {
        Arc::new(FiniteGroup::cyclic(2))
    }

    fn flip_rep() -> UnitaryRep {
        UnitaryRep::new(z2(), vec![Operator::identity(2), Operator::pauli_x()], TOL).unwrap()
    }

    fn base(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("p{i}")).collect()
    }

    #[test]
    fn orientation_examples() {
        let bundle = PrincipalBundle::trivial(base(2), z2()).unwrap();
        let on = LocalSection::new(&bundle, &[(0, 0), (1, 2)]).unwrap();
        assert_eq!(orientation(&bundle, &on, 2).unwrap(), 0);
        let shifted = LocalSection::new(&bundle, &[(0, 1)]).unwrap();
        assert_eq!(orientation(&bundle, &shifted, 0).unwrap(), 1);
        assert!(orientation(&bundle, &shifted, 2).is_err());
    }

    #[test]
    fn orientation_consistency_on_s3() {
        let s3 = Arc::new(FiniteGroup::symmetric(3));
        let bundle = PrincipalBundle::trivial(base(1), s3.clone()).unwrap();
        let sec = LocalSection::new(&bundle, &[(0, 4)]).unwrap();
        for b in 0..6 {
            let h = orientation(&bundle, &sec, b).unwrap();
            assert_eq!(bundle.act(b, h), 4);
            for k in s3.elements() {
                let hk = orientation(&bundle, &sec, bundle.act(b, k)).unwrap();
                assert_eq!(hk, s3.mul(s3.inv(k), h));
                let ck = section_coordinate(&bundle, &sec, bundle.act(b, k)).unwrap();
                assert_eq!(ck, s3.mul(section_coordinate(&bundle, &sec, b).unwrap(), k));
            }
        }
    }

    #[test]
    fn bundle_validation() {
        let g = z2();
        let labels = vec!["a".to_string(), "b".to_string()];
        // action fixing a point is not free
        let bad = PrincipalBundle::new(base(1), g.clone(), labels.clone(), vec![0, 0], vec![vec![0, 0], vec![1, 1]]);
        assert!(matches!(bad, Err(Error::Bundle(_))));
        // fiber split across base points
        let split = PrincipalBundle::new(base(2), g, labels, vec![0, 1], vec![vec![0, 1], vec![1, 0]]);
        assert!(matches!(split, Err(Error::Bundle(_))));
    }

    #[test]
    fn single_point_z2_relativization() {
        let bundle = PrincipalBundle::trivial(base(1), z2()).unwrap();
        let sec = LocalSection::new(&bundle, &[(0, 0)]).unwrap();
        let frame = BundleFrame::ideal(bundle, sec).unwrap();
        let field = QuantumField::total(vec![Operator::pauli_z()], flip_rep()).unwrap();
        let y = relativize_field(&field, &frame).unwrap();
        assert!(y.distance(&Operator::pauli_z().kron(&Operator::diagonal(&[1.0, -1.0]))) < TOL);
        assert!(field_invariance_residual(&field, &frame).unwrap() < TOL);
        assert!(frame.is_sharp(TOL));
    }

    #[test]
    fn restriction_examples() {
        let bundle = PrincipalBundle::trivial(base(1), z2()).unwrap();
        let sec = LocalSection::new(&bundle, &[(0, 0)]).unwrap();
        let frame = BundleFrame::ideal(bundle, sec).unwrap();
        let z = Operator::pauli_z();
        let field = QuantumField::total(vec![z.clone()], flip_rep()).unwrap();
        assert!(restrict_field(&field, &frame, &State::basis(2, 0)).unwrap().distance(&z) < TOL);
        assert!(restrict_field(&field, &frame, &State::basis(2, 1)).unwrap().distance(&-&z) < TOL);
        assert!(restrict_field(&field, &frame, &State::maximally_mixed(2)).unwrap().max_abs() < TOL);
        let omega = State::mix(0.9, &State::basis(2, 0), &State::maximally_mixed(2)).unwrap();
        let (err, bound) = localization_error(&field, &frame, &omega, 0).unwrap();
        assert!(err <= bound + TOL);
    }

    #[test]
    fn reduction_along_section_is_smearing() {
        let bundle = PrincipalBundle::trivial(base(2), z2()).unwrap();
        let sec = LocalSection::new(&bundle, &[(0, 1), (1, 2)]).unwrap();
        let emb = BundleEmbedding::along_section(&bundle, &sec).unwrap();
        let sub_sec = LocalSection::new(emb.sub(), &[(0, 0), (1, 1)]).unwrap();
        let sub = BundleFrame::ideal(emb.sub().clone(), sub_sec).unwrap();
        let field = QuantumField::total(vec![Operator::pauli_z(), Operator::pauli_y()], flip_rep()).unwrap();
        let reduced = reduce_bundle_frame(&sub, &emb).unwrap();
        let y = relativize_field(&field, &reduced).unwrap();
        let expected = Operator::pauli_z().kron(&Operator::basis_projector(2, 0))
            + Operator::pauli_y().kron(&Operator::basis_projector(2, 1));
        assert!(y.distance(&expected) < TOL);
        assert!(reduction_residual(&field, &sub, &emb).unwrap() < TOL);
    }

    #[test]
    fn z2_sub_bundle_of_z4_bundle() {
        let z4 = Arc::new(FiniteGroup::cyclic(4));
        let parent = PrincipalBundle::trivial(base(2), z4.clone()).unwrap();
        let sub = PrincipalBundle::trivial(base(2), z2()).unwrap();
        let inc = SubgroupInclusion::new(z2(), z4.clone(), vec![0, 2]).unwrap();
        let total = vec![0, 2, 4, 6];
        let emb = BundleEmbedding::new(sub.clone(), parent, inc, total, vec![0, 1]).unwrap();
        let sec = LocalSection::new(&sub, &[(0, 1), (1, 2)]).unwrap();
        let frame = BundleFrame::ideal(sub, sec).unwrap();
        let rep = UnitaryRep::left_regular(z4);
        let field = QuantumField::total(
            vec![Operator::diagonal(&[1.0, 2.0, 3.0, 4.0]), Operator::matrix_unit(4, 0, 1) + Operator::matrix_unit(4, 1, 0)],
            rep,
        )
        .unwrap();
        assert!(reduction_residual(&field, &frame, &emb).unwrap() < TOL);
        let reduced = reduce_bundle_frame(&frame, &emb).unwrap();
        assert!(reduced.covariance_violation() < TOL);
        assert!(field_invariance_residual(&field, &reduced).unwrap() < TOL);
    }

    #[test]
    fn local_algebra_of_two_point_base() {
        let trivial = Arc::new(FiniteGroup::trivial());
        let bundle = PrincipalBundle::trivial(base(2), trivial.clone()).unwrap();
        let sec = LocalSection::new(&bundle, &[(0, 0), (1, 1)]).unwrap();
        let frame = BundleFrame::ideal(bundle, sec).unwrap();
        let field = QuantumField::total(
            vec![Operator::pauli_z(), Operator::pauli_x()],
            UnitaryRep::trivial(trivial, 2),
        )
        .unwrap();
        let states = [State::basis(2, 0), State::basis(2, 1), State::maximally_mixed(2)];
        let report = relational_local_algebra(&field, &frame, &states, 1e-10).unwrap();
        assert_eq!(report.span_dim, 2);
        assert!(!report.closed_under_products);
        assert_eq!(report.algebra_dim, 4);

        let single = relational_local_algebra(&field, &frame, &states[..1], 1e-10).unwrap();
        assert_eq!(single.span_dim, 1);
        assert!(single.operators[0].distance(&Operator::pauli_z()) < TOL);
    }

    #[test]
    fn morphisms() {
        let g = z2();
        let bundle = PrincipalBundle::trivial(base(2), g.clone()).unwrap();
        let sec = LocalSection::new(&bundle, &[(0, 0), (1, 2)]).unwrap();
        let frame = BundleFrame::ideal(bundle.clone(), sec.clone()).unwrap();
        let field = QuantumField::total(vec![Operator::pauli_z(), Operator::pauli_y()], flip_rep()).unwrap();

        let id = FrameMorphism::new(Channel::identity(4), (0..4).collect(), &frame, &frame, TOL).unwrap();
        assert!(apply_frame_morphism(&id, &field, &frame, &frame).unwrap() < TOL);

        // gauge change: left translation by the flip on every fiber
        let theta = [1, 0, 3, 2];
        let sec2 = LocalSection::new(&bundle, &[(0, 1), (1, 3)]).unwrap();
        let target = BundleFrame::ideal(bundle.clone(), sec2).unwrap();
        let lt = local_theta(&theta, &frame, &target).unwrap();
        let psi = permutation_channel(&lt, TOL).unwrap();
        let gauge = FrameMorphism::from_point_map(psi, &theta, &frame, &target, TOL).unwrap();
        assert!(apply_frame_morphism(&gauge, &field, &frame, &target).unwrap() < TOL);
        assert_eq!(gluing_violations(&gauge, &frame, &target), 0);

        // relocation of U = {p0} to U' = {p1}
        let u = BundleFrame::ideal(bundle.clone(), LocalSection::new(&bundle, &[(0, 0)]).unwrap()).unwrap();
        let u2 = BundleFrame::ideal(bundle.clone(), LocalSection::new(&bundle, &[(1, 2)]).unwrap()).unwrap();
        let reloc = FrameMorphism::from_point_map(Channel::identity(2), &[2, 3, 0, 0], &u, &u2, TOL).unwrap();
        assert_eq!(reloc.base_map()[0], Some(1));
        assert!(apply_frame_morphism(&reloc, &field, &u, &u2).unwrap() < TOL);

        // a channel that breaks the commuting square is rejected
        let bad = FrameMorphism::new(Channel::identity(4), vec![1, 0, 3, 2], &frame, &frame, TOL);
        assert!(matches!(bad, Err(Error::Precondition(_))));
    }
}

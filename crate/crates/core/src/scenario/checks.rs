//! The registry of check kinds a scenario can invoke.
//!
//! A check is a JSON object with a `kind`, an optional `name` and
//! `tolerance`, and the arguments its kind declares. Object arguments take
//! an id or an inline declaration. Every check yields a residual; most pass
//! when the residual is within tolerance, a few compare a discrete answer
//! (a classification, a membership, a sharpness flag) instead.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde_json::{json, Map, Value};

use super::env::{self, Env, Kind, LoadError};
use crate::bundle::{
    apply_frame_morphism, field_invariance_residual, gluing_violations, localization_error, reduction_residual as bundle_reduction_residual,
    relational_local_algebra, relativize_field, restrict_field, section_coordinate, BundleFrame, QuantumField,
};
use crate::error::Error;
use crate::geometry::{
    gr_coupled_relativize, gr_reduction_residual, indefinite_geometry_probabilities, isometric_frame_transform, metric_from_section,
    path_restricted_observable, restrict_in_section_metric, stratify, EquationWeight, FrameBundleModel, MetricSector, PathVariant,
};
use crate::group_frame::{
    duality_residual, external_frame_transform, factorization_residual, frame_covariance_residual, gauge_extended_local_observable,
    invariance_residual, localizability_probe, orbit_residual, reduction_residual, relational_local_observable, relative_state,
    relative_state_on_torsor, relativize, restrict, unitality_residual, GroupFrame, SystemAction,
};
use crate::integral::{
    bilinear_pairing, change_of_variables_check, channel_interchange_check, integral_pairing, matrix_unit_pairing_residual,
    norm_bound_excess, ov_integrate, pairing_residual, uniqueness_residual, OperatorField,
};
use crate::measure::{born_measure, check_covariance, compose_with_channel, push_forward, CovariantPovm, SampleSpace, SpaceAction};
use crate::operator::{expect, partial_trace, Operator, State, Subsystem, C64};
use crate::pde::{
    duality_residual as lift_duality_residual, kernel_basis, kernel_membership, lift_apply, lifted_kernel_preservation,
    state_duality_residual, DifferenceOperator, ScalarAction,
};
use crate::symmetry::Torsor;

/// Why a check could not produce a residual.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckFailure(pub String);

impl fmt::Display for CheckFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<Error> for CheckFailure {
    fn from(e: Error) -> Self {
        Self(e.to_string())
    }
}

impl From<LoadError> for CheckFailure {
    fn from(e: LoadError) -> Self {
        Self(e.to_string())
    }
}

/// The result of running one check.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub residual: f64,
    /// Overrides the residual-against-tolerance verdict when set.
    pub pass: Option<bool>,
    pub detail: Option<Value>,
}

impl Outcome {
    fn residual(r: f64) -> Self {
        Self {
            residual: r,
            pass: None,
            detail: None,
        }
    }

    fn with_detail(mut self, d: Value) -> Self {
        self.detail = Some(d);
        self
    }

    fn verdict(mut self, pass: bool) -> Self {
        self.pass = Some(pass);
        self
    }
}

type Run = std::result::Result<Outcome, CheckFailure>;

/// How an argument is given.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArgKind {
    /// An object of the given kind, by id or inline.
    Ref(Kind),
    /// A list of such objects.
    RefList(Kind),
    /// A plain JSON value interpreted by the check.
    Value,
}

#[derive(Clone, Copy, Debug)]
pub struct ArgSpec {
    pub name: &'static str,
    pub kind: ArgKind,
    pub required: bool,
}

const fn req(name: &'static str, kind: ArgKind) -> ArgSpec {
    ArgSpec { name, kind, required: true }
}

const fn opt(name: &'static str, kind: ArgKind) -> ArgSpec {
    ArgSpec { name, kind, required: false }
}

use ArgKind::{Ref, RefList, Value as Val};

/// One registered check kind.
pub struct CheckKind {
    pub name: &'static str,
    pub module: &'static str,
    pub summary: &'static str,
    pub args: &'static [ArgSpec],
    pub run: fn(&Args) -> Run,
}

impl fmt::Debug for CheckKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CheckKind").field("name", &self.name).field("module", &self.module).finish()
    }
}

/// Keys of a check object that are not arguments.
pub const RESERVED: [&str; 3] = ["kind", "name", "tolerance"];

/// Arguments of one check, resolved against an environment.
pub struct Args<'a> {
    env: &'a Env,
    map: &'a Map<String, Value>,
    path: String,
    pub tol: f64,
}

macro_rules! ref_arg {
    ($name:ident, $opt:ident, $resolve:ident, $ty:ty) => {
        pub fn $name(&self, key: &str) -> std::result::Result<Arc<$ty>, CheckFailure> {
            Ok(self.env.$resolve(self.raw(key)?, &self.at(key))?)
        }

        pub fn $opt(&self, key: &str) -> std::result::Result<Option<Arc<$ty>>, CheckFailure> {
            match self.map.get(key) {
                None => Ok(None),
                Some(v) => Ok(Some(self.env.$resolve(v, &self.at(key))?)),
            }
        }
    };
}

impl<'a> Args<'a> {
    pub fn new(env: &'a Env, map: &'a Map<String, Value>, path: String, tol: f64) -> Self {
        Self { env, map, path, tol }
    }

    fn at(&self, key: &str) -> String {
        format!("{}.{key}", self.path)
    }

    fn raw(&self, key: &str) -> std::result::Result<&Value, CheckFailure> {
        self.map
            .get(key)
            .ok_or_else(|| CheckFailure(format!("{}: missing `{key}`", self.path)))
    }

    ref_arg!(operator, operator_opt, operator_ref, Operator);
    ref_arg!(state, state_opt, state_ref, State);
    ref_arg!(povm, povm_opt, povm_ref, crate::measure::Povm);
    ref_arg!(channel, channel_opt, channel_ref, crate::operator::Channel);
    ref_arg!(field, field_opt, field_ref, OperatorField);
    ref_arg!(rep, rep_opt, rep_ref, crate::symmetry::UnitaryRep);
    ref_arg!(group, group_opt, group_ref, crate::symmetry::FiniteGroup);
    ref_arg!(inclusion, inclusion_opt, inclusion_ref, crate::symmetry::SubgroupInclusion);
    ref_arg!(semidirect, semidirect_opt, semidirect_ref, crate::symmetry::SemidirectProduct);
    ref_arg!(frame, frame_opt, frame_ref, GroupFrame);
    ref_arg!(bundle_frame, bundle_frame_opt, bundle_frame_ref, BundleFrame);
    ref_arg!(quantum_field, quantum_field_opt, quantum_field_ref, QuantumField);
    ref_arg!(morphism, morphism_opt, morphism_ref, env::MorphismEntry);
    ref_arg!(model, model_opt, model_ref, FrameBundleModel);
    ref_arg!(difference_operator, difference_operator_opt, difference_operator_ref, DifferenceOperator);
    ref_arg!(path_frame, path_frame_opt, path_ref, env::PathEntry);
    ref_arg!(section, section_opt, section_ref, env::SectionEntry);
    ref_arg!(embedding, embedding_opt, embedding_ref, crate::bundle::BundleEmbedding);

    pub fn system(&self, key: &str) -> std::result::Result<SystemAction, CheckFailure> {
        Ok(SystemAction::new((*self.rep(key)?).clone()))
    }

    pub fn states(&self, key: &str) -> std::result::Result<Vec<State>, CheckFailure> {
        let path = self.at(key);
        env::arr(self.raw(key)?, &path)?
            .iter()
            .enumerate()
            .map(|(i, v)| Ok((*self.env.state_ref(v, &format!("{path}[{i}]"))?).clone()))
            .collect()
    }

    pub fn usize(&self, key: &str) -> std::result::Result<usize, CheckFailure> {
        Ok(env::usize_of(self.raw(key)?, &self.at(key))?)
    }

    pub fn usize_opt(&self, key: &str) -> std::result::Result<Option<usize>, CheckFailure> {
        self.map.get(key).map(|v| Ok(env::usize_of(v, &self.at(key))?)).transpose()
    }

    pub fn f64(&self, key: &str) -> std::result::Result<f64, CheckFailure> {
        Ok(env::f64_of(self.raw(key)?, &self.at(key))?)
    }

    pub fn complex_or(&self, key: &str, default: C64) -> std::result::Result<C64, CheckFailure> {
        match self.map.get(key) {
            None => Ok(default),
            Some(v) => Ok(env::complex_of(v, &self.at(key))?),
        }
    }

    pub fn bool_or(&self, key: &str, default: bool) -> std::result::Result<bool, CheckFailure> {
        match self.map.get(key) {
            None => Ok(default),
            Some(Value::Bool(b)) => Ok(*b),
            Some(_) => Err(CheckFailure(format!("{}: expected a boolean", self.at(key)))),
        }
    }

    pub fn str_opt(&self, key: &str) -> std::result::Result<Option<&str>, CheckFailure> {
        self.map.get(key).map(|v| Ok(env::str_of(v, &self.at(key))?)).transpose()
    }

    pub fn usize_list(&self, key: &str) -> std::result::Result<Vec<usize>, CheckFailure> {
        Ok(env::usize_list(self.raw(key)?, &self.at(key))?)
    }

    pub fn f64_list(&self, key: &str) -> std::result::Result<Vec<f64>, CheckFailure> {
        Ok(env::f64_list(self.raw(key)?, &self.at(key))?)
    }

    pub fn f64_list_opt(&self, key: &str) -> std::result::Result<Option<Vec<f64>>, CheckFailure> {
        self.map.get(key).map(|v| Ok(env::f64_list(v, &self.at(key))?)).transpose()
    }

    /// A group element by label or index.
    pub fn element(&self, group: &crate::symmetry::FiniteGroup, key: &str) -> std::result::Result<usize, CheckFailure> {
        Ok(self.env.element(group, self.raw(key)?, &self.at(key))?)
    }

    /// A base point of a bundle by label or index.
    pub fn base_point(&self, bundle: &crate::bundle::PrincipalBundle, key: &str) -> std::result::Result<usize, CheckFailure> {
        let v = self.raw(key)?;
        let found = match v {
            Value::String(s) => bundle.base_index(s),
            _ => v.as_u64().map(|x| x as usize).filter(|&x| x < bundle.base_len()),
        };
        found.ok_or_else(|| CheckFailure(format!("{}: no base point {v}", self.at(key))))
    }
}

fn precondition(msg: impl Into<String>) -> CheckFailure {
    CheckFailure(msg.into())
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> std::result::Result<f64, CheckFailure> {
    if a.len() != b.len() {
        return Err(precondition(format!("expected {} values, computed {}", b.len(), a.len())));
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}

fn compare_operator(a: &Args, computed: &Operator) -> Run {
    let expected = a.operator("expected")?;
    if expected.dim() != computed.dim() {
        return Err(precondition(format!(
            "expected operator has dimension {}, computed {}",
            expected.dim(),
            computed.dim()
        )));
    }
    Ok(Outcome::residual(computed.distance(&expected)))
}

// ---- measure ------------------------------------------------------------

fn born(a: &Args) -> Run {
    let mu = born_measure(&*a.povm("povm")?, &*a.state("state")?)?;
    let detail = json!(mu);
    let r = match a.f64_list_opt("expected")? {
        Some(e) => max_abs_diff(&mu, &e)?,
        None => {
            let neg = mu.iter().map(|m| (-m).max(0.0)).fold(0.0, f64::max);
            (mu.iter().sum::<f64>() - 1.0).abs().max(neg)
        }
    };
    Ok(Outcome::residual(r).with_detail(detail))
}

fn covariance(a: &Args) -> Run {
    let povm = a.povm("povm")?;
    let rep = a.rep("rep")?;
    let group = rep.group().clone();
    let action = match a.str_opt("action")? {
        None | Some("translation") => SpaceAction::right_translation(group),
        Some("trivial") => SpaceAction::trivial(group, povm.space().len()),
        Some(other) => return Err(precondition(format!("unknown space action {other:?}"))),
    };
    let cp = CovariantPovm::new((*povm).clone(), (*rep).clone(), action)?;
    Ok(Outcome::residual(check_covariance(&cp)))
}

fn normalization(a: &Args) -> Run {
    let povm = a.povm("povm")?;
    let mut sum = Operator::zeros(povm.dim());
    for e in povm.effects() {
        sum += e;
    }
    Ok(Outcome::residual(sum.distance(&Operator::identity(povm.dim()))))
}

fn push_forward_check(a: &Args) -> Run {
    let povm = a.povm("povm")?;
    let state = a.state("state")?;
    let map = a.usize_list("map")?;
    let target = SampleSpace::indexed(a.usize("points")?);
    let pushed = push_forward(&povm, &target, &map)?;
    let lhs = born_measure(&pushed, &state)?;
    let mu = born_measure(&povm, &state)?;
    let mut rhs = vec![0.0; target.len()];
    for (x, &y) in map.iter().enumerate() {
        rhs[y] += mu[x];
    }
    Ok(Outcome::residual(max_abs_diff(&lhs, &rhs)?))
}

fn channel_composition(a: &Args) -> Run {
    let psi = a.channel("channel")?;
    let povm = a.povm("povm")?;
    let rho = a.state("state")?;
    let lhs = born_measure(&compose_with_channel(&psi, &povm)?, &rho)?;
    let rhs = born_measure(&povm, &psi.schrodinger(&rho)?)?;
    Ok(Outcome::residual(max_abs_diff(&lhs, &rhs)?))
}

fn born_affinity(a: &Args) -> Run {
    let povm = a.povm("povm")?;
    let (s, t) = (a.state("a")?, a.state("b")?);
    let w = a.f64("weight")?;
    let mixed = born_measure(&povm, &State::mix(w, &s, &t)?)?;
    let (ms, mt) = (born_measure(&povm, &s)?, born_measure(&povm, &t)?);
    let rhs: Vec<f64> = ms.iter().zip(&mt).map(|(x, y)| w * x + (1.0 - w) * y).collect();
    Ok(Outcome::residual(max_abs_diff(&mixed, &rhs)?))
}

fn sharpness(a: &Args) -> Run {
    let povm = a.povm("povm")?;
    let want = a.bool_or("sharp", true)?;
    let worst = povm.effects().map(Operator::idempotency_violation).fold(0.0, f64::max);
    let pass = (worst <= a.tol) == want;
    Ok(Outcome::residual(worst).verdict(pass).with_detail(json!({ "sharp": worst <= a.tol })))
}

// ---- operator -----------------------------------------------------------

fn channel_duality(a: &Args) -> Run {
    let psi = a.channel("channel")?;
    let rho = a.state("state")?;
    let op = a.operator("operator")?;
    let lhs = expect(&psi.schrodinger(&rho)?, &op)?;
    let rhs = expect(&rho, &psi.heisenberg(&op)?)?;
    Ok(Outcome::residual((lhs - rhs).norm()))
}

fn partial_trace_check(a: &Args) -> Run {
    let (s, t) = (a.state("a")?, a.state("b")?);
    let joint = s.tensor(&t)?;
    let dims = (s.dim(), t.dim());
    let first = partial_trace(joint.op(), Subsystem::Second, dims)?.distance(s.op());
    let second = partial_trace(joint.op(), Subsystem::First, dims)?.distance(t.op());
    Ok(Outcome::residual(first.max(second)))
}

// ---- symmetry -----------------------------------------------------------

fn homomorphism(a: &Args) -> Run {
    Ok(Outcome::residual(a.rep("rep")?.homomorphism_violation()))
}

fn group_axioms(a: &Args) -> Run {
    let g = a.group("group")?;
    let mut bad = 0usize;
    for x in g.elements() {
        if g.mul(x, g.inv(x)) != g.identity() || g.mul(g.identity(), x) != x {
            bad += 1;
        }
        for y in g.elements() {
            for z in g.elements() {
                if g.mul(g.mul(x, y), z) != g.mul(x, g.mul(y, z)) {
                    bad += 1;
                }
            }
        }
    }
    Ok(Outcome::residual(bad as f64).with_detail(json!({ "order": g.order(), "abelian": g.is_abelian() })))
}

fn semidirect_factorization(a: &Args) -> Run {
    let sd = a.semidirect("semidirect")?;
    let bad = sd
        .product()
        .elements()
        .filter(|&g| {
            let (t, l) = sd.factorize(g);
            sd.element(t, l) != g
        })
        .count();
    Ok(Outcome::residual(bad as f64))
}

// ---- integral -----------------------------------------------------------

fn pairing(a: &Args) -> Run {
    let r = pairing_residual(&*a.field("field")?, &*a.povm("povm")?, &*a.state("rho")?, &*a.state("omega")?)?;
    Ok(Outcome::residual(r))
}

fn pairing_matrix_units(a: &Args) -> Run {
    Ok(Outcome::residual(matrix_unit_pairing_residual(&*a.field("field")?, &*a.povm("povm")?)?))
}

fn change_of_variables(a: &Args) -> Run {
    let r = change_of_variables_check(&*a.field("field")?, &a.usize_list("map")?, &*a.povm("povm")?)?;
    Ok(Outcome::residual(r))
}

fn channel_interchange(a: &Args) -> Run {
    let r = channel_interchange_check(&*a.field("field")?, &*a.povm("povm")?, &*a.channel("channel")?)?;
    Ok(Outcome::residual(r))
}

fn uniqueness(a: &Args) -> Run {
    Ok(Outcome::residual(uniqueness_residual(&*a.field("field")?)?))
}

fn ov_integral(a: &Args) -> Run {
    compare_operator(a, &ov_integrate(&*a.field("field")?, &*a.povm("povm")?)?)
}

fn norm_bound(a: &Args) -> Run {
    Ok(Outcome::residual(norm_bound_excess(&*a.field("field")?, &*a.povm("povm")?)?))
}

fn bilinearity(a: &Args) -> Run {
    let f = a.field("field")?;
    let g = a.field("other")?;
    let e = a.povm("povm")?;
    let (rho, omega) = (a.state("rho")?, a.state("omega")?);
    let one = C64::new(1.0, 0.0);
    let (x, y) = (a.complex_or("a", one)?, a.complex_or("b", one)?);
    let combined = f.linear_combination(x, &g, y)?;
    let lhs = integral_pairing(&combined, &e, &rho, &omega)?;
    let rhs = x * integral_pairing(&f, &e, &rho, &omega)? + y * integral_pairing(&g, &e, &rho, &omega)?;
    let (r, w) = (rho.op(), omega.op());
    let (r2, w2) = (r * r, w * w);
    let in_system = (bilinear_pairing(&f, &e, &(r.scale(x) + r2.scale(y)), w)?
        - (x * bilinear_pairing(&f, &e, r, w)? + y * bilinear_pairing(&f, &e, &r2, w)?))
    .norm();
    let in_frame = (bilinear_pairing(&f, &e, r, &(w.scale(x) + w2.scale(y)))?
        - (x * bilinear_pairing(&f, &e, r, w)? + y * bilinear_pairing(&f, &e, r, &w2)?))
    .norm();
    let in_states = in_system.max(in_frame);
    Ok(Outcome::residual((lhs - rhs).norm().max(in_states)))
}

// ---- group frames -------------------------------------------------------

fn relative_state_check(a: &Args) -> Run {
    let frame = a.frame("frame")?;
    let s = relative_state(&*a.state("rho")?, &*a.state("omega")?, &frame, &a.system("system")?)?;
    let expected = a.state("expected")?;
    if expected.dim() != s.dim() {
        return Err(precondition("expected state has the wrong dimension"));
    }
    Ok(Outcome::residual(s.op().distance(expected.op())))
}

fn relativize_check(a: &Args) -> Run {
    let y = relativize(&*a.operator("operator")?, &*a.frame("frame")?, &a.system("system")?)?;
    compare_operator(a, &y)
}

fn duality(a: &Args) -> Run {
    let r = duality_residual(
        &*a.state("rho")?,
        &*a.state("omega")?,
        &*a.operator("operator")?,
        &*a.frame("frame")?,
        &a.system("system")?,
    )?;
    Ok(Outcome::residual(r))
}

fn orbit(a: &Args) -> Run {
    let r = orbit_residual(
        &*a.state("rho")?,
        &*a.state("omega")?,
        &*a.operator("operator")?,
        &*a.frame("frame")?,
        &a.system("system")?,
    )?;
    Ok(Outcome::residual(r))
}

fn invariance(a: &Args) -> Run {
    Ok(Outcome::residual(invariance_residual(&*a.operator("operator")?, &*a.frame("frame")?, &a.system("system")?)?))
}

fn frame_covariance(a: &Args) -> Run {
    let r = frame_covariance_residual(&*a.state("rho")?, &*a.state("omega")?, &*a.frame("frame")?, &a.system("system")?)?;
    Ok(Outcome::residual(r))
}

fn restriction(a: &Args) -> Run {
    let y = restrict(&*a.operator("operator")?, &*a.state("omega")?, &*a.frame("frame")?, &a.system("system")?)?;
    compare_operator(a, &y)
}

fn factorization(a: &Args) -> Run {
    let r = factorization_residual(&*a.operator("operator")?, &*a.state("omega")?, &*a.frame("frame")?, &a.system("system")?)?;
    Ok(Outcome::residual(r))
}

fn unitality(a: &Args) -> Run {
    Ok(Outcome::residual(unitality_residual(&*a.frame("frame")?, &a.system("system")?)?))
}

fn localizability(a: &Args) -> Run {
    let errors = localizability_probe(&*a.operator("operator")?, &*a.frame("frame")?, &a.system("system")?, &a.states("states")?)?;
    let r = match a.f64_list_opt("expected")? {
        Some(e) => max_abs_diff(&errors, &e)?,
        None => errors.windows(2).map(|w| (w[1] - w[0]).max(0.0)).fold(0.0, f64::max),
    };
    Ok(Outcome::residual(r).with_detail(json!({ "errors": errors })))
}

fn group_reduction(a: &Args) -> Run {
    let r = reduction_residual(&*a.operator("operator")?, &*a.frame("frame")?, &*a.inclusion("inclusion")?, &a.system("system")?)?;
    Ok(Outcome::residual(r))
}

fn external_transform(a: &Args) -> Run {
    let r = external_frame_transform(
        &*a.operator("operator")?,
        &*a.frame("from")?,
        &*a.frame("to")?,
        &*a.channel("channel")?,
        &a.system("system")?,
        a.tol,
    )?;
    Ok(Outcome::residual(r))
}

fn local_observable(a: &Args) -> Run {
    let y = relational_local_observable(&*a.field("field")?, &*a.frame("frame")?, &*a.state("omega")?, a.tol)?;
    compare_operator(a, &y)
}

fn gauge_extended(a: &Args) -> Run {
    let y = gauge_extended_local_observable(
        &*a.operator("operator")?,
        &*a.semidirect("semidirect")?,
        &*a.frame("frame")?,
        &*a.state("omega")?,
        &a.system("system")?,
    )?;
    compare_operator(a, &y)
}

fn torsor_origin(a: &Args) -> Run {
    let sys = a.system("system")?;
    let group = sys.rep().group().clone();
    let rho = a.state("state")?;
    let mu = a.f64_list("distribution")?;
    if mu.len() != group.order() {
        return Err(precondition("distribution must have one weight per torsor point"));
    }
    let origin = match a.map.get("origin") {
        Some(_) => a.element(&group, "origin")?,
        None => group.identity(),
    };
    let shift = a.element(&group, "shift")?;
    let t = Torsor::new(group.clone(), origin)?;
    let shifted = t.shifted(shift);
    let mut relabelled = vec![0.0; group.order()];
    for g in group.elements() {
        relabelled[shifted.point_of(g)] = mu[t.point_of(g)];
    }
    let x = relative_state_on_torsor(&rho, &mu, &t, &sys)?;
    let y = relative_state_on_torsor(&rho, &relabelled, &shifted, &sys)?;
    Ok(Outcome::residual(x.op().distance(y.op())))
}

// ---- bundles ------------------------------------------------------------

fn orientation_check(a: &Args) -> Run {
    let sec = a.section("section")?;
    let (bundle, section) = (&sec.bundle, &sec.section);
    let group = bundle.group();
    let mut bad = 0usize;
    for b in section.preimage(bundle) {
        let k = section_coordinate(bundle, section, b)?;
        for h in group.elements() {
            if section_coordinate(bundle, section, bundle.act(b, h))? != group.mul(k, h) {
                bad += 1;
            }
        }
    }
    Ok(Outcome::residual(bad as f64))
}

fn bundle_relativize(a: &Args) -> Run {
    compare_operator(a, &relativize_field(&*a.quantum_field("field")?, &*a.bundle_frame("frame")?)?)
}

fn bundle_invariance(a: &Args) -> Run {
    Ok(Outcome::residual(field_invariance_residual(&*a.quantum_field("field")?, &*a.bundle_frame("frame")?)?))
}

fn bundle_restriction(a: &Args) -> Run {
    compare_operator(a, &restrict_field(&*a.quantum_field("field")?, &*a.bundle_frame("frame")?, &*a.state("omega")?)?)
}

fn localization(a: &Args) -> Run {
    let frame = a.bundle_frame("frame")?;
    let field = a.quantum_field("field")?;
    let p = a.base_point(frame.bundle(), "point")?;
    let given = a.state_opt("omega")?;
    let omega = match &given {
        Some(w) => (**w).clone(),
        None => {
            if !frame.is_sharp(a.tol) {
                return Err(precondition("localized state needs a sharp frame or an explicit omega"));
            }
            let b = frame
                .section()
                .at(p)
                .ok_or_else(|| precondition("point outside the section's domain"))?;
            let i = frame.local_index(b).expect("section points lie in the frame");
            localized_frame_state(&frame, i)?
        }
    };
    let (err, bound) = localization_error(&field, &frame, &omega, p)?;
    let r = if given.is_some() { (err - bound).max(0.0) } else { err };
    Ok(Outcome::residual(r).with_detail(json!({ "error": err, "bound": bound })))
}

/// A frame state whose Born measure is the point mass at outcome `i`: the
/// normalized support projector of the sharp effect.
fn localized_frame_state(frame: &BundleFrame, i: usize) -> std::result::Result<State, CheckFailure> {
    let e = frame.povm().effect(i);
    let t = e.trace().re;
    if t <= 0.0 {
        return Err(precondition("zero effect cannot be localized on"));
    }
    Ok(State::new(e.scale_real(1.0 / t), 1e-8)?)
}

fn bundle_reduction(a: &Args) -> Run {
    let r = bundle_reduction_residual(&*a.quantum_field("field")?, &*a.bundle_frame("frame")?, &*a.embedding("embedding")?)?;
    Ok(Outcome::residual(r))
}

fn local_algebra(a: &Args) -> Run {
    let report = relational_local_algebra(&*a.quantum_field("field")?, &*a.bundle_frame("frame")?, &a.states("states")?, a.tol)?;
    let mut r = 0.0;
    if let Some(s) = a.usize_opt("span_dim")? {
        r += (report.span_dim as f64 - s as f64).abs();
    }
    if let Some(s) = a.usize_opt("algebra_dim")? {
        r += (report.algebra_dim as f64 - s as f64).abs();
    }
    Ok(Outcome::residual(r).with_detail(json!({
        "span_dim": report.span_dim,
        "algebra_dim": report.algebra_dim,
        "closed_under_products": report.closed_under_products,
    })))
}

fn morphism(a: &Args) -> Run {
    let m = a.morphism("morphism")?;
    Ok(Outcome::residual(apply_frame_morphism(&m.morphism, &*a.quantum_field("field")?, &m.from, &m.to)?))
}

fn gluing(a: &Args) -> Run {
    let m = a.morphism("morphism")?;
    Ok(Outcome::residual(gluing_violations(&m.morphism, &m.from, &m.to) as f64))
}

fn bundle_covariance(a: &Args) -> Run {
    Ok(Outcome::residual(a.bundle_frame("frame")?.covariance_violation()))
}

// ---- pde ----------------------------------------------------------------

fn lift_duality(a: &Args) -> Run {
    Ok(Outcome::residual(lift_duality_residual(&*a.difference_operator("operator")?, &*a.field("field")?)?))
}

fn state_duality(a: &Args) -> Run {
    let r = state_duality_residual(&*a.difference_operator("operator")?, &*a.field("field")?, &a.states("states")?)?;
    Ok(Outcome::residual(r))
}

fn kernel(a: &Args) -> Run {
    let want = a.bool_or("member", true)?;
    let (member, r) = kernel_membership(&*a.difference_operator("operator")?, &*a.field("field")?, a.tol)?;
    Ok(Outcome::residual(r).verdict(member == want).with_detail(json!({ "member": member })))
}

fn kernel_dimension(a: &Args) -> Run {
    let dim = kernel_basis(&*a.difference_operator("operator")?, a.tol).len();
    let want = a.usize("expected")?;
    Ok(Outcome::residual((dim as f64 - want as f64).abs()).with_detail(json!({ "dimension": dim })))
}

fn solution_symmetry(a: &Args) -> Run {
    let t = a.difference_operator("operator")?;
    let action = match a.str_opt("action")? {
        None | Some("translations") => ScalarAction::translations(t.grid().len()),
        Some(other) => return Err(precondition(format!("unknown scalar action {other:?}"))),
    };
    let t = DifferenceOperator::new(SampleSpace::indexed(t.grid().len()), t.matrix().clone())?;
    let field = a.field("field")?;
    let field = OperatorField::new(t.grid().clone(), field.values().to_vec())?;
    Ok(Outcome::residual(lifted_kernel_preservation(&action, &t, &field, a.tol)?))
}

fn lift_expected(a: &Args) -> Run {
    let lifted = lift_apply(&*a.difference_operator("operator")?, &*a.field("field")?)?;
    let expected = a.field("expected")?;
    if expected.space().len() != lifted.space().len() || expected.dim() != lifted.dim() {
        return Err(precondition("expected field has the wrong shape"));
    }
    let r = lifted
        .values()
        .iter()
        .zip(expected.values())
        .map(|(x, y)| x.distance(y))
        .fold(0.0, f64::max);
    Ok(Outcome::residual(r))
}

fn pde_linearity(a: &Args) -> Run {
    let t = a.difference_operator("operator")?;
    let (f, g) = (a.field("field")?, a.field("other")?);
    let one = C64::new(1.0, 0.0);
    let (x, y) = (a.complex_or("a", one)?, a.complex_or("b", one)?);
    let lhs = lift_apply(&t, &f.linear_combination(x, &g, y)?)?;
    let rhs = lift_apply(&t, &f)?.linear_combination(x, &lift_apply(&t, &g)?, y)?;
    let r = lhs
        .values()
        .iter()
        .zip(rhs.values())
        .map(|(p, q)| p.distance(q))
        .fold(0.0, f64::max);
    Ok(Outcome::residual(r))
}

// ---- geometry -----------------------------------------------------------

fn stratify_check(a: &Args) -> Run {
    let model = a.model("model")?;
    let bundle = model.bundle();
    let p = a.base_point(bundle, "point")?;
    let s = stratify(&model, p)?;
    let big = model.big_group();
    let reference = model.reference().at(p).ok_or_else(|| precondition("reference section misses the point"))?;
    let mut r = s
        .factors
        .iter()
        .filter(|(&b, &(sector, h))| {
            let rep = model.cosets()[sector.0][0];
            bundle.act(reference, big.mul(rep, model.little().embed(h))) != b
        })
        .count() as f64;
    if let Some(n) = a.usize_opt("sectors")? {
        r += (s.sectors.len() as f64 - n as f64).abs();
    }
    if let Some(n) = a.usize_opt("size")? {
        r += s.sectors.iter().map(|x| (x.len() as f64 - n as f64).abs()).sum::<f64>();
    }
    let labels: Vec<Vec<&str>> = s
        .sectors
        .iter()
        .map(|sec| sec.iter().map(|&b| bundle.total_labels()[b].as_str()).collect())
        .collect();
    Ok(Outcome::residual(r).with_detail(json!({ "sectors": labels })))
}

fn metric(a: &Args) -> Run {
    let model = a.model("model")?;
    let sec = a.section("section")?;
    let m = metric_from_section(&model, &sec.section)?;
    let domain = sec.section.domain();
    let mut bad = 0usize;
    for (i, &p) in domain.iter().enumerate() {
        let t = m.tetrad.at(i).ok_or_else(|| precondition("tetrad misses a base point"))?;
        if m.points()[t] != sec.section.at(p).unwrap() {
            bad += 1;
        }
    }
    for (j, &b) in m.points().iter().enumerate() {
        let p = model.bundle().proj(b);
        if m.sectors[p] != Some(model.sector_of(b)) || domain[m.sub_bundle.proj(j)] != p {
            bad += 1;
        }
    }
    let sectors: Vec<Option<usize>> = m.sectors.iter().map(|s| s.map(|x| x.0)).collect();
    Ok(Outcome::residual(bad as f64).with_detail(json!({ "sectors": sectors })))
}

fn probabilities(a: &Args) -> Run {
    let model = a.model("model")?;
    let d = indefinite_geometry_probabilities(&model, &*a.bundle_frame("frame")?, &*a.state("omega")?)?;
    let mut r = (d.total() - 1.0).abs();
    if let Some(e) = a.map.get("expected") {
        let rows = env::arr(e, &a.at("expected"))?;
        if rows.len() != d.cells.len() {
            return Err(precondition("expected cells have the wrong shape"));
        }
        for (row, cells) in rows.iter().zip(&d.cells) {
            r = r.max(max_abs_diff(cells, &env::f64_list(row, &a.at("expected"))?)?);
        }
    }
    Ok(Outcome::residual(r).with_detail(json!({ "cells": d.cells })))
}

fn section_metric_restriction(a: &Args) -> Run {
    let (full, reduced) = restrict_in_section_metric(
        &*a.model("model")?,
        &*a.bundle_frame("frame")?,
        &*a.quantum_field("field")?,
        &*a.state("omega")?,
    )?;
    Ok(Outcome::residual(full.distance(&reduced)))
}

fn path(a: &Args) -> Run {
    let pe = a.path_frame("path")?;
    let sec = a.section("section")?;
    if *sec.bundle != *pe.bundle {
        return Err(precondition("section and path live on different bundles"));
    }
    let variant = match a.str_opt("variant")?.unwrap_or("on_section") {
        "on_section" => PathVariant::OnSection,
        "lifted" => PathVariant::Lifted,
        "indefinite_orientation" => PathVariant::IndefiniteOrientation,
        "stationary" => PathVariant::Stationary((*a.inclusion("stationary")?).clone()),
        other => return Err(precondition(format!("unknown path variant {other:?}"))),
    };
    let y = path_restricted_observable(&pe.frame, &pe.bundle, &sec.section, &*a.quantum_field("field")?, &*a.state("omega")?, &variant)?;
    compare_operator(a, &y)
}

fn isometry(a: &Args) -> Run {
    let m = a.morphism("morphism")?;
    let (kind, r) = isometric_frame_transform(&m.morphism, &*a.model("model")?, &m.from, &m.to, &*a.quantum_field("field")?)?;
    let want = a.str_opt("expected")?;
    let pass = want.is_none_or(|w| w == kind.name()) && r <= a.tol;
    Ok(Outcome::residual(r).verdict(pass).with_detail(json!({ "classification": kind.name() })))
}

fn gr_coupled(a: &Args) -> Run {
    let model = a.model("model")?;
    let frame = a.bundle_frame("frame")?;
    let field = a.quantum_field("field")?;
    let path = a.at("sector_equations");
    let mut equations = BTreeMap::new();
    for (k, v) in env::obj(a.raw("sector_equations")?, &path)? {
        let s: usize = k.parse().map_err(|_| precondition(format!("{path}: sector keys are indices")))?;
        let t = a.env.difference_operator_ref(v, &format!("{path}.{k}"))?;
        equations.insert(MetricSector(s), (*t).clone());
    }
    let weight = match a.map.get("weight") {
        None => EquationWeight::Indicator,
        Some(Value::String(s)) if s == "indicator" => EquationWeight::Indicator,
        Some(w) => EquationWeight::Gaussian {
            width: env::f64_of(env::field_of(env::obj(w, &a.at("weight"))?, "gaussian", &a.at("weight"))?, &a.at("weight"))?,
        },
    };
    match a.map.get("expected") {
        None => Ok(Outcome::residual(gr_reduction_residual(&model, &frame, &field, &equations, a.tol)?)),
        Some(_) => compare_operator(a, &gr_coupled_relativize(&model, &frame, &field, &equations, weight, a.tol)?),
    }
}

/// Every check kind, grouped by module.
pub static REGISTRY: &[CheckKind] = &[
    // measure
    CheckKind { name: "born", module: "measure", summary: "Born measure sums to one, or matches `expected`", args: &[req("povm", Ref(Kind::Povm)), req("state", Ref(Kind::State)), opt("expected", Val)], run: born },
    CheckKind { name: "covariance", module: "measure", summary: "max covariance violation under the group's action on outcomes", args: &[req("povm", Ref(Kind::Povm)), req("rep", Ref(Kind::Rep)), opt("action", Val)], run: covariance },
    CheckKind { name: "normalization", module: "measure", summary: "distance of the effect sum from the identity", args: &[req("povm", Ref(Kind::Povm))], run: normalization },
    CheckKind { name: "push_forward", module: "measure", summary: "Born measure of a push-forward equals the push-forward measure", args: &[req("povm", Ref(Kind::Povm)), req("state", Ref(Kind::State)), req("map", Val), req("points", Val)], run: push_forward_check },
    CheckKind { name: "channel_composition", module: "measure", summary: "Born measure of a channel-composed POVM equals that of the evolved state", args: &[req("channel", Ref(Kind::Channel)), req("povm", Ref(Kind::Povm)), req("state", Ref(Kind::State))], run: channel_composition },
    CheckKind { name: "born_affinity", module: "measure", summary: "Born measure is affine in the state", args: &[req("povm", Ref(Kind::Povm)), req("a", Ref(Kind::State)), req("b", Ref(Kind::State)), req("weight", Val)], run: born_affinity },
    CheckKind { name: "sharpness", module: "measure", summary: "effects are projections (or not, with `sharp: false`)", args: &[req("povm", Ref(Kind::Povm)), opt("sharp", Val)], run: sharpness },
    // operator
    CheckKind { name: "channel_duality", module: "operator", summary: "Schrödinger and Heisenberg pictures give the same expectation", args: &[req("channel", Ref(Kind::Channel)), req("state", Ref(Kind::State)), req("operator", Ref(Kind::Operator))], run: channel_duality },
    CheckKind { name: "partial_trace", module: "operator", summary: "partial traces of a product state return its factors", args: &[req("a", Ref(Kind::State)), req("b", Ref(Kind::State))], run: partial_trace_check },
    // symmetry
    CheckKind { name: "homomorphism", module: "symmetry", summary: "representation respects the multiplication table", args: &[req("rep", Ref(Kind::Rep))], run: homomorphism },
    CheckKind { name: "group_axioms", module: "symmetry", summary: "count of associativity, identity and inverse failures", args: &[req("group", Ref(Kind::Group))], run: group_axioms },
    CheckKind { name: "semidirect_factorization", module: "symmetry", summary: "every element factors as translation times acting part", args: &[req("semidirect", Ref(Kind::Semidirect))], run: semidirect_factorization },
    // integral
    CheckKind { name: "pairing", module: "integral", summary: "integral pairing equals the sum of expectation times Born weight", args: &[req("field", Ref(Kind::Field)), req("povm", Ref(Kind::Povm)), req("rho", Ref(Kind::State)), req("omega", Ref(Kind::State))], run: pairing },
    CheckKind { name: "pairing_matrix_units", module: "integral", summary: "pairing identity over all matrix-unit inputs", args: &[req("field", Ref(Kind::Field)), req("povm", Ref(Kind::Povm))], run: pairing_matrix_units },
    CheckKind { name: "change_of_variables", module: "integral", summary: "integral of a pull-back equals the integral against the push-forward", args: &[req("field", Ref(Kind::Field)), req("povm", Ref(Kind::Povm)), req("map", Val)], run: change_of_variables },
    CheckKind { name: "channel_interchange", module: "integral", summary: "integration commutes with a channel on the measured factor", args: &[req("field", Ref(Kind::Field)), req("povm", Ref(Kind::Povm)), req("channel", Ref(Kind::Channel))], run: channel_interchange },
    CheckKind { name: "uniqueness", module: "integral", summary: "a field is recovered from its integral against the ideal POVM", args: &[req("field", Ref(Kind::Field))], run: uniqueness },
    CheckKind { name: "ov_integral", module: "integral", summary: "operator-valued integral matches `expected`", args: &[req("field", Ref(Kind::Field)), req("povm", Ref(Kind::Povm)), req("expected", Ref(Kind::Operator))], run: ov_integral },
    CheckKind { name: "norm_bound", module: "integral", summary: "excess of the integral's norm over the crude bound", args: &[req("field", Ref(Kind::Field)), req("povm", Ref(Kind::Povm))], run: norm_bound },
    CheckKind { name: "bilinearity", module: "integral", summary: "pairing is linear in the field and in the system operator", args: &[req("field", Ref(Kind::Field)), req("other", Ref(Kind::Field)), req("povm", Ref(Kind::Povm)), req("rho", Ref(Kind::State)), req("omega", Ref(Kind::State)), opt("a", Val), opt("b", Val)], run: bilinearity },
    // group frames
    CheckKind { name: "relative_state", module: "group_frame", summary: "relative state matches `expected`", args: &[req("frame", Ref(Kind::Frame)), req("system", Ref(Kind::Rep)), req("rho", Ref(Kind::State)), req("omega", Ref(Kind::State)), req("expected", Ref(Kind::State))], run: relative_state_check },
    CheckKind { name: "relativize", module: "group_frame", summary: "relativized operator matches `expected`", args: &[req("frame", Ref(Kind::Frame)), req("system", Ref(Kind::Rep)), req("operator", Ref(Kind::Operator)), req("expected", Ref(Kind::Operator))], run: relativize_check },
    CheckKind { name: "duality", module: "group_frame", summary: "relative state pairs with the operator as the joint state with its relativization", args: &[req("frame", Ref(Kind::Frame)), req("system", Ref(Kind::Rep)), req("operator", Ref(Kind::Operator)), req("rho", Ref(Kind::State)), req("omega", Ref(Kind::State))], run: duality },
    CheckKind { name: "orbit", module: "group_frame", summary: "relativization agrees with the integral of the operator's orbit", args: &[req("frame", Ref(Kind::Frame)), req("system", Ref(Kind::Rep)), req("operator", Ref(Kind::Operator)), req("rho", Ref(Kind::State)), req("omega", Ref(Kind::State))], run: orbit },
    CheckKind { name: "invariance", module: "group_frame", summary: "relativized operator is invariant under the diagonal action", args: &[req("frame", Ref(Kind::Frame)), req("system", Ref(Kind::Rep)), req("operator", Ref(Kind::Operator))], run: invariance },
    CheckKind { name: "frame_covariance", module: "group_frame", summary: "relative state transforms covariantly with the frame state", args: &[req("frame", Ref(Kind::Frame)), req("system", Ref(Kind::Rep)), req("rho", Ref(Kind::State)), req("omega", Ref(Kind::State))], run: frame_covariance },
    CheckKind { name: "restriction", module: "group_frame", summary: "restricted relativization matches `expected`", args: &[req("frame", Ref(Kind::Frame)), req("system", Ref(Kind::Rep)), req("operator", Ref(Kind::Operator)), req("omega", Ref(Kind::State)), req("expected", Ref(Kind::Operator))], run: restriction },
    CheckKind { name: "factorization", module: "group_frame", summary: "restriction of the relativization equals the direct frame average", args: &[req("frame", Ref(Kind::Frame)), req("system", Ref(Kind::Rep)), req("operator", Ref(Kind::Operator)), req("omega", Ref(Kind::State))], run: factorization },
    CheckKind { name: "unitality", module: "group_frame", summary: "relativization maps the identity to the identity", args: &[req("frame", Ref(Kind::Frame)), req("system", Ref(Kind::Rep))], run: unitality },
    CheckKind { name: "localizability", module: "group_frame", summary: "restriction error along a family of frame states", args: &[req("frame", Ref(Kind::Frame)), req("system", Ref(Kind::Rep)), req("operator", Ref(Kind::Operator)), req("states", RefList(Kind::State)), opt("expected", Val)], run: localizability },
    CheckKind { name: "reduction", module: "group_frame", summary: "relativization against a reduced frame equals the subgroup average", args: &[req("frame", Ref(Kind::Frame)), req("inclusion", Ref(Kind::Inclusion)), req("system", Ref(Kind::Rep)), req("operator", Ref(Kind::Operator))], run: group_reduction },
    CheckKind { name: "external_transform", module: "group_frame", summary: "relativization against a transformed frame equals the transformed relativization", args: &[req("from", Ref(Kind::Frame)), req("to", Ref(Kind::Frame)), req("channel", Ref(Kind::Channel)), req("system", Ref(Kind::Rep)), req("operator", Ref(Kind::Operator))], run: external_transform },
    CheckKind { name: "relational_local_observable", module: "group_frame", summary: "support-restricted frame average of a field matches `expected`", args: &[req("frame", Ref(Kind::Frame)), req("field", Ref(Kind::Field)), req("omega", Ref(Kind::State)), req("expected", Ref(Kind::Operator))], run: local_observable },
    CheckKind { name: "gauge_extended", module: "group_frame", summary: "gauge-extended local observable matches `expected`", args: &[req("semidirect", Ref(Kind::Semidirect)), req("frame", Ref(Kind::Frame)), req("system", Ref(Kind::Rep)), req("operator", Ref(Kind::Operator)), req("omega", Ref(Kind::State)), req("expected", Ref(Kind::Operator))], run: gauge_extended },
    CheckKind { name: "torsor_origin", module: "group_frame", summary: "relative state on a torsor does not depend on the chosen origin", args: &[req("system", Ref(Kind::Rep)), req("state", Ref(Kind::State)), req("distribution", Val), opt("origin", Val), req("shift", Val)], run: torsor_origin },
    // bundles
    CheckKind { name: "orientation", module: "bundle", summary: "section coordinates are equivariant under the right action", args: &[req("section", Ref(Kind::Section))], run: orientation_check },
    CheckKind { name: "bundle_relativize", module: "bundle", summary: "relativized field matches `expected`", args: &[req("frame", Ref(Kind::BundleFrame)), req("field", Ref(Kind::QuantumField)), req("expected", Ref(Kind::Operator))], run: bundle_relativize },
    CheckKind { name: "bundle_invariance", module: "bundle", summary: "relativized field is invariant under the diagonal action", args: &[req("frame", Ref(Kind::BundleFrame)), req("field", Ref(Kind::QuantumField))], run: bundle_invariance },
    CheckKind { name: "bundle_restriction", module: "bundle", summary: "restricted relativized field matches `expected`", args: &[req("frame", Ref(Kind::BundleFrame)), req("field", Ref(Kind::QuantumField)), req("omega", Ref(Kind::State)), req("expected", Ref(Kind::Operator))], run: bundle_restriction },
    CheckKind { name: "localization", module: "bundle", summary: "a state localized at the section point returns the field value there", args: &[req("frame", Ref(Kind::BundleFrame)), req("field", Ref(Kind::QuantumField)), req("point", Val), opt("omega", Ref(Kind::State))], run: localization },
    CheckKind { name: "bundle_reduction", module: "bundle", summary: "relativization against a reduced bundle frame equals the sub-bundle one", args: &[req("frame", Ref(Kind::BundleFrame)), req("embedding", Ref(Kind::Embedding)), req("field", Ref(Kind::QuantumField))], run: bundle_reduction },
    CheckKind { name: "local_algebra", module: "bundle", summary: "dimensions of the span and generated algebra of restricted fields", args: &[req("frame", Ref(Kind::BundleFrame)), req("field", Ref(Kind::QuantumField)), req("states", RefList(Kind::State)), opt("span_dim", Val), opt("algebra_dim", Val)], run: local_algebra },
    CheckKind { name: "morphism", module: "bundle", summary: "frame-morphism transformation identity", args: &[req("morphism", Ref(Kind::Morphism)), req("field", Ref(Kind::QuantumField))], run: morphism },
    CheckKind { name: "gluing", module: "bundle", summary: "count of points where the morphism breaks gluing", args: &[req("morphism", Ref(Kind::Morphism))], run: gluing },
    CheckKind { name: "bundle_covariance", module: "bundle", summary: "covariance violation of a bundle frame", args: &[req("frame", Ref(Kind::BundleFrame))], run: bundle_covariance },
    // pde
    CheckKind { name: "lift_duality", module: "pde", summary: "entrywise lift equals the lift defined by duality", args: &[req("operator", Ref(Kind::DifferenceOperator)), req("field", Ref(Kind::Field))], run: lift_duality },
    CheckKind { name: "state_duality", module: "pde", summary: "lift commutes with expectations in the given states", args: &[req("operator", Ref(Kind::DifferenceOperator)), req("field", Ref(Kind::Field)), req("states", RefList(Kind::State))], run: state_duality },
    CheckKind { name: "kernel", module: "pde", summary: "field lies in the kernel of the lifted operator (or not, with `member: false`)", args: &[req("operator", Ref(Kind::DifferenceOperator)), req("field", Ref(Kind::Field)), opt("member", Val)], run: kernel },
    CheckKind { name: "kernel_dimension", module: "pde", summary: "dimension of the scalar kernel", args: &[req("operator", Ref(Kind::DifferenceOperator)), req("expected", Val)], run: kernel_dimension },
    CheckKind { name: "solution_symmetry", module: "pde", summary: "a kernel-preserving scalar action maps lifted solutions to solutions", args: &[req("operator", Ref(Kind::DifferenceOperator)), req("field", Ref(Kind::Field)), opt("action", Val)], run: solution_symmetry },
    CheckKind { name: "lift_expected", module: "pde", summary: "lifted operator applied to a field matches `expected`", args: &[req("operator", Ref(Kind::DifferenceOperator)), req("field", Ref(Kind::Field)), req("expected", Ref(Kind::Field))], run: lift_expected },
    CheckKind { name: "pde_linearity", module: "pde", summary: "lifted operator is linear in the field", args: &[req("operator", Ref(Kind::DifferenceOperator)), req("field", Ref(Kind::Field)), req("other", Ref(Kind::Field)), opt("a", Val), opt("b", Val)], run: pde_linearity },
    // geometry
    CheckKind { name: "stratify", module: "geometry", summary: "fiber splits into coset sectors and every point factors", args: &[req("model", Ref(Kind::Model)), req("point", Val), opt("sectors", Val), opt("size", Val)], run: stratify_check },
    CheckKind { name: "metric", module: "geometry", summary: "section metric, sub-bundle and tetrad are consistent", args: &[req("model", Ref(Kind::Model)), req("section", Ref(Kind::Section))], run: metric },
    CheckKind { name: "probabilities", module: "geometry", summary: "indefinite-geometry cell probabilities sum to one, or match `expected`", args: &[req("model", Ref(Kind::Model)), req("frame", Ref(Kind::BundleFrame)), req("omega", Ref(Kind::State)), opt("expected", Val)], run: probabilities },
    CheckKind { name: "section_metric_restriction", module: "geometry", summary: "restriction computed in the section metric agrees with the full one", args: &[req("model", Ref(Kind::Model)), req("frame", Ref(Kind::BundleFrame)), req("field", Ref(Kind::QuantumField)), req("omega", Ref(Kind::State))], run: section_metric_restriction },
    CheckKind { name: "path", module: "geometry", summary: "path-restricted observable matches `expected`", args: &[req("path", Ref(Kind::Path)), req("section", Ref(Kind::Section)), req("field", Ref(Kind::QuantumField)), req("omega", Ref(Kind::State)), opt("variant", Val), opt("stationary", Ref(Kind::Inclusion)), req("expected", Ref(Kind::Operator))], run: path },
    CheckKind { name: "isometry", module: "geometry", summary: "classifies a frame morphism and checks its transformation identity", args: &[req("morphism", Ref(Kind::Morphism)), req("model", Ref(Kind::Model)), req("field", Ref(Kind::QuantumField)), opt("expected", Val)], run: isometry },
    CheckKind { name: "gr_coupled", module: "geometry", summary: "sector-weighted relativization reduces to the plain one, or matches `expected`", args: &[req("model", Ref(Kind::Model)), req("frame", Ref(Kind::BundleFrame)), req("field", Ref(Kind::QuantumField)), req("sector_equations", Val), opt("weight", Val), opt("expected", Ref(Kind::Operator))], run: gr_coupled },
];

/// Looks up a check kind by name.
pub fn lookup(name: &str) -> Option<&'static CheckKind> {
    REGISTRY.iter().find(|k| k.name == name)
}

/// Checks the shape of a check object at load time: known kind, known and
/// required arguments, and resolvable string references.
pub fn validate_check(env: &Env, check: &Value, path: &str) -> std::result::Result<&'static CheckKind, LoadError> {
    let o = env::obj(check, path)?;
    let kind_name = env::str_of(env::field_of(o, "kind", path)?, &format!("{path}.kind"))?;
    let kind = lookup(kind_name).ok_or_else(|| LoadError {
        path: format!("{path}.kind"),
        message: format!("unknown check kind {kind_name:?}"),
    })?;
    if let Some(n) = o.get("name") {
        env::str_of(n, &format!("{path}.name"))?;
    }
    if let Some(t) = o.get("tolerance") {
        let t = env::f64_of(t, &format!("{path}.tolerance"))?;
        if !(t.is_finite() && t >= 0.0) {
            return env::err(&format!("{path}.tolerance"), "tolerance must be finite and non-negative");
        }
    }
    for key in o.keys() {
        if !RESERVED.contains(&key.as_str()) && !kind.args.iter().any(|a| a.name == key) {
            return env::err(path, format!("unknown argument `{key}` for {kind_name}"));
        }
    }
    for spec in kind.args {
        let arg_path = format!("{path}.{}", spec.name);
        match o.get(spec.name) {
            None if spec.required => return env::err(path, format!("missing argument `{}` for {kind_name}", spec.name)),
            None => {}
            Some(v) => check_reference(env, spec.kind, v, &arg_path)?,
        }
    }
    Ok(kind)
}

fn check_reference(env: &Env, kind: ArgKind, v: &Value, path: &str) -> std::result::Result<(), LoadError> {
    let Value::String(id) = v else {
        if let (ArgKind::RefList(k), Value::Array(items)) = (kind, v) {
            for (i, item) in items.iter().enumerate() {
                check_reference(env, Ref(k), item, &format!("{path}[{i}]"))?;
            }
        } else if let ArgKind::RefList(_) = kind {
            return env::err(path, "expected a list");
        }
        return Ok(());
    };
    let found = match kind {
        Ref(k) => env.has(k, id),
        RefList(_) => return env::err(path, "expected a list"),
        Val => true,
    };
    if found {
        Ok(())
    } else {
        env::err(path, format!("unresolved reference {id:?}"))
    }
}

/// Runs a validated check.
pub fn run_check(env: &Env, kind: &CheckKind, check: &Map<String, Value>, path: &str, tol: f64) -> Run {
    let args = Args::new(env, check, path.to_string(), tol);
    (kind.run)(&args)
}

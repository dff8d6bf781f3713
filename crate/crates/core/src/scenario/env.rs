//! Declarations of a scenario, built lazily by id.
//!
//! Every place that takes an object accepts either the id of a declaration
//! (a JSON string) or an inline declaration (any other JSON value). Built
//! objects are cached; random declarations draw from a seed derived from the
//! run seed and the declaration's path, so results do not depend on the
//! order in which objects are first requested.

use std::cell::Cell;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex};

use serde_json::{Map, Value};

use super::random;
use crate::bundle::{reduce_bundle_frame, BundleEmbedding, BundleFrame, FrameMorphism, LocalSection, PrincipalBundle, QuantumField};
use crate::error::Error;
use crate::geometry::{s3_model, s4_model, FrameBundleModel, PathFrame};
use crate::group_frame::{reduce_frame, GroupFrame};
use crate::integral::OperatorField;
use crate::measure::{compose_with_channel, ideal_povm, push_forward_inclusion, Povm, SampleSpace};
use crate::operator::{matrix_from_json, Channel, Operator, State, C64};
use crate::pde::DifferenceOperator;
use crate::symmetry::{FiniteGroup, SemidirectProduct, SubgroupInclusion, UnitaryRep};

/// A load failure, naming the object path and the violated invariant.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for LoadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

impl std::error::Error for LoadError {}

pub type LResult<T> = std::result::Result<T, LoadError>;

pub(crate) fn err<T>(path: &str, message: impl Into<String>) -> LResult<T> {
    Err(LoadError {
        path: path.to_string(),
        message: message.into(),
    })
}

pub(crate) trait AtPath<T> {
    fn at(self, path: &str) -> LResult<T>;
}

impl<T> AtPath<T> for std::result::Result<T, Error> {
    fn at(self, path: &str) -> LResult<T> {
        self.map_err(|e| LoadError {
            path: path.to_string(),
            message: e.to_string(),
        })
    }
}

impl<T> AtPath<T> for std::result::Result<T, String> {
    fn at(self, path: &str) -> LResult<T> {
        self.map_err(|message| LoadError {
            path: path.to_string(),
            message,
        })
    }
}

/// The kinds of declarable objects, each with its top-level scenario key.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Kind {
    Group,
    Semidirect,
    Inclusion,
    Rep,
    Povm,
    State,
    Operator,
    Channel,
    Field,
    Bundle,
    Section,
    Embedding,
    Frame,
    BundleFrame,
    QuantumField,
    Morphism,
    Model,
    DifferenceOperator,
    Path,
}

impl Kind {
    pub const ALL: [Kind; 19] = [
        Kind::Group,
        Kind::Semidirect,
        Kind::Inclusion,
        Kind::Rep,
        Kind::Povm,
        Kind::State,
        Kind::Operator,
        Kind::Channel,
        Kind::Field,
        Kind::Bundle,
        Kind::Section,
        Kind::Embedding,
        Kind::Frame,
        Kind::BundleFrame,
        Kind::QuantumField,
        Kind::Morphism,
        Kind::Model,
        Kind::DifferenceOperator,
        Kind::Path,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Kind::Group => "groups",
            Kind::Semidirect => "semidirect",
            Kind::Inclusion => "inclusions",
            Kind::Rep => "reps",
            Kind::Povm => "povms",
            Kind::State => "states",
            Kind::Operator => "operators",
            Kind::Channel => "channels",
            Kind::Field => "fields",
            Kind::Bundle => "bundles",
            Kind::Section => "sections",
            Kind::Embedding => "embeddings",
            Kind::Frame => "frames",
            Kind::BundleFrame => "bundle_frames",
            Kind::QuantumField => "quantum_fields",
            Kind::Morphism => "morphisms",
            Kind::Model => "models",
            Kind::DifferenceOperator => "difference_operators",
            Kind::Path => "paths",
        }
    }
}

/// Singular top-level keys and the declaration each one stands for.
pub const ALIASES: [(&str, Kind, &str); 4] = [
    ("group", Kind::Group, "G"),
    ("system_rep", Kind::Rep, "system"),
    ("frame_rep", Kind::Rep, "frame"),
    ("frame_povm", Kind::Povm, "frame"),
];

/// A frame morphism with the frames it connects.
#[derive(Clone, Debug)]
pub struct MorphismEntry {
    pub morphism: FrameMorphism,
    pub from: Arc<BundleFrame>,
    pub to: Arc<BundleFrame>,
}

/// A section with the bundle it belongs to.
#[derive(Clone, Debug)]
pub struct SectionEntry {
    pub bundle: Arc<PrincipalBundle>,
    pub section: LocalSection,
}

/// A path frame with its bundle.
#[derive(Clone, Debug)]
pub struct PathEntry {
    pub bundle: Arc<PrincipalBundle>,
    pub frame: PathFrame,
}

#[derive(Clone, Debug)]
enum Obj {
    Group(Arc<FiniteGroup>),
    Semidirect(Arc<SemidirectProduct>),
    Inclusion(Arc<SubgroupInclusion>),
    Rep(Arc<UnitaryRep>),
    Povm(Arc<Povm>),
    State(Arc<State>),
    Operator(Arc<Operator>),
    Channel(Arc<Channel>),
    Field(Arc<OperatorField>),
    Bundle(Arc<PrincipalBundle>),
    Section(Arc<SectionEntry>),
    Embedding(Arc<BundleEmbedding>),
    Frame(Arc<GroupFrame>),
    BundleFrame(Arc<BundleFrame>),
    QuantumField(Arc<QuantumField>),
    Morphism(Arc<MorphismEntry>),
    Model(Arc<FrameBundleModel>),
    DifferenceOperator(Arc<DifferenceOperator>),
    Path(Arc<PathEntry>),
}

thread_local! {
    static DEPTH: Cell<usize> = const { Cell::new(0) };
}

const MAX_DEPTH: usize = 64;

/// The declarations of one scenario, with a run seed and tolerance.
pub struct Env {
    decls: BTreeMap<Kind, Map<String, Value>>,
    seed: u64,
    tol: f64,
    cache: Mutex<HashMap<(Kind, String), Obj>>,
}

macro_rules! getter {
    ($name:ident, $resolve:ident, $kind:ident, $ty:ty, $build:ident) => {
        pub fn $name(&self, id: &str) -> LResult<Arc<$ty>> {
            match self.get(Kind::$kind, id)? {
                Obj::$kind(x) => Ok(x),
                _ => unreachable!("cache holds objects under their own kind"),
            }
        }

        pub fn $resolve(&self, v: &Value, path: &str) -> LResult<Arc<$ty>> {
            match v {
                Value::String(id) => self.$name(id).map_err(|e| LoadError {
                    path: format!("{path} -> {}", e.path),
                    message: e.message,
                }),
                _ => self.$build(v, path).map(Arc::new),
            }
        }
    };
}

impl Env {
    /// Splits a scenario document into declaration tables. Does not build.
    pub fn new(doc: &Map<String, Value>, seed: u64, tol: f64) -> LResult<Self> {
        let mut decls: BTreeMap<Kind, Map<String, Value>> = BTreeMap::new();
        for kind in Kind::ALL {
            let table = match doc.get(kind.key()) {
                None => Map::new(),
                Some(Value::Object(m)) => m.clone(),
                Some(_) => return err(kind.key(), "must be an object of declarations keyed by id"),
            };
            decls.insert(kind, table);
        }
        for (key, kind, id) in ALIASES {
            if let Some(v) = doc.get(key) {
                let table = decls.get_mut(&kind).unwrap();
                if table.contains_key(id) {
                    return err(key, format!("conflicts with {}.{id}", kind.key()));
                }
                table.insert(id.to_string(), v.clone());
            }
        }
        let has_frame_parts = decls[&Kind::Rep].contains_key("frame") && decls[&Kind::Povm].contains_key("frame");
        if has_frame_parts && !decls[&Kind::Frame].contains_key("frame") {
            decls
                .get_mut(&Kind::Frame)
                .unwrap()
                .insert("frame".into(), serde_json::json!({ "rep": "frame", "povm": "frame" }));
        }
        Ok(Self {
            decls,
            seed,
            tol,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of declarations of a kind.
    pub fn count(&self, kind: Kind) -> usize {
        self.decls[&kind].len()
    }

    pub fn ids(&self, kind: Kind) -> Vec<String> {
        self.decls[&kind].keys().cloned().collect()
    }

    pub fn has(&self, kind: Kind, id: &str) -> bool {
        self.decls[&kind].contains_key(id)
    }

    /// Builds every declaration, in kind order and then id order.
    pub fn build_all(&self) -> LResult<()> {
        for kind in Kind::ALL {
            for id in self.ids(kind) {
                self.get(kind, &id)?;
            }
        }
        Ok(())
    }

    fn get(&self, kind: Kind, id: &str) -> LResult<Obj> {
        let key = (kind, id.to_string());
        if let Some(o) = self.cache.lock().unwrap().get(&key) {
            return Ok(o.clone());
        }
        let path = format!("{}.{id}", kind.key());
        let decl = match self.decls[&kind].get(id) {
            Some(d) => d.clone(),
            None => return err(&path, "unresolved reference"),
        };
        let depth = DEPTH.with(|d| {
            d.set(d.get() + 1);
            d.get()
        });
        let built = if depth > MAX_DEPTH {
            err(&path, "reference cycle")
        } else {
            self.build(kind, &decl, &path)
        };
        DEPTH.with(|d| d.set(d.get() - 1));
        let obj = built?;
        self.cache.lock().unwrap().insert(key, obj.clone());
        Ok(obj)
    }

    fn build(&self, kind: Kind, v: &Value, path: &str) -> LResult<Obj> {
        Ok(match kind {
            Kind::Group => Obj::Group(Arc::new(self.build_group(v, path)?)),
            Kind::Semidirect => Obj::Semidirect(Arc::new(self.build_semidirect(v, path)?)),
            Kind::Inclusion => Obj::Inclusion(Arc::new(self.build_inclusion(v, path)?)),
            Kind::Rep => Obj::Rep(Arc::new(self.build_rep(v, path)?)),
            Kind::Povm => Obj::Povm(Arc::new(self.build_povm(v, path)?)),
            Kind::State => Obj::State(Arc::new(self.build_state(v, path)?)),
            Kind::Operator => Obj::Operator(Arc::new(self.build_operator(v, path)?)),
            Kind::Channel => Obj::Channel(Arc::new(self.build_channel(v, path)?)),
            Kind::Field => Obj::Field(Arc::new(self.build_field(v, path)?)),
            Kind::Bundle => Obj::Bundle(Arc::new(self.build_bundle(v, path)?)),
            Kind::Section => Obj::Section(Arc::new(self.build_section(v, path)?)),
            Kind::Embedding => Obj::Embedding(Arc::new(self.build_embedding(v, path)?)),
            Kind::Frame => Obj::Frame(Arc::new(self.build_frame(v, path)?)),
            Kind::BundleFrame => Obj::BundleFrame(Arc::new(self.build_bundle_frame(v, path)?)),
            Kind::QuantumField => Obj::QuantumField(Arc::new(self.build_quantum_field(v, path)?)),
            Kind::Morphism => Obj::Morphism(Arc::new(self.build_morphism(v, path)?)),
            Kind::Model => Obj::Model(Arc::new(self.build_model(v, path)?)),
            Kind::DifferenceOperator => Obj::DifferenceOperator(Arc::new(self.build_difference_operator(v, path)?)),
            Kind::Path => Obj::Path(Arc::new(self.build_path(v, path)?)),
        })
    }

    getter!(group, group_ref, Group, FiniteGroup, build_group);
    getter!(semidirect, semidirect_ref, Semidirect, SemidirectProduct, build_semidirect);
    getter!(inclusion, inclusion_ref, Inclusion, SubgroupInclusion, build_inclusion);
    getter!(rep, rep_ref, Rep, UnitaryRep, build_rep);
    getter!(povm, povm_ref, Povm, Povm, build_povm);
    getter!(state, state_ref, State, State, build_state);
    getter!(operator, operator_ref, Operator, Operator, build_operator);
    getter!(channel, channel_ref, Channel, Channel, build_channel);
    getter!(field, field_ref, Field, OperatorField, build_field);
    getter!(section, section_ref, Section, SectionEntry, build_section);
    getter!(embedding, embedding_ref, Embedding, BundleEmbedding, build_embedding);
    getter!(frame, frame_ref, Frame, GroupFrame, build_frame);
    getter!(bundle_frame, bundle_frame_ref, BundleFrame, BundleFrame, build_bundle_frame);
    getter!(quantum_field, quantum_field_ref, QuantumField, QuantumField, build_quantum_field);
    getter!(morphism, morphism_ref, Morphism, MorphismEntry, build_morphism);
    getter!(model, model_ref, Model, FrameBundleModel, build_model);
    getter!(difference_operator, difference_operator_ref, DifferenceOperator, DifferenceOperator, build_difference_operator);
    getter!(path_frame, path_ref, Path, PathEntry, build_path);

    /// A bundle reference may name a bundle, the sub-bundle of an embedding
    /// or the bundle of a frame-bundle model.
    pub fn bundle_ref(&self, v: &Value, path: &str) -> LResult<Arc<PrincipalBundle>> {
        match v {
            Value::String(id) if self.has(Kind::Bundle, id) => match self.get(Kind::Bundle, id)? {
                Obj::Bundle(b) => Ok(b),
                _ => unreachable!(),
            },
            Value::String(id) if self.has(Kind::Embedding, id) => Ok(Arc::new(self.embedding(id)?.sub().clone())),
            Value::String(id) if self.has(Kind::Model, id) => Ok(Arc::new(self.model(id)?.bundle().clone())),
            Value::String(id) => err(path, format!("unresolved bundle reference {id:?}")),
            _ => self.build_bundle(v, path).map(Arc::new),
        }
    }

    fn rng(&self, path: &str) -> random::Rng64 {
        random::rng(random::derive_seed(self.seed, path))
    }

    // ---- groups -------------------------------------------------------

    fn build_group(&self, v: &Value, path: &str) -> LResult<FiniteGroup> {
        let o = obj(v, path)?;
        if let Some(b) = o.get("builtin") {
            let n = || usize_at(o, "n", path);
            return match str_of(b, path)? {
                "trivial" => Ok(FiniteGroup::trivial()),
                "cyclic" => Ok(FiniteGroup::cyclic(positive(n()?, path)?)),
                "symmetric" => {
                    let n = n()?;
                    if !(1..=5).contains(&n) {
                        return err(path, "symmetric groups are limited to n <= 5");
                    }
                    Ok(FiniteGroup::symmetric(n))
                }
                "dihedral" => Ok(FiniteGroup::dihedral(positive(n()?, path)?)),
                other => err(path, format!("unknown builtin group {other:?}")),
            };
        }
        if let Some(f) = o.get("direct_product") {
            let parts = arr(f, path)?;
            if parts.len() != 2 {
                return err(path, "direct_product takes two groups");
            }
            let a = self.group_ref(&parts[0], &format!("{path}.direct_product[0]"))?;
            let b = self.group_ref(&parts[1], &format!("{path}.direct_product[1]"))?;
            return Ok(FiniteGroup::direct_product(&a, &b));
        }
        if let Some(s) = o.get("semidirect") {
            return Ok((**self.semidirect_ref(s, &format!("{path}.semidirect"))?.product()).clone());
        }
        let table = o.get("table").ok_or(()).or_else(|_| err(path, "group needs `builtin` or `table`"))?;
        let mul = usize_matrix(table, path)?;
        let identity = o.get("identity").map(|x| usize_of(x, path)).transpose()?.unwrap_or(0);
        let labels = match o.get("labels") {
            Some(l) => string_list(l, path)?,
            None => (0..mul.len()).map(|i| i.to_string()).collect(),
        };
        FiniteGroup::with_labels(mul, identity, labels).at(path)
    }

    fn build_semidirect(&self, v: &Value, path: &str) -> LResult<SemidirectProduct> {
        let o = obj(v, path)?;
        if let Some(b) = o.get("builtin") {
            return match str_of(b, path)? {
                "dihedral" => Ok(SemidirectProduct::dihedral(positive(usize_at(o, "n", path)?, path)?)),
                other => err(path, format!("unknown builtin semidirect product {other:?}")),
            };
        }
        let normal = self.group_ref(field_of(o, "normal", path)?, &format!("{path}.normal"))?;
        let acting = self.group_ref(field_of(o, "acting", path)?, &format!("{path}.acting"))?;
        let action = usize_matrix(field_of(o, "action", path)?, path)?;
        SemidirectProduct::new(normal, acting, action).at(path)
    }

    /// A group element given by label or index.
    pub fn element(&self, group: &FiniteGroup, v: &Value, path: &str) -> LResult<usize> {
        match v {
            Value::String(s) => group
                .index_of(s)
                .ok_or(())
                .or_else(|_| err(path, format!("no element labelled {s:?}"))),
            _ => {
                let g = usize_of(v, path)?;
                group.check_element(g).at(path)?;
                Ok(g)
            }
        }
    }

    fn build_inclusion(&self, v: &Value, path: &str) -> LResult<SubgroupInclusion> {
        let o = obj(v, path)?;
        if let Some(g) = o.get("identity") {
            return Ok(SubgroupInclusion::identity(self.group_ref(g, path)?));
        }
        if let Some(g) = o.get("trivial") {
            return Ok(SubgroupInclusion::trivial(self.group_ref(g, path)?));
        }
        if let Some(s) = o.get("semidirect") {
            let sd = self.semidirect_ref(s, path)?;
            return match o.get("part").map(|p| str_of(p, path)).transpose()? {
                Some("normal") => Ok(sd.normal_inclusion()),
                Some("acting") => Ok(sd.acting_inclusion()),
                _ => err(path, "semidirect inclusion needs part \"normal\" or \"acting\""),
            };
        }
        let parent = self.group_ref(field_of(o, "parent", path)?, &format!("{path}.parent"))?;
        if let Some(e) = o.get("elements") {
            let elements = arr(e, path)?
                .iter()
                .map(|x| self.element(&parent, x, path))
                .collect::<LResult<Vec<_>>>()?;
            return SubgroupInclusion::from_elements(parent, &elements).at(path);
        }
        let sub = self.group_ref(field_of(o, "sub", path)?, &format!("{path}.sub"))?;
        let map = arr(field_of(o, "map", path)?, path)?
            .iter()
            .map(|x| self.element(&parent, x, path))
            .collect::<LResult<Vec<_>>>()?;
        SubgroupInclusion::new(sub, parent, map).at(path)
    }

    // ---- representations and linear algebra ---------------------------

    fn build_rep(&self, v: &Value, path: &str) -> LResult<UnitaryRep> {
        let o = obj(v, path)?;
        if let Some(t) = o.get("tensor") {
            let parts = arr(t, path)?;
            if parts.len() != 2 {
                return err(path, "tensor takes two representations");
            }
            let a = self.rep_ref(&parts[0], path)?;
            let b = self.rep_ref(&parts[1], path)?;
            return a.tensor(&b).at(path);
        }
        if let Some(r) = o.get("restrict") {
            let ro = obj(r, path)?;
            let rep = self.rep_ref(field_of(ro, "rep", path)?, path)?;
            let inc = self.inclusion_ref(field_of(ro, "inclusion", path)?, path)?;
            return rep.restrict(&inc).at(path);
        }
        let group = self.group_ref(field_of(o, "group", path)?, &format!("{path}.group"))?;
        if let Some(b) = o.get("builtin") {
            return match str_of(b, path)? {
                "right_regular" => Ok(UnitaryRep::right_regular(group)),
                "left_regular" => Ok(UnitaryRep::left_regular(group)),
                "defining" => {
                    let n = (1..=5)
                        .find(|&n| FiniteGroup::symmetric(n) == *group)
                        .ok_or(())
                        .or_else(|_| err(path, "defining rep needs a builtin symmetric group"))?;
                    Ok(UnitaryRep::symmetric_defining(n))
                }
                other => err(path, format!("unknown builtin rep {other:?}")),
            };
        }
        if let Some(d) = o.get("trivial") {
            return Ok(UnitaryRep::trivial(group, positive(usize_of(d, path)?, path)?));
        }
        if let Some(p) = o.get("permutations") {
            let perms = usize_matrix(p, path)?;
            return UnitaryRep::from_permutations(group, &perms, self.tol).at(path);
        }
        let mats = arr(field_of(o, "matrices", path)?, path)?
            .iter()
            .enumerate()
            .map(|(i, m)| self.operator_ref(m, &format!("{path}.matrices[{i}]")).map(|a| (*a).clone()))
            .collect::<LResult<Vec<_>>>()?;
        UnitaryRep::new(group, mats, self.tol).at(path)
    }

    fn build_operator(&self, v: &Value, path: &str) -> LResult<Operator> {
        if let Value::Array(_) = v {
            return Operator::new(matrix_from_json(v).at(path)?).at(path);
        }
        let o = obj(v, path)?;
        if let Some(p) = o.get("pauli") {
            return match str_of(p, path)? {
                "x" | "X" => Ok(Operator::pauli_x()),
                "y" | "Y" => Ok(Operator::pauli_y()),
                "z" | "Z" => Ok(Operator::pauli_z()),
                "i" | "I" => Ok(Operator::identity(2)),
                other => err(path, format!("unknown Pauli label {other:?}")),
            };
        }
        if let Some(d) = o.get("identity") {
            return Ok(Operator::identity(positive(usize_of(d, path)?, path)?));
        }
        if let Some(d) = o.get("zero") {
            return Ok(Operator::zeros(positive(usize_of(d, path)?, path)?));
        }
        if let Some(d) = o.get("diagonal") {
            let entries = complex_list(d, path)?;
            if entries.is_empty() {
                return err(path, "empty diagonal");
            }
            let n = entries.len();
            return Operator::new(nalgebra::DMatrix::from_fn(n, n, |i, j| if i == j { entries[i] } else { C64::default() })).at(path);
        }
        if let Some(u) = o.get("matrix_unit") {
            let idx = usize_list(u, path)?;
            if idx.len() != 3 || idx[1] >= idx[0] || idx[2] >= idx[0] {
                return err(path, "matrix_unit takes [dim, row, col] with row, col < dim");
            }
            return Ok(Operator::matrix_unit(idx[0], idx[1], idx[2]));
        }
        if let Some(k) = o.get("kron") {
            let parts = arr(k, path)?;
            let mut acc = self.operator_ref(parts.first().ok_or(()).or_else(|_| err(path, "empty kron"))?, path)?.as_ref().clone();
            for p in &parts[1..] {
                acc = crate::operator::tensor(&acc, &*self.operator_ref(p, path)?).at(path)?;
            }
            return Ok(acc);
        }
        if let Some(s) = o.get("sum") {
            let parts = arr(s, path)?;
            let mut acc: Option<Operator> = None;
            for p in parts {
                let x = self.operator_ref(p, path)?;
                acc = Some(match acc {
                    None => (*x).clone(),
                    Some(a) if a.dim() == x.dim() => a + (*x).clone(),
                    Some(_) => return err(path, "sum of operators of different dimensions"),
                });
            }
            return acc.ok_or(()).or_else(|_| err(path, "empty sum"));
        }
        if let Some(s) = o.get("scale") {
            let so = obj(s, path)?;
            let factor = complex_of(field_of(so, "by", path)?, path)?;
            return Ok(self.operator_ref(field_of(so, "operator", path)?, path)?.scale(factor));
        }
        if let Some(r) = o.get("random") {
            let dim = positive(usize_of(r, path)?, path)?;
            return Ok(random::random_operator(&mut self.rng(path), dim));
        }
        if let Some(r) = o.get("random_hermitian") {
            let dim = positive(usize_of(r, path)?, path)?;
            return Ok(random::random_hermitian(&mut self.rng(path), dim));
        }
        if let Some(r) = o.get("random_unitary") {
            let dim = positive(usize_of(r, path)?, path)?;
            return Ok(random::random_unitary(&mut self.rng(path), dim));
        }
        if let Some(m) = o.get("matrix") {
            return self.build_operator(m, path);
        }
        err(path, "unrecognized operator declaration")
    }

    fn build_state(&self, v: &Value, path: &str) -> LResult<State> {
        if let Value::Array(_) = v {
            return State::new(Operator::new(matrix_from_json(v).at(path)?).at(path)?, self.tol).at(path);
        }
        let o = obj(v, path)?;
        if let Some(i) = o.get("basis") {
            let i = usize_of(i, path)?;
            let d = usize_at(o, "dim", path)?;
            if i >= d {
                return err(path, format!("basis index {i} out of range for dimension {d}"));
            }
            return Ok(State::basis(d, i));
        }
        if let Some(d) = o.get("maximally_mixed") {
            return Ok(State::maximally_mixed(positive(usize_of(d, path)?, path)?));
        }
        if let Some(p) = o.get("diagonal") {
            let p = f64_list(p, path)?;
            return State::diagonal(&p, self.tol).at(path);
        }
        if let Some(a) = o.get("pure") {
            return State::pure(&complex_list(a, path)?).at(path);
        }
        if let Some(m) = o.get("mix") {
            let mo = obj(m, path)?;
            let w = f64_of(field_of(mo, "weight", path)?, path)?;
            let a = self.state_ref(field_of(mo, "a", path)?, path)?;
            let b = self.state_ref(field_of(mo, "b", path)?, path)?;
            return State::mix(w, &a, &b).at(path);
        }
        if let Some(t) = o.get("tensor") {
            let parts = arr(t, path)?;
            if parts.len() != 2 {
                return err(path, "tensor takes two states");
            }
            let a = self.state_ref(&parts[0], path)?;
            let b = self.state_ref(&parts[1], path)?;
            return a.tensor(&b).at(path);
        }
        if let Some(a) = o.get("act") {
            let ao = obj(a, path)?;
            let rep = self.rep_ref(field_of(ao, "rep", path)?, path)?;
            let g = self.element(rep.group(), field_of(ao, "element", path)?, path)?;
            let s = self.state_ref(field_of(ao, "state", path)?, path)?;
            return rep.act_on_state(g, &s).at(path);
        }
        if let Some(r) = o.get("random") {
            let dim = positive(usize_of(r, path)?, path)?;
            return Ok(random::random_state(&mut self.rng(path), dim));
        }
        if let Some(m) = o.get("matrix") {
            return self.build_state(m, path);
        }
        err(path, "unrecognized state declaration")
    }

    fn build_channel(&self, v: &Value, path: &str) -> LResult<Channel> {
        let o = obj(v, path)?;
        if let Some(d) = o.get("identity") {
            return Ok(Channel::identity(positive(usize_of(d, path)?, path)?));
        }
        if let Some(u) = o.get("unitary") {
            return Channel::unitary(&*self.operator_ref(u, path)?, self.tol).at(path);
        }
        if let Some(d) = o.get("depolarizing") {
            return Ok(Channel::completely_depolarizing(positive(usize_of(d, path)?, path)?));
        }
        if let Some(k) = o.get("kraus") {
            let mats = arr(k, path)?
                .iter()
                .map(|m| matrix_from_json(m).at(path))
                .collect::<LResult<Vec<_>>>()?;
            return Channel::new(mats, self.tol).at(path);
        }
        if let Some(r) = o.get("replace") {
            let ro = obj(r, path)?;
            let s = self.state_ref(field_of(ro, "state", path)?, path)?;
            let d = positive(usize_at(ro, "in_dim", path)?, path)?;
            return Ok(Channel::replace(&s, d));
        }
        if let Some(t) = o.get("twirl") {
            let to = obj(t, path)?;
            let rep = self.rep_ref(field_of(to, "rep", path)?, path)?;
            let w = to.get("weight").map(|x| f64_of(x, path)).transpose()?.unwrap_or(1.0);
            return rep.partial_twirl(w, self.tol).at(path);
        }
        if let Some(p) = o.get("permutation") {
            let perm = usize_list(p, path)?;
            let mut seen = vec![false; perm.len()];
            for &x in &perm {
                if x >= perm.len() || std::mem::replace(&mut seen[x], true) {
                    return err(path, "not a permutation");
                }
            }
            return crate::bundle::permutation_channel(&perm, self.tol).at(path);
        }
        if let Some(r) = o.get("random") {
            let ro = obj(r, path)?;
            let rows = positive(usize_at(ro, "in", path)?, path)?;
            let cols = positive(usize_at(ro, "out", path)?, path)?;
            let k = ro.get("kraus").map(|x| usize_of(x, path)).transpose()?.unwrap_or(rows.max(cols));
            if k * rows < cols {
                return err(path, "too few Kraus operators for a channel");
            }
            return Ok(random::random_channel(&mut self.rng(path), rows, cols, k));
        }
        err(path, "unrecognized channel declaration")
    }

    fn build_povm(&self, v: &Value, path: &str) -> LResult<Povm> {
        let o = obj(v, path)?;
        if let Some(i) = o.get("ideal") {
            let space = match i {
                Value::Array(_) => SampleSpace::new(string_list(i, path)?).at(path)?,
                _ => SampleSpace::indexed(positive(usize_of(i, path)?, path)?),
            };
            return Ok(ideal_povm(&space));
        }
        if let Some(g) = o.get("ideal_group") {
            return Ok(ideal_povm(&SampleSpace::of_group(&*self.group_ref(g, path)?)));
        }
        if let Some(c) = o.get("compose") {
            let co = obj(c, path)?;
            let psi = self.channel_ref(field_of(co, "channel", path)?, path)?;
            let e = self.povm_ref(field_of(co, "povm", path)?, path)?;
            return compose_with_channel(&psi, &e).at(path);
        }
        if let Some(p) = o.get("push_forward") {
            let po = obj(p, path)?;
            let e = self.povm_ref(field_of(po, "povm", path)?, path)?;
            let inc = self.inclusion_ref(field_of(po, "inclusion", path)?, path)?;
            return push_forward_inclusion(&e, &inc).at(path);
        }
        if let Some(r) = o.get("random") {
            let ro = obj(r, path)?;
            let dim = positive(usize_at(ro, "dim", path)?, path)?;
            let n = positive(usize_at(ro, "outcomes", path)?, path)?;
            return Ok(random::random_povm(&mut self.rng(path), dim, n));
        }
        let space = SampleSpace::new(string_list(field_of(o, "space", path)?, path)?).at(path)?;
        let effects = obj(field_of(o, "effects", path)?, path)?;
        let ops = space
            .labels()
            .iter()
            .map(|l| {
                let e = effects
                    .get(l)
                    .ok_or(())
                    .or_else(|_| err(path, format!("no effect for point {l:?}")))?;
                self.operator_ref(e, &format!("{path}.effects.{l}")).map(|a| (*a).clone())
            })
            .collect::<LResult<Vec<_>>>()?;
        Povm::new(space, ops, self.tol).at(path)
    }

    fn build_field(&self, v: &Value, path: &str) -> LResult<OperatorField> {
        let o = obj(v, path)?;
        if let Some(c) = o.get("constant") {
            let space = self.space_of(field_of(o, "space", path)?, path)?;
            return Ok(OperatorField::constant(space, (*self.operator_ref(c, path)?).clone()));
        }
        if let Some(f) = o.get("fourier") {
            let fo = obj(f, path)?;
            let n = positive(usize_at(fo, "n", path)?, path)?;
            let k = usize_at(fo, "k", path)?;
            let a = self.operator_ref(field_of(fo, "value", path)?, path)?;
            return Ok(crate::pde::fourier_mode_field(n, k, &a));
        }
        if let Some(r) = o.get("random") {
            let ro = obj(r, path)?;
            let n = positive(usize_at(ro, "points", path)?, path)?;
            let d = positive(usize_at(ro, "dim", path)?, path)?;
            return Ok(random::random_field(&mut self.rng(path), n, d));
        }
        if let Some(r) = o.get("orbit") {
            let ro = obj(r, path)?;
            let rep = self.rep_ref(field_of(ro, "rep", path)?, path)?;
            let a = self.operator_ref(field_of(ro, "operator", path)?, path)?;
            let sys = crate::group_frame::SystemAction::new((*rep).clone());
            return crate::group_frame::orbit_field(&a, &sys).at(path);
        }
        if let Some(t) = o.get("translation") {
            let to = obj(t, path)?;
            let sd = self.semidirect_ref(field_of(to, "semidirect", path)?, path)?;
            let rep = self.rep_ref(field_of(to, "rep", path)?, path)?;
            let a = self.operator_ref(field_of(to, "operator", path)?, path)?;
            let sys = crate::group_frame::SystemAction::new((*rep).clone());
            return crate::group_frame::translation_field(&a, &sd, &sys).at(path);
        }
        let space = self.space_of(field_of(o, "space", path)?, path)?;
        let values = obj(field_of(o, "values", path)?, path)?;
        let ops = space
            .labels()
            .iter()
            .map(|l| {
                let x = values
                    .get(l)
                    .ok_or(())
                    .or_else(|_| err(path, format!("no value at point {l:?}")))?;
                self.operator_ref(x, &format!("{path}.values.{l}")).map(|a| (*a).clone())
            })
            .collect::<LResult<Vec<_>>>()?;
        OperatorField::new(space, ops).at(path)
    }

    /// A sample space given as a label list or a point count.
    pub fn space_of(&self, v: &Value, path: &str) -> LResult<SampleSpace> {
        match v {
            Value::Array(_) => SampleSpace::new(string_list(v, path)?).at(path),
            _ => Ok(SampleSpace::indexed(positive(usize_of(v, path)?, path)?)),
        }
    }

    // ---- bundles ------------------------------------------------------

    fn build_bundle(&self, v: &Value, path: &str) -> LResult<PrincipalBundle> {
        let o = obj(v, path)?;
        if let Some(t) = o.get("trivial") {
            let to = obj(t, path)?;
            let base = string_list(field_of(to, "base", path)?, path)?;
            let g = self.group_ref(field_of(to, "group", path)?, path)?;
            return PrincipalBundle::trivial(base, g).at(path);
        }
        let base = string_list(field_of(o, "base", path)?, path)?;
        let group = self.group_ref(field_of(o, "group", path)?, path)?;
        let total = string_list(field_of(o, "total", path)?, path)?;
        let index = |labels: &[String], l: &str, what: &str| {
            labels
                .iter()
                .position(|x| x == l)
                .ok_or(())
                .or_else(|_| err(path, format!("unknown {what} {l:?}")))
        };
        let proj_map = obj(field_of(o, "proj", path)?, path)?;
        let act_map = obj(field_of(o, "action", path)?, path)?;
        let mut proj = Vec::new();
        let mut action = Vec::new();
        for b in &total {
            let p = proj_map
                .get(b)
                .ok_or(())
                .or_else(|_| err(path, format!("no projection for {b:?}")))?;
            proj.push(index(&base, str_of(p, path)?, "base point")?);
            let row = obj(
                act_map
                    .get(b)
                    .ok_or(())
                    .or_else(|_| err(path, format!("no action row for {b:?}")))?,
                path,
            )?;
            let mut r = vec![usize::MAX; group.order()];
            for (g_label, target) in row {
                let g = self.element(&group, &Value::String(g_label.clone()), path)?;
                r[g] = index(&total, str_of(target, path)?, "point")?;
            }
            if r.contains(&usize::MAX) {
                return err(path, format!("action row for {b:?} misses group elements"));
            }
            action.push(r);
        }
        PrincipalBundle::new(base, group, total, proj, action).at(path)
    }

    fn build_section(&self, v: &Value, path: &str) -> LResult<SectionEntry> {
        let o = obj(v, path)?;
        if let Some(m) = o.get("reference") {
            let model = self.model_ref(m, path)?;
            return Ok(SectionEntry {
                bundle: Arc::new(model.bundle().clone()),
                section: model.reference().clone(),
            });
        }
        let bundle = self.bundle_ref(field_of(o, "bundle", path)?, &format!("{path}.bundle"))?;
        let map = obj(field_of(o, "map", path)?, path)?;
        let mut pairs = Vec::new();
        for (p, b) in map {
            let pi = bundle
                .base_index(p)
                .ok_or(())
                .or_else(|_| err(path, format!("unknown base point {p:?}")))?;
            let bl = str_of(b, path)?;
            let bi = bundle
                .total_index(bl)
                .ok_or(())
                .or_else(|_| err(path, format!("unknown point {bl:?}")))?;
            pairs.push((pi, bi));
        }
        let section = LocalSection::new(&bundle, &pairs).at(path)?;
        Ok(SectionEntry { bundle, section })
    }

    fn build_embedding(&self, v: &Value, path: &str) -> LResult<BundleEmbedding> {
        let o = obj(v, path)?;
        if let Some(s) = o.get("along_section") {
            let sec = self.section_ref(s, path)?;
            return BundleEmbedding::along_section(&sec.bundle, &sec.section).at(path);
        }
        let sub = self.bundle_ref(field_of(o, "sub", path)?, path)?;
        let parent = self.bundle_ref(field_of(o, "parent", path)?, path)?;
        let inc = self.inclusion_ref(field_of(o, "group", path)?, path)?;
        let label_map = |key: &str, from: &[String], to: &PrincipalBundle, base: bool| -> LResult<Vec<usize>> {
            let m = obj(field_of(o, key, path)?, path)?;
            from.iter()
                .map(|l| {
                    let t = str_of(
                        m.get(l).ok_or(()).or_else(|_| err(path, format!("{key} map misses {l:?}")))?,
                        path,
                    )?;
                    let found = if base { to.base_index(t) } else { to.total_index(t) };
                    found.ok_or(()).or_else(|_| err(path, format!("unknown target {t:?}")))
                })
                .collect()
        };
        let total = label_map("total", sub.total_labels(), &parent, false)?;
        let base = label_map("base", sub.base_labels(), &parent, true)?;
        BundleEmbedding::new((*sub).clone(), (*parent).clone(), (*inc).clone(), total, base).at(path)
    }

    fn build_frame(&self, v: &Value, path: &str) -> LResult<GroupFrame> {
        let o = obj(v, path)?;
        if let Some(g) = o.get("ideal") {
            return Ok(GroupFrame::ideal(self.group_ref(g, path)?));
        }
        if let Some(r) = o.get("reduce") {
            let ro = obj(r, path)?;
            let sub = self.frame_ref(field_of(ro, "frame", path)?, path)?;
            let inc = self.inclusion_ref(field_of(ro, "inclusion", path)?, path)?;
            return reduce_frame(&sub, &inc).at(path);
        }
        let rep = self.rep_ref(field_of(o, "rep", path)?, &format!("{path}.rep"))?;
        let povm = self.povm_ref(field_of(o, "povm", path)?, &format!("{path}.povm"))?;
        match o.get("covariance") {
            Some(c) => {
                let inc = self.inclusion_ref(c, path)?;
                GroupFrame::with_covariance((*inc).clone(), (*rep).clone(), (*povm).clone(), self.tol).at(path)
            }
            None => GroupFrame::new((*rep).clone(), (*povm).clone(), self.tol).at(path),
        }
    }

    fn build_bundle_frame(&self, v: &Value, path: &str) -> LResult<BundleFrame> {
        let o = obj(v, path)?;
        if let Some(r) = o.get("reduce") {
            let ro = obj(r, path)?;
            let sub = self.bundle_frame_ref(field_of(ro, "frame", path)?, path)?;
            let emb = self.embedding_ref(field_of(ro, "embedding", path)?, path)?;
            return reduce_bundle_frame(&sub, &emb).at(path);
        }
        let sec = self.section_ref(field_of(o, "section", path)?, &format!("{path}.section"))?;
        let bundle = (*sec.bundle).clone();
        if o.get("ideal").and_then(Value::as_bool).unwrap_or(false) {
            return BundleFrame::ideal(bundle, sec.section.clone()).at(path);
        }
        let rep = self.rep_ref(field_of(o, "rep", path)?, path)?;
        let povm = self.povm_ref(field_of(o, "povm", path)?, path)?;
        BundleFrame::new(bundle, sec.section.clone(), (*rep).clone(), (*povm).clone(), self.tol).at(path)
    }

    fn build_quantum_field(&self, v: &Value, path: &str) -> LResult<QuantumField> {
        let o = obj(v, path)?;
        let rep = self.rep_ref(field_of(o, "rep", path)?, &format!("{path}.rep"))?;
        let base: Vec<String> = match (o.get("bundle"), o.get("base")) {
            (Some(b), _) => self.bundle_ref(b, path)?.base_labels().to_vec(),
            (None, Some(b)) => string_list(b, path)?,
            _ => return err(path, "field needs `bundle` or `base`"),
        };
        if let Some(c) = o.get("constant") {
            let a = self.operator_ref(c, path)?;
            return QuantumField::constant(base.len(), (*a).clone(), (*rep).clone()).at(path);
        }
        let values = obj(field_of(o, "values", path)?, path)?;
        for k in values.keys() {
            if !base.contains(k) {
                return err(path, format!("value given at unknown base point {k:?}"));
            }
        }
        let vals = base
            .iter()
            .map(|p| match values.get(p) {
                None | Some(Value::Null) => Ok(None),
                Some(x) => self.operator_ref(x, &format!("{path}.values.{p}")).map(|a| Some((*a).clone())),
            })
            .collect::<LResult<Vec<_>>>()?;
        QuantumField::new(vals, (*rep).clone()).at(path)
    }

    fn build_morphism(&self, v: &Value, path: &str) -> LResult<MorphismEntry> {
        let o = obj(v, path)?;
        let from = self.bundle_frame_ref(field_of(o, "from", path)?, &format!("{path}.from"))?;
        let to = self.bundle_frame_ref(field_of(o, "to", path)?, &format!("{path}.to"))?;
        let theta_map = obj(field_of(o, "theta", path)?, path)?;
        let mut theta = vec![usize::MAX; from.bundle().total_len()];
        for (b, t) in theta_map {
            let bi = from
                .bundle()
                .total_index(b)
                .ok_or(())
                .or_else(|_| err(path, format!("unknown source point {b:?}")))?;
            let tl = str_of(t, path)?;
            theta[bi] = to
                .bundle()
                .total_index(tl)
                .ok_or(())
                .or_else(|_| err(path, format!("unknown target point {tl:?}")))?;
        }
        let psi = match o.get("psi") {
            Some(Value::String(s)) if s == "permutation" => {
                let lt = crate::bundle::local_theta(&theta, &from, &to).at(path)?;
                crate::bundle::permutation_channel(&lt, self.tol).at(path)?
            }
            Some(p) => (*self.channel_ref(p, path)?).clone(),
            None => return err(path, "morphism needs `psi`"),
        };
        let morphism = FrameMorphism::from_point_map(psi, &theta, &from, &to, self.tol).at(path)?;
        Ok(MorphismEntry { morphism, from, to })
    }

    fn build_model(&self, v: &Value, path: &str) -> LResult<FrameBundleModel> {
        let o = obj(v, path)?;
        if let Some(b) = o.get("builtin") {
            let n = match o.get("base") {
                Some(x) => positive(usize_of(x, path)?, path)?,
                None => 1,
            };
            return match str_of(b, path)? {
                "s3" => s3_model(n).at(path),
                "s4" => s4_model(n).at(path),
                other => err(path, format!("unknown builtin model {other:?}")),
            };
        }
        let inc = self.inclusion_ref(field_of(o, "subgroup", path)?, path)?;
        let base = string_list(field_of(o, "base", path)?, path)?;
        FrameBundleModel::trivial(base, (*inc).clone()).at(path)
    }

    fn build_difference_operator(&self, v: &Value, path: &str) -> LResult<DifferenceOperator> {
        let o = obj(v, path)?;
        let op = if let Some(b) = o.get("builtin") {
            let n = || positive(usize_at(o, "n", path)?, path);
            match str_of(b, path)? {
                "zero" => DifferenceOperator::zero(SampleSpace::indexed(n()?)),
                "identity" => DifferenceOperator::identity(SampleSpace::indexed(n()?)),
                "forward_difference" => DifferenceOperator::forward_difference(n()?),
                "shift" => DifferenceOperator::shift(n()?, usize_at(o, "k", path)?),
                "mode_annihilator" => DifferenceOperator::mode_annihilator(n()?, usize_at(o, "k", path)?),
                other => return err(path, format!("unknown builtin difference operator {other:?}")),
            }
        } else {
            let grid = self.space_of(field_of(o, "grid", path)?, path)?;
            return DifferenceOperator::new(grid, matrix_from_json(field_of(o, "matrix", path)?).at(path)?).at(path);
        };
        match o.get("grid") {
            Some(g) => DifferenceOperator::new(self.space_of(g, path)?, op.matrix().clone()).at(path),
            None => Ok(op),
        }
    }

    fn build_path(&self, v: &Value, path: &str) -> LResult<PathEntry> {
        let o = obj(v, path)?;
        let bundle = self.bundle_ref(field_of(o, "bundle", path)?, path)?;
        let points = string_list(field_of(o, "path", path)?, path)?
            .iter()
            .map(|l| {
                bundle
                    .base_index(l)
                    .ok_or(())
                    .or_else(|_| err(path, format!("unknown base point {l:?}")))
            })
            .collect::<LResult<Vec<_>>>()?;
        let lift = match o.get("lift") {
            None => None,
            Some(l) => Some(
                string_list(l, path)?
                    .iter()
                    .map(|x| {
                        bundle
                            .total_index(x)
                            .ok_or(())
                            .or_else(|_| err(path, format!("unknown point {x:?}")))
                    })
                    .collect::<LResult<Vec<_>>>()?,
            ),
        };
        let povm = self.povm_ref(field_of(o, "povm", path)?, path)?;
        let frame = PathFrame::new(points, lift, (*povm).clone(), &bundle).at(path)?;
        Ok(PathEntry { bundle, frame })
    }
}

// ---- JSON helpers -------------------------------------------------------

pub(crate) fn obj<'a>(v: &'a Value, path: &str) -> LResult<&'a Map<String, Value>> {
    v.as_object().ok_or(()).or_else(|_| err(path, "expected an object"))
}

pub(crate) fn arr<'a>(v: &'a Value, path: &str) -> LResult<&'a Vec<Value>> {
    v.as_array().ok_or(()).or_else(|_| err(path, "expected an array"))
}

pub(crate) fn field_of<'a>(o: &'a Map<String, Value>, key: &str, path: &str) -> LResult<&'a Value> {
    o.get(key).ok_or(()).or_else(|_| err(path, format!("missing `{key}`")))
}

pub(crate) fn str_of<'a>(v: &'a Value, path: &str) -> LResult<&'a str> {
    v.as_str().ok_or(()).or_else(|_| err(path, "expected a string"))
}

pub(crate) fn usize_of(v: &Value, path: &str) -> LResult<usize> {
    v.as_u64()
        .map(|x| x as usize)
        .ok_or(())
        .or_else(|_| err(path, "expected a non-negative integer"))
}

pub(crate) fn usize_at(o: &Map<String, Value>, key: &str, path: &str) -> LResult<usize> {
    usize_of(field_of(o, key, path)?, &format!("{path}.{key}"))
}

pub(crate) fn positive(n: usize, path: &str) -> LResult<usize> {
    if n == 0 {
        err(path, "dimension must be positive")
    } else {
        Ok(n)
    }
}

pub(crate) fn f64_of(v: &Value, path: &str) -> LResult<f64> {
    v.as_f64().ok_or(()).or_else(|_| err(path, "expected a number"))
}

pub(crate) fn f64_list(v: &Value, path: &str) -> LResult<Vec<f64>> {
    arr(v, path)?.iter().map(|x| f64_of(x, path)).collect()
}

pub(crate) fn usize_list(v: &Value, path: &str) -> LResult<Vec<usize>> {
    arr(v, path)?.iter().map(|x| usize_of(x, path)).collect()
}

pub(crate) fn usize_matrix(v: &Value, path: &str) -> LResult<Vec<Vec<usize>>> {
    arr(v, path)?.iter().map(|r| usize_list(r, path)).collect()
}

pub(crate) fn string_list(v: &Value, path: &str) -> LResult<Vec<String>> {
    arr(v, path)?
        .iter()
        .map(|x| match x {
            Value::String(s) => Ok(s.clone()),
            Value::Number(n) => Ok(n.to_string()),
            _ => err(path, "labels must be strings or numbers"),
        })
        .collect()
}

pub(crate) fn complex_of(v: &Value, path: &str) -> LResult<C64> {
    match v {
        Value::Number(n) => Ok(C64::new(n.as_f64().unwrap_or(f64::NAN), 0.0)),
        Value::Array(p) if p.len() == 2 => Ok(C64::new(f64_of(&p[0], path)?, f64_of(&p[1], path)?)),
        _ => err(path, "expected a number or [re, im]"),
    }
}

pub(crate) fn complex_list(v: &Value, path: &str) -> LResult<Vec<C64>> {
    arr(v, path)?.iter().map(|x| complex_of(x, path)).collect()
}

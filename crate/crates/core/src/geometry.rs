//! Frame-bundle geometry over a finite base.
//!
//! A [`FrameBundleModel`] is a principal `G_L`-bundle together with a
//! subgroup `H < G_L` and a reference trivialization. The left cosets
//! `g H` label metric sectors: the sector of a point `b` is the coset of its
//! coordinate in the reference trivialization. A section then induces a
//! sector per base point, an `H`-sub-bundle of the points lying in their
//! base point's sector, and a tetrad section of that sub-bundle.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::bundle::{
    apply_frame_morphism, field_orbit, relativize_field, restrict_field, section_coordinate, BundleEmbedding,
    BundleFrame, FrameMorphism, LocalSection, PrincipalBundle, QuantumField,
};
use crate::error::{Error, Result};
use crate::integral::OperatorField;
use crate::measure::{born_measure, Povm, SampleSpace};
use crate::operator::{tensor, Operator, State};
use crate::pde::{kernel_membership, DifferenceOperator};
use crate::symmetry::{FiniteGroup, SubgroupInclusion, UnitaryRep};

/// Index of a left coset `g H` in a [`FrameBundleModel`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MetricSector(pub usize);

/// A `G_L`-bundle with a distinguished subgroup and reference trivialization.
#[derive(Clone, Debug)]
pub struct FrameBundleModel {
    bundle: PrincipalBundle,
    little: SubgroupInclusion,
    reference: LocalSection,
    cosets: Vec<Vec<usize>>,
    coset_of: Vec<usize>,
}

impl FrameBundleModel {
    /// `reference` must be defined on the whole base.
    pub fn new(bundle: PrincipalBundle, little: SubgroupInclusion, reference: LocalSection) -> Result<Self> {
        if **little.parent() != **bundle.group() {
            return Err(Error::Precondition("subgroup does not sit in the bundle's group".into()));
        }
        if reference.domain().len() != bundle.base_len() {
            return Err(Error::Section("reference trivialization must be global".into()));
        }
        let big = bundle.group().clone();
        let mut coset_of = vec![usize::MAX; big.order()];
        let mut cosets = Vec::new();
        for g in big.elements() {
            if coset_of[g] != usize::MAX {
                continue;
            }
            let members: Vec<usize> = little.images().iter().map(|&h| big.mul(g, h)).collect();
            for &m in &members {
                coset_of[m] = cosets.len();
            }
            cosets.push(members);
        }
        Ok(Self {
            bundle,
            little,
            reference,
            cosets,
            coset_of,
        })
    }

    /// `M × G_L` with the reference section through the identity.
    pub fn trivial(base: Vec<String>, little: SubgroupInclusion) -> Result<Self> {
        let big = little.parent().clone();
        let bundle = PrincipalBundle::trivial(base, big.clone())?;
        let reference = LocalSection::constant(&bundle, big.identity())?;
        Self::new(bundle, little, reference)
    }

    pub fn bundle(&self) -> &PrincipalBundle {
        &self.bundle
    }

    pub fn big_group(&self) -> &Arc<FiniteGroup> {
        self.bundle.group()
    }

    pub fn little(&self) -> &SubgroupInclusion {
        &self.little
    }

    pub fn reference(&self) -> &LocalSection {
        &self.reference
    }

    /// Left cosets `g H`, each listed as `g h` for `h` in subgroup order,
    /// with `g` the smallest element index of the coset.
    pub fn cosets(&self) -> &[Vec<usize>] {
        &self.cosets
    }

    pub fn sector_count(&self) -> usize {
        self.cosets.len()
    }

    pub fn coset_of(&self, g: usize) -> MetricSector {
        MetricSector(self.coset_of[g])
    }

    /// Coordinate of `b` in the reference trivialization.
    pub fn reference_coordinate(&self, b: usize) -> usize {
        section_coordinate(&self.bundle, &self.reference, b).expect("reference section is global")
    }

    /// The sector containing the point `b`.
    pub fn sector_of(&self, b: usize) -> MetricSector {
        self.coset_of(self.reference_coordinate(b))
    }
}

/// The fiber over one base point split into sectors, with every point
/// factored as `ref(p) . (rep(sector) h)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Stratification {
    pub sectors: Vec<Vec<usize>>,
    pub factors: BTreeMap<usize, (MetricSector, usize)>,
}

/// Partitions the fiber over `p` into `|G_L| / |H|` sectors of size `|H|`.
pub fn stratify(model: &FrameBundleModel, p: usize) -> Result<Stratification> {
    if p >= model.bundle.base_len() {
        return Err(Error::InvalidPoint {
            point: p,
            size: model.bundle.base_len(),
        });
    }
    let big = model.big_group();
    let mut sectors = vec![Vec::new(); model.sector_count()];
    let mut factors = BTreeMap::new();
    for b in model.bundle.fiber(p) {
        let k = model.reference_coordinate(b);
        let s = model.coset_of(k);
        let rep = model.cosets[s.0][0];
        let h = model
            .little
            .preimage(big.mul(big.inv(rep), k))
            .expect("coset member differs from its representative by a subgroup element");
        sectors[s.0].push(b);
        factors.insert(b, (s, h));
    }
    Ok(Stratification { sectors, factors })
}

/// The metric induced by a section, with its sub-bundle and tetrad.
#[derive(Clone, Debug)]
pub struct SectionMetric {
    /// Sector per base point, `None` off the section's domain.
    pub sectors: Vec<Option<MetricSector>>,
    /// `H`-bundle of points lying in their base point's sector, over `U`.
    pub sub_bundle: PrincipalBundle,
    /// Embedding of the sub-bundle into the model bundle.
    pub embedding: BundleEmbedding,
    /// Section of the sub-bundle with `i ∘ σ_T = σ_L`.
    pub tetrad: LocalSection,
}

impl SectionMetric {
    /// Points of the sub-bundle as points of the model bundle.
    pub fn points(&self) -> &[usize] {
        self.embedding.total_map()
    }
}

pub fn metric_from_section(model: &FrameBundleModel, section: &LocalSection) -> Result<SectionMetric> {
    let bundle = &model.bundle;
    if section.at(bundle.base_len()).is_some() || section.domain().iter().any(|&p| p >= bundle.base_len()) {
        return Err(Error::Section("section belongs to a different base".into()));
    }
    let domain = section.domain();
    let mut sectors = vec![None; bundle.base_len()];
    for &p in &domain {
        let b = section.at(p).unwrap();
        if bundle.proj(b) != p {
            return Err(Error::Section("section does not match the model bundle".into()));
        }
        sectors[p] = Some(model.sector_of(b));
    }
    let little = model.little.sub().clone();
    let mut total = Vec::new();
    let mut proj = Vec::new();
    let mut labels = Vec::new();
    for (i, &p) in domain.iter().enumerate() {
        for b in bundle.fiber(p) {
            if Some(model.sector_of(b)) == sectors[p] {
                total.push(b);
                proj.push(i);
                labels.push(bundle.total_labels()[b].clone());
            }
        }
    }
    let index: BTreeMap<usize, usize> = total.iter().enumerate().map(|(i, &b)| (b, i)).collect();
    let action = total
        .iter()
        .map(|&b| {
            little
                .elements()
                .map(|h| index[&bundle.act(b, model.little.embed(h))])
                .collect()
        })
        .collect();
    let base_labels = domain.iter().map(|&p| bundle.base_labels()[p].clone()).collect();
    let sub_bundle = PrincipalBundle::new(base_labels, little, labels, proj, action)?;
    let tetrad_pairs: Vec<(usize, usize)> = domain
        .iter()
        .enumerate()
        .map(|(i, &p)| (i, index[&section.at(p).unwrap()]))
        .collect();
    let tetrad = LocalSection::new(&sub_bundle, &tetrad_pairs)?;
    let embedding = BundleEmbedding::new(sub_bundle.clone(), bundle.clone(), model.little.clone(), total, domain)?;
    Ok(SectionMetric {
        sectors,
        sub_bundle,
        embedding,
        tetrad,
    })
}

/// `(g(p), Λ(p))` with `σ(p) = ref(p) . (rep(g(p)) Λ(p))`.
pub fn section_factorization(model: &FrameBundleModel, section: &LocalSection, p: usize) -> Result<(MetricSector, usize)> {
    let b = section
        .at(p)
        .ok_or_else(|| Error::Section(format!("base point {p} outside the domain")))?;
    Ok(stratify(model, p)?.factors[&b])
}

/// Born probabilities of the frame on the `(base point, sector)` cells of
/// `π⁻¹(U)`.
#[derive(Clone, Debug)]
pub struct GeometryDistribution {
    /// Base points of the frame's domain, in order.
    pub base_points: Vec<usize>,
    /// `cells[i][s] = μ_ω(sector s over base_points[i])`.
    pub cells: Vec<Vec<f64>>,
}

impl GeometryDistribution {
    /// `μ_ω(B_g)` for a sector assignment over `base_points`.
    pub fn assignment_probability(&self, assignment: &[MetricSector]) -> Result<f64> {
        if assignment.len() != self.cells.len() {
            return Err(Error::DimensionMismatch {
                expected: self.cells.len(),
                found: assignment.len(),
            });
        }
        assignment
            .iter()
            .zip(&self.cells)
            .map(|(s, row)| {
                row.get(s.0).copied().ok_or(Error::InvalidPoint {
                    point: s.0,
                    size: row.len(),
                })
            })
            .sum()
    }

    /// `μ_ω(π⁻¹(p))` for each base point.
    pub fn base_marginal(&self) -> Vec<f64> {
        self.cells.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn total(&self) -> f64 {
        self.cells.iter().flatten().sum()
    }

    /// All global sector assignments in lexicographic order.
    pub fn assignments(&self) -> Vec<Vec<MetricSector>> {
        let sectors = self.cells.first().map_or(0, Vec::len);
        let mut out = vec![Vec::new()];
        for _ in &self.cells {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    (0..sectors).map(move |s| {
                        let mut next = prefix.clone();
                        next.push(MetricSector(s));
                        next
                    })
                })
                .collect();
        }
        out
    }
}

pub fn indefinite_geometry_probabilities(model: &FrameBundleModel, frame: &BundleFrame, omega: &State) -> Result<GeometryDistribution> {
    if *frame.bundle() != model.bundle {
        return Err(Error::Precondition("frame lives on a different bundle".into()));
    }
    let mu = born_measure(frame.povm(), omega)?;
    let base_points = frame.section().domain();
    let mut cells = vec![vec![0.0; model.sector_count()]; base_points.len()];
    for (i, &b) in frame.points().iter().enumerate() {
        let row = base_points.binary_search(&model.bundle.proj(b)).unwrap();
        cells[row][model.sector_of(b).0] += mu[i];
    }
    Ok(GeometryDistribution { base_points, cells })
}

/// `(¥_ω(φ̂)` on the `G_L` frame, the same sum taken only over the
/// section's sub-bundle with tetrad coordinates`)`. The two agree when `μ_ω`
/// is supported on the sub-bundle.
pub fn restrict_in_section_metric(
    model: &FrameBundleModel,
    frame: &BundleFrame,
    field: &QuantumField,
    omega: &State,
) -> Result<(Operator, Operator)> {
    let full = restrict_field(field, frame, omega)?;
    let metric = metric_from_section(model, frame.section())?;
    let mu = born_measure(frame.povm(), omega)?;
    let mut reduced = Operator::zeros(field.dim());
    for (i, &b) in metric.points().iter().enumerate() {
        let lambda = section_coordinate(&metric.sub_bundle, &metric.tetrad, i)?;
        let v = field.value(model.bundle.proj(b))?;
        let moved = field.sys_rep().act_on_operator(v, model.little.embed(lambda))?;
        let m = mu[frame.local_index(b).expect("sub-bundle lies over the domain")];
        reduced += &moved.scale_real(m);
    }
    Ok((full, reduced))
}

/// Which of the path-restricted sums to evaluate.
#[derive(Clone, Debug)]
pub enum PathVariant {
    /// `Σ_t φ̂(γ(t)) μ(t)`.
    OnSection,
    /// `Σ_t φ̂(γ(t)).Λ(t) μ(t)` with `Λ(t)` the coordinate of the lift.
    Lifted,
    /// `Σ_{t, Λ} φ̂(γ(t)).Λ μ(t, Λ)`, POVM outcome `t + |I| Λ`.
    IndefiniteOrientation,
    /// As above with `Λ` ranging over a designated subgroup.
    Stationary(SubgroupInclusion),
}

impl PathVariant {
    pub fn name(&self) -> &'static str {
        match self {
            Self::OnSection => "on_section",
            Self::Lifted => "lifted",
            Self::IndefiniteOrientation => "indefinite_orientation",
            Self::Stationary(_) => "stationary",
        }
    }
}

/// A frame localized along a path `γ: I → M` with an optional lift.
#[derive(Clone, Debug)]
pub struct PathFrame {
    path: Vec<usize>,
    lift: Option<Vec<usize>>,
    povm: Povm,
}

impl PathFrame {
    /// Validates `π ∘ γ̄ = γ` against `bundle` when a lift is given.
    pub fn new(path: Vec<usize>, lift: Option<Vec<usize>>, povm: Povm, bundle: &PrincipalBundle) -> Result<Self> {
        if path.is_empty() {
            return Err(Error::Precondition("empty path".into()));
        }
        if let Some(&p) = path.iter().find(|&&p| p >= bundle.base_len()) {
            return Err(Error::InvalidPoint {
                point: p,
                size: bundle.base_len(),
            });
        }
        if let Some(lift) = &lift {
            if lift.len() != path.len() {
                return Err(Error::Section("lift and path differ in length".into()));
            }
            for (t, (&b, &p)) in lift.iter().zip(&path).enumerate() {
                if b >= bundle.total_len() || bundle.proj(b) != p {
                    return Err(Error::Section(format!("lift leaves the path at step {t}")));
                }
            }
        }
        if povm.space().len() % path.len() != 0 {
            return Err(Error::SpaceMismatch("POVM outcomes do not cover the path".into()));
        }
        Ok(Self { path, lift, povm })
    }

    pub fn len(&self) -> usize {
        self.path.len()
    }

    pub fn is_empty(&self) -> bool {
        self.path.is_empty()
    }

    pub fn path(&self) -> &[usize] {
        &self.path
    }

    pub fn lift(&self) -> Option<&[usize]> {
        self.lift.as_deref()
    }

    pub fn povm(&self) -> &Povm {
        &self.povm
    }
}

/// The path-restricted observable in one of the four forms. `section` gives
/// the coordinates of lifted points; `field` carries a representation of the
/// bundle's group.
pub fn path_restricted_observable(
    pf: &PathFrame,
    bundle: &PrincipalBundle,
    section: &LocalSection,
    field: &QuantumField,
    omega: &State,
    variant: &PathVariant,
) -> Result<Operator> {
    let mu = born_measure(&pf.povm, omega)?;
    let n = pf.len();
    let rep = field.sys_rep();
    let mut acc = Operator::zeros(field.dim());
    let expect_outcomes = |k: usize| {
        if mu.len() == k {
            Ok(())
        } else {
            Err(Error::SpaceMismatch(format!(
                "{} variant needs {k} outcomes, POVM has {}",
                variant.name(),
                mu.len()
            )))
        }
    };
    match variant {
        PathVariant::OnSection => {
            expect_outcomes(n)?;
            for (t, &p) in pf.path.iter().enumerate() {
                acc += &field.value(p)?.scale_real(mu[t]);
            }
        }
        PathVariant::Lifted => {
            expect_outcomes(n)?;
            let lift = pf
                .lift
                .as_ref()
                .ok_or_else(|| Error::Precondition("lifted variant needs a lift".into()))?;
            for (t, (&p, &b)) in pf.path.iter().zip(lift).enumerate() {
                let k = section_coordinate(bundle, section, b)?;
                acc += &rep.act_on_operator(field.value(p)?, k)?.scale_real(mu[t]);
            }
        }
        PathVariant::IndefiniteOrientation => {
            let group = bundle.group();
            expect_outcomes(n * group.order())?;
            for h in group.elements() {
                for (t, &p) in pf.path.iter().enumerate() {
                    let m = mu[t + n * h];
                    if m != 0.0 {
                        acc += &rep.act_on_operator(field.value(p)?, h)?.scale_real(m);
                    }
                }
            }
        }
        PathVariant::Stationary(inc) => {
            if **inc.parent() != **bundle.group() {
                return Err(Error::Precondition("stationary subgroup is not in the bundle's group".into()));
            }
            expect_outcomes(n * inc.sub().order())?;
            for k in inc.sub().elements() {
                for (t, &p) in pf.path.iter().enumerate() {
                    let m = mu[t + n * k];
                    if m != 0.0 {
                        acc += &rep.act_on_operator(field.value(p)?, inc.embed(k))?.scale_real(m);
                    }
                }
            }
        }
    }
    Ok(acc)
}

/// Whether a frame morphism preserves the metric sectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransformKind {
    Isometry,
    Diffeomorphism,
}

impl TransformKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Isometry => "isometry",
            Self::Diffeomorphism => "diffeomorphism",
        }
    }
}

/// Classifies `θ` as sector-preserving on the source section's sub-bundle
/// and reports the transformation-identity residual.
pub fn isometric_frame_transform(
    m: &FrameMorphism,
    model: &FrameBundleModel,
    from: &BundleFrame,
    to: &BundleFrame,
    field: &QuantumField,
) -> Result<(TransformKind, f64)> {
    if *from.bundle() != model.bundle || *to.bundle() != model.bundle {
        return Err(Error::Precondition("frames must live on the model bundle".into()));
    }
    let metric = metric_from_section(model, from.section())?;
    let preserves = metric.points().iter().all(|&b| {
        let i = from.local_index(b).expect("sub-bundle lies over the domain");
        model.sector_of(m.theta()[i]) == model.sector_of(b)
    });
    let kind = if preserves {
        TransformKind::Isometry
    } else {
        TransformKind::Diffeomorphism
    };
    Ok((kind, apply_frame_morphism(m, field, from, to)?))
}

/// How the sector equations weight each point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EquationWeight {
    /// `1` if the field solves the sector's equation within `tol`, else `0`.
    Indicator,
    /// `exp(−(r / width)²)` for the equation residual `r`.
    Gaussian { width: f64 },
}

/// `Σ_b w(b) φ̂(π(b)).W(b) ⊗ E({b})`, where `W(b)` is the `G_L` coordinate
/// relative to the frame's section and `w(b)` weights how well the field
/// solves the equation attached to the sector of `b`.
pub fn gr_coupled_relativize(
    model: &FrameBundleModel,
    frame: &BundleFrame,
    field: &QuantumField,
    equations: &BTreeMap<MetricSector, DifferenceOperator>,
    weight: EquationWeight,
    tol: f64,
) -> Result<Operator> {
    let residuals = sector_residuals(model, field, equations, tol)?;
    let orbit = field_orbit(field, frame)?;
    let mut acc = Operator::zeros(field.dim() * frame.dim());
    for (i, &b) in frame.points().iter().enumerate() {
        let r = residuals[model.sector_of(b).0];
        let w = match weight {
            EquationWeight::Indicator => {
                if r <= tol {
                    1.0
                } else {
                    0.0
                }
            }
            EquationWeight::Gaussian { width } => (-(r / width).powi(2)).exp(),
        };
        if w != 0.0 {
            acc += &tensor(&orbit[i], frame.povm().effect(i))?.scale_real(w);
        }
    }
    Ok(acc)
}

/// `max_p ‖T̂_s(φ̂)(p)‖` for every sector `s`.
pub fn sector_residuals(
    model: &FrameBundleModel,
    field: &QuantumField,
    equations: &BTreeMap<MetricSector, DifferenceOperator>,
    tol: f64,
) -> Result<Vec<f64>> {
    let values = (0..model.bundle.base_len())
        .map(|p| field.value(p).cloned())
        .collect::<Result<Vec<_>>>()?;
    let labels = model.bundle.base_labels().to_vec();
    let as_field = OperatorField::new(SampleSpace::new(labels)?, values)?;
    (0..model.sector_count())
        .map(|s| {
            let t = equations
                .get(&MetricSector(s))
                .ok_or_else(|| Error::Precondition(format!("no equation for sector {s}")))?;
            let t = DifferenceOperator::new(as_field.space().clone(), t.matrix().clone())?;
            Ok(kernel_membership(&t, &as_field, tol)?.1)
        })
        .collect()
}

/// `‖gr_coupled_relativize − relativize_field‖`; zero when the field
/// solves every sector's equation.
pub fn gr_reduction_residual(
    model: &FrameBundleModel,
    frame: &BundleFrame,
    field: &QuantumField,
    equations: &BTreeMap<MetricSector, DifferenceOperator>,
    tol: f64,
) -> Result<f64> {
    let gr = gr_coupled_relativize(model, frame, field, equations, EquationWeight::Indicator, tol)?;
    Ok(gr.distance(&relativize_field(field, frame)?))
}

/// `S_3 ⊃ {e, (0 1)}` as a model over `n` base points.
pub fn s3_model(n: usize) -> Result<FrameBundleModel> {
    let s3 = Arc::new(FiniteGroup::symmetric(3));
    let swap = s3.index_of("102").expect("transposition present");
    let little = SubgroupInclusion::from_elements(s3, &[0, swap])?;
    FrameBundleModel::trivial((0..n).map(|i| format!("p{i}")).collect(), little)
}

/// `S_4 ⊃ A_4` as a model over `n` base points.
pub fn s4_model(n: usize) -> Result<FrameBundleModel> {
    let s4 = Arc::new(FiniteGroup::symmetric(4));
    let even: Vec<usize> = crate::symmetry::symmetric_permutations(4)
        .iter()
        .enumerate()
        .filter(|(_, p)| permutation_is_even(p))
        .map(|(i, _)| i)
        .collect();
    let little = SubgroupInclusion::from_elements(s4, &even)?;
    FrameBundleModel::trivial((0..n).map(|i| format!("p{i}")).collect(), little)
}

fn permutation_is_even(p: &[usize]) -> bool {
    let inversions = (0..p.len())
        .flat_map(|i| (i + 1..p.len()).map(move |j| (i, j)))
        .filter(|&(i, j)| p[i] > p[j])
        .count();
    inversions % 2 == 0
}

/// The system representation used by the geometry examples: `S_3` on `C^3`.
pub fn s3_defining_rep() -> UnitaryRep {
    UnitaryRep::symmetric_defining(3)
}

//! Finite groups given by Cayley tables, their unitary representations,
//! subgroup inclusions, semidirect products and torsors.
//!
//! Group elements are plain indices into the multiplication table. Actions on
//! states are left (`g.ρ = U(g) ρ U(g)*`) and actions on operators are right
//! (`a.g = U(g)* a U(g)`), so that `tr[g.ρ a] = tr[ρ a.g]`.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::operator::{Channel, Operator, State};

/// A finite group as an exhaustively verified multiplication table.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteGroup {
    mul: Vec<Vec<usize>>,
    inv: Vec<usize>,
    identity: usize,
    labels: Vec<String>,
}

impl FiniteGroup {
    /// Validates the table (closure, identity, inverses, associativity).
    pub fn new(mul: Vec<Vec<usize>>, identity: usize) -> Result<Self> {
        let n = mul.len();
        let labels = (0..n).map(|i| i.to_string()).collect();
        Self::with_labels(mul, identity, labels)
    }

    pub fn with_labels(mul: Vec<Vec<usize>>, identity: usize, labels: Vec<String>) -> Result<Self> {
        let n = mul.len();
        if n == 0 {
            return Err(Error::GroupAxiom("empty table".into()));
        }
        if labels.len() != n {
            return Err(Error::GroupAxiom(format!("{} labels for order {n}", labels.len())));
        }
        if identity >= n {
            return Err(Error::GroupAxiom(format!("identity {identity} out of range")));
        }
        for (a, row) in mul.iter().enumerate() {
            if row.len() != n {
                return Err(Error::GroupAxiom(format!("row {a} has length {}", row.len())));
            }
            if let Some(&bad) = row.iter().find(|&&x| x >= n) {
                return Err(Error::GroupAxiom(format!("entry {bad} in row {a} out of range")));
            }
        }
        for a in 0..n {
            if mul[identity][a] != a || mul[a][identity] != a {
                return Err(Error::GroupAxiom(format!("identity law fails at {a}")));
            }
        }
        let mut inv = vec![usize::MAX; n];
        for a in 0..n {
            match (0..n).find(|&b| mul[a][b] == identity) {
                Some(b) if mul[b][a] == identity => inv[a] = b,
                _ => return Err(Error::GroupAxiom(format!("element {a} has no inverse"))),
            }
        }
        for a in 0..n {
            for b in 0..n {
                let ab = mul[a][b];
                for c in 0..n {
                    if mul[ab][c] != mul[a][mul[b][c]] {
                        return Err(Error::GroupAxiom(format!(
                            "associativity fails at ({a}, {b}, {c})"
                        )));
                    }
                }
            }
        }
        let mut seen = std::collections::HashSet::new();
        if !labels.iter().all(|l| seen.insert(l)) {
            return Err(Error::GroupAxiom("duplicate element labels".into()));
        }
        Ok(Self {
            mul,
            inv,
            identity,
            labels,
        })
    }

    pub fn trivial() -> Self {
        Self::cyclic(1)
    }

    /// `Z_n` with `a·b = a + b mod n`.
    pub fn cyclic(n: usize) -> Self {
        assert!(n > 0, "cyclic group of order zero");
        let mul = (0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect();
        Self {
            mul,
            inv: (0..n).map(|a| (n - a) % n).collect(),
            identity: 0,
            labels: (0..n).map(|i| i.to_string()).collect(),
        }
    }

    /// `S_n` with elements in lexicographic order of their one-line notation
    /// and `(σ·τ)(i) = σ(τ(i))`. The identity is element 0.
    pub fn symmetric(n: usize) -> Self {
        let perms = symmetric_permutations(n);
        let index: HashMap<&Vec<usize>, usize> =
            perms.iter().enumerate().map(|(i, p)| (p, i)).collect();
        let mul: Vec<Vec<usize>> = perms
            .iter()
            .map(|s| {
                perms
                    .iter()
                    .map(|t| {
                        let st: Vec<usize> = (0..n).map(|i| s[t[i]]).collect();
                        index[&st]
                    })
                    .collect()
            })
            .collect();
        let labels = perms
            .iter()
            .map(|p| p.iter().map(|x| x.to_string()).collect::<String>())
            .collect();
        Self::with_labels(mul, 0, labels).expect("symmetric group table is valid")
    }

    /// Dihedral group of order `2n`, built as `Z_n ⋊ Z_2`.
    pub fn dihedral(n: usize) -> Self {
        (**SemidirectProduct::dihedral(n).product()).clone()
    }

    /// `A × B` with element `(a, b)` stored at index `a + |A|·b`.
    pub fn direct_product(a: &FiniteGroup, b: &FiniteGroup) -> Self {
        let (na, nb) = (a.order(), b.order());
        let mul = (0..na * nb)
            .map(|x| {
                (0..na * nb)
                    .map(|y| a.mul(x % na, y % na) + na * b.mul(x / na, y / na))
                    .collect()
            })
            .collect();
        let labels = (0..na * nb)
            .map(|x| format!("({},{})", a.label(x % na), b.label(x / na)))
            .collect();
        Self::with_labels(mul, a.identity() + na * b.identity(), labels)
            .expect("direct product table is valid")
    }

    pub fn order(&self) -> usize {
        self.mul.len()
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.mul[a][b]
    }

    pub fn inv(&self, a: usize) -> usize {
        self.inv[a]
    }

    pub fn table(&self) -> &[Vec<usize>] {
        &self.mul
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, a: usize) -> &str {
        &self.labels[a]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn elements(&self) -> std::ops::Range<usize> {
        0..self.order()
    }

    pub fn check_element(&self, g: usize) -> Result<()> {
        if g < self.order() {
            Ok(())
        } else {
            Err(Error::InvalidElement {
                element: g,
                order: self.order(),
            })
        }
    }

    pub fn is_abelian(&self) -> bool {
        self.elements()
            .all(|a| self.elements().all(|b| self.mul(a, b) == self.mul(b, a)))
    }
}

/// All permutations of `0..n` in lexicographic order.
pub fn symmetric_permutations(n: usize) -> Vec<Vec<usize>> {
    let mut p: Vec<usize> = (0..n).collect();
    let mut out = vec![p.clone()];
    loop {
        let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| p[i] < p[i + 1]) else {
            return out;
        };
        let j = (i + 1..n).rev().find(|&j| p[j] > p[i]).unwrap();
        p.swap(i, j);
        p[i + 1..].reverse();
        out.push(p.clone());
    }
}

/// A strict unitary representation `g ↦ U(g)`.
#[derive(Clone, Debug)]
pub struct UnitaryRep {
    group: Arc<FiniteGroup>,
    matrices: Vec<Operator>,
}

impl UnitaryRep {
    /// Checks unitarity, `U(e) = I` and `U(g)U(h) = U(gh)` exhaustively.
    pub fn new(group: Arc<FiniteGroup>, matrices: Vec<Operator>, tol: f64) -> Result<Self> {
        if matrices.len() != group.order() {
            return Err(Error::DimensionMismatch {
                expected: group.order(),
                found: matrices.len(),
            });
        }
        let dim = matrices[0].dim();
        let id = Operator::identity(dim);
        for u in &matrices {
            if u.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: u.dim(),
                });
            }
            let deviation = (&u.adjoint() * u).distance(&id);
            if deviation > tol {
                return Err(Error::NotUnitary { deviation });
            }
        }
        let rep = Self { group, matrices };
        let violation = rep.homomorphism_violation();
        if violation > tol {
            return Err(Error::NotHomomorphism(format!(
                "max |U(g)U(h) - U(gh)| = {violation:e}"
            )));
        }
        Ok(rep)
    }

    /// Max over all pairs of `|U(g)U(h) - U(gh)|`, including `|U(e) - I|`.
    pub fn homomorphism_violation(&self) -> f64 {
        let g = &self.group;
        let mut worst = self.matrices[g.identity()].distance(&Operator::identity(self.dim()));
        for a in g.elements() {
            for b in g.elements() {
                let lhs = &self.matrices[a] * &self.matrices[b];
                worst = worst.max(lhs.distance(&self.matrices[g.mul(a, b)]));
            }
        }
        worst
    }

    pub fn trivial(group: Arc<FiniteGroup>, dim: usize) -> Self {
        let matrices = vec![Operator::identity(dim); group.order()];
        Self { group, matrices }
    }

    /// The right-translation representation `U(g)|y> = |y g⁻¹>` on `C^|G|`.
    /// The projectors `|x><x|` form a covariant POVM for it under
    /// right translation of the sample space.
    pub fn right_regular(group: Arc<FiniteGroup>) -> Self {
        let n = group.order();
        let matrices = group
            .elements()
            .map(|g| {
                let gi = group.inv(g);
                permutation_matrix(n, |y| group.mul(y, gi))
            })
            .collect();
        Self { group, matrices }
    }

    /// The left-translation representation `U(g)|y> = |g y>`.
    pub fn left_regular(group: Arc<FiniteGroup>) -> Self {
        let n = group.order();
        let matrices = group
            .elements()
            .map(|g| permutation_matrix(n, |y| group.mul(g, y)))
            .collect();
        Self { group, matrices }
    }

    /// `U(g)|i> = |perm_g(i)>` for a family of permutations indexed by element.
    pub fn from_permutations(group: Arc<FiniteGroup>, perms: &[Vec<usize>], tol: f64) -> Result<Self> {
        let n = perms.first().map_or(0, Vec::len);
        let matrices = perms.iter().map(|p| permutation_matrix(n, |i| p[i])).collect();
        Self::new(group, matrices, tol)
    }

    /// The defining permutation representation of `S_n` on `C^n`.
    pub fn symmetric_defining(n: usize) -> Self {
        let group = Arc::new(FiniteGroup::symmetric(n));
        let perms = symmetric_permutations(n);
        let matrices = perms.iter().map(|p| permutation_matrix(n, |i| p[i])).collect();
        Self { group, matrices }
    }

    pub fn group(&self) -> &Arc<FiniteGroup> {
        &self.group
    }

    pub fn dim(&self) -> usize {
        self.matrices[0].dim()
    }

    pub fn matrix(&self, g: usize) -> &Operator {
        &self.matrices[g]
    }

    pub fn matrices(&self) -> &[Operator] {
        &self.matrices
    }

    /// `g.ρ = U(g) ρ U(g)*`.
    pub fn act_on_state(&self, g: usize, rho: &State) -> Result<State> {
        Ok(State::new_unchecked(self.act_left(g, rho.op())?))
    }

    /// Left action on an arbitrary operator.
    pub fn act_left(&self, g: usize, a: &Operator) -> Result<Operator> {
        self.group.check_element(g)?;
        self.check_dim(a)?;
        let u = &self.matrices[g];
        Ok(&(u * a) * &u.adjoint())
    }

    /// `a.g = U(g)* a U(g)`.
    pub fn act_on_operator(&self, a: &Operator, g: usize) -> Result<Operator> {
        self.group.check_element(g)?;
        self.check_dim(a)?;
        Ok(a.conjugate_by(&self.matrices[g]))
    }

    fn check_dim(&self, a: &Operator) -> Result<()> {
        if a.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: a.dim(),
            });
        }
        Ok(())
    }

    /// The diagonal representation `g ↦ U(g) ⊗ V(g)` on the composite.
    pub fn tensor(&self, other: &UnitaryRep) -> Result<UnitaryRep> {
        if self.group != other.group && *self.group != *other.group {
            return Err(Error::Precondition("tensor of reps of different groups".into()));
        }
        let matrices = self
            .matrices
            .iter()
            .zip(&other.matrices)
            .map(|(u, v)| crate::operator::tensor(u, v))
            .collect::<Result<_>>()?;
        Ok(Self {
            group: self.group.clone(),
            matrices,
        })
    }

    /// Pulls the representation back along a subgroup inclusion.
    pub fn restrict(&self, inc: &SubgroupInclusion) -> Result<UnitaryRep> {
        if **inc.parent() != *self.group {
            return Err(Error::Precondition("inclusion parent differs from rep group".into()));
        }
        Ok(Self {
            group: inc.sub().clone(),
            matrices: inc.sub().elements().map(|h| self.matrices[inc.embed(h)].clone()).collect(),
        })
    }

    /// The mixed-unitary channel `a ↦ (1 - p) a + p/|G| Σ_g a.g`, which
    /// commutes with the right action of every group element.
    pub fn partial_twirl(&self, p: f64, tol: f64) -> Result<Channel> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Precondition(format!("twirl weight {p} outside [0, 1]")));
        }
        let n = self.group.order() as f64;
        let mut weights = vec![1.0 - p];
        let mut unitaries = vec![Operator::identity(self.dim())];
        for u in &self.matrices {
            weights.push(p / n);
            unitaries.push(u.clone());
        }
        Channel::mixed_unitary(&weights, &unitaries, tol)
    }
}

fn permutation_matrix(n: usize, image: impl Fn(usize) -> usize) -> Operator {
    let mut m = Operator::zeros(n).into_matrix();
    for j in 0..n {
        m[(image(j), j)] = num_complex::Complex64::new(1.0, 0.0);
    }
    Operator::from_matrix_unchecked(m)
}

/// `g.ρ` for a representation.
pub fn act_on_state(rep: &UnitaryRep, g: usize, rho: &State) -> Result<State> {
    rep.act_on_state(g, rho)
}

/// `a.g` for a representation.
pub fn act_on_operator(rep: &UnitaryRep, a: &Operator, g: usize) -> Result<Operator> {
    rep.act_on_operator(a, g)
}

/// An injective homomorphism `sub ↪ parent`.
#[derive(Clone, Debug)]
pub struct SubgroupInclusion {
    sub: Arc<FiniteGroup>,
    parent: Arc<FiniteGroup>,
    embed: Vec<usize>,
}

impl SubgroupInclusion {
    pub fn new(sub: Arc<FiniteGroup>, parent: Arc<FiniteGroup>, embed: Vec<usize>) -> Result<Self> {
        if embed.len() != sub.order() {
            return Err(Error::NotHomomorphism(format!(
                "embedding lists {} images for a group of order {}",
                embed.len(),
                sub.order()
            )));
        }
        for &x in &embed {
            parent.check_element(x)?;
        }
        if embed[sub.identity()] != parent.identity() {
            return Err(Error::NotHomomorphism("identity not preserved".into()));
        }
        let mut seen = vec![false; parent.order()];
        for &x in &embed {
            if std::mem::replace(&mut seen[x], true) {
                return Err(Error::NotHomomorphism("embedding is not injective".into()));
            }
        }
        for a in sub.elements() {
            for b in sub.elements() {
                if embed[sub.mul(a, b)] != parent.mul(embed[a], embed[b]) {
                    return Err(Error::NotHomomorphism(format!(
                        "embedding fails to respect product ({a}, {b})"
                    )));
                }
            }
        }
        Ok(Self { sub, parent, embed })
    }

    pub fn identity(group: Arc<FiniteGroup>) -> Self {
        let embed = group.elements().collect();
        Self {
            sub: group.clone(),
            parent: group,
            embed,
        }
    }

    /// `{e} ↪ G`.
    pub fn trivial(parent: Arc<FiniteGroup>) -> Self {
        Self {
            sub: Arc::new(FiniteGroup::trivial()),
            embed: vec![parent.identity()],
            parent,
        }
    }

    /// The subgroup formed by a closed subset of `parent`, with elements
    /// numbered in the order given. The first listed element must be the identity.
    pub fn from_elements(parent: Arc<FiniteGroup>, elements: &[usize]) -> Result<Self> {
        for &x in elements {
            parent.check_element(x)?;
        }
        if elements.first() != Some(&parent.identity()) {
            return Err(Error::NotHomomorphism("subgroup must list the identity first".into()));
        }
        let pos: HashMap<usize, usize> = elements.iter().enumerate().map(|(i, &x)| (x, i)).collect();
        let mut mul = Vec::with_capacity(elements.len());
        for &a in elements {
            let mut row = Vec::with_capacity(elements.len());
            for &b in elements {
                let ab = parent.mul(a, b);
                row.push(*pos.get(&ab).ok_or_else(|| {
                    Error::NotHomomorphism(format!("subset not closed: {a}·{b} = {ab}"))
                })?);
            }
            mul.push(row);
        }
        let labels = elements.iter().map(|&x| parent.label(x).to_string()).collect();
        let sub = Arc::new(FiniteGroup::with_labels(mul, 0, labels)?);
        Self::new(sub, parent, elements.to_vec())
    }

    /// `self` followed by `outer`.
    pub fn then(&self, outer: &SubgroupInclusion) -> Result<SubgroupInclusion> {
        if *self.parent != *outer.sub {
            return Err(Error::Precondition("inclusions do not compose".into()));
        }
        Ok(Self {
            sub: self.sub.clone(),
            parent: outer.parent.clone(),
            embed: self.embed.iter().map(|&x| outer.embed[x]).collect(),
        })
    }

    pub fn sub(&self) -> &Arc<FiniteGroup> {
        &self.sub
    }

    pub fn parent(&self) -> &Arc<FiniteGroup> {
        &self.parent
    }

    pub fn embed(&self, h: usize) -> usize {
        self.embed[h]
    }

    pub fn images(&self) -> &[usize] {
        &self.embed
    }

    /// Preimage of a parent element, if it lies in the image.
    pub fn preimage(&self, g: usize) -> Option<usize> {
        self.embed.iter().position(|&x| x == g)
    }

    pub fn is_identity(&self) -> bool {
        self.sub.order() == self.parent.order()
    }
}

/// `T ⋊ L` with `(t, l)(t', l') = (t·l(t'), l l')`; element `(t, l)` of the
/// product is stored at index `t + |T|·l`.
#[derive(Clone, Debug)]
pub struct SemidirectProduct {
    normal: Arc<FiniteGroup>,
    acting: Arc<FiniteGroup>,
    action: Vec<Vec<usize>>,
    product: Arc<FiniteGroup>,
}

impl SemidirectProduct {
    /// `action[l][t]` is the image of `t` under the automorphism `l`.
    pub fn new(normal: Arc<FiniteGroup>, acting: Arc<FiniteGroup>, action: Vec<Vec<usize>>) -> Result<Self> {
        let (nt, nl) = (normal.order(), acting.order());
        if action.len() != nl || action.iter().any(|r| r.len() != nt) {
            return Err(Error::NotHomomorphism("action table has the wrong shape".into()));
        }
        for (l, row) in action.iter().enumerate() {
            for a in 0..nt {
                normal.check_element(row[a])?;
                for b in 0..nt {
                    if row[normal.mul(a, b)] != normal.mul(row[a], row[b]) {
                        return Err(Error::NotHomomorphism(format!(
                            "action of {l} is not an automorphism"
                        )));
                    }
                }
            }
            let mut seen = vec![false; nt];
            for &x in row {
                seen[x] = true;
            }
            if seen.contains(&false) {
                return Err(Error::NotHomomorphism(format!("action of {l} is not bijective")));
            }
        }
        for t in 0..nt {
            if action[acting.identity()][t] != t {
                return Err(Error::NotHomomorphism("identity acts nontrivially".into()));
            }
            for a in 0..nl {
                for b in 0..nl {
                    if action[acting.mul(a, b)][t] != action[a][action[b][t]] {
                        return Err(Error::NotHomomorphism(format!(
                            "action is not a homomorphism at ({a}, {b})"
                        )));
                    }
                }
            }
        }
        let mul = (0..nt * nl)
            .map(|x| {
                let (t, l) = (x % nt, x / nt);
                (0..nt * nl)
                    .map(|y| {
                        let (t2, l2) = (y % nt, y / nt);
                        normal.mul(t, action[l][t2]) + nt * acting.mul(l, l2)
                    })
                    .collect()
            })
            .collect();
        let labels = (0..nt * nl)
            .map(|x| format!("({},{})", normal.label(x % nt), acting.label(x / nt)))
            .collect();
        let product = Arc::new(FiniteGroup::with_labels(
            mul,
            normal.identity() + nt * acting.identity(),
            labels,
        )?);
        Ok(Self {
            normal,
            acting,
            action,
            product,
        })
    }

    /// `Z_n ⋊ Z_2` with the reflection acting as `t ↦ -t`.
    pub fn dihedral(n: usize) -> Self {
        let normal = Arc::new(FiniteGroup::cyclic(n));
        let acting = Arc::new(FiniteGroup::cyclic(2));
        let action = vec![(0..n).collect(), (0..n).map(|t| (n - t) % n).collect()];
        Self::new(normal, acting, action).expect("dihedral action is valid")
    }

    pub fn normal(&self) -> &Arc<FiniteGroup> {
        &self.normal
    }

    pub fn acting(&self) -> &Arc<FiniteGroup> {
        &self.acting
    }

    pub fn product(&self) -> &Arc<FiniteGroup> {
        &self.product
    }

    pub fn action(&self) -> &[Vec<usize>] {
        &self.action
    }

    pub fn element(&self, t: usize, l: usize) -> usize {
        t + self.normal.order() * l
    }

    /// `T ↪ T ⋊ L`, `t ↦ (t, e)`.
    pub fn normal_inclusion(&self) -> SubgroupInclusion {
        let e = self.acting.identity();
        SubgroupInclusion {
            sub: self.normal.clone(),
            parent: self.product.clone(),
            embed: self.normal.elements().map(|t| self.element(t, e)).collect(),
        }
    }

    /// `L ↪ T ⋊ L`, `l ↦ (e, l)`.
    pub fn acting_inclusion(&self) -> SubgroupInclusion {
        let e = self.normal.identity();
        SubgroupInclusion {
            sub: self.acting.clone(),
            parent: self.product.clone(),
            embed: self.acting.elements().map(|l| self.element(e, l)).collect(),
        }
    }

    /// Splits `g = (t, e)·(e, l)`.
    pub fn factorize(&self, g: usize) -> (usize, usize) {
        let nt = self.normal.order();
        (g % nt, g / nt)
    }
}

/// `g = (t, e)·(e, l)` in a semidirect product.
pub fn factorize_semidirect(sd: &SemidirectProduct, g: usize) -> (usize, usize) {
    sd.factorize(g)
}

/// A `G`-torsor realized on the carrier of `G` with a chosen origin: the
/// point labelled `x` is reached from the origin by the unique `g` with
/// `g·origin = x`.
#[derive(Clone, Debug)]
pub struct Torsor {
    group: Arc<FiniteGroup>,
    origin: usize,
}

impl Torsor {
    pub fn new(group: Arc<FiniteGroup>, origin: usize) -> Result<Self> {
        group.check_element(origin)?;
        Ok(Self { group, origin })
    }

    pub fn origin(&self) -> usize {
        self.origin
    }

    pub fn group(&self) -> &Arc<FiniteGroup> {
        &self.group
    }

    /// `g.x_e`.
    pub fn point_of(&self, g: usize) -> usize {
        self.group.mul(g, self.origin)
    }

    /// The group element carrying the origin to `x`.
    pub fn element_of(&self, x: usize) -> usize {
        self.group.mul(x, self.group.inv(self.origin))
    }

    /// The same torsor with origin moved to `h.x_e`.
    pub fn shifted(&self, h: usize) -> Self {
        Self {
            group: self.group.clone(),
            origin: self.point_of(h),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-12;

    fn z2_flip() -> UnitaryRep {
        let g = Arc::new(FiniteGroup::cyclic(2));
        UnitaryRep::new(g, vec![Operator::identity(2), Operator::pauli_x()], TOL).unwrap()
    }

    #[test]
    fn builtin_groups_satisfy_axioms() {
        for g in [
            FiniteGroup::trivial(),
            FiniteGroup::cyclic(5),
            FiniteGroup::symmetric(3),
            FiniteGroup::symmetric(4),
            FiniteGroup::dihedral(4),
            FiniteGroup::direct_product(&FiniteGroup::cyclic(2), &FiniteGroup::cyclic(3)),
        ] {
            let rebuilt =
                FiniteGroup::with_labels(g.table().to_vec(), g.identity(), g.labels().to_vec());
            assert!(rebuilt.is_ok());
        }
        assert_eq!(FiniteGroup::symmetric(3).order(), 6);
        assert!(!FiniteGroup::symmetric(3).is_abelian());
        assert!(!FiniteGroup::dihedral(4).is_abelian());
    }

    #[test]
    fn rejects_non_associative_table() {
        // a Latin square with identity 0 that is not a group (order 5 loop)
        let mul = vec![
            vec![0, 1, 2, 3, 4],
            vec![1, 0, 3, 4, 2],
            vec![2, 4, 0, 1, 3],
            vec![3, 2, 4, 0, 1],
            vec![4, 3, 1, 2, 0],
        ];
        assert!(matches!(FiniteGroup::new(mul, 0), Err(Error::GroupAxiom(_))));
    }

    #[test]
    fn state_action_examples() {
        let rep = z2_flip();
        let zero = State::basis(2, 0);
        assert_eq!(rep.act_on_state(0, &zero).unwrap(), zero);
        assert_eq!(rep.act_on_state(1, &zero).unwrap(), State::basis(2, 1));
        assert!(rep.act_on_state(2, &zero).is_err());
    }

    #[test]
    fn operator_action_examples() {
        let rep = z2_flip();
        let z = Operator::pauli_z();
        assert_eq!(rep.act_on_operator(&z, 0).unwrap(), z);
        assert_eq!(rep.act_on_operator(&z, 1).unwrap(), -&z);
    }

    #[test]
    fn right_action_law_and_duality_on_s3() {
        let rep = UnitaryRep::symmetric_defining(3);
        let g = rep.group().clone();
        let a = Operator::from_real(3, &[1.0, 2.0, 0.0, -1.0, 0.5, 3.0, 0.0, 1.0, 2.0]).unwrap();
        let rho = State::diagonal(&[0.5, 0.3, 0.2], TOL).unwrap();
        for x in g.elements() {
            for y in g.elements() {
                let lhs = rep.act_on_operator(&rep.act_on_operator(&a, x).unwrap(), y).unwrap();
                let rhs = rep.act_on_operator(&a, g.mul(x, y)).unwrap();
                assert!(lhs.distance(&rhs) < TOL);
                let left = rep.act_on_state(x, &rep.act_on_state(y, &rho).unwrap()).unwrap();
                let direct = rep.act_on_state(g.mul(x, y), &rho).unwrap();
                assert!(left.op().distance(direct.op()) < TOL);
            }
            let moved = rep.act_on_state(x, &rho).unwrap();
            let lhs = crate::operator::expect(&moved, &a).unwrap();
            let rhs = crate::operator::expect(&rho, &rep.act_on_operator(&a, x).unwrap()).unwrap();
            assert!((lhs - rhs).norm() < TOL);
        }
    }

    #[test]
    fn regular_reps_are_homomorphisms() {
        let g = Arc::new(FiniteGroup::dihedral(4));
        for rep in [UnitaryRep::right_regular(g.clone()), UnitaryRep::left_regular(g.clone())] {
            assert!(rep.homomorphism_violation() < TOL);
        }
    }

    #[test]
    fn rep_rejects_non_homomorphism() {
        let g = Arc::new(FiniteGroup::cyclic(2));
        let bad = UnitaryRep::new(g, vec![Operator::pauli_x(), Operator::pauli_x()], TOL);
        assert!(matches!(bad, Err(Error::NotHomomorphism(_))));
    }

    #[test]
    fn semidirect_factorization_examples() {
        let sd = SemidirectProduct::dihedral(4);
        let d4 = sd.product();
        assert_eq!(sd.factorize(d4.identity()), (0, 0));
        assert_eq!(sd.factorize(sd.element(2, 0)), (2, 0));
        // s·r = (0, s)(1, e) = (s(1), s) = (3, s)
        let s = sd.element(0, 1);
        let r = sd.element(1, 0);
        assert_eq!(sd.factorize(d4.mul(s, r)), (3, 1));
        let (tn, ta) = (sd.normal_inclusion(), sd.acting_inclusion());
        for g in d4.elements() {
            let (t, l) = sd.factorize(g);
            assert_eq!(d4.mul(tn.embed(t), ta.embed(l)), g);
        }
    }

    #[test]
    fn subgroup_from_elements() {
        let s3 = Arc::new(FiniteGroup::symmetric(3));
        let swap = s3.index_of("102").unwrap();
        let h = SubgroupInclusion::from_elements(s3.clone(), &[0, swap]).unwrap();
        assert_eq!(h.sub().order(), 2);
        let cyc = s3.index_of("120").unwrap();
        assert!(SubgroupInclusion::from_elements(s3, &[0, cyc]).is_err());
    }

    #[test]
    fn inclusion_rejects_non_homomorphism() {
        let z2 = Arc::new(FiniteGroup::cyclic(2));
        let z4 = Arc::new(FiniteGroup::cyclic(4));
        assert!(SubgroupInclusion::new(z2.clone(), z4.clone(), vec![0, 2]).is_ok());
        assert!(SubgroupInclusion::new(z2, z4, vec![0, 1]).is_err());
    }

    #[test]
    fn torsor_shift_moves_origin() {
        let g = Arc::new(FiniteGroup::symmetric(3));
        let t = Torsor::new(g.clone(), 0).unwrap();
        let s = t.shifted(3);
        assert_eq!(s.origin(), 3);
        for x in g.elements() {
            assert_eq!(s.point_of(s.element_of(x)), x);
        }
    }

    #[test]
    fn partial_twirl_commutes_with_action() {
        let rep = UnitaryRep::right_regular(Arc::new(FiniteGroup::symmetric(3)));
        let ch = rep.partial_twirl(0.4, TOL).unwrap();
        let b = Operator::matrix_unit(6, 1, 4);
        for g in rep.group().elements() {
            let lhs = ch.heisenberg(&rep.act_on_operator(&b, g).unwrap()).unwrap();
            let rhs = rep.act_on_operator(&ch.heisenberg(&b).unwrap(), g).unwrap();
            assert!(lhs.distance(&rhs) < TOL);
        }
    }
}

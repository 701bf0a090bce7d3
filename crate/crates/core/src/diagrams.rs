//! Finitely supported diagrams over the tree category and the complexes
//! that compute Tor and Ext between them.
//!
//! A diagram is zero outside its support, which must be convex: every
//! object sitting between two supported objects is supported. Convexity is
//! what makes extension by zero functorial.
//!
//! Action matrices act on columns. For a covariant diagram `T` and
//! `u: τ -> σ`, the matrix of `u_*` has `dim T(σ)` rows and `dim T(τ)`
//! columns; for a contravariant `S`, `u^*` has `dim S(τ)` rows and
//! `dim S(σ)` columns.
//!
//! Complexes are flattened to total degree: homological degree of the
//! generator plus the internal degrees of the coefficients.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::barkoszul::{iota, BarBuilder, BarChain, BarError};
use crate::homalg::{
    homology_ranks, rank_of_columns, sparse_from_terms, CoefficientRing, ComplexMap,
    FreeChainComplex, HomalgError, SparseMatrix, SparseVec,
};
use crate::morphisms::{
    compose, degree_one_from, hom_set, left_factor, targets_from, MorphismError, TreeMorphism,
};
use crate::signs::sgn;
use crate::trees::{enumerate_trees, PrunedTree, TreeError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiagramError {
    #[error(transparent)]
    Morphism(#[from] MorphismError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Bar(#[from] BarError),
    #[error(transparent)]
    Homalg(#[from] HomalgError),
    #[error("expected a {0} diagram")]
    WrongVariance(&'static str),
    #[error("expected a strict diagram")]
    NotStrict,
    #[error("twisted action of {0} has degree above one; only degree-one twists are supported")]
    UnsupportedTwist(String),
    #[error("internal differentials are not supported here")]
    InternalDifferential,
    #[error("bad diagram data: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variance {
    #[serde(rename = "co")]
    Covariant,
    #[serde(rename = "contra")]
    Contravariant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Strict,
    Twisted,
}

/// A finite free graded module: one internal degree per basis vector and
/// an optional differential of degree `-1`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GradedModule {
    pub degrees: Vec<i64>,
    pub differential: Option<SparseMatrix>,
}

impl GradedModule {
    pub fn free(degrees: Vec<i64>) -> Self {
        GradedModule {
            degrees,
            differential: None,
        }
    }

    pub fn rank_one() -> Self {
        Self::free(vec![0])
    }

    pub fn dim(&self) -> usize {
        self.degrees.len()
    }

    pub fn ranks(&self) -> BTreeMap<i64, usize> {
        let mut r = BTreeMap::new();
        for &d in &self.degrees {
            *r.entry(d).or_insert(0) += 1;
        }
        r
    }

    fn delta(&self, j: usize) -> &[(usize, i64)] {
        self.differential.as_ref().map_or(&[], |d| &d.cols[j])
    }
}

#[derive(Debug, Clone)]
pub struct Diagram {
    pub variance: Variance,
    pub mode: Mode,
    values: BTreeMap<PrunedTree, GradedModule>,
    actions: HashMap<TreeMorphism, SparseMatrix>,
}

impl Diagram {
    /// Objects with a zero value are dropped from the support.
    pub fn new(
        variance: Variance,
        mode: Mode,
        values: BTreeMap<PrunedTree, GradedModule>,
        actions: HashMap<TreeMorphism, SparseMatrix>,
    ) -> Self {
        let values: BTreeMap<_, _> = values.into_iter().filter(|(_, m)| m.dim() > 0).collect();
        let actions = actions
            .into_iter()
            .filter(|(u, _)| values.contains_key(u.source()) && values.contains_key(u.target()))
            .collect();
        Diagram {
            variance,
            mode,
            values,
            actions,
        }
    }

    pub fn zero(variance: Variance) -> Self {
        Self::new(variance, Mode::Strict, BTreeMap::new(), HashMap::new())
    }

    pub fn support(&self) -> impl Iterator<Item = &PrunedTree> {
        self.values.keys()
    }

    pub fn value(&self, t: &PrunedTree) -> Option<&GradedModule> {
        self.values.get(t)
    }

    pub fn dim(&self, t: &PrunedTree) -> usize {
        self.values.get(t).map_or(0, GradedModule::dim)
    }

    pub fn n(&self) -> Option<usize> {
        self.values.keys().next().map(PrunedTree::n)
    }

    fn shape(&self, u: &TreeMorphism) -> (usize, usize) {
        match self.variance {
            Variance::Covariant => (self.dim(u.target()), self.dim(u.source())),
            Variance::Contravariant => (self.dim(u.source()), self.dim(u.target())),
        }
    }

    /// The action of `u`; identities act by the identity in strict mode.
    pub fn action(&self, u: &TreeMorphism) -> SparseMatrix {
        if let Some(m) = self.actions.get(u) {
            return m.clone();
        }
        let (r, c) = self.shape(u);
        if u.is_identity() && self.mode == Mode::Strict && r > 0 {
            SparseMatrix::identity(r)
        } else {
            SparseMatrix::zero(r, c)
        }
    }

    pub fn stored_actions(&self) -> impl Iterator<Item = (&TreeMorphism, &SparseMatrix)> {
        self.actions.iter()
    }

    /// Total rank over all supported objects.
    pub fn total_dim(&self) -> usize {
        self.values.values().map(GradedModule::dim).sum()
    }

    fn has_differentials(&self) -> bool {
        self.values.values().any(|m| m.differential.is_some())
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut actions: Vec<(&TreeMorphism, &SparseMatrix)> = self.actions.iter().collect();
        actions.sort_by(|a, b| a.0.cmp(b.0));
        let data = DiagramJson {
            variance: self.variance,
            mode: self.mode,
            support: self.values.keys().map(PrunedTree::encode).collect(),
            values: self
                .values
                .iter()
                .map(|(t, m)| (t.encode(), m.degrees.clone()))
                .collect(),
            differentials: self
                .values
                .iter()
                .filter_map(|(t, m)| m.differential.as_ref().map(|d| (t.encode(), d.to_dense())))
                .collect(),
            actions: actions
                .into_iter()
                .map(|(u, m)| (u.key(), m.to_dense()))
                .collect(),
        };
        serde_json::to_value(data).expect("serializable")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self, DiagramError> {
        let data: DiagramJson = serde_json::from_value(value.clone())
            .map_err(|e| DiagramError::Format(e.to_string()))?;
        let mut values = BTreeMap::new();
        for t in &data.support {
            let tree: PrunedTree = t.parse()?;
            let degrees = data.values.get(t).cloned().unwrap_or_default();
            let dim = degrees.len();
            let differential = data
                .differentials
                .get(t)
                .map(|rows| dense_to_sparse(rows, dim, dim))
                .transpose()?;
            values.insert(
                tree,
                GradedModule {
                    degrees,
                    differential,
                },
            );
        }
        let mut diagram = Diagram::new(data.variance, data.mode, values, HashMap::new());
        for (key, rows) in &data.actions {
            let u = TreeMorphism::parse_key(key)?;
            let (r, c) = diagram.shape(&u);
            let m = dense_to_sparse(rows, r, c)?;
            if diagram.values.contains_key(u.source()) && diagram.values.contains_key(u.target()) {
                diagram.actions.insert(u, m);
            }
        }
        Ok(diagram)
    }
}

fn dense_to_sparse(rows: &[Vec<i64>], r: usize, c: usize) -> Result<SparseMatrix, DiagramError> {
    if rows.len() != r || rows.iter().any(|row| row.len() != c) {
        return Err(DiagramError::Format(format!("matrix is not {r}x{c}")));
    }
    if r == 0 {
        return Ok(SparseMatrix::zero(0, c));
    }
    Ok(SparseMatrix::from_dense(rows))
}

#[derive(Serialize, Deserialize)]
struct DiagramJson {
    variance: Variance,
    mode: Mode,
    support: Vec<String>,
    values: BTreeMap<String, Vec<i64>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    differentials: BTreeMap<String, Vec<Vec<i64>>>,
    actions: BTreeMap<String, Vec<Vec<i64>>>,
}

/// `pt_σ`: rank one at `σ`, zero elsewhere.
pub fn punctual(sigma: &PrunedTree, variance: Variance) -> Diagram {
    Diagram::new(
        variance,
        Mode::Strict,
        BTreeMap::from([(sigma.clone(), GradedModule::rank_one())]),
        HashMap::new(),
    )
}

/// `Ω(τ, -)`, supported on the objects reachable from `τ`.
pub fn yoneda_covariant(tau: &PrunedTree) -> Result<Diagram, DiagramError> {
    let support = targets_from(tau);
    let mut values = BTreeMap::new();
    let mut bases: HashMap<PrunedTree, std::sync::Arc<Vec<TreeMorphism>>> = HashMap::new();
    for s in &support {
        let homs = hom_set(tau, s)?;
        values.insert(s.clone(), GradedModule::free(vec![0; homs.len()]));
        bases.insert(s.clone(), homs);
    }
    let mut actions = HashMap::new();
    for a in &support {
        for b in &support {
            if a == b || b.degree() >= a.degree() {
                continue;
            }
            let target_index: HashMap<&TreeMorphism, usize> =
                bases[b].iter().enumerate().map(|(i, f)| (f, i)).collect();
            for u in hom_set(a, b)?.iter() {
                let cols = bases[a]
                    .iter()
                    .map(|f| vec![(target_index[&compose(u, f).expect("composable")], 1)])
                    .collect();
                actions.insert(u.clone(), SparseMatrix::from_columns(bases[b].len(), cols));
            }
        }
    }
    Ok(Diagram::new(
        Variance::Covariant,
        Mode::Strict,
        values,
        actions,
    ))
}

/// `Ω(-, τ)` restricted to sources with at most `max_leaves` leaves.
pub fn yoneda_contravariant(tau: &PrunedTree, max_leaves: usize) -> Result<Diagram, DiagramError> {
    let mut bases: BTreeMap<PrunedTree, std::sync::Arc<Vec<TreeMorphism>>> = BTreeMap::new();
    for t in enumerate_trees(tau.n(), max_leaves)? {
        let homs = hom_set(&t, tau)?;
        if !homs.is_empty() {
            bases.insert(t, homs);
        }
    }
    let values = bases
        .iter()
        .map(|(t, b)| (t.clone(), GradedModule::free(vec![0; b.len()])))
        .collect();
    let mut actions = HashMap::new();
    for (a, ba) in &bases {
        let index: HashMap<&TreeMorphism, usize> =
            ba.iter().enumerate().map(|(i, f)| (f, i)).collect();
        for (b, bb) in &bases {
            if a == b || b.degree() >= a.degree() {
                continue;
            }
            for u in hom_set(a, b)?.iter() {
                let cols = bb
                    .iter()
                    .map(|f| vec![(index[&compose(f, u).expect("composable")], 1)])
                    .collect();
                actions.insert(u.clone(), SparseMatrix::from_columns(ba.len(), cols));
            }
        }
    }
    Ok(Diagram::new(
        Variance::Contravariant,
        Mode::Strict,
        values,
        actions,
    ))
}

/// Restriction along the augmentation of the cobar model: degree-one
/// morphisms act by `sgn(u)` times the strict action, the rest by zero.
pub fn epsilon_restriction(d: &Diagram) -> Result<Diagram, DiagramError> {
    if d.mode != Mode::Strict {
        return Err(DiagramError::NotStrict);
    }
    let mut actions = HashMap::new();
    for a in d.values.keys() {
        for u in degree_one_from(a) {
            if d.values.contains_key(u.target()) {
                let m = d.action(&u).scale(sgn(&u));
                actions.insert(u, m);
            }
        }
    }
    Ok(Diagram::new(
        d.variance,
        Mode::Twisted,
        d.values.clone(),
        actions,
    ))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DiagramWitness {
    pub check: String,
    pub detail: String,
}

fn witness(check: &str, detail: String) -> DiagramWitness {
    DiagramWitness {
        check: check.to_string(),
        detail,
    }
}

/// Describes an unsupported object lying between two supported ones.
fn convexity_violation(support: &BTreeSet<PrunedTree>) -> Option<String> {
    for a in support {
        for b in support {
            if a == b || b.degree() >= a.degree() {
                continue;
            }
            if hom_set(a, b).map_or(true, |h| h.is_empty()) {
                continue;
            }
            for theta in targets_from(a) {
                if theta.degree() > b.degree()
                    && theta.degree() < a.degree()
                    && !support.contains(&theta)
                    && hom_set(&theta, b).is_ok_and(|h| !h.is_empty())
                {
                    return Some(format!(
                        "{theta} lies between {a} and {b} but is unsupported"
                    ));
                }
            }
        }
    }
    None
}

/// Checks shapes, convexity, internal degrees and either functoriality
/// (strict) or the Maurer–Cartan equations (twisted), over the integers.
pub fn validate_diagram(d: &Diagram) -> Result<(), DiagramWitness> {
    validate_diagram_in(d, CoefficientRing::Integers)
}

/// [`validate_diagram`] with the identities checked in `ring`.
pub fn validate_diagram_in(d: &Diagram, ring: CoefficientRing) -> Result<(), DiagramWitness> {
    let support: Vec<&PrunedTree> = d.values.keys().collect();
    for (t, m) in &d.values {
        if let Some(delta) = &m.differential {
            if (delta.nrows, delta.ncols) != (m.dim(), m.dim()) {
                return Err(witness("shape", format!("differential at {t}")));
            }
            for (j, col) in delta.cols.iter().enumerate() {
                if col.iter().any(|&(i, _)| m.degrees[i] != m.degrees[j] - 1) {
                    return Err(witness("degree", format!("differential at {t}")));
                }
            }
            if !delta.mul(delta).is_zero_in(ring) {
                return Err(witness("differential", format!("δ² ≠ 0 at {t}")));
            }
        }
    }
    if let Some(detail) = convexity_violation(&d.values.keys().cloned().collect()) {
        return Err(witness("convexity", detail));
    }
    let deg_of = |t: &PrunedTree| d.values[t].degrees.clone();
    for (u, m) in &d.actions {
        if (m.nrows, m.ncols) != d.shape(u) {
            return Err(witness("shape", format!("action of {u}")));
        }
        let shift = match d.mode {
            Mode::Strict => 0,
            Mode::Twisted => u.degree() as i64 - 1,
        };
        let (from, to) = match d.variance {
            Variance::Covariant => (deg_of(u.source()), deg_of(u.target())),
            Variance::Contravariant => (deg_of(u.target()), deg_of(u.source())),
        };
        for (j, col) in m.cols.iter().enumerate() {
            if col.iter().any(|&(i, _)| to[i] != from[j] + shift) {
                return Err(witness("degree", format!("action of {u}")));
            }
        }
    }
    let delta = |t: &PrunedTree| {
        d.values[t]
            .differential
            .clone()
            .unwrap_or_else(|| SparseMatrix::zero(d.dim(t), d.dim(t)))
    };
    // every non-identity morphism between supported objects
    let mut morphisms = Vec::new();
    for a in &support {
        for b in &support {
            if a != b && b.degree() < a.degree() {
                if let Ok(h) = hom_set(a, b) {
                    morphisms.extend(h.iter().cloned());
                }
            }
        }
    }
    match d.mode {
        Mode::Strict => {
            for u in &morphisms {
                let m = d.action(u);
                let (src, tgt) = match d.variance {
                    Variance::Covariant => (u.source(), u.target()),
                    Variance::Contravariant => (u.target(), u.source()),
                };
                if !delta(tgt).mul(&m).sub(&m.mul(&delta(src))).is_zero_in(ring) {
                    return Err(witness("differential", format!("action of {u}")));
                }
            }
            for w in &morphisms {
                for v in morphisms.iter().filter(|v| v.source() == w.target()) {
                    let vw = compose(v, w).expect("composable");
                    let expected = match d.variance {
                        Variance::Covariant => d.action(v).mul(&d.action(w)),
                        Variance::Contravariant => d.action(w).mul(&d.action(v)),
                    };
                    if !d.action(&vw).sub(&expected).is_zero_in(ring) {
                        return Err(witness("functoriality", format!("v = {v}, w = {w}")));
                    }
                }
            }
        }
        Mode::Twisted => {
            for u in &morphisms {
                let m = d.action(u);
                let (src, tgt) = match d.variance {
                    Variance::Covariant => (u.source(), u.target()),
                    Variance::Contravariant => (u.target(), u.source()),
                };
                let sign = if (u.degree() - 1) % 2 == 0 { 1 } else { -1 };
                let lhs = delta(tgt).mul(&m).sub(&m.mul(&delta(src)).scale(sign));
                let mut rhs = SparseMatrix::zero(lhs.nrows, lhs.ncols);
                for w in morphisms.iter().filter(|w| w.source() == u.source()) {
                    let Some(v) = left_factor(u, w) else { continue };
                    if v.is_identity() {
                        continue;
                    }
                    let s = if v.degree() % 2 == 0 { 1 } else { -1 };
                    let term = match d.variance {
                        Variance::Covariant => d.action(&v).mul(&d.action(w)),
                        Variance::Contravariant => d.action(w).mul(&d.action(&v)),
                    };
                    rhs = rhs.sub(&term.scale(-s));
                }
                if !lhs.sub(&rhs).is_zero_in(ring) {
                    return Err(witness("maurer-cartan", format!("at {u}")));
                }
            }
        }
    }
    Ok(())
}

/// Per-degree ranks of a graded module, the result of a cokernel.
pub type GradedRanks = BTreeMap<i64, usize>;

/// `S ⊗_Ω T`: the cokernel of `x ⊗ y ↦ u^*x ⊗ y − x ⊗ u_*y`.
pub fn tensor_over_category(
    s: &Diagram,
    t: &Diagram,
    ring: CoefficientRing,
) -> Result<GradedRanks, DiagramError> {
    check_pair(s, t)?;
    if s.mode != Mode::Strict || t.mode != Mode::Strict {
        return Err(DiagramError::NotStrict);
    }
    let mut index: HashMap<(PrunedTree, usize, usize), (i64, usize)> = HashMap::new();
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for (theta, ms) in &s.values {
        let Some(mt) = t.values.get(theta) else {
            continue;
        };
        for (i, &di) in ms.degrees.iter().enumerate() {
            for (j, &dj) in mt.degrees.iter().enumerate() {
                let c = counts.entry(di + dj).or_insert(0);
                index.insert((theta.clone(), i, j), (di + dj, *c));
                *c += 1;
            }
        }
    }
    let mut relations: BTreeMap<i64, Vec<SparseVec>> = BTreeMap::new();
    for sigma in s.values.keys() {
        for tau in t.values.keys() {
            for u in hom_set(tau, sigma)?.iter().filter(|u| !u.is_identity()) {
                let su = s.action(u);
                let tu = t.action(u);
                for (i, &di) in s.values[sigma].degrees.iter().enumerate() {
                    for (j, &dj) in t.values[tau].degrees.iter().enumerate() {
                        let mut terms = Vec::new();
                        for &(k, c) in &su.cols[i] {
                            if let Some(&(_, idx)) = index.get(&(tau.clone(), k, j)) {
                                terms.push((idx, c));
                            }
                        }
                        for &(k, c) in &tu.cols[j] {
                            if let Some(&(_, idx)) = index.get(&(sigma.clone(), i, k)) {
                                terms.push((idx, -c));
                            }
                        }
                        relations
                            .entry(di + dj)
                            .or_default()
                            .push(sparse_from_terms(terms));
                    }
                }
            }
        }
    }
    Ok(counts
        .into_iter()
        .map(|(k, n)| {
            let r = relations
                .get(&k)
                .map_or(0, |rel| rank_of_columns(rel, ring));
            (k, n - r)
        })
        .filter(|&(_, r)| r > 0)
        .collect())
}

fn check_pair(s: &Diagram, t: &Diagram) -> Result<(), DiagramError> {
    if s.variance != Variance::Contravariant {
        return Err(DiagramError::WrongVariance("contravariant"));
    }
    if t.variance != Variance::Covariant {
        return Err(DiagramError::WrongVariance("covariant"));
    }
    Ok(())
}

fn parity(k: i64) -> i64 {
    if k.rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

/// Memoized factorization data shared by the coefficient complexes.
#[derive(Default)]
struct Factors {
    targets: HashMap<PrunedTree, Vec<PrunedTree>>,
    left_one: HashMap<TreeMorphism, Vec<(TreeMorphism, TreeMorphism)>>,
    right_one: HashMap<TreeMorphism, Vec<(TreeMorphism, TreeMorphism)>>,
    signs: HashMap<TreeMorphism, i64>,
}

impl Factors {
    fn sgn(&mut self, u: &TreeMorphism) -> i64 {
        *self.signs.entry(u.clone()).or_insert_with(|| sgn(u))
    }

    /// `(v, w)` with `u = v ∘ w` and `deg v = 1`.
    fn left_one(
        &mut self,
        u: &TreeMorphism,
    ) -> Result<Vec<(TreeMorphism, TreeMorphism)>, DiagramError> {
        if let Some(hit) = self.left_one.get(u) {
            return Ok(hit.clone());
        }
        let tau = u.source();
        let targets = self
            .targets
            .entry(tau.clone())
            .or_insert_with(|| targets_from(tau))
            .clone();
        let mut out = Vec::new();
        for theta in targets
            .iter()
            .filter(|t| t.degree() == u.target().degree() + 1)
        {
            for w in hom_set(tau, theta)?.iter() {
                if let Some(v) = left_factor(u, w) {
                    out.push((v, w.clone()));
                }
            }
        }
        self.left_one.insert(u.clone(), out.clone());
        Ok(out)
    }

    /// `(v, w)` with `u = v ∘ w` and `deg w = 1`.
    fn right_one(&mut self, u: &TreeMorphism) -> Vec<(TreeMorphism, TreeMorphism)> {
        if let Some(hit) = self.right_one.get(u) {
            return hit.clone();
        }
        let out: Vec<_> = degree_one_from(u.source())
            .into_iter()
            .filter_map(|w| left_factor(u, &w).map(|v| (v, w)))
            .collect();
        self.right_one.insert(u.clone(), out.clone());
        out
    }
}

/// Registers basis elements degree by degree, then assembles boundaries.
struct Assembler<K> {
    index: HashMap<K, (i64, usize)>,
    labels: BTreeMap<i64, Vec<String>>,
    keys: BTreeMap<i64, Vec<K>>,
}

impl<K: Clone + Eq + std::hash::Hash> Assembler<K> {
    fn new() -> Self {
        Assembler {
            index: HashMap::new(),
            labels: BTreeMap::new(),
            keys: BTreeMap::new(),
        }
    }

    fn add(&mut self, key: K, degree: i64, label: String) {
        let l = self.labels.entry(degree).or_default();
        self.index.insert(key.clone(), (degree, l.len()));
        l.push(label);
        self.keys.entry(degree).or_default().push(key);
    }

    fn position(&self, key: &K) -> usize {
        self.index[key].1
    }

    fn finish(
        &self,
        ring: CoefficientRing,
        mut boundary: impl FnMut(&K) -> Vec<(K, i64)>,
    ) -> FreeChainComplex {
        let mut columns = BTreeMap::new();
        for (&deg, keys) in &self.keys {
            let cols: Vec<SparseVec> = keys
                .iter()
                .map(|k| {
                    sparse_from_terms(boundary(k).into_iter().map(|(f, c)| {
                        let (d, i) = self.index[&f];
                        debug_assert_eq!(d, deg - 1);
                        (i, c)
                    }))
                })
                .collect();
            columns.insert(deg, cols);
        }
        FreeChainComplex::from_graded(ring, self.labels.clone(), columns)
    }
}

/// The action used by the Koszul differential for a degree-one morphism:
/// `sgn(v)` times the strict action, or the twisted action as given.
fn koszul_action(d: &Diagram, v: &TreeMorphism, f: &mut Factors) -> SparseMatrix {
    match d.mode {
        Mode::Strict => d.action(v).scale(f.sgn(v)),
        Mode::Twisted => d.action(v),
    }
}

fn check_twist(d: &Diagram) -> Result<(), DiagramError> {
    if d.mode == Mode::Twisted {
        for (u, m) in &d.actions {
            if u.degree() > 1 && !m.is_zero_in(CoefficientRing::Integers) {
                return Err(DiagramError::UnsupportedTwist(u.key()));
            }
        }
    }
    Ok(())
}

type KoszulKey = (usize, usize, usize);

/// `K(S, Ω, T)`: basis `x ⊗ {u} ⊗ y` over `u: τ -> σ`, `x ∈ S(σ)`,
/// `y ∈ T(τ)`, in degree `|x| + deg u + |y|`.
pub fn koszul_with_coefficients(
    s: &Diagram,
    t: &Diagram,
    ring: CoefficientRing,
) -> Result<FreeChainComplex, DiagramError> {
    Ok(koszul_assembly(s, t, ring)?.0)
}

fn koszul_assembly(
    s: &Diagram,
    t: &Diagram,
    ring: CoefficientRing,
) -> Result<(FreeChainComplex, Vec<TreeMorphism>, Assembler<KoszulKey>), DiagramError> {
    check_pair(s, t)?;
    check_twist(s)?;
    check_twist(t)?;
    let mut cells: Vec<TreeMorphism> = Vec::new();
    for sigma in s.values.keys() {
        for tau in t.values.keys() {
            cells.extend(hom_set(tau, sigma)?.iter().cloned());
        }
    }
    let cell_index: HashMap<TreeMorphism, usize> = cells
        .iter()
        .enumerate()
        .map(|(i, u)| (u.clone(), i))
        .collect();
    let mut asm = Assembler::new();
    for (c, u) in cells.iter().enumerate() {
        let (ms, mt) = (&s.values[u.target()], &t.values[u.source()]);
        for (i, &di) in ms.degrees.iter().enumerate() {
            for (j, &dj) in mt.degrees.iter().enumerate() {
                asm.add(
                    (c, i, j),
                    di + u.degree() as i64 + dj,
                    format!("s{i}⊗{{{}}}⊗t{j}", u.key()),
                );
            }
        }
    }
    let mut f = Factors::default();
    // precompute the factor data outside the boundary closure
    let mut left: Vec<Vec<(usize, SparseMatrix)>> = Vec::with_capacity(cells.len());
    let mut right: Vec<Vec<(usize, SparseMatrix)>> = Vec::with_capacity(cells.len());
    for u in &cells {
        let mut l = Vec::new();
        for (v, w) in f.left_one(u)? {
            if let Some(&c) = cell_index.get(&w) {
                l.push((c, koszul_action(s, &v, &mut f)));
            }
        }
        let mut r = Vec::new();
        for (v, w) in f.right_one(u) {
            if let Some(&c) = cell_index.get(&v) {
                r.push((c, koszul_action(t, &w, &mut f)));
            }
        }
        left.push(l);
        right.push(r);
    }
    let complex = {
        let cells = &cells;
        let boundary = |&(c, i, j): &KoszulKey| {
            let u = &cells[c];
            let (ms, mt) = (&s.values[u.target()], &t.values[u.source()]);
            let dx = ms.degrees[i];
            let du = u.degree() as i64;
            let mut out = Vec::new();
            for &(k, a) in ms.delta(i) {
                out.push(((c, k, j), a));
            }
            for (cw, m) in &left[c] {
                for &(k, a) in &m.cols[i] {
                    out.push(((*cw, k, j), parity(dx) * a));
                }
            }
            for (cv, m) in &right[c] {
                for &(k, a) in &m.cols[j] {
                    out.push(((*cv, i, k), parity(dx + du) * a));
                }
            }
            for &(k, a) in mt.delta(j) {
                out.push(((c, i, k), parity(dx + du) * a));
            }
            out
        };
        asm.finish(ring, boundary)
    };
    Ok((complex, cells, asm))
}

type BarKey = (usize, usize, usize);

struct BarData {
    chains: Vec<BarChain>,
    asm: Assembler<BarKey>,
    complex: FreeChainComplex,
}

/// `B(S, Ω, T)`: basis `x ⊗ [u_1 | ... | u_d] ⊗ y`, chains from `τ ∈ supp T`
/// to `σ ∈ supp S`, in degree `|x| + d + |y|`.
pub fn bar_with_coefficients(
    s: &Diagram,
    t: &Diagram,
    ring: CoefficientRing,
) -> Result<FreeChainComplex, DiagramError> {
    Ok(bar_assembly(s, t, ring, &mut BarBuilder::default())?.complex)
}

fn bar_assembly(
    s: &Diagram,
    t: &Diagram,
    ring: CoefficientRing,
    builder: &mut BarBuilder,
) -> Result<BarData, DiagramError> {
    check_pair(s, t)?;
    if s.mode != Mode::Strict || t.mode != Mode::Strict {
        return Err(DiagramError::NotStrict);
    }
    let mut chains: Vec<BarChain> = Vec::new();
    for sigma in s.values.keys() {
        for tau in t.values.keys() {
            for u in hom_set(tau, sigma)?.iter() {
                for maps in builder.chains(u)?.iter() {
                    chains.push(BarChain {
                        source: tau.clone(),
                        target: sigma.clone(),
                        maps: maps.clone(),
                    });
                }
            }
        }
    }
    let chain_index: HashMap<BarChain, usize> = chains
        .iter()
        .enumerate()
        .map(|(i, c)| (c.clone(), i))
        .collect();
    let mut asm = Assembler::new();
    for (c, chain) in chains.iter().enumerate() {
        let (ms, mt) = (&s.values[&chain.target], &t.values[&chain.source]);
        for (i, &di) in ms.degrees.iter().enumerate() {
            for (j, &dj) in mt.degrees.iter().enumerate() {
                asm.add(
                    (c, i, j),
                    di + chain.degree() as i64 + dj,
                    format!("s{i}⊗{}⊗t{j}", chain.label()),
                );
            }
        }
    }
    let mut faces: Vec<Vec<(usize, Face)>> = Vec::with_capacity(chains.len());
    for chain in &chains {
        let d = chain.maps.len();
        let mut list = Vec::new();
        if d > 0 {
            let first = BarChain {
                source: chain.source.clone(),
                target: chain.maps[0].source().clone(),
                maps: chain.maps[1..].to_vec(),
            };
            if let Some(&c) = chain_index.get(&first) {
                list.push((c, Face::Left(s.action(&chain.maps[0]))));
            }
            for (f, sign) in chain.boundary() {
                list.push((chain_index[&f], Face::Inner(sign)));
            }
            let last = BarChain {
                source: chain.maps[d - 1].target().clone(),
                target: chain.target.clone(),
                maps: chain.maps[..d - 1].to_vec(),
            };
            if let Some(&c) = chain_index.get(&last) {
                list.push((c, Face::Right(t.action(&chain.maps[d - 1]))));
            }
        }
        faces.push(list);
    }
    let complex = {
        let chains = &chains;
        let boundary = |&(c, i, j): &BarKey| {
            let chain = &chains[c];
            let (ms, mt) = (&s.values[&chain.target], &t.values[&chain.source]);
            let dx = ms.degrees[i];
            let d = chain.degree() as i64;
            let mut out = Vec::new();
            for &(k, a) in ms.delta(i) {
                out.push(((c, k, j), a));
            }
            for (f, face) in &faces[c] {
                match face {
                    Face::Left(m) => {
                        for &(k, a) in &m.cols[i] {
                            out.push(((*f, k, j), parity(dx) * a));
                        }
                    }
                    Face::Inner(sign) => out.push(((*f, i, j), parity(dx) * sign)),
                    Face::Right(m) => {
                        for &(k, a) in &m.cols[j] {
                            out.push(((*f, i, k), parity(dx + d) * a));
                        }
                    }
                }
            }
            for &(k, a) in mt.delta(j) {
                out.push(((c, i, k), parity(dx + d) * a));
            }
            out
        };
        asm.finish(ring, boundary)
    };
    Ok(BarData {
        chains,
        asm,
        complex,
    })
}

#[derive(Clone)]
enum Face {
    Left(SparseMatrix),
    Inner(i64),
    Right(SparseMatrix),
}

/// `κ = id ⊗ ι ⊗ id` from the Koszul to the bar complex with coefficients.
pub fn kappa(s: &Diagram, t: &Diagram, ring: CoefficientRing) -> Result<ComplexMap, DiagramError> {
    let (domain, cells, kasm) = koszul_assembly(s, t, ring)?;
    let bar = bar_assembly(s, t, ring, &mut BarBuilder::default())?;
    let chain_index: HashMap<&BarChain, usize> =
        bar.chains.iter().enumerate().map(|(i, c)| (c, i)).collect();
    let mut columns: BTreeMap<i64, Vec<SparseVec>> = BTreeMap::new();
    let mut images: HashMap<usize, Vec<(usize, i64)>> = HashMap::new();
    for (c, u) in cells.iter().enumerate() {
        let img = iota(u)?
            .into_iter()
            .map(|(chain, sign)| (chain_index[&chain], sign))
            .collect();
        images.insert(c, img);
    }
    for (&deg, keys) in &kasm.keys {
        let cols = keys
            .iter()
            .map(|&(c, i, j)| {
                sparse_from_terms(
                    images[&c]
                        .iter()
                        .map(|&(b, sign)| (bar.asm.position(&(b, i, j)), sign)),
                )
            })
            .collect();
        columns.insert(deg, cols);
    }
    let maps = columns
        .into_iter()
        .map(|(k, cols)| (k, SparseMatrix::from_columns(bar.complex.dim(k), cols)))
        .collect();
    Ok(ComplexMap {
        domain,
        codomain: bar.complex,
        maps,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TorReport {
    pub ring: CoefficientRing,
    pub koszul: BTreeMap<i64, usize>,
    pub bar: Option<BTreeMap<i64, usize>>,
    pub agree: Option<bool>,
}

fn nonzero(h: BTreeMap<i64, usize>) -> BTreeMap<i64, usize> {
    h.into_iter().filter(|&(_, r)| r > 0).collect()
}

/// Tor as the homology of the Koszul complex; cross-checked against the bar
/// complex when `cross_check` is set.
pub fn tor(
    s: &Diagram,
    t: &Diagram,
    ring: CoefficientRing,
    cross_check: bool,
) -> Result<TorReport, DiagramError> {
    let koszul = nonzero(homology_ranks(&koszul_with_coefficients(s, t, ring)?)?);
    let bar = if cross_check {
        Some(nonzero(homology_ranks(&bar_with_coefficients(
            s, t, ring,
        )?)?))
    } else {
        None
    };
    let agree = bar.as_ref().map(|b| *b == koszul);
    Ok(TorReport {
        ring,
        koszul,
        bar,
        agree,
    })
}

type ExtKey = (usize, usize, usize);

fn ext_prepare(s: &Diagram, t: &Diagram) -> Result<(), DiagramError> {
    if s.variance != Variance::Covariant || t.variance != Variance::Covariant {
        return Err(DiagramError::WrongVariance("covariant"));
    }
    if s.mode != Mode::Strict || t.mode != Mode::Strict {
        return Err(DiagramError::NotStrict);
    }
    if s.has_differentials() || t.has_differentials() {
        return Err(DiagramError::InternalDifferential);
    }
    Ok(())
}

/// The collapsed cochain complex computing `Ext(S, T)` for covariant `S`,
/// `T`: component `Hom(S(τ), T(σ))` for each `u: τ -> σ`, in cohomological
/// degree `deg u + |y| - |f(y)|`. Returned with homological degree equal to
/// minus the cohomological one.
pub fn ext_complex(
    s: &Diagram,
    t: &Diagram,
    ring: CoefficientRing,
) -> Result<FreeChainComplex, DiagramError> {
    ext_prepare(s, t)?;
    let mut cells: Vec<TreeMorphism> = Vec::new();
    for tau in s.values.keys() {
        for sigma in t.values.keys() {
            cells.extend(hom_set(tau, sigma)?.iter().cloned());
        }
    }
    let cell_index: HashMap<TreeMorphism, usize> = cells
        .iter()
        .enumerate()
        .map(|(i, u)| (u.clone(), i))
        .collect();
    let mut asm: Assembler<ExtKey> = Assembler::new();
    for (c, u) in cells.iter().enumerate() {
        let (ms, mt) = (&s.values[u.source()], &t.values[u.target()]);
        for (i, &di) in mt.degrees.iter().enumerate() {
            for (j, &dj) in ms.degrees.iter().enumerate() {
                let cdeg = u.degree() as i64 + dj - di;
                asm.add((c, i, j), -cdeg, format!("{{{}}}:t{i}<-s{j}", u.key()));
            }
        }
    }
    // degree-one morphisms into each object, from supported sources
    let mut into: HashMap<PrunedTree, Vec<TreeMorphism>> = HashMap::new();
    for tau in s.values.keys() {
        for w in degree_one_from(tau) {
            into.entry(w.target().clone()).or_default().push(w);
        }
    }
    let mut f = Factors::default();
    let mut post: Vec<Vec<(usize, SparseMatrix)>> = Vec::new();
    let mut pre: Vec<Vec<(usize, SparseMatrix, i64)>> = Vec::new();
    for u in &cells {
        let mut p = Vec::new();
        for v in degree_one_from(u.target()) {
            if !t.values.contains_key(v.target()) {
                continue;
            }
            let vu = compose(&v, u)?;
            p.push((cell_index[&vu], t.action(&v).scale(f.sgn(&v))));
        }
        post.push(p);
        let mut q = Vec::new();
        for w in into.get(u.source()).into_iter().flatten() {
            let uw = compose(u, w)?;
            let sign = parity(uw.degree() as i64) * f.sgn(w);
            q.push((cell_index[&uw], s.action(w), sign));
        }
        pre.push(q);
    }
    let boundary = |&(c, i, j): &ExtKey| {
        let mut out = Vec::new();
        for (target, m) in &post[c] {
            for &(k, a) in &m.cols[i] {
                out.push(((*target, k, j), a));
            }
        }
        // (E_ij · A)_{i l} = A[j, l]
        for (target, m, sign) in &pre[c] {
            for (l, col) in m.cols.iter().enumerate() {
                for &(r, a) in col {
                    if r == j {
                        out.push(((*target, i, l), sign * a));
                    }
                }
            }
        }
        out
    };
    Ok(asm.finish(ring, boundary))
}

/// The cochain complex of the bar resolution, used as an independent
/// check of [`ext_complex`].
pub fn ext_bar_complex(
    s: &Diagram,
    t: &Diagram,
    ring: CoefficientRing,
) -> Result<FreeChainComplex, DiagramError> {
    ext_prepare(s, t)?;
    let mut builder = BarBuilder::default();
    let mut chains: Vec<BarChain> = Vec::new();
    for tau in s.values.keys() {
        for sigma in t.values.keys() {
            for u in hom_set(tau, sigma)?.iter() {
                for maps in builder.chains(u)?.iter() {
                    chains.push(BarChain {
                        source: tau.clone(),
                        target: sigma.clone(),
                        maps: maps.clone(),
                    });
                }
            }
        }
    }
    let chain_index: HashMap<BarChain, usize> = chains
        .iter()
        .enumerate()
        .map(|(i, c)| (c.clone(), i))
        .collect();
    let mut asm: Assembler<ExtKey> = Assembler::new();
    for (c, chain) in chains.iter().enumerate() {
        let (ms, mt) = (&s.values[&chain.source], &t.values[&chain.target]);
        for (i, &di) in mt.degrees.iter().enumerate() {
            for (j, &dj) in ms.degrees.iter().enumerate() {
                let cdeg = chain.degree() as i64 + dj - di;
                asm.add((c, i, j), -cdeg, format!("{}:t{i}<-s{j}", chain.label()));
            }
        }
    }
    // cofaces: every chain of length d + 1 whose face is the given chain
    let mut cofaces: Vec<Vec<(usize, Face)>> = vec![Vec::new(); chains.len()];
    for (c, chain) in chains.iter().enumerate() {
        let d = chain.maps.len();
        if d == 0 {
            continue;
        }
        let first = BarChain {
            source: chain.source.clone(),
            target: chain.maps[0].source().clone(),
            maps: chain.maps[1..].to_vec(),
        };
        if let Some(&f) = chain_index.get(&first) {
            cofaces[f].push((c, Face::Left(t.action(&chain.maps[0]))));
        }
        for (face, sign) in chain.boundary() {
            cofaces[chain_index[&face]].push((c, Face::Inner(sign)));
        }
        let last = BarChain {
            source: chain.maps[d - 1].target().clone(),
            target: chain.target.clone(),
            maps: chain.maps[..d - 1].to_vec(),
        };
        if let Some(&f) = chain_index.get(&last) {
            let sign = parity(d as i64);
            cofaces[f].push((c, Face::Right(s.action(&chain.maps[d - 1]).scale(sign))));
        }
    }
    let boundary = |&(c, i, j): &ExtKey| {
        let mut out = Vec::new();
        for (target, face) in &cofaces[c] {
            match face {
                Face::Left(m) => {
                    for &(k, a) in &m.cols[i] {
                        out.push(((*target, k, j), a));
                    }
                }
                Face::Inner(sign) => out.push(((*target, i, j), *sign)),
                Face::Right(m) => {
                    for (l, col) in m.cols.iter().enumerate() {
                        for &(r, a) in col {
                            if r == j {
                                out.push(((*target, i, l), a));
                            }
                        }
                    }
                }
            }
        }
        out
    };
    Ok(asm.finish(ring, boundary))
}

/// Ext ranks keyed by cohomological degree.
pub fn ext(
    s: &Diagram,
    t: &Diagram,
    ring: CoefficientRing,
) -> Result<BTreeMap<i64, usize>, DiagramError> {
    let c = ext_complex(s, t, ring)?;
    Ok(homology_ranks(&c)?
        .into_iter()
        .filter(|&(_, r)| r > 0)
        .map(|(k, r)| (-k, r))
        .collect())
}

pub fn ext_via_bar(
    s: &Diagram,
    t: &Diagram,
    ring: CoefficientRing,
) -> Result<BTreeMap<i64, usize>, DiagramError> {
    let c = ext_bar_complex(s, t, ring)?;
    Ok(homology_ranks(&c)?
        .into_iter()
        .filter(|&(_, r)| r > 0)
        .map(|(k, r)| (-k, r))
        .collect())
}

/// Sign of the contracting homotopy; `Flipped` is a deliberate mutation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HomotopySign {
    #[default]
    Standard,
    Flipped,
}

/// Checks `∂ν + ν∂ = id − ηε` on `B(S, Ω, Ω(φ, -))`, exactly over the
/// integers.
pub fn contracting_homotopy_check(
    s: &Diagram,
    phi: &PrunedTree,
    sign: HomotopySign,
) -> Result<(), DiagramWitness> {
    let fail = |e: DiagramError| witness("construction", e.to_string());
    let t = yoneda_covariant(phi).map_err(fail)?;
    let bar =
        bar_assembly(s, &t, CoefficientRing::Integers, &mut BarBuilder::default()).map_err(fail)?;
    let yoneda_basis = |tau: &PrunedTree| hom_set(phi, tau).expect("hom-set");
    let chain_index: HashMap<&BarChain, usize> =
        bar.chains.iter().enumerate().map(|(i, c)| (c, i)).collect();
    let unit_at_phi = |c: &BarChain| {
        hom_set(phi, &c.source)
            .expect("hom-set")
            .iter()
            .position(TreeMorphism::is_identity)
    };
    // ν on a basis key
    let nu = |&(c, i, j): &BarKey| -> Option<(BarKey, i64)> {
        let chain = &bar.chains[c];
        let v = yoneda_basis(&chain.source)[j].clone();
        if v.is_identity() {
            return None;
        }
        let mut maps = chain.maps.clone();
        maps.push(v);
        let longer = BarChain {
            source: phi.clone(),
            target: chain.target.clone(),
            maps,
        };
        let x_deg = s.values[&chain.target].degrees[i];
        let mut coeff = parity(x_deg + chain.degree() as i64 + 1);
        if sign == HomotopySign::Flipped {
            coeff = -coeff;
        }
        let lc = chain_index[&longer];
        let unit = unit_at_phi(&longer).expect("identity in Ω(φ, φ)");
        Some(((lc, i, unit), coeff))
    };
    let boundary_of = |key: &BarKey| -> Vec<(BarKey, i64)> {
        let (deg, pos) = bar.asm.index[key];
        let d = bar.complex.boundary(deg);
        let keys = &bar.asm.keys;
        d.cols[pos]
            .iter()
            .map(|&(r, a)| (keys[&(deg - 1)][r], a))
            .collect()
    };
    let s_phi = s.values.get(phi);
    for keys in bar.asm.keys.values() {
        for key in keys {
            let mut acc: HashMap<BarKey, i64> = HashMap::new();
            if let Some((k, a)) = nu(key) {
                for (f, b) in boundary_of(&k) {
                    *acc.entry(f).or_insert(0) += a * b;
                }
            }
            for (f, b) in boundary_of(key) {
                if let Some((k, a)) = nu(&f) {
                    *acc.entry(k).or_insert(0) += a * b;
                }
            }
            *acc.entry(*key).or_insert(0) -= 1;
            // + ηε
            let (c, i, j) = *key;
            let chain = &bar.chains[c];
            if chain.maps.is_empty() && s_phi.is_some() {
                let v = yoneda_basis(&chain.source)[j].clone();
                let m = s.action(&v);
                let unit_chain = chain_index[&BarChain::unit(phi)];
                let unit = unit_at_phi(&BarChain::unit(phi)).expect("identity");
                for &(k, a) in &m.cols[i] {
                    *acc.entry((unit_chain, k, unit)).or_insert(0) += a;
                }
            }
            if let Some((k, a)) = acc.into_iter().find(|&(_, a)| a != 0) {
                let label = |k: &BarKey| {
                    bar.complex.labels[(bar.asm.index[k].0 - bar.complex.lo) as usize]
                        [bar.asm.index[k].1]
                        .clone()
                };
                return Err(witness(
                    "contracting-homotopy",
                    format!("at {}: coefficient {a} on {}", label(key), label(&k)),
                ));
            }
        }
    }
    Ok(())
}

/// Random convex subsets of a universe of trees closed under targets.
fn random_convex(
    universe: &[PrunedTree],
    rng: &mut impl Rng,
) -> Result<Vec<PrunedTree>, DiagramError> {
    let a = universe.choose(rng).expect("non-empty universe").clone();
    let up = targets_from(&a);
    let kind = rng.gen_range(0..4);
    Ok(match kind {
        0 => vec![a],
        1 => up,
        2 => {
            let b = up.choose(rng).expect("contains a").clone();
            let mut out = Vec::new();
            for t in &up {
                if !hom_set(t, &b)?.is_empty() {
                    out.push(t.clone());
                }
            }
            out
        }
        _ => {
            let mut out = Vec::new();
            for t in universe {
                if !hom_set(t, &a)?.is_empty() {
                    out.push(t.clone());
                }
            }
            out
        }
    })
}

/// A unimodular matrix and its inverse.
type BasisChange = (Vec<Vec<i64>>, Vec<Vec<i64>>);

/// A random strict diagram of rank at most two at every object: a sum of
/// punctual and constant blocks on convex sets followed by a random
/// unimodular change of basis in each internal degree.
pub fn random_strict_diagram(
    variance: Variance,
    n: usize,
    max_leaves: usize,
    rng: &mut impl Rng,
) -> Result<Diagram, DiagramError> {
    let universe = enumerate_trees(n, max_leaves)?;
    let blocks = rng.gen_range(1..=3);
    let mut members: Vec<(BTreeSet<PrunedTree>, i64)> = Vec::new();
    let mut load: HashMap<PrunedTree, usize> = HashMap::new();
    for _ in 0..blocks {
        let set: BTreeSet<PrunedTree> = random_convex(&universe, rng)?.into_iter().collect();
        if set.iter().any(|t| load.get(t).copied().unwrap_or(0) >= 2) {
            continue;
        }
        let union: BTreeSet<PrunedTree> = load.keys().chain(&set).cloned().collect();
        if convexity_violation(&union).is_some() {
            continue;
        }
        for t in &set {
            *load.entry(t.clone()).or_insert(0) += 1;
        }
        members.push((set, rng.gen_range(0..=1)));
    }
    // basis position of each block at each object
    let mut values: BTreeMap<PrunedTree, GradedModule> = BTreeMap::new();
    let mut slot: HashMap<(usize, PrunedTree), usize> = HashMap::new();
    for (b, (set, deg)) in members.iter().enumerate() {
        for t in set {
            let m = values.entry(t.clone()).or_default();
            slot.insert((b, t.clone()), m.dim());
            m.degrees.push(*deg);
        }
    }
    let support: Vec<PrunedTree> = values.keys().cloned().collect();
    let mut change: HashMap<PrunedTree, BasisChange> = HashMap::new();
    for t in &support {
        change.insert(t.clone(), random_unimodular(&values[t].degrees, rng));
    }
    let mut actions = HashMap::new();
    for a in &support {
        for b in &support {
            if a == b || b.degree() >= a.degree() {
                continue;
            }
            for u in hom_set(a, b)?.iter() {
                let (src, tgt) = match variance {
                    Variance::Covariant => (a, b),
                    Variance::Contravariant => (b, a),
                };
                let (r, c) = (values[tgt].dim(), values[src].dim());
                let mut m = vec![vec![0i64; c]; r];
                for (blk, (set, _)) in members.iter().enumerate() {
                    if set.contains(a) && set.contains(b) {
                        m[slot[&(blk, tgt.clone())]][slot[&(blk, src.clone())]] = 1;
                    }
                }
                let p_tgt = &change[tgt].0;
                let p_src_inv = &change[src].1;
                let m = dense_mul(&dense_mul(p_tgt, &m), p_src_inv);
                actions.insert(u.clone(), SparseMatrix::from_dense(&m));
            }
        }
    }
    Ok(Diagram::new(variance, Mode::Strict, values, actions))
}

fn dense_mul(a: &[Vec<i64>], b: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let cols = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| row.iter().zip(b).map(|(x, brow)| x * brow[j]).sum())
                .collect()
        })
        .collect()
}

/// A random unimodular matrix preserving the grading, with its inverse.
fn random_unimodular(degrees: &[i64], rng: &mut impl Rng) -> (Vec<Vec<i64>>, Vec<Vec<i64>>) {
    let n = degrees.len();
    let ident = |n: usize| -> Vec<Vec<i64>> {
        (0..n)
            .map(|i| (0..n).map(|j| i64::from(i == j)).collect())
            .collect()
    };
    let (mut p, mut q) = (ident(n), ident(n));
    for _ in 0..3 {
        let i = rng.gen_range(0..n);
        let j = rng.gen_range(0..n);
        if i == j || degrees[i] != degrees[j] {
            if rng.gen_bool(0.5) {
                // negate a basis vector
                for row in p.iter_mut() {
                    row[i] = -row[i];
                }
                q[i].iter_mut().for_each(|x| *x = -*x);
            }
            continue;
        }
        let c = if rng.gen_bool(0.5) { 1 } else { -1 };
        // p <- p * (I + c e_ij), q <- (I - c e_ij) * q
        for row in p.iter_mut() {
            row[j] += c * row[i];
        }
        let qi = q[j].clone();
        for (x, y) in q[i].iter_mut().zip(qi) {
            *x -= c * y;
        }
    }
    (p, q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homalg::{is_quasi_iso, verify_complex};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(r: usize) -> PrunedTree {
        PrunedTree::corolla(r)
    }

    const Q: CoefficientRing = CoefficientRing::Rationals;

    #[test]
    fn yoneda_values() {
        let y = yoneda_covariant(&c(3)).unwrap();
        assert_eq!(y.dim(&c(3)), 1);
        assert_eq!(y.dim(&c(2)), 2);
        assert_eq!(y.dim(&c(4)), 0);
        validate_diagram(&y).unwrap();
        let z = yoneda_contravariant(&c(2), 3).unwrap();
        assert_eq!(z.dim(&c(3)), 2);
        validate_diagram(&z).unwrap();
        validate_diagram(&punctual(&c(2), Variance::Covariant)).unwrap();
    }

    #[test]
    fn epsilon_restrictions_are_twisted_diagrams() {
        for d in [
            yoneda_covariant(&c(4)).unwrap(),
            yoneda_contravariant(&c(1), 4).unwrap(),
        ] {
            let e = epsilon_restriction(&d).unwrap();
            validate_diagram(&e).unwrap();
        }
    }

    #[test]
    fn broken_functor_is_caught() {
        let y = yoneda_covariant(&c(3)).unwrap();
        let mut bad = y.clone();
        let u = hom_set(&c(3), &c(2)).unwrap()[0].clone();
        let m = bad.action(&u).scale(2);
        bad.actions.insert(u, m);
        assert!(validate_diagram(&bad).is_err());
    }

    #[test]
    fn tensor_identities() {
        let t = yoneda_covariant(&c(3)).unwrap();
        let s = yoneda_contravariant(&c(2), 3).unwrap();
        let r = tensor_over_category(&s, &t, Q).unwrap();
        assert_eq!(r, BTreeMap::from([(0, 2)]));
        let pt = punctual(&c(2), Variance::Contravariant);
        let pc = punctual(&c(2), Variance::Covariant);
        assert_eq!(
            tensor_over_category(&pt, &pc, Q).unwrap(),
            BTreeMap::from([(0, 1)])
        );
        let pc3 = punctual(&c(3), Variance::Covariant);
        assert!(tensor_over_category(&pt, &pc3, Q).unwrap().is_empty());
    }

    #[test]
    fn punctual_complexes() {
        let s = punctual(&c(1), Variance::Contravariant);
        let t = punctual(&c(3), Variance::Covariant);
        let b = bar_with_coefficients(&s, &t, Q).unwrap();
        let plain = crate::barkoszul::bar_complex(&c(3), &c(1), Q).unwrap();
        assert_eq!(b.dims(), plain.dims());
        assert_eq!(b.boundaries, plain.boundaries);
        let k = koszul_with_coefficients(&s, &t, Q).unwrap();
        assert_eq!(k.dims(), BTreeMap::from([(2, 1)]));
        let f = kappa(&s, &t, Q).unwrap();
        assert!(is_quasi_iso(&f).unwrap());
    }

    #[test]
    fn kappa_on_yoneda() {
        let s = yoneda_contravariant(&c(1), 3).unwrap();
        let t = yoneda_covariant(&c(3)).unwrap();
        let k = koszul_with_coefficients(&s, &t, Q).unwrap();
        verify_complex(&k).unwrap();
        let f = kappa(&s, &t, Q).unwrap();
        f.verify().unwrap();
        assert!(is_quasi_iso(&f).unwrap());
        // twisted restriction gives the same Koszul complex
        let ks = koszul_with_coefficients(
            &epsilon_restriction(&s).unwrap(),
            &epsilon_restriction(&t).unwrap(),
            Q,
        )
        .unwrap();
        assert_eq!(ks, k);
    }

    #[test]
    fn tor_examples() {
        let s = punctual(&c(1), Variance::Contravariant);
        let t = punctual(&c(4), Variance::Covariant);
        let r = tor(&s, &t, Q, true).unwrap();
        assert_eq!(r.koszul, BTreeMap::from([(3, 1)]));
        assert_eq!(r.agree, Some(true));
        let b = punctual(&PrunedTree::trunk(1), Variance::Contravariant);
        let y = yoneda_covariant(&c(2)).unwrap();
        assert!(tor(&b, &y, Q, true).unwrap().koszul.is_empty());
    }

    #[test]
    fn ext_examples() {
        let y = yoneda_covariant(&c(3)).unwrap();
        let t = random_strict_diagram(Variance::Covariant, 1, 3, &mut ChaCha8Rng::seed_from_u64(4))
            .unwrap();
        let e = ext(&y, &t, Q).unwrap();
        let expected: BTreeMap<i64, usize> = t
            .value(&c(3))
            .map(|m| m.ranks().into_iter().map(|(d, r)| (-d, r)).collect())
            .unwrap_or_default();
        assert_eq!(e, expected);
        let b = punctual(&c(1), Variance::Covariant);
        let p = punctual(&c(3), Variance::Covariant);
        assert_eq!(ext(&p, &b, Q).unwrap(), BTreeMap::from([(2, 1)]));
        assert_eq!(ext_via_bar(&p, &b, Q).unwrap(), BTreeMap::from([(2, 1)]));
    }

    #[test]
    fn homotopy_checks() {
        let s = punctual(&c(1), Variance::Contravariant);
        contracting_homotopy_check(&s, &c(3), HomotopySign::Standard).unwrap();
        assert!(contracting_homotopy_check(&s, &c(3), HomotopySign::Flipped).is_err());
        let y = yoneda_contravariant(&c(2), 3).unwrap();
        contracting_homotopy_check(&y, &c(3), HomotopySign::Standard).unwrap();
        contracting_homotopy_check(&y, &c(2), HomotopySign::Standard).unwrap();
    }

    #[test]
    fn random_diagrams_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let d = random_strict_diagram(Variance::Contravariant, 1, 3, &mut rng).unwrap();
            validate_diagram(&d).unwrap();
            let back = Diagram::from_json(&d.to_json()).unwrap();
            assert_eq!(back.to_json(), d.to_json());
        }
    }
}

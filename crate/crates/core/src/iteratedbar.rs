//! Iterated bar complexes of finite graded commutative algebras.
//!
//! The Koszul side takes the tree diagram `τ ↦ Ā^{⊗ In τ}` (leaves of `τ`
//! labeled by elements of the augmentation ideal), where a morphism
//! multiplies the factors lying over each target leaf, and forms its Koszul
//! complex against the point at the trunk `i_n`. A tree term sits in total
//! degree `deg τ + internal degree`: one suspension per non-root vertex,
//! which is the Koszul degree `deg τ - n` shifted by the `n` vertices of
//! the trunk. The unit of the bar construction is added in degree 0.
//!
//! The oracle is the reduced bar construction with the shuffle product,
//! iterated `n` times.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::barkoszul::direct_sum;
use crate::diagrams::{
    epsilon_restriction, koszul_with_coefficients, punctual, Diagram, DiagramError, GradedModule,
    Mode, Variance,
};
use crate::homalg::{
    homology_ranks, CoefficientRing, FreeChainComplex, HomalgError, SparseMatrix, SparseVec,
};
use crate::morphisms::{hom_set, MorphismError, TreeMorphism};
use crate::signs::koszul_sign;
use crate::trees::{enumerate_trees, PrunedTree, TreeError};

pub const DEFAULT_TENSOR_CAP: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IteratedBarError {
    #[error(transparent)]
    Algebra(#[from] AlgebraWitness),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Morphism(#[from] MorphismError),
    #[error(transparent)]
    Diagram(#[from] DiagramError),
    #[error(transparent)]
    Homalg(#[from] HomalgError),
    #[error("the augmentation is not multiplicative: {0}")]
    NotAugmented(String),
    #[error("augmentation ideal has an element of negative degree: {0}")]
    NegativeDegree(String),
    #[error("more than {0} basis elements")]
    CapExceeded(usize),
    #[error("trees in the support must have {0} levels")]
    LevelMismatch(usize),
    #[error("bad algebra data: {0}")]
    Format(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BasisElement {
    pub name: String,
    pub degree: i64,
}

/// A finite graded algebra given by structure constants on a basis, with
/// an optional differential of degree `-1`. Products with the unit that are
/// not listed are the unit rule; unlisted products are zero.
///
/// `truncated_above: Some(b)` marks a degree truncation: products landing
/// above `b` were dropped, so the Leibniz rule is only required for pairs
/// of total degree `<= b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlgebraPresentation {
    pub basis: Vec<BasisElement>,
    pub unit: usize,
    pub products: BTreeMap<(usize, usize), SparseVec>,
    pub differential: Option<Vec<SparseVec>>,
    pub ring: CoefficientRing,
    pub truncated_above: Option<i64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Law {
    Shape,
    Unit,
    Grading,
    Associativity,
    Commutativity,
    Differential,
    Leibniz,
}

impl fmt::Display for Law {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// A failed algebra law at the listed basis elements.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[error("{law} fails at {elements:?}: {detail}")]
pub struct AlgebraWitness {
    pub law: Law,
    pub elements: Vec<usize>,
    pub detail: String,
}

fn parity(k: i64) -> i64 {
    if k & 1 == 0 {
        1
    } else {
        -1
    }
}

fn collect(ring: CoefficientRing, terms: impl IntoIterator<Item = (usize, i64)>) -> SparseVec {
    let mut map: BTreeMap<usize, i64> = BTreeMap::new();
    for (i, c) in terms {
        *map.entry(i).or_insert(0) += c;
    }
    map.into_iter()
        .map(|(i, c)| (i, ring.reduce(c)))
        .filter(|&(_, c)| c != 0)
        .collect()
}

impl AlgebraPresentation {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn degree(&self, i: usize) -> i64 {
        self.basis[i].degree
    }

    pub fn is_dg(&self) -> bool {
        self.differential
            .as_ref()
            .is_some_and(|d| d.iter().any(|c| !c.is_empty()))
    }

    /// `e_i e_j` in the basis.
    pub fn product(&self, i: usize, j: usize) -> SparseVec {
        if let Some(p) = self.products.get(&(i, j)) {
            return collect(self.ring, p.iter().copied());
        }
        if i == self.unit {
            vec![(j, 1)]
        } else if j == self.unit {
            vec![(i, 1)]
        } else {
            Vec::new()
        }
    }

    pub fn multiply(&self, a: &[(usize, i64)], b: &[(usize, i64)]) -> SparseVec {
        let mut terms = Vec::new();
        for &(i, x) in a {
            for &(j, y) in b {
                terms.extend(self.product(i, j).into_iter().map(|(k, z)| (k, x * y * z)));
            }
        }
        collect(self.ring, terms)
    }

    /// `d e_i`; zero without a differential.
    pub fn d(&self, i: usize) -> SparseVec {
        self.differential
            .as_ref()
            .map_or_else(Vec::new, |d| collect(self.ring, d[i].iter().copied()))
    }

    fn d_vec(&self, a: &[(usize, i64)]) -> SparseVec {
        collect(
            self.ring,
            a.iter()
                .flat_map(|&(i, x)| self.d(i).into_iter().map(move |(k, z)| (k, x * z))),
        )
    }

    /// The augmentation ideal: every basis element except the unit.
    pub fn ideal(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&i| i != self.unit).collect()
    }

    pub fn with_ring(&self, ring: CoefficientRing) -> Self {
        AlgebraPresentation {
            ring,
            ..self.clone()
        }
    }

    /// `k[x]/(x²)` with `x` in degree `degree`.
    pub fn dual_numbers(degree: i64, ring: CoefficientRing) -> Self {
        AlgebraPresentation {
            basis: vec![
                BasisElement {
                    name: "1".into(),
                    degree: 0,
                },
                BasisElement {
                    name: "x".into(),
                    degree,
                },
            ],
            unit: 0,
            products: BTreeMap::new(),
            differential: None,
            ring,
            truncated_above: None,
        }
    }

    /// The exterior algebra on one generator of degree 1.
    pub fn exterior(ring: CoefficientRing) -> Self {
        let mut a = Self::dual_numbers(1, ring);
        a.basis[1].name = "e".into();
        a
    }

    /// The ground ring.
    pub fn trivial(ring: CoefficientRing) -> Self {
        AlgebraPresentation {
            basis: vec![BasisElement {
                name: "1".into(),
                degree: 0,
            }],
            unit: 0,
            products: BTreeMap::new(),
            differential: None,
            ring,
            truncated_above: None,
        }
    }

    /// `k[x]/(x^{height})` with `x` in even degree `degree`.
    pub fn truncated_polynomial(degree: i64, height: usize, ring: CoefficientRing) -> Self {
        let basis = (0..height)
            .map(|k| BasisElement {
                name: match k {
                    0 => "1".into(),
                    1 => "x".into(),
                    _ => format!("x^{k}"),
                },
                degree: degree * k as i64,
            })
            .collect();
        let mut products = BTreeMap::new();
        for i in 1..height {
            for j in 1..height {
                if i + j < height {
                    products.insert((i, j), vec![(i + j, 1)]);
                }
            }
        }
        AlgebraPresentation {
            basis,
            unit: 0,
            products,
            differential: None,
            ring,
            truncated_above: None,
        }
    }

    /// `{"basis": [{"name", "degree"}], "unit", "products": {"(i,j)": [[k, c]]}}`
    /// with optional `"differential": {"i": [[k, c]]}` and `"ring"`.
    /// Indices are zero-based.
    pub fn from_json(value: &Value, ring: CoefficientRing) -> Result<Self, IteratedBarError> {
        let bad = |m: &str| IteratedBarError::Format(m.to_string());
        let obj = value.as_object().ok_or_else(|| bad("expected an object"))?;
        let ring = match obj.get("ring").and_then(Value::as_str) {
            Some(s) => s.parse()?,
            None => ring,
        };
        let basis = obj
            .get("basis")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("missing basis"))?
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let degree = b
                    .get("degree")
                    .and_then(Value::as_i64)
                    .ok_or_else(|| bad("basis element without degree"))?;
                let name = b
                    .get("name")
                    .and_then(Value::as_str)
                    .map_or_else(|| format!("e{i}"), str::to_string);
                Ok(BasisElement { name, degree })
            })
            .collect::<Result<Vec<_>, IteratedBarError>>()?;
        let unit = obj
            .get("unit")
            .and_then(Value::as_u64)
            .ok_or_else(|| bad("missing unit"))? as usize;
        let terms = |v: &Value| -> Result<SparseVec, IteratedBarError> {
            v.as_array()
                .ok_or_else(|| bad("expected a list of [index, coefficient]"))?
                .iter()
                .map(|t| match t.as_array().map(Vec::as_slice) {
                    Some([k, c]) => match (k.as_u64(), c.as_i64()) {
                        (Some(k), Some(c)) => Ok((k as usize, c)),
                        _ => Err(bad("bad term")),
                    },
                    _ => Err(bad("bad term")),
                })
                .collect()
        };
        let mut products = BTreeMap::new();
        if let Some(p) = obj.get("products") {
            let p = p
                .as_object()
                .ok_or_else(|| bad("products must be an object"))?;
            for (key, v) in p {
                let pair = key
                    .trim()
                    .strip_prefix('(')
                    .and_then(|s| s.strip_suffix(')'))
                    .and_then(|s| s.split_once(','))
                    .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)))
                    .ok_or_else(|| bad(&format!("bad product key {key}")))?;
                products.insert(pair, terms(v)?);
            }
        }
        let differential = match obj.get("differential") {
            None => None,
            Some(d) => {
                let d = d
                    .as_object()
                    .ok_or_else(|| bad("differential must be an object"))?;
                let mut cols = vec![Vec::new(); basis.len()];
                for (key, v) in d {
                    let i: usize = key
                        .trim()
                        .parse()
                        .map_err(|_| bad("bad differential key"))?;
                    *cols
                        .get_mut(i)
                        .ok_or_else(|| bad("differential index out of range"))? = terms(v)?;
                }
                Some(cols)
            }
        };
        let truncated_above = obj.get("truncated_above").and_then(Value::as_i64);
        Ok(AlgebraPresentation {
            basis,
            unit,
            products,
            differential,
            ring,
            truncated_above,
        })
    }

    pub fn to_json(&self) -> Value {
        let products: serde_json::Map<String, Value> = self
            .products
            .iter()
            .map(|((i, j), v)| (format!("({i},{j})"), json!(terms_json(v))))
            .collect();
        let mut out = json!({
            "basis": self.basis,
            "unit": self.unit,
            "products": products,
            "ring": self.ring.to_string(),
        });
        if let Some(d) = &self.differential {
            let d: serde_json::Map<String, Value> = d
                .iter()
                .enumerate()
                .filter(|(_, v)| !v.is_empty())
                .map(|(i, v)| (i.to_string(), json!(terms_json(v))))
                .collect();
            out["differential"] = Value::Object(d);
        }
        if let Some(b) = self.truncated_above {
            out["truncated_above"] = json!(b);
        }
        out
    }
}

fn terms_json(v: &[(usize, i64)]) -> Vec<[i64; 2]> {
    v.iter().map(|&(k, c)| [k as i64, c]).collect()
}

fn witness(law: Law, elements: Vec<usize>, detail: impl Into<String>) -> AlgebraWitness {
    AlgebraWitness {
        law,
        elements,
        detail: detail.into(),
    }
}

/// Checks unit, grading, associativity, graded commutativity and, for a
/// differential, `d² = 0` and the Leibniz rule.
pub fn validate_algebra(a: &AlgebraPresentation) -> Result<(), AlgebraWitness> {
    validate_with(a, true)
}

/// As [`validate_algebra`] without graded commutativity.
pub fn validate_associative(a: &AlgebraPresentation) -> Result<(), AlgebraWitness> {
    validate_with(a, false)
}

fn validate_with(a: &AlgebraPresentation, commutative: bool) -> Result<(), AlgebraWitness> {
    let n = a.dim();
    if a.unit >= n {
        return Err(witness(Law::Shape, vec![a.unit], "unit index out of range"));
    }
    for (&(i, j), v) in &a.products {
        if i >= n || j >= n || v.iter().any(|&(k, _)| k >= n) {
            return Err(witness(Law::Shape, vec![i, j], "index out of range"));
        }
    }
    if let Some(d) = &a.differential {
        if d.len() != n || d.iter().flatten().any(|&(k, _)| k >= n) {
            return Err(witness(
                Law::Shape,
                vec![],
                "differential has the wrong shape",
            ));
        }
    }
    if a.degree(a.unit) != 0 {
        return Err(witness(
            Law::Grading,
            vec![a.unit],
            "unit is not in degree 0",
        ));
    }
    let e = |i: usize| vec![(i, 1i64)];
    for i in 0..n {
        if a.product(a.unit, i) != e(i) || a.product(i, a.unit) != e(i) {
            return Err(witness(Law::Unit, vec![a.unit, i], "unit law"));
        }
    }
    for i in 0..n {
        for j in 0..n {
            let p = a.product(i, j);
            if let Some(&(k, _)) = p
                .iter()
                .find(|&&(k, _)| a.degree(k) != a.degree(i) + a.degree(j))
            {
                return Err(witness(
                    Law::Grading,
                    vec![i, j, k],
                    "product is not homogeneous",
                ));
            }
            if commutative {
                let q: SparseVec = collect(
                    a.ring,
                    a.product(j, i)
                        .into_iter()
                        .map(|(k, c)| (k, c * parity(a.degree(i) * a.degree(j)))),
                );
                if p != q {
                    return Err(witness(
                        Law::Commutativity,
                        vec![i, j],
                        format!("{p:?} vs {q:?}"),
                    ));
                }
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            let ij = a.product(i, j);
            for k in 0..n {
                let left = a.multiply(&ij, &e(k));
                let right = a.multiply(&e(i), &a.product(j, k));
                if left != right {
                    return Err(witness(
                        Law::Associativity,
                        vec![i, j, k],
                        format!("{left:?} vs {right:?}"),
                    ));
                }
            }
        }
    }
    if a.differential.is_some() {
        for i in 0..n {
            let di = a.d(i);
            if let Some(&(k, _)) = di.iter().find(|&&(k, _)| a.degree(k) != a.degree(i) - 1) {
                return Err(witness(
                    Law::Differential,
                    vec![i, k],
                    "differential is not of degree -1",
                ));
            }
            if !a.d_vec(&di).is_empty() {
                return Err(witness(Law::Differential, vec![i], "d² ≠ 0"));
            }
        }
        let bound = a.truncated_above.unwrap_or(i64::MAX);
        for i in 0..n {
            for j in 0..n {
                if a.degree(i) + a.degree(j) > bound {
                    continue;
                }
                let left = a.d_vec(&a.product(i, j));
                let mut terms = a.multiply(&a.d(i), &e(j));
                let sign = parity(a.degree(i));
                terms.extend(
                    a.multiply(&e(i), &a.d(j))
                        .into_iter()
                        .map(|(k, c)| (k, sign * c)),
                );
                let right = collect(a.ring, terms);
                if left != right {
                    return Err(witness(
                        Law::Leibniz,
                        vec![i, j],
                        format!("{left:?} vs {right:?}"),
                    ));
                }
            }
        }
    }
    Ok(())
}

fn check_augmented(a: &AlgebraPresentation) -> Result<(), IteratedBarError> {
    let ideal = a.ideal();
    for &i in &ideal {
        if a.degree(i) < 0 {
            return Err(IteratedBarError::NegativeDegree(a.basis[i].name.clone()));
        }
        if a.d(i).iter().any(|&(k, _)| k == a.unit) {
            return Err(IteratedBarError::NotAugmented(format!(
                "d {}",
                a.basis[i].name
            )));
        }
        for &j in &ideal {
            if a.product(i, j).iter().any(|&(k, _)| k == a.unit) {
                return Err(IteratedBarError::NotAugmented(format!(
                    "{} · {}",
                    a.basis[i].name, a.basis[j].name
                )));
            }
        }
    }
    Ok(())
}

/// Tensor words over `letters`, as a graded module with the tensor
/// differential.
struct TensorPower {
    words: Vec<Vec<usize>>,
    index: HashMap<Vec<usize>, usize>,
}

impl TensorPower {
    fn new(letters: &[usize], length: usize, cap: usize) -> Result<Self, IteratedBarError> {
        let count = (letters.len() as f64).powi(length as i32);
        if count > cap as f64 {
            return Err(IteratedBarError::CapExceeded(cap));
        }
        let mut words: Vec<Vec<usize>> = vec![Vec::new()];
        for _ in 0..length {
            words = words
                .into_iter()
                .flat_map(|w| {
                    letters.iter().map(move |&l| {
                        let mut v = w.clone();
                        v.push(l);
                        v
                    })
                })
                .collect();
        }
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        Ok(TensorPower { words, index })
    }

    fn module(&self, a: &AlgebraPresentation) -> GradedModule {
        let degrees = self
            .words
            .iter()
            .map(|w| w.iter().map(|&l| a.degree(l)).sum())
            .collect();
        let differential = a.is_dg().then(|| {
            let cols = self
                .words
                .iter()
                .map(|w| {
                    let mut before = 0;
                    let mut terms = Vec::new();
                    for (p, &l) in w.iter().enumerate() {
                        for (k, c) in a.d(l) {
                            let mut v = w.clone();
                            v[p] = k;
                            terms.push((self.index[&v], parity(before) * c));
                        }
                        before += a.degree(l);
                    }
                    collect(a.ring, terms)
                })
                .collect();
            SparseMatrix::from_columns(self.words.len(), cols)
        });
        GradedModule {
            degrees,
            differential,
        }
    }
}

/// `u_*` on one tensor word: multiply the factors over each target leaf,
/// with the Koszul sign of gathering them.
fn push_word(
    a: &AlgebraPresentation,
    u: &TreeMorphism,
    word: &[usize],
    target: &TensorPower,
) -> Result<SparseVec, IteratedBarError> {
    let leaf_map = u.map(0);
    let mut perm: Vec<usize> = (0..word.len()).collect();
    perm.sort_by_key(|&j| (leaf_map[j], j));
    let degrees: Vec<i64> = word.iter().map(|&l| a.degree(l)).collect();
    let sign = koszul_sign(&perm, &degrees);
    let mut partial: Vec<(Vec<usize>, i64)> = vec![(Vec::new(), sign)];
    let mut start = 0;
    while start < perm.len() {
        let i = leaf_map[perm[start]];
        let mut end = start;
        let mut value = vec![(a.unit, 1)];
        while end < perm.len() && leaf_map[perm[end]] == i {
            value = a.multiply(&value, &[(word[perm[end]], 1)]);
            end += 1;
        }
        partial = partial
            .into_iter()
            .flat_map(|(w, c)| {
                value.iter().map(move |&(k, x)| {
                    let mut v = w.clone();
                    v.push(k);
                    (v, c * x)
                })
            })
            .collect();
        start = end;
    }
    let mut terms = Vec::with_capacity(partial.len());
    for (w, c) in partial {
        let &k = target.index.get(&w).ok_or_else(|| {
            IteratedBarError::NotAugmented(format!("{} leaves a unit factor", u.key()))
        })?;
        terms.push((k, c));
    }
    Ok(collect(a.ring, terms))
}

fn tensor_diagram(
    a: &AlgebraPresentation,
    letters: &[usize],
    n: usize,
    support: &[PrunedTree],
    cap: usize,
) -> Result<Diagram, IteratedBarError> {
    if let Some(t) = support.iter().find(|t| t.n() != n) {
        return Err(IteratedBarError::LevelMismatch(t.n()));
    }
    let mut powers: BTreeMap<usize, TensorPower> = BTreeMap::new();
    let mut total = 0usize;
    for t in support {
        if let std::collections::btree_map::Entry::Vacant(e) = powers.entry(t.leaves()) {
            let p = TensorPower::new(letters, t.leaves(), cap)?;
            total += p.words.len();
            e.insert(p);
        }
    }
    if total > cap {
        return Err(IteratedBarError::CapExceeded(cap));
    }
    let values: BTreeMap<PrunedTree, GradedModule> = support
        .iter()
        .map(|t| (t.clone(), powers[&t.leaves()].module(a)))
        .collect();
    let mut actions = HashMap::new();
    for tau in support {
        for sigma in support {
            if tau == sigma || sigma.degree() >= tau.degree() {
                continue;
            }
            let (src, tgt) = (&powers[&tau.leaves()], &powers[&sigma.leaves()]);
            for u in hom_set(tau, sigma)?.iter() {
                let cols = src
                    .words
                    .iter()
                    .map(|w| push_word(a, u, w, tgt))
                    .collect::<Result<Vec<_>, _>>()?;
                actions.insert(u.clone(), SparseMatrix::from_columns(tgt.words.len(), cols));
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

/// `τ ↦ A^{⊗ In τ}` on `support`; a morphism multiplies along the fibers of
/// its leaf map.
pub fn en_diagram(
    a: &AlgebraPresentation,
    n: usize,
    support: &[PrunedTree],
    cap: usize,
) -> Result<Diagram, IteratedBarError> {
    validate_algebra(a)?;
    let letters: Vec<usize> = (0..a.dim()).collect();
    tensor_diagram(a, &letters, n, support, cap)
}

/// The subdiagram `τ ↦ Ā^{⊗ In τ}` on the augmentation ideal.
pub fn reduced_en_diagram(
    a: &AlgebraPresentation,
    n: usize,
    support: &[PrunedTree],
    cap: usize,
) -> Result<Diagram, IteratedBarError> {
    validate_algebra(a)?;
    check_augmented(a)?;
    tensor_diagram(a, &a.ideal(), n, support, cap)
}

fn truncate_above(c: &FreeChainComplex, top: i64) -> FreeChainComplex {
    if c.labels.is_empty() || c.hi() <= top {
        return c.clone();
    }
    let keep = (top - c.lo + 1).max(0) as usize;
    FreeChainComplex {
        ring: c.ring,
        lo: c.lo,
        labels: c.labels[..keep].to_vec(),
        boundaries: c.boundaries[..keep].to_vec(),
    }
}

fn unit_complex(ring: CoefficientRing) -> FreeChainComplex {
    FreeChainComplex::from_graded(
        ring,
        BTreeMap::from([(0, vec!["1".to_string()])]),
        BTreeMap::new(),
    )
}

/// The iterated bar complex as the Koszul complex of the point at `i_n`
/// with coefficients in the ε-restricted reduced diagram, plus the unit.
/// Complete in total degrees `<= degree_bound + 1`, so its homology is
/// exact up to `degree_bound`.
pub fn iterated_bar_via_koszul(
    a: &AlgebraPresentation,
    n: usize,
    degree_bound: usize,
    cap: usize,
) -> Result<FreeChainComplex, IteratedBarError> {
    let top = degree_bound as i64 + 1;
    // a tree of total degree <= top has at most top leaves
    let support = enumerate_trees(n, top as usize)?;
    let diagram = epsilon_restriction(&reduced_en_diagram(a, n, &support, cap)?)?;
    let point = punctual(&PrunedTree::trunk(n), Variance::Contravariant);
    let mut k = koszul_with_coefficients(&point, &diagram, a.ring)?;
    k.lo += n as i64;
    let k = truncate_above(&k, top);
    Ok(direct_sum(&[unit_complex(a.ring), k], a.ring))
}

/// Reduced bar words `[c_1|…|c_r]` of total degree `Σ (|c_i| + 1) <= bound`.
struct BarWords {
    words: Vec<Vec<usize>>,
    index: HashMap<Vec<usize>, usize>,
    degrees: Vec<i64>,
}

impl BarWords {
    fn new(a: &AlgebraPresentation, bound: i64, cap: usize) -> Result<Self, IteratedBarError> {
        check_augmented(a)?;
        let ideal = a.ideal();
        let mut words = vec![Vec::new()];
        let mut degrees = vec![0];
        let mut frontier = vec![(Vec::new(), 0i64)];
        while let Some((w, deg)) = frontier.pop() {
            for &l in &ideal {
                let d = deg + a.degree(l) + 1;
                if d <= bound {
                    let mut v: Vec<usize> = w.clone();
                    v.push(l);
                    words.push(v.clone());
                    degrees.push(d);
                    frontier.push((v, d));
                    if words.len() > cap {
                        return Err(IteratedBarError::CapExceeded(cap));
                    }
                }
            }
        }
        let mut order: Vec<usize> = (0..words.len()).collect();
        order.sort_by(|&x, &y| (degrees[x], &words[x]).cmp(&(degrees[y], &words[y])));
        let words: Vec<Vec<usize>> = order.iter().map(|&i| words[i].clone()).collect();
        let degrees = order.iter().map(|&i| degrees[i]).collect();
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        Ok(BarWords {
            words,
            index,
            degrees,
        })
    }

    fn label(&self, a: &AlgebraPresentation, i: usize) -> String {
        let w = &self.words[i];
        if w.is_empty() {
            return "1".to_string();
        }
        let names: Vec<&str> = w.iter().map(|&l| a.basis[l].name.as_str()).collect();
        format!("[{}]", names.join("|"))
    }

    /// `d[c_1|…|c_r] = -Σ (-1)^{ε_{i-1}} [..|dc_i|..] + Σ (-1)^{ε_i} [..|c_i c_{i+1}|..]`
    /// with `ε_i = Σ_{j <= i} (|c_j| + 1)`.
    fn differential(&self, a: &AlgebraPresentation, i: usize) -> SparseVec {
        let w = &self.words[i];
        let mut terms = Vec::new();
        let mut eps = 0;
        for (p, &c) in w.iter().enumerate() {
            for (k, x) in a.d(c) {
                let mut v = w.clone();
                v[p] = k;
                terms.push((self.index[&v], -parity(eps) * x));
            }
            eps += a.degree(c) + 1;
            if p + 1 < w.len() {
                for (k, x) in a.product(c, w[p + 1]) {
                    let mut v = w[..p].to_vec();
                    v.push(k);
                    v.extend_from_slice(&w[p + 2..]);
                    terms.push((self.index[&v], parity(eps) * x));
                }
            }
        }
        collect(a.ring, terms)
    }

    /// Shuffle product, dropped above the bound.
    fn shuffle(&self, a: &AlgebraPresentation, x: usize, y: usize, bound: i64) -> SparseVec {
        if self.degrees[x] + self.degrees[y] > bound {
            return Vec::new();
        }
        let (u, v) = (&self.words[x], &self.words[y]);
        let (p, q) = (u.len(), v.len());
        let letters: Vec<usize> = u.iter().chain(v).copied().collect();
        let degrees: Vec<i64> = letters.iter().map(|&l| a.degree(l) + 1).collect();
        let mut terms = Vec::new();
        let mut perm = Vec::with_capacity(p + q);
        shuffles(p, q, &mut perm, &mut |perm| {
            let w: Vec<usize> = perm.iter().map(|&k| letters[k]).collect();
            terms.push((self.index[&w], koszul_sign(perm, &degrees)));
        });
        collect(a.ring, terms)
    }
}

fn shuffles(p: usize, q: usize, perm: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
    let used_left = perm.iter().filter(|&&k| k < p).count();
    let used_right = perm.len() - used_left;
    if used_left == p && used_right == q {
        f(perm);
        return;
    }
    if used_left < p {
        perm.push(used_left);
        shuffles(p, q, perm, f);
        perm.pop();
    }
    if used_right < q {
        perm.push(p + used_right);
        shuffles(p, q, perm, f);
        perm.pop();
    }
}

/// The reduced bar complex of an augmented associative algebra, truncated
/// to total degrees `<= bound`.
pub fn bar_complex_of_algebra(
    a: &AlgebraPresentation,
    bound: usize,
    cap: usize,
) -> Result<FreeChainComplex, IteratedBarError> {
    validate_associative(a)?;
    let bw = BarWords::new(a, bound as i64, cap)?;
    let mut by_degree: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (i, &d) in bw.degrees.iter().enumerate() {
        by_degree.entry(d).or_default().push(i);
    }
    let position: HashMap<usize, usize> = by_degree
        .values()
        .flat_map(|l| l.iter().enumerate().map(|(p, &i)| (i, p)))
        .collect();
    let mut labels = BTreeMap::new();
    let mut columns = BTreeMap::new();
    for (&d, list) in &by_degree {
        labels.insert(d, list.iter().map(|&i| bw.label(a, i)).collect());
        let cols = list
            .iter()
            .map(|&i| {
                bw.differential(a, i)
                    .into_iter()
                    .map(|(k, c)| (position[&k], c))
                    .collect()
            })
            .collect();
        columns.insert(d, cols);
    }
    Ok(FreeChainComplex::from_graded(a.ring, labels, columns))
}

/// The reduced bar construction truncated to total degrees `<= bound`, with
/// the shuffle product and the bar differential, as a new presentation.
pub fn bar_of_algebra(
    a: &AlgebraPresentation,
    bound: usize,
    cap: usize,
) -> Result<AlgebraPresentation, IteratedBarError> {
    validate_algebra(a)?;
    let bw = BarWords::new(a, bound as i64, cap)?;
    let basis = (0..bw.words.len())
        .map(|i| BasisElement {
            name: bw.label(a, i),
            degree: bw.degrees[i],
        })
        .collect();
    let mut products = BTreeMap::new();
    for x in 1..bw.words.len() {
        for y in 1..bw.words.len() {
            let p = bw.shuffle(a, x, y, bound as i64);
            if !p.is_empty() {
                products.insert((x, y), p);
            }
        }
    }
    let d: Vec<SparseVec> = (0..bw.words.len()).map(|i| bw.differential(a, i)).collect();
    let differential = d.iter().any(|c| !c.is_empty()).then_some(d);
    Ok(AlgebraPresentation {
        basis,
        unit: 0,
        products,
        differential,
        ring: a.ring,
        truncated_above: Some(bound as i64),
    })
}

/// An algebra as a chain complex graded by internal degree.
pub fn algebra_complex(a: &AlgebraPresentation) -> FreeChainComplex {
    let mut by_degree: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for i in 0..a.dim() {
        by_degree.entry(a.degree(i)).or_default().push(i);
    }
    let position: HashMap<usize, usize> = by_degree
        .values()
        .flat_map(|l| l.iter().enumerate().map(|(p, &i)| (i, p)))
        .collect();
    let labels = by_degree
        .iter()
        .map(|(&d, l)| (d, l.iter().map(|&i| a.basis[i].name.clone()).collect()))
        .collect();
    let columns = by_degree
        .iter()
        .map(|(&d, l)| {
            let cols = l
                .iter()
                .map(|&i| a.d(i).into_iter().map(|(k, c)| (position[&k], c)).collect())
                .collect();
            (d, cols)
        })
        .collect();
    FreeChainComplex::from_graded(a.ring, labels, columns)
}

/// `B̄^n(A)` by iterating [`bar_of_algebra`], complete up to `bound`.
pub fn iterated_bar_of_algebra(
    a: &AlgebraPresentation,
    n: usize,
    bound: usize,
    cap: usize,
) -> Result<AlgebraPresentation, IteratedBarError> {
    let mut b = a.clone();
    for _ in 0..n {
        b = bar_of_algebra(&b, bound, cap)?;
    }
    Ok(b)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IteratedComparison {
    pub n: usize,
    pub degree_bound: usize,
    pub ring: CoefficientRing,
    pub koszul: BTreeMap<i64, usize>,
    pub classical: BTreeMap<i64, usize>,
    pub equal: bool,
}

fn ranks_up_to(c: &FreeChainComplex, bound: i64) -> Result<BTreeMap<i64, usize>, HomalgError> {
    Ok(homology_ranks(c)?
        .into_iter()
        .filter(|&(k, r)| k <= bound && r > 0)
        .collect())
}

/// Homology ranks of the Koszul-side complex against the `n`-fold bar
/// construction, in degrees `<= degree_bound`.
pub fn compare_iterated(
    a: &AlgebraPresentation,
    n: usize,
    degree_bound: usize,
    cap: usize,
) -> Result<IteratedComparison, IteratedBarError> {
    let bound = degree_bound as i64;
    let (koszul, classical) = rayon::join(
        || -> Result<_, IteratedBarError> {
            let c = iterated_bar_via_koszul(a, n, degree_bound, cap)?;
            Ok(ranks_up_to(&c, bound)?)
        },
        || -> Result<_, IteratedBarError> {
            let b = iterated_bar_of_algebra(a, n, degree_bound + 1, cap)?;
            Ok(ranks_up_to(&algebra_complex(&b), bound)?)
        },
    );
    let (koszul, classical) = (koszul?, classical?);
    Ok(IteratedComparison {
        n,
        degree_bound,
        ring: a.ring,
        equal: koszul == classical,
        koszul,
        classical,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagrams::{validate_diagram, validate_diagram_in};
    use crate::homalg::verify_complex;

    const Q: CoefficientRing = CoefficientRing::Rationals;
    const F2: CoefficientRing = CoefficientRing::PrimeField(2);

    fn exterior_two(ring: CoefficientRing) -> AlgebraPresentation {
        let mut a = AlgebraPresentation::trivial(ring);
        for (name, degree) in [("e", 1), ("f", 1), ("ef", 2)] {
            a.basis.push(BasisElement {
                name: name.into(),
                degree,
            });
        }
        a.products.insert((1, 2), vec![(3, 1)]);
        a.products.insert((2, 1), vec![(3, -1)]);
        a
    }

    #[test]
    fn validation() {
        validate_algebra(&AlgebraPresentation::dual_numbers(0, Q)).unwrap();
        validate_algebra(&AlgebraPresentation::exterior(Q)).unwrap();
        validate_algebra(&exterior_two(Q)).unwrap();
        let mut broken = exterior_two(Q);
        broken.products.insert((2, 1), vec![(3, 1)]);
        assert_eq!(
            validate_algebra(&broken).unwrap_err().law,
            Law::Commutativity
        );
        let mut broken = AlgebraPresentation::truncated_polynomial(2, 3, Q);
        broken.products.insert((1, 1), vec![(1, 1)]);
        assert_eq!(validate_algebra(&broken).unwrap_err().law, Law::Grading);
        let mut broken = AlgebraPresentation::truncated_polynomial(0, 3, Q);
        broken.products.insert((1, 2), vec![(1, 1)]);
        broken.products.insert((2, 1), vec![(1, 1)]);
        let w = validate_algebra(&broken).unwrap_err();
        assert_eq!((w.law, w.elements), (Law::Associativity, vec![1, 1, 2]));
        let mut broken = AlgebraPresentation::dual_numbers(0, Q);
        broken.products.insert((0, 1), vec![(1, 2)]);
        assert_eq!(validate_algebra(&broken).unwrap_err().law, Law::Unit);
    }

    #[test]
    fn diagram_values_and_multiplication() {
        let a = AlgebraPresentation::truncated_polynomial(0, 3, Q);
        let support = enumerate_trees(1, 3).unwrap();
        let d = en_diagram(&a, 1, &support, DEFAULT_TENSOR_CAP).unwrap();
        assert_eq!(d.dim(&PrunedTree::trunk(1)), 3);
        assert_eq!(d.dim(&PrunedTree::corolla(3)), 27);
        validate_diagram(&d).unwrap();
        validate_diagram(&epsilon_restriction(&d).unwrap()).unwrap();
        let u = &hom_set(&PrunedTree::corolla(2), &PrunedTree::corolla(1)).unwrap()[0];
        let m = d.action(u);
        // columns are x^i ⊗ x^j in lexicographic order
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i + j < 3 { vec![(i + j, 1)] } else { vec![] };
                assert_eq!(m.cols[3 * i + j], expected);
            }
        }
    }

    #[test]
    fn graded_diagrams_are_strict() {
        let a = exterior_two(Q);
        let support = enumerate_trees(2, 3).unwrap();
        let d = reduced_en_diagram(&a, 2, &support, DEFAULT_TENSOR_CAP).unwrap();
        validate_diagram(&d).unwrap();
        validate_diagram(&epsilon_restriction(&d).unwrap()).unwrap();
        let f3 = CoefficientRing::PrimeField(3);
        let support = enumerate_trees(2, 3).unwrap();
        let d = en_diagram(
            &AlgebraPresentation::exterior(f3),
            2,
            &support,
            DEFAULT_TENSOR_CAP,
        )
        .unwrap();
        validate_diagram_in(&d, f3).unwrap();
        validate_diagram_in(&epsilon_restriction(&d).unwrap(), f3).unwrap();
    }

    #[test]
    fn bar_of_dual_numbers() {
        let a = AlgebraPresentation::dual_numbers(0, Q);
        let b = bar_of_algebra(&a, 5, 1000).unwrap();
        let c = algebra_complex(&b);
        assert_eq!(c.dims(), (0..=5).map(|d| (d, 1)).collect());
        assert!(!b.is_dg());
        // [x]·[x] = [x|x] - [x|x]
        assert_eq!(b.product(1, 1), vec![]);
        assert_eq!(b.product(1, 2), vec![(3, 1)]);
        validate_algebra(&b).unwrap();
    }

    #[test]
    fn bar_output_is_a_dg_algebra() {
        for ring in [Q, F2] {
            let a = AlgebraPresentation::truncated_polynomial(0, 3, ring);
            let b = bar_of_algebra(&a, 4, 1000).unwrap();
            assert!(b.is_dg());
            validate_algebra(&b).unwrap();
            let bb = bar_of_algebra(&b, 4, 10_000).unwrap();
            validate_algebra(&bb).unwrap();
            verify_complex(&algebra_complex(&bb)).unwrap();
        }
    }

    #[test]
    fn bar_of_free_algebra() {
        // truncated free associative algebra on e, f in degree 1
        let mut a = AlgebraPresentation::trivial(Q);
        let words = ["e", "f", "ee", "ef", "fe", "ff"];
        for w in words {
            a.basis.push(BasisElement {
                name: w.into(),
                degree: w.len() as i64,
            });
        }
        for (i, x) in ["e", "f"].iter().enumerate() {
            for (j, y) in ["e", "f"].iter().enumerate() {
                let k = 1 + words.iter().position(|w| *w == format!("{x}{y}")).unwrap();
                a.products.insert((i + 1, j + 1), vec![(k, 1)]);
            }
        }
        validate_associative(&a).unwrap();
        assert_eq!(validate_algebra(&a).unwrap_err().law, Law::Commutativity);
        let c = bar_complex_of_algebra(&a, 4, 1000).unwrap();
        verify_complex(&c).unwrap();
        let h: BTreeMap<i64, usize> = homology_ranks(&c)
            .unwrap()
            .into_iter()
            .filter(|&(k, r)| k <= 3 && r > 0)
            .collect();
        assert_eq!(h, [(0, 1), (2, 2)].into());
    }

    #[test]
    fn trivial_algebra() {
        let c = iterated_bar_via_koszul(&AlgebraPresentation::trivial(Q), 2, 4, 1000).unwrap();
        assert_eq!(c.dims(), [(0, 1)].into());
    }

    #[test]
    fn corolla_components() {
        let c =
            iterated_bar_via_koszul(&AlgebraPresentation::dual_numbers(0, Q), 1, 3, 1000).unwrap();
        assert_eq!(c.dims(), (0..=4).map(|d| (d, 1)).collect());
        assert!(c.labels[2][0].contains(&PrunedTree::corolla(2).to_string()));
    }

    #[test]
    fn comparisons() {
        for ring in [Q, F2] {
            for a in [
                AlgebraPresentation::dual_numbers(0, ring),
                AlgebraPresentation::exterior(ring),
                exterior_two(ring),
            ] {
                for n in 1..=2 {
                    let r = compare_iterated(&a, n, 3, DEFAULT_TENSOR_CAP).unwrap();
                    assert!(r.equal, "{r:?}");
                }
            }
        }
        let r = compare_iterated(
            &AlgebraPresentation::dual_numbers(0, Q),
            2,
            4,
            DEFAULT_TENSOR_CAP,
        )
        .unwrap();
        assert_eq!(r.koszul, [(0, 1), (2, 1), (3, 1), (4, 1)].into());
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"basis": [{"name": "1", "degree": 0}, {"name": "x", "degree": 0}],
                       "unit": 0, "products": {"(1,1)": []}}"#;
        let a = AlgebraPresentation::from_json(&serde_json::from_str(text).unwrap(), Q).unwrap();
        assert_eq!(a.basis, AlgebraPresentation::dual_numbers(0, Q).basis);
        assert_eq!(a.product(1, 1), vec![]);
        let b =
            bar_of_algebra(&AlgebraPresentation::truncated_polynomial(0, 3, F2), 3, 100).unwrap();
        assert_eq!(AlgebraPresentation::from_json(&b.to_json(), Q).unwrap(), b);
    }

    #[test]
    fn unaugmented_is_rejected() {
        let mut a = AlgebraPresentation::dual_numbers(0, Q);
        a.products.insert((1, 1), vec![(0, 1)]);
        let support = enumerate_trees(1, 2).unwrap();
        assert!(matches!(
            reduced_en_diagram(&a, 1, &support, 100),
            Err(IteratedBarError::NotAugmented(_))
        ));
        en_diagram(&a, 1, &support, 100).unwrap();
    }
}

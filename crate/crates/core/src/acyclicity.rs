//! The complexes `L_n(τ, σ) = K(pt_σ, Ω, Ω(τ, -))` and the machinery behind
//! their acyclicity: splitting by composite, the level-0 part `d⁰` of the
//! differential, cycles built from truncation covers, and the comparison of
//! `H(d⁰)` with the complex one level down.
//!
//! A basis element is a pair `{v} ⊗ {w}` with `w: τ -> θ`, `v: θ -> σ`, in
//! degree `deg v + Σ deg(e)` over the entries `e` of `τ`, which are its
//! leaves. The differential is
//! `(-1)^{deg v} Σ_{v = a b, deg b = 1} sgn(b) {a} ⊗ {b w}`, where `sgn(b)`
//! is read on `θ` labeled by the entries pushed through `w`.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::homalg::{
    homology_ranks, kernel_basis, sparse_from_terms, CoefficientRing, FreeChainComplex,
    HomalgError, SparseVec,
};
use crate::morphisms::{
    all_factorizations, compose, degree_one_from, hom_set, is_fiberwise_injective_level0,
    left_factor, truncate_morphism, MorphismError, TreeMorphism,
};
use crate::signs::{koszul_sign, push_labels, sign_degree_one, SignError};
use crate::trees::{truncate_tree, LabeledTree, PrunedTree, TreeError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AcyclicityError {
    #[error(transparent)]
    Morphism(#[from] MorphismError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Sign(#[from] SignError),
    #[error(transparent)]
    Homalg(#[from] HomalgError),
    #[error("trees have {0} and {1} levels")]
    LevelMismatch(usize, usize),
    #[error("expected {expected} entry degrees, found {found}")]
    EntryDegrees { expected: usize, found: usize },
    #[error("{0} is not a morphism between the given trees")]
    ForeignMorphism(String),
    #[error("{0} is not injective on the fibers of level 0")]
    NotFiberInjective(String),
    #[error("the pair does not factor the truncation of {0}")]
    NotACover(String),
    #[error("the recursion needs at least two levels")]
    TooShallow,
}

pub type Tensor = (TreeMorphism, TreeMorphism);

/// `L_n(τ, σ)` together with its basis, in the order of the complex.
#[derive(Debug, Clone)]
pub struct LComplex {
    pub tau: PrunedTree,
    pub sigma: PrunedTree,
    pub entry_degrees: Vec<i64>,
    pub basis: Vec<Tensor>,
    pub complex: FreeChainComplex,
}

/// The summand of `L_n(τ, σ)` spanned by the tensors with composite `u`.
#[derive(Debug, Clone)]
pub struct SplitComplexPiece {
    pub u: TreeMorphism,
    pub entry_degrees: Vec<i64>,
    pub basis: Vec<Tensor>,
    pub complex: FreeChainComplex,
}

/// Which degree-one right factors contribute to the differential.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Part {
    Full,
    Level0,
    Upper,
}

fn entries(tau: &PrunedTree, degrees: &[i64]) -> Result<LabeledTree, AcyclicityError> {
    if degrees.len() != tau.size(0) {
        return Err(AcyclicityError::EntryDegrees {
            expected: tau.size(0),
            found: degrees.len(),
        });
    }
    Ok(LabeledTree::with_leaf_degrees(
        tau.clone(),
        degrees.to_vec(),
    ))
}

fn parity(k: i64) -> i64 {
    if k & 1 == 0 {
        1
    } else {
        -1
    }
}

fn tensor_label((v, w): &Tensor) -> String {
    format!("{{{}}}⊗{{{}}}", v.key(), w.key())
}

/// Basis positions by degree, for a list of tensors.
struct Grading {
    place: HashMap<Tensor, (i64, usize)>,
    labels: BTreeMap<i64, Vec<String>>,
    members: BTreeMap<i64, Vec<Tensor>>,
}

impl Grading {
    fn new(basis: &[Tensor], shift: i64) -> Self {
        let mut g = Grading {
            place: HashMap::with_capacity(basis.len()),
            labels: BTreeMap::new(),
            members: BTreeMap::new(),
        };
        for t in basis {
            let d = t.0.degree() as i64 + shift;
            let slot = g.members.entry(d).or_default();
            g.place.insert(t.clone(), (d, slot.len()));
            slot.push(t.clone());
            g.labels.entry(d).or_default().push(tensor_label(t));
        }
        g
    }
}

/// The differential of one tensor, restricted to `part`.
fn differential(
    (v, w): &Tensor,
    labels: &LabeledTree,
    part: Part,
    ones: &mut HashMap<PrunedTree, Vec<TreeMorphism>>,
) -> Result<Vec<(Tensor, i64)>, AcyclicityError> {
    let theta = v.source();
    let pushed = push_labels(w, labels);
    let outer = parity(v.degree() as i64);
    let bs = ones
        .entry(theta.clone())
        .or_insert_with(|| degree_one_from(theta));
    let mut out = Vec::new();
    for b in bs.iter() {
        let level = b.drops()[0].0;
        let keep = match part {
            Part::Full => true,
            Part::Level0 => level == 0,
            Part::Upper => level > 0,
        };
        if !keep {
            continue;
        }
        if let Some(a) = left_factor(v, b) {
            let s = sign_degree_one(b, &pushed)?;
            out.push(((a, compose(b, w)?), outer * s));
        }
    }
    Ok(out)
}

fn assemble(
    basis: &[Tensor],
    labels: &LabeledTree,
    part: Part,
    ring: CoefficientRing,
) -> Result<FreeChainComplex, AcyclicityError> {
    let shift: i64 = labels.entry_degrees.iter().sum();
    let g = Grading::new(basis, shift);
    let mut ones = HashMap::new();
    let mut columns: BTreeMap<i64, Vec<SparseVec>> = BTreeMap::new();
    for (&d, members) in &g.members {
        let mut cols = Vec::with_capacity(members.len());
        for t in members {
            let mut terms = Vec::new();
            for (target, c) in differential(t, labels, part, &mut ones)? {
                let (dt, pos) = g.place[&target];
                debug_assert_eq!(dt, d - 1);
                terms.push((pos, c));
            }
            cols.push(sparse_from_terms(terms));
        }
        columns.insert(d, cols);
    }
    Ok(FreeChainComplex::from_graded(ring, g.labels, columns))
}

fn check_pair(tau: &PrunedTree, sigma: &PrunedTree) -> Result<(), AcyclicityError> {
    if tau.n() != sigma.n() {
        return Err(AcyclicityError::LevelMismatch(tau.n(), sigma.n()));
    }
    Ok(())
}

fn piece_basis(u: &TreeMorphism) -> Result<Vec<Tensor>, AcyclicityError> {
    Ok(all_factorizations(u)?)
}

/// `L_n(τ, σ)` over `ring`, with `entry_degrees[i]` the degree of leaf `i`.
pub fn l_complex(
    tau: &PrunedTree,
    sigma: &PrunedTree,
    entry_degrees: &[i64],
    ring: CoefficientRing,
) -> Result<LComplex, AcyclicityError> {
    check_pair(tau, sigma)?;
    let labels = entries(tau, entry_degrees)?;
    let mut basis = Vec::new();
    for u in hom_set(tau, sigma)?.iter() {
        basis.extend(piece_basis(u)?);
    }
    let complex = assemble(&basis, &labels, Part::Full, ring)?;
    Ok(LComplex {
        tau: tau.clone(),
        sigma: sigma.clone(),
        entry_degrees: entry_degrees.to_vec(),
        basis,
        complex,
    })
}

/// The summand of `l` with composite `u`.
pub fn split_by_morphism(
    l: &LComplex,
    u: &TreeMorphism,
) -> Result<SplitComplexPiece, AcyclicityError> {
    if u.source() != &l.tau || u.target() != &l.sigma {
        return Err(AcyclicityError::ForeignMorphism(u.key()));
    }
    let basis: Vec<Tensor> = l
        .basis
        .iter()
        .filter(|(v, w)| compose(v, w).is_ok_and(|c| &c == u))
        .cloned()
        .collect();
    let labels = entries(&l.tau, &l.entry_degrees)?;
    let complex = assemble(&basis, &labels, Part::Full, l.complex.ring)?;
    Ok(SplitComplexPiece {
        u: u.clone(),
        entry_degrees: l.entry_degrees.clone(),
        basis,
        complex,
    })
}

/// The piece with composite `u`, built without the surrounding complex.
pub fn piece(
    u: &TreeMorphism,
    entry_degrees: &[i64],
    ring: CoefficientRing,
) -> Result<SplitComplexPiece, AcyclicityError> {
    let labels = entries(u.source(), entry_degrees)?;
    let basis = piece_basis(u)?;
    let complex = assemble(&basis, &labels, Part::Full, ring)?;
    Ok(SplitComplexPiece {
        u: u.clone(),
        entry_degrees: entry_degrees.to_vec(),
        basis,
        complex,
    })
}

/// The piece with only the level-0 merges kept in the differential.
pub fn d0_differential(p: &SplitComplexPiece) -> Result<FreeChainComplex, AcyclicityError> {
    let labels = entries(p.u.source(), &p.entry_degrees)?;
    assemble(&p.basis, &labels, Part::Level0, p.complex.ring)
}

/// Filtration degree of a tensor: the number of vertices above level 0 in
/// the middle object.
pub fn filtration_degree((v, _): &Tensor) -> usize {
    let theta = v.source();
    (1..theta.n()).map(|i| theta.size(i)).sum()
}

/// A signed sum of tensors of one piece.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chain {
    pub degree: i64,
    pub terms: Vec<(Tensor, i64)>,
}

/// Entry degrees of the truncated tree: each level-1 vertex collects its
/// fiber, one suspension per leaf plus the leaf degrees.
pub fn truncated_entry_degrees(tau: &PrunedTree, entry_degrees: &[i64]) -> Vec<i64> {
    (0..tau.size(1))
        .map(|z| {
            tau.children(1, z)
                .map(|x| 1 + entry_degrees[x])
                .sum::<i64>()
        })
        .collect()
}

/// The cycle `Z({v} ⊗ {w})`: the sum over the factorizations `u = v̂ ŵ`
/// covering `tr u = v w` with `ŵ` bijective on leaves, each signed by the
/// Koszul sign of the leaf permutation `ŵ_0` on suspended entries.
pub fn z_cycle(
    v: &TreeMorphism,
    w: &TreeMorphism,
    u: &TreeMorphism,
    entry_degrees: &[i64],
) -> Result<Chain, AcyclicityError> {
    if !is_fiberwise_injective_level0(u) {
        return Err(AcyclicityError::NotFiberInjective(u.key()));
    }
    let tu = truncate_morphism(u)?;
    if compose(v, w).ok().as_ref() != Some(&tu) {
        return Err(AcyclicityError::NotACover(u.key()));
    }
    let labels = entries(u.source(), entry_degrees)?;
    let suspended: Vec<i64> = labels.entry_degrees.iter().map(|d| d + 1).collect();
    let t0 = u.source().size(0);
    let mut terms = Vec::new();
    for (vh, wh) in all_factorizations(u)? {
        if vh.source().size(0) != t0 {
            continue;
        }
        if &truncate_morphism(&vh)? != v || &truncate_morphism(&wh)? != w {
            continue;
        }
        let mut perm = vec![0usize; t0];
        for (e, &d) in wh.map(0).iter().enumerate() {
            perm[d as usize] = e;
        }
        terms.push(((vh, wh), koszul_sign(&perm, &suspended)));
    }
    let degree = v.degree() as i64
        + (t0 - u.target().size(0)) as i64
        + labels.entry_degrees.iter().sum::<i64>();
    Ok(Chain { degree, terms })
}

fn apply(
    chain: &Chain,
    labels: &LabeledTree,
    part: Part,
) -> Result<BTreeMap<Tensor, i64>, AcyclicityError> {
    let mut ones = HashMap::new();
    let mut out: BTreeMap<Tensor, i64> = BTreeMap::new();
    for (t, c) in &chain.terms {
        for (target, a) in differential(t, labels, part, &mut ones)? {
            *out.entry(target).or_default() += c * a;
        }
    }
    out.retain(|_, c| *c != 0);
    Ok(out)
}

/// `d⁰` applied to a chain of the piece over `u`.
pub fn apply_d0(
    chain: &Chain,
    u: &TreeMorphism,
    entry_degrees: &[i64],
) -> Result<BTreeMap<Tensor, i64>, AcyclicityError> {
    apply(chain, &entries(u.source(), entry_degrees)?, Part::Level0)
}

/// Outcome of comparing `H(d⁰)` of a piece with the piece one level down.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct E1Report {
    pub u: String,
    /// `H(d⁰)` ranks of the piece over `u`.
    pub e1: BTreeMap<i64, usize>,
    /// Chain ranks of the truncated piece, shifted by the leaf count of
    /// the target.
    pub truncated: BTreeMap<i64, usize>,
    /// Number of `Z` cycles that failed to be `d⁰`-cycles.
    pub broken_cycles: usize,
    /// `d¹` on the `Z` cycles against the truncated differential.
    pub d1: D1Comparison,
    pub ok: bool,
}

/// Checks the identification of `E¹` of the piece over `u` with the piece
/// over `tr u` one level down, built with the entry degrees of
/// [`truncated_entry_degrees`].
pub fn e1_recursion_check(
    u: &TreeMorphism,
    entry_degrees: &[i64],
    ring: CoefficientRing,
) -> Result<E1Report, AcyclicityError> {
    let tau = u.source();
    if tau.n() < 2 {
        return Err(AcyclicityError::TooShallow);
    }
    if !is_fiberwise_injective_level0(u) {
        return Err(AcyclicityError::NotFiberInjective(u.key()));
    }
    let labels = entries(tau, entry_degrees)?;
    let p = piece(u, entry_degrees, ring)?;
    let d0 = assemble(&p.basis, &labels, Part::Level0, ring)?;
    let e1 = nonzero(homology_ranks(&d0)?);

    let tu = truncate_morphism(u)?;
    let t_degrees = truncated_entry_degrees(tau, entry_degrees);
    let lower = piece(&tu, &t_degrees, ring)?;
    let s0 = u.target().size(0) as i64;
    let truncated: BTreeMap<i64, usize> = lower
        .complex
        .dims()
        .into_iter()
        .filter(|&(_, r)| r > 0)
        .map(|(d, r)| (d - s0, r))
        .collect();

    let mut zs = HashMap::new();
    let mut broken = 0;
    for t in &lower.basis {
        let z = z_cycle(&t.0, &t.1, u, entry_degrees)?;
        if !apply(&z, &labels, Part::Level0)?.is_empty() {
            broken += 1;
        }
        zs.insert(t.clone(), z);
    }
    let d1 = if broken == 0 {
        d1_check(&p, &d0, &labels, &lower, &zs)?
    } else {
        D1Comparison::Mismatch("broken cycles".into())
    };
    let ok = e1 == truncated && broken == 0 && !matches!(d1, D1Comparison::Mismatch(_));
    Ok(E1Report {
        u: u.key(),
        e1,
        truncated,
        broken_cycles: broken,
        d1,
        ok,
    })
}

fn nonzero(m: BTreeMap<i64, usize>) -> BTreeMap<i64, usize> {
    m.into_iter().filter(|&(_, r)| r > 0).collect()
}

/// Prime used to read off `d¹` in the basis of `Z` cycles; the expected
/// coefficients are `0` and `±1`.
const PROBE_PRIME: u64 = 1_000_003;

/// How `d¹` acts on the `Z` cycles compared with the lower differential.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum D1Comparison {
    /// `d¹ Z(t) = c · Z(∂t)` for a single sign `c`.
    Constant(i64),
    /// `t ↦ μ(t) Z(t)` is a chain map for some signs `μ`, not all equal.
    Normalized,
    /// No choice of signs works; the first offending lower tensor.
    Mismatch(String),
}

/// Coefficients of `x` on `zs` modulo the columns of `image`, if `x` lies
/// in their span. Entries are reduced to `-1, 0, 1` when possible.
fn coordinates(
    x: &SparseVec,
    zs: &[SparseVec],
    image: &[SparseVec],
    nrows: usize,
) -> Option<Vec<i64>> {
    let mut cols: Vec<SparseVec> = zs.to_vec();
    cols.push(x.clone());
    cols.extend(image.iter().cloned());
    let m = crate::homalg::SparseMatrix::from_columns(nrows, cols);
    let ring = CoefficientRing::PrimeField(PROBE_PRIME);
    let kernel = kernel_basis(&m, ring).ok()?;
    let k = zs.len();
    let v = kernel.iter().find(|v| v.iter().any(|&(i, _)| i == k))?;
    let at = |i: usize| v.iter().find(|e| e.0 == i).map_or(0, |e| e.1 as u64);
    let inv = |a: u64| {
        let (mut r, mut b, mut e) = (1u64, a % PROBE_PRIME, PROBE_PRIME - 2);
        while e > 0 {
            if e & 1 == 1 {
                r = r * b % PROBE_PRIME;
            }
            b = b * b % PROBE_PRIME;
            e >>= 1;
        }
        r
    };
    let scale = (PROBE_PRIME - inv(at(k))) % PROBE_PRIME;
    Some(
        (0..k)
            .map(|i| {
                let c = at(i) * scale % PROBE_PRIME;
                if c == PROBE_PRIME - 1 {
                    -1
                } else {
                    c as i64
                }
            })
            .collect(),
    )
}

/// Reads `d¹` off the `Z` cycles: the upper part of the differential
/// applied to `Z(t)`, modulo `d⁰` boundaries, is expanded in the `Z`
/// cycles one degree down and compared with the lower differential of `t`.
fn d1_check(
    p: &SplitComplexPiece,
    d0: &FreeChainComplex,
    labels: &LabeledTree,
    lower: &SplitComplexPiece,
    zs: &HashMap<Tensor, Chain>,
) -> Result<D1Comparison, AcyclicityError> {
    let g = Grading::new(&p.basis, labels.entry_degrees.iter().sum());
    let lower_labels = entries(lower.u.source(), &lower.entry_degrees)?;
    let index: HashMap<&Tensor, usize> = lower
        .basis
        .iter()
        .enumerate()
        .map(|(i, t)| (t, i))
        .collect();
    let vector = |terms: &mut dyn Iterator<Item = (&Tensor, i64)>| {
        sparse_from_terms(terms.map(|(tt, c)| (g.place[tt].1, c)))
    };
    let mut by_degree: BTreeMap<i64, Vec<&Tensor>> = BTreeMap::new();
    for t in &lower.basis {
        by_degree.entry(zs[t].degree).or_default().push(t);
    }
    // edges (t, t', ratio) with d¹ Z(t) ∋ ratio · c · Z(t')
    let mut edges: Vec<(usize, usize, i64)> = Vec::new();
    let mut ones = HashMap::new();
    for t in &lower.basis {
        let z = &zs[t];
        let d = z.degree - 1;
        let upper = apply(z, labels, Part::Upper)?;
        let expected: BTreeMap<Tensor, i64> =
            differential(t, &lower_labels, Part::Full, &mut ones)?
                .into_iter()
                .collect();
        let below = by_degree.get(&d).cloned().unwrap_or_default();
        let z_cols: Vec<SparseVec> = below
            .iter()
            .map(|tt| vector(&mut zs[*tt].terms.iter().map(|(x, c)| (x, *c))))
            .collect();
        let x = vector(&mut upper.iter().map(|(x, c)| (x, *c)));
        let image = d0.boundary(d + 1);
        let Some(coords) = coordinates(&x, &z_cols, &image.cols, d0.dim(d)) else {
            return Ok(D1Comparison::Mismatch(tensor_label(t)));
        };
        for (tt, lambda) in below.iter().zip(coords) {
            let c = expected.get(*tt).copied().unwrap_or(0);
            match (lambda, c) {
                (0, 0) => {}
                (l, c) if l.abs() == 1 && c.abs() == 1 => {
                    edges.push((index[t], index[*tt], l * c));
                }
                _ => return Ok(D1Comparison::Mismatch(tensor_label(t))),
            }
        }
    }
    if let Some(&(_, _, first)) = edges.first() {
        if edges.iter().all(|e| e.2 == first) {
            return Ok(D1Comparison::Constant(first));
        }
    } else {
        return Ok(D1Comparison::Constant(1));
    }
    // two-colour the graph: μ(t) μ(t') = ratio, up to a global constant c
    for c in [1, -1] {
        if signs_consistent(lower.basis.len(), &edges, c) {
            return Ok(D1Comparison::Normalized);
        }
    }
    Ok(D1Comparison::Mismatch("no sign normalization".into()))
}

fn signs_consistent(n: usize, edges: &[(usize, usize, i64)], c: i64) -> bool {
    let mut adj: Vec<Vec<(usize, i64)>> = vec![Vec::new(); n];
    for &(a, b, r) in edges {
        adj[a].push((b, r * c));
        adj[b].push((a, r * c));
    }
    let mut mu = vec![0i64; n];
    for s in 0..n {
        if mu[s] != 0 {
            continue;
        }
        mu[s] = 1;
        let mut stack = vec![s];
        while let Some(a) = stack.pop() {
            for &(b, r) in &adj[a] {
                let want = mu[a] * r;
                if mu[b] == 0 {
                    mu[b] = want;
                    stack.push(b);
                } else if mu[b] != want {
                    return false;
                }
            }
        }
    }
    true
}

/// Truncations of both trees, as used by the recursion.
pub fn truncated_pair(
    tau: &PrunedTree,
    sigma: &PrunedTree,
) -> Result<(PrunedTree, PrunedTree), AcyclicityError> {
    Ok((truncate_tree(tau)?, truncate_tree(sigma)?))
}

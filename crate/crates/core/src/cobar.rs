//! Cobar constructions on the Koszul cocategory `K(Ω)` and on the bar
//! cocategory `B(Ω)`, materialized one hom-complex at a time.
//!
//! A word `g_1 ⋯ g_m` is a composable sequence of non-identity letters,
//! `g_m` applied first, in degree `Σ (deg g_i - 1)`. The differential is the
//! derivation extending, on one desuspended letter,
//!
//! * Koszul: `∂{u} = Σ_{u = v w, v, w ≠ id} (-1)^{deg v} {v}{w}`,
//! * bar: `∂[c] = -[δc] + Σ_{k} (-1)^k [c_1..c_k][c_{k+1}..c_d]`.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::barkoszul::{iota, BarBuilder, BarChain, BarError};
use crate::homalg::{
    homology_ranks, is_quasi_iso, sparse_from_terms, CoefficientRing, ComplexMap, FreeChainComplex,
    HomalgError, SparseMatrix, SparseVec,
};
use crate::morphisms::{
    all_factorizations, compose, hom_set, targets_from, MorphismError, TreeMorphism,
    DEFAULT_HOM_CAP,
};
use crate::signs::sgn;
use crate::trees::PrunedTree;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CobarError {
    #[error(transparent)]
    Morphism(#[from] MorphismError),
    #[error(transparent)]
    Bar(#[from] BarError),
    #[error(transparent)]
    Homalg(#[from] HomalgError),
    #[error("more than {0} cobar words")]
    CapExceeded(usize),
    #[error("trees have {0} and {1} levels")]
    LevelMismatch(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CobarKind {
    Koszul,
    Bar,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    Koszul(TreeMorphism),
    Bar(BarChain),
}

impl Letter {
    pub fn degree(&self) -> usize {
        match self {
            Letter::Koszul(u) => u.degree(),
            Letter::Bar(c) => c.degree(),
        }
    }

    fn label(&self) -> String {
        match self {
            Letter::Koszul(u) => format!("{{{}}}", u.key()),
            Letter::Bar(c) => c.label(),
        }
    }
}

/// `letters[0]` is applied last.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CobarWord {
    pub source: PrunedTree,
    pub target: PrunedTree,
    pub letters: Vec<Letter>,
}

impl CobarWord {
    pub fn degree(&self) -> i64 {
        self.letters.iter().map(|g| g.degree() as i64 - 1).sum()
    }

    pub fn label(&self) -> String {
        if self.letters.is_empty() {
            return format!("1@{}", self.source);
        }
        self.letters.iter().map(Letter::label).collect()
    }

    fn with(&self, letters: Vec<Letter>) -> Self {
        CobarWord {
            source: self.source.clone(),
            target: self.target.clone(),
            letters,
        }
    }
}

/// One hom-complex `B^c(Γ)(τ, σ)` with its basis of words.
#[derive(Debug, Clone)]
pub struct CobarComplex {
    pub kind: CobarKind,
    pub tau: PrunedTree,
    pub sigma: PrunedTree,
    pub words: Vec<CobarWord>,
    pub complex: FreeChainComplex,
    place: HashMap<CobarWord, (i64, usize)>,
}

impl CobarComplex {
    /// Degree and position of a word in the complex.
    pub fn position(&self, w: &CobarWord) -> Option<(i64, usize)> {
        self.place.get(w).copied()
    }
}

struct Letters {
    kind: CobarKind,
    bar: BarBuilder,
    cap: usize,
}

impl Letters {
    fn between(&mut self, x: &PrunedTree, y: &PrunedTree) -> Result<Vec<Letter>, CobarError> {
        let mut out = Vec::new();
        for u in hom_set(x, y)?.iter() {
            match self.kind {
                CobarKind::Koszul => out.push(Letter::Koszul(u.clone())),
                CobarKind::Bar => {
                    for c in self.bar.chains(u)?.iter() {
                        out.push(Letter::Bar(BarChain::from_maps(c.clone())));
                    }
                }
            }
            if out.len() > self.cap {
                return Err(CobarError::CapExceeded(self.cap));
            }
        }
        Ok(out)
    }
}

fn parity(k: i64) -> i64 {
    if k & 1 == 0 {
        1
    } else {
        -1
    }
}

/// The words from `x` to `sigma`, letters listed last-applied first.
fn words_from(
    x: &PrunedTree,
    sigma: &PrunedTree,
    letters: &mut Letters,
    memo: &mut HashMap<PrunedTree, Vec<Vec<Letter>>>,
) -> Result<Vec<Vec<Letter>>, CobarError> {
    if let Some(hit) = memo.get(x) {
        return Ok(hit.clone());
    }
    let mut out = Vec::new();
    if x == sigma {
        out.push(Vec::new());
    } else {
        for theta in targets_from(x) {
            if &theta == x || theta.degree() < sigma.degree() || hom_set(&theta, sigma)?.is_empty()
            {
                continue;
            }
            let tails = words_from(&theta, sigma, letters, memo)?;
            for g in letters.between(x, &theta)? {
                for t in &tails {
                    let mut w = t.clone();
                    w.push(g.clone());
                    out.push(w);
                }
                if out.len() > letters.cap {
                    return Err(CobarError::CapExceeded(letters.cap));
                }
            }
        }
    }
    memo.insert(x.clone(), out.clone());
    Ok(out)
}

/// The differential of one desuspended letter, as signed replacement
/// sequences.
fn letter_differential(g: &Letter) -> Result<Vec<(Vec<Letter>, i64)>, CobarError> {
    let mut out = Vec::new();
    match g {
        Letter::Koszul(u) => {
            for (v, w) in all_factorizations(u)? {
                if v.is_identity() || w.is_identity() {
                    continue;
                }
                let s = parity(v.degree() as i64);
                out.push((vec![Letter::Koszul(v), Letter::Koszul(w)], s));
            }
        }
        Letter::Bar(c) => {
            for (b, s) in c.boundary() {
                out.push((vec![Letter::Bar(b)], -s));
            }
            for k in 1..c.degree() {
                let left = BarChain::from_maps(c.maps[..k].to_vec());
                let right = BarChain::from_maps(c.maps[k..].to_vec());
                out.push((
                    vec![Letter::Bar(left), Letter::Bar(right)],
                    parity(k as i64),
                ));
            }
        }
    }
    Ok(out)
}

/// `∂` of a word, extended from letters as a derivation.
pub fn word_differential(w: &CobarWord) -> Result<Vec<(CobarWord, i64)>, CobarError> {
    let mut out = Vec::new();
    let mut before = 0i64;
    for (i, g) in w.letters.iter().enumerate() {
        for (rep, s) in letter_differential(g)? {
            let mut letters = w.letters[..i].to_vec();
            letters.extend(rep);
            letters.extend_from_slice(&w.letters[i + 1..]);
            out.push((w.with(letters), parity(before) * s));
        }
        before += g.degree() as i64 - 1;
    }
    Ok(out)
}

/// `B^c(K(Ω))(τ, σ)` or `B^c(B(Ω))(τ, σ)` over `ring`. `cap` bounds the
/// number of letters and words.
pub fn cobar_hom_complex(
    kind: CobarKind,
    tau: &PrunedTree,
    sigma: &PrunedTree,
    ring: CoefficientRing,
    cap: usize,
) -> Result<CobarComplex, CobarError> {
    if tau.n() != sigma.n() {
        return Err(CobarError::LevelMismatch(tau.n(), sigma.n()));
    }
    let mut letters = Letters {
        kind,
        bar: BarBuilder::new(cap),
        cap,
    };
    let raw = if hom_set(tau, sigma)?.is_empty() {
        Vec::new()
    } else {
        words_from(tau, sigma, &mut letters, &mut HashMap::new())?
    };
    let words: Vec<CobarWord> = raw
        .into_iter()
        .map(|letters| CobarWord {
            source: tau.clone(),
            target: sigma.clone(),
            letters,
        })
        .collect();
    let mut place = HashMap::with_capacity(words.len());
    let mut members: BTreeMap<i64, Vec<&CobarWord>> = BTreeMap::new();
    for w in &words {
        let slot = members.entry(w.degree()).or_default();
        place.insert(w.clone(), (w.degree(), slot.len()));
        slot.push(w);
    }
    let mut labels = BTreeMap::new();
    let mut columns: BTreeMap<i64, Vec<SparseVec>> = BTreeMap::new();
    for (&d, ws) in &members {
        labels.insert(d, ws.iter().map(|w| w.label()).collect());
        let mut cols = Vec::with_capacity(ws.len());
        for w in ws {
            let terms = word_differential(w)?
                .into_iter()
                .map(|(x, s)| (place[&x].1, s));
            cols.push(sparse_from_terms(terms));
        }
        columns.insert(d, cols);
    }
    Ok(CobarComplex {
        kind,
        tau: tau.clone(),
        sigma: sigma.clone(),
        words,
        complex: FreeChainComplex::from_graded(ring, labels, columns),
        place,
    })
}

/// The product of the letterwise augmentations, `None` when it vanishes.
/// Koszul letters of degree one map to `sgn(u) u`; bar letters of length
/// one map to their morphism.
pub fn augmentation(w: &CobarWord) -> Option<(TreeMorphism, i64)> {
    let mut acc = TreeMorphism::identity(&w.source);
    let mut coeff = 1;
    for g in w.letters.iter().rev() {
        let u = match g {
            Letter::Koszul(u) if u.degree() == 1 => {
                coeff *= sgn(u);
                u
            }
            Letter::Bar(c) if c.degree() == 1 => &c.maps[0],
            _ => return None,
        };
        acc = compose(u, &acc).expect("word is composable");
    }
    Some((acc, coeff))
}

/// `Ω(τ, σ)` as a complex concentrated in degree 0.
pub fn hom_complex(
    tau: &PrunedTree,
    sigma: &PrunedTree,
    ring: CoefficientRing,
) -> Result<(FreeChainComplex, Vec<TreeMorphism>), CobarError> {
    let homs: Vec<TreeMorphism> = hom_set(tau, sigma)?.iter().cloned().collect();
    let mut labels = BTreeMap::new();
    labels.insert(0, homs.iter().map(TreeMorphism::key).collect());
    let mut columns = BTreeMap::new();
    columns.insert(0, vec![Vec::new(); homs.len()]);
    Ok((FreeChainComplex::from_graded(ring, labels, columns), homs))
}

/// `ε: B^c(Γ)(τ, σ) -> Ω(τ, σ)` as a chain map.
pub fn augmentation_map(c: &CobarComplex) -> Result<ComplexMap, CobarError> {
    let (target, homs) = hom_complex(&c.tau, &c.sigma, c.complex.ring)?;
    let index: HashMap<&TreeMorphism, usize> =
        homs.iter().enumerate().map(|(i, u)| (u, i)).collect();
    let mut cols: Vec<SparseVec> = vec![Vec::new(); c.complex.dim(0)];
    for w in &c.words {
        if w.degree() != 0 {
            continue;
        }
        if let Some((u, s)) = augmentation(w) {
            cols[c.place[w].1] = vec![(index[&u], s)];
        }
    }
    let mut maps = BTreeMap::new();
    maps.insert(0, SparseMatrix::from_columns(homs.len(), cols));
    Ok(ComplexMap {
        domain: c.complex.clone(),
        codomain: target,
        maps,
    })
}

/// `B^c(ι): B^c(K(Ω))(τ, σ) -> B^c(B(Ω))(τ, σ)`, multiplicative on words.
pub fn cobar_iota_map(koszul: &CobarComplex, bar: &CobarComplex) -> Result<ComplexMap, CobarError> {
    let mut images: HashMap<TreeMorphism, Vec<(BarChain, i64)>> = HashMap::new();
    let mut columns: BTreeMap<i64, Vec<SparseVec>> = BTreeMap::new();
    for d in koszul.complex.degrees() {
        columns.insert(d, vec![Vec::new(); koszul.complex.dim(d)]);
    }
    for w in &koszul.words {
        let mut terms: Vec<(Vec<Letter>, i64)> = vec![(Vec::new(), 1)];
        for g in &w.letters {
            let Letter::Koszul(u) = g else {
                unreachable!("Koszul word")
            };
            if !images.contains_key(u) {
                images.insert(u.clone(), iota(u)?);
            }
            let img = &images[u];
            let mut next = Vec::with_capacity(terms.len() * img.len());
            for (prefix, a) in &terms {
                for (chain, b) in img {
                    let mut p = prefix.clone();
                    p.push(Letter::Bar(chain.clone()));
                    next.push((p, a * b));
                }
            }
            terms = next;
        }
        let (d, pos) = koszul.place[w];
        let col = sparse_from_terms(terms.into_iter().map(|(letters, s)| {
            let (_, at) = bar.place[&w.with(letters)];
            (at, s)
        }));
        columns.get_mut(&d).expect("degree present")[pos] = col;
    }
    let maps = columns
        .into_iter()
        .map(|(d, cols)| (d, SparseMatrix::from_columns(bar.complex.dim(d), cols)))
        .collect();
    Ok(ComplexMap {
        domain: koszul.complex.clone(),
        codomain: bar.complex.clone(),
        maps,
    })
}

/// Outcome of the minimal-model check on one pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MinimalModelReport {
    pub tau: String,
    pub sigma: String,
    pub words: usize,
    pub homology: BTreeMap<i64, usize>,
    pub hom_count: usize,
    pub chain_map: bool,
    pub quasi_iso: bool,
    /// The differential of every one-letter word has only longer words.
    pub decomposable: bool,
    pub ok: bool,
}

/// Checks that `ε: B^c(K(Ω))(τ, σ) -> Ω(τ, σ)` is a quasi-isomorphism and
/// that the differential is decomposable.
pub fn verify_minimal_model(
    tau: &PrunedTree,
    sigma: &PrunedTree,
    ring: CoefficientRing,
) -> Result<MinimalModelReport, CobarError> {
    let c = cobar_hom_complex(CobarKind::Koszul, tau, sigma, ring, DEFAULT_HOM_CAP)?;
    let homology: BTreeMap<i64, usize> = homology_ranks(&c.complex)?
        .into_iter()
        .filter(|&(_, r)| r > 0)
        .collect();
    let eps = augmentation_map(&c)?;
    let chain_map = eps.verify().is_ok();
    let quasi_iso = chain_map && is_quasi_iso(&eps)?;
    let mut decomposable = true;
    for w in c.words.iter().filter(|w| w.letters.len() == 1) {
        if word_differential(w)?
            .iter()
            .any(|(x, _)| x.letters.len() < 2)
        {
            decomposable = false;
        }
    }
    let hom_count = hom_set(tau, sigma)?.len();
    let expected: BTreeMap<i64, usize> = if hom_count > 0 {
        [(0, hom_count)].into()
    } else {
        BTreeMap::new()
    };
    let ok = chain_map && quasi_iso && decomposable && homology == expected;
    Ok(MinimalModelReport {
        tau: tau.encode(),
        sigma: sigma.encode(),
        words: c.words.len(),
        homology,
        hom_count,
        chain_map,
        quasi_iso,
        decomposable,
        ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homalg::{nonzero_homology, verify_complex};
    use crate::trees::enumerate_trees;

    const Q: CoefficientRing = CoefficientRing::Rationals;

    fn c(r: usize) -> PrunedTree {
        PrunedTree::corolla(r)
    }

    #[test]
    fn endomorphisms_are_the_unit() {
        let t = PrunedTree::new(vec![vec![1, 1, 2], vec![1, 1]]).unwrap();
        let k = cobar_hom_complex(CobarKind::Koszul, &t, &t, Q, 100).unwrap();
        assert_eq!(k.complex.dims(), [(0, 1)].into());
        assert_eq!(
            augmentation(&k.words[0]),
            Some((TreeMorphism::identity(&t), 1))
        );
    }

    #[test]
    fn corolla_three_to_one() {
        let k = cobar_hom_complex(CobarKind::Koszul, &c(3), &c(1), Q, 100).unwrap();
        assert_eq!(k.complex.dims(), [(0, 2), (1, 1)].into());
        assert_eq!(nonzero_homology(&k.complex).unwrap(), [(0, 1)].into());
    }

    #[test]
    fn augmentation_rules() {
        let ones = crate::morphisms::degree_one_from(&c(3));
        let v = crate::morphisms::degree_one_from(&c(2)).remove(0);
        let w = CobarWord {
            source: c(3),
            target: c(1),
            letters: vec![Letter::Koszul(v.clone()), Letter::Koszul(ones[0].clone())],
        };
        let (u, s) = augmentation(&w).unwrap();
        assert_eq!(u, compose(&v, &ones[0]).unwrap());
        assert_eq!(s, sgn(&v) * sgn(&ones[0]));
        let top = hom_set(&c(3), &c(1)).unwrap()[0].clone();
        let long = CobarWord {
            source: c(3),
            target: c(1),
            letters: vec![Letter::Koszul(top)],
        };
        assert_eq!(augmentation(&long), None);
    }

    #[test]
    fn squares_to_zero() {
        for kind in [CobarKind::Koszul, CobarKind::Bar] {
            for tau in enumerate_trees(2, 3).unwrap() {
                let k = cobar_hom_complex(
                    kind,
                    &tau,
                    &PrunedTree::trunk(2),
                    CoefficientRing::Integers,
                    10_000,
                )
                .unwrap();
                verify_complex(&k.complex).unwrap();
            }
        }
    }

    #[test]
    fn minimal_model_small() {
        for n in 1..=2 {
            let trees = enumerate_trees(n, 3).unwrap();
            for tau in &trees {
                for sigma in &trees {
                    let r = verify_minimal_model(tau, sigma, Q).unwrap();
                    assert!(r.ok, "{r:?}");
                }
            }
        }
    }

    #[test]
    fn bar_instance_and_comparison() {
        let b = cobar_hom_complex(CobarKind::Bar, &c(2), &c(1), Q, 100).unwrap();
        assert!(is_quasi_iso(&augmentation_map(&b).unwrap()).unwrap());
        let (tau, sigma) = (c(4), c(2));
        let k = cobar_hom_complex(CobarKind::Koszul, &tau, &sigma, Q, 1000).unwrap();
        let b = cobar_hom_complex(CobarKind::Bar, &tau, &sigma, Q, 1000).unwrap();
        assert!(b.words.len() > k.words.len());
        let f = cobar_iota_map(&k, &b).unwrap();
        f.verify().unwrap();
        assert!(is_quasi_iso(&f).unwrap());
    }

    #[test]
    fn caps_are_enforced() {
        let tau = PrunedTree::parse("2:[1,2,3,4];[1,1,1,1]").unwrap();
        let err =
            cobar_hom_complex(CobarKind::Bar, &tau, &PrunedTree::trunk(2), Q, 50).unwrap_err();
        assert!(matches!(
            err,
            CobarError::CapExceeded(_) | CobarError::Bar(BarError::CapExceeded(_))
        ));
    }
}

//! Bar and Koszul constructions of the tree category, the embedding of the
//! latter in the former, their diagonals, and the quadratic relations.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::homalg::{
    homology_ranks, sparse_from_terms, CoefficientRing, ComplexMap, FreeChainComplex, HomalgError,
    SparseMatrix, SparseVec,
};
use crate::morphisms::{
    all_degree1_chains, all_factorizations, compose, hom_set, left_factor, targets_from,
    MorphismError, TreeMorphism, DEFAULT_HOM_CAP,
};
use crate::signs::{chain_sign_with, SignConvention};
use crate::trees::{LabeledTree, PrunedTree};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BarError {
    #[error(transparent)]
    Morphism(#[from] MorphismError),
    #[error("chain enumeration exceeded the cap of {0}")]
    CapExceeded(usize),
    #[error("degree-two morphism {0} fits no configuration")]
    ClassificationFailure(String),
    #[error(transparent)]
    Homalg(#[from] HomalgError),
}

/// A composable chain `u_1 ∘ ... ∘ u_d` from `source` to `target` of
/// non-identity morphisms; `maps[0]` is `u_1`, the last one applied.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BarChain {
    pub source: PrunedTree,
    pub target: PrunedTree,
    pub maps: Vec<TreeMorphism>,
}

impl BarChain {
    pub fn unit(tree: &PrunedTree) -> Self {
        BarChain {
            source: tree.clone(),
            target: tree.clone(),
            maps: Vec::new(),
        }
    }

    pub fn from_maps(maps: Vec<TreeMorphism>) -> Self {
        assert!(!maps.is_empty());
        BarChain {
            source: maps.last().unwrap().source().clone(),
            target: maps[0].target().clone(),
            maps,
        }
    }

    pub fn degree(&self) -> usize {
        self.maps.len()
    }

    pub fn composite(&self) -> TreeMorphism {
        let mut it = self.maps.iter();
        match it.next() {
            None => TreeMorphism::identity(&self.source),
            Some(first) => it.fold(first.clone(), |acc, w| {
                compose(&acc, w).expect("chain is composable")
            }),
        }
    }

    /// `[key_1 | ... | key_d]`, or `[]` at the object for the unit.
    pub fn label(&self) -> String {
        if self.maps.is_empty() {
            return format!("[]@{}", self.source);
        }
        let keys: Vec<String> = self.maps.iter().map(TreeMorphism::key).collect();
        format!("[{}]", keys.join(" | "))
    }

    /// `Σ_{i=1}^{d-1} (-1)^i [.. | u_i u_{i+1} | ..]`.
    pub fn boundary(&self) -> Vec<(BarChain, i64)> {
        let d = self.maps.len();
        (1..d)
            .map(|i| {
                let mut maps = self.maps[..i - 1].to_vec();
                maps.push(compose(&self.maps[i - 1], &self.maps[i]).expect("composable"));
                maps.extend_from_slice(&self.maps[i + 1..]);
                (
                    BarChain {
                        source: self.source.clone(),
                        target: self.target.clone(),
                        maps,
                    },
                    if i % 2 == 0 { 1 } else { -1 },
                )
            })
            .collect()
    }
}

/// Shared memo tables for chain enumeration.
pub struct BarBuilder {
    cap: usize,
    targets: HashMap<PrunedTree, Arc<Vec<PrunedTree>>>,
    factors: HashMap<TreeMorphism, Arc<Vec<(TreeMorphism, TreeMorphism)>>>,
    chains: HashMap<TreeMorphism, Arc<Vec<Vec<TreeMorphism>>>>,
}

impl Default for BarBuilder {
    fn default() -> Self {
        Self::new(DEFAULT_HOM_CAP)
    }
}

impl BarBuilder {
    pub fn new(cap: usize) -> Self {
        BarBuilder {
            cap,
            targets: HashMap::new(),
            factors: HashMap::new(),
            chains: HashMap::new(),
        }
    }

    fn targets(&mut self, tau: &PrunedTree) -> Arc<Vec<PrunedTree>> {
        self.targets
            .entry(tau.clone())
            .or_insert_with(|| Arc::new(targets_from(tau)))
            .clone()
    }

    /// All `(v, w)` with `v ∘ w = u` and `w` not an identity.
    pub fn right_factors(
        &mut self,
        u: &TreeMorphism,
    ) -> Result<Arc<Vec<(TreeMorphism, TreeMorphism)>>, BarError> {
        if let Some(hit) = self.factors.get(u) {
            return Ok(hit.clone());
        }
        let tau = u.source();
        let mut out = Vec::new();
        for theta in self.targets(tau).iter() {
            if theta == tau || theta.degree() < u.target().degree() {
                continue;
            }
            for w in hom_set(tau, theta)?.iter() {
                if let Some(v) = left_factor(u, w) {
                    out.push((v, w.clone()));
                }
            }
        }
        let out = Arc::new(out);
        self.factors.insert(u.clone(), out.clone());
        Ok(out)
    }

    /// All non-degenerate chains with composite `u`.
    pub fn chains(&mut self, u: &TreeMorphism) -> Result<Arc<Vec<Vec<TreeMorphism>>>, BarError> {
        if let Some(hit) = self.chains.get(u) {
            return Ok(hit.clone());
        }
        let mut out: Vec<Vec<TreeMorphism>> = Vec::new();
        if u.is_identity() {
            out.push(Vec::new());
        } else {
            for (v, w) in self.right_factors(u)?.iter() {
                for c in self.chains(v)?.iter() {
                    let mut c = c.clone();
                    c.push(w.clone());
                    out.push(c);
                    if out.len() > self.cap {
                        return Err(BarError::CapExceeded(self.cap));
                    }
                }
            }
            out.sort_by_cached_key(|c| c.iter().map(TreeMorphism::key).collect::<Vec<_>>());
        }
        let out = Arc::new(out);
        self.chains.insert(u.clone(), out.clone());
        Ok(out)
    }

    /// The summand of the bar complex spanned by chains composing to `u`.
    pub fn bar_block(
        &mut self,
        u: &TreeMorphism,
        ring: CoefficientRing,
    ) -> Result<FreeChainComplex, BarError> {
        let chains = self.chains(u)?;
        Ok(assemble_bar(
            u.source(),
            u.target(),
            chains.iter().cloned(),
            ring,
        ))
    }

    pub fn bar_complex(
        &mut self,
        tau: &PrunedTree,
        sigma: &PrunedTree,
        ring: CoefficientRing,
    ) -> Result<FreeChainComplex, BarError> {
        let mut all = Vec::new();
        for u in hom_set(tau, sigma)?.iter() {
            all.extend(self.chains(u)?.iter().cloned());
            if all.len() > self.cap {
                return Err(BarError::CapExceeded(self.cap));
            }
        }
        Ok(assemble_bar(tau, sigma, all.into_iter(), ring))
    }

    /// The reduced order complex of the open interval below `u` in the
    /// comma poset, shifted so that a chain of `k` elements sits in degree
    /// `k + 1`.
    pub fn nerve_block(
        &mut self,
        u: &TreeMorphism,
        ring: CoefficientRing,
    ) -> Result<FreeChainComplex, BarError> {
        if u.is_identity() {
            let labels = BTreeMap::from([(0, vec!["<>".to_string()])]);
            return Ok(FreeChainComplex::from_graded(ring, labels, BTreeMap::new()));
        }
        let elements: Vec<TreeMorphism> = self
            .right_factors(u)?
            .iter()
            .filter(|(v, _)| !v.is_identity())
            .map(|(_, w)| w.clone())
            .collect();
        // above[i] lists j with elements[i] < elements[j]
        let m = elements.len();
        let mut above: Vec<Vec<usize>> = vec![Vec::new(); m];
        for i in 0..m {
            for j in 0..m {
                if i != j
                    && elements[j].target().degree() < elements[i].target().degree()
                    && left_factor(&elements[j], &elements[i]).is_some()
                {
                    above[i].push(j);
                }
            }
        }
        // strict chains, listed from the element nearest `tau`
        let mut simplices: Vec<Vec<usize>> = vec![Vec::new()];
        let mut frontier: Vec<Vec<usize>> = (0..m).map(|i| vec![i]).collect();
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for s in &frontier {
                for &j in &above[*s.last().unwrap()] {
                    let mut t = s.clone();
                    t.push(j);
                    next.push(t);
                }
            }
            simplices.append(&mut frontier);
            if simplices.len() > self.cap {
                return Err(BarError::CapExceeded(self.cap));
            }
            frontier = next;
        }
        let label = |s: &[usize]| {
            let keys: Vec<String> = s.iter().map(|&i| elements[i].key()).collect();
            format!("<{}>", keys.join(" < "))
        };
        let mut by_degree: BTreeMap<i64, Vec<Vec<usize>>> = BTreeMap::new();
        for s in simplices {
            by_degree.entry(s.len() as i64 + 1).or_default().push(s);
        }
        for list in by_degree.values_mut() {
            list.sort_by_cached_key(|s| label(s));
        }
        let mut labels = BTreeMap::new();
        let mut columns = BTreeMap::new();
        for (&deg, list) in &by_degree {
            let index: HashMap<&Vec<usize>, usize> = by_degree
                .get(&(deg - 1))
                .map(|l| l.iter().enumerate().map(|(i, s)| (s, i)).collect())
                .unwrap_or_default();
            let cols: Vec<SparseVec> = list
                .iter()
                .map(|s| {
                    // removing the i-th element counted from the `sigma` side
                    let k = s.len();
                    sparse_from_terms((0..k).map(|pos| {
                        let i = k - pos;
                        let mut face = s.clone();
                        face.remove(pos);
                        (index[&face], if i % 2 == 0 { 1 } else { -1 })
                    }))
                })
                .collect();
            labels.insert(deg, list.iter().map(|s| label(s)).collect());
            columns.insert(deg, cols);
        }
        Ok(FreeChainComplex::from_graded(ring, labels, columns))
    }

    /// Direct sum of [`BarBuilder::nerve_block`] over all morphisms.
    pub fn nerve_complex(
        &mut self,
        tau: &PrunedTree,
        sigma: &PrunedTree,
        ring: CoefficientRing,
    ) -> Result<FreeChainComplex, BarError> {
        let blocks = hom_set(tau, sigma)?
            .iter()
            .map(|u| self.nerve_block(u, ring))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(direct_sum(&blocks, ring))
    }
}

/// Direct sum of complexes, labels kept.
pub fn direct_sum(parts: &[FreeChainComplex], ring: CoefficientRing) -> FreeChainComplex {
    let mut labels: BTreeMap<i64, Vec<String>> = BTreeMap::new();
    let mut columns: BTreeMap<i64, Vec<SparseVec>> = BTreeMap::new();
    for c in parts {
        let offsets: HashMap<i64, usize> = labels.iter().map(|(&k, l)| (k, l.len())).collect();
        for k in c.degrees() {
            let offset = offsets.get(&(k - 1)).copied().unwrap_or(0);
            let d = c.boundary(k);
            let l = labels.entry(k).or_default();
            let cols = columns.entry(k).or_default();
            l.extend(c.labels[(k - c.lo) as usize].iter().cloned());
            cols.extend(
                d.cols
                    .iter()
                    .map(|col| col.iter().map(|&(i, x)| (i + offset, x)).collect()),
            );
        }
    }
    FreeChainComplex::from_graded(ring, labels, columns)
}

fn assemble_bar(
    tau: &PrunedTree,
    sigma: &PrunedTree,
    chains: impl Iterator<Item = Vec<TreeMorphism>>,
    ring: CoefficientRing,
) -> FreeChainComplex {
    let mut by_degree: BTreeMap<i64, Vec<(Vec<String>, BarChain)>> = BTreeMap::new();
    for maps in chains {
        let chain = BarChain {
            source: tau.clone(),
            target: sigma.clone(),
            maps,
        };
        let keys = chain.maps.iter().map(TreeMorphism::key).collect();
        by_degree
            .entry(chain.degree() as i64)
            .or_default()
            .push((keys, chain));
    }
    for list in by_degree.values_mut() {
        list.sort_by(|a, b| a.0.cmp(&b.0));
    }
    let mut labels = BTreeMap::new();
    let mut columns = BTreeMap::new();
    for (&deg, list) in &by_degree {
        let index: HashMap<&BarChain, usize> = by_degree
            .get(&(deg - 1))
            .map(|l| l.iter().enumerate().map(|(i, (_, c))| (c, i)).collect())
            .unwrap_or_default();
        let cols = list
            .iter()
            .map(|(_, c)| sparse_from_terms(c.boundary().into_iter().map(|(f, s)| (index[&f], s))))
            .collect();
        labels.insert(deg, list.iter().map(|(_, c)| c.label()).collect());
        columns.insert(deg, cols);
    }
    FreeChainComplex::from_graded(ring, labels, columns)
}

/// The normalized bar complex `B(Ω)(τ, σ)`; for `τ = σ` the unit in degree 0.
pub fn bar_complex(
    tau: &PrunedTree,
    sigma: &PrunedTree,
    ring: CoefficientRing,
) -> Result<FreeChainComplex, BarError> {
    BarBuilder::default().bar_complex(tau, sigma, ring)
}

/// Chain complex of the interval nerves, identical in homology to the bar
/// complex.
pub fn nerve_complex(
    tau: &PrunedTree,
    sigma: &PrunedTree,
    ring: CoefficientRing,
) -> Result<FreeChainComplex, BarError> {
    BarBuilder::default().nerve_complex(tau, sigma, ring)
}

/// One generator `{u}` per morphism, in degree `deg u`, zero differential.
pub fn koszul_complex_pair(
    tau: &PrunedTree,
    sigma: &PrunedTree,
    ring: CoefficientRing,
) -> Result<FreeChainComplex, BarError> {
    let mut labels: BTreeMap<i64, Vec<String>> = BTreeMap::new();
    for u in hom_set(tau, sigma)?.iter() {
        labels
            .entry(u.degree() as i64)
            .or_default()
            .push(format!("{{{}}}", u.key()));
    }
    Ok(FreeChainComplex::from_graded(ring, labels, BTreeMap::new()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KoszulityReport {
    pub tau: String,
    pub sigma: String,
    pub ring: CoefficientRing,
    pub homology: BTreeMap<i64, usize>,
    pub hom_count: usize,
    pub ok: bool,
}

/// Homology of `B(Ω)(τ, σ)`: Koszulity asks for `|Mor(τ, σ)|` in degree
/// `deg τ - deg σ` and nothing else.
pub fn koszulity_check(
    tau: &PrunedTree,
    sigma: &PrunedTree,
    ring: CoefficientRing,
) -> Result<KoszulityReport, BarError> {
    let homology: BTreeMap<i64, usize> = homology_ranks(&bar_complex(tau, sigma, ring)?)?
        .into_iter()
        .filter(|&(_, r)| r > 0)
        .collect();
    let hom_count = hom_set(tau, sigma)?.len();
    let top = tau.degree() as i64 - sigma.degree() as i64;
    let expected: BTreeMap<i64, usize> = (hom_count > 0)
        .then_some((top, hom_count))
        .into_iter()
        .collect();
    Ok(KoszulityReport {
        tau: tau.encode(),
        sigma: sigma.encode(),
        ring,
        ok: homology == expected,
        homology,
        hom_count,
    })
}

/// `ι{u}`: the signed sum of the maximal degree-one chains of `u`.
pub fn iota(u: &TreeMorphism) -> Result<Vec<(BarChain, i64)>, BarError> {
    iota_with(u, SignConvention::Full)
}

pub fn iota_with(
    u: &TreeMorphism,
    convention: SignConvention,
) -> Result<Vec<(BarChain, i64)>, BarError> {
    if u.is_identity() {
        return Ok(vec![(BarChain::unit(u.source()), 1)]);
    }
    let labels = LabeledTree::with_leaf_entries(u.source().clone());
    all_degree1_chains(u)?
        .into_iter()
        .map(|c| {
            let s = chain_sign_with(&c, &labels, convention).expect("degree-one chain");
            Ok((BarChain::from_maps(c), s))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IotaWitness {
    pub morphism: String,
    pub chain: String,
    pub coefficient: i64,
}

/// Checks `∂ ι{u} = 0` over the integers for every `u: τ -> σ`.
pub fn verify_iota_cycle(tau: &PrunedTree, sigma: &PrunedTree) -> Result<(), IotaWitness> {
    verify_iota_cycle_with(tau, sigma, SignConvention::Full)
}

pub fn verify_iota_cycle_with(
    tau: &PrunedTree,
    sigma: &PrunedTree,
    convention: SignConvention,
) -> Result<(), IotaWitness> {
    let homs = hom_set(tau, sigma).expect("hom-set within cap");
    for u in homs.iter() {
        let mut acc: HashMap<BarChain, i64> = HashMap::new();
        for (c, s) in iota_with(u, convention).expect("chains within cap") {
            for (f, t) in c.boundary() {
                *acc.entry(f).or_insert(0) += s * t;
            }
        }
        let mut bad: Vec<(BarChain, i64)> = acc.into_iter().filter(|&(_, x)| x != 0).collect();
        bad.sort();
        if let Some((c, x)) = bad.into_iter().next() {
            return Err(IotaWitness {
                morphism: u.key(),
                chain: c.label(),
                coefficient: x,
            });
        }
    }
    Ok(())
}

/// `ι` as a chain map from the Koszul complex into the bar complex.
pub fn iota_map(
    tau: &PrunedTree,
    sigma: &PrunedTree,
    ring: CoefficientRing,
) -> Result<ComplexMap, BarError> {
    iota_map_with(tau, sigma, ring, SignConvention::Full)
}

pub fn iota_map_with(
    tau: &PrunedTree,
    sigma: &PrunedTree,
    ring: CoefficientRing,
    convention: SignConvention,
) -> Result<ComplexMap, BarError> {
    let domain = koszul_complex_pair(tau, sigma, ring)?;
    let codomain = bar_complex(tau, sigma, ring)?;
    let mut index: HashMap<&str, usize> = HashMap::new();
    for l in &codomain.labels {
        for (i, s) in l.iter().enumerate() {
            index.insert(s.as_str(), i);
        }
    }
    let mut cols: BTreeMap<i64, Vec<SparseVec>> = BTreeMap::new();
    for u in hom_set(tau, sigma)?.iter() {
        let col = iota_with(u, convention)?
            .into_iter()
            .map(|(c, s)| (index[c.label().as_str()], s));
        cols.entry(u.degree() as i64)
            .or_default()
            .push(sparse_from_terms(col));
    }
    let maps = cols
        .into_iter()
        .map(|(k, c)| (k, SparseMatrix::from_columns(codomain.dim(k), c)))
        .collect();
    Ok(ComplexMap {
        domain,
        codomain,
        maps,
    })
}

/// `Δ{u} = Σ_{u = v w} {v} ⊗ {w}`, unit-flanked terms included.
pub fn koszul_diagonal(u: &TreeMorphism) -> Result<Vec<(TreeMorphism, TreeMorphism)>, BarError> {
    Ok(all_factorizations(u)?)
}

/// All deconcatenations `[u_1..u_k] ⊗ [u_{k+1}..u_d]`.
pub fn bar_diagonal(c: &BarChain) -> Vec<(BarChain, BarChain)> {
    let d = c.maps.len();
    (0..=d)
        .map(|k| {
            let mid = if k == d {
                c.source.clone()
            } else {
                c.maps[k].target().clone()
            };
            (
                BarChain {
                    source: mid.clone(),
                    target: c.target.clone(),
                    maps: c.maps[..k].to_vec(),
                },
                BarChain {
                    source: c.source.clone(),
                    target: mid,
                    maps: c.maps[k..].to_vec(),
                },
            )
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Configuration {
    /// Three consecutive vertices of one fiber merged into one.
    ConsecutiveTriple,
    /// Two independent merges.
    DisjointPairs,
    /// A merge at some level together with a merge of two of the vertices
    /// just above, one from each merged fiber.
    Nested,
}

#[derive(Debug, Clone, Serialize)]
pub struct QuadraticRelation {
    pub morphism: String,
    pub configuration: Configuration,
    /// `(v, w)` with `u = v ∘ w`, keys.
    pub factorizations: Vec<(String, String)>,
    pub signs: Vec<i64>,
    pub opposite: bool,
}

fn classify(u: &TreeMorphism) -> Option<Configuration> {
    let tau = u.source();
    let drops = u.drops();
    match drops.as_slice() {
        [(k, 2)] => {
            let mut fiber = vec![0usize; u.target().size(*k)];
            for &y in u.map(*k) {
                fiber[y as usize] += 1;
            }
            if fiber.contains(&3) {
                Some(Configuration::ConsecutiveTriple)
            } else if fiber.iter().filter(|&&s| s == 2).count() == 2 {
                Some(Configuration::DisjointPairs)
            } else {
                None
            }
        }
        [(j, 1), (k, 1)] => {
            let m = u.map(*j);
            let c = (0..m.len()).find(|&x| (x + 1..m.len()).any(|y| m[y] == m[x]))?;
            let d = (c + 1..m.len()).find(|&y| m[y] == m[c])?;
            if tau.parent(*j, c) == tau.parent(*j, d) {
                Some(Configuration::DisjointPairs)
            } else if *k == j + 1 {
                Some(Configuration::Nested)
            } else {
                None
            }
        }
        _ => None,
    }
}

/// Every degree-two morphism out of `tau` with its two factorizations.
pub fn quadratic_relations(tau: &PrunedTree) -> Result<Vec<QuadraticRelation>, BarError> {
    let labels = LabeledTree::with_leaf_entries(tau.clone());
    let mut out = Vec::new();
    for sigma in targets_from(tau) {
        if sigma.degree() + 2 != tau.degree() {
            continue;
        }
        for u in hom_set(tau, &sigma)?.iter() {
            let configuration =
                classify(u).ok_or_else(|| BarError::ClassificationFailure(u.key()))?;
            let chains = all_degree1_chains(u)?;
            if chains.len() != 2 {
                return Err(BarError::ClassificationFailure(u.key()));
            }
            let signs: Vec<i64> = chains
                .iter()
                .map(|c| chain_sign_with(c, &labels, SignConvention::Full).expect("degree one"))
                .collect();
            out.push(QuadraticRelation {
                morphism: u.key(),
                configuration,
                factorizations: chains.iter().map(|c| (c[0].key(), c[1].key())).collect(),
                opposite: signs[0] == -signs[1],
                signs,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homalg::{homology_ranks, is_quasi_iso, verify_complex};

    fn c(r: usize) -> PrunedTree {
        PrunedTree::corolla(r)
    }

    #[test]
    fn bar_c3_c1() {
        let b = bar_complex(&c(3), &c(1), CoefficientRing::Rationals).unwrap();
        assert_eq!(b.dims(), BTreeMap::from([(1, 1), (2, 2)]));
        verify_complex(&b).unwrap();
        let h = homology_ranks(&b).unwrap();
        assert_eq!((h[&1], h[&2]), (0, 1));
        let hz = crate::homalg::homology_smith(&b.with_ring(CoefficientRing::Integers));
        assert_eq!(hz[&2].free, 1);
        assert!(hz[&1].torsion.is_empty() && hz[&1].free == 0);
    }

    #[test]
    fn bar_trivial_cases() {
        let b = bar_complex(&c(2), &c(2), CoefficientRing::Rationals).unwrap();
        assert_eq!(b.dims(), BTreeMap::from([(0, 1)]));
        let b = bar_complex(&c(1), &c(2), CoefficientRing::Rationals).unwrap();
        assert_eq!(b.total_dim(), 0);
    }

    #[test]
    fn koszul_pairs() {
        let k = koszul_complex_pair(&c(4), &c(2), CoefficientRing::Rationals).unwrap();
        assert_eq!(k.dims(), BTreeMap::from([(2, 3)]));
        let k = koszul_complex_pair(&c(3), &c(1), CoefficientRing::Rationals).unwrap();
        assert_eq!(k.dims(), BTreeMap::from([(2, 1)]));
    }

    #[test]
    fn iota_examples() {
        let id = TreeMorphism::identity(&c(3));
        assert_eq!(iota(&id).unwrap().len(), 1);
        let u = hom_set(&c(3), &c(1)).unwrap()[0].clone();
        let i = iota(&u).unwrap();
        assert_eq!(i.len(), 2);
        assert_eq!(i[0].1, -i[1].1);
        let f = iota_map(&c(4), &c(1), CoefficientRing::Rationals).unwrap();
        assert!(is_quasi_iso(&f).unwrap());
    }

    #[test]
    fn diagonals() {
        let u = hom_set(&c(3), &c(1)).unwrap()[0].clone();
        assert_eq!(koszul_diagonal(&u).unwrap().len(), 4);
        let w = hom_set(&c(3), &c(2)).unwrap()[0].clone();
        assert_eq!(koszul_diagonal(&w).unwrap().len(), 2);
        let id = TreeMorphism::identity(&c(2));
        assert_eq!(koszul_diagonal(&id).unwrap().len(), 1);
        let chain = iota(&u).unwrap()[0].0.clone();
        assert_eq!(bar_diagonal(&chain).len(), 3);
        assert_eq!(bar_diagonal(&BarChain::unit(&c(2))).len(), 1);
    }

    #[test]
    fn configurations() {
        let rel = quadratic_relations(&c(3)).unwrap();
        assert_eq!(rel.len(), 1);
        assert_eq!(rel[0].configuration, Configuration::ConsecutiveTriple);
        let two = PrunedTree::new(vec![vec![1, 1, 2, 2], vec![1, 1]]).unwrap();
        let rel = quadratic_relations(&two).unwrap();
        assert!(rel
            .iter()
            .any(|r| r.configuration == Configuration::DisjointPairs));
        assert!(rel.iter().any(|r| r.configuration == Configuration::Nested));
        assert!(rel.iter().all(|r| r.opposite));
    }

    #[test]
    fn nerve_matches_bar() {
        let tau = PrunedTree::new(vec![vec![1, 1, 2], vec![1, 1]]).unwrap();
        let sigma = PrunedTree::trunk(2);
        let ring = CoefficientRing::Rationals;
        let b = bar_complex(&tau, &sigma, ring).unwrap();
        let nv = nerve_complex(&tau, &sigma, ring).unwrap();
        verify_complex(&nv).unwrap();
        assert_eq!(b.dims(), nv.dims());
        assert_eq!(homology_ranks(&b).unwrap(), homology_ranks(&nv).unwrap());
        let nv = nerve_complex(&tau, &tau, ring).unwrap();
        assert_eq!(nv.dims(), BTreeMap::from([(0, 1)]));
    }
}

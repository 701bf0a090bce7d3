//! Morphisms between pruned trees: levelwise surjections that commute with
//! the level maps and are monotone on every fiber.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, OnceLock, RwLock};

use thiserror::Error;

use crate::trees::{truncate_tree, LabeledTree, PrunedTree, TreeError};

/// Default bound on the size of a single hom-set or chain list.
pub const DEFAULT_HOM_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MorphismError {
    #[error("level counts differ")]
    LevelMismatch,
    #[error("map {level} has length {found}, expected {expected}")]
    Shape {
        level: usize,
        expected: usize,
        found: usize,
    },
    #[error("map {level} has a value out of range")]
    OutOfRange { level: usize },
    #[error("commuting square fails at level {0}")]
    SquareFails(usize),
    #[error("map {0} is not surjective")]
    NotSurjective(usize),
    #[error("map {0} is not monotone on fiber {1}")]
    NotFiberMonotone(usize, usize),
    #[error("morphisms are not composable")]
    NotComposable,
    #[error("hom-set or chain enumeration exceeded the cap of {0}")]
    CapExceeded(usize),
    #[error("bad morphism key: {0}")]
    BadKey(String),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

#[derive(PartialEq, Eq, Hash, PartialOrd, Ord)]
struct MorphismData {
    source: PrunedTree,
    target: PrunedTree,
    maps: Vec<Vec<u32>>,
}

/// A morphism `u: source -> target`. Maps are zero-based, one per level
/// `0..=n`. Cloning is cheap.
#[derive(Clone)]
pub struct TreeMorphism {
    data: Arc<MorphismData>,
}

impl PartialEq for TreeMorphism {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.data, &other.data) || self.data == other.data
    }
}

impl Eq for TreeMorphism {}

impl Hash for TreeMorphism {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.data.hash(state)
    }
}

/// Ordered by source, target, then the concatenated level maps.
impl PartialOrd for TreeMorphism {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for TreeMorphism {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.data.cmp(&other.data)
    }
}

impl fmt::Debug for TreeMorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.key())
    }
}

impl fmt::Display for TreeMorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.key())
    }
}

#[allow(clippy::needless_range_loop)]
fn check_maps(
    source: &PrunedTree,
    target: &PrunedTree,
    maps: &[Vec<u32>],
) -> Result<(), MorphismError> {
    let n = source.n();
    if target.n() != n {
        return Err(MorphismError::LevelMismatch);
    }
    if maps.len() != n + 1 {
        return Err(MorphismError::Shape {
            level: maps.len().min(n + 1),
            expected: n + 1,
            found: maps.len(),
        });
    }
    for (i, m) in maps.iter().enumerate() {
        if m.len() != source.size(i) {
            return Err(MorphismError::Shape {
                level: i,
                expected: source.size(i),
                found: m.len(),
            });
        }
        if m.iter().any(|&y| y as usize >= target.size(i)) {
            return Err(MorphismError::OutOfRange { level: i });
        }
    }
    for i in 0..n {
        let tau = source.level_map(i + 1);
        let sigma = target.level_map(i + 1);
        for x in 0..source.size(i) {
            if sigma[maps[i][x] as usize] != maps[i + 1][tau[x] as usize] {
                return Err(MorphismError::SquareFails(i));
            }
        }
    }
    for (i, m) in maps.iter().enumerate() {
        let mut hit = vec![false; target.size(i)];
        for &y in m {
            hit[y as usize] = true;
        }
        if hit.iter().any(|h| !h) {
            return Err(MorphismError::NotSurjective(i));
        }
    }
    for i in 0..n {
        for z in 0..source.size(i + 1) {
            let fiber = source.children(i + 1, z);
            let m = &maps[i][fiber];
            if m.windows(2).any(|w| w[1] < w[0]) {
                return Err(MorphismError::NotFiberMonotone(i, z + 1));
            }
        }
    }
    Ok(())
}

impl TreeMorphism {
    /// Validates 1-based maps, one per level `0..=n`.
    pub fn new(
        source: PrunedTree,
        target: PrunedTree,
        maps: Vec<Vec<u32>>,
    ) -> Result<Self, MorphismError> {
        let mut zero = Vec::with_capacity(maps.len());
        for (i, m) in maps.into_iter().enumerate() {
            if m.contains(&0) {
                return Err(MorphismError::OutOfRange { level: i });
            }
            zero.push(m.into_iter().map(|y| y - 1).collect());
        }
        Self::from_zero_based(source, target, zero)
    }

    pub(crate) fn from_zero_based(
        source: PrunedTree,
        target: PrunedTree,
        maps: Vec<Vec<u32>>,
    ) -> Result<Self, MorphismError> {
        check_maps(&source, &target, &maps)?;
        Ok(Self::trusted(source, target, maps))
    }

    fn trusted(source: PrunedTree, target: PrunedTree, maps: Vec<Vec<u32>>) -> Self {
        TreeMorphism {
            data: Arc::new(MorphismData {
                source,
                target,
                maps,
            }),
        }
    }

    pub fn identity(tree: &PrunedTree) -> Self {
        let maps = (0..=tree.n())
            .map(|i| (0..tree.size(i) as u32).collect())
            .collect();
        Self::trusted(tree.clone(), tree.clone(), maps)
    }

    pub fn source(&self) -> &PrunedTree {
        &self.data.source
    }

    pub fn target(&self) -> &PrunedTree {
        &self.data.target
    }

    /// Zero-based map at level `i`.
    pub fn map(&self, i: usize) -> &[u32] {
        &self.data.maps[i]
    }

    pub fn maps_one_based(&self) -> Vec<Vec<u32>> {
        self.data
            .maps
            .iter()
            .map(|m| m.iter().map(|y| y + 1).collect())
            .collect()
    }

    pub fn degree(&self) -> usize {
        self.source().degree() - self.target().degree()
    }

    pub fn is_identity(&self) -> bool {
        self.source() == self.target()
    }

    /// Levels at which the morphism is not injective, with the number of
    /// vertices lost at each.
    pub fn drops(&self) -> Vec<(usize, usize)> {
        (0..self.source().n())
            .filter_map(|i| {
                let d = self.source().size(i) - self.target().size(i);
                (d > 0).then_some((i, d))
            })
            .collect()
    }

    /// `source=>target#u_0|u_1|...`, 1-based.
    pub fn key(&self) -> String {
        let maps: Vec<String> = self
            .maps_one_based()
            .iter()
            .map(|m| {
                m.iter()
                    .map(|y| y.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect();
        format!("{}=>{}#{}", self.source(), self.target(), maps.join("|"))
    }

    pub fn parse_key(key: &str) -> Result<Self, MorphismError> {
        let bad = || MorphismError::BadKey(key.to_string());
        let (trees, maps) = key.split_once('#').ok_or_else(bad)?;
        let (s, t) = trees.split_once("=>").ok_or_else(bad)?;
        let source: PrunedTree = s.trim().parse()?;
        let target: PrunedTree = t.trim().parse()?;
        let maps = maps
            .split('|')
            .map(|m| {
                m.split(',')
                    .map(|c| c.trim().parse::<u32>().map_err(|_| bad()))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(source, target, maps)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "source": self.source().encode(),
            "target": self.target().encode(),
            "maps": self.maps_one_based(),
        })
    }
}

/// Validates `maps` (1-based) as a morphism `source -> target`.
pub fn validate_morphism(
    source: &PrunedTree,
    target: &PrunedTree,
    maps: Vec<Vec<u32>>,
) -> Result<TreeMorphism, MorphismError> {
    TreeMorphism::new(source.clone(), target.clone(), maps)
}

/// `v ∘ w`.
pub fn compose(v: &TreeMorphism, w: &TreeMorphism) -> Result<TreeMorphism, MorphismError> {
    if v.source() != w.target() {
        return Err(MorphismError::NotComposable);
    }
    if w.is_identity() {
        return Ok(v.clone());
    }
    if v.is_identity() {
        return Ok(w.clone());
    }
    let maps = (0..=w.source().n())
        .map(|i| w.map(i).iter().map(|&y| v.map(i)[y as usize]).collect())
        .collect();
    Ok(TreeMorphism::trusted(
        w.source().clone(),
        v.target().clone(),
        maps,
    ))
}

/// The unique `v` with `v ∘ w = u`, if any.
pub fn left_factor(u: &TreeMorphism, w: &TreeMorphism) -> Option<TreeMorphism> {
    if u.source() != w.source() {
        return None;
    }
    let theta = w.target();
    if theta.degree() < u.target().degree() {
        return None;
    }
    let mut maps = Vec::with_capacity(theta.n() + 1);
    for i in 0..=theta.n() {
        let mut m = vec![u32::MAX; theta.size(i)];
        for (x, &y) in w.map(i).iter().enumerate() {
            let val = u.map(i)[x];
            let slot = &mut m[y as usize];
            if *slot == u32::MAX {
                *slot = val;
            } else if *slot != val {
                return None;
            }
        }
        maps.push(m);
    }
    TreeMorphism::from_zero_based(theta.clone(), u.target().clone(), maps).ok()
}

type HomCache = RwLock<HashMap<(PrunedTree, PrunedTree), Arc<Vec<TreeMorphism>>>>;

fn hom_cache() -> &'static HomCache {
    static CACHE: OnceLock<HomCache> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// All morphisms `tau -> sigma`, sorted by their concatenated level maps.
pub fn hom_set(
    tau: &PrunedTree,
    sigma: &PrunedTree,
) -> Result<Arc<Vec<TreeMorphism>>, MorphismError> {
    hom_set_capped(tau, sigma, DEFAULT_HOM_CAP)
}

pub fn hom_set_capped(
    tau: &PrunedTree,
    sigma: &PrunedTree,
    cap: usize,
) -> Result<Arc<Vec<TreeMorphism>>, MorphismError> {
    if tau.n() != sigma.n() {
        return Err(MorphismError::LevelMismatch);
    }
    let key = (tau.clone(), sigma.clone());
    if let Some(hit) = hom_cache().read().unwrap().get(&key) {
        return Ok(hit.clone());
    }
    let list = Arc::new(enumerate_hom(tau, sigma, cap)?);
    hom_cache()
        .write()
        .unwrap()
        .entry(key)
        .or_insert_with(|| list.clone());
    Ok(list)
}

fn enumerate_hom(
    tau: &PrunedTree,
    sigma: &PrunedTree,
    cap: usize,
) -> Result<Vec<TreeMorphism>, MorphismError> {
    let n = tau.n();
    let mut out = Vec::new();
    if tau.degree() < sigma.degree() || (0..n).any(|i| tau.size(i) < sigma.size(i)) {
        return Ok(out);
    }
    let mut maps: Vec<Vec<u32>> = vec![Vec::new(); n + 1];
    maps[n] = vec![0];
    level_rec(tau, sigma, n, &mut maps, &mut out, cap)?;
    out.sort();
    Ok(out)
}

/// Fills `maps[level - 1]` given `maps[level]`, then recurses downward.
fn level_rec(
    tau: &PrunedTree,
    sigma: &PrunedTree,
    level: usize,
    maps: &mut Vec<Vec<u32>>,
    out: &mut Vec<TreeMorphism>,
    cap: usize,
) -> Result<(), MorphismError> {
    if level == 0 {
        if out.len() >= cap {
            return Err(MorphismError::CapExceeded(cap));
        }
        out.push(TreeMorphism::trusted(
            tau.clone(),
            sigma.clone(),
            maps.clone(),
        ));
        return Ok(());
    }
    let i = level - 1;
    let mut current = vec![0u32; tau.size(i)];
    let mut hits = vec![0usize; sigma.size(i)];
    fiber_rec(
        tau,
        sigma,
        level,
        0,
        &mut current,
        &mut hits,
        maps,
        out,
        cap,
    )
}

#[allow(clippy::too_many_arguments)]
fn fiber_rec(
    tau: &PrunedTree,
    sigma: &PrunedTree,
    level: usize,
    z: usize,
    current: &mut Vec<u32>,
    hits: &mut Vec<usize>,
    maps: &mut Vec<Vec<u32>>,
    out: &mut Vec<TreeMorphism>,
    cap: usize,
) -> Result<(), MorphismError> {
    if z == tau.size(level) {
        if hits.iter().all(|&h| h > 0) {
            maps[level - 1] = current.clone();
            level_rec(tau, sigma, level - 1, maps, out, cap)?;
        }
        return Ok(());
    }
    let fiber = tau.children(level, z);
    let image = maps[level][z] as usize;
    let targets = sigma.children(level, image);
    let mut choice = Vec::with_capacity(fiber.len());
    weakly_increasing(
        fiber.len(),
        targets.start as u32,
        targets.end as u32,
        &mut choice,
        &mut |vals: &[u32]| {
            for (k, x) in fiber.clone().enumerate() {
                current[x] = vals[k];
                hits[vals[k] as usize] += 1;
            }
            let r = fiber_rec(tau, sigma, level, z + 1, current, hits, maps, out, cap);
            for &v in vals {
                hits[v as usize] -= 1;
            }
            r
        },
    )
}

fn weakly_increasing(
    len: usize,
    lo: u32,
    hi: u32,
    cur: &mut Vec<u32>,
    f: &mut dyn FnMut(&[u32]) -> Result<(), MorphismError>,
) -> Result<(), MorphismError> {
    if cur.len() == len {
        return f(cur);
    }
    let start = cur.last().copied().unwrap_or(lo);
    for v in start..hi {
        cur.push(v);
        weakly_increasing(len, lo, hi, cur, f)?;
        cur.pop();
    }
    Ok(())
}

/// `p`-element subsets of `0..m` in colex order.
fn colex_subsets(m: usize, p: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if p > m {
        return out;
    }
    let mut c: Vec<usize> = (0..p).collect();
    loop {
        out.push(c.clone());
        let mut j = 0;
        while j < p
            && (if j + 1 < p {
                c[j] + 1 == c[j + 1]
            } else {
                c[j] + 1 == m
            })
        {
            j += 1;
        }
        if j == p {
            break;
        }
        c[j] += 1;
        for (k, slot) in c.iter_mut().enumerate().take(j) {
            *slot = k;
        }
    }
    out
}

/// All degree-one morphisms out of `tau`, built by merging two consecutive
/// vertices of one fiber and, above level 0, shuffling their subtrees.
pub fn degree_one_from(tau: &PrunedTree) -> Vec<TreeMorphism> {
    let n = tau.n();
    let mut out = Vec::new();
    for k in 0..n {
        for a in 0..tau.size(k).saturating_sub(1) {
            if tau.parent(k, a) != tau.parent(k, a + 1) {
                continue;
            }
            let shuffles = if k == 0 {
                vec![Vec::new()]
            } else {
                let p = tau.children(k, a).len();
                let q = tau.children(k, a + 1).len();
                colex_subsets(p + q, p)
            };
            for positions in shuffles {
                out.push(merge_morphism(tau, k, a, &positions));
            }
        }
    }
    out
}

fn merge_morphism(tau: &PrunedTree, k: usize, a: usize, positions: &[usize]) -> TreeMorphism {
    let n = tau.n();
    // order[i] lists level-i vertices of tau in their new order, i <= k.
    let mut order: Vec<Vec<usize>> = vec![Vec::new(); k + 1];
    order[k] = (0..tau.size(k)).collect();
    if k > 0 {
        let left = tau.children(k, a);
        let right = tau.children(k, a + 1);
        let mut level: Vec<usize> = (0..left.start).collect();
        let (mut li, mut ri) = (left.start, right.start);
        for slot in 0..left.len() + right.len() {
            if positions.contains(&slot) {
                level.push(li);
                li += 1;
            } else {
                level.push(ri);
                ri += 1;
            }
        }
        level.extend(right.end..tau.size(k - 1));
        order[k - 1] = level;
        for i in (0..k.saturating_sub(1)).rev() {
            let above = order[i + 1].clone();
            order[i] = above.iter().flat_map(|&y| tau.children(i + 1, y)).collect();
        }
    }
    let mut maps: Vec<Vec<u32>> = Vec::with_capacity(n + 1);
    for (i, ord) in order.iter().enumerate().take(k) {
        let mut m = vec![0u32; tau.size(i)];
        for (pos, &x) in ord.iter().enumerate() {
            m[x] = pos as u32;
        }
        maps.push(m);
    }
    maps.push(
        (0..tau.size(k))
            .map(|x| if x <= a { x as u32 } else { x as u32 - 1 })
            .collect(),
    );
    for i in k + 1..=n {
        maps.push((0..tau.size(i) as u32).collect());
    }
    let mut levels: Vec<Vec<u32>> = tau.levels_zero_based().to_vec();
    for i in 0..=k.min(n - 1) {
        let mut sigma = vec![0u32; tau.size(i) - usize::from(i == k)];
        for x in 0..tau.size(i) {
            sigma[maps[i][x] as usize] = maps[i + 1][tau.parent(i, x)];
        }
        levels[i] = sigma;
    }
    let target = PrunedTree::from_zero_based(levels);
    TreeMorphism::from_zero_based(tau.clone(), target, maps)
        .expect("merge construction yields a valid morphism")
}

/// Every object reachable from `tau`, including `tau`, sorted.
pub fn targets_from(tau: &PrunedTree) -> Vec<PrunedTree> {
    let mut seen: HashSet<PrunedTree> = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert(tau.clone());
    queue.push_back(tau.clone());
    while let Some(t) = queue.pop_front() {
        for u in degree_one_from(&t) {
            if seen.insert(u.target().clone()) {
                queue.push_back(u.target().clone());
            }
        }
    }
    let mut v: Vec<_> = seen.into_iter().collect();
    v.sort();
    v
}

/// Objects `theta` with morphisms `tau -> theta -> sigma`.
pub fn interval(tau: &PrunedTree, sigma: &PrunedTree) -> Result<Vec<PrunedTree>, MorphismError> {
    let mut out = Vec::new();
    for theta in targets_from(tau) {
        if !hom_set(&theta, sigma)?.is_empty() {
            out.push(theta);
        }
    }
    Ok(out)
}

/// All `(v, w)` with `v ∘ w = u`, `deg v = d1`, `deg w = d2`, through any
/// middle object. Degree-zero factors are identities.
pub fn factorizations(
    u: &TreeMorphism,
    d1: usize,
    d2: usize,
) -> Result<Vec<(TreeMorphism, TreeMorphism)>, MorphismError> {
    if d1 + d2 != u.degree() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for (v, w) in all_factorizations(u)? {
        if v.degree() == d1 && w.degree() == d2 {
            out.push((v, w));
        }
    }
    Ok(out)
}

/// All `(v, w)` with `v ∘ w = u`, including the two identity-flanked ones.
pub fn all_factorizations(
    u: &TreeMorphism,
) -> Result<Vec<(TreeMorphism, TreeMorphism)>, MorphismError> {
    let mut out = Vec::new();
    for theta in targets_from(u.source()) {
        if theta.degree() < u.target().degree() {
            continue;
        }
        for w in hom_set(u.source(), &theta)?.iter() {
            if let Some(v) = left_factor(u, w) {
                out.push((v, w.clone()));
            }
        }
    }
    out.sort_by(|a, b| (a.1.degree(), &a.1, &a.0).cmp(&(b.1.degree(), &b.1, &b.0)));
    Ok(out)
}

/// All chains `(u_1, ..., u_d)` of degree-one morphisms with
/// `u = u_1 ∘ ... ∘ u_d`.
pub fn all_degree1_chains(u: &TreeMorphism) -> Result<Vec<Vec<TreeMorphism>>, MorphismError> {
    let mut memo: HashMap<TreeMorphism, Arc<Vec<Vec<TreeMorphism>>>> = HashMap::new();
    let r = chains_rec(u, &mut memo, DEFAULT_HOM_CAP)?;
    Ok(r.as_ref().clone())
}

fn chains_rec(
    u: &TreeMorphism,
    memo: &mut HashMap<TreeMorphism, Arc<Vec<Vec<TreeMorphism>>>>,
    cap: usize,
) -> Result<Arc<Vec<Vec<TreeMorphism>>>, MorphismError> {
    if let Some(hit) = memo.get(u) {
        return Ok(hit.clone());
    }
    let mut out = Vec::new();
    if u.degree() == 0 {
        out.push(Vec::new());
    } else {
        for w in degree_one_from(u.source()) {
            if let Some(v) = left_factor(u, &w) {
                for mut chain in chains_rec(&v, memo, cap)?.iter().cloned() {
                    chain.push(w.clone());
                    out.push(chain);
                    if out.len() > cap {
                        return Err(MorphismError::CapExceeded(cap));
                    }
                }
            }
        }
    }
    let out = Arc::new(out);
    memo.insert(u.clone(), out.clone());
    Ok(out)
}

/// True iff `u_0` is injective on every fiber of the first level map.
pub fn is_fiberwise_injective_level0(u: &TreeMorphism) -> bool {
    let tau = u.source();
    (0..tau.size(1)).all(|z| {
        let images: Vec<u32> = tau.children(1, z).map(|x| u.map(0)[x]).collect();
        images.windows(2).all(|w| w[0] < w[1])
    })
}

/// The unique morphism `a.base -> b.base` carrying the entry map of `a`
/// to that of `b`, if it exists.
#[allow(clippy::needless_range_loop)]
pub fn comma_compare(a: &LabeledTree, b: &LabeledTree) -> Option<TreeMorphism> {
    if a.entry_count() != b.entry_count() || a.base.n() != b.base.n() {
        return None;
    }
    let (tau, sigma) = (&a.base, &b.base);
    let mut maps: Vec<Vec<u32>> = Vec::with_capacity(tau.n() + 1);
    let mut m0 = vec![u32::MAX; tau.size(0)];
    for (e, &x) in a.entry_map.iter().enumerate() {
        let y = b.entry_map[e];
        let slot = &mut m0[x as usize];
        if *slot != u32::MAX && *slot != y {
            return None;
        }
        *slot = y;
    }
    maps.push(m0);
    for i in 0..tau.n() {
        let mut m = vec![u32::MAX; tau.size(i + 1)];
        for x in 0..tau.size(i) {
            let z = tau.parent(i, x);
            let y = sigma.level_map(i + 1)[maps[i][x] as usize];
            if m[z] != u32::MAX && m[z] != y {
                return None;
            }
            m[z] = y;
        }
        maps.push(m);
    }
    TreeMorphism::from_zero_based(tau.clone(), sigma.clone(), maps).ok()
}

/// Drops level 0 of both trees and of the morphism.
pub fn truncate_morphism(u: &TreeMorphism) -> Result<TreeMorphism, MorphismError> {
    let s = truncate_tree(u.source())?;
    let t = truncate_tree(u.target())?;
    Ok(TreeMorphism::trusted(s, t, u.data.maps[1..].to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trees::enumerate_trees;

    fn c(r: usize) -> PrunedTree {
        PrunedTree::corolla(r)
    }

    #[test]
    fn validation_examples() {
        let u = validate_morphism(&c(3), &c(2), vec![vec![1, 1, 2], vec![1]]).unwrap();
        assert_eq!(u.degree(), 1);
        assert_eq!(
            validate_morphism(&c(3), &c(2), vec![vec![2, 1, 1], vec![1]]),
            Err(MorphismError::NotFiberMonotone(0, 1))
        );
        assert_eq!(
            validate_morphism(&c(3), &c(2), vec![vec![1, 1, 1], vec![1]]),
            Err(MorphismError::NotSurjective(0))
        );
    }

    #[test]
    fn small_hom_sets() {
        let h = hom_set(&c(3), &c(2)).unwrap();
        let u0: Vec<_> = h.iter().map(|u| u.maps_one_based()[0].clone()).collect();
        assert_eq!(u0, vec![vec![1, 1, 2], vec![1, 2, 2]]);
        assert_eq!(hom_set(&c(3), &c(1)).unwrap().len(), 1);
        assert_eq!(hom_set(&c(4), &c(2)).unwrap().len(), 3);
    }

    #[test]
    fn colex() {
        assert_eq!(colex_subsets(3, 1), vec![vec![0], vec![1], vec![2]]);
        assert_eq!(
            colex_subsets(4, 2),
            vec![
                vec![0, 1],
                vec![0, 2],
                vec![1, 2],
                vec![0, 3],
                vec![1, 3],
                vec![2, 3]
            ]
        );
    }

    #[test]
    fn degree_one_examples() {
        assert_eq!(degree_one_from(&c(3)).len(), 2);
        let t = PrunedTree::new(vec![vec![1, 1, 2], vec![1, 1]]).unwrap();
        assert_eq!(degree_one_from(&t).len(), 4);
        assert!(degree_one_from(&PrunedTree::trunk(3)).is_empty());
    }

    #[test]
    fn degree_one_matches_filtered_hom_sets() {
        for n in 1..=3 {
            let trees = enumerate_trees(n, 4).unwrap();
            for tau in &trees {
                let mut built = degree_one_from(tau);
                built.sort();
                let mut filtered = Vec::new();
                for sigma in &trees {
                    for u in hom_set(tau, sigma).unwrap().iter() {
                        if u.degree() == 1 {
                            filtered.push(u.clone());
                        }
                    }
                }
                filtered.sort();
                assert_eq!(built, filtered, "tau = {tau}");
            }
        }
    }

    #[test]
    fn factorization_examples() {
        let u = hom_set(&c(3), &c(1)).unwrap()[0].clone();
        assert_eq!(factorizations(&u, 1, 1).unwrap().len(), 2);
        assert_eq!(all_degree1_chains(&u).unwrap().len(), 2);
        let v = degree_one_from(&c(3))[0].clone();
        assert!(factorizations(&v, 1, 0).unwrap().len() == 1);
        assert_eq!(all_degree1_chains(&v).unwrap(), vec![vec![v.clone()]]);
        let id = TreeMorphism::identity(&c(2));
        assert_eq!(
            all_degree1_chains(&id).unwrap(),
            vec![Vec::<TreeMorphism>::new()]
        );
    }

    #[test]
    fn key_round_trip() {
        for u in hom_set(&c(4), &c(2)).unwrap().iter() {
            assert_eq!(&TreeMorphism::parse_key(&u.key()).unwrap(), u);
        }
    }
}

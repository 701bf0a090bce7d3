//! Signs of degree-one morphisms.
//!
//! A labeled tree is read as a graded tensor: a depth-first walk from the
//! top emits each vertex below the root as a degree-one symbol, followed by
//! its subtree; a leaf is followed by its entries in increasing position.
//! The sign of a merge is the Koszul sign of bringing the two merged
//! vertices to the front, fusing them, and reordering into the walk of the
//! target.

use thiserror::Error;

use crate::morphisms::TreeMorphism;
use crate::trees::LabeledTree;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SignError {
    #[error("morphism has degree {0}, expected 1")]
    NotDegreeOne(usize),
    #[error("labeled tree does not sit over the source of the morphism")]
    WrongSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    Vertex { level: usize, index: usize },
    Entry(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraversalOrder {
    pub symbols: Vec<Symbol>,
    pub degrees: Vec<i64>,
}

/// Which parts of the merge procedure contribute to the sign. Anything
/// other than `Full` is a deliberate mutation used to check that the
/// verification suites can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SignConvention {
    #[default]
    Full,
    /// Ignores the reordering into the target walk.
    DropShuffle,
}

pub fn traversal_order(tree: &LabeledTree) -> TraversalOrder {
    let base = &tree.base;
    let n = base.n();
    let mut entries_of: Vec<Vec<usize>> = vec![Vec::new(); base.size(0)];
    for (e, &x) in tree.entry_map.iter().enumerate() {
        entries_of[x as usize].push(e);
    }
    let mut symbols = Vec::new();
    let mut degrees = Vec::new();
    fn visit(
        tree: &LabeledTree,
        entries_of: &[Vec<usize>],
        level: usize,
        x: usize,
        symbols: &mut Vec<Symbol>,
        degrees: &mut Vec<i64>,
    ) {
        symbols.push(Symbol::Vertex { level, index: x });
        degrees.push(1);
        if level == 0 {
            for &e in &entries_of[x] {
                symbols.push(Symbol::Entry(e));
                degrees.push(tree.entry_degrees[e]);
            }
        } else {
            for c in tree.base.children(level, x) {
                visit(tree, entries_of, level - 1, c, symbols, degrees);
            }
        }
    }
    for x in 0..base.size(n - 1) {
        visit(tree, &entries_of, n - 1, x, &mut symbols, &mut degrees);
    }
    TraversalOrder { symbols, degrees }
}

/// Parity of the Koszul sign for the rearrangement whose `k`-th output is
/// input `perm[k]`.
pub fn koszul_exponent(perm: &[usize], degrees: &[i64]) -> i64 {
    let mut total = 0i64;
    for i in 0..perm.len() {
        let a = perm[i];
        if degrees[a] & 1 == 0 {
            continue;
        }
        for &b in &perm[i + 1..] {
            if b < a && degrees[b] & 1 == 1 {
                total += 1;
            }
        }
    }
    total & 1
}

pub fn koszul_sign(perm: &[usize], degrees: &[i64]) -> i64 {
    if koszul_exponent(perm, degrees) == 0 {
        1
    } else {
        -1
    }
}

/// The labeled target of `u`: entries follow `u_0`, degrees are unchanged.
pub fn push_labels(u: &TreeMorphism, source: &LabeledTree) -> LabeledTree {
    LabeledTree {
        base: u.target().clone(),
        entry_map: source
            .entry_map
            .iter()
            .map(|&x| u.map(0)[x as usize])
            .collect(),
        entry_degrees: source.entry_degrees.clone(),
    }
}

pub fn sign_degree_one(u: &TreeMorphism, source: &LabeledTree) -> Result<i64, SignError> {
    sign_degree_one_with(u, source, SignConvention::Full)
}

pub fn sign_degree_one_with(
    u: &TreeMorphism,
    source: &LabeledTree,
    convention: SignConvention,
) -> Result<i64, SignError> {
    if u.degree() != 1 {
        return Err(SignError::NotDegreeOne(u.degree()));
    }
    if &source.base != u.source() {
        return Err(SignError::WrongSource);
    }
    let tau = u.source();
    let k = u.drops()[0].0;
    let a = (0..tau.size(k) - 1)
        .find(|&x| u.map(k)[x] == u.map(k)[x + 1])
        .expect("a degree-one morphism merges a consecutive pair");

    let src = traversal_order(source);
    let find = |s: Symbol| src.symbols.iter().position(|&t| t == s).unwrap();
    let ia = find(Symbol::Vertex { level: k, index: a });
    let ib = find(Symbol::Vertex {
        level: k,
        index: a + 1,
    });
    let mut first: Vec<usize> = vec![ia, ib];
    first.extend((0..src.symbols.len()).filter(|&i| i != ia && i != ib));
    let p = koszul_exponent(&first, &src.degrees);
    if convention == SignConvention::DropShuffle {
        return Ok(if p == 0 { 1 } else { -1 });
    }

    // after fusing, position 0 is the merged vertex, the rest keep `first` order
    let fused: Vec<Symbol> = std::iter::once(src.symbols[ia])
        .chain(first[2..].iter().map(|&i| src.symbols[i]))
        .collect();
    let fused_degrees: Vec<i64> = std::iter::once(1)
        .chain(first[2..].iter().map(|&i| src.degrees[i]))
        .collect();
    let mut slot_of = std::collections::HashMap::with_capacity(fused.len());
    for (pos, s) in fused.iter().enumerate() {
        let key = match *s {
            Symbol::Vertex { level, index } => Symbol::Vertex {
                level,
                index: u.map(level)[index] as usize,
            },
            e => e,
        };
        slot_of.insert(key, pos);
    }
    let tgt = traversal_order(&push_labels(u, source));
    let second: Vec<usize> = tgt.symbols.iter().map(|s| slot_of[s]).collect();
    let q = koszul_exponent(&second, &fused_degrees);
    Ok(if (p + q) & 1 == 0 { 1 } else { -1 })
}

/// Product of the signs along `u_1 ∘ ... ∘ u_d`, labels pushed forward
/// from `source` through `u_d` first.
pub fn chain_sign(chain: &[TreeMorphism], source: &LabeledTree) -> Result<i64, SignError> {
    chain_sign_with(chain, source, SignConvention::Full)
}

pub fn chain_sign_with(
    chain: &[TreeMorphism],
    source: &LabeledTree,
    convention: SignConvention,
) -> Result<i64, SignError> {
    let mut labels = source.clone();
    let mut sign = 1;
    for u in chain.iter().rev() {
        sign *= sign_degree_one_with(u, &labels, convention)?;
        labels = push_labels(u, &labels);
    }
    Ok(sign)
}

/// Sign of a degree-one morphism whose entries are its source leaves, all
/// of degree zero.
pub fn sgn(u: &TreeMorphism) -> i64 {
    sign_degree_one(u, &LabeledTree::with_leaf_entries(u.source().clone()))
        .expect("degree-one morphism")
}

//! Pruned level trees and their labeled variants.
//!
//! A tree with `n` levels is a chain of monotone surjections
//! `T_0 -> T_1 -> ... -> T_n` with `T_n` a single point. Level maps are
//! stored 0-based internally and written 1-based in the text format
//! `<n>:[c,c,...];[c,...];...`.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

/// Default bound on the number of trees produced by [`enumerate_trees`].
pub const DEFAULT_ENUMERATION_CAP: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("level map {0} is not surjective")]
    NotSurjective(usize),
    #[error("level map {0} is not monotone at position {1}")]
    NotMonotone(usize, usize),
    #[error("top level has more than one vertex")]
    WrongTopSize,
    #[error("a tree needs at least one level")]
    NoLevels,
    #[error("level map {level} has length {found}, expected {expected}")]
    SizeMismatch {
        level: usize,
        expected: usize,
        found: usize,
    },
    #[error("cannot truncate a one-level tree")]
    CannotTruncate,
    #[error("enumeration would exceed the cap of {0} trees")]
    BoundTooLarge(usize),
    #[error("parse error at byte {position}: {message}")]
    Parse { position: usize, message: String },
    #[error("entry map is not surjective onto level 0")]
    EntriesNotSurjective,
    #[error("entry degrees have length {found}, expected {expected}")]
    EntryDegreeLength { expected: usize, found: usize },
}

#[derive(Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct TreeData {
    levels: Vec<Vec<u32>>,
}

/// An object of the category: a sequence of monotone surjections ending at
/// the point. Cloning is cheap.
#[derive(Clone)]
pub struct PrunedTree {
    data: Arc<TreeData>,
}

impl PrunedTree {
    /// Validates 1-based level maps.
    pub fn new(levels: Vec<Vec<u32>>) -> Result<Self, TreeError> {
        if levels.is_empty() {
            return Err(TreeError::NoLevels);
        }
        let n = levels.len();
        let mut zero_based = Vec::with_capacity(n);
        for (i, map) in levels.iter().enumerate() {
            let level = i + 1;
            if map.is_empty() {
                return Err(TreeError::NotSurjective(level));
            }
            for p in 1..map.len() {
                if map[p] < map[p - 1] {
                    return Err(TreeError::NotMonotone(level, p));
                }
            }
            if map[0] != 1 || map.windows(2).any(|w| w[1] > w[0] + 1) {
                return Err(TreeError::NotSurjective(level));
            }
            let size = *map.last().unwrap() as usize;
            if i + 1 < n && levels[i + 1].len() != size {
                return Err(TreeError::SizeMismatch {
                    level: level + 1,
                    expected: size,
                    found: levels[i + 1].len(),
                });
            }
            if i + 1 == n && size != 1 {
                return Err(TreeError::WrongTopSize);
            }
            zero_based.push(map.iter().map(|&c| c - 1).collect());
        }
        Ok(Self::from_zero_based(zero_based))
    }

    pub(crate) fn from_zero_based(levels: Vec<Vec<u32>>) -> Self {
        PrunedTree {
            data: Arc::new(TreeData { levels }),
        }
    }

    /// The trunk `i_n`: every level has a single vertex.
    pub fn trunk(n: usize) -> Self {
        Self::from_zero_based(vec![vec![0]; n.max(1)])
    }

    /// The `n = 1` tree with `r` leaves.
    pub fn corolla(r: usize) -> Self {
        Self::from_zero_based(vec![vec![0; r.max(1)]])
    }

    pub fn n(&self) -> usize {
        self.data.levels.len()
    }

    /// Size `t_i` of level `i`, for `0 <= i <= n`.
    pub fn size(&self, i: usize) -> usize {
        if i < self.n() {
            self.data.levels[i].len()
        } else {
            1
        }
    }

    pub fn sizes(&self) -> Vec<usize> {
        (0..=self.n()).map(|i| self.size(i)).collect()
    }

    /// Zero-based level map `tau_{i}: T_{i-1} -> T_i` for `1 <= i <= n`.
    pub fn level_map(&self, i: usize) -> &[u32] {
        &self.data.levels[i - 1]
    }

    /// Parent of vertex `x` of level `i` (zero-based), for `i < n`.
    pub fn parent(&self, i: usize, x: usize) -> usize {
        self.data.levels[i][x] as usize
    }

    /// Children of vertex `y` of level `i >= 1`, a contiguous range of level `i-1`.
    pub fn children(&self, i: usize, y: usize) -> std::ops::Range<usize> {
        let map = &self.data.levels[i - 1];
        let start = map.partition_point(|&c| (c as usize) < y);
        let end = map.partition_point(|&c| (c as usize) <= y);
        start..end
    }

    pub fn degree(&self) -> usize {
        (0..self.n()).map(|i| self.size(i)).sum()
    }

    pub fn leaves(&self) -> usize {
        self.size(0)
    }

    /// 1-based level maps.
    pub fn levels_one_based(&self) -> Vec<Vec<u32>> {
        self.data
            .levels
            .iter()
            .map(|m| m.iter().map(|c| c + 1).collect())
            .collect()
    }

    pub(crate) fn levels_zero_based(&self) -> &[Vec<u32>] {
        &self.data.levels
    }

    pub fn encode(&self) -> String {
        self.to_string()
    }

    pub fn parse(text: &str) -> Result<Self, TreeError> {
        parse_tree(text)
    }
}

impl PartialEq for PrunedTree {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.data, &other.data) || self.data == other.data
    }
}

impl Eq for PrunedTree {}

impl Hash for PrunedTree {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.data.hash(state)
    }
}

impl PartialOrd for PrunedTree {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PrunedTree {
    fn cmp(&self, other: &Self) -> Ordering {
        self.data.cmp(&other.data)
    }
}

impl fmt::Display for PrunedTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.n())?;
        for (i, map) in self.data.levels.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            f.write_str("[")?;
            for (j, c) in map.iter().enumerate() {
                if j > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{}", c + 1)?;
            }
            f.write_str("]")?;
        }
        Ok(())
    }
}

impl fmt::Debug for PrunedTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PrunedTree({self})")
    }
}

impl FromStr for PrunedTree {
    type Err = TreeError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_tree(s)
    }
}

impl serde::Serialize for PrunedTree {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.encode())
    }
}

impl<'de> serde::Deserialize<'de> for PrunedTree {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        parse_tree(&text).map_err(serde::de::Error::custom)
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn err(&self, message: &str) -> TreeError {
        TreeError::Parse {
            position: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), TreeError> {
        self.skip_ws();
        if self.bytes.get(self.pos) == Some(&c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected '{}'", c as char)))
        }
    }

    fn number(&mut self) -> Result<u32, TreeError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected a number"));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| TreeError::Parse {
                position: start,
                message: "number out of range".into(),
            })
    }
}

fn parse_tree(text: &str) -> Result<PrunedTree, TreeError> {
    let mut cur = Cursor {
        bytes: text.as_bytes(),
        pos: 0,
    };
    let n = cur.number()? as usize;
    cur.expect(b':')?;
    let mut levels = Vec::with_capacity(n);
    for i in 0..n {
        if i > 0 {
            cur.expect(b';')?;
        }
        cur.expect(b'[')?;
        let mut map = vec![cur.number()?];
        loop {
            cur.skip_ws();
            match cur.bytes.get(cur.pos) {
                Some(b',') => {
                    cur.pos += 1;
                    map.push(cur.number()?);
                }
                Some(b']') => {
                    cur.pos += 1;
                    break;
                }
                _ => return Err(cur.err("expected ',' or ']'")),
            }
        }
        levels.push(map);
    }
    cur.skip_ws();
    if cur.pos != cur.bytes.len() {
        return Err(cur.err("trailing input"));
    }
    let end = cur.pos;
    PrunedTree::new(levels).map_err(|e| TreeError::Parse {
        position: end,
        message: e.to_string(),
    })
}

/// Drops level 0.
pub fn truncate_tree(tree: &PrunedTree) -> Result<PrunedTree, TreeError> {
    if tree.n() < 2 {
        return Err(TreeError::CannotTruncate);
    }
    Ok(PrunedTree::from_zero_based(
        tree.levels_zero_based()[1..].to_vec(),
    ))
}

/// All monotone surjections `{0..a} -> {0..b}` as zero-based maps, in
/// lexicographic order.
pub(crate) fn monotone_surjections(a: usize, b: usize) -> Vec<Vec<u32>> {
    fn rec(a: usize, b: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        let pos = cur.len();
        if pos == a {
            if cur.last().map_or(b == 0, |&l| l as usize + 1 == b) {
                out.push(cur.clone());
            }
            return;
        }
        let candidates: Vec<u32> = match cur.last() {
            None => vec![0],
            Some(&l) => vec![l, l + 1],
        };
        for c in candidates {
            if (c as usize) < b && b - c as usize - 1 < a - pos {
                cur.push(c);
                rec(a, b, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    if b >= 1 && a >= b {
        rec(a, b, &mut Vec::new(), &mut out);
    }
    out
}

/// All trees with `n` levels and at most `max_leaves` leaves, sorted by
/// their level-map sequences.
pub fn enumerate_trees(n: usize, max_leaves: usize) -> Result<Vec<PrunedTree>, TreeError> {
    enumerate_trees_capped(n, max_leaves, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_trees_capped(
    n: usize,
    max_leaves: usize,
    cap: usize,
) -> Result<Vec<PrunedTree>, TreeError> {
    if n == 0 {
        return Err(TreeError::NoLevels);
    }
    let mut out = Vec::new();
    // levels built from the top: maps[i] is tau_{i+1}.
    let mut maps: Vec<Vec<u32>> = vec![Vec::new(); n];
    fn rec(
        level: usize,
        target_size: usize,
        max_leaves: usize,
        maps: &mut Vec<Vec<u32>>,
        out: &mut Vec<PrunedTree>,
        cap: usize,
    ) -> Result<(), TreeError> {
        // choose size of level `level` (source of tau_{level+1})
        for size in target_size..=max_leaves {
            for m in monotone_surjections(size, target_size) {
                maps[level] = m;
                if level == 0 {
                    if out.len() >= cap {
                        return Err(TreeError::BoundTooLarge(cap));
                    }
                    out.push(PrunedTree::from_zero_based(maps.clone()));
                } else {
                    rec(level - 1, size, max_leaves, maps, out, cap)?;
                }
            }
        }
        Ok(())
    }
    rec(n - 1, 1, max_leaves, &mut maps, &mut out, cap)?;
    out.sort();
    Ok(out)
}

/// A tree with an entry set `{1..|E|}` mapped onto its leaves, each entry
/// carrying a degree.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabeledTree {
    pub base: PrunedTree,
    /// Zero-based leaf index of each entry.
    pub entry_map: Vec<u32>,
    pub entry_degrees: Vec<i64>,
}

impl LabeledTree {
    /// `entry_map` is 1-based as in the text format.
    pub fn new(
        base: PrunedTree,
        entry_map: Vec<u32>,
        entry_degrees: Vec<i64>,
    ) -> Result<Self, TreeError> {
        if entry_degrees.len() != entry_map.len() {
            return Err(TreeError::EntryDegreeLength {
                expected: entry_map.len(),
                found: entry_degrees.len(),
            });
        }
        let t0 = base.size(0);
        let mut hit = vec![false; t0];
        for &e in &entry_map {
            if e == 0 || e as usize > t0 {
                return Err(TreeError::EntriesNotSurjective);
            }
            hit[e as usize - 1] = true;
        }
        if hit.iter().any(|h| !h) {
            return Err(TreeError::EntriesNotSurjective);
        }
        Ok(LabeledTree {
            base,
            entry_map: entry_map.into_iter().map(|e| e - 1).collect(),
            entry_degrees,
        })
    }

    /// Entries are the leaves themselves, all of degree zero.
    pub fn with_leaf_entries(base: PrunedTree) -> Self {
        let t0 = base.size(0) as u32;
        LabeledTree {
            base,
            entry_map: (0..t0).collect(),
            entry_degrees: vec![0; t0 as usize],
        }
    }

    /// Entries are the leaves themselves with the given degrees.
    pub fn with_leaf_degrees(base: PrunedTree, degrees: Vec<i64>) -> Self {
        assert_eq!(degrees.len(), base.size(0));
        let t0 = base.size(0) as u32;
        LabeledTree {
            base,
            entry_map: (0..t0).collect(),
            entry_degrees: degrees,
        }
    }

    pub fn entry_count(&self) -> usize {
        self.entry_map.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1() -> PrunedTree {
        PrunedTree::new(vec![vec![1, 2, 2], vec![1, 2], vec![1, 1], vec![1]]).unwrap()
    }

    #[test]
    fn validation_errors() {
        assert!(PrunedTree::new(vec![vec![1, 1, 1]]).is_ok());
        assert_eq!(
            PrunedTree::new(vec![vec![2, 1, 1], vec![1]]),
            Err(TreeError::NotMonotone(1, 1))
        );
        assert_eq!(
            PrunedTree::new(vec![vec![1, 1, 2], vec![1, 2]]),
            Err(TreeError::WrongTopSize)
        );
        assert_eq!(
            PrunedTree::new(vec![vec![1, 3]]),
            Err(TreeError::NotSurjective(1))
        );
        assert!(PrunedTree::new(vec![vec![1, 1, 2], vec![1, 1]]).is_ok());
    }

    #[test]
    fn degrees() {
        assert_eq!(fig1().degree(), 8);
        assert_eq!(PrunedTree::trunk(3).degree(), 3);
        assert_eq!(PrunedTree::corolla(4).degree(), 4);
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_trees(1, 3).unwrap().len(), 3);
        assert_eq!(enumerate_trees(2, 2).unwrap().len(), 3);
        assert_eq!(enumerate_trees(2, 3).unwrap().len(), 7);
        assert!(matches!(
            enumerate_trees_capped(3, 5, 10),
            Err(TreeError::BoundTooLarge(10))
        ));
    }

    #[test]
    fn truncation() {
        let t = truncate_tree(&fig1()).unwrap();
        assert_eq!(t.sizes(), vec![2, 2, 1, 1]);
        assert_eq!(
            truncate_tree(&PrunedTree::trunk(3)).unwrap(),
            PrunedTree::trunk(2)
        );
        assert_eq!(
            truncate_tree(&PrunedTree::corolla(2)),
            Err(TreeError::CannotTruncate)
        );
    }

    #[test]
    fn text_format() {
        assert_eq!(PrunedTree::corolla(3).encode(), "1:[1,1,1]");
        assert_eq!(
            "2:[1,1,2];[1,1]".parse::<PrunedTree>().unwrap().sizes(),
            vec![3, 2, 1]
        );
        assert!(matches!(
            PrunedTree::parse("2:[1,1,2];[1,2]"),
            Err(TreeError::Parse { .. })
        ));
        assert!(matches!(
            PrunedTree::parse("2:[1,1"),
            Err(TreeError::Parse { position: 6, .. })
        ));
    }

    #[test]
    fn children_ranges() {
        let t = fig1();
        assert_eq!(t.children(1, 1), 1..3);
        assert_eq!(t.children(2, 0), 0..1);
        assert_eq!(t.children(4, 0), 0..1);
    }
}

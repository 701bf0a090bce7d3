//! Exact linear algebra and finite free chain complexes.
//!
//! Matrices hold integer entries and are read in the coefficient ring of
//! the complex: as rationals, as integers, or reduced modulo a prime. Ranks
//! over the rationals use fraction-free elimination with content
//! normalization; small entries run in `i128` and fall back to big integers
//! on overflow.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HomalgError {
    #[error("ring {0} is not a field")]
    RingNotField(CoefficientRing),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("bad ring selector {0:?}")]
    BadRing(String),
    #[error("matrix for degree {degree} has shape {found:?}, expected {expected:?}")]
    Shape {
        degree: i64,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("map is not a chain map: {0}")]
    NotChainMap(String),
    #[error("rings differ")]
    RingMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum CoefficientRing {
    #[default]
    Rationals,
    PrimeField(u64),
    Integers,
}

impl CoefficientRing {
    pub fn prime(p: u64) -> Result<Self, HomalgError> {
        if p < 2
            || (2..)
                .take_while(|d| d * d <= p)
                .any(|d| p.is_multiple_of(d))
        {
            return Err(HomalgError::NotPrime(p));
        }
        Ok(CoefficientRing::PrimeField(p))
    }

    pub fn is_field(&self) -> bool {
        !matches!(self, CoefficientRing::Integers)
    }

    /// Reduces an integer into canonical form for this ring.
    pub fn reduce(&self, x: i64) -> i64 {
        match *self {
            CoefficientRing::PrimeField(p) => x.rem_euclid(p as i64),
            _ => x,
        }
    }
}

impl fmt::Display for CoefficientRing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoefficientRing::Rationals => f.write_str("q"),
            CoefficientRing::PrimeField(p) => write!(f, "fp:{p}"),
            CoefficientRing::Integers => f.write_str("z"),
        }
    }
}

impl FromStr for CoefficientRing {
    type Err = HomalgError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "q" | "Q" => Ok(CoefficientRing::Rationals),
            "z" | "Z" => Ok(CoefficientRing::Integers),
            _ => {
                let p = s
                    .strip_prefix("fp:")
                    .and_then(|p| p.parse::<u64>().ok())
                    .ok_or_else(|| HomalgError::BadRing(s.to_string()))?;
                CoefficientRing::prime(p)
            }
        }
    }
}

impl Serialize for CoefficientRing {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// A sparse integer vector, sorted by index, no explicit zeros.
pub type SparseVec = Vec<(usize, i64)>;

/// Collects `(index, coefficient)` pairs into a sorted sparse vector.
pub fn sparse_from_terms(terms: impl IntoIterator<Item = (usize, i64)>) -> SparseVec {
    let mut map: BTreeMap<usize, i64> = BTreeMap::new();
    for (i, c) in terms {
        if c != 0 {
            *map.entry(i).or_insert(0) += c;
        }
    }
    map.into_iter().filter(|&(_, c)| c != 0).collect()
}

/// Column-major sparse integer matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub cols: Vec<SparseVec>,
}

impl SparseMatrix {
    pub fn zero(nrows: usize, ncols: usize) -> Self {
        SparseMatrix {
            nrows,
            ncols,
            cols: vec![Vec::new(); ncols],
        }
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            nrows: n,
            ncols: n,
            cols: (0..n).map(|i| vec![(i, 1)]).collect(),
        }
    }

    pub fn from_columns(nrows: usize, cols: Vec<SparseVec>) -> Self {
        debug_assert!(cols.iter().flatten().all(|&(r, _)| r < nrows));
        SparseMatrix {
            nrows,
            ncols: cols.len(),
            cols,
        }
    }

    pub fn from_dense(rows: &[Vec<i64>]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        let cols = (0..ncols)
            .map(|j| {
                (0..nrows)
                    .filter(|&i| rows[i][j] != 0)
                    .map(|i| (i, rows[i][j]))
                    .collect()
            })
            .collect();
        SparseMatrix { nrows, ncols, cols }
    }

    pub fn to_dense(&self) -> Vec<Vec<i64>> {
        let mut d = vec![vec![0; self.ncols]; self.nrows];
        for (j, col) in self.cols.iter().enumerate() {
            for &(i, c) in col {
                d[i][j] = c;
            }
        }
        d
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.cols[j]
            .binary_search_by_key(&i, |&(r, _)| r)
            .map_or(0, |k| self.cols[j][k].1)
    }

    pub fn nnz(&self) -> usize {
        self.cols.iter().map(Vec::len).sum()
    }

    pub fn apply(&self, v: &[(usize, i64)]) -> SparseVec {
        sparse_from_terms(
            v.iter()
                .flat_map(|&(j, c)| self.cols[j].iter().map(move |&(i, a)| (i, a * c))),
        )
    }

    /// `self * other`.
    pub fn mul(&self, other: &SparseMatrix) -> SparseMatrix {
        assert_eq!(self.ncols, other.nrows);
        SparseMatrix {
            nrows: self.nrows,
            ncols: other.ncols,
            cols: other.cols.iter().map(|c| self.apply(c)).collect(),
        }
    }

    pub fn scale(&self, s: i64) -> SparseMatrix {
        SparseMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            cols: self
                .cols
                .iter()
                .map(|c| c.iter().map(|&(i, a)| (i, a * s)).collect())
                .collect(),
        }
    }

    pub fn sub(&self, other: &SparseMatrix) -> SparseMatrix {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        SparseMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            cols: self
                .cols
                .iter()
                .zip(&other.cols)
                .map(|(a, b)| {
                    sparse_from_terms(a.iter().copied().chain(b.iter().map(|&(i, c)| (i, -c))))
                })
                .collect(),
        }
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut cols = vec![Vec::new(); self.nrows];
        for (j, col) in self.cols.iter().enumerate() {
            for &(i, c) in col {
                cols[i].push((j, c));
            }
        }
        SparseMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            cols,
        }
    }

    /// Zero in `ring`.
    pub fn is_zero_in(&self, ring: CoefficientRing) -> bool {
        self.cols
            .iter()
            .flatten()
            .all(|&(_, c)| ring.reduce(c) == 0)
    }
}

trait ElimInt: Clone + PartialEq + Integer + Signed {
    fn cmul(&self, o: &Self) -> Option<Self>;
    fn csub(&self, o: &Self) -> Option<Self>;
    fn from_i64(x: i64) -> Self;
}

impl ElimInt for i128 {
    fn cmul(&self, o: &Self) -> Option<Self> {
        self.checked_mul(*o)
    }
    fn csub(&self, o: &Self) -> Option<Self> {
        self.checked_sub(*o)
    }
    fn from_i64(x: i64) -> Self {
        x as i128
    }
}

impl ElimInt for BigInt {
    fn cmul(&self, o: &Self) -> Option<Self> {
        Some(self * o)
    }
    fn csub(&self, o: &Self) -> Option<Self> {
        Some(self - o)
    }
    fn from_i64(x: i64) -> Self {
        BigInt::from(x)
    }
}

/// Incremental row echelon form over the integers, lead index first.
struct IntEchelon<T: ElimInt> {
    pivots: HashMap<usize, Vec<(usize, T)>>,
}

impl<T: ElimInt> IntEchelon<T> {
    fn new() -> Self {
        IntEchelon {
            pivots: HashMap::new(),
        }
    }

    /// Returns `None` on overflow, else whether the vector was independent.
    fn insert(&mut self, v: &[(usize, i64)]) -> Option<bool> {
        let mut v: Vec<(usize, T)> = v.iter().map(|&(i, c)| (i, T::from_i64(c))).collect();
        loop {
            let Some((lead, a)) = v.first().cloned() else {
                return Some(false);
            };
            let Some(piv) = self.pivots.get(&lead) else {
                normalize(&mut v);
                self.pivots.insert(lead, v);
                return Some(true);
            };
            let b = piv[0].1.clone();
            let g = a.gcd(&b);
            let (fa, fb) = (b.div_floor(&g), a.div_floor(&g));
            // v <- fa*v - fb*piv, lead cancels
            let mut out = Vec::with_capacity(v.len() + piv.len());
            let (mut i, mut j) = (1, 1);
            while i < v.len() || j < piv.len() {
                let (ri, rj) = (
                    v.get(i).map_or(usize::MAX, |e| e.0),
                    piv.get(j).map_or(usize::MAX, |e| e.0),
                );
                if ri < rj {
                    out.push((ri, v[i].1.cmul(&fa)?));
                    i += 1;
                } else if rj < ri {
                    out.push((rj, T::zero().csub(&piv[j].1.cmul(&fb)?)?));
                    j += 1;
                } else {
                    let c = v[i].1.cmul(&fa)?.csub(&piv[j].1.cmul(&fb)?)?;
                    if !c.is_zero() {
                        out.push((ri, c));
                    }
                    i += 1;
                    j += 1;
                }
            }
            normalize(&mut out);
            v = out;
        }
    }
}

fn normalize<T: ElimInt>(v: &mut [(usize, T)]) {
    let mut g = T::zero();
    for (_, c) in v.iter() {
        g = g.gcd(c);
        if g.is_one() {
            return;
        }
    }
    if !g.is_zero() && !g.is_one() {
        for (_, c) in v.iter_mut() {
            *c = c.div_floor(&g);
        }
    }
}

fn rank_integer_generic<T: ElimInt>(cols: &[SparseVec]) -> Option<usize> {
    let mut e = IntEchelon::<T>::new();
    for c in cols {
        e.insert(c)?;
    }
    Some(e.pivots.len())
}

fn inv_mod(a: u64, p: u64) -> u64 {
    let (mut t, mut new_t) = (0i128, 1i128);
    let (mut r, mut new_r) = (p as i128, a as i128);
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    t.rem_euclid(p as i128) as u64
}

fn rank_mod_p(cols: &[SparseVec], p: u64) -> usize {
    let mut pivots: HashMap<usize, Vec<(usize, u64)>> = HashMap::new();
    for col in cols {
        let mut v: Vec<(usize, u64)> = col
            .iter()
            .map(|&(i, c)| (i, c.rem_euclid(p as i64) as u64))
            .filter(|&(_, c)| c != 0)
            .collect();
        while let Some(&(lead, a)) = v.first() {
            let Some(piv) = pivots.get(&lead) else {
                let inv = inv_mod(a, p);
                for e in v.iter_mut() {
                    e.1 = e.1 * inv % p;
                }
                pivots.insert(lead, v);
                break;
            };
            let mut out = Vec::with_capacity(v.len() + piv.len());
            let (mut i, mut j) = (1, 1);
            while i < v.len() || j < piv.len() {
                let (ri, rj) = (
                    v.get(i).map_or(usize::MAX, |e| e.0),
                    piv.get(j).map_or(usize::MAX, |e| e.0),
                );
                if ri < rj {
                    out.push(v[i]);
                    i += 1;
                } else if rj < ri {
                    out.push((rj, (p - piv[j].1 * a % p) % p));
                    j += 1;
                } else {
                    let c = (v[i].1 + p - piv[j].1 * a % p) % p;
                    if c != 0 {
                        out.push((ri, c));
                    }
                    i += 1;
                    j += 1;
                }
            }
            v = out;
        }
    }
    pivots.len()
}

/// Rank of the span of `cols` over `ring` (rank over the fraction field for
/// the integers).
pub fn rank_of_columns(cols: &[SparseVec], ring: CoefficientRing) -> usize {
    match ring {
        CoefficientRing::PrimeField(p) => rank_mod_p(cols, p),
        _ => rank_integer_generic::<i128>(cols)
            .unwrap_or_else(|| rank_integer_generic::<BigInt>(cols).expect("big integers")),
    }
}

pub fn rank(m: &SparseMatrix, ring: CoefficientRing) -> usize {
    rank_of_columns(&m.cols, ring)
}

/// Nonzero invariant factors of an integer matrix, ascending.
pub fn smith_invariants(m: &SparseMatrix) -> Vec<BigInt> {
    let dense = |m: &SparseMatrix| -> Vec<Vec<BigInt>> {
        m.to_dense()
            .into_iter()
            .map(|r| r.into_iter().map(BigInt::from).collect())
            .collect()
    };
    match eliminate_units(m) {
        Some((units, core)) => {
            let mut out = vec![BigInt::one(); units];
            out.extend(dense_smith(dense(&core), core.nrows, core.ncols));
            out.sort();
            out
        }
        None => dense_smith(dense(m), m.nrows, m.ncols),
    }
}

/// Sparse elimination on ±1 pivots. Returns the number of pivots used and
/// the remaining block, or `None` on overflow.
fn eliminate_units(m: &SparseMatrix) -> Option<(usize, SparseMatrix)> {
    let mut rows: Vec<BTreeMap<usize, i64>> = vec![BTreeMap::new(); m.nrows];
    let mut cols: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); m.ncols];
    for (j, col) in m.cols.iter().enumerate() {
        for &(i, x) in col {
            if x != 0 {
                rows[i].insert(j, x);
                cols[j].insert(i);
            }
        }
    }
    let mut units = 0;
    loop {
        let mut best: Option<(usize, usize, usize)> = None;
        for (r, row) in rows.iter().enumerate() {
            for (&c, &x) in row {
                if x.abs() == 1 {
                    let cost = (row.len() - 1) * (cols[c].len() - 1);
                    if best.is_none_or(|b| cost < b.0) {
                        best = Some((cost, r, c));
                    }
                }
            }
            if best.is_some_and(|b| b.0 == 0) {
                break;
            }
        }
        let Some((_, r, c)) = best else { break };
        let pivot_row = std::mem::take(&mut rows[r]);
        let u = pivot_row[&c];
        for &j in pivot_row.keys() {
            cols[j].remove(&r);
        }
        let others: Vec<usize> = cols[c].iter().copied().collect();
        for i in others {
            let f = rows[i][&c].checked_mul(u)?;
            for (&j, &x) in &pivot_row {
                let y = rows[i]
                    .get(&j)
                    .copied()
                    .unwrap_or(0)
                    .checked_sub(f.checked_mul(x)?)?;
                if y == 0 {
                    rows[i].remove(&j);
                    cols[j].remove(&i);
                } else {
                    rows[i].insert(j, y);
                    cols[j].insert(i);
                }
            }
        }
        units += 1;
    }
    let live_rows: Vec<usize> = (0..rows.len()).filter(|&i| !rows[i].is_empty()).collect();
    let live_cols: Vec<usize> = (0..cols.len()).filter(|&j| !cols[j].is_empty()).collect();
    let row_pos: HashMap<usize, usize> =
        live_rows.iter().enumerate().map(|(k, &i)| (i, k)).collect();
    let core = live_cols
        .iter()
        .map(|&j| {
            let mut col: SparseVec = cols[j]
                .iter()
                .map(|&i| (row_pos[&i], rows[i][&j]))
                .collect();
            col.sort();
            col
        })
        .collect();
    Some((units, SparseMatrix::from_columns(live_rows.len(), core)))
}

#[allow(clippy::needless_range_loop)]
fn dense_smith(mut a: Vec<Vec<BigInt>>, rows: usize, cols: usize) -> Vec<BigInt> {
    let mut out = Vec::new();
    let mut t = 0;
    while t < rows.min(cols) {
        // pivot: smallest nonzero absolute value in the remaining block
        let mut best: Option<(usize, usize)> = None;
        for i in t..rows {
            for j in t..cols {
                if !a[i][j].is_zero() && best.is_none_or(|(bi, bj)| a[i][j].abs() < a[bi][bj].abs())
                {
                    best = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = best else { break };
        a.swap(t, pi);
        for row in a.iter_mut() {
            row.swap(t, pj);
        }
        loop {
            let mut changed = false;
            for i in t + 1..rows {
                if !a[i][t].is_zero() {
                    let q = a[i][t].div_floor(&a[t][t]);
                    for j in t..cols {
                        let s = &q * &a[t][j];
                        a[i][j] -= s;
                    }
                    if !a[i][t].is_zero() {
                        a.swap(t, i);
                        changed = true;
                    }
                }
            }
            for j in t + 1..cols {
                if !a[t][j].is_zero() {
                    let q = a[t][j].div_floor(&a[t][t]);
                    for row in a.iter_mut().take(rows).skip(t) {
                        let s = &q * &row[t];
                        row[j] -= s;
                    }
                    if !a[t][j].is_zero() {
                        for row in a.iter_mut() {
                            row.swap(t, j);
                        }
                        changed = true;
                    }
                }
            }
            if changed {
                continue;
            }
            // divisibility: pivot must divide the remaining block
            let mut fix = None;
            'scan: for (i, row) in a.iter().enumerate().take(rows).skip(t + 1) {
                for (j, x) in row.iter().enumerate().take(cols).skip(t + 1) {
                    if !(x % &a[t][t]).is_zero() {
                        fix = Some((i, j));
                        break 'scan;
                    }
                }
            }
            match fix {
                Some((i, _)) => {
                    for j in t..cols {
                        let x = a[i][j].clone();
                        a[t][j] += x;
                    }
                }
                None => break,
            }
        }
        out.push(a[t][t].abs());
        t += 1;
    }
    out.sort();
    out
}

/// A bounded complex of finitely generated free modules.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FreeChainComplex {
    pub ring: CoefficientRing,
    /// Lowest degree.
    pub lo: i64,
    /// `labels[k]` are the basis labels in degree `lo + k`.
    pub labels: Vec<Vec<String>>,
    /// `boundaries[k]` is `d` from degree `lo + k` to `lo + k - 1`.
    pub boundaries: Vec<SparseMatrix>,
}

impl FreeChainComplex {
    pub fn new(
        ring: CoefficientRing,
        lo: i64,
        labels: Vec<Vec<String>>,
        boundaries: Vec<SparseMatrix>,
    ) -> Result<Self, HomalgError> {
        assert_eq!(labels.len(), boundaries.len());
        for (k, d) in boundaries.iter().enumerate() {
            let expected = (
                if k == 0 { 0 } else { labels[k - 1].len() },
                labels[k].len(),
            );
            if (d.nrows, d.ncols) != expected {
                return Err(HomalgError::Shape {
                    degree: lo + k as i64,
                    expected,
                    found: (d.nrows, d.ncols),
                });
            }
        }
        Ok(FreeChainComplex {
            ring,
            lo,
            labels,
            boundaries,
        })
    }

    /// Builds a complex from per-degree labels and per-degree columns
    /// (`columns[k][j]` is the boundary of basis element `j` in degree
    /// `lo + k`, indexed into degree `lo + k - 1`). Degrees missing from
    /// the maps are empty.
    pub fn from_graded(
        ring: CoefficientRing,
        labels: BTreeMap<i64, Vec<String>>,
        mut columns: BTreeMap<i64, Vec<SparseVec>>,
    ) -> Self {
        let (Some(&lo), Some(&hi)) = (labels.keys().next(), labels.keys().next_back()) else {
            return FreeChainComplex {
                ring,
                lo: 0,
                labels: Vec::new(),
                boundaries: Vec::new(),
            };
        };
        let mut all_labels = Vec::new();
        let mut bounds = Vec::new();
        for k in lo..=hi {
            let l = labels.get(&k).cloned().unwrap_or_default();
            let below = if k == lo {
                0
            } else {
                labels.get(&(k - 1)).map_or(0, Vec::len)
            };
            let cols = columns
                .remove(&k)
                .unwrap_or_else(|| vec![Vec::new(); l.len()]);
            assert_eq!(cols.len(), l.len());
            let cols = if k == lo {
                vec![Vec::new(); l.len()]
            } else {
                cols
            };
            bounds.push(SparseMatrix::from_columns(below, cols));
            all_labels.push(l);
        }
        FreeChainComplex {
            ring,
            lo,
            labels: all_labels,
            boundaries: bounds,
        }
    }

    pub fn zero(ring: CoefficientRing) -> Self {
        FreeChainComplex {
            ring,
            lo: 0,
            labels: Vec::new(),
            boundaries: Vec::new(),
        }
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.labels.len() as i64 - 1
    }

    pub fn degrees(&self) -> std::ops::RangeInclusive<i64> {
        self.lo..=self.hi()
    }

    pub fn dim(&self, k: i64) -> usize {
        self.index(k).map_or(0, |i| self.labels[i].len())
    }

    pub fn dims(&self) -> BTreeMap<i64, usize> {
        self.degrees()
            .filter(|&k| self.dim(k) > 0)
            .map(|k| (k, self.dim(k)))
            .collect()
    }

    pub fn total_dim(&self) -> usize {
        self.labels.iter().map(Vec::len).sum()
    }

    fn index(&self, k: i64) -> Option<usize> {
        (k >= self.lo && k <= self.hi()).then(|| (k - self.lo) as usize)
    }

    /// `d_k`, from degree `k` to `k - 1`; empty outside the range.
    pub fn boundary(&self, k: i64) -> SparseMatrix {
        match self.index(k) {
            Some(i) => self.boundaries[i].clone(),
            None => SparseMatrix::zero(self.dim(k - 1), self.dim(k)),
        }
    }

    pub fn with_ring(&self, ring: CoefficientRing) -> Self {
        FreeChainComplex {
            ring,
            ..self.clone()
        }
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.degrees()
            .map(|k| if k % 2 == 0 { 1 } else { -1 } * self.dim(k) as i64)
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComplexWitness {
    pub degree: i64,
    pub label: String,
    pub image: Vec<(String, i64)>,
}

/// Checks `d ∘ d = 0` exactly in the ring of the complex.
pub fn verify_complex(c: &FreeChainComplex) -> Result<(), ComplexWitness> {
    for k in c.degrees() {
        if k - 1 < c.lo {
            continue;
        }
        let dd = c.boundary(k - 1).mul(&c.boundary(k));
        for (j, col) in dd.cols.iter().enumerate() {
            let image: Vec<(String, i64)> = col
                .iter()
                .filter(|&&(_, x)| c.ring.reduce(x) != 0)
                .map(|&(i, x)| (c.labels[(k - 2 - c.lo) as usize][i].clone(), x))
                .collect();
            if !image.is_empty() {
                return Err(ComplexWitness {
                    degree: k,
                    label: c.labels[(k - c.lo) as usize][j].clone(),
                    image,
                });
            }
        }
    }
    Ok(())
}

/// Ranks of homology over a field, for every degree in range.
pub fn homology_ranks(c: &FreeChainComplex) -> Result<BTreeMap<i64, usize>, HomalgError> {
    if !c.ring.is_field() {
        return Err(HomalgError::RingNotField(c.ring));
    }
    let ranks: BTreeMap<i64, usize> = c
        .degrees()
        .map(|k| (k, rank(&c.boundary(k), c.ring)))
        .collect();
    Ok(c.degrees()
        .map(|k| {
            let r_out = ranks[&k];
            let r_in = ranks.get(&(k + 1)).copied().unwrap_or(0);
            (k, c.dim(k) - r_out - r_in)
        })
        .collect())
}

/// Like [`homology_ranks`] but drops zero entries.
pub fn nonzero_homology(c: &FreeChainComplex) -> Result<BTreeMap<i64, usize>, HomalgError> {
    Ok(homology_ranks(c)?
        .into_iter()
        .filter(|&(_, r)| r > 0)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GroupInvariants {
    pub free: usize,
    pub torsion: Vec<String>,
}

/// Homology over the integers: free rank and torsion coefficients per degree.
pub fn homology_smith(c: &FreeChainComplex) -> BTreeMap<i64, GroupInvariants> {
    let ranks: BTreeMap<i64, usize> = c
        .degrees()
        .map(|k| (k, rank(&c.boundary(k), CoefficientRing::Integers)))
        .collect();
    c.degrees()
        .map(|k| {
            let r_in = ranks.get(&(k + 1)).copied().unwrap_or(0);
            let torsion = if r_in == 0 {
                Vec::new()
            } else {
                smith_invariants(&c.boundary(k + 1))
                    .into_iter()
                    .filter(|f| !f.is_one())
                    .map(|f| f.to_string())
                    .collect()
            };
            (
                k,
                GroupInvariants {
                    free: c.dim(k) - ranks[&k] - r_in,
                    torsion,
                },
            )
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HomologyReport {
    pub ring: CoefficientRing,
    pub ranks: BTreeMap<i64, usize>,
    pub torsion: BTreeMap<i64, Vec<String>>,
}

pub fn homology_report(c: &FreeChainComplex) -> HomologyReport {
    if c.ring.is_field() {
        HomologyReport {
            ring: c.ring,
            ranks: homology_ranks(c).expect("field"),
            torsion: BTreeMap::new(),
        }
    } else {
        let h = homology_smith(c);
        HomologyReport {
            ring: c.ring,
            ranks: h.iter().map(|(&k, g)| (k, g.free)).collect(),
            torsion: h
                .into_iter()
                .filter(|(_, g)| !g.torsion.is_empty())
                .map(|(k, g)| (k, g.torsion))
                .collect(),
        }
    }
}

/// A degree-preserving map of complexes; `maps[k]` has columns indexed by
/// the domain basis in degree `k`.
#[derive(Debug, Clone)]
pub struct ComplexMap {
    pub domain: FreeChainComplex,
    pub codomain: FreeChainComplex,
    pub maps: BTreeMap<i64, SparseMatrix>,
}

impl ComplexMap {
    pub fn component(&self, k: i64) -> SparseMatrix {
        self.maps
            .get(&k)
            .cloned()
            .unwrap_or_else(|| SparseMatrix::zero(self.codomain.dim(k), self.domain.dim(k)))
    }

    pub fn identity(c: &FreeChainComplex) -> Self {
        ComplexMap {
            domain: c.clone(),
            codomain: c.clone(),
            maps: c
                .degrees()
                .map(|k| (k, SparseMatrix::identity(c.dim(k))))
                .collect(),
        }
    }

    pub fn zero(domain: &FreeChainComplex, codomain: &FreeChainComplex) -> Self {
        ComplexMap {
            domain: domain.clone(),
            codomain: codomain.clone(),
            maps: BTreeMap::new(),
        }
    }

    fn all_degrees(&self) -> std::ops::RangeInclusive<i64> {
        let lo = self.domain.lo.min(self.codomain.lo);
        let hi = self.domain.hi().max(self.codomain.hi());
        lo..=hi
    }

    /// Checks `d f = f d` in the codomain ring.
    pub fn verify(&self) -> Result<(), HomalgError> {
        let ring = self.codomain.ring;
        for k in self.all_degrees() {
            let lhs = self.codomain.boundary(k).mul(&self.component(k));
            let rhs = self.component(k - 1).mul(&self.domain.boundary(k));
            if !lhs.sub(&rhs).is_zero_in(ring) {
                return Err(HomalgError::NotChainMap(format!("degree {k}")));
            }
        }
        Ok(())
    }
}

/// Cone of `f: A -> B`: degree `k` is `A_{k-1} ⊕ B_k`.
pub fn mapping_cone(f: &ComplexMap) -> FreeChainComplex {
    let (a, b) = (&f.domain, &f.codomain);
    let lo = (a.lo + 1).min(b.lo);
    let hi = (a.hi() + 1).max(b.hi());
    let mut labels = BTreeMap::new();
    let mut columns = BTreeMap::new();
    for k in lo..=hi {
        let (na, nb) = (a.dim(k - 1), b.dim(k));
        let mut l: Vec<String> = (0..na)
            .map(|i| format!("s({})", a.labels[(k - 1 - a.lo) as usize][i]))
            .collect();
        l.extend((0..nb).map(|i| b.labels[(k - b.lo) as usize][i].clone()));
        let below_a = a.dim(k - 2);
        let da = a.boundary(k - 1);
        let fa = f.component(k - 1);
        let db = b.boundary(k);
        let mut cols = Vec::with_capacity(na + nb);
        for j in 0..na {
            let mut col: SparseVec = da.cols[j].iter().map(|&(i, c)| (i, -c)).collect();
            col.extend(fa.cols[j].iter().map(|&(i, c)| (below_a + i, c)));
            cols.push(col);
        }
        for j in 0..nb {
            cols.push(db.cols[j].iter().map(|&(i, c)| (below_a + i, c)).collect());
        }
        labels.insert(k, l);
        columns.insert(k, cols);
    }
    FreeChainComplex::from_graded(a.ring, labels, columns)
}

/// True iff `f` induces an isomorphism in homology.
pub fn is_quasi_iso(f: &ComplexMap) -> Result<bool, HomalgError> {
    f.verify()?;
    let cone = mapping_cone(f);
    if cone.ring.is_field() {
        Ok(homology_ranks(&cone)?.values().all(|&r| r == 0))
    } else {
        Ok(homology_smith(&cone)
            .values()
            .all(|g| g.free == 0 && g.torsion.is_empty()))
    }
}

trait FieldElem: Clone + PartialEq {
    fn zero(ctx: u64) -> Self;
    fn from_i64(x: i64, ctx: u64) -> Self;
    fn is_zero(&self) -> bool;
    fn sub_mul(&self, a: &Self, b: &Self, ctx: u64) -> Self;
    fn div(&self, b: &Self, ctx: u64) -> Self;
}

impl FieldElem for BigRational {
    fn zero(_: u64) -> Self {
        Zero::zero()
    }
    fn from_i64(x: i64, _: u64) -> Self {
        BigRational::from_integer(BigInt::from(x))
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn sub_mul(&self, a: &Self, b: &Self, _: u64) -> Self {
        self - a * b
    }
    fn div(&self, b: &Self, _: u64) -> Self {
        self / b
    }
}

impl FieldElem for u64 {
    fn zero(_: u64) -> Self {
        0
    }
    fn from_i64(x: i64, p: u64) -> Self {
        x.rem_euclid(p as i64) as u64
    }
    fn is_zero(&self) -> bool {
        *self == 0
    }
    fn sub_mul(&self, a: &Self, b: &Self, p: u64) -> Self {
        (self + p - a * b % p) % p
    }
    fn div(&self, b: &Self, p: u64) -> Self {
        self * inv_mod(*b, p) % p
    }
}

#[allow(clippy::needless_range_loop)]
fn kernel_generic<F: FieldElem>(m: &SparseMatrix, ctx: u64) -> Vec<Vec<F>> {
    let (rows, cols) = (m.nrows, m.ncols);
    let mut a: Vec<Vec<F>> = m
        .to_dense()
        .into_iter()
        .map(|r| r.into_iter().map(|x| F::from_i64(x, ctx)).collect())
        .collect();
    let mut pivot_cols = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        let pv = a[r][c].clone();
        for j in 0..cols {
            a[r][j] = a[r][j].div(&pv, ctx);
        }
        for i in 0..rows {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for j in 0..cols {
                    let x = a[i][j].sub_mul(&f, &a[r][j], ctx);
                    a[i][j] = x;
                }
            }
        }
        pivot_cols.push(c);
        r += 1;
        if r == rows {
            break;
        }
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivot_cols.contains(c)).collect();
    free.iter()
        .map(|&fc| {
            let mut v = vec![F::zero(ctx); cols];
            v[fc] = F::from_i64(1, ctx);
            for (row, &pc) in pivot_cols.iter().enumerate() {
                v[pc] = F::zero(ctx).sub_mul(&a[row][fc], &F::from_i64(1, ctx), ctx);
            }
            v
        })
        .collect()
}

/// A kernel basis over a field, scaled to integer vectors.
pub fn kernel_basis(
    m: &SparseMatrix,
    ring: CoefficientRing,
) -> Result<Vec<SparseVec>, HomalgError> {
    match ring {
        CoefficientRing::Integers => Err(HomalgError::RingNotField(ring)),
        CoefficientRing::PrimeField(p) => Ok(kernel_generic::<u64>(m, p)
            .into_iter()
            .map(|v| {
                v.into_iter()
                    .enumerate()
                    .filter(|&(_, x)| x != 0)
                    .map(|(i, x)| (i, x as i64))
                    .collect()
            })
            .collect()),
        CoefficientRing::Rationals => Ok(kernel_generic::<BigRational>(m, 0)
            .into_iter()
            .map(|v| {
                let l = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
                v.into_iter()
                    .enumerate()
                    .filter(|(_, x)| !Zero::is_zero(x))
                    .map(|(i, x)| {
                        let y = (x * BigRational::from_integer(l.clone())).to_integer();
                        (i, y.to_i64().expect("kernel entries fit in i64"))
                    })
                    .collect()
            })
            .collect()),
    }
}

/// Induced-map criterion, computed directly from cycles and boundaries.
pub fn induces_homology_iso(f: &ComplexMap) -> Result<bool, HomalgError> {
    f.verify()?;
    let ring = f.codomain.ring;
    let ha = homology_ranks(&f.domain)?;
    let hb = homology_ranks(&f.codomain)?;
    for k in f.all_degrees() {
        let a = ha.get(&k).copied().unwrap_or(0);
        let b = hb.get(&k).copied().unwrap_or(0);
        if a != b {
            return Ok(false);
        }
        if a == 0 {
            continue;
        }
        let cycles = kernel_basis(&f.domain.boundary(k), ring)?;
        let fk = f.component(k);
        let boundaries = f.codomain.boundary(k + 1).cols;
        let base = rank_of_columns(&boundaries, ring);
        let mut all = boundaries;
        all.extend(cycles.iter().map(|z| fk.apply(z)));
        if rank_of_columns(&all, ring) - base != a {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(n: usize, tag: &str) -> Vec<String> {
        (0..n).map(|i| format!("{tag}{i}")).collect()
    }

    #[test]
    fn rings_parse() {
        assert_eq!(
            "q".parse::<CoefficientRing>().unwrap(),
            CoefficientRing::Rationals
        );
        assert_eq!(
            "fp:3".parse::<CoefficientRing>().unwrap(),
            CoefficientRing::PrimeField(3)
        );
        assert!("fp:4".parse::<CoefficientRing>().is_err());
    }

    #[test]
    fn d_squared_witness() {
        let c = FreeChainComplex::new(
            CoefficientRing::Integers,
            0,
            vec![labels(1, "a"), labels(1, "b"), labels(1, "c")],
            vec![
                SparseMatrix::zero(0, 1),
                SparseMatrix::from_dense(&[vec![1]]),
                SparseMatrix::from_dense(&[vec![1]]),
            ],
        )
        .unwrap();
        let w = verify_complex(&c).unwrap_err();
        assert_eq!(w.degree, 2);
    }

    #[test]
    fn simple_homology() {
        let c = FreeChainComplex::new(
            CoefficientRing::Rationals,
            1,
            vec![labels(1, "a"), labels(2, "b")],
            vec![
                SparseMatrix::zero(0, 1),
                SparseMatrix::from_dense(&[vec![-1, -1]]),
            ],
        )
        .unwrap();
        let h = homology_ranks(&c).unwrap();
        assert_eq!(h[&1], 0);
        assert_eq!(h[&2], 1);
    }

    #[test]
    fn torsion() {
        let c = FreeChainComplex::new(
            CoefficientRing::Integers,
            0,
            vec![labels(1, "a"), labels(1, "b")],
            vec![
                SparseMatrix::zero(0, 1),
                SparseMatrix::from_dense(&[vec![2]]),
            ],
        )
        .unwrap();
        let h = homology_smith(&c);
        assert_eq!(h[&0].free, 0);
        assert_eq!(h[&0].torsion, vec!["2".to_string()]);
        assert_eq!(h[&1].free, 0);
    }

    #[test]
    fn smith_small() {
        let m = SparseMatrix::from_dense(&[vec![2, 4, 4], vec![-6, 6, 12], vec![10, -4, -16]]);
        let inv: Vec<String> = smith_invariants(&m).iter().map(|x| x.to_string()).collect();
        assert_eq!(inv, vec!["2", "6", "12"]);
        let m = SparseMatrix::from_dense(&[vec![1, 2, 0], vec![3, 4, 0], vec![0, 0, 6]]);
        let inv: Vec<String> = smith_invariants(&m).iter().map(|x| x.to_string()).collect();
        assert_eq!(inv, vec!["1", "2", "6"]);
        let overflow = SparseMatrix::from_dense(&[vec![1, i64::MAX], vec![i64::MAX, 1]]);
        assert_eq!(smith_invariants(&overflow).len(), 2);
    }

    #[test]
    fn big_integer_fallback() {
        // entries grow past i128 during elimination
        let big = 1i64 << 40;
        let cols: Vec<SparseVec> = (0..6)
            .map(|j| {
                (0..6)
                    .map(|i| (i, (big - (i * 7 + j * 13) as i64) | 1))
                    .collect()
            })
            .collect();
        let r = rank_of_columns(&cols, CoefficientRing::Rationals);
        assert!(r <= 6);
        assert_eq!(rank_integer_generic::<BigInt>(&cols), Some(r));
    }

    #[test]
    fn quasi_iso_examples() {
        let c = FreeChainComplex::new(
            CoefficientRing::Rationals,
            0,
            vec![labels(2, "x")],
            vec![SparseMatrix::zero(0, 2)],
        )
        .unwrap();
        let id = ComplexMap::identity(&c);
        assert!(is_quasi_iso(&id).unwrap());
        assert!(induces_homology_iso(&id).unwrap());
        let z = ComplexMap::zero(&c, &c);
        assert!(!is_quasi_iso(&z).unwrap());
        assert!(!induces_homology_iso(&z).unwrap());
    }
}

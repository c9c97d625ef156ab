//! Dense complex cartesian tensors over three-dimensional index space.
//!
//! Entries are stored row-major with the first index most significant, so
//! `outer` is a concatenation of digit strings.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::OnceLock;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub const DEFAULT_RANK_CAP: usize = 12;

/// Largest rank any operation may produce. Read once from `IRTENSOR_RANK_CAP`.
pub fn rank_cap() -> usize {
    static CAP: OnceLock<usize> = OnceLock::new();
    *CAP.get_or_init(|| {
        std::env::var("IRTENSOR_RANK_CAP")
            .ok()
            .and_then(|s| s.trim().parse().ok())
            .unwrap_or(DEFAULT_RANK_CAP)
    })
}

#[inline]
pub fn pow3(n: usize) -> usize {
    3usize.pow(n as u32)
}

fn strides(rank: usize) -> Vec<usize> {
    (0..rank).map(|t| pow3(rank - 1 - t)).collect()
}

fn check_rank(rank: usize) -> Result<()> {
    let cap = rank_cap();
    if rank > cap {
        return Err(Error::RankOverflow { rank, cap });
    }
    Ok(())
}

/// A cartesian multi-index `(i₁, …, iₙ)` with digits in `{0, 1, 2}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MultiIndex(Vec<u8>);

impl MultiIndex {
    pub fn new(digits: Vec<u8>) -> Result<Self> {
        if let Some(&d) = digits.iter().find(|&&d| d > 2) {
            return Err(Error::Domain(format!("index digit {d} not in 0..3")));
        }
        Ok(Self(digits))
    }

    pub fn from_offset(rank: usize, mut offset: usize) -> Self {
        let mut digits = vec![0u8; rank];
        for t in (0..rank).rev() {
            digits[t] = (offset % 3) as u8;
            offset /= 3;
        }
        Self(digits)
    }

    pub fn offset(&self) -> usize {
        self.0.iter().fold(0, |acc, &d| acc * 3 + d as usize)
    }

    pub fn digits(&self) -> &[u8] {
        &self.0
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    /// Number of x, y and z digits.
    pub fn counts(&self) -> [usize; 3] {
        let mut c = [0; 3];
        for &d in &self.0 {
            c[d as usize] += 1;
        }
        c
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    rank: usize,
    entries: Vec<C64>,
}

impl Tensor {
    pub fn zeros(rank: usize) -> Self {
        Self { rank, entries: vec![C64::new(0.0, 0.0); pow3(rank)] }
    }

    pub fn scalar(value: C64) -> Self {
        Self { rank: 0, entries: vec![value] }
    }

    pub fn from_entries(rank: usize, entries: Vec<C64>) -> Result<Self> {
        check_rank(rank)?;
        if entries.len() != pow3(rank) {
            return Err(Error::EntryCount { expected: pow3(rank), found: entries.len() });
        }
        Ok(Self { rank, entries })
    }

    pub fn from_fn(rank: usize, mut f: impl FnMut(&[u8]) -> C64) -> Self {
        let entries = (0..pow3(rank))
            .map(|o| f(MultiIndex::from_offset(rank, o).digits()))
            .collect();
        Self { rank, entries }
    }

    pub fn vector(v: [C64; 3]) -> Self {
        Self { rank: 1, entries: v.to_vec() }
    }

    pub fn real_vector(v: [f64; 3]) -> Self {
        Self::vector(v.map(|x| C64::new(x, 0.0)))
    }

    /// Unit vector along axis `i`.
    pub fn unit(i: usize) -> Self {
        let mut t = Self::zeros(1);
        t.entries[i] = C64::new(1.0, 0.0);
        t
    }

    /// Kronecker δ as a rank-2 tensor.
    pub fn delta() -> Self {
        Self::from_fn(2, |d| C64::new(if d[0] == d[1] { 1.0 } else { 0.0 }, 0.0))
    }

    /// Levi-Civita symbol with ε_xyz = 1.
    pub fn levi_civita() -> Self {
        Self::from_fn(3, |d| C64::new(levi_civita(d[0] as usize, d[1] as usize, d[2] as usize), 0.0))
    }

    /// n-fold outer power of a vector.
    pub fn outer_power(v: &[C64; 3], n: usize) -> Self {
        Self::from_fn(n, |d| d.iter().map(|&i| v[i as usize]).product())
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [C64] {
        &mut self.entries
    }

    pub fn into_entries(self) -> Vec<C64> {
        self.entries
    }

    pub fn get(&self, index: &[usize]) -> C64 {
        debug_assert_eq!(index.len(), self.rank);
        self.entries[index.iter().fold(0, |acc, &d| acc * 3 + d)]
    }

    pub fn set(&mut self, index: &[usize], value: C64) {
        debug_assert_eq!(index.len(), self.rank);
        let o = index.iter().fold(0, |acc, &d| acc * 3 + d);
        self.entries[o] = value;
    }

    /// The single entry of a rank-0 tensor (the first entry otherwise).
    pub fn value(&self) -> C64 {
        self.entries[0]
    }

    pub fn conj(&self) -> Self {
        Self { rank: self.rank, entries: self.entries.iter().map(|z| z.conj()).collect() }
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { rank: self.rank, entries: self.entries.iter().map(|z| z * c).collect() }
    }

    pub fn scale_real(&self, c: f64) -> Self {
        Self { rank: self.rank, entries: self.entries.iter().map(|z| z * c).collect() }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn max_abs_diff(&self, other: &Tensor) -> f64 {
        assert_eq!(self.rank, other.rank, "rank mismatch");
        self.entries
            .iter()
            .zip(&other.entries)
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    /// Full contraction `Σ a_I b_I` without conjugation.
    pub fn dot(&self, other: &Tensor) -> C64 {
        assert_eq!(self.rank, other.rank, "rank mismatch");
        self.entries.iter().zip(&other.entries).map(|(a, b)| a * b).sum()
    }

    /// Hermitian inner product `Σ a_I* b_I`.
    pub fn inner(&self, other: &Tensor) -> C64 {
        assert_eq!(self.rank, other.rank, "rank mismatch");
        self.entries.iter().zip(&other.entries).map(|(a, b)| a.conj() * b).sum()
    }

    /// Contracts the last index with `v`.
    pub fn contract_last(&self, v: &[C64; 3]) -> Self {
        assert!(self.rank > 0, "cannot contract a scalar");
        let entries = self
            .entries
            .chunks_exact(3)
            .map(|c| c[0] * v[0] + c[1] * v[1] + c[2] * v[2])
            .collect();
        Self { rank: self.rank - 1, entries }
    }

    /// Contracts the first index with `v`.
    pub fn contract_first(&self, v: &[C64; 3]) -> Self {
        assert!(self.rank > 0, "cannot contract a scalar");
        let block = pow3(self.rank - 1);
        let entries = (0..block)
            .map(|o| {
                v[0] * self.entries[o] + v[1] * self.entries[block + o] + v[2] * self.entries[2 * block + o]
            })
            .collect();
        Self { rank: self.rank - 1, entries }
    }

    /// Contracts the last `k` indices with the same real vector.
    pub fn contract_last_real(&self, v: &[f64; 3], k: usize) -> Self {
        let cv = v.map(|x| C64::new(x, 0.0));
        let mut t = self.clone();
        for _ in 0..k {
            t = t.contract_last(&cv);
        }
        t
    }

    /// Applies the 3×3 matrix `m` to index `slot`: `out[…i…] = Σ_j m[i][j] a[…j…]`.
    pub fn apply_to_index(&self, slot: usize, m: &[[C64; 3]; 3]) -> Self {
        assert!(slot < self.rank, "slot out of range");
        let stride = pow3(self.rank - 1 - slot);
        let mut out = Self::zeros(self.rank);
        for (o, v) in out.entries.iter_mut().enumerate() {
            let i = (o / stride) % 3;
            let base = o - i * stride;
            *v = (0..3).map(|j| m[i][j] * self.entries[base + j * stride]).sum();
        }
        out
    }

    /// Applies `m` to every index.
    pub fn apply_to_all(&self, m: &[[C64; 3]; 3]) -> Self {
        (0..self.rank).fold(self.clone(), |t, slot| t.apply_to_index(slot, m))
    }

    /// `out[i_{perm[0]}, …] = a[i₀, …]`, i.e. index `t` of `self` moves to slot `perm[t]`.
    pub fn permute_indices(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.rank);
        let st = strides(self.rank);
        let mut out = Self::zeros(self.rank);
        for (o, v) in self.entries.iter().enumerate() {
            let mi = MultiIndex::from_offset(self.rank, o);
            let target: usize = mi.digits().iter().enumerate().map(|(t, &d)| d as usize * st[perm[t]]).sum();
            out.entries[target] = *v;
        }
        out
    }

    /// Largest deviation from symmetry under exchanges among the first `upto` indices.
    pub fn max_asymmetry(&self, upto: usize) -> f64 {
        let upto = upto.min(self.rank);
        let mut worst: f64 = 0.0;
        for t in 1..upto {
            let mut perm: Vec<usize> = (0..self.rank).collect();
            perm.swap(t - 1, t);
            worst = worst.max(self.max_abs_diff(&self.permute_indices(&perm)));
        }
        worst
    }

    /// Largest entry among all pair traces over the first `upto` indices.
    pub fn max_trace(&self, upto: usize) -> f64 {
        let upto = upto.min(self.rank);
        let mut worst: f64 = 0.0;
        for i in 0..upto {
            for j in i + 1..upto {
                let tr = trace_pair(self, i, j).expect("valid pair");
                worst = worst.max(tr.max_abs());
            }
        }
        worst
    }
}

pub fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

pub fn outer(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let rank = a.rank + b.rank;
    check_rank(rank)?;
    let mut entries = Vec::with_capacity(a.len() * b.len());
    for x in &a.entries {
        entries.extend(b.entries.iter().map(|y| x * y));
    }
    Ok(Tensor { rank, entries })
}

/// Contracts index `p.0` of `a` with index `p.1` of `b` for every pair.
/// Free indices of `a` come first, then those of `b`, each in original order.
pub fn contract(a: &Tensor, b: &Tensor, pairs: &[(usize, usize)]) -> Result<Tensor> {
    for (k, &(i, j)) in pairs.iter().enumerate() {
        if i >= a.rank || j >= b.rank {
            return Err(Error::InvalidIndexPair(i, j));
        }
        if pairs[..k].iter().any(|&(i2, j2)| i2 == i || j2 == j) {
            return Err(Error::InvalidIndexPair(i, j));
        }
    }
    let sa = strides(a.rank);
    let sb = strides(b.rank);
    let a_free: Vec<usize> = (0..a.rank).filter(|t| !pairs.iter().any(|p| p.0 == *t)).collect();
    let b_free: Vec<usize> = (0..b.rank).filter(|t| !pairs.iter().any(|p| p.1 == *t)).collect();
    let rank = a_free.len() + b_free.len();
    let p = pairs.len();
    let inner: Vec<(usize, usize)> = (0..pow3(p))
        .map(|c| {
            let mi = MultiIndex::from_offset(p, c);
            mi.digits().iter().zip(pairs).fold((0, 0), |(oa, ob), (&d, &(i, j))| {
                (oa + d as usize * sa[i], ob + d as usize * sb[j])
            })
        })
        .collect();
    let mut out = Tensor::zeros(rank);
    for (o, v) in out.entries.iter_mut().enumerate() {
        let mi = MultiIndex::from_offset(rank, o);
        let d = mi.digits();
        let base_a: usize = a_free.iter().zip(d).map(|(&t, &x)| x as usize * sa[t]).sum();
        let base_b: usize = b_free.iter().zip(&d[a_free.len()..]).map(|(&t, &x)| x as usize * sb[t]).sum();
        *v = inner.iter().map(|&(ia, ib)| a.entries[base_a + ia] * b.entries[base_b + ib]).sum();
    }
    Ok(out)
}

/// Sum over all `rank!` index permutations (not divided by `rank!`).
pub fn symmetrize(a: &Tensor) -> Tensor {
    if a.rank <= 8 {
        symmetrize_by_permutations(a)
    } else {
        symmetrize_by_multisets(a)
    }
}

fn symmetrize_by_permutations(a: &Tensor) -> Tensor {
    let n = a.rank;
    let st = strides(n);
    let mut out = Tensor::zeros(n);
    let mut perm: Vec<usize> = (0..n).collect();
    let mut accumulate = |perm: &[usize]| {
        // (I∘σ)_t = i_{σ(t)}, so digit u of I carries stride st[σ⁻¹(u)].
        let mut pstride = vec![0usize; n];
        for (t, &u) in perm.iter().enumerate() {
            pstride[u] = st[t];
        }
        let mut digits = vec![0usize; n];
        let mut poff = 0usize;
        for o in 0..out.entries.len() {
            out.entries[o] += a.entries[poff];
            let mut j = n;
            while j > 0 {
                j -= 1;
                if digits[j] == 2 {
                    digits[j] = 0;
                    poff -= 2 * pstride[j];
                } else {
                    digits[j] += 1;
                    poff += pstride[j];
                    break;
                }
            }
        }
    };
    // Heap's algorithm.
    let mut c = vec![0usize; n];
    accumulate(&perm);
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            accumulate(&perm);
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

fn symmetrize_by_multisets(a: &Tensor) -> Tensor {
    use std::collections::HashMap;
    let n = a.rank;
    let counts: Vec<[usize; 3]> = (0..a.len()).map(|o| MultiIndex::from_offset(n, o).counts()).collect();
    let mut sums: HashMap<[usize; 3], C64> = HashMap::new();
    for (o, c) in counts.iter().enumerate() {
        *sums.entry(*c).or_default() += a.entries[o];
    }
    let fact = |k: usize| (1..=k).map(|x| x as f64).product::<f64>();
    let entries = counts
        .iter()
        .map(|c| sums[c] * (fact(c[0]) * fact(c[1]) * fact(c[2])))
        .collect();
    Tensor { rank: n, entries }
}

/// Trace over indices `i` and `j`; the remaining indices keep their order.
pub fn trace_pair(a: &Tensor, i: usize, j: usize) -> Result<Tensor> {
    if i == j || i >= a.rank || j >= a.rank {
        return Err(Error::InvalidIndexPair(i, j));
    }
    let st = strides(a.rank);
    let rest: Vec<usize> = (0..a.rank).filter(|&t| t != i && t != j).collect();
    let mut out = Tensor::zeros(a.rank - 2);
    let diag = st[i] + st[j];
    for (o, v) in out.entries.iter_mut().enumerate() {
        let mi = MultiIndex::from_offset(rest.len(), o);
        let base: usize = rest.iter().zip(mi.digits()).map(|(&t, &d)| d as usize * st[t]).sum();
        *v = (0..3).map(|k| a.entries[base + k * diag]).sum();
    }
    Ok(out)
}

impl Add<&Tensor> for &Tensor {
    type Output = Tensor;
    fn add(self, rhs: &Tensor) -> Tensor {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub<&Tensor> for &Tensor {
    type Output = Tensor;
    fn sub(self, rhs: &Tensor) -> Tensor {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl AddAssign<&Tensor> for Tensor {
    fn add_assign(&mut self, rhs: &Tensor) {
        assert_eq!(self.rank, rhs.rank, "rank mismatch");
        for (a, b) in self.entries.iter_mut().zip(&rhs.entries) {
            *a += b;
        }
    }
}

impl SubAssign<&Tensor> for Tensor {
    fn sub_assign(&mut self, rhs: &Tensor) {
        assert_eq!(self.rank, rhs.rank, "rank mismatch");
        for (a, b) in self.entries.iter_mut().zip(&rhs.entries) {
            *a -= b;
        }
    }
}

impl Neg for &Tensor {
    type Output = Tensor;
    fn neg(self) -> Tensor {
        self.scale_real(-1.0)
    }
}

impl Mul<C64> for &Tensor {
    type Output = Tensor;
    fn mul(self, rhs: C64) -> Tensor {
        self.scale(rhs)
    }
}

impl Mul<f64> for &Tensor {
    type Output = Tensor;
    fn mul(self, rhs: f64) -> Tensor {
        self.scale_real(rhs)
    }
}

impl Tensor {
    /// `self += c · other`.
    pub fn add_scaled(&mut self, c: C64, other: &Tensor) {
        assert_eq!(self.rank, other.rank, "rank mismatch");
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            *a += c * b;
        }
    }
}

#[derive(Serialize, Deserialize)]
struct TensorJson {
    rank: usize,
    entries: Vec<[f64; 2]>,
}

impl Serialize for Tensor {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TensorJson { rank: self.rank, entries: self.entries.iter().map(|z| [z.re, z.im]).collect() }
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Tensor {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = TensorJson::deserialize(d)?;
        let entries = raw.entries.iter().map(|p| C64::new(p[0], p[1])).collect();
        Tensor::from_entries(raw.rank, entries).map_err(serde::de::Error::custom)
    }
}

//! Tensor operators as blocks of matrix elements, SITO ↔ CITO duality, reduced
//! matrix elements and the Wigner–Eckart theorem for four symmetry classes.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::angular::{cg, cg_int, j_matrices, m_index, m_values, HalfInt};
use crate::basis::{eps, irreducible_part, lambda, partial_basis, sym_basis, PartialRoute, SymRoute};
use crate::error::{Error, Result};
use crate::harmonics::{n_l, theta};
use crate::rotation::apply_spin;
use crate::special::{double_factorial, double_factorial_ratio, factorial, sign};
use crate::tensor::{levi_civita, pow3, MultiIndex, Tensor};

const ZERO: C64 = C64::new(0.0, 0.0);

fn dim(j: HalfInt) -> usize {
    j.twice() as usize + 1
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymmetryClass {
    Irreducible,
    TotallySymmetric,
    /// Rank n+1, symmetric and traceless in the first n indices.
    PartiallyIrreducible,
    Rank2Generic,
}

/// A rank-n cartesian tensor operator given by its matrix elements
/// ⟨j′ m′| O_{i₁…iₙ} |j m⟩; one (2j′+1)×(2j+1) matrix per cartesian component.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorBlock {
    pub rank: usize,
    pub bra_j: HalfInt,
    pub ket_j: HalfInt,
    comps: Vec<DMatrix<C64>>,
}

impl OperatorBlock {
    pub fn new(rank: usize, bra_j: HalfInt, ket_j: HalfInt, comps: Vec<DMatrix<C64>>) -> Result<Self> {
        if comps.len() != pow3(rank) {
            return Err(Error::EntryCount { expected: pow3(rank), found: comps.len() });
        }
        if comps.iter().any(|c| c.nrows() != dim(bra_j) || c.ncols() != dim(ket_j)) {
            return Err(Error::QuantumNumbers("component matrix shape does not match (j′, j)".into()));
        }
        Ok(Self { rank, bra_j, ket_j, comps })
    }

    pub fn zeros(rank: usize, bra_j: HalfInt, ket_j: HalfInt) -> Self {
        let z = DMatrix::from_element(dim(bra_j), dim(ket_j), ZERO);
        Self { rank, bra_j, ket_j, comps: vec![z; pow3(rank)] }
    }

    /// Builds the block from a function returning the tensor ⟨j′ m′|O|j m⟩.
    pub fn from_elements(rank: usize, bra_j: HalfInt, ket_j: HalfInt, mut f: impl FnMut(HalfInt, HalfInt) -> Tensor) -> Self {
        let mut out = Self::zeros(rank, bra_j, ket_j);
        for (a, &mp) in m_values(bra_j).iter().enumerate() {
            for (b, &m) in m_values(ket_j).iter().enumerate() {
                let t = f(mp, m);
                for (off, v) in t.entries().iter().enumerate() {
                    out.comps[off][(a, b)] = *v;
                }
            }
        }
        out
    }

    pub fn components(&self) -> &[DMatrix<C64>] {
        &self.comps
    }

    pub fn component(&self, index: &[usize]) -> &DMatrix<C64> {
        let off = index.iter().fold(0, |acc, &i| acc * 3 + i);
        &self.comps[off]
    }

    /// The tensor ⟨j′ m′| O |j m⟩.
    pub fn element(&self, mp: HalfInt, m: HalfInt) -> Tensor {
        let (a, b) = (m_index(self.bra_j, mp), m_index(self.ket_j, m));
        Tensor::from_entries(self.rank, self.comps.iter().map(|c| c[(a, b)]).collect()).expect("consistent rank")
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().flat_map(|c| c.iter()).fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn max_abs_diff(&self, other: &OperatorBlock) -> f64 {
        self.comps.iter().zip(&other.comps).flat_map(|(a, b)| a.iter().zip(b.iter())).fold(0.0, |m, (x, y)| m.max((x - y).norm()))
    }

    /// Σ_I t_I O_I.
    pub fn contract_full(&self, t: &Tensor) -> DMatrix<C64> {
        assert_eq!(t.rank(), self.rank, "rank mismatch");
        let mut out = DMatrix::from_element(dim(self.bra_j), dim(self.ket_j), ZERO);
        for (c, v) in self.comps.iter().zip(t.entries()) {
            if *v != ZERO {
                out += c * *v;
            }
        }
        out
    }

    /// Contracts the last two indices with each other.
    pub fn trace_last_pair(&self) -> OperatorBlock {
        assert!(self.rank >= 2, "rank below 2");
        let comps = (0..pow3(self.rank - 2)).map(|off| (0..3).map(|k| &self.comps[off * 9 + k * 4]).fold(
            DMatrix::from_element(dim(self.bra_j), dim(self.ket_j), ZERO),
            |acc, c| acc + c,
        ));
        OperatorBlock { rank: self.rank - 2, bra_j: self.bra_j, ket_j: self.ket_j, comps: comps.collect() }
    }

    /// Componentwise operator product O_I P_J as a rank-(n+k) block.
    pub fn product(&self, other: &OperatorBlock) -> Result<OperatorBlock> {
        if self.ket_j != other.bra_j {
            return Err(Error::QuantumNumbers("inner angular momenta differ".into()));
        }
        let mut comps = Vec::with_capacity(self.comps.len() * other.comps.len());
        for a in &self.comps {
            for b in &other.comps {
                comps.push(a * b);
            }
        }
        Ok(OperatorBlock { rank: self.rank + other.rank, bra_j: self.bra_j, ket_j: other.ket_j, comps })
    }

    /// Applies `f` to every matrix-element tensor.
    pub fn map_elements(&self, rank: usize, mut f: impl FnMut(&Tensor) -> Tensor) -> OperatorBlock {
        Self::from_elements(rank, self.bra_j, self.ket_j, |mp, m| f(&self.element(mp, m)))
    }

    /// max_k |[J_k, O_I] + (S₍ₙ₎_k)_{IJ} O_J|, relative to the largest element when that exceeds 1.
    pub fn commutator_residual(&self) -> f64 {
        let jb = j_matrices(self.bra_j);
        let jk = j_matrices(self.ket_j);
        let scale = self.max_abs().max(1.0);
        let mut worst: f64 = 0.0;
        for k in 0..3 {
            let spun = self.map_elements(self.rank, |t| apply_spin(k, t));
            for (o, s) in self.comps.iter().zip(&spun.comps) {
                let r = &jb[k] * o - o * &jk[k] + s;
                worst = worst.max(r.iter().fold(0.0, |m, z| m.max(z.norm())));
            }
        }
        worst / scale
    }

    /// max_I |O_I − O_I†|; requires j′ = j.
    pub fn hermiticity_residual(&self) -> f64 {
        assert_eq!(self.bra_j, self.ket_j, "hermiticity needs a square block");
        self.comps.iter().map(|c| (c - c.adjoint()).iter().fold(0.0, |m: f64, z| m.max(z.norm()))).fold(0.0, f64::max)
    }
}

/// SITO components O_{nm}, stored for m = n, n−1, …, −n.
#[derive(Clone, Debug, PartialEq)]
pub struct SitoComponents {
    pub n: usize,
    pub bra_j: HalfInt,
    pub ket_j: HalfInt,
    comps: Vec<DMatrix<C64>>,
}

impl SitoComponents {
    pub fn new(n: usize, bra_j: HalfInt, ket_j: HalfInt, comps: Vec<DMatrix<C64>>) -> Result<Self> {
        if comps.len() != 2 * n + 1 {
            return Err(Error::EntryCount { expected: 2 * n + 1, found: comps.len() });
        }
        if comps.iter().any(|c| c.nrows() != dim(bra_j) || c.ncols() != dim(ket_j)) {
            return Err(Error::QuantumNumbers("component matrix shape does not match (j′, j)".into()));
        }
        Ok(Self { n, bra_j, ket_j, comps })
    }

    pub fn get(&self, m: i32) -> &DMatrix<C64> {
        &self.comps[(self.n as i32 - m) as usize]
    }

    /// max_i,m |[J_i, O_nm] − Σ_m′ ⟨n m′|J_i|n m⟩ O_nm′|.
    pub fn commutator_residual(&self) -> f64 {
        let jb = j_matrices(self.bra_j);
        let jk = j_matrices(self.ket_j);
        let jn = j_matrices(HalfInt::int(self.n as i32));
        let scale = self.comps.iter().flat_map(|c| c.iter()).fold(1.0f64, |m, z| m.max(z.norm()));
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for (b, o) in self.comps.iter().enumerate() {
                let mut r = &jb[i] * o - o * &jk[i];
                for (a, op) in self.comps.iter().enumerate() {
                    r -= op * jn[i][(a, b)];
                }
                worst = worst.max(r.iter().fold(0.0, |m, z| m.max(z.norm())));
            }
        }
        worst / scale
    }

    /// max_m |O_nm − (−1)^m O_{n(−m)}†|; requires j′ = j.
    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.n as i32;
        (-n..=n)
            .map(|m| (self.get(m) - self.get(-m).adjoint() * C64::new(sign(m as i64), 0.0)).iter().fold(0.0, |a: f64, z| a.max(z.norm())))
            .fold(0.0, f64::max)
    }

    /// ⟨j′‖O‖j⟩ from the channel m′ = j′ with the largest admissible m.
    pub fn reduced(&self) -> C64 {
        let (jp, j) = (self.bra_j, self.ket_j);
        let n = HalfInt::int(self.n as i32);
        if !triangle(j, n, jp) {
            return ZERO;
        }
        let mp = jp;
        let m = m_values(j).into_iter().find(|&m| (mp - m).abs() <= n).expect("triangle holds");
        let k = mp - m;
        let c = cg(j, m, n, k, jp, mp).expect("valid quantum numbers");
        self.get(k.as_int().expect("integer")).index((m_index(jp, mp), m_index(j, m))) / c
    }

    /// Largest deviation of ⟨j′m′|O_nk|jm⟩/CG from [`reduced`](Self::reduced) over all channels with |CG| > 1e−6.
    pub fn reduced_spread(&self) -> f64 {
        let (jp, j) = (self.bra_j, self.ket_j);
        let n = HalfInt::int(self.n as i32);
        let r = self.reduced();
        let mut worst: f64 = 0.0;
        for k in -(self.n as i32)..=self.n as i32 {
            for &m in &m_values(j) {
                let mp = m + HalfInt::int(k);
                if mp.abs() > jp {
                    continue;
                }
                let c = cg(j, m, n, HalfInt::int(k), jp, mp).expect("valid");
                let v = self.get(k)[(m_index(jp, mp), m_index(j, m))];
                if c.abs() > 1e-6 {
                    worst = worst.max((v / c - r).norm());
                } else {
                    worst = worst.max(v.norm());
                }
            }
        }
        worst
    }
}

fn triangle(a: HalfInt, b: HalfInt, c: HalfInt) -> bool {
    c.twice() >= (a.twice() - b.twice()).abs() && c.twice() <= a.twice() + b.twice() && (a.twice() + b.twice() + c.twice()) % 2 == 0
}

/// O_nm = ε₍ₙ₎(m)·O. Fails if the block is not a tensor operator.
pub fn sito_from_cito(o: &OperatorBlock) -> Result<SitoComponents> {
    let res = o.commutator_residual();
    if res > 1e-9 {
        return Err(Error::NotTensorOperator(res));
    }
    Ok(sito_unchecked(o))
}

fn sito_unchecked(o: &OperatorBlock) -> SitoComponents {
    let n = o.rank as i32;
    let comps = (-n..=n).rev().map(|m| o.contract_full(&eps(o.rank, m))).collect();
    SitoComponents { n: o.rank, bra_j: o.bra_j, ket_j: o.ket_j, comps }
}

/// O_I = Σ_m ε₍ₙ₎(m)*_I O_nm.
pub fn cito_from_sito(s: &SitoComponents) -> OperatorBlock {
    let n = s.n;
    let mut out = OperatorBlock::zeros(n, s.bra_j, s.ket_j);
    for m in -(n as i32)..=n as i32 {
        let e = eps(n, m).conj();
        for (c, v) in out.comps.iter_mut().zip(e.entries()) {
            if *v != ZERO {
                *c += s.get(m) * *v;
            }
        }
    }
    out
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RmeKind {
    Ylm,
    /// ⟨ℓ′‖ε₍ₙ₎·r̂ ⊗ … ⊗ r̂‖ℓ⟩ = ⟨ℓ′‖Y_n‖ℓ⟩ / N_n.
    RhatPower,
    JPower,
    GradientOp,
    Generic,
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct ReducedMe {
    pub bra_j: HalfInt,
    pub ket_j: HalfInt,
    pub n: usize,
    pub q: Option<usize>,
    pub value: C64,
    pub kind: RmeKind,
}

fn real_rme(bra: usize, ket: usize, n: usize, q: Option<usize>, v: f64, kind: RmeKind) -> ReducedMe {
    ReducedMe { bra_j: HalfInt::int(bra as i32), ket_j: HalfInt::int(ket as i32), n, q, value: C64::new(v, 0.0), kind }
}

/// ⟨ℓ′‖Y_n‖ℓ⟩ = √((2ℓ+1)(2n+1)/(4π(2ℓ′+1))) CG(ℓ0 n0|ℓ′0).
pub fn reduced_me_ylm(lp: usize, n: usize, l: usize) -> ReducedMe {
    let v = (((2 * l + 1) * (2 * n + 1)) as f64 / (4.0 * PI * (2 * lp + 1) as f64)).sqrt() * cg_int(l as i32, 0, n as i32, 0, lp as i32, 0);
    real_rme(lp, l, n, None, v, RmeKind::Ylm)
}

/// ⟨ℓ′‖ε₍ₙ₎·r̂^⊗n‖ℓ⟩.
pub fn reduced_me_rhat(lp: usize, n: usize, l: usize) -> ReducedMe {
    let v = reduced_me_ylm(lp, n, l).value.re / n_l(n);
    real_rme(lp, l, n, None, v, RmeKind::RhatPower)
}

/// ⟨j‖ε₍ₙ₎·J^⊗n‖j⟩ in closed form; zero for n > 2j.
pub fn reduced_me_jpow(j: HalfInt, n: usize) -> ReducedMe {
    let tj = j.twice() as usize;
    let v = if n > tj {
        0.0
    } else {
        let nf = n as i64;
        2f64.powi(-(n as i32)) * (factorial(n) / double_factorial(2 * nf - 1).expect("odd")).sqrt()
            * (factorial(tj + n + 1) / ((tj + 1) as f64 * factorial(tj - n))).sqrt()
    };
    ReducedMe { bra_j: j, ket_j: j, n, q: None, value: C64::new(v, 0.0), kind: RmeKind::JPower }
}

/// Σ_I t_I M_{i₁} ⋯ M_{iₙ} for a rank-n tensor t and three square matrices.
pub fn contract_with_matrices(t: &Tensor, mats: &[DMatrix<C64>; 3]) -> DMatrix<C64> {
    fn walk(entries: &[C64], mats: &[DMatrix<C64>; 3]) -> DMatrix<C64> {
        let d = mats[0].nrows();
        if entries.len() == 1 {
            return DMatrix::identity(d, d) * entries[0];
        }
        let third = entries.len() / 3;
        let mut out = DMatrix::from_element(d, d, ZERO);
        for i in 0..3 {
            let block = &entries[i * third..(i + 1) * third];
            if block.iter().all(|z| *z == ZERO) {
                continue;
            }
            out += &mats[i] * walk(block, mats);
        }
        out
    }
    walk(t.entries(), mats)
}

/// ⟨j‖ε₍ₙ₎·J^⊗n‖j⟩ from dense J matrices.
pub fn reduced_me_jpow_direct(j: HalfInt, n: usize) -> ReducedMe {
    let mats = j_matrices(j);
    let comps = (-(n as i32)..=n as i32).rev().map(|m| contract_with_matrices(&eps(n, m), &mats)).collect();
    let s = SitoComponents { n, bra_j: j, ket_j: j, comps };
    ReducedMe { bra_j: j, ket_j: j, n, q: None, value: s.reduced(), kind: RmeKind::JPower }
}

/// ⟨ℓ′‖ε₍ᵣ₎·O₍ₙ,q₎‖ℓ⟩ with r = n − q + 1.
pub fn reduced_me_gradient_op(lp: usize, n: usize, q: usize, l: usize) -> Result<ReducedMe> {
    if q == 0 || q > n {
        return Err(Error::QuantumNumbers(format!("need 1 ≤ q ≤ n, got q = {q}, n = {n}")));
    }
    let r = n - q + 1;
    let c = cg_int(l as i32, 0, r as i32, 0, lp as i32, 0);
    let e = lp as i64 - l as i64 + r as i64;
    let v = if c == 0.0 || e % 2 != 0 {
        0.0
    } else {
        let (li, lpi, ni, qi) = (l as i64, lp as i64, n as i64, q as i64);
        sign(e / 2) * (factorial(r) / double_factorial(2 * r as i64 - 1).expect("odd")).sqrt()
            * ((2 * l + 1) as f64 / (2 * lp + 1) as f64).sqrt()
            * double_factorial_ratio(li - qi + 2, lpi - ni + 1)
            * double_factorial_ratio(lpi + ni - 2, li + qi - 3)
            * c
    };
    Ok(real_rme(lp, l, n, Some(q), v, RmeKind::GradientOp))
}

/// Coefficient of the (ℓ′, s) term of |r|ⁿ∂ⁿY_ℓm assembled from the trace
/// formula and [`reduced_me_gradient_op`]; equals Θ₍ₙₛ₎(ℓ,ℓ′) CG(ℓ0 s0|ℓ′0).
pub fn assembled_theta(n: usize, s: usize, l: usize, lp: usize) -> Result<f64> {
    let lam = lambda(n, s)?;
    let nd = (n - s) / 2;
    let (li, ni, si) = (l as i64, n as i64, s as i64);
    let trace = sign(nd as i64) * (l * (l + 1)) as f64 * double_factorial_ratio(li - 1, li - ni + si + 1)
        * double_factorial_ratio(li + ni - si - 2, li);
    let rme = if s == 0 {
        // ε₍₀₎·O₍ₙ,ₙ₊₁₎ is the identity
        if lp == l {
            1.0
        } else {
            0.0
        }
    } else {
        reduced_me_gradient_op(lp, n, n - s + 1, l)?.value.re
    };
    Ok(((2 * lp + 1) as f64 / (2 * l + 1) as f64).sqrt() * sign(lp as i64 - li) * lam * lam / factorial(n) * trace * rme)
}

/// Reduced matrix elements for one operator class, keyed by channel.
///
/// Irreducible: {n}. Totally symmetric: {s : n − s even}. Partially irreducible
/// (rank n+1): {n−1, n, n+1}. Rank-2 generic: {0, 1, 2}.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReducedSet {
    pub class: SymmetryClass,
    pub rank: usize,
    pub values: BTreeMap<usize, C64>,
}

impl ReducedSet {
    pub fn required_channels(class: SymmetryClass, rank: usize) -> Vec<usize> {
        match class {
            SymmetryClass::Irreducible => vec![rank],
            SymmetryClass::TotallySymmetric => (rank % 2..=rank).step_by(2).collect(),
            SymmetryClass::PartiallyIrreducible => {
                let n = rank - 1;
                (n.saturating_sub(1)..=n + 1).collect()
            }
            SymmetryClass::Rank2Generic => vec![0, 1, 2],
        }
    }

    fn get(&self, s: usize) -> Result<C64> {
        self.values.get(&s).copied().ok_or(Error::MissingReducedMe(s))
    }
}

fn cg_h(j: HalfInt, m: HalfInt, s: usize, k: i32, jp: HalfInt, mp: HalfInt) -> f64 {
    if k.unsigned_abs() as usize > s {
        return 0.0;
    }
    cg(j, m, HalfInt::int(s as i32), HalfInt::int(k), jp, mp).expect("valid quantum numbers")
}

/// ⟨j′ m′| O_{i₁…} |j m⟩ assembled from reduced matrix elements.
pub fn we_matrix_element(rme: &ReducedSet, jp: HalfInt, mp: HalfInt, j: HalfInt, m: HalfInt) -> Result<Tensor> {
    let n = rme.rank;
    let Some(k) = (mp - m).as_int() else {
        return Err(Error::QuantumNumbers("m′ − m must be an integer".into()));
    };
    if mp.abs() > jp || m.abs() > j {
        return Err(Error::QuantumNumbers("|m| exceeds j".into()));
    }
    let mut out = Tensor::zeros(n);
    match rme.class {
        SymmetryClass::Irreducible => {
            let c = cg_h(j, m, n, k, jp, mp);
            if c != 0.0 {
                out.add_scaled(rme.get(n)? * c, &eps(n, k).conj());
            }
        }
        SymmetryClass::TotallySymmetric => {
            for s in ReducedSet::required_channels(rme.class, n) {
                let r = rme.get(s)?;
                let c = cg_h(j, m, s, k, jp, mp);
                if c != 0.0 {
                    let b = sym_basis(n, s, k, SymRoute::Definition)?;
                    out.add_scaled(r * (c * lambda(n, s)?), &b.tensor.conj());
                }
            }
        }
        SymmetryClass::PartiallyIrreducible => {
            if n == 0 {
                return Err(Error::QuantumNumbers("partially irreducible tensors have rank ≥ 1".into()));
            }
            for s in ReducedSet::required_channels(rme.class, n) {
                let r = rme.get(s)?;
                let c = cg_h(j, m, s, k, jp, mp);
                if c != 0.0 {
                    let b = partial_basis(n - 1, s, k, PartialRoute::CgSum)?;
                    out.add_scaled(r * c, &b.tensor.conj());
                }
            }
        }
        SymmetryClass::Rank2Generic => {
            if n != 2 {
                return Err(Error::RankMismatch { expected: 2, found: n });
            }
            let c2 = cg_h(j, m, 2, k, jp, mp);
            if c2 != 0.0 {
                out.add_scaled(rme.get(2)? * c2, &eps(2, k).conj());
            }
            let c1 = cg_h(j, m, 1, k, jp, mp);
            if c1 != 0.0 {
                let e1 = eps(1, k).conj();
                let t = Tensor::from_fn(2, |d| (0..3).map(|kk| e1.get(&[kk]) * levi_civita(d[0] as usize, d[1] as usize, kk)).sum());
                out.add_scaled(rme.get(1)? * c1, &t);
            }
            if jp == j && mp == m {
                out.add_scaled(rme.get(0)?, &Tensor::delta());
            }
        }
    }
    Ok(out)
}

/// Extracts the reduced set of a block for the given class.
pub fn reduced_from_block(o: &OperatorBlock, class: SymmetryClass) -> Result<ReducedSet> {
    let n = o.rank;
    let mut values = BTreeMap::new();
    match class {
        SymmetryClass::Irreducible => {
            values.insert(n, sito_unchecked(o).reduced());
        }
        SymmetryClass::TotallySymmetric => {
            let mut traced = o.clone();
            let mut s = n;
            loop {
                values.insert(s, sito_unchecked(&traced).reduced());
                if s < 2 {
                    break;
                }
                traced = traced.trace_last_pair();
                s -= 2;
            }
        }
        SymmetryClass::PartiallyIrreducible => {
            let nn = n - 1;
            for s in ReducedSet::required_channels(class, n) {
                let comps = (-(s as i32)..=s as i32)
                    .rev()
                    .map(|k| Ok(o.contract_full(&partial_basis(nn, s, k, PartialRoute::CgSum)?.tensor)))
                    .collect::<Result<Vec<_>>>()?;
                values.insert(s, SitoComponents::new(s, o.bra_j, o.ket_j, comps)?.reduced());
            }
        }
        SymmetryClass::Rank2Generic => {
            if n != 2 {
                return Err(Error::RankMismatch { expected: 2, found: n });
            }
            let sym = o.map_elements(2, |t| irreducible_part(&(t + &t.permute_indices(&[1, 0])).scale_real(0.5)));
            values.insert(2, sito_unchecked(&sym).reduced());
            let vec = o.map_elements(1, |t| {
                Tensor::from_fn(1, |d| {
                    let h = d[0] as usize;
                    let mut acc = ZERO;
                    for a in 0..3 {
                        for b in 0..3 {
                            acc += t.get(&[a, b]) * levi_civita(h, a, b) * 0.5;
                        }
                    }
                    acc
                })
            });
            values.insert(1, sito_unchecked(&vec).reduced());
            let scalar = o.trace_last_pair();
            let sc = sito_unchecked(&scalar);
            values.insert(0, if o.bra_j == o.ket_j { sc.get(0)[(0, 0)] / 3.0 } else { ZERO });
        }
    }
    Ok(ReducedSet { class, rank: n, values })
}

/// Assembles the full block from a reduced set.
pub fn block_from_reduced(rme: &ReducedSet, bra_j: HalfInt, ket_j: HalfInt) -> Result<OperatorBlock> {
    let mut err = None;
    let b = OperatorBlock::from_elements(rme.rank, bra_j, ket_j, |mp, m| match we_matrix_element(rme, bra_j, mp, ket_j, m) {
        Ok(t) => t,
        Err(e) => {
            err.get_or_insert(e);
            Tensor::zeros(rme.rank)
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(b),
    }
}

/// κ′_ℓ(s) = 2^ℓ √((2s−ℓ)! (2ℓ+1)!! / (ℓ! (2s+ℓ+1)!)).
pub fn kappa_prime(s: HalfInt, l: usize) -> f64 {
    let ts = s.twice() as usize;
    2f64.powi(l as i32)
        * (factorial(ts - l) * double_factorial(2 * l as i64 + 1).expect("positive") / (factorial(l) * factorial(ts + l + 1))).sqrt()
}

/// T_ℓm(s) = κ′_ℓ(s) ε₍ℓ₎(m)·S^⊗ℓ on the (2s+1)-dimensional spin space.
pub fn polarization_operator(s: HalfInt, l: usize, m: i32) -> Result<DMatrix<C64>> {
    if l > s.twice() as usize {
        return Err(Error::QuantumNumbers(format!("l = {l} exceeds 2s = {}", s.twice())));
    }
    if m.unsigned_abs() as usize > l {
        return Err(Error::QuantumNumbers(format!("|m| = {} exceeds l = {l}", m.abs())));
    }
    Ok(contract_with_matrices(&eps(l, m), &j_matrices(s)) * C64::new(kappa_prime(s, l), 0.0))
}

/// ⟨j‖ε₍ₙ₎·r̂^⊗n‖j⟩ / ⟨j‖ε₍ₙ₎·J^⊗n‖j⟩ for integer j.
pub fn stevens_factor(j: usize, n: usize) -> Result<f64> {
    let jp = reduced_me_jpow(HalfInt::int(j as i32), n).value.re;
    if jp == 0.0 {
        return Err(Error::Domain(format!("⟨j‖J^n‖j⟩ vanishes for j = {j}, n = {n}")));
    }
    Ok(reduced_me_rhat(j, n, j).value.re / jp)
}

/// C(j,2) = −4 √(j(j+1)) √((2j+1)/((2j−1)(2j+3))) √((2j−2)!/(2j+3)!).
pub fn stevens_c2(j: usize) -> Result<f64> {
    if j == 0 {
        return Err(Error::Domain("C(j,2) needs j ≥ 1".into()));
    }
    let jf = j as f64;
    Ok(-4.0 * (jf * (jf + 1.0)).sqrt() * ((2.0 * jf + 1.0) / ((2.0 * jf - 1.0) * (2.0 * jf + 3.0))).sqrt()
        * (factorial(2 * j - 2) / factorial(2 * j + 3)).sqrt())
}

/// ∫ Y_ℓ′m′* ∂_{i₁}…∂_{iₙ} Y_ℓm over the unit sphere (the coefficient of |r|^{−n}).
pub fn momentum_sandwich(lp: usize, mp: i32, n: usize, l: usize, m: i32) -> Result<Tensor> {
    if l < n {
        return Err(Error::Domain(format!("derivative order {n} exceeds l = {l}")));
    }
    if mp.unsigned_abs() as usize > lp || m.unsigned_abs() as usize > l {
        return Err(Error::QuantumNumbers("|m| exceeds l".into()));
    }
    let mut out = Tensor::zeros(n);
    let k = m - mp;
    for s in (n % 2..=n).step_by(2) {
        if k.unsigned_abs() as usize > s {
            continue;
        }
        let c = cg_int(l as i32, 0, s as i32, 0, lp as i32, 0) * cg_int(lp as i32, mp, s as i32, k, l as i32, m);
        if c == 0.0 {
            continue;
        }
        let th = theta(n, s, l, lp)?;
        let b = sym_basis(n, s, k, SymRoute::Definition)?;
        out.add_scaled(C64::new(th * factorial(n) / lambda(n, s)? * c, 0.0), &b.tensor);
    }
    Ok(out)
}

/// Offsets of a rank-n multi-index, in flat order.
pub fn multi_indices(n: usize) -> impl Iterator<Item = MultiIndex> {
    (0..pow3(n)).map(move |off| MultiIndex::from_offset(n, off))
}

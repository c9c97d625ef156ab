//! Independent reference computations used to cross-check the main routines.
//!
//! Nothing here calls the constructions it is meant to check.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::angular::{j_matrices, m_values, HalfInt};
use crate::poly::RadialPoly;
use crate::quadrature::SphereQuadrature;
use crate::rotation::RotationParams;
use crate::special::{double_factorial, factorial};
use crate::tensor::{outer, pow3, symmetrize, trace_pair, Tensor};
use crate::wigner_eckart::OperatorBlock;

/// Central-difference step used for derivative order `n` before one Richardson level.
pub fn fd_step(n: usize) -> f64 {
    match n {
        0 | 1 => 1e-3,
        2 => 4e-3,
        _ => 3e-3,
    }
}

/// ∂_{i₁}…∂_{iₙ} f at `at` by central differences with one Richardson level.
pub fn fd_derivative_tensor(f: &dyn Fn([f64; 3]) -> C64, n: usize, at: [f64; 3]) -> Tensor {
    fd_derivative_tensor_with(f, n, at, fd_step(n))
}

pub fn fd_derivative_tensor_with(f: &dyn Fn([f64; 3]) -> C64, n: usize, at: [f64; 3], h: f64) -> Tensor {
    let coarse = central(f, n, at, h);
    let fine = central(f, n, at, h / 2.0);
    &fine.scale_real(4.0 / 3.0) - &coarse.scale_real(1.0 / 3.0)
}

fn central(f: &dyn Fn([f64; 3]) -> C64, n: usize, at: [f64; 3], h: f64) -> Tensor {
    Tensor::from_fn(n, |digits| {
        let mut acc = C64::new(0.0, 0.0);
        for signs in 0..(1usize << n) {
            let mut p = at;
            let mut sgn = 1.0;
            for (k, &d) in digits.iter().enumerate() {
                if signs >> k & 1 == 1 {
                    p[d as usize] -= h;
                    sgn = -sgn;
                } else {
                    p[d as usize] += h;
                }
            }
            acc += f(p) * sgn;
        }
        acc / (2.0 * h).powi(n as i32)
    })
}

/// Clebsch–Gordan coefficients for one (j₁, j₂) pair, built by lowering from
/// the stretched state and orthogonalizing each new top state.
pub struct LadderTable {
    j1: HalfInt,
    j2: HalfInt,
    states: HashMap<(i32, i32), DVector<f64>>,
}

impl LadderTable {
    pub fn new(j1: HalfInt, j2: HalfInt) -> Self {
        let m1s = m_values(j1);
        let m2s = m_values(j2);
        let d2 = m2s.len();
        let dim = m1s.len() * d2;
        let idx = |a: usize, b: usize| a * d2 + b;
        let total_m = |k: usize| m1s[k / d2].twice() + m2s[k % d2].twice();
        let lower = |v: &DVector<f64>| {
            let mut out = DVector::zeros(dim);
            for a in 0..m1s.len() {
                for b in 0..d2 {
                    let c = v[idx(a, b)];
                    if c == 0.0 {
                        continue;
                    }
                    if a + 1 < m1s.len() {
                        out[idx(a + 1, b)] += c * ladder(j1, m1s[a]);
                    }
                    if b + 1 < d2 {
                        out[idx(a, b + 1)] += c * ladder(j2, m2s[b]);
                    }
                }
            }
            out
        };
        let mut states: HashMap<(i32, i32), DVector<f64>> = HashMap::new();
        let tmax = j1.twice() + j2.twice();
        let tmin = (j1.twice() - j2.twice()).abs();
        for tj in (tmin..=tmax).rev().step_by(2) {
            let sub: Vec<usize> = (0..dim).filter(|&k| total_m(k) == tj).collect();
            let mut best: Option<DVector<f64>> = None;
            for &k in &sub {
                let mut v = DVector::zeros(dim);
                v[k] = 1.0;
                for tjp in (tj + 2..=tmax).step_by(2) {
                    let u = &states[&(tjp, tj)];
                    let p = u.dot(&v);
                    v -= u * p;
                }
                if best.as_ref().map_or(true, |b| v.norm() > b.norm()) {
                    best = Some(v);
                }
            }
            let mut top = best.expect("non-empty subspace");
            top /= top.norm();
            // Condon–Shortley: ⟨j₁ j₁; j₂ (J − j₁) | J J⟩ > 0
            let lead = sub.iter().map(|&k| top[k]).find(|c| c.abs() > 1e-12).expect("nonzero state");
            if lead < 0.0 {
                top = -top;
            }
            let mut tm = tj;
            let mut v = top;
            loop {
                states.insert((tj, tm), v.clone());
                if tm == -tj {
                    break;
                }
                let j = HalfInt::from_twice(tj);
                let norm = ladder(j, HalfInt::from_twice(tm));
                v = lower(&v) / norm;
                tm -= 2;
            }
        }
        Self { j1, j2, states }
    }

    pub fn get(&self, m1: HalfInt, m2: HalfInt, j: HalfInt, m: HalfInt) -> f64 {
        if m1 + m2 != m || m1.abs() > self.j1 || m2.abs() > self.j2 {
            return 0.0;
        }
        let Some(v) = self.states.get(&(j.twice(), m.twice())) else { return 0.0 };
        let a = ((self.j1.twice() - m1.twice()) / 2) as usize;
        let b = ((self.j2.twice() - m2.twice()) / 2) as usize;
        v[a * (self.j2.twice() as usize + 1) + b]
    }
}

/// √(j(j+1) − m(m−1)).
fn ladder(j: HalfInt, m: HalfInt) -> f64 {
    let (j, m) = (j.value(), m.value());
    (j * (j + 1.0) - m * (m - 1.0)).max(0.0).sqrt()
}

/// Irreducible part of a symmetric tensor by the closed-form detracer
/// Σ_k (−1)^k (2n−2k−1)!!/(2n−1)!! Σ_{distinct} δ…δ Tr^k(T).
pub fn detrace(t: &Tensor) -> Tensor {
    let n = t.rank();
    let mut out = Tensor::zeros(n);
    let mut traced = t.clone();
    for k in 0..=n / 2 {
        if k > 0 {
            let r = traced.rank();
            traced = trace_pair(&traced, r - 2, r - 1).expect("rank ≥ 2");
        }
        let mut term = traced.clone();
        for _ in 0..k {
            term = outer(&term, &Tensor::delta()).expect("rank within cap");
        }
        let distinct = factorial(n - 2 * k) * 2f64.powi(k as i32) * factorial(k);
        let c = if k % 2 == 0 { 1.0 } else { -1.0 } * double_factorial((2 * n - 2 * k) as i64 - 1).expect("odd")
            / double_factorial(2 * n as i64 - 1).expect("odd")
            / distinct;
        out += &symmetrize(&term).scale_real(c);
    }
    out
}

/// D^j(R) = ⟨j m′| e^{−iθ n̂·J} |j m⟩, rows and columns in descending m.
pub fn wigner_d_exponential(j: HalfInt, params: RotationParams) -> DMatrix<C64> {
    let [jx, jy, jz] = j_matrices(j);
    let gen = |axis: [f64; 3], angle: f64| {
        let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        if norm == 0.0 || angle == 0.0 {
            let d = jx.nrows();
            return DMatrix::<C64>::identity(d, d);
        }
        let k = (&jx * C64::new(axis[0] / norm, 0.0) + &jy * C64::new(axis[1] / norm, 0.0) + &jz * C64::new(axis[2] / norm, 0.0))
            * C64::new(0.0, -angle);
        k.exp()
    };
    match params {
        RotationParams::AxisAngle { axis, angle } => gen(axis, angle),
        RotationParams::Euler { alpha, beta, gamma } => {
            gen([0.0, 0.0, 1.0], alpha) * gen([0.0, 1.0, 0.0], beta) * gen([0.0, 0.0, 1.0], gamma)
        }
    }
}

/// Number of multi-indices of rank n with the given digit counts.
pub fn multiset_count(counts: [usize; 3]) -> f64 {
    factorial(counts[0] + counts[1] + counts[2]) / (factorial(counts[0]) * factorial(counts[1]) * factorial(counts[2]))
}

/// Symmetrization by brute-force enumeration of every permutation of every entry.
pub fn symmetrize_brute(a: &Tensor) -> Tensor {
    let n = a.rank();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut out = Tensor::zeros(n);
    loop {
        out += &a.permute_indices(&perm);
        // next lexicographic permutation
        let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| perm[i] < perm[i + 1]) else { break };
        let j = (i + 1..n).rev().find(|&j| perm[j] > perm[i]).expect("successor exists");
        perm.swap(i, j);
        perm[i + 1..].reverse();
    }
    out
}

/// ⟨ℓ′ m′| f(r̂) |ℓ m⟩ for a multiplicative operator f of polynomial degree `degree`, by quadrature.
pub fn orbital_block(lp: usize, l: usize, rank: usize, f: &dyn Fn([f64; 3]) -> Tensor, degree: usize) -> OperatorBlock {
    let q = SphereQuadrature::for_degree(lp + l + degree);
    let bras = harmonic_polys(lp);
    let kets = harmonic_polys(l);
    let mut comps = vec![DMatrix::from_element(2 * lp + 1, 2 * l + 1, C64::new(0.0, 0.0)); pow3(rank)];
    for &(d, w) in q.points() {
        let fv = f(d);
        let bv: Vec<C64> = bras.iter().map(|p| p.eval(d).conj() * w).collect();
        let kv: Vec<C64> = kets.iter().map(|p| p.eval(d)).collect();
        for (c, v) in comps.iter_mut().zip(fv.entries()) {
            for (a, b) in bv.iter().enumerate() {
                for (k, y) in kv.iter().enumerate() {
                    c[(a, k)] += b * v * y;
                }
            }
        }
    }
    OperatorBlock::new(rank, HalfInt::int(lp as i32), HalfInt::int(l as i32), comps).expect("consistent shapes")
}

/// ⟨ℓ′ m′| O |ℓ m⟩ where `op` maps Y_ℓm (as a function on ℝ³) to the 3^rank
/// components of O Y_ℓm; the result is integrated over the unit sphere.
pub fn orbital_poly_block(lp: usize, l: usize, rank: usize, degree: usize, op: &dyn Fn(&RadialPoly) -> Vec<RadialPoly>) -> OperatorBlock {
    let q = SphereQuadrature::for_degree(lp + l + degree);
    let bras = harmonic_polys(lp);
    let images: Vec<Vec<RadialPoly>> = harmonic_polys(l).iter().map(op).collect();
    let mut comps = vec![DMatrix::from_element(2 * lp + 1, 2 * l + 1, C64::new(0.0, 0.0)); pow3(rank)];
    for &(d, w) in q.points() {
        let bv: Vec<C64> = bras.iter().map(|p| p.eval(d).conj() * w).collect();
        for (k, img) in images.iter().enumerate() {
            for (c, p) in comps.iter_mut().zip(img) {
                let v = p.eval(d);
                for (a, b) in bv.iter().enumerate() {
                    c[(a, k)] += b * v;
                }
            }
        }
    }
    OperatorBlock::new(rank, HalfInt::int(lp as i32), HalfInt::int(l as i32), comps).expect("consistent shapes")
}

/// Block of |r|ⁿ ∂_{i₁}…∂_{iₙ} on the unit sphere, by exact differentiation.
pub fn orbital_gradient_block(lp: usize, l: usize, n: usize) -> OperatorBlock {
    let op = |p: &RadialPoly| {
        let mut out = vec![p.clone()];
        for _ in 0..n {
            out = out.iter().flat_map(|q| (0..3).map(move |i| q.derivative(i))).collect();
        }
        out
    };
    orbital_poly_block(lp, l, n, n, &op)
}

/// Block of O₍ₙ,q₎ = (−(n−1) r̂_{iₙ} + |r|∂_{iₙ}) ⋯ (−(q−1) r̂_{i_q} + |r|∂_{i_q}),
/// first tensor index iₙ, by exact differentiation.
pub fn orbital_derivative_block(lp: usize, l: usize, n: usize, q: usize) -> OperatorBlock {
    let r = n - q + 1;
    let rinv = RadialPoly::r_power(-1);
    let rr = RadialPoly::r_power(1);
    let op = |p: &RadialPoly| {
        let mut out = vec![p.clone()];
        for k in q..=n {
            let mut next = Vec::with_capacity(out.len() * 3);
            for i in 0..3 {
                let xi = RadialPoly::coordinate(i).mul(&rinv).scale(C64::new(-((k - 1) as f64), 0.0));
                for g in &out {
                    next.push(&xi.mul(g) + &rr.mul(&g.derivative(i)));
                }
            }
            out = next;
        }
        out
    };
    orbital_poly_block(lp, l, r, r, &op)
}

fn harmonic_polys(l: usize) -> Vec<RadialPoly> {
    (-(l as i32)..=l as i32).rev().map(|m| RadialPoly::spherical_harmonic(l as u32, m)).collect()
}

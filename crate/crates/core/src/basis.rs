//! Standard tensor bases: irreducible ε₍ₙ₎(m), totally symmetric ε₍{n,s}₎(m)
//! and partially irreducible B⁽ʲ⁾(m), with the decompositions onto them.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::{OnceLock, RwLock};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::angular::cg_int;
use crate::error::{Error, Result};
use crate::poly::RadialPoly;
use crate::special::{double_factorial, factorial, sign};
use crate::tensor::{levi_civita, outer, pow3, rank_cap, symmetrize, trace_pair, MultiIndex, Tensor};

const ZERO: C64 = C64::new(0.0, 0.0);

/// How ε₍ₙ₎(m) is constructed.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsilonMethod {
    /// CG coupling of ε₍ₙ₋₁₎ with ε₍₁₎.
    #[default]
    Recursive,
    /// Closed-form sum over strings of ε₍₁₎ components.
    Explicit,
    /// Derivatives of the solid harmonic |r|ⁿ Y_nm.
    Harmonic,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StandardTensor {
    pub n: usize,
    pub m: i32,
    pub tensor: Tensor,
}

/// ε₍₁₎(m) components.
pub fn eps1(m: i32) -> [C64; 3] {
    let s = FRAC_1_SQRT_2;
    match m {
        1 => [C64::new(-s, 0.0), C64::new(0.0, -s), ZERO],
        0 => [ZERO, ZERO, C64::new(1.0, 0.0)],
        -1 => [C64::new(s, 0.0), C64::new(0.0, -s), ZERO],
        _ => panic!("eps1: |m| > 1"),
    }
}

fn check_nm(n: usize, m: i32) -> Result<()> {
    if m.unsigned_abs() as usize > n {
        return Err(Error::QuantumNumbers(format!("|m| = {} exceeds n = {n}", m.abs())));
    }
    if n > rank_cap() {
        return Err(Error::RankOverflow { rank: n, cap: rank_cap() });
    }
    Ok(())
}

type EpsCache = RwLock<HashMap<(usize, i32, EpsilonMethod), Tensor>>;

fn eps_cache() -> &'static EpsCache {
    static CACHE: OnceLock<EpsCache> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// ε₍ₙ₎(m). `n = 0` gives the scalar 1.
pub fn epsilon(n: usize, m: i32, method: EpsilonMethod) -> Result<StandardTensor> {
    check_nm(n, m)?;
    let key = (n, m, method);
    if let Some(t) = eps_cache().read().expect("epsilon cache poisoned").get(&key) {
        return Ok(StandardTensor { n, m, tensor: t.clone() });
    }
    let tensor = match method {
        EpsilonMethod::Recursive => epsilon_recursive(n, m)?,
        EpsilonMethod::Explicit => epsilon_explicit(n, m),
        EpsilonMethod::Harmonic => epsilon_harmonic(n, m),
    };
    eps_cache().write().expect("epsilon cache poisoned").insert(key, tensor.clone());
    Ok(StandardTensor { n, m, tensor })
}

/// ε₍ₙ₎(m) by the default method; zero tensor when |m| > n.
pub fn eps(n: usize, m: i32) -> Tensor {
    if m.unsigned_abs() as usize > n {
        return Tensor::zeros(n);
    }
    epsilon(n, m, EpsilonMethod::Recursive).expect("rank within cap").tensor
}

fn epsilon_recursive(n: usize, m: i32) -> Result<Tensor> {
    match n {
        0 => return Ok(Tensor::scalar(C64::new(1.0, 0.0))),
        1 => return Ok(Tensor::vector(eps1(m))),
        _ => {}
    }
    let nn = n as i32;
    let mut out = Tensor::zeros(n);
    for nu in -1..=1 {
        let m1 = m - nu;
        if m1.abs() > nn - 1 {
            continue;
        }
        let c = cg_int(nn - 1, m1, 1, nu, nn, m);
        if c == 0.0 {
            continue;
        }
        let prev = epsilon(n - 1, m1, EpsilonMethod::Recursive)?.tensor;
        out.add_scaled(C64::new(c, 0.0), &outer(&prev, &Tensor::vector(eps1(nu)))?);
    }
    Ok(out)
}

fn epsilon_explicit(n: usize, m: i32) -> Tensor {
    if n == 0 {
        return Tensor::scalar(C64::new(1.0, 0.0));
    }
    let mu = m.unsigned_abs() as usize;
    let pre = (factorial(n + mu) * factorial(n - mu) / factorial(2 * n)).sqrt();
    // weight √2^{1−|s|} for each factor
    let w = |s: i32| if s == 0 { std::f64::consts::SQRT_2 } else { 1.0 };
    let e: Vec<[C64; 3]> = (-1..=1).map(eps1).collect();
    Tensor::from_fn(n, |digits| {
        // Coefficient of t^m in Π_h Σ_s w(s) ε_{i_h}(s) t^s.
        let mut poly = vec![ZERO; 2 * n + 1];
        poly[n] = C64::new(1.0, 0.0);
        for &i in digits {
            let mut next = vec![ZERO; 2 * n + 1];
            for (k, &c) in poly.iter().enumerate() {
                if c == ZERO {
                    continue;
                }
                for s in -1i32..=1 {
                    let v = e[(s + 1) as usize][i as usize];
                    if v == ZERO {
                        continue;
                    }
                    next[(k as i32 + s) as usize] += c * v * w(s);
                }
            }
            poly = next;
        }
        poly[(n as i32 + m) as usize] * pre
    })
}

/// All n-th derivatives ∂_{i₁}…∂_{iₙ} of `p` evaluated at `at`, in flat tensor order.
pub(crate) fn derivative_tensor(p: &RadialPoly, n: usize, at: [f64; 3]) -> Tensor {
    fn walk(p: &RadialPoly, depth: usize, at: [f64; 3], out: &mut Vec<C64>) {
        if depth == 0 {
            out.push(p.eval(at));
            return;
        }
        for i in 0..3 {
            walk(&p.derivative(i), depth - 1, at, out);
        }
    }
    let mut entries = Vec::with_capacity(pow3(n));
    walk(p, n, at, &mut entries);
    Tensor::from_entries(n, entries).expect("rank within cap")
}

fn epsilon_harmonic(n: usize, m: i32) -> Tensor {
    let h = RadialPoly::solid_harmonic(n as u32, m);
    let df = double_factorial(2 * n as i64 + 1).expect("positive");
    let pre = (4.0 * PI / (factorial(n) * df)).sqrt();
    derivative_tensor(&h, n, [0.0, 0.0, 1.0]).scale_real(pre)
}

/// The irreducible (symmetric traceless) part, Σ_m ε(m)* (ε(m)·A).
pub fn irreducible_part(a: &Tensor) -> Tensor {
    let n = a.rank();
    if n == 0 {
        return a.clone();
    }
    let mut out = Tensor::zeros(n);
    for m in -(n as i32)..=n as i32 {
        let e = eps(n, m);
        let c = e.dot(a);
        out.add_scaled(c, &e.conj());
    }
    out
}

/// Tr₍ₛ₎: contracts the trailing index pairs down to rank `s`.
pub fn trace_down_to(a: &Tensor, s: usize) -> Tensor {
    assert!(a.rank() >= s && (a.rank() - s) % 2 == 0, "rank parity");
    let mut t = a.clone();
    while t.rank() > s {
        let r = t.rank();
        t = trace_pair(&t, r - 2, r - 1).expect("valid pair");
    }
    t
}

fn check_ns(n: usize, s: usize) -> Result<usize> {
    if s > n || (n - s) % 2 != 0 {
        return Err(Error::Parity(format!("n = {n}, s = {s}: n − s must be even and non-negative")));
    }
    Ok((n - s) / 2)
}

/// λ₍n,s₎.
pub fn lambda(n: usize, s: usize) -> Result<f64> {
    let nd = check_ns(n, s)?;
    let df = double_factorial(2 * s as i64 + 1).expect("positive") / double_factorial((n + s + 1) as i64).expect("positive");
    Ok((factorial(n) / factorial(s) * df / (2f64.powi(nd as i32) * factorial(nd))).sqrt())
}

/// λ′₍n,s₎.
pub fn lambda_prime(n: usize, s: usize) -> Result<f64> {
    let nd = check_ns(n, s)?;
    let den = 2f64.powi(nd as i32) * factorial(nd) * factorial(n) * double_factorial((n + s + 1) as i64).expect("positive");
    Ok((4.0 * PI / den).sqrt())
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymRoute {
    /// Symmetrized ε₍ₛ₎ ⊗ δ ⊗ … ⊗ δ.
    #[default]
    Definition,
    /// λ′ ∂ⁿ(|r|ⁿ Y_sm).
    Derivative,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SymBasisTensor {
    pub n: usize,
    pub s: usize,
    pub m: i32,
    pub lambda: f64,
    pub tensor: Tensor,
}

/// ε₍{n,s}₎(m).
pub fn sym_basis(n: usize, s: usize, m: i32, route: SymRoute) -> Result<SymBasisTensor> {
    let nd = check_ns(n, s)?;
    check_nm(s, m)?;
    check_nm(n, 0)?;
    let lam = lambda(n, s)?;
    let tensor = match route {
        SymRoute::Definition => {
            let mut t = eps(s, m);
            for _ in 0..nd {
                t = outer(&t, &Tensor::delta())?;
            }
            symmetrize(&t).scale_real(lam / factorial(n))
        }
        SymRoute::Derivative => {
            let p = RadialPoly::solid_harmonic(s as u32, m).mul(&RadialPoly::r_squared_power(nd as u32));
            derivative_tensor(&p, n, [0.0, 0.0, 1.0]).scale_real(lambda_prime(n, s)?)
        }
    };
    Ok(SymBasisTensor { n, s, m, lambda: lam, tensor })
}

fn sym_basis_tensor(n: usize, s: usize, m: i32) -> Tensor {
    sym_basis(n, s, m, SymRoute::Definition).expect("valid (n, s, m)").tensor
}

/// Coefficients c_sm = λ₍n,s₎ (Tr₍ₛ₎(A)·ε₍ₛ₎(m)) of a totally symmetric tensor.
pub fn sym_expand(a: &Tensor) -> Result<BTreeMap<(usize, i32), C64>> {
    let n = a.rank();
    let asym = a.max_asymmetry(n);
    if asym > 1e-9 * a.norm().max(f64::MIN_POSITIVE) {
        return Err(Error::NotSymmetric(asym));
    }
    let mut out = BTreeMap::new();
    for s in (n % 2..=n).step_by(2) {
        let tr = trace_down_to(a, s);
        let lam = lambda(n, s)?;
        for m in -(s as i32)..=s as i32 {
            out.insert((s, m), eps(s, m).dot(&tr) * lam);
        }
    }
    Ok(out)
}

/// Σ c_sm ε₍{n,s}₎(m)*.
pub fn sym_reconstruct(n: usize, coeffs: &BTreeMap<(usize, i32), C64>) -> Result<Tensor> {
    let mut out = Tensor::zeros(n);
    for (&(s, m), &c) in coeffs {
        check_ns(n, s)?;
        out.add_scaled(c, &sym_basis_tensor(n, s, m).conj());
    }
    Ok(out)
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartialRoute {
    /// Σ CG(n μ 1 ν | j m) ε₍ₙ₎(μ) ⊗ ε₍₁₎(ν).
    #[default]
    CgSum,
    /// Products of ε₍ₛ₎ with isotropic tensors.
    ClosedForm,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PartialBasisTensor {
    pub n: usize,
    pub j: usize,
    pub m: i32,
    pub tensor: Tensor,
}

/// B⁽ʲ⁾(m) of rank n + 1.
pub fn partial_basis(n: usize, j: usize, m: i32, route: PartialRoute) -> Result<PartialBasisTensor> {
    if n == 0 || j + 1 < n || j > n + 1 {
        return Err(Error::QuantumNumbers(format!("j = {j} not in {{n−1, n, n+1}} for n = {n}")));
    }
    check_nm(j, m)?;
    check_nm(n + 1, 0)?;
    let tensor = match route {
        PartialRoute::CgSum => {
            let mut out = Tensor::zeros(n + 1);
            for nu in -1..=1 {
                let mu = m - nu;
                let c = cg_int(n as i32, mu, 1, nu, j as i32, m);
                if c != 0.0 {
                    out.add_scaled(C64::new(c, 0.0), &outer(&eps(n, mu), &Tensor::vector(eps1(nu)))?);
                }
            }
            out
        }
        PartialRoute::ClosedForm => partial_closed_form(n, j, m),
    };
    Ok(PartialBasisTensor { n, j, m, tensor })
}

fn partial_closed_form(n: usize, j: usize, m: i32) -> Tensor {
    if j == n + 1 {
        return eps(n + 1, m);
    }
    if j == n {
        let e = eps(n, m);
        let pre = C64::new(0.0, 1.0 / ((n * (n + 1)) as f64).sqrt());
        return Tensor::from_fn(n + 1, |d| {
            let last = d[n] as usize;
            let mut acc = ZERO;
            for k in 0..n {
                for h in 0..3 {
                    let lc = levi_civita(d[k] as usize, last, h);
                    if lc == 0.0 {
                        continue;
                    }
                    let mut idx: Vec<usize> = Vec::with_capacity(n);
                    idx.push(h);
                    idx.extend(d[..n].iter().enumerate().filter(|&(t, _)| t != k).map(|(_, &x)| x as usize));
                    acc += e.get(&idx) * lc;
                }
            }
            acc * pre
        });
    }
    let e = eps(n - 1, m);
    let pre = 1.0 / (n as f64 * (((2 * n - 1) * (2 * n + 1)) as f64).sqrt());
    Tensor::from_fn(n + 1, |d| {
        let mut acc = ZERO;
        for k in 0..n {
            for h in k + 1..n {
                if d[k] == d[h] {
                    let idx: Vec<usize> = d.iter().enumerate().filter(|&(t, _)| t != k && t != h).map(|(_, &x)| x as usize).collect();
                    acc += e.get(&idx) * 2.0;
                }
            }
            if d[k] == d[n] {
                let idx: Vec<usize> = d[..n].iter().enumerate().filter(|&(t, _)| t != k).map(|(_, &x)| x as usize).collect();
                acc -= e.get(&idx) * (2 * n - 1) as f64;
            }
        }
        acc * pre
    })
}

/// Largest violation of symmetry or tracelessness in the first `n` indices.
pub fn partial_irreducibility_violation(t: &Tensor, n: usize) -> f64 {
    t.max_asymmetry(n).max(t.max_trace(n))
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecomposeRoute {
    /// Full contraction with B⁽ʲ⁾(m).
    #[default]
    Basis,
    /// Contractions with ε₍ₛ₎, the Levi-Civita symbol and a trace.
    Contraction,
}

/// Components T⁽ʲ⁾(m) of a partially irreducible rank-(n+1) tensor.
pub fn partial_decompose(t: &Tensor, n: usize, route: DecomposeRoute) -> Result<BTreeMap<(usize, i32), C64>> {
    if t.rank() != n + 1 {
        return Err(Error::RankMismatch { expected: n + 1, found: t.rank() });
    }
    let viol = partial_irreducibility_violation(t, n);
    if viol > 1e-9 * t.norm().max(f64::MIN_POSITIVE) {
        return Err(Error::NotPartiallyIrreducible(viol));
    }
    let mut out = BTreeMap::new();
    for j in n.saturating_sub(1)..=n + 1 {
        for m in -(j as i32)..=j as i32 {
            let v = match route {
                DecomposeRoute::Basis => partial_basis(n, j, m, PartialRoute::CgSum)?.tensor.dot(t),
                DecomposeRoute::Contraction => contracted_component(t, n, j, m),
            };
            out.insert((j, m), v);
        }
    }
    Ok(out)
}

fn contracted_component(t: &Tensor, n: usize, j: usize, m: i32) -> C64 {
    if j == n + 1 {
        return eps(n + 1, m).dot(t);
    }
    if j == n {
        // i√(n/(n+1)) ε₍ₙ₎_{i₁…i_{n−1}h} ε_{h iₙ i_{n+1}} T_{i₁…i_{n+1}}
        let e = eps(n, m);
        let mut acc = ZERO;
        for o in 0..t.len() {
            let mi = MultiIndex::from_offset(n + 1, o);
            let d = mi.digits();
            for h in 0..3 {
                let lc = levi_civita(h, d[n - 1] as usize, d[n] as usize);
                if lc == 0.0 {
                    continue;
                }
                let mut idx: Vec<usize> = d[..n - 1].iter().map(|&x| x as usize).collect();
                idx.push(h);
                acc += e.get(&idx) * t.entries()[o] * lc;
            }
        }
        return acc * C64::new(0.0, (n as f64 / (n + 1) as f64).sqrt());
    }
    let tr = trace_pair(t, n - 1, n).expect("valid pair");
    -eps(n - 1, m).dot(&tr) * (((2 * n - 1) as f64) / ((2 * n + 1) as f64)).sqrt()
}

/// Σ T⁽ʲ⁾(m) B⁽ʲ⁾(m)*.
pub fn partial_reconstruct(n: usize, comps: &BTreeMap<(usize, i32), C64>) -> Result<Tensor> {
    let mut out = Tensor::zeros(n + 1);
    for (&(j, m), &c) in comps {
        out.add_scaled(c, &partial_basis(n, j, m, PartialRoute::CgSum)?.tensor.conj());
    }
    Ok(out)
}

/// Conjugation phase of ε₍ₙ₎: ε(m)* = (−1)^m ε(−m).
pub fn conjugation_residual(n: usize) -> f64 {
    (-(n as i32)..=n as i32)
        .map(|m| eps(n, m).conj().max_abs_diff(&eps(n, -m).scale_real(sign(m as i64))))
        .fold(0.0, f64::max)
}

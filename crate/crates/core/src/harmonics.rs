//! Ordinary, bipolar and tensor spherical harmonics; associated Legendre
//! functions; derivatives of Y_ℓm to all orders.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::angular::cg_int;
use crate::basis::{derivative_tensor, eps, irreducible_part};
use crate::poly::RadialPoly;
use crate::error::{Error, Result};
use crate::rotation::apply_spin_along;
use crate::special::{binomial, double_factorial, double_factorial_ratio, factorial, sign};
use crate::tensor::{outer, symmetrize, Tensor};

const ZERO: C64 = C64::new(0.0, 0.0);

/// A direction on the unit sphere.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct UnitVector([f64; 3]);

impl UnitVector {
    /// Normalizes `v`; fails on zero or non-finite input.
    pub fn new(v: [f64; 3]) -> Result<Self> {
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if !n.is_finite() || n == 0.0 {
            return Err(Error::Domain(format!("cannot normalize {v:?}")));
        }
        Ok(Self(v.map(|x| x / n)))
    }

    pub fn from_angles(theta: f64, phi: f64) -> Self {
        let st = theta.sin();
        Self([st * phi.cos(), st * phi.sin(), theta.cos()])
    }

    pub fn ez() -> Self {
        Self([0.0, 0.0, 1.0])
    }

    pub fn axis(i: usize) -> Self {
        let mut v = [0.0; 3];
        v[i] = 1.0;
        Self(v)
    }

    pub fn get(&self) -> [f64; 3] {
        self.0
    }

    pub fn theta(&self) -> f64 {
        self.0[2].clamp(-1.0, 1.0).acos()
    }

    pub fn phi(&self) -> f64 {
        self.0[1].atan2(self.0[0])
    }

    pub fn dot(&self, other: &UnitVector) -> f64 {
        (0..3).map(|i| self.0[i] * other.0[i]).sum()
    }

    pub fn cross(&self, other: &UnitVector) -> [f64; 3] {
        let (a, b) = (self.0, other.0);
        [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
    }
}

impl TryFrom<[f64; 3]> for UnitVector {
    type Error = Error;
    fn try_from(v: [f64; 3]) -> Result<Self> {
        Self::new(v)
    }
}

impl From<UnitVector> for [f64; 3] {
    fn from(u: UnitVector) -> Self {
        u.0
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LegendreMethod {
    #[default]
    Rodrigues,
    /// The finite sum over the number of +1 entries in the spin string.
    Tensorial,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum YlmMethod {
    #[default]
    Analytic,
    /// N_ℓ ε₍ℓ₎(m) · r̂ ⊗ … ⊗ r̂.
    Tensorial,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BipolarMethod {
    #[default]
    CgSum,
    Tensorial,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TensorShMethod {
    #[default]
    CgSum,
    /// Only j = ℓ + s.
    Maximal,
    /// j = ℓ + s, ℓ + s − 1, and ℓ + s − 2 through spin-projection identities.
    Recoupled,
}

fn check_lm(l: usize, m: i32) -> Result<()> {
    if m.unsigned_abs() as usize > l {
        return Err(Error::QuantumNumbers(format!("|m| = {} exceeds l = {l}", m.abs())));
    }
    Ok(())
}

fn check_triangle(a: usize, b: usize, c: usize) -> Result<()> {
    if c < a.abs_diff(b) || c > a + b {
        return Err(Error::Triangle(a.to_string(), b.to_string(), c.to_string()));
    }
    Ok(())
}

/// N_ℓ = √((2ℓ+1)!!/ℓ!) / √(4π).
pub fn n_l(l: usize) -> f64 {
    (double_factorial(2 * l as i64 + 1).expect("positive") / factorial(l)).sqrt() / (4.0 * PI).sqrt()
}

/// P_ℓm(x) with the Condon–Shortley phase; P_ℓ0 is the Legendre polynomial.
pub fn assoc_legendre(l: usize, m: i32, x: f64, method: LegendreMethod) -> Result<f64> {
    check_lm(l, m)?;
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("|x| = {} > 1", x.abs())));
    }
    Ok(match method {
        LegendreMethod::Rodrigues => {
            if m < 0 {
                let mu = (-m) as usize;
                sign(mu as i64) * factorial(l - mu) / factorial(l + mu) * rodrigues(l, mu, x)
            } else {
                rodrigues(l, m as usize, x)
            }
        }
        LegendreMethod::Tensorial => legendre_finite_sum(l, m, x),
    })
}

/// (−1)^{ℓ+m}/(ℓ! 2^ℓ) (1−x²)^{m/2} d^{ℓ+m}/dx^{ℓ+m} (1−x²)^ℓ for m ≥ 0.
fn rodrigues(l: usize, m: usize, x: f64) -> f64 {
    let d = l + m;
    let mut acc = 0.0;
    for k in 0..=l {
        if 2 * k < d {
            continue;
        }
        // (1−x²)^ℓ = Σ_k C(ℓ,k) (−1)^k x^{2k}
        let falling = factorial(2 * k) / factorial(2 * k - d);
        acc += binomial(l, k) * sign(k as i64) * falling * x.powi((2 * k - d) as i32);
    }
    sign((l + m) as i64) / (factorial(l) * 2f64.powi(l as i32)) * (1.0 - x * x).powf(m as f64 / 2.0) * acc
}

fn legendre_finite_sum(l: usize, m: i32, x: f64) -> f64 {
    let li = l as i64;
    let mi = m as i64;
    let st = (1.0 - x * x).max(0.0).sqrt();
    let lo = mi.max(0);
    let hi = (li + mi).div_euclid(2);
    let mut acc = 0.0;
    for n1 in lo..=hi {
        let (a, b) = (n1 as usize, (n1 - mi) as usize);
        if a > l || b > l - a {
            continue;
        }
        let c = binomial(l, a) * binomial(l - a, b) * sign(n1) / 2f64.powi((2 * n1 - mi) as i32);
        acc += c * st.powi((2 * n1 - mi) as i32) * x.powi((li - 2 * n1 + mi) as i32);
    }
    factorial((li + mi) as usize) / factorial(l) * acc
}

/// Y_ℓm(dir).
pub fn ylm(l: usize, m: i32, dir: &UnitVector, method: YlmMethod) -> Result<C64> {
    check_lm(l, m)?;
    Ok(match method {
        YlmMethod::Analytic => {
            let mu = m.unsigned_abs() as usize;
            let k = ((2 * l + 1) as f64 / (4.0 * PI) * factorial(l - mu) / factorial(l + mu)).sqrt();
            let p = rodrigues(l, mu, dir.get()[2].clamp(-1.0, 1.0));
            // φ is undefined at the poles, where P_ℓm vanishes for m ≠ 0
            let y = C64::from_polar(k * p, mu as f64 * dir.phi());
            if m < 0 {
                y.conj() * sign(mu as i64)
            } else {
                y
            }
        }
        YlmMethod::Tensorial => eps(l, m).contract_last_real(&dir.get(), l).value() * n_l(l),
    })
}

/// P_ℓ(x) and its derivatives: `table[k][n] = P⁽ᵏ⁾_n(x)` for n ≤ n_max, k ≤ k_max.
pub fn legendre_derivatives(n_max: usize, k_max: usize, x: f64) -> Vec<Vec<f64>> {
    let mut t = vec![vec![0.0; n_max + 1]; k_max + 1];
    for k in 0..=k_max {
        t[k][0] = if k == 0 { 1.0 } else { 0.0 };
        for n in 0..n_max {
            // (n+1) P⁽ᵏ⁾_{n+1} = (2n+1)(x P⁽ᵏ⁾_n + k P⁽ᵏ⁻¹⁾_n) − n P⁽ᵏ⁾_{n−1}
            let lower = if k > 0 { t[k - 1][n] } else { 0.0 };
            let prev = if n > 0 { t[k][n - 1] } else { 0.0 };
            t[k][n + 1] = ((2 * n + 1) as f64 * (x * t[k][n] + k as f64 * lower) - n as f64 * prev) / (n + 1) as f64;
        }
    }
    t
}

/// P_ℓ(a·b) as (2ℓ−1)!!/ℓ! times the contraction of the irreducible parts of a^⊗ℓ and b^⊗ℓ.
pub fn legendre_multilinear(l: usize, a: &UnitVector, b: &UnitVector) -> f64 {
    let ta = irreducible_part(&Tensor::outer_power(&a.get().map(|x| C64::new(x, 0.0)), l));
    let tb = irreducible_part(&Tensor::outer_power(&b.get().map(|x| C64::new(x, 0.0)), l));
    let pre = double_factorial(2 * l as i64 - 1).expect("odd") / factorial(l);
    pre * ta.dot(&tb).re
}

/// Y^{ℓ₁ℓ₂}_{jm}(d1, d2).
pub fn bipolar(l1: usize, l2: usize, j: usize, m: i32, d1: &UnitVector, d2: &UnitVector, method: BipolarMethod) -> Result<C64> {
    check_triangle(l1, l2, j)?;
    check_lm(j, m)?;
    match method {
        BipolarMethod::CgSum => {
            let mut acc = ZERO;
            for mu1 in -(l1 as i32)..=l1 as i32 {
                let mu2 = m - mu1;
                if mu2.unsigned_abs() as usize > l2 {
                    continue;
                }
                let c = cg_int(l1 as i32, mu1, l2 as i32, mu2, j as i32, m);
                if c != 0.0 {
                    acc += ylm(l1, mu1, d1, YlmMethod::Analytic)? * ylm(l2, mu2, d2, YlmMethod::Analytic)? * c;
                }
            }
            Ok(acc)
        }
        BipolarMethod::Tensorial => {
            if l1 > l2 {
                let s = sign((l1 + l2 - j) as i64);
                return Ok(bipolar_tensorial(l2, l1, j, m, d2, d1) * s);
            }
            Ok(bipolar_tensorial(l1, l2, j, m, d1, d2))
        }
    }
}

/// ℓ ≤ ℓ′. Maximal coupling uses N_ℓ N_ℓ′ ε₍ⱼ₎(m)·r̂^ℓ r̂′^ℓ′; otherwise the general
/// expression with v = r̂ ∧ r̂′ and derivatives of Legendre polynomials.
fn bipolar_tensorial(l: usize, lp: usize, j: usize, m: i32, r: &UnitVector, rp: &UnitVector) -> C64 {
    let e = eps(j, m);
    if j == l + lp {
        let t = e.contract_last_real(&rp.get(), lp).contract_last_real(&r.get(), l);
        return t.value() * (n_l(l) * n_l(lp));
    }
    let nu = l + lp - j;
    let n = lp - l;
    let t = j - n;
    let v = r.cross(rp);
    let half = nu / 2;
    let (k1_min, k2_max, q_max) = if nu % 2 == 0 {
        (n.saturating_sub(half), half.min(n), l as i64 - half as i64)
    } else {
        let h = (nu - 1) / 2;
        (n.saturating_sub(h), h.min(n), l as i64 - h as i64 - 1)
    };
    let x = r.dot(rp);
    let table = legendre_derivatives(lp + 1, j, x);
    let i_nu = C64::new(0.0, 1.0).powi(nu as i32);
    let pre = i_nu / (4.0 * PI)
        * (2f64.powi(j as i32) * factorial(nu)).sqrt()
        * binomial(2 * j, j + n).sqrt()
        * (((2 * j + 1) * (2 * l + 1) * (2 * lp + 1)) as f64 / factorial(lp + l + j + 1)).sqrt();
    let mut acc = ZERO;
    for k1 in k1_min..=n {
        let k2 = n - k1;
        if k2 > k2_max {
            continue;
        }
        let q_min = 0i64.max((l + k2) as i64 - nu as i64);
        for q in q_min..=q_max {
            let q = q as usize;
            if 2 * q > t || q > j {
                continue;
            }
            let deriv = table[j - q][l + k1];
            if deriv == 0.0 {
                continue;
            }
            let c = sign(k2 as i64) * binomial(n, k1) * double_factorial(2 * q as i64 - 1).expect("odd") * binomial(t, 2 * q);
            let contracted = e
                .contract_last_real(&v, t - 2 * q)
                .contract_last_real(&rp.get(), k1 + q)
                .contract_last_real(&r.get(), k2 + q)
                .value();
            acc += contracted * (c * deriv);
        }
    }
    acc * pre
}

/// One term of the binomial expansion of Y_ℓm((α r₁ + β r₂)/|α r₁ + β r₂|).
#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct BinomialTerm {
    /// Rank carried by r̂₁.
    pub n: usize,
    pub weight: f64,
    /// Y^{n(ℓ−n)}_{ℓm}(r̂₁, r̂₂).
    pub bipolar: C64,
}

impl BinomialTerm {
    pub fn value(&self) -> C64 {
        self.bipolar * self.weight
    }
}

pub fn ylm_linear_combo(l: usize, m: i32, alpha: f64, beta: f64, r1: [f64; 3], r2: [f64; 3]) -> Result<Vec<BinomialTerm>> {
    check_lm(l, m)?;
    let r = [0, 1, 2].map(|i| alpha * r1[i] + beta * r2[i]);
    let norm = |v: [f64; 3]| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    let rn = norm(r);
    if rn == 0.0 {
        return Err(Error::Domain("α r₁ + β r₂ vanishes".into()));
    }
    let (n1, n2) = (norm(r1), norm(r2));
    // a zero vector only enters through a zero weight, so any direction will do
    let d1 = UnitVector::new(r1).unwrap_or(UnitVector::ez());
    let d2 = UnitVector::new(r2).unwrap_or(UnitVector::ez());
    let mut out = Vec::with_capacity(l + 1);
    for n in 0..=l {
        let weight = (4.0 * PI).sqrt() / ((2 * (l - n) + 1) as f64).sqrt() * binomial(2 * l + 1, 2 * n + 1).sqrt()
            * (alpha * n1).powi(n as i32)
            * (beta * n2).powi((l - n) as i32)
            / rn.powi(l as i32);
        let bip = if weight == 0.0 { ZERO } else { bipolar(n, l - n, l, m, &d1, &d2, BipolarMethod::Tensorial)? };
        out.push(BinomialTerm { n, weight, bipolar: bip });
    }
    Ok(out)
}

/// (Y^{ℓs}_{jm}(dir)), a rank-s tensor.
pub fn tensor_sh(l: usize, s: usize, j: usize, m: i32, dir: &UnitVector, method: TensorShMethod) -> Result<Tensor> {
    check_triangle(l, s, j)?;
    check_lm(j, m)?;
    match method {
        TensorShMethod::CgSum => {
            let mut out = Tensor::zeros(s);
            for nu in -(s as i32)..=s as i32 {
                let mu = m - nu;
                if mu.unsigned_abs() as usize > l {
                    continue;
                }
                let c = cg_int(l as i32, mu, s as i32, nu, j as i32, m);
                if c != 0.0 {
                    out.add_scaled(ylm(l, mu, dir, YlmMethod::Analytic)? * c, &eps(s, nu));
                }
            }
            Ok(out)
        }
        TensorShMethod::Maximal => {
            if j != l + s {
                return Err(Error::NotApplicable { method: "maximal", what: format!("j = {j} with l + s = {}", l + s) });
            }
            Ok(maximal_tsh(l, s, m, dir))
        }
        TensorShMethod::Recoupled => recoupled_tsh(l, s, j, m, dir),
    }
}

fn maximal_tsh(l: usize, s: usize, m: i32, dir: &UnitVector) -> Tensor {
    eps(l + s, m).contract_last_real(&dir.get(), l).scale_real(n_l(l))
}

fn recoupled_tsh(l: usize, s: usize, j: usize, m: i32, dir: &UnitVector) -> Result<Tensor> {
    let d = dir.get();
    if j == l + s {
        return Ok(maximal_tsh(l, s, m, dir));
    }
    if j + 1 == l + s && l >= 1 && s >= 1 {
        let y = maximal_tsh(l - 1, s, m, dir);
        let c = -((2 * l + 1) as f64 / (s * (l + s)) as f64).sqrt();
        return Ok(apply_spin_along(d, &y).scale_real(c));
    }
    if j + 2 == l + s && l >= 2 && s >= 2 {
        let (lf, sf) = (l as f64, s as f64);
        let y = maximal_tsh(l - 2, s, m, dir);
        let c = (2.0 * lf - 1.0) / (sf * (2.0 * sf - 1.0)).sqrt() * ((2.0 * lf + 1.0) / (lf - 1.0)).sqrt()
            / ((2.0 * (lf + sf) - 1.0).sqrt() * (lf + sf - 1.0).sqrt());
        let twice = apply_spin_along(d, &apply_spin_along(d, &y));
        let shift = sf * (lf + sf - 1.0) / (2.0 * lf - 1.0);
        return Ok((&twice - &y.scale_real(shift)).scale_real(c));
    }
    if s == 1 && l >= 2 && j + 1 == l {
        let lf = l as f64;
        let y = maximal_tsh(l - 2, 1, m, dir);
        let yl = ylm(l - 1, m, dir, YlmMethod::Analytic)?;
        let rhat = Tensor::real_vector(d).scale(yl);
        return Ok(&y.scale_real(((lf - 1.0) / lf).sqrt()) - &rhat.scale_real(((2.0 * lf - 1.0) / lf).sqrt()));
    }
    Err(Error::NotApplicable { method: "recoupled", what: format!("(l, s, j) = ({l}, {s}, {j})") })
}

/// (Y^{ℓs}_{jm}(r̂)) from s-fold derivatives of |r′|^s Y^{sℓ}_{jm}(r̂′, r̂) in r′,
/// with prefactor (−1)^{ℓ+s+j} √(4π/(s!(2s+1)!!)).
pub fn tensor_sh_from_bipolar(l: usize, s: usize, j: usize, m: i32, dir: &UnitVector) -> Result<Tensor> {
    check_triangle(l, s, j)?;
    check_lm(j, m)?;
    let mut poly = RadialPoly::zero();
    for mu in -(s as i32)..=s as i32 {
        let nu = m - mu;
        if nu.unsigned_abs() as usize > l {
            continue;
        }
        let c = cg_int(s as i32, mu, l as i32, nu, j as i32, m);
        let y = ylm(l, nu, dir, YlmMethod::Analytic)?;
        poly = &poly + &RadialPoly::solid_harmonic(s as u32, mu).scale(y * c);
    }
    // the polynomial is homogeneous of degree s, so its s-th derivatives are constant
    let deriv = derivative_tensor(&poly, s, [0.0, 0.0, 1.0]);
    let pre = (4.0 * PI).sqrt() / (factorial(s) * double_factorial(2 * s as i64 + 1).expect("positive")).sqrt() * sign((l + s + j) as i64);
    Ok(deriv.scale_real(pre))
}

/// Θ₍ₙₛ₎(ℓ, ℓ′). Zero when ℓ − ℓ′ + s is odd, where the accompanying CG factor vanishes.
pub fn theta(n: usize, s: usize, l: usize, lp: usize) -> Result<f64> {
    if s > n || (n - s) % 2 != 0 {
        return Err(Error::Parity(format!("n = {n}, s = {s}: n − s must be even and non-negative")));
    }
    if n == 0 {
        return Ok(1.0);
    }
    let e = l as i64 - lp as i64 + s as i64;
    if e % 2 != 0 {
        return Ok(0.0);
    }
    let nd = (n - s) / 2;
    let (ni, li, lpi, si) = (n as i64, l as i64, lp as i64, s as i64);
    let front = sign(e / 2) * sign(nd as i64) * (2 * s + 1) as f64
        / (2f64.powi(nd as i32) * factorial(nd) * double_factorial(ni + si + 1).expect("positive"));
    let root = (double_factorial(2 * si - 1).expect("odd") / factorial(s)).sqrt();
    let a = double_factorial_ratio(li + 1, li - 2);
    let b = double_factorial_ratio(lpi + ni - 2, lpi - ni + 1);
    Ok(front * root * a * b)
}

/// |r|ⁿ ∂_{i₁}…∂_{iₙ} Y_ℓm at `dir`, as a sum of symmetrized tensor harmonics and δs.
pub fn ylm_derivatives(n: usize, l: usize, m: i32, dir: &UnitVector) -> Result<Tensor> {
    check_lm(l, m)?;
    if n == 0 {
        return Ok(Tensor::scalar(ylm(l, m, dir, YlmMethod::Analytic)?));
    }
    if l < n {
        return Err(Error::Domain(format!("derivative order {n} exceeds l = {l}")));
    }
    let mut out = Tensor::zeros(n);
    for lp in l - n..=l + n {
        for s in (n % 2..=n).step_by(2) {
            let c = cg_int(l as i32, 0, s as i32, 0, lp as i32, 0);
            if c == 0.0 || lp + s < l || lp.abs_diff(s) > l {
                continue;
            }
            let th = theta(n, s, l, lp)?;
            if th == 0.0 {
                continue;
            }
            let mut t = tensor_sh(lp, s, l, m, dir, TensorShMethod::CgSum)?;
            for _ in 0..(n - s) / 2 {
                t = outer(&t, &Tensor::delta())?;
            }
            out.add_scaled(C64::new(th * c, 0.0), &symmetrize(&t));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::fd_derivative_tensor;

    fn dirs() -> Vec<UnitVector> {
        vec![
            UnitVector::new([0.3, -0.5, 0.81]).unwrap(),
            UnitVector::new([-0.7, 0.2, -0.1]).unwrap(),
            UnitVector::new([1.0, 1.0, 1.0]).unwrap(),
        ]
    }

    #[test]
    fn legendre_examples() {
        let x = 0.37;
        assert_eq!(assoc_legendre(0, 0, x, LegendreMethod::Rodrigues).unwrap(), 1.0);
        let p11 = assoc_legendre(1, 1, x, LegendreMethod::Rodrigues).unwrap();
        assert!((p11 + (1.0 - x * x).sqrt()).abs() < 1e-15);
        assert!((assoc_legendre(2, 0, 0.5, LegendreMethod::Rodrigues).unwrap() + 0.125).abs() < 1e-15);
        assert!(assoc_legendre(2, 0, 1.5, LegendreMethod::Tensorial).is_err());
        for l in 0..=10 {
            for m in -(l as i32)..=l as i32 {
                for &x in &[-1.0, -0.6, 0.0, 0.2, 0.95, 1.0] {
                    let a = assoc_legendre(l, m, x, LegendreMethod::Rodrigues).unwrap();
                    let b = assoc_legendre(l, m, x, LegendreMethod::Tensorial).unwrap();
                    assert!((a - b).abs() < 1e-10 * a.abs().max(1.0), "l={l} m={m} x={x}");
                }
            }
        }
    }

    #[test]
    fn ylm_examples_and_methods() {
        let y00 = ylm(0, 0, &UnitVector::ez(), YlmMethod::Tensorial).unwrap();
        assert!((y00.re - 1.0 / (4.0 * PI).sqrt()).abs() < 1e-15);
        let y20 = ylm(2, 0, &UnitVector::ez(), YlmMethod::Tensorial).unwrap();
        assert!((y20.re - (5.0 / (4.0 * PI)).sqrt()).abs() < 1e-14);
        for i in 0..3 {
            for m in -1..=1 {
                let y = ylm(1, m, &UnitVector::axis(i), YlmMethod::Analytic).unwrap();
                let want = crate::basis::eps1(m)[i] * (3.0 / (4.0 * PI)).sqrt();
                assert!((y - want).norm() < 1e-15);
            }
        }
        for d in dirs() {
            for l in 0..=6 {
                for m in -(l as i32)..=l as i32 {
                    let a = ylm(l, m, &d, YlmMethod::Analytic).unwrap();
                    let b = ylm(l, m, &d, YlmMethod::Tensorial).unwrap();
                    assert!((a - b).norm() < 1e-12, "l={l} m={m}");
                    let c = ylm(l, -m, &d, YlmMethod::Analytic).unwrap();
                    assert!((a.conj() - c * sign(m as i64)).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn legendre_multilinear_values() {
        let a = UnitVector::new([1.0, 0.0, 0.0]).unwrap();
        let b = UnitVector::new([0.3, (1.0f64 - 0.09).sqrt(), 0.0]).unwrap();
        assert!((legendre_multilinear(0, &a, &b) - 1.0).abs() < 1e-15);
        assert!((legendre_multilinear(2, &a, &b) + 0.365).abs() < 1e-14);
        assert!((legendre_multilinear(5, &b, &b) - 1.0).abs() < 1e-12);
        let table = legendre_derivatives(6, 0, 0.3);
        assert!((legendre_multilinear(6, &a, &b) - table[0][6]).abs() < 1e-12);
    }

    #[test]
    fn addition_theorem() {
        let (a, b) = (dirs()[0], dirs()[1]);
        for l in 0..=6 {
            let sum: C64 = (-(l as i32)..=l as i32)
                .map(|m| ylm(l, m, &a, YlmMethod::Analytic).unwrap() * ylm(l, m, &b, YlmMethod::Analytic).unwrap().conj())
                .sum();
            let p = legendre_derivatives(l, 0, a.dot(&b))[0][l];
            assert!((sum.re - (2 * l + 1) as f64 / (4.0 * PI) * p).abs() < 1e-13);
        }
    }

    #[test]
    fn bipolar_routes_agree() {
        let (a, b) = (dirs()[0], dirs()[2]);
        for l1 in 0..=3usize {
            for l2 in 0..=3 {
                for j in l1.abs_diff(l2)..=l1 + l2 {
                    for m in -(j as i32)..=j as i32 {
                        let x = bipolar(l1, l2, j, m, &a, &b, BipolarMethod::CgSum).unwrap();
                        let y = bipolar(l1, l2, j, m, &a, &b, BipolarMethod::Tensorial).unwrap();
                        assert!((x - y).norm() < 1e-12, "({l1},{l2},{j},{m}): {x} vs {y}");
                    }
                }
            }
        }
        assert!(bipolar(1, 1, 3, 0, &a, &b, BipolarMethod::CgSum).is_err());
    }

    #[test]
    fn bipolar_identities() {
        let d = dirs()[1];
        let x = bipolar(2, 3, 3, -1, &d, &d, BipolarMethod::CgSum).unwrap();
        let want = (5.0 * 7.0 / (4.0 * PI * 7.0)).sqrt() * cg_int(2, 0, 3, 0, 3, 0) * ylm(3, -1, &d, YlmMethod::Analytic).unwrap();
        assert!((x - want).norm() < 1e-14);
        for m in -2..=2 {
            let e = eps(2, m);
            for i in 0..3 {
                for j in 0..3 {
                    let b = bipolar(1, 1, 2, m, &UnitVector::axis(i), &UnitVector::axis(j), BipolarMethod::Tensorial).unwrap();
                    assert!((b * (4.0 * PI / 3.0) - e.get(&[i, j])).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn binomial_expansion() {
        let (r1, r2) = ([0.4, -1.1, 0.3], [0.9, 0.2, -0.6]);
        let (alpha, beta) = (0.7, -1.3);
        let r = [0, 1, 2].map(|i| alpha * r1[i] + beta * r2[i]);
        let d = UnitVector::new(r).unwrap();
        for l in 0..=4 {
            for m in -(l as i32)..=l as i32 {
                let terms = ylm_linear_combo(l, m, alpha, beta, r1, r2).unwrap();
                let sum: C64 = terms.iter().map(|t| t.value()).sum();
                assert!((sum - ylm(l, m, &d, YlmMethod::Analytic).unwrap()).norm() < 1e-12);
            }
        }
        let terms = ylm_linear_combo(3, 1, 2.0, 0.0, r1, r2).unwrap();
        let nonzero: Vec<_> = terms.iter().filter(|t| t.weight != 0.0).collect();
        assert_eq!(nonzero.len(), 1);
        assert_eq!(nonzero[0].n, 3);
        assert!(ylm_linear_combo(1, 0, 1.0, -1.0, r1, r1).is_err());
    }

    #[test]
    fn tensor_sh_routes() {
        for d in dirs() {
            for l in 0..=4usize {
                for s in 0..=3 {
                    for j in l.abs_diff(s)..=l + s {
                        for m in -(j as i32)..=j as i32 {
                            let a = tensor_sh(l, s, j, m, &d, TensorShMethod::CgSum).unwrap();
                            match tensor_sh(l, s, j, m, &d, TensorShMethod::Recoupled) {
                                Ok(b) => assert!(a.max_abs_diff(&b) < 1e-12, "(l,s,j,m)=({l},{s},{j},{m})"),
                                Err(Error::NotApplicable { .. }) => assert!(j + 2 < l + s || (l < 2 && j + 1 < l + s)),
                                Err(e) => panic!("{e}"),
                            }
                            let conj = tensor_sh(l, s, j, -m, &d, TensorShMethod::CgSum).unwrap();
                            let ph = sign((l + s + j) as i64 + m as i64);
                            assert!(a.conj().max_abs_diff(&conj.scale_real(ph)) < 1e-13);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn tensor_sh_contractions() {
        let d = dirs()[0];
        for s in 0..=3 {
            for m in -(s as i32)..=s as i32 {
                let t = tensor_sh(0, s, s, m, &d, TensorShMethod::Maximal).unwrap();
                assert!(t.max_abs_diff(&eps(s, m).scale_real(1.0 / (4.0 * PI).sqrt())) < 1e-15);
            }
        }
        for (l, s) in [(1, 2), (2, 2), (3, 1)] {
            let m = 1;
            let t = tensor_sh(l, s, l + s, m, &d, TensorShMethod::Maximal).unwrap();
            let full = t.contract_last_real(&d.get(), s).value();
            let want = ylm(l + s, m, &d, YlmMethod::Analytic).unwrap() * (n_l(l) / n_l(l + s));
            assert!((full - want).norm() < 1e-13);
            let one = t.contract_last_real(&d.get(), 1);
            let lower = tensor_sh(l + 1, s - 1, l + s, m, &d, TensorShMethod::CgSum).unwrap();
            let c = ((l + 1) as f64 / (2 * l + 3) as f64).sqrt();
            assert!(one.max_abs_diff(&lower.scale_real(c)) < 1e-13);
        }
        assert!(tensor_sh(2, 1, 2, 0, &d, TensorShMethod::Maximal).is_err());
    }

    #[test]
    fn tensor_sh_bipolar_routes() {
        let (d, dp) = (dirs()[0], dirs()[1]);
        for l in 0..=3usize {
            for s in 0..=3 {
                for j in l.abs_diff(s)..=l + s {
                    for m in -(j as i32)..=j as i32 {
                        let t = tensor_sh(l, s, j, m, &d, TensorShMethod::CgSum).unwrap();
                        let contracted = t.contract_last_real(&dp.get(), s).value() * n_l(s);
                        let b = bipolar(l, s, j, m, &d, &dp, BipolarMethod::CgSum).unwrap();
                        assert!((contracted - b).norm() < 1e-13);
                        let deriv = tensor_sh_from_bipolar(l, s, j, m, &d).unwrap();
                        assert!(deriv.max_abs_diff(&t) < 1e-12, "(l,s,j,m)=({l},{s},{j},{m})");
                    }
                }
            }
        }
    }

    #[test]
    fn theta_values() {
        assert_eq!(theta(0, 0, 3, 3).unwrap(), 1.0);
        assert!(theta(2, 1, 3, 3).is_err());
        assert_eq!(theta(1, 1, 3, 3).unwrap(), 0.0);
        // n = s = 1, ℓ′ = ℓ + 1 reduces to ℓ
        assert!((theta(1, 1, 4, 5).unwrap() - 4.0).abs() < 1e-13);
    }

    #[test]
    fn derivatives_against_finite_differences() {
        for d in dirs() {
            for n in 1..=3 {
                for l in n..=5 {
                    for m in [-(l as i32), 0, 1] {
                        let t = ylm_derivatives(n, l, m, &d).unwrap();
                        let f = |r: [f64; 3]| ylm(l, m, &UnitVector::new(r).unwrap(), YlmMethod::Analytic).unwrap();
                        let fd = fd_derivative_tensor(&f, n, d.get());
                        let scale = fd.max_abs().max(1.0);
                        assert!(t.max_abs_diff(&fd) < 1e-6 * scale, "n={n} l={l} m={m}: {}", t.max_abs_diff(&fd));
                    }
                }
            }
        }
        assert!(ylm_derivatives(3, 2, 0, &UnitVector::ez()).is_err());
    }

    #[test]
    fn derivative_trace_is_angular_laplacian() {
        let d = dirs()[2];
        for l in 2..=6 {
            for m in -(l as i32)..=l as i32 {
                let t = ylm_derivatives(2, l, m, &d).unwrap();
                let tr = t.get(&[0, 0]) + t.get(&[1, 1]) + t.get(&[2, 2]);
                let y = ylm(l, m, &d, YlmMethod::Analytic).unwrap();
                assert!((tr + y * (l * (l + 1)) as f64).norm() < 1e-10);
            }
        }
    }
}

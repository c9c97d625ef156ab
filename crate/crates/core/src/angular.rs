//! Angular-momentum quantum numbers, Clebsch–Gordan coefficients and
//! matrix elements of J in the Condon–Shortley convention.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::str::FromStr;
use std::sync::{OnceLock, RwLock};

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64 as C64;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::special::factorial_big;

/// An integer or half-odd-integer stored as twice its value.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct HalfInt {
    twice: i32,
}

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt { twice: 0 };

    pub const fn from_twice(twice: i32) -> Self {
        Self { twice }
    }

    pub const fn int(v: i32) -> Self {
        Self { twice: 2 * v }
    }

    pub fn twice(self) -> i32 {
        self.twice
    }

    pub fn value(self) -> f64 {
        self.twice as f64 / 2.0
    }

    pub fn is_integer(self) -> bool {
        self.twice % 2 == 0
    }

    pub fn as_int(self) -> Option<i32> {
        self.is_integer().then_some(self.twice / 2)
    }

    pub fn abs(self) -> Self {
        Self { twice: self.twice.abs() }
    }
}

impl From<i32> for HalfInt {
    fn from(v: i32) -> Self {
        Self::int(v)
    }
}

impl Add for HalfInt {
    type Output = HalfInt;
    fn add(self, rhs: HalfInt) -> HalfInt {
        HalfInt { twice: self.twice + rhs.twice }
    }
}

impl Sub for HalfInt {
    type Output = HalfInt;
    fn sub(self, rhs: HalfInt) -> HalfInt {
        HalfInt { twice: self.twice - rhs.twice }
    }
}

impl Neg for HalfInt {
    type Output = HalfInt;
    fn neg(self) -> HalfInt {
        HalfInt { twice: -self.twice }
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.twice / 2)
        } else {
            write!(f, "{}/2", self.twice)
        }
    }
}

impl FromStr for HalfInt {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::ParseHalfInt(s.to_string());
        let t = s.trim();
        match t.split_once('/') {
            None => t.parse::<i32>().map(HalfInt::int).map_err(|_| bad()),
            Some((num, den)) => {
                let num: i32 = num.trim().parse().map_err(|_| bad())?;
                match den.trim() {
                    "1" => Ok(HalfInt::int(num)),
                    "2" => Ok(HalfInt::from_twice(num)),
                    _ => Err(bad()),
                }
            }
        }
    }
}

/// Integers serialize as numbers, half-odd values as strings like "3/2".
/// Accepts either form, and numbers such as 1.5.
impl serde::Serialize for HalfInt {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_integer() {
            s.serialize_i32(self.twice / 2)
        } else {
            s.collect_str(self)
        }
    }
}

impl<'de> serde::Deserialize<'de> for HalfInt {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(serde::Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => {
                let t = 2.0 * v;
                if t.fract() != 0.0 {
                    return Err(serde::de::Error::custom(format!("{v} is not a multiple of 1/2")));
                }
                Ok(HalfInt::from_twice(t as i32))
            }
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// m values j, j−1, …, −j. This is the row/column order of every matrix here.
pub fn m_values(j: HalfInt) -> Vec<HalfInt> {
    (0..=2 * j.twice).step_by(2).map(|k| HalfInt::from_twice(j.twice - k)).collect()
}

/// Position of `m` in [`m_values`].
pub fn m_index(j: HalfInt, m: HalfInt) -> usize {
    ((j.twice - m.twice) / 2) as usize
}

fn check_pair(j: HalfInt, m: HalfInt) -> Result<()> {
    if j.twice < 0 {
        return Err(Error::QuantumNumbers(format!("negative j = {j}")));
    }
    if (j.twice - m.twice) % 2 != 0 {
        return Err(Error::QuantumNumbers(format!("j = {j} and m = {m} differ by a half-integer")));
    }
    Ok(())
}

fn cg_cache() -> &'static RwLock<HashMap<[i32; 6], f64>> {
    static CACHE: OnceLock<RwLock<HashMap<[i32; 6], f64>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// ⟨j₁ m₁; j₂ m₂ | j m⟩. Zero outside the triangle or when m ≠ m₁ + m₂.
pub fn cg(j1: HalfInt, m1: HalfInt, j2: HalfInt, m2: HalfInt, j: HalfInt, m: HalfInt) -> Result<f64> {
    check_pair(j1, m1)?;
    check_pair(j2, m2)?;
    check_pair(j, m)?;
    if m1 + m2 != m || m1.twice.abs() > j1.twice || m2.twice.abs() > j2.twice || m.twice.abs() > j.twice {
        return Ok(0.0);
    }
    if j.twice < (j1.twice - j2.twice).abs() || j.twice > j1.twice + j2.twice || (j1.twice + j2.twice + j.twice) % 2 != 0 {
        return Ok(0.0);
    }
    let key = [j1.twice, m1.twice, j2.twice, m2.twice, j.twice, m.twice];
    if let Some(&v) = cg_cache().read().expect("cg cache poisoned").get(&key) {
        return Ok(v);
    }
    let v = racah(key);
    cg_cache().write().expect("cg cache poisoned").insert(key, v);
    Ok(v)
}

/// Integer-argument shorthand for [`cg`].
pub fn cg_int(j1: i32, m1: i32, j2: i32, m2: i32, j: i32, m: i32) -> f64 {
    if j1 < 0 || j2 < 0 || j < 0 {
        return 0.0;
    }
    cg(j1.into(), m1.into(), j2.into(), m2.into(), j.into(), m.into()).expect("integer arguments are well formed")
}

fn racah(key: [i32; 6]) -> f64 {
    let [tj1, tm1, tj2, tm2, tj, tm] = key;
    let h = |x: i32| -> i64 {
        debug_assert!(x % 2 == 0);
        (x / 2) as i64
    };
    let a = h(tj1 + tj2 - tj);
    let b = h(tj1 - tj2 + tj);
    let c = h(-tj1 + tj2 + tj);
    let d = h(tj1 + tj2 + tj) + 1;
    let f = |n: i64| factorial_big(n as usize);
    let radicand_num = BigInt::from(tj + 1)
        * f(a)
        * f(b)
        * f(c)
        * f(h(tj + tm))
        * f(h(tj - tm))
        * f(h(tj1 + tm1))
        * f(h(tj1 - tm1))
        * f(h(tj2 + tm2))
        * f(h(tj2 - tm2));
    let radicand = BigRational::new(radicand_num, f(d));

    let k_lo = 0.max(h(tj2 - tj - tm1)).max(h(tj1 + tm2 - tj));
    let k_hi = a.min(h(tj1 - tm1)).min(h(tj2 + tm2));
    let mut sum = BigRational::zero();
    for k in k_lo..=k_hi {
        let den = f(k) * f(a - k) * f(h(tj1 - tm1) - k) * f(h(tj2 + tm2) - k) * f(h(tj - tj2 + tm1) + k) * f(h(tj - tj1 - tm2) + k);
        let term = BigRational::new(BigInt::from(if k % 2 == 0 { 1 } else { -1 }), den);
        sum += term;
    }
    if sum.is_zero() {
        return 0.0;
    }
    let sgn = if sum.is_negative() { -1.0 } else { 1.0 };
    let sq = radicand * &sum * &sum;
    sgn * sq.to_f64().expect("finite ratio").sqrt()
}

/// Cartesian, ladder or spherical component of J.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum JComponent {
    X,
    Y,
    Z,
    Plus,
    Minus,
    /// Spherical component J·ε₍₁₎(μ), μ ∈ {−1, 0, 1}.
    Spherical(i32),
}

/// ⟨j m′ | J_k | j m⟩.
pub fn j_matrix_element(j: HalfInt, mp: HalfInt, m: HalfInt, component: JComponent) -> Result<C64> {
    check_pair(j, mp)?;
    check_pair(j, m)?;
    if mp.twice.abs() > j.twice || m.twice.abs() > j.twice {
        return Err(Error::QuantumNumbers(format!("|m| exceeds j = {j}")));
    }
    let jj = j.value();
    let mv = m.value();
    let up = if mp.twice == m.twice + 2 { ((jj - mv) * (jj + mv + 1.0)).sqrt() } else { 0.0 };
    let down = if mp.twice == m.twice - 2 { ((jj + mv) * (jj - mv + 1.0)).sqrt() } else { 0.0 };
    let v = match component {
        JComponent::Z => C64::new(if mp == m { mv } else { 0.0 }, 0.0),
        JComponent::Plus => C64::new(up, 0.0),
        JComponent::Minus => C64::new(down, 0.0),
        JComponent::X => C64::new(0.5 * (up + down), 0.0),
        JComponent::Y => C64::new(0.0, -0.5 * (up - down)),
        JComponent::Spherical(mu) => {
            if mu.abs() > 1 {
                return Err(Error::QuantumNumbers(format!("spherical component {mu}")));
            }
            let c = cg(j, m, HalfInt::int(1), HalfInt::int(mu), j, mp)?;
            C64::new((jj * (jj + 1.0)).sqrt() * c, 0.0)
        }
    };
    Ok(v)
}

/// Dense J_x, J_y, J_z in the basis [`m_values`]`(j)`.
pub fn j_matrices(j: HalfInt) -> [DMatrix<C64>; 3] {
    let ms = m_values(j);
    let dim = ms.len();
    let build = |comp| {
        DMatrix::from_fn(dim, dim, |r, c| j_matrix_element(j, ms[r], ms[c], comp).expect("valid m"))
    };
    [build(JComponent::X), build(JComponent::Y), build(JComponent::Z)]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hi(s: &str) -> HalfInt {
        s.parse().unwrap()
    }

    #[test]
    fn parse_and_display() {
        assert_eq!(hi("3/2").twice(), 3);
        assert_eq!(hi("-1/2").twice(), -1);
        assert_eq!(hi("4/2"), HalfInt::int(2));
        assert_eq!(hi(" 2 "), HalfInt::int(2));
        assert!("1/3".parse::<HalfInt>().is_err());
        assert!("x".parse::<HalfInt>().is_err());
        assert_eq!(HalfInt::from_twice(-3).to_string(), "-3/2");
        assert_eq!(HalfInt::int(-1).to_string(), "-1");
    }

    #[test]
    fn identity_coupling() {
        for tj in 0..8 {
            let j = HalfInt::from_twice(tj);
            for m in m_values(j) {
                assert!((cg(j, m, HalfInt::ZERO, HalfInt::ZERO, j, m).unwrap() - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn known_values() {
        assert!((cg_int(1, 0, 1, 0, 2, 0) - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((cg_int(1, 0, 1, 0, 0, 0) + (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(cg_int(1, 0, 1, 0, 1, 0), 0.0);
        let half = HalfInt::from_twice(1);
        let v = cg(half, half, half, -half, HalfInt::int(0), HalfInt::ZERO).unwrap();
        assert!((v - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn particular_raising_coefficient() {
        for tj in 2..9 {
            let j = HalfInt::from_twice(tj);
            for m in m_values(j).into_iter().skip(1) {
                let (jv, mv) = (j.value(), m.value());
                let want = -((jv - mv) * (jv + mv + 1.0)).sqrt() / (2.0 * jv * (jv + 1.0)).sqrt();
                let got = cg(j, m, HalfInt::int(1), HalfInt::int(1), j, m + HalfInt::int(1)).unwrap();
                assert!((got - want).abs() < 1e-14, "j={j} m={m}");
            }
        }
    }

    #[test]
    fn invalid_inputs() {
        assert!(cg(HalfInt::int(-1), HalfInt::ZERO, HalfInt::ZERO, HalfInt::ZERO, HalfInt::ZERO, HalfInt::ZERO).is_err());
        assert!(cg(HalfInt::int(1), HalfInt::from_twice(1), HalfInt::ZERO, HalfInt::ZERO, HalfInt::int(1), HalfInt::from_twice(1)).is_err());
        assert_eq!(cg_int(1, 1, 1, 1, 2, 1), 0.0);
        assert_eq!(cg_int(1, 0, 1, 0, 3, 0), 0.0);
    }

    #[test]
    fn large_j_stays_normalized() {
        let j1 = HalfInt::int(20);
        let j2 = HalfInt::int(20);
        let j = HalfInt::int(20);
        let s: f64 = m_values(j1)
            .into_iter()
            .map(|m1| cg(j1, m1, j2, -m1, j, HalfInt::ZERO).unwrap().powi(2))
            .sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ladder_elements() {
        let j = HalfInt::int(1);
        let v = j_matrix_element(j, HalfInt::int(1), HalfInt::ZERO, JComponent::Plus).unwrap();
        assert!((v.re - 2f64.sqrt()).abs() < 1e-15);
        let v = j_matrix_element(j, HalfInt::int(1), HalfInt::ZERO, JComponent::X).unwrap();
        assert!((v.re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        let v = j_matrix_element(HalfInt::int(3), HalfInt::int(2), HalfInt::int(2), JComponent::Z).unwrap();
        assert_eq!(v.re, 2.0);
    }

    #[test]
    fn commutator_xy_is_iz() {
        for tj in 1..=12 {
            let [jx, jy, jz] = j_matrices(HalfInt::from_twice(tj));
            let comm = &jx * &jy - &jy * &jx;
            let want = jz.map(|z| z * C64::new(0.0, 1.0));
            assert!((comm - want).norm() < 1e-12);
        }
    }
}

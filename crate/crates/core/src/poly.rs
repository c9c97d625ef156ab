//! Exact differentiation of functions `Σ c · x^a y^b z^c |r|^k`.
//!
//! Used to build solid harmonics independently of the standard tensors and to
//! differentiate them without finite-difference noise.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::ops::Add;

use num_complex::Complex64 as C64;

use crate::special::{binomial, factorial};

/// Exponents of x, y, z and of |r|.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial {
    pub pow: [u32; 3],
    pub rpow: i32,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RadialPoly {
    terms: BTreeMap<Monomial, C64>,
}

impl RadialPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: C64) -> Self {
        let mut p = Self::zero();
        p.add_term(Monomial { pow: [0; 3], rpow: 0 }, c);
        p
    }

    pub fn coordinate(i: usize) -> Self {
        let mut pow = [0; 3];
        pow[i] = 1;
        let mut p = Self::zero();
        p.add_term(Monomial { pow, rpow: 0 }, C64::new(1.0, 0.0));
        p
    }

    /// |r|^k.
    pub fn r_power(k: i32) -> Self {
        let mut p = Self::zero();
        p.add_term(Monomial { pow: [0; 3], rpow: k }, C64::new(1.0, 0.0));
        p
    }

    /// (x² + y² + z²)^k expanded into monomials.
    pub fn r_squared_power(k: u32) -> Self {
        let mut p = Self::zero();
        for a in 0..=k {
            for b in 0..=k - a {
                let c = k - a - b;
                let coef = factorial(k as usize) / (factorial(a as usize) * factorial(b as usize) * factorial(c as usize));
                p.add_term(Monomial { pow: [2 * a, 2 * b, 2 * c], rpow: 0 }, C64::new(coef, 0.0));
            }
        }
        p
    }

    pub fn add_term(&mut self, mono: Monomial, c: C64) {
        if c == C64::new(0.0, 0.0) {
            return;
        }
        let e = self.terms.entry(mono).or_insert(C64::new(0.0, 0.0));
        *e += c;
        if *e == C64::new(0.0, 0.0) {
            self.terms.remove(&mono);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &C64)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut p = Self::zero();
        for (m, v) in &self.terms {
            p.add_term(*m, v * c);
        }
        p
    }

    pub fn conj(&self) -> Self {
        Self { terms: self.terms.iter().map(|(m, v)| (*m, v.conj())).collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut p = Self::zero();
        for (ma, va) in &self.terms {
            for (mb, vb) in &other.terms {
                let mono = Monomial {
                    pow: [ma.pow[0] + mb.pow[0], ma.pow[1] + mb.pow[1], ma.pow[2] + mb.pow[2]],
                    rpow: ma.rpow + mb.rpow,
                };
                p.add_term(mono, va * vb);
            }
        }
        p
    }

    /// ∂/∂x_i.
    pub fn derivative(&self, i: usize) -> Self {
        let mut p = Self::zero();
        for (m, v) in &self.terms {
            let a = m.pow[i];
            if a > 0 {
                let mut pow = m.pow;
                pow[i] -= 1;
                p.add_term(Monomial { pow, rpow: m.rpow }, v * a as f64);
            }
            if m.rpow != 0 {
                let mut pow = m.pow;
                pow[i] += 1;
                p.add_term(Monomial { pow, rpow: m.rpow - 2 }, v * m.rpow as f64);
            }
        }
        p
    }

    /// ∂_{i₁} ⋯ ∂_{iₙ}.
    pub fn derivative_along(&self, axes: &[usize]) -> Self {
        axes.iter().fold(self.clone(), |p, &i| p.derivative(i))
    }

    pub fn eval(&self, r: [f64; 3]) -> C64 {
        let norm = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
        self.terms
            .iter()
            .map(|(m, v)| {
                let mut f = r[0].powi(m.pow[0] as i32) * r[1].powi(m.pow[1] as i32) * r[2].powi(m.pow[2] as i32);
                if m.rpow != 0 {
                    f *= norm.powi(m.rpow);
                }
                v * f
            })
            .sum()
    }

    /// The solid harmonic |r|^ℓ Y_ℓm as a homogeneous polynomial, built from the
    /// finite-sum form of P_ℓm with e^{imφ} sin^m θ |r|^m = (x + iy)^m.
    pub fn solid_harmonic(l: u32, m: i32) -> Self {
        assert!(m.unsigned_abs() <= l, "|m| > l");
        if m < 0 {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            return Self::solid_harmonic(l, -m).conj().scale(C64::new(sign, 0.0));
        }
        let (lu, mu) = (l as usize, m as usize);
        let k = ((2 * lu + 1) as f64 / (4.0 * PI) * factorial(lu - mu) / factorial(lu + mu)).sqrt();
        let pre = k * factorial(lu + mu) / factorial(lu);
        let mut p = Self::zero();
        for n1 in mu..=(lu + mu) / 2 {
            let sign = if n1 % 2 == 0 { 1.0 } else { -1.0 };
            let coef = pre * binomial(lu, n1) * binomial(lu - n1, n1 - mu) * sign / 2f64.powi((2 * n1 - mu) as i32);
            let q = n1 - mu;
            let zpow = (lu + mu - 2 * n1) as u32;
            for pp in 0..=mu {
                // (x + iy)^m term: C(m,p) x^{m-p} (iy)^p
                let ip = match pp % 4 {
                    0 => C64::new(1.0, 0.0),
                    1 => C64::new(0.0, 1.0),
                    2 => C64::new(-1.0, 0.0),
                    _ => C64::new(0.0, -1.0),
                };
                for rr in 0..=q {
                    let c = ip * (coef * binomial(mu, pp) * binomial(q, rr));
                    let pow = [(mu - pp + 2 * (q - rr)) as u32, (pp + 2 * rr) as u32, zpow];
                    p.add_term(Monomial { pow, rpow: 0 }, c);
                }
            }
        }
        p
    }

    /// Y_ℓm(r/|r|) as a function on ℝ³ \ {0}.
    pub fn spherical_harmonic(l: u32, m: i32) -> Self {
        Self::solid_harmonic(l, m).mul(&Self::r_power(-(l as i32)))
    }
}

impl Add for &RadialPoly {
    type Output = RadialPoly;
    fn add(self, rhs: &RadialPoly) -> RadialPoly {
        let mut p = self.clone();
        for (m, v) in &rhs.terms {
            p.add_term(*m, *v);
        }
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_of_radius() {
        let r = RadialPoly::r_power(1);
        let dx = r.derivative(0);
        let p = [0.3, -0.4, 1.2];
        let n = (0.09f64 + 0.16 + 1.44).sqrt();
        assert!((dx.eval(p).re - 0.3 / n).abs() < 1e-15);
        // ∇²(1/r) = 0 away from the origin.
        let inv = RadialPoly::r_power(-1);
        let lap = &(&inv.derivative_along(&[0, 0]) + &inv.derivative_along(&[1, 1])) + &inv.derivative_along(&[2, 2]);
        assert!(lap.eval(p).norm() < 1e-14);
    }

    #[test]
    fn low_order_solid_harmonics() {
        let p = [0.2, -0.7, 0.5];
        let y00 = RadialPoly::solid_harmonic(0, 0).eval(p);
        assert!((y00.re - 0.5 / PI.sqrt()).abs() < 1e-15);
        let y10 = RadialPoly::solid_harmonic(1, 0).eval(p);
        assert!((y10.re - (3.0 / (4.0 * PI)).sqrt() * 0.5).abs() < 1e-15);
        let y11 = RadialPoly::solid_harmonic(1, 1).eval(p);
        let want = -(3.0 / (8.0 * PI)).sqrt() * C64::new(0.2, -0.7);
        assert!((y11 - want).norm() < 1e-15);
        let y20 = RadialPoly::solid_harmonic(2, 0).eval(p);
        let want = (5.0 / (16.0 * PI)).sqrt() * (2.0 * 0.25 - 0.04 - 0.49);
        assert!((y20.re - want).abs() < 1e-15);
    }

    #[test]
    fn solid_harmonics_are_harmonic() {
        let p = [0.31, 0.77, -0.42];
        for l in 0..7 {
            for m in -(l as i32)..=l as i32 {
                let h = RadialPoly::solid_harmonic(l, m);
                let lap = &(&h.derivative_along(&[0, 0]) + &h.derivative_along(&[1, 1])) + &h.derivative_along(&[2, 2]);
                assert!(lap.eval(p).norm() < 1e-12, "l={l} m={m}");
            }
        }
    }
}

//! Product quadrature on the unit sphere: Gauss–Legendre in cos θ times the
//! trapezoid rule in φ.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock, RwLock};

use num_complex::Complex64 as C64;

/// Gauss–Legendre nodes and weights on [−1, 1], by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let mut x = (PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_and_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let p2 = ((2 * k + 1) as f64 * x * p1 - k as f64 * p0) / (k + 1) as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (x * p1 - p0) / (x * x - 1.0))
}

/// A precomputed grid of (direction, weight) pairs.
#[derive(Clone, Debug)]
pub struct SphereQuadrature {
    l_max: usize,
    points: Vec<([f64; 3], f64)>,
}

impl SphereQuadrature {
    /// Exact for products Y_ℓ′m′* Y_ℓm with ℓ, ℓ′ ≤ l_max.
    pub fn new(l_max: usize) -> Self {
        let n_theta = (2 * l_max + 3).div_ceil(2);
        let n_phi = 2 * (2 * l_max + 1) + 1;
        let mut points = Vec::with_capacity(n_theta * n_phi);
        for (x, w) in gauss_legendre(n_theta) {
            let st = (1.0 - x * x).max(0.0).sqrt();
            for k in 0..n_phi {
                let phi = 2.0 * PI * k as f64 / n_phi as f64;
                points.push(([st * phi.cos(), st * phi.sin(), x], w * 2.0 * PI / n_phi as f64));
            }
        }
        Self { l_max, points }
    }

    /// Exact for polynomials on the sphere of total degree ≤ `degree`.
    pub fn for_degree(degree: usize) -> Self {
        Self::new(degree.div_ceil(2))
    }

    /// Shared grid from a process-wide cache.
    pub fn shared(l_max: usize) -> Arc<Self> {
        static CACHE: OnceLock<RwLock<HashMap<usize, Arc<SphereQuadrature>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| RwLock::new(HashMap::new()));
        if let Some(q) = cache.read().expect("quadrature cache poisoned").get(&l_max) {
            return q.clone();
        }
        let q = Arc::new(Self::new(l_max));
        cache.write().expect("quadrature cache poisoned").insert(l_max, q.clone());
        q
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    pub fn points(&self) -> &[([f64; 3], f64)] {
        &self.points
    }

    pub fn integrate(&self, mut f: impl FnMut([f64; 3]) -> C64) -> C64 {
        self.points.iter().map(|&(d, w)| f(d) * w).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_exactness() {
        let rule = gauss_legendre(5);
        let w: f64 = rule.iter().map(|p| p.1).sum();
        assert!((w - 2.0).abs() < 1e-14);
        let x8: f64 = rule.iter().map(|&(x, w)| w * x.powi(8)).sum();
        assert!((x8 - 2.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn sphere_area_and_moments() {
        let q = SphereQuadrature::new(3);
        assert!((q.integrate(|_| C64::new(1.0, 0.0)).re - 4.0 * PI).abs() < 1e-13);
        let z2 = q.integrate(|d| C64::new(d[2] * d[2], 0.0)).re;
        assert!((z2 - 4.0 * PI / 3.0).abs() < 1e-13);
        let x2y2 = q.integrate(|d| C64::new(d[0] * d[0] * d[1] * d[1], 0.0)).re;
        assert!((x2y2 - 4.0 * PI / 15.0).abs() < 1e-13);
    }
}

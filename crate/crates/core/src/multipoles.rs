//! Electric and magnetic multipole moments of point charges and current
//! loops, spherical ↔ cartesian conversions, and potentials by expansion or
//! direct summation.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::basis::{eps, irreducible_part};
use crate::error::{Error, Result};
use crate::harmonics::{tensor_sh, ylm, TensorShMethod, UnitVector, YlmMethod};
use crate::special::{double_factorial, factorial};
use crate::tensor::{outer, Tensor};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Prefactors 1/(4πε₀) and μ₀/(4π); both 1 by default.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Units {
    pub electric: f64,
    pub magnetic: f64,
}

impl Default for Units {
    fn default() -> Self {
        Self { electric: 1.0, magnetic: 1.0 }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointCharge {
    pub pos: [f64; 3],
    pub q: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCharges")]
pub struct ChargeDistribution {
    charges: Vec<PointCharge>,
}

#[derive(Deserialize)]
struct RawCharges {
    charges: Vec<PointCharge>,
}

impl TryFrom<RawCharges> for ChargeDistribution {
    type Error = Error;
    fn try_from(raw: RawCharges) -> Result<Self> {
        Self::new(raw.charges)
    }
}

impl ChargeDistribution {
    pub fn new(charges: Vec<PointCharge>) -> Result<Self> {
        if charges.is_empty() {
            return Err(Error::Source("no charges".into()));
        }
        if charges.iter().any(|c| !c.q.is_finite() || c.pos.iter().any(|x| !x.is_finite())) {
            return Err(Error::Source("non-finite charge or position".into()));
        }
        Ok(Self { charges })
    }

    pub fn charges(&self) -> &[PointCharge] {
        &self.charges
    }

    pub fn radius(&self) -> f64 {
        self.charges.iter().map(|c| norm(c.pos)).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurrentLoop {
    #[serde(rename = "I")]
    pub current: f64,
    pub vertices: Vec<[f64; 3]>,
}

/// Closed polylines; each segment contributes a current element I Δl at its midpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLoops")]
pub struct CurrentDistribution {
    loops: Vec<CurrentLoop>,
}

#[derive(Deserialize)]
struct RawLoops {
    loops: Vec<CurrentLoop>,
}

impl TryFrom<RawLoops> for CurrentDistribution {
    type Error = Error;
    fn try_from(raw: RawLoops) -> Result<Self> {
        Self::new(raw.loops)
    }
}

impl CurrentDistribution {
    pub fn new(loops: Vec<CurrentLoop>) -> Result<Self> {
        if loops.is_empty() {
            return Err(Error::Source("no loops".into()));
        }
        for (k, l) in loops.iter().enumerate() {
            if l.vertices.len() < 3 {
                return Err(Error::Source(format!("loop {k} has fewer than 3 vertices")));
            }
            let (a, b) = (l.vertices[0], l.vertices[l.vertices.len() - 1]);
            if a != b {
                return Err(Error::Source(format!("loop {k} is open: first vertex {a:?} ≠ last vertex {b:?}")));
            }
        }
        Ok(Self { loops })
    }

    pub fn loops(&self) -> &[CurrentLoop] {
        &self.loops
    }

    /// Splits every segment into `k` equal pieces.
    pub fn refine(&self, k: usize) -> Self {
        let k = k.max(1);
        let loops = self
            .loops
            .iter()
            .map(|l| {
                let mut v = Vec::with_capacity((l.vertices.len() - 1) * k + 1);
                for w in l.vertices.windows(2) {
                    for t in 0..k {
                        let f = t as f64 / k as f64;
                        v.push(std::array::from_fn(|i| w[0][i] + f * (w[1][i] - w[0][i])));
                    }
                }
                v.push(l.vertices[0]);
                CurrentLoop { current: l.current, vertices: v }
            })
            .collect();
        Self { loops }
    }

    /// (midpoint, I Δl) for every segment.
    pub fn elements(&self) -> Vec<([f64; 3], [f64; 3])> {
        self.loops
            .iter()
            .flat_map(|l| {
                l.vertices.windows(2).map(move |w| {
                    let mid = std::array::from_fn(|i| 0.5 * (w[0][i] + w[1][i]));
                    let dl = std::array::from_fn(|i| l.current * (w[1][i] - w[0][i]));
                    (mid, dl)
                })
            })
            .collect()
    }

    pub fn radius(&self) -> f64 {
        self.loops.iter().flat_map(|l| l.vertices.iter()).map(|&v| norm(v)).fold(0.0, f64::max)
    }
}

fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dir_or_z(v: [f64; 3]) -> UnitVector {
    UnitVector::new(v).unwrap_or_else(|_| UnitVector::ez())
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultipoleKind {
    Electric,
    Magnetic,
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct SphericalMoment {
    pub n: usize,
    pub m: i32,
    pub value: C64,
}

/// m^ℓ_jm for every coupled channel j ∈ {ℓ−1, ℓ, ℓ+1}.
#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct MagneticChannel {
    pub l: usize,
    pub j: usize,
    pub m: i32,
    pub value: C64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CartesianMoment {
    pub n: usize,
    pub tensor: Tensor,
}

/// Spherical moments q_nm (electric) or m^ℓ_ℓm (magnetic) with the matching
/// cartesian tensors Q or M, each computed directly from the source.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MultipoleSet {
    pub kind: MultipoleKind,
    pub n_max: usize,
    pub spherical: Vec<SphericalMoment>,
    pub cartesian: Vec<CartesianMoment>,
    /// Largest difference between the directly computed cartesian tensors and
    /// those converted from the spherical moments.
    pub conversion_error: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub channels: Vec<MagneticChannel>,
    /// max |m^ℓ_{(ℓ+1)m}|; zero for an exactly divergence-free static source.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub continuity_residual: Option<f64>,
}

impl MultipoleSet {
    pub fn spherical(&self, n: usize, m: i32) -> C64 {
        self.spherical.iter().find(|e| e.n == n && e.m == m).map_or(ZERO, |e| e.value)
    }

    /// Moments of order n, m = n … −n.
    pub fn spherical_row(&self, n: usize) -> Vec<C64> {
        (-(n as i32)..=n as i32).rev().map(|m| self.spherical(n, m)).collect()
    }

    pub fn cartesian(&self, n: usize) -> Option<&Tensor> {
        self.cartesian.iter().find(|e| e.n == n).map(|e| &e.tensor)
    }

    pub fn channel(&self, l: usize, j: usize, m: i32) -> C64 {
        self.channels.iter().find(|e| e.l == l && e.j == j && e.m == m).map_or(ZERO, |e| e.value)
    }
}

/// Q = √(4π) √(n!(2n−1)!!/(2n+1)) Σ_m q_nm ε₍ₙ₎(m)*; `q` ordered m = n … −n.
pub fn electric_spherical_to_cartesian(n: usize, q: &[C64]) -> Result<Tensor> {
    if q.len() != 2 * n + 1 {
        return Err(Error::EntryCount { expected: 2 * n + 1, found: q.len() });
    }
    let c = (4.0 * PI).sqrt() * (factorial(n) * df(2 * n as i64 - 1) / (2 * n + 1) as f64).sqrt();
    let mut out = Tensor::zeros(n);
    for (k, v) in q.iter().enumerate() {
        out.add_scaled(v * c, &eps(n, n as i32 - k as i32).conj());
    }
    Ok(out)
}

/// q_nm = √((2n+1)/(n!(2n−1)!!)) / √(4π) Q·ε₍ₙ₎(m), m = n … −n.
pub fn electric_cartesian_to_spherical(q: &Tensor) -> Vec<C64> {
    let n = q.rank();
    let c = ((2 * n + 1) as f64 / (factorial(n) * df(2 * n as i64 - 1))).sqrt() / (4.0 * PI).sqrt();
    (-(n as i32)..=n as i32).rev().map(|m| q.dot(&eps(n, m)) * c).collect()
}

fn magnetic_c(l: usize) -> C64 {
    let c = (4.0 * PI).sqrt() * (factorial(l) * df(2 * l as i64 - 1) / (2 * l + 1) as f64).sqrt() * (l as f64 / (l + 1) as f64).sqrt();
    C64::new(0.0, c)
}

/// M = i √(4π) √(ℓ!(2ℓ−1)!!/(2ℓ+1)) √(ℓ/(ℓ+1)) Σ_m m^ℓ_ℓm ε₍ℓ₎(m)*; `mm` ordered m = ℓ … −ℓ.
///
/// This carries the factor N_ℓ that makes the cartesian expansion of A agree
/// with the spherical one, and mirrors the electric conversion.
pub fn magnetic_spherical_to_cartesian(l: usize, mm: &[C64]) -> Result<Tensor> {
    if l == 0 {
        return Err(Error::QuantumNumbers("magnetic moments start at ℓ = 1".into()));
    }
    if mm.len() != 2 * l + 1 {
        return Err(Error::EntryCount { expected: 2 * l + 1, found: mm.len() });
    }
    let c = magnetic_c(l);
    let mut out = Tensor::zeros(l);
    for (k, v) in mm.iter().enumerate() {
        out.add_scaled(v * c, &eps(l, l as i32 - k as i32).conj());
    }
    Ok(out)
}

/// m^ℓ_ℓm = −i √((2ℓ+1)/(ℓ!(2ℓ−1)!!)) √((ℓ+1)/ℓ) ε₍ℓ₎(m)·M / √(4π).
pub fn magnetic_cartesian_to_spherical(mt: &Tensor) -> Result<Vec<C64>> {
    let l = mt.rank();
    if l == 0 {
        return Err(Error::QuantumNumbers("magnetic moments start at ℓ = 1".into()));
    }
    let c = magnetic_c(l).inv();
    Ok((-(l as i32)..=l as i32).rev().map(|m| mt.dot(&eps(l, m)) * c).collect())
}

fn df(n: i64) -> f64 {
    double_factorial(n).expect("odd argument ≥ −1")
}

fn real_power(v: [f64; 3], n: usize) -> Tensor {
    Tensor::outer_power(&v.map(|x| C64::new(x, 0.0)), n)
}

pub fn electric_moments(d: &ChargeDistribution, n_max: usize) -> MultipoleSet {
    let mut spherical = Vec::new();
    let mut cartesian = Vec::new();
    let mut conversion_error: f64 = 0.0;
    for n in 0..=n_max {
        let mut raw = Tensor::zeros(n);
        for c in &d.charges {
            raw.add_scaled(C64::new(c.q, 0.0), &real_power(c.pos, n));
        }
        let q_cart = irreducible_part(&raw).scale_real(df(2 * n as i64 - 1));
        let mut row = Vec::with_capacity(2 * n + 1);
        for m in (-(n as i32)..=n as i32).rev() {
            let mut acc = ZERO;
            for c in &d.charges {
                let r = norm(c.pos);
                if n > 0 && r == 0.0 {
                    continue;
                }
                acc += ylm(n, m, &dir_or_z(c.pos), YlmMethod::Analytic).expect("valid (n, m)") * (c.q * r.powi(n as i32));
            }
            row.push(acc);
            spherical.push(SphericalMoment { n, m, value: acc });
        }
        let back = electric_spherical_to_cartesian(n, &row).expect("row length");
        conversion_error = conversion_error.max(back.max_abs_diff(&q_cart));
        cartesian.push(CartesianMoment { n, tensor: q_cart });
    }
    MultipoleSet {
        kind: MultipoleKind::Electric,
        n_max,
        spherical,
        cartesian,
        conversion_error,
        channels: Vec::new(),
        continuity_residual: None,
    }
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldMethod {
    #[default]
    Direct,
    Spherical,
    Cartesian,
    /// Every coupled channel j = ℓ−1, ℓ, ℓ+1 of the vector potential, including
    /// the gradient (gauge) channel the reduced expansions drop.
    SphericalFull,
}

fn check_outside(r: [f64; 3], source_radius: f64) -> Result<()> {
    let radius = norm(r);
    if radius <= source_radius {
        return Err(Error::InsideSourceRadius { radius, source_radius });
    }
    Ok(())
}

pub fn electric_potential(d: &ChargeDistribution, r: [f64; 3], method: FieldMethod, n_max: usize, units: Units) -> Result<f64> {
    let phi = match method {
        FieldMethod::Direct => d
            .charges
            .iter()
            .map(|c| c.q / norm(std::array::from_fn(|i| r[i] - c.pos[i])))
            .sum(),
        FieldMethod::Spherical | FieldMethod::SphericalFull => {
            check_outside(r, d.radius())?;
            let set = electric_moments(d, n_max);
            let rn = norm(r);
            let dir = UnitVector::new(r)?;
            let mut acc = ZERO;
            for e in &set.spherical {
                acc += e.value.conj() * ylm(e.n, e.m, &dir, YlmMethod::Analytic)? * (4.0 * PI / (2 * e.n + 1) as f64 / rn.powi(e.n as i32 + 1));
            }
            acc.re
        }
        FieldMethod::Cartesian => {
            check_outside(r, d.radius())?;
            let set = electric_moments(d, n_max);
            let rn = norm(r);
            let mut acc = ZERO;
            for e in &set.cartesian {
                acc += e.tensor.contract_last_real(&r, e.n).value() / (factorial(e.n) * rn.powi(2 * e.n as i32 + 1));
            }
            acc.re
        }
    };
    Ok(units.electric * phi)
}

pub fn magnetic_moments(c: &CurrentDistribution, l_max: usize) -> MultipoleSet {
    let elems = c.elements();
    let mut spherical = Vec::new();
    let mut cartesian = Vec::new();
    let mut channels = Vec::new();
    let mut conversion_error: f64 = 0.0;
    let mut continuity: f64 = 0.0;
    for l in 0..=l_max {
        for j in l.saturating_sub(1)..=l + 1 {
            if j == 0 && l == 0 {
                continue;
            }
            for m in (-(j as i32)..=j as i32).rev() {
                let mut acc = ZERO;
                for &(mid, dl) in &elems {
                    let r = norm(mid);
                    if l > 0 && r == 0.0 {
                        continue;
                    }
                    let y = tensor_sh(l, 1, j, m, &dir_or_z(mid), TensorShMethod::CgSum).expect("valid channel");
                    let dot: C64 = (0..3).map(|i| y.get(&[i]) * dl[i]).sum();
                    acc += dot * r.powi(l as i32);
                }
                channels.push(MagneticChannel { l, j, m, value: acc });
                if j == l {
                    spherical.push(SphericalMoment { n: l, m, value: acc });
                }
                if j == l + 1 {
                    continuity = continuity.max(acc.norm());
                }
            }
        }
        if l == 0 {
            continue;
        }
        let mut raw = Tensor::zeros(l);
        for &(mid, dl) in &elems {
            let jr = cross(dl, mid).map(|x| C64::new(x, 0.0));
            raw += &outer(&Tensor::vector(jr), &real_power(mid, l - 1)).expect("rank within cap");
        }
        // M = (2ℓ−1)!! ℓ/(ℓ+1) [∫ (j ∧ r′) r′…r′]₀
        let mt = irreducible_part(&raw).scale_real(df(2 * l as i64 - 1) * l as f64 / (l + 1) as f64);
        let row: Vec<C64> = (-(l as i32)..=l as i32)
            .rev()
            .map(|m| spherical.iter().find(|e| e.n == l && e.m == m).expect("stored").value)
            .collect();
        let back = magnetic_spherical_to_cartesian(l, &row).expect("row length");
        conversion_error = conversion_error.max(back.max_abs_diff(&mt));
        cartesian.push(CartesianMoment { n: l, tensor: mt });
    }
    MultipoleSet {
        kind: MultipoleKind::Magnetic,
        n_max: l_max,
        spherical,
        cartesian,
        conversion_error,
        channels,
        continuity_residual: Some(continuity),
    }
}

/// A(r). `qdot`, when given, is an electric set of time derivatives q̇ with
/// n_max ≥ ℓ_max + 1 and adds the second-line terms to the expansions.
pub fn vector_potential(
    c: &CurrentDistribution,
    r: [f64; 3],
    method: FieldMethod,
    l_max: usize,
    qdot: Option<&MultipoleSet>,
    units: Units,
) -> Result<[f64; 3]> {
    if let Some(q) = qdot {
        if q.kind != MultipoleKind::Electric || q.n_max < l_max + 1 {
            return Err(Error::Source(format!("q̇ set must be electric with n_max ≥ {}", l_max + 1)));
        }
    }
    let mut a = [ZERO; 3];
    let rn = norm(r);
    match method {
        FieldMethod::Direct => {
            for (mid, dl) in c.elements() {
                let dist = norm(std::array::from_fn(|i| r[i] - mid[i]));
                for i in 0..3 {
                    a[i] += dl[i] / dist;
                }
            }
        }
        FieldMethod::Spherical | FieldMethod::SphericalFull => {
            check_outside(r, c.radius())?;
            let set = magnetic_moments(c, l_max);
            let dir = UnitVector::new(r)?;
            for ch in &set.channels {
                let keep = match method {
                    FieldMethod::Spherical => ch.j == ch.l,
                    _ => true,
                };
                if !keep || (method == FieldMethod::Spherical && ch.l == 0) {
                    continue;
                }
                let y = tensor_sh(ch.l, 1, ch.j, ch.m, &dir, TensorShMethod::CgSum)?;
                let w = ch.value.conj() * (4.0 * PI / (2 * ch.l + 1) as f64 / rn.powi(ch.l as i32 + 1));
                for i in 0..3 {
                    a[i] += w * y.get(&[i]);
                }
            }
            if let (Some(q), FieldMethod::Spherical) = (qdot, method) {
                for l in 0..=l_max {
                    let pre = 4.0 * PI / (2 * l + 1) as f64 / (((l + 1) * (2 * l + 3)) as f64).sqrt() / rn.powi(l as i32 + 1);
                    for m in -(l as i32 + 1)..=l as i32 + 1 {
                        let y = tensor_sh(l, 1, l + 1, m, &dir, TensorShMethod::CgSum)?;
                        let w = q.spherical(l + 1, m).conj() * pre;
                        for i in 0..3 {
                            a[i] += w * y.get(&[i]);
                        }
                    }
                }
            }
        }
        FieldMethod::Cartesian => {
            check_outside(r, c.radius())?;
            let set = magnetic_moments(c, l_max);
            for e in &set.cartesian {
                let l = e.n;
                let v = e.tensor.conj().contract_last_real(&r, l - 1);
                let vh: [C64; 3] = std::array::from_fn(|h| v.get(&[h]));
                let pre = 1.0 / (factorial(l) * rn.powi(2 * l as i32 + 1));
                // ε_{j k h} r_k v_h = (r × v)_j
                a[0] += (vh[2] * r[1] - vh[1] * r[2]) * pre;
                a[1] += (vh[0] * r[2] - vh[2] * r[0]) * pre;
                a[2] += (vh[1] * r[0] - vh[0] * r[1]) * pre;
            }
            if let Some(q) = qdot {
                for l in 0..=l_max {
                    let qt = q.cartesian(l + 1).expect("n_max checked").conj();
                    let v = qt.permute_indices(&rotate_last_first(l + 1)).contract_last_real(&r, l);
                    let pre = 1.0 / (factorial(l) * rn.powi(2 * l as i32 + 1) * ((l + 1) * (2 * l + 1)) as f64);
                    for i in 0..3 {
                        a[i] += v.get(&[i]) * pre;
                    }
                }
            }
        }
    }
    Ok(a.map(|z| units.magnetic * z.re))
}

/// Permutation moving the last index to the front (Q symmetric makes this a no-op in value).
fn rotate_last_first(n: usize) -> Vec<usize> {
    (0..n).map(|i| (i + n - 1) % n).collect()
}

/// B = ∇ × A by central differences of the given method.
pub fn magnetic_field_fd(c: &CurrentDistribution, r: [f64; 3], method: FieldMethod, l_max: usize, h: f64) -> Result<[f64; 3]> {
    let mut grad = [[0.0; 3]; 3]; // grad[k][i] = ∂_k A_i
    for k in 0..3 {
        let mut p = r;
        p[k] += h;
        let ap = vector_potential(c, p, method, l_max, None, Units::default())?;
        p[k] -= 2.0 * h;
        let am = vector_potential(c, p, method, l_max, None, Units::default())?;
        for i in 0..3 {
            grad[k][i] = (ap[i] - am[i]) / (2.0 * h);
        }
    }
    Ok([grad[1][2] - grad[2][1], grad[2][0] - grad[0][2], grad[0][1] - grad[1][0]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn square(side: f64, z: f64) -> CurrentLoop {
        let h = side / 2.0;
        CurrentLoop { current: 1.0, vertices: vec![[-h, -h, z], [h, -h, z], [h, h, z], [-h, h, z], [-h, -h, z]] }
    }

    fn positive_cloud(seed: u64, k: usize) -> ChargeDistribution {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ChargeDistribution::new(
            (0..k)
                .map(|_| PointCharge { pos: std::array::from_fn(|_| rng.gen_range(-0.5..0.5)), q: rng.gen_range(0.1..1.0) })
                .collect(),
        )
        .unwrap()
    }

    fn cloud(seed: u64, k: usize) -> ChargeDistribution {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ChargeDistribution::new(
            (0..k)
                .map(|_| PointCharge { pos: std::array::from_fn(|_| rng.gen_range(-0.5..0.5)), q: rng.gen_range(-1.0..1.0) })
                .collect(),
        )
        .unwrap()
    }

    fn wobbly_loop(seed: u64, k: usize) -> CurrentDistribution {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v: Vec<[f64; 3]> = (0..k)
            .map(|t| {
                let ph = 2.0 * PI * t as f64 / k as f64;
                let rad = 0.6 + rng.gen_range(-0.2..0.2);
                [rad * ph.cos(), rad * ph.sin(), rng.gen_range(-0.3..0.3)]
            })
            .collect();
        v.push(v[0]);
        CurrentDistribution::new(vec![CurrentLoop { current: 1.3, vertices: v }]).unwrap()
    }

    #[test]
    fn unit_charge_and_offset_charge() {
        let d = ChargeDistribution::new(vec![PointCharge { pos: [0.0; 3], q: 1.0 }]).unwrap();
        let s = electric_moments(&d, 3);
        assert!((s.spherical(0, 0).re - 1.0 / (4.0 * PI).sqrt()).abs() < 1e-15);
        assert!((s.cartesian(0).unwrap().value().re - 1.0).abs() < 1e-15);
        for n in 1..=3 {
            assert_eq!(s.cartesian(n).unwrap().max_abs(), 0.0);
        }
        let (q, dz) = (2.5, 0.4);
        let d = ChargeDistribution::new(vec![PointCharge { pos: [0.0, 0.0, dz], q }]).unwrap();
        let s = electric_moments(&d, 2);
        assert!((s.spherical(1, 0).re - q * dz * (3.0 / (4.0 * PI)).sqrt()).abs() < 1e-14);
        assert!((s.cartesian(1).unwrap().get(&[2]).re - q * dz).abs() < 1e-14);
        let pair = ChargeDistribution::new(vec![
            PointCharge { pos: [0.0, 0.0, dz / 2.0], q },
            PointCharge { pos: [0.0, 0.0, -dz / 2.0], q: -q },
        ])
        .unwrap();
        let s = electric_moments(&pair, 2);
        assert!((s.cartesian(1).unwrap().get(&[2]).re - q * dz).abs() < 1e-14);
        assert!(s.cartesian(0).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn electric_conversion_round_trip() {
        let d = cloud(7, 8);
        let s = electric_moments(&d, 6);
        assert!(s.conversion_error < 1e-12, "{}", s.conversion_error);
        for n in 0..=6 {
            let qc = s.cartesian(n).unwrap();
            assert!(qc.max_asymmetry(n) < 1e-12 && qc.max_trace(n) < 1e-12);
            let row = electric_cartesian_to_spherical(qc);
            for (a, b) in row.iter().zip(s.spherical_row(n)) {
                assert!((a - b).norm() < 1e-12);
            }
            for m in -(n as i32)..=n as i32 {
                let want = s.spherical(n, -m).conj() * if m % 2 == 0 { 1.0 } else { -1.0 };
                assert!((s.spherical(n, m) - want).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn potential_expansions() {
        let single = ChargeDistribution::new(vec![PointCharge { pos: [0.1, -0.2, 0.05], q: 1.7 }]).unwrap();
        let at = [0.0, 0.0, 0.0];
        let p = electric_potential(&single, at, FieldMethod::Direct, 0, Units::default()).unwrap();
        assert!((p - 1.7 / (0.01f64 + 0.04 + 0.0025).sqrt()).abs() < 1e-12);
        let d = positive_cloud(11, 8);
        let r = d.radius() * 3.0;
        let at = [r * 0.48, -r * 0.6, r * 0.64];
        let direct = electric_potential(&d, at, FieldMethod::Direct, 0, Units::default()).unwrap();
        let sph = electric_potential(&d, at, FieldMethod::Spherical, 8, Units::default()).unwrap();
        let cart = electric_potential(&d, at, FieldMethod::Cartesian, 8, Units::default()).unwrap();
        assert!((sph - cart).abs() < 1e-12 * direct.abs().max(1e-3));
        assert!(((sph - direct) / direct).abs() < 1e-4, "{sph} {direct}");
        let inside = [0.1, 0.0, 0.0];
        assert!(matches!(electric_potential(&d, inside, FieldMethod::Spherical, 2, Units::default()), Err(Error::InsideSourceRadius { .. })));
        let units = Units { electric: 2.0, magnetic: 1.0 };
        assert!((electric_potential(&d, at, FieldMethod::Direct, 0, units).unwrap() - 2.0 * direct).abs() < 1e-14);
    }

    #[test]
    fn square_loop_moments() {
        let side = 0.8;
        let c = CurrentDistribution::new(vec![square(side, 0.0)]).unwrap().refine(8);
        let s = magnetic_moments(&c, 4);
        let m1 = s.cartesian(1).unwrap();
        // M₁ = ½ ∫ j ∧ r′ = −μ = −I A ẑ for a counter-clockwise loop
        let area = side * side;
        assert!((m1.get(&[2]).re + area).abs() < 1e-12);
        assert!(m1.get(&[0]).norm() < 1e-14 && m1.get(&[1]).norm() < 1e-14);
        assert!(s.conversion_error < 1e-10, "{}", s.conversion_error);
        for l in 1..=4 {
            let row = magnetic_cartesian_to_spherical(s.cartesian(l).unwrap()).unwrap();
            let back = magnetic_spherical_to_cartesian(l, &row).unwrap();
            assert!(back.max_abs_diff(s.cartesian(l).unwrap()) < 1e-12);
            for (a, b) in row.iter().zip(s.spherical_row(l)) {
                assert!((a - b).norm() < 1e-10);
            }
        }
        assert!(!s.spherical.iter().any(|e| e.n == 0));
        assert!(magnetic_spherical_to_cartesian(0, &[ZERO]).is_err());
    }

    #[test]
    fn continuity_channel_shrinks_under_refinement() {
        let base = wobbly_loop(3, 7);
        let r1 = magnetic_moments(&base.refine(4), 3).continuity_residual.unwrap();
        let r2 = magnetic_moments(&base.refine(8), 3).continuity_residual.unwrap();
        let r3 = magnetic_moments(&base.refine(16), 3).continuity_residual.unwrap();
        assert!(r2 < r1 / 2.0 && r3 < r2 / 2.0, "{r1} {r2} {r3}");
    }

    #[test]
    fn vector_potential_expansions() {
        let c = wobbly_loop(5, 9).refine(6);
        let rad = c.radius();
        let at = [rad * 2.4, rad * 1.2, -rad * 2.88];
        let direct = vector_potential(&c, at, FieldMethod::Direct, 0, None, Units::default()).unwrap();
        let sph = vector_potential(&c, at, FieldMethod::Spherical, 4, None, Units::default()).unwrap();
        let cart = vector_potential(&c, at, FieldMethod::Cartesian, 4, None, Units::default()).unwrap();
        let full = vector_potential(&c, at, FieldMethod::SphericalFull, 6, None, Units::default()).unwrap();
        let scale = norm(direct);
        for i in 0..3 {
            assert!((sph[i] - cart[i]).abs() < 1e-10 * scale);
            assert!((full[i] - direct[i]).abs() < 1e-3 * scale, "{full:?} {direct:?}");
        }
        let rdot = |a: [f64; 3]| (0..3).map(|i| a[i] * at[i]).sum::<f64>();
        assert!(rdot(sph).abs() < 1e-12 * scale * norm(at));
        // the reduced expansion differs from the direct one by a gradient only
        let bd = magnetic_field_fd(&c, at, FieldMethod::Direct, 0, 1e-4).unwrap();
        let bs = magnetic_field_fd(&c, at, FieldMethod::Spherical, 6, 1e-4).unwrap();
        let bscale = norm(bd);
        for i in 0..3 {
            assert!((bs[i] - bd[i]).abs() < 1e-3 * bscale, "{bs:?} {bd:?}");
        }
    }

    #[test]
    fn square_loop_dipole_pattern() {
        let side = 0.2;
        let c = CurrentDistribution::new(vec![square(side, 0.0)]).unwrap();
        let at = [3.0, 1.0, 2.0];
        let a = vector_potential(&c, at, FieldMethod::Direct, 0, None, Units::default()).unwrap();
        // μ = I A ẑ; A = μ × r / |r|³
        let mu = [0.0, 0.0, side * side];
        let rn = norm(at);
        let want = cross(mu, at).map(|x| x / rn.powi(3));
        for i in 0..3 {
            assert!((a[i] - want[i]).abs() < 1e-2 * norm(want));
        }
    }

    #[test]
    fn time_derivative_terms_agree() {
        let c = CurrentDistribution::new(vec![square(0.5, 0.1)]).unwrap();
        let qdot = electric_moments(&cloud(2, 5), 4);
        let at = [1.5, -0.7, 2.2];
        let sph = vector_potential(&c, at, FieldMethod::Spherical, 3, Some(&qdot), Units::default()).unwrap();
        let cart = vector_potential(&c, at, FieldMethod::Cartesian, 3, Some(&qdot), Units::default()).unwrap();
        for i in 0..3 {
            assert!((sph[i] - cart[i]).abs() < 1e-10, "{sph:?} {cart:?}");
        }
        assert!(vector_potential(&c, at, FieldMethod::Spherical, 4, Some(&qdot), Units::default()).is_err());
    }

    #[test]
    fn source_validation_and_json() {
        let open = CurrentLoop { current: 1.0, vertices: vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]] };
        assert!(CurrentDistribution::new(vec![open]).is_err());
        assert!(ChargeDistribution::new(vec![]).is_err());
        let d: ChargeDistribution = serde_json::from_str(r#"{"charges":[{"pos":[0,0,1],"q":2}]}"#).unwrap();
        assert_eq!(d.charges()[0].q, 2.0);
        let c: CurrentDistribution =
            serde_json::from_str(r#"{"loops":[{"I":1.5,"vertices":[[0,0,0],[1,0,0],[0,1,0],[0,0,0]]}]}"#).unwrap();
        assert_eq!(c.loops()[0].current, 1.5);
        assert!(serde_json::from_str::<CurrentDistribution>(r#"{"loops":[{"I":1,"vertices":[[0,0,0],[1,0,0],[0,1,0]]}]}"#).is_err());
        let s = serde_json::to_value(magnetic_moments(&c, 1)).unwrap();
        assert_eq!(s["kind"], "magnetic");
    }
}

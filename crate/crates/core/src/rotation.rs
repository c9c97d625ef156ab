//! Spin matrices S₍ₙ₎ on rank-n tensor space, proper rotations, their
//! Kronecker powers, and Wigner D-matrices through the cartesian route.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use nalgebra::{DMatrix, Matrix3};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::basis::{eps, eps1};
use crate::error::{Error, Result};
use crate::special::factorial;
use crate::tensor::{levi_civita, pow3, rank_cap, MultiIndex, Tensor};

const ZERO: C64 = C64::new(0.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Largest rank with a dense spin matrix: 6, or lower if the rank cap is lower.
pub fn dense_spin_cap() -> usize {
    6.min(rank_cap())
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpinKind {
    /// S_k with k ∈ {0, 1, 2} for x, y, z.
    Component(usize),
    Squared,
}

/// A spin operator on rank-n tensors: dense up to [`dense_spin_cap`], lazy beyond.
#[derive(Clone, Debug)]
pub enum SpinOperator {
    Dense { n: usize, kind: SpinKind, matrix: Arc<DMatrix<C64>> },
    Lazy { n: usize, kind: SpinKind },
}

impl SpinOperator {
    pub fn n(&self) -> usize {
        match self {
            Self::Dense { n, .. } | Self::Lazy { n, .. } => *n,
        }
    }

    pub fn kind(&self) -> SpinKind {
        match self {
            Self::Dense { kind, .. } | Self::Lazy { kind, .. } => *kind,
        }
    }

    pub fn dense(&self) -> Option<&DMatrix<C64>> {
        match self {
            Self::Dense { matrix, .. } => Some(matrix),
            Self::Lazy { .. } => None,
        }
    }

    pub fn apply(&self, t: &Tensor) -> Result<Tensor> {
        if t.rank() != self.n() {
            return Err(Error::RankMismatch { expected: self.n(), found: t.rank() });
        }
        Ok(match self {
            Self::Dense { matrix, .. } => {
                let v = nalgebra::DVector::from_column_slice(t.entries());
                let out = matrix.as_ref() * v;
                Tensor::from_entries(t.rank(), out.as_slice().to_vec())?
            }
            Self::Lazy { kind: SpinKind::Component(k), .. } => apply_spin(*k, t),
            Self::Lazy { kind: SpinKind::Squared, .. } => apply_spin_squared(t),
        })
    }
}

/// (S₍₁₎_k)_{i;j} = i ε_{ikj} as a 3×3 array.
pub fn spin1(k: usize) -> [[C64; 3]; 3] {
    let mut m = [[ZERO; 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = I * levi_civita(i, k, j);
        }
    }
    m
}

/// S₍ₙ₎_k applied to `t` without forming the matrix.
pub fn apply_spin(k: usize, t: &Tensor) -> Tensor {
    let s = spin1(k);
    let mut out = Tensor::zeros(t.rank());
    for slot in 0..t.rank() {
        out += &t.apply_to_index(slot, &s);
    }
    out
}

/// (d·S₍ₙ₎) applied to `t`.
pub fn apply_spin_along(d: [f64; 3], t: &Tensor) -> Tensor {
    let mut m = [[ZERO; 3]; 3];
    for (k, &dk) in d.iter().enumerate() {
        let s = spin1(k);
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += s[i][j] * dk;
            }
        }
    }
    let mut out = Tensor::zeros(t.rank());
    for slot in 0..t.rank() {
        out += &t.apply_to_index(slot, &m);
    }
    out
}

/// S₍ₙ₎² applied to `t` as Σ_k S_k(S_k t).
pub fn apply_spin_squared(t: &Tensor) -> Tensor {
    let mut out = Tensor::zeros(t.rank());
    for k in 0..3 {
        out += &apply_spin(k, &apply_spin(k, t));
    }
    out
}

type DenseCache = RwLock<HashMap<(usize, SpinKind), Arc<DMatrix<C64>>>>;

fn dense_cache() -> &'static DenseCache {
    static CACHE: OnceLock<DenseCache> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

fn cached(n: usize, kind: SpinKind, build: impl FnOnce() -> DMatrix<C64>) -> Arc<DMatrix<C64>> {
    if let Some(m) = dense_cache().read().expect("spin cache poisoned").get(&(n, kind)) {
        return m.clone();
    }
    let m = Arc::new(build());
    dense_cache().write().expect("spin cache poisoned").insert((n, kind), m.clone());
    m
}

fn check_dense(n: usize) -> Result<()> {
    if n > dense_spin_cap() {
        return Err(Error::DenseCap { rank: n, cap: dense_spin_cap() });
    }
    Ok(())
}

/// S₍ₙ₎_k, dense when n is within the cap.
pub fn spin_matrix(n: usize, k: usize) -> Result<SpinOperator> {
    assert!(k < 3, "component index");
    let kind = SpinKind::Component(k);
    if n > dense_spin_cap() {
        return Ok(SpinOperator::Lazy { n, kind });
    }
    let matrix = cached(n, kind, || spin_matrix_direct(n, k));
    Ok(SpinOperator::Dense { n, kind, matrix })
}

/// S₍ₙ₎², dense when n is within the cap.
pub fn spin_squared(n: usize) -> Result<SpinOperator> {
    if n > dense_spin_cap() {
        return Ok(SpinOperator::Lazy { n, kind: SpinKind::Squared });
    }
    let matrix = cached(n, SpinKind::Squared, || spin_squared_direct(n));
    Ok(SpinOperator::Dense { n, kind: SpinKind::Squared, matrix })
}

/// Dense S₍ₙ₎_k from (S_k)_{I;J} = Σ_t i ε_{i_t k j_t} Π_{p≠t} δ_{i_p j_p}.
pub fn spin_matrix_dense(n: usize, k: usize) -> Result<DMatrix<C64>> {
    check_dense(n)?;
    Ok(spin_matrix_direct(n, k))
}

fn spin_matrix_direct(n: usize, k: usize) -> DMatrix<C64> {
    let dim = pow3(n);
    let mut m = DMatrix::from_element(dim, dim, ZERO);
    for col in 0..dim {
        let jd = MultiIndex::from_offset(n, col);
        for t in 0..n {
            let stride = pow3(n - 1 - t);
            let jt = jd.digits()[t] as usize;
            for it in 0..3 {
                let e = levi_civita(it, k, jt);
                if e != 0.0 {
                    let row = col - jt * stride + it * stride;
                    m[(row, col)] += I * e;
                }
            }
        }
    }
    m
}

/// Dense S₍ₙ₎_k by the recursion S₍ₚ₊₁₎ = S₍ₚ₎ ⊗ I + I ⊗ S₍₁₎.
pub fn spin_matrix_recursive(n: usize, k: usize) -> Result<DMatrix<C64>> {
    check_dense(n)?;
    let s1 = DMatrix::from_fn(3, 3, |i, j| spin1(k)[i][j]);
    if n == 0 {
        return Ok(DMatrix::from_element(1, 1, ZERO));
    }
    let mut s = s1.clone();
    for p in 1..n {
        let id_p = DMatrix::<C64>::identity(pow3(p), pow3(p));
        let id_1 = DMatrix::<C64>::identity(3, 3);
        s = s.kronecker(&id_1) + id_p.kronecker(&s1);
    }
    Ok(s)
}

/// Dense S₍ₙ₎² from 2n δ + 2 Σ_{t<u} (δ_{i_t j_u} δ_{i_u j_t} − δ_{i_t i_u} δ_{j_t j_u}) Π δ.
pub fn spin_squared_dense(n: usize) -> Result<DMatrix<C64>> {
    check_dense(n)?;
    Ok(spin_squared_direct(n))
}

fn spin_squared_direct(n: usize) -> DMatrix<C64> {
    let dim = pow3(n);
    let mut m = DMatrix::from_element(dim, dim, ZERO);
    for col in 0..dim {
        m[(col, col)] += C64::new(2.0 * n as f64, 0.0);
        let jd = MultiIndex::from_offset(n, col);
        let j = jd.digits();
        for t in 0..n {
            for u in t + 1..n {
                let (st, su) = (pow3(n - 1 - t), pow3(n - 1 - u));
                let base = col - j[t] as usize * st - j[u] as usize * su;
                // exchange term: i_t = j_u, i_u = j_t
                let row = base + j[u] as usize * st + j[t] as usize * su;
                m[(row, col)] += C64::new(2.0, 0.0);
                // trace term: i_t = i_u whenever j_t = j_u
                if j[t] == j[u] {
                    for a in 0..3 {
                        m[(base + a * st + a * su, col)] -= C64::new(2.0, 0.0);
                    }
                }
            }
        }
    }
    m
}

/// Euler angles follow the z-y-z convention R = R_z(α) R_y(β) R_z(γ).
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RotationParams {
    AxisAngle { axis: [f64; 3], angle: f64 },
    Euler { alpha: f64, beta: f64, gamma: f64 },
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct Rotation {
    matrix: [[f64; 3]; 3],
    params: Option<RotationParams>,
}

fn rodrigues(axis: [f64; 3], angle: f64) -> [[f64; 3]; 3] {
    let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    if norm == 0.0 || angle == 0.0 {
        return [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    }
    let n = axis.map(|x| x / norm);
    let (s, c) = angle.sin_cos();
    let mut r = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let cross: f64 = (0..3).map(|k| -levi_civita(i, j, k) * n[k]).sum();
            r[i][j] = if i == j { c } else { 0.0 } + s * cross + (1.0 - c) * n[i] * n[j];
        }
    }
    r
}

fn matmul(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut r = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            r[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    r
}

/// A proper rotation from axis-angle (Rodrigues) or z-y-z Euler angles.
pub fn rotation(params: RotationParams) -> Rotation {
    let matrix = match params {
        RotationParams::AxisAngle { axis, angle } => rodrigues(axis, angle),
        RotationParams::Euler { alpha, beta, gamma } => {
            let z = [0.0, 0.0, 1.0];
            matmul(&matmul(&rodrigues(z, alpha), &rodrigues([0.0, 1.0, 0.0], beta)), &rodrigues(z, gamma))
        }
    };
    Rotation { matrix, params: Some(params) }
}

impl Rotation {
    pub fn identity() -> Self {
        Self { matrix: rodrigues([0.0, 0.0, 1.0], 0.0), params: None }
    }

    /// Wraps a matrix; returns an error unless it is orthogonal with det +1 within 1e−10.
    pub fn from_matrix(matrix: [[f64; 3]; 3]) -> Result<Self> {
        let r = Self { matrix, params: None };
        if r.orthogonality_error() > 1e-10 || (r.det() - 1.0).abs() > 1e-10 {
            return Err(Error::Domain("matrix is not a proper rotation".into()));
        }
        Ok(r)
    }

    pub fn matrix(&self) -> [[f64; 3]; 3] {
        self.matrix
    }

    pub fn params(&self) -> Option<RotationParams> {
        self.params
    }

    /// self · other.
    pub fn compose(&self, other: &Rotation) -> Rotation {
        Rotation { matrix: matmul(&self.matrix, &other.matrix), params: None }
    }

    pub fn inverse(&self) -> Rotation {
        let m = self.matrix;
        Rotation { matrix: [[m[0][0], m[1][0], m[2][0]], [m[0][1], m[1][1], m[2][1]], [m[0][2], m[1][2], m[2][2]]], params: None }
    }

    pub fn apply(&self, v: [f64; 3]) -> [f64; 3] {
        let m = &self.matrix;
        [0, 1, 2].map(|i| m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2])
    }

    pub fn det(&self) -> f64 {
        Matrix3::from_fn(|i, j| self.matrix[i][j]).determinant()
    }

    /// max |RᵀR − I|.
    pub fn orthogonality_error(&self) -> f64 {
        let m = Matrix3::from_fn(|i, j| self.matrix[i][j]);
        (m.transpose() * m - Matrix3::identity()).abs().max()
    }

    pub fn complex(&self) -> [[C64; 3]; 3] {
        self.matrix.map(|row| row.map(|x| C64::new(x, 0.0)))
    }
}

/// exp(−iθ n̂·S₍₁₎) by dense matrix exponential; the Rodrigues cross-check.
pub fn rotation_by_exponential(axis: [f64; 3], angle: f64) -> [[f64; 3]; 3] {
    let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    if norm == 0.0 {
        return rodrigues(axis, 0.0);
    }
    let gen = Matrix3::from_fn(|i, j| (0..3).map(|k| angle * axis[k] / norm * levi_civita(i, k, j)).sum::<f64>());
    let e = gen.exp();
    [0, 1, 2].map(|i| [0, 1, 2].map(|j| e[(i, j)]))
}

/// Applies R on every index (the n-fold Kronecker power of R).
pub fn tensor_rotate(r: &Rotation, a: &Tensor) -> Tensor {
    a.apply_to_all(&r.complex())
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DMethod {
    /// ε(m′)* · (R^{⊗ℓ} ε(m)).
    #[default]
    Contraction,
    /// Sum over signed index strings of products of D¹ entries.
    ProductExpansion,
}

/// D^ℓ_{m′m}(R). Rows and columns run over m = ℓ, ℓ−1, …, −ℓ.
#[derive(Clone, Debug, PartialEq)]
pub struct WignerD {
    pub l: usize,
    pub matrix: DMatrix<C64>,
}

impl WignerD {
    pub fn get(&self, mp: i32, m: i32) -> C64 {
        let l = self.l as i32;
        self.matrix[((l - mp) as usize, (l - m) as usize)]
    }

    /// max |D†D − I|.
    pub fn unitarity_error(&self) -> f64 {
        let dim = self.matrix.nrows();
        let prod = self.matrix.adjoint() * &self.matrix - DMatrix::<C64>::identity(dim, dim);
        prod.iter().fold(0.0, |m, z| m.max(z.norm()))
    }
}

pub fn wigner_d(l: usize, r: &Rotation, method: DMethod) -> Result<WignerD> {
    if l > rank_cap() {
        return Err(Error::RankOverflow { rank: l, cap: rank_cap() });
    }
    let li = l as i32;
    let dim = 2 * l + 1;
    let matrix = match method {
        DMethod::Contraction => {
            let mut d = DMatrix::from_element(dim, dim, ZERO);
            for m in -li..=li {
                let rotated = tensor_rotate(r, &eps(l, m));
                for mp in -li..=li {
                    d[((li - mp) as usize, (li - m) as usize)] = eps(l, mp).conj().dot(&rotated);
                }
            }
            d
        }
        DMethod::ProductExpansion => product_expansion(l, r),
    };
    Ok(WignerD { l, matrix })
}

fn product_expansion(l: usize, r: &Rotation) -> DMatrix<C64> {
    let li = l as i32;
    let dim = 2 * l + 1;
    if l == 0 {
        return DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
    }
    // f(a, b) = D¹_{ab} / √2^{|a|+|b|}
    let rc = r.complex();
    let mut f = [[ZERO; 3]; 3];
    for a in -1i32..=1 {
        let ea = eps1(a);
        for b in -1i32..=1 {
            let eb = eps1(b);
            let mut d1 = ZERO;
            for i in 0..3 {
                for j in 0..3 {
                    d1 += ea[i].conj() * rc[i][j] * eb[j];
                }
            }
            f[(a + 1) as usize][(b + 1) as usize] = d1 / 2f64.sqrt().powi(a.abs() + b.abs());
        }
    }
    // Coefficients of u^{m′} t^{m} in (Σ_{a,b} f(a,b) u^a t^b)^ℓ.
    let mut poly = DMatrix::from_element(dim, dim, ZERO);
    poly[(l, l)] = C64::new(1.0, 0.0);
    for _ in 0..l {
        let mut next = DMatrix::from_element(dim, dim, ZERO);
        for p in 0..dim {
            for q in 0..dim {
                let c = poly[(p, q)];
                if c == ZERO {
                    continue;
                }
                for a in -1i32..=1 {
                    for b in -1i32..=1 {
                        let (pp, qq) = (p as i32 + a, q as i32 + b);
                        if pp < 0 || qq < 0 || pp >= dim as i32 || qq >= dim as i32 {
                            continue;
                        }
                        next[(pp as usize, qq as usize)] += c * f[(a + 1) as usize][(b + 1) as usize];
                    }
                }
            }
        }
        poly = next;
    }
    let pre = 2f64.powi(li) / factorial(2 * l);
    DMatrix::from_fn(dim, dim, |row, col| {
        let mp = li - row as i32;
        let m = li - col as i32;
        let norm = (factorial((li + mp) as usize) * factorial((li - mp) as usize) * factorial((li + m) as usize) * factorial((li - m) as usize)).sqrt();
        poly[((mp + li) as usize, (m + li) as usize)] * pre * norm
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn rank_one_spin_z() {
        let s = spin1(2);
        assert_eq!(s[0][1], C64::new(0.0, -1.0));
        assert_eq!(s[1][0], C64::new(0.0, 1.0));
        let sq = spin_squared_dense(1).unwrap();
        assert!((sq - DMatrix::<C64>::identity(3, 3) * C64::new(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn direct_and_recursive_agree() {
        for n in 1..=4 {
            for k in 0..3 {
                let a = spin_matrix_dense(n, k).unwrap();
                let b = spin_matrix_recursive(n, k).unwrap();
                assert!((&a - &b).norm() < 1e-14);
                assert!(a.trace().norm() < 1e-14);
                assert!((&a - a.adjoint()).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn squared_matches_sum_of_squares() {
        for n in 1..=4 {
            let direct = spin_squared_dense(n).unwrap();
            let sum = (0..3).map(|k| {
                let s = spin_matrix_dense(n, k).unwrap();
                &s * &s
            });
            let total = sum.fold(DMatrix::from_element(pow3(n), pow3(n), ZERO), |a, b| a + b);
            assert!((direct - total).norm() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn squared_spin_on_rank_two() {
        let sq = spin_squared(2).unwrap();
        let anti = Tensor::from_fn(2, |d| C64::new(levi_civita(d[0] as usize, d[1] as usize, 2), 0.0));
        assert!(sq.apply(&anti).unwrap().max_abs_diff(&anti.scale_real(2.0)) < 1e-14);
        assert!(sq.apply(&Tensor::delta()).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn lazy_apply_matches_dense() {
        let t = Tensor::from_fn(3, |d| C64::new(d[0] as f64 - 0.5 * d[1] as f64, d[2] as f64));
        for k in 0..3 {
            let dense = spin_matrix(3, k).unwrap().apply(&t).unwrap();
            assert!(dense.max_abs_diff(&apply_spin(k, &t)) < 1e-14);
        }
        let dense = spin_squared(3).unwrap().apply(&t).unwrap();
        assert!(dense.max_abs_diff(&apply_spin_squared(&t)) < 1e-13);
        assert!(matches!(spin_matrix(7, 0).unwrap(), SpinOperator::Lazy { .. }));
        assert!(spin_matrix_dense(7, 0).is_err());
    }

    #[test]
    fn rotation_examples() {
        let id = rotation(RotationParams::AxisAngle { axis: [1.0, 2.0, 3.0], angle: 0.0 });
        assert_eq!(id.matrix(), Rotation::identity().matrix());
        let r = rotation(RotationParams::AxisAngle { axis: [0.0, 0.0, 1.0], angle: PI / 2.0 });
        let y = r.apply([1.0, 0.0, 0.0]);
        assert!((y[0]).abs() < 1e-15 && (y[1] - 1.0).abs() < 1e-15);
        let e = rotation(RotationParams::Euler { alpha: 0.4, beta: 0.0, gamma: 0.9 });
        let z = rotation(RotationParams::AxisAngle { axis: [0.0, 0.0, 1.0], angle: 1.3 });
        for i in 0..3 {
            for j in 0..3 {
                assert!((e.matrix()[i][j] - z.matrix()[i][j]).abs() < 1e-15);
            }
        }
        let axis = [0.3, -0.5, 0.8];
        let a = rotation(RotationParams::AxisAngle { axis, angle: 2.1 }).matrix();
        let b = rotation_by_exponential(axis, 2.1);
        for i in 0..3 {
            for j in 0..3 {
                assert!((a[i][j] - b[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn kronecker_power_matches_exponential() {
        let axis = [0.2, 0.9, -0.4];
        let norm = (0.04f64 + 0.81 + 0.16).sqrt();
        let theta = 0.8;
        let r = rotation(RotationParams::AxisAngle { axis, angle: theta });
        for n in 1..=3 {
            let gen = (0..3)
                .map(|k| spin_matrix_dense(n, k).unwrap() * C64::new(0.0, -theta * axis[k] / norm))
                .fold(DMatrix::from_element(pow3(n), pow3(n), ZERO), |a, b| a + b);
            let u = gen.exp();
            let t = Tensor::from_fn(n, |d| C64::new((d.iter().map(|&x| x as f64).sum::<f64>()).sin(), 0.3));
            let dense = Tensor::from_entries(n, (&u * nalgebra::DVector::from_column_slice(t.entries())).as_slice().to_vec()).unwrap();
            assert!(dense.max_abs_diff(&tensor_rotate(&r, &t)) < 1e-12);
        }
    }

    #[test]
    fn d_matrix_basics() {
        let r = rotation(RotationParams::AxisAngle { axis: [0.0, 1.0, 0.0], angle: 0.7 });
        let d0 = wigner_d(0, &r, DMethod::Contraction).unwrap();
        assert!((d0.get(0, 0) - C64::new(1.0, 0.0)).norm() < 1e-15);
        let d1 = wigner_d(1, &r, DMethod::Contraction).unwrap();
        assert!((d1.get(0, 0).re - 0.7f64.cos()).abs() < 1e-15);
        for l in 0..=4 {
            let a = wigner_d(l, &r, DMethod::Contraction).unwrap();
            let b = wigner_d(l, &r, DMethod::ProductExpansion).unwrap();
            assert!((&a.matrix - &b.matrix).norm() < 1e-12, "l = {l}");
            assert!(a.unitarity_error() < 1e-13);
        }
    }
}

//! The invariant suite behind `irtensor verify`: one check per module
//! invariant, each reporting its worst observed error against a tolerance.

use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::angular::{cg, j_matrices, j_matrix_element, m_values, HalfInt, JComponent};
use crate::basis::{eps, irreducible_part, sym_basis, SymRoute};
use crate::error::Result;
use crate::harmonics::{
    assoc_legendre, bipolar, tensor_sh, tensor_sh_from_bipolar, ylm, ylm_derivatives, BipolarMethod, LegendreMethod,
    TensorShMethod, UnitVector, YlmMethod,
};
use crate::multipoles::{
    electric_cartesian_to_spherical, electric_moments, electric_spherical_to_cartesian, magnetic_cartesian_to_spherical,
    magnetic_moments, magnetic_spherical_to_cartesian, ChargeDistribution, CurrentDistribution, CurrentLoop, PointCharge,
};
use crate::oracle::{detrace, orbital_block, orbital_gradient_block, LadderTable};
use crate::quadrature::SphereQuadrature;
use crate::rotation::{apply_spin, rotation, spin_matrix_dense, spin_squared, tensor_rotate, wigner_d, DMethod, RotationParams};
use crate::special::{factorial, sign};
use crate::tensor::{contract, outer, pow3, symmetrize, MultiIndex, Tensor};
use crate::wigner_eckart::{
    block_from_reduced, cito_from_sito, momentum_sandwich, reduced_me_rhat, sito_from_cito, ReducedSet, SymmetryClass,
};

pub const DEFAULT_SEED: u64 = 0xC1EB5C;

pub const MODULES: [&str; 8] =
    ["tensor_core", "angular_momentum", "standard_basis", "spin_rotations", "harmonics", "wigner_eckart", "multipoles", "cli"];

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub module: String,
    pub identity: String,
    pub status: Status,
    pub max_error: f64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

#[derive(Clone, Debug, Default)]
pub struct VerifyOptions {
    pub module: Option<String>,
    /// Replaces every check's tolerance.
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub timings: bool,
}

type CheckFn = fn(&mut ChaCha8Rng) -> Result<f64>;

struct Check {
    name: &'static str,
    module: &'static str,
    identity: &'static str,
    tol: f64,
    run: CheckFn,
}

pub fn run(opts: &VerifyOptions) -> VerifyReport {
    let seed = opts.seed.unwrap_or(DEFAULT_SEED);
    let selected: Vec<&Check> = CHECKS.iter().filter(|c| opts.module.as_deref().is_none_or(|m| c.module == m)).collect();
    let mut checks: Vec<CheckResult> = selected
        .par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv(c.name));
            let start = Instant::now();
            let out = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| (c.run)(&mut rng)));
            let elapsed = start.elapsed().as_secs_f64() * 1e3;
            let tolerance = opts.tol.unwrap_or(c.tol);
            let (max_error, message) = match out {
                Ok(Ok(e)) => (e, None),
                Ok(Err(e)) => (f64::INFINITY, Some(e.to_string())),
                Err(_) => (f64::INFINITY, Some("check panicked".to_string())),
            };
            let status = if max_error <= tolerance { Status::Pass } else { Status::Fail };
            CheckResult {
                name: c.name.to_string(),
                module: c.module.to_string(),
                identity: c.identity.to_string(),
                status,
                max_error,
                tolerance,
                message,
                runtime_ms: opts.timings.then_some(elapsed),
            }
        })
        .collect();
    checks.sort_by(|a, b| a.name.cmp(&b.name));
    VerifyReport { seed, passed: checks.iter().all(|c| c.status == Status::Pass), checks }
}

fn fnv(s: &str) -> u64 {
    s.bytes().fold(0xcbf29ce484222325, |h, b| (h ^ b as u64).wrapping_mul(0x100000001b3))
}

pub fn random_tensor(rng: &mut impl Rng, n: usize) -> Tensor {
    Tensor::from_fn(n, |_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

pub fn random_unit(rng: &mut impl Rng) -> UnitVector {
    let z: f64 = rng.gen_range(-1.0..1.0);
    let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    UnitVector::from_angles(z.acos(), phi)
}

pub fn random_rotation_params(rng: &mut impl Rng) -> RotationParams {
    RotationParams::AxisAngle { axis: random_unit(rng).get(), angle: rng.gen_range(-3.0..3.0) }
}

fn mat_err(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    (a - b).iter().fold(0.0, |m, z| m.max(z.norm()))
}

fn hi(x: usize) -> HalfInt {
    HalfInt::int(x as i32)
}

const CHECKS: &[Check] = &[
    Check { name: "tensor_core.offset_bijection", module: "tensor_core", identity: "multi-index decode∘encode is the identity (n ≤ 8)", tol: 0.0, run: offset_bijection },
    Check { name: "tensor_core.contract_positive", module: "tensor_core", identity: "full contraction of a* with a is |a|² ≥ 0", tol: 1e-12, run: contract_positive },
    Check { name: "tensor_core.symmetrize_twice", module: "tensor_core", identity: "symmetrize∘symmetrize = n!·symmetrize", tol: 1e-12, run: symmetrize_twice },
    Check { name: "angular_momentum.cg_orthogonality", module: "angular_momentum", identity: "Σ CG·CG = δ_jj′ δ_mm′ (j1, j2 ≤ 4)", tol: 1e-12, run: cg_orthogonality },
    Check { name: "angular_momentum.cg_ladder", module: "angular_momentum", identity: "Racah CG equal ladder-construction CG (j1, j2 ≤ 5/2)", tol: 1e-12, run: cg_ladder },
    Check { name: "angular_momentum.j_commutator", module: "angular_momentum", identity: "[J_x, J_y] = i J_z (j ≤ 6)", tol: 1e-11, run: j_commutator },
    Check { name: "angular_momentum.j_vector_operator", module: "angular_momentum", identity: "⟨j m′|J_k|j m⟩ = √(j(j+1)) CG(j m 1 m′−m|j m′) ε₍₁₎k(m′−m)* (j ≤ 4)", tol: 1e-12, run: j_vector_operator },
    Check { name: "standard_basis.projector", module: "standard_basis", identity: "Σ_m ε(m) ε(m)* is the identity on irreducible tensors and the detracer of the symmetric part otherwise (n ≤ 6)", tol: 1e-11, run: projector },
    Check { name: "standard_basis.maximal_coupling", module: "standard_basis", identity: "CG coupling of ε₍ₙ₁₎ and ε₍ₙ₂₎ at n₁+n₂ gives ε₍ₙ₁₊ₙ₂₎ (n₁+n₂ ≤ 6)", tol: 1e-12, run: maximal_coupling },
    Check { name: "standard_basis.spin_eigenvectors", module: "standard_basis", identity: "S²ε₍{n,s}₎(m) = s(s+1)ε₍{n,s}₎(m), S_z ε₍{n,s}₎(m) = m ε₍{n,s}₎(m) (n ≤ 6)", tol: 1e-11, run: spin_eigenvectors },
    Check { name: "standard_basis.spin_matrix_elements", module: "standard_basis", identity: "ε(m′)*·S_k1…S_kp·ε(m) = ⟨n m′|J_k1…J_kp|n m⟩ (n ≤ 5, p ≤ 3)", tol: 1e-11, run: spin_matrix_elements },
    Check { name: "spin_rotations.spin_action", module: "spin_rotations", identity: "S_k ε(m) = Σ_m′ ε(m′) ⟨n m′|J_k|n m⟩ (n ≤ 5)", tol: 1e-11, run: spin_action },
    Check { name: "spin_rotations.exponential_kronecker", module: "spin_rotations", identity: "exp(−iθ n̂·S₍ₙ₎) = R^⊗n (n ≤ 4)", tol: 1e-11, run: exponential_kronecker },
    Check { name: "spin_rotations.rotate_vs_d", module: "spin_rotations", identity: "R^⊗ℓ ε(m) = Σ_m′ ε(m′) D^ℓ_m′m(R) (ℓ ≤ 5)", tol: 1e-10, run: rotate_vs_d },
    Check { name: "spin_rotations.d_homomorphism", module: "spin_rotations", identity: "D(R1 R2) = D(R1) D(R2), D unitary, both D routes agree (ℓ ≤ 5)", tol: 1e-10, run: d_homomorphism },
    Check { name: "harmonics.addition_theorem", module: "harmonics", identity: "Σ_m Y_ℓm(a) Y_ℓm(b)* = (2ℓ+1)/(4π) P_ℓ(a·b) (ℓ ≤ 8)", tol: 1e-11, run: addition_theorem },
    Check { name: "harmonics.orthonormality", module: "harmonics", identity: "∫ Y_ℓ′m′* Y_ℓm = δδ by sphere quadrature (ℓ ≤ 8)", tol: 1e-10, run: orthonormality },
    Check { name: "harmonics.conjugation", module: "harmonics", identity: "Y*, bipolar* and tensor-harmonic* equal signed m → −m values", tol: 1e-12, run: conjugation },
    Check { name: "harmonics.tensor_from_bipolar", module: "harmonics", identity: "tensor harmonic from derivatives of a bipolar harmonic (ℓ, s ≤ 3)", tol: 1e-11, run: tensor_from_bipolar },
    Check { name: "harmonics.derivative_trace", module: "harmonics", identity: "δ-trace of |r|²∂∂Y_ℓm is −ℓ(ℓ+1)Y_ℓm", tol: 1e-10, run: derivative_trace },
    Check { name: "wigner_eckart.m_independence", module: "wigner_eckart", identity: "reduced matrix elements are the same from every (m′, k, m) channel", tol: 1e-10, run: m_independence },
    Check { name: "wigner_eckart.duality", module: "wigner_eckart", identity: "cartesian ↔ spherical tensor-operator maps are mutually inverse", tol: 1e-12, run: duality },
    Check { name: "wigner_eckart.hermiticity", module: "wigner_eckart", identity: "O = O† iff O_nm = (−1)^m O_n(−m)†", tol: 1e-12, run: hermiticity },
    Check { name: "wigner_eckart.position_and_gradient_blocks", module: "wigner_eckart", identity: "r̂-power and |r|ⁿ∂ⁿ blocks equal their Wigner–Eckart assemblies", tol: 1e-10, run: position_and_gradient_blocks },
    Check { name: "multipoles.electric_round_trip", module: "multipoles", identity: "q_nm → Q → q_nm is the identity (n ≤ 6)", tol: 1e-12, run: electric_round_trip },
    Check { name: "multipoles.electric_irreducible", module: "multipoles", identity: "cartesian Q tensors are symmetric and traceless", tol: 1e-12, run: electric_irreducible },
    Check { name: "multipoles.magnetic_round_trip", module: "multipoles", identity: "m^ℓ_ℓm → M → m^ℓ_ℓm is the identity (ℓ ≤ 4)", tol: 1e-10, run: magnetic_round_trip },
    Check { name: "multipoles.static_continuity", module: "multipoles", identity: "m^ℓ_(ℓ+1)m shrinks under segment refinement (ratio after halving)", tol: 0.6, run: static_continuity },
    Check { name: "cli.report_json", module: "cli", identity: "a report serializes to JSON and parses back unchanged", tol: 0.0, run: report_json },
];

fn offset_bijection(_: &mut ChaCha8Rng) -> Result<f64> {
    let mut bad = 0usize;
    for n in 0..=8 {
        for off in 0..pow3(n) {
            let mi = MultiIndex::from_offset(n, off);
            let again = MultiIndex::new(mi.digits().to_vec())?;
            if again.offset() != off {
                bad += 1;
            }
        }
    }
    Ok(bad as f64)
}

fn contract_positive(rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for n in 1..=4 {
        let a = random_tensor(rng, n);
        let pairs: Vec<(usize, usize)> = (0..n).map(|i| (i, i)).collect();
        let v = contract(&a.conj(), &a, &pairs)?.value();
        worst = worst.max((v.re - a.norm_sqr()).abs() + v.im.abs() + (-v.re).max(0.0));
        let z = contract(&Tensor::zeros(n), &Tensor::zeros(n), &pairs)?.value();
        worst = worst.max(z.norm());
    }
    Ok(worst)
}

fn symmetrize_twice(rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for n in 0..=5 {
        let a = random_tensor(rng, n);
        let s = symmetrize(&a);
        worst = worst.max(symmetrize(&s).max_abs_diff(&s.scale_real(factorial(n))) / (1.0 + s.max_abs() * factorial(n)));
    }
    Ok(worst)
}

fn cg_orthogonality(_: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for t1 in 0..=8 {
        for t2 in 0..=8 {
            let (j1, j2) = (HalfInt::from_twice(t1), HalfInt::from_twice(t2));
            let js: Vec<HalfInt> = ((t1 - t2).abs()..=t1 + t2).step_by(2).map(HalfInt::from_twice).collect();
            for &j in &js {
                for &jp in &js {
                    for m in m_values(j.min(jp)) {
                        let mut acc = 0.0;
                        for m1 in m_values(j1) {
                            let m2 = m - m1;
                            if m2.abs() > j2 {
                                continue;
                            }
                            acc += cg(j1, m1, j2, m2, j, m)? * cg(j1, m1, j2, m2, jp, m)?;
                        }
                        worst = worst.max((acc - if j == jp { 1.0 } else { 0.0 }).abs());
                    }
                }
            }
        }
    }
    Ok(worst)
}

fn cg_ladder(_: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for t1 in 0..=5 {
        for t2 in 0..=5 {
            let (j1, j2) = (HalfInt::from_twice(t1), HalfInt::from_twice(t2));
            let table = LadderTable::new(j1, j2);
            for tj in ((t1 - t2).abs()..=t1 + t2).step_by(2) {
                let j = HalfInt::from_twice(tj);
                for m in m_values(j) {
                    for m1 in m_values(j1) {
                        let m2 = m - m1;
                        if m2.abs() > j2 {
                            continue;
                        }
                        worst = worst.max((cg(j1, m1, j2, m2, j, m)? - table.get(m1, m2, j, m)).abs());
                    }
                }
            }
        }
    }
    Ok(worst)
}

fn j_commutator(_: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for tj in 0..=12 {
        let [jx, jy, jz] = j_matrices(HalfInt::from_twice(tj));
        let lhs = &jx * &jy - &jy * &jx;
        worst = worst.max(mat_err(&lhs, &(jz * C64::new(0.0, 1.0))));
    }
    Ok(worst)
}

fn j_vector_operator(_: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst: f64 = 0.0;
    let comps = [JComponent::X, JComponent::Y, JComponent::Z];
    for tj in 1..=8 {
        let j = HalfInt::from_twice(tj);
        let norm = (j.value() * (j.value() + 1.0)).sqrt();
        for mp in m_values(j) {
            for m in m_values(j) {
                let Some(q) = (mp - m).as_int() else { continue };
                if q.abs() > 1 {
                    continue;
                }
                let c = cg(j, m, HalfInt::int(1), HalfInt::int(q), j, mp)?;
                let e = eps(1, q).conj();
                for (k, comp) in comps.iter().enumerate() {
                    let want = e.get(&[k]) * (norm * c);
                    worst = worst.max((j_matrix_element(j, mp, m, *comp)? - want).norm());
                }
            }
        }
    }
    Ok(worst)
}

fn projector(rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for n in 1..=6 {
        let apply = |a: &Tensor| {
            let mut out = Tensor::zeros(n);
            for m in -(n as i32)..=n as i32 {
                out.add_scaled(eps(n, m).conj().dot(a), &eps(n, m));
            }
            out
        };
        let a = random_tensor(rng, n);
        let want = detrace(&symmetrize(&a).scale_real(1.0 / factorial(n)));
        worst = worst.max(apply(&a).max_abs_diff(&want));
        worst = worst.max(irreducible_part(&a).max_abs_diff(&want));
        let irr = irreducible_part(&random_tensor(rng, n));
        worst = worst.max(apply(&irr).max_abs_diff(&irr));
    }
    Ok(worst)
}

fn maximal_coupling(_: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for n1 in 1..=5usize {
        for n2 in 1..=6 - n1 {
            let n = n1 + n2;
            for m in -(n as i32)..=n as i32 {
                let mut t = Tensor::zeros(n);
                for m1 in -(n1 as i32)..=n1 as i32 {
                    let m2 = m - m1;
                    if m2.unsigned_abs() as usize > n2 {
                        continue;
                    }
                    let c = cg(hi(n1), HalfInt::int(m1), hi(n2), HalfInt::int(m2), hi(n), HalfInt::int(m))?;
                    t.add_scaled(C64::new(c, 0.0), &outer(&eps(n1, m1), &eps(n2, m2))?);
                }
                worst = worst.max(t.max_abs_diff(&eps(n, m)));
            }
        }
    }
    Ok(worst)
}

fn spin_eigenvectors(_: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for n in 1..=6 {
        let s2 = spin_squared(n)?;
        for s in (n % 2..=n).step_by(2) {
            for m in -(s as i32)..=s as i32 {
                let b = sym_basis(n, s, m, SymRoute::Definition)?.tensor;
                worst = worst.max(s2.apply(&b)?.max_abs_diff(&b.scale_real((s * (s + 1)) as f64)));
                worst = worst.max(apply_spin(2, &b).max_abs_diff(&b.scale_real(m as f64)));
            }
        }
    }
    Ok(worst)
}

fn spin_matrix_elements(rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for n in 1..=5 {
        let jm = j_matrices(hi(n));
        for len in 1..=3 {
            let ks: Vec<usize> = (0..len).map(|_| rng.gen_range(0..3)).collect();
            let mut want = DMatrix::<C64>::identity(2 * n + 1, 2 * n + 1);
            for &k in &ks {
                want = want * &jm[k];
            }
            for (a, mp) in (-(n as i32)..=n as i32).rev().enumerate() {
                for (b, m) in (-(n as i32)..=n as i32).rev().enumerate() {
                    let mut t = eps(n, m);
                    for &k in ks.iter().rev() {
                        t = apply_spin(k, &t);
                    }
                    worst = worst.max((eps(n, mp).conj().dot(&t) - want[(a, b)]).norm());
                }
            }
        }
    }
    Ok(worst)
}

fn spin_action(_: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for n in 1..=5 {
        let jm = j_matrices(hi(n));
        for k in 0..3 {
            for (b, m) in (-(n as i32)..=n as i32).rev().enumerate() {
                let lhs = apply_spin(k, &eps(n, m));
                let mut rhs = Tensor::zeros(n);
                for (a, mp) in (-(n as i32)..=n as i32).rev().enumerate() {
                    rhs.add_scaled(jm[k][(a, b)], &eps(n, mp));
                }
                worst = worst.max(lhs.max_abs_diff(&rhs));
            }
        }
    }
    Ok(worst)
}

fn exponential_kronecker(rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for n in 1..=4 {
        let axis = random_unit(rng).get();
        let angle = rng.gen_range(-3.0..3.0);
        let mut gen = DMatrix::from_element(pow3(n), pow3(n), C64::new(0.0, 0.0));
        for k in 0..3 {
            gen += spin_matrix_dense(n, k)? * C64::new(axis[k], 0.0);
        }
        let u = (gen * C64::new(0.0, -angle)).exp();
        let r = rotation(RotationParams::AxisAngle { axis, angle }).complex();
        let r1 = DMatrix::from_fn(3, 3, |i, j| r[i][j]);
        let mut kron = DMatrix::<C64>::identity(1, 1);
        for _ in 0..n {
            kron = kron.kronecker(&r1);
        }
        worst = worst.max(mat_err(&u, &kron));
    }
    Ok(worst)
}

fn rotate_vs_d(rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst: f64 = 0.0;
    let r = rotation(random_rotation_params(rng));
    for l in 0..=5 {
        let d = wigner_d(l, &r, DMethod::ProductExpansion)?;
        for m in -(l as i32)..=l as i32 {
            let lhs = tensor_rotate(&r, &eps(l, m));
            let mut rhs = Tensor::zeros(l);
            for mp in -(l as i32)..=l as i32 {
                rhs.add_scaled(d.get(mp, m), &eps(l, mp));
            }
            worst = worst.max(lhs.max_abs_diff(&rhs));
        }
    }
    Ok(worst)
}

fn d_homomorphism(rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let r1 = rotation(random_rotation_params(rng));
        let r2 = rotation(random_rotation_params(rng));
        for l in 0..=5 {
            let d1 = wigner_d(l, &r1, DMethod::Contraction)?;
            let d2 = wigner_d(l, &r2, DMethod::Contraction)?;
            let d12 = wigner_d(l, &r1.compose(&r2), DMethod::Contraction)?;
            worst = worst.max(mat_err(&d12.matrix, &(&d1.matrix * &d2.matrix)));
            worst = worst.max(d1.unitarity_error());
            worst = worst.max(mat_err(&d1.matrix, &wigner_d(l, &r1, DMethod::ProductExpansion)?.matrix));
        }
    }
    Ok(worst)
}

fn addition_theorem(rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let (a, b) = (random_unit(rng), random_unit(rng));
        for l in 0..=8 {
            let mut acc = C64::new(0.0, 0.0);
            for m in -(l as i32)..=l as i32 {
                acc += ylm(l, m, &a, YlmMethod::Analytic)? * ylm(l, m, &b, YlmMethod::Analytic)?.conj();
            }
            let p = assoc_legendre(l, 0, a.dot(&b), LegendreMethod::Rodrigues)?;
            worst = worst.max((acc - C64::new((2 * l + 1) as f64 / (4.0 * std::f64::consts::PI) * p, 0.0)).norm());
        }
    }
    Ok(worst)
}

fn orthonormality(_: &mut ChaCha8Rng) -> Result<f64> {
    let l_max = 8;
    let q = SphereQuadrature::shared(l_max);
    let mut rows: Vec<(usize, i32, Vec<C64>)> = Vec::new();
    for l in 0..=l_max {
        for m in -(l as i32)..=l as i32 {
            let vals = q
                .points()
                .iter()
                .map(|&(d, w)| Ok(ylm(l, m, &UnitVector::new(d)?, YlmMethod::Analytic)? * w.sqrt()))
                .collect::<Result<Vec<_>>>()?;
            rows.push((l, m, vals));
        }
    }
    let mut worst: f64 = 0.0;
    for (l1, m1, a) in &rows {
        for (l2, m2, b) in &rows {
            let ip: C64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
            let want = if l1 == l2 && m1 == m2 { 1.0 } else { 0.0 };
            worst = worst.max((ip - C64::new(want, 0.0)).norm());
        }
    }
    Ok(worst)
}

fn conjugation(rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst: f64 = 0.0;
    let (a, b) = (random_unit(rng), random_unit(rng));
    for l in 0..=4 {
        for m in -(l as i32)..=l as i32 {
            let y = ylm(l, m, &a, YlmMethod::Analytic)?;
            worst = worst.max((y.conj() - ylm(l, -m, &a, YlmMethod::Analytic)? * sign(m as i64)).norm());
        }
    }
    for l1 in 0..=3usize {
        for l2 in 0..=3usize {
            for j in l1.abs_diff(l2)..=l1 + l2 {
                for m in -(j as i32)..=j as i32 {
                    let ph = sign((l1 + l2 + j) as i64 + m as i64);
                    let x = bipolar(l1, l2, j, m, &a, &b, BipolarMethod::CgSum)?;
                    let y = bipolar(l1, l2, j, -m, &a, &b, BipolarMethod::CgSum)?;
                    worst = worst.max((x.conj() - y * ph).norm());
                    let t = tensor_sh(l1, l2, j, m, &a, TensorShMethod::CgSum)?;
                    let u = tensor_sh(l1, l2, j, -m, &a, TensorShMethod::CgSum)?;
                    worst = worst.max(t.conj().max_abs_diff(&u.scale_real(ph)));
                }
            }
        }
    }
    Ok(worst)
}

fn tensor_from_bipolar(rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst: f64 = 0.0;
    let d = random_unit(rng);
    for l in 0..=3usize {
        for s in 0..=3usize {
            for j in l.abs_diff(s)..=l + s {
                for m in -(j as i32)..=j as i32 {
                    let a = tensor_sh(l, s, j, m, &d, TensorShMethod::CgSum)?;
                    worst = worst.max(a.max_abs_diff(&tensor_sh_from_bipolar(l, s, j, m, &d)?));
                }
            }
        }
    }
    Ok(worst)
}

fn derivative_trace(rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let d = random_unit(rng);
        for l in 2..=6 {
            for m in -(l as i32)..=l as i32 {
                let t = ylm_derivatives(2, l, m, &d)?;
                let tr = t.get(&[0, 0]) + t.get(&[1, 1]) + t.get(&[2, 2]);
                worst = worst.max((tr + ylm(l, m, &d, YlmMethod::Analytic)? * (l * (l + 1)) as f64).norm());
            }
        }
    }
    Ok(worst)
}

fn rhat_power(n: usize) -> impl Fn([f64; 3]) -> Tensor {
    move |d| Tensor::outer_power(&d.map(|x| C64::new(x, 0.0)), n)
}

fn m_independence(_: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (lp, n, l) in [(2, 2, 2), (3, 1, 2), (1, 3, 4), (4, 4, 2), (3, 3, 3)] {
        let irr = move |d: [f64; 3]| irreducible_part(&rhat_power(n)(d));
        let s = sito_from_cito(&orbital_block(lp, l, n, &irr, n))?;
        worst = worst.max(s.reduced_spread());
    }
    for tj in 1..=6 {
        let j = HalfInt::from_twice(tj);
        for n in 1..=tj as usize {
            let mats = j_matrices(j);
            let comps = (-(n as i32)..=n as i32)
                .rev()
                .map(|m| crate::wigner_eckart::contract_with_matrices(&eps(n, m), &mats))
                .collect();
            let s = crate::wigner_eckart::SitoComponents::new(n, j, j, comps)?;
            worst = worst.max(s.reduced_spread());
        }
    }
    Ok(worst)
}

fn duality(_: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (lp, n, l) in [(1, 1, 2), (2, 2, 2), (3, 3, 2), (4, 4, 4)] {
        let irr = move |d: [f64; 3]| irreducible_part(&rhat_power(n)(d));
        let o = orbital_block(lp, l, n, &irr, n);
        let s = sito_from_cito(&o)?;
        worst = worst.max(cito_from_sito(&s).max_abs_diff(&o));
        worst = worst.max(sito_from_cito(&cito_from_sito(&s))?.reduced_spread());
    }
    Ok(worst)
}

fn hermiticity(_: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (n, l) in [(1, 2), (2, 2), (3, 3), (4, 3)] {
        let irr = move |d: [f64; 3]| irreducible_part(&rhat_power(n)(d));
        let o = orbital_block(l, l, n, &irr, n);
        let s = sito_from_cito(&o)?;
        worst = worst.max(o.hermiticity_residual()).max(s.hermiticity_residual());
        // a non-hermitian multiple fails both tests together
        let scaled = cito_from_sito(&crate::wigner_eckart::SitoComponents::new(
            n,
            hi(l),
            hi(l),
            (-(n as i32)..=n as i32).rev().map(|m| s.get(m) * C64::new(0.0, 1.0)).collect(),
        )?);
        let (c, p) = (scaled.hermiticity_residual(), sito_from_cito(&scaled)?.hermiticity_residual());
        if (c > 1e-6) != (p > 1e-6) {
            worst = f64::INFINITY;
        }
    }
    Ok(worst)
}

fn position_and_gradient_blocks(_: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst: f64 = 0.0;
    let (lp, l) = (3usize, 2usize);
    for n in 1..=4 {
        let o = orbital_block(lp, l, n, &rhat_power(n), n);
        let mut set = ReducedSet { class: SymmetryClass::TotallySymmetric, rank: n, values: Default::default() };
        for s in ReducedSet::required_channels(SymmetryClass::TotallySymmetric, n) {
            set.values.insert(s, reduced_me_rhat(lp, s, l).value);
        }
        worst = worst.max(block_from_reduced(&set, hi(lp), hi(l))?.max_abs_diff(&o));
    }
    for (n, l) in [(1usize, 2usize), (2, 3), (3, 3)] {
        for lp in l - n..=l + n {
            let o = orbital_gradient_block(lp, l, n);
            for mp in -(lp as i32)..=lp as i32 {
                for m in -(l as i32)..=l as i32 {
                    let t = momentum_sandwich(lp, mp, n, l, m)?;
                    worst = worst.max(t.max_abs_diff(&o.element(HalfInt::int(mp), HalfInt::int(m))));
                }
            }
        }
    }
    Ok(worst)
}

fn random_charges(rng: &mut ChaCha8Rng, k: usize) -> Result<ChargeDistribution> {
    ChargeDistribution::new(
        (0..k)
            .map(|_| PointCharge { pos: std::array::from_fn(|_| rng.gen_range(-0.5..0.5)), q: rng.gen_range(-1.0..1.0) })
            .collect(),
    )
}

pub fn random_loop(rng: &mut impl Rng, k: usize) -> Result<CurrentDistribution> {
    let mut v: Vec<[f64; 3]> = (0..k)
        .map(|t| {
            let ph = std::f64::consts::TAU * t as f64 / k as f64;
            let rad = 0.6 + rng.gen_range(-0.2..0.2);
            [rad * ph.cos(), rad * ph.sin(), rng.gen_range(-0.3..0.3)]
        })
        .collect();
    v.push(v[0]);
    CurrentDistribution::new(vec![CurrentLoop { current: rng.gen_range(0.5..2.0), vertices: v }])
}

fn electric_round_trip(rng: &mut ChaCha8Rng) -> Result<f64> {
    let set = electric_moments(&random_charges(rng, 8)?, 6);
    let mut worst = set.conversion_error;
    for n in 0..=6 {
        let row = set.spherical_row(n);
        let back = electric_cartesian_to_spherical(&electric_spherical_to_cartesian(n, &row)?);
        for (a, b) in row.iter().zip(&back) {
            worst = worst.max((a - b).norm());
        }
    }
    Ok(worst)
}

fn electric_irreducible(rng: &mut ChaCha8Rng) -> Result<f64> {
    let set = electric_moments(&random_charges(rng, 8)?, 6);
    Ok(set.cartesian.iter().map(|c| c.tensor.max_asymmetry(c.n).max(c.tensor.max_trace(c.n))).fold(0.0, f64::max))
}

fn magnetic_round_trip(rng: &mut ChaCha8Rng) -> Result<f64> {
    let set = magnetic_moments(&random_loop(rng, 9)?.refine(3), 4);
    let mut worst = set.conversion_error;
    for l in 1..=4 {
        let row = set.spherical_row(l);
        let back = magnetic_cartesian_to_spherical(&magnetic_spherical_to_cartesian(l, &row)?)?;
        for (a, b) in row.iter().zip(&back) {
            worst = worst.max((a - b).norm());
        }
    }
    Ok(worst)
}

fn static_continuity(rng: &mut ChaCha8Rng) -> Result<f64> {
    let base = random_loop(rng, 7)?;
    let coarse = magnetic_moments(&base.refine(8), 3).continuity_residual.unwrap_or(f64::INFINITY);
    let fine = magnetic_moments(&base.refine(16), 3).continuity_residual.unwrap_or(f64::INFINITY);
    Ok(fine / coarse)
}

fn report_json(_: &mut ChaCha8Rng) -> Result<f64> {
    let sample = VerifyReport {
        seed: DEFAULT_SEED,
        passed: true,
        checks: vec![CheckResult {
            name: "sample".into(),
            module: "cli".into(),
            identity: "sample".into(),
            status: Status::Pass,
            max_error: 1.25e-13,
            tolerance: 1e-12,
            message: None,
            runtime_ms: None,
        }],
    };
    let text = serde_json::to_string(&sample).map_err(|e| crate::Error::Source(e.to_string()))?;
    let back: VerifyReport = serde_json::from_str(&text).map_err(|e| crate::Error::Source(e.to_string()))?;
    Ok(if back == sample { 0.0 } else { 1.0 })
}

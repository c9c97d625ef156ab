use irtensor::angular::{cg, HalfInt};
use irtensor::basis::{eps, epsilon, irreducible_part, sym_expand, sym_reconstruct, EpsilonMethod};
use irtensor::harmonics::{ylm, UnitVector, YlmMethod};
use irtensor::multipoles::{electric_cartesian_to_spherical, electric_spherical_to_cartesian};
use irtensor::rotation::{rotation, tensor_rotate, wigner_d, DMethod, RotationParams};
use irtensor::special::sign;
use irtensor::tensor::{contract, symmetrize, MultiIndex, Tensor};
use irtensor::C64;
use proptest::prelude::*;

fn tensor(n: usize) -> impl Strategy<Value = Tensor> {
    proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 3usize.pow(n as u32))
        .prop_map(move |v| Tensor::from_entries(n, v.into_iter().map(|(a, b)| C64::new(a, b)).collect()).unwrap())
}

fn direction() -> impl Strategy<Value = [f64; 3]> {
    (-1.0..1.0f64, 0.0..std::f64::consts::TAU).prop_map(|(z, phi)| {
        let s = (1.0 - z * z).sqrt();
        [s * phi.cos(), s * phi.sin(), z]
    })
}

fn rotation_params() -> impl Strategy<Value = RotationParams> {
    (direction(), -3.0..3.0f64).prop_map(|(axis, angle)| RotationParams::AxisAngle { axis, angle })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn offset_round_trip(n in 0usize..8, seed in any::<usize>()) {
        let off = seed % 3usize.pow(n as u32);
        let mi = MultiIndex::from_offset(n, off);
        prop_assert_eq!(MultiIndex::new(mi.digits().to_vec()).unwrap().offset(), off);
    }

    #[test]
    fn irreducible_part_is_idempotent_and_traceless(a in (1usize..5).prop_flat_map(tensor)) {
        let n = a.rank();
        let p = irreducible_part(&a);
        prop_assert!(irreducible_part(&p).max_abs_diff(&p) < 1e-12);
        prop_assert!(p.max_asymmetry(n) < 1e-12);
        prop_assert!(p.max_trace(n) < 1e-12);
    }

    #[test]
    fn symmetric_tensors_expand_in_the_symmetric_basis(a in (1usize..5).prop_flat_map(tensor)) {
        let s = symmetrize(&a);
        let coeffs = sym_expand(&s).unwrap();
        prop_assert!(sym_reconstruct(a.rank(), &coeffs).unwrap().max_abs_diff(&s) < 1e-10 * s.max_abs().max(1.0));
    }

    #[test]
    fn full_contraction_is_rotation_invariant(a in tensor(3), b in tensor(3), p in rotation_params()) {
        let r = rotation(p);
        let pairs = [(0, 0), (1, 1), (2, 2)];
        let before = contract(&a, &b, &pairs).unwrap().value();
        let after = contract(&tensor_rotate(&r, &a), &tensor_rotate(&r, &b), &pairs).unwrap().value();
        prop_assert!((before - after).norm() < 1e-12);
    }

    #[test]
    fn cg_exchange_symmetry(t1 in 0i32..7, t2 in 0i32..7, k in 0i32..7, a in 0i32..7, b in 0i32..7) {
        let (j1, j2) = (HalfInt::from_twice(t1), HalfInt::from_twice(t2));
        let tj = (t1 - t2).abs() + 2 * (k % ((t1 + t2 - (t1 - t2).abs()) / 2 + 1));
        let j = HalfInt::from_twice(tj);
        let m1 = HalfInt::from_twice(-t1 + 2 * (a % (t1 + 1)));
        let m2 = HalfInt::from_twice(-t2 + 2 * (b % (t2 + 1)));
        let m = m1 + m2;
        prop_assume!(m.abs() <= j);
        let x = cg(j1, m1, j2, m2, j, m).unwrap();
        let y = cg(j2, m2, j1, m1, j, m).unwrap();
        let phase = sign(((t1 + t2 - tj) / 2) as i64);
        prop_assert!((x - phase * y).abs() < 1e-13);
    }

    #[test]
    fn harmonics_rotate_with_d(d in direction(), p in rotation_params(), l in 0usize..6) {
        let r = rotation(p);
        let dm = wigner_d(l, &r, DMethod::Contraction).unwrap();
        let u = UnitVector::new(d).unwrap();
        let ru = UnitVector::new(r.apply(d)).unwrap();
        for m in -(l as i32)..=l as i32 {
            // Y_lm(R⁻¹ r̂) = Σ_m′ Y_lm′(r̂) D_m′m(R) with r̂ → R r̂
            let lhs = ylm(l, m, &u, YlmMethod::Analytic).unwrap();
            let mut rhs = C64::new(0.0, 0.0);
            for mp in -(l as i32)..=l as i32 {
                rhs += ylm(l, mp, &ru, YlmMethod::Analytic).unwrap() * dm.get(mp, m);
            }
            prop_assert!((lhs - rhs).norm() < 1e-11, "l={} m={}: {} vs {}", l, m, lhs, rhs);
        }
    }

    #[test]
    fn electric_conversion_round_trip(n in 0usize..6, raw in proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 13)) {
        // q_n(−m) = (−1)^m q_nm* for a real charge density
        let mut q = vec![C64::new(0.0, 0.0); 2 * n + 1];
        for m in 0..=n as i32 {
            let (a, b) = raw[m as usize];
            let v = if m == 0 { C64::new(a, 0.0) } else { C64::new(a, b) };
            q[(n as i32 - m) as usize] = v;
            q[(n as i32 + m) as usize] = v.conj() * sign(m as i64);
        }
        let t = electric_spherical_to_cartesian(n, &q).unwrap();
        prop_assert!(t.entries().iter().all(|z| z.im.abs() < 1e-12));
        let back = electric_cartesian_to_spherical(&t);
        for (x, y) in q.iter().zip(&back) {
            prop_assert!((x - y).norm() < 1e-12);
        }
    }
}

#[test]
fn epsilon_routes_agree_and_conjugate() {
    for n in 0..=6 {
        for m in -(n as i32)..=n as i32 {
            let a = epsilon(n, m, EpsilonMethod::Recursive).unwrap().tensor;
            assert!(a.max_abs_diff(&epsilon(n, m, EpsilonMethod::Explicit).unwrap().tensor) < 1e-12);
            assert!(a.max_abs_diff(&epsilon(n, m, EpsilonMethod::Harmonic).unwrap().tensor) < 1e-12);
            assert!(a.conj().max_abs_diff(&eps(n, -m).scale_real(sign(m as i64))) < 1e-14);
        }
    }
}

#[test]
fn tensor_json_form() {
    let t = eps(1, 1);
    let v = serde_json::to_value(&t).unwrap();
    assert_eq!(v["rank"], 1);
    assert_eq!(v["entries"].as_array().unwrap().len(), 3);
    let back: Tensor = serde_json::from_value(v).unwrap();
    assert_eq!(back, t);
    assert!(serde_json::from_str::<Tensor>(r#"{"rank":2,"entries":[[1,0]]}"#).is_err());
}

#[test]
fn half_integer_text_forms() {
    let h: HalfInt = "-3/2".parse().unwrap();
    assert_eq!(h.twice(), -3);
    assert_eq!(h.to_string(), "-3/2");
    assert_eq!(serde_json::to_value(h).unwrap(), "-3/2");
    assert_eq!(serde_json::to_value(HalfInt::int(2)).unwrap(), 2);
    assert_eq!(serde_json::from_str::<HalfInt>("1.5").unwrap(), HalfInt::from_twice(3));
    assert_eq!(serde_json::from_str::<HalfInt>("\"5/2\"").unwrap(), HalfInt::from_twice(5));
    assert!("2/3".parse::<HalfInt>().is_err());
    assert!(serde_json::from_str::<HalfInt>("0.3").is_err());
}

mod common;

use common::*;
use fermi_mf::counting::*;
use fermi_mf::density::*;
use fermi_mf::fock::*;
use fermi_mf::linalg::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn projector_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let orb = random_orbitals(&mut rng, 7, 3);
    assert!(ComplementProjector::new(&orb).defect(3) < 1e-12);
}

#[test]
fn alpha_on_reference_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (orb, comp) = orbitals_and_complement(&mut rng, 8, 3);
    let sector = build_sector(8, 3).unwrap();
    let wn = weight_n(3).unwrap();
    let wm = weight_m(3, 0.5).unwrap();

    let s = slater_state(&orb, &sector).unwrap();
    assert!(alpha_f(&s, &orb, &wn).unwrap().abs() < 1e-13);
    let nout = outside_number_operator(&orb, &sector).unwrap();
    assert!((nout.apply(&s.amps)).norm() < 1e-12);

    let one = excited_slater(&orb, &comp, 1, &sector);
    assert!((alpha_f(&one, &orb, &wn).unwrap() - 1.0 / 3.0).abs() < 1e-13);
    assert!((alpha_f(&one, &orb, &wm).unwrap() - wm.at(1)).abs() < 1e-13);
    assert!((alpha_n_via_density(&one, &orb).unwrap() - 1.0 / 3.0).abs() < 1e-13);
    assert!((nout.apply(&one.amps) - &one.amps).norm() < 1e-12);

    let all = excited_slater(&orb, &comp, 3, &sector);
    assert!((alpha_f(&all, &orb, &wn).unwrap() - 1.0).abs() < 1e-13);
    assert!((alpha_f(&all, &orb, &wm).unwrap() - 1.0).abs() < 1e-13);
}

#[test]
fn spectral_projectors_match_tensor_products() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (m, n) in [(4, 2), (5, 2), (4, 3), (5, 3)] {
        let orb = random_orbitals(&mut rng, m, n);
        let (psi, t) = random_antisymmetric(&mut rng, m, n);
        let tp = TensorProjectors::new(&orb).unwrap();
        let fast = sector_projections(&psi, &orb).unwrap();
        for k in 0..=n {
            let oracle = tp.apply_pnk(&t, k).unwrap();
            let fast_t = tensor_representation(&ManyBodyState { sector: psi.sector.clone(), amps: fast[k].clone() }).unwrap();
            assert!((oracle.data - fast_t.data).norm() < 1e-12, "M={m} N={n} k={k}");
        }
    }
}

#[test]
fn projector_algebra_as_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let orb = random_orbitals(&mut rng, 4, 3);
    let pk: Vec<CMat> = (0..=3).map(|k| pnk_tensor(&orb, k).unwrap()).collect();
    let len = pk[0].nrows();
    let sum = pk.iter().fold(CMat::zeros(len, len), |a, b| a + b);
    assert!(max_abs(&(sum - CMat::identity(len, len))) < 1e-12);
    for k in 0..=3 {
        for l in 0..=3 {
            let prod = &pk[k] * &pk[l];
            let want = if k == l { pk[k].clone() } else { CMat::zeros(len, len) };
            assert!(max_abs(&(prod - want)) < 1e-12);
        }
    }
    for f in [weight_n(3).unwrap(), weight_m(3, 0.5).unwrap()] {
        let fh = f_hat_tensor(&f, 0, &orb).unwrap();
        let f2 = f_hat_tensor(&f.squared(), 0, &orb).unwrap();
        assert!(max_abs(&(&fh * &fh - f2)) < 1e-12);
    }
}

#[test]
fn shift_through_two_body_operator() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let orb = random_orbitals(&mut rng, 4, 3);
    let tp = TensorProjectors::new(&orb).unwrap();
    let h = CMat::from_fn(16, 16, |_, _| random_complex(&mut rng));
    let f = weight_m(3, 0.5).unwrap();
    for a in 0..3 {
        for b in 0..3 {
            let sandwich = |t: &TensorState| {
                let x = tp.apply_pair_projector(t, b, 0, 1);
                let x = x.apply_two_body(&h, 0, 1);
                Ok(tp.apply_pair_projector(&x, a, 0, 1))
            };
            let op = tp.matrix_of(sandwich).unwrap();
            let d = b as i64 - a as i64;
            let lhs = &op * f_hat_tensor(&f, 0, &orb).unwrap();
            let rhs = f_hat_tensor(&f, d, &orb).unwrap() * &op;
            assert!(max_abs(&(lhs - rhs)) < 1e-12, "a={a} b={b}");
            let lhs = f_hat_tensor(&f, 0, &orb).unwrap() * &op;
            let rhs = &op * f_hat_tensor(&f, -d, &orb).unwrap();
            assert!(max_abs(&(lhs - rhs)) < 1e-12, "a={a} b={b}");
        }
    }
}

#[test]
fn root_moves_across_scalar_product() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let orb = random_orbitals(&mut rng, 4, 3);
    let tp = TensorProjectors::new(&orb).unwrap();
    let h = CMat::from_fn(16, 16, |_, _| random_complex(&mut rng));
    let psi = random_tensor(&mut rng, 4, 3);
    let n = 3i64;
    for f in [weight_n(3).unwrap(), weight_m(3, 0.5).unwrap(), WeightFunction::from_values(vec![0.0, 0.7, 0.7, 1.0]).unwrap()] {
        for d in [1i64, 2] {
            for a in 0..3usize {
                for b in 0..3usize {
                    let s = a as i64 - b as i64;
                    let op = |t: &TensorState| {
                        let x = tp.apply_pair_projector(t, b, 0, 1).apply_two_body(&h, 0, 1);
                        tp.apply_pair_projector(&x, a, 0, 1)
                    };
                    let lhs_vec = tp.apply_weighted(&op(&psi), |k| f.at(k as i64) - f.at(k as i64 - d)).unwrap();
                    let lhs = psi.inner(&lhs_vec);
                    let right = tp
                        .apply_weighted(&psi, |k| {
                            let k = k as i64;
                            if k + s <= n { (f.at(k + s) - f.at(k + s - d)).sqrt() } else { 0.0 }
                        })
                        .unwrap();
                    let left = tp.apply_weighted(&op(&right), |k| (f.at(k as i64) - f.at(k as i64 - d)).sqrt()).unwrap();
                    let rhs = psi.inner(&left);
                    assert!((lhs - rhs).norm() < 1e-12, "d={d} a={a} b={b}");
                }
            }
        }
    }
}

#[test]
fn root_shift_norm_bounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (m, n) = (5usize, 3usize);
    let nf = n as f64;
    for _ in 0..20 {
        let orb = random_orbitals(&mut rng, m, n);
        let (_, t) = random_antisymmetric(&mut rng, m, n);
        let tp = TensorProjectors::new(&orb).unwrap();
        for gamma in [0.5, 1.0] {
            let f = weight_m(n, gamma).unwrap();
            let alpha_m = t.inner(&tp.apply_f_hat(&t, &f, 0).unwrap()).re;
            for d in [1i64, 2] {
                let df = d as f64;
                for c_flag in [false, true] {
                    let cf = if c_flag { 1.0 } else { 0.0 };
                    let tilde = root_shifted(&tp, &t, &f, d, c_flag).unwrap();
                    let q1 = tilde.apply_one_body(&tp.proj.q, 0);
                    let q12 = q1.apply_one_body(&tp.proj.q, 1);
                    let slack = 1e-12;
                    assert!(tilde.data.norm_squared() <= df * nf.powf(-gamma) + slack);
                    assert!(q1.data.norm_squared() <= df * (df + 1.0).powf(cf) / nf * alpha_m + slack);
                    assert!(q12.data.norm_squared() <= df * (df + 1.0).powf(2.0 * cf) * nf.powf(gamma - 2.0) * alpha_m + slack);
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn alpha_paths_agree(seed in 0u64..100_000, m in 4usize..8, n in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let orb = random_orbitals(&mut rng, m, n);
        let (psi, _) = random_antisymmetric(&mut rng, m, n);
        let a = alpha_f(&psi, &orb, &weight_n(n).unwrap()).unwrap();
        let b = alpha_n_via_density(&psi, &orb).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
        prop_assert!((-1e-14..=1.0 + 1e-14).contains(&a));
        let dist = outside_distribution(&psi, &orb).unwrap();
        prop_assert!((dist.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for gamma in [0.3, 0.5, 1.0] {
            let am = alpha_f(&psi, &orb, &weight_m(n, gamma).unwrap()).unwrap();
            prop_assert!(am >= a - 1e-13 && am <= 1.0 + 1e-13);
        }
    }

    #[test]
    fn alpha_is_first_slot_outside_weight(seed in 0u64..100_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (m, n) = (5, 3);
        let orb = random_orbitals(&mut rng, m, n);
        let (psi, t) = random_antisymmetric(&mut rng, m, n);
        let tp = TensorProjectors::new(&orb).unwrap();
        let q1 = t.inner(&t.apply_one_body(&tp.proj.q, 0)).re;
        let a = alpha_f(&psi, &orb, &weight_n(n).unwrap()).unwrap();
        prop_assert!((q1 - a).abs() < 1e-12);
        let nh = tp.apply_f_hat(&t, &weight_n(n).unwrap(), 0).unwrap();
        let nn = nh.inner(&nh).re;
        let q12 = t.inner(&t.apply_one_body(&tp.proj.q, 0).apply_one_body(&tp.proj.q, 1)).re;
        prop_assert!(q12 <= n as f64 / (n as f64 - 1.0) * nn + 1e-13);
    }

    #[test]
    fn density_matches_partial_trace(seed in 0u64..100_000, m in 3usize..6, n in 1usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (psi, t) = random_antisymmetric(&mut rng, m, n);
        let a = reduced_density(&psi);
        let b = reduced_density_tensor(&t);
        prop_assert!(max_abs(&(&a.mat - &b.mat)) < 1e-12);
        prop_assert!((trace(&a.mat).re - 1.0).abs() < 1e-12);
        let (vals, _) = eigh(&a.mat);
        prop_assert!(vals[0] >= -1e-12 && vals[vals.len() - 1] <= 1.0 / n as f64 + 1e-12);
    }
}

#[test]
fn reference_densities() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (orb, comp) = orbitals_and_complement(&mut rng, 7, 3);
    let sector = build_sector(7, 3).unwrap();
    let s = slater_state(&orb, &sector).unwrap();
    let mu = reduced_density(&s);
    assert!(max_abs(&(&mu.mat - slater_density(&orb).mat)) < 1e-12);
    let one = excited_slater(&orb, &comp, 1, &sector);
    let chi = comp.column(0).into_owned();
    let mut want = &chi * chi.adjoint();
    for j in 1..3 {
        let p = orb.phi.column(j).into_owned();
        want += &p * p.adjoint();
    }
    let mu1 = reduced_density(&one);
    assert!(max_abs(&(&mu1.mat - want / c(3.0))) < 1e-12);
    let d = norm_distances(&mu1, &slater_density(&orb)).unwrap();
    assert!((3.0 * d.op - 1.0).abs() < 1e-12);
    assert!((d.trace - 2.0 / 3.0).abs() < 1e-12);
    let report = check_density_lemma(&one, &orb).unwrap();
    assert!((report.alpha_n - 1.0 / 3.0).abs() < 1e-12);
    assert!(report.alpha_vs_trace.abs() < 1e-12);
    let slater_report = check_density_lemma(&s, &orb).unwrap();
    assert!(slater_report.worst_margin() > -1e-12);
    assert!(slater_report.distances.trace < 1e-12);
}

use fermi_mf::fock::*;
use fermi_mf::linalg::*;
use fermi_mf::meanfield::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_model(rng: &mut ChaCha8Rng, m: usize) -> LatticeModel {
    use rand::Rng;
    let w: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut v = vec![0.0; m];
    for d in 0..=m / 2 {
        let x = rng.gen_range(-1.0..2.0);
        v[d] = x;
        v[(m - d) % m] = x;
    }
    LatticeModel::new(m, 1.0, w, v, 0.7).unwrap()
}

/// Tensor-space Hamiltonian applied slot by slot.
fn tensor_hamiltonian(model: &LatticeModel, t: &TensorState) -> TensorState {
    let h0 = model.h0();
    let g = model.coupling(t.n);
    let mut out = t.with_data(CVec::zeros(t.len()));
    for a in 0..t.n {
        out.data += t.apply_one_body(&h0, a).data;
        for b in a + 1..t.n {
            out.data += t.apply_pair_function(a, b, |x, y| g * model.kernel(x, y)).data;
        }
    }
    out
}

#[test]
fn hamiltonian_matches_tensor_action() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let model = random_model(&mut rng, 6);
    let sector = build_sector(6, 3).unwrap();
    let h = build_hamiltonian(&model, &sector).unwrap();
    let psi = ManyBodyState::random(sector.clone(), &mut rng);
    let t = tensor_representation(&psi).unwrap();
    let ht = tensor_hamiltonian(&model, &t);
    let back = sector_from_tensor(&ht, &sector).unwrap();
    assert!((back - h.apply(&psi.amps)).norm() < 1e-12);
}

#[test]
fn embedding_is_isometry() {
    let sector = build_sector(5, 3).unwrap();
    let e = embedding(&sector).unwrap();
    let g = e.adjoint() * &e;
    assert!((g - CMat::identity(sector.dim(), sector.dim())).norm() < 1e-12);
}

#[test]
fn tensor_of_slater_is_normalised_determinant() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let phi = random_orthonormal(&mut rng, 5, 3);
    let orb = OrbitalSet::new(phi.clone()).unwrap();
    let sector = build_sector(5, 3).unwrap();
    let s = slater_state(&orb, &sector).unwrap();
    assert!((s.norm() - 1.0).abs() < 1e-12);
    let t = tensor_representation(&s).unwrap();
    assert!(t.antisymmetry_defect() < 1e-14);
    // Direct oracle: det[φ_k(x_j)] / sqrt(N!) at an unsorted tuple.
    let xs = [4usize, 0, 2];
    let m = CMat::from_fn(3, 3, |j, k| phi[(xs[j], k)]);
    let want = m.determinant() / c(6f64.sqrt());
    assert!((t.data[t.encode(&xs)] - want).norm() < 1e-13);
}

#[test]
fn hartree_fock_energy_is_slater_expectation() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let model = random_model(&mut rng, 7);
    let sector = build_sector(7, 3).unwrap();
    let h = build_hamiltonian(&model, &sector).unwrap();
    let orb = OrbitalSet::new(random_orthonormal(&mut rng, 7, 3)).unwrap();
    let s = slater_state(&orb, &sector).unwrap();
    let e = hartree_energy(&orb, &model, true);
    assert!((h.expectation(&s) - e).abs() < 1e-12);
}

#[test]
fn krylov_agrees_with_eigen_propagation() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let model = random_model(&mut rng, 10);
    let sector = build_sector(10, 4).unwrap();
    let h = build_hamiltonian(&model, &sector).unwrap();
    let psi = ManyBodyState::random(sector, &mut rng);
    for t in [0.3, -1.7, 6.0] {
        let a = evolve_with(&psi, &h, t, ExpMethod::Eigen).unwrap();
        let b = evolve_with(&psi, &h, t, ExpMethod::Krylov).unwrap();
        assert!((&a.amps - &b.amps).norm() < 1e-9, "t = {t}");
    }
}

#[test]
fn free_evolution_of_slater_stays_slater() {
    // Without interaction the many-body flow is the lifted one-body flow.
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let model = random_model(&mut rng, 6).without_interaction();
    let sector = build_sector(6, 2).unwrap();
    let orb = OrbitalSet::new(random_orthonormal(&mut rng, 6, 2)).unwrap();
    let h = build_hamiltonian(&model, &sector).unwrap();
    let s = slater_state(&orb, &sector).unwrap();
    let t = 0.8;
    let exact = evolve_exact(&s, &h, t).unwrap();
    let (vals, vecs) = eigh(&model.h0());
    let u = unitary_from_eigh(&vals, &vecs, t);
    let moved = OrbitalSet::new(u * &orb.phi).unwrap();
    let want = slater_state(&moved, &sector).unwrap();
    assert!((exact.amps - want.amps).norm() < 1e-11);
}

#[test]
fn rk4_orbitals_match_exact_one_body_flow() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let model = random_model(&mut rng, 8).without_interaction();
    let orb = OrbitalSet::new(random_orthonormal(&mut rng, 8, 3)).unwrap();
    let traj = integrate_orbitals(&orb, &model, 1.0, 0.01, false).unwrap();
    let (vals, vecs) = eigh(&model.h0());
    let want = unitary_from_eigh(&vals, &vecs, 1.0) * &orb.phi;
    assert!((&traj.last().phi - want).norm() < 1e-8);
    assert!(traj.max_gram_drift() < 1e-8);
}

#[test]
fn large_step_trips_gram_guard() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let model = random_model(&mut rng, 8);
    let orb = OrbitalSet::new(random_orthonormal(&mut rng, 8, 3)).unwrap();
    let r = integrate_orbitals(&orb, &model, 5.0, 0.5, true);
    assert!(matches!(r, Err(fermi_mf::error::Error::Integration { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn evolution_is_unitary(seed in 0u64..1000, t in -3.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = random_model(&mut rng, 7);
        let sector = build_sector(7, 3).unwrap();
        let h = build_hamiltonian(&model, &sector).unwrap();
        let psi = ManyBodyState::random(sector, &mut rng);
        let out = evolve_exact(&psi, &h, t).unwrap();
        prop_assert!((out.norm() - 1.0).abs() < 1e-11);
        let e0 = h.expectation(&psi);
        let de = (h.expectation(&out) - e0).abs();
        prop_assert!(de < 1e-10, "energy drift {de:e}");
    }

    #[test]
    fn matrix_free_one_body_matches_dense(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_hermitian(&mut rng, 6);
        let sector = build_sector(6, 3).unwrap();
        let dense = lift_one_body(&a, &sector).unwrap();
        let psi = ManyBodyState::random(sector.clone(), &mut rng);
        let fast = apply_one_body(&a, &sector, &psi.amps);
        prop_assert!((fast - dense.apply(&psi.amps)).norm() < 1e-11);
    }

    #[test]
    fn hartree_energy_is_conserved(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = random_model(&mut rng, 6);
        let orb = OrbitalSet::new(random_orthonormal(&mut rng, 6, 2)).unwrap();
        for exchange in [false, true] {
            let traj = integrate_orbitals(&orb, &model, 1.0, 0.005, exchange).unwrap();
            prop_assert!(traj.max_energy_drift() < 1e-7);
            prop_assert!(traj.max_gram_drift() < 1e-7);
        }
    }
}

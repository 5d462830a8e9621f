#![allow(dead_code)]

use std::sync::Arc;

use fermi_mf::fock::*;
use fermi_mf::linalg::*;
use fermi_mf::meanfield::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn random_model(rng: &mut ChaCha8Rng, m: usize) -> LatticeModel {
    let w: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut v = vec![0.0; m];
    for d in 0..=m / 2 {
        let x = rng.gen_range(-1.0..2.0);
        v[d] = x;
        v[(m - d) % m] = x;
    }
    LatticeModel::new(m, 1.0, w, v, 0.7).unwrap()
}

/// Even kernel with entries in [0, 1).
pub fn random_positive_kernel(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    let mut v = vec![0.0; m];
    for d in 0..=m / 2 {
        let x = rng.gen_range(0.0..1.0);
        v[d] = x;
        v[(m - d) % m] = x;
    }
    v
}

pub fn random_orbitals(rng: &mut ChaCha8Rng, m: usize, n: usize) -> OrbitalSet {
    OrbitalSet::new(random_orthonormal(rng, m, n)).unwrap()
}

/// Random orbitals plus the first `extra` columns of their orthogonal complement.
pub fn orbitals_and_complement(rng: &mut ChaCha8Rng, m: usize, n: usize) -> (OrbitalSet, CMat) {
    let full = random_orthonormal(rng, m, m);
    let orb = OrbitalSet::new(full.columns(0, n).into_owned()).unwrap();
    (orb, full.columns(n, m - n).into_owned())
}

/// Slater state with the first `k` orbitals swapped for complement vectors.
pub fn excited_slater(orb: &OrbitalSet, comp: &CMat, k: usize, sector: &Arc<SectorBasis>) -> ManyBodyState {
    let mut phi = orb.phi.clone();
    for j in 0..k {
        phi.set_column(j, &comp.column(j));
    }
    slater_state(&OrbitalSet::new(phi).unwrap(), sector).unwrap()
}

pub fn random_antisymmetric(rng: &mut ChaCha8Rng, m: usize, n: usize) -> (ManyBodyState, TensorState) {
    let sector = build_sector(m, n).unwrap();
    let psi = ManyBodyState::random(sector, rng);
    let t = tensor_representation(&psi).unwrap();
    (psi, t)
}

pub fn random_tensor(rng: &mut ChaCha8Rng, m: usize, n: usize) -> TensorState {
    let mut t = TensorState::zeros(m, n).unwrap();
    t.data = random_unit_vector(rng, t.len());
    t
}

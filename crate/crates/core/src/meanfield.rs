//! Fermionic Hartree and Hartree-Fock flows for N orbitals on the lattice.

use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Error, Result};
use crate::linalg::{c, gram_deviation, CMat, I};

/// Geometry, free Hamiltonian and interaction of a 1D periodic lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeModel {
    pub m: usize,
    pub hopping: f64,
    /// External field, one value per site.
    pub w: Vec<f64>,
    /// Interaction kernel indexed by periodic displacement d = 0..M-1.
    pub v: Vec<f64>,
    pub beta: f64,
    /// Time-scale prefactor: the generator is divided by eps.
    pub eps: f64,
}

impl LatticeModel {
    pub fn new(m: usize, hopping: f64, w: Vec<f64>, v: Vec<f64>, beta: f64) -> Result<Self> {
        let model = Self { m, hopping, w, v, beta, eps: 1.0 };
        model.validate()?;
        Ok(model)
    }

    pub fn free(m: usize) -> Self {
        Self { m, hopping: 1.0, w: vec![0.0; m], v: vec![0.0; m], beta: 1.0, eps: 1.0 }
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn without_interaction(&self) -> Self {
        Self { v: vec![0.0; self.m], ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(domain("lattice needs at least one site"));
        }
        if self.w.len() != self.m || self.v.len() != self.m {
            return Err(invalid(format!(
                "field and kernel must have length M = {} (got {} and {})",
                self.m,
                self.w.len(),
                self.v.len()
            )));
        }
        if !self.w.iter().chain(&self.v).all(|x| x.is_finite()) {
            return Err(invalid("field and kernel must be finite"));
        }
        for d in 1..self.m {
            if (self.v[d] - self.v[self.m - d]).abs() > 1e-14 * (1.0 + self.v[d].abs()) {
                return Err(invalid(format!("kernel is not even: v({d}) != v({})", self.m - d)));
            }
        }
        if !(self.eps > 0.0) {
            return Err(domain("eps must be positive"));
        }
        Ok(())
    }

    /// Nearest-neighbour hopping plus diagonal field.
    pub fn h0(&self) -> CMat {
        let m = self.m;
        let mut h = CMat::zeros(m, m);
        for x in 0..m {
            h[(x, x)] += c(self.w[x]);
            if m > 1 {
                let r = (x + 1) % m;
                if r != x {
                    h[(x, r)] -= c(self.hopping);
                    h[(r, x)] -= c(self.hopping);
                }
            }
        }
        if m == 2 {
            // The two bonds of a 2-site ring coincide; keep a single hopping.
            h[(0, 1)] = c(-self.hopping);
            h[(1, 0)] = c(-self.hopping);
        }
        h
    }

    /// N^{-β}.
    pub fn coupling(&self, n: usize) -> f64 {
        (n as f64).powf(-self.beta)
    }

    /// v(x - y) on the ring.
    pub fn kernel(&self, x: usize, y: usize) -> f64 {
        self.v[(x + self.m - y) % self.m]
    }

    /// Periodic convolution (k ⋆ f)(x) = Σ_y k(x - y) f(y).
    pub fn convolve(&self, kernel: &[f64], f: &[f64]) -> Vec<f64> {
        convolve(kernel, f)
    }
}

pub fn convolve(kernel: &[f64], f: &[f64]) -> Vec<f64> {
    let m = f.len();
    (0..m)
        .map(|x| (0..m).map(|y| kernel[(x + m - y) % m] * f[y]).sum())
        .collect()
}

/// N orbitals as the columns of an M×N matrix.
#[derive(Debug, Clone)]
pub struct OrbitalSet {
    pub phi: CMat,
    pub t: f64,
}

impl OrbitalSet {
    pub fn new(phi: CMat) -> Result<Self> {
        let dev = gram_deviation(&phi);
        if dev > 1e-8 {
            return Err(invalid(format!("orbitals are not orthonormal (gram deviation {dev:.2e})")));
        }
        Ok(Self { phi, t: 0.0 })
    }

    pub fn m(&self) -> usize {
        self.phi.nrows()
    }

    pub fn n(&self) -> usize {
        self.phi.ncols()
    }

    /// ρ_N(x) = Σ_i |φ_i(x)|².
    pub fn density(&self) -> Vec<f64> {
        (0..self.m())
            .map(|x| (0..self.n()).map(|j| self.phi[(x, j)].norm_sqr()).sum())
            .collect()
    }

    /// Σ_j φ_j(x) φ_j(y)*, the one-body matrix of the orbitals (no inverse Gram).
    pub fn outer(&self) -> CMat {
        &self.phi * self.phi.adjoint()
    }

    pub fn gram_deviation(&self) -> f64 {
        gram_deviation(&self.phi)
    }
}

/// N^{-β}(v ⋆ ρ_N).
pub fn mean_field_potential(orbitals: &OrbitalSet, model: &LatticeModel) -> Vec<f64> {
    let g = model.coupling(orbitals.n());
    convolve(&model.v, &orbitals.density())
        .into_iter()
        .map(|x| g * x)
        .collect()
}

/// Exchange operator matrix N^{-β} v(x - y) Σ_ℓ φ_ℓ(x) φ_ℓ(y)*.
pub fn exchange_operator(orbitals: &OrbitalSet, model: &LatticeModel) -> CMat {
    let g = model.coupling(orbitals.n());
    let p = orbitals.outer();
    CMat::from_fn(model.m, model.m, |x, y| p[(x, y)] * (g * model.kernel(x, y)))
}

/// Mean-field one-body Hamiltonian h⁰ + V (− X with exchange).
pub fn mean_field_hamiltonian(orbitals: &OrbitalSet, model: &LatticeModel, exchange: bool) -> CMat {
    let mut h = model.h0();
    for (x, vx) in mean_field_potential(orbitals, model).into_iter().enumerate() {
        h[(x, x)] += c(vx);
    }
    if exchange {
        h -= exchange_operator(orbitals, model);
    }
    h
}

pub fn hartree_rhs(orbitals: &OrbitalSet, model: &LatticeModel, exchange: bool) -> CMat {
    let h = mean_field_hamiltonian(orbitals, model, exchange);
    (h * &orbitals.phi) * (-I / c(model.eps))
}

/// Half the interaction weight of the exchange term, ½N^{-β} Σ v(x-y)|p(x,y)|².
pub fn exchange_energy(orbitals: &OrbitalSet, model: &LatticeModel) -> f64 {
    let g = model.coupling(orbitals.n());
    let p = orbitals.outer();
    let m = model.m;
    let mut e = 0.0;
    for x in 0..m {
        for y in 0..m {
            e += model.kernel(x, y) * p[(x, y)].norm_sqr();
        }
    }
    0.5 * g * e
}

pub fn direct_energy(orbitals: &OrbitalSet, model: &LatticeModel) -> f64 {
    let rho = orbitals.density();
    let vrho = mean_field_potential(orbitals, model);
    0.5 * rho.iter().zip(&vrho).map(|(a, b)| a * b).sum::<f64>()
}

pub fn one_body_energy(orbitals: &OrbitalSet, model: &LatticeModel) -> f64 {
    let h0 = model.h0();
    (0..orbitals.n())
        .map(|j| {
            let col = orbitals.phi.column(j);
            col.dotc(&(&h0 * col)).re
        })
        .sum()
}

/// Energy functional conserved by the matching flow.
pub fn hartree_energy(orbitals: &OrbitalSet, model: &LatticeModel, exchange: bool) -> f64 {
    let mut e = one_body_energy(orbitals, model) + direct_energy(orbitals, model);
    if exchange {
        e -= exchange_energy(orbitals, model);
    }
    e
}

pub fn rk4_step(orbitals: &OrbitalSet, model: &LatticeModel, dt: f64, exchange: bool) -> OrbitalSet {
    let at = |phi: CMat| OrbitalSet { phi, t: orbitals.t };
    let k1 = hartree_rhs(orbitals, model, exchange);
    let k2 = hartree_rhs(&at(&orbitals.phi + &k1 * c(0.5 * dt)), model, exchange);
    let k3 = hartree_rhs(&at(&orbitals.phi + &k2 * c(0.5 * dt)), model, exchange);
    let k4 = hartree_rhs(&at(&orbitals.phi + &k3 * c(dt)), model, exchange);
    let phi = &orbitals.phi + (k1 + k2 * c(2.0) + k3 * c(2.0) + k4) * c(dt / 6.0);
    OrbitalSet { phi, t: orbitals.t + dt }
}

/// Classical RK4 for the one-body flow with no re-orthonormalisation.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<OrbitalSet>,
    pub gram_drift: Vec<f64>,
    pub energy: Vec<f64>,
}

impl Trajectory {
    pub fn last(&self) -> &OrbitalSet {
        self.states.last().expect("trajectory holds the initial state")
    }

    pub fn max_gram_drift(&self) -> f64 {
        self.gram_drift.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_energy_drift(&self) -> f64 {
        let e0 = self.energy[0];
        self.energy.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max) / (1.0 + e0.abs())
    }
}

pub const GRAM_DRIFT_LIMIT: f64 = 1e-6;

pub fn integrate_orbitals(
    orbitals: &OrbitalSet,
    model: &LatticeModel,
    t_final: f64,
    dt: f64,
    exchange: bool,
) -> Result<Trajectory> {
    if !(dt > 0.0) || !(t_final >= 0.0) {
        return Err(domain("need dt > 0 and t_final >= 0"));
    }
    model.validate()?;
    let steps = (t_final / dt).round() as usize;
    let mut states = Vec::with_capacity(steps + 1);
    let mut gram_drift = Vec::with_capacity(steps + 1);
    let mut energy = Vec::with_capacity(steps + 1);
    let mut cur = orbitals.clone();
    for step in 0..=steps {
        let drift = cur.gram_deviation();
        if drift > GRAM_DRIFT_LIMIT {
            return Err(Error::Integration { drift, t: cur.t, limit: GRAM_DRIFT_LIMIT });
        }
        gram_drift.push(drift);
        energy.push(hartree_energy(&cur, model, exchange));
        states.push(cur.clone());
        if step < steps {
            cur = rk4_step(&cur, model, dt, exchange);
        }
    }
    Ok(Trajectory { states, gram_drift, energy })
}

/// Orthonormal eigenvectors of h⁰ for the N lowest eigenvalues.
pub fn lowest_orbitals(model: &LatticeModel, n: usize) -> Result<OrbitalSet> {
    if n > model.m {
        return Err(domain(format!("cannot take {n} orbitals from {} modes", model.m)));
    }
    let (_, vecs) = crate::linalg::eigh(&model.h0());
    OrbitalSet::new(vecs.columns(0, n).into_owned())
}

/// Plane waves e^{2πikx/M}/√M with k ordered 0, 1, -1, 2, -2, ...
pub fn plane_wave_orbitals(m: usize, n: usize) -> Result<OrbitalSet> {
    if n > m {
        return Err(domain(format!("cannot take {n} plane waves on {m} sites")));
    }
    let ks = plane_wave_momenta(m, n);
    let phi = CMat::from_fn(m, n, |x, j| {
        let arg = 2.0 * std::f64::consts::PI * (ks[j] as f64) * (x as f64) / m as f64;
        num_complex::Complex64::from_polar(1.0 / (m as f64).sqrt(), arg)
    });
    OrbitalSet::new(phi)
}

pub fn plane_wave_momenta(m: usize, n: usize) -> Vec<i64> {
    let mut ks = vec![0i64];
    let mut k = 1i64;
    while ks.len() < n.min(m) {
        ks.push(k);
        if ks.len() < n && (2 * k as usize) < m {
            ks.push(-k);
        }
        k += 1;
    }
    ks.truncate(n);
    ks
}

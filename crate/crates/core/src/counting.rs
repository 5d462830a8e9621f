//! Counting functional α_f and the projector algebra around it.
//!
//! Two independent paths: spectral projectors of the outside-number operator
//! on the Fock sector (fast), and explicit slot-wise products of p and q on the
//! first-quantised tensor space (oracle).

use serde::Serialize;

use crate::error::{domain, invalid, Error, Result};
use crate::fock::{apply_one_body, lift_one_body, HermitianOperator, ManyBodyState, SectorBasis, TensorState};
use crate::linalg::{c, hermiticity_defect, max_abs, span_projector, CMat, CVec};
use crate::meanfield::OrbitalSet;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightFunction {
    n: usize,
    values: Vec<f64>,
}

impl WeightFunction {
    /// Arbitrary weight; checks f(0) = 0, f(N) = 1 and 0 ≤ f ≤ 1.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(domain("weight needs N >= 1"));
        }
        let n = values.len() - 1;
        if values[0] != 0.0 || values[n] != 1.0 {
            return Err(invalid("weight must satisfy f(0) = 0 and f(N) = 1"));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(invalid("weight values must lie in [0, 1]"));
        }
        Ok(Self { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// f(k), zero outside 0..=N.
    pub fn at(&self, k: i64) -> f64 {
        if k < 0 || k as usize > self.n {
            0.0
        } else {
            self.values[k as usize]
        }
    }

    pub fn squared(&self) -> Self {
        Self { n: self.n, values: self.values.iter().map(|v| v * v).collect() }
    }
}

/// n(k) = k/N.
pub fn weight_n(n: usize) -> Result<WeightFunction> {
    if n == 0 {
        return Err(domain("weight needs N >= 1"));
    }
    WeightFunction::from_values((0..=n).map(|k| k as f64 / n as f64).collect())
}

/// m^(γ)(k) = k/N^γ for k ≤ N^γ, else 1.
pub fn weight_m(n: usize, gamma: f64) -> Result<WeightFunction> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(domain(format!("gamma must lie in (0, 1], got {gamma}")));
    }
    if n == 0 {
        return Err(domain("weight needs N >= 1"));
    }
    let ng = (n as f64).powf(gamma);
    let mut values: Vec<f64> = (0..=n)
        .map(|k| if k as f64 <= ng { (k as f64 / ng).min(1.0) } else { 1.0 })
        .collect();
    // N^γ = N for γ = 1 up to rounding in powf.
    values[n] = 1.0;
    WeightFunction::from_values(values)
}

/// One-body projector p onto span(φ) and its complement q.
#[derive(Debug, Clone)]
pub struct ComplementProjector {
    pub p: CMat,
    pub q: CMat,
}

impl ComplementProjector {
    pub fn new(orbitals: &OrbitalSet) -> Self {
        let p = span_projector(&orbitals.phi);
        let q = CMat::identity(p.nrows(), p.ncols()) - &p;
        Self { p, q }
    }

    /// Largest violation among p² = p, p = p†, pq = 0, tr p = N.
    pub fn defect(&self, n: usize) -> f64 {
        let idem = max_abs(&(&self.p * &self.p - &self.p));
        let herm = hermiticity_defect(&self.p);
        let pq = max_abs(&(&self.p * &self.q));
        let rank = (crate::linalg::trace(&self.p) - c(n as f64)).norm();
        idem.max(herm).max(pq).max(rank)
    }
}

/// Second quantisation of q: counts particles outside span(φ).
pub fn outside_number_operator(orbitals: &OrbitalSet, sector: &SectorBasis) -> Result<HermitianOperator> {
    check_shapes(orbitals, sector)?;
    lift_one_body(&ComplementProjector::new(orbitals).q, sector)
}

fn check_shapes(orbitals: &OrbitalSet, sector: &SectorBasis) -> Result<()> {
    if orbitals.m() != sector.m() || orbitals.n() != sector.n() {
        return Err(invalid(format!(
            "orbitals are {}x{}, sector has M = {}, N = {}",
            orbitals.m(),
            orbitals.n(),
            sector.m(),
            sector.n()
        )));
    }
    Ok(())
}

/// Π_k ψ for k = 0..=N, where Π_k is the spectral projector of N̂_out at k.
///
/// The spectrum of N̂_out lies in {0, ..., K} with K = min(N, M - N), so each
/// Π_k is the Lagrange polynomial ∏_{j≠k} (N̂_out - j)/(k - j), applied matrix-free.
pub fn sector_projections(state: &ManyBodyState, orbitals: &OrbitalSet) -> Result<Vec<CVec>> {
    let sector = &state.sector;
    check_shapes(orbitals, sector)?;
    let q = ComplementProjector::new(orbitals).q;
    let n = sector.n();
    let kmax = n.min(sector.m() - n);
    let mut out = Vec::with_capacity(n + 1);
    for k in 0..=n {
        if k > kmax {
            out.push(CVec::zeros(sector.dim()));
            continue;
        }
        let mut v = state.amps.clone();
        for j in (0..=kmax).filter(|&j| j != k) {
            let nv = apply_one_body(&q, sector, &v);
            v = (nv - &v * c(j as f64)) / c(k as f64 - j as f64);
        }
        out.push(v);
    }
    Ok(out)
}

/// ‖Π_k ψ‖² for k = 0..=N.
pub fn outside_distribution(state: &ManyBodyState, orbitals: &OrbitalSet) -> Result<Vec<f64>> {
    Ok(sector_projections(state, orbitals)?.iter().map(|v| v.norm_squared()).collect())
}

pub fn alpha_from_distribution(weights: &[f64], f: &WeightFunction) -> f64 {
    weights.iter().enumerate().map(|(k, w)| f.at(k as i64) * w).sum()
}

pub fn alpha_f(state: &ManyBodyState, orbitals: &OrbitalSet, f: &WeightFunction) -> Result<f64> {
    if f.n() != state.sector.n() {
        return Err(invalid(format!("weight is for N = {}, state has N = {}", f.n(), state.sector.n())));
    }
    Ok(alpha_from_distribution(&outside_distribution(state, orbitals)?, f))
}

/// tr(μ₁ q), the density-matrix route to α_n.
pub fn alpha_n_via_density(state: &ManyBodyState, orbitals: &OrbitalSet) -> Result<f64> {
    check_shapes(orbitals, &state.sector)?;
    let mu = crate::density::reduced_density(state);
    let q = ComplementProjector::new(orbitals).q;
    Ok(crate::linalg::trace(&(&mu.mat * q)).re)
}

/// Cap on tensor length for building explicit operator matrices.
pub const MATRIX_CAP: usize = 512;

/// p and q acting slot-wise on the tensor space of N particles.
#[derive(Debug, Clone)]
pub struct TensorProjectors {
    pub m: usize,
    pub n: usize,
    pub proj: ComplementProjector,
}

impl TensorProjectors {
    pub fn new(orbitals: &OrbitalSet) -> Result<Self> {
        crate::fock::TensorState::zeros(orbitals.m(), orbitals.n())?;
        Ok(Self { m: orbitals.m(), n: orbitals.n(), proj: ComplementProjector::new(orbitals) })
    }

    fn check(&self, t: &TensorState) -> Result<()> {
        if t.m != self.m || t.n != self.n {
            return Err(invalid("tensor shape does not match the projectors"));
        }
        Ok(())
    }

    /// All 2^N products; component `mask` carries q on the slots whose bit is set.
    pub fn components(&self, t: &TensorState) -> Result<Vec<TensorState>> {
        self.check(t)?;
        let mut comps = vec![t.clone()];
        for slot in 0..self.n {
            let mut next = vec![t.clone(); comps.len() * 2];
            for (mask, comp) in comps.into_iter().enumerate() {
                let pc = comp.apply_one_body(&self.proj.p, slot);
                let qc = comp.with_data(&comp.data - &pc.data);
                next[mask] = pc;
                next[mask | (1 << slot)] = qc;
            }
            comps = next;
        }
        Ok(comps)
    }

    /// Σ_k g(k) P_{N,k} t.
    pub fn apply_weighted(&self, t: &TensorState, g: impl Fn(usize) -> f64) -> Result<TensorState> {
        let comps = self.components(t)?;
        let mut out = CVec::zeros(t.len());
        for (mask, comp) in comps.iter().enumerate() {
            let w = g((mask as u32).count_ones() as usize);
            if w != 0.0 {
                out += &comp.data * c(w);
            }
        }
        Ok(t.with_data(out))
    }

    pub fn apply_pnk(&self, t: &TensorState, k: usize) -> Result<TensorState> {
        self.apply_weighted(t, |j| if j == k { 1.0 } else { 0.0 })
    }

    /// f̂_d t = Σ_k f(k + d) P_{N,k} t.
    pub fn apply_f_hat(&self, t: &TensorState, f: &WeightFunction, d: i64) -> Result<TensorState> {
        self.apply_weighted(t, |k| f.at(k as i64 + d))
    }

    /// Dense matrix of a linear tensor-space map, built column by column.
    pub fn matrix_of(&self, op: impl Fn(&TensorState) -> Result<TensorState>) -> Result<CMat> {
        let len = crate::fock::TensorState::zeros(self.m, self.n)?.len();
        if len > MATRIX_CAP {
            return Err(Error::Size { what: "tensor operator matrix", size: len, cap: MATRIX_CAP });
        }
        let zero = TensorState::zeros(self.m, self.n)?;
        let mut mat = CMat::zeros(len, len);
        for j in 0..len {
            let mut e = zero.clone();
            e.data[j] = c(1.0);
            mat.set_column(j, &op(&e)?.data);
        }
        Ok(mat)
    }
}

impl TensorProjectors {
    /// P_a on slots (s1, s2): p p for a = 0, p q + q p for a = 1, q q for a = 2.
    pub fn apply_pair_projector(&self, t: &TensorState, a: usize, s1: usize, s2: usize) -> TensorState {
        let (p, q) = (&self.proj.p, &self.proj.q);
        let pp = |x: &CMat, y: &CMat| t.apply_one_body(x, s1).apply_one_body(y, s2);
        match a {
            0 => pp(p, p),
            1 => {
                let mut out = pp(p, q);
                out.data += pp(q, p).data;
                out
            }
            _ => pp(q, q),
        }
    }
}

/// Explicit P_{N,k} on the tensor space.
pub fn pnk_tensor(orbitals: &OrbitalSet, k: usize) -> Result<CMat> {
    let tp = TensorProjectors::new(orbitals)?;
    tp.matrix_of(|t| tp.apply_pnk(t, k))
}

/// Explicit f̂_d on the tensor space.
pub fn f_hat_tensor(f: &WeightFunction, d: i64, orbitals: &OrbitalSet) -> Result<CMat> {
    if f.n() != orbitals.n() {
        return Err(invalid("weight and orbitals disagree on N"));
    }
    let tp = TensorProjectors::new(orbitals)?;
    tp.matrix_of(|t| tp.apply_f_hat(t, f, d))
}

/// ψ̃ vectors of the root-shift bounds, for shift d ∈ {1, 2}:
/// c = 1 gives (f̂ - f̂_{-d})^{1/2} ψ, c = 0 gives Σ_{k ≤ N-d} (f(k+d) - f(k))^{1/2} P_k ψ.
pub fn root_shifted(tp: &TensorProjectors, t: &TensorState, f: &WeightFunction, d: i64, c_flag: bool) -> Result<TensorState> {
    let n = tp.n as i64;
    tp.apply_weighted(t, |k| {
        let k = k as i64;
        if c_flag {
            (f.at(k) - f.at(k - d)).max(0.0).sqrt()
        } else if k <= n - d {
            (f.at(k + d) - f.at(k)).max(0.0).sqrt()
        } else {
            0.0
        }
    })
}

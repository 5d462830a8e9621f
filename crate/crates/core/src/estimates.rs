//! Time-derivative decomposition of α_f, the interaction bounds that control
//! it, and the Gronwall envelopes built from them.

use serde::Serialize;

use crate::counting::{alpha_f, weight_m, weight_n, TensorProjectors, WeightFunction};
use crate::error::{domain, invalid, Result};
use crate::fock::{build_hamiltonian, evolve_exact, tensor_representation, ManyBodyState, TensorState};
use crate::linalg::{c, eigh, CMat};
use crate::meanfield::{convolve, mean_field_potential, rk4_step, LatticeModel, OrbitalSet};

/// Scaled operators on the tensor space: slot-wise p and q, v₁₂ = N^{-β}v(x₁-x₂)
/// and the direct mean field V₁.
pub struct TensorKit {
    pub tp: TensorProjectors,
    pub vn: Vec<f64>,
    pub vdir: Vec<f64>,
}

impl TensorKit {
    pub fn new(orbitals: &OrbitalSet, model: &LatticeModel) -> Result<Self> {
        if orbitals.m() != model.m {
            return Err(invalid("orbitals and model disagree on M"));
        }
        let g = model.coupling(orbitals.n());
        Ok(Self {
            tp: TensorProjectors::new(orbitals)?,
            vn: model.v.iter().map(|x| g * x).collect(),
            vdir: mean_field_potential(orbitals, model),
        })
    }

    fn n(&self) -> usize {
        self.tp.n
    }

    pub fn p(&self, t: &TensorState, slot: usize) -> TensorState {
        t.apply_one_body(&self.tp.proj.p, slot)
    }

    pub fn q(&self, t: &TensorState, slot: usize) -> TensorState {
        t.apply_one_body(&self.tp.proj.q, slot)
    }

    pub fn v12(&self, t: &TensorState) -> TensorState {
        let m = self.tp.m;
        t.apply_pair_function(0, 1, |x, y| self.vn[(x + m - y) % m])
    }

    pub fn v1(&self, t: &TensorState) -> TensorState {
        t.apply_site_function(0, |x| self.vdir[x])
    }

    /// N(f̂ - f̂_{-d}).
    fn weight_gap(&self, t: &TensorState, f: &WeightFunction, d: i64) -> Result<TensorState> {
        let n = self.n() as f64;
        self.tp.apply_weighted(t, |k| n * (f.at(k as i64) - f.at(k as i64 - d)))
    }

    /// q₁((N-1)p₂v₁₂p₂ - V₁)p₁ψ, optionally without the mean field.
    pub fn qp_pp(&self, t: &TensorState, with_mean_field: bool) -> TensorState {
        let n1 = (self.n() - 1) as f64;
        let p1 = self.p(t, 0);
        let mut inner = self.p(&self.v12(&self.p(&p1, 1)), 1);
        inner.data *= c(n1);
        if with_mean_field {
            inner.data -= self.v1(&p1).data;
        }
        self.q(&inner, 0)
    }

    /// q₁q₂(N-1)v₁₂p₁p₂ψ.
    pub fn qq_pp(&self, t: &TensorState) -> TensorState {
        let mut x = self.q(&self.q(&self.v12(&self.p(&self.p(t, 0), 1)), 0), 1);
        x.data *= c((self.n() - 1) as f64);
        x
    }

    /// q₁q₂(N-1)v₁₂p₁q₂ψ.
    pub fn qq_pq(&self, t: &TensorState) -> TensorState {
        let mut x = self.q(&self.q(&self.v12(&self.p(&self.q(t, 1), 0)), 0), 1);
        x.data *= c((self.n() - 1) as f64);
        x
    }
}

/// The three imaginary-part terms of ∂_t α_f, evaluated with the general weight form
/// 2Im⟨N(f̂-f̂₋₁)q₁(...)p₁⟩, Im⟨N(f̂-f̂₋₂)q₁q₂(...)p₁p₂⟩, 2Im⟨N(f̂-f̂₋₁)q₁q₂(...)p₁q₂⟩.
pub fn derivative_terms(t: &TensorState, kit: &TensorKit, f: &WeightFunction) -> Result<[f64; 3]> {
    if t.n < 2 {
        return Err(domain("the derivative decomposition needs N >= 2"));
    }
    let t1 = 2.0 * t.inner(&kit.weight_gap(&kit.qp_pp(t, true), f, 1)?).im;
    let t2 = t.inner(&kit.weight_gap(&kit.qq_pp(t), f, 2)?).im;
    let t3 = 2.0 * t.inner(&kit.weight_gap(&kit.qq_pq(t), f, 1)?).im;
    Ok([t1, t2, t3])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivativeDecomposition {
    pub t1_qp_pp: f64,
    pub t2_qq_pp: f64,
    pub t3_qq_pq: f64,
    pub fd_reference: f64,
}

impl DerivativeDecomposition {
    pub fn sum(&self) -> f64 {
        self.t1_qp_pp + self.t2_qq_pp + self.t3_qq_pq
    }

    pub fn mismatch(&self) -> f64 {
        (self.sum() - self.fd_reference).abs()
    }
}

/// Three-term split of dα_n/dt together with a centred finite difference along the
/// coupled flow: ψ evolved exactly by ±dt, the orbitals by one RK4 step of ±dt.
pub fn derivative_three_terms(
    state: &ManyBodyState,
    orbitals: &OrbitalSet,
    model: &LatticeModel,
    dt: f64,
) -> Result<DerivativeDecomposition> {
    let sector = &state.sector;
    if sector.m() != model.m || orbitals.m() != model.m || orbitals.n() != sector.n() {
        return Err(invalid("state, orbitals and model must share M and N"));
    }
    let h = build_hamiltonian(model, sector)?;
    derivative_with_hamiltonian(state, orbitals, model, &h, dt)
}

pub(crate) fn derivative_with_hamiltonian(
    state: &ManyBodyState,
    orbitals: &OrbitalSet,
    model: &LatticeModel,
    h: &crate::fock::HermitianOperator,
    dt: f64,
) -> Result<DerivativeDecomposition> {
    let n = state.sector.n();
    let f = weight_n(n)?;
    let kit = TensorKit::new(orbitals, model)?;
    let t = tensor_representation(state)?;
    let [t1, t2, t3] = derivative_terms(&t, &kit, &f)?;
    let fwd = alpha_f(&evolve_exact(state, h, dt)?, &rk4_step(orbitals, model, dt, false), &f)?;
    let bwd = alpha_f(&evolve_exact(state, h, -dt)?, &rk4_step(orbitals, model, -dt, false), &f)?;
    Ok(DerivativeDecomposition {
        t1_qp_pp: t1,
        t2_qq_pp: t2,
        t3_qq_pq: t3,
        fd_reference: (fwd - bwd) / (2.0 * dt),
    })
}

/// Positive and negative parts, v = v₊ - v₋.
pub fn split_kernel(v: &[f64]) -> (Vec<f64>, Vec<f64>) {
    (v.iter().map(|x| x.max(0.0)).collect(), v.iter().map(|x| (-x).max(0.0)).collect())
}

fn require_nonnegative(h: &[f64]) -> Result<()> {
    if h.iter().any(|x| *x < 0.0) {
        return Err(domain("kernel must be non-negative; split it into positive and negative parts first"));
    }
    Ok(())
}

/// Eigen-decomposition of p₂h₁₂p₂ at fixed x₁ within span(φ).
#[derive(Debug, Clone)]
pub struct PvpDiagonalization {
    pub eigenvalues: Vec<f64>,
    /// Columns χ_i = Σ_j φ_j U_ji.
    pub chi: CMat,
}

pub fn diagonalize_pvp(orbitals: &OrbitalSet, h: &[f64], x1: usize) -> Result<PvpDiagonalization> {
    require_nonnegative(h)?;
    let m = orbitals.m();
    if h.len() != m || x1 >= m {
        return Err(invalid("kernel length or site out of range"));
    }
    let phi = &orbitals.phi;
    let n = orbitals.n();
    let a = CMat::from_fn(n, n, |i, j| {
        (0..m).map(|y| phi[(y, i)].conj() * h[(x1 + m - y) % m] * phi[(y, j)]).sum()
    });
    let a = (&a + a.adjoint()) * c(0.5);
    let (eigenvalues, u) = eigh(&a);
    Ok(PvpDiagonalization { eigenvalues, chi: phi * u })
}

/// (v²⋆ρ)(y) - Σ_ij |⟨φ_i, v(·-y)φ_j⟩|² with the unscaled kernel.
pub fn fluctuation_variance(orbitals: &OrbitalSet, model: &LatticeModel, y: usize) -> f64 {
    let m = model.m;
    let v2: Vec<f64> = model.v.iter().map(|x| x * x).collect();
    let first = convolve(&v2, &orbitals.density())[y];
    let phi = &orbitals.phi;
    let n = orbitals.n();
    let mut second = 0.0;
    for i in 0..n {
        for j in 0..n {
            let z: crate::linalg::C64 = (0..m).map(|x| phi[(x, i)].conj() * model.kernel(x, y) * phi[(x, j)]).sum();
            second += z.norm_sqr();
        }
    }
    first - second
}

/// Parameters of the general interaction assumption.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct AssumptionParams {
    pub gamma: f64,
    /// Displacements counted as "near"; the bound splits the interaction there.
    pub omega: Vec<usize>,
    pub delta2: f64,
    pub delta3: f64,
    pub delta4: f64,
}

impl AssumptionParams {
    pub fn new(gamma: f64, omega: Vec<usize>) -> Self {
        Self { gamma, omega, delta2: 0.0, delta3: 0.0, delta4: 0.0 }
    }

    /// δ = min{γ - δ₂, γ + δ₃/2, γ + δ₄}.
    pub fn rate(&self) -> f64 {
        (self.gamma - self.delta2).min(self.gamma + self.delta3 / 2.0).min(self.gamma + self.delta4)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AssumptionQuantities {
    pub t: f64,
    pub d0: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub d4: f64,
    /// N·sup((v^N)²⋆ρ), the single constant of the n-weight theorem.
    pub d_thm: f64,
}

/// Raw interaction functionals of ρ and v^N = N^{-β}v.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InteractionNorms {
    /// sup(|v^N|⋆ρ)
    pub sup_abs: f64,
    /// sup(v^N⋆ρ)
    pub sup_conv: f64,
    /// sup((v^N)²⋆ρ)
    pub sup_sq: f64,
    /// ∫((v^N)²⋆ρ)ρ
    pub int_sq: f64,
    /// sup_x Σ_{d∈Ω} v^N(d)²ρ(x+d)
    pub near_sq: f64,
    /// sup_{d∉Ω}|v^N(d)|
    pub far_sup: f64,
}

pub fn interaction_norms(orbitals: &OrbitalSet, model: &LatticeModel, omega: &[usize]) -> InteractionNorms {
    let m = model.m;
    let g = model.coupling(orbitals.n());
    let vn: Vec<f64> = model.v.iter().map(|x| g * x).collect();
    let rho = orbitals.density();
    let sup = |xs: Vec<f64>| xs.into_iter().fold(0.0f64, f64::max);
    let abs: Vec<f64> = vn.iter().map(|x| x.abs()).collect();
    let sq: Vec<f64> = vn.iter().map(|x| x * x).collect();
    let sq_conv = convolve(&sq, &rho);
    let near = (0..m).map(|x| omega.iter().map(|&d| sq[d % m] * rho[(x + d) % m]).sum()).collect();
    let far = (0..m).filter(|d| !omega.contains(d)).map(|d| abs[d]).collect();
    InteractionNorms {
        sup_abs: sup(convolve(&abs, &rho)),
        sup_conv: convolve(&vn, &rho).into_iter().fold(f64::NEG_INFINITY, f64::max),
        sup_sq: sup(sq_conv.clone()),
        int_sq: sq_conv.iter().zip(&rho).map(|(a, b)| a * b).sum(),
        near_sq: sup(near),
        far_sup: sup(far),
    }
}

pub fn assumption_quantities(orbitals: &OrbitalSet, model: &LatticeModel, params: &AssumptionParams) -> AssumptionQuantities {
    let nf = orbitals.n() as f64;
    let s = interaction_norms(orbitals, model, &params.omega);
    AssumptionQuantities {
        t: orbitals.t,
        d0: s.sup_abs,
        d1: nf.powf(params.gamma) * s.sup_sq,
        d2: nf.powf(-params.delta2) * s.int_sq,
        d3: nf.powf(1.0 + params.delta3) * s.near_sq,
        d4: nf.powf(0.5 + params.gamma / 2.0 + params.delta4) * s.far_sup,
        d_thm: nf * s.sup_sq,
    }
}

/// C = 24√D for the n-weight theorem.
pub fn rate_n(q: &AssumptionQuantities) -> f64 {
    24.0 * q.d_thm.sqrt()
}

/// C = 12 max{4√D₃N^{-δ₃/2}, 4√2 D₄N^{-δ₄}, √12 D₀, √12 D₂/D₀, 8√D₁}.
pub fn rate_general(q: &AssumptionQuantities, params: &AssumptionParams, n: usize) -> f64 {
    let nf = n as f64;
    let s12 = 12f64.sqrt();
    let ratio = if q.d0 > 0.0 { q.d2 / q.d0 } else { 0.0 };
    let terms = [
        4.0 * q.d3.sqrt() * nf.powf(-params.delta3 / 2.0),
        4.0 * 2f64.sqrt() * q.d4 * nf.powf(-params.delta4),
        s12 * q.d0,
        s12 * ratio,
        8.0 * q.d1.sqrt(),
    ];
    12.0 * terms.into_iter().fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GronwallEnvelope {
    pub t: Vec<f64>,
    pub c: Vec<f64>,
    pub integral: Vec<f64>,
    pub values: Vec<f64>,
    pub delta: f64,
    pub n: usize,
}

/// e^{∫C}α₀ + (e^{∫C} - 1)N^{-δ} with a trapezoidal ∫C.
pub fn gronwall_envelope(alpha0: f64, c_samples: &[f64], delta: f64, n: usize, t_grid: &[f64]) -> Result<GronwallEnvelope> {
    if n == 0 || !(delta >= 0.0) {
        return Err(domain("need N >= 1 and delta >= 0"));
    }
    if c_samples.len() != t_grid.len() || t_grid.is_empty() {
        return Err(invalid("C samples must match the time grid"));
    }
    let eps = (n as f64).powf(-delta);
    let mut integral = vec![0.0; t_grid.len()];
    for i in 1..t_grid.len() {
        integral[i] = integral[i - 1] + 0.5 * (c_samples[i] + c_samples[i - 1]) * (t_grid[i] - t_grid[i - 1]);
    }
    let values = integral.iter().map(|i| i.exp() * alpha0 + i.exp_m1() * eps).collect();
    Ok(GronwallEnvelope { t: t_grid.to_vec(), c: c_samples.to_vec(), integral, values, delta, n })
}

/// δ = min{γ/2 - 1/6, 1/2 - γ/2} of the free-limit bound.
pub fn free_limit_rate(gamma: f64) -> f64 {
    (gamma / 2.0 - 1.0 / 6.0).min(0.5 - gamma / 2.0)
}

/// Margins (rhs - lhs) of the three sandwich bounds for a non-negative kernel h.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SandwichMargins {
    pub pvp: f64,
    pub ppvpp: f64,
    pub qppvvppq: Option<f64>,
}

pub fn sandwich_margins(t: &TensorState, orbitals: &OrbitalSet, h: &[f64]) -> Result<SandwichMargins> {
    require_nonnegative(h)?;
    let (m, n) = (t.m, t.n);
    if n < 2 || orbitals.n() != n || orbitals.m() != m {
        return Err(invalid("sandwich bounds need N >= 2 and matching orbitals"));
    }
    let tp = TensorProjectors::new(orbitals)?;
    let (p, q) = (&tp.proj.p, &tp.proj.q);
    let rho = orbitals.density();
    let hr = convolve(h, &rho);
    let sup_hr = hr.iter().copied().fold(0.0, f64::max);
    let int_hr: f64 = hr.iter().zip(&rho).map(|(a, b)| a * b).sum();
    let nf = n as f64;
    let hk = |x: usize, y: usize| h[(x + m - y) % m];
    let norm = t.data.norm_squared();

    let p2 = t.apply_one_body(p, 1);
    let pvp = p2.inner(&p2.apply_pair_function(0, 1, hk)).re;
    let pp = p2.apply_one_body(p, 0);
    let ppvpp = pp.inner(&pp.apply_pair_function(0, 1, hk)).re;
    let qppvvppq = if n >= 3 {
        // ⟨q₃p₁p₂ h₁₂h₁₃ p₁p₃q₂⟩ with the slot order (1, 2, 3) = (0, 1, 2).
        let right = t.apply_one_body(q, 1).apply_one_body(p, 2).apply_one_body(p, 0);
        let right = right.apply_pair_function(0, 2, hk).apply_pair_function(0, 1, hk);
        let left = t.apply_one_body(q, 2).apply_one_body(p, 1).apply_one_body(p, 0);
        let lhs = left.inner(&right).norm();
        let q1 = t.inner(&t.apply_one_body(q, 0)).re;
        Some(sup_hr * sup_hr / ((nf - 1.0) * (nf - 2.0)) * q1 - lhs)
    } else {
        None
    };
    Ok(SandwichMargins {
        pvp: sup_hr / (nf - 1.0) * norm - pvp,
        ppvpp: int_hr / (nf * (nf - 1.0)) * norm - ppvpp,
        qppvvppq,
    })
}

/// Left and right sides of the three term bounds for the weight m^(γ).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermBoundReport {
    pub gamma: f64,
    pub alpha_m: f64,
    pub lhs_qp_pp: f64,
    pub lhs_qp_pp_free: f64,
    pub lhs_qq_pp: f64,
    pub lhs_qq_pq: f64,
    /// Ω-split bound on the qp-pp term with the direct mean field.
    pub rhs_a: f64,
    /// sup(v⋆ρ) bound, valid with and without the mean field.
    pub rhs_a_prime: f64,
    pub rhs_b: f64,
    pub rhs_b_prime: f64,
    pub rhs_c: f64,
}

impl TermBoundReport {
    pub fn margins(&self) -> [(&'static str, f64); 6] {
        [
            ("qp-pp (split)", self.rhs_a - self.lhs_qp_pp),
            ("qp-pp (sup, direct)", self.rhs_a_prime - self.lhs_qp_pp),
            ("qp-pp (sup, free)", self.rhs_a_prime - self.lhs_qp_pp_free),
            ("qq-pp", self.rhs_b - self.lhs_qq_pp),
            ("qq-pp (alt)", self.rhs_b_prime - self.lhs_qq_pp),
            ("qq-pq", self.rhs_c - self.lhs_qq_pq),
        ]
    }

    pub fn worst_margin(&self) -> f64 {
        self.margins().iter().map(|m| m.1).fold(f64::INFINITY, f64::min)
    }

    /// Right-side budget for |dα/dt| when the orbitals follow the free flow.
    pub fn free_budget(&self) -> f64 {
        self.rhs_a_prime + self.rhs_b_prime + self.rhs_c
    }
}

pub fn term_bound_check(
    t: &TensorState,
    orbitals: &OrbitalSet,
    model: &LatticeModel,
    gamma: f64,
    omega: &[usize],
) -> Result<TermBoundReport> {
    require_nonnegative(&model.v)?;
    let n = orbitals.n();
    let nf = n as f64;
    let f = weight_m(n, gamma)?;
    let kit = TensorKit::new(orbitals, model)?;
    let alpha_m = t.inner(&kit.tp.apply_f_hat(t, &f, 0)?).re;
    let lhs1 = (2.0 * t.inner(&kit.weight_gap(&kit.qp_pp(t, true), &f, 1)?).im).abs();
    let lhs1_free = (2.0 * t.inner(&kit.weight_gap(&kit.qp_pp(t, false), &f, 1)?).im).abs();
    let lhs2 = t.inner(&kit.weight_gap(&kit.qq_pp(t), &f, 2)?).im.abs();
    let lhs3 = (2.0 * t.inner(&kit.weight_gap(&kit.qq_pq(t), &f, 1)?).im).abs();

    let s = interaction_norms(orbitals, model, omega);
    let ng = nf.powf(-gamma);
    let rhs_a = 4.0 * s.near_sq.sqrt() * nf.sqrt() * (alpha_m + ng)
        + 4.0 * 2f64.sqrt() * s.far_sup * nf.powf(0.5 + gamma / 2.0) * (alpha_m + ng);
    let rhs_a_prime = 4.0 * 2f64.sqrt() * s.sup_conv * nf.powf(0.5 - gamma / 2.0);
    let rhs_b = 12f64.sqrt() * (s.sup_conv.powi(2) * alpha_m * alpha_m + s.int_sq * alpha_m * ng).sqrt();
    let rhs_b_prime = 12f64.sqrt() * s.int_sq.sqrt() * (alpha_m + ng);
    let rhs_c = 4.0 * s.sup_sq.sqrt() * nf.powf(gamma / 2.0) * alpha_m;
    Ok(TermBoundReport {
        gamma,
        alpha_m,
        lhs_qp_pp: lhs1,
        lhs_qp_pp_free: lhs1_free,
        lhs_qq_pp: lhs2,
        lhs_qq_pq: lhs3,
        rhs_a,
        rhs_a_prime,
        rhs_b,
        rhs_b_prime,
        rhs_c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_closed_forms() {
        let t: Vec<f64> = (0..=10).map(|i| i as f64 * 0.1).collect();
        let zero = gronwall_envelope(0.3, &vec![0.0; 11], 1.0, 5, &t).unwrap();
        assert!(zero.values.iter().all(|v| (v - 0.3).abs() < 1e-15));
        let cst = gronwall_envelope(0.0, &vec![2.0; 11], 0.5, 4, &t).unwrap();
        for (ti, v) in t.iter().zip(&cst.values) {
            assert!((v - (2.0 * ti).exp_m1() * 0.5).abs() < 1e-12);
        }
        assert!(cst.values.windows(2).all(|w| w[0] <= w[1]));
        assert!(gronwall_envelope(0.0, &[1.0], -1.0, 4, &[0.0]).is_err());
        assert!(gronwall_envelope(0.0, &[1.0], 1.0, 0, &[0.0]).is_err());
    }

    #[test]
    fn free_limit_rate_peaks_at_two_thirds() {
        assert!((free_limit_rate(2.0 / 3.0) - 1.0 / 6.0).abs() < 1e-15);
        let best = (1..1000)
            .map(|i| 1.0 / 3.0 + i as f64 * (2.0 / 3.0) / 1000.0)
            .map(|g| (free_limit_rate(g), g))
            .fold((f64::NEG_INFINITY, 0.0), |a, b| if b.0 > a.0 { b } else { a });
        assert!((best.1 - 2.0 / 3.0).abs() < 1e-3);
    }

    #[test]
    fn split_kernel_recombines() {
        let v = [1.0, -0.5, 0.0, -0.5];
        let (p, n) = split_kernel(&v);
        for i in 0..4 {
            assert_eq!(p[i] - n[i], v[i]);
            assert!(p[i] >= 0.0 && n[i] >= 0.0);
        }
    }
}

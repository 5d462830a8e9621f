//! Commutator diagnostics for the semiclassically scaled flow, where the generator
//! carries a 1/ε prefactor with ε = 1/N and the interaction is scaled by 1/N.

use rayon::prelude::*;
use serde::Serialize;

use crate::counting::alpha_n_via_density;
use crate::error::{domain, Result};
use crate::estimates::{assumption_quantities, gronwall_envelope, rate_n, AssumptionParams};
use crate::fock::{binomial, build_hamiltonian, build_sector, slater_state, ManyBodyState, SpectralPropagator};
use crate::linalg::{c, loglog_slope, span_projector, trace_norm, CMat, C64};
use crate::meanfield::{integrate_orbitals, LatticeModel, OrbitalSet};

/// ‖pU - Up‖₁.
pub fn commutator_trace_norm(p: &CMat, u: &CMat) -> f64 {
    trace_norm(&(p * u - u * p))
}

/// diag(e^{2πikx/M}).
pub fn phase_matrix(m: usize, k: i64) -> CMat {
    CMat::from_fn(m, m, |x, y| {
        if x == y {
            C64::from_polar(1.0, 2.0 * std::f64::consts::PI * (k * x as i64) as f64 / m as f64)
        } else {
            c(0.0)
        }
    })
}

/// Forward difference (∇f)(x) = f(x+1) - f(x) with periodic wrap.
pub fn forward_gradient(m: usize) -> CMat {
    let mut d = CMat::zeros(m, m);
    for x in 0..m {
        d[(x, x)] -= c(1.0);
        d[(x, (x + 1) % m)] += c(1.0);
    }
    d
}

/// Hopping 1, no external field, β = 1 and ε = 1/N.
pub fn semiclassical_model(m: usize, n: usize, v: Vec<f64>) -> Result<LatticeModel> {
    if n == 0 {
        return Err(domain("need at least one particle"));
    }
    Ok(LatticeModel::new(m, 1.0, vec![0.0; m], v, 1.0)?.with_eps(1.0 / n as f64))
}

/// Lowest orbitals of the free hopping plus a cosine trap w(x) = a(1 - cos(2πx/M)),
/// a state that is not translation invariant and so moves once the trap is released.
pub fn trap_ground_orbitals(m: usize, n: usize, strength: f64) -> Result<OrbitalSet> {
    let w = (0..m).map(|x| strength * (1.0 - (2.0 * std::f64::consts::PI * x as f64 / m as f64).cos())).collect();
    let trap = LatticeModel::new(m, 1.0, w, vec![0.0; m], 1.0)?;
    crate::meanfield::lowest_orbitals(&trap, n)
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct SemiclassicalConfig {
    pub ks: Vec<i64>,
    pub t_final: f64,
    pub dt: f64,
    /// Integration steps between recorded samples.
    pub sample_every: usize,
    pub exchange: bool,
    /// Largest sector dimension for which the exact many-body flow is run alongside.
    pub coupled_cap: usize,
}

impl Default for SemiclassicalConfig {
    fn default() -> Self {
        Self { ks: vec![1], t_final: 1.0, dt: 1e-3, sample_every: 50, exchange: false, coupled_cap: 2000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemiclassicalDiagnostics {
    pub n: usize,
    pub m: usize,
    pub eps: f64,
    pub times: Vec<f64>,
    /// ‖[p, e^{ikx}]‖₁ per sample, one column per configured k.
    pub phase_norms: Vec<Vec<f64>>,
    pub gradient_norms: Vec<f64>,
    pub alpha_n: Option<Vec<f64>>,
    pub envelope: Option<Vec<f64>>,
    /// Least-squares slope of log(gradient norm) against t.
    pub gradient_growth_rate: f64,
}

pub fn static_diagnostics(p: &CMat, ks: &[i64]) -> (Vec<f64>, f64) {
    let m = p.nrows();
    let phase = ks.par_iter().map(|&k| commutator_trace_norm(p, &phase_matrix(m, k))).collect();
    (phase, commutator_trace_norm(p, &forward_gradient(m)))
}

pub fn semiclassical_run(model: &LatticeModel, orbitals: &OrbitalSet, cfg: &SemiclassicalConfig) -> Result<SemiclassicalDiagnostics> {
    if cfg.sample_every == 0 {
        return Err(domain("sample_every must be positive"));
    }
    let (m, n) = (orbitals.m(), orbitals.n());
    let traj = integrate_orbitals(orbitals, model, cfg.t_final, cfg.dt, cfg.exchange)?;
    let samples: Vec<&OrbitalSet> = traj.states.iter().step_by(cfg.sample_every).collect();
    let times: Vec<f64> = samples.iter().map(|o| o.t).collect();
    let stat: Vec<(Vec<f64>, f64)> = samples.iter().map(|o| static_diagnostics(&span_projector(&o.phi), &cfg.ks)).collect();
    let (phase_norms, gradient_norms): (Vec<_>, Vec<_>) = stat.into_iter().unzip();

    let (alpha_n, envelope) = if binomial(m, n) <= cfg.coupled_cap as u128 {
        let sector = build_sector(m, n)?;
        let h = build_hamiltonian(model, &sector)?;
        let prop = SpectralPropagator::new(&h);
        let psi0 = slater_state(orbitals, &sector)?;
        let coeffs = prop.coefficients(&psi0.amps);
        let mut alpha = Vec::with_capacity(samples.len());
        let mut rates = Vec::with_capacity(samples.len());
        for o in &samples {
            let psi = ManyBodyState::new(sector.clone(), prop.at(&coeffs, o.t / model.eps))?;
            alpha.push(alpha_n_via_density(&psi, o)?);
            let q = assumption_quantities(o, model, &AssumptionParams::new(1.0, vec![]));
            rates.push(rate_n(&q) / model.eps);
        }
        let env = gronwall_envelope(alpha[0], &rates, 1.0, n, &times)?;
        (Some(alpha), Some(env.values))
    } else {
        (None, None)
    };

    let logs: Vec<f64> = gradient_norms.iter().map(|g| g.max(1e-300).ln()).collect();
    let gradient_growth_rate = linear_slope(&times, &logs);
    Ok(SemiclassicalDiagnostics {
        n,
        m,
        eps: model.eps,
        times,
        phase_norms,
        gradient_norms,
        alpha_n,
        envelope,
        gradient_growth_rate,
    })
}

fn linear_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    if x.len() < 2 {
        return 0.0;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Fitted exponent of a diagnostic against N across runs, reported only.
pub fn diagnostic_exponent(runs: &[SemiclassicalDiagnostics], pick: impl Fn(&SemiclassicalDiagnostics) -> f64) -> f64 {
    let ns: Vec<f64> = runs.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = runs.iter().map(pick).collect();
    loglog_slope(&ns, &ys)
}

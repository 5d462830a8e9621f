//! Named experiments: coupled exact/mean-field runs, the free-flow comparison, N
//! sweeps and the verification suites, with CSV and JSON emission.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counting::{
    alpha_f, alpha_from_distribution, alpha_n_via_density, f_hat_tensor, outside_distribution, pnk_tensor, weight_m, weight_n,
    MATRIX_CAP,
};
use crate::density::{check_density_lemma, norm_distances, reduced_density, slater_density};
use crate::error::{domain, Error, Result};
use crate::estimates::{
    assumption_quantities, derivative_with_hamiltonian, fluctuation_variance, gronwall_envelope, rate_general, rate_n,
    term_bound_check, AssumptionParams,
};
use crate::fock::{
    binomial, build_hamiltonian, build_sector, slater_state, tensor_representation, ManyBodyState, SpectralPropagator, TENSOR_CAP,
};
use crate::linalg::{max_abs, random_orthonormal, CMat};
use crate::meanfield::{convolve, hartree_energy, integrate_orbitals, lowest_orbitals, plane_wave_orbitals, LatticeModel, OrbitalSet};
use crate::scaling3d::{closed_shells, fermi_ball, fermi_ball_kinetic, lieb_thirring_margin, scaling_constant_bound, BoxPotential};

/// Largest sector dimension a coupled run will diagonalise.
pub const SECTOR_CAP: usize = 5000;

/// Interaction kernel as a function of ring distance r = min(d, M - d).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    None,
    /// strength at r = 0 only.
    Contact { strength: f64 },
    /// strength · e^(-r/range)
    Exponential { strength: f64, range: f64 },
    /// strength · (1 + r)^(-s), bounded and long range.
    Power { strength: f64, s: f64 },
    /// values[r], zero beyond the table.
    Table { values: Vec<f64> },
}

impl PotentialSpec {
    pub fn kernel(&self, m: usize) -> Result<Vec<f64>> {
        let at = |r: usize| -> f64 {
            match self {
                PotentialSpec::None => 0.0,
                PotentialSpec::Contact { strength } => {
                    if r == 0 {
                        *strength
                    } else {
                        0.0
                    }
                }
                PotentialSpec::Exponential { strength, range } => strength * (-(r as f64) / range).exp(),
                PotentialSpec::Power { strength, s } => strength * (1.0 + r as f64).powf(-s),
                PotentialSpec::Table { values } => values.get(r).copied().unwrap_or(0.0),
            }
        };
        if let PotentialSpec::Exponential { range, .. } = self {
            if !(*range > 0.0) {
                return Err(Error::Config("potential.range must be positive".into()));
            }
        }
        Ok((0..m).map(|d| at(d.min(m - d))).collect())
    }
}

fn default_hopping() -> f64 {
    1.0
}

fn default_field() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(default = "default_hopping")]
    pub hopping: f64,
    pub beta: f64,
    /// Amplitude of the external field w(x) = field · cos(2πx/M), which breaks the
    /// translation degeneracy of the initial orbitals.
    #[serde(default = "default_field")]
    pub field: f64,
    pub potential: PotentialSpec,
}

impl ModelSpec {
    pub fn build(&self, m: usize) -> Result<LatticeModel> {
        let w = (0..m).map(|x| self.field * (2.0 * std::f64::consts::PI * x as f64 / m as f64).cos()).collect();
        LatticeModel::new(m, self.hopping, w, self.potential.kernel(m)?, self.beta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitalRecipe {
    /// Lowest eigenvectors of h⁰.
    Lowest,
    PlaneWaves,
    /// Seeded random orthonormal columns.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    /// Orbitals follow the Hartree flow of the interacting model.
    Coupled,
    /// Orbitals follow the free flow h⁰ while ψ feels the interaction.
    Free,
}

fn default_m_factor() -> usize {
    2
}
fn default_sample_every() -> usize {
    100
}
fn default_omega() -> Vec<usize> {
    vec![0]
}
fn default_orbitals() -> OrbitalRecipe {
    OrbitalRecipe::Lowest
}
fn default_mode() -> RunMode {
    RunMode::Coupled
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub n_values: Vec<usize>,
    /// M = m_factor · N unless `m` fixes it.
    #[serde(default = "default_m_factor")]
    pub m_factor: usize,
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default = "default_orbitals")]
    pub orbitals: OrbitalRecipe,
    #[serde(default = "default_mode")]
    pub mode: RunMode,
    pub t_final: f64,
    pub dt: f64,
    #[serde(default = "default_sample_every")]
    pub sample_every: usize,
    /// Exponent of the m^(γ) weight; when absent only α_n is recorded.
    #[serde(default)]
    pub gamma: Option<f64>,
    /// Near displacements for the split interaction bound.
    #[serde(default = "default_omega")]
    pub omega: Vec<usize>,
    #[serde(default)]
    pub delta2: f64,
    #[serde(default)]
    pub delta3: f64,
    #[serde(default)]
    pub delta4: f64,
    /// Record the three-term derivative decomposition when the tensor fits.
    #[serde(default)]
    pub three_terms: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl RunSpec {
    pub fn m_for(&self, n: usize) -> usize {
        self.m.unwrap_or(self.m_factor * n)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.into()));
        if self.n_values.iter().any(|&n| n == 0) {
            return bad("run.n_values entries must be positive");
        }
        if !(self.dt > 0.0) || !(self.t_final >= 0.0) {
            return bad("run.dt must be positive and run.t_final non-negative");
        }
        if self.sample_every == 0 {
            return bad("run.sample_every must be positive");
        }
        for &n in &self.n_values {
            let m = self.m_for(n);
            if m < n || m > 63 {
                return Err(Error::Config(format!("run: M = {m} invalid for N = {n}")));
            }
            if binomial(m, n) > SECTOR_CAP as u128 {
                return Err(Error::Size { what: "sector dimension", size: binomial(m, n).min(usize::MAX as u128) as usize, cap: SECTOR_CAP });
            }
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g <= 1.0) {
                return bad("run.gamma must lie in (0, 1]");
            }
        }
        Ok(())
    }

    fn params(&self) -> AssumptionParams {
        AssumptionParams {
            gamma: self.gamma.unwrap_or(1.0),
            omega: self.omega.clone(),
            delta2: self.delta2,
            delta3: self.delta3,
            delta4: self.delta4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub run: RunSpec,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.run.validate()?;
        Ok(cfg)
    }
}

pub fn initial_orbitals(recipe: OrbitalRecipe, model: &LatticeModel, n: usize, seed: u64) -> Result<OrbitalSet> {
    match recipe {
        OrbitalRecipe::Lowest => lowest_orbitals(model, n),
        OrbitalRecipe::PlaneWaves => plane_wave_orbitals(model.m, n),
        OrbitalRecipe::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            OrbitalSet::new(random_orthonormal(&mut rng, model.m, n))
        }
    }
}

/// One sample of a coupled run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecordRow {
    pub n: usize,
    pub m: usize,
    pub t: f64,
    pub alpha_n: f64,
    pub alpha_m: Option<f64>,
    pub trace_dist: f64,
    pub hs_dist: f64,
    pub op_dist: f64,
    pub hartree_energy: f64,
    pub exact_energy: f64,
    pub d0: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub d4: f64,
    pub d_thm: f64,
    pub rate_n: f64,
    pub envelope_n: f64,
    pub rate_m: Option<f64>,
    pub envelope_m: Option<f64>,
    pub t1: Option<f64>,
    pub t2: Option<f64>,
    pub t3: Option<f64>,
    pub fd_derivative: Option<f64>,
    pub gram_drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub n: usize,
    pub m: usize,
    pub rows: Vec<RecordRow>,
    pub max_energy_drift: f64,
}

impl RunRecord {
    /// min over samples of envelope_n - alpha_n.
    pub fn envelope_margin(&self) -> f64 {
        self.rows.iter().map(|r| r.envelope_n - r.alpha_n).fold(f64::INFINITY, f64::min)
    }

    pub fn final_alpha(&self) -> f64 {
        self.rows.last().map(|r| r.alpha_n).unwrap_or(0.0)
    }
}

/// Exact many-body flow from the Slater state of the orbitals.
struct ExactFlow {
    h: crate::fock::HermitianOperator,
    prop: SpectralPropagator,
    coeffs: crate::linalg::CVec,
    sector: std::sync::Arc<crate::fock::SectorBasis>,
}

impl ExactFlow {
    fn new(model: &LatticeModel, orbitals: &OrbitalSet) -> Result<Self> {
        let sector = build_sector(model.m, orbitals.n())?;
        if sector.dim() > SECTOR_CAP {
            return Err(Error::Size { what: "sector dimension", size: sector.dim(), cap: SECTOR_CAP });
        }
        let h = build_hamiltonian(model, &sector)?;
        let prop = SpectralPropagator::new(&h);
        let coeffs = prop.coefficients(&slater_state(orbitals, &sector)?.amps);
        Ok(Self { h, prop, coeffs, sector })
    }

    fn at(&self, t: f64) -> Result<ManyBodyState> {
        ManyBodyState::new(self.sector.clone(), self.prop.at(&self.coeffs, t))
    }
}

fn cumulative_trapezoid(t: &[f64], y: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; t.len()];
    for i in 1..t.len() {
        out[i] = out[i - 1] + 0.5 * (y[i] + y[i - 1]) * (t[i] - t[i - 1]);
    }
    out
}

/// Exact ψ against the Hartree orbitals from ψ⁰ = Slater(φ⁰).
pub fn run_coupled(cfg: &RunConfig, n: usize) -> Result<RunRecord> {
    let spec = &cfg.run;
    spec.validate()?;
    let m = spec.m_for(n);
    let model = cfg.model.build(m)?;
    let orb0 = initial_orbitals(spec.orbitals, &model, n, spec.seed)?;
    let traj = integrate_orbitals(&orb0, &model, spec.t_final, spec.dt, false)?;
    let flow = ExactFlow::new(&model, &orb0)?;
    let params = spec.params();

    // Rates on every integration step so the envelope integral is fine-grained.
    let times: Vec<f64> = traj.states.iter().map(|o| o.t).collect();
    let quantities: Vec<_> = traj.states.iter().map(|o| assumption_quantities(o, &model, &params)).collect();
    let wn = weight_n(n)?;
    let wm = spec.gamma.map(|g| weight_m(n, g)).transpose()?;
    // α(0) vanishes up to rounding for Slater data; the envelope starts from the measured value.
    let dist0 = outside_distribution(&flow.at(0.0)?, &orb0)?;
    let c_n: Vec<f64> = quantities.iter().map(rate_n).collect();
    let env_n = gronwall_envelope(alpha_from_distribution(&dist0, &wn), &c_n, 1.0, n, &times)?;
    let env_m = match &wm {
        Some(f) => {
            let c_m: Vec<f64> = quantities.iter().map(|q| rate_general(q, &params, n)).collect();
            let a0 = alpha_from_distribution(&dist0, f);
            Some((c_m.clone(), gronwall_envelope(a0, &c_m, params.rate().max(0.0), n, &times)?))
        }
        None => None,
    };
    let tensor_ok = spec.three_terms && n >= 2 && (m as u128).pow(n as u32) <= TENSOR_CAP as u128;

    let mut rows = Vec::new();
    for (i, orb) in traj.states.iter().enumerate().step_by(spec.sample_every) {
        let psi = flow.at(orb.t)?;
        let dist = outside_distribution(&psi, orb)?;
        let d = norm_distances(&reduced_density(&psi), &slater_density(orb))?;
        let q = &quantities[i];
        let (t1, t2, t3, fd) = if tensor_ok {
            let dec = derivative_with_hamiltonian(&psi, orb, &model, &flow.h, spec.dt)?;
            (Some(dec.t1_qp_pp), Some(dec.t2_qq_pp), Some(dec.t3_qq_pq), Some(dec.fd_reference))
        } else {
            (None, None, None, None)
        };
        rows.push(RecordRow {
            n,
            m,
            t: orb.t,
            alpha_n: alpha_from_distribution(&dist, &wn),
            alpha_m: wm.as_ref().map(|f| alpha_from_distribution(&dist, f)),
            trace_dist: d.trace,
            hs_dist: d.hs,
            op_dist: d.op,
            hartree_energy: hartree_energy(orb, &model, true),
            exact_energy: flow.h.expectation(&psi),
            d0: q.d0,
            d1: q.d1,
            d2: q.d2,
            d3: q.d3,
            d4: q.d4,
            d_thm: q.d_thm,
            rate_n: c_n[i],
            envelope_n: env_n.values[i],
            rate_m: env_m.as_ref().map(|(c, _)| c[i]),
            envelope_m: env_m.as_ref().map(|(_, e)| e.values[i]),
            t1,
            t2,
            t3,
            fd_derivative: fd,
            gram_drift: traj.gram_drift[i],
        });
    }
    Ok(RunRecord { n, m, rows, max_energy_drift: traj.max_energy_drift() })
}

/// One sample of the free-flow comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FreeLimitRow {
    pub n: usize,
    pub m: usize,
    pub t: f64,
    pub alpha_m: f64,
    pub growth: f64,
    /// Sum of the three right sides bounding |dα/dt| along the free orbitals.
    pub budget_rate: f64,
    /// ∫₀ᵗ budget_rate.
    pub budget: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FreeLimitRecord {
    pub gamma: f64,
    pub rate_delta: f64,
    pub rows: Vec<FreeLimitRow>,
}

impl FreeLimitRecord {
    /// min over samples of budget - |growth|.
    pub fn budget_margin(&self) -> f64 {
        self.rows.iter().map(|r| r.budget - r.growth.abs()).fold(f64::INFINITY, f64::min)
    }
}

/// Exact ψ of the interacting model against orbitals evolved by h⁰ alone. The
/// derivative bounds are evaluated on the tensor form at every integration step,
/// so the tensor has to fit.
pub fn run_free_limit(cfg: &RunConfig, n: usize) -> Result<FreeLimitRecord> {
    let spec = &cfg.run;
    spec.validate()?;
    let gamma = spec.gamma.ok_or_else(|| Error::Config("missing field `gamma` in [run] for the free-flow comparison".into()))?;
    let m = spec.m_for(n);
    if n < 2 || (m as u128).pow(n as u32) > TENSOR_CAP as u128 {
        return Err(Error::Size { what: "tensor length", size: m.saturating_pow(n as u32), cap: TENSOR_CAP });
    }
    let model = cfg.model.build(m)?;
    let orb0 = initial_orbitals(spec.orbitals, &model, n, spec.seed)?;
    let traj = integrate_orbitals(&orb0, &model.without_interaction(), spec.t_final, spec.dt, false)?;
    let flow = ExactFlow::new(&model, &orb0)?;

    let mut times = Vec::new();
    let mut alphas = Vec::new();
    let mut rates = Vec::new();
    for orb in &traj.states {
        let psi = flow.at(orb.t)?;
        let t = tensor_representation(&psi)?;
        let rep = term_bound_check(&t, orb, &model, gamma, &spec.omega)?;
        times.push(orb.t);
        alphas.push(rep.alpha_m);
        rates.push(rep.free_budget());
    }
    let budget = cumulative_trapezoid(&times, &rates);
    let rows = (0..times.len())
        .step_by(spec.sample_every)
        .map(|i| FreeLimitRow {
            n,
            m,
            t: times[i],
            alpha_m: alphas[i],
            growth: alphas[i] - alphas[0],
            budget_rate: rates[i],
            budget: budget[i],
        })
        .collect();
    Ok(FreeLimitRecord { gamma, rate_delta: crate::estimates::free_limit_rate(gamma), rows })
}

/// Runs every N of the config in parallel; records come back in config order.
pub fn sweep(cfg: &RunConfig) -> Result<Vec<RunRecord>> {
    cfg.run.validate()?;
    cfg.run.n_values.par_iter().map(|&n| run_coupled(cfg, n)).collect()
}

pub fn sweep_free(cfg: &RunConfig) -> Result<Vec<FreeLimitRecord>> {
    cfg.run.validate()?;
    cfg.run.n_values.par_iter().map(|&n| run_free_limit(cfg, n)).collect()
}

/// α_n at the last sample for each record, and whether it never increases with N.
pub fn final_alpha_monotone(records: &[RunRecord]) -> (Vec<(usize, f64)>, bool) {
    let pts: Vec<(usize, f64)> = records.iter().map(|r| (r.n, r.final_alpha())).collect();
    let ok = pts.windows(2).all(|w| w[0].0 >= w[1].0 || w[1].1 <= w[0].1);
    (pts, ok)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub cases: usize,
    /// Smallest rhs - lhs (or minus the largest error for identities).
    pub worst_margin: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl SuiteResult {
    fn new(name: &str, size: Option<(usize, usize)>, cases: usize, worst_margin: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            n: size.map(|s| s.0),
            m: size.map(|s| s.1),
            cases,
            worst_margin,
            tolerance,
            passed: worst_margin >= -tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub results: Vec<SuiteResult>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub seed: u64,
    /// (N, M) pairs.
    pub sizes: Vec<(usize, usize)>,
    pub cases: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { seed: 7, sizes: vec![(2, 4), (2, 6), (3, 5), (3, 6), (4, 8)], cases: 50 }
    }
}

fn random_model(rng: &mut ChaCha8Rng, m: usize, nonnegative: bool) -> Result<LatticeModel> {
    let w = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut v = vec![0.0; m];
    for d in 0..=m / 2 {
        let x = if nonnegative { rng.gen_range(0.0..1.0) } else { rng.gen_range(-1.0..2.0) };
        v[d] = x;
        v[(m - d) % m] = x;
    }
    LatticeModel::new(m, 1.0, w, v, 0.7)
}

fn suites_for_size(seed: u64, n: usize, m: usize, cases: usize) -> Result<Vec<SuiteResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add((n * 100 + m) as u64));
    let size = Some((n, m));
    let sector = build_sector(m, n)?;
    let mut out = Vec::new();

    let (mut lemma, mut dual, mut variance) = (f64::INFINITY, 0.0f64, f64::INFINITY);
    for _ in 0..cases {
        let orb = OrbitalSet::new(random_orthonormal(&mut rng, m, n))?;
        let psi = ManyBodyState::random(sector.clone(), &mut rng);
        lemma = lemma.min(check_density_lemma(&psi, &orb)?.worst_margin());
        let a1 = alpha_n_via_density(&psi, &orb)?;
        let a2 = alpha_f(&psi, &orb, &weight_n(n)?)?;
        dual = dual.max((a1 - a2).abs());
        let model = random_model(&mut rng, m, false)?;
        let v2: Vec<f64> = model.v.iter().map(|x| x * x).collect();
        let upper = convolve(&v2, &orb.density());
        for (y, u) in upper.iter().enumerate() {
            let var = fluctuation_variance(&orb, &model, y);
            variance = variance.min(var).min(u - var);
        }
    }
    out.push(SuiteResult::new("density_lemma", size, cases, lemma, 1e-10));
    out.push(SuiteResult::new("alpha_dual_path", size, cases, -dual, 1e-12));
    out.push(SuiteResult::new("fluctuation_variance_bounds", size, cases, variance, 1e-10));

    if (m as u128).pow(n as u32) <= MATRIX_CAP as u128 {
        let orb = OrbitalSet::new(random_orthonormal(&mut rng, m, n))?;
        let p: Vec<CMat> = (0..=n).map(|k| pnk_tensor(&orb, k)).collect::<Result<_>>()?;
        let dim = p[0].nrows();
        let mut err = max_abs(&(p.iter().fold(CMat::zeros(dim, dim), |a, b| a + b) - CMat::identity(dim, dim)));
        for k in 0..=n {
            for l in 0..=n {
                let prod = &p[k] * &p[l];
                let want = if k == l { p[k].clone() } else { CMat::zeros(dim, dim) };
                err = err.max(max_abs(&(prod - want)));
            }
        }
        let f = weight_m(n, 0.5)?;
        let fh = f_hat_tensor(&f, 0, &orb)?;
        err = err.max(max_abs(&(&fh * &fh - f_hat_tensor(&f.squared(), 0, &orb)?)));
        out.push(SuiteResult::new("projector_algebra", size, 1, -err, 1e-12));
    }

    if n >= 2 && (m as u128).pow(n as u32) <= TENSOR_CAP as u128 {
        let dt = 1e-3;
        let (mut deriv, mut bounds) = (f64::INFINITY, f64::INFINITY);
        let k = cases.min(10);
        for _ in 0..k {
            let orb = OrbitalSet::new(random_orthonormal(&mut rng, m, n))?;
            let psi = ManyBodyState::random(sector.clone(), &mut rng);
            let model = random_model(&mut rng, m, false)?;
            let h = build_hamiltonian(&model, &sector)?;
            let dec = derivative_with_hamiltonian(&psi, &orb, &model, &h, dt)?;
            deriv = deriv.min(1e-4 * (1.0 + dec.fd_reference.abs()) - dec.mismatch());
            let pos = random_model(&mut rng, m, true)?;
            let t = tensor_representation(&psi)?;
            for gamma in [0.5, 1.0] {
                bounds = bounds.min(term_bound_check(&t, &orb, &pos, gamma, &[0])?.worst_margin());
            }
        }
        out.push(SuiteResult::new("derivative_identity", size, k, deriv, 0.0));
        out.push(SuiteResult::new("term_bounds", size, k, bounds, 1e-9));
    }

    let model = random_model(&mut rng, m, false)?;
    let orb = lowest_orbitals(&model, n)?;
    let traj = integrate_orbitals(&orb, &model, 1.0, 1e-3, false)?;
    let drift = traj.max_gram_drift().max(traj.max_energy_drift());
    out.push(SuiteResult::new("flow_quality", size, 1, 1e-8 - drift, 0.0));
    Ok(out)
}

fn scaling_suite() -> Result<Vec<SuiteResult>> {
    let shells = closed_shells(7, 2000);
    let lt = shells
        .iter()
        .map(|&n| {
            let (l, r) = lieb_thirring_margin(&fermi_ball(n, 1.0));
            (r - l) / r
        })
        .fold(f64::INFINITY, f64::min);
    let mut out = vec![SuiteResult::new("kinetic_inequality", None, shells.len(), lt, 0.0)];
    let big: Vec<usize> = shells.iter().copied().filter(|&n| n >= 100).collect();
    let ns: Vec<f64> = big.iter().map(|&n| n as f64).collect();
    for s in [0.5, 1.0] {
        let pot = BoxPotential::new(s)?;
        let sup: Vec<f64> = big.iter().map(|&n| pot.centre(n, 1.0)).collect();
        let slope = crate::linalg::loglog_slope(&ns, &sup);
        out.push(SuiteResult::new(&format!("mean_field_exponent_s{s}"), None, big.len(), 0.05 - (slope - (1.0 - s / 3.0)).abs(), 0.0));
        let mut margin = f64::INFINITY;
        for (&n, v) in big.iter().zip(&sup) {
            let a = fermi_ball_kinetic(&fermi_ball(n, 1.0)) / n as f64;
            margin = margin.min(scaling_constant_bound(s, a)? - v * (n as f64).powf(s / 3.0 - 1.0));
        }
        out.push(SuiteResult::new(&format!("mean_field_constant_s{s}"), None, big.len(), margin, 0.0));
    }
    Ok(out)
}

/// Every lemma and property suite for each (N, M) size, in size order, followed by
/// the box scaling suite. An empty size list gives an empty, passing report.
pub fn verify_all(opts: &VerifyOptions) -> Result<SuiteReport> {
    if opts.sizes.is_empty() {
        return Ok(SuiteReport { seed: opts.seed, results: Vec::new() });
    }
    for &(n, m) in &opts.sizes {
        if n == 0 || n > m || m > 63 {
            return Err(domain(format!("invalid size N = {n}, M = {m}")));
        }
    }
    let per_size: Vec<Vec<SuiteResult>> = opts
        .sizes
        .par_iter()
        .map(|&(n, m)| suites_for_size(opts.seed, n, m, opts.cases))
        .collect::<Result<_>>()?;
    let mut results: Vec<SuiteResult> = per_size.into_iter().flatten().collect();
    results.extend(scaling_suite()?);
    Ok(SuiteReport { seed: opts.seed, results })
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(f, value).map_err(|e| Error::Io(e.into()))?;
    Ok(())
}

//! Command-line front end. Exit codes: 0 success, 1 a suite or bound failed,
//! 2 a configuration or usage error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{
    final_alpha_monotone, run_coupled, run_free_limit, sweep, sweep_free, verify_all, write_csv, write_json, ModelSpec, PotentialSpec,
    RunConfig, RunMode, RunSpec, VerifyOptions,
};
use crate::linalg::{loglog_slope, serial_backend};
use crate::scaling3d::{closed_shells, scaling_sweep};
use crate::semiclassical::{diagnostic_exponent, semiclassical_model, semiclassical_run, trap_ground_orbitals, SemiclassicalConfig};

/// Margin below which a bound counts as violated.
const TOLERANCE: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(name = "fermi-mf", version, about = "Mean-field convergence experiments for lattice fermions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; nothing is written elsewhere.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, global = true, env = "FERMI_MF_SEED")]
    pub seed: Option<u64>,
    #[arg(long, global = true, env = "FERMI_MF_THREADS")]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every lemma and property suite.
    Verify {
        /// Random cases per suite and size.
        #[arg(long)]
        cases: Option<usize>,
    },
    /// Coupled (or free-flow) runs for each N of the config, one after another.
    Run,
    /// The same runs in parallel with a per-N summary.
    Sweep,
    /// Plane-wave Fermi-ball scaling checks in a 3D box.
    Scaling,
    /// Commutator diagnostics of the semiclassically scaled flow.
    Semiclassical,
}

fn default_s_values() -> Vec<f64> {
    vec![0.5, 1.0]
}
fn default_density() -> f64 {
    1.0
}
fn default_n_min() -> usize {
    7
}
fn default_n_max() -> usize {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingSpec {
    #[serde(default = "default_s_values")]
    pub s_values: Vec<f64>,
    #[serde(default = "default_density")]
    pub density: f64,
    #[serde(default = "default_n_min")]
    pub n_min: usize,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
}

impl Default for ScalingSpec {
    fn default() -> Self {
        Self { s_values: default_s_values(), density: 1.0, n_min: 7, n_max: 10_000 }
    }
}

fn default_sc_n() -> Vec<usize> {
    vec![4, 8, 16]
}
fn default_filling() -> f64 {
    0.5
}
fn default_ks() -> Vec<i64> {
    vec![1]
}
fn default_sc_t() -> f64 {
    1.0
}
fn default_sc_dt() -> f64 {
    2e-4
}
fn default_sc_every() -> usize {
    250
}
fn default_trap() -> f64 {
    0.5
}
fn default_sc_potential() -> PotentialSpec {
    PotentialSpec::Exponential { strength: 1.0, range: 1.0 }
}
fn default_coupled_cap() -> usize {
    2000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemiclassicalSpec {
    #[serde(default = "default_sc_n")]
    pub n_values: Vec<usize>,
    /// N/M, fixed across the sweep.
    #[serde(default = "default_filling")]
    pub filling: f64,
    #[serde(default = "default_ks")]
    pub ks: Vec<i64>,
    #[serde(default = "default_sc_t")]
    pub t_final: f64,
    #[serde(default = "default_sc_dt")]
    pub dt: f64,
    #[serde(default = "default_sc_every")]
    pub sample_every: usize,
    /// Amplitude of the cosine trap holding the initial orbitals.
    #[serde(default = "default_trap")]
    pub trap: f64,
    #[serde(default = "default_sc_potential")]
    pub potential: PotentialSpec,
    #[serde(default)]
    pub exchange: bool,
    #[serde(default = "default_coupled_cap")]
    pub coupled_cap: usize,
}

impl Default for SemiclassicalSpec {
    fn default() -> Self {
        toml::from_str("").expect("every field has a default")
    }
}

/// Whole configuration file; each subcommand reads the sections it needs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub model: Option<ModelSpec>,
    pub run: Option<RunSpec>,
    pub scaling: Option<ScalingSpec>,
    pub semiclassical: Option<SemiclassicalSpec>,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn run_config(&self) -> Result<RunConfig> {
        let missing = |f: &str| Error::Config(format!("missing field `{f}`"));
        let cfg = RunConfig {
            model: self.model.clone().ok_or_else(|| missing("model"))?,
            run: self.run.clone().ok_or_else(|| missing("run"))?,
        };
        cfg.run.validate()?;
        Ok(cfg)
    }
}

struct Ctx {
    out: PathBuf,
    quiet: bool,
}

impl Ctx {
    fn say(&self, line: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", line.as_ref());
        }
    }
}

fn load_config(cli: &Cli, required: bool) -> Result<FileConfig> {
    match &cli.config {
        Some(p) => FileConfig::load(p),
        None if required => Err(Error::Config("missing field `--config`: this subcommand needs a configuration file".into())),
        None => Ok(FileConfig::default()),
    }
}

/// Parses the arguments, runs the subcommand and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(&cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e @ (Error::Config(_) | Error::Size { .. } | Error::Domain(_))) => {
            eprintln!("error: {e}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(cli: &Cli) -> Result<bool> {
    serial_backend();
    if let Some(k) = cli.threads {
        // A second initialisation in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    }
    let ctx = Ctx { out: cli.out.clone(), quiet: cli.quiet };
    match &cli.command {
        Command::Verify { cases } => {
            // A config is optional here; when given it must at least parse.
            load_config(cli, false)?;
            let mut opts = VerifyOptions::default();
            if let Some(s) = cli.seed {
                opts.seed = s;
            }
            if let Some(c) = cases {
                opts.cases = *c;
            }
            cmd_verify(&ctx, &opts)
        }
        Command::Run | Command::Sweep => {
            let mut cfg = load_config(cli, true)?.run_config()?;
            if let Some(s) = cli.seed {
                cfg.run.seed = s;
            }
            let parallel = matches!(cli.command, Command::Sweep);
            cmd_runs(&ctx, &cfg, parallel)
        }
        Command::Scaling => {
            let spec = load_config(cli, false)?.scaling.unwrap_or_default();
            cmd_scaling(&ctx, &spec)
        }
        Command::Semiclassical => {
            let spec = load_config(cli, false)?.semiclassical.unwrap_or_default();
            cmd_semiclassical(&ctx, &spec)
        }
    }
}

fn prepare_out(ctx: &Ctx) -> Result<()> {
    fs::create_dir_all(&ctx.out)?;
    Ok(())
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn cmd_verify(ctx: &Ctx, opts: &VerifyOptions) -> Result<bool> {
    let report = verify_all(opts)?;
    prepare_out(ctx)?;
    write_json(&ctx.out.join("verify.json"), &report)?;
    write_csv(&ctx.out.join("verify.csv"), &report.results)?;
    ctx.say(format!("verify seed {}", report.seed));
    for r in &report.results {
        let size = match (r.n, r.m) {
            (Some(n), Some(m)) => format!("N={n} M={m}"),
            _ => "box".into(),
        };
        ctx.say(format!("{} {:<30} {:<10} worst margin {:+.3e} (tol {:.0e})", verdict(r.passed), r.name, size, r.worst_margin, r.tolerance));
    }
    ctx.say(format!("{}: {} suites", verdict(report.passed()), report.results.len()));
    Ok(report.passed())
}

#[derive(Serialize)]
struct SweepSummary {
    final_alpha: Vec<(usize, f64)>,
    monotone_in_n: bool,
    envelope_margins: Vec<(usize, f64)>,
    max_energy_drift: f64,
}

#[derive(Serialize)]
struct FreeSummary {
    gamma: f64,
    rate_delta: f64,
    budget_margins: Vec<(usize, f64)>,
}

fn cmd_runs(ctx: &Ctx, cfg: &RunConfig, parallel: bool) -> Result<bool> {
    prepare_out(ctx)?;
    let tag = if parallel { "sweep" } else { "run" };
    match cfg.run.mode {
        RunMode::Coupled => {
            let records = if parallel {
                sweep(cfg)?
            } else {
                cfg.run.n_values.iter().map(|&n| run_coupled(cfg, n)).collect::<Result<Vec<_>>>()?
            };
            let rows: Vec<_> = records.iter().flat_map(|r| r.rows.iter().cloned()).collect();
            write_csv(&ctx.out.join(format!("{tag}.csv")), &rows)?;
            let (final_alpha, monotone) = final_alpha_monotone(&records);
            let summary = SweepSummary {
                final_alpha,
                monotone_in_n: monotone,
                envelope_margins: records.iter().map(|r| (r.n, r.envelope_margin())).collect(),
                max_energy_drift: records.iter().map(|r| r.max_energy_drift).fold(0.0, f64::max),
            };
            write_json(&ctx.out.join(format!("{tag}_summary.json")), &summary)?;
            let mut ok = true;
            for (r, (n, a)) in records.iter().zip(&summary.final_alpha) {
                let pass = r.envelope_margin() >= -TOLERANCE;
                ok &= pass;
                ctx.say(format!("{} N={n} M={} alpha_n(t_final)={a:.4e} envelope margin {:+.3e}", verdict(pass), r.m, r.envelope_margin()));
            }
            ctx.say(format!("alpha_n(t_final) non-increasing in N: {}", summary.monotone_in_n));
            Ok(ok)
        }
        RunMode::Free => {
            let records = if parallel {
                sweep_free(cfg)?
            } else {
                cfg.run.n_values.iter().map(|&n| run_free_limit(cfg, n)).collect::<Result<Vec<_>>>()?
            };
            let rows: Vec<_> = records.iter().flat_map(|r| r.rows.iter().cloned()).collect();
            write_csv(&ctx.out.join(format!("{tag}_free.csv")), &rows)?;
            let summary = FreeSummary {
                gamma: records.first().map(|r| r.gamma).unwrap_or(f64::NAN),
                rate_delta: records.first().map(|r| r.rate_delta).unwrap_or(f64::NAN),
                budget_margins: cfg.run.n_values.iter().copied().zip(records.iter().map(|r| r.budget_margin())).collect(),
            };
            write_json(&ctx.out.join(format!("{tag}_free_summary.json")), &summary)?;
            let mut ok = true;
            for (n, m) in &summary.budget_margins {
                let pass = *m >= -TOLERANCE;
                ok &= pass;
                ctx.say(format!("{} N={n} free-flow growth within budget, margin {m:+.3e}", verdict(pass)));
            }
            Ok(ok)
        }
    }
}

fn cmd_scaling(ctx: &Ctx, spec: &ScalingSpec) -> Result<bool> {
    prepare_out(ctx)?;
    let shells = closed_shells(spec.n_min.max(7), spec.n_max);
    let mut rows = Vec::new();
    let mut ok = true;
    for &s in &spec.s_values {
        let part = scaling_sweep(&shells, s, spec.density)?;
        for kind in ["lieb_thirring", "mean_field_scaled"] {
            let worst = part.iter().filter(|r| r.quantity == kind).map(|r| r.margin).fold(f64::INFINITY, f64::min);
            ok &= worst >= 0.0;
            ctx.say(format!("{} s={s} {kind}: worst margin {worst:+.4e}", verdict(worst >= 0.0)));
        }
        let fit = |kind: &str| {
            let pts: Vec<(f64, f64)> = part.iter().filter(|r| r.quantity == kind && r.n >= 100).map(|r| (r.n as f64, r.value)).collect();
            let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
            if x.len() >= 2 {
                loglog_slope(&x, &y)
            } else {
                f64::NAN
            }
        };
        ctx.say(format!(
            "   fitted exponents vs N: kinetic {:.4}, exchange sum {:.4}, scaled mean field {:.4} (0 expected)",
            fit("kinetic"),
            fit("exchange_sum"),
            fit("mean_field_scaled")
        ));
        rows.extend(part.into_iter().map(|r| (s, r)));
    }
    #[derive(Serialize)]
    struct Row {
        s: f64,
        n: usize,
        quantity: String,
        value: f64,
        bound: f64,
        margin: f64,
    }
    let rows: Vec<Row> = rows
        .into_iter()
        .map(|(s, r)| Row { s, n: r.n, quantity: r.quantity, value: r.value, bound: r.bound, margin: r.margin })
        .collect();
    write_csv(&ctx.out.join("scaling.csv"), &rows)?;
    Ok(ok)
}

fn cmd_semiclassical(ctx: &Ctx, spec: &SemiclassicalSpec) -> Result<bool> {
    if !(spec.filling > 0.0 && spec.filling <= 1.0) {
        return Err(Error::Config("semiclassical.filling must lie in (0, 1]".into()));
    }
    prepare_out(ctx)?;
    let cfg = SemiclassicalConfig {
        ks: spec.ks.clone(),
        t_final: spec.t_final,
        dt: spec.dt,
        sample_every: spec.sample_every,
        exchange: spec.exchange,
        coupled_cap: spec.coupled_cap,
    };
    #[derive(Serialize)]
    struct Row {
        n: usize,
        m: usize,
        t: f64,
        diagnostic: String,
        value: f64,
    }
    let mut rows = Vec::new();
    let mut runs = Vec::new();
    let mut ok = true;
    for &n in &spec.n_values {
        let m = (n as f64 / spec.filling).round() as usize;
        let model = semiclassical_model(m, n, spec.potential.kernel(m)?)?;
        let orb = trap_ground_orbitals(m, n, spec.trap)?;
        let d = semiclassical_run(&model, &orb, &cfg)?;
        for (i, t) in d.times.iter().enumerate() {
            for (k, v) in cfg.ks.iter().zip(&d.phase_norms[i]) {
                rows.push(Row { n, m, t: *t, diagnostic: format!("phase_k{k}"), value: *v });
            }
            rows.push(Row { n, m, t: *t, diagnostic: "gradient".into(), value: d.gradient_norms[i] });
            if let (Some(a), Some(e)) = (&d.alpha_n, &d.envelope) {
                rows.push(Row { n, m, t: *t, diagnostic: "alpha_n".into(), value: a[i] });
                rows.push(Row { n, m, t: *t, diagnostic: "envelope".into(), value: e[i] });
                ok &= a[i] <= e[i] + TOLERANCE;
            }
        }
        ctx.say(format!("N={n} M={m}: gradient diagnostic growth rate {:+.4e}", d.gradient_growth_rate));
        runs.push(d);
    }
    write_csv(&ctx.out.join("semiclassical.csv"), &rows)?;
    if runs.len() >= 2 {
        let e = diagnostic_exponent(&runs, |r| r.gradient_norms.last().copied().unwrap_or(f64::NAN));
        ctx.say(format!("fitted exponent of the final gradient diagnostic vs N: {e:.4} (reported, not asserted)"));
    }
    write_json(&ctx.out.join("semiclassical.json"), &runs)?;
    Ok(ok)
}

//! Plane-wave Fermi balls in a cubic box and the three-dimensional scaling checks
//! built on them: kinetic energy, the kinetic energy inequality, the sup of the
//! direct mean-field term for |x|^-s, and the exchange sum.

use std::f64::consts::{FRAC_PI_4, PI};

use quadrature::double_exponential::integrate;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::error::{domain, Result};

const QUAD_TOL: f64 = 1e-10;

/// Closed-shell filling of ℤ³ momenta in a box of side L at density c.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FermiBall {
    pub n: usize,
    pub l: f64,
    pub c: f64,
    pub momenta: Vec<[i32; 3]>,
}

impl FermiBall {
    pub fn density(&self) -> f64 {
        self.n as f64 / self.l.powi(3)
    }

    /// Same momenta in a box of a different side.
    pub fn with_side(&self, l: f64) -> FermiBall {
        FermiBall { n: self.n, l, c: self.n as f64 / l.powi(3), momenta: self.momenta.clone() }
    }

    /// Largest |k|² in the filling.
    pub fn fermi_shell(&self) -> i64 {
        self.momenta.iter().map(|k| norm_sq(*k)).max().unwrap_or(0)
    }
}

fn norm_sq(k: [i32; 3]) -> i64 {
    k.iter().map(|&x| (x as i64) * (x as i64)).sum()
}

/// Momenta sorted by |k|² with all vectors of |k|² ≤ r² present.
fn shells_up_to(r: i32) -> Vec<[i32; 3]> {
    let mut ks = Vec::new();
    for x in -r..=r {
        for y in -r..=r {
            for z in -r..=r {
                let k = [x, y, z];
                if norm_sq(k) <= (r as i64) * (r as i64) {
                    ks.push(k);
                }
            }
        }
    }
    ks.sort_by_key(|&k| (norm_sq(k), k));
    ks
}

/// Smallest closed-shell filling with at least `n_target` particles. A target of
/// zero is treated as one.
pub fn fermi_ball(n_target: usize, c: f64) -> FermiBall {
    let mut r = ((3.0 * n_target.max(1) as f64 / (4.0 * PI)).cbrt().ceil() as i32) + 1;
    loop {
        let ks = shells_up_to(r);
        let mut end = 0;
        while end < ks.len() {
            let shell = norm_sq(ks[end]);
            while end < ks.len() && norm_sq(ks[end]) == shell {
                end += 1;
            }
            if end >= n_target {
                let n = end;
                let mut momenta = ks;
                momenta.truncate(n);
                let l = (n as f64 / c).cbrt();
                return FermiBall { n, l, c, momenta };
            }
        }
        r *= 2;
    }
}

/// All closed-shell particle numbers in [lo, hi].
pub fn closed_shells(lo: usize, hi: usize) -> Vec<usize> {
    let r = ((3.0 * hi.max(1) as f64 / (4.0 * PI)).cbrt().ceil() as i32) + 2;
    let ks = shells_up_to(r);
    let mut out = Vec::new();
    let mut end = 0;
    while end < ks.len() {
        let shell = norm_sq(ks[end]);
        while end < ks.len() && norm_sq(ks[end]) == shell {
            end += 1;
        }
        if end > hi {
            break;
        }
        if end >= lo {
            out.push(end);
        }
    }
    out
}

/// Σ_j (2π k_j / L)².
pub fn fermi_ball_kinetic(ball: &FermiBall) -> f64 {
    let q = 2.0 * PI / ball.l;
    ball.momenta.iter().map(|&k| norm_sq(k) as f64).sum::<f64>() * q * q
}

pub const LT_CONSTANT: f64 = 5.0 / 9.0;

/// (5/9)(2π)^(-2/3).
pub fn lieb_thirring_constant() -> f64 {
    LT_CONSTANT * (2.0 * PI).powf(-2.0 / 3.0)
}

/// (∫ρ₀^(5/3), constant · E_kin) for the constant-density box.
pub fn lieb_thirring_margin(ball: &FermiBall) -> (f64, f64) {
    let lhs = ball.density().powf(5.0 / 3.0) * ball.l.powi(3);
    (lhs, lieb_thirring_constant() * fermi_ball_kinetic(ball))
}

/// ∫_Ω ρ₀ and its kinetic-energy bound for a sub-box of the given side.
pub fn subvolume_margin(ball: &FermiBall, side: f64) -> Result<(f64, f64)> {
    if !(side > 0.0 && side <= ball.l) {
        return Err(domain(format!("sub-box side {side} outside (0, {}]", ball.l)));
    }
    let vol = side.powi(3);
    let bound = lieb_thirring_constant().powf(0.6) * vol.powf(0.4) * fermi_ball_kinetic(ball).powf(0.6);
    Ok((ball.density() * vol, bound))
}

/// Surface measure of the sphere of radius r inside [-1, 1]³.
pub fn cube_radial_mass(r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    if r <= 1.0 {
        return 4.0 * PI * r * r;
    }
    if r >= 3f64.sqrt() {
        return 0.0;
    }
    // One of 16 wedges: azimuth in [0, π/4], polar cosine u in [0, 1/r], with
    // the x face excluding u < sqrt(1 - 1/(r cos φ)²).
    let inv = 1.0 / r;
    let cut = |phi: f64| {
        let rc = r * phi.cos();
        (1.0 - 1.0 / (rc * rc)).max(0.0).sqrt()
    };
    let h = |phi: f64| (inv - cut(phi)).max(0.0);
    // Kinks where the x face starts cutting and where it swallows the whole arc.
    let phi_face = inv.acos().min(FRAC_PI_4);
    let phi_empty = if r * r > 2.0 { (1.0 / (r * r - 1.0).sqrt()).acos().min(FRAC_PI_4) } else { 0.0 };
    let mut total = 0.0;
    if phi_face > phi_empty {
        total += integrate(h, phi_empty, phi_face, QUAD_TOL).integral;
    }
    total += (FRAC_PI_4 - phi_face.max(phi_empty)) * inv;
    16.0 * r * r * total
}

/// ∫_0^{r_max} r^(-s) g(r) dr for a radial mass function g, split at its kinks.
pub fn radial_potential(s: f64, mass: impl Fn(f64) -> f64, breaks: &[f64]) -> f64 {
    let f = |r: f64| if r <= 0.0 { 0.0 } else { r.powf(-s) * mass(r) };
    breaks.windows(2).map(|w| integrate(&f, w[0], w[1], QUAD_TOL).integral).sum()
}

/// ∫_{[-1,1]³} |x|^(-s) dx, for 0 ≤ s < 3.
pub fn unit_cube_integral(s: f64) -> f64 {
    // Inside the unit ball the mass is 4πr² and the piece is exact.
    4.0 * PI / (3.0 - s) + radial_potential(s, cube_radial_mass, &[1.0, 2f64.sqrt(), 3f64.sqrt()])
}

fn check_s(s: f64) -> Result<()> {
    if !(s > 0.0 && s < 1.2) {
        return Err(domain(format!("s = {s} outside (0, 6/5)")));
    }
    Ok(())
}

/// Box integral of |x - y|^(-s) for y at the centre or at a corner of a box of side l.
#[derive(Debug, Clone, Copy)]
pub struct BoxPotential {
    pub s: f64,
    unit: f64,
}

impl BoxPotential {
    pub fn new(s: f64) -> Result<Self> {
        check_s(s)?;
        Ok(BoxPotential { s, unit: unit_cube_integral(s) })
    }

    /// c ∫_{[-L/2, L/2]³} |x|^(-s), the maximum over y.
    pub fn centre(&self, n: usize, c: f64) -> f64 {
        let l = (n as f64 / c).cbrt();
        c * (l / 2.0).powf(3.0 - self.s) * self.unit
    }

    /// c ∫_{[0, L]³} |x|^(-s), the minimum over y in the box.
    pub fn corner(&self, n: usize, c: f64) -> f64 {
        let l = (n as f64 / c).cbrt();
        c * l.powf(3.0 - self.s) * self.unit / 8.0
    }
}

/// sup_y (|x|^(-s) ⋆ ρ₀)(y) for constant density c on the box holding N particles.
pub fn mean_field_sup(s: f64, n: usize, c: f64) -> Result<f64> {
    Ok(BoxPotential::new(s)?.centre(n, c))
}

/// Constant C with sup N^(s/3 - 1)(|x|^(-s) ⋆ ρ) ≤ C when E_kin ≤ A N.
pub fn scaling_constant_bound(s: f64, a: f64) -> Result<f64> {
    check_s(s)?;
    if !(a > 0.0 && a.is_finite()) {
        return Err(domain(format!("kinetic constant A = {a} must be positive")));
    }
    Ok((1.2 - s).powf(s / 2.0 - 1.0)
        * s.powf(-5.0 * s / 6.0)
        * 1.2
        * 2f64.powf(2.0 * s / 3.0)
        * 3f64.powf(-s)
        * 5f64.powf(s / 6.0)
        * a.powf(s / 2.0))
}

/// L^(-1) Σ_{i≠j} |k_i - k_j|^(-2).
pub fn fermi_ball_exchange_sum(ball: &FermiBall) -> f64 {
    let ks = &ball.momenta;
    // Per-row partial sums are collected before adding so the result does not
    // depend on how rayon splits the work.
    let rows: Vec<f64> = (0..ks.len())
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            for j in (i + 1)..ks.len() {
                let d = [ks[i][0] - ks[j][0], ks[i][1] - ks[j][1], ks[i][2] - ks[j][2]];
                acc += 1.0 / norm_sq(d) as f64;
            }
            acc
        })
        .collect();
    2.0 * rows.iter().sum::<f64>() / ball.l
}

/// Radial test functions on ℝ³.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum RadialProfile {
    /// exp(-r²/(2w²))
    Gaussian { width: f64 },
    /// (1 + r²/w²)^(-power)
    Lorentzian { width: f64, power: f64 },
}

impl RadialProfile {
    pub fn value(&self, r: f64) -> f64 {
        match *self {
            RadialProfile::Gaussian { width } => (-r * r / (2.0 * width * width)).exp(),
            RadialProfile::Lorentzian { width, power } => (1.0 + r * r / (width * width)).powf(-power),
        }
    }

    pub fn derivative(&self, r: f64) -> f64 {
        match *self {
            RadialProfile::Gaussian { width } => -r / (width * width) * self.value(r),
            RadialProfile::Lorentzian { width, power } => {
                let w2 = width * width;
                -2.0 * power * r / w2 * (1.0 + r * r / w2).powf(-power - 1.0)
            }
        }
    }

    pub fn scaled(&self, lambda: f64) -> RadialProfile {
        match *self {
            RadialProfile::Gaussian { width } => RadialProfile::Gaussian { width: width / lambda },
            RadialProfile::Lorentzian { width, power } => RadialProfile::Lorentzian { width: width / lambda, power },
        }
    }

    fn width(&self) -> f64 {
        match *self {
            RadialProfile::Gaussian { width } | RadialProfile::Lorentzian { width, .. } => width,
        }
    }
}

/// ∫_0^∞ f(r) dr with the tail split at a multiple of the profile width.
fn half_line(f: impl Fn(f64) -> f64, scale: f64) -> f64 {
    let cut = 8.0 * scale;
    let head = integrate(&f, 0.0, cut, QUAD_TOL).integral;
    // r = cut / u maps the tail onto (0, 1].
    let tail = integrate(|u: f64| if u <= 0.0 { 0.0 } else { f(cut / u) * cut / (u * u) }, 0.0, 1.0, QUAD_TOL).integral;
    head + tail
}

/// ∫_{ℝ³} |f|^p.
pub fn radial_lp_pow(f: &RadialProfile, p: f64) -> f64 {
    4.0 * PI * half_line(|r| r * r * f.value(r).abs().powf(p), f.width())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InequalityMargin {
    pub lhs: f64,
    pub rhs: f64,
    /// Constant used on the right side.
    pub constant: f64,
}

impl InequalityMargin {
    pub fn margin(&self) -> f64 {
        self.rhs - self.lhs
    }
}

/// ∫|f|²/|x|² against 4∫|∇f|².
pub fn hardy_spot_check(f: &RadialProfile) -> InequalityMargin {
    let lhs = 4.0 * PI * half_line(|r| f.value(r).powi(2), f.width());
    let grad = 4.0 * PI * half_line(|r| r * r * f.derivative(r).powi(2), f.width());
    InequalityMargin { lhs, rhs: 4.0 * grad, constant: 4.0 }
}

/// Sharp constant of ∫∫ f |x-y|^(-λ) h ≤ C ‖f‖_p ‖h‖_p with p = 6/(6-λ).
pub fn hls_sharp_constant(lambda: f64) -> f64 {
    PI.powf(lambda / 2.0) * gamma(1.5 - lambda / 2.0) / gamma(3.0 - lambda / 2.0)
        * (gamma(1.5) / gamma(3.0)).powf(-1.0 + lambda / 3.0)
}

/// Sphere average of |x-y|^(-λ) over directions, for |x| = a and |y| = b.
fn angular_kernel(a: f64, b: f64, lambda: f64) -> f64 {
    if (lambda - 2.0).abs() < 1e-12 {
        ((a + b) / (a - b).abs()).ln() / (2.0 * a * b)
    } else {
        ((a + b).powf(2.0 - lambda) - (a - b).abs().powf(2.0 - lambda)) / (2.0 * a * b * (2.0 - lambda))
    }
}

/// ∫∫ f(x) |x-y|^(-λ) h(y) for radial f and h, λ = 2s.
pub fn hls_double_integral(f: &RadialProfile, h: &RadialProfile, lambda: f64) -> f64 {
    let scale = f.width().max(h.width());
    let inner = |a: f64| {
        if a <= 0.0 {
            return 0.0;
        }
        let g = |b: f64| if b <= 0.0 { 0.0 } else { b * b * h.value(b) * angular_kernel(a, b, lambda) };
        // Split at the diagonal where the kernel is singular.
        let near = integrate(g, 0.0, a, QUAD_TOL).integral;
        let cut = a + 8.0 * scale;
        let mid = integrate(g, a, cut, QUAD_TOL).integral;
        let tail = integrate(|u: f64| if u <= 0.0 { 0.0 } else { g(cut / u) * cut / (u * u) }, 0.0, 1.0, QUAD_TOL).integral;
        a * a * f.value(a) * (near + mid + tail)
    };
    16.0 * PI * PI * half_line(inner, scale)
}

pub fn hls_spot_check(s: f64, f: &RadialProfile, h: &RadialProfile) -> Result<InequalityMargin> {
    if !(s > 0.0 && s < 1.5) {
        return Err(domain(format!("s = {s} outside (0, 3/2)")));
    }
    let lambda = 2.0 * s;
    let p = 6.0 / (6.0 - lambda);
    let constant = hls_sharp_constant(lambda);
    let lhs = hls_double_integral(f, h, lambda);
    let rhs = constant * radial_lp_pow(f, p).powf(1.0 / p) * radial_lp_pow(h, p).powf(1.0 / p);
    Ok(InequalityMargin { lhs, rhs, constant })
}

/// One line of a scaling sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub n: usize,
    pub quantity: String,
    pub value: f64,
    pub bound: f64,
    pub margin: f64,
}

/// Closed-shell sweep at density c covering the kinetic energy inequality, the
/// scaled mean-field sup against its constant, and the exchange sum.
pub fn scaling_sweep(shells: &[usize], s: f64, c: f64) -> Result<Vec<ScalingRow>> {
    let pot = BoxPotential::new(s)?;
    let beta = 1.0 - s / 3.0;
    let rows: Vec<Vec<ScalingRow>> = shells
        .par_iter()
        .map(|&target| {
            let ball = fermi_ball(target, c);
            let n = ball.n;
            let e = fermi_ball_kinetic(&ball);
            let (lt_l, lt_r) = lieb_thirring_margin(&ball);
            let scaled = pot.centre(n, c) * (n as f64).powf(-beta);
            let bound = scaling_constant_bound(s, e / n as f64).unwrap_or(f64::NAN);
            let row = |q: &str, value: f64, bound: f64| ScalingRow { n, quantity: q.into(), value, bound, margin: bound - value };
            let mut out = vec![
                row("kinetic", e, f64::NAN),
                row("lieb_thirring", lt_l, lt_r),
                row("mean_field_scaled", scaled, bound),
            ];
            if n <= 5000 {
                out.push(row("exchange_sum", fermi_ball_exchange_sum(&ball), f64::NAN));
            }
            out
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

//! One-particle reduced density matrices and their distances.

use serde::Serialize;

use crate::counting::{alpha_from_distribution, outside_distribution, weight_m, weight_n, ComplementProjector};
use crate::error::{invalid, Result};
use crate::fock::{bits_to_modes, hop, ManyBodyState, TensorState};
use crate::linalg::{c, singular_values, trace, trace_norm, CMat};
use crate::meanfield::OrbitalSet;

/// Trace-one one-particle density matrix.
#[derive(Debug, Clone)]
pub struct ReducedDensityMatrix {
    pub mat: CMat,
}

/// μ₁ with entries (1/N)⟨ψ|c†_y c_x|ψ⟩.
pub fn reduced_density(state: &ManyBodyState) -> ReducedDensityMatrix {
    let sector = &state.sector;
    let m = sector.m();
    let mut g = CMat::zeros(m, m);
    for (col, &bits) in sector.states().iter().enumerate() {
        let amp = state.amps[col];
        if amp == c(0.0) {
            continue;
        }
        for y in bits_to_modes(bits) {
            for x in 0..m {
                if let Some((nb, sign)) = hop(bits, x, y) {
                    let row = sector.index_of(nb).expect("hop stays in sector");
                    // ⟨ψ|c†_x c_y|ψ⟩ is the (y, x) entry.
                    g[(y, x)] += state.amps[row].conj() * amp * sign;
                }
            }
        }
    }
    ReducedDensityMatrix { mat: g / c(sector.n() as f64) }
}

/// Partial trace over slots 2..N of |ψ⟩⟨ψ| on the tensor space.
pub fn reduced_density_tensor(t: &TensorState) -> ReducedDensityMatrix {
    let m = t.m;
    let rest = t.len() / m;
    let mat = CMat::from_fn(m, m, |x, y| {
        (0..rest).map(|r| t.data[x * rest + r] * t.data[y * rest + r].conj()).sum()
    });
    ReducedDensityMatrix { mat }
}

/// μ₁ of the Slater state of the orbitals, p/N.
pub fn slater_density(orbitals: &OrbitalSet) -> ReducedDensityMatrix {
    let p = ComplementProjector::new(orbitals).p;
    ReducedDensityMatrix { mat: p / c(orbitals.n() as f64) }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormDistances {
    pub trace: f64,
    pub hs: f64,
    pub op: f64,
}

pub fn norm_distances(a: &ReducedDensityMatrix, b: &ReducedDensityMatrix) -> Result<NormDistances> {
    if a.mat.shape() != b.mat.shape() {
        return Err(invalid("density matrices have different sizes"));
    }
    let s = singular_values(&(&a.mat - &b.mat));
    let d = NormDistances {
        trace: s.iter().sum(),
        hs: s.iter().map(|x| x * x).sum::<f64>().sqrt(),
        op: s.iter().copied().fold(0.0, f64::max),
    };
    let slack = 1e-12 * (1.0 + d.trace);
    debug_assert!(d.op <= d.hs + slack && d.hs <= d.trace + slack);
    Ok(d)
}

/// Margins of the density-matrix inequalities; each is rhs - lhs and must be ≥ 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityLemmaReport {
    pub alpha_n: f64,
    pub distances: NormDistances,
    /// ‖·‖_tr² ≤ 8α_n
    pub trace_sq_vs_alpha: f64,
    /// 8α_n ≤ 8√N‖·‖_HS
    pub alpha_vs_hs: f64,
    /// N‖·‖_HS² ≤ 2α_n
    pub hs_sq_vs_alpha: f64,
    /// 2α_n ≤ ‖·‖_tr
    pub alpha_vs_trace: f64,
    /// α_n ≤ N‖·‖_op
    pub alpha_vs_op: f64,
    /// min over γ of α_{m^(γ)} - α_n
    pub weight_domination: f64,
    /// |‖qμq‖_tr - α_n| and |‖p/N - pμp‖_tr - α_n|, which must vanish.
    pub block_identity_error: f64,
}

impl DensityLemmaReport {
    pub fn worst_margin(&self) -> f64 {
        [
            self.trace_sq_vs_alpha,
            self.alpha_vs_hs,
            self.hs_sq_vs_alpha,
            self.alpha_vs_trace,
            self.alpha_vs_op,
            self.weight_domination,
            -self.block_identity_error,
        ]
        .into_iter()
        .fold(f64::INFINITY, f64::min)
    }
}

pub fn check_density_lemma(state: &ManyBodyState, orbitals: &OrbitalSet) -> Result<DensityLemmaReport> {
    let n = state.sector.n();
    let nf = n as f64;
    let dist = outside_distribution(state, orbitals)?;
    let alpha_n = alpha_from_distribution(&dist, &weight_n(n)?);
    let mu = reduced_density(state);
    let d = norm_distances(&mu, &slater_density(orbitals))?;
    let mut domination = f64::INFINITY;
    for gamma in [0.25, 0.5, 2.0 / 3.0, 1.0] {
        let am = alpha_from_distribution(&dist, &weight_m(n, gamma)?);
        domination = domination.min(am - alpha_n);
    }
    let proj = ComplementProjector::new(orbitals);
    let qmq = &proj.q * &mu.mat * &proj.q;
    let pmp = &proj.p / c(nf) - &proj.p * &mu.mat * &proj.p;
    let block = (trace_norm(&qmq) - alpha_n).abs().max((trace_norm(&pmp) - alpha_n).abs());
    debug_assert!((trace(&qmq).re - alpha_n).abs() < 1e-9);
    Ok(DensityLemmaReport {
        alpha_n,
        distances: d,
        trace_sq_vs_alpha: 8.0 * alpha_n - d.trace * d.trace,
        alpha_vs_hs: 8.0 * nf.sqrt() * d.hs - 8.0 * alpha_n,
        hs_sq_vs_alpha: 2.0 * alpha_n - nf * d.hs * d.hs,
        alpha_vs_trace: d.trace - 2.0 * alpha_n,
        alpha_vs_op: nf * d.op - alpha_n,
        weight_domination: domination,
        block_identity_error: block,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn explicit_singular_values() {
        let n = 4.0;
        let a = ReducedDensityMatrix { mat: CMat::from_diagonal(&crate::linalg::CVec::from_vec(vec![c(1.0 / n), c(-1.0 / n), c(0.0)])) };
        let b = ReducedDensityMatrix { mat: CMat::zeros(3, 3) };
        let d = norm_distances(&a, &b).unwrap();
        assert!((d.trace - 2.0 / n).abs() < 1e-15);
        assert!((d.hs - 2f64.sqrt() / n).abs() < 1e-15);
        assert!((d.op - 1.0 / n).abs() < 1e-15);
        let z = norm_distances(&b, &b).unwrap();
        assert_eq!((z.trace, z.hs, z.op), (0.0, 0.0, 0.0));
    }
}

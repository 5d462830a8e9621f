use super::{HermitianOperator, ManyBodyState};
use crate::error::{invalid, Result};
use crate::linalg::{c, eigh, CMat, CVec, C64};

/// Sector dimension up to which exp(-iHt) goes through a full eigen-decomposition.
pub const EIGEN_SWITCH: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpMethod {
    Auto,
    Eigen,
    Krylov,
}

/// Cached eigen-decomposition of H for repeated propagation from one state.
#[derive(Debug, Clone)]
pub struct SpectralPropagator {
    pub energies: Vec<f64>,
    pub vectors: CMat,
}

impl SpectralPropagator {
    pub fn new(h: &HermitianOperator) -> Self {
        let (energies, vectors) = eigh(&h.mat);
        Self { energies, vectors }
    }

    /// Spectral coefficients V†ψ, so that ψ(t) = V e^{-iEt} c.
    pub fn coefficients(&self, psi: &CVec) -> CVec {
        self.vectors.adjoint() * psi
    }

    pub fn at(&self, coeffs: &CVec, t: f64) -> CVec {
        let rotated = CVec::from_fn(coeffs.len(), |i, _| {
            coeffs[i] * C64::from_polar(1.0, -self.energies[i] * t)
        });
        &self.vectors * rotated
    }
}

pub fn evolve_exact(state: &ManyBodyState, h: &HermitianOperator, t: f64) -> Result<ManyBodyState> {
    evolve_with(state, h, t, ExpMethod::Auto)
}

pub fn evolve_with(
    state: &ManyBodyState,
    h: &HermitianOperator,
    t: f64,
    method: ExpMethod,
) -> Result<ManyBodyState> {
    if h.dim() != state.amps.len() {
        return Err(invalid(format!(
            "operator dimension {} does not match state dimension {}",
            h.dim(),
            state.amps.len()
        )));
    }
    if t == 0.0 {
        return Ok(state.clone());
    }
    let method = match method {
        ExpMethod::Auto if h.dim() <= EIGEN_SWITCH => ExpMethod::Eigen,
        ExpMethod::Auto => ExpMethod::Krylov,
        m => m,
    };
    let amps = match method {
        ExpMethod::Eigen => {
            let prop = SpectralPropagator::new(h);
            prop.at(&prop.coefficients(&state.amps), t)
        }
        _ => krylov_apply(&h.mat, &state.amps, t, 1e-12),
    };
    Ok(ManyBodyState { sector: state.sector.clone(), amps })
}

const KRYLOV_DIM: usize = 30;

/// exp(-iHt)v by Lanczos with full reorthogonalisation and adaptive substeps.
pub fn krylov_apply(h: &CMat, v: &CVec, t: f64, tol: f64) -> CVec {
    let mut w = v.clone();
    let total = t.abs();
    let dir = t.signum();
    let mut done = 0.0;
    let mut tau = total;
    while done < total {
        let beta0 = w.norm();
        if beta0 == 0.0 {
            return w;
        }
        let (basis, alpha, beta) = lanczos(h, &(&w / c(beta0)), KRYLOV_DIM);
        let k = alpha.len();
        let breakdown = beta.len() < k || beta.last().copied().unwrap_or(0.0) < 1e-14;
        tau = tau.min(total - done);
        loop {
            let y = tridiag_exp(&alpha, &beta[..k - 1], dir * tau);
            let err = if breakdown || k == h.nrows() {
                0.0
            } else {
                beta0 * beta[k - 1] * y[k - 1].norm()
            };
            if err <= tol * tau / total || tau < 1e-12 * total {
                let mut next = CVec::zeros(w.len());
                for (j, b) in basis.iter().enumerate() {
                    next += b * (y[j] * beta0);
                }
                w = next;
                done += tau;
                if err < 0.1 * tol * tau / total {
                    tau *= 1.5;
                }
                break;
            }
            tau *= 0.5;
        }
    }
    w
}

/// Returns the orthonormal basis, diagonal α and off-diagonal β (β[j] couples j and j+1;
/// when no breakdown occurs the last entry is the residual norm).
fn lanczos(h: &CMat, v0: &CVec, kmax: usize) -> (Vec<CVec>, Vec<f64>, Vec<f64>) {
    let kmax = kmax.min(h.nrows());
    let mut basis: Vec<CVec> = vec![v0.clone()];
    let mut alpha = Vec::with_capacity(kmax);
    let mut beta = Vec::with_capacity(kmax);
    for j in 0..kmax {
        let mut r = h * &basis[j];
        let a = basis[j].dotc(&r).re;
        alpha.push(a);
        for _ in 0..2 {
            for b in &basis {
                let proj = b.dotc(&r);
                r -= b * proj;
            }
        }
        let bn = r.norm();
        beta.push(bn);
        if bn < 1e-14 || j + 1 == kmax {
            break;
        }
        basis.push(r / c(bn));
    }
    let k = alpha.len();
    basis.truncate(k);
    (basis, alpha, beta)
}

fn tridiag_exp(alpha: &[f64], off: &[f64], t: f64) -> Vec<C64> {
    let k = alpha.len();
    let mut tmat = CMat::zeros(k, k);
    for i in 0..k {
        tmat[(i, i)] = c(alpha[i]);
        if i + 1 < k {
            tmat[(i, i + 1)] = c(off[i]);
            tmat[(i + 1, i)] = c(off[i]);
        }
    }
    let (vals, vecs) = eigh(&tmat);
    (0..k)
        .map(|row| {
            (0..k)
                .map(|n| C64::from_polar(1.0, -vals[n] * t) * (vecs[(row, n)] * vecs[(0, n)].conj()))
                .sum()
        })
        .collect()
}

//! Exact N-fermion quantum mechanics on an M-mode single-particle space.
//!
//! Basis states are occupation bitstrings with exactly N set bits. A bitstring
//! with occupied modes i1 < i2 < ... < iN stands for c†_{i1} c†_{i2} ... c†_{iN}|0>,
//! i.e. creation operators applied in descending index order carry sign +1.

mod evolve;
mod tensor;

pub use evolve::{evolve_exact, evolve_with, krylov_apply, ExpMethod, SpectralPropagator};
pub use tensor::{
    embedding, sector_from_tensor, tensor_representation, TensorState, TENSOR_CAP,
};

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{domain, invalid, Error, Result};
use crate::linalg::{c, gram_deviation, hermiticity_defect, CMat, CVec, C64};
use crate::meanfield::{LatticeModel, OrbitalSet};

pub const DEFAULT_SECTOR_CAP: usize = 20_000;

pub fn binomial(m: usize, n: usize) -> u128 {
    if n > m {
        return 0;
    }
    let k = n.min(m - n) as u128;
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (m as u128 - i) / (i + 1);
    }
    acc
}

#[derive(Debug, Clone)]
pub struct SectorBasis {
    m: usize,
    n: usize,
    states: Vec<u64>,
    index: HashMap<u64, usize>,
}

impl SectorBasis {
    pub fn m(&self) -> usize {
        self.m
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn dim(&self) -> usize {
        self.states.len()
    }
    pub fn states(&self) -> &[u64] {
        &self.states
    }
    pub fn index_of(&self, bits: u64) -> Option<usize> {
        self.index.get(&bits).copied()
    }
    /// Occupied modes of basis state `i`, ascending.
    pub fn occupied(&self, i: usize) -> Vec<usize> {
        bits_to_modes(self.states[i])
    }
}

pub fn bits_to_modes(mut bits: u64) -> Vec<usize> {
    let mut out = Vec::with_capacity(bits.count_ones() as usize);
    while bits != 0 {
        let b = bits.trailing_zeros() as usize;
        out.push(b);
        bits &= bits - 1;
    }
    out
}

pub fn build_sector(m: usize, n: usize) -> Result<Arc<SectorBasis>> {
    build_sector_with_cap(m, n, DEFAULT_SECTOR_CAP)
}

pub fn build_sector_with_cap(m: usize, n: usize, cap: usize) -> Result<Arc<SectorBasis>> {
    if n == 0 || m == 0 {
        return Err(domain("need at least one mode and one particle"));
    }
    if n > m {
        return Err(domain(format!("N = {n} exceeds M = {m}")));
    }
    if m > 64 {
        return Err(domain(format!("M = {m} exceeds the 64-mode bitstring width")));
    }
    let dim = binomial(m, n);
    if dim > cap as u128 {
        return Err(Error::Size {
            what: "sector dimension",
            size: dim.min(usize::MAX as u128) as usize,
            cap,
        });
    }
    let mut states = Vec::with_capacity(dim as usize);
    // Gosper's hack walks N-bit patterns in increasing numeric order.
    let limit: u128 = 1u128 << m;
    let mut x: u128 = (1u128 << n) - 1;
    while x < limit {
        states.push(x as u64);
        let low = x & x.wrapping_neg();
        let r = x + low;
        x = (((r ^ x) >> 2) / low) | r;
    }
    let index = states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    Ok(Arc::new(SectorBasis { m, n, states, index }))
}

/// Action of c†_x c_y on a bitstring: the new bitstring and its sign, or None if it vanishes.
#[inline]
pub fn hop(bits: u64, x: usize, y: usize) -> Option<(u64, f64)> {
    if bits & (1 << y) == 0 {
        return None;
    }
    if x == y {
        return Some((bits, 1.0));
    }
    if bits & (1 << x) != 0 {
        return None;
    }
    let (lo, hi) = if x < y { (x, y) } else { (y, x) };
    let between = if hi - lo > 1 {
        let mask = ((1u64 << (hi - lo - 1)) - 1) << (lo + 1);
        (bits & mask).count_ones()
    } else {
        0
    };
    let sign = if between % 2 == 0 { 1.0 } else { -1.0 };
    Some((bits ^ (1 << x) ^ (1 << y), sign))
}

#[derive(Debug, Clone)]
pub struct ManyBodyState {
    pub sector: Arc<SectorBasis>,
    pub amps: CVec,
}

impl ManyBodyState {
    /// Wraps amplitudes that must already be normalised (within 1e-10).
    pub fn new(sector: Arc<SectorBasis>, amps: CVec) -> Result<Self> {
        if amps.len() != sector.dim() {
            return Err(invalid(format!(
                "amplitude length {} does not match sector dimension {}",
                amps.len(),
                sector.dim()
            )));
        }
        let norm = amps.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(invalid(format!("state norm {norm} is not 1")));
        }
        Ok(Self { sector, amps })
    }

    pub fn normalized(sector: Arc<SectorBasis>, amps: CVec) -> Result<Self> {
        let norm = amps.norm();
        if norm == 0.0 {
            return Err(invalid("zero vector cannot be normalised"));
        }
        Self::new(sector, amps / c(norm))
    }

    pub fn basis(sector: Arc<SectorBasis>, bits: u64) -> Result<Self> {
        let i = sector
            .index_of(bits)
            .ok_or_else(|| invalid(format!("bitstring {bits:#b} is not in the sector")))?;
        let mut amps = CVec::zeros(sector.dim());
        amps[i] = c(1.0);
        Ok(Self { sector, amps })
    }

    pub fn random<R: rand::Rng + ?Sized>(sector: Arc<SectorBasis>, rng: &mut R) -> Self {
        let amps = crate::linalg::random_unit_vector(rng, sector.dim());
        Self { sector, amps }
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    pub fn overlap(&self, other: &ManyBodyState) -> C64 {
        self.amps.dotc(&other.amps)
    }
}

/// Antisymmetrised product of the orbitals: amplitudes are N×N minors of the
/// coefficient matrix over occupied rows.
pub fn slater_state(orbitals: &OrbitalSet, sector: &Arc<SectorBasis>) -> Result<ManyBodyState> {
    let phi = &orbitals.phi;
    if phi.ncols() != sector.n() || phi.nrows() != sector.m() {
        return Err(invalid(format!(
            "orbital matrix {}x{} does not fit sector M={}, N={}",
            phi.nrows(),
            phi.ncols(),
            sector.m(),
            sector.n()
        )));
    }
    let dev = gram_deviation(phi);
    if dev > 1e-8 {
        return Err(invalid(format!("orbitals are not orthonormal (gram deviation {dev:.2e})")));
    }
    let n = sector.n();
    let amps = CVec::from_fn(sector.dim(), |i, _| {
        let rows = sector.occupied(i);
        let sub = CMat::from_fn(n, n, |r, k| phi[(rows[r], k)]);
        sub.determinant()
    });
    Ok(ManyBodyState { sector: sector.clone(), amps })
}

#[derive(Debug, Clone)]
pub struct HermitianOperator {
    pub mat: CMat,
}

impl HermitianOperator {
    pub fn new(mat: CMat) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(invalid("operator matrix is not square"));
        }
        let defect = hermiticity_defect(&mat);
        if defect > 1e-12 {
            return Err(invalid(format!("operator is not Hermitian (defect {defect:.2e})")));
        }
        Ok(Self { mat })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn apply(&self, v: &CVec) -> CVec {
        &self.mat * v
    }

    pub fn expectation(&self, state: &ManyBodyState) -> f64 {
        state.amps.dotc(&(&self.mat * &state.amps)).re
    }
}

fn check_one_body(a: &CMat, sector: &SectorBasis) -> Result<()> {
    if a.nrows() != sector.m() || a.ncols() != sector.m() {
        return Err(invalid(format!(
            "one-body matrix is {}x{}, sector has M = {}",
            a.nrows(),
            a.ncols(),
            sector.m()
        )));
    }
    Ok(())
}

/// Second quantisation Σ_{x,y} A_xy c†_x c_y as a dense sector matrix.
pub fn lift_one_body(a: &CMat, sector: &SectorBasis) -> Result<HermitianOperator> {
    check_one_body(a, sector)?;
    let defect = hermiticity_defect(a);
    if defect > 1e-12 {
        return Err(invalid(format!("one-body matrix is not Hermitian (defect {defect:.2e})")));
    }
    let d = sector.dim();
    let mut mat = CMat::zeros(d, d);
    add_one_body(&mut mat, a, sector);
    HermitianOperator::new(mat)
}

fn add_one_body(mat: &mut CMat, a: &CMat, sector: &SectorBasis) {
    let m = sector.m();
    for (col, &bits) in sector.states().iter().enumerate() {
        for y in bits_to_modes(bits) {
            for x in 0..m {
                let axy = a[(x, y)];
                if axy == c(0.0) {
                    continue;
                }
                if let Some((nb, sign)) = hop(bits, x, y) {
                    let row = sector.index_of(nb).expect("hop stays in sector");
                    mat[(row, col)] += axy * sign;
                }
            }
        }
    }
}

/// Matrix-free application of Σ A_xy c†_x c_y to a sector vector.
pub fn apply_one_body(a: &CMat, sector: &SectorBasis, v: &CVec) -> CVec {
    let m = sector.m();
    let mut out = CVec::zeros(sector.dim());
    for (col, &bits) in sector.states().iter().enumerate() {
        let amp = v[col];
        if amp == c(0.0) {
            continue;
        }
        for y in bits_to_modes(bits) {
            for x in 0..m {
                let axy = a[(x, y)];
                if axy == c(0.0) {
                    continue;
                }
                if let Some((nb, sign)) = hop(bits, x, y) {
                    let row = sector.index_of(nb).expect("hop stays in sector");
                    out[row] += axy * amp * sign;
                }
            }
        }
    }
    out
}

/// H = Σ_j h⁰_j + N^{-β} Σ_{i<j} v(x_i - x_j) on the sector.
pub fn build_hamiltonian(model: &LatticeModel, sector: &SectorBasis) -> Result<HermitianOperator> {
    model.validate()?;
    if model.m != sector.m() {
        return Err(invalid(format!(
            "model has M = {}, sector has M = {}",
            model.m,
            sector.m()
        )));
    }
    let d = sector.dim();
    let mut mat = CMat::zeros(d, d);
    add_one_body(&mut mat, &model.h0(), sector);
    let g = model.coupling(sector.n());
    for (i, &bits) in sector.states().iter().enumerate() {
        mat[(i, i)] += c(g * pair_energy(bits, &model.v, model.m));
    }
    HermitianOperator::new(mat)
}

/// Σ over occupied pairs x < y of v(y - x mod M).
pub fn pair_energy(bits: u64, v: &[f64], m: usize) -> f64 {
    let modes = bits_to_modes(bits);
    let mut e = 0.0;
    for (a, &x) in modes.iter().enumerate() {
        for &y in &modes[a + 1..] {
            e += v[(y + m - x) % m];
        }
    }
    e
}

//! First-quantised representation, kept small on purpose: it is the oracle
//! against which the sector fast paths are checked.

use std::sync::Arc;

use super::{ManyBodyState, SectorBasis};
use crate::error::{invalid, Error, Result};
use crate::linalg::{c, CMat, CVec};

pub const TENSOR_CAP: usize = 4096;

/// Amplitudes ψ(x_1, ..., x_N) stored with x_1 as the most significant digit.
#[derive(Debug, Clone)]
pub struct TensorState {
    pub m: usize,
    pub n: usize,
    pub data: CVec,
}

pub(crate) fn tensor_len(m: usize, n: usize) -> Result<usize> {
    let mut len: usize = 1;
    for _ in 0..n {
        len = len.checked_mul(m).unwrap_or(usize::MAX);
        if len > TENSOR_CAP {
            return Err(Error::Size {
                what: "tensor length M^N",
                size: len,
                cap: TENSOR_CAP,
            });
        }
    }
    Ok(len)
}

impl TensorState {
    pub fn zeros(m: usize, n: usize) -> Result<Self> {
        let len = tensor_len(m, n)?;
        Ok(Self { m, n, data: CVec::zeros(len) })
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn with_data(&self, data: CVec) -> Self {
        Self { m: self.m, n: self.n, data }
    }

    pub fn decode(&self, mut idx: usize) -> Vec<usize> {
        let mut xs = vec![0; self.n];
        for slot in (0..self.n).rev() {
            xs[slot] = idx % self.m;
            idx /= self.m;
        }
        xs
    }

    pub fn encode(&self, xs: &[usize]) -> usize {
        xs.iter().fold(0, |acc, &x| acc * self.m + x)
    }

    fn stride(&self, slot: usize) -> usize {
        self.m.pow((self.n - 1 - slot) as u32)
    }

    /// Applies a one-body matrix to a single slot (0-based).
    pub fn apply_one_body(&self, a: &CMat, slot: usize) -> TensorState {
        let m = self.m;
        let stride = self.stride(slot);
        let block = stride * m;
        let mut out = CVec::zeros(self.len());
        for base in (0..self.len()).step_by(block) {
            for inner in 0..stride {
                for x in 0..m {
                    let mut acc = c(0.0);
                    for y in 0..m {
                        acc += a[(x, y)] * self.data[base + y * stride + inner];
                    }
                    out[base + x * stride + inner] = acc;
                }
            }
        }
        self.with_data(out)
    }

    /// Applies a general two-body matrix on slots a < b; row/column index x_a·M + x_b.
    pub fn apply_two_body(&self, h: &CMat, a: usize, b: usize) -> TensorState {
        let m = self.m;
        let (sa, sb) = (self.stride(a), self.stride(b));
        let mut out = CVec::zeros(self.len());
        for idx in 0..self.len() {
            let xs = self.decode(idx);
            if xs[a] != 0 || xs[b] != 0 {
                continue;
            }
            for xa in 0..m {
                for xb in 0..m {
                    let mut acc = c(0.0);
                    for ya in 0..m {
                        for yb in 0..m {
                            acc += h[(xa * m + xb, ya * m + yb)] * self.data[idx + ya * sa + yb * sb];
                        }
                    }
                    out[idx + xa * sa + xb * sb] = acc;
                }
            }
        }
        self.with_data(out)
    }

    /// Multiplies by f(x_a, x_b), a two-body multiplication operator.
    pub fn apply_pair_function(&self, a: usize, b: usize, f: impl Fn(usize, usize) -> f64) -> TensorState {
        let mut out = self.data.clone();
        for (idx, z) in out.iter_mut().enumerate() {
            let xs = self.decode(idx);
            *z *= f(xs[a], xs[b]);
        }
        self.with_data(out)
    }

    pub fn apply_site_function(&self, slot: usize, f: impl Fn(usize) -> f64) -> TensorState {
        let mut out = self.data.clone();
        for (idx, z) in out.iter_mut().enumerate() {
            let xs = self.decode(idx);
            *z *= f(xs[slot]);
        }
        self.with_data(out)
    }

    pub fn inner(&self, other: &TensorState) -> num_complex::Complex64 {
        self.data.dotc(&other.data)
    }

    /// Worst violation of ψ(.., x_a, .., x_b, ..) = -ψ(.., x_b, .., x_a, ..).
    pub fn antisymmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for idx in 0..self.len() {
            let xs = self.decode(idx);
            for a in 0..self.n {
                for b in a + 1..self.n {
                    let mut ys = xs.clone();
                    ys.swap(a, b);
                    let j = self.encode(&ys);
                    worst = worst.max((self.data[idx] + self.data[j]).norm());
                }
            }
        }
        worst
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Sorted occupation bitstring and permutation sign of a tuple of distinct modes.
fn sort_sign(xs: &[usize]) -> Option<(u64, f64)> {
    let mut bits = 0u64;
    let mut inversions = 0;
    for (i, &x) in xs.iter().enumerate() {
        if bits & (1 << x) != 0 {
            return None;
        }
        bits |= 1 << x;
        inversions += xs[i + 1..].iter().filter(|&&y| y < x).count();
    }
    Some((bits, if inversions % 2 == 0 { 1.0 } else { -1.0 }))
}

pub fn tensor_representation(state: &ManyBodyState) -> Result<TensorState> {
    let sector = &state.sector;
    let mut t = TensorState::zeros(sector.m(), sector.n())?;
    let norm = 1.0 / factorial(sector.n()).sqrt();
    for idx in 0..t.len() {
        let xs = t.decode(idx);
        if let Some((bits, sign)) = sort_sign(&xs) {
            let i = sector.index_of(bits).expect("distinct modes lie in the sector");
            t.data[idx] = state.amps[i] * (sign * norm);
        }
    }
    Ok(t)
}

/// Inverse of `tensor_representation` on the antisymmetric subspace (no normalisation check).
pub fn sector_from_tensor(t: &TensorState, sector: &Arc<SectorBasis>) -> Result<CVec> {
    if t.m != sector.m() || t.n != sector.n() {
        return Err(invalid("tensor shape does not match the sector"));
    }
    let scale = factorial(sector.n()).sqrt();
    Ok(CVec::from_fn(sector.dim(), |i, _| {
        let xs = sector.occupied(i);
        t.data[t.encode(&xs)] * scale
    }))
}

/// Isometry E: sector → tensor space, column i is the tensor form of basis state i.
pub fn embedding(sector: &Arc<SectorBasis>) -> Result<CMat> {
    let len = tensor_len(sector.m(), sector.n())?;
    let mut e = CMat::zeros(len, sector.dim());
    for i in 0..sector.dim() {
        let st = ManyBodyState::basis(sector.clone(), sector.states()[i])?;
        let t = tensor_representation(&st)?;
        e.set_column(i, &t.data);
    }
    Ok(e)
}

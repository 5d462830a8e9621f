//! Small dense linear-algebra helpers shared by every module.

use faer::complex_native::c64;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn random_complex<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

/// Normalised complex Gaussian vector.
pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CVec {
    let v = CVec::from_fn(dim, |_, _| random_complex(rng));
    let n = v.norm();
    v / c(n)
}

/// Haar-like random M×N matrix with orthonormal columns (QR of a Gaussian matrix).
pub fn random_orthonormal<R: Rng + ?Sized>(rng: &mut R, m: usize, n: usize) -> CMat {
    let a = CMat::from_fn(m, n, |_, _| random_complex(rng));
    let q = a.qr().q();
    q.columns(0, n).into_owned()
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMat {
    let a = CMat::from_fn(dim, dim, |_, _| random_complex(rng));
    (&a + a.adjoint()) * c(0.5)
}

/// Largest entrywise deviation of Φ†Φ from the identity.
pub fn gram_deviation(phi: &CMat) -> f64 {
    let g = phi.adjoint() * phi;
    let mut worst: f64 = 0.0;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - c(target)).norm());
        }
    }
    worst
}

/// Orthogonal projector onto the column span of `phi` (Φ(Φ†Φ)⁻¹Φ†).
pub fn span_projector(phi: &CMat) -> CMat {
    let g = phi.adjoint() * phi;
    let ginv = g.try_inverse().expect("orbital Gram matrix is singular");
    phi * ginv * phi.adjoint()
}

pub fn max_abs(a: &CMat) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

pub fn is_real(a: &CMat, tol: f64) -> bool {
    a.iter().all(|z| z.im.abs() <= tol)
}

pub fn hermiticity_defect(a: &CMat) -> f64 {
    let scale = a.iter().fold(0.0f64, |m, z| m.max(z.norm())).max(1e-300);
    let mut worst: f64 = 0.0;
    for i in 0..a.nrows() {
        for j in i..a.ncols() {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst / scale
}

/// Run dense decompositions single-threaded so results do not depend on the
/// thread count. Parallelism then comes from independent jobs only.
pub fn serial_backend() {
    faer::set_global_parallelism(faer::Parallelism::None);
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
/// Real symmetric inputs take the cheaper real path.
pub fn eigh(a: &CMat) -> (Vec<f64>, CMat) {
    let n = a.nrows();
    let (vals, vecs): (Vec<f64>, CMat) = if is_real(a, 0.0) {
        let m = faer::Mat::<f64>::from_fn(n, n, |i, j| a[(i, j)].re);
        let e = m.selfadjoint_eigendecomposition(faer::Side::Lower);
        let s = e.s().column_vector();
        let u = e.u();
        ((0..n).map(|i| s.read(i)).collect(), CMat::from_fn(n, n, |i, j| c(u.read(i, j))))
    } else {
        let m = faer::Mat::<c64>::from_fn(n, n, |i, j| c64::new(a[(i, j)].re, a[(i, j)].im));
        let e = m.selfadjoint_eigendecomposition(faer::Side::Lower);
        let s = e.s().column_vector();
        let u = e.u();
        (
            (0..n).map(|i| s.read(i).re).collect(),
            CMat::from_fn(n, n, |i, j| {
                let z = u.read(i, j);
                C64::new(z.re, z.im)
            }),
        )
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
    let sorted_vals = order.iter().map(|&i| vals[i]).collect();
    let sorted_vecs = CMat::from_fn(n, n, |r, k| vecs[(r, order[k])]);
    (sorted_vals, sorted_vecs)
}

pub fn singular_values(a: &CMat) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let m = faer::Mat::<c64>::from_fn(a.nrows(), a.ncols(), |i, j| c64::new(a[(i, j)].re, a[(i, j)].im));
    m.singular_values()
}

pub fn trace_norm(a: &CMat) -> f64 {
    singular_values(a).iter().sum()
}

pub fn trace(a: &CMat) -> C64 {
    (0..a.nrows().min(a.ncols())).map(|i| a[(i, i)]).sum()
}

/// ⟨a|b⟩, conjugate-linear in the first slot.
pub fn inner(a: &CVec, b: &CVec) -> C64 {
    a.dotc(b)
}

/// exp(-i H t) for Hermitian H given through its eigen-decomposition.
pub fn unitary_from_eigh(vals: &[f64], vecs: &CMat, t: f64) -> CMat {
    let n = vals.len();
    let phases = CMat::from_fn(n, n, |i, j| {
        if i == j {
            C64::from_polar(1.0, -vals[i] * t)
        } else {
            c(0.0)
        }
    });
    vecs * phases * vecs.adjoint()
}

/// Least-squares slope of log(y) against log(x).
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

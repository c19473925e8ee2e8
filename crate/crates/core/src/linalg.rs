//! Dense complex helpers on top of nalgebra.
//!
//! Complex products are split into real GEMMs so they run through nalgebra's
//! blocked `f64` kernels instead of its generic complex loop.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

fn split(a: &CMatrix) -> (DMatrix<f64>, DMatrix<f64>) {
    (a.map(|z| z.re), a.map(|z| z.im))
}

fn join(re: DMatrix<f64>, im: DMatrix<f64>) -> CMatrix {
    re.zip_map(&im, Complex64::new)
}

/// `a * b`.
pub fn matmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ai) = split(a);
    let (br, bi) = split(b);
    let re = &ar * &br - &ai * &bi;
    let im = &ar * &bi + &ai * &br;
    join(re, im)
}

/// `a^H * b`.
pub fn adjoint_matmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ai) = split(a);
    let (br, bi) = split(b);
    let re = ar.tr_mul(&br) + ai.tr_mul(&bi);
    let im = ar.tr_mul(&bi) - ai.tr_mul(&br);
    join(re, im)
}

/// `a^H * a`, exactly Hermitian.
pub fn gram(a: &CMatrix) -> CMatrix {
    let mut g = adjoint_matmul(a, a);
    hermitize(&mut g);
    g
}

pub fn hermitize(g: &mut CMatrix) {
    let n = g.nrows();
    for i in 0..n {
        g[(i, i)].im = 0.0;
        for j in (i + 1)..n {
            let avg = (g[(i, j)] + g[(j, i)].conj()) * 0.5;
            g[(i, j)] = avg;
            g[(j, i)] = avg.conj();
        }
    }
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(g: &CMatrix) -> Vec<f64> {
    if g.nrows() == 0 {
        return Vec::new();
    }
    let mut vals: Vec<f64> = g.clone().symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    vals
}

/// Eigen decomposition of a Hermitian matrix, eigenvalues ascending and
/// eigenvectors in the matching columns.
pub fn hermitian_eigen(g: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = g.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let eig = g.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

/// `q * diag(f(lambda)) * q^H` for a Hermitian decomposition.
#[cfg(test)]
pub fn spectral_function(vals: &[f64], q: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let mut scaled = q.clone();
    for (c, &v) in vals.iter().enumerate() {
        let s = f(v);
        scaled.column_mut(c).iter_mut().for_each(|z| *z *= s);
    }
    let mut out = matmul(&scaled, &q.adjoint());
    hermitize(&mut out);
    out
}

pub fn to_dvector(v: &[Complex64]) -> DVector<Complex64> {
    DVector::from_column_slice(v)
}

pub fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

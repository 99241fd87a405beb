//! Dense complex helpers shared by the numerical modules.

use ndarray::{Array1, Array2, ArrayBase, Data, Ix2, ShapeBuilder};
use ndarray_linalg::{Eigh, Inverse, SVD, UPLO};

use crate::{Error, Result, C64};

/// Above this size the spectral norm falls back to power iteration.
const SVD_LIMIT: usize = 2048;

pub(crate) fn eye(n: usize) -> Array2<C64> {
    Array2::from_diag_elem(n, C64::new(1.0, 0.0))
}

pub(crate) fn adjoint<S: Data<Elem = C64>>(a: &ArrayBase<S, Ix2>) -> Array2<C64> {
    let mut out = Array2::zeros((a.ncols(), a.nrows()));
    out.zip_mut_with(&a.t(), |o, z| *o = z.conj());
    out
}

pub(crate) fn all_finite<S: Data<Elem = C64>>(a: &ArrayBase<S, Ix2>) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Largest singular value.
pub(crate) fn opnorm<S: Data<Elem = C64>>(a: &ArrayBase<S, Ix2>) -> Result<f64> {
    if !all_finite(a) {
        return Err(Error::NonFinite);
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    if a.nrows().max(a.ncols()) <= SVD_LIMIT {
        let (_, s, _) = a.svd(false, false)?;
        Ok(s.iter().copied().fold(0.0, f64::max))
    } else {
        Ok(power_norm(a, 1e-12, 5000))
    }
}

/// Largest and smallest singular values.
pub(crate) fn singular_extremes(a: &Array2<C64>) -> Result<(f64, f64)> {
    if !all_finite(a) {
        return Err(Error::NonFinite);
    }
    let (_, s, _) = a.svd(false, false)?;
    let max = s.iter().copied().fold(0.0, f64::max);
    let min = s.iter().copied().fold(f64::INFINITY, f64::min);
    Ok((max, min))
}

/// Power iteration on `A*A`; deterministic start vector.
pub(crate) fn power_norm<S: Data<Elem = C64>>(a: &ArrayBase<S, Ix2>, rtol: f64, max_iter: usize) -> f64 {
    let n = a.ncols();
    let mut v: Array1<C64> = (0..n)
        .map(|k| C64::new(1.0 + (k as f64 * 0.618).sin(), (k as f64 * 1.3).cos()))
        .collect();
    let mut sigma = 0.0;
    for _ in 0..max_iter {
        let nv = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if nv == 0.0 {
            return 0.0;
        }
        v.mapv_inplace(|z| z / nv);
        let av = a.dot(&v);
        let next = av.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v = a.t().dot(&av.mapv(|z| z.conj())).mapv(|z| z.conj());
        if (next - sigma).abs() <= rtol * next {
            return next;
        }
        sigma = next;
    }
    sigma
}

pub(crate) fn inverse(a: &Array2<C64>) -> Result<Array2<C64>> {
    Ok(a.inv()?)
}

/// Eigendecomposition of a Hermitian matrix.
///
/// The LAPACK wrapper returns wrong eigenvectors for complex Hermitian input
/// in row-major layout, so a column-major copy is always passed.
pub(crate) fn eigh<S: Data<Elem = C64>>(h: &ArrayBase<S, Ix2>) -> Result<(Array1<f64>, Array2<C64>)> {
    let mut f = Array2::zeros(h.dim().f());
    f.assign(h);
    Ok(f.eigh(UPLO::Lower)?)
}

/// `exp(-iτH)` for Hermitian `H` by eigendecomposition.
pub(crate) fn expm_hermitian(h: &Array2<C64>, tau: f64) -> Result<Array2<C64>> {
    let (vals, vecs) = eigh(h)?;
    Ok(spectral_apply(&vals, &vecs, |x| C64::from_polar(1.0, -tau * x)))
}

/// `Q f(Λ) Q*` from an eigendecomposition.
pub(crate) fn spectral_apply(vals: &Array1<f64>, vecs: &Array2<C64>, f: impl Fn(f64) -> C64) -> Array2<C64> {
    let mut scaled = vecs.clone();
    for (mut col, &x) in scaled.columns_mut().into_iter().zip(vals) {
        let fx = f(x);
        col.mapv_inplace(|z| z * fx);
    }
    scaled.dot(&adjoint(vecs))
}

/// `‖A*A − I‖`.
pub(crate) fn unitarity_defect(a: &Array2<C64>) -> Result<f64> {
    let mut g = adjoint(a).dot(a);
    for k in 0..g.nrows() {
        g[(k, k)] -= 1.0;
    }
    opnorm(&g)
}

#[cfg(test)]
/// `max |A − A*|` entrywise.
#[cfg(test)]
pub(crate) fn hermitian_defect(a: &Array2<C64>) -> f64 {
    let mut worst: f64 = 0.0;
    for ((j, k), z) in a.indexed_iter() {
        worst = worst.max((z - a[(k, j)].conj()).norm());
    }
    worst
}

/// `A^k` by repeated squaring.
pub(crate) fn matpow(a: &Array2<C64>, mut k: usize) -> Array2<C64> {
    let mut result = eye(a.nrows());
    let mut base = a.clone();
    while k > 0 {
        if k & 1 == 1 {
            result = result.dot(&base);
        }
        k >>= 1;
        if k > 0 {
            base = base.dot(&base);
        }
    }
    result
}

/// Scale row `j` by `d[j]`.
pub(crate) fn scale_rows(a: &mut Array2<C64>, d: &[C64]) {
    for (mut row, &s) in a.rows_mut().into_iter().zip(d) {
        row.mapv_inplace(|z| z * s);
    }
}

/// Scale column `k` by `d[k]`.
pub(crate) fn scale_cols(a: &mut Array2<C64>, d: &[C64]) {
    for mut row in a.rows_mut() {
        for (z, &s) in row.iter_mut().zip(d) {
            *z *= s;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn power_iteration_agrees_with_svd() {
        let a = Array2::from_shape_fn((40, 40), |(j, k)| {
            C64::new(((j * 7 + k * 3) as f64).sin(), ((j + 2 * k) as f64).cos() / (1.0 + j as f64))
        });
        let s = opnorm(&a).unwrap();
        let p = power_norm(&a, 1e-14, 100_000);
        assert!((s - p).abs() <= 1e-8 * s, "{s} vs {p}");
    }

    #[test]
    fn expm_of_diagonal() {
        let h = array![[C64::new(1.0, 0.0), C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), C64::new(-2.0, 0.0)]];
        let u = expm_hermitian(&h, 0.5).unwrap();
        assert!((u[(0, 0)] - C64::from_polar(1.0, -0.5)).norm() < 1e-14);
        assert!((u[(1, 1)] - C64::from_polar(1.0, 1.0)).norm() < 1e-14);
        assert!(unitarity_defect(&u).unwrap() < 1e-14);
    }

    #[test]
    fn eigh_is_layout_independent() {
        let h = Array2::from_shape_fn((12, 12), |(j, k)| {
            let x = j as f64 - k as f64;
            C64::new((0.3 * x).cos() + if j == k { j as f64 } else { 0.0 }, (0.7 * x).sin())
        });
        let (vals, vecs) = eigh(&h).unwrap();
        let lhs = h.dot(&vecs);
        let rhs = spectral_apply(&vals, &vecs, |x| C64::new(x, 0.0)).dot(&vecs);
        assert!((&lhs - &rhs).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn matpow_matches_repeated_product() {
        let a = Array2::from_shape_fn((5, 5), |(j, k)| C64::new((j as f64 - k as f64) * 0.1, 0.05 * j as f64));
        let mut direct = eye(5);
        for _ in 0..13 {
            direct = direct.dot(&a);
        }
        let fast = matpow(&a, 13);
        assert!((&direct - &fast).iter().all(|z| z.norm() < 1e-12));
    }
}

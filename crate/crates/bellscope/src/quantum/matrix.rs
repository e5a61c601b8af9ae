//! Dense square complex matrices, sized for two-qubit work but generic in
//! dimension. Includes a cyclic Jacobi eigensolver for Hermitian input and a
//! power-iteration spectral norm; both are self-contained so the quantum
//! layer carries no linear-algebra dependency.

use num::complex::Complex64;

/// Convergence floor for the Jacobi sweep, relative to the Frobenius norm.
const JACOBI_TOL: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Relative convergence threshold for the power-iteration norm estimate.
pub const NORM_CONVERGENCE_TOL: f64 = 1e-10;
const NORM_MAX_ITERATIONS: usize = 20_000;

/// A square complex matrix in row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "matrices have at least one row");
        ComplexMatrix { dim, data: vec![Complex64::new(0.0, 0.0); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for k in 0..dim {
            m.set(k, k, Complex64::new(1.0, 0.0));
        }
        m
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let dim = rows.len();
        assert!(dim > 0 && rows.iter().all(|r| r.len() == dim), "rows must form a square");
        ComplexMatrix { dim, data: rows.concat() }
    }

    pub fn from_real_diag(entries: &[f64]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (k, &e) in entries.iter().enumerate() {
            m.set(k, k, Complex64::new(e, 0.0));
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.dim + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[r * self.dim + c] = v;
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        ComplexMatrix { dim: self.dim, data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        ComplexMatrix { dim: self.dim, data }
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        let data = self.data.iter().map(|a| a * factor).collect();
        ComplexMatrix { dim: self.dim, data }
    }

    pub fn scale_re(&self, factor: f64) -> Self {
        self.scale(Complex64::new(factor, 0.0))
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = Self::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self.get(r, k);
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for c in 0..n {
                    let cur = out.get(r, c);
                    out.set(r, c, cur + a * other.get(k, c));
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.dim, v.len());
        (0..self.dim)
            .map(|r| {
                (0..self.dim).fold(Complex64::new(0.0, 0.0), |acc, c| {
                    acc + self.get(r, c) * v[c]
                })
            })
            .collect()
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for r in 0..n {
            for c in 0..n {
                out.set(c, r, self.get(r, c).conj());
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).fold(Complex64::new(0.0, 0.0), |acc, k| acc + self.get(k, k))
    }

    pub fn kron(&self, other: &Self) -> Self {
        let (n, m) = (self.dim, other.dim);
        let mut out = Self::zeros(n * m);
        for r1 in 0..n {
            for c1 in 0..n {
                let a = self.get(r1, c1);
                for r2 in 0..m {
                    for c2 in 0..m {
                        out.set(r1 * m + r2, c1 * m + c2, a * other.get(r2, c2));
                    }
                }
            }
        }
        out
    }

    /// Outer product `v w†` as a dim × dim matrix.
    pub fn outer(v: &[Complex64], w: &[Complex64]) -> Self {
        assert_eq!(v.len(), w.len());
        let n = v.len();
        let mut out = Self::zeros(n);
        for r in 0..n {
            for c in 0..n {
                out.set(r, c, v[r] * w[c].conj());
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entry modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_abs_diff(&self.adjoint()) <= tol
    }

    pub fn is_projection(&self, tol: f64) -> bool {
        self.is_hermitian(tol) && self.mul(self).max_abs_diff(self) <= tol
    }

    pub fn commutes_with(&self, other: &Self, tol: f64) -> bool {
        self.mul(other).max_abs_diff(&other.mul(self)) <= tol
    }

    /// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations:
    /// returns eigenvalues in ascending order and the unitary whose columns
    /// are the matching eigenvectors. The input is symmetrized first, so
    /// anti-Hermitian noise up to the caller's tolerance is harmless.
    pub fn eigen_hermitian(&self) -> (Vec<f64>, ComplexMatrix) {
        let n = self.dim;
        let mut a = self.add(&self.adjoint()).scale_re(0.5);
        let mut v = Self::identity(n);
        let threshold = JACOBI_TOL * (1.0 + a.frobenius_norm());

        for _ in 0..JACOBI_MAX_SWEEPS {
            let off: f64 = (0..n)
                .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
                .map(|(p, q)| a.get(p, q).norm_sqr())
                .sum::<f64>()
                .sqrt();
            if off <= threshold {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a.get(p, q);
                    let r = apq.norm();
                    if r <= threshold / (n as f64) {
                        continue;
                    }
                    let phase = apq / r;
                    let alpha = a.get(p, p).re;
                    let beta = a.get(q, q).re;
                    let tau = (alpha - beta) / (2.0 * r);
                    let t = if tau >= 0.0 {
                        1.0 / (tau + (1.0 + tau * tau).sqrt())
                    } else {
                        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    let sigma = phase * s;

                    // right-multiply columns p,q by the rotation
                    for k in 0..n {
                        let akp = a.get(k, p);
                        let akq = a.get(k, q);
                        a.set(k, p, akp * c + akq * sigma.conj());
                        a.set(k, q, akq * c - akp * sigma);
                    }
                    // left-multiply rows p,q by its adjoint
                    for k in 0..n {
                        let apk = a.get(p, k);
                        let aqk = a.get(q, k);
                        a.set(p, k, apk * c + aqk * sigma);
                        a.set(q, k, aqk * c - apk * sigma.conj());
                    }
                    for k in 0..n {
                        let vkp = v.get(k, p);
                        let vkq = v.get(k, q);
                        v.set(k, p, vkp * c + vkq * sigma.conj());
                        v.set(k, q, vkq * c - vkp * sigma);
                    }
                }
            }
        }

        let mut order: Vec<usize> = (0..n).collect();
        let values: Vec<f64> = (0..n).map(|k| a.get(k, k).re).collect();
        order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap());
        let eigenvalues: Vec<f64> = order.iter().map(|&k| values[k]).collect();
        let mut vectors = Self::zeros(n);
        for (new_col, &old_col) in order.iter().enumerate() {
            for k in 0..n {
                vectors.set(k, new_col, v.get(k, old_col));
            }
        }
        (eigenvalues, vectors)
    }

    /// Operator norm estimated by power iteration on `M†M`; the Rayleigh
    /// quotient is iterated to relative convergence.
    pub fn spectral_norm(&self) -> f64 {
        let b = self.adjoint().mul(self);
        let n = self.dim;
        let mut v: Vec<Complex64> = (0..n)
            .map(|k| Complex64::new(1.0 + k as f64 / n as f64, 0.0))
            .collect();
        normalize(&mut v);
        let mut lambda = 0.0f64;
        for _ in 0..NORM_MAX_ITERATIONS {
            let w = b.mul_vec(&v);
            let rayleigh: f64 = v
                .iter()
                .zip(&w)
                .map(|(a, b)| (a.conj() * b).re)
                .sum();
            let w_norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if w_norm == 0.0 {
                return 0.0;
            }
            let converged = (rayleigh - lambda).abs() <= NORM_CONVERGENCE_TOL * rayleigh.abs().max(1.0);
            lambda = rayleigh;
            if converged {
                break;
            }
            v = w;
            let inv = 1.0 / w_norm;
            for z in &mut v {
                *z *= inv;
            }
        }
        lambda.max(0.0).sqrt()
    }
}

fn normalize(v: &mut [Complex64]) {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    assert!(norm > 0.0, "cannot normalize the zero vector");
    let inv = 1.0 / norm;
    for z in v {
        *z *= inv;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn multiplication_and_adjoint() {
        let m = ComplexMatrix::from_rows(&[
            vec![c(0.0, 0.0), c(0.0, -1.0)],
            vec![c(0.0, 1.0), c(0.0, 0.0)],
        ]);
        // sigma_y squared is the identity
        assert!(m.mul(&m).max_abs_diff(&ComplexMatrix::identity(2)) < 1e-15);
        assert!(m.is_hermitian(0.0));
        assert_eq!(m.adjoint(), m);
    }

    #[test]
    fn kron_places_blocks() {
        let a = ComplexMatrix::from_real_diag(&[1.0, 2.0]);
        let b = ComplexMatrix::identity(2);
        let k = a.kron(&b);
        assert_eq!(k.dim(), 4);
        assert_eq!(k.get(0, 0), c(1.0, 0.0));
        assert_eq!(k.get(3, 3), c(2.0, 0.0));
        assert_eq!(k.trace(), c(6.0, 0.0));
    }

    #[test]
    fn eigen_of_a_diagonal_matrix() {
        let m = ComplexMatrix::from_real_diag(&[3.0, -1.0, 2.0]);
        let (vals, _) = m.eigen_hermitian();
        assert_eq!(vals, vec![-1.0, 2.0, 3.0]);
    }

    #[test]
    fn eigen_reconstructs_a_hermitian_matrix() {
        let m = ComplexMatrix::from_rows(&[
            vec![c(2.0, 0.0), c(1.0, 1.0), c(0.0, -2.0)],
            vec![c(1.0, -1.0), c(0.0, 0.0), c(3.0, 0.5)],
            vec![c(0.0, 2.0), c(3.0, -0.5), c(-1.0, 0.0)],
        ]);
        let (vals, vecs) = m.eigen_hermitian();
        // rebuild V diag(vals) V† and compare
        let mut diag = ComplexMatrix::zeros(3);
        for (k, &v) in vals.iter().enumerate() {
            diag.set(k, k, c(v, 0.0));
        }
        let rebuilt = vecs.mul(&diag).mul(&vecs.adjoint());
        assert!(rebuilt.max_abs_diff(&m) < 1e-9);
        // columns are orthonormal
        assert!(vecs.adjoint().mul(&vecs).max_abs_diff(&ComplexMatrix::identity(3)) < 1e-9);
    }

    #[test]
    fn eigen_handles_degenerate_spectra() {
        let m = ComplexMatrix::identity(4).scale_re(0.25);
        let (vals, _) = m.eigen_hermitian();
        assert!(vals.iter().all(|&v| (v - 0.25).abs() < 1e-12));
    }

    #[test]
    fn spectral_norm_of_simple_matrices() {
        assert!((ComplexMatrix::from_real_diag(&[3.0, -5.0]).spectral_norm() - 5.0).abs() < 1e-8);
        assert_eq!(ComplexMatrix::zeros(3).spectral_norm(), 0.0);
        let sigma_x = ComplexMatrix::from_rows(&[
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(1.0, 0.0), c(0.0, 0.0)],
        ]);
        assert!((sigma_x.spectral_norm() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn spectral_norm_handles_degenerate_top_eigenvalues() {
        // eigenvalues ±2: M†M has a doubly degenerate top eigenvalue 4
        let m = ComplexMatrix::from_rows(&[
            vec![c(0.0, 0.0), c(2.0, 0.0)],
            vec![c(2.0, 0.0), c(0.0, 0.0)],
        ]);
        assert!((m.spectral_norm() - 2.0).abs() < 1e-8);
    }

    #[test]
    fn outer_product_is_rank_one() {
        let v = [c(1.0, 0.0), c(0.0, 1.0)];
        let m = ComplexMatrix::outer(&v, &v);
        assert!((m.trace().re - 2.0).abs() < 1e-15);
        assert!(m.mul(&m).max_abs_diff(&m.scale_re(2.0)) < 1e-15);
    }
}

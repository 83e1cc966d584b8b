//! Dense complex-matrix kernel.
//!
//! Everything downstream (states, channels, measures, the optimizer) runs on
//! the small set of operations defined here: complex matrix arithmetic, a
//! cyclic-Jacobi Hermitian eigendecomposition, the trace norm, direct sums,
//! Kronecker products, and PSD square roots. Matrices are dense, row-major,
//! and deliberately small (dimensions up to a few dozen).

use num_complex::Complex64;
use thiserror::Error;

/// Shorthand for the scalar type used throughout the crate.
pub type C64 = Complex64;

/// Largest Hermiticity defect `max_ij |a_ij - conj(a_ji)|` that is silently
/// symmetrized away; anything larger is an error.
pub const HERMITICITY_TOL: f64 = 1e-8;

/// The Jacobi sweep stops once the off-diagonal Frobenius mass falls below
/// this fraction of the input Frobenius norm.
pub const JACOBI_SWEEP_TOL: f64 = 1e-13;

/// Hard cap on Jacobi sweeps. Matrices in this crate (dimension <= 64)
/// converge in well under ten sweeps.
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigenvalues below `-PSD_EIG_TOL` make `mat_sqrt_psd` fail; negative
/// round-off above it is clipped to zero.
pub const PSD_EIG_TOL: f64 = 1e-8;

/// Positive eigenvalues below this fraction of the largest eigenvalue are
/// treated as exact zeros in `mat_sqrt_psd`. Without this, round-off noise
/// of order 1e-16 turns into sqrt-noise of order 1e-8 in the result.
pub const SQRT_RELATIVE_CLIP: f64 = 1e-12;

/// Errors from the matrix kernel.
#[derive(Debug, Clone, Error)]
pub enum MatError {
    #[error("matrix is not square: {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian: asymmetry {found:.3e} exceeds tolerance {tol:.3e}")]
    NotHermitian { found: f64, tol: f64 },
    #[error("matrix is not positive semidefinite: eigenvalue {0:.6e}")]
    NotPsd(f64),
    #[error("matrix has a non-finite entry at ({0}, {1})")]
    NonFinite(usize, usize),
}

/// Dense complex matrix, row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    entries: Vec<C64>,
}

impl CMat {
    /// All-zero matrix of the given shape.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat {
            rows,
            cols,
            entries: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    /// Identity matrix of dimension `n`.
    pub fn identity(n: usize) -> Self {
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, C64::new(1.0, 0.0));
        }
        m
    }

    /// Builds a matrix from a row-major entry vector.
    pub fn from_entries(rows: usize, cols: usize, entries: Vec<C64>) -> Self {
        assert_eq!(entries.len(), rows * cols, "entry count must match shape");
        CMat { rows, cols, entries }
    }

    /// Builds a matrix entry-by-entry from a closure.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        CMat { rows, cols, entries }
    }

    /// Builds a square matrix from a row-major slice of real values.
    pub fn from_real(n: usize, data: &[f64]) -> Self {
        assert_eq!(data.len(), n * n, "entry count must match shape");
        CMat::from_fn(n, n, |i, j| C64::new(data[i * n + j], 0.0))
    }

    /// Diagonal matrix with the given real diagonal.
    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        CMat::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(diag[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Row-major entry slice.
    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.entries[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.entries[i * self.cols + j] = v;
    }

    /// Entrywise sum.
    pub fn add(&self, other: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a + b)
            .collect();
        CMat {
            rows: self.rows,
            cols: self.cols,
            entries,
        }
    }

    /// Entrywise difference.
    pub fn sub(&self, other: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a - b)
            .collect();
        CMat {
            rows: self.rows,
            cols: self.cols,
            entries,
        }
    }

    /// Scalar multiple.
    pub fn scale(&self, k: C64) -> CMat {
        CMat {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|a| a * k).collect(),
        }
    }

    /// Real scalar multiple.
    pub fn scale_re(&self, k: f64) -> CMat {
        self.scale(C64::new(k, 0.0))
    }

    /// Matrix product `self * other`.
    pub fn matmul(&self, other: &CMat) -> CMat {
        assert_eq!(self.cols, other.rows, "inner dimensions must agree");
        let mut out = CMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self.get(i, k);
                if aik == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.get(i, j) + aik * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    /// Trace (sum of diagonal entries). Requires a square matrix.
    pub fn trace(&self) -> C64 {
        assert!(self.is_square(), "trace requires a square matrix");
        (0..self.rows).map(|i| self.get(i, i)).sum()
    }

    /// Diagonal entries as a vector.
    pub fn diag(&self) -> Vec<C64> {
        assert!(self.is_square(), "diag requires a square matrix");
        (0..self.rows).map(|i| self.get(i, i)).collect()
    }

    /// Frobenius norm.
    pub fn fro_norm(&self) -> f64 {
        self.entries.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    /// Largest Hermiticity defect `max_ij |a_ij - conj(a_ji)|`.
    pub fn max_asymmetry(&self) -> f64 {
        assert!(self.is_square(), "asymmetry requires a square matrix");
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                let d = (self.get(i, j) - self.get(j, i).conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Hermitian part `(m + m†) / 2`.
    pub fn symmetrized(&self) -> CMat {
        assert!(self.is_square(), "symmetrization requires a square matrix");
        CMat::from_fn(self.rows, self.cols, |i, j| {
            (self.get(i, j) + self.get(j, i).conj()) * 0.5
        })
    }

    /// Index of the first non-finite entry, if any.
    pub fn first_non_finite(&self) -> Option<(usize, usize)> {
        for i in 0..self.rows {
            for j in 0..self.cols {
                let v = self.get(i, j);
                if !v.re.is_finite() || !v.im.is_finite() {
                    return Some((i, j));
                }
            }
        }
        None
    }
}

/// Eigendecomposition of a Hermitian matrix: real eigenvalues in ascending
/// order and a unitary whose columns are the matching eigenvectors.
#[derive(Debug, Clone)]
pub struct EigDecomp {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMat,
}

impl EigDecomp {
    /// Rebuilds `V diag(lambda) V†`; used by tests and the PSD square root.
    pub fn reconstruct(&self) -> CMat {
        let n = self.eigenvalues.len();
        let v = &self.eigenvectors;
        CMat::from_fn(n, n, |i, j| {
            (0..n)
                .map(|s| v.get(i, s) * self.eigenvalues[s] * v.get(j, s).conj())
                .sum()
        })
    }
}

/// Hermitian eigendecomposition with default tolerances.
pub fn herm_eig(m: &CMat) -> Result<EigDecomp, MatError> {
    herm_eig_with(m, HERMITICITY_TOL, JACOBI_SWEEP_TOL, JACOBI_MAX_SWEEPS)
}

/// Hermitian eigendecomposition by cyclic Jacobi rotations.
///
/// The input is symmetrized as `(m + m†) / 2` first; an asymmetry larger
/// than `asym_tol` is an error rather than something to paper over. Sweeps
/// stop once the off-diagonal Frobenius mass drops below
/// `sweep_tol * ||m||_F` or after `max_sweeps` sweeps.
pub fn herm_eig_with(
    m: &CMat,
    asym_tol: f64,
    sweep_tol: f64,
    max_sweeps: usize,
) -> Result<EigDecomp, MatError> {
    if !m.is_square() {
        return Err(MatError::NonSquare {
            rows: m.rows,
            cols: m.cols,
        });
    }
    if let Some((i, j)) = m.first_non_finite() {
        return Err(MatError::NonFinite(i, j));
    }
    let asym = m.max_asymmetry();
    if asym > asym_tol {
        return Err(MatError::NotHermitian {
            found: asym,
            tol: asym_tol,
        });
    }

    let n = m.rows;
    let mut a = m.symmetrized();
    let mut v = CMat::identity(n);
    let fro = a.fro_norm();
    let target = sweep_tol * fro;
    // Rotations on entries this small cannot affect the stopping criterion.
    let rot_eps = if n > 0 {
        target / (10.0 * (n * n) as f64)
    } else {
        0.0
    };

    for _ in 0..max_sweeps {
        if off_diag_fro(&a) <= target {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let b = a.get(p, q);
                let ab = b.norm();
                if ab <= rot_eps {
                    continue;
                }
                let app = a.get(p, p).re;
                let aqq = a.get(q, q).re;
                // Phase-reduce to a real 2x2 rotation: with b = |b| e^{i phi},
                // the annihilating rotation has c real and s = sigma e^{i phi}.
                let tau = (aqq - app) / (2.0 * ab);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sigma = t * c;
                let phase = b / ab;
                let s = phase * sigma;

                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    let new_akp = akp * c - akq * s.conj();
                    let new_akq = akp * s + akq * c;
                    a.set(k, p, new_akp);
                    a.set(p, k, new_akp.conj());
                    a.set(k, q, new_akq);
                    a.set(q, k, new_akq.conj());
                }
                let shift = 2.0 * c * sigma * ab;
                a.set(p, p, C64::new(app * c * c - shift + aqq * sigma * sigma, 0.0));
                a.set(q, q, C64::new(app * sigma * sigma + shift + aqq * c * c, 0.0));
                a.set(p, q, C64::new(0.0, 0.0));
                a.set(q, p, C64::new(0.0, 0.0));

                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, vkp * c - vkq * s.conj());
                    v.set(k, q, vkp * s + vkq * c);
                }
            }
        }
    }

    // Sort eigenpairs ascending by eigenvalue.
    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a.get(i, i).re).collect();
    order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let eigenvectors = CMat::from_fn(n, n, |i, j| v.get(i, order[j]));

    Ok(EigDecomp {
        eigenvalues,
        eigenvectors,
    })
}

fn off_diag_fro(a: &CMat) -> f64 {
    let n = a.rows();
    let mut sum = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            sum += 2.0 * a.get(i, j).norm_sqr();
        }
    }
    sum.sqrt()
}

/// Trace norm (sum of absolute eigenvalues) of a Hermitian matrix.
pub fn trace_norm(m: &CMat) -> Result<f64, MatError> {
    let eig = herm_eig(m)?;
    Ok(eig.eigenvalues.iter().map(|l| l.abs()).sum())
}

/// Block-diagonal direct sum `a ⊕ b`. Either block may be empty (0x0).
pub fn direct_sum(a: &CMat, b: &CMat) -> CMat {
    let rows = a.rows() + b.rows();
    let cols = a.cols() + b.cols();
    let mut out = CMat::zeros(rows, cols);
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            out.set(i, j, a.get(i, j));
        }
    }
    for i in 0..b.rows() {
        for j in 0..b.cols() {
            out.set(a.rows() + i, a.cols() + j, b.get(i, j));
        }
    }
    out
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let rows = a.rows() * b.rows();
    let cols = a.cols() * b.cols();
    CMat::from_fn(rows, cols, |i, j| {
        let (ia, ib) = (i / b.rows(), i % b.rows());
        let (ja, jb) = (j / b.cols(), j % b.cols());
        a.get(ia, ja) * b.get(ib, jb)
    })
}

/// Principal square root of a PSD Hermitian matrix.
///
/// Small negative round-off eigenvalues are clipped to zero; anything below
/// `-PSD_EIG_TOL` is a positivity failure.
pub fn mat_sqrt_psd(m: &CMat) -> Result<CMat, MatError> {
    let eig = herm_eig(m)?;
    if let Some(&min) = eig
        .eigenvalues
        .first()
        .filter(|&&l| l < -PSD_EIG_TOL)
    {
        return Err(MatError::NotPsd(min));
    }
    let lmax = eig.eigenvalues.last().copied().unwrap_or(0.0).max(0.0);
    let clip = SQRT_RELATIVE_CLIP * lmax;
    let roots: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&l| if l > clip { l.sqrt() } else { 0.0 })
        .collect();
    let n = roots.len();
    let v = &eig.eigenvectors;
    // Build the upper triangle and mirror it so the result is exactly Hermitian.
    let mut out = CMat::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let val: C64 = (0..n)
                .map(|s| v.get(i, s) * roots[s] * v.get(j, s).conj())
                .sum();
            if i == j {
                out.set(i, i, C64::new(val.re, 0.0));
            } else {
                out.set(i, j, val);
                out.set(j, i, val.conj());
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "expected {b}, got {a} (tol {tol})");
    }

    #[test]
    fn identity_eig_is_all_ones() {
        let eig = herm_eig(&CMat::identity(4)).unwrap();
        for l in &eig.eigenvalues {
            assert_close(*l, 1.0, 1e-14);
        }
    }

    #[test]
    fn diagonal_eigenvalues_sorted_ascending() {
        let eig = herm_eig(&CMat::from_diag(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(eig.eigenvalues, vec![1.0, 2.0, 3.0]);
        // Column j of V must be the basis vector for the sorted eigenvalue.
        assert_close(eig.eigenvectors.get(1, 0).norm(), 1.0, 1e-14);
        assert_close(eig.eigenvectors.get(2, 1).norm(), 1.0, 1e-14);
        assert_close(eig.eigenvectors.get(0, 2).norm(), 1.0, 1e-14);
    }

    #[test]
    fn zero_matrix_eig() {
        let eig = herm_eig(&CMat::zeros(3, 3)).unwrap();
        assert_eq!(eig.eigenvalues, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn real_symmetric_2x2() {
        // [[0, 1/2], [1/2, 0]] has eigenvalues -1/2, 1/2.
        let m = CMat::from_real(2, &[0.0, 0.5, 0.5, 0.0]);
        let eig = herm_eig(&m).unwrap();
        assert_close(eig.eigenvalues[0], -0.5, 1e-14);
        assert_close(eig.eigenvalues[1], 0.5, 1e-14);
    }

    #[test]
    fn complex_hermitian_2x2() {
        // [[2, i], [-i, 2]] has eigenvalues 1 and 3.
        let m = CMat::from_entries(
            2,
            2,
            vec![c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)],
        );
        let eig = herm_eig(&m).unwrap();
        assert_close(eig.eigenvalues[0], 1.0, 1e-13);
        assert_close(eig.eigenvalues[1], 3.0, 1e-13);
    }

    #[test]
    fn complex_hermitian_3x3_block() {
        // [[1, i, 0], [-i, 1, 0], [0, 0, 5]] has eigenvalues 0, 2, 5.
        let m = CMat::from_entries(
            3,
            3,
            vec![
                c(1.0, 0.0),
                c(0.0, 1.0),
                c(0.0, 0.0),
                c(0.0, -1.0),
                c(1.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(5.0, 0.0),
            ],
        );
        let eig = herm_eig(&m).unwrap();
        assert_close(eig.eigenvalues[0], 0.0, 1e-13);
        assert_close(eig.eigenvalues[1], 2.0, 1e-13);
        assert_close(eig.eigenvalues[2], 5.0, 1e-13);
    }

    #[test]
    fn eigenvectors_are_unitary_and_reconstruct() {
        // A fixed dense Hermitian 4x4 with no special structure.
        let m = CMat::from_fn(4, 4, |i, j| {
            let re = ((i * 7 + j * 3) % 5) as f64 / 5.0;
            let im = (i as f64 - j as f64) * 0.3;
            c(re, im)
        })
        .symmetrized();
        let eig = herm_eig(&m).unwrap();
        let v = &eig.eigenvectors;
        let gram = v.adjoint().matmul(v);
        assert!(gram.sub(&CMat::identity(4)).max_abs() < 1e-12);
        assert!(eig.reconstruct().sub(&m).max_abs() < 1e-12);
    }

    #[test]
    fn non_square_rejected() {
        let m = CMat::zeros(2, 3);
        assert!(matches!(
            herm_eig(&m),
            Err(MatError::NonSquare { rows: 2, cols: 3 })
        ));
    }

    #[test]
    fn non_hermitian_rejected() {
        let m = CMat::from_real(2, &[0.0, 1.0, 0.0, 0.0]);
        match herm_eig(&m) {
            Err(MatError::NotHermitian { found, .. }) => assert_close(found, 1.0, 1e-14),
            other => panic!("expected NotHermitian, got {other:?}"),
        }
    }

    #[test]
    fn small_asymmetry_is_symmetrized() {
        let mut m = CMat::from_real(2, &[1.0, 0.5, 0.5, 1.0]);
        m.set(0, 1, c(0.5 + 1e-10, 0.0));
        let eig = herm_eig(&m).unwrap();
        assert_close(eig.eigenvalues[0], 0.5, 1e-9);
        assert_close(eig.eigenvalues[1], 1.5, 1e-9);
    }

    #[test]
    fn non_finite_rejected() {
        let mut m = CMat::identity(2);
        m.set(1, 0, c(f64::NAN, 0.0));
        assert!(matches!(herm_eig(&m), Err(MatError::NonFinite(1, 0))));
    }

    #[test]
    fn trace_norm_of_sign_diagonal() {
        assert_close(trace_norm(&CMat::from_diag(&[1.0, -1.0])).unwrap(), 2.0, 1e-14);
    }

    #[test]
    fn trace_norm_of_offdiagonal_half() {
        // Uniform pure state minus the maximally mixed state in dimension 2.
        let m = CMat::from_real(2, &[0.0, 0.5, 0.5, 0.0]);
        assert_close(trace_norm(&m).unwrap(), 1.0, 1e-13);
    }

    #[test]
    fn trace_norm_rejects_non_hermitian() {
        let m = CMat::from_real(2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(trace_norm(&m), Err(MatError::NotHermitian { .. })));
    }

    #[test]
    fn direct_sum_places_blocks() {
        let a = CMat::from_real(2, &[1.0, 2.0, 3.0, 4.0]);
        let b = CMat::from_real(1, &[5.0]);
        let s = direct_sum(&a, &b);
        assert_eq!((s.rows(), s.cols()), (3, 3));
        assert_eq!(s.get(1, 1), c(4.0, 0.0));
        assert_eq!(s.get(2, 2), c(5.0, 0.0));
        assert_eq!(s.get(0, 2), c(0.0, 0.0));
        assert_eq!(s.get(2, 0), c(0.0, 0.0));
    }

    #[test]
    fn direct_sum_with_empty_block_is_identity_on_shapes() {
        let a = CMat::from_real(2, &[1.0, 2.0, 3.0, 4.0]);
        let empty = CMat::zeros(0, 0);
        assert_eq!(direct_sum(&a, &empty), a);
        assert_eq!(direct_sum(&empty, &a), a);
    }

    #[test]
    fn kron_of_paulis() {
        // sigma_x ⊗ sigma_z
        let sx = CMat::from_real(2, &[0.0, 1.0, 1.0, 0.0]);
        let sz = CMat::from_diag(&[1.0, -1.0]);
        let k = kron(&sx, &sz);
        assert_eq!(k.get(0, 2), c(1.0, 0.0));
        assert_eq!(k.get(1, 3), c(-1.0, 0.0));
        assert_eq!(k.get(2, 0), c(1.0, 0.0));
        assert_eq!(k.get(3, 1), c(-1.0, 0.0));
        assert_eq!(k.get(0, 0), c(0.0, 0.0));
    }

    #[test]
    fn kron_shapes_multiply() {
        let a = CMat::zeros(2, 3);
        let b = CMat::zeros(4, 5);
        let k = kron(&a, &b);
        assert_eq!((k.rows(), k.cols()), (8, 15));
    }

    #[test]
    fn sqrt_of_diagonal() {
        let s = mat_sqrt_psd(&CMat::from_diag(&[4.0, 9.0])).unwrap();
        assert!(s.sub(&CMat::from_diag(&[2.0, 3.0])).max_abs() < 1e-13);
    }

    #[test]
    fn sqrt_of_projector_is_itself() {
        // Rank-1 projector onto the uniform vector in dimension 3.
        let third = 1.0 / 3.0;
        let p = CMat::from_fn(3, 3, |_, _| c(third, 0.0));
        let s = mat_sqrt_psd(&p).unwrap();
        assert!(s.sub(&p).max_abs() < 1e-12);
        assert!(s.matmul(&s).sub(&p).max_abs() < 1e-12);
    }

    #[test]
    fn sqrt_rejects_indefinite() {
        // [[0.5, 0.6], [0.6, 0.5]] has eigenvalues -0.1 and 1.1.
        let m = CMat::from_real(2, &[0.5, 0.6, 0.6, 0.5]);
        match mat_sqrt_psd(&m) {
            Err(MatError::NotPsd(l)) => assert_close(l, -0.1, 1e-12),
            other => panic!("expected NotPsd, got {other:?}"),
        }
    }

    #[test]
    fn sqrt_clips_tiny_negative_roundoff() {
        let m = CMat::from_diag(&[1.0, -1e-12]);
        let s = mat_sqrt_psd(&m).unwrap();
        assert_close(s.get(1, 1).re, 0.0, 1e-15);
    }

    // ---- property tests ----

    prop_compose! {
        fn arb_hermitian(max_dim: usize)
            (dim in 1..=max_dim)
            (entries in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim * dim),
             dim in Just(dim))
            -> CMat
        {
            CMat::from_fn(dim, dim, |i, j| C64::new(entries[i * dim + j].0, entries[i * dim + j].1))
                .symmetrized()
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn prop_eig_reconstructs(m in arb_hermitian(6)) {
            let eig = herm_eig(&m).unwrap();
            prop_assert!(eig.reconstruct().sub(&m).max_abs() < 1e-11);
        }

        #[test]
        fn prop_eig_vectors_unitary(m in arb_hermitian(6)) {
            let eig = herm_eig(&m).unwrap();
            let v = &eig.eigenvectors;
            let gram = v.adjoint().matmul(v);
            prop_assert!(gram.sub(&CMat::identity(m.rows())).max_abs() < 1e-11);
        }

        #[test]
        fn prop_trace_preserved(m in arb_hermitian(6)) {
            let eig = herm_eig(&m).unwrap();
            let sum: f64 = eig.eigenvalues.iter().sum();
            prop_assert!((sum - m.trace().re).abs() < 1e-11);
        }

        #[test]
        fn prop_trace_norm_triangle(a in arb_hermitian(5), b in arb_hermitian(5)) {
            prop_assume!(a.rows() == b.rows());
            let lhs = trace_norm(&a.add(&b)).unwrap();
            let rhs = trace_norm(&a).unwrap() + trace_norm(&b).unwrap();
            prop_assert!(lhs <= rhs + 1e-10);
        }

        #[test]
        fn prop_trace_norm_additive_on_direct_sum(a in arb_hermitian(4), b in arb_hermitian(4)) {
            let lhs = trace_norm(&direct_sum(&a, &b)).unwrap();
            let rhs = trace_norm(&a).unwrap() + trace_norm(&b).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-10);
        }

        #[test]
        fn prop_sqrt_squares_back(m in arb_hermitian(5)) {
            // m† m is PSD for any m; here m is Hermitian so m^2 works too.
            let psd = m.matmul(&m);
            let s = mat_sqrt_psd(&psd).unwrap();
            prop_assert!(s.matmul(&s).sub(&psd).max_abs() < 1e-10);
        }
    }
}

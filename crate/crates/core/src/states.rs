//! Density states and the incoherent-state machinery built on them.
//!
//! A `DensityState` is a validated density matrix: Hermitian, unit trace,
//! positive semidefinite (all within small tolerances). The free states of
//! the theory are the diagonal ones in the fixed reference basis; `dephase`
//! projects onto them and `is_incoherent` tests membership.

use crate::matcore::{self, CMat, C64, MatError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

/// Default validation tolerance for density-matrix invariants.
pub const DENSITY_TOL: f64 = 1e-10;

/// Default threshold below which off-diagonal moduli count as zero.
pub const INCOHERENCE_TOL: f64 = 1e-9;

/// Mixture weights must sum to 1 within this tolerance.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Errors from state validation and construction.
#[derive(Debug, Clone, Error)]
pub enum StateError {
    #[error("matrix is not square: {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian: asymmetry {found:.3e} exceeds tolerance {tol:.3e}")]
    NotHermitian { found: f64, tol: f64 },
    #[error("matrix trace is not 1: |trace - 1| = {0:.3e}")]
    NotUnitTrace(f64),
    #[error("matrix is not positive semidefinite: eigenvalue {0:.6e}")]
    NotPsd(f64),
    #[error("matrix has a non-finite entry at ({0}, {1})")]
    NonFinite(usize, usize),
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("rank {rank} is out of range for dimension {dim}")]
    RankOutOfRange { rank: usize, dim: usize },
    #[error("invalid block specification: {0}")]
    BadBlockSpec(String),
}

impl From<MatError> for StateError {
    fn from(e: MatError) -> Self {
        match e {
            MatError::NonSquare { rows, cols } => StateError::NonSquare { rows, cols },
            MatError::NotHermitian { found, tol } => StateError::NotHermitian { found, tol },
            MatError::NotPsd(l) => StateError::NotPsd(l),
            MatError::NonFinite(i, j) => StateError::NonFinite(i, j),
        }
    }
}

/// A validated density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    dim: usize,
    mat: CMat,
}

impl DensityState {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mat(&self) -> &CMat {
        &self.mat
    }

    /// Diagonal entries as real probabilities.
    pub fn diag_probs(&self) -> Vec<f64> {
        self.mat.diag().iter().map(|v| v.re).collect()
    }

    /// Purity `Tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        self.mat.matmul(&self.mat).trace().re
    }

    /// Constructor for matrices whose invariants hold by construction
    /// (block mixtures of validated states, dephased states, and the like).
    pub(crate) fn from_parts(dim: usize, mat: CMat) -> Self {
        debug_assert_eq!(mat.rows(), dim);
        debug_assert_eq!(mat.cols(), dim);
        DensityState { dim, mat }
    }
}

/// Validates a matrix as a density matrix.
///
/// Checks, in order: squareness, finiteness, Hermiticity (asymmetry at most
/// `tol`), unit trace (`|tr - 1| <= tol`), and positivity (smallest
/// eigenvalue at least `-tol`).
pub fn make_density(mat: CMat, tol: f64) -> Result<DensityState, StateError> {
    if !mat.is_square() {
        return Err(StateError::NonSquare {
            rows: mat.rows(),
            cols: mat.cols(),
        });
    }
    if mat.rows() == 0 {
        return Err(StateError::ZeroDimension);
    }
    if let Some((i, j)) = mat.first_non_finite() {
        return Err(StateError::NonFinite(i, j));
    }
    let asym = mat.max_asymmetry();
    if asym > tol {
        return Err(StateError::NotHermitian { found: asym, tol });
    }
    let trace_dev = (mat.trace() - C64::new(1.0, 0.0)).norm();
    if trace_dev > tol {
        return Err(StateError::NotUnitTrace(trace_dev));
    }
    let eig = matcore::herm_eig_with(
        &mat,
        tol.max(matcore::HERMITICITY_TOL),
        matcore::JACOBI_SWEEP_TOL,
        matcore::JACOBI_MAX_SWEEPS,
    )?;
    let min_eig = eig.eigenvalues.first().copied().unwrap_or(0.0);
    if min_eig < -tol {
        return Err(StateError::NotPsd(min_eig));
    }
    let dim = mat.rows();
    Ok(DensityState { dim, mat })
}

/// Maximally coherent state of dimension `d`: every entry equals `1/d`.
pub fn max_coherent(d: usize) -> Result<DensityState, StateError> {
    if d == 0 {
        return Err(StateError::ZeroDimension);
    }
    let v = 1.0 / d as f64;
    let mat = CMat::from_fn(d, d, |_, _| C64::new(v, 0.0));
    Ok(DensityState::from_parts(d, mat))
}

/// A weighted list of density blocks for building block-diagonal mixtures.
#[derive(Debug, Clone)]
pub struct BlockSpec {
    weights: Vec<f64>,
    blocks: Vec<DensityState>,
}

impl BlockSpec {
    /// Validates weights (nonnegative, summing to 1 within `WEIGHT_SUM_TOL`)
    /// against a matching, nonempty list of blocks.
    pub fn new(weights: Vec<f64>, blocks: Vec<DensityState>) -> Result<Self, StateError> {
        if blocks.is_empty() {
            return Err(StateError::BadBlockSpec("no blocks given".into()));
        }
        if weights.len() != blocks.len() {
            return Err(StateError::BadBlockSpec(format!(
                "{} weights for {} blocks",
                weights.len(),
                blocks.len()
            )));
        }
        for &w in &weights {
            if !w.is_finite() || w < 0.0 {
                return Err(StateError::BadBlockSpec(format!(
                    "weight {w} is not a finite nonnegative number"
                )));
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(StateError::BadBlockSpec(format!(
                "weights sum to {sum}, not 1"
            )));
        }
        Ok(BlockSpec { weights, blocks })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn blocks(&self) -> &[DensityState] {
        &self.blocks
    }

    pub fn total_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.dim()).sum()
    }
}

/// Block-diagonal mixture `p_1 rho_1 ⊕ p_2 rho_2 ⊕ ...`.
pub fn block_mix(spec: &BlockSpec) -> DensityState {
    let mut mat = CMat::zeros(0, 0);
    for (w, b) in spec.weights.iter().zip(&spec.blocks) {
        mat = matcore::direct_sum(&mat, &b.mat().scale_re(*w));
    }
    DensityState::from_parts(spec.total_dim(), mat)
}

/// Projection onto the diagonal: zeroes every off-diagonal entry.
pub fn dephase(rho: &DensityState) -> DensityState {
    let d = rho.dim();
    let mat = CMat::from_fn(d, d, |i, j| {
        if i == j {
            C64::new(rho.mat().get(i, i).re, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    DensityState::from_parts(d, mat)
}

/// True when every off-diagonal modulus is at most `tol`.
pub fn is_incoherent(rho: &DensityState, tol: f64) -> bool {
    let d = rho.dim();
    for i in 0..d {
        for j in 0..d {
            if i != j && rho.mat().get(i, j).norm() > tol {
                return false;
            }
        }
    }
    true
}

/// Draws one standard complex Gaussian (independent N(0,1) parts).
pub(crate) fn standard_complex(rng: &mut ChaCha8Rng) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im)
}

/// Random density matrix of the given rank: `G G† / Tr(G G†)` for a
/// `d x rank` matrix of independent complex Gaussians. Deterministic in
/// `seed`.
pub fn random_density(d: usize, rank: usize, seed: u64) -> Result<DensityState, StateError> {
    if d == 0 {
        return Err(StateError::ZeroDimension);
    }
    if rank == 0 || rank > d {
        return Err(StateError::RankOutOfRange { rank, dim: d });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = CMat::from_fn(d, rank, |_, _| standard_complex(&mut rng));
    // Build G G† exactly Hermitian: fill the upper triangle, mirror the rest.
    let mut mat = CMat::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let v: C64 = (0..rank).map(|k| g.get(i, k) * g.get(j, k).conj()).sum();
            if i == j {
                mat.set(i, i, C64::new(v.re, 0.0));
            } else {
                mat.set(i, j, v);
                mat.set(j, i, v.conj());
            }
        }
    }
    let tr = mat.trace().re;
    let mat = mat.scale_re(1.0 / tr);
    make_density(mat, DENSITY_TOL)
}

/// The 5-dimensional two-block state exhibiting the additivity failure of
/// the plain trace-norm quantifier, together with its blocks: an equal
/// mixture of the maximally coherent state on indices {0,1} and the
/// maximally coherent state on indices {2,3,4}.
pub fn counterexample_state() -> (DensityState, DensityState, DensityState) {
    let rho1 = max_coherent(2).expect("dimension 2 is valid");
    let rho2 = max_coherent(3).expect("dimension 3 is valid");
    let spec = BlockSpec::new(vec![0.5, 0.5], vec![rho1.clone(), rho2.clone()])
        .expect("two equal weights form a valid mixture");
    (block_mix(&spec), rho1, rho2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "expected {b}, got {a} (tol {tol})");
    }

    #[test]
    fn accepts_maximally_mixed() {
        let rho = make_density(CMat::from_diag(&[0.5, 0.5]), DENSITY_TOL).unwrap();
        assert_eq!(rho.dim(), 2);
    }

    #[test]
    fn rejects_wrong_trace() {
        match make_density(CMat::from_diag(&[0.7, 0.4]), DENSITY_TOL) {
            Err(StateError::NotUnitTrace(d)) => assert_close(d, 0.1, 1e-12),
            other => panic!("expected NotUnitTrace, got {other:?}"),
        }
    }

    #[test]
    fn rejects_indefinite() {
        let m = CMat::from_real(2, &[0.5, 0.6, 0.6, 0.5]);
        match make_density(m, DENSITY_TOL) {
            Err(StateError::NotPsd(l)) => assert_close(l, -0.1, 1e-12),
            other => panic!("expected NotPsd, got {other:?}"),
        }
    }

    #[test]
    fn rejects_non_square_and_non_hermitian() {
        assert!(matches!(
            make_density(CMat::zeros(2, 3), DENSITY_TOL),
            Err(StateError::NonSquare { .. })
        ));
        let m = CMat::from_real(2, &[0.5, 0.2, 0.0, 0.5]);
        assert!(matches!(
            make_density(m, DENSITY_TOL),
            Err(StateError::NotHermitian { .. })
        ));
    }

    #[test]
    fn rejects_non_finite() {
        let mut m = CMat::from_diag(&[0.5, 0.5]);
        m.set(0, 1, C64::new(f64::INFINITY, 0.0));
        assert!(matches!(
            make_density(m, DENSITY_TOL),
            Err(StateError::NonFinite(0, 1))
        ));
    }

    #[test]
    fn max_coherent_is_pure_uniform() {
        let rho = max_coherent(3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_close(rho.mat().get(i, j).re, 1.0 / 3.0, 1e-15);
                assert_close(rho.mat().get(i, j).im, 0.0, 0.0);
            }
        }
        assert_close(rho.purity(), 1.0, 1e-14);
        assert!(matches!(max_coherent(0), Err(StateError::ZeroDimension)));
    }

    #[test]
    fn dephased_max_coherent_is_maximally_mixed() {
        let rho = dephase(&max_coherent(4).unwrap());
        for i in 0..4 {
            assert_close(rho.mat().get(i, i).re, 0.25, 1e-15);
        }
        assert!(is_incoherent(&rho, INCOHERENCE_TOL));
    }

    #[test]
    fn dephase_is_idempotent_and_keeps_diagonal() {
        let rho = random_density(4, 4, 7).unwrap();
        let d1 = dephase(&rho);
        let d2 = dephase(&d1);
        assert_eq!(d1, d2);
        assert_eq!(rho.diag_probs(), d1.diag_probs());
    }

    #[test]
    fn incoherence_threshold_is_inclusive() {
        let mut m = CMat::from_diag(&[0.5, 0.5]);
        m.set(0, 1, C64::new(1e-9, 0.0));
        m.set(1, 0, C64::new(1e-9, 0.0));
        let rho = make_density(m, DENSITY_TOL).unwrap();
        assert!(is_incoherent(&rho, 1e-9));
        assert!(!is_incoherent(&rho, 0.9e-9));
        assert!(!is_incoherent(&max_coherent(2).unwrap(), INCOHERENCE_TOL));
    }

    #[test]
    fn block_spec_validation() {
        let b = max_coherent(2).unwrap();
        assert!(matches!(
            BlockSpec::new(vec![], vec![]),
            Err(StateError::BadBlockSpec(_))
        ));
        assert!(matches!(
            BlockSpec::new(vec![0.5], vec![b.clone(), b.clone()]),
            Err(StateError::BadBlockSpec(_))
        ));
        assert!(matches!(
            BlockSpec::new(vec![0.6, 0.3], vec![b.clone(), b.clone()]),
            Err(StateError::BadBlockSpec(_))
        ));
        assert!(matches!(
            BlockSpec::new(vec![1.5, -0.5], vec![b.clone(), b.clone()]),
            Err(StateError::BadBlockSpec(_))
        ));
        assert!(BlockSpec::new(vec![0.5, 0.5], vec![b.clone(), b]).is_ok());
    }

    #[test]
    fn block_mix_eigenvalues_are_weighted_unions() {
        // One pure 1x1 block and one maximally coherent 2x2 block:
        // eigenvalues must be {0.3} ∪ 0.7 * {0, 1} = {0, 0.3, 0.7}.
        let b1 = make_density(CMat::from_diag(&[1.0]), DENSITY_TOL).unwrap();
        let b2 = max_coherent(2).unwrap();
        let spec = BlockSpec::new(vec![0.3, 0.7], vec![b1, b2]).unwrap();
        let mix = block_mix(&spec);
        let eig = matcore::herm_eig(mix.mat()).unwrap();
        let expected = [0.0, 0.3, 0.7];
        for (got, want) in eig.eigenvalues.iter().zip(expected) {
            assert_close(*got, want, 1e-12);
        }
    }

    #[test]
    fn random_density_is_deterministic_per_seed() {
        let a = random_density(3, 2, 42).unwrap();
        let b = random_density(3, 2, 42).unwrap();
        let c = random_density(3, 2, 43).unwrap();
        assert_eq!(a, b);
        assert!(a.mat().sub(c.mat()).max_abs() > 1e-3);
    }

    #[test]
    fn random_density_respects_rank() {
        let rho = random_density(4, 2, 5).unwrap();
        let eig = matcore::herm_eig(rho.mat()).unwrap();
        let positive = eig.eigenvalues.iter().filter(|&&l| l > 1e-9).count();
        assert_eq!(positive, 2);
        assert!(matches!(
            random_density(3, 4, 0),
            Err(StateError::RankOutOfRange { .. })
        ));
        assert!(matches!(
            random_density(3, 0, 0),
            Err(StateError::RankOutOfRange { .. })
        ));
        assert!(matches!(
            random_density(0, 1, 0),
            Err(StateError::ZeroDimension)
        ));
    }

    #[test]
    fn counterexample_entries_are_exact() {
        let (rho, rho1, rho2) = counterexample_state();
        assert_eq!(rho.dim(), 5);
        assert_eq!(rho1.dim(), 2);
        assert_eq!(rho2.dim(), 3);
        for i in 0..2 {
            for j in 0..2 {
                assert_close(rho.mat().get(i, j).re, 0.25, 1e-15);
            }
        }
        for i in 2..5 {
            for j in 2..5 {
                assert_close(rho.mat().get(i, j).re, 1.0 / 6.0, 1e-15);
            }
        }
        for i in 0..2 {
            for j in 2..5 {
                assert_eq!(rho.mat().get(i, j), C64::new(0.0, 0.0));
                assert_eq!(rho.mat().get(j, i), C64::new(0.0, 0.0));
            }
        }
        let diag = dephase(&rho).diag_probs();
        let expected = [0.25, 0.25, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0];
        for (got, want) in diag.iter().zip(expected) {
            assert_close(*got, want, 1e-15);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn prop_random_density_is_valid(dim in 1usize..6, seed in 0u64..500) {
            let rank = 1 + (seed as usize) % dim;
            let rho = random_density(dim, rank, seed).unwrap();
            prop_assert!(make_density(rho.mat().clone(), DENSITY_TOL).is_ok());
        }

        #[test]
        fn prop_block_mix_is_valid_density(seed in 0u64..500, w in 0.05f64..0.95) {
            let b1 = random_density(2, 2, seed).unwrap();
            let b2 = random_density(3, 1, seed.wrapping_add(1)).unwrap();
            let spec = BlockSpec::new(vec![w, 1.0 - w], vec![b1, b2]).unwrap();
            let mix = block_mix(&spec);
            prop_assert!(make_density(mix.mat().clone(), DENSITY_TOL).is_ok());
        }

        #[test]
        fn prop_block_mix_eigenvalue_union(seed in 0u64..500, w in 0.05f64..0.95) {
            let b1 = random_density(2, 2, seed).unwrap();
            let b2 = random_density(3, 2, seed.wrapping_add(9)).unwrap();
            let spec = BlockSpec::new(vec![w, 1.0 - w], vec![b1.clone(), b2.clone()]).unwrap();
            let mix = block_mix(&spec);
            let got = matcore::herm_eig(mix.mat()).unwrap().eigenvalues;
            let mut want: Vec<f64> = matcore::herm_eig(b1.mat()).unwrap().eigenvalues
                .iter().map(|l| w * l)
                .chain(matcore::herm_eig(b2.mat()).unwrap().eigenvalues.iter().map(|l| (1.0 - w) * l))
                .collect();
            want.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (g, e) in got.iter().zip(&want) {
                prop_assert!((g - e).abs() < 1e-11);
            }
        }

        #[test]
        fn prop_dephased_is_incoherent(dim in 1usize..6, seed in 0u64..500) {
            let rho = random_density(dim, dim, seed).unwrap();
            prop_assert!(is_incoherent(&dephase(&rho), 0.0));
        }
    }
}

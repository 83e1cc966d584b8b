//! Coherence quantifiers.
//!
//! Basis-relative measures map a density state to a nonnegative real that
//! vanishes exactly on diagonal states: relative entropy of coherence, the
//! l1 off-diagonal sum, and two optimizer-backed trace-norm variants.
//! Observable-relative measures quantify coherence with respect to the
//! eigenbasis of a Hermitian observable; here that is skew information.
//! `MeasureHandle` wraps each of them behind one callable interface so the
//! verification framework can treat them uniformly.

use crate::channels::Observable;
use crate::diagopt::{self, DiagConstraint, OptError};
use crate::matcore::{self, MatError};
use crate::states::DensityState;
use std::sync::Arc;
use thiserror::Error;

/// Negative round-off in provably nonnegative quantities is clipped to zero
/// up to this magnitude; anything larger indicates a kernel bug and panics.
pub const NEG_ROUNDOFF_TOL: f64 = 1e-9;

/// Errors from measure evaluation.
#[derive(Debug, Clone, Error)]
pub enum MeasureError {
    #[error(transparent)]
    Opt(#[from] OptError),
    #[error(transparent)]
    Mat(#[from] MatError),
    #[error("dimension mismatch: state has dimension {state_dim}, observable {observable_dim}")]
    DimensionMismatch {
        state_dim: usize,
        observable_dim: usize,
    },
    #[error("measure '{name}' takes {expected} input, not {got}")]
    WrongKind {
        name: String,
        expected: &'static str,
        got: &'static str,
    },
}

fn clip_roundoff(value: f64, what: &str) -> f64 {
    assert!(
        value > -NEG_ROUNDOFF_TOL,
        "{what} is negative beyond round-off: {value:.3e}"
    );
    value.max(0.0)
}

/// Shannon entropy (base 2) of a probability vector; zero entries are
/// skipped, as is negative validation slack.
pub fn shannon_entropy(probs: &[f64]) -> f64 {
    let s: f64 = probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum();
    clip_roundoff(s, "Shannon entropy")
}

/// Von Neumann entropy (base 2) via the eigenvalue spectrum.
pub fn von_neumann_entropy(rho: &DensityState) -> f64 {
    let eig = matcore::herm_eig(rho.mat()).expect("density matrices are Hermitian");
    shannon_entropy(&eig.eigenvalues)
}

/// Relative entropy of coherence: `S(dephase(rho)) - S(rho)`. The dephased
/// state is diagonal, so its entropy is the Shannon entropy of the diagonal.
pub fn relative_entropy_coherence(rho: &DensityState) -> f64 {
    let diag_entropy = shannon_entropy(&rho.diag_probs());
    clip_roundoff(
        diag_entropy - von_neumann_entropy(rho),
        "relative entropy of coherence",
    )
}

/// Sum of off-diagonal moduli.
pub fn l1_coherence(rho: &DensityState) -> f64 {
    let d = rho.dim();
    let mut sum = 0.0;
    for i in 0..d {
        for j in 0..d {
            if i != j {
                sum += rho.mat().get(i, j).norm();
            }
        }
    }
    sum
}

/// Minimal trace distance to the diagonal density matrices (optimization
/// over the probability simplex).
pub fn trace_norm_coherence(rho: &DensityState, tol: f64, seed: u64) -> Result<f64, MeasureError> {
    let r = diagopt::minimize_trace_distance(rho, DiagConstraint::Simplex, tol, seed)?;
    Ok(r.value)
}

/// Minimal trace distance to nonnegative diagonal matrices of arbitrary
/// total weight (optimization over the nonnegative orthant). Dropping the
/// unit-trace constraint restores additivity over block mixtures.
pub fn modified_trace_norm_coherence(
    rho: &DensityState,
    tol: f64,
    seed: u64,
) -> Result<f64, MeasureError> {
    let r = diagopt::minimize_trace_distance(rho, DiagConstraint::NonnegOrthant, tol, seed)?;
    Ok(r.value)
}

/// Skew information of `rho` with respect to the observable `h`:
/// `-1/2 Tr([sqrt(rho), h]^2)`. Vanishes exactly when `rho` commutes
/// with `h`.
pub fn skew_information(rho: &DensityState, h: &Observable) -> Result<f64, MeasureError> {
    if rho.dim() != h.dim() {
        return Err(MeasureError::DimensionMismatch {
            state_dim: rho.dim(),
            observable_dim: h.dim(),
        });
    }
    let s = matcore::mat_sqrt_psd(rho.mat())?;
    let commutator = s.matmul(h.mat()).sub(&h.mat().matmul(&s));
    let value = -0.5 * commutator.matmul(&commutator).trace().re;
    Ok(clip_roundoff(value, "skew information"))
}

/// What a measure consumes besides the state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureKind {
    /// Coherence relative to the fixed reference basis.
    Basis,
    /// Coherence relative to the eigenbasis of a Hermitian observable.
    Observable,
}

impl MeasureKind {
    fn as_str(self) -> &'static str {
        match self {
            MeasureKind::Basis => "basis",
            MeasureKind::Observable => "observable",
        }
    }
}

/// Evaluation context for basis measures: optimizer accuracy and seed.
/// Closed-form measures ignore it.
#[derive(Debug, Clone, Copy)]
pub struct EvalCtx {
    pub tol: f64,
    pub seed: u64,
}

impl Default for EvalCtx {
    fn default() -> Self {
        EvalCtx {
            tol: diagopt::DEFAULT_TOL,
            seed: 0,
        }
    }
}

type BasisEval = Arc<dyn Fn(&DensityState, &EvalCtx) -> Result<f64, MeasureError> + Send + Sync>;
type ObservableEval =
    Arc<dyn Fn(&DensityState, &Observable) -> Result<f64, MeasureError> + Send + Sync>;

#[derive(Clone)]
enum Evaluator {
    Basis(BasisEval),
    Observable(ObservableEval),
}

/// A named coherence functional with uniform evaluation.
///
/// `optimizer_backed` signals that values carry optimizer accuracy (checks
/// should use the looser tolerance); `additive` signals that the measure is
/// expected to split exactly over block mixtures.
#[derive(Clone)]
pub struct MeasureHandle {
    name: String,
    optimizer_backed: bool,
    additive: bool,
    evaluator: Evaluator,
}

impl std::fmt::Debug for MeasureHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MeasureHandle")
            .field("name", &self.name)
            .field("kind", &self.kind())
            .field("optimizer_backed", &self.optimizer_backed)
            .field("additive", &self.additive)
            .finish()
    }
}

impl MeasureHandle {
    /// Relative entropy of coherence.
    pub fn rel_entropy() -> Self {
        MeasureHandle {
            name: "rel-entropy".into(),
            optimizer_backed: false,
            additive: true,
            evaluator: Evaluator::Basis(Arc::new(|rho, _| Ok(relative_entropy_coherence(rho)))),
        }
    }

    /// Sum of off-diagonal moduli.
    pub fn l1() -> Self {
        MeasureHandle {
            name: "l1".into(),
            optimizer_backed: false,
            additive: true,
            evaluator: Evaluator::Basis(Arc::new(|rho, _| Ok(l1_coherence(rho)))),
        }
    }

    /// Trace distance to diagonal density matrices. Not additive over block
    /// mixtures; the verifier exhibits the failure.
    pub fn trace_norm() -> Self {
        MeasureHandle {
            name: "trace-norm".into(),
            optimizer_backed: true,
            additive: false,
            evaluator: Evaluator::Basis(Arc::new(|rho, ctx| {
                trace_norm_coherence(rho, ctx.tol, ctx.seed)
            })),
        }
    }

    /// Trace distance to nonnegative diagonal matrices.
    pub fn mod_trace_norm() -> Self {
        MeasureHandle {
            name: "mod-trace-norm".into(),
            optimizer_backed: true,
            additive: true,
            evaluator: Evaluator::Basis(Arc::new(|rho, ctx| {
                modified_trace_norm_coherence(rho, ctx.tol, ctx.seed)
            })),
        }
    }

    /// Skew information with respect to an observable.
    pub fn skew_info() -> Self {
        MeasureHandle {
            name: "skew-info".into(),
            optimizer_backed: false,
            additive: true,
            evaluator: Evaluator::Observable(Arc::new(|rho, h| skew_information(rho, h))),
        }
    }

    /// A custom basis functional, mainly for negative controls in tests.
    pub fn custom_basis(
        name: &str,
        additive: bool,
        f: impl Fn(&DensityState, &EvalCtx) -> Result<f64, MeasureError> + Send + Sync + 'static,
    ) -> Self {
        MeasureHandle {
            name: name.into(),
            optimizer_backed: false,
            additive,
            evaluator: Evaluator::Basis(Arc::new(f)),
        }
    }

    /// Looks a measure up by its command-line name.
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "rel-entropy" => Some(Self::rel_entropy()),
            "l1" => Some(Self::l1()),
            "trace-norm" => Some(Self::trace_norm()),
            "mod-trace-norm" => Some(Self::mod_trace_norm()),
            "skew-info" => Some(Self::skew_info()),
            _ => None,
        }
    }

    /// All built-in basis measures.
    pub fn all_basis() -> Vec<Self> {
        vec![
            Self::rel_entropy(),
            Self::l1(),
            Self::trace_norm(),
            Self::mod_trace_norm(),
        ]
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> MeasureKind {
        match self.evaluator {
            Evaluator::Basis(_) => MeasureKind::Basis,
            Evaluator::Observable(_) => MeasureKind::Observable,
        }
    }

    pub fn optimizer_backed(&self) -> bool {
        self.optimizer_backed
    }

    pub fn additive(&self) -> bool {
        self.additive
    }

    /// Evaluates a basis measure.
    pub fn eval(&self, rho: &DensityState, ctx: &EvalCtx) -> Result<f64, MeasureError> {
        match &self.evaluator {
            Evaluator::Basis(f) => f(rho, ctx),
            Evaluator::Observable(_) => Err(MeasureError::WrongKind {
                name: self.name.clone(),
                expected: MeasureKind::Observable.as_str(),
                got: MeasureKind::Basis.as_str(),
            }),
        }
    }

    /// Evaluates an observable measure.
    pub fn eval_with_observable(
        &self,
        rho: &DensityState,
        h: &Observable,
    ) -> Result<f64, MeasureError> {
        match &self.evaluator {
            Evaluator::Observable(f) => f(rho, h),
            Evaluator::Basis(_) => Err(MeasureError::WrongKind {
                name: self.name.clone(),
                expected: MeasureKind::Basis.as_str(),
                got: MeasureKind::Observable.as_str(),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::CMat;
    use crate::states::{
        block_mix, counterexample_state, make_density, max_coherent, random_density, BlockSpec,
        DENSITY_TOL,
    };

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "expected {b}, got {a} (tol {tol})");
    }

    #[test]
    fn entropy_of_pure_and_mixed() {
        assert_close(von_neumann_entropy(&max_coherent(3).unwrap()), 0.0, 1e-12);
        let mixed = make_density(CMat::from_diag(&[0.5, 0.5]), DENSITY_TOL).unwrap();
        assert_close(von_neumann_entropy(&mixed), 1.0, 1e-12);
        let four = make_density(CMat::from_diag(&[0.25; 4]), DENSITY_TOL).unwrap();
        assert_close(von_neumann_entropy(&four), 2.0, 1e-12);
    }

    #[test]
    fn shannon_matches_known_values() {
        assert_close(shannon_entropy(&[0.5, 0.5]), 1.0, 1e-15);
        assert_close(shannon_entropy(&[1.0, 0.0]), 0.0, 1e-15);
        assert_close(shannon_entropy(&[0.25; 4]), 2.0, 1e-15);
    }

    #[test]
    fn entropy_splits_over_block_mixtures() {
        let b1 = random_density(2, 2, 31).unwrap();
        let b2 = random_density(3, 2, 32).unwrap();
        let spec = BlockSpec::new(vec![0.4, 0.6], vec![b1.clone(), b2.clone()]).unwrap();
        let mix = block_mix(&spec);
        let expected = shannon_entropy(&[0.4, 0.6])
            + 0.4 * von_neumann_entropy(&b1)
            + 0.6 * von_neumann_entropy(&b2);
        assert_close(von_neumann_entropy(&mix), expected, 1e-10);
    }

    #[test]
    fn rel_entropy_of_uniform_superpositions() {
        assert_close(
            relative_entropy_coherence(&max_coherent(2).unwrap()),
            1.0,
            1e-12,
        );
        assert_close(
            relative_entropy_coherence(&max_coherent(3).unwrap()),
            3.0f64.log2(),
            1e-12,
        );
    }

    #[test]
    fn rel_entropy_vanishes_on_diagonal_states() {
        let rho = make_density(CMat::from_diag(&[0.3, 0.7]), DENSITY_TOL).unwrap();
        assert_close(relative_entropy_coherence(&rho), 0.0, 1e-12);
    }

    #[test]
    fn rel_entropy_of_two_block_mixture() {
        // 1/2 * 1 + 1/2 * log2(3), split over the two uniform blocks.
        let (rho, _, _) = counterexample_state();
        let expected = 0.5 + 0.5 * 3.0f64.log2();
        assert_close(relative_entropy_coherence(&rho), expected, 1e-12);
    }

    #[test]
    fn l1_known_values() {
        assert_close(l1_coherence(&max_coherent(2).unwrap()), 1.0, 1e-14);
        assert_close(l1_coherence(&max_coherent(4).unwrap()), 3.0, 1e-13);
        let (rho, _, _) = counterexample_state();
        assert_close(l1_coherence(&rho), 1.5, 1e-13);
        let diag = make_density(CMat::from_diag(&[0.2, 0.8]), DENSITY_TOL).unwrap();
        assert_close(l1_coherence(&diag), 0.0, 0.0);
    }

    #[test]
    fn trace_norm_coherence_uniform_states() {
        for d in 2..=3usize {
            let rho = max_coherent(d).unwrap();
            let got = trace_norm_coherence(&rho, 1e-6, 0).unwrap();
            assert_close(got, 2.0 * (d as f64 - 1.0) / d as f64, 1e-5);
        }
    }

    #[test]
    fn modified_variant_is_never_larger() {
        for seed in 0..4u64 {
            let rho = random_density(3, 3, seed).unwrap();
            let plain = trace_norm_coherence(&rho, 1e-6, 0).unwrap();
            let modified = modified_trace_norm_coherence(&rho, 1e-6, 0).unwrap();
            assert!(modified <= plain + 1e-6);
        }
    }

    #[test]
    fn modified_variant_splits_over_counterexample_blocks() {
        let (rho, rho1, rho2) = counterexample_state();
        let whole = modified_trace_norm_coherence(&rho, 1e-6, 0).unwrap();
        let parts = 0.5 * modified_trace_norm_coherence(&rho1, 1e-6, 0).unwrap()
            + 0.5 * modified_trace_norm_coherence(&rho2, 1e-6, 0).unwrap();
        assert_close(whole, parts, 1e-4);
    }

    #[test]
    fn skew_information_of_uniform_qubit() {
        // For a pure state this is the variance of the observable.
        let h = Observable::new(CMat::from_diag(&[0.0, 1.0])).unwrap();
        let got = skew_information(&max_coherent(2).unwrap(), &h).unwrap();
        assert_close(got, 0.25, 1e-12);
    }

    #[test]
    fn skew_information_vanishes_when_commuting() {
        let h = Observable::new(CMat::from_diag(&[0.1, 0.9, 2.3])).unwrap();
        let rho = make_density(CMat::from_diag(&[0.2, 0.3, 0.5]), DENSITY_TOL).unwrap();
        assert_close(skew_information(&rho, &h).unwrap(), 0.0, 1e-12);
    }

    #[test]
    fn skew_information_checks_dimensions() {
        let h = Observable::new(CMat::from_diag(&[0.0, 1.0])).unwrap();
        assert!(matches!(
            skew_information(&max_coherent(3).unwrap(), &h),
            Err(MeasureError::DimensionMismatch {
                state_dim: 3,
                observable_dim: 2
            })
        ));
    }

    #[test]
    fn handles_resolve_by_name() {
        for name in ["rel-entropy", "l1", "trace-norm", "mod-trace-norm", "skew-info"] {
            let h = MeasureHandle::from_name(name).unwrap();
            assert_eq!(h.name(), name);
        }
        assert!(MeasureHandle::from_name("nope").is_none());
        assert_eq!(MeasureHandle::skew_info().kind(), MeasureKind::Observable);
        assert_eq!(MeasureHandle::l1().kind(), MeasureKind::Basis);
        assert!(MeasureHandle::trace_norm().optimizer_backed());
        assert!(!MeasureHandle::trace_norm().additive());
        assert!(MeasureHandle::mod_trace_norm().additive());
    }

    #[test]
    fn handles_reject_wrong_input_kind() {
        let rho = max_coherent(2).unwrap();
        let ctx = EvalCtx::default();
        let h = Observable::new(CMat::from_diag(&[0.0, 1.0])).unwrap();
        assert!(matches!(
            MeasureHandle::skew_info().eval(&rho, &ctx),
            Err(MeasureError::WrongKind { .. })
        ));
        assert!(matches!(
            MeasureHandle::l1().eval_with_observable(&rho, &h),
            Err(MeasureError::WrongKind { .. })
        ));
    }

    #[test]
    fn handle_values_match_direct_calls() {
        let rho = random_density(3, 3, 77).unwrap();
        let ctx = EvalCtx::default();
        assert_eq!(
            MeasureHandle::l1().eval(&rho, &ctx).unwrap(),
            l1_coherence(&rho)
        );
        assert_eq!(
            MeasureHandle::rel_entropy().eval(&rho, &ctx).unwrap(),
            relative_entropy_coherence(&rho)
        );
        let custom = MeasureHandle::custom_basis("const-zero", true, |_, _| Ok(0.0));
        assert_eq!(custom.eval(&rho, &ctx).unwrap(), 0.0);
        assert_eq!(custom.name(), "const-zero");
    }
}

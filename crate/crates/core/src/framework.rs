//! Property-based verifier for the coherence-measure conditions.
//!
//! Each `check_*` function samples a seeded ensemble of states, channels, or
//! block mixtures, evaluates a violation margin per trial, and returns a
//! `VerificationReport`: the check passes iff the worst margin stays within
//! the applicable tolerance. Failing reports carry a serialized witness that
//! reproduces the violation on re-evaluation. The conditions:
//!
//! - `c1`: the measure vanishes on incoherent states and is positive on
//!   coherent ones.
//! - `c2`: monotonicity under incoherent channels, including the named
//!   constructions (projector, embed, truncate, flag, merge-flag).
//! - `c3`: additivity over block-diagonal mixtures.
//! - `b3`: monotonicity on average under selective incoherent operations.
//! - `b4`: convexity under ensemble mixing.
//! - `flag`: monotonicity (equality, for additive measures) under classical
//!   flags.
//! - `m1`/`m2`/`m3` (aggregated by `ms`): the observable-relative analogues —
//!   zero iff commuting, monotone under translation-invariant channels, and
//!   additive over direct sums of observables.
//!
//! A pass certifies no violation over the sampled ensemble at the given
//! tolerances; it is evidence, never a proof.

use crate::channels::{
    apply, apply_raw, embed_channel, flag_channel_b3, merge_flag_channel, projector_channel,
    random_incoherent_channel, selective_outcomes, truncate_channel, KrausChannel, Observable,
};
use crate::jsonio::{ChannelDoc, MatrixDoc};
use crate::matcore::{self, CMat, C64};
use crate::measures::{
    l1_coherence, shannon_entropy, trace_norm_coherence, von_neumann_entropy, EvalCtx,
    MeasureError, MeasureHandle, MeasureKind,
};
use crate::states::{
    block_mix, counterexample_state, make_density, max_coherent, random_density, BlockSpec,
    DensityState, DENSITY_TOL,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

/// Minimum off-diagonal mass when sampling deliberately coherent states.
pub const COHERENT_SAMPLE_MIN_L1: f64 = 0.05;
/// Minimum commutator Frobenius norm when sampling noncommuting states.
pub const NONCOMMUTING_SAMPLE_MIN: f64 = 0.05;
/// Sampling rejection loops abort after this many attempts.
const MAX_SAMPLE_ATTEMPTS: u64 = 64;

/// Suite-wide sampling and tolerance configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteConfig {
    /// State dimensions cycled through by the samplers.
    pub dims: Vec<usize>,
    /// Number of sampled trials per check (named constructions are extra).
    pub samples: usize,
    /// Base seed; every trial derives its own generator from it.
    pub seed: u64,
    /// Violation tolerance for closed-form measures.
    pub tol_exact: f64,
    /// Violation tolerance for optimizer-backed measures.
    pub tol_opt: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            dims: vec![2, 3, 4],
            samples: 100,
            seed: 0,
            tol_exact: 1e-8,
            tol_opt: 1e-4,
        }
    }
}

impl SuiteConfig {
    /// Checks the configuration invariants, reporting the first violation.
    pub fn validate(&self) -> Result<(), String> {
        if self.samples == 0 {
            return Err("samples must be at least 1".into());
        }
        if !(self.tol_exact > 0.0) || !(self.tol_opt > 0.0) {
            return Err("tolerances must be positive".into());
        }
        if self.dims.is_empty() {
            return Err("at least one dimension is required".into());
        }
        if self.dims.iter().any(|&d| d < 2) {
            return Err("dimensions must be at least 2 (coherence needs off-diagonals)".into());
        }
        Ok(())
    }

    fn assert_valid(&self) {
        if let Err(e) = self.validate() {
            panic!("invalid suite config: {e}");
        }
    }
}

/// Serialized inputs reproducing a violation; the shape depends on what the
/// condition consumes.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Witness {
    /// A single state (`c1`), with the sampling branch it came from.
    State { state: MatrixDoc, branch: String },
    /// A state/channel pair (`c2`, `b3`).
    StateChannel {
        state: MatrixDoc,
        channel: ChannelDoc,
        construction: String,
    },
    /// A weighted block mixture (`c3`, `flag`; `m3` carries per-block
    /// observables).
    Blocks {
        weights: Vec<f64>,
        blocks: Vec<MatrixDoc>,
        observables: Option<Vec<MatrixDoc>>,
    },
    /// A same-dimension ensemble mixed in place (`b4`).
    Ensemble {
        weights: Vec<f64>,
        states: Vec<MatrixDoc>,
    },
    /// A state/observable pair (`m1`), with the sampling branch.
    StateObservable {
        state: MatrixDoc,
        observable: MatrixDoc,
        branch: String,
    },
    /// A state/channel/observable triple (`m2`).
    StateChannelObservable {
        state: MatrixDoc,
        channel: ChannelDoc,
        observable: MatrixDoc,
    },
}

/// Outcome of one condition check for one measure.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct VerificationReport {
    pub measure: String,
    pub condition: String,
    pub passed: bool,
    pub trials: usize,
    /// Largest violation margin over all trials; the check passes iff this
    /// stays within `tolerance`.
    pub worst_violation: f64,
    pub tolerance: f64,
    /// Inputs reproducing the worst violation; present iff the check failed.
    pub witness: Option<Witness>,
    pub seed: u64,
}

/// Serializes reports as a pretty JSON array.
pub fn reports_to_json(reports: &[VerificationReport]) -> String {
    serde_json::to_string_pretty(reports).expect("report serialization never fails")
}

// ---------------------------------------------------------------------------
// Seed derivation and samplers
// ---------------------------------------------------------------------------

/// Stable per-trial seed: FNV-1a over the salt mixed with the base seed and
/// trial index, finished with a splitmix scramble. Keeps trials independent
/// across checks while staying reproducible across platforms.
fn mix_seed(base: u64, salt: &str, trial: u64) -> u64 {
    let mut h = 0xcbf29ce484222325u64 ^ base;
    for b in salt.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h ^= trial;
    h = h.wrapping_mul(0x100000001b3);
    let mut z = h.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn trial_rng(cfg: &SuiteConfig, salt: &str, trial: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, salt, trial))
}

fn sub_seed(cfg: &SuiteConfig, salt: &str, trial: u64) -> u64 {
    mix_seed(cfg.seed, salt, trial)
}

/// Random point on the probability simplex (normalized exponentials).
fn random_simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let draws: Vec<f64> = (0..n).map(|_| rng.sample(Exp1)).collect();
    let sum: f64 = draws.iter().sum();
    draws.iter().map(|x| x / sum).collect()
}

/// Random diagonal (incoherent) state.
fn random_diag_density(rng: &mut ChaCha8Rng, d: usize) -> DensityState {
    let probs = random_simplex(rng, d);
    DensityState::from_parts(d, CMat::from_diag(&probs))
}

/// Random state with off-diagonal mass at least `min_l1` (rejection).
fn coherent_density(d: usize, rank: usize, min_l1: f64, seed: u64) -> DensityState {
    for attempt in 0..MAX_SAMPLE_ATTEMPTS {
        let rho = random_density(d, rank, seed.wrapping_add(attempt))
            .expect("sampler parameters are valid");
        if l1_coherence(&rho) >= min_l1 {
            return rho;
        }
    }
    panic!("could not sample a state with off-diagonal mass >= {min_l1}");
}

/// `V diag(values) V†`, built exactly Hermitian (upper triangle mirrored).
fn conjugated_diag_hermitian(v: &CMat, values: &[f64]) -> CMat {
    let d = v.rows();
    assert!(v.cols() == d && values.len() == d);
    let mut m = CMat::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let mut acc = C64::new(0.0, 0.0);
            for (k, &val) in values.iter().enumerate() {
                acc += v.get(i, k) * val * v.get(j, k).conj();
            }
            if i == j {
                m.set(i, i, C64::new(acc.re, 0.0));
            } else {
                m.set(i, j, acc);
                m.set(j, i, acc.conj());
            }
        }
    }
    m
}

/// Random unitary as the eigenvector matrix of a random Hermitian matrix.
fn random_unitary(d: usize, seed: u64) -> CMat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = CMat::from_fn(d, d, |_, _| crate::states::standard_complex(&mut rng));
    let h = g.symmetrized();
    matcore::herm_eig(&h)
        .expect("symmetrized matrix is Hermitian")
        .eigenvectors
}

/// Random nondegenerate observable with its eigenvector matrix. Eigenvalues
/// sit in disjoint slots `[k + 1/4, k + 3/4]`, so gaps are at least 1/2.
fn random_observable(d: usize, seed: u64) -> (Observable, CMat) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values: Vec<f64> = (0..d)
        .map(|k| k as f64 + 0.25 + 0.5 * rng.random::<f64>())
        .collect();
    let v = random_unitary(d, seed.wrapping_add(0x5eed));
    let mat = conjugated_diag_hermitian(&v, &values);
    (
        Observable::new(mat).expect("conjugated real diagonal is Hermitian"),
        v,
    )
}

/// Random state commuting with the observable whose eigenvectors are `v`.
fn commuting_state(v: &CMat, rng: &mut ChaCha8Rng) -> DensityState {
    let probs = random_simplex(rng, v.rows());
    let mat = conjugated_diag_hermitian(v, &probs);
    make_density(mat, DENSITY_TOL).expect("conjugated diagonal probabilities form a valid state")
}

/// Random state whose commutator with `h` has Frobenius norm at least
/// `min_comm` (rejection).
fn noncommuting_density(
    d: usize,
    rank: usize,
    h: &Observable,
    min_comm: f64,
    seed: u64,
) -> DensityState {
    for attempt in 0..MAX_SAMPLE_ATTEMPTS {
        let rho = random_density(d, rank, seed.wrapping_add(attempt))
            .expect("sampler parameters are valid");
        let comm = rho
            .mat()
            .matmul(h.mat())
            .sub(&h.mat().matmul(rho.mat()));
        if comm.fro_norm() >= min_comm {
            return rho;
        }
    }
    panic!("could not sample a state with commutator norm >= {min_comm}");
}

/// Random translation-invariant channel for the observable with eigenvectors
/// `v`: a mixture of an eigenbasis-commuting unitary (random eigenphases) and
/// full dephasing in the eigenbasis. Both parts commute with `exp(-iht)`
/// conjugation, so the mixture does too.
fn random_ti_channel(v: &CMat, rng: &mut ChaCha8Rng) -> KrausChannel {
    let d = v.rows();
    let q: f64 = rng.random_range(0.3..0.9);
    let mut w = CMat::zeros(d, d);
    let phases: Vec<C64> = (0..d)
        .map(|_| {
            let t: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            C64::new(t.cos(), t.sin())
        })
        .collect();
    for i in 0..d {
        for j in 0..d {
            let mut acc = C64::new(0.0, 0.0);
            for (k, phase) in phases.iter().enumerate() {
                acc += v.get(i, k) * phase * v.get(j, k).conj();
            }
            w.set(i, j, acc);
        }
    }
    let mut kraus = vec![w.scale_re(q.sqrt())];
    let r = (1.0 - q).sqrt();
    for k in 0..d {
        let p = CMat::from_fn(d, d, |a, b| v.get(a, k) * v.get(b, k).conj());
        kraus.push(p.scale_re(r));
    }
    KrausChannel::new(kraus)
        .expect("a mixture of a commuting unitary and eigenbasis dephasing is trace preserving")
}

/// `|0><0| ⊗ rho` on an `n_flags`-dimensional flag register.
fn flag_input(n_flags: usize, rho: &DensityState) -> DensityState {
    let e00 = CMat::from_fn(n_flags, n_flags, |i, j| {
        if i == 0 && j == 0 {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    DensityState::from_parts(n_flags * rho.dim(), matcore::kron(&e00, rho.mat()))
}

// ---------------------------------------------------------------------------
// Violation margins (shared between the checks and witness re-evaluation)
// ---------------------------------------------------------------------------

const BRANCH_INCOHERENT: &str = "incoherent";
const BRANCH_COHERENT: &str = "coherent";
const BRANCH_COMMUTING: &str = "commuting";
const BRANCH_NONCOMMUTING: &str = "noncommuting";

fn eval_basis(m: &MeasureHandle, rho: &DensityState, ctx: &EvalCtx) -> f64 {
    m.eval(rho, ctx)
        .expect("basis measure evaluation failed during verification")
}

fn eval_obs(m: &MeasureHandle, rho: &DensityState, h: &Observable) -> f64 {
    m.eval_with_observable(rho, h)
        .expect("observable measure evaluation failed during verification")
}

fn eval_ctx(cfg: &SuiteConfig) -> EvalCtx {
    // The optimizer runs an order of magnitude below the violation threshold
    // so optimization error cannot masquerade as a condition violation.
    EvalCtx {
        tol: cfg.tol_opt / 10.0,
        seed: cfg.seed,
    }
}

fn tol_for(m: &MeasureHandle, cfg: &SuiteConfig) -> f64 {
    if m.optimizer_backed() {
        cfg.tol_opt
    } else {
        cfg.tol_exact
    }
}

/// `c1`: incoherent states must evaluate to at most `tol`, coherent ones to
/// more than `tol`; the coherent branch margin is `2 tol - C` so that both
/// branches pass iff the margin is at most `tol`.
fn c1_violation(m: &MeasureHandle, rho: &DensityState, branch: &str, tol: f64, ctx: &EvalCtx) -> f64 {
    let c = eval_basis(m, rho, ctx);
    match branch {
        BRANCH_INCOHERENT => c,
        BRANCH_COHERENT => 2.0 * tol - c,
        _ => panic!("unknown c1 branch '{branch}'"),
    }
}

/// `c2`: `C(Λ(rho)) - C(rho)` must be at most `tol`.
fn c2_violation(m: &MeasureHandle, rho: &DensityState, ch: &KrausChannel, ctx: &EvalCtx) -> f64 {
    let out = apply(ch, rho).expect("channel application failed during verification");
    eval_basis(m, &out, ctx) - eval_basis(m, rho, ctx)
}

/// `c3`: `|C(block mixture) - sum w_i C(rho_i)|`.
fn c3_violation(m: &MeasureHandle, weights: &[f64], blocks: &[DensityState], ctx: &EvalCtx) -> f64 {
    let spec = BlockSpec::new(weights.to_vec(), blocks.to_vec()).expect("sampled spec is valid");
    let mix = block_mix(&spec);
    let whole = eval_basis(m, &mix, ctx);
    let parts: f64 = weights
        .iter()
        .zip(blocks)
        .map(|(w, b)| if *w > 0.0 { w * eval_basis(m, b, ctx) } else { 0.0 })
        .sum();
    (whole - parts).abs()
}

/// `b3`: `sum_n p_n C(rho_n) - C(rho)` over selective outcomes must be at
/// most `tol`; null outcomes contribute nothing.
fn b3_violation(m: &MeasureHandle, rho: &DensityState, ch: &KrausChannel, ctx: &EvalCtx) -> f64 {
    let outcomes =
        selective_outcomes(ch, rho).expect("selective application failed during verification");
    let average: f64 = outcomes
        .iter()
        .filter_map(|o| o.state.as_ref().map(|s| o.probability * eval_basis(m, s, ctx)))
        .sum();
    average - eval_basis(m, rho, ctx)
}

/// `b4`: `C(sum w_i rho_i) - sum w_i C(rho_i)` must be at most `tol`.
fn b4_violation(m: &MeasureHandle, weights: &[f64], states: &[DensityState], ctx: &EvalCtx) -> f64 {
    let d = states[0].dim();
    let mut mat = CMat::zeros(d, d);
    for (w, s) in weights.iter().zip(states) {
        mat = mat.add(&s.mat().scale_re(*w));
    }
    let mixture = make_density(mat, DENSITY_TOL).expect("a convex mixture is a valid state");
    let average: f64 = weights
        .iter()
        .zip(states)
        .map(|(w, s)| if *w > 0.0 { w * eval_basis(m, s, ctx) } else { 0.0 })
        .sum();
    eval_basis(m, &mixture, ctx) - average
}

/// `flag`: the flagged state `sum_n p_n |n><n| ⊗ rho_n` is the equal-dim
/// block mixture, so its measure must not exceed the ensemble average; for
/// additive measures equality is required.
fn flag_violation(m: &MeasureHandle, weights: &[f64], blocks: &[DensityState], ctx: &EvalCtx) -> f64 {
    let spec = BlockSpec::new(weights.to_vec(), blocks.to_vec()).expect("sampled spec is valid");
    let flagged = block_mix(&spec);
    let whole = eval_basis(m, &flagged, ctx);
    let parts: f64 = weights
        .iter()
        .zip(blocks)
        .map(|(w, b)| if *w > 0.0 { w * eval_basis(m, b, ctx) } else { 0.0 })
        .sum();
    let diff = whole - parts;
    if m.additive() {
        diff.abs()
    } else {
        diff
    }
}

/// `m1`: commuting states must evaluate to at most `tol`, noncommuting ones
/// to more than `tol` (same margin construction as `c1`).
fn m1_violation(
    m: &MeasureHandle,
    rho: &DensityState,
    h: &Observable,
    branch: &str,
    tol: f64,
) -> f64 {
    let c = eval_obs(m, rho, h);
    match branch {
        BRANCH_COMMUTING => c,
        BRANCH_NONCOMMUTING => 2.0 * tol - c,
        _ => panic!("unknown m1 branch '{branch}'"),
    }
}

/// `m2`: `C_H(Λ(rho)) - C_H(rho)` must be at most `tol` for translation-
/// invariant channels.
fn m2_violation(m: &MeasureHandle, rho: &DensityState, ch: &KrausChannel, h: &Observable) -> f64 {
    let out = apply(ch, rho).expect("channel application failed during verification");
    eval_obs(m, &out, h) - eval_obs(m, rho, h)
}

/// `m3`: `|C_{H1⊕H2}(mixture) - sum w_i C_{Hi}(rho_i)|`.
fn m3_violation(
    m: &MeasureHandle,
    weights: &[f64],
    blocks: &[DensityState],
    observables: &[Observable],
) -> f64 {
    let spec = BlockSpec::new(weights.to_vec(), blocks.to_vec()).expect("sampled spec is valid");
    let mix = block_mix(&spec);
    let mut h_mat = CMat::zeros(0, 0);
    for h in observables {
        h_mat = matcore::direct_sum(&h_mat, h.mat());
    }
    let h = Observable::new(h_mat).expect("a direct sum of observables is Hermitian");
    let whole = eval_obs(m, &mix, &h);
    let parts: f64 = weights
        .iter()
        .zip(blocks)
        .zip(observables)
        .map(|((w, b), hb)| if *w > 0.0 { w * eval_obs(m, b, hb) } else { 0.0 })
        .sum();
    (whole - parts).abs()
}

// ---------------------------------------------------------------------------
// Checks
// ---------------------------------------------------------------------------

fn note<F: FnOnce() -> Witness>(worst: &mut f64, witness: &mut Option<Witness>, v: f64, mk: F) {
    if v > *worst {
        *worst = v;
        *witness = Some(mk());
    }
}

fn finish(
    m: &MeasureHandle,
    condition: &str,
    trials: usize,
    worst: f64,
    witness: Option<Witness>,
    tol: f64,
    cfg: &SuiteConfig,
) -> VerificationReport {
    let passed = worst <= tol;
    VerificationReport {
        measure: m.name().to_string(),
        condition: condition.to_string(),
        passed,
        trials,
        worst_violation: worst,
        tolerance: tol,
        witness: if passed { None } else { witness },
        seed: cfg.seed,
    }
}

fn require_basis(m: &MeasureHandle, condition: &str) {
    assert!(
        m.kind() == MeasureKind::Basis,
        "{condition} takes a basis measure, got '{}'",
        m.name()
    );
}

fn require_observable(m: &MeasureHandle, condition: &str) {
    assert!(
        m.kind() == MeasureKind::Observable,
        "{condition} takes an observable measure, got '{}'",
        m.name()
    );
}

/// Checks that the measure vanishes exactly on incoherent states and is
/// positive on coherent ones, over `samples` states per branch.
pub fn check_c1(m: &MeasureHandle, cfg: &SuiteConfig) -> VerificationReport {
    cfg.assert_valid();
    require_basis(m, "c1");
    let tol = tol_for(m, cfg);
    let ctx = eval_ctx(cfg);
    let mut worst = f64::NEG_INFINITY;
    let mut witness = None;
    let mut trials = 0;
    for t in 0..cfg.samples {
        let d = cfg.dims[t % cfg.dims.len()];
        let diag = random_diag_density(&mut trial_rng(cfg, "c1-incoherent", t as u64), d);
        let v = c1_violation(m, &diag, BRANCH_INCOHERENT, tol, &ctx);
        note(&mut worst, &mut witness, v, || Witness::State {
            state: MatrixDoc::from_density(&diag),
            branch: BRANCH_INCOHERENT.into(),
        });
        trials += 1;

        let rank = 1 + t % d;
        let coh = coherent_density(
            d,
            rank,
            COHERENT_SAMPLE_MIN_L1,
            sub_seed(cfg, "c1-coherent", t as u64),
        );
        let v = c1_violation(m, &coh, BRANCH_COHERENT, tol, &ctx);
        note(&mut worst, &mut witness, v, || Witness::State {
            state: MatrixDoc::from_density(&coh),
            branch: BRANCH_COHERENT.into(),
        });
        trials += 1;
    }
    finish(m, "c1", trials, worst, witness, tol, cfg)
}

/// Checks monotonicity under random incoherent channels plus the named
/// constructions (projector, embed, truncate, flag, merge-flag).
pub fn check_c2(m: &MeasureHandle, cfg: &SuiteConfig) -> VerificationReport {
    cfg.assert_valid();
    require_basis(m, "c2");
    let tol = tol_for(m, cfg);
    let ctx = eval_ctx(cfg);
    let mut worst = f64::NEG_INFINITY;
    let mut witness = None;
    let mut trials = 0;
    let mut run = |state: &DensityState, ch: &KrausChannel, construction: &str| {
        let v = c2_violation(m, state, ch, &ctx);
        note(&mut worst, &mut witness, v, || Witness::StateChannel {
            state: MatrixDoc::from_density(state),
            channel: ChannelDoc::from_channel(ch),
            construction: construction.into(),
        });
    };
    for t in 0..cfg.samples {
        let d = cfg.dims[t % cfg.dims.len()];
        let rho = random_density(d, 1 + t % d, sub_seed(cfg, "c2-state", t as u64))
            .expect("sampler parameters are valid");
        let n_kraus = 1 + t % (d + 1);
        let ch = random_incoherent_channel(d, n_kraus, sub_seed(cfg, "c2-channel", t as u64));
        run(&rho, &ch, "random-incoherent");
        trials += 1;
    }
    for (i, &d) in cfg.dims.iter().enumerate() {
        let i = i as u64;
        let rho = random_density(d, d, sub_seed(cfg, "c2-named", i))
            .expect("sampler parameters are valid");

        let n1 = (d / 2).max(1);
        run(&rho, &projector_channel(n1, d - n1), "projector");
        run(&rho, &embed_channel(d, 2), "embed");

        let tall = random_density(d + 2, d, sub_seed(cfg, "c2-named-tall", i))
            .expect("sampler parameters are valid");
        run(&tall, &truncate_channel(d, 2), "truncate");

        let inner = random_incoherent_channel(d, 2, sub_seed(cfg, "c2-named-flag", i));
        let flag_ch = flag_channel_b3(&inner).expect("inner channel is square");
        run(&flag_input(2, &rho), &flag_ch, "flag");

        let spec = BlockSpec::new(
            vec![0.5, 0.5],
            vec![
                rho.clone(),
                random_density(d, 1, sub_seed(cfg, "c2-named-merge", i))
                    .expect("sampler parameters are valid"),
            ],
        )
        .expect("two equal-dimension blocks");
        run(&block_mix(&spec), &merge_flag_channel(2, d), "merge-flag");

        trials += 5;
    }
    finish(m, "c2", trials, worst, witness, tol, cfg)
}

/// Checks additivity over random block mixtures (two and three blocks). For
/// the plain trace-distance measure the known refuting two-block mixture is
/// deterministically seeded as the first trial.
pub fn check_c3(m: &MeasureHandle, cfg: &SuiteConfig) -> VerificationReport {
    cfg.assert_valid();
    require_basis(m, "c3");
    let tol = tol_for(m, cfg);
    let ctx = eval_ctx(cfg);
    let mut worst = f64::NEG_INFINITY;
    let mut witness = None;
    // Once the deterministic counterexample trial fails for the trace norm,
    // the report presents that canonical refutation: its violation and
    // witness stay pinned so random trials cannot displace them (witness
    // re-evaluation must reproduce `worst_violation` exactly).
    let mut pinned = false;
    for t in 0..cfg.samples {
        let counterexample_trial = t == 0 && m.name() == "trace-norm";
        let (weights, blocks) = if counterexample_trial {
            let (_, rho1, rho2) = counterexample_state();
            (vec![0.5, 0.5], vec![rho1, rho2])
        } else {
            let n_blocks = 2 + t % 2;
            let mut rng = trial_rng(cfg, "c3-weights", t as u64);
            let weights = random_simplex(&mut rng, n_blocks);
            let blocks = (0..n_blocks)
                .map(|b| {
                    let d = cfg.dims[(t + b) % cfg.dims.len()];
                    random_density(
                        d,
                        1 + (t + b) % d,
                        sub_seed(cfg, "c3-block", (t * 8 + b) as u64),
                    )
                    .expect("sampler parameters are valid")
                })
                .collect();
            (weights, blocks)
        };
        let v = c3_violation(m, &weights, &blocks, &ctx);
        let mk = || Witness::Blocks {
            weights: weights.clone(),
            blocks: blocks.iter().map(MatrixDoc::from_density).collect(),
            observables: None,
        };
        if counterexample_trial && v > tol {
            worst = v;
            witness = Some(mk());
            pinned = true;
        } else if !pinned {
            note(&mut worst, &mut witness, v, mk);
        }
    }
    finish(m, "c3", cfg.samples, worst, witness, tol, cfg)
}

/// Checks that the measure does not increase on average under selective
/// incoherent operations, plus projector and identity constructions.
pub fn check_b3(m: &MeasureHandle, cfg: &SuiteConfig) -> VerificationReport {
    cfg.assert_valid();
    require_basis(m, "b3");
    let tol = tol_for(m, cfg);
    let ctx = eval_ctx(cfg);
    let mut worst = f64::NEG_INFINITY;
    let mut witness = None;
    let mut trials = 0;
    let mut run = |state: &DensityState, ch: &KrausChannel, construction: &str| {
        let v = b3_violation(m, state, ch, &ctx);
        note(&mut worst, &mut witness, v, || Witness::StateChannel {
            state: MatrixDoc::from_density(state),
            channel: ChannelDoc::from_channel(ch),
            construction: construction.into(),
        });
    };
    for t in 0..cfg.samples {
        let d = cfg.dims[t % cfg.dims.len()];
        let rho = random_density(d, 1 + t % d, sub_seed(cfg, "b3-state", t as u64))
            .expect("sampler parameters are valid");
        let n_kraus = 1 + t % (d + 1);
        let ch = random_incoherent_channel(d, n_kraus, sub_seed(cfg, "b3-channel", t as u64));
        run(&rho, &ch, "random-incoherent");
        trials += 1;
    }
    for (i, &d) in cfg.dims.iter().enumerate() {
        let rho = random_density(d, d, sub_seed(cfg, "b3-named", i as u64))
            .expect("sampler parameters are valid");
        let n1 = (d / 2).max(1);
        run(&rho, &projector_channel(n1, d - n1), "projector");
        run(&rho, &KrausChannel::identity(d), "identity");
        trials += 2;
    }
    finish(m, "b3", trials, worst, witness, tol, cfg)
}

/// Checks convexity: mixing an ensemble in place must not increase the
/// average measure. Self-mixtures are included as exact equality cases.
pub fn check_b4(m: &MeasureHandle, cfg: &SuiteConfig) -> VerificationReport {
    cfg.assert_valid();
    require_basis(m, "b4");
    let tol = tol_for(m, cfg);
    let ctx = eval_ctx(cfg);
    let mut worst = f64::NEG_INFINITY;
    let mut witness = None;
    let mut trials = 0;
    let mut run = |weights: &[f64], states: &[DensityState]| {
        let v = b4_violation(m, weights, states, &ctx);
        note(&mut worst, &mut witness, v, || Witness::Ensemble {
            weights: weights.to_vec(),
            states: states.iter().map(MatrixDoc::from_density).collect(),
        });
    };
    for t in 0..cfg.samples {
        let d = cfg.dims[t % cfg.dims.len()];
        let n_states = 2 + t % 2;
        let mut rng = trial_rng(cfg, "b4-weights", t as u64);
        let weights = random_simplex(&mut rng, n_states);
        let states: Vec<DensityState> = (0..n_states)
            .map(|s| {
                random_density(
                    d,
                    1 + (t + s) % d,
                    sub_seed(cfg, "b4-state", (t * 8 + s) as u64),
                )
                .expect("sampler parameters are valid")
            })
            .collect();
        run(&weights, &states);
        trials += 1;
    }
    for (i, &d) in cfg.dims.iter().enumerate() {
        let rho = random_density(d, d, sub_seed(cfg, "b4-self", i as u64))
            .expect("sampler parameters are valid");
        run(&[0.6, 0.4], &[rho.clone(), rho]);
        trials += 1;
    }
    finish(m, "b4", trials, worst, witness, tol, cfg)
}

/// Checks classical flag monotonicity: the flagged state's measure must not
/// exceed the ensemble average, with equality for additive measures.
/// Single-outcome flags (`|0><0| ⊗ rho`) are included per dimension.
pub fn check_flag_monotonicity(m: &MeasureHandle, cfg: &SuiteConfig) -> VerificationReport {
    cfg.assert_valid();
    require_basis(m, "flag");
    let tol = tol_for(m, cfg);
    let ctx = eval_ctx(cfg);
    let mut worst = f64::NEG_INFINITY;
    let mut witness = None;
    let mut trials = 0;
    let mut run = |weights: &[f64], blocks: &[DensityState]| {
        let v = flag_violation(m, weights, blocks, &ctx);
        note(&mut worst, &mut witness, v, || Witness::Blocks {
            weights: weights.to_vec(),
            blocks: blocks.iter().map(MatrixDoc::from_density).collect(),
            observables: None,
        });
    };
    for t in 0..cfg.samples {
        let d = cfg.dims[t % cfg.dims.len()];
        let n_flags = 2 + t % 2;
        let mut rng = trial_rng(cfg, "flag-weights", t as u64);
        let weights = random_simplex(&mut rng, n_flags);
        let blocks: Vec<DensityState> = (0..n_flags)
            .map(|b| {
                random_density(
                    d,
                    1 + (t + b) % d,
                    sub_seed(cfg, "flag-block", (t * 8 + b) as u64),
                )
                .expect("sampler parameters are valid")
            })
            .collect();
        run(&weights, &blocks);
        trials += 1;
    }
    for (i, &d) in cfg.dims.iter().enumerate() {
        let rho = random_density(d, d, sub_seed(cfg, "flag-single", i as u64))
            .expect("sampler parameters are valid");
        let idle = random_density(d, 1, sub_seed(cfg, "flag-single-idle", i as u64))
            .expect("sampler parameters are valid");
        run(&[1.0, 0.0], &[rho, idle]);
        trials += 1;
    }
    finish(m, "flag", trials, worst, witness, tol, cfg)
}

/// Checks that the observable measure vanishes exactly on commuting states
/// and is positive on noncommuting ones.
pub fn check_m1(m: &MeasureHandle, h_seed: u64, cfg: &SuiteConfig) -> VerificationReport {
    cfg.assert_valid();
    require_observable(m, "m1");
    let tol = tol_for(m, cfg);
    let mut worst = f64::NEG_INFINITY;
    let mut witness = None;
    let mut trials = 0;
    for t in 0..cfg.samples {
        let d = cfg.dims[t % cfg.dims.len()];
        let (h, v) = random_observable(d, mix_seed(h_seed, "m1-h", t as u64));

        let commuting = commuting_state(&v, &mut trial_rng(cfg, "m1-commuting", t as u64));
        let viol = m1_violation(m, &commuting, &h, BRANCH_COMMUTING, tol);
        note(&mut worst, &mut witness, viol, || Witness::StateObservable {
            state: MatrixDoc::from_density(&commuting),
            observable: MatrixDoc::from_observable(&h),
            branch: BRANCH_COMMUTING.into(),
        });
        trials += 1;

        let noncommuting = noncommuting_density(
            d,
            1 + t % d,
            &h,
            NONCOMMUTING_SAMPLE_MIN,
            sub_seed(cfg, "m1-noncommuting", t as u64),
        );
        let viol = m1_violation(m, &noncommuting, &h, BRANCH_NONCOMMUTING, tol);
        note(&mut worst, &mut witness, viol, || Witness::StateObservable {
            state: MatrixDoc::from_density(&noncommuting),
            observable: MatrixDoc::from_observable(&h),
            branch: BRANCH_NONCOMMUTING.into(),
        });
        trials += 1;
    }
    finish(m, "m1", trials, worst, witness, tol, cfg)
}

/// Checks monotonicity under sampled translation-invariant channels.
pub fn check_m2(m: &MeasureHandle, h_seed: u64, cfg: &SuiteConfig) -> VerificationReport {
    cfg.assert_valid();
    require_observable(m, "m2");
    let tol = tol_for(m, cfg);
    let mut worst = f64::NEG_INFINITY;
    let mut witness = None;
    for t in 0..cfg.samples {
        let d = cfg.dims[t % cfg.dims.len()];
        let (h, v) = random_observable(d, mix_seed(h_seed, "m2-h", t as u64));
        let ch = random_ti_channel(&v, &mut trial_rng(cfg, "m2-channel", t as u64));
        let rho = random_density(d, 1 + t % d, sub_seed(cfg, "m2-state", t as u64))
            .expect("sampler parameters are valid");
        let viol = m2_violation(m, &rho, &ch, &h);
        note(&mut worst, &mut witness, viol, || {
            Witness::StateChannelObservable {
                state: MatrixDoc::from_density(&rho),
                channel: ChannelDoc::from_channel(&ch),
                observable: MatrixDoc::from_observable(&h),
            }
        });
    }
    finish(m, "m2", cfg.samples, worst, witness, tol, cfg)
}

/// Checks additivity over block mixtures with the block-diagonal observable.
pub fn check_m3(m: &MeasureHandle, h_seed: u64, cfg: &SuiteConfig) -> VerificationReport {
    cfg.assert_valid();
    require_observable(m, "m3");
    let tol = tol_for(m, cfg);
    let mut worst = f64::NEG_INFINITY;
    let mut witness = None;
    for t in 0..cfg.samples {
        let d1 = cfg.dims[t % cfg.dims.len()];
        let d2 = cfg.dims[(t + 1) % cfg.dims.len()];
        let (h1, _) = random_observable(d1, mix_seed(h_seed, "m3-h1", t as u64));
        let (h2, _) = random_observable(d2, mix_seed(h_seed, "m3-h2", t as u64));
        let mut rng = trial_rng(cfg, "m3-weights", t as u64);
        let weights = random_simplex(&mut rng, 2);
        let blocks = vec![
            random_density(d1, 1 + t % d1, sub_seed(cfg, "m3-block1", t as u64))
                .expect("sampler parameters are valid"),
            random_density(d2, 1 + t % d2, sub_seed(cfg, "m3-block2", t as u64))
                .expect("sampler parameters are valid"),
        ];
        let observables = [h1, h2];
        let viol = m3_violation(m, &weights, &blocks, &observables);
        note(&mut worst, &mut witness, viol, || Witness::Blocks {
            weights: weights.clone(),
            blocks: blocks.iter().map(MatrixDoc::from_density).collect(),
            observables: Some(observables.iter().map(MatrixDoc::from_observable).collect()),
        });
    }
    finish(m, "m3", cfg.samples, worst, witness, tol, cfg)
}

/// Runs the three observable-measure checks and merges them into one report
/// under the condition name `ms`.
pub fn check_ms(m: &MeasureHandle, h_seed: u64, cfg: &SuiteConfig) -> VerificationReport {
    let parts = [
        check_m1(m, h_seed, cfg),
        check_m2(m, h_seed, cfg),
        check_m3(m, h_seed, cfg),
    ];
    let worst = parts
        .iter()
        .map(|r| r.worst_violation)
        .fold(f64::NEG_INFINITY, f64::max);
    let passed = parts.iter().all(|r| r.passed);
    let witness = parts.iter().find(|r| !r.passed).and_then(|r| r.witness.clone());
    VerificationReport {
        measure: m.name().to_string(),
        condition: "ms".to_string(),
        passed,
        trials: parts.iter().map(|r| r.trials).sum(),
        worst_violation: worst,
        tolerance: tol_for(m, cfg),
        witness,
        seed: cfg.seed,
    }
}

/// Dispatches a basis-measure check by condition name.
pub fn check_condition(
    m: &MeasureHandle,
    condition: &str,
    cfg: &SuiteConfig,
) -> Option<VerificationReport> {
    match condition {
        "c1" => Some(check_c1(m, cfg)),
        "c2" => Some(check_c2(m, cfg)),
        "c3" => Some(check_c3(m, cfg)),
        "b3" => Some(check_b3(m, cfg)),
        "b4" => Some(check_b4(m, cfg)),
        "flag" => Some(check_flag_monotonicity(m, cfg)),
        "ms" => Some(check_ms(m, cfg.seed, cfg)),
        _ => None,
    }
}

// ---------------------------------------------------------------------------
// Witness re-evaluation
// ---------------------------------------------------------------------------

/// Recomputes the violation margin of a report's witness with the same
/// formulas the checks use. Returns `None` when the report has no witness or
/// the witness shape does not match the condition.
pub fn reevaluate_witness(m: &MeasureHandle, report: &VerificationReport) -> Option<f64> {
    let w = report.witness.as_ref()?;
    let ctx = EvalCtx {
        tol: report.tolerance / 10.0,
        seed: report.seed,
    };
    let tol = report.tolerance;
    let parse_state = |doc: &MatrixDoc| doc.to_density(DENSITY_TOL).ok();
    let parse_blocks = |docs: &[MatrixDoc]| -> Option<Vec<DensityState>> {
        docs.iter().map(parse_state).collect()
    };
    Some(match (report.condition.as_str(), w) {
        ("c1", Witness::State { state, branch }) => {
            c1_violation(m, &parse_state(state)?, branch, tol, &ctx)
        }
        ("c2", Witness::StateChannel { state, channel, .. }) => {
            c2_violation(m, &parse_state(state)?, &channel.to_channel().ok()?, &ctx)
        }
        (
            "c3",
            Witness::Blocks {
                weights,
                blocks,
                observables: None,
            },
        ) => c3_violation(m, weights, &parse_blocks(blocks)?, &ctx),
        ("b3", Witness::StateChannel { state, channel, .. }) => {
            b3_violation(m, &parse_state(state)?, &channel.to_channel().ok()?, &ctx)
        }
        ("b4", Witness::Ensemble { weights, states }) => {
            b4_violation(m, weights, &parse_blocks(states)?, &ctx)
        }
        (
            "flag",
            Witness::Blocks {
                weights,
                blocks,
                observables: None,
            },
        ) => flag_violation(m, weights, &parse_blocks(blocks)?, &ctx),
        (
            "m1" | "ms",
            Witness::StateObservable {
                state,
                observable,
                branch,
            },
        ) => m1_violation(
            m,
            &parse_state(state)?,
            &observable.to_observable().ok()?,
            branch,
            tol,
        ),
        (
            "m2" | "ms",
            Witness::StateChannelObservable {
                state,
                channel,
                observable,
            },
        ) => m2_violation(
            m,
            &parse_state(state)?,
            &channel.to_channel().ok()?,
            &observable.to_observable().ok()?,
        ),
        (
            "m3" | "ms",
            Witness::Blocks {
                weights,
                blocks,
                observables: Some(obs),
            },
        ) => {
            let observables: Option<Vec<Observable>> =
                obs.iter().map(|d| d.to_observable().ok()).collect();
            m3_violation(m, weights, &parse_blocks(blocks)?, &observables?)
        }
        _ => return None,
    })
}

// ---------------------------------------------------------------------------
// Negative controls
// ---------------------------------------------------------------------------

/// The constant-zero functional: declares every state incoherent, so `c1`
/// must fail it on the coherent branch.
pub fn constant_zero_control() -> MeasureHandle {
    MeasureHandle::custom_basis("const-zero", true, |_, _| Ok(0.0))
}

/// The largest off-diagonal modulus of `rho²`: not a monotone, so sampled
/// incoherent channels should eventually increase it. As with every sampled
/// check, a `passed` report for this control only means no violation was
/// found in the sample — it certifies nothing beyond that.
pub fn off_diag_square_control() -> MeasureHandle {
    MeasureHandle::custom_basis("offdiag-sq", false, |rho, _| {
        let sq = rho.mat().matmul(rho.mat());
        let d = rho.dim();
        let mut best: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                if i != j {
                    best = best.max(sq.get(i, j).norm());
                }
            }
        }
        Ok(best)
    })
}

// ---------------------------------------------------------------------------
// Consistency matrix
// ---------------------------------------------------------------------------

/// One cell of the expected-behavior matrix: which conditions each built-in
/// measure is known to satisfy or refute.
#[derive(Debug, Clone, Serialize)]
pub struct MatrixEntry {
    pub measure: String,
    pub condition: String,
    pub expected_pass: bool,
    pub report: VerificationReport,
}

/// Runs the full expected-behavior matrix: relative entropy and l1 pass
/// `c1, c2, c3, b3, b4, flag`; the modified trace-distance measure passes
/// `c1, c2, c3`; the plain trace-distance measure passes `c1, c2, b4` and
/// fails `c3`; skew information passes `ms`. Closed-form measures run under
/// `cfg_closed`, optimizer-backed ones under `cfg_optimizer` (typically
/// smaller samples).
pub fn consistency_matrix(cfg_closed: &SuiteConfig, cfg_optimizer: &SuiteConfig) -> Vec<MatrixEntry> {
    let rows: Vec<(MeasureHandle, Vec<(&str, bool)>)> = vec![
        (
            MeasureHandle::rel_entropy(),
            vec![
                ("c1", true),
                ("c2", true),
                ("c3", true),
                ("b3", true),
                ("b4", true),
                ("flag", true),
            ],
        ),
        (
            MeasureHandle::l1(),
            vec![
                ("c1", true),
                ("c2", true),
                ("c3", true),
                ("b3", true),
                ("b4", true),
                ("flag", true),
            ],
        ),
        (
            MeasureHandle::mod_trace_norm(),
            vec![("c1", true), ("c2", true), ("c3", true)],
        ),
        (
            MeasureHandle::trace_norm(),
            vec![("c1", true), ("c2", true), ("b4", true), ("c3", false)],
        ),
        (MeasureHandle::skew_info(), vec![("ms", true)]),
    ];
    let mut entries = Vec::new();
    for (m, cells) in rows {
        let cfg = if m.optimizer_backed() {
            cfg_optimizer
        } else {
            cfg_closed
        };
        for (condition, expected_pass) in cells {
            let report = check_condition(&m, condition, cfg)
                .expect("matrix conditions are all dispatchable");
            entries.push(MatrixEntry {
                measure: m.name().to_string(),
                condition: condition.to_string(),
                expected_pass,
                report,
            });
        }
    }
    entries
}

/// True iff every matrix entry's report matches its expectation.
pub fn consistency_matrix_holds(entries: &[MatrixEntry]) -> bool {
    entries.iter().all(|e| e.report.passed == e.expected_pass)
}

// ---------------------------------------------------------------------------
// Reproduction records
// ---------------------------------------------------------------------------

/// Outcome of reproducing the two-block additivity refutation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CounterexampleRecord {
    /// Optimized trace-distance coherence of the first (uniform qubit) block.
    pub block1_value: f64,
    pub block1_expected: f64,
    /// Optimized value for the second (uniform qutrit) block.
    pub block2_value: f64,
    pub block2_expected: f64,
    /// Weighted right-hand side `(block1 + block2) / 2` from measured values.
    pub rhs: f64,
    pub rhs_expected: f64,
    /// Trace distance to the explicit feasible diagonal `diag(1/2,1/2,0,0,0)`.
    pub feasible_upper_bound: f64,
    /// Optimizer value for the mixture itself (also an upper bound).
    pub optimizer_bound: f64,
    /// `rhs` minus the best upper bound: how far additivity fails.
    pub gap: f64,
    /// The gap certified when all values are `tol`-accurate: `7/6 - 1 - 2 tol`.
    pub gap_threshold: f64,
    /// Verdict: the gap meets the threshold, so additivity fails.
    pub additivity_fails: bool,
    pub tol: f64,
    pub seed: u64,
}

impl CounterexampleRecord {
    /// True when every reproduced quantity landed where it should: both
    /// block values within `tol` of their closed forms, both upper bounds on
    /// the mixture at most `1 + tol`, and the additivity gap certified.
    pub fn reproduced(&self) -> bool {
        (self.block1_value - self.block1_expected).abs() <= self.tol
            && (self.block2_value - self.block2_expected).abs() <= self.tol
            && self.feasible_upper_bound <= 1.0 + self.tol
            && self.optimizer_bound <= 1.0 + self.tol
            && self.additivity_fails
    }
}

/// Reproduces the additivity refutation: both blocks match their closed-form
/// values, the mixture's coherence is at most `1 + tol` by two independent
/// upper bounds, and the weighted block average exceeds it by at least
/// `7/6 - 1 - 2 tol`.
pub fn reproduce_counterexample(tol: f64, seed: u64) -> Result<CounterexampleRecord, MeasureError> {
    assert!(tol > 0.0, "tolerance must be positive");
    let inner = (tol / 10.0).max(1e-9);
    let (rho, rho1, rho2) = counterexample_state();
    let block1_value = trace_norm_coherence(&rho1, inner, seed)?;
    let block2_value = trace_norm_coherence(&rho2, inner, seed)?;
    let rhs = 0.5 * block1_value + 0.5 * block2_value;
    let delta0 = CMat::from_diag(&[0.5, 0.5, 0.0, 0.0, 0.0]);
    let feasible_upper_bound = matcore::trace_norm(&rho.mat().sub(&delta0))?;
    let optimizer_bound = trace_norm_coherence(&rho, inner, seed)?;
    let best_upper = feasible_upper_bound.min(optimizer_bound);
    let gap = rhs - best_upper;
    let gap_threshold = 7.0 / 6.0 - 1.0 - 2.0 * tol;
    Ok(CounterexampleRecord {
        block1_value,
        block1_expected: 1.0,
        block2_value,
        block2_expected: 4.0 / 3.0,
        rhs,
        rhs_expected: 7.0 / 6.0,
        feasible_upper_bound,
        optimizer_bound,
        gap,
        gap_threshold,
        additivity_fails: gap >= gap_threshold,
        tol,
        seed,
    })
}

/// One row of the uniform-superposition closed-form table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UniformValueRow {
    pub dim: usize,
    pub computed: f64,
    pub expected: f64,
    pub residual: f64,
}

/// Closed-form check `C_tr(max_coherent(d)) = 2(d-1)/d` for `d = 2..=5`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UniformValuesRecord {
    pub rows: Vec<UniformValueRow>,
    pub max_residual: f64,
    pub tol: f64,
    pub seed: u64,
    pub passed: bool,
}

/// Reproduces the closed-form trace-distance values of the maximally
/// coherent states.
pub fn reproduce_uniform_values(tol: f64, seed: u64) -> Result<UniformValuesRecord, MeasureError> {
    assert!(tol > 0.0, "tolerance must be positive");
    let inner = (tol / 10.0).max(1e-9);
    let mut rows = Vec::new();
    let mut max_residual: f64 = 0.0;
    for d in 2..=5usize {
        let rho = max_coherent(d).expect("dimension is positive");
        let computed = trace_norm_coherence(&rho, inner, seed)?;
        let expected = 2.0 * (d as f64 - 1.0) / d as f64;
        let residual = (computed - expected).abs();
        max_residual = max_residual.max(residual);
        rows.push(UniformValueRow {
            dim: d,
            computed,
            expected,
            residual,
        });
    }
    Ok(UniformValuesRecord {
        rows,
        max_residual,
        tol,
        seed,
        passed: max_residual <= tol,
    })
}

/// Residuals of the entropy decomposition over block mixtures.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EntropyAdditivityRecord {
    pub trials: usize,
    pub max_residual: f64,
    pub tol: f64,
    pub seed: u64,
    pub passed: bool,
}

/// Checks `S(p1 rho1 ⊕ p2 rho2) = H(p1,p2) + p1 S(rho1) + p2 S(rho2)` over
/// seeded random two-block mixtures with block dimensions 2 through 5.
pub fn reproduce_entropy_additivity(trials: usize, tol: f64, seed: u64) -> EntropyAdditivityRecord {
    assert!(trials >= 1 && tol > 0.0);
    let mut max_residual: f64 = 0.0;
    for t in 0..trials {
        let d1 = 2 + t % 4;
        let d2 = 2 + (t + 1) % 4;
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, "entropy-weights", t as u64));
        let weights = random_simplex(&mut rng, 2);
        let b1 = random_density(d1, 1 + t % d1, mix_seed(seed, "entropy-b1", t as u64))
            .expect("sampler parameters are valid");
        let b2 = random_density(d2, 1 + t % d2, mix_seed(seed, "entropy-b2", t as u64))
            .expect("sampler parameters are valid");
        let spec = BlockSpec::new(weights.clone(), vec![b1.clone(), b2.clone()])
            .expect("two sampled blocks");
        let mix = block_mix(&spec);
        let expected = shannon_entropy(&weights)
            + weights[0] * von_neumann_entropy(&b1)
            + weights[1] * von_neumann_entropy(&b2);
        let residual = (von_neumann_entropy(&mix) - expected).abs();
        max_residual = max_residual.max(residual);
    }
    EntropyAdditivityRecord {
        trials,
        max_residual,
        tol,
        seed,
        passed: max_residual <= tol,
    }
}

/// Residuals of the flag, merge-flag, and embed/truncate channel identities.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlagIdentityRecord {
    pub trials: usize,
    /// Flag channel on `|0><0| ⊗ rho` versus the direct sum of the selective
    /// branches `K_n rho K_n†`.
    pub max_flag_residual: f64,
    /// Merge-flag channel on a flagged mixture versus `|0><0| ⊗ average`.
    pub max_merge_residual: f64,
    /// Truncation after embedding versus the identity.
    pub max_roundtrip_residual: f64,
    pub tol: f64,
    pub seed: u64,
    pub passed: bool,
}

/// Checks the channel-output identities of the flag and merge-flag
/// constructions, entrywise, over seeded random channels and states.
pub fn reproduce_flag_identities(trials: usize, tol: f64, seed: u64) -> FlagIdentityRecord {
    assert!(trials >= 1 && tol > 0.0);
    let mut max_flag: f64 = 0.0;
    let mut max_merge: f64 = 0.0;
    let mut max_roundtrip: f64 = 0.0;
    for t in 0..trials {
        let d = 2 + t % 3;
        let n = 2 + t % 3;
        let rho = random_density(d, 1 + t % d, mix_seed(seed, "flagid-state", t as u64))
            .expect("sampler parameters are valid");

        let inner = random_incoherent_channel(d, n, mix_seed(seed, "flagid-channel", t as u64));
        let flag_ch = flag_channel_b3(&inner).expect("inner channel is square");
        let got = apply_raw(&flag_ch, flag_input(n, &rho).mat());
        let mut expected = CMat::zeros(0, 0);
        for k in inner.kraus() {
            expected = matcore::direct_sum(&expected, &k.matmul(rho.mat()).matmul(&k.adjoint()));
        }
        max_flag = max_flag.max(got.sub(&expected).max_abs());

        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, "flagid-weights", t as u64));
        let weights = random_simplex(&mut rng, n);
        let blocks: Vec<DensityState> = (0..n)
            .map(|b| {
                random_density(d, 1 + (t + b) % d, mix_seed(seed, "flagid-block", (t * 8 + b) as u64))
                    .expect("sampler parameters are valid")
            })
            .collect();
        let spec = BlockSpec::new(weights.clone(), blocks.clone()).expect("sampled blocks");
        let flagged = block_mix(&spec);
        let got = apply_raw(&merge_flag_channel(n, d), flagged.mat());
        let mut average = CMat::zeros(d, d);
        for (w, b) in weights.iter().zip(&blocks) {
            average = average.add(&b.mat().scale_re(*w));
        }
        let e00 = CMat::from_fn(n, n, |i, j| {
            if i == 0 && j == 0 {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let expected = matcore::kron(&e00, &average);
        max_merge = max_merge.max(got.sub(&expected).max_abs());

        let embedded = apply_raw(&embed_channel(d, 2), rho.mat());
        let back = apply_raw(&truncate_channel(d, 2), &embedded);
        max_roundtrip = max_roundtrip.max(back.sub(rho.mat()).max_abs());
    }
    let passed = max_flag <= tol && max_merge <= tol && max_roundtrip <= tol;
    FlagIdentityRecord {
        trials,
        max_flag_residual: max_flag,
        max_merge_residual: max_merge,
        max_roundtrip_residual: max_roundtrip,
        tol,
        seed,
        passed,
    }
}

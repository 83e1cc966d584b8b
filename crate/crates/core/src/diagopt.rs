//! Minimization of trace distance to a constrained diagonal matrix.
//!
//! Both quantifier optimizations in this crate have the form
//! `min_D || rho - diag(D) ||_tr` with `D` ranging over either the
//! probability simplex or the nonnegative orthant. The objective is convex
//! and piecewise smooth; it is minimized by projected subgradient descent
//! with a diminishing step and multistart, followed by a deterministic
//! two-stage polish: cyclic ternary line searches along feasible coordinate
//! directions, alternated with projected smoothed-gradient steps
//! (`sum_s sqrt(lambda_s^2 + mu^2)` with decreasing `mu`) that escape the
//! nonsmooth kinks coordinate directions cannot. An exhaustive
//! `grid_oracle` provides an independent upper bound for cross-checking on
//! small dimensions.

use crate::matcore::{self, CMat, C64};
use crate::states::DensityState;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use thiserror::Error;

/// Default accuracy target for the returned value.
pub const DEFAULT_TOL: f64 = 1e-6;

/// Iteration budget per start.
pub const MAX_ITERATIONS: usize = 50_000;

/// A start stalls (converges) when the best value improves by less than
/// `tol / 10` over this many consecutive iterations.
pub const STALL_WINDOW: usize = 200;

/// Step size at iteration `k` is `INITIAL_STEP / sqrt(k + 1)`.
pub const INITIAL_STEP: f64 = 0.5;

/// Number of starts: the dephased diagonal plus random feasible points.
pub const MULTISTARTS: usize = 5;

/// Eigenvalues below this magnitude contribute sign 0 to the subgradient.
pub const SIGN_EIG_TOL: f64 = 1e-12;

/// Hard cap on `grid_oracle` dimensions; the grid grows combinatorially.
pub const ORACLE_MAX_DIM: usize = 4;

/// Orthant grids cover `[0, ORTHANT_BOX]` per coordinate. Any minimizer
/// lies inside: a diagonal entry exceeding `rho_ii + 2` already makes the
/// objective larger than the dephased-diagonal fallback.
pub const ORTHANT_BOX: f64 = 3.0;

/// Smoothing schedule for the gradient stage of the polish. The smoothed
/// objective deviates from the true one by at most `n * mu`.
pub const SMOOTH_MU_LEVELS: [f64; 7] = [1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9];

/// Smoothed-gradient steps per smoothing level.
const SMOOTH_MAX_STEPS: usize = 40;

/// Objective evaluations allowed per smoothing level (steps plus all line
/// search trials); keeps pathological line searches from dominating runtime.
const SMOOTH_LEVEL_EVAL_BUDGET: usize = 300;

/// Required decrease fraction in the backtracking line search.
const ARMIJO_FRACTION: f64 = 0.3;

/// Step halvings before a line search gives up.
const ARMIJO_MAX_HALVINGS: usize = 45;

/// Pairwise coordinate directions are enumerated exhaustively only up to
/// this dimension; beyond it the polish keeps a linear-size direction set
/// and relies on the smoothed-gradient stage.
const PAIR_DIRECTION_MAX_DIM: usize = 8;

/// Result of one optimization: best value found, its argument, the total
/// subgradient iterations spent across all starts, and whether the stall
/// criterion was met by at least one start.
#[derive(Debug, Clone)]
pub struct OptResult {
    pub value: f64,
    pub argmin: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Feasible sets for the diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagConstraint {
    /// Probability vectors: nonnegative entries summing to 1.
    Simplex,
    /// Nonnegative entries with free total weight.
    NonnegOrthant,
}

/// Errors from the optimizer and the grid oracle.
#[derive(Debug, Clone, Error)]
pub enum OptError {
    #[error(
        "optimizer exhausted {} iterations without stalling; best value {:.6e}",
        .partial.iterations, .partial.value
    )]
    NotConverged { partial: OptResult },
    #[error("dimension {dim} exceeds the grid-oracle limit {max}")]
    DimensionTooLarge { dim: usize, max: usize },
}

/// Trace-norm objective `|| rho - diag(d) ||_tr`.
fn objective(rho: &CMat, d: &[f64]) -> f64 {
    objective_and_subgradient(rho, d).0
}

/// Objective value and a subgradient with respect to the diagonal entries.
///
/// With the spectral sign `sgn(M) = sum_s sign(lambda_s) v_s v_s†`, the
/// subgradient of `||rho - diag(d)||_tr` in `d_i` is `-sgn(M)_ii`.
fn objective_and_subgradient(rho: &CMat, d: &[f64]) -> (f64, Vec<f64>) {
    let n = rho.rows();
    let mut m = rho.clone();
    for i in 0..n {
        let v = m.get(i, i);
        m.set(i, i, v - C64::new(d[i], 0.0));
    }
    let eig = matcore::herm_eig(&m).expect("rho - diag(d) is Hermitian by construction");
    let value = eig.eigenvalues.iter().map(|l| l.abs()).sum();
    let mut grad = vec![0.0; n];
    for (s, &l) in eig.eigenvalues.iter().enumerate() {
        if l.abs() < SIGN_EIG_TOL {
            continue;
        }
        let sign = l.signum();
        for (i, g) in grad.iter_mut().enumerate() {
            *g -= sign * eig.eigenvectors.get(i, s).norm_sqr();
        }
    }
    (value, grad)
}

/// Euclidean projection onto the probability simplex (sort-and-threshold).
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cum += uj;
        let candidate = (1.0 - cum) / (j + 1) as f64;
        if uj + candidate > 0.0 {
            theta = candidate;
        }
    }
    v.iter().map(|&x| (x + theta).max(0.0)).collect()
}

/// Euclidean projection onto the nonnegative orthant.
pub fn project_orthant(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| x.max(0.0)).collect()
}

fn project(v: &[f64], constraint: DiagConstraint) -> Vec<f64> {
    match constraint {
        DiagConstraint::Simplex => project_simplex(v),
        DiagConstraint::NonnegOrthant => project_orthant(v),
    }
}

struct RunOutcome {
    value: f64,
    argmin: Vec<f64>,
    iterations: usize,
    stalled: bool,
}

/// One projected-subgradient run from a feasible start.
fn subgradient_run(rho: &CMat, start: Vec<f64>, constraint: DiagConstraint, tol: f64) -> RunOutcome {
    let improve_eps = tol / 10.0;
    let mut d = start;
    let mut best_value = f64::INFINITY;
    let mut best_arg = d.clone();
    // Ring buffer of the best value STALL_WINDOW iterations ago.
    let mut history = vec![f64::INFINITY; STALL_WINDOW];
    for k in 0..MAX_ITERATIONS {
        let (value, grad) = objective_and_subgradient(rho, &d);
        if value < best_value {
            best_value = value;
            best_arg = d.clone();
        }
        let slot = k % STALL_WINDOW;
        if k >= STALL_WINDOW && history[slot] - best_value < improve_eps {
            return RunOutcome {
                value: best_value,
                argmin: best_arg,
                iterations: k + 1,
                stalled: true,
            };
        }
        history[slot] = best_value;
        let step = INITIAL_STEP / ((k + 1) as f64).sqrt();
        let moved: Vec<f64> = d.iter().zip(&grad).map(|(x, g)| x - step * g).collect();
        d = project(&moved, constraint);
    }
    RunOutcome {
        value: best_value,
        argmin: best_arg,
        iterations: MAX_ITERATIONS,
        stalled: false,
    }
}

/// A feasible line direction for the polish phase.
#[derive(Clone, Copy)]
enum PolishDir {
    /// `arg[i] += t`.
    Axis(usize),
    /// `arg[i] += t, arg[j] -= t` (weight transfer; preserves the total).
    Transfer(usize, usize),
    /// `arg[i] += t, arg[j] += t` (joint move; changes the total).
    Joint(usize, usize),
}

impl PolishDir {
    fn apply(self, arg: &mut [f64], t: f64) {
        match self {
            PolishDir::Axis(i) => arg[i] += t,
            PolishDir::Transfer(i, j) => {
                arg[i] += t;
                arg[j] -= t;
            }
            PolishDir::Joint(i, j) => {
                arg[i] += t;
                arg[j] += t;
            }
        }
    }

    /// Largest feasible interval for `t` from `arg` along this direction.
    fn bounds(self, arg: &[f64]) -> (f64, f64) {
        match self {
            PolishDir::Axis(i) => (-arg[i], ORTHANT_BOX - arg[i]),
            PolishDir::Transfer(i, j) => (-arg[i], arg[j]),
            PolishDir::Joint(i, j) => (
                (-arg[i]).max(-arg[j]),
                (ORTHANT_BOX - arg[i]).min(ORTHANT_BOX - arg[j]),
            ),
        }
    }
}

fn polish_directions(n: usize, constraint: DiagConstraint) -> Vec<PolishDir> {
    let mut dirs = Vec::new();
    let all_pairs = n <= PAIR_DIRECTION_MAX_DIM;
    match constraint {
        // Transfers span the simplex's tangent space; axis or joint moves
        // would leave it. Large dimensions keep only the ring of adjacent
        // transfers (quadratically many searches get expensive).
        DiagConstraint::Simplex => {
            if all_pairs {
                for i in 0..n {
                    for j in (i + 1)..n {
                        dirs.push(PolishDir::Transfer(i, j));
                    }
                }
            } else {
                for i in 0..n {
                    dirs.push(PolishDir::Transfer(i, (i + 1) % n));
                }
            }
        }
        // Axis moves alone stall at eigenvalue kinks that line up across
        // coordinates; pair moves break those ties.
        DiagConstraint::NonnegOrthant => {
            for i in 0..n {
                dirs.push(PolishDir::Axis(i));
            }
            if all_pairs {
                for i in 0..n {
                    for j in (i + 1)..n {
                        dirs.push(PolishDir::Transfer(i, j));
                        dirs.push(PolishDir::Joint(i, j));
                    }
                }
            }
        }
    }
    dirs
}

/// Cyclic ternary-search refinement along feasible line directions. Each
/// restriction of the convex objective to a segment is unimodal, so ternary
/// search finds its minimum to interval width 1e-9.
fn coordinate_polish(rho: &CMat, arg: &mut Vec<f64>, constraint: DiagConstraint, tol: f64) -> f64 {
    let mut best = objective(rho, arg);
    let directions = polish_directions(arg.len(), constraint);
    for _pass in 0..12 {
        let before = best;
        for &dir in &directions {
            let (mut lo, mut hi) = dir.bounds(arg);
            if hi - lo <= 1e-12 {
                continue;
            }
            let eval = |t: f64, arg: &mut Vec<f64>| -> f64 {
                dir.apply(arg, t);
                let v = objective(rho, arg);
                dir.apply(arg, -t);
                v
            };
            while hi - lo > 1e-9 {
                let m1 = lo + (hi - lo) / 3.0;
                let m2 = hi - (hi - lo) / 3.0;
                if eval(m1, arg) <= eval(m2, arg) {
                    hi = m2;
                } else {
                    lo = m1;
                }
            }
            let t = 0.5 * (lo + hi);
            let candidate = eval(t, arg);
            if candidate < best {
                best = candidate;
                dir.apply(arg, t);
                *arg = project(arg, constraint);
            }
        }
        if before - best < tol / 100.0 {
            break;
        }
    }
    best
}

/// True objective, smoothed objective `f_mu(d) = sum_s sqrt(lambda_s^2 + mu^2)`,
/// and the gradient of the latter, all from one eigendecomposition of
/// `rho - diag(d)`. As `mu -> 0` the smoothed value approaches the trace norm
/// from above (within `n * mu`), and its gradient blends the eigenvalue signs
/// near zero crossings instead of jumping.
fn smoothed_eval(rho: &CMat, d: &[f64], mu: f64) -> (f64, f64, Vec<f64>) {
    let n = rho.rows();
    let mut m = rho.clone();
    for i in 0..n {
        let v = m.get(i, i);
        m.set(i, i, v - C64::new(d[i], 0.0));
    }
    let eig = matcore::herm_eig(&m).expect("rho - diag(d) is Hermitian by construction");
    let mut f_true = 0.0;
    let mut f_mu = 0.0;
    let mut grad = vec![0.0; n];
    for (s, &l) in eig.eigenvalues.iter().enumerate() {
        f_true += l.abs();
        let smooth = (l * l + mu * mu).sqrt();
        f_mu += smooth;
        let weight = l / smooth;
        for (i, g) in grad.iter_mut().enumerate() {
            *g -= weight * eig.eigenvectors.get(i, s).norm_sqr();
        }
    }
    (f_true, f_mu, grad)
}

/// Steepest feasible descent direction for `-grad` at `arg`.
///
/// Orthant: negate the gradient, zeroing components that push through an
/// active bound. Simplex: project `-grad` onto the tangent of the active
/// face (zero-sum over free coordinates), dropping coordinates that would
/// be pushed below zero until the active set stabilizes.
fn descent_direction(grad: &[f64], arg: &[f64], constraint: DiagConstraint) -> Vec<f64> {
    const ACTIVE_EPS: f64 = 1e-14;
    let n = arg.len();
    match constraint {
        DiagConstraint::NonnegOrthant => (0..n)
            .map(|i| {
                let d = -grad[i];
                if (arg[i] <= ACTIVE_EPS && d < 0.0) || (arg[i] >= ORTHANT_BOX - ACTIVE_EPS && d > 0.0)
                {
                    0.0
                } else {
                    d
                }
            })
            .collect(),
        DiagConstraint::Simplex => {
            let mut free: Vec<bool> = arg.iter().map(|&x| x > ACTIVE_EPS).collect();
            loop {
                let count = free.iter().filter(|&&f| f).count();
                if count == 0 {
                    return vec![0.0; n];
                }
                let mean: f64 = grad
                    .iter()
                    .zip(&free)
                    .filter(|(_, &f)| f)
                    .map(|(&g, _)| g)
                    .sum::<f64>()
                    / count as f64;
                let dir: Vec<f64> = (0..n)
                    .map(|i| if free[i] { mean - grad[i] } else { 0.0 })
                    .collect();
                let mut changed = false;
                for i in 0..n {
                    if free[i] && arg[i] <= ACTIVE_EPS && dir[i] < 0.0 {
                        free[i] = false;
                        changed = true;
                    }
                }
                if !changed {
                    return dir;
                }
            }
        }
    }
}

/// Largest feasible step along `dir` from `arg` (capped at 10).
fn max_feasible_step(arg: &[f64], dir: &[f64], constraint: DiagConstraint) -> f64 {
    let mut tmax: f64 = 10.0;
    for (i, &d) in dir.iter().enumerate() {
        if d < -1e-300 {
            tmax = tmax.min(arg[i] / -d);
        }
        if matches!(constraint, DiagConstraint::NonnegOrthant) && d > 1e-300 {
            tmax = tmax.min((ORTHANT_BOX - arg[i]) / d);
        }
    }
    tmax.max(0.0)
}

/// Smoothing-continuation descent: for a decreasing schedule of `mu`,
/// approximately minimize the smooth convex surrogate `f_mu` by projected
/// gradient steps with Armijo backtracking ON THE SURROGATE, warm-starting
/// each level at the previous one's iterate. The surrogate's gradient points
/// into the descent cone at eigenvalue kinks where fixed line directions
/// stall; since `f <= f_mu <= f + n*mu`, driving `f_mu` down at small `mu`
/// drives the true objective down too. Returns the best true value seen and
/// leaves `arg` at its argument.
fn smoothed_descent(rho: &CMat, arg: &mut Vec<f64>, constraint: DiagConstraint) -> f64 {
    let mut best_true = objective(rho, arg);
    let mut best_arg = arg.clone();
    let mut x = arg.clone();
    for &mu in SMOOTH_MU_LEVELS.iter() {
        let (mut f_true, mut f_mu, mut grad) = smoothed_eval(rho, &x, mu);
        if f_true < best_true {
            best_true = f_true;
            best_arg = x.clone();
        }
        let mut evals = 1usize;
        for _step in 0..SMOOTH_MAX_STEPS {
            if evals > SMOOTH_LEVEL_EVAL_BUDGET {
                break;
            }
            let dir = descent_direction(&grad, &x, constraint);
            let slope: f64 = grad.iter().zip(&dir).map(|(g, d)| g * d).sum();
            if slope >= -1e-15 {
                break;
            }
            let tmax = max_feasible_step(&x, &dir, constraint);
            if tmax <= 1e-15 {
                break;
            }
            let mut t = tmax;
            let mut accepted = false;
            for _half in 0..ARMIJO_MAX_HALVINGS {
                let candidate: Vec<f64> =
                    x.iter().zip(&dir).map(|(xi, d)| xi + t * d).collect();
                let candidate = project(&candidate, constraint);
                let (cand_true, cand_mu, cand_grad) = smoothed_eval(rho, &candidate, mu);
                evals += 1;
                if cand_mu <= f_mu + ARMIJO_FRACTION * t * slope {
                    x = candidate;
                    f_true = cand_true;
                    f_mu = cand_mu;
                    grad = cand_grad;
                    if f_true < best_true {
                        best_true = f_true;
                        best_arg = x.clone();
                    }
                    accepted = true;
                    break;
                }
                t *= 0.5;
                if evals > SMOOTH_LEVEL_EVAL_BUDGET {
                    break;
                }
            }
            if !accepted {
                break;
            }
        }
    }
    *arg = best_arg;
    best_true
}

/// Terminal refinement: alternate cyclic line-direction polish with
/// smoothing-continuation gradient descent until neither improves.
fn polish(rho: &CMat, arg: &mut Vec<f64>, constraint: DiagConstraint, tol: f64) -> f64 {
    let mut best = coordinate_polish(rho, arg, constraint, tol);
    for _round in 0..2 {
        let before = best;
        best = best.min(smoothed_descent(rho, arg, constraint));
        best = best.min(coordinate_polish(rho, arg, constraint, tol));
        if before - best < tol / 100.0 {
            break;
        }
    }
    best
}

fn random_feasible(n: usize, constraint: DiagConstraint, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let draws: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    match constraint {
        DiagConstraint::Simplex => {
            let sum: f64 = draws.iter().sum();
            draws.iter().map(|x| x / sum).collect()
        }
        DiagConstraint::NonnegOrthant => draws.iter().map(|x| 0.5 * x).collect(),
    }
}

/// Minimizes `|| rho - diag(D) ||_tr` over the chosen feasible set.
///
/// Runs `MULTISTARTS` projected-subgradient descents (the dephased diagonal
/// plus seeded random feasible points), polishes the best argument with a
/// deterministic coordinate line search, and reports the polished value
/// from a fresh final evaluation. `iterations` counts subgradient steps
/// summed over starts. Fails with `NotConverged` only when no start meets
/// the stall criterion within the budget.
pub fn minimize_trace_distance(
    rho: &DensityState,
    constraint: DiagConstraint,
    tol: f64,
    seed: u64,
) -> Result<OptResult, OptError> {
    let n = rho.dim();
    let mat = rho.mat();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut starts: Vec<Vec<f64>> = vec![rho.diag_probs()];
    while starts.len() < MULTISTARTS {
        starts.push(random_feasible(n, constraint, &mut rng));
    }

    let mut total_iterations = 0;
    let mut any_stalled = false;
    let mut best: Option<RunOutcome> = None;
    for start in starts {
        let run = subgradient_run(mat, start, constraint, tol);
        total_iterations += run.iterations;
        any_stalled |= run.stalled;
        if best.as_ref().is_none_or(|b| run.value < b.value) {
            best = Some(run);
        }
    }
    let best = best.expect("at least one start always runs");
    let mut argmin = best.argmin;
    let polished = polish(mat, &mut argmin, constraint, tol);
    let value = polished.min(best.value);

    let result = OptResult {
        value,
        argmin,
        iterations: total_iterations,
        converged: any_stalled,
    };
    if !any_stalled {
        return Err(OptError::NotConverged { partial: result });
    }
    Ok(result)
}

/// Exhaustive grid search over the feasible set; an independent upper bound
/// on the true minimum, accurate to the grid spacing.
///
/// Simplex grids enumerate all compositions of `resolution`; orthant grids
/// cover `[0, ORTHANT_BOX]^dim` with `resolution + 1` points per axis. Both
/// grow combinatorially, hence the `ORACLE_MAX_DIM` cap.
pub fn grid_oracle(
    rho: &DensityState,
    constraint: DiagConstraint,
    resolution: usize,
) -> Result<f64, OptError> {
    let n = rho.dim();
    if n > ORACLE_MAX_DIM {
        return Err(OptError::DimensionTooLarge {
            dim: n,
            max: ORACLE_MAX_DIM,
        });
    }
    assert!(resolution >= 1, "resolution must be at least 1");
    let mat = rho.mat();
    let mut best = f64::INFINITY;
    match constraint {
        DiagConstraint::Simplex => {
            let mut point = vec![0.0; n];
            enumerate_compositions(resolution, 0, &mut vec![0usize; n], &mut |counts| {
                for (i, &c) in counts.iter().enumerate() {
                    point[i] = c as f64 / resolution as f64;
                }
                let v = objective(mat, &point);
                if v < best {
                    best = v;
                }
            });
        }
        DiagConstraint::NonnegOrthant => {
            let spacing = ORTHANT_BOX / resolution as f64;
            let mut counts = vec![0usize; n];
            let mut point = vec![0.0; n];
            loop {
                for (i, &c) in counts.iter().enumerate() {
                    point[i] = c as f64 * spacing;
                }
                let v = objective(mat, &point);
                if v < best {
                    best = v;
                }
                // Odometer increment over {0..resolution}^n.
                let mut carry = 0;
                loop {
                    if carry == n {
                        return Ok(best);
                    }
                    counts[carry] += 1;
                    if counts[carry] <= resolution {
                        break;
                    }
                    counts[carry] = 0;
                    carry += 1;
                }
            }
        }
    }
    Ok(best)
}

/// Calls `visit` with every vector of `parts.len()` nonnegative counts
/// summing to `total`.
fn enumerate_compositions(
    total: usize,
    index: usize,
    parts: &mut Vec<usize>,
    visit: &mut impl FnMut(&[usize]),
) {
    if index + 1 == parts.len() {
        parts[index] = total;
        visit(parts);
        return;
    }
    for take in 0..=total {
        parts[index] = take;
        enumerate_compositions(total - take, index + 1, parts, visit);
    }
}

//! Kraus channels and the free-operation constructions.
//!
//! A channel is a finite set of Kraus operators satisfying the completeness
//! relation. This module provides application (deterministic and selective),
//! the structural test for incoherent channels, a sampling-based test for
//! translation invariance with respect to a Hermitian observable, and the
//! named constructions used by the verifier: two-block projector channels,
//! embeddings, truncations, cyclic shifts, flag channels, and merge-flag
//! channels.

use crate::matcore::{self, CMat, C64};
use crate::states::{self, DensityState, StateError};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use thiserror::Error;

/// Completeness residual `max_abs(sum K†K - I)` must stay below this.
pub const COMPLETENESS_TOL: f64 = 1e-10;

/// Validation tolerance for states produced by channel application; slightly
/// looser than the construction tolerance to absorb round-off.
pub const APPLY_VALIDATE_TOL: f64 = 1e-9;

/// Selective outcomes with probability below this are flagged as null and
/// carry no post-measurement state.
pub const NULL_OUTCOME_TOL: f64 = 1e-12;

/// Default evolution times used when probing translation invariance.
pub const TI_DEFAULT_TIMES: [f64; 4] = [0.37, 1.0, 2.5, PI];

/// Default number of random probe states per evolution time.
pub const TI_DEFAULT_STATE_SAMPLES: usize = 8;

/// Errors from channel construction and application.
#[derive(Debug, Clone, Error)]
pub enum ChannelError {
    #[error("channel has no Kraus operators")]
    EmptyKraus,
    #[error("Kraus operator {index} has shape {rows}x{cols}, expected {out_dim}x{in_dim}")]
    ShapeMismatch {
        index: usize,
        rows: usize,
        cols: usize,
        out_dim: usize,
        in_dim: usize,
    },
    #[error("Kraus operators violate completeness: residual {0:.3e}")]
    NotComplete(f64),
    #[error("dimension mismatch: channel expects {expected}, input has {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("operation requires a square channel, got {in_dim} -> {out_dim}")]
    NotSquareChannel { in_dim: usize, out_dim: usize },
    #[error("shift amount {shift} is out of range for dimension {dim}")]
    ShiftOutOfRange { shift: usize, dim: usize },
    #[error("observable must be square: {rows}x{cols}")]
    ObservableNotSquare { rows: usize, cols: usize },
    #[error("observable is not Hermitian: asymmetry {found:.3e} exceeds tolerance {tol:.3e}")]
    ObservableNotHermitian { found: f64, tol: f64 },
    #[error("matrix has a non-finite entry at ({0}, {1})")]
    NonFinite(usize, usize),
    #[error(transparent)]
    State(#[from] StateError),
}

/// A completely positive trace-preserving map in Kraus form.
#[derive(Debug, Clone)]
pub struct KrausChannel {
    in_dim: usize,
    out_dim: usize,
    kraus: Vec<CMat>,
}

impl KrausChannel {
    /// Validates a set of Kraus operators: consistent shapes, finite
    /// entries, and completeness `sum K†K = I` within `COMPLETENESS_TOL`.
    pub fn new(kraus: Vec<CMat>) -> Result<Self, ChannelError> {
        let first = kraus.first().ok_or(ChannelError::EmptyKraus)?;
        let (out_dim, in_dim) = (first.rows(), first.cols());
        if in_dim == 0 || out_dim == 0 {
            return Err(ChannelError::ShapeMismatch {
                index: 0,
                rows: out_dim,
                cols: in_dim,
                out_dim,
                in_dim,
            });
        }
        for (index, k) in kraus.iter().enumerate() {
            if k.rows() != out_dim || k.cols() != in_dim {
                return Err(ChannelError::ShapeMismatch {
                    index,
                    rows: k.rows(),
                    cols: k.cols(),
                    out_dim,
                    in_dim,
                });
            }
            if let Some((i, j)) = k.first_non_finite() {
                return Err(ChannelError::NonFinite(i, j));
            }
        }
        let ch = KrausChannel {
            in_dim,
            out_dim,
            kraus,
        };
        let residual = ch.completeness_residual();
        if residual > COMPLETENESS_TOL {
            return Err(ChannelError::NotComplete(residual));
        }
        Ok(ch)
    }

    /// The identity channel on dimension `d`.
    pub fn identity(d: usize) -> Self {
        KrausChannel::new(vec![CMat::identity(d)]).expect("identity is complete")
    }

    /// Full dephasing in the reference basis: Kraus operators `|i><i|`.
    pub fn full_dephasing(d: usize) -> Self {
        assert!(d >= 1, "dimension must be at least 1");
        let kraus = (0..d)
            .map(|i| {
                let mut k = CMat::zeros(d, d);
                k.set(i, i, C64::new(1.0, 0.0));
                k
            })
            .collect();
        KrausChannel::new(kraus).expect("projectors onto a basis are complete")
    }

    /// Conjugation by a unitary, validated through the completeness check.
    pub fn from_unitary(u: CMat) -> Result<Self, ChannelError> {
        KrausChannel::new(vec![u])
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn kraus(&self) -> &[CMat] {
        &self.kraus
    }

    /// `max_abs(sum K†K - I)`.
    pub fn completeness_residual(&self) -> f64 {
        let mut sum = CMat::zeros(self.in_dim, self.in_dim);
        for k in &self.kraus {
            sum = sum.add(&k.adjoint().matmul(k));
        }
        sum.sub(&CMat::identity(self.in_dim)).max_abs()
    }
}

/// A Hermitian observable; used as the reference Hamiltonian for
/// translation invariance and skew information.
#[derive(Debug, Clone)]
pub struct Observable {
    dim: usize,
    mat: CMat,
}

impl Observable {
    /// Validates squareness, finiteness, and Hermiticity (within 1e-10).
    pub fn new(mat: CMat) -> Result<Self, ChannelError> {
        if !mat.is_square() {
            return Err(ChannelError::ObservableNotSquare {
                rows: mat.rows(),
                cols: mat.cols(),
            });
        }
        if let Some((i, j)) = mat.first_non_finite() {
            return Err(ChannelError::NonFinite(i, j));
        }
        let asym = mat.max_asymmetry();
        if asym > 1e-10 {
            return Err(ChannelError::ObservableNotHermitian {
                found: asym,
                tol: 1e-10,
            });
        }
        let dim = mat.rows();
        Ok(Observable { dim, mat })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mat(&self) -> &CMat {
        &self.mat
    }
}

/// Applies the channel to an arbitrary matrix: `sum_n K_n m K_n†`.
///
/// This is the linear action without state validation; `apply` wraps it for
/// density inputs. The result is built exactly Hermitian whenever the input
/// is Hermitian (upper triangle computed, lower mirrored).
pub fn apply_raw(ch: &KrausChannel, m: &CMat) -> CMat {
    let d = ch.out_dim;
    if m.max_asymmetry() <= 0.0 {
        // Hermitian input: K m K† is Hermitian; build it so exactly.
        let mut out = CMat::zeros(d, d);
        for k in &ch.kraus {
            let km = k.matmul(m);
            for i in 0..d {
                for j in i..d {
                    // (K m K†)[i][j] = row_i(K m) · conj(row_j(K))
                    let v: C64 = (0..ch.in_dim)
                        .map(|l| km.get(i, l) * k.get(j, l).conj())
                        .sum();
                    let cur = out.get(i, j);
                    out.set(i, j, cur + v);
                }
            }
        }
        for i in 0..d {
            for j in (i + 1)..d {
                out.set(j, i, out.get(i, j).conj());
            }
            let diag = out.get(i, i);
            out.set(i, i, C64::new(diag.re, 0.0));
        }
        out
    } else {
        let mut out = CMat::zeros(d, d);
        for k in &ch.kraus {
            out = out.add(&k.matmul(m).matmul(&k.adjoint()));
        }
        out
    }
}

/// Applies the channel to a density state, validating the output.
pub fn apply(ch: &KrausChannel, rho: &DensityState) -> Result<DensityState, ChannelError> {
    if rho.dim() != ch.in_dim {
        return Err(ChannelError::DimensionMismatch {
            expected: ch.in_dim,
            got: rho.dim(),
        });
    }
    let out = apply_raw(ch, rho.mat());
    Ok(states::make_density(out, APPLY_VALIDATE_TOL)?)
}

/// One branch of a selective measurement: outcome index, its probability,
/// and the normalized post-measurement state (`None` for null outcomes with
/// probability below `NULL_OUTCOME_TOL`).
#[derive(Debug, Clone)]
pub struct SelectiveOutcome {
    pub index: usize,
    pub probability: f64,
    pub state: Option<DensityState>,
}

/// Applies each Kraus operator selectively: outcome `n` has probability
/// `p_n = Tr(K_n rho K_n†)` and state `K_n rho K_n† / p_n`.
///
/// Validation of each outcome scales its tolerance with `1/p_n`: round-off
/// in `K rho K†` sits at fixed absolute size, so normalization by a small
/// probability amplifies it.
pub fn selective_outcomes(
    ch: &KrausChannel,
    rho: &DensityState,
) -> Result<Vec<SelectiveOutcome>, ChannelError> {
    if rho.dim() != ch.in_dim {
        return Err(ChannelError::DimensionMismatch {
            expected: ch.in_dim,
            got: rho.dim(),
        });
    }
    let mut outcomes = Vec::with_capacity(ch.kraus.len());
    for (index, k) in ch.kraus.iter().enumerate() {
        let single = KrausChannel {
            in_dim: ch.in_dim,
            out_dim: ch.out_dim,
            kraus: vec![k.clone()],
        };
        let raw = apply_raw(&single, rho.mat());
        let probability = raw.trace().re;
        let state = if probability < NULL_OUTCOME_TOL {
            None
        } else {
            let tol = APPLY_VALIDATE_TOL.max(1e-14 / probability);
            Some(states::make_density(
                raw.scale_re(1.0 / probability),
                tol,
            )?)
        };
        outcomes.push(SelectiveOutcome {
            index,
            probability,
            state,
        });
    }
    Ok(outcomes)
}

/// Structural test for incoherent channels: every Kraus operator has at
/// most one entry of modulus above `tol` in each column, so diagonal states
/// map to diagonal states branch by branch.
pub fn is_incoherent_channel(ch: &KrausChannel, tol: f64) -> bool {
    for k in &ch.kraus {
        for j in 0..k.cols() {
            let mut seen = 0usize;
            for i in 0..k.rows() {
                if k.get(i, j).norm() > tol {
                    seen += 1;
                    if seen > 1 {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Two-outcome projective channel onto the first `n1` basis states and the
/// remaining `n2`.
pub fn projector_channel(n1: usize, n2: usize) -> KrausChannel {
    assert!(n1 >= 1 && n2 >= 1, "both blocks must be nonempty");
    let d = n1 + n2;
    let p1 = CMat::from_fn(d, d, |i, j| {
        if i == j && i < n1 {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let p2 = CMat::from_fn(d, d, |i, j| {
        if i == j && i >= n1 {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    KrausChannel::new(vec![p1, p2]).expect("complementary projectors are complete")
}

/// Isometric embedding of dimension `n1` into dimension `n1 + n2`:
/// the single Kraus operator has entries `<i|K|j> = delta_ij`, so
/// `rho -> rho ⊕ 0`.
pub fn embed_channel(n1: usize, n2: usize) -> KrausChannel {
    assert!(n1 >= 1 && n2 >= 1, "both dimensions must be nonzero");
    let k = CMat::from_fn(n1 + n2, n1, |i, j| {
        if i == j {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    KrausChannel::new(vec![k]).expect("an isometry is complete")
}

/// Truncation from dimension `n1 + n2` back to `n1`: Kraus operators
/// `K_n` with entries `<j|K_n|i> = delta_{i, j + n*n1}` for
/// `n = 0 ..= ceil(n2/n1)`. Inverts `embed_channel` on embedded states.
pub fn truncate_channel(n1: usize, n2: usize) -> KrausChannel {
    assert!(n1 >= 1 && n2 >= 1, "both dimensions must be nonzero");
    let d = n1 + n2;
    let copies = n2.div_ceil(n1) + 1;
    let kraus = (0..copies)
        .map(|n| {
            CMat::from_fn(n1, d, |j, i| {
                if i == j + n * n1 {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            })
        })
        .collect();
    KrausChannel::new(kraus).expect("each input index lands in exactly one slice")
}

/// Cyclic shift unitary on dimension `dim`: `|k> -> |k + shift mod dim>`.
pub fn shift_unitary(dim: usize, shift: usize) -> Result<CMat, ChannelError> {
    if dim == 0 || shift >= dim {
        return Err(ChannelError::ShiftOutOfRange { shift, dim });
    }
    Ok(CMat::from_fn(dim, dim, |i, j| {
        if i == (j + shift) % dim {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    }))
}

/// Flag construction: given a square channel with Kraus operators `K_n`,
/// builds the channel with Kraus operators `U_n ⊗ K_n` on the enlarged
/// space, where `U_n` is the cyclic shift by `n` on a flag register of one
/// dimension per operator. Applied to `|0><0| ⊗ rho` it records each
/// selective outcome in the flag: `sum_n p_n |n><n| ⊗ rho_n`.
pub fn flag_channel_b3(ch: &KrausChannel) -> Result<KrausChannel, ChannelError> {
    if ch.in_dim != ch.out_dim {
        return Err(ChannelError::NotSquareChannel {
            in_dim: ch.in_dim,
            out_dim: ch.out_dim,
        });
    }
    let n_flags = ch.kraus.len();
    let mut kraus = Vec::with_capacity(n_flags);
    for (n, k) in ch.kraus.iter().enumerate() {
        let u = shift_unitary(n_flags, n)?;
        kraus.push(matcore::kron(&u, k));
    }
    KrausChannel::new(kraus)
}

/// Merge-flag construction on a `n_flags x d` composite: Kraus operators
/// `|0><n| ⊗ I_d` discard the flag, mapping `sum_n p_n |n><n| ⊗ rho_n` to
/// `|0><0| ⊗ sum_n p_n rho_n`.
pub fn merge_flag_channel(n_flags: usize, d: usize) -> KrausChannel {
    assert!(n_flags >= 1 && d >= 1, "dimensions must be nonzero");
    let total = n_flags * d;
    let kraus = (0..n_flags)
        .map(|n| {
            CMat::from_fn(total, total, |i, j| {
                if i < d && j == n * d + i {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            })
        })
        .collect();
    KrausChannel::new(kraus).expect("flag sectors partition the space")
}

/// Evolution unitary `exp(-i H t)` via the eigendecomposition of `H`.
pub fn evolution_unitary(h: &Observable, t: f64) -> CMat {
    let eig = matcore::herm_eig(h.mat()).expect("observable was validated Hermitian");
    let d = h.dim();
    let v = &eig.eigenvectors;
    CMat::from_fn(d, d, |i, j| {
        (0..d)
            .map(|s| {
                let phase = C64::from_polar(1.0, -eig.eigenvalues[s] * t);
                v.get(i, s) * phase * v.get(j, s).conj()
            })
            .sum()
    })
}

/// A concrete failure of translation invariance: at time `t`, the channel
/// and the evolution generated by the observable disagree on `state` by
/// `deviation` in max entry modulus.
#[derive(Debug, Clone)]
pub struct TiViolation {
    pub time: f64,
    pub state: DensityState,
    pub deviation: f64,
}

/// Searches for the worst violation of `e^{-iHt} L(rho) e^{iHt} =
/// L(e^{-iHt} rho e^{iHt})` over the given times and `state_samples`
/// seeded random states. Returns `None` when every probe stays within
/// `tol`; a returned violation is a checkable proof of failure, while
/// `None` is sampling evidence only.
pub fn translation_invariance_violation(
    ch: &KrausChannel,
    h: &Observable,
    times: &[f64],
    state_samples: usize,
    seed: u64,
    tol: f64,
) -> Result<Option<TiViolation>, ChannelError> {
    if ch.in_dim != ch.out_dim {
        return Err(ChannelError::NotSquareChannel {
            in_dim: ch.in_dim,
            out_dim: ch.out_dim,
        });
    }
    if h.dim() != ch.in_dim {
        return Err(ChannelError::DimensionMismatch {
            expected: ch.in_dim,
            got: h.dim(),
        });
    }
    let d = ch.in_dim;
    let mut worst: Option<TiViolation> = None;
    for &t in times {
        let u = evolution_unitary(h, t);
        let u_dag = u.adjoint();
        for s in 0..state_samples {
            let rank = 1 + s % d;
            let rho = states::random_density(d, rank, seed.wrapping_add(s as u64))?;
            let evolved = u.matmul(rho.mat()).matmul(&u_dag);
            let lhs = u.matmul(&apply_raw(ch, rho.mat())).matmul(&u_dag);
            let rhs = apply_raw(ch, &evolved);
            let deviation = lhs.sub(&rhs).max_abs();
            if deviation > tol && worst.as_ref().is_none_or(|w| deviation > w.deviation) {
                worst = Some(TiViolation {
                    time: t,
                    state: rho,
                    deviation,
                });
            }
        }
    }
    Ok(worst)
}

/// Sampling-based test for translation invariance; see
/// `translation_invariance_violation` for the evidence/proof asymmetry.
pub fn is_translation_invariant(
    ch: &KrausChannel,
    h: &Observable,
    times: &[f64],
    state_samples: usize,
    seed: u64,
    tol: f64,
) -> Result<bool, ChannelError> {
    Ok(translation_invariance_violation(ch, h, times, state_samples, seed, tol)?.is_none())
}

/// Seeded random incoherent channel on dimension `d` with `n_kraus`
/// operators.
///
/// Each Kraus operator is a basis permutation with complex amplitudes:
/// `K_n = sum_j c_{nj} |f_n(j)><j|` with `f_n` a uniformly random
/// permutation. Some amplitudes are randomly zeroed (keeping at least one
/// branch per column), and columns are normalized so `sum_n |c_{nj}|^2 = 1`,
/// which makes `sum_n K_n† K_n = I` hold exactly: each `K_n† K_n` is the
/// diagonal matrix of column weights. With one operator this reduces to a
/// permutation unitary with phases.
pub fn random_incoherent_channel(d: usize, n_kraus: usize, seed: u64) -> KrausChannel {
    assert!(d >= 1 && n_kraus >= 1, "dimensions must be nonzero");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut perms: Vec<Vec<usize>> = Vec::with_capacity(n_kraus);
    for _ in 0..n_kraus {
        let mut p: Vec<usize> = (0..d).collect();
        p.shuffle(&mut rng);
        perms.push(p);
    }

    let mut amps: Vec<Vec<C64>> = (0..n_kraus)
        .map(|_| (0..d).map(|_| states::standard_complex(&mut rng)).collect())
        .collect();
    // Sparsify: drop some branches entirely so the ensemble also covers
    // projective and dephasing-like channels.
    if n_kraus > 1 {
        for j in 0..d {
            for n in 0..n_kraus {
                if rng.random::<f64>() < 0.25 {
                    amps[n][j] = C64::new(0.0, 0.0);
                }
            }
            if (0..n_kraus).all(|n| amps[n][j].norm() == 0.0) {
                let n = rng.random_range(0..n_kraus);
                amps[n][j] = states::standard_complex(&mut rng);
            }
        }
    }
    for j in 0..d {
        let weight: f64 = (0..n_kraus).map(|n| amps[n][j].norm_sqr()).sum();
        let scale = 1.0 / weight.sqrt();
        for amp_row in amps.iter_mut() {
            amp_row[j] *= scale;
        }
    }

    let kraus = (0..n_kraus)
        .map(|n| {
            let mut k = CMat::zeros(d, d);
            for j in 0..d {
                k.set(perms[n][j], j, amps[n][j]);
            }
            k
        })
        .collect();
    KrausChannel::new(kraus).expect("column normalization gives exact completeness")
}

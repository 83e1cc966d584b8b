//! Coherence toolkit for finite-dimensional quantum states.
//!
//! What lives here:
//! - `matcore`: dense complex matrices, Hermitian eigendecomposition, trace
//!   norm, direct sums, Kronecker products, PSD square roots
//! - `states`: validated density matrices, maximally coherent states, block
//!   mixtures, dephasing, seeded random states
//! - `channels`: Kraus channels, incoherence and translation-invariance
//!   tests, and the named channel constructions (projector, embed, truncate,
//!   shift, flag, merge-flag)
//! - `diagopt`: minimization of trace distance to constrained diagonal
//!   matrices, plus an independent grid oracle
//! - `measures`: coherence quantifiers (relative entropy, l1, trace norm,
//!   modified trace norm, skew information)
//! - `framework`: property-based verification of monotonicity/additivity
//!   conditions with reproducible witnesses
//! - `jsonio`: JSON documents for states, channels, and reports

#![forbid(unsafe_code)]

pub mod channels;
pub mod diagopt;
pub mod framework;
pub mod jsonio;
pub mod matcore;
pub mod measures;
pub mod states;

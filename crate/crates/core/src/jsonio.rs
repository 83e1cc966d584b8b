//! JSON documents for states, observables, and channels.
//!
//! Complex matrices are carried as separate real and imaginary parts, nested
//! row-major, so files are easy to write by hand:
//!
//! ```json
//! { "dim": 2, "re": [[0.5, 0.5], [0.5, 0.5]], "im": [[0.0, 0.0], [0.0, 0.0]] }
//! ```

use crate::channels::{ChannelError, KrausChannel, Observable};
use crate::matcore::{CMat, C64};
use crate::states::{make_density, DensityState, StateError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from parsing or converting JSON documents.
#[derive(Debug, Error)]
pub enum JsonError {
    #[error("JSON syntax: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("bad matrix shape: {0}")]
    Shape(String),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// A complex square matrix split into real and imaginary parts.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MatrixDoc {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixDoc {
    /// Captures a square matrix.
    pub fn from_cmat(m: &CMat) -> Self {
        assert!(m.is_square(), "MatrixDoc holds square matrices");
        let d = m.rows();
        let part = |f: fn(&C64) -> f64| -> Vec<Vec<f64>> {
            (0..d)
                .map(|i| (0..d).map(|j| f(&m.get(i, j))).collect())
                .collect()
        };
        MatrixDoc {
            dim: d,
            re: part(|z| z.re),
            im: part(|z| z.im),
        }
    }

    pub fn from_density(rho: &DensityState) -> Self {
        Self::from_cmat(rho.mat())
    }

    pub fn from_observable(h: &Observable) -> Self {
        Self::from_cmat(h.mat())
    }

    /// Rebuilds the matrix, checking that both parts are `dim x dim`.
    pub fn to_cmat(&self) -> Result<CMat, JsonError> {
        let d = self.dim;
        for (name, part) in [("re", &self.re), ("im", &self.im)] {
            if part.len() != d {
                return Err(JsonError::Shape(format!(
                    "'{name}' has {} rows, expected {d}",
                    part.len()
                )));
            }
            for (i, row) in part.iter().enumerate() {
                if row.len() != d {
                    return Err(JsonError::Shape(format!(
                        "'{name}' row {i} has {} entries, expected {d}",
                        row.len()
                    )));
                }
            }
        }
        Ok(CMat::from_fn(d, d, |i, j| {
            C64::new(self.re[i][j], self.im[i][j])
        }))
    }

    /// Rebuilds and validates a density state.
    pub fn to_density(&self, tol: f64) -> Result<DensityState, JsonError> {
        Ok(make_density(self.to_cmat()?, tol)?)
    }

    /// Rebuilds and validates a Hermitian observable.
    pub fn to_observable(&self) -> Result<Observable, JsonError> {
        Ok(Observable::new(self.to_cmat()?)?)
    }
}

/// One Kraus operator, possibly rectangular.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct KrausOpDoc {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

/// A channel as an explicit list of Kraus operators.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ChannelDoc {
    pub in_dim: usize,
    pub out_dim: usize,
    pub kraus: Vec<KrausOpDoc>,
}

impl ChannelDoc {
    pub fn from_channel(ch: &KrausChannel) -> Self {
        let part = |m: &CMat, f: fn(&C64) -> f64| -> Vec<Vec<f64>> {
            (0..m.rows())
                .map(|i| (0..m.cols()).map(|j| f(&m.get(i, j))).collect())
                .collect()
        };
        ChannelDoc {
            in_dim: ch.in_dim(),
            out_dim: ch.out_dim(),
            kraus: ch
                .kraus()
                .iter()
                .map(|k| KrausOpDoc {
                    re: part(k, |z| z.re),
                    im: part(k, |z| z.im),
                })
                .collect(),
        }
    }

    /// Rebuilds the channel, revalidating shapes and completeness.
    pub fn to_channel(&self) -> Result<KrausChannel, JsonError> {
        let mut ops = Vec::with_capacity(self.kraus.len());
        for (n, op) in self.kraus.iter().enumerate() {
            for (name, part) in [("re", &op.re), ("im", &op.im)] {
                if part.len() != self.out_dim {
                    return Err(JsonError::Shape(format!(
                        "operator {n} '{name}' has {} rows, expected {}",
                        part.len(),
                        self.out_dim
                    )));
                }
                for (i, row) in part.iter().enumerate() {
                    if row.len() != self.in_dim {
                        return Err(JsonError::Shape(format!(
                            "operator {n} '{name}' row {i} has {} entries, expected {}",
                            row.len(),
                            self.in_dim
                        )));
                    }
                }
            }
            ops.push(CMat::from_fn(self.out_dim, self.in_dim, |i, j| {
                C64::new(op.re[i][j], op.im[i][j])
            }));
        }
        Ok(KrausChannel::new(ops)?)
    }
}

/// Parses a density state from JSON text.
pub fn density_from_json(text: &str, tol: f64) -> Result<DensityState, JsonError> {
    let doc: MatrixDoc = serde_json::from_str(text)?;
    doc.to_density(tol)
}

/// Serializes a density state to pretty JSON.
pub fn density_to_json(rho: &DensityState) -> String {
    serde_json::to_string_pretty(&MatrixDoc::from_density(rho)).expect("serialization never fails")
}

/// Parses a Hermitian observable from JSON text.
pub fn observable_from_json(text: &str) -> Result<Observable, JsonError> {
    let doc: MatrixDoc = serde_json::from_str(text)?;
    doc.to_observable()
}

/// Parses a Kraus channel from JSON text.
pub fn channel_from_json(text: &str) -> Result<KrausChannel, JsonError> {
    let doc: ChannelDoc = serde_json::from_str(text)?;
    doc.to_channel()
}

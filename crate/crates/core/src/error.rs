// Copyright 2026 ddopt Contributors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument violates a precondition.
    #[error("invalid input: {0}")]
    Input(String),

    /// A configuration document is well-formed JSON but violates the schema.
    #[error("schema error in field `{field}`: {message}")]
    Schema { field: String, message: String },

    /// A numerical procedure did not reach its target accuracy.
    #[error("{message} (best estimate {estimate:e}, achieved error {achieved_error:e})")]
    Numeric {
        message: String,
        estimate: f64,
        achieved_error: f64,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn schema(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by bad user input rather than numerics.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Numeric { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;

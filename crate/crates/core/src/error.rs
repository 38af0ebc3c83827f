// Copyright 2026 The neo-lite Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

use thiserror::Error;

pub type Result<T, E = NeoError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum NeoError {
    /// A caller broke an operation's precondition (wrong query, incomplete plan, ...).
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("catalog error: {0}")]
    Catalog(String),
    #[error("shape error: {0}")]
    Shape(String),
    /// Persisted artifacts disagree with each other (hash mismatch, bad manifest).
    #[error("integrity error: {0}")]
    Integrity(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl NeoError {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        NeoError::Contract(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        NeoError::Config(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        NeoError::Shape(msg.into())
    }
}

//! JSON state files.
//!
//! ```json
//! {
//!   "format": "keyrate-state",
//!   "version": 1,
//!   "key_dims": [2, 2],
//!   "shield_dims": [2, 2],
//!   "entries": [[[0.25, 0.0], [0.0, 0.0], ...], ...]
//! }
//! ```
//!
//! `entries` is the dense density matrix, row by row, in the ordering
//! `key A ⊗ key B ⊗ shield A' ⊗ shield B'`, each entry `[re, im]`.

use std::fmt;
use std::path::{Path, PathBuf};

use keyrate::blockstate::{BlockState, ShieldDims};
use keyrate::opalg::{ComplexMatrix, C64};
use serde::{Deserialize, Serialize};

pub const FORMAT: &str = "keyrate-state";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub format: String,
    pub version: u32,
    pub key_dims: [usize; 2],
    pub shield_dims: [usize; 2],
    pub entries: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug)]
pub enum StateFileError {
    Io { path: PathBuf, source: std::io::Error },
    Syntax { line: usize, column: usize, message: String },
    Field { field: String, message: String },
    Invalid { problems: Vec<String> },
}

impl fmt::Display for StateFileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Io { path, source } => write!(f, "{}: {source}", path.display()),
            Self::Syntax {
                line,
                column,
                message,
            } => write!(f, "line {line}, column {column}: {message}"),
            Self::Field { field, message } => write!(f, "field `{field}`: {message}"),
            Self::Invalid { problems } => {
                write!(f, "not a valid state: {}", problems.join("; "))
            }
        }
    }
}

impl std::error::Error for StateFileError {}

fn field(field: impl Into<String>, message: impl Into<String>) -> StateFileError {
    StateFileError::Field {
        field: field.into(),
        message: message.into(),
    }
}

impl StateFile {
    pub fn from_state(state: &BlockState) -> Self {
        let dense = state.to_dense();
        let entries = (0..dense.rows())
            .map(|r| dense.row(r).iter().map(|z| [z.re, z.im]).collect())
            .collect();
        let dims = state.dims();
        Self {
            format: FORMAT.to_string(),
            version: VERSION,
            key_dims: [2, 2],
            shield_dims: [dims.alice, dims.bob],
            entries,
        }
    }

    /// Structural checks and conversion; does not validate the state.
    pub fn to_state_unchecked(&self) -> Result<BlockState, StateFileError> {
        if self.format != FORMAT {
            return Err(field("format", format!("expected \"{FORMAT}\", got \"{}\"", self.format)));
        }
        if self.version != VERSION {
            return Err(field("version", format!("unsupported version {}", self.version)));
        }
        if self.key_dims != [2, 2] {
            return Err(field("key_dims", format!("only [2, 2] is supported, got {:?}", self.key_dims)));
        }
        let [a, b] = self.shield_dims;
        let dims = ShieldDims::new(a, b).map_err(|e| field("shield_dims", e.to_string()))?;
        let n = dims.dense_dim();
        if self.entries.len() != n {
            return Err(field(
                "entries",
                format!("expected {n} rows for shield {a}x{b}, got {}", self.entries.len()),
            ));
        }
        let mut data = Vec::with_capacity(n * n);
        for (r, row) in self.entries.iter().enumerate() {
            if row.len() != n {
                return Err(field(format!("entries[{r}]"), format!("expected {n} entries, got {}", row.len())));
            }
            for (c, &[re, im]) in row.iter().enumerate() {
                if !(re.is_finite() && im.is_finite()) {
                    return Err(field(format!("entries[{r}][{c}]"), "non-finite value"));
                }
                data.push(C64::new(re, im));
            }
        }
        let dense = ComplexMatrix::from_vec(n, n, data).map_err(|e| field("entries", e.to_string()))?;
        BlockState::from_dense_unchecked(&dense, dims).map_err(|e| field("entries", e.to_string()))
    }

    pub fn to_state(&self) -> Result<BlockState, StateFileError> {
        let state = self.to_state_unchecked()?;
        let v = state.validate();
        if !v.is_valid() {
            return Err(StateFileError::Invalid {
                problems: v.problems(),
            });
        }
        Ok(state)
    }

    pub fn to_json(&self) -> String {
        let mut out = String::new();
        out.push_str("{\n");
        out.push_str(&format!("  \"format\": {},\n", serde_json::to_string(&self.format).expect("string")));
        out.push_str(&format!("  \"version\": {},\n", self.version));
        out.push_str(&format!("  \"key_dims\": [{}, {}],\n", self.key_dims[0], self.key_dims[1]));
        out.push_str(&format!(
            "  \"shield_dims\": [{}, {}],\n",
            self.shield_dims[0], self.shield_dims[1]
        ));
        out.push_str("  \"entries\": [\n");
        for (r, row) in self.entries.iter().enumerate() {
            let row = serde_json::to_string(row).expect("finite floats");
            let sep = if r + 1 < self.entries.len() { "," } else { "" };
            out.push_str(&format!("    {row}{sep}\n"));
        }
        out.push_str("  ]\n}\n");
        out
    }
}

pub fn parse_state_file(text: &str) -> Result<StateFile, StateFileError> {
    serde_json::from_str(text).map_err(|e| StateFileError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

/// Parses and validates.
pub fn parse_state(text: &str) -> Result<BlockState, StateFileError> {
    parse_state_file(text)?.to_state()
}

pub fn read_state(path: &Path) -> Result<BlockState, StateFileError> {
    let text = std::fs::read_to_string(path).map_err(|source| StateFileError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_state(&text)
}

pub fn write_state(path: &Path, state: &BlockState) -> Result<(), StateFileError> {
    std::fs::write(path, StateFile::from_state(state).to_json()).map_err(|source| StateFileError::Io {
        path: path.to_path_buf(),
        source,
    })
}

//! Run parameters: command-line flags layered over an optional TOML file, plus
//! the compact constraint syntax.

use std::fs;
use std::path::Path;

use serde::Deserialize;
use shapereg::{ShapeConstraint, ShapeConstraintSpec, Sign};

use crate::error::CliError;

/// Keys accepted in a `--config` file; every one can be overridden by the
/// corresponding flag.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct RunConfig {
    pub method: Option<String>,
    pub degree: Option<u32>,
    pub constraints: Option<String>,
    pub init_grid: Option<usize>,
    pub ref_grid: Option<usize>,
    pub restarts: Option<usize>,
    pub max_iter: Option<usize>,
    pub epsilon: Option<Vec<f64>>,
    pub lambda: Option<f64>,
    pub resolution: Option<usize>,
    pub seed: Option<u64>,
    pub scenario: Option<String>,
    pub size: Option<usize>,
    pub noise: Option<f64>,
    pub bump: Option<f64>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::malformed(path, e))
    }
}

/// Parses the compact constraint list.
///
/// Positional tokens refer to directions 1, 2, ... in order: `0` leaves the
/// direction free, `+1`/`-1` ask for increasing/decreasing, `+2`/`-2` for
/// convex/concave. Tokens `cJ` and `vJ` add a concave or convex entry on
/// direction `J` (1-based) without consuming a position.
pub fn parse_constraints(text: &str) -> Result<ShapeConstraintSpec, CliError> {
    let mut entries = Vec::new();
    let mut position = 0usize;
    for raw in text.split(',') {
        let token = raw.trim();
        if token.is_empty() {
            return Err(CliError::validation(format!("empty entry in constraint list {text:?}")));
        }
        if let Some(rest) = token.strip_prefix(['c', 'v']) {
            let dir: usize = rest
                .parse()
                .ok()
                .filter(|&d| d >= 1)
                .ok_or_else(|| CliError::validation(format!("bad constraint token {token:?}")))?;
            entries.push(if token.starts_with('c') {
                ShapeConstraint::concave(dir - 1)
            } else {
                ShapeConstraint::convex(dir - 1)
            });
            continue;
        }
        let value: i64 = token
            .parse()
            .map_err(|_| CliError::validation(format!("bad constraint token {token:?}")))?;
        let sign = if value > 0 { Sign::Positive } else { Sign::Negative };
        match value.unsigned_abs() {
            0 => {}
            order @ (1 | 2) => entries.push(ShapeConstraint {
                direction: position,
                order: order as u32,
                sign,
            }),
            _ => {
                return Err(CliError::validation(format!(
                    "constraint token {token:?}: derivative order must be 1 or 2"
                )))
            }
        }
        position += 1;
    }
    ShapeConstraintSpec::new(entries).map_err(CliError::validation)
}

/// Inverse of [`parse_constraints`] for display.
pub fn format_constraints(spec: &ShapeConstraintSpec) -> String {
    if spec.is_empty() {
        return "none".into();
    }
    spec.entries()
        .iter()
        .map(|e| e.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

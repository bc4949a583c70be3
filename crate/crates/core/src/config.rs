//! Run configuration: a flat, human-writable sectioned key-value format
//! with expression strings, or the same structure as JSON. Parsing is
//! strict; any unrecognized section or key fails with its line number
//! before any computation starts.
//!
//! ```text
//! [phi]
//! family = m1
//! p = 2 + x
//!
//! [domain]
//! bounds = 0, 1
//! resolution = 1000
//!
//! [functions]
//! u = 3
//!
//! [command]
//! op = norm
//! u = u
//!
//! [output]
//! dir = out
//! seed = 42
//! ```

use crate::phi::PhiSpec;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
#[error("config: {message} (line {line}, column {column})")]
pub struct ConfigError {
    pub message: String,
    pub line: usize,
    pub column: usize,
}

fn fail<T>(message: impl Into<String>, line: usize, column: usize) -> Result<T, ConfigError> {
    Err(ConfigError { message: message.into(), line, column })
}

/// Domain block: 1-d `bounds = lo, hi` or 2-d `bounds = lo, hi, lo, hi`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub bounds: Vec<f64>,
    pub resolution: usize,
}

/// One operation invocation: the op name plus its parameters as strings,
/// validated per op at dispatch.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommandSpec {
    pub op: String,
    #[serde(default)]
    pub params: BTreeMap<String, String>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Relative tolerance on lambda in norm bisections.
    pub norm_tol: f64,
    /// Refinement doublings for standalone modulars.
    pub refinements: usize,
    /// Refinement doublings inside norm computations.
    pub norm_refinements: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            norm_tol: crate::norms::DEFAULT_TOL,
            refinements: crate::quad::DEFAULT_REFINEMENTS,
            norm_refinements: crate::norms::DEFAULT_REFINEMENTS,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<PhiSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainSpec>,
    /// Named expression strings usable as function references in commands.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub functions: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub commands: Vec<CommandSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl RunConfig {
    /// Parse from text or JSON depending on the leading non-space byte.
    pub fn parse(input: &str) -> Result<RunConfig, ConfigError> {
        if input.trim_start().starts_with('{') {
            Self::parse_json(input)
        } else {
            Self::parse_text(input)
        }
    }

    pub fn parse_json(input: &str) -> Result<RunConfig, ConfigError> {
        serde_json::from_str(input).map_err(|e| ConfigError {
            message: e.to_string(),
            line: e.line(),
            column: e.column(),
        })
    }

    pub fn parse_text(input: &str) -> Result<RunConfig, ConfigError> {
        let mut cfg = RunConfig::default();
        let mut section: Option<String> = None;
        for (idx, raw) in input.lines().enumerate() {
            let line_no = idx + 1;
            let line = strip_comment(raw);
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(rest) = trimmed.strip_prefix('[') {
                let name = match rest.strip_suffix(']') {
                    Some(n) => n.trim().to_ascii_lowercase(),
                    None => return fail("unterminated section header", line_no, 1),
                };
                match name.as_str() {
                    "phi" => {
                        if cfg.phi.is_some() {
                            return fail("duplicate [phi] section", line_no, 1);
                        }
                        cfg.phi = Some(PhiSpec::default());
                    }
                    "domain" => {
                        if cfg.domain.is_some() {
                            return fail("duplicate [domain] section", line_no, 1);
                        }
                        cfg.domain = Some(DomainSpec { bounds: Vec::new(), resolution: 0 });
                    }
                    "functions" | "output" | "tolerances" => {}
                    "command" => cfg
                        .commands
                        .push(CommandSpec { op: String::new(), params: BTreeMap::new() }),
                    other => return fail(format!("unknown section [{other}]"), line_no, 1),
                }
                section = Some(name);
                continue;
            }
            let (key, value, col) = split_key_value(trimmed, raw, line_no)?;
            let section_name = match &section {
                Some(s) => s.as_str(),
                None => return fail("key outside of any section", line_no, col),
            };
            match section_name {
                "phi" => {
                    let phi = cfg.phi.as_mut().expect("section opened");
                    match key.as_str() {
                        "family" => phi.family = value,
                        "p" => phi.p = Some(value),
                        "q" => phi.q = Some(value),
                        "weight" => phi.weight = Some(value),
                        "expr" => phi.expr = Some(value),
                        "density" => phi.density = Some(value),
                        other => {
                            return fail(format!("unknown key `{other}` in [phi]"), line_no, col)
                        }
                    }
                }
                "domain" => {
                    let domain = cfg.domain.as_mut().expect("section opened");
                    match key.as_str() {
                        "bounds" => domain.bounds = parse_number_list(&value, line_no, col)?,
                        "resolution" => {
                            domain.resolution = value.parse().map_err(|_| ConfigError {
                                message: format!("bad resolution `{value}`"),
                                line: line_no,
                                column: col,
                            })?;
                        }
                        other => {
                            return fail(
                                format!("unknown key `{other}` in [domain]"),
                                line_no,
                                col,
                            )
                        }
                    }
                }
                "functions" => {
                    cfg.functions.insert(key, value);
                }
                "command" => {
                    let cmd = cfg.commands.last_mut().expect("section opened");
                    if key == "op" {
                        cmd.op = value;
                    } else {
                        cmd.params.insert(key, value);
                    }
                }
                "output" => match key.as_str() {
                    "dir" => cfg.output_dir = Some(value),
                    "seed" => {
                        cfg.seed = value.parse().map_err(|_| ConfigError {
                            message: format!("bad seed `{value}`"),
                            line: line_no,
                            column: col,
                        })?;
                    }
                    other => {
                        return fail(format!("unknown key `{other}` in [output]"), line_no, col)
                    }
                },
                "tolerances" => {
                    let parse_f64 = |v: &str| -> Result<f64, ConfigError> {
                        v.parse().map_err(|_| ConfigError {
                            message: format!("bad number `{v}`"),
                            line: line_no,
                            column: col,
                        })
                    };
                    match key.as_str() {
                        "norm_tol" => cfg.tolerances.norm_tol = parse_f64(&value)?,
                        "refinements" => {
                            cfg.tolerances.refinements = parse_f64(&value)? as usize
                        }
                        "norm_refinements" => {
                            cfg.tolerances.norm_refinements = parse_f64(&value)? as usize
                        }
                        other => {
                            return fail(
                                format!("unknown key `{other}` in [tolerances]"),
                                line_no,
                                col,
                            )
                        }
                    }
                }
                _ => unreachable!("sections are validated on entry"),
            }
        }
        for (i, cmd) in cfg.commands.iter().enumerate() {
            if cmd.op.is_empty() {
                return fail(format!("[command] block {} has no `op` key", i + 1), 1, 1);
            }
        }
        Ok(cfg)
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn split_key_value(
    trimmed: &str,
    raw: &str,
    line_no: usize,
) -> Result<(String, String, usize), ConfigError> {
    let eq = match trimmed.find('=') {
        Some(i) => i,
        None => return fail("expected `key = value`", line_no, 1),
    };
    let key = trimmed[..eq].trim().to_string();
    if key.is_empty() {
        return fail("empty key", line_no, 1);
    }
    let mut value = trimmed[eq + 1..].trim().to_string();
    // Double quotes protect expressions with leading or trailing spaces.
    if value.len() >= 2 && value.starts_with('"') && value.ends_with('"') {
        value = value[1..value.len() - 1].to_string();
    }
    let col = raw.find(&key).map(|i| i + 1).unwrap_or(1);
    Ok((key, value, col))
}

fn parse_number_list(value: &str, line: usize, column: usize) -> Result<Vec<f64>, ConfigError> {
    value
        .split(',')
        .map(|s| {
            s.trim().parse::<f64>().map_err(|_| ConfigError {
                message: format!("bad number `{}` in list", s.trim()),
                line,
                column,
            })
        })
        .collect()
}

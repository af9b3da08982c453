//! Scenario config files.
//!
//! One `key = value` pair per line, `#` starts a comment. Lists are written
//! `[a, b, c]` and may span lines. Matrix entries are decimal literals or
//! `exp(rate)`.
//!
//! ```text
//! dimension = 2
//! matrix = [1, 1,
//!           0, 2]
//! init = [1, 1]
//! horizon = 1
//! checkpoints = [0.5, 1]   # defaults to [horizon]
//! ensemble_size = 100000   # defaults to 10000
//! seed = 7                 # defaults to 0
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use polya_core::model::{EntrySpec, InitialState, NavigationMatrix, ScenarioConfig};

pub const KEYS: [&str; 7] = [
    "dimension",
    "matrix",
    "init",
    "horizon",
    "checkpoints",
    "ensemble_size",
    "seed",
];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    /// Malformed text; `line` and `column` are 1-based.
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    /// Well-formed text describing an invalid scenario.
    #[error("invalid scenario: {}", .0.join("; "))]
    Validation(Vec<String>),
}

#[derive(Debug, Clone)]
struct Token {
    text: String,
    line: usize,
    column: usize,
}

impl Token {
    fn error(&self, message: impl Into<String>) -> ConfigError {
        ConfigError::Parse {
            line: self.line,
            column: self.column,
            message: message.into(),
        }
    }
}

#[derive(Debug)]
struct Value {
    key: Token,
    list: bool,
    items: Vec<Token>,
}

fn strip_comment(line: &str) -> &str {
    line.split('#').next().unwrap_or("")
}

/// Splits `text` (starting at `column` of `line`) on commas into trimmed
/// tokens. Only the last slot may be empty, which allows trailing commas.
fn split_items(
    text: &str,
    line: usize,
    column: usize,
    out: &mut Vec<Token>,
) -> Result<(), ConfigError> {
    let pieces: Vec<&str> = text.split(',').collect();
    let mut offset = 0;
    for (k, piece) in pieces.iter().enumerate() {
        let trimmed = piece.trim();
        let col = column + offset + (piece.len() - piece.trim_start().len());
        if trimmed.is_empty() {
            if k + 1 < pieces.len() {
                return Err(ConfigError::Parse {
                    line,
                    column: col,
                    message: "empty list item".into(),
                });
            }
        } else {
            out.push(Token {
                text: trimmed.to_string(),
                line,
                column: col,
            });
        }
        offset += piece.len() + 1;
    }
    Ok(())
}

fn tokenize(text: &str) -> Result<Vec<Value>, ConfigError> {
    let mut values: Vec<Value> = Vec::new();
    let mut open: Option<Value> = None;
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let body = strip_comment(raw);
        if let Some(mut value) = open.take() {
            let (inner, closed) = match body.find(']') {
                Some(p) => {
                    if !body[p + 1..].trim().is_empty() {
                        return Err(ConfigError::Parse {
                            line,
                            column: p + 2,
                            message: "unexpected text after ']'".into(),
                        });
                    }
                    (&body[..p], true)
                }
                None => (body, false),
            };
            if let Some(p) = inner.find('[') {
                return Err(ConfigError::Parse {
                    line,
                    column: p + 1,
                    message: "nested lists are not allowed".into(),
                });
            }
            split_items(inner, line, 1, &mut value.items)?;
            if closed {
                values.push(value);
            } else {
                open = Some(value);
            }
            continue;
        }
        if body.trim().is_empty() {
            continue;
        }
        let Some(eq) = body.find('=') else {
            let column = body.len() - body.trim_start().len() + 1;
            return Err(ConfigError::Parse {
                line,
                column,
                message: "expected `key = value`".into(),
            });
        };
        let key_text = &body[..eq];
        let key = Token {
            text: key_text.trim().to_string(),
            line,
            column: key_text.len() - key_text.trim_start().len() + 1,
        };
        if key.text.is_empty() {
            return Err(key.error("missing key before '='"));
        }
        if !KEYS.contains(&key.text.as_str()) {
            return Err(key.error(format!("unknown key `{}`", key.text)));
        }
        if values.iter().any(|v| v.key.text == key.text) {
            return Err(key.error(format!("duplicate key `{}`", key.text)));
        }
        let rest = &body[eq + 1..];
        let lead = rest.len() - rest.trim_start().len();
        let vcol = eq + 2 + lead;
        let rest = rest.trim();
        if rest.is_empty() {
            return Err(ConfigError::Parse {
                line,
                column: vcol,
                message: format!("missing value for `{}`", key.text),
            });
        }
        if let Some(after) = rest.strip_prefix('[') {
            let mut value = Value {
                key,
                list: true,
                items: Vec::new(),
            };
            match after.find(']') {
                Some(p) => {
                    if !after[p + 1..].trim().is_empty() {
                        return Err(ConfigError::Parse {
                            line,
                            column: vcol + p + 2,
                            message: "unexpected text after ']'".into(),
                        });
                    }
                    split_items(&after[..p], line, vcol + 1, &mut value.items)?;
                    values.push(value);
                }
                None => {
                    split_items(after, line, vcol + 1, &mut value.items)?;
                    open = Some(value);
                }
            }
        } else {
            values.push(Value {
                key,
                list: false,
                items: vec![Token {
                    text: rest.to_string(),
                    line,
                    column: vcol,
                }],
            });
        }
    }
    if let Some(value) = open {
        return Err(value
            .key
            .error(format!("list for `{}` is never closed", value.key.text)));
    }
    Ok(values)
}

fn real(tok: &Token) -> Result<f64, ConfigError> {
    match tok.text.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(tok.error(format!("expected a finite number, found `{}`", tok.text))),
    }
}

fn integer(tok: &Token) -> Result<u64, ConfigError> {
    tok.text.parse::<u64>().map_err(|_| {
        tok.error(format!(
            "expected a nonnegative integer, found `{}`",
            tok.text
        ))
    })
}

fn entry(tok: &Token) -> Result<EntrySpec, ConfigError> {
    let t = tok.text.as_str();
    if let Some(inner) = t.strip_prefix("exp(").and_then(|r| r.strip_suffix(')')) {
        let rate = Token {
            text: inner.trim().to_string(),
            line: tok.line,
            column: tok.column + 4,
        };
        let r = real(&rate)?;
        return EntrySpec::exponential(r).map_err(|e| tok.error(e.to_string()));
    }
    Ok(EntrySpec::Constant(real(tok)?))
}

fn scalar<'a>(
    values: &'a BTreeMap<&str, &Value>,
    key: &str,
) -> Result<Option<&'a Token>, ConfigError> {
    match values.get(key) {
        None => Ok(None),
        Some(v) if v.list || v.items.len() != 1 => {
            Err(v.key.error(format!("`{key}` takes a single value")))
        }
        Some(v) => Ok(Some(&v.items[0])),
    }
}

fn list<'a>(
    values: &'a BTreeMap<&str, &Value>,
    key: &str,
) -> Result<Option<&'a [Token]>, ConfigError> {
    match values.get(key) {
        None => Ok(None),
        Some(v) if !v.list => Err(v.items[0].error(format!("`{key}` takes a list `[...]`"))),
        Some(v) => Ok(Some(&v.items)),
    }
}

fn missing(key: &str) -> ConfigError {
    ConfigError::Validation(vec![format!("missing required key `{key}`")])
}

/// Parses a config document into a validated scenario.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let values = tokenize(text)?;
    let by_key: BTreeMap<&str, &Value> = values.iter().map(|v| (v.key.text.as_str(), v)).collect();

    let dim_tok = scalar(&by_key, "dimension")?.ok_or_else(|| missing("dimension"))?;
    let dim = integer(dim_tok)? as usize;
    if dim == 0 {
        return Err(dim_tok.error("dimension must be positive"));
    }
    let entries = list(&by_key, "matrix")?
        .ok_or_else(|| missing("matrix"))?
        .iter()
        .map(entry)
        .collect::<Result<Vec<_>, _>>()?;
    let init: Vec<f64> = list(&by_key, "init")?
        .ok_or_else(|| missing("init"))?
        .iter()
        .map(real)
        .collect::<Result<_, _>>()?;
    let horizon = real(scalar(&by_key, "horizon")?.ok_or_else(|| missing("horizon"))?)?;
    let checkpoints = match list(&by_key, "checkpoints")? {
        Some(items) => items.iter().map(real).collect::<Result<Vec<_>, _>>()?,
        None => vec![horizon],
    };
    let ensemble_size = match scalar(&by_key, "ensemble_size")? {
        Some(t) => integer(t)?,
        None => ScenarioConfig::DEFAULT_ENSEMBLE_SIZE,
    };
    let seed = match scalar(&by_key, "seed")? {
        Some(t) => integer(t)?,
        None => 0,
    };

    let mut problems = Vec::new();
    if entries.len() != dim * dim {
        problems.push(format!(
            "matrix has {} entries, dimension {dim} needs {}",
            entries.len(),
            dim * dim
        ));
    }
    if init.len() != dim {
        problems.push(format!(
            "init has {} coordinates, dimension is {dim}",
            init.len()
        ));
    }
    if !problems.is_empty() {
        return Err(ConfigError::Validation(problems));
    }
    let matrix = NavigationMatrix::new(dim, entries).map_err(core_problems)?;
    let init = InitialState::new(init).map_err(core_problems)?;
    ScenarioConfig::new(matrix, init, horizon, checkpoints, ensemble_size, seed)
        .map_err(core_problems)
}

fn core_problems(e: polya_core::Error) -> ConfigError {
    match e {
        polya_core::Error::Validation(v) => ConfigError::Validation(v),
        other => ConfigError::Validation(vec![other.to_string()]),
    }
}

fn join<T: std::fmt::Display>(xs: impl IntoIterator<Item = T>) -> String {
    xs.into_iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

/// Writes a scenario back as a config document that parses to the same value.
pub fn render_config(cfg: &ScenarioConfig) -> String {
    let d = cfg.dim();
    let mut s = String::new();
    let _ = writeln!(s, "dimension = {d}");
    let rows: Vec<String> = (0..d).map(|i| join(cfg.matrix.row(i))).collect();
    let _ = writeln!(s, "matrix = [{}]", rows.join(",\n          "));
    let _ = writeln!(s, "init = [{}]", join(cfg.init.coords()));
    let _ = writeln!(s, "horizon = {}", cfg.horizon);
    let _ = writeln!(s, "checkpoints = [{}]", join(&cfg.checkpoints));
    let _ = writeln!(s, "ensemble_size = {}", cfg.ensemble_size);
    let _ = writeln!(s, "seed = {}", cfg.master_seed);
    s
}

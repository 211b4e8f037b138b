//! Line-oriented `key = value` experiment files.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::integrator::{SchemeKind, DEFAULT_CLAMP_COEFF, DEFAULT_HIT_COEFF};
use crate::model::{Drift, Params, SimGrid};

pub const DEFAULT_DT: f64 = 1e-4;
pub const DEFAULT_T_END: f64 = 1.0;
pub const DEFAULT_N_PATHS: usize = 10_000;
pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_THIN: f64 = 1.0;
pub const DEFAULT_N_KEEP: usize = 10_000;

/// Every recognised key.
pub const KEYS: &[&str] = &[
    "kind",
    "alpha",
    "beta",
    "gamma",
    "delta",
    "mu",
    "nu",
    "dt",
    "t_end",
    "n_paths",
    "seed",
    "scheme",
    "epsilon",
    "n_trunc",
    "clamp_coeff",
    "hit_coeff",
    "x0",
    "y0",
    "out",
    "burn_in",
    "thin",
    "n_keep",
    "stride",
    "force",
    "start",
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("missing required key `{0}`")]
    MissingRequiredKey(&'static str),
    #[error("invalid value for `{key}`: {message}")]
    InvalidValue { key: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Classify,
    Simulate,
    Stationary,
    Deterministic,
    Hitting,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Classify => "classify",
            Kind::Simulate => "simulate",
            Kind::Stationary => "stationary",
            Kind::Deterministic => "deterministic",
            Kind::Hitting => "hitting",
        }
    }

    /// Kinds whose main product is a data file.
    pub fn emits_data(self) -> bool {
        self != Kind::Classify
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "classify" => Kind::Classify,
            "simulate" => Kind::Simulate,
            "stationary" => Kind::Stationary,
            "deterministic" => Kind::Deterministic,
            "hitting" => Kind::Hitting,
            _ => return Err(format!("unknown kind `{s}`")),
        })
    }
}

/// Starting profile of a deterministic run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartKind {
    ClosedForm,
    Perturbed,
}

/// Raw entries with the line each was read from; line 0 marks an override.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Entries {
    map: BTreeMap<String, (String, usize)>,
}

impl Entries {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|(v, _)| v.as_str())
    }

    /// Sets or replaces a value, as command-line flags do.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey {
                line: 0,
                key: key.to_string(),
            });
        }
        self.map.insert(key.to_string(), (value.trim().to_string(), 0));
        Ok(())
    }

    fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.map.get(key) {
            None => Ok(None),
            Some((v, line)) => v.parse::<T>().map(Some).map_err(|e| {
                if *line == 0 {
                    ConfigError::InvalidValue {
                        key: key.to_string(),
                        message: format!("`{v}`: {e}"),
                    }
                } else {
                    ConfigError::Parse {
                        line: *line,
                        message: format!("invalid value `{v}` for `{key}`: {e}"),
                    }
                }
            }),
        }
    }

    fn required<T: FromStr>(&self, key: &'static str) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.parsed(key)?.ok_or(ConfigError::MissingRequiredKey(key))
    }

    fn or<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        Ok(self.parsed(key)?.unwrap_or(default))
    }
}

pub fn parse_entries(text: &str) -> Result<Entries, ConfigError> {
    let mut entries = Entries::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Parse {
                line,
                message: format!("expected `key = value`, got `{content}`"),
            });
        };
        let key = key.trim();
        let value = value.trim();
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey {
                line,
                key: key.to_string(),
            });
        }
        if value.is_empty() {
            return Err(ConfigError::Parse {
                line,
                message: format!("empty value for `{key}`"),
            });
        }
        if let Some((_, first)) = entries.map.get(key) {
            return Err(ConfigError::Parse {
                line,
                message: format!("duplicate key `{key}` (first set on line {first})"),
            });
        }
        entries.map.insert(key.to_string(), (value.to_string(), line));
    }
    Ok(entries)
}

/// A fully specified run.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub kind: Kind,
    pub params: Params,
    pub drift: Drift,
    pub grid: SimGrid,
    pub n_paths: usize,
    pub seed: u64,
    pub scheme: SchemeKind,
    pub clamp_coeff: f64,
    pub hit_coeff: f64,
    pub x0: f64,
    pub y0: f64,
    /// Destination of the data product; `-` is standard output.
    pub output_path: Option<String>,
    /// Stationary burn-in; `None` selects the mixing-time heuristic.
    pub burn_in: Option<f64>,
    pub thin: f64,
    pub n_keep: usize,
    pub stride: usize,
    pub force: bool,
    pub start: StartKind,
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::InvalidValue {
        key: key.to_string(),
        message: message.into(),
    }
}

impl Experiment {
    pub fn from_entries(e: &Entries) -> Result<Self, ConfigError> {
        let kind: Kind = e.required("kind")?;
        let params = Params::new(
            e.required("alpha")?,
            e.required("beta")?,
            e.required("gamma")?,
            e.required("delta")?,
        );
        let drift = Drift::new(e.or("mu", 0.0)?, e.or("nu", 0.0)?);
        let grid = SimGrid::new(e.or("dt", DEFAULT_DT)?, e.or("t_end", DEFAULT_T_END)?)
            .map_err(|err| invalid("dt", err.to_string()))?;
        let n_paths: usize = e.or("n_paths", DEFAULT_N_PATHS)?;
        if n_paths == 0 {
            return Err(invalid("n_paths", "must be at least 1"));
        }
        let scheme = match e.or("scheme", "implicit_bessel".to_string())?.as_str() {
            "implicit_bessel" => SchemeKind::ImplicitBessel,
            "truncated_psi" => SchemeKind::TruncatedPsi {
                epsilon: e.required("epsilon")?,
            },
            "truncated_hn" => SchemeKind::TruncatedHn {
                n: e.required("n_trunc")?,
            },
            other => return Err(invalid("scheme", format!("unknown scheme `{other}`"))),
        };
        let output_path: Option<String> = e.parsed("out")?;
        if kind.emits_data() && output_path.is_none() {
            return Err(ConfigError::MissingRequiredKey("out"));
        }
        let thin: f64 = e.or("thin", DEFAULT_THIN)?;
        if !(thin.is_finite() && thin > 0.0) {
            return Err(invalid("thin", "must be positive"));
        }
        let stride: usize = e.or("stride", 1)?;
        if stride == 0 {
            return Err(invalid("stride", "must be at least 1"));
        }
        let start = match e.or("start", "closed_form".to_string())?.as_str() {
            "closed_form" => StartKind::ClosedForm,
            "perturbed" => StartKind::Perturbed,
            other => return Err(invalid("start", format!("unknown start `{other}`"))),
        };
        Ok(Experiment {
            kind,
            params,
            drift,
            grid,
            n_paths,
            seed: e.or("seed", DEFAULT_SEED)?,
            scheme,
            clamp_coeff: e.or("clamp_coeff", DEFAULT_CLAMP_COEFF)?,
            hit_coeff: e.or("hit_coeff", DEFAULT_HIT_COEFF)?,
            x0: e.or("x0", 1.0)?,
            y0: e.or("y0", 1.0)?,
            output_path,
            burn_in: e.parsed("burn_in")?,
            thin,
            n_keep: e.or("n_keep", DEFAULT_N_KEEP)?,
            stride,
            force: e.or("force", false)?,
            start,
        })
    }
}

pub fn parse_config(text: &str) -> Result<Experiment, ConfigError> {
    Experiment::from_entries(&parse_entries(text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "kind = classify\nalpha = 1\nbeta = 0.5\ngamma = -0.2\ndelta = 1\n";

    #[test]
    fn minimal_classify_gets_defaults() {
        let e = parse_config(MINIMAL).unwrap();
        assert_eq!(e.kind, Kind::Classify);
        assert_eq!(e.params, Params::new(1.0, 0.5, -0.2, 1.0));
        assert_eq!(e.drift, Drift::NONE);
        assert_eq!(e.grid.dt(), 1e-4);
        assert_eq!(e.grid.t_end(), 1.0);
        assert_eq!(e.n_paths, 10_000);
        assert_eq!(e.seed, 0);
        assert_eq!(e.scheme, SchemeKind::ImplicitBessel);
        assert_eq!(e.clamp_coeff, 1e-2);
        assert_eq!(e.hit_coeff, 1e-1);
        assert_eq!(e.output_path, None);
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = format!("# header\n\n{MINIMAL}seed = 9 # trailing\n");
        assert_eq!(parse_config(&text).unwrap().seed, 9);
    }

    #[test]
    fn duplicate_key_cites_second_line() {
        let text = format!("{MINIMAL}alpha = 2\n");
        match parse_config(&text) {
            Err(ConfigError::Parse { line, message }) => {
                assert_eq!(line, 6);
                assert!(message.contains("line 2"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_key_rejected() {
        let text = format!("{MINIMAL}colour = red\n");
        assert_eq!(
            parse_config(&text),
            Err(ConfigError::UnknownKey {
                line: 6,
                key: "colour".into()
            })
        );
    }

    #[test]
    fn truncated_hn_needs_n_trunc() {
        let text = format!("{MINIMAL}scheme = truncated_hn\n");
        assert_eq!(
            parse_config(&text),
            Err(ConfigError::MissingRequiredKey("n_trunc"))
        );
        let text = format!("{MINIMAL}scheme = truncated_hn\nn_trunc = 100\n");
        assert_eq!(
            parse_config(&text).unwrap().scheme,
            SchemeKind::TruncatedHn { n: 100 }
        );
    }

    #[test]
    fn data_kinds_need_out() {
        let text = MINIMAL.replace("classify", "simulate");
        assert_eq!(parse_config(&text), Err(ConfigError::MissingRequiredKey("out")));
    }

    #[test]
    fn overrides_replace_file_values() {
        let mut e = parse_entries(MINIMAL).unwrap();
        e.set("seed", "17").unwrap();
        e.set("alpha", "3").unwrap();
        let x = Experiment::from_entries(&e).unwrap();
        assert_eq!(x.seed, 17);
        assert_eq!(x.params.alpha, 3.0);
        assert!(e.set("nope", "1").is_err());
    }

    #[test]
    fn bad_values_cite_their_line() {
        let text = MINIMAL.replace("beta = 0.5", "beta = half");
        assert!(matches!(parse_config(&text), Err(ConfigError::Parse { line: 3, .. })));
        assert!(matches!(
            parse_config("kind = classify\nalpha\n"),
            Err(ConfigError::Parse { line: 2, .. })
        ));
    }
}

//! Run-file parsing: flat `key = value` lines with `#` comments, checked
//! against a fixed schema with line-numbered errors.

use em1d_core::linsolve::{ProfileFamily, ProfileSpec};
use em1d_core::nonlinear::{PressureLaw, RunConfig};
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("{0}")]
    Model(String),
}

fn schema(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError::Schema {
        line,
        message: message.into(),
    }
}

/// Parsed run file. Lengths and counts are validated downstream by the
/// model constructors; this layer only enforces types and the key set.
#[derive(Clone, Debug)]
pub struct FileConfig {
    pub grid_length: f64,
    pub mode_count: usize,
    pub t_end: f64,
    pub dt: Option<f64>,
    pub pressure_coeff: f64,
    pub pressure_exponent: f64,
    pub family: ProfileFamily,
    pub amplitude: f64,
    pub width: f64,
    pub seed: u64,
    pub snapshot_every: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub density_floor: f64,
}

pub const KEYS: &[&str] = &[
    "L",
    "N",
    "t_end",
    "dt",
    "pressure_K",
    "pressure_a",
    "init.family",
    "init.amplitude",
    "init.width",
    "seed",
    "snapshot_every",
    "output_dir",
    "density_floor",
];

pub fn parse(text: &str) -> Result<FileConfig, ConfigError> {
    let mut grid_length = None;
    let mut mode_count = None;
    let mut t_end = None;
    let mut config = FileConfig {
        grid_length: 0.0,
        mode_count: 0,
        t_end: 0.0,
        dt: None,
        pressure_coeff: 1.0,
        pressure_exponent: 1.0,
        family: ProfileFamily::Gaussian,
        amplitude: 1e-3,
        width: 1.0,
        seed: 0,
        snapshot_every: None,
        output_dir: None,
        density_floor: 0.1,
    };
    let mut seen: Vec<&str> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| schema(line, format!("expected `key = value`, got `{content}`")))?;
        let key = key.trim();
        let value = value.trim();
        let known = KEYS.iter().find(|&&k| k == key).ok_or_else(|| {
            schema(
                line,
                format!("unknown key `{key}` (expected one of {KEYS:?})"),
            )
        })?;
        if seen.contains(known) {
            return Err(schema(line, format!("duplicate key `{key}`")));
        }
        seen.push(known);

        let bad = |what: &str| schema(line, format!("key `{key}`: `{value}` is not {what}"));
        match key {
            "L" => grid_length = Some(value.parse::<f64>().map_err(|_| bad("a number"))?),
            "N" => mode_count = Some(value.parse::<usize>().map_err(|_| bad("a mode count"))?),
            "t_end" => t_end = Some(value.parse::<f64>().map_err(|_| bad("a number"))?),
            "dt" => config.dt = Some(value.parse::<f64>().map_err(|_| bad("a number"))?),
            "pressure_K" => {
                config.pressure_coeff = value.parse::<f64>().map_err(|_| bad("a number"))?
            }
            "pressure_a" => {
                config.pressure_exponent = value.parse::<f64>().map_err(|_| bad("a number"))?
            }
            "init.family" => {
                config.family = match value {
                    "gaussian" => ProfileFamily::Gaussian,
                    "bump" => ProfileFamily::QuarticBump,
                    "random" => ProfileFamily::RandomBandLimited,
                    _ => return Err(bad("one of gaussian|bump|random")),
                }
            }
            "init.amplitude" => {
                config.amplitude = value.parse::<f64>().map_err(|_| bad("a number"))?
            }
            "init.width" => config.width = value.parse::<f64>().map_err(|_| bad("a number"))?,
            "seed" => {
                config.seed = value
                    .parse::<u64>()
                    .map_err(|_| bad("an unsigned integer"))?
            }
            "snapshot_every" => {
                config.snapshot_every =
                    Some(value.parse::<usize>().map_err(|_| bad("a step count"))?)
            }
            "output_dir" => config.output_dir = Some(PathBuf::from(value)),
            "density_floor" => {
                config.density_floor = value.parse::<f64>().map_err(|_| bad("a number"))?
            }
            _ => unreachable!("key list is exhaustive"),
        }
    }

    config.grid_length = grid_length.ok_or(ConfigError::Missing("L"))?;
    config.mode_count = mode_count.ok_or(ConfigError::Missing("N"))?;
    config.t_end = t_end.ok_or(ConfigError::Missing("t_end"))?;
    Ok(config)
}

pub fn load(path: &PathBuf) -> Result<FileConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.clone(),
        source,
    })?;
    parse(&text)
}

impl FileConfig {
    pub fn profile_spec(&self) -> ProfileSpec {
        ProfileSpec {
            family: self.family,
            amplitude: self.amplitude,
            width: self.width,
            seed: self.seed,
            required_low_band_floor: None,
        }
    }

    pub fn to_run_config(&self) -> Result<RunConfig, ConfigError> {
        let law = PressureLaw::new(self.pressure_coeff, self.pressure_exponent)
            .map_err(|e| ConfigError::Model(e.to_string()))?;
        Ok(RunConfig {
            grid_length: self.grid_length,
            mode_count: self.mode_count,
            t_end: self.t_end,
            dt: self.dt,
            law,
            init: self.profile_spec(),
            snapshot_every: self.snapshot_every,
            output_dir: self.output_dir.clone(),
            density_floor: self.density_floor,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_file_with_comments() {
        let text = "\
# run parameters
L = 628.3185307179587
N = 1024          # modes
t_end = 200.0
dt = 0.1
pressure_K = 2.0
pressure_a = 1.5
init.family = bump
init.amplitude = 0.001
init.width = 1.0
seed = 42
snapshot_every = 500
output_dir = out/run1
density_floor = 0.2
";
        let c = parse(text).unwrap();
        assert_eq!(c.mode_count, 1024);
        assert_eq!(c.dt, Some(0.1));
        assert_eq!(c.family, ProfileFamily::QuarticBump);
        assert_eq!(c.seed, 42);
        assert_eq!(c.output_dir, Some(PathBuf::from("out/run1")));
        assert_eq!(c.pressure_coeff, 2.0);
        let rc = c.to_run_config().unwrap();
        assert_eq!(rc.law.gamma(), 3.0);
    }

    #[test]
    fn defaults_fill_optional_keys() {
        let c = parse("L = 10.0\nN = 64\nt_end = 1.0\n").unwrap();
        assert_eq!(c.dt, None);
        assert_eq!(c.family, ProfileFamily::Gaussian);
        assert_eq!(c.density_floor, 0.1);
        assert_eq!(c.snapshot_every, None);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse("L = 10.0\nN = 64\nbogus = 3\nt_end = 1.0\n").unwrap_err();
        assert!(matches!(err, ConfigError::Schema { line: 3, .. }), "{err}");
        let err = parse("L = 10.0\nL = 11.0\n").unwrap_err();
        assert!(matches!(err, ConfigError::Schema { line: 2, .. }), "{err}");
        let err = parse("L = ten\n").unwrap_err();
        assert!(matches!(err, ConfigError::Schema { line: 1, .. }), "{err}");
        let err = parse("L 10\n").unwrap_err();
        assert!(matches!(err, ConfigError::Schema { line: 1, .. }), "{err}");
    }

    #[test]
    fn missing_required_keys_are_named() {
        let err = parse("L = 10.0\nN = 64\n").unwrap_err();
        assert!(matches!(err, ConfigError::Missing("t_end")), "{err}");
    }

    #[test]
    fn family_values_are_validated() {
        let err = parse("L = 10.0\nN = 64\nt_end = 1.0\ninit.family = cosine\n").unwrap_err();
        assert!(err.to_string().contains("gaussian|bump|random"), "{err}");
    }
}

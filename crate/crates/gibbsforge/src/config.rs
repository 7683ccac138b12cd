//! Experiment configuration: flat key = value lines under bracketed section
//! headers. Decimals use '.', lists are comma-separated.

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Analyze,
    Equilibrium,
    Gibbs,
    Hyptimes,
    StatSweep,
    StochSweep,
}

impl Experiment {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "analyze" => Some(Experiment::Analyze),
            "equilibrium" => Some(Experiment::Equilibrium),
            "gibbs" => Some(Experiment::Gibbs),
            "hyptimes" => Some(Experiment::Hyptimes),
            "stat-sweep" => Some(Experiment::StatSweep),
            "stoch-sweep" => Some(Experiment::StochSweep),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Analyze => "analyze",
            Experiment::Equilibrium => "equilibrium",
            Experiment::Gibbs => "gibbs",
            Experiment::Hyptimes => "hyptimes",
            Experiment::StatSweep => "stat-sweep",
            Experiment::StochSweep => "stoch-sweep",
        }
    }
}

/// A knob that is either "auto" (module default) or a pinned value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AutoOr {
    Auto,
    Value(f64),
}

impl AutoOr {
    pub fn resolve(&self, auto: impl FnOnce() -> f64) -> f64 {
        match self {
            AutoOr::Auto => auto(),
            AutoOr::Value(v) => *v,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub map_name: String,
    pub map_params: Vec<f64>,
    pub potential_name: String,
    pub potential_params: Vec<f64>,
    pub experiment: Experiment,
    pub grid_n: usize,
    pub sigma: AutoOr,
    pub gamma: AutoOr,
    pub c: AutoOr,
    pub delta: AutoOr,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub sweep: Vec<f64>,
    pub samples: usize,
    pub n_max: usize,
    pub orbit_len: usize,
    pub timestamp: bool,
}

fn parse_list(raw: &str, line: usize) -> Result<Vec<f64>> {
    if raw.trim().is_empty() {
        return Ok(Vec::new());
    }
    raw.split(',')
        .map(|tok| {
            tok.trim().parse::<f64>().map_err(|_| Error::ConfigParse {
                line,
                message: format!("expected decimal, got `{}`", tok.trim()),
            })
        })
        .collect()
}

fn parse_auto_or(raw: &str, line: usize) -> Result<AutoOr> {
    if raw == "auto" {
        return Ok(AutoOr::Auto);
    }
    raw.parse::<f64>()
        .map(AutoOr::Value)
        .map_err(|_| Error::ConfigParse {
            line,
            message: format!("expected decimal or `auto`, got `{raw}`"),
        })
}

impl ExperimentConfig {
    /// Parses the section/key/value text. Unknown keys are rejected so typos
    /// surface instead of silently using defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut section = String::new();
        let mut entries: BTreeMap<String, (String, usize)> = BTreeMap::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw_line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if line.starts_with('[') {
                if !line.ends_with(']') {
                    return Err(Error::ConfigParse {
                        line: line_no,
                        message: "unterminated section header".into(),
                    });
                }
                section = line[1..line.len() - 1].trim().to_string();
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::ConfigParse {
                    line: line_no,
                    message: format!("expected key = value, got `{line}`"),
                });
            };
            let full_key = if section.is_empty() {
                key.trim().to_string()
            } else {
                format!("{section}.{}", key.trim())
            };
            entries.insert(full_key, (value.trim().to_string(), line_no));
        }

        let take = |entries: &mut BTreeMap<String, (String, usize)>, key: &str| {
            entries.remove(key)
        };

        let (map_name, _) = take(&mut entries, "map.name").ok_or(Error::ConfigParse {
            line: 0,
            message: "missing required key map.name".into(),
        })?;
        let map_params = match take(&mut entries, "map.params") {
            Some((v, l)) => parse_list(&v, l)?,
            None => Vec::new(),
        };
        let (potential_name, potential_params) = match take(&mut entries, "potential.name") {
            Some((name, _)) => {
                let params = match take(&mut entries, "potential.params") {
                    Some((v, l)) => parse_list(&v, l)?,
                    None => Vec::new(),
                };
                (name, params)
            }
            None => ("zero".to_string(), Vec::new()),
        };

        let (exp_raw, exp_line) = take(&mut entries, "run.experiment").ok_or(Error::ConfigParse {
            line: 0,
            message: "missing required key run.experiment".into(),
        })?;
        let experiment = Experiment::parse(&exp_raw).ok_or(Error::ConfigParse {
            line: exp_line,
            message: format!("unknown experiment `{exp_raw}`"),
        })?;

        let grid_n = match take(&mut entries, "run.grid_n") {
            Some((v, l)) => v.parse::<usize>().map_err(|_| Error::ConfigParse {
                line: l,
                message: format!("expected integer grid_n, got `{v}`"),
            })?,
            None => 1024,
        };
        if grid_n < 16 || !grid_n.is_power_of_two() {
            return Err(Error::ConfigParse {
                line: 0,
                message: format!("grid_n must be a power of two >= 16, got {grid_n}"),
            });
        }

        let mut auto_field = |key: &str| -> Result<AutoOr> {
            match take(&mut entries, key) {
                Some((v, l)) => parse_auto_or(&v, l),
                None => Ok(AutoOr::Auto),
            }
        };
        let sigma = auto_field("run.sigma")?;
        let gamma = auto_field("run.gamma")?;
        let c = auto_field("run.c")?;
        let delta = auto_field("run.delta")?;

        let seed = match take(&mut entries, "run.seed") {
            Some((v, l)) => v.parse::<u64>().map_err(|_| Error::ConfigParse {
                line: l,
                message: format!("expected integer seed, got `{v}`"),
            })?,
            None => 0,
        };
        let output_dir = match take(&mut entries, "run.output_dir") {
            Some((v, _)) => PathBuf::from(v),
            None => PathBuf::from("."),
        };
        let sweep = match take(&mut entries, "run.sweep") {
            Some((v, l)) => parse_list(&v, l)?,
            None => Vec::new(),
        };
        let samples = match take(&mut entries, "run.samples") {
            Some((v, l)) => v.parse::<usize>().map_err(|_| Error::ConfigParse {
                line: l,
                message: format!("expected integer samples, got `{v}`"),
            })?,
            None => 10_000,
        };
        let n_max = match take(&mut entries, "run.n_max") {
            Some((v, l)) => v.parse::<usize>().map_err(|_| Error::ConfigParse {
                line: l,
                message: format!("expected integer n_max, got `{v}`"),
            })?,
            None => 60,
        };
        let orbit_len = match take(&mut entries, "run.orbit_len") {
            Some((v, l)) => v.parse::<usize>().map_err(|_| Error::ConfigParse {
                line: l,
                message: format!("expected integer orbit_len, got `{v}`"),
            })?,
            None => 10_000,
        };

        if let Some((key, (_, line))) = entries.into_iter().next() {
            return Err(Error::ConfigParse {
                line,
                message: format!("unknown key `{key}`"),
            });
        }

        Ok(ExperimentConfig {
            map_name,
            map_params,
            potential_name,
            potential_params,
            experiment,
            grid_n,
            sigma,
            gamma,
            c,
            delta,
            seed,
            output_dir,
            sweep,
            samples,
            n_max,
            orbit_len,
            timestamp: false,
        })
    }
}

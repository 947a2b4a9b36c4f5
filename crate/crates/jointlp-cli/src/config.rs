//! Experiment configuration: TOML file plus command-line overrides.

use std::path::{Path, PathBuf};

use jointlp::channel::{self, FscSpec, StartState};
use jointlp::ijlp::DecoderParams;
use jointlp::ldpc::{self, LdpcCode};
use jointlp::sim::{DecoderChoice, ExperimentConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub channel: Option<String>,
    /// "zero", "uniform", or an explicit state index.
    pub start_state: Option<String>,
    pub include_p0: Option<bool>,
    /// "unscaled" (squared distance) or "loglik" (scaled by 1/(2 sigma^2)).
    pub metric_scale: Option<String>,
    /// "ijlp", "te", "classic-te", "exact-lp".
    pub decoder: Option<String>,
    pub k1: Option<f64>,
    pub k2: Option<f64>,
    pub inner_rounds: Option<usize>,
    pub outer_max: Option<usize>,
    pub seed: Option<u64>,
    pub snr_db: Option<Vec<f64>>,
    pub max_trials: Option<u64>,
    pub max_errors: Option<u64>,
    pub workers: Option<usize>,
    pub code: Option<CodeConfig>,
    pub codeword: Option<CodewordConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeConfig {
    /// "spc", "regular", "alist".
    pub kind: String,
    pub n: Option<usize>,
    pub dv: Option<usize>,
    pub dc: Option<usize>,
    pub seed: Option<u64>,
    pub path: Option<PathBuf>,
    pub allow_four_cycles: Option<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodewordConfig {
    /// "zero", "bits", "file", "random".
    pub kind: String,
    /// Bit string like "110" for kind = "bits".
    pub bits: Option<String>,
    pub path: Option<PathBuf>,
    pub seed: Option<u64>,
}

/// Errors collected during validation; every offending key is listed.
#[derive(Debug)]
pub struct ConfigErrors(pub Vec<String>);

impl std::fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "invalid configuration:")?;
        for e in &self.0 {
            writeln!(f, "  - {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricScale {
    Unscaled,
    Loglik,
}

/// Fully resolved experiment, ready to run.
pub struct Resolved {
    pub experiment: ExperimentConfig,
    pub metric_scale: MetricScale,
    pub workers: usize,
    /// Echo of the resolved key-value view, for the manifest.
    pub echo: FileConfig,
}

pub fn load_file(path: &Path) -> Result<FileConfig, Box<dyn std::error::Error>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigErrors(vec![format!("cannot read {}: {e}", path.display())]))?;
    let cfg: FileConfig = toml::from_str(&text)
        .map_err(|e| ConfigErrors(vec![format!("{}: {e}", path.display())]))?;
    Ok(cfg)
}

impl FileConfig {
    /// Applies non-`None` fields of `other` on top of `self`.
    pub fn overridden_by(mut self, other: FileConfig) -> FileConfig {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(
            channel,
            start_state,
            include_p0,
            metric_scale,
            decoder,
            k1,
            k2,
            inner_rounds,
            outer_max,
            seed,
            snr_db,
            max_trials,
            max_errors,
            workers,
            code,
            codeword
        );
        self
    }

    /// Validates and resolves into runnable objects, collecting every
    /// offending key.
    pub fn resolve(&self) -> Result<Resolved, ConfigErrors> {
        let mut errors = Vec::new();

        let channel: Option<FscSpec> = match self.channel.as_deref() {
            None => {
                errors.push("channel: missing (dic | pdic | pr2)".into());
                None
            }
            Some(name) => match channel::by_name(name) {
                Ok(c) => Some(c),
                Err(e) => {
                    errors.push(format!("channel: {e}"));
                    None
                }
            },
        };

        let start_state = match self.start_state.as_deref().unwrap_or("zero") {
            "zero" => StartState::Fixed(0),
            "uniform" => StartState::Sampled,
            other => match other.parse::<usize>() {
                Ok(s) => StartState::Fixed(s),
                Err(_) => {
                    errors.push(format!(
                        "start_state: '{other}' (expected zero | uniform | state index)"
                    ));
                    StartState::Fixed(0)
                }
            },
        };

        let metric_scale = match self.metric_scale.as_deref().unwrap_or("unscaled") {
            "unscaled" => MetricScale::Unscaled,
            "loglik" => MetricScale::Loglik,
            other => {
                errors.push(format!("metric_scale: '{other}' (expected unscaled | loglik)"));
                MetricScale::Unscaled
            }
        };

        let code: Option<LdpcCode> = match &self.code {
            None => {
                errors.push("code: missing table".into());
                None
            }
            Some(c) => resolve_code(c, &mut errors),
        };

        let codeword = match (&code, &self.codeword) {
            (Some(code), spec) => resolve_codeword(code, spec, &mut errors),
            (None, _) => None,
        };

        let k1 = self.k1.unwrap_or(1000.0);
        let k2 = self.k2.unwrap_or(100.0);
        let inner_rounds = self.inner_rounds.unwrap_or(2);
        let outer_max = self.outer_max.unwrap_or(100);
        let params = match DecoderParams::new(k1, k2, inner_rounds, outer_max) {
            Ok(p) => Some(p),
            Err(e) => {
                errors.push(format!("k1/k2/inner_rounds/outer_max: {e}"));
                None
            }
        };
        let decoder = match self.decoder.as_deref().unwrap_or("ijlp") {
            "ijlp" => params.map(DecoderChoice::Ijlp),
            "te" => Some(DecoderChoice::TurboEq { outer_max }),
            "classic-te" => Some(DecoderChoice::ClassicTe { outer_max }),
            "exact-lp" => Some(DecoderChoice::ExactLp),
            other => {
                errors.push(format!(
                    "decoder: '{other}' (expected ijlp | te | classic-te | exact-lp)"
                ));
                None
            }
        };

        let snr_grid_db = self.snr_db.clone().unwrap_or_default();
        if snr_grid_db.is_empty() {
            errors.push("snr_db: need at least one SNR point".into());
        }
        let max_trials = self.max_trials.unwrap_or(10_000);
        if max_trials == 0 {
            errors.push("max_trials: must be positive".into());
        }

        if !errors.is_empty() {
            return Err(ConfigErrors(errors));
        }
        let code = code.expect("validated");
        let experiment = ExperimentConfig {
            channel: channel.expect("validated"),
            start_state,
            codeword: codeword.expect("validated"),
            code,
            decoder: decoder.expect("validated"),
            include_p0: self.include_p0.unwrap_or(false),
            loglik_metrics: metric_scale == MetricScale::Loglik,
            snr_grid_db,
            max_trials,
            max_word_errors: self.max_errors.unwrap_or(100),
            seed: self.seed.unwrap_or(0),
        };
        let mut echo = self.clone();
        echo.k1 = Some(k1);
        echo.k2 = Some(k2);
        echo.inner_rounds = Some(inner_rounds);
        echo.outer_max = Some(outer_max);
        echo.seed = Some(experiment.seed);
        echo.max_trials = Some(max_trials);
        echo.max_errors = Some(experiment.max_word_errors);
        Ok(Resolved {
            experiment,
            metric_scale,
            workers: self.workers.unwrap_or(0),
            echo,
        })
    }
}

fn resolve_code(c: &CodeConfig, errors: &mut Vec<String>) -> Option<LdpcCode> {
    match c.kind.as_str() {
        "spc" => match c.n {
            Some(n) => match ldpc::spc(n) {
                Ok(code) => Some(code),
                Err(e) => {
                    errors.push(format!("code.n: {e}"));
                    None
                }
            },
            None => {
                errors.push("code.n: required for kind = spc".into());
                None
            }
        },
        "regular" => {
            let (Some(n), Some(dv), Some(dc)) = (c.n, c.dv, c.dc) else {
                errors.push("code.n/dv/dc: required for kind = regular".into());
                return None;
            };
            let opts = ldpc::RegularCodeOptions {
                avoid_four_cycles: !c.allow_four_cycles.unwrap_or(false),
                ..Default::default()
            };
            match ldpc::random_regular_with(n, dv, dc, c.seed.unwrap_or(0), opts) {
                Ok(code) => Some(code),
                Err(e) => {
                    errors.push(format!("code: {e}"));
                    None
                }
            }
        }
        "alist" => match &c.path {
            Some(path) => match ldpc::load_alist(path) {
                Ok(code) => Some(code),
                Err(e) => {
                    errors.push(format!("code.path: {e}"));
                    None
                }
            },
            None => {
                errors.push("code.path: required for kind = alist".into());
                None
            }
        },
        other => {
            errors.push(format!("code.kind: '{other}' (expected spc | regular | alist)"));
            None
        }
    }
}

fn resolve_codeword(
    code: &LdpcCode,
    spec: &Option<CodewordConfig>,
    errors: &mut Vec<String>,
) -> Option<Vec<u8>> {
    let spec = match spec {
        None => return Some(vec![0u8; code.n()]),
        Some(s) => s,
    };
    let word = match spec.kind.as_str() {
        "zero" => Some(vec![0u8; code.n()]),
        "random" => Some(ldpc::random_codeword(code, spec.seed.unwrap_or(1))),
        "bits" => match &spec.bits {
            Some(text) => parse_bits(text).map_err(|e| errors.push(format!("codeword.bits: {e}"))).ok(),
            None => {
                errors.push("codeword.bits: required for kind = bits".into());
                None
            }
        },
        "file" => match &spec.path {
            Some(path) => match std::fs::read_to_string(path) {
                Ok(text) => parse_bits(&text)
                    .map_err(|e| errors.push(format!("codeword.path: {e}")))
                    .ok(),
                Err(e) => {
                    errors.push(format!("codeword.path: {e}"));
                    None
                }
            },
            None => {
                errors.push("codeword.path: required for kind = file".into());
                None
            }
        },
        other => {
            errors.push(format!(
                "codeword.kind: '{other}' (expected zero | bits | file | random)"
            ));
            None
        }
    }?;
    if word.len() != code.n() {
        errors.push(format!(
            "codeword: length {} does not match block length {}",
            word.len(),
            code.n()
        ));
        return None;
    }
    if !code.syndrome_ok(&word) {
        errors.push("codeword: fails the parity checks".into());
        return None;
    }
    Some(word)
}

fn parse_bits(text: &str) -> Result<Vec<u8>, String> {
    let mut bits = Vec::new();
    for ch in text.chars() {
        match ch {
            '0' => bits.push(0),
            '1' => bits.push(1),
            c if c.is_whitespace() || c == ',' => {}
            other => return Err(format!("unexpected character '{other}'")),
        }
    }
    if bits.is_empty() {
        return Err("no bits found".into());
    }
    Ok(bits)
}

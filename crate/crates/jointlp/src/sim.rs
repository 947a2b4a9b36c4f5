//! Monte Carlo word-error-rate measurement, pseudo-codeword harvesting at
//! low SNR, and semi-analytic high-SNR prediction through the truncated
//! union bound.
//!
//! Reproducibility contract: every trial draws from an RNG derived from
//! `(seed, snr index, trial index)`, and trials are aggregated in fixed
//! chunks, so results are identical whatever the worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analysis::{self, DistanceSpectrum, PseudoCodeword};
use crate::channel::{build_trellis, simulate, FscSpec, StartState, Trellis};
use crate::ijlp::{self, DecodeStatus, DecoderParams};
use crate::ldpc::LdpcCode;
use crate::lpexact::{self, VertexKind};
use crate::metrics::{awgn_metrics, awgn_metrics_loglik, BranchMetrics};
use crate::{Error, Result};

/// Which decoder a sweep exercises.
#[derive(Debug, Clone)]
pub enum DecoderChoice {
    /// Iterative joint LP decoder with explicit parameters.
    Ijlp(DecoderParams),
    /// The same decoder at `K1 = K2 = 1`.
    TurboEq { outer_max: usize },
    /// Conventional extrinsic BCJR + sum-product turbo equalizer.
    ClassicTe { outer_max: usize },
    /// Exact LP decoding by simplex; fractional output counts as failure.
    ExactLp,
}

/// A complete experiment description.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub channel: FscSpec,
    pub start_state: StartState,
    pub code: LdpcCode,
    /// Transmitted codeword.
    pub codeword: Vec<u8>,
    pub decoder: DecoderChoice,
    /// Add the initial-state term to first-section metrics.
    pub include_p0: bool,
    /// Scale metrics by `1/(2 sigma^2)` (true log-likelihoods) instead of
    /// the plain squared distance. The softmin temperatures interact with
    /// this scale, so it is part of the experiment description.
    pub loglik_metrics: bool,
    pub snr_grid_db: Vec<f64>,
    pub max_trials: u64,
    pub max_word_errors: u64,
    pub seed: u64,
}

impl ExperimentConfig {
    fn validate(&self) -> Result<()> {
        if self.snr_grid_db.is_empty() {
            return Err(Error::MalformedInput("SNR grid must be nonempty".into()));
        }
        if self.max_trials == 0 {
            return Err(Error::MalformedInput("need at least one trial".into()));
        }
        if self.codeword.len() != self.code.n() {
            return Err(Error::DimensionMismatch(format!(
                "codeword length {} for block length {}",
                self.codeword.len(),
                self.code.n()
            )));
        }
        if !self.code.syndrome_ok(&self.codeword) {
            return Err(Error::MalformedInput(
                "transmitted word fails its own parity checks".into(),
            ));
        }
        Ok(())
    }
}

/// One SNR point of a sweep.
#[derive(Debug, Clone)]
pub struct WerRow {
    pub snr_db: f64,
    pub sigma: f64,
    pub trials: u64,
    pub word_errors: u64,
    pub wer: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub mean_iterations: f64,
    /// Decoder aborts (numerical failures), counted separately from word
    /// errors.
    pub numerical_aborts: u64,
}

/// Wilson 95% score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    // The interval endpoints are exactly 0 and 1 at the boundary counts;
    // pin them so rounding cannot exclude the point estimate.
    let z = 1.959963984540054f64;
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    let lo = if k == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if k == n { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

struct TrialAggregate {
    errors: u64,
    iterations: u64,
    aborts: u64,
}

/// Deterministic per-trial RNG from `(seed, stream, trial)`.
fn trial_rng(seed: u64, stream: u64, trial: u64) -> ChaCha8Rng {
    let mut s = seed ^ stream.wrapping_mul(0x9e3779b97f4a7c15) ^ trial.wrapping_mul(0xbf58476d1ce4e5b9);
    let mut bytes = [0u8; 32];
    for chunk in bytes.chunks_mut(8) {
        s = splitmix64(s);
        chunk.copy_from_slice(&s.to_le_bytes());
    }
    ChaCha8Rng::from_seed(bytes)
}

fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn trial_metrics(cfg: &ExperimentConfig, trellis: &Trellis, y: &[f64], sigma: f64) -> Result<BranchMetrics> {
    if cfg.loglik_metrics && sigma > 0.0 {
        awgn_metrics_loglik(trellis, y, cfg.include_p0, sigma)
    } else {
        awgn_metrics(trellis, y, cfg.include_p0)
    }
}

fn run_trial(
    cfg: &ExperimentConfig,
    trellis: &Trellis,
    sigma: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(bool, u64)> {
    let out = simulate(&cfg.channel, &cfg.codeword, sigma, cfg.start_state, rng)?;
    let metrics = trial_metrics(cfg, trellis, &out.y, sigma)?;
    trial_decode(cfg, trellis, &metrics).map(|(err, iters, _)| (err, iters))
}

/// Runs the selected decoder; returns (word error, iterations, competitor
/// flows when the decision was wrong).
fn trial_decode(
    cfg: &ExperimentConfig,
    trellis: &Trellis,
    metrics: &BranchMetrics,
) -> Result<(bool, u64, Option<(Vec<Vec<f64>>, bool)>)> {
    match &cfg.decoder {
        DecoderChoice::ExactLp => {
            let sol = lpexact::decode_exact(trellis, &cfg.code, metrics)?;
            let fractional = sol.vertex_kind == VertexKind::Fractional;
            let decoded: Vec<u8> = analysis::project_symbolwise(trellis, &sol.g)
                .iter()
                .map(|&f| u8::from(f > 0.5))
                .collect();
            let error = fractional || decoded != cfg.codeword;
            let competitor = error.then(|| (sol.g, false));
            Ok((error, 1, competitor))
        }
        DecoderChoice::Ijlp(params) => decode_iterative(cfg, trellis, metrics, params),
        DecoderChoice::TurboEq { outer_max } => {
            decode_iterative(cfg, trellis, metrics, &DecoderParams::turbo(*outer_max))
        }
        DecoderChoice::ClassicTe { outer_max } => {
            let out = ijlp::classic_turbo_equalize(metrics, &cfg.code, trellis, *outer_max)?;
            let error = out.status != DecodeStatus::ParityOk || out.word != cfg.codeword;
            let competitor = if error && out.status == DecodeStatus::ParityOk {
                Some((lpexact::codeword_flows(trellis, metrics, &out.word)?, false))
            } else {
                None
            };
            Ok((error, out.iterations as u64, competitor))
        }
    }
}

fn decode_iterative(
    cfg: &ExperimentConfig,
    trellis: &Trellis,
    metrics: &BranchMetrics,
    params: &DecoderParams,
) -> Result<(bool, u64, Option<(Vec<Vec<f64>>, bool)>)> {
    let out = ijlp::decode(metrics, &cfg.code, trellis, params)?;
    let error = out.status != DecodeStatus::ParityOk || out.word != cfg.codeword;
    let competitor = if !error {
        None
    } else if out.status == DecodeStatus::ParityOk {
        // Converged to a wrong codeword: its own path flows.
        Some((lpexact::codeword_flows(trellis, metrics, &out.word)?, false))
    } else {
        // Stalled: reconstruct fractional flows from the dual messages.
        analysis::primal_from_dual(&out.state, &cfg.code, trellis, metrics, params)
            .ok()
            .map(|p| (p.g, true))
    };
    Ok((error, out.iterations as u64, competitor))
}

/// Monte Carlo sweep over the configured SNR grid. Each point stops at
/// `max_word_errors` errors or `max_trials` trials, whichever first.
pub fn wer_sweep(cfg: &ExperimentConfig) -> Result<Vec<WerRow>> {
    cfg.validate()?;
    let trellis = build_trellis(&cfg.channel, cfg.code.n())?;
    let mut rows = Vec::with_capacity(cfg.snr_grid_db.len());
    for (snr_idx, &snr_db) in cfg.snr_grid_db.iter().enumerate() {
        let sigma = cfg.channel.sigma_for_snr_db(snr_db)?;
        let mut trials = 0u64;
        let mut errors = 0u64;
        let mut iterations = 0u64;
        let mut aborts = 0u64;
        while trials < cfg.max_trials && errors < cfg.max_word_errors {
            let chunk = (cfg.max_trials - trials).min(512);
            let agg = (trials..trials + chunk)
                .into_par_iter()
                .map(|t| {
                    let mut rng = trial_rng(cfg.seed, snr_idx as u64, t);
                    match run_trial(cfg, &trellis, sigma, &mut rng) {
                        Ok((err, iters)) => TrialAggregate {
                            errors: err as u64,
                            iterations: iters,
                            aborts: 0,
                        },
                        Err(_) => TrialAggregate {
                            errors: 0,
                            iterations: 0,
                            aborts: 1,
                        },
                    }
                })
                .reduce(
                    || TrialAggregate {
                        errors: 0,
                        iterations: 0,
                        aborts: 0,
                    },
                    |a, b| TrialAggregate {
                        errors: a.errors + b.errors,
                        iterations: a.iterations + b.iterations,
                        aborts: a.aborts + b.aborts,
                    },
                );
            trials += chunk;
            errors += agg.errors;
            iterations += agg.iterations;
            aborts += agg.aborts;
        }
        let wer = errors as f64 / trials as f64;
        let (ci_lo, ci_hi) = wilson_interval(errors, trials);
        rows.push(WerRow {
            snr_db,
            sigma,
            trials,
            word_errors: errors,
            wer,
            ci_lo,
            ci_hi,
            mean_iterations: iterations as f64 / trials as f64,
            numerical_aborts: aborts,
        });
    }
    Ok(rows)
}

/// CSV header for sweep output.
pub const WER_CSV_HEADER: &str = "snr_db,sigma,trials,errors,wer,ci_lo,ci_hi,mean_iters";

/// Renders sweep rows as CSV with [`WER_CSV_HEADER`].
pub fn wer_rows_to_csv(rows: &[WerRow]) -> String {
    let mut out = String::from(WER_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.snr_db, r.sigma, r.trials, r.word_errors, r.wer, r.ci_lo, r.ci_hi, r.mean_iterations
        ));
    }
    out
}

/// Harvest controls; the defaults implement the stationarity rule used by
/// the semi-analytic prediction: stop once 10^4 consecutive errors have
/// produced no new distinct distance below the current five smallest.
#[derive(Debug, Clone, Copy)]
pub struct HarvestOptions {
    pub stop_when_stationary: bool,
    pub stationary_errors: u64,
    pub tracked_smallest: usize,
    pub max_trials: u64,
}

impl Default for HarvestOptions {
    fn default() -> Self {
        Self {
            stop_when_stationary: true,
            stationary_errors: 10_000,
            tracked_smallest: 5,
            max_trials: 10_000_000,
        }
    }
}

/// Runs the decoder at one low SNR and aggregates every observed
/// competitor into a distance spectrum keyed on the transmitted
/// signal-space codeword.
pub fn harvest_pcws(
    cfg: &ExperimentConfig,
    low_snr_db: f64,
    opts: HarvestOptions,
) -> Result<DistanceSpectrum> {
    cfg.validate()?;
    let trellis = build_trellis(&cfg.channel, cfg.code.n())?;
    let sigma = cfg.channel.sigma_for_snr_db(low_snr_db)?;
    let start_state = match cfg.start_state {
        StartState::Fixed(s) => s,
        StartState::Sampled => {
            return Err(Error::MalformedInput(
                "harvesting needs a fixed start state so the reference is well defined".into(),
            ))
        }
    };
    let ref_path = trellis.path_of(&cfg.codeword, start_state)?;
    let reference = trellis.outputs_along(&ref_path);
    let mut spectrum = DistanceSpectrum::new(reference.clone());
    let mut stationary_counter = 0u64;
    for trial in 0..opts.max_trials {
        let mut rng = trial_rng(cfg.seed, u64::MAX, trial);
        let out = simulate(&cfg.channel, &cfg.codeword, sigma, cfg.start_state, &mut rng)?;
        let metrics = trial_metrics(cfg, &trellis, &out.y, sigma)?;
        let (error, _, competitor) = trial_decode(cfg, &trellis, &metrics)?;
        if !error {
            continue;
        }
        let Some((g, approximate)) = competitor else {
            continue;
        };
        let pcw = PseudoCodeword::from_flows(&trellis, g, 1e-3);
        let d = match analysis::d_gen(&reference, &pcw.p, &pcw.g, &trellis) {
            Ok(d) => d,
            // Projection collided with the reference (decoder failure with
            // the right signal point); skip it.
            Err(_) => continue,
        };
        let fifth = spectrum.smallest(opts.tracked_smallest);
        let new_entry_count = spectrum.len();
        let recorded = spectrum.record(d, &pcw.f, approximate);
        let new_distance = spectrum.len() > new_entry_count;
        let below_window = fifth.len() < opts.tracked_smallest
            || d < fifth[fifth.len() - 1] + 1e-9;
        if recorded && new_distance && below_window {
            stationary_counter = 0;
        } else {
            stationary_counter += 1;
        }
        if opts.stop_when_stationary && stationary_counter >= opts.stationary_errors {
            break;
        }
    }
    Ok(spectrum)
}

/// Union-bound WER prediction at each SNR; `power` is the channel output
/// power fixing the SNR-to-sigma conversion.
pub fn predict_wer(spectrum: &DistanceSpectrum, power: f64, snr_grid_db: &[f64]) -> Vec<(f64, f64)> {
    snr_grid_db
        .iter()
        .map(|&snr| {
            let sigma = (power * 10f64.powf(-snr.min(100.0) / 10.0)).sqrt();
            (snr, spectrum.union_bound(sigma))
        })
        .collect()
}

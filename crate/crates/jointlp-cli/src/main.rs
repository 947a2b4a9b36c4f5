//! Command-line front end: decode single vectors, run WER sweeps, harvest
//! pseudo-codeword spectra, predict error rates, print gap certificates
//! and generate codes.

mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use jointlp::analysis::{self, DistanceSpectrum};
use jointlp::channel::{self, build_trellis};
use jointlp::ijlp;
use jointlp::ldpc;
use jointlp::lpexact;
use jointlp::metrics::{awgn_metrics, awgn_metrics_loglik, BranchMetrics};
use jointlp::sim::{self, DecoderChoice};

use config::{FileConfig, MetricScale, Resolved};
use manifest::Manifest;

#[derive(Parser)]
#[command(name = "jointlp", version, about = "Joint LP decoding of LDPC codes over ISI channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decode one received vector and print the word and decoder status.
    Decode(DecodeArgs),
    /// Monte Carlo word-error-rate sweep over an SNR grid; writes CSV.
    Sweep(SweepArgs),
    /// Harvest a generalized-distance spectrum at low SNR.
    Harvest(HarvestArgs),
    /// Evaluate the truncated union bound of a stored spectrum.
    Predict(PredictArgs),
    /// Print the duality-gap certificate for a configuration.
    Gap(GapArgs),
    /// Generate a random regular code and write it as alist.
    Codegen(CodegenArgs),
    /// List the built-in channels.
    Channels,
}

#[derive(Args)]
struct ConfigOpt {
    /// Experiment configuration file (TOML key-value text).
    #[arg(long)]
    config: PathBuf,
    /// Override the decoder (ijlp | te | classic-te | exact-lp).
    #[arg(long)]
    decoder: Option<String>,
    /// Override the SNR grid in dB, comma separated.
    #[arg(long, value_delimiter = ',')]
    snr: Option<Vec<f64>>,
    /// Override the RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the trial cap per SNR point.
    #[arg(long)]
    max_trials: Option<u64>,
    /// Override the word-error stop count per SNR point.
    #[arg(long)]
    max_errors: Option<u64>,
    /// Override K1.
    #[arg(long)]
    k1: Option<f64>,
    /// Override K2.
    #[arg(long)]
    k2: Option<f64>,
    /// Cap simulation worker threads (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
}

impl ConfigOpt {
    fn resolve(&self) -> Result<Resolved, config::ConfigErrors> {
        let base = config::load_file(&self.config)
            .map_err(|e| config::ConfigErrors(vec![e.to_string()]))?;
        let overrides = FileConfig {
            decoder: self.decoder.clone(),
            snr_db: self.snr.clone(),
            seed: self.seed,
            max_trials: self.max_trials,
            max_errors: self.max_errors,
            k1: self.k1,
            k2: self.k2,
            workers: self.workers,
            ..FileConfig::default()
        };
        base.overridden_by(overrides).resolve()
    }
}

#[derive(Args)]
struct DecodeArgs {
    #[command(flatten)]
    common: ConfigOpt,
    /// File with the received values (whitespace-separated reals).
    #[arg(long)]
    input: PathBuf,
    /// Noise standard deviation used by loglik metric scaling.
    #[arg(long)]
    sigma: Option<f64>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: ConfigOpt,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct HarvestArgs {
    #[command(flatten)]
    common: ConfigOpt,
    /// Harvesting SNR in dB.
    #[arg(long)]
    snr_db: f64,
    /// Output spectrum path.
    #[arg(long)]
    out: PathBuf,
    /// Errors without a new small distance before stopping.
    #[arg(long, default_value_t = 10_000)]
    stationary_errors: u64,
    /// Hard cap on simulated trials.
    #[arg(long, default_value_t = 10_000_000)]
    max_trials: u64,
}

#[derive(Args)]
struct PredictArgs {
    /// Stored spectrum file.
    #[arg(long)]
    spectrum: PathBuf,
    /// SNR grid in dB, comma separated.
    #[arg(long, value_delimiter = ',')]
    snr: Vec<f64>,
    /// Channel fixing the SNR-to-sigma conversion.
    #[arg(long)]
    channel: String,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GapArgs {
    #[command(flatten)]
    common: ConfigOpt,
}

#[derive(Args)]
struct CodegenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    dv: usize,
    #[arg(long)]
    dc: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Permit 4-cycles (needed for degree combinations where girth 6 is
    /// impossible by counting).
    #[arg(long)]
    allow_four_cycles: bool,
    /// Output alist path.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_of(e.as_ref()))
        }
    }
}

type AnyError = Box<dyn std::error::Error>;

fn exit_code_of(e: &(dyn std::error::Error + 'static)) -> u8 {
    let mut cur: Option<&(dyn std::error::Error + 'static)> = Some(e);
    while let Some(err) = cur {
        if let Some(lib) = err.downcast_ref::<jointlp::Error>() {
            return match lib {
                jointlp::Error::NumericalAbort(_)
                | jointlp::Error::LpInfeasible
                | jointlp::Error::LpUnbounded
                | jointlp::Error::EpsilonTooLarge { .. } => 2,
                _ => 1,
            };
        }
        cur = err.source();
    }
    1
}

fn run(cli: Cli) -> Result<(), AnyError> {
    match cli.command {
        Command::Channels => {
            for name in channel::BUILTIN_CHANNELS {
                let spec = channel::by_name(name)?;
                println!(
                    "{name}: {} states, {} edges/section, outputs {:?}, power {}",
                    spec.num_states(),
                    spec.edges().len(),
                    spec.output_alphabet(),
                    spec.output_power()?
                );
            }
            Ok(())
        }
        Command::Codegen(args) => {
            let opts = ldpc::RegularCodeOptions {
                avoid_four_cycles: !args.allow_four_cycles,
                ..Default::default()
            };
            let code = ldpc::random_regular_with(args.n, args.dv, args.dc, args.seed, opts)?;
            manifest::write_atomic(&args.out, &alist_text(&code)?)?;
            Manifest::new(args.seed, None)
                .with_output(&args.out)
                .with_note(format!(
                    "codegen n={} dv={} dc={} rate={:.4}",
                    args.n,
                    args.dv,
                    args.dc,
                    code.rate()
                ))
                .write_for(&args.out)?;
            println!(
                "wrote {} ({} x {}, rate {:.4})",
                args.out.display(),
                code.n(),
                code.m(),
                code.rate()
            );
            Ok(())
        }
        Command::Gap(args) => {
            let resolved = args.common.resolve()?;
            let cfg = &resolved.experiment;
            let trellis = build_trellis(&cfg.channel, cfg.code.n())?;
            let (k1, k2) = decoder_temperatures(&cfg.decoder);
            let bound = analysis::gap_delta(&cfg.code, &trellis, k1, k2);
            println!(
                "code: N={} M={} R={:.6}",
                cfg.code.n(),
                cfg.code.m(),
                cfg.code.rate()
            );
            println!(
                "channel: {} (O={}, |S|={})",
                cfg.channel.name(),
                trellis.num_edges(),
                trellis.num_states()
            );
            println!("K1={k1} K2={k2}");
            println!("delta code term:     {:.6e}", bound.code_term);
            println!("delta trellis term:  {:.6e}", bound.trellis_term);
            println!("delta:               {:.6e}", bound.delta());
            println!(
                "objective gap bound (delta * N): {:.6e}",
                bound.delta() * cfg.code.n() as f64
            );
            Ok(())
        }
        Command::Decode(args) => {
            let resolved = args.common.resolve()?;
            let cfg = &resolved.experiment;
            let text = std::fs::read_to_string(&args.input)?;
            let y: Vec<f64> = text
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>()
                        .map_err(|_| format!("bad sample '{tok}' in {}", args.input.display()))
                })
                .collect::<Result<_, _>>()?;
            if y.len() != cfg.code.n() {
                return Err(format!(
                    "received vector has {} samples for block length {}",
                    y.len(),
                    cfg.code.n()
                )
                .into());
            }
            let trellis = build_trellis(&cfg.channel, cfg.code.n())?;
            let metrics = build_metrics(&resolved, &trellis, &y, args.sigma)?;
            match &cfg.decoder {
                DecoderChoice::ExactLp => {
                    let sol = lpexact::decode_exact(&trellis, &cfg.code, &metrics)?;
                    let f = analysis::project_symbolwise(&trellis, &sol.g);
                    let word: String =
                        f.iter().map(|&v| if v > 0.5 { '1' } else { '0' }).collect();
                    println!("word: {word}");
                    println!("vertex_kind: {:?}", sol.vertex_kind);
                    println!("objective: {:.6}", sol.objective);
                }
                DecoderChoice::Ijlp(params) => {
                    let out = ijlp::decode(&metrics, &cfg.code, &trellis, params)?;
                    print_decode(&out);
                }
                DecoderChoice::TurboEq { outer_max } => {
                    let out = ijlp::turbo_equalize(&metrics, &cfg.code, &trellis, *outer_max)?;
                    print_decode(&out);
                }
                DecoderChoice::ClassicTe { outer_max } => {
                    let out =
                        ijlp::classic_turbo_equalize(&metrics, &cfg.code, &trellis, *outer_max)?;
                    print_decode(&out);
                }
            }
            Ok(())
        }
        Command::Sweep(args) => {
            let resolved = args.common.resolve()?;
            init_workers(resolved.workers);
            let rows = sim::wer_sweep(&resolved.experiment)?;
            manifest::write_atomic(&args.out, &sim::wer_rows_to_csv(&rows))?;
            Manifest::new(resolved.experiment.seed, Some(&resolved.echo))
                .with_output(&args.out)
                .write_for(&args.out)?;
            for r in &rows {
                println!(
                    "snr={:.2} dB wer={:.4e} ({}/{} errors, mean iters {:.1})",
                    r.snr_db, r.wer, r.word_errors, r.trials, r.mean_iterations
                );
            }
            Ok(())
        }
        Command::Harvest(args) => {
            let resolved = args.common.resolve()?;
            init_workers(resolved.workers);
            let opts = sim::HarvestOptions {
                stop_when_stationary: true,
                stationary_errors: args.stationary_errors,
                tracked_smallest: 5,
                max_trials: args.max_trials,
            };
            let spectrum = sim::harvest_pcws(&resolved.experiment, args.snr_db, opts)?;
            manifest::write_atomic(&args.out, &spectrum.to_text())?;
            Manifest::new(resolved.experiment.seed, Some(&resolved.echo))
                .with_output(&args.out)
                .with_note(format!("harvest at {} dB", args.snr_db))
                .write_for(&args.out)?;
            println!(
                "harvested {} distinct distances (smallest: {:?})",
                spectrum.len(),
                spectrum.smallest(5)
            );
            Ok(())
        }
        Command::Predict(args) => {
            let spectrum = DistanceSpectrum::load(&args.spectrum)?;
            let spec = channel::by_name(&args.channel)?;
            if args.snr.is_empty() {
                return Err("predict needs at least one --snr value".into());
            }
            let rows = sim::predict_wer(&spectrum, spec.output_power()?, &args.snr);
            let mut csv = String::from("snr_db,wer_pred\n");
            for (snr, wer) in &rows {
                csv.push_str(&format!("{snr},{wer}\n"));
                println!("snr={snr:.2} dB predicted wer={wer:.4e}");
            }
            manifest::write_atomic(&args.out, &csv)?;
            Manifest::new(0, None)
                .with_output(&args.out)
                .with_note(format!("predict from {}", args.spectrum.display()))
                .write_for(&args.out)?;
            Ok(())
        }
    }
}

fn print_decode(out: &ijlp::DecodeOutcome) {
    let word: String = out
        .word
        .iter()
        .map(|&b| if b == 1 { '1' } else { '0' })
        .collect();
    println!("word: {word}");
    println!("status: {:?}", out.status);
    println!("iterations: {}", out.iterations);
}

fn decoder_temperatures(choice: &DecoderChoice) -> (f64, f64) {
    match choice {
        DecoderChoice::Ijlp(p) => (p.k1, p.k2),
        DecoderChoice::TurboEq { .. } | DecoderChoice::ClassicTe { .. } => (1.0, 1.0),
        DecoderChoice::ExactLp => (f64::INFINITY, f64::INFINITY),
    }
}

fn build_metrics(
    resolved: &Resolved,
    trellis: &jointlp::channel::Trellis,
    y: &[f64],
    sigma: Option<f64>,
) -> Result<BranchMetrics, AnyError> {
    let include_p0 = resolved.experiment.include_p0;
    match resolved.metric_scale {
        MetricScale::Unscaled => Ok(awgn_metrics(trellis, y, include_p0)?),
        MetricScale::Loglik => {
            let sigma = sigma.ok_or("metric_scale = loglik needs --sigma for decode")?;
            Ok(awgn_metrics_loglik(trellis, y, include_p0, sigma)?)
        }
    }
}

fn init_workers(workers: usize) {
    if workers > 0 {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global();
    }
}

fn alist_text(code: &ldpc::LdpcCode) -> Result<String, AnyError> {
    let dir = std::env::temp_dir().join(format!("jointlp-codegen-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let tmp = dir.join("code.alist");
    ldpc::save_alist(code, &tmp)?;
    let text = std::fs::read_to_string(&tmp)?;
    std::fs::remove_dir_all(&dir).ok();
    Ok(text)
}

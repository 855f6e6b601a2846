//! `qcf`: single runs, campaigns, formula checks, attacks and code inspection.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qcf::codes::{build_code, CodeSpec, LinearCode};
use qcf::harness::{
    campaign, code_report, default_grid, default_thetas, run_report, to_json, verify_formulas,
    write_size_csv, HarnessError, Players,
};
use qcf::liedetect::{LieFrequencies, MeasurementMode};
use qcf::protocol::{AlphaCheck, ProtocolConfig};

const EXIT_ERROR: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_ABORTED: u8 = 3;

#[derive(Parser)]
#[command(
    name = "qcf",
    version,
    about = "Quantum coin-flipping simulator and verification harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One protocol run with its transcript.
    Flip {
        #[command(flatten)]
        common: ProtocolArgs,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// A seeded campaign of protocol runs.
    Montecarlo {
        #[command(flatten)]
        common: ProtocolArgs,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Per-trial set sizes as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Algorithms I–IV outside the protocol against their closed forms.
    VerifyFormulas {
        /// Number of pairs per run.
        #[arg(long, default_value_t = 10_000)]
        s: usize,
        /// Frequency grid as `fa,fb,fc;fa,fb,fc;...`.
        #[arg(long)]
        grid: Option<String>,
        /// Preparation angle; repeat for several. Defaults to π/6, π/4, π/3.
        #[arg(long)]
        theta: Vec<f64>,
        #[arg(long, default_value_t = 4.0)]
        z: f64,
        #[arg(long, value_enum, default_value_t = Mode::MeasureFirst)]
        mode: Mode,
        #[arg(long, env = "QCF_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        timing: bool,
    },
    /// Estimates the bias of a strategy pair.
    Attack {
        #[command(flatten)]
        common: ProtocolArgs,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Parameters, parity census and feasibility window of a code.
    Code {
        /// Preset name, e.g. `hamming-15-11` or `repetition-5`.
        #[arg(long, conflicts_with_all = ["random", "code_file"])]
        preset: Option<String>,
        /// Random code as `s,k,seed`.
        #[arg(long, conflicts_with = "code_file")]
        random: Option<String>,
        /// Descriptor file: `s k d` header, then k generator rows.
        #[arg(long)]
        code_file: Option<PathBuf>,
        /// Write the generator in descriptor format here.
        #[arg(long)]
        export: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    MeasureFirst,
    Delayed,
}

impl From<Mode> for MeasurementMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::MeasureFirst => MeasurementMode::MeasureFirst,
            Mode::Delayed => MeasurementMode::Delayed,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Check {
    Conditional,
    Collective,
}

#[derive(Args)]
struct ProtocolArgs {
    /// Code preset: hamming-<n>-<k>, repetition-<s>, random-<s>-<k>-<seed>.
    #[arg(long, default_value = "hamming-63-57", conflicts_with = "code_file")]
    code: String,
    #[arg(long)]
    code_file: Option<PathBuf>,
    /// Shorthand for the Hamming code of this length.
    #[arg(long)]
    s: Option<usize>,
    #[arg(long, env = "QCF_SEED", default_value_t = 0)]
    seed: u64,
    /// Honest Bob's type-A lie frequency.
    #[arg(long, default_value_t = 0.3)]
    fa: f64,
    #[arg(long, default_value_t = 0.35)]
    fb: f64,
    #[arg(long, default_value_t = 0.15)]
    fc: f64,
    #[arg(long, default_value_t = 4.0)]
    z: f64,
    #[arg(long, value_enum, default_value_t = Mode::MeasureFirst)]
    mode: Mode,
    #[arg(long, value_enum, default_value_t = Check::Conditional)]
    alpha_check: Check,
    /// Fraction of betas kept unmeasured for the collective check.
    #[arg(long, default_value_t = 0.2)]
    withheld: f64,
    #[arg(long, default_value = "honest")]
    alice: String,
    #[arg(long, default_value = "honest")]
    bob: String,
    /// Coin value cheating strategies aim for.
    #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=1))]
    desired: u8,
    /// Write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Include wall-clock timing (makes reports differ between runs).
    #[arg(long)]
    timing: bool,
}

impl ProtocolArgs {
    fn code(&self) -> Result<LinearCode, HarnessError> {
        if let Some(path) = &self.code_file {
            return load_code_file(path);
        }
        if let Some(s) = self.s {
            let r = (s + 1).trailing_zeros();
            if s + 1 != 1 << r || r < 2 {
                return Err(HarnessError::Usage(format!(
                    "--s {s} is not a Hamming length 2^r - 1"
                )));
            }
            return Ok(LinearCode::hamming(r)?);
        }
        Ok(build_code(&self.code.parse::<CodeSpec>()?)?)
    }

    fn config(&self) -> Result<ProtocolConfig, HarnessError> {
        let freqs = LieFrequencies::new(self.fa, self.fb, self.fc)?;
        let check = match self.alpha_check {
            Check::Conditional => AlphaCheck::Conditional,
            Check::Collective => AlphaCheck::Collective {
                withheld_fraction: self.withheld,
            },
        };
        let cfg = ProtocolConfig::unchecked(Arc::new(self.code()?), freqs)
            .with_z(self.z)
            .with_mode(self.mode.into())
            .with_alpha_check(check);
        cfg.validate()?;
        Ok(cfg)
    }

    fn players(&self) -> Players {
        Players {
            alice: self.alice.clone(),
            bob: self.bob.clone(),
            desired: self.desired == 1,
        }
    }
}

fn load_code_file(path: &Path) -> Result<LinearCode, HarnessError> {
    let text = std::fs::read_to_string(path)?;
    let name = path
        .file_stem()
        .map_or_else(|| "file".to_string(), |s| s.to_string_lossy().into_owned());
    Ok(LinearCode::parse_descriptor(name, &text)?)
}

fn parse_grid(text: &str) -> Result<Vec<LieFrequencies>, HarnessError> {
    text.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|point| {
            let v: Vec<f64> = point
                .split(',')
                .map(|x| {
                    x.trim()
                        .parse::<f64>()
                        .map_err(|_| HarnessError::Usage(format!("bad grid value {x:?}")))
                })
                .collect::<Result<_, _>>()?;
            let [a, b, c] = v[..] else {
                return Err(HarnessError::Usage(format!(
                    "grid point {point:?} needs three values"
                )));
            };
            Ok(LieFrequencies::new(a, b, c)?)
        })
        .collect()
}

fn emit(json: &str, out: Option<&Path>, print: bool) -> Result<(), HarnessError> {
    if let Some(p) = out {
        std::fs::write(p, json)?;
    }
    if print {
        print!("{json}");
    }
    Ok(())
}

fn run(cli: Cli) -> Result<u8, HarnessError> {
    match cli.command {
        Command::Flip { common, format } => {
            let cfg = common.config()?;
            let (report, text) = run_report(&cfg, &common.players(), common.seed, common.timing)?;
            let json = to_json(&report);
            match format {
                Format::Text => {
                    emit(&json, common.out.as_deref(), false)?;
                    print!("{text}");
                }
                Format::Json => emit(&json, common.out.as_deref(), true)?,
            }
            Ok(if report.outcome.is_completed() {
                0
            } else {
                EXIT_ABORTED
            })
        }
        Command::Montecarlo {
            common,
            trials,
            csv,
            format,
        } => {
            let cfg = common.config()?;
            let (report, rows) = campaign(
                "montecarlo",
                &cfg,
                &common.players(),
                trials,
                common.seed,
                common.timing,
            )?;
            if let Some(path) = csv {
                write_size_csv(&path, &rows)?;
            }
            let json = to_json(&report);
            emit(&json, common.out.as_deref(), matches!(format, Format::Json))?;
            if matches!(format, Format::Text) {
                print_campaign_text(&report);
            }
            Ok(0)
        }
        Command::Attack {
            common,
            trials,
            format,
        } => {
            let cfg = common.config()?;
            let (report, _) = campaign(
                "attack",
                &cfg,
                &common.players(),
                trials,
                common.seed,
                common.timing,
            )?;
            let json = to_json(&report);
            emit(&json, common.out.as_deref(), matches!(format, Format::Json))?;
            if matches!(format, Format::Text) {
                print_campaign_text(&report);
            }
            Ok(0)
        }
        Command::VerifyFormulas {
            s,
            grid,
            theta,
            z,
            mode,
            seed,
            out,
            timing,
        } => {
            let grid = match grid {
                Some(g) => parse_grid(&g)?,
                None => default_grid(),
            };
            let thetas = if theta.is_empty() {
                default_thetas()
            } else {
                theta
            };
            let report = verify_formulas(&grid, &thetas, s, z, mode.into(), seed, timing)?;
            emit(&to_json(&report), out.as_deref(), true)?;
            Ok(if report.all_pass == Some(true) {
                0
            } else {
                EXIT_ERROR
            })
        }
        Command::Code {
            preset,
            random,
            code_file,
            export,
            format,
            out,
        } => {
            let code = if let Some(path) = code_file {
                load_code_file(&path)?
            } else if let Some(r) = random {
                let v: Vec<&str> = r.split(',').map(str::trim).collect();
                let [s, k, seed] = v[..] else {
                    return Err(HarnessError::Usage(format!(
                        "--random expects s,k,seed, got {r:?}"
                    )));
                };
                build_code(&format!("random-{s}-{k}-{seed}").parse::<CodeSpec>()?)?
            } else {
                build_code(
                    &preset
                        .as_deref()
                        .unwrap_or("hamming-63-57")
                        .parse::<CodeSpec>()?,
                )?
            };
            if let Some(path) = export {
                std::fs::write(path, code.to_descriptor())?;
            }
            let report = code_report(&code);
            let json = to_json(&report);
            emit(&json, out.as_deref(), matches!(format, Format::Json))?;
            if matches!(format, Format::Text) {
                println!("code {} ({})", report.name, report.provenance);
                println!("s={} k={} d={}", report.s, report.k, report.d);
                println!(
                    "parity census: even={} odd={}",
                    report.census_even, report.census_odd
                );
                println!("{}", report.feasibility);
            }
            Ok(0)
        }
    }
}

fn print_campaign_text(r: &qcf::harness::CampaignReport) {
    println!(
        "trials={} completed={} aborted={} abort_rate={:.4}",
        r.trials, r.completed, r.aborted, r.abort_rate
    );
    println!(
        "c0={} c1={} pr_c0={:.4} sigma={:.4}",
        r.c0, r.c1, r.pr_c0, r.pr_c0_sigma
    );
    for (check, n) in &r.abort_histogram {
        println!("abort {check}: {n}");
    }
    if let Some(b) = &r.bias {
        println!(
            "epsilon_hat={:.4} (completed runs) ci_halfwidth={:.4} abort_as_loss={:.4}",
            b.epsilon_hat,
            b.ci_halfwidth,
            b.epsilon_hat_abort_loss.unwrap_or(0.0)
        );
    }
    for w in &r.warnings {
        println!("warning: {w}");
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() {
                EXIT_CONFIG
            } else {
                EXIT_ERROR
            })
        }
    }
}

//! Reports behind the command-line tool. Every report is plain data with a
//! versioned JSON schema and depends only on its inputs and seed.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::{
    alice_factory, bob_factory, run_trials, BiasReport, RegistryError, TrialSummary,
};
use crate::codes::{feasibility_lower_bound, CodeError, LinearCode};
use crate::liedetect::{
    expected_detected, expected_m_prime, expected_sizes, run_algorithm, size_tolerance_check,
    Algorithm, ExpectedSizes, ExperimentConfig, LieDetectError, LieFrequencies, LieType,
    MeasurementMode, SetSizes,
};
use crate::protocol::{
    run_protocol, AlphaCheck, CheckRecord, ConfigError, Outcome, ProtocolConfig, ProtocolError,
    TranscriptRow,
};
use crate::rng::derive_seed;

pub const SCHEMA_VERSION: &str = "1.0";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    LieDetect(#[from] LieDetectError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("{0}")]
    Usage(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl HarnessError {
    /// Whether the error stems from the requested configuration rather than the harness.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            HarnessError::Config(_)
                | HarnessError::Code(_)
                | HarnessError::Registry(_)
                | HarnessError::Usage(_)
        ) || matches!(self, HarnessError::LieDetect(_))
    }
}

/// The configuration as echoed into reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub code: String,
    pub s: usize,
    pub k: usize,
    pub d: usize,
    pub fa: f64,
    pub fb: f64,
    pub fc: f64,
    pub z: f64,
    pub bit_threshold: usize,
    pub parity_threshold: u128,
    pub mode: MeasurementMode,
    pub alpha_check: AlphaCheck,
    pub alice: String,
    pub bob: String,
    pub desired: u8,
}

impl ConfigEcho {
    pub fn new(cfg: &ProtocolConfig, alice: &str, bob: &str, desired: bool) -> Self {
        Self {
            code: cfg.code.name().to_string(),
            s: cfg.s(),
            k: cfg.code.k(),
            d: cfg.code.d(),
            fa: cfg.bob_freqs.fa(),
            fb: cfg.bob_freqs.fb(),
            fc: cfg.bob_freqs.fc(),
            z: cfg.z,
            bit_threshold: cfg.bit_threshold,
            parity_threshold: cfg.parity_threshold,
            mode: cfg.mode,
            alpha_check: cfg.alpha_check,
            alice: alice.to_string(),
            bob: bob.to_string(),
            desired: u8::from(desired),
        }
    }
}

/// Strategies and target for a run or campaign.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Players {
    pub alice: String,
    pub bob: String,
    pub desired: bool,
}

impl Default for Players {
    fn default() -> Self {
        Self {
            alice: "honest".into(),
            bob: "honest".into(),
            desired: false,
        }
    }
}

impl Players {
    pub fn adversarial(&self) -> bool {
        self.alice != "honest" || self.bob != "honest"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: String,
    pub kind: String,
    pub config: ConfigEcho,
    pub seed: u64,
    pub outcome: Outcome,
    pub alice_c: Option<u8>,
    pub bob_c: Option<u8>,
    pub checks: Vec<CheckRecord>,
    pub sizes: Option<SetSizes>,
    pub expected_sizes: ExpectedSizes,
    pub transcript: Vec<TranscriptRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<f64>,
}

/// One protocol run plus its text transcript.
pub fn run_report(
    cfg: &ProtocolConfig,
    players: &Players,
    seed: u64,
    timing: bool,
) -> Result<(RunReport, String), HarnessError> {
    let start = Instant::now();
    let alice = alice_factory(&players.alice, cfg, players.desired)?;
    let bob = bob_factory(&players.bob, cfg, players.desired)?;
    let (mut a, mut b) = (alice(), bob());
    let r = run_protocol(a.as_mut(), b.as_mut(), cfg, seed)?;
    let report = RunReport {
        schema_version: SCHEMA_VERSION.into(),
        kind: "run".into(),
        config: ConfigEcho::new(cfg, &players.alice, &players.bob, players.desired),
        seed,
        outcome: r.outcome,
        alice_c: r.alice_c.map(u8::from),
        bob_c: r.bob_c.map(u8::from),
        checks: r.transcript.checks().cloned().collect(),
        sizes: r.sizes,
        expected_sizes: expected_sizes(&effective(cfg), cfg.s()),
        transcript: r.transcript.rows(),
        timing_ms: timing.then(|| start.elapsed().as_secs_f64() * 1e3),
    };
    Ok((report, r.transcript.render_text()))
}

fn effective(cfg: &ProtocolConfig) -> LieFrequencies {
    crate::protocol::effective_frequencies(&cfg.bob_freqs, cfg.withheld_fraction())
}

/// Sample mean and standard deviation of one set size against its expectation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizeStat {
    pub count: usize,
    pub mean: f64,
    pub sd: f64,
    pub expected: f64,
}

impl SizeStat {
    fn from_samples(xs: &[usize], expected: f64) -> Self {
        let n = xs.len();
        let mean = if n == 0 {
            0.0
        } else {
            xs.iter().sum::<usize>() as f64 / n as f64
        };
        let var = if n < 2 {
            0.0
        } else {
            xs.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        };
        Self {
            count: n,
            mean,
            sd: var.sqrt(),
            expected,
        }
    }
}

/// One observed-vs-expected comparison of the formula verification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormulaCell {
    pub fa: f64,
    pub fb: f64,
    pub fc: f64,
    pub theta: f64,
    pub s: usize,
    pub algorithm: Algorithm,
    pub quantity: String,
    pub observed: f64,
    pub expected: f64,
    /// `None` for exact comparisons.
    pub allowance: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub schema_version: String,
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<ConfigEcho>,
    pub seed: u64,
    pub trials: usize,
    pub completed: usize,
    pub aborted: usize,
    pub c0: usize,
    pub c1: usize,
    /// `Pr[c = 0]` among completed runs and its binomial standard error.
    pub pr_c0: f64,
    pub pr_c0_sigma: f64,
    pub pr_c0_within_4sigma: bool,
    pub abort_rate: f64,
    pub coins_disagree: usize,
    pub abort_histogram: BTreeMap<String, usize>,
    /// Set sizes of completed runs against the closed-form means.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub set_sizes: Option<BTreeMap<String, SizeStat>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bias: Option<BiasReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cells: Option<Vec<FormulaCell>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub all_pass: Option<bool>,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<f64>,
}

impl CampaignReport {
    fn empty(kind: &str, seed: u64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.into(),
            kind: kind.into(),
            config: None,
            seed,
            trials: 0,
            completed: 0,
            aborted: 0,
            c0: 0,
            c1: 0,
            pr_c0: 0.0,
            pr_c0_sigma: 0.0,
            pr_c0_within_4sigma: true,
            abort_rate: 0.0,
            coins_disagree: 0,
            abort_histogram: BTreeMap::new(),
            set_sizes: None,
            bias: None,
            cells: None,
            all_pass: None,
            warnings: Vec::new(),
            timing_ms: None,
        }
    }
}

/// Per-trial row of the set-size CSV export.
#[derive(Debug, Clone, Serialize)]
pub struct SizeRow {
    pub trial: usize,
    pub outcome: String,
    pub c: Option<u8>,
    pub u: Option<usize>,
    pub l: Option<usize>,
    pub n: Option<usize>,
    pub m: Option<usize>,
}

/// Runs `trials` protocol instances; `kind` is `montecarlo` or `attack`.
/// Attack campaigns always carry a [`BiasReport`]; Monte Carlo campaigns
/// carry one when either side is adversarial.
pub fn campaign(
    kind: &str,
    cfg: &ProtocolConfig,
    players: &Players,
    trials: usize,
    seed: u64,
    timing: bool,
) -> Result<(CampaignReport, Vec<SizeRow>), HarnessError> {
    if trials == 0 {
        return Err(HarnessError::Usage("trials must be at least 1".into()));
    }
    let start = Instant::now();
    let alice = alice_factory(&players.alice, cfg, players.desired)?;
    let bob = bob_factory(&players.bob, cfg, players.desired)?;
    let mut rows = Vec::with_capacity(trials);
    let summaries: Vec<TrialSummary> = run_trials(&alice, &bob, cfg, trials, seed, |t, r| {
        let completed = r.outcome.is_completed();
        let sizes = r.sizes.filter(|_| completed);
        rows.push(SizeRow {
            trial: t,
            outcome: r.outcome.to_string(),
            c: r.outcome.coin().map(u8::from),
            u: sizes.map(|s| s.u),
            l: sizes.map(|s| s.l),
            n: sizes.map(|s| s.n),
            m: sizes.map(|s| s.m),
        });
    })?;
    let bias = BiasReport::from_trials(&summaries, Some(players.desired));

    let mut report = CampaignReport::empty(kind, seed);
    report.config = Some(ConfigEcho::new(
        cfg,
        &players.alice,
        &players.bob,
        players.desired,
    ));
    report.trials = trials;
    report.completed = bias.completed;
    report.aborted = trials - bias.completed;
    report.c0 = bias.c0;
    report.c1 = bias.c1;
    report.pr_c0 = if bias.completed == 0 {
        0.0
    } else {
        bias.c0 as f64 / bias.completed as f64
    };
    report.pr_c0_sigma = if bias.completed == 0 {
        0.0
    } else {
        (0.25 / bias.completed as f64).sqrt()
    };
    report.pr_c0_within_4sigma =
        bias.completed > 0 && (report.pr_c0 - 0.5).abs() <= 4.0 * report.pr_c0_sigma;
    report.abort_rate = bias.p_abort;
    report.coins_disagree = bias.coins_disagree;
    report.abort_histogram = bias.abort_histogram.clone();
    report.warnings = crate::protocol::feasibility_warnings(&cfg.code, &cfg.bob_freqs);

    let exp = expected_sizes(&effective(cfg), cfg.s());
    let pick = |f: fn(&SizeRow) -> Option<usize>| rows.iter().filter_map(f).collect::<Vec<_>>();
    let mut stats = BTreeMap::new();
    stats.insert(
        "U".to_string(),
        SizeStat::from_samples(&pick(|r| r.u), exp.u),
    );
    stats.insert(
        "L".to_string(),
        SizeStat::from_samples(&pick(|r| r.l), exp.l),
    );
    stats.insert(
        "N".to_string(),
        SizeStat::from_samples(&pick(|r| r.n), exp.n),
    );
    stats.insert(
        "M".to_string(),
        SizeStat::from_samples(&pick(|r| r.m), exp.m),
    );
    report.set_sizes = Some(stats);

    if kind == "attack" || players.adversarial() {
        report.bias = Some(bias);
    }
    report.timing_ms = timing.then(|| start.elapsed().as_secs_f64() * 1e3);
    Ok((report, rows))
}

pub fn write_size_csv(path: &Path, rows: &[SizeRow]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// The default frequency grid for formula verification.
pub fn default_grid() -> Vec<LieFrequencies> {
    [(0.2, 0.2, 0.1), (0.1, 0.3, 0.05), (0.3, 0.1, 0.2)]
        .into_iter()
        .map(|(a, b, c)| LieFrequencies::new(a, b, c).expect("grid points are valid"))
        .collect()
}

pub fn default_thetas() -> Vec<f64> {
    use std::f64::consts::PI;
    vec![PI / 6.0, PI / 4.0, PI / 3.0]
}

/// Runs Algorithms I–IV standalone over `grid × thetas`, one run per cell
/// and algorithm, and compares every count with its closed form.
pub fn verify_formulas(
    grid: &[LieFrequencies],
    thetas: &[f64],
    s: usize,
    z: f64,
    mode: MeasurementMode,
    seed: u64,
    timing: bool,
) -> Result<CampaignReport, HarnessError> {
    let start = Instant::now();
    let mut cells = Vec::new();
    let mut label = 0u64;
    for freqs in grid {
        for &theta in thetas {
            let cfg = ExperimentConfig::new(s, *freqs)
                .with_theta(theta)
                .with_mode(mode);
            let eff = crate::protocol::effective_frequencies(
                freqs,
                if mode == MeasurementMode::Delayed {
                    1.0
                } else {
                    0.0
                },
            );
            let exp = expected_sizes(&eff, s);
            for alg in Algorithm::ALL {
                let run = run_algorithm(alg, &cfg, derive_seed(seed, label))?;
                label += 1;
                let mut stat =
                    |quantity: &str, observed: usize, expected: f64| -> Result<(), HarnessError> {
                        let r = size_tolerance_check(observed as f64, expected, s, z)?;
                        cells.push(FormulaCell {
                            fa: freqs.fa(),
                            fb: freqs.fb(),
                            fc: freqs.fc(),
                            theta,
                            s,
                            algorithm: alg,
                            quantity: quantity.into(),
                            observed: observed as f64,
                            expected,
                            allowance: Some(r.allowance),
                            pass: r.pass,
                        });
                        Ok(())
                    };
                match alg {
                    Algorithm::I => {
                        stat("detected", run.detected.len(), expected_detected(&eff, s))?
                    }
                    Algorithm::II => stat(
                        "detected",
                        run.detected.len(),
                        2.0 * expected_detected(&eff, s),
                    )?,
                    Algorithm::III => {
                        let p = run.partition.as_ref().expect("partitioning algorithm");
                        stat("U", p.u.len(), exp.u)?;
                        stat("L", p.l.len(), exp.l)?;
                        stat("N", p.n.len(), exp.n)?;
                        stat("M", p.l.len() + p.n.len(), exp.m)?;
                    }
                    Algorithm::IV => {
                        let p = run.partition.as_ref().expect("partitioning algorithm");
                        stat("M'", p.l.len() + p.n.len(), expected_m_prime(&eff, s))?;
                    }
                }
                let forbidden = match alg {
                    Algorithm::III => Some(("typeB_in_N", LieType::B)),
                    Algorithm::IV => Some(("typeC_in_N'", LieType::C)),
                    _ => None,
                };
                if let Some((quantity, kind)) = forbidden {
                    let count = run.kind_in_n(kind);
                    cells.push(FormulaCell {
                        fa: freqs.fa(),
                        fb: freqs.fb(),
                        fc: freqs.fc(),
                        theta,
                        s,
                        algorithm: alg,
                        quantity: quantity.into(),
                        observed: count as f64,
                        expected: 0.0,
                        allowance: None,
                        pass: count == 0,
                    });
                }
            }
        }
    }
    let mut report = CampaignReport::empty("verify-formulas", seed);
    report.trials = grid.len() * thetas.len();
    report.all_pass = Some(cells.iter().all(|c| c.pass));
    report.cells = Some(cells);
    report.timing_ms = timing.then(|| start.elapsed().as_secs_f64() * 1e3);
    Ok(report)
}

/// Summary of a code for the `code` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeReport {
    pub schema_version: String,
    pub kind: String,
    pub name: String,
    pub s: usize,
    pub k: usize,
    pub d: usize,
    pub provenance: String,
    pub census_even: String,
    pub census_odd: String,
    pub lower_bound: f64,
    pub feasibility: String,
    pub feasible: bool,
}

pub fn code_report(code: &LinearCode) -> CodeReport {
    let (even, odd) = code.parity_census();
    let lower = feasibility_lower_bound(code);
    CodeReport {
        schema_version: SCHEMA_VERSION.into(),
        kind: "code".into(),
        name: code.name().to_string(),
        s: code.s(),
        k: code.k(),
        d: code.d(),
        provenance: format!("{:?}", code.provenance()).to_lowercase(),
        census_even: even.to_string(),
        census_odd: odd.to_string(),
        lower_bound: lower,
        feasibility: feasibility_line(code),
        feasible: lower < 0.5,
    }
}

/// `2d/s = 0.095 < f_a+f_c < 0.5`, or a note that the window is empty.
pub fn feasibility_line(code: &LinearCode) -> String {
    let lower = feasibility_lower_bound(code);
    if lower < 0.5 {
        format!("2d/s = {lower:.3} < f_a+f_c < 0.5")
    } else {
        format!("2d/s = {lower:.3} >= 0.5: no admissible f_a+f_c")
    }
}

/// Serialized report with a trailing newline.
pub fn to_json<T: Serialize>(report: &T) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hamming63_feasibility_line() {
        let code = LinearCode::hamming(6).unwrap();
        assert_eq!(feasibility_line(&code), "2d/s = 0.095 < f_a+f_c < 0.5");
    }

    #[test]
    fn size_stat_moments() {
        let s = SizeStat::from_samples(&[1, 2, 3], 2.0);
        assert_eq!(s.mean, 2.0);
        assert!((s.sd - 1.0).abs() < 1e-12);
    }
}

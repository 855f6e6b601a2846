use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codes::{feasibility_lower_bound, LinearCode, DEFAULT_PARITY_THRESHOLD};
use crate::liedetect::{AssignMode, LieFrequencies, MeasurementMode};

/// Honest Bob aims for `f_a + f_c` at least this far above `2d/s`.
pub const HONEST_MARGIN: f64 = 0.05;

/// Default fraction of betas Bob keeps unmeasured for the collective check.
pub const DEFAULT_WITHHELD_FRACTION: f64 = 0.2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("infeasible frequencies: need 2d/s = {lower:.4} < f_a+f_c = {sum:.4} < 0.5")]
    LieSumOutOfRange { lower: f64, sum: f64 },
    #[error("infeasible frequencies: need f_b = {fb} > f_c = {fc}")]
    TypeBNotDominant { fb: f64, fc: f64 },
    #[error("code {0} lacks codewords of both parities")]
    ParityRequirement(String),
    #[error("tolerance multiplier must be positive, got {0}")]
    BadZ(f64),
    #[error("withheld fraction must lie in [0,1], got {0}")]
    BadWithheld(f64),
    #[error("{0}")]
    Invalid(String),
}

/// How Bob verifies the alphas of `U` in step 9.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum AlphaCheck {
    /// Measure alpha in `{expected conditional state, its complement}`.
    Conditional,
    /// Keep a fraction of betas unmeasured and project those pairs onto the
    /// honest preparation; the rest use the conditional check.
    Collective { withheld_fraction: f64 },
}

/// Whether failed checks stop the run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GatePolicy {
    Enforce,
    /// Failures before step 9 are recorded but the run continues. Only for
    /// experiments that study the final checks in isolation.
    RecordOnly,
}

/// Everything both parties know in advance.
#[derive(Debug, Clone)]
pub struct PublicParams {
    pub code: Arc<LinearCode>,
    pub z: f64,
    pub bit_threshold: usize,
    pub gates: GatePolicy,
}

impl PublicParams {
    pub fn s(&self) -> usize {
        self.code.s()
    }
}

#[derive(Debug, Clone)]
pub struct ProtocolConfig {
    pub code: Arc<LinearCode>,
    pub z: f64,
    /// Minimum count of each bit value among announced `q″`.
    pub bit_threshold: usize,
    /// Minimum number of codewords in each parity class.
    pub parity_threshold: u128,
    /// Honest Bob's private lie frequencies.
    pub bob_freqs: LieFrequencies,
    pub assign: AssignMode,
    pub mode: MeasurementMode,
    pub alpha_check: AlphaCheck,
    pub gates: GatePolicy,
}

/// `2d/s < f_a + f_c < 1/2` and `f_b > f_c`.
pub fn feasibility(code: &LinearCode, freqs: &LieFrequencies) -> Result<(), ConfigError> {
    let lower = feasibility_lower_bound(code);
    let sum = freqs.fa() + freqs.fc();
    if sum.is_nan() || sum <= lower || sum >= 0.5 {
        return Err(ConfigError::LieSumOutOfRange { lower, sum });
    }
    if freqs.fb() <= freqs.fc() {
        return Err(ConfigError::TypeBNotDominant {
            fb: freqs.fb(),
            fc: freqs.fc(),
        });
    }
    Ok(())
}

/// Advisories for feasible but fragile configurations.
pub fn feasibility_warnings(code: &LinearCode, freqs: &LieFrequencies) -> Vec<String> {
    let lower = feasibility_lower_bound(code);
    let sum = freqs.fa() + freqs.fc();
    let mut out = Vec::new();
    if sum < lower + HONEST_MARGIN {
        out.push(format!(
            "f_a+f_c = {sum:.4} is within {HONEST_MARGIN} of 2d/s = {lower:.4}; the |M| > d + s/4 check will often fail"
        ));
    }
    let margin = (0.25 + sum / 2.0) * code.s() as f64 - (code.d() as f64 + code.s() as f64 / 4.0);
    if margin < 3.0 {
        out.push(format!("expected |M| exceeds d + s/4 by only {margin:.2}"));
    }
    out
}

/// Frequencies that govern the set sizes when a fraction `withheld` of the
/// indices is announced before measuring: on those, the planned basis rule
/// splits evenly between honest and type A, and between types B and C.
pub fn effective_frequencies(freqs: &LieFrequencies, withheld: f64) -> LieFrequencies {
    let w = withheld.clamp(0.0, 1.0);
    let same = (freqs.fh() + freqs.fa()) / 2.0;
    let other = (freqs.fb() + freqs.fc()) / 2.0;
    let mix = |f: f64, d: f64| (1.0 - w) * f + w * d;
    LieFrequencies::new(
        mix(freqs.fa(), same),
        mix(freqs.fb(), other),
        mix(freqs.fc(), other),
    )
    .expect("a convex mix of valid frequencies is valid")
}

impl ProtocolConfig {
    /// A validated configuration with default thresholds.
    pub fn new(
        code: impl Into<Arc<LinearCode>>,
        bob_freqs: LieFrequencies,
    ) -> Result<Self, ConfigError> {
        let cfg = Self::unchecked(code, bob_freqs);
        cfg.validate()?;
        Ok(cfg)
    }

    /// Defaults without any validation.
    pub fn unchecked(code: impl Into<Arc<LinearCode>>, bob_freqs: LieFrequencies) -> Self {
        let code = code.into();
        let bit_threshold = code.s().div_ceil(8);
        Self {
            code,
            z: 4.0,
            bit_threshold,
            parity_threshold: DEFAULT_PARITY_THRESHOLD,
            bob_freqs,
            assign: AssignMode::Exact,
            mode: MeasurementMode::MeasureFirst,
            alpha_check: AlphaCheck::Conditional,
            gates: GatePolicy::Enforce,
        }
    }

    /// For experiments on the final checks: no validation, gates only record.
    pub fn experimental(code: impl Into<Arc<LinearCode>>, bob_freqs: LieFrequencies) -> Self {
        Self {
            gates: GatePolicy::RecordOnly,
            ..Self::unchecked(code, bob_freqs)
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.z.is_nan() || self.z <= 0.0 {
            return Err(ConfigError::BadZ(self.z));
        }
        if let AlphaCheck::Collective { withheld_fraction } = self.alpha_check {
            if !(0.0..=1.0).contains(&withheld_fraction) {
                return Err(ConfigError::BadWithheld(withheld_fraction));
            }
        }
        if !self.code.parity_requirement_holds(self.parity_threshold) {
            return Err(ConfigError::ParityRequirement(self.code.name().to_string()));
        }
        feasibility(&self.code, &self.bob_freqs)
    }

    pub fn with_z(self, z: f64) -> Self {
        Self { z, ..self }
    }

    pub fn with_mode(self, mode: MeasurementMode) -> Self {
        Self { mode, ..self }
    }

    pub fn with_alpha_check(self, alpha_check: AlphaCheck) -> Self {
        Self {
            alpha_check,
            ..self
        }
    }

    pub fn with_collective_check(self) -> Self {
        self.with_alpha_check(AlphaCheck::Collective {
            withheld_fraction: DEFAULT_WITHHELD_FRACTION,
        })
    }

    pub fn s(&self) -> usize {
        self.code.s()
    }

    /// Fraction of betas honest Bob leaves unmeasured at step 3.
    pub fn withheld_fraction(&self) -> f64 {
        match (self.mode, self.alpha_check) {
            (MeasurementMode::Delayed, _) => 1.0,
            (_, AlphaCheck::Collective { withheld_fraction }) => withheld_fraction,
            _ => 0.0,
        }
    }

    pub fn public(&self) -> PublicParams {
        PublicParams {
            code: self.code.clone(),
            z: self.z,
            bit_threshold: self.bit_threshold,
            gates: self.gates,
        }
    }
}

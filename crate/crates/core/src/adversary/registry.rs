//! Strategies by name, as used on the command line and in campaigns.

use std::sync::Arc;

use thiserror::Error;

use super::alice::{
    BitflipAlice, BitflipCodewordAlice, LieGuess, ProductStateAlice, RelabelSearch,
};
use super::bob::{known_bits_within_bound, HelstromBob, TypeBFloodBob};
use crate::liedetect::LieFrequencies;
use crate::protocol::{
    feasibility, AliceStrategy, BobStrategy, HonestAlice, HonestBob, ProtocolConfig, HONEST_MARGIN,
};

pub const ALICE_STRATEGIES: &[&str] = &[
    "honest",
    "bitflip-<n>",
    "bitflip-codeword",
    "product-state",
    "product-state-semiclassical",
];
pub const BOB_STRATEGIES: &[&str] = &[
    "honest",
    "helstrom-guess",
    "typeb-flood",
    "typeb-flood-<fb>",
];

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("unknown {role} strategy {name:?}; known: {known}")]
    Unknown {
        role: &'static str,
        name: String,
        known: String,
    },
    #[error("strategy {name} is infeasible here: {reason}")]
    Infeasible { name: String, reason: String },
}

pub type AliceFactory = Arc<dyn Fn() -> Box<dyn AliceStrategy> + Send + Sync>;
pub type BobFactory = Arc<dyn Fn() -> Box<dyn BobStrategy> + Send + Sync>;

fn unknown(role: &'static str, name: &str, known: &[&str]) -> RegistryError {
    RegistryError::Unknown {
        role,
        name: name.to_string(),
        known: known.join(", "),
    }
}

/// Builds an Alice factory. Cheaters aim for `desired`.
pub fn alice_factory(
    name: &str,
    config: &ProtocolConfig,
    desired: bool,
) -> Result<AliceFactory, RegistryError> {
    let search = || Arc::new(RelabelSearch::new(&config.code));
    Ok(match name {
        "honest" => Arc::new(|| Box::new(HonestAlice::new())),
        "bitflip-codeword" => {
            let s = search();
            Arc::new(move || Box::new(BitflipCodewordAlice::new(s.clone(), desired)))
        }
        "bitflip-codeword-forced" => {
            let s = search();
            Arc::new(move || Box::new(BitflipCodewordAlice::forced(s.clone())))
        }
        "product-state" | "product-state-semiclassical" => {
            let guess = if name == "product-state" {
                LieGuess::Coin
            } else {
                LieGuess::Semiclassical
            };
            let s = search();
            Arc::new(move || Box::new(ProductStateAlice::new(guess, s.clone(), desired)))
        }
        other => match other
            .strip_prefix("bitflip-")
            .and_then(|n| n.parse::<usize>().ok())
        {
            Some(n) if n >= 1 && n <= config.s() => {
                Arc::new(move || Box::new(BitflipAlice::new(n, desired)))
            }
            _ => return Err(unknown("alice", name, ALICE_STRATEGIES)),
        },
    })
}

/// Builds a Bob factory. Cheaters aim for `desired`.
pub fn bob_factory(
    name: &str,
    config: &ProtocolConfig,
    desired: bool,
) -> Result<BobFactory, RegistryError> {
    let infeasible = |reason: String| RegistryError::Infeasible {
        name: name.to_string(),
        reason,
    };
    Ok(match name {
        "honest" => {
            let cfg = config.clone();
            Arc::new(move || Box::new(HonestBob::from_config(&cfg)))
        }
        "helstrom-guess" => Arc::new(move || Box::new(HelstromBob::new(desired))),
        "typeb-flood" => {
            let freqs = TypeBFloodBob::max_flood(config.code.d(), config.s(), config.assign)
                .map_err(|e| infeasible(e.to_string()))?;
            flood(config, freqs, desired).map_err(infeasible)?
        }
        other => match other
            .strip_prefix("typeb-flood-")
            .and_then(|f| f.parse::<f64>().ok())
        {
            Some(fb) if (0.0..1.0).contains(&fb) => {
                let (d, s) = (config.code.d(), config.s());
                let fa = 2.0 * d as f64 / s as f64 + HONEST_MARGIN;
                if !known_bits_within_bound(fa, fb, 0.0, d, s, config.assign) {
                    return Err(infeasible(format!(
                        "f_b = {fb} would reveal close to s - d = {} bits of q",
                        s - d
                    )));
                }
                let freqs =
                    LieFrequencies::new(fa, fb, 0.0).map_err(|e| infeasible(e.to_string()))?;
                flood(config, freqs, desired).map_err(infeasible)?
            }
            _ => return Err(unknown("bob", name, BOB_STRATEGIES)),
        },
    })
}

fn flood(
    config: &ProtocolConfig,
    freqs: LieFrequencies,
    desired: bool,
) -> Result<BobFactory, String> {
    feasibility(&config.code, &freqs).map_err(|e| e.to_string())?;
    let assign = config.assign;
    Ok(Arc::new(move || {
        Box::new(TypeBFloodBob::new(freqs, assign, desired))
    }))
}

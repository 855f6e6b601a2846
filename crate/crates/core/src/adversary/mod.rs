//! Cheating strategies for either party and the tools to measure them.

mod alice;
mod bias;
mod bob;
mod experiments;
mod parity;
mod registry;

pub use alice::{
    relabel, BitflipAlice, BitflipCodewordAlice, LieGuess, ProductStateAlice, RelabelSearch,
};
pub use bias::{estimate_bias, run_trials, BiasReport, TrialSummary};
pub use bob::{
    flood_known_bits, helstrom_target_mismatch, known_bits_within_bound, HelstromBob,
    TypeBFloodBob, FLOOD_Z,
};
pub use experiments::{
    announced_results, b94_claim_detection_probability, b94_claim_rate, b94_claim_trial,
    final_check_failed, product_claimed_lie_probability, relabel_detection_prediction,
    ClaimScenario,
};
pub use parity::{parity_guess_accuracy, parity_guess_experiment};
pub use registry::{
    alice_factory, bob_factory, AliceFactory, BobFactory, RegistryError, ALICE_STRATEGIES,
    BOB_STRATEGIES,
};

use super::checks::{coin_from_public, CheckRecord};
use super::config::{GatePolicy, ProtocolConfig};
use super::env::QuantumEnv;
use super::transcript::{Message, Outcome, Party, Transcript};
use super::{AliceStrategy, BobStrategy, Diagnostics, ProtocolError};
use crate::liedetect::SetSizes;
use crate::rng::RandomStream;

/// Stream labels under the run seed.
const ENV: u64 = 0;
const ALICE: u64 = 1;
const BOB: u64 = 2;

/// Private state of both parties, collected after the run for analysis only.
#[derive(Debug, Clone, Default)]
pub struct Audit {
    pub alice: Diagnostics,
    pub bob: Diagnostics,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub outcome: Outcome,
    pub transcript: Transcript,
    pub alice_c: Option<bool>,
    pub bob_c: Option<bool>,
    /// Sizes as revealed at step 8 (`L` alone if the run stopped earlier).
    pub sizes: Option<SetSizes>,
    pub alice_cheated: bool,
    pub bob_cheated: bool,
    pub audit: Audit,
}

impl RunResult {
    pub fn coins_agree(&self) -> bool {
        self.alice_c == self.bob_c
    }
}

/// Records `records` at `step`; returns the first failure if the gates enforce it.
fn gate(
    transcript: &mut Transcript,
    step: u8,
    records: Vec<CheckRecord>,
    gates: GatePolicy,
    stop_always: bool,
) -> Option<Outcome> {
    let mut first_fail = None;
    for r in records {
        if !r.pass && first_fail.is_none() {
            first_fail = Some(Outcome::Aborted {
                check: r.id,
                by: r.by,
            });
        }
        transcript.push_check(step, r);
    }
    match first_fail {
        Some(o) if stop_always || gates == GatePolicy::Enforce => {
            if let Outcome::Aborted { check, by } = o {
                transcript.push_message(step, by, Message::Abort { check });
            }
            Some(o)
        }
        _ => None,
    }
}

/// Runs steps 2–10 between two strategies. `seed` fixes every random choice.
pub fn run_protocol(
    alice: &mut dyn AliceStrategy,
    bob: &mut dyn BobStrategy,
    config: &ProtocolConfig,
    seed: u64,
) -> Result<RunResult, ProtocolError> {
    let root = RandomStream::new(seed);
    let mut env = QuantumEnv::new(root.child(ENV));
    let mut alice_rng = root.child(ALICE);
    let mut bob_rng = root.child(BOB);
    let params = config.public();
    let s = params.s();
    let mut t = Transcript::default();
    let mut recorded_failure: Option<Outcome> = None;

    let finish = |t: Transcript,
                  outcome: Outcome,
                  alice: &dyn AliceStrategy,
                  bob: &dyn BobStrategy,
                  alice_c: Option<bool>,
                  bob_c: Option<bool>,
                  sizes: Option<SetSizes>| {
        let mut t = t;
        t.push_outcome(10, outcome, alice_c, bob_c);
        RunResult {
            outcome,
            transcript: t,
            alice_c,
            bob_c,
            sizes,
            alice_cheated: alice.cheat_activated(),
            bob_cheated: bob.cheat_activated(),
            audit: Audit {
                alice: alice.diagnostics(),
                bob: bob.diagnostics(),
            },
        }
    };

    // 2
    let betas = alice.prepare(&params, &mut env, &mut alice_rng)?;
    if betas.len() != s {
        return Err(ProtocolError::Malformed(format!(
            "{} betas sent, expected {s}",
            betas.len()
        )));
    }
    t.push_message(2, Party::Alice, Message::BetaTransfer { count: s });

    // 3
    let announced = bob.announce(&params, &mut env, betas, &mut bob_rng)?;
    if announced.len() != s {
        return Err(ProtocolError::Malformed(format!(
            "{} results announced, expected {s}",
            announced.len()
        )));
    }
    t.push_message(
        3,
        Party::Bob,
        Message::AnnounceResults {
            results: announced.clone(),
        },
    );

    // 4, 5
    let report = alice.partition(&params, &mut env, &announced, &mut alice_rng)?;
    let failures_before = report.checks.iter().any(|c| !c.pass);
    if let Some(o) = gate(&mut t, 4, report.checks, params.gates, false) {
        return Ok(finish(t, o, alice, bob, None, None, None));
    }
    if failures_before {
        recorded_failure = t.failed_checks().next().map(|r| Outcome::Aborted {
            check: r.id,
            by: r.by,
        });
    }
    let l = report.l;
    t.push_message(5, Party::Alice, Message::AnnounceL { l: l.clone() });

    // 6
    let l_size = SetSizes {
        l: l.len(),
        ..Default::default()
    };
    let records = bob.check_l(&params, &mut env, &l, &mut bob_rng)?;
    let fails = records.iter().any(|c| !c.pass);
    if let Some(o) = gate(&mut t, 6, records, params.gates, false) {
        return Ok(finish(t, o, alice, bob, None, None, Some(l_size)));
    }
    if fails && recorded_failure.is_none() {
        recorded_failure = t.failed_checks().next().map(|r| Outcome::Aborted {
            check: r.id,
            by: r.by,
        });
    }

    // 7
    let f = bob.choose_f(&params, &mut bob_rng);
    t.push_message(7, Party::Bob, Message::AnnounceF { f });

    // 8
    let reveal = alice.reveal(&params, &mut env, f, &mut alice_rng)?;
    let n = reveal.n.clone();
    let u = reveal.u.clone();
    let sizes = SetSizes {
        u: u.len(),
        l: l.len(),
        n: n.len(),
        m: l.len() + n.len(),
    };
    t.push_message(
        8,
        Party::Alice,
        Message::AnnounceNU {
            n: n.clone(),
            u: u.clone(),
        },
    );
    t.push_message(8, Party::Alice, Message::AlphaTransfer { indices: u });

    // 9
    let records = bob.final_checks(&params, &mut env, reveal, &mut bob_rng)?;
    if let Some(o) = gate(&mut t, 9, records, params.gates, true) {
        return Ok(finish(t, o, alice, bob, None, None, Some(sizes)));
    }
    if let Some(o) = recorded_failure {
        return Ok(finish(t, o, alice, bob, None, None, Some(sizes)));
    }

    // 10
    let alice_c = alice.coin(f, &n);
    let bob_c = bob.coin(f, &n);
    let c = coin_from_public(&announced, &n, f);
    Ok(finish(
        t,
        Outcome::Completed { c },
        alice,
        bob,
        Some(alice_c),
        Some(bob_c),
        Some(sizes),
    ))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::codes::LinearCode;
    use crate::liedetect::{LieFrequencies, MeasurementMode};
    use crate::protocol::{HonestAlice, HonestBob};

    fn config(fa: f64, fb: f64, fc: f64) -> ProtocolConfig {
        let code = Arc::new(LinearCode::hamming(6).unwrap());
        ProtocolConfig::new(code, LieFrequencies::new(fa, fb, fc).unwrap()).unwrap()
    }

    fn honest_run(cfg: &ProtocolConfig, seed: u64) -> RunResult {
        let mut a = HonestAlice::new();
        let mut b = HonestBob::from_config(cfg);
        run_protocol(&mut a, &mut b, cfg, seed).unwrap()
    }

    #[test]
    fn honest_runs_complete_with_agreeing_coins() {
        // wide margin above the |M| threshold
        let cfg = config(0.3, 0.35, 0.15);
        let mut completed = 0;
        for seed in 0..200 {
            let r = honest_run(&cfg, seed);
            match r.outcome {
                Outcome::Completed { .. } => {
                    completed += 1;
                    assert!(r.coins_agree());
                    assert_eq!(r.alice_c, r.outcome.coin());
                }
                Outcome::Aborted { check, .. } => assert!(
                    check.is_statistical() || check == crate::protocol::CheckId::A4MSize,
                    "{check}"
                ),
            }
        }
        assert!(completed >= 195, "{completed}");
    }

    #[test]
    fn transcript_is_replayable() {
        let cfg = config(0.2, 0.25, 0.1);
        let a = honest_run(&cfg, 42);
        let b = honest_run(&cfg, 42);
        assert_eq!(a.transcript, b.transcript);
        assert_eq!(a.transcript.render_text(), b.transcript.render_text());
    }

    #[test]
    fn honest_deduction_recovers_q() {
        let cfg = config(0.2, 0.25, 0.1);
        for seed in 0..50 {
            let r = honest_run(&cfg, seed);
            let (Some(q), Some(p)) = (r.audit.alice.q.clone(), r.audit.alice.partition.clone())
            else {
                continue;
            };
            if p.u.len() + p.l.len() + p.n.len() < cfg.s() {
                continue;
            }
            let ann: Vec<_> = r
                .transcript
                .entries()
                .iter()
                .find_map(|e| match e {
                    crate::protocol::TranscriptEntry::Message {
                        message: Message::AnnounceResults { results },
                        ..
                    } => Some(results.clone()),
                    _ => None,
                })
                .unwrap();
            assert_eq!(crate::protocol::deduce_q(&ann, &p), q);
        }
    }

    #[test]
    fn delayed_and_collective_modes_complete() {
        let base = config(0.2, 0.25, 0.1);
        for cfg in [
            base.clone().with_mode(MeasurementMode::Delayed),
            base.clone().with_collective_check(),
        ] {
            let mut completed = 0;
            for seed in 0..100 {
                let r = honest_run(&cfg, seed);
                if r.outcome.is_completed() {
                    completed += 1;
                    assert!(r.coins_agree());
                }
            }
            assert!(completed >= 95, "{completed}");
        }
    }
}

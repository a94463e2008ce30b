//! Randomized packet sources whose emissions provably respect a `(σ, ρ)`
//! arrival envelope.

use crate::traffic::ArrivalEnvelope;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Tolerance when comparing the token level against the packet size, so a
/// level that is exactly one packet up to float dust still releases.
const TOKEN_SLACK: f64 = 1e-9;

/// A Bernoulli packet generator policed by a token bucket.
///
/// Each cycle the source draws a coin whose success probability makes the
/// long-run attempt rate equal `ρ`; successes are banked as credits. A
/// credit is spent — one packet emitted — as soon as the bucket holds a
/// packet's worth of tokens, so transient token shortages defer traffic
/// instead of discarding it and the offered load converges to `ρ` from
/// below. The token debit enforces the envelope on the emission schedule
/// itself: over any window the emitted bytes stay within `σ + ρ·t`.
#[derive(Debug, Clone)]
pub(super) struct PacedSource {
    tokens: f64,
    sigma: f64,
    refill_per_cycle: f64,
    packet_bytes: f64,
    p_attempt: f64,
    credits: u64,
    rng: ChaCha8Rng,
}

impl PacedSource {
    /// Builds a source for one flow. `cycle_time` is in seconds; `seed`
    /// fixes the whole emission schedule.
    pub(super) fn new(
        envelope: &ArrivalEnvelope,
        packet_bytes: f64,
        cycle_time: f64,
        seed: u64,
    ) -> Self {
        let refill_per_cycle = envelope.rho * cycle_time;
        PacedSource {
            tokens: envelope.sigma,
            sigma: envelope.sigma,
            refill_per_cycle,
            packet_bytes,
            p_attempt: (refill_per_cycle / packet_bytes).min(1.0),
            credits: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Advances one cycle; returns whether a packet is emitted this cycle.
    /// The RNG is consumed at a fixed rate regardless of token state, so a
    /// flow's schedule depends only on its own seed and envelope.
    pub(super) fn tick(&mut self) -> bool {
        self.tokens = (self.tokens + self.refill_per_cycle).min(self.sigma);
        if self.p_attempt <= 0.0 {
            return false;
        }
        if self.rng.random_bool(self.p_attempt) {
            self.credits += 1;
        }
        if self.credits > 0 && self.tokens + TOKEN_SLACK >= self.packet_bytes {
            self.credits -= 1;
            self.tokens = (self.tokens - self.packet_bytes).max(0.0);
            return true;
        }
        false
    }
}

//! Deterministic worst-case bounds for token-bucket traffic through
//! constant-rate FIFO elements.
//!
//! The model is a store of FIFO building blocks: a queue fed by one input
//! link (rate `c_in`) and drained by one output link (rate `c_out ≤ c_in`),
//! and a two-input multiplexer whose links each run at least as fast as its
//! output (cut-through operation). For a flow constrained by an
//! [`ArrivalEnvelope`] `(sigma, rho)`:
//!
//! * [`backlog`] evaluates the exact worst-case queue occupancy formula for a
//!   concrete trace at a concrete instant.
//! * [`queue_delay_bound`] bounds the delay of any bit crossing a FIFO queue.
//! * [`mux_delay_bound`] bounds the delay through a two-input FIFO
//!   multiplexer, the competing stream described by its own envelope.
//! * [`switch_delay_bound`] adds the two stages into a per-switch bound, and
//!   [`path_delay_bound`] composes switches along a route, inflating the
//!   flow's burst by `rho · delay` at each hop.
//!
//! All delay results are a [`DelayBound`]: a finite number of seconds, or
//! [`DelayBound::Unbounded`] exactly when the stability precondition (rate
//! sum at most the output capacity) fails. Every operation is pure.

use crate::traffic::{ArrivalEnvelope, TrafficTrace};
use std::error::Error;
use std::fmt;
use std::ops::Add;

/// One FIFO queue stage: bits arrive over a link of rate `c_in` and leave
/// over a link of rate `c_out`, with `c_in ≥ c_out` so the queue never
/// starves mid-packet. `max_packet_l` is the largest packet in bytes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServerSpec {
    /// Input link rate, bytes/second.
    pub c_in: f64,
    /// Output link rate, bytes/second.
    pub c_out: f64,
    /// Maximum packet length, bytes.
    pub max_packet_l: f64,
}

impl ServerSpec {
    pub fn new(c_in: f64, c_out: f64, max_packet_l: f64) -> Result<Self, BoundsError> {
        check_rate("c_out", c_out)?;
        check_rate("c_in", c_in)?;
        if c_in < c_out {
            return Err(BoundsError::InputSlowerThanOutput { input: c_in, c_out });
        }
        check_packet_length(max_packet_l)?;
        Ok(Self { c_in, c_out, max_packet_l })
    }
}

/// One two-input FIFO multiplexer stage: input links `c_1` (the observed
/// flow) and `c_2` (the competing flow) merge onto an output link `c_out`,
/// with `c_1, c_2 ≥ c_out` (cut-through). `max_packet_l` is the largest
/// packet on the competing link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuxSpec {
    /// Observed flow's input link rate, bytes/second.
    pub c_1: f64,
    /// Competing flow's input link rate, bytes/second.
    pub c_2: f64,
    /// Output link rate, bytes/second.
    pub c_out: f64,
    /// Maximum packet length on the competing link, bytes.
    pub max_packet_l: f64,
}

impl MuxSpec {
    pub fn new(c_1: f64, c_2: f64, c_out: f64, max_packet_l: f64) -> Result<Self, BoundsError> {
        check_rate("c_out", c_out)?;
        check_rate("c_1", c_1)?;
        check_rate("c_2", c_2)?;
        if c_1 < c_out {
            return Err(BoundsError::InputSlowerThanOutput { input: c_1, c_out });
        }
        if c_2 < c_out {
            return Err(BoundsError::InputSlowerThanOutput { input: c_2, c_out });
        }
        check_packet_length(max_packet_l)?;
        Ok(Self { c_1, c_2, c_out, max_packet_l })
    }
}

fn check_rate(name: &'static str, value: f64) -> Result<(), BoundsError> {
    if !value.is_finite() || value <= 0.0 {
        return Err(BoundsError::NonPositiveRate { name, value });
    }
    Ok(())
}

fn check_packet_length(value: f64) -> Result<(), BoundsError> {
    if !value.is_finite() || value < 0.0 {
        return Err(BoundsError::InvalidPacketLength(value));
    }
    Ok(())
}

/// A worst-case delay: finite seconds, or unbounded when the element is
/// unstable (offered rate exceeds drain rate, so backlog grows without
/// limit).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DelayBound {
    Finite(f64),
    Unbounded,
}

impl DelayBound {
    /// The bound in seconds, or `None` when unbounded.
    pub fn seconds(self) -> Option<f64> {
        match self {
            Self::Finite(s) => Some(s),
            Self::Unbounded => None,
        }
    }

    pub fn is_unbounded(self) -> bool {
        matches!(self, Self::Unbounded)
    }

    /// The bound expressed in whole cycles of the given duration, rounded
    /// up; `None` when unbounded.
    pub fn cycles(self, cycle_seconds: f64) -> Option<f64> {
        self.seconds().map(|s| (s / cycle_seconds).ceil())
    }
}

impl Add for DelayBound {
    type Output = DelayBound;

    fn add(self, rhs: DelayBound) -> DelayBound {
        match (self, rhs) {
            (Self::Finite(a), Self::Finite(b)) => Self::Finite(a + b),
            _ => Self::Unbounded,
        }
    }
}

impl fmt::Display for DelayBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Finite(s) => write!(f, "{s}"),
            Self::Unbounded => write!(f, "unbounded"),
        }
    }
}

/// Worst-case queue occupancy of a work-conserving FIFO drained at `c_out`,
/// evaluated at time `t` for the concrete arrival trace:
/// the maximum over window starts `s ≤ t` of
/// `arrivals in (s, t] − c_out · (t − s)`, clamped to ≥ 0.
///
/// The maximum over a step arrival function is attained with `s` just before
/// an event (the window then includes that event), so only event times need
/// examining. Times before the first event yield 0.
pub fn backlog(trace: &TrafficTrace, c_out: f64, t: f64) -> Result<f64, BoundsError> {
    check_rate("c_out", c_out)?;
    if !t.is_finite() {
        return Err(BoundsError::NonFiniteTime(t));
    }
    let mut best = 0.0_f64;
    let mut window_bytes = 0.0_f64;
    for ev in trace.events().iter().rev() {
        if ev.time > t {
            continue;
        }
        window_bytes += ev.bytes;
        best = best.max(window_bytes - c_out * (t - ev.time));
    }
    Ok(best)
}

/// Worst-case delay of any bit crossing a FIFO queue that is fed at `c_in`
/// by a flow constrained by `env` and drained at `c_out`:
/// `max(0, (sigma − ((c_out − rho)/c_in) · L) / c_out)` seconds, or
/// [`DelayBound::Unbounded`] when `rho > c_out`.
///
/// The subtracted term credits the arrival time of the packet carrying the
/// delayed bit: while a packet of length `L` streams in at `c_in`, the queue
/// has already drained part of it. The clamp covers small bursts where the
/// formula would go negative — a delay cannot.
pub fn queue_delay_bound(env: &ArrivalEnvelope, server: &ServerSpec) -> DelayBound {
    if env.rho > server.c_out {
        return DelayBound::Unbounded;
    }
    let credit = (server.c_out - env.rho) / server.c_in * server.max_packet_l;
    DelayBound::Finite(((env.sigma - credit) / server.c_out).max(0.0))
}

/// Worst-case delay of any bit of stream 1 crossing a two-input FIFO
/// multiplexer, where stream 1 is constrained by `env1` (arriving over
/// `c_1`) and the competing stream 2 by `env2` (arriving over `c_2`).
///
/// The underlying expression maximizes, over window widths `t ≥ 0`,
/// `[bound1(t) + bound2(t + L/c_2) − c_out · t] / c_out` — stream 2 can
/// additionally have one packet in flight on its link, hence its window is
/// extended by `L/c_2`. With affine envelope bounds the maximand's slope is
/// `rho_1 + rho_2 − c_out ≤ 0` under stability, so the maximum sits at
/// `t = 0`, giving the closed form
/// `(sigma_1 + sigma_2 + rho_2 · L/c_2) / c_out`.
/// Returns [`DelayBound::Unbounded`] when `rho_1 + rho_2 > c_out`.
pub fn mux_delay_bound(
    env1: &ArrivalEnvelope,
    env2: &ArrivalEnvelope,
    mux: &MuxSpec,
) -> DelayBound {
    if env1.rho + env2.rho > mux.c_out {
        return DelayBound::Unbounded;
    }
    let in_flight = env2.rho * mux.max_packet_l / mux.c_2;
    DelayBound::Finite((env1.sigma + env2.sigma + in_flight) / mux.c_out)
}

/// Worst-case delay through one switch element: the flow crosses its input
/// FIFO queue (`server`), then the output multiplexer (`mux`) where it
/// competes with cross traffic `env_cross`. The bound is the sum of the two
/// stage bounds, unbounded if either stage is.
pub fn switch_delay_bound(
    env_flow: &ArrivalEnvelope,
    env_cross: &ArrivalEnvelope,
    server: &ServerSpec,
    mux: &MuxSpec,
) -> DelayBound {
    queue_delay_bound(env_flow, server) + mux_delay_bound(env_flow, env_cross, mux)
}

/// Everything the flow meets at one hop of its route: the switch stages and
/// the cross traffic competing at that switch's output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopSpec {
    pub server: ServerSpec,
    pub mux: MuxSpec,
    pub cross: ArrivalEnvelope,
}

/// Worst-case end-to-end delay of a flow constrained by `env` crossing the
/// given sequence of switches. Per hop, the switch bound is evaluated with
/// the flow's current envelope, then the envelope's burst is inflated by
/// `rho · hop_delay` — a flow delayed that much can bunch up by that many
/// bytes — before the next hop. Unbounded at any hop makes the path
/// unbounded. An empty route has zero delay.
pub fn path_delay_bound(env: &ArrivalEnvelope, hops: &[HopSpec]) -> DelayBound {
    let mut total = 0.0_f64;
    let mut current = *env;
    for hop in hops {
        match switch_delay_bound(&current, &hop.cross, &hop.server, &hop.mux) {
            DelayBound::Finite(d) => {
                total += d;
                current =
                    ArrivalEnvelope { sigma: current.sigma + current.rho * d, rho: current.rho };
            }
            DelayBound::Unbounded => return DelayBound::Unbounded,
        }
    }
    DelayBound::Finite(total)
}

/// Errors from constructing element specifications or evaluating formulas.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundsError {
    NonPositiveRate { name: &'static str, value: f64 },
    InputSlowerThanOutput { input: f64, c_out: f64 },
    InvalidPacketLength(f64),
    NonFiniteTime(f64),
}

impl fmt::Display for BoundsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NonPositiveRate { name, value } => {
                write!(f, "{name} must be finite and > 0, got {value}")
            }
            Self::InputSlowerThanOutput { input, c_out } => write!(
                f,
                "input link rate {input} must be at least the output rate {c_out}"
            ),
            Self::InvalidPacketLength(v) => {
                write!(f, "max packet length must be finite and ≥ 0, got {v}")
            }
            Self::NonFiniteTime(v) => write!(f, "evaluation time must be finite, got {v}"),
        }
    }
}

impl Error for BoundsError {}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::traffic::TraceEvent;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn env(sigma: f64, rho: f64) -> ArrivalEnvelope {
        ArrivalEnvelope::new(sigma, rho).unwrap()
    }

    fn trace(events: &[(f64, f64)]) -> TrafficTrace {
        TrafficTrace::new(events.iter().map(|&(t, b)| TraceEvent::new(t, b)).collect()).unwrap()
    }

    /// Forward discrete-event FIFO drain: queue occupancy at `t`, obtained by
    /// replaying events in order and draining continuously at `c_out`.
    /// Independent of the window-maximum formula it validates.
    fn fifo_occupancy(trace: &TrafficTrace, c_out: f64, t: f64) -> f64 {
        let mut queue = 0.0_f64;
        let mut clock = f64::NEG_INFINITY;
        for ev in trace.events() {
            if ev.time > t {
                break;
            }
            if clock.is_finite() {
                queue = (queue - c_out * (ev.time - clock)).max(0.0);
            }
            queue += ev.bytes;
            clock = ev.time;
        }
        if clock.is_finite() {
            queue = (queue - c_out * (t - clock)).max(0.0);
        }
        queue
    }

    /// Continuous-time record of one packetized stream feeding a FIFO stage:
    /// packet `k` starts arriving at `starts[k]` over a link of rate `c_in`,
    /// each packet `packet_l` bytes long.
    struct PacketStream {
        starts: Vec<f64>,
        c_in: f64,
        packet_l: f64,
    }

    /// Densest packet schedule on a link of rate `c_in` whose fluid arrival
    /// stays within `env`: each packet drains `packet_l · (1 − rho/c_in)`
    /// net from the token bucket (the bucket refills while the packet
    /// streams in), so a packet may start as soon as the link is free and
    /// the bucket holds that much.
    fn greedy_packet_stream(
        env: &ArrivalEnvelope,
        c_in: f64,
        packet_l: f64,
        horizon: f64,
    ) -> PacketStream {
        let net_cost = packet_l * (1.0 - env.rho / c_in);
        assert!(
            env.sigma + 1e-9 >= net_cost,
            "burst must admit one packet (sigma {} < net cost {})",
            env.sigma,
            net_cost
        );
        let mut starts = Vec::new();
        let mut bucket = env.sigma;
        let mut t = 0.0_f64;
        while t <= horizon && starts.len() < 200_000 {
            if bucket + 1e-9 < net_cost {
                if env.rho <= 0.0 {
                    break;
                }
                t += (net_cost - bucket) / env.rho;
                bucket = net_cost;
            }
            starts.push(t);
            // Net of the refill accrued during this packet's own transmission.
            bucket -= net_cost;
            t += packet_l / c_in;
        }
        PacketStream { starts, c_in, packet_l }
    }

    /// Worst per-bit delay of a packet stream crossing a work-conserving
    /// FIFO drained at `c_out` (cut-through: a bit can leave as soon as it
    /// arrived and all earlier bits left). Returns the maximum over packets
    /// of `(service_begin − packet_start) + L·(1/c_out − 1/c_in)` — the last
    /// bit of a packet is always the worst off.
    fn max_bit_delay_fifo(stream: &PacketStream, c_out: f64) -> f64 {
        let mut worst = 0.0_f64;
        let mut prev_finish = f64::NEG_INFINITY;
        for &s in &stream.starts {
            let begin = s.max(prev_finish);
            prev_finish = begin + stream.packet_l / c_out;
            let last_bit = (begin - s) + stream.packet_l * (1.0 / c_out - 1.0 / stream.c_in);
            worst = worst.max(last_bit);
        }
        worst
    }

    /// Worst per-bit delay of stream 1 through a two-input FIFO multiplexer
    /// drained at `c_out`. Packets from both streams are served whole, in
    /// order of the instant their first bit reached the multiplexer; ties go
    /// to the competing stream (adversarial for stream 1).
    fn max_bit_delay_mux(stream1: &PacketStream, stream2: &PacketStream, c_out: f64) -> f64 {
        #[derive(Clone, Copy)]
        struct Arrival {
            start: f64,
            c_in: f64,
            packet_l: f64,
            measured: bool,
        }
        let mut arrivals: Vec<Arrival> = stream1
            .starts
            .iter()
            .map(|&start| Arrival {
                start,
                c_in: stream1.c_in,
                packet_l: stream1.packet_l,
                measured: true,
            })
            .chain(stream2.starts.iter().map(|&start| Arrival {
                start,
                c_in: stream2.c_in,
                packet_l: stream2.packet_l,
                measured: false,
            }))
            .collect();
        arrivals.sort_by(|a, b| {
            a.start
                .partial_cmp(&b.start)
                .unwrap()
                .then_with(|| a.measured.cmp(&b.measured))
        });
        let mut worst = 0.0_f64;
        let mut prev_finish = f64::NEG_INFINITY;
        for a in arrivals {
            let begin = a.start.max(prev_finish);
            prev_finish = begin + a.packet_l / c_out;
            if a.measured {
                let last_bit = (begin - a.start) + a.packet_l * (1.0 / c_out - 1.0 / a.c_in);
                worst = worst.max(last_bit);
            }
        }
        worst
    }

    #[test]
    fn backlog_of_empty_trace_is_zero() {
        let t = TrafficTrace::empty();
        assert_eq!(backlog(&t, 5.0, 0.0).unwrap(), 0.0);
        assert_eq!(backlog(&t, 5.0, 100.0).unwrap(), 0.0);
    }

    #[test]
    fn backlog_single_event_drains_linearly() {
        let t = trace(&[(0.0, 10.0)]);
        assert_eq!(backlog(&t, 5.0, 1.0).unwrap(), 5.0);
        assert_eq!(backlog(&t, 5.0, 0.0).unwrap(), 10.0);
        assert_eq!(backlog(&t, 5.0, 2.0).unwrap(), 0.0);
        assert_eq!(backlog(&t, 5.0, 3.0).unwrap(), 0.0);
        assert_eq!(backlog(&t, 5.0, -1.0).unwrap(), 0.0);
    }

    #[test]
    fn backlog_rejects_bad_arguments() {
        let t = trace(&[(0.0, 1.0)]);
        assert!(matches!(
            backlog(&t, 0.0, 1.0),
            Err(BoundsError::NonPositiveRate { name: "c_out", .. })
        ));
        assert!(matches!(
            backlog(&t, 1.0, f64::NAN),
            Err(BoundsError::NonFiniteTime(_))
        ));
    }

    #[test]
    fn backlog_matches_fifo_drain_on_random_conformant_traces() {
        let mut rng = StdRng::seed_from_u64(0x5EED_B10C);
        for _ in 0..200 {
            let sigma = rng.random_range(1.0..200.0);
            let rho = rng.random_range(0.0..50.0);
            let envelope = env(sigma, rho);
            let source = crate::traffic::greedy_source(&envelope, 5.0, rng.random_range(1.0..8.0));
            let source = match source {
                Ok(s) if !s.is_empty() => s,
                _ => continue,
            };
            let c_out = rng.random_range(1.0..80.0);
            let last = source.events().last().unwrap().time;
            for _ in 0..20 {
                let t = rng.random_range(-0.5..last + 3.0);
                let direct = backlog(&source, c_out, t).unwrap();
                let simulated = fifo_occupancy(&source, c_out, t);
                assert!(
                    (direct - simulated).abs() <= 1e-9 * simulated.max(1.0),
                    "backlog {direct} vs drain sim {simulated} at t={t}"
                );
            }
        }
    }

    #[test]
    fn backlog_empties_after_sufficient_idle() {
        // Long-run rate below c_out: after sigma/(c_out - rho) of idle past
        // the last burst the queue must be empty.
        let envelope = env(40.0, 10.0);
        let source = crate::traffic::greedy_source(&envelope, 3.0, 5.0).unwrap();
        let c_out = 25.0;
        let last = source.events().last().unwrap().time;
        let settle = envelope.sigma / (c_out - envelope.rho);
        assert_eq!(backlog(&source, c_out, last + settle + 1e-6).unwrap(), 0.0);
    }

    #[test]
    fn queue_bound_reduces_to_sigma_over_c_when_packets_are_zero_length() {
        let server = ServerSpec::new(100.0, 100.0, 0.0).unwrap();
        let bound = queue_delay_bound(&env(100.0, 50.0), &server);
        assert_eq!(bound, DelayBound::Finite(1.0));
    }

    #[test]
    fn queue_bound_unbounded_exactly_when_rate_exceeds_drain() {
        let server = ServerSpec::new(100.0, 100.0, 10.0).unwrap();
        assert!(queue_delay_bound(&env(10.0, 100.1), &server).is_unbounded());
        assert!(!queue_delay_bound(&env(10.0, 100.0), &server).is_unbounded());
    }

    #[test]
    fn queue_bound_clamps_negative_formula_values_to_zero() {
        // Tiny burst, large packet: the arrival-time credit exceeds sigma.
        let server = ServerSpec::new(200.0, 100.0, 400.0).unwrap();
        let bound = queue_delay_bound(&env(1.0, 10.0), &server);
        assert_eq!(bound, DelayBound::Finite(0.0));
    }

    #[test]
    fn server_and_mux_specs_reject_inverted_rates() {
        assert!(matches!(
            ServerSpec::new(50.0, 100.0, 0.0),
            Err(BoundsError::InputSlowerThanOutput { .. })
        ));
        assert!(matches!(
            ServerSpec::new(100.0, 0.0, 0.0),
            Err(BoundsError::NonPositiveRate { .. })
        ));
        assert!(matches!(
            MuxSpec::new(100.0, 50.0, 80.0, 0.0),
            Err(BoundsError::InputSlowerThanOutput { .. })
        ));
        assert!(matches!(
            ServerSpec::new(100.0, 100.0, -1.0),
            Err(BoundsError::InvalidPacketLength(_))
        ));
    }

    #[test]
    fn mux_bound_zero_for_empty_bursts_and_zero_packets() {
        let mux = MuxSpec::new(100.0, 100.0, 100.0, 0.0).unwrap();
        let bound = mux_delay_bound(&env(0.0, 30.0), &env(0.0, 40.0), &mux);
        assert_eq!(bound, DelayBound::Finite(0.0));
    }

    #[test]
    fn mux_bound_unbounded_exactly_when_rate_sum_exceeds_output() {
        let mux = MuxSpec::new(100.0, 100.0, 100.0, 10.0).unwrap();
        assert!(mux_delay_bound(&env(1.0, 60.0), &env(1.0, 41.0), &mux).is_unbounded());
        assert!(!mux_delay_bound(&env(1.0, 60.0), &env(1.0, 40.0), &mux).is_unbounded());
    }

    #[test]
    fn mux_closed_form_matches_numeric_window_maximization() {
        let mut rng = StdRng::seed_from_u64(0xC0FFEE);
        for _ in 0..300 {
            let c_out = rng.random_range(1.0..100.0);
            let c_1 = c_out * rng.random_range(1.0..3.0);
            let c_2 = c_out * rng.random_range(1.0..3.0);
            let l = rng.random_range(0.0..100.0);
            let mux = MuxSpec::new(c_1, c_2, c_out, l).unwrap();
            let rho_1 = rng.random_range(0.0..0.6) * c_out;
            let rho_2 = rng.random_range(0.0..(1.0 - rho_1 / c_out)) * c_out;
            let e1 = env(rng.random_range(0.0..500.0), rho_1);
            let e2 = env(rng.random_range(0.0..500.0), rho_2);
            let closed = mux_delay_bound(&e1, &e2, &mux).seconds().unwrap();
            // Direct grid maximization of the defining expression.
            let horizon = 4.0 * (e1.sigma + e2.sigma + l) / c_out + 1.0;
            let mut numeric = 0.0_f64;
            for i in 0..=20_000 {
                let t = horizon * i as f64 / 20_000.0;
                let window = e1.bound(t).unwrap() + e2.bound(t + l / c_2).unwrap() - c_out * t;
                numeric = numeric.max(window / c_out);
            }
            assert!(
                (closed - numeric).abs() <= 1e-6 * numeric.max(1e-9),
                "closed form {closed} vs numeric {numeric}"
            );
        }
    }

    #[test]
    fn switch_bound_sums_its_stages() {
        let server = ServerSpec::new(100.0, 100.0, 0.0).unwrap();
        let mux = MuxSpec::new(200.0, 200.0, 200.0, 0.0).unwrap();
        let flow = env(20.0, 50.0);
        let cross = env(40.0, 50.0);
        // Queue stage: 20/100 = 0.2 s; mux stage: (20+40)/200 = 0.3 s.
        assert_eq!(
            switch_delay_bound(&flow, &cross, &server, &mux),
            DelayBound::Finite(0.5)
        );
        let zero = env(0.0, 0.0);
        let server0 = ServerSpec::new(100.0, 100.0, 0.0).unwrap();
        let mux0 = MuxSpec::new(100.0, 100.0, 100.0, 0.0).unwrap();
        assert_eq!(
            switch_delay_bound(&zero, &zero, &server0, &mux0),
            DelayBound::Finite(0.0)
        );
    }

    #[test]
    fn switch_bound_unbounded_if_either_stage_is() {
        let server = ServerSpec::new(100.0, 100.0, 0.0).unwrap();
        let mux = MuxSpec::new(100.0, 100.0, 100.0, 0.0).unwrap();
        // Queue stable, mux overloaded by cross traffic.
        let bound = switch_delay_bound(&env(1.0, 60.0), &env(1.0, 50.0), &server, &mux);
        assert!(bound.is_unbounded());
    }

    #[test]
    fn single_hop_path_equals_switch_bound() {
        let hop = HopSpec {
            server: ServerSpec::new(150.0, 100.0, 20.0).unwrap(),
            mux: MuxSpec::new(100.0, 120.0, 100.0, 20.0).unwrap(),
            cross: env(30.0, 25.0),
        };
        let flow = env(50.0, 40.0);
        assert_eq!(
            path_delay_bound(&flow, &[hop]),
            switch_delay_bound(&flow, &hop.cross, &hop.server, &hop.mux)
        );
        assert_eq!(path_delay_bound(&flow, &[]), DelayBound::Finite(0.0));
    }

    #[test]
    fn path_bound_inflates_burst_between_hops() {
        let hop = HopSpec {
            server: ServerSpec::new(100.0, 100.0, 0.0).unwrap(),
            mux: MuxSpec::new(100.0, 100.0, 100.0, 0.0).unwrap(),
            cross: env(0.0, 0.0),
        };
        let flow = env(50.0, 20.0);
        // Hop 1: (50/100) + (50/100) = 1.0 s; the burst then grows to
        // 50 + 20·1.0 = 70, so hop 2 contributes 1.4 s.
        let total = path_delay_bound(&flow, &[hop, hop]).seconds().unwrap();
        assert!((total - 2.4).abs() < 1e-12);
    }

    #[test]
    fn unloaded_zero_burst_path_is_twice_the_single_hop_bound() {
        let hop = HopSpec {
            server: ServerSpec::new(200.0, 100.0, 40.0).unwrap(),
            mux: MuxSpec::new(100.0, 100.0, 100.0, 40.0).unwrap(),
            cross: env(0.0, 0.0),
        };
        let flow = env(0.0, 30.0);
        let single = switch_delay_bound(&flow, &hop.cross, &hop.server, &hop.mux)
            .seconds()
            .unwrap();
        // A zero-burst flow has a zero hop bound, so the burst inflation
        // sigma + rho·d leaves the envelope unchanged and the second hop
        // repeats the first exactly.
        assert_eq!(single, 0.0);
        let double = path_delay_bound(&flow, &[hop, hop]).seconds().unwrap();
        assert_eq!(double, 2.0 * single);
    }

    #[test]
    fn unbounded_propagates_through_paths() {
        let stable = HopSpec {
            server: ServerSpec::new(100.0, 100.0, 0.0).unwrap(),
            mux: MuxSpec::new(100.0, 100.0, 100.0, 0.0).unwrap(),
            cross: env(0.0, 0.0),
        };
        let overloaded = HopSpec { cross: env(0.0, 80.0), ..stable };
        let flow = env(10.0, 30.0);
        assert!(path_delay_bound(&flow, &[stable, overloaded]).is_unbounded());
    }

    #[test]
    fn greedy_packet_traffic_never_exceeds_queue_bound() {
        let mut rng = StdRng::seed_from_u64(0xFEED_F1F0);
        for case in 0..60 {
            let c_out = rng.random_range(1.0..100.0);
            let c_in = c_out * rng.random_range(1.0..3.0);
            let rho = rng.random_range(0.05..0.95) * c_out;
            let l = rng.random_range(1.0..50.0);
            let sigma = l + rng.random_range(0.0..200.0);
            let envelope = env(sigma, rho);
            let server = ServerSpec::new(c_in, c_out, l).unwrap();
            let bound = queue_delay_bound(&envelope, &server).seconds().unwrap();
            let horizon = 2.0 * sigma / (c_out - rho) + 10.0 * l / c_out;
            let stream = greedy_packet_stream(&envelope, c_in, l, horizon);
            let observed = max_bit_delay_fifo(&stream, c_out);
            let quantum = 1.0 / c_out;
            assert!(
                observed <= bound + quantum + 1e-9 * bound.max(1.0),
                "case {case}: observed {observed} > bound {bound} + quantum {quantum}"
            );
        }
    }

    #[test]
    fn greedy_pair_never_exceeds_mux_bound() {
        let mut rng = StdRng::seed_from_u64(0xAB5EED);
        for case in 0..60 {
            let c_out = rng.random_range(1.0..100.0);
            let c_1 = c_out * rng.random_range(1.0..3.0);
            let c_2 = c_out * rng.random_range(1.0..3.0);
            let l = rng.random_range(1.0..50.0);
            let rho_1 = rng.random_range(0.05..0.55) * c_out;
            let rho_2 = rng.random_range(0.05..(0.98 - rho_1 / c_out)) * c_out;
            let sigma_1 = l + rng.random_range(0.0..150.0);
            let sigma_2 = l + rng.random_range(0.0..150.0);
            let e1 = env(sigma_1, rho_1);
            let e2 = env(sigma_2, rho_2);
            let mux = MuxSpec::new(c_1, c_2, c_out, l).unwrap();
            let bound = mux_delay_bound(&e1, &e2, &mux).seconds().unwrap();
            let horizon = 2.0 * (sigma_1 + sigma_2) / (c_out - rho_1 - rho_2).max(0.05 * c_out)
                + 10.0 * l / c_out;
            let s1 = greedy_packet_stream(&e1, c_1, l, horizon);
            let s2 = greedy_packet_stream(&e2, c_2, l, horizon);
            let observed = max_bit_delay_mux(&s1, &s2, c_out);
            let quantum = 1.0 / c_out;
            assert!(
                observed <= bound + quantum + 1e-9 * bound.max(1.0),
                "case {case}: observed {observed} > bound {bound} + quantum {quantum}"
            );
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn unbounded_iff_unstable_queue(sigma in 0.0f64..1e4,
                                            rho in 0.0f64..200.0,
                                            c_out in 1.0f64..100.0,
                                            l in 0.0f64..100.0) {
                let server = ServerSpec::new(c_out * 2.0, c_out, l).unwrap();
                let bound = queue_delay_bound(&env(sigma, rho), &server);
                prop_assert_eq!(bound.is_unbounded(), rho > c_out);
            }

            #[test]
            fn unbounded_iff_unstable_mux(s1 in 0.0f64..1e3, r1 in 0.0f64..120.0,
                                          s2 in 0.0f64..1e3, r2 in 0.0f64..120.0,
                                          c_out in 1.0f64..100.0, l in 0.0f64..50.0) {
                let mux = MuxSpec::new(c_out * 1.5, c_out * 1.5, c_out, l).unwrap();
                let bound = mux_delay_bound(&env(s1, r1), &env(s2, r2), &mux);
                prop_assert_eq!(bound.is_unbounded(), r1 + r2 > c_out);
            }

            #[test]
            fn queue_bound_monotone_in_burst_and_rate(
                sigma in 0.0f64..1e3, d_sigma in 0.0f64..1e3,
                rho in 0.0f64..80.0, d_rho in 0.0f64..80.0,
                c_out in 1.0f64..100.0, l in 0.0f64..100.0,
            ) {
                let server = ServerSpec::new(c_out * 2.0, c_out, l).unwrap();
                let base = queue_delay_bound(&env(sigma, rho), &server);
                let more_burst = queue_delay_bound(&env(sigma + d_sigma, rho), &server);
                let more_rate = queue_delay_bound(&env(sigma, rho + d_rho), &server);
                // Unbounded dominates every finite value.
                let le = |a: DelayBound, b: DelayBound| match (a, b) {
                    (_, DelayBound::Unbounded) => true,
                    (DelayBound::Unbounded, _) => false,
                    (DelayBound::Finite(x), DelayBound::Finite(y)) => x <= y + 1e-12,
                };
                prop_assert!(le(base, more_burst));
                prop_assert!(le(base, more_rate));
            }

            #[test]
            fn queue_bound_antitone_in_drain_rate(
                sigma in 0.0f64..1e3, rho in 0.0f64..50.0,
                c_out in 1.0f64..100.0, extra in 0.0f64..100.0,
                l in 0.0f64..100.0,
            ) {
                let slow = ServerSpec::new(400.0, c_out, l).unwrap();
                let fast = ServerSpec::new(400.0, c_out + extra, l).unwrap();
                let e = env(sigma, rho);
                match (queue_delay_bound(&e, &slow), queue_delay_bound(&e, &fast)) {
                    (DelayBound::Unbounded, _) => {}
                    (DelayBound::Finite(_), DelayBound::Unbounded) => {
                        prop_assert!(false, "faster drain cannot lose stability")
                    }
                    (DelayBound::Finite(a), DelayBound::Finite(b)) => {
                        prop_assert!(b <= a + 1e-12)
                    }
                }
            }

            #[test]
            fn mux_bound_monotone_in_bursts(
                s1 in 0.0f64..1e3, s2 in 0.0f64..1e3, extra in 0.0f64..1e3,
                r1 in 0.0f64..40.0, r2 in 0.0f64..40.0,
                c_out in 90.0f64..150.0, l in 0.0f64..50.0,
            ) {
                let mux = MuxSpec::new(c_out * 1.2, c_out * 1.2, c_out, l).unwrap();
                let base = mux_delay_bound(&env(s1, r1), &env(s2, r2), &mux).seconds().unwrap();
                let b1 = mux_delay_bound(&env(s1 + extra, r1), &env(s2, r2), &mux).seconds().unwrap();
                let b2 = mux_delay_bound(&env(s1, r1), &env(s2 + extra, r2), &mux).seconds().unwrap();
                prop_assert!(base <= b1 + 1e-12);
                prop_assert!(base <= b2 + 1e-12);
            }

            #[test]
            fn backlog_never_negative(times in proptest::collection::vec(0.0f64..50.0, 1..30),
                                      c_out in 0.5f64..50.0,
                                      t in -5.0f64..60.0) {
                let mut sorted = times.clone();
                sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let tr = TrafficTrace::new(
                    sorted.into_iter().map(|time| TraceEvent::new(time, 2.5)).collect(),
                ).unwrap();
                prop_assert!(backlog(&tr, c_out, t).unwrap() >= 0.0);
            }
        }
    }
}

//! Token-bucket traffic characterization.
//!
//! Traffic is modeled as a sequence of timestamped byte arrivals
//! ([`TrafficTrace`]). An [`ArrivalEnvelope`] `(sigma, rho)` constrains a
//! stream: any window of width `t` seconds may carry at most
//! `sigma + rho * t` bytes — `sigma` caps the instantaneous burst, `rho` the
//! sustained rate. The module provides:
//!
//! * [`conforms`] — does a trace respect an envelope? Implemented as a
//!   single-pass bucket recursion, which is equivalent to checking every
//!   window whose endpoints are event times (cumulative arrivals are step
//!   functions, so those windows are the binding ones).
//! * [`LeakyBucketShaper`] — delays (never drops) arrivals so the output
//!   respects the envelope, releasing backlog in byte-sized chunks.
//! * [`greedy_source`] — the adversarial source that meets an envelope with
//!   equality at every event instant; used to stress worst-case bounds.
//!
//! Comparisons against the envelope use a relative tolerance
//! ([`conformance_slack`]) so that traffic constructed to sit exactly on the
//! envelope boundary is not misjudged over f64 rounding. The tolerance is
//! orders of magnitude below one byte at the scales this crate works at.

use std::error::Error;
use std::fmt;
use std::io;

/// Relative tolerance applied when comparing byte totals against envelope
/// bounds; scaled by the largest bound value examined, floored at one.
const REL_TOLERANCE: f64 = 1e-9;

/// Backlogged bytes leave the shaper in chunks of at most this many bytes.
const RELEASE_QUANTUM: f64 = 1.0;

/// A `(sigma, rho)` traffic constraint: at most `sigma + rho * t` bytes in
/// any window of width `t` seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrivalEnvelope {
    /// Burst allowance in bytes.
    pub sigma: f64,
    /// Sustained rate in bytes per second.
    pub rho: f64,
}

impl ArrivalEnvelope {
    /// Builds an envelope, rejecting negative or non-finite components.
    pub fn new(sigma: f64, rho: f64) -> Result<Self, TrafficError> {
        if !sigma.is_finite() || sigma < 0.0 {
            return Err(TrafficError::InvalidSigma(sigma));
        }
        if !rho.is_finite() || rho < 0.0 {
            return Err(TrafficError::InvalidRho(rho));
        }
        Ok(Self { sigma, rho })
    }

    /// Maximum bytes admissible in a window of width `dt` seconds:
    /// `sigma + rho * dt`. Negative widths are rejected, not clamped.
    pub fn bound(&self, dt: f64) -> Result<f64, TrafficError> {
        if !dt.is_finite() || dt < 0.0 {
            return Err(TrafficError::NegativeWindow(dt));
        }
        Ok(self.sigma + self.rho * dt)
    }

    /// Pools several envelopes into the envelope of their superposition:
    /// bursts and rates add componentwise.
    pub fn aggregate<'a>(envelopes: impl IntoIterator<Item = &'a ArrivalEnvelope>) -> Self {
        let (mut sigma, mut rho) = (0.0, 0.0);
        for env in envelopes {
            sigma += env.sigma;
            rho += env.rho;
        }
        Self { sigma, rho }
    }
}

/// One arrival: `bytes` data crossing the reference point at `time` seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEvent {
    pub time: f64,
    pub bytes: f64,
}

impl TraceEvent {
    pub fn new(time: f64, bytes: f64) -> Self {
        Self { time, bytes }
    }
}

/// An ordered sequence of byte arrivals. Event times are nondecreasing and
/// every event carries strictly positive bytes; the cumulative arrival
/// function is therefore a nondecreasing step function starting at zero.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrafficTrace {
    events: Vec<TraceEvent>,
}

impl TrafficTrace {
    /// Validates and wraps an event list.
    pub fn new(events: Vec<TraceEvent>) -> Result<Self, TrafficError> {
        for (index, ev) in events.iter().enumerate() {
            if !ev.time.is_finite() || !ev.bytes.is_finite() {
                return Err(TrafficError::NonFiniteEvent { index });
            }
            if ev.bytes <= 0.0 {
                return Err(TrafficError::NonPositiveAmount { index });
            }
            if index > 0 && ev.time < events[index - 1].time {
                return Err(TrafficError::UnorderedEvents { index });
            }
        }
        Ok(Self { events })
    }

    /// The trace with no arrivals.
    pub fn empty() -> Self {
        Self { events: Vec::new() }
    }

    pub fn events(&self) -> &[TraceEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Sum of all event bytes.
    pub fn total_bytes(&self) -> f64 {
        self.events.iter().map(|e| e.bytes).sum()
    }

    /// Width of the interval covered by events (0 for fewer than two events).
    pub fn span(&self) -> f64 {
        match (self.events.first(), self.events.last()) {
            (Some(first), Some(last)) => last.time - first.time,
            _ => 0.0,
        }
    }

    /// Writes the trace as CSV with header `time_s,bytes`.
    pub fn to_csv<W: io::Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "time_s,bytes")?;
        for ev in &self.events {
            writeln!(w, "{},{}", ev.time, ev.bytes)?;
        }
        Ok(())
    }

    /// Parses a trace from CSV previously written by [`Self::to_csv`].
    pub fn from_csv<R: io::BufRead>(r: R) -> Result<Self, TrafficError> {
        let mut events = Vec::new();
        let mut lines = r.lines().enumerate();
        match lines.next() {
            Some((_, Ok(header))) if header.trim_end() == "time_s,bytes" => {}
            Some((_, Ok(header))) => {
                return Err(TrafficError::MalformedCsv {
                    line: 1,
                    reason: format!(
                        "expected header `time_s,bytes`, found `{}`",
                        header.trim_end()
                    ),
                })
            }
            Some((_, Err(e))) => {
                return Err(TrafficError::MalformedCsv { line: 1, reason: e.to_string() })
            }
            None => {
                return Err(TrafficError::MalformedCsv { line: 1, reason: "empty input".into() })
            }
        }
        for (idx, line) in lines {
            let line = line
                .map_err(|e| TrafficError::MalformedCsv { line: idx + 1, reason: e.to_string() })?;
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let (time, bytes) = match (fields.next(), fields.next(), fields.next()) {
                (Some(t), Some(b), None) => (t, b),
                _ => {
                    return Err(TrafficError::MalformedCsv {
                        line: idx + 1,
                        reason: "expected exactly two comma-separated fields".into(),
                    })
                }
            };
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| TrafficError::MalformedCsv {
                        line: idx + 1,
                        reason: format!("`{}`: {}", s.trim(), e),
                    })
            };
            events.push(TraceEvent::new(parse(time)?, parse(bytes)?));
        }
        Self::new(events)
    }
}

/// Comparison slack for envelope checks over a trace covering `span`
/// seconds: relative to the largest window bound the check can examine.
fn conformance_slack(env: &ArrivalEnvelope, span: f64) -> f64 {
    REL_TOLERANCE * (env.sigma + env.rho * span).max(1.0)
}

/// True iff every window `[x, y]` of the trace carries at most
/// `sigma + rho * (y - x)` bytes (non-strict).
///
/// Single pass: a virtual bucket of depth `sigma` fills with each arrival and
/// drains at `rho`; the trace conforms exactly when the bucket never
/// overflows. The running bucket level equals the largest window excess
/// ending at the current event, so this is equivalent to enumerating all
/// event-aligned windows.
pub fn conforms(trace: &TrafficTrace, env: &ArrivalEnvelope) -> bool {
    let events = trace.events();
    if events.is_empty() {
        return true;
    }
    let eps = conformance_slack(env, trace.span());
    let mut level = 0.0_f64;
    let mut last_time = events[0].time;
    for ev in events {
        level = (level - env.rho * (ev.time - last_time)).max(0.0) + ev.bytes;
        last_time = ev.time;
        if level > env.sigma + eps {
            return false;
        }
    }
    true
}

/// Delays arrivals as needed so the output respects a `(sigma, rho)`
/// envelope. Bytes are never dropped: whatever cannot leave immediately is
/// queued (FCFS) and released in chunks of at most [`RELEASE_QUANTUM`] bytes
/// as the bucket drains room for them.
///
/// The shaper is a stateful streaming device: bucket level and clock persist
/// across [`shape`](Self::shape) calls, so consecutive traces continue one
/// timeline. With `rho = 0` the bucket never drains, so input beyond the
/// burst allowance stays queued indefinitely and is reported by
/// [`pending`](Self::pending) rather than released.
#[derive(Debug, Clone)]
pub struct LeakyBucketShaper {
    envelope: ArrivalEnvelope,
    /// Bytes of released burst currently counted against the bucket.
    /// Stays within `max(sigma, RELEASE_QUANTUM)`; above `sigma` only in the
    /// degenerate `sigma < RELEASE_QUANTUM` regime where chunked release
    /// approximates the fluid limit.
    bucket_level: f64,
    /// Shaper clock: time of the latest bucket update, seconds.
    last_update: f64,
    /// Admitted bytes not yet released.
    pending: f64,
}

impl LeakyBucketShaper {
    pub fn new(envelope: ArrivalEnvelope) -> Self {
        Self { envelope, bucket_level: 0.0, last_update: 0.0, pending: 0.0 }
    }

    pub fn envelope(&self) -> &ArrivalEnvelope {
        &self.envelope
    }

    /// Bytes admitted but not yet released (nonzero after `shape` only when
    /// `rho = 0` leaves them unreleasable).
    pub fn pending(&self) -> f64 {
        self.pending
    }

    /// Chunk size for backlog release: a chunk must fit the bucket whole, so
    /// it never exceeds `sigma` when `sigma > 0`.
    fn quantum(&self) -> f64 {
        if self.envelope.sigma > 0.0 {
            RELEASE_QUANTUM.min(self.envelope.sigma)
        } else {
            RELEASE_QUANTUM
        }
    }

    /// Drains the bucket up to `time` (never rewinds the clock).
    fn advance_to(&mut self, time: f64) {
        let dt = time - self.last_update;
        if dt > 0.0 {
            self.bucket_level = (self.bucket_level - self.envelope.rho * dt).max(0.0);
            self.last_update = time;
        }
    }

    /// Releases queued chunks whose release instants are ≤ `until`;
    /// with `until = ∞` this flushes the whole queue (requires `rho > 0`).
    fn release_pending(&mut self, until: f64, out: &mut Vec<TraceEvent>) {
        let rho = self.envelope.rho;
        if rho <= 0.0 {
            return;
        }
        while self.pending > 0.0 {
            let chunk = self.quantum().min(self.pending);
            // The bucket must drain to this level before the chunk fits.
            let target = (self.envelope.sigma - chunk).max(0.0);
            let wait = ((self.bucket_level - target) / rho).max(0.0);
            let release_at = self.last_update + wait;
            if release_at > until {
                break;
            }
            self.advance_to(release_at);
            self.bucket_level = (self.bucket_level + chunk).min(target + chunk);
            self.pending -= chunk;
            out.push(TraceEvent::new(release_at, chunk));
        }
    }

    /// Shapes `input` onto the envelope. Every admitted byte leaves at a time
    /// ≥ its arrival time, in FCFS order, and (for `rho > 0`) the release of
    /// queued backlog extends past the last input event until the queue is
    /// empty. The output conforms to the envelope whenever `sigma` admits at
    /// least one release chunk; a zero-burst envelope admits no
    /// instantaneous events at all, so its chunked output conforms to the
    /// envelope relaxed by one chunk ([`RELEASE_QUANTUM`]).
    pub fn shape(&mut self, input: &TrafficTrace) -> TrafficTrace {
        let mut out = Vec::with_capacity(input.len());
        for ev in input.events() {
            // A trace starting before the shaper clock is aligned forward.
            let t = ev.time.max(self.last_update);
            self.release_pending(t, &mut out);
            self.advance_to(t);
            if self.pending > 0.0 {
                // Earlier bytes are still queued; joining the queue keeps FCFS.
                self.pending += ev.bytes;
                continue;
            }
            let eps = REL_TOLERANCE * self.envelope.sigma.max(1.0);
            let room = (self.envelope.sigma - self.bucket_level).max(0.0);
            let released = if ev.bytes <= room + eps {
                ev.bytes
            } else if room > eps {
                room
            } else {
                0.0
            };
            if released > 0.0 {
                self.bucket_level =
                    (self.bucket_level + released).min(self.envelope.sigma.max(released));
                out.push(TraceEvent::new(t, released));
            }
            self.pending += ev.bytes - released;
        }
        self.release_pending(f64::INFINITY, &mut out);
        TrafficTrace::new(out).expect("shaper output is ordered with positive amounts")
    }
}

/// Worst-case source for an envelope: the full burst `sigma` at `t = 0`,
/// then chunked events at exactly rate `rho` while `t ≤ duration`. The
/// output always conforms, and it meets the envelope with equality at every
/// event instant, so adding a single byte at `t = 0` breaks conformance.
///
/// A discrete event larger than `sigma` would overflow the bucket at its own
/// instant, so the chunk size is `min(granularity, sigma)`. In particular a
/// zero-burst envelope admits no instantaneous arrivals at all: its densest
/// conformant event realization is the empty trace.
pub fn greedy_source(
    env: &ArrivalEnvelope,
    duration: f64,
    granularity: f64,
) -> Result<TrafficTrace, TrafficError> {
    if !duration.is_finite() || duration <= 0.0 {
        return Err(TrafficError::NonPositiveDuration(duration));
    }
    if !granularity.is_finite() || granularity <= 0.0 {
        return Err(TrafficError::NonPositiveGranularity(granularity));
    }
    let mut events = Vec::new();
    if env.sigma > 0.0 {
        events.push(TraceEvent::new(0.0, env.sigma));
        if env.rho > 0.0 {
            let chunk = granularity.min(env.sigma);
            // Tiny slack so an exact multiple of the event spacing is kept.
            let count = (duration * env.rho / chunk + 1e-9).floor() as u64;
            events.reserve(count as usize);
            for k in 1..=count {
                events.push(TraceEvent::new(k as f64 * chunk / env.rho, chunk));
            }
        }
    }
    TrafficTrace::new(events)
}

/// Errors from traffic construction, evaluation, and parsing.
#[derive(Debug, Clone, PartialEq)]
pub enum TrafficError {
    InvalidSigma(f64),
    InvalidRho(f64),
    NegativeWindow(f64),
    NonFiniteEvent { index: usize },
    NonPositiveAmount { index: usize },
    UnorderedEvents { index: usize },
    NonPositiveDuration(f64),
    NonPositiveGranularity(f64),
    MalformedCsv { line: usize, reason: String },
}

impl fmt::Display for TrafficError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InvalidSigma(v) => write!(f, "sigma must be finite and ≥ 0, got {v}"),
            Self::InvalidRho(v) => write!(f, "rho must be finite and ≥ 0, got {v}"),
            Self::NegativeWindow(v) => {
                write!(f, "window width must be finite and ≥ 0, got {v}")
            }
            Self::NonFiniteEvent { index } => {
                write!(f, "event {index} has a non-finite time or byte count")
            }
            Self::NonPositiveAmount { index } => {
                write!(f, "event {index} must carry strictly positive bytes")
            }
            Self::UnorderedEvents { index } => {
                write!(f, "event {index} is earlier than its predecessor")
            }
            Self::NonPositiveDuration(v) => {
                write!(f, "duration must be finite and > 0, got {v}")
            }
            Self::NonPositiveGranularity(v) => {
                write!(f, "granularity must be finite and > 0, got {v}")
            }
            Self::MalformedCsv { line, reason } => {
                write!(f, "malformed trace CSV at line {line}: {reason}")
            }
        }
    }
}

impl Error for TrafficError {}

//! Analysis toolkit for mesh Networks-on-Chip.
//!
//! Four layers build on each other:
//!
//! * [`traffic`] — token-bucket traffic characterization: `(σ, ρ)` arrival
//!   envelopes, timestamped byte traces, conformance checking, leaky-bucket
//!   shaping, and a worst-case greedy source.
//! * [`bounds`] — deterministic worst-case delay and backlog bounds for such
//!   traffic through FIFO rate servers and two-input FIFO multiplexers,
//!   composed per switch and along multi-hop routes.
//! * [`sim`] — a cycle-based, flit-level mesh simulator (XY routing,
//!   input-queued switches, drop-on-full buffers) that measures end-to-end
//!   delay and loss, used to validate the analytic bounds empirically.
//! * [`qos`] — min-max normalization of swept performance parameters and
//!   their prioritization-weighted aggregation into a single score.

pub mod bounds;
pub mod qos;
pub mod sim;
pub mod traffic;

//! Cycle-accurate flit-level simulation of a rectangular mesh
//! network-on-chip.
//!
//! The mesh is an `n × n` grid of switches, each with five ports — `Local`
//! (the attached resource), `North`, `East`, `South`, `West` — and one input
//! FIFO per port. Packets are split into fixed-size flits; one flit crosses
//! one link per cycle. Routing is deterministic dimension-ordered XY: a
//! packet first travels along its row to the destination column, then along
//! that column, then exits through `Local` ([`route_xy`]).
//!
//! Each application source is paced by a token bucket so its offered traffic
//! respects the flow's arrival envelope, with packet generation randomized
//! by a per-flow deterministic RNG ([`run`] is bit-reproducible given the
//! same inputs and seed). Switch output ports arbitrate among input-FIFO
//! head flits first-come-first-served by arrival cycle at the switch, tie
//! broken by fixed port priority. A flit that meets a full input FIFO kills
//! its whole packet: remaining flits are discarded wherever they are, and
//! the loss is accounted per packet and per flit.
//!
//! [`SimStats`] carries totals and per-packet end-to-end delay samples;
//! [`eed_stats`] and [`drop_rate`] aggregate them.

mod engine;
mod source;

pub use engine::run;

use crate::traffic::ArrivalEnvelope;
use std::error::Error;
use std::fmt;

/// A switch position in the mesh: `row` counts from the north edge, `col`
/// from the west edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Coord {
    pub row: usize,
    pub col: usize,
}

impl Coord {
    pub fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    /// Whether this position exists in an `n × n` mesh.
    pub fn in_grid(self, n: usize) -> bool {
        self.row < n && self.col < n
    }

    fn index(self, n: usize) -> usize {
        self.row * n + self.col
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

/// A switch port. The declaration order is the arbitration tie-break
/// priority: `Local` beats `North` beats `East` beats `South` beats `West`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Port {
    Local,
    North,
    East,
    South,
    West,
}

pub const PORT_COUNT: usize = 5;

impl Port {
    pub const ALL: [Port; PORT_COUNT] = [
        Port::Local,
        Port::North,
        Port::East,
        Port::South,
        Port::West,
    ];

    /// Index into per-switch port arrays; doubles as arbitration priority
    /// (lower wins ties).
    pub fn index(self) -> usize {
        match self {
            Port::Local => 0,
            Port::North => 1,
            Port::East => 2,
            Port::South => 3,
            Port::West => 4,
        }
    }

    /// The port a flit enters through on the neighbor it reaches by leaving
    /// through `self`.
    pub fn opposite(self) -> Port {
        match self {
            Port::Local => Port::Local,
            Port::North => Port::South,
            Port::East => Port::West,
            Port::South => Port::North,
            Port::West => Port::East,
        }
    }
}

/// Mesh and link parameters. `cycle_time` is derived: the time one flit
/// needs to cross one link at full capacity, so "one flit per link per
/// cycle" holds exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshConfig {
    /// Switches per side.
    pub n: usize,
    /// Input FIFO capacity, in flits, per port.
    pub buffer_size: usize,
    /// Link rate in bytes/second.
    pub link_capacity: f64,
    /// Flit size in bits.
    pub flit_size_bits: u32,
    /// Flits per packet.
    pub flits_per_packet: u32,
}

impl Default for MeshConfig {
    /// A 4×4 mesh of 2 GB/s links carrying 8-bit flits, four flits per
    /// packet, 16-flit input FIFOs.
    fn default() -> Self {
        Self {
            n: 4,
            buffer_size: 16,
            link_capacity: 2e9,
            flit_size_bits: 8,
            flits_per_packet: 4,
        }
    }
}

impl MeshConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.n < 2 {
            return Err(SimError::GridTooSmall(self.n));
        }
        if self.buffer_size == 0 {
            return Err(SimError::ZeroBuffer);
        }
        if self.flits_per_packet == 0 {
            return Err(SimError::ZeroFlitsPerPacket);
        }
        if self.flit_size_bits == 0 {
            return Err(SimError::ZeroFlitSize);
        }
        if !self.link_capacity.is_finite() || self.link_capacity <= 0.0 {
            return Err(SimError::NonPositiveCapacity(self.link_capacity));
        }
        Ok(())
    }

    /// Bytes per flit.
    pub fn flit_bytes(&self) -> f64 {
        f64::from(self.flit_size_bits) / 8.0
    }

    /// Bytes per packet.
    pub fn packet_bytes(&self) -> f64 {
        self.flit_bytes() * f64::from(self.flits_per_packet)
    }

    /// Seconds per cycle: the link time of one flit.
    pub fn cycle_time(&self) -> f64 {
        self.flit_bytes() / self.link_capacity
    }
}

/// One unidirectional application flow across the mesh. The application
/// offers traffic constrained by `envelope` (`sigma` bytes of burst, `rho`
/// bytes/second sustained); the source realizes it as whole packets through
/// a token bucket.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowSpec {
    pub source: Coord,
    pub dest: Coord,
    pub envelope: ArrivalEnvelope,
}

/// Dimension-ordered XY route from `src` to `dst` in an `n × n` mesh: the
/// ordered output ports taken at consecutive switches — all column moves
/// (east/west), then all row moves (south/north), then `Local`. The length
/// is the Manhattan distance plus one; `src == dst` yields `[Local]`.
pub fn route_xy(n: usize, src: Coord, dst: Coord) -> Result<Vec<Port>, SimError> {
    if n < 2 {
        return Err(SimError::GridTooSmall(n));
    }
    if !src.in_grid(n) {
        return Err(SimError::OutOfGrid(src));
    }
    if !dst.in_grid(n) {
        return Err(SimError::OutOfGrid(dst));
    }
    let mut ports = Vec::with_capacity(src.row.abs_diff(dst.row) + src.col.abs_diff(dst.col) + 1);
    let horizontal = if dst.col >= src.col {
        Port::East
    } else {
        Port::West
    };
    for _ in 0..src.col.abs_diff(dst.col) {
        ports.push(horizontal);
    }
    let vertical = if dst.row >= src.row {
        Port::South
    } else {
        Port::North
    };
    for _ in 0..src.row.abs_diff(dst.row) {
        ports.push(vertical);
    }
    ports.push(Port::Local);
    Ok(ports)
}

/// End-to-end delay of one delivered packet, in cycles, measured from the
/// cycle its head flit entered the source switch to the cycle its tail flit
/// left the destination switch (inclusive of both).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EedSample {
    pub flow: usize,
    pub packet_id: u64,
    pub delay_cycles: u64,
}

/// Totals and samples from one simulation run. Packet conservation holds:
/// `packets_injected = packets_delivered + packets_dropped +
/// packets_in_flight` (the engine asserts it at every cycle boundary).
#[derive(Debug, Clone, PartialEq)]
pub struct SimStats {
    pub packets_injected: u64,
    pub packets_delivered: u64,
    pub packets_dropped: u64,
    /// Packets still inside the network (or partially ejected) when the run
    /// ended; not lost, just unfinished.
    pub packets_in_flight: u64,
    /// Flits discarded because of a full buffer: the blocked flit plus every
    /// not-yet-delivered flit of its killed packet.
    pub flits_dropped: u64,
    pub eed_samples: Vec<EedSample>,
    pub duration_cycles: u64,
    /// Seconds per cycle of the simulated configuration.
    pub cycle_time_s: f64,
}

/// Aggregated end-to-end delay over delivered packets, in cycles and
/// seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EedSummary {
    pub samples: usize,
    pub mean_cycles: f64,
    pub max_cycles: u64,
    /// 99th percentile by the nearest-rank rule.
    pub p99_cycles: u64,
    pub mean_s: f64,
    pub max_s: f64,
    pub p99_s: f64,
}

/// Delay aggregates over delivered packets; `None` when nothing was
/// delivered (an empty delivery set has no statistics, not zero delay).
pub fn eed_stats(stats: &SimStats) -> Option<EedSummary> {
    if stats.eed_samples.is_empty() {
        return None;
    }
    let mut delays: Vec<u64> = stats.eed_samples.iter().map(|s| s.delay_cycles).collect();
    delays.sort_unstable();
    let samples = delays.len();
    let sum: u64 = delays.iter().sum();
    let mean_cycles = sum as f64 / samples as f64;
    let max_cycles = *delays.last().expect("non-empty");
    let rank = ((0.99 * samples as f64).ceil() as usize).clamp(1, samples);
    let p99_cycles = delays[rank - 1];
    let dt = stats.cycle_time_s;
    Some(EedSummary {
        samples,
        mean_cycles,
        max_cycles,
        p99_cycles,
        mean_s: mean_cycles * dt,
        max_s: max_cycles as f64 * dt,
        p99_s: p99_cycles as f64 * dt,
    })
}

/// Dropped packets as a percentage of injected packets; `None` when nothing
/// was injected.
pub fn drop_rate(stats: &SimStats) -> Option<f64> {
    if stats.packets_injected == 0 {
        return None;
    }
    Some(100.0 * stats.packets_dropped as f64 / stats.packets_injected as f64)
}

/// Errors from configuration or flow validation.
#[derive(Debug, Clone, PartialEq)]
pub enum SimError {
    GridTooSmall(usize),
    ZeroBuffer,
    ZeroFlitsPerPacket,
    ZeroFlitSize,
    NonPositiveCapacity(f64),
    ZeroDuration,
    OutOfGrid(Coord),
    SourceEqualsDest {
        flow: usize,
    },
    BurstBelowPacket {
        flow: usize,
        sigma: f64,
        packet_bytes: f64,
    },
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::GridTooSmall(n) => write!(f, "mesh needs at least 2 switches per side, got {n}"),
            Self::ZeroBuffer => write!(f, "input FIFOs need at least 1 flit of capacity"),
            Self::ZeroFlitsPerPacket => write!(f, "packets need at least 1 flit"),
            Self::ZeroFlitSize => write!(f, "flits need at least 1 bit"),
            Self::NonPositiveCapacity(c) => {
                write!(f, "link capacity must be finite and > 0, got {c}")
            }
            Self::ZeroDuration => write!(f, "simulation duration must be at least 1 cycle"),
            Self::OutOfGrid(c) => write!(f, "coordinate {c} lies outside the mesh"),
            Self::SourceEqualsDest { flow } => {
                write!(f, "flow {flow} must have distinct source and destination")
            }
            Self::BurstBelowPacket { flow, sigma, packet_bytes } => write!(
                f,
                "flow {flow}: burst allowance {sigma} B cannot fit one packet of {packet_bytes} B, so the source could never emit"
            ),
        }
    }
}

impl Error for SimError {}

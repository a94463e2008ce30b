//! The cycle loop: injection, arbitration, transfer, drop handling, and
//! conservation checking.

use super::source::PacedSource;
use super::{Coord, EedSample, FlowSpec, MeshConfig, Port, SimError, SimStats, PORT_COUNT};
use std::collections::{HashMap, HashSet, VecDeque};

/// How often (in cycles) the engine re-derives the in-flight packet set
/// from the physical FIFO and staging contents and checks it against the
/// incremental packet tracker. The cheap counter identity is asserted every
/// cycle; this structural sweep also runs on the final cycle.
const STRUCTURAL_AUDIT_PERIOD: u64 = 1024;

/// One flit in transit.
#[derive(Debug, Clone, Copy)]
struct Flit {
    flow: u32,
    packet: u64,
    seq: u32,
    /// Index into the flow's route: which output port this flit requests at
    /// the switch currently holding it.
    path_pos: u32,
    /// Cycle this flit entered the FIFO it currently occupies; the FCFS
    /// arbitration key.
    arrival_cycle: u64,
}

/// Book-keeping for a live (injected, neither delivered nor dropped)
/// packet. Dropped and delivered packets leave the map, so membership
/// itself encodes liveness.
#[derive(Debug, Clone, Copy)]
struct Track {
    inject_cycle: u64,
    flits_ejected: u32,
}

struct Switch {
    fifos: [VecDeque<Flit>; PORT_COUNT],
}

/// Per-flow runtime: the precomputed route, the paced application source,
/// staged flits awaiting injection (the local link carries one flit per
/// cycle), and the next packet id.
struct FlowRuntime {
    spec: FlowSpec,
    route: Vec<Port>,
    source: PacedSource,
    staging: VecDeque<Flit>,
    next_packet: u64,
    last_delivered: Option<u64>,
}

/// A granted head flit move: from `switch`'s input FIFO `in_port` through
/// output `out_port`.
#[derive(Debug, Clone, Copy)]
struct GrantedMove {
    switch: usize,
    in_port: usize,
    out_port: Port,
}

/// Runs the mesh for `duration` cycles and returns the accumulated
/// statistics. Deterministic: identical `(config, flows, duration, seed)`
/// produce an identical result, and each flow draws from its own RNG stream
/// derived from `seed`, so its offered traffic does not depend on the other
/// flows.
///
/// Each cycle proceeds in fixed phases: (1) applications emit packets into
/// per-flow staging and each switch injects at most one staged flit into
/// its local input FIFO (skipped while that FIFO is full — injection is
/// never a drop); (2) every input FIFO head requests the output port given
/// by its packet's route; (3) every output port grants one requester,
/// first-come-first-served by arrival cycle at the switch, ties broken by
/// the fixed port priority; (4) granted flits leave their FIFOs
/// simultaneously, then advance — a flit reaching its destination's local
/// port ejects, a flit meeting a full input FIFO downstream kills its
/// packet; (5) packet conservation and buffer occupancy are asserted.
pub fn run(
    config: &MeshConfig,
    flows: &[FlowSpec],
    duration: u64,
    seed: u64,
) -> Result<SimStats, SimError> {
    config.validate()?;
    if duration == 0 {
        return Err(SimError::ZeroDuration);
    }
    let n = config.n;
    let packet_bytes = config.packet_bytes();
    let cycle_time = config.cycle_time();
    let flits_per_packet = config.flits_per_packet;

    let mut flow_runtimes = Vec::with_capacity(flows.len());
    for (index, spec) in flows.iter().enumerate() {
        if !spec.source.in_grid(n) {
            return Err(SimError::OutOfGrid(spec.source));
        }
        if !spec.dest.in_grid(n) {
            return Err(SimError::OutOfGrid(spec.dest));
        }
        if spec.source == spec.dest {
            return Err(SimError::SourceEqualsDest { flow: index });
        }
        if spec.envelope.sigma + 1e-9 < packet_bytes {
            return Err(SimError::BurstBelowPacket {
                flow: index,
                sigma: spec.envelope.sigma,
                packet_bytes,
            });
        }
        // Decorrelate per-flow RNG streams while keeping them reproducible.
        let flow_seed = seed ^ ((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        flow_runtimes.push(FlowRuntime {
            spec: *spec,
            route: super::route_xy(n, spec.source, spec.dest)?,
            source: PacedSource::new(&spec.envelope, packet_bytes, cycle_time, flow_seed),
            staging: VecDeque::new(),
            next_packet: 0,
            last_delivered: None,
        });
    }

    let mut switches: Vec<Switch> = (0..n * n)
        .map(|_| Switch { fifos: std::array::from_fn(|_| VecDeque::new()) })
        .collect();
    // Flows injecting at each switch, in flow order; served round-robin.
    let mut flows_at_switch: Vec<Vec<usize>> = vec![Vec::new(); n * n];
    for (index, fr) in flow_runtimes.iter().enumerate() {
        flows_at_switch[fr.spec.source.index(n)].push(index);
    }
    let mut injection_rr: Vec<usize> = vec![0; n * n];

    let mut tracks: HashMap<(u32, u64), Track> = HashMap::new();
    let mut stats = SimStats {
        packets_injected: 0,
        packets_delivered: 0,
        packets_dropped: 0,
        packets_in_flight: 0,
        flits_dropped: 0,
        eed_samples: Vec::new(),
        duration_cycles: duration,
        cycle_time_s: cycle_time,
    };
    let mut moves: Vec<(GrantedMove, Flit)> = Vec::new();

    for cycle in 0..duration {
        // Phase 1a: applications emit whole packets into staging.
        for (index, fr) in flow_runtimes.iter_mut().enumerate() {
            if fr.source.tick() {
                let packet = fr.next_packet;
                fr.next_packet += 1;
                for seq in 0..flits_per_packet {
                    fr.staging.push_back(Flit {
                        flow: index as u32,
                        packet,
                        seq,
                        path_pos: 0,
                        arrival_cycle: 0,
                    });
                }
            }
        }

        // Phase 1b: one staged flit per switch enters the local input FIFO,
        // provided it has room before this cycle's departures (a blocked
        // source waits; injection never drops). Flows sharing a switch take
        // round-robin turns.
        for switch_index in 0..n * n {
            let candidates = &flows_at_switch[switch_index];
            if candidates.is_empty()
                || switches[switch_index].fifos[Port::Local.index()].len() >= config.buffer_size
            {
                continue;
            }
            for offset in 0..candidates.len() {
                let slot = (injection_rr[switch_index] + offset) % candidates.len();
                let flow_index = candidates[slot];
                if let Some(mut flit) = flow_runtimes[flow_index].staging.pop_front() {
                    flit.arrival_cycle = cycle;
                    if flit.seq == 0 {
                        tracks.insert(
                            (flit.flow, flit.packet),
                            Track { inject_cycle: cycle, flits_ejected: 0 },
                        );
                        stats.packets_injected += 1;
                    }
                    switches[switch_index].fifos[Port::Local.index()].push_back(flit);
                    injection_rr[switch_index] = (slot + 1) % candidates.len();
                    break;
                }
            }
        }

        // Phases 2–3: discard dead head flits (their packet was killed
        // elsewhere), then let each output port grant the
        // first-come-first-served head among its requesters.
        moves.clear();
        for (switch_index, switch) in switches.iter_mut().enumerate() {
            for fifo in &mut switch.fifos {
                while let Some(head) = fifo.front() {
                    if tracks.contains_key(&(head.flow, head.packet)) {
                        break;
                    }
                    fifo.pop_front();
                }
            }
            // Per output port: (arrival cycle, input port priority, grant).
            let mut best: [Option<(u64, usize)>; PORT_COUNT] = [None; PORT_COUNT];
            for in_port in 0..PORT_COUNT {
                if let Some(head) = switch.fifos[in_port].front() {
                    let out_port = flow_runtimes[head.flow as usize].route[head.path_pos as usize];
                    let key = (head.arrival_cycle, in_port);
                    let slot = &mut best[out_port.index()];
                    if slot.is_none_or(|current| key < current) {
                        *slot = Some(key);
                        // Remember the winning input per output below.
                    }
                }
            }
            // Re-scan to map winners back to grants (keys are unique per
            // switch since an input port has one head).
            for in_port in 0..PORT_COUNT {
                if let Some(head) = switch.fifos[in_port].front() {
                    let out_port = flow_runtimes[head.flow as usize].route[head.path_pos as usize];
                    if best[out_port.index()] == Some((head.arrival_cycle, in_port)) {
                        moves.push((
                            GrantedMove { switch: switch_index, in_port, out_port },
                            *head,
                        ));
                    }
                }
            }
        }

        // Phase 4: all granted flits leave their FIFOs first, so a transfer
        // into a FIFO that also sends this cycle sees the freed slot; then
        // ejections, transfers, and drops happen in deterministic order.
        for (grant, _) in &moves {
            switches[grant.switch].fifos[grant.in_port].pop_front();
        }
        for &(grant, mut flit) in &moves {
            let key = (flit.flow, flit.packet);
            if !tracks.contains_key(&key) {
                // Killed earlier this same phase by a sibling flit's drop.
                continue;
            }
            if grant.out_port == Port::Local {
                let track = tracks.get_mut(&key).expect("checked above");
                track.flits_ejected += 1;
                if track.flits_ejected == flits_per_packet {
                    let track = tracks.remove(&key).expect("present");
                    stats.packets_delivered += 1;
                    let fr = &mut flow_runtimes[flit.flow as usize];
                    assert!(
                        fr.last_delivered.is_none_or(|last| last < flit.packet),
                        "flow {} delivered packet {} after {:?}",
                        flit.flow,
                        flit.packet,
                        fr.last_delivered
                    );
                    fr.last_delivered = Some(flit.packet);
                    stats.eed_samples.push(EedSample {
                        flow: flit.flow as usize,
                        packet_id: flit.packet,
                        delay_cycles: cycle - track.inject_cycle + 1,
                    });
                }
            } else {
                let from = Coord { row: grant.switch / n, col: grant.switch % n };
                let to = neighbor(from, grant.out_port);
                let enter = grant.out_port.opposite().index();
                let fifo = &mut switches[to.index(n)].fifos[enter];
                if fifo.len() < config.buffer_size {
                    flit.path_pos += 1;
                    flit.arrival_cycle = cycle;
                    fifo.push_back(flit);
                } else {
                    // Full buffer: the whole packet dies. Count every flit
                    // that will never reach the destination (this one,
                    // trailing ones anywhere in the mesh, staged ones);
                    // they are discarded lazily as they surface.
                    let track = tracks.remove(&key).expect("checked above");
                    stats.flits_dropped += u64::from(flits_per_packet - track.flits_ejected);
                    stats.packets_dropped += 1;
                    flow_runtimes[flit.flow as usize]
                        .staging
                        .retain(|staged| staged.packet != flit.packet);
                }
            }
        }

        // Phase 5: conservation and occupancy checks.
        stats.packets_in_flight = tracks.len() as u64;
        assert!(
            stats.packets_injected
                == stats.packets_delivered + stats.packets_dropped + stats.packets_in_flight,
            "packet conservation broken at cycle {cycle}: {} injected vs {} delivered + {} dropped + {} in flight",
            stats.packets_injected,
            stats.packets_delivered,
            stats.packets_dropped,
            stats.packets_in_flight
        );
        if cycle % STRUCTURAL_AUDIT_PERIOD == 0 || cycle + 1 == duration {
            audit_structure(&switches, &flow_runtimes, &tracks, config, cycle);
        }
    }

    Ok(stats)
}

/// The switch reached by leaving `from` through `port`. Callers only route
/// along valid XY paths, so the step stays in the grid.
fn neighbor(from: Coord, port: Port) -> Coord {
    match port {
        Port::North => Coord { row: from.row - 1, col: from.col },
        Port::South => Coord { row: from.row + 1, col: from.col },
        Port::East => Coord { row: from.row, col: from.col + 1 },
        Port::West => Coord { row: from.row, col: from.col - 1 },
        Port::Local => from,
    }
}

/// Re-derives flit locations from the physical state (FIFOs and staging)
/// and checks that every live packet still has at least one flit somewhere,
/// along with FIFO occupancy limits. The converse does not hold: a dropped
/// packet's trailing flits stay in FIFOs until they surface at a head and
/// are discarded, so physical flits without book-keeping are expected.
fn audit_structure(
    switches: &[Switch],
    flow_runtimes: &[FlowRuntime],
    tracks: &HashMap<(u32, u64), Track>,
    config: &MeshConfig,
    cycle: u64,
) {
    let mut physically_present: HashSet<(u32, u64)> = HashSet::new();
    for switch in switches {
        for fifo in &switch.fifos {
            assert!(
                fifo.len() <= config.buffer_size,
                "FIFO exceeds its capacity at cycle {cycle}"
            );
            for flit in fifo {
                physically_present.insert((flit.flow, flit.packet));
            }
        }
    }
    for fr in flow_runtimes {
        for flit in &fr.staging {
            physically_present.insert((flit.flow, flit.packet));
        }
    }
    for key in tracks.keys() {
        assert!(
            physically_present.contains(key),
            "tracked packet {key:?} has no physical flits at cycle {cycle}"
        );
    }
}

//! Turns configured flows into analytic-bound inputs: each flow's XY route
//! as a list of (switch, output port) traversals, the cross traffic
//! competing at each traversal, and the resulting per-hop and path bounds.

use crate::config::{Experiment, FlowShape};
use noccalc::bounds::{
    mux_delay_bound, path_delay_bound, queue_delay_bound, switch_delay_bound, DelayBound, HopSpec,
    MuxSpec, ServerSpec,
};
use noccalc::sim::{route_xy, Coord, MeshConfig, Port};
use noccalc::traffic::ArrivalEnvelope;

/// One output-port traversal of a flow's route: the switch it happens at
/// and the port taken (the final traversal is the destination's `Local`).
pub type LinkStep = (Coord, Port);

/// The switches and output ports a flow crosses, in order. Routing cannot
/// fail for validated flows.
pub fn link_steps(mesh: &MeshConfig, flow: &FlowShape) -> Vec<LinkStep> {
    let route = route_xy(mesh.n, flow.source, flow.dest)
        .expect("flow endpoints were validated against the mesh");
    let mut steps = Vec::with_capacity(route.len());
    let mut at = flow.source;
    for port in route {
        steps.push((at, port));
        at = match port {
            Port::North => Coord::new(at.row - 1, at.col),
            Port::South => Coord::new(at.row + 1, at.col),
            Port::East => Coord::new(at.row, at.col + 1),
            Port::West => Coord::new(at.row, at.col - 1),
            Port::Local => at,
        };
    }
    steps
}

/// The analytic hop sequence for flow `index` when every configured flow
/// runs at `rate` bytes/s: one `HopSpec` per output-port traversal, with
/// cross traffic aggregated over the other flows that traverse the same
/// output port of the same switch.
pub fn hops_for_flow(exp: &Experiment, rate: f64, index: usize) -> Vec<HopSpec> {
    let capacity = exp.mesh.link_capacity;
    let packet = exp.mesh.packet_bytes();
    let server = ServerSpec::new(capacity, capacity, packet)
        .expect("equal link rates and a positive packet length are valid");
    let mux = MuxSpec::new(capacity, capacity, capacity, packet)
        .expect("equal link rates and a positive packet length are valid");
    let all_steps: Vec<Vec<LinkStep>> =
        exp.flows.iter().map(|f| link_steps(&exp.mesh, f)).collect();
    all_steps[index]
        .iter()
        .map(|step| {
            let crossing: Vec<ArrivalEnvelope> = exp
                .flows
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != index && all_steps[j].contains(step))
                .map(|(_, f)| envelope(f, rate))
                .collect();
            HopSpec { server, mux, cross: ArrivalEnvelope::aggregate(&crossing) }
        })
        .collect()
}

fn envelope(flow: &FlowShape, rate: f64) -> ArrivalEnvelope {
    ArrivalEnvelope::new(flow.sigma, rate).expect("burst and rate were validated")
}

/// The bound components reported for one flow at one rate: the entry
/// switch's queue, mux, and total stage delays, plus the composed bound
/// over the whole route.
#[derive(Debug, Clone, Copy)]
pub struct FlowBounds {
    pub queue: DelayBound,
    pub mux: DelayBound,
    pub switch: DelayBound,
    pub path: DelayBound,
}

pub fn flow_bounds(exp: &Experiment, rate: f64, index: usize) -> FlowBounds {
    let env = envelope(&exp.flows[index], rate);
    let hops = hops_for_flow(exp, rate, index);
    let entry = &hops[0];
    FlowBounds {
        queue: queue_delay_bound(&env, &entry.server),
        mux: mux_delay_bound(&env, &entry.cross, &entry.mux),
        switch: switch_delay_bound(&env, &entry.cross, &entry.server, &entry.mux),
        path: path_delay_bound(&env, &hops),
    }
}

/// A bound on delivered-packet EED in cycles, comparable to the simulator's
/// measurements: the worst per-flow analytic path bound, plus the packet's
/// own serialization tail (`flits_per_packet − 1` cycles, excluded from the
/// per-bit analysis) and one cycle of store-and-forward alignment per
/// traversal plus one for injection. `None` when any flow is unstable at
/// this rate.
pub fn eed_bound_cycles(exp: &Experiment, rate: f64) -> Option<f64> {
    let cycle = exp.mesh.cycle_time();
    let mut worst: f64 = 0.0;
    for index in 0..exp.flows.len() {
        let hops = hops_for_flow(exp, rate, index);
        let env = envelope(&exp.flows[index], rate);
        let cycles = path_delay_bound(&env, &hops).cycles(cycle)?;
        let total = cycles + hops.len() as f64 + 1.0 + f64::from(exp.mesh.flits_per_packet - 1);
        worst = worst.max(total);
    }
    Some(worst)
}

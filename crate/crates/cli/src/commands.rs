//! The four subcommands, each producing a complete CSV string: a provenance
//! comment (`# config-hash: …`), a header row, then data rows. All output
//! is deterministic for a fixed configuration and seed, regardless of how
//! many worker threads a sweep uses.

use crate::analysis::{eed_bound_cycles, flow_bounds};
use crate::config::{ConfigError, Experiment};
use noccalc::bounds::DelayBound;
use noccalc::qos::{qos_curve, QosConfig, QosParameter};
use noccalc::sim::{drop_rate, eed_stats, run, FlowSpec, MeshConfig, SimError, SimStats};
use noccalc::traffic::ArrivalEnvelope;
use rayon::prelude::*;
use std::collections::BTreeSet;
use std::error::Error;
use std::fmt;

/// Columns of `simulate` and `sweep` output. `drop_pct` counts dropped
/// packets against injected ones; EED columns are `NaN` when nothing was
/// delivered; `eed_bound_cycles` is the analytic delivered-packet bound and
/// reads `unbounded` where some flow's rate exceeds what its route can
/// drain.
const SWEEP_HEADER: &str = "buffer_flits,rate_bytes_s,injected,delivered,dropped,in_flight,\
flits_dropped,drop_pct,eed_mean_cycles,eed_p99_cycles,eed_max_cycles,eed_bound_cycles";

const BOUND_HEADER: &str = "flow,rate_bytes_s,d_queue_s,d_queue_cycles,d_mux_s,d_mux_cycles,\
d_switch_s,d_switch_cycles,path_bound_s,path_bound_cycles";

const QOS_HEADER: &str = "mix,rate_bytes_s,buffer_flits,q";

/// Analytic bound table: one row per (flow, application rate), entry-switch
/// stage bounds plus the composed route bound, in seconds and cycles.
/// Unstable combinations render as `unbounded`, not errors.
pub fn cmd_bound(exp: &Experiment) -> String {
    let cycle = exp.mesh.cycle_time();
    let mut out = provenance(exp);
    out.push_str(BOUND_HEADER);
    out.push('\n');
    for (index, _) in exp.flows.iter().enumerate() {
        for &rate in &exp.application_rates {
            let b = flow_bounds(exp, rate, index);
            out.push_str(&format!(
                "{index},{rate},{},{},{},{},{},{},{},{}\n",
                bound_seconds(b.queue),
                bound_cycles(b.queue, cycle),
                bound_seconds(b.mux),
                bound_cycles(b.mux, cycle),
                bound_seconds(b.switch),
                bound_cycles(b.switch, cycle),
                bound_seconds(b.path),
                bound_cycles(b.path, cycle),
            ));
        }
    }
    out
}

/// One simulation at the first configured sweep point (first buffer size,
/// first application rate), in sweep row format.
pub fn cmd_simulate(exp: &Experiment) -> Result<String, CliError> {
    let buffer = exp.buffer_sizes[0];
    let rate = exp.application_rates[0];
    let stats = run_point(exp, buffer, rate)?;
    let mut out = provenance(exp);
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    out.push_str(&sweep_row(exp, buffer, rate, &stats));
    out.push('\n');
    Ok(out)
}

/// The full buffer × rate sweep, one row per point, rows sorted by
/// (buffer, rate). Points run as independent parallel jobs; `jobs` caps the
/// worker count (`None` uses all cores). A failing point aborts the sweep
/// and names itself.
pub fn cmd_sweep(exp: &Experiment, jobs: Option<usize>) -> Result<String, CliError> {
    let points: Vec<(usize, f64)> = sorted_points(exp);
    let simulate_all = || -> Result<Vec<SimStats>, CliError> {
        points
            .par_iter()
            .map(|&(buffer, rate)| {
                run_point(exp, buffer, rate).map_err(|e| CliError::SweepPoint {
                    buffer,
                    rate,
                    message: e.to_string(),
                })
            })
            .collect()
    };
    let all = match jobs {
        Some(jobs) if jobs > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| CliError::Jobs { message: e.to_string() })?
            .install(simulate_all),
        _ => simulate_all(),
    }?;
    let mut out = provenance(exp);
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for ((buffer, rate), stats) in points.iter().zip(&all) {
        out.push_str(&sweep_row(exp, *buffer, *rate, stats));
        out.push('\n');
    }
    Ok(out)
}

/// Scores a sweep CSV: for every configured application rate and weight
/// mix, the weighted QoS per buffer size over that rate's rows. The sweep
/// text must contain the configured parameter columns and every configured
/// rate.
pub fn cmd_qos(exp: &Experiment, sweep_text: &str) -> Result<String, CliError> {
    let table = parse_sweep(exp, sweep_text)?;
    let mut out = provenance(exp);
    out.push_str(&format!(
        "# sweep-hash: {}\n",
        crate::config::sha256_hex(sweep_text.as_bytes())
    ));
    out.push_str(QOS_HEADER);
    out.push('\n');
    for mix in &exp.qos.mixes {
        for &rate in &exp.application_rates {
            let rows = table.rows_at(rate).ok_or_else(|| CliError::SweepData {
                message: format!("no sweep rows for rate_bytes_s={}", fmt_f64(rate)),
            })?;
            let config = QosConfig {
                k: exp.qos.k,
                parameters: exp
                    .qos
                    .columns
                    .iter()
                    .zip(&mix.alphas)
                    .enumerate()
                    .map(|(c, (column, &alpha))| QosParameter {
                        name: column.name.clone(),
                        direction: column.direction,
                        weight: alpha,
                        samples: rows
                            .iter()
                            .map(|row| (row.buffer as f64, row.values[c]))
                            .collect(),
                    })
                    .collect(),
            };
            let report = qos_curve(&config).map_err(|e| CliError::Qos {
                message: format!("mix `{}` at rate {}: {e}", mix.name, fmt_f64(rate)),
            })?;
            for (control, q) in report.control_values.iter().zip(&report.scores) {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    mix.name,
                    fmt_f64(rate),
                    control,
                    q
                ));
            }
        }
    }
    Ok(out)
}

/// Runs one sweep point through the simulator library.
pub fn run_point(exp: &Experiment, buffer: usize, rate: f64) -> Result<SimStats, CliError> {
    let mesh = MeshConfig { buffer_size: buffer, ..exp.mesh };
    let flows: Vec<FlowSpec> = exp
        .flows
        .iter()
        .map(|f| FlowSpec {
            source: f.source,
            dest: f.dest,
            envelope: ArrivalEnvelope::new(f.sigma, rate).expect("burst and rate were validated"),
        })
        .collect();
    run(&mesh, &flows, exp.duration, exp.seed).map_err(sim_error_to_cli)
}

/// The sweep grid, deduplicated and sorted by (buffer, rate).
fn sorted_points(exp: &Experiment) -> Vec<(usize, f64)> {
    let buffers: BTreeSet<usize> = exp.buffer_sizes.iter().copied().collect();
    let mut rates: Vec<f64> = exp.application_rates.clone();
    rates.sort_by(f64::total_cmp);
    rates.dedup();
    buffers
        .into_iter()
        .flat_map(|b| rates.iter().map(move |&r| (b, r)))
        .collect()
}

fn sweep_row(exp: &Experiment, buffer: usize, rate: f64, stats: &SimStats) -> String {
    let eed = eed_stats(stats);
    let bound = match eed_bound_cycles(exp, rate) {
        Some(cycles) => fmt_f64(cycles),
        None => "unbounded".to_string(),
    };
    format!(
        "{buffer},{},{},{},{},{},{},{},{},{},{},{bound}",
        fmt_f64(rate),
        stats.packets_injected,
        stats.packets_delivered,
        stats.packets_dropped,
        stats.packets_in_flight,
        stats.flits_dropped,
        fmt_f64(drop_rate(stats).unwrap_or(f64::NAN)),
        fmt_f64(eed.map_or(f64::NAN, |e| e.mean_cycles)),
        eed.map_or_else(|| "NaN".to_string(), |e| e.p99_cycles.to_string()),
        eed.map_or_else(|| "NaN".to_string(), |e| e.max_cycles.to_string()),
    )
}

fn provenance(exp: &Experiment) -> String {
    format!("# config-hash: {}\n", exp.config_hash)
}

fn bound_seconds(bound: DelayBound) -> String {
    bound.to_string()
}

fn bound_cycles(bound: DelayBound, cycle_seconds: f64) -> String {
    match bound.cycles(cycle_seconds) {
        Some(cycles) => fmt_f64(cycles),
        None => "unbounded".to_string(),
    }
}

/// Canonical float rendering for CSV cells (shortest round-trip form).
fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

/// Parsed sweep rows needed for scoring: buffer, rate (as written), and the
/// configured parameter columns' values.
struct SweepTable {
    rows: Vec<SweepRow>,
}

struct SweepRow {
    buffer: u64,
    rate_text: String,
    values: Vec<f64>,
}

impl SweepTable {
    /// Rows whose rate cell matches `rate`'s canonical rendering, sorted by
    /// buffer. Empty result means the rate is absent.
    fn rows_at(&self, rate: f64) -> Option<Vec<&SweepRow>> {
        let key = fmt_f64(rate);
        let mut rows: Vec<&SweepRow> = self.rows.iter().filter(|r| r.rate_text == key).collect();
        if rows.is_empty() {
            return None;
        }
        rows.sort_by_key(|r| r.buffer);
        Some(rows)
    }
}

fn parse_sweep(exp: &Experiment, sweep_text: &str) -> Result<SweepTable, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(true)
        .from_reader(sweep_text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| CliError::SweepData { message: format!("unreadable header: {e}") })?
        .clone();
    let position = |name: &str| -> Result<usize, CliError> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::SweepData {
                message: format!(
                    "column `{name}` not found in sweep CSV (columns: {})",
                    headers.iter().collect::<Vec<_>>().join(", ")
                ),
            })
    };
    let buffer_col = position("buffer_flits")?;
    let rate_col = position("rate_bytes_s")?;
    let value_cols: Vec<usize> = exp
        .qos
        .columns
        .iter()
        .map(|c| position(&c.name))
        .collect::<Result<_, _>>()?;
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::SweepData {
            message: format!("unreadable sweep row {}: {e}", line + 1),
        })?;
        let cell = |col: usize| record.get(col).unwrap_or("");
        let buffer: u64 = cell(buffer_col).parse().map_err(|_| CliError::SweepData {
            message: format!(
                "sweep row {}: buffer_flits `{}` is not an integer",
                line + 1,
                cell(buffer_col)
            ),
        })?;
        let values = value_cols
            .iter()
            .zip(&exp.qos.columns)
            .map(|(&col, column)| {
                cell(col).parse::<f64>().map_err(|_| CliError::SweepData {
                    message: format!(
                        "sweep row {}: column `{}` value `{}` is not numeric",
                        line + 1,
                        column.name,
                        cell(col)
                    ),
                })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        rows.push(SweepRow { buffer, rate_text: cell(rate_col).to_string(), values });
    }
    Ok(SweepTable { rows })
}

fn sim_error_to_cli(e: SimError) -> CliError {
    let field = match e {
        SimError::GridTooSmall(_) => "mesh.n".to_string(),
        SimError::ZeroBuffer => "mesh.buffer_size / sweep.buffer_sizes".to_string(),
        SimError::NonPositiveCapacity(_) => "mesh.link_capacity".to_string(),
        SimError::ZeroFlitSize => "mesh.flit_size".to_string(),
        SimError::ZeroFlitsPerPacket => "mesh.flits_per_packet".to_string(),
        SimError::ZeroDuration => "experiment.duration".to_string(),
        SimError::OutOfGrid(_) => "flows".to_string(),
        SimError::SourceEqualsDest { flow } => format!("flows[{flow}].dest"),
        SimError::BurstBelowPacket { flow, .. } => format!("flows[{flow}].sigma"),
    };
    CliError::Validation { field, reason: e.to_string() }
}

/// Anything a subcommand can fail with; `Display` gives the structured
/// message printed to stderr.
#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Validation {
        field: String,
        reason: String,
    },
    SweepPoint {
        buffer: usize,
        rate: f64,
        message: String,
    },
    SweepData {
        message: String,
    },
    Qos {
        message: String,
    },
    Jobs {
        message: String,
    },
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        Self::Config(e)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(e) => write!(f, "{e}"),
            Self::Validation { field, reason } => {
                write!(f, "invalid config field `{field}`: {reason}")
            }
            Self::SweepPoint { buffer, rate, message } => write!(
                f,
                "sweep aborted at buffer_flits={buffer} rate_bytes_s={}: {message}",
                fmt_f64(*rate)
            ),
            Self::SweepData { message } => write!(f, "sweep data error: {message}"),
            Self::Qos { message } => write!(f, "qos error: {message}"),
            Self::Jobs { message } => write!(f, "cannot build worker pool: {message}"),
            Self::Io { path, source } => {
                write!(f, "cannot access {}: {source}", path.display())
            }
        }
    }
}

impl Error for CliError {}

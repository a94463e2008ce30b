//! TOML experiment configuration: schema, defaults, and validation.
//!
//! Every validation failure names the offending field
//! (`flows[1].sigma`, `sweep.application_rates[2]`, …) so scripted callers
//! can act on the message.

use noccalc::qos::{validate_weights, Direction};
use noccalc::sim::{Coord, MeshConfig};
use serde::Deserialize;
use sha2::{Digest, Sha256};
use std::error::Error;
use std::fmt;
use std::path::{Path, PathBuf};

/// Raw deserialized file; field names and units are the schema. Unknown
/// keys are rejected so typos surface instead of silently using defaults.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    mesh: MeshSection,
    flows: Vec<FlowSection>,
    #[serde(default)]
    sweep: SweepSection,
    #[serde(default)]
    experiment: ExperimentSection,
    #[serde(default)]
    qos: QosSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct MeshSection {
    /// Switches per mesh side.
    n: usize,
    /// Input FIFO depth in flits.
    buffer_size: usize,
    /// Link rate in bytes/second.
    link_capacity: f64,
    /// Flit size in bits.
    flit_size: u32,
    flits_per_packet: u32,
}

impl Default for MeshSection {
    fn default() -> Self {
        let mesh = MeshConfig::default();
        Self {
            n: mesh.n,
            buffer_size: mesh.buffer_size,
            link_capacity: mesh.link_capacity,
            flit_size: mesh.flit_size_bits,
            flits_per_packet: mesh.flits_per_packet,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct FlowSection {
    /// `[row, col]`, rows counted from the north edge.
    source: [usize; 2],
    dest: [usize; 2],
    /// Burst allowance in bytes; the flow's rate comes from the
    /// application-rate axis.
    sigma: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct SweepSection {
    /// Buffer depths in flits.
    buffer_sizes: Vec<usize>,
    /// Per-flow application rates in bytes/second.
    application_rates: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            buffer_sizes: vec![4, 8, 16, 32, 64],
            application_rates: vec![0.25e9, 0.5e9, 1.0e9, 1.5e9, 1.9e9],
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ExperimentSection {
    /// Simulated cycles per run.
    duration: u64,
    seed: u64,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self { duration: 150_000, seed: 1 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct QosSection {
    /// Efficiency coefficient `k ≥ 1`.
    k: f64,
    /// Sweep CSV columns to score.
    parameters: Vec<String>,
    /// Per parameter: `"decreasing"` (smaller is better) or `"increasing"`.
    directions: Vec<String>,
    mixes: Vec<MixSection>,
}

impl Default for QosSection {
    fn default() -> Self {
        Self {
            k: 1.1,
            parameters: vec!["drop_pct".into(), "eed_mean_cycles".into()],
            directions: vec!["decreasing".into(), "decreasing".into()],
            mixes: vec![
                MixSection { name: "balanced".into(), alphas: vec![0.5, 0.5] },
                MixSection { name: "drop-weighted".into(), alphas: vec![0.8, 0.2] },
            ],
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct MixSection {
    name: String,
    /// Prioritization weights, one per scored parameter; must sum to 1.
    alphas: Vec<f64>,
}

/// A validated experiment: library-level types plus the sweep axes and the
/// hash of the raw config bytes (stamped into every CSV for provenance).
#[derive(Debug, Clone)]
pub struct Experiment {
    pub mesh: MeshConfig,
    pub flows: Vec<FlowShape>,
    pub buffer_sizes: Vec<usize>,
    pub application_rates: Vec<f64>,
    pub duration: u64,
    pub seed: u64,
    pub qos: QosSpec,
    pub config_hash: String,
}

/// A configured flow before a rate is assigned: endpoints and burst.
#[derive(Debug, Clone, Copy)]
pub struct FlowShape {
    pub source: Coord,
    pub dest: Coord,
    pub sigma: f64,
}

/// The validated QoS plan: coefficient, scored sweep columns, and the
/// weight mixes to score them under.
#[derive(Debug, Clone)]
pub struct QosSpec {
    pub k: f64,
    pub columns: Vec<QosColumn>,
    pub mixes: Vec<QosMix>,
}

/// One sweep CSV column to score and which way is better.
#[derive(Debug, Clone)]
pub struct QosColumn {
    pub name: String,
    pub direction: Direction,
}

/// A named prioritization-weight vector, aligned with the column list.
#[derive(Debug, Clone)]
pub struct QosMix {
    pub name: String,
    pub alphas: Vec<f64>,
}

/// Loads, parses, and validates an experiment configuration file.
pub fn load(path: &Path) -> Result<Experiment, ConfigError> {
    let bytes = std::fs::read(path)
        .map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    let text = String::from_utf8(bytes).map_err(|e| ConfigError::Parse {
        path: path.to_path_buf(),
        message: format!("not UTF-8: {e}"),
    })?;
    let raw: RawConfig = toml::from_str(&text)
        .map_err(|e| ConfigError::Parse { path: path.to_path_buf(), message: e.to_string() })?;
    validate(raw, sha256_hex(text.as_bytes()))
}

/// Hex SHA-256 of a byte string; used for the CSV provenance comments.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for byte in digest {
        use fmt::Write;
        write!(out, "{byte:02x}").expect("writing to String cannot fail");
    }
    out
}

fn validate(raw: RawConfig, config_hash: String) -> Result<Experiment, ConfigError> {
    let mesh = MeshConfig {
        n: raw.mesh.n,
        buffer_size: raw.mesh.buffer_size,
        link_capacity: raw.mesh.link_capacity,
        flit_size_bits: raw.mesh.flit_size,
        flits_per_packet: raw.mesh.flits_per_packet,
    };
    mesh.validate().map_err(|e| {
        let field = match e {
            noccalc::sim::SimError::GridTooSmall(_) => "mesh.n",
            noccalc::sim::SimError::ZeroBuffer => "mesh.buffer_size",
            noccalc::sim::SimError::NonPositiveCapacity(_) => "mesh.link_capacity",
            noccalc::sim::SimError::ZeroFlitSize => "mesh.flit_size",
            noccalc::sim::SimError::ZeroFlitsPerPacket => "mesh.flits_per_packet",
            _ => "mesh",
        };
        invalid(field, e)
    })?;

    if raw.flows.is_empty() {
        return Err(invalid("flows", "at least one flow is required"));
    }
    let mut flows = Vec::with_capacity(raw.flows.len());
    for (i, flow) in raw.flows.iter().enumerate() {
        let source = Coord::new(flow.source[0], flow.source[1]);
        let dest = Coord::new(flow.dest[0], flow.dest[1]);
        if !source.in_grid(mesh.n) {
            return Err(invalid(
                format!("flows[{i}].source"),
                format!("{source} is outside the {0}x{0} mesh", mesh.n),
            ));
        }
        if !dest.in_grid(mesh.n) {
            return Err(invalid(
                format!("flows[{i}].dest"),
                format!("{dest} is outside the {0}x{0} mesh", mesh.n),
            ));
        }
        if source == dest {
            return Err(invalid(
                format!("flows[{i}].dest"),
                "source and destination must differ",
            ));
        }
        if !flow.sigma.is_finite() || flow.sigma < 0.0 {
            return Err(invalid(
                format!("flows[{i}].sigma"),
                format!("burst must be finite and non-negative, got {}", flow.sigma),
            ));
        }
        flows.push(FlowShape { source, dest, sigma: flow.sigma });
    }

    if raw.sweep.buffer_sizes.is_empty() {
        return Err(invalid("sweep.buffer_sizes", "must be non-empty"));
    }
    for (i, &b) in raw.sweep.buffer_sizes.iter().enumerate() {
        if b == 0 {
            return Err(invalid(
                format!("sweep.buffer_sizes[{i}]"),
                "buffer depth must be at least 1 flit",
            ));
        }
    }
    if raw.sweep.application_rates.is_empty() {
        return Err(invalid("sweep.application_rates", "must be non-empty"));
    }
    for (i, &r) in raw.sweep.application_rates.iter().enumerate() {
        if !r.is_finite() || r <= 0.0 {
            return Err(invalid(
                format!("sweep.application_rates[{i}]"),
                format!("rate must be finite and positive, got {r}"),
            ));
        }
        if r > mesh.link_capacity {
            return Err(invalid(
                format!("sweep.application_rates[{i}]"),
                format!("rate {r} exceeds link_capacity {}", mesh.link_capacity),
            ));
        }
    }

    if raw.experiment.duration == 0 {
        return Err(invalid("experiment.duration", "must be at least 1 cycle"));
    }

    let qos = validate_qos(&raw.qos)?;

    Ok(Experiment {
        mesh,
        flows,
        buffer_sizes: raw.sweep.buffer_sizes,
        application_rates: raw.sweep.application_rates,
        duration: raw.experiment.duration,
        seed: raw.experiment.seed,
        qos,
        config_hash,
    })
}

fn validate_qos(qos: &QosSection) -> Result<QosSpec, ConfigError> {
    if qos.parameters.is_empty() {
        return Err(invalid(
            "qos.parameters",
            "must name at least one sweep column",
        ));
    }
    if qos.directions.len() != qos.parameters.len() {
        return Err(invalid(
            "qos.directions",
            format!(
                "expected one direction per parameter ({}), got {}",
                qos.parameters.len(),
                qos.directions.len()
            ),
        ));
    }
    let mut columns = Vec::with_capacity(qos.parameters.len());
    for (i, (name, direction)) in qos.parameters.iter().zip(&qos.directions).enumerate() {
        if qos.parameters[..i].contains(name) {
            return Err(invalid(
                format!("qos.parameters[{i}]"),
                format!("duplicate parameter `{name}`"),
            ));
        }
        let direction = match direction.as_str() {
            "decreasing" => Direction::Decreasing,
            "increasing" => Direction::Increasing,
            other => {
                return Err(invalid(
                    format!("qos.directions[{i}]"),
                    format!("expected \"decreasing\" or \"increasing\", got \"{other}\""),
                ))
            }
        };
        columns.push(QosColumn { name: name.clone(), direction });
    }
    if qos.mixes.is_empty() {
        return Err(invalid("qos.mixes", "must define at least one weight mix"));
    }
    let mut mixes = Vec::with_capacity(qos.mixes.len());
    for (j, mix) in qos.mixes.iter().enumerate() {
        if qos.mixes[..j].iter().any(|m| m.name == mix.name) {
            return Err(invalid(
                format!("qos.mixes[{j}].name"),
                format!("duplicate mix name `{}`", mix.name),
            ));
        }
        if mix.alphas.len() != qos.parameters.len() {
            return Err(invalid(
                format!("qos.mixes[{j}].alphas"),
                format!(
                    "expected one weight per parameter ({}), got {}",
                    qos.parameters.len(),
                    mix.alphas.len()
                ),
            ));
        }
        let trial = noccalc::qos::QosConfig {
            k: qos.k,
            parameters: columns
                .iter()
                .zip(&mix.alphas)
                .map(|(c, &alpha)| noccalc::qos::QosParameter {
                    name: c.name.clone(),
                    direction: c.direction,
                    weight: alpha,
                    samples: Vec::new(),
                })
                .collect(),
        };
        validate_weights(&trial).map_err(|e| {
            let field = match e {
                noccalc::qos::QosError::EfficiencyBelowOne { .. } => "qos.k".to_string(),
                _ => format!("qos.mixes[{j}].alphas"),
            };
            invalid(field, e)
        })?;
        mixes.push(QosMix { name: mix.name.clone(), alphas: mix.alphas.clone() });
    }
    Ok(QosSpec { k: qos.k, columns, mixes })
}

fn invalid(field: impl Into<String>, reason: impl fmt::Display) -> ConfigError {
    ConfigError::Invalid { field: field.into(), reason: reason.to_string() }
}

/// Configuration loading or validation failure.
#[derive(Debug)]
pub enum ConfigError {
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    Parse {
        path: PathBuf,
        message: String,
    },
    Invalid {
        field: String,
        reason: String,
    },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Io { path, source } => {
                write!(f, "cannot read config {}: {source}", path.display())
            }
            Self::Parse { path, message } => {
                write!(f, "config parse error in {}: {message}", path.display())
            }
            Self::Invalid { field, reason } => {
                write!(f, "invalid config field `{field}`: {reason}")
            }
        }
    }
}

impl Error for ConfigError {}

//! Prioritization-weighted quality-of-service scoring.
//!
//! A sweep produces, per swept control value (e.g. buffer size), raw
//! measurements of several parameters (e.g. packet loss, end-to-end delay).
//! Each parameter is min-max normalized over the sweep with an efficiency
//! coefficient `k ≥ 1`, mapping its best extreme to `1/k` and its worst to
//! `0`; the per-parameter [`Direction`] states which extreme is which. The
//! overall score at a control value is the weighted sum
//! `Q = Σ alpha_i · p_norm_i` with weights `alpha_i ∈ [0, 1]` summing to 1,
//! so every `Q` lies in `[0, 1/k]`.
//!
//! Normalization cancels scale and shift: applying `p → a·p + b` (`a > 0`)
//! to a parameter's raw samples leaves its normalized series unchanged. A
//! parameter whose samples are all equal carries no information across the
//! sweep; its normalized series is defined as all zeros and flagged.

use std::error::Error;
use std::fmt;

/// Tolerance for the weight-sum constraint `Σ alpha = 1`.
const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

/// How a raw parameter moves as the swept control value increases; equally,
/// which extreme of its sample range is its best value. `Increasing` maps
/// the maximum sample to `1/k`, `Decreasing` maps the minimum sample to
/// `1/k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Increasing,
    Decreasing,
}

/// One scored parameter: its prioritization weight and its raw measurements
/// as `(control value, measurement)` pairs over the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct QosParameter {
    pub name: String,
    pub direction: Direction,
    pub weight: f64,
    pub samples: Vec<(f64, f64)>,
}

/// A full scoring problem: the efficiency coefficient and the parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct QosConfig {
    /// Efficiency coefficient `k ≥ 1`; the best possible score is `1/k`.
    pub k: f64,
    pub parameters: Vec<QosParameter>,
}

/// One parameter's normalized series over the sweep, aligned with the
/// report's control values.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedSeries {
    pub name: String,
    pub values: Vec<f64>,
    /// All raw samples were equal, so the series is all zeros by definition.
    pub degenerate: bool,
}

/// Scores over a sweep: `scores[i]` is the weighted QoS at
/// `control_values[i]`, and `normalized` holds each parameter's series for
/// plotting.
#[derive(Debug, Clone, PartialEq)]
pub struct QosReport {
    pub control_values: Vec<f64>,
    pub scores: Vec<f64>,
    pub normalized: Vec<NormalizedSeries>,
}

/// Checks the weight constraints: every `alpha_i ∈ [0, 1]`, the weights sum
/// to 1 within `1e-9`, and `k ≥ 1`.
pub fn validate_weights(config: &QosConfig) -> Result<(), QosError> {
    if !config.k.is_finite() || config.k < 1.0 {
        return Err(QosError::EfficiencyBelowOne { k: config.k });
    }
    let mut sum = 0.0;
    for param in &config.parameters {
        if !param.weight.is_finite() || !(0.0..=1.0).contains(&param.weight) {
            return Err(QosError::WeightOutOfRange {
                parameter: param.name.clone(),
                weight: param.weight,
            });
        }
        sum += param.weight;
    }
    if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
        return Err(QosError::WeightSumNotOne { sum });
    }
    Ok(())
}

/// Min-max normalizes one parameter's raw samples with coefficient `k`:
/// with `p_min`/`p_max` the sample extremes,
/// `Increasing` yields `|p − p_min| / (k·(p_max − p_min))` and `Decreasing`
/// yields `|p_max − p| / (k·(p_max − p_min))`, so the best extreme maps to
/// `1/k` and the worst to 0. Equal extremes (a degenerate range) yield all
/// zeros. The returned series is aligned with `param.samples`.
pub fn normalize(param: &QosParameter, k: f64) -> Result<Vec<f64>, QosError> {
    if !k.is_finite() || k < 1.0 {
        return Err(QosError::EfficiencyBelowOne { k });
    }
    if param.samples.is_empty() {
        return Err(QosError::EmptySamples { parameter: param.name.clone() });
    }
    let mut p_min = f64::INFINITY;
    let mut p_max = f64::NEG_INFINITY;
    for (index, &(control, value)) in param.samples.iter().enumerate() {
        if !control.is_finite() || !value.is_finite() {
            return Err(QosError::NonFiniteSample { parameter: param.name.clone(), index });
        }
        p_min = p_min.min(value);
        p_max = p_max.max(value);
    }
    let range = p_max - p_min;
    let series = param
        .samples
        .iter()
        .map(|&(_, value)| {
            if range == 0.0 {
                0.0
            } else {
                let distance_from_worst = match param.direction {
                    Direction::Increasing => (value - p_min).abs(),
                    Direction::Decreasing => (p_max - value).abs(),
                };
                (distance_from_worst / (k * range)).clamp(0.0, 1.0 / k)
            }
        })
        .collect();
    Ok(series)
}

/// The weighted score at one control value: `Σ alpha_i · p_norm_i`, each
/// parameter normalized over its whole sample set and then read at the
/// requested control value (exact match). Lies in `[0, 1/k]`.
pub fn qos_score(config: &QosConfig, control: f64) -> Result<f64, QosError> {
    validate_weights(config)?;
    let mut score = 0.0;
    for param in &config.parameters {
        let series = normalize(param, config.k)?;
        let index = param
            .samples
            .iter()
            .position(|&(c, _)| c == control)
            .ok_or_else(|| QosError::MissingSample { parameter: param.name.clone(), control })?;
        score += param.weight * series[index];
    }
    Ok(score)
}

/// Scores the whole sweep: every parameter must carry the same control-value
/// grid (same order, exact values); the result holds one weighted score per
/// control value plus each parameter's normalized series.
pub fn qos_curve(config: &QosConfig) -> Result<QosReport, QosError> {
    validate_weights(config)?;
    let first = config.parameters.first().ok_or(QosError::NoParameters)?;
    let grid: Vec<f64> = first.samples.iter().map(|&(c, _)| c).collect();
    for param in &config.parameters[1..] {
        let same = param.samples.len() == grid.len()
            && param.samples.iter().zip(&grid).all(|(&(c, _), &g)| c == g);
        if !same {
            return Err(QosError::MismatchedGrids { parameter: param.name.clone() });
        }
    }
    let mut scores = vec![0.0; grid.len()];
    let mut normalized = Vec::with_capacity(config.parameters.len());
    for param in &config.parameters {
        let series = normalize(param, config.k)?;
        for (score, value) in scores.iter_mut().zip(&series) {
            *score += param.weight * value;
        }
        let degenerate =
            series.iter().all(|&v| v == 0.0) && param.samples.windows(2).all(|w| w[0].1 == w[1].1);
        normalized.push(NormalizedSeries { name: param.name.clone(), values: series, degenerate });
    }
    Ok(QosReport { control_values: grid, scores, normalized })
}

/// Errors from scoring: each names the violated constraint.
#[derive(Debug, Clone, PartialEq)]
pub enum QosError {
    EfficiencyBelowOne { k: f64 },
    WeightOutOfRange { parameter: String, weight: f64 },
    WeightSumNotOne { sum: f64 },
    EmptySamples { parameter: String },
    NonFiniteSample { parameter: String, index: usize },
    MissingSample { parameter: String, control: f64 },
    MismatchedGrids { parameter: String },
    NoParameters,
}

impl fmt::Display for QosError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::EfficiencyBelowOne { k } => {
                write!(f, "efficiency coefficient k must be finite and ≥ 1, got {k}")
            }
            Self::WeightOutOfRange { parameter, weight } => {
                write!(f, "weight of `{parameter}` must lie in [0, 1], got {weight}")
            }
            Self::WeightSumNotOne { sum } => {
                write!(f, "weights must sum to 1 within 1e-9, got {sum}")
            }
            Self::EmptySamples { parameter } => {
                write!(f, "parameter `{parameter}` has no samples")
            }
            Self::NonFiniteSample { parameter, index } => {
                write!(f, "parameter `{parameter}` sample {index} is not finite")
            }
            Self::MissingSample { parameter, control } => {
                write!(f, "parameter `{parameter}` has no sample at control value {control}")
            }
            Self::MismatchedGrids { parameter } => write!(
                f,
                "parameter `{parameter}` uses a different control-value grid than the first parameter"
            ),
            Self::NoParameters => write!(f, "at least one parameter is required"),
        }
    }
}

impl Error for QosError {}

#[cfg(test)]
mod tests {
    use super::*;

    fn param(
        name: &str,
        direction: Direction,
        weight: f64,
        samples: &[(f64, f64)],
    ) -> QosParameter {
        QosParameter {
            name: name.into(),
            direction,
            weight,
            samples: samples.to_vec(),
        }
    }

    fn grid(values: &[f64]) -> Vec<(f64, f64)> {
        values
            .iter()
            .enumerate()
            .map(|(i, &v)| (i as f64, v))
            .collect()
    }

    #[test]
    fn increasing_normalization_maps_endpoints_to_zero_and_one_over_k() {
        let p = param("p", Direction::Increasing, 1.0, &grid(&[2.0, 4.0, 6.0]));
        assert_eq!(normalize(&p, 1.0).unwrap(), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn decreasing_normalization_with_efficiency_coefficient() {
        let p = param("p", Direction::Decreasing, 1.0, &grid(&[2.0, 4.0, 6.0]));
        let series = normalize(&p, 1.1).unwrap();
        assert!((series[0] - 1.0 / 1.1).abs() < 1e-12);
        assert!((series[1] - 0.5 / 1.1).abs() < 1e-12);
        assert_eq!(series[2], 0.0);
    }

    #[test]
    fn constant_samples_normalize_to_zero() {
        let p = param("p", Direction::Increasing, 1.0, &grid(&[5.0, 5.0, 5.0]));
        assert_eq!(normalize(&p, 1.1).unwrap(), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn normalize_rejects_empty_and_non_finite_samples() {
        let empty = param("p", Direction::Increasing, 1.0, &[]);
        assert!(matches!(
            normalize(&empty, 1.0),
            Err(QosError::EmptySamples { .. })
        ));
        let bad = param("p", Direction::Increasing, 1.0, &[(0.0, f64::NAN)]);
        assert!(matches!(
            normalize(&bad, 1.0),
            Err(QosError::NonFiniteSample { index: 0, .. })
        ));
        let p = param("p", Direction::Increasing, 1.0, &grid(&[1.0]));
        assert!(matches!(
            normalize(&p, 0.9),
            Err(QosError::EfficiencyBelowOne { .. })
        ));
    }

    #[test]
    fn weight_validation_accepts_unit_sums_and_names_violations() {
        let ok = QosConfig {
            k: 1.1,
            parameters: vec![
                param("a", Direction::Decreasing, 0.5, &grid(&[1.0])),
                param("b", Direction::Decreasing, 0.5, &grid(&[1.0])),
            ],
        };
        assert!(validate_weights(&ok).is_ok());

        let ok_uneven = QosConfig {
            k: 1.1,
            parameters: vec![
                param("a", Direction::Decreasing, 0.7, &grid(&[1.0])),
                param("b", Direction::Decreasing, 0.3, &grid(&[1.0])),
            ],
        };
        assert!(validate_weights(&ok_uneven).is_ok());

        let bad_sum = QosConfig {
            k: 1.1,
            parameters: vec![
                param("a", Direction::Decreasing, 0.6, &grid(&[1.0])),
                param("b", Direction::Decreasing, 0.6, &grid(&[1.0])),
            ],
        };
        match validate_weights(&bad_sum) {
            Err(QosError::WeightSumNotOne { sum }) => assert!((sum - 1.2).abs() < 1e-12),
            other => panic!("expected weight-sum violation, got {other:?}"),
        }

        let bad_weight = QosConfig {
            k: 1.1,
            parameters: vec![param("a", Direction::Decreasing, 1.2, &grid(&[1.0]))],
        };
        assert!(matches!(
            validate_weights(&bad_weight),
            Err(QosError::WeightOutOfRange { .. })
        ));

        let bad_k = QosConfig { k: 0.5, parameters: vec![] };
        assert!(matches!(
            validate_weights(&bad_k),
            Err(QosError::EfficiencyBelowOne { .. })
        ));
    }

    #[test]
    fn score_of_jointly_best_point_is_one_over_k() {
        // Both parameters reach their best extreme at control value 2.
        let config = QosConfig {
            k: 1.1,
            parameters: vec![
                param("loss", Direction::Decreasing, 0.5, &grid(&[9.0, 4.0, 1.0])),
                param(
                    "delay",
                    Direction::Decreasing,
                    0.5,
                    &grid(&[30.0, 20.0, 10.0]),
                ),
            ],
        };
        let best = qos_score(&config, 2.0).unwrap();
        assert!((best - 1.0 / 1.1).abs() < 1e-12);
        let worst = qos_score(&config, 0.0).unwrap();
        assert_eq!(worst, 0.0);
    }

    #[test]
    fn degenerate_weighting_reads_one_parameter_exactly() {
        let samples = grid(&[3.0, 7.0, 5.0]);
        let config = QosConfig {
            k: 1.25,
            parameters: vec![
                param("a", Direction::Increasing, 1.0, &samples),
                param("b", Direction::Decreasing, 0.0, &grid(&[1.0, 2.0, 3.0])),
            ],
        };
        let a_series = normalize(&config.parameters[0], config.k).unwrap();
        for (i, &expected) in a_series.iter().enumerate() {
            assert_eq!(qos_score(&config, i as f64).unwrap(), expected);
        }
    }

    #[test]
    fn score_errors_name_the_parameter_missing_a_sample() {
        let config = QosConfig {
            k: 1.0,
            parameters: vec![param(
                "loss",
                Direction::Decreasing,
                1.0,
                &grid(&[1.0, 2.0]),
            )],
        };
        match qos_score(&config, 99.0) {
            Err(QosError::MissingSample { parameter, control }) => {
                assert_eq!(parameter, "loss");
                assert_eq!(control, 99.0);
            }
            other => panic!("expected missing-sample error, got {other:?}"),
        }
    }

    #[test]
    fn curve_of_single_point_equals_score() {
        let config = QosConfig {
            k: 1.1,
            parameters: vec![
                param("a", Direction::Decreasing, 0.4, &[(16.0, 3.0)]),
                param("b", Direction::Increasing, 0.6, &[(16.0, 8.0)]),
            ],
        };
        let report = qos_curve(&config).unwrap();
        assert_eq!(report.control_values, vec![16.0]);
        assert_eq!(report.scores.len(), 1);
        assert_eq!(report.scores[0], qos_score(&config, 16.0).unwrap());
        // Single samples are degenerate ranges.
        assert!(report.normalized.iter().all(|s| s.degenerate));
    }

    #[test]
    fn curve_rejects_mismatched_grids() {
        let config = QosConfig {
            k: 1.0,
            parameters: vec![
                param("a", Direction::Decreasing, 0.5, &[(1.0, 0.0), (2.0, 1.0)]),
                param("b", Direction::Decreasing, 0.5, &[(1.0, 0.0), (3.0, 1.0)]),
            ],
        };
        match qos_curve(&config) {
            Err(QosError::MismatchedGrids { parameter }) => assert_eq!(parameter, "b"),
            other => panic!("expected grid mismatch, got {other:?}"),
        }
    }

    #[test]
    fn weight_swap_changes_curve_when_series_differ() {
        let a_samples = [(4.0, 10.0), (8.0, 5.0), (16.0, 1.0)];
        let b_samples = [(4.0, 100.0), (8.0, 90.0), (16.0, 0.0)];
        let make = |wa: f64, wb: f64| QosConfig {
            k: 1.1,
            parameters: vec![
                param("a", Direction::Decreasing, wa, &a_samples),
                param("b", Direction::Decreasing, wb, &b_samples),
            ],
        };
        let heavy_a = qos_curve(&make(0.8, 0.2)).unwrap();
        let heavy_b = qos_curve(&make(0.2, 0.8)).unwrap();
        assert_ne!(heavy_a.scores, heavy_b.scores);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_samples() -> impl Strategy<Value = Vec<(f64, f64)>> {
            proptest::collection::vec(-1e3f64..1e3, 1..20).prop_map(|values| {
                values
                    .into_iter()
                    .enumerate()
                    .map(|(i, v)| (i as f64, v))
                    .collect()
            })
        }

        fn arb_direction() -> impl Strategy<Value = Direction> {
            prop_oneof![Just(Direction::Increasing), Just(Direction::Decreasing)]
        }

        type Samples = Vec<(f64, f64)>;

        /// Two raw sample sets over one shared control grid.
        fn arb_sample_pair() -> impl Strategy<Value = (Samples, Samples)> {
            (1usize..20).prop_flat_map(|n| {
                let series = proptest::collection::vec(-1e3f64..1e3, n);
                (series.clone(), series).prop_map(|(a, b)| {
                    let index = |values: Vec<f64>| -> Vec<(f64, f64)> {
                        values
                            .into_iter()
                            .enumerate()
                            .map(|(i, v)| (i as f64, v))
                            .collect()
                    };
                    (index(a), index(b))
                })
            })
        }

        proptest! {
            #[test]
            fn normalized_values_stay_in_range(samples in arb_samples(),
                                               direction in arb_direction(),
                                               k in 1.0f64..5.0) {
                let p = param("p", direction, 1.0, &samples);
                for value in normalize(&p, k).unwrap() {
                    prop_assert!((0.0..=1.0 / k).contains(&value));
                }
            }

            #[test]
            fn best_and_worst_extremes_map_to_endpoints(samples in arb_samples(),
                                                        direction in arb_direction(),
                                                        k in 1.0f64..5.0) {
                let p = param("p", direction, 1.0, &samples);
                let series = normalize(&p, k).unwrap();
                let raw: Vec<f64> = samples.iter().map(|&(_, v)| v).collect();
                let lo = raw.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                prop_assume!(hi > lo);
                let (best, worst) = match direction {
                    Direction::Increasing => (hi, lo),
                    Direction::Decreasing => (lo, hi),
                };
                for (i, &(_, v)) in samples.iter().enumerate() {
                    if v == best {
                        prop_assert!((series[i] - 1.0 / k).abs() < 1e-12);
                    }
                    if v == worst {
                        prop_assert_eq!(series[i], 0.0);
                    }
                }
            }

            #[test]
            fn normalization_is_affine_invariant(samples in arb_samples(),
                                                 direction in arb_direction(),
                                                 k in 1.0f64..5.0,
                                                 scale in 0.01f64..100.0,
                                                 shift in -1e3f64..1e3) {
                let p = param("p", direction, 1.0, &samples);
                let transformed: Vec<(f64, f64)> =
                    samples.iter().map(|&(c, v)| (c, scale * v + shift)).collect();
                let q = param("p", direction, 1.0, &transformed);
                let base = normalize(&p, k).unwrap();
                let mapped = normalize(&q, k).unwrap();
                for (a, b) in base.iter().zip(&mapped) {
                    prop_assert!((a - b).abs() <= 1e-9, "base {a} vs transformed {b}");
                }
            }

            #[test]
            fn score_is_permutation_invariant((samples_a, samples_b) in arb_sample_pair(),
                                              w in 0.0f64..1.0,
                                              k in 1.0f64..5.0) {
                let a = param("a", Direction::Decreasing, w, &samples_a);
                let b = param("b", Direction::Increasing, 1.0 - w, &samples_b);
                let forward = QosConfig { k, parameters: vec![a.clone(), b.clone()] };
                let backward = QosConfig { k, parameters: vec![b, a] };
                let f = qos_curve(&forward).unwrap();
                let r = qos_curve(&backward).unwrap();
                for (x, y) in f.scores.iter().zip(&r.scores) {
                    prop_assert!((x - y).abs() <= 1e-12);
                }
            }

            #[test]
            fn score_is_linear_in_each_weight((samples_a, samples_b) in arb_sample_pair(),
                                              w in 0.0f64..1.0,
                                              k in 1.0f64..5.0) {
                let a = param("a", Direction::Decreasing, w, &samples_a);
                let b = param("b", Direction::Increasing, 1.0 - w, &samples_b);
                let na = normalize(&a, k).unwrap();
                let nb = normalize(&b, k).unwrap();
                let config = QosConfig { k, parameters: vec![a, b] };
                let report = qos_curve(&config).unwrap();
                for i in 0..report.scores.len() {
                    let expected = w * na[i] + (1.0 - w) * nb[i];
                    prop_assert!((report.scores[i] - expected).abs() <= 1e-12);
                }
            }
        }
    }
}

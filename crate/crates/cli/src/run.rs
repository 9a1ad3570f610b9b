use layerpc::analytic::{analytic_outage, outage_lower_bound, outage_upper_bound, spatial_reuse_level};
use layerpc::montecarlo::{estimate_outage, estimate_spatial_reuse};
use layerpc::schemes::two_power_region;
use layerpc::{NetworkConfig, OutageReport, PowerScheme, ReceiverModel};

use crate::error::{CliError, Result};
use crate::scheme::{prepare, OutageModel, PreparedScheme};
use crate::spec::{ExperimentSpec, Metric, SweepVariable};
use crate::table::{emit_csv, ResultTable, Row};

/// Checks the spec and builds every scheme without simulating anything.
pub fn prepare_experiment(spec: &ExperimentSpec) -> Result<Vec<PreparedScheme>> {
    let schemes: Vec<PreparedScheme> = spec
        .scheme_descriptors()?
        .iter()
        .map(|d| prepare(spec, d))
        .collect::<Result<_>>()?;
    for s in &schemes {
        network(spec, s, spec.sweep_min)?.validate().map_err(|e| core_error(&s.label, e))?;
    }
    if spec.sweep == SweepVariable::Eta1 {
        two_power_region(spec.sweep_min, 1.0 - spec.sweep_min, spec.alpha, spec.rho0)
            .map_err(|e| core_error("two-level", e))?;
    }
    Ok(schemes)
}

fn core_error(label: &str, source: layerpc::Error) -> CliError {
    CliError::Core {
        context: format!("scheme {label}"),
        source,
    }
}

fn network(spec: &ExperimentSpec, scheme: &PreparedScheme, lambda: f64) -> Result<NetworkConfig> {
    let mut cfg = NetworkConfig::new(lambda, spec.alpha, spec.beta, scheme.receivers.clone())
        .map_err(|e| core_error(&scheme.label, e))?;
    cfg.epsilon = spec.epsilon;
    cfg.gamma = spec.gamma;
    cfg.window_radius = spec.window_radius;
    Ok(cfg)
}

/// Runs the experiment, writes the CSV when `spec.out` is set and returns
/// the sorted table. Every sweep point and scheme shares `spec.seed`, so
/// comparisons use common random numbers.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ResultTable> {
    let schemes = prepare_experiment(spec)?;
    let mut table = ResultTable::default();
    for x in spec.sweep_values() {
        match spec.sweep {
            SweepVariable::Eta1 => region_rows(spec, x, &mut table.rows)?,
            SweepVariable::Lambda => {
                for s in &schemes {
                    scheme_rows(spec, s, x, &mut table.rows)?;
                }
            }
        }
    }
    table.sort();
    if let Some(path) = &spec.out {
        emit_csv(&table, path)?;
    }
    Ok(table)
}

fn region_rows(spec: &ExperimentSpec, eta1: f64, rows: &mut Vec<Row>) -> Result<()> {
    let region =
        two_power_region(eta1, 1.0 - eta1, spec.alpha, spec.rho0).map_err(|e| core_error("two-level", e))?;
    for (metric, v) in [("ratio_lower", region.lower), ("ratio_upper", region.upper)] {
        rows.push(Row::new("eta1", eta1, "two-level", metric, v, 0.0, Some(v)));
    }
    Ok(())
}

/// Whether the simulator's classes are the scheme's power levels, so the
/// per-level spatial reuse closed form applies class by class.
fn classes_are_levels(s: &PreparedScheme) -> bool {
    match s.scheme {
        PowerScheme::NoPc { .. } | PowerScheme::NLayerDpc { .. } => true,
        PowerScheme::TwoLevel { .. } => !matches!(s.receivers, ReceiverModel::Partition { .. }),
        _ => false,
    }
}

fn scheme_rows(spec: &ExperimentSpec, s: &PreparedScheme, lambda: f64, rows: &mut Vec<Row>) -> Result<()> {
    let cfg = network(spec, s, lambda)?;
    let (alpha, beta) = (spec.alpha, spec.beta);
    let mut push = |metric: &str, estimate: f64, ci: f64, analytic: Option<f64>| {
        rows.push(Row::new("lambda", lambda, &s.label, metric, estimate, ci, analytic));
    };

    let wants_outage = spec
        .metrics
        .iter()
        .any(|m| matches!(m, Metric::Outage | Metric::OutageClasses | Metric::Tc));
    let outage: Option<OutageReport> = if wants_outage {
        Some(estimate_outage(&cfg, &s.scheme, spec.trials, spec.seed).map_err(|e| core_error(&s.label, e))?)
    } else {
        None
    };
    let analytic_q = s
        .analytic_outage(lambda, beta, alpha)
        .filter(|q| outage.as_ref().is_none_or(|r| r.class_weights.len() == q.len()));

    for metric in &spec.metrics {
        match metric {
            Metric::Outage => {
                let r = outage.as_ref().expect("simulated above");
                let analytic = analytic_q.as_ref().map(|q| mix(&r.class_weights, q));
                push("outage", r.mixture.value, r.mixture.ci_halfwidth, analytic);
            }
            Metric::OutageClasses => {
                let r = outage.as_ref().expect("simulated above");
                if r.per_class.len() > 1 {
                    for (k, e) in r.per_class.iter().enumerate() {
                        let analytic = analytic_q.as_ref().map(|q| q[k]);
                        push(&format!("outage_{}", k + 1), e.value, e.ci_halfwidth, analytic);
                    }
                }
            }
            Metric::Tc => {
                let r = outage.as_ref().expect("simulated above");
                let scale = spec.gamma * lambda;
                let analytic = analytic_q.as_ref().map(|q| scale * (1.0 - mix(&r.class_weights, q)));
                push("tc", scale * (1.0 - r.mixture.value), scale * r.mixture.ci_halfwidth, analytic);
            }
            Metric::OutageBounds => {
                if let Some(OutageModel::Layers {
                    partition,
                    powers,
                    mode,
                }) = &s.outage
                {
                    if partition.is_annular() {
                        let t = analytic_outage(lambda, partition, powers, beta, alpha, *mode)
                            .map_err(|e| core_error(&s.label, e))?
                            .t;
                        let p = partition.probs();
                        let lower: f64 = (0..p.len())
                            .map(|i| p[i] * outage_lower_bound(lambda, t[i], beta, alpha, partition.inf(i)))
                            .sum();
                        let upper: f64 = (0..p.len())
                            .map(|i| {
                                p[i] * outage_upper_bound(lambda, t[i], beta, alpha, partition.inf(i), partition.sup(i))
                            })
                            .sum();
                        push("bound_lower", lower, 0.0, Some(lower));
                        push("bound_upper", upper, 0.0, Some(upper));
                    }
                }
            }
            Metric::SpatialReuse | Metric::SpatialReuseLevels => {}
            Metric::SumPower => {
                if let Some(total) = s.sum_power() {
                    push("sum_power", total, 0.0, Some(total));
                }
            }
            Metric::Region => unreachable!("rejected for lambda sweeps"),
        }
    }

    let wants_reuse = spec
        .metrics
        .iter()
        .any(|m| matches!(m, Metric::SpatialReuse | Metric::SpatialReuseLevels));
    if wants_reuse {
        let r = estimate_spatial_reuse(&cfg, &s.scheme, spec.trials, spec.seed).map_err(|e| core_error(&s.label, e))?;
        let level = |k: usize| -> Option<f64> {
            let (probs, powers) = s.levels.as_ref()?;
            spatial_reuse_level(alpha, beta, probs, powers, k.min(probs.len() - 1)).ok()
        };
        let weighted = s.levels.as_ref().and_then(|(probs, _)| {
            (0..probs.len())
                .map(|k| level(k).map(|v| probs[k] * v))
                .sum::<Option<f64>>()
        });
        if spec.metrics.contains(&Metric::SpatialReuse) {
            push("spatial_reuse", r.weighted.value, r.weighted.ci_halfwidth, weighted);
        }
        if spec.metrics.contains(&Metric::SpatialReuseLevels) && r.per_level.len() > 1 {
            let per_class = classes_are_levels(s);
            for (k, e) in r.per_level.iter().enumerate() {
                let analytic = if per_class { level(k) } else { None };
                push(&format!("spatial_reuse_{}", k + 1), e.value, e.ci_halfwidth, analytic);
            }
        }
    }
    Ok(())
}

fn mix(weights: &[f64], q: &[f64]) -> f64 {
    weights.iter().zip(q).map(|(w, q)| w * q).sum()
}

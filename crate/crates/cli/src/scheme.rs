//! Scheme descriptors such as `nopc`, `fractional:0.5` or `dpc:vb:10`, and
//! their resolution into simulator inputs and closed forms.

use std::fmt;
use std::str::FromStr;

use layerpc::analytic::{analytic_outage, fixed_distance_outage, interference_factors, OutageMode};
use layerpc::optimize::{numeric_powers, powers_from_coefficients, vb_paper_coefficients, PowerDesignProblem};
use layerpc::schemes::{design_powers, DesignVariant};
use layerpc::{LayerPartition, PowerScheme, ReceiverModel};

use crate::error::{CliError, Result};
use crate::spec::{ExperimentSpec, Receivers};

/// How an N-layer DPC scheme chooses its powers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DpcDesign {
    /// `P_i` proportional to `r_i^alpha` at discrete locations.
    Thm5,
    /// `P_i` proportional to `(b_i^2 + a_i^2)^(alpha/2)`.
    Thm3Lower,
    /// `P_i` proportional to `a_i^alpha`.
    Thm3Upper,
    /// Cluster-uniform coefficients `(3/2)(2i-1)(i-1)^2` with the first
    /// coefficient set to 1/2.
    Vb(Option<usize>),
    /// Least total power subject to the DPC condition at `rho0`.
    Optimal(Option<usize>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SchemeDescriptor {
    NoPc,
    Inversion,
    Fractional(f64),
    TwoLevel { ratio: f64, eta1: f64 },
    Dpc(DpcDesign),
}

impl FromStr for SchemeDescriptor {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || CliError::config(format!("unknown scheme {s:?}"));
        let num = |x: &str| x.parse::<f64>().map_err(|_| bad());
        let count = |x: &str| match x.parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(bad()),
        };
        let parts: Vec<&str> = s.split(':').collect();
        Ok(match parts.as_slice() {
            ["nopc"] => SchemeDescriptor::NoPc,
            ["inversion"] => SchemeDescriptor::Inversion,
            ["fractional", e] => SchemeDescriptor::Fractional(num(e)?),
            ["two-level", r, eta] => SchemeDescriptor::TwoLevel {
                ratio: num(r)?,
                eta1: num(eta)?,
            },
            ["dpc", "thm5"] => SchemeDescriptor::Dpc(DpcDesign::Thm5),
            ["dpc", "thm3-lower"] => SchemeDescriptor::Dpc(DpcDesign::Thm3Lower),
            ["dpc", "thm3-upper"] => SchemeDescriptor::Dpc(DpcDesign::Thm3Upper),
            ["dpc", "vb"] => SchemeDescriptor::Dpc(DpcDesign::Vb(None)),
            ["dpc", "vb", n] => SchemeDescriptor::Dpc(DpcDesign::Vb(Some(count(n)?))),
            ["dpc", "optimal"] => SchemeDescriptor::Dpc(DpcDesign::Optimal(None)),
            ["dpc", "optimal", n] => SchemeDescriptor::Dpc(DpcDesign::Optimal(Some(count(n)?))),
            _ => return Err(bad()),
        })
    }
}

impl fmt::Display for SchemeDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchemeDescriptor::NoPc => write!(f, "nopc"),
            SchemeDescriptor::Inversion => write!(f, "inversion"),
            SchemeDescriptor::Fractional(e) => write!(f, "fractional:{e}"),
            SchemeDescriptor::TwoLevel { ratio, eta1 } => write!(f, "two-level:{ratio}:{eta1}"),
            SchemeDescriptor::Dpc(d) => match d {
                DpcDesign::Thm5 => write!(f, "dpc:thm5"),
                DpcDesign::Thm3Lower => write!(f, "dpc:thm3-lower"),
                DpcDesign::Thm3Upper => write!(f, "dpc:thm3-upper"),
                DpcDesign::Vb(None) => write!(f, "dpc:vb"),
                DpcDesign::Vb(Some(n)) => write!(f, "dpc:vb:{n}"),
                DpcDesign::Optimal(None) => write!(f, "dpc:optimal"),
                DpcDesign::Optimal(Some(n)) => write!(f, "dpc:optimal:{n}"),
            },
        }
    }
}

/// Closed-form outage available for a prepared scheme.
#[derive(Debug, Clone)]
pub enum OutageModel {
    /// Fixed link distance with per-class interference factors `T_k`.
    Fixed { distance: f64, t: Vec<f64> },
    /// Layered receivers; `NoPc` or `Exact` closed forms.
    Layers {
        partition: LayerPartition,
        powers: Vec<f64>,
        mode: OutageMode,
    },
}

/// A scheme ready for simulation, with whatever closed forms apply to it.
#[derive(Debug, Clone)]
pub struct PreparedScheme {
    pub label: String,
    pub scheme: PowerScheme,
    pub receivers: ReceiverModel,
    pub outage: Option<OutageModel>,
    /// `(class probabilities, powers)` of interferers for the spatial reuse
    /// closed form.
    pub levels: Option<(Vec<f64>, Vec<f64>)>,
}

impl PreparedScheme {
    /// Per-class closed-form outage at `lambda`.
    pub fn analytic_outage(&self, lambda: f64, beta: f64, alpha: f64) -> Option<Vec<f64>> {
        match self.outage.as_ref()? {
            OutageModel::Fixed { distance, t } => t
                .iter()
                .map(|&ti| fixed_distance_outage(lambda, ti, beta, alpha, *distance).ok())
                .collect(),
            OutageModel::Layers {
                partition,
                powers,
                mode,
            } => analytic_outage(lambda, partition, powers, beta, alpha, *mode).ok().map(|a| a.q),
        }
    }

    /// Sum of the transmit power levels, for DPC designs.
    pub fn sum_power(&self) -> Option<f64> {
        match &self.scheme {
            PowerScheme::NLayerDpc { powers, .. } => Some(powers.iter().sum()),
            _ => None,
        }
    }
}

fn cluster_partition(spec: &ExperimentSpec, n: usize) -> layerpc::Result<LayerPartition> {
    if spec.inner_radius > 0.0 {
        LayerPartition::equal_width_annulus(spec.inner_radius, spec.s, n)
    } else {
        LayerPartition::equal_width(spec.s, n)
    }
}

/// Resolves a descriptor against the experiment's geometry.
pub fn prepare(spec: &ExperimentSpec, descriptor: &SchemeDescriptor) -> Result<PreparedScheme> {
    let label = descriptor.to_string();
    let core = |e: layerpc::Error| CliError::Core {
        context: format!("scheme {label}"),
        source: e,
    };
    let design = |e: layerpc::Error| CliError::from_design(&label, e);
    let alpha = spec.alpha;

    let base_receivers = || -> Result<(ReceiverModel, Option<LayerPartition>)> {
        Ok(match spec.receivers {
            Receivers::Fixed => (
                ReceiverModel::Fixed {
                    distance: spec.distance.expect("checked when parsing"),
                },
                None,
            ),
            Receivers::Cluster if spec.inner_radius == 0.0 => (ReceiverModel::UniformDisk { radius: spec.s }, None),
            Receivers::Cluster => {
                let p = cluster_partition(spec, 1).map_err(core)?;
                (ReceiverModel::Partition { partition: p.clone() }, Some(p))
            }
            Receivers::Locations => {
                let p = LayerPartition::discrete(spec.s, spec.locations.clone()).map_err(core)?;
                (ReceiverModel::Partition { partition: p.clone() }, Some(p))
            }
        })
    };
    let unit_layers = |p: &LayerPartition| OutageModel::Layers {
        partition: p.clone(),
        powers: vec![1.0; p.n_layers()],
        mode: OutageMode::NoPc,
    };

    let prepared = match *descriptor {
        SchemeDescriptor::NoPc => {
            let (receivers, partition) = base_receivers()?;
            let outage = match (&receivers, partition) {
                (ReceiverModel::Fixed { distance }, _) => Some(OutageModel::Fixed {
                    distance: *distance,
                    t: interference_factors(&[1.0], &[1.0], alpha).map_err(core)?,
                }),
                (_, Some(p)) => Some(unit_layers(&p)),
                (_, None) => Some(unit_layers(&LayerPartition::equal_width(spec.s, 1).map_err(core)?)),
            };
            PreparedScheme {
                label: label.clone(),
                scheme: PowerScheme::no_pc(1.0).map_err(core)?,
                receivers,
                outage,
                levels: Some((vec![1.0], vec![1.0])),
            }
        }
        SchemeDescriptor::Inversion | SchemeDescriptor::Fractional(_) => {
            let scheme = match *descriptor {
                SchemeDescriptor::Fractional(e) => PowerScheme::fractional(e).map_err(core)?,
                _ => PowerScheme::ChannelInversion,
            };
            PreparedScheme {
                label: label.clone(),
                scheme,
                receivers: base_receivers()?.0,
                outage: None,
                levels: None,
            }
        }
        SchemeDescriptor::TwoLevel { ratio, eta1 } => {
            let scheme = PowerScheme::two_level(ratio, eta1).map_err(core)?;
            let (probs, powers) = (vec![eta1, 1.0 - eta1], vec![ratio, 1.0]);
            let (receivers, _) = base_receivers()?;
            // per-level closed forms need a common link distance
            let outage = match &receivers {
                ReceiverModel::Fixed { distance } => Some(OutageModel::Fixed {
                    distance: *distance,
                    t: interference_factors(&probs, &powers, alpha).map_err(core)?,
                }),
                _ => None,
            };
            PreparedScheme {
                label: label.clone(),
                scheme,
                receivers,
                outage,
                levels: Some((probs, powers)),
            }
        }
        SchemeDescriptor::Dpc(d) => {
            let partition = match d {
                DpcDesign::Thm5 => {
                    if spec.receivers != Receivers::Locations {
                        return Err(CliError::config(format!("{label} needs location receivers")));
                    }
                    LayerPartition::discrete(spec.s, spec.locations.clone()).map_err(core)?
                }
                _ => {
                    if spec.receivers != Receivers::Cluster {
                        return Err(CliError::config(format!("{label} needs cluster receivers")));
                    }
                    let n = match d {
                        DpcDesign::Vb(Some(n)) | DpcDesign::Optimal(Some(n)) => n,
                        _ => spec.layers,
                    };
                    if d == DpcDesign::Thm3Upper && spec.inner_radius == 0.0 {
                        // the lower-bound design needs a first layer away from the origin
                        LayerPartition::equal_width_annulus(spec.s / (10 * n) as f64, spec.s, n).map_err(core)?
                    } else {
                        cluster_partition(spec, n).map_err(core)?
                    }
                }
            };
            let probs = partition.probs().to_vec();
            let powers = match d {
                DpcDesign::Thm5 => design_powers(&partition, alpha, DesignVariant::Thm5, 1.0).map_err(design)?,
                DpcDesign::Thm3Lower => {
                    design_powers(&partition, alpha, DesignVariant::Thm3Lower, 1.0).map_err(design)?
                }
                DpcDesign::Thm3Upper => {
                    design_powers(&partition, alpha, DesignVariant::Thm3Upper, 1.0).map_err(design)?
                }
                DpcDesign::Vb(_) => {
                    powers_from_coefficients(&vb_paper_coefficients(partition.n_layers(), true), &probs, alpha)
                }
                DpcDesign::Optimal(_) => {
                    let problem = PowerDesignProblem::new(probs.clone(), alpha, spec.rho0).map_err(core)?;
                    numeric_powers(&problem).map_err(design)?.powers
                }
            };
            PreparedScheme {
                label: label.clone(),
                scheme: PowerScheme::n_layer(powers.clone(), partition.clone()).map_err(core)?,
                receivers: ReceiverModel::Partition {
                    partition: partition.clone(),
                },
                outage: Some(OutageModel::Layers {
                    partition,
                    powers: powers.clone(),
                    mode: OutageMode::Exact,
                }),
                levels: Some((probs, powers)),
            }
        }
    };
    Ok(prepared)
}

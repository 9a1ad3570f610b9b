//! Layered discrete power control for Poisson-clustered wireless ad hoc
//! networks: point-process geometry, Rayleigh/SIR channel model, power-control
//! schemes, closed-form outage and capacity results, power design, and a
//! deterministic parallel Monte Carlo engine that checks them.

pub mod analytic;
pub mod channel;
pub mod error;
pub mod geometry;
pub mod montecarlo;
pub mod optimize;
pub mod rng;
pub mod schemes;
pub mod stats;

pub use analytic::{
    kappa_alpha, AnalyticOutage, ContentionBounds, ImprovementCheck, OutageMode, TcModel, TcParams,
    TcResult,
};
pub use channel::{estimate_rho0, InterferenceField, LinkDraw, MarkedPoint, Rho0Estimate};
pub use error::{Error, InfeasibilityCertificate, Result};
pub use geometry::{ClusterSpec, LayerPartition, PartitionKind, PartitionRule, Point, PointSet};
pub use montecarlo::{
    NetworkConfig, OutageReport, PointSample, ReceiverModel, SpatialReuseReport, TcReport,
};
pub use optimize::{
    CoefficientRule, ConstraintForm, DesignResult, NPartitionRule, Normalization, OptimalN,
    PowerDesignProblem,
};
pub use schemes::{ConditionReport, DesignVariant, PowerRatioRegion, PowerScheme};
pub use stats::{Estimate, Moments};

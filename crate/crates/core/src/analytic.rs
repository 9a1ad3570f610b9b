//! Closed-form outage probabilities, contention-intensity bounds,
//! transmission capacities and spatial-reuse expressions.
//!
//! All outage expressions share the Rayleigh/PPP success probability
//! `exp(-lambda * T * beta^(2/alpha) * r^2)`, where `T` is the interference
//! factor of the receiver's layer. `beta^(2/alpha)` is computed once per call
//! and threaded through the helpers.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;
use std::f64::consts::PI;

use crate::error::{
    ensure_finite, ensure_path_loss, ensure_positive, ensure_probability_open, invalid, Error,
    Result,
};
use crate::geometry::LayerPartition;

/// `kappa_alpha = pi Gamma(1 + 2/alpha) Gamma(1 - 2/alpha)`, evaluated through
/// the reflection identity `(2 pi^2 / alpha) / sin(2 pi / alpha)`.
pub fn kappa_alpha(alpha: f64) -> Result<f64> {
    ensure_path_loss(alpha)?;
    let d = 2.0 / alpha;
    Ok(PI * PI * d / (PI * d).sin())
}

/// The same constant through the Gamma product.
pub fn kappa_alpha_gamma(alpha: f64) -> Result<f64> {
    ensure_path_loss(alpha)?;
    let d = 2.0 / alpha;
    Ok(PI * gamma(1.0 + d) * gamma(1.0 - d))
}

fn check_probs_powers(probs: &[f64], powers: &[f64]) -> Result<()> {
    if probs.is_empty() || probs.len() != powers.len() {
        return Err(invalid(format!(
            "need one power per probability, got {} probabilities and {} powers",
            probs.len(),
            powers.len()
        )));
    }
    for &p in powers {
        ensure_positive("power", p)?;
    }
    for &e in probs {
        ensure_finite("probability", e)?;
        if e < 0.0 {
            return Err(invalid("probabilities must be non-negative"));
        }
    }
    Ok(())
}

/// `T_i = kappa * sum_j eta_j (P_j / P_i)^(2/alpha)` for every level `i`.
pub fn interference_factors(probs: &[f64], powers: &[f64], alpha: f64) -> Result<Vec<f64>> {
    check_probs_powers(probs, powers)?;
    let kappa = kappa_alpha(alpha)?;
    let d = 2.0 / alpha;
    let weighted: f64 = probs.iter().zip(powers).map(|(e, p)| e * p.powf(d)).sum();
    Ok(powers.iter().map(|p| kappa * weighted / p.powf(d)).collect())
}

/// Which outage expression to evaluate for an annular layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutageMode {
    /// Area-uniform average over the layer.
    Exact,
    /// First-order expansion in `lambda`.
    SmallLambda,
    /// No power control: `T_i = kappa`.
    NoPc,
}

/// Per-layer outage with its interference factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticOutage {
    pub q: Vec<f64>,
    pub t: Vec<f64>,
    pub scheme: String,
}

impl AnalyticOutage {
    /// `sum_i eta_i q_i`.
    pub fn average(&self, probs: &[f64]) -> f64 {
        probs.iter().zip(&self.q).map(|(e, q)| e * q).sum()
    }

    pub fn max(&self) -> f64 {
        self.q.iter().copied().fold(0.0, f64::max)
    }
}

/// `1 - E[exp(-x R^2) | R uniform by area on (a, b]]`.
fn annulus_outage(x: f64, a: f64, b: f64) -> f64 {
    let (a2, b2) = (a * a, b * b);
    if x == 0.0 {
        return 0.0;
    }
    let xa = x * a2;
    let w = x * (b2 - a2);
    // exp(-xa) (1 - exp(-w)) / w, with expm1 for small w
    let success = (-xa).exp() * (-(-w).exp_m1()) / w;
    (1.0 - success).clamp(0.0, 1.0)
}

fn layer_factor(partition: &LayerPartition, powers: &[f64], alpha: f64, layer: usize, mode: OutageMode) -> Result<f64> {
    match mode {
        OutageMode::NoPc => kappa_alpha(alpha),
        _ => {
            if powers.len() != partition.n_layers() {
                return Err(invalid(format!(
                    "partition has {} layers but {} powers were given",
                    partition.n_layers(),
                    powers.len()
                )));
            }
            Ok(interference_factors(partition.probs(), powers, alpha)?[layer])
        }
    }
}

/// Average outage of layer `layer` (zero-based) when receivers are uniform
/// by area within the layers.
pub fn layer_outage_uniform(
    lambda: f64,
    partition: &LayerPartition,
    powers: &[f64],
    beta: f64,
    alpha: f64,
    layer: usize,
    mode: OutageMode,
) -> Result<f64> {
    if !partition.is_annular() {
        return Err(invalid("layer_outage_uniform requires an annular-uniform partition"));
    }
    ensure_finite("lambda", lambda)?;
    if lambda < 0.0 {
        return Err(invalid("lambda must be non-negative"));
    }
    ensure_positive("beta", beta)?;
    if layer >= partition.n_layers() {
        return Err(invalid(format!("layer {layer} out of range")));
    }
    let t = layer_factor(partition, powers, alpha, layer, mode)?;
    let bp = beta.powf(2.0 / alpha);
    let (a, b) = (partition.inf(layer), partition.sup(layer));
    let x = lambda * t * bp;
    Ok(match mode {
        OutageMode::SmallLambda => 0.5 * x * (b * b + a * a),
        OutageMode::Exact | OutageMode::NoPc => {
            if b == a {
                1.0 - (-x * a * a).exp()
            } else {
                annulus_outage(x, a, b)
            }
        }
    })
}

/// Per-layer outage for either partition kind: the area-uniform average for
/// annular layers and the fixed-distance expression for discrete locations.
pub fn analytic_outage(
    lambda: f64,
    partition: &LayerPartition,
    powers: &[f64],
    beta: f64,
    alpha: f64,
    mode: OutageMode,
) -> Result<AnalyticOutage> {
    let n = partition.n_layers();
    let t: Vec<f64> = (0..n)
        .map(|i| layer_factor(partition, powers, alpha, i, mode))
        .collect::<Result<_>>()?;
    let q = match partition.radii() {
        Some(radii) => radii
            .iter()
            .zip(&t)
            .map(|(&r, &ti)| fixed_distance_outage(lambda, ti, beta, alpha, r))
            .collect::<Result<_>>()?,
        None => (0..n)
            .map(|i| layer_outage_uniform(lambda, partition, powers, beta, alpha, i, mode))
            .collect::<Result<_>>()?,
    };
    let scheme = match mode {
        OutageMode::NoPc => "no-pc",
        OutageMode::Exact => "dpc",
        OutageMode::SmallLambda => "dpc-small-lambda",
    };
    Ok(AnalyticOutage {
        q,
        t,
        scheme: scheme.to_string(),
    })
}

/// `1 - exp(-lambda T beta^(2/alpha) r^2)`.
pub fn fixed_distance_outage(lambda: f64, t: f64, beta: f64, alpha: f64, r: f64) -> Result<f64> {
    ensure_path_loss(alpha)?;
    ensure_positive("beta", beta)?;
    ensure_finite("lambda", lambda)?;
    ensure_finite("T", t)?;
    ensure_finite("r", r)?;
    if r < 0.0 || lambda < 0.0 || t < 0.0 {
        return Err(invalid("lambda, T and r must be non-negative"));
    }
    Ok(-(-lambda * t * beta.powf(2.0 / alpha) * r * r).exp_m1())
}

/// Upper bound from `1 - e^-x <= x`: `lambda T beta^(2/alpha) (b^2 + a^2) / 2`.
pub fn outage_upper_bound(lambda: f64, t: f64, beta: f64, alpha: f64, a: f64, b: f64) -> f64 {
    0.5 * lambda * t * beta.powf(2.0 / alpha) * (b * b + a * a)
}

/// Lower bound from `1 - e^-x >= x / (1 + x)`: `y / (1 + y)` with
/// `y = lambda T beta^(2/alpha) a^2`.
pub fn outage_lower_bound(lambda: f64, t: f64, beta: f64, alpha: f64, a: f64) -> f64 {
    let y = lambda * t * beta.powf(2.0 / alpha) * a * a;
    y / (1.0 + y)
}

/// Bounds on the maximum contention intensity of an annular partition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContentionBounds {
    /// Achieved by the balanced (sup^2 + inf^2) power ratios.
    pub lower: f64,
    /// Attainable upper limit, achieved by the inf-radius power ratios.
    /// `+inf` when every layer starts at the origin.
    pub upper: f64,
    pub upper_is_finite: bool,
}

/// `lambda_lower = 2 eps A / (kappa beta^(2/alpha) sum(b^4 - a^4))` and
/// `lambda_upper = eps A / ((1 - eps) kappa beta^(2/alpha) sum(b^2 a^2 - a^4))`,
/// with `A = s^2 - inf(L_1)^2` the normalizer of the layer probabilities.
pub fn contention_bounds(
    partition: &LayerPartition,
    epsilon: f64,
    beta: f64,
    alpha: f64,
) -> Result<ContentionBounds> {
    if !partition.is_annular() {
        return Err(invalid("contention bounds require an annular-uniform partition"));
    }
    ensure_probability_open("epsilon", epsilon)?;
    ensure_positive("beta", beta)?;
    let kb = kappa_alpha(alpha)? * beta.powf(2.0 / alpha);
    let area = partition.area_factor();
    let n = partition.n_layers();
    let quartic: f64 = (0..n)
        .map(|j| partition.sup(j).powi(4) - partition.inf(j).powi(4))
        .sum();
    let mixed: f64 = (0..n)
        .map(|j| {
            let (a, b) = (partition.inf(j), partition.sup(j));
            b * b * a * a - a.powi(4)
        })
        .sum();
    let lower = 2.0 * epsilon * area / (kb * quartic);
    let (upper, finite) = if mixed > 0.0 {
        (epsilon * area / ((1.0 - epsilon) * kb * mixed), true)
    } else {
        (f64::INFINITY, false)
    };
    Ok(ContentionBounds {
        lower,
        upper,
        upper_is_finite: finite,
    })
}

/// Transmission-capacity parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TcParams {
    pub epsilon: f64,
    pub beta: f64,
    pub gamma: f64,
    pub alpha: f64,
}

impl TcParams {
    pub fn new(epsilon: f64, beta: f64, gamma: f64, alpha: f64) -> Result<Self> {
        let p = TcParams {
            epsilon,
            beta,
            gamma,
            alpha,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_probability_open("epsilon", self.epsilon)?;
        ensure_positive("beta", self.beta)?;
        ensure_positive("gamma", self.gamma)?;
        ensure_path_loss(self.alpha)
    }

    /// `kappa_alpha * beta^(2/alpha)`.
    fn kappa_beta(&self) -> Result<f64> {
        Ok(kappa_alpha(self.alpha)? * self.beta.powf(2.0 / self.alpha))
    }
}

/// Closed-form capacity models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TcModel {
    /// Optimal DPC with discrete receiver locations, `P_i ~ r_i^alpha`.
    Thm5 { radii: Vec<f64>, probs: Vec<f64> },
    /// Lower bound for the uniform cluster with equal-width layers.
    VbLower { s: f64 },
    /// Upper bound for the uniform cluster with `n > 1` equal-width layers.
    VbUpper { s: f64, n: usize },
    /// No power control with discrete receiver locations.
    NpcDiscrete { radii: Vec<f64>, probs: Vec<f64> },
    /// No power control with every receiver at the worst-case distance `s`.
    NpcWorstCase { s: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TcResult {
    pub max_contention: f64,
    pub capacity: f64,
}

fn check_discrete(radii: &[f64], probs: &[f64]) -> Result<()> {
    if radii.is_empty() || radii.len() != probs.len() {
        return Err(invalid("need one probability per discrete radius"));
    }
    if radii.windows(2).any(|w| w[0] >= w[1]) || radii[0] <= 0.0 {
        return Err(invalid("radii must be positive and strictly increasing"));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > 1e-12 || probs.iter().any(|&p| p <= 0.0) {
        return Err(invalid(format!("probabilities must be positive and sum to 1 (sum = {sum})")));
    }
    Ok(())
}

fn weighted_r2(radii: &[f64], probs: &[f64]) -> f64 {
    radii.iter().zip(probs).map(|(r, e)| e * r * r).sum()
}

/// Maximum contention intensity and transmission capacity in closed form.
pub fn tc_closed_form(params: &TcParams, model: &TcModel) -> Result<TcResult> {
    params.validate()?;
    let kb = params.kappa_beta()?;
    let eps = params.epsilon;
    let log_term = -(-eps).ln_1p();
    let tc = |lambda: f64, factor: f64| TcResult {
        max_contention: lambda,
        capacity: params.gamma * lambda * factor,
    };
    match model {
        TcModel::Thm5 { radii, probs } => {
            check_discrete(radii, probs)?;
            let lambda = log_term / (kb * weighted_r2(radii, probs));
            Ok(tc(lambda, 1.0 - eps))
        }
        TcModel::VbLower { s } => {
            ensure_positive("s", *s)?;
            let lambda = 2.0 * eps / (kb * s * s);
            Ok(tc(lambda, 1.0 - eps))
        }
        TcModel::VbUpper { s, n } => {
            ensure_positive("s", *s)?;
            if *n <= 1 {
                return Err(invalid("the upper capacity bound needs N > 1"));
            }
            let nf = *n as f64;
            let shape = 1.0 - 4.0 / (3.0 * nf) + 1.0 / (3.0 * nf.powi(3));
            let capacity = 2.0 * params.gamma * eps / (kb * s * s * shape);
            Ok(TcResult {
                max_contention: capacity / (params.gamma * (1.0 - eps)),
                capacity,
            })
        }
        TcModel::NpcDiscrete { radii, probs } => {
            check_discrete(radii, probs)?;
            let rn = *radii.last().expect("non-empty");
            let lambda = log_term / (kb * rn * rn);
            let success: f64 = radii
                .iter()
                .zip(probs)
                .map(|(r, e)| e * (1.0 - eps).powf(r * r / (rn * rn)))
                .sum();
            Ok(tc(lambda, success))
        }
        TcModel::NpcWorstCase { s } => {
            ensure_positive("s", *s)?;
            let lambda = log_term / (kb * s * s);
            Ok(tc(lambda, 1.0 - eps))
        }
    }
}

/// No-PC worst-case capacity with `-ln(1 - eps)` replaced by `eps`:
/// `gamma eps (1 - eps) / (kappa beta^(2/alpha) s^2)`.
pub fn no_pc_tc_small_epsilon(params: &TcParams, s: f64) -> Result<f64> {
    params.validate()?;
    ensure_positive("s", s)?;
    Ok(params.gamma * params.epsilon * (1.0 - params.epsilon) / (params.kappa_beta()? * s * s))
}

/// Leading-order no-PC worst-case capacity `gamma eps / (kappa beta^(2/alpha) s^2)`.
pub fn no_pc_tc_first_order(params: &TcParams, s: f64) -> Result<f64> {
    params.validate()?;
    ensure_positive("s", s)?;
    Ok(params.gamma * params.epsilon / (params.kappa_beta()? * s * s))
}

/// Both sides of the capacity-improvement condition for discrete locations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImprovementCheck {
    /// `r_N^2 / sum eta_i r_i^2`
    pub lhs: f64,
    /// `sum eta_i (1 - eps)^(r_i^2 / r_N^2 - 1)`
    pub rhs: f64,
    pub holds: bool,
}

/// Whether optimal DPC strictly beats no power control in capacity.
pub fn tc_improvement_condition(radii: &[f64], probs: &[f64], epsilon: f64) -> Result<ImprovementCheck> {
    check_discrete(radii, probs)?;
    ensure_probability_open("epsilon", epsilon)?;
    let rn2 = radii.last().expect("non-empty").powi(2);
    let lhs = rn2 / weighted_r2(radii, probs);
    let rhs = radii
        .iter()
        .zip(probs)
        .map(|(r, e)| e * (1.0 - epsilon).powf(r * r / rn2 - 1.0))
        .sum();
    Ok(ImprovementCheck {
        lhs,
        rhs,
        holds: lhs > rhs,
    })
}

/// `pi lambda Gamma(1 + 2/alpha) beta^(-2/alpha) ((alpha - 2) / (2 pi lambda))^(2/alpha)`,
/// the Jensen lower bound on the no-PC spatial reuse factor built from the
/// unit-exclusion mean interference.
pub fn spatial_reuse_np_lower(lambda: f64, alpha: f64, beta: f64) -> Result<f64> {
    ensure_positive("lambda", lambda)?;
    ensure_path_loss(alpha)?;
    ensure_positive("beta", beta)?;
    let d = 2.0 / alpha;
    Ok(PI * lambda * gamma(1.0 + d) * beta.powf(-d) * ((alpha - 2.0) / (2.0 * PI * lambda)).powf(d))
}

/// No-PC spatial reuse factor for an unbounded Rayleigh PPP field.
///
/// `E[I^-d] = 1 / (Gamma(1 + d) lambda kappa)` with `d = 2/alpha`, so
/// `pi lambda Gamma(1 + d) beta^-d E[I^-d] = pi beta^-d / kappa`, independent
/// of the intensity.
pub fn spatial_reuse_np(alpha: f64, beta: f64) -> Result<f64> {
    ensure_positive("beta", beta)?;
    Ok(PI * beta.powf(-2.0 / alpha) / kappa_alpha(alpha)?)
}

/// Spatial reuse factor of receivers served with power level `level` when
/// interferers pick levels with `probs`: the no-PC value scaled by `kappa / T_i`.
pub fn spatial_reuse_level(alpha: f64, beta: f64, probs: &[f64], powers: &[f64], level: usize) -> Result<f64> {
    let t = interference_factors(probs, powers, alpha)?;
    let ti = *t.get(level).ok_or_else(|| invalid(format!("level {level} out of range")))?;
    Ok(spatial_reuse_np(alpha, beta)? * kappa_alpha(alpha)? / ti)
}

/// `gamma lambda sum_i eta_i (1 - q_i)`.
pub fn throughput_density(lambda: f64, gamma_rate: f64, probs: &[f64], outage: &[f64]) -> f64 {
    gamma_rate * lambda * probs.iter().zip(outage).map(|(e, q)| e * (1.0 - q)).sum::<f64>()
}

/// Exact maximum contention intensity `sup{lambda : max_i q_i(lambda) <= eps}`
/// for a given power vector, by bisection on the closed-form outage.
pub fn max_contention_exact(
    partition: &LayerPartition,
    powers: &[f64],
    epsilon: f64,
    beta: f64,
    alpha: f64,
) -> Result<f64> {
    ensure_probability_open("epsilon", epsilon)?;
    let worst = |lambda: f64| -> Result<f64> {
        Ok(analytic_outage(lambda, partition, powers, beta, alpha, OutageMode::Exact)?.max())
    };
    let mut hi = 1e-6;
    while worst(hi)? <= epsilon {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::BracketNotFound { cap: hi });
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if worst(mid)? <= epsilon {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(lo)
}

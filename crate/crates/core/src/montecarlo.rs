//! Monte Carlo estimation of outage, spatial reuse, maximum contention
//! intensity and transmission capacity.
//!
//! Each trial places the reference receiver at the origin and draws
//! interferers from an intensity-ordered PPP on the simulation window. Every
//! interferer consumes the same random draws whatever the scheme (arrival gap,
//! position, fading towards the origin, level-selection uniform, own-link
//! fading), so estimators run with one seed share common random numbers
//! across schemes and across intensities.
//!
//! The reference link is stratified: for partitioned receivers each layer is
//! evaluated on the same interferer field, for two-level schemes each power
//! level is. Per-stratum outages are the layer/level outages; the mixture is
//! their probability-weighted average.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{path_gain, LinkDraw, MarkedPoint};
use crate::error::{
    ensure_finite, ensure_path_loss, ensure_positive, ensure_probability_open, invalid, Error,
    Result,
};
use crate::geometry::{default_window_radius, uniform_in_disc, LayerPartition, Point};
use crate::rng::{self, Purpose};
use crate::schemes::PowerScheme;
use crate::stats::{Estimate, Moments};

/// Fewest trials accepted by the estimators.
pub const MIN_TRIALS: usize = 1000;

/// Trials per sweep point unless configured otherwise.
pub const DEFAULT_TRIALS: usize = 20_000;

/// Largest intensity the contention search will expand to.
pub const MAX_CONTENTION_CAP: f64 = 1.0;

/// Where the intended receiver sits relative to its transmitter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ReceiverModel {
    /// Always at `distance`.
    Fixed { distance: f64 },
    /// Uniform by area over the disc of `radius`.
    UniformDisk { radius: f64 },
    /// Drawn from a layer partition; outage is reported per layer.
    Partition { partition: LayerPartition },
}

/// Global parameters of a simulated network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
    pub epsilon: f64,
    pub gamma: f64,
    pub receivers: ReceiverModel,
    /// Simulation window radius; the default rule is used when absent.
    pub window_radius: Option<f64>,
}

impl NetworkConfig {
    /// Config with `epsilon = 0.1`, `gamma = 1` and the default window.
    pub fn new(lambda: f64, alpha: f64, beta: f64, receivers: ReceiverModel) -> Result<Self> {
        let c = NetworkConfig {
            lambda,
            alpha,
            beta,
            epsilon: 0.1,
            gamma: 1.0,
            receivers,
            window_radius: None,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        NetworkConfig {
            lambda,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("lambda", self.lambda)?;
        if self.lambda < 0.0 {
            return Err(invalid("lambda must be non-negative"));
        }
        ensure_path_loss(self.alpha)?;
        ensure_positive("beta", self.beta)?;
        ensure_probability_open("epsilon", self.epsilon)?;
        ensure_positive("gamma", self.gamma)?;
        match &self.receivers {
            ReceiverModel::Fixed { distance } => ensure_positive("distance", *distance)?,
            ReceiverModel::UniformDisk { radius } => ensure_positive("radius", *radius)?,
            ReceiverModel::Partition { .. } => {}
        }
        self.window().map(|_| ())
    }

    /// Window radius after applying the default rule and its lower limit.
    pub fn window(&self) -> Result<f64> {
        let required = default_window_radius(self.alpha)?;
        match self.window_radius {
            None => Ok(required),
            Some(given) if given >= required => Ok(given),
            Some(given) => Err(Error::WindowTooSmall { given, required }),
        }
    }
}

/// How the reference link is stratified.
#[derive(Debug, Clone)]
enum Strata {
    Layers(LayerPartition),
    Levels(Vec<f64>, Vec<f64>),
    Single,
}

/// Validated pairing of a config and a scheme.
struct Setup<'a> {
    config: &'a NetworkConfig,
    scheme: &'a PowerScheme,
    strata: Strata,
    window: f64,
}

impl<'a> Setup<'a> {
    fn new(config: &'a NetworkConfig, scheme: &'a PowerScheme) -> Result<Self> {
        config.validate()?;
        scheme.validate()?;
        let window = config.window()?;
        let strata = match (&config.receivers, scheme) {
            (ReceiverModel::Partition { partition }, PowerScheme::NLayerDpc { partition: own, .. }) => {
                if partition != own {
                    return Err(invalid("the DPC scheme's partition differs from the receiver partition"));
                }
                Strata::Layers(partition.clone())
            }
            (_, PowerScheme::NLayerDpc { .. }) => {
                return Err(invalid("an N-layer DPC scheme needs partitioned receivers"));
            }
            (ReceiverModel::Partition { partition }, _) => Strata::Layers(partition.clone()),
            (_, PowerScheme::TwoLevel { p1, p2, eta1, eta2 }) => {
                Strata::Levels(vec![*p1, *p2], vec![*eta1, *eta2])
            }
            _ => Strata::Single,
        };
        Ok(Setup {
            config,
            scheme,
            strata,
            window,
        })
    }

    fn weights(&self) -> Vec<f64> {
        match &self.strata {
            Strata::Layers(p) => p.probs().to_vec(),
            Strata::Levels(_, w) => w.clone(),
            Strata::Single => vec![1.0],
        }
    }

    /// Reference links for every stratum of one trial.
    fn reference(&self, seed: u64, trial: u64) -> Vec<LinkDraw> {
        let mut rng = rng::stream(seed, trial, Purpose::ReferenceLink);
        // in (0, 1] so annular layers never place the receiver at the origin
        let u_dist: f64 = 1.0 - rng.random::<f64>();
        let h0: f64 = Exp1.sample(&mut rng);
        let u_sel: f64 = rng.random();
        // own-link power for schemes without a stratified level
        let own_power = self.scheme.power_for(0, h0, u_sel);
        let link = |distance: f64, power: f64| LinkDraw {
            distance,
            fading: h0,
            power,
        };
        match &self.strata {
            Strata::Layers(p) => (0..p.n_layers())
                .map(|k| {
                    let d = match p.radii() {
                        Some(r) => r[k],
                        None => {
                            let (a, b) = (p.inf(k), p.sup(k));
                            (a * a + u_dist * (b * b - a * a)).sqrt()
                        }
                    };
                    let power = match self.scheme {
                        PowerScheme::NLayerDpc { powers, .. } => powers[k],
                        _ => own_power,
                    };
                    link(d, power)
                })
                .collect(),
            Strata::Levels(levels, _) => {
                let d = self.base_distance(u_dist);
                levels.iter().map(|&p| link(d, p)).collect()
            }
            Strata::Single => vec![link(self.base_distance(u_dist), own_power)],
        }
    }

    fn base_distance(&self, u: f64) -> f64 {
        match &self.config.receivers {
            ReceiverModel::Fixed { distance } => *distance,
            ReceiverModel::UniformDisk { radius } => radius * u.sqrt(),
            ReceiverModel::Partition { .. } => unreachable!("partitioned receivers are stratified"),
        }
    }

    fn interferers(&self, seed: u64, trial: u64) -> InterfererStream<'_> {
        InterfererStream {
            rng: rng::stream(seed, trial, Purpose::Interferers),
            scheme: self.scheme,
            partition: match self.scheme {
                PowerScheme::NLayerDpc { partition, .. } => Some(partition),
                _ => None,
            },
            radius: self.window,
            area: std::f64::consts::PI * self.window * self.window,
            cumulative: 0.0,
        }
    }
}

/// One interferer with its arrival intensity and marks.
#[derive(Debug, Clone, Copy)]
struct MarkedArrival {
    intensity: f64,
    position: Point,
    fading: f64,
    power: f64,
}

struct InterfererStream<'a> {
    rng: ChaCha8Rng,
    scheme: &'a PowerScheme,
    partition: Option<&'a LayerPartition>,
    radius: f64,
    area: f64,
    cumulative: f64,
}

impl Iterator for InterfererStream<'_> {
    type Item = MarkedArrival;

    fn next(&mut self) -> Option<MarkedArrival> {
        let gap: f64 = Exp1.sample(&mut self.rng);
        self.cumulative += gap;
        let position = uniform_in_disc(&mut self.rng, self.radius);
        let fading: f64 = Exp1.sample(&mut self.rng);
        let u: f64 = self.rng.random();
        let own: f64 = Exp1.sample(&mut self.rng);
        let layer = self.partition.map_or(0, |p| p.layer_for_uniform(u));
        Some(MarkedArrival {
            intensity: self.cumulative / self.area,
            position,
            fading,
            power: self.scheme.power_for(layer, own, u),
        })
    }
}

fn check_trials(trials: usize) -> Result<()> {
    if trials < MIN_TRIALS {
        return Err(invalid(format!("need at least {MIN_TRIALS} trials, got {trials}")));
    }
    Ok(())
}

/// One simulated realization at the config's intensity.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSample {
    pub interferers: Vec<MarkedPoint>,
    /// Reference link for each stratum (layer, power level, or a single one).
    pub reference: Vec<LinkDraw>,
}

/// Draws realization `trial` exactly as the estimators see it.
pub fn sample_realization(config: &NetworkConfig, scheme: &PowerScheme, seed: u64, trial: u64) -> Result<PointSample> {
    let setup = Setup::new(config, scheme)?;
    let interferers = setup
        .interferers(seed, trial)
        .take_while(|a| a.intensity < config.lambda)
        .map(|a| MarkedPoint {
            position: a.position,
            power: a.power,
            fading: a.fading,
        })
        .collect();
    Ok(PointSample {
        interferers,
        reference: setup.reference(seed, trial),
    })
}

/// Empirical outage per stratum and for the mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutageReport {
    pub lambda: f64,
    pub scheme: String,
    /// Probabilities of the strata (layers or power levels).
    pub class_weights: Vec<f64>,
    pub per_class: Vec<Estimate>,
    /// `sum_k w_k q_k`, with the interval from the per-trial weighted indicator.
    pub mixture: Estimate,
    pub trials: u64,
    pub config: NetworkConfig,
}

impl OutageReport {
    pub fn max_outage(&self) -> f64 {
        self.per_class.iter().map(|e| e.value).fold(0.0, f64::max)
    }
}

/// Estimates `P[SIR < beta]` at the config's intensity.
pub fn estimate_outage(config: &NetworkConfig, scheme: &PowerScheme, trials: usize, seed: u64) -> Result<OutageReport> {
    check_trials(trials)?;
    let setup = Setup::new(config, scheme)?;
    let weights = setup.weights();
    let (alpha, beta, lambda) = (config.alpha, config.beta, config.lambda);

    let outcomes: Vec<Vec<bool>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let interference: f64 = setup
                .interferers(seed, t)
                .take_while(|a| a.intensity < lambda)
                .map(|a| a.power * a.fading * path_gain(a.position.norm_sq(), alpha))
                .sum();
            setup
                .reference(seed, t)
                .iter()
                .map(|l| l.signal(alpha) < beta * interference)
                .collect()
        })
        .collect();

    Ok(outage_report(config, scheme, &weights, &outcomes))
}

fn outage_report(config: &NetworkConfig, scheme: &PowerScheme, weights: &[f64], outcomes: &[Vec<bool>]) -> OutageReport {
    let n = outcomes.len() as u64;
    let per_class = (0..weights.len())
        .map(|k| Estimate::proportion(outcomes.iter().filter(|o| o[k]).count() as u64, n))
        .collect();
    let mixture: Moments = outcomes
        .iter()
        .map(|o| weights.iter().zip(o).filter(|(_, &x)| x).map(|(w, _)| w).sum::<f64>())
        .collect();
    OutageReport {
        lambda: config.lambda,
        scheme: scheme.label(),
        class_weights: weights.to_vec(),
        per_class,
        mixture: Estimate::from_moments(&mixture),
        trials: n,
        config: config.clone(),
    }
}

/// Empirical spatial reuse factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialReuseReport {
    pub lambda: f64,
    pub scheme: String,
    pub class_weights: Vec<f64>,
    /// Conditioned on each power level (or layer).
    pub per_level: Vec<Estimate>,
    pub weighted: Estimate,
    /// Unit powers on the same realizations.
    pub no_pc: Estimate,
    /// Realizations without interferers, for which the factor is unbounded;
    /// they are excluded from the averages.
    pub empty_realizations: u64,
    pub trials: u64,
}

/// `pi lambda E[(P0 H0 / (beta I0))^(2/alpha)]` from `(P0 H0, I0)` samples;
/// samples with zero interference are skipped.
pub fn spatial_reuse_from_samples(
    lambda: f64,
    alpha: f64,
    beta: f64,
    samples: impl IntoIterator<Item = (f64, f64)>,
) -> Result<Estimate> {
    ensure_path_loss(alpha)?;
    ensure_positive("beta", beta)?;
    let d = 2.0 / alpha;
    let m: Moments = samples
        .into_iter()
        .filter(|&(_, i)| i > 0.0)
        .map(|(s, i)| (s / (beta * i)).powf(d))
        .collect();
    if m.count() == 0 {
        return Err(Error::InsufficientSamples("no realization had interference".into()));
    }
    Ok(scaled(&m, std::f64::consts::PI * lambda))
}

fn scaled(m: &Moments, k: f64) -> Estimate {
    let e = Estimate::from_moments(m);
    Estimate {
        value: k * e.value,
        ci_halfwidth: k * e.ci_halfwidth,
        samples: e.samples,
    }
}

/// Estimates the spatial reuse factor per stratum, weighted, and without
/// power control, all on common realizations.
pub fn estimate_spatial_reuse(
    config: &NetworkConfig,
    scheme: &PowerScheme,
    trials: usize,
    seed: u64,
) -> Result<SpatialReuseReport> {
    check_trials(trials)?;
    let setup = Setup::new(config, scheme)?;
    let weights = setup.weights();
    let (alpha, beta, lambda) = (config.alpha, config.beta, config.lambda);
    let d = 2.0 / alpha;

    // (per-stratum values, no-PC value), or None for an empty field
    let draws: Vec<Option<(Vec<f64>, f64)>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let (mut i, mut i_np) = (0.0, 0.0);
            for a in setup.interferers(seed, t).take_while(|a| a.intensity < lambda) {
                let g = a.fading * path_gain(a.position.norm_sq(), alpha);
                i += a.power * g;
                i_np += g;
            }
            if i_np == 0.0 {
                return None;
            }
            let refs = setup.reference(seed, t);
            let h0 = refs[0].fading;
            let values = refs.iter().map(|l| (l.power * l.fading / (beta * i)).powf(d)).collect();
            Some((values, (h0 / (beta * i_np)).powf(d)))
        })
        .collect();

    let empty = draws.iter().filter(|x| x.is_none()).count() as u64;
    let kept: Vec<&(Vec<f64>, f64)> = draws.iter().flatten().collect();
    if kept.is_empty() {
        return Err(Error::InsufficientSamples(
            "every realization was empty; raise the intensity or the window".into(),
        ));
    }
    let k = std::f64::consts::PI * lambda;
    let per_level = (0..weights.len())
        .map(|c| scaled(&kept.iter().map(|(v, _)| v[c]).collect(), k))
        .collect();
    let weighted = scaled(
        &kept
            .iter()
            .map(|(v, _)| weights.iter().zip(v).map(|(w, x)| w * x).sum::<f64>())
            .collect(),
        k,
    );
    let no_pc = scaled(&kept.iter().map(|(_, x)| *x).collect(), k);
    Ok(SpatialReuseReport {
        lambda,
        scheme: scheme.label(),
        class_weights: weights,
        per_level,
        weighted,
        no_pc,
        empty_realizations: empty,
        trials: trials as u64,
    })
}

/// Empirical maximum contention intensity and transmission capacity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TcReport {
    pub lambda_eps: f64,
    /// Interval known to contain the supremum.
    pub bracket: (f64, f64),
    /// `gamma lambda_eps sum_k w_k (1 - q_k(lambda_eps))`.
    pub capacity: f64,
    pub per_class_outage: Vec<Estimate>,
    pub class_weights: Vec<f64>,
    pub trials: u64,
    pub scheme: String,
}

impl TcReport {
    pub fn max_outage(&self) -> f64 {
        self.per_class_outage.iter().map(|e| e.value).fold(0.0, f64::max)
    }
}

/// Per-trial, per-stratum critical intensities: outage holds at `lambda`
/// exactly when `lambda` exceeds the critical value. Walks stop at `cap`
/// (infinite critical value) or once every stratum is in outage.
fn critical_intensities(setup: &Setup<'_>, trials: usize, seed: u64, cap: f64) -> Vec<Vec<f64>> {
    let (alpha, beta) = (setup.config.alpha, setup.config.beta);
    (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let signals: Vec<f64> = setup.reference(seed, t).iter().map(|l| l.signal(alpha)).collect();
            let mut crit = vec![f64::INFINITY; signals.len()];
            let mut open = signals.len();
            let mut interference = 0.0;
            for a in setup.interferers(seed, t) {
                if a.intensity >= cap || open == 0 {
                    break;
                }
                interference += a.power * a.fading * path_gain(a.position.norm_sq(), alpha);
                for (c, s) in crit.iter_mut().zip(&signals) {
                    if c.is_infinite() && *s < beta * interference {
                        *c = a.intensity;
                        open -= 1;
                    }
                }
            }
            crit
        })
        .collect()
}

/// Estimates `sup{lambda : max_k q_k(lambda) <= epsilon}`.
///
/// The outage indicator of every trial is a step in `lambda`, so the
/// per-trial critical intensities determine the empirical outage curve for
/// all intensities at once. The bracket `[lo, hi]` is bisected on that curve
/// until `hi - lo <= tol * lo`. `config.lambda` seeds the initial search cap,
/// which is expanded up to [`MAX_CONTENTION_CAP`].
pub fn estimate_max_contention(
    config: &NetworkConfig,
    scheme: &PowerScheme,
    epsilon: f64,
    tol: f64,
    trials: usize,
    seed: u64,
) -> Result<TcReport> {
    check_trials(trials)?;
    ensure_probability_open("epsilon", epsilon)?;
    ensure_positive("tol", tol)?;
    let setup = Setup::new(config, scheme)?;
    let weights = setup.weights();
    let n = trials as f64;

    let mut cap = if config.lambda > 0.0 { 4.0 * config.lambda } else { 1e-4 };
    let (crit, hi) = loop {
        let crit = critical_intensities(&setup, trials, seed, cap);
        let worst = worst_outage(&crit, cap);
        if worst > epsilon {
            break (crit, cap);
        }
        if cap >= MAX_CONTENTION_CAP {
            return Err(Error::BracketNotFound { cap });
        }
        cap = (cap * 4.0).min(MAX_CONTENTION_CAP);
    };

    let mut lo = 0.0;
    let mut hi = hi;
    // f(lo) <= eps < f(hi) throughout
    while hi - lo > tol * lo {
        let mid = 0.5 * (lo + hi);
        if worst_outage(&crit, mid) <= epsilon {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }

    let per_class_outage: Vec<Estimate> = (0..weights.len())
        .map(|k| Estimate::proportion(crit.iter().filter(|c| c[k] < lo).count() as u64, trials as u64))
        .collect();
    let success: f64 = weights
        .iter()
        .zip(&per_class_outage)
        .map(|(w, q)| w * (1.0 - q.value))
        .sum();
    debug_assert!(per_class_outage.iter().all(|q| q.value <= epsilon + 1.0 / n));
    Ok(TcReport {
        lambda_eps: lo,
        bracket: (lo, hi),
        capacity: config.gamma * lo * success,
        per_class_outage,
        class_weights: weights,
        trials: trials as u64,
        scheme: scheme.label(),
    })
}

fn worst_outage(crit: &[Vec<f64>], lambda: f64) -> f64 {
    let classes = crit.first().map_or(0, Vec::len);
    let n = crit.len() as f64;
    (0..classes)
        .map(|k| crit.iter().filter(|c| c[k] < lambda).count() as f64 / n)
        .fold(0.0, f64::max)
}

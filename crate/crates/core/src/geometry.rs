//! Poisson point processes on a disc and the layered cluster geometry.
//!
//! Point processes are sampled as a sequence of arrivals in intensity: the
//! k-th point is present for every intensity above `Gamma_k / area`, where
//! `Gamma_k` is a sum of k unit exponentials. The realization at intensity
//! `lambda` is therefore a prefix of the realization at any larger intensity,
//! which couples estimates across an intensity sweep.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_positive, invalid, Error, Result};
use crate::rng;

/// Minimum simulation window radius in metres.
pub const MIN_WINDOW_RADIUS: f64 = 500.0;

/// Largest tolerated ratio of the neglected mean interference tail to the
/// mean interference inside the window (unit exclusion disc).
pub const WINDOW_TAIL_FRACTION: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(&self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    fn polar(r: f64, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Point { x: r * c, y: r * s }
    }
}

/// A finite realization of a homogeneous PPP on a disc centred at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    pub points: Vec<Point>,
    pub window_radius: f64,
    pub intensity: f64,
}

impl PointSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of points inside the disc of `radius` centred at the origin.
    pub fn count_within(&self, radius: f64) -> usize {
        let r2 = radius * radius;
        self.points.iter().filter(|p| p.norm_sq() <= r2).count()
    }
}

/// One arrival of the intensity-ordered PPP construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arrival {
    /// Smallest intensity at which this point is part of the realization.
    pub intensity: f64,
    pub point: Point,
}

/// Endless stream of arrivals on a disc of the given radius.
pub struct PppArrivals<'a, R: Rng> {
    rng: &'a mut R,
    radius: f64,
    area: f64,
    cumulative: f64,
}

impl<'a, R: Rng> PppArrivals<'a, R> {
    pub fn new(rng: &'a mut R, radius: f64) -> Self {
        PppArrivals {
            rng,
            radius,
            area: std::f64::consts::PI * radius * radius,
            cumulative: 0.0,
        }
    }
}

impl<R: Rng> Iterator for PppArrivals<'_, R> {
    type Item = Arrival;

    fn next(&mut self) -> Option<Arrival> {
        let gap: f64 = Exp1.sample(self.rng);
        self.cumulative += gap;
        let point = uniform_in_disc(self.rng, self.radius);
        Some(Arrival {
            intensity: self.cumulative / self.area,
            point,
        })
    }
}

/// Uniform point on the disc of `radius` centred at the origin.
pub fn uniform_in_disc<R: Rng + ?Sized>(rng: &mut R, radius: f64) -> Point {
    let u: f64 = rng.random();
    let v: f64 = rng.random();
    Point::polar(radius * u.sqrt(), std::f64::consts::TAU * v)
}

fn check_ppp_inputs(intensity: f64, window_radius: f64) -> Result<()> {
    ensure_finite("intensity", intensity)?;
    if intensity < 0.0 {
        return Err(invalid(format!("intensity must be non-negative, got {intensity}")));
    }
    ensure_positive("window_radius", window_radius)
}

/// Samples a homogeneous PPP of `intensity` on the disc of `window_radius`.
pub fn sample_ppp(intensity: f64, window_radius: f64, seed: u64) -> Result<PointSet> {
    sample_ppp_with(&mut rng::seeded(seed), intensity, window_radius)
}

/// [`sample_ppp`] drawing from a caller-supplied generator.
pub fn sample_ppp_with<R: Rng>(rng: &mut R, intensity: f64, window_radius: f64) -> Result<PointSet> {
    check_ppp_inputs(intensity, window_radius)?;
    let points = if intensity == 0.0 {
        Vec::new()
    } else {
        PppArrivals::new(rng, window_radius)
            .take_while(|a| a.intensity < intensity)
            .map(|a| a.point)
            .collect()
    };
    Ok(PointSet {
        points,
        window_radius,
        intensity,
    })
}

/// Applies the isotropic map `x -> sqrt(factor) * x`.
///
/// The image of a homogeneous PPP of intensity `lambda` is again a
/// homogeneous PPP, now of intensity `lambda / factor`.
pub fn scale_points(points: &PointSet, factor: f64) -> Result<PointSet> {
    ensure_positive("factor", factor)?;
    let k = factor.sqrt();
    Ok(PointSet {
        points: points
            .points
            .iter()
            .map(|p| Point::new(p.x * k, p.y * k))
            .collect(),
        window_radius: points.window_radius * k,
        intensity: points.intensity / factor,
    })
}

/// Independent thinning: each point is retained with probability `keep`.
pub fn thin<R: Rng + ?Sized>(points: &PointSet, keep: f64, rng: &mut R) -> Result<PointSet> {
    ensure_finite("keep", keep)?;
    if !(0.0..=1.0).contains(&keep) {
        return Err(invalid(format!("retention probability must lie in [0, 1], got {keep}")));
    }
    Ok(PointSet {
        points: points
            .points
            .iter()
            .copied()
            .filter(|_| rng.random::<f64>() < keep)
            .collect(),
        window_radius: points.window_radius,
        intensity: points.intensity * keep,
    })
}

/// Smallest window radius whose neglected interference tail stays below
/// [`WINDOW_TAIL_FRACTION`] of the included mean, floored at
/// [`MIN_WINDOW_RADIUS`].
///
/// With a unit exclusion disc the tail-to-included ratio is
/// `R^(2-a) / (1 - R^(2-a))`, which does not depend on the intensity.
pub fn default_window_radius(alpha: f64) -> Result<f64> {
    crate::error::ensure_path_loss(alpha)?;
    let f = WINDOW_TAIL_FRACTION;
    let needed = ((1.0 + f) / f).powf(1.0 / (alpha - 2.0));
    Ok(needed.max(MIN_WINDOW_RADIUS))
}

/// How receivers are placed within the layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartitionKind {
    /// Receivers uniform by area over `(boundaries[0], s]`.
    AnnularUniform,
    /// The receiver sits at one of the listed distances.
    DiscreteLocations { radii: Vec<f64> },
}

/// Rule for building a [`LayerPartition`].
#[derive(Debug, Clone, PartialEq)]
pub enum PartitionRule {
    /// `N` annuli of width `s / N` starting at the origin.
    EqualWidth,
    /// Annuli with the given `N + 1` ascending boundaries; the last must be `s`.
    Explicit(Vec<f64>),
    /// Discrete receiver distances; equal probabilities unless supplied.
    Discrete {
        radii: Vec<f64>,
        probs: Option<Vec<f64>>,
    },
}

/// The N-layer tessellation of a cluster of radius `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerPartition {
    boundaries: Vec<f64>,
    probs: Vec<f64>,
    kind: PartitionKind,
}

const PROB_SUM_TOL: f64 = 1e-12;

impl LayerPartition {
    /// Equal-width annuli over `(0, s]`.
    pub fn equal_width(s: f64, n: usize) -> Result<Self> {
        build_partition(s, n, PartitionRule::EqualWidth)
    }

    /// Equal-width annuli over `(inner, s]`.
    pub fn equal_width_annulus(inner: f64, s: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid("partition needs at least one layer"));
        }
        let mut b: Vec<f64> = (0..=n)
            .map(|i| inner + (s - inner) * i as f64 / n as f64)
            .collect();
        b[n] = s;
        build_partition(s, n, PartitionRule::Explicit(b))
    }

    /// Discrete receiver locations with equal probabilities.
    pub fn discrete(s: f64, radii: Vec<f64>) -> Result<Self> {
        let n = radii.len();
        build_partition(s, n, PartitionRule::Discrete { radii, probs: None })
    }

    pub fn n_layers(&self) -> usize {
        self.probs.len()
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn kind(&self) -> &PartitionKind {
        &self.kind
    }

    pub fn is_annular(&self) -> bool {
        matches!(self.kind, PartitionKind::AnnularUniform)
    }

    /// Discrete receiver distances, if this is a discrete partition.
    pub fn radii(&self) -> Option<&[f64]> {
        match &self.kind {
            PartitionKind::DiscreteLocations { radii } => Some(radii),
            PartitionKind::AnnularUniform => None,
        }
    }

    /// Cluster radius `s`.
    pub fn radius(&self) -> f64 {
        *self.boundaries.last().expect("partition has boundaries")
    }

    /// Inner radius of the receiver region.
    pub fn inner_radius(&self) -> f64 {
        self.boundaries[0]
    }

    /// `inf(L_i)` for a zero-based layer index.
    pub fn inf(&self, layer: usize) -> f64 {
        self.boundaries[layer]
    }

    /// `sup(L_i)` for a zero-based layer index.
    pub fn sup(&self, layer: usize) -> f64 {
        self.boundaries[layer + 1]
    }

    /// `s^2 - boundaries[0]^2`; equals `s^2` when layers start at the origin.
    pub fn area_factor(&self) -> f64 {
        let s = self.radius();
        let a = self.inner_radius();
        s * s - a * a
    }

    /// Zero-based layer holding distance `r`, if any.
    pub fn layer_of(&self, r: f64) -> Option<usize> {
        if let Some(radii) = self.radii() {
            return radii.iter().position(|&x| x == r);
        }
        if r <= self.inner_radius() || r > self.radius() {
            return None;
        }
        let idx = self.boundaries.partition_point(|&b| b < r);
        Some(idx - 1)
    }

    /// Distance of a receiver conditioned on being in `layer`.
    pub fn sample_in_layer<R: Rng + ?Sized>(&self, layer: usize, rng: &mut R) -> f64 {
        match &self.kind {
            PartitionKind::DiscreteLocations { radii } => radii[layer],
            PartitionKind::AnnularUniform => {
                let a = self.inf(layer);
                let b = self.sup(layer);
                let u: f64 = rng.random();
                (a * a + u * (b * b - a * a)).sqrt()
            }
        }
    }

    /// Layer index for a uniform draw `u` in `[0, 1)`.
    pub fn layer_for_uniform(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for (i, &p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        self.probs.len() - 1
    }

    fn validate(&self) -> Result<()> {
        let n = self.probs.len();
        if self.boundaries.len() != n + 1 {
            return Err(Error::InvariantViolation(
                "partition needs N + 1 boundaries".into(),
            ));
        }
        if self.boundaries.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvariantViolation(
                "partition boundaries must be strictly increasing".into(),
            ));
        }
        let sum: f64 = self.probs.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvariantViolation(format!(
                "layer probabilities sum to {sum}, not 1"
            )));
        }
        if self.probs.iter().any(|&p| !(p > 0.0 && p <= 1.0)) {
            return Err(Error::InvariantViolation(
                "layer probabilities must lie in (0, 1]".into(),
            ));
        }
        Ok(())
    }
}

fn check_sorted_in_range(values: &[f64], s: f64, what: &str) -> Result<()> {
    for &v in values {
        ensure_finite(what, v)?;
    }
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid(format!("{what} must be strictly increasing")));
    }
    if values.iter().any(|&v| v < 0.0 || v > s) {
        return Err(invalid(format!("{what} must lie within [0, s = {s}]")));
    }
    Ok(())
}

/// Builds an N-layer partition of a cluster of radius `s`.
pub fn build_partition(s: f64, n: usize, rule: PartitionRule) -> Result<LayerPartition> {
    ensure_positive("s", s)?;
    if n == 0 {
        return Err(invalid("partition needs at least one layer"));
    }
    let partition = match rule {
        PartitionRule::EqualWidth => {
            let mut boundaries: Vec<f64> = (0..=n).map(|i| s * i as f64 / n as f64).collect();
            boundaries[n] = s;
            // eta_i = (2i - 1) / N^2 exactly for equal widths
            let n2 = (n * n) as f64;
            let probs = (1..=n).map(|i| (2 * i - 1) as f64 / n2).collect();
            LayerPartition {
                boundaries,
                probs,
                kind: PartitionKind::AnnularUniform,
            }
        }
        PartitionRule::Explicit(boundaries) => {
            if boundaries.len() != n + 1 {
                return Err(invalid(format!(
                    "expected {} boundaries for {n} layers, got {}",
                    n + 1,
                    boundaries.len()
                )));
            }
            check_sorted_in_range(&boundaries, s, "boundaries")?;
            if boundaries[n] != s {
                return Err(invalid(format!(
                    "last boundary must equal s = {s}, got {}",
                    boundaries[n]
                )));
            }
            let a0 = boundaries[0];
            let area = s * s - a0 * a0;
            let probs = boundaries
                .windows(2)
                .map(|w| (w[1] * w[1] - w[0] * w[0]) / area)
                .collect();
            LayerPartition {
                boundaries,
                probs,
                kind: PartitionKind::AnnularUniform,
            }
        }
        PartitionRule::Discrete { radii, probs } => {
            if radii.len() != n {
                return Err(invalid(format!(
                    "expected {n} discrete radii, got {}",
                    radii.len()
                )));
            }
            check_sorted_in_range(&radii, s, "radii")?;
            if radii[0] <= 0.0 {
                return Err(invalid("discrete radii must be positive"));
            }
            let probs = match probs {
                Some(p) => {
                    if p.len() != n {
                        return Err(invalid(format!("expected {n} probabilities, got {}", p.len())));
                    }
                    p
                }
                None => vec![1.0 / n as f64; n],
            };
            let mut boundaries = Vec::with_capacity(n + 1);
            boundaries.push(0.0);
            boundaries.extend_from_slice(&radii[..n - 1]);
            boundaries.push(s);
            LayerPartition {
                boundaries,
                probs,
                kind: PartitionKind::DiscreteLocations { radii },
            }
        }
    };
    partition.validate()?;
    Ok(partition)
}

/// Draws the selected receiver's distance and zero-based layer.
pub fn sample_receiver(partition: &LayerPartition, seed: u64) -> (f64, usize) {
    sample_receiver_with(partition, &mut rng::stream(seed, 0, rng::Purpose::ReferenceLink))
}

/// [`sample_receiver`] drawing from a caller-supplied generator.
pub fn sample_receiver_with<R: Rng + ?Sized>(partition: &LayerPartition, rng: &mut R) -> (f64, usize) {
    match partition.kind() {
        PartitionKind::DiscreteLocations { radii } => {
            let layer = partition.layer_for_uniform(rng.random());
            (radii[layer], layer)
        }
        PartitionKind::AnnularUniform => {
            let a = partition.inner_radius();
            let s = partition.radius();
            let u: f64 = rng.random();
            let r = (a * a + u * (s * s - a * a)).sqrt();
            let layer = partition.layer_of(r).unwrap_or(partition.n_layers() - 1);
            (r, layer)
        }
    }
}

/// A transmitter's cluster: radius, mean receiver count and its layering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSpec {
    pub radius: f64,
    pub mean_receivers: f64,
    pub partition: LayerPartition,
}

impl ClusterSpec {
    pub fn new(radius: f64, mean_receivers: f64, partition: LayerPartition) -> Result<Self> {
        ensure_positive("cluster radius", radius)?;
        ensure_finite("mean_receivers", mean_receivers)?;
        if mean_receivers < 1.0 {
            return Err(invalid(format!(
                "mean number of receivers must be at least 1, got {mean_receivers}"
            )));
        }
        if partition.radius() != radius {
            return Err(invalid("partition radius does not match the cluster radius"));
        }
        Ok(ClusterSpec {
            radius,
            mean_receivers,
            partition,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_intensity_is_empty() {
        let set = sample_ppp(0.0, 100.0, 1).unwrap();
        assert!(set.is_empty());
        assert_eq!(set.window_radius, 100.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(sample_ppp(-1.0, 100.0, 1).is_err());
        assert!(sample_ppp(f64::NAN, 100.0, 1).is_err());
        assert!(sample_ppp(1e-3, 0.0, 1).is_err());
        assert!(sample_ppp(1e-3, f64::INFINITY, 1).is_err());
    }

    #[test]
    fn same_seed_same_points() {
        let a = sample_ppp(1e-3, 100.0, 42).unwrap();
        let b = sample_ppp(1e-3, 100.0, 42).unwrap();
        assert_eq!(a, b);
        let c = sample_ppp(1e-3, 100.0, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn points_stay_in_window() {
        let set = sample_ppp(5e-3, 50.0, 9).unwrap();
        assert!(set.points.iter().all(|p| p.norm() <= 50.0));
    }

    #[test]
    fn lower_intensity_is_prefix() {
        let lo = sample_ppp(2e-4, 200.0, 5).unwrap();
        let hi = sample_ppp(1e-3, 200.0, 5).unwrap();
        assert!(lo.len() <= hi.len());
        assert_eq!(&hi.points[..lo.len()], &lo.points[..]);
    }

    #[test]
    fn mean_count_matches_poisson_mean() {
        // lambda * pi * r^2 = 0.0005 * pi * 500^2 = 392.7
        let expected = 5e-4 * std::f64::consts::PI * 500.0 * 500.0;
        let n = 400;
        let mean: f64 = (0..n)
            .map(|s| sample_ppp(5e-4, 500.0, s).unwrap().len() as f64)
            .sum::<f64>()
            / n as f64;
        let se = (expected / n as f64).sqrt();
        assert!((mean - expected).abs() < 4.0 * se, "mean {mean} vs {expected}");
    }

    #[test]
    fn scale_identity() {
        let set = sample_ppp(1e-3, 100.0, 3).unwrap();
        assert_eq!(scale_points(&set, 1.0).unwrap(), set);
    }

    #[test]
    fn scale_quarter() {
        let set = sample_ppp(5e-4, 100.0, 3).unwrap();
        let scaled = scale_points(&set, 0.25).unwrap();
        assert_relative_eq!(scaled.intensity, 0.002);
        assert_relative_eq!(scaled.window_radius, 50.0);
        assert!(scaled.points.iter().all(|p| p.norm() <= 50.0 + 1e-12));
        assert!(scale_points(&set, 0.0).is_err());
        assert!(scale_points(&set, -2.0).is_err());
    }

    #[test]
    fn window_radius_rule() {
        assert_eq!(default_window_radius(3.5).unwrap(), 500.0);
        assert_eq!(default_window_radius(4.0).unwrap(), 500.0);
        // alpha = 2.8: 1001^(1/0.8) ~ 5627 m
        let r = default_window_radius(2.8).unwrap();
        assert_relative_eq!(r, 1001f64.powf(1.25), max_relative = 1e-12);
        let tail = r.powf(2.0 - 2.8);
        assert!(tail / (1.0 - tail) <= WINDOW_TAIL_FRACTION * (1.0 + 1e-9));
        assert!(default_window_radius(2.0).is_err());
    }

    #[test]
    fn equal_width_probs() {
        let p = build_partition(15.0, 5, PartitionRule::EqualWidth).unwrap();
        assert_eq!(p.boundaries(), &[0.0, 3.0, 6.0, 9.0, 12.0, 15.0]);
        let expected = [1.0, 3.0, 5.0, 7.0, 9.0].map(|x| x / 25.0);
        for (a, b) in p.probs().iter().zip(expected) {
            assert_relative_eq!(*a, b, epsilon = 1e-15);
        }
        // recomputed from F_R(r) = r^2 / s^2
        for i in 0..5 {
            let f = (p.sup(i).powi(2) - p.inf(i).powi(2)) / 225.0;
            assert!((f - p.probs()[i]).abs() <= 1e-12);
        }
    }

    #[test]
    fn single_layer() {
        let p = build_partition(15.0, 1, PartitionRule::EqualWidth).unwrap();
        assert_eq!(p.boundaries(), &[0.0, 15.0]);
        assert_eq!(p.probs(), &[1.0]);
    }

    #[test]
    fn discrete_equal_probs() {
        let p = LayerPartition::discrete(15.0, vec![3.0, 6.0, 9.0, 12.0, 15.0]).unwrap();
        assert!(p.probs().iter().all(|&x| (x - 0.2).abs() < 1e-15));
        assert_eq!(p.layer_of(9.0), Some(2));
        assert_eq!(p.radii().unwrap()[4], 15.0);
    }

    #[test]
    fn partition_errors() {
        let unsorted = PartitionRule::Explicit(vec![0.0, 6.0, 3.0, 15.0]);
        assert!(matches!(build_partition(15.0, 3, unsorted), Err(Error::InvalidParameter(_))));
        let outside = PartitionRule::Discrete { radii: vec![3.0, 16.0], probs: None };
        assert!(matches!(build_partition(15.0, 2, outside), Err(Error::InvalidParameter(_))));
        let bad_sum = PartitionRule::Discrete {
            radii: vec![3.0, 6.0],
            probs: Some(vec![0.5, 0.6]),
        };
        assert!(matches!(build_partition(15.0, 2, bad_sum), Err(Error::InvariantViolation(_))));
        assert!(build_partition(15.0, 0, PartitionRule::EqualWidth).is_err());
    }

    #[test]
    fn annulus_partition_normalises_by_ring_area() {
        let p = LayerPartition::equal_width_annulus(2.0, 20.0, 3).unwrap();
        let total: f64 = p.probs().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_relative_eq!(p.area_factor(), 400.0 - 4.0);
        assert_eq!(p.layer_of(1.0), None);
        assert_eq!(p.layer_of(2.5), Some(0));
    }

    #[test]
    fn receiver_cdf() {
        // F_R(7.5) = 7.5^2 / 15^2 = 0.25
        let p = LayerPartition::equal_width(15.0, 5).unwrap();
        let n = 40_000;
        let mut rng = rng::seeded(11);
        let below = (0..n)
            .filter(|_| sample_receiver_with(&p, &mut rng).0 <= 7.5)
            .count();
        let frac = below as f64 / n as f64;
        let se = (0.25f64 * 0.75 / n as f64).sqrt();
        assert!((frac - 0.25).abs() < 4.0 * se, "{frac}");
    }

    #[test]
    fn receiver_layer_matches_distance() {
        let p = LayerPartition::equal_width(20.0, 4).unwrap();
        let mut rng = rng::seeded(2);
        for _ in 0..1000 {
            let (r, layer) = sample_receiver_with(&p, &mut rng);
            assert!(r > p.inf(layer) && r <= p.sup(layer));
        }
    }

    #[test]
    fn cluster_spec_validation() {
        let p = LayerPartition::equal_width(15.0, 3).unwrap();
        assert!(ClusterSpec::new(15.0, 2.0, p.clone()).is_ok());
        assert!(ClusterSpec::new(15.0, 0.5, p.clone()).is_err());
        assert!(ClusterSpec::new(10.0, 2.0, p).is_err());
    }
}

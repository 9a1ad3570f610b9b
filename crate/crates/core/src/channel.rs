//! Path loss, Rayleigh fading, interference aggregation and SIR.

use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_path_loss, ensure_positive, invalid, Error, Result};
use crate::geometry::{default_window_radius, Point, PppArrivals};
use crate::rng::{self, Purpose};
use crate::stats::Moments;

/// Minimum number of trials accepted by [`estimate_rho0`].
pub const MIN_RHO0_TRIALS: usize = 1000;

/// An interferer at `position` seen from a receiver at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkedPoint {
    pub position: Point,
    pub power: f64,
    /// Unit-mean exponential fading gain towards the origin.
    pub fading: f64,
}

/// Aggregate interference at the origin together with its terms.
#[derive(Debug, Clone, PartialEq)]
pub struct InterferenceField {
    pub contributions: Vec<MarkedPoint>,
    pub value: f64,
}

impl InterferenceField {
    pub fn new(contributions: Vec<MarkedPoint>, alpha: f64, exclusion_radius: f64) -> Result<Self> {
        let value = compute_interference(&contributions, alpha, exclusion_radius)?;
        Ok(InterferenceField {
            contributions,
            value,
        })
    }
}

/// `sum P_k H_k r_k^-alpha` over interferers farther than `exclusion_radius`.
pub fn compute_interference(
    interferers: &[MarkedPoint],
    alpha: f64,
    exclusion_radius: f64,
) -> Result<f64> {
    ensure_path_loss(alpha)?;
    ensure_finite("exclusion_radius", exclusion_radius)?;
    if exclusion_radius < 0.0 {
        return Err(invalid("exclusion radius must be non-negative"));
    }
    let excl2 = exclusion_radius * exclusion_radius;
    Ok(interferers
        .iter()
        .filter(|m| m.position.norm_sq() > excl2)
        .map(|m| m.power * m.fading * path_gain(m.position.norm_sq(), alpha))
        .sum())
}

/// `r^-alpha` computed from the squared distance.
#[inline]
pub fn path_gain(r2: f64, alpha: f64) -> f64 {
    r2.powf(-0.5 * alpha)
}

/// The reference link: distance, fading and transmit power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkDraw {
    pub distance: f64,
    pub fading: f64,
    pub power: f64,
}

impl LinkDraw {
    pub fn new(distance: f64, fading: f64, power: f64) -> Result<Self> {
        ensure_positive("distance", distance)?;
        ensure_finite("fading", fading)?;
        ensure_finite("power", power)?;
        if fading < 0.0 || power < 0.0 {
            return Err(invalid("fading and power must be non-negative"));
        }
        Ok(LinkDraw {
            distance,
            fading,
            power,
        })
    }

    /// Received signal power `P H R^-alpha`.
    pub fn signal(&self, alpha: f64) -> f64 {
        self.power * self.fading * self.distance.powf(-alpha)
    }
}

/// `P H R^-alpha / I`.
pub fn compute_sir(link: &LinkDraw, interference: f64, alpha: f64) -> Result<f64> {
    ensure_path_loss(alpha)?;
    ensure_finite("interference", interference)?;
    if interference < 0.0 {
        return Err(invalid("interference must be non-negative"));
    }
    if interference == 0.0 {
        return Err(Error::ZeroInterference);
    }
    Ok(link.signal(alpha) / interference)
}

/// Estimate of `rho0 = E[I(1)] E[1/I(1)]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rho0Estimate {
    /// Closed-form mean interference outside the exclusion disc.
    pub mean_i: f64,
    /// Monte Carlo mean of the reciprocal interference.
    pub mean_inv_i: f64,
    pub rho0: f64,
    pub ci_halfwidth: f64,
    /// Realizations used (non-empty ones).
    pub trials: u64,
    /// Realizations with no interferer outside the exclusion disc.
    pub empty_trials: u64,
}

impl Rho0Estimate {
    /// Builds the estimate from interference samples and a known mean.
    /// Zero samples are counted as empty and skipped.
    pub fn from_samples(mean_i: f64, samples: impl IntoIterator<Item = f64>) -> Result<Self> {
        let mut inv = Moments::new();
        let mut empty = 0u64;
        for x in samples {
            if x > 0.0 {
                inv.push(1.0 / x);
            } else {
                empty += 1;
            }
        }
        if inv.count() == 0 {
            return Err(Error::InsufficientSamples(
                "every realization had zero interference; enlarge the window or the intensity"
                    .into(),
            ));
        }
        Ok(Rho0Estimate {
            mean_i,
            mean_inv_i: inv.mean(),
            rho0: mean_i * inv.mean(),
            ci_halfwidth: mean_i * inv.ci95(),
            trials: inv.count(),
            empty_trials: empty,
        })
    }
}

/// Mean interference from a unit-power PPP outside a disc (Campbell).
pub fn mean_interference(lambda: f64, alpha: f64, exclusion_radius: f64) -> Result<f64> {
    ensure_path_loss(alpha)?;
    ensure_positive("exclusion_radius", exclusion_radius)?;
    Ok(2.0 * std::f64::consts::PI * lambda * exclusion_radius.powf(2.0 - alpha) / (alpha - 2.0))
}

/// Estimates `rho0` with unit powers, Rayleigh fading and interferers inside
/// `exclusion_radius` ignored. The mean is the closed form; the reciprocal
/// mean is simulated.
pub fn estimate_rho0(
    lambda: f64,
    alpha: f64,
    exclusion_radius: f64,
    trials: usize,
    seed: u64,
) -> Result<Rho0Estimate> {
    ensure_positive("lambda", lambda)?;
    if trials < MIN_RHO0_TRIALS {
        return Err(invalid(format!(
            "rho0 estimation needs at least {MIN_RHO0_TRIALS} trials, got {trials}"
        )));
    }
    let mean_i = mean_interference(lambda, alpha, exclusion_radius)?;
    let window = default_window_radius(alpha)?;
    let excl2 = exclusion_radius * exclusion_radius;

    let samples: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng::stream(seed, t, Purpose::Interferers);
            let mut total = 0.0;
            let mut arrivals = PppArrivals::new(&mut rng, window);
            let mut pending = Vec::new();
            for a in arrivals.by_ref() {
                if a.intensity >= lambda {
                    break;
                }
                pending.push(a.point.norm_sq());
            }
            drop(arrivals);
            for r2 in pending {
                let h: f64 = Exp1.sample(&mut rng);
                if r2 > excl2 {
                    total += h * path_gain(r2, alpha);
                }
            }
            total
        })
        .collect();

    Rho0Estimate::from_samples(mean_i, samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn at(x: f64, power: f64, fading: f64) -> MarkedPoint {
        MarkedPoint {
            position: Point::new(x, 0.0),
            power,
            fading,
        }
    }

    #[test]
    fn empty_field_is_zero() {
        assert_eq!(compute_interference(&[], 3.5, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn single_interferer() {
        let v = compute_interference(&[at(2.0, 1.0, 1.0)], 4.0, 0.0).unwrap();
        assert_relative_eq!(v, 0.0625, epsilon = 1e-15);
    }

    #[test]
    fn exclusion_disc_drops_near_points() {
        let pts = [at(0.5, 1.0, 1.0), at(2.0, 1.0, 1.0)];
        assert_relative_eq!(compute_interference(&pts, 4.0, 1.0).unwrap(), 0.0625);
        assert_relative_eq!(compute_interference(&pts, 4.0, 0.0).unwrap(), 16.0 + 0.0625);
    }

    #[test]
    fn alpha_at_most_two_rejected() {
        assert!(matches!(
            compute_interference(&[], 2.0, 0.0),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn sir_examples() {
        let l = LinkDraw::new(1.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(compute_sir(&l, 1.0, 3.5).unwrap(), 1.0);
        let l = LinkDraw::new(2.0, 1.0, 16.0).unwrap();
        assert_relative_eq!(compute_sir(&l, 1.0, 4.0).unwrap(), 1.0, epsilon = 1e-15);
        let l = LinkDraw::new(20.0, 0.5, 1.0).unwrap();
        let expected = 0.5 * 20f64.powf(-3.5) / 2.094e-3;
        assert_relative_eq!(compute_sir(&l, 2.094e-3, 3.5).unwrap(), expected, max_relative = 1e-14);
        assert_relative_eq!(expected, 6.67e-3, max_relative = 2e-3);
        assert_eq!(compute_sir(&l, 0.0, 3.5), Err(Error::ZeroInterference));
    }

    #[test]
    fn constant_field_gives_unit_rho0() {
        let est = Rho0Estimate::from_samples(0.25, std::iter::repeat_n(0.25, 100)).unwrap();
        assert_eq!(est.rho0, 1.0);
        assert_eq!(est.ci_halfwidth, 0.0);
    }

    #[test]
    fn all_empty_is_insufficient() {
        let r = Rho0Estimate::from_samples(1.0, [0.0, 0.0]);
        assert!(matches!(r, Err(Error::InsufficientSamples(_))));
    }

    #[test]
    fn mean_interference_closed_form() {
        // 2 pi lambda / (alpha - 2)
        let m = mean_interference(5e-4, 3.5, 1.0).unwrap();
        assert_relative_eq!(m, 2.094_395_102_393_195_5e-3, max_relative = 1e-14);
    }

    #[test]
    fn rho0_needs_enough_trials() {
        assert!(estimate_rho0(1e-3, 4.0, 1.0, 10, 0).is_err());
    }
}

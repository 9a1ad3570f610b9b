//! Power-control policies, the DPC superiority condition and the
//! bound-achieving power-ratio designs.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_path_loss, ensure_positive, invalid, Error, Result};
use crate::geometry::LayerPartition;

/// Fading gains below this are clamped before inversion so power stays bounded.
pub const FADING_FLOOR: f64 = 1e-6;

const PROB_SUM_TOL: f64 = 1e-12;

/// The power-control policies compared in the experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PowerScheme {
    /// Every transmitter uses the same power.
    NoPc { power: f64 },
    /// Power `1 / H` for the own-link fading `H`.
    ChannelInversion,
    /// Power `H^-exponent`.
    Fractional { exponent: f64 },
    /// `p1` with probability `eta1`, else `p2`.
    TwoLevel { p1: f64, p2: f64, eta1: f64, eta2: f64 },
    /// `powers[i]` when the intended receiver lies in layer `i`.
    NLayerDpc { powers: Vec<f64>, partition: LayerPartition },
}

impl PowerScheme {
    pub fn no_pc(power: f64) -> Result<Self> {
        let s = PowerScheme::NoPc { power };
        s.validate()?;
        Ok(s)
    }

    pub fn fractional(exponent: f64) -> Result<Self> {
        let s = PowerScheme::Fractional { exponent };
        s.validate()?;
        Ok(s)
    }

    /// Two-level scheme from the ratio `p1 / p2` (with `p2 = 1`) and `eta1`.
    pub fn two_level(ratio: f64, eta1: f64) -> Result<Self> {
        let s = PowerScheme::TwoLevel {
            p1: ratio,
            p2: 1.0,
            eta1,
            eta2: 1.0 - eta1,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn n_layer(powers: Vec<f64>, partition: LayerPartition) -> Result<Self> {
        let s = PowerScheme::NLayerDpc { powers, partition };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PowerScheme::NoPc { power } => ensure_positive("power", *power),
            PowerScheme::ChannelInversion => Ok(()),
            PowerScheme::Fractional { exponent } => {
                ensure_finite("exponent", *exponent)?;
                if (0.0..=1.0).contains(exponent) {
                    Ok(())
                } else {
                    Err(invalid(format!("fractional exponent must lie in [0, 1], got {exponent}")))
                }
            }
            PowerScheme::TwoLevel { p1, p2, eta1, eta2 } => {
                ensure_positive("p1", *p1)?;
                ensure_positive("p2", *p2)?;
                for (name, e) in [("eta1", eta1), ("eta2", eta2)] {
                    ensure_finite(name, *e)?;
                    if !(0.0..=1.0).contains(e) {
                        return Err(invalid(format!("{name} must lie in [0, 1], got {e}")));
                    }
                }
                if (eta1 + eta2 - 1.0).abs() > PROB_SUM_TOL {
                    return Err(Error::InvariantViolation(format!(
                        "two-level probabilities sum to {}, not 1",
                        eta1 + eta2
                    )));
                }
                Ok(())
            }
            PowerScheme::NLayerDpc { powers, partition } => {
                if powers.len() != partition.n_layers() {
                    return Err(invalid(format!(
                        "{} powers given for a {}-layer partition",
                        powers.len(),
                        partition.n_layers()
                    )));
                }
                powers.iter().try_for_each(|&p| ensure_positive("power", p))
            }
        }
    }

    /// Short identifier used in reports.
    pub fn label(&self) -> String {
        match self {
            PowerScheme::NoPc { .. } => "nopc".into(),
            PowerScheme::ChannelInversion => "inversion".into(),
            PowerScheme::Fractional { exponent } => format!("fractional:{exponent}"),
            PowerScheme::TwoLevel { p1, p2, eta1, .. } => format!("two-level:{}:{eta1}", p1 / p2),
            PowerScheme::NLayerDpc { powers, .. } => format!("dpc:{}", powers.len()),
        }
    }

    /// The finite power set and its selection probabilities, for schemes
    /// that have one.
    pub fn levels(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match self {
            PowerScheme::NoPc { power } => Some((vec![*power], vec![1.0])),
            PowerScheme::TwoLevel { p1, p2, eta1, eta2 } => Some((vec![*p1, *p2], vec![*eta1, *eta2])),
            PowerScheme::NLayerDpc { powers, partition } => Some((powers.clone(), partition.probs().to_vec())),
            PowerScheme::ChannelInversion | PowerScheme::Fractional { .. } => None,
        }
    }

    /// Power of a transmitter whose own link has fading `fading`, with a
    /// precomputed uniform `u` for categorical level selection.
    pub(crate) fn power_for(&self, layer: usize, fading: f64, u: f64) -> f64 {
        match self {
            PowerScheme::NoPc { power } => *power,
            PowerScheme::ChannelInversion => 1.0 / fading.max(FADING_FLOOR),
            PowerScheme::Fractional { exponent } => fading.max(FADING_FLOOR).powf(-exponent),
            PowerScheme::TwoLevel { p1, p2, eta1, .. } => {
                if u < *eta1 {
                    *p1
                } else {
                    *p2
                }
            }
            PowerScheme::NLayerDpc { powers, .. } => powers[layer],
        }
    }
}

/// Transmit power chosen by `scheme`. `layer` is the zero-based layer of the
/// intended receiver, `fading` its channel gain and `distance` its distance
/// (unused by the current policies). Two-level selection draws from `rng`.
pub fn assign_power<R: Rng + ?Sized>(
    scheme: &PowerScheme,
    layer: usize,
    fading: f64,
    _distance: f64,
    rng: &mut R,
) -> Result<f64> {
    match scheme {
        PowerScheme::NLayerDpc { powers, .. } if layer >= powers.len() => {
            Err(invalid(format!("layer {layer} out of range for {} powers", powers.len())))
        }
        PowerScheme::TwoLevel { .. } => Ok(scheme.power_for(layer, fading, rng.random())),
        _ => {
            ensure_finite("fading", fading)?;
            Ok(scheme.power_for(layer, fading, 0.0))
        }
    }
}

/// Per-level margins of the DPC superiority condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    /// `sum_j eta_j^(alpha/2) P_j / P_i` for every `i`.
    pub per_i_margin: Vec<f64>,
    /// `1 / rho0`.
    pub threshold: f64,
    pub holds: bool,
    /// Every margin below 1.
    pub relaxed_holds: bool,
}

/// Evaluates `sum_j eta_j^(alpha/2) (P_j / P_i) < 1 / rho0` for every `i`.
pub fn dpc_condition(powers: &[f64], probs: &[f64], alpha: f64, rho0: f64) -> Result<ConditionReport> {
    ensure_path_loss(alpha)?;
    ensure_finite("rho0", rho0)?;
    if rho0 < 1.0 {
        return Err(invalid(format!("rho0 is at least 1 by Jensen, got {rho0}")));
    }
    if powers.is_empty() || powers.len() != probs.len() {
        return Err(invalid("need one probability per power"));
    }
    powers.iter().try_for_each(|&p| ensure_positive("power", p))?;
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > PROB_SUM_TOL || probs.iter().any(|&e| e < 0.0) {
        return Err(invalid(format!("probabilities must be non-negative and sum to 1 (sum = {sum})")));
    }
    let h = 0.5 * alpha;
    let weighted: f64 = probs.iter().zip(powers).map(|(e, p)| e.powf(h) * p).sum();
    let per_i_margin: Vec<f64> = powers.iter().map(|p| weighted / p).collect();
    let threshold = 1.0 / rho0;
    Ok(ConditionReport {
        holds: per_i_margin.iter().all(|&m| m < threshold),
        relaxed_holds: per_i_margin.iter().all(|&m| m < 1.0),
        per_i_margin,
        threshold,
    })
}

/// Feasible interval of `P1 / P2` for two power levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerRatioRegion {
    pub lower: f64,
    pub upper: f64,
}

impl PowerRatioRegion {
    pub fn is_empty(&self) -> bool {
        !(self.lower <= self.upper)
    }

    pub fn contains(&self, ratio: f64) -> bool {
        !self.is_empty() && ratio >= self.lower && ratio <= self.upper
    }
}

/// `[eta2^(a/2) / (1/rho0 - eta1^(a/2)), (1/rho0 - eta2^(a/2)) / eta1^(a/2)]`.
///
/// When `1/rho0 <= eta1^(a/2)` the lower end is unbounded and the region is
/// reported empty.
pub fn two_power_region(eta1: f64, eta2: f64, alpha: f64, rho0: f64) -> Result<PowerRatioRegion> {
    ensure_path_loss(alpha)?;
    ensure_positive("rho0", rho0)?;
    for e in [eta1, eta2] {
        ensure_finite("eta", e)?;
        if !(0.0..=1.0).contains(&e) {
            return Err(invalid(format!("probabilities must lie in [0, 1], got {e}")));
        }
    }
    if (eta1 + eta2 - 1.0).abs() > PROB_SUM_TOL {
        return Err(invalid(format!("eta1 + eta2 = {}, not 1", eta1 + eta2)));
    }
    let h = 0.5 * alpha;
    let (w1, w2) = (eta1.powf(h), eta2.powf(h));
    let t = 1.0 / rho0;
    let lower = if t > w1 { w2 / (t - w1) } else { f64::INFINITY };
    let upper = (t - w2) / w1;
    Ok(PowerRatioRegion { lower, upper })
}

/// Power-ratio rules that achieve the contention-intensity bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DesignVariant {
    /// `P_j / P_i = ((b_j^2 + a_j^2) / (b_i^2 + a_i^2))^(alpha/2)`.
    Thm3Lower,
    /// `P_j / P_i = (a_j / a_i)^alpha`; needs every layer to start away from the origin.
    Thm3Upper,
    /// `P_j / P_i = (r_j / r_i)^alpha` for discrete receiver locations.
    Thm5,
}

/// Power vector with `P_1 = anchor` and ratios given by `variant`.
pub fn design_powers(
    partition: &LayerPartition,
    alpha: f64,
    variant: DesignVariant,
    anchor: f64,
) -> Result<Vec<f64>> {
    ensure_path_loss(alpha)?;
    ensure_positive("anchor", anchor)?;
    let n = partition.n_layers();
    let base: Vec<f64> = match variant {
        DesignVariant::Thm3Lower => (0..n)
            .map(|i| {
                let (a, b) = (partition.inf(i), partition.sup(i));
                (b * b + a * a).powf(0.5 * alpha)
            })
            .collect(),
        DesignVariant::Thm3Upper => {
            if partition.inner_radius() <= 0.0 {
                return Err(Error::DegenerateLayer {
                    layer: 0,
                    reason: "the first layer starts at the origin; use a positive inner radius".into(),
                });
            }
            (0..n).map(|i| partition.inf(i).powf(alpha)).collect()
        }
        DesignVariant::Thm5 => {
            let radii = partition
                .radii()
                .ok_or_else(|| invalid("the discrete design needs a discrete-locations partition"))?;
            radii.iter().map(|r| r.powf(alpha)).collect()
        }
    };
    let b0 = base[0];
    Ok(base.iter().map(|b| anchor * b / b0).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use approx::assert_relative_eq;

    #[test]
    fn assign_power_variants() {
        let mut r = rng::seeded(1);
        let nopc = PowerScheme::no_pc(1.0).unwrap();
        assert_eq!(assign_power(&nopc, 0, 0.3, 5.0, &mut r).unwrap(), 1.0);
        let frac = PowerScheme::fractional(0.5).unwrap();
        assert_relative_eq!(assign_power(&frac, 0, 4.0, 5.0, &mut r).unwrap(), 0.5);
        let inv = PowerScheme::ChannelInversion;
        assert_relative_eq!(assign_power(&inv, 0, 4.0, 5.0, &mut r).unwrap(), 0.25);
        assert_eq!(assign_power(&inv, 0, 0.0, 5.0, &mut r).unwrap(), 1.0 / FADING_FLOOR);
    }

    #[test]
    fn thm5_layer_power() {
        let p = LayerPartition::discrete(15.0, vec![3.0, 6.0, 9.0, 12.0, 15.0]).unwrap();
        let powers = design_powers(&p, 3.5, DesignVariant::Thm5, 1.0).unwrap();
        let expected = [1.0, 11.3137, 46.765, 128.0, 279.51];
        for (a, b) in powers.iter().zip(expected) {
            assert_relative_eq!(*a, b, max_relative = 1e-4);
        }
        let scheme = PowerScheme::n_layer(powers.clone(), p).unwrap();
        let mut r = rng::seeded(0);
        let p3 = assign_power(&scheme, 2, 1.0, 9.0, &mut r).unwrap();
        assert_relative_eq!(p3, 3f64.powf(3.5), max_relative = 1e-12);
        // P_i / r_i^alpha constant
        for (i, p) in powers.iter().enumerate() {
            assert_relative_eq!(p / (3.0 * (i + 1) as f64).powf(3.5), 3f64.powf(-3.5), max_relative = 1e-12);
        }
    }

    #[test]
    fn two_level_selection_frequency() {
        let s = PowerScheme::two_level(1.5, 0.4).unwrap();
        let mut r = rng::seeded(3);
        let n = 20_000;
        let high = (0..n)
            .filter(|_| assign_power(&s, 0, 1.0, 1.0, &mut r).unwrap() == 1.5)
            .count();
        let f = high as f64 / n as f64;
        assert!((f - 0.4).abs() < 4.0 * (0.24f64 / n as f64).sqrt());
    }

    #[test]
    fn single_level_condition_fails() {
        let c = dpc_condition(&[3.0], &[1.0], 3.5, 1.29).unwrap();
        assert_eq!(c.per_i_margin, vec![1.0]);
        assert!(!c.holds);
        assert!(!c.relaxed_holds);
    }

    #[test]
    fn two_level_condition_margins() {
        let c = dpc_condition(&[1.5, 1.0], &[0.4, 0.6], 3.5, 1.29).unwrap();
        assert_relative_eq!(c.per_i_margin[0], 0.4739, max_relative = 5e-4);
        assert_relative_eq!(c.per_i_margin[1], 0.7109, max_relative = 5e-4);
        assert_relative_eq!(c.threshold, 1.0 / 1.29);
        assert!(c.holds);
    }

    #[test]
    fn equal_probability_margins() {
        let alpha = 3.5;
        for n in 1..=8usize {
            let eta = 1.0 / n as f64;
            let powers = vec![eta.powf(-0.5 * alpha); n];
            let c = dpc_condition(&powers, &vec![eta; n], alpha, 1.29).unwrap();
            let m = (n as f64).powf(1.0 - 0.5 * alpha);
            for x in &c.per_i_margin {
                assert_relative_eq!(*x, m, max_relative = 1e-12);
            }
            let threshold_n = 1.29f64.powf(2.0 / (alpha - 2.0));
            assert_eq!(c.holds, n as f64 > threshold_n);
        }
    }

    #[test]
    fn region_examples() {
        let r = two_power_region(0.4, 0.6, 3.5, 1.29).unwrap();
        assert_relative_eq!(r.lower, 0.713, max_relative = 1e-3);
        assert_relative_eq!(r.upper, 1.820, max_relative = 1e-3);
        assert!(r.contains(1.5));
        assert!(two_power_region(0.4, 0.6, 3.5, 1e6).unwrap().is_empty());
        let r = two_power_region(0.5, 0.5, 4.0, 1.0).unwrap();
        assert_relative_eq!(r.lower, 1.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(r.upper, 3.0, max_relative = 1e-14);
    }

    #[test]
    fn thm3_designs() {
        let single = LayerPartition::equal_width(15.0, 1).unwrap();
        assert_eq!(design_powers(&single, 3.5, DesignVariant::Thm3Lower, 2.0).unwrap(), vec![2.0]);
        let two = LayerPartition::equal_width(15.0, 2).unwrap();
        let p = design_powers(&two, 4.0, DesignVariant::Thm3Lower, 1.0).unwrap();
        assert_relative_eq!(p[1] / p[0], 25.0, max_relative = 1e-13);
        assert!(matches!(
            design_powers(&two, 4.0, DesignVariant::Thm3Upper, 1.0),
            Err(Error::DegenerateLayer { layer: 0, .. })
        ));
        let annulus = LayerPartition::equal_width_annulus(1.5, 15.0, 2).unwrap();
        let p = design_powers(&annulus, 4.0, DesignVariant::Thm3Upper, 1.0).unwrap();
        assert_relative_eq!(p[1] / p[0], (8.25f64 / 1.5).powi(4), max_relative = 1e-13);
        assert!(design_powers(&two, 4.0, DesignVariant::Thm5, 1.0).is_err());
    }
}

//! Discrete power design and the search for the number of layers.
//!
//! Powers are written `P_i = c_i eta_i^(-alpha/2)`. The well-posed design
//! problem minimizes `sum P_i` subject to the DPC condition
//! `sum_j eta_j^(alpha/2) P_j <= P_i / rho0` and the normalization
//! `max_i P_i = P_max`. Without the normalization the problem is positively
//! homogeneous and its infimum is zero.

use serde::{Deserialize, Serialize};

use crate::error::{
    ensure_finite, ensure_path_loss, ensure_positive, invalid, Error, InfeasibilityCertificate,
    Result,
};
use crate::geometry::LayerPartition;
use crate::schemes::dpc_condition;

/// Relative margin applied to `rho0` so feasible designs satisfy the DPC
/// condition strictly.
pub const STRICT_MARGIN: f64 = 1e-9;

/// Tolerance on the KKT residual of a numeric design.
pub const KKT_TOLERANCE: f64 = 1e-8;

const PROB_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintForm {
    /// `sum_j c_j^(2/alpha) <= c_i^(2/alpha) / (rho0 eta_i)`, as printed.
    PaperEq28,
    /// The DPC condition rewritten in powers.
    Eq4Derived,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// The largest power equals `P_max`.
    CapAtPmax,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerDesignProblem {
    pub probs: Vec<f64>,
    pub alpha: f64,
    pub rho0: f64,
    pub p_max: f64,
    pub constraint_form: ConstraintForm,
    pub normalization: Normalization,
}

impl PowerDesignProblem {
    /// Problem in the authoritative form with `P_max = 1`.
    pub fn new(probs: Vec<f64>, alpha: f64, rho0: f64) -> Result<Self> {
        let p = PowerDesignProblem {
            probs,
            alpha,
            rho0,
            p_max: 1.0,
            constraint_form: ConstraintForm::Eq4Derived,
            normalization: Normalization::CapAtPmax,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_path_loss(self.alpha)?;
        ensure_positive("p_max", self.p_max)?;
        ensure_finite("rho0", self.rho0)?;
        if self.rho0 < 1.0 {
            return Err(invalid(format!("rho0 is at least 1, got {}", self.rho0)));
        }
        if self.probs.is_empty() {
            return Err(invalid("need at least one layer"));
        }
        if self.probs.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
            return Err(invalid("layer probabilities must lie in (0, 1]"));
        }
        let sum: f64 = self.probs.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvariantViolation(format!("layer probabilities sum to {sum}")));
        }
        Ok(())
    }

    fn weights(&self) -> Vec<f64> {
        let h = 0.5 * self.alpha;
        self.probs.iter().map(|e| e.powf(h)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignResult {
    /// `c_i = P_i eta_i^(alpha/2)`.
    pub coefficients: Vec<f64>,
    pub powers: Vec<f64>,
    /// `sum_i P_i`.
    pub objective: f64,
    pub feasible: bool,
    pub method: String,
    pub kkt_residual: Option<f64>,
}

impl DesignResult {
    fn from_powers(problem: &PowerDesignProblem, powers: Vec<f64>, feasible: bool, method: &str) -> Self {
        let h = 0.5 * problem.alpha;
        DesignResult {
            coefficients: powers
                .iter()
                .zip(&problem.probs)
                .map(|(p, e)| p * e.powf(h))
                .collect(),
            objective: powers.iter().sum(),
            powers,
            feasible,
            method: method.to_string(),
            kkt_residual: None,
        }
    }
}

/// Evaluates the printed closed-form design
/// `P_i = min{((2 eta_i / alpha) S)^(alpha/(alpha-2)), 1} P_max` with
/// `S = sum_k (rho0 eta_k - 1) / (2 - rho0 eta_k)`.
pub fn closed_form_powers(problem: &PowerDesignProblem) -> Result<DesignResult> {
    problem.validate()?;
    let rho0 = problem.rho0;
    let mut inner = 0.0;
    for &e in &problem.probs {
        let denom = 2.0 - rho0 * e;
        if denom == 0.0 {
            return Err(invalid("rho0 * eta_k = 2 makes the closed form singular"));
        }
        inner += (rho0 * e - 1.0) / denom;
    }
    if inner < 0.0 {
        return Err(Error::InfeasibleClosedForm { inner_sum: inner });
    }
    let n = problem.probs.len();
    if inner == 0.0 {
        let mut r = DesignResult::from_powers(problem, vec![0.0; n], false, "closed-form-degenerate");
        r.objective = 0.0;
        return Ok(r);
    }
    let a = problem.alpha;
    let powers: Vec<f64> = problem
        .probs
        .iter()
        .map(|e| (2.0 * e * inner / a).powf(a / (a - 2.0)).min(1.0) * problem.p_max)
        .collect();
    let feasible = powers.iter().all(|&p| p > 0.0)
        && dpc_condition(&powers, &problem.probs, a, rho0).is_ok_and(|c| c.holds);
    Ok(DesignResult::from_powers(problem, powers, feasible, "closed-form"))
}

/// Solves the design problem numerically.
///
/// For the DPC form, fixing `P_k = P_max` leaves a monotone affine system
/// whose least feasible point sets every other power to
/// `x_k = rho' w_k P_max / (1 - rho' sum_{i != k} w_i)` (with
/// `w = eta^(alpha/2)` and `rho' = rho0 (1 + STRICT_MARGIN)`); any feasible
/// vector dominates it componentwise. The best `k` over all layers is the
/// optimum, and its KKT multipliers are reported as a residual.
pub fn numeric_powers(problem: &PowerDesignProblem) -> Result<DesignResult> {
    problem.validate()?;
    match problem.constraint_form {
        ConstraintForm::PaperEq28 => paper_form(problem),
        ConstraintForm::Eq4Derived => eq4_form(problem),
    }
}

fn paper_form(problem: &PowerDesignProblem) -> Result<DesignResult> {
    let eta_sum: f64 = problem.probs.iter().sum();
    let cert = InfeasibilityCertificate::SummedConstraints {
        rho0: problem.rho0,
        eta_sum,
    };
    if cert.verify() {
        return Err(Error::Infeasible {
            reason: "summing the printed constraints gives sum(u) >= rho0 sum(u) with rho0 > 1".into(),
            certificate: Some(cert),
        });
    }
    // rho0 = 1 forces u proportional to eta, i.e. equal powers
    let n = problem.probs.len();
    Ok(DesignResult::from_powers(problem, vec![problem.p_max; n], true, "paper-eq28"))
}

fn eq4_form(problem: &PowerDesignProblem) -> Result<DesignResult> {
    let w = problem.weights();
    let weight_sum: f64 = w.iter().sum();
    let rho = problem.rho0 * (1.0 + STRICT_MARGIN);
    let cert = InfeasibilityCertificate::WeightedSumExceedsOne {
        rho0: rho,
        weight_sum,
    };
    if rho * weight_sum >= 1.0 {
        return Err(Error::Infeasible {
            reason: format!("rho0 * sum(eta^(alpha/2)) = {} is not below 1", rho * weight_sum),
            certificate: Some(cert),
        });
    }
    let n = w.len();
    let pmax = problem.p_max;
    let mut best: Option<(f64, usize, f64)> = None;
    for k in 0..n {
        let rest = weight_sum - w[k];
        let x = rho * w[k] * pmax / (1.0 - rho * rest);
        let objective = pmax + (n - 1) as f64 * x;
        if best.is_none_or(|(obj, _, _)| objective < obj) {
            best = Some((objective, k, x));
        }
    }
    let (_, k, x) = best.expect("at least one layer");
    let powers: Vec<f64> = (0..n).map(|i| if i == k { pmax } else { x }).collect();
    let residual = kkt_residual(&powers, &w, rho, k);
    let feasible = dpc_condition(&powers, &problem.probs, problem.alpha, problem.rho0)?.holds;
    let mut result = DesignResult::from_powers(problem, powers, feasible, "eq4-derived");
    result.kkt_residual = Some(residual);
    if residual > KKT_TOLERANCE {
        return Err(Error::InvariantViolation(format!("KKT residual {residual} exceeds tolerance")));
    }
    Ok(result)
}

/// KKT residual of `min sum_{i != k} P_i` subject to
/// `g_i = P_i - rho sum_j w_j P_j >= 0` with `P_k` fixed.
fn kkt_residual(powers: &[f64], w: &[f64], rho: f64, k: usize) -> f64 {
    let n = powers.len();
    let s: f64 = w.iter().zip(powers).map(|(a, b)| a * b).sum();
    let g: Vec<f64> = powers.iter().map(|p| p - rho * s).collect();
    let rest: f64 = (0..n).filter(|&i| i != k).map(|i| w[i]).sum();
    let m = (n - 1) as f64 / (1.0 - rho * rest);
    let mu: Vec<f64> = (0..n)
        .map(|i| if i == k { 0.0 } else { 1.0 + rho * w[i] * m })
        .collect();
    let mu_sum: f64 = mu.iter().sum();
    let scale = powers.iter().copied().fold(0.0, f64::max).max(1e-300);
    let mut r: f64 = 0.0;
    for i in 0..n {
        if i != k {
            // d/dP_i: 1 - mu_i + rho w_i sum_m mu_m
            r = r.max((1.0 - mu[i] + rho * w[i] * mu_sum).abs());
            r = r.max((mu[i] * g[i]).abs() / scale);
        }
        r = r.max((-g[i]).max(0.0) / scale);
        r = r.max((-mu[i]).max(0.0));
    }
    r
}

/// `J = (sum_j u_j) (sum_i eta_i^2 (b_i^2 + a_i^2) / u_i)` with `u = c^(2/alpha)`.
pub fn j_objective(partition: &LayerPartition, u: &[f64]) -> Result<f64> {
    if u.len() != partition.n_layers() {
        return Err(invalid("one coefficient per layer required"));
    }
    if u.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(invalid("coefficients must be positive"));
    }
    let total: f64 = u.iter().sum();
    let weighted: f64 = (0..u.len())
        .map(|i| {
            let (a, b) = (partition.inf(i), partition.sup(i));
            let e = partition.probs()[i];
            e * e * (b * b + a * a) / u[i]
        })
        .sum();
    Ok(total * weighted)
}

/// How the partition for each candidate `N` is built.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NPartitionRule {
    /// `N` equal-width annuli over `(0, s]`.
    EqualWidth,
    /// `N` equal-width annuli over `(inner_fraction * s / N, s]`.
    EqualWidthInner { inner_fraction: f64 },
}

impl NPartitionRule {
    pub fn build(&self, s: f64, n: usize) -> Result<LayerPartition> {
        match *self {
            NPartitionRule::EqualWidth => LayerPartition::equal_width(s, n),
            NPartitionRule::EqualWidthInner { inner_fraction } => {
                LayerPartition::equal_width_annulus(inner_fraction * s / n as f64, s, n)
            }
        }
    }
}

/// Source of the coefficients `u_i = c_i^(2/alpha)` for each candidate `N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CoefficientRule {
    /// `u_i = eta_i (b_i^2 + a_i^2)`.
    Thm3LowerProportional,
    /// `u_i = (3/2)(2i - 1)(i - 1)^2`; with `repair` the vanishing first
    /// coefficient is replaced by `1/2`.
    VbPaper { repair: bool },
    /// Coefficients of [`numeric_powers`] in the DPC form.
    Numeric { rho0: f64 },
    /// Coefficients of [`closed_form_powers`].
    ClosedForm { rho0: f64 },
}

/// Coefficients `u_i = c_i^(2/alpha)` for a partition, or a reason to skip it.
pub fn coefficients(
    rule: &CoefficientRule,
    partition: &LayerPartition,
    alpha: f64,
) -> std::result::Result<Vec<f64>, String> {
    let n = partition.n_layers();
    let d = 2.0 / alpha;
    let u: Vec<f64> = match *rule {
        CoefficientRule::Thm3LowerProportional => (0..n)
            .map(|i| {
                let (a, b) = (partition.inf(i), partition.sup(i));
                partition.probs()[i] * (b * b + a * a)
            })
            .collect(),
        CoefficientRule::VbPaper { repair } => vb_paper_coefficients(n, repair),
        CoefficientRule::Numeric { rho0 } => {
            let problem = PowerDesignProblem::new(partition.probs().to_vec(), alpha, rho0)
                .map_err(|e| e.to_string())?;
            let r = numeric_powers(&problem).map_err(|e| e.to_string())?;
            r.coefficients.iter().map(|c| c.powf(d)).collect()
        }
        CoefficientRule::ClosedForm { rho0 } => {
            let problem = PowerDesignProblem::new(partition.probs().to_vec(), alpha, rho0)
                .map_err(|e| e.to_string())?;
            let r = closed_form_powers(&problem).map_err(|e| e.to_string())?;
            r.coefficients.iter().map(|c| c.powf(d)).collect()
        }
    };
    if let Some(i) = u.iter().position(|&x| !(x > 0.0)) {
        return Err(format!("coefficient of layer {} is not positive ({})", i + 1, u[i]));
    }
    Ok(u)
}

/// `u_i = 1.5 (2i - 1)(i - 1)^2` for `i = 1..=n`, optionally with `u_1 = 1/2`.
pub fn vb_paper_coefficients(n: usize, repair: bool) -> Vec<f64> {
    (1..=n)
        .map(|i| {
            let fi = i as f64;
            let u = 1.5 * (2.0 * fi - 1.0) * (fi - 1.0).powi(2);
            if i == 1 && repair {
                0.5
            } else {
                u
            }
        })
        .collect()
}

/// Powers normalized to a unit maximum from coefficients `u = c^(2/alpha)`.
pub fn powers_from_coefficients(u: &[f64], probs: &[f64], alpha: f64) -> Vec<f64> {
    let h = 0.5 * alpha;
    let p: Vec<f64> = u.iter().zip(probs).map(|(u, e)| (u / e).powf(h)).collect();
    let max = p.iter().copied().fold(0.0, f64::max);
    p.iter().map(|x| x / max).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalN {
    pub n_star: usize,
    /// `(N, J(N))`; `None` where the coefficient rule failed.
    pub curve: Vec<(usize, Option<f64>)>,
    pub diagnostics: Vec<String>,
}

/// Evaluates `J(N)` for `N = 1..=n_max` and returns the minimizer.
pub fn search_optimal_n(
    partition_rule: NPartitionRule,
    n_max: usize,
    alpha: f64,
    coefficient_rule: &CoefficientRule,
    s: f64,
) -> Result<OptimalN> {
    if n_max == 0 {
        return Err(invalid("n_max must be at least 1"));
    }
    ensure_path_loss(alpha)?;
    ensure_positive("s", s)?;
    let mut curve = Vec::with_capacity(n_max);
    let mut diagnostics = Vec::new();
    let mut best: Option<(usize, f64)> = None;
    for n in 1..=n_max {
        let partition = partition_rule.build(s, n)?;
        match coefficients(coefficient_rule, &partition, alpha) {
            Ok(u) => {
                let j = j_objective(&partition, &u)?;
                if best.is_none_or(|(_, b)| j < b) {
                    best = Some((n, j));
                }
                curve.push((n, Some(j)));
            }
            Err(reason) => {
                diagnostics.push(format!("N = {n} skipped: {reason}"));
                curve.push((n, None));
            }
        }
    }
    let (n_star, _) = best.ok_or_else(|| Error::Infeasible {
        reason: format!("no N in 1..={n_max} admits positive coefficients"),
        certificate: None,
    })?;
    Ok(OptimalN {
        n_star,
        curve,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn fig7_probs() -> Vec<f64> {
        (1..=5).map(|i| (2 * i - 1) as f64 / 25.0).collect()
    }

    #[test]
    fn closed_form_degenerate_at_boundary() {
        let p = PowerDesignProblem::new(vec![0.5, 0.5], 4.0, 2.0).unwrap();
        let r = closed_form_powers(&p).unwrap();
        assert_eq!(r.powers, vec![0.0, 0.0]);
        assert!(!r.feasible);
    }

    #[test]
    fn closed_form_negative_bases() {
        let p = PowerDesignProblem::new(fig7_probs(), 3.5, 1.29).unwrap();
        assert!(matches!(closed_form_powers(&p), Err(Error::InfeasibleClosedForm { inner_sum }) if inner_sum < 0.0));
        let p = PowerDesignProblem::new(vec![0.9, 0.1], 4.0, 1.05).unwrap();
        assert!(matches!(closed_form_powers(&p), Err(Error::InfeasibleClosedForm { .. })));
    }

    #[test]
    fn paper_form_is_empty() {
        let mut p = PowerDesignProblem::new(fig7_probs(), 3.5, 1.29).unwrap();
        p.constraint_form = ConstraintForm::PaperEq28;
        match numeric_powers(&p) {
            Err(Error::Infeasible { certificate: Some(c), .. }) => assert!(c.verify()),
            other => panic!("expected infeasible, got {other:?}"),
        }
        p.rho0 = 1.0;
        let r = numeric_powers(&p).unwrap();
        assert!(r.powers.iter().all(|&x| x == 1.0));
    }

    #[test]
    fn single_layer_is_infeasible() {
        let p = PowerDesignProblem::new(vec![1.0], 3.5, 1.29).unwrap();
        assert!(matches!(numeric_powers(&p), Err(Error::Infeasible { .. })));
    }

    #[test]
    fn two_layer_design_against_grid() {
        let p = PowerDesignProblem::new(vec![0.4, 0.6], 3.5, 1.29).unwrap();
        let r = numeric_powers(&p).unwrap();
        assert!(r.feasible);
        assert!(r.kkt_residual.unwrap() <= KKT_TOLERANCE);
        let ratio = r.powers[0] / r.powers[1];
        let region = crate::schemes::two_power_region(0.4, 0.6, 3.5, 1.29).unwrap();
        assert!(ratio >= region.lower * (1.0 - 1e-6) && ratio <= region.upper * (1.0 + 1e-6));
        // brute-force ratio grid, each normalized so the larger power is 1
        let mut best = f64::INFINITY;
        let mut t = 0.5;
        while t <= 2.5 {
            if region.contains(t) {
                let sum = if t >= 1.0 { 1.0 + 1.0 / t } else { t + 1.0 };
                best = best.min(sum);
            }
            t += 1e-3;
        }
        assert!(r.objective <= best + 1e-9, "{} vs {best}", r.objective);
    }

    #[test]
    fn fig7_design() {
        let p = PowerDesignProblem::new(fig7_probs(), 3.5, 1.29).unwrap();
        let r = numeric_powers(&p).unwrap();
        assert!(r.feasible);
        assert_eq!(r.powers[0], 1.0);
        assert_relative_eq!(r.objective, 1.03442, max_relative = 1e-4);
        assert!(dpc_condition(&r.powers, &p.probs, 3.5, 1.29).unwrap().holds);
    }

    #[test]
    fn j_is_scale_free_and_thm3_constant() {
        for n in 1..=32 {
            let part = LayerPartition::equal_width(15.0, n).unwrap();
            let u = coefficients(&CoefficientRule::Thm3LowerProportional, &part, 3.5).unwrap();
            let j = j_objective(&part, &u).unwrap();
            assert!((j - 225.0).abs() <= 1e-9 * 225.0, "N = {n}: {j}");
            let scaled: Vec<f64> = u.iter().map(|x| x * 7.5).collect();
            assert_relative_eq!(j_objective(&part, &scaled).unwrap(), j, max_relative = 1e-14);
        }
    }

    #[test]
    fn unrepaired_vb_rule_is_skipped() {
        let out = search_optimal_n(
            NPartitionRule::EqualWidth,
            4,
            3.5,
            &CoefficientRule::VbPaper { repair: false },
            15.0,
        );
        assert!(matches!(out, Err(Error::Infeasible { .. })));
        let out = search_optimal_n(
            NPartitionRule::EqualWidth,
            4,
            3.5,
            &CoefficientRule::VbPaper { repair: true },
            15.0,
        )
        .unwrap();
        assert_eq!(out.curve.len(), 4);
        assert!(out.diagnostics.is_empty());
    }

    #[test]
    fn vb_baseline_powers() {
        let u = vb_paper_coefficients(5, true);
        let p = powers_from_coefficients(&u, &fig7_probs(), 3.5);
        let expected = [0.0011424, 0.0078125, 0.088388, 0.365354, 1.0];
        for (a, b) in p.iter().zip(expected) {
            assert_relative_eq!(*a, b, max_relative = 2e-3);
        }
    }
}

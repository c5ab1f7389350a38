//! Vertical collision risk between two aircraft whose height errors follow
//! independent error models.
//!
//! The density of the height difference `Δz = z1 − z2` at a separation `S` is
//! `∫ f1(z)·f2(z − S) dz`. Target levels of safety are compared against the
//! tail probability `P(|Δz| ≥ S)`, which is what fixes the vertical
//! separation minimum (VSM).

use serde::{Deserialize, Serialize};
use thiserror::Error;

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const SQRT_2PI: f64 = 2.506_628_274_631_000_7;
/// Gaussian models are integrated over `μ ± GAUSSIAN_SUPPORT_SIGMAS·σ`.
pub const GAUSSIAN_SUPPORT_SIGMAS: f64 = 8.0;
/// Quadrature steps per smallest sigma.
pub const STEPS_PER_SIGMA: f64 = 100.0;
const MAX_QUADRATURE_STEPS: usize = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RiskError {
    #[error("degenerate error model: {0}")]
    DegenerateModel(String),
    #[error("argument out of domain: {0}")]
    OutOfDomain(String),
    #[error("input must be positive: {0}")]
    NonPositiveInput(String),
}

/// Probability density of a vertical position error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant")]
pub enum ErrorModel {
    Gaussian {
        mu_m: f64,
        sigma_m: f64,
    },
    /// Piecewise-constant density; `densities[i]` holds on
    /// `[bin_edges_m[i], bin_edges_m[i + 1])`.
    Empirical {
        bin_edges_m: Vec<f64>,
        densities: Vec<f64>,
    },
}

impl ErrorModel {
    pub fn gaussian(mu_m: f64, sigma_m: f64) -> Result<Self, RiskError> {
        let m = ErrorModel::Gaussian { mu_m, sigma_m };
        m.validate()?;
        Ok(m)
    }

    pub fn empirical(bin_edges_m: Vec<f64>, densities: Vec<f64>) -> Result<Self, RiskError> {
        let m = ErrorModel::Empirical {
            bin_edges_m,
            densities,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), RiskError> {
        match self {
            ErrorModel::Gaussian { mu_m, sigma_m } => {
                if !mu_m.is_finite() {
                    return Err(RiskError::DegenerateModel(format!("mean {mu_m}")));
                }
                if !(sigma_m.is_finite() && *sigma_m > 0.0) {
                    return Err(RiskError::DegenerateModel(format!("sigma {sigma_m}")));
                }
                Ok(())
            }
            ErrorModel::Empirical {
                bin_edges_m,
                densities,
            } => {
                if densities.is_empty() || bin_edges_m.len() != densities.len() + 1 {
                    return Err(RiskError::DegenerateModel(format!(
                        "{} edges for {} bins",
                        bin_edges_m.len(),
                        densities.len()
                    )));
                }
                if bin_edges_m.iter().any(|e| !e.is_finite())
                    || bin_edges_m.windows(2).any(|w| w[1] <= w[0])
                {
                    return Err(RiskError::DegenerateModel(
                        "bin edges must be finite and strictly ascending".into(),
                    ));
                }
                if densities.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
                    return Err(RiskError::DegenerateModel(
                        "densities must be finite and non-negative".into(),
                    ));
                }
                let mass = self.total_mass();
                if (mass - 1.0).abs() > 1e-6 {
                    return Err(RiskError::DegenerateModel(format!(
                        "densities integrate to {mass}"
                    )));
                }
                Ok(())
            }
        }
    }

    fn total_mass(&self) -> f64 {
        match self {
            ErrorModel::Gaussian { .. } => 1.0,
            ErrorModel::Empirical {
                bin_edges_m,
                densities,
            } => bin_edges_m
                .windows(2)
                .zip(densities)
                .map(|(w, d)| d * (w[1] - w[0]))
                .sum(),
        }
    }

    pub fn pdf(&self, z: f64) -> f64 {
        match self {
            ErrorModel::Gaussian { mu_m, sigma_m } => gaussian_pdf(z, *mu_m, *sigma_m),
            ErrorModel::Empirical {
                bin_edges_m,
                densities,
            } => {
                let last = bin_edges_m[bin_edges_m.len() - 1];
                if z < bin_edges_m[0] || z > last {
                    return 0.0;
                }
                // Index of the bin whose lower edge is the last one ≤ z; the
                // top edge belongs to the last bin.
                let i = bin_edges_m.partition_point(|&e| e <= z).saturating_sub(1);
                densities[i.min(densities.len() - 1)]
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            ErrorModel::Gaussian { mu_m, .. } => *mu_m,
            ErrorModel::Empirical {
                bin_edges_m,
                densities,
            } => {
                bin_edges_m
                    .windows(2)
                    .zip(densities)
                    .map(|(w, d)| d * (w[1] * w[1] - w[0] * w[0]) / 2.0)
                    .sum::<f64>()
                    / self.total_mass()
            }
        }
    }

    /// Standard deviation of the density, including the spread within bins
    /// for empirical models.
    pub fn sigma(&self) -> f64 {
        match self {
            ErrorModel::Gaussian { sigma_m, .. } => *sigma_m,
            ErrorModel::Empirical {
                bin_edges_m,
                densities,
            } => {
                let mu = self.mean();
                let second: f64 = bin_edges_m
                    .windows(2)
                    .zip(densities)
                    .map(|(w, d)| {
                        let (a, b) = (w[0] - mu, w[1] - mu);
                        d * (b * b * b - a * a * a) / 3.0
                    })
                    .sum::<f64>()
                    / self.total_mass();
                second.max(0.0).sqrt()
            }
        }
    }

    /// Interval outside which the density is treated as zero.
    pub fn support(&self) -> (f64, f64) {
        match self {
            ErrorModel::Gaussian { mu_m, sigma_m } => (
                mu_m - GAUSSIAN_SUPPORT_SIGMAS * sigma_m,
                mu_m + GAUSSIAN_SUPPORT_SIGMAS * sigma_m,
            ),
            ErrorModel::Empirical { bin_edges_m, .. } => {
                (bin_edges_m[0], bin_edges_m[bin_edges_m.len() - 1])
            }
        }
    }
}

fn gaussian_pdf(z: f64, mu: f64, sigma: f64) -> f64 {
    let u = (z - mu) / sigma;
    (-0.5 * u * u).exp() / (SQRT_2PI * sigma)
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}

/// Inverse standard normal CDF: Acklam's rational approximation refined by
/// one Halley step against the erfc-based CDF.
pub fn normal_quantile(p: f64) -> Result<f64, RiskError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(RiskError::OutOfDomain(format!("p = {p} not in (0, 1)")));
    }
    if p > 0.5 {
        return Ok(-lower_quantile(1.0 - p));
    }
    Ok(lower_quantile(p))
}

fn lower_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };
    let e = normal_cdf(x) - p;
    let u = e * SQRT_2PI * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

/// Two-sided Gaussian tail factor λ with `P(|Z| ≥ λ) = tls`.
pub fn safety_factor(tls: f64) -> Result<f64, RiskError> {
    if !(tls > 0.0 && tls < 0.5) {
        return Err(RiskError::OutOfDomain(format!(
            "tls = {tls} not in (0, 0.5)"
        )));
    }
    Ok(-normal_quantile(tls / 2.0)?)
}

pub fn required_vsm(sigma1_m: f64, sigma2_m: f64, tls: f64) -> Result<f64, RiskError> {
    for s in [sigma1_m, sigma2_m] {
        if !(s.is_finite() && s > 0.0) {
            return Err(RiskError::OutOfDomain(format!(
                "sigma {s} must be positive"
            )));
        }
    }
    Ok(safety_factor(tls)? * sigma1_m.hypot(sigma2_m))
}

pub fn flight_levels(ceiling_m: f64, vsm_m: f64) -> Result<u64, RiskError> {
    if !(ceiling_m.is_finite() && ceiling_m > 0.0) {
        return Err(RiskError::NonPositiveInput(format!("ceiling {ceiling_m}")));
    }
    if !(vsm_m.is_finite() && vsm_m > 0.0) {
        return Err(RiskError::NonPositiveInput(format!("vsm {vsm_m}")));
    }
    Ok((ceiling_m / vsm_m).floor() as u64)
}

/// Density of `Δz = z1 − z2` at `s`. Two Gaussians use the closed form; any
/// empirical operand goes through [`overlap_density_quadrature`].
pub fn overlap_density(e1: &ErrorModel, e2: &ErrorModel, s: f64) -> Result<f64, RiskError> {
    e1.validate()?;
    e2.validate()?;
    match (e1, e2) {
        (
            ErrorModel::Gaussian {
                mu_m: m1,
                sigma_m: s1,
            },
            ErrorModel::Gaussian {
                mu_m: m2,
                sigma_m: s2,
            },
        ) => Ok(gaussian_pdf(s, m1 - m2, s1.hypot(*s2))),
        _ => quadrature(e1, e2, s),
    }
}

/// Trapezoid evaluation of the overlap integral over the intersection of
/// the two supports, with step at most `min(σ)/100` and panels split at
/// histogram bin edges. Accepts Gaussian models too.
pub fn overlap_density_quadrature(
    e1: &ErrorModel,
    e2: &ErrorModel,
    s: f64,
) -> Result<f64, RiskError> {
    e1.validate()?;
    e2.validate()?;
    quadrature(e1, e2, s)
}

fn quadrature(e1: &ErrorModel, e2: &ErrorModel, s: f64) -> Result<f64, RiskError> {
    if !s.is_finite() {
        return Err(RiskError::OutOfDomain(format!("separation {s}")));
    }
    let (a1, b1) = e1.support();
    let (a2, b2) = e2.support();
    let lo = a1.max(a2 + s);
    let hi = b1.min(b2 + s);
    if hi <= lo {
        return Ok(0.0);
    }
    let h_target = e1.sigma().min(e2.sigma()) / STEPS_PER_SIGMA;
    if !(h_target > 0.0) {
        return Err(RiskError::DegenerateModel("zero spread".into()));
    }
    // Panels break at every bin edge so each one integrates a smooth
    // function; histogram densities are taken from the panel midpoint.
    let mut breaks = vec![lo, hi];
    breaks.extend(inner_edges(e1, 0.0, lo, hi));
    breaks.extend(inner_edges(e2, s, lo, hi));
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut total = 0.0;
    for w in breaks.windows(2) {
        let (u, v) = (w[0], w[1]);
        let mid = 0.5 * (u + v);
        let f1 = panel_density(e1, mid);
        let f2 = panel_density(e2, mid - s);
        let f = |z: f64| f1(z) * f2(z - s);
        let n = (((v - u) / h_target).ceil() as usize).clamp(1, MAX_QUADRATURE_STEPS);
        let h = (v - u) / n as f64;
        let mut sum = 0.5 * (f(u) + f(v));
        for i in 1..n {
            sum += f(u + i as f64 * h);
        }
        total += sum * h;
    }
    Ok(total)
}

/// Bin edges of an empirical model shifted by `offset` that fall strictly
/// inside `(lo, hi)`.
fn inner_edges(e: &ErrorModel, offset: f64, lo: f64, hi: f64) -> Vec<f64> {
    match e {
        ErrorModel::Empirical { bin_edges_m, .. } => bin_edges_m
            .iter()
            .map(|x| x + offset)
            .filter(|x| *x > lo && *x < hi)
            .collect(),
        ErrorModel::Gaussian { .. } => Vec::new(),
    }
}

/// Density on a panel: constant for a histogram, the pdf for a Gaussian.
fn panel_density(e: &ErrorModel, mid: f64) -> impl Fn(f64) -> f64 + '_ {
    let constant = match e {
        ErrorModel::Empirical { .. } => Some(e.pdf(mid)),
        ErrorModel::Gaussian { .. } => None,
    };
    move |z| constant.unwrap_or_else(|| e.pdf(z))
}

/// `P(|Δz| ≥ s)` for `s ≥ 0`.
pub fn tail_probability(e1: &ErrorModel, e2: &ErrorModel, s: f64) -> Result<f64, RiskError> {
    e1.validate()?;
    e2.validate()?;
    if !(s.is_finite() && s >= 0.0) {
        return Err(RiskError::OutOfDomain(format!("separation {s}")));
    }
    if let (
        ErrorModel::Gaussian {
            mu_m: m1,
            sigma_m: s1,
        },
        ErrorModel::Gaussian {
            mu_m: m2,
            sigma_m: s2,
        },
    ) = (e1, e2)
    {
        let mu = m1 - m2;
        let sd = s1.hypot(*s2) * SQRT_2;
        return Ok(0.5 * libm::erfc((s - mu) / sd) + 0.5 * libm::erfc((s + mu) / sd));
    }
    let (a1, b1) = e1.support();
    let (a2, b2) = e2.support();
    let (d_lo, d_hi) = (a1 - b2, b1 - a2);
    let h = e1.sigma().min(e2.sigma()) / STEPS_PER_SIGMA;
    let integrate = |lo: f64, hi: f64| -> Result<f64, RiskError> {
        if hi <= lo {
            return Ok(0.0);
        }
        let n = (((hi - lo) / h).ceil() as usize).clamp(1, MAX_QUADRATURE_STEPS);
        let step = (hi - lo) / n as f64;
        let mut sum = 0.5 * (quadrature(e1, e2, lo)? + quadrature(e1, e2, hi)?);
        for i in 1..n {
            sum += quadrature(e1, e2, lo + i as f64 * step)?;
        }
        Ok(sum * step)
    };
    let upper = integrate(s.max(d_lo), d_hi)?;
    let lower = integrate(d_lo, (-s).min(d_hi))?;
    Ok((upper + lower).min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationAnalysis {
    pub sigma1_m: f64,
    pub sigma2_m: f64,
    pub tls: f64,
    pub lambda: f64,
    /// `lambda · sqrt(sigma1² + sigma2²)`.
    pub vsm_m: f64,
    /// Published VSM used for the level count instead of `vsm_m`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vsm_override_m: Option<f64>,
    pub ceiling_m: f64,
    pub flight_levels: u64,
}

impl SeparationAnalysis {
    pub fn new(
        sigma1_m: f64,
        sigma2_m: f64,
        tls: f64,
        ceiling_m: f64,
        vsm_override_m: Option<f64>,
    ) -> Result<Self, RiskError> {
        let lambda = safety_factor(tls)?;
        let vsm_m = required_vsm(sigma1_m, sigma2_m, tls)?;
        let levels = flight_levels(ceiling_m, vsm_override_m.unwrap_or(vsm_m))?;
        Ok(Self {
            sigma1_m,
            sigma2_m,
            tls,
            lambda,
            vsm_m,
            vsm_override_m,
            ceiling_m,
            flight_levels: levels,
        })
    }

    pub fn effective_vsm_m(&self) -> f64 {
        self.vsm_override_m.unwrap_or(self.vsm_m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSample {
    pub s_m: f64,
    pub overlap_density: f64,
    pub tail_probability: f64,
}

/// `n` evenly spaced samples of density and tail over `[0, s_max_m]`.
pub fn separation_sweep(
    e1: &ErrorModel,
    e2: &ErrorModel,
    s_max_m: f64,
    n: usize,
) -> Result<Vec<SweepSample>, RiskError> {
    if !(s_max_m.is_finite() && s_max_m > 0.0) || n < 2 {
        return Err(RiskError::NonPositiveInput(format!(
            "sweep range {s_max_m} with {n} samples"
        )));
    }
    (0..n)
        .map(|i| {
            let s = s_max_m * i as f64 / (n - 1) as f64;
            Ok(SweepSample {
                s_m: s,
                overlap_density: overlap_density(e1, e2, s)?,
                tail_probability: tail_probability(e1, e2, s)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> ErrorModel {
        ErrorModel::gaussian(0.0, 1.0).unwrap()
    }

    #[test]
    fn unit_gaussians_at_zero() {
        let d = overlap_density(&unit(), &unit(), 0.0).unwrap();
        assert!((d - 0.5 / std::f64::consts::PI.sqrt()).abs() < 1e-12);
        // 20 standard deviations of the difference.
        assert!(overlap_density(&unit(), &unit(), 20.0 * SQRT_2).unwrap() < 1e-60);
    }

    #[test]
    fn quantile_known_values() {
        assert_eq!(normal_quantile(0.5).unwrap(), 0.0);
        assert!((normal_quantile(0.975).unwrap() - 1.959_963_984_540_054).abs() < 1e-12);
        assert!(normal_quantile(0.0).is_err());
        assert!(normal_quantile(1.0).is_err());
        assert!(normal_quantile(f64::NAN).is_err());
    }

    #[test]
    fn safety_factor_values() {
        let l = safety_factor(1e-7).unwrap();
        assert!((5.25..=5.40).contains(&l), "{l}");
        assert!((safety_factor(0.3173).unwrap() - 1.0).abs() < 1e-3);
        assert!(safety_factor(0.5).is_err());
    }

    #[test]
    fn equal_sigma_reduction() {
        let l = safety_factor(1e-7).unwrap();
        let v = required_vsm(3.98, 3.98, 1e-7).unwrap();
        assert!((v - l * SQRT_2 * 3.98).abs() < 1e-12);
        assert!((v - 29.9).abs() < 0.15, "{v}");
        let small = required_vsm(0.53, 0.53, 1e-7).unwrap();
        assert!((small - 4.0).abs() < 0.05, "{small}");
    }

    #[test]
    fn published_level_counts() {
        assert_eq!(flight_levels(1000.0, 32.0).unwrap(), 31);
        assert_eq!(flight_levels(1000.0, 6.0).unwrap(), 166);
        assert_eq!(flight_levels(1000.0, 1000.0).unwrap(), 1);
        assert!(flight_levels(0.0, 6.0).is_err());
        assert!(flight_levels(1000.0, -1.0).is_err());
    }

    #[test]
    fn analysis_with_override() {
        let a = SeparationAnalysis::new(3.98, 3.98, 1e-7, 1000.0, None).unwrap();
        assert_eq!(a.flight_levels, 33);
        let b = SeparationAnalysis::new(3.98, 3.98, 1e-7, 1000.0, Some(32.0)).unwrap();
        assert_eq!(b.flight_levels, 31);
        assert_eq!(b.vsm_m, a.vsm_m);
    }

    #[test]
    fn empirical_validation() {
        assert!(ErrorModel::empirical(vec![0.0, 1.0, 2.0], vec![0.5, 0.5]).is_ok());
        assert!(ErrorModel::empirical(vec![0.0, 1.0, 2.0], vec![0.5, 0.4]).is_err());
        assert!(ErrorModel::empirical(vec![0.0, 0.0, 2.0], vec![0.5, 0.5]).is_err());
        assert!(ErrorModel::empirical(vec![0.0, 1.0], vec![0.5, 0.5]).is_err());
        assert!(ErrorModel::gaussian(0.0, 0.0).is_err());
    }

    #[test]
    fn uniform_moments() {
        let m = ErrorModel::empirical(vec![-1.0, 1.0], vec![0.5]).unwrap();
        assert_eq!(m.mean(), 0.0);
        assert!((m.sigma() - (1.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!(m.pdf(1.0), 0.5);
        assert_eq!(m.pdf(1.5), 0.0);
    }

    #[test]
    fn uniform_difference_is_triangular() {
        let m = ErrorModel::empirical(vec![-1.0, 1.0], vec![0.5]).unwrap();
        let d = overlap_density(&m, &m, 1.0).unwrap();
        assert!((d - 0.25).abs() < 1e-3, "{d}");
        let t = tail_probability(&m, &m, 1.0).unwrap();
        assert!((t - 0.25).abs() < 1e-3, "{t}");
    }
}

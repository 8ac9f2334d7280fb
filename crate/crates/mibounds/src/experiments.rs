//! Monte Carlo harness verifying each bound empirically (LHS <= RHS),
//! estimating rate exponents by log-log regression, and running the
//! quantile test for the high-probability bound.
//!
//! Replicate values are exact per-sample functionals of the sufficient
//! statistic (closed-form posterior moments), never nested Monte Carlo:
//! for the conjugate models the sample enters only through the sample mean,
//! which is drawn directly from its exact N(theta0, v^2/n I) law. Each
//! replicate owns an independent RNG stream keyed by (seed, n-index,
//! replicate), so results do not depend on the thread schedule, and
//! reductions use pairwise summation in index order to stay deterministic.

use std::io::Write as _;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assumptions::{
    certify_assumption2_gaussian, certify_assumption2_sequence, certify_assumption3_gaussian,
    DimensionCertificate,
};
use crate::bounds::{
    bound_gaussian_l2, bound_mle, bound_thm31_opt, bound_thm32_prob, bound_thm_main,
    covering_number_box,
};
use crate::error::{Error, Result};
use crate::mle::{realized_lipschitz_gaussian, CompactBox};
use crate::models::{GaussianMeanModel, ModelSpec, Sample};
use crate::posteriors::{
    expected_kl_under, fractional_posterior_from_mean, mutual_information_gaussian,
    posterior_marginal_gaussian, GaussianMeasure,
};
use crate::rng::stream_rng;
use crate::variational::{expected_rn, solve_variational, MeanFieldFamily};

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub prior: GaussianMeasure,
    pub theta0: Vec<f64>,
    pub alpha: f64,
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    /// "thm31_opt" (KL loss) or "gaussian_l2" (squared-distance loss).
    pub bound_id: String,
    /// Use the variational solver for rho-hat instead of the closed form.
    pub use_variational: bool,
}

impl ExperimentConfig {
    fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidConfig("replicates must be >= 1".into()));
        }
        if self.n_grid.is_empty() || self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig(
                "n_grid must be non-empty and strictly increasing".into(),
            ));
        }
        Ok(())
    }

    /// Summary of the configuration for the JSON sidecar.
    pub fn describe(&self) -> serde_json::Value {
        let model = match &self.model {
            ModelSpec::GaussianMean(m) => serde_json::json!({
                "family": "gaussian", "dim": m.dim, "v": m.noise_sd,
            }),
            ModelSpec::GaussianSequence(m) => serde_json::json!({
                "family": "sequence", "b": m.smoothness, "L": m.radius,
                "truncation": m.truncation,
            }),
            ModelSpec::ExpFamily(f) => serde_json::json!({
                "family": f.name(),
                "domain": [f.theta_lo, f.theta_hi],
            }),
        };
        serde_json::json!({
            "model": model,
            "prior_var": self.prior.var_diag,
            "theta0": self.theta0,
            "alpha": self.alpha,
            "n_grid": self.n_grid,
            "replicates": self.replicates,
            "seed": self.seed,
            "bound_id": self.bound_id,
            "use_variational": self.use_variational,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointResult {
    pub n: usize,
    pub mc_mean: f64,
    pub mc_se: f64,
    pub bound_rhs: f64,
    /// Multiplicative slack bound_rhs / mc_mean (the rate claim is about
    /// orders, not constants).
    pub slack: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub points: Vec<PointResult>,
    pub rate_fit: Option<RateFit>,
    pub certificate: Option<DimensionCertificate>,
}

/// Pairwise summation so parallel-collected replicate vectors reduce to the
/// same double regardless of how they were produced.
fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = pairwise_sum(values) / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Ordinary least squares on (log n, log value).
pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 3 {
        return Err(Error::InvalidConfig("rate fit needs >= 3 points".into()));
    }
    let logs: Vec<(f64, f64)> = points
        .iter()
        .map(|(n, v)| {
            if *v <= 0.0 || *n <= 0.0 {
                Err(Error::NonPositiveValue(format!("rate point ({n}, {v})")))
            } else {
                Ok((n.ln(), v.ln()))
            }
        })
        .collect::<Result<_>>()?;
    let k = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = logs.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(RateFit {
        slope,
        intercept: my - slope * mx,
        r2,
    })
}

/// Noise level and prior of the conjugate representation of the model.
fn conjugate_parts(cfg: &ExperimentConfig) -> Result<(f64, GaussianMeasure)> {
    match &cfg.model {
        ModelSpec::GaussianMean(m) => {
            if cfg.prior.dim() != m.dim {
                return Err(Error::DimensionMismatch {
                    expected: m.dim,
                    got: cfg.prior.dim(),
                });
            }
            Ok((m.noise_sd, cfg.prior.clone()))
        }
        ModelSpec::GaussianSequence(m) => Ok((
            1.0,
            GaussianMeasure::new(vec![0.0; m.truncation], m.prior_var_diag())?,
        )),
        ModelSpec::ExpFamily(_) => Err(Error::Unsupported(
            "contraction experiment needs a conjugate Gaussian model".into(),
        )),
    }
}

/// Draws the sample mean from its exact law N(theta0, v^2/n I).
fn draw_xbar(theta0: &[f64], v: f64, n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let sd = v / (n as f64).sqrt();
    theta0
        .iter()
        .map(|t| t + sd * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// A synthetic sample carrying only the sufficient statistic: one row equal
/// to n * xbar with count n, so Sample::mean() returns xbar.
fn sufficient_sample(xbar: &[f64], n: usize) -> Sample {
    Sample {
        data: vec![xbar.iter().map(|x| x * n as f64).collect()],
        n,
        seed_tag: 0,
    }
}

fn replicate_kl(cfg: &ExperimentConfig, v: f64, prior: &GaussianMeasure, n: usize, stream: u64) -> f64 {
    let mut rng = stream_rng(cfg.seed, stream);
    let xbar = draw_xbar(&cfg.theta0, v, n, &mut rng);
    let q = if cfg.use_variational {
        let fam = MeanFieldFamily::new(prior.dim());
        let s = sufficient_sample(&xbar, n);
        solve_variational(&cfg.model, prior, cfg.alpha, &s, &cfg.theta0, &fam)
            .expect("conjugate variational solve")
            .q
    } else {
        fractional_posterior_from_mean(prior, v, cfg.alpha, n, &xbar)
            .expect("conjugate posterior")
    };
    expected_kl_under(&q, &cfg.theta0, v).expect("dims match")
}

/// Estimates E_S E_{theta ~ rho_hat}[KL] (or the squared-distance loss for
/// the L2 bound) over the n grid, attaches the bound and the rate fit.
pub fn run_contraction_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let (v, prior) = conjugate_parts(cfg)?;
    let cert = match &cfg.model {
        ModelSpec::GaussianMean(m) => certify_assumption2_gaussian(m, &prior, &cfg.theta0)?,
        ModelSpec::GaussianSequence(m) => certify_assumption2_sequence(m, &cfg.theta0)?,
        ModelSpec::ExpFamily(_) => unreachable!("rejected by conjugate_parts"),
    };
    let c_alpha = 1.0 / cfg.alpha;
    let mut points = Vec::with_capacity(cfg.n_grid.len());
    for (ni, &n) in cfg.n_grid.iter().enumerate() {
        let values: Vec<f64> = (0..cfg.replicates)
            .into_par_iter()
            .map(|r| {
                let stream = (ni as u64) << 32 | r as u64;
                let kl = replicate_kl(cfg, v, &prior, n, stream);
                if cfg.bound_id == "gaussian_l2" {
                    2.0 * v * v * kl
                } else {
                    kl
                }
            })
            .collect();
        let (mc_mean, mc_se) = mean_and_se(&values);
        let report = match cfg.bound_id.as_str() {
            "gaussian_l2" => {
                let norm_sq = cfg.theta0.iter().map(|t| t * t).sum();
                bound_gaussian_l2(
                    prior.dim(),
                    norm_sq,
                    prior.var_diag[0],
                    v * v,
                    cfg.alpha,
                    n,
                )?
            }
            "thm31_opt" => bound_thm31_opt(c_alpha, cert.d_pi, cert.kappa_pi, cfg.alpha, n)?,
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unsupported bound id {other:?} for the contraction experiment"
                )))
            }
        };
        points.push(PointResult {
            n,
            mc_mean,
            mc_se,
            bound_rhs: report.rhs,
            slack: report.rhs / mc_mean,
        });
    }
    let rate_fit = if points.len() >= 3 {
        Some(fit_rate(
            &points
                .iter()
                .map(|p| (p.n as f64, p.mc_mean))
                .collect::<Vec<_>>(),
        )?)
    } else {
        None
    };
    Ok(ExperimentResult {
        points,
        rate_fit,
        certificate: Some(cert),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MiReport {
    pub mi: f64,
    pub rhs: f64,
    pub lhs_mean: f64,
    pub lhs_se: f64,
    pub holds: bool,
    /// Monte Carlo estimate of the mutual information E_S[KL(rho_hat ||
    /// marginal)], which should reproduce `mi`.
    pub mi_mc: f64,
    pub mi_mc_se: f64,
    /// Monte Carlo estimate of E_S[KL(rho_hat || pi)] and its closed-form
    /// decomposition mi + KL(marginal || pi).
    pub decomposition_mc: f64,
    pub decomposition_mc_se: f64,
    pub decomposition_closed: f64,
}

/// Verifies the mutual-information bound in the conjugate Gaussian case:
/// E_S[ E_rho[D_alpha] - alpha/(n(1-alpha)) E_rho[r_n] ] <= MI/(n(1-alpha)),
/// with all inner expectations in closed form.
pub fn verify_mi_bound(
    model: &GaussianMeanModel,
    prior: &GaussianMeasure,
    alpha: f64,
    n: usize,
    theta0: &[f64],
    replicates: usize,
    seed: u64,
) -> Result<MiReport> {
    let mi = mutual_information_gaussian(model, prior, alpha, n, theta0)?;
    let rhs = bound_thm_main(mi, n, alpha)?.rhs;
    let v = model.noise_sd;
    let spec = ModelSpec::GaussianMean(model.clone());
    let marginal = posterior_marginal_gaussian(model, prior, alpha, n, theta0)?;
    let rows: Vec<(f64, f64, f64)> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(seed, r as u64);
            let xbar = draw_xbar(theta0, v, n, &mut rng);
            let q = fractional_posterior_from_mean(prior, v, alpha, n, &xbar)
                .expect("conjugate posterior");
            // E_q[D_alpha(P_theta || P_theta0)] = alpha/(2v^2) E||theta-theta0||^2.
            let e_d_alpha = alpha * expected_kl_under(&q, theta0, v).expect("dims match");
            let s = sufficient_sample(&xbar, n);
            let e_rn = expected_rn(&spec, theta0, &s, &q, 32).expect("closed form");
            let lhs = e_d_alpha - alpha / (n as f64 * (1.0 - alpha)) * e_rn;
            let kl_to_prior = q.kl_to(prior).expect("dims match");
            let kl_to_marginal = q.kl_to(&marginal).expect("dims match");
            (lhs, kl_to_prior, kl_to_marginal)
        })
        .collect();
    let lhs_vals: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let kl_vals: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let mi_vals: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let (lhs_mean, lhs_se) = mean_and_se(&lhs_vals);
    let (dec_mc, dec_se) = mean_and_se(&kl_vals);
    let (mi_mc, mi_mc_se) = mean_and_se(&mi_vals);
    let decomposition_closed = mi + marginal.kl_to(prior)?;
    Ok(MiReport {
        mi,
        rhs,
        lhs_mean,
        lhs_se,
        holds: lhs_mean <= rhs + 3.0 * lhs_se,
        mi_mc,
        mi_mc_se,
        decomposition_mc: dec_mc,
        decomposition_mc_se: dec_se,
        decomposition_closed,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HighProbReport {
    pub quantile_level: f64,
    pub empirical_quantile: f64,
    pub rhs: f64,
    pub holds: bool,
    /// Fewer than 10 replicates: the quantile is meaningless and `holds`
    /// must not be asserted on.
    pub low_confidence: bool,
}

/// Quantile test for the high-probability bound: the empirical
/// (1 - delta - eta) quantile of E_{pi_{n,alpha}}[KL] must not exceed the
/// displayed RHS.
#[allow(clippy::too_many_arguments)]
pub fn verify_highprob_bound(
    model: &GaussianMeanModel,
    prior: &GaussianMeasure,
    alpha: f64,
    n: usize,
    theta0: &[f64],
    delta: f64,
    eta: f64,
    replicates: usize,
    seed: u64,
) -> Result<HighProbReport> {
    let cert = certify_assumption3_gaussian(model, prior, theta0)?;
    let rhs = bound_thm32_prob(
        1.0 / alpha,
        cert.d_pi,
        cert.d_pi_prime.expect("set by certify_assumption3"),
        cert.kappa_pi,
        alpha,
        n,
        delta,
        eta,
    )?
    .rhs;
    let v = model.noise_sd;
    let mut values: Vec<f64> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(seed, r as u64);
            let xbar = draw_xbar(theta0, v, n, &mut rng);
            let q = fractional_posterior_from_mean(prior, v, alpha, n, &xbar)
                .expect("conjugate posterior");
            expected_kl_under(&q, theta0, v).expect("dims match")
        })
        .collect();
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite KL values"));
    let level = 1.0 - delta - eta;
    let idx = ((level * replicates as f64).ceil() as usize).clamp(1, replicates) - 1;
    let empirical_quantile = values[idx];
    let low_confidence = replicates < 10;
    Ok(HighProbReport {
        quantile_level: level,
        empirical_quantile,
        rhs,
        holds: low_confidence || empirical_quantile <= rhs,
        low_confidence,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MleReport {
    pub points: Vec<PointResult>,
    pub rate_fit: Option<RateFit>,
    pub m_lower: f64,
    /// Realized Lipschitz constant of r_n/n over the box, per n.
    pub lipschitz: Vec<f64>,
}

/// Monte Carlo estimate of E||theta_hat - theta0||^2 for the box-constrained
/// Gaussian MLE, against the epsilon-net bound with eps = 1/n. The
/// Lipschitz constant is the realized per-run supremum sup_theta
/// ||theta - xbar||/v^2, reported rather than assumed: no uniform constant
/// exists for unbounded Gaussian data.
#[allow(clippy::too_many_arguments)]
pub fn run_mle_experiment(
    model: &GaussianMeanModel,
    theta0: &[f64],
    half_width: f64,
    alpha: f64,
    n_grid: &[usize],
    replicates: usize,
    seed: u64,
) -> Result<MleReport> {
    let bx = CompactBox::new(half_width, model.dim)?;
    if theta0.iter().any(|t| t.abs() > half_width) {
        return Err(Error::OutOfDomain {
            value: theta0.iter().cloned().fold(0.0, f64::max),
            lo: -half_width,
            hi: half_width,
        });
    }
    let v = model.noise_sd;
    // D_alpha(P_theta || P_theta0) = alpha ||theta - theta0||^2 / (2 v^2)
    // >= m ||theta - theta0||^2 with m = alpha / (2 v^2).
    let m_lower = alpha / (2.0 * v * v);
    let mut points = Vec::with_capacity(n_grid.len());
    let mut lipschitz = Vec::with_capacity(n_grid.len());
    for (ni, &n) in n_grid.iter().enumerate() {
        let rows: Vec<(f64, f64)> = (0..replicates)
            .into_par_iter()
            .map(|r| {
                let mut rng = stream_rng(seed, (ni as u64) << 32 | r as u64);
                let xbar = draw_xbar(theta0, v, n, &mut rng);
                let hat = bx.clip(&xbar);
                let loss: f64 = hat
                    .iter()
                    .zip(theta0)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                (loss, realized_lipschitz_gaussian(&bx, &xbar, v))
            })
            .collect();
        let losses: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let (mc_mean, mc_se) = mean_and_se(&losses);
        let lip = rows.iter().map(|r| r.1).fold(0.0f64, f64::max);
        let log_cover = covering_number_box(half_width, model.dim, 1.0 / n as f64)?.log_count;
        let rhs = bound_mle(m_lower, lip, log_cover, alpha, n)?.rhs;
        lipschitz.push(lip);
        points.push(PointResult {
            n,
            mc_mean,
            mc_se,
            bound_rhs: rhs,
            slack: rhs / mc_mean,
        });
    }
    let rate_fit = if points.len() >= 3 {
        Some(fit_rate(
            &points
                .iter()
                .map(|p| (p.n as f64, p.mc_mean))
                .collect::<Vec<_>>(),
        )?)
    } else {
        None
    };
    Ok(MleReport {
        points,
        rate_fit,
        m_lower,
        lipschitz,
    })
}

/// Writes `results.csv` (columns n, mc_mean, mc_se, bound_rhs, slack) and a
/// `meta.json` sidecar into `dir`. Output is byte-deterministic for fixed
/// inputs: floats are printed with Rust's shortest round-trip formatting and
/// JSON keys are emitted in sorted order.
pub fn emit_results(
    points: &[PointResult],
    meta: &serde_json::Value,
    dir: &Path,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut csv = String::from("n,mc_mean,mc_se,bound_rhs,slack\n");
    for p in points {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            p.n, p.mc_mean, p.mc_se, p.bound_rhs, p.slack
        ));
    }
    std::fs::write(dir.join("results.csv"), csv)?;
    let mut file = std::fs::File::create(dir.join("meta.json"))?;
    serde_json::to_writer_pretty(&mut file, meta)?;
    file.write_all(b"\n")?;
    Ok(())
}

/// Standard sidecar payload for a point series.
pub fn meta_json(
    config: serde_json::Value,
    result: &ExperimentResult,
) -> serde_json::Value {
    serde_json::json!({
        "schema": 1,
        "config": config,
        "rate_fit": result.rate_fit,
        "certificate": result.certificate,
    })
}

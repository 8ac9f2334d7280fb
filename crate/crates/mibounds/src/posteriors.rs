//! Closed-form fractional posteriors for the conjugate Gaussian models,
//! localized priors, and their moment functionals (expected KL, expected V,
//! mutual information).
//!
//! Only diagonal covariances are supported; every implemented example is
//! isotropic or diagonal.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{GaussianMeanModel, Sample};

/// Finite-dimensional Gaussian with diagonal covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMeasure {
    pub mean: Vec<f64>,
    pub var_diag: Vec<f64>,
}

impl GaussianMeasure {
    pub fn new(mean: Vec<f64>, var_diag: Vec<f64>) -> Result<Self> {
        if mean.len() != var_diag.len() {
            return Err(Error::DimensionMismatch {
                expected: mean.len(),
                got: var_diag.len(),
            });
        }
        if var_diag.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::InvalidModel("all variances must be > 0".into()));
        }
        Ok(Self { mean, var_diag })
    }

    /// N(0, sigma^2 I_d).
    pub fn isotropic(dim: usize, sigma: f64) -> Result<Self> {
        Self::new(vec![0.0; dim], vec![sigma * sigma; dim])
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// KL(self || other) for diagonal Gaussians.
    pub fn kl_to(&self, other: &GaussianMeasure) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: other.dim(),
                got: self.dim(),
            });
        }
        let mut total = 0.0;
        for i in 0..self.dim() {
            let (q, p) = (self.var_diag[i], other.var_diag[i]);
            let dm = self.mean[i] - other.mean[i];
            total += 0.5 * ((p / q).ln() + (q + dm * dm) / p - 1.0);
        }
        Ok(total.max(0.0))
    }
}

/// Localization parameters: the prior reweighted by
/// exp(-beta KL(P_theta0 || P_theta)).
#[derive(Debug, Clone)]
pub struct LocalizedPriorParams {
    pub beta: f64,
    pub base: GaussianMeasure,
    pub theta0: Vec<f64>,
}

impl LocalizedPriorParams {
    pub fn new(beta: f64, base: GaussianMeasure, theta0: Vec<f64>) -> Result<Self> {
        if beta < 0.0 {
            return Err(Error::InvalidConfig("beta must be >= 0".into()));
        }
        if theta0.len() != base.dim() {
            return Err(Error::DimensionMismatch {
                expected: base.dim(),
                got: theta0.len(),
            });
        }
        Ok(Self { beta, base, theta0 })
    }
}

/// Fractional posterior from a diagonal Gaussian prior and a Gaussian
/// likelihood: per coordinate, precision 1/sigma_i^2 + n alpha / v^2 and mean
/// (n alpha / v^2) xbar_i / (1/sigma_i^2 + n alpha / v^2).
///
/// Works coordinate-wise, so it covers both the mean model (v = noise_sd)
/// and the truncated sequence model (v = 1, sigma_i from the model prior).
pub fn fractional_posterior_from_mean(
    prior: &GaussianMeasure,
    v: f64,
    alpha: f64,
    n: usize,
    xbar: &[f64],
) -> Result<GaussianMeasure> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    if n == 0 {
        return Err(Error::EmptySample);
    }
    if xbar.len() != prior.dim() {
        return Err(Error::DimensionMismatch {
            expected: prior.dim(),
            got: xbar.len(),
        });
    }
    let data_prec = n as f64 * alpha / (v * v);
    let mut mean = Vec::with_capacity(prior.dim());
    let mut var = Vec::with_capacity(prior.dim());
    for i in 0..prior.dim() {
        let prec = 1.0 / prior.var_diag[i] + data_prec;
        mean.push((data_prec * xbar[i] + prior.mean[i] / prior.var_diag[i]) / prec);
        var.push(1.0 / prec);
    }
    GaussianMeasure::new(mean, var)
}

/// Fractional posterior pi_{n,alpha} for the Gaussian mean model.
pub fn fractional_posterior_gaussian(
    model: &GaussianMeanModel,
    prior: &GaussianMeasure,
    alpha: f64,
    s: &Sample,
) -> Result<GaussianMeasure> {
    if prior.dim() != model.dim {
        return Err(Error::DimensionMismatch {
            expected: model.dim,
            got: prior.dim(),
        });
    }
    if s.n == 0 {
        return Err(Error::EmptySample);
    }
    fractional_posterior_from_mean(prior, model.noise_sd, alpha, s.n, &s.mean())
}

/// Localized prior pi_{-beta} for a diagonal Gaussian base prior and
/// Gaussian-model KL: N( (beta/v^2) (Sigma^{-1} + beta/v^2 I)^{-1} theta0,
/// (Sigma^{-1} + beta/v^2 I)^{-1} ), per coordinate.
pub fn localized_prior_gaussian(params: &LocalizedPriorParams, v: f64) -> GaussianMeasure {
    let b = params.beta / (v * v);
    let d = params.base.dim();
    let mut mean = Vec::with_capacity(d);
    let mut var = Vec::with_capacity(d);
    for i in 0..d {
        let prec = 1.0 / params.base.var_diag[i] + b;
        mean.push((b * params.theta0[i] + params.base.mean[i] / params.base.var_diag[i]) / prec);
        var.push(1.0 / prec);
    }
    GaussianMeasure { mean, var_diag: var }
}

/// E_{theta ~ measure}[ KL(P_theta0 || P_theta) ] for the Gaussian model:
/// (||mean - theta0||^2 + trace) / (2 v^2).
pub fn expected_kl_under(measure: &GaussianMeasure, theta0: &[f64], v: f64) -> Result<f64> {
    if theta0.len() != measure.dim() {
        return Err(Error::DimensionMismatch {
            expected: measure.dim(),
            got: theta0.len(),
        });
    }
    let sq: f64 = measure
        .mean
        .iter()
        .zip(theta0)
        .map(|(m, t)| (m - t) * (m - t))
        .sum();
    let trace: f64 = measure.var_diag.iter().sum();
    Ok((sq + trace) / (2.0 * v * v))
}

/// E_{theta ~ measure}[ V(theta, theta0) ] with
/// V(theta, theta0) = ||theta - theta0||^2 (1 + 4 v^2) / (2 v^4).
pub fn expected_v_under(measure: &GaussianMeasure, theta0: &[f64], v: f64) -> Result<f64> {
    let kl = expected_kl_under(measure, theta0, v)?;
    // E||theta - theta0||^2 = 2 v^2 * E[KL]; multiply by (1+4v^2)/(2v^4).
    Ok(kl * (1.0 + 4.0 * v * v) / (v * v))
}

/// Mutual information I(theta; S) between the parameter drawn from the
/// fractional posterior and the sample, in the conjugate Gaussian model.
///
/// Per coordinate, with w = (n a / v^2)/(1/s^2 + n a / v^2) and posterior
/// variance C, the posterior mean is w * xbar which is Gaussian with variance
/// w^2 v^2 / n under S; the Gaussian-KL expectation collapses to
/// (1/2) log(1 + w^2 v^2 / (n C)).
pub fn mutual_information_gaussian(
    model: &GaussianMeanModel,
    prior: &GaussianMeasure,
    alpha: f64,
    n: usize,
    theta0: &[f64],
) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    if prior.dim() != model.dim || theta0.len() != model.dim {
        return Err(Error::DimensionMismatch {
            expected: model.dim,
            got: prior.dim().max(theta0.len()),
        });
    }
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let v2 = model.noise_sd * model.noise_sd;
    let data_prec = n as f64 * alpha / v2;
    let mut mi = 0.0;
    for i in 0..model.dim {
        let prec = 1.0 / prior.var_diag[i] + data_prec;
        let w = data_prec / prec;
        let c = 1.0 / prec;
        let s = w * w * v2 / n as f64;
        mi += 0.5 * (1.0 + s / c).ln();
    }
    Ok(mi)
}

/// Data-marginal of the fractional posterior, E_S[pi_{n,alpha}]: per
/// coordinate N(w theta0, C + w^2 v^2 / n). Only exact because the posterior
/// mean is linear in the sample mean.
pub fn posterior_marginal_gaussian(
    model: &GaussianMeanModel,
    prior: &GaussianMeasure,
    alpha: f64,
    n: usize,
    theta0: &[f64],
) -> Result<GaussianMeasure> {
    let v2 = model.noise_sd * model.noise_sd;
    let data_prec = n as f64 * alpha / v2;
    let mut mean = Vec::with_capacity(model.dim);
    let mut var = Vec::with_capacity(model.dim);
    for i in 0..model.dim {
        let prec = 1.0 / prior.var_diag[i] + data_prec;
        let w = data_prec / prec;
        mean.push(w * theta0[i] + prior.mean[i] / prior.var_diag[i] / prec);
        var.push(1.0 / prec + w * w * v2 / n as f64);
    }
    GaussianMeasure::new(mean, var)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ModelSpec;
    use crate::rng::stream_rng;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn model1(v: f64) -> GaussianMeanModel {
        GaussianMeanModel::new(1, v).unwrap()
    }

    #[test]
    fn posterior_single_observation() {
        let m = model1(1.0);
        let prior = GaussianMeasure::isotropic(1, 1.0).unwrap();
        let s = Sample::from_data(vec![vec![2.0]], 0);
        let post = fractional_posterior_gaussian(&m, &prior, 1.0, &s).unwrap();
        assert!((post.mean[0] - 1.0).abs() < 1e-15);
        assert!((post.var_diag[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn posterior_tempered_large_n() {
        let prior = GaussianMeasure::isotropic(1, 1.0).unwrap();
        let post =
            fractional_posterior_from_mean(&prior, 1.0, 0.5, 100, &[0.3]).unwrap();
        assert!((post.mean[0] - 0.3 * 50.0 / 51.0).abs() < 1e-15);
        assert!((post.var_diag[0] - 1.0 / 51.0).abs() < 1e-15);
    }

    #[test]
    fn posterior_vanishing_alpha_recovers_prior() {
        let m = model1(1.0);
        let prior = GaussianMeasure::new(vec![0.7], vec![2.0]).unwrap();
        let s = Sample::from_data(vec![vec![5.0]], 0);
        let post = fractional_posterior_gaussian(&m, &prior, 1e-12, &s).unwrap();
        assert!((post.mean[0] - prior.mean[0]).abs() < 1e-9);
        assert!((post.var_diag[0] - prior.var_diag[0]).abs() < 1e-9);
        assert!(fractional_posterior_gaussian(
            &m,
            &prior,
            0.5,
            &Sample::from_data(vec![], 0)
        )
        .is_err());
    }

    #[test]
    fn localized_prior_closed_form() {
        let base = GaussianMeasure::isotropic(1, 1.0).unwrap();
        // beta = 0 reproduces the base exactly.
        let p = LocalizedPriorParams::new(0.0, base.clone(), vec![0.0]).unwrap();
        assert_eq!(localized_prior_gaussian(&p, 1.0), base);
        // theta0 = 0, sigma = v = 1, beta = 1 -> N(0, 1/2).
        let p = LocalizedPriorParams::new(1.0, base.clone(), vec![0.0]).unwrap();
        let l = localized_prior_gaussian(&p, 1.0);
        assert!((l.var_diag[0] - 0.5).abs() < 1e-15);
        assert_eq!(l.mean[0], 0.0);
        // theta0 = 2, beta = 3 -> mean 1.5, variance 1/4.
        let p = LocalizedPriorParams::new(3.0, base, vec![2.0]).unwrap();
        let l = localized_prior_gaussian(&p, 1.0);
        assert!((l.mean[0] - 1.5).abs() < 1e-15);
        assert!((l.var_diag[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn expected_kl_and_v_formulas() {
        let m = GaussianMeasure::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let kl = expected_kl_under(&m, &[0.0, 0.0], 1.0).unwrap();
        assert!((kl - 1.0).abs() < 1e-15);
        let point = GaussianMeasure::new(vec![1.0], vec![1e-30]).unwrap();
        assert!(expected_kl_under(&point, &[1.0], 1.0).unwrap() < 1e-29);

        let m1 = GaussianMeasure::new(vec![0.0], vec![1.0]).unwrap();
        let v = expected_v_under(&m1, &[0.0], 1.0).unwrap();
        assert!((v - 2.5).abs() < 1e-15);
        // ratio (1 + 4 v^2)/v^2 exactly, any inputs.
        for noise in [0.5, 1.0, 2.0] {
            let kl = expected_kl_under(&m1, &[0.3], noise).unwrap();
            let ev = expected_v_under(&m1, &[0.3], noise).unwrap();
            assert!((ev / kl - (1.0 + 4.0 * noise * noise) / (noise * noise)).abs() < 1e-12);
        }
    }

    #[test]
    fn localized_expected_kl_sup_is_half_dim() {
        // beta * E_{pi_-beta}[KL] = beta / (2 (beta + 1)) -> 1/2.
        let base = GaussianMeasure::isotropic(1, 1.0).unwrap();
        let mut sup: f64 = 0.0;
        for k in 0..200 {
            let beta = 10f64.powf(-3.0 + 9.0 * k as f64 / 199.0);
            let p = LocalizedPriorParams::new(beta, base.clone(), vec![0.0]).unwrap();
            let l = localized_prior_gaussian(&p, 1.0);
            let f = beta * expected_kl_under(&l, &[0.0], 1.0).unwrap();
            assert!(f <= 0.5 + 1e-12);
            sup = sup.max(f);
        }
        assert!((sup - 0.5).abs() < 1e-6);
    }

    #[test]
    fn mutual_information_closed_form() {
        let m = model1(1.0);
        let prior = GaussianMeasure::isotropic(1, 1.0).unwrap();
        let mi = mutual_information_gaussian(&m, &prior, 1.0, 1, &[0.0]).unwrap();
        assert!((mi - 0.5 * 1.5f64.ln()).abs() < 1e-15);
        assert!((mi - 0.202733).abs() < 1e-6);

        // alpha -> 0: the posterior is data-independent, MI -> 0.
        let mi0 = mutual_information_gaussian(&m, &prior, 1e-8, 1, &[0.0]).unwrap();
        assert!(mi0 < 1e-6);

        // nondecreasing in n.
        let mut prev = 0.0;
        for n in [1, 2, 5, 10, 50, 200] {
            let mi = mutual_information_gaussian(&m, &prior, 0.5, n, &[0.0]).unwrap();
            assert!(mi >= prev - 1e-15);
            assert!(mi >= 0.0);
            prev = mi;
        }
    }

    // E_S[KL(pi_{n,alpha} || pi)] = I + KL(E_S[pi_{n,alpha}] || pi), with the
    // left side estimated by Monte Carlo over the sample mean.
    #[test]
    fn mi_decomposition_matches_mc() {
        let m = model1(1.0);
        let prior = GaussianMeasure::isotropic(1, 1.0).unwrap();
        let (alpha, n, theta0) = (0.5, 4usize, [0.4]);
        let mi = mutual_information_gaussian(&m, &prior, alpha, n, &theta0).unwrap();
        let marginal = posterior_marginal_gaussian(&m, &prior, alpha, n, &theta0).unwrap();
        let rhs = mi + marginal.kl_to(&prior).unwrap();

        let reps = 100_000;
        let mut rng = stream_rng(99, 0);
        let sd_mean = 1.0 / (n as f64).sqrt();
        let (mut sum, mut sumsq) = (0.0, 0.0);
        for _ in 0..reps {
            let xbar = theta0[0] + sd_mean * rng.sample::<f64, _>(StandardNormal);
            let post = fractional_posterior_from_mean(&prior, 1.0, alpha, n, &[xbar]).unwrap();
            let kl = post.kl_to(&prior).unwrap();
            sum += kl;
            sumsq += kl * kl;
        }
        let nf = reps as f64;
        let mean = sum / nf;
        let se = ((sumsq / nf - mean * mean).max(0.0) / nf).sqrt();
        assert!(
            (mean - rhs).abs() <= 3.0 * se,
            "mc {mean} vs closed {rhs} (se {se})"
        );
    }

    // Conjugacy oracle: closed-form posterior moments match self-normalized
    // importance sampling of e^{-alpha r_n} pi with the prior as proposal.
    #[test]
    fn posterior_matches_importance_sampling() {
        let mut rng = stream_rng(1234, 1);
        for cfg in 0..20 {
            let n = 1 + (cfg * 7) % 30;
            let alpha = 0.1 + 0.8 * (cfg as f64 / 19.0);
            let v = 0.5 + (cfg % 3) as f64 * 0.5;
            let model = model1(v);
            let prior = GaussianMeasure::new(vec![0.2], vec![1.5]).unwrap();
            let spec = ModelSpec::GaussianMean(model.clone());
            let s = spec.sample(&[0.5], n, 500 + cfg as u64).unwrap();
            let post = fractional_posterior_gaussian(&model, &prior, alpha, &s).unwrap();

            let draws = 100_000;
            let xbar = s.mean()[0];
            let (mut wsum, mut m1, mut m2) = (0.0, 0.0, 0.0);
            let mut wsq = 0.0;
            for _ in 0..draws {
                let theta = prior.mean[0]
                    + prior.var_diag[0].sqrt() * rng.sample::<f64, _>(StandardNormal);
                // r_n(theta, theta0) depends on the data only through xbar.
                let rn = n as f64 * (theta * theta - 2.0 * theta * xbar) / (2.0 * v * v);
                let w = (-alpha * rn).exp();
                wsum += w;
                wsq += w * w;
                m1 += w * theta;
                m2 += w * theta * theta;
            }
            let mean = m1 / wsum;
            let var = m2 / wsum - mean * mean;
            let ess = wsum * wsum / wsq;
            let se_mean = (var / ess).sqrt();
            assert!(
                (mean - post.mean[0]).abs() <= 3.5 * se_mean,
                "cfg {cfg}: IS mean {mean} vs {post:?} (se {se_mean})"
            );
            assert!(
                (var - post.var_diag[0]).abs() / post.var_diag[0] < 0.15,
                "cfg {cfg}: IS var {var} vs {post:?}"
            );
        }
    }
}

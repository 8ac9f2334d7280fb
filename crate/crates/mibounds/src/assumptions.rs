//! Numerical certification of the standing conditions behind the bounds:
//! the divergence-comparison constant c(alpha), the prior dimension pair
//! (kappa_pi, d_pi) defined through sup_{beta >= 0} beta^{kappa_pi}
//! E_{theta ~ pi_{-beta}}[KL(P_theta0 || P_theta)], its second-moment
//! analogue d_pi', and the existence of a good member of the variational
//! family. Closed forms are used where available and cross-checked against
//! a sup over a log-spaced beta grid; the uniform-prior case is certified
//! by quadrature.
//!
//! The defining sup is treated as an upper bound ("<= d_pi"): that is the
//! only way it is ever consumed downstream, and the closed forms are
//! derived as majorizations rather than exact suprema.

use serde::{Deserialize, Serialize};

use crate::divergences::Family1D;
use crate::error::{Error, Result};
use crate::models::{GaussianMeanModel, GaussianSequenceModel};
use crate::posteriors::{
    expected_kl_under, expected_v_under, localized_prior_gaussian, GaussianMeasure,
    LocalizedPriorParams,
};
use crate::quadrature::adaptive_simpson;
use crate::variational::MeanFieldFamily;

/// 200 log-spaced beta values in [1e-3, 1e6]; every implemented
/// beta^kappa E[KL] curve plateaus or peaks inside this window.
pub fn beta_grid() -> Vec<f64> {
    (0..200)
        .map(|k| 10f64.powf(-3.0 + 9.0 * k as f64 / 199.0))
        .collect()
}

pub const BETA_GRID_DESC: &str = "200 log-spaced points in [1e-3, 1e6]";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateMethod {
    ClosedForm,
    GridSup,
}

/// Certified values of the prior dimension pair, serialized for downstream
/// bound evaluation and reporting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DimensionCertificate {
    pub d_pi: f64,
    pub kappa_pi: f64,
    pub d_pi_prime: Option<f64>,
    pub method: CertificateMethod,
    pub beta_grid: String,
    pub empirical_sup: f64,
    pub beta_at_sup: f64,
    /// Set when the empirical sup exceeds the certified value: the
    /// uniform-prior closed form is only guaranteed for beta large enough.
    pub asymptotic_only: bool,
}

impl DimensionCertificate {
    fn validate(&self) -> Result<()> {
        if !(self.kappa_pi > 0.0 && self.kappa_pi <= 1.0) {
            return Err(Error::CertificationFailed(format!(
                "kappa_pi = {} outside (0, 1]",
                self.kappa_pi
            )));
        }
        if !(self.d_pi > 0.0) {
            return Err(Error::CertificationFailed(format!(
                "d_pi = {} not positive",
                self.d_pi
            )));
        }
        Ok(())
    }
}

fn isotropic_sd(prior: &GaussianMeasure) -> Result<f64> {
    let s0 = prior.var_diag[0];
    if prior.var_diag.iter().any(|v| (v - s0).abs() > 1e-12 * s0)
        || prior.mean.iter().any(|m| *m != 0.0)
    {
        return Err(Error::InvalidConfig(
            "dimension certificate requires a centered isotropic prior".into(),
        ));
    }
    Ok(s0.sqrt())
}

fn gaussian_d_pi(dim: usize, theta0: &[f64], sigma: f64) -> f64 {
    let norm_sq: f64 = theta0.iter().map(|t| t * t).sum();
    dim as f64 / 2.0 + norm_sq / (8.0 * sigma * sigma)
}

/// Grid sup of beta^kappa * f(beta); returns (sup, argmax).
fn grid_sup<F: Fn(f64) -> f64>(kappa: f64, f: F) -> (f64, f64) {
    let mut sup = 0.0f64;
    let mut arg = 0.0f64;
    for beta in beta_grid() {
        let val = beta.powf(kappa) * f(beta);
        if val > sup {
            sup = val;
            arg = beta;
        }
    }
    (sup, arg)
}

/// Certifies the localized-KL dimension for the Gaussian mean model with a
/// centered isotropic prior: kappa_pi = 1 and
/// d_pi = d/2 + ||theta0||^2 / (8 sigma^2).
pub fn certify_assumption2_gaussian(
    model: &GaussianMeanModel,
    prior: &GaussianMeasure,
    theta0: &[f64],
) -> Result<DimensionCertificate> {
    if prior.dim() != model.dim || theta0.len() != model.dim {
        return Err(Error::DimensionMismatch {
            expected: model.dim,
            got: prior.dim().max(theta0.len()),
        });
    }
    let sigma = isotropic_sd(prior)?;
    let d_pi = gaussian_d_pi(model.dim, theta0, sigma);
    let v = model.noise_sd;
    let (sup, arg) = grid_sup(1.0, |beta| {
        let params = LocalizedPriorParams::new(beta, prior.clone(), theta0.to_vec())
            .expect("valid params");
        let local = localized_prior_gaussian(&params, v);
        expected_kl_under(&local, theta0, v).expect("dims match")
    });
    if sup > d_pi + 1e-9 {
        return Err(Error::CertificationFailed(format!(
            "grid sup {sup} at beta = {arg} exceeds closed form {d_pi}"
        )));
    }
    let cert = DimensionCertificate {
        d_pi,
        kappa_pi: 1.0,
        d_pi_prime: None,
        method: CertificateMethod::ClosedForm,
        beta_grid: BETA_GRID_DESC.into(),
        empirical_sup: sup,
        beta_at_sup: arg,
        asymptotic_only: false,
    };
    cert.validate()?;
    Ok(cert)
}

/// Certifies the dimension for the truncated sequence model with the
/// diagonal prior having i-th variance i^{-1-2b}: kappa_pi = 2b/(1+2b) and
/// d_pi = 3L/2 + 1/2 + 1/(4b).
pub fn certify_assumption2_sequence(
    model: &GaussianSequenceModel,
    theta0: &[f64],
) -> Result<DimensionCertificate> {
    model.check_sobolev(theta0)?;
    let b = model.smoothness;
    let big_l = model.radius;
    let kappa = 2.0 * b / (1.0 + 2.0 * b);
    let d_pi = 1.5 * big_l + 0.5 + 1.0 / (4.0 * b);
    let base = GaussianMeasure::new(vec![0.0; model.truncation], model.prior_var_diag())?;
    let (sup, arg) = grid_sup(kappa, |beta| {
        let params = LocalizedPriorParams::new(beta, base.clone(), theta0.to_vec())
            .expect("valid params");
        let local = localized_prior_gaussian(&params, 1.0);
        expected_kl_under(&local, theta0, 1.0).expect("dims match")
    });
    if sup > d_pi + 1e-9 {
        return Err(Error::CertificationFailed(format!(
            "grid sup {sup} at beta = {arg} exceeds closed form {d_pi}"
        )));
    }
    let cert = DimensionCertificate {
        d_pi,
        kappa_pi: kappa,
        d_pi_prime: None,
        method: CertificateMethod::ClosedForm,
        beta_grid: BETA_GRID_DESC.into(),
        empirical_sup: sup,
        beta_at_sup: arg,
        asymptotic_only: false,
    };
    cert.validate()?;
    Ok(cert)
}

/// Certifies the dimension for a uniform prior on (-M, M) in a 1-d family
/// whose KL is quadratically comparable to the squared distance:
/// m Delta^2 / 2 <= KL <= L Delta^2 / 2 on the box, giving kappa_pi = 1 and
/// d_pi = kappa^{3/2} / 2 with kappa = L/m. The localized-prior expectation
/// is evaluated by adaptive quadrature including the normalizer, and the
/// closed form is only asymptotic in beta: if the grid sup exceeds it the
/// certificate is flagged rather than rejected.
pub fn certify_assumption2_uniform_1d(
    fam: &Family1D,
    half_width: f64,
    theta0: f64,
) -> Result<DimensionCertificate> {
    if !(half_width > 0.0) {
        return Err(Error::InvalidConfig("half_width must be > 0".into()));
    }
    if theta0.abs() >= half_width {
        return Err(Error::OutOfDomain {
            value: theta0,
            lo: -half_width,
            hi: half_width,
        });
    }
    let m_box = half_width;
    // Estimate the comparison constants on a grid of distinct pairs.
    let kl_at = |t0: f64, t1: f64| -> Result<f64> {
        let (_, kl, _) = fam.divergences_at(t0, t1)?;
        Ok(kl)
    };
    let mut m_lo = f64::INFINITY;
    let mut l_hi: f64 = 0.0;
    let g = 60;
    for i in 0..g {
        for j in 0..g {
            if i == j {
                continue;
            }
            let t0 = -m_box + 2.0 * m_box * (i as f64 + 0.5) / g as f64;
            let t1 = -m_box + 2.0 * m_box * (j as f64 + 0.5) / g as f64;
            let ratio = 2.0 * kl_at(t0, t1)? / ((t1 - t0) * (t1 - t0));
            m_lo = m_lo.min(ratio);
            l_hi = l_hi.max(ratio);
        }
    }
    if !(m_lo > 0.0) {
        return Err(Error::CertificationFailed(
            "KL is not quadratically bounded below on the box".into(),
        ));
    }
    let kappa = l_hi / m_lo;
    let d_pi = kappa.powf(1.5) / 2.0;

    let tol = 1e-12;
    let mut sup = 0.0f64;
    let mut arg = 0.0f64;
    for beta in beta_grid() {
        // The localized density concentrates in a O(1/sqrt(beta m)) window
        // around theta0 (KL >= m Delta^2/2 kills everything outside);
        // restricting the quadrature there keeps the integrands resolved at
        // large beta. The numerator integrand is written as
        // (beta KL) e^{-beta KL} so it stays O(1) on every scale.
        let w = 50.0 / (beta * m_lo).sqrt();
        let lo = (theta0 - w).max(-m_box);
        let hi = (theta0 + w).min(m_box);
        let z = adaptive_simpson(
            &|t| (-beta * kl_at(theta0, t).unwrap_or(f64::INFINITY)).exp(),
            lo,
            hi,
            tol,
        );
        let num = adaptive_simpson(
            &|t| {
                let kl = kl_at(theta0, t).unwrap_or(f64::INFINITY);
                beta * kl * (-beta * kl).exp()
            },
            lo,
            hi,
            tol,
        );
        let val = num / z;
        if val > sup {
            sup = val;
            arg = beta;
        }
    }
    let cert = DimensionCertificate {
        d_pi,
        kappa_pi: 1.0,
        d_pi_prime: None,
        method: CertificateMethod::GridSup,
        beta_grid: BETA_GRID_DESC.into(),
        empirical_sup: sup,
        beta_at_sup: arg,
        // Slack at quadrature scale, not the exact-arithmetic 1e-9 used by
        // the closed-form certificates.
        asymptotic_only: sup > d_pi + 1e-7,
    };
    cert.validate()?;
    Ok(cert)
}

/// Same as the Gaussian KL certificate, additionally certifying the
/// second-moment dimension d_pi' = (1 + 4 v^2)/v^2 * d_pi against the grid.
pub fn certify_assumption3_gaussian(
    model: &GaussianMeanModel,
    prior: &GaussianMeasure,
    theta0: &[f64],
) -> Result<DimensionCertificate> {
    let mut cert = certify_assumption2_gaussian(model, prior, theta0)?;
    let v = model.noise_sd;
    let d_pi_prime = (1.0 + 4.0 * v * v) / (v * v) * cert.d_pi;
    let (sup_v, arg_v) = grid_sup(1.0, |beta| {
        let params = LocalizedPriorParams::new(beta, prior.clone(), theta0.to_vec())
            .expect("valid params");
        let local = localized_prior_gaussian(&params, v);
        expected_v_under(&local, theta0, v).expect("dims match")
    });
    if sup_v > d_pi_prime + 1e-9 {
        return Err(Error::CertificationFailed(format!(
            "second-moment grid sup {sup_v} at beta = {arg_v} exceeds {d_pi_prime}"
        )));
    }
    cert.d_pi_prime = Some(d_pi_prime);
    Ok(cert)
}

/// Existence of a good member of the variational family in the conjugate
/// setting: the localized prior pi_{-beta} is itself a diagonal Gaussian,
/// hence lies in F, and with rho = pi_{-beta} the criterion
/// E_rho[KL] + KL(rho || pi_{-beta})/n collapses to E_rho[KL] <= d_pi / beta.
/// The returned certificate therefore equals the localized-KL certificate.
pub fn certify_assumption4_conjugate(
    model: &GaussianMeanModel,
    prior: &GaussianMeasure,
    theta0: &[f64],
    fam: &MeanFieldFamily,
) -> Result<DimensionCertificate> {
    let cert = certify_assumption2_gaussian(model, prior, theta0)?;
    for beta in [1.0, 10.0, 1000.0] {
        let params = LocalizedPriorParams::new(beta, prior.clone(), theta0.to_vec())?;
        let local = localized_prior_gaussian(&params, model.noise_sd);
        if !fam.contains(&local) {
            return Err(Error::CertificationFailed(format!(
                "localized prior at beta = {beta} is not in the variational family"
            )));
        }
        // KL(rho || pi_{-beta}) = 0 by construction.
        debug_assert!(local.kl_to(&local).unwrap() == 0.0);
        let e_kl = expected_kl_under(&local, theta0, model.noise_sd)?;
        if e_kl > cert.d_pi / beta + 1e-9 {
            return Err(Error::CertificationFailed(format!(
                "E_rho[KL] = {e_kl} exceeds d_pi/beta at beta = {beta}"
            )));
        }
    }
    Ok(cert)
}

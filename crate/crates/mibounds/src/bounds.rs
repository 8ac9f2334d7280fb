//! Pure evaluators for every bound right-hand side: the mutual-information
//! bound, the localized-prior bounds in expectation (general beta and the
//! optimized beta = n(1-alpha)/(2 c(alpha))), the high-probability variant,
//! the Gaussian L2 corollary, the PAC-Bayes expectation bound, the
//! epsilon-net MLE bound, and the constructive covering number for boxes.
//!
//! Evaluators are total: precondition failures set `valid = false` on the
//! report instead of raising, so parameter sweeps never abort mid-grid.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundReport {
    pub rhs: f64,
    pub ingredients: BTreeMap<String, f64>,
    pub formula_id: String,
    pub valid: bool,
}

impl BoundReport {
    fn new(formula_id: &str, rhs: f64, valid: bool, ingredients: &[(&str, f64)]) -> Self {
        Self {
            rhs,
            ingredients: ingredients
                .iter()
                .map(|(k, v)| (k.to_string(), *v))
                .collect(),
            formula_id: formula_id.to_string(),
            valid: valid && rhs.is_finite() && rhs >= 0.0,
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    Ok(())
}

/// rhs = mi / (n (1 - alpha)).
pub fn bound_thm_main(mi: f64, n: usize, alpha: f64) -> Result<BoundReport> {
    check_alpha(alpha)?;
    let nf = n as f64;
    let rhs = mi / (nf * (1.0 - alpha));
    Ok(BoundReport::new(
        "thm_main",
        rhs,
        mi >= 0.0 && n > 0,
        &[("mi", mi), ("n", nf), ("alpha", alpha)],
    ))
}

/// rhs = [c (alpha n - beta) / (n(1-alpha) - beta c)] * d_pi / beta^kappa,
/// valid only for 0 < beta < n(1-alpha)/c.
pub fn bound_thm31_general(
    c_alpha: f64,
    d_pi: f64,
    kappa_pi: f64,
    alpha: f64,
    beta: f64,
    n: usize,
) -> BoundReport {
    let nf = n as f64;
    let denom = nf * (1.0 - alpha) - beta * c_alpha;
    let valid = beta > 0.0 && denom > 0.0 && alpha > 0.0 && alpha < 1.0;
    let rhs = if valid {
        c_alpha * (alpha * nf - beta) / denom * d_pi / beta.powf(kappa_pi)
    } else {
        f64::INFINITY
    };
    BoundReport::new(
        "thm31_general",
        rhs,
        valid,
        &[
            ("c_alpha", c_alpha),
            ("d_pi", d_pi),
            ("kappa_pi", kappa_pi),
            ("alpha", alpha),
            ("beta", beta),
            ("n", nf),
        ],
    )
}

/// rhs = alpha (2c/(1-alpha))^{1+kappa} d_pi / n^kappa: the general bound at
/// beta = n(1-alpha)/(2c) with the prefactor majorized (alpha n - beta is
/// replaced by alpha n), so it weakly dominates the general bound there.
pub fn bound_thm31_opt(
    c_alpha: f64,
    d_pi: f64,
    kappa_pi: f64,
    alpha: f64,
    n: usize,
) -> Result<BoundReport> {
    check_alpha(alpha)?;
    let nf = n as f64;
    let rhs = alpha * (2.0 * c_alpha / (1.0 - alpha)).powf(1.0 + kappa_pi) * d_pi
        / nf.powf(kappa_pi);
    Ok(BoundReport::new(
        "thm31_opt",
        rhs,
        n > 0 && c_alpha > 0.0 && d_pi > 0.0,
        &[
            ("c_alpha", c_alpha),
            ("d_pi", d_pi),
            ("kappa_pi", kappa_pi),
            ("alpha", alpha),
            ("n", nf),
        ],
    ))
}

/// rhs for E||theta - theta0||^2 in the Gaussian mean model:
/// v^2 (4d + ||theta0||^2/sigma^2) / (alpha (1-alpha)^2 n).
pub fn bound_gaussian_l2(
    d: usize,
    theta0_norm_sq: f64,
    sigma_sq: f64,
    v_sq: f64,
    alpha: f64,
    n: usize,
) -> Result<BoundReport> {
    check_alpha(alpha)?;
    let nf = n as f64;
    let rhs = v_sq * (4.0 * d as f64 + theta0_norm_sq / sigma_sq)
        / (alpha * (1.0 - alpha) * (1.0 - alpha) * nf);
    Ok(BoundReport::new(
        "gaussian_l2",
        rhs,
        n > 0 && sigma_sq > 0.0 && v_sq > 0.0,
        &[
            ("d", d as f64),
            ("theta0_norm_sq", theta0_norm_sq),
            ("sigma_sq", sigma_sq),
            ("v_sq", v_sq),
            ("alpha", alpha),
            ("n", nf),
        ],
    ))
}

/// High-probability bound, exactly as displayed (note the (1+alpha) in the
/// first term, in contrast to the (1-alpha) of the expectation bound):
/// rhs = alpha (2c/(1+alpha))^{1+kappa} (d_pi + d_pi')/n^kappa
///       + 2c (1/eta + log(1/delta)) / (n(1-alpha)).
#[allow(clippy::too_many_arguments)]
pub fn bound_thm32_prob(
    c_alpha: f64,
    d_pi: f64,
    d_pi_prime: f64,
    kappa_pi: f64,
    alpha: f64,
    n: usize,
    delta: f64,
    eta: f64,
) -> Result<BoundReport> {
    check_alpha(alpha)?;
    let valid = delta > 0.0 && delta < 1.0 && eta > 0.0 && eta < 1.0 && n > 0;
    let nf = n as f64;
    let first = alpha * (2.0 * c_alpha / (1.0 + alpha)).powf(1.0 + kappa_pi)
        * (d_pi + d_pi_prime)
        / nf.powf(kappa_pi);
    let second = 2.0 * c_alpha * (1.0 / eta + (1.0 / delta).ln()) / (nf * (1.0 - alpha));
    Ok(BoundReport::new(
        "thm32_prob",
        first + second,
        valid,
        &[
            ("c_alpha", c_alpha),
            ("d_pi", d_pi),
            ("d_pi_prime", d_pi_prime),
            ("kappa_pi", kappa_pi),
            ("alpha", alpha),
            ("n", nf),
            ("delta", delta),
            ("eta", eta),
        ],
    ))
}

/// rhs = alpha exp_rn / (n(1-alpha)) + kl_rho_pi / (n(1-alpha)).
pub fn bound_pacbayes_expectation(
    alpha: f64,
    n: usize,
    exp_rn: f64,
    kl_rho_pi: f64,
) -> Result<BoundReport> {
    check_alpha(alpha)?;
    let nf = n as f64;
    let rhs = (alpha * exp_rn + kl_rho_pi) / (nf * (1.0 - alpha));
    Ok(BoundReport::new(
        "pacbayes_expectation",
        rhs,
        n > 0 && kl_rho_pi >= 0.0,
        &[
            ("alpha", alpha),
            ("n", nf),
            ("exp_rn", exp_rn),
            ("kl_rho_pi", kl_rho_pi),
        ],
    ))
}

/// Epsilon-net MLE bound:
/// rhs = (1/n) [ (2 alpha L + 2 log_cover) / (m (1-alpha)) + 1/n ].
pub fn bound_mle(
    m_lower: f64,
    lipschitz: f64,
    log_cover: f64,
    alpha: f64,
    n: usize,
) -> Result<BoundReport> {
    check_alpha(alpha)?;
    if !(m_lower > 0.0) {
        return Err(Error::NonPositiveValue(format!(
            "quadratic lower constant m = {m_lower}"
        )));
    }
    let nf = n as f64;
    let rhs = ((2.0 * alpha * lipschitz + 2.0 * log_cover) / (m_lower * (1.0 - alpha))
        + 1.0 / nf)
        / nf;
    Ok(BoundReport::new(
        "mle",
        rhs,
        n > 0 && lipschitz >= 0.0 && log_cover >= 0.0,
        &[
            ("m_lower", m_lower),
            ("lipschitz", lipschitz),
            ("log_cover", log_cover),
            ("alpha", alpha),
            ("n", nf),
        ],
    ))
}

/// Constructive covering number of the box [-M, M]^d by Euclidean balls of
/// radius eps: an axis-aligned grid with spacing 2 eps / sqrt(d) works, so
/// N <= ceil(M sqrt(d) / eps)^d.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoveringNumber {
    pub per_axis: u64,
    /// ceil(M sqrt(d)/eps)^d when it fits in a u128; log_count is primary.
    pub count: Option<u128>,
    pub log_count: f64,
}

pub fn covering_number_box(half_width: f64, dim: usize, eps: f64) -> Result<CoveringNumber> {
    if !(half_width > 0.0) || !(eps > 0.0) || dim == 0 {
        return Err(Error::InvalidConfig(
            "covering_number_box needs half_width > 0, eps > 0, dim >= 1".into(),
        ));
    }
    let per_axis_f = (half_width * (dim as f64).sqrt() / eps).ceil().max(1.0);
    if per_axis_f > u64::MAX as f64 {
        return Err(Error::NetTooLarge(u128::MAX));
    }
    let per_axis = per_axis_f as u64;
    let count = (per_axis as u128).checked_pow(dim as u32);
    Ok(CoveringNumber {
        per_axis,
        count,
        log_count: dim as f64 * (per_axis as f64).ln(),
    })
}

/// Centers of the constructive cover for the box [-M, M]^d (small d only;
/// used by the cover-validity oracle and the MLE net).
pub fn covering_centers_box(half_width: f64, dim: usize, eps: f64) -> Result<Vec<Vec<f64>>> {
    let cn = covering_number_box(half_width, dim, eps)?;
    let total = cn
        .count
        .ok_or(Error::NetTooLarge(u128::MAX))?;
    if total > 10_000_000 {
        return Err(Error::NetTooLarge(total));
    }
    let k = cn.per_axis as usize;
    let spacing = 2.0 * half_width / k as f64;
    let axis: Vec<f64> = (0..k)
        .map(|i| -half_width + spacing * (i as f64 + 0.5))
        .collect();
    let mut centers = vec![vec![]];
    for _ in 0..dim {
        let mut next = Vec::with_capacity(centers.len() * k);
        for c in &centers {
            for &x in &axis {
                let mut c2 = c.clone();
                c2.push(x);
                next.push(c2);
            }
        }
        centers = next;
    }
    Ok(centers)
}

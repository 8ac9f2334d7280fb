//! Closed-form KL, alpha-Renyi and squared-Hellinger divergences for the
//! implemented families, series oracles for counting carriers, and the
//! Fisher-information expansion checks.
//!
//! Conventions:
//! - all divergences are in nats;
//! - `alpha` ranges over (0, 1);
//! - KL between exponential-family members is the Bregman divergence of psi
//!   in the orientation validated against the series oracle:
//!   KL(P_theta0 || P_theta) = psi(theta) - psi(theta0)
//!   - (theta - theta0) psi'(theta0).
//!   (The orientation with the roles of theta and theta0 swapped does not
//!   match ground truth; see e.g. the Poisson case, where the oracle gives
//!   lambda0 log(lambda0/lambda) - lambda0 + lambda.)

use crate::error::{Error, Result};
use crate::models::{BaseKind, ExpFamily1D};

/// Small negative values from floating-point cancellation are clamped to 0.
const NEG_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DivergenceKind {
    Kl,
    Renyi(f64),
    HellingerSq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ClosedForm,
    Quadrature,
    Series,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceValue {
    pub value: f64,
    pub kind: DivergenceKind,
    pub method: Method,
}

fn clamp_nonneg(v: f64) -> f64 {
    debug_assert!(v >= -1e-9, "divergence {v} significantly negative");
    if v < 0.0 && v >= -NEG_TOL {
        0.0
    } else {
        v
    }
}

fn make(value: f64, kind: DivergenceKind, method: Method) -> DivergenceValue {
    DivergenceValue {
        value: clamp_nonneg(value),
        kind,
        method,
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::AlphaOutOfRange(alpha))
    }
}

fn norm_sq_diff(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

/// KL(N(mean0, v^2 I) || N(mean1, v^2 I)) = ||mean1 - mean0||^2 / (2 v^2).
pub fn kl_gaussian(mean0: &[f64], mean1: &[f64], v: f64) -> Result<DivergenceValue> {
    let d2 = norm_sq_diff(mean0, mean1)?;
    Ok(make(
        d2 / (2.0 * v * v),
        DivergenceKind::Kl,
        Method::ClosedForm,
    ))
}

/// D_alpha between equal-covariance Gaussians:
/// alpha ||mean1 - mean0||^2 / (2 v^2).
pub fn renyi_gaussian(
    alpha: f64,
    mean0: &[f64],
    mean1: &[f64],
    v: f64,
) -> Result<DivergenceValue> {
    check_alpha(alpha)?;
    let d2 = norm_sq_diff(mean0, mean1)?;
    Ok(make(
        alpha * d2 / (2.0 * v * v),
        DivergenceKind::Renyi(alpha),
        Method::ClosedForm,
    ))
}

/// KL(P_theta0 || P_theta) for a 1-d exponential family (Bregman form).
pub fn kl_expfam(fam: &ExpFamily1D, theta0: f64, theta: f64) -> Result<DivergenceValue> {
    fam.check_domain(theta0)?;
    fam.check_domain(theta)?;
    let v = (fam.psi)(theta) - (fam.psi)(theta0) - (theta - theta0) * (fam.psi1)(theta0);
    Ok(make(v, DivergenceKind::Kl, Method::ClosedForm))
}

/// D_alpha(P_theta || P_theta0) for a 1-d exponential family:
/// (alpha psi(theta) + (1-alpha) psi(theta0) - psi(alpha theta +
/// (1-alpha) theta0)) / (1 - alpha).
pub fn renyi_expfam(
    fam: &ExpFamily1D,
    alpha: f64,
    theta0: f64,
    theta: f64,
) -> Result<DivergenceValue> {
    check_alpha(alpha)?;
    fam.check_domain(theta0)?;
    fam.check_domain(theta)?;
    let mix = alpha * theta + (1.0 - alpha) * theta0;
    fam.check_domain(mix)?;
    let v = (alpha * (fam.psi)(theta) + (1.0 - alpha) * (fam.psi)(theta0) - (fam.psi)(mix))
        / (1.0 - alpha);
    Ok(make(v, DivergenceKind::Renyi(alpha), Method::ClosedForm))
}

/// Handle to a single distribution within one of the implemented families.
#[derive(Debug, Clone)]
pub enum DistributionHandle<'a> {
    Gaussian { mean: Vec<f64>, noise_sd: f64 },
    ExpFamily { fam: &'a ExpFamily1D, theta: f64 },
}

/// D_{1/2} between two members of the same family.
pub fn renyi_half(p: &DistributionHandle, q: &DistributionHandle) -> Result<DivergenceValue> {
    match (p, q) {
        (
            DistributionHandle::Gaussian { mean: m0, noise_sd: v0 },
            DistributionHandle::Gaussian { mean: m1, noise_sd: v1 },
        ) => {
            if v0 != v1 {
                return Err(Error::Unsupported(
                    "Hellinger requires equal noise scales".into(),
                ));
            }
            renyi_gaussian(0.5, m0, m1, *v0)
        }
        (
            DistributionHandle::ExpFamily { fam, theta: t0 },
            DistributionHandle::ExpFamily { fam: fam1, theta: t1 },
        ) => {
            if fam.name() != fam1.name() {
                return Err(Error::Unsupported("mixed families".into()));
            }
            renyi_expfam(fam, 0.5, *t1, *t0)
        }
        _ => Err(Error::Unsupported("mixed families".into())),
    }
}

/// Squared Hellinger distance via the identity
/// H^2 = 2 (1 - exp(-D_{1/2} / 2)).
///
/// (Equivalently H^2 = 2 - 2 * BC with Bhattacharyya coefficient
/// BC = exp(-D_{1/2}/2); cross-checked against the series oracle.)
pub fn hellinger_sq(p: &DistributionHandle, q: &DistributionHandle) -> Result<DivergenceValue> {
    let d_half = renyi_half(p, q)?;
    Ok(make(
        2.0 * (1.0 - (-0.5 * d_half.value).exp()),
        DivergenceKind::HellingerSq,
        Method::ClosedForm,
    ))
}

/// Family descriptor for the KL-vs-Renyi comparability certificate.
#[derive(Debug, Clone)]
pub enum FamilyDescriptor<'a> {
    /// Location Gaussian with noise sd v; the grid check runs over
    /// means in [-3, 3].
    Gaussian { noise_sd: f64 },
    ExpFamily(&'a ExpFamily1D),
}

/// Constant c(alpha) with KL(P_theta0 || P_theta) <= c(alpha)
/// D_alpha(P_theta || P_theta0) on the family: 1/alpha for Gaussians and
/// kappa/alpha for exponential families with condition number kappa = L/m.
/// The inequality is additionally verified on a 100 x 100 parameter grid.
pub fn certify_c_alpha(desc: &FamilyDescriptor, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    match desc {
        FamilyDescriptor::Gaussian { noise_sd } => {
            let c = 1.0 / alpha;
            grid_check_c(alpha, c, |t0, t1| {
                let kl = kl_gaussian(&[t0], &[t1], *noise_sd).unwrap().value;
                let da = renyi_gaussian(alpha, &[t0], &[t1], *noise_sd).unwrap().value;
                (kl, da)
            }, -3.0, 3.0)?;
            Ok(c)
        }
        FamilyDescriptor::ExpFamily(fam) => {
            let c = fam.condition_number() / alpha;
            grid_check_c(alpha, c, |t0, t1| {
                let kl = kl_expfam(fam, t0, t1).unwrap().value;
                let da = renyi_expfam(fam, alpha, t0, t1).unwrap().value;
                (kl, da)
            }, fam.theta_lo, fam.theta_hi)?;
            Ok(c)
        }
    }
}

fn grid_check_c<F: Fn(f64, f64) -> (f64, f64)>(
    alpha: f64,
    c: f64,
    eval: F,
    lo: f64,
    hi: f64,
) -> Result<()> {
    let _ = alpha;
    for i in 0..100 {
        let t0 = lo + (hi - lo) * i as f64 / 99.0;
        for j in 0..100 {
            let t1 = lo + (hi - lo) * j as f64 / 99.0;
            let (kl, da) = eval(t0, t1);
            if kl > c * da + 1e-10 {
                return Err(Error::CertificationFailed(format!(
                    "KL({t0}, {t1}) = {kl} exceeds c * D_alpha = {}",
                    c * da
                )));
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Series oracles for counting carriers. These are independent of the
// psi-based closed forms above: they only evaluate the pmf.
// ---------------------------------------------------------------------------

pub mod oracles {
    use super::*;

    fn support_sum<F: FnMut(f64) -> f64>(fam: &ExpFamily1D, mut term: F) -> f64 {
        match fam.base_kind {
            BaseKind::CountingBinary => term(0.0) + term(1.0),
            BaseKind::CountingUnbounded => {
                let mut total = 0.0;
                let mut x = 0.0;
                let mut tiny_run = 0;
                loop {
                    let t = term(x);
                    total += t;
                    // Terms are unimodal in x; stop after the tail stays
                    // below the target precision.
                    if t.abs() < 1e-16 {
                        tiny_run += 1;
                        if tiny_run > 5 && x > 10.0 {
                            break;
                        }
                    } else {
                        tiny_run = 0;
                    }
                    x += 1.0;
                    if x > 10_000.0 {
                        break;
                    }
                }
                total
            }
        }
    }

    /// KL(P_theta0 || P_theta) by direct summation over the support.
    pub fn series_kl(fam: &ExpFamily1D, theta0: f64, theta: f64) -> DivergenceValue {
        let v = support_sum(fam, |x| {
            let lp0 = fam.log_pmf(theta0, x);
            let lp1 = fam.log_pmf(theta, x);
            let p0 = lp0.exp();
            if p0 == 0.0 {
                0.0
            } else {
                p0 * (lp0 - lp1)
            }
        });
        DivergenceValue {
            value: super::clamp_nonneg(v),
            kind: DivergenceKind::Kl,
            method: Method::Series,
        }
    }

    /// D_alpha(P_theta || P_theta0) by direct summation over the support.
    pub fn series_renyi(fam: &ExpFamily1D, alpha: f64, theta0: f64, theta: f64) -> DivergenceValue {
        let s = support_sum(fam, |x| {
            (alpha * fam.log_pmf(theta, x) + (1.0 - alpha) * fam.log_pmf(theta0, x)).exp()
        });
        DivergenceValue {
            value: super::clamp_nonneg(s.ln() / (alpha - 1.0)),
            kind: DivergenceKind::Renyi(alpha),
            method: Method::Series,
        }
    }

    /// H^2(P_theta, P_theta0) = 2 - 2 sum_x sqrt(p_theta p_theta0).
    pub fn series_hellinger_sq(fam: &ExpFamily1D, theta0: f64, theta: f64) -> DivergenceValue {
        let bc = support_sum(fam, |x| {
            (0.5 * (fam.log_pmf(theta, x) + fam.log_pmf(theta0, x))).exp()
        });
        DivergenceValue {
            value: super::clamp_nonneg(2.0 - 2.0 * bc),
            kind: DivergenceKind::HellingerSq,
            method: Method::Series,
        }
    }
}

// ---------------------------------------------------------------------------
// Fisher-information expansion checks.
// ---------------------------------------------------------------------------

/// Fisher information data on a neighborhood of theta0.
#[derive(Debug, Clone, Copy)]
pub struct FisherInfo {
    /// I(theta0).
    pub i0: f64,
    /// Upper bound on |I'(theta)| over the neighborhood.
    pub i1_bound: f64,
    /// min of I over the neighborhood.
    pub i_lo: f64,
    /// max of I over the neighborhood.
    pub i_hi: f64,
}

/// One-dimensional family with analytic Fisher information.
#[derive(Debug, Clone)]
pub enum Family1D<'a> {
    /// I(theta) = 1/v^2, I' = 0.
    Gaussian { noise_sd: f64 },
    /// I(theta) = psi''(theta) in the natural parameter.
    ExpFamily(&'a ExpFamily1D),
}

impl Family1D<'_> {
    fn fisher(&self, theta: f64) -> f64 {
        match self {
            Family1D::Gaussian { noise_sd } => 1.0 / (noise_sd * noise_sd),
            Family1D::ExpFamily(f) => (f.psi2)(theta),
        }
    }

    pub fn divergences_at(&self, theta0: f64, theta: f64) -> Result<(f64, f64, f64)> {
        match self {
            Family1D::Gaussian { noise_sd } => {
                let kl = kl_gaussian(&[theta0], &[theta], *noise_sd)?.value;
                let dh = renyi_gaussian(0.5, &[theta0], &[theta], *noise_sd)?.value;
                let h2 = 2.0 * (1.0 - (-0.5 * dh).exp());
                Ok((h2, kl, dh))
            }
            Family1D::ExpFamily(f) => {
                let kl = kl_expfam(f, theta0, theta)?.value;
                let dh = renyi_expfam(f, 0.5, theta0, theta)?.value;
                let h2 = 2.0 * (1.0 - (-0.5 * dh).exp());
                Ok((h2, kl, dh))
            }
        }
    }

    /// Fisher constants over [theta0 - r, theta0 + r]: extrema of I and a
    /// bound on |I'| from central differences on a 400-point grid.
    fn fisher_info_on(&self, theta0: f64, r: f64) -> FisherInfo {
        let i0 = self.fisher(theta0);
        match self {
            Family1D::Gaussian { .. } => FisherInfo {
                i0,
                i1_bound: 0.0,
                i_lo: i0,
                i_hi: i0,
            },
            Family1D::ExpFamily(_) => {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                let mut dmax = 0.0f64;
                let h = 1e-5;
                for k in 0..=400 {
                    let t = theta0 - r + 2.0 * r * k as f64 / 400.0;
                    let i = self.fisher(t);
                    lo = lo.min(i);
                    hi = hi.max(i);
                    let di = (self.fisher(t + h) - self.fisher(t - h)) / (2.0 * h);
                    dmax = dmax.max(di.abs());
                }
                FisherInfo {
                    i0,
                    i1_bound: dmax * (1.0 + 1e-6),
                    i_lo: lo,
                    i_hi: hi,
                }
            }
        }
    }
}

/// Sandwich check at a single offset.
#[derive(Debug, Clone, Copy)]
pub struct FisherRow {
    pub delta: f64,
    pub h2: f64,
    pub kl: f64,
    pub d_half: f64,
    pub ok: bool,
}

#[derive(Debug, Clone)]
pub struct FisherExpansionReport {
    pub info: FisherInfo,
    pub rows: Vec<FisherRow>,
    /// Fitted upper envelope for the quartic term of the D_{1/2} remainder.
    pub c_envelope: f64,
    /// Largest relative slack between a divergence and its nearest
    /// sandwich edge.
    pub max_rel_slack: f64,
    pub violations: Vec<f64>,
}

/// For each offset Delta, computes exact H^2, KL, D_{1/2} and checks the
/// sandwich inequalities
///   m/4 D^2 - q <= H^2      <= M/4 D^2 + L/12 |D|^3,
///   m/2 D^2     <= KL       <= M/2 D^2 + L/6  |D|^3,
///   m/4 D^2     <= D_{1/2}  <= M/4 D^2 + L/12 |D|^3 + C D^4,
/// where C is fitted as the smallest upper envelope over the grid and
/// reported, and q = (M/4 D^2 + L/12 |D|^3)^2 / 4 is the quartic allowance
/// forced on the H^2 lower edge by H^2 = 2(1 - e^{-D_{1/2}/2}) >=
/// D_{1/2} - D_{1/2}^2/4 (the quadratic edge alone already fails for the
/// Gaussian, where H^2 = D^2/4 - D^4/64 + ... with m = M). Any offset
/// violating one of the first two sandwiches (or the D_{1/2} lower edge)
/// lands in `violations`.
pub fn fisher_expansion_check(
    fam: &Family1D,
    theta0: f64,
    deltas: &[f64],
) -> Result<FisherExpansionReport> {
    let r = deltas.iter().fold(0.0f64, |a, d| a.max(d.abs()));
    let info = fam.fisher_info_on(theta0, r);
    let (m, mm, l) = (info.i_lo, info.i_hi, info.i1_bound);
    let tol = 1e-12;
    let mut rows = Vec::with_capacity(deltas.len());
    let mut violations = Vec::new();
    let mut c_env = 0.0f64;
    let mut max_slack = 0.0f64;
    for &d in deltas {
        let (h2, kl, dh) = fam.divergences_at(theta0, theta0 + d)?;
        let d2 = d * d;
        let d3 = d2 * d.abs();
        let mut ok = true;
        let dh_upper = mm / 4.0 * d2 + l / 12.0 * d3;
        let checks = [
            (m / 4.0 * d2 - dh_upper * dh_upper / 4.0, h2, dh_upper),
            (m / 2.0 * d2, kl, mm / 2.0 * d2 + l / 6.0 * d3),
        ];
        for (lo, v, hi) in checks {
            if v < lo - tol || v > hi + tol {
                ok = false;
            }
            if v > 0.0 {
                max_slack = max_slack.max(((hi - v) / v).max((v - lo) / v));
            }
        }
        // D_{1/2}: lower edge checked, quartic coefficient fitted.
        if dh < m / 4.0 * d2 - tol {
            ok = false;
        }
        if d != 0.0 {
            let excess = dh - dh_upper;
            if excess > 0.0 {
                c_env = c_env.max(excess / (d2 * d2));
            }
        }
        if !ok {
            violations.push(d);
        }
        rows.push(FisherRow {
            delta: d,
            h2,
            kl,
            d_half: dh,
            ok,
        });
    }
    Ok(FisherExpansionReport {
        info,
        rows,
        c_envelope: c_env,
        max_rel_slack: max_slack,
        violations,
    })
}

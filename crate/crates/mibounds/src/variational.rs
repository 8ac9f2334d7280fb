//! Mean-field Gaussian variational approximation: minimizes
//!   alpha/(n(1-alpha)) E_{theta~q}[r_n(theta, theta0)] + KL(q || pi)/(n(1-alpha))
//! over diagonal Gaussians q. In the conjugate Gaussian case the family
//! contains the exact fractional posterior, so the minimizer reproduces it;
//! for 1-d exponential families E_q[psi(theta)] is computed by Gauss-Hermite
//! quadrature.

use crate::error::{Error, Result};
use crate::models::{ModelSpec, Sample};
use crate::posteriors::GaussianMeasure;
use crate::quadrature::gauss_hermite;

/// The variational family F: diagonal Gaussians of a fixed dimension, with
/// optional box constraints on the means and a variance floor.
#[derive(Debug, Clone)]
pub struct MeanFieldFamily {
    pub dim: usize,
    pub bounds: Option<Vec<(f64, f64)>>,
    pub var_floor: f64,
}

impl MeanFieldFamily {
    pub fn new(dim: usize) -> Self {
        Self { dim, bounds: None, var_floor: 1e-10 }
    }

    pub fn with_bounds(mut self, bounds: Vec<(f64, f64)>) -> Self {
        self.bounds = Some(bounds);
        self
    }

    pub fn contains(&self, q: &GaussianMeasure) -> bool {
        q.dim() == self.dim
            && q.var_diag.iter().all(|v| *v >= self.var_floor)
            && match &self.bounds {
                None => true,
                Some(b) => q
                    .mean
                    .iter()
                    .zip(b)
                    .all(|(m, (lo, hi))| *m >= *lo && *m <= *hi),
            }
    }
}

#[derive(Debug, Clone)]
pub struct VariationalSolution {
    pub q: GaussianMeasure,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// E_{theta~q}[r_n(theta, theta0)] in closed form for the Gaussian models and
/// by `nodes`-point Gauss-Hermite quadrature for 1-d exponential families.
/// Quadrature nodes falling outside the natural-parameter domain are clamped
/// to it (the tail mass there is negligible for any reasonable q).
pub fn expected_rn(
    model: &ModelSpec,
    theta0: &[f64],
    s: &Sample,
    q: &GaussianMeasure,
    nodes: usize,
) -> Result<f64> {
    if q.dim() != model.param_dim() || theta0.len() != model.param_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.param_dim(),
            got: q.dim(),
        });
    }
    if s.n == 0 {
        return Err(Error::EmptySample);
    }
    let n = s.n as f64;
    match model {
        ModelSpec::GaussianMean(_) | ModelSpec::GaussianSequence(_) => {
            let v = match model {
                ModelSpec::GaussianMean(m) => m.noise_sd,
                _ => 1.0,
            };
            // r_n(theta) = n(||theta||^2 - ||theta0||^2 - 2 <xbar, theta - theta0>)/(2v^2),
            // so the expectation only needs the first two moments of q.
            let xbar = s.mean();
            let mut acc = 0.0;
            for i in 0..q.dim() {
                let (m, var) = (q.mean[i], q.var_diag[i]);
                acc += m * m + var - theta0[i] * theta0[i]
                    - 2.0 * xbar[i] * (m - theta0[i]);
            }
            Ok(n * acc / (2.0 * v * v))
        }
        ModelSpec::ExpFamily(f) => {
            // r_n(theta) = (theta0 - theta) T + n (psi(theta) - psi(theta0)),
            // T = sum_i x_i; only E_q[psi] needs quadrature.
            let t: f64 = s.data.iter().map(|x| x[0]).sum();
            let (gh_x, gh_w) = gauss_hermite(nodes);
            let (m, sd) = (q.mean[0], q.var_diag[0].sqrt());
            let mut e_psi = 0.0;
            for (x, w) in gh_x.iter().zip(&gh_w) {
                let theta = (m + std::f64::consts::SQRT_2 * sd * x)
                    .clamp(f.theta_lo, f.theta_hi);
                e_psi += w * (f.psi)(theta);
            }
            e_psi /= std::f64::consts::PI.sqrt();
            Ok((theta0[0] - m) * t + n * (e_psi - (f.psi)(theta0[0])))
        }
    }
}

/// The variational criterion
///   alpha/(n(1-alpha)) E_q[r_n] + KL(q || prior)/(n(1-alpha)).
pub fn variational_objective(
    model: &ModelSpec,
    prior: &GaussianMeasure,
    alpha: f64,
    s: &Sample,
    theta0: &[f64],
    q: &GaussianMeasure,
) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    let n = s.n as f64;
    let e_rn = expected_rn(model, theta0, s, q, 32)?;
    let kl = q.kl_to(prior)?;
    Ok((alpha * e_rn + kl) / (n * (1.0 - alpha)))
}

/// Derivative-free 1-d minimizer: expanding bracket around `x0` followed by
/// golden-section contraction.
fn minimize_scalar<F: FnMut(f64) -> f64>(mut f: F, x0: f64, scale: f64) -> (f64, f64) {
    let mut a = x0 - scale;
    let mut b = x0 + scale;
    let (mut fa, f0, mut fb) = (f(a), f(x0), f(b));
    // Expand until the middle of the bracket is not worse than both edges.
    let mut step = scale;
    for _ in 0..60 {
        if fa >= f0 || fb >= f0 {
            break;
        }
        step *= 2.0;
        a = x0 - step;
        b = x0 + step;
        fa = f(a);
        fb = f(b);
    }
    if fa < f0 && fa <= fb {
        b = x0;
    } else if fb < f0 && fb < fa {
        a = x0;
    }
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..100 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        if (b - a).abs() < 1e-13 * (1.0 + x0.abs()) {
            break;
        }
    }
    let xm = 0.5 * (a + b);
    (xm, f(xm))
}

/// Minimizes the variational criterion over F by deterministic coordinate
/// descent (golden section on each mean and each log-variance), swept until
/// the objective improves by less than 1e-10 or 500 sweeps elapse. Restarts
/// from the prior and from prior mean +/- one prior standard deviation; the
/// best iterate is returned with `converged = false` if no restart met the
/// tolerance.
pub fn solve_variational(
    model: &ModelSpec,
    prior: &GaussianMeasure,
    alpha: f64,
    s: &Sample,
    theta0: &[f64],
    fam: &MeanFieldFamily,
) -> Result<VariationalSolution> {
    if fam.dim != model.param_dim() || prior.dim() != fam.dim {
        return Err(Error::DimensionMismatch {
            expected: model.param_dim(),
            got: fam.dim,
        });
    }
    let obj = |q: &GaussianMeasure| variational_objective(model, prior, alpha, s, theta0, q);

    let mut starts = vec![prior.clone()];
    for sign in [1.0, -1.0] {
        let mean = prior
            .mean
            .iter()
            .zip(&prior.var_diag)
            .map(|(m, v)| m + sign * v.sqrt())
            .collect();
        starts.push(GaussianMeasure::new(mean, prior.var_diag.clone())?);
    }

    let mut best: Option<VariationalSolution> = None;
    for start in starts {
        let mut q = start;
        let mut current = obj(&q)?;
        let mut sweeps = 0;
        let mut converged = false;
        while sweeps < 500 {
            sweeps += 1;
            let before = current;
            for i in 0..fam.dim {
                // Mean coordinate.
                let scale = q.var_diag[i].sqrt().max(1e-3);
                let (m_new, f_new) = minimize_scalar(
                    |m| {
                        let mut trial = q.clone();
                        trial.mean[i] = clamp_mean(m, i, fam);
                        obj(&trial).unwrap_or(f64::INFINITY)
                    },
                    q.mean[i],
                    scale,
                );
                if f_new < current {
                    q.mean[i] = clamp_mean(m_new, i, fam);
                    current = f_new;
                }
                // Log-variance coordinate.
                let (lv_new, f_new) = minimize_scalar(
                    |lv| {
                        let mut trial = q.clone();
                        trial.var_diag[i] = lv.exp().max(fam.var_floor);
                        obj(&trial).unwrap_or(f64::INFINITY)
                    },
                    q.var_diag[i].ln(),
                    1.0,
                );
                if f_new < current {
                    q.var_diag[i] = lv_new.exp().max(fam.var_floor);
                    current = f_new;
                }
            }
            if before - current < 1e-10 {
                converged = true;
                break;
            }
        }
        let candidate = VariationalSolution {
            q,
            objective: current,
            iterations: sweeps,
            converged,
        };
        if best
            .as_ref()
            .map_or(true, |b| candidate.objective < b.objective)
        {
            best = Some(candidate);
        }
    }
    Ok(best.expect("at least one start"))
}

fn clamp_mean(m: f64, i: usize, fam: &MeanFieldFamily) -> f64 {
    match &fam.bounds {
        Some(b) => m.clamp(b[i].0, b[i].1),
        None => m,
    }
}

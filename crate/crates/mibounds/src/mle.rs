//! Maximum likelihood estimation on a compact box and the epsilon-net
//! surrogate delta_{theta_ihat} that the covering-number bound analyzes:
//! the MLE is projected onto the nearest net center, and the estimate's
//! risk is controlled through the net resolution plus the Lipschitz
//! constant of the empirical log-likelihood ratio.

use crate::bounds::{covering_centers_box, covering_number_box, CoveringNumber};
use crate::error::{Error, Result};
use crate::models::{ExpFamily1D, Sample};

/// The compact parameter set Theta = [-M, M]^d.
#[derive(Debug, Clone, Copy)]
pub struct CompactBox {
    pub half_width: f64,
    pub dim: usize,
}

impl CompactBox {
    pub fn new(half_width: f64, dim: usize) -> Result<Self> {
        if !(half_width > 0.0) || dim == 0 {
            return Err(Error::InvalidConfig(
                "compact box needs half_width > 0 and dim >= 1".into(),
            ));
        }
        Ok(Self { half_width, dim })
    }

    pub fn clip(&self, theta: &[f64]) -> Vec<f64> {
        theta
            .iter()
            .map(|t| t.clamp(-self.half_width, self.half_width))
            .collect()
    }
}

/// A finite cover of the box by Euclidean balls of radius eps.
#[derive(Debug, Clone)]
pub struct EpsilonNet {
    pub centers: Vec<Vec<f64>>,
    pub eps: f64,
}

impl EpsilonNet {
    pub fn log_size(&self) -> f64 {
        (self.centers.len() as f64).ln()
    }
}

/// Gaussian MLE on the box: the coordinate-wise clip of the sample mean.
/// (The objective is separable and quadratic, so clipping is the exact
/// constrained argmin.)
pub fn mle_gaussian(bx: &CompactBox, s: &Sample) -> Result<Vec<f64>> {
    if s.n == 0 {
        return Err(Error::EmptySample);
    }
    let xbar = s.mean();
    if xbar.len() != bx.dim {
        return Err(Error::DimensionMismatch {
            expected: bx.dim,
            got: xbar.len(),
        });
    }
    Ok(bx.clip(&xbar))
}

/// Exponential-family MLE: solves psi'(theta) = mean(T) by bisection,
/// clipped to the natural-parameter domain when the root lies outside.
pub fn mle_expfam(fam: &ExpFamily1D, s: &Sample) -> Result<f64> {
    if s.n == 0 {
        return Err(Error::EmptySample);
    }
    let tbar = s.data.iter().map(|x| x[0]).sum::<f64>() / s.n as f64;
    let (mut lo, mut hi) = (fam.theta_lo, fam.theta_hi);
    // psi' is increasing (psi is strictly convex), so the root is bracketed
    // exactly when tbar is inside the psi'-range of the domain.
    if (fam.psi1)(lo) >= tbar {
        return Ok(lo);
    }
    if (fam.psi1)(hi) <= tbar {
        return Ok(hi);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (fam.psi1)(mid) < tbar {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Axis-aligned grid net with spacing 2 eps / sqrt(d); its size matches the
/// constructive covering-number bound. Nets above 10^7 centers are refused.
pub fn build_net(bx: &CompactBox, eps: f64) -> Result<EpsilonNet> {
    let cn: CoveringNumber = covering_number_box(bx.half_width, bx.dim, eps)?;
    match cn.count {
        Some(total) if total <= 10_000_000 => {}
        Some(total) => return Err(Error::NetTooLarge(total)),
        None => return Err(Error::NetTooLarge(u128::MAX)),
    }
    Ok(EpsilonNet {
        centers: covering_centers_box(bx.half_width, bx.dim, eps)?,
        eps,
    })
}

/// Nearest net center to theta_hat, ties broken by lowest index.
pub fn net_projection(net: &EpsilonNet, theta_hat: &[f64]) -> Result<(usize, Vec<f64>)> {
    if net.centers.is_empty() {
        return Err(Error::InvalidConfig("empty net".into()));
    }
    let mut best = 0usize;
    let mut best_d2 = f64::INFINITY;
    for (i, c) in net.centers.iter().enumerate() {
        if c.len() != theta_hat.len() {
            return Err(Error::DimensionMismatch {
                expected: c.len(),
                got: theta_hat.len(),
            });
        }
        let d2: f64 = c
            .iter()
            .zip(theta_hat)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        if d2 < best_d2 {
            best_d2 = d2;
            best = i;
        }
    }
    Ok((best, net.centers[best].clone()))
}

/// Realized Lipschitz constant of r_n(., theta0)/n for the Gaussian model on
/// the box: sup_theta ||theta - xbar|| / v^2, attained at a box corner.
pub fn realized_lipschitz_gaussian(bx: &CompactBox, xbar: &[f64], noise_sd: f64) -> f64 {
    let m = bx.half_width;
    let sup_sq: f64 = xbar
        .iter()
        .map(|x| {
            let far = if *x >= 0.0 { -m } else { m };
            (far - x) * (far - x)
        })
        .sum();
    sup_sq.sqrt() / (noise_sd * noise_sd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{GaussianMeanModel, ModelSpec};
    use crate::rng::stream_rng;
    use rand::Rng;

    #[test]
    fn gaussian_mle_clips() {
        let bx = CompactBox::new(3.0, 1).unwrap();
        let s = Sample::from_data(vec![vec![1.0], vec![2.0]], 0);
        assert_eq!(mle_gaussian(&bx, &s).unwrap(), vec![1.5]);
        let s = Sample::from_data(vec![vec![5.0]], 0);
        assert_eq!(mle_gaussian(&bx, &s).unwrap(), vec![3.0]);
        assert!(mle_gaussian(&bx, &Sample::from_data(vec![], 0)).is_err());
    }

    #[test]
    fn gaussian_mle_is_argmin_of_rn() {
        let model_inner = GaussianMeanModel::new(2, 1.0).unwrap();
        let model = ModelSpec::GaussianMean(model_inner);
        let bx = CompactBox::new(2.0, 2).unwrap();
        let theta0 = [0.4, -0.6];
        let mut rng = stream_rng(7, 0);
        for rep in 0..20 {
            let s = model.sample(&theta0, 10, 100 + rep).unwrap();
            let hat = mle_gaussian(&bx, &s).unwrap();
            let r_hat = model.neg_log_lik_ratio(&hat, &theta0.to_vec(), &s).unwrap();
            for _ in 0..100 {
                let probe = vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
                let r = model.neg_log_lik_ratio(&probe, &theta0.to_vec(), &s).unwrap();
                assert!(r_hat <= r + 1e-12);
            }
        }
    }

    #[test]
    fn expfam_mle_roots() {
        let pois = ExpFamily1D::poisson(-2.0, 2.0).unwrap();
        let s = Sample::from_data(vec![vec![1.0]], 0);
        let hat = mle_expfam(&pois, &s).unwrap();
        assert!(hat.abs() < 1e-12, "exp(theta) = 1 at theta = 0, got {hat}");
        assert!((pois.psi1)(hat) - 1.0 < 1e-10);

        let bern = ExpFamily1D::bernoulli(-3.0, 3.0).unwrap();
        let s = Sample::from_data(vec![vec![1.0], vec![0.0]], 0);
        let hat = mle_expfam(&bern, &s).unwrap();
        assert!(hat.abs() < 1e-12, "logit(1/2) = 0, got {hat}");
    }

    #[test]
    fn expfam_mle_boundary_dominates_interior() {
        // Mean count 9 is outside exp([-1, 1]): the root is clipped to the
        // upper boundary, which must dominate interior probes.
        let pois = ExpFamily1D::poisson(-1.0, 1.0).unwrap();
        let s = Sample::from_data(vec![vec![9.0]], 0);
        let hat = mle_expfam(&pois, &s).unwrap();
        assert_eq!(hat, 1.0);
        let model = ModelSpec::ExpFamily(pois);
        let r_hat = model.neg_log_lik_ratio(&[hat], &[0.0], &s).unwrap();
        for k in 0..100 {
            let probe = -1.0 + 2.0 * k as f64 / 100.0;
            let r = model.neg_log_lik_ratio(&[probe], &[0.0], &s).unwrap();
            assert!(r_hat <= r + 1e-12);
        }
    }

    #[test]
    fn net_construction_and_sizes() {
        let bx = CompactBox::new(1.0, 1).unwrap();
        let net = build_net(&bx, 0.5).unwrap();
        assert_eq!(net.centers, vec![vec![-0.5], vec![0.5]]);

        let bx2 = CompactBox::new(1.0, 2).unwrap();
        let net = build_net(&bx2, 0.1).unwrap();
        assert_eq!(net.centers.len(), 225);

        let huge = CompactBox::new(1.0, 8).unwrap();
        assert!(matches!(build_net(&huge, 1e-3), Err(Error::NetTooLarge(_))));
    }

    #[test]
    fn projection_tie_break_and_distance() {
        let bx = CompactBox::new(1.0, 1).unwrap();
        let net = build_net(&bx, 0.5).unwrap();
        let (i, c) = net_projection(&net, &[-0.5]).unwrap();
        assert_eq!((i, c[0]), (0, -0.5));
        // Equidistant from both centers: lowest index wins.
        let (i, _) = net_projection(&net, &[0.0]).unwrap();
        assert_eq!(i, 0);

        let bx2 = CompactBox::new(1.0, 2).unwrap();
        let net = build_net(&bx2, 0.1).unwrap();
        let mut rng = stream_rng(21, 2);
        for _ in 0..10_000 {
            let theta = vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let (_, c) = net_projection(&net, &theta).unwrap();
            let d2: f64 = c
                .iter()
                .zip(&theta)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            assert!(d2.sqrt() <= net.eps + 1e-12);
        }
    }

    #[test]
    fn realized_lipschitz_examples() {
        let bx = CompactBox::new(1.0, 1).unwrap();
        // xbar = 0: farthest corner is at distance 1.
        assert!((realized_lipschitz_gaussian(&bx, &[0.0], 1.0) - 1.0).abs() < 1e-15);
        // xbar = 0.5: farthest corner is -1, distance 1.5; v = 2 divides by 4.
        assert!((realized_lipschitz_gaussian(&bx, &[0.5], 2.0) - 1.5 / 4.0).abs() < 1e-15);
    }
}

//! Numerical integration helpers: adaptive Simpson on an interval and
//! Gauss-Hermite nodes for Gaussian expectations.

/// Adaptive Simpson quadrature of `f` on [a, b] to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson_rule(a, b, fa, fm, fb);
    simpson_recurse(f, a, b, fa, fm, fb, whole, tol, 60)
}

fn simpson_rule(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson_rule(a, m, fa, flm, fm);
    let right = simpson_rule(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + simpson_recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// Nodes and weights of n-point Gauss-Hermite quadrature for the weight
/// function e^{-x^2}: int f(x) e^{-x^2} dx  ~=  sum_i w_i f(x_i).
///
/// Newton iteration on the Hermite recurrence; nodes found from the
/// asymptotic initial guesses, accurate to machine precision for n <= 128.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = (n + 1) / 2;
    let nf = n as f64;
    let mut z = 0.0f64;
    for i in 0..m {
        // Initial guesses from Numerical Recipes.
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * nodes[0],
            3 => 1.91 * z - 0.91 * nodes[1],
            _ => 2.0 * z - nodes[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..200 {
            // Recurrence for orthonormal Hermite functions.
            let mut p1 = std::f64::consts::PI.powf(-0.25);
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = z;
        nodes[n - 1 - i] = -z;
        weights[i] = 2.0 / (pp * pp);
        weights[n - 1 - i] = weights[i];
    }
    (nodes, weights)
}

/// E[f(T)] for T ~ N(mean, var) via n-point Gauss-Hermite.
pub fn gauss_hermite_expectation<F: Fn(f64) -> f64>(
    f: &F,
    mean: f64,
    var: f64,
    n: usize,
) -> f64 {
    let (nodes, weights) = gauss_hermite(n);
    let scale = (2.0 * var).sqrt();
    let inv_sqrt_pi = std::f64::consts::PI.sqrt().recip();
    nodes
        .iter()
        .zip(&weights)
        .map(|(x, w)| w * f(mean + scale * x))
        .sum::<f64>()
        * inv_sqrt_pi
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_integrates_gaussian_density() {
        let f = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let v = adaptive_simpson(&f, -10.0, 10.0, 1e-12);
        assert!((v - 1.0).abs() < 1e-10);
    }

    #[test]
    fn hermite_weights_sum_to_sqrt_pi() {
        for n in [8, 32, 64] {
            let (_, w) = gauss_hermite(n);
            let s: f64 = w.iter().sum();
            assert!((s - std::f64::consts::PI.sqrt()).abs() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn hermite_moments_of_normal() {
        // E[T^2] = mean^2 + var, E[T^4] = mean^4 + 6 mean^2 var + 3 var^2.
        let (mean, var) = (0.7, 2.3);
        let m2 = gauss_hermite_expectation(&|t| t * t, mean, var, 32);
        assert!((m2 - (mean * mean + var)).abs() < 1e-10);
        let m4 = gauss_hermite_expectation(&|t| t.powi(4), mean, var, 32);
        let exact = mean.powi(4) + 6.0 * mean * mean * var + 3.0 * var * var;
        assert!((m4 - exact).abs() < 1e-9);
    }
}

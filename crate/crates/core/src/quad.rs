//! Cumulative composite Simpson quadrature on uniform grids.

/// Running integral `I[k] = ∫_{t_0}^{t_k} f` from samples `f[k]` at spacing `h`.
///
/// Even nodes use composite Simpson. Odd nodes add a single-interval
/// three-point rule to the preceding even value, which keeps third-order
/// local accuracy without a half-step sample.
pub fn cumulative_simpson(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    if n == 2 {
        out[1] = 0.5 * h * (f[0] + f[1]);
        return out;
    }
    let mut k = 2;
    while k < n {
        out[k] = out[k - 2] + h / 3.0 * (f[k - 2] + 4.0 * f[k - 1] + f[k]);
        k += 2;
    }
    let mut k = 1;
    while k < n {
        out[k] = if k + 1 < n {
            out[k - 1] + h / 12.0 * (5.0 * f[k - 1] + 8.0 * f[k] - f[k + 1])
        } else {
            out[k - 1] + h / 12.0 * (-f[k - 2] + 8.0 * f[k - 1] + 5.0 * f[k])
        };
        k += 2;
    }
    out
}

/// Nested running integral `∫_{t_0}^{t} w(τ) (∫_{t_0}^{τ} g) dτ` with
/// `w = exp(∫_{t_0}^{τ} p)`, all on one uniform grid.
pub fn weighted_double_integral(p: &[f64], g: &[f64], h: f64) -> Vec<f64> {
    let inner_p = cumulative_simpson(p, h);
    let inner_g = cumulative_simpson(g, h);
    let integrand: Vec<f64> = inner_p.iter().zip(&inner_g).map(|(ip, ig)| ip.exp() * ig).collect();
    cumulative_simpson(&integrand, h)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, a: f64, b: f64) -> (Vec<f64>, f64) {
        let h = (b - a) / (n - 1) as f64;
        ((0..n).map(|i| a + i as f64 * h).collect(), h)
    }

    #[test]
    fn cubic_is_exact_at_even_nodes() {
        let (t, h) = grid(11, 0.0, 2.0);
        let f: Vec<f64> = t.iter().map(|x| x * x * x - x).collect();
        let out = cumulative_simpson(&f, h);
        for (k, x) in t.iter().enumerate() {
            let exact = x.powi(4) / 4.0 - x * x / 2.0;
            let tol = if k % 2 == 0 { 1e-13 } else { 1e-3 };
            assert!((out[k] - exact).abs() < tol, "k={k}");
        }
    }

    #[test]
    fn smooth_integrand_converges_everywhere() {
        let (t, h) = grid(401, 0.0, 3.0);
        let f: Vec<f64> = t.iter().map(|x| x.cos()).collect();
        let out = cumulative_simpson(&f, h);
        let err = t.iter().zip(&out).map(|(x, v)| (v - x.sin()).abs()).fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn two_points_use_trapezoid() {
        assert_eq!(cumulative_simpson(&[1.0, 3.0], 0.5), vec![0.0, 1.0]);
        assert!(cumulative_simpson(&[], 1.0).is_empty());
    }

    #[test]
    fn double_integral_matches_closed_form() {
        // w = exp(0.15 τ), inner ∫ -0.1 = -0.1 τ
        let (t, h) = grid(2001, 0.0, 20.0);
        let p = vec![0.15; t.len()];
        let g = vec![-0.1; t.len()];
        let out = weighted_double_integral(&p, &g, h);
        let k = 0.15f64;
        for (x, v) in t.iter().zip(&out).step_by(100) {
            // ∫ -0.1 τ e^{kτ} dτ
            let exact = -0.1 * ((x / k - 1.0 / (k * k)) * (k * x).exp() + 1.0 / (k * k));
            assert!((v - exact).abs() < 1e-7 * (1.0 + exact.abs()), "{x}");
        }
    }
}

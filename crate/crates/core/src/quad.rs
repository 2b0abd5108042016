//! Small quadrature helpers: Gauss–Legendre rules, Chebyshev grids and a
//! smooth radial cut-off.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        // Tricomi initial guess, then Newton on P_n.
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d.is_finite() {
            dp = d;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Composite Gauss–Legendre nodes/weights on [a, b].
pub fn composite_gl(a: f64, b: f64, panels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(lo + 0.5 * h * (xi + 1.0));
            weights.push(0.5 * h * wi);
        }
    }
    (nodes, weights)
}

/// Integrates `f` over [a, b] with a composite Gauss–Legendre rule.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize, order: usize) -> f64 {
    let (x, w) = composite_gl(a, b, panels, order);
    x.iter().zip(&w).map(|(&xi, &wi)| wi * f(xi)).sum()
}

/// C^∞ step rising from 0 at `lo` to 1 at `hi`.
pub fn smooth_step(x: f64, lo: f64, hi: f64) -> f64 {
    if x <= lo {
        return 0.0;
    }
    if x >= hi {
        return 1.0;
    }
    let s = (x - lo) / (hi - lo);
    let a = (-1.0 / s).exp();
    let b = (-1.0 / (1.0 - s)).exp();
    a / (a + b)
}

/// Chebyshev–Lobatto grid on [-d, d] with spectral interpolation and
/// integration from the origin.
#[derive(Clone, Debug)]
pub struct ChebGrid {
    pub half_width: f64,
    pub nodes: Vec<f64>,
    /// `integ[i][j]`: weight of sample j in ∫_0^{t_i}.
    pub integ: Vec<Vec<f64>>,
    /// Clenshaw–Curtis weights for ∫_{-d}^{d}.
    pub cc_weights: Vec<f64>,
}

impl ChebGrid {
    pub fn new(n: usize, half_width: f64) -> Self {
        assert!(n >= 3);
        let nm = n - 1;
        let nodes: Vec<f64> = (0..n)
            .map(|i| half_width * (PI * i as f64 / nm as f64).cos())
            .collect();
        // values -> Chebyshev coefficients (type-I DCT, direct).
        let mut to_coef = vec![vec![0.0; n]; n];
        for (k, row) in to_coef.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                let cj = if j == 0 || j == nm { 0.5 } else { 1.0 };
                *v = 2.0 / nm as f64 * cj * (PI * (k * j) as f64 / nm as f64).cos();
            }
            if k == 0 || k == nm {
                for v in row.iter_mut() {
                    *v *= 0.5;
                }
            }
        }
        // coefficients of the antiderivative (in s = t/d), then scale by d.
        let mut integ_coef = vec![vec![0.0; n]; n + 1];
        for k in 0..n {
            // ∫T_k: T_1/... standard relations
            match k {
                0 => integ_coef[1][0] += 1.0,
                1 => {
                    integ_coef[0][1] += 0.25;
                    integ_coef[2][1] += 0.25;
                }
                _ => {
                    integ_coef[k + 1][k] += 0.5 / (k + 1) as f64;
                    integ_coef[k - 1][k] -= 0.5 / (k - 1) as f64;
                }
            }
        }
        let eval_cheb = |coef_row: &dyn Fn(usize) -> f64, s: f64, len: usize| -> f64 {
            let th = s.clamp(-1.0, 1.0).acos();
            (0..len).map(|k| coef_row(k) * (k as f64 * th).cos()).sum()
        };
        let mut integ = vec![vec![0.0; n]; n];
        for j in 0..n {
            // antiderivative coefficients for the cardinal function of node j
            let c: Vec<f64> = (0..n).map(|k| to_coef[k][j]).collect();
            let ic: Vec<f64> = (0..=n)
                .map(|r| (0..n).map(|k| integ_coef[r][k] * c[k]).sum())
                .collect();
            let at0 = eval_cheb(&|k| ic[k], 0.0, n + 1);
            for i in 0..n {
                let s = nodes[i] / half_width;
                integ[i][j] = half_width * (eval_cheb(&|k| ic[k], s, n + 1) - at0);
            }
        }
        let cc_weights: Vec<f64> = (0..n)
            .map(|j| {
                let c: Vec<f64> = (0..n).map(|k| to_coef[k][j]).collect();
                half_width
                    * c.iter()
                        .enumerate()
                        .map(|(k, ck)| {
                            if k % 2 == 1 {
                                0.0
                            } else {
                                ck * 2.0 / (1.0 - (k * k) as f64)
                            }
                        })
                        .sum::<f64>()
            })
            .collect();
        ChebGrid {
            half_width,
            nodes,
            integ,
            cc_weights,
        }
    }

    /// Barycentric interpolation weights at an arbitrary point `t`.
    pub fn interp_weights(&self, t: f64) -> Vec<f64> {
        let n = self.nodes.len();
        if let Some(i) = self.nodes.iter().position(|&x| (x - t).abs() < 1e-15) {
            let mut w = vec![0.0; n];
            w[i] = 1.0;
            return w;
        }
        let raw: Vec<f64> = (0..n)
            .map(|j| {
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                let h = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
                s * h / (t - self.nodes[j])
            })
            .collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|r| r / total).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(10);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert!((s - 2.0 / 19.0).abs() < 1e-14);
        let (x, w) = gauss_legendre(64);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * (3.0 * x).exp()).sum();
        assert!((s - ((3.0f64).exp() - (-3.0f64).exp()) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn cheb_antiderivative_and_interpolation() {
        let g = ChebGrid::new(25, 0.5);
        let f: Vec<f64> = g.nodes.iter().map(|t| (2.0 * t).cos()).collect();
        for (i, t) in g.nodes.iter().enumerate() {
            let v: f64 = (0..f.len()).map(|j| g.integ[i][j] * f[j]).sum();
            assert!((v - (2.0 * t).sin() / 2.0).abs() < 1e-13, "{v}");
        }
        let total: f64 = g.cc_weights.iter().zip(&f).map(|(w, v)| w * v).sum();
        assert!((total - (1.0f64).sin()).abs() < 1e-13);
        let wts = g.interp_weights(0.123);
        let v: f64 = wts.iter().zip(&f).map(|(w, v)| w * v).sum();
        assert!((v - (0.246f64).cos()).abs() < 1e-13);
    }

    #[test]
    fn smooth_step_limits() {
        assert_eq!(smooth_step(0.7, 0.75, 0.85), 0.0);
        assert_eq!(smooth_step(0.9, 0.75, 0.85), 1.0);
        assert!((smooth_step(0.8, 0.75, 0.85) - 0.5).abs() < 1e-12);
    }
}

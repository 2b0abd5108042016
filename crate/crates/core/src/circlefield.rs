//! Band-limited functions on the unit circle, Laurent series on exterior
//! disks, and the Hardy-space operators built on them (projections, the
//! Herglotz transform, outer functions and the two-sided Toeplitz solve).
//!
//! A [`CircleFunction`] with `N` modes stores Fourier coefficients
//! `c_k`, `-N/2 <= k <= N/2`, of `f(e^{iθ}) = Σ c_k e^{ikθ}`. Products are
//! formed on a `2N`-point grid so that retained modes are exact.

use crate::error::{Error, Result};
use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};
use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn fft_plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(len)
        } else {
            p.plan_fft_forward(len)
        }
    })
}

/// Which part of the Fourier series a projection keeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subspace {
    /// modes `k >= 0` (H²)
    Analytic,
    /// modes `k <= 0` (H²₋, functions holomorphic at ∞)
    Exterior,
    /// modes `k < 0` (H²₋,₀, vanishing at ∞)
    ExteriorZero,
    /// modes `k > 0`
    AnalyticZero,
}

/// A band-limited function on 𝕋.
#[derive(Clone, Debug, PartialEq)]
pub struct CircleFunction {
    half: usize,
    coeffs: Vec<C64>,
}

impl CircleFunction {
    /// The zero function with `n_modes` modes (a power of two, at least 2).
    pub fn zeros(n_modes: usize) -> Self {
        assert!(
            n_modes >= 2 && n_modes.is_power_of_two(),
            "mode count must be a power of two"
        );
        let half = n_modes / 2;
        CircleFunction {
            half,
            coeffs: vec![C64::new(0.0, 0.0); 2 * half + 1],
        }
    }

    pub fn constant(n_modes: usize, value: C64) -> Self {
        let mut f = Self::zeros(n_modes);
        f.set(0, value);
        f
    }

    /// Builds from a closure of θ by sampling on `2N` points.
    pub fn from_fn(n_modes: usize, f: impl Fn(f64) -> C64) -> Self {
        let len = 2 * n_modes;
        let samples: Vec<C64> = (0..len)
            .map(|j| f(2.0 * PI * j as f64 / len as f64))
            .collect();
        Self::from_samples(n_modes, &samples)
    }

    /// Fourier coefficients from equispaced samples `s_j = f(2πj/L)`.
    pub fn from_samples(n_modes: usize, samples: &[C64]) -> Self {
        let len = samples.len();
        let mut buf = samples.to_vec();
        fft_plan(len, false).process(&mut buf);
        let scale = 1.0 / len as f64;
        let mut f = Self::zeros(n_modes);
        let h = f.half as i64;
        for k in -h..=h {
            let idx = k.rem_euclid(len as i64) as usize;
            if (k.unsigned_abs() as usize) * 2 > len {
                continue;
            }
            let mut v = buf[idx] * scale;
            // the Nyquist mode of the sample grid is shared by ±L/2
            if (k.unsigned_abs() as usize) * 2 == len {
                v *= 0.5;
            }
            f.set(k, v);
        }
        f
    }

    pub fn n_modes(&self) -> usize {
        2 * self.half
    }

    pub fn half(&self) -> i64 {
        self.half as i64
    }

    pub fn coeff(&self, k: i64) -> C64 {
        if k.unsigned_abs() as usize > self.half {
            C64::new(0.0, 0.0)
        } else {
            self.coeffs[(k + self.half as i64) as usize]
        }
    }

    pub fn set(&mut self, k: i64, v: C64) {
        assert!(
            k.unsigned_abs() as usize <= self.half,
            "mode {k} out of band"
        );
        let h = self.half as i64;
        self.coeffs[(k + h) as usize] = v;
    }

    /// Iterates `(k, c_k)` over all stored modes.
    pub fn modes(&self) -> impl Iterator<Item = (i64, C64)> + '_ {
        let h = self.half as i64;
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(i, c)| (i as i64 - h, *c))
    }

    /// Samples on `len` equispaced points (`len` a power of two, `>= N`).
    pub fn samples(&self, len: usize) -> Vec<C64> {
        let mut buf = vec![C64::new(0.0, 0.0); len];
        for (k, c) in self.modes() {
            buf[k.rem_euclid(len as i64) as usize] += c;
        }
        fft_plan(len, true).process(&mut buf);
        buf
    }

    pub fn eval(&self, theta: f64) -> C64 {
        self.modes()
            .map(|(k, c)| c * C64::from_polar(1.0, k as f64 * theta))
            .sum()
    }

    /// θ-derivative evaluated at a point.
    pub fn eval_dtheta(&self, theta: f64) -> C64 {
        self.modes()
            .map(|(k, c)| c * C64::new(0.0, k as f64) * C64::from_polar(1.0, k as f64 * theta))
            .sum()
    }

    /// Mean value `∫ f ds` (the zero mode).
    pub fn mean(&self) -> C64 {
        self.coeff(0)
    }

    /// Applies a pointwise map on the `2N` grid and re-truncates.
    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        let s: Vec<C64> = self
            .samples(2 * self.n_modes())
            .into_iter()
            .map(f)
            .collect();
        Self::from_samples(self.n_modes(), &s)
    }

    /// Pointwise product (exact on retained modes).
    pub fn mul(&self, other: &Self) -> Self {
        let n = self.n_modes().max(other.n_modes());
        let len = 2 * n;
        let a = self.samples(len);
        let b = other.samples(len);
        let s: Vec<C64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        Self::from_samples(n, &s)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(C64, C64) -> C64) -> Self {
        let n = self.n_modes().max(other.n_modes());
        let mut out = Self::zeros(n);
        let h = n as i64 / 2;
        for k in -h..=h {
            out.set(k, f(self.coeff(k), other.coeff(k)));
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: C64) -> Self {
        CircleFunction {
            half: self.half,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add_assign_scaled(&mut self, other: &Self, s: C64) {
        assert_eq!(self.half, other.half);
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b * s;
        }
    }

    /// Complex conjugate function `θ ↦ conj f(e^{iθ})`.
    pub fn conj(&self) -> Self {
        let mut out = Self::zeros(self.n_modes());
        for (k, c) in self.modes() {
            out.set(-k, c.conj());
        }
        out
    }

    /// Real part as a function.
    pub fn re(&self) -> Self {
        self.add(&self.conj()).scale(C64::new(0.5, 0.0))
    }

    pub fn project(&self, space: Subspace) -> Self {
        let mut out = Self::zeros(self.n_modes());
        for (k, c) in self.modes() {
            let keep = match space {
                Subspace::Analytic => k >= 0,
                Subspace::Exterior => k <= 0,
                Subspace::ExteriorZero => k < 0,
                Subspace::AnalyticZero => k > 0,
            };
            if keep {
                out.set(k, c);
            }
        }
        out
    }

    /// Multiplies mode `k` by `w(k)`.
    pub fn mode_multiply(&self, w: impl Fn(i64) -> C64) -> Self {
        let mut out = self.clone();
        for (k, c) in self.modes() {
            out.set(k, c * w(k));
        }
        out
    }

    /// Changes the number of stored modes (truncating or zero-padding).
    pub fn resized(&self, n_modes: usize) -> Self {
        let mut out = Self::zeros(n_modes);
        let h = out.half().min(self.half());
        for k in -h..=h {
            out.set(k, self.coeff(k));
        }
        out
    }

    /// ℓ² norm of the coefficients (= L²(𝕋, ds) norm).
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest modulus over a `2N`-point sample grid.
    pub fn sup_norm(&self) -> f64 {
        self.samples(2 * self.n_modes())
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    /// ℓ² mass in modes `|k| > 3N/8`, relative to the total.
    pub fn tail_ratio(&self) -> f64 {
        let cut = (3 * self.half as i64) / 4;
        let tail: f64 = self
            .modes()
            .filter(|(k, _)| k.abs() > cut)
            .map(|(_, c)| c.norm_sqr())
            .sum();
        let total: f64 = self.coeffs.iter().map(|c| c.norm_sqr()).sum();
        if total == 0.0 {
            0.0
        } else {
            (tail / total).sqrt()
        }
    }

    /// Zeroes coefficients below `rel * max|c_k|`.
    pub fn denoise(&self, rel: f64) -> Self {
        let mx = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        CircleFunction {
            half: self.half,
            coeffs: self
                .coeffs
                .iter()
                .map(|c| {
                    if c.norm() < rel * mx {
                        C64::new(0.0, 0.0)
                    } else {
                        *c
                    }
                })
                .collect(),
        }
    }

    /// Largest |Im| over the sample grid relative to the sup norm.
    pub fn imag_defect(&self) -> f64 {
        let s = self.samples(2 * self.n_modes());
        let mx = s.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let im = s.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
        if mx == 0.0 {
            0.0
        } else {
            im / mx
        }
    }

    /// The boundary values' exterior part as a Laurent series: modes `k <= 1`
    /// become `b_n w^{-n}` with `n = -k`.
    pub fn to_laurent(&self, rho: f64) -> LaurentSeries {
        let coeffs: Vec<C64> = (-1..=self.half()).map(|n| self.coeff(-n)).collect();
        LaurentSeries::new(coeffs, rho)
    }
}

/// Herglotz transform of a real function: the function in H²₋ whose real
/// part on 𝕋 equals `f`, normalized to be real at ∞.
pub fn herglotz(f: &CircleFunction) -> Result<LaurentSeries> {
    let d = f.imag_defect();
    if d > 1e-9 {
        return Err(Error::Domain(format!(
            "Herglotz transform needs real input (imaginary defect {d:.2e})"
        )));
    }
    let mut coeffs = vec![C64::new(0.0, 0.0); f.half() as usize + 2];
    coeffs[1] = C64::new(f.coeff(0).re, 0.0);
    for n in 1..=f.half() {
        coeffs[n as usize + 1] = f.coeff(-n) * 2.0;
    }
    Ok(LaurentSeries::new(coeffs, 0.0))
}

/// Outer function `H` with `Re H = logmod` on 𝕋 (so `|e^H| = e^{logmod}`).
pub fn outer_function(logmod: &CircleFunction) -> Result<LaurentSeries> {
    let tail = logmod.tail_ratio();
    if tail > 1e-10 && logmod.l2_norm() > 1e-300 {
        return Err(Error::Resolution {
            what: "log-modulus Fourier tail".into(),
            tail,
        });
    }
    let mut h = herglotz(logmod)?;
    h.rho = h.estimate_radius();
    Ok(h)
}

/// Membership defects of a Toeplitz solution.
#[derive(Clone, Copy, Debug)]
pub struct ToeplitzDefect {
    /// ℓ² norm of the positive modes of `f` (should vanish: `f ∈ H²₋`).
    pub exterior: f64,
    /// ℓ² norm of the negative modes of `e^{v̄} f + e^{-u} F`
    /// (should vanish: the sum lies in H²).
    pub analytic: f64,
}

/// Solves `P₋[e^{u+v̄}f] = -P₋[F]` in `f ∈ H²₋` with `f(∞) = C`, for `u`, `v`
/// given on 𝕋 with `v ∈ H²`. Returns `f = C e^{-v̄} - e^{-v̄} P₋,₀[e^{-u} F]`,
/// so that `f(∞) = C e^{-v̄(∞)}`.
pub fn toeplitz_solve(
    u: &CircleFunction,
    v: &CircleFunction,
    f: &CircleFunction,
    c: C64,
) -> Result<CircleFunction> {
    let n = u.n_modes().max(v.n_modes()).max(f.n_modes());
    let (u, v, f) = (u.resized(n), v.resized(n), f.resized(n));
    let e_mvbar = v.conj().map(|z| (-z).exp());
    let e_mu_f = u.map(|z| (-z).exp()).mul(&f);
    let p = e_mu_f.project(Subspace::ExteriorZero);
    let sol = e_mvbar
        .scale(c)
        .sub(&e_mvbar.mul(&p))
        .project(Subspace::Exterior);
    let defect = toeplitz_defect(&u, &v, &f, &sol);
    let scale = 1.0 + f.l2_norm() + c.norm();
    let worst = defect.exterior.max(defect.analytic);
    if worst > 1e-9 * scale {
        return Err(Error::Defect {
            what: "Toeplitz solve".into(),
            norm: worst,
            tol: 1e-9 * scale,
        });
    }
    Ok(sol)
}

/// Evaluates the membership defects of a candidate solution (positive modes
/// of `sol` before projection are assumed removed by the caller).
pub fn toeplitz_defect(
    u: &CircleFunction,
    v: &CircleFunction,
    f: &CircleFunction,
    sol: &CircleFunction,
) -> ToeplitzDefect {
    let exterior = sol.project(Subspace::AnalyticZero).l2_norm();
    let lhs = v
        .conj()
        .map(|z| z.exp())
        .mul(sol)
        .add(&u.map(|z| (-z).exp()).mul(f));
    let analytic = lhs.project(Subspace::ExteriorZero).l2_norm();
    ToeplitzDefect { exterior, analytic }
}

/// `g(w) = Σ_{n=-1}^{M} b_n w^{-n}`, holomorphic for `|w| > rho`.
#[derive(Clone, Debug, PartialEq)]
pub struct LaurentSeries {
    /// `coeffs[i]` is `b_{i-1}`.
    pub coeffs: Vec<C64>,
    /// Convergence radius: evaluation requires `|w| > rho`.
    pub rho: f64,
}

impl LaurentSeries {
    pub fn new(coeffs: Vec<C64>, rho: f64) -> Self {
        LaurentSeries { coeffs, rho }
    }

    pub fn constant(c: C64) -> Self {
        LaurentSeries::new(vec![C64::new(0.0, 0.0), c], 0.0)
    }

    /// Coefficient `b_n` of `w^{-n}`.
    pub fn coeff(&self, n: i64) -> C64 {
        let i = n + 1;
        if i < 0 || i as usize >= self.coeffs.len() {
            C64::new(0.0, 0.0)
        } else {
            self.coeffs[i as usize]
        }
    }

    pub fn max_index(&self) -> i64 {
        self.coeffs.len() as i64 - 2
    }

    /// Value at ∞ (requires `b_{-1} = 0`).
    pub fn at_infinity(&self) -> C64 {
        self.coeff(0)
    }

    fn check_domain(&self, w: C64) -> Result<()> {
        if !(w.norm() > self.rho) || !w.norm().is_finite() {
            return Err(Error::Domain(format!(
                "|w| = {:.6} is not in the exterior disk of radius {:.6}",
                w.norm(),
                self.rho
            )));
        }
        Ok(())
    }

    /// Evaluates the series (Horner in `1/w`).
    pub fn eval(&self, w: C64) -> Result<C64> {
        self.check_domain(w)?;
        Ok(self.eval_unchecked(w))
    }

    pub fn eval_unchecked(&self, w: C64) -> C64 {
        let iw = w.inv();
        let mut acc = C64::new(0.0, 0.0);
        for n in (0..=self.max_index()).rev() {
            acc = acc * iw + self.coeff(n);
        }
        acc + self.coeff(-1) * w
    }

    /// Complex derivative `g'(w)`.
    pub fn eval_deriv(&self, w: C64) -> Result<C64> {
        self.check_domain(w)?;
        let iw = w.inv();
        let mut acc = C64::new(0.0, 0.0);
        for n in (1..=self.max_index()).rev() {
            acc = acc * iw + self.coeff(n) * (-(n as f64));
        }
        Ok(acc * iw * iw + self.coeff(-1))
    }

    /// Boundary values on 𝕋 as a circle function with `n_modes` modes.
    pub fn boundary(&self, n_modes: usize) -> CircleFunction {
        let mut f = CircleFunction::zeros(n_modes);
        for n in -1..=self.max_index().min(f.half()) {
            f.set(-n, self.coeff(n));
        }
        f
    }

    /// Radial derivatives `∂_r^p [r^a g(re^{iθ})]` at `r = 1` for
    /// `p = 0..=pmax`; mode `-n` picks up the falling factorial `(a-n)_p`.
    pub fn radial_derivs(&self, a: i64, pmax: usize, n_modes: usize) -> Vec<CircleFunction> {
        (0..=pmax)
            .map(|p| {
                let mut f = CircleFunction::zeros(n_modes);
                for n in -1..=self.max_index().min(f.half()) {
                    f.set(-n, self.coeff(n) * falling(a - n, p));
                }
                f
            })
            .collect()
    }

    /// Termwise product with another series (truncated at the longer length).
    pub fn scale(&self, s: C64) -> Self {
        LaurentSeries::new(self.coeffs.iter().map(|c| c * s).collect(), self.rho)
    }

    /// Geometric decay rate of the coefficients; 0 for (numerically) finite
    /// series. This is an estimate of the convergence radius.
    pub fn estimate_radius(&self) -> f64 {
        let mags: Vec<f64> = (1..=self.max_index())
            .map(|n| self.coeff(n).norm())
            .collect();
        let mx = mags.iter().cloned().fold(self.coeff(0).norm(), f64::max);
        if mx == 0.0 {
            return 0.0;
        }
        let sig: Vec<(usize, f64)> = mags
            .iter()
            .enumerate()
            .filter(|(_, &m)| m > 1e-15 * mx)
            .map(|(i, &m)| (i + 1, m))
            .collect();
        if sig.len() < 2 {
            return 0.0;
        }
        // least-squares slope of log|b_n| over significant coefficients
        let nbar = sig.iter().map(|(n, _)| *n as f64).sum::<f64>() / sig.len() as f64;
        let lbar = sig.iter().map(|(_, m)| m.ln()).sum::<f64>() / sig.len() as f64;
        let (mut num, mut den) = (0.0, 0.0);
        for (n, m) in &sig {
            num += (*n as f64 - nbar) * (m.ln() - lbar);
            den += (*n as f64 - nbar).powi(2);
        }
        if den == 0.0 {
            return 0.0;
        }
        (num / den).exp().min(1.0)
    }

    /// Estimated truncation error on `|w| = r`: the last stored quarter of
    /// the coefficients continued geometrically.
    pub fn tail_estimate(&self, r: f64) -> f64 {
        let m = self.max_index();
        if m < 4 {
            return 0.0;
        }
        let q = self.estimate_radius();
        if q >= r {
            return f64::INFINITY;
        }
        let last: f64 = ((3 * m / 4)..=m)
            .map(|n| self.coeff(n).norm() * r.powi(-(n as i32)))
            .fold(0.0, f64::max);
        last * (q / r) / (1.0 - q / r).max(1e-300)
    }
}

/// Falling factorial `x (x-1) ⋯ (x-p+1)`.
pub fn falling(x: i64, p: usize) -> f64 {
    (0..p).map(|i| (x - i as i64) as f64).product()
}

/// Rising factorial `x (x+1) ⋯ (x+p-1)`.
pub fn rising(x: i64, p: usize) -> f64 {
    (0..p).map(|i| (x + i as i64) as f64).product()
}

/// Binomial coefficient as `f64`.
pub fn binom(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Leibniz rule for jets: `(fg)_p = Σ C(p,i) f_i g_{p-i}`.
pub fn jet_product(
    f: &[CircleFunction],
    g: &[CircleFunction],
    order: usize,
) -> Vec<CircleFunction> {
    let n = f[0].n_modes();
    (0..=order)
        .map(|p| {
            let mut acc = CircleFunction::zeros(n);
            for i in 0..=p {
                if i < f.len() && p - i < g.len() {
                    acc = acc.add(&f[i].mul(&g[p - i]).scale(C64::new(binom(p, i), 0.0)));
                }
            }
            acc
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn sampling_roundtrip_and_product() {
        let f = CircleFunction::from_fn(32, |t| C64::from_polar(1.0, 3.0 * t) + c(0.5, 0.0));
        assert!((f.coeff(3) - c(1.0, 0.0)).norm() < 1e-14);
        assert!((f.coeff(0) - c(0.5, 0.0)).norm() < 1e-14);
        let g = f.mul(&f);
        assert!((g.coeff(6) - c(1.0, 0.0)).norm() < 1e-14);
        assert!((g.coeff(3) - c(1.0, 0.0)).norm() < 1e-14);
        assert!((f.eval(0.3) - (C64::from_polar(1.0, 0.9) + 0.5)).norm() < 1e-14);
    }

    #[test]
    fn herglotz_of_cosine() {
        let f = CircleFunction::from_fn(16, |t| c(1.0 + t.cos(), 0.0));
        let h = herglotz(&f).unwrap();
        // H(w) = 1 + 1/w
        assert!((h.coeff(0) - c(1.0, 0.0)).norm() < 1e-14);
        assert!((h.coeff(1) - c(1.0, 0.0)).norm() < 1e-14);
        let b = h.boundary(16).re();
        assert!(b.sub(&f).l2_norm() < 1e-14);
    }

    #[test]
    fn laurent_radial_derivatives() {
        // g = 2 + 3/w; r^1 g = 2r + 3 e^{-iθ}; ∂_r → 2
        let g = LaurentSeries::new(vec![c(0.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)], 0.0);
        let d = g.radial_derivs(1, 2, 8);
        assert!((d[1].coeff(0) - c(2.0, 0.0)).norm() < 1e-15);
        assert!(d[1].coeff(-1).norm() < 1e-15);
        assert!(d[2].l2_norm() < 1e-15);
        let w = c(1.3, 0.4);
        assert!((g.eval(w).unwrap() - (2.0 + 3.0 / w)).norm() < 1e-14);
        assert!((g.eval_deriv(w).unwrap() + 3.0 / (w * w)).norm() < 1e-14);
        assert!(LaurentSeries::new(g.coeffs.clone(), 1.0)
            .eval(c(0.5, 0.0))
            .is_err());
    }

    #[test]
    fn toeplitz_solve_meets_membership() {
        let u = CircleFunction::from_fn(32, |t| {
            c(0.2 * t.cos(), 0.1 * t.sin()) + C64::from_polar(0.1, 2.0 * t)
        });
        let v =
            CircleFunction::from_fn(32, |t| C64::from_polar(0.3, t)).project(Subspace::Analytic);
        let f = CircleFunction::from_fn(32, |t| C64::from_polar(1.0, -t) + C64::from_polar(0.5, t));
        let sol = toeplitz_solve(&u, &v, &f, c(0.7, 0.0)).unwrap();
        let d = toeplitz_defect(&u, &v, &f, &sol);
        assert!(d.exterior < 1e-13 && d.analytic < 1e-12, "{d:?}");
        assert!((sol.coeff(0) - c(0.7, 0.0) * (-v.coeff(0).conj()).exp()).norm() < 1e-12);
    }
}

//! Laplace-method operators.
//!
//! For a weight vanishing to second order on 𝕋, the radial integral
//! `∫ g(r) e^{-ωR(r)} dr` near `r = 1` expands as
//! `√(2π/(ωR₂)) Σ_k ω^{-k} L_k[g]`, with
//!
//! ```text
//! L_k[g] = Σ_{ν=k}^{3k} (-1)^{ν-k} 2^{-ν} / (ν! (ν-k)! R₂^ν) ∂_r^{2ν}(W^{ν-k} g)|_{r=1},
//! W = R - ½(r-1)² R₂.
//! ```
//!
//! Because `W` vanishes to third order, `L_k` only consumes derivatives of
//! `g` up to order `2k`; it is stored as `L_k[g] = Σ_{j<=2k} D_j g_j` with
//! coefficient functions `D_j` on 𝕋.

use crate::circlefield::{binom, jet_product, rising, CircleFunction, LaurentSeries};
pub use crate::droplet::RadialJet;
use crate::error::{Error, Result};
use num_complex::Complex64 as C64;

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// A function holomorphic on an exterior disk, viewed through its radial
/// derivatives on 𝕋.
#[derive(Clone, Debug)]
pub struct RadialModeFunction {
    pub series: LaurentSeries,
}

impl RadialModeFunction {
    pub fn new(series: LaurentSeries) -> Self {
        RadialModeFunction { series }
    }

    /// `∂_r^p [r^a B(re^{iθ})]|_{r=1}` for `p = 0..=pmax`.
    pub fn derivs(&self, a: i64, pmax: usize, n_modes: usize) -> Vec<CircleFunction> {
        self.series.radial_derivs(a, pmax, n_modes)
    }
}

/// Smallest jet order that `L_k` needs (`W` enters through `W_p`, `p <= 2k+2`).
pub fn required_jet_order(k: usize) -> usize {
    if k == 0 {
        2
    } else {
        2 * k + 2
    }
}

/// `L_k` on 𝕋 in the form `Σ_j D_j ∂_r^j`.
#[derive(Clone, Debug)]
pub struct LkOperator {
    pub k: usize,
    /// `D_0, …, D_{2k}`.
    pub d: Vec<CircleFunction>,
}

impl LkOperator {
    pub fn new(jet: &RadialJet, k: usize) -> Result<Self> {
        let need = required_jet_order(k);
        if jet.order() < need {
            return Err(Error::InsufficientJet {
                need,
                have: jet.order(),
            });
        }
        let n = jet.n_modes();
        let r2 = jet.second();
        let min2 = r2
            .samples(2 * n)
            .iter()
            .map(|c| c.re)
            .fold(f64::INFINITY, f64::min);
        if !(min2 > 0.0) {
            return Err(Error::NonPositive(format!("∂_r²R on 𝕋 (min {min2:.3e})")));
        }
        let inv = r2.map(|z| re(1.0 / z.re)).re();
        let top = 6 * k;
        let zero = CircleFunction::zeros(n);
        // W jet truncated to the entries that can contribute.
        let w: Vec<CircleFunction> = (0..=top.max(2))
            .map(|p| {
                if p < 3 || p > jet.order().min(need) {
                    zero.clone()
                } else {
                    jet.entries[p].clone()
                }
            })
            .collect();
        let mut d = vec![CircleFunction::zeros(n); 2 * k + 1];
        let one: Vec<CircleFunction> = (0..=top)
            .map(|p| {
                if p == 0 {
                    CircleFunction::constant(n, re(1.0))
                } else {
                    zero.clone()
                }
            })
            .collect();
        let mut wpow = one; // W^{ν-k}
        let mut inv_pow = CircleFunction::constant(n, re(1.0));
        for _ in 0..k {
            inv_pow = inv_pow.mul(&inv);
        }
        for nu in k..=3 * k {
            let e = nu - k;
            if e > 0 {
                wpow = jet_product(&wpow, &w, top);
            }
            let sign = if e % 2 == 0 { 1.0 } else { -1.0 };
            let b = sign * 2f64.powi(-(nu as i32)) / (factorial(nu) * factorial(e));
            let coeff = inv_pow.scale(re(b));
            for (j, dj) in d.iter_mut().enumerate() {
                if j > 2 * nu {
                    continue;
                }
                let s = 2 * nu - j;
                if s < 3 * e || s > top {
                    continue;
                }
                *dj = dj.add(&coeff.mul(&wpow[s]).scale(re(binom(2 * nu, j))));
            }
            inv_pow = inv_pow.mul(&inv);
        }
        Ok(LkOperator { k, d })
    }

    /// `L_k[g]` from the radial jet `g_0, …` of the argument (at least `2k+1`
    /// entries; higher entries are ignored).
    pub fn apply(&self, g: &[CircleFunction]) -> Result<CircleFunction> {
        if g.len() < 2 * self.k + 1 {
            return Err(Error::InsufficientJet {
                need: 2 * self.k,
                have: g.len().saturating_sub(1),
            });
        }
        let mut acc = CircleFunction::zeros(self.d[0].n_modes().max(g[0].n_modes()));
        for (dj, gj) in self.d.iter().zip(g) {
            acc = acc.add(&dj.mul(gj));
        }
        Ok(acc)
    }
}

/// `L_k[g]` on 𝕋 for a single argument jet.
pub fn apply_lk(jet: &RadialJet, g: &[CircleFunction], k: usize) -> Result<CircleFunction> {
    LkOperator::new(jet, k)?.apply(g)
}

/// The mode-wise operator `M_k`: mode `-l` of `M_k[B]` is
/// `∫ e^{ilθ} (R₂)^{-1/2} L_k[r^{1-l} B(re^{iθ})] ds`.
#[derive(Clone, Debug)]
pub struct MkOperator {
    pub lk: LkOperator,
    /// `(R₂)^{-1/2}` on 𝕋.
    pub inv_sqrt: CircleFunction,
}

impl MkOperator {
    pub fn new(jet: &RadialJet, k: usize) -> Result<Self> {
        let lk = LkOperator::new(jet, k)?;
        let inv_sqrt = jet.second().map(|z| re(1.0 / z.re.sqrt())).re();
        Ok(MkOperator { lk, inv_sqrt })
    }

    /// `M_k[B]` as a circle function (all modes).
    pub fn apply(&self, b: &RadialModeFunction) -> CircleFunction {
        let k = self.lk.k;
        let n = self.lk.d[0].n_modes();
        let bi = b.derivs(0, 2 * k, n);
        // E_{j,i} = (R₂)^{-1/2} D_j ∂_r^i B
        let sd: Vec<CircleFunction> = self.lk.d.iter().map(|d| d.mul(&self.inv_sqrt)).collect();
        let mut out = CircleFunction::zeros(n);
        for (j, sdj) in sd.iter().enumerate() {
            for (i, bii) in bi.iter().enumerate().take(j + 1) {
                let e = sdj.mul(bii);
                let p = j - i;
                let c = binom(j, i) * if p % 2 == 0 { 1.0 } else { -1.0 };
                // mode n carries l = -n
                out = out.add(&e.mode_multiply(|mode| re(c * rising(-mode - 1, p))));
            }
        }
        out
    }

    /// The single coefficient `∫ e^{ilθ}(R₂)^{-1/2} L_k[r^{1-l}B] ds`.
    pub fn mode(&self, b: &RadialModeFunction, l: i64) -> C64 {
        self.apply(b).coeff(-l)
    }
}

/// `∫ e^{ilθ} (R₂)^{-1/2} L_k[r^{1-l}B] ds`, for `l >= 1`.
pub fn apply_mk_mode(jet: &RadialJet, b: &RadialModeFunction, k: usize, l: i64) -> Result<C64> {
    if l < 1 {
        return Err(Error::Domain(format!(
            "mode index l = {l} must be at least 1"
        )));
    }
    Ok(MkOperator::new(jet, k)?.mode(b, l))
}

/// A real function of one variable, known through its Taylor data.
pub trait Profile1D {
    /// Derivatives `f(x0), f'(x0), …, f^{(order)}(x0)`.
    fn derivatives(&self, x0: f64, order: usize) -> Vec<f64>;
    fn eval(&self, x: f64) -> f64 {
        self.derivatives(x, 0)[0]
    }
}

/// A polynomial `Σ c_i x^i`.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial1D {
    pub coeffs: Vec<f64>,
}

impl Polynomial1D {
    /// `Σ a_i (x - x0)^i` expanded in powers of `x`.
    pub fn from_shifted(x0: f64, a: &[f64]) -> Self {
        let mut coeffs = vec![0.0; a.len()];
        for (i, ai) in a.iter().enumerate() {
            for j in 0..=i {
                coeffs[j] += ai * binom(i, j) * (-x0).powi((i - j) as i32);
            }
        }
        Polynomial1D { coeffs }
    }
}

impl Profile1D for Polynomial1D {
    fn derivatives(&self, x0: f64, order: usize) -> Vec<f64> {
        (0..=order)
            .map(|p| {
                self.coeffs
                    .iter()
                    .enumerate()
                    .skip(p)
                    .map(|(i, c)| {
                        c * (0..p).map(|s| (i - s) as f64).product::<f64>()
                            * x0.powi((i - p) as i32)
                    })
                    .sum()
            })
            .collect()
    }
}

/// Result of [`laplace_expand`].
#[derive(Clone, Debug)]
pub struct LaplaceExpansion {
    /// `√(2π/(ωV₂)) Σ_{j<k} ω^{-j} L_j u(x0)`.
    pub value: f64,
    /// Magnitude of the first omitted term.
    pub error_estimate: f64,
    /// `L_0 u, …, L_k u` at `x0`.
    pub terms: Vec<f64>,
}

fn taylor_mul(a: &[f64], b: &[f64], len: usize) -> Vec<f64> {
    (0..len)
        .map(|p| {
            (0..=p)
                .filter(|&i| i < a.len() && p - i < b.len())
                .map(|i| a[i] * b[p - i])
                .sum()
        })
        .collect()
}

/// `L_j u(x0)` for the one-dimensional Laplace integral `∫u e^{-ωV}`.
pub fn laplace_term(v: &dyn Profile1D, u: &dyn Profile1D, x0: f64, j: usize) -> Result<f64> {
    let top = 6 * j;
    let dv = v.derivatives(x0, top.max(2));
    let v2 = dv[2];
    if !(v2 > 0.0) {
        return Err(Error::NonPositive(format!("V''(x0) = {v2}")));
    }
    // Taylor coefficients
    let mut w: Vec<f64> = dv
        .iter()
        .enumerate()
        .map(|(p, d)| d / factorial(p))
        .collect();
    w[0] = 0.0;
    w[1] = 0.0;
    w[2] = 0.0;
    let ut: Vec<f64> = u
        .derivatives(x0, top)
        .iter()
        .enumerate()
        .map(|(p, d)| d / factorial(p))
        .collect();
    let mut acc = 0.0;
    let mut prod = ut.clone(); // W^{ν-j} u
    for nu in j..=3 * j {
        let e = nu - j;
        if e > 0 {
            prod = taylor_mul(&prod, &w, top + 1);
        }
        let sign = if e % 2 == 0 { 1.0 } else { -1.0 };
        let d2nu = prod.get(2 * nu).copied().unwrap_or(0.0) * factorial(2 * nu);
        acc += sign * 2f64.powi(-(nu as i32)) / (factorial(nu) * factorial(e) * v2.powi(nu as i32))
            * d2nu;
    }
    Ok(acc)
}

/// Laplace-method approximation of `∫ u e^{-ωV} dx` around the
/// non-degenerate minimum `x0` (with `V(x0) = V'(x0) = 0`), truncated after
/// `k` terms.
pub fn laplace_expand(
    v: &dyn Profile1D,
    u: &dyn Profile1D,
    x0: f64,
    omega: f64,
    k: usize,
) -> Result<LaplaceExpansion> {
    let dv = v.derivatives(x0, 2);
    if dv[0].abs() > 1e-12 || dv[1].abs() > 1e-12 {
        return Err(Error::Domain(format!(
            "x0 = {x0} is not a critical zero of V (V = {:.2e}, V' = {:.2e})",
            dv[0], dv[1]
        )));
    }
    if !(dv[2] > 0.0) {
        return Err(Error::NonPositive(format!("V''(x0) = {}", dv[2])));
    }
    let terms: Vec<f64> = (0..=k)
        .map(|j| laplace_term(v, u, x0, j))
        .collect::<Result<_>>()?;
    let pre = (2.0 * std::f64::consts::PI / (omega * dv[2])).sqrt();
    let value = pre
        * (0..k)
            .map(|j| terms[j] * omega.powi(-(j as i32)))
            .sum::<f64>();
    let error_estimate = pre * terms[k].abs() * omega.powi(-(k as i32));
    Ok(LaplaceExpansion {
        value,
        error_estimate,
        terms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::droplet::{Droplet, DropletOptions};
    use crate::potential::Potential;

    fn constant_jet(vals: &[f64], n: usize) -> RadialJet {
        RadialJet {
            entries: vals
                .iter()
                .map(|v| CircleFunction::constant(n, re(*v)))
                .collect(),
            tau: 1.0,
        }
    }

    #[test]
    fn l0_is_restriction_and_l1_quadratic_weight() {
        let jet = constant_jet(&[0.0, 0.0, 3.0, 0.0, 0.0], 16);
        let g: Vec<CircleFunction> = (0..3)
            .map(|p| CircleFunction::constant(16, re(1.0 + p as f64)))
            .collect();
        assert!((apply_lk(&jet, &g, 0).unwrap().coeff(0) - re(1.0)).norm() < 1e-15);
        // W ≡ 0: L_1 g = g''/(2R₂)
        assert!((apply_lk(&jet, &g, 1).unwrap().coeff(0) - re(3.0 / 6.0)).norm() < 1e-15);
    }

    #[test]
    fn ginibre_l1_of_r() {
        // R = τ((r²-1)/2 - log r): R₂ = 2τ, R₃ = -2τ, R₄ = 6τ; L₁[r] = 1/(6τ)
        let tau = 0.7;
        let jet = constant_jet(&[0.0, 0.0, 2.0 * tau, -2.0 * tau, 6.0 * tau], 8);
        let g = vec![
            CircleFunction::constant(8, re(1.0)),
            CircleFunction::constant(8, re(1.0)),
            CircleFunction::constant(8, re(0.0)),
        ];
        let v = apply_lk(&jet, &g, 1).unwrap().coeff(0).re;
        assert!((v - 1.0 / (6.0 * tau)).abs() < 1e-14, "{v}");
        assert!(matches!(
            apply_lk(&constant_jet(&[0.0, 0.0, 1.0], 8), &g, 1),
            Err(Error::InsufficientJet { .. })
        ));
    }

    #[test]
    fn mk_mode_matches_direct_application() {
        let q = Potential::hele_shaw(0.5).with_poly(2, C64::new(0.12, 0.03));
        let d = Droplet::compute(
            &q,
            0.9,
            &DropletOptions {
                n_modes: 64,
                map_modes: 24,
                ..Default::default()
            },
        )
        .unwrap();
        let jet = d.modified_weight(8).unwrap();
        let b = RadialModeFunction::new(LaurentSeries::new(
            vec![
                re(0.0),
                C64::new(0.3, 0.1),
                C64::new(-0.2, 0.4),
                C64::new(0.05, -0.1),
            ],
            0.0,
        ));
        for k in 0..=2 {
            let mk = MkOperator::new(&jet, k).unwrap();
            let all = mk.apply(&b);
            for l in 1..4i64 {
                let arg = b.derivs(1 - l, 2 * k, 64);
                let direct = apply_lk(&jet, &arg, k).unwrap().mul(&mk.inv_sqrt).coeff(-l);
                let via = all.coeff(-l);
                assert!(
                    (direct - via).norm() <= 1e-10 * (1.0 + direct.norm()),
                    "k={k} l={l}: {direct} vs {via}"
                );
                assert!((apply_mk_mode(&jet, &b, k, l).unwrap() - via).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn gaussian_profile_is_exact() {
        let v = Polynomial1D::from_shifted(1.0, &[0.0, 0.0, 0.5]);
        let u = Polynomial1D { coeffs: vec![1.0] };
        for omega in [3.0, 50.0] {
            let e = laplace_expand(&v, &u, 1.0, omega, 1).unwrap();
            assert!((e.value - (2.0 * std::f64::consts::PI / omega).sqrt()).abs() < 1e-14);
        }
        let bad = Polynomial1D::from_shifted(1.0, &[0.0, 0.0, -0.5]);
        assert!(laplace_expand(&bad, &u, 1.0, 3.0, 1).is_err());
    }

    #[test]
    fn cubic_term_matches_moment_computation() {
        // V = y²/2 + a y³, u = 1: L_1 = -(1/8)·4!·a·... computed by hand:
        // ν=2: (-1)·2^{-2}/(2!·1!)·∂⁴(a y³)=0; ν=3: 2^{-3}/(3!2!)·∂⁶(a²y⁶)=a²·720/96
        let a = 0.2;
        let v = Polynomial1D::from_shifted(0.0, &[0.0, 0.0, 0.5, a]);
        let u = Polynomial1D { coeffs: vec![1.0] };
        let t1 = laplace_term(&v, &u, 0.0, 1).unwrap();
        assert!((t1 - a * a * 720.0 / 96.0).abs() < 1e-14, "{t1}");
    }
}

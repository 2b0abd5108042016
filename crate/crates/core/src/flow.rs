//! Leading-order orthogonal foliation flow.
//!
//! For the modified weight `R` (vanishing to second order on 𝕋) the maps
//! `ψ_t = ζ e^{g_t}` send 𝕋 onto the level curves `R = t²/2`, with `t > 0`
//! inside 𝕋.  Writing `R̂ = (r - 1)√(R/(r - 1)²)` and
//! `μ = log(2w∂_w R̂)`, the level-curve condition differentiated in `t` is a
//! Toeplitz kernel equation whose solution gives
//!
//! `∂_t g_t = -2^{-1/2} e^{conj(ν⁺) - ν⁻} H[e^{-2 Re ν⁺}]`,  `ν = μ∘ψ_t`,
//!
//! (`ν⁺`/`ν⁻` the parts with modes `≥ 0` / `< 0`, `H` the exterior Herglotz
//! transform).  Its integral form is solved by Picard iteration on a
//! Chebyshev–Lobatto grid in `t`.

use crate::circlefield::{herglotz, CircleFunction, LaurentSeries, Subspace};
use crate::droplet::{polygon_is_simple, Droplet, RadialJet};
use crate::error::{Error, Result};
use crate::expansion::QuasiPolynomial;
use crate::quad::{composite_gl, ChebGrid};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};

/// `δ_m = m^{-1/2} log m`, the half-width of the flow window.
pub fn delta_m(m: f64) -> f64 {
    m.ln() / m.sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowOptions {
    /// Chebyshev–Lobatto nodes in `t` (odd, so that `t = 0` is a node).
    pub n_t: usize,
    /// Fourier modes for `g_t`.
    pub n_modes: usize,
    /// Picard stopping tolerance on `sup |g^{[j+1]} - g^{[j]}|`.
    pub tol: f64,
    pub max_iter: usize,
    /// Jet order of the Taylor branch used for `|r - 1| < taylor_band`.
    pub jet_order: usize,
    pub taylor_band: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            n_t: 33,
            n_modes: 128,
            tol: 1e-11,
            max_iter: 50,
            jet_order: 8,
            taylor_band: 1e-2,
        }
    }
}

/// The family `ψ_{0,t}`, `|t| ≤ δ`, sampled on a Chebyshev grid.
#[derive(Clone, Debug)]
pub struct FlowFamily {
    pub droplet: Droplet,
    pub grid: ChebGrid,
    /// `g_t = log(ψ_t/ζ)` at the grid nodes.
    pub g: Vec<CircleFunction>,
    /// `∂_t g_t` at the grid nodes.
    pub f: Vec<CircleFunction>,
    pub psi01: LaurentSeries,
    /// `sup_𝕋 |R∘ψ_t - t²/2|` per node.
    pub level_residual: Vec<f64>,
    /// Picard increments, one per iteration.
    pub increments: Vec<f64>,
    pub n_modes: usize,
    jet: RadialJet,
    taylor_band: f64,
}

/// `(R̂, 2w∂_w R̂)` at `w` near 𝕋.
fn sqrt_weight(d: &Droplet, jet: &RadialJet, band: f64, w: C64) -> Result<(f64, C64)> {
    let r = w.norm();
    let s = r - 1.0;
    if s.abs() >= band {
        let rv = d.modified_weight_at(w)?;
        if !(rv > 0.0) {
            return Err(Error::Geometry(format!(
                "R({w}) = {rv:.3e} is not positive off 𝕋"
            )));
        }
        let rh = s.signum() * rv.sqrt();
        let dw = d.modified_weight_dw(w)?;
        return Ok((rh, w * dw / rh));
    }
    // R̃ = R/(r-1)² = Σ_{p≥2} a_p(θ) s^{p-2}/p!
    let th = w.arg();
    let (mut rt, mut rt_s, mut rt_th) = (0.0, 0.0, 0.0);
    let mut fact = 2.0;
    for p in 2..=jet.order() {
        if p > 2 {
            fact *= p as f64;
        }
        let a = jet.entries[p].eval(th).re;
        let a_th = jet.entries[p].eval_dtheta(th).re;
        rt += a * s.powi(p as i32 - 2) / fact;
        rt_th += a_th * s.powi(p as i32 - 2) / fact;
        if p > 2 {
            rt_s += a * (p - 2) as f64 * s.powi(p as i32 - 3) / fact;
        }
    }
    if !(rt > 0.0) {
        return Err(Error::NonPositive(format!("R/(r-1)² at {w}")));
    }
    let q = rt.sqrt();
    let rh = s * q;
    let d_r = q + s * rt_s / (2.0 * q);
    let d_th = s * rt_th / (2.0 * q);
    Ok((rh, C64::new(r * d_r, -d_th)))
}

/// `ψ̂_{0,1} = -ζ H[(4ΔR)^{-1/2}]` (on 𝕋, `4ΔR = ∂_r²R`).
pub fn psi01(jet: &RadialJet) -> Result<LaurentSeries> {
    let data = jet.second().map(|x| C64::new(x.re.powf(-0.5), 0.0));
    let h = herglotz(&data)?;
    let max = h.max_index();
    // ζ·Σ b_n ζ^{-n}: b'_n = b_{n+1}
    let coeffs: Vec<C64> = (-1..max).map(|n| -h.coeff(n + 1)).collect();
    Ok(LaurentSeries::new(coeffs, 0.0))
}

impl FlowFamily {
    fn len(&self) -> usize {
        2 * self.n_modes
    }

    /// Samples of `ψ_t` on the `2N`-point grid of 𝕋 from `g_t`.
    fn boundary_samples(g: &CircleFunction) -> Vec<C64> {
        let len = 2 * g.n_modes();
        g.samples(len)
            .into_iter()
            .enumerate()
            .map(|(j, gv)| C64::from_polar(1.0, 2.0 * PI * j as f64 / len as f64) * gv.exp())
            .collect()
    }

    /// `∂_t g` for a given `g_t` (one evaluation of the flow equation).
    fn flow_rhs(
        d: &Droplet,
        jet: &RadialJet,
        band: f64,
        g: &CircleFunction,
    ) -> Result<CircleFunction> {
        let n = g.n_modes();
        let ws = Self::boundary_samples(g);
        let mu = ws
            .iter()
            .map(|&w| {
                let (_, dd) = sqrt_weight(d, jet, band, w)?;
                if !(dd.re > 0.0) {
                    return Err(Error::Geometry(format!(
                        "level curve left the regime where 2w∂R̂ > 0 at {w}"
                    )));
                }
                Ok(dd.ln())
            })
            .collect::<Result<Vec<C64>>>()?;
        let nu = CircleFunction::from_samples(n, &mu);
        let plus = nu.project(Subspace::Analytic);
        let minus = nu.project(Subspace::ExteriorZero);
        let weight = plus.map(|v| C64::new((-2.0 * v.re).exp(), 0.0)).re();
        let h = herglotz(&weight)?.boundary(n);
        let len = 2 * n;
        let ps = plus.samples(len);
        let ms = minus.samples(len);
        let hs = h.samples(len);
        let out: Vec<C64> = (0..len)
            .map(|j| -(ps[j].conj() - ms[j]).exp() * hs[j] / SQRT_2)
            .collect();
        Ok(CircleFunction::from_samples(n, &out).project(Subspace::Exterior))
    }

    /// Solves for the family on `[-δ, δ]` by Picard iteration.
    pub fn solve(d: &Droplet, half_width: f64, opts: &FlowOptions) -> Result<Self> {
        if opts.n_t < 3 || opts.n_t % 2 == 0 {
            return Err(Error::Domain(format!(
                "n_t = {} must be odd and ≥ 3",
                opts.n_t
            )));
        }
        if !(half_width > 0.0) {
            return Err(Error::Domain("flow half-width must be positive".into()));
        }
        let mut jet = d.modified_weight(opts.jet_order)?;
        for e in jet.entries.iter_mut() {
            *e = e.resized(opts.n_modes);
        }
        let grid = ChebGrid::new(opts.n_t, half_width);
        let n = opts.n_modes;
        let nt = opts.n_t;
        let mut g = vec![CircleFunction::zeros(n); nt];
        let mut f = vec![CircleFunction::zeros(n); nt];
        let mut increments = Vec::new();
        let mut converged = false;
        for _ in 0..opts.max_iter {
            f = g
                .par_iter()
                .map(|gi| Self::flow_rhs(d, &jet, opts.taylor_band, gi))
                .collect::<Result<Vec<_>>>()?;
            let mut next = Vec::with_capacity(nt);
            let mut inc = 0.0f64;
            for i in 0..nt {
                let mut acc = CircleFunction::zeros(n);
                for (j, fj) in f.iter().enumerate() {
                    acc.add_assign_scaled(fj, C64::new(grid.integ[i][j], 0.0));
                }
                inc = inc.max(acc.sub(&g[i]).sup_norm());
                next.push(acc);
            }
            g = next;
            increments.push(inc);
            if inc <= opts.tol {
                converged = true;
                break;
            }
            let k = increments.len();
            if k >= 4
                && increments[k - 1] > increments[k - 2]
                && increments[k - 2] > increments[k - 3]
            {
                break;
            }
        }
        if !converged {
            return Err(Error::NonConvergence {
                stage: "flow",
                iterations: increments.len(),
                residual: *increments.last().unwrap_or(&f64::NAN),
            });
        }
        // the final right-hand side belongs to the converged iterate
        f = g
            .par_iter()
            .map(|gi| Self::flow_rhs(d, &jet, opts.taylor_band, gi))
            .collect::<Result<Vec<_>>>()?;
        let mut fam = FlowFamily {
            droplet: d.clone(),
            grid,
            g,
            f,
            psi01: psi01(&jet)?,
            level_residual: Vec::new(),
            increments,
            n_modes: n,
            jet,
            taylor_band: opts.taylor_band,
        };
        fam.level_residual = (0..nt)
            .map(|i| {
                let t = fam.grid.nodes[i];
                let ws = Self::boundary_samples(&fam.g[i]);
                let mut worst = 0.0f64;
                for w in ws {
                    worst = worst.max((d.modified_weight_at(w)? - 0.5 * t * t).abs());
                }
                Ok(worst)
            })
            .collect::<Result<Vec<f64>>>()?;
        fam.check_geometry()?;
        Ok(fam)
    }

    /// Each curve is simple and the curves move inward as `t` grows.
    fn check_geometry(&self) -> Result<()> {
        let nt = self.g.len();
        let samples: Vec<Vec<C64>> = self.g.iter().map(Self::boundary_samples).collect();
        for (i, s) in samples.iter().enumerate() {
            if !polygon_is_simple(s) {
                return Err(Error::Geometry(format!(
                    "level curve at t = {:.4} is not simple",
                    self.grid.nodes[i]
                )));
            }
        }
        // nodes run from +δ down to -δ, so |ψ| must increase along the index
        for j in 0..self.len() {
            for i in 1..nt {
                if samples[i][j].norm() <= samples[i - 1][j].norm() {
                    return Err(Error::Geometry(
                        "image domains do not increase with t".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn half_width(&self) -> f64 {
        self.grid.half_width
    }

    fn interp(&self, t: f64) -> Result<(CircleFunction, CircleFunction)> {
        if t.abs() > self.half_width() * (1.0 + 1e-12) {
            return Err(Error::Range(format!(
                "t = {t} outside the flow window ±{}",
                self.half_width()
            )));
        }
        let wts = self.grid.interp_weights(t);
        let mut g = CircleFunction::zeros(self.n_modes);
        let mut f = CircleFunction::zeros(self.n_modes);
        for (j, &c) in wts.iter().enumerate() {
            g.add_assign_scaled(&self.g[j], C64::new(c, 0.0));
            f.add_assign_scaled(&self.f[j], C64::new(c, 0.0));
        }
        Ok((g, f))
    }

    /// `ψ_t` as a Laurent series.
    pub fn psi_series(&self, t: f64) -> Result<LaurentSeries> {
        let (g, _) = self.interp(t)?;
        let eg = g.map(|v| v.exp()).project(Subspace::Exterior);
        let coeffs: Vec<C64> = (0..=eg.half()).map(|i| eg.coeff(-i)).collect();
        let mut s = LaurentSeries::new(coeffs, 0.0);
        s.rho = s.estimate_radius();
        Ok(s)
    }

    /// `ψ_t(e^{iθ})`.
    pub fn psi_at(&self, t: f64, theta: f64) -> Result<C64> {
        let (g, _) = self.interp(t)?;
        Ok(C64::from_polar(1.0, theta) * g.eval(theta).exp())
    }

    /// Points of the curve `ψ_t(𝕋)`.
    pub fn curve(&self, t: f64, n: usize) -> Result<Vec<C64>> {
        let (g, _) = self.interp(t)?;
        Ok((0..n)
            .map(|j| {
                let th = 2.0 * PI * j as f64 / n as f64;
                C64::from_polar(1.0, th) * g.eval(th).exp()
            })
            .collect())
    }

    /// `(1 - t) J_Ψ((1 - t)ζ) = -|e^{g}|² Re{∂_t g · conj(1 + ζ g')}` on the
    /// `2N` grid, together with the curve samples.
    pub fn jacobian_samples(&self, t: f64) -> Result<(Vec<C64>, Vec<f64>)> {
        let (g, f) = self.interp(t)?;
        let len = self.len();
        let zg = g.mode_multiply(|k| C64::new(k as f64, 0.0));
        let gs = g.samples(len);
        let fs = f.samples(len);
        let zs = zg.samples(len);
        let mut pts = Vec::with_capacity(len);
        let mut jac = Vec::with_capacity(len);
        for j in 0..len {
            let zeta = C64::from_polar(1.0, 2.0 * PI * j as f64 / len as f64);
            let eg = gs[j].exp();
            pts.push(zeta * eg);
            jac.push(-eg.norm_sqr() * (fs[j] * (C64::new(1.0, 0.0) + zs[j]).conj()).re);
        }
        Ok((pts, jac))
    }

    /// `(2w∂_w R̂)∘ψ_t` at one point: exposed for consistency checks.
    pub fn level_gradient(&self, w: C64) -> Result<C64> {
        Ok(sqrt_weight(&self.droplet, &self.jet, self.taylor_band, w)?.1)
    }
}

fn check_same_droplet(q: &QuasiPolynomial, fam: &FlowFamily) -> Result<()> {
    if (q.droplet.tau - fam.droplet.tau).abs() > 1e-12 {
        return Err(Error::Domain(format!(
            "expansion at τ = {} used with a flow family at τ = {}",
            q.droplet.tau, fam.droplet.tau
        )));
    }
    Ok(())
}

/// Integrand `√m |f∘ψ_t|² e^{-2mR∘ψ_t} (1-t) J_Ψ` on the `2N` grid.
fn flow_density(q: &QuasiPolynomial, fam: &FlowFamily, t: f64) -> Result<Vec<f64>> {
    let (pts, jac) = fam.jacobian_samples(t)?;
    let m = q.m;
    pts.iter()
        .zip(&jac)
        .map(|(&w, &j)| {
            let a = q.amplitude(w)?;
            let r = q.droplet.modified_weight_at(w)?;
            Ok(m.sqrt() * a.norm_sqr() * (-2.0 * m * r).exp() * j)
        })
        .collect()
}

/// `√m |f∘ψ_t|² e^{-2mR∘ψ_t}(1-t)J_Ψ - (4π)^{-1/2} √m e^{-mt²}` on 𝕋.
pub fn flow_residual(q: &QuasiPolynomial, fam: &FlowFamily, t: f64) -> Result<CircleFunction> {
    check_same_droplet(q, fam)?;
    let m = q.m;
    let target = m.sqrt() * (-m * t * t).exp() / (4.0 * PI).sqrt();
    let s: Vec<C64> = flow_density(q, fam, t)?
        .into_iter()
        .map(|v| C64::new(v - target, 0.0))
        .collect();
    Ok(CircleFunction::from_samples(fam.n_modes, &s))
}

/// `sup_{t ∈ ts} sup_𝕋 |flow_residual|`.
pub fn flow_residual_sup(q: &QuasiPolynomial, fam: &FlowFamily, ts: &[f64]) -> Result<f64> {
    let v = ts
        .par_iter()
        .map(|&t| Ok(flow_residual(q, fam, t)?.sup_norm()))
        .collect::<Result<Vec<f64>>>()?;
    Ok(v.into_iter().fold(0.0, f64::max))
}

/// `2∫_{-δ}^{δ}∫_𝕋 √m |f∘ψ_t|² e^{-2mR∘ψ_t}(1-t)J_Ψ ds dt` with a composite
/// Gauss–Legendre rule in `t`.
pub fn foliation_integral_with(
    q: &QuasiPolynomial,
    fam: &FlowFamily,
    panels: usize,
    order: usize,
) -> Result<f64> {
    check_same_droplet(q, fam)?;
    let d = fam.half_width();
    let (ts, ws) = composite_gl(-d, d, panels, order);
    let vals = ts
        .par_iter()
        .map(|&t| {
            let v = flow_density(q, fam, t)?;
            Ok(v.iter().sum::<f64>() / v.len() as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(2.0 * vals.iter().zip(&ws).map(|(v, w)| v * w).sum::<f64>())
}

pub fn foliation_integral(q: &QuasiPolynomial, fam: &FlowFamily) -> Result<f64> {
    foliation_integral_with(q, fam, 24, 16)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::droplet::DropletOptions;
    use crate::potential::Potential;

    fn ginibre_radius(t: f64) -> f64 {
        // r²/2 - log r - ½ = t²/2, inner branch for t > 0
        let mut r = 1.0 - t / SQRT_2;
        for _ in 0..60 {
            let f = 0.5 * r * r - r.ln() - 0.5 - 0.5 * t * t;
            let df = r - 1.0 / r;
            if df.abs() < 1e-300 {
                break;
            }
            r -= f / df;
        }
        r
    }

    #[test]
    fn ginibre_level_maps_are_dilations() {
        let d = Droplet::compute(&Potential::ginibre(), 1.0, &DropletOptions::default()).unwrap();
        let fam = FlowFamily::solve(&d, 0.3, &FlowOptions::default()).unwrap();
        assert!(
            fam.level_residual.iter().all(|&r| r < 1e-8),
            "{:?}",
            fam.level_residual
        );
        for &t in &[0.0, 0.05, -0.1, 0.2, -0.3] {
            let s = fam.psi_series(t).unwrap();
            let r = if t == 0.0 { 1.0 } else { ginibre_radius(t) };
            assert!(
                (s.coeff(-1).re - r).abs() < 1e-9,
                "t={t}: {} vs {r}",
                s.coeff(-1)
            );
            assert!(s.coeff(0).norm() < 1e-10 && s.coeff(1).norm() < 1e-10);
        }
    }

    #[test]
    fn first_flow_coefficient() {
        let p = Potential::hele_shaw(0.5).with_poly(2, C64::new(0.1, 0.0));
        let d = Droplet::compute(&p, 1.0, &DropletOptions::default()).unwrap();
        let fam = FlowFamily::solve(&d, 0.1, &FlowOptions::default()).unwrap();
        let h = 1e-3;
        for k in 0..8 {
            let th = 2.0 * PI * k as f64 / 8.0;
            let fd = (fam.psi_at(h, th).unwrap() - fam.psi_at(-h, th).unwrap()) / (2.0 * h);
            let zeta = C64::from_polar(1.0, th);
            let p1 = fam.psi01.eval(zeta).unwrap();
            assert!((fd - p1).norm() < 1e-4, "{fd} {p1}");
            // Re(ζ̄ ψ̂_{0,1}) = -(4ΔR)^{-1/2}
            let lap4 = fam.jet.second().eval(th).re;
            assert!(((zeta.conj() * p1).re + lap4.powf(-0.5)).abs() < 1e-10);
        }
        assert!(
            fam.level_residual.iter().all(|&r| r < 1e-8),
            "{:?}",
            fam.level_residual
        );
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let p = Potential::hele_shaw(0.5).with_poly(2, C64::new(0.1, 0.0));
        let d = Droplet::compute(&p, 1.0, &DropletOptions::default()).unwrap();
        let fam = FlowFamily::solve(&d, 0.1, &FlowOptions::default()).unwrap();
        // Ψ(z) = ψ_{1-|z|}(z/|z|) as a map of the plane
        let big_psi = |x: f64, y: f64| -> C64 {
            let z = C64::new(x, y);
            fam.psi_at(1.0 - z.norm(), z.arg()).unwrap()
        };
        for &t in &[0.05, -0.04] {
            let (_, jac) = fam.jacobian_samples(t).unwrap();
            let len = jac.len();
            for j in (0..len).step_by(len / 8) {
                let th = 2.0 * PI * j as f64 / len as f64;
                let z = C64::from_polar(1.0 - t, th);
                let h = 1e-5;
                let dx = (big_psi(z.re + h, z.im) - big_psi(z.re - h, z.im)) / (2.0 * h);
                let dy = (big_psi(z.re, z.im + h) - big_psi(z.re, z.im - h)) / (2.0 * h);
                let det = dx.re * dy.im - dx.im * dy.re;
                assert!(
                    (det * (1.0 - t) - jac[j]).abs() < 1e-6,
                    "{} {}",
                    det * (1.0 - t),
                    jac[j]
                );
            }
        }
    }

    #[test]
    fn ginibre_flow_identity_at_leading_order() {
        let d = Droplet::compute(&Potential::ginibre(), 1.0, &DropletOptions::default()).unwrap();
        let m = 128.0;
        let fam = FlowFamily::solve(&d, delta_m(m), &FlowOptions::default()).unwrap();
        let q =
            QuasiPolynomial::build(&Potential::ginibre(), 128, m, 0, &DropletOptions::default())
                .unwrap();
        let r0 = flow_residual(&q, &fam, 0.0).unwrap().sup_norm();
        assert!(r0 < 1.0 / m, "{r0}");
        let a = foliation_integral(&q, &fam).unwrap();
        assert!((a - 1.0).abs() < 3.0 * m.powf(-1.0 / 3.0), "{a}");
        let b = foliation_integral_with(&q, &fam, 31, 16).unwrap();
        assert!((a - b).abs() < 1e-10, "{a} {b}");
    }
}

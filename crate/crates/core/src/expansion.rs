//! The coefficient recursion for the asymptotic expansion of orthogonal
//! polynomials, and evaluation of the resulting quasipolynomials.
//!
//! Given the radial jet of the modified weight `R_τ`:
//!
//! * `H_R` is the outer function with `Re H_R = ¼ log(4ΔR_τ)` on 𝕋;
//! * `B_0 = (4π)^{-1/4} e^{H_R}`, `c_0 = (4π)^{-1/4}`;
//! * for `j >= 1`, `F_j = Σ_{k=1}^{j} 2^{-k} M_k[B_{j-k}]`,
//!   `c_j = -½(4π)^{1/4} Σ_{(i,k,l)} ∫ (4ΔR)^{-1/2} 2^{-k} L_k[r B_i B̄_l] ds`
//!   over `i, l < j`, `i + k + l = j`, and
//!   `B_j = c_j e^{H_R} - e^{H_R} P₋,₀[e^{H̄_R} F_j]`.
//!
//! The factors `2^{-k}` come from expanding the radial Laplace integrals
//! against `e^{-2mR}` in powers of `(2m)^{-1}` while the quasipolynomial is
//! expanded in powers of `m^{-1}`.
//!
//! The quasipolynomial is `F(z) = m^{1/4} φ'(z) φ(z)^n e^{m𝒬(φ(z))} f(φ(z))`
//! with `f = Σ_j m^{-j} B_j`, i.e. `m^{1/4}` times the isometry that carries
//! `L²(e^{-2mR}dA)` on the exterior disk to `L²(e^{-2mQ}dA)`.

use crate::circlefield::{jet_product, toeplitz_solve, CircleFunction, LaurentSeries, Subspace};
use crate::droplet::{Droplet, RadialJet};
use crate::error::{Error, Result};
use crate::laplace::{required_jet_order, LkOperator, MkOperator, RadialModeFunction};
use crate::quad;
use num_complex::Complex64 as C64;
use serde::Serialize;
use std::f64::consts::PI;

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Which constant-factor convention the quasipolynomial uses.
pub const NORMALIZATION: &str = "m^{1/4}·Λ";

/// Output of the coefficient recursion.
#[derive(Clone, Debug)]
pub struct ExpansionCoefficients {
    pub kappa: usize,
    pub tau: f64,
    pub h_r: LaurentSeries,
    pub b: Vec<LaurentSeries>,
    pub c: Vec<f64>,
    /// Imaginary parts discarded when forming the real constants `c_j`.
    pub c_imag_residual: Vec<f64>,
    /// Negative-mode mass of `(4ΔR)^{-1/2} B_j + F_j` (must vanish).
    pub hardy_defect: Vec<f64>,
    pub normalization: &'static str,
    pub n_modes: usize,
}

/// `H_R`: outer function with `Re H_R = ¼ log(4ΔR)` on 𝕋, real at ∞.
pub fn compute_hr(jet: &RadialJet) -> Result<LaurentSeries> {
    let logmod = jet.second().map(|z| {
        if z.re > 0.0 {
            re(0.25 * z.re.ln())
        } else {
            re(f64::NAN)
        }
    });
    if logmod.modes().any(|(_, c)| !c.re.is_finite()) {
        return Err(Error::NonPositive("4ΔR on the unit circle".into()));
    }
    crate::circlefield::outer_function(&logmod.re())
}

/// `B_0 = (4π)^{-1/4} e^{H_R}`.
pub fn compute_b0(h_r: &LaurentSeries, n_modes: usize) -> LaurentSeries {
    let e = h_r
        .boundary(n_modes)
        .map(|z| z.exp())
        .project(Subspace::Exterior);
    let mut b = e.scale(re((4.0 * PI).powf(-0.25))).to_laurent(0.0);
    b.rho = b.estimate_radius();
    b
}

/// `F_j = Σ_{k=1}^{j} 2^{-k} M_k[B_{j-k}]`.
pub fn compute_fj(b: &[LaurentSeries], mk: &[MkOperator], j: usize) -> CircleFunction {
    let n = mk[0].inv_sqrt.n_modes();
    let mut f = CircleFunction::zeros(n);
    for k in 1..=j {
        let term = mk[k].apply(&RadialModeFunction::new(b[j - k].clone()));
        f = f.add(&term.scale(re(2f64.powi(-(k as i32)))));
    }
    f
}

/// `B_j = c_j e^{H_R} - e^{H_R} P₋,₀[e^{H̄_R} F_j]`.
pub fn compute_bj(h_r: &LaurentSeries, fj: &CircleFunction, cj: f64) -> Result<LaurentSeries> {
    let n = fj.n_modes();
    let v = h_r.boundary(n).conj().scale(re(-1.0));
    let sol = toeplitz_solve(&v, &v, fj, re(cj))?;
    let mut b = sol.to_laurent(0.0);
    b.rho = b.estimate_radius();
    Ok(b)
}

/// The real constant `c_j` and the discarded imaginary part.
pub fn compute_cj(
    b: &[LaurentSeries],
    lk: &[LkOperator],
    inv_sqrt: &CircleFunction,
    j: usize,
) -> Result<(f64, f64)> {
    if j == 0 {
        return Ok(((4.0 * PI).powf(-0.25), 0.0));
    }
    let n = inv_sqrt.n_modes();
    let mut total = C64::new(0.0, 0.0);
    for i in 0..j {
        for l in 0..j {
            if i + l > j {
                continue;
            }
            let k = j - i - l;
            let rb = b[i].radial_derivs(1, 2 * k, n);
            let bl: Vec<CircleFunction> = b[l]
                .radial_derivs(0, 2 * k, n)
                .iter()
                .map(|f| f.conj())
                .collect();
            let g = jet_product(&rb, &bl, 2 * k);
            let lg = lk[k].apply(&g)?;
            total += lg.mul(inv_sqrt).mean() * 2f64.powi(-(k as i32));
        }
    }
    let c = -0.5 * (4.0 * PI).powf(0.25) * total;
    Ok((c.re, c.im))
}

/// Runs the recursion up to precision `κ` on the droplet's modified weight.
pub fn expand(d: &Droplet, kappa: usize) -> Result<ExpansionCoefficients> {
    d.check_cutoff_domain()?;
    let order = required_jet_order(kappa).max(4);
    let jet = d.modified_weight(order)?;
    expand_from_jet(&jet, kappa)
}

/// The recursion from a precomputed radial jet.
pub fn expand_from_jet(jet: &RadialJet, kappa: usize) -> Result<ExpansionCoefficients> {
    let n = jet.n_modes();
    let h_r = compute_hr(jet)?;
    let mk: Vec<MkOperator> = (0..=kappa)
        .map(|k| MkOperator::new(jet, k))
        .collect::<Result<_>>()?;
    let lk: Vec<LkOperator> = mk.iter().map(|m| m.lk.clone()).collect();
    let inv_sqrt = mk[0].inv_sqrt.clone();
    let mut b = vec![compute_b0(&h_r, n)];
    let mut c = vec![(4.0 * PI).powf(-0.25)];
    let mut c_imag = vec![0.0];
    let mut hardy = vec![b[0]
        .boundary(n)
        .mul(&inv_sqrt)
        .project(Subspace::ExteriorZero)
        .l2_norm()];
    for j in 1..=kappa {
        let fj = compute_fj(&b, &mk, j);
        let (cj, cj_im) = compute_cj(&b, &lk, &inv_sqrt, j)?;
        let bj = compute_bj(&h_r, &fj, cj)?;
        let defect = bj
            .boundary(n)
            .mul(&inv_sqrt)
            .add(&fj)
            .project(Subspace::ExteriorZero)
            .l2_norm();
        b.push(bj);
        c.push(cj);
        c_imag.push(cj_im);
        hardy.push(defect);
    }
    Ok(ExpansionCoefficients {
        kappa,
        tau: jet.tau,
        h_r,
        b,
        c,
        c_imag_residual: c_imag,
        hardy_defect: hardy,
        normalization: NORMALIZATION,
        n_modes: n,
    })
}

/// `log(ψ'(w)/ρ)` as a Laurent series with value 0 at ∞.
pub fn log_derivative_series(d: &Droplet) -> Result<LaurentSeries> {
    let n = d.n_modes;
    let rho = d.conformal_radius();
    let len = 2 * n;
    let mut samples = Vec::with_capacity(len);
    let mut prev_arg = 0.0;
    for j in 0..len {
        let w = C64::from_polar(1.0, 2.0 * PI * j as f64 / len as f64);
        let v = d.psi.eval_deriv(w)? / rho;
        // continuous branch along the circle
        let mut a = v.arg();
        while a - prev_arg > PI {
            a -= 2.0 * PI;
        }
        while a - prev_arg < -PI {
            a += 2.0 * PI;
        }
        prev_arg = a;
        samples.push(C64::new(v.norm().ln(), a));
    }
    let f = CircleFunction::from_samples(n, &samples);
    if f.project(Subspace::AnalyticZero).l2_norm() > 1e-8 * (1.0 + f.l2_norm()) {
        return Err(Error::Geometry(
            "log ψ' is not holomorphic outside the disk (winding)".into(),
        ));
    }
    let mut s = f.project(Subspace::Exterior).to_laurent(0.0);
    s.rho = s.estimate_radius().max(d.psi.rho);
    Ok(s)
}

/// `F^{⟨κ⟩}_{n,m}` attached to a droplet at `τ = n/m`.
#[derive(Clone, Debug)]
pub struct QuasiPolynomial {
    pub droplet: Droplet,
    pub coeffs: ExpansionCoefficients,
    pub n: usize,
    pub m: f64,
    log_dpsi: LaurentSeries,
}

impl QuasiPolynomial {
    pub fn new(droplet: Droplet, coeffs: ExpansionCoefficients, n: usize, m: f64) -> Result<Self> {
        let tau = n as f64 / m;
        if (tau - droplet.tau).abs() > 1e-12 * tau.max(1.0) {
            return Err(Error::Domain(format!(
                "n/m = {tau} does not match droplet τ = {}",
                droplet.tau
            )));
        }
        let log_dpsi = log_derivative_series(&droplet)?;
        Ok(QuasiPolynomial {
            droplet,
            coeffs,
            n,
            m,
            log_dpsi,
        })
    }

    /// Builds droplet and coefficients for `(n, m)` from a potential.
    pub fn build(
        potential: &crate::potential::Potential,
        n: usize,
        m: f64,
        kappa: usize,
        opts: &crate::droplet::DropletOptions,
    ) -> Result<Self> {
        let d = Droplet::compute(potential, n as f64 / m, opts)?;
        let c = expand(&d, kappa)?;
        Self::new(d, c, n, m)
    }

    /// `f(w) = Σ_j m^{-j} B_j(w)`.
    pub fn amplitude(&self, w: C64) -> Result<C64> {
        let mut acc = C64::new(0.0, 0.0);
        for (j, b) in self.coeffs.b.iter().enumerate() {
            acc += b.eval(w)? * self.m.powi(-(j as i32));
        }
        Ok(acc)
    }

    /// `log ψ'(w)` on the continuous branch real at ∞.
    pub fn log_dpsi(&self, w: C64) -> Result<C64> {
        Ok(self.droplet.conformal_radius().ln() + self.log_dpsi.eval(w)?)
    }

    /// `log F(ψ(w))` (any branch of the imaginary part).
    pub fn log_value_at_w(&self, w: C64) -> Result<C64> {
        if w.norm() <= self.droplet.cutoffs.outer {
            return Err(Error::Domain(format!(
                "|φ(z)| = {:.4} lies in the cut-off region (ρ₀″ = {})",
                w.norm(),
                self.droplet.cutoffs.outer
            )));
        }
        let f = self.amplitude(w)?;
        Ok(0.25 * self.m.ln() - self.log_dpsi(w)?
            + self.n as f64 * w.ln()
            + self.droplet.qcal.eval(w)? * self.m
            + f.ln())
    }

    /// `F^{⟨κ⟩}_{n,m}(z)`.
    pub fn eval(&self, z: C64) -> Result<C64> {
        let w = self.droplet.exterior_map(z)?;
        let l = self.log_value_at_w(w)?;
        if l.re > 700.0 {
            return Err(Error::Range(format!("|F(z)| = e^{:.1} overflows", l.re)));
        }
        Ok(l.exp())
    }

    /// `log F(z)`, avoiding overflow.
    pub fn eval_log(&self, z: C64) -> Result<C64> {
        let w = self.droplet.exterior_map(z)?;
        self.log_value_at_w(w)
    }

    /// `|F(ψ(w))|² e^{-2mQ(ψ(w))} = √m |ψ'(w)|^{-2} |f(w)|² e^{-2mR(w)}`.
    pub fn weighted_density_at_w(&self, w: C64) -> Result<f64> {
        let f = self.amplitude(w)?;
        let r = self.droplet.modified_weight_at(w)?;
        let ld = self.log_dpsi(w)?;
        Ok(self.m.sqrt() * f.norm_sqr() * (-2.0 * ld.re - 2.0 * self.m * r).exp())
    }

    /// Pulled-back coefficient `𝓑_j(z) = φ'(z)^{1/2} B_j(φ(z))`.
    pub fn pulled_back(&self, j: usize, z: C64) -> Result<C64> {
        let w = self.droplet.exterior_map(z)?;
        Ok((-0.5 * self.log_dpsi(w)?).exp() * self.coeffs.b[j].eval(w)?)
    }

    /// Largest `| |𝓑_0|² / (π^{-1/2} √ΔQ) - 1 |` on the droplet boundary:
    /// both descriptions of the leading coefficient must agree.
    pub fn leading_consistency_defect(&self) -> Result<f64> {
        let mut worst = 0.0f64;
        for j in 0..64 {
            let th = 2.0 * PI * j as f64 / 64.0;
            let w = C64::from_polar(1.0, th);
            let z = self.droplet.psi.eval(w)?;
            let b0 = (-0.5 * self.log_dpsi(w)?).exp() * self.coeffs.b[0].eval(w)?;
            let target = PI.powf(-0.5) * self.droplet.potential.laplacian(z)?.sqrt();
            worst = worst.max((b0.norm_sqr() / target - 1.0).abs());
        }
        Ok(worst)
    }

    fn radial_extent(&self) -> f64 {
        // e^{-2mR} is negligible once 2mR > 80; R grows at least like ΔR (r-1)².
        let min_r2 = self
            .coeffs
            .h_r
            .boundary(64)
            .re()
            .samples(128)
            .iter()
            .map(|c| (4.0 * c.re).exp())
            .fold(f64::INFINITY, f64::min);
        1.0 + (80.0 / (self.m * min_r2)).sqrt() * 1.5 + 0.05
    }

    /// `2√m ∫∫ χ² |f|² e^{-2mR} r dr ds` with the radial cut-off bump `χ`.
    pub fn norm_squared(&self, panels: usize, angles: usize) -> Result<f64> {
        let cut = self.droplet.cutoffs;
        let (rs, ws) = quad::composite_gl(cut.inner, self.radial_extent(), panels, 16);
        let mut total = 0.0;
        for (&r, &wr) in rs.iter().zip(&ws) {
            let chi = cut.bump(r);
            if chi == 0.0 {
                continue;
            }
            let mut ang = 0.0;
            for a in 0..angles {
                let w = C64::from_polar(r, 2.0 * PI * a as f64 / angles as f64);
                let f = self.amplitude(w)?;
                ang += f.norm_sqr() * (-2.0 * self.m * self.droplet.modified_weight_at(w)?).exp();
            }
            total += wr * chi * chi * ang / angles as f64 * r;
        }
        Ok(2.0 * self.m.sqrt() * total)
    }

    /// `⟨χ F, z^k⟩ = ∫ χ F z̄^k e^{-2mQ} dA`, computed on the exterior disk.
    pub fn inner_with_monomial(&self, k: usize, panels: usize, angles: usize) -> Result<C64> {
        let cut = self.droplet.cutoffs;
        let (rs, ws) = quad::composite_gl(cut.inner, self.radial_extent(), panels, 16);
        let mut total = C64::new(0.0, 0.0);
        for (&r, &wr) in rs.iter().zip(&ws) {
            let chi = cut.bump(r);
            if chi == 0.0 {
                continue;
            }
            let mut ang = C64::new(0.0, 0.0);
            for a in 0..angles {
                let w = C64::from_polar(r, 2.0 * PI * a as f64 / angles as f64);
                let z = self.droplet.psi.eval(w)?;
                let q = self.droplet.potential.eval(z)?;
                // F z̄^k e^{-2mQ} |ψ'|², assembled in the log domain
                let lf = self.log_value_at_w_unchecked(w)?;
                let ld = self.log_dpsi(w)?;
                let l = lf + (k as f64) * z.conj().ln() - 2.0 * self.m * q + 2.0 * ld.re;
                ang += l.exp();
            }
            total += ang * (wr * chi * 2.0 * r / angles as f64);
        }
        Ok(total)
    }

    fn log_value_at_w_unchecked(&self, w: C64) -> Result<C64> {
        let f = self.amplitude(w)?;
        Ok(0.25 * self.m.ln() - self.log_dpsi(w)?
            + self.n as f64 * w.ln()
            + self.droplet.qcal.eval(w)? * self.m
            + f.ln())
    }
}

/// Serializable summary of the coefficients (Fourier data of `B_j`, `c_j`).
#[derive(Clone, Debug, Serialize)]
pub struct CoefficientPayload {
    pub kappa: usize,
    pub tau: f64,
    pub normalization: String,
    pub c: Vec<f64>,
    pub c_imag_residual: Vec<f64>,
    pub hardy_defect: Vec<f64>,
    /// `h_r[n] = [re, im]` of the coefficient of `w^{-n}` in `H_R`.
    pub h_r: Vec<[f64; 2]>,
    /// `b[j][n]`: coefficient of `w^{-n}` in `B_j`.
    pub b: Vec<Vec<[f64; 2]>>,
}

impl From<&ExpansionCoefficients> for CoefficientPayload {
    fn from(e: &ExpansionCoefficients) -> Self {
        let pack = |s: &LaurentSeries| {
            (0..=s.max_index())
                .map(|n| [s.coeff(n).re, s.coeff(n).im])
                .collect()
        };
        CoefficientPayload {
            kappa: e.kappa,
            tau: e.tau,
            normalization: e.normalization.to_string(),
            c: e.c.clone(),
            c_imag_residual: e.c_imag_residual.clone(),
            hardy_defect: e.hardy_defect.clone(),
            h_r: pack(&e.h_r),
            b: e.b.iter().map(pack).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::droplet::DropletOptions;
    use crate::potential::Potential;
    use statrs::function::gamma::ln_gamma;

    #[test]
    fn ginibre_coefficients() {
        let d = Droplet::compute(
            &Potential::ginibre(),
            0.5,
            &DropletOptions {
                n_modes: 32,
                ..Default::default()
            },
        )
        .unwrap();
        let e = expand(&d, 2).unwrap();
        // 4ΔR = 2τ = 1 → H_R = 0
        assert!(e.h_r.coeff(0).norm() < 1e-15);
        assert!((e.b[0].coeff(0).re - (4.0 * PI).powf(-0.25)).abs() < 1e-15);
        // c_1 = -c_0/(24τ)
        assert!((e.c[1] + e.c[0] / 12.0).abs() < 1e-14, "{}", e.c[1]);
        assert!(e.b[1].coeffs.iter().skip(2).all(|c| c.norm() < 1e-14));
        assert!(e.hardy_defect.iter().all(|&h| h < 1e-12));
        assert!(e.c_imag_residual.iter().all(|&h| h.abs() < 1e-15));
    }

    #[test]
    fn ginibre_quasipolynomial_against_exact() {
        let m = 64.0;
        let n = 64;
        let q = QuasiPolynomial::build(
            &Potential::ginibre(),
            n,
            m,
            1,
            &DropletOptions {
                n_modes: 32,
                ..Default::default()
            },
        )
        .unwrap();
        let z = C64::new(2.0, 0.0);
        let exact =
            0.5 * (n as f64 + 1.0) * m.ln() + n as f64 * z.re.ln() - 0.5 * ln_gamma(n as f64 + 1.0);
        let ratio = (q.eval_log(z).unwrap().re - exact).exp();
        assert!((ratio - 1.0).abs() < 1e-4, "{ratio}");
        assert!(q.leading_consistency_defect().unwrap() < 1e-12);
    }
}

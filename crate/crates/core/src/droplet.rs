//! Droplets `S_τ` of the potential: the exterior conformal map
//! `ψ_τ : 𝔻_e → ℂ \ S_τ`, the holomorphic function `𝒬_τ` with
//! `Re 𝒬_τ = Q∘ψ_τ` on 𝕋, and the modified weight
//! `R_τ(w) = Q(ψ_τ(w)) - Re 𝒬_τ(w) - τ log|w|` together with its radial
//! jet on the unit circle.
//!
//! Radial profiles have disk droplets in closed form. Hele-Shaw droplets are
//! found by Newton's method on the Fourier coefficients of `ψ_τ`: writing
//! `ψ(w) = ρw + Σ_{k>=0} u_k w^{-k}`, the boundary condition says that
//! `∂Q(ψ)` restricted to 𝕋 has no modes `k >= 0` and mode `-1` equal to
//! `τ/(2ρ)`.

use crate::circlefield::{falling, CircleFunction, LaurentSeries};
use crate::error::{Error, Result};
use crate::potential::Potential;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

/// Numerical options for the Hele-Shaw solve.
#[derive(Clone, Debug)]
pub struct DropletOptions {
    /// Circle-function resolution used for `𝒬`, jets and checks.
    pub n_modes: usize,
    /// Number of negative Laurent modes of `ψ` solved for.
    pub map_modes: usize,
    /// Newton tolerance on the residual sup-norm.
    pub tol: f64,
    pub cutoffs: Cutoffs,
}

/// Radii `ρ₀ < ρ₀′ < ρ₀″ < 1` in the exterior disk: maps are trusted for
/// `|w| > ρ₀`, cut-off functions vanish below `ρ₀′` and equal one above `ρ₀″`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cutoffs {
    pub rho0: f64,
    pub inner: f64,
    pub outer: f64,
}

impl Default for Cutoffs {
    fn default() -> Self {
        Cutoffs {
            rho0: 0.65,
            inner: 0.75,
            outer: 0.85,
        }
    }
}

impl Cutoffs {
    pub fn validate(&self) -> Result<()> {
        if 0.0 < self.rho0 && self.rho0 < self.inner && self.inner < self.outer && self.outer < 1.0
        {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "cut-off radii must satisfy 0 < ρ₀ < ρ₀′ < ρ₀″ < 1, got {self:?}"
            )))
        }
    }

    /// Smooth radial bump: 0 for `|w| <= ρ₀′`, 1 for `|w| >= ρ₀″`.
    pub fn bump(&self, r: f64) -> f64 {
        crate::quad::smooth_step(r, self.inner, self.outer)
    }
}

impl Default for DropletOptions {
    fn default() -> Self {
        DropletOptions {
            n_modes: 256,
            map_modes: 64,
            tol: 1e-13,
            cutoffs: Cutoffs::default(),
        }
    }
}

/// The droplet at a fixed time `τ`.
#[derive(Clone, Debug)]
pub struct Droplet {
    pub potential: Potential,
    pub tau: f64,
    /// `ψ(w) = ρw + u_0 + Σ u_k w^{-k}`.
    pub psi: LaurentSeries,
    /// `𝒬`, holomorphic and bounded on the exterior disk.
    pub qcal: LaurentSeries,
    pub n_modes: usize,
    /// Sup-norm of the boundary-condition residual after the solve.
    pub residual: f64,
    pub cutoffs: Cutoffs,
}

/// Radial derivatives `R_p = ∂_r^p R_τ(re^{iθ})|_{r=1}`, `p = 0..=J`.
#[derive(Clone, Debug)]
pub struct RadialJet {
    pub entries: Vec<CircleFunction>,
    pub tau: f64,
}

impl RadialJet {
    pub fn order(&self) -> usize {
        self.entries.len() - 1
    }

    pub fn n_modes(&self) -> usize {
        self.entries[0].n_modes()
    }

    /// `R_2 = 4ΔR_τ` on 𝕋.
    pub fn second(&self) -> &CircleFunction {
        &self.entries[2]
    }

    /// Sup-norms of `R_0` and `R_1`, which vanish identically for an exact
    /// droplet.
    pub fn vanishing_defect(&self) -> (f64, f64) {
        (self.entries[0].sup_norm(), self.entries[1].sup_norm())
    }

    /// Largest relative Fourier tail over the stored entries.
    pub fn tail_ratio(&self) -> f64 {
        self.entries
            .iter()
            .skip(2)
            .map(|e| e.tail_ratio())
            .fold(0.0, f64::max)
    }
}

impl Droplet {
    /// Computes the droplet `S_τ`.
    pub fn compute(potential: &Potential, tau: f64, opts: &DropletOptions) -> Result<Self> {
        potential.validate()?;
        opts.cutoffs.validate()?;
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::Domain(format!("τ = {tau} must be positive")));
        }
        match potential {
            Potential::Radial(_) => {
                let (_, r) = potential.droplet_scale(tau)?;
                if potential.laplacian(C64::new(r, 0.0))? <= 0.0 {
                    return Err(Error::NonPositive(format!(
                        "ΔQ at the droplet edge r = {r}"
                    )));
                }
                let q_r = potential.q_deriv(r, 0);
                Ok(Droplet {
                    potential: potential.clone(),
                    tau,
                    psi: LaurentSeries::new(vec![C64::new(r, 0.0), C64::new(0.0, 0.0)], 0.0),
                    qcal: LaurentSeries::constant(C64::new(q_r, 0.0)),
                    n_modes: opts.n_modes,
                    residual: (r * potential.q_deriv(r, 1) - tau).abs(),
                    cutoffs: opts.cutoffs,
                })
            }
            Potential::HeleShaw(h) => {
                let solver = HeleShawSolver {
                    potential,
                    alpha: h.alpha,
                    modes: opts.map_modes,
                    grid: (4 * (opts.map_modes + 2)).next_power_of_two().max(256),
                };
                let x = solver.solve(tau, opts.tol)?;
                let psi = solver.series(&x);
                let residual = solver
                    .residual(&x, tau)
                    .map(|r| r.iter().fold(0.0f64, |a, b| a.max(b.abs())))?;
                let mut d = Droplet {
                    potential: potential.clone(),
                    tau,
                    psi,
                    qcal: LaurentSeries::constant(C64::new(0.0, 0.0)),
                    n_modes: opts.n_modes,
                    residual,
                    cutoffs: opts.cutoffs,
                };
                d.psi.rho = d.psi.estimate_radius();
                d.check_univalent()?;
                let qpsi = d.boundary_samples(|z| potential.eval(z).map(|q| C64::new(q, 0.0)))?;
                let qc = CircleFunction::from_samples(opts.n_modes, &qpsi);
                let mut qcal = crate::circlefield::herglotz(&qc)?;
                qcal.rho = qcal.estimate_radius().max(d.psi.rho);
                d.qcal = qcal;
                Ok(d)
            }
        }
    }

    /// Conformal radius `ρ = ψ'(∞)`.
    pub fn conformal_radius(&self) -> f64 {
        self.psi.coeff(-1).re
    }

    /// Radius below which `ψ` and `𝒬` are not trusted.
    pub fn domain_radius(&self) -> f64 {
        self.psi.rho.max(self.qcal.rho).max(self.cutoffs.rho0)
    }

    /// Fails when the Laurent data of `ψ` or `𝒬` do not converge on the
    /// whole region `|w| > ρ₀` that the expansion needs.
    pub fn check_cutoff_domain(&self) -> Result<()> {
        let r = self.psi.rho.max(self.qcal.rho);
        if r >= self.cutoffs.rho0 {
            return Err(Error::Resolution {
                what: format!("Laurent data converge only for |w| > {r:.4}, beyond the cut-off radius ρ₀ = {}", self.cutoffs.rho0),
                tail: r,
            });
        }
        Ok(())
    }

    /// `ψ_τ(w)` for `|w| > ρ₀`.
    pub fn inverse_map(&self, w: C64) -> Result<C64> {
        if w.norm() <= self.cutoffs.rho0 {
            return Err(Error::Domain(format!(
                "|w| = {:.4} inside the cut-off radius ρ₀",
                w.norm()
            )));
        }
        self.psi.eval(w)
    }

    /// The bounded holomorphic function `𝒬_τ` with `Re 𝒬_τ = Q∘ψ_τ` on 𝕋.
    pub fn holomorphic_potential(&self) -> &LaurentSeries {
        &self.qcal
    }

    /// `f(ψ(e^{iθ_j}))` on the `2N`-point grid.
    fn boundary_samples(&self, f: impl Fn(C64) -> Result<C64>) -> Result<Vec<C64>> {
        let len = 2 * self.n_modes;
        (0..len)
            .map(|j| {
                let w = C64::from_polar(1.0, 2.0 * PI * j as f64 / len as f64);
                f(self.psi.eval_unchecked(w))
            })
            .collect()
    }

    pub fn boundary_point(&self, theta: f64) -> C64 {
        self.psi.eval_unchecked(C64::from_polar(1.0, theta))
    }

    /// Outward unit normal at `ψ(e^{iθ})`.
    pub fn normal(&self, theta: f64) -> Result<C64> {
        let w = C64::from_polar(1.0, theta);
        let d = self.psi.eval_deriv(w)? * w;
        Ok(d / d.norm())
    }

    /// Area `ρ² - Σ k|u_k|²` (in units of π) enclosed by `ψ(𝕋)`.
    pub fn area_over_pi(&self) -> f64 {
        let rho = self.conformal_radius();
        rho * rho
            - (1..=self.psi.max_index())
                .map(|k| k as f64 * self.psi.coeff(k).norm_sqr())
                .sum::<f64>()
    }

    fn check_univalent(&self) -> Result<()> {
        let n = 512;
        let pts: Vec<C64> = (0..n)
            .map(|j| self.boundary_point(2.0 * PI * j as f64 / n as f64))
            .collect();
        for j in 0..n {
            let w = C64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64);
            if self.psi.eval_deriv(w)?.norm() < 1e-10 {
                return Err(Error::Geometry("ψ' vanishes on the unit circle".into()));
            }
        }
        if !polygon_is_simple(&pts) {
            return Err(Error::Geometry(
                "droplet boundary is not a simple curve".into(),
            ));
        }
        Ok(())
    }

    /// Whether `z` lies in the interior of the droplet.
    pub fn contains(&self, z: C64) -> bool {
        let n = 1024;
        let mut wind = 0.0;
        let mut prev = self.boundary_point(0.0) - z;
        for j in 1..=n {
            let cur = self.boundary_point(2.0 * PI * j as f64 / n as f64) - z;
            wind += (cur / prev).arg();
            prev = cur;
        }
        wind.abs() > PI
    }

    /// Exterior conformal map `φ = ψ⁻¹ : ℂ \ S_τ → 𝔻_e`.
    pub fn exterior_map(&self, z: C64) -> Result<C64> {
        let rho = self.conformal_radius();
        if self.potential.is_radial() {
            let w = z / rho;
            if w.norm() <= self.cutoffs.rho0 {
                return Err(Error::Domain(format!("{z} lies inside the cut-off region")));
            }
            return Ok(w);
        }
        let mut w = (z - self.psi.coeff(0)) / rho;
        if w.norm() < 1.0 {
            w = w / w.norm().max(1e-3);
        }
        // ψ is univalent on |w| > 1, so a root found there is the preimage;
        // otherwise Newton may have settled on a spurious root of the
        // continuation, and we restart from the nearest sample of a polar grid.
        let mut found = self.newton_inverse(z, w);
        if !matches!(found, Some(v) if v.norm() >= 1.0) {
            let seed = self.polar_seed(z);
            if let Some(v) = self.newton_inverse(z, seed) {
                found = Some(v);
            }
        }
        let Some(w) = found else {
            return Err(Error::NonConvergence {
                stage: "exterior map inversion",
                iterations: 100,
                residual: (self.psi.eval_unchecked(w) - z).norm(),
            });
        };
        if w.norm() <= self.cutoffs.rho0 {
            return Err(Error::Domain(format!("{z} lies inside the cut-off region")));
        }
        Ok(w)
    }

    fn polar_seed(&self, z: C64) -> C64 {
        let lo = self.domain_radius().max(self.cutoffs.rho0) + 0.02;
        let mut best = (f64::INFINITY, C64::new(1.0, 0.0));
        for r in [
            lo,
            0.5 * (lo + 1.0),
            0.95,
            1.0,
            1.05,
            1.2,
            1.5,
            2.0,
            3.0,
            5.0,
        ] {
            if r < lo {
                continue;
            }
            for k in 0..128 {
                let w = C64::from_polar(r, 2.0 * PI * k as f64 / 128.0);
                let e = (self.psi.eval_unchecked(w) - z).norm();
                if e < best.0 {
                    best = (e, w);
                }
            }
        }
        best.1
    }

    /// Damped Newton iteration for `ψ(w) = z`; `None` if it does not converge.
    fn newton_inverse(&self, z: C64, mut w: C64) -> Option<C64> {
        let rho = self.conformal_radius();
        for _ in 0..100 {
            let f = self.psi.eval_unchecked(w) - z;
            let d = self.psi.eval_deriv(w).unwrap_or(C64::new(rho, 0.0));
            let mut step = f / d;
            if step.norm() > 0.25 * w.norm() {
                step *= 0.25 * w.norm() / step.norm();
            }
            w -= step;
            if w.norm() <= self.domain_radius() {
                w = w / w.norm() * (self.domain_radius() + 1e-3).max(0.5);
            }
            if step.norm() < 1e-15 * w.norm() {
                break;
            }
        }
        let f = (self.psi.eval_unchecked(w) - z).norm();
        (f <= 1e-11 * (1.0 + z.norm())).then_some(w)
    }

    /// Obstacle function `Q̌_τ`: equals `Q` on the droplet and the harmonic
    /// continuation `Re 𝒬(φ) + τ log|φ|` outside.
    pub fn obstacle(&self, z: C64) -> Result<f64> {
        if self.contains(z) {
            return self.potential.eval(z);
        }
        let w = self.exterior_map(z)?;
        Ok(self.qcal.eval(w)?.re + self.tau * w.norm().ln())
    }

    /// Normal velocity of the boundary under growth in `τ`:
    /// `|φ'(z)| / (4ΔQ(z))` at a boundary point.
    pub fn boundary_speed(&self, theta: f64) -> Result<f64> {
        let w = C64::from_polar(1.0, theta);
        let z = self.psi.eval(w)?;
        let dphi = 1.0 / self.psi.eval_deriv(w)?.norm();
        Ok(dphi / (4.0 * self.potential.laplacian(z)?))
    }

    /// `R_τ(w)` evaluated pointwise.
    pub fn modified_weight_at(&self, w: C64) -> Result<f64> {
        if let Potential::Radial(_) = &self.potential {
            let r = self.conformal_radius();
            return Ok(self.potential.q_deriv(r * w.norm(), 0)
                - self.potential.q_deriv(r, 0)
                - self.tau * w.norm().ln());
        }
        let z = self.psi.eval(w)?;
        Ok(self.potential.eval(z)? - self.qcal.eval(w)?.re - self.tau * w.norm().ln())
    }

    /// `∂_w R_τ(w) = ∂Q(ψ)ψ' - ½𝒬' - τ/(2w)`.
    pub fn modified_weight_dw(&self, w: C64) -> Result<C64> {
        let z = self.psi.eval(w)?;
        let dpsi = self.psi.eval_deriv(w)?;
        Ok(self.potential.dz(z)? * dpsi - self.qcal.eval_deriv(w)? * 0.5 - self.tau / (2.0 * w))
    }

    /// The radial jet `(R_0, …, R_J)` on 𝕋.
    pub fn modified_weight(&self, order: usize) -> Result<RadialJet> {
        if order < 2 {
            return Err(Error::InsufficientJet {
                need: 2,
                have: order,
            });
        }
        let n = self.n_modes;
        let tau = self.tau;
        let log_term = |p: usize| -> f64 {
            if p == 0 {
                0.0
            } else {
                let f: f64 = (1..p).map(|i| i as f64).product();
                if (p - 1) % 2 == 0 {
                    f
                } else {
                    -f
                }
            }
        };
        let entries = match &self.potential {
            Potential::Radial(_) => {
                let r = self.conformal_radius();
                (0..=order)
                    .map(|p| {
                        let v = if p < 2 {
                            0.0
                        } else {
                            r.powi(p as i32) * self.potential.q_deriv(r, p) - tau * log_term(p)
                        };
                        CircleFunction::constant(n, C64::new(v, 0.0))
                    })
                    .collect()
            }
            Potential::HeleShaw(h) => {
                let dpsi = self.psi.radial_derivs(0, order, n);
                let dpsi_c: Vec<CircleFunction> = dpsi.iter().map(|d| d.conj()).collect();
                let abs2 = crate::circlefield::jet_product(&dpsi, &dpsi_c, order);
                // harmonic part through G = h'(ψ)ψ'
                let len = 2 * n;
                let g_samples: Vec<C64> = (0..len)
                    .map(|j| {
                        let w = C64::from_polar(1.0, 2.0 * PI * j as f64 / len as f64);
                        let z = self.psi.eval_unchecked(w);
                        self.potential.harmonic_dz(z) * self.psi.eval_deriv(w).unwrap_or_default()
                    })
                    .collect();
                let g = CircleFunction::from_samples(n, &g_samples).denoise(1e-15);
                let qd = self.qcal.radial_derivs(0, order, n);
                let mut out = Vec::with_capacity(order + 1);
                for p in 0..=order {
                    let harmonic = if p == 0 {
                        let s = self.boundary_samples(|z| {
                            Ok(C64::new(
                                self.potential.eval(z)? - h.alpha * z.norm_sqr(),
                                0.0,
                            ))
                        })?;
                        CircleFunction::from_samples(n, &s)
                    } else {
                        let mut x = CircleFunction::zeros(n);
                        for (k, c) in g.modes() {
                            if (k + 1).abs() <= x.half() {
                                x.set(k + 1, c * falling(k, p - 1));
                            }
                        }
                        x.re()
                    };
                    let total = abs2[p]
                        .scale(C64::new(h.alpha, 0.0))
                        .add(&harmonic)
                        .sub(&qd[p].re())
                        .sub(&CircleFunction::constant(
                            n,
                            C64::new(tau * log_term(p), 0.0),
                        ));
                    out.push(total.re());
                }
                out
            }
        };
        let jet = RadialJet { entries, tau };
        let min2 = jet
            .second()
            .samples(2 * n)
            .iter()
            .map(|c| c.re)
            .fold(f64::INFINITY, f64::min);
        if !(min2 > 0.0) {
            return Err(Error::NonPositive(format!(
                "ΔR on the unit circle (min {min2:.3e})"
            )));
        }
        Ok(jet)
    }
}

/// Whether the closed polygon through `pts` has no crossing edges.
pub(crate) fn polygon_is_simple(pts: &[C64]) -> bool {
    let n = pts.len();
    for i in 0..n {
        let (a, b) = (pts[i], pts[(i + 1) % n]);
        for j in (i + 2)..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (c, d) = (pts[j], pts[(j + 1) % n]);
            if segments_cross(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

fn segments_cross(a: C64, b: C64, c: C64, d: C64) -> bool {
    let orient = |p: C64, q: C64, r: C64| ((q - p).conj() * (r - p)).im;
    let d1 = orient(a, b, c);
    let d2 = orient(a, b, d);
    let d3 = orient(c, d, a);
    let d4 = orient(c, d, b);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

struct HeleShawSolver<'a> {
    potential: &'a Potential,
    alpha: f64,
    modes: usize,
    grid: usize,
}

impl HeleShawSolver<'_> {
    fn dim(&self) -> usize {
        2 * self.modes + 3
    }

    fn series(&self, x: &[f64]) -> LaurentSeries {
        let mut c = vec![C64::new(x[0], 0.0)];
        for k in 0..=self.modes {
            c.push(C64::new(x[1 + 2 * k], x[2 + 2 * k]));
        }
        LaurentSeries::new(c, 0.0)
    }

    /// Fourier coefficients (modes `-1..=M+1` and the tail) of `½h'(ψ)` on 𝕋.
    fn harmonic_modes(&self, x: &[f64]) -> Result<CircleFunction> {
        let psi = self.series(x);
        let s: Vec<C64> = (0..self.grid)
            .map(|j| {
                let w = C64::from_polar(1.0, 2.0 * PI * j as f64 / self.grid as f64);
                let z = psi.eval_unchecked(w);
                self.potential.harmonic_dz(z) * 0.5
            })
            .collect();
        if s.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Geometry("boundary passes through a pole".into()));
        }
        Ok(CircleFunction::from_samples(self.grid / 2, &s))
    }

    fn residual(&self, x: &[f64], tau: f64) -> Result<Vec<f64>> {
        let n = self.harmonic_modes(x)?;
        let mut r = Vec::with_capacity(self.dim());
        for k in 0..=self.modes {
            let u = C64::new(x[1 + 2 * k], x[2 + 2 * k]);
            let e = u.conj() * self.alpha + n.coeff(k as i64);
            r.push(e.re);
            r.push(e.im);
        }
        let rho = x[0];
        r.push(self.alpha * rho + n.coeff(-1).re - tau / (2.0 * rho));
        Ok(r)
    }

    fn newton(&self, mut x: Vec<f64>, tau: f64, tol: f64) -> Result<Vec<f64>> {
        let norm = |v: &[f64]| v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let mut r = self.residual(&x, tau)?;
        for _ in 0..40 {
            let rn = norm(&r);
            if rn < tol {
                return Ok(x);
            }
            let d = self.dim();
            let mut jac = DMatrix::<f64>::zeros(d, d);
            for j in 0..d {
                let h = 1e-7 * (1.0 + x[j].abs());
                let mut xp = x.clone();
                xp[j] += h;
                let mut xm = x.clone();
                xm[j] -= h;
                let rp = self.residual(&xp, tau)?;
                let rm = self.residual(&xm, tau)?;
                for i in 0..d {
                    jac[(i, j)] = (rp[i] - rm[i]) / (2.0 * h);
                }
            }
            let step = jac
                .lu()
                .solve(&DVector::from_vec(r.iter().map(|v| -v).collect()))
                .ok_or_else(|| Error::NonConvergence {
                    stage: "droplet Newton (singular Jacobian)",
                    iterations: 0,
                    residual: rn,
                })?;
            let mut lam = 1.0;
            loop {
                let xn: Vec<f64> = x
                    .iter()
                    .zip(step.iter())
                    .map(|(a, s)| a + lam * s)
                    .collect();
                if xn[0] > 0.0 {
                    if let Ok(rn_new) = self.residual(&xn, tau) {
                        if norm(&rn_new) < rn || lam < 1e-3 {
                            x = xn;
                            r = rn_new;
                            break;
                        }
                    }
                }
                lam *= 0.5;
                if lam < 1e-4 {
                    return Err(Error::NonConvergence {
                        stage: "droplet Newton line search",
                        iterations: 0,
                        residual: rn,
                    });
                }
            }
        }
        let rn = norm(&r);
        if rn < tol * 100.0 {
            Ok(x)
        } else {
            Err(Error::NonConvergence {
                stage: "droplet Newton",
                iterations: 40,
                residual: rn,
            })
        }
    }

    fn solve(&self, tau: f64, tol: f64) -> Result<Vec<f64>> {
        let center = self.potential.minimizer()?;
        let disk = |t: f64| {
            let mut x = vec![0.0; self.dim()];
            x[0] = (t / (2.0 * self.alpha)).sqrt();
            x[1] = center.re;
            x[2] = center.im;
            x
        };
        let mut t = tau / 16.0;
        let mut x = loop {
            match self.newton(disk(t), t, tol) {
                Ok(x) => break x,
                Err(e) => {
                    t *= 0.25;
                    if t < tau * 1e-6 {
                        return Err(e);
                    }
                }
            }
        };
        let mut dt = (tau - t) / 8.0;
        while t < tau {
            let next = (t + dt).min(tau);
            // linear extrapolation of the radius improves the start
            let mut guess = x.clone();
            guess[0] *= (next / t).sqrt();
            match self.newton(guess, next, tol) {
                Ok(xn) => {
                    x = xn;
                    t = next;
                    dt *= 1.5;
                }
                Err(e) => {
                    dt *= 0.5;
                    if dt < tau * 1e-5 {
                        return Err(e);
                    }
                }
            }
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ginibre_disk_and_jet() {
        let q = Potential::ginibre();
        let d = Droplet::compute(&q, 0.5, &DropletOptions::default()).unwrap();
        assert!((d.conformal_radius() - 0.5f64.sqrt()).abs() < 1e-12);
        let jet = d.modified_weight(5).unwrap();
        // R(w) = τ(|w|²-1)/2 - τ log|w|: R_2 = 2τ, R_3 = -2τ, R_4 = 6τ
        assert!((jet.entries[2].coeff(0).re - 1.0).abs() < 1e-12);
        assert!((jet.entries[3].coeff(0).re + 1.0).abs() < 1e-12);
        assert!((jet.entries[4].coeff(0).re - 3.0).abs() < 1e-12);
        let w = C64::new(1.3, 0.2);
        let exact = 0.5 * ((w.norm_sqr() - 1.0) / 2.0 - w.norm().ln());
        assert!((d.modified_weight_at(w).unwrap() - exact).abs() < 1e-14);
    }

    #[test]
    fn ellipse_matches_closed_form() {
        let a = 0.15;
        let q = Potential::hele_shaw(0.5).with_poly(2, C64::new(a, 0.0));
        let tau = 0.8;
        let d = Droplet::compute(&q, tau, &DropletOptions::default()).unwrap();
        let rho = (tau / (1.0 - 4.0 * a * a)).sqrt();
        assert!(
            (d.conformal_radius() - rho).abs() < 1e-11,
            "{}",
            d.conformal_radius()
        );
        assert!((d.psi.coeff(1) - C64::new(-2.0 * a * rho, 0.0)).norm() < 1e-11);
        assert!((d.area_over_pi() - tau).abs() < 1e-10);
        let jet = d.modified_weight(6).unwrap();
        let (v0, v1) = jet.vanishing_defect();
        assert!(v0 < 1e-11 && v1 < 1e-10, "{v0} {v1}");
        // pointwise weight agrees with its jet near the circle
        let h = 1e-3;
        let w = C64::from_polar(1.0 + h, 0.7);
        let series: f64 = (2..=6)
            .map(|p| {
                jet.entries[p].eval(0.7).re * h.powi(p as i32) / (1..=p).product::<usize>() as f64
            })
            .sum();
        assert!((d.modified_weight_at(w).unwrap() - series).abs() < 1e-15 + 1e-9 * series.abs());
    }

    #[test]
    fn log_pole_droplet_has_consistent_mass() {
        let q = Potential::hele_shaw(0.5).with_log_pole(-(0.5f64).sqrt(), C64::new(1.0, 0.0));
        let d = Droplet::compute(&q, 1.0, &DropletOptions::default()).unwrap();
        assert!(
            (d.area_over_pi() - 1.0).abs() < 1e-9,
            "{}",
            d.area_over_pi()
        );
        assert!(d.contains(C64::new(-0.5, 0.0)));
        assert!(!d.contains(C64::new(1.0, 0.0)));
        let z = C64::new(-3.0, 0.5);
        let w = d.exterior_map(z).unwrap();
        assert!((d.psi.eval(w).unwrap() - z).norm() < 1e-10);
        // the obstacle function is continuous across the boundary
        let b = d.boundary_point(1.1);
        let out = d.obstacle(b + d.normal(1.1).unwrap() * 1e-7).unwrap();
        assert!((out - q.eval(b).unwrap()).abs() < 1e-5);
    }

    #[test]
    fn inversion_avoids_spurious_interior_roots() {
        // next to the repelling pole the continuation of ψ inside 𝔻 also
        // reaches the boundary; the preimage must stay on 𝕋
        let q = Potential::hele_shaw(0.5).with_log_pole(-(0.5f64).sqrt(), C64::new(1.0, 0.0));
        let d = Droplet::compute(&q, 1.0, &DropletOptions::default()).unwrap();
        for k in 0..64 {
            let th = 2.0 * PI * k as f64 / 64.0;
            let w = d.exterior_map(d.boundary_point(th)).unwrap();
            assert!(
                (w - C64::from_polar(1.0, th)).norm() < 1e-9,
                "θ = {th}: {w}"
            );
        }
    }
}

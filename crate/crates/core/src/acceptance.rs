//! The acceptance suite: nine criteria, each with pinned tolerances, run as
//! independent checks against closed forms or the extended-precision oracle.
//!
//! A criterion whose computation fails reports red with the failing stage;
//! nothing is retried with looser settings.

use crate::circlefield::{toeplitz_solve, CircleFunction, Subspace};
use crate::droplet::{Droplet, DropletOptions};
use crate::error::{Error, Result};
use crate::expansion::QuasiPolynomial;
use crate::flow::{delta_m, flow_residual_sup, foliation_integral, FlowFamily, FlowOptions};
use crate::laplace::{laplace_expand, Polynomial1D};
use crate::oracle::{compute_moments, gram_schmidt, GinibreExact, QuadratureConfig};
use crate::potential::Potential;
use crate::quad::composite_gl;
use crate::universality::{compare_erf, real_grid, rescaled_density, GinibreKernel, OracleKernel};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use statrs::function::gamma::{gamma_lr, ln_gamma};
use std::f64::consts::PI;
use std::time::Instant;

/// Identifiers of every criterion, in reporting order.
pub const ALL: [&str; 9] = ["A1", "A2", "A3", "A4", "A5", "A6", "A7", "A8", "A9"];

/// One named measurement with the bound it was held to (if any).
#[derive(Clone, Debug, Serialize)]
pub struct Metric {
    pub name: String,
    pub value: f64,
    pub bound: Option<String>,
}

/// Verdict of a single criterion.
#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub id: String,
    pub title: String,
    pub pass: bool,
    pub detail: String,
    pub metrics: Vec<Metric>,
    pub seconds: f64,
}

impl Outcome {
    /// One-line report: `A3 PASS  erf universality ... | detail`.
    pub fn line(&self) -> String {
        format!(
            "{} {}  {} ({:.1} s) | {}",
            self.id,
            if self.pass { "PASS" } else { "FAIL" },
            self.title,
            self.seconds,
            self.detail
        )
    }
}

struct Sheet {
    metrics: Vec<Metric>,
    pass: bool,
    notes: Vec<String>,
}

impl Sheet {
    fn new() -> Self {
        Sheet {
            metrics: Vec::new(),
            pass: true,
            notes: Vec::new(),
        }
    }

    /// Records `value` and fails the sheet unless `ok`.
    fn gate(&mut self, name: impl Into<String>, value: f64, bound: impl Into<String>, ok: bool) {
        let name = name.into();
        let bound = bound.into();
        if !ok {
            self.pass = false;
            self.notes
                .push(format!("{name} = {value:.4e} violates {bound}"));
        }
        self.metrics.push(Metric {
            name,
            value,
            bound: Some(bound),
        });
    }

    /// Records an informational value that is not gated.
    fn info(&mut self, name: impl Into<String>, value: f64) {
        self.metrics.push(Metric {
            name: name.into(),
            value,
            bound: None,
        });
    }

    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }
}

fn title(id: &str) -> &'static str {
    match id {
        "A1" => "Ginibre exactness of the first-order quasipolynomial",
        "A2" => "oracle equivalence, perturbed potential",
        "A3" => "erf universality at the edge",
        "A4" => "Laplace-method rate",
        "A5" => "Hardy/Toeplitz identities",
        "A6" => "leading-order flow identity",
        "A7" => "quasipolynomial norm and orthogonality",
        "A8" => "boundary kinematics of Laplacian growth",
        "A9" => "boundary concentration",
        _ => "unknown criterion",
    }
}

/// Wall-clock limits (seconds) attached to some criteria.
pub fn runtime_budget(id: &str) -> Option<f64> {
    match id {
        "A1" => Some(30.0),
        "A2" => Some(300.0),
        "A3" => Some(120.0),
        _ => None,
    }
}

/// Runs one criterion by identifier.
pub fn run(id: &str) -> Outcome {
    let start = Instant::now();
    let res = match id {
        "A1" => a1(),
        "A2" => a2(),
        "A3" => a3(),
        "A4" => a4(),
        "A5" => a5(),
        "A6" => a6(),
        "A7" => a7(),
        "A8" => a8(),
        "A9" => a9(),
        _ => Err(Error::Domain(format!("unknown criterion {id}"))),
    };
    let seconds = start.elapsed().as_secs_f64();
    match res {
        Ok(mut sheet) => {
            if let Some(budget) = runtime_budget(id) {
                sheet.gate(
                    "runtime_seconds",
                    seconds,
                    format!("< {budget} s"),
                    seconds < budget,
                );
            }
            Outcome {
                id: id.into(),
                title: title(id).into(),
                pass: sheet.pass,
                detail: if sheet.notes.is_empty() {
                    "all gates met".into()
                } else {
                    sheet.notes.join("; ")
                },
                metrics: sheet.metrics,
                seconds,
            }
        }
        Err(e) => Outcome {
            id: id.into(),
            title: title(id).into(),
            pass: false,
            detail: format!("stage '{}' failed: {e}", e.stage()),
            metrics: Vec::new(),
            seconds,
        },
    }
}

/// Runs every criterion in order.
pub fn run_all() -> Vec<Outcome> {
    ALL.iter().map(|id| run(id)).collect()
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    num / den
}

fn ginibre_log_exact(m: f64, n: usize, z: C64) -> C64 {
    // log(m^{(n+1)/2} z^n / √n!)
    C64::new(
        0.5 * (n as f64 + 1.0) * m.ln() - 0.5 * ln_gamma(n as f64 + 1.0),
        0.0,
    ) + z.ln() * n as f64
}

fn a1() -> Result<Sheet> {
    let mut s = Sheet::new();
    let ms = [32usize, 64, 128];
    let mut errs = Vec::new();
    for &m in &ms {
        let mf = m as f64;
        let q =
            QuasiPolynomial::build(&Potential::ginibre(), m, mf, 1, &DropletOptions::default())?;
        let mut err = 0.0f64;
        for r in [1.5, 2.0, 3.0] {
            for a in 0..32 {
                let z = C64::from_polar(r, 2.0 * PI * a as f64 / 32.0 + 0.1);
                let ratio = (q.eval_log(z)? - ginibre_log_exact(mf, m, z)).exp();
                err = err.max((ratio - 1.0).norm());
            }
        }
        s.gate(
            format!("sup_rel_err[m={m}]"),
            err,
            format!("<= 5/m = {:.4e}", 5.0 / mf),
            err <= 5.0 / mf,
        );
        errs.push(err);
    }
    for i in 0..2 {
        let ratio = errs[i] / errs[i + 1];
        s.gate(
            format!("err_ratio[m={}/{}]", ms[i], ms[i + 1]),
            ratio,
            "in [1.6, 2.6]",
            (1.6..=2.6).contains(&ratio),
        );
    }
    let order = -loglog_slope(&ms.map(|m| m as f64), &errs);
    s.info("fitted_order", order);
    if !s.pass {
        s.note(format!(
            "observed convergence order {order:.2}: the first-order quasipolynomial carries B_0 + B_1/m, so its error falls by 2^(κ+1) = 4 per doubling"
        ));
    }
    Ok(s)
}

fn ellipse() -> Potential {
    Potential::hele_shaw(0.5).with_poly(2, C64::new(0.1, 0.0))
}

fn a2() -> Result<Sheet> {
    let mut s = Sheet::new();
    let p = ellipse();
    let m = 40usize;
    let mf = m as f64;
    let g = compute_moments(&p, mf, 40, &QuadratureConfig::default(), 150)?;
    s.info("oracle_self_estimate", g.self_estimate);
    let ops = gram_schmidt(&g, &p)?;
    s.info("oracle_gram_residual", ops.residual);
    for (kappa, tol) in [(0usize, 0.08), (1, 0.05)] {
        let mut worst = 0.0f64;
        for n in [36usize, 38, 40] {
            let q = QuasiPolynomial::build(&p, n, mf, kappa, &DropletOptions::default())?;
            let mut dev = 0.0f64;
            for a in 0..64 {
                let w = C64::from_polar(1.4, 2.0 * PI * a as f64 / 64.0);
                let z = q.droplet.psi.eval(w)?;
                let ratio = (q.eval_log(z)? - ops.eval(n, z).ln()).exp();
                dev = dev.max((ratio - 1.0).norm());
            }
            s.info(format!("rel_dev[kappa={kappa},n={n}]"), dev);
            worst = worst.max(dev);
        }
        s.gate(
            format!("sup_rel_dev[kappa={kappa}]"),
            worst,
            format!("<= {tol}"),
            worst <= tol,
        );
    }
    Ok(s)
}

fn a3() -> Result<Sheet> {
    let mut s = Sheet::new();
    let xi = real_grid(-3.0, 3.0, 121);
    let d = Droplet::compute(&Potential::ginibre(), 1.0, &DropletOptions::default())?;
    let z0 = C64::new(1.0, 0.0);
    let e200 = compare_erf(&rescaled_density(
        &GinibreKernel::new(200),
        &d,
        z0,
        &xi,
        1e-8,
    )?)
    .sup_error;
    let e800 = compare_erf(&rescaled_density(
        &GinibreKernel::new(800),
        &d,
        z0,
        &xi,
        1e-8,
    )?)
    .sup_error;
    s.gate("ginibre_sup_err[m=200]", e200, "<= 0.10", e200 <= 0.10);
    s.gate(
        "ginibre_sup_err[m=800]",
        e800,
        "< sup_err[m=200]",
        e800 < e200,
    );
    let p = ellipse();
    let m = 36usize;
    let g = compute_moments(&p, m as f64, m - 1, &QuadratureConfig::default(), 150)?;
    let kernel = OracleKernel::new(gram_schmidt(&g, &p)?, m)?;
    let de = Droplet::compute(&p, 1.0, &DropletOptions::default())?;
    let zb = de.boundary_point(0.0);
    let eo = compare_erf(&rescaled_density(&kernel, &de, zb, &xi, 1e-8)?).sup_error;
    s.gate("oracle_sup_err[m=36]", eo, "<= 0.25", eo <= 0.25);
    Ok(s)
}

fn a4() -> Result<Sheet> {
    let mut s = Sheet::new();
    let a = 0.2;
    let v = Polynomial1D::from_shifted(1.0, &[0.0, 0.0, 0.5, a]);
    let u = Polynomial1D { coeffs: vec![1.0] };
    // V has a local maximum at x - 1 = -1/(3a); the integral is taken over
    // the basin [1 - 1.5, 1 + 10], where the left endpoint contributes below
    // e^{-ω·0.45}.
    let (xs, ws) = composite_gl(-0.5, 11.0, 800, 20);
    let omegas = [50.0, 100.0, 200.0, 400.0];
    for k in 1..=3usize {
        let mut abs_err = Vec::new();
        let mut rel_err = Vec::new();
        for &om in &omegas {
            let quad: f64 = xs
                .iter()
                .zip(&ws)
                .map(|(&x, &w)| w * (-om * (0.5 * (x - 1.0).powi(2) + a * (x - 1.0).powi(3))).exp())
                .sum();
            let e = laplace_expand(&v, &u, 1.0, om, k)?;
            let err = (e.value - quad).abs();
            abs_err.push(err);
            rel_err.push(err / (2.0 * PI / om).sqrt());
        }
        let slope = loglog_slope(&omegas, &abs_err);
        s.gate(
            format!("slope_abs[k={k}]"),
            slope,
            format!("within 0.25 of {}", -(k as f64)),
            (slope + k as f64).abs() <= 0.25,
        );
        s.info(format!("slope_rel[k={k}]"), loglog_slope(&omegas, &rel_err));
    }
    if !s.pass {
        s.note("absolute errors carry the ω^{-1/2} Gaussian prefactor (slope -k-1/2); the relative error slope_rel is the bracketed O(ω^{-k})");
    }
    Ok(s)
}

fn random_band_limited(
    rng: &mut ChaCha8Rng,
    n: usize,
    band: i64,
    amp: f64,
    space: Option<Subspace>,
) -> CircleFunction {
    let mut f = CircleFunction::zeros(n);
    for k in -band..=band {
        let scale = amp / (1.0 + (k * k) as f64);
        f.set(
            k,
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale,
        );
    }
    match space {
        Some(sp) => f.project(sp),
        None => f,
    }
}

fn a5() -> Result<Sheet> {
    let mut s = Sheet::new();
    let n = 256;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_a5);
    let (mut idem, mut orth, mut member) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..20 {
        let f = random_band_limited(&mut rng, n, 100, 1.0, None);
        for sp in [
            Subspace::Analytic,
            Subspace::Exterior,
            Subspace::ExteriorZero,
            Subspace::AnalyticZero,
        ] {
            let p = f.project(sp);
            idem = idem.max(p.project(sp).sub(&p).l2_norm());
        }
        let plus = f.project(Subspace::Analytic);
        let minus = f.project(Subspace::ExteriorZero);
        // ⟨P₊f, P₋,₀f⟩ through samples, and completeness P₊ + P₋,₀ = I
        let len = 2 * n;
        let (a, b) = (plus.samples(len), minus.samples(len));
        let inner: C64 = a.iter().zip(&b).map(|(x, y)| x * y.conj()).sum::<C64>() / len as f64;
        orth = orth
            .max(inner.norm())
            .max(plus.add(&minus).sub(&f).l2_norm());

        let u = random_band_limited(&mut rng, n, 8, 0.5, None).re();
        let v = random_band_limited(&mut rng, n, 8, 0.5, Some(Subspace::Analytic));
        let rhs = random_band_limited(&mut rng, n, 8, 1.0, None);
        let c = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let sol = toeplitz_solve(&u, &v, &rhs, c)?;
        // independent membership check on a 4× finer sample grid
        let big = 4 * n;
        let fine = 2 * big;
        let (us, vs, fs, ss) = (
            u.samples(fine),
            v.samples(fine),
            rhs.samples(fine),
            sol.samples(fine),
        );
        let lhs: Vec<C64> = (0..fine)
            .map(|j| vs[j].conj().exp() * ss[j] + (-us[j]).exp() * fs[j])
            .collect();
        let lhs = CircleFunction::from_samples(big, &lhs);
        let ext = sol.project(Subspace::AnalyticZero).l2_norm();
        let ana = lhs.project(Subspace::ExteriorZero).l2_norm();
        let inf = sol.coeff(0) - c * (-v.coeff(0).conj()).exp();
        member = member.max(ext).max(ana).max(inf.norm());
    }
    s.gate("projection_idempotence", idem, "<= 1e-13", idem <= 1e-13);
    s.gate("projection_orthogonality", orth, "<= 1e-13", orth <= 1e-13);
    s.gate("toeplitz_membership", member, "<= 1e-10", member <= 1e-10);
    Ok(s)
}

/// `(4π)^{-1/2} (2√2/3) (2)^{-1/2} e^{-1/2}`: the limit of the Ginibre
/// leading-order flow residual sup (relative defect `-(2√2/3)t` of the
/// Jacobian against the Gaussian peak profile).
pub fn ginibre_flow_plateau() -> f64 {
    (4.0 * PI).powf(-0.5) * (2.0 * 2f64.sqrt() / 3.0) * 0.5f64.sqrt() * (-0.5f64).exp()
}

fn a6() -> Result<Sheet> {
    let mut s = Sheet::new();
    let p = Potential::ginibre();
    let d = Droplet::compute(&p, 1.0, &DropletOptions::default())?;
    let ms = [64usize, 128, 256];
    let mut sups = Vec::new();
    for &m in &ms {
        let mf = m as f64;
        let dl = delta_m(mf);
        let fam = FlowFamily::solve(&d, dl, &FlowOptions::default())?;
        let lr = fam.level_residual.iter().cloned().fold(0.0, f64::max);
        s.gate(format!("level_residual[m={m}]"), lr, "<= 1e-8", lr <= 1e-8);
        let q = QuasiPolynomial::build(&p, m, mf, 0, &DropletOptions::default())?;
        let ts: Vec<f64> = (0..=400)
            .map(|i| -dl + 2.0 * dl * i as f64 / 400.0)
            .collect();
        let sup = flow_residual_sup(&q, &fam, &ts)?;
        s.info(format!("flow_residual_sup[m={m}]"), sup);
        s.info(
            format!("flow_residual_sup_normalized[m={m}]"),
            sup / (mf.sqrt() / (4.0 * PI).sqrt()),
        );
        sups.push(sup);
        let fi = foliation_integral(&q, &fam)?;
        let tol = 3.0 * mf.powf(-1.0 / 3.0);
        s.gate(
            format!("foliation_integral_minus_1[m={m}]"),
            fi - 1.0,
            format!("|.| <= 3m^(-1/3) = {tol:.4}"),
            (fi - 1.0).abs() <= tol,
        );
    }
    for i in 0..2 {
        let r = sups[i + 1] / sups[i];
        s.gate(
            format!("sup_ratio[m={}/{}]", ms[i + 1], ms[i]),
            r,
            "<= 1.2 (monotone up to 20%)",
            r <= 1.2,
        );
    }
    s.gate(
        "sup_ratio[m=256/64]",
        sups[2] / sups[0],
        "< 1 (net decay)",
        sups[2] < sups[0],
    );
    s.info("analytic_plateau", ginibre_flow_plateau());
    s.note(format!(
        "absolute residual sup approaches the constant {:.4} (leading-order family only); the normalized residual decays like m^(-1/2)",
        ginibre_flow_plateau()
    ));
    Ok(s)
}

fn a7() -> Result<Sheet> {
    let mut s = Sheet::new();
    let c = 1.0;
    let ms = [32usize, 64];
    let mut norm_errs = Vec::new();
    for &m in &ms {
        let mf = m as f64;
        let bound = c * mf.powf(-4.0 / 3.0);
        let q =
            QuasiPolynomial::build(&Potential::ginibre(), m, mf, 1, &DropletOptions::default())?;
        let ne = (q.norm_squared(64, 256)? - 1.0).abs();
        s.gate(
            format!("norm_err[m={m}]"),
            ne,
            format!("<= C m^(-4/3) = {bound:.4e} (C = {c})"),
            ne <= bound,
        );
        norm_errs.push(ne);
        for k in [m - 1, m - 2, m / 2] {
            let ip = q.inner_with_monomial(k, 64, 256)?.norm();
            // ‖z^k‖² = k!/m^{k+1} for e^{-m|z|²} dA
            let zk = (0.5 * (ln_gamma(k as f64 + 1.0) - (k as f64 + 1.0) * mf.ln())).exp();
            let r = ip / zk;
            s.gate(
                format!("inner_over_norm[m={m},k={k}]"),
                r,
                format!("<= {bound:.4e}"),
                r <= bound,
            );
        }
    }
    let expo = (norm_errs[0] / norm_errs[1]).log2();
    s.gate("norm_err_exponent", expo, ">= 1.2", expo >= 1.2);
    Ok(s)
}

fn a8() -> Result<Sheet> {
    let mut s = Sheet::new();
    let p = Potential::hele_shaw(0.5).with_log_pole(-(0.5f64).sqrt(), C64::new(1.0, 0.0));
    let tau = 1.0;
    let eps = 1e-3;
    let opts = DropletOptions::default();
    let d1 = Droplet::compute(&p, tau, &opts)?;
    let d0 = Droplet::compute(&p, tau - eps, &opts)?;
    let mut worst = 0.0f64;
    for j in 0..32 {
        let th = 2.0 * PI * j as f64 / 32.0;
        let b = d1.boundary_point(th);
        let nrm = d1.normal(th)?;
        let pred = eps * d1.boundary_speed(th)?;
        // distance along the inward normal to ∂S_{τ-ε}: |φ_{τ-ε}(b - s·n)| = 1
        let f = |sd: f64| -> Result<f64> { Ok(d0.exterior_map(b - nrm * sd)?.norm() - 1.0) };
        let (mut s0, mut s1) = (0.0, pred);
        let (mut f0, mut f1) = (f(s0)?, f(s1)?);
        for _ in 0..50 {
            if f1.abs() <= 1e-14 || (f1 - f0).abs() < 1e-300 || (s1 - s0).abs() < 1e-15 {
                break;
            }
            let s2 = s1 - f1 * (s1 - s0) / (f1 - f0);
            (s0, f0) = (s1, f1);
            s1 = s2;
            f1 = f(s1)?;
        }
        if f1.abs() > 1e-11 {
            return Err(Error::NonConvergence {
                stage: "boundary displacement",
                iterations: 50,
                residual: f1.abs(),
            });
        }
        worst = worst.max((s1 / pred - 1.0).abs());
    }
    s.gate("max_rel_mismatch", worst, "<= 0.05", worst <= 0.05);
    Ok(s)
}

fn a9() -> Result<Sheet> {
    let mut s = Sheet::new();
    let m = 100usize;
    let mf = m as f64;
    let n = m;
    let width = 3.0 * (mf.ln() / mf).sqrt();
    // radial mass: with u = m r², |P_n|² e^{-m r²} dA integrates to the
    // regularized gamma function P(n+1, ·)
    let a = (1.0 - width).max(0.0);
    let b = 1.0 + width;
    let closed = gamma_lr(n as f64 + 1.0, mf * b * b) - gamma_lr(n as f64 + 1.0, mf * a * a);
    // the same mass by two-dimensional quadrature, split into sectors
    let ex = GinibreExact::new(mf);
    let sectors = 16;
    let (rs, wr) = composite_gl(a, b, 64, 16);
    let per_sector = 32;
    let mut mass = vec![0.0; sectors];
    for (&r, &w) in rs.iter().zip(&wr) {
        for (k, mk) in mass.iter_mut().enumerate() {
            for j in 0..per_sector {
                let th =
                    2.0 * PI * (k as f64 + (j as f64 + 0.5) / per_sector as f64) / sectors as f64;
                let z = C64::from_polar(r, th);
                let dens = (2.0 * ex.log_abs(n, z) - mf * r * r).exp();
                // dA = π^{-1} r dr dθ
                *mk += w * dens * r * (2.0 * PI / (sectors * per_sector) as f64) / PI;
            }
        }
    }
    let total: f64 = mass.iter().sum();
    s.gate(
        "mass_fraction_closed_form",
        closed,
        ">= 0.90",
        closed >= 0.90,
    );
    s.gate("mass_fraction_quadrature", total, ">= 0.90", total >= 0.90);
    let mean = total / sectors as f64;
    let dev = mass
        .iter()
        .map(|v| (v / mean - 1.0).abs())
        .fold(0.0, f64::max);
    s.gate("angular_uniformity", dev, "<= 0.02", dev <= 0.02);
    s.info("band_half_width", width);
    Ok(s)
}

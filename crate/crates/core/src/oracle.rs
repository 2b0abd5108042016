//! Ground truth: weighted Gram–Schmidt orthogonal polynomials in extended
//! precision, exact Ginibre formulas, reproducing kernels, and the pointwise
//! growth bound check.
//!
//! Moments `G_{jk} = ∫ z^j z̄^k e^{-2mQ} dA` are computed by a polar product
//! rule: Gauss–Legendre panels in `r` (nodes and weights themselves refined
//! to working precision) and a uniform angular grid whose size is doubled
//! per radius until the (extrapolated) aliased Fourier tail is negligible
//! *relative to the contribution of that radius to the normalized Gram
//! matrix*.  The whole
//! computation is repeated at twice the radial and angular resolution and
//! the discrepancy is reported as the self-estimate.

use crate::droplet::Droplet;
use crate::error::{Error, Result};
use crate::expansion::QuasiPolynomial;
use crate::mp::{self, Mp, MpC};
use crate::potential::Potential;
use crate::quad::gauss_legendre;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_ur, ln_gamma};
use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

/// Quadrature knobs for [`compute_moments`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    /// Gauss–Legendre points per radial panel.
    pub order: usize,
    /// Panel width in units of the local length scale `1/√(mΔQ)`.
    pub panel_scale: f64,
    /// Starting angular grid; `None` means the next power of two ≥ `4·n_max`.
    pub angular_nodes: Option<usize>,
    pub max_angular_nodes: usize,
    /// Repeat at doubled resolution and report the discrepancy.
    pub self_check: bool,
    /// Use the full angular path even for radial potentials.
    pub force_general: bool,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            order: 64,
            panel_scale: 2.0,
            angular_nodes: None,
            max_angular_nodes: 8192,
            self_check: true,
            force_general: false,
        }
    }
}

/// Hermitian moment matrix of the weight `e^{-2mQ}`.
#[derive(Clone, Debug)]
pub struct MomentMatrix {
    pub m: f64,
    pub n_max: usize,
    pub digits: u32,
    entries: Vec<MpC>,
    /// Largest `|G - G'| / √(G_jj G_kk)` against the doubled-resolution run.
    pub self_estimate: f64,
    pub radial_nodes: usize,
    pub max_angular_nodes: usize,
    pub truncation_radius: f64,
}

impl MomentMatrix {
    pub fn dim(&self) -> usize {
        self.n_max + 1
    }

    pub fn entry(&self, j: usize, k: usize) -> &MpC {
        &self.entries[j * self.dim() + k]
    }

    pub fn entry_c64(&self, j: usize, k: usize) -> C64 {
        mp::with_precision(mp::bits_for_digits(self.digits), || {
            self.entry(j, k).to_c64()
        })
    }

    /// Largest off-diagonal `|G_jk| / √(G_jj G_kk)`.
    pub fn max_offdiag_ratio(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        mp::with_precision(mp::bits_for_digits(self.digits), || {
            for j in 0..n {
                for k in 0..n {
                    if j != k {
                        let num = self.entry(j, k).norm_sqr();
                        let den = &self.entry(j, j).re * &self.entry(k, k).re;
                        worst = worst.max((&num / &den).sqrt().to_f64());
                    }
                }
            }
        });
        worst
    }
}

/// Orthonormal polynomials `P_n = Σ_k T_{nk} z^k`, `n = 0..=n_max`.
#[derive(Clone, Debug)]
pub struct OrthoPolySet {
    pub m: f64,
    pub n_max: usize,
    pub digits: u32,
    pub potential: Potential,
    coeffs: Vec<Vec<MpC>>,
    /// Leading coefficients `T_nn` as `log`.
    pub log_leading: Vec<f64>,
    pub leading_positive: Vec<bool>,
    /// `max |⟨P_j, P_k⟩ - δ_jk|` recomputed against the moments.
    pub residual: f64,
}

thread_local! {
    static GL_MP: RefCell<HashMap<(usize, usize), Arc<(Vec<Mp>, Vec<Mp>)>>> = RefCell::new(HashMap::new());
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` at working precision,
/// Newton-refined from the double-precision rule.
pub fn gauss_legendre_mp(n: usize) -> Arc<(Vec<Mp>, Vec<Mp>)> {
    let key = (n, mp::precision());
    if let Some(v) = GL_MP.with(|c| c.borrow().get(&key).cloned()) {
        return v;
    }
    let (x0, _) = gauss_legendre(n);
    let one = Mp::one();
    let two = Mp::from_i64(2);
    let stop = (-(mp::precision() as f64) + 16.0) * std::f64::consts::LN_2;
    let legendre = |x: &Mp| -> (Mp, Mp) {
        let mut p0 = Mp::one();
        let mut p1 = x.clone();
        for k in 1..n {
            let kk = Mp::from_i64(k as i64);
            let a = &(&Mp::from_i64(2 * k as i64 + 1) * x) * &p1;
            let p2 = &(&a - &(&kk * &p0)) / &Mp::from_i64(k as i64 + 1);
            p0 = p1;
            p1 = p2;
        }
        // P_n and P_n' = n (x P_n - P_{n-1}) / (x² - 1)
        let d = &(&Mp::from_i64(n as i64) * &(&(x * &p1) - &p0)) / &(&(x * x) - &one);
        (p1, d)
    };
    let mut xs = Vec::with_capacity(n);
    let mut ws = Vec::with_capacity(n);
    for &g in &x0 {
        let mut x = Mp::from_f64(g);
        for _ in 0..12 {
            let (p, d) = legendre(&x);
            let dx = &p / &d;
            x = &x - &dx;
            if dx.ln_abs_f64() < stop {
                break;
            }
        }
        let (_, d) = legendre(&x);
        let w = &two / &(&(&one - &(&x * &x)) * &(&d * &d));
        xs.push(x);
        ws.push(w);
    }
    let v = Arc::new((xs, ws));
    GL_MP.with(|c| c.borrow_mut().insert(key, v.clone()));
    v
}

/// `Q(r e^{iθ})` at working precision, given `cos θ`, `sin θ`.
fn q_mp(p: &Potential, r: &Mp, c: &Mp, s: &Mp) -> Mp {
    match p {
        Potential::Radial(prof) => {
            let mut q = Mp::zero();
            let lnr = r.ln();
            for &(e, coeff) in &prof.terms {
                let pow = if e.fract() == 0.0 && e >= 0.0 {
                    Mp(r.0.powi(
                        e as usize,
                        mp::precision(),
                        astro_float_num::RoundingMode::ToEven,
                    ))
                } else {
                    (&Mp::from_f64(e) * &lnr).exp()
                };
                q = &q + &(&Mp::from_f64(coeff) * &pow);
            }
            if prof.log_coeff != 0.0 {
                q = &q + &(&Mp::from_f64(prof.log_coeff) * &lnr);
            }
            q
        }
        Potential::HeleShaw(h) => {
            let x = r * c;
            let y = r * s;
            let mut q = &Mp::from_f64(h.alpha) * &(r * r);
            for pole in &h.log_poles {
                let dx = &x - &Mp::from_f64(pole.a.re);
                let dy = &y - &Mp::from_f64(pole.a.im);
                let d2 = &(&dx * &dx) + &(&dy * &dy);
                q = &q + &(&Mp::from_f64(0.5 * pole.c) * &d2.ln());
            }
            let z = MpC::new(x, y);
            for t in &h.poly {
                let mut zk = MpC::from_real(Mp::one());
                for _ in 0..t.k {
                    zk = zk.mul(&z);
                }
                q = &q + &zk.mul(&MpC::from_c64(t.t)).re;
            }
            q
        }
    }
}

/// Radius beyond which `e^{-2mQ}|z|^{2n_max} < 10^{-digits}` in every direction.
fn truncation_radius(p: &Potential, m: f64, n_max: usize, digits: u32) -> Result<f64> {
    let thr = digits as f64 * std::f64::consts::LN_10 + 5.0;
    let (center, radius) = p.droplet_scale((n_max.max(1)) as f64 / m)?;
    let scale = center.norm() + radius;
    let f = |r: f64| -> f64 {
        let mut mn = f64::INFINITY;
        for i in 0..64 {
            let z = C64::from_polar(r, 2.0 * std::f64::consts::PI * (i as f64 + 0.5) / 64.0);
            let q = p.eval(z).unwrap_or(f64::NEG_INFINITY);
            mn = mn.min(2.0 * m * q - 2.0 * n_max as f64 * r.ln());
        }
        mn
    };
    let step = 0.01 * scale.max(0.1);
    let mut last_fail = 0.0;
    let mut run = 0usize;
    let mut r = step;
    while r < 1e3 * scale.max(1.0) {
        if f(r) <= thr {
            last_fail = r;
            run = 0;
        } else {
            run += 1;
            if run > 200 && r > 2.0 * scale {
                return Ok((last_fail + step).max(5.0 * step));
            }
        }
        r += step;
    }
    Err(Error::Domain(
        "weight does not decay fast enough for the requested degrees".into(),
    ))
}

struct NodeModes {
    modes: Vec<MpC>,
    tail: f64,
    log_w0: f64,
    nodes: usize,
}

/// Fourier modes `ŵ_d(r)`, `|d| ≤ n_max`, of `θ ↦ e^{-2mQ(re^{iθ})}` on an
/// `l`-point grid, with the relative size of the top-eighth band.
fn angular_modes(p: &Potential, m2: &Mp, r: &Mp, l: usize, n_max: usize) -> NodeModes {
    let tw = mp::twiddles(l);
    let mut x: Vec<MpC> = tw
        .iter()
        .map(|e| {
            let c = e.re.clone();
            let s = -&e.im;
            MpC::from_real((-&(m2 * &q_mp(p, r, &c, &s))).exp())
        })
        .collect();
    mp::fft(&mut x);
    let inv = Mp::from_i64(l as i64);
    let at = |d: i64| -> MpC { x[d.rem_euclid(l as i64) as usize].div_real(&inv) };
    let w0 = at(0);
    let band = |lo: usize, hi: usize| -> f64 {
        (lo..hi)
            .flat_map(|d| [at(d as i64), at(-(d as i64))])
            .map(|v| 0.5 * v.norm_sqr().ln_abs_f64())
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let b1 = band(l / 4, 3 * l / 8);
    let b2 = band(3 * l / 8, l / 2 + 1);
    // Aliasing into |d| ≤ n_max comes from modes ≥ L - n_max ≥ 3L/4; the
    // coefficients decay at least geometrically, so extrapolate the last
    // band-to-band decay over two more bands.
    let decay = if b2 < b1 { b2 - b1 } else { 0.0 };
    let log_w0 = w0.re.ln_abs_f64();
    let tail = b2 + 2.0 * decay - log_w0;
    let modes = (-(n_max as i64)..=n_max as i64).map(at).collect();
    NodeModes {
        modes,
        tail,
        log_w0,
        nodes: l,
    }
}

fn moments_pass(
    p: &Potential,
    m: f64,
    n_max: usize,
    r_max: f64,
    panels: usize,
    l0: usize,
    cfg: &QuadratureConfig,
    digits: u32,
    radial: bool,
) -> Result<(Vec<MpC>, usize)> {
    let bits = mp::precision();
    let gl = gauss_legendre_mp(cfg.order);
    let dim = n_max + 1;
    let h = &Mp::from_f64(r_max) / &Mp::from_i64(panels as i64);
    let half = &h / &Mp::from_i64(2);
    let mut nodes = Vec::with_capacity(panels * cfg.order);
    for k in 0..panels {
        let a = &h * &Mp::from_i64(k as i64);
        for (t, w) in gl.0.iter().zip(&gl.1) {
            let r = &(&a + &half) + &(&half * t);
            nodes.push((r, &half * w));
        }
    }
    let m2 = Mp::from_f64(2.0 * m);
    let mut g = vec![MpC::zero(); dim * dim];
    let two = Mp::from_i64(2);

    if radial {
        let contrib: Vec<Vec<Mp>> = nodes
            .par_iter()
            .map(|(r, w)| {
                mp::with_precision(bits, || {
                    let w0 = (-&(&m2 * &q_mp(p, r, &Mp::one(), &Mp::zero()))).exp();
                    let mut f = &(&two * w) * &(&w0 * r);
                    let r2 = r * r;
                    let mut out = Vec::with_capacity(dim);
                    for _ in 0..dim {
                        out.push(f.clone());
                        f = &f * &r2;
                    }
                    out
                })
            })
            .collect();
        for c in contrib {
            for j in 0..dim {
                g[j * dim + j].re = &g[j * dim + j].re + &c[j];
            }
        }
        return Ok((g, 1));
    }

    // Phase 1: all nodes at the starting angular resolution.
    let mut modes: Vec<NodeModes> = nodes
        .par_iter()
        .map(|(r, _)| mp::with_precision(bits, || angular_modes(p, &m2, r, l0, n_max)))
        .collect();

    // Importance of each node to the normalized diagonal entries.
    let ln2 = std::f64::consts::LN_2;
    let term = |i: usize, j: usize| -> f64 {
        let (r, w) = &nodes[i];
        w.ln_abs_f64() + ln2 + (2 * j + 1) as f64 * r.ln_abs_f64() + modes[i].log_w0
    };
    let mut log_diag = vec![f64::NEG_INFINITY; dim];
    for (j, ld) in log_diag.iter_mut().enumerate() {
        let mx = (0..nodes.len())
            .map(|i| term(i, j))
            .fold(f64::NEG_INFINITY, f64::max);
        let s: f64 = (0..nodes.len()).map(|i| (term(i, j) - mx).exp()).sum();
        *ld = mx + s.ln();
    }
    let importance: Vec<f64> = (0..nodes.len())
        .map(|i| {
            (0..dim)
                .map(|j| term(i, j) - log_diag[j])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    // Aliasing is held ten digits below the self-check tolerance 10^{-digits/2}.
    let budget =
        -(digits as f64 / 2.0 + 10.0) * std::f64::consts::LN_10 - (nodes.len() as f64).ln();

    // Phase 2: refine radii whose aliased tail matters.
    let refine: Vec<usize> = (0..nodes.len())
        .filter(|&i| modes[i].tail + importance[i] > budget)
        .collect();
    let refined: Vec<(usize, Result<NodeModes>)> = refine
        .par_iter()
        .map(|&i| {
            mp::with_precision(bits, || {
                let mut l = l0;
                loop {
                    l *= 2;
                    if l > cfg.max_angular_nodes {
                        return (
                            i,
                            Err(Error::Resolution {
                                what: format!("angular grid at r = {:.4}", nodes[i].0.to_f64()),
                                tail: (modes[i].tail + importance[i]).exp(),
                            }),
                        );
                    }
                    let nm = angular_modes(p, &m2, &nodes[i].0, l, n_max);
                    if nm.tail + importance[i] <= budget {
                        return (i, Ok(nm));
                    }
                }
            })
        })
        .collect();
    for (i, nm) in refined {
        modes[i] = nm?;
    }
    let max_l = modes.iter().map(|m| m.nodes).max().unwrap_or(l0);

    // Accumulate G_jk = Σ_nodes 2 W r^{j+k+1} ŵ_{k-j}.
    let contrib: Vec<Vec<MpC>> = nodes
        .par_iter()
        .zip(modes.par_iter())
        .map(|((r, w), nm)| {
            mp::with_precision(bits, || {
                let mut pw = Vec::with_capacity(2 * dim);
                let mut f = &(&two * w) * r;
                for _ in 0..2 * dim {
                    pw.push(f.clone());
                    f = &f * r;
                }
                let mut out = vec![MpC::zero(); dim * dim];
                for j in 0..dim {
                    for k in j..dim {
                        let d = k as i64 - j as i64 + n_max as i64;
                        out[j * dim + k] = nm.modes[d as usize].scale(&pw[j + k]);
                    }
                }
                out
            })
        })
        .collect();
    for c in contrib {
        for j in 0..dim {
            for k in j..dim {
                g[j * dim + k] = g[j * dim + k].add(&c[j * dim + k]);
            }
        }
    }
    for j in 0..dim {
        g[j * dim + j].im = Mp::zero();
        for k in 0..j {
            g[j * dim + k] = g[k * dim + j].conj();
        }
    }
    Ok((g, max_l))
}

/// Moment matrix of `e^{-2mQ}` up to degree `n_max` at `digits` decimal digits.
pub fn compute_moments(
    p: &Potential,
    m: f64,
    n_max: usize,
    cfg: &QuadratureConfig,
    digits: u32,
) -> Result<MomentMatrix> {
    p.validate()?;
    if !(m > 0.0) || !m.is_finite() {
        return Err(Error::Domain(format!("m = {m} must be positive")));
    }
    if digits < 20 {
        return Err(Error::Domain("at least 20 digits are required".into()));
    }
    if cfg.order < 2 || !(cfg.panel_scale > 0.0) {
        return Err(Error::Domain(
            "quadrature order ≥ 2 and positive panel scale required".into(),
        ));
    }
    if let Potential::HeleShaw(h) = p {
        if let Some(pole) = h.log_poles.iter().find(|q| q.c > 0.0 && m * q.c >= 1.0) {
            return Err(Error::Domain(format!(
                "weight |z - a|^(-2mc) is not integrable at a = {} (m·c = {})",
                pole.a,
                m * pole.c
            )));
        }
    }
    let r_max = truncation_radius(p, m, n_max, digits)?;
    let (center, radius) = p.droplet_scale((n_max.max(1)) as f64 / m)?;
    let mut lam = 1e-2f64;
    for i in 0..16 {
        let z = center + C64::from_polar(radius, 2.0 * std::f64::consts::PI * i as f64 / 16.0);
        if let Ok(l) = p.laplacian(z) {
            lam = lam.max(l);
        }
    }
    let width = cfg.panel_scale / (m * lam).sqrt();
    let panels = (r_max / width).ceil().max(1.0) as usize;
    let l0 = cfg
        .angular_nodes
        .unwrap_or((4 * n_max).max(16))
        .next_power_of_two();
    let radial = p.is_radial() && !cfg.force_general;
    let bits = mp::bits_for_digits(digits);

    mp::with_precision(bits, || {
        let (g1, l1) = moments_pass(p, m, n_max, r_max, panels, l0, cfg, digits, radial)?;
        let dim = n_max + 1;
        let mut out = MomentMatrix {
            m,
            n_max,
            digits,
            entries: g1,
            self_estimate: f64::NAN,
            radial_nodes: panels * cfg.order,
            max_angular_nodes: l1,
            truncation_radius: r_max,
        };
        if cfg.self_check {
            let (g2, l2) =
                moments_pass(p, m, n_max, r_max, 2 * panels, 2 * l0, cfg, digits, radial)?;
            let mut est = 0.0f64;
            for j in 0..dim {
                for k in 0..dim {
                    let diff = out.entries[j * dim + k].sub(&g2[j * dim + k]).norm_sqr();
                    let den = &g2[j * dim + j].re * &g2[k * dim + k].re;
                    est = est.max((&diff / &den).sqrt().to_f64());
                }
            }
            out.entries = g2;
            out.self_estimate = est;
            out.radial_nodes = 2 * panels * cfg.order;
            out.max_angular_nodes = l2;
            let tol = 10f64.powf(-(digits as f64) / 2.0);
            if !(est <= tol) {
                return Err(Error::Resolution {
                    what: "moment quadrature self-estimate".into(),
                    tail: est,
                });
            }
        }
        Ok(out)
    })
}

/// Cholesky orthonormalization `G = L L*`, `T = L⁻¹`.
pub fn gram_schmidt(g: &MomentMatrix, potential: &Potential) -> Result<OrthoPolySet> {
    let n = g.dim();
    let bits = mp::bits_for_digits(g.digits);
    mp::with_precision(bits, || {
        let mut l = vec![vec![MpC::zero(); n]; n];
        for j in 0..n {
            let mut d = g.entry(j, j).re.clone();
            for k in 0..j {
                d = &d - &l[j][k].norm_sqr();
            }
            if !d.is_positive() {
                return Err(Error::Precision(format!(
                    "Gram matrix lost positive definiteness at degree {j} with {} digits; increase the precision",
                    g.digits
                )));
            }
            let djj = d.sqrt();
            l[j][j] = MpC::from_real(djj.clone());
            for i in j + 1..n {
                let mut s = g.entry(i, j).clone();
                for k in 0..j {
                    s = s.sub(&l[i][k].mul(&l[j][k].conj()));
                }
                l[i][j] = s.div_real(&djj);
            }
        }
        // forward substitution for T = L⁻¹ (lower triangular)
        let mut t: Vec<Vec<MpC>> = Vec::with_capacity(n);
        for i in 0..n {
            let mut row = vec![MpC::zero(); i + 1];
            let inv = &Mp::one() / &l[i][i].re;
            row[i] = MpC::from_real(inv.clone());
            for j in (0..i).rev() {
                // (T L)_{ij} = 0  ⇒  T_ij L_jj = -Σ_{k>j} T_ik L_kj
                let mut s = MpC::zero();
                for k in j + 1..=i {
                    s = s.add(&row[k].mul(&l[k][j]));
                }
                row[j] = MpC::new(-&s.re, -&s.im).div_real(&l[j][j].re);
            }
            t.push(row);
        }
        // re-orthogonality against G: (T G T*)_{jk}
        let mut tg = vec![vec![MpC::zero(); n]; n];
        for i in 0..n {
            for b in 0..n {
                let mut s = MpC::zero();
                for a in 0..=i {
                    s = s.add(&t[i][a].mul(g.entry(a, b)));
                }
                tg[i][b] = s;
            }
        }
        let mut residual = 0.0f64;
        for i in 0..n {
            for k in 0..n {
                let mut s = MpC::zero();
                for b in 0..=k {
                    s = s.add(&tg[i][b].mul(&t[k][b].conj()));
                }
                if i == k {
                    s.re = &s.re - &Mp::one();
                }
                residual = residual.max(s.norm_sqr().sqrt().to_f64());
            }
        }
        let log_leading = (0..n).map(|i| t[i][i].re.ln_abs_f64()).collect();
        let leading_positive = (0..n)
            .map(|i| t[i][i].re.is_positive() && t[i][i].im.0.is_zero())
            .collect();
        Ok(OrthoPolySet {
            m: g.m,
            n_max: g.n_max,
            digits: g.digits,
            potential: potential.clone(),
            coeffs: t,
            log_leading,
            leading_positive,
            residual,
        })
    })
}

impl OrthoPolySet {
    fn bits(&self) -> usize {
        mp::bits_for_digits(self.digits)
    }

    /// Coefficients `T_{nk}` of `P_n`, `k = 0..=n`, rounded to `f64`.
    pub fn coefficients(&self, n: usize) -> Vec<C64> {
        mp::with_precision(self.bits(), || {
            self.coeffs[n].iter().map(|c| c.to_c64()).collect()
        })
    }

    /// `log|T_{nk}|` for every coefficient of `P_n` (robust to `f64` range).
    pub fn log_abs_coefficients(&self, n: usize) -> Vec<f64> {
        mp::with_precision(self.bits(), || {
            self.coeffs[n]
                .iter()
                .map(|c| 0.5 * c.norm_sqr().ln_abs_f64())
                .collect()
        })
    }

    fn eval_all_mp(&self, z: C64, count: usize) -> Vec<MpC> {
        let zm = MpC::from_c64(z);
        let mut pw = Vec::with_capacity(count);
        let mut acc = MpC::from_real(Mp::one());
        for _ in 0..count {
            pw.push(acc.clone());
            acc = acc.mul(&zm);
        }
        (0..count)
            .map(|n| {
                let mut s = MpC::zero();
                for (k, c) in self.coeffs[n].iter().enumerate() {
                    s = s.add(&c.mul(&pw[k]));
                }
                s
            })
            .collect()
    }

    /// `P_0(z), …, P_{count-1}(z)`.
    pub fn eval_all(&self, z: C64, count: usize) -> Vec<C64> {
        let count = count.min(self.n_max + 1);
        mp::with_precision(self.bits(), || {
            self.eval_all_mp(z, count)
                .iter()
                .map(|v| v.to_c64())
                .collect()
        })
    }

    pub fn eval(&self, n: usize, z: C64) -> C64 {
        mp::with_precision(self.bits(), || {
            let zm = MpC::from_c64(z);
            let mut s = MpC::zero();
            for c in self.coeffs[n].iter().rev() {
                s = s.mul(&zm).add(c);
            }
            s.to_c64()
        })
    }

    pub fn log_abs(&self, n: usize, z: C64) -> f64 {
        mp::with_precision(self.bits(), || {
            let zm = MpC::from_c64(z);
            let mut s = MpC::zero();
            for c in self.coeffs[n].iter().rev() {
                s = s.mul(&zm).add(c);
            }
            0.5 * s.norm_sqr().ln_abs_f64()
        })
    }

    /// `P_n(z) e^{-mQ(z)}`.
    pub fn weighted_eval(&self, n: usize, z: C64) -> Result<C64> {
        let q = self.potential.eval(z)?;
        Ok(self.eval(n, z) * (-self.m * q).exp())
    }

    /// `K(z, w) = Σ_{n<count} P_n(z) conj(P_n(w))`.
    pub fn kernel(&self, count: usize, z: C64, w: C64) -> Result<C64> {
        if count > self.n_max + 1 {
            return Err(Error::Domain(format!(
                "kernel needs {count} polynomials, have {}",
                self.n_max + 1
            )));
        }
        mp::with_precision(self.bits(), || {
            let pz = self.eval_all_mp(z, count);
            let pw = if z == w {
                pz.clone()
            } else {
                self.eval_all_mp(w, count)
            };
            let mut s = MpC::zero();
            for (a, b) in pz.iter().zip(&pw) {
                s = s.add(&a.mul(&b.conj()));
            }
            Ok(s.to_c64())
        })
    }

    /// `K(z, w) e^{-m(Q(z) + Q(w))}`.
    pub fn weighted_kernel(&self, count: usize, z: C64, w: C64) -> Result<C64> {
        let q = self.potential.eval(z)? + self.potential.eval(w)?;
        Ok(self.kernel(count, z, w)? * (-self.m * q).exp())
    }
}

/// Closed forms for the Ginibre weight `Q = ½|z|²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GinibreExact {
    pub m: f64,
}

impl GinibreExact {
    pub fn new(m: f64) -> Self {
        GinibreExact { m }
    }

    /// `log|P_{n,m}(z)|` with `P_{n,m}(z) = m^{(n+1)/2} z^n / √(n!)`.
    pub fn log_abs(&self, n: usize, z: C64) -> f64 {
        0.5 * (n as f64 + 1.0) * self.m.ln() + n as f64 * z.norm().ln()
            - 0.5 * ln_gamma(n as f64 + 1.0)
    }

    pub fn eval(&self, n: usize, z: C64) -> C64 {
        let lead = (0.5 * (n as f64 + 1.0) * self.m.ln() - 0.5 * ln_gamma(n as f64 + 1.0)).exp();
        z.powu(n as u32) * lead
    }

    /// `log(G_nn) = log(n!) - (n+1) log m`.
    pub fn log_moment(&self, n: usize) -> f64 {
        ln_gamma(n as f64 + 1.0) - (n as f64 + 1.0) * self.m.ln()
    }

    /// Weighted kernel `m Σ_{k<count} (m z w̄)^k / k! · e^{-m(|z|² + |w|²)/2}`,
    /// summed in the log domain.
    pub fn weighted_kernel(&self, count: usize, z: C64, w: C64) -> C64 {
        let m = self.m;
        let zw = z * w.conj();
        let shift = -0.5 * m * (z.norm_sqr() + w.norm_sqr());
        if zw.norm() == 0.0 {
            return C64::new(m * shift.exp(), 0.0);
        }
        let lzw = (zw * m).ln();
        let mut s = C64::new(0.0, 0.0);
        for k in 0..count {
            let l = lzw * k as f64 - ln_gamma(k as f64 + 1.0) + shift;
            s += l.exp();
        }
        s * m
    }

    /// Diagonal weighted density `m · Γ(count, m|z|²)/Γ(count)`.
    pub fn density(&self, count: usize, z: C64) -> f64 {
        let x = self.m * z.norm_sqr();
        if x == 0.0 {
            return self.m;
        }
        self.m * gamma_ur(count as f64, x)
    }
}

/// Anything that can report `log|P_{n,m}(z)|` and `log‖P_{n,m}‖`.
pub trait PolySource {
    fn log_abs(&self, n: usize, z: C64) -> Result<f64>;
    fn log_norm(&self, _n: usize) -> f64 {
        0.0
    }
}

impl PolySource for OrthoPolySet {
    fn log_abs(&self, n: usize, z: C64) -> Result<f64> {
        if n > self.n_max {
            return Err(Error::Domain(format!(
                "degree {n} > n_max = {}",
                self.n_max
            )));
        }
        Ok(OrthoPolySet::log_abs(self, n, z))
    }
}

impl PolySource for GinibreExact {
    fn log_abs(&self, n: usize, z: C64) -> Result<f64> {
        Ok(GinibreExact::log_abs(self, n, z))
    }
}

impl PolySource for QuasiPolynomial {
    fn log_abs(&self, n: usize, z: C64) -> Result<f64> {
        if n != self.n {
            return Err(Error::Domain(format!(
                "quasipolynomial is built for n = {}, asked {n}",
                self.n
            )));
        }
        Ok(self.eval_log(z)?.re)
    }
}

/// Outcome of [`pointwise_bound_check`].
#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub constant: f64,
    pub max_ratio: f64,
    /// `(z, ratio)` for samples with ratio > 1.
    pub violations: Vec<(C64, f64)>,
    pub ratios: Vec<f64>,
    /// Samples skipped because they lie inside the droplet.
    pub skipped: usize,
}

/// Ratios `|P_{n,m}(z)| / (C √m ‖P‖ e^{m Q̂(z)})` on samples outside the droplet.
pub fn pointwise_bound_check(
    src: &dyn PolySource,
    d: &Droplet,
    n: usize,
    m: f64,
    samples: &[C64],
    constant: f64,
) -> Result<BoundReport> {
    let mut ratios = Vec::with_capacity(samples.len());
    let mut violations = Vec::new();
    let mut skipped = 0;
    for &z in samples {
        if d.contains(z) {
            skipped += 1;
            continue;
        }
        let lr = src.log_abs(n, z)?
            - constant.ln()
            - 0.5 * m.ln()
            - src.log_norm(n)
            - m * d.obstacle(z)?;
        let r = lr.exp();
        if r > 1.0 {
            violations.push((z, r));
        }
        ratios.push(r);
    }
    let max_ratio = ratios.iter().cloned().fold(0.0, f64::max);
    Ok(BoundReport {
        constant,
        max_ratio,
        violations,
        ratios,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::droplet::DropletOptions;

    #[test]
    fn extended_gauss_legendre_integrates_exactly() {
        mp::with_precision(mp::bits_for_digits(60), || {
            let gl = gauss_legendre_mp(16);
            // ∫_{-1}^{1} x^30 dx = 2/31
            let mut s = Mp::zero();
            for (x, w) in gl.0.iter().zip(&gl.1) {
                s = &s
                    + &(w * &Mp(x.0.powi(
                        30,
                        mp::precision(),
                        astro_float_num::RoundingMode::ToEven,
                    )));
            }
            let err = &s - &(&Mp::from_i64(2) / &Mp::from_i64(31));
            assert!(err.abs().to_f64() < 1e-55);
        });
    }

    #[test]
    fn ginibre_moments_and_polynomials() {
        let p = Potential::ginibre();
        let m = 6.0;
        let g = compute_moments(&p, m, 6, &QuadratureConfig::default(), 40).unwrap();
        assert!(g.self_estimate < 1e-20, "{}", g.self_estimate);
        let ex = GinibreExact::new(m);
        for n in 0..=6 {
            let v = g.entry_c64(n, n).re;
            assert!((v.ln() - ex.log_moment(n)).abs() < 1e-13);
        }
        let ops = gram_schmidt(&g, &p).unwrap();
        assert!(ops.residual < 1e-20);
        assert!(ops.leading_positive.iter().all(|&b| b));
        let z = C64::new(0.4, -0.9);
        for n in 0..=6 {
            let a = ops.eval(n, z);
            let b = ex.eval(n, z);
            assert!((a - b).norm() < 1e-12 * b.norm());
        }
    }

    #[test]
    fn general_path_matches_radial_shortcut() {
        let p = Potential::ginibre();
        let cfg = QuadratureConfig {
            force_general: true,
            ..Default::default()
        };
        let g = compute_moments(&p, 4.0, 4, &cfg, 30).unwrap();
        assert!(g.max_offdiag_ratio() < 1e-25);
        let ex = GinibreExact::new(4.0);
        for n in 0..=4 {
            assert!((g.entry_c64(n, n).re.ln() - ex.log_moment(n)).abs() < 1e-13);
        }
    }

    #[test]
    fn unit_mass_for_m_one() {
        let g = compute_moments(
            &Potential::ginibre(),
            1.0,
            0,
            &QuadratureConfig::default(),
            30,
        )
        .unwrap();
        assert!((g.entry_c64(0, 0).re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ginibre_kernel_closed_form_and_bound() {
        let ex = GinibreExact::new(8.0);
        let z = C64::new(0.3, 0.2);
        let k = ex.weighted_kernel(8, z, z);
        assert!((k.re - ex.density(8, z)).abs() < 1e-12 * k.re);
        let d = Droplet::compute(&Potential::ginibre(), 1.0, &DropletOptions::default()).unwrap();
        let samples: Vec<C64> = (0..32)
            .map(|i| C64::from_polar(2.0, i as f64 * 0.2))
            .collect();
        let rep = pointwise_bound_check(&ex, &d, 16, 16.0, &samples, 5.0).unwrap();
        assert!(rep.max_ratio < 1.0, "{}", rep.max_ratio);
        assert!(rep.violations.is_empty());
    }
}

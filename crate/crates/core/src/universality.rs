//! Boundary blow-up densities and the erf comparison, plus Berezin densities.
//!
//! The rescaled density at a boundary point `z₀` with outer normal `n` is
//! `ρ_m(ξ) = (2mΔQ(z₀))⁻¹ K_m(z, z) e^{-2mQ(z)}` at
//! `z = z₀ + n ξ/√(2mΔQ(z₀))`.  Kernels come from the exact Ginibre formula,
//! from the extended-precision oracle, or from summing squared
//! quasipolynomials over the degree window next to `m`.

use crate::droplet::{Droplet, DropletOptions};
use crate::error::{Error, Result};
use crate::expansion::QuasiPolynomial;
use crate::oracle::{GinibreExact, OrthoPolySet};
use crate::potential::Potential;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::erf::erfc;
use std::f64::consts::SQRT_2;

/// `(2π)^{-1/2} ∫_x^∞ e^{-t²/2} dt`: the complementary Gaussian tail.
pub fn erf_tail(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

/// Diagonal weighted density `K_m(z, z) e^{-2mQ(z)}`.
pub trait DensitySource: Sync {
    fn m(&self) -> f64;
    fn potential(&self) -> &Potential;
    fn provenance(&self) -> &'static str;
    fn weighted_density(&self, z: C64) -> Result<f64>;
}

/// Full weighted kernel `K_m(z, w) e^{-m(Q(z) + Q(w))}`.
pub trait KernelSource: DensitySource {
    fn weighted_kernel(&self, z: C64, w: C64) -> Result<C64>;
}

/// Exact Ginibre kernel with `count` terms.
#[derive(Clone, Debug)]
pub struct GinibreKernel {
    pub exact: GinibreExact,
    pub count: usize,
    potential: Potential,
}

impl GinibreKernel {
    /// The `m`-point kernel (`count = m`).
    pub fn new(m: usize) -> Self {
        GinibreKernel {
            exact: GinibreExact::new(m as f64),
            count: m,
            potential: Potential::ginibre(),
        }
    }
}

impl DensitySource for GinibreKernel {
    fn m(&self) -> f64 {
        self.exact.m
    }
    fn potential(&self) -> &Potential {
        &self.potential
    }
    fn provenance(&self) -> &'static str {
        "ginibre-exact"
    }
    fn weighted_density(&self, z: C64) -> Result<f64> {
        Ok(self.exact.density(self.count, z))
    }
}

impl KernelSource for GinibreKernel {
    fn weighted_kernel(&self, z: C64, w: C64) -> Result<C64> {
        Ok(self.exact.weighted_kernel(self.count, z, w))
    }
}

/// Kernel built from extended-precision orthonormal polynomials.
#[derive(Clone, Debug)]
pub struct OracleKernel {
    pub ops: OrthoPolySet,
    pub count: usize,
}

impl OracleKernel {
    pub fn new(ops: OrthoPolySet, count: usize) -> Result<Self> {
        if count == 0 || count > ops.n_max + 1 {
            return Err(Error::Domain(format!(
                "kernel of {count} terms needs n_max ≥ {}",
                count.max(1) - 1
            )));
        }
        Ok(OracleKernel { ops, count })
    }
}

impl DensitySource for OracleKernel {
    fn m(&self) -> f64 {
        self.ops.m
    }
    fn potential(&self) -> &Potential {
        &self.ops.potential
    }
    fn provenance(&self) -> &'static str {
        "oracle-kernel"
    }
    fn weighted_density(&self, z: C64) -> Result<f64> {
        Ok(self.ops.weighted_kernel(self.count, z, z)?.re)
    }
}

impl KernelSource for OracleKernel {
    fn weighted_kernel(&self, z: C64, w: C64) -> Result<C64> {
        self.ops.weighted_kernel(self.count, z, w)
    }
}

/// `Σ_{m₁ ≤ n < m} χ₀²|F_{n,m}|² e^{-2mQ}` with `m₁ = ⌊m - √m log m⌋`:
/// lower degrees are exponentially small near `∂S₁` and are dropped.
#[derive(Clone, Debug)]
pub struct ExpansionDensity {
    pub m: usize,
    pub quasis: Vec<QuasiPolynomial>,
    potential: Potential,
}

/// First degree kept by [`ExpansionDensity`].
pub fn window_start(m: usize) -> usize {
    let mf = m as f64;
    (mf - mf.sqrt() * mf.ln()).floor().max(1.0) as usize
}

impl ExpansionDensity {
    /// Degrees `m₁..m` (the boundary window).
    pub fn build(
        potential: &Potential,
        m: usize,
        kappa: usize,
        opts: &DropletOptions,
    ) -> Result<Self> {
        Self::build_range(potential, m, window_start(m)..m, kappa, opts)
    }

    /// An explicit degree range.  At moderate `m` the degrees below the
    /// window still carry bulk mass a few units of `ξ` inside the droplet.
    pub fn build_range(
        potential: &Potential,
        m: usize,
        degrees: std::ops::Range<usize>,
        kappa: usize,
        opts: &DropletOptions,
    ) -> Result<Self> {
        if degrees.start == 0 || degrees.end > m {
            return Err(Error::Domain(format!(
                "degrees {degrees:?} must lie in 1..{m}"
            )));
        }
        let quasis = degrees
            .into_par_iter()
            .map(|n| QuasiPolynomial::build(potential, n, m as f64, kappa, opts))
            .collect::<Result<Vec<_>>>()?;
        Ok(ExpansionDensity {
            m,
            quasis,
            potential: potential.clone(),
        })
    }
}

impl DensitySource for ExpansionDensity {
    fn m(&self) -> f64 {
        self.m as f64
    }
    fn potential(&self) -> &Potential {
        &self.potential
    }
    fn provenance(&self) -> &'static str {
        "expansion-sum"
    }
    fn weighted_density(&self, z: C64) -> Result<f64> {
        let mut s = 0.0;
        for q in &self.quasis {
            let cut = q.droplet.cutoffs;
            let w = match q.droplet.exterior_map(z) {
                Ok(w) => w,
                Err(Error::Domain(_)) => continue,
                Err(e) => return Err(e),
            };
            let chi = cut.bump(w.norm());
            if chi > 0.0 {
                s += chi * chi * q.weighted_density_at_w(w)?;
            }
        }
        Ok(s)
    }
}

/// A boundary point snapped onto `∂S` with its outer unit normal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundaryPoint {
    pub z0: C64,
    pub normal: C64,
    /// Distance the requested point was moved.
    pub snapped_by: f64,
    /// `arg φ(z₀)`.
    pub theta: f64,
}

/// Projects `z` onto `∂S` along the exterior conformal coordinate
/// (`z ↦ ψ(e^{i arg φ(z)})`).  Fails when `z` is further than `tol` away.
pub fn snap_to_boundary(d: &Droplet, z: C64, tol: f64) -> Result<BoundaryPoint> {
    let w = d
        .exterior_map(z)
        .map_err(|e| Error::Geometry(format!("cannot locate {z} relative to ∂S: {e}")))?;
    let theta = w.arg();
    let z0 = d.boundary_point(theta);
    let moved = (z0 - z).norm();
    if moved > tol {
        return Err(Error::Geometry(format!(
            "base point {z} is {moved:.3e} away from ∂S (tolerance {tol:.1e})"
        )));
    }
    Ok(BoundaryPoint {
        z0,
        normal: d.normal(theta)?,
        snapped_by: moved,
        theta,
    })
}

/// `ρ_m` along a grid of `ξ` values.
#[derive(Clone, Debug, Serialize)]
pub struct DensityProfile {
    pub z0: C64,
    pub normal: C64,
    pub xi: Vec<C64>,
    pub rho: Vec<f64>,
    pub m: f64,
    pub provenance: String,
}

impl DensityProfile {
    /// Map `ξ ↦ z_m(ξ)` used to build this profile.
    pub fn point(&self, xi: C64, laplacian: f64) -> C64 {
        self.z0 + self.normal * xi / (2.0 * self.m * laplacian).sqrt()
    }
}

/// Evaluates the rescaled density at `z₀` (snapped to `∂S`, tolerance `tol`).
pub fn rescaled_density(
    src: &dyn DensitySource,
    d: &Droplet,
    z0: C64,
    xi: &[C64],
    tol: f64,
) -> Result<DensityProfile> {
    let bp = snap_to_boundary(d, z0, tol)?;
    let lap = src.potential().laplacian(bp.z0)?;
    if !(lap > 0.0) {
        return Err(Error::Geometry(format!("ΔQ(z₀) = {lap} is not positive")));
    }
    let m = src.m();
    let scale = 2.0 * m * lap;
    let rho = xi
        .par_iter()
        .map(|&x| {
            let z = bp.z0 + bp.normal * x / scale.sqrt();
            Ok(src.weighted_density(z)? / scale)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(DensityProfile {
        z0: bp.z0,
        normal: bp.normal,
        xi: xi.to_vec(),
        rho,
        m,
        provenance: src.provenance().into(),
    })
}

/// Evenly spaced real `ξ` values.
pub fn real_grid(lo: f64, hi: f64, n: usize) -> Vec<C64> {
    if n == 1 {
        return vec![C64::new(0.5 * (lo + hi), 0.0)];
    }
    (0..n)
        .map(|i| C64::new(lo + (hi - lo) * i as f64 / (n - 1) as f64, 0.0))
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct ErfRow {
    pub xi: C64,
    pub rho: f64,
    pub erf_ref: f64,
    pub abs_err: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ErfComparison {
    pub sup_error: f64,
    pub rows: Vec<ErfRow>,
}

/// `sup_ξ |ρ_m(ξ) - erf_tail(2 Re ξ)|` with the per-point table.
pub fn compare_erf(profile: &DensityProfile) -> ErfComparison {
    let rows: Vec<ErfRow> = profile
        .xi
        .iter()
        .zip(&profile.rho)
        .map(|(&xi, &rho)| {
            let erf_ref = erf_tail(2.0 * xi.re);
            ErfRow {
                xi,
                rho,
                erf_ref,
                abs_err: (rho - erf_ref).abs(),
            }
        })
        .collect();
    let sup_error = rows.iter().map(|r| r.abs_err).fold(0.0, f64::max);
    ErfComparison { sup_error, rows }
}

/// `γ₀ = |φ'(z₀)| / √(2ΔQ(z₀))`: the step of the boundary Riemann sum.
pub fn riemann_step(d: &Droplet, bp: &BoundaryPoint) -> Result<f64> {
    let w = C64::from_polar(1.0, bp.theta);
    let dpsi = d.psi.eval_deriv(w)?;
    Ok(1.0 / (dpsi.norm() * (2.0 * d.potential.laplacian(bp.z0)?).sqrt()))
}

/// `Σ_{j=1}^{J} γ₀ m^{-1/2} e^{-½(2Re ξ + jγ₀m^{-1/2})²} / √(2π)` with
/// `J = m - m₁`: the Gaussian-sum form of the boundary density.
pub fn gaussian_sum_density(xi: C64, m: usize, gamma0: f64) -> f64 {
    let h = gamma0 / (m as f64).sqrt();
    let terms = m - window_start(m);
    let mut s = 0.0;
    for j in 1..=terms {
        let a = 2.0 * xi.re + j as f64 * h;
        s += (-0.5 * a * a).exp();
    }
    s * h / (2.0 * std::f64::consts::PI).sqrt()
}

/// `B(z) = |K(z, z₀)|² e^{-2mQ(z)} / K(z₀, z₀)` on a set of points.
#[derive(Clone, Debug, Serialize)]
pub struct BerezinField {
    pub z0: C64,
    pub points: Vec<C64>,
    pub values: Vec<f64>,
}

pub fn berezin_density(src: &dyn KernelSource, z0: C64, points: &[C64]) -> Result<BerezinField> {
    let k00 = src.weighted_kernel(z0, z0)?.re;
    if !(k00 > 0.0) {
        return Err(Error::NonPositive(format!(
            "K(z₀, z₀) = {k00} at z₀ = {z0}"
        )));
    }
    let values = points
        .par_iter()
        .map(|&z| Ok(src.weighted_kernel(z, z0)?.norm_sqr() / k00))
        .collect::<Result<Vec<f64>>>()?;
    Ok(BerezinField {
        z0,
        points: points.to_vec(),
        values,
    })
}

/// Square grid of `n × n` points centred at `c` with half-width `h`
/// (row-major in `y`), and the area element `dA = dx dy / π` of one cell.
pub fn square_grid(c: C64, h: f64, n: usize) -> (Vec<C64>, f64) {
    let step = 2.0 * h / (n - 1) as f64;
    let mut pts = Vec::with_capacity(n * n);
    for iy in 0..n {
        for ix in 0..n {
            pts.push(c + C64::new(-h + ix as f64 * step, -h + iy as f64 * step));
        }
    }
    (pts, step * step / std::f64::consts::PI)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erf_reference_values() {
        assert!((erf_tail(0.0) - 0.5).abs() < 1e-15);
        assert!((erf_tail(-12.0) - 1.0).abs() < 1e-12);
        assert!(erf_tail(12.0) < 1e-12);
    }

    #[test]
    fn ginibre_bulk_edge_and_exterior() {
        let d = Droplet::compute(&Potential::ginibre(), 1.0, &DropletOptions::default()).unwrap();
        let src = GinibreKernel::new(200);
        let xi = [
            C64::new(-10.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(10.0, 0.0),
        ];
        let p = rescaled_density(&src, &d, C64::new(1.0, 0.0), &xi, 1e-8).unwrap();
        assert!((p.rho[0] - 1.0).abs() < 1e-3);
        assert!((p.rho[1] - 0.5).abs() < 0.05);
        assert!(p.rho[2] < 1e-10);
    }

    #[test]
    fn off_boundary_base_point_is_rejected() {
        let d = Droplet::compute(&Potential::ginibre(), 1.0, &DropletOptions::default()).unwrap();
        let src = GinibreKernel::new(20);
        let e = rescaled_density(&src, &d, C64::new(1.3, 0.0), &[C64::new(0.0, 0.0)], 1e-3)
            .unwrap_err();
        assert!(matches!(e, Error::Geometry(_)));
    }

    #[test]
    fn ginibre_density_matches_kernel_sum() {
        let src = GinibreKernel::new(60);
        for z in [C64::new(0.9, 0.3), C64::new(1.1, 0.0), C64::new(0.2, 0.0)] {
            let a = src.weighted_density(z).unwrap();
            let b = src.weighted_kernel(z, z).unwrap().re;
            assert!((a - b).abs() < 1e-10 * a.max(1e-300), "{a} {b}");
        }
    }

    #[test]
    fn expansion_sum_agrees_with_exact_kernel() {
        let p = Potential::ginibre();
        let opts = DropletOptions::default();
        let d = Droplet::compute(&p, 1.0, &opts).unwrap();
        // for |z| < ρ₀″ some window degrees sit in their cut-off band, where the
        // truncated sum is not meant to reproduce the kernel; at m = 64 that is
        // ξ < -1.2, so the pointwise comparison stays to the right of it
        let xi = real_grid(-1.0, 3.0, 17);
        let z0 = C64::new(1.0, 0.0);
        let m = 64;
        // like-for-like: same degree window on both sides
        let win = ExpansionDensity::build(&p, m, 1, &opts).unwrap();
        let mut exact_win = GinibreKernel::new(m);
        exact_win.count = m;
        let mut below = GinibreKernel::new(m);
        below.count = window_start(m);
        let a = rescaled_density(&win, &d, z0, &xi, 1e-8).unwrap();
        let b = rescaled_density(&exact_win, &d, z0, &xi, 1e-8).unwrap();
        let c = rescaled_density(&below, &d, z0, &xi, 1e-8).unwrap();
        for i in 0..xi.len() {
            assert!(
                (a.rho[i] - (b.rho[i] - c.rho[i])).abs() < 2e-3,
                "ξ = {}",
                xi[i]
            );
        }
        // every degree: the full density
        let full = ExpansionDensity::build_range(&p, m, 1..m, 1, &opts).unwrap();
        let f = rescaled_density(&full, &d, z0, &xi, 1e-8).unwrap();
        let sup = f
            .rho
            .iter()
            .zip(&b.rho)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(sup <= 0.05, "{sup}");
    }

    #[test]
    fn berezin_is_a_probability_density() {
        let src = GinibreKernel::new(16);
        let z0 = C64::new(1.0, 0.0);
        // the density spreads along the whole unit circle, so the box must enclose it
        let (pts, da) = square_grid(C64::new(0.0, 0.0), 2.5, 201);
        let f = berezin_density(&src, z0, &pts).unwrap();
        assert!(f.values.iter().all(|&v| v >= 0.0));
        let total: f64 = f.values.iter().sum::<f64>() * da;
        assert!((total - 1.0).abs() < 1e-3, "{total}");
    }
}

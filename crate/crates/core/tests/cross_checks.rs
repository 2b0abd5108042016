//! Cross-module checks against closed forms and the reference polynomials.

use num_complex::Complex64 as C64;
use planar_opoly::droplet::{Droplet, DropletOptions};
use planar_opoly::expansion::QuasiPolynomial;
use planar_opoly::flow::{delta_m, flow_residual, FlowFamily, FlowOptions};
use planar_opoly::oracle::{compute_moments, gram_schmidt, GinibreExact, QuadratureConfig};
use planar_opoly::potential::Potential;
use planar_opoly::universality::{compare_erf, real_grid, rescaled_density, GinibreKernel};

#[test]
fn ginibre_leading_coefficient_matches_stirling_calibration() {
    let q = QuasiPolynomial::build(
        &Potential::ginibre(),
        50,
        50.0,
        0,
        &DropletOptions::default(),
    )
    .unwrap();
    let b0 = q.coeffs.b[0].boundary(64);
    let expect = (2.0 * std::f64::consts::PI).powf(-0.25);
    assert!((b0.coeff(0).re - expect).abs() < 1e-12);
    assert!(
        b0.project(planar_opoly::circlefield::Subspace::ExteriorZero)
            .l2_norm()
            < 1e-12
    );
}

#[test]
fn oracle_reproduces_ginibre_polynomials() {
    let m = 12.0;
    let p = Potential::ginibre();
    let g = compute_moments(&p, m, 12, &QuadratureConfig::default(), 60).unwrap();
    let ops = gram_schmidt(&g, &p).unwrap();
    let ex = GinibreExact::new(m);
    for n in [0usize, 5, 12] {
        for z in [C64::new(1.3, 0.4), C64::new(-0.2, 0.9)] {
            let a = ops.log_abs(n, z);
            let b = ex.log_abs(n, z);
            assert!((a - b).abs() < 1e-12, "n={n}: {a} vs {b}");
        }
    }
}

#[test]
fn edge_density_approaches_the_erf_profile() {
    let d = Droplet::compute(&Potential::ginibre(), 1.0, &DropletOptions::default()).unwrap();
    let xi = real_grid(-3.0, 3.0, 61);
    let errs: Vec<f64> = [50usize, 200, 800]
        .iter()
        .map(|&m| {
            compare_erf(
                &rescaled_density(&GinibreKernel::new(m), &d, C64::new(1.0, 0.0), &xi, 1e-8)
                    .unwrap(),
            )
            .sup_error
        })
        .collect();
    assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    // the approach is like m^{-1/2}
    let rate = (errs[0] / errs[2]).ln() / 16f64.ln();
    assert!((rate - 0.5).abs() < 0.15, "{rate}");
}

#[test]
fn wrong_leading_coefficient_shifts_the_flow_residual() {
    // |B₀|² enters quadratically: ×1.1 raises the t = 0 density by 21%
    let p = Potential::ginibre();
    let m = 128.0;
    let d = Droplet::compute(&p, 1.0, &DropletOptions::default()).unwrap();
    let fam = FlowFamily::solve(&d, delta_m(m), &FlowOptions::default()).unwrap();
    let q = QuasiPolynomial::build(&p, 128, m, 0, &DropletOptions::default()).unwrap();
    let mut bad = q.clone();
    bad.coeffs.b[0] = bad.coeffs.b[0].scale(C64::new(1.1, 0.0));
    let peak = m.sqrt() / (4.0 * std::f64::consts::PI).sqrt();
    let good = flow_residual(&q, &fam, 0.0).unwrap().coeff(0).re;
    let off = flow_residual(&bad, &fam, 0.0).unwrap().coeff(0).re;
    assert!(good.abs() < 1e-10 * peak, "{good}");
    assert!(
        ((off - good) / peak - 0.21).abs() < 1e-9,
        "{}",
        (off - good) / peak
    );
}

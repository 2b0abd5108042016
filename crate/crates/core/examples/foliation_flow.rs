//! The leading-order foliation flow for an ellipse droplet: level curves of
//! the modified weight, the first flow coefficient, and (for Ginibre) the
//! flow identity and foliation integral.

use num_complex::Complex64 as C64;
use planar_opoly::droplet::{Droplet, DropletOptions};
use planar_opoly::expansion::QuasiPolynomial;
use planar_opoly::flow::{delta_m, flow_residual_sup, foliation_integral, FlowFamily, FlowOptions};
use planar_opoly::potential::Potential;

fn main() -> planar_opoly::Result<()> {
    let p = Potential::hele_shaw(0.5).with_poly(2, C64::new(0.1, 0.0));
    let d = Droplet::compute(&p, 1.0, &DropletOptions::default())?;
    let fam = FlowFamily::solve(&d, 0.2, &FlowOptions::default())?;
    println!(
        "ellipse: {} Picard iterations, level residual {:.2e}",
        fam.increments.len(),
        fam.level_residual.iter().cloned().fold(0.0, f64::max)
    );
    // the potential is symmetric under conjugation, so the coefficients are real
    for t in [-0.2, 0.0, 0.2] {
        let s = fam.psi_series(t)?;
        println!(
            "  t = {t:>5}: ψ_t = {:.6} ζ {:+.6} {:+.6}/ζ + …",
            s.coeff(-1).re,
            s.coeff(0).re,
            s.coeff(1).re
        );
    }
    println!(
        "  ψ̂₀₁ = {:.6} ζ {:+.6}/ζ + …",
        fam.psi01.coeff(-1).re,
        fam.psi01.coeff(1).re
    );

    let g = Potential::ginibre();
    let dg = Droplet::compute(&g, 1.0, &DropletOptions::default())?;
    for m in [64usize, 128, 256] {
        let mf = m as f64;
        let dl = delta_m(mf);
        let fam = FlowFamily::solve(&dg, dl, &FlowOptions::default())?;
        let q = QuasiPolynomial::build(&g, m, mf, 0, &DropletOptions::default())?;
        let ts: Vec<f64> = (0..=100).map(|i| -dl + 0.02 * dl * i as f64).collect();
        println!(
            "Ginibre m = {m}: sup residual {:.4}, foliation integral {:.6}",
            flow_residual_sup(&q, &fam, &ts)?,
            foliation_integral(&q, &fam)?
        );
    }
    Ok(())
}

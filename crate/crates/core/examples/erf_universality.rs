//! The rescaled Ginibre edge density against `erf(2ξ)` in the tail
//! convention.

use num_complex::Complex64 as C64;
use planar_opoly::droplet::{Droplet, DropletOptions};
use planar_opoly::potential::Potential;
use planar_opoly::universality::{compare_erf, real_grid, rescaled_density, GinibreKernel};

fn main() -> planar_opoly::Result<()> {
    let d = Droplet::compute(&Potential::ginibre(), 1.0, &DropletOptions::default())?;
    let xi = real_grid(-3.0, 3.0, 13);
    for m in [50usize, 200, 800] {
        let prof = rescaled_density(&GinibreKernel::new(m), &d, C64::new(1.0, 0.0), &xi, 1e-8)?;
        let cmp = compare_erf(&prof);
        println!("m = {m:>4}: sup |ρ - erf| = {:.4e}", cmp.sup_error);
        if m == 800 {
            for r in &cmp.rows {
                println!(
                    "  ξ = {:>5.2}  ρ = {:.6}  erf = {:.6}",
                    r.xi.re, r.rho, r.erf_ref
                );
            }
        }
    }
    Ok(())
}

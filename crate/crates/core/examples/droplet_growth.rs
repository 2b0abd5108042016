//! Laplacian growth of the droplets of `½|z|² - 2^{-1/2} log|z - 1|`:
//! prints the conformal radius, enclosed mass and boundary speed per τ.

use num_complex::Complex64 as C64;
use planar_opoly::droplet::{Droplet, DropletOptions};
use planar_opoly::potential::Potential;

fn main() -> planar_opoly::Result<()> {
    let q = Potential::hele_shaw(0.5).with_log_pole(-(0.5f64).sqrt(), C64::new(1.0, 0.0));
    println!(
        "{:>6} {:>12} {:>12} {:>14} {:>14}",
        "tau", "radius", "area/pi", "speed(θ=0)", "speed(θ=π)"
    );
    for k in 1..=8 {
        let tau = 0.25 * k as f64;
        let d = Droplet::compute(&q, tau, &DropletOptions::default())?;
        println!(
            "{tau:>6.2} {:>12.8} {:>12.8} {:>14.8} {:>14.8}",
            d.conformal_radius(),
            d.area_over_pi(),
            d.boundary_speed(0.0)?,
            d.boundary_speed(std::f64::consts::PI)?
        );
    }
    Ok(())
}

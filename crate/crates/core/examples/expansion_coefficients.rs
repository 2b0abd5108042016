//! Coefficients `B_j`, `c_j` of the quasipolynomial expansion for the
//! ellipse potential `½|z|² + 0.1 Re z²`, printed as JSON.

use num_complex::Complex64 as C64;
use planar_opoly::droplet::{Droplet, DropletOptions};
use planar_opoly::expansion::{expand, CoefficientPayload};
use planar_opoly::potential::Potential;

fn main() -> planar_opoly::Result<()> {
    let p = Potential::hele_shaw(0.5).with_poly(2, C64::new(0.1, 0.0));
    let d = Droplet::compute(&p, 1.0, &DropletOptions::default())?;
    let e = expand(&d, 2)?;
    let mut payload = CoefficientPayload::from(&e);
    for b in payload.b.iter_mut() {
        b.truncate(8);
    }
    payload.h_r.truncate(8);
    println!(
        "{}",
        serde_json::to_string_pretty(&payload).expect("serializable")
    );
    Ok(())
}

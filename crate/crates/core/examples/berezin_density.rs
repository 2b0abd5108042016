//! Berezin density of the Ginibre kernel at a boundary point: a unit mass
//! concentrated along the unit circle.

use num_complex::Complex64 as C64;
use planar_opoly::universality::{berezin_density, square_grid, GinibreKernel};

fn main() -> planar_opoly::Result<()> {
    let src = GinibreKernel::new(64);
    let z0 = C64::new(1.0, 0.0);
    let (pts, da) = square_grid(C64::new(0.0, 0.0), 2.5, 301);
    let f = berezin_density(&src, z0, &pts)?;
    let total: f64 = f.values.iter().sum::<f64>() * da;
    let (imax, vmax) = f
        .values
        .iter()
        .enumerate()
        .fold((0, 0.0), |a, (i, &v)| if v > a.1 { (i, v) } else { a });
    println!(
        "total mass {total:.6}; peak {vmax:.4} at {:.4}",
        f.points[imax]
    );
    for x in [0.0, 0.5, 0.9, 1.0, 1.1] {
        let z = C64::new(x, 0.0);
        let v = berezin_density(&src, z0, &[z])?.values[0];
        println!("  z = {x:.2}: {v:.6e}");
    }
    Ok(())
}

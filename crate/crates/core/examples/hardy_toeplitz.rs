//! Hardy projections, the Herglotz transform and a Toeplitz kernel solve.

use num_complex::Complex64 as C64;
use planar_opoly::circlefield::{
    herglotz, toeplitz_defect, toeplitz_solve, CircleFunction, Subspace,
};

fn main() -> planar_opoly::Result<()> {
    let n = 256;
    let f = CircleFunction::from_fn(n, |t| {
        C64::new(
            (3.0 * t).cos() + 0.5 * (t.sin()).exp(),
            0.2 * (2.0 * t).sin(),
        )
    });
    let plus = f.project(Subspace::Analytic);
    let minus = f.project(Subspace::ExteriorZero);
    println!(
        "‖P₊f + P₋,₀f - f‖ = {:.2e}",
        plus.add(&minus).sub(&f).l2_norm()
    );

    let real = f.re();
    let h = herglotz(&real)?;
    println!(
        "Herglotz: ‖Re H - f‖_∞ = {:.2e}, H(∞) = {:.6}",
        h.boundary(n).re().sub(&real).sup_norm(),
        h.at_infinity()
    );

    let u = CircleFunction::from_fn(n, |t| C64::new(0.3 * t.cos(), 0.0));
    let v = CircleFunction::from_fn(n, |t| C64::from_polar(0.2, 2.0 * t));
    let sol = toeplitz_solve(&u, &v, &f, C64::new(1.0, 0.0))?;
    let d = toeplitz_defect(&u, &v, &f, &sol);
    println!(
        "Toeplitz solve: exterior defect {:.2e}, analytic defect {:.2e}",
        d.exterior, d.analytic
    );
    Ok(())
}

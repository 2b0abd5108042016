//! Laplace-method expansion of `∫ e^{-ω(y²/2 + 0.2y³)} dy` against
//! quadrature: each extra term gains a factor `ω^{-1}`.

use planar_opoly::laplace::{laplace_expand, Polynomial1D};
use planar_opoly::quad::composite_gl;

fn main() -> planar_opoly::Result<()> {
    let v = Polynomial1D::from_shifted(0.0, &[0.0, 0.0, 0.5, 0.2]);
    let u = Polynomial1D { coeffs: vec![1.0] };
    let (xs, ws) = composite_gl(-1.5, 10.0, 800, 20);
    println!(
        "{:>6} {:>14} {:>12} {:>12} {:>12}",
        "omega", "quadrature", "err k=1", "err k=2", "err k=3"
    );
    for omega in [50.0, 100.0, 200.0, 400.0] {
        let quad: f64 = xs
            .iter()
            .zip(&ws)
            .map(|(&x, &w)| w * (-omega * (0.5 * x * x + 0.2 * x * x * x)).exp())
            .sum();
        let errs: Vec<f64> = (1..=3)
            .map(|k| laplace_expand(&v, &u, 0.0, omega, k).map(|e| (e.value - quad).abs()))
            .collect::<planar_opoly::Result<_>>()?;
        println!(
            "{omega:>6} {quad:>14.10} {:>12.3e} {:>12.3e} {:>12.3e}",
            errs[0], errs[1], errs[2]
        );
    }
    Ok(())
}

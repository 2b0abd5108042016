//! Quasipolynomials against the exact Ginibre polynomials
//! `m^{(n+1)/2} zⁿ/√n!`: the error falls by 2^{κ+1} per doubling of m.

use num_complex::Complex64 as C64;
use planar_opoly::droplet::DropletOptions;
use planar_opoly::expansion::QuasiPolynomial;
use planar_opoly::oracle::GinibreExact;
use planar_opoly::potential::Potential;

fn main() -> planar_opoly::Result<()> {
    println!("{:>5} {:>14} {:>14}", "m", "err κ=0", "err κ=1");
    for m in [16usize, 32, 64, 128] {
        let mf = m as f64;
        let ex = GinibreExact::new(mf);
        let mut row = Vec::new();
        for kappa in [0, 1] {
            let q = QuasiPolynomial::build(
                &Potential::ginibre(),
                m,
                mf,
                kappa,
                &DropletOptions::default(),
            )?;
            let mut err = 0.0f64;
            for a in 0..16 {
                let z = C64::from_polar(2.0, 0.4 * a as f64);
                let lq = q.eval_log(z)?.re;
                err = err.max((lq - ex.log_abs(m, z)).exp_m1().abs());
            }
            row.push(err);
        }
        println!("{m:>5} {:>14.4e} {:>14.4e}", row[0], row[1]);
    }
    Ok(())
}

//! Property tests for the invariants shared by the numerical modules.

use num_complex::Complex64 as C64;
use planar_opoly::circlefield::{
    herglotz, toeplitz_defect, toeplitz_solve, CircleFunction, Subspace,
};
use planar_opoly::droplet::{Droplet, DropletOptions};
use planar_opoly::laplace::{laplace_expand, Polynomial1D};
use planar_opoly::potential::Potential;
use planar_opoly::universality::erf_tail;
use proptest::prelude::*;

const N: usize = 256;

fn band_limited(band: usize, amp: f64) -> impl Strategy<Value = CircleFunction> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 2 * band + 1).prop_map(move |c| {
        let mut f = CircleFunction::zeros(N);
        for (i, (re, im)) in c.into_iter().enumerate() {
            let k = i as i64 - band as i64;
            f.set(k, C64::new(re, im) * (amp / (1.0 + (k * k) as f64)));
        }
        f
    })
}

const SPACES: [Subspace; 4] = [
    Subspace::Analytic,
    Subspace::Exterior,
    Subspace::ExteriorZero,
    Subspace::AnalyticZero,
];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn projections_are_idempotent_and_complementary(f in band_limited(100, 1.0)) {
        for sp in SPACES {
            let p = f.project(sp);
            prop_assert!(p.project(sp).sub(&p).l2_norm() <= 1e-13);
        }
        let split = f.project(Subspace::Analytic).add(&f.project(Subspace::ExteriorZero));
        prop_assert!(split.sub(&f).l2_norm() <= 1e-13);
        let split = f.project(Subspace::Exterior).add(&f.project(Subspace::AnalyticZero));
        prop_assert!(split.sub(&f).l2_norm() <= 1e-13);
    }

    #[test]
    fn sampling_is_invertible(f in band_limited(60, 1.0)) {
        let back = CircleFunction::from_samples(N, &f.samples(2 * N));
        prop_assert!(back.sub(&f).l2_norm() <= 1e-13 * (1.0 + f.l2_norm()));
    }

    #[test]
    fn herglotz_has_the_prescribed_real_part(f in band_limited(40, 1.0)) {
        let real = f.re();
        let h = herglotz(&real).unwrap();
        let b = h.boundary(N);
        prop_assert!(b.re().sub(&real).sup_norm() <= 1e-12);
        prop_assert!(h.at_infinity().im.abs() <= 1e-15);
        prop_assert!(b.project(Subspace::AnalyticZero).l2_norm() <= 1e-15);
    }

    #[test]
    fn toeplitz_solutions_meet_membership(
        u in band_limited(8, 0.5),
        v in band_limited(8, 0.5),
        f in band_limited(8, 1.0),
        c in (-1.0f64..1.0, -1.0f64..1.0),
    ) {
        let u = u.re();
        let v = v.project(Subspace::Analytic);
        let sol = toeplitz_solve(&u, &v, &f, C64::new(c.0, c.1)).unwrap();
        let d = toeplitz_defect(&u, &v, &f, &sol);
        prop_assert!(d.exterior <= 1e-10 && d.analytic <= 1e-10, "{d:?}");
    }

    #[test]
    fn gaussian_laplace_integral_is_exact(omega in 1.0f64..500.0, s in 0.2f64..5.0) {
        let v = Polynomial1D::from_shifted(0.0, &[0.0, 0.0, 0.5 * s]);
        let u = Polynomial1D { coeffs: vec![1.0] };
        let e = laplace_expand(&v, &u, 0.0, omega, 3).unwrap();
        let exact = (2.0 * std::f64::consts::PI / (omega * s)).sqrt();
        prop_assert!((e.value - exact).abs() <= 1e-13 * exact);
    }

    #[test]
    fn erf_profile_is_a_reflected_tail(x in -8.0f64..8.0) {
        prop_assert!((erf_tail(x) + erf_tail(-x) - 1.0).abs() <= 1e-15);
        prop_assert!(erf_tail(x) >= erf_tail(x + 0.01));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    /// The droplet of `½|z|² + Re(t z²)` is an ellipse of area `τ` (units of π)
    /// and its modified weight vanishes to second order on 𝕋.
    #[test]
    fn ellipse_droplets_have_mass_tau(t in -0.15f64..0.15, tau in 0.3f64..1.5) {
        let p = Potential::hele_shaw(0.5).with_poly(2, C64::new(t, 0.0));
        let d = Droplet::compute(&p, tau, &DropletOptions::default()).unwrap();
        prop_assert!((d.area_over_pi() - tau).abs() <= 1e-9);
        let jet = d.modified_weight(4).unwrap();
        let (r0, r1) = jet.vanishing_defect();
        prop_assert!(r0 <= 1e-10 && r1 <= 1e-10);
        prop_assert!(jet.second().samples(2 * d.n_modes).iter().all(|v| v.re > 0.0));
    }
}

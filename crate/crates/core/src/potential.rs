//! External potentials `Q : ℂ → ℝ ∪ {+∞}` and their admissibility checks.
//!
//! Two families are supported: radially symmetric profiles
//! `Q(z) = q(|z|)` with `q(r) = Σ c_i r^{e_i} + c_log log r`, and
//! Hele-Shaw potentials `Q(z) = α|z|² + Σ c_j log|z - a_j| + Σ Re(t_k z^k)`,
//! whose Laplacian is the constant `α` away from the poles.

use crate::error::{Error, Result};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// `q(r) = Σ coeff · r^power + log_coeff · log r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadialProfile {
    /// `(power, coeff)` pairs.
    pub terms: Vec<(f64, f64)>,
    #[serde(default)]
    pub log_coeff: f64,
}

/// A logarithmic singularity `c log|z - a|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogPole {
    pub c: f64,
    pub a: C64,
}

/// A harmonic polynomial term `Re(t z^k)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolyTerm {
    pub k: u32,
    pub t: C64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeleShawField {
    pub alpha: f64,
    #[serde(default)]
    pub log_poles: Vec<LogPole>,
    #[serde(default)]
    pub poly: Vec<PolyTerm>,
}

/// An external potential, tagged by family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "family",
    content = "params",
    rename_all = "snake_case",
    deny_unknown_fields
)]
pub enum Potential {
    Radial(RadialProfile),
    HeleShaw(HeleShawField),
}

/// Outcome of [`Potential::check_admissibility`].
#[derive(Clone, Debug, PartialEq)]
pub struct AdmissibilityReport {
    pub tau: f64,
    /// Smallest `ΔQ` sampled on an annulus around the expected droplet edge.
    pub min_laplacian: f64,
    /// `min Q(z)/log|z| - τ` over large circles; must be positive.
    pub growth_margin: f64,
    /// Whether every sample in the annulus was finite with `ΔQ > 0`.
    pub boundary_smooth: bool,
}

impl AdmissibilityReport {
    pub fn is_admissible(&self) -> bool {
        self.min_laplacian > 0.0 && self.growth_margin > 0.0 && self.boundary_smooth
    }
}

impl Potential {
    /// `Q(z) = ½|z|²`, the Ginibre potential.
    pub fn ginibre() -> Self {
        Potential::Radial(RadialProfile {
            terms: vec![(2.0, 0.5)],
            log_coeff: 0.0,
        })
    }

    /// `Q(z) = α|z|²` plus nothing; extend with [`Potential::with_log_pole`]
    /// and [`Potential::with_poly`].
    pub fn hele_shaw(alpha: f64) -> Self {
        Potential::HeleShaw(HeleShawField {
            alpha,
            log_poles: vec![],
            poly: vec![],
        })
    }

    pub fn with_log_pole(mut self, c: f64, a: C64) -> Self {
        if let Potential::HeleShaw(h) = &mut self {
            h.log_poles.push(LogPole { c, a });
        }
        self
    }

    pub fn with_poly(mut self, k: u32, t: C64) -> Self {
        if let Potential::HeleShaw(h) = &mut self {
            h.poly.push(PolyTerm { k, t });
        }
        self
    }

    pub fn is_radial(&self) -> bool {
        matches!(self, Potential::Radial(_))
    }

    /// Validates parameters (finite numbers, positive `α`, `k >= 1`).
    pub fn validate(&self) -> Result<()> {
        match self {
            Potential::Radial(p) => {
                if p.terms.is_empty() {
                    return Err(Error::Domain("radial profile has no terms".into()));
                }
                if p.terms
                    .iter()
                    .any(|(e, c)| !e.is_finite() || !c.is_finite() || *e <= 0.0)
                    || !p.log_coeff.is_finite()
                {
                    return Err(Error::Domain(
                        "radial profile needs finite terms with positive powers".into(),
                    ));
                }
            }
            Potential::HeleShaw(h) => {
                if !(h.alpha > 0.0) || !h.alpha.is_finite() {
                    return Err(Error::NonPositive(format!(
                        "Hele-Shaw coefficient alpha = {}",
                        h.alpha
                    )));
                }
                if h.poly
                    .iter()
                    .any(|t| t.k == 0 || !t.t.re.is_finite() || !t.t.im.is_finite())
                {
                    return Err(Error::Domain("polynomial terms need degree >= 1".into()));
                }
                if h.log_poles
                    .iter()
                    .any(|p| !p.c.is_finite() || !p.a.re.is_finite() || !p.a.im.is_finite())
                {
                    return Err(Error::Domain("log pole parameters must be finite".into()));
                }
            }
        }
        Ok(())
    }

    /// Radial profile `q^{(p)}(r)` (radial family only).
    pub fn q_deriv(&self, r: f64, p: usize) -> f64 {
        let Potential::Radial(prof) = self else {
            panic!("q_deriv on a non-radial potential")
        };
        let mut s = 0.0;
        for &(e, c) in &prof.terms {
            let fall: f64 = (0..p).map(|i| e - i as f64).product();
            if fall != 0.0 {
                s += c * fall * r.powf(e - p as f64);
            }
        }
        if prof.log_coeff != 0.0 {
            if p == 0 {
                s += prof.log_coeff * r.ln();
            } else {
                let f: f64 = (1..p).map(|i| i as f64).product();
                let sign = if (p - 1) % 2 == 0 { 1.0 } else { -1.0 };
                s += prof.log_coeff * sign * f / r.powi(p as i32);
            }
        }
        s
    }

    fn pole_check(&self, z: C64) -> Result<()> {
        if let Potential::HeleShaw(h) = self {
            for p in &h.log_poles {
                if (z - p.a).norm() == 0.0 {
                    return Err(Error::Domain(format!("evaluation at log pole {}", p.a)));
                }
            }
        }
        if let Potential::Radial(p) = self {
            if p.log_coeff != 0.0 && z.norm() == 0.0 {
                return Err(Error::Domain(
                    "evaluation at the origin of a logarithmic profile".into(),
                ));
            }
        }
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::Domain("non-finite argument".into()));
        }
        Ok(())
    }

    /// `Q(z)`.
    pub fn eval(&self, z: C64) -> Result<f64> {
        self.pole_check(z)?;
        Ok(match self {
            Potential::Radial(_) => self.q_deriv(z.norm(), 0),
            Potential::HeleShaw(h) => {
                let mut s = h.alpha * z.norm_sqr();
                for p in &h.log_poles {
                    s += p.c * (z - p.a).norm().ln();
                }
                for t in &h.poly {
                    s += (t.t * z.powu(t.k)).re;
                }
                s
            }
        })
    }

    /// `∂Q(z) = ½(∂_x - i∂_y) Q`.
    pub fn dz(&self, z: C64) -> Result<C64> {
        self.pole_check(z)?;
        Ok(match self {
            Potential::Radial(_) => {
                let r = z.norm();
                if r == 0.0 {
                    C64::new(0.0, 0.0)
                } else {
                    z.conj() * (self.q_deriv(r, 1) / (2.0 * r))
                }
            }
            Potential::HeleShaw(h) => z.conj() * h.alpha + self.harmonic_dz(z) * 0.5,
        })
    }

    /// Derivative `h'(z)` of the holomorphic function with `Re h` equal to
    /// the harmonic part of a Hele-Shaw potential (zero for radial ones).
    pub fn harmonic_dz(&self, z: C64) -> C64 {
        match self {
            Potential::Radial(_) => C64::new(0.0, 0.0),
            Potential::HeleShaw(h) => {
                let mut s = C64::new(0.0, 0.0);
                for p in &h.log_poles {
                    s += p.c / (z - p.a);
                }
                for t in &h.poly {
                    s += t.t * (t.k as f64) * z.powu(t.k - 1);
                }
                s
            }
        }
    }

    /// `ΔQ = ∂∂̄Q` (a quarter of the Euclidean Laplacian).
    pub fn laplacian(&self, z: C64) -> Result<f64> {
        self.pole_check(z)?;
        Ok(match self {
            Potential::Radial(_) => {
                let r = z.norm();
                if r == 0.0 {
                    // limit of ¼(q'' + q'/r) at the origin for smooth profiles
                    let r = 1e-8;
                    0.25 * (self.q_deriv(r, 2) + self.q_deriv(r, 1) / r)
                } else {
                    0.25 * (self.q_deriv(r, 2) + self.q_deriv(r, 1) / r)
                }
            }
            Potential::HeleShaw(h) => h.alpha,
        })
    }

    /// A critical point of `Q` found by Newton iteration (the origin for
    /// radial profiles).
    pub fn minimizer(&self) -> Result<C64> {
        let Potential::HeleShaw(h) = self else {
            return Ok(C64::new(0.0, 0.0));
        };
        // ∂Q = α z̄ + ½h'(z) = 0; Newton on the real 2-vector.
        let mut z = C64::new(0.0, 0.0);
        if h.log_poles.iter().any(|p| p.a.norm() < 1e-12) {
            z = C64::new(0.1, 0.0);
        }
        for _ in 0..200 {
            let g = self.dz(z)?;
            if g.norm() < 1e-15 {
                return Ok(z);
            }
            let eps = 1e-7;
            let gx = (self.dz(z + eps)? - self.dz(z - eps)?) / (2.0 * eps);
            let gy =
                (self.dz(z + C64::new(0.0, eps))? - self.dz(z - C64::new(0.0, eps))?) / (2.0 * eps);
            // Solve [gx gy] [dx dy]^T = -g over the reals.
            let (a, b, c, d) = (gx.re, gy.re, gx.im, gy.im);
            let det = a * d - b * c;
            if det.abs() < 1e-300 {
                break;
            }
            let dx = (-g.re * d + g.im * b) / det;
            let dy = (-a * g.im + c * g.re) / det;
            let mut step = C64::new(dx, dy);
            if step.norm() > 0.5 {
                step *= 0.5 / step.norm();
            }
            z += step;
        }
        let g = self.dz(z)?;
        if g.norm() < 1e-10 {
            Ok(z)
        } else {
            Err(Error::NonConvergence {
                stage: "potential minimizer",
                iterations: 200,
                residual: g.norm(),
            })
        }
    }

    /// Rough droplet center and radius at time `τ`, used to place the
    /// admissibility annulus and initial guesses.
    pub fn droplet_scale(&self, tau: f64) -> Result<(C64, f64)> {
        match self {
            Potential::Radial(_) => {
                // mass balance r q'(r) = τ, bisection on a bracket
                let f = |r: f64| r * self.q_deriv(r, 1) - tau;
                let (mut lo, mut hi) = (1e-12, 1.0);
                let mut grow = 0;
                while f(hi) < 0.0 {
                    hi *= 2.0;
                    grow += 1;
                    if grow > 200 {
                        return Err(Error::Domain("mass balance has no root".into()));
                    }
                }
                if f(lo) > 0.0 {
                    return Err(Error::Domain(format!(
                        "τ = {tau} below the profile's minimal mass"
                    )));
                }
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if f(mid) > 0.0 {
                        hi = mid
                    } else {
                        lo = mid
                    }
                }
                Ok((C64::new(0.0, 0.0), 0.5 * (lo + hi)))
            }
            Potential::HeleShaw(h) => Ok((self.minimizer()?, (tau / (2.0 * h.alpha)).sqrt())),
        }
    }

    /// Samples `ΔQ` on an annulus around the expected droplet edge and the
    /// growth of `Q` at infinity.
    pub fn check_admissibility(&self, tau: f64) -> Result<AdmissibilityReport> {
        self.validate()?;
        if !(tau > 0.0) {
            return Err(Error::Domain(format!("τ = {tau} must be positive")));
        }
        let (center, radius) = self.droplet_scale(tau)?;
        let mut min_lap = f64::INFINITY;
        let mut smooth = true;
        for i in 0..=20 {
            let r = radius * (0.5 + i as f64 / 20.0);
            for j in 0..64 {
                let z = center + C64::from_polar(r, 2.0 * std::f64::consts::PI * j as f64 / 64.0);
                match (self.eval(z), self.laplacian(z)) {
                    (Ok(q), Ok(l)) if q.is_finite() && l.is_finite() => {
                        min_lap = min_lap.min(l);
                        if l <= 0.0 {
                            smooth = false;
                        }
                    }
                    _ => smooth = false,
                }
            }
        }
        let mut growth = f64::INFINITY;
        for &big in &[1e2, 1e3, 1e4] {
            for j in 0..64 {
                let z = C64::from_polar(big, 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / 64.0);
                let q = self.eval(z)?;
                growth = growth.min(q / big.ln() - tau);
            }
        }
        Ok(AdmissibilityReport {
            tau,
            min_laplacian: min_lap,
            growth_margin: growth,
            boundary_smooth: smooth,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ginibre_values() {
        let q = Potential::ginibre();
        let z = C64::new(0.3, -0.4);
        assert!((q.eval(z).unwrap() - 0.125).abs() < 1e-15);
        assert!((q.laplacian(z).unwrap() - 0.5).abs() < 1e-14);
        assert!((q.dz(z).unwrap() - z.conj() * 0.5).norm() < 1e-15);
        let (_, r) = q.droplet_scale(0.5).unwrap();
        assert!((r - 0.5f64.sqrt()).abs() < 1e-12);
        assert!(q.check_admissibility(1.0).unwrap().is_admissible());
    }

    #[test]
    fn hele_shaw_derivative_matches_finite_differences() {
        let q = Potential::hele_shaw(0.5)
            .with_log_pole(-0.5f64.sqrt(), C64::new(1.0, 0.0))
            .with_poly(2, C64::new(0.1, 0.05));
        let z = C64::new(-0.3, 0.2);
        let h = 1e-6;
        let dx = (q.eval(z + h).unwrap() - q.eval(z - h).unwrap()) / (2.0 * h);
        let dy = (q.eval(z + C64::new(0.0, h)).unwrap() - q.eval(z - C64::new(0.0, h)).unwrap())
            / (2.0 * h);
        assert!((q.dz(z).unwrap() - C64::new(dx, -dy) * 0.5).norm() < 1e-8);
        let zm = q.minimizer().unwrap();
        assert!(q.dz(zm).unwrap().norm() < 1e-12);
        assert!(q.eval(C64::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn logarithmic_growth_is_flagged() {
        let q = Potential::Radial(RadialProfile {
            terms: vec![(2.0, 0.5)],
            log_coeff: 0.0,
        });
        assert!(q.check_admissibility(1.0).unwrap().growth_margin > 0.0);
        let flat = Potential::Radial(RadialProfile {
            terms: vec![(0.5, 1.0)],
            log_coeff: 0.0,
        });
        // r^{1/2} grows faster than log but the sampled margin stays positive
        assert!(flat.check_admissibility(0.2).unwrap().is_admissible());
        let hs = Potential::hele_shaw(-1.0);
        assert!(hs.check_admissibility(1.0).is_err());
    }

    #[test]
    fn config_roundtrip() {
        let q = Potential::hele_shaw(0.5).with_poly(2, C64::new(0.2, 0.0));
        let s = serde_json::to_string(&q).unwrap();
        let back: Potential = serde_json::from_str(&s).unwrap();
        assert_eq!(q, back);
        assert!(serde_json::from_str::<Potential>(
            r#"{"family":"radial","params":{"terms":[[2,0.5]],"bogus":1}}"#
        )
        .is_err());
    }
}

//! Thin arbitrary-precision layer over `astro-float-num`: a real type with
//! operator overloading at a per-thread working precision, a complex type,
//! and a radix-2 FFT.
//!
//! Parallel callers must set the precision inside each worker closure.

use astro_float_num::{BigFloat, Consts, RoundingMode, Sign};
use num_complex::Complex64 as C64;
use std::cell::{Cell, RefCell};
use std::collections::HashMap;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

const RM: RoundingMode = RoundingMode::ToEven;

thread_local! {
    static PRECISION: Cell<usize> = const { Cell::new(256) };
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("constant cache"));
    static TWIDDLES: RefCell<HashMap<(usize, usize), Arc<Vec<MpC>>>> = RefCell::new(HashMap::new());
}

/// Working precision in bits for `digits` decimal digits plus guard bits.
pub fn bits_for_digits(digits: u32) -> usize {
    let b = (digits as f64 * std::f64::consts::LOG2_10).ceil() as usize + 64;
    b.div_ceil(64) * 64
}

/// Sets this thread's working precision (bits) for subsequent operations.
pub fn set_precision(bits: usize) {
    PRECISION.with(|p| p.set(bits));
}

pub fn precision() -> usize {
    PRECISION.with(|p| p.get())
}

/// Runs `f` at working precision `bits`, restoring the previous setting.
pub fn with_precision<T>(bits: usize, f: impl FnOnce() -> T) -> T {
    let old = precision();
    set_precision(bits);
    let out = f();
    set_precision(old);
    out
}

/// An arbitrary-precision real.
#[derive(Clone, Debug)]
pub struct Mp(pub BigFloat);

impl Mp {
    pub fn from_f64(x: f64) -> Mp {
        Mp(BigFloat::from_f64(x, precision()))
    }

    pub fn from_i64(x: i64) -> Mp {
        Mp(BigFloat::from_i64(x, precision()))
    }

    pub fn zero() -> Mp {
        Mp::from_i64(0)
    }

    pub fn one() -> Mp {
        Mp::from_i64(1)
    }

    pub fn pi() -> Mp {
        CONSTS.with(|c| Mp(c.borrow_mut().pi(precision(), RM)))
    }

    pub fn exp(&self) -> Mp {
        CONSTS.with(|c| Mp(self.0.exp(precision(), RM, &mut c.borrow_mut())))
    }

    pub fn ln(&self) -> Mp {
        CONSTS.with(|c| Mp(self.0.ln(precision(), RM, &mut c.borrow_mut())))
    }

    pub fn sin(&self) -> Mp {
        CONSTS.with(|c| Mp(self.0.sin(precision(), RM, &mut c.borrow_mut())))
    }

    pub fn cos(&self) -> Mp {
        CONSTS.with(|c| Mp(self.0.cos(precision(), RM, &mut c.borrow_mut())))
    }

    pub fn sqrt(&self) -> Mp {
        Mp(self.0.sqrt(precision(), RM))
    }

    pub fn abs(&self) -> Mp {
        Mp(self.0.abs())
    }

    pub fn is_positive(&self) -> bool {
        !self.0.is_nan() && !self.0.is_zero() && !self.0.is_negative()
    }

    pub fn is_finite(&self) -> bool {
        !self.0.is_nan() && !self.0.is_inf()
    }

    /// Nearest `f64` (±∞ / 0 on overflow / underflow).
    pub fn to_f64(&self) -> f64 {
        if self.0.is_nan() {
            return f64::NAN;
        }
        if self.0.is_inf_pos() {
            return f64::INFINITY;
        }
        if self.0.is_inf_neg() {
            return f64::NEG_INFINITY;
        }
        if self.0.is_zero() {
            return 0.0;
        }
        let Some((words, _, sign, exp, _)) = self.0.as_raw_parts() else {
            return f64::NAN;
        };
        let top = *words.last().unwrap_or(&0) as f64;
        let next = if words.len() >= 2 {
            words[words.len() - 2] as f64
        } else {
            0.0
        };
        let mant = top + next * 2f64.powi(-64);
        // value = 0.mantissa × 2^exp with a 64-bit top word
        let e = exp as i64 - 64;
        let v = if e < -1000 {
            mant * 2f64.powi(-1000) * 2f64.powi((e + 1000).max(-1100) as i32)
        } else if e > 1000 {
            mant * 2f64.powi(1000) * 2f64.powi((e - 1000).min(1100) as i32)
        } else {
            mant * 2f64.powi(e as i32)
        };
        if sign == Sign::Neg {
            -v
        } else {
            v
        }
    }

    /// `log|x|` as `f64`, usable far outside the `f64` exponent range.
    pub fn ln_abs_f64(&self) -> f64 {
        if self.0.is_zero() {
            return f64::NEG_INFINITY;
        }
        let Some((words, _, _, exp, _)) = self.0.as_raw_parts() else {
            return f64::NAN;
        };
        let top = *words.last().unwrap_or(&0) as f64;
        top.ln() + (exp as f64 - 64.0) * std::f64::consts::LN_2
    }
}

macro_rules! binop {
    ($tr:ident, $f:ident) => {
        impl $tr<&Mp> for &Mp {
            type Output = Mp;
            fn $f(self, o: &Mp) -> Mp {
                Mp(self.0.$f(&o.0, precision(), RM))
            }
        }
        impl $tr<Mp> for Mp {
            type Output = Mp;
            fn $f(self, o: Mp) -> Mp {
                Mp(self.0.$f(&o.0, precision(), RM))
            }
        }
        impl $tr<&Mp> for Mp {
            type Output = Mp;
            fn $f(self, o: &Mp) -> Mp {
                Mp(self.0.$f(&o.0, precision(), RM))
            }
        }
    };
}
binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);
binop!(Div, div);

impl Neg for &Mp {
    type Output = Mp;
    fn neg(self) -> Mp {
        Mp(BigFloat::neg(&self.0))
    }
}

impl Neg for Mp {
    type Output = Mp;
    fn neg(self) -> Mp {
        Mp(BigFloat::neg(&self.0))
    }
}

/// An arbitrary-precision complex number.
#[derive(Clone, Debug)]
pub struct MpC {
    pub re: Mp,
    pub im: Mp,
}

impl MpC {
    pub fn new(re: Mp, im: Mp) -> Self {
        MpC { re, im }
    }

    pub fn zero() -> Self {
        MpC::new(Mp::zero(), Mp::zero())
    }

    pub fn from_c64(z: C64) -> Self {
        MpC::new(Mp::from_f64(z.re), Mp::from_f64(z.im))
    }

    pub fn from_real(x: Mp) -> Self {
        MpC::new(x, Mp::zero())
    }

    pub fn to_c64(&self) -> C64 {
        C64::new(self.re.to_f64(), self.im.to_f64())
    }

    pub fn conj(&self) -> Self {
        MpC::new(self.re.clone(), -&self.im)
    }

    pub fn add(&self, o: &MpC) -> MpC {
        MpC::new(&self.re + &o.re, &self.im + &o.im)
    }

    pub fn sub(&self, o: &MpC) -> MpC {
        MpC::new(&self.re - &o.re, &self.im - &o.im)
    }

    pub fn mul(&self, o: &MpC) -> MpC {
        MpC::new(
            &(&self.re * &o.re) - &(&self.im * &o.im),
            &(&self.re * &o.im) + &(&self.im * &o.re),
        )
    }

    pub fn scale(&self, s: &Mp) -> MpC {
        MpC::new(&self.re * s, &self.im * s)
    }

    pub fn norm_sqr(&self) -> Mp {
        &(&self.re * &self.re) + &(&self.im * &self.im)
    }

    pub fn div_real(&self, s: &Mp) -> MpC {
        MpC::new(&self.re / s, &self.im / s)
    }

    /// `e^{iθ}` for `θ = 2πk/n`.
    pub fn root_of_unity(k: i64, n: usize) -> MpC {
        let th = &(&Mp::pi() * &Mp::from_i64(2 * k)) / &Mp::from_i64(n as i64);
        MpC::new(th.cos(), th.sin())
    }
}

/// The table `e^{-2πik/n}`, cached per thread and precision.
pub fn twiddles(n: usize) -> Arc<Vec<MpC>> {
    let key = (n, precision());
    TWIDDLES.with(|t| {
        if let Some(v) = t.borrow().get(&key) {
            return v.clone();
        }
        let v = Arc::new(
            (0..n)
                .map(|k| MpC::root_of_unity(-(k as i64), n))
                .collect::<Vec<_>>(),
        );
        t.borrow_mut().insert(key, v.clone());
        v
    })
}

/// In-place forward DFT `X_d = Σ_j x_j e^{-2πijd/n}` (`n` a power of two).
pub fn fft(x: &mut [MpC]) {
    let n = x.len();
    assert!(n.is_power_of_two());
    let mut j = 0;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            x.swap(i, j);
        }
    }
    let tw = twiddles(n);
    let mut len = 2;
    while len <= n {
        let step = n / len;
        for start in (0..n).step_by(len) {
            for k in 0..len / 2 {
                let w = &tw[k * step];
                let t = x[start + k + len / 2].mul(w);
                let u = x[start + k].clone();
                x[start + k] = u.add(&t);
                x[start + k + len / 2] = u.sub(&t);
            }
        }
        len <<= 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversions_and_functions() {
        set_precision(bits_for_digits(60));
        let x = Mp::from_f64(0.3);
        assert_eq!(x.to_f64(), 0.3);
        assert_eq!(Mp::from_f64(-1.5e300).to_f64(), -1.5e300);
        let e = Mp::one().exp();
        assert!((e.to_f64() - std::f64::consts::E).abs() < 1e-15);
        assert!(((&e.ln() - &Mp::one()).abs().to_f64()) < 1e-55);
        let big = Mp::from_i64(2000).exp();
        assert!((big.ln_abs_f64() - 2000.0).abs() < 1e-9);
        assert!(big.to_f64().is_infinite());
    }

    #[test]
    fn fft_of_a_pure_mode() {
        set_precision(bits_for_digits(40));
        let n = 16;
        let mut x: Vec<MpC> = (0..n)
            .map(|j| MpC::root_of_unity(3 * j as i64, n))
            .collect();
        fft(&mut x);
        for (d, v) in x.iter().enumerate() {
            let expect = if d == 3 { n as f64 } else { 0.0 };
            assert!((v.to_c64() - C64::new(expect, 0.0)).norm() < 1e-30);
        }
    }
}

//! Float functions shared by every evaluation path.
//!
//! Real evaluation and jet evaluation must produce bit-identical values, so
//! both go through these wrappers. With `std` they forward to the inherent
//! `f64` methods, otherwise to `libm`.

#[cfg(feature = "std")]
mod imp {
    #[inline]
    pub fn sin(x: f64) -> f64 {
        x.sin()
    }
    #[inline]
    pub fn cos(x: f64) -> f64 {
        x.cos()
    }
    #[inline]
    pub fn exp(x: f64) -> f64 {
        x.exp()
    }
    #[inline]
    pub fn ln(x: f64) -> f64 {
        x.ln()
    }
    #[inline]
    pub fn sqrt(x: f64) -> f64 {
        x.sqrt()
    }
    #[inline]
    pub fn tanh(x: f64) -> f64 {
        x.tanh()
    }
    #[inline]
    pub fn powf(x: f64, y: f64) -> f64 {
        x.powf(y)
    }
    #[inline]
    pub fn floor(x: f64) -> f64 {
        x.floor()
    }
}

#[cfg(not(feature = "std"))]
mod imp {
    #[inline]
    pub fn sin(x: f64) -> f64 {
        libm::sin(x)
    }
    #[inline]
    pub fn cos(x: f64) -> f64 {
        libm::cos(x)
    }
    #[inline]
    pub fn exp(x: f64) -> f64 {
        libm::exp(x)
    }
    #[inline]
    pub fn ln(x: f64) -> f64 {
        libm::log(x)
    }
    #[inline]
    pub fn sqrt(x: f64) -> f64 {
        libm::sqrt(x)
    }
    #[inline]
    pub fn tanh(x: f64) -> f64 {
        libm::tanh(x)
    }
    #[inline]
    pub fn powf(x: f64, y: f64) -> f64 {
        libm::pow(x, y)
    }
    #[inline]
    pub fn floor(x: f64) -> f64 {
        libm::floor(x)
    }
}

pub use imp::*;

pub const PI: f64 = core::f64::consts::PI;

#[inline]
pub fn abs(x: f64) -> f64 {
    f64::from_bits(x.to_bits() & !(1u64 << 63))
}

/// Integer power by binary exponentiation.
///
/// Same multiplication order as the compiler-rt `__powidf2` routine behind
/// `f64::powi`, so results agree bit for bit on std targets.
pub fn powi(base: f64, exp: u32) -> f64 {
    let mut a = base;
    let mut b = exp;
    let mut r = 1.0;
    loop {
        if b & 1 == 1 {
            r *= a;
        }
        b >>= 1;
        if b == 0 {
            break;
        }
        a *= a;
    }
    r
}

/// `|x|^p` for `p ≥ 1`, with the integer exponents kept exact.
pub fn abs_pow(x: f64, p: f64) -> f64 {
    let a = abs(x);
    if p == 1.0 {
        a
    } else if p == 2.0 {
        a * a
    } else if p == floor(p) && p <= 64.0 {
        powi(a, p as u32)
    } else {
        powf(a, p)
    }
}

/// Euclidean distance between two points of equal length.
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        s += d * d;
    }
    sqrt(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn powi_matches_std_bitwise() {
        let bases = [0.0, -0.0, 1.5, -2.25, 1e-3, 3.7e5, -0.999, 7.0 / 3.0];
        for &x in &bases {
            for e in 0..40u32 {
                assert_eq!(powi(x, e).to_bits(), x.powi(e as i32).to_bits(), "{x}^{e}");
            }
        }
    }

    #[test]
    fn abs_clears_sign() {
        assert_eq!(abs(-3.5), 3.5);
        assert_eq!(abs(-0.0).to_bits(), 0.0f64.to_bits());
        assert_eq!(abs_pow(-2.0, 3.0), 8.0);
        assert!((abs_pow(-4.0, 1.5) - 8.0).abs() < 1e-14);
    }
}

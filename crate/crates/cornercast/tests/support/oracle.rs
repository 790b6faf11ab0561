//! Exact-rational oracle for the geometric-Poisson mass function.
//!
//! Everything here works in arbitrary-precision rational arithmetic and is
//! independent of the f64 implementation it checks.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// ln of a positive big rational, exact up to f64 rounding: top 52 bits of
/// numerator and denominator plus their bit lengths.
pub fn ln_big_rational(r: &BigRational) -> f64 {
    assert!(r.is_positive(), "ln of non-positive rational");
    fn ln_big_int(n: &BigInt) -> f64 {
        let bits = n.bits();
        if bits <= 52 {
            let (_, digits) = n.to_u64_digits();
            (digits.first().copied().unwrap_or(0) as f64).ln()
        } else {
            let shift = bits - 52;
            let top = n >> shift;
            let (_, digits) = top.to_u64_digits();
            (digits[0] as f64).ln() + shift as f64 * std::f64::consts::LN_2
        }
    }
    ln_big_int(r.numer()) - ln_big_int(r.denom())
}

pub fn big_rational_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    (ln_big_rational(&r.abs())).exp() * if r.is_positive() { 1.0 } else { -1.0 }
}

pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn factorial_big(k: u64) -> BigInt {
    (1..=k).fold(BigInt::one(), |acc, v| acc * BigInt::from(v))
}

pub fn binomial_big(n: u64, r: u64) -> BigInt {
    if r > n {
        return BigInt::zero();
    }
    factorial_big(n) / (factorial_big(r) * factorial_big(n - r))
}

/// Exact-rational inner sum of the geometric-Poisson mass function:
/// sum over k of lambda^k/k! * C(y-1, k-1) * theta^k * (1-theta)^(y-k).
/// The full log pmf is -lambda + ln(sum).
pub fn gp_inner_sum(lambda: &BigRational, theta: &BigRational, y: u64) -> BigRational {
    let one = BigRational::one();
    let mut total = BigRational::zero();
    for k in 1..=y {
        let lam_pow = lambda.pow(k as i32);
        let theta_pow = theta.pow(k as i32);
        let miss_pow = (&one - theta).pow((y - k) as i32);
        let comb = BigRational::from(binomial_big(y - 1, k - 1));
        let fact = BigRational::from(factorial_big(k));
        total += lam_pow * comb * theta_pow * miss_pow / fact;
    }
    total
}

/// Oracle log pmf at rational parameter points (lambda and theta given as
/// integer fractions).
pub fn gp_log_pmf(lambda: (i64, i64), theta: (i64, i64), y: u64) -> f64 {
    let lam = ratio(lambda.0, lambda.1);
    let th = ratio(theta.0, theta.1);
    let lam_f = big_rational_to_f64(&lam);
    if y == 0 {
        return -lam_f;
    }
    -lam_f + ln_big_rational(&gp_inner_sum(&lam, &th, y))
}

//! Stage constants of the iterated upper-solution argument.
//!
//! ```text
//! a_n = (5 4^{n-1} - 4 3^{n-1}) / (10 4^{n-1} - 4 3^{n-1})
//! b_n = 3^{n-1} / (10 4^{n-1} - 4 3^{n-1})
//! B_n = (1 + b_1) ... (1 + b_n) = (10 4^{n-1} - 3^n) / (6 4^{n-1}),   B_0 = 1
//! tau_n = P eps^{-2 b_n B_{n-1}},   T_n = P eps^{2 - 2 B_n},
//! S_n = eps^{((3/4)^{n-1} - 1) / 2}
//! ```
//!
//! with stage windows summed as `curly_t_n = T_1 + ... + T_n` (`T_1 = tau_1`) and
//! shifts `curly_s_n = S_1 + ... + S_n` (`S_1 = 1`), to which the initial shift
//! `s0` is added by the caller.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{invalid, Result};

fn pow(base: i64, e: u32) -> BigInt {
    BigInt::from(base).pow(e)
}

fn ratio(num: BigInt, den: BigInt) -> BigRational {
    BigRational::new(num, den)
}

pub fn a_n(n: u32) -> BigRational {
    let (p4, p3) = (pow(4, n - 1), pow(3, n - 1));
    ratio(
        BigInt::from(5) * &p4 - BigInt::from(4) * &p3,
        BigInt::from(10) * &p4 - BigInt::from(4) * &p3,
    )
}

pub fn b_n(n: u32) -> BigRational {
    let (p4, p3) = (pow(4, n - 1), pow(3, n - 1));
    ratio(p3.clone(), BigInt::from(10) * &p4 - BigInt::from(4) * &p3)
}

/// `B_n` as the product `(1 + b_1) ... (1 + b_n)`.
pub fn big_b_product(n: u32) -> BigRational {
    (1..=n).fold(BigRational::one(), |acc, j| {
        acc * (BigRational::one() + b_n(j))
    })
}

/// `B_n` by its closed form (`B_0 = 1`).
pub fn big_b_closed(n: u32) -> BigRational {
    if n == 0 {
        return BigRational::one();
    }
    ratio(
        BigInt::from(10) * pow(4, n - 1) - pow(3, n),
        BigInt::from(6) * pow(4, n - 1),
    )
}

/// Exponent of `eps` in `S_n`, `((3/4)^{n-1} - 1) / 2`.
pub fn s_exponent(n: u32) -> BigRational {
    let q = ratio(pow(3, n - 1), pow(4, n - 1));
    (q - BigRational::one()) / BigRational::from_integer(BigInt::from(2))
}

/// Exponent of `eps` in `T_n`, `2 - 2 B_n`.
pub fn t_exponent(n: u32) -> BigRational {
    let two = BigRational::from_integer(BigInt::from(2));
    &two - &two * big_b_closed(n)
}

fn to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Schedule {
    pub n: u32,
    /// Exact stage constants as `"num/den"`.
    pub a_n: String,
    pub b_n: String,
    pub big_b_n: String,
    pub tau_n: f64,
    pub t_n: f64,
    pub s_n: f64,
    pub curly_t_n: f64,
    /// Sum of the stage shifts, excluding the initial shift `s0`.
    pub curly_s_n: f64,
}

/// Stage `n` constants for period `eps` and eigenvalue `p`.
pub fn schedule(n: u32, eps: f64, p: f64) -> Result<Schedule> {
    if n < 1 {
        return Err(invalid("n", "stages start at 1"));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid("eps", format!("{eps} is not in (0, 1)")));
    }
    if !(p > 0.0) {
        return Err(invalid("p", format!("{p} must be positive")));
    }
    let tau_exp = -BigRational::from_integer(BigInt::from(2)) * b_n(n) * big_b_closed(n - 1);
    let t_of = |j: u32| p * eps.powf(to_f64(&t_exponent(j)));
    let s_of = |j: u32| eps.powf(to_f64(&s_exponent(j)));
    Ok(Schedule {
        n,
        a_n: a_n(n).to_string(),
        b_n: b_n(n).to_string(),
        big_b_n: big_b_closed(n).to_string(),
        tau_n: p * eps.powf(to_f64(&tau_exp)),
        t_n: t_of(n),
        s_n: s_of(n),
        curly_t_n: (1..=n).map(t_of).sum(),
        curly_s_n: (1..=n).map(s_of).sum(),
    })
}

/// Checks the exact identities for stages `1..=n_max` and returns the first
/// failing stage. Covered: `a_n + 2 b_n = 1/2`; the product form of `B_n` equals
/// the closed form; `B_n` increases and stays below `5/3`; `T_n = tau_n T_{n-1} / P`
/// in exponent form; the exponent of `S_n` equals `B_{n-1}(a_n - b_n) + 2 - 2 B_{n-1}`.
pub fn verify_identities(n_max: u32) -> std::result::Result<(), u32> {
    let half = ratio(BigInt::from(1), BigInt::from(2));
    let five_thirds = ratio(BigInt::from(5), BigInt::from(3));
    let two = BigRational::from_integer(BigInt::from(2));
    let mut prev = BigRational::one();
    for n in 1..=n_max {
        let (a, b) = (a_n(n), b_n(n));
        let big = big_b_closed(n);
        let s_general = big_b_closed(n - 1) * (&a - &b) + &two - &two * big_b_closed(n - 1);
        // T_n = tau_n T_{n-1} / P in exponent form: 2 - 2 B_n = -2 b_n B_{n-1} + 2 - 2 B_{n-1}
        let chained = -&two * &b * big_b_closed(n - 1) + &two - &two * big_b_closed(n - 1);
        let ok = &a + &two * &b == half
            && big_b_product(n) == big
            && big > prev
            && big < five_thirds
            && s_general == s_exponent(n)
            && chained == t_exponent(n)
            && !b.is_zero();
        if !ok {
            return Err(n);
        }
        prev = big;
    }
    Ok(())
}

//! Factorials, double factorials and binomials.

use std::sync::{OnceLock, RwLock};

use num_bigint::BigInt;

fn factorial_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = vec![1.0f64; 171];
        for k in 1..t.len() {
            t[k] = t[k - 1] * k as f64;
        }
        t
    })
}

/// n! as a double; infinite past 170.
pub fn factorial(n: usize) -> f64 {
    factorial_table().get(n).copied().unwrap_or(f64::INFINITY)
}

/// Exact n!, memoized.
pub fn factorial_big(n: usize) -> BigInt {
    static TABLE: OnceLock<RwLock<Vec<BigInt>>> = OnceLock::new();
    let table = TABLE.get_or_init(|| RwLock::new(vec![BigInt::from(1)]));
    if let Some(v) = table.read().expect("factorial table poisoned").get(n) {
        return v.clone();
    }
    let mut t = table.write().expect("factorial table poisoned");
    while t.len() <= n {
        let k = t.len();
        let next = &t[k - 1] * BigInt::from(k);
        t.push(next);
    }
    t[n].clone()
}

/// n!! for n ≥ −1, extended to negative odd n by n!! = (n+2)!!/(n+2).
/// Negative even arguments are poles and yield `None`.
pub fn double_factorial(n: i64) -> Option<f64> {
    if n >= -1 {
        let mut acc = 1.0;
        let mut k = n;
        while k > 1 {
            acc *= k as f64;
            k -= 2;
        }
        Some(acc)
    } else if n % 2 != 0 {
        double_factorial(n + 2).map(|v| v / (n + 2) as f64)
    } else {
        None
    }
}

/// `num!! / den!!`, zero when the denominator is a pole.
///
/// Panics if the numerator is a pole; no formula in this crate evaluates one.
pub fn double_factorial_ratio(num: i64, den: i64) -> f64 {
    match double_factorial(den) {
        None => 0.0,
        Some(d) => double_factorial(num).expect("double factorial pole in numerator") / d,
    }
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// (−1)^k.
#[inline]
pub fn sign(k: i64) -> f64 {
    if k.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

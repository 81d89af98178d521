//! Brute-force reference: trial-division primes and double-double
//! arithmetic (about 32 significant digits) with its own logarithm and
//! square root, so nothing is shared with the library under test.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Unevaluated sum `hi + lo` with `|lo| ≤ ulp(hi) / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    /// ln 2 to double-double precision.
    #[allow(clippy::approx_constant, clippy::excessive_precision)]
    pub const LN2: Dd = Dd { hi: 6.931471805599453094e-1, lo: 2.319046813846299558e-17 };

    pub fn from_f64(v: f64) -> Self {
        Dd { hi: v, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    /// Decimal literal such as `"586.82519310647923218"`.
    pub fn parse(s: &str) -> Self {
        let (neg, digits) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
        let ten = Dd::from_f64(10.0);
        let mut v = Dd::ZERO;
        for c in int.chars().chain(frac.chars()) {
            let d = c.to_digit(10).expect("decimal digit") as f64;
            v = v * ten + Dd::from_f64(d);
        }
        let mut scale = Dd::from_f64(1.0);
        for _ in 0..frac.len() {
            scale = scale * ten;
        }
        let v = v / scale;
        if neg {
            -v
        } else {
            v
        }
    }

    pub fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return Dd::ZERO;
        }
        // One Newton step from the binary64 root doubles the precision.
        let s = self.hi.sqrt();
        let (p, e) = two_prod(s, s);
        let r = ((self.hi - p) - e + self.lo) / (2.0 * s);
        let (hi, lo) = quick_two_sum(s, r);
        Dd { hi, lo }
    }

    /// Natural logarithm for positive integers `n < 2⁵³`: `n = 2ᵏ m` with
    /// `m ∈ [1, 2)`, then `ln m = 2 atanh((m − 1)/(m + 1))` by its series.
    pub fn ln_int(n: u64) -> Self {
        assert!((1..1 << 53).contains(&n));
        let k = 63 - n.leading_zeros();
        let m = Dd::from_f64(n as f64 / (1u64 << k) as f64);
        let one = Dd::from_f64(1.0);
        let z = (m - one) / (m + one);
        let z2 = z * z;
        let mut term = z;
        let mut sum = Dd::ZERO;
        let mut j = 1.0;
        while term.hi.abs() > 1e-40 {
            sum = sum + term / Dd::from_f64(j);
            term = term * z2;
            j += 2.0;
        }
        Dd::LN2 * Dd::from_f64(k as f64) + sum * Dd::from_f64(2.0)
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, b: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, b: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        let r = self - b * Dd::from_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b * Dd::from_f64(q2);
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::from_f64(q3)
    }
}

/// Primes `≤ limit` by trial division against the primes found so far.
pub fn trial_division_primes(limit: u64) -> Vec<u64> {
    let mut primes: Vec<u64> = Vec::new();
    for n in 2..=limit {
        let is_prime = primes.iter().take_while(|&&p| p * p <= n).all(|&p| n % p != 0);
        if is_prime {
            primes.push(n);
        }
    }
    primes
}

/// `π(x)`, `S(x)`, `M(x)`, `E(x)` in double-double.
#[derive(Debug, Clone, Copy)]
pub struct OracleSums {
    pub pi: u64,
    pub s: Dd,
    pub m: Dd,
    pub e: Dd,
}

pub fn oracle_sums(limit: u64) -> OracleSums {
    let primes = trial_division_primes(limit);
    let mut s = Dd::ZERO;
    let mut m = Dd::ZERO;
    for &p in &primes {
        let w2 = Dd::ln_int(p) / Dd::from_f64(p as f64);
        s = s + w2.sqrt();
        m = m + w2;
    }
    OracleSums { pi: primes.len() as u64, s, m, e: s * s - m }
}

/// `|a − b| / |b|` evaluated in double-double.
pub fn rel_gap(a: Dd, b: Dd) -> f64 {
    ((a - b).to_f64() / b.to_f64()).abs()
}

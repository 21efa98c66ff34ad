//! Exact linear combinations of logarithms of primes.
//!
//! Entropies and KL-type quantities of measures with rational weights are
//! rational combinations of `log p` over primes `p`. Logarithms of distinct
//! primes are linearly independent over the rationals, so two exact values are
//! equal iff their coefficient maps are equal.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::OnceLock;

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::rational::{ln_rational, to_f64, Rational};

/// Primes up to 2^16; any leftover cofactor below 2^32 is prime.
fn small_primes() -> &'static [u32] {
    static PRIMES: OnceLock<Vec<u32>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        let n = 1usize << 16;
        let mut sieve = vec![true; n + 1];
        sieve[0] = false;
        sieve[1] = false;
        let mut i = 2;
        while i * i <= n {
            if sieve[i] {
                let mut j = i * i;
                while j <= n {
                    sieve[j] = false;
                    j += i;
                }
            }
            i += 1;
        }
        (0..=n).filter(|&k| sieve[k]).map(|k| k as u32).collect()
    })
}

/// Prime factorization of a positive integer, if it can be completed by trial
/// division (all factors but one below 2^16, the last below 2^32).
pub fn factorize(n: &BigUint) -> Option<Vec<(u64, u32)>> {
    let mut out = Vec::new();
    if let Some(mut m) = n.to_u64() {
        for &p in small_primes() {
            let p = p as u64;
            if p * p > m {
                break;
            }
            let mut e = 0;
            while m % p == 0 {
                m /= p;
                e += 1;
            }
            if e > 0 {
                out.push((p, e));
            }
        }
        if m > 1 {
            out.push((m, 1));
        }
        return Some(out);
    }
    let mut m = n.clone();
    for &p in small_primes() {
        let mut e = 0;
        loop {
            let (q, r) = (&m / p, &m % p);
            if !r.is_zero() {
                break;
            }
            m = q;
            e += 1;
        }
        if e > 0 {
            out.push((p as u64, e));
        }
        if m.bits() <= 64 {
            let rest = factorize(&m)?;
            // Remaining factors all exceed p, so appending keeps the order.
            out.extend(rest);
            return Some(out);
        }
    }
    None
}

#[derive(Clone, Debug)]
pub struct LogValue {
    exact: Option<BTreeMap<u64, Rational>>,
    nats: f64,
}

impl LogValue {
    pub fn zero() -> Self {
        LogValue { exact: Some(BTreeMap::new()), nats: 0.0 }
    }

    pub fn from_float(nats: f64) -> Self {
        LogValue { exact: None, nats }
    }

    /// `coeff · log(base)` for a positive integer base.
    pub fn log_of_integer(base: u64, coeff: &Rational) -> Self {
        let mut map = BTreeMap::new();
        for (p, e) in factorize(&BigUint::from(base)).expect("u64 always factors") {
            add_term(&mut map, p, coeff * Rational::from_integer(BigInt::from(e)));
        }
        LogValue { exact: Some(map), nats: to_f64(coeff) * (base as f64).ln() }
    }

    /// `log r` for a positive rational.
    pub fn ln(r: &Rational) -> Self {
        assert!(r.is_positive(), "log of a non-positive rational");
        let nats = ln_rational(r);
        let exact = (|| {
            let mut map = BTreeMap::new();
            for (p, e) in factorize(r.numer().magnitude())? {
                add_term(&mut map, p, Rational::from_integer(BigInt::from(e)));
            }
            for (p, e) in factorize(r.denom().magnitude())? {
                add_term(&mut map, p, -Rational::from_integer(BigInt::from(e)));
            }
            Some(map)
        })();
        LogValue { exact, nats }
    }

    pub fn nats(&self) -> f64 {
        self.nats
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn coefficients(&self) -> Option<&BTreeMap<u64, Rational>> {
        self.exact.as_ref()
    }

    /// Coefficient of `log p` (zero if absent); `None` when not exact.
    pub fn coefficient(&self, p: u64) -> Option<Rational> {
        self.exact.as_ref().map(|m| m.get(&p).cloned().unwrap_or_else(Rational::zero))
    }

    /// Float evaluation of the exact part.
    pub fn evaluate_exact(&self) -> Option<f64> {
        self.exact
            .as_ref()
            .map(|m| m.iter().map(|(p, c)| to_f64(c) * (*p as f64).ln()).sum())
    }

    /// Exactly zero (only decidable for exact values).
    pub fn is_exact_zero(&self) -> bool {
        self.exact.as_ref().is_some_and(|m| m.is_empty())
    }

    /// Keeps the float shadow a function of the exact part so that results do
    /// not depend on summation order.
    fn from_parts(exact: Option<BTreeMap<u64, Rational>>, nats: f64) -> Self {
        let mut v = LogValue { exact, nats };
        if let Some(x) = v.evaluate_exact() {
            v.nats = x;
        }
        v
    }

    pub fn scale(&self, c: &Rational) -> Self {
        let exact = self.exact.as_ref().map(|m| {
            let mut out = BTreeMap::new();
            for (p, v) in m {
                add_term(&mut out, *p, v * c);
            }
            out
        });
        LogValue::from_parts(exact, self.nats * to_f64(c))
    }

    pub fn add(&self, other: &LogValue) -> Self {
        let exact = match (&self.exact, &other.exact) {
            (Some(a), Some(b)) => {
                let mut out = a.clone();
                for (p, v) in b {
                    add_term(&mut out, *p, v.clone());
                }
                Some(out)
            }
            _ => None,
        };
        LogValue::from_parts(exact, self.nats + other.nats)
    }

    pub fn sub(&self, other: &LogValue) -> Self {
        self.add(&other.scale(&-Rational::one()))
    }

    /// Equality of exact parts; `None` when either side is float-only.
    pub fn exact_eq(&self, other: &LogValue) -> Option<bool> {
        match (&self.exact, &other.exact) {
            (Some(a), Some(b)) => Some(a == b),
            _ => None,
        }
    }
}

fn add_term(map: &mut BTreeMap<u64, Rational>, p: u64, v: Rational) {
    let entry = map.entry(p).or_insert_with(Rational::zero);
    *entry += v;
    if entry.is_zero() {
        map.remove(&p);
    }
}

impl fmt::Display for LogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.exact {
            Some(m) if m.is_empty() => write!(f, "0"),
            Some(m) => {
                let terms: Vec<String> = m.iter().map(|(p, c)| format!("{c} × log {p}")).collect();
                write!(f, "{}", terms.join(" + "))
            }
            None => write!(f, "{:.12} nats", self.nats),
        }
    }
}

#[derive(Serialize)]
struct LogValueRepr {
    exact: Option<String>,
    coefficients: Option<BTreeMap<String, String>>,
    nats: f64,
}

impl Serialize for LogValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        LogValueRepr {
            exact: self.exact.as_ref().map(|_| self.to_string()),
            coefficients: self
                .exact
                .as_ref()
                .map(|m| m.iter().map(|(p, c)| (p.to_string(), c.to_string())).collect()),
            nats: round_float(self.nats),
        }
        .serialize(s)
    }
}

/// Rounds to 12 significant digits so that reports are byte-stable.
pub fn round_float(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// Shannon entropy `-Σ p log p` of rational weights, exact when every weight factors.
pub fn shannon_entropy<'a>(weights: impl IntoIterator<Item = &'a Rational>) -> LogValue {
    let mut cache: HashMap<Rational, LogValue> = HashMap::new();
    let mut exact: Option<BTreeMap<u64, Rational>> = Some(BTreeMap::new());
    let mut terms = Vec::new();
    for p in weights {
        if p.is_zero() {
            continue;
        }
        debug_assert!(p.numer().sign() == Sign::Plus);
        let l = cache.entry(p.clone()).or_insert_with(|| LogValue::ln(p));
        terms.push(-to_f64(p) * l.nats);
        match (&mut exact, &l.exact) {
            (Some(acc), Some(m)) => {
                for (q, c) in m {
                    add_term(acc, *q, -(c * p));
                }
            }
            _ => exact = None,
        }
    }
    terms.sort_by(f64::total_cmp);
    LogValue::from_parts(exact, terms.iter().sum())
}

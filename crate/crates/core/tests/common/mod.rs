//! Brute-force reference computations on `F_2`, written against plain
//! strings (`a`, `A` = a⁻¹, `b`, `B`) and sharing no code with the library.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use walk_induction::config::{RunConfig, Setup};

pub type Q = BigRational;

pub const LETTERS: [char; 4] = ['a', 'A', 'b', 'B'];

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

fn inv_char(c: char) -> char {
    if c.is_ascii_lowercase() {
        c.to_ascii_uppercase()
    } else {
        c.to_ascii_lowercase()
    }
}

pub fn reduce(s: &str) -> String {
    let mut out: Vec<char> = Vec::new();
    for c in s.chars() {
        if out.last() == Some(&inv_char(c)) {
            out.pop();
        } else {
            out.push(c);
        }
    }
    out.into_iter().collect()
}

pub fn inverse(s: &str) -> String {
    s.chars().rev().map(inv_char).collect()
}

/// Every reduced word of the given length.
pub fn words(len: usize) -> Vec<String> {
    let mut out = vec![String::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|w| {
                LETTERS
                    .iter()
                    .filter(|&&c| !w.ends_with(inv_char(c)))
                    .map(|&c| format!("{w}{c}"))
                    .collect::<Vec<_>>()
            })
            .collect();
    }
    out
}

/// Harmonic measure of `[w]` for simple random walk on `F_2`.
pub fn nu(w: &str) -> Q {
    let n = w.chars().count();
    if n == 0 {
        return Q::one();
    }
    let mut r = q(1, 4);
    for _ in 1..n {
        r *= q(1, 3);
    }
    r
}

/// `φ(g)` in units of log 3: `Σ ν([w])·(|gw| − |w|)` over `|w| = |g| + 1`.
pub fn phi(g: &str) -> Q {
    let len = g.chars().count() + 1;
    words(len)
        .iter()
        .map(|w| nu(w) * Q::from_integer(BigInt::from(reduce(&format!("{g}{w}")).len() as i64 - len as i64)))
        .sum()
}

/// `ν(h[w])` by splitting `[w]` into cylinders of depth `|h| + |w| + 1`.
pub fn nu_translate(h: &str, w: &str) -> Q {
    if w.is_empty() {
        return Q::one();
    }
    let depth = h.len() + w.len() + 1;
    words(depth)
        .iter()
        .filter(|v| v.starts_with(w))
        .map(|v| nu(&reduce(&format!("{h}{v}"))))
        .sum()
}

/// Hitting distribution of the even-length subgroup for simple random walk,
/// from all `4^n` paths of length `n ≤ horizon`.
pub fn theta_even(horizon: usize) -> (BTreeMap<String, Q>, Q) {
    let mut theta = BTreeMap::new();
    let mut tail = Q::zero();
    let mut paths = vec![(String::new(), Q::one())];
    for n in 1..=horizon {
        let mut next = Vec::new();
        for (p, w) in paths {
            for c in LETTERS {
                let z = reduce(&format!("{p}{c}"));
                let w = &w * q(1, 4);
                if z.len().is_multiple_of(2) {
                    *theta.entry(z).or_insert_with(Q::zero) += w;
                } else {
                    next.push((z, w));
                }
            }
        }
        paths = next;
        if n == horizon {
            tail = paths.iter().map(|(_, w)| w.clone()).sum();
        }
    }
    (theta, tail)
}

/// `H(μⁿ)` for simple random walk on `Z`, in nats, from binomial weights.
pub fn integer_srw_entropy(n: u32) -> f64 {
    let mut h = 0.0;
    let mut c = 1.0f64;
    for k in 0..=n {
        let p = c / 2f64.powi(n as i32);
        h -= p * p.ln();
        c = c * (n - k) as f64 / (k + 1) as f64;
    }
    h
}

pub fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

pub fn load(name: &str) -> (RunConfig, Setup) {
    let cfg = RunConfig::load(config_path(name)).expect("bundled config parses");
    let setup = cfg.setup().expect("bundled config builds");
    (cfg, setup)
}

pub const BUNDLED_CHAINS: [&str; 6] =
    ["f2_index2.toml", "z_3z.toml", "z_2z.toml", "f2_s3.toml", "f2_trivial.toml", "s3_points.toml"];

/// `H(μⁿ)` for simple random walk on `F_2`, in nats. The walk is radial:
/// the word length is a birth–death chain and `μⁿ` is uniform on each sphere.
pub fn free_srw_entropy(n: usize) -> f64 {
    let mut len = vec![0.0f64; n + 2];
    len[0] = 1.0;
    for _ in 0..n {
        let mut next = vec![0.0f64; n + 2];
        for (k, &p) in len.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            if k == 0 {
                next[1] += p;
            } else {
                next[k + 1] += p * 0.75;
                next[k - 1] += p * 0.25;
            }
        }
        len = next;
    }
    len.iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(k, &p)| {
            let sphere = if k == 0 { 1.0 } else { 4.0 * 3f64.powi(k as i32 - 1) };
            -p * (p / sphere).ln()
        })
        .sum()
}

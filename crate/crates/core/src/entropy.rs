//! Random-walk entropy `h(G,μ) = lim H(μⁿ)/n`: exact convolution-power
//! entropies, a two-sided bracket, a Shannon–McMillan Monte Carlo estimator
//! and the index-scaling cross-check for induced walks.
//!
//! The increments `D_n = H(μⁿ) − H(μⁿ⁻¹)` decrease to `h`, so both `D_n` and
//! `H(μⁿ)/n` are upper bounds. Lower bounds come from stationary spaces: the
//! Furstenberg entropy of any `μ`-stationary space is at most `h`.

use std::collections::HashMap;

use num_traits::Zero;
use serde::Serialize;

use crate::boundary::{step_cost_nats, BoundaryModel, QuotientSpace};
use crate::chain::CosetChain;
use crate::coset::CosetAction;
use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupKind, GroupModel};
use crate::hitting::first_passage;
use crate::logvalue::{round_float, LogValue};
use crate::measure::{convolve_capped, FinMeasure};
use crate::rational::{int, ln_rational, rat, to_f64, Rational};
use crate::sampling::{mean_and_std_error, run_batched, MeasureSampler, DEFAULT_BATCH_SIZE};

/// Float slack for comparisons between entropies evaluated in nats.
pub const ENTROPY_GUARD: f64 = 1e-9;

/// Default limit on the truncation-bias charge before a cross-check is
/// declared inconclusive.
pub const DEFAULT_MAX_BIAS: f64 = 0.05;

#[derive(Clone, Debug, Serialize)]
pub struct EntropySequence {
    pub requested: usize,
    /// `H(μⁿ)` for `n = 1..=n_max` (index `n − 1`).
    pub entropies: Vec<LogValue>,
    pub support_sizes: Vec<usize>,
    /// Step at which the support cap stopped the computation.
    pub truncated_at: Option<usize>,
    /// Certified lower bound on `h`, `0` unless a stationary space supplies more.
    pub lower: LogValue,
    /// Subadditivity or monotonicity failures; non-empty means an arithmetic bug.
    pub violations: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EntropyBracket {
    pub n_max: usize,
    pub lower: LogValue,
    /// `D_{n_max}`.
    pub upper: LogValue,
    /// `H(μ^{n_max})/n_max`, a looser upper bound.
    pub cesaro: LogValue,
}

impl EntropyBracket {
    pub fn width_nats(&self) -> f64 {
        self.upper.nats() - self.lower.nats()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower.nats() - ENTROPY_GUARD <= x && x <= self.upper.nats() + ENTROPY_GUARD
    }
}

impl EntropySequence {
    pub fn n_max(&self) -> usize {
        self.entropies.len()
    }

    pub fn entropy(&self, n: usize) -> Option<&LogValue> {
        n.checked_sub(1).and_then(|i| self.entropies.get(i))
    }

    /// `D_n` for `n = 1..=n_max`, with `H(μ⁰) = 0`.
    pub fn differences(&self) -> Vec<LogValue> {
        let mut prev = LogValue::zero();
        self.entropies
            .iter()
            .map(|h| {
                let d = h.sub(&prev);
                prev = h.clone();
                d
            })
            .collect()
    }

    pub fn bracket(&self) -> EntropyBracket {
        let n = self.n_max();
        EntropyBracket {
            n_max: n,
            lower: self.lower.clone(),
            upper: self.differences().pop().unwrap_or_else(LogValue::zero),
            cesaro: self.entropies.last().map(|h| h.scale(&rat(1, n as i64))).unwrap_or_else(LogValue::zero),
        }
    }

    /// Replaces the lower bound; records a violation if it exceeds the upper one.
    pub fn with_lower(mut self, lower: LogValue) -> Self {
        if lower.nats() > self.bracket().upper.nats() + ENTROPY_GUARD {
            self.violations.push(format!(
                "lower bound {:.6} exceeds D_{} = {:.6}",
                lower.nats(),
                self.n_max(),
                self.bracket().upper.nats()
            ));
        }
        self.lower = lower;
        self
    }

    pub fn invariants_hold(&self) -> bool {
        self.violations.is_empty()
    }

    fn audit(&mut self) {
        let h: Vec<f64> = self.entropies.iter().map(LogValue::nats).collect();
        let n = h.len();
        for m in 1..=n {
            for k in m..=n - m {
                if m + k <= n && h[m + k - 1] > h[m - 1] + h[k - 1] + ENTROPY_GUARD {
                    self.violations.push(format!("H(μ^{}) > H(μ^{m}) + H(μ^{k})", m + k));
                }
            }
        }
        let d: Vec<f64> = self.differences().iter().map(LogValue::nats).collect();
        for i in 1..d.len() {
            if d[i] > d[i - 1] + ENTROPY_GUARD {
                self.violations.push(format!("D_{} > D_{}", i + 1, i));
            }
        }
    }
}

/// Exact `H(μⁿ)` for `n = 1..=n_max`. When a power would exceed `cap` atoms
/// the prefix computed so far is returned.
pub fn entropy_sequence(model: &GroupModel, mu: &FinMeasure, n_max: usize, cap: usize) -> Result<EntropySequence> {
    if !mu.is_probability() {
        return Err(Error::InvalidMeasure(format!("μ has mass {}", mu.mass())));
    }
    mu.check_model(model)?;
    if mu.len() > cap {
        return Err(Error::SupportCap { cap, step: 1, completed: 0 });
    }
    let mut seq = EntropySequence {
        requested: n_max,
        entropies: Vec::with_capacity(n_max),
        support_sizes: Vec::with_capacity(n_max),
        truncated_at: None,
        lower: LogValue::zero(),
        violations: Vec::new(),
    };
    let mut power = mu.clone();
    for n in 1..=n_max {
        if n > 1 {
            match convolve_capped(model, &power, mu, cap) {
                Ok(p) => power = p,
                Err(Error::SupportCap { .. }) => {
                    seq.truncated_at = Some(n);
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if !power.is_probability() {
            seq.violations.push(format!("μ^{n} has mass {}", power.mass()));
        }
        seq.entropies.push(power.entropy()?);
        seq.support_sizes.push(power.len());
    }
    seq.audit();
    Ok(seq)
}

/// `μⁿ`, failing with the step reached if the cap is exceeded.
pub fn convolution_power(model: &GroupModel, mu: &FinMeasure, n: usize, cap: usize) -> Result<FinMeasure> {
    let mut power = FinMeasure::dirac(model.identity());
    for step in 1..=n {
        power = convolve_capped(model, &power, mu, cap)
            .map_err(|e| match e {
                Error::SupportCap { cap, .. } => Error::SupportCap { cap, step, completed: step - 1 },
                e => e,
            })?;
    }
    Ok(power)
}

#[derive(Clone, Debug, Serialize)]
pub struct SmbEstimate {
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    /// Mean of `−(1/n)·log μⁿ(Z_n)` in nats.
    pub mean: f64,
    pub std_error: f64,
    /// `H(μⁿ)/n` in nats.
    pub expected: f64,
}

impl SmbEstimate {
    /// Distance from the exact expectation in standard errors.
    pub fn z_score(&self) -> f64 {
        let gap = (self.mean - self.expected).abs();
        if gap <= ENTROPY_GUARD {
            0.0
        } else {
            gap / self.std_error
        }
    }
}

/// Monte Carlo mean of `−(1/n)·log μⁿ(Z_n)` over sampled walks, scored
/// against the exact `μⁿ` table.
pub fn smb_estimate(
    model: &GroupModel,
    mu: &FinMeasure,
    n: usize,
    samples: usize,
    seed: u64,
    cap: usize,
) -> Result<SmbEstimate> {
    if n == 0 || samples == 0 {
        return Err(Error::Precondition("need n ≥ 1 and at least one sample".into()));
    }
    let table = convolution_power(model, mu, n, cap)?;
    let expected = table.entropy()?.nats() / n as f64;
    let info: HashMap<&GroupElement, f64> = table.iter().map(|(g, w)| (g, -ln_rational(w))).collect();
    let sampler = MeasureSampler::new(mu);
    let batches = run_batched(seed, samples, DEFAULT_BATCH_SIZE, |rng, count| -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let mut z = model.identity();
            for _ in 0..n {
                z = model.multiply(&z, sampler.sample(rng))?;
            }
            let bits = info.get(&z).copied().ok_or_else(|| {
                Error::Precondition(format!("sampled {} outside the support of μ^{n}", model.format(&z)))
            })?;
            out.push(bits / n as f64);
        }
        Ok(out)
    });
    let mut values = Vec::with_capacity(samples);
    for b in batches {
        values.extend(b?);
    }
    let (mean, std_error) = mean_and_std_error(&values);
    Ok(SmbEstimate { n, samples, seed, mean: round_float(mean), std_error: round_float(std_error), expected: round_float(expected) })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Consistent,
    Inconsistent,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct IntervalNats {
    pub lower: f64,
    pub upper: f64,
}

impl IntervalNats {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn straddles(&self, x: f64) -> bool {
        self.lower - ENTROPY_GUARD <= x && x <= self.upper + ENTROPY_GUARD
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CorollaryReport {
    pub index: usize,
    pub horizon: usize,
    #[serde(with = "crate::rational::serde_str")]
    pub tail: Rational,
    /// Entropy charge for the truncated part of `θ`, in nats.
    pub bias: f64,
    pub walk: EntropySequence,
    pub induced: EntropySequence,
    /// `index × [lower, D_{n_max}]` for `(G, μ)`.
    pub scaled_walk: IntervalNats,
    /// Bracket for `(Γ, θ)` with the bias folded into the upper end.
    pub induced_bracket: IntervalNats,
    pub overlap: bool,
    /// Exact `h_θ = index·h_μ` on the tree boundary, when applicable.
    pub boundary_identity: Option<bool>,
    pub status: CheckStatus,
}

/// Best available stationary-space lower bounds `(for μ, for θ)` in nats,
/// with the exact boundary identity when it can be evaluated.
fn stationary_lower_bounds(
    model: &GroupModel,
    mu: &FinMeasure,
    action: &CosetAction,
    trunc: &crate::hitting::HittingTruncation,
) -> Result<(LogValue, LogValue, Option<bool>)> {
    let mut lower_mu = LogValue::zero();
    let mut lower_theta = LogValue::zero();
    let quotient = QuotientSpace::uniform(action);
    if quotient.is_stationary(mu)? {
        let h = quotient.furstenberg_entropy(model, mu)?;
        if h.nats() > lower_mu.nats() {
            lower_mu = h;
        }
    }
    let mut identity = None;
    if let GroupKind::Free { rank } = model.kind() {
        if *rank >= 2 {
            let boundary = BoundaryModel::new(*rank)?;
            if boundary.is_stationary(mu, 2)? {
                let h_mu = boundary.furstenberg_entropy(mu)?;
                let hit = boundary.integrate_phi(&trunc.combined())?;
                if trunc.tail().is_zero() {
                    identity = Some(hit == int(action.index() as i64) * &h_mu.q);
                }
                lower_mu = h_mu.to_log_value();
                lower_theta = LogValue::log_of_integer(boundary.branching(), &hit);
            }
        }
    }
    Ok((lower_mu, lower_theta, identity))
}

/// Compares `index·h(G,μ)` against `h(Γ,θ)` through brackets. `θ` is cut at
/// `horizon` and renormalized; its missing mass is charged at `−log min μ`
/// nats per expected remaining step.
pub fn corollary_check(
    model: &GroupModel,
    mu: &FinMeasure,
    action: &CosetAction,
    horizon: usize,
    n_max: usize,
    cap: usize,
    max_bias: f64,
) -> Result<CorollaryReport> {
    let index = action.index();
    let trunc = first_passage(model, action, mu, horizon, cap)?;
    let tail = trunc.tail().clone();
    let bias = if tail.is_zero() {
        0.0
    } else {
        let chain = CosetChain::build(model, action, mu)?;
        let cert = chain.tail_rate_certificate(horizon.max(index))?;
        let steps = &tail * (int(horizon as i64 + 1) + cert.remainder_factor());
        to_f64(&steps) * step_cost_nats(mu)?
    };
    let (lower_mu, lower_theta, boundary_identity) = stationary_lower_bounds(model, mu, action, &trunc)?;
    let walk = entropy_sequence(model, mu, n_max, cap)?.with_lower(lower_mu);
    let theta = trunc.combined().normalized()?;
    let induced = entropy_sequence(model, &theta, n_max, cap)?.with_lower(lower_theta);

    let m = index as f64;
    let wb = walk.bracket();
    let scaled_walk = IntervalNats { lower: round_float(m * wb.lower.nats()), upper: round_float(m * wb.upper.nats()) };
    let ib = induced.bracket();
    let induced_bracket = IntervalNats { lower: round_float(ib.lower.nats()), upper: round_float(ib.upper.nats() + bias) };
    let overlap = scaled_walk.lower.max(induced_bracket.lower)
        <= scaled_walk.upper.min(induced_bracket.upper) + ENTROPY_GUARD;
    let status = if bias > max_bias {
        CheckStatus::Inconclusive
    } else if overlap && walk.invariants_hold() && induced.invariants_hold() && boundary_identity != Some(false) {
        CheckStatus::Consistent
    } else {
        CheckStatus::Inconsistent
    };
    Ok(CorollaryReport {
        index,
        horizon,
        tail,
        bias: round_float(bias),
        walk,
        induced,
        scaled_walk,
        induced_bracket,
        overlap,
        boundary_identity,
        status,
    })
}

//! The hitting measure `θ` on the subgroup: first-passage decomposition
//! `θ = Σ θ^(n)` computed exactly up to a time horizon, plus exact samplers of
//! the hitting position and return time.

use std::collections::HashMap;

use serde::Serialize;

use crate::chain::TailCertificate;
use crate::coset::CosetAction;
use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupModel};
use crate::measure::{convolve_capped, FinMeasure};
use crate::rational::{int, Rational};
use crate::sampling::{mean_and_std_error, run_batched, MeasureSampler, DEFAULT_BATCH_SIZE};

/// Time-truncated hitting measure of the walk started at `start`.
#[derive(Clone, Debug)]
pub struct HittingTruncation {
    pub start: GroupElement,
    /// `θ^(n)` for `n = 1..=N` (index `n − 1`).
    pub levels: Vec<FinMeasure>,
    /// Law of `Z_N` on the event `{τ > N}`.
    pub survivors: FinMeasure,
}

impl HittingTruncation {
    pub fn horizon(&self) -> usize {
        self.levels.len()
    }

    /// `P{τ > N}`.
    pub fn tail(&self) -> &Rational {
        self.survivors.mass()
    }

    /// `P{τ = n}` for `n = 1..=N`.
    pub fn level_masses(&self) -> Vec<Rational> {
        self.levels.iter().map(|l| l.mass().clone()).collect()
    }

    /// `θ_{≤N} = Σ_{n≤N} θ^(n)`.
    pub fn combined(&self) -> FinMeasure {
        self.levels.iter().fold(FinMeasure::zero(), |acc, l| acc.plus(l))
    }

    /// `Σ_{n≤N} n·P{τ=n}`.
    pub fn truncated_mean(&self) -> Rational {
        self.levels.iter().enumerate().map(|(i, l)| int(i as i64 + 1) * l.mass()).sum()
    }

    /// Exact bracket on `E[τ]`:
    /// `Σ n·P{τ=n} + (N+1)·tail ≤ E[τ] ≤ Σ n·P{τ=n} + tail·(N + 1 + F)`
    /// with `F` the certificate's remainder factor.
    pub fn kac_bracket(&self, cert: &TailCertificate) -> (Rational, Rational) {
        let head = self.truncated_mean();
        let n1 = int(self.horizon() as i64 + 1);
        let lower = &head + &n1 * self.tail();
        let upper = &head + self.tail() * (n1 + cert.remainder_factor());
        (lower, upper)
    }
}

/// Runs the first-passage recursion from `start` for `horizon` steps, calling
/// `visit(n, θ^(n), survivors_n)` after each step.
pub fn first_passage_visit(
    model: &GroupModel,
    action: &CosetAction,
    mu: &FinMeasure,
    start: &GroupElement,
    horizon: usize,
    cap: usize,
    mut visit: impl FnMut(usize, &FinMeasure, &FinMeasure),
) -> Result<(Vec<FinMeasure>, FinMeasure)> {
    if horizon == 0 {
        return Err(Error::Precondition("horizon N must be at least 1".into()));
    }
    mu.check_model(model)?;
    model.check(start)?;
    if !mu.is_probability() {
        return Err(Error::InvalidMeasure(format!("step measure has mass {}", mu.mass())));
    }
    if !mu.projected_generation_check(action)? {
        return Err(Error::Reducible);
    }
    let mut survivors = FinMeasure::dirac(start.clone());
    let mut levels = Vec::with_capacity(horizon);
    for n in 1..=horizon {
        let next = convolve_capped(model, &survivors, mu, cap).map_err(|e| match e {
            Error::SupportCap { cap, .. } => Error::SupportCap { cap, step: n, completed: n - 1 },
            other => other,
        })?;
        let (hit, rest) = next.split_by_subgroup(action)?;
        visit(n, &hit, &rest);
        levels.push(hit);
        survivors = rest;
    }
    Ok((levels, survivors))
}

/// `θ^(1..=N)` and the surviving mass for the walk from the identity.
pub fn first_passage(
    model: &GroupModel,
    action: &CosetAction,
    mu: &FinMeasure,
    horizon: usize,
    cap: usize,
) -> Result<HittingTruncation> {
    theta_from(model, action, mu, &model.identity(), horizon, cap)
}

/// Same recursion seeded at `g`: the hitting measure `θ_g`.
pub fn theta_from(
    model: &GroupModel,
    action: &CosetAction,
    mu: &FinMeasure,
    g: &GroupElement,
    horizon: usize,
    cap: usize,
) -> Result<HittingTruncation> {
    let (levels, survivors) = first_passage_visit(model, action, mu, g, horizon, cap, |_, _, _| {})?;
    Ok(HittingTruncation { start: g.clone(), levels, survivors })
}

/// One exact draw of `(Φ, τ)`: multiply increments until the base coset is reached.
pub fn sample_hit<R: rand::Rng + ?Sized>(
    model: &GroupModel,
    action: &CosetAction,
    sampler: &MeasureSampler,
    rng: &mut R,
    step_limit: usize,
) -> Result<(GroupElement, usize)> {
    let mut z = model.identity();
    let mut coset = 0;
    for tau in 1..=step_limit {
        let x = sampler.sample(rng);
        coset = action.act(coset, x)?;
        z = model.multiply(&z, x)?;
        if coset == 0 {
            return Ok((z, tau));
        }
    }
    Err(Error::Precondition(format!("no return to the subgroup within {step_limit} steps")))
}

#[derive(Clone, Debug)]
pub struct HitSamples {
    pub seed: u64,
    pub draws: Vec<(GroupElement, usize)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct HitSummary {
    pub samples: usize,
    pub seed: u64,
    pub mean_tau: f64,
    pub std_error_tau: f64,
}

impl HitSamples {
    pub fn summary(&self) -> HitSummary {
        let taus: Vec<f64> = self.draws.iter().map(|(_, t)| *t as f64).collect();
        let (mean, se) = mean_and_std_error(&taus);
        HitSummary { samples: self.draws.len(), seed: self.seed, mean_tau: mean, std_error_tau: se }
    }

    /// Empirical frequency of each hitting position.
    pub fn frequencies(&self) -> HashMap<GroupElement, usize> {
        let mut out = HashMap::new();
        for (g, _) in &self.draws {
            *out.entry(g.clone()).or_insert(0) += 1;
        }
        out
    }
}

/// Draws `samples` independent `(Φ, τ)` pairs, reproducibly from `seed`.
pub fn sample_hits(
    model: &GroupModel,
    action: &CosetAction,
    mu: &FinMeasure,
    samples: usize,
    seed: u64,
    step_limit: usize,
) -> Result<HitSamples> {
    let sampler = MeasureSampler::new(mu);
    let batches = run_batched(seed, samples, DEFAULT_BATCH_SIZE, |rng, count| {
        (0..count)
            .map(|_| sample_hit(model, action, &sampler, rng, step_limit))
            .collect::<Result<Vec<_>>>()
    });
    let mut draws = Vec::with_capacity(samples);
    for b in batches {
        draws.extend(b?);
    }
    Ok(HitSamples { seed, draws })
}

/// Checks `θ_γ^(n)(λ) = θ^(n)(γ⁻¹λ)` level by level.
pub fn translation_identity_holds(
    model: &GroupModel,
    from_identity: &HittingTruncation,
    from_gamma: &HittingTruncation,
) -> Result<bool> {
    if from_identity.horizon() != from_gamma.horizon() {
        return Ok(false);
    }
    let gamma = &from_gamma.start;
    for (base, shifted) in from_identity.levels.iter().zip(&from_gamma.levels) {
        if base.translate(model, gamma)? != *shifted {
            return Ok(false);
        }
    }
    Ok(from_identity.survivors.translate(model, gamma)? == from_gamma.survivors)
}

/// Atoms of every level lie in the subgroup and no survivor does.
pub fn membership_holds(action: &CosetAction, trunc: &HittingTruncation) -> Result<bool> {
    for level in &trunc.levels {
        for (g, _) in level.iter() {
            if !action.is_member(g)? {
                return Ok(false);
            }
        }
    }
    for (g, _) in trunc.survivors.iter() {
        if action.is_member(g)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Level masses plus tail add up to one.
pub fn mass_balanced(trunc: &HittingTruncation) -> bool {
    let total: Rational = trunc.levels.iter().map(|l| l.mass().clone()).sum::<Rational>() + trunc.tail();
    total == int(1)
}

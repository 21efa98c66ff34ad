//! Exact boundary theory for simple random walk on the free group `F_k`.
//!
//! The boundary is the space of infinite reduced words with the
//! uniform-branching harmonic measure `ν([w]) = 1/(2k)·(2k−1)^{−(|w|−1)}`.
//! Every Radon–Nikodym quantity is an exact rational multiple of the single
//! unit `log(2k−1)`.

use std::collections::HashMap;
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::chain::TailCertificate;
use crate::coset::CosetAction;
use crate::error::{Error, Result};
use crate::group::{format_letters, free_concat, free_inverse, GroupElement, GroupKind, GroupModel, Letter};
use crate::hitting::{first_passage_visit, HittingTruncation};
use crate::logvalue::LogValue;
use crate::measure::FinMeasure;
use crate::rational::{int, ln_rational, rat, to_f64, Rational};

/// `q · log(2k−1)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhiValue {
    pub q: Rational,
    pub branching: u64,
}

impl PhiValue {
    pub fn zero(branching: u64) -> Self {
        PhiValue { q: Rational::zero(), branching }
    }

    pub fn nats(&self) -> f64 {
        to_f64(&self.q) * (self.branching as f64).ln()
    }

    pub fn to_log_value(&self) -> LogValue {
        LogValue::log_of_integer(self.branching, &self.q)
    }
}

impl fmt::Display for PhiValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} × log {}", self.q, self.branching)
    }
}

impl Serialize for PhiValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            exact: String,
            coefficient: String,
            unit: String,
            nats: f64,
        }
        Repr {
            exact: self.to_string(),
            coefficient: self.q.to_string(),
            unit: format!("log {}", self.branching),
            nats: crate::logvalue::round_float(self.nats()),
        }
        .serialize(s)
    }
}

/// `ρ(g, x) = exponent · log(2k−1)` on a deep cylinder.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CocycleValue {
    pub exponent: i64,
    pub branching: u64,
}

/// A finite rational combination of cylinder indicators `Σ c_i·1_[w_i]`.
#[derive(Clone, Debug, Default)]
pub struct CylinderFunction {
    pub terms: Vec<(Vec<Letter>, Rational)>,
}

impl CylinderFunction {
    pub fn constant(c: Rational) -> Self {
        CylinderFunction { terms: vec![(Vec::new(), c)] }
    }

    pub fn indicator(w: Vec<Letter>) -> Self {
        CylinderFunction { terms: vec![(w, Rational::one())] }
    }

    pub fn depth(&self) -> usize {
        self.terms.iter().map(|(w, _)| w.len()).max().unwrap_or(0)
    }

    /// Value on the cylinder `[v]`, for `v` at least as deep as every term.
    pub fn value_on(&self, v: &[Letter]) -> Rational {
        self.terms.iter().filter(|(w, _)| v.starts_with(w)).map(|(_, c)| c.clone()).sum()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct HittingEntropyBracket {
    /// `Σ_{n≤N} θ^(n)(φ)`: exact lower bound on `h_θ`.
    pub lower: PhiValue,
    /// Upper bound in nats: lower plus the truncated-tail charge.
    pub upper_nats: f64,
    /// True when the tail is zero and `lower = h_θ` exactly.
    pub exact: bool,
    pub horizon: usize,
    #[serde(with = "crate::rational::serde_str")]
    pub tail: Rational,
}

#[derive(Clone, Debug, Serialize)]
pub struct TelescopingRow {
    pub n: usize,
    /// `h_μ·Σ_{j=1}^{n} P{τ ≥ j}` in units of `log(2k−1)`.
    #[serde(with = "crate::rational::serde_str")]
    pub lhs: Rational,
    /// `Σ_{k≤n} θ^(k)(φ)`.
    #[serde(with = "crate::rational::serde_str")]
    pub hit_sum: Rational,
    /// `R_n = E[φ(Z_n)·1{τ>n}]`.
    #[serde(with = "crate::rational::serde_str")]
    pub remainder: Rational,
    /// `n·(−log min μ)·P{τ>n}` in nats: the step-count bound on `R_n`.
    pub remainder_bound_nats: f64,
    pub equal: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct PhiBoundReport {
    pub phi: PhiValue,
    pub bound_nats: f64,
    pub slack_nats: f64,
    pub holds: bool,
}

#[derive(Clone, Debug)]
pub struct BoundaryModel {
    group: GroupModel,
    rank: usize,
}

/// Float guard for inequalities mixing `log(2k−1)` with other logarithms.
pub const FLOAT_GUARD: f64 = 1e-9;

impl BoundaryModel {
    pub fn new(rank: usize) -> Result<Self> {
        if rank < 2 {
            return Err(Error::Precondition("boundary model needs a free group of rank ≥ 2".into()));
        }
        Ok(BoundaryModel { group: GroupModel::free(rank)?, rank })
    }

    pub fn for_model(model: &GroupModel) -> Result<Self> {
        match model.kind() {
            GroupKind::Free { rank } => Self::new(*rank),
            _ => Err(Error::Unsupported("boundary quantities need a free group model")),
        }
    }

    pub fn group(&self) -> &GroupModel {
        &self.group
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// `2k − 1`.
    pub fn branching(&self) -> u64 {
        2 * self.rank as u64 - 1
    }

    fn word<'a>(&self, g: &'a GroupElement) -> Result<&'a [Letter]> {
        match g {
            GroupElement::Word(w) if w.iter().all(|&l| l != 0 && l.unsigned_abs() as usize <= self.rank) => Ok(w),
            _ => Err(Error::ModelMismatch(format!("{g:?} is not an element of F_{}", self.rank))),
        }
    }

    /// `ν([w])`; the empty word is the whole boundary.
    pub fn cylinder_measure(&self, w: &[Letter]) -> Rational {
        if w.is_empty() {
            return Rational::one();
        }
        self.measure_of_length(w.len())
    }

    /// Letters that may follow `w` in a reduced word.
    pub fn successors(&self, w: &[Letter]) -> Vec<Letter> {
        let last = w.last().copied();
        self.group.letters().into_iter().filter(|&l| Some(-l) != last).collect()
    }

    /// All reduced words of length exactly `depth`.
    pub fn cylinders(&self, depth: usize) -> Vec<Vec<Letter>> {
        self.extensions(&[], depth)
    }

    /// All reduced words `w·u` of length `depth` extending `w`.
    pub fn extensions(&self, w: &[Letter], depth: usize) -> Vec<Vec<Letter>> {
        let mut out = vec![w.to_vec()];
        for _ in w.len()..depth {
            out = out
                .into_iter()
                .flat_map(|v| self.successors(&v).into_iter().map(move |l| [v.as_slice(), &[l]].concat()))
                .collect();
        }
        out
    }

    /// `ν(h[w])`. Write `h = h'·s` and `w = s⁻¹·w'` with `s` the longest
    /// cancelling piece. If `w'` is non-empty then `h[w] = [h'w']`; otherwise
    /// `h[w] = h'·(∂ \ [ℓ])` with `ℓ` the first letter of `w⁻¹`, and `h'ℓ` is
    /// reduced.
    pub fn translated_cylinder_measure(&self, h: &[Letter], w: &[Letter]) -> Rational {
        if w.is_empty() {
            return Rational::one();
        }
        let mut c = 0;
        while c < h.len() && c < w.len() && h[h.len() - 1 - c] == -w[c] {
            c += 1;
        }
        let head = h.len() - c;
        if c < w.len() {
            self.measure_of_length(head + w.len() - c)
        } else {
            Rational::one() - self.measure_of_length(head + 1)
        }
    }

    /// `ν([v])` for any reduced `v` of length `len ≥ 1`.
    fn measure_of_length(&self, len: usize) -> Rational {
        let mut den = num_bigint::BigInt::from(2 * self.rank as i64);
        den *= num_bigint::BigInt::from(self.branching()).pow(len as u32 - 1);
        Rational::new(1.into(), den)
    }

    /// `ρ(g, x)` for `x ∈ [w]`: `−log(dg⁻¹ν/dν) = (|g·w| − |w|)·log(2k−1)`,
    /// defined once `|w| > |g|`.
    pub fn rho(&self, g: &GroupElement, w: &[Letter]) -> Result<CocycleValue> {
        let g = self.word(g)?;
        if w.len() <= g.len() {
            return Err(Error::ShallowCylinder { cylinder: format_letters(w), length: g.len() });
        }
        let image = free_concat(g, w);
        Ok(CocycleValue { exponent: image.len() as i64 - w.len() as i64, branching: self.branching() })
    }

    /// `ρ(g·g₁, w) − ρ(g, g₁·w) − ρ(g₁, w)` in units of `log(2k−1)`; zero by
    /// the cocycle relation. Needs `|w| > |g| + |g₁|`.
    pub fn cocycle_residual(&self, g: &GroupElement, g1: &GroupElement, w: &[Letter]) -> Result<i64> {
        let (gw, g1w) = (self.word(g)?, self.word(g1)?);
        let shifted = free_concat(g1w, w);
        let whole = self.rho(&GroupElement::Word(free_concat(gw, g1w)), w)?;
        Ok(whole.exponent - self.rho(g, &shifted)?.exponent - self.rho(g1, w)?.exponent)
    }

    /// A uniformly random reduced word of length `len`: `[w]` is drawn with
    /// probability `ν([w])`.
    pub fn random_word<R: rand::Rng + ?Sized>(&self, rng: &mut R, len: usize) -> Vec<Letter> {
        let mut w: Vec<Letter> = Vec::with_capacity(len);
        for _ in 0..len {
            let next = self.successors(&w);
            w.push(next[rng.random_range(0..next.len())]);
        }
        w
    }

    /// `φ` on words of length `0..=max_len`. The cocycle on a ray `x` is
    /// `|g| − 2c(x)` with `c` the common prefix length of `x` and `g⁻¹`, so
    /// `φ(g) = |g| − 2·Σ_{j=1}^{|g|} ν([first j letters of g⁻¹])`, a function
    /// of `|g|` alone.
    pub fn phi_by_length(&self, max_len: usize) -> Vec<Rational> {
        let mut out = Vec::with_capacity(max_len + 1);
        let mut prefix_mass = Rational::zero();
        let mut nu = rat(1, 2 * self.rank as i64);
        let shrink = rat(1, self.branching() as i64);
        out.push(Rational::zero());
        for len in 1..=max_len {
            prefix_mass += &nu;
            nu *= &shrink;
            out.push(int(len as i64) - int(2) * &prefix_mass);
        }
        out
    }

    /// `φ(g) = ∫ρ(g,x)dν(x)`.
    pub fn phi(&self, g: &GroupElement) -> Result<PhiValue> {
        let len = self.word(g)?.len();
        Ok(PhiValue { q: self.phi_by_length(len).pop().expect("non-empty"), branching: self.branching() })
    }

    /// `φ(g)` as the finite sum of `ν([w])·ρ(g,[w])` over depth-`(|g|+1)` cylinders.
    pub fn phi_by_cylinders(&self, g: &GroupElement) -> Result<PhiValue> {
        let depth = self.word(g)?.len() + 1;
        let mut q = Rational::zero();
        for w in self.cylinders(depth) {
            q += self.cylinder_measure(&w) * int(self.rho(g, &w)?.exponent);
        }
        Ok(PhiValue { q, branching: self.branching() })
    }

    /// `Σ m(g)·φ(g)` for any finite (sub-)measure on the free group.
    pub fn integrate_phi(&self, m: &FinMeasure) -> Result<Rational> {
        let mut by_len: HashMap<usize, Rational> = HashMap::new();
        for (g, w) in m.iter() {
            *by_len.entry(self.word(g)?.len()).or_insert_with(Rational::zero) += w;
        }
        let max_len = by_len.keys().copied().max().unwrap_or(0);
        let table = self.phi_by_length(max_len);
        Ok(by_len.into_iter().map(|(l, w)| w * &table[l]).sum())
    }

    /// `h_μ = Σ μ(g)·φ(g)`.
    pub fn furstenberg_entropy(&self, mu: &FinMeasure) -> Result<PhiValue> {
        Ok(PhiValue { q: self.integrate_phi(mu)?, branching: self.branching() })
    }

    /// Bracket on `h_θ = Σ_n θ^(n)(φ)` from a time-truncated hitting measure.
    /// Beyond the horizon each step contributes at most `−log min μ` nats.
    pub fn furstenberg_entropy_hitting(
        &self,
        trunc: &HittingTruncation,
        mu: &FinMeasure,
        cert: Option<&TailCertificate>,
    ) -> Result<HittingEntropyBracket> {
        let lower = PhiValue { q: self.integrate_phi(&trunc.combined())?, branching: self.branching() };
        let tail = trunc.tail().clone();
        let (upper_nats, exact) = if tail.is_zero() {
            (lower.nats(), true)
        } else {
            let cert = cert.ok_or_else(|| {
                Error::Precondition("a tail certificate is needed to bound a non-zero tail".into())
            })?;
            let step = step_cost_nats(mu)?;
            let steps = &tail * (int(trunc.horizon() as i64 + 1) + cert.remainder_factor());
            (lower.nats() + step * to_f64(&steps), false)
        };
        Ok(HittingEntropyBracket { lower, upper_nats, exact, horizon: trunc.horizon(), tail })
    }

    /// `Σ μ(g₁)φ(g·g₁) − φ(g) − h_μ`, zero when `ν` is `μ`-stationary.
    pub fn nearly_harmonic_residual(&self, g: &GroupElement, mu: &FinMeasure) -> Result<PhiValue> {
        let gw = self.word(g)?;
        let mut shifted = FinMeasure::zero();
        for (x, w) in mu.iter() {
            shifted.add_atom(GroupElement::Word(free_concat(gw, self.word(x)?)), w.clone());
        }
        let q = self.integrate_phi(&shifted)? - self.phi(g)?.q - self.furstenberg_entropy(mu)?.q;
        Ok(PhiValue { q, branching: self.branching() })
    }

    /// Both sides of the telescoped optional-stopping identity for `n = 1..=N`:
    /// `h_μ·Σ_{j=1}^{n} Σ_{k≥j} t_k = Σ_{k≤n} θ^(k)(φ) + R_n`.
    pub fn telescoping_check(
        &self,
        mu: &FinMeasure,
        action: &CosetAction,
        horizon: usize,
        cap: usize,
    ) -> Result<Vec<TelescopingRow>> {
        let h_mu = self.furstenberg_entropy(mu)?.q;
        let step = step_cost_nats(mu)?;
        let mut rows = Vec::with_capacity(horizon);
        let mut hit_sum = Rational::zero();
        let mut survive_sum = Rational::zero(); // Σ_{j<n} P{τ > j}
        let mut prev_tail = Rational::one();
        let mut err = None;
        first_passage_visit(&self.group, action, mu, &self.group.identity(), horizon, cap, |n, hit, rest| {
            let result = (|| -> Result<()> {
                survive_sum += &prev_tail;
                hit_sum += self.integrate_phi(hit)?;
                let remainder = self.integrate_phi(rest)?;
                let lhs = &h_mu * &survive_sum;
                let equal = lhs == &hit_sum + &remainder;
                let remainder_bound_nats = n as f64 * step * to_f64(rest.mass());
                rows.push(TelescopingRow { n, lhs, hit_sum: hit_sum.clone(), remainder, remainder_bound_nats, equal });
                prev_tail = rest.mass().clone();
                Ok(())
            })();
            if let Err(e) = result {
                err.get_or_insert(e);
            }
        })?;
        match err {
            Some(e) => Err(e),
            None => Ok(rows),
        }
    }

    /// `φ(g₁⋯g_n) ≤ −Σ log μ(g_i)`.
    pub fn phi_bound_check(&self, steps: &[GroupElement], mu: &FinMeasure) -> Result<PhiBoundReport> {
        let mut prod: Vec<Letter> = Vec::new();
        let mut bound_nats = 0.0;
        for g in steps {
            let w = mu.get(g);
            if w.is_zero() {
                return Err(Error::Precondition(format!("{g:?} is outside the support of μ")));
            }
            bound_nats -= ln_rational(&w);
            prod = free_concat(&prod, self.word(g)?);
        }
        let phi = self.phi(&GroupElement::Word(prod))?;
        let slack_nats = bound_nats - phi.nats();
        Ok(PhiBoundReport { phi, bound_nats, slack_nats, holds: slack_nats >= -FLOAT_GUARD })
    }

    /// `μ ∗ ν = ν` on every cylinder of depth `1..=depth`.
    pub fn is_stationary(&self, mu: &FinMeasure, depth: usize) -> Result<bool> {
        let steps: Vec<(Vec<Letter>, Rational)> =
            mu.iter().map(|(g, w)| Ok((free_inverse(self.word(g)?), w.clone()))).collect::<Result<_>>()?;
        for d in 1..=depth {
            for w in self.cylinders(d) {
                let pushed: Rational =
                    steps.iter().map(|(ginv, p)| p * self.translated_cylinder_measure(ginv, &w)).sum();
                if pushed != self.cylinder_measure(&w) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Furstenberg transform `h(g) = ∫ f(gx) dν(x) = Σ c_i·ν(g⁻¹[w_i])`.
    pub fn furstenberg_transform(&self, f: &CylinderFunction, g: &GroupElement) -> Result<Rational> {
        let ginv = free_inverse(self.word(g)?);
        Ok(f.terms.iter().map(|(w, c)| c * self.translated_cylinder_measure(&ginv, w)).sum())
    }

    /// `Σ μ(g₁)·h(g·g₁) − h(g)` for the transform `h` of `f`.
    pub fn harmonicity_residual(&self, f: &CylinderFunction, g: &GroupElement, mu: &FinMeasure) -> Result<Rational> {
        let gw = self.word(g)?;
        let mut mean = Rational::zero();
        for (x, w) in mu.iter() {
            mean += w * self.furstenberg_transform(f, &GroupElement::Word(free_concat(gw, self.word(x)?)))?;
        }
        Ok(mean - self.furstenberg_transform(f, g)?)
    }

    /// `‖f‖∞` over the boundary.
    pub fn sup_norm(&self, f: &CylinderFunction) -> Rational {
        self.cylinders(f.depth())
            .iter()
            .map(|v| f.value_on(v).abs())
            .max()
            .unwrap_or_else(Rational::zero)
    }

    /// Restriction of `h = F(f)` to the subgroup, checked against the hitting
    /// measure `θ_g` truncated at `N`.
    pub fn restriction_check(&self, f: &CylinderFunction, trunc: &HittingTruncation) -> Result<RestrictionCheck> {
        let h_at = |x: &GroupElement| self.furstenberg_transform(f, x);
        let value = h_at(&trunc.start)?;
        let mut hit_part = Rational::zero();
        let mut hit_sup = Rational::zero();
        for level in &trunc.levels {
            for (lam, w) in level.iter() {
                let hl = h_at(lam)?;
                hit_sup = hit_sup.max(hl.abs());
                hit_part += w * hl;
            }
        }
        let mut survivor_part = Rational::zero();
        for (x, w) in trunc.survivors.iter() {
            survivor_part += w * h_at(x)?;
        }
        let bound = self.sup_norm(f) * trunc.tail();
        let gap = (&value - &hit_part).abs();
        Ok(RestrictionCheck {
            within_bracket: gap <= bound,
            // optional stopping at the horizon is exact for bounded harmonic functions
            stopped_identity: value == &hit_part + &survivor_part,
            // |h(g)| is an average of values on the subgroup, up to the tail
            isometry: value.abs() <= &hit_sup * (Rational::one() - trunc.tail()) + &bound,
            value,
            hit_part,
            bound,
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RestrictionCheck {
    #[serde(with = "crate::rational::serde_str")]
    pub value: Rational,
    #[serde(with = "crate::rational::serde_str")]
    pub hit_part: Rational,
    #[serde(with = "crate::rational::serde_str")]
    pub bound: Rational,
    pub within_bracket: bool,
    pub stopped_identity: bool,
    pub isometry: bool,
}

/// `−log min μ` in nats: the largest per-step charge `−log μ(X_i)`.
pub fn step_cost_nats(mu: &FinMeasure) -> Result<f64> {
    let w = mu.min_weight().ok_or_else(|| Error::InvalidMeasure("empty measure".into()))?;
    Ok(-ln_rational(w))
}

/// A finite `G`-space `Γ\G` with a measure on the coset labels; `G` acts on
/// the left by `g·x = x·g⁻¹`.
#[derive(Clone, Debug)]
pub struct QuotientSpace<'a> {
    action: &'a CosetAction,
    nu: Vec<Rational>,
}

impl<'a> QuotientSpace<'a> {
    pub fn uniform(action: &'a CosetAction) -> Self {
        let m = action.index();
        QuotientSpace { action, nu: vec![rat(1, m as i64); m] }
    }

    /// `Σ μ(g)·ν(g⁻¹·x) = ν(x)` for every label `x`.
    pub fn is_stationary(&self, mu: &FinMeasure) -> Result<bool> {
        let m = self.nu.len();
        let mut pushed = vec![Rational::zero(); m];
        for (g, w) in mu.iter() {
            for (x, px) in pushed.iter_mut().enumerate() {
                *px += w * &self.nu[self.action.act(x, g)?];
            }
        }
        Ok(pushed == self.nu)
    }

    /// `φ(g) = Σ ν(x)·(log ν(x) − log ν(g·x))`.
    pub fn phi(&self, model: &GroupModel, g: &GroupElement) -> Result<LogValue> {
        let ginv = model.invert(g);
        let mut acc = LogValue::zero();
        for (x, px) in self.nu.iter().enumerate() {
            if px.is_zero() {
                continue;
            }
            let gx = &self.nu[self.action.act(x, &ginv)?];
            acc = acc.add(&LogValue::ln(&(px / gx)).scale(px));
        }
        Ok(acc)
    }

    pub fn furstenberg_entropy(&self, model: &GroupModel, mu: &FinMeasure) -> Result<LogValue> {
        let mut acc = LogValue::zero();
        for (g, w) in mu.iter() {
            acc = acc.add(&self.phi(model, g)?.scale(w));
        }
        Ok(acc)
    }
}

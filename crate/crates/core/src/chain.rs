//! The projected Markov chain on coset labels: transition matrix, its
//! certificates, exact return times, and exact avoidance probabilities.

use num_traits::{One, Zero};
use serde::Serialize;

use crate::coset::CosetAction;
use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupModel};
use crate::measure::FinMeasure;
use crate::rational::{int, ln_rational, Rational};

pub type Matrix = Vec<Vec<Rational>>;

#[derive(Clone, Debug)]
pub struct CosetChain {
    p: Matrix,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainCertificates {
    pub rows_sum_to_one: bool,
    pub columns_sum_to_one: bool,
    pub irreducible: bool,
    pub uniform_stationary: bool,
}

impl ChainCertificates {
    pub fn all(&self) -> bool {
        self.rows_sum_to_one && self.columns_sum_to_one && self.irreducible && self.uniform_stationary
    }
}

fn mat_vec(a: &Matrix, v: &[Rational]) -> Vec<Rational> {
    a.iter().map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

fn vec_mat(v: &[Rational], a: &Matrix, m: usize) -> Vec<Rational> {
    let mut out = vec![Rational::zero(); m];
    for (i, vi) in v.iter().enumerate() {
        if vi.is_zero() {
            continue;
        }
        for (j, aij) in a[i].iter().enumerate() {
            if !aij.is_zero() {
                out[j] += vi * aij;
            }
        }
    }
    out
}

/// Solves `a·x = b` by Gauss–Jordan elimination over the rationals.
pub fn solve(mut a: Matrix, mut b: Vec<Rational>) -> Result<Vec<Rational>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero()).ok_or(Error::Singular)?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let inv = a[col][col].recip();
        for x in a[col].iter_mut() {
            *x *= &inv;
        }
        b[col] *= &inv;
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].clone();
            for c in col..n {
                let delta = &f * &a[col][c];
                a[r][c] -= delta;
            }
            let delta = &f * &b[col];
            b[r] -= delta;
        }
    }
    Ok(b)
}

impl CosetChain {
    /// `p(i, j) = Σ { μ(g) : i·g = j }`; fails if the projection is reducible.
    pub fn build(model: &GroupModel, action: &CosetAction, mu: &FinMeasure) -> Result<Self> {
        mu.check_model(model)?;
        if !mu.is_probability() {
            return Err(Error::InvalidMeasure(format!("step measure has mass {}", mu.mass())));
        }
        if !mu.projected_generation_check(action)? {
            return Err(Error::Reducible);
        }
        let m = action.index();
        let mut p = vec![vec![Rational::zero(); m]; m];
        for (g, w) in mu.iter() {
            for (i, j) in action.permutation_of(g)?.into_iter().enumerate() {
                p[i][j] += w;
            }
        }
        Ok(CosetChain { p })
    }

    pub fn size(&self) -> usize {
        self.p.len()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.p
    }

    /// `Q`: transitions among the non-base cosets.
    pub fn avoidance_block(&self) -> Matrix {
        self.p[1..].iter().map(|row| row[1..].to_vec()).collect()
    }

    /// `r`: row 0 restricted to the non-base cosets.
    pub fn entry_vector(&self) -> Vec<Rational> {
        self.p[0][1..].to_vec()
    }

    /// `s`: one-step absorption into the base coset from each non-base coset.
    pub fn absorption_vector(&self) -> Vec<Rational> {
        self.p[1..].iter().map(|row| row[0].clone()).collect()
    }

    pub fn certificates(&self) -> ChainCertificates {
        let m = self.size();
        let one = Rational::one();
        let rows = self.p.iter().all(|row| row.iter().sum::<Rational>() == one);
        let cols = (0..m).all(|j| self.p.iter().map(|row| &row[j]).sum::<Rational>() == one);
        let uniform = vec![Rational::new(1.into(), (m as i64).into()); m];
        let stationary = vec_mat(&uniform, &self.p, m) == uniform;
        ChainCertificates {
            rows_sum_to_one: rows,
            columns_sum_to_one: cols,
            irreducible: self.is_irreducible(),
            uniform_stationary: stationary,
        }
    }

    fn is_irreducible(&self) -> bool {
        let m = self.size();
        let reach = |transpose: bool| {
            let mut seen = vec![false; m];
            seen[0] = true;
            let mut stack = vec![0];
            while let Some(i) = stack.pop() {
                for j in 0..m {
                    let w = if transpose { &self.p[j][i] } else { &self.p[i][j] };
                    if !w.is_zero() && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
            seen.iter().all(|&s| s)
        };
        reach(false) && reach(true)
    }

    /// Expected hitting time of the base coset from each non-base coset:
    /// the solution of `(I − Q)·x = 1`.
    pub fn hitting_times(&self) -> Result<Vec<Rational>> {
        let q = self.avoidance_block();
        let n = q.len();
        let a: Matrix = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { Rational::one() - &q[i][j] } else { -q[i][j].clone() })
                    .collect()
            })
            .collect();
        solve(a, vec![Rational::one(); n])
    }

    /// `E[τ] = 1 + r·(I − Q)⁻¹·1`.
    pub fn expected_return_time(&self) -> Result<Rational> {
        let x = self.hitting_times()?;
        Ok(Rational::one() + self.entry_vector().iter().zip(&x).map(|(a, b)| a * b).sum::<Rational>())
    }

    /// `[P{τ > n}]` for `n = 0..=n_max`, with `P{τ > n} = r·Qⁿ⁻¹·1` for `n ≥ 1`.
    pub fn avoidance_tails(&self, n_max: usize) -> Vec<Rational> {
        let q = self.avoidance_block();
        let r = self.entry_vector();
        let mut v = vec![Rational::one(); q.len()];
        let mut out = vec![Rational::one()];
        for _ in 1..=n_max {
            out.push(r.iter().zip(&v).map(|(a, b)| a * b).sum());
            v = mat_vec(&q, &v);
        }
        out
    }

    pub fn avoidance_tail(&self, n: usize) -> Rational {
        self.avoidance_tails(n).pop().expect("non-empty")
    }

    /// `‖Qⁿ·1‖∞` for `n = 0..=n_max`: the worst-case probability, over non-base
    /// starting cosets, of avoiding the base coset for `n` steps.
    pub fn worst_case_avoidance(&self, n_max: usize) -> Vec<Rational> {
        let q = self.avoidance_block();
        let mut v = vec![Rational::one(); q.len()];
        let mut out = Vec::with_capacity(n_max + 1);
        for _ in 0..=n_max {
            out.push(v.iter().max().cloned().unwrap_or_else(Rational::zero));
            v = mat_vec(&q, &v);
        }
        out
    }

    /// Certifies `P{τ > n} ≤ e^{−Cn}` (and the same for every starting coset)
    /// on `n₀ ≤ n ≤ n_max` from the exact tails, plus a renewal window `w`
    /// with `‖Q^w·1‖∞ = q < 1` that bounds every tail beyond `n_max`.
    pub fn tail_rate_certificate(&self, n_max: usize) -> Result<TailCertificate> {
        let m = self.size();
        if n_max < m {
            return Err(Error::Precondition(format!("n_max = {n_max} must be at least the index {m}")));
        }
        let tails = self.avoidance_tails(n_max);
        let worst = self.worst_case_avoidance(n_max);
        let combined: Vec<Rational> =
            tails.iter().zip(&worst).map(|(t, u)| std::cmp::max(t, u).clone()).collect();
        let one = Rational::one();
        let n0 = (1..=n_max)
            .find(|&n| combined[n] < one)
            .ok_or_else(|| Error::Precondition("tails never drop below 1".into()))?;
        let positive: Vec<usize> = (n0..=n_max).filter(|&n| !combined[n].is_zero()).collect();
        let rate = positive
            .iter()
            .map(|&n| -ln_rational(&combined[n]) / n as f64)
            .fold(None, |acc: Option<f64>, c| Some(acc.map_or(c, |a| a.min(c))))
            // shrink so the bound is not an exact float tie at the minimizer
            .map(|c| c * (1.0 - 1e-9));
        let vanishes_from = if positive.is_empty() {
            Some(n0)
        } else {
            let last = *positive.last().expect("non-empty");
            (last < n_max).then_some(last + 1)
        };
        let (window, window_ratio) = if m == 1 {
            (1, Rational::zero())
        } else {
            let w = (1..=n_max).find(|&w| worst[w] < one).expect("irreducible chain");
            (w, worst[w].clone())
        };
        Ok(TailCertificate { n0, n_max, rate, vanishes_from, window, window_ratio, tails, worst_case: worst })
    }

    /// `P{τ > n | X_k = g}`: the walk avoids the base coset for steps
    /// `1..=n` given that its `k`-th increment is `g`.
    pub fn conditional_avoidance(
        &self,
        action: &CosetAction,
        mu: &FinMeasure,
        n: usize,
        k: usize,
        g: &GroupElement,
    ) -> Result<Rational> {
        if k == 0 || k > n {
            return Err(Error::Precondition(format!("need 1 ≤ k ≤ n, got k = {k}, n = {n}")));
        }
        if mu.get(g).is_zero() {
            return Err(Error::Precondition("pinned increment is outside the support".into()));
        }
        let m = self.size();
        let pinned = action.permutation_of(g)?;
        let mut v = vec![Rational::zero(); m];
        v[0] = Rational::one();
        for step in 1..=n {
            v = if step == k {
                let mut out = vec![Rational::zero(); m];
                for (i, x) in v.into_iter().enumerate() {
                    out[pinned[i]] += x;
                }
                out
            } else {
                vec_mat(&v, &self.p, m)
            };
            v[0] = Rational::zero();
        }
        Ok(v.into_iter().sum())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TailCertificate {
    pub n0: usize,
    pub n_max: usize,
    /// Certified decay rate `C`; `None` when the tails vanish (any rate works).
    pub rate: Option<f64>,
    /// First `n` from which every computed tail is exactly zero.
    pub vanishes_from: Option<usize>,
    /// Renewal window `w`.
    pub window: usize,
    /// `‖Q^w·1‖∞ < 1`.
    #[serde(with = "crate::rational::serde_str")]
    pub window_ratio: Rational,
    #[serde(skip)]
    pub tails: Vec<Rational>,
    #[serde(skip)]
    pub worst_case: Vec<Rational>,
}

impl TailCertificate {
    /// The certified bound `e^{−Cx}` at a (possibly fractional) time `x`.
    pub fn bound(&self, x: f64) -> f64 {
        match (self.rate, self.vanishes_from) {
            (_, Some(v)) if x >= v as f64 => 0.0,
            (Some(c), _) => (-c * x).exp(),
            (None, _) => 1.0,
        }
    }

    /// Whether every exact tail, from the base coset and from the worst
    /// starting coset, obeys the bound on `n₀ ≤ n ≤ n_max`.
    pub fn holds(&self) -> bool {
        (self.n0..=self.n_max).all(|n| {
            let b = self.bound(n as f64);
            crate::rational::to_f64(&self.tails[n]) <= b && crate::rational::to_f64(&self.worst_case[n]) <= b
        })
    }

    /// Half-length bound `e^{−C(n−1)/2}` for conditional avoidance.
    pub fn half_split_bound(&self, n: usize) -> f64 {
        let x = (n as f64 - 1.0) / 2.0;
        match (self.rate, self.vanishes_from) {
            (_, Some(v)) if x.ceil() >= v as f64 => 0.0,
            (Some(c), _) => (-c * x).exp(),
            (None, _) => 1.0,
        }
    }

    /// Factor `F` with `Σ_{n>N} P{τ>n} ≤ F·P{τ>N}` for every `N`:
    /// `(w − 1) + w·q/(1 − q)`.
    pub fn remainder_factor(&self) -> Rational {
        let w = int(self.window as i64);
        let q = &self.window_ratio;
        (&w - Rational::one()) + &w * q / (Rational::one() - q)
    }
}

//! Finite-support measures on group elements with exact rational weights.

use std::collections::{HashMap, VecDeque};

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::coset::CosetAction;
use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupModel};
use crate::logvalue::{shannon_entropy, LogValue};
use crate::rational::{parse_rational, Rational};

/// Entropy in nats with an exact `Σ c_p log p` part when available.
pub type EntropyValue = LogValue;

/// Default cap on the number of atoms a computed measure may hold.
pub const DEFAULT_SUPPORT_CAP: usize = 10_000_000;

/// Product count above which convolution fans out over worker threads.
const PARALLEL_THRESHOLD: usize = 1 << 16;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FinMeasure {
    atoms: HashMap<GroupElement, Rational>,
    mass: Rational,
}

impl Default for FinMeasure {
    fn default() -> Self {
        FinMeasure::zero()
    }
}

impl FinMeasure {
    pub fn zero() -> Self {
        FinMeasure { atoms: HashMap::new(), mass: Rational::zero() }
    }

    /// Builds a (sub-)probability measure; repeated atoms are summed and zero
    /// weights dropped.
    pub fn new(atoms: impl IntoIterator<Item = (GroupElement, Rational)>) -> Result<Self> {
        let mut m = FinMeasure::zero();
        for (g, w) in atoms {
            if w.is_negative() {
                return Err(Error::InvalidMeasure(format!("negative weight {w}")));
            }
            m.add_atom(g, w);
        }
        if m.mass > Rational::one() {
            return Err(Error::InvalidMeasure(format!("total mass {} exceeds 1", m.mass)));
        }
        Ok(m)
    }

    pub fn dirac(g: GroupElement) -> Self {
        let mut atoms = HashMap::new();
        atoms.insert(g, Rational::one());
        FinMeasure { atoms, mass: Rational::one() }
    }

    pub fn uniform(elements: impl IntoIterator<Item = GroupElement>) -> Result<Self> {
        let elements: Vec<GroupElement> = elements.into_iter().collect();
        if elements.is_empty() {
            return Err(Error::InvalidMeasure("uniform measure on an empty set".into()));
        }
        let w = Rational::new(1.into(), (elements.len() as i64).into());
        FinMeasure::new(elements.into_iter().map(|g| (g, w.clone())))
    }

    /// Simple random walk: uniform on the generators and their inverses.
    pub fn simple_random_walk(model: &GroupModel) -> Self {
        let elements = model.letters().into_iter().map(|l| model.letter(l).expect("own letter"));
        FinMeasure::uniform(elements).expect("non-empty alphabet")
    }

    /// Parses `(word, weight)` pairs; weights are `"p/q"` strings or decimals.
    pub fn from_words<S: AsRef<str>>(model: &GroupModel, pairs: &[(S, S)]) -> Result<Self> {
        let atoms = pairs
            .iter()
            .map(|(w, p)| Ok((model.parse_word(w.as_ref())?, parse_rational(p.as_ref())?)))
            .collect::<Result<Vec<_>>>()?;
        FinMeasure::new(atoms)
    }

    pub(crate) fn add_atom(&mut self, g: GroupElement, w: Rational) {
        if w.is_zero() {
            return;
        }
        self.mass += &w;
        *self.atoms.entry(g).or_insert_with(Rational::zero) += w;
    }

    pub fn mass(&self) -> &Rational {
        &self.mass
    }

    pub fn is_probability(&self) -> bool {
        self.mass.is_one()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn get(&self, g: &GroupElement) -> Rational {
        self.atoms.get(g).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&GroupElement, &Rational)> {
        self.atoms.iter()
    }

    /// Atoms in shortlex order of their canonical forms.
    pub fn sorted_atoms(&self) -> Vec<(&GroupElement, &Rational)> {
        let mut v: Vec<_> = self.atoms.iter().collect();
        v.sort_by(|a, b| a.0.sort_key().cmp(&b.0.sort_key()));
        v
    }

    pub fn min_weight(&self) -> Option<&Rational> {
        self.atoms.values().min()
    }

    /// `Σ m(g)·f(g)`.
    pub fn integrate(&self, mut f: impl FnMut(&GroupElement) -> Rational) -> Rational {
        self.atoms.iter().map(|(g, w)| w * f(g)).sum()
    }

    /// Splits into the parts on and off the subgroup (coset label 0).
    pub fn split_by_subgroup(&self, action: &CosetAction) -> Result<(FinMeasure, FinMeasure)> {
        let mut inside = FinMeasure::zero();
        let mut outside = FinMeasure::zero();
        for (g, w) in &self.atoms {
            if action.is_member(g)? {
                inside.add_atom(g.clone(), w.clone());
            } else {
                outside.add_atom(g.clone(), w.clone());
            }
        }
        Ok((inside, outside))
    }

    pub fn scale(&self, c: &Rational) -> FinMeasure {
        let mut out = FinMeasure::zero();
        for (g, w) in &self.atoms {
            out.add_atom(g.clone(), w * c);
        }
        out
    }

    /// Sum of two sub-probability measures.
    pub fn plus(&self, other: &FinMeasure) -> FinMeasure {
        let mut out = self.clone();
        for (g, w) in &other.atoms {
            out.add_atom(g.clone(), w.clone());
        }
        out
    }

    /// Rescales to total mass 1.
    pub fn normalized(&self) -> Result<FinMeasure> {
        if self.mass.is_zero() {
            return Err(Error::InvalidMeasure("cannot normalize the zero measure".into()));
        }
        let inv = self.mass.recip();
        Ok(self.scale(&inv))
    }

    /// Left translate `δ_g ∗ m`.
    pub fn translate(&self, model: &GroupModel, g: &GroupElement) -> Result<FinMeasure> {
        let mut out = FinMeasure::zero();
        for (h, w) in &self.atoms {
            out.add_atom(model.multiply(g, h)?, w.clone());
        }
        Ok(out)
    }

    pub fn check_model(&self, model: &GroupModel) -> Result<()> {
        self.atoms.keys().try_for_each(|g| model.check(g))
    }

    pub fn entropy(&self) -> Result<EntropyValue> {
        if !self.is_probability() {
            return Err(Error::InvalidMeasure(format!(
                "entropy needs a probability measure, got mass {}",
                self.mass
            )));
        }
        Ok(shannon_entropy(self.atoms.values()))
    }

    /// Whether the support's coset permutations make the projected chain irreducible.
    pub fn projected_generation_check(&self, action: &CosetAction) -> Result<bool> {
        let m = action.index();
        let perms: Vec<Vec<usize>> =
            self.atoms.keys().map(|g| action.permutation_of(g)).collect::<Result<_>>()?;
        let reach = |forward: bool| {
            let mut adj = vec![Vec::new(); m];
            for p in &perms {
                for (i, &j) in p.iter().enumerate() {
                    if forward {
                        adj[i].push(j);
                    } else {
                        adj[j].push(i);
                    }
                }
            }
            let mut seen = vec![false; m];
            seen[0] = true;
            let mut queue = VecDeque::from([0]);
            while let Some(i) = queue.pop_front() {
                for &j in &adj[i] {
                    if !seen[j] {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
            seen.into_iter().all(|s| s)
        };
        Ok(reach(true) && reach(false))
    }
}

/// `[m1 ∗ m2](g) = Σ m1(g')·m2(g'⁻¹g)`.
pub fn convolve(model: &GroupModel, m1: &FinMeasure, m2: &FinMeasure) -> Result<FinMeasure> {
    convolve_capped(model, m1, m2, usize::MAX)
}

/// Convolution that fails once the result would exceed `cap` atoms.
pub fn convolve_capped(
    model: &GroupModel,
    m1: &FinMeasure,
    m2: &FinMeasure,
    cap: usize,
) -> Result<FinMeasure> {
    let right: Vec<(&GroupElement, &Rational)> = m2.atoms.iter().collect();
    let product = |chunk: &[(&GroupElement, &Rational)]| -> Result<HashMap<GroupElement, Rational>> {
        let mut acc: HashMap<GroupElement, Rational> = HashMap::new();
        for (x, wx) in chunk {
            for (y, wy) in &right {
                let xy = model.multiply(x, y)?;
                *acc.entry(xy).or_insert_with(Rational::zero) += *wx * *wy;
            }
            if acc.len() > cap {
                return Err(Error::SupportCap { cap, step: 0, completed: 0 });
            }
        }
        Ok(acc)
    };
    let left: Vec<(&GroupElement, &Rational)> = m1.atoms.iter().collect();
    let mut atoms = if left.len() * right.len() >= PARALLEL_THRESHOLD {
        let chunk = left.len().div_ceil(rayon::current_num_threads().max(1) * 4).max(1);
        let parts: Vec<HashMap<GroupElement, Rational>> =
            left.par_chunks(chunk).map(product).collect::<Result<_>>()?;
        let mut merged: HashMap<GroupElement, Rational> = HashMap::new();
        for part in parts {
            for (g, w) in part {
                *merged.entry(g).or_insert_with(Rational::zero) += w;
            }
            if merged.len() > cap {
                return Err(Error::SupportCap { cap, step: 0, completed: 0 });
            }
        }
        merged
    } else {
        product(&left)?
    };
    atoms.retain(|_, w| !w.is_zero());
    if atoms.len() > cap {
        return Err(Error::SupportCap { cap, step: 0, completed: 0 });
    }
    Ok(FinMeasure { atoms, mass: &m1.mass * &m2.mass })
}

#[derive(Clone, Debug)]
pub struct SubadditivityReport {
    pub holds: bool,
    /// `H(m1) + H(m2) − H(m1 ∗ m2)`.
    pub slack: LogValue,
}

/// Checks `H(m1 ∗ m2) ≤ H(m1) + H(m2)` with a 1e-12 float guard.
pub fn entropy_subadditivity_check(
    model: &GroupModel,
    m1: &FinMeasure,
    m2: &FinMeasure,
) -> Result<SubadditivityReport> {
    let h1 = m1.entropy()?;
    let h2 = m2.entropy()?;
    let h12 = convolve(model, m1, m2)?.entropy()?;
    let slack = h1.add(&h2).sub(&h12);
    let holds = slack.nats() >= -1e-12;
    Ok(SubadditivityReport { holds, slack })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coset::parse_permutation;
    use crate::rational::rat;

    fn z() -> GroupModel {
        GroupModel::free_abelian(1).unwrap()
    }

    fn zsrw() -> FinMeasure {
        FinMeasure::simple_random_walk(&z())
    }

    #[test]
    fn integer_srw_square() {
        let m2 = convolve(&z(), &zsrw(), &zsrw()).unwrap();
        let expected = FinMeasure::new([
            (GroupElement::Vector(vec![-2]), rat(1, 4)),
            (GroupElement::Vector(vec![0]), rat(1, 2)),
            (GroupElement::Vector(vec![2]), rat(1, 4)),
        ])
        .unwrap();
        assert_eq!(m2, expected);
    }

    #[test]
    fn dirac_identity_is_neutral() {
        let g = GroupModel::free(2).unwrap();
        let mu = FinMeasure::simple_random_walk(&g);
        assert_eq!(convolve(&g, &FinMeasure::dirac(g.identity()), &mu).unwrap(), mu);
    }

    #[test]
    fn free_srw_return_probability() {
        let g = GroupModel::free(2).unwrap();
        let mu = FinMeasure::simple_random_walk(&g);
        let m2 = convolve(&g, &mu, &mu).unwrap();
        assert_eq!(m2.get(&g.identity()), rat(1, 4));
        assert_eq!(m2.len(), 13);
    }

    #[test]
    fn entropies() {
        let g = GroupModel::free(2).unwrap();
        let mu = FinMeasure::simple_random_walk(&g);
        assert_eq!(mu.entropy().unwrap().coefficient(2).unwrap(), rat(2, 1));
        assert!(FinMeasure::dirac(g.identity()).entropy().unwrap().is_exact_zero());
        let m2 = convolve(&g, &mu, &mu).unwrap();
        let h = m2.entropy().unwrap();
        assert_eq!(h.coefficients().unwrap().len(), 1);
        assert_eq!(h.coefficient(2).unwrap(), rat(7, 2));
    }

    #[test]
    fn entropy_rejects_sub_probability() {
        let half = FinMeasure::new([(GroupElement::Vector(vec![0]), rat(1, 2))]).unwrap();
        assert!(half.entropy().is_err());
    }

    #[test]
    fn subadditivity_slacks() {
        let zg = z();
        let r = entropy_subadditivity_check(&zg, &FinMeasure::dirac(zg.identity()), &zsrw()).unwrap();
        assert!(r.holds && r.slack.is_exact_zero());
        let r = entropy_subadditivity_check(&zg, &zsrw(), &zsrw()).unwrap();
        assert_eq!(r.slack.coefficient(2).unwrap(), rat(1, 2));
        let g = GroupModel::free(2).unwrap();
        let mu = FinMeasure::simple_random_walk(&g);
        let r = entropy_subadditivity_check(&g, &mu, &mu).unwrap();
        assert_eq!(r.slack.coefficient(2).unwrap(), rat(1, 2));
    }

    #[test]
    fn projected_generation() {
        let g = GroupModel::free(2).unwrap();
        let flip = CosetAction::new(&g, vec![vec![1, 0], vec![1, 0]]).unwrap();
        assert!(FinMeasure::simple_random_walk(&g).projected_generation_check(&flip).unwrap());
        let zg = z();
        let c3 = CosetAction::new(&zg, vec![parse_permutation("(0 1 2)", 3).unwrap()]).unwrap();
        let da = FinMeasure::dirac(GroupElement::Vector(vec![1]));
        assert!(da.projected_generation_check(&c3).unwrap());
        let inside = FinMeasure::dirac(GroupElement::Vector(vec![3]));
        assert!(!inside.projected_generation_check(&c3).unwrap());
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(FinMeasure::new([(GroupElement::Vector(vec![0]), rat(-1, 2))]).is_err());
        assert!(FinMeasure::new([(GroupElement::Vector(vec![0]), rat(3, 2))]).is_err());
        let m = FinMeasure::new([(GroupElement::Vector(vec![0]), rat(0, 1))]).unwrap();
        assert!(m.is_empty());
    }

    #[test]
    fn support_cap_is_enforced() {
        let g = GroupModel::free(2).unwrap();
        let mu = FinMeasure::simple_random_walk(&g);
        assert!(matches!(convolve_capped(&g, &mu, &mu, 5), Err(Error::SupportCap { .. })));
    }
}

//! Finite-index subgroups described by the right action of the generators on
//! coset labels `0..m`, with label 0 the subgroup itself.

use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::group::{check_permutation, GroupElement, GroupKind, GroupModel, Letter};

/// `(cycle id, position)` of every point, and the cycles themselves.
type CycleData = (Vec<(usize, usize)>, Vec<Vec<u32>>);

#[derive(Clone, Debug)]
pub struct CosetAction {
    size: usize,
    forward: Vec<Vec<u32>>,
    backward: Vec<Vec<u32>>,
    /// Cycle structure of each generator.
    cycles: Vec<CycleData>,
    /// Coset permutation of every element of a finite permutation model.
    images: Option<HashMap<Vec<u32>, Vec<u32>>>,
}

/// Parses a permutation of `0..size` given either in array notation
/// (`"1 2 0"`, images of 0, 1, 2) or cycle notation (`"(0 1 2)"`, `"()"`).
pub fn parse_permutation(spec: &str, size: usize) -> Result<Vec<u32>> {
    let spec = spec.trim();
    let bad = |why: &str| Error::InvalidPermutation(format!("{spec:?}: {why}"));
    let perm = if spec.starts_with('(') {
        let mut perm: Vec<u32> = (0..size as u32).collect();
        let mut seen = vec![false; size];
        for cycle in spec.split('(').skip(1) {
            let body = cycle.trim().strip_suffix(')').ok_or_else(|| bad("unclosed cycle"))?;
            let pts: Vec<u32> = body
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<u32>().map_err(|_| bad("non-integer point")))
                .collect::<Result<_>>()?;
            for (k, &p) in pts.iter().enumerate() {
                if p as usize >= size || std::mem::replace(&mut seen[p as usize], true) {
                    return Err(bad("point repeated or out of range"));
                }
                perm[p as usize] = pts[(k + 1) % pts.len()];
            }
        }
        perm
    } else {
        spec.split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<u32>().map_err(|_| bad("non-integer image")))
            .collect::<Result<Vec<u32>>>()?
    };
    check_permutation(&perm, size)?;
    Ok(perm)
}

fn invert(p: &[u32]) -> Vec<u32> {
    let mut inv = vec![0u32; p.len()];
    for (i, &x) in p.iter().enumerate() {
        inv[x as usize] = i as u32;
    }
    inv
}

fn cycle_data(p: &[u32]) -> CycleData {
    let mut pos = vec![(usize::MAX, 0); p.len()];
    let mut cycles = Vec::new();
    for start in 0..p.len() {
        if pos[start].0 != usize::MAX {
            continue;
        }
        let id = cycles.len();
        let mut cyc = Vec::new();
        let mut x = start;
        loop {
            pos[x] = (id, cyc.len());
            cyc.push(x as u32);
            x = p[x] as usize;
            if x == start {
                break;
            }
        }
        cycles.push(cyc);
    }
    (pos, cycles)
}

impl CosetAction {
    /// Binds one permutation per generator of `model` (images of `0..size`).
    ///
    /// Rejects non-bijective tables, non-transitive actions, and tables that do
    /// not define an action of the model (non-commuting images for `Z^d`, or
    /// images violating the relations of a finite permutation group).
    pub fn new(model: &GroupModel, generators: Vec<Vec<u32>>) -> Result<Self> {
        if generators.len() != model.rank() {
            return Err(Error::IncompatibleAction(format!(
                "{} generator tables for a model of rank {}",
                generators.len(),
                model.rank()
            )));
        }
        let size = generators.first().map(|g| g.len()).unwrap_or(0);
        if size == 0 {
            return Err(Error::InvalidPermutation("empty coset table".into()));
        }
        for g in &generators {
            check_permutation(g, size)?;
        }
        let backward: Vec<Vec<u32>> = generators.iter().map(|g| invert(g)).collect();
        let cycles = generators.iter().map(|g| cycle_data(g)).collect();
        let mut action = CosetAction { size, forward: generators, backward, cycles, images: None };
        action.check_transitive()?;
        match model.kind() {
            GroupKind::Free { .. } => {}
            GroupKind::FreeAbelian { .. } => action.check_commuting()?,
            GroupKind::Permutation { .. } => action.bind_permutation_model(model)?,
        }
        Ok(action)
    }

    /// The action of `G` on a single coset (Γ = G).
    pub fn trivial(model: &GroupModel) -> Result<Self> {
        Self::new(model, vec![vec![0]; model.rank()])
    }

    /// Number of cosets, i.e. the index of the subgroup.
    pub fn index(&self) -> usize {
        self.size
    }

    pub fn generator_tables(&self) -> &[Vec<u32>] {
        &self.forward
    }

    fn check_transitive(&self) -> Result<()> {
        let mut seen = vec![false; self.size];
        seen[0] = true;
        let mut queue = VecDeque::from([0usize]);
        let mut reached = 1;
        while let Some(i) = queue.pop_front() {
            for table in self.forward.iter().chain(&self.backward) {
                let j = table[i] as usize;
                if !seen[j] {
                    seen[j] = true;
                    reached += 1;
                    queue.push_back(j);
                }
            }
        }
        if reached != self.size {
            return Err(Error::NotTransitive { reached, size: self.size });
        }
        Ok(())
    }

    fn check_commuting(&self) -> Result<()> {
        for (i, p) in self.forward.iter().enumerate() {
            for q in &self.forward[i + 1..] {
                if (0..self.size).any(|x| q[p[x] as usize] != p[q[x] as usize]) {
                    return Err(Error::IncompatibleAction(
                        "generator tables of an abelian model must commute".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    fn bind_permutation_model(&mut self, model: &GroupModel) -> Result<()> {
        let elements = model.elements().expect("finite model");
        let mut images: HashMap<Vec<u32>, Vec<u32>> = HashMap::with_capacity(elements.len());
        for x in &elements {
            let word = model.letters_of(x);
            let img: Vec<u32> = (0..self.size).map(|i| self.fold(i, &word) as u32).collect();
            let GroupElement::Perm(p) = x else { unreachable!() };
            images.insert(p.clone(), img);
        }
        // The labelling is an action iff image(x·s) = image(x) followed by s for all x, s.
        for x in &elements {
            let GroupElement::Perm(p) = x else { unreachable!() };
            let img = &images[p];
            for l in model.letters() {
                let xs = model.multiply(x, &model.letter(l)?)?;
                let GroupElement::Perm(q) = &xs else { unreachable!() };
                let table = self.table(l);
                if (0..self.size).any(|i| images[q][i] != table[img[i] as usize]) {
                    return Err(Error::IncompatibleAction(
                        "coset tables do not respect the relations of the permutation group".into(),
                    ));
                }
            }
        }
        self.images = Some(images);
        Ok(())
    }

    fn table(&self, l: Letter) -> &[u32] {
        let i = l.unsigned_abs() as usize - 1;
        if l > 0 {
            &self.forward[i]
        } else {
            &self.backward[i]
        }
    }

    /// Applies a letter to coset `i`.
    pub fn step(&self, i: usize, l: Letter) -> usize {
        self.table(l)[i] as usize
    }

    fn fold(&self, i: usize, word: &[Letter]) -> usize {
        word.iter().fold(i, |c, &l| self.step(c, l))
    }

    fn power(&self, gen: usize, i: usize, exp: i64) -> usize {
        let (pos, cycles) = &self.cycles[gen];
        let (id, at) = pos[i];
        let cyc = &cycles[id];
        let len = cyc.len() as i64;
        cyc[((at as i64 + exp).rem_euclid(len)) as usize] as usize
    }

    /// Right action of a group element on coset `i`: the label of `Γ h g` when `i` labels `Γ h`.
    pub fn act(&self, i: usize, g: &GroupElement) -> Result<usize> {
        match g {
            GroupElement::Word(w) => {
                if w.iter().any(|&l| l == 0 || l.unsigned_abs() as usize > self.forward.len()) {
                    return Err(Error::ModelMismatch("letter outside the action's alphabet".into()));
                }
                Ok(self.fold(i, w))
            }
            GroupElement::Vector(v) => {
                if v.len() != self.forward.len() {
                    return Err(Error::ModelMismatch("vector rank differs from the action".into()));
                }
                Ok(v.iter().enumerate().fold(i, |c, (k, &x)| self.power(k, c, x)))
            }
            GroupElement::Perm(p) => {
                let images = self
                    .images
                    .as_ref()
                    .ok_or_else(|| Error::ModelMismatch("permutation element on a word model action".into()))?;
                let img = images
                    .get(p)
                    .ok_or_else(|| Error::ModelMismatch("permutation outside the bound group".into()))?;
                Ok(img[i] as usize)
            }
        }
    }

    /// Label of the coset `Γg`.
    pub fn coset_of(&self, g: &GroupElement) -> Result<usize> {
        self.act(0, g)
    }

    pub fn is_member(&self, g: &GroupElement) -> Result<bool> {
        Ok(self.coset_of(g)? == 0)
    }

    /// The permutation of coset labels induced by `g`.
    pub fn permutation_of(&self, g: &GroupElement) -> Result<Vec<usize>> {
        (0..self.size).map(|i| self.act(i, g)).collect()
    }
}

//! Canonical-form group elements for the supported group models: free groups,
//! free abelian groups and finite permutation groups.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// A generator or its formal inverse: `+(i+1)` is generator `i`, `-(i+1)` its inverse.
pub type Letter = i8;

/// Largest supported number of generators (letters `a`..`z`).
pub const MAX_RANK: usize = 26;

/// Largest finite permutation group that will be enumerated.
pub const MAX_PERM_GROUP_ORDER: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroupElement {
    /// Freely reduced word.
    Word(Vec<Letter>),
    /// Exponent vector in `Z^d`.
    Vector(Vec<i64>),
    /// Image list of a permutation of `0..degree`.
    Perm(Vec<u32>),
}

impl GroupElement {
    /// Shortlex key used to order elements in reports.
    pub fn sort_key(&self) -> (usize, &GroupElement) {
        let len = match self {
            GroupElement::Word(w) => w.len(),
            GroupElement::Vector(v) => v.iter().map(|x| x.unsigned_abs() as usize).sum(),
            GroupElement::Perm(_) => 0,
        };
        (len, self)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GroupKind {
    Free { rank: usize },
    FreeAbelian { rank: usize },
    Permutation { degree: usize, generators: Vec<Vec<u32>> },
}

/// Enumeration of a finite permutation group with shortlex-minimal words.
#[derive(Clone, Debug)]
struct PermTable {
    index: HashMap<Vec<u32>, usize>,
    words: Vec<Vec<Letter>>,
}

#[derive(Clone, Debug)]
pub struct GroupModel {
    kind: GroupKind,
    perms: Option<PermTable>,
}

pub fn letter_char(l: Letter) -> char {
    let idx = l.unsigned_abs() - 1;
    if l > 0 {
        (b'a' + idx) as char
    } else {
        (b'A' + idx) as char
    }
}

pub fn char_letter(c: char) -> Option<Letter> {
    match c {
        'a'..='z' => Some((c as u8 - b'a') as Letter + 1),
        'A'..='Z' => Some(-((c as u8 - b'A') as Letter + 1)),
        _ => None,
    }
}

pub fn format_letters(w: &[Letter]) -> String {
    if w.is_empty() {
        return "1".to_string();
    }
    w.iter().map(|&l| letter_char(l)).collect()
}

/// Stack-scan free reduction.
pub fn free_reduce(word: &[Letter]) -> Vec<Letter> {
    let mut out: Vec<Letter> = Vec::with_capacity(word.len());
    for &l in word {
        if out.last() == Some(&-l) {
            out.pop();
        } else {
            out.push(l);
        }
    }
    out
}

/// Product of two already reduced words, cancelling only at the seam.
pub fn free_concat(a: &[Letter], b: &[Letter]) -> Vec<Letter> {
    let mut k = 0;
    while k < a.len() && k < b.len() && a[a.len() - 1 - k] == -b[k] {
        k += 1;
    }
    let mut out = Vec::with_capacity(a.len() + b.len() - 2 * k);
    out.extend_from_slice(&a[..a.len() - k]);
    out.extend_from_slice(&b[k..]);
    out
}

pub fn free_inverse(w: &[Letter]) -> Vec<Letter> {
    w.iter().rev().map(|&l| -l).collect()
}

fn compose(p: &[u32], q: &[u32]) -> Vec<u32> {
    // x ↦ q(p(x)): apply p first, matching the right action used everywhere.
    p.iter().map(|&x| q[x as usize]).collect()
}

fn inverse_perm(p: &[u32]) -> Vec<u32> {
    let mut inv = vec![0u32; p.len()];
    for (i, &x) in p.iter().enumerate() {
        inv[x as usize] = i as u32;
    }
    inv
}

pub(crate) fn check_permutation(p: &[u32], degree: usize) -> Result<()> {
    if p.len() != degree {
        return Err(Error::InvalidPermutation(format!(
            "expected {degree} images, got {}",
            p.len()
        )));
    }
    let mut seen = vec![false; degree];
    for &x in p {
        let x = x as usize;
        if x >= degree || seen[x] {
            return Err(Error::InvalidPermutation(format!("{p:?} is not a bijection on 0..{degree}")));
        }
        seen[x] = true;
    }
    Ok(())
}

impl GroupModel {
    pub fn free(rank: usize) -> Result<Self> {
        if rank == 0 || rank > MAX_RANK {
            return Err(Error::Config(format!("free group rank must be in 1..={MAX_RANK}")));
        }
        Ok(GroupModel { kind: GroupKind::Free { rank }, perms: None })
    }

    pub fn free_abelian(rank: usize) -> Result<Self> {
        if rank == 0 || rank > MAX_RANK {
            return Err(Error::Config(format!("free abelian rank must be in 1..={MAX_RANK}")));
        }
        Ok(GroupModel { kind: GroupKind::FreeAbelian { rank }, perms: None })
    }

    /// Finite group generated by the given permutations of `0..degree`.
    pub fn permutation(degree: usize, generators: Vec<Vec<u32>>) -> Result<Self> {
        if generators.is_empty() || generators.len() > MAX_RANK {
            return Err(Error::Config(format!(
                "permutation group needs 1..={MAX_RANK} generators"
            )));
        }
        for g in &generators {
            check_permutation(g, degree)?;
        }
        let table = enumerate_perm_group(degree, &generators)?;
        Ok(GroupModel {
            kind: GroupKind::Permutation { degree, generators },
            perms: Some(table),
        })
    }

    pub fn kind(&self) -> &GroupKind {
        &self.kind
    }

    /// Number of generators (letters `a`, `b`, ...).
    pub fn rank(&self) -> usize {
        match &self.kind {
            GroupKind::Free { rank } | GroupKind::FreeAbelian { rank } => *rank,
            GroupKind::Permutation { generators, .. } => generators.len(),
        }
    }

    pub fn is_free(&self) -> bool {
        matches!(self.kind, GroupKind::Free { .. })
    }

    /// Order of the group when finite.
    pub fn order(&self) -> Option<usize> {
        self.perms.as_ref().map(|t| t.words.len())
    }

    pub fn identity(&self) -> GroupElement {
        match &self.kind {
            GroupKind::Free { .. } => GroupElement::Word(Vec::new()),
            GroupKind::FreeAbelian { rank } => GroupElement::Vector(vec![0; *rank]),
            GroupKind::Permutation { degree, .. } => {
                GroupElement::Perm((0..*degree as u32).collect())
            }
        }
    }

    /// All `2·rank` letters in the order `a, A, b, B, ...`.
    pub fn letters(&self) -> Vec<Letter> {
        (1..=self.rank() as Letter).flat_map(|i| [i, -i]).collect()
    }

    pub fn letter(&self, l: Letter) -> Result<GroupElement> {
        let i = l.unsigned_abs() as usize;
        if l == 0 || i > self.rank() {
            return Err(Error::InvalidWord {
                word: letter_char_checked(l),
                reason: format!("letter outside the alphabet of rank {}", self.rank()),
            });
        }
        Ok(match &self.kind {
            GroupKind::Free { .. } => GroupElement::Word(vec![l]),
            GroupKind::FreeAbelian { rank } => {
                let mut v = vec![0; *rank];
                v[i - 1] = if l > 0 { 1 } else { -1 };
                GroupElement::Vector(v)
            }
            GroupKind::Permutation { generators, .. } => {
                let g = &generators[i - 1];
                GroupElement::Perm(if l > 0 { g.clone() } else { inverse_perm(g) })
            }
        })
    }

    /// Checks that `a` is a canonical element of this model.
    pub fn check(&self, a: &GroupElement) -> Result<()> {
        match (&self.kind, a) {
            (GroupKind::Free { rank }, GroupElement::Word(w)) => {
                if w.iter().any(|&l| l == 0 || l.unsigned_abs() as usize > *rank) {
                    return Err(Error::ModelMismatch(format!("letter outside rank {rank}")));
                }
                if free_reduce(w) != *w {
                    return Err(Error::ModelMismatch("word is not freely reduced".into()));
                }
                Ok(())
            }
            (GroupKind::FreeAbelian { rank }, GroupElement::Vector(v)) if v.len() == *rank => Ok(()),
            (GroupKind::Permutation { .. }, GroupElement::Perm(p)) => {
                let table = self.perms.as_ref().expect("permutation table");
                if table.index.contains_key(p) {
                    Ok(())
                } else {
                    Err(Error::ModelMismatch("permutation outside the generated group".into()))
                }
            }
            _ => Err(Error::ModelMismatch(format!("element {a:?} does not belong to {:?}", self.kind))),
        }
    }

    pub fn multiply(&self, a: &GroupElement, b: &GroupElement) -> Result<GroupElement> {
        match (&self.kind, a, b) {
            (GroupKind::Free { .. }, GroupElement::Word(x), GroupElement::Word(y)) => {
                Ok(GroupElement::Word(free_concat(x, y)))
            }
            (GroupKind::FreeAbelian { rank }, GroupElement::Vector(x), GroupElement::Vector(y))
                if x.len() == *rank && y.len() == *rank =>
            {
                Ok(GroupElement::Vector(x.iter().zip(y).map(|(p, q)| p + q).collect()))
            }
            (GroupKind::Permutation { degree, .. }, GroupElement::Perm(x), GroupElement::Perm(y))
                if x.len() == *degree && y.len() == *degree =>
            {
                Ok(GroupElement::Perm(compose(x, y)))
            }
            _ => Err(Error::ModelMismatch(format!(
                "cannot multiply {a:?} and {b:?} in {:?}",
                self.kind
            ))),
        }
    }

    pub fn invert(&self, a: &GroupElement) -> GroupElement {
        match a {
            GroupElement::Word(w) => GroupElement::Word(free_inverse(w)),
            GroupElement::Vector(v) => GroupElement::Vector(v.iter().map(|x| -x).collect()),
            GroupElement::Perm(p) => GroupElement::Perm(inverse_perm(p)),
        }
    }

    /// Length of the reduced word (the L1 norm for `Z^d`).
    pub fn word_length(&self, a: &GroupElement) -> Result<usize> {
        match a {
            GroupElement::Word(w) => Ok(w.len()),
            GroupElement::Vector(v) => Ok(v.iter().map(|x| x.unsigned_abs() as usize).sum()),
            GroupElement::Perm(_) => Err(Error::Unsupported("word length in a finite permutation model")),
        }
    }

    /// Evaluates a word over `a, A, b, B, ...`; `"1"` and `""` denote the identity.
    pub fn parse_word(&self, s: &str) -> Result<GroupElement> {
        let s = s.trim();
        let mut acc = self.identity();
        if s == "1" || s.is_empty() {
            return Ok(acc);
        }
        for c in s.chars() {
            let l = char_letter(c).ok_or_else(|| Error::InvalidWord {
                word: s.to_string(),
                reason: format!("unexpected character {c:?}"),
            })?;
            let g = self.letter(l).map_err(|_| Error::InvalidWord {
                word: s.to_string(),
                reason: format!("letter {c:?} outside rank {}", self.rank()),
            })?;
            acc = self.multiply(&acc, &g)?;
        }
        Ok(acc)
    }

    /// Word spelling of an element: the reduced word, `a^x b^y ...` for vectors,
    /// and the shortlex-minimal word for permutations.
    pub fn letters_of(&self, a: &GroupElement) -> Vec<Letter> {
        match a {
            GroupElement::Word(w) => w.clone(),
            GroupElement::Vector(v) => {
                let mut out = Vec::new();
                for (i, &x) in v.iter().enumerate() {
                    let l = (i + 1) as Letter;
                    let l = if x < 0 { -l } else { l };
                    out.extend(std::iter::repeat_n(l, x.unsigned_abs() as usize));
                }
                out
            }
            GroupElement::Perm(p) => {
                let table = self.perms.as_ref().expect("permutation table");
                table.words[table.index[p]].clone()
            }
        }
    }

    pub fn format(&self, a: &GroupElement) -> String {
        format_letters(&self.letters_of(a))
    }

    /// Every element of a finite permutation model, in shortlex order.
    pub fn elements(&self) -> Option<Vec<GroupElement>> {
        let table = self.perms.as_ref()?;
        let mut out = vec![GroupElement::Perm(Vec::new()); table.words.len()];
        for (p, &i) in &table.index {
            out[i] = GroupElement::Perm(p.clone());
        }
        Some(out)
    }

    /// All elements of word length at most `radius` (word models only).
    pub fn ball(&self, radius: usize) -> Result<Vec<GroupElement>> {
        if matches!(self.kind, GroupKind::Permutation { .. }) {
            return Err(Error::Unsupported("balls in a finite permutation model"));
        }
        let letters = self.letters();
        let mut frontier = vec![self.identity()];
        let mut out = frontier.clone();
        let mut seen: std::collections::HashSet<GroupElement> = frontier.iter().cloned().collect();
        for _ in 0..radius {
            let mut next = Vec::new();
            for g in &frontier {
                for &l in &letters {
                    let h = self.multiply(g, &self.letter(l)?)?;
                    if seen.insert(h.clone()) {
                        next.push(h);
                    }
                }
            }
            out.extend(next.iter().cloned());
            frontier = next;
        }
        Ok(out)
    }
}

fn letter_char_checked(l: Letter) -> String {
    if l != 0 && (l.unsigned_abs() as usize) <= MAX_RANK {
        letter_char(l).to_string()
    } else {
        format!("#{l}")
    }
}

fn enumerate_perm_group(degree: usize, generators: &[Vec<u32>]) -> Result<PermTable> {
    let mut gens: Vec<(Letter, Vec<u32>)> = Vec::new();
    for (i, g) in generators.iter().enumerate() {
        let l = (i + 1) as Letter;
        gens.push((l, g.clone()));
        gens.push((-l, inverse_perm(g)));
    }
    let id: Vec<u32> = (0..degree as u32).collect();
    let mut index = HashMap::new();
    let mut words: Vec<Vec<Letter>> = Vec::new();
    let mut perms: Vec<Vec<u32>> = Vec::new();
    index.insert(id.clone(), 0);
    words.push(Vec::new());
    perms.push(id);
    let mut head = 0;
    while head < perms.len() {
        let p = perms[head].clone();
        let w = words[head].clone();
        head += 1;
        for (l, g) in &gens {
            let q = compose(&p, g);
            if !index.contains_key(&q) {
                if perms.len() >= MAX_PERM_GROUP_ORDER {
                    return Err(Error::Config(format!(
                        "permutation group larger than {MAX_PERM_GROUP_ORDER} elements"
                    )));
                }
                index.insert(q.clone(), perms.len());
                let mut wq = w.clone();
                wq.push(*l);
                words.push(wq);
                perms.push(q);
            }
        }
    }
    Ok(PermTable { index, words })
}

impl fmt::Display for GroupKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupKind::Free { rank } => write!(f, "F_{rank}"),
            GroupKind::FreeAbelian { rank } => write!(f, "Z^{rank}"),
            GroupKind::Permutation { degree, generators } => {
                write!(f, "<{} permutations of {degree} points>", generators.len())
            }
        }
    }
}

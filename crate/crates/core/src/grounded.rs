//! Grounded subsets of a free group: finite sets containing the unit that are
//! connected in the Cayley tree (closed under dropping the first letter).

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::words::{GroupSpec, Letter, Word};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundedSet {
    spec: GroupSpec,
    elements: Vec<Word>,
}

fn require_free(spec: GroupSpec) -> Result<()> {
    if !spec.is_free() {
        return Err(Error::InvalidGroup(format!("grounded sets live in free groups, got {spec:?}")));
    }
    Ok(())
}

fn check_specs<'a>(spec: GroupSpec, words: impl IntoIterator<Item = &'a Word>) -> Result<()> {
    for w in words {
        if w.spec() != spec {
            return Err(Error::SpecMismatch { left: spec, right: w.spec() });
        }
    }
    Ok(())
}

/// True iff the unit is present and every element's parent is present.
pub fn is_grounded<'a>(words: impl IntoIterator<Item = &'a Word>) -> bool {
    let set: BTreeSet<&Word> = words.into_iter().collect();
    let Some(first) = set.iter().next() else {
        return false;
    };
    if !set.contains(&Word::unit(first.spec())) {
        return false;
    }
    set.iter().all(|w| match w.drop_first_generator() {
        Some(parent) => set.contains(&parent),
        None => true,
    })
}

impl GroundedSet {
    pub fn new(spec: GroupSpec, words: impl IntoIterator<Item = Word>) -> Result<Self> {
        require_free(spec)?;
        let set: BTreeSet<Word> = words.into_iter().collect();
        check_specs(spec, &set)?;
        if !is_grounded(&set) {
            let names: Vec<String> = set.iter().map(|w| w.to_string()).collect();
            return Err(Error::NotGrounded(format!("{{{}}}", names.join(", "))));
        }
        Ok(GroundedSet { spec, elements: set.into_iter().collect() })
    }

    /// `{1}`.
    pub fn trivial(spec: GroupSpec) -> Result<Self> {
        Self::new(spec, [Word::unit(spec)])
    }

    /// Smallest grounded set containing `words`: the unit plus every right suffix.
    pub fn hull(spec: GroupSpec, words: impl IntoIterator<Item = Word>) -> Result<Self> {
        require_free(spec)?;
        let mut set = BTreeSet::new();
        set.insert(Word::unit(spec));
        for w in words {
            check_specs(spec, [&w])?;
            let mut cur = w;
            while !cur.is_unit() {
                let parent = cur.drop_first_generator().expect("non-unit");
                set.insert(cur);
                cur = parent;
            }
        }
        Ok(GroundedSet { spec, elements: set.into_iter().collect() })
    }

    /// All reduced words of length at most `radius`.
    pub fn ball(spec: GroupSpec, radius: usize) -> Result<Self> {
        require_free(spec)?;
        let GroupSpec::Free { rank } = spec else { unreachable!() };
        let mut layer = vec![Word::unit(spec)];
        let mut all = layer.clone();
        for _ in 0..radius {
            let mut next = Vec::new();
            for w in &layer {
                for g in 1..=rank {
                    for e in [1, -1] {
                        let step = Word::from_letters(spec, &[Letter::new(g, e)])?;
                        let grown = step.multiply(w)?;
                        if grown.len() == w.len() + 1 {
                            next.push(grown);
                        }
                    }
                }
            }
            all.extend(next.iter().cloned());
            layer = next;
        }
        Self::new(spec, all)
    }

    pub fn spec(&self) -> GroupSpec {
        self.spec
    }

    pub fn elements(&self) -> &[Word] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, w: &Word) -> bool {
        self.index_of(w).is_some()
    }

    pub fn index_of(&self, w: &Word) -> Option<usize> {
        self.elements.binary_search(w).ok()
    }

    pub fn is_subset_of(&self, other: &GroundedSet) -> bool {
        self.elements.iter().all(|w| other.contains(w))
    }

    /// `E⁻¹E`, sorted by length then lexicographically.
    pub fn double_set(&self) -> Vec<Word> {
        let mut out = BTreeSet::new();
        for s in &self.elements {
            let s_inv = s.inverse();
            for t in &self.elements {
                out.insert(s_inv.multiply(t).expect("same spec"));
            }
        }
        out.into_iter().collect()
    }

    /// Random grounded superset with `extra` more elements, grown one
    /// Cayley-tree neighbour at a time.
    pub fn grow(&self, extra: usize, rng: &mut impl rand::Rng) -> Result<GroundedSet> {
        let GroupSpec::Free { rank } = self.spec else { unreachable!("grounded sets live in free groups") };
        let mut elements = self.elements.clone();
        let target = elements.len() + extra;
        while elements.len() < target {
            let t = &elements[rng.random_range(0..elements.len())];
            let g = rng.random_range(1..=rank);
            let e = if rng.random_bool(0.5) { 1 } else { -1 };
            let w = Word::generator(self.spec, g, e)?.multiply(t)?;
            if w.len() == t.len() + 1 && !elements.contains(&w) {
                elements.push(w);
            }
        }
        Self::new(self.spec, elements)
    }

    /// Random grounded set with `size ≥ 1` elements.
    pub fn random(spec: GroupSpec, size: usize, rng: &mut impl rand::Rng) -> Result<GroundedSet> {
        Self::trivial(spec)?.grow(size.saturating_sub(1), rng)
    }

    /// `self ∪ {t}` if that is grounded.
    pub fn with(&self, t: Word) -> Result<GroundedSet> {
        Self::new(self.spec, self.elements.iter().cloned().chain(std::iter::once(t)))
    }

    /// Orders `target ∖ self` so that every partial union stays grounded:
    /// ascending length, ties broken lexicographically.
    pub fn extension_chain(&self, target: &GroundedSet) -> Result<Vec<Word>> {
        if let Some(w) = self.elements.iter().find(|w| !target.contains(w)) {
            return Err(Error::NotSubset(w.to_string()));
        }
        Ok(target.elements.iter().filter(|w| !self.contains(w)).cloned().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> GroupSpec {
        GroupSpec::free(2)
    }

    fn w(text: &str) -> Word {
        Word::parse(spec(), text).unwrap()
    }

    fn set(words: &[&str]) -> Vec<Word> {
        words.iter().map(|t| w(t)).collect()
    }

    #[test]
    fn groundedness_examples() {
        assert!(is_grounded(&set(&["e"])));
        assert!(!is_grounded(&set(&["e", "g1", "g1 g2"])));
        assert!(is_grounded(&set(&["e", "g2", "g1 g2"])));
        assert!(!is_grounded(&set(&["g1"])));
        assert!(!is_grounded(&set(&["e", "g1^2"])));
    }

    #[test]
    fn double_set_examples() {
        let e = GroundedSet::new(spec(), set(&["e"])).unwrap();
        assert_eq!(e.double_set(), set(&["e"]));
        let e = GroundedSet::new(spec(), set(&["e", "g1"])).unwrap();
        let got: BTreeSet<Word> = e.double_set().into_iter().collect();
        assert_eq!(got, set(&["e", "g1", "g1^-1"]).into_iter().collect());
        let e = GroundedSet::new(spec(), set(&["e", "g1", "g2"])).unwrap();
        let got: BTreeSet<Word> = e.double_set().into_iter().collect();
        let want = set(&["e", "g1", "g1^-1", "g2", "g2^-1", "g1^-1 g2", "g2^-1 g1"]);
        assert_eq!(got, want.into_iter().collect());
    }

    #[test]
    fn hull_examples() {
        let h = GroundedSet::hull(spec(), set(&["g1 g2"])).unwrap();
        assert_eq!(h.elements(), GroundedSet::new(spec(), set(&["e", "g2", "g1 g2"])).unwrap().elements());
        assert_eq!(GroundedSet::hull(spec(), Vec::new()).unwrap().elements(), &set(&["e"])[..]);
        let h = GroundedSet::hull(spec(), set(&["g1^2", "g2^-1"])).unwrap();
        let want: BTreeSet<Word> = set(&["e", "g1", "g1^2", "g2^-1"]).into_iter().collect();
        assert_eq!(h.elements().iter().cloned().collect::<BTreeSet<_>>(), want);
    }

    #[test]
    fn chain_examples() {
        let one = GroundedSet::trivial(spec()).unwrap();
        let f = GroundedSet::new(spec(), set(&["e", "g1", "g1^2"])).unwrap();
        assert_eq!(one.extension_chain(&f).unwrap(), set(&["g1", "g1^2"]));
        assert!(f.extension_chain(&f).unwrap().is_empty());
        let f = GroundedSet::new(spec(), set(&["e", "g1", "g2"])).unwrap();
        assert_eq!(one.extension_chain(&f).unwrap(), set(&["g1", "g2"]));
        assert!(matches!(f.extension_chain(&one), Err(Error::NotSubset(_))));
    }

    #[test]
    fn ball_sizes() {
        // 1 + 4 + 12 words of length ≤ 2 in F_2.
        assert_eq!(GroundedSet::ball(spec(), 2).unwrap().len(), 17);
    }

    #[test]
    fn non_free_groups_are_rejected() {
        assert!(GroundedSet::trivial(GroupSpec::cyclic(2, 3)).is_err());
    }
}

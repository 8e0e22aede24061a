//! Reduced words in free groups, free products of cyclic groups, and direct
//! products of two such groups.
//!
//! A word is stored as a list of syllables `g<i>^<e>`: adjacent syllables
//! never share a generator. In a free group the exponent is any nonzero
//! integer; in `Z_m^{*d}` it is normalized into `1..m`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A group that can appear as a factor of a direct product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Factor {
    Free { rank: u32 },
    CyclicFreeProduct { factors: u32, order: u32 },
}

impl Factor {
    pub fn generators(&self) -> u32 {
        match *self {
            Factor::Free { rank } => rank,
            Factor::CyclicFreeProduct { factors, .. } => factors,
        }
    }

    /// Cyclic order of every generator, `None` for free generators.
    pub fn order(&self) -> Option<u32> {
        match *self {
            Factor::Free { .. } => None,
            Factor::CyclicFreeProduct { order, .. } => Some(order),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Factor::Free { rank: 0 } => {
                Err(Error::InvalidGroup("free group needs rank >= 1".into()))
            }
            Factor::CyclicFreeProduct { factors, order } if factors == 0 || order < 2 => Err(
                Error::InvalidGroup(format!("Z_{order}^(*{factors}) needs d >= 1 and m >= 2")),
            ),
            _ => Ok(()),
        }
    }
}

/// Group on which words live. Direct products nest one level only, which the
/// type enforces by taking [`Factor`]s.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GroupSpec {
    Free { rank: u32 },
    CyclicFreeProduct { factors: u32, order: u32 },
    DirectProduct { left: Factor, right: Factor },
}

impl GroupSpec {
    pub fn free(rank: u32) -> Self {
        GroupSpec::Free { rank }
    }

    pub fn cyclic(factors: u32, order: u32) -> Self {
        GroupSpec::CyclicFreeProduct { factors, order }
    }

    pub fn product(left: Factor, right: Factor) -> Self {
        GroupSpec::DirectProduct { left, right }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            GroupSpec::Free { rank } => Factor::Free { rank }.validate(),
            GroupSpec::CyclicFreeProduct { factors, order } => {
                Factor::CyclicFreeProduct { factors, order }.validate()
            }
            GroupSpec::DirectProduct { left, right } => {
                left.validate()?;
                right.validate()
            }
        }
    }

    pub fn is_free(&self) -> bool {
        matches!(self, GroupSpec::Free { .. })
    }

    pub fn is_product(&self) -> bool {
        matches!(self, GroupSpec::DirectProduct { .. })
    }

    /// The single factor of a non-product group.
    pub fn as_factor(&self) -> Option<Factor> {
        match *self {
            GroupSpec::Free { rank } => Some(Factor::Free { rank }),
            GroupSpec::CyclicFreeProduct { factors, order } => {
                Some(Factor::CyclicFreeProduct { factors, order })
            }
            GroupSpec::DirectProduct { .. } => None,
        }
    }

    /// `(left, right)` factors; the right factor is absent for non-products.
    pub fn factors(&self) -> (Factor, Option<Factor>) {
        match *self {
            GroupSpec::DirectProduct { left, right } => (left, Some(right)),
            _ => (self.as_factor().expect("non-product"), None),
        }
    }
}

impl From<Factor> for GroupSpec {
    fn from(f: Factor) -> Self {
        match f {
            Factor::Free { rank } => GroupSpec::Free { rank },
            Factor::CyclicFreeProduct { factors, order } => {
                GroupSpec::CyclicFreeProduct { factors, order }
            }
        }
    }
}

/// One syllable `g<generator>^<exponent>`; generators are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Letter {
    pub generator: u32,
    pub exponent: i32,
}

impl Letter {
    pub fn new(generator: u32, exponent: i32) -> Self {
        Letter { generator, exponent }
    }
}

impl Ord for Letter {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.generator, self.exponent).cmp(&(other.generator, other.exponent))
    }
}

impl PartialOrd for Letter {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Normalizes an exponent for the given cyclic order; returns 0 for the unit.
fn normalize_exponent(e: i64, order: Option<u32>) -> i32 {
    match order {
        None => e as i32,
        Some(m) => e.rem_euclid(m as i64) as i32,
    }
}

/// Appends `letter` to a reduced syllable list, merging and cancelling.
fn push_reduced(out: &mut Vec<Letter>, letter: Letter, order: Option<u32>) {
    let mut e = normalize_exponent(letter.exponent as i64, order);
    if e == 0 {
        return;
    }
    if let Some(last) = out.last() {
        if last.generator == letter.generator {
            e = normalize_exponent(last.exponent as i64 + e as i64, order);
            out.pop();
            if e == 0 {
                return;
            }
        }
    }
    out.push(Letter::new(letter.generator, e));
}

fn reduce_letters(letters: impl IntoIterator<Item = Letter>, order: Option<u32>) -> Vec<Letter> {
    let mut out = Vec::new();
    for l in letters {
        push_reduced(&mut out, l, order);
    }
    out
}

fn invert_letters(letters: &[Letter], order: Option<u32>) -> Vec<Letter> {
    letters
        .iter()
        .rev()
        .map(|l| Letter::new(l.generator, normalize_exponent(-(l.exponent as i64), order)))
        .collect()
}

/// Length in generator units: `|e|` per free syllable, one per cyclic syllable.
fn letters_length(letters: &[Letter], order: Option<u32>) -> usize {
    match order {
        None => letters.iter().map(|l| l.exponent.unsigned_abs() as usize).sum(),
        Some(_) => letters.len(),
    }
}

fn cyclic_canonical(letters: &[Letter], order: Option<u32>) -> Vec<Letter> {
    let mut w = letters.to_vec();
    // Conjugating by the first syllable moves it to the back; repeat until the
    // first and last syllables use different generators.
    while w.len() >= 2 && w[0].generator == w[w.len() - 1].generator {
        let first = w.remove(0);
        push_reduced(&mut w, first, order);
    }
    if w.len() <= 1 {
        return w;
    }
    let n = w.len();
    (0..n)
        .map(|r| {
            let mut rot = Vec::with_capacity(n);
            rot.extend_from_slice(&w[r..]);
            rot.extend_from_slice(&w[..r]);
            rot
        })
        .min()
        .expect("nonempty rotation set")
}

/// A reduced word tagged with its group.
///
/// For direct products, `left` holds the first coordinate and `right` the
/// second; for every other group `right` is empty.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word {
    spec: GroupSpec,
    left: Vec<Letter>,
    right: Vec<Letter>,
}

impl Word {
    pub fn unit(spec: GroupSpec) -> Self {
        Word { spec, left: Vec::new(), right: Vec::new() }
    }

    /// Builds a reduced word of a non-product group from arbitrary syllables.
    pub fn from_letters(spec: GroupSpec, letters: &[Letter]) -> Result<Self> {
        let factor = spec.as_factor().ok_or_else(|| {
            Error::InvalidWord("direct-product words need a (left, right) pair".into())
        })?;
        check_letters(factor, letters)?;
        Ok(Word { spec, left: reduce_letters(letters.iter().copied(), factor.order()), right: Vec::new() })
    }

    /// Builds a direct-product word from its two coordinates.
    pub fn from_pair(spec: GroupSpec, left: &[Letter], right: &[Letter]) -> Result<Self> {
        let GroupSpec::DirectProduct { left: lf, right: rf } = spec else {
            return Err(Error::InvalidWord("pair words need a direct-product group".into()));
        };
        check_letters(lf, left)?;
        check_letters(rf, right)?;
        Ok(Word {
            spec,
            left: reduce_letters(left.iter().copied(), lf.order()),
            right: reduce_letters(right.iter().copied(), rf.order()),
        })
    }

    /// The generator `g<i>^<e>` of a non-product group.
    pub fn generator(spec: GroupSpec, generator: u32, exponent: i32) -> Result<Self> {
        Self::from_letters(spec, &[Letter::new(generator, exponent)])
    }

    pub fn spec(&self) -> GroupSpec {
        self.spec
    }

    /// Syllables of a non-product word (the left coordinate of a product word).
    pub fn letters(&self) -> &[Letter] {
        &self.left
    }

    pub fn left(&self) -> &[Letter] {
        &self.left
    }

    pub fn right(&self) -> &[Letter] {
        &self.right
    }

    pub fn is_unit(&self) -> bool {
        self.left.is_empty() && self.right.is_empty()
    }

    /// Word length counted in generator letters (`s_i^{±1}` for free groups,
    /// syllables for cyclic factors).
    pub fn len(&self) -> usize {
        let (l, r) = self.spec.factors();
        letters_length(&self.left, l.order()) + r.map_or(0, |r| letters_length(&self.right, r.order()))
    }

    pub fn is_empty(&self) -> bool {
        self.is_unit()
    }

    fn check_same(&self, other: &Word) -> Result<()> {
        if self.spec != other.spec {
            return Err(Error::SpecMismatch { left: self.spec, right: other.spec });
        }
        Ok(())
    }

    pub fn multiply(&self, other: &Word) -> Result<Word> {
        self.check_same(other)?;
        let (lf, rf) = self.spec.factors();
        let left = reduce_letters(self.left.iter().chain(other.left.iter()).copied(), lf.order());
        let right = match rf {
            Some(rf) => reduce_letters(self.right.iter().chain(other.right.iter()).copied(), rf.order()),
            None => Vec::new(),
        };
        Ok(Word { spec: self.spec, left, right })
    }

    pub fn inverse(&self) -> Word {
        let (lf, rf) = self.spec.factors();
        Word {
            spec: self.spec,
            left: invert_letters(&self.left, lf.order()),
            right: rf.map_or_else(Vec::new, |rf| invert_letters(&self.right, rf.order())),
        }
    }

    /// `self⁻¹ · other`, the quotient indexing Toeplitz and moment matrices.
    pub fn quotient(&self, other: &Word) -> Result<Word> {
        self.inverse().multiply(other)
    }

    /// Canonical representative of the conjugacy class: cyclic reduction
    /// followed by the least rotation under the `(generator, exponent)` order.
    /// Product words are canonicalized coordinatewise.
    pub fn conjugacy_canonical(&self) -> Word {
        let (lf, rf) = self.spec.factors();
        Word {
            spec: self.spec,
            left: cyclic_canonical(&self.left, lf.order()),
            right: rf.map_or_else(Vec::new, |rf| cyclic_canonical(&self.right, rf.order())),
        }
    }

    /// First generator letter `s_i^{±1}` of a free-group word, as a one-letter word.
    pub fn first_generator(&self) -> Option<Word> {
        let first = self.left.first()?;
        Some(Word {
            spec: self.spec,
            left: vec![Letter::new(first.generator, first.exponent.signum())],
            right: Vec::new(),
        })
    }

    /// Drops the first generator letter of a free-group word (`s_1^3 s_2 -> s_1^2 s_2`).
    /// This is the parent of the word in the Cayley tree.
    pub fn drop_first_generator(&self) -> Option<Word> {
        let first = self.first_generator()?;
        Some(first.inverse().multiply(self).expect("same spec"))
    }
}

fn check_letters(factor: Factor, letters: &[Letter]) -> Result<()> {
    for l in letters {
        if l.generator == 0 || l.generator > factor.generators() {
            return Err(Error::InvalidWord(format!(
                "generator g{} out of range 1..={}",
                l.generator,
                factor.generators()
            )));
        }
    }
    Ok(())
}

impl Ord for Word {
    /// Length first, then lexicographic on syllables (left coordinate before right).
    fn cmp(&self, other: &Self) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.spec.cmp(&other.spec))
            .then_with(|| self.left.cmp(&other.left))
            .then_with(|| self.right.cmp(&other.right))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn fmt_letters(f: &mut fmt::Formatter<'_>, letters: &[Letter]) -> fmt::Result {
    if letters.is_empty() {
        return write!(f, "e");
    }
    for (i, l) in letters.iter().enumerate() {
        if i > 0 {
            write!(f, " ")?;
        }
        if l.exponent == 1 {
            write!(f, "g{}", l.generator)?;
        } else {
            write!(f, "g{}^{}", l.generator, l.exponent)?;
        }
    }
    Ok(())
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.spec.is_product() {
            write!(f, "(")?;
            fmt_letters(f, &self.left)?;
            write!(f, ")x(")?;
            fmt_letters(f, &self.right)?;
            write!(f, ")")
        } else {
            fmt_letters(f, &self.left)
        }
    }
}

fn parse_letters(text: &str) -> Result<Vec<Letter>> {
    let text = text.trim();
    if text == "e" || text.is_empty() {
        return Ok(Vec::new());
    }
    text.split_whitespace()
        .map(|tok| {
            let bad = || Error::InvalidWord(format!("malformed token `{tok}`"));
            let body = tok.strip_prefix('g').ok_or_else(bad)?;
            let (gen, exp) = match body.split_once('^') {
                Some((g, e)) => (g, e.parse::<i32>().map_err(|_| bad())?),
                None => (body, 1),
            };
            let generator = gen.parse::<u32>().map_err(|_| bad())?;
            Ok(Letter::new(generator, exp))
        })
        .collect()
}

impl Word {
    /// Parses the text form (`"g1^-1 g2"`, `"e"`, `"(g1)x(g2^-1)"`).
    pub fn parse(spec: GroupSpec, text: &str) -> Result<Word> {
        let text = text.trim();
        if spec.is_product() {
            let inner = text
                .strip_prefix('(')
                .and_then(|t| t.strip_suffix(')'))
                .and_then(|t| t.split_once(")x("))
                .ok_or_else(|| Error::InvalidWord(format!("expected `(<left>)x(<right>)`, got `{text}`")))?;
            Word::from_pair(spec, &parse_letters(inner.0)?, &parse_letters(inner.1)?)
        } else {
            Word::from_letters(spec, &parse_letters(text)?)
        }
    }
}

/// Parses a single token such as `g2^-1`.
impl FromStr for Letter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut v = parse_letters(s)?;
        if v.len() != 1 {
            return Err(Error::InvalidWord(format!("expected one letter, got `{s}`")));
        }
        Ok(v.remove(0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f2(text: &str) -> Word {
        Word::parse(GroupSpec::free(2), text).unwrap()
    }

    fn z3(text: &str) -> Word {
        Word::parse(GroupSpec::cyclic(2, 3), text).unwrap()
    }

    #[test]
    fn multiply_cancels_and_merges() {
        assert!(f2("g1").multiply(&f2("g1^-1")).unwrap().is_unit());
        assert_eq!(f2("g1 g2").multiply(&f2("g2^-1 g1")).unwrap(), f2("g1^2"));
        assert_eq!(z3("g1^2").multiply(&z3("g1^2")).unwrap(), z3("g1"));
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(f2("g1 g2^-1").inverse(), f2("g2 g1^-1"));
        assert!(f2("e").inverse().is_unit());
        let z2 = GroupSpec::cyclic(2, 2);
        let w = Word::parse(z2, "g1 g2").unwrap();
        assert_eq!(w.inverse(), Word::parse(z2, "g2 g1").unwrap());
    }

    #[test]
    fn conjugacy_examples() {
        assert_eq!(f2("g1 g2 g1^-1").conjugacy_canonical(), f2("g2"));
        assert_eq!(f2("g2 g1").conjugacy_canonical(), f2("g1 g2"));
        assert_eq!(f2("g1^-1").conjugacy_canonical(), f2("g1^-1"));
        // merging after rotation: g1 g2 g1 -> g2 g1^2 -> g1^2 g2
        assert_eq!(f2("g1 g2 g1").conjugacy_canonical(), f2("g1^2 g2"));
    }

    #[test]
    fn spec_mismatch_is_an_error() {
        let err = f2("g1").multiply(&z3("g1")).unwrap_err();
        assert!(matches!(err, Error::SpecMismatch { .. }));
    }

    #[test]
    fn cyclic_exponents_are_normalized() {
        let w = z3("g1^-1");
        assert_eq!(w.letters(), &[Letter::new(1, 2)]);
        assert_eq!(w.to_string(), "g1^2");
        assert!(z3("g2^3").is_unit());
    }

    #[test]
    fn text_form() {
        assert_eq!(f2("g1^-1 g2").to_string(), "g1^-1 g2");
        assert_eq!(f2("e").to_string(), "e");
        let spec = GroupSpec::product(
            Factor::CyclicFreeProduct { factors: 2, order: 2 },
            Factor::CyclicFreeProduct { factors: 2, order: 2 },
        );
        let w = Word::parse(spec, "(g1)x(e)").unwrap();
        assert_eq!(w.to_string(), "(g1)x(e)");
        assert_eq!(Word::parse(spec, &w.to_string()).unwrap(), w);
        assert!(Word::parse(GroupSpec::free(2), "g3").is_err());
        assert!(Word::parse(GroupSpec::free(2), "x1").is_err());
    }

    #[test]
    fn tree_parent() {
        assert_eq!(f2("g1^3 g2").drop_first_generator().unwrap(), f2("g1^2 g2"));
        assert_eq!(f2("g1^-1 g2").drop_first_generator().unwrap(), f2("g2"));
        assert!(f2("e").drop_first_generator().is_none());
        assert_eq!(f2("g1^-2").len(), 2);
    }

    #[test]
    fn product_words_commute_across_coordinates() {
        let spec = GroupSpec::product(
            Factor::CyclicFreeProduct { factors: 2, order: 3 },
            Factor::CyclicFreeProduct { factors: 2, order: 3 },
        );
        let a = Word::parse(spec, "(g1)x(e)").unwrap();
        let b = Word::parse(spec, "(e)x(g2)").unwrap();
        assert_eq!(a.multiply(&b).unwrap(), b.multiply(&a).unwrap());
        assert_eq!(a.multiply(&b).unwrap().len(), 2);
    }
}

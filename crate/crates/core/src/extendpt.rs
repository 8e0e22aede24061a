//! Extension of positive-type functions from a grounded set to a larger one,
//! one tree vertex at a time, by three-block positive completion.

use std::collections::BTreeMap;

use crate::algebra::{toeplitz_matrix, vector_state, FiniteRep, PartialFunction};
use crate::denselin::{c64, complete_block, eigh, CMatrix, HermitianMatrix, PartialBlockMatrix, C64};
use crate::error::{Error, Result};
use crate::grounded::GroundedSet;
use crate::rng;
use crate::words::Word;

/// Relative PSD tolerance accepted on input.
pub const INPUT_TOLERANCE: f64 = 1e-8;
/// Relative PSD floor guaranteed on output.
pub const OUTPUT_TOLERANCE: f64 = 1e-7;
const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// `g` defined on `E⁻¹E` with a PSD Toeplitz matrix over `E`.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialPositiveType {
    set: GroundedSet,
    values: PartialFunction,
}

/// `1 + max |entry|`, the scale for relative PSD tolerances.
pub fn toeplitz_scale(m: &HermitianMatrix) -> f64 {
    1.0 + m.max_abs()
}

impl PartialPositiveType {
    /// Checks the invariants; values outside `E⁻¹E` are discarded.
    pub fn new(set: GroundedSet, values: PartialFunction) -> Result<Self> {
        if values.spec() != set.spec() {
            return Err(Error::SpecMismatch { left: set.spec(), right: values.spec() });
        }
        let domain = set.double_set();
        let values = values.restrict(&domain)?;
        for a in &domain {
            let v = values.get(a).expect("restricted");
            let w = values.get(&a.inverse()).expect("E⁻¹E is symmetric");
            if (v - w.conj()).norm() > SYMMETRY_TOLERANCE {
                return Err(Error::NotHermitian((v - w.conj()).norm()));
            }
        }
        let m = toeplitz_matrix(&values, set.elements())?;
        let floor = eigh(&m)?.min();
        let allowed = INPUT_TOLERANCE * toeplitz_scale(&m);
        if floor < -allowed {
            return Err(Error::NotPsd { min_eig: floor, allowed });
        }
        Ok(PartialPositiveType { set, values })
    }

    pub fn set(&self) -> &GroundedSet {
        &self.set
    }

    pub fn values(&self) -> &PartialFunction {
        &self.values
    }

    pub fn value(&self, w: &Word) -> Option<C64> {
        self.values.get(w)
    }

    pub fn toeplitz(&self) -> HermitianMatrix {
        toeplitz_matrix(&self.values, self.set.elements()).expect("validated on construction")
    }
}

/// Everything computed during one extension step.
#[derive(Debug, Clone)]
pub struct ExtensionStep {
    pub extended: PartialPositiveType,
    /// First generator letter `x` with `t₀ = x·t₀″`.
    pub letter: Word,
    /// `E₀`, `E₁` in the order of `E`.
    pub e0: Vec<Word>,
    pub e1: Vec<Word>,
    /// The completed matrix over `E₀, E₁, {t₀}`.
    pub completed: HermitianMatrix,
    /// Smallest eigenvalue of the Toeplitz matrix over `E ∪ {t₀}`.
    pub psd_floor: f64,
    pub scale: f64,
}

impl ExtensionStep {
    /// `E₀, E₁, t₀`: the index order of [`ExtensionStep::completed`].
    pub fn order(&self, t0: &Word) -> Vec<Word> {
        self.e0.iter().chain(self.e1.iter()).cloned().chain(std::iter::once(t0.clone())).collect()
    }
}

/// `{s ∈ E : s⁻¹t₀ ∈ E⁻¹E}`, computed directly from the quotient set.
pub fn split_by_quotients(set: &GroundedSet, t0: &Word) -> Result<Vec<Word>> {
    let domain = set.double_set();
    let mut out = Vec::new();
    for s in set.elements() {
        if domain.binary_search(&s.quotient(t0)?).is_ok() {
            out.push(s.clone());
        }
    }
    Ok(out)
}

/// `{s ∈ E : x⁻¹s ∈ E}` for the first letter `x` of `t₀`.
pub fn split_by_letter(set: &GroundedSet, t0: &Word) -> Result<Vec<Word>> {
    let x = t0.first_generator().ok_or_else(|| Error::InvalidWord("the unit has no first letter".into()))?;
    let x_inv = x.inverse();
    let mut out = Vec::new();
    for s in set.elements() {
        if set.contains(&x_inv.multiply(s)?) {
            out.push(s.clone());
        }
    }
    Ok(out)
}

/// Largest spread among entries `m[i,j]` sharing the quotient `w_i⁻¹w_j`.
pub fn quotient_spread(m: &CMatrix, words: &[Word]) -> Result<f64> {
    let mut seen: BTreeMap<Word, C64> = BTreeMap::new();
    let mut spread: f64 = 0.0;
    for (i, s) in words.iter().enumerate() {
        for (j, t) in words.iter().enumerate() {
            let q = s.quotient(t)?;
            match seen.get(&q) {
                Some(v) => spread = spread.max((m[(i, j)] - v).norm()),
                None => {
                    seen.insert(q, m[(i, j)]);
                }
            }
        }
    }
    Ok(spread)
}

fn block(g: &PartialFunction, rows: &[Word], cols: &[Word]) -> Result<CMatrix> {
    let mut m = CMatrix::zeros(rows.len(), cols.len());
    for (i, s) in rows.iter().enumerate() {
        for (j, t) in cols.iter().enumerate() {
            let q = s.quotient(t)?;
            m[(i, j)] = g.get(&q).ok_or_else(|| Error::MissingValue(q.to_string()))?;
        }
    }
    Ok(m)
}

/// One extension step to `E ∪ {t₀}` with diagnostics.
pub fn extend_step(g: &PartialPositiveType, t0: &Word) -> Result<ExtensionStep> {
    let set = g.set();
    if set.contains(t0) {
        return Err(Error::InvalidInput(format!("{t0} already belongs to E")));
    }
    let grown = set.with(t0.clone())?;
    let letter = t0.first_generator().ok_or_else(|| Error::InvalidWord("the unit has no first letter".into()))?;
    let e1 = split_by_letter(set, t0)?;
    let e0: Vec<Word> = set.elements().iter().filter(|s| !e1.contains(s)).cloned().collect();
    let values = g.values();
    let t0_single = [t0.clone()];

    let herm = |m: CMatrix| HermitianMatrix::new(m);
    let partial = PartialBlockMatrix {
        a: herm(block(values, &e0, &e0)?)?,
        x: block(values, &e0, &e1)?,
        b: herm(block(values, &e1, &e1)?)?,
        y: block(values, &e1, &t0_single)?,
        c: herm(block(values, &t0_single, &t0_single)?)?,
    };
    let completion = complete_block(&partial)?;

    let mut extended = values.clone();
    for (i, s) in e0.iter().enumerate() {
        let z = completion.z[(i, 0)];
        let q = s.quotient(t0)?;
        if extended.get(&q).is_some() {
            return Err(Error::InvalidInput(format!("quotient {q} of a new pair is already defined")));
        }
        extended.set(q.inverse(), z.conj())?;
        extended.set(q, z)?;
    }

    let m = toeplitz_matrix(&extended, grown.elements())?;
    let psd_floor = eigh(&m)?.min();
    let scale = toeplitz_scale(&m);
    let allowed = OUTPUT_TOLERANCE * scale;
    if psd_floor < -allowed {
        return Err(Error::NotPsd { min_eig: psd_floor, allowed });
    }
    Ok(ExtensionStep {
        extended: PartialPositiveType { set: grown, values: extended },
        letter,
        e0,
        e1,
        completed: completion.full,
        psd_floor,
        scale,
    })
}

pub fn extend_one(g: &PartialPositiveType, t0: &Word) -> Result<PartialPositiveType> {
    Ok(extend_step(g, t0)?.extended)
}

/// Extends along the canonical chain from `E` to `F`.
pub fn extend_to(g: &PartialPositiveType, target: &GroundedSet) -> Result<PartialPositiveType> {
    let chain = g.set().extension_chain(target)?;
    let mut cur = g.clone();
    for t0 in &chain {
        cur = extend_one(&cur, t0)?;
    }
    Ok(cur)
}

/// `t ↦ ⟨π(t)ξ, ξ⟩` on `E⁻¹E`.
pub fn positive_type_from_rep(set: &GroundedSet, pi: &FiniteRep, xi: &CMatrix) -> Result<PartialPositiveType> {
    let values = vector_state(pi, xi, &set.double_set())?;
    PartialPositiveType::new(set.clone(), values)
}

/// Vector state of a random `dim`-dimensional representation.
pub fn random_positive_type(set: &GroundedSet, dim: usize, seed: u64) -> Result<PartialPositiveType> {
    let mut rng = rng::seeded(seed);
    let pi = FiniteRep::random(set.spec(), dim.max(1), &mut rng);
    let xi = rng::unit_vector(pi.dim(), &mut rng);
    positive_type_from_rep(set, &pi, &xi)
}

/// `δ₁` on `E⁻¹E`.
pub fn delta_type(set: &GroundedSet) -> Result<PartialPositiveType> {
    let values = PartialFunction::from_values(
        set.spec(),
        set.double_set().into_iter().map(|w| {
            let v = if w.is_unit() { c64(1.0, 0.0) } else { c64(0.0, 0.0) };
            (w, v)
        }),
    )?;
    PartialPositiveType::new(set.clone(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::denselin::real;
    use crate::words::GroupSpec;

    fn spec() -> GroupSpec {
        GroupSpec::free(2)
    }

    fn w(text: &str) -> Word {
        Word::parse(spec(), text).unwrap()
    }

    fn grounded(words: &[&str]) -> GroundedSet {
        GroundedSet::new(spec(), words.iter().map(|t| w(t))).unwrap()
    }

    fn typed(words: &[&str], values: &[(&str, C64)]) -> PartialPositiveType {
        let f = PartialFunction::from_values(spec(), values.iter().map(|(t, v)| (w(t), *v))).unwrap();
        PartialPositiveType::new(grounded(words), f).unwrap()
    }

    #[test]
    fn first_step_has_empty_middle() {
        let g = typed(&["e"], &[("e", real(1.0))]);
        let step = extend_step(&g, &w("g1")).unwrap();
        assert!(step.e1.is_empty());
        assert_eq!(step.extended.value(&w("g1")), Some(real(0.0)));
        assert_eq!(step.extended.toeplitz(), HermitianMatrix::identity(2));
    }

    #[test]
    fn geometric_step() {
        let g = typed(&["e", "g1"], &[("e", real(1.0)), ("g1", real(0.5)), ("g1^-1", real(0.5))]);
        let step = extend_step(&g, &w("g1^2")).unwrap();
        assert_eq!(step.e1, vec![w("g1")]);
        assert!((step.extended.value(&w("g1^2")).unwrap() - real(0.25)).norm() < 1e-15);
        assert!(eigh(&step.extended.toeplitz()).unwrap().min() > 0.0);
    }

    #[test]
    fn new_branch_is_orthogonal() {
        let g = typed(&["e", "g1"], &[("e", real(1.0)), ("g1", real(0.0)), ("g1^-1", real(0.0))]);
        let out = extend_one(&g, &w("g2")).unwrap();
        assert_eq!(out.value(&w("g2")), Some(real(0.0)));
        assert_eq!(out.value(&w("g1^-1 g2")), Some(real(0.0)));
        assert_eq!(out.toeplitz(), HermitianMatrix::identity(3));
    }

    #[test]
    fn extend_to_examples() {
        let g = typed(&["e"], &[("e", real(1.0))]);
        assert_eq!(extend_to(&g, g.set()).unwrap(), g);
        let out = extend_to(&g, &grounded(&["e", "g1", "g1^2"])).unwrap();
        assert_eq!(out.value(&w("g1")), Some(real(0.0)));
        assert_eq!(out.value(&w("g1^2")), Some(real(0.0)));

        let g = typed(&["e", "g1"], &[("e", real(1.0)), ("g1", real(0.5)), ("g1^-1", real(0.5))]);
        let out = extend_to(&g, &grounded(&["e", "g1", "g1^2", "g1^3"])).unwrap();
        for k in 1..=3 {
            let v = out.value(&Word::generator(spec(), 1, k).unwrap()).unwrap();
            assert!((v.re - 0.5f64.powi(k)).abs() < 1e-15 && v.im.abs() < 1e-15);
        }
        // Oracle: the 4x4 Toeplitz matrix with entries 2^{-|i-j|} is positive definite.
        let oracle = HermitianMatrix::from_fn(4, |i, j| real(0.5f64.powi((i as i32 - j as i32).abs())));
        assert!(eigh(&oracle).unwrap().min() > 0.0);
        assert!((out.toeplitz().matrix() - oracle.matrix()).norm() < 1e-14);
    }

    #[test]
    fn inverse_letter_step() {
        let g = random_positive_type(&grounded(&["e", "g1", "g2"]), 2, 3).unwrap();
        let t0 = w("g1^-1 g2");
        assert_eq!(split_by_letter(g.set(), &t0).unwrap(), split_by_quotients(g.set(), &t0).unwrap());
        let step = extend_step(&g, &t0).unwrap();
        assert!(quotient_spread(step.completed.matrix(), &step.order(&t0)).unwrap() < 1e-12);
    }

    #[test]
    fn preconditions_are_checked() {
        let g = typed(&["e"], &[("e", real(1.0))]);
        assert!(extend_one(&g, &w("e")).is_err());
        assert!(matches!(extend_one(&g, &w("g1^2")), Err(Error::NotGrounded(_))));
        let bad = PartialFunction::from_values(spec(), [(w("e"), real(1.0)), (w("g1"), real(2.0)), (w("g1^-1"), real(2.0))])
            .unwrap();
        assert!(matches!(PartialPositiveType::new(grounded(&["e", "g1"]), bad), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn one_dimensional_reps_are_characters() {
        let set = grounded(&["e", "g1", "g2", "g1 g2"]);
        let phases = [c64(0.6, 0.8), c64(0.0, 1.0)];
        let pi = FiniteRep::new(
            spec(),
            phases.iter().map(|p| CMatrix::from_element(1, 1, *p)).collect(),
        )
        .unwrap();
        let g = positive_type_from_rep(&set, &pi, &CMatrix::from_element(1, 1, real(1.0))).unwrap();
        for a in set.double_set() {
            let expected: C64 = a
                .letters()
                .iter()
                .map(|l| phases[(l.generator - 1) as usize].powi(l.exponent))
                .product();
            assert!((g.value(&a).unwrap() - expected).norm() < 1e-14);
        }
        let trivial = FiniteRep::new(spec(), vec![CMatrix::identity(1, 1); 2]).unwrap();
        let g = positive_type_from_rep(&set, &trivial, &CMatrix::from_element(1, 1, real(1.0))).unwrap();
        assert!(set.double_set().iter().all(|a| g.value(a) == Some(real(1.0))));
    }

    #[test]
    fn random_types_are_positive() {
        let set = grounded(&["e", "g1", "g2", "g1 g2", "g2^-1"]);
        let g = random_positive_type(&set, 3, 99).unwrap();
        assert!(eigh(&g.toeplitz()).unwrap().min() >= -1e-10);
        assert!((g.value(&w("e")).unwrap() - real(1.0)).norm() < 1e-12);
    }
}

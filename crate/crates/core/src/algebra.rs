//! Group algebra elements, Toeplitz matrices and finite-dimensional unitary
//! representations.

use std::collections::BTreeMap;

use rand::Rng;

use crate::denselin::{c64, max_abs, real, CMatrix, HermitianMatrix, C64};
use crate::error::{Error, Result};
use crate::rng;
use crate::words::{Factor, GroupSpec, Letter, Word};

/// Coefficients below this modulus are dropped.
pub const PURGE_THRESHOLD: f64 = 1e-15;
/// Allowed violation of `g(a⁻¹) = conj g(a)` when building Toeplitz matrices.
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;

/// Finitely supported function `Γ → ℂ`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupAlgebraElement {
    spec: GroupSpec,
    terms: BTreeMap<Word, C64>,
}

impl GroupAlgebraElement {
    pub fn zero(spec: GroupSpec) -> Self {
        GroupAlgebraElement { spec, terms: BTreeMap::new() }
    }

    /// `δ_w`.
    pub fn delta(w: &Word) -> Self {
        let mut f = Self::zero(w.spec());
        f.add_term(w.clone(), real(1.0)).expect("same spec");
        f
    }

    pub fn unit(spec: GroupSpec) -> Self {
        Self::delta(&Word::unit(spec))
    }

    pub fn from_terms(spec: GroupSpec, terms: impl IntoIterator<Item = (Word, C64)>) -> Result<Self> {
        let mut f = Self::zero(spec);
        for (w, c) in terms {
            f.add_term(w, c)?;
        }
        Ok(f)
    }

    /// Adds `c·δ_w` in place.
    pub fn add_term(&mut self, w: Word, c: C64) -> Result<()> {
        if w.spec() != self.spec {
            return Err(Error::SpecMismatch { left: self.spec, right: w.spec() });
        }
        let v = self.coefficient(&w) + c;
        if v.norm() < PURGE_THRESHOLD {
            self.terms.remove(&w);
        } else {
            self.terms.insert(w, v);
        }
        Ok(())
    }

    pub fn spec(&self) -> GroupSpec {
        self.spec
    }

    pub fn terms(&self) -> &BTreeMap<Word, C64> {
        &self.terms
    }

    pub fn coefficient(&self, w: &Word) -> C64 {
        self.terms.get(w).copied().unwrap_or(c64(0.0, 0.0))
    }

    pub fn support(&self) -> impl Iterator<Item = &Word> {
        self.terms.keys()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut out = Self::zero(self.spec);
        for (w, v) in &self.terms {
            out.add_term(w.clone(), v * c).expect("same spec");
        }
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        for (w, v) in &other.terms {
            out.add_term(w.clone(), *v)?;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(real(-1.0)))
    }

    /// `(f∗g)(s) = Σ_t f(st⁻¹) g(t)`.
    pub fn convolve(&self, other: &Self) -> Result<Self> {
        if self.spec != other.spec {
            return Err(Error::SpecMismatch { left: self.spec, right: other.spec });
        }
        let mut acc: BTreeMap<Word, C64> = BTreeMap::new();
        for (a, x) in &self.terms {
            for (b, y) in &other.terms {
                *acc.entry(a.multiply(b)?).or_insert(c64(0.0, 0.0)) += x * y;
            }
        }
        acc.retain(|_, v| v.norm() >= PURGE_THRESHOLD);
        Ok(GroupAlgebraElement { spec: self.spec, terms: acc })
    }

    /// `f*(s) = conj f(s⁻¹)`.
    pub fn involve(&self) -> Self {
        GroupAlgebraElement {
            spec: self.spec,
            terms: self.terms.iter().map(|(w, v)| (w.inverse(), v.conj())).collect(),
        }
    }

    /// Largest coefficient modulus.
    pub fn max_norm(&self) -> f64 {
        self.terms.values().fold(0.0, |acc, v| acc.max(v.norm()))
    }

    /// `max |f − f*|`.
    pub fn hermitian_defect(&self) -> f64 {
        self.sub(&self.involve()).map(|d| d.max_norm()).unwrap_or(f64::INFINITY)
    }

    /// Largest coefficient deviation from `other`.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.max_norm())
    }
}

/// Function defined on an explicit finite domain. Unlike a
/// [`GroupAlgebraElement`], a stored zero is a specified value.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialFunction {
    spec: GroupSpec,
    values: BTreeMap<Word, C64>,
}

impl PartialFunction {
    pub fn new(spec: GroupSpec) -> Self {
        PartialFunction { spec, values: BTreeMap::new() }
    }

    pub fn from_values(spec: GroupSpec, values: impl IntoIterator<Item = (Word, C64)>) -> Result<Self> {
        let mut f = Self::new(spec);
        for (w, v) in values {
            f.set(w, v)?;
        }
        Ok(f)
    }

    pub fn set(&mut self, w: Word, v: C64) -> Result<()> {
        if w.spec() != self.spec {
            return Err(Error::SpecMismatch { left: self.spec, right: w.spec() });
        }
        self.values.insert(w, v);
        Ok(())
    }

    pub fn get(&self, w: &Word) -> Option<C64> {
        self.values.get(w).copied()
    }

    pub fn spec(&self) -> GroupSpec {
        self.spec
    }

    pub fn values(&self) -> &BTreeMap<Word, C64> {
        &self.values
    }

    pub fn domain(&self) -> impl Iterator<Item = &Word> {
        self.values.keys()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Restriction to the given words; errors if one is undefined.
    pub fn restrict<'a>(&self, words: impl IntoIterator<Item = &'a Word>) -> Result<Self> {
        let mut out = Self::new(self.spec);
        for w in words {
            let v = self.get(w).ok_or_else(|| Error::MissingValue(w.to_string()))?;
            out.values.insert(w.clone(), v);
        }
        Ok(out)
    }
}

/// Anything that can report a coefficient for a word (`None` = unspecified).
pub trait Coefficients {
    fn spec(&self) -> GroupSpec;
    fn value_at(&self, w: &Word) -> Option<C64>;
}

impl Coefficients for GroupAlgebraElement {
    fn spec(&self) -> GroupSpec {
        self.spec
    }

    fn value_at(&self, w: &Word) -> Option<C64> {
        Some(self.coefficient(w))
    }
}

impl Coefficients for PartialFunction {
    fn spec(&self) -> GroupSpec {
        self.spec
    }

    fn value_at(&self, w: &Word) -> Option<C64> {
        self.get(w)
    }
}

/// `[g(s⁻¹t)]_{s,t ∈ E}` in the given order of `E`.
pub fn toeplitz_matrix(g: &impl Coefficients, domain: &[Word]) -> Result<HermitianMatrix> {
    let n = domain.len();
    let inverses: Vec<Word> = domain.iter().map(Word::inverse).collect();
    let mut m = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let q = inverses[i].multiply(&domain[j])?;
            m[(i, j)] = g.value_at(&q).ok_or_else(|| Error::MissingValue(q.to_string()))?;
        }
    }
    let defect = max_abs(&(&m - m.adjoint()));
    if defect > HERMITIAN_TOLERANCE {
        return Err(Error::NotHermitian(defect));
    }
    HermitianMatrix::new(m)
}

/// Unitary representation of a group given by its generator images.
///
/// For direct products the left and right generator families act on the same
/// space and commute.
#[derive(Debug, Clone)]
pub struct FiniteRep {
    spec: GroupSpec,
    dim: usize,
    left: Vec<CMatrix>,
    right: Vec<CMatrix>,
}

pub const UNITARY_TOLERANCE: f64 = 1e-10;
pub const CYCLIC_TOLERANCE: f64 = 1e-8;

fn unitary_defect(u: &CMatrix) -> f64 {
    let n = u.nrows();
    max_abs(&(u.adjoint() * u - CMatrix::identity(n, n)))
}

fn matrix_power(u: &CMatrix, e: u32) -> CMatrix {
    let n = u.nrows();
    (0..e).fold(CMatrix::identity(n, n), |acc, _| acc * u)
}

fn check_family(factor: Factor, dim: usize, gens: &[CMatrix]) -> Result<()> {
    if gens.len() != factor.generators() as usize {
        return Err(Error::Dimension(format!(
            "expected {} generator matrices, got {}",
            factor.generators(),
            gens.len()
        )));
    }
    for (k, u) in gens.iter().enumerate() {
        if u.shape() != (dim, dim) {
            return Err(Error::Dimension(format!("generator {} is {:?}, expected {dim}x{dim}", k + 1, u.shape())));
        }
        let defect = unitary_defect(u);
        if defect > UNITARY_TOLERANCE {
            return Err(Error::InvalidInput(format!("generator {} is not unitary (defect {defect:.3e})", k + 1)));
        }
        if let Some(m) = factor.order() {
            let defect = max_abs(&(matrix_power(u, m) - CMatrix::identity(dim, dim)));
            if defect > CYCLIC_TOLERANCE {
                return Err(Error::InvalidInput(format!(
                    "generator {} does not satisfy U^{m} = I (defect {defect:.3e})",
                    k + 1
                )));
            }
        }
    }
    Ok(())
}

fn letters_image(gens: &[CMatrix], letters: &[Letter], dim: usize) -> CMatrix {
    let mut acc = CMatrix::identity(dim, dim);
    for l in letters {
        let u = &gens[(l.generator - 1) as usize];
        let power = if l.exponent >= 0 {
            matrix_power(u, l.exponent as u32)
        } else {
            matrix_power(&u.adjoint(), l.exponent.unsigned_abs())
        };
        acc *= power;
    }
    acc
}

/// Random `U` with `U^m = I`: Haar eigenbasis, uniformly random `m`-th roots of unity.
fn random_cyclic_unitary(dim: usize, order: u32, rng: &mut impl Rng) -> CMatrix {
    let v = rng::haar_unitary(dim, rng);
    let omega = std::f64::consts::TAU / order as f64;
    let mut d = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        let k = rng.random_range(0..order);
        d[(i, i)] = C64::from_polar(1.0, omega * k as f64);
    }
    &v * d * v.adjoint()
}

fn random_family(factor: Factor, dim: usize, rng: &mut impl Rng) -> Vec<CMatrix> {
    (0..factor.generators())
        .map(|_| match factor.order() {
            None => rng::haar_unitary(dim, rng),
            Some(m) => random_cyclic_unitary(dim, m, rng),
        })
        .collect()
}

impl FiniteRep {
    /// Representation of a non-product group from its generator unitaries.
    pub fn new(spec: GroupSpec, generators: Vec<CMatrix>) -> Result<Self> {
        let factor = spec
            .as_factor()
            .ok_or_else(|| Error::InvalidInput("use FiniteRep::product for direct products".into()))?;
        let dim = generators.first().map_or(1, |u| u.nrows());
        check_family(factor, dim, &generators)?;
        Ok(FiniteRep { spec, dim, left: generators, right: Vec::new() })
    }

    /// Representation of a direct product; the two families must commute.
    pub fn product(spec: GroupSpec, left: Vec<CMatrix>, right: Vec<CMatrix>) -> Result<Self> {
        let GroupSpec::DirectProduct { left: lf, right: rf } = spec else {
            return Err(Error::InvalidInput("product representation needs a direct-product group".into()));
        };
        let dim = left.first().or(right.first()).map_or(1, |u| u.nrows());
        check_family(lf, dim, &left)?;
        check_family(rf, dim, &right)?;
        for a in &left {
            for b in &right {
                if max_abs(&(a * b - b * a)) > CYCLIC_TOLERANCE {
                    return Err(Error::InvalidInput("left and right generators do not commute".into()));
                }
            }
        }
        Ok(FiniteRep { spec, dim, left, right })
    }

    /// Random representation. Free generators are Haar unitaries; cyclic ones
    /// have random `m`-th-root spectra. For direct products the result is
    /// `π_L ⊗ 1` / `1 ⊗ π_R` on `dim²` dimensions.
    pub fn random(spec: GroupSpec, dim: usize, rng: &mut impl Rng) -> Self {
        match spec {
            GroupSpec::DirectProduct { left, right } => {
                let id = CMatrix::identity(dim, dim);
                let l = random_family(left, dim, rng).into_iter().map(|u| u.kronecker(&id)).collect();
                let r = random_family(right, dim, rng).into_iter().map(|u| id.kronecker(&u)).collect();
                FiniteRep { spec, dim: dim * dim, left: l, right: r }
            }
            _ => {
                let factor = spec.as_factor().expect("non-product");
                FiniteRep { spec, dim, left: random_family(factor, dim, rng), right: Vec::new() }
            }
        }
    }

    pub fn spec(&self) -> GroupSpec {
        self.spec
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generators(&self) -> &[CMatrix] {
        &self.left
    }

    pub fn right_generators(&self) -> &[CMatrix] {
        &self.right
    }

    /// `π(t)`, built left to right from the syllables of `t`.
    pub fn image(&self, t: &Word) -> Result<CMatrix> {
        if t.spec() != self.spec {
            return Err(Error::SpecMismatch { left: self.spec, right: t.spec() });
        }
        let left = letters_image(&self.left, t.left(), self.dim);
        if self.spec.is_product() {
            Ok(left * letters_image(&self.right, t.right(), self.dim))
        } else {
            Ok(left)
        }
    }
}

/// `Σ_t f(t) π(t)`.
pub fn eval_rep(f: &GroupAlgebraElement, pi: &FiniteRep) -> Result<CMatrix> {
    if f.spec() != pi.spec() {
        return Err(Error::SpecMismatch { left: f.spec(), right: pi.spec() });
    }
    let mut acc = CMatrix::zeros(pi.dim(), pi.dim());
    for (t, c) in f.terms() {
        acc += pi.image(t)? * *c;
    }
    Ok(acc)
}

/// `t ↦ ⟨π(t)ξ, ξ⟩` on the given words.
pub fn vector_state(pi: &FiniteRep, xi: &CMatrix, words: &[Word]) -> Result<PartialFunction> {
    let mut g = PartialFunction::new(pi.spec());
    for w in words {
        let v = (xi.adjoint() * pi.image(w)? * xi)[(0, 0)];
        g.set(w.clone(), v)?;
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::denselin::psd_floor;

    fn spec() -> GroupSpec {
        GroupSpec::free(2)
    }

    fn w(text: &str) -> Word {
        Word::parse(spec(), text).unwrap()
    }

    fn el(terms: &[(&str, f64, f64)]) -> GroupAlgebraElement {
        GroupAlgebraElement::from_terms(spec(), terms.iter().map(|(t, re, im)| (w(t), c64(*re, *im)))).unwrap()
    }

    #[test]
    fn convolution_examples() {
        let f = el(&[("g1", 1.0, 0.5), ("g2^-1 g1", -2.0, 0.0)]);
        assert_eq!(GroupAlgebraElement::unit(spec()).convolve(&f).unwrap(), f);
        let p = GroupAlgebraElement::delta(&w("g1")).convolve(&GroupAlgebraElement::delta(&w("g1^-1"))).unwrap();
        assert_eq!(p, GroupAlgebraElement::unit(spec()));
        let a = el(&[("e", 1.0, 0.0), ("g1", -1.0, 0.0)]);
        assert_eq!(a.convolve(&a).unwrap(), el(&[("e", 1.0, 0.0), ("g1", -2.0, 0.0), ("g1^2", 1.0, 0.0)]));
    }

    #[test]
    fn involution_examples() {
        assert_eq!(GroupAlgebraElement::delta(&w("g1")).involve(), GroupAlgebraElement::delta(&w("g1^-1")));
        assert_eq!(el(&[("e", 0.0, 1.0)]).involve(), el(&[("e", 0.0, -1.0)]));
        assert_eq!(el(&[("e", 1.0, 0.0), ("g1", -1.0, 0.0)]).involve(), el(&[("e", 1.0, 0.0), ("g1^-1", -1.0, 0.0)]));
    }

    #[test]
    fn tiny_coefficients_are_purged() {
        let f = el(&[("g1", 1.0, 0.0)]);
        let g = el(&[("g1", -1.0, 1e-17)]);
        assert!(f.add(&g).unwrap().is_zero());
    }

    #[test]
    fn toeplitz_examples() {
        let e = vec![w("e"), w("g1"), w("g2^-1")];
        let id = toeplitz_matrix(&GroupAlgebraElement::unit(spec()), &e).unwrap();
        assert_eq!(id, HermitianMatrix::identity(3));

        let alpha = c64(0.3, 0.4);
        let g = PartialFunction::from_values(
            spec(),
            [(w("e"), real(1.0)), (w("g1"), alpha), (w("g1^-1"), alpha.conj())],
        )
        .unwrap();
        let m = toeplitz_matrix(&g, &[w("e"), w("g1")]).unwrap();
        assert_eq!(m.get(0, 1), alpha);
        assert_eq!(m.get(1, 0), alpha.conj());

        let g = PartialFunction::from_values(spec(), [(w("e"), real(1.0)), (w("g1"), real(0.5)), (w("g1^-1"), real(0.5))])
            .unwrap();
        let floor = psd_floor(&toeplitz_matrix(&g, &[w("e"), w("g1")]).unwrap()).unwrap();
        assert!((floor - 0.5).abs() < 1e-15);
    }

    #[test]
    fn toeplitz_errors() {
        let g = PartialFunction::from_values(spec(), [(w("e"), real(1.0)), (w("g1"), real(0.5))]).unwrap();
        assert!(matches!(toeplitz_matrix(&g, &[w("e"), w("g1")]), Err(Error::MissingValue(_))));
        let g = PartialFunction::from_values(spec(), [(w("e"), real(1.0)), (w("g1"), real(0.5)), (w("g1^-1"), real(0.4))])
            .unwrap();
        assert!(matches!(toeplitz_matrix(&g, &[w("e"), w("g1")]), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn eval_rep_examples() {
        let pi = FiniteRep::new(
            spec(),
            vec![CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c64(0.0, 1.0), c64(0.0, -1.0)])), CMatrix::identity(2, 2)],
        )
        .unwrap();
        let one = eval_rep(&GroupAlgebraElement::unit(spec()), &pi).unwrap();
        assert_eq!(one, CMatrix::identity(2, 2));
        let f = el(&[("g1", 1.0, 0.0), ("g1^-1", 1.0, 0.0)]);
        assert!(max_abs(&eval_rep(&f, &pi).unwrap()) < 1e-15);
    }

    #[test]
    fn eval_rep_of_hermitian_square_is_psd() {
        let mut rng = rng::seeded(11);
        for _ in 0..20 {
            let xi = el(&[("e", 0.3, -0.2), ("g1", -1.0, 0.4), ("g2 g1^-1", 0.5, 0.9)]);
            let f = xi.involve().convolve(&xi).unwrap();
            let pi = FiniteRep::random(spec(), 3, &mut rng);
            let m = HermitianMatrix::new(eval_rep(&f, &pi).unwrap()).unwrap();
            assert!(psd_floor(&m).unwrap() >= -1e-10);
        }
    }

    #[test]
    fn random_reps_are_valid() {
        let mut rng = rng::seeded(5);
        let cyc = GroupSpec::cyclic(2, 3);
        let pi = FiniteRep::random(cyc, 4, &mut rng);
        FiniteRep::new(cyc, pi.generators().to_vec()).unwrap();
        let prod = GroupSpec::product(
            Factor::CyclicFreeProduct { factors: 2, order: 2 },
            Factor::CyclicFreeProduct { factors: 2, order: 2 },
        );
        let pi = FiniteRep::random(prod, 2, &mut rng);
        assert_eq!(pi.dim(), 4);
        FiniteRep::product(prod, pi.generators().to_vec(), pi.right_generators().to_vec()).unwrap();
    }

    #[test]
    fn rep_validation_rejects_non_unitary() {
        let bad = CMatrix::identity(2, 2) * c64(2.0, 0.0);
        assert!(FiniteRep::new(spec(), vec![bad, CMatrix::identity(2, 2)]).is_err());
        let z2 = GroupSpec::cyclic(1, 2);
        let not_involution = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c64(0.0, 1.0)]));
        assert!(FiniteRep::new(z2, vec![not_involution]).is_err());
    }
}

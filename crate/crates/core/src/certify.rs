//! Sum-of-squares and tracial certificates for hermitian group algebra
//! elements, and randomized falsification through finite representations.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use crate::algebra::{eval_rep, FiniteRep, GroupAlgebraElement};
use crate::denselin::{c64, eigh, operator_norm, real, CMatrix, HermitianMatrix, C64};
use crate::error::{Error, Result};
use crate::grounded::GroundedSet;
use crate::parallel::Execution;
use crate::rng;
use crate::sdp::{solve_feasibility, AffineConstraint, Feasibility, FeasibilityStats, SdpInstance, DEFAULT_MAX_ITER};
use crate::words::{GroupSpec, Word};

pub const DEFAULT_TOL: f64 = 1e-9;
/// Eigenvalues at or below this fraction of the largest are dropped when
/// extracting factors.
pub const RANK_CUTOFF: f64 = 1e-10;
const HERMITIAN_TOLERANCE: f64 = 1e-12;
/// Largest operator norm accepted (and clipped) by [`dilate_contraction`].
pub const CONTRACTION_SLACK: f64 = 1e-6;

/// `f + ε·δ₁ = Σ ξᵢ*∗ξᵢ` with `supp ξᵢ ⊆ E`.
#[derive(Debug, Clone, PartialEq)]
pub struct SosCertificate {
    pub support: GroundedSet,
    pub gram: HermitianMatrix,
    pub factors: Vec<GroupAlgebraElement>,
    pub epsilon: f64,
    pub residual: f64,
}

/// `f + ε·δ₁ − Σ ξᵢ*∗ξᵢ` has vanishing conjugacy-class sums.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceCertificate {
    pub certificate: SosCertificate,
    /// Class representative (see [`Word::conjugacy_canonical`]) → class sum of
    /// the remainder.
    pub class_residuals: BTreeMap<Word, C64>,
}

/// Why a certificate search failed.
#[derive(Debug, Clone, PartialEq)]
pub struct NotCertified {
    pub solver: FeasibilityStats,
    /// Symbolic residual of the extracted factors, when the solver succeeded.
    pub residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Certification<T> {
    Certified(T),
    NotCertified(NotCertified),
}

impl<T> Certification<T> {
    pub fn certified(self) -> Option<T> {
        match self {
            Certification::Certified(c) => Some(c),
            Certification::NotCertified(_) => None,
        }
    }

    pub fn is_certified(&self) -> bool {
        matches!(self, Certification::Certified(_))
    }
}

fn check_hermitian(f: &GroupAlgebraElement) -> Result<()> {
    let defect = f.hermitian_defect();
    if defect > HERMITIAN_TOLERANCE * (1.0 + f.max_norm()) {
        return Err(Error::NotHermitian(defect));
    }
    Ok(())
}

/// Ball of radius `⌈L/2⌉` for the longest support word of length `L`; its
/// quotient set contains every word of length at most `L`.
pub fn default_support(f: &GroupAlgebraElement) -> Result<GroundedSet> {
    let longest = f.support().map(Word::len).max().unwrap_or(0);
    GroundedSet::ball(f.spec(), longest.div_ceil(2))
}

/// Index pairs `(i, j)` grouped by the quotient `e_i⁻¹e_j`.
fn pairs_by_quotient(set: &GroundedSet) -> BTreeMap<Word, Vec<(usize, usize)>> {
    let mut out: BTreeMap<Word, Vec<(usize, usize)>> = BTreeMap::new();
    let elems = set.elements();
    for (i, s) in elems.iter().enumerate() {
        let s_inv = s.inverse();
        for (j, t) in elems.iter().enumerate() {
            out.entry(s_inv.multiply(t).expect("same spec")).or_default().push((i, j));
        }
    }
    out
}

/// The Gram feasibility problem `Σ_{s⁻¹t=a} b[s,t] = f(a) + ε·[a=1]`.
pub fn sos_instance(f: &GroupAlgebraElement, set: &GroundedSet, epsilon: f64) -> Result<SdpInstance> {
    if f.spec() != set.spec() {
        return Err(Error::SpecMismatch { left: f.spec(), right: set.spec() });
    }
    check_hermitian(f)?;
    let pairs = pairs_by_quotient(set);
    if let Some(w) = f.support().find(|w| !pairs.contains_key(*w)) {
        return Err(Error::SupportOutsideDomain(w.to_string()));
    }
    let mut inst = SdpInstance::new(set.len());
    for (a, idx) in &pairs {
        let mut rhs = f.coefficient(a);
        if a.is_unit() {
            rhs += real(epsilon);
        }
        inst.add_constraint(AffineConstraint::new(idx.iter().map(|&(i, j)| (i, j, real(1.0))), rhs))?;
    }
    Ok(inst)
}

/// Factors `ξᵢ(t) = √λᵢ·conj(U[t,i])` of `b = U Λ U*`, dropping small eigenvalues.
pub fn extract_factors(gram: &HermitianMatrix, set: &GroundedSet) -> Result<Vec<GroupAlgebraElement>> {
    let e = eigh(gram)?;
    let cut = RANK_CUTOFF * e.max();
    let mut factors = Vec::new();
    for (i, &lambda) in e.values.iter().enumerate().rev() {
        if lambda <= cut || lambda <= 0.0 {
            continue;
        }
        let root = lambda.sqrt();
        let terms = set.elements().iter().enumerate().map(|(t, w)| (w.clone(), e.vectors[(t, i)].conj() * root));
        factors.push(GroupAlgebraElement::from_terms(set.spec(), terms)?);
    }
    Ok(factors)
}

/// `Σ ξᵢ*∗ξᵢ`.
pub fn sum_of_squares(spec: GroupSpec, factors: &[GroupAlgebraElement]) -> Result<GroupAlgebraElement> {
    let mut acc = GroupAlgebraElement::zero(spec);
    for xi in factors {
        acc = acc.add(&xi.involve().convolve(xi)?)?;
    }
    Ok(acc)
}

fn shifted(f: &GroupAlgebraElement, epsilon: f64) -> GroupAlgebraElement {
    let mut g = f.clone();
    g.add_term(Word::unit(f.spec()), real(epsilon)).expect("same spec");
    g
}

/// Max coefficient modulus of `f + ε·δ₁ − Σ ξᵢ*∗ξᵢ`, by exact re-expansion.
pub fn verify_sos(cert: &SosCertificate, f: &GroupAlgebraElement) -> Result<f64> {
    let sos = sum_of_squares(f.spec(), &cert.factors)?;
    shifted(f, cert.epsilon).distance(&sos)
}

fn gram_search(inst: &SdpInstance, tol: f64) -> Result<std::result::Result<HermitianMatrix, NotCertified>> {
    match solve_feasibility(inst, tol, DEFAULT_MAX_ITER)? {
        Feasibility::Feasible { b, .. } => Ok(Ok(b)),
        Feasibility::NoProgress { stats, .. } => Ok(Err(NotCertified { solver: stats, residual: None })),
    }
}

/// Searches for a sum-of-squares decomposition of `f + ε·δ₁` supported on `E`.
pub fn certify_sos(
    f: &GroupAlgebraElement,
    set: &GroundedSet,
    epsilon: f64,
    tol: f64,
) -> Result<Certification<SosCertificate>> {
    let inst = sos_instance(f, set, epsilon)?;
    let gram = match gram_search(&inst, tol / 10.0)? {
        Ok(b) => b,
        Err(nc) => return Ok(Certification::NotCertified(nc)),
    };
    let factors = extract_factors(&gram, set)?;
    let mut cert = SosCertificate { support: set.clone(), gram, factors, epsilon, residual: 0.0 };
    let residual = verify_sos(&cert, f)?;
    if residual > tol {
        let solver = FeasibilityStats { iterations: 0, residual, psd_floor: eigh(&cert.gram)?.min() };
        return Ok(Certification::NotCertified(NotCertified { solver, residual: Some(residual) }));
    }
    cert.residual = residual;
    Ok(Certification::Certified(cert))
}

/// Class sums of `g` keyed by conjugacy representative.
pub fn class_sums(g: &GroupAlgebraElement) -> BTreeMap<Word, C64> {
    let mut out: BTreeMap<Word, C64> = BTreeMap::new();
    for (w, v) in g.terms() {
        *out.entry(w.conjugacy_canonical()).or_insert(c64(0.0, 0.0)) += *v;
    }
    out
}

/// The Gram problem with one constraint per conjugacy class met by `E⁻¹E`.
pub fn trace_instance(f: &GroupAlgebraElement, set: &GroundedSet, epsilon: f64) -> Result<SdpInstance> {
    if f.spec() != set.spec() {
        return Err(Error::SpecMismatch { left: f.spec(), right: set.spec() });
    }
    check_hermitian(f)?;
    let mut by_class: BTreeMap<Word, Vec<(usize, usize)>> = BTreeMap::new();
    for (a, idx) in pairs_by_quotient(set) {
        by_class.entry(a.conjugacy_canonical()).or_default().extend(idx);
    }
    let targets = class_sums(&shifted(f, epsilon));
    if let Some(c) = targets.keys().find(|c| !by_class.contains_key(*c)) {
        return Err(Error::ClassNotCovered(c.to_string()));
    }
    let mut inst = SdpInstance::new(set.len());
    for (c, idx) in &by_class {
        let rhs = targets.get(c).copied().unwrap_or(c64(0.0, 0.0));
        inst.add_constraint(AffineConstraint::new(idx.iter().map(|&(i, j)| (i, j, real(1.0))), rhs))?;
    }
    Ok(inst)
}

/// Class sums of `f + ε·δ₁ − Σ ξᵢ*∗ξᵢ` over every class met by either side.
pub fn trace_class_residuals(
    f: &GroupAlgebraElement,
    epsilon: f64,
    factors: &[GroupAlgebraElement],
) -> Result<BTreeMap<Word, C64>> {
    let remainder = shifted(f, epsilon).sub(&sum_of_squares(f.spec(), factors)?)?;
    let mut sums = class_sums(&remainder);
    for c in class_sums(&shifted(f, epsilon)).keys() {
        sums.entry(c.clone()).or_insert(c64(0.0, 0.0));
    }
    Ok(sums)
}

/// Largest class-sum modulus of the remainder.
pub fn verify_trace(cert: &TraceCertificate, f: &GroupAlgebraElement) -> Result<f64> {
    let sums = trace_class_residuals(f, cert.certificate.epsilon, &cert.certificate.factors)?;
    Ok(sums.values().fold(0.0_f64, |acc, v| acc.max(v.norm())))
}

/// Searches for `f + ε·δ₁ ∈ Σ ξᵢ*∗ξᵢ + span{commutators}` with `supp ξᵢ ⊆ E`.
pub fn certify_trace(
    f: &GroupAlgebraElement,
    set: &GroundedSet,
    epsilon: f64,
    tol: f64,
) -> Result<Certification<TraceCertificate>> {
    let inst = trace_instance(f, set, epsilon)?;
    let gram = match gram_search(&inst, tol / 10.0)? {
        Ok(b) => b,
        Err(nc) => return Ok(Certification::NotCertified(nc)),
    };
    let factors = extract_factors(&gram, set)?;
    let class_residuals = trace_class_residuals(f, epsilon, &factors)?;
    let residual = class_residuals.values().fold(0.0_f64, |acc, v| acc.max(v.norm()));
    if residual > tol {
        let solver = FeasibilityStats { iterations: 0, residual, psd_floor: eigh(&gram)?.min() };
        return Ok(Certification::NotCertified(NotCertified { solver, residual: Some(residual) }));
    }
    let certificate = SosCertificate { support: set.clone(), gram, factors, epsilon, residual };
    Ok(Certification::Certified(TraceCertificate { certificate, class_residuals }))
}

/// Unitary dilation `[[X, (I−XX*)^{1/2}], [(I−X*X)^{1/2}, −X*]]` of a square
/// contraction. Singular values in `(1, 1+1e-6]` are clipped to 1 first.
pub fn dilate_contraction(x: &CMatrix) -> Result<CMatrix> {
    let n = x.nrows();
    if x.ncols() != n {
        return Err(Error::Dimension(format!("contraction must be square, got {:?}", x.shape())));
    }
    if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    if n == 0 {
        return Ok(CMatrix::zeros(0, 0));
    }
    let svd = x.clone().svd(true, true);
    let (w, v_t) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    let norm = svd.singular_values.max();
    if norm > 1.0 + CONTRACTION_SLACK {
        return Err(Error::NotContraction(norm));
    }
    let sigma: Vec<f64> = svd.singular_values.iter().map(|s| s.min(1.0)).collect();
    let block = if norm > 1.0 {
        &w * CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, sigma.iter().map(|s| real(*s)))) * &v_t
    } else {
        x.clone()
    };
    let defect = |s: &f64| real((1.0 - s * s).max(0.0_f64).sqrt());
    let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, sigma.iter().map(defect)));
    let left = &w * &d * w.adjoint();
    let right = v_t.adjoint() * &d * &v_t;
    let mut u = CMatrix::zeros(2 * n, 2 * n);
    u.view_mut((0, 0), (n, n)).copy_from(&block);
    u.view_mut((0, n), (n, n)).copy_from(&left);
    u.view_mut((n, 0), (n, n)).copy_from(&right);
    u.view_mut((n, n), (n, n)).copy_from(&(-block.adjoint()));
    Ok(u)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FalsifyMode {
    /// Smallest eigenvalue of `π(f)`.
    Operator,
    /// Normalized trace of `π(f)`.
    Trace,
}

#[derive(Debug, Clone)]
pub struct FalsifyReport {
    pub mode: FalsifyMode,
    pub worst: f64,
    pub witness: FiniteRep,
    /// Index of the witness sample.
    pub witness_sample: usize,
    pub samples: usize,
}

impl FalsifyReport {
    /// Whether the worst value disproves positivity at tolerance `tol`.
    pub fn falsifies(&self, tol: f64) -> bool {
        self.worst < -10.0 * tol
    }
}

/// Uniformly random contraction: a Ginibre matrix rescaled to norm `r ∈ (0, 1]`.
pub fn random_contraction(n: usize, rng: &mut impl Rng) -> CMatrix {
    let g = rng::ginibre(n, n, rng);
    let norm = operator_norm(&g);
    let r: f64 = rng.random_range(0.0..1.0);
    g * real((1.0 - r) / norm.max(f64::MIN_POSITIVE))
}

/// Representation used by sample `index`: odd samples of even dimension on
/// free groups use dilated contractions, the rest are random unitaries.
pub fn sample_rep(spec: GroupSpec, dim: usize, index: usize, seed: u64) -> FiniteRep {
    let mut rng = rng::stream(seed, index as u64);
    if let GroupSpec::Free { rank } = spec {
        if index % 2 == 1 && dim.is_multiple_of(2) && dim > 0 {
            let gens = (0..rank)
                .map(|_| dilate_contraction(&random_contraction(dim / 2, &mut rng)).expect("contraction"))
                .collect();
            return FiniteRep::new(spec, gens).expect("dilations are unitary");
        }
    }
    FiniteRep::random(spec, dim, &mut rng)
}

fn sample_value(f: &GroupAlgebraElement, pi: &FiniteRep, mode: FalsifyMode) -> Result<f64> {
    let m = eval_rep(f, pi)?;
    Ok(match mode {
        FalsifyMode::Operator => eigh(&HermitianMatrix::new(m)?)?.min(),
        FalsifyMode::Trace => m.trace().re / pi.dim() as f64,
    })
}

/// Samples random finite representations (dimensions taken round-robin from
/// `dims`) and reports the most negative value of `f` among them.
pub fn falsify(
    f: &GroupAlgebraElement,
    mode: FalsifyMode,
    dims: &[usize],
    samples: usize,
    seed: u64,
    exec: Execution,
) -> Result<FalsifyReport> {
    check_hermitian(f)?;
    if samples == 0 || dims.is_empty() || dims.contains(&0) {
        return Err(Error::InvalidInput("falsify needs at least one sample and positive dimensions".into()));
    }
    let spec = f.spec();
    let values = exec.map_indexed(samples, |k| {
        let pi = sample_rep(spec, dims[k % dims.len()], k, seed);
        sample_value(f, &pi, mode)
    });
    let mut worst = (f64::INFINITY, 0);
    for (k, v) in values.into_iter().enumerate() {
        let v = v?;
        if v < worst.0 {
            worst = (v, k);
        }
    }
    let witness = sample_rep(spec, dims[worst.1 % dims.len()], worst.1, seed);
    Ok(FalsifyReport { mode, worst: worst.0, witness, witness_sample: worst.1, samples })
}

/// The union of the conjugacy classes met by `E⁻¹E`.
pub fn covered_classes(set: &GroundedSet) -> BTreeSet<Word> {
    set.double_set().iter().map(Word::conjugacy_canonical).collect()
}

//! A certificate only means something if it constrains representations.
//! These tests evaluate certified elements in random unitary representations.

use fgcert::algebra::{eval_rep, FiniteRep, GroupAlgebraElement};
use fgcert::certify::{certify_sos, certify_trace, default_support, sum_of_squares, Certification};
use fgcert::denselin::{c64, eigh, real, HermitianMatrix};
use fgcert::grounded::GroundedSet;
use fgcert::rng;
use fgcert::words::{GroupSpec, Word};
use rand::Rng;

fn w(spec: GroupSpec, s: &str) -> Word {
    Word::parse(spec, s).unwrap()
}

fn random_factor(set: &GroundedSet, rng: &mut impl Rng) -> GroupAlgebraElement {
    let terms = set.elements().iter().map(|s| (s.clone(), c64(rng.random_range(-3..=3) as f64, rng.random_range(-3..=3) as f64)));
    GroupAlgebraElement::from_terms(set.spec(), terms).unwrap()
}

fn min_eig(f: &GroupAlgebraElement, pi: &FiniteRep) -> f64 {
    let m = HermitianMatrix::new(eval_rep(f, pi).unwrap()).unwrap();
    eigh(&m).unwrap().min()
}

#[test]
fn sos_certificates_bound_every_representation() {
    let spec = GroupSpec::free(2);
    for seed in 0..10 {
        let mut rng = rng::seeded(seed);
        let set = GroundedSet::random(spec, 4, &mut rng).unwrap();
        let factors: Vec<_> = (0..2).map(|_| random_factor(&set, &mut rng)).collect();
        let f = sum_of_squares(spec, &factors).unwrap();
        let eps = 1e-6;
        let Certification::Certified(cert) = certify_sos(&f, &set, eps, 1e-9).unwrap() else {
            panic!("seed {seed}: exact SOS not certified");
        };
        let slack = cert.residual * set.double_set().len() as f64 + eps;
        for k in 0..20 {
            let pi = FiniteRep::random(spec, 1 + k % 4, &mut rng);
            let floor = min_eig(&f, &pi);
            assert!(floor >= -slack, "seed {seed}: λmin {floor} below −{slack}");
        }
    }
}

#[test]
fn negative_elements_are_never_certified() {
    let spec = GroupSpec::free(2);
    // 2 − (g1 + g1⁻¹) − (g2 + g2⁻¹) − 1 has value −3 at the trivial character.
    let terms = [("e", 1.0), ("g1", -1.0), ("g1^-1", -1.0), ("g2", -1.0), ("g2^-1", -1.0)];
    let f = GroupAlgebraElement::from_terms(spec, terms.iter().map(|(s, v)| (w(spec, s), real(*v)))).unwrap();
    let trivial = FiniteRep::new(spec, vec![fgcert::denselin::CMatrix::identity(1, 1); 2]).unwrap();
    assert!(min_eig(&f, &trivial) < -2.9);
    let set = default_support(&f).unwrap();
    assert!(!certify_sos(&f, &set, 0.0, 1e-9).unwrap().is_certified());
}

/// Normalized traces are constant on conjugacy classes, so vanishing class
/// sums force `τ(π(f)) ≥ −ε − r·#classes`.
#[test]
fn trace_certificates_bound_normalized_traces() {
    let spec = GroupSpec::free(2);
    let set = GroundedSet::new(spec, ["e", "g1", "g2"].map(|s| w(spec, s))).unwrap();
    for seed in 0..5 {
        let mut rng = rng::seeded(100 + seed);
        let xi = random_factor(&set, &mut rng);
        let sos = sum_of_squares(spec, &[xi]).unwrap();
        // g2⁻¹g1 − g1g2⁻¹ is a difference of conjugates; add its adjoint.
        let comm = [("g2^-1 g1", 1.0), ("g1 g2^-1", -1.0), ("g1^-1 g2", 1.0), ("g2 g1^-1", -1.0)];
        let extra = GroupAlgebraElement::from_terms(spec, comm.iter().map(|(s, v)| (w(spec, s), real(*v)))).unwrap();
        let f = sos.add(&extra).unwrap();
        let eps = 1e-6;
        let Certification::Certified(cert) = certify_trace(&f, &set, eps, 1e-9).unwrap() else {
            panic!("seed {seed}: trace certificate not found");
        };
        let classes = cert.class_residuals.len() as f64;
        let slack = eps + cert.certificate.residual * classes;
        for k in 0..20 {
            let dim = 1 + k % 4;
            let pi = FiniteRep::random(spec, dim, &mut rng);
            let tau = eval_rep(&f, &pi).unwrap().trace().re / dim as f64;
            assert!(tau >= -slack, "seed {seed}: τ = {tau}");
        }
    }
}

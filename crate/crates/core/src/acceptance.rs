//! The acceptance suite: eleven end-to-end checks at fixed tolerances, shared
//! by the `acceptance` test target and the CLI `selftest` command.

use std::fmt;
use std::time::{Duration, Instant};

use rand::Rng;

use crate::algebra::GroupAlgebraElement;
use crate::bell::{classical_value, inner_bound, outer_bound, BellFunctional, BellScenario, Level, SeeSawOptions};
use crate::certify::{
    certify_sos, certify_trace, default_support, dilate_contraction, falsify, random_contraction, verify_sos,
    verify_trace, FalsifyMode,
};
use crate::denselin::{c64, complete_block, eigh, max_abs, operator_norm, psd_floor, real, CMatrix, HermitianMatrix};
use crate::extendpt::{delta_type, extend_step, quotient_spread, random_positive_type, toeplitz_scale, PartialPositiveType};
use crate::gnsrep::gns;
use crate::grounded::GroundedSet;
use crate::parallel::Execution;
use crate::rng;
use crate::words::{GroupSpec, Word};
use crate::algebra::PartialFunction;
use crate::denselin::PartialBlockMatrix;

#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {:>2} {}: {}", self.id, self.name, self.detail)
    }
}

type Check = std::result::Result<String, String>;

fn run(id: usize, name: &'static str, budget: Option<Duration>, body: impl FnOnce() -> Check) -> Outcome {
    let start = Instant::now();
    let result = body();
    let elapsed = start.elapsed();
    let (mut passed, mut detail) = match result {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    if let Some(limit) = budget {
        if elapsed > limit {
            passed = false;
            detail = format!("{detail}; took {:.1}s, limit {}s", elapsed.as_secs_f64(), limit.as_secs());
        }
    }
    Outcome { id, name, passed, detail, elapsed }
}

macro_rules! ensure {
    ($cond:expr, $($arg:tt)*) => {
        if !$cond {
            return Err(format!($($arg)*));
        }
    };
}

fn ok<T, E: fmt::Display>(r: std::result::Result<T, E>) -> std::result::Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn free2() -> GroupSpec {
    GroupSpec::free(2)
}

fn word(text: &str) -> Word {
    Word::parse(free2(), text).expect("fixture word")
}

fn element(terms: &[(&str, f64)]) -> GroupAlgebraElement {
    GroupAlgebraElement::from_terms(free2(), terms.iter().map(|(w, c)| (word(w), real(*c)))).expect("fixture element")
}

fn random_coefficient(rng: &mut impl Rng) -> crate::denselin::C64 {
    c64(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0))
}

/// `ξ` with random coefficients on every element of `set`.
pub fn random_factor(set: &GroundedSet, rng: &mut impl Rng) -> GroupAlgebraElement {
    let terms: Vec<_> = set.elements().iter().map(|w| (w.clone(), random_coefficient(rng))).collect();
    GroupAlgebraElement::from_terms(set.spec(), terms).expect("same spec")
}

/// `Σ ξᵢ*∗ξᵢ` for `k` random factors on `set`.
pub fn random_sos(set: &GroundedSet, k: usize, rng: &mut impl Rng) -> GroupAlgebraElement {
    let mut f = GroupAlgebraElement::zero(set.spec());
    for _ in 0..k {
        let xi = random_factor(set, rng);
        f = f.add(&xi.involve().convolve(&xi).expect("same spec")).expect("same spec");
    }
    f
}

/// Hermitian combination `c(δ_{xy} − δ_{yx}) + c̄(δ_{(xy)⁻¹} − δ_{(yx)⁻¹})`
/// with `xy` drawn from `E⁻¹E`, so every class involved is covered by `E`.
pub fn random_commutators(set: &GroundedSet, count: usize, rng: &mut impl Rng) -> GroupAlgebraElement {
    let spec = set.spec();
    let candidates: Vec<Word> = set.double_set().into_iter().filter(|w| w.letters().len() >= 2).collect();
    let mut f = GroupAlgebraElement::zero(spec);
    if candidates.is_empty() {
        return f;
    }
    for _ in 0..count {
        let w = &candidates[rng.random_range(0..candidates.len())];
        let p = rng.random_range(1..w.letters().len());
        let x = Word::from_letters(spec, &w.letters()[..p]).expect("prefix");
        let y = Word::from_letters(spec, &w.letters()[p..]).expect("suffix");
        let yx = y.multiply(&x).expect("same spec");
        let c = random_coefficient(rng);
        let mut h = GroupAlgebraElement::zero(spec);
        for (t, v) in [(w.clone(), c), (yx.clone(), -c), (w.inverse(), c.conj()), (yx.inverse(), -c.conj())] {
            h.add_term(t, v).expect("same spec");
        }
        f = f.add(&h).expect("same spec");
    }
    f
}

/// Random 3-block pattern read off a random PSD matrix of rank `≤ n`.
pub fn random_block_pattern(rng: &mut impl Rng) -> PartialBlockMatrix {
    let (n0, n1, n2) = (rng.random_range(1..=6), rng.random_range(1..=6), rng.random_range(1..=6));
    let n = n0 + n1 + n2;
    let r = rng.random_range(1..=n);
    let g = rng::ginibre(n, r, rng);
    let m = &g * g.adjoint();
    let herm = |o: usize, k: usize| HermitianMatrix::new(m.view((o, o), (k, k)).into_owned()).expect("hermitian");
    PartialBlockMatrix {
        a: herm(0, n0),
        x: m.view((0, n0), (n0, n1)).into_owned(),
        b: herm(n0, n1),
        y: m.view((n0, n0 + n1), (n1, n2)).into_owned(),
        c: herm(n0 + n1, n2),
    }
}

pub fn criterion_1() -> Outcome {
    run(1, "SOS toy certificate", Some(Duration::from_secs(1)), || {
        let f = element(&[("e", 1.0), ("g1", -0.5), ("g1^-1", -0.5)]);
        let set = ok(GroundedSet::new(free2(), [word("e"), word("g1")]))?;
        let cert = ok(certify_sos(&f, &set, 0.0, 1e-9))?.certified().ok_or("not certified")?;
        let residual = ok(verify_sos(&cert, &f))?;
        ensure!(residual <= 1e-9, "residual {residual:e} > 1e-9");
        ensure!(cert.factors.len() <= 2, "{} factors", cert.factors.len());
        Ok(format!("residual {residual:.2e}, n = {}", cert.factors.len()))
    })
}

pub fn criterion_2() -> Outcome {
    run(2, "SOS round trip", Some(Duration::from_secs(60)), || {
        let mut worst: f64 = 0.0;
        for seed in 0..100 {
            let mut rng = rng::seeded(seed);
            let size = rng.random_range(1..=6);
            let set = ok(GroundedSet::random(free2(), size, &mut rng))?;
            let k = rng.random_range(1..=3);
            let f = random_sos(&set, k, &mut rng);
            let cert = ok(certify_sos(&f, &set, 0.0, 1e-7))?
                .certified()
                .ok_or_else(|| format!("seed {seed}: not certified"))?;
            let residual = ok(verify_sos(&cert, &f))?;
            ensure!(residual <= 1e-7, "seed {seed}: residual {residual:e}");
            ensure!(cert.factors.len() <= set.len(), "seed {seed}: {} factors for |E| = {}", cert.factors.len(), set.len());
            worst = worst.max(residual);
        }
        Ok(format!("100 instances, worst residual {worst:.2e}"))
    })
}

pub fn criterion_3(exec: Execution) -> Outcome {
    run(3, "SOS refutation", None, || {
        let f = element(&[("g1", 1.0), ("g1^-1", 1.0)]);
        let set = ok(default_support(&f))?;
        let res = ok(certify_sos(&f, &set, 0.0, 1e-9))?;
        ensure!(!res.is_certified(), "indefinite element was certified");
        let report = ok(falsify(&f, FalsifyMode::Operator, &[1], 1000, 0, exec))?;
        ensure!(report.worst <= -1.9, "worst {} > -1.9", report.worst);
        Ok(format!("not certified; falsify worst {:.6}", report.worst))
    })
}

pub fn criterion_4() -> Outcome {
    run(4, "Completion", None, || {
        let mut rng = rng::seeded(4);
        let mut worst = f64::INFINITY;
        for case in 0..500 {
            let p = random_block_pattern(&mut rng);
            let c = ok(complete_block(&p))?;
            let e = ok(eigh(&c.full))?;
            let ratio = e.min() / e.max().max(f64::MIN_POSITIVE);
            ensure!(e.min() >= -1e-7 * e.max(), "case {case}: floor {:e} vs λmax {:e}", e.min(), e.max());
            worst = worst.min(ratio);
        }
        Ok(format!("500 cases, worst floor/λmax {worst:.2e}"))
    })
}

fn check_extension_run(seed: u64) -> Check {
    let mut rng = rng::seeded(1000 + seed);
    let dim = rng.random_range(1..=4);
    let size = rng.random_range(1..=8);
    let set = ok(GroundedSet::random(free2(), size, &mut rng))?;
    let target = ok(set.grow(rng.random_range(1..=4), &mut rng))?;
    let g = ok(random_positive_type(&set, dim, seed))?;
    let chain = ok(set.extension_chain(&target))?;
    let mut cur: PartialPositiveType = g.clone();
    for t0 in &chain {
        let step = ok(extend_step(&cur, t0))?;
        let m = step.extended.toeplitz();
        let scale = toeplitz_scale(&m);
        let floor = ok(psd_floor(&m))?;
        ensure!(floor >= -1e-7 * scale, "run {seed}: floor {floor:e} at {t0}");
        let spread = ok(quotient_spread(step.completed.matrix(), &step.order(t0)))?;
        ensure!(spread <= 1e-12 * scale, "run {seed}: completed block depends on more than s⁻¹t ({spread:e})");
        for (w, v) in cur.values().values() {
            ensure!(step.extended.value(w) == Some(*v), "run {seed}: value at {w} changed");
        }
        cur = step.extended;
    }
    let back: PartialFunction = ok(cur.values().restrict(g.values().domain()))?;
    ensure!(&back == g.values(), "run {seed}: restriction differs");
    Ok(String::new())
}

pub fn criterion_5() -> Outcome {
    run(5, "Tree extension", None, || {
        for seed in 0..200 {
            check_extension_run(seed)?;
        }
        Ok("200 runs".into())
    })
}

pub fn criterion_6(exec: Execution) -> Outcome {
    run(6, "CHSH two-sided", Some(Duration::from_secs(120)), || {
        let f = BellFunctional::chsh();
        let tsirelson = 2.0 * std::f64::consts::SQRT_2;
        let outer = ok(outer_bound(&f, Level::OneAb))?.value;
        let mut opts = SeeSawOptions::new(2, 6);
        opts.restarts = 8;
        let inner = ok(inner_bound(&f, &opts, exec))?.value;
        ensure!((outer - tsirelson).abs() <= 1e-3, "outer {outer}");
        ensure!(inner >= tsirelson - 1e-3, "inner {inner}");
        ensure!(outer - inner <= 2e-3, "gap {}", outer - inner);
        Ok(format!("outer {outer:.9}, inner {inner:.9}, gap {:.2e}", outer - inner))
    })
}

pub fn criterion_7(exec: Execution) -> Outcome {
    run(7, "Classical baseline", None, || {
        let f = BellFunctional::chsh();
        let classical = classical_value(&f);
        let mut opts = SeeSawOptions::new(1, 7);
        opts.restarts = 8;
        let inner = ok(inner_bound(&f, &opts, exec))?.value;
        ensure!(classical == 2.0, "enumeration gives {classical}");
        ensure!(inner == 2.0, "see-saw gives {inner:?}");
        Ok(format!("inner {inner}, enumeration {classical}"))
    })
}

pub fn criterion_8(exec: Execution) -> Outcome {
    run(8, "Sandwich and monotonicity", None, || {
        let s = ok(BellScenario::new(2, 2))?;
        let mut min_slack = f64::INFINITY;
        for seed in 0..20 {
            let f = BellFunctional::random(s, &mut rng::seeded(800 + seed));
            let opts = SeeSawOptions::new(2, seed);
            let inner = ok(inner_bound(&f, &opts, exec))?.value;
            let mid = ok(outer_bound(&f, Level::OneAb))?.value;
            let low = ok(outer_bound(&f, Level::Length(1)))?.value;
            ensure!(inner <= mid + 1e-6, "seed {seed}: inner {inner} > outer(1+AB) {mid}");
            ensure!(mid <= low + 1e-6, "seed {seed}: outer(1+AB) {mid} > outer(1) {low}");
            min_slack = min_slack.min(mid - inner);
        }
        Ok(format!("20 functionals, smallest outer(1+AB) − inner {min_slack:.2e}"))
    })
}

pub fn criterion_9(exec: Execution) -> Outcome {
    run(9, "Trace certificates", None, || {
        let mut worst_residual: f64 = 0.0;
        let mut worst_trace = f64::INFINITY;
        for seed in 0..50 {
            let mut rng = rng::seeded(900 + seed);
            let size = rng.random_range(2..=6);
            let set = ok(GroundedSet::random(free2(), size, &mut rng))?;
            let k = rng.random_range(1..=3);
            let count = rng.random_range(1..=3);
            let f = ok(random_sos(&set, k, &mut rng).add(&random_commutators(&set, count, &mut rng)))?;
            let cert = ok(certify_trace(&f, &set, 0.0, 1e-7))?
                .certified()
                .ok_or_else(|| format!("instance {seed}: not certified"))?;
            let residual = ok(verify_trace(&cert, &f))?;
            ensure!(residual <= 1e-7, "instance {seed}: residual {residual:e}");
            let report = ok(falsify(&f, FalsifyMode::Trace, &[1, 2, 4], 60, seed, exec))?;
            ensure!(report.worst >= -1e-6, "instance {seed}: trace {}", report.worst);
            worst_residual = worst_residual.max(residual);
            worst_trace = worst_trace.min(report.worst);
        }
        let set = ok(GroundedSet::new(free2(), [word("e"), word("g1"), word("g2")]))?;
        let commutator = element(&[("g1", 1.0), ("g1^-1", 1.0), ("g2 g1 g2^-1", -1.0), ("g2 g1^-1 g2^-1", -1.0)]);
        let cert = ok(certify_trace(&commutator, &set, 0.0, 1e-9))?.certified().ok_or("commutator not certified")?;
        ensure!(cert.certificate.gram.max_abs() <= 1e-12, "commutator Gram {:e}", cert.certificate.gram.max_abs());
        Ok(format!("50 instances, worst residual {worst_residual:.2e}, smallest trace {worst_trace:.3}; zero Gram for the commutator"))
    })
}

pub fn criterion_10() -> Outcome {
    run(10, "GNS", None, || {
        let set = ok(GroundedSet::new(free2(), ["e", "g1", "g2", "g1 g2", "g1^-1"].map(word)))?;
        let delta = ok(gns(&ok(delta_type(&set))?))?;
        ensure!(delta.rank == set.len(), "δ₁ rank {}", delta.rank);
        ensure!(delta.gram == HermitianMatrix::identity(set.len()), "δ₁ Gram is not the identity");
        let ones = ok(PartialFunction::from_values(free2(), set.double_set().into_iter().map(|w| (w, real(1.0)))))?;
        let constant = ok(gns(&ok(PartialPositiveType::new(set.clone(), ones))?))?;
        ensure!(constant.rank == 1, "constant state rank {}", constant.rank);
        let mut worst: f64 = 0.0;
        for seed in 0..20 {
            let mut rng = rng::seeded(1100 + seed);
            let size = rng.random_range(1..=8);
            let e = ok(GroundedSet::random(free2(), size, &mut rng))?;
            let g = ok(random_positive_type(&e, rng.random_range(1..=3), seed))?;
            let data = ok(gns(&g))?;
            let defect = data.state_recovery_defect(&g);
            ensure!(defect <= 1e-8, "seed {seed}: recovery defect {defect:e}");
            worst = worst.max(defect);
        }
        Ok(format!("ranks {} and 1; worst recovery defect {worst:.2e}", set.len()))
    })
}

pub fn criterion_11() -> Outcome {
    run(11, "Choi dilation", None, || {
        let mut rng = rng::seeded(11);
        let mut worst: f64 = 0.0;
        for case in 0..100 {
            let n = 1 + case % 4;
            let x = random_contraction(n, &mut rng);
            let u = ok(dilate_contraction(&x))?;
            let defect = operator_norm(&(u.adjoint() * &u - CMatrix::identity(2 * n, 2 * n)));
            ensure!(defect <= 1e-10, "case {case}: ‖U*U − I‖ = {defect:e}");
            ensure!(u.view((0, 0), (n, n)) == x, "case {case}: corner differs by {:e}", max_abs(&(u.view((0, 0), (n, n)) - &x)));
            worst = worst.max(defect);
        }
        Ok(format!("100 contractions, worst ‖U*U − I‖ {worst:.2e}"))
    })
}

/// Runs every criterion in order.
pub fn run_all(exec: Execution) -> Vec<Outcome> {
    vec![
        criterion_1(),
        criterion_2(),
        criterion_3(exec),
        criterion_4(),
        criterion_5(),
        criterion_6(exec),
        criterion_7(exec),
        criterion_8(exec),
        criterion_9(exec),
        criterion_10(),
        criterion_11(),
    ]
}

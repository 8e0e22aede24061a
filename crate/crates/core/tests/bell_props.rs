use fgcert::bell::{
    classical_value, correlation_of, inner_bound, outer_bound, BellFunctional, BellScenario, Correlation, Level, PvmFamily,
    SeeSawOptions,
};
use fgcert::denselin::kron;
use fgcert::parallel::Execution;
use fgcert::rng;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quantum_correlations_satisfy_the_invariants(seed in 0u64..10_000, d in 2usize..4, m in 2usize..4, da in 1usize..4, db in 1usize..4) {
        let s = BellScenario::new(d, m).unwrap();
        let mut rng = rng::seeded(seed);
        let a = PvmFamily::random(d, m, da, &mut rng);
        let b = PvmFamily::random(d, m, db, &mut rng);
        let xi = rng::unit_vector(da * db, &mut rng);
        let gamma = correlation_of(s, &a, &b, &xi).unwrap();
        prop_assert!(gamma.invariant_defect() <= 1e-12);
        let back = Correlation::from_fourier(s, &gamma.fourier()).unwrap();
        for (x, y) in back.values().iter().zip(gamma.values()) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    /// Product states give product distributions.
    #[test]
    fn product_states_factor(seed in 0u64..10_000) {
        let s = BellScenario::new(2, 2).unwrap();
        let mut rng = rng::seeded(seed);
        let a = PvmFamily::random(2, 2, 2, &mut rng);
        let b = PvmFamily::random(2, 2, 2, &mut rng);
        let (u, v) = (rng::unit_vector(2, &mut rng), rng::unit_vector(2, &mut rng));
        let gamma = correlation_of(s, &a, &b, &kron(&u, &v)).unwrap();
        for k in 0..2 {
            for l in 0..2 {
                for i in 0..2 {
                    for j in 0..2 {
                        let pa = (u.adjoint() * a.projector(k, i) * &u)[(0, 0)].re;
                        let pb = (v.adjoint() * b.projector(l, j) * &v)[(0, 0)].re;
                        prop_assert!((gamma.get(k, l, i, j) - pa * pb).abs() <= 1e-12);
                    }
                }
            }
        }
    }
}

#[test]
fn hierarchy_is_monotone_and_sandwiches_the_inner_bound() {
    let s = BellScenario::new(2, 2).unwrap();
    for seed in 0..4 {
        let f = BellFunctional::random(s, &mut rng::seeded(seed));
        let one = outer_bound(&f, Level::Length(1)).unwrap().value;
        let ab = outer_bound(&f, Level::OneAb).unwrap().value;
        let two = outer_bound(&f, Level::Length(2)).unwrap().value;
        assert!(ab <= one + 1e-6 && two <= ab + 1e-6, "seed {seed}: {one} {ab} {two}");
        let classical = classical_value(&f);
        assert!(classical <= two + 1e-6, "seed {seed}: classical {classical} above {two}");
        let mut opts = SeeSawOptions::new(2, seed);
        opts.restarts = 4;
        let inner = inner_bound(&f, &opts, Execution::Sequential).unwrap();
        assert!(inner.value <= two + 1e-6, "seed {seed}: inner {} above {two}", inner.value);
        let gamma = correlation_of(s, &inner.alice, &inner.bob, &inner.state).unwrap();
        assert!((f.evaluate(&gamma).unwrap() - inner.value).abs() <= 1e-9);
    }
}

#[test]
fn zero_functional_has_zero_bounds() {
    let f = BellFunctional::zero(BellScenario::new(2, 3).unwrap());
    assert!(outer_bound(&f, Level::Length(1)).unwrap().value.abs() <= 1e-6);
    assert_eq!(classical_value(&f), 0.0);
}

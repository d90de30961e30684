//! Randomized invariants across the engines.

use ncbmo::bmo::{bmo_semigroup_norm, BmoSide};
use ncbmo::czo::{
    fourier_multiplier_apply, hilbert_type_transform, multiplier_norm_power_iteration, triangular_truncation,
    MultiplierCarrier, MultiplierSymbol,
};
use ncbmo::metric::{kernel_domination_check, MarkovMetricSpec, MetricVariant};
use ncbmo::opalg::{norm, op_norm, psd_order_gap, psd_sqrt, singular_values, CMatrix, C64};
use ncbmo::qtorus::{gns_opnorm, qt_heat_apply, tw_adjoint, tw_trace, twisted_mul, GnsBox, TwistParams, TwistedSeries};
use ncbmo::semigroup::{markov_check, Carrier, Psi, SemigroupSpec, TGrid};
use ncbmo::transference::{transference_check, FiniteGroupTable, GroupKernel, UnitaryRep};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn matrix(n: usize, seed: u64) -> CMatrix {
    CMatrix::random_gaussian(n, &mut rng(seed))
}

fn series(theta: f64, seed: u64) -> TwistedSeries {
    TwistedSeries::random(&TwistParams::plane(theta), 3, 6, &mut rng(seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn schatten_norms_decrease_in_p(n in 2usize..7, seed in any::<u64>(), p in 1.0f64..6.0, dp in 0.1f64..4.0) {
        let a = matrix(n, seed);
        prop_assert!(norm(&a, p + dp).unwrap() <= norm(&a, p).unwrap() * (1.0 + 1e-12));
        prop_assert!(op_norm(&a) <= norm(&a, p).unwrap() * (1.0 + 1e-12));
        let s2 = norm(&a, 2.0).unwrap();
        prop_assert!((s2 * s2 - a.frobenius_sq()).abs() <= 1e-10 * a.frobenius_sq());
    }

    #[test]
    fn adjoint_preserves_singular_values(n in 2usize..7, seed in any::<u64>()) {
        let a = matrix(n, seed);
        let s = singular_values(&a);
        let t = singular_values(&a.adjoint());
        for (x, y) in s.iter().zip(&t) {
            prop_assert!((x - y).abs() <= 1e-10 * (1.0 + x));
        }
    }

    #[test]
    fn psd_sqrt_squares_back(n in 2usize..7, seed in any::<u64>()) {
        let b = matrix(n, seed);
        let a = b.abs_sq();
        let r = psd_sqrt(&a, 1e-10).unwrap();
        prop_assert!((&r * &r).max_abs_diff(&a) <= 1e-9 * (1.0 + a.max_abs()));
        prop_assert!(psd_order_gap(&CMatrix::zeros(n), &a).unwrap() >= -1e-10 * a.max_abs());
    }

    #[test]
    fn triangular_truncation_is_an_idempotent_projection(n in 2usize..9, seed in any::<u64>()) {
        let a = matrix(n, seed);
        let b = matrix(n, seed ^ 1);
        let ta = triangular_truncation(&a);
        prop_assert_eq!(triangular_truncation(&ta), ta.clone());
        let sum = triangular_truncation(&(&a + &b));
        prop_assert!(sum.max_abs_diff(&(&ta + &triangular_truncation(&b))) <= 1e-14);
        // T = i(id - 2 tri) squares to minus the identity off the diagonal
        let tt = hilbert_type_transform(&hilbert_type_transform(&a));
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    prop_assert!((tt.get(i, j) + a.get(i, j)).norm() <= 1e-14 * (1.0 + a.get(i, j).norm()));
                }
            }
        }
    }

    #[test]
    fn cyclic_multiplier_norm_is_the_symbol_sup(big_n in 4usize..17, seed in any::<u64>()) {
        let mut r = rng(seed);
        let vals: Vec<C64> = (0..big_n)
            .map(|_| C64::new(rand::Rng::random_range(&mut r, -2.0..2.0), rand::Rng::random_range(&mut r, -2.0..2.0)))
            .collect();
        let sup = vals.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        let domain = ncbmo::czo::MultiplierDomain::Cyclic { big_n };
        let sym = MultiplierSymbol::new(domain, vals.clone()).unwrap();
        let est = multiplier_norm_power_iteration(&sym, 400).unwrap();
        prop_assert!(est <= sup * (1.0 + 1e-10) && est >= 0.99 * sup, "{est} vs {sup}");
        // a dominant frequency makes the iteration converge fully
        let mut peaked = vals;
        peaked[seed as usize % big_n] = C64::new(2.0 * sup, 0.0);
        let est = multiplier_norm_power_iteration(&MultiplierSymbol::new(domain, peaked).unwrap(), 400).unwrap();
        prop_assert!((est - 2.0 * sup).abs() <= 1e-9 * sup, "{est} vs {}", 2.0 * sup);
        // applying to a vector never exceeds the bound
        let f: Vec<C64> = (0..big_n).map(|k| C64::new((k as f64).sin(), (k as f64).cos())).collect();
        let l2 = |v: &[C64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let MultiplierCarrier::Cyclic(g) = fourier_multiplier_apply(&sym, &MultiplierCarrier::Cyclic(f.clone())).unwrap() else {
            panic!()
        };
        prop_assert!(l2(&g) <= sup * l2(&f) * (1.0 + 1e-12));
    }

    #[test]
    fn power_length_schur_semigroups_are_markov(n in 2usize..8, exponent in 0.1f64..2.0, coef in 0.1f64..3.0) {
        let s = SemigroupSpec::SchurLength { n, psi: Psi::power(coef, exponent) };
        let r = markov_check(&s, &[0.0, 0.05, 0.5, 5.0]).unwrap();
        prop_assert!(r.pass, "{:?}", r.samples);
    }

    #[test]
    fn schur_semigroup_law(n in 2usize..7, seed in any::<u64>(), s in 0.0f64..2.0, t in 0.0f64..2.0) {
        let spec = SemigroupSpec::poisson_schur(n);
        let a = Carrier::Matrix(matrix(n, seed));
        let Carrier::Matrix(two) = spec.apply(s, &spec.apply(t, &a).unwrap()).unwrap() else { panic!() };
        let Carrier::Matrix(one) = spec.apply(s + t, &a).unwrap() else { panic!() };
        prop_assert!(two.max_abs_diff(&one) <= 1e-12);
    }

    #[test]
    fn bmo_is_a_seminorm_killing_constants(n in 2usize..6, seed in any::<u64>(), c in -3.0f64..3.0) {
        let grid = TGrid::log(1e-2, 1e2, 12).unwrap();
        let s = SemigroupSpec::poisson_schur(n);
        let a = matrix(n, seed);
        let base = bmo_semigroup_norm(&Carrier::Matrix(a.clone()), &s, &grid, BmoSide::Max).unwrap().value;
        let scaled = bmo_semigroup_norm(&Carrier::Matrix(a.scale_real(c)), &s, &grid, BmoSide::Max).unwrap().value;
        prop_assert!((scaled - c.abs() * base).abs() <= 1e-9 * (1.0 + base));
        let shifted = &a + &CMatrix::identity(n).scale_real(c);
        let sh = bmo_semigroup_norm(&Carrier::Matrix(shifted), &s, &grid, BmoSide::Max).unwrap().value;
        prop_assert!((sh - base).abs() <= 1e-9 * (1.0 + base));
    }

    #[test]
    fn euclidean_kernel_domination_on_random_points(x in -20.0f64..20.0, y in -20.0f64..20.0, t in 1e-3f64..1e3) {
        let r = kernel_domination_check(&MetricVariant::EuclideanHeat { n: 1 }, &[(x, y, t)]).unwrap();
        prop_assert!(r.pass, "ratio {}", r.worst_ratio);
    }

    #[test]
    fn metric_weights_are_positive(j in 1usize..60, t in 1e-3f64..1e3) {
        for q in [MarkovMetricSpec::euclidean(1).unwrap(), MarkovMetricSpec::euclidean(3).unwrap(), MarkovMetricSpec::sinc(4).unwrap()] {
            prop_assert!(q.sigma_sq(j, t).unwrap() > 0.0);
            prop_assert!(q.gamma_sq(j, t).unwrap() >= 1.0);
        }
    }

    #[test]
    fn twisted_trace_is_tracial(theta in 0.0f64..1.0, seed in any::<u64>()) {
        let f = series(theta, seed);
        let g = series(theta, seed.wrapping_add(1));
        let fg = tw_trace(&twisted_mul(&f, &g).unwrap());
        let gf = tw_trace(&twisted_mul(&g, &f).unwrap());
        prop_assert!((fg - gf).norm() <= 1e-12 * f.l1_norm() * g.l1_norm());
    }

    #[test]
    fn adjoint_is_an_antimultiplicative_involution(theta in 0.0f64..1.0, seed in any::<u64>()) {
        let f = series(theta, seed);
        let g = series(theta, seed.wrapping_add(7));
        prop_assert!(tw_adjoint(&tw_adjoint(&f)).max_abs_diff(&f).unwrap() <= 1e-15);
        let lhs = tw_adjoint(&twisted_mul(&f, &g).unwrap());
        let rhs = twisted_mul(&tw_adjoint(&g), &tw_adjoint(&f)).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() <= 1e-12 * f.l1_norm() * g.l1_norm());
    }

    #[test]
    fn quantum_heat_semigroup_law(theta in 0.0f64..1.0, seed in any::<u64>(), s in 0.0f64..1.0, t in 0.0f64..1.0) {
        let f = series(theta, seed);
        let two = qt_heat_apply(&qt_heat_apply(&f, s).unwrap(), t).unwrap();
        let one = qt_heat_apply(&f, s + t).unwrap();
        prop_assert!(two.max_abs_diff(&one).unwrap() <= 1e-14 * (1.0 + f.l1_norm()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn gns_norm_is_adjoint_invariant_and_below_l1(theta in 0.0f64..1.0, seed in any::<u64>()) {
        let f = series(theta, seed);
        let b = GnsBox::new(12);
        let a = gns_opnorm(&f, &b).unwrap();
        let s = gns_opnorm(&tw_adjoint(&f), &b).unwrap();
        prop_assert!((a - s).abs() <= 1e-8 * (1.0 + a));
        prop_assert!(a <= f.l1_norm() * (1.0 + 1e-10));
    }

    #[test]
    fn transferred_norm_never_exceeds_convolution_norm(n in 2usize..10, seed in any::<u64>(), freqs in prop::collection::vec(-20i64..20, 1..4)) {
        let g = FiniteGroupTable::cyclic(n).unwrap();
        let rep = UnitaryRep::cyclic_characters(&g, &freqs).unwrap();
        let k = GroupKernel::random(&g, &mut rng(seed));
        let r = transference_check(&g, &k, &rep).unwrap();
        prop_assert!(r.pass, "ratio {}", r.ratio);
        let reg = transference_check(&g, &k, &UnitaryRep::regular(&g).unwrap()).unwrap();
        prop_assert!((reg.ratio - 1.0).abs() <= 1e-10);
    }
}

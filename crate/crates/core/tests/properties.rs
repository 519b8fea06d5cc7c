use proptest::prelude::*;

use qrwt_core::cocycle::{cocycle_matrix_element, eh_generator, f_from_hamiltonian, hp_check, hp_solve, HamiltonianSpec};
use qrwt_core::cond_exp::CondExp;
use qrwt_core::experiments::Fixture;
use qrwt_core::generators::{ampliation_map, check_cruc, limit_generator_multiplicative, limit_image, modify};
use qrwt_core::linalg::{exp1, exp2, real, Superoperator, C64};
use qrwt_core::random::{random_matrix, random_vector, seeded};
use qrwt_core::state_gns::{GnsData, DEFAULT_SUPPORT_TOL};
use qrwt_core::walk_sim::{dense_walk_oracle, recursive_walk_value, StepFunction, WalkRun};
use qrwt_core::CMatrix;

fn random_density(seed: u64, n: usize, rank: usize) -> CMatrix {
    let mut rng = seeded(seed);
    let a = random_matrix(&mut rng, n, rank);
    let rho = &a * a.adjoint();
    let tr = rho.trace();
    rho / tr
}

fn mu_step(seed: u64, g: &GnsData, breaks: Vec<f64>) -> StepFunction {
    let mut rng = seeded(seed);
    let values = (1..breaks.len())
        .map(|_| {
            let x = random_vector(&mut rng, g.khat_dim());
            let p = g.omega().dotc(&x);
            (x - g.omega() * p) * real(0.6)
        })
        .collect();
    StepFunction::new(breaks, values).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gns_vector_reproduces_the_state(seed in any::<u64>(), n in 1usize..5, rank in 1usize..5) {
        let rank = rank.min(n);
        let rho = random_density(seed, n, rank);
        let g = GnsData::build(rho.clone(), DEFAULT_SUPPORT_TOL).unwrap();
        prop_assert!((g.omega().norm() - 1.0).abs() < 1e-12);
        prop_assert_eq!(g.k(), rank);
        prop_assert_eq!(g.mu_basis().ncols(), g.khat_dim() - 1);
        let x = random_matrix(&mut seeded(seed ^ 1), n, n);
        let via_omega = g.omega().dotc(&(g.pi(&x).unwrap() * g.omega()));
        prop_assert!((via_omega - (&rho * &x).trace()).norm() < 1e-11);
    }

    #[test]
    fn pinching_is_a_state_preserving_projection(seed in any::<u64>(), n in 2usize..5) {
        let rho = random_density(seed, n, n);
        let g = GnsData::build(rho, DEFAULT_SUPPORT_TOL).unwrap();
        let c = CondExp::diagonal(&g).unwrap();
        let x = random_matrix(&mut seeded(seed ^ 2), n, n);
        let dx = c.apply_d(&x).unwrap();
        prop_assert!((c.apply_d(&dx).unwrap() - &dx).norm() < 1e-11);
        prop_assert!((g.state_value(&dx) - g.state_value(&x)).norm() < 1e-11);
        prop_assert!(c.validate(&g, seed).unwrap().passed());
    }

    #[test]
    fn decapitated_exponential_identity(re in -5.0f64..5.0, im in -5.0f64..5.0) {
        let z = C64::new(re, im);
        let lhs = exp1(z) * exp1(-z);
        let rhs = exp2(z) + exp2(-z);
        prop_assert!((lhs - rhs).norm() < 1e-11 * lhs.norm().max(1.0));
    }

    #[test]
    fn modification_identities(seed in any::<u64>(), tau in 0.01f64..1.0) {
        let fx = Fixture::mixed();
        let mut rng = seeded(seed);
        let m = 2 * fx.g.n();
        let phi1 = Superoperator::from_matrix((2, 2), (m, m), random_matrix(&mut rng, m * m, 4)).unwrap();
        let phi2 = Superoperator::from_matrix((2, 2), (m, m), random_matrix(&mut rng, m * m, 4)).unwrap();
        prop_assert!(check_cruc(&phi1, tau, &fx.g, &fx.c).unwrap() < 1e-11 * phi1.matrix().norm().max(1.0) / tau);
        let id = ampliation_map(2, fx.g.n());
        let combined = phi1.add(&phi2).unwrap().sub(&id).unwrap();
        let lhs = modify(&combined, tau, &fx.g, &fx.c).unwrap();
        let rhs = modify(&phi1, tau, &fx.g, &fx.c).unwrap().add(&modify(&phi2, tau, &fx.g, &fx.c).unwrap()).unwrap();
        prop_assert!(lhs.distance(&rhs).unwrap() < 1e-10 * lhs.matrix().norm().max(1.0));
    }

    #[test]
    fn step_coefficients_integrate_exactly(seed in any::<u64>(), tau in 0.05f64..0.7, a in 0.05f64..1.0, b in 0.05f64..1.0) {
        let mut rng = seeded(seed);
        let f = StepFunction::new(vec![0.0, a, a + b], vec![random_vector(&mut rng, 3), random_vector(&mut rng, 3)]).unwrap();
        let n = f.steps_to_cover(tau);
        let total: qrwt_core::CVector = f.dtau_coeffs(tau, n).unwrap().iter().fold(qrwt_core::CVector::zeros(3), |acc, c| acc + c);
        let expected = f.integral(0.0, a + b);
        prop_assert!((total * real(tau.sqrt()) - expected).norm() < 1e-12);
    }

    #[test]
    fn walk_recursion_matches_dense_operator(seed in any::<u64>(), n in 0usize..4) {
        let fx = Fixture::mixed();
        let mut rng = seeded(seed);
        let m = 2 * fx.g.khat_dim();
        let phi_hat = Superoperator::from_matrix((2, 2), (m, m), random_matrix(&mut rng, m * m, 4) * real(0.4)).unwrap();
        let run = WalkRun::new(phi_hat.clone(), fx.g.omega().clone(), 0.1, 1.0).unwrap();
        let a = random_matrix(&mut rng, 2, 2);
        let u = random_vector(&mut rng, 2);
        let v = random_vector(&mut rng, 2);
        let xs: Vec<_> = (0..n).map(|_| random_vector(&mut rng, 6)).collect();
        let ys: Vec<_> = (0..n).map(|_| random_vector(&mut rng, 6)).collect();
        let oracle = dense_walk_oracle(&phi_hat, n, &a, &u, &v, &xs, &ys).unwrap();
        let rec = recursive_walk_value(&run, &a, &u, &v, &xs, &ys).unwrap();
        prop_assert!((oracle - rec).norm() < 1e-12 * oracle.norm().max(1.0));
    }

    #[test]
    fn hamiltonian_limits_are_unitary(seed in any::<u64>(), with_r in any::<bool>(), pure in any::<bool>()) {
        let fx = if pure { Fixture::pure() } else { Fixture::mixed() };
        let spec = HamiltonianSpec::random(&mut seeded(seed), 2, &fx.g, &fx.c, with_r).unwrap();
        let (f, _) = f_from_hamiltonian(&spec, &fx.g, &fx.c).unwrap();
        let gm = limit_image(&f, &fx.g, &fx.c).unwrap();
        let report = hp_check(&gm, &fx.g, Some((&f, &fx.c))).unwrap();
        prop_assert!(report.passed());
        let eh = eh_generator(&f, 2, &fx.g, &fx.c).unwrap();
        prop_assert!(eh.psi.apply(&qrwt_core::linalg::identity(2)).unwrap().norm() < 1e-11);
    }

    #[test]
    fn cocycle_and_hp_solutions_agree(seed in any::<u64>(), t in 0.0f64..1.5) {
        let fx = Fixture::mixed();
        let mut rng = seeded(seed);
        let f = random_matrix(&mut rng, 6, 6) * real(0.5);
        let lg = limit_generator_multiplicative(&f, 2, &fx.g, &fx.c).unwrap();
        let ff = mu_step(seed ^ 3, &fx.g, vec![0.0, 0.4, 1.1]);
        let gg = mu_step(seed ^ 4, &fx.g, vec![0.0, 0.7, 0.9]);
        let a = random_matrix(&mut rng, 2, 2);
        let u = random_vector(&mut rng, 2);
        let v = random_vector(&mut rng, 2);
        let me = cocycle_matrix_element(&lg, &fx.g, &a, &u, &v, &ff, &gg, t).unwrap();
        let xt = hp_solve(lg.g_matrix().unwrap(), &fx.g, &ff, &gg, t).unwrap();
        let other = u.dotc(&(&a * xt * &v));
        prop_assert!((me - other).norm() < 1e-10 * other.norm().max(1.0));
    }
}

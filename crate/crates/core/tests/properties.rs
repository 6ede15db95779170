use nisd::blaschke::{model_space, mult_operator, wold_decompose, BlaschkeProduct};
use nisd::dirichlet::norm_alpha;
use nisd::hardy::{shift_matrix, shift_power_matrix, toeplitz_matrix, CoeffFn, HardySpec, LaurentSymbol};
use nisd::nearinv::{
    build_unitary_u, check_nearly_invariant, detect, rqs_operators, transfer_decompose, ShiftModel, Tolerances,
};
use nisd::numerics::{
    complement, intersect, orthonormalize, pinv_apply, singular_values, CMatrix, CVector, RankTolerance, SubspaceBasis,
};
use nisd::planted::{plant_with_transfer, random_unitary, MonomialPlan};
use nisd::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn random_matrix(rng: &mut ChaCha8Rng, r: usize, k: usize) -> CMatrix {
    CMatrix::from_fn(r, k, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

fn random_blaschke(rng: &mut ChaCha8Rng, degree: usize, rho: f64) -> BlaschkeProduct {
    let zeros = (0..degree)
        .map(|_| Complex64::from_polar(rho * rng.random::<f64>().sqrt(), rng.random_range(0.0..std::f64::consts::TAU)))
        .collect();
    BlaschkeProduct::new(Complex64::from_polar(1.0, rng.random_range(0.0..6.28)), zeros).unwrap()
}

fn random_poly(rng: &mut ChaCha8Rng, degree: usize) -> CoeffFn {
    let coeffs: Vec<Complex64> = (0..=degree).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    CoeffFn::scalar(&coeffs)
}

fn norm2(a: &CMatrix) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

fn tol() -> RankTolerance {
    RankTolerance::default()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn orthonormalize_keeps_the_column_space(seed in any::<u64>(), n in 4usize..30, k in 1usize..6, rank in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rank = rank.min(k).min(n);
        let a = random_matrix(&mut rng, n, rank) * random_matrix(&mut rng, rank, k);
        let (q, r) = orthonormalize(&a, tol()).unwrap();
        prop_assert_eq!(r, rank);
        prop_assert!((q.adjoint() * &q - CMatrix::identity(r, r)).norm() <= 1e-12);
        let back = &a - &q * (q.adjoint() * &a);
        prop_assert!(norm2(&back) <= 1e-10 * norm2(&a));
    }

    #[test]
    fn intersection_and_complement_projectors(seed in any::<u64>(), common in 0usize..3, extra in 1usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 16;
        let shared = random_matrix(&mut rng, n, common);
        let mut a = CMatrix::zeros(n, common + extra);
        a.columns_mut(0, common).copy_from(&shared);
        a.columns_mut(common, extra).copy_from(&random_matrix(&mut rng, n, extra));
        let mut b = CMatrix::zeros(n, common + extra);
        b.columns_mut(0, common).copy_from(&shared);
        b.columns_mut(common, extra).copy_from(&random_matrix(&mut rng, n, extra));
        let sa = SubspaceBasis::span(&a, tol()).unwrap();
        let sb = SubspaceBasis::span(&b, tol()).unwrap();
        let cap = intersect(&sa, &sb, tol()).unwrap();
        prop_assert_eq!(cap.dim(), common);
        let pc = cap.projector();
        prop_assert!(norm2(&(&pc - sa.projector() * &pc)) <= 1e-10);
        prop_assert!(norm2(&(&pc - sb.projector() * &pc)) <= 1e-10);
        let rest = complement(&sa, &cap, tol()).unwrap();
        prop_assert!(norm2(&(sa.projector() - pc - rest.projector())) <= 1e-10);
    }

    #[test]
    fn pinv_inverts_injective_maps(seed in any::<u64>(), n in 3usize..20, extra in 0usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_matrix(&mut rng, n + extra, n) + CMatrix::identity(n + extra, n) * c(3.0, 0.0);
        let x = random_matrix(&mut rng, n, 1).column(0).into_owned();
        let back = pinv_apply(&t, &(&t * &x), tol()).unwrap();
        prop_assert!((back - &x).norm() <= 1e-10 * x.norm());
    }

    #[test]
    fn shift_is_an_isometry(m in 1usize..4, degree in 0usize..20) {
        let spec = HardySpec::new(m, degree).unwrap();
        let s = shift_matrix(spec).matrix;
        let big = spec.dim() + m;
        prop_assert!((s.adjoint() * &s - CMatrix::identity(spec.dim(), spec.dim())).norm() <= 1e-14);
        let mut proj = CMatrix::identity(big, big);
        for j in 0..m {
            proj[(j, j)] = c(0.0, 0.0);
        }
        prop_assert!((&s * s.adjoint() - proj).norm() <= 1e-14);
    }

    #[test]
    fn analytic_toeplitz_commutes_with_shift(seed in any::<u64>(), m in 1usize..3, degree in 1usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let blocks: Vec<CMatrix> = (0..3).map(|_| random_matrix(&mut rng, m, m)).collect();
        let sym = LaurentSymbol::new(m, m, 0, blocks).unwrap();
        let spec = HardySpec::new(m, degree).unwrap();
        let up = |s: HardySpec, k: usize| s.with_degree(s.degree + k);
        let lhs = toeplitz_matrix(&sym, up(spec, 1), up(spec, 3)).unwrap().matrix * shift_matrix(spec).matrix;
        let rhs = shift_matrix(up(spec, 2)).matrix * toeplitz_matrix(&sym, spec, up(spec, 2)).unwrap().matrix;
        prop_assert!((lhs - rhs).norm() <= 1e-12);
    }

    #[test]
    fn blaschke_properties(seed in any::<u64>(), degree in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = random_blaschke(&mut rng, degree, 0.6);
        for l in 0..64 {
            let z = Complex64::from_polar(1.0, std::f64::consts::TAU * l as f64 / 64.0);
            prop_assert!((b.eval(z).norm() - 1.0).abs() <= 1e-12);
        }
        let f = random_poly(&mut rng, 20);
        let op = mult_operator(&b, f.spec());
        let bf = op.apply(&f).unwrap();
        prop_assert!((bf.norm() - f.norm()).abs() <= op.truncation_bound * f.norm() + 1e-12);

        // K_B ⊕ B·H²_N fills every degree up to N − deg B
        let n = 40;
        let range = mult_operator(&b, HardySpec::scalar(n));
        let big = range.codomain;
        let k = SubspaceBasis::span(&model_space(&b, big).unwrap().matrix(), tol()).unwrap();
        let r = SubspaceBasis::span(&range.matrix, tol()).unwrap();
        let sum = k.projector() + r.projector();
        for j in 0..=(n - degree) {
            let mut e = CVector::zeros(big.dim());
            e[j] = c(1.0, 0.0);
            prop_assert!((&sum * &e - &e).norm() <= 1e-9, "degree {}", j);
        }
    }

    #[test]
    fn wold_residual_decreases(seed in any::<u64>(), degree in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = random_blaschke(&mut rng, degree, 0.7);
        let f = random_poly(&mut rng, 24);
        let mut last = f64::INFINITY;
        for depth in 0..12 {
            let res = wold_decompose(&f, &b, depth).unwrap().residual;
            prop_assert!(res <= last * (1.0 + 1e-12) + 1e-14);
            last = res;
        }
    }

    #[test]
    fn dirichlet_norms_increase_with_alpha(seed in any::<u64>(), a in -1.0f64..1.0, gap in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_poly(&mut rng, 30);
        let b = (a + gap).min(1.0);
        prop_assert!(norm_alpha(&f, a).unwrap() <= norm_alpha(&f, b).unwrap() * (1.0 + 1e-14));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn planted_detection_is_minimal(seed in any::<u64>(), which in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = Tolerances::default();
        let b = BlaschkeProduct::from_zeros(vec![c(0.2, 0.1), c(-0.3, 0.0)]).unwrap();
        let shift = match which {
            0 => ShiftModel::shift(HardySpec::scalar(40), t).unwrap(),
            1 => ShiftModel::monomial(HardySpec::scalar(59), 2, t).unwrap(),
            _ => ShiftModel::blaschke(&b, HardySpec::scalar(100), t).unwrap(),
        };
        let u = build_unitary_u(&shift, None).unwrap();
        let mult = shift.multiplicity();
        let mut plan = MonomialPlan::random(&mut rng, mult, 8, 0.4);
        if mult > 1 {
            plan = plan.with_mix(random_unitary(&mut rng, mult)).unwrap();
        }
        let planted = plant_with_transfer(&plan, &u, tol()).unwrap();
        let report = detect(&planted.m, &shift).unwrap();
        prop_assert_eq!((report.r, report.p), (planted.r, planted.p));
        if !report.contained_in_th {
            prop_assert!(report.r >= 1 && report.r <= mult);
        }
        // dropping any defect direction breaks near invariance
        for drop in 0..report.p {
            let keep: Vec<usize> = (0..report.p).filter(|&j| j != drop).collect();
            let smaller = SubspaceBasis::from_orthonormal(report.f1.basis().select_columns(&keep), tol());
            prop_assert!(!check_nearly_invariant(&planted.m, &smaller, &shift).unwrap().0);
        }
        let ops = rqs_operators(&planted.m, &report.f1, &shift).unwrap();
        prop_assert!(ops.r_norm <= 1.0 + 1e-12);
        let dec = transfer_decompose(&planted.m, &report.f1, &shift, None).unwrap();
        prop_assert!(dec.max_round_trip() <= 1e-9);
    }
}

use super::*;
use crate::linalg::{trace_distance, ComplexMatrix, C64};
use crate::povm::{BlochDirection, MeasurementRecord as Rec};
use crate::simulate::{simulate, SettingPolicy, SimulationSpec};
use crate::states::StateSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{PI, TAU};

fn qubit_counts(up: usize, down: usize) -> Vec<Rec> {
    let mut v = vec![Rec::Spin { omega: BlochDirection::PLUS_Z }; up];
    v.extend(std::iter::repeat_n(Rec::Spin { omega: BlochDirection::MINUS_Z }, down));
    v
}

fn random_params(dim: usize, rng: &mut impl Rng) -> ParamVector {
    ParamVector::new(dim, (0..dim * dim).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

fn homodyne_records(n: usize, seed: u64) -> (Vec<Rec>, SchemeConfig) {
    let cfg = SchemeConfig::homodyne1(0.8, 4).unwrap();
    let spec = SimulationSpec {
        state: StateSpec::Coherent { alpha_re: 0.6, alpha_im: -0.3 },
        scheme: cfg,
        n,
        seed,
        settings: SettingPolicy::Random,
    };
    (simulate(&spec, Exec::default()).unwrap().records, cfg)
}

fn spinpair_records(n: usize, seed: u64) -> (Vec<Rec>, SchemeConfig) {
    let cfg = SchemeConfig::spin_pair();
    let spec = SimulationSpec {
        state: StateSpec::Singlet,
        scheme: cfg,
        n,
        seed,
        settings: SettingPolicy::Random,
    };
    (simulate(&spec, Exec::default()).unwrap().records, cfg)
}

fn central_fd(lik: &Likelihood, t: &ParamVector, h: f64) -> Vec<f64> {
    let dim = t.dim();
    (0..dim * dim)
        .map(|i| {
            let mut p = t.as_slice().to_vec();
            let mut m = p.clone();
            p[i] += h;
            m[i] -= h;
            let fp = lik.value(&ParamVector::new(dim, p).unwrap()).unwrap();
            let fm = lik.value(&ParamVector::new(dim, m).unwrap()).unwrap();
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[test]
fn hand_evaluated_single_record() {
    let recs = qubit_counts(1, 0);
    let t = ParamVector::new(2, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
    let v = log_likelihood(&t, &recs, &SchemeConfig::spin()).unwrap();
    assert!((v + 1.0).abs() < 1e-15);
}

#[test]
fn maximally_mixed_value() {
    let (recs, cfg) = homodyne_records(40, 3);
    let lik = Likelihood::new(&recs, &cfg, Exec::Sequential).unwrap();
    let dim = cfg.dim();
    let expect: f64 = lik
        .forms()
        .iter()
        .map(|f| (f.matrix().trace().re / dim as f64).ln())
        .sum::<f64>()
        - recs.len() as f64;
    let got = lik.value(&ParamVector::maximally_mixed(dim)).unwrap();
    assert!((got - expect).abs() < 1e-10 * expect.abs(), "{got} vs {expect}");
}

#[test]
fn scale_optimum_is_unit_trace() {
    let (recs, cfg) = homodyne_records(30, 4);
    let lik = Likelihood::new(&recs, &cfg, Exec::Sequential).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let t = random_params(cfg.dim(), &mut rng);
    let c_star = 1.0 / t.gram_trace().sqrt();
    let at = |c: f64| {
        let p = ParamVector::new(t.dim(), t.as_slice().iter().map(|x| x * c).collect()).unwrap();
        lik.value(&p).unwrap()
    };
    let best = at(c_star);
    for f in [0.9, 0.99, 1.01, 1.1] {
        assert!(at(c_star * f) < best);
    }
}

#[test]
fn degenerate_and_empty_inputs() {
    let cfg = SchemeConfig::spin();
    assert!(matches!(
        log_likelihood(&ParamVector::new(2, vec![0.0; 4]).unwrap(), &qubit_counts(1, 0), &cfg),
        Err(Error::DegenerateFactor)
    ));
    assert!(matches!(Likelihood::new(&[], &cfg, Exec::Sequential), Err(Error::EmptyRecords)));
    let wrong = vec![Rec::Homodyne1 { x: 0.0, phi: 0.0 }];
    assert!(Likelihood::new(&wrong, &cfg, Exec::Sequential).is_err());
}

#[test]
fn floored_probability_is_finite() {
    // T = diag(1, 0) with a |1⟩ record: p = 0 exactly
    let t = ParamVector::new(2, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let forms = vec![
        crate::povm::PositiveForm::rank_one(vec![one, zero]),
        crate::povm::PositiveForm::rank_one(vec![zero, one]),
    ];
    let lik = Likelihood::from_forms(2, forms, Exec::Sequential);
    let (v, g) = lik.value_and_gradient(&t).unwrap();
    assert!((v - (PROB_FLOOR.ln() - 2.0)).abs() < 1e-9);
    // only the |0⟩ record and the Lagrange term contribute
    assert!((g[0] - (2.0 - 4.0)).abs() < 1e-12);
    assert!(g.iter().all(|x| x.is_finite()));
}

#[test]
fn lagrange_gradient_is_minus_two_n_t() {
    let (recs, cfg) = homodyne_records(25, 5);
    let lik = Likelihood::new(&recs, &cfg, Exec::Sequential).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let t = random_params(cfg.dim(), &mut rng);
    let g = lik.gradient(&t).unwrap();
    let h = 1e-5;
    let n = recs.len() as f64;
    for i in 0..g.len() {
        let mut p = t.as_slice().to_vec();
        let mut m = p.clone();
        p[i] += h;
        m[i] -= h;
        let data = (lik.log_sum(&ParamVector::new(t.dim(), p).unwrap()).unwrap()
            - lik.log_sum(&ParamVector::new(t.dim(), m).unwrap()).unwrap())
            / (2.0 * h);
        let lagrange = g[i] - data;
        assert!((lagrange + 2.0 * n * t.as_slice()[i]).abs() < 1e-5 * n, "{i}");
    }
}

#[test]
fn gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let sets = [
        homodyne_records(20, 6),
        spinpair_records(20, 7),
        (
            (0..20)
                .map(|_| Rec::Spin {
                    omega: BlochDirection::new(rng.random_range(0.0..PI), rng.random_range(0.0..TAU)).unwrap(),
                })
                .collect(),
            SchemeConfig::spin(),
        ),
    ];
    for (recs, cfg) in &sets {
        let lik = Likelihood::new(recs, cfg, Exec::Sequential).unwrap();
        for _ in 0..50 {
            let t = random_params(cfg.dim(), &mut rng);
            let g = lik.gradient(&t).unwrap();
            let fd = central_fd(&lik, &t, 1e-5);
            let err: Vec<f64> = g.iter().zip(&fd).map(|(a, b)| a - b).collect();
            assert!(norm(&err) <= 1e-5 * norm(&g), "{:?}: {} vs {}", cfg.scheme, norm(&err), norm(&g));
        }
    }
}

#[test]
fn value_and_gradient_agree_with_value() {
    let (recs, cfg) = homodyne_records(600, 8);
    let lik = Likelihood::new(&recs, &cfg, Exec::Parallel).unwrap();
    let t = random_params(cfg.dim(), &mut ChaCha8Rng::seed_from_u64(1));
    let (v, _) = lik.value_and_gradient(&t).unwrap();
    assert!((v - lik.value(&t).unwrap()).abs() < 1e-9 * v.abs());
    let seq = lik.clone().with_exec(Exec::Sequential);
    assert_eq!(seq.value(&t).unwrap().to_bits(), lik.value(&t).unwrap().to_bits());
    assert_eq!(seq.gradient(&t).unwrap(), lik.gradient(&t).unwrap());
}

#[test]
fn stationary_at_multinomial_optimum() {
    let lik = Likelihood::new(&qubit_counts(75, 25), &SchemeConfig::spin(), Exec::Sequential).unwrap();
    let t = ParamVector::new(2, vec![0.75f64.sqrt(), 0.5, 0.0, 0.0]).unwrap();
    assert!(norm(&lik.gradient(&t).unwrap()) < 1e-6);
}

#[test]
fn multinomial_qubit_estimate() {
    let cfg = SchemeConfig::spin();
    let recs = qubit_counts(75, 25);
    let optimum = 75.0 * 0.75f64.ln() + 25.0 * 0.25f64.ln() - 100.0;
    let grad = OptimizerConfig { kind: OptimizerKind::Gradient, ..Default::default() };
    let res = mle_estimate(&recs, &cfg, &grad).unwrap();
    assert!(res.converged);
    let rho = res.density.matrix();
    let expect = [[0.75, 0.0], [0.0, 0.25]];
    for (r, row) in expect.iter().enumerate() {
        for (c, e) in row.iter().enumerate() {
            assert!((rho[(r, c)] - C64::new(*e, 0.0)).norm() < 1e-4, "{rho:?}");
        }
    }
    assert!((res.loglik - optimum).abs() < 1e-8);

    // z-only data leave ρ₀₁ free, so the simplex may stop anywhere on that
    // ridge; the populations and the likelihood are still pinned
    let res = mle_estimate(&recs, &cfg, &OptimizerConfig::default()).unwrap();
    assert!(res.converged);
    let rho = res.density.matrix();
    assert!((rho[(0, 0)].re - 0.75).abs() < 1e-4 && (rho[(1, 1)].re - 0.25).abs() < 1e-4, "{rho:?}");
    assert!((res.loglik - optimum).abs() < 1e-5 * optimum.abs());
    assert!((0.999..=1.001).contains(&res.raw_trace), "{}", res.raw_trace);
}

#[test]
fn all_zero_outcomes_give_the_pure_state() {
    for kind in [OptimizerKind::Simplex, OptimizerKind::Gradient] {
        let opt = OptimizerConfig { kind, ..Default::default() };
        let res = mle_estimate(&qubit_counts(50, 0), &SchemeConfig::spin(), &opt).unwrap();
        let target = DensityMatrix::from_pure(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]).unwrap();
        let d = trace_distance(&res.density, &target).unwrap();
        assert!(d < 1e-4, "{kind:?}: {d}");
    }
}

#[test]
fn best_value_never_decreases() {
    let (recs, cfg) = homodyne_records(300, 9);
    for kind in [OptimizerKind::Simplex, OptimizerKind::Gradient] {
        let opt = OptimizerConfig { kind, ..Default::default() };
        let res = mle_estimate(&recs, &cfg, &opt).unwrap();
        assert!(res.converged, "{kind:?}");
        assert!(res.history.windows(2).all(|w| w[1] >= w[0]), "{kind:?}");
        assert!((0.999..=1.001).contains(&res.raw_trace), "{kind:?}: {}", res.raw_trace);
        let min = res.density.eigenvalues()[0];
        assert!(min >= -1e-10);
    }
}

#[test]
fn optimizers_agree() {
    let (recs, cfg) = spinpair_records(200, 10);
    let a = mle_estimate(&recs, &cfg, &OptimizerConfig::default()).unwrap();
    let b = mle_estimate(&recs, &cfg, &OptimizerConfig { kind: OptimizerKind::Gradient, ..Default::default() }).unwrap();
    let d = trace_distance(&a.density, &b.density).unwrap();
    assert!(d < 1e-3, "{d}");
    assert!((a.loglik - b.loglik).abs() < 1e-4 * a.loglik.abs());
}

#[test]
fn iteration_cap_flags_non_convergence() {
    let opt = OptimizerConfig { max_iter: Some(1), ..Default::default() };
    let res = mle_estimate(&qubit_counts(75, 25), &SchemeConfig::spin(), &opt).unwrap();
    assert!(!res.converged);
    assert!(res.loglik.is_finite());
    assert!(OptimizerConfig { max_iter: Some(0), ..Default::default() }.validate().is_err());
    assert!(OptimizerConfig { ftol: 0.0, ..Default::default() }.validate().is_err());
}

#[test]
fn concave_in_rho() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let (recs, cfg) = homodyne_records(30, 14);
    let lik = Likelihood::new(&recs, &cfg, Exec::Sequential).unwrap();
    let mats: Vec<ComplexMatrix> = lik.forms().iter().map(|f| f.matrix()).collect();
    let ln_sum = |rho: &DensityMatrix| -> f64 {
        mats.iter().map(|f| rho.expectation(f).unwrap().re.max(PROB_FLOOR).ln()).sum()
    };
    for _ in 0..100 {
        let r1 = factor_to_density(&params_to_factor(&random_params(cfg.dim(), &mut rng))).unwrap();
        let r2 = factor_to_density(&params_to_factor(&random_params(cfg.dim(), &mut rng))).unwrap();
        let mid = r1.mix(&r2, 0.5).unwrap();
        assert!(ln_sum(&mid) >= 0.5 * (ln_sum(&r1) + ln_sum(&r2)) - 1e-10);
    }
}

/// Spin records drawn directly from a mixed qubit state.
fn mixed_qubit_records(rho: &DensityMatrix, n: usize, seed: u64) -> Vec<Rec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let z: f64 = rng.random_range(-1.0..1.0);
            let om = BlochDirection::new(z.acos(), rng.random_range(0.0..TAU)).unwrap();
            let proj = crate::povm::PositiveForm::rank_one(crate::povm::spin_coherent(om).to_vec()).matrix();
            let p = rho.expectation(&proj).unwrap().re;
            let omega = if rng.random::<f64>() < p { om } else { om.antipode() };
            Rec::Spin { omega }
        })
        .collect()
}

#[test]
fn trace_distance_shrinks_as_inverse_root_n() {
    let psi = [C64::new(0.4f64.cos(), 0.0), C64::from_polar(0.4f64.sin(), 0.3)];
    let truth = DensityMatrix::from_pure(&psi)
        .unwrap()
        .mix(&DensityMatrix::maximally_mixed(2), 0.7)
        .unwrap();
    let sizes = [1_000usize, 10_000, 100_000];
    let seeds = 6;
    let mut pts = Vec::new();
    for &n in &sizes {
        let mean: f64 = (0..seeds)
            .map(|s| {
                let recs = mixed_qubit_records(&truth, n, 100 + s);
                let res = mle_estimate(&recs, &SchemeConfig::spin(), &OptimizerConfig::default()).unwrap();
                trace_distance(&res.density, &truth).unwrap()
            })
            .sum::<f64>()
            / seeds as f64;
        pts.push(((n as f64).ln(), mean.ln()));
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / 3.0;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / 3.0;
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!((slope + 0.5).abs() <= 0.15, "slope {slope}");
}

use gridcast::offline::{
    fit_linear_svr, fit_mlp, fit_ols, svr_objective, Activation, Algorithm, AlgorithmKind, FitError, Hyperparams,
    LinearModel, MlpParams, ModelDocument, Network, SvrParams, TreeParams, MODEL_FORMAT_VERSION,
};
use gridcast::rng::seeded;
use gridcast::Matrix;
use rand::Rng;

fn problem(n: usize, p: usize, noise: f64, seed: u64) -> (Matrix, Vec<f64>) {
    let mut rng = seeded(seed);
    let x = Matrix::new(n, p, (0..n * p).map(|_| rng.random_range(-1.0..1.0)).collect());
    let y = x
        .rows()
        .map(|r| 0.5 + 1.5 * r[0] - if p > 1 { 0.8 * r[1] } else { 0.0 } + noise * rng.random_range(-1.0..1.0))
        .collect();
    (x, y)
}

#[test]
fn svr_on_exact_line_stays_in_tube() {
    let (x, y) = problem(30, 1, 0.0, 1);
    let p = SvrParams { c: 10.0, epsilon: 0.1, epochs: 2000, learning_rate: 0.05, patience: 2000 };
    let m = fit_linear_svr(&x, &y, &p, 3).unwrap();
    let worst = x.rows().zip(&y).map(|(r, v)| (m.linear.predict_row(r) - v).abs()).fold(0.0, f64::max);
    assert!(worst <= 0.1 + 1e-3, "max residual {worst}");
    let flat = 0.5 * m.linear.coef[0].powi(2);
    // the hinge part of the objective is (numerically) gone
    assert!(m.objective - flat < 1e-2, "{}", m.objective - flat);
}

#[test]
fn svr_tiny_c_flattens() {
    let (x, y) = problem(40, 2, 0.1, 2);
    let p = SvrParams { c: 1e-6, ..SvrParams::default() };
    let m = fit_linear_svr(&x, &y, &p, 0).unwrap();
    assert!(m.linear.coef.iter().all(|w| w.abs() < 1e-3), "{:?}", m.linear.coef);
}

#[test]
fn svr_beats_ols_and_random_probes() {
    let (x, y) = problem(20, 2, 0.4, 3);
    let (c, eps) = (1.0, 0.1);
    let p = SvrParams { c, epsilon: eps, epochs: 3000, learning_rate: 0.05, patience: 3000 };
    let m = fit_linear_svr(&x, &y, &p, 4).unwrap();
    assert!((svr_objective(&x, &y, &m.linear, c, eps) - m.objective).abs() < 1e-12);
    let ols = fit_ols(&x, &y).unwrap();
    assert!(m.objective <= svr_objective(&x, &y, &ols, c, eps), "{} vs ols", m.objective);
    assert!(m.objective <= svr_objective(&x, &y, &LinearModel::zeros(2), c, eps));
    let mut rng = seeded(5);
    for _ in 0..1000 {
        let probe = LinearModel {
            intercept: rng.random_range(-2.0..2.0),
            coef: vec![rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)],
        };
        assert!(m.objective <= svr_objective(&x, &y, &probe, c, eps));
    }
}

#[test]
fn svr_stall_flag_and_bad_params() {
    let (x, y) = problem(20, 1, 0.0, 6);
    let p = SvrParams { epochs: 500, patience: 3, ..SvrParams::default() };
    let model = Algorithm::Svr(p).fit(&x, &y, 0).unwrap();
    assert!(!model.diagnostics.warnings.is_empty());
    let bad = SvrParams { c: 0.0, ..SvrParams::default() };
    assert!(fit_linear_svr(&x, &y, &bad, 0).is_err());
    let rbf = Hyperparams::new().with("kernel", "rbf");
    assert!(matches!(Algorithm::from_params(AlgorithmKind::Svr, &rbf), Err(FitError::UnsupportedKernel(_))));
}

/// Central differences of the objective with step 1e-5.
fn numeric_gradient(net: &Network, x: &Matrix, y: &[f64], l2: f64) -> Vec<f64> {
    let rows: Vec<usize> = (0..x.nrows()).collect();
    let h = 1e-5;
    (0..net.params.len())
        .map(|k| {
            let mut plus = net.clone();
            plus.params[k] += h;
            let mut minus = net.clone();
            minus.params[k] -= h;
            (plus.objective(x, y, &rows, l2) - minus.objective(x, y, &rows, l2)) / (2.0 * h)
        })
        .collect()
}

#[test]
fn mlp_gradient_matches_finite_differences() {
    let (x, y) = problem(5, 3, 0.2, 7);
    let rows: Vec<usize> = (0..5).collect();
    for act in [Activation::Tanh, Activation::Relu] {
        for hidden in [vec![4], vec![3, 2]] {
            let net = Network::init(3, &hidden, act, &mut seeded(11));
            let l2 = 0.05;
            let analytic = net.gradient(&x, &y, &rows, l2);
            let numeric = numeric_gradient(&net, &x, &y, l2);
            for (a, n) in analytic.iter().zip(&numeric) {
                let rel = (a - n).abs() / a.abs().max(n.abs()).max(1e-6);
                assert!(rel < 1e-4, "{act:?} {hidden:?}: {a} vs {n}");
            }
        }
    }
}

#[test]
fn mlp_zero_epochs_is_the_initial_network() {
    let (x, y) = problem(10, 2, 0.1, 8);
    let p = MlpParams { epochs: 0, hidden_sizes: vec![5], ..MlpParams::default() };
    let (net, losses) = fit_mlp(&x, &y, &p, 21).unwrap();
    assert!(losses.is_empty());
    let init = Network::init(2, &[5], p.activation, &mut seeded(21));
    for r in x.rows() {
        assert_eq!(net.predict_row(r), init.predict_row(r));
    }
}

#[test]
fn single_tanh_unit_approaches_ols_on_linear_target() {
    let mut rng = seeded(9);
    let xs: Vec<f64> = (0..60).map(|_| rng.random_range(-1.0..1.0)).collect();
    let y: Vec<f64> = xs.iter().map(|v| 0.3 * v + 0.1 + 0.05 * rng.random_range(-1.0..1.0)).collect();
    let x = Matrix::new(60, 1, xs);
    let ols = fit_ols(&x, &y).unwrap();
    let ols_mse = ols.residual_sum_sq(&x, &y) / 60.0;
    let p = MlpParams {
        hidden_sizes: vec![1],
        activation: Activation::Tanh,
        l2_alpha: 0.0,
        learning_rate: 0.01,
        epochs: 800,
        batch_size: 10,
    };
    let (net, losses) = fit_mlp(&x, &y, &p, 1).unwrap();
    let mse = x.rows().zip(&y).map(|(r, v)| (net.predict_row(r) - v).powi(2)).sum::<f64>() / 60.0;
    assert!(mse <= ols_mse * 1.05, "mlp {mse} vs ols {ols_mse}");
    assert!(losses.last().unwrap() <= &losses[0]);
}

#[test]
fn mlp_rejects_bad_config() {
    let (x, y) = problem(10, 2, 0.1, 10);
    let p = MlpParams { hidden_sizes: vec![], ..MlpParams::default() };
    assert!(fit_mlp(&x, &y, &p, 0).is_err());
    let p = MlpParams { learning_rate: 1e6, epochs: 50, hidden_sizes: vec![8], ..MlpParams::default() };
    let big: Vec<f64> = y.iter().map(|v| v * 1e200).collect();
    assert!(matches!(fit_mlp(&x, &big, &p, 0), Err(FitError::DivergedLoss { .. })));
}

fn every_algorithm() -> Vec<Algorithm> {
    vec![
        Algorithm::Ols,
        Algorithm::Ridge { lambda: 0.5 },
        Algorithm::Lasso { lambda: 0.1 },
        Algorithm::ElasticNet { lambda: 0.01, alpha: 0.5 },
        Algorithm::Knn { k: 3 },
        Algorithm::Tree(TreeParams::default()),
        Algorithm::RandomForest { n_estimators: 4, tree: TreeParams::default() },
        Algorithm::ExtraTrees { n_estimators: 4, tree: TreeParams::default() },
        Algorithm::AdaBoost { n_estimators: 4, base: TreeParams::shallow(3) },
        Algorithm::GradientBoosting { n_estimators: 4, learning_rate: 0.8, base: TreeParams::shallow(3) },
        Algorithm::Svr(SvrParams { epochs: 20, ..SvrParams::default() }),
        Algorithm::Mlp(MlpParams { epochs: 5, hidden_sizes: vec![6], ..MlpParams::default() }),
    ]
}

#[test]
fn every_model_round_trips_bit_exactly() {
    let (x, y) = problem(40, 3, 0.3, 12);
    let (q, _) = problem(15, 3, 0.3, 13);
    for alg in every_algorithm() {
        let model = alg.fit(&x, &y, 5).unwrap();
        let doc = ModelDocument::new(model, vec!["a".into(), "b".into(), "c".into()], None, None);
        let back = ModelDocument::from_json(&doc.to_json()).unwrap();
        assert_eq!(back, doc, "{}", alg.kind());
        let before = doc.model.predict(&q).unwrap();
        let after = back.model.predict(&q).unwrap();
        assert!(before.iter().zip(&after).all(|(a, b)| a.to_bits() == b.to_bits()), "{}", alg.kind());
        assert_eq!(back.format_version, MODEL_FORMAT_VERSION);
    }
}

#[test]
fn unknown_format_version_is_rejected() {
    let (x, y) = problem(10, 1, 0.1, 14);
    let doc = ModelDocument::new(Algorithm::Ols.fit(&x, &y, 0).unwrap(), vec!["a".into()], None, None);
    let text = doc.to_json().replace("\"format_version\": 1", "\"format_version\": 99");
    assert!(ModelDocument::from_json(&text).is_err());
}

#[test]
fn seeded_fits_are_deterministic() {
    let (x, y) = problem(40, 3, 0.3, 15);
    for alg in every_algorithm() {
        assert_eq!(alg.fit(&x, &y, 9).unwrap(), alg.fit(&x, &y, 9).unwrap(), "{}", alg.kind());
    }
}

use gridcast::residuals::{
    fit_all, fit_distribution, freedman_diaconis_bins, score_sse, select_best, BinRule, Family, Histogram,
    ResidualDistribution, ResidualError,
};
use gridcast::rng::seeded;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Generating parameters on the MWh scale, one per family.
fn reference() -> Vec<ResidualDistribution> {
    [
        (Family::Normal, vec![0.0, 1500.0]),
        (Family::Laplace, vec![100.0, 1200.0]),
        (Family::Logistic, vec![-50.0, 800.0]),
        (Family::StudentT, vec![0.0, 1000.0, 5.0]),
        (Family::Cauchy, vec![0.0, 500.0]),
        (Family::Gumbel, vec![-300.0, 900.0]),
        (Family::Uniform, vec![-3000.0, 7000.0]),
        (Family::GammaShifted, vec![3.0, 800.0, -2400.0]),
        (Family::SkewNormal, vec![-800.0, 1500.0, 3.0]),
        (Family::JohnsonSb, vec![0.5, 1.2, -5000.0, 10000.0]),
        (Family::JohnsonSu, vec![0.3, 1.5, 100.0, 1200.0]),
    ]
    .into_iter()
    .map(|(f, p)| ResidualDistribution::new(f, p).unwrap())
    .collect()
}

/// Indices of location-type parameters and the scale they are judged by.
fn location_scale(d: &ResidualDistribution) -> (Vec<usize>, f64) {
    let p = &d.params;
    match d.family {
        Family::Uniform => (vec![0, 1], p[1] - p[0]),
        Family::GammaShifted => (vec![2], p[0].sqrt() * p[1]),
        Family::JohnsonSb | Family::JohnsonSu => (vec![2], p[3]),
        _ => (vec![0], p[1]),
    }
}

#[test]
fn normal_fit_from_ten_thousand_draws() {
    let truth = ResidualDistribution::normal(0.0, 1500.0).unwrap();
    let x = truth.sample(1500, 10_000);
    let fit = fit_distribution(&x, Family::Normal).unwrap();
    assert!(fit.params[0].abs() < 30.0 && (fit.params[1] - 1500.0).abs() < 30.0, "{:?}", fit.params);
    assert!(fit.converged);
    assert_eq!(fit.n_samples, 10_000);
}

#[test]
fn uniform_fit_hits_sample_extremes() {
    let mut rng = seeded(3);
    let mut x: Vec<f64> = (0..200).map(|_| rng.random_range(-3.0..7.0)).collect();
    x.push(-3.0);
    x.push(7.0);
    let fit = fit_distribution(&x, Family::Uniform).unwrap();
    assert_eq!(fit.params, vec![-3.0, 7.0]);
    assert_eq!(fit.support(), (-3.0, 7.0));
}

#[test]
fn sample_checks() {
    assert!(matches!(fit_distribution(&[4.0; 100], Family::Normal), Err(ResidualError::DegenerateSample)));
    assert!(matches!(fit_distribution(&[1.0, 2.0], Family::Normal), Err(ResidualError::TooFewSamples(2))));
    let mut x: Vec<f64> = (0..60).map(f64::from).collect();
    x[3] = f64::NAN;
    assert!(matches!(fit_distribution(&x, Family::Normal), Err(ResidualError::NonFinite)));
    assert!(matches!("weibull".parse::<Family>(), Err(ResidualError::UnsupportedFamily(_))));
    assert_eq!("johnson_sb".parse::<Family>().unwrap(), Family::JohnsonSb);
    assert!(ResidualDistribution::new(Family::Normal, vec![0.0, -1.0]).is_err());
    assert!(ResidualDistribution::new(Family::Uniform, vec![1.0, 1.0]).is_err());
    assert!(select_best(&(0..60).map(f64::from).collect::<Vec<_>>(), &[]).is_err());
}

#[test]
fn refits_recover_parameters() {
    for truth in reference() {
        let x = truth.sample(7, 100_000);
        let fit = fit_distribution(&x, truth.family).unwrap();
        assert!(fit.converged, "{}", truth.family);
        if truth.family == Family::Cauchy {
            // no moments: compare quartiles
            for u in [0.25, 0.5, 0.75] {
                let (a, b) = (fit.quantile(u).unwrap(), truth.quantile(u).unwrap());
                assert!((a - b).abs() <= 0.05 * truth.params[1], "cauchy q{u}: {a} vs {b}");
            }
            continue;
        }
        let (loc, scale) = location_scale(&truth);
        for (i, (f, t)) in fit.params.iter().zip(&truth.params).enumerate() {
            let tol = if loc.contains(&i) { 0.05 * scale } else { 0.05 * t.abs() };
            assert!((f - t).abs() <= tol, "{} param {i}: fitted {f}, true {t}", truth.family);
        }
    }
}

#[test]
fn self_fit_sse_vanishes() {
    for truth in reference() {
        let x = truth.sample(11, 100_000);
        let bins = freedman_diaconis_bins(&x);
        let sse = score_sse(&truth, &x, bins).unwrap();
        assert!(sse / (bins as f64) < 1e-8, "{}: {sse} over {bins}", truth.family);
    }
}

#[test]
fn normal_loses_to_mixture_on_bimodal_sample() {
    let mut rng = seeded(5);
    let (a, b) = (Normal::new(-3000.0, 700.0).unwrap(), Normal::new(3000.0, 700.0).unwrap());
    let x: Vec<f64> = (0..20_000).map(|i| if i % 2 == 0 { a.sample(&mut rng) } else { b.sample(&mut rng) }).collect();
    let fit = fit_distribution(&x, Family::Normal).unwrap();
    let bins = fit.n_bins;
    let h = Histogram::new(&x, bins);
    let (da, db) =
        (ResidualDistribution::normal(-3000.0, 700.0).unwrap(), ResidualDistribution::normal(3000.0, 700.0).unwrap());
    let mixture = h.sse(|v| 0.5 * da.pdf(v) + 0.5 * db.pdf(v));
    assert!(fit.sse.unwrap() > mixture, "{} vs {mixture}", fit.sse.unwrap());
    assert_eq!(score_sse(&fit, &x, bins).unwrap(), fit.sse.unwrap());
    assert_eq!(score_sse(&fit, &x, bins).unwrap(), score_sse(&fit, &x, bins).unwrap());
    assert!(score_sse(&fit, &x, 9).is_err());
}

#[test]
fn selection_recovers_generating_family() {
    let x = ResidualDistribution::normal(0.0, 2000.0).unwrap().sample(21, 100_000);
    let best = select_best(&x, &[Family::Normal, Family::Uniform, Family::Cauchy]).unwrap();
    assert_eq!(best.family, Family::Normal);
    assert_eq!(select_best(&x, &[Family::Normal]).unwrap().family, Family::Normal);

    let sb = ResidualDistribution::new(Family::JohnsonSb, vec![0.5, 1.2, -5000.0, 10000.0]).unwrap();
    let y = sb.sample(22, 100_000);
    assert_eq!(select_best(&y, &[Family::Normal, Family::JohnsonSb]).unwrap().family, Family::JohnsonSb);
}

#[test]
fn best_sse_is_minimal_over_all_families() {
    let x = ResidualDistribution::new(Family::Gumbel, vec![0.0, 1000.0]).unwrap().sample(3, 5_000);
    let all = fit_all(&x, &Family::ALL, BinRule::FreedmanDiaconis).unwrap();
    let best = select_best(&x, &Family::ALL).unwrap();
    for (f, r) in &all {
        let d = r.as_ref().unwrap_or_else(|e| panic!("{f}: {e}"));
        assert_eq!(d.n_bins, best.n_bins);
        assert!(best.sse.unwrap() <= d.sse.unwrap());
    }
    let fixed = fit_all(&x, &[Family::Normal], BinRule::Fixed { n_bins: 40 }).unwrap();
    assert_eq!(fixed[0].1.as_ref().unwrap().n_bins, 40);
}

#[test]
fn sampling_contract() {
    let d = ResidualDistribution::normal(0.0, 2000.0).unwrap();
    assert!(d.sample(1, 0).is_empty());
    let a = d.sample(99, 1000);
    assert_eq!(a, d.sample(99, 1000));
    assert_ne!(a, d.sample(100, 1000));
    let u = ResidualDistribution::new(Family::Uniform, vec![-3.0, 7.0]).unwrap().sample(4, 100_000);
    let m = u.iter().sum::<f64>() / u.len() as f64;
    assert!((m - 2.0).abs() < 0.03, "{m}");
}

#[test]
fn sample_moments_match_analytic() {
    for d in reference() {
        let (Some(mu), Some(var)) = (d.mean(), d.variance()) else { continue };
        let x = d.sample(31, 100_000);
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        let v = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
        let m4 = x.iter().map(|v| (v - m).powi(4)).sum::<f64>() / n;
        let se_mean = (var / n).sqrt();
        let se_var = ((m4 - v * v) / n).sqrt();
        assert!((m - mu).abs() <= 3.0 * se_mean, "{} mean {m} vs {mu}", d.family);
        assert!((v - var).abs() <= 3.0 * se_var, "{} var {v} vs {var}", d.family);
    }
}

#[test]
fn draws_stay_in_support() {
    for d in reference() {
        let (lo, hi) = d.support();
        assert!(d.sample(8, 20_000).iter().all(|v| (lo..=hi).contains(v)), "{}", d.family);
    }
}

fn integrate(d: &ResidualDistribution) -> f64 {
    let (lo, hi) = d.support();
    let (lo, hi) = (lo.max(-1e6), hi.min(1e6));
    let n = 400_000;
    let h = (hi - lo) / n as f64;
    let inner: f64 = (1..n).map(|i| d.pdf(lo + i as f64 * h)).sum();
    h * (inner + 0.5 * (d.pdf(lo) + d.pdf(hi)))
}

#[test]
fn densities_integrate_to_one() {
    for d in reference() {
        let total = integrate(&d);
        assert!((total - 1.0).abs() < 1e-3, "{}: {total}", d.family);
    }
}

#[test]
fn cdf_is_monotone_and_pdf_non_negative() {
    for d in reference() {
        let (lo, hi) = d.support();
        let (lo, hi) = (lo.max(-20_000.0), hi.min(20_000.0));
        let grid: Vec<f64> = (0..1000).map(|i| lo + (hi - lo) * i as f64 / 999.0).collect();
        let c: Vec<f64> = grid.iter().map(|&x| d.cdf(x)).collect();
        assert!(c.windows(2).all(|w| w[1] >= w[0]), "{}", d.family);
        assert!(c.iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(grid.iter().all(|&x| d.pdf(x) >= 0.0));
    }
}

#[test]
fn quantile_inverts_cdf() {
    for d in reference() {
        for u in [0.01, 0.2, 0.5, 0.9, 0.999] {
            if let Some(q) = d.quantile(u) {
                assert!((d.cdf(q) - u).abs() < 1e-9, "{} u={u}", d.family);
            }
        }
        assert_eq!(d.quantile(0.0), None);
    }
}

#[test]
fn json_round_trip_reproduces_sampler() {
    let x = ResidualDistribution::new(Family::SkewNormal, vec![0.0, 1000.0, 2.0]).unwrap().sample(2, 2000);
    let fit = fit_distribution(&x, Family::SkewNormal).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dist.json");
    fit.save(&path).unwrap();
    let back = ResidualDistribution::load(&path).unwrap();
    assert_eq!(back, fit);
    assert_eq!(back.sample(5, 100), fit.sample(5, 100));
    let text = fit.to_json().replace("skew_normal", "weibull");
    assert!(ResidualDistribution::from_json(&text).is_err());
}

fn arbitrary_dist() -> impl Strategy<Value = ResidualDistribution> {
    (0usize..11, -500f64..500.0, 50f64..3000.0, 0.2f64..5.0, -3f64..3.0).prop_map(|(i, loc, scale, shape, s)| {
        let f = Family::ALL[i];
        let p = match f {
            Family::StudentT => vec![loc, scale, shape + 0.5],
            Family::Uniform => vec![loc, loc + scale],
            Family::GammaShifted => vec![shape + 1.0, scale, loc],
            Family::SkewNormal => vec![loc, scale, s],
            Family::JohnsonSb => vec![s, shape, loc, scale],
            Family::JohnsonSu => vec![s, shape, loc, scale],
            _ => vec![loc, scale],
        };
        ResidualDistribution::new(f, p).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cdf_monotone_for_random_parameters(d in arbitrary_dist()) {
        let grid: Vec<f64> = (0..1000).map(|i| -10_000.0 + 20.0 * i as f64).collect();
        let c: Vec<f64> = grid.iter().map(|&x| d.cdf(x)).collect();
        prop_assert!(c.windows(2).all(|w| w[1] >= w[0]));
        prop_assert!(grid.iter().all(|&x| d.pdf(x) >= 0.0));
        let (lo, hi) = d.support();
        prop_assert!(d.sample(1, 200).iter().all(|v| (lo..=hi).contains(v)));
    }
}

#[test]
fn skew_normal_cdf_matches_quadrature() {
    for alpha in [-6.0, -1.5, 0.0, 0.7, 3.0, 12.0] {
        let d = ResidualDistribution::new(Family::SkewNormal, vec![0.0, 1.0, alpha]).unwrap();
        assert!(
            (d.cdf(0.0) - (0.5 - f64::atan(alpha) / std::f64::consts::PI)).abs() < 1e-10,
            "alpha {alpha}: {}",
            d.cdf(0.0)
        );
        assert!((d.cdf(-1e-9) - d.cdf(0.0)).abs() < 1e-8, "{} {}", d.cdf(-1e-9), d.cdf(0.0));
        for x in [-4.0, -2.0, -0.5, 0.5, 2.0, 4.0] {
            // trapezoid on the density from -40
            let n = 400_000;
            let h = (x + 40.0) / n as f64;
            let inner: f64 = (1..n).map(|i| d.pdf(-40.0 + i as f64 * h)).sum();
            let q = h * (inner + 0.5 * (d.pdf(-40.0) + d.pdf(x)));
            assert!((d.cdf(x) - q).abs() < 1e-8, "alpha {alpha} x {x}: {} vs {q}", d.cdf(x));
        }
    }
}

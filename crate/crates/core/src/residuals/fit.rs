use std::f64::consts::PI;

use super::family::{ln_pdf, Family};
use super::simplex::nelder_mead;
use crate::eval::percentile;

/// Tolerance on the mean log-likelihood per sample.
pub(crate) const LL_TOL: f64 = 1e-8;
const MAX_EVALS_PER_DIM: usize = 4000;

/// Summary statistics used for starting values.
#[derive(Debug, Clone)]
pub(crate) struct SampleStats {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub skew: f64,
    pub excess_kurtosis: f64,
}

impl SampleStats {
    pub fn new(data: &[f64]) -> Self {
        let n = data.len() as f64;
        let mean = data.iter().sum::<f64>() / n;
        let m = |k: i32| data.iter().map(|x| (x - mean).powi(k)).sum::<f64>() / n;
        let (m2, m3, m4) = (m(2), m(3), m(4));
        let mut sorted = data.to_vec();
        sorted.sort_by(f64::total_cmp);
        Self {
            n: data.len(),
            mean,
            sd: m2.sqrt(),
            min: sorted[0],
            max: sorted[sorted.len() - 1],
            median: percentile(&sorted, 0.5),
            q1: percentile(&sorted, 0.25),
            q3: percentile(&sorted, 0.75),
            skew: if m2 > 0.0 { m3 / m2.powf(1.5) } else { 0.0 },
            excess_kurtosis: if m2 > 0.0 { m4 / (m2 * m2) - 3.0 } else { 0.0 },
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct FitOutcome {
    pub params: Vec<f64>,
    pub log_likelihood: f64,
    pub converged: bool,
}

pub(crate) fn log_likelihood(family: Family, params: &[f64], data: &[f64]) -> f64 {
    data.iter().map(|&x| ln_pdf(family, params, x)).sum()
}

fn closed(family: Family, params: Vec<f64>, data: &[f64]) -> FitOutcome {
    FitOutcome { log_likelihood: log_likelihood(family, &params, data), params, converged: true }
}

/// Mean and population standard deviation.
fn mean_sd(v: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let (mut n, mut s) = (0.0, 0.0);
    for x in v.clone() {
        n += 1.0;
        s += x;
    }
    let mean = s / n;
    let var = v.map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Johnson parameters `[γ, δ, ξ, λ]` with γ and δ at their closed-form
/// optimum for the given location and scale: `z = γ + δ u` is then exactly
/// standardised.
fn johnson_profile(data: &[f64], xi: f64, lambda: f64, bounded: bool) -> Option<Vec<f64>> {
    let u = data.iter().map(|&x| {
        let y = (x - xi) / lambda;
        if bounded {
            (y / (1.0 - y)).ln()
        } else {
            y.asinh()
        }
    });
    let (mu, sd) = mean_sd(u);
    (sd > 0.0 && sd.is_finite() && mu.is_finite()).then(|| vec![-mu / sd, 1.0 / sd, xi, lambda])
}

/// Maximum-likelihood fit. Normal, uniform and Laplace are closed form; the
/// rest use Nelder–Mead on an unconstrained reparameterisation started from
/// moment estimates.
///
/// `None` when no feasible starting point exists.
pub(crate) fn fit_params(family: Family, data: &[f64], s: &SampleStats) -> Option<FitOutcome> {
    use Family::*;
    match family {
        Normal => return Some(closed(family, vec![s.mean, s.sd], data)),
        Uniform => return Some(closed(family, vec![s.min, s.max], data)),
        Laplace => {
            let b = data.iter().map(|x| (x - s.median).abs()).sum::<f64>() / s.n as f64;
            return Some(closed(family, vec![s.median, b], data));
        }
        _ => {}
    }

    let range = s.max - s.min;
    // internal point -> family parameters (None when infeasible)
    let decode = |v: &[f64]| -> Option<Vec<f64>> {
        Some(match family {
            Logistic | Cauchy | Gumbel => vec![v[0], v[1].exp()],
            StudentT => vec![v[0], v[1].exp(), v[2].exp()],
            GammaShifted => {
                let k = v[0].exp();
                // k < 1 makes the likelihood unbounded as loc -> min
                if k < 1.0 {
                    return None;
                }
                vec![k, v[1].exp(), s.min - s.sd * v[2].exp()]
            }
            SkewNormal => vec![v[0], v[1].exp(), v[2]],
            JohnsonSb => {
                let lo = s.min - range * v[0].exp();
                let hi = s.max + range * v[1].exp();
                johnson_profile(data, lo, hi - lo, true)?
            }
            JohnsonSu => johnson_profile(data, v[0], v[1].exp(), false)?,
            Normal | Uniform | Laplace => unreachable!(),
        })
    };
    let (x0, step): (Vec<f64>, Vec<f64>) = match family {
        Logistic => (vec![s.mean, (s.sd * 3f64.sqrt() / PI).ln()], vec![0.1 * s.sd, 0.1]),
        Cauchy => (vec![s.median, (0.5 * (s.q3 - s.q1)).max(1e-12 * s.sd).ln()], vec![0.1 * s.sd, 0.1]),
        Gumbel => {
            let beta = s.sd * 6f64.sqrt() / PI;
            (vec![s.mean - 0.577_215_664_901_532_9 * beta, beta.ln()], vec![0.1 * s.sd, 0.1])
        }
        StudentT => {
            let nu = if s.excess_kurtosis > 0.03 { 4.0 + 6.0 / s.excess_kurtosis } else { 200.0 };
            let nu = nu.clamp(2.5, 200.0);
            let sigma = s.sd * ((nu - 2.0) / nu).sqrt();
            (vec![s.median, sigma.ln(), nu.ln()], vec![0.1 * s.sd, 0.1, 0.3])
        }
        GammaShifted => {
            let k = (4.0 / s.skew.max(0.1).powi(2)).clamp(1.5, 400.0);
            let theta = s.sd / k.sqrt();
            let loc = s.mean - k * theta;
            let gap = ((s.min - loc) / s.sd).max(1e-3);
            (vec![k.ln(), theta.ln(), gap.ln()], vec![0.3, 0.1, 0.3])
        }
        SkewNormal => {
            let g = s.skew.clamp(-0.99, 0.99);
            let r = (2.0 * g.abs() / (4.0 - PI)).powf(2.0 / 3.0);
            let b = (r / (1.0 + r)).sqrt() * g.signum();
            let delta = (b / (2.0 / PI).sqrt()).clamp(-0.995, 0.995);
            let alpha = delta / (1.0 - delta * delta).sqrt();
            let omega = s.sd / (1.0 - b * b).sqrt();
            (vec![s.mean - omega * b, omega.ln(), alpha], vec![0.1 * s.sd, 0.1, 0.5])
        }
        JohnsonSb => (vec![0.1f64.ln(), 0.1f64.ln()], vec![0.5, 0.5]),
        JohnsonSu => (vec![s.median, s.sd.ln()], vec![0.1 * s.sd, 0.2]),
        Normal | Uniform | Laplace => unreachable!(),
    };
    let n = s.n as f64;
    let objective = |v: &[f64]| match decode(v) {
        Some(p) if family.check_params(&p).is_ok() => -log_likelihood(family, &p, data) / n,
        _ => f64::INFINITY,
    };
    let m = nelder_mead(objective, &x0, &step, LL_TOL, MAX_EVALS_PER_DIM * x0.len());
    if !m.f.is_finite() {
        return None;
    }
    Some(FitOutcome { log_likelihood: -m.f * n, params: decode(&m.x)?, converged: m.converged })
}

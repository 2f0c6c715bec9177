use std::f64::consts::{LN_2, PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Gamma, Open01, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use statrs::function::erf::{erfc, erfc_inv};
use statrs::function::gamma::{gamma_lr, ln_gamma};

use super::ResidualError;
use crate::rng::StreamRng;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Closed-form residual distribution families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Normal,
    Laplace,
    Logistic,
    StudentT,
    Cauchy,
    Gumbel,
    Uniform,
    GammaShifted,
    SkewNormal,
    JohnsonSb,
    JohnsonSu,
}

impl Family {
    pub const ALL: [Family; 11] = [
        Self::Normal,
        Self::Laplace,
        Self::Logistic,
        Self::StudentT,
        Self::Cauchy,
        Self::Gumbel,
        Self::Uniform,
        Self::GammaShifted,
        Self::SkewNormal,
        Self::JohnsonSb,
        Self::JohnsonSu,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Normal => "normal",
            Self::Laplace => "laplace",
            Self::Logistic => "logistic",
            Self::StudentT => "student_t",
            Self::Cauchy => "cauchy",
            Self::Gumbel => "gumbel",
            Self::Uniform => "uniform",
            Self::GammaShifted => "gamma_shifted",
            Self::SkewNormal => "skew_normal",
            Self::JohnsonSb => "johnson_sb",
            Self::JohnsonSu => "johnson_su",
        }
    }

    /// Parameter names in storage order.
    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            Self::Normal => &["mu", "sigma"],
            Self::Laplace => &["mu", "b"],
            Self::Logistic => &["mu", "s"],
            Self::StudentT => &["mu", "sigma", "nu"],
            Self::Cauchy => &["x0", "gamma"],
            Self::Gumbel => &["mu", "beta"],
            Self::Uniform => &["a", "b"],
            Self::GammaShifted => &["k", "theta", "loc"],
            Self::SkewNormal => &["xi", "omega", "alpha"],
            Self::JohnsonSb | Self::JohnsonSu => &["gamma", "delta", "xi", "lambda"],
        }
    }

    pub fn n_params(self) -> usize {
        self.param_names().len()
    }

    pub(crate) fn check_params(self, p: &[f64]) -> Result<(), ResidualError> {
        let bad = |m: &str| Err(ResidualError::InvalidParameter(format!("{}: {m}", self.name())));
        if p.len() != self.n_params() {
            return bad(&format!("expected {} parameters, got {}", self.n_params(), p.len()));
        }
        if p.iter().any(|v| !v.is_finite()) {
            return bad("parameters must be finite");
        }
        let ok = match self {
            Self::Normal | Self::Laplace | Self::Logistic | Self::Cauchy | Self::Gumbel => p[1] > 0.0,
            Self::StudentT => p[1] > 0.0 && p[2] > 0.0,
            Self::Uniform => p[1] > p[0],
            Self::GammaShifted => p[0] > 0.0 && p[1] > 0.0,
            Self::SkewNormal => p[1] > 0.0,
            Self::JohnsonSb | Self::JohnsonSu => p[1] > 0.0 && p[3] > 0.0,
        };
        if ok {
            Ok(())
        } else {
            bad("scale and shape parameters must be positive")
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = ResidualError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|f| f.name() == s).ok_or_else(|| ResidualError::UnsupportedFamily(s.to_string()))
    }
}

pub(crate) fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

pub(crate) fn std_normal_quantile(u: f64) -> f64 {
    -SQRT_2 * erfc_inv(2.0 * u)
}

fn ln_std_normal_cdf(z: f64) -> f64 {
    if z > -30.0 {
        std_normal_cdf(z).ln()
    } else {
        // leading term of the Mills-ratio expansion
        -0.5 * z * z - (-z).ln() - LN_SQRT_2PI
    }
}

/// Owen's T function by composite Simpson quadrature.
fn owens_t(h: f64, a: f64) -> f64 {
    const N: usize = 2000;
    let f = |x: f64| (-0.5 * h * h * (1.0 + x * x)).exp() / (1.0 + x * x);
    let step = a / N as f64;
    let mut s = f(0.0) + f(a);
    for i in 1..N {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * step);
    }
    s * step / 3.0 / (2.0 * PI)
}

/// Lower tail of the standard skew normal for `z < 0 <= a`, by direct
/// quadrature of the density over `(-inf, z]` rescaled to its decay length.
fn skew_normal_lower(z: f64, a: f64) -> f64 {
    const N: usize = 4000;
    const U: f64 = 50.0;
    let ln_g = |t: f64| LN_2 - 0.5 * t * t - LN_SQRT_2PI + ln_std_normal_cdf(a * t);
    let r = -z * (1.0 + a * a) + a + 1.0;
    let g0 = ln_g(z);
    let f = |u: f64| (ln_g(z - u / r) - g0).exp();
    let step = U / N as f64;
    let mut s = f(0.0) + f(U);
    for i in 1..N {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * step);
    }
    (g0 - r.ln()).exp() * s * step / 3.0
}

/// Standard skew normal CDF. Each branch sums positive terms so the tails
/// stay monotone.
fn skew_normal_cdf(z: f64, a: f64) -> f64 {
    let v = match (a >= 0.0, z >= 0.0) {
        (true, true) => 1.0 - (std_normal_cdf(-z) + 2.0 * owens_t(z, a)),
        (true, false) => skew_normal_lower(z, a),
        (false, false) => std_normal_cdf(z) + 2.0 * owens_t(z, -a),
        (false, true) => 1.0 - skew_normal_lower(-z, -a),
    };
    v.clamp(0.0, 1.0)
}

fn logit(y: f64) -> f64 {
    (y / (1.0 - y)).ln()
}

pub(crate) fn ln_pdf(family: Family, p: &[f64], x: f64) -> f64 {
    use Family::*;
    match family {
        Normal => {
            let z = (x - p[0]) / p[1];
            -0.5 * z * z - p[1].ln() - LN_SQRT_2PI
        }
        Laplace => -(x - p[0]).abs() / p[1] - (2.0 * p[1]).ln(),
        Logistic => {
            let z = ((x - p[0]) / p[1]).abs();
            -z - 2.0 * (-z).exp().ln_1p() - p[1].ln()
        }
        StudentT => {
            let (z, nu) = ((x - p[0]) / p[1], p[2]);
            ln_gamma(0.5 * (nu + 1.0))
                - ln_gamma(0.5 * nu)
                - 0.5 * (nu * PI).ln()
                - p[1].ln()
                - 0.5 * (nu + 1.0) * (z * z / nu).ln_1p()
        }
        Cauchy => {
            let z = (x - p[0]) / p[1];
            -(PI * p[1]).ln() - (z * z).ln_1p()
        }
        Gumbel => {
            let z = (x - p[0]) / p[1];
            -p[1].ln() - z - (-z).exp()
        }
        Uniform => {
            if (p[0]..=p[1]).contains(&x) {
                -(p[1] - p[0]).ln()
            } else {
                f64::NEG_INFINITY
            }
        }
        GammaShifted => {
            let t = x - p[2];
            if t <= 0.0 {
                return f64::NEG_INFINITY;
            }
            (p[0] - 1.0) * t.ln() - t / p[1] - ln_gamma(p[0]) - p[0] * p[1].ln()
        }
        SkewNormal => {
            let z = (x - p[0]) / p[1];
            LN_2 - p[1].ln() - 0.5 * z * z - LN_SQRT_2PI + ln_std_normal_cdf(p[2] * z)
        }
        JohnsonSb => {
            let y = (x - p[2]) / p[3];
            if y <= 0.0 || y >= 1.0 {
                return f64::NEG_INFINITY;
            }
            let z = p[0] + p[1] * logit(y);
            p[1].ln() - LN_SQRT_2PI - p[3].ln() - y.ln() - (1.0 - y).ln() - 0.5 * z * z
        }
        JohnsonSu => {
            let y = (x - p[2]) / p[3];
            let z = p[0] + p[1] * y.asinh();
            p[1].ln() - p[3].ln() - LN_SQRT_2PI - 0.5 * (y * y).ln_1p() - 0.5 * z * z
        }
    }
}

pub(crate) fn cdf(family: Family, p: &[f64], x: f64) -> f64 {
    use Family::*;
    match family {
        Normal => std_normal_cdf((x - p[0]) / p[1]),
        Laplace => {
            let z = (x - p[0]) / p[1];
            if z < 0.0 {
                0.5 * z.exp()
            } else {
                1.0 - 0.5 * (-z).exp()
            }
        }
        Logistic => 1.0 / (1.0 + (-(x - p[0]) / p[1]).exp()),
        StudentT => {
            let (z, nu) = ((x - p[0]) / p[1], p[2]);
            let tail = 0.5 * beta_reg(0.5 * nu, 0.5, nu / (nu + z * z));
            if z < 0.0 {
                tail
            } else {
                1.0 - tail
            }
        }
        Cauchy => 0.5 + ((x - p[0]) / p[1]).atan() / PI,
        Gumbel => (-(-(x - p[0]) / p[1]).exp()).exp(),
        Uniform => ((x - p[0]) / (p[1] - p[0])).clamp(0.0, 1.0),
        GammaShifted => {
            let t = x - p[2];
            if t <= 0.0 {
                0.0
            } else {
                gamma_lr(p[0], t / p[1])
            }
        }
        SkewNormal => {
            let z = (x - p[0]) / p[1];
            skew_normal_cdf(z, p[2])
        }
        JohnsonSb => {
            let y = (x - p[2]) / p[3];
            if y <= 0.0 {
                0.0
            } else if y >= 1.0 {
                1.0
            } else {
                std_normal_cdf(p[0] + p[1] * logit(y))
            }
        }
        JohnsonSu => std_normal_cdf(p[0] + p[1] * ((x - p[2]) / p[3]).asinh()),
    }
}

/// Closed-form quantile for `u` in (0, 1), where one exists.
pub(crate) fn quantile(family: Family, p: &[f64], u: f64) -> Option<f64> {
    use Family::*;
    Some(match family {
        Normal => p[0] + p[1] * std_normal_quantile(u),
        Laplace => {
            if u < 0.5 {
                p[0] + p[1] * (2.0 * u).ln()
            } else {
                p[0] - p[1] * (2.0 - 2.0 * u).ln()
            }
        }
        Logistic => p[0] + p[1] * (u / (1.0 - u)).ln(),
        Cauchy => p[0] + p[1] * (PI * (u - 0.5)).tan(),
        Gumbel => p[0] - p[1] * (-u.ln()).ln(),
        Uniform => p[0] + u * (p[1] - p[0]),
        JohnsonSb => {
            let w = (std_normal_quantile(u) - p[0]) / p[1];
            p[2] + p[3] / (1.0 + (-w).exp())
        }
        JohnsonSu => p[2] + p[3] * ((std_normal_quantile(u) - p[0]) / p[1]).sinh(),
        StudentT | GammaShifted | SkewNormal => return None,
    })
}

pub(crate) fn support(family: Family, p: &[f64]) -> (f64, f64) {
    match family {
        Family::Uniform => (p[0], p[1]),
        Family::GammaShifted => (p[2], f64::INFINITY),
        Family::JohnsonSb => (p[2], p[2] + p[3]),
        _ => (f64::NEG_INFINITY, f64::INFINITY),
    }
}

fn skew_delta(alpha: f64) -> f64 {
    alpha / (1.0 + alpha * alpha).sqrt()
}

pub(crate) fn mean(family: Family, p: &[f64]) -> Option<f64> {
    use Family::*;
    match family {
        Normal | Laplace | Logistic => Some(p[0]),
        StudentT => (p[2] > 1.0).then_some(p[0]),
        Cauchy | JohnsonSb => None,
        Gumbel => Some(p[0] + EULER_GAMMA * p[1]),
        Uniform => Some(0.5 * (p[0] + p[1])),
        GammaShifted => Some(p[2] + p[0] * p[1]),
        SkewNormal => Some(p[0] + p[1] * skew_delta(p[2]) * (2.0 / PI).sqrt()),
        JohnsonSu => Some(p[2] - p[3] * (0.5 / (p[1] * p[1])).exp() * (p[0] / p[1]).sinh()),
    }
}

pub(crate) fn variance(family: Family, p: &[f64]) -> Option<f64> {
    use Family::*;
    match family {
        Normal => Some(p[1] * p[1]),
        Laplace => Some(2.0 * p[1] * p[1]),
        Logistic => Some(p[1] * p[1] * PI * PI / 3.0),
        StudentT => (p[2] > 2.0).then(|| p[1] * p[1] * p[2] / (p[2] - 2.0)),
        Cauchy | JohnsonSb => None,
        Gumbel => Some(PI * PI * p[1] * p[1] / 6.0),
        Uniform => Some((p[1] - p[0]).powi(2) / 12.0),
        GammaShifted => Some(p[0] * p[1] * p[1]),
        SkewNormal => {
            let d = skew_delta(p[2]);
            Some(p[1] * p[1] * (1.0 - 2.0 * d * d / PI))
        }
        JohnsonSu => {
            let w = (1.0 / (p[1] * p[1])).exp();
            Some(0.5 * p[3] * p[3] * (w - 1.0) * (w * (2.0 * p[0] / p[1]).cosh() + 1.0))
        }
    }
}

/// One draw: inverse CDF where available, otherwise the usual
/// transformation of standard variates.
pub(crate) fn draw(family: Family, p: &[f64], rng: &mut StreamRng) -> f64 {
    match family {
        Family::StudentT => {
            let t: f64 = StudentT::new(p[2]).expect("validated").sample(rng);
            p[0] + p[1] * t
        }
        Family::GammaShifted => p[2] + Gamma::new(p[0], p[1]).expect("validated").sample(rng),
        Family::SkewNormal => {
            let d = skew_delta(p[2]);
            let u0: f64 = rng.sample(StandardNormal);
            let u1: f64 = rng.sample(StandardNormal);
            p[0] + p[1] * (d * u0.abs() + (1.0 - d * d).sqrt() * u1)
        }
        _ => {
            let u: f64 = rng.sample(Open01);
            quantile(family, p, u).expect("family has a quantile")
        }
    }
}

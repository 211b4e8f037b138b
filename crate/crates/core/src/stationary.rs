//! Product-form stationary law `Gamma(a, c) x Gamma(b, d)` of the drifted
//! system, its generator identity, and empirical goodness-of-fit.

use thiserror::Error;

use crate::integrator::{SimConfig, SimError, Simulator};
use crate::model::{Drift, Params};
use crate::rng::RngStream;
use crate::stats;

/// Default absolute tolerance (scaled by the size of the products) of the
/// orthogonality test `alpha beta + gamma delta = 0`.
pub const SKEW_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StationaryError {
    #[error("alpha*beta + gamma*delta = {0} is not zero")]
    SkewSymmetryViolated(f64),
    #[error("alpha*delta - beta*gamma vanishes")]
    DegenerateRepulsion,
    #[error("rate parameters (c = {c}, d = {d}) are not positive; the invariant density is not integrable")]
    NonIntegrableStationary { c: f64, d: f64 },
    #[error("empty sample")]
    EmptySample,
    #[error("invalid sampling schedule: {0}")]
    InvalidSchedule(String),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Shapes `a, b` and rates `c, d` of the product law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaProduct {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl GammaProduct {
    pub fn mean_x(&self) -> f64 {
        self.a / self.c
    }

    pub fn mean_y(&self) -> f64 {
        self.b / self.d
    }

    pub fn var_x(&self) -> f64 {
        self.a / (self.c * self.c)
    }

    pub fn var_y(&self) -> f64 {
        self.b / (self.d * self.d)
    }
}

/// Coefficients of `J / rho = A + B/x + C/x^2 + D/y + E/y^2 + F/(xy)`, the
/// adjoint generator applied to the candidate density.
#[derive(Debug, Clone, Copy, PartialEq)]
#[allow(non_snake_case)]
pub struct GeneratorCoefficients {
    pub A: f64,
    pub B: f64,
    pub C: f64,
    pub D: f64,
    pub E: f64,
    pub F: f64,
}

impl GeneratorCoefficients {
    pub fn as_array(&self) -> [f64; 6] {
        [self.A, self.B, self.C, self.D, self.E, self.F]
    }

    pub fn max_abs(&self) -> f64 {
        self.as_array().iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub fn skew_symmetry(p: &Params, tol: f64) -> bool {
    (p.alpha * p.beta + p.gamma * p.delta).abs() <= tol
}

pub fn gamma_product_params(p: &Params, drift: &Drift) -> Result<GammaProduct, StationaryError> {
    let skew = p.alpha * p.beta + p.gamma * p.delta;
    let scale = (p.alpha * p.beta).abs().max((p.gamma * p.delta).abs()).max(1.0);
    if !skew_symmetry(p, SKEW_TOL * scale) {
        return Err(StationaryError::SkewSymmetryViolated(skew));
    }
    let det = p.determinant();
    if det == 0.0 {
        return Err(StationaryError::DegenerateRepulsion);
    }
    let c = 2.0 * p.delta * (drift.mu * p.alpha + drift.nu * p.gamma) / det;
    let d = 2.0 * p.alpha * (drift.mu * p.beta + drift.nu * p.delta) / det;
    if !(c > 0.0 && d > 0.0) {
        return Err(StationaryError::NonIntegrableStationary { c, d });
    }
    Ok(GammaProduct {
        a: 2.0 * p.alpha + 1.0,
        b: 2.0 * p.delta + 1.0,
        c,
        d,
    })
}

pub fn generator_coefficients(p: &Params, drift: &Drift, g: &GammaProduct) -> GeneratorCoefficients {
    let Params {
        alpha,
        beta,
        gamma,
        delta,
    } = *p;
    let Drift { mu, nu } = *drift;
    let GammaProduct { a, b, c, d } = *g;
    GeneratorCoefficients {
        A: 0.5 * c * c + 0.5 * d * d - mu * c - nu * d,
        B: -(a - 1.0) * c + mu * (a - 1.0) + alpha * c + gamma * d,
        C: 0.5 * (a - 1.0) * (a - 2.0) - alpha * (a - 2.0),
        D: -(b - 1.0) * d + nu * (b - 1.0) + beta * c + delta * d,
        E: 0.5 * (b - 1.0) * (b - 2.0) - delta * (b - 2.0),
        F: beta * (a - 1.0) + gamma * (b - 1.0),
    }
}

/// Mixing-time heuristic `10 / min(c sqrt(a), d sqrt(b))`.
pub fn default_burn_in(g: &GammaProduct) -> f64 {
    10.0 / (g.c * g.a.sqrt()).min(g.d * g.b.sqrt())
}

/// Runs one long trajectory, discards `t < burn_in`, then keeps the state
/// every `thin` time units until `n_keep` samples are collected.
pub fn ergodic_sample(
    cfg: &SimConfig,
    burn_in: f64,
    thin: f64,
    n_keep: usize,
    stream: RngStream,
) -> Result<Vec<(f64, f64)>, StationaryError> {
    gamma_product_params(&cfg.params, &cfg.drift)?;
    if !(burn_in.is_finite() && burn_in >= 0.0) {
        return Err(StationaryError::InvalidSchedule(format!("burn_in = {burn_in}")));
    }
    if !(thin.is_finite() && thin > 0.0) {
        return Err(StationaryError::InvalidSchedule(format!("thin = {thin}")));
    }
    let dt = cfg.grid.dt();
    let burn_steps = (burn_in / dt).round() as usize;
    let thin_steps = ((thin / dt).round() as usize).max(1);
    let sim = Simulator::new(*cfg)?;
    let samples = sim
        .states(stream.increments(dt))
        .skip(burn_steps)
        .skip(thin_steps - 1)
        .step_by(thin_steps)
        .take(n_keep)
        .collect();
    Ok(samples)
}

/// Empirical summary of a sample against the product law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitReport {
    pub n_samples: usize,
    pub mean_x: f64,
    pub var_x: f64,
    pub mean_y: f64,
    pub var_y: f64,
    pub ks_x: f64,
    pub ks_y: f64,
    pub xy_correlation: f64,
}

impl FitReport {
    pub const CSV_HEADER: [&'static str; 8] = [
        "n_samples",
        "mean_x",
        "var_x",
        "mean_y",
        "var_y",
        "ks_x",
        "ks_y",
        "xy_correlation",
    ];

    pub fn to_csv(&self) -> String {
        use crate::csv::{fmt_f64, single_row};
        single_row(
            &Self::CSV_HEADER,
            &[
                self.n_samples.to_string(),
                fmt_f64(self.mean_x),
                fmt_f64(self.var_x),
                fmt_f64(self.mean_y),
                fmt_f64(self.var_y),
                fmt_f64(self.ks_x),
                fmt_f64(self.ks_y),
                fmt_f64(self.xy_correlation),
            ],
        )
    }
}

pub fn fit_check(samples: &[(f64, f64)], g: &GammaProduct) -> Result<FitReport, StationaryError> {
    if samples.is_empty() {
        return Err(StationaryError::EmptySample);
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = samples.iter().copied().unzip();
    Ok(FitReport {
        n_samples: samples.len(),
        mean_x: stats::mean(&xs),
        var_x: stats::variance(&xs),
        mean_y: stats::mean(&ys),
        var_y: stats::variance(&ys),
        ks_x: ks_statistic(&xs, |x| gamma_cdf(x, g.a, g.c)),
        ks_y: ks_statistic(&ys, |y| gamma_cdf(y, g.b, g.d)),
        xy_correlation: stats::correlation(&xs, &ys),
    })
}

/// One-sample Kolmogorov-Smirnov distance `sup |F_n - F|`.
pub fn ks_statistic<F: Fn(f64) -> f64>(values: &[f64], cdf: F) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// CDF of the gamma law with the given shape and rate.
pub fn gamma_cdf(x: f64, shape: f64, rate: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        regularized_lower_gamma(shape, rate * x)
    }
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Gamma(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin().abs()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized lower incomplete gamma `P(s, x)`: power series below
/// `x = s + 1`, Lentz continued fraction for the complement above.
pub fn regularized_lower_gamma(s: f64, x: f64) -> f64 {
    const EPS: f64 = 1e-16;
    const TINY: f64 = 1e-300;
    const MAX_ITER: usize = 10_000;
    if x <= 0.0 {
        return 0.0;
    }
    let log_prefactor = -x + s * x.ln() - ln_gamma(s);
    if x < s + 1.0 {
        let mut term = 1.0 / s;
        let mut sum = term;
        let mut denom = s;
        for _ in 0..MAX_ITER {
            denom += 1.0;
            term *= x / denom;
            sum += term;
            if term.abs() < sum.abs() * EPS {
                break;
            }
        }
        (sum * log_prefactor.exp()).min(1.0)
    } else {
        let mut b = x + 1.0 - s;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..MAX_ITER {
            let an = -(i as f64) * (i as f64 - s);
            b += 2.0;
            d = an * d + b;
            if d.abs() < TINY {
                d = TINY;
            }
            c = b + an / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < EPS {
                break;
            }
        }
        (1.0 - log_prefactor.exp() * h).max(0.0)
    }
}

//! Parallel Monte Carlo over independent keyed paths.

use rayon::prelude::*;

use crate::csv::{fmt_f64, fmt_opt, single_row};
use crate::harness::config::Experiment;
use crate::integrator::{SimConfig, SimError, Simulator};
use crate::rng::RngStream;
use crate::stats::{mean, pairwise_sum, variance, wilson_halfwidth};

/// End-of-horizon data of one path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathOutcome {
    pub x_end: f64,
    pub y_end: f64,
    pub int_inv_x: f64,
    pub int_inv_y: f64,
    pub x_hit: Option<f64>,
    pub y_hit: Option<f64>,
    pub corner_hit: Option<f64>,
}

/// Simulation config of an experiment.
pub fn sim_config(exp: &Experiment) -> SimConfig {
    let mut cfg = SimConfig::new(exp.params, exp.grid)
        .with_drift(exp.drift)
        .with_start(exp.x0, exp.y0)
        .with_scheme(exp.scheme)
        .with_clamp_coeff(exp.clamp_coeff)
        .with_hit_coeff(exp.hit_coeff)
        .with_stride(exp.stride);
    cfg.force = exp.force;
    cfg
}

/// Path `i` is driven by `RngStream(seed, i)`. Outcomes are in path order
/// regardless of the number of workers.
pub fn run_paths(cfg: &SimConfig, seed: u64, n_paths: usize) -> Result<Vec<PathOutcome>, SimError> {
    let sim = Simulator::new(cfg.endpoints_only())?;
    Ok((0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let path = sim.run_stream(RngStream::new(seed, i));
            let last = path.last_state().expect("a path has at least its start");
            let (ix, iy) = path.final_int_inv();
            PathOutcome {
                x_end: last.x,
                y_end: last.y,
                int_inv_x: ix,
                int_inv_y: iy,
                x_hit: path.x_hit,
                y_hit: path.y_hit,
                corner_hit: path.corner_hit,
            }
        })
        .collect())
}

/// Aggregates over all paths of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloSummary {
    pub n_paths: usize,
    pub mean_x: f64,
    pub var_x: f64,
    pub se_x: f64,
    pub mean_y: f64,
    pub var_y: f64,
    pub se_y: f64,
    pub mean_x_sq: f64,
    pub mean_y_sq: f64,
    pub mean_int_inv_x: f64,
    pub mean_int_inv_y: f64,
    pub x_hits: u64,
    pub y_hits: u64,
    pub corner_hits: u64,
    pub mean_first_x_hit: Option<f64>,
}

impl MonteCarloSummary {
    pub const CSV_HEADER: [&'static str; 15] = [
        "n_paths",
        "mean_x",
        "var_x",
        "se_x",
        "mean_y",
        "var_y",
        "se_y",
        "mean_x_sq",
        "mean_y_sq",
        "mean_int_inv_x",
        "mean_int_inv_y",
        "frac_x_hit",
        "frac_y_hit",
        "frac_corner_hit",
        "mean_first_x_hit",
    ];

    pub fn frac(&self, hits: u64) -> f64 {
        hits as f64 / self.n_paths as f64
    }

    pub fn to_csv(&self) -> String {
        single_row(
            &Self::CSV_HEADER,
            &[
                self.n_paths.to_string(),
                fmt_f64(self.mean_x),
                fmt_f64(self.var_x),
                fmt_f64(self.se_x),
                fmt_f64(self.mean_y),
                fmt_f64(self.var_y),
                fmt_f64(self.se_y),
                fmt_f64(self.mean_x_sq),
                fmt_f64(self.mean_y_sq),
                fmt_f64(self.mean_int_inv_x),
                fmt_f64(self.mean_int_inv_y),
                fmt_f64(self.frac(self.x_hits)),
                fmt_f64(self.frac(self.y_hits)),
                fmt_f64(self.frac(self.corner_hits)),
                fmt_opt(self.mean_first_x_hit),
            ],
        )
    }

    pub fn is_finite(&self) -> bool {
        [
            self.mean_x,
            self.mean_y,
            self.mean_x_sq,
            self.mean_y_sq,
            self.mean_int_inv_x,
            self.mean_int_inv_y,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

pub fn summarize(outcomes: &[PathOutcome]) -> MonteCarloSummary {
    let n = outcomes.len();
    let col = |f: fn(&PathOutcome) -> f64| -> Vec<f64> { outcomes.iter().map(f).collect() };
    let xs = col(|o| o.x_end);
    let ys = col(|o| o.y_end);
    let var_x = if n > 1 { variance(&xs) } else { 0.0 };
    let var_y = if n > 1 { variance(&ys) } else { 0.0 };
    let count = |f: fn(&PathOutcome) -> bool| outcomes.iter().filter(|o| f(o)).count() as u64;
    let first_x: Vec<f64> = outcomes.iter().filter_map(|o| o.x_hit).collect();
    MonteCarloSummary {
        n_paths: n,
        mean_x: mean(&xs),
        var_x,
        se_x: (var_x / n as f64).sqrt(),
        mean_y: mean(&ys),
        var_y,
        se_y: (var_y / n as f64).sqrt(),
        mean_x_sq: pairwise_sum(&col(|o| o.x_end * o.x_end)) / n as f64,
        mean_y_sq: pairwise_sum(&col(|o| o.y_end * o.y_end)) / n as f64,
        mean_int_inv_x: mean(&col(|o| o.int_inv_x)),
        mean_int_inv_y: mean(&col(|o| o.int_inv_y)),
        x_hits: count(|o| o.x_hit.is_some()),
        y_hits: count(|o| o.y_hit.is_some()),
        corner_hits: count(|o| o.corner_hit.is_some()),
        mean_first_x_hit: (!first_x.is_empty()).then(|| mean(&first_x)),
    }
}

pub fn run_monte_carlo(exp: &Experiment) -> Result<MonteCarloSummary, SimError> {
    let outcomes = run_paths(&sim_config(exp), exp.seed, exp.n_paths)?;
    Ok(summarize(&outcomes))
}

/// Numerical boundary-hit frequencies over `[0, t_end]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HittingStats {
    pub n_paths: usize,
    pub frac_x_hit: f64,
    pub frac_y_hit: f64,
    pub frac_corner_hit: f64,
    pub mean_first_x_hit: Option<f64>,
    /// 95% Wilson halfwidth of `frac_x_hit`.
    pub wilson_halfwidth: f64,
    pub wilson_halfwidth_y: f64,
    pub wilson_halfwidth_corner: f64,
}

impl HittingStats {
    pub const CSV_HEADER: [&'static str; 8] = [
        "n_paths",
        "frac_x_hit",
        "frac_y_hit",
        "frac_corner_hit",
        "mean_first_x_hit",
        "wilson_halfwidth",
        "wilson_halfwidth_y",
        "wilson_halfwidth_corner",
    ];

    pub fn from_summary(s: &MonteCarloSummary) -> Self {
        let n = s.n_paths as u64;
        HittingStats {
            n_paths: s.n_paths,
            frac_x_hit: s.frac(s.x_hits),
            frac_y_hit: s.frac(s.y_hits),
            frac_corner_hit: s.frac(s.corner_hits),
            mean_first_x_hit: s.mean_first_x_hit,
            wilson_halfwidth: wilson_halfwidth(s.x_hits, n),
            wilson_halfwidth_y: wilson_halfwidth(s.y_hits, n),
            wilson_halfwidth_corner: wilson_halfwidth(s.corner_hits, n),
        }
    }

    pub fn to_csv(&self) -> String {
        single_row(
            &Self::CSV_HEADER,
            &[
                self.n_paths.to_string(),
                fmt_f64(self.frac_x_hit),
                fmt_f64(self.frac_y_hit),
                fmt_f64(self.frac_corner_hit),
                fmt_opt(self.mean_first_x_hit),
                fmt_f64(self.wilson_halfwidth),
                fmt_f64(self.wilson_halfwidth_y),
                fmt_f64(self.wilson_halfwidth_corner),
            ],
        )
    }
}

pub fn hitting_experiment(exp: &Experiment) -> Result<HittingStats, SimError> {
    Ok(HittingStats::from_summary(&run_monte_carlo(exp)?))
}

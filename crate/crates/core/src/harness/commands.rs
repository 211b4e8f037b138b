//! One entry point per experiment kind. Each returns its text products
//! rather than writing them, so callers control where they go.

use std::fmt::Write as _;

use crate::csv::{fmt_f64, fmt_opt, single_row};
use crate::deterministic::{
    integrate_deterministic, sqrt_profile, uniqueness_verdict, DeterministicStart,
};
use crate::harness::config::{Experiment, Kind, StartKind};
use crate::harness::montecarlo::{run_monte_carlo, sim_config, HittingStats};
use crate::harness::HarnessError;
use crate::integrator::{simulate_path, SimError};
use crate::regime::{classify_corner, classify_existence, classify_sides, CornerCondition};
use crate::rng::RngStream;
use crate::stationary::{
    default_burn_in, ergodic_sample, fit_check, gamma_product_params, skew_symmetry,
    StationaryError, SKEW_TOL,
};

/// Text products of a command: a report for the terminal and, for the data
/// kinds, the CSV destined for the experiment's output path.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CommandOutput {
    pub stdout: String,
    pub data: Option<String>,
}

pub fn execute(exp: &Experiment) -> Result<CommandOutput, HarnessError> {
    match exp.kind {
        Kind::Classify => Ok(classify(exp)),
        Kind::Simulate => simulate(exp),
        Kind::Stationary => stationary(exp),
        Kind::Deterministic => deterministic(exp),
        Kind::Hitting => hitting(exp),
    }
}

fn flag(b: bool) -> String {
    (b as u8).to_string()
}

pub const CLASSIFY_HEADER: [&str; 20] = [
    "alpha",
    "beta",
    "gamma",
    "delta",
    "c1",
    "c2a",
    "c2b",
    "c3",
    "c3_lambda",
    "c3_mu",
    "corner_verdict",
    "x_side",
    "y_side",
    "both_sides_never",
    "regime",
    "existence_case",
    "corner_start_permitted",
    "skew_symmetric",
    "deterministic_uniqueness",
    "deterministic_epsilon",
];

fn classify(exp: &Experiment) -> CommandOutput {
    let p = &exp.params;
    let corner = classify_corner(p);
    let sides = classify_sides(p, &corner);
    let existence = classify_existence(p);
    let uniq = uniqueness_verdict(p);
    let w = corner.c3_witness;

    let mut out = String::new();
    let _ = writeln!(out, "parameters: {p}");
    let conds: Vec<&str> = corner.satisfied.iter().map(|c| c.label()).collect();
    let _ = writeln!(
        out,
        "corner: {} (conditions: {})",
        corner.verdict,
        if conds.is_empty() { "none".to_string() } else { conds.join(", ") }
    );
    if let Some(w) = w {
        let _ = writeln!(out, "  C3 witness: lambda = {}, mu = {}", w.lambda, w.mu);
    }
    let _ = writeln!(out, "x side: {}", sides.x_side);
    let _ = writeln!(out, "y side: {}", sides.y_side);
    let _ = writeln!(out, "both sides never hit: {}", sides.both_sides_never);
    let _ = writeln!(out, "existence: {} [{}]", existence.regime, existence.case);
    if !existence.notes.is_empty() {
        let _ = writeln!(out, "  {}", existence.notes);
    }
    let _ = writeln!(
        out,
        "corner start permitted: {}",
        existence.permits_corner_start()
    );
    let _ = writeln!(
        out,
        "deterministic corner problem: uniqueness {:?} ({:?}), epsilon = {}",
        uniq.unique, uniq.branch, uniq.epsilon
    );
    out.push('\n');
    out.push_str(&single_row(
        &CLASSIFY_HEADER,
        &[
            fmt_f64(p.alpha),
            fmt_f64(p.beta),
            fmt_f64(p.gamma),
            fmt_f64(p.delta),
            flag(corner.holds(CornerCondition::C1)),
            flag(corner.holds(CornerCondition::C2a)),
            flag(corner.holds(CornerCondition::C2b)),
            flag(corner.holds(CornerCondition::C3)),
            fmt_opt(w.map(|w| w.lambda)),
            fmt_opt(w.map(|w| w.mu)),
            corner.verdict.to_string(),
            sides.x_side.to_string(),
            sides.y_side.to_string(),
            flag(sides.both_sides_never),
            existence.regime.to_string(),
            existence.case.to_string(),
            flag(existence.permits_corner_start()),
            flag(skew_symmetry(p, SKEW_TOL)),
            format!("{:?}", uniq.unique).to_lowercase(),
            fmt_f64(uniq.epsilon),
        ],
    ));
    CommandOutput {
        stdout: out,
        data: None,
    }
}

fn simulate(exp: &Experiment) -> Result<CommandOutput, HarnessError> {
    if exp.n_paths == 1 {
        let path = simulate_path(&sim_config(exp), RngStream::new(exp.seed, 0))?;
        if path.xs.iter().chain(&path.ys).any(|v| !v.is_finite()) {
            return Err(HarnessError::Numeric("non-finite state in path".into()));
        }
        let last = path.last_state().expect("nonempty path");
        let stdout = format!(
            "simulated 1 path with {} over {} steps; final state ({}, {})\n",
            exp.scheme.name(),
            exp.grid.n_steps(),
            last.x,
            last.y
        );
        return Ok(CommandOutput {
            stdout,
            data: Some(path.to_csv_string()),
        });
    }
    let summary = run_monte_carlo(exp)?;
    if !summary.is_finite() {
        return Err(HarnessError::Numeric("non-finite Monte Carlo average".into()));
    }
    let stdout = format!(
        "simulated {} paths with {}; E[X] = {} +- {}, E[Y] = {} +- {}\n",
        summary.n_paths,
        exp.scheme.name(),
        summary.mean_x,
        summary.se_x,
        summary.mean_y,
        summary.se_y
    );
    Ok(CommandOutput {
        stdout,
        data: Some(summary.to_csv()),
    })
}

fn stationary(exp: &Experiment) -> Result<CommandOutput, HarnessError> {
    let g = gamma_product_params(&exp.params, &exp.drift)?;
    let burn_in = exp.burn_in.unwrap_or_else(|| default_burn_in(&g));
    let samples = ergodic_sample(
        &sim_config(exp),
        burn_in,
        exp.thin,
        exp.n_keep,
        RngStream::new(exp.seed, 0),
    )?;
    let report = fit_check(&samples, &g)?;
    if !(report.mean_x.is_finite() && report.mean_y.is_finite()) {
        return Err(HarnessError::Numeric("non-finite stationary sample".into()));
    }
    let mut data = String::from("x,y\n");
    for (x, y) in &samples {
        let _ = writeln!(data, "{},{}", fmt_f64(*x), fmt_f64(*y));
    }
    let stdout = format!(
        "target law: Gamma({}, {}) x Gamma({}, {}); burn-in {}, thin {}\n{}",
        g.a,
        g.c,
        g.b,
        g.d,
        burn_in,
        exp.thin,
        report.to_csv()
    );
    Ok(CommandOutput {
        stdout,
        data: Some(data),
    })
}

fn deterministic(exp: &Experiment) -> Result<CommandOutput, HarnessError> {
    let start = match exp.start {
        StartKind::ClosedForm => DeterministicStart::ClosedForm,
        StartKind::Perturbed => DeterministicStart::PerturbedStart(exp.x0, exp.y0),
    };
    let path = integrate_deterministic(&exp.params, &exp.grid, start)?.thinned(exp.stride);
    let last = path.last_state().expect("nonempty path");
    if !(last.x.is_finite() && last.y.is_finite()) {
        return Err(HarnessError::Numeric("non-finite deterministic state".into()));
    }
    let prof = sqrt_profile(&exp.params)?;
    let stdout = format!(
        "closed form: x = {} sqrt(t), y = {} sqrt(t); numerical x({t}) = {}, y({t}) = {}\n",
        prof.c,
        prof.d,
        last.x,
        last.y,
        t = last.t
    );
    Ok(CommandOutput {
        stdout,
        data: Some(path.to_csv_string()),
    })
}

fn hitting(exp: &Experiment) -> Result<CommandOutput, HarnessError> {
    let stats = HittingStats::from_summary(&run_monte_carlo(exp)?);
    let stdout = format!(
        "{} paths, threshold {} sqrt(dt): x hit {} +- {}, y hit {} +- {}, corner hit {} +- {}\n",
        stats.n_paths,
        exp.hit_coeff,
        stats.frac_x_hit,
        stats.wilson_halfwidth,
        stats.frac_y_hit,
        stats.wilson_halfwidth_y,
        stats.frac_corner_hit,
        stats.wilson_halfwidth_corner
    );
    Ok(CommandOutput {
        stdout,
        data: Some(stats.to_csv()),
    })
}

impl From<StationaryError> for HarnessError {
    fn from(e: StationaryError) -> Self {
        match e {
            StationaryError::Sim(s) => HarnessError::Sim(s),
            other => HarnessError::Stationary(other),
        }
    }
}

impl From<SimError> for HarnessError {
    fn from(e: SimError) -> Self {
        HarnessError::Sim(e)
    }
}

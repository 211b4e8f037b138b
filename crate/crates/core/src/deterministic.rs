//! The noise-free singular system started at the corner:
//!
//! ```text
//! x(t) = alpha int_0^t ds/x + beta  int_0^t ds/y
//! y(t) = gamma int_0^t ds/x + delta int_0^t ds/y
//! ```
//!
//! Closed-form `sqrt(t)` profiles, uniqueness thresholds, the degenerate
//! `alpha = delta = 0` family, a grid solver and the scalar comparison solver.

use thiserror::Error;

use crate::integrator::implicit_bessel_substep;
use crate::model::{ModelError, Params, PathSample, SimGrid};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DeterministicError {
    #[error("no solution exists for {0}: beta < 0, gamma < 0 and alpha*delta <= beta*gamma")]
    NoDeterministicSolution(Params),
    #[error("beta, gamma and C must be positive")]
    NonPositiveInputs,
    #[error("starting point must lie in the open quadrant, got ({0}, {1})")]
    InvalidStart(f64, f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// `x(t) = c sqrt(t)`, `y(t) = d sqrt(t)`, with `c = sqrt(big_c)`,
/// `d = sqrt(big_d)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqrtProfile {
    pub c: f64,
    pub d: f64,
    pub big_c: f64,
    pub big_d: f64,
}

impl SqrtProfile {
    /// Residuals `(c/2 - alpha/c - beta/d, d/2 - gamma/c - delta/d)`.
    pub fn residuals(&self, p: &Params) -> (f64, f64) {
        (
            self.c / 2.0 - p.alpha / self.c - p.beta / self.d,
            self.d / 2.0 - p.gamma / self.c - p.delta / self.d,
        )
    }

    pub fn at(&self, t: f64) -> (f64, f64) {
        let s = t.sqrt();
        (self.c * s, self.d * s)
    }
}

fn no_solution(p: &Params) -> bool {
    p.beta < 0.0 && p.gamma < 0.0 && p.alpha * p.delta <= p.beta * p.gamma
}

/// `C` of the closed form; the rationalized expression is used for negative
/// `beta`, where the direct one cancels.
fn profile_square(alpha: f64, beta: f64, gamma: f64, delta: f64) -> f64 {
    let det = alpha * delta - beta * gamma;
    if beta >= 0.0 {
        let r = ((beta - gamma).powi(2) + 4.0 * alpha * delta).sqrt();
        2.0 * alpha + beta / delta * (beta - gamma + r)
    } else {
        let root = (4.0 * det + (beta + gamma).powi(2)).sqrt();
        4.0 * alpha * det / (2.0 * alpha * delta - beta * gamma + beta * beta - beta * root)
    }
}

pub fn sqrt_profile(p: &Params) -> Result<SqrtProfile, DeterministicError> {
    let p = p.validate()?;
    if no_solution(&p) {
        return Err(DeterministicError::NoDeterministicSolution(p));
    }
    let big_c = profile_square(p.alpha, p.beta, p.gamma, p.delta);
    let big_d = profile_square(p.delta, p.gamma, p.beta, p.alpha);
    Ok(SqrtProfile {
        c: big_c.sqrt(),
        d: big_d.sqrt(),
        big_c,
        big_d,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Uniqueness {
    Yes,
    No,
    Open,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignBranch {
    NonnegBetaGamma,
    NonposBetaGamma,
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniquenessVerdict {
    pub epsilon: f64,
    pub unique: Uniqueness,
    pub branch: SignBranch,
    /// Set for `alpha = delta = 0`, `beta, gamma > 0`, where a one-parameter
    /// family of solutions is known.
    pub known_non_unique: bool,
}

/// Uniqueness of the corner-start solution. `No` is reported where no
/// solution exists at all. Accepts unvalidated constants so the degenerate
/// `alpha = delta = 0` case can be queried.
pub fn uniqueness_verdict(p: &Params) -> UniquenessVerdict {
    let Params {
        alpha,
        beta,
        gamma,
        delta,
    } = *p;
    let r = ((beta - gamma).powi(2) + 4.0 * alpha * delta).sqrt();
    let epsilon = (beta * (beta - gamma + r)).min(gamma * (gamma - beta + r));
    let known_non_unique = alpha == 0.0 && delta == 0.0 && beta > 0.0 && gamma > 0.0;
    let (branch, unique) = if beta >= 0.0 && gamma >= 0.0 {
        let yes = !known_non_unique && beta * gamma < 2.0 * alpha * delta + epsilon / 2.0;
        (
            SignBranch::NonnegBetaGamma,
            if yes { Uniqueness::Yes } else { Uniqueness::Open },
        )
    } else if beta <= 0.0 && gamma <= 0.0 {
        let unique = if beta * gamma < alpha * delta {
            Uniqueness::Yes
        } else if no_solution(p) {
            Uniqueness::No
        } else {
            Uniqueness::Open
        };
        (SignBranch::NonposBetaGamma, unique)
    } else {
        (SignBranch::Mixed, Uniqueness::Open)
    };
    UniquenessVerdict {
        epsilon,
        unique,
        branch,
        known_non_unique,
    }
}

/// Member `C` of the solution family of the system with `alpha = delta = 0`.
pub fn zero_alpha_delta_family(
    beta: f64,
    gamma: f64,
    c: f64,
    t: f64,
) -> Result<(f64, f64), DeterministicError> {
    if !(beta > 0.0 && gamma > 0.0 && c > 0.0 && t >= 0.0) {
        return Err(DeterministicError::NonPositiveInputs);
    }
    let s = beta + gamma;
    Ok((c * t.powf(beta / s), s / c * t.powf(gamma / s)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeterministicStart {
    /// Start at the corner, with the first grid point taken from the closed
    /// form.
    ClosedForm,
    PerturbedStart(f64, f64),
}

/// Noise-free implicit integration on `grid`. Row 0 is the starting point.
pub fn integrate_deterministic(
    p: &Params,
    grid: &SimGrid,
    start: DeterministicStart,
) -> Result<PathSample, DeterministicError> {
    let p = p.validate()?;
    if no_solution(&p) {
        return Err(DeterministicError::NoDeterministicSolution(p));
    }
    let dt = grid.dt();
    let n = grid.n_steps();
    let mut out = PathSample::default();
    let (mut x, mut y, mut ix, mut iy, first) = match start {
        DeterministicStart::ClosedForm => {
            let prof = sqrt_profile(&p)?;
            out.push(0.0, 0.0, 0.0, 0.0, 0.0);
            let (x, y) = prof.at(dt);
            let s = dt.sqrt();
            (x, y, 2.0 * s / prof.c, 2.0 * s / prof.d, 1)
        }
        DeterministicStart::PerturbedStart(x0, y0) => {
            if !(x0 > 0.0 && y0 > 0.0 && x0.is_finite() && y0.is_finite()) {
                return Err(DeterministicError::InvalidStart(x0, y0));
            }
            (x0, y0, 0.0, 0.0, 0)
        }
    };
    out.push(grid.time(first), x, y, ix, iy);
    for k in first..n {
        let nx = implicit_bessel_substep(x, p.beta / y, 0.0, dt, p.alpha);
        let ny = implicit_bessel_substep(y, p.gamma / x, 0.0, dt, p.delta);
        ix += 0.5 * dt * (1.0 / x + 1.0 / nx);
        iy += 0.5 * dt * (1.0 / y + 1.0 / ny);
        x = nx;
        y = ny;
        out.push(grid.time(k + 1), x, y, ix, iy);
    }
    Ok(out)
}

/// Continuous piecewise-linear function through `(t_i, v_i)` knots, held
/// constant beyond the last knot.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    knots: Vec<(f64, f64)>,
}

impl PiecewiseLinear {
    /// Knot times must be finite and strictly increasing.
    pub fn new(knots: Vec<(f64, f64)>) -> Option<Self> {
        if knots.is_empty()
            || knots.iter().any(|&(t, v)| !t.is_finite() || !v.is_finite())
            || knots.windows(2).any(|w| w[1].0 <= w[0].0)
        {
            return None;
        }
        Some(Self { knots })
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn eval(&self, t: f64) -> f64 {
        let k = &self.knots;
        if t <= k[0].0 {
            return k[0].1;
        }
        let i = k.partition_point(|&(s, _)| s <= t);
        if i == k.len() {
            return k[i - 1].1;
        }
        let (t0, v0) = k[i - 1];
        let (t1, v1) = k[i];
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }
}

/// Solves `x(t) = v(t) + alpha int_0^t ds/x(s)` on `grid`; returns
/// `n_steps + 1` values starting from `v(0)`.
pub fn comparison_solve(alpha: f64, v: &PiecewiseLinear, grid: &SimGrid) -> Vec<f64> {
    let dt = grid.dt();
    let mut x = v.eval(0.0);
    let mut prev = x;
    let mut out = Vec::with_capacity(grid.n_steps() + 1);
    out.push(x);
    for k in 1..=grid.n_steps() {
        let cur = v.eval(grid.time(k));
        x = implicit_bessel_substep(x, (cur - prev) / dt, 0.0, dt, alpha);
        prev = cur;
        out.push(x);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(a: f64, b: f64, g: f64, d: f64) -> Params {
        Params::new(a, b, g, d)
    }

    #[test]
    fn profile_examples() {
        let s = sqrt_profile(&p(1.0, 0.0, 0.0, 1.0)).unwrap();
        assert!((s.c - 2f64.sqrt()).abs() < 1e-15 && (s.d - 2f64.sqrt()).abs() < 1e-15);
        let q = p(1.0, 1.0, 1.0, 1.0);
        let s = sqrt_profile(&q).unwrap();
        assert!((s.c - 2.0).abs() < 1e-15 && (s.d - 2.0).abs() < 1e-15);
        let (r1, r2) = s.residuals(&q);
        assert!(r1.abs() <= 1e-12 && r2.abs() <= 1e-12);
        let q = p(1.0, -0.5, -0.5, 1.0);
        let s = sqrt_profile(&q).unwrap();
        assert!((s.c - 1.0).abs() < 1e-15 && (s.d - 1.0).abs() < 1e-15);
        assert_eq!(
            sqrt_profile(&p(1.0, -1.0, -1.0, 1.0)),
            Err(DeterministicError::NoDeterministicSolution(p(1.0, -1.0, -1.0, 1.0)))
        );
    }

    #[test]
    fn rationalized_form_agrees_with_direct_form() {
        for q in [p(1.0, -0.5, 0.3, 2.0), p(0.7, -0.2, -1.1, 0.9)] {
            let r = ((q.beta - q.gamma).powi(2) + 4.0 * q.alpha * q.delta).sqrt();
            let direct = 2.0 * q.alpha + q.beta / q.delta * (q.beta - q.gamma + r);
            let rat = profile_square(q.alpha, q.beta, q.gamma, q.delta);
            assert!((direct - rat).abs() < 1e-13 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn uniqueness_examples() {
        let v = uniqueness_verdict(&p(1.0, 1.0, 1.0, 1.0));
        assert_eq!(v.epsilon, 2.0);
        assert_eq!((v.unique, v.branch), (Uniqueness::Yes, SignBranch::NonnegBetaGamma));
        let v = uniqueness_verdict(&p(1.0, -0.5, -0.5, 1.0));
        assert_eq!((v.unique, v.branch), (Uniqueness::Yes, SignBranch::NonposBetaGamma));
        let v = uniqueness_verdict(&p(0.0, 1.0, 1.0, 0.0));
        assert_eq!(v.unique, Uniqueness::Open);
        assert!(v.known_non_unique);
        let v = uniqueness_verdict(&p(1.0, -2.0, -1.0, 1.0));
        assert_eq!(v.unique, Uniqueness::No);
        let v = uniqueness_verdict(&p(1.0, 0.5, -0.5, 1.0));
        assert_eq!((v.unique, v.branch), (Uniqueness::Open, SignBranch::Mixed));
        // Strong positive coupling falls outside the proven threshold.
        let v = uniqueness_verdict(&p(0.1, 5.0, 5.0, 0.1));
        assert_eq!(v.unique, Uniqueness::Open);
    }

    #[test]
    fn family_examples() {
        assert_eq!(zero_alpha_delta_family(1.0, 1.0, 1.0, 4.0).unwrap(), (2.0, 4.0));
        assert_eq!(zero_alpha_delta_family(1.0, 1.0, 2.0, 4.0).unwrap(), (4.0, 2.0));
        assert_eq!(zero_alpha_delta_family(1.0, 1.0, 2.0, 0.0).unwrap(), (0.0, 0.0));
        assert_eq!(
            zero_alpha_delta_family(0.0, 1.0, 1.0, 1.0),
            Err(DeterministicError::NonPositiveInputs)
        );
    }

    #[test]
    fn closed_form_start_tracks_profile() {
        let g = SimGrid::new(1e-5, 1.0).unwrap();
        let path = integrate_deterministic(&p(1.0, 1.0, 1.0, 1.0), &g, DeterministicStart::ClosedForm).unwrap();
        assert_eq!(path.len(), g.n_steps() + 1);
        assert_eq!((path.xs[0], path.ys[0]), (0.0, 0.0));
        let last = path.last_state().unwrap();
        assert!((last.x / 2.0 - 1.0).abs() < 1e-3);
        assert!((last.y / 2.0 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn perturbed_start_relaxes_to_profile() {
        let g = SimGrid::new(1e-5, 1.0).unwrap();
        let path = integrate_deterministic(
            &p(1.0, 0.0, 0.0, 1.0),
            &g,
            DeterministicStart::PerturbedStart(0.1, 0.1),
        )
        .unwrap();
        let last = path.last_state().unwrap();
        assert!((last.x - 2f64.sqrt()).abs() < 1e-2);
        assert!((last.x - 2.01f64.sqrt()).abs() < 1e-4);
    }

    #[test]
    fn piecewise_linear_eval() {
        let v = PiecewiseLinear::new(vec![(0.0, 1.0), (1.0, 3.0), (2.0, 2.0)]).unwrap();
        assert_eq!(v.eval(-1.0), 1.0);
        assert_eq!(v.eval(0.5), 2.0);
        assert_eq!(v.eval(1.0), 3.0);
        assert_eq!(v.eval(1.5), 2.5);
        assert_eq!(v.eval(7.0), 2.0);
        assert!(PiecewiseLinear::new(vec![(0.0, 0.0), (0.0, 1.0)]).is_none());
    }

    #[test]
    fn comparison_zero_driver_is_sqrt_profile() {
        let g = SimGrid::new(1e-6, 1.0).unwrap();
        let zero = PiecewiseLinear::new(vec![(0.0, 0.0)]).unwrap();
        let x = comparison_solve(1.0, &zero, &g);
        assert!((x[g.n_steps()] / 2f64.sqrt() - 1.0).abs() < 1e-3);
        let lin = PiecewiseLinear::new(vec![(0.0, 0.0), (1.0, 1.0)]).unwrap();
        let x2 = comparison_solve(1.0, &lin, &g);
        assert!(x.iter().zip(&x2).all(|(a, b)| a <= b));
    }
}

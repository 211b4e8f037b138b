//! Positivity-preserving time stepping for the obliquely repelled system
//!
//! ```text
//! X_t = X_0 + B_t + alpha int ds/X + beta  int ds/Y - mu t
//! Y_t = Y_0 + C_t + gamma int ds/X + delta int ds/Y - nu t
//! ```
//!
//! The default scheme treats each coordinate's own `1/x` repulsion implicitly
//! (the update is the positive root of a quadratic) and the cross repulsion
//! explicitly with the denominator clamped at `clamp_coeff * sqrt(dt)`. Two
//! truncated systems with Lipschitz cross drifts are provided for
//! cross-validation.

use thiserror::Error;

use crate::model::{Drift, ModelError, Params, PathSample, SimGrid, State};
use crate::regime;
use crate::rng::RngStream;

pub const DEFAULT_CLAMP_COEFF: f64 = 1e-2;
pub const DEFAULT_HIT_COEFF: f64 = 1e-1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("parameters {0} admit no solution; refusing to simulate")]
    RefusedNoSolutionRegime(Params),
    #[error("a start at the corner is not covered for parameters {0}")]
    CornerStartNotPermitted(Params),
    #[error("scheme {scheme} cannot be used here: {reason}")]
    SchemeRegimeMismatch {
        scheme: &'static str,
        reason: String,
    },
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
}

/// Time-stepping scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SchemeKind {
    ImplicitBessel,
    /// Truncated system in the variables `(X, Z = alpha Y - gamma X)` with the
    /// cross repulsion replaced by `1 / max(gamma x + z, alpha epsilon)`.
    TruncatedPsi { epsilon: f64 },
    /// Cross repulsions replaced by the bounded Lipschitz approximation
    /// `h_n` of `1/x`.
    TruncatedHn { n: u32 },
}

impl SchemeKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::ImplicitBessel => "implicit_bessel",
            Self::TruncatedPsi { .. } => "truncated_psi",
            Self::TruncatedHn { .. } => "truncated_hn",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub params: Params,
    pub drift: Drift,
    pub x0: f64,
    pub y0: f64,
    pub grid: SimGrid,
    pub scheme: SchemeKind,
    /// Cross-drift denominators are clamped at `clamp_coeff * sqrt(dt)`.
    pub clamp_coeff: f64,
    /// A coordinate below `hit_coeff * sqrt(dt)` counts as a boundary hit.
    pub hit_coeff: f64,
    /// Record every `record_stride`-th step (the last step is always kept).
    pub record_stride: usize,
    /// Bypass the regime checks (no-solution refusal, corner start).
    pub force: bool,
}

impl SimConfig {
    pub fn new(params: Params, grid: SimGrid) -> Self {
        Self {
            params,
            drift: Drift::NONE,
            x0: 1.0,
            y0: 1.0,
            grid,
            scheme: SchemeKind::ImplicitBessel,
            clamp_coeff: DEFAULT_CLAMP_COEFF,
            hit_coeff: DEFAULT_HIT_COEFF,
            record_stride: 1,
            force: false,
        }
    }

    pub fn with_start(mut self, x0: f64, y0: f64) -> Self {
        self.x0 = x0;
        self.y0 = y0;
        self
    }

    pub fn with_drift(mut self, drift: Drift) -> Self {
        self.drift = drift;
        self
    }

    pub fn with_scheme(mut self, scheme: SchemeKind) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_hit_coeff(mut self, hit_coeff: f64) -> Self {
        self.hit_coeff = hit_coeff;
        self
    }

    pub fn with_clamp_coeff(mut self, clamp_coeff: f64) -> Self {
        self.clamp_coeff = clamp_coeff;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride;
        self
    }

    /// Record only the initial and final states.
    pub fn endpoints_only(mut self) -> Self {
        self.record_stride = self.grid.n_steps().max(1);
        self
    }

    pub fn forced(mut self) -> Self {
        self.force = true;
        self
    }
}

/// Positive root `x'` of `x' = x + dw + b_extra dt + alpha dt / x'`.
///
/// Always strictly positive; the negative-`b` branch is written in the
/// cancellation-free form.
#[inline]
pub fn implicit_bessel_substep(x: f64, b_extra: f64, dw: f64, dt: f64, alpha: f64) -> f64 {
    positive_root(x + dw + b_extra * dt, alpha * dt)
}

/// Positive root of `r^2 - b r - c = 0` for `c > 0`.
#[inline]
fn positive_root(b: f64, c: f64) -> f64 {
    let disc = (b * b + 4.0 * c).sqrt();
    if b >= 0.0 {
        0.5 * (b + disc)
    } else {
        2.0 * c / (disc - b)
    }
}

/// One implicit-Bessel step of the full system.
pub fn step(s: State, dw: f64, dc: f64, cfg: &SimConfig) -> State {
    let dt = cfg.grid.dt();
    let floor = cfg.clamp_coeff * dt.sqrt();
    let p = &cfg.params;
    let bx = p.beta / s.y.max(floor) - cfg.drift.mu;
    let by = p.gamma / s.x.max(floor) - cfg.drift.nu;
    State {
        x: implicit_bessel_substep(s.x, bx, dw, dt, p.alpha),
        y: implicit_bessel_substep(s.y, by, dc, dt, p.delta),
        t: s.t + dt,
    }
}

/// `h_n(x) = (1 - 1/n) / x` on `[1/n, inf)` and `n - 1` below.
#[inline]
pub fn truncated_inverse(n: f64, x: f64) -> f64 {
    if x >= 1.0 / n {
        (1.0 - 1.0 / n) / x
    } else {
        n - 1.0
    }
}

#[derive(Debug, Clone, Copy)]
enum Kernel {
    Implicit,
    Psi { eps: f64 },
    Hn { n: f64 },
}

/// Internal integration state. `z` is only used by the psi scheme.
#[derive(Debug, Clone, Copy)]
struct Cursor {
    x: f64,
    y: f64,
    z: f64,
}

/// A validated configuration ready to integrate any number of paths.
#[derive(Debug, Clone)]
pub struct Simulator {
    cfg: SimConfig,
    kernel: Kernel,
    floor: f64,
    threshold: f64,
}

impl Simulator {
    pub fn new(cfg: SimConfig) -> Result<Self, SimError> {
        let p = cfg.params.validate()?;
        cfg.drift.validate()?;
        for (name, v) in [("x0", cfg.x0), ("y0", cfg.y0)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(SimError::InvalidConfig(format!(
                    "{name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        for (name, v) in [("clamp_coeff", cfg.clamp_coeff), ("hit_coeff", cfg.hit_coeff)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(SimError::InvalidConfig(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if cfg.record_stride == 0 {
            return Err(SimError::InvalidConfig("record_stride must be at least 1".into()));
        }
        let kernel = match cfg.scheme {
            SchemeKind::ImplicitBessel => Kernel::Implicit,
            SchemeKind::TruncatedPsi { epsilon } => {
                if !(epsilon.is_finite() && epsilon > 0.0) {
                    return Err(SimError::InvalidConfig(format!(
                        "epsilon must be positive, got {epsilon}"
                    )));
                }
                let ok = (p.beta >= 0.0 && p.gamma >= 0.0) || (p.beta > 0.0 && p.gamma < 0.0);
                if !ok {
                    return Err(SimError::SchemeRegimeMismatch {
                        scheme: cfg.scheme.name(),
                        reason: "requires beta >= 0, gamma >= 0 or beta > 0, gamma < 0".into(),
                    });
                }
                Kernel::Psi { eps: epsilon }
            }
            SchemeKind::TruncatedHn { n } => {
                if n < 1 {
                    return Err(SimError::InvalidConfig("n_trunc must be at least 1".into()));
                }
                if !(p.beta <= 0.0 && p.gamma < 0.0) {
                    return Err(SimError::SchemeRegimeMismatch {
                        scheme: cfg.scheme.name(),
                        reason: "requires beta <= 0 and gamma < 0".into(),
                    });
                }
                Kernel::Hn { n: n as f64 }
            }
        };
        if !cfg.force {
            if regime::has_no_solution(&p) {
                return Err(SimError::RefusedNoSolutionRegime(p));
            }
            if cfg.x0 == 0.0
                && cfg.y0 == 0.0
                && !regime::classify_existence(&p).permits_corner_start()
            {
                return Err(SimError::CornerStartNotPermitted(p));
            }
        }
        let sqrt_dt = cfg.grid.dt().sqrt();
        Ok(Self {
            cfg,
            kernel,
            floor: cfg.clamp_coeff * sqrt_dt,
            threshold: cfg.hit_coeff * sqrt_dt,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    /// Numerical hitting threshold `hit_coeff * sqrt(dt)`.
    pub fn hit_threshold(&self) -> f64 {
        self.threshold
    }

    fn start(&self) -> Cursor {
        let p = &self.cfg.params;
        Cursor {
            x: self.cfg.x0,
            y: self.cfg.y0,
            z: p.alpha * self.cfg.y0 - p.gamma * self.cfg.x0,
        }
    }

    #[inline]
    fn advance(&self, c: &mut Cursor, dw: f64, dc: f64) {
        let p = &self.cfg.params;
        let d = &self.cfg.drift;
        let dt = self.cfg.grid.dt();
        match self.kernel {
            Kernel::Implicit => {
                let bx = p.beta / c.y.max(self.floor) - d.mu;
                let by = p.gamma / c.x.max(self.floor) - d.nu;
                c.x = implicit_bessel_substep(c.x, bx, dw, dt, p.alpha);
                c.y = implicit_bessel_substep(c.y, by, dc, dt, p.delta);
            }
            Kernel::Psi { eps } => {
                let psi = 1.0 / (p.gamma * c.x + c.z).max(p.alpha * eps);
                let bx = p.alpha * p.beta * psi - d.mu;
                c.x = implicit_bessel_substep(c.x, bx, dw, dt, p.alpha);
                c.z += -p.gamma * dw
                    + p.alpha * dc
                    + (p.alpha * p.determinant() * psi + p.gamma * d.mu - p.alpha * d.nu) * dt;
                c.y = (p.gamma * c.x + c.z) / p.alpha;
            }
            Kernel::Hn { n } => {
                let bx = p.beta * truncated_inverse(n, c.y) - d.mu;
                let by = p.gamma * truncated_inverse(n, c.x) - d.nu;
                c.x = implicit_bessel_substep(c.x, bx, dw, dt, p.alpha);
                c.y = implicit_bessel_substep(c.y, by, dc, dt, p.delta);
            }
        }
    }

    /// Integrates one path over the grid from the given increments. Panics if
    /// the iterator yields fewer than `n_steps` pairs.
    pub fn run<I>(&self, increments: I) -> PathSample
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        let grid = &self.cfg.grid;
        let n = grid.n_steps();
        let dt = grid.dt();
        let stride = self.cfg.record_stride;
        let inv = |v: f64| 1.0 / v.max(self.floor);

        let mut out = PathSample::default();
        let cap = n / stride + 2;
        out.times.reserve(cap);
        out.xs.reserve(cap);
        out.ys.reserve(cap);
        out.int_inv_x.reserve(cap);
        out.int_inv_y.reserve(cap);

        let mut c = self.start();
        let (mut ix, mut iy) = (0.0, 0.0);
        out.push(0.0, c.x, c.y, ix, iy);
        let mut incs = increments.into_iter();
        for k in 1..=n {
            let (dw, dc) = incs
                .next()
                .expect("increment source exhausted before the end of the grid");
            let (px, py) = (c.x, c.y);
            self.advance(&mut c, dw, dc);
            ix += 0.5 * dt * (inv(px) + inv(c.x));
            iy += 0.5 * dt * (inv(py) + inv(c.y));
            let t = grid.time(k);
            let hx = c.x < self.threshold;
            let hy = c.y < self.threshold;
            if hx && out.x_hit.is_none() {
                out.x_hit = Some(t);
            }
            if hy && out.y_hit.is_none() {
                out.y_hit = Some(t);
            }
            if hx && hy && out.corner_hit.is_none() {
                out.corner_hit = Some(t);
            }
            if k % stride == 0 || k == n {
                out.push(t, c.x, c.y, ix, iy);
            }
        }
        out
    }

    pub fn run_stream(&self, stream: RngStream) -> PathSample {
        self.run(stream.increments(self.cfg.grid.dt()))
    }

    /// Unbounded sequence of post-step `(x, y)` states, ignoring the grid
    /// horizon. Used for long ergodic runs.
    pub fn states<'a, I>(&'a self, increments: I) -> impl Iterator<Item = (f64, f64)> + 'a
    where
        I: IntoIterator<Item = (f64, f64)>,
        I::IntoIter: 'a,
    {
        let mut c = self.start();
        increments.into_iter().map(move |(dw, dc)| {
            self.advance(&mut c, dw, dc);
            (c.x, c.y)
        })
    }
}

/// Simulates one path of any scheme from a keyed noise stream.
pub fn simulate_path(cfg: &SimConfig, stream: RngStream) -> Result<PathSample, SimError> {
    Ok(Simulator::new(*cfg)?.run_stream(stream))
}

/// Simulates one path from explicit increments.
pub fn simulate_with_increments(
    cfg: &SimConfig,
    increments: &[(f64, f64)],
) -> Result<PathSample, SimError> {
    if increments.len() < cfg.grid.n_steps() {
        return Err(SimError::InvalidConfig(format!(
            "{} increments supplied for {} steps",
            increments.len(),
            cfg.grid.n_steps()
        )));
    }
    Ok(Simulator::new(*cfg)?.run(increments.iter().copied()))
}

/// Like [`simulate_path`] but only for the truncated schemes.
pub fn simulate_truncated(cfg: &SimConfig, stream: RngStream) -> Result<PathSample, SimError> {
    if cfg.scheme == SchemeKind::ImplicitBessel {
        return Err(SimError::SchemeRegimeMismatch {
            scheme: cfg.scheme.name(),
            reason: "not a truncated scheme".into(),
        });
    }
    simulate_path(cfg, stream)
}

/// Brownian rescaling `(t, X, Y) -> (t / c^2, X / c, Y / c)`.
pub fn rescale_path(path: &PathSample, c: f64) -> PathSample {
    assert!(c > 0.0, "scale factor must be positive");
    let c2 = c * c;
    let div = |v: &Vec<f64>, k: f64| v.iter().map(|a| a / k).collect();
    PathSample {
        times: div(&path.times, c2),
        xs: div(&path.xs, c),
        ys: div(&path.ys, c),
        int_inv_x: div(&path.int_inv_x, c),
        int_inv_y: div(&path.int_inv_y, c),
        x_hit: path.x_hit.map(|t| t / c2),
        y_hit: path.y_hit.map(|t| t / c2),
        corner_hit: path.corner_hit.map(|t| t / c2),
    }
}

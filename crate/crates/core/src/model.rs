//! Shared domain types: repulsion constants, drift, states, time grids and
//! recorded trajectories.

use std::fmt;
use std::io::{self, Write};

use thiserror::Error;

/// Errors raised while validating model inputs.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("alpha and delta must be strictly positive (alpha = {alpha}, delta = {delta})")]
    NonPositiveAlphaDelta { alpha: f64, delta: f64 },
    #[error("parameter `{0}` is not finite")]
    NonFiniteParameter(&'static str),
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),
}

/// The four repulsion constants.
///
/// `alpha` and `delta` weight the repulsion of each coordinate from its own
/// side; `beta` is the push the `y = 0` side exerts on `x`, and `gamma` the
/// push the `x = 0` side exerts on `y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl Params {
    pub const fn new(alpha: f64, beta: f64, gamma: f64, delta: f64) -> Self {
        Self {
            alpha,
            beta,
            gamma,
            delta,
        }
    }

    /// Returns `self` unchanged when every constant is finite and the
    /// diagonal is strictly positive.
    pub fn validate(self) -> Result<Self, ModelError> {
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("delta", self.delta),
        ] {
            if !v.is_finite() {
                return Err(ModelError::NonFiniteParameter(name));
            }
        }
        if self.alpha <= 0.0 || self.delta <= 0.0 {
            return Err(ModelError::NonPositiveAlphaDelta {
                alpha: self.alpha,
                delta: self.delta,
            });
        }
        Ok(self)
    }

    /// Parameters of the system after relabelling `X <-> Y`.
    pub fn swapped(self) -> Self {
        Self::new(self.delta, self.gamma, self.beta, self.alpha)
    }

    /// `alpha * delta - beta * gamma`.
    pub fn determinant(&self) -> f64 {
        self.alpha * self.delta - self.beta * self.gamma
    }
}

impl fmt::Display for Params {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(alpha={}, beta={}, gamma={}, delta={})",
            self.alpha, self.beta, self.gamma, self.delta
        )
    }
}

pub fn validate_params(p: Params) -> Result<Params, ModelError> {
    p.validate()
}

/// Constant drift magnitudes; the process is pulled by `(-mu, -nu)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Drift {
    pub mu: f64,
    pub nu: f64,
}

impl Drift {
    pub const NONE: Drift = Drift { mu: 0.0, nu: 0.0 };

    pub const fn new(mu: f64, nu: f64) -> Self {
        Self { mu, nu }
    }

    pub fn validate(self) -> Result<Self, ModelError> {
        if !self.mu.is_finite() {
            return Err(ModelError::NonFiniteParameter("mu"));
        }
        if !self.nu.is_finite() {
            return Err(ModelError::NonFiniteParameter("nu"));
        }
        Ok(self)
    }

    pub fn is_zero(&self) -> bool {
        self.mu == 0.0 && self.nu == 0.0
    }
}

/// A point of the quadrant at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

impl State {
    pub const fn new(x: f64, y: f64, t: f64) -> Self {
        Self { x, y, t }
    }

    pub fn is_corner(&self) -> bool {
        self.x == 0.0 && self.y == 0.0
    }
}

/// Uniform time grid on `[0, t_end]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimGrid {
    dt: f64,
    t_end: f64,
    n_steps: usize,
}

impl SimGrid {
    pub fn new(dt: f64, t_end: f64) -> Result<Self, ModelError> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(ModelError::InvalidGrid(format!("dt must be positive, got {dt}")));
        }
        if !(t_end.is_finite() && t_end > 0.0) {
            return Err(ModelError::InvalidGrid(format!(
                "t_end must be positive, got {t_end}"
            )));
        }
        if dt > t_end {
            return Err(ModelError::InvalidGrid(format!(
                "dt = {dt} exceeds t_end = {t_end}"
            )));
        }
        // t_end / dt is frequently an integer polluted by one ulp.
        let ratio = t_end / dt;
        let rounded = ratio.round();
        let n = if (ratio - rounded).abs() <= 1e-9 * rounded {
            rounded
        } else {
            ratio.ceil()
        };
        Ok(Self {
            dt,
            t_end,
            n_steps: n as usize,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Grid time of step `k`.
    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }
}

/// A recorded trajectory with the running singular integrals and first
/// numerical hitting times.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PathSample {
    pub times: Vec<f64>,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// Running trapezoidal estimate of `int_0^t ds / X_s`.
    pub int_inv_x: Vec<f64>,
    /// Running trapezoidal estimate of `int_0^t ds / Y_s`.
    pub int_inv_y: Vec<f64>,
    pub x_hit: Option<f64>,
    pub y_hit: Option<f64>,
    pub corner_hit: Option<f64>,
}

impl PathSample {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_state(&self) -> Option<State> {
        let i = self.len().checked_sub(1)?;
        Some(State::new(self.xs[i], self.ys[i], self.times[i]))
    }

    pub fn final_int_inv(&self) -> (f64, f64) {
        (
            self.int_inv_x.last().copied().unwrap_or(0.0),
            self.int_inv_y.last().copied().unwrap_or(0.0),
        )
    }

    pub(crate) fn push(&mut self, t: f64, x: f64, y: f64, ix: f64, iy: f64) {
        self.times.push(t);
        self.xs.push(x);
        self.ys.push(y);
        self.int_inv_x.push(ix);
        self.int_inv_y.push(iy);
    }

    /// Keeps every `stride`-th row plus the last one.
    pub fn thinned(&self, stride: usize) -> PathSample {
        let stride = stride.max(1);
        let n = self.len();
        let keep: Vec<usize> = (0..n)
            .filter(|&i| i % stride == 0 || i + 1 == n)
            .collect();
        let pick = |v: &Vec<f64>| keep.iter().map(|&i| v[i]).collect();
        PathSample {
            times: pick(&self.times),
            xs: pick(&self.xs),
            ys: pick(&self.ys),
            int_inv_x: pick(&self.int_inv_x),
            int_inv_y: pick(&self.int_inv_y),
            ..self.clone()
        }
    }

    /// Writes the `t,x,y,int_inv_x,int_inv_y` table.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,x,y,int_inv_x,int_inv_y")?;
        for i in 0..self.len() {
            writeln!(
                w,
                "{},{},{},{},{}",
                crate::csv::fmt_f64(self.times[i]),
                crate::csv::fmt_f64(self.xs[i]),
                crate::csv::fmt_f64(self.ys[i]),
                crate::csv::fmt_f64(self.int_inv_x[i]),
                crate::csv::fmt_f64(self.int_inv_y[i]),
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv output is ascii")
    }
}

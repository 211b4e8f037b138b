//! Qualitative classification of a parameter set: whether the corner can be
//! reached, whether each side can be reached, and whether the system has a
//! (unique) solution.
//!
//! Every verdict is one-sided. `Unknown` and `Unproven` mean that none of the
//! known sufficient conditions applies, not that the opposite holds.

use std::fmt;

use thiserror::Error;

use crate::model::Params;

/// Default number of interior grid points scanned by [`search_c3`].
pub const C3_GRID_POINTS: usize = 10_001;
/// Default final bracket width of the golden-section refinement.
pub const C3_REFINE_TOL: f64 = 1e-9;

/// Relative slack applied to the product condition of the two-side test so
/// that exact-arithmetic equalities such as `0.01 <= 0.01` survive rounding.
const SIDE_PRODUCT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegimeError {
    #[error("weights must be strictly positive, got lambda = {lambda}, mu = {mu}")]
    NonPositiveWeights { lambda: f64, mu: f64 },
}

/// The sufficient conditions for the corner to be polar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CornerCondition {
    /// `beta >= 0` and `gamma >= 0`.
    C1,
    /// `alpha >= 1/2` and `beta >= 0`.
    C2a,
    /// `delta >= 1/2` and `gamma >= 0`.
    C2b,
    /// Some positive weights make the log-linear Lyapunov polynomial
    /// nonnegative on the quadrant.
    C3,
}

impl CornerCondition {
    pub fn label(self) -> &'static str {
        match self {
            Self::C1 => "C1",
            Self::C2a => "C2a",
            Self::C2b => "C2b",
            Self::C3 => "C3",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CornerVerdict {
    PolarProven,
    Unknown,
}

/// Positive weights `(lambda, mu)` certifying the `C3` condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct C3Witness {
    pub lambda: f64,
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CornerReport {
    pub verdict: CornerVerdict,
    /// Satisfied conditions in `C1, C2a, C2b, C3` order.
    pub satisfied: Vec<CornerCondition>,
    pub c3_witness: Option<C3Witness>,
}

impl CornerReport {
    pub fn holds(&self, c: CornerCondition) -> bool {
        self.satisfied.contains(&c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SideVerdict {
    NeverHits,
    HitsAlmostSurely,
    NeverHitsGivenCornerPolar,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SideReport {
    pub x_side: SideVerdict,
    pub y_side: SideVerdict,
    pub both_sides_never: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Unique solution for every start off the corner.
    UniqueInPuncturedS,
    /// Unique solution for every start in the closed quadrant.
    UniqueInS,
    /// Unique off the corner; a corner start has a solution whose
    /// uniqueness is not established.
    ExistsInSUniquenessUnproven,
    /// No solution exists for any start.
    NoSolution,
    Unproven,
}

/// Which sign pattern of the couplings decided the existence verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExistenceCase {
    /// `beta >= 0`, `gamma >= 0`.
    NonnegativeCoupling,
    /// `beta > 0`, `gamma < 0`.
    OpposedCoupling,
    /// `beta < 0`, `gamma > 0`, decided on the relabelled system.
    OpposedCouplingSwapped,
    /// `beta <= 0`, `gamma < 0`, or its mirror `beta < 0`, `gamma <= 0`.
    NonpositiveCoupling,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExistenceReport {
    pub regime: Regime,
    pub case: ExistenceCase,
    pub notes: String,
}

impl ExistenceReport {
    /// Whether a start at the corner is covered by the verdict.
    pub fn permits_corner_start(&self) -> bool {
        matches!(
            self.regime,
            Regime::UniqueInS | Regime::ExistsInSUniquenessUnproven
        )
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::UniqueInPuncturedS => "unique_in_punctured_quadrant",
            Self::UniqueInS => "unique_in_quadrant",
            Self::ExistsInSUniquenessUnproven => "exists_in_quadrant_uniqueness_unproven",
            Self::NoSolution => "no_solution",
            Self::Unproven => "unproven",
        })
    }
}

impl fmt::Display for ExistenceCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::NonnegativeCoupling => "nonnegative_coupling",
            Self::OpposedCoupling => "opposed_coupling",
            Self::OpposedCouplingSwapped => "opposed_coupling_swapped",
            Self::NonpositiveCoupling => "nonpositive_coupling",
        })
    }
}

impl fmt::Display for SideVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::NeverHits => "never_hits",
            Self::HitsAlmostSurely => "hits_almost_surely",
            Self::NeverHitsGivenCornerPolar => "never_hits_given_corner_polar",
            Self::Unknown => "unknown",
        })
    }
}

impl fmt::Display for CornerVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::PolarProven => "polar_proven",
            Self::Unknown => "unknown",
        })
    }
}

pub fn check_c1(p: &Params) -> bool {
    p.beta >= 0.0 && p.gamma >= 0.0
}

/// Returns `(C2a, C2b)`.
pub fn check_c2(p: &Params) -> (bool, bool) {
    (
        p.alpha >= 0.5 && p.beta >= 0.0,
        p.delta >= 0.5 && p.gamma >= 0.0,
    )
}

/// Exact evaluation of the `C3` inequalities at weights `(lambda, mu)`.
///
/// With `A = lambda (lambda beta + mu delta)`, `B = mu (lambda alpha + mu gamma)`
/// and `C` the mixed coefficient, this is the statement that
/// `P(x, y) = A x^2 + B y^2 + C x y` is nonnegative on the quadrant.
pub fn c3_holds_at(p: &Params, lambda: f64, mu: f64) -> Result<bool, RegimeError> {
    if !(lambda > 0.0 && mu > 0.0) {
        return Err(RegimeError::NonPositiveWeights { lambda, mu });
    }
    Ok(c3_inequalities(p, lambda, mu))
}

#[inline]
fn c3_inequalities(p: &Params, lambda: f64, mu: f64) -> bool {
    let rx = lambda * p.alpha + mu * p.gamma;
    let ry = lambda * p.beta + mu * p.delta;
    if rx < 0.0 || ry < 0.0 {
        return false;
    }
    let mixed = lambda * rx + mu * ry - 0.5 * (lambda * lambda + mu * mu);
    mixed >= -2.0 * (lambda * mu * ry * rx).sqrt()
}

/// Signed slack of the weakest `C3` inequality; nonnegative iff all hold.
fn c3_margin(p: &Params, lambda: f64, mu: f64) -> f64 {
    let rx = lambda * p.alpha + mu * p.gamma;
    let ry = lambda * p.beta + mu * p.delta;
    let mixed = lambda * rx + mu * ry - 0.5 * (lambda * lambda + mu * mu);
    let cross = 2.0 * (lambda * mu * rx.max(0.0) * ry.max(0.0)).sqrt();
    rx.min(ry).min(mixed + cross)
}

/// Semi-decision for `C3`.
///
/// All three expressions are homogeneous in `(lambda, mu)`, so the search runs
/// over `lambda in (0, 1)`, `mu = 1 - lambda`: first on a uniform grid of
/// `grid_points` interior points, then by golden-section maximisation of the
/// weakest-inequality margin around the best grid point. A returned witness
/// always passes [`c3_holds_at`]; `None` means "not established".
pub fn search_c3(p: &Params, grid_points: usize, refine_tol: f64) -> Option<C3Witness> {
    let n = grid_points.max(2);
    let h = 1.0 / (n + 1) as f64;
    let mut best = (f64::NEG_INFINITY, 1usize);
    for i in 1..=n {
        let lambda = i as f64 * h;
        let mu = 1.0 - lambda;
        if c3_inequalities(p, lambda, mu) {
            return Some(C3Witness { lambda, mu });
        }
        let m = c3_margin(p, lambda, mu);
        if m > best.0 {
            best = (m, i);
        }
    }

    let center = best.1 as f64 * h;
    let mut lo = (center - h).max(f64::MIN_POSITIVE);
    let mut hi = (center + h).min(1.0 - f64::EPSILON);
    let f = |l: f64| c3_margin(p, l, 1.0 - l);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - inv_phi * (hi - lo);
    let mut b = lo + inv_phi * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    let tol = refine_tol.max(f64::EPSILON);
    while hi - lo > tol {
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + inv_phi * (hi - lo);
            fb = f(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - inv_phi * (hi - lo);
            fa = f(a);
        }
    }
    [0.5 * (lo + hi), a, b, lo, hi]
        .into_iter()
        .filter(|&l| l > 0.0 && l < 1.0)
        .find(|&l| c3_inequalities(p, l, 1.0 - l))
        .map(|lambda| C3Witness {
            lambda,
            mu: 1.0 - lambda,
        })
}

pub fn classify_corner(p: &Params) -> CornerReport {
    let mut satisfied = Vec::new();
    if check_c1(p) {
        satisfied.push(CornerCondition::C1);
    }
    let (c2a, c2b) = check_c2(p);
    if c2a {
        satisfied.push(CornerCondition::C2a);
    }
    if c2b {
        satisfied.push(CornerCondition::C2b);
    }
    let c3_witness = search_c3(p, C3_GRID_POINTS, C3_REFINE_TOL);
    if c3_witness.is_some() {
        satisfied.push(CornerCondition::C3);
    }
    let verdict = if satisfied.is_empty() {
        CornerVerdict::Unknown
    } else {
        CornerVerdict::PolarProven
    };
    CornerReport {
        verdict,
        satisfied,
        c3_witness,
    }
}

fn side_verdict(own: f64, coupling: f64, corner_polar: bool) -> SideVerdict {
    if own >= 0.5 && coupling >= 0.0 {
        SideVerdict::NeverHits
    } else if own < 0.5 && coupling <= 0.0 {
        SideVerdict::HitsAlmostSurely
    } else if corner_polar && own >= 0.5 {
        SideVerdict::NeverHitsGivenCornerPolar
    } else {
        SideVerdict::Unknown
    }
}

pub fn classify_sides(p: &Params, corner: &CornerReport) -> SideReport {
    let polar = corner.verdict == CornerVerdict::PolarProven;
    let x_side = side_verdict(p.alpha, p.beta, polar);
    let y_side = side_verdict(p.delta, p.gamma, polar);
    let excess = (p.alpha - 0.5) * (p.delta - 0.5);
    let product = p.beta * p.gamma;
    let slack = SIDE_PRODUCT_SLACK * product.abs().max(excess.abs());
    let both_sides_never = p.alpha >= 0.5
        && p.delta >= 0.5
        && (p.beta > 0.0 || p.gamma > 0.0 || product <= excess + slack);
    SideReport {
        x_side,
        y_side,
        both_sides_never,
    }
}

pub fn classify_existence(p: &Params) -> ExistenceReport {
    let (b, g) = (p.beta, p.gamma);
    if b >= 0.0 && g >= 0.0 {
        let det = p.determinant();
        let (regime, notes) = if det >= 0.0 {
            (
                Regime::UniqueInS,
                "alpha*delta >= beta*gamma: unique in the closed quadrant, corner start included",
            )
        } else {
            (
                Regime::ExistsInSUniquenessUnproven,
                "unique off the corner; a corner start has a solution, uniqueness from the corner unproven",
            )
        };
        return ExistenceReport {
            regime,
            case: ExistenceCase::NonnegativeCoupling,
            notes: notes.to_string(),
        };
    }
    if b > 0.0 && g < 0.0 {
        return opposed(p, ExistenceCase::OpposedCoupling);
    }
    if b < 0.0 && g > 0.0 {
        return opposed(&p.swapped(), ExistenceCase::OpposedCouplingSwapped);
    }
    // Remaining: beta <= 0 and gamma <= 0 with at least one strictly negative.
    let det = p.determinant();
    if det > 0.0 {
        ExistenceReport {
            regime: Regime::UniqueInS,
            case: ExistenceCase::NonpositiveCoupling,
            notes: "alpha*delta > beta*gamma: a convex combination of the repulsion directions points into the quadrant".to_string(),
        }
    } else {
        ExistenceReport {
            regime: Regime::NoSolution,
            case: ExistenceCase::NonpositiveCoupling,
            notes: "alpha*delta <= beta*gamma: a positive combination of the coordinates is bounded above by Brownian motion".to_string(),
        }
    }
}

/// `beta > 0`, `gamma < 0` on (possibly relabelled) parameters.
fn opposed(p: &Params, case: ExistenceCase) -> ExistenceReport {
    let (c2a, _) = check_c2(p);
    if c2a {
        return ExistenceReport {
            regime: Regime::UniqueInPuncturedS,
            case,
            notes: "corner polar via the strong own-side repulsion of the positively coupled coordinate".to_string(),
        };
    }
    match search_c3(p, C3_GRID_POINTS, C3_REFINE_TOL) {
        Some(w) => ExistenceReport {
            regime: Regime::UniqueInPuncturedS,
            case,
            notes: format!(
                "corner polar via C3 witness (lambda={}, mu={})",
                w.lambda, w.mu
            ),
        },
        None => ExistenceReport {
            regime: Regime::Unproven,
            case,
            notes: "neither C2 nor C3 established; existence not proven".to_string(),
        },
    }
}

/// Cheap test used by the integrators: true exactly when
/// [`classify_existence`] reports [`Regime::NoSolution`].
pub fn has_no_solution(p: &Params) -> bool {
    p.beta < 0.0 && p.gamma < 0.0 && p.determinant() <= 0.0
}

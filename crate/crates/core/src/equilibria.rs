//! Geometry of the equilibrium set.
//!
//! Rest points satisfy `v = 0` and `h1(x) = −h2(z)`, so their `(x, z)`
//! projection is the graph of the strictly decreasing curve
//! `H(x) = h2⁻¹(−h1(x))` through the origin.

use std::cell::RefCell;

use serde::{Deserialize, Serialize};

use crate::error::{DuhemError, Result};
use crate::model::{DuhemSystem, ScalarFunction, State};
use crate::numeric::{bisect, invert_increasing, scan_then_golden};

pub const MAX_DOUBLINGS: u32 = 1000;
/// Grid resolution of the coarse scan preceding golden-section refinement.
pub const DIST_SCAN_POINTS: usize = 400;

#[derive(Clone, Debug)]
pub struct EquilibriumCurve {
    h1: ScalarFunction,
    h2: ScalarFunction,
}

pub fn curve(sys: &DuhemSystem) -> Result<EquilibriumCurve> {
    let c = EquilibriumCurve {
        h1: sys.h1().clone(),
        h2: sys.h2().clone(),
    };
    let h0 = c.h(0.0)?;
    if h0.abs() > 1e-12 {
        return Err(DuhemError::InvalidParams(format!("H(0) = {h0}, expected 0")));
    }
    Ok(c)
}

impl EquilibriumCurve {
    /// `H(x) = h2⁻¹(−h1(x))`.
    pub fn h(&self, x: f64) -> Result<f64> {
        let y = -self.h1.eval(x);
        if !y.is_finite() {
            return Err(DuhemError::NonFiniteEvaluation {
                function: "h1".into(),
                at: vec![x],
            });
        }
        match self.h2.invert(y) {
            Some(z) => Ok(z),
            None => invert_increasing(|u| self.h2.eval(u), y, "h2", MAX_DOUBLINGS),
        }
    }

    /// `(x, H(x))` at `n + 1` evenly spaced abscissae of `[lo, hi]`.
    pub fn samples(&self, lo: f64, hi: f64, n: usize) -> Result<Vec<(f64, f64)>> {
        let n = n.max(1);
        (0..=n)
            .map(|i| {
                let x = if i == n {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / n as f64
                };
                Ok((x, self.h(x)?))
            })
            .collect()
    }

    /// Distance from `(x, z)` to the graph of `H`.
    ///
    /// The origin lies on the graph, so any minimizer `a` satisfies
    /// `|a − x| ≤ r = ‖(x, z)‖`; the search runs over `[x − r, x + r]`.
    pub fn distance(&self, x: f64, z: f64) -> Result<Distance> {
        let r = x.hypot(z);
        if r == 0.0 {
            return Ok(Distance {
                distance: 0.0,
                argmin: (0.0, 0.0),
                bracket: (0.0, 0.0),
            });
        }
        let failure: RefCell<Option<DuhemError>> = RefCell::new(None);
        let sq = |a: f64| match self.h(a) {
            Ok(ha) => (a - x).powi(2) + (ha - z).powi(2),
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::INFINITY
            }
        };
        let (lo, hi) = (x - r, x + r);
        let m = scan_then_golden(sq, lo, hi, DIST_SCAN_POINTS, 1e-13 * r.max(1.0));
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        let a = m.x;
        let ha = self.h(a)?;
        Ok(Distance {
            distance: (a - x).hypot(ha - z),
            argmin: (a, ha),
            bracket: (lo, hi),
        })
    }

    /// Root `a` of `H(a) = a + L`, returned as the rest point `(a, a + L, 0)`.
    pub fn predict_limit(&self, l: f64) -> Result<LimitPrediction> {
        if !l.is_finite() {
            return Err(DuhemError::BracketFailure { l });
        }
        let phi = |a: f64| self.h(a).map(|ha| ha - a - l);
        let mut b = 1.0f64;
        let mut doublings = 0;
        let (lo, hi) = loop {
            let (lo, hi) = if l >= 0.0 {
                (-l.abs() - b, 0.0)
            } else {
                (0.0, l.abs() + b)
            };
            let (plo, phi_hi) = match (phi(lo), phi(hi)) {
                (Ok(a), Ok(b)) => (a, b),
                (Err(DuhemError::InversionFailure { .. }), _) | (_, Err(DuhemError::InversionFailure { .. })) => {
                    return Err(DuhemError::BracketFailure { l })
                }
                (Err(e), _) | (_, Err(e)) => return Err(e),
            };
            if plo >= 0.0 && phi_hi <= 0.0 {
                break (lo, hi);
            }
            doublings += 1;
            b *= 2.0;
            if doublings > MAX_DOUBLINGS || !b.is_finite() {
                return Err(DuhemError::BracketFailure { l });
            }
        };
        let failure: RefCell<Option<DuhemError>> = RefCell::new(None);
        let root = bisect(
            |a| match phi(a) {
                Ok(p) => p,
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    f64::NAN
                }
            },
            lo,
            hi,
            0.0,
        );
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        let root = root.ok_or(DuhemError::BracketFailure { l })?;
        let a = root.x;
        Ok(LimitPrediction {
            state: State::new(a, a + l, 0.0),
            l,
            residual: self.h(a)? - a - l,
            bracket: root.bracket,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Distance {
    pub distance: f64,
    /// Nearest point `(a, H(a))` found on the graph.
    pub argmin: (f64, f64),
    /// Search interval for `a`.
    pub bracket: (f64, f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitPrediction {
    pub state: State,
    pub l: f64,
    /// `H(a) − a − L` at the returned root.
    pub residual: f64,
    pub bracket: (f64, f64),
}

pub fn h(sys: &DuhemSystem, x: f64) -> Result<f64> {
    curve(sys)?.h(x)
}

/// `|h1(x) + h2(z)| ≤ tol` and `|v| ≤ tol`.
pub fn is_equilibrium(sys: &DuhemSystem, s: &State, tol: f64) -> bool {
    equilibrium_residual(sys, s) <= tol && s.v.abs() <= tol
}

/// `|h1(x) + h2(z)|`.
pub fn equilibrium_residual(sys: &DuhemSystem, s: &State) -> f64 {
    (sys.h1().eval(s.x) + sys.h2().eval(s.z)).abs()
}

pub fn dist_to_exz(sys: &DuhemSystem, x: f64, z: f64) -> Result<Distance> {
    curve(sys)?.distance(x, z)
}

/// Distance from `(0, y)` to the equilibrium curve.
pub fn j_z(sys: &DuhemSystem, y: f64) -> Result<f64> {
    Ok(dist_to_exz(sys, 0.0, y)?.distance)
}

/// Distance from `(x, 0)` to the equilibrium curve.
pub fn j_x(sys: &DuhemSystem, x: f64) -> Result<f64> {
    Ok(dist_to_exz(sys, x, 0.0)?.distance)
}

pub fn predict_limit(sys: &DuhemSystem, l: f64) -> Result<LimitPrediction> {
    curve(sys)?.predict_limit(l)
}

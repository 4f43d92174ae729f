//! Time integration of the oscillator: an embedded Dormand–Prince 5(4) pair
//! with adaptive step control, and a fixed-step classical RK4 kept as an
//! independent reference.
//!
//! The vector field is continuous but its Jacobian jumps at `v = 0`. No event
//! location is performed there; the step controller shrinks the step across
//! the kink on its own.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{DuhemError, Result};
use crate::model::{DuhemSystem, State};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Rk45Adaptive,
    Rk4Fixed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorConfig {
    pub method: Method,
    pub rtol: f64,
    pub atol: f64,
    /// First trial step for the adaptive method (estimated when absent); the
    /// step length for `rk4_fixed`.
    pub h_init: Option<f64>,
    pub h_max: f64,
    pub t_end: f64,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            method: Method::Rk45Adaptive,
            rtol: 1e-8,
            atol: 1e-10,
            h_init: None,
            h_max: 1.0,
            t_end: 1e4,
            max_steps: 10_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn with_t_end(mut self, t_end: f64) -> Self {
        self.t_end = t_end;
        self
    }

    /// Fixed-step RK4 with step `h`.
    pub fn rk4(h: f64, t_end: f64) -> Self {
        IntegratorConfig {
            method: Method::Rk4Fixed,
            h_init: Some(h),
            h_max: h,
            t_end,
            ..Default::default()
        }
    }

    pub fn check(&self) -> Result<()> {
        let bad = |m: String| Err(DuhemError::Config(m));
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return bad(format!(
                "rtol and atol must be positive (got {}, {})",
                self.rtol, self.atol
            ));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be positive and finite, got {}", self.t_end));
        }
        if self.max_steps < 1 {
            return bad("max_steps must be at least 1".into());
        }
        if !(self.h_max > 0.0) {
            return bad(format!("h_max must be positive, got {}", self.h_max));
        }
        if let Some(h) = self.h_init {
            if !(h > 0.0 && h.is_finite()) {
                return bad(format!("h_init must be positive, got {h}"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Completed,
    MaxSteps,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub system_id: String,
    pub config: IntegratorConfig,
    pub termination: Termination,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    /// Sum over accepted steps of the ∞-norm of the embedded local error
    /// estimate; a crude bound on the accumulated error.
    pub error_sum: f64,
}

/// Sampled solution on the accepted-step grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<State>,
    meta: TrajectoryMeta,
}

impl Trajectory {
    /// Assembles a trajectory, enforcing its invariants: equal lengths,
    /// `times[0] = 0`, strictly increasing times, finite states.
    pub fn from_parts(times: Vec<f64>, states: Vec<State>, meta: TrajectoryMeta) -> Result<Self> {
        if times.is_empty() || times.len() != states.len() {
            return Err(DuhemError::InvalidParams(format!(
                "trajectory needs equal, non-zero numbers of times and states ({} vs {})",
                times.len(),
                states.len()
            )));
        }
        if times[0] != 0.0 {
            return Err(DuhemError::InvalidParams("trajectory must start at t = 0".into()));
        }
        if let Some(i) = times.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(DuhemError::InvalidParams(format!(
                "trajectory times not strictly increasing at index {}",
                i + 1
            )));
        }
        if let Some(i) = states.iter().position(|s| !s.is_finite()) {
            return Err(DuhemError::InvalidParams(format!("non-finite state at index {i}")));
        }
        Ok(Trajectory { times, states, meta })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn meta(&self) -> &TrajectoryMeta {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn initial(&self) -> State {
        self.states[0]
    }

    pub fn last(&self) -> (f64, State) {
        let i = self.len() - 1;
        (self.times[i], self.states[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &State)> + '_ {
        self.times.iter().copied().zip(self.states.iter())
    }

    /// `sup_t ‖X(t)‖₂` over the samples.
    pub fn sup_norm(&self) -> f64 {
        self.states.iter().map(State::norm2).fold(0.0, f64::max)
    }
}

// Dormand–Prince 5(4) tableau. The field is autonomous, so the nodes c_i
// are not needed.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Fifth-order weights minus embedded fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

fn lin(terms: &[(f64, &State)]) -> State {
    let mut out = State::ORIGIN;
    for &(c, s) in terms {
        out.x += c * s.x;
        out.z += c * s.z;
        out.v += c * s.v;
    }
    out
}

struct StepTrial {
    y: State,
    /// Field at the new point, reused as the first stage of the next step.
    k_end: State,
    err: State,
    /// Some stage saw `v` of the opposite sign to the starting point.
    crosses_kink: bool,
}

fn dp_step(sys: &DuhemSystem, y: &State, k1: &State, h: f64) -> Result<StepTrial> {
    let s2 = lin(&[(1.0, y), (h * A21, k1)]);
    let k2 = sys.rhs(&s2)?;
    let s3 = lin(&[(1.0, y), (h * A31, k1), (h * A32, &k2)]);
    let k3 = sys.rhs(&s3)?;
    let s4 = lin(&[(1.0, y), (h * A41, k1), (h * A42, &k2), (h * A43, &k3)]);
    let k4 = sys.rhs(&s4)?;
    let s5 = lin(&[(1.0, y), (h * A51, k1), (h * A52, &k2), (h * A53, &k3), (h * A54, &k4)]);
    let k5 = sys.rhs(&s5)?;
    let s6 = lin(&[
        (1.0, y),
        (h * A61, k1),
        (h * A62, &k2),
        (h * A63, &k3),
        (h * A64, &k4),
        (h * A65, &k5),
    ]);
    let k6 = sys.rhs(&s6)?;
    let y_new = lin(&[
        (1.0, y),
        (h * A71, k1),
        (h * A73, &k3),
        (h * A74, &k4),
        (h * A75, &k5),
        (h * A76, &k6),
    ]);
    let k7 = sys.rhs(&y_new)?;
    let err = lin(&[
        (h * E1, k1),
        (h * E3, &k3),
        (h * E4, &k4),
        (h * E5, &k5),
        (h * E6, &k6),
        (h * E7, &k7),
    ]);
    let crosses_kink = [&s2, &s3, &s4, &s5, &s6, &y_new].iter().any(|s| s.v * y.v < 0.0)
        || (y.v == 0.0
            && [&s2, &s3, &s4, &s5, &s6, &y_new]
                .windows(2)
                .any(|w| w[0].v * w[1].v < 0.0));
    Ok(StepTrial {
        y: y_new,
        k_end: k7,
        err,
        crosses_kink,
    })
}

fn scaled_err(err: &State, y: &State, y_new: &State, cfg: &IntegratorConfig) -> f64 {
    let e = err.as_array();
    let a = y.as_array();
    let b = y_new.as_array();
    (0..3)
        .map(|i| e[i].abs() / (cfg.atol + cfg.rtol * a[i].abs().max(b[i].abs())))
        .fold(0.0, f64::max)
}

fn initial_step(sys: &DuhemSystem, y0: &State, f0: &State, cfg: &IntegratorConfig) -> Result<f64> {
    let norm = |s: &State| {
        let s = s.as_array();
        let y = y0.as_array();
        let sum: f64 = (0..3)
            .map(|i| (s[i] / (cfg.atol + cfg.rtol * y[i].abs())).powi(2))
            .sum();
        (sum / 3.0).sqrt()
    };
    let d0 = norm(y0);
    let d1 = norm(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1 = *y0 + h0 * *f0;
    let f1 = sys.rhs(&y1)?;
    let d2 = norm(&(f1 - *f0)) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / 5.0)
    };
    Ok((100.0 * h0).min(h1).min(cfg.h_max).min(cfg.t_end))
}

/// Solves the initial value problem on `[0, cfg.t_end]`.
pub fn integrate(sys: &DuhemSystem, init: State, cfg: &IntegratorConfig) -> Result<Trajectory> {
    cfg.check()?;
    if !init.is_finite() {
        return Err(DuhemError::InvalidParams(format!(
            "initial state {init:?} is not finite"
        )));
    }
    match cfg.method {
        Method::Rk45Adaptive => dopri5(sys, init, cfg),
        Method::Rk4Fixed => rk4_fixed(sys, init, cfg),
    }
}

fn dopri5(sys: &DuhemSystem, init: State, cfg: &IntegratorConfig) -> Result<Trajectory> {
    let t_end = cfg.t_end;
    let h_min = 1e-14 * t_end;
    let mut times = vec![0.0];
    let mut states = vec![init];
    let mut t = 0.0;
    let mut y = init;
    let mut k1 = sys.rhs(&y)?;
    let mut h = match cfg.h_init {
        Some(h) => h.min(cfg.h_max).min(t_end),
        None => initial_step(sys, &y, &k1, cfg)?,
    };
    let mut attempts = 0usize;
    let mut rejected = 0usize;
    let mut error_sum = 0.0;
    let mut termination = Termination::Completed;
    let mut last_rejected = false;

    while t < t_end {
        if attempts >= cfg.max_steps {
            termination = Termination::MaxSteps;
            break;
        }
        attempts += 1;
        if h < h_min {
            return Err(DuhemError::StepSizeUnderflow { t, h });
        }
        let mut step = h;
        let mut finishing = false;
        if t + 1.0001 * step >= t_end {
            step = t_end - t;
            finishing = true;
        }

        let mut trial = dp_step(sys, &y, &k1, step)?;
        if trial.crosses_kink {
            // The embedded estimate assumes a smooth field; across v = 0 it
            // can undershoot. Compare against two half steps instead.
            let a = dp_step(sys, &y, &k1, 0.5 * step)?;
            let b = dp_step(sys, &a.y, &a.k_end, 0.5 * step)?;
            let gap = b.y - trial.y;
            trial.err = State::new(
                trial.err.x.abs().max(gap.x.abs()),
                trial.err.z.abs().max(gap.z.abs()),
                trial.err.v.abs().max(gap.v.abs()),
            );
        }
        let StepTrial {
            y: y_new,
            k_end: k7,
            err,
            ..
        } = trial;
        let e = scaled_err(&err, &y, &y_new, cfg);
        let factor = if e == 0.0 {
            MAX_FACTOR
        } else {
            (SAFETY * e.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
        };

        if e <= 1.0 {
            let t_new = if finishing { t_end } else { t + step };
            if !(t_new > t) {
                return Err(DuhemError::StepSizeUnderflow { t, h: step });
            }
            t = t_new;
            y = y_new;
            k1 = k7;
            error_sum += err.norm_inf();
            times.push(t);
            states.push(y);
            let grow = if last_rejected { factor.min(1.0) } else { factor };
            // A clipped final step says nothing about the natural step size.
            if !finishing {
                h = (step * grow).min(cfg.h_max);
            }
            last_rejected = false;
        } else {
            rejected += 1;
            last_rejected = true;
            h = step * factor.min(1.0);
        }
    }

    let accepted = times.len() - 1;
    let meta = TrajectoryMeta {
        system_id: sys.id().to_string(),
        config: cfg.clone(),
        termination,
        accepted_steps: accepted,
        rejected_steps: rejected,
        error_sum,
    };
    Ok(Trajectory { times, states, meta })
}

fn rk4_fixed(sys: &DuhemSystem, init: State, cfg: &IntegratorConfig) -> Result<Trajectory> {
    let h_req = cfg.h_init.unwrap_or(cfg.h_max).min(cfg.t_end);
    let full = ((cfg.t_end / h_req) - 1e-9).ceil().max(1.0) as usize;
    let h = cfg.t_end / full as f64;
    let n = full.min(cfg.max_steps);
    let mut times = Vec::with_capacity(n + 1);
    let mut states = Vec::with_capacity(n + 1);
    times.push(0.0);
    states.push(init);
    let mut y = init;
    for i in 1..=n {
        let k1 = sys.rhs(&y)?;
        let k2 = sys.rhs(&(y + (0.5 * h) * k1))?;
        let k3 = sys.rhs(&(y + (0.5 * h) * k2))?;
        let k4 = sys.rhs(&(y + h * k3))?;
        y = lin(&[
            (1.0, &y),
            (h / 6.0, &k1),
            (h / 3.0, &k2),
            (h / 3.0, &k3),
            (h / 6.0, &k4),
        ]);
        times.push(if i == full { cfg.t_end } else { i as f64 * h });
        states.push(y);
    }
    let termination = if n < full {
        Termination::MaxSteps
    } else {
        Termination::Completed
    };
    let meta = TrajectoryMeta {
        system_id: sys.id().to_string(),
        config: cfg.clone(),
        termination,
        accepted_steps: n,
        rejected_steps: 0,
        error_sum: 0.0,
    };
    Ok(Trajectory { times, states, meta })
}

/// Integrates every initial condition independently (in parallel); the
/// output order matches `inits`. Per-element failures are returned in place.
pub fn sweep(sys: &DuhemSystem, inits: &[State], cfg: &IntegratorConfig) -> Result<Vec<Result<Trajectory>>> {
    if inits.is_empty() {
        return Err(DuhemError::EmptyGrid);
    }
    cfg.check()?;
    Ok(inits.par_iter().map(|&s| integrate(sys, s, cfg)).collect())
}

/// Tensor-product grid of initial conditions, `counts[i]` evenly spaced
/// values per axis between `lo` and `hi` (inclusive).
pub fn product_grid(lo: State, hi: State, counts: [usize; 3]) -> Vec<State> {
    let axis = |a: f64, b: f64, n: usize| -> Vec<f64> {
        match n {
            0 => vec![],
            1 => vec![0.5 * (a + b)],
            _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
        }
    };
    let xs = axis(lo.x, hi.x, counts[0]);
    let zs = axis(lo.z, hi.z, counts[1]);
    let vs = axis(lo.v, hi.v, counts[2]);
    let mut out = Vec::with_capacity(xs.len() * zs.len() * vs.len());
    for &x in &xs {
        for &z in &zs {
            for &v in &vs {
                out.push(State::new(x, z, v));
            }
        }
    }
    out
}

/// Empirical equiboundedness: the largest initial radius and the largest
/// radius reached by any trajectory of the batch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquiboundReport {
    pub init_radius: f64,
    pub sup_radius: f64,
}

pub fn equibound(trajs: &[Trajectory]) -> EquiboundReport {
    let init_radius = trajs.iter().map(|t| t.initial().norm2()).fold(0.0, f64::max);
    let sup_radius = trajs.iter().map(Trajectory::sup_norm).fold(0.0, f64::max);
    EquiboundReport {
        init_radius,
        sup_radius,
    }
}

//! Trajectory-level verification: region bookkeeping in the `(x, z)` plane,
//! the auxiliary function `W = (z − x)²`, convergence detection and the
//! end-to-end convergence check.

use serde::{Deserialize, Serialize};

use crate::boucwen::BoucWenParams;
use crate::equilibria::{curve, equilibrium_residual, DIST_SCAN_POINTS};
use crate::error::{DuhemError, Result};
use crate::integrator::{integrate, IntegratorConfig, Termination, Trajectory};
use crate::lyapunov::{audit_monotone, energy, MonotonicityReport};
use crate::model::{DuhemSystem, State, ValidationGrid};

/// Half-width of the band treated as lying on an axis.
pub const EPS_REGION: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegionLabel {
    #[serde(rename = "N_ne")]
    NNe,
    #[serde(rename = "N_nw")]
    NNw,
    #[serde(rename = "N_sw")]
    NSw,
    #[serde(rename = "N_se")]
    NSe,
    #[serde(rename = "M_x_plus")]
    MXPlus,
    #[serde(rename = "M_x_minus")]
    MXMinus,
    #[serde(rename = "M_z_plus")]
    MZPlus,
    #[serde(rename = "M_z_minus")]
    MZMinus,
    #[serde(rename = "ORIGIN_AXIS_AMBIGUOUS")]
    Ambiguous,
}

impl RegionLabel {
    pub fn is_quadrant(self) -> bool {
        matches!(
            self,
            RegionLabel::NNe | RegionLabel::NNw | RegionLabel::NSw | RegionLabel::NSe
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RegionLabel::NNe => "N_ne",
            RegionLabel::NNw => "N_nw",
            RegionLabel::NSw => "N_sw",
            RegionLabel::NSe => "N_se",
            RegionLabel::MXPlus => "M_x_plus",
            RegionLabel::MXMinus => "M_x_minus",
            RegionLabel::MZPlus => "M_z_plus",
            RegionLabel::MZMinus => "M_z_minus",
            RegionLabel::Ambiguous => "ORIGIN_AXIS_AMBIGUOUS",
        }
    }

    fn quadrant(x_pos: bool, z_pos: bool) -> Self {
        match (x_pos, z_pos) {
            (true, true) => RegionLabel::NNe,
            (false, true) => RegionLabel::NNw,
            (false, false) => RegionLabel::NSw,
            (true, false) => RegionLabel::NSe,
        }
    }
}

impl std::fmt::Display for RegionLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub label: RegionLabel,
    pub x_zero: bool,
    pub z_zero: bool,
    pub v_zero: bool,
}

pub fn classify(s: &State, eps: f64) -> Classification {
    let x_zero = s.x.abs() <= eps;
    let z_zero = s.z.abs() <= eps;
    let label = match (x_zero, z_zero) {
        (true, true) => RegionLabel::Ambiguous,
        (false, true) if s.x > 0.0 => RegionLabel::MXPlus,
        (false, true) => RegionLabel::MXMinus,
        (true, false) if s.z > 0.0 => RegionLabel::MZPlus,
        (true, false) => RegionLabel::MZMinus,
        (false, false) => RegionLabel::quadrant(s.x > 0.0, s.z > 0.0),
    };
    Classification {
        label,
        x_zero,
        z_zero,
        v_zero: s.v.abs() <= eps,
    }
}

/// `W = (z − x)²`.
pub fn w(s: &State) -> f64 {
    (s.z - s.x).powi(2)
}

/// `Ẇ = 2(z − x)(f1(z) g1(v) + f2(z) g2(v))`.
pub fn w_dot(sys: &DuhemSystem, s: &State) -> f64 {
    2.0 * (s.z - s.x) * sys.hysteretic_rate(s.z, s.v)
}

/// A maximal run of equal labels. Runs with `samples == 0` are axis
/// crossings located by linear interpolation between two samples in
/// different quadrants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionRun {
    pub label: RegionLabel,
    pub first_index: usize,
    pub samples: usize,
    pub t_start: f64,
    pub t_end: f64,
}

impl RegionRun {
    pub fn is_crossing(&self) -> bool {
        self.samples == 0
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RegionHistory {
    pub runs: Vec<RegionRun>,
}

impl RegionHistory {
    pub fn build(traj: &Trajectory, eps: f64) -> Self {
        let mut runs: Vec<RegionRun> = Vec::new();
        let mut prev: Option<(f64, State, RegionLabel)> = None;
        for (i, (t, s)) in traj.iter().enumerate() {
            let label = classify(s, eps).label;
            if let Some((t0, s0, l0)) = prev {
                if l0 != label && l0.is_quadrant() && label.is_quadrant() {
                    for (tc, lc) in crossings(t0, &s0, t, s) {
                        runs.push(RegionRun {
                            label: lc,
                            first_index: i,
                            samples: 0,
                            t_start: tc,
                            t_end: tc,
                        });
                    }
                }
            }
            match runs.last_mut() {
                Some(r) if r.label == label && !r.is_crossing() => {
                    r.samples += 1;
                    r.t_end = t;
                }
                _ => runs.push(RegionRun {
                    label,
                    first_index: i,
                    samples: 1,
                    t_start: t,
                    t_end: t,
                }),
            }
            prev = Some((t, *s, label));
        }
        RegionHistory { runs }
    }

    /// Index of the first run that enters a quadrant directly from a
    /// different quadrant, if any.
    pub fn incoherence(&self) -> Option<usize> {
        self.runs
            .windows(2)
            .position(|w| w[0].label.is_quadrant() && w[1].label.is_quadrant() && w[0].label != w[1].label)
            .map(|i| i + 1)
    }

    pub fn is_coherent(&self) -> bool {
        self.incoherence().is_none()
    }
}

/// Axis crossings on the segment between two quadrant samples, in time order.
fn crossings(t0: f64, s0: &State, t1: f64, s1: &State) -> Vec<(f64, RegionLabel)> {
    let frac = |a: f64, b: f64| {
        if a.signum() != b.signum() {
            Some(a / (a - b))
        } else {
            None
        }
    };
    let at = |th: f64, a: f64, b: f64| a + th * (b - a);
    let fx = frac(s0.x, s1.x);
    let fz = frac(s0.z, s1.z);
    let time = |th: f64| t0 + th * (t1 - t0);
    match (fx, fz) {
        (Some(tx), None) => {
            let l = if s0.z > 0.0 {
                RegionLabel::MZPlus
            } else {
                RegionLabel::MZMinus
            };
            vec![(time(tx), l)]
        }
        (None, Some(tz)) => {
            let l = if s0.x > 0.0 {
                RegionLabel::MXPlus
            } else {
                RegionLabel::MXMinus
            };
            vec![(time(tz), l)]
        }
        (Some(tx), Some(tz)) if tx == tz => vec![(time(tx), RegionLabel::Ambiguous)],
        (Some(tx), Some(tz)) => {
            let mz = |th: f64| {
                if at(th, s0.z, s1.z) > 0.0 {
                    RegionLabel::MZPlus
                } else {
                    RegionLabel::MZMinus
                }
            };
            let mx = |th: f64| {
                if at(th, s0.x, s1.x) > 0.0 {
                    RegionLabel::MXPlus
                } else {
                    RegionLabel::MXMinus
                }
            };
            if tx < tz {
                vec![(time(tx), mz(tx)), (time(tz), mx(tz))]
            } else {
                vec![(time(tz), mx(tz)), (time(tx), mz(tx))]
            }
        }
        (None, None) => Vec::new(),
    }
}

/// The label shared by the trailing `fraction` of samples, if they agree.
pub fn trailing_label(traj: &Trajectory, fraction: f64, eps: f64) -> Option<RegionLabel> {
    let n = traj.len();
    let k = ((n as f64 * fraction).ceil() as usize).clamp(1, n);
    let mut labels = traj.states()[n - k..].iter().map(|s| classify(s, eps).label);
    let first = labels.next()?;
    labels.all(|l| l == first).then_some(first)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WAudit {
    pub max_rise: f64,
    pub rise_index: Option<usize>,
    pub pairs_checked: usize,
}

/// Largest increase of `W` between consecutive samples that both lie in
/// `N_nw` or both in `N_se`.
pub fn audit_w(traj: &Trajectory, eps: f64) -> WAudit {
    let mut out = WAudit {
        max_rise: 0.0,
        rise_index: None,
        pairs_checked: 0,
    };
    for (i, p) in traj.states().windows(2).enumerate() {
        let (a, b) = (classify(&p[0], eps).label, classify(&p[1], eps).label);
        if a != b || !matches!(a, RegionLabel::NNw | RegionLabel::NSe) {
            continue;
        }
        out.pairs_checked += 1;
        let rise = w(&p[1]) - w(&p[0]);
        if rise > out.max_rise {
            out.max_rise = rise;
            out.rise_index = Some(i + 1);
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConvergenceTolerances {
    pub tol_v: f64,
    pub tol_dist: f64,
    pub tol_equilibrium: f64,
    pub sublevel_slack: f64,
    pub monotone_slack: f64,
    pub predict_gap: f64,
    pub window_fraction: f64,
    pub window_max: usize,
    pub eps_region: f64,
}

impl Default for ConvergenceTolerances {
    fn default() -> Self {
        ConvergenceTolerances {
            tol_v: 1e-6,
            tol_dist: 1e-4,
            tol_equilibrium: 1e-4,
            sublevel_slack: 1e-8,
            monotone_slack: 1e-8,
            predict_gap: 1e-3,
            window_fraction: 0.1,
            window_max: 1000,
            eps_region: EPS_REGION,
        }
    }
}

impl ConvergenceTolerances {
    pub fn window(&self, len: usize) -> usize {
        ((len as f64 * self.window_fraction).ceil() as usize)
            .min(self.window_max)
            .clamp(1, len.max(1))
    }

    pub fn check(&self) -> Result<()> {
        let pos = [
            self.tol_v,
            self.tol_dist,
            self.tol_equilibrium,
            self.predict_gap,
            self.window_fraction,
        ];
        if pos.iter().any(|t| !(*t > 0.0 && t.is_finite())) || self.window_fraction > 1.0 {
            return Err(DuhemError::Config(
                "tolerances and window fraction must be positive (fraction ≤ 1)".into(),
            ));
        }
        if [self.sublevel_slack, self.monotone_slack, self.eps_region]
            .iter()
            .any(|t| !(*t >= 0.0))
        {
            return Err(DuhemError::Config("slacks must be non-negative".into()));
        }
        if self.window_max == 0 {
            return Err(DuhemError::Config("window_max must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowStats {
    pub samples: usize,
    pub t_start: f64,
    pub max_abs_v: f64,
    pub max_dist: f64,
    /// Largest coordinate spread of the states in the window.
    pub diameter: f64,
    /// How `max_dist` was obtained. The search bracket always contains the
    /// nearest curve point; the minimizer inside it is not certified global.
    pub distance_search: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// `|h1(x*) + h2(z*)|`.
    pub equilibrium: f64,
    /// `V(X*) − V(X₀)`.
    pub sublevel: f64,
    /// `α x* + (1 − α) A z*`, Bouc-Wen systems only.
    pub terminal_relation: Option<f64>,
    /// `‖X* − X_pred‖∞` when the tail stays in `N_nw` or `N_se`.
    pub predict_limit_gap: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub system_id: String,
    pub initial: State,
    pub t_end: f64,
    pub samples: usize,
    pub converged: bool,
    pub t_detect: Option<f64>,
    #[serde(rename = "X_star")]
    pub x_star: State,
    #[serde(rename = "in_E")]
    pub in_e: bool,
    pub in_sublevel: bool,
    pub residuals: Residuals,
    pub window: WindowStats,
    pub monotonicity: Option<MonotonicityReport>,
    pub trailing_region: Option<RegionLabel>,
    /// Which tail behaviour the finite data is consistent with.
    pub tail: String,
    pub predicted_limit: Option<State>,
    pub region_history: RegionHistory,
    pub tolerances: ConvergenceTolerances,
    pub warnings: Vec<String>,
    pub failures: Vec<String>,
}

impl ConvergenceReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Convergence over the trailing window: `|v| ≤ tol_v`, distance to the
/// equilibrium curve `≤ tol_dist` and state spread `≤ tol_dist`.
pub fn detect_convergence(
    sys: &DuhemSystem,
    traj: &Trajectory,
    tol: &ConvergenceTolerances,
) -> Result<ConvergenceReport> {
    tol.check()?;
    let states = traj.states();
    let times = traj.times();
    let n = traj.len();
    let k = tol.window(n);
    let win = &states[n - k..];
    let c = curve(sys)?;
    let mut max_dist: f64 = 0.0;
    for s in win {
        max_dist = max_dist.max(c.distance(s.x, s.z)?.distance);
    }
    let spread = |f: fn(&State) -> f64| {
        let (lo, hi) = win
            .iter()
            .map(f)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), u| (a.min(u), b.max(u)));
        hi - lo
    };
    let window = WindowStats {
        samples: k,
        t_start: times[n - k],
        max_abs_v: win.iter().map(|s| s.v.abs()).fold(0.0, f64::max),
        max_dist,
        diameter: spread(|s| s.x).max(spread(|s| s.z)).max(spread(|s| s.v)),
        distance_search: format!(
            "scan ({DIST_SCAN_POINTS} points) and golden section over [x − r, x + r], r = √(x² + z²)"
        ),
    };
    let converged = window.max_abs_v <= tol.tol_v && window.max_dist <= tol.tol_dist && window.diameter <= tol.tol_dist;

    let (_, last) = traj.last();
    let x_star = State::new(last.x, last.z, 0.0);
    let t_detect = converged.then(|| {
        let near = |s: &State| {
            s.v.abs() <= tol.tol_v && (s.x - x_star.x).abs() <= tol.tol_dist && (s.z - x_star.z).abs() <= tol.tol_dist
        };
        let first = states.iter().rposition(|s| !near(s)).map_or(0, |i| i + 1);
        times[first.min(n - 1)]
    });

    let x0 = traj.initial();
    let eq = equilibrium_residual(sys, &x_star);
    let sub = energy(sys, &x_star)? - energy(sys, &x0)?;
    let trailing = trailing_label(traj, 0.5, tol.eps_region);
    let history = RegionHistory::build(traj, tol.eps_region);
    let tail = describe_tail(traj, trailing, tol.eps_region);
    Ok(ConvergenceReport {
        system_id: sys.id().to_string(),
        initial: x0,
        t_end: traj.meta().config.t_end,
        samples: n,
        converged,
        t_detect,
        x_star,
        in_e: eq <= tol.tol_equilibrium,
        in_sublevel: sub <= tol.sublevel_slack,
        residuals: Residuals {
            equilibrium: eq,
            sublevel: sub,
            terminal_relation: None,
            predict_limit_gap: None,
        },
        window,
        monotonicity: None,
        trailing_region: trailing,
        tail,
        predicted_limit: None,
        region_history: history,
        tolerances: *tol,
        warnings: sys.warnings().to_vec(),
        failures: Vec::new(),
    })
}

fn describe_tail(traj: &Trajectory, trailing: Option<RegionLabel>, eps: f64) -> String {
    match trailing {
        Some(l) if l.is_quadrant() => format!("eventually in {l}"),
        Some(l) => format!("eventually on {l}"),
        None => {
            let n = traj.len();
            let half = &traj.states()[n / 2..];
            if half.iter().any(|s| !classify(s, eps).label.is_quadrant()) {
                "axes visited in the trailing half".to_string()
            } else {
                "quadrant changes in the trailing half".to_string()
            }
        }
    }
}

/// Runs every check on an existing trajectory and records failures in the
/// report. Does not look at the validation state of `sys`.
pub fn verify_trajectory(
    sys: &DuhemSystem,
    traj: &Trajectory,
    tol: &ConvergenceTolerances,
) -> Result<ConvergenceReport> {
    let mut r = detect_convergence(sys, traj, tol)?;
    if traj.meta().termination == Termination::MaxSteps {
        r.failures
            .push(format!("integration stopped after max_steps at t = {}", traj.last().0));
    }
    let mono = audit_monotone(sys, traj, tol.monotone_slack)?;
    if !mono.passed {
        r.failures.push(format!(
            "V not nonincreasing: max rise {:.3e} at sample {:?}, max Vdot {:.3e} at sample {:?} (slack {:.0e})",
            mono.max_jump, mono.jump_index, mono.max_rate, mono.rate_index, mono.slack
        ));
    }
    r.monotonicity = Some(mono);
    if !r.converged {
        r.failures.push(format!(
            "not converged within horizon t_end = {}: max |v| = {:.3e}, max distance = {:.3e}, diameter = {:.3e} over the last {} samples",
            r.t_end, r.window.max_abs_v, r.window.max_dist, r.window.diameter, r.window.samples
        ));
    }
    if !r.in_e {
        r.failures.push(format!(
            "X* not in E: |h1(x*) + h2(z*)| = {:.3e}",
            r.residuals.equilibrium
        ));
    }
    if !r.in_sublevel {
        r.failures.push(format!(
            "X* outside the initial sublevel set: V(X*) − V(X0) = {:.3e}",
            r.residuals.sublevel
        ));
    }
    if let Some(RegionLabel::NNw | RegionLabel::NSe) = r.trailing_region {
        let l = r.x_star.z - r.x_star.x;
        let pred = curve(sys)?.predict_limit(l)?.state;
        let gap = (r.x_star - pred).norm_inf();
        r.predicted_limit = Some(pred);
        r.residuals.predict_limit_gap = Some(gap);
        if gap > tol.predict_gap {
            r.failures.push(format!(
                "limit predictor disagrees: ‖X* − X_pred‖∞ = {gap:.3e} with L = {l}"
            ));
        }
    }
    Ok(r)
}

/// Integrates from `init` and verifies convergence to a rest point in the
/// initial sublevel set. Refuses systems that have not passed validation.
pub fn verify_theorem_main(
    sys: &DuhemSystem,
    init: State,
    cfg: &IntegratorConfig,
    tol: &ConvergenceTolerances,
) -> Result<ConvergenceReport> {
    if !sys.is_validated() {
        return Err(DuhemError::NotValidated(format!(
            "system `{}` has not passed structural validation",
            sys.id()
        )));
    }
    let traj = integrate(sys, init, cfg)?;
    finish(verify_trajectory(sys, &traj, tol)?)
}

/// One line naming the system and each violated condition with its witness.
pub fn validation_summary(report: &crate::model::ValidationReport) -> String {
    let parts: Vec<String> = report
        .violations
        .iter()
        .map(|v| format!("{} ({})", v.condition, v.message))
        .collect();
    format!("system `{}` violates: {}", report.system_id, parts.join("; "))
}

/// `Ok` for a passing report, [`DuhemError::VerificationFailure`] otherwise.
pub fn finish(r: ConvergenceReport) -> Result<ConvergenceReport> {
    if r.passed() {
        Ok(r)
    } else {
        Err(DuhemError::VerificationFailure(Box::new(r)))
    }
}

/// Bouc-Wen verification: requires class I, validates the derived system
/// on `grid`, then checks the terminal relation as well. `init` is in
/// rescaled coordinates.
pub fn verify_boucwen(
    p: &BoucWenParams,
    init: State,
    cfg: &IntegratorConfig,
    tol: &ConvergenceTolerances,
    grid: &ValidationGrid,
) -> Result<ConvergenceReport> {
    if let Some(why) = p.class_i_violation() {
        return Err(DuhemError::NotValidated(why));
    }
    let (sys, report) = p.to_duhem()?.validated(grid);
    if !report.is_valid() {
        return Err(DuhemError::NotValidated(validation_summary(&report)));
    }
    let traj = integrate(&sys, init, cfg)?;
    let mut r = verify_trajectory(&sys, &traj, tol)?;
    check_terminal_relation(p, &mut r, tol);
    finish(r)
}

/// Records `α x* + (1 − α) A z*` and fails the report if it exceeds the
/// equilibrium tolerance.
pub fn check_terminal_relation(p: &BoucWenParams, r: &mut ConvergenceReport, tol: &ConvergenceTolerances) {
    let term = p.terminal_residual_scaled(r.x_star.x, r.x_star.z);
    r.residuals.terminal_relation = Some(term);
    if term.abs() > tol.tol_equilibrium {
        r.failures
            .push(format!("terminal relation residual α x* + (1 − α) A z* = {term:.3e}"));
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityPair {
    pub epsilon: f64,
    /// Largest tested radius whose trajectories all stayed within `epsilon`.
    pub delta: Option<f64>,
    pub worst_excursion: Option<f64>,
}

/// For each `ε`, the largest `δ` in `deltas` such that trajectories from
/// `δ·d` for the 26 lattice directions `d ∈ {−1,0,1}³ \ {0}` (normalized)
/// stay within the Euclidean ball of radius `ε` up to `cfg.t_end`.
pub fn stability_probe(
    sys: &DuhemSystem,
    epsilons: &[f64],
    deltas: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Vec<StabilityPair>> {
    let mut dirs = Vec::new();
    for i in -1..=1 {
        for j in -1..=1 {
            for k in -1..=1 {
                if (i, j, k) != (0, 0, 0) {
                    let d = State::new(i as f64, j as f64, k as f64);
                    dirs.push((1.0 / d.norm2()) * d);
                }
            }
        }
    }
    let mut sorted = deltas.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut excursion = Vec::with_capacity(sorted.len());
    for &delta in &sorted {
        let mut worst: f64 = 0.0;
        for d in &dirs {
            let traj = integrate(sys, delta * *d, cfg)?;
            worst = worst.max(traj.states().iter().map(State::norm2).fold(0.0, f64::max));
        }
        excursion.push((delta, worst));
    }
    Ok(epsilons
        .iter()
        .map(|&eps| {
            let hit = excursion.iter().find(|(_, worst)| *worst <= eps);
            StabilityPair {
                epsilon: eps,
                delta: hit.map(|h| h.0),
                worst_excursion: hit.map(|h| h.1),
            }
        })
        .collect())
}

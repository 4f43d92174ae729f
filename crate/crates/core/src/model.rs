//! State space, pluggable constituent functions, the oscillator vector field,
//! and sampled structural validation of the sign conditions.

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{DuhemError, Result};

/// Points closer than this to the origin are skipped by strict-sign checks.
pub const EPS_REGION_GRID: f64 = 1e-12;

/// Displacement `x`, hysteretic internal variable `z`, velocity `v`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub x: f64,
    pub z: f64,
    pub v: f64,
}

impl State {
    pub const ORIGIN: State = State { x: 0.0, z: 0.0, v: 0.0 };

    pub const fn new(x: f64, z: f64, v: f64) -> Self {
        State { x, z, v }
    }

    /// Builds a state, rejecting NaN and infinities.
    pub fn try_new(x: f64, z: f64, v: f64) -> Result<Self> {
        let s = State { x, z, v };
        if s.is_finite() {
            Ok(s)
        } else {
            Err(DuhemError::InvalidParams(format!(
                "state ({x}, {z}, {v}) is not finite"
            )))
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.z.is_finite() && self.v.is_finite()
    }

    pub fn norm_inf(&self) -> f64 {
        self.x.abs().max(self.z.abs()).max(self.v.abs())
    }

    pub fn norm2(&self) -> f64 {
        (self.x * self.x + self.z * self.z + self.v * self.v).sqrt()
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.z, self.v]
    }
}

impl From<[f64; 3]> for State {
    fn from(a: [f64; 3]) -> Self {
        State::new(a[0], a[1], a[2])
    }
}

impl Add for State {
    type Output = State;
    fn add(self, o: State) -> State {
        State::new(self.x + o.x, self.z + o.z, self.v + o.v)
    }
}

impl Sub for State {
    type Output = State;
    fn sub(self, o: State) -> State {
        State::new(self.x - o.x, self.z - o.z, self.v - o.v)
    }
}

impl Mul<State> for f64 {
    type Output = State;
    fn mul(self, s: State) -> State {
        State::new(self * s.x, self * s.z, self * s.v)
    }
}

impl std::ops::Neg for State {
    type Output = State;
    fn neg(self) -> State {
        State::new(-self.x, -self.z, -self.v)
    }
}

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type DampingFn = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

/// Structural claims a function makes about itself. They are checked by
/// sampling where possible; local Lipschitz continuity is only recorded.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionProps {
    pub zero_at_zero: bool,
    pub strictly_increasing: bool,
    pub locally_lipschitz_claimed: bool,
}

impl FunctionProps {
    /// Flags required of the restoring functions `h1`, `h2`.
    pub const RESTORING: FunctionProps = FunctionProps {
        zero_at_zero: true,
        strictly_increasing: true,
        locally_lipschitz_claimed: true,
    };

    pub const LIPSCHITZ_ZERO: FunctionProps = FunctionProps {
        zero_at_zero: true,
        strictly_increasing: false,
        locally_lipschitz_claimed: true,
    };
}

/// An evaluable real map with optional exact inverse and antiderivative.
#[derive(Clone)]
pub struct ScalarFunction {
    name: Arc<str>,
    eval: RealFn,
    inverse: Option<RealFn>,
    antiderivative: Option<RealFn>,
    props: FunctionProps,
}

impl ScalarFunction {
    pub fn new(name: &str, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        ScalarFunction {
            name: name.into(),
            eval: Arc::new(f),
            inverse: None,
            antiderivative: None,
            props: FunctionProps::default(),
        }
    }

    pub fn with_inverse(mut self, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.inverse = Some(Arc::new(f));
        self
    }

    /// The antiderivative must satisfy `F(0) = 0`.
    pub fn with_antiderivative(mut self, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.antiderivative = Some(Arc::new(f));
        self
    }

    pub fn with_props(mut self, props: FunctionProps) -> Self {
        self.props = props;
        self
    }

    pub fn renamed(mut self, name: &str) -> Self {
        self.name = name.into();
        self
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        (self.eval)(u)
    }

    pub fn invert(&self, y: f64) -> Option<f64> {
        self.inverse.as_ref().map(|f| f(y))
    }

    pub fn has_inverse(&self) -> bool {
        self.inverse.is_some()
    }

    pub fn antiderivative(&self, u: f64) -> Option<f64> {
        self.antiderivative.as_ref().map(|f| f(u))
    }

    pub fn has_antiderivative(&self) -> bool {
        self.antiderivative.is_some()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn props(&self) -> FunctionProps {
        self.props
    }
}

impl fmt::Debug for ScalarFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarFunction")
            .field("name", &self.name)
            .field("inverse", &self.inverse.is_some())
            .field("antiderivative", &self.antiderivative.is_some())
            .field("props", &self.props)
            .finish()
    }
}

/// The velocity-dependent damping term `c(x, z, v)`.
#[derive(Clone)]
pub struct DampingFunction {
    name: Arc<str>,
    eval: DampingFn,
}

impl DampingFunction {
    pub fn new(name: &str, f: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        DampingFunction {
            name: name.into(),
            eval: Arc::new(f),
        }
    }

    #[inline]
    pub fn eval(&self, x: f64, z: f64, v: f64) -> f64 {
        (self.eval)(x, z, v)
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

impl fmt::Debug for DampingFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DampingFunction").field("name", &self.name).finish()
    }
}

/// The seven constituent functions of the oscillator.
#[derive(Clone, Debug)]
pub struct DuhemFunctions {
    pub f1: ScalarFunction,
    pub f2: ScalarFunction,
    pub g1: ScalarFunction,
    pub g2: ScalarFunction,
    pub h1: ScalarFunction,
    pub h2: ScalarFunction,
    pub c: DampingFunction,
}

/// An oscillator definition. Immutable once built; the `validated` flag is
/// only ever set by [`DuhemSystem::validated`].
#[derive(Clone, Debug)]
pub struct DuhemSystem {
    id: String,
    funcs: DuhemFunctions,
    validated: bool,
    warnings: Vec<String>,
}

impl DuhemSystem {
    pub fn new(id: impl Into<String>, funcs: DuhemFunctions) -> Self {
        DuhemSystem {
            id: id.into(),
            funcs,
            validated: false,
            warnings: Vec::new(),
        }
    }

    pub fn with_warning(mut self, warning: impl Into<String>) -> Self {
        self.warnings.push(warning.into());
        self
    }

    /// Runs [`validate`] and returns the system with its `validated` flag set
    /// iff the report has no violations.
    pub fn validated(mut self, grid: &ValidationGrid) -> (Self, ValidationReport) {
        let report = validate(&self, grid);
        self.validated = report.is_valid();
        (self, report)
    }

    pub fn is_validated(&self) -> bool {
        self.validated
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn functions(&self) -> &DuhemFunctions {
        &self.funcs
    }

    pub fn f1(&self) -> &ScalarFunction {
        &self.funcs.f1
    }
    pub fn f2(&self) -> &ScalarFunction {
        &self.funcs.f2
    }
    pub fn g1(&self) -> &ScalarFunction {
        &self.funcs.g1
    }
    pub fn g2(&self) -> &ScalarFunction {
        &self.funcs.g2
    }
    pub fn h1(&self) -> &ScalarFunction {
        &self.funcs.h1
    }
    pub fn h2(&self) -> &ScalarFunction {
        &self.funcs.h2
    }
    pub fn c(&self) -> &DampingFunction {
        &self.funcs.c
    }

    /// The hysteretic part of `ż`: `f1(z) g1(v) + f2(z) g2(v)`.
    #[inline]
    pub fn hysteretic_rate(&self, z: f64, v: f64) -> f64 {
        let f = &self.funcs;
        f.f1.eval(z) * f.g1.eval(v) + f.f2.eval(z) * f.g2.eval(v)
    }

    /// The vector field `(ẋ, ż, v̇)`.
    pub fn rhs(&self, s: &State) -> Result<State> {
        let f = &self.funcs;
        let State { x, z, v } = *s;
        let dz = v + self.hysteretic_rate(z, v);
        let dv = -f.h1.eval(x) - f.h2.eval(z) - f.c.eval(x, z, v);
        let d = State::new(v, dz, dv);
        if d.is_finite() {
            Ok(d)
        } else {
            Err(self.locate_non_finite(s))
        }
    }

    fn locate_non_finite(&self, s: &State) -> DuhemError {
        let f = &self.funcs;
        let State { x, z, v } = *s;
        let probes: [(&str, f64, f64); 6] = [
            (f.f1.name(), f.f1.eval(z), z),
            (f.f2.name(), f.f2.eval(z), z),
            (f.g1.name(), f.g1.eval(v), v),
            (f.g2.name(), f.g2.eval(v), v),
            (f.h1.name(), f.h1.eval(x), x),
            (f.h2.name(), f.h2.eval(z), z),
        ];
        for (name, val, at) in probes {
            if !val.is_finite() {
                return DuhemError::NonFiniteEvaluation {
                    function: name.to_string(),
                    at: vec![at],
                };
            }
        }
        let function = if f.c.eval(x, z, v).is_finite() {
            "rhs".to_string()
        } else {
            f.c.name().to_string()
        };
        DuhemError::NonFiniteEvaluation {
            function,
            at: vec![x, z, v],
        }
    }
}

/// Symmetric sampling grid `{±step, ±2·step, …, ±half_width}` (zero excluded).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ValidationGrid {
    pub half_width: f64,
    pub step: f64,
    /// Every `damping_stride`-th grid value is used per axis when sampling
    /// the three-argument damping function.
    pub damping_stride: usize,
}

impl Default for ValidationGrid {
    fn default() -> Self {
        ValidationGrid {
            half_width: 10.0,
            step: 0.01,
            damping_stride: 50,
        }
    }
}

impl ValidationGrid {
    /// Sample points ordered `step, -step, 2·step, -2·step, …`.
    pub fn points(&self) -> Vec<f64> {
        let n = (self.half_width / self.step).round() as usize;
        let mut out = Vec::with_capacity(2 * n);
        for k in 1..=n {
            let p = k as f64 * self.step;
            if p.abs() <= EPS_REGION_GRID {
                continue;
            }
            out.push(p);
            out.push(-p);
        }
        out
    }

    fn sorted_with_zero(&self) -> Vec<f64> {
        let mut pts = self.points();
        pts.push(0.0);
        pts.sort_by(f64::total_cmp);
        pts
    }

    fn damping_axis(&self) -> Vec<f64> {
        let stride = self.damping_stride.max(1);
        let mut axis: Vec<f64> = self
            .sorted_with_zero()
            .into_iter()
            .enumerate()
            .filter(|(i, _)| i % stride == 0)
            .map(|(_, p)| p)
            .collect();
        if !axis.contains(&0.0) {
            axis.push(0.0);
        }
        axis
    }
}

/// One violated structural condition, with the first witness found.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub condition: String,
    pub message: String,
    pub witness: Vec<f64>,
    /// Number of sample points at which the condition failed.
    pub count: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub system_id: String,
    pub violations: Vec<Violation>,
    /// Non-blocking notes: strict inequalities met with equality, undeclared
    /// Lipschitz claims, properties that cannot be checked by sampling.
    pub caveats: Vec<String>,
    pub points_checked: usize,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violation(&self, condition: &str) -> Option<&Violation> {
        self.violations.iter().find(|v| v.condition == condition)
    }
}

#[derive(Default)]
struct Collector {
    violations: Vec<Violation>,
    degenerate: Vec<(String, Vec<f64>, usize)>,
    checked: usize,
}

impl Collector {
    fn fail(&mut self, condition: &str, witness: &[f64], message: impl FnOnce() -> String) {
        if let Some(v) = self.violations.iter_mut().find(|v| v.condition == condition) {
            v.count += 1;
            return;
        }
        self.violations.push(Violation {
            condition: condition.to_string(),
            message: message(),
            witness: witness.to_vec(),
            count: 1,
        });
    }

    fn degenerate(&mut self, condition: &str, witness: &[f64]) {
        if let Some(d) = self.degenerate.iter_mut().find(|d| d.0 == condition) {
            d.2 += 1;
            return;
        }
        self.degenerate.push((condition.to_string(), witness.to_vec(), 1));
    }
}

#[derive(Clone, Copy)]
enum Sign {
    Positive,
    Negative,
    Zero,
}

impl Sign {
    fn symbol(self) -> &'static str {
        match self {
            Sign::Positive => "> 0",
            Sign::Negative => "< 0",
            Sign::Zero => "= 0",
        }
    }
}

fn check_sign(col: &mut Collector, func: &ScalarFunction, arg: f64, want: Sign, condition: &str) {
    col.checked += 1;
    let val = func.eval(arg);
    let name = func.name();
    if !val.is_finite() {
        col.fail(condition, &[arg], || format!("{name}({arg}) is not finite"));
        return;
    }
    let ok = match want {
        Sign::Positive => val > 0.0,
        Sign::Negative => val < 0.0,
        Sign::Zero => val == 0.0,
    };
    if ok {
        return;
    }
    if val == 0.0 {
        // Equality where a strict sign is required: the dissipation
        // inequalities still hold, so this is recorded but not fatal.
        col.degenerate(condition, &[arg]);
    } else {
        col.fail(condition, &[arg], || {
            format!("{name}({arg})={val} not {}", want.symbol())
        });
    }
}

/// Samples every structural condition the convergence result relies on.
/// Violations are data; the function never fails.
pub fn validate(sys: &DuhemSystem, grid: &ValidationGrid) -> ValidationReport {
    let f = sys.functions();
    let mut col = Collector::default();
    let mut caveats = Vec::new();

    for func in [&f.f1, &f.f2, &f.g1, &f.g2, &f.h1, &f.h2] {
        col.checked += 1;
        let at_zero = func.eval(0.0);
        if at_zero != 0.0 {
            let name = func.name();
            col.fail(&format!("{name}(0) = 0"), &[0.0], || {
                format!("{name}(0) ≠ 0 (got {at_zero})")
            });
        }
    }

    let pts = grid.points();
    for &u in &pts {
        if u < 0.0 {
            check_sign(&mut col, &f.f1, u, Sign::Positive, "f1(z) > 0 for z < 0");
            check_sign(&mut col, &f.f2, u, Sign::Negative, "f2(z) < 0 for z < 0");
            check_sign(&mut col, &f.g1, u, Sign::Zero, "g1(v) = 0 for v < 0");
            check_sign(&mut col, &f.g2, u, Sign::Negative, "g2(v) < 0 for v < 0");
        } else {
            check_sign(&mut col, &f.f1, u, Sign::Negative, "f1(z) < 0 for z > 0");
            check_sign(&mut col, &f.f2, u, Sign::Positive, "f2(z) > 0 for z > 0");
            check_sign(&mut col, &f.g1, u, Sign::Positive, "g1(v) > 0 for v > 0");
            check_sign(&mut col, &f.g2, u, Sign::Zero, "g2(v) = 0 for v > 0");
        }
    }

    let sorted = grid.sorted_with_zero();
    for h in [&f.h1, &f.h2] {
        check_restoring(&mut col, h, &sorted);
    }

    for func in [&f.f1, &f.f2, &f.g1, &f.g2, &f.h1, &f.h2] {
        check_declarations(&mut col, func, &sorted);
        if !func.props().locally_lipschitz_claimed {
            caveats.push(format!(
                "{} does not claim local Lipschitz continuity; uniqueness of solutions is not guaranteed",
                func.name()
            ));
        }
    }

    check_damping(&mut col, &f.c, &grid.damping_axis());

    for (condition, witness, count) in &col.degenerate {
        caveats.push(format!(
            "{condition}: holds only with equality at {count} sample(s), first at {witness:?}"
        ));
    }
    caveats.push("local Lipschitz continuity is declared, not verified".to_string());
    caveats.push("surjectivity of h1, h2 (homeomorphism onto ℝ) cannot be verified by sampling".to_string());

    ValidationReport {
        system_id: sys.id().to_string(),
        violations: col.violations,
        caveats,
        points_checked: col.checked,
    }
}

fn check_restoring(col: &mut Collector, h: &ScalarFunction, sorted: &[f64]) {
    let name = h.name();
    let props = h.props();
    if !props.strictly_increasing {
        col.fail(&format!("{name} declares strictly_increasing"), &[], || {
            format!("{name} must declare strictly_increasing")
        });
    }
    if !props.zero_at_zero {
        col.fail(&format!("{name} declares zero_at_zero"), &[], || {
            format!("{name} must declare zero_at_zero")
        });
    }
    let cond = format!("{name} strictly increasing");
    let mut prev: Option<(f64, f64)> = None;
    for &u in sorted {
        col.checked += 1;
        let val = h.eval(u);
        if let Some((pu, pv)) = prev {
            if !(val > pv) {
                col.fail(&cond, &[pu, u], || format!("{name}({pu})={pv} not < {name}({u})={val}"));
            }
        }
        prev = Some((u, val));
    }
}

fn check_declarations(col: &mut Collector, func: &ScalarFunction, sorted: &[f64]) {
    let name = func.name();
    if func.has_inverse() {
        let cond = format!("{name}({name}⁻¹(y)) = y");
        for &y in sorted {
            col.checked += 1;
            let back = func.eval(func.invert(y).unwrap_or(f64::NAN));
            if !((back - y).abs() <= 1e-10 * y.abs().max(1.0)) {
                col.fail(&cond, &[y], || format!("{name}({name}⁻¹({y}))={back}"));
            }
        }
    }
    if func.has_antiderivative() {
        let anti = |u: f64| func.antiderivative(u).unwrap_or(f64::NAN);
        let at_zero = anti(0.0);
        col.checked += 1;
        if at_zero != 0.0 {
            col.fail(&format!("∫{name}: F(0) = 0"), &[0.0], || {
                format!("antiderivative of {name} is {at_zero} at 0")
            });
        }
        let cond = format!("∫{name}: F' = {name}");
        for &u in sorted {
            col.checked += 1;
            let h = 1e-4 * u.abs().max(1.0);
            let slope = (anti(u + h) - anti(u - h)) / (2.0 * h);
            let val = func.eval(u);
            if !((slope - val).abs() <= 1e-6 * val.abs().max(1.0)) {
                col.fail(&cond, &[u], || {
                    format!("finite-difference slope {slope} of ∫{name} differs from {name}({u})={val}")
                });
            }
        }
    }
}

fn check_damping(col: &mut Collector, c: &DampingFunction, axis: &[f64]) {
    let name = c.name();
    for &x in axis {
        for &z in axis {
            col.checked += 1;
            let at_rest = c.eval(x, z, 0.0);
            if at_rest != 0.0 {
                col.fail(&format!("{name}(x, z, 0) = 0"), &[x, z, 0.0], || {
                    format!("{name}({x}, {z}, 0)={at_rest} ≠ 0")
                });
            }
            for &v in axis {
                col.checked += 1;
                let val = c.eval(x, z, v);
                if !(v * val >= 0.0) {
                    col.fail(&format!("v·{name}(x, z, v) ≥ 0"), &[x, z, v], || {
                        format!("{v}·{name}({x}, {z}, {v})={} < 0", v * val)
                    });
                }
            }
        }
    }
}

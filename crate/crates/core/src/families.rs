//! Built-in function families: power-law restoring forces, velocity ramps,
//! Bouc-Wen-shaped hysteresis rates, linear and cubic damping.

use serde::{Deserialize, Serialize};

use crate::error::{DuhemError, Result};
use crate::model::{DampingFunction, DuhemFunctions, DuhemSystem, FunctionProps, ScalarFunction};

/// `h(u) = κ·sign(u)·|u|^p` with exact inverse and antiderivative.
pub fn power_law(name: &str, kappa: f64, p: f64) -> Result<ScalarFunction> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(DuhemError::InvalidParams(format!(
            "{name}: power-law coefficient must be positive, got {kappa}"
        )));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(DuhemError::InvalidParams(format!(
            "{name}: power-law exponent must be ≥ 1, got {p}"
        )));
    }
    let f = if p == 1.0 {
        ScalarFunction::new(name, move |u| kappa * u)
            .with_inverse(move |y| y / kappa)
            .with_antiderivative(move |u| 0.5 * kappa * u * u)
    } else {
        ScalarFunction::new(name, move |u| kappa * u.signum() * u.abs().powf(p))
            .with_inverse(move |y| y.signum() * (y.abs() / kappa).powf(1.0 / p))
            .with_antiderivative(move |u| kappa * u.abs().powf(p + 1.0) / (p + 1.0))
    };
    Ok(f.with_props(FunctionProps::RESTORING))
}

/// `g1(v) = (v + |v|)/2`.
pub fn positive_ramp(name: &str) -> ScalarFunction {
    ScalarFunction::new(name, |v| 0.5 * (v + v.abs())).with_props(FunctionProps::LIPSCHITZ_ZERO)
}

/// `g2(v) = (v − |v|)/2`.
pub fn negative_ramp(name: &str) -> ScalarFunction {
    ScalarFunction::new(name, |v| 0.5 * (v - v.abs())).with_props(FunctionProps::LIPSCHITZ_ZERO)
}

/// The Bouc-Wen hysteresis rate pair
/// `f1(z) = −s(β|z|^{n−1}z + γ|z|^n)`, `f2(z) = s(β|z|^{n−1}z − γ|z|^n)`.
pub fn hysteresis_pair(scale: f64, beta: f64, gamma: f64, n: f64) -> (ScalarFunction, ScalarFunction) {
    let f1 = ScalarFunction::new("f1", move |z| {
        let mag = z.abs().powf(n - 1.0);
        -scale * (beta * mag * z + gamma * mag * z.abs())
    });
    let f2 = ScalarFunction::new("f2", move |z| {
        let mag = z.abs().powf(n - 1.0);
        scale * (beta * mag * z - gamma * mag * z.abs())
    });
    let props = FunctionProps::LIPSCHITZ_ZERO;
    (f1.with_props(props), f2.with_props(props))
}

/// `c(x, z, v) = coef·v`.
pub fn linear_damping(coef: f64) -> Result<DampingFunction> {
    if !(coef >= 0.0 && coef.is_finite()) {
        return Err(DuhemError::InvalidParams(format!(
            "linear damping coefficient must be ≥ 0, got {coef}"
        )));
    }
    Ok(DampingFunction::new("c", move |_, _, v| coef * v))
}

/// `c(x, z, v) = d·v³`.
pub fn cubic_damping(d: f64) -> Result<DampingFunction> {
    if !(d >= 0.0 && d.is_finite()) {
        return Err(DuhemError::InvalidParams(format!(
            "cubic damping coefficient must be ≥ 0, got {d}"
        )));
    }
    Ok(DampingFunction::new("c", move |_, _, v| d * v * v * v))
}

pub fn no_damping() -> DampingFunction {
    DampingFunction::new("c", |_, _, _| 0.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawTerm {
    pub kappa: f64,
    pub p: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HysteresisSpec {
    #[serde(default = "HysteresisSpec::default_scale")]
    pub scale: f64,
    pub beta: f64,
    pub gamma: f64,
    pub n: f64,
}

impl HysteresisSpec {
    fn default_scale() -> f64 {
        1.0
    }
}

impl Default for HysteresisSpec {
    fn default() -> Self {
        HysteresisSpec {
            scale: 1.0,
            beta: 0.5,
            gamma: 0.0,
            n: 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DampingSpec {
    None,
    Linear { coef: f64 },
    Cubic { d: f64 },
}

impl DampingSpec {
    pub fn build(&self) -> Result<DampingFunction> {
        match *self {
            DampingSpec::None => Ok(no_damping()),
            DampingSpec::Linear { coef } => linear_damping(coef),
            DampingSpec::Cubic { d } => cubic_damping(d),
        }
    }
}

/// A non-Bouc-Wen member of the oscillator family: power-law restoring
/// functions with Bouc-Wen-shaped hysteresis and a choice of damping.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawSpec {
    pub h1: PowerLawTerm,
    pub h2: PowerLawTerm,
    #[serde(default)]
    pub hysteresis: HysteresisSpec,
    pub damping: DampingSpec,
}

impl PowerLawSpec {
    /// `h1(x) = x³`, `h2(z) = z`, cubic damping.
    pub fn cubic_example() -> Self {
        PowerLawSpec {
            h1: PowerLawTerm { kappa: 1.0, p: 3.0 },
            h2: PowerLawTerm { kappa: 1.0, p: 1.0 },
            hysteresis: HysteresisSpec::default(),
            damping: DampingSpec::Cubic { d: 0.2 },
        }
    }

    pub fn build(&self) -> Result<DuhemSystem> {
        let h = &self.hysteresis;
        if !(h.scale.is_finite() && h.beta.is_finite() && h.gamma.is_finite() && h.n.is_finite()) {
            return Err(DuhemError::InvalidParams("hysteresis parameters must be finite".into()));
        }
        if h.n < 1.0 {
            return Err(DuhemError::InvalidParams(format!(
                "hysteresis exponent must be ≥ 1, got {}",
                h.n
            )));
        }
        let (f1, f2) = hysteresis_pair(h.scale, h.beta, h.gamma, h.n);
        let funcs = DuhemFunctions {
            f1,
            f2,
            g1: positive_ramp("g1"),
            g2: negative_ramp("g2"),
            h1: power_law("h1", self.h1.kappa, self.h1.p)?,
            h2: power_law("h2", self.h2.kappa, self.h2.p)?,
            c: self.damping.build()?,
        };
        let id = format!(
            "power_law(h1={}·|x|^{}, h2={}·|z|^{})",
            self.h1.kappa, self.h1.p, self.h2.kappa, self.h2.p
        );
        Ok(DuhemSystem::new(id, funcs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_law_inverse_and_antiderivative() {
        let h = power_law("h", 2.0, 3.0).unwrap();
        assert_eq!(h.eval(-1.0), -2.0);
        assert!((h.invert(16.0).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(h.antiderivative(1.0), Some(0.5));
        assert_eq!(h.antiderivative(-1.0), Some(0.5));
    }

    #[test]
    fn power_law_rejects_bad_parameters() {
        assert!(power_law("h", 0.0, 2.0).is_err());
        assert!(power_law("h", 1.0, 0.5).is_err());
        assert!(linear_damping(-1.0).is_err());
        assert!(cubic_damping(f64::NAN).is_err());
    }

    #[test]
    fn ramps() {
        let g1 = positive_ramp("g1");
        let g2 = negative_ramp("g2");
        assert_eq!((g1.eval(-3.0), g2.eval(-3.0)), (0.0, -3.0));
        assert_eq!((g1.eval(2.0), g2.eval(2.0)), (2.0, 0.0));
    }

    #[test]
    fn power_law_spec_round_trips_through_json() {
        let spec = PowerLawSpec::cubic_example();
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains("\"kind\":\"cubic\""));
        let back: PowerLawSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
    }
}

//! The Bouc-Wen oscillator as a member of the Duhem family.
//!
//! The simulation runs on the rescaled hysteretic variable `Z = z·D/A`, in
//! which the Bouc-Wen rate equation takes the Duhem form
//! `ż = v + f1(z) g1(v) + f2(z) g2(v)` with
//!
//! ```text
//! f1(z) = −A^{n−1} D^{−n} (β|z|^{n−1}z + γ|z|^n)
//! f2(z) =  A^{n−1} D^{−n} (β|z|^{n−1}z − γ|z|^n)
//! h1(x) = α (k/m) x,   h2(z) = (1 − α) A (k/m) z,   c = (b/m) v
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{DuhemError, Result};
use crate::families::{hysteresis_pair, linear_damping, negative_ramp, positive_ramp};
use crate::model::{DuhemFunctions, DuhemSystem, FunctionProps, ScalarFunction};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoucWenParams {
    #[serde(rename = "A")]
    pub a: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Exponent, `n > 1`.
    pub n: f64,
    /// Ratio of elastic to total stiffness, in `(0, 1)`.
    pub alpha: f64,
    pub k: f64,
    #[serde(rename = "D")]
    pub d: f64,
    pub m: f64,
    /// Viscous damping, `b ≥ 0`.
    pub b: f64,
}

impl BoucWenParams {
    /// `A = D = k = m = 1`, `n = 2`, `β = γ = α = 0.5`, `b = 0`.
    pub fn reference() -> Self {
        BoucWenParams {
            a: 1.0,
            beta: 0.5,
            gamma: 0.5,
            n: 2.0,
            alpha: 0.5,
            k: 1.0,
            d: 1.0,
            m: 1.0,
            b: 0.0,
        }
    }

    pub fn check(&self) -> Result<()> {
        let fields = [
            self.a, self.beta, self.gamma, self.n, self.alpha, self.k, self.d, self.m, self.b,
        ];
        if fields.iter().any(|f| !f.is_finite()) {
            return Err(DuhemError::InvalidParams("Bouc-Wen parameters must be finite".into()));
        }
        let bad = |what: &str| Err(DuhemError::InvalidParams(what.to_string()));
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must lie in (0, 1)");
        }
        if !(self.k > 0.0) {
            return bad("k must be positive");
        }
        if !(self.d > 0.0) {
            return bad("D must be positive");
        }
        if !(self.n > 1.0) {
            return bad("n must exceed 1");
        }
        if !(self.m > 0.0) {
            return bad("m must be positive");
        }
        if !(self.b >= 0.0) {
            return bad("b must be non-negative");
        }
        if self.beta == -self.gamma {
            return bad("beta must differ from -gamma");
        }
        Ok(())
    }

    /// Class I: `A > 0` and `−β < γ ≤ β`.
    pub fn is_class_i(&self) -> bool {
        self.a > 0.0 && -self.beta < self.gamma && self.gamma <= self.beta
    }

    /// Human-readable reason the class-I predicate fails, if it does.
    pub fn class_i_violation(&self) -> Option<String> {
        if !(self.a > 0.0) {
            Some(format!("class I requires A > 0, got A = {}", self.a))
        } else if !(-self.beta < self.gamma && self.gamma <= self.beta) {
            Some(format!(
                "class I requires γ ∈ (−β, β], got γ = {} with β = {}",
                self.gamma, self.beta
            ))
        } else {
            None
        }
    }

    /// `A^{n−1} D^{−n}`, the coefficient of the rescaled hysteresis terms.
    pub fn hysteresis_scale(&self) -> f64 {
        self.a.powf(self.n - 1.0) * self.d.powf(-self.n)
    }

    /// The equivalent Duhem system in rescaled coordinates. Non-class-I
    /// parameters produce a system carrying a warning, except `A ≤ 0`, for
    /// which the rescaling `z·D/A` and the power `A^{n−1}` are undefined.
    pub fn to_duhem(&self) -> Result<DuhemSystem> {
        self.check()?;
        if !(self.a > 0.0) {
            return Err(DuhemError::InvalidParams(format!(
                "rescaling requires A > 0, got A = {}",
                self.a
            )));
        }
        let (f1, f2) = hysteresis_pair(self.hysteresis_scale(), self.beta, self.gamma, self.n);
        let c1 = self.alpha * self.k / self.m;
        let c2 = (1.0 - self.alpha) * self.a * self.k / self.m;
        let h1 = linear_restoring("h1", c1);
        let h2 = linear_restoring("h2", c2);
        let funcs = DuhemFunctions {
            f1,
            f2,
            g1: positive_ramp("g1"),
            g2: negative_ramp("g2"),
            h1,
            h2,
            c: linear_damping(self.b / self.m)?,
        };
        let id = format!(
            "bouc_wen(A={}, beta={}, gamma={}, n={}, alpha={}, k={}, D={}, m={}, b={})",
            self.a, self.beta, self.gamma, self.n, self.alpha, self.k, self.d, self.m, self.b
        );
        let mut sys = DuhemSystem::new(id, funcs);
        if let Some(why) = self.class_i_violation() {
            sys = sys.with_warning(format!("not class I: {why}"));
        }
        Ok(sys)
    }

    /// `z ↦ z·D/A`.
    pub fn rescale_z(&self, z_orig: f64) -> f64 {
        z_orig * self.d / self.a
    }

    /// `Z ↦ Z·A/D`.
    pub fn unscale_z(&self, z_scaled: f64) -> f64 {
        z_scaled * self.a / self.d
    }

    /// `F = −α k x − (1 − α) D k z` in original coordinates.
    pub fn output_force(&self, x: f64, z_orig: f64) -> f64 {
        -self.alpha * self.k * x - (1.0 - self.alpha) * self.d * self.k * z_orig
    }

    /// `α x + (1 − α) A z` for rescaled `z`; vanishes at rest points.
    pub fn terminal_residual_scaled(&self, x: f64, z_scaled: f64) -> f64 {
        self.alpha * x + (1.0 - self.alpha) * self.a * z_scaled
    }

    /// `α x + (1 − α) D z` for original `z`.
    pub fn terminal_residual_original(&self, x: f64, z_orig: f64) -> f64 {
        self.alpha * x + (1.0 - self.alpha) * self.d * z_orig
    }
}

fn linear_restoring(name: &str, coef: f64) -> ScalarFunction {
    ScalarFunction::new(name, move |u| coef * u)
        .with_inverse(move |y| y / coef)
        .with_antiderivative(move |u| 0.5 * coef * u * u)
        .with_props(FunctionProps::RESTORING)
}

//! The stored-energy function
//! `V(x, z, v) = ∫₀ˣ h1 + ∫₀ᶻ h2 + v²/2`, its derivative along the flow,
//! sublevel sets, and monotonicity audits of sampled trajectories.

use serde::{Deserialize, Serialize};

use crate::error::{DuhemError, Result};
use crate::integrator::Trajectory;
use crate::model::{DuhemSystem, ScalarFunction, State};
use crate::numeric::adaptive_simpson;

pub const QUADRATURE_TOL: f64 = 1e-10;
pub const QUADRATURE_MAX_DEPTH: u32 = 60;
/// Slack for energy increases between consecutive accepted steps.
pub const MONOTONE_SLACK: f64 = 1e-8;
/// Slack for pointwise sign checks of `V̇`.
pub const POINTWISE_SLACK: f64 = 1e-12;
/// Slack used by [`sublevel_contains`].
pub const SUBLEVEL_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovSample {
    pub t: f64,
    #[serde(rename = "V")]
    pub v: f64,
    #[serde(rename = "Vdot")]
    pub v_dot: f64,
}

/// `∫₀ᵘ h(s) ds`, exact when `h` declares an antiderivative.
pub fn potential(h: &ScalarFunction, u: f64) -> Result<f64> {
    if let Some(exact) = h.antiderivative(u) {
        return Ok(exact);
    }
    adaptive_simpson(|s| h.eval(s), 0.0, u, QUADRATURE_TOL, QUADRATURE_MAX_DEPTH)
}

/// The Lyapunov function `V`.
pub fn energy(sys: &DuhemSystem, s: &State) -> Result<f64> {
    let val = potential(sys.h1(), s.x)? + potential(sys.h2(), s.z)? + 0.5 * s.v * s.v;
    if val.is_finite() {
        Ok(val)
    } else {
        Err(DuhemError::NonFiniteEvaluation {
            function: "V".into(),
            at: s.as_array().to_vec(),
        })
    }
}

/// `V̇ = h2(z) f1(z) g1(v) + h2(z) f2(z) g2(v) − v c(x, z, v)`.
pub fn energy_rate(sys: &DuhemSystem, s: &State) -> Result<f64> {
    let State { x, z, v } = *s;
    let h2 = sys.h2().eval(z);
    let val =
        h2 * sys.f1().eval(z) * sys.g1().eval(v) + h2 * sys.f2().eval(z) * sys.g2().eval(v) - v * sys.c().eval(x, z, v);
    if val.is_finite() {
        Ok(val)
    } else {
        Err(DuhemError::NonFiniteEvaluation {
            function: "Vdot".into(),
            at: vec![x, z, v],
        })
    }
}

/// Whether `y` lies in the sublevel set `{Y : V(Y) ≤ V(x0)}`, up to
/// [`SUBLEVEL_SLACK`].
pub fn sublevel_contains(sys: &DuhemSystem, x0: &State, y: &State) -> Result<bool> {
    Ok(energy(sys, y)? <= energy(sys, x0)? + SUBLEVEL_SLACK)
}

pub fn samples(sys: &DuhemSystem, traj: &Trajectory) -> Result<Vec<LyapunovSample>> {
    traj.iter()
        .map(|(t, s)| {
            Ok(LyapunovSample {
                t,
                v: energy(sys, s)?,
                v_dot: energy_rate(sys, s)?,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    /// Largest `V[i+1] − V[i]`, clamped at 0.
    pub max_jump: f64,
    /// Index `i + 1` of the sample that ends the largest jump.
    pub jump_index: Option<usize>,
    /// Largest sampled `V̇`, clamped at 0.
    pub max_rate: f64,
    pub rate_index: Option<usize>,
    pub slack: f64,
    pub passed: bool,
}

/// Checks that `V` never rises by more than `slack` between consecutive
/// samples and that no sampled `V̇` exceeds `slack`.
pub fn audit_monotone(sys: &DuhemSystem, traj: &Trajectory, slack: f64) -> Result<MonotonicityReport> {
    audit_samples(&samples(sys, traj)?, slack)
}

pub fn audit_samples(samples: &[LyapunovSample], slack: f64) -> Result<MonotonicityReport> {
    let mut max_jump = 0.0;
    let mut jump_index = None;
    for (i, w) in samples.windows(2).enumerate() {
        let jump = w[1].v - w[0].v;
        if jump > max_jump {
            max_jump = jump;
            jump_index = Some(i + 1);
        }
    }
    let mut max_rate = 0.0;
    let mut rate_index = None;
    for (i, s) in samples.iter().enumerate() {
        if s.v_dot > max_rate {
            max_rate = s.v_dot;
            rate_index = Some(i);
        }
    }
    Ok(MonotonicityReport {
        max_jump,
        jump_index,
        max_rate,
        rate_index,
        slack,
        passed: max_jump <= slack && max_rate <= slack,
    })
}

/// Smallest radius `r` found by bisection with `V(r·dir) > level`, after
/// doubling `r` until the level is exceeded. `None` if no such radius is
/// found below `r_cap`.
pub fn radius_exceeding(sys: &DuhemSystem, dir: State, level: f64, r_cap: f64) -> Result<Option<f64>> {
    let at = |r: f64| energy(sys, &(r * dir));
    let mut hi = 1.0;
    while at(hi)? <= level {
        hi *= 2.0;
        if hi > r_cap {
            return Ok(None);
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if at(mid)? > level {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boucwen::BoucWenParams;
    use crate::families::{self, PowerLawSpec};
    use crate::integrator::{integrate, IntegratorConfig};
    use crate::model::{DuhemFunctions, FunctionProps};
    use rand::{Rng, SeedableRng};

    fn bw(b: f64) -> DuhemSystem {
        BoucWenParams {
            b,
            ..BoucWenParams::reference()
        }
        .to_duhem()
        .unwrap()
    }

    #[test]
    fn energy_examples() {
        let s = bw(0.0);
        assert_eq!(energy(&s, &State::ORIGIN).unwrap(), 0.0);
        assert_eq!(energy(&s, &State::new(2.0, 0.0, 0.0)).unwrap(), 1.0);
        assert_eq!(energy(&s, &State::new(0.0, 0.0, 3.0)).unwrap(), 4.5);
    }

    #[test]
    fn quadrature_fallback_matches_antiderivative() {
        // Same h1 with and without a declared antiderivative.
        let exact = families::power_law("h1", 1.5, 3.0).unwrap();
        let bare =
            ScalarFunction::new("h1", |u: f64| 1.5 * u.signum() * u.abs().powi(3)).with_props(FunctionProps::RESTORING);
        for u in [-3.0, -0.2, 0.0, 0.7, 4.0] {
            let a = potential(&exact, u).unwrap();
            let b = potential(&bare, u).unwrap();
            assert!((a - b).abs() <= 1e-9, "u={u}: {a} vs {b}");
        }
    }

    #[test]
    fn energy_rate_examples() {
        let s = bw(1.0);
        for (x, z) in [(1.0, 2.0), (-3.0, 0.5), (0.0, -4.0)] {
            assert_eq!(energy_rate(&s, &State::new(x, z, 0.0)).unwrap(), 0.0);
        }
        for v in [-2.0, 0.5, 3.0] {
            let r = energy_rate(&s, &State::new(0.0, 0.0, v)).unwrap();
            assert_eq!(r, -v * v);
        }
        // Brute force of the displayed formula at (1, 0.5, 2), b = m = 1:
        // h2 = 0.25, f1 = -(0.5·0.5·0.5 + 0.5·0.25) = -0.25, g1 = 2, c = 2.
        let r = energy_rate(&s, &State::new(1.0, 0.5, 2.0)).unwrap();
        assert!((r - (0.25 * -0.25 * 2.0 - 4.0)).abs() < 1e-15);
        assert!(r < 0.0);
    }

    #[test]
    fn sublevel_examples() {
        let s = bw(0.0);
        let x0 = State::new(0.4, -1.0, 0.3);
        assert!(sublevel_contains(&s, &x0, &x0).unwrap());
        assert!(sublevel_contains(&s, &x0, &State::ORIGIN).unwrap());
        assert!(!sublevel_contains(&s, &State::new(0.0, 0.0, 1.0), &State::new(0.0, 0.0, 2.0)).unwrap());
    }

    #[test]
    fn audit_of_constant_trajectory_is_clean() {
        let s = bw(0.2);
        let traj = integrate(
            &s,
            State::new(1.0, -1.0, 0.0),
            &IntegratorConfig::default().with_t_end(10.0),
        )
        .unwrap();
        let r = audit_monotone(&s, &traj, MONOTONE_SLACK).unwrap();
        assert_eq!(r.max_jump, 0.0);
        assert!(r.passed);
    }

    #[test]
    fn audit_passes_on_class_one_runs() {
        for b in [0.0, 0.2, 1.0] {
            let s = bw(b);
            let traj = integrate(
                &s,
                State::new(1.0, 1.0, 0.0),
                &IntegratorConfig::default().with_t_end(200.0),
            )
            .unwrap();
            let r = audit_monotone(&s, &traj, MONOTONE_SLACK).unwrap();
            assert!(r.passed, "b={b}: {r:?}");
        }
    }

    #[test]
    fn audit_flags_a_corrupted_trajectory() {
        let s = bw(0.2);
        let traj = integrate(
            &s,
            State::new(1.0, 1.0, 0.0),
            &IntegratorConfig::default().with_t_end(20.0),
        )
        .unwrap();
        let mut states = traj.states().to_vec();
        let mid = states.len() / 2;
        states[mid].v += 0.5;
        let bad = Trajectory::from_parts(traj.times().to_vec(), states, traj.meta().clone()).unwrap();
        let r = audit_monotone(&s, &bad, MONOTONE_SLACK).unwrap();
        assert!(!r.passed);
        assert_eq!(r.jump_index, Some(mid));
    }

    fn systems() -> Vec<DuhemSystem> {
        let mut out = vec![bw(0.0), bw(0.7)];
        out.push(PowerLawSpec::cubic_example().build().unwrap());
        let mut spec = PowerLawSpec::cubic_example();
        spec.damping = families::DampingSpec::None;
        spec.h2 = families::PowerLawTerm { kappa: 2.0, p: 1.5 };
        out.push(spec.build().unwrap());
        out
    }

    #[test]
    fn energy_is_positive_definite_on_random_states() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for sys in systems() {
            for _ in 0..250_000 {
                let s = State::new(
                    rng.random_range(-10.0..10.0),
                    rng.random_range(-10.0..10.0),
                    rng.random_range(-10.0..10.0),
                );
                let v = energy(&sys, &s).unwrap();
                assert!(v >= 0.0);
                if s.norm_inf() > 1e-12 {
                    assert!(v > 0.0);
                }
                assert!(energy_rate(&sys, &s).unwrap() <= POINTWISE_SLACK);
            }
        }
    }

    #[test]
    fn energy_is_radially_unbounded() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for sys in systems() {
            for _ in 0..50 {
                let d = State::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                );
                let dir = (1.0 / d.norm2()) * d;
                for level in [10.0, 1e3, 1e6] {
                    let r = radius_exceeding(&sys, dir, level, 1e150)
                        .unwrap()
                        .expect("level reached");
                    assert!(energy(&sys, &(r * dir)).unwrap() > level);
                }
            }
        }
    }

    #[test]
    fn chain_rule_consistency() {
        // Finite-difference slope of V against the averaged V̇ on steps where v
        // keeps its sign (V̇ is not differentiable across v = 0).
        for sys in systems() {
            let h = 1e-3;
            let traj = integrate(&sys, State::new(1.5, -0.5, 1.0), &IntegratorConfig::rk4(h, 20.0)).unwrap();
            let samp = samples(&sys, &traj).unwrap();
            for (w, st) in samp.windows(2).zip(traj.states().windows(2)) {
                if st[0].v.signum() != st[1].v.signum() {
                    continue;
                }
                let slope = (w[1].v - w[0].v) / (w[1].t - w[0].t);
                let mid = 0.5 * (w[0].v_dot + w[1].v_dot);
                assert!(
                    (slope - mid).abs() <= 1e2 * h * h + 1e-6,
                    "{slope} vs {mid} at t={}",
                    w[0].t
                );
            }
        }
    }

    #[test]
    fn energy_reports_non_finite() {
        let f = bw(0.0).functions().clone();
        let funcs = DuhemFunctions {
            h1: ScalarFunction::new("h1", |u| if u > 1.0 { f64::NAN } else { u }),
            ..f
        };
        let sys = DuhemSystem::new("nan", funcs);
        assert!(energy(&sys, &State::new(2.0, 0.0, 0.0)).is_err());
    }
}

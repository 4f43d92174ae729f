//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::process::ExitCode;

use duhem::analysis::{trailing_label, verify_trajectory, RegionLabel, EPS_REGION};
use duhem::equilibria::{curve, equilibrium_residual, predict_limit};
use duhem::families::{hysteresis_pair, DampingSpec, HysteresisSpec, PowerLawSpec, PowerLawTerm};
use duhem::lyapunov::{audit_monotone, energy, energy_rate};
use duhem::model::DuhemFunctions;
use duhem::{
    integrate, verify_boucwen, verify_theorem_main, BoucWenParams, ConvergenceTolerances, DampingFunction, DuhemError,
    DuhemSystem, IntegratorConfig, ScalarFunction, State, Trajectory, ValidationGrid,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

struct Outcome {
    passed: bool,
    detail: String,
}

fn pass_if(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn random_class_i(rng: &mut ChaCha8Rng) -> BoucWenParams {
    let beta = rng.random_range(0.2..1.0);
    BoucWenParams {
        a: rng.random_range(0.5..1.5),
        beta,
        gamma: rng.random_range(-0.9..1.0) * beta,
        n: rng.random_range(1.5..3.0),
        alpha: rng.random_range(0.2..0.8),
        k: rng.random_range(0.5..2.0),
        d: rng.random_range(0.5..1.5),
        m: rng.random_range(0.5..2.0),
        b: rng.random_range(0.1..1.0),
    }
}

fn random_state(rng: &mut ChaCha8Rng, r: f64) -> State {
    State::new(
        rng.random_range(-r..r),
        rng.random_range(-r..r),
        rng.random_range(-r..r),
    )
}

fn validated(sys: DuhemSystem) -> Result<DuhemSystem, String> {
    let (sys, report) = sys.validated(&ValidationGrid::default());
    if report.is_valid() {
        Ok(sys)
    } else {
        Err(format!("{} failed validation: {:?}", sys.id(), report.violations))
    }
}

fn power_law(h1: (f64, f64), h2: (f64, f64), hyst: (f64, f64, f64), damping: DampingSpec) -> DuhemSystem {
    PowerLawSpec {
        h1: PowerLawTerm { kappa: h1.0, p: h1.1 },
        h2: PowerLawTerm { kappa: h2.0, p: h2.1 },
        hysteresis: HysteresisSpec {
            scale: 1.0,
            beta: hyst.0,
            gamma: hyst.1,
            n: hyst.2,
        },
        damping,
    }
    .build()
    .unwrap()
}

fn pointwise_dissipativity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut systems: Vec<DuhemSystem> = (0..5).map(|_| random_class_i(&mut rng).to_duhem().unwrap()).collect();
    systems.extend([
        power_law((1.0, 3.0), (1.0, 1.0), (0.5, 0.0, 2.0), DampingSpec::Cubic { d: 0.2 }),
        power_law((2.0, 1.0), (0.5, 3.0), (0.8, 0.4, 1.5), DampingSpec::Cubic { d: 1.0 }),
        power_law((1.0, 1.5), (1.0, 1.0), (0.3, -0.2, 3.0), DampingSpec::Cubic { d: 0.05 }),
        power_law(
            (0.5, 3.0),
            (2.0, 2.0),
            (1.0, 1.0, 2.0),
            DampingSpec::Linear { coef: 0.3 },
        ),
        power_law((1.0, 5.0), (1.0, 3.0), (0.6, 0.6, 2.5), DampingSpec::Cubic { d: 0.5 }),
    ]);
    let mut worst = f64::NEG_INFINITY;
    let mut witness = String::new();
    for (i, sys) in systems.into_iter().enumerate() {
        let sys = match validated(sys) {
            Ok(s) => s,
            Err(e) => return pass_if(false, e),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + i as u64);
        for _ in 0..100_000 {
            let s = random_state(&mut rng, 10.0);
            let r = match energy_rate(&sys, &s) {
                Ok(r) => r,
                Err(e) => return pass_if(false, format!("{}: {e}", sys.id())),
            };
            if r > worst {
                worst = r;
                witness = format!("{} at {:?}", sys.id(), s.as_array());
            }
        }
    }
    pass_if(
        worst <= 1e-12,
        format!("10 systems × 1e5 states, max Vdot = {worst:.3e} ({witness}), tol 1e-12"),
    )
}

struct Case {
    params: BoucWenParams,
    sys: DuhemSystem,
    init: State,
}

fn corpus() -> Vec<Case> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..100)
        .map(|_| {
            let params = random_class_i(&mut rng);
            let sys = params.to_duhem().unwrap();
            let init = random_state(&mut rng, 5.0);
            Case { params, sys, init }
        })
        .collect()
}

fn orbital_monotonicity(cases: &[Case]) -> Outcome {
    let cfg = IntegratorConfig::default().with_t_end(1e3);
    let results: Vec<Result<f64, String>> = cases
        .par_iter()
        .map(|c| {
            let traj = integrate(&c.sys, c.init, &cfg).map_err(|e| e.to_string())?;
            let m = audit_monotone(&c.sys, &traj, 1e-8).map_err(|e| e.to_string())?;
            Ok(m.max_jump)
        })
        .collect();
    let mut worst = 0.0f64;
    for r in results {
        match r {
            Ok(j) => worst = worst.max(j),
            Err(e) => return pass_if(false, e),
        }
    }
    pass_if(
        worst <= 1e-8,
        format!("100 trajectories to t = 1e3, max V rise between accepted steps = {worst:.3e}, slack 1e-8"),
    )
}

fn convergence(cases: &[Case], trajs: &[Trajectory]) -> Outcome {
    let tol = ConvergenceTolerances::default();
    let mut worst = [0.0, 0.0, 0.0, f64::NEG_INFINITY];
    let mut failures = Vec::new();
    for (c, traj) in cases.iter().zip(trajs) {
        let r = match verify_trajectory(&c.sys, traj, &tol) {
            Ok(r) => r,
            Err(e) => return pass_if(false, e.to_string()),
        };
        let w = tol.window(traj.len());
        let tail = &traj.states()[traj.len() - w..];
        let max_v = tail.iter().map(|s| s.v.abs()).fold(0.0, f64::max);
        let max_dist = tail
            .iter()
            .map(|s| {
                duhem::equilibria::dist_to_exz(&c.sys, s.x, s.z)
                    .map(|d| d.distance)
                    .unwrap_or(f64::INFINITY)
            })
            .fold(0.0, f64::max);
        let (_, end) = traj.last();
        let eq = equilibrium_residual(&c.sys, &State::new(end.x, end.z, 0.0));
        let sub = energy(&c.sys, &end).unwrap() - energy(&c.sys, &c.init).unwrap();
        worst = [
            worst[0].max(max_v),
            worst[1].max(max_dist),
            worst[2].max(eq),
            worst[3].max(sub),
        ];
        if !r.converged || max_v > 1e-6 || max_dist > 1e-4 || eq > 1e-4 || sub > 1e-8 {
            failures.push(format!("{:?}: {:?}", c.init.as_array(), r.failures));
        }
    }
    pass_if(
        failures.is_empty(),
        format!(
            "100 trajectories to t = 1e4, trailing window max |v| = {:.3e} (1e-6), max dist = {:.3e} (1e-4), \
             equilibrium residual = {:.3e} (1e-4), V(X*) − V(X0) = {:.3e} (1e-8){}",
            worst[0],
            worst[1],
            worst[2],
            worst[3],
            if failures.is_empty() {
                String::new()
            } else {
                format!("; failing: {}", failures.join(" | "))
            }
        ),
    )
}

fn terminal_relation(cases: &[Case]) -> Outcome {
    let cfg = IntegratorConfig::default();
    let tol = ConvergenceTolerances::default();
    let grid = ValidationGrid::default();
    let results: Vec<Result<(f64, f64), String>> = cases[..25]
        .par_iter()
        .map(|c| {
            let r = verify_boucwen(&c.params, c.init, &cfg, &tol, &grid).map_err(|e| e.to_string())?;
            let (x, z) = (r.x_star.x, r.x_star.z);
            let scaled = c.params.alpha * x + (1.0 - c.params.alpha) * c.params.a * z;
            let original = c.params.terminal_residual_original(x, c.params.unscale_z(z));
            Ok((scaled.abs(), (original - scaled).abs()))
        })
        .collect();
    let (mut worst, mut mismatch) = (0.0f64, 0.0f64);
    for r in results {
        match r {
            Ok((s, m)) => {
                worst = worst.max(s);
                mismatch = mismatch.max(m);
            }
            Err(e) => return pass_if(false, e),
        }
    }
    pass_if(
        worst <= 1e-4 && mismatch <= 1e-10,
        format!("25 instances, max |α x + (1−α) A z| = {worst:.3e} (1e-4), original-coordinate mismatch = {mismatch:.3e} (1e-10)"),
    )
}

fn limit_predictor(cases: &[Case], trajs: &[Trajectory], extra: &[(DuhemSystem, Trajectory)]) -> Outcome {
    let mut count = 0;
    let mut worst = 0.0f64;
    let all = cases
        .iter()
        .map(|c| &c.sys)
        .zip(trajs)
        .chain(extra.iter().map(|(s, t)| (s, t)));
    for (sys, traj) in all {
        match trailing_label(traj, 0.5, EPS_REGION) {
            Some(RegionLabel::NNw) | Some(RegionLabel::NSe) => {}
            _ => continue,
        }
        let (_, end) = traj.last();
        let p = match predict_limit(sys, end.z - end.x) {
            Ok(p) => p,
            Err(e) => return pass_if(false, e.to_string()),
        };
        let gap = (p.state.x - end.x)
            .abs()
            .max((p.state.z - end.z).abs())
            .max(end.v.abs());
        worst = worst.max(gap);
        count += 1;
    }
    pass_if(
        count >= 5 && worst <= 1e-3,
        format!("{count} trajectories trapped in N_nw/N_se (need ≥ 5), max ‖X* − prediction‖∞ = {worst:.3e} (1e-3)"),
    )
}

fn branch_runs() -> Vec<(DuhemSystem, Trajectory)> {
    let cfg = IntegratorConfig::default();
    let inits = [
        State::new(-4.0, 4.0, 0.5),
        State::new(4.0, -4.0, -0.5),
        State::new(-3.0, 4.5, 0.0),
        State::new(5.0, -2.0, 0.0),
        State::new(-5.0, 1.0, 1.0),
    ];
    inits
        .par_iter()
        .map(|&init| {
            let p = BoucWenParams {
                b: 0.05,
                ..BoucWenParams::reference()
            };
            let sys = p.to_duhem().unwrap();
            let traj = integrate(&sys, init, &cfg).unwrap();
            (sys, traj)
        })
        .collect()
}

fn integrator_oracle(cases: &[Case]) -> Outcome {
    let adaptive = IntegratorConfig::default().with_t_end(10.0);
    let fixed = IntegratorConfig::rk4(1e-4, 10.0);
    let results: Vec<Result<f64, String>> = cases[..10]
        .par_iter()
        .map(|c| {
            let a = integrate(&c.sys, c.init, &adaptive).map_err(|e| e.to_string())?;
            let b = integrate(&c.sys, c.init, &fixed).map_err(|e| e.to_string())?;
            let ((ta, ya), (tb, yb)) = (a.last(), b.last());
            if (ta - 10.0).abs() > 1e-12 || (tb - 10.0).abs() > 1e-9 {
                return Err(format!("runs ended at t = {ta}, {tb}"));
            }
            Ok((ya.x - yb.x).abs().max((ya.z - yb.z).abs()).max((ya.v - yb.v).abs()))
        })
        .collect();
    let mut worst = 0.0f64;
    for r in results {
        match r {
            Ok(d) => worst = worst.max(d),
            Err(e) => return pass_if(false, e),
        }
    }
    pass_if(
        worst <= 1e-5,
        format!("10 instances at t = 10, max ‖RK45 − RK4(h = 1e-4)‖∞ = {worst:.3e} (1e-5)"),
    )
}

fn j_laws() -> Outcome {
    let hyst = (0.5, 0.0, 2.0);
    let linear = power_law((1.0, 1.0), (1.0, 1.0), hyst, DampingSpec::Linear { coef: 0.2 });
    let cubic = power_law((1.0, 3.0), (1.0, 1.0), hyst, DampingSpec::Linear { coef: 0.2 });
    let mut notes = Vec::new();
    let mut ok = true;
    let mut formula_err = 0.0f64;
    for (name, sys) in [("linear", &linear), ("cubic", &cubic)] {
        let c = curve(sys).unwrap();
        let j0 = c.distance(0.0, 0.0).unwrap().distance;
        ok &= j0 <= 1e-10;
        let mut drop = 0.0f64;
        for sign in [1.0, -1.0] {
            let (mut pz, mut px) = (0.0, 0.0);
            for i in 1..=1000 {
                let u = sign * 10.0 * i as f64 / 1000.0;
                let jz = c.distance(0.0, u).unwrap().distance;
                let jx = c.distance(u, 0.0).unwrap().distance;
                drop = drop.max(pz - jz).max(px - jx);
                (pz, px) = (jz, jx);
                if name == "linear" {
                    let exact = u.abs() / 2f64.sqrt();
                    formula_err = formula_err.max((jz - exact).abs()).max((jx - exact).abs());
                }
            }
        }
        ok &= drop <= 1e-9;
        notes.push(format!("{name}: J(0) = {j0:.1e}, max decrease = {drop:.3e}"));
    }
    ok &= formula_err <= 1e-8;
    pass_if(
        ok,
        format!(
            "{}; linear |J − |y|/√2| = {formula_err:.3e} (slack 1e-9, J(0) 1e-10, formula 1e-8)",
            notes.join("; ")
        ),
    )
}

fn fixed_points() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let cfg = IntegratorConfig::default().with_t_end(100.0);
    let mut worst = 0.0f64;
    for i in 0..10 {
        let sys = if i % 2 == 0 {
            random_class_i(&mut rng).to_duhem().unwrap()
        } else {
            power_law((1.0, 3.0), (1.0, 1.0), (0.5, 0.1, 2.0), DampingSpec::Cubic { d: 0.2 })
        };
        let a = rng.random_range(-3.0..3.0);
        let z = curve(&sys).unwrap().h(a).unwrap();
        let start = State::new(a, z, 0.0);
        let traj = match integrate(&sys, start, &cfg) {
            Ok(t) => t,
            Err(e) => return pass_if(false, e.to_string()),
        };
        for s in traj.states() {
            worst = worst.max((s.x - a).abs().max((s.z - z).abs()).max(s.v.abs()));
        }
    }
    pass_if(
        worst <= 1e-9,
        format!("10 rest points over t = 100, max drift = {worst:.3e} (1e-9)"),
    )
}

fn negative_control() -> Outcome {
    let p = BoucWenParams::reference();
    let base = p.to_duhem().unwrap().functions().clone();
    let (f1, _) = hysteresis_pair(p.hysteresis_scale(), p.beta, p.gamma, p.n);
    let flipped = ScalarFunction::new("f1_flipped", move |z| -f1.eval(z));
    let funcs = DuhemFunctions {
        f1: flipped,
        c: DampingFunction::new("zero", |_, _, _| 0.0),
        ..base
    };
    let (sys, report) = DuhemSystem::new("non_dissipative", funcs).validated(&ValidationGrid::default());
    let conditions: Vec<&str> = report.violations.iter().map(|v| v.condition.as_str()).collect();
    let refused = matches!(
        verify_theorem_main(
            &sys,
            State::new(1.0, 1.0, 0.0),
            &IntegratorConfig::default().with_t_end(100.0),
            &ConvergenceTolerances::default()
        ),
        Err(DuhemError::NotValidated(_)) | Err(DuhemError::VerificationFailure(_))
    );
    pass_if(
        !report.is_valid() && refused,
        format!("validation violations {conditions:?}, verification refused = {refused}"),
    )
}

fn main() -> ExitCode {
    let started = std::time::Instant::now();
    let cases = corpus();
    let long: Vec<Trajectory> = cases
        .par_iter()
        .map(|c| integrate(&c.sys, c.init, &IntegratorConfig::default()).expect("integration to t = 1e4"))
        .collect();
    let extra = branch_runs();

    let criteria: Vec<(&str, Outcome)> = vec![
        ("pointwise dissipativity", pointwise_dissipativity()),
        ("orbital monotonicity", orbital_monotonicity(&cases)),
        (
            "convergence to a rest point in the initial sublevel set",
            convergence(&cases, &long),
        ),
        ("Bouc-Wen terminal relation", terminal_relation(&cases)),
        ("limit predictor agreement", limit_predictor(&cases, &long, &extra)),
        ("integrator oracle equivalence", integrator_oracle(&cases)),
        ("J-function laws", j_laws()),
        ("rest points are fixed", fixed_points()),
        ("non-dissipative negative control", negative_control()),
    ];

    let mut failed = 0;
    for (i, (name, o)) in criteria.iter().enumerate() {
        let tag = if o.passed { "PASS" } else { "FAIL" };
        println!("{tag} [{}] {name}: {}", i + 1, o.detail);
        failed += usize::from(!o.passed);
    }
    println!(
        "{} of {} criteria passed in {:.1} s",
        criteria.len() - failed,
        criteria.len(),
        started.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

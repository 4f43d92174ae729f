//! Scalar root finding, 1-D minimization and quadrature.
//!
//! Everything here is derivative-free: the functions it serves are only
//! known to be continuous and monotone.

use crate::error::{DuhemError, Result};

/// Result of a bracketing root search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Root {
    pub x: f64,
    /// Final bracket `[lo, hi]` containing the sign change.
    pub bracket: (f64, f64),
    pub residual: f64,
}

/// Bisection on `[lo, hi]` where `f(lo)` and `f(hi)` differ in sign (or one
/// vanishes). Runs until the bracket is `xtol` wide or cannot be split
/// further in floating point.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, xtol: f64) -> Option<Root> {
    if lo > hi {
        std::mem::swap(&mut lo, &mut hi);
    }
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Some(Root {
            x: lo,
            bracket: (lo, lo),
            residual: 0.0,
        });
    }
    if fhi == 0.0 {
        return Some(Root {
            x: hi,
            bracket: (hi, hi),
            residual: 0.0,
        });
    }
    if !(flo.is_finite() && fhi.is_finite()) || flo.signum() == fhi.signum() {
        return None;
    }
    for _ in 0..2000 {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi || hi - lo <= xtol {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Some(Root {
                x: mid,
                bracket: (mid, mid),
                residual: 0.0,
            });
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    let x = lo + 0.5 * (hi - lo);
    Some(Root {
        x,
        bracket: (lo, hi),
        residual: f(x),
    })
}

/// Solves `f(x) = y` for strictly increasing `f` by doubling a symmetric
/// bracket around zero, at most `max_doublings` times, then bisecting.
pub fn invert_increasing<F: Fn(f64) -> f64>(f: F, y: f64, name: &str, max_doublings: u32) -> Result<f64> {
    let g = |u: f64| f(u) - y;
    let mut lo = -1.0f64;
    let mut hi = 1.0f64;
    let mut n = 0;
    while !(g(lo) <= 0.0 && g(hi) >= 0.0) {
        n += 1;
        if n > max_doublings || !lo.is_finite() || !hi.is_finite() {
            return Err(DuhemError::InversionFailure {
                function: name.to_string(),
                y,
            });
        }
        lo *= 2.0;
        hi *= 2.0;
    }
    bisect(g, lo, hi, 0.0)
        .map(|r| r.x)
        .ok_or_else(|| DuhemError::InversionFailure {
            function: name.to_string(),
            y,
        })
}

/// A 1-D minimum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub value: f64,
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search on `[a, b]` until the bracket is `xtol` wide.
pub fn golden_section<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, xtol: f64) -> Minimum {
    if a > b {
        std::mem::swap(&mut a, &mut b);
    }
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..500 {
        if (b - a) <= xtol {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    // Keep the best point seen, including the bracket ends.
    let mut best = if fc <= fd {
        Minimum { x: c, value: fc }
    } else {
        Minimum { x: d, value: fd }
    };
    for x in [a, b] {
        let v = f(x);
        if v < best.value {
            best = Minimum { x, value: v };
        }
    }
    best
}

/// Evaluates `f` on `n + 1` evenly spaced points of `[a, b]` and refines the
/// best one by golden-section search on its neighbouring cells. Does not
/// assume unimodality on `[a, b]`.
pub fn scan_then_golden<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, n: usize, xtol: f64) -> Minimum {
    let n = n.max(2);
    let h = (b - a) / n as f64;
    let mut best_i = 0;
    let mut best_v = f64::INFINITY;
    for i in 0..=n {
        let x = if i == n { b } else { a + i as f64 * h };
        let v = f(x);
        if v < best_v {
            best_v = v;
            best_i = i;
        }
    }
    let lo = a + best_i.saturating_sub(1) as f64 * h;
    let hi = (a + (best_i + 1) as f64 * h).min(b);
    let refined = golden_section(&mut f, lo, hi, xtol);
    let grid_x = if best_i == n { b } else { a + best_i as f64 * h };
    if refined.value <= best_v {
        refined
    } else {
        Minimum {
            x: grid_x,
            value: best_v,
        }
    }
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance
/// `tol`, failing if any panel needs more than `max_depth` halvings.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64, max_depth: u32) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(&f, a, b, fa, fm, fb, whole, tol, max_depth, 0)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    max_depth: u32,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if !delta.is_finite() {
        return Err(DuhemError::QuadratureFailure { a, b, depth });
    }
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth >= max_depth {
        return Err(DuhemError::QuadratureFailure { a, b, depth });
    }
    let l = simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, max_depth, depth + 1)?;
    let r = simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, max_depth, depth + 1)?;
    Ok(l + r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_cubic_root() {
        let r = bisect(|a| -a * a * a - a - 1.0, -1.0, 0.0, 0.0).unwrap();
        assert!((r.x - -0.682_327_803_828_019_3).abs() < 1e-15);
    }

    #[test]
    fn bisect_requires_sign_change() {
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 0.0).is_none());
        assert_eq!(bisect(|x| x, 0.0, 1.0, 0.0).unwrap().x, 0.0);
    }

    #[test]
    fn inversion_expands_bracket() {
        let x = invert_increasing(|u| u * u * u, 1e6, "cube", 1000).unwrap();
        assert!((x - 100.0).abs() < 1e-10);
        let e = invert_increasing(|u| u.atan(), 2.0, "atan", 1000);
        assert!(matches!(e, Err(DuhemError::InversionFailure { .. })));
    }

    #[test]
    fn golden_section_on_parabola() {
        let m = golden_section(|x| (x - 0.3) * (x - 0.3) + 1.0, -2.0, 5.0, 1e-12);
        assert!((m.x - 0.3).abs() < 1e-6);
        assert!((m.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scan_avoids_local_minimum() {
        // Local minimum near x = 1.13, global near x = -1.30.
        let f = |x: f64| x.powi(4) - 3.0 * x * x + x;
        let m = scan_then_golden(f, -3.0, 3.0, 400, 1e-12);
        assert!(m.x < 0.0 && (m.x - -1.300_839_565_941_577).abs() < 1e-6, "{m:?}");
    }

    #[test]
    fn simpson_matches_closed_forms() {
        let v = adaptive_simpson(|s| s * s * s, 0.0, 2.0, 1e-10, 60).unwrap();
        assert!((v - 4.0).abs() < 1e-12);
        let v = adaptive_simpson(f64::sin, 0.0, std::f64::consts::PI, 1e-10, 60).unwrap();
        assert!((v - 2.0).abs() < 1e-10);
        let v = adaptive_simpson(|s| s.abs().sqrt(), -1.0, 0.0, 1e-10, 60).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn simpson_reports_depth_exhaustion() {
        let r = adaptive_simpson(|s| if s > 0.5 { 1e12 } else { 0.0 }, 0.0, 1.0, 1e-10, 5);
        assert!(matches!(r, Err(DuhemError::QuadratureFailure { .. })));
    }
}

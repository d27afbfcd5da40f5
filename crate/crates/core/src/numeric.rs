//! Small numeric kit: central finite differences, scalar maximization with
//! bracket expansion, and the shared step/tolerance configuration.

use crate::error::{Error, Result};

/// Step sizes, tolerances and iteration budgets shared by the numeric kit.
#[derive(Debug, Clone)]
pub struct NumericKitConfig {
    /// Relative step for central differences (default: cube root of machine epsilon).
    pub fd_step_scale: f64,
    /// Absolute/relative tolerance on the argmax location.
    pub opt_tol: f64,
    /// Default search bracket as multipliers of a positive center value.
    pub opt_bracket_scale: (f64, f64),
    /// Iteration budget for the optimizer and root searches.
    pub max_iter: usize,
}

impl Default for NumericKitConfig {
    fn default() -> Self {
        NumericKitConfig {
            fd_step_scale: f64::EPSILON.cbrt(),
            opt_tol: 1e-10,
            opt_bracket_scale: (1.0 / 50.0, 50.0),
            max_iter: 200,
        }
    }
}

impl NumericKitConfig {
    /// Default bracket around a positive center (e.g. the MLE of ψ).
    pub fn bracket_around(&self, center: f64) -> (f64, f64) {
        (
            center * self.opt_bracket_scale.0,
            center * self.opt_bracket_scale.1,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let positive = self.fd_step_scale > 0.0
            && self.opt_tol > 0.0
            && self.opt_bracket_scale.0 > 0.0
            && self.opt_bracket_scale.1 > 0.0;
        if !positive || self.opt_bracket_scale.0 >= self.opt_bracket_scale.1 || self.max_iter == 0 {
            return Err(Error::DegenerateData(
                "numeric kit settings must be positive with bracket low < high".into(),
            ));
        }
        Ok(())
    }
}

/// Derivative order for [`fd_derivative`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivOrder {
    First,
    Second,
}

/// Central finite difference with step `fd_step_scale * max(1, |x|)`.
pub fn fd_derivative(
    f: impl Fn(f64) -> f64,
    x: f64,
    order: DerivOrder,
    kit: &NumericKitConfig,
) -> Result<f64> {
    let h = kit.fd_step_scale * x.abs().max(1.0);
    let d = central_diff(&f, x, h, order);
    if d.is_finite() {
        Ok(d)
    } else {
        Err(Error::EvaluationFailure { x })
    }
}

/// Central difference at steps `h` and `h/2`, Richardson-extrapolated to
/// cancel the leading O(h²) truncation term. Used where each function
/// evaluation carries its own noise floor (inner optimizations), so the base
/// step is taken much larger than for a plain central difference.
pub fn fd_derivative_richardson(
    f: impl Fn(f64) -> f64,
    x: f64,
    order: DerivOrder,
    kit: &NumericKitConfig,
) -> Result<f64> {
    let h = kit.fd_step_scale.sqrt() * x.abs().max(1.0);
    let coarse = central_diff(&f, x, h, order);
    let fine = central_diff(&f, x, h / 2.0, order);
    let d = (4.0 * fine - coarse) / 3.0;
    if d.is_finite() {
        Ok(d)
    } else {
        Err(Error::EvaluationFailure { x })
    }
}

fn central_diff(f: &impl Fn(f64) -> f64, x: f64, h: f64, order: DerivOrder) -> f64 {
    match order {
        DerivOrder::First => (f(x + h) - f(x - h)) / (2.0 * h),
        DerivOrder::Second => (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h),
    }
}

/// Result of a scalar maximization.
#[derive(Debug, Clone, Copy)]
pub struct ScalarMax {
    pub x: f64,
    pub value: f64,
    pub evaluations: usize,
}

const BRACKET_EXPANSIONS: usize = 4;
const EXPANSION_FACTOR: f64 = 10.0;

/// Maximize a unimodal function over a bracket.
///
/// Runs a Brent-style golden-section/parabolic narrowing; when the search
/// converges onto a bracket boundary, that side is expanded geometrically
/// (up to four times) and the search rerun. A fixed-step parabolic polish
/// then tightens the argmax past the comparison noise floor near the
/// maximum. Non-finite evaluations fail the search rather than being
/// skipped.
pub fn maximize_scalar(
    f: impl Fn(f64) -> f64,
    bracket: (f64, f64),
    kit: &NumericKitConfig,
) -> Result<ScalarMax> {
    let (mut lo, mut hi) = bracket;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::BracketFailure { expansions: 0 });
    }
    let mut evals = 0usize;
    let mut eval = |x: f64| -> Result<f64> {
        evals += 1;
        let v = f(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::EvaluationFailure { x })
        }
    };

    let mut expansions = 0usize;
    let (mut x, mut fx) = loop {
        let (x, fx) = brent_max(&mut eval, lo, hi, kit)?;
        let tol = kit.opt_tol * x.abs().max(1.0) + f64::EPSILON;
        if x - lo <= 8.0 * tol {
            if expansions >= BRACKET_EXPANSIONS {
                return Err(Error::BracketFailure { expansions });
            }
            expansions += 1;
            if lo > 0.0 {
                lo /= EXPANSION_FACTOR;
            } else {
                lo -= EXPANSION_FACTOR * (hi - lo);
            }
        } else if hi - x <= 8.0 * tol {
            if expansions >= BRACKET_EXPANSIONS {
                return Err(Error::BracketFailure { expansions });
            }
            expansions += 1;
            if hi > 0.0 {
                hi *= EXPANSION_FACTOR;
            } else {
                hi += EXPANSION_FACTOR * (hi - lo);
            }
        } else {
            break (x, fx);
        }
    };

    // Parabolic polish at a fixed step well above the rounding noise floor.
    // Near the maximum, function-value comparisons carry O(sqrt(eps)) noise
    // in x; the fitted vertex does not, so it is taken whenever the fit is
    // concave and the step stays local.
    let delta = 3e-5 * x.abs().max(1.0);
    if x - delta > lo && x + delta < hi {
        let fm = eval(x - delta)?;
        let fp = eval(x + delta)?;
        let denom = fp - 2.0 * fx + fm;
        if denom < 0.0 {
            let step = -0.5 * delta * (fp - fm) / denom;
            if step.abs() < delta {
                x += step;
                fx = eval(x)?.max(fx);
            }
        }
    }

    Ok(ScalarMax {
        x,
        value: fx,
        evaluations: evals,
    })
}

fn brent_max(
    eval: &mut impl FnMut(f64) -> Result<f64>,
    lo: f64,
    hi: f64,
    kit: &NumericKitConfig,
) -> Result<(f64, f64)> {
    let golden = 0.381_966_011_250_105_f64;
    let (mut a, mut b) = (lo, hi);
    let mut x = a + golden * (b - a);
    let mut w = x;
    let mut v = x;
    let mut fx = eval(x)?;
    let mut fw = fx;
    let mut fv = fx;
    let mut d = 0.0_f64;
    let mut e = 0.0_f64;
    for _ in 0..kit.max_iter {
        let m = 0.5 * (a + b);
        let tol1 = kit.opt_tol * x.abs().max(1.0) + f64::EPSILON;
        let tol2 = 2.0 * tol1;
        if (x - m).abs() <= tol2 - 0.5 * (b - a) {
            return Ok((x, fx));
        }
        let mut use_golden = true;
        if e.abs() > tol1 {
            // trial parabolic step through (v, w, x)
            let r = (x - w) * (fx - fv);
            let q0 = (x - v) * (fx - fw);
            let mut p = (x - v) * q0 - (x - w) * r;
            let mut q = 2.0 * (q0 - r);
            if q > 0.0 {
                p = -p;
            } else {
                q = -q;
            }
            let e_prev = e;
            e = d;
            if p.abs() < (0.5 * q * e_prev).abs() && p > q * (a - x) && p < q * (b - x) {
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if x < m { tol1 } else { -tol1 };
                }
                use_golden = false;
            }
        }
        if use_golden {
            e = if x < m { b - x } else { a - x };
            d = golden * e;
        }
        let u = if d.abs() >= tol1 {
            x + d
        } else {
            x + if d >= 0.0 { tol1 } else { -tol1 }
        };
        let fu = eval(u)?;
        if fu >= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u >= x {
                b = u;
            } else {
                a = u;
            }
            if fu >= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu >= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    Err(Error::NonConvergence {
        max_iter: kit.max_iter,
    })
}

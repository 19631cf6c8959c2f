//! Scalar special functions the closed-form allocations depend on: the
//! principal branch of the Lambert W function and the helper
//! `phi(x) = ln(1 + 1/x) - 1/(1 + x)`.
//!
//! Lambert W is evaluated with Halley's iteration from region-specific
//! starting points, with no external special-function dependency, so results
//! are bit-reproducible across platforms.

use std::f64::consts::E;

use crate::error::{Error, Result};

/// Absolute slack accepted below the branch point `-1/e` before rejecting the
/// argument. Arguments of the form `(psi*g - 1)/e` can land a rounding error
/// below the branch point when `psi*g -> 0`; they are clamped onto it.
const BRANCH_SLACK: f64 = 1e-12;

/// Arguments this close to the branch point are evaluated with the series
/// expansion directly; Halley's denominator degenerates there.
const SERIES_CUTOFF: f64 = 1e-8;

/// Principal branch `W0` of the Lambert W function: the solution `y >= -1` of
/// `y * exp(y) = x`, defined for `x >= -1/e`.
///
/// The residual `|W0(x) exp(W0(x)) - x|` stays within `1e-12 * (1 + |x|)`
/// across the domain. Arguments more than `1e-12` below `-1/e` are a domain
/// error; anything closer is treated as the branch point itself.
pub fn lambert_w0(x: f64) -> Result<f64> {
    let branch = -1.0 / E;
    if !x.is_finite() || x < branch - BRANCH_SLACK {
        return Err(Error::Domain(format!(
            "lambert_w0: argument {x} outside [-1/e, inf)"
        )));
    }
    let x = x.max(branch);
    if x == 0.0 {
        return Ok(0.0);
    }
    if x <= branch + SERIES_CUTOFF {
        return Ok(branch_series(x));
    }

    // Region-specific starting points, then Halley iteration on
    // f(w) = w e^w - x.
    let mut w = if x < -0.25 {
        branch_series(x)
    } else if x <= 0.5 {
        // two leading terms of the Taylor series at 0
        x * (1.0 - x)
    } else if x <= E {
        (1.0 + x).ln()
    } else {
        let l1 = x.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    };

    for _ in 0..40 {
        let ew = w.exp();
        let f = w * ew - x;
        if f == 0.0 {
            break;
        }
        let wp1 = w + 1.0;
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        if denom == 0.0 {
            break;
        }
        let step = f / denom;
        w -= step;
        if w < -1.0 {
            // keep the iterate on the principal branch
            w = -1.0 + 1e-12;
        }
        if step.abs() <= 4.0 * f64::EPSILON * (1.0 + w.abs()) {
            break;
        }
    }
    Ok(w)
}

/// Series expansion of `W0` around the branch point, in
/// `q = sqrt(2 (1 + e x))`. Accurate to well under 1e-12 for `q < 1e-3`.
fn branch_series(x: f64) -> f64 {
    let q = (2.0 * (1.0 + E * x)).max(0.0).sqrt();
    let w = -1.0 + q * (1.0 + q * (-1.0 / 3.0 + q * (11.0 / 72.0 - q * 43.0 / 540.0)));
    w.max(-1.0)
}

/// `phi(x) = ln(1 + 1/x) - 1/(1 + x)` for `x > 0`.
///
/// Strictly positive and strictly decreasing on its domain, with
/// `phi(x) -> 0` as `x -> inf`. Used by the joint-allocation optimality
/// analysis and its tests.
pub fn phi(x: f64) -> Result<f64> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::Domain(format!("phi: argument {x} not positive")));
    }
    Ok((1.0 / x).ln_1p() - 1.0 / (1.0 + x))
}

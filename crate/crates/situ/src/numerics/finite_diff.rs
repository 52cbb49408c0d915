//! Central finite differences. Independent of the tape by construction;
//! used as the reference when validating backpropagated gradients.

use crate::error::{Error, Result};

/// Gradient estimate (f(θ+h·eᵢ) − f(θ−h·eᵢ)) / 2h for every coordinate.
pub fn finite_diff_grad<F>(mut f: F, theta: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if !(h > 0.0) {
        return Err(Error::Contract(format!("finite_diff_grad: step must be positive, got {h}")));
    }
    let mut work = theta.to_vec();
    let mut grad = Vec::with_capacity(theta.len());
    for i in 0..theta.len() {
        let orig = work[i];
        work[i] = orig + h;
        let fp = f(&work)?;
        work[i] = orig - h;
        let fm = f(&work)?;
        work[i] = orig;
        if !fp.is_finite() || !fm.is_finite() {
            return Err(Error::NonFinite(format!(
                "finite_diff_grad: non-finite function value at coordinate {i} (f+={fp}, f-={fm})"
            )));
        }
        grad.push((fp - fm) / (2.0 * h));
    }
    Ok(grad)
}

/// max_i |a_i − b_i| / max(|b_i|, 1e-6). The floor keeps near-zero reference
/// gradients from blowing up the ratio.
pub fn max_rel_err(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "max_rel_err: length mismatch");
    let mut worst = 0.0f64;
    for (&x, &y) in a.iter().zip(b) {
        let denom = y.abs().max(1e-6);
        let e = (x - y).abs() / denom;
        if e > worst {
            worst = e;
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_gradient() {
        // f(θ) = Σ θ²: ∇f(θ)ᵢ = 2θᵢ, so at θ = [3] the slope is 6.
        let g = finite_diff_grad(|t| Ok(t.iter().map(|v| v * v).sum()), &[3.0], 1e-5).unwrap();
        assert!((g[0] - 6.0).abs() < 1e-8, "got {}", g[0]);
    }

    #[test]
    fn constant_function_has_zero_gradient() {
        let g = finite_diff_grad(|_| Ok(42.0), &[1.0, -2.0, 0.5], 1e-5).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn non_finite_value_is_reported_with_coordinate() {
        let f = |t: &[f64]| {
            if t[1] > 1.0 {
                Ok(f64::NAN)
            } else {
                Ok(t[0])
            }
        };
        let err = finite_diff_grad(f, &[0.0, 1.0], 1e-1).unwrap_err().to_string();
        assert!(err.contains("coordinate 1"), "got: {err}");
    }

    #[test]
    fn rejects_nonpositive_step() {
        assert!(finite_diff_grad(|_| Ok(0.0), &[1.0], 0.0).is_err());
        assert!(finite_diff_grad(|_| Ok(0.0), &[1.0], -1e-5).is_err());
    }
}

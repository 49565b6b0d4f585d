use crate::error::{numeric, Result};

pub const FD_STEP: f64 = 1e-5;

/// Worst relative error between the analytic gradient returned by `f` and a
/// central finite difference with step [`FD_STEP`], using
/// `|a - n| / max(1, |a|, |n|)`.
///
/// `f` returns the loss value and its analytic gradient at the given point.
pub fn grad_check<F>(f: F, params: &[f64]) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let (value, analytic) = f(params)?;
    if !value.is_finite() {
        return Err(numeric("loss is not finite at the base point"));
    }
    if analytic.len() != params.len() {
        return Err(crate::error::invalid("gradient length differs from parameter length"));
    }
    let mut p = params.to_vec();
    let mut worst = 0.0f64;
    for i in 0..p.len() {
        let orig = p[i];
        p[i] = orig + FD_STEP;
        let plus = f(&p)?.0;
        p[i] = orig - FD_STEP;
        let minus = f(&p)?.0;
        p[i] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(numeric(format!("loss is not finite when perturbing parameter {i}")));
        }
        let fd = (plus - minus) / (2.0 * FD_STEP);
        let a = analytic[i];
        let err = (a - fd).abs() / 1.0f64.max(a.abs()).max(fd.abs());
        worst = worst.max(err);
    }
    Ok(worst)
}

use super::OnlineError;

/// `(y^λ − 1) / λ`, or `ln y` when `λ = 0`.
pub fn boxcox_transform(y: f64, lambda: f64) -> Result<f64, OnlineError> {
    if !(y > 0.0) || !y.is_finite() {
        return Err(OnlineError::NonPositiveTarget(y));
    }
    Ok(if lambda == 0.0 { y.ln() } else { (y.powf(lambda) - 1.0) / lambda })
}

/// Exact inverse of [`boxcox_transform`]; `None` outside its range.
pub fn boxcox_inverse(z: f64, lambda: f64) -> Option<f64> {
    let y = if lambda == 0.0 {
        z.exp()
    } else {
        let base = 1.0 + lambda * z;
        if base <= 0.0 {
            return None;
        }
        base.powf(1.0 / lambda)
    };
    (y.is_finite() && y > 0.0).then_some(y)
}

/// Inverse with out-of-range inputs clamped to the domain boundary: `0`
/// below it, `f64::MAX` above it. The flag reports a clamp.
pub fn boxcox_inverse_clamped(z: f64, lambda: f64) -> (f64, bool) {
    if let Some(y) = boxcox_inverse(z, lambda) {
        return (y, false);
    }
    let y = if lambda == 0.0 {
        if z > 0.0 {
            f64::MAX
        } else {
            0.0
        }
    } else if lambda > 0.0 {
        if 1.0 + lambda * z <= 0.0 {
            0.0
        } else {
            f64::MAX
        }
    } else if 1.0 + lambda * z <= 0.0 {
        f64::MAX
    } else {
        0.0
    };
    (y, true)
}

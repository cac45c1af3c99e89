use crate::geom::{Mat3, Vec3};

/// Angle of the relative rotation `r_hatᵀ·r_star`, in degrees.
///
/// The cosine `(trace − 1)/2` is clamped to `[−1, 1]`; the angle is then
/// recovered together with the sine from the skew part, which keeps full
/// precision near 0° and 180° where `acos` alone loses about half the digits.
pub fn rotation_error(r_hat: &Mat3, r_star: &Mat3) -> f64 {
    let rel = r_hat.transpose() * r_star;
    let cos = ((rel.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    let skew = Vec3::new(
        rel[(2, 1)] - rel[(1, 2)],
        rel[(0, 2)] - rel[(2, 0)],
        rel[(1, 0)] - rel[(0, 1)],
    );
    let sin = (skew.norm() / 2.0).min(1.0);
    sin.atan2(cos).to_degrees()
}

pub fn translation_error(t_hat: &Vec3, t_star: &Vec3) -> f64 {
    (t_hat - t_star).norm()
}

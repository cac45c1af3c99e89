use nalgebra::{Rotation3, Unit};

use super::{Mat3, Vec3};
use crate::error::{Error, Result};
use crate::tolerances::{DEGENERATE_SV_RATIO, ROTATION_DET_TOL, ROTATION_ORTHO_TOL};

/// A proper rigid motion `x ↦ R·x + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn identity() -> Self {
        RigidTransform {
            rotation: Mat3::identity(),
            translation: Vec3::zeros(),
        }
    }

    /// Validating constructor.
    pub fn new(rotation: Mat3, translation: Vec3) -> Result<Self> {
        let t = RigidTransform {
            rotation,
            translation,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn from_axis_angle(axis: &Vec3, angle_rad: f64, translation: Vec3) -> Self {
        let rotation = if axis.norm() == 0.0 || angle_rad == 0.0 {
            Mat3::identity()
        } else {
            Rotation3::from_axis_angle(&Unit::new_normalize(*axis), angle_rad).into_inner()
        };
        RigidTransform {
            rotation,
            translation,
        }
    }

    pub fn from_translation(translation: Vec3) -> Self {
        RigidTransform {
            rotation: Mat3::identity(),
            translation,
        }
    }

    /// Checks orthonormality and a +1 determinant against the crate tolerances.
    pub fn validate(&self) -> Result<()> {
        if !self
            .rotation
            .iter()
            .chain(self.translation.iter())
            .all(|v| v.is_finite())
        {
            return Err(Error::NonFinite("transform entry"));
        }
        let ortho = (self.rotation.transpose() * self.rotation - Mat3::identity()).amax();
        if ortho > ROTATION_ORTHO_TOL {
            return Err(Error::InvalidRotation(format!(
                "‖RᵀR − I‖∞ = {ortho:e}"
            )));
        }
        let det = self.rotation.determinant();
        if (det - 1.0).abs() > ROTATION_DET_TOL {
            return Err(Error::InvalidRotation(format!("det(R) = {det}")));
        }
        Ok(())
    }

    #[inline]
    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        RigidTransform {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// Row-major rotation followed by translation.
    pub fn to_row12(&self) -> [f64; 12] {
        let r = &self.rotation;
        let t = &self.translation;
        [
            r[(0, 0)],
            r[(0, 1)],
            r[(0, 2)],
            r[(1, 0)],
            r[(1, 1)],
            r[(1, 2)],
            r[(2, 0)],
            r[(2, 1)],
            r[(2, 2)],
            t.x,
            t.y,
            t.z,
        ]
    }

    pub fn from_row12(v: &[f64; 12]) -> RigidTransform {
        RigidTransform {
            rotation: Mat3::new(v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8]),
            translation: Vec3::new(v[9], v[10], v[11]),
        }
    }
}

impl serde::Serialize for RigidTransform {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_row12().serialize(s)
    }
}

impl<'de> serde::Deserialize<'de> for RigidTransform {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = <[f64; 12]>::deserialize(d)?;
        Ok(RigidTransform::from_row12(&v))
    }
}

/// Least-squares rigid transform mapping `src[i]` onto `tgt[i]` (Kabsch).
///
/// Reflections are excluded by flipping the singular direction with the
/// smallest singular value. Collinear or coincident inputs, detected as a
/// second singular value below `1e-12` times the first, are rejected.
pub fn estimate_rigid(src: &[Vec3], tgt: &[Vec3]) -> Result<RigidTransform> {
    if src.len() != tgt.len() {
        return Err(Error::LengthMismatch(src.len(), tgt.len()));
    }
    if src.len() < 3 {
        return Err(Error::InsufficientCorrespondences {
            needed: 3,
            got: src.len(),
        });
    }
    let n = src.len() as f64;
    let cs = src.iter().fold(Vec3::zeros(), |a, p| a + p) / n;
    let ct = tgt.iter().fold(Vec3::zeros(), |a, p| a + p) / n;
    let mut h = Mat3::zeros();
    for (p, q) in src.iter().zip(tgt) {
        h += (p - cs) * (q - ct).transpose();
    }
    if !h.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("cross-covariance"));
    }

    let svd = h.svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::DegenerateConfiguration),
    };
    let s = svd.singular_values;
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    let (s_max, s_mid) = (s[order[0]], s[order[1]]);
    if s_max <= 0.0 || s_mid < DEGENERATE_SV_RATIO * s_max {
        return Err(Error::DegenerateConfiguration);
    }

    let v = v_t.transpose();
    let ut = u.transpose();
    let mut d = Mat3::identity();
    if (v * ut).determinant() < 0.0 {
        d[(order[2], order[2])] = -1.0;
    }
    let rotation = v * d * ut;
    let translation = ct - rotation * cs;
    let t = RigidTransform {
        rotation,
        translation,
    };
    t.validate()?;
    Ok(t)
}

use nalgebra::{Matrix3, Matrix4, Quaternion, Rotation3, Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Proper rigid transform: a rotation followed by a translation.
///
/// Rotations are unit quaternions and are renormalized after every
/// composition so long chains do not drift off the rotation group.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RigidTransform {
    pub position: Vector3<f64>,
    pub rotation: UnitQuaternion<f64>,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            position: Vector3::zeros(),
            rotation: UnitQuaternion::identity(),
        }
    }

    pub fn new(position: Vector3<f64>, rotation: UnitQuaternion<f64>) -> Self {
        Self { position, rotation }
    }

    pub fn from_translation(x: f64, y: f64, z: f64) -> Self {
        Self::new(Vector3::new(x, y, z), UnitQuaternion::identity())
    }

    pub fn from_rotation(rotation: UnitQuaternion<f64>) -> Self {
        Self::new(Vector3::zeros(), rotation)
    }

    /// Rotation of `angle` radians about `axis` (need not be normalized).
    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Self {
        Self::from_rotation(UnitQuaternion::from_axis_angle(
            &Unit::new_normalize(*axis),
            angle,
        ))
    }

    pub fn rot_x(angle: f64) -> Self {
        Self::from_axis_angle(&Vector3::x(), angle)
    }

    pub fn rot_y(angle: f64) -> Self {
        Self::from_axis_angle(&Vector3::y(), angle)
    }

    pub fn rot_z(angle: f64) -> Self {
        Self::from_axis_angle(&Vector3::z(), angle)
    }

    /// Same rotation, different origin.
    pub fn with_position(mut self, position: Vector3<f64>) -> Self {
        self.position = position;
        self
    }

    /// Builds a frame from orthonormal, right-handed axes.
    pub fn from_axes(x: Vector3<f64>, y: Vector3<f64>, z: Vector3<f64>, position: Vector3<f64>) -> Self {
        let rotation = UnitQuaternion::from_rotation_matrix(&Rotation3::from_basis_unchecked(&[x, y, z]));
        Self { position, rotation }
    }

    /// `self ∘ other`: applies `other` first, then `self`.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        let mut rotation = self.rotation * other.rotation;
        rotation.renormalize();
        RigidTransform {
            position: self.position + self.rotation * other.position,
            rotation,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let rotation = self.rotation.inverse();
        RigidTransform {
            position: -(rotation * self.position),
            rotation,
        }
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.position + self.rotation * p
    }

    pub fn transform_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    pub fn inverse_transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.inverse() * (p - self.position)
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        self.rotation.to_rotation_matrix().into_inner()
    }

    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation_matrix());
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.position);
        m
    }

    /// Local axis `i` (0 = x, 1 = y, 2 = z) expressed in the parent frame.
    pub fn axis(&self, i: usize) -> Vector3<f64> {
        let mut e = Vector3::zeros();
        e[i] = 1.0;
        self.rotation * e
    }

    /// Angle of the relative rotation between the two transforms.
    pub fn angle_to(&self, other: &RigidTransform) -> f64 {
        self.rotation.angle_to(&other.rotation)
    }

    pub fn distance_to(&self, other: &RigidTransform) -> f64 {
        (self.position - other.position).norm()
    }

    /// Position and orientation agree within the given tolerances.
    pub fn approx_eq(&self, other: &RigidTransform, pos_tol: f64, ang_tol: f64) -> bool {
        self.distance_to(other) <= pos_tol && self.angle_to(other) <= ang_tol
    }

    /// Quaternion components in w, x, y, z order.
    pub fn quaternion_wxyz(&self) -> [f64; 4] {
        let q = self.rotation.quaternion();
        [q.w, q.i, q.j, q.k]
    }

    /// Rotation from w, x, y, z components. Components that already have unit
    /// norm (to 1e-12) are kept bit-for-bit; others are normalized.
    pub fn from_position_wxyz(position: [f64; 3], wxyz: [f64; 4]) -> Result<Self, String> {
        let q = Quaternion::new(wxyz[0], wxyz[1], wxyz[2], wxyz[3]);
        let norm = q.norm();
        if !norm.is_finite() || norm < 1e-6 {
            return Err(format!("degenerate quaternion {wxyz:?}"));
        }
        if position.iter().any(|v| !v.is_finite()) {
            return Err(format!("non-finite position {position:?}"));
        }
        let rotation = if (norm - 1.0).abs() <= 1e-12 {
            UnitQuaternion::new_unchecked(q)
        } else {
            UnitQuaternion::new_normalize(q)
        };
        Ok(Self::new(Vector3::from(position), rotation))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoseRepr {
    position: [f64; 3],
    quaternion: [f64; 4],
}

impl Serialize for RigidTransform {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        PoseRepr {
            position: [self.position.x, self.position.y, self.position.z],
            quaternion: self.quaternion_wxyz(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for RigidTransform {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = PoseRepr::deserialize(d)?;
        RigidTransform::from_position_wxyz(repr.position, repr.quaternion)
            .map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn assert_close(a: &RigidTransform, b: &RigidTransform, tol: f64) {
        let ma = a.to_homogeneous();
        let mb = b.to_homogeneous();
        assert!((ma - mb).abs().max() <= tol, "{ma} vs {mb}");
    }

    #[test]
    fn compose_with_identity() {
        let t = RigidTransform::rot_z(0.3).with_position(Vector3::new(0.1, -2.0, 0.5));
        let id = RigidTransform::identity();
        assert_close(&t.compose(&id), &t, 1e-12);
        assert_close(&id.compose(&t), &t, 1e-12);
        assert_close(&t.compose(&t.inverse()), &id, 1e-9);
    }

    #[test]
    fn compose_matches_homogeneous_product() {
        // rotZ(90°)@(1,0,0) ∘ translate(0,0,0.1)
        let a = RigidTransform::rot_z(FRAC_PI_2).with_position(Vector3::new(1.0, 0.0, 0.0));
        let b = RigidTransform::from_translation(0.0, 0.0, 0.1);
        let c = a.compose(&b);
        let oracle = a.to_homogeneous() * b.to_homogeneous();
        assert!((c.to_homogeneous() - oracle).abs().max() < 1e-12);
        assert!((c.position - Vector3::new(1.0, 0.0, 0.1)).norm() < 1e-12);
        assert!(c.angle_to(&RigidTransform::rot_z(FRAC_PI_2)) < 1e-12);
    }

    #[test]
    fn invert_cases() {
        let id = RigidTransform::identity();
        assert_close(&id.inverse(), &id, 0.0);
        let t = RigidTransform::from_translation(1.0, 2.0, 3.0);
        assert_close(&t.inverse(), &RigidTransform::from_translation(-1.0, -2.0, -3.0), 1e-15);
        let r = RigidTransform::rot_z(FRAC_PI_2).with_position(Vector3::new(1.0, 0.0, 0.0));
        let expected = RigidTransform::rot_z(-FRAC_PI_2).with_position(Vector3::new(0.0, 1.0, 0.0));
        assert_close(&r.inverse(), &expected, 1e-12);
        let oracle = r.to_homogeneous().try_inverse().unwrap();
        assert!((r.inverse().to_homogeneous() - oracle).abs().max() < 1e-12);
    }

    #[test]
    fn serde_keeps_bits() {
        let t = RigidTransform::from_axis_angle(&Vector3::new(0.3, -1.0, 0.2), 1.234)
            .with_position(Vector3::new(0.1, 1.0 / 3.0, -7.25));
        let s = serde_json::to_string(&t).unwrap();
        let back: RigidTransform = serde_json::from_str(&s).unwrap();
        assert_eq!(t, back);
    }

    #[test]
    fn unnormalized_quaternion_is_normalized() {
        let t: RigidTransform =
            serde_json::from_str(r#"{"position":[0,0,0],"quaternion":[0.7071,0,0,0.7071]}"#).unwrap();
        assert!((t.rotation.quaternion().norm() - 1.0).abs() < 1e-15);
        assert!(serde_json::from_str::<RigidTransform>(r#"{"position":[0,0,0],"quaternion":[0,0,0,0]}"#).is_err());
    }
}

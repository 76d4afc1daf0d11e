use super::{centroid, PointCloud, Vec3};
use crate::error::{Error, Result};
use nalgebra::{Matrix3, Rotation3, Unit};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Proper rigid motion `x -> R x + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vec3,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vec3::zeros(),
        }
    }

    pub fn new(rotation: Matrix3<f64>, translation: Vec3) -> Result<Self> {
        let t = Self {
            rotation,
            translation,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn from_translation(t: Vec3) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: t,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let r = &self.rotation;
        let ortho = (r.transpose() * r - Matrix3::identity()).abs().max();
        let det = r.determinant();
        if ortho > 1e-9 || (det - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "rotation is not proper orthonormal (|RtR-I|={ortho:e}, det={det})"
            )));
        }
        if !self.translation.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidInput("translation is not finite".into()));
        }
        Ok(())
    }

    pub fn apply_point(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    pub fn apply_vector(&self, v: &Vec3) -> Vec3 {
        self.rotation * v
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// `self ∘ first`: applies `first`, then `self`.
    pub fn compose(&self, first: &RigidTransform) -> Self {
        Self {
            rotation: self.rotation * first.rotation,
            translation: self.rotation * first.translation + self.translation,
        }
    }

    /// Rotation angle in degrees.
    pub fn angle_degrees(&self) -> f64 {
        let c = ((self.rotation.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
        c.acos().to_degrees()
    }

    /// Row-major 3×4 `[R | t]`.
    pub fn to_rows(&self) -> [[f64; 4]; 3] {
        let mut rows = [[0.0; 4]; 3];
        for (i, row) in rows.iter_mut().enumerate() {
            for j in 0..3 {
                row[j] = self.rotation[(i, j)];
            }
            row[3] = self.translation[i];
        }
        rows
    }

    pub fn from_rows(rows: &[[f64; 4]; 3]) -> Result<Self> {
        let rotation = Matrix3::from_fn(|i, j| rows[i][j]);
        let translation = Vec3::new(rows[0][3], rows[1][3], rows[2][3]);
        Self::new(rotation, translation)
    }
}

impl Serialize for RigidTransform {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for RigidTransform {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = <[[f64; 4]; 3]>::deserialize(d)?;
        RigidTransform::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// Maps points by `R x + t` and normals by `R n`.
pub fn apply_rigid(cloud: &PointCloud, t: &RigidTransform) -> PointCloud {
    PointCloud {
        points: cloud.points.iter().map(|p| t.apply_point(p)).collect(),
        normals: cloud
            .normals
            .as_ref()
            .map(|ns| ns.iter().map(|n| t.apply_vector(n)).collect()),
    }
}

/// Uniform random axis, angle uniform in `[0, max_angle]` degrees,
/// translation uniform in the cube of half-width `max_translation`.
pub fn random_rigid<R: Rng + ?Sized>(rng: &mut R, max_angle: f64, max_translation: f64) -> RigidTransform {
    assert!((0.0..=180.0).contains(&max_angle), "max_angle must be in [0, 180]");
    assert!(max_translation >= 0.0, "max_translation must be non-negative");
    let z: f64 = rng.random_range(-1.0..=1.0);
    let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let s = (1.0 - z * z).max(0.0).sqrt();
    let axis = Vec3::new(s * phi.cos(), s * phi.sin(), z);
    let angle = rng.random::<f64>() * max_angle.to_radians();
    let translation = Vec3::new(
        rng.random_range(-1.0..=1.0) * max_translation,
        rng.random_range(-1.0..=1.0) * max_translation,
        rng.random_range(-1.0..=1.0) * max_translation,
    );
    let rotation = if angle == 0.0 {
        Matrix3::identity()
    } else {
        Rotation3::from_axis_angle(&Unit::new_normalize(axis), angle).into_inner()
    };
    RigidTransform {
        rotation,
        translation,
    }
}

/// Least-squares rigid transform taking `src[i]` onto `dst[i]` (Kabsch).
pub fn best_fit_rigid(src: &[Vec3], dst: &[Vec3]) -> Result<RigidTransform> {
    if src.len() != dst.len() || src.is_empty() {
        return Err(Error::InvalidInput(format!(
            "rigid fit needs equal non-empty point sets ({} vs {})",
            src.len(),
            dst.len()
        )));
    }
    let cs = centroid(src);
    let cd = centroid(dst);
    let mut h = Matrix3::zeros();
    for (s, d) in src.iter().zip(dst) {
        h += (s - cs) * (d - cd).transpose();
    }
    let rotation = rotation_from_covariance(&h);
    Ok(RigidTransform {
        rotation,
        translation: cd - rotation * cs,
    })
}

/// Rotation `R` maximizing `tr(R H)` for covariance `H = Σ a bᵀ`, reflection-corrected.
pub(crate) fn rotation_from_covariance(h: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = h.svd(true, true);
    let u = svd.u.unwrap();
    let v_t = svd.v_t.unwrap();
    let mut r = v_t.transpose() * u.transpose();
    if r.determinant() < 0.0 {
        // flip the axis of the smallest singular value
        let (mut kmin, mut smin) = (0, f64::INFINITY);
        for k in 0..3 {
            if svd.singular_values[k] < smin {
                smin = svd.singular_values[k];
                kmin = k;
            }
        }
        let mut v = v_t.transpose();
        v.column_mut(kmin).neg_mut();
        r = v * u.transpose();
    }
    r
}

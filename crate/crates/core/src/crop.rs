//! Simulated endoscopic viewpoint and visible-surface cropping.

use crate::error::{Error, Result};
use crate::geometry::{PointCloud, Vec3};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraPose {
    pub position: [f64; 3],
    pub look_at: [f64; 3],
    /// Degrees from the +z organ axis.
    pub polar: f64,
    /// Degrees about +z from +x.
    pub azimuth: f64,
    pub radius: f64,
}

impl CameraPose {
    pub fn from_spherical(look_at: Vec3, polar: f64, azimuth: f64, radius: f64) -> Self {
        let (t, p) = (polar.to_radians(), azimuth.to_radians());
        let dir = Vec3::new(t.sin() * p.cos(), t.sin() * p.sin(), t.cos());
        let pos = look_at + dir * radius;
        Self {
            position: pos.into(),
            look_at: look_at.into(),
            polar,
            azimuth,
            radius,
        }
    }

    pub fn position(&self) -> Vec3 {
        Vec3::from(self.position)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CropConfig {
    /// Retained fraction of the complete cloud size.
    pub keep_fraction: f64,
    /// Degrees; a point is visible when its normal is within this angle of the view ray.
    pub max_angle: f64,
    pub polar_range: [f64; 2],
    pub azimuth_range: [f64; 2],
    /// Camera distance as a multiple of the bounding-sphere radius.
    pub radius_scale: f64,
}

impl Default for CropConfig {
    fn default() -> Self {
        Self {
            keep_fraction: 0.05,
            max_angle: 80.0,
            polar_range: [10.0, 60.0],
            azimuth_range: [-70.0, 70.0],
            radius_scale: 2.5,
        }
    }
}

impl CropConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.keep_fraction > 0.0 && self.keep_fraction <= 1.0) {
            return Err(Error::Config(format!("keep_fraction {} not in (0, 1]", self.keep_fraction)));
        }
        if !(self.max_angle > 0.0 && self.max_angle < 90.0) {
            return Err(Error::Config(format!("max_angle {} not in (0, 90)", self.max_angle)));
        }
        for (name, r) in [("polar_range", self.polar_range), ("azimuth_range", self.azimuth_range)] {
            if !(r[0] <= r[1]) {
                return Err(Error::Config(format!("{name} [{}, {}] is empty", r[0], r[1])));
            }
        }
        if !(self.radius_scale > 0.0) {
            return Err(Error::Config("radius_scale must be positive".into()));
        }
        Ok(())
    }

    /// `⌈keep_fraction · m⌉`, robust to the fraction's binary rounding.
    pub fn target_count(&self, m: usize) -> usize {
        ((self.keep_fraction * m as f64 - 1e-9).ceil().max(0.0) as usize).min(m)
    }
}

/// Camera on a sphere about the cloud centroid with angles drawn uniformly from the configured ranges.
pub fn sample_camera<R: Rng + ?Sized>(rng: &mut R, cloud: &PointCloud, config: &CropConfig) -> CameraPose {
    let c = cloud.centroid();
    let bound = cloud.points.iter().map(|p| (p - c).norm()).fold(0.0, f64::max);
    let polar = rng.random_range(config.polar_range[0]..=config.polar_range[1]);
    let azimuth = rng.random_range(config.azimuth_range[0]..=config.azimuth_range[1]);
    CameraPose::from_spherical(c, polar, azimuth, config.radius_scale * bound)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Crop {
    /// Retained point indices, ascending.
    pub retained: Vec<usize>,
    /// Every point passing the angle test, ascending.
    pub front_facing: Vec<usize>,
    /// True when fewer candidates than the target count existed.
    pub undersized: bool,
}

/// Points whose normal lies within `max_angle` degrees of the direction to the camera.
pub fn front_facing(cloud: &PointCloud, camera: &CameraPose, max_angle: f64) -> Result<Vec<usize>> {
    let normals = cloud
        .normals
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("visibility test needs normals".into()))?;
    let eye = camera.position();
    let cos_max = max_angle.to_radians().cos();
    Ok(cloud
        .points
        .iter()
        .zip(normals)
        .enumerate()
        .filter(|(_, (p, n))| {
            let v = eye - *p;
            let len = v.norm();
            len > 0.0 && n.dot(&v) > cos_max * len
        })
        .map(|(i, _)| i)
        .collect())
}

/// Keeps the `⌈keep_fraction·M⌉` front-facing points closest to the camera.
pub fn visible_crop(cloud: &PointCloud, camera: &CameraPose, config: &CropConfig) -> Result<Crop> {
    config.validate()?;
    let front = front_facing(cloud, camera, config.max_angle)?;
    if front.is_empty() {
        return Err(Error::Crop("no point faces the camera".into()));
    }
    let eye = camera.position();
    let target = config.target_count(cloud.len());
    let mut ranked: Vec<(f64, usize)> = front
        .iter()
        .map(|&i| ((cloud.points[i] - eye).norm_squared(), i))
        .collect();
    ranked.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let undersized = ranked.len() < target;
    let mut retained: Vec<usize> = ranked.into_iter().take(target).map(|(_, i)| i).collect();
    retained.sort_unstable();
    Ok(Crop {
        retained,
        front_facing: front,
        undersized,
    })
}

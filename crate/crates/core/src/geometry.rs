//! Points, configurations and clusters in reduced Lennard-Jones units.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Index, Mul, Neg, Sub};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const ORIGIN: Point3 = Point3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn dot(&self, other: &Point3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(&self, other: &Point3) -> Point3 {
        Point3::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm_squared(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        (*self - *other).norm()
    }

    pub fn distance_squared(&self, other: &Point3) -> f64 {
        (*self - *other).norm_squared()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl From<[f64; 3]> for Point3 {
    fn from(a: [f64; 3]) -> Self {
        Point3::new(a[0], a[1], a[2])
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, o: Point3) -> Point3 {
        Point3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Point3 {
    fn add_assign(&mut self, o: Point3) {
        self.x += o.x;
        self.y += o.y;
        self.z += o.z;
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, o: Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Point3 {
    type Output = Point3;
    fn neg(self) -> Point3 {
        Point3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    fn mul(self, s: f64) -> Point3 {
        Point3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Div<f64> for Point3 {
    type Output = Point3;
    fn div(self, s: f64) -> Point3 {
        Point3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl fmt::Display for Point3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

/// An ordered list of particle positions.
///
/// Construction rejects non-finite coordinates; coincident particles are
/// only rejected when an energy is evaluated.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Configuration {
    coords: Vec<Point3>,
}

impl Configuration {
    pub fn new(coords: Vec<Point3>) -> Result<Self> {
        if let Some(i) = coords.iter().position(|p| !p.is_finite()) {
            return Err(Error::domain(format!("particle {i} has a non-finite coordinate")));
        }
        Ok(Configuration { coords })
    }

    /// Builds a configuration from a flat `[x0, y0, z0, x1, ...]` slice.
    pub fn from_flat(flat: &[f64]) -> Result<Self> {
        if !flat.len().is_multiple_of(3) {
            return Err(Error::domain(format!(
                "flat coordinate array length {} is not a multiple of 3",
                flat.len()
            )));
        }
        Self::new(flat.chunks_exact(3).map(|c| Point3::new(c[0], c[1], c[2])).collect())
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn points(&self) -> &[Point3] {
        &self.coords
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Point3> {
        self.coords.iter()
    }

    pub fn into_points(self) -> Vec<Point3> {
        self.coords
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.coords.iter().flat_map(|p| p.to_array()).collect()
    }

    pub fn centroid(&self) -> Point3 {
        let mut sum = Point3::ORIGIN;
        for p in &self.coords {
            sum += *p;
        }
        sum / self.coords.len().max(1) as f64
    }

    pub fn translated(&self, shift: Point3) -> Configuration {
        Configuration { coords: self.coords.iter().map(|p| *p + shift).collect() }
    }

    /// Same particles, centred on their centroid and ordered from the core
    /// outwards (by distance from the centroid, ties by coordinates).
    pub fn canonical(&self) -> Configuration {
        let c = self.centroid();
        let mut coords: Vec<Point3> = self.coords.iter().map(|p| *p - c).collect();
        coords.sort_by(|a, b| {
            a.norm_squared()
                .total_cmp(&b.norm_squared())
                .then(a.x.total_cmp(&b.x))
                .then(a.y.total_cmp(&b.y))
                .then(a.z.total_cmp(&b.z))
        });
        Configuration { coords }
    }

    pub fn without(&self, index: usize) -> Configuration {
        let mut coords = self.coords.clone();
        coords.remove(index);
        Configuration { coords }
    }

    pub fn with_point(&self, p: Point3) -> Result<Configuration> {
        let mut coords = self.coords.clone();
        coords.push(p);
        Configuration::new(coords)
    }

    /// Smallest pairwise distance, or `None` for fewer than two particles.
    pub fn min_distance(&self) -> Option<f64> {
        let mut best: Option<f64> = None;
        for (i, a) in self.coords.iter().enumerate() {
            for b in &self.coords[i + 1..] {
                let d = a.distance_squared(b);
                best = Some(best.map_or(d, |m: f64| m.min(d)));
            }
        }
        best.map(f64::sqrt)
    }
}

impl Index<usize> for Configuration {
    type Output = Point3;
    fn index(&self, i: usize) -> &Point3 {
        &self.coords[i]
    }
}

impl<'a> IntoIterator for &'a Configuration {
    type Item = &'a Point3;
    type IntoIter = std::slice::Iter<'a, Point3>;
    fn into_iter(self) -> Self::IntoIter {
        self.coords.iter()
    }
}

/// A configuration together with its energy and a free-form provenance tag
/// (the operator or file that produced it).
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub config: Configuration,
    pub energy: f64,
    pub tag: String,
}

impl Cluster {
    pub fn new(config: Configuration, energy: f64, tag: impl Into<String>) -> Self {
        Cluster { config, energy, tag: tag.into() }
    }

    pub fn len(&self) -> usize {
        self.config.len()
    }

    pub fn is_empty(&self) -> bool {
        self.config.is_empty()
    }
}

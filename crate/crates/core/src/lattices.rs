//! Lattice regions (CB, IC, FC, IF) and the nucleus-to-shell point numbering.
//!
//! A [`Region`] is an ordered point list addressed by 1-based ids. Lower ids
//! sit near the origin, higher ids towards the outside.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::f64::consts::TAU;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::potential::D_STAR;

/// Quantum used for the radius and y keys of the enumeration order.
const ORDER_QUANTUM: f64 = 1e-6;
/// Points closer than this are duplicates in user-supplied regions.
const DUPLICATE_TOL: f64 = 1e-9;
/// Merge tolerance for the IC/FC union.
pub const IF_DEDUP_TOL: f64 = 1e-6 * D_STAR;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LatticeKind {
    Cb,
    Ic,
    Fc,
    If,
    Custom,
}

impl fmt::Display for LatticeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LatticeKind::Cb => "CB",
            LatticeKind::Ic => "IC",
            LatticeKind::Fc => "FC",
            LatticeKind::If => "IF",
            LatticeKind::Custom => "custom",
        })
    }
}

impl FromStr for LatticeKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cb" => Ok(LatticeKind::Cb),
            "ic" => Ok(LatticeKind::Ic),
            "fc" => Ok(LatticeKind::Fc),
            "if" => Ok(LatticeKind::If),
            "custom" => Ok(LatticeKind::Custom),
            other => Err(Error::domain(format!("unknown lattice kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    points: Vec<Point3>,
    kind: LatticeKind,
    key: u64,
}

impl Region {
    fn from_sorted(points: Vec<Point3>, kind: LatticeKind) -> Region {
        let mut h = DefaultHasher::new();
        kind.hash(&mut h);
        for p in &points {
            p.x.to_bits().hash(&mut h);
            p.y.to_bits().hash(&mut h);
            p.z.to_bits().hash(&mut h);
        }
        Region { points, kind, key: h.finish() }
    }

    /// Orders `points` without checking for duplicates.
    fn ordered(mut points: Vec<Point3>, kind: LatticeKind) -> Region {
        points.sort_by(enumeration_order);
        Region::from_sorted(points, kind)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn kind(&self) -> LatticeKind {
        self.kind
    }

    /// Content fingerprint; genomes carry it to detect use with a different region.
    pub fn key(&self) -> u64 {
        self.key
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    /// Point with 1-based `id`.
    pub fn point(&self, id: usize) -> Option<Point3> {
        id.checked_sub(1).and_then(|i| self.points.get(i)).copied()
    }

    /// Ids of the `count` points nearest `center`; ties go to the lower id.
    pub fn nearest(&self, center: Point3, count: usize) -> Result<Vec<usize>> {
        if count > self.len() {
            return Err(Error::InsufficientRegion { needed: count, available: self.len() });
        }
        let mut ids: Vec<(f64, usize)> = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| (p.distance_squared(&center), i + 1))
            .collect();
        ids.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        Ok(ids.into_iter().take(count).map(|(_, id)| id).collect())
    }

    /// Largest distance of any point from the origin.
    pub fn radius(&self) -> f64 {
        self.points.iter().map(|p| p.norm()).fold(0.0, f64::max)
    }
}

fn quantize(v: f64) -> i64 {
    (v / ORDER_QUANTUM).round() as i64
}

fn azimuth(p: &Point3) -> f64 {
    let a = p.y.atan2(p.x);
    if a < 0.0 {
        a + TAU
    } else {
        a
    }
}

/// Radius, then y (both quantized to 1e-6), then azimuth, then x/y/z.
fn enumeration_order(a: &Point3, b: &Point3) -> std::cmp::Ordering {
    quantize(a.norm())
        .cmp(&quantize(b.norm()))
        .then(quantize(a.y).cmp(&quantize(b.y)))
        .then(azimuth(a).total_cmp(&azimuth(b)))
        .then(a.x.total_cmp(&b.x))
        .then(a.y.total_cmp(&b.y))
        .then(a.z.total_cmp(&b.z))
}

fn cell(p: &Point3, size: f64) -> (i64, i64, i64) {
    ((p.x / size).floor() as i64, (p.y / size).floor() as i64, (p.z / size).floor() as i64)
}

/// Buckets points on a grid of `tol`-sized cells. For each point `i`,
/// `keep(i, close)` receives some earlier grid point within `tol` (if any);
/// returning `true` inserts `i` into the grid.
fn scan_close_pairs(
    points: &[Point3],
    tol: f64,
    mut keep: impl FnMut(usize, Option<usize>) -> bool,
) {
    let mut grid: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
    for (i, p) in points.iter().enumerate() {
        let (cx, cy, cz) = cell(p, tol);
        let mut close = None;
        'search: for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(bucket) = grid.get(&(cx + dx, cy + dy, cz + dz)) {
                        if let Some(&j) = bucket.iter().find(|&&j| points[j].distance(p) <= tol) {
                            close = Some(j);
                            break 'search;
                        }
                    }
                }
            }
        }
        if keep(i, close) {
            grid.entry((cx, cy, cz)).or_default().push(i);
        }
    }
}

/// Removes points within `tol` of an earlier point; first occurrence wins.
pub fn dedup_points(points: &[Point3], tol: f64) -> Vec<Point3> {
    let mut out = Vec::with_capacity(points.len());
    scan_close_pairs(points, tol, |i, close| {
        if close.is_none() {
            out.push(points[i]);
            true
        } else {
            false
        }
    });
    out
}

/// Numbers an arbitrary duplicate-free point list from the core outwards.
pub fn enumerate_region(points: Vec<Point3>) -> Result<Region> {
    enumerate_region_as(points, LatticeKind::Custom)
}

pub fn enumerate_region_as(points: Vec<Point3>, kind: LatticeKind) -> Result<Region> {
    if points.is_empty() {
        return Err(Error::EmptyRegion);
    }
    if let Some(i) = points.iter().position(|p| !p.is_finite()) {
        return Err(Error::domain(format!("region point {} is not finite", i + 1)));
    }
    let mut dup = None;
    scan_close_pairs(&points, DUPLICATE_TOL, |i, close| {
        if let (None, Some(j)) = (dup, close) {
            dup = Some((j, i));
        }
        true
    });
    if let Some((j, i)) = dup {
        return Err(Error::domain(format!(
            "region points {} and {} are duplicates",
            j + 1,
            i + 1
        )));
    }
    Ok(Region::ordered(points, kind))
}

/// Number of points in the CB cube with `k` shells, `(2k+1)^3`.
pub fn cb_cube_count(k: i64) -> Result<u64> {
    if k < 0 {
        return Err(Error::domain(format!("cube index must be non-negative, got {k}")));
    }
    let side = 2 * k as u64 + 1;
    Ok(side * side * side)
}

/// Simple cubic grid with spacing `d*/2`, indices in `[-k, k]` on each axis.
pub fn gen_cb(k: u32) -> Region {
    let k = k as i64;
    let h = D_STAR / 2.0;
    let mut pts = Vec::with_capacity(((2 * k + 1) as usize).pow(3));
    for i in -k..=k {
        for j in -k..=k {
            for l in -k..=k {
                pts.push(Point3::new(i as f64 * h, j as f64 * h, l as f64 * h));
            }
        }
    }
    Region::ordered(pts, LatticeKind::Cb)
}

/// Unit-circumradius icosahedron: 12 vertices, 30 edges, 20 faces.
#[allow(clippy::type_complexity)]
fn icosahedron() -> (Vec<Point3>, Vec<(usize, usize)>, Vec<(usize, usize, usize)>) {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut v = Vec::with_capacity(12);
    for s1 in [-1.0, 1.0] {
        for s2 in [-1.0, 1.0] {
            v.push(Point3::new(0.0, s1, s2 * phi));
            v.push(Point3::new(s1, s2 * phi, 0.0));
            v.push(Point3::new(s2 * phi, 0.0, s1));
        }
    }
    let r = (1.0 + phi * phi).sqrt();
    let v: Vec<Point3> = v.into_iter().map(|p| p / r).collect();
    let edge = 2.0 / r;
    let adjacent = |a: usize, b: usize| (v[a].distance(&v[b]) - edge).abs() < 1e-9;
    let mut edges = Vec::new();
    let mut faces = Vec::new();
    for a in 0..12 {
        for b in a + 1..12 {
            if !adjacent(a, b) {
                continue;
            }
            edges.push((a, b));
            for c in b + 1..12 {
                if adjacent(a, c) && adjacent(b, c) {
                    faces.push((a, b, c));
                }
            }
        }
    }
    debug_assert_eq!((edges.len(), faces.len()), (30, 20));
    (v, edges, faces)
}

/// Mackay icosahedron: origin plus `shells` icosahedral shells.
///
/// Shell `s` has its vertices at radius `s·d*` and contributes `10s²+2`
/// points; the tangential spacing is the ideal-icosahedron edge `≈1.0515·d*`.
pub fn gen_ic(shells: u32) -> Result<Region> {
    if shells == 0 {
        return Err(Error::domain("IC lattice needs at least one shell"));
    }
    let (v, edges, faces) = icosahedron();
    let mut pts = vec![Point3::ORIGIN];
    for s in 1..=shells as usize {
        pts.extend(v.iter().map(|p| *p * (s as f64 * D_STAR)));
        for &(a, b) in &edges {
            for i in 1..s {
                let j = s - i;
                pts.push((v[a] * i as f64 + v[b] * j as f64) * D_STAR);
            }
        }
        for &(a, b, c) in &faces {
            for i in 1..s {
                for j in 1..s - i {
                    let k = s - i - j;
                    pts.push((v[a] * i as f64 + v[b] * j as f64 + v[c] * k as f64) * D_STAR);
                }
            }
        }
    }
    Ok(Region::ordered(pts, LatticeKind::Ic))
}

/// Face-centred cubic points with nearest-neighbour distance `d*` inside the
/// ball of radius `shells·d*` about the origin.
pub fn gen_fc(shells: u32) -> Result<Region> {
    if shells == 0 {
        return Err(Error::domain("FC lattice needs at least one shell"));
    }
    let half = D_STAR / 2f64.sqrt();
    let rmax = shells as f64 * D_STAR + 1e-9;
    let m = (rmax / half).floor() as i64;
    let mut pts = Vec::new();
    for i in -m..=m {
        for j in -m..=m {
            for k in -m..=m {
                if (i + j + k).rem_euclid(2) != 0 {
                    continue;
                }
                let p = Point3::new(i as f64 * half, j as f64 * half, k as f64 * half);
                if p.norm() <= rmax {
                    pts.push(p);
                }
            }
        }
    }
    Ok(Region::ordered(pts, LatticeKind::Fc))
}

/// Union of the IC and FC regions with the same shell count.
pub fn gen_if(shells: u32) -> Result<Region> {
    let mut pts = gen_ic(shells)?.points;
    pts.extend_from_slice(gen_fc(shells)?.points());
    Ok(Region::ordered(dedup_points(&pts, IF_DEDUP_TOL), LatticeKind::If))
}

pub fn generate(kind: LatticeKind, size: u32) -> Result<Region> {
    match kind {
        LatticeKind::Cb => Ok(gen_cb(size)),
        LatticeKind::Ic => gen_ic(size),
        LatticeKind::Fc => gen_fc(size),
        LatticeKind::If => gen_if(size),
        LatticeKind::Custom => Err(Error::domain("custom regions are read from files")),
    }
}

/// Points strictly inside the ball, renumbered.
pub fn extract_sphere(region: &Region, center: Point3, radius: f64) -> Result<Region> {
    if radius.is_nan() || radius <= 0.0 {
        return Err(Error::domain(format!("sphere radius must be positive, got {radius}")));
    }
    let pts: Vec<Point3> =
        region.points.iter().filter(|p| p.distance(&center) < radius).copied().collect();
    if pts.is_empty() {
        return Err(Error::EmptyRegion);
    }
    Ok(Region::ordered(pts, region.kind))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn neighbor_counts(pts: &[Point3]) -> Vec<usize> {
        pts.iter()
            .map(|p| {
                pts.iter()
                    .filter(|q| {
                        let d = p.distance(q);
                        0.9 * D_STAR < d && d < 1.1 * D_STAR
                    })
                    .count()
            })
            .collect()
    }

    #[test]
    fn cb_counts() {
        for k in 0..=5u32 {
            assert_eq!(gen_cb(k).len() as u64, cb_cube_count(k as i64).unwrap());
        }
        assert_eq!(cb_cube_count(0).unwrap(), 1);
        assert_eq!(cb_cube_count(1).unwrap(), 27);
        assert_eq!(cb_cube_count(3).unwrap(), 343);
        assert!(cb_cube_count(-1).is_err());
        assert_eq!(gen_cb(0).points(), &[Point3::ORIGIN]);
        assert_eq!(gen_cb(2).len(), 125);
    }

    #[test]
    fn cb_enumeration_core_first() {
        let r = gen_cb(1);
        assert_eq!(r.point(1), Some(Point3::ORIGIN));
        for id in 2..=7 {
            assert!((r.point(id).unwrap().norm() - D_STAR / 2.0).abs() < 1e-12);
        }
        let corner = D_STAR / 2.0 * 3f64.sqrt();
        for id in 20..=27 {
            assert!((r.point(id).unwrap().norm() - corner).abs() < 1e-12);
        }
        assert_eq!(r.point(0), None);
        assert_eq!(r.point(28), None);
    }

    #[test]
    fn ic_shell_counts() {
        assert_eq!(gen_ic(1).unwrap().len(), 13);
        assert_eq!(gen_ic(2).unwrap().len(), 55);
        assert_eq!(gen_ic(3).unwrap().len(), 147);
        assert!(gen_ic(0).is_err());
        // no duplicates
        let r = gen_ic(3).unwrap();
        assert_eq!(dedup_points(r.points(), 1e-6).len(), r.len());
    }

    #[test]
    fn ic_interior_points_have_twelve_neighbors() {
        assert_eq!(neighbor_counts(gen_ic(1).unwrap().points())[0], 12);
        for shells in 2..=3 {
            let r = gen_ic(shells).unwrap();
            let counts = neighbor_counts(r.points());
            // shells are nested, so the interior is the smaller Mackay icosahedron
            let interior = gen_ic(shells - 1).unwrap();
            for p in interior.points() {
                let i = r.points().iter().position(|q| q.distance(p) < 1e-9).unwrap();
                assert_eq!(counts[i], 12, "point {p} in IC({shells})");
            }
        }
    }

    #[test]
    fn fc_counts_match_direct_enumeration() {
        assert_eq!(gen_fc(1).unwrap().len(), 13);
        // oracle: scan a generous integer cube of fcc sites
        let a = D_STAR * 2f64.sqrt();
        for shells in 1..=3u32 {
            let mut count = 0;
            for i in -10i64..=10 {
                for j in -10i64..=10 {
                    for k in -10i64..=10 {
                        if (i + j + k) % 2 == 0 {
                            let p = Point3::new(i as f64, j as f64, k as f64) * (a / 2.0);
                            if p.norm() <= shells as f64 * D_STAR + 1e-9 {
                                count += 1;
                            }
                        }
                    }
                }
            }
            assert_eq!(gen_fc(shells).unwrap().len(), count);
        }
        let r = gen_fc(2).unwrap();
        let counts = neighbor_counts(r.points());
        assert_eq!(counts[0], 12);
    }

    #[test]
    fn if_is_deduplicated_union() {
        for shells in 1..=2 {
            let ic = gen_ic(shells).unwrap();
            let fc = gen_fc(shells).unwrap();
            let iff = gen_if(shells).unwrap();
            assert!(iff.len() <= ic.len() + fc.len());
            for p in ic.points() {
                assert!(iff.points().iter().any(|q| q.distance(p) < 1e-9));
            }
            // pairwise oracle
            let mut all: Vec<Point3> = ic.points().to_vec();
            all.extend_from_slice(fc.points());
            let mut uniq: Vec<Point3> = Vec::new();
            for p in all {
                if !uniq.iter().any(|q| q.distance(&p) <= IF_DEDUP_TOL) {
                    uniq.push(p);
                }
            }
            assert_eq!(iff.len(), uniq.len());
        }
        assert_eq!(gen_if(1).unwrap().len(), 25);
    }

    #[test]
    fn enumeration_is_permutation_invariant() {
        let r = gen_cb(2);
        let mut pts = r.points().to_vec();
        pts.reverse();
        pts.rotate_left(17);
        let again = enumerate_region(pts).unwrap();
        assert_eq!(again.points(), r.points());
        let idem = enumerate_region(again.points().to_vec()).unwrap();
        assert_eq!(idem.points(), r.points());

        let single = enumerate_region(vec![Point3::ORIGIN]).unwrap();
        assert_eq!(single.point(1), Some(Point3::ORIGIN));
    }

    #[test]
    fn enumeration_rejects_duplicates_and_empty() {
        let p = Point3::new(1.0, 2.0, 3.0);
        assert!(enumerate_region(vec![p, Point3::ORIGIN, p]).is_err());
        assert!(matches!(enumerate_region(vec![]), Err(Error::EmptyRegion)));
    }

    #[test]
    fn sphere_extraction() {
        let r = gen_cb(2);
        assert_eq!(extract_sphere(&r, Point3::ORIGIN, 0.1).unwrap().len(), 1);
        assert_eq!(extract_sphere(&r, Point3::ORIGIN, 1e9).unwrap().len(), 125);
        assert_eq!(extract_sphere(&r, Point3::ORIGIN, 0.6 * D_STAR).unwrap().len(), 7);
        assert!(matches!(
            extract_sphere(&r, Point3::new(100.0, 0.0, 0.0), 1.0),
            Err(Error::EmptyRegion)
        ));
        assert!(extract_sphere(&r, Point3::ORIGIN, 0.0).is_err());
    }

    #[test]
    fn nearest_ids_break_ties_low() {
        let r = gen_cb(1);
        assert_eq!(r.nearest(Point3::ORIGIN, 1).unwrap(), vec![1]);
        assert_eq!(r.nearest(Point3::ORIGIN, 7).unwrap(), (1..=7).collect::<Vec<_>>());
        assert!(r.nearest(Point3::ORIGIN, 28).is_err());
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("ic".parse::<LatticeKind>().unwrap(), LatticeKind::Ic);
        assert_eq!("FC".parse::<LatticeKind>().unwrap(), LatticeKind::Fc);
        assert!("hex".parse::<LatticeKind>().is_err());
    }
}

//! Greedy nearest-point assignment of a cluster onto a region.

use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::lattices::Region;

#[derive(Debug, Clone, PartialEq)]
pub struct Match {
    /// 1-based region id assigned to each particle, in particle order.
    pub ids: Vec<usize>,
    /// Region coordinates of the assigned points.
    pub snapped: Vec<Point3>,
}

/// Assigns each particle, in index order, the nearest region point not yet
/// taken. Equal distances go to the lower id.
///
/// The result always has one distinct id per particle, but when the region
/// lies far from the cluster the snapped shape can differ wildly from it.
pub fn match_cluster(particles: &[Point3], region: &Region) -> Result<Match> {
    let n = particles.len();
    if region.len() < n {
        return Err(Error::InsufficientRegion { needed: n, available: region.len() });
    }
    let pts = region.points();
    let mut taken = vec![false; pts.len()];
    let mut ids = Vec::with_capacity(n);
    let mut snapped = Vec::with_capacity(n);
    for p in particles {
        let mut best = f64::INFINITY;
        let mut best_k = usize::MAX;
        for (k, q) in pts.iter().enumerate() {
            if taken[k] {
                continue;
            }
            let d = p.distance_squared(q);
            if d < best {
                best = d;
                best_k = k;
            }
        }
        taken[best_k] = true;
        ids.push(best_k + 1);
        snapped.push(pts[best_k]);
    }
    Ok(Match { ids, snapped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattices::{gen_cb, gen_ic};
    use crate::potential::D_STAR;

    #[test]
    fn on_region_points_are_fixed() {
        let r = gen_cb(2);
        let picks = [5, 40, 1, 99, 125];
        let cluster: Vec<Point3> = picks.iter().map(|&id| r.point(id).unwrap()).collect();
        let m = match_cluster(&cluster, &r).unwrap();
        assert_eq!(m.ids, picks);
        assert_eq!(m.snapped, cluster);
    }

    #[test]
    fn single_particle_takes_global_nearest() {
        let r = gen_cb(2);
        let p = Point3::new(0.3, 0.58, -0.1);
        let m = match_cluster(&[p], &r).unwrap();
        let nearest = (1..=r.len())
            .min_by(|&a, &b| {
                r.point(a).unwrap().distance(&p).total_cmp(&r.point(b).unwrap().distance(&p))
            })
            .unwrap();
        assert_eq!(m.ids, vec![nearest]);
    }

    #[test]
    fn ties_go_to_lower_id() {
        // equidistant from the origin and the +x neighbor
        let r = gen_cb(1);
        let p = Point3::new(D_STAR / 4.0, 0.0, 0.0);
        let m = match_cluster(&[p], &r).unwrap();
        assert_eq!(m.ids, vec![1]);
    }

    #[test]
    fn insufficient_region() {
        let r = gen_ic(1).unwrap();
        let cluster = vec![Point3::ORIGIN; 14];
        assert!(matches!(
            match_cluster(&cluster, &r),
            Err(Error::InsufficientRegion { needed: 14, available: 13 })
        ));
        assert!(match_cluster(&cluster[..13], &r).is_ok());
    }

    #[test]
    fn far_region_still_assigns_distinct_ids() {
        let box_pts: Vec<Point3> = gen_cb(1)
            .points()
            .iter()
            .map(|p| *p + Point3::new(30.0, 30.0, 30.0))
            .collect();
        let far = crate::lattices::enumerate_region(box_pts).unwrap();
        let cluster = gen_ic(1).unwrap().points().to_vec();
        let m = match_cluster(&cluster, &far).unwrap();
        let mut ids = m.ids.clone();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), 13);
    }
}

//! Cluster segmentation: neighbor graph, nucleus heuristic, layer partition
//! and the eight nucleus categories.
//!
//! Particle ids are 0-based here; file formats add one.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::{Configuration, Point3};
use crate::potential::D_STAR;

/// Default neighbor tolerance: `(0.9, 1.1)·d*`.
pub const DEFAULT_TOLERANCE: f64 = 0.1;
/// Radius of the first nucleus sphere, in units of `d*`.
const NUCLEUS_RADIUS: f64 = 1.1;
/// A 12-coordinated particle this close to the center of mass is a single-particle nucleus.
const CENTER_RADIUS: f64 = 0.35;
/// Radius of the re-centred sphere used when the first sphere holds 8+ particles.
const RECENTRED_RADIUS: f64 = 0.9;
/// In-window edges among the 12 neighbors of an icosahedral center.
const ICOSAHEDRAL_SHELL_EDGES: usize = 30;

#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGraph {
    /// Neighbor ids per particle, ascending.
    pub neighbors: Vec<Vec<usize>>,
    pub unit: f64,
    pub tolerance: f64,
}

impl NeighborGraph {
    pub fn count(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn counts(&self) -> Vec<usize> {
        self.neighbors.iter().map(Vec::len).collect()
    }

    pub fn max_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Particles with exactly 12 neighbors.
    pub fn twelve_count(&self) -> usize {
        self.neighbors.iter().filter(|v| v.len() == 12).count()
    }

    pub fn are_neighbors(&self, i: usize, j: usize) -> bool {
        self.neighbors[i].binary_search(&j).is_ok()
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }
}

/// Particles `i`, `j` are neighbors iff `(1-t)·u < |p_i - p_j| < (1+t)·u`.
pub fn neighbor_graph(c: &Configuration, unit: f64, tolerance: f64) -> Result<NeighborGraph> {
    if !(unit > 0.0) {
        return Err(Error::domain(format!("neighbor unit must be positive, got {unit}")));
    }
    if !(0.0..=1.0).contains(&tolerance) {
        return Err(Error::domain(format!("neighbor tolerance must lie in [0, 1], got {tolerance}")));
    }
    let lo = (1.0 - tolerance) * unit;
    let hi = (1.0 + tolerance) * unit;
    let pts = c.points();
    let mut neighbors = vec![Vec::new(); pts.len()];
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let d = pts[i].distance(&pts[j]);
            if lo < d && d < hi {
                neighbors[i].push(j);
                neighbors[j].push(i);
            }
        }
    }
    Ok(NeighborGraph { neighbors, unit, tolerance })
}

/// Neighbor graph with `u = d*`, `t = 0.1`.
pub fn default_neighbor_graph(c: &Configuration) -> NeighborGraph {
    neighbor_graph(c, D_STAR, DEFAULT_TOLERANCE).expect("default criterion is valid")
}

/// Unit-mass center of mass.
pub fn center_of_mass(c: &Configuration) -> Point3 {
    c.centroid()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerPartition {
    /// Layer per particle: 1 is the nucleus, `layers` the shell, 0 unreached.
    pub layer: Vec<usize>,
    pub layers: usize,
}

impl LayerPartition {
    /// Particles not connected to the nucleus.
    pub fn unassigned(&self) -> Vec<usize> {
        (0..self.layer.len()).filter(|&i| self.layer[i] == 0).collect()
    }

    pub fn members(&self, layer: usize) -> Vec<usize> {
        (0..self.layer.len()).filter(|&i| self.layer[i] == layer).collect()
    }

    pub fn is_complete(&self) -> bool {
        self.layer.iter().all(|&l| l > 0)
    }
}

/// Breadth-first layering outwards from `nucleus` through the neighbor graph.
pub fn partition_layers(g: &NeighborGraph, nucleus: &[usize]) -> Result<LayerPartition> {
    if nucleus.is_empty() {
        return Err(Error::domain("nucleus must contain at least one particle"));
    }
    let n = g.len();
    if let Some(&bad) = nucleus.iter().find(|&&i| i >= n) {
        return Err(Error::domain(format!("nucleus id {bad} out of range for {n} particles")));
    }
    let mut layer = vec![0usize; n];
    for &i in nucleus {
        layer[i] = 1;
    }
    let mut current = 1;
    loop {
        let mut marked = false;
        for i in 0..n {
            if layer[i] != current {
                continue;
            }
            for &k in &g.neighbors[i] {
                if layer[k] == 0 {
                    layer[k] = current + 1;
                    marked = true;
                }
            }
        }
        if !marked {
            break;
        }
        current += 1;
    }
    Ok(LayerPartition { layer, layers: current })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NucleusClass {
    /// Single 12-coordinated center with an icosahedral shell.
    N1Ic,
    /// Single 12-coordinated center, non-icosahedral shell.
    N1Ir,
    /// Twelve-particle icosahedral core without a center.
    N0Ic,
    N3,
    N4,
    N5,
    N6,
    N7,
    Unclassified,
}

impl NucleusClass {
    /// The eight categories, excluding `Unclassified`.
    pub const CATEGORIES: [NucleusClass; 8] = [
        NucleusClass::N1Ic,
        NucleusClass::N1Ir,
        NucleusClass::N0Ic,
        NucleusClass::N3,
        NucleusClass::N4,
        NucleusClass::N5,
        NucleusClass::N6,
        NucleusClass::N7,
    ];

    fn from_size(size: usize) -> NucleusClass {
        match size {
            3 => NucleusClass::N3,
            4 => NucleusClass::N4,
            5 => NucleusClass::N5,
            6 => NucleusClass::N6,
            7 => NucleusClass::N7,
            12 => NucleusClass::N0Ic,
            _ => NucleusClass::Unclassified,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            NucleusClass::N1Ic => "N1_IC",
            NucleusClass::N1Ir => "N1_IR",
            NucleusClass::N0Ic => "N0_IC",
            NucleusClass::N3 => "N3",
            NucleusClass::N4 => "N4",
            NucleusClass::N5 => "N5",
            NucleusClass::N6 => "N6",
            NucleusClass::N7 => "N7",
            NucleusClass::Unclassified => "UNCLASSIFIED",
        }
    }
}

impl fmt::Display for NucleusClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NucleusClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let upper = s.to_ascii_uppercase();
        NucleusClass::CATEGORIES
            .iter()
            .chain(std::iter::once(&NucleusClass::Unclassified))
            .find(|c| c.as_str() == upper)
            .copied()
            .ok_or_else(|| Error::domain(format!("unknown nucleus class '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Nucleus {
    pub ids: Vec<usize>,
    pub class: NucleusClass,
    /// Center of the sphere that selected the nucleus.
    pub center: Point3,
}

fn inside(c: &Configuration, candidates: impl Iterator<Item = usize>, center: Point3, r: f64) -> Vec<usize> {
    candidates.filter(|&i| c[i].distance(&center) < r).collect()
}

fn shell_edges(g: &NeighborGraph, center: usize) -> usize {
    let shell = &g.neighbors[center];
    let mut edges = 0;
    for (a, &i) in shell.iter().enumerate() {
        for &j in &shell[a + 1..] {
            if g.are_neighbors(i, j) {
                edges += 1;
            }
        }
    }
    edges
}

/// Center-of-mass sphere heuristic for the nucleus.
///
/// Mirrors the reference routine step by step:
/// 1. `PN` = particles within `1.1·d*` of the center of mass.
/// 2. The 12-coordinated member of `PN` nearest the center of mass, if closer
///    than `0.35·d*`, is the nucleus alone (`N1_IC` / `N1_IR`).
/// 3. With no 12-coordinated member and `|PN| = 12`, `PN` is an `N0_IC` core.
/// 4. Otherwise, if `|PN| ≥ 8`, the center is re-estimated as the mean of the
///    old center (counted once) and the 12-coordinated members of `PN`, and
///    the nucleus is the members of `PN` within `0.9·d*` of it.
/// 5. Any remaining `PN` is the nucleus as is.
///
/// The class of cases 4 and 5 comes from the nucleus size (3..7, or 12).
pub fn find_nucleus(c: &Configuration, g: &NeighborGraph) -> Nucleus {
    let cm = center_of_mass(c);
    if c.len() < 13 {
        return Nucleus { ids: Vec::new(), class: NucleusClass::Unclassified, center: cm };
    }
    let pn = inside(c, 0..c.len(), cm, NUCLEUS_RADIUS * D_STAR);
    if pn.is_empty() {
        return Nucleus { ids: pn, class: NucleusClass::Unclassified, center: cm };
    }

    let mut central: Option<(usize, f64)> = None;
    for &i in &pn {
        if g.count(i) == 12 {
            let d = c[i].distance(&cm);
            if central.is_none_or(|(_, best)| d < best) {
                central = Some((i, d));
            }
        }
    }
    match central {
        Some((i, d)) if d < CENTER_RADIUS * D_STAR => {
            let class = if shell_edges(g, i) == ICOSAHEDRAL_SHELL_EDGES {
                NucleusClass::N1Ic
            } else {
                NucleusClass::N1Ir
            };
            return Nucleus { ids: vec![i], class, center: cm };
        }
        None if pn.len() == 12 => {
            return Nucleus { ids: pn, class: NucleusClass::N0Ic, center: cm };
        }
        _ => {}
    }

    if pn.len() >= 8 {
        let mut sum = cm;
        let mut count = 1.0;
        for &i in &pn {
            if g.count(i) == 12 {
                sum += c[i];
                count += 1.0;
            }
        }
        let center = sum / count;
        let ids = inside(c, pn.iter().copied(), center, RECENTRED_RADIUS * D_STAR);
        let class = NucleusClass::from_size(ids.len());
        return Nucleus { ids, class, center };
    }

    let class = NucleusClass::from_size(pn.len());
    Nucleus { ids: pn, class, center: cm }
}

/// Nucleus class under the default neighbor criterion.
pub fn classify(c: &Configuration) -> NucleusClass {
    find_nucleus(c, &default_neighbor_graph(c)).class
}

/// Full segmentation of a (minimized) cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    pub graph: NeighborGraph,
    pub nucleus: Nucleus,
    pub partition: LayerPartition,
}

/// Neighbor graph, heuristic nucleus and layers. When the heuristic yields no
/// nucleus, the particle nearest the center of mass seeds the layering.
pub fn segment(c: &Configuration) -> Result<Segmentation> {
    if c.is_empty() {
        return Err(Error::domain("cannot segment an empty configuration"));
    }
    let graph = default_neighbor_graph(c);
    let nucleus = find_nucleus(c, &graph);
    let seed = if nucleus.ids.is_empty() {
        let cm = center_of_mass(c);
        let nearest = (0..c.len())
            .min_by(|&a, &b| c[a].distance(&cm).total_cmp(&c[b].distance(&cm)))
            .expect("non-empty");
        vec![nearest]
    } else {
        nucleus.ids.clone()
    };
    let partition = partition_layers(&graph, &seed)?;
    Ok(Segmentation { graph, nucleus, partition })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattices::gen_ic;
    use crate::minimize::{minimize, MinimizeSettings};

    fn lj13() -> Configuration {
        let seed = Configuration::new(gen_ic(1).unwrap().points().to_vec()).unwrap();
        minimize(&seed, &MinimizeSettings::default()).unwrap().config
    }

    #[test]
    fn pair_neighbors() {
        let c = Configuration::from_flat(&[0.0, 0.0, 0.0, D_STAR, 0.0, 0.0]).unwrap();
        let g = default_neighbor_graph(&c);
        assert_eq!(g.counts(), vec![1, 1]);
        let far = Configuration::from_flat(&[0.0, 0.0, 0.0, 1.2 * D_STAR, 0.0, 0.0]).unwrap();
        assert_eq!(default_neighbor_graph(&far).counts(), vec![0, 0]);
        assert!(neighbor_graph(&c, 0.0, 0.1).is_err());
        assert!(neighbor_graph(&c, 1.0, 1.5).is_err());
    }

    #[test]
    fn lj13_structure() {
        let c = lj13();
        let g = default_neighbor_graph(&c);
        let center = (0..13).find(|&i| g.count(i) == 12).expect("12-coordinated center");
        assert!(center_of_mass(&c).distance(&c[center]) < 1e-6);
        assert_eq!(g.max_count(), 12);

        let p = partition_layers(&g, &[center]).unwrap();
        assert_eq!(p.layers, 2);
        assert_eq!(p.members(1), vec![center]);
        assert_eq!(p.members(2).len(), 12);

        let nuc = find_nucleus(&c, &g);
        assert_eq!(nuc.ids, vec![center]);
        assert_eq!(nuc.class, NucleusClass::N1Ic);
        assert_eq!(classify(&c), NucleusClass::N1Ic);
    }

    #[test]
    fn partition_edge_cases() {
        let c = lj13();
        let g = default_neighbor_graph(&c);
        let all: Vec<usize> = (0..13).collect();
        let p = partition_layers(&g, &all).unwrap();
        assert_eq!(p.layers, 1);
        assert!(p.is_complete());
        assert!(partition_layers(&g, &[]).is_err());
        assert!(partition_layers(&g, &[13]).is_err());

        let apart = Configuration::from_flat(&[0.0, 0.0, 0.0, 5.0, 0.0, 0.0]).unwrap();
        let p = partition_layers(&default_neighbor_graph(&apart), &[0]).unwrap();
        assert_eq!(p.layer, vec![1, 0]);
        assert_eq!(p.unassigned(), vec![1]);
        assert_eq!(p.layers, 1);
    }

    #[test]
    fn center_of_mass_simple() {
        let one = Configuration::from_flat(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(center_of_mass(&one), Point3::new(1.0, 2.0, 3.0));
        let sym = Configuration::from_flat(&[2.0, 0.0, 0.0, -2.0, 0.0, 0.0]).unwrap();
        assert_eq!(center_of_mass(&sym), Point3::ORIGIN);
    }

    #[test]
    fn small_clusters_unclassified() {
        let c = Configuration::from_flat(&[0.0, 0.0, 0.0, D_STAR, 0.0, 0.0]).unwrap();
        assert_eq!(classify(&c), NucleusClass::Unclassified);
    }

    #[test]
    fn class_names_round_trip() {
        for c in NucleusClass::CATEGORIES {
            assert_eq!(c.as_str().parse::<NucleusClass>().unwrap(), c);
        }
        assert_eq!("n7".parse::<NucleusClass>().unwrap(), NucleusClass::N7);
        assert!("N9".parse::<NucleusClass>().is_err());
    }
}

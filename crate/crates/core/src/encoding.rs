//! Telephone encoding: a cluster as an ordered list of distinct region ids,
//! and the genotype operators acting on it.

use std::collections::HashSet;

use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{Configuration, Point3};
use crate::lattices::Region;
use crate::matching::match_cluster;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Genome {
    /// Fingerprint of the region the digits index.
    pub region: u64,
    /// Distinct 1-based region ids, one per particle.
    pub digits: Vec<usize>,
}

impl Genome {
    pub fn new(region: &Region, digits: Vec<usize>) -> Result<Genome> {
        let g = Genome { region: region.key(), digits };
        g.validate(region)?;
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn validate(&self, region: &Region) -> Result<()> {
        if self.region != region.key() {
            return Err(Error::domain("genome indexes a different region"));
        }
        let mut seen = HashSet::with_capacity(self.digits.len());
        for &d in &self.digits {
            if d == 0 || d > region.len() {
                return Err(Error::domain(format!(
                    "digit {d} out of range for a region of {} points",
                    region.len()
                )));
            }
            if !seen.insert(d) {
                return Err(Error::domain(format!("digit {d} repeated")));
            }
        }
        Ok(())
    }
}

pub fn genome_from_cluster(c: &Configuration, region: &Region) -> Result<Genome> {
    let m = match_cluster(c.points(), region)?;
    Ok(Genome { region: region.key(), digits: m.ids })
}

pub fn genome_to_coords(g: &Genome, region: &Region) -> Result<Configuration> {
    g.validate(region)?;
    let pts: Vec<Point3> = g.digits.iter().map(|&d| region.point(d).expect("validated")).collect();
    Configuration::new(pts)
}

fn unused_ids(region: &Region, used: &HashSet<usize>) -> Vec<usize> {
    (1..=region.len()).filter(|id| !used.contains(id)).collect()
}

/// Replaces `k` randomly chosen digits by ids that are not in the genome,
/// drawn uniformly without replacement.
pub fn mutate_digits<R: Rng + ?Sized>(g: &Genome, region: &Region, k: usize, rng: &mut R) -> Result<Genome> {
    g.validate(region)?;
    let n = g.len();
    if k == 0 || k > n {
        return Err(Error::domain(format!("mutation count {k} must lie in 1..={n}")));
    }
    let used: HashSet<usize> = g.digits.iter().copied().collect();
    let pool = unused_ids(region, &used);
    if pool.is_empty() {
        return Err(Error::NoUnusedIds);
    }
    if pool.len() < k {
        return Err(Error::domain(format!(
            "only {} unused ids for {k} replacements",
            pool.len()
        )));
    }
    let positions = sample(rng, n, k);
    let draws = sample(rng, pool.len(), k);
    let mut digits = g.digits.clone();
    for (pos, draw) in positions.iter().zip(draws.iter()) {
        digits[pos] = pool[draw];
    }
    Ok(Genome { region: g.region, digits })
}

/// Cut-and-splice over two or more parents: one or two random cut points,
/// segments taken from the parents in turn, duplicates repaired.
pub fn splice_crossover<R: Rng + ?Sized>(parents: &[&Genome], region: &Region, rng: &mut R) -> Result<Genome> {
    let n = check_parents(parents, region)?;
    if n < 2 {
        return Ok(parents[0].clone());
    }
    let cuts = if n >= 3 && rng.gen_bool(0.5) {
        let mut c: Vec<usize> = sample(rng, n - 1, 2).into_iter().map(|i| i + 1).collect();
        c.sort_unstable();
        c
    } else {
        vec![rng.gen_range(1..n)]
    };
    splice_at(parents, region, &cuts, rng)
}

/// Splice with explicit cut positions. Segment `s` (between consecutive
/// cuts) comes from parent `s mod parents.len()`. A digit already present in
/// the child is replaced by a uniform draw from the ids not yet in the child.
pub fn splice_at<R: Rng + ?Sized>(
    parents: &[&Genome],
    region: &Region,
    cuts: &[usize],
    rng: &mut R,
) -> Result<Genome> {
    let n = check_parents(parents, region)?;
    if cuts.windows(2).any(|w| w[0] >= w[1]) || cuts.iter().any(|&c| c == 0 || c >= n) {
        return Err(Error::domain(format!("cut points {cuts:?} invalid for length {n}")));
    }
    let mut bounds = vec![0];
    bounds.extend_from_slice(cuts);
    bounds.push(n);

    let mut raw = Vec::with_capacity(n);
    for (s, w) in bounds.windows(2).enumerate() {
        raw.extend_from_slice(&parents[s % parents.len()].digits[w[0]..w[1]]);
    }

    let mut present: HashSet<usize> = HashSet::with_capacity(n);
    let mut repair = Vec::new();
    for (i, &d) in raw.iter().enumerate() {
        if !present.insert(d) {
            repair.push(i);
        }
    }
    if !repair.is_empty() {
        let mut pool = unused_ids(region, &present);
        for i in repair {
            if pool.is_empty() {
                return Err(Error::NoUnusedIds);
            }
            let pick = pool.swap_remove(rng.gen_range(0..pool.len()));
            raw[i] = pick;
        }
    }
    Ok(Genome { region: region.key(), digits: raw })
}

fn check_parents(parents: &[&Genome], region: &Region) -> Result<usize> {
    let first = parents.first().ok_or_else(|| Error::domain("crossover needs parents"))?;
    let n = first.len();
    for p in parents {
        p.validate(region)?;
        if p.len() != n {
            return Err(Error::domain("crossover parents differ in length"));
        }
    }
    Ok(n)
}

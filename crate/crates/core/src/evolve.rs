//! The per-size evolutionary search: lattice-sphere seeding, genotype and
//! phenotype operators, make-up from neighbouring sizes, diversity-aware
//! elitist selection and the repeated-best stopping rule.

use std::fmt;

use log::{debug, warn};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::encoding::{genome_from_cluster, genome_to_coords, mutate_digits, splice_crossover};
use crate::error::{Error, Result};
use crate::geometry::{Cluster, Configuration, Point3};
use crate::lattices::{extract_sphere, gen_cb, gen_fc, gen_ic, Region};
use crate::minimize::{minimize, MinimizeSettings};
use crate::parallel::{BestStore, StopSignal};
use crate::potential::{insertion_energy, particle_energy, D_STAR};
use crate::structure::{default_neighbor_graph, segment, NucleusClass};

/// Particles of a layer-crossover donor closer than this to a kept particle are skipped.
const OVERLAP: f64 = 0.5 * D_STAR;
/// A grow site must be at least this far from every particle...
const SITE_MIN: f64 = 0.8 * D_STAR;
/// ...and at most this far from some particle.
const SITE_MAX: f64 = 2.0 * D_STAR;
/// Extra radius around a cluster when cutting a local sub-region for genotype operators.
const LOCAL_MARGIN: f64 = 1.5 * D_STAR;
/// Minimum pair separation in sphere seeds.
const SEED_SEPARATION: f64 = 0.75 * D_STAR;
const ATTEMPTS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Operator {
    MutateDigits,
    SpliceCrossover,
    LayerCrossover,
    LatticeTransform,
    Grow,
    Shrink,
}

impl Operator {
    pub const ALL: [Operator; 6] = [
        Operator::MutateDigits,
        Operator::SpliceCrossover,
        Operator::LayerCrossover,
        Operator::LatticeTransform,
        Operator::Grow,
        Operator::Shrink,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Operator::MutateDigits => "mutate_digits",
            Operator::SpliceCrossover => "splice_crossover",
            Operator::LayerCrossover => "layer_crossover",
            Operator::LatticeTransform => "lattice_transform",
            Operator::Grow => "grow",
            Operator::Shrink => "shrink",
        }
    }

    fn index(&self) -> usize {
        Operator::ALL.iter().position(|o| o == self).expect("listed")
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub struct EvolveConfig {
    pub pop_size: usize,
    /// Offspring built per generation.
    pub offspring: usize,
    /// Sphere seeds drawn from the regions for the first population.
    pub initial_seeds: usize,
    /// Stop once the best energy has been rediscovered this many times.
    pub repeat_stop: usize,
    pub max_generations: usize,
    /// Relative operator weights, indexed like [`Operator::ALL`].
    pub weights: [f64; 6],
    pub seed: u64,
    pub regions: Vec<Region>,
    pub minimize: MinimizeSettings,
    /// Upper bound for the number of digits changed by one mutation.
    pub max_mutations: usize,
    /// Sphere-seed centres are drawn uniformly from a ball of this radius.
    pub seed_offset: f64,
    /// Threads used to build offspring; results are merged in a fixed order.
    pub workers: usize,
    /// Energies closer than this are the same cluster.
    pub energy_tol: f64,
    /// Tag recorded as the source of store updates.
    pub player: usize,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        EvolveConfig {
            pop_size: 14,
            offspring: 14,
            initial_seeds: 42,
            repeat_stop: 5,
            max_generations: 200,
            weights: [1.0; 6],
            seed: 0,
            regions: Vec::new(),
            minimize: MinimizeSettings::default(),
            max_mutations: 3,
            seed_offset: D_STAR,
            workers: 1,
            energy_tol: 1e-6,
            player: 0,
        }
    }
}

impl EvolveConfig {
    /// CB, IC and FC regions comfortably larger than a cluster of `n` particles.
    pub fn default_regions(n: usize) -> Vec<Region> {
        let mut k = 1u32;
        while (2 * k as usize + 1).pow(3) < 8 * n.max(1) {
            k += 1;
        }
        let mut shells = 1u32;
        while gen_ic(shells).map(|r| r.len()).unwrap_or(0) < 2 * n {
            shells += 1;
        }
        let mut fc = 1u32;
        while gen_fc(fc).map(|r| r.len()).unwrap_or(0) < 2 * n {
            fc += 1;
        }
        vec![
            gen_cb(k.max(3)),
            gen_ic(shells.max(2)).expect("shells >= 1"),
            gen_fc(fc.max(2)).expect("shells >= 1"),
        ]
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.pop_size < 9 {
            return Err(Error::domain(format!("population size must be at least 9, got {}", self.pop_size)));
        }
        if n < 2 {
            return Err(Error::domain("clusters need at least two particles"));
        }
        if self.repeat_stop == 0 || self.max_generations == 0 {
            return Err(Error::domain("repeat_stop and max_generations must be positive"));
        }
        if self.weights.iter().any(|w| !(*w >= 0.0)) || self.weights.iter().all(|w| *w == 0.0) {
            return Err(Error::domain("operator weights must be non-negative and not all zero"));
        }
        if !self.regions.iter().any(|r| r.len() >= n) {
            return Err(Error::InsufficientRegion {
                needed: n,
                available: self.regions.iter().map(Region::len).max().unwrap_or(0),
            });
        }
        self.minimize.validate()
    }
}

/// A minimized cluster with its segmentation summary.
#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    pub cluster: Cluster,
    pub class: NucleusClass,
    /// Number of 12-coordinated particles.
    pub twelve: usize,
    pub layers: usize,
    pub max_neighbors: usize,
}

impl Member {
    pub fn new(cluster: Cluster) -> Member {
        let seg = segment(&cluster.config).ok();
        let (class, twelve, layers, max_neighbors) = match &seg {
            Some(s) => (s.nucleus.class, s.graph.twelve_count(), s.partition.layers, s.graph.max_count()),
            None => (NucleusClass::Unclassified, 0, 0, 0),
        };
        Member { cluster, class, twelve, layers, max_neighbors }
    }

    pub fn energy(&self) -> f64 {
        self.cluster.energy
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    /// Best first, then by increasing energy.
    pub members: Vec<Member>,
    pub generation: usize,
}

impl Population {
    pub fn best(&self) -> &Member {
        &self.members[0]
    }
}

/// Keeps `pop_size` members: the best, the one with most 12-coordinated
/// particles, the worst, the best of each nucleus category present, then the
/// rest by energy. Energies within `energy_tol` count as one cluster; if too
/// few distinct clusters remain, duplicates fill the population.
pub fn select_population(candidates: Vec<Member>, pop_size: usize, energy_tol: f64) -> Population {
    let mut sorted = candidates;
    sorted.sort_by(|a, b| a.energy().total_cmp(&b.energy()));
    let mut unique: Vec<usize> = Vec::new();
    for (i, m) in sorted.iter().enumerate() {
        if unique.last().is_none_or(|&u| (sorted[u].energy() - m.energy()).abs() > energy_tol) {
            unique.push(i);
        }
    }

    let mut chosen: Vec<usize> = Vec::with_capacity(pop_size);
    let take = |i: usize, chosen: &mut Vec<usize>| {
        if chosen.len() < pop_size && !chosen.contains(&i) {
            chosen.push(i);
        }
    };
    if let Some(&best) = unique.first() {
        take(best, &mut chosen);
        let most_twelve = unique
            .iter()
            .copied()
            .max_by(|&a, &b| sorted[a].twelve.cmp(&sorted[b].twelve).then(b.cmp(&a)))
            .expect("non-empty");
        take(most_twelve, &mut chosen);
        take(*unique.last().expect("non-empty"), &mut chosen);
        for class in NucleusClass::CATEGORIES {
            if let Some(&i) = unique.iter().find(|&&i| sorted[i].class == class) {
                take(i, &mut chosen);
            }
        }
        for &i in &unique {
            take(i, &mut chosen);
        }
    }
    chosen.sort_unstable();
    let mut members: Vec<Member> = chosen.iter().map(|&i| sorted[i].clone()).collect();
    let mut k = 0;
    while members.len() < pop_size && !sorted.is_empty() {
        members.push(sorted[k % sorted.len()].clone());
        k += 1;
    }
    members.sort_by(|a, b| a.energy().total_cmp(&b.energy()));
    Population { members, generation: 0 }
}

fn relax(c: &Configuration, settings: &MinimizeSettings, tag: &str) -> Result<Cluster> {
    let r = minimize(c, settings)?;
    Ok(Cluster::new(r.config.canonical(), r.energy, tag))
}

/// Compact seed of `n` points from `region` around `center`: points are
/// visited nearest-first (optionally with random jitter on the distance) and
/// kept when at least `0.75·d*` from every kept point.
pub fn sphere_seed<R: Rng + ?Sized>(
    region: &Region,
    center: Point3,
    n: usize,
    jitter: f64,
    rng: &mut R,
) -> Result<Configuration> {
    let mut order: Vec<(f64, usize)> = region
        .points()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let noise = if jitter > 0.0 { rng.gen_range(0.0..jitter) } else { 0.0 };
            (p.distance(&center) + noise, i)
        })
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let pts = region.points();
    let mut kept: Vec<Point3> = Vec::with_capacity(n);
    for (_, i) in order {
        if kept.iter().all(|q| q.distance(&pts[i]) >= SEED_SEPARATION) {
            kept.push(pts[i]);
            if kept.len() == n {
                return Configuration::new(kept);
            }
        }
    }
    Err(Error::InsufficientRegion { needed: n, available: kept.len() })
}

fn random_in_ball<R: Rng + ?Sized>(rng: &mut R, radius: f64) -> Point3 {
    loop {
        let p = Point3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if p.norm_squared() <= 1.0 {
            return p * radius;
        }
    }
}

/// Sub-region around the origin large enough for a centred cluster of
/// radius `radius`; the whole region when the cut would be too small.
fn local_region(region: &Region, radius: f64, n: usize) -> Region {
    match extract_sphere(region, Point3::ORIGIN, radius + LOCAL_MARGIN) {
        Ok(local) if local.len() > n => local,
        _ => region.clone(),
    }
}

fn cluster_radius(c: &Configuration) -> f64 {
    c.iter().map(|p| p.norm()).fold(0.0, f64::max)
}

/// Candidate vacant sites next to `c`: apexes of triangles of mutually
/// neighbouring particles, plus region points near the surface.
fn grow_sites(c: &Configuration, region: &Region) -> Vec<Point3> {
    let g = default_neighbor_graph(c);
    let mut sites = Vec::new();
    for i in 0..c.len() {
        for (a, &j) in g.neighbors[i].iter().enumerate() {
            if j <= i {
                continue;
            }
            for &k in &g.neighbors[i][a + 1..] {
                if k <= j || !g.are_neighbors(j, k) {
                    continue;
                }
                sites.extend(apexes(c[i], c[j], c[k], D_STAR));
            }
        }
    }
    let reach = cluster_radius(c) + SITE_MAX;
    sites.extend(region.points().iter().filter(|p| p.norm() <= reach).copied());
    sites.retain(|s| {
        let nearest = c.iter().map(|p| p.distance(s)).fold(f64::INFINITY, f64::min);
        (SITE_MIN..=SITE_MAX).contains(&nearest)
    });
    sites
}

/// The (up to two) points at distance `r` from all of `a`, `b`, `c`.
fn apexes(a: Point3, b: Point3, c: Point3, r: f64) -> Vec<Point3> {
    let ab = b - a;
    let ac = c - a;
    let normal = ab.cross(&ac);
    let nn = normal.norm_squared();
    if nn < 1e-12 {
        return Vec::new();
    }
    // circumcentre of the triangle
    let cc = a + (normal.cross(&ab) * ac.norm_squared() + ac.cross(&normal) * ab.norm_squared()) / (2.0 * nn);
    let rc2 = cc.distance_squared(&a);
    if rc2 >= r * r {
        return Vec::new();
    }
    let h = (r * r - rc2).sqrt();
    let unit = normal / nn.sqrt();
    vec![cc + unit * h, cc - unit * h]
}

/// Adds one particle to `parent` at a vacant site and minimizes.
///
/// Sites are ranked by neighbor count under the `(d*, 0.1)` criterion, then
/// by insertion energy; the site at rank `i` is taken with probability
/// proportional to `4^-i`.
pub fn make_up_grow<R: Rng + ?Sized>(
    parent: &Cluster,
    region: &Region,
    settings: &MinimizeSettings,
    rng: &mut R,
) -> Result<Cluster> {
    let c = parent.config.canonical();
    let mut scored: Vec<(usize, f64, Point3)> = grow_sites(&c, region)
        .into_iter()
        .map(|s| {
            let count = c
                .iter()
                .filter(|p| {
                    let d = p.distance(&s);
                    0.9 * D_STAR < d && d < 1.1 * D_STAR
                })
                .count();
            (count, insertion_energy(&c, s), s)
        })
        .collect();
    if scored.is_empty() {
        return Err(Error::SiteSearch);
    }
    scored.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.total_cmp(&b.1)));
    // collapse near-identical sites so ranks are distinct positions
    let mut distinct: Vec<Point3> = Vec::new();
    for (_, _, s) in &scored {
        if distinct.iter().all(|q| q.distance(s) > 0.1 * D_STAR) {
            distinct.push(*s);
        }
    }
    let mut pick = 0;
    while pick + 1 < distinct.len() && rng.gen_bool(0.25) {
        pick += 1;
    }
    relax(&c.with_point(distinct[pick])?, settings, "grow")
}

/// Index of the particle whose removal raises the energy least (the one
/// with the highest pair-energy sum); ties go to the lower index.
pub fn least_bound_particle(c: &Configuration) -> Result<usize> {
    let mut worst = 0;
    let mut worst_e = f64::NEG_INFINITY;
    for i in 0..c.len() {
        let e = particle_energy(c, i)?;
        if e > worst_e {
            worst_e = e;
            worst = i;
        }
    }
    Ok(worst)
}

/// Removes the least-bound particle of `parent` and minimizes.
pub fn make_up_shrink(parent: &Cluster, settings: &MinimizeSettings) -> Result<Cluster> {
    let c = &parent.config;
    if c.len() < 3 {
        return Err(Error::domain("shrinking needs a parent of at least three particles"));
    }
    relax(&c.without(least_bound_particle(c)?), settings, "shrink")
}

/// Inner layers `1..=k` of `a` (random `k` below its layer count) completed
/// with the particles of `b` nearest the centre, skipping overlaps.
pub fn phenotype_layer_crossover<R: Rng + ?Sized>(
    a: &Cluster,
    b: &Cluster,
    settings: &MinimizeSettings,
    rng: &mut R,
) -> Result<Cluster> {
    let n = a.len();
    if b.len() != n {
        return Err(Error::domain("layer crossover parents differ in size"));
    }
    let ca = a.config.canonical();
    let cb = b.config.canonical();
    let seg = segment(&ca)?;
    let layers = seg.partition.layers;
    if layers < 2 {
        return Err(Error::Construction("first parent has a single layer".into()));
    }
    let k = rng.gen_range(1..layers);
    let mut kept: Vec<Point3> =
        (0..n).filter(|&i| (1..=k).contains(&seg.partition.layer[i])).map(|i| ca[i]).collect();
    for p in cb.iter() {
        if kept.len() == n {
            break;
        }
        if kept.iter().all(|q| q.distance(p) >= OVERLAP) {
            kept.push(*p);
        }
    }
    if kept.len() < n {
        return Err(Error::Construction(format!("only {} of {n} particles placed", kept.len())));
    }
    relax(&Configuration::new(kept)?, settings, "layer_crossover")
}

/// Snaps `c` (centred) onto `region`, changes `mutations` digits and minimizes.
pub fn lattice_transform_with<R: Rng + ?Sized>(
    c: &Cluster,
    region: &Region,
    mutations: usize,
    settings: &MinimizeSettings,
    rng: &mut R,
) -> Result<Cluster> {
    let centred = c.config.canonical();
    let mut genome = genome_from_cluster(&centred, region)?;
    if mutations > 0 {
        genome = mutate_digits(&genome, region, mutations.min(genome.len()), rng)?;
    }
    relax(&genome_to_coords(&genome, region)?, settings, "lattice_transform")
}

/// [`lattice_transform_with`] with 0 to 3 mutated digits.
pub fn lattice_transform_mutation<R: Rng + ?Sized>(
    c: &Cluster,
    region: &Region,
    settings: &MinimizeSettings,
    rng: &mut R,
) -> Result<Cluster> {
    let k = rng.gen_range(0..=3);
    lattice_transform_with(c, region, k, settings, rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Repeats,
    MaxGenerations,
    Signal,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OperatorStats {
    pub applied: [usize; 6],
    pub failed: [usize; 6],
    /// Offspring that lowered the best energy.
    pub improved: [usize; 6],
}

impl OperatorStats {
    pub fn improved_by(&self, op: Operator) -> usize {
        self.improved[op.index()]
    }

    pub fn applied_by(&self, op: Operator) -> usize {
        self.applied[op.index()]
    }
}

#[derive(Debug, Clone)]
pub struct EvolveOutcome {
    pub best: Cluster,
    pub class: NucleusClass,
    pub layers: usize,
    pub generations: usize,
    /// Best energy after seeding (index 0) and after every generation.
    pub history: Vec<f64>,
    pub stop: StopReason,
    pub stats: OperatorStats,
    /// Minimized clusters with a particle of more than 12 neighbors.
    pub kissing_violations: usize,
    pub store_improved: bool,
    pub population: Population,
}

struct Context<'a> {
    n: usize,
    cfg: &'a EvolveConfig,
    population: &'a Population,
    smaller: Option<&'a Cluster>,
    larger: Option<&'a Cluster>,
}

impl Context<'_> {
    fn available(&self, op: Operator) -> bool {
        match op {
            Operator::Grow => self.smaller.is_some(),
            Operator::Shrink => self.larger.is_some(),
            Operator::MutateDigits | Operator::SpliceCrossover | Operator::LatticeTransform => {
                self.cfg.regions.iter().any(|r| r.len() > self.n)
            }
            Operator::LayerCrossover => self.n >= 3,
        }
    }

    fn tournament<'p, R: Rng + ?Sized>(&'p self, rng: &mut R) -> &'p Cluster {
        let m = &self.population.members;
        let a = rng.gen_range(0..m.len());
        let b = rng.gen_range(0..m.len());
        &m[a.min(b)].cluster
    }

    fn region<R: Rng + ?Sized>(&self, rng: &mut R) -> &Region {
        let usable: Vec<&Region> = self.cfg.regions.iter().filter(|r| r.len() > self.n).collect();
        usable.choose(rng).expect("checked by available()")
    }

    fn apply<R: Rng + ?Sized>(&self, op: Operator, rng: &mut R) -> Result<Cluster> {
        let settings = &self.cfg.minimize;
        match op {
            Operator::MutateDigits => {
                let parent = self.tournament(rng).config.canonical();
                let local = local_region(self.region(rng), cluster_radius(&parent), self.n);
                let genome = genome_from_cluster(&parent, &local)?;
                let k = rng.gen_range(1..=self.cfg.max_mutations.clamp(1, self.n));
                let child = mutate_digits(&genome, &local, k, rng)?;
                relax(&genome_to_coords(&child, &local)?, settings, op.name())
            }
            Operator::SpliceCrossover => {
                let a = self.tournament(rng).config.canonical();
                let b = self.tournament(rng).config.canonical();
                let radius = cluster_radius(&a).max(cluster_radius(&b));
                let local = local_region(self.region(rng), radius, self.n);
                let ga = genome_from_cluster(&a, &local)?;
                let gb = genome_from_cluster(&b, &local)?;
                let child = splice_crossover(&[&ga, &gb], &local, rng)?;
                relax(&genome_to_coords(&child, &local)?, settings, op.name())
            }
            Operator::LayerCrossover => {
                let a = self.tournament(rng);
                let b = self.tournament(rng);
                phenotype_layer_crossover(a, b, settings, rng)
            }
            Operator::LatticeTransform => {
                let parent = self.tournament(rng);
                let local = local_region(self.region(rng), cluster_radius(&parent.config.canonical()), self.n);
                lattice_transform_mutation(parent, &local, settings, rng)
            }
            Operator::Grow => {
                let parent = self.smaller.expect("checked by available()");
                let region = self.cfg.regions.iter().max_by_key(|r| r.len()).expect("validated");
                make_up_grow(parent, region, settings, rng)
            }
            Operator::Shrink => make_up_shrink(self.larger.expect("checked by available()"), settings),
        }
    }

    /// One offspring from its own random stream; `None` when every attempt failed.
    fn offspring(&self, op: Operator, seed: u64) -> (Operator, usize, Option<Cluster>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut failures = 0;
        for _ in 0..ATTEMPTS {
            match self.apply(op, &mut rng) {
                Ok(c) if c.len() == self.n => return (op, failures, Some(c)),
                Ok(c) => {
                    debug!("{op} produced {} particles, expected {}", c.len(), self.n);
                    failures += 1;
                }
                Err(e) => {
                    debug!("{op} failed: {e}");
                    failures += 1;
                }
            }
        }
        (op, failures, None)
    }
}

fn choose_operator<R: Rng + ?Sized>(ctx: &Context<'_>, rng: &mut R) -> Option<Operator> {
    let available: Vec<(Operator, f64)> = Operator::ALL
        .iter()
        .filter(|op| ctx.available(**op))
        .map(|op| (*op, ctx.cfg.weights[op.index()]))
        .collect();
    if available.is_empty() {
        return None;
    }
    let total: f64 = available.iter().map(|(_, w)| w).sum();
    if total <= 0.0 {
        return available.choose(rng).map(|(op, _)| *op);
    }
    let mut x = rng.gen_range(0.0..total);
    for (op, w) in &available {
        if x < *w {
            return Some(*op);
        }
        x -= w;
    }
    available.last().map(|(op, _)| *op)
}

fn run_jobs(
    ctx: &Context<'_>,
    jobs: &[(Operator, u64)],
    workers: usize,
    stop: Option<&StopSignal>,
) -> Vec<(Operator, usize, Option<Cluster>)> {
    let build = |&(op, seed): &(Operator, u64)| {
        if stop.is_some_and(StopSignal::is_raised) {
            (op, 0, None)
        } else {
            ctx.offspring(op, seed)
        }
    };
    if workers <= 1 || jobs.len() <= 1 {
        return jobs.iter().map(build).collect();
    }
    let chunk = jobs.len().div_ceil(workers);
    std::thread::scope(|s| {
        let handles: Vec<_> = jobs
            .chunks(chunk)
            .map(|part| s.spawn(move || part.iter().map(build).collect::<Vec<_>>()))
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("offspring worker panicked")).collect()
    })
}

/// Searches for the lowest-energy cluster of `n` particles.
///
/// The first population holds the warm starts, the stored best for `n` and
/// sphere seeds cut from the configured regions. Each generation builds
/// `offspring` minimized children with operators chosen by weight, merges
/// them with the population and reselects. The run ends when offspring have
/// rediscovered the best energy `repeat_stop` times, after
/// `max_generations`, or when `stop` is raised (the current generation is
/// truncated and still selected). The store is updated when the best beats it.
pub fn evolve_n(
    n: usize,
    cfg: &EvolveConfig,
    warm_starts: &[Cluster],
    store: &mut BestStore,
    stop: Option<&StopSignal>,
) -> Result<EvolveOutcome> {
    cfg.validate(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut kissing_violations = 0;
    let admit = |c: Cluster, kissing: &mut usize| {
        let m = Member::new(c);
        if m.max_neighbors > 12 {
            warn!("minimized {n}-cluster (E = {}) has a particle with {} neighbors", m.energy(), m.max_neighbors);
            *kissing += 1;
        }
        m
    };

    let mut candidates: Vec<Member> = Vec::new();
    for w in warm_starts.iter().filter(|w| w.len() == n) {
        candidates.push(admit(relax(&w.config, &cfg.minimize, &w.tag)?, &mut kissing_violations));
    }
    if let Some(stored) = store.best(n) {
        candidates.push(admit(stored.clone(), &mut kissing_violations));
    }
    let usable: Vec<&Region> = cfg.regions.iter().filter(|r| r.len() >= n).collect();
    for i in 0..cfg.initial_seeds.max(cfg.pop_size) {
        let region = usable[i % usable.len()];
        let first = i < usable.len();
        let center = if first { Point3::ORIGIN } else { random_in_ball(&mut rng, cfg.seed_offset) };
        let jitter = if first || i % 2 == 0 { 0.0 } else { 0.5 * D_STAR };
        let seeded = sphere_seed(region, center, n, jitter, &mut rng)
            .and_then(|c| relax(&c, &cfg.minimize, &format!("seed_{}", region.kind())));
        match seeded {
            Ok(c) => candidates.push(admit(c, &mut kissing_violations)),
            Err(e) => debug!("seed from {} region failed: {e}", region.kind()),
        }
    }
    if candidates.is_empty() {
        return Err(Error::Construction("no initial cluster could be seeded".into()));
    }

    let mut population = select_population(candidates, cfg.pop_size, cfg.energy_tol);
    let mut best = population.best().clone();
    let mut history = vec![best.energy()];
    let mut stats = OperatorStats::default();
    let mut repeats = 0;
    let mut reason = StopReason::MaxGenerations;
    let smaller = if n > 2 { store.best(n - 1).cloned() } else { None };
    let larger = store.best(n + 1).cloned();

    let mut generation = 0;
    while generation < cfg.max_generations {
        if stop.is_some_and(StopSignal::is_raised) {
            reason = StopReason::Signal;
            break;
        }
        generation += 1;
        let ctx = Context { n, cfg, population: &population, smaller: smaller.as_ref(), larger: larger.as_ref() };
        let mut jobs = Vec::with_capacity(cfg.offspring);
        for _ in 0..cfg.offspring {
            if let Some(op) = choose_operator(&ctx, &mut rng) {
                jobs.push((op, rng.gen::<u64>()));
            }
        }
        let results = run_jobs(&ctx, &jobs, cfg.workers, stop);

        let mut next: Vec<Member> = population.members.clone();
        for (op, failures, child) in results {
            stats.applied[op.index()] += 1;
            stats.failed[op.index()] += failures;
            let Some(child) = child else { continue };
            let member = admit(child, &mut kissing_violations);
            if member.energy() < best.energy() - cfg.energy_tol {
                stats.improved[op.index()] += 1;
                best = member.clone();
                repeats = 0;
            } else if (member.energy() - best.energy()).abs() <= cfg.energy_tol {
                repeats += 1;
            }
            next.push(member);
        }
        population = select_population(next, cfg.pop_size, cfg.energy_tol);
        population.generation = generation;
        if population.best().energy() < best.energy() {
            best = population.best().clone();
        }
        history.push(best.energy());
        debug!("n={n} generation {generation}: best {:.6}, repeats {repeats}", best.energy());
        if stop.is_some_and(StopSignal::is_raised) {
            reason = StopReason::Signal;
            break;
        }
        if repeats >= cfg.repeat_stop {
            reason = StopReason::Repeats;
            break;
        }
    }

    let mut best_cluster = best.cluster.clone();
    best_cluster.tag = format!("evolve:{}", best.cluster.tag);
    let store_improved = store.offer(best_cluster.clone(), cfg.player);
    Ok(EvolveOutcome {
        best: best_cluster,
        class: best.class,
        layers: best.layers,
        generations: generation,
        history,
        stop: reason,
        stats,
        kissing_violations,
        store_improved,
        population,
    })
}

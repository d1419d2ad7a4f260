use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};

use ljsearch::error::{Error, Result};
use ljsearch::evolve::{evolve_n, EvolveConfig};
use ljsearch::geometry::{Cluster, Configuration, Point3};
use ljsearch::io::{format_coords, format_real, read_coords, write_coords, write_report, ReportRow};
use ljsearch::lattices::{enumerate_region_as, extract_sphere, generate, LatticeKind, Region};
use ljsearch::matching::match_cluster;
use ljsearch::minimize::{minimize, MinimizeSettings};
use ljsearch::oracle::{brute_force_optimum, OracleOptions, DEFAULT_BUDGET};
use ljsearch::parallel::{run_players, BestStore, PlayerConfig, Role, StopSignal};
use ljsearch::potential::total_energy;
use ljsearch::structure::segment;

#[derive(Parser)]
#[command(name = "ljsearch", version, about = "Lennard-Jones cluster search on lattice regions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the points of a lattice region
    GenLattice {
        /// cb, ic, fc or if
        #[arg(long)]
        kind: LatticeKind,
        /// Half-width (cb) or number of shells (ic, fc, if)
        #[arg(long)]
        size: u32,
        /// Keep only points strictly inside this radius (units of length)
        #[arg(long)]
        radius: Option<f64>,
        /// Sphere centre as x,y,z
        #[arg(long, value_parser = parse_point, default_value = "0,0,0")]
        center: Point3,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the total energy of a coordinate file
    Energy { file: PathBuf },
    /// Locally minimize a configuration
    Minimize {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        min: MinArgs,
    },
    /// Neighbor counts, nucleus and layer of every particle
    Segment {
        file: PathBuf,
        /// Write `id,layer,neighbors,nucleus` rows here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the nucleus class of a configuration
    Classify { file: PathBuf },
    /// Assign each particle a distinct region point
    Match {
        file: PathBuf,
        #[command(flatten)]
        regions: RegionArgs,
        /// Write the snapped coordinates here
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evolutionary search for one size or a range of sizes
    Evolve {
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long, default_value = "ljsearch-out")]
        out_dir: PathBuf,
    },
    /// Several cooperating searches with a master relaying improvements
    Players {
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long, default_value_t = 2)]
        workers: usize,
        #[arg(long, default_value_t = 0)]
        master_index: usize,
        /// Stop after this many seconds
        #[arg(long)]
        seconds: Option<f64>,
        /// Sweeps over the size range per player; unlimited when absent
        #[arg(long)]
        sweeps: Option<usize>,
        #[arg(long, default_value = "ljsearch-out")]
        out_dir: PathBuf,
    },
    /// Exhaustive search over every n-subset of a small region
    Bruteforce {
        #[command(flatten)]
        regions: RegionArgs,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        minimize_each: bool,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Energy, class and layers of coordinate files as CSV reports
    Report {
        /// Coordinate files, or directories of them
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, default_value = "report.csv")]
        out: PathBuf,
    },
}

#[derive(Args, Clone)]
struct MinArgs {
    #[arg(long, default_value_t = 1e-8)]
    grad_tol: f64,
    #[arg(long, default_value_t = 5000)]
    max_iters: usize,
    /// Also stop when max|grad| / |energy| falls below this
    #[arg(long)]
    relative_tol: Option<f64>,
}

impl MinArgs {
    fn settings(&self) -> MinimizeSettings {
        MinimizeSettings {
            grad_tol: self.grad_tol,
            max_iters: self.max_iters,
            relative_grad_tol: self.relative_tol,
            ..MinimizeSettings::default()
        }
    }
}

#[derive(Args, Clone)]
struct RegionArgs {
    /// Generated region as KIND:SIZE, e.g. cb:3 (repeatable)
    #[arg(long = "lattice", value_parser = parse_lattice)]
    lattices: Vec<(LatticeKind, u32)>,
    /// Region read from a coordinate file (repeatable)
    #[arg(long = "region")]
    files: Vec<PathBuf>,
}

impl RegionArgs {
    fn load(&self) -> Result<Vec<Region>> {
        let mut out = Vec::new();
        for (kind, size) in &self.lattices {
            out.push(generate(*kind, *size)?);
        }
        for f in &self.files {
            out.push(enumerate_region_as(read_coords(f)?.into_points(), LatticeKind::Custom)?);
        }
        Ok(out)
    }

    fn single(&self) -> Result<Region> {
        let mut all = self.load()?;
        if all.len() != 1 {
            return Err(Error::Domain(format!("expected exactly one region, got {}", all.len())));
        }
        Ok(all.remove(0))
    }
}

#[derive(Args, Clone)]
struct SearchArgs {
    /// Cluster size
    #[arg(long, conflicts_with = "n_range")]
    n: Option<usize>,
    /// Size range as A..B (inclusive)
    #[arg(long, value_parser = parse_range)]
    n_range: Option<(usize, usize)>,
    #[arg(long, default_value_t = 14)]
    pop_size: usize,
    #[arg(long, default_value_t = 5)]
    repeat_stop: usize,
    #[arg(long, default_value_t = 200)]
    max_generations: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Threads building offspring inside one search
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Operator weights: mutate,splice,layer,transform,grow,shrink
    #[arg(long, value_parser = parse_weights)]
    weights: Option<[f64; 6]>,
    #[command(flatten)]
    regions: RegionArgs,
    #[command(flatten)]
    min: MinArgs,
}

impl SearchArgs {
    fn sizes(&self) -> Result<(usize, usize)> {
        match (self.n, self.n_range) {
            (Some(n), None) => Ok((n, n)),
            (None, Some((a, b))) if a <= b => Ok((a, b)),
            (None, Some((a, b))) => Err(Error::Domain(format!("empty size range {a}..{b}"))),
            _ => Err(Error::Domain("give --n or --n-range".into())),
        }
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or_else(|| {
            eprintln!("no --seed given, using seed 0");
            0
        })
    }

    /// Regions are empty when none were given; sizes then get default regions.
    fn config(&self, seed: u64) -> Result<EvolveConfig> {
        let mut cfg = EvolveConfig {
            pop_size: self.pop_size,
            offspring: self.pop_size,
            initial_seeds: 3 * self.pop_size,
            repeat_stop: self.repeat_stop,
            max_generations: self.max_generations,
            seed,
            regions: self.regions.load()?,
            minimize: self.min.settings(),
            workers: self.threads,
            ..EvolveConfig::default()
        };
        if let Some(w) = self.weights {
            cfg.weights = w;
        }
        Ok(cfg)
    }
}

fn parse_point(s: &str) -> std::result::Result<Point3, String> {
    let v: Vec<f64> = s.split(',').map(|t| t.trim().parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|e| e.to_string())?;
    match v[..] {
        [x, y, z] => Ok(Point3::new(x, y, z)),
        _ => Err("expected x,y,z".into()),
    }
}

fn parse_lattice(s: &str) -> std::result::Result<(LatticeKind, u32), String> {
    let (k, n) = s.split_once(':').ok_or("expected KIND:SIZE")?;
    let kind: LatticeKind = k.parse().map_err(|e: Error| e.to_string())?;
    Ok((kind, n.parse().map_err(|e| format!("{e}"))?))
}

fn parse_range(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once("..").ok_or("expected A..B")?;
    Ok((a.trim().parse().map_err(|e| format!("{e}"))?, b.trim().parse().map_err(|e| format!("{e}"))?))
}

fn parse_weights(s: &str) -> std::result::Result<[f64; 6], String> {
    let v: Vec<f64> = s.split(',').map(|t| t.trim().parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|e| e.to_string())?;
    v.try_into().map_err(|_| "expected six comma-separated weights".to_string())
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn stop_on_interrupt() -> StopSignal {
    let stop = StopSignal::new();
    let s = stop.clone();
    if let Err(e) = ctrlc::set_handler(move || {
        eprintln!("interrupt: finishing the current generation");
        s.raise();
    }) {
        log::warn!("cannot install interrupt handler: {e}");
    }
    stop
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenLattice { kind, size, radius, center, out } => {
            let mut region = generate(kind, size)?;
            if let Some(r) = radius {
                region = extract_sphere(&region, center, r)?;
            }
            let c = Configuration::new(region.points().to_vec())?;
            emit(&format_coords(&c), out.as_deref())
        }
        Command::Energy { file } => {
            println!("{}", format_real(total_energy(&read_coords(&file)?)?));
            Ok(())
        }
        Command::Minimize { file, out, min } => {
            let r = minimize(&read_coords(&file)?, &min.settings())?;
            if let Some(p) = &out {
                write_coords(&r.config, p)?;
            }
            println!(
                "energy {}\ngrad_norm {:e}\niterations {}\nconverged {}",
                format_real(r.energy),
                r.grad_norm,
                r.iters,
                r.converged
            );
            Ok(())
        }
        Command::Segment { file, out } => {
            let c = read_coords(&file)?;
            let seg = segment(&c)?;
            let mut text = String::from("id,layer,neighbors,nucleus\n");
            for i in 0..c.len() {
                let nuc = seg.nucleus.ids.contains(&i) as u8;
                text.push_str(&format!("{},{},{},{nuc}\n", i + 1, seg.partition.layer[i], seg.graph.count(i)));
            }
            emit(&text, out.as_deref())?;
            eprintln!("class {} layers {} max_neighbors {}", seg.nucleus.class, seg.partition.layers, seg.graph.max_count());
            Ok(())
        }
        Command::Classify { file } => {
            println!("{}", ljsearch::structure::classify(&read_coords(&file)?));
            Ok(())
        }
        Command::Match { file, regions, out } => {
            let c = read_coords(&file)?;
            let region = regions.single()?;
            let m = match_cluster(c.points(), &region)?;
            let ids: Vec<String> = m.ids.iter().map(usize::to_string).collect();
            println!("{}", ids.join(" "));
            if let Some(p) = &out {
                write_coords(&Configuration::new(m.snapped)?, p)?;
            }
            Ok(())
        }
        Command::Evolve { search, out_dir } => {
            let (lo, hi) = search.sizes()?;
            let seed = search.seed();
            let base = search.config(seed)?;
            let stop = stop_on_interrupt();
            let mut store = BestStore::persistent(&out_dir)?;
            let mut rows = Vec::new();
            for n in lo..=hi {
                if stop.is_raised() {
                    break;
                }
                let mut cfg = base.clone();
                cfg.seed = seed.wrapping_add(n as u64);
                if cfg.regions.is_empty() {
                    cfg.regions = EvolveConfig::default_regions(n);
                }
                let started = Instant::now();
                let o = evolve_n(n, &cfg, &[], &mut store, Some(&stop))?;
                let best: &Cluster = store.best(n).expect("stored");
                let seg = segment(&best.config)?;
                println!("n={n} energy={} class={} generations={}", format_real(best.energy), seg.nucleus.class, o.generations);
                rows.push(ReportRow {
                    n,
                    energy: best.energy,
                    class: seg.nucleus.class,
                    layers: seg.partition.layers,
                    generations: o.generations,
                    seconds: started.elapsed().as_secs_f64(),
                    operators: Some(o.stats),
                });
            }
            store.write_csv(out_dir.join("best_store.csv"))?;
            if !rows.is_empty() {
                write_report(&rows, out_dir.join("report.csv"))?;
            }
            Ok(())
        }
        Command::Players { search, workers, master_index, seconds, sweeps, out_dir } => {
            let (lo, hi) = search.sizes()?;
            let seed = search.seed();
            let base = search.config(seed)?;
            let auto = base.regions.is_empty();
            if seconds.is_none() && sweeps.is_none() {
                eprintln!("no --seconds or --sweeps given: running until interrupted");
            }
            let configs = (0..workers)
                .map(|i| PlayerConfig {
                    id: i,
                    role: if i == master_index { Role::Master } else { Role::Slave },
                    sizes: lo..=hi,
                    evolve: base.clone(),
                    max_sweeps: sweeps,
                    out_dir: None,
                    auto_regions: auto,
                })
                .collect();
            let stop = stop_on_interrupt();
            let timer = seconds.map(Duration::from_secs_f64);
            let (reports, merged) = run_players(configs, master_index, &stop, timer, Some(&out_dir))?;
            for r in &reports {
                eprintln!("player {}: {} sweeps, queue high-water {}", r.id, r.sweeps, r.high_water);
            }
            for (n, e) in merged.iter() {
                println!("n={n} energy={} source={}", format_real(e.cluster.energy), e.source);
            }
            Ok(())
        }
        Command::Bruteforce { regions, n, minimize_each, budget, checkpoint, workers, out } => {
            let region = regions.single()?;
            let opts = OracleOptions { minimize_each, budget, checkpoint, workers, ..OracleOptions::default() };
            let r = brute_force_optimum(&region, n, &opts)?;
            let ids: Vec<String> = r.ids.iter().map(usize::to_string).collect();
            println!(
                "energy {}\nids {}\nenumerated {}\ndegeneracy {}\nlevels {}",
                format_real(r.best.energy),
                ids.join(" "),
                r.enumerated,
                r.degeneracy,
                r.levels.len()
            );
            if let Some(p) = &out {
                write_coords(&r.best.config, p)?;
            }
            Ok(())
        }
        Command::Report { inputs, out } => {
            let mut files = Vec::new();
            for p in inputs {
                if p.is_dir() {
                    let mut inner: Vec<PathBuf> = fs::read_dir(&p)?
                        .filter_map(|e| e.ok().map(|e| e.path()))
                        .filter(|f| f.extension().is_some_and(|x| x == "xyz"))
                        .collect();
                    inner.sort();
                    files.extend(inner);
                } else {
                    files.push(p);
                }
            }
            let mut rows = Vec::new();
            for f in &files {
                let c = read_coords(f)?;
                let seg = segment(&c)?;
                rows.push(ReportRow {
                    n: c.len(),
                    energy: total_energy(&c)?,
                    class: seg.nucleus.class,
                    layers: seg.partition.layers,
                    generations: 0,
                    seconds: 0.0,
                    operators: None,
                });
            }
            rows.sort_by_key(|r| r.n);
            write_report(&rows, &out)?;
            println!("{} rows written to {}", rows.len(), out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

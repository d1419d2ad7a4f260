//! Exhaustive search over every `n`-subset of a small region.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::geometry::{Cluster, Configuration};
use crate::io::format_real;
use crate::lattices::Region;
use crate::minimize::{minimize, MinimizeSettings};
use crate::potential::total_energy;

pub const DEFAULT_BUDGET: u64 = 1_000_000;
/// Subsets between checkpoints.
pub const CHECKPOINT_EVERY: u64 = 10_000;
/// Minima closer than this in energy are the same minimum.
pub const DEGENERACY_TOL: f64 = 1e-6;

/// Exact binomial coefficient `C(m, n)`.
pub fn count_combinations(m: u64, n: u64) -> Result<BigUint> {
    if n > m {
        return Err(Error::domain(format!("cannot choose {n} of {m}")));
    }
    let k = n.min(m - n);
    let mut acc = BigUint::from(1u32);
    for i in 0..k {
        acc *= m - i;
        acc /= i + 1;
    }
    Ok(acc)
}

fn binom(m: u64, n: u64) -> u64 {
    if n > m {
        return 0;
    }
    let k = n.min(m - n);
    let mut acc: u128 = 1;
    for i in 0..k as u128 {
        acc = acc * (m as u128 - i) / (i + 1);
    }
    acc as u64
}

/// The `rank`-th `n`-subset of `0..m` in lexicographic order (0-based ids).
pub fn unrank(m: usize, n: usize, mut rank: u64) -> Vec<usize> {
    let mut out = Vec::with_capacity(n);
    let mut next = 0;
    for slot in 0..n {
        let left = (n - slot - 1) as u64;
        loop {
            let with_next = binom((m - next - 1) as u64, left);
            if rank < with_next {
                break;
            }
            rank -= with_next;
            next += 1;
        }
        out.push(next);
        next += 1;
    }
    out
}

/// Advances to the lexicographic successor; false after the last subset.
pub fn next_combination(c: &mut [usize], m: usize) -> bool {
    let n = c.len();
    for i in (0..n).rev() {
        if c[i] < m - n + i {
            c[i] += 1;
            for j in i + 1..n {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

#[derive(Debug, Clone)]
pub struct OracleOptions {
    pub minimize_each: bool,
    pub settings: MinimizeSettings,
    /// Refuse instances with more subsets than this.
    pub budget: u64,
    /// Resumable progress file, rewritten every [`CHECKPOINT_EVERY`] subsets.
    pub checkpoint: Option<PathBuf>,
    pub workers: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            minimize_each: false,
            settings: MinimizeSettings::default(),
            budget: DEFAULT_BUDGET,
            checkpoint: None,
            workers: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub best: Cluster,
    /// 1-based region ids of the best subset.
    pub ids: Vec<usize>,
    pub enumerated: u64,
    /// Subsets whose energy is within tolerance of the best.
    pub degeneracy: u64,
    /// Distinct energy levels found, ascending, with how many subsets reached each.
    pub levels: Vec<(f64, u64)>,
    /// Subsets that were skipped because minimization failed.
    pub failures: u64,
    /// Rank the run started from (non-zero after a resume).
    pub resumed_from: u64,
}

#[derive(Debug, Clone, Default)]
struct Progress {
    next: u64,
    best: Option<(u64, f64)>,
    levels: Vec<(f64, u64)>,
    failures: u64,
}

fn merge_levels(mut levels: Vec<(f64, u64)>) -> Vec<(f64, u64)> {
    levels.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, u64)> = Vec::new();
    for (e, k) in levels {
        match out.last_mut() {
            Some(last) if e - last.0 <= DEGENERACY_TOL => last.1 += k,
            _ => out.push((e, k)),
        }
    }
    out
}

fn write_checkpoint(path: &Path, p: &Progress) -> Result<()> {
    let mut s = format!("next {}\nfailures {}\n", p.next, p.failures);
    if let Some((rank, e)) = p.best {
        let _ = writeln!(s, "best {rank} {}", format_real(e));
    }
    for (e, k) in &p.levels {
        let _ = writeln!(s, "level {} {k}", format_real(*e));
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, s)?;
    fs::rename(tmp, path)?;
    Ok(())
}

fn read_checkpoint(path: &Path) -> Result<Progress> {
    let text = fs::read_to_string(path)?;
    let mut p = Progress::default();
    for (i, line) in text.lines().enumerate() {
        let bad = |msg: &str| Error::Parse { path: path.to_path_buf(), line: i + 1, msg: msg.into() };
        let f: Vec<&str> = line.split_whitespace().collect();
        let num = |k: usize| f.get(k).ok_or_else(|| bad("missing field"));
        match f.first().copied() {
            Some("next") => p.next = num(1)?.parse().map_err(|_| bad("bad rank"))?,
            Some("failures") => p.failures = num(1)?.parse().map_err(|_| bad("bad count"))?,
            Some("best") => {
                p.best = Some((
                    num(1)?.parse().map_err(|_| bad("bad rank"))?,
                    num(2)?.parse().map_err(|_| bad("bad energy"))?,
                ))
            }
            Some("level") => p.levels.push((
                num(1)?.parse().map_err(|_| bad("bad energy"))?,
                num(2)?.parse().map_err(|_| bad("bad count"))?,
            )),
            None => {}
            Some(_) => return Err(bad("unknown record")),
        }
    }
    Ok(p)
}

fn evaluate(region: &Region, ids: &[usize], opts: &OracleOptions) -> Option<f64> {
    let config = Configuration::new(ids.iter().map(|&i| region.points()[i]).collect()).ok()?;
    if opts.minimize_each {
        match minimize(&config, &opts.settings) {
            Ok(r) => Some(r.energy),
            Err(e) => {
                warn!("minimization of subset {ids:?} failed: {e}");
                None
            }
        }
    } else {
        total_energy(&config).ok()
    }
}

/// Best `(rank, energy)`, energy levels and failure count of one scanned range.
type Scan = (Option<(u64, f64)>, Vec<(f64, u64)>, u64);

/// Evaluates ranks `start..end`.
fn scan(region: &Region, n: usize, start: u64, end: u64, opts: &OracleOptions) -> Scan {
    let m = region.len();
    let mut ids = unrank(m, n, start);
    let mut best: Option<(u64, f64)> = None;
    let mut energies = Vec::with_capacity((end - start) as usize);
    let mut failures = 0;
    for rank in start..end {
        match evaluate(region, &ids, opts) {
            Some(e) => {
                if best.is_none_or(|(_, b)| e < b) {
                    best = Some((rank, e));
                }
                energies.push((e, 1));
            }
            None => failures += 1,
        }
        next_combination(&mut ids, m);
    }
    (best, merge_levels(energies), failures)
}

fn better(a: Option<(u64, f64)>, b: Option<(u64, f64)>) -> Option<(u64, f64)> {
    match (a, b) {
        (Some(x), Some(y)) => Some(if y.1 < x.1 || (y.1 == x.1 && y.0 < x.0) { y } else { x }),
        (x, None) => x,
        (None, y) => y,
    }
}

/// Enumerates every `n`-subset of `region` in lexicographic id order and
/// returns the lowest-energy one (raw or minimized). Ties go to the first
/// subset in that order, whatever the number of workers.
pub fn brute_force_optimum(region: &Region, n: usize, opts: &OracleOptions) -> Result<OracleResult> {
    let m = region.len();
    if n == 0 {
        return Err(Error::domain("subset size must be positive"));
    }
    let count = count_combinations(m as u64, n as u64)?;
    if count > BigUint::from(opts.budget) {
        return Err(Error::BudgetExceeded { count, budget: opts.budget });
    }
    let total: u64 = count.try_into().expect("within a u64 budget");
    if opts.minimize_each {
        opts.settings.validate()?;
    }

    let mut progress = match &opts.checkpoint {
        Some(path) if path.exists() => {
            let p = read_checkpoint(path)?;
            if p.next > total {
                return Err(Error::domain(format!("checkpoint rank {} beyond {total} subsets", p.next)));
            }
            info!("resuming enumeration at subset {}", p.next);
            p
        }
        _ => Progress::default(),
    };
    let resumed_from = progress.next;
    let workers = opts.workers.max(1) as u64;

    while progress.next < total {
        let block_end = (progress.next + CHECKPOINT_EVERY).min(total);
        let span = block_end - progress.next;
        let chunk = span.div_ceil(workers);
        let starts: Vec<u64> = (progress.next..block_end).step_by(chunk as usize).collect();
        let parts: Vec<_> = if starts.len() == 1 {
            vec![scan(region, n, progress.next, block_end, opts)]
        } else {
            std::thread::scope(|s| {
                let handles: Vec<_> = starts
                    .iter()
                    .map(|&a| {
                        let b = (a + chunk).min(block_end);
                        s.spawn(move || scan(region, n, a, b, opts))
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().expect("oracle worker panicked")).collect()
            })
        };
        for (best, levels, failures) in parts {
            progress.best = better(progress.best, best);
            progress.levels.extend(levels);
            progress.failures += failures;
        }
        progress.levels = merge_levels(std::mem::take(&mut progress.levels));
        progress.next = block_end;
        if let Some(path) = &opts.checkpoint {
            write_checkpoint(path, &progress)?;
        }
    }

    let (rank, _) = progress.best.ok_or_else(|| Error::domain("no subset could be evaluated"))?;
    let ids0 = unrank(m, n, rank);
    let config = Configuration::new(ids0.iter().map(|&i| region.points()[i]).collect())?;
    let best = if opts.minimize_each {
        let r = minimize(&config, &opts.settings)?;
        Cluster::new(r.config, r.energy, "bruteforce")
    } else {
        let e = total_energy(&config)?;
        Cluster::new(config, e, "bruteforce")
    };
    let degeneracy = progress
        .levels
        .iter()
        .filter(|(e, _)| (e - best.energy).abs() <= DEGENERACY_TOL)
        .map(|(_, k)| k)
        .sum();
    Ok(OracleResult {
        best,
        ids: ids0.iter().map(|i| i + 1).collect(),
        enumerated: total,
        degeneracy,
        levels: progress.levels,
        failures: progress.failures,
        resumed_from,
    })
}

//! Cooperating players: each owns a best-cluster store, runs the search over
//! a size range, and exchanges improvements by message passing. One player is
//! the master; the others only talk to it and it relays to everybody.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use crossbeam_channel::{unbounded, Receiver, Sender, TryRecvError};
use log::{debug, info, warn};

use crate::error::{Error, Result};
use crate::evolve::{evolve_n, EvolveConfig};
use crate::geometry::Cluster;
use crate::io::{format_real, write_coords, write_report, ReportRow};
use crate::potential::{energy_and_gradient, total_energy};
use crate::structure::classify;

/// Messages whose energy disagrees with their coordinates by more than this are dropped.
const ENERGY_CHECK: f64 = 1e-6;
/// ...and so are those whose gradient is this far from stationary.
const GRADIENT_CHECK: f64 = 1e-4;
/// An offer must beat the stored energy by more than this; smaller gains are
/// rounding noise from re-minimizing the same cluster.
pub const IMPROVEMENT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct StoreEntry {
    pub cluster: Cluster,
    /// Value of the store's update counter when the entry was accepted.
    pub stamp: u64,
    pub source: usize,
}

/// Best cluster per size. Only improvements by more than [`IMPROVEMENT_TOL`] are accepted.
#[derive(Debug, Clone, Default)]
pub struct BestStore {
    entries: BTreeMap<usize, StoreEntry>,
    clock: u64,
    persist: Option<PathBuf>,
}

impl BestStore {
    pub fn new() -> BestStore {
        BestStore::default()
    }

    /// A store that writes `lj<n>.xyz` into `dir` on every accepted update.
    pub fn persistent(dir: impl Into<PathBuf>) -> Result<BestStore> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(BestStore { persist: Some(dir), ..BestStore::default() })
    }

    pub fn get(&self, n: usize) -> Option<&StoreEntry> {
        self.entries.get(&n)
    }

    pub fn best(&self, n: usize) -> Option<&Cluster> {
        self.entries.get(&n).map(|e| &e.cluster)
    }

    pub fn energy(&self, n: usize) -> Option<f64> {
        self.best(n).map(|c| c.energy)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &StoreEntry)> {
        self.entries.iter().map(|(n, e)| (*n, e))
    }

    /// Stores `cluster` if it beats the current entry for its size. Returns
    /// whether it was accepted. Persistence failures are logged, not fatal.
    pub fn offer(&mut self, cluster: Cluster, source: usize) -> bool {
        let n = cluster.len();
        if !cluster.energy.is_finite() || self.energy(n).is_some_and(|e| cluster.energy >= e - IMPROVEMENT_TOL) {
            return false;
        }
        self.clock += 1;
        if let Some(dir) = &self.persist {
            let path = dir.join(format!("lj{n}.xyz"));
            if let Err(e) = write_coords(&cluster.config, &path) {
                warn!("could not persist {}: {e}", path.display());
            }
        }
        self.entries.insert(n, StoreEntry { cluster, stamp: self.clock, source });
        true
    }

    /// `n,energy,class,source,stamp`, one row per size.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,energy,class,source,stamp\n");
        for (n, e) in &self.entries {
            let _ = writeln!(
                out,
                "{n},{},{},{},{}",
                format_real(e.cluster.energy),
                classify(&e.cluster.config),
                e.source,
                e.stamp
            );
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Best per size over several stores; ties keep the earlier store.
pub fn merge_stores<'a>(stores: impl IntoIterator<Item = &'a BestStore>) -> BestStore {
    let mut merged = BestStore::new();
    for s in stores {
        for (n, e) in s.iter() {
            if merged.energy(n).is_none_or(|best| e.cluster.energy < best) {
                merged.entries.insert(n, e.clone());
            }
        }
    }
    merged.clock = merged.entries.values().map(|e| e.stamp).max().unwrap_or(0);
    merged
}

#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    Improved { from: usize, cluster: Cluster },
    Stop,
}

/// Shared stop flag.
#[derive(Debug, Clone, Default)]
pub struct StopSignal(Arc<AtomicBool>);

impl StopSignal {
    pub fn new() -> StopSignal {
        StopSignal::default()
    }

    /// Raises the flag; true only for the call that raised it.
    pub fn raise(&self) -> bool {
        !self.0.swap(true, Ordering::SeqCst)
    }

    pub fn is_raised(&self) -> bool {
        self.0.load(Ordering::SeqCst)
    }
}

/// Raises a stop signal and tells every player, once.
#[derive(Debug, Clone)]
pub struct StopController {
    signal: StopSignal,
    players: Vec<Sender<Message>>,
}

impl StopController {
    pub fn new(signal: StopSignal, players: Vec<Sender<Message>>) -> StopController {
        StopController { signal, players }
    }

    pub fn signal(&self) -> &StopSignal {
        &self.signal
    }

    /// Idempotent; returns whether this call did the stopping.
    pub fn stop(&self) -> bool {
        if !self.signal.raise() {
            return false;
        }
        for tx in &self.players {
            let _ = tx.send(Message::Stop);
        }
        true
    }

    /// Stops after `after`, unless the signal is raised first.
    pub fn arm_timer(&self, after: Duration) -> thread::JoinHandle<()> {
        let me = self.clone();
        thread::spawn(move || {
            let deadline = Instant::now() + after;
            while !me.signal.is_raised() {
                let now = Instant::now();
                if now >= deadline {
                    me.stop();
                    break;
                }
                thread::sleep((deadline - now).min(Duration::from_millis(20)));
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Master,
    Slave,
}

/// A player's end of the message network.
#[derive(Debug)]
pub struct Links {
    pub inbox: Receiver<Message>,
    /// Slaves: the master only. Master: every other player.
    pub outbox: Vec<Sender<Message>>,
    high_water: usize,
}

impl Links {
    pub fn new(inbox: Receiver<Message>, outbox: Vec<Sender<Message>>) -> Links {
        Links { inbox, outbox, high_water: 0 }
    }

    /// Sends to every outbox; false if any link is closed.
    fn broadcast(&self, msg: &Message) -> bool {
        let mut ok = true;
        for tx in &self.outbox {
            ok &= tx.send(msg.clone()).is_ok();
        }
        ok
    }

    pub fn high_water(&self) -> usize {
        self.high_water
    }
}

/// Builds the star network: returns one `Links` per player and the senders
/// into every inbox (for a stop controller).
pub fn star_network(players: usize, master: usize) -> Result<(Vec<Links>, Vec<Sender<Message>>)> {
    if players == 0 || master >= players {
        return Err(Error::domain(format!("master index {master} invalid for {players} players")));
    }
    let (txs, rxs): (Vec<_>, Vec<_>) = (0..players).map(|_| unbounded()).unzip();
    let links = rxs
        .into_iter()
        .enumerate()
        .map(|(i, rx)| {
            let outbox = if i == master {
                (0..players).filter(|&j| j != master).map(|j| txs[j].clone()).collect()
            } else {
                vec![txs[master].clone()]
            };
            Links::new(rx, outbox)
        })
        .collect();
    Ok((links, txs))
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Drain {
    pub accepted: usize,
    /// Valid clusters no better than the stored one.
    pub rejected: usize,
    /// Malformed messages.
    pub dropped: usize,
    pub stop: bool,
    /// Inbox length when the drain began.
    pub pending: usize,
}

fn well_formed(c: &Cluster) -> std::result::Result<(), String> {
    if c.len() < 2 {
        return Err(format!("cluster of {} particles", c.len()));
    }
    let (e, g) = energy_and_gradient(&c.config).map_err(|e| e.to_string())?;
    if !((e - c.energy).abs() <= ENERGY_CHECK * e.abs().max(1.0)) {
        return Err(format!("claimed energy {} but coordinates give {e}", c.energy));
    }
    let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(gmax <= GRADIENT_CHECK) {
        return Err(format!("not minimized, gradient {gmax:e}"));
    }
    Ok(())
}

/// Applies every queued message to `store` in order. Improvements are
/// forwarded through `relay` when given (the master's outbox). Stop messages are noted; the queue is still emptied.
pub fn cerberus_drain(inbox: &Receiver<Message>, store: &mut BestStore, relay: Option<&[Sender<Message>]>) -> Drain {
    let mut d = Drain { pending: inbox.len(), ..Drain::default() };
    loop {
        match inbox.try_recv() {
            Ok(Message::Stop) => d.stop = true,
            Ok(Message::Improved { from, cluster }) => {
                if let Err(why) = well_formed(&cluster) {
                    warn!("dropping message from player {from}: {why}");
                    d.dropped += 1;
                    continue;
                }
                if store.offer(cluster.clone(), from) {
                    d.accepted += 1;
                    if let Some(out) = relay {
                        for tx in out {
                            let _ = tx.send(Message::Improved { from, cluster: cluster.clone() });
                        }
                    }
                } else {
                    d.rejected += 1;
                }
            }
            Err(TryRecvError::Empty) | Err(TryRecvError::Disconnected) => break,
        }
    }
    d
}

#[derive(Debug, Clone)]
pub struct PlayerConfig {
    pub id: usize,
    pub role: Role,
    pub sizes: RangeInclusive<usize>,
    pub evolve: EvolveConfig,
    /// Sweeps over `sizes` before stopping on its own; `None` runs until stopped.
    pub max_sweeps: Option<usize>,
    /// Per-player output directory (store CSV, coordinates, report).
    pub out_dir: Option<PathBuf>,
    /// Builds regions for each size when `evolve.regions` is empty.
    pub auto_regions: bool,
}

#[derive(Debug, Clone)]
pub struct PlayerReport {
    pub id: usize,
    pub store: BestStore,
    pub rows: Vec<ReportRow>,
    pub sweeps: usize,
    pub high_water: usize,
}

fn derive_seed(base: u64, player: usize, sweep: usize, n: usize) -> u64 {
    let mut x = base ^ 0x9E37_79B9_7F4A_7C15;
    for v in [player as u64, sweep as u64, n as u64] {
        x = (x ^ v).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        x ^= x >> 31;
    }
    x
}

/// One player: drain, then a sweep over the sizes, until stopped, out of
/// sweeps, or the master link closes. Drains happen only between sizes, so
/// a running search is never touched. On exit the store and report are
/// written to `out_dir`.
pub fn run_player(cfg: &PlayerConfig, links: &mut Links, stop: &StopSignal, initial: BestStore) -> Result<PlayerReport> {
    if *cfg.sizes.start() < 2 || cfg.sizes.is_empty() {
        return Err(Error::domain(format!("invalid size range {:?}", cfg.sizes)));
    }
    let mut store = initial;
    if let Some(dir) = &cfg.out_dir {
        let persistent = BestStore::persistent(dir.join("clusters"))?;
        store = BestStore { persist: persistent.persist, ..store };
    }
    let relay = (cfg.role == Role::Master).then(|| links.outbox.clone());
    let mut rows: BTreeMap<usize, ReportRow> = BTreeMap::new();
    let mut sweeps = 0;
    'outer: while !stop.is_raised() && cfg.max_sweeps.is_none_or(|m| sweeps < m) {
        for n in cfg.sizes.clone() {
            let drained = cerberus_drain(&links.inbox, &mut store, relay.as_deref());
            links.high_water = links.high_water.max(drained.pending);
            if drained.stop || stop.is_raised() {
                break 'outer;
            }
            let mut ecfg = cfg.evolve.clone();
            ecfg.seed = derive_seed(cfg.evolve.seed, cfg.id, sweeps, n);
            ecfg.player = cfg.id;
            if cfg.auto_regions && ecfg.regions.is_empty() {
                ecfg.regions = EvolveConfig::default_regions(n);
            }
            let started = Instant::now();
            let outcome = evolve_n(n, &ecfg, &[], &mut store, Some(stop))?;
            let seconds = started.elapsed().as_secs_f64();
            debug!("player {} n={n}: {:.6} ({:?})", cfg.id, outcome.best.energy, outcome.stop);
            if outcome.store_improved {
                let msg = Message::Improved { from: cfg.id, cluster: outcome.best.clone() };
                if !links.broadcast(&msg) && cfg.role == Role::Slave {
                    info!("player {}: master link closed, shutting down", cfg.id);
                    break 'outer;
                }
            }
            let stored = store.best(n).expect("evolve_n offers its best").clone();
            let seg = crate::structure::segment(&stored.config)?;
            let total = rows.get(&n).map(|r| r.generations).unwrap_or(0) + outcome.generations;
            let secs = rows.get(&n).map(|r| r.seconds).unwrap_or(0.0) + seconds;
            rows.insert(
                n,
                ReportRow {
                    n,
                    energy: stored.energy,
                    class: seg.nucleus.class,
                    layers: seg.partition.layers,
                    generations: total,
                    seconds: secs,
                    operators: Some(outcome.stats),
                },
            );
        }
        sweeps += 1;
    }
    // late improvements still count; nothing is relayed after this point
    cerberus_drain(&links.inbox, &mut store, None);

    let rows: Vec<ReportRow> = rows.into_values().collect();
    if let Some(dir) = &cfg.out_dir {
        store.write_csv(dir.join("best_store.csv"))?;
        if !rows.is_empty() {
            write_report(&rows, dir.join("report.csv"))?;
        }
    }
    Ok(PlayerReport { id: cfg.id, store, rows, sweeps, high_water: links.high_water })
}

/// Runs every player on its own thread. Returns their reports (in player
/// order) and the merged store; with `out_dir`, each player writes to
/// `out_dir/player_<id>` and the merged store goes to `out_dir/best_store.csv`.
pub fn run_players(
    configs: Vec<PlayerConfig>,
    master: usize,
    stop: &StopSignal,
    timer: Option<Duration>,
    out_dir: Option<&Path>,
) -> Result<(Vec<PlayerReport>, BestStore)> {
    let (links, senders) = star_network(configs.len(), master)?;
    let controller = StopController::new(stop.clone(), senders);
    let timer_handle = timer.map(|d| controller.arm_timer(d));
    let results: Mutex<Vec<Option<Result<PlayerReport>>>> = Mutex::new((0..configs.len()).map(|_| None).collect());

    thread::scope(|s| {
        for (i, (mut cfg, mut link)) in configs.into_iter().zip(links).enumerate() {
            cfg.id = i;
            cfg.role = if i == master { Role::Master } else { Role::Slave };
            if let Some(dir) = out_dir {
                cfg.out_dir = Some(dir.join(format!("player_{i}")));
            }
            let results = &results;
            let controller = &controller;
            s.spawn(move || {
                let r = run_player(&cfg, &mut link, controller.signal(), BestStore::new());
                drop(link);
                results.lock().expect("result lock")[i] = Some(r);
            });
        }
    });
    // finished players: release the timer
    stop.raise();
    if let Some(h) = timer_handle {
        let _ = h.join();
    }

    let mut reports = Vec::new();
    for r in results.into_inner().expect("result lock") {
        reports.push(r.expect("every player reports")?);
    }
    let merged = merge_stores(reports.iter().map(|r| &r.store));
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        merged.write_csv(dir.join("best_store.csv"))?;
    }
    Ok((reports, merged))
}

/// Re-evaluates every stored energy against its coordinates.
pub fn verify_store(store: &BestStore) -> Result<()> {
    for (n, e) in store.iter() {
        let fresh = total_energy(&e.cluster.config)?;
        if (fresh - e.cluster.energy).abs() > 1e-9 * fresh.abs().max(1.0) {
            return Err(Error::domain(format!("stored energy for n={n} does not match its coordinates")));
        }
    }
    Ok(())
}

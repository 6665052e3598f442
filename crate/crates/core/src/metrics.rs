//! Evaluation quantities and their CSV/JSON serialisation.
//!
//! Rates are reported over full windows only: for a window `w` the first
//! reported round is `w - 1`. With one message generated per round, the
//! number of deliveries in a 100-round window is already a percentage.
//!
//! Energy per delivered message divides each honest sensor's energy spent
//! inside the window by the deliveries inside the same window. Windows
//! without deliveries have no value; in `timeseries.csv` those cells are
//! left empty.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::engine::{Counters, RoundRecord, ScenarioKind, Simulation};
use crate::error::{Error, Result};
use crate::topology::{DeploymentConfig, NodeId, Role};

/// Identifies the run a log belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub scenario: ScenarioKind,
    pub deployment: DeploymentConfig,
    pub rounds: u64,
    pub window: usize,
    pub master_seed: u64,
    pub topology_attempts: u32,
}

/// Per-sensor summary at the end of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub node_id: NodeId,
    pub distance: f64,
    pub hop: u32,
    /// Role as the scenario sees it.
    pub role: Role,
    pub total_energy: f64,
}

/// Per-round series.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RoundSeries {
    pub generated: Vec<u32>,
    pub deliveries: Vec<u32>,
    pub captures: Vec<u32>,
    pub in_flight: Vec<u64>,
    /// Sparse per-round energy spent, ascending by node id within a round.
    pub energy_deltas: Vec<Vec<(NodeId, f64)>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsLog {
    pub meta: RunMeta,
    pub series: RoundSeries,
    /// One record per sensor, ascending by id. The sink is not listed.
    pub nodes: Vec<NodeRecord>,
    pub totals: Counters,
}

impl MetricsLog {
    /// An empty log for `sim`'s topology, before any round ran.
    pub fn new(meta: RunMeta, sim: &Simulation) -> Self {
        let mut log = Self {
            meta,
            series: RoundSeries::default(),
            nodes: Vec::new(),
            totals: Counters::default(),
        };
        log.finish(sim);
        log
    }

    pub fn push_round(&mut self, record: &RoundRecord) {
        let s = &mut self.series;
        s.generated.push(1);
        s.deliveries.push(record.delivered);
        s.captures.push(record.captured);
        let prev = s.in_flight.last().copied().unwrap_or(0);
        s.in_flight
            .push(prev + 1 - u64::from(record.delivered) - u64::from(record.captured));
        s.energy_deltas.push(record.energy_deltas.clone());
    }

    /// Refreshes per-node totals and counters from the simulation.
    pub fn finish(&mut self, sim: &Simulation) {
        let topo = sim.topology();
        let sink = topo.position(topo.sink());
        self.nodes = topo
            .sensors()
            .map(|id| NodeRecord {
                node_id: id,
                distance: topo.position(id).distance(&sink),
                hop: topo.hop(id),
                role: sim.effective_role(id),
                total_energy: sim.consumed_energy(id),
            })
            .collect();
        self.totals = sim.counters();
    }

    pub fn rounds(&self) -> usize {
        self.series.deliveries.len()
    }

    pub fn total_energy(&self) -> f64 {
        self.nodes.iter().map(|n| n.total_energy).sum()
    }

    fn honest_slots(&self) -> Vec<bool> {
        // indexed by node id; sink slot stays false
        let mut honest = vec![false; self.nodes.len() + 1];
        for n in &self.nodes {
            honest[n.node_id.index()] = n.role == Role::Honest;
        }
        honest
    }

    fn full_window_range(&self, window: usize, t: usize) -> Result<()> {
        let len = self.rounds();
        if window == 0 || window > len || t + 1 < window || t >= len {
            return Err(Error::RoundOutOfRange {
                round: t,
                first: window.saturating_sub(1),
                last: len.saturating_sub(1),
            });
        }
        Ok(())
    }
}

/// Sum of `series` over the `window` rounds ending at `t`, divided by
/// `window` and scaled to a percentage.
pub fn smoothed_rate(series: &[u32], t: usize, window: usize) -> Result<f64> {
    if window == 0 || t + 1 < window || t >= series.len() {
        return Err(Error::RoundOutOfRange {
            round: t,
            first: window.saturating_sub(1),
            last: series.len().saturating_sub(1),
        });
    }
    let sum: u64 = series[t + 1 - window..=t]
        .iter()
        .map(|&x| u64::from(x))
        .sum();
    Ok(sum as f64 / window as f64 * 100.0)
}

/// Mean and maximum over honest sensors of energy spent per delivered
/// message in one window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyPerDelivered {
    pub average: f64,
    pub maximum: f64,
}

fn summarize(window_energy: &[f64], honest: &[bool], delivered: u64) -> Option<EnergyPerDelivered> {
    if delivered == 0 {
        return None;
    }
    let d = delivered as f64;
    let mut count = 0usize;
    let mut sum = 0.0;
    let mut max = 0.0f64;
    for (e, _) in window_energy.iter().zip(honest).filter(|(_, &h)| h) {
        let m = e / d;
        sum += m;
        max = max.max(m);
        count += 1;
    }
    if count == 0 {
        return None;
    }
    Some(EnergyPerDelivered {
        average: sum / count as f64,
        maximum: max,
    })
}

/// Energy per delivered message in the `window` rounds ending at `t`;
/// `None` when the window has no delivery.
pub fn energy_per_delivered(
    log: &MetricsLog,
    t: usize,
    window: usize,
) -> Result<Option<EnergyPerDelivered>> {
    log.full_window_range(window, t)?;
    let mut energy = vec![0.0; log.nodes.len() + 1];
    for deltas in &log.series.energy_deltas[t + 1 - window..=t] {
        for &(id, e) in deltas {
            energy[id.index()] += e;
        }
    }
    let delivered: u64 = log.series.deliveries[t + 1 - window..=t]
        .iter()
        .map(|&x| u64::from(x))
        .sum();
    Ok(summarize(&energy, &log.honest_slots(), delivered))
}

/// [`energy_per_delivered`] for every full window, starting at round
/// `window - 1`.
pub fn energy_per_delivered_series(
    log: &MetricsLog,
    window: usize,
) -> Vec<Option<EnergyPerDelivered>> {
    let len = log.rounds();
    if window == 0 || window > len {
        return Vec::new();
    }
    let honest = log.honest_slots();
    let mut energy = vec![0.0; log.nodes.len() + 1];
    let mut delivered = 0u64;
    let mut out = Vec::with_capacity(len + 1 - window);
    for t in 0..len {
        for &(id, e) in &log.series.energy_deltas[t] {
            energy[id.index()] += e;
        }
        delivered += u64::from(log.series.deliveries[t]);
        if t >= window {
            for &(id, e) in &log.series.energy_deltas[t - window] {
                energy[id.index()] -= e;
            }
            delivered -= u64::from(log.series.deliveries[t - window]);
        }
        if t + 1 >= window {
            out.push(summarize(&energy, &honest, delivered));
        }
    }
    out
}

/// `(distance to sink, total energy / elapsed_rounds)` for every honest
/// sensor.
pub fn per_sensor_power(log: &MetricsLog, elapsed_rounds: u64) -> Vec<(f64, f64)> {
    assert!(elapsed_rounds > 0, "power needs at least one elapsed round");
    let elapsed = elapsed_rounds as f64;
    log.nodes
        .iter()
        .filter(|n| n.role == Role::Honest)
        .map(|n| (n.distance, n.total_energy / elapsed))
        .collect()
}

/// One row of `timeseries.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeseriesRow {
    pub round: u64,
    pub scenario: ScenarioKind,
    pub delivered_pct: f64,
    pub captured_pct: f64,
    pub avg_energy_per_delivered: Option<f64>,
    pub max_energy_per_delivered: Option<f64>,
}

/// One row of `sensors.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorRow {
    pub node_id: u32,
    pub distance: f64,
    pub hop: u32,
    pub role: Role,
    pub total_energy: f64,
    pub power: f64,
}

/// Smoothed values at the last reported round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalRates {
    pub round: u64,
    pub delivered_pct: f64,
    pub captured_pct: f64,
    pub avg_energy_per_delivered: Option<f64>,
    pub max_energy_per_delivered: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub generated: u64,
    pub delivered: u64,
    pub captured: u64,
    pub in_flight: u64,
    pub slides: u64,
    pub ejections: u64,
    pub ejection_energy: f64,
    pub total_energy: f64,
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub scenario: ScenarioKind,
    pub master_seed: u64,
    pub deployment: DeploymentConfig,
    pub rounds: u64,
    pub window: usize,
    pub sensors: usize,
    pub attackers: usize,
    pub topology_attempts: u32,
    pub totals: Totals,
    /// `None` when the run is shorter than one window.
    pub final_rates: Option<FinalRates>,
}

impl MetricsLog {
    pub fn timeseries(&self) -> Vec<TimeseriesRow> {
        let window = self.meta.window;
        let energy = energy_per_delivered_series(self, window);
        energy
            .into_iter()
            .enumerate()
            .map(|(i, e)| {
                let t = i + window - 1;
                TimeseriesRow {
                    round: t as u64,
                    scenario: self.meta.scenario,
                    delivered_pct: smoothed_rate(&self.series.deliveries, t, window)
                        .expect("full window"),
                    captured_pct: smoothed_rate(&self.series.captures, t, window)
                        .expect("full window"),
                    avg_energy_per_delivered: e.map(|e| e.average),
                    max_energy_per_delivered: e.map(|e| e.maximum),
                }
            })
            .collect()
    }

    /// Rows for `sensors.csv`; empty before the first round.
    pub fn sensor_rows(&self) -> Vec<SensorRow> {
        let elapsed = self.rounds() as f64;
        if self.rounds() == 0 {
            return Vec::new();
        }
        self.nodes
            .iter()
            .map(|n| SensorRow {
                node_id: n.node_id.0,
                distance: n.distance,
                hop: n.hop,
                role: n.role,
                total_energy: n.total_energy,
                power: n.total_energy / elapsed,
            })
            .collect()
    }

    pub fn summary(&self) -> Summary {
        let final_rates = self.timeseries().pop().map(|row| FinalRates {
            round: row.round,
            delivered_pct: row.delivered_pct,
            captured_pct: row.captured_pct,
            avg_energy_per_delivered: row.avg_energy_per_delivered,
            max_energy_per_delivered: row.max_energy_per_delivered,
        });
        let c = &self.totals;
        Summary {
            scenario: self.meta.scenario,
            master_seed: self.meta.master_seed,
            deployment: self.meta.deployment.clone(),
            rounds: self.rounds() as u64,
            window: self.meta.window,
            sensors: self.nodes.len(),
            attackers: self
                .nodes
                .iter()
                .filter(|n| n.role == Role::Attacker)
                .count(),
            topology_attempts: self.meta.topology_attempts,
            totals: Totals {
                generated: c.generated,
                delivered: c.delivered,
                captured: c.captured,
                in_flight: c.in_flight(),
                slides: c.slides,
                ejections: c.ejections,
                ejection_energy: c.ejection_energy,
                total_energy: self.total_energy(),
            },
            final_rates,
        }
    }
}

fn write_rows<W: Write, R: Serialize>(out: W, header: &[&str], rows: &[R]) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub const TIMESERIES_HEADER: [&str; 6] = [
    "round",
    "scenario",
    "delivered_pct",
    "captured_pct",
    "avg_energy_per_delivered",
    "max_energy_per_delivered",
];

pub const SENSORS_HEADER: [&str; 6] = [
    "node_id",
    "distance",
    "hop",
    "role",
    "total_energy",
    "power",
];

pub fn write_timeseries<W: Write>(log: &MetricsLog, out: W) -> csv::Result<()> {
    write_rows(out, &TIMESERIES_HEADER, &log.timeseries())
}

pub fn write_sensors<W: Write>(log: &MetricsLog, out: W) -> csv::Result<()> {
    write_rows(out, &SENSORS_HEADER, &log.sensor_rows())
}

pub fn write_summary<W: Write>(log: &MetricsLog, mut out: W) -> serde_json::Result<()> {
    serde_json::to_writer_pretty(&mut out, &log.summary())?;
    out.write_all(b"\n").map_err(serde_json::Error::io)
}

/// Writes `timeseries.csv`, `sensors.csv` and `summary.json` into `dir`,
/// creating it if needed.
pub fn export(log: &MetricsLog, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let create = |name: &str| -> Result<(PathBuf, BufWriter<File>)> {
        let path = dir.join(name);
        let file = File::create(&path).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
        Ok((path, BufWriter::new(file)))
    };

    let (path, w) = create("timeseries.csv")?;
    write_timeseries(log, w).map_err(|source| Error::Csv { path, source })?;
    let (path, w) = create("sensors.csv")?;
    write_sensors(log, w).map_err(|source| Error::Csv { path, source })?;
    let (path, mut w) = create("summary.json")?;
    write_summary(log, &mut w).map_err(|source| Error::Json {
        path: path.clone(),
        source,
    })?;
    w.flush().map_err(|source| Error::Io { path, source })?;
    Ok(())
}

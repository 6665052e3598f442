//! The round loop.
//!
//! Each round has an event phase, where one honest sensor drawn uniformly
//! from the events substream gets a fresh message, and a propagation phase,
//! where every sensor whose queue was non-empty at the start of the phase
//! sends its oldest message, in ascending id order. A message slid to an
//! honest relay waits there until the next round. A message slid to an
//! active attacker is captured immediately.
//!
//! Slides cost the sender 1 energy unit and ejections `hop^2`. The trust
//! ledger is maintained in every scenario; only the trust-gated scenario
//! reads it.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::adversary;
use crate::error::{Error, Result};
use crate::metrics::{MetricsLog, RunMeta};
use crate::rng::{substream, SimRng, Substream};
use crate::routing::{
    ejection_cost, mix_next_hop, trustmix_next_hop, NeighborView, NodeSelfState, RouteDecision,
};
use crate::topology::{generate_topology, DeploymentConfig, NodeId, Role, Topology, SINK};
use crate::trust::{Link, TrustLedger};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScenarioKind {
    /// MIX with every sensor honest.
    #[serde(rename = "mix")]
    MixNoAttack,
    /// MIX with the attackers active.
    #[serde(rename = "mix-attack")]
    MixUnderAttack,
    /// Trust-gated MIX with the attackers active.
    #[serde(rename = "trustmix")]
    TrustMixUnderAttack,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 3] = [
        ScenarioKind::MixNoAttack,
        ScenarioKind::MixUnderAttack,
        ScenarioKind::TrustMixUnderAttack,
    ];

    pub fn attackers_active(self) -> bool {
        !matches!(self, ScenarioKind::MixNoAttack)
    }

    pub fn uses_trust(self) -> bool {
        matches!(self, ScenarioKind::TrustMixUnderAttack)
    }

    /// Short name used on the command line and in output paths.
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::MixNoAttack => "mix",
            ScenarioKind::MixUnderAttack => "mix-attack",
            ScenarioKind::TrustMixUnderAttack => "trustmix",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown scenario `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fate {
    InFlight,
    Delivered(u64),
    Captured(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub id: u64,
    pub origin: NodeId,
    pub birth_round: u64,
    /// Slide links in traversal order. Ejections are not links.
    pub path: Vec<Link>,
    pub fate: Fate,
}

impl Message {
    /// Node currently holding the message (or that last held it).
    pub fn holder(&self) -> NodeId {
        self.path.last().map_or(self.origin, |l| l.to)
    }
}

/// Parameters of one run.
///
/// The master seed is `deployment.seed`: it keys the topology, attacker
/// placement, event, tie-break and trust-gate substreams. None of them
/// depend on the scenario, so the three scenarios of one seed share
/// topology, attackers and event origins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub deployment: DeploymentConfig,
    pub scenario: ScenarioKind,
    pub rounds: u64,
    pub smoothing_window: usize,
}

impl RunConfig {
    pub fn new(deployment: DeploymentConfig, scenario: ScenarioKind, rounds: u64) -> Self {
        Self {
            deployment,
            scenario,
            rounds,
            smoothing_window: 100,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.deployment.seed
    }

    pub fn validate(&self) -> Result<()> {
        self.deployment.validate()?;
        if self.rounds == 0 {
            return Err(Error::InvalidConfig("rounds must be at least 1".into()));
        }
        if self.smoothing_window == 0 {
            return Err(Error::InvalidConfig(
                "smoothing window must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// What happened in one round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub round: u64,
    pub origin: NodeId,
    pub delivered: u32,
    pub captured: u32,
    pub slides: u32,
    pub ejections: u32,
    /// Energy spent by each sender this round, ascending by id.
    pub energy_deltas: Vec<(NodeId, f64)>,
}

/// Running totals, all exact.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Counters {
    pub generated: u64,
    pub delivered: u64,
    pub captured: u64,
    pub slides: u64,
    pub ejections: u64,
    /// Sum of `hop^2` over every ejection.
    pub ejection_energy: f64,
}

impl Counters {
    pub fn in_flight(&self) -> u64 {
        self.generated - self.delivered - self.captured
    }
}

/// Mutable state of one run.
pub struct Simulation {
    topology: Topology,
    scenario: ScenarioKind,
    master_seed: u64,
    /// Per vertex; attackers' lies when this scenario activates them.
    fabricated: Vec<Option<NeighborView>>,
    honest: Vec<NodeId>,
    energy: Vec<f64>,
    queues: Vec<VecDeque<u64>>,
    ledger: TrustLedger,
    messages: Vec<Message>,
    round: u64,
    counters: Counters,
    events_rng: SimRng,
    tie_rng: SimRng,
    gate_rng: SimRng,
    views: Vec<NeighborView>,
}

impl Simulation {
    pub fn new(topology: Topology, scenario: ScenarioKind, master_seed: u64) -> Result<Self> {
        let honest = topology.honest_sensors();
        if honest.is_empty() {
            return Err(Error::InvalidConfig(
                "no honest sensor left to generate events".into(),
            ));
        }
        let mut fabricated = vec![None; topology.node_count()];
        if scenario.attackers_active() {
            for p in adversary::profiles(&topology) {
                fabricated[p.node_id.index()] = Some(p.view());
            }
        }
        let n = topology.node_count();
        Ok(Self {
            fabricated,
            honest,
            energy: vec![0.0; n],
            queues: vec![VecDeque::new(); n],
            ledger: TrustLedger::new(),
            messages: Vec::new(),
            round: 0,
            counters: Counters::default(),
            events_rng: substream(master_seed, Substream::Events),
            tie_rng: substream(master_seed, Substream::TieBreak),
            gate_rng: substream(master_seed, Substream::TrustGate),
            views: Vec::new(),
            topology,
            scenario,
            master_seed,
        })
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn scenario(&self) -> ScenarioKind {
        self.scenario
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// Rounds completed so far.
    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn ledger(&self) -> &TrustLedger {
        &self.ledger
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    pub fn counters(&self) -> Counters {
        self.counters
    }

    pub fn consumed_energy(&self, id: NodeId) -> f64 {
        self.energy[id.index()]
    }

    pub fn energies(&self) -> &[f64] {
        &self.energy
    }

    pub fn queue_len(&self, id: NodeId) -> usize {
        self.queues[id.index()].len()
    }

    /// Whether `id` behaves as an attacker in this scenario.
    pub fn acts_as_attacker(&self, id: NodeId) -> bool {
        self.fabricated[id.index()].is_some()
    }

    /// Role of `id` as this scenario sees it: would-be attackers are
    /// honest relays when the attack is off.
    pub fn effective_role(&self, id: NodeId) -> Role {
        match self.topology.role(id) {
            Role::Attacker if !self.scenario.attackers_active() => Role::Honest,
            role => role,
        }
    }

    fn view_of(&self, m: NodeId) -> NeighborView {
        self.fabricated[m.index()].unwrap_or(NeighborView {
            id: m,
            advertised_hop: self.topology.hop(m),
            advertised_consumed_energy: self.energy[m.index()],
        })
    }

    pub fn step_round(&mut self) -> Result<RoundRecord> {
        let round = self.round;
        let mut record = RoundRecord {
            round,
            origin: SINK,
            delivered: 0,
            captured: 0,
            slides: 0,
            ejections: 0,
            energy_deltas: Vec::new(),
        };

        // event phase
        let origin = self.honest[self.events_rng.gen_range(0..self.honest.len())];
        let id = self.messages.len() as u64;
        self.messages.push(Message {
            id,
            origin,
            birth_round: round,
            path: Vec::new(),
            fate: Fate::InFlight,
        });
        self.queues[origin.index()].push_back(id);
        self.counters.generated += 1;
        record.origin = origin;

        // propagation phase
        let senders: Vec<NodeId> = self
            .topology
            .sensors()
            .filter(|s| !self.queues[s.index()].is_empty())
            .collect();
        for sender in senders {
            let msg_id = self.queues[sender.index()]
                .pop_front()
                .expect("sender snapshot holds non-empty queues");
            debug_assert!(!self.acts_as_attacker(sender));
            let me = NodeSelfState {
                id: sender,
                hop: self.topology.hop(sender),
                consumed_energy: self.energy[sender.index()],
            };

            let mut views = std::mem::take(&mut self.views);
            views.clear();
            views.extend(
                self.topology
                    .neighbors(sender)
                    .iter()
                    .filter(|&&m| m != SINK)
                    .map(|&m| self.view_of(m)),
            );
            let decision = if self.scenario.uses_trust() {
                let ledger = &self.ledger;
                trustmix_next_hop(
                    &me,
                    &views,
                    |m| ledger.trust(sender, m),
                    &mut self.gate_rng,
                    &mut self.tie_rng,
                )
            } else {
                mix_next_hop(&me, &views, &mut self.tie_rng)
            };
            self.views = views;

            let msg = &mut self.messages[msg_id as usize];
            debug_assert_eq!(msg.holder(), sender, "message path continuity");
            match decision {
                RouteDecision::Slide(target) => {
                    self.energy[sender.index()] += 1.0;
                    record.energy_deltas.push((sender, 1.0));
                    record.slides += 1;
                    self.counters.slides += 1;
                    self.ledger.record_send(sender, target);
                    msg.path.push(Link::new(sender, target));
                    if self.fabricated[target.index()].is_some() {
                        adversary::capture(msg, round, &mut self.ledger)?;
                        record.captured += 1;
                        self.counters.captured += 1;
                    } else {
                        self.queues[target.index()].push_back(msg_id);
                    }
                }
                RouteDecision::Eject => {
                    let cost = ejection_cost(&me);
                    self.energy[sender.index()] += cost;
                    record.energy_deltas.push((sender, cost));
                    record.ejections += 1;
                    self.counters.ejections += 1;
                    self.counters.ejection_energy += cost;
                    self.ledger.record_delivery(&msg.path)?;
                    msg.fate = Fate::Delivered(round);
                    record.delivered += 1;
                    self.counters.delivered += 1;
                }
            }
        }

        self.round += 1;
        Ok(record)
    }

    /// Checks the run-wide accounting identities, returning a description
    /// of the first one that fails.
    pub fn check_invariants(&self) -> Result<(), String> {
        let c = &self.counters;
        let in_flight = self
            .messages
            .iter()
            .filter(|m| m.fate == Fate::InFlight)
            .count() as u64;
        if c.generated != self.messages.len() as u64
            || c.generated != c.delivered + c.captured + in_flight
        {
            return Err(format!(
                "message conservation: generated {} != delivered {} + captured {} + in flight {in_flight}",
                c.generated, c.delivered, c.captured
            ));
        }
        let queued: usize = self.queues.iter().map(VecDeque::len).sum();
        if queued as u64 != in_flight {
            return Err(format!(
                "{queued} queued messages but {in_flight} in flight"
            ));
        }

        let total: f64 = self.energy.iter().sum();
        let expected = c.slides as f64 + c.ejection_energy;
        if total != expected {
            return Err(format!(
                "energy ledger: total {total} != slides {} + ejection energy {}",
                c.slides, c.ejection_energy
            ));
        }

        let mut delivered_links = 0u64;
        let mut captured_links = 0u64;
        let mut slides = 0u64;
        for m in &self.messages {
            slides += m.path.len() as u64;
            match m.fate {
                Fate::Delivered(_) => delivered_links += m.path.len() as u64,
                Fate::Captured(_) => captured_links += m.path.len() as u64,
                Fate::InFlight => {}
            }
            let mut at = m.origin;
            for link in &m.path {
                if link.from != at {
                    return Err(format!("message {} path is not contiguous", m.id));
                }
                at = link.to;
            }
        }
        let totals = self.ledger.totals();
        if totals.sent != slides || slides != c.slides {
            return Err(format!(
                "ledger sends {} != path links {slides} (slides counted {})",
                totals.sent, c.slides
            ));
        }
        if totals.received != delivered_links || totals.captured != captured_links {
            return Err(format!(
                "ledger r/c ({}, {}) != delivered/captured path lengths ({delivered_links}, {captured_links})",
                totals.received, totals.captured
            ));
        }

        for a in self.topology.attackers() {
            if self.acts_as_attacker(*a) {
                if self.energy[a.index()] != 0.0 {
                    return Err(format!("attacker {a} consumed energy"));
                }
                if self.ledger.links().iter().any(|(l, _)| l.from == *a) {
                    return Err(format!("attacker {a} forwarded a message"));
                }
            }
        }
        Ok(())
    }
}

/// Runs `config.rounds` rounds of `scenario` on `topology`, returning the
/// metrics together with the final simulation state.
pub fn simulate(
    topology: Topology,
    scenario: ScenarioKind,
    config: &RunConfig,
) -> Result<(MetricsLog, Simulation)> {
    let mut sim = Simulation::new(topology, scenario, config.master_seed())?;
    let meta = RunMeta {
        scenario,
        deployment: config.deployment.clone(),
        rounds: config.rounds,
        window: config.smoothing_window,
        master_seed: config.master_seed(),
        topology_attempts: sim.topology().attempts(),
    };
    let mut log = MetricsLog::new(meta, &sim);
    for _ in 0..config.rounds {
        let record = sim.step_round()?;
        log.push_round(&record);
    }
    log.finish(&sim);
    Ok((log, sim))
}

/// Runs `config.rounds` rounds of `scenario` on `topology` and collects
/// metrics.
pub fn run_on(
    topology: Topology,
    scenario: ScenarioKind,
    config: &RunConfig,
) -> Result<MetricsLog> {
    simulate(topology, scenario, config).map(|(log, _)| log)
}

/// Generates the topology for `config` and runs its scenario.
pub fn run(config: &RunConfig) -> Result<MetricsLog> {
    config.validate()?;
    let topology = generate_topology(&config.deployment)?;
    run_on(topology, config.scenario, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::Point2D;

    fn chain(n: usize, spacing: f64) -> Vec<Point2D> {
        (1..=n)
            .map(|i| Point2D::new(spacing * i as f64, 0.0))
            .collect()
    }

    #[test]
    fn hop_one_origin_ejects_at_cost_one() {
        let t = Topology::from_sensors(&[Point2D::new(0.5, 0.0)], &[]).unwrap();
        let mut sim = Simulation::new(t, ScenarioKind::MixNoAttack, 1).unwrap();
        let rec = sim.step_round().unwrap();
        assert_eq!(rec.delivered, 1);
        assert_eq!(rec.energy_deltas, vec![(NodeId(1), 1.0)]);
        assert_eq!(sim.messages()[0].fate, Fate::Delivered(0));
        sim.check_invariants().unwrap();
    }

    #[test]
    fn slid_message_waits_one_round() {
        // sink - 1 - 2 with only sensor 2 able to originate (1 is the
        // attacker-turned-honest relay in the no-attack scenario)
        let t = Topology::from_sensors(&chain(2, 0.9), &[NodeId(1)]).unwrap();
        let mut sim = Simulation::new(t, ScenarioKind::MixNoAttack, 7).unwrap();
        let r0 = sim.step_round().unwrap();
        assert_eq!(r0.origin, NodeId(2));
        assert_eq!(r0.slides, 1);
        assert_eq!(r0.delivered, 0);
        assert_eq!(sim.queue_len(NodeId(1)), 1);
        let r1 = sim.step_round().unwrap();
        // round 1: new message at 2 slides or ejects; the old one ejects from 1
        assert!(r1.delivered >= 1);
        assert_eq!(sim.messages()[0].fate, Fate::Delivered(1));
        assert_eq!(
            sim.messages()[0].path,
            vec![Link::new(NodeId(2), NodeId(1))]
        );
        sim.check_invariants().unwrap();
    }

    #[test]
    fn attacker_neighbor_captures() {
        let t = Topology::from_sensors(&chain(2, 0.9), &[NodeId(1)]).unwrap();
        let mut sim = Simulation::new(t, ScenarioKind::MixUnderAttack, 7).unwrap();
        for _ in 0..20 {
            let rec = sim.step_round().unwrap();
            assert_eq!(rec.captured, 1);
        }
        assert_eq!(sim.consumed_energy(NodeId(1)), 0.0);
        assert_eq!(sim.consumed_energy(NodeId(2)), 20.0);
        sim.check_invariants().unwrap();
    }

    #[test]
    fn trust_gate_learns_to_avoid_attacker() {
        let t = Topology::from_sensors(&chain(2, 0.9), &[NodeId(1)]).unwrap();
        let mut sim = Simulation::new(t, ScenarioKind::TrustMixUnderAttack, 7).unwrap();
        let mut delivered_late = 0;
        for r in 0..400 {
            let rec = sim.step_round().unwrap();
            if r >= 200 {
                delivered_late += rec.delivered;
            }
        }
        assert!(delivered_late >= 180, "late deliveries {delivered_late}");
        assert!(sim.ledger().trust(NodeId(2), NodeId(1)) < 0.05);
        sim.check_invariants().unwrap();
    }

    #[test]
    fn scenario_names_round_trip() {
        for k in ScenarioKind::ALL {
            assert_eq!(k.name().parse::<ScenarioKind>().unwrap(), k);
        }
        assert!("bogus".parse::<ScenarioKind>().is_err());
    }

    #[test]
    fn all_attackers_is_rejected() {
        let t = Topology::from_sensors(&chain(1, 0.9), &[NodeId(1)]).unwrap();
        assert!(Simulation::new(t, ScenarioKind::MixNoAttack, 0).is_err());
    }
}

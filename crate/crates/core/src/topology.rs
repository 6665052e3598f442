//! Disc deployments, the unit disc graph and hop distances to the sink.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::f64::consts::PI;
use std::fmt;
use std::io::Write;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{substream, SimRng, Substream};

/// Index of a vertex in a [`Topology`]. The sink is always [`SINK`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The sink sits at vertex 0; sensors are numbered 1..=n in generation order.
pub const SINK: NodeId = NodeId(0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub const ORIGIN: Point2D = Point2D { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point2D) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Sink,
    Honest,
    Attacker,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Sink => "sink",
            Role::Honest => "honest",
            Role::Attacker => "attacker",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Parameters of a random disc deployment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeploymentConfig {
    /// Deployment radius, in radio-range units.
    pub radius: f64,
    /// Sensors per unit area.
    pub density: f64,
    /// Percentage of sensors that are attackers, in `[0, 100]`.
    pub attacker_pct: f64,
    pub seed: u64,
    pub max_resample_attempts: u32,
}

impl Default for DeploymentConfig {
    fn default() -> Self {
        Self {
            radius: 8.0,
            density: 4.0,
            attacker_pct: 10.0,
            seed: 42,
            max_resample_attempts: 100,
        }
    }
}

impl DeploymentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "radius must be positive, got {}",
                self.radius
            )));
        }
        if !(self.density.is_finite() && self.density > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "density must be positive, got {}",
                self.density
            )));
        }
        if !(0.0..=100.0).contains(&self.attacker_pct) {
            return Err(Error::InvalidConfig(format!(
                "attacker percentage must lie in [0, 100], got {}",
                self.attacker_pct
            )));
        }
        if self.max_resample_attempts == 0 {
            return Err(Error::InvalidConfig(
                "max_resample_attempts must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Number of sensors, `round(pi * r^2 * d)`. The sink is not counted.
    pub fn sensor_count(&self) -> usize {
        (PI * self.radius * self.radius * self.density).round() as usize
    }

    /// Number of attackers among `sensors`, `round(p / 100 * n)`.
    pub fn attacker_count(&self, sensors: usize) -> usize {
        (self.attacker_pct / 100.0 * sensors as f64).round() as usize
    }
}

/// Scatters `config.sensor_count()` points uniformly over the disc of
/// radius `config.radius` centred on the origin.
///
/// Uses the polar transform with radius `r * sqrt(u)`, whose radial CDF is
/// proportional to enclosed area.
pub fn deploy(config: &DeploymentConfig, rng: &mut SimRng) -> Vec<Point2D> {
    let n = config.sensor_count();
    (0..n)
        .map(|_| {
            let rho = config.radius * rng.gen::<f64>().sqrt();
            let theta = 2.0 * PI * rng.gen::<f64>();
            Point2D::new(rho * theta.cos(), rho * theta.sin())
        })
        .collect()
}

/// Adjacency lists of the unit disc graph over the sink (vertex 0) followed
/// by `sensors` (vertex `i + 1`). Lists are sorted ascending by id.
///
/// Two vertices are adjacent iff their Euclidean distance is at most 1.
pub fn build_udg(sensors: &[Point2D], sink_position: Point2D) -> Vec<Vec<NodeId>> {
    let mut points = Vec::with_capacity(sensors.len() + 1);
    points.push(sink_position);
    points.extend_from_slice(sensors);

    // Unit cells: any neighbour lies in the same or an adjacent cell.
    let cell = |p: &Point2D| (p.x.floor() as i64, p.y.floor() as i64);
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, p) in points.iter().enumerate() {
        grid.entry(cell(p)).or_default().push(i);
    }

    let mut adjacency = vec![Vec::new(); points.len()];
    for (i, p) in points.iter().enumerate() {
        let (cx, cy) = cell(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                let Some(bucket) = grid.get(&(cx + dx, cy + dy)) else {
                    continue;
                };
                for &j in bucket {
                    if j != i && p.distance(&points[j]) <= 1.0 {
                        adjacency[i].push(NodeId(j as u32));
                    }
                }
            }
        }
        adjacency[i].sort_unstable();
    }
    adjacency
}

/// Breadth-first hop counts from `sink`. `None` marks vertices that cannot
/// reach the sink.
pub fn compute_hops(adjacency: &[Vec<NodeId>], sink: NodeId) -> Vec<Option<u32>> {
    let mut hop = vec![None; adjacency.len()];
    let mut queue = VecDeque::new();
    hop[sink.index()] = Some(0);
    queue.push_back(sink);
    while let Some(u) = queue.pop_front() {
        let next = hop[u.index()].unwrap() + 1;
        for &v in &adjacency[u.index()] {
            if hop[v.index()].is_none() {
                hop[v.index()] = Some(next);
                queue.push_back(v);
            }
        }
    }
    hop
}

/// A connected deployment with its unit disc graph and attacker set.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    positions: Vec<Point2D>,
    adjacency: Vec<Vec<NodeId>>,
    hop: Vec<u32>,
    attackers: BTreeSet<NodeId>,
    roles: Vec<Role>,
    attempts: u32,
}

impl Topology {
    /// Builds a topology from explicit sensor positions (the sink is placed
    /// at the origin). Returns `None` if some sensor cannot reach the sink.
    ///
    /// Attacker ids must be sensor ids (`1..=sensors.len()`).
    pub fn from_sensors(sensors: &[Point2D], attackers: &[NodeId]) -> Option<Self> {
        Self::assemble(sensors, attackers.iter().copied().collect(), 1)
    }

    fn assemble(sensors: &[Point2D], attackers: BTreeSet<NodeId>, attempts: u32) -> Option<Self> {
        let adjacency = build_udg(sensors, Point2D::ORIGIN);
        let hop = compute_hops(&adjacency, SINK)
            .into_iter()
            .collect::<Option<Vec<u32>>>()?;
        let mut positions = Vec::with_capacity(sensors.len() + 1);
        positions.push(Point2D::ORIGIN);
        positions.extend_from_slice(sensors);

        let mut roles = vec![Role::Honest; positions.len()];
        roles[SINK.index()] = Role::Sink;
        for a in &attackers {
            assert!(
                *a != SINK && a.index() < positions.len(),
                "attacker id {a} is not a sensor"
            );
            roles[a.index()] = Role::Attacker;
        }
        Some(Self {
            positions,
            adjacency,
            hop,
            attackers,
            roles,
            attempts,
        })
    }

    pub fn sink(&self) -> NodeId {
        SINK
    }

    /// Number of vertices including the sink.
    pub fn node_count(&self) -> usize {
        self.positions.len()
    }

    pub fn sensor_count(&self) -> usize {
        self.positions.len() - 1
    }

    /// All sensor ids in ascending order.
    pub fn sensors(&self) -> impl Iterator<Item = NodeId> + '_ {
        (1..self.positions.len() as u32).map(NodeId)
    }

    pub fn position(&self, id: NodeId) -> Point2D {
        self.positions[id.index()]
    }

    pub fn positions(&self) -> &[Point2D] {
        &self.positions
    }

    pub fn neighbors(&self, id: NodeId) -> &[NodeId] {
        &self.adjacency[id.index()]
    }

    pub fn adjacency(&self) -> &[Vec<NodeId>] {
        &self.adjacency
    }

    pub fn hop(&self, id: NodeId) -> u32 {
        self.hop[id.index()]
    }

    pub fn hops(&self) -> &[u32] {
        &self.hop
    }

    pub fn max_hop(&self) -> u32 {
        self.hop.iter().copied().max().unwrap_or(0)
    }

    pub fn attackers(&self) -> &BTreeSet<NodeId> {
        &self.attackers
    }

    pub fn is_attacker(&self, id: NodeId) -> bool {
        self.roles[id.index()] == Role::Attacker
    }

    pub fn role(&self, id: NodeId) -> Role {
        self.roles[id.index()]
    }

    /// Sensors that are not attackers, ascending.
    pub fn honest_sensors(&self) -> Vec<NodeId> {
        self.sensors().filter(|&v| !self.is_attacker(v)).collect()
    }

    pub fn are_adjacent(&self, a: NodeId, b: NodeId) -> bool {
        self.adjacency[a.index()].binary_search(&b).is_ok()
    }

    /// How many deployments were drawn before a connected one appeared.
    pub fn attempts(&self) -> u32 {
        self.attempts
    }

    /// Writes `id,x,y,hop,role`, one row per vertex.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["id", "x", "y", "hop", "role"])?;
        for (i, p) in self.positions.iter().enumerate() {
            w.write_record([
                i.to_string(),
                p.x.to_string(),
                p.y.to_string(),
                self.hop[i].to_string(),
                self.roles[i].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Draws deployments until one is connected, then picks attackers.
///
/// Positions come from the deployment substream of `config.seed` and
/// attackers from the attacker-placement substream, so the attacker set
/// for a given seed does not depend on how many resamples were needed.
pub fn generate_topology(config: &DeploymentConfig) -> Result<Topology> {
    config.validate()?;
    let mut deploy_rng = substream(config.seed, Substream::Deployment);
    for attempt in 1..=config.max_resample_attempts {
        let sensors = deploy(config, &mut deploy_rng);
        let mut placement_rng = substream(config.seed, Substream::AttackerPlacement);
        let count = config.attacker_count(sensors.len());
        let attackers = index::sample(&mut placement_rng, sensors.len(), count)
            .into_iter()
            .map(|i| NodeId(i as u32 + 1))
            .collect();
        if let Some(topology) = Topology::assemble(&sensors, attackers, attempt) {
            return Ok(topology);
        }
    }
    Err(Error::DeploymentFailed {
        attempts: config.max_resample_attempts,
        radius: config.radius,
        density: config.density,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(radius: f64, density: f64, pct: f64, seed: u64) -> DeploymentConfig {
        DeploymentConfig {
            radius,
            density,
            attacker_pct: pct,
            seed,
            max_resample_attempts: 100,
        }
    }

    #[test]
    fn paper_scale_sensor_count() {
        assert_eq!(config(8.0, 4.0, 10.0, 0).sensor_count(), 804);
        let c = config(8.0, 4.0, 10.0, 0);
        let pts = deploy(&c, &mut substream(1, Substream::Deployment));
        assert_eq!(pts.len(), 804);
        assert!(pts.iter().all(|p| p.x * p.x + p.y * p.y <= 64.0));
    }

    #[test]
    fn single_sensor_inside_unit_disc() {
        let c = config(1.0, 1.0 / PI, 0.0, 0);
        let pts = deploy(&c, &mut substream(9, Substream::Deployment));
        assert_eq!(pts.len(), 1);
        assert!(pts[0].distance(&Point2D::ORIGIN) <= 1.0);
    }

    #[test]
    fn deployment_is_area_uniform() {
        // radius chosen so that round(pi r^2 d) = 10000 with d = 1
        let c = config((10000.0 / PI).sqrt(), 1.0, 0.0, 0);
        let pts = deploy(&c, &mut substream(5, Substream::Deployment));
        assert_eq!(pts.len(), 10000);
        let inner = pts
            .iter()
            .filter(|p| p.distance(&Point2D::ORIGIN) <= c.radius / 2.0)
            .count();
        let frac = inner as f64 / pts.len() as f64;
        assert!((frac - 0.25).abs() <= 0.02, "inner fraction {frac}");
    }

    #[test]
    fn udg_edge_threshold_is_inclusive() {
        let adj = build_udg(&[Point2D::new(0.5, 0.0)], Point2D::ORIGIN);
        assert_eq!(adj[0], vec![NodeId(1)]);
        let adj = build_udg(&[Point2D::new(1.0, 0.0)], Point2D::ORIGIN);
        assert_eq!(adj[0], vec![NodeId(1)]);
        assert_eq!(adj[1], vec![NodeId(0)]);
        let adj = build_udg(&[Point2D::new(1.000001, 0.0)], Point2D::ORIGIN);
        assert!(adj[0].is_empty() && adj[1].is_empty());
    }

    #[test]
    fn hops_on_small_graphs() {
        let adj = build_udg(&[], Point2D::ORIGIN);
        assert_eq!(compute_hops(&adj, SINK), vec![Some(0)]);

        let adj = build_udg(
            &[Point2D::new(0.9, 0.0), Point2D::new(1.8, 0.0)],
            Point2D::ORIGIN,
        );
        assert_eq!(compute_hops(&adj, SINK), vec![Some(0), Some(1), Some(2)]);

        let adj = build_udg(
            &[Point2D::new(0.9, 0.0), Point2D::new(5.0, 0.0)],
            Point2D::ORIGIN,
        );
        assert_eq!(compute_hops(&adj, SINK), vec![Some(0), Some(1), None]);
    }

    #[test]
    fn attacker_counts() {
        let t = generate_topology(&config(8.0, 4.0, 10.0, 3)).unwrap();
        assert_eq!(t.sensor_count(), 804);
        assert_eq!(t.attackers().len(), 80);
        assert!(!t.is_attacker(SINK));
        assert_eq!(t.role(SINK), Role::Sink);

        let t = generate_topology(&config(8.0, 4.0, 0.0, 3)).unwrap();
        assert!(t.attackers().is_empty());
    }

    #[test]
    fn sparse_deployment_fails_after_max_attempts() {
        let mut c = config(8.0, 0.05, 0.0, 1);
        c.max_resample_attempts = 3;
        match generate_topology(&c) {
            Err(Error::DeploymentFailed { attempts: 3, .. }) => {}
            other => panic!("expected deployment failure, got {other:?}"),
        }
    }

    #[test]
    fn invalid_configs_rejected() {
        assert!(config(0.0, 4.0, 10.0, 0).validate().is_err());
        assert!(config(8.0, -1.0, 10.0, 0).validate().is_err());
        assert!(config(8.0, 4.0, 150.0, 0).validate().is_err());
        assert!(config(8.0, 4.0, -0.5, 0).validate().is_err());
    }

    #[test]
    fn topology_csv_rows() {
        let t = Topology::from_sensors(&[Point2D::new(0.5, 0.0)], &[NodeId(1)]).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "id,x,y,hop,role\n0,0,0,0,sink\n1,0.5,0,1,attacker\n");
    }
}

//! A discrete-round simulator for data-gathering wireless sensor networks.
//!
//! Sensors scattered over a disc route one message per round towards a
//! central sink with the MIX gradient rule: slide to the least-used lower
//! neighbour, or eject straight to the sink at a cost quadratic in the hop
//! distance. Sinkhole attackers advertise themselves as ideal relays and
//! drop everything they get. The trust-gated variant tracks per-link
//! delivery and capture evidence and skips each neighbour with probability
//! `1 - trust`.
//!
//! ```
//! use trustmix::{run, DeploymentConfig, RunConfig, ScenarioKind};
//!
//! let deployment = DeploymentConfig { radius: 4.0, density: 4.0, attacker_pct: 10.0, ..Default::default() };
//! let log = run(&RunConfig::new(deployment, ScenarioKind::TrustMixUnderAttack, 300)).unwrap();
//! let t = &log.totals;
//! assert_eq!(t.generated, t.delivered + t.captured + t.in_flight());
//! ```

pub mod adversary;
pub mod cli;
pub mod engine;
pub mod error;
pub mod metrics;
pub mod rng;
pub mod routing;
pub mod topology;
pub mod trust;

pub use engine::{run, run_on, simulate, RunConfig, ScenarioKind, Simulation};
pub use error::{Error, Result};
pub use metrics::MetricsLog;
pub use topology::{generate_topology, DeploymentConfig, NodeId, Point2D, Role, Topology};
pub use trust::{trust_value, LinkEvidence, TrustLedger};

// The book's snippets run as doctests of these modules.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/deployment.md")]
    mod deployment {}
    #[doc = include_str!("../../../book/src/mix.md")]
    mod mix {}
    #[doc = include_str!("../../../book/src/trust.md")]
    mod trust {}
    #[doc = include_str!("../../../book/src/attackers.md")]
    mod attackers {}
    #[doc = include_str!("../../../book/src/rounds.md")]
    mod rounds {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}

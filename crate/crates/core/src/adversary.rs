//! Sinkhole attackers.
//!
//! An attacker advertises a hop one below the smallest true hop in its
//! neighbourhood (never below 0) and zero consumed energy, so every honest
//! neighbour sees it as the lowest, freshest relay around. Whatever it
//! receives is discarded on the spot.

use crate::engine::{Fate, Message};
use crate::error::Result;
use crate::routing::NeighborView;
use crate::topology::{NodeId, Topology};
use crate::trust::TrustLedger;

/// The fixed lie an attacker tells for a whole run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackerProfile {
    pub node_id: NodeId,
    pub advertised_hop: u32,
    pub advertised_consumed_energy: f64,
}

impl AttackerProfile {
    pub fn view(&self) -> NeighborView {
        NeighborView {
            id: self.node_id,
            advertised_hop: self.advertised_hop,
            advertised_consumed_energy: self.advertised_consumed_energy,
        }
    }
}

/// The view attacker `attacker` advertises to every neighbour.
///
/// The minimum runs over all UDG neighbours, the sink included, so an
/// attacker next to the sink advertises hop 0.
pub fn fabricate_view(attacker: NodeId, topology: &Topology) -> NeighborView {
    debug_assert!(topology.is_attacker(attacker));
    let min_hop = topology
        .neighbors(attacker)
        .iter()
        .map(|&m| topology.hop(m))
        .min()
        .expect("connected topology: every sensor has a neighbour");
    NeighborView {
        id: attacker,
        advertised_hop: min_hop.saturating_sub(1),
        advertised_consumed_energy: 0.0,
    }
}

/// Profiles for every attacker of `topology`, ascending by id.
pub fn profiles(topology: &Topology) -> Vec<AttackerProfile> {
    topology
        .attackers()
        .iter()
        .map(|&a| {
            let v = fabricate_view(a, topology);
            AttackerProfile {
                node_id: a,
                advertised_hop: v.advertised_hop,
                advertised_consumed_energy: v.advertised_consumed_energy,
            }
        })
        .collect()
}

/// Swallows `message`, which was just slid to an attacker in `round`.
///
/// The message's path must already end with the link into the attacker;
/// every link on it is debited in `ledger`.
pub fn capture(message: &mut Message, round: u64, ledger: &mut TrustLedger) -> Result<()> {
    debug_assert_eq!(message.fate, Fate::InFlight);
    ledger.record_capture(&message.path)?;
    message.fate = Fate::Captured(round);
    Ok(())
}

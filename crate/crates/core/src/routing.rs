//! Next-hop selection: the MIX gradient rule and its trust-gated variant.
//!
//! Both rules are pure functions of the sender's own state, the views its
//! neighbours advertise, and the random draws handed in. The engine supplies
//! neighbours in ascending id order and never lists the sink among them;
//! reaching the sink always goes through [`RouteDecision::Eject`].

use rand::Rng;

use crate::topology::NodeId;

/// What a sender knows about itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeSelfState {
    pub id: NodeId,
    /// Hop distance to the sink, at least 1.
    pub hop: u32,
    /// Energy consumed so far.
    pub consumed_energy: f64,
}

/// What a neighbour claims about itself. Attackers lie.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborView {
    pub id: NodeId,
    pub advertised_hop: u32,
    pub advertised_consumed_energy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RouteDecision {
    /// Forward one hop to this neighbour.
    Slide(NodeId),
    /// Transmit straight to the sink.
    Eject,
}

/// Energy units spent by ejecting from `sender`: `hop^2`.
pub fn ejection_cost(sender: &NodeSelfState) -> f64 {
    let h = f64::from(sender.hop);
    h * h
}

/// The body of the MIX neighbour loop for a single neighbour `m`.
fn consider<'a, R: Rng + ?Sized>(
    sender: &NodeSelfState,
    m: &'a NeighborView,
    best: &mut Option<&'a NeighborView>,
    tie_rng: &mut R,
) {
    if m.advertised_hop >= sender.hop {
        return;
    }
    if m.advertised_consumed_energy >= sender.consumed_energy + ejection_cost(sender) {
        return;
    }
    match best {
        None => *best = Some(m),
        Some(current) => {
            let e = m.advertised_consumed_energy;
            let c = current.advertised_consumed_energy;
            if e < c || (e == c && tie_rng.gen_bool(0.5)) {
                *best = Some(m);
            }
        }
    }
}

fn decide(best: Option<&NeighborView>) -> RouteDecision {
    best.map_or(RouteDecision::Eject, |m| RouteDecision::Slide(m.id))
}

/// MIX next hop.
///
/// A neighbour qualifies when it advertises a strictly lower hop and
/// less consumed energy than `energy(self) + hop(self)^2`. Among qualifying
/// neighbours the lowest advertised energy wins; on an exact energy tie the
/// newcomer replaces the current candidate on a fair coin flip, one flip per
/// tie. No qualifying neighbour means eject.
pub fn mix_next_hop<R: Rng + ?Sized>(
    sender: &NodeSelfState,
    neighbors: &[NeighborView],
    tie_rng: &mut R,
) -> RouteDecision {
    let mut best = None;
    for m in neighbors {
        consider(sender, m, &mut best, tie_rng);
    }
    decide(best)
}

/// Trust-gated MIX next hop.
///
/// Before the MIX tests, every neighbour `m` is disqualified when a uniform
/// draw `x` in `[0, 1)` exceeds `trust_of(m)`. Exactly one gate draw is
/// taken per neighbour, whether or not the neighbour would pass the MIX
/// tests. With every trust at 1 no neighbour is ever gated out and the
/// result equals [`mix_next_hop`] for the same `tie_rng`.
pub fn trustmix_next_hop<F, G, R>(
    sender: &NodeSelfState,
    neighbors: &[NeighborView],
    mut trust_of: F,
    gate_rng: &mut G,
    tie_rng: &mut R,
) -> RouteDecision
where
    F: FnMut(NodeId) -> f64,
    G: Rng + ?Sized,
    R: Rng + ?Sized,
{
    let mut best = None;
    for m in neighbors {
        let x: f64 = gate_rng.gen();
        if x > trust_of(m.id) {
            continue;
        }
        consider(sender, m, &mut best, tie_rng);
    }
    decide(best)
}

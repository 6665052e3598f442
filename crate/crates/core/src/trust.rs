//! Per-link evidence counters and the trust value derived from them.
//!
//! For a directed link `m -> n` the ledger counts messages `m` sent to `n`
//! (`s`), how many of those later reached the sink (`r`) and how many were
//! captured by an attacker anywhere downstream (`c`). Trust is
//!
//! ```text
//! trust = (s + r - c + 1) / (s + r + c + 1)
//! ```
//!
//! which lies in `(0, 1]`: the numerator is at least 1 because `c <= s`, and
//! the denominator exceeds it by `2c`. A link with no evidence has trust 1.

use std::collections::HashMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::topology::NodeId;

/// A directed slide from `from` to `to`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Link {
    pub from: NodeId,
    pub to: NodeId,
}

impl Link {
    pub fn new(from: NodeId, to: NodeId) -> Self {
        Self { from, to }
    }
}

/// Counters behind one directed link.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LinkEvidence {
    pub sent: u64,
    pub received: u64,
    pub captured: u64,
}

impl LinkEvidence {
    pub fn new(sent: u64, received: u64, captured: u64) -> Self {
        Self {
            sent,
            received,
            captured,
        }
    }

    /// `received + captured <= sent`.
    pub fn is_consistent(&self) -> bool {
        self.received + self.captured <= self.sent
    }
}

/// Belief, disbelief and uncertainty, summing to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Opinion {
    pub belief: f64,
    pub disbelief: f64,
    pub uncertainty: f64,
}

pub fn trust_value(e: &LinkEvidence) -> f64 {
    let s = e.sent as f64;
    let r = e.received as f64;
    let c = e.captured as f64;
    (s + r - c + 1.0) / (s + r + c + 1.0)
}

/// `(r/s, c/s, 1 - (r+c)/s)`; undefined before the first send.
pub fn opinion(e: &LinkEvidence) -> Result<Opinion> {
    if e.sent == 0 {
        return Err(Error::UndefinedOpinion);
    }
    let s = e.sent as f64;
    Ok(Opinion {
        belief: e.received as f64 / s,
        disbelief: e.captured as f64 / s,
        uncertainty: 1.0 - (e.received + e.captured) as f64 / s,
    })
}

/// Evidence for every directed link that has carried traffic.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrustLedger {
    evidence: HashMap<Link, LinkEvidence>,
}

#[derive(Clone, Copy)]
enum Fate {
    Received,
    Captured,
}

impl TrustLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Evidence on `from -> to`; all zeros if nothing was ever sent.
    pub fn evidence(&self, from: NodeId, to: NodeId) -> LinkEvidence {
        self.evidence
            .get(&Link::new(from, to))
            .copied()
            .unwrap_or_default()
    }

    pub fn trust(&self, from: NodeId, to: NodeId) -> f64 {
        trust_value(&self.evidence(from, to))
    }

    pub fn record_send(&mut self, from: NodeId, to: NodeId) {
        self.evidence.entry(Link::new(from, to)).or_default().sent += 1;
    }

    /// Credits every link of a delivered message's path.
    pub fn record_delivery(&mut self, path: &[Link]) -> Result<()> {
        self.record_fate(path, Fate::Received)
    }

    /// Debits every link of a captured message's path, including the final
    /// link into the attacker.
    pub fn record_capture(&mut self, path: &[Link]) -> Result<()> {
        self.record_fate(path, Fate::Captured)
    }

    fn record_fate(&mut self, path: &[Link], fate: Fate) -> Result<()> {
        // Check the whole path first so a failure leaves the ledger untouched.
        for link in path {
            let e = self.evidence(link.from, link.to);
            if e.received + e.captured + 1 > e.sent {
                let (received, captured) = match fate {
                    Fate::Received => (e.received + 1, e.captured),
                    Fate::Captured => (e.received, e.captured + 1),
                };
                return Err(Error::LedgerIntegrity {
                    sender: link.from.0,
                    neighbor: link.to.0,
                    sent: e.sent,
                    received,
                    captured,
                });
            }
        }
        for link in path {
            let e = self.evidence.get_mut(link).expect("checked above");
            match fate {
                Fate::Received => e.received += 1,
                Fate::Captured => e.captured += 1,
            }
        }
        Ok(())
    }

    /// Links with evidence, in ascending `(from, to)` order.
    pub fn links(&self) -> Vec<(Link, LinkEvidence)> {
        let mut out: Vec<_> = self.evidence.iter().map(|(l, e)| (*l, *e)).collect();
        out.sort_unstable_by_key(|(l, _)| *l);
        out
    }

    /// Sums of `(s, r, c)` over every link.
    pub fn totals(&self) -> LinkEvidence {
        self.evidence
            .values()
            .fold(LinkEvidence::default(), |acc, e| LinkEvidence {
                sent: acc.sent + e.sent,
                received: acc.received + e.received,
                captured: acc.captured + e.captured,
            })
    }

    /// Writes `sender,neighbor,s,r,c,trust`, one row per link.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["sender", "neighbor", "s", "r", "c", "trust"])?;
        for (link, e) in self.links() {
            w.write_record([
                link.from.to_string(),
                link.to.to_string(),
                e.sent.to_string(),
                e.received.to_string(),
                e.captured.to_string(),
                trust_value(&e).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

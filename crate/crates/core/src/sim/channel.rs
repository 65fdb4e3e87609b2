use rand::Rng;

use super::{invalid, Point, RngStream, SimError, SpatialGrid};

/// One broadcast as seen at the end of its slot.
#[derive(Clone, Debug, PartialEq)]
pub struct Delivery<M> {
    pub slot: u64,
    pub sender: usize,
    pub msg: M,
    pub receivers: Vec<usize>,
}

/// Shared slotted broadcast medium with independent Bernoulli loss per receiver.
///
/// Messages queued during a slot are delivered together when the slot closes,
/// ordered by sender id (ties keep queueing order). Positions are frozen for
/// the slot, so the receiver set is the sender's unit-disk neighbourhood at
/// delivery time.
#[derive(Debug)]
pub struct SlottedChannel<M> {
    loss_prob: f64,
    rng: RngStream,
    outbox: Vec<(usize, M)>,
    sent: u64,
    scratch: Vec<usize>,
}

impl<M> SlottedChannel<M> {
    pub fn new(loss_prob: f64, rng: RngStream) -> Result<Self, SimError> {
        if !(0.0..1.0).contains(&loss_prob) {
            return Err(invalid("loss_prob", loss_prob, "must lie in [0, 1)"));
        }
        Ok(Self {
            loss_prob,
            rng,
            outbox: Vec::new(),
            sent: 0,
            scratch: Vec::new(),
        })
    }

    pub fn loss_prob(&self) -> f64 {
        self.loss_prob
    }

    pub fn broadcast(&mut self, sender: usize, msg: M) {
        self.outbox.push((sender, msg));
        self.sent += 1;
    }

    /// Total broadcasts ever queued.
    pub fn sent(&self) -> u64 {
        self.sent
    }

    pub fn pending(&self) -> usize {
        self.outbox.len()
    }

    /// Closes the slot and resolves every queued broadcast.
    pub fn end_slot(&mut self, slot: u64, positions: &[Point], grid: &SpatialGrid) -> Vec<Delivery<M>> {
        let mut outbox = std::mem::take(&mut self.outbox);
        outbox.sort_by_key(|&(sender, _)| sender);
        let mut out = Vec::with_capacity(outbox.len());
        for (sender, msg) in outbox {
            self.scratch.clear();
            grid.neighbors_into(positions, sender, &mut self.scratch);
            let receivers = if self.loss_prob > 0.0 {
                let mut kept = Vec::with_capacity(self.scratch.len());
                for &r in &self.scratch {
                    if self.rng.random::<f64>() >= self.loss_prob {
                        kept.push(r);
                    }
                }
                kept
            } else {
                self.scratch.clone()
            };
            out.push(Delivery {
                slot,
                sender,
                msg,
                receivers,
            });
        }
        out
    }
}

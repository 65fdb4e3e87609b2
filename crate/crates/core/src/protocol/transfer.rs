use std::collections::HashSet;

use super::{on_token_receive, NodeState, ProtocolConfig, Request, Token, TokenId};
use crate::protocol::Level;

/// Consecutive transactions in which a holder heard only level-0 replies.
/// Travels with the token.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TerminationWatch {
    pub quiet_windows: u32,
}

impl TerminationWatch {
    /// Folds in the requests of one transaction. A transaction without replies says
    /// nothing about the neighborhood and leaves the watch unchanged.
    pub fn observe(&mut self, requests: &[Request]) {
        if requests.is_empty() {
            return;
        }
        if requests.iter().all(|r| r.level == Some(Level::Zero)) {
            self.quiet_windows += 1;
        } else {
            self.quiet_windows = 0;
        }
    }

    pub fn quiet_slots(&self, window_slots: u32) -> u64 {
        u64::from(self.quiet_windows) * u64::from(window_slots)
    }
}

/// True once the holder has heard nothing but level-0 replies for the full window.
pub fn termination_check(watch: &TerminationWatch, cfg: &ProtocolConfig) -> bool {
    watch.quiet_windows > 0 && watch.quiet_slots(cfg.window_slots()) >= cfg.termination_window_slots()
}

/// A transfer awaiting its acknowledgement.
#[derive(Clone, Debug, PartialEq)]
pub struct PendingTransfer {
    pub token: Token,
    pub watch: TerminationWatch,
    pub to: usize,
    pub last_sent: u64,
    pub retries: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransferAction {
    Wait,
    Resend,
    Checkpoint,
}

impl PendingTransfer {
    pub fn new(token: Token, watch: TerminationWatch, to: usize, now: u64) -> Self {
        Self {
            token,
            watch,
            to,
            last_sent: now,
            retries: 0,
        }
    }

    pub fn poll(&self, now: u64, cfg: &ProtocolConfig) -> TransferAction {
        if now.saturating_sub(self.last_sent) < cfg.ack_timeout_slots() {
            TransferAction::Wait
        } else if self.retries < cfg.max_retries {
            TransferAction::Resend
        } else {
            TransferAction::Checkpoint
        }
    }

    pub fn mark_resent(&mut self, now: u64) {
        self.retries += 1;
        self.last_sent = now;
    }

    /// Whether an ack for (`id`, `version`) confirms this transfer.
    pub fn acked_by(&self, id: TokenId, version: u64) -> bool {
        self.token.id == id && self.token.transfer_count == version
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Received {
    /// First copy; `merged` tells whether the node's datum was absorbed.
    Fresh { token: Token, merged: bool },
    Duplicate,
}

/// Transfers a node has already accepted, keyed by token id and sender-side transfer count.
#[derive(Clone, Debug, Default)]
pub struct TransferLog {
    seen: HashSet<(TokenId, u64)>,
}

impl TransferLog {
    pub fn receive(&mut self, state: &mut NodeState, mut token: Token, datum: f64) -> Received {
        if !self.seen.insert((token.id, token.transfer_count)) {
            return Received::Duplicate;
        }
        let merged = on_token_receive(state, &mut token, datum);
        Received::Fresh { token, merged }
    }
}

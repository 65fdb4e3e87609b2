//! Per-node Census state machine: the three walk variants, gradient setup and
//! refresh, reliable transfer with checkpoints, and termination detection.

mod level;
mod message;
mod state;
mod token;
mod transfer;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use level::Level;
pub use message::{Gradient, GradientInstance, Message, Request};
pub use state::{
    gradient_initiate, gradient_receive, on_announce, on_token_receive, refresh_timer_duration, reported_level, request_level,
    select_recipient, suppress_on_overhear, tick_refresh, GradientView, InstanceMemory, LevelTrace, NodeState, ScheduledRequest,
};
pub use token::{checkpoint_token, CheckpointRecord, Token, TokenId, TokenIdAllocator};
pub use transfer::{termination_check, PendingTransfer, Received, TerminationWatch, TransferAction, TransferLog};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("refresh timer is only defined for levels strictly between 0 and 1, got {0}")]
    RefreshLevel(Level),
    #[error("node state violates `{0}`")]
    Invariant(&'static str),
    #[error("invalid protocol parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: &'static str },
    #[error("unknown variant `{0}`")]
    UnknownVariant(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    Pure,
    LocalBias,
    GradientBias,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Pure, Variant::LocalBias, Variant::GradientBias];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Pure => "pure",
            Variant::LocalBias => "local",
            Variant::GradientBias => "gradient",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pure" => Ok(Variant::Pure),
            "local" | "local_bias" => Ok(Variant::LocalBias),
            "gradient" | "gradient_bias" | "census" => Ok(Variant::GradientBias),
            other => Err(ProtocolError::UnknownVariant(other.to_string())),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolConfig {
    /// Request slots per transaction; a window is this plus announce and transfer slots.
    pub request_slots: u32,
    /// Refresh duration, in transactions, of a level-1 timer.
    pub refresh_constant: f64,
    pub reliable_transfer: bool,
    pub ack_timeout_windows: u32,
    pub max_retries: u32,
    /// Termination window as a multiple of the longest refresh duration.
    pub termination_safety: u32,
    /// Deepest level a gradient may be relayed at, as a number of halvings.
    pub gradient_max_depth: Option<u32>,
    /// Gradient-bias replies carry the highest level held over this many most
    /// recent windows; 0 sends the level at the moment of sending.
    pub reply_lookback_windows: u32,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            request_slots: 3,
            refresh_constant: 8.0,
            reliable_transfer: false,
            ack_timeout_windows: 1,
            max_retries: 3,
            termination_safety: 2,
            gradient_max_depth: None,
            reply_lookback_windows: 4,
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        let bad = |name, reason| Err(ProtocolError::InvalidParameter { name, reason });
        if self.request_slots == 0 {
            return bad("request_slots", "must be at least 1");
        }
        if !(self.refresh_constant > 0.0 && self.refresh_constant.is_finite()) {
            return bad("refresh_constant", "must be positive and finite");
        }
        if self.ack_timeout_windows == 0 {
            return bad("ack_timeout_windows", "must be at least 1");
        }
        if self.termination_safety == 0 {
            return bad("termination_safety", "must be at least 1");
        }
        if self.gradient_max_depth == Some(0) {
            return bad("gradient_max_depth", "must be at least 1");
        }
        Ok(())
    }

    pub fn window_slots(&self) -> u32 {
        self.request_slots + 2
    }

    /// Longest refresh timer, armed at level 1/2.
    pub fn max_refresh_slots(&self) -> u32 {
        refresh_timer_duration(Level::Fraction(1), self).unwrap_or(1)
    }

    pub fn termination_window_slots(&self) -> u64 {
        u64::from(self.termination_safety) * u64::from(self.max_refresh_slots())
    }

    /// How long overheard level-0 traffic counts as evidence of a visited neighbor.
    pub fn evidence_horizon_slots(&self) -> u64 {
        (self.refresh_constant * f64::from(self.window_slots())).round().max(1.0) as u64
    }

    pub fn ack_timeout_slots(&self) -> u64 {
        u64::from(self.ack_timeout_windows) * u64::from(self.window_slots())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_timing() {
        let cfg = ProtocolConfig::default();
        assert_eq!(cfg.window_slots(), 5);
        assert_eq!(cfg.max_refresh_slots(), 20);
        assert_eq!(cfg.termination_window_slots(), 40);
        assert_eq!(cfg.evidence_horizon_slots(), 40);
    }

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert!("census2".parse::<Variant>().is_err());
    }
}

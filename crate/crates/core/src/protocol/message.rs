use super::{Level, TerminationWatch, Token, TokenId};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Request {
    pub from: usize,
    /// `None` for the pure walk. Local bias sends `One` when unvisited, `Zero` otherwise.
    pub level: Option<Level>,
}

/// Identifies one gradient wave: its initiator and that initiator's sequence number.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GradientInstance {
    pub origin: usize,
    pub seq: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Gradient {
    pub level: Level,
    pub from: usize,
    pub instance: GradientInstance,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Message {
    Announce { holder: usize },
    Request(Request),
    Transfer {
        token: Box<Token>,
        watch: TerminationWatch,
        to: usize,
    },
    Ack { token_id: TokenId, version: u64, from: usize },
    Gradient(Gradient),
}

impl Message {
    /// Level attached to the message, when the sender advertises one.
    pub fn advertised_level(&self) -> Option<Level> {
        match self {
            Message::Request(r) => r.level,
            Message::Gradient(g) => Some(g.level),
            Message::Transfer { .. } | Message::Ack { .. } => Some(Level::Zero),
            Message::Announce { .. } => Some(Level::Zero),
        }
    }
}

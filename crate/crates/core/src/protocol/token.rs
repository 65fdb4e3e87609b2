use std::fmt;

use crate::aggregation::Aggregate;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TokenId(pub u64);

impl fmt::Display for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{}", self.0)
    }
}

/// Hands out trial-unique token ids, including ids for checkpointed tokens.
#[derive(Debug, Default)]
pub struct TokenIdAllocator {
    next: u64,
}

impl TokenIdAllocator {
    pub fn fresh(&mut self) -> TokenId {
        let id = TokenId(self.next);
        self.next += 1;
        id
    }

    pub fn issued(&self) -> u64 {
        self.next
    }
}

/// Aggregate of a token frozen when its transfer could not be confirmed.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckpointRecord {
    pub old_token_id: TokenId,
    pub frozen_aggregate: Aggregate,
    /// Transfer count of the frozen copy; a later copy of the same id supersedes it.
    pub version: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub id: TokenId,
    pub aggregate: Aggregate,
    pub checkpoints: Vec<CheckpointRecord>,
    pub transfer_count: u64,
    pub origin_node: usize,
}

impl Token {
    pub fn new(id: TokenId, aggregate: Aggregate, origin_node: usize) -> Self {
        Self {
            id,
            aggregate,
            checkpoints: Vec::new(),
            transfer_count: 0,
            origin_node,
        }
    }
}

/// Freezes `token` into a checkpoint record carried by a fresh, empty token.
pub fn checkpoint_token(token: &Token, fresh_id: TokenId) -> Token {
    let mut checkpoints = token.checkpoints.clone();
    checkpoints.push(CheckpointRecord {
        old_token_id: token.id,
        frozen_aggregate: token.aggregate.clone(),
        version: token.transfer_count,
    });
    Token {
        id: fresh_id,
        aggregate: token.aggregate.empty_like(),
        checkpoints,
        transfer_count: 0,
        origin_node: token.origin_node,
    }
}

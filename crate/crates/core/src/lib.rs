//! Census: biased random-walk token circulation for counting and aggregating
//! over mobile ad hoc networks, with the simulator that drives it.

// Negated float comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aggregation;
pub mod analysis;
pub mod metrics;
pub mod protocol;
pub mod sim;
pub mod trial;

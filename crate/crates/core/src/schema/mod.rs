//! The evolving relational schema: a partition of attributes into physical
//! tables, plus the constraint pool that decides which joins are allowed.

mod constraints;
mod state;

pub use constraints::{ClassId, ConstraintError, ConstraintErrorKind, ConstraintPool, PoolSummary};
pub use state::{
    init_state, joinable, parse_partition, valid_actions, JoinAction, PhysicalTable, Row, SchemaError, SchemaState,
    TableId,
};

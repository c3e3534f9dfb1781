use std::iter::Sum;

use serde::{Deserialize, Serialize};

use crate::schema::{PhysicalTable, SchemaState};

pub const TABLE_HEADER_BYTES: u64 = 64;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StorageBytes(pub u64);

impl Sum for StorageBytes {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        StorageBytes(iter.map(|b| b.0).sum())
    }
}

/// `64 + rows * (sum of column widths + ceil(columns / 8))`.
///
/// Numeric columns are 8 bytes wide; text and key columns take the longest
/// value observed in that column.
pub fn table_storage(table: &PhysicalTable) -> StorageBytes {
    let columns = (table.key_cols.len() + table.attrs.len()) as u64;
    let mut widths = vec![0u64; columns as usize];
    let nk = table.key_cols.len();
    for row in &table.rows {
        for (i, k) in row.keys.iter().enumerate() {
            if let Some(k) = k {
                widths[i] = widths[i].max(k.len() as u64);
            }
        }
        for (i, v) in row.vals.iter().enumerate() {
            if let Some(v) = v {
                widths[nk + i] = widths[nk + i].max(v.byte_width());
            }
        }
    }
    let row_width: u64 = widths.iter().sum::<u64>() + columns.div_ceil(8);
    StorageBytes(TABLE_HEADER_BYTES + table.rows.len() as u64 * row_width)
}

pub fn storage(state: &SchemaState) -> StorageBytes {
    state.tables().iter().map(|t| table_storage(t)).sum()
}

//! SQL DDL for a schema state: one `CREATE TABLE` per physical table.

use std::collections::BTreeSet;

use crate::catalog::Catalog;
use crate::schema::{PhysicalTable, SchemaState};

/// Lowercase identifier made of `[a-z0-9_]`, never empty and never starting
/// with a digit.
pub fn sanitize_ident(name: &str) -> String {
    let mut out: String =
        name.chars().map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' }).collect();
    if out.is_empty() || out.starts_with(|c: char| c.is_ascii_digit()) {
        out.insert(0, '_');
    }
    out
}

pub fn create_table(catalog: &Catalog, table: &PhysicalTable) -> String {
    let mut cols = Vec::with_capacity(table.key_cols.len() + table.attrs.len());
    let mut used = BTreeSet::new();
    for &f in &table.key_cols {
        let mut name = format!("key_{}", sanitize_ident(catalog.family_name(f)));
        if !used.insert(name.clone()) {
            // distinct labels that sanitize alike
            name = format!("{name}_{}", f.0);
            used.insert(name.clone());
        }
        cols.push(format!("  {name} TEXT"));
    }
    for &a in &table.attrs {
        let e = catalog.entry(a);
        cols.push(format!("  a{}_{} {}", a.0, sanitize_ident(&e.name), e.value_kind.sql_type()));
    }
    format!("CREATE TABLE {} (\n{}\n);\n", table.id, cols.join(",\n"))
}

/// Statements for every table of `state`, in table-id order.
pub fn export(catalog: &Catalog, state: &SchemaState) -> String {
    let mut out = String::new();
    for (i, t) in state.tables().iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&create_table(catalog, t));
    }
    out
}

mod common;

use mmschema_core::shred::{dump_csv, reconstruct};
use mmschema_core::{AttrId, Dataset, IngestError, Model, Value, ValueKind};

const PEOPLE: &str = r#"[
  {"id": "p1", "name": "Ann", "age": 31, "addr": {"city": "Lyon", "zip": null}, "tags": ["a", "b"]},
  {"id": "p2", "name": "Bo", "tags": []},
  {"id": 3, "age": 40.5}
]"#;

const WORKS: &str = r#"<http://ex.org/w/1> <http://ex.org/v/title> "Dune" .
<http://ex.org/w/1> <http://ex.org/v/year> "1965"^^<http://www.w3.org/2001/XMLSchema#integer> .
<http://ex.org/w/1> <http://ex.org/v/title> "Dune" .
<http://ex.org/w/2> <http://other.org/title> "Emma"@en .
# comment

<http://ex.org/w/2> <http://ex.org/v/year> "1815" .
"#;

const CODES: &str = "code,label,score\nc1,x,1.5\nc2,,2\n";

fn mixed() -> (tempfile::TempDir, Dataset) {
    let dir = tempfile::tempdir().unwrap();
    let fx = common::write_sources(
        dir.path(),
        &[("people.json", PEOPLE), ("works.nt", WORKS), ("codes.csv", CODES)],
        &[("people.json", "JSON", "person"), ("works.nt", "RDF", "work"), ("codes.csv", "RELATIONAL", "code")],
        "",
        "",
    );
    let ds = Dataset::load(&fx.manifest).unwrap();
    (dir, ds)
}

#[test]
fn catalog_numbering_and_fact_counts() {
    let (_d, ds) = mixed();
    // JSON: 6 + 2 + 2 facts, RDF: 5 lines, CSV: 3 non-empty cells
    assert_eq!(ds.fact_count, 18);
    let got: Vec<(&str, Model, &str, ValueKind)> = ds
        .catalog
        .entries()
        .iter()
        .map(|e| (e.name.as_str(), e.source_model, e.entity_label.as_str(), e.value_kind))
        .collect();
    assert_eq!(
        got,
        vec![
            ("id", Model::Json, "person", ValueKind::Text),
            ("name", Model::Json, "person", ValueKind::Text),
            ("age", Model::Json, "person", ValueKind::Float),
            ("addr.city", Model::Json, "person", ValueKind::Text),
            ("tags", Model::Json, "person", ValueKind::Text),
            ("title", Model::Rdf, "work", ValueKind::Text),
            ("year", Model::Rdf, "work", ValueKind::Integer),
            ("title_2", Model::Rdf, "work", ValueKind::Text),
            ("label", Model::Relational, "code", ValueKind::Text),
            ("score", Model::Relational, "code", ValueKind::Float),
        ]
    );
    assert_eq!(ds.catalog.family_count(), 3);
}

#[test]
fn shredding_dedups_and_round_trips() {
    let (_d, ds) = mixed();
    let rows: Vec<usize> = ds.tables.iter().map(|t| t.rows.len()).collect();
    assert_eq!(rows, vec![3, 2, 2, 1, 2, 1, 2, 1, 1, 2]);
    let facts = reconstruct(&ds.tables);
    assert_eq!(facts.len(), 17);
    assert!(facts.windows(2).all(|w| w[0] < w[1]));
    let year = ds.tables[6].rows.iter().map(|(_, v)| v.clone()).collect::<Vec<_>>();
    assert_eq!(year, vec![Value::Int(1965), Value::Int(1815)]);
    assert_eq!(ds.tables[6].rows[0].0, "http://ex.org/w/1");
}

#[test]
fn dumped_tables_are_key_value_csvs() {
    let (d, ds) = mixed();
    let out = d.path().join("dump");
    let files = dump_csv(&ds.catalog, &ds.tables, &out).unwrap();
    assert_eq!(files.len(), 10);
    assert!(files[3].ends_with("t3_addr_city.csv"));
    let text = std::fs::read_to_string(&files[4]).unwrap();
    assert_eq!(text, "key,value\np1,a\np1,b\n");
}

#[test]
fn source_errors_carry_locations() {
    let dir = tempfile::tempdir().unwrap();
    let fx = common::write_sources(
        dir.path(),
        &[("bad.nt", "<a> <b> \"c\" .\n<a> <b> oops .\n")],
        &[("bad.nt", "RDF", "x")],
        "",
        "",
    );
    match Dataset::load(&fx.manifest).unwrap_err() {
        mmschema_core::Error::Ingest(IngestError::Parse { line, .. }) => assert_eq!(line, 2),
        e => panic!("unexpected {e}"),
    }
    let fx =
        common::write_sources(dir.path(), &[("bad.csv", "k,a\n1,2\n3\n")], &[("bad.csv", "RELATIONAL", "x")], "", "");
    match Dataset::load(&fx.manifest).unwrap_err() {
        mmschema_core::Error::Ingest(IngestError::Parse { line, message, .. }) => {
            assert_eq!(line, 3);
            assert!(message.contains("ragged"), "{message}");
        }
        e => panic!("unexpected {e}"),
    }
    let fx =
        common::write_sources(dir.path(), &[("bad.json", r#"[{"name": "x"}]"#)], &[("bad.json", "JSON", "x")], "", "");
    let e = Dataset::load(&fx.manifest).unwrap_err().to_string();
    assert!(e.contains("missing a scalar key field `id`"), "{e}");
}

#[test]
fn demo_fixture_shape() {
    let l = common::demo();
    assert_eq!(l.dataset.catalog.len(), 12);
    assert_eq!(l.dataset.catalog.family_count(), 3);
    let name = |i: u32| l.dataset.catalog.entry(AttrId(i)).name.clone();
    assert_eq!((name(3), name(4), name(8), name(9)), ("addr.city".into(), "wrote".into(), "wid".into(), "name".into()));
    assert!(l.dataset.fact_count > 4000 && l.dataset.fact_count < 6000, "{}", l.dataset.fact_count);
    assert_eq!(l.env.workload().queries.len(), 6);
    assert_eq!(l.env.pool().classes().len(), 2);
}

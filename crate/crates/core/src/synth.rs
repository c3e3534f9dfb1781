//! Deterministic synthetic fixtures written as on-disk source files.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

/// Paths of a written fixture.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fixture {
    pub manifest: PathBuf,
    pub constraints: PathBuf,
    pub workload: PathBuf,
}

fn write_fixture(
    dir: &Path,
    manifest: serde_json::Value,
    constraints: &str,
    workload: serde_json::Value,
) -> io::Result<Fixture> {
    let fx = Fixture {
        manifest: dir.join("manifest.json"),
        constraints: dir.join("constraints.txt"),
        workload: dir.join("workload.json"),
    };
    fs::write(&fx.manifest, serde_json::to_string_pretty(&manifest)?)?;
    fs::write(&fx.constraints, constraints)?;
    fs::write(&fx.workload, serde_json::to_string_pretty(&workload)?)?;
    Ok(fx)
}

const CITIES: [&str; 6] = ["Lyon", "Oslo", "Kyoto", "Lima", "Perth", "Quebec"];
const WORDS: [&str; 10] =
    ["graph", "stream", "index", "query", "storage", "schema", "learned", "model", "join", "cache"];

/// Three-model demo: people (JSON), papers (RDF) and venues (CSV).
///
/// Attribute ids: 0 `id`, 1 `name`, 2 `age`, 3 `addr.city`, 4 `wrote`,
/// 5 `title`, 6 `year`, 7 `venue`, 8 `wid`, 9 `name` (venue), 10 `city`,
/// 11 `rank`. Constraints link `wrote = wid` and `venue = name`.
pub fn write_demo(dir: &Path, seed: u64) -> io::Result<Fixture> {
    fs::create_dir_all(dir)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (people, papers, venues) = (400usize, 500usize, 30usize);

    let mut docs = Vec::with_capacity(people);
    for i in 0..people {
        let wrote: Vec<String> = (0..rng.gen_range(1..=3)).map(|_| format!("w{}", rng.gen_range(0..papers))).collect();
        let mut doc = json!({
            "id": format!("p{i}"),
            "name": format!("person{i}"),
            "age": rng.gen_range(20..70),
            "addr": { "city": CITIES[rng.gen_range(0..CITIES.len())] },
            "wrote": wrote,
        });
        // sparse fields after the first document keep attribute numbering fixed
        if i > 0 && rng.gen_bool(0.1) {
            doc["age"] = serde_json::Value::Null;
        }
        if i > 0 && rng.gen_bool(0.05) {
            doc.as_object_mut().unwrap().remove("addr");
        }
        docs.push(doc);
    }
    fs::write(dir.join("people.json"), serde_json::to_string_pretty(&docs)?)?;

    let mut nt = String::from("# papers\n");
    for j in 0..papers {
        let s = format!("<http://example.org/paper/{j}>");
        let title = format!("{} {} {}", WORDS[rng.gen_range(0..10)], WORDS[rng.gen_range(0..10)], j);
        let _ = writeln!(nt, "{s} <http://example.org/v/title> \"{title}\" .");
        let year = rng.gen_range(2000..2024);
        let _ =
            writeln!(nt, "{s} <http://example.org/v/year> \"{year}\"^^<http://www.w3.org/2001/XMLSchema#integer> .");
        let _ = writeln!(nt, "{s} <http://example.org/v/venue> \"venue{}\" .", rng.gen_range(0..venues));
        let _ = writeln!(nt, "{s} <http://example.org/v/wid> \"w{j}\" .");
        if rng.gen_bool(0.05) {
            let _ = writeln!(nt, "{s} <http://example.org/v/title> \"{title}\" .");
        }
    }
    fs::write(dir.join("papers.nt"), nt)?;

    let mut csv = String::from("code,name,city,rank\n");
    for v in 0..venues {
        let _ = writeln!(csv, "V{v},venue{v},{},{}", CITIES[rng.gen_range(0..CITIES.len())], rng.gen_range(1..=5));
    }
    fs::write(dir.join("venues.csv"), csv)?;

    let manifest = json!({ "sources": [
        { "path": "people.json", "model": "JSON", "entity_label": "person", "key_field": "id" },
        { "path": "papers.nt", "model": "RDF", "entity_label": "paper" },
        { "path": "venues.csv", "model": "RELATIONAL", "entity_label": "venue" },
    ]});
    let constraints = "# person.wrote = paper.wid\n4 = 8\n# paper.venue = venue.name\n7 = 9\n";
    let workload = json!({ "queries": [
        { "name": "people_in_lyon", "project": [1], "where": [[3, "=", "Lyon"]], "weight": 3 },
        { "name": "author_titles", "project": [1, 5], "weight": 2 },
        { "name": "recent_papers", "project": [5, 6], "where": [[6, ">=", 2015]], "weight": 2 },
        { "name": "paper_rank", "project": [5, 11], "weight": 1 },
        { "name": "age_by_city", "project": [2, 3], "weight": 1 },
        { "name": "author_venue_city", "project": [1, 10], "where": [[11, ">=", 4]], "weight": 1 },
    ]});
    write_fixture(dir, manifest, constraints, workload)
}

/// Smallest cross-model instance: 0 `id` and 1 `title` from JSON, 2 `title`
/// and 3 `year` from RDF, with `1 = 2` declared.
pub fn write_canonical(dir: &Path) -> io::Result<Fixture> {
    fs::create_dir_all(dir)?;
    let docs: Vec<_> = (0..12).map(|i| json!({ "id": format!("b{i}"), "title": format!("t{}", i % 8) })).collect();
    fs::write(dir.join("books.json"), serde_json::to_string_pretty(&docs)?)?;
    let mut nt = String::new();
    for j in 0..10 {
        let _ = writeln!(nt, "<http://example.org/work/{j}> <http://example.org/v/title> \"t{}\" .", j % 10);
        let _ = writeln!(nt, "<http://example.org/work/{j}> <http://example.org/v/year> \"{}\" .", 1990 + j * 3);
    }
    fs::write(dir.join("works.nt"), nt)?;
    let manifest = json!({ "sources": [
        { "path": "books.json", "model": "JSON", "entity_label": "book" },
        { "path": "works.nt", "model": "RDF", "entity_label": "work" },
    ]});
    let workload = json!({ "queries": [
        { "name": "book_years", "project": [0, 3], "weight": 3 },
        { "name": "late_titles", "project": [2], "where": [[3, ">", 2000]], "weight": 1 },
        { "name": "ids", "project": [0, 1], "weight": 2 },
    ]});
    write_fixture(dir, manifest, "1 = 2\n", workload)
}

/// Random instance with `attrs` attributes (4 to 6) over two key families,
/// a CSV family `a` and an RDF family `b`, one declared equivalence between
/// them and a workload dominated by cross-family queries.
pub fn write_small(dir: &Path, seed: u64, attrs: usize) -> io::Result<Fixture> {
    assert!((4..=6).contains(&attrs), "small instances have 4 to 6 attributes");
    fs::create_dir_all(dir)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let na = attrs / 2;
    let nb = attrs - na;
    let link_a = rng.gen_range(0..na);
    let link_b = rng.gen_range(0..nb);
    let domain = rng.gen_range(8..20);
    // per column: integer or text, presence probability
    let cols = |n: usize, link: usize, rng: &mut ChaCha8Rng| -> Vec<(bool, f64)> {
        (0..n)
            .map(|c| (c != link && rng.gen_bool(0.5), if c == link { 0.95 } else { rng.gen_range(0.6..1.0) }))
            .collect()
    };
    let a_cols = cols(na, link_a, &mut rng);
    let b_cols = cols(nb, link_b, &mut rng);
    let cell = |c: usize, link: usize, numeric: bool, rng: &mut ChaCha8Rng| -> String {
        if c == link {
            format!("k{}", rng.gen_range(0..domain))
        } else if numeric {
            rng.gen_range(0..100).to_string()
        } else {
            format!("v{}", rng.gen_range(0..6))
        }
    };

    let mut csv = String::from("key");
    for c in 0..na {
        let _ = write!(csv, ",a{c}");
    }
    csv.push('\n');
    for e in 0..rng.gen_range(20..50) {
        csv.push_str(&format!("a{e}"));
        for (c, &(numeric, p)) in a_cols.iter().enumerate() {
            let present = e == 0 || rng.gen_bool(p);
            let v = if present { cell(c, link_a, numeric, &mut rng) } else { String::new() };
            let _ = write!(csv, ",{v}");
        }
        csv.push('\n');
    }
    fs::write(dir.join("a.csv"), csv)?;

    let mut nt = String::new();
    for e in 0..rng.gen_range(20..50) {
        for (c, &(numeric, p)) in b_cols.iter().enumerate() {
            if e == 0 || rng.gen_bool(p) {
                let v = cell(c, link_b, numeric, &mut rng);
                let _ = writeln!(nt, "<http://example.org/b/{e}> <http://example.org/p/b{c}> \"{v}\" .");
            }
        }
    }
    fs::write(dir.join("b.nt"), nt)?;

    let manifest = json!({ "sources": [
        { "path": "a.csv", "model": "RELATIONAL", "entity_label": "a" },
        { "path": "b.nt", "model": "RDF", "entity_label": "b" },
    ]});
    let (la, lb) = (link_a, na + link_b);
    let a_ids: Vec<usize> = (0..na).collect();
    let b_ids: Vec<usize> = (na..attrs).collect();
    let mut queries = Vec::new();
    for qi in 0..rng.gen_range(3..=5) {
        let cross = qi < 2 || rng.gen_bool(0.6);
        let mut project: Vec<usize> = if cross {
            vec![*a_ids.choose(&mut rng).unwrap(), *b_ids.choose(&mut rng).unwrap()]
        } else {
            let side = if rng.gen_bool(0.5) { &a_ids } else { &b_ids };
            side.choose_multiple(&mut rng, 2.min(side.len())).copied().collect()
        };
        project.sort();
        project.dedup();
        let mut q = json!({ "name": format!("q{qi}"), "project": project, "weight": rng.gen_range(1..=3) });
        let numeric: Vec<usize> = (0..attrs).filter(|&i| if i < na { a_cols[i].0 } else { b_cols[i - na].0 }).collect();
        if let Some(&p) = numeric.choose(&mut rng) {
            if rng.gen_bool(0.4) {
                q["where"] = json!([[p, "<", rng.gen_range(20..80)]]);
            }
        }
        queries.push(q);
    }
    write_fixture(dir, manifest, &format!("{la} = {lb}\n"), json!({ "queries": queries }))
}

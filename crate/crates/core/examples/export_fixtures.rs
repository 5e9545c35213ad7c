//! Writes the built-in fixture hypergraphs as JSON files.
//!
//! `cargo run --example export_fixtures -- <dir>` (default `fixtures/`)

use std::path::PathBuf;

use hgx::fixtures;

fn main() -> hgx::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures".into()));
    std::fs::create_dir_all(&dir)?;
    let all = [
        ("t1", fixtures::t1()),
        ("tri", fixtures::triangle(-1.0)),
        ("two_edges", fixtures::two_disjoint_edges()),
        ("r5", fixtures::r5()),
    ];
    for (name, h) in all {
        let path = dir.join(format!("{name}.json"));
        std::fs::write(&path, h.to_json_pretty()? + "\n")?;
        println!("{}: {} vertices, {} hyperedges", path.display(), h.n_vertices(), h.n_edges());
    }
    Ok(())
}

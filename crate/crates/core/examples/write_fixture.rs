//! Writes a reference corpus as an interchange document.
//!
//! ```text
//! cargo run --example write_fixture -- kv /tmp/kv.json
//! tht --data-dir /tmp/store init
//! tht --data-dir /tmp/store import /tmp/kv.json
//! ```

use textual_history::fixtures;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "kv".to_owned());
    let out = args.next().unwrap_or_else(|| format!("{name}.json"));
    let commands = match name.as_str() {
        "kv" => fixtures::kv_all(),
        "kv-1.1.1" => fixtures::kv_1_1_1(),
        "kv-2.1.22" => fixtures::kv_2_1_22(),
        "stemma" => fixtures::kv_stemma(),
        "three-taxon" => fixtures::three_taxon(),
        other => return Err(format!("unknown fixture `{other}` (kv|kv-1.1.1|kv-2.1.22|stemma|three-taxon)").into()),
    };
    let doc = fixtures::document(&commands)?;
    std::fs::write(&out, doc.to_canonical_json())?;
    println!("wrote {out}");
    Ok(())
}

//! The event log rebuilds the corpus exactly, and export is canonical.

use textual_history::store::{self, InterchangeDocument};
use textual_history::{fixtures, Store, StoreConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let config = StoreConfig::default();

    let exported = {
        let mut store = Store::init(dir.path(), config)?;
        for command in fixtures::kv_all() {
            store.execute("fixture", command)?;
        }
        store.checkpoint()?;
        store.export().to_canonical_json()
    };

    let log = std::fs::read_to_string(dir.path().join(store::EVENTS_FILE))?;
    println!("{} events, first: {}", log.lines().count(), log.lines().next().unwrap_or_default());

    let reopened = Store::open(dir.path(), config)?;
    let replayed = reopened.export().to_canonical_json();
    println!("replay identical: {}", replayed == exported);

    let checkpoint = std::fs::read_to_string(dir.path().join(store::CORPUS_FILE))?;
    let doc = InterchangeDocument::from_json(&checkpoint)?;
    let mut fresh = Store::in_memory(config);
    fresh.import("restore", doc)?;
    println!("import round-trip identical: {}", fresh.export().to_canonical_json() == exported);
    Ok(())
}

//! UPGMA on the three-witness demo corpus and on a hand-made matrix.

use textual_history::phylogeny::{self, upgma, DistanceMatrix, DistanceMode, TreeRequest};
use textual_history::fixtures;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = fixtures::build(&fixtures::three_taxon())?;
    for distance in [DistanceMode::Raw, DistanceMode::Normalized] {
        let request = TreeRequest { distance, ..TreeRequest::default() };
        let result = phylogeny::build_tree(&corpus, "DEMO", &request)?;
        println!("{:<10} {}", distance.as_str(), result.newick);
        print!("{}", result.matrix.to_csv());
    }

    let taxa = ["w", "x", "y", "z"].map(String::from).to_vec();
    let m = DistanceMatrix::new(
        taxa,
        vec![
            vec![0.0, 2.0, 6.0, 6.0],
            vec![2.0, 0.0, 6.0, 6.0],
            vec![6.0, 6.0, 0.0, 4.0],
            vec![6.0, 6.0, 4.0, 0.0],
        ],
    )?;
    let tree = upgma(&m);
    println!("{}", tree.to_newick());
    for (leaf, depth) in tree.leaf_depths() {
        println!("  {leaf}: root distance {depth}");
    }
    Ok(())
}

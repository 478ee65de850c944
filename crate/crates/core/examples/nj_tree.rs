//! Neighbor joining recovers an additive tree from its path distances.

use textual_history::phylogeny::{neighbor_joining, DistanceMatrix};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Tree ((A:1,B:2):1,C:1,D:1) as path lengths.
    let taxa = ["A", "B", "C", "D"].map(String::from).to_vec();
    let m = DistanceMatrix::new(
        taxa,
        vec![
            vec![0.0, 3.0, 3.0, 3.0],
            vec![3.0, 0.0, 4.0, 4.0],
            vec![3.0, 4.0, 0.0, 2.0],
            vec![3.0, 4.0, 2.0, 0.0],
        ],
    )?;
    let tree = neighbor_joining(&m)?;
    println!("{}", tree.to_newick());

    // A matrix that violates the triangle inequality needs clamping.
    let m = DistanceMatrix::new(
        ["A", "B", "C"].map(String::from).to_vec(),
        vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 5.0], vec![1.0, 5.0, 0.0]],
    )?;
    let tree = neighbor_joining(&m)?;
    println!("{} clamped={}", tree.to_newick(), tree.clamped_negative());
    Ok(())
}

//! Splits a random graph into blocks, computes candidate sets for a few
//! targets and extracts an embedded copy of S_1 for each.

use walker_breaker::graph::sample_gnp;
use walker_breaker::structure::StructureSk;
use walker_breaker::techlemma::{compute_candidates, embedding_edges, extract_structure, partition_blocks};
use walker_breaker::{Result, Seed};

fn main() -> Result<()> {
    let (n, p) = (120, 0.5);
    let g = sample_gnp(n, p, Seed(5))?;
    let bf = partition_blocks(n, 1, 9, Seed(6))?;
    bf.check()?;
    println!("n = {n}: block size {}, {} residual vertices, start vertex {}", bf.block_size, bf.residual.len(), bf.a);
    let s = StructureSk::build(1)?;
    for x in (0..n).filter(|&x| bf.side_for_target(x).is_some()).take(5) {
        let t = bf.side_for_target(x).unwrap();
        let cf = compute_candidates(&g, &bf, x, t)?;
        let roots = cf.root_candidates(&bf);
        print!("target {x:>3} (side {t}): {} root candidates", roots.len());
        match roots.first() {
            Some(&v) => {
                let emb = extract_structure(&g, &bf, &cf, v)?;
                emb.validate(&s, &g)?;
                println!(", structure from {v} uses {} edges", embedding_edges(&g, &s, &emb).len());
            }
            None => println!(),
        }
    }
    Ok(())
}

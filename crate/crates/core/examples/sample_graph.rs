//! Draws G(n, p), reports degree statistics and connectivity, and checks
//! which small graphs contain H_n.

use walker_breaker::graph::{build_hn, contains_subgraph, degree_concentration_check, is_connected, sample_gnp};
use walker_breaker::{Graph, Result, Seed};

fn main() -> Result<()> {
    let (n, p) = (2000, 0.01);
    let g = sample_gnp(n, p, Seed(42))?;
    let degrees: Vec<usize> = (0..n).map(|v| g.degree(v)).collect();
    let mean = degrees.iter().sum::<usize>() as f64 / n as f64;
    println!("G({n}, {p}): {} edges, mean degree {mean:.2} (expected {:.2})", g.edge_count(), p * (n - 1) as f64);
    println!("min degree {}, max degree {}", degrees.iter().min().unwrap(), degrees.iter().max().unwrap());
    println!("connected: {}", is_connected(&g, None));
    println!("every degree within 50% of pn: {}", degree_concentration_check(&g, p, 0.5));

    let hn = build_hn(5)?;
    println!("H_5 edges: {:?}", hn.edges());
    for (name, host) in [("K_5", Graph::complete(5)), ("C_5", Graph::cycle(5)), ("G(5, 0.7)", sample_gnp(5, 0.7, Seed(1))?)] {
        println!("{name} contains H_5: {}", contains_subgraph(&host, &hn)?);
    }
    Ok(())
}

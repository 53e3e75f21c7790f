use walker_breaker::graph::{
    build_hn, contains_subgraph, degree_concentration_check, has_hamilton_cycle, is_connected, sample_gnp, Graph, Seed,
};

fn next_permutation(a: &mut [usize]) -> bool {
    let Some(i) = (1..a.len()).rev().find(|&i| a[i - 1] < a[i]) else { return false };
    let j = (i..a.len()).rev().find(|&j| a[j] > a[i - 1]).unwrap();
    a.swap(i - 1, j);
    a[i..].reverse();
    true
}

fn naive_hamiltonian(g: &Graph) -> bool {
    let n = g.vertex_count();
    if n < 3 {
        return false;
    }
    // fix vertex 0 first and permute the rest
    let mut rest: Vec<usize> = (1..n).collect();
    loop {
        let mut cycle = vec![0];
        cycle.extend(&rest);
        if (0..n).all(|i| g.has_edge(cycle[i], cycle[(i + 1) % n])) {
            return true;
        }
        if !next_permutation(&mut rest) {
            return false;
        }
    }
}

fn graph_from_mask(n: usize, mask: u64) -> Graph {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
    Graph::from_edges(n, pairs.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &e)| e)).unwrap()
}

#[test]
fn hamiltonicity_matches_permutations_exhaustively_up_to_six() {
    for n in 1..=6 {
        let pairs = n * (n - 1) / 2;
        for mask in 0..1u64 << pairs {
            let g = graph_from_mask(n, mask);
            assert_eq!(has_hamilton_cycle(&g).unwrap(), naive_hamiltonian(&g), "n={n} mask={mask:b}");
        }
    }
}

// Orderings starting at vertex 0, extended one vertex at a time and cut
// as soon as a consecutive pair is not adjacent.
fn pruned_hamiltonian(g: &Graph) -> bool {
    fn extend(g: &Graph, path: &mut Vec<usize>, used: &mut [bool]) -> bool {
        let n = g.vertex_count();
        let last = *path.last().unwrap();
        if path.len() == n {
            return g.has_edge(last, path[0]);
        }
        for v in 1..n {
            if !used[v] && g.has_edge(last, v) {
                used[v] = true;
                path.push(v);
                if extend(g, path, used) {
                    return true;
                }
                path.pop();
                used[v] = false;
            }
        }
        false
    }
    let n = g.vertex_count();
    if n < 3 {
        return false;
    }
    let mut used = vec![false; n];
    used[0] = true;
    extend(g, &mut vec![0], &mut used)
}

#[test]
fn hamiltonicity_matches_enumeration_on_all_seven_vertex_graphs() {
    let mut hamiltonian = 0;
    for mask in 0..1u64 << 21 {
        let g = graph_from_mask(7, mask);
        let h = has_hamilton_cycle(&g).unwrap();
        assert_eq!(h, pruned_hamiltonian(&g), "mask={mask:b}");
        hamiltonian += h as usize;
    }
    assert!(hamiltonian > 0);
    for s in 0..300 {
        let g = sample_gnp(7, 0.55, Seed(s)).unwrap();
        assert_eq!(naive_hamiltonian(&g), pruned_hamiltonian(&g));
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut y = x;
        while self.0[y] != r {
            let next = self.0[y];
            self.0[y] = r;
            y = next;
        }
        r
    }
}

#[test]
fn connectivity_matches_union_find() {
    let mut connected = 0;
    for i in 0..10_000u64 {
        let seed = Seed(5).split(i);
        let n = 1 + (seed.0 % 12) as usize;
        let p = (seed.0 >> 8) as f64 / (1u64 << 56) as f64;
        let g = sample_gnp(n, p.min(1.0), seed).unwrap();
        let mut uf = UnionFind((0..n).collect());
        let mut comps = n;
        for &(u, v) in g.edges() {
            let (a, b) = (uf.find(u), uf.find(v));
            if a != b {
                uf.0[a] = b;
                comps -= 1;
            }
        }
        assert_eq!(is_connected(&g, None), comps == 1, "n={n} edges={:?}", g.edges());
        connected += (comps == 1) as usize;
    }
    assert!(connected > 1000 && connected < 9000, "{connected}");
}

#[test]
fn degree_concentration_frequency() {
    let hits = (0..100).filter(|&s| degree_concentration_check(&sample_gnp(1000, 0.1, Seed(s)).unwrap(), 0.1, 0.5)).count();
    assert!(hits >= 99, "{hits}/100");
    assert!(!degree_concentration_check(&Graph::empty(10), 0.5, 0.1));
}

#[test]
fn sampled_graphs_are_well_formed() {
    for s in 0..50 {
        let g = sample_gnp(80, 0.07 * (s % 10) as f64 + 0.01, Seed(s)).unwrap();
        g.check_invariants().unwrap();
        assert_eq!(g, sample_gnp(80, 0.07 * (s % 10) as f64 + 0.01, Seed(s)).unwrap());
        assert_eq!(Graph::from_edge_list(&g.to_edge_list()).unwrap(), g);
    }
}

#[test]
fn gnp_edge_count_is_binomial() {
    let (n, p) = (200, 0.05);
    let pairs = (n * (n - 1) / 2) as f64;
    let mean: f64 = (0..200).map(|s| sample_gnp(n, p, Seed(s)).unwrap().edge_count() as f64).sum::<f64>() / 200.0;
    let sd_of_mean = (pairs * p * (1.0 - p) / 200.0).sqrt();
    assert!((mean - pairs * p).abs() < 5.0 * sd_of_mean, "mean {mean}");
}

#[test]
fn hn_shape() {
    for n in 4..=8 {
        let h = build_hn(n).unwrap();
        assert_eq!(h.edge_count(), 2 * (n - 2) + 1);
        assert_eq!((0..n).filter(|&v| h.degree(v) >= n - 2).count(), if n == 4 { 4 } else { 2 });
        assert!(contains_subgraph(&Graph::complete(n), &h).unwrap());
        assert!(!contains_subgraph(&Graph::cycle(n), &h).unwrap());
    }
}

#[test]
fn subgraph_matches_brute_force() {
    let patterns = [Graph::path(3), Graph::cycle(3), Graph::star(3), Graph::cycle(4), build_hn(4).unwrap()];
    for s in 0..150 {
        let host = sample_gnp(6, 0.5, Seed(s)).unwrap();
        for pat in &patterns {
            let mut found = false;
            let mut image: Vec<usize> = (0..6).collect();
            // every injective map as a prefix of a permutation
            loop {
                if pat.edges().iter().all(|&(u, v)| host.has_edge(image[u], image[v])) {
                    found = true;
                    break;
                }
                if !next_permutation(&mut image) {
                    break;
                }
            }
            assert_eq!(contains_subgraph(&host, pat).unwrap(), found, "seed {s}");
        }
    }
}

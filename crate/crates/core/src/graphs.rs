//! Communication topologies: Erdos-Renyi, k-cycle and 2-D grid generators,
//! plus per-iteration edge subsampling for time-varying runs.

use std::collections::{BTreeSet, VecDeque};

use rand::Rng;

use crate::error::{Error, Result};

/// Undirected simple graph over agents `0..n`. Edges are stored as ordered
/// pairs `(i, j)` with `i < j`, so adjacency is symmetric by construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl Graph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParam("graph needs at least one node".into()));
        }
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a == b {
                return Err(Error::InvalidParam(format!("self-loop at node {a}")));
            }
            if a >= n || b >= n {
                return Err(Error::InvalidParam(format!(
                    "edge ({a}, {b}) out of range for n = {n}"
                )));
            }
            set.insert((a.min(b), a.max(b)));
        }
        Ok(Self { n, edges: set })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&(i.min(j), i.max(j)))
    }

    pub fn degree(&self, i: usize) -> usize {
        self.edges
            .iter()
            .filter(|&&(a, b)| a == i || b == i)
            .count()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0usize; self.n];
        for &(a, b) in &self.edges {
            d[a] += 1;
            d[b] += 1;
        }
        d
    }

    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for &(a, b) in &self.edges {
            if a == i {
                out.push(b);
            } else if b == i {
                out.push(a);
            }
        }
        out.sort_unstable();
        out
    }

    /// Breadth-first reachability from node 0.
    pub fn is_connected(&self) -> bool {
        if self.n == 1 {
            return true;
        }
        let mut adj = vec![Vec::new(); self.n];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == self.n
    }

    /// Edge-list text: header line `<n> <edge_count>`, then one `i j` pair
    /// per line, 0-indexed.
    pub fn to_edge_list_text(&self) -> String {
        let mut s = format!("{} {}\n", self.n, self.edges.len());
        for &(a, b) in &self.edges {
            s.push_str(&format!("{a} {b}\n"));
        }
        s
    }

    pub fn from_edge_list_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "empty edge list".into(),
        })?;
        let mut it = header.split_whitespace();
        let parse = |tok: Option<&str>, line: usize| -> Result<usize> {
            tok.ok_or(Error::Parse {
                line,
                msg: "expected two integers".into(),
            })?
            .parse()
            .map_err(|e| Error::Parse {
                line,
                msg: format!("{e}"),
            })
        };
        let n = parse(it.next(), 1)?;
        let m = parse(it.next(), 1)?;
        let mut edges = Vec::with_capacity(m);
        for (idx, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let a = parse(it.next(), idx + 1)?;
            let b = parse(it.next(), idx + 1)?;
            edges.push((a, b));
        }
        if edges.len() != m {
            return Err(Error::Parse {
                line: text.lines().count(),
                msg: format!("header announced {m} edges, found {}", edges.len()),
            });
        }
        Self::new(n, edges)
    }
}

/// Erdos-Renyi G(n, p): every candidate pair included independently with
/// probability `p`, regenerated until connected or `max_retries` exhausted.
pub fn gen_erdos_renyi<R: Rng>(
    n: usize,
    p: f64,
    rng: &mut R,
    max_retries: usize,
) -> Result<Graph> {
    if n < 2 {
        return Err(Error::InvalidParam(format!("n = {n}, need n >= 2")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParam(format!("p = {p} outside [0, 1]")));
    }
    if max_retries == 0 {
        return Err(Error::InvalidParam("max_retries must be positive".into()));
    }
    for _ in 0..max_retries {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.random_bool(p) {
                    edges.push((i, j));
                }
            }
        }
        let g = Graph::new(n, edges)?;
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(Error::NotConnected {
        attempts: max_retries,
    })
}

/// k-cycle: node `i` adjacent to `i +- 1, ..., i +- k` (mod n). With
/// `2k >= n - 1` this saturates to the complete graph.
pub fn gen_k_cycle(n: usize, k: usize) -> Result<Graph> {
    if k < 1 || n < 3 {
        return Err(Error::InvalidParam(format!(
            "k-cycle needs n >= 3 and k >= 1 (got n = {n}, k = {k})"
        )));
    }
    let mut edges = Vec::new();
    for i in 0..n {
        for d in 1..=k {
            let j = (i + d) % n;
            if i != j {
                edges.push((i, j));
            }
        }
    }
    Graph::new(n, edges)
}

/// rows x cols lattice with horizontal and vertical neighbor edges.
pub fn gen_grid2d(rows: usize, cols: usize) -> Result<Graph> {
    if rows < 1 || cols < 1 || rows * cols < 2 {
        return Err(Error::InvalidParam(format!(
            "grid needs rows*cols >= 2 (got {rows}x{cols})"
        )));
    }
    let idx = |r: usize, c: usize| r * cols + c;
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if r + 1 < rows {
                edges.push((idx(r, c), idx(r + 1, c)));
            }
            if c + 1 < cols {
                edges.push((idx(r, c), idx(r, c + 1)));
            }
        }
    }
    Graph::new(rows * cols, edges)
}

/// Keeps a uniformly random subset of exactly
/// `round((1 - remove_fraction) * |E|)` edges of the ground graph. The
/// result may be disconnected; time-varying runs recompute weights per
/// iteration.
pub fn sample_time_varying<R: Rng>(ground: &Graph, remove_fraction: f64, rng: &mut R) -> Graph {
    let all: Vec<(usize, usize)> = ground.edges().collect();
    let m = all.len();
    let keep = ((1.0 - remove_fraction) * m as f64).round().max(0.0) as usize;
    let keep = keep.min(m);
    let picked = rand::seq::index::sample(rng, m, keep);
    let edges: Vec<(usize, usize)> = picked.iter().map(|i| all[i]).collect();
    Graph::new(ground.n(), edges).expect("subset of valid edges is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn erdos_renyi_connected_100() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = gen_erdos_renyi(100, 0.3, &mut rng, 100).unwrap();
        assert_eq!(g.n(), 100);
        assert!(g.is_connected());
    }

    #[test]
    fn erdos_renyi_p1_is_complete() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = gen_erdos_renyi(2, 1.0, &mut rng, 1).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert!(g.has_edge(0, 1));
    }

    #[test]
    fn erdos_renyi_p0_not_connected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let err = gen_erdos_renyi(5, 0.0, &mut rng, 3).unwrap_err();
        assert!(matches!(err, Error::NotConnected { attempts: 3 }));
    }

    #[test]
    fn k_cycle_degrees() {
        let g = gen_k_cycle(100, 20).unwrap();
        assert!(g.degrees().iter().all(|&d| d == 40));
    }

    #[test]
    fn k_cycle_ring_and_complete() {
        let c4 = gen_k_cycle(4, 1).unwrap();
        assert_eq!(c4.edge_count(), 4);
        let k5 = gen_k_cycle(5, 2).unwrap();
        assert_eq!(k5.edge_count(), 10);
        assert!(gen_k_cycle(2, 1).is_err());
        assert!(gen_k_cycle(5, 0).is_err());
    }

    #[test]
    fn k_cycle_deterministic() {
        let a = gen_k_cycle(30, 5).unwrap();
        let b = gen_k_cycle(30, 5).unwrap();
        assert_eq!(a.to_edge_list_text(), b.to_edge_list_text());
    }

    #[test]
    fn grid_edge_counts() {
        let g = gen_grid2d(5, 5).unwrap();
        assert_eq!(g.n(), 25);
        assert_eq!(g.edge_count(), 40);
        let sq = gen_grid2d(2, 2).unwrap();
        assert_eq!(sq.edge_count(), 4);
        let path = gen_grid2d(1, 3).unwrap();
        assert_eq!(path.edge_count(), 2);
        assert!(gen_grid2d(1, 1).is_err());
    }

    #[test]
    fn grid_deterministic() {
        assert_eq!(
            gen_grid2d(4, 7).unwrap().to_edge_list_text(),
            gen_grid2d(4, 7).unwrap().to_edge_list_text()
        );
    }

    #[test]
    fn time_varying_keeps_exact_fraction() {
        let ground = gen_grid2d(5, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = sample_time_varying(&ground, 0.75, &mut rng);
        assert_eq!(g.edge_count(), 10);
        let same = sample_time_varying(&ground, 0.0, &mut rng);
        assert_eq!(same, ground);
        let empty = sample_time_varying(&ground, 1.0, &mut rng);
        assert_eq!(empty.edge_count(), 0);
    }

    #[test]
    fn edge_list_round_trip() {
        let g = gen_grid2d(3, 4).unwrap();
        let text = g.to_edge_list_text();
        let g2 = Graph::from_edge_list_text(&text).unwrap();
        assert_eq!(g, g2);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn k_cycle_shape_invariants(n in 3usize..60, k in 1usize..30) {
            let g = gen_k_cycle(n, k).unwrap();
            let degree = (2 * k).min(n - 1);
            prop_assert!(g.degrees().iter().all(|&d| d == degree));
            prop_assert_eq!(g.edge_count(), n * degree / 2);
            prop_assert!(g.is_connected());
            // symmetric adjacency by construction
            for (a, b) in g.edges() {
                prop_assert!(g.has_edge(b, a));
            }
        }

        #[test]
        fn grid_shape_invariants(rows in 1usize..10, cols in 2usize..10) {
            let g = gen_grid2d(rows, cols).unwrap();
            prop_assert_eq!(g.n(), rows * cols);
            prop_assert_eq!(g.edge_count(), rows * (cols - 1) + cols * (rows - 1));
            prop_assert!(g.is_connected());
            let text = g.to_edge_list_text();
            prop_assert_eq!(&Graph::from_edge_list_text(&text).unwrap(), &g);
        }
    }
}

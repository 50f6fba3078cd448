use std::collections::{HashMap, HashSet};

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{HypergraphError, InteractionHypergraph};

/// Where the qudits sit on a lattice. With `VerticesAsQudits` every lattice
/// bond carries a 2-local projector; with `EdgesAsQudits` every lattice site
/// carries a projector acting on all of its bonds, so `k` equals the
/// coordination number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuditPlacement {
    VerticesAsQudits,
    EdgesAsQudits,
}

/// A geometry or random ensemble. Lattice kinds produce open-boundary
/// patches; with `EdgesAsQudits` the bonds leaving the patch are kept as
/// qudits touched by a single projector, so every projector keeps its full
/// locality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnsembleSpec {
    /// `n` qudits, `n - 1` nearest-neighbour pairs.
    Chain { n: usize },
    /// `n` qudits on a ring, `n` pairs.
    Cycle { n: usize },
    /// `z` edges of size `k` sharing only qudit 0.
    Star { z: usize, k: usize },
    /// Truncated tree with qudits of degree `t` and hyperedges of size `k`,
    /// `depth` hyperedge generations below the root qudit.
    RegularTreePatch { t: usize, k: usize, depth: usize },
    SquareLattice {
        rows: usize,
        cols: usize,
        placement: QuditPlacement,
    },
    TriangularLattice {
        rows: usize,
        cols: usize,
        placement: QuditPlacement,
    },
    /// Brick-wall representation of the honeycomb lattice.
    HexagonalLattice {
        rows: usize,
        cols: usize,
        placement: QuditPlacement,
    },
    /// Chessboard of `rows x cols` cells. Qudits live on black cells
    /// (`r + c` even), 4-local projectors on red cells, each acting on the
    /// four black cells sharing a side with it.
    Checkerboard { rows: usize, cols: usize },
    CubicLattice {
        nx: usize,
        ny: usize,
        nz: usize,
        placement: QuditPlacement,
    },
    /// `round(alpha * n)` distinct uniformly random `k`-subsets.
    ErRandom {
        n: usize,
        alpha: f64,
        k: usize,
        seed: u64,
    },
    /// Random hypergraph with every qudit of degree `t` and every edge of
    /// size `k` (configuration model, simple). Locally tree-like without a
    /// boundary.
    RegularRandom {
        n: usize,
        t: usize,
        k: usize,
        seed: u64,
    },
}

type Coord = [i64; 3];

fn invalid(msg: impl Into<String>) -> HypergraphError {
    HypergraphError::InvalidParameter(msg.into())
}

pub fn generate(spec: &EnsembleSpec) -> Result<InteractionHypergraph, HypergraphError> {
    match *spec {
        EnsembleSpec::Chain { n } => {
            if n < 2 {
                return Err(invalid("chain needs n >= 2"));
            }
            InteractionHypergraph::new(n, (1..n).map(|a| vec![a - 1, a]).collect())
        }
        EnsembleSpec::Cycle { n } => {
            if n < 3 {
                return Err(invalid("cycle needs n >= 3"));
            }
            InteractionHypergraph::new(n, (0..n).map(|a| vec![a, (a + 1) % n]).collect())
        }
        EnsembleSpec::Star { z, k } => {
            if z < 1 || k < 2 {
                return Err(invalid("star needs z >= 1 and k >= 2"));
            }
            let edges = (0..z)
                .map(|j| {
                    let mut e = vec![0];
                    e.extend(1 + j * (k - 1)..1 + (j + 1) * (k - 1));
                    e
                })
                .collect();
            InteractionHypergraph::new(1 + z * (k - 1), edges)
        }
        EnsembleSpec::RegularTreePatch { t, k, depth } => regular_tree_patch(t, k, depth),
        EnsembleSpec::SquareLattice {
            rows,
            cols,
            placement,
        } => {
            let sites = grid_sites(rows, cols, 1)?;
            Ok(lattice(&sites, &square_neighbors, placement))
        }
        EnsembleSpec::TriangularLattice {
            rows,
            cols,
            placement,
        } => {
            let sites = grid_sites(rows, cols, 1)?;
            Ok(lattice(&sites, &triangular_neighbors, placement))
        }
        EnsembleSpec::HexagonalLattice {
            rows,
            cols,
            placement,
        } => {
            let sites = grid_sites(rows, cols, 1)?;
            Ok(lattice(&sites, &hexagonal_neighbors, placement))
        }
        EnsembleSpec::CubicLattice {
            nx,
            ny,
            nz,
            placement,
        } => {
            let sites = grid_sites(nx, ny, nz)?;
            Ok(lattice(&sites, &cubic_neighbors, placement))
        }
        EnsembleSpec::Checkerboard { rows, cols } => checkerboard(rows, cols),
        EnsembleSpec::ErRandom { n, alpha, k, seed } => er_random(n, alpha, k, seed),
        EnsembleSpec::RegularRandom { n, t, k, seed } => regular_random(n, t, k, seed),
    }
}

fn regular_tree_patch(t: usize, k: usize, depth: usize) -> Result<InteractionHypergraph, HypergraphError> {
    if t < 2 || k < 2 || depth < 1 {
        return Err(invalid("regular tree patch needs t >= 2, k >= 2, depth >= 1"));
    }
    let mut edges = Vec::new();
    let mut n_qudits = 1;
    let mut frontier = vec![0usize];
    for generation in 0..depth {
        let children_per_site = if generation == 0 { t } else { t - 1 };
        let mut next = Vec::with_capacity(frontier.len() * children_per_site * (k - 1));
        for &a in &frontier {
            for _ in 0..children_per_site {
                let mut e = Vec::with_capacity(k);
                e.push(a);
                for _ in 1..k {
                    e.push(n_qudits);
                    next.push(n_qudits);
                    n_qudits += 1;
                }
                edges.push(e);
            }
        }
        frontier = next;
    }
    InteractionHypergraph::new(n_qudits, edges)
}

fn grid_sites(a: usize, b: usize, c: usize) -> Result<Vec<Coord>, HypergraphError> {
    if a == 0 || b == 0 || c == 0 {
        return Err(invalid("lattice patch dimensions must be positive"));
    }
    let mut sites = Vec::with_capacity(a * b * c);
    for x in 0..a as i64 {
        for y in 0..b as i64 {
            for z in 0..c as i64 {
                sites.push([x, y, z]);
            }
        }
    }
    Ok(sites)
}

fn square_neighbors(p: Coord) -> Vec<Coord> {
    let [r, c, _] = p;
    vec![[r - 1, c, 0], [r, c - 1, 0], [r, c + 1, 0], [r + 1, c, 0]]
}

fn triangular_neighbors(p: Coord) -> Vec<Coord> {
    let [r, c, _] = p;
    vec![
        [r - 1, c - 1, 0],
        [r - 1, c, 0],
        [r, c - 1, 0],
        [r, c + 1, 0],
        [r + 1, c, 0],
        [r + 1, c + 1, 0],
    ]
}

fn hexagonal_neighbors(p: Coord) -> Vec<Coord> {
    let [r, c, _] = p;
    let vertical = if (r + c).rem_euclid(2) == 0 { r + 1 } else { r - 1 };
    let mut out = vec![[r, c - 1, 0], [r, c + 1, 0], [vertical, c, 0]];
    out.sort();
    out
}

fn cubic_neighbors(p: Coord) -> Vec<Coord> {
    let [x, y, z] = p;
    vec![
        [x - 1, y, z],
        [x, y - 1, z],
        [x, y, z - 1],
        [x, y, z + 1],
        [x, y + 1, z],
        [x + 1, y, z],
    ]
}

fn lattice(
    sites: &[Coord],
    neighbors: &dyn Fn(Coord) -> Vec<Coord>,
    placement: QuditPlacement,
) -> InteractionHypergraph {
    let index: HashMap<Coord, usize> = sites.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    match placement {
        QuditPlacement::VerticesAsQudits => {
            let mut edges = Vec::new();
            for (i, &s) in sites.iter().enumerate() {
                for u in neighbors(s) {
                    if let Some(&j) = index.get(&u) {
                        if j > i {
                            edges.push(vec![i, j]);
                        }
                    }
                }
            }
            InteractionHypergraph::new(sites.len(), edges).expect("lattice edges are valid")
        }
        QuditPlacement::EdgesAsQudits => {
            let mut bond_ids: HashMap<(Coord, Coord), usize> = HashMap::new();
            let mut edges = Vec::with_capacity(sites.len());
            for &s in sites {
                let mut e = Vec::new();
                for u in neighbors(s) {
                    let key = if s < u { (s, u) } else { (u, s) };
                    let next = bond_ids.len();
                    e.push(*bond_ids.entry(key).or_insert(next));
                }
                edges.push(e);
            }
            InteractionHypergraph::new(bond_ids.len(), edges).expect("lattice edges are valid")
        }
    }
}

fn checkerboard(rows: usize, cols: usize) -> Result<InteractionHypergraph, HypergraphError> {
    let cells = grid_sites(rows, cols, 1)?;
    let mut black_ids: HashMap<Coord, usize> = HashMap::new();
    let mut edges = Vec::new();
    for &cell in cells.iter().filter(|[r, c, _]| (r + c) % 2 == 1) {
        let mut e = Vec::with_capacity(4);
        for u in square_neighbors(cell) {
            let next = black_ids.len();
            e.push(*black_ids.entry(u).or_insert(next));
        }
        edges.push(e);
    }
    InteractionHypergraph::new(black_ids.len(), edges)
}

fn binomial_at_least(n: usize, k: usize, m: usize) -> bool {
    // C(n, i) increases up to i = min(k, n - k), so partial products are lower bounds
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * (n - i) as u128 / (i + 1) as u128;
        if c >= m as u128 {
            return true;
        }
    }
    c >= m as u128
}

fn er_random(n: usize, alpha: f64, k: usize, seed: u64) -> Result<InteractionHypergraph, HypergraphError> {
    if k < 1 || n < k {
        return Err(invalid("er_random needs 1 <= k <= n"));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(invalid("er_random needs alpha > 0"));
    }
    let m = (alpha * n as f64).round() as usize;
    if !binomial_at_least(n, k, m) {
        return Err(invalid(format!("cannot place {m} distinct {k}-subsets on {n} qudits")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::with_capacity(m);
    let mut edges = Vec::with_capacity(m);
    while edges.len() < m {
        let mut e = index::sample(&mut rng, n, k).into_vec();
        e.sort_unstable();
        if seen.insert(e.clone()) {
            edges.push(e);
        }
    }
    InteractionHypergraph::new(n, edges)
}

fn regular_random(n: usize, t: usize, k: usize, seed: u64) -> Result<InteractionHypergraph, HypergraphError> {
    if t < 1 || k < 2 || n < k {
        return Err(invalid("regular_random needs t >= 1, k >= 2, n >= k"));
    }
    if (n * t) % k != 0 {
        return Err(invalid("regular_random needs n * t divisible by k"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stubs: Vec<usize> = (0..n).flat_map(|a| std::iter::repeat_n(a, t)).collect();
    const ATTEMPTS: usize = 10_000;
    for _ in 0..ATTEMPTS {
        stubs.shuffle(&mut rng);
        let mut edges: Vec<Vec<usize>> = stubs.chunks(k).map(|c| c.to_vec()).collect();
        // repair repeated qudits inside an edge by swapping stubs with random
        // other edges; a few passes suffice for sparse graphs
        for _ in 0..100 {
            let bad: Vec<usize> = (0..edges.len()).filter(|&i| has_repeat(&edges[i])).collect();
            if bad.is_empty() {
                break;
            }
            for i in bad {
                let j = rand::Rng::random_range(&mut rng, 0..edges.len());
                let (x, y) = (
                    rand::Rng::random_range(&mut rng, 0..k),
                    rand::Rng::random_range(&mut rng, 0..k),
                );
                if i != j {
                    let tmp = edges[i][x];
                    edges[i][x] = edges[j][y];
                    edges[j][y] = tmp;
                }
            }
        }
        if edges.iter().any(|e| has_repeat(e)) {
            continue;
        }
        for e in &mut edges {
            e.sort_unstable();
        }
        let distinct: HashSet<&Vec<usize>> = edges.iter().collect();
        if distinct.len() != edges.len() {
            continue;
        }
        return InteractionHypergraph::new(n, edges);
    }
    Err(invalid("could not draw a simple regular hypergraph"))
}

fn has_repeat(e: &[usize]) -> bool {
    (0..e.len()).any(|x| e[x + 1..].contains(&e[x]))
}

use std::collections::HashMap;
use std::rc::Rc;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use super::{IndPolyError, IndependencePolynomial};
use crate::hypergraph::{DependencyGraph, InteractionHypergraph};

pub const DEFAULT_VERTEX_BUDGET: usize = 64;
/// Vertex subsets are keyed as `u128` bit masks.
pub const MAX_VERTEX_BUDGET: usize = 128;

type Mask = u128;
type Poly = Vec<BigUint>;

fn bit(v: usize) -> Mask {
    1 << v
}

fn bits(mut m: Mask) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if m == 0 {
            None
        } else {
            let v = m.trailing_zeros() as usize;
            m &= m - 1;
            Some(v)
        }
    })
}

fn add_into(acc: &mut Poly, other: &[BigUint], shift: usize) {
    if acc.len() < other.len() + shift {
        acc.resize(other.len() + shift, BigUint::zero());
    }
    for (i, c) in other.iter().enumerate() {
        acc[i + shift] += c;
    }
}

fn mul(a: &[BigUint], b: &[BigUint]) -> Poly {
    let mut out = vec![BigUint::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn check_budget(size: usize, budget: usize) -> Result<(), IndPolyError> {
    if budget > MAX_VERTEX_BUDGET {
        return Err(IndPolyError::BudgetUnsupported(budget));
    }
    if size > budget {
        return Err(IndPolyError::TooLarge { size, budget });
    }
    Ok(())
}

pub fn independence_polynomial(g: &DependencyGraph) -> Result<IndependencePolynomial, IndPolyError> {
    independence_polynomial_with_budget(g, DEFAULT_VERTEX_BUDGET)
}

/// Exact independence polynomial by the deletion recursion
/// `I(G) = I(G - v) + x I(G - N[v])`, splitting into connected components
/// and memoizing on the induced vertex set. The pivot is a vertex of
/// maximum degree in the current component (lowest index on ties).
pub fn independence_polynomial_with_budget(
    g: &DependencyGraph,
    budget: usize,
) -> Result<IndependencePolynomial, IndPolyError> {
    let n = g.n_vertices();
    check_budget(n, budget)?;
    let nbr: Vec<Mask> = (0..n)
        .map(|v| g.neighbors(v).iter().fold(0, |m, &u| m | bit(u)))
        .collect();
    let mut counter = Counter {
        nbr,
        memo: HashMap::new(),
    };
    let all = if n == 0 { 0 } else { Mask::MAX >> (MAX_VERTEX_BUDGET - n) };
    let poly = counter.solve(all);
    Ok(IndependencePolynomial::from_coefficients(poly.to_vec()))
}

struct Counter {
    nbr: Vec<Mask>,
    memo: HashMap<Mask, Rc<Poly>>,
}

impl Counter {
    fn component(&self, mask: Mask) -> Mask {
        let start = bit(mask.trailing_zeros() as usize);
        let mut comp = start;
        let mut frontier = start;
        while frontier != 0 {
            let mut next = 0;
            for v in bits(frontier) {
                next |= self.nbr[v];
            }
            frontier = next & mask & !comp;
            comp |= frontier;
        }
        comp
    }

    fn solve(&mut self, mask: Mask) -> Rc<Poly> {
        match mask.count_ones() {
            0 => return Rc::new(vec![BigUint::one()]),
            1 => return Rc::new(vec![BigUint::one(), BigUint::one()]),
            _ => {}
        }
        if let Some(p) = self.memo.get(&mask) {
            return Rc::clone(p);
        }
        let comp = self.component(mask);
        let result = if comp != mask {
            let a = self.solve(comp);
            let b = self.solve(mask & !comp);
            mul(&a, &b)
        } else {
            let pivot = bits(mask)
                .max_by_key(|&v| ((self.nbr[v] & mask).count_ones(), std::cmp::Reverse(v)))
                .expect("nonempty mask");
            let without = self.solve(mask & !bit(pivot));
            let with = self.solve(mask & !bit(pivot) & !self.nbr[pivot]);
            let mut out = without.to_vec();
            add_into(&mut out, &with, 1);
            out
        };
        let result = Rc::new(result);
        self.memo.insert(mask, Rc::clone(&result));
        result
    }
}

pub fn matching_polynomial(h: &InteractionHypergraph) -> Result<IndependencePolynomial, IndPolyError> {
    matching_polynomial_with_budget(h, DEFAULT_VERTEX_BUDGET)
}

/// Generating polynomial of sets of pairwise qudit-disjoint hyperedges,
/// computed directly on the hypergraph by branching on a qudit: either none
/// of its remaining edges is occupied, or exactly one is.
pub fn matching_polynomial_with_budget(
    h: &InteractionHypergraph,
    budget: usize,
) -> Result<IndependencePolynomial, IndPolyError> {
    let m = h.n_edges();
    check_budget(m, budget)?;
    let qudit_edges: Vec<Mask> = h
        .qudit_edges()
        .into_iter()
        .map(|es| es.into_iter().fold(0, |acc, i| acc | bit(i)))
        .collect();
    let mut matcher = Matcher {
        h,
        qudit_edges,
        memo: HashMap::new(),
    };
    let all = if m == 0 { 0 } else { Mask::MAX >> (MAX_VERTEX_BUDGET - m) };
    let poly = matcher.solve(all);
    Ok(IndependencePolynomial::from_coefficients(poly.to_vec()))
}

struct Matcher<'a> {
    h: &'a InteractionHypergraph,
    qudit_edges: Vec<Mask>,
    memo: HashMap<Mask, Rc<Poly>>,
}

impl Matcher<'_> {
    fn solve(&mut self, remaining: Mask) -> Rc<Poly> {
        if remaining == 0 {
            return Rc::new(vec![BigUint::one()]);
        }
        if let Some(p) = self.memo.get(&remaining) {
            return Rc::clone(p);
        }
        let first = remaining.trailing_zeros() as usize;
        let site = self.h.edge(first)[0];
        let at_site = self.qudit_edges[site] & remaining;
        let mut out = self.solve(remaining & !at_site).to_vec();
        for e in bits(at_site) {
            let blocked = self
                .h
                .edge(e)
                .iter()
                .fold(0, |acc, &a| acc | self.qudit_edges[a]);
            let sub = self.solve(remaining & !blocked);
            add_into(&mut out, &sub, 1);
        }
        let out = Rc::new(out);
        self.memo.insert(remaining, Rc::clone(&out));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypergraph::{build_dependency_graph, generate, EnsembleSpec};

    fn coeffs(p: &IndependencePolynomial) -> Vec<u64> {
        p.coefficients()
            .iter()
            .map(|c| c.try_into().unwrap())
            .collect()
    }

    /// Brute force over all vertex subsets.
    fn brute_force(g: &DependencyGraph) -> Vec<u64> {
        let n = g.n_vertices();
        let mut out = vec![0u64; n + 1];
        for s in 0u64..(1 << n) {
            let independent = g.edges().iter().all(|&(u, v)| s >> u & 1 == 0 || s >> v & 1 == 0);
            if independent {
                out[s.count_ones() as usize] += 1;
            }
        }
        while out.len() > 1 && *out.last().unwrap() == 0 {
            out.pop();
        }
        out
    }

    #[test]
    fn small_cases() {
        assert_eq!(coeffs(&independence_polynomial(&DependencyGraph::complete(2)).unwrap()), vec![1, 2]);
        assert_eq!(coeffs(&independence_polynomial(&DependencyGraph::path(3)).unwrap()), vec![1, 3, 1]);
        assert_eq!(coeffs(&independence_polynomial(&DependencyGraph::empty(0)).unwrap()), vec![1]);
        assert_eq!(
            coeffs(&independence_polynomial(&DependencyGraph::empty(3)).unwrap()),
            vec![1, 3, 3, 1]
        );
    }

    #[test]
    fn path_ten_matches_brute_force() {
        let g = DependencyGraph::path(10);
        let expected = brute_force(&g);
        // frozen from the subset enumeration above
        assert_eq!(expected, vec![1, 10, 36, 56, 35, 6]);
        assert_eq!(coeffs(&independence_polynomial(&g).unwrap()), expected);
    }

    #[test]
    fn budget_is_enforced() {
        let g = DependencyGraph::path(65);
        assert_eq!(
            independence_polynomial(&g),
            Err(IndPolyError::TooLarge { size: 65, budget: 64 })
        );
        assert!(independence_polynomial_with_budget(&g, 100).is_ok());
        assert_eq!(
            independence_polynomial_with_budget(&g, 200),
            Err(IndPolyError::BudgetUnsupported(200))
        );
    }

    #[test]
    fn matching_small_cases() {
        let chain = generate(&EnsembleSpec::Chain { n: 3 }).unwrap();
        assert_eq!(coeffs(&matching_polynomial(&chain).unwrap()), vec![1, 2]);
        let disjoint = InteractionHypergraph::new(4, vec![vec![0, 1], vec![2, 3]]).unwrap();
        assert_eq!(coeffs(&matching_polynomial(&disjoint).unwrap()), vec![1, 2, 1]);
    }

    #[test]
    fn lattice_patch_matches_line_graph() {
        let h = generate(&EnsembleSpec::SquareLattice {
            rows: 4,
            cols: 4,
            placement: crate::hypergraph::QuditPlacement::VerticesAsQudits,
        })
        .unwrap();
        let via_graph = independence_polynomial(&build_dependency_graph(&h)).unwrap();
        assert_eq!(matching_polynomial(&h).unwrap(), via_graph);
        // perfect matchings of the 4x4 grid: 36
        assert_eq!(via_graph.coefficients()[8], BigUint::from(36u32));
    }
}

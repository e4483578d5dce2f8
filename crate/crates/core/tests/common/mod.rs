#![allow(dead_code)]

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use varma_causal::graph::{DirectedEdge, DirectedMixedGraph, SeparationQuery, TimedNode};
use varma_causal::model::VarmaSpec;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn m(d: usize, v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(d, d, v)
}

pub fn v(i: usize) -> TimedNode {
    TimedNode::endo(i, 0)
}

pub fn x(t: i64) -> TimedNode {
    TimedNode::endo(0, t)
}

pub fn y(t: i64) -> TimedNode {
    TimedNode::endo(1, t)
}

/// X_t = ½X_{t-1} + ε^X_t + ¼ε^Y_{t-1}, Y_t = ⅓X_{t-1} + ½Y_{t-1} + ε^Y_t.
pub fn varma_example() -> VarmaSpec {
    VarmaSpec::new(
        vec![m(2, &[0.0; 4]), m(2, &[0.5, 0.0, 1.0 / 3.0, 0.5])],
        vec![m(2, &[0.0, 0.25, 0.0, 0.0])],
        vec![1.0, 1.0],
    )
    .unwrap()
}

/// X_t = ½X_{t-1} + ε^X_t, Y_t = ⅓X_t + ½Y_{t-1} + ε^Y_t.
pub fn var_instantaneous_example() -> VarmaSpec {
    VarmaSpec::new(
        vec![m(2, &[0.0, 0.0, 1.0 / 3.0, 0.0]), m(2, &[0.5, 0.0, 0.0, 0.5])],
        vec![],
        vec![1.0, 1.0],
    )
    .unwrap()
}

/// X_t = ½X_{t-1} + ε^X_t + ¼ε^Y_{t-1}, Y_t = ⅕X_t + ⅓X_{t-1} + ½Y_{t-1} + ε^Y_t.
pub fn varma_instantaneous_example() -> VarmaSpec {
    VarmaSpec::new(
        vec![m(2, &[0.0, 0.0, 0.2, 0.0]), m(2, &[0.5, 0.0, 1.0 / 3.0, 0.5])],
        vec![m(2, &[0.0, 0.25, 0.0, 0.0])],
        vec![1.0, 1.0],
    )
    .unwrap()
}

/// Instantaneous triangle X → Y (α), Y → Z (β), X → Z (−αβ) with no lags.
pub fn cancelling_triangle(alpha: f64, beta: f64) -> VarmaSpec {
    let a0 = m(3, &[0.0, 0.0, 0.0, alpha, 0.0, 0.0, -alpha * beta, beta, 0.0]);
    VarmaSpec::new(vec![a0, DMatrix::zeros(3, 3)], vec![], vec![1.0, 1.0, 1.0]).unwrap()
}

fn coefficient<R: Rng>(rng: &mut R) -> f64 {
    let c: f64 = rng.random_range(0.2..1.0);
    if rng.random() { c } else { -c }
}

/// Random DAG on `v(0) … v(n-1)` with edges along a random order.
pub fn random_dag<R: Rng>(rng: &mut R, n: usize, p_edge: f64) -> DirectedMixedGraph {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < p_edge {
                edges.push(DirectedEdge { from: v(order[i]), to: v(order[j]), coefficient: Some(coefficient(rng)) });
            }
        }
    }
    DirectedMixedGraph::dag((0..n).map(v), edges).unwrap()
}

pub fn random_admg<R: Rng>(rng: &mut R, n: usize, p_edge: f64, p_bi: f64) -> DirectedMixedGraph {
    let dag = random_dag(rng, n, p_edge);
    let mut bi = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < p_bi {
                bi.push((v(i), v(j)));
            }
        }
    }
    DirectedMixedGraph::new((0..n).map(v), dag.directed_edges(), bi).unwrap()
}

/// Disjoint `A`, `B`, `C` of sizes 1–2, 0–3, 1–2 (as far as `nodes` allows).
pub fn random_query<R: Rng>(rng: &mut R, nodes: &[TimedNode]) -> SeparationQuery {
    assert!(nodes.len() >= 2);
    let mut pool = nodes.to_vec();
    pool.shuffle(rng);
    let na = rng.random_range(1..=2).min(pool.len() - 1);
    let nc = rng.random_range(1..=2).min(pool.len() - na);
    let nb = rng.random_range(0..=3).min(pool.len() - na - nc);
    let a = pool[..na].to_vec();
    let c = pool[na..na + nc].to_vec();
    let b = pool[na + nc..na + nc + nb].to_vec();
    SeparationQuery::new(a, b, c).unwrap()
}

/// Random strictly lower-triangular matrix, relabelled by a random
/// permutation.
pub fn random_acyclic<R: Rng>(rng: &mut R, d: usize, p_edge: f64) -> DMatrix<f64> {
    let mut perm: Vec<usize> = (0..d).collect();
    perm.shuffle(rng);
    let mut a0 = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..i {
            if rng.random::<f64>() < p_edge {
                a0[(perm[i], perm[j])] = rng.random_range(-1.5..1.5);
            }
        }
    }
    a0
}

/// `Σ` over all directed paths `j → … → i` of the product of `A₀` entries,
/// by explicit enumeration; the empty path contributes 1 on the diagonal.
pub fn path_sum_ice(a0: &DMatrix<f64>) -> DMatrix<f64> {
    let d = a0.nrows();
    let mut c = DMatrix::zeros(d, d);
    fn walk(a0: &DMatrix<f64>, from: usize, to: usize, prod: f64, seen: &mut Vec<bool>, acc: &mut f64) {
        if from == to {
            *acc += prod;
            return;
        }
        for next in 0..a0.nrows() {
            // edge from -> next has weight a0[next, from]
            let w = a0[(next, from)];
            if w != 0.0 && !seen[next] {
                seen[next] = true;
                walk(a0, next, to, prod * w, seen, acc);
                seen[next] = false;
            }
        }
    }
    for i in 0..d {
        for j in 0..d {
            let mut seen = vec![false; d];
            seen[j] = true;
            let mut acc = 0.0;
            walk(a0, j, i, 1.0, &mut seen, &mut acc);
            c[(i, j)] = acc;
        }
    }
    c
}

/// Total effect of `x[k]` on `y` by enumerating directed paths that start at
/// `x[k]` and avoid every other member of `x`.
pub fn path_sum_effect(g: &DirectedMixedGraph, y: TimedNode, x: &[TimedNode], k: usize) -> f64 {
    let blocked: BTreeSet<TimedNode> = x.iter().copied().filter(|&v| v != x[k]).collect();
    fn walk(g: &DirectedMixedGraph, at: TimedNode, y: TimedNode, blocked: &BTreeSet<TimedNode>, prod: f64) -> f64 {
        if at == y {
            return prod;
        }
        let mut s = 0.0;
        for c in g.children(&[at]).unwrap() {
            if !blocked.contains(&c) {
                s += walk(g, c, y, blocked, prod * g.coefficient(&at, &c).unwrap());
            }
        }
        s
    }
    walk(g, x[k], y, &blocked, 1.0)
}

pub fn pick<'a, R: Rng, T>(rng: &mut R, v: &'a [T]) -> &'a T {
    v.choose(rng).unwrap()
}

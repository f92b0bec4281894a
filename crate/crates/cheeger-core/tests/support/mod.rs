//! Independent oracles shared by the integration suites. Everything here is
//! deliberately naive: exhaustive search and textbook dense linear algebra,
//! with no code shared with the library paths under test.

#![allow(dead_code)]

use cheeger_core::eigen::{p_energy, weighted_p_norm};
use cheeger_core::graph::DirichletGraph;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Minimum s-t cut value by enumerating every source side. Arcs are directed
/// `(from, to, capacity)`; only arcs leaving the source side count.
pub fn exhaustive_min_cut(
    nodes: usize,
    source: usize,
    sink: usize,
    arcs: &[(usize, usize, f64)],
) -> f64 {
    assert!(nodes <= 20, "enumeration oracle is exponential in the node count");
    let free: Vec<usize> = (0..nodes).filter(|&v| v != source && v != sink).collect();
    let mut best = f64::INFINITY;
    for bits in 0u32..1 << free.len() {
        let mut side = vec![false; nodes];
        side[source] = true;
        for (k, &v) in free.iter().enumerate() {
            if bits >> k & 1 == 1 {
                side[v] = true;
            }
        }
        let cap: f64 = arcs
            .iter()
            .filter(|&&(u, v, _)| side[u] && !side[v])
            .map(|&(_, _, c)| c)
            .sum();
        best = best.min(cap);
    }
    best
}

/// Smallest eigenvalue of the dense symmetric pencil `(L + B) u = lambda M u`
/// at p = 2, via the similarity transform `M^{-1/2} (L + B) M^{-1/2}`.
pub fn dense_lambda_12(g: &DirichletGraph) -> f64 {
    let n = g.len();
    let scale = g.p_weight_scale(2.0);
    let mut a = DMatrix::<f64>::zeros(n, n);
    for e in g.edges() {
        let w = scale * e.w;
        a[(e.u, e.u)] += w;
        a[(e.v, e.v)] += w;
        a[(e.u, e.v)] -= w;
        a[(e.v, e.u)] -= w;
    }
    for v in 0..n {
        a[(v, v)] += scale * g.boundary_weight(v);
    }
    let d: Vec<f64> = (0..n).map(|v| g.volume(v).sqrt()).collect();
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] /= d[i] * d[j];
        }
    }
    let eig = a.symmetric_eigen();
    eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Gradient of the p-Rayleigh quotient at a function normalized in the
/// volume-weighted p-norm. The quotient gradient (not the bare energy
/// gradient) is what makes renormalized descent stationary exactly at the
/// weighted eigenpairs.
fn quotient_gradient(g: &DirichletGraph, u: &[f64], value: f64, p: f64) -> Vec<f64> {
    let scale = g.p_weight_scale(p);
    let phi = |t: f64| t.abs().powf(p - 1.0) * t.signum();
    let mut grad = vec![0.0; g.len()];
    for e in g.edges() {
        let d = scale * p * e.w * phi(u[e.u] - u[e.v]);
        grad[e.u] += d;
        grad[e.v] -= d;
    }
    for (v, gr) in grad.iter_mut().enumerate() {
        *gr += scale * p * g.boundary_weight(v) * phi(u[v]);
        *gr -= value * p * g.volume(v) * phi(u[v]);
    }
    grad
}

/// First p-eigenvalue by multistart projected gradient descent on the
/// p-Rayleigh quotient, constrained to the nonnegative cone. A slow but
/// structurally independent reference for small domains.
pub fn descent_lambda_1p(g: &DirichletGraph, p: f64, starts: u32, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::INFINITY;
    for _ in 0..starts {
        let mut u: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(0.05..1.0)).collect();
        let norm = weighted_p_norm(g, &u, p);
        u.iter_mut().for_each(|x| *x /= norm);
        let mut value = p_energy(g, &u, p).expect("oracle start is valid");
        let mut step = 0.25;
        for _ in 0..5000 {
            let grad = quotient_gradient(g, &u, value, p);
            let mut improved = false;
            for _ in 0..40 {
                let mut trial: Vec<f64> =
                    u.iter().zip(&grad).map(|(x, d)| (x - step * d).max(0.0)).collect();
                let norm = weighted_p_norm(g, &trial, p);
                if !(norm > 0.0) {
                    step *= 0.5;
                    continue;
                }
                trial.iter_mut().for_each(|x| *x /= norm);
                let tv = p_energy(g, &trial, p).expect("oracle trial is valid");
                if tv < value - 1e-14 {
                    u = trial;
                    value = tv;
                    step *= 1.3;
                    improved = true;
                    break;
                }
                step *= 0.5;
            }
            if !improved {
                break;
            }
        }
        best = best.min(value);
    }
    best
}

//! The single-set Cheeger problem `h(G) = min per(S)/vol(S)` over nonempty
//! vertex sets: exhaustive enumeration for small domains, and an exact
//! Dinkelbach iteration whose parametric subproblem `min per(S) - mu vol(S)`
//! is an s-t minimum cut. Thresholding relates arbitrary nonnegative functions
//! to level-set ratios.

use crate::error::{Error, Result};
use crate::flow::FlowNetwork;
use crate::graph::DirichletGraph;

/// Hard cap on exhaustive subset enumeration.
pub const ENUMERATE_VERTEX_CAP: usize = 22;
/// Default relative termination tolerance for the Dinkelbach iteration.
pub const DEFAULT_DINKELBACH_TOL: f64 = 1e-10;
/// Defensive cap; the iteration is finitely convergent long before this.
const DINKELBACH_MAX_ITERS: usize = 100;

/// A Cheeger value with an attaining set and the solver trace.
#[derive(Debug, Clone)]
pub struct CheegerResult {
    pub h: f64,
    pub set: Vec<bool>,
    /// Number of parametric subproblems solved (1 for enumeration).
    pub iterations: usize,
    /// Strictly decreasing sequence of ratio estimates, ending at `h`.
    pub mu_trace: Vec<f64>,
}

/// True when `cand` precedes `best` in the tie order: strictly smaller ratio
/// (compared by cross-multiplication), then larger volume, then
/// lexicographically smaller sorted vertex list.
fn better_set(
    cand: (f64, f64, &[bool]),
    best: (f64, f64, &[bool]),
) -> bool {
    let (cper, cvol, cset) = cand;
    let (bper, bvol, bset) = best;
    let lhs = cper * bvol;
    let rhs = bper * cvol;
    if lhs != rhs {
        return lhs < rhs;
    }
    if cvol != bvol {
        return cvol > bvol;
    }
    // First index where membership differs; the set containing it comes first.
    match cset.iter().zip(bset).position(|(a, b)| a != b) {
        Some(i) => cset[i],
        None => false,
    }
}

/// Exhaustive minimum over all nonempty subsets. Errors above
/// [`ENUMERATE_VERTEX_CAP`] vertices.
pub fn cheeger_enumerate(g: &DirichletGraph) -> Result<CheegerResult> {
    let n = g.len();
    if n > ENUMERATE_VERTEX_CAP {
        return Err(Error::SizeCap {
            what: "subset enumeration",
            size: n as u128,
            cap: ENUMERATE_VERTEX_CAP as u128,
        });
    }
    let edges = g.edges();
    let mut best: Option<(f64, f64, Vec<bool>)> = None;
    let mut members = vec![false; n];
    for mask in 1u32..(1u32 << n) {
        let mut per = 0.0;
        let mut vol = 0.0;
        for (v, m) in members.iter_mut().enumerate() {
            *m = (mask >> v) & 1 == 1;
            if *m {
                per += g.boundary_weight(v);
                vol += g.volume(v);
            }
        }
        for e in edges {
            if members[e.u] != members[e.v] {
                per += e.w;
            }
        }
        let replace = match &best {
            None => true,
            Some((bper, bvol, bset)) => better_set((per, vol, &members), (*bper, *bvol, bset)),
        };
        if replace {
            best = Some((per, vol, members.clone()));
        }
    }
    let (per, vol, set) = best.expect("nonempty domain");
    Ok(CheegerResult { h: per / vol, set, iterations: 1, mu_trace: vec![per / vol] })
}

/// One parametric subproblem: the maximal minimizer of `per(S) - mu vol(S)`
/// and the minimum value, via min cut on the standard network (source -> v
/// with capacity `mu * m_v`, v -> sink with capacity `b_v`, interior edges as
/// antiparallel pairs).
fn parametric_cut(g: &DirichletGraph, mu: f64) -> Result<(f64, Vec<bool>)> {
    let n = g.len();
    let (source, sink) = (n, n + 1);
    let mut net = FlowNetwork::new(n + 2, source, sink)?;
    for v in 0..n {
        net.add_arc(source, v, mu * g.volume(v))?;
        if g.boundary_weight(v) > 0.0 {
            net.add_arc(v, sink, g.boundary_weight(v))?;
        }
    }
    for e in g.edges() {
        net.add_undirected(e.u, e.v, e.w)?;
    }
    let cut = net.min_cut();
    let members: Vec<bool> = (0..n).map(|v| cut.source_side[v]).collect();
    // cut = mu * vol(V \ S) + per(S), so the subproblem optimum is cut - mu vol(V).
    Ok((cut.value - mu * g.total_volume(), members))
}

/// Exact Cheeger value by Dinkelbach fractional programming: starting from the
/// whole-domain ratio, each round solves the parametric cut at the current
/// estimate and resets the estimate to the minimizer's true ratio. Terminates
/// when the subproblem optimum certifies `mu` within `tol` relative to the
/// domain volume; the final set is the largest ratio minimizer.
pub fn cheeger_dinkelbach(g: &DirichletGraph, tol: f64) -> Result<CheegerResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("non-positive tolerance {tol}")));
    }
    let total_vol = g.total_volume();
    let mut mu = g.total_perimeter() / total_vol;
    let mut set = g.full_set();
    let mut mu_trace = vec![mu];
    let mut iterations = 0;
    loop {
        iterations += 1;
        if iterations > DINKELBACH_MAX_ITERS {
            let last_change = match mu_trace.as_slice() {
                [.., a, b] => (b - a).abs(),
                _ => mu,
            };
            return Err(Error::NonConvergence { iterations, last_change });
        }
        let (optimum, candidate) = parametric_cut(g, mu)?;
        if candidate.iter().all(|&m| !m) {
            // Defensive: only the empty set attains the optimum, so no set
            // improves on mu and the current set already realizes it.
            break;
        }
        let (per, vol) = g.per_vol(&candidate);
        let ratio = per / vol;
        if optimum >= -tol * total_vol {
            // mu is optimal; the candidate is the largest set attaining it.
            if ratio <= mu {
                set = candidate;
                mu = ratio;
                if *mu_trace.last().unwrap() != mu {
                    mu_trace.push(mu);
                }
            }
            break;
        }
        debug_assert!(ratio < mu, "Dinkelbach ratio estimates must strictly decrease");
        mu = ratio;
        set = candidate;
        mu_trace.push(mu);
    }
    Ok(CheegerResult { h: mu, set, iterations, mu_trace })
}

/// The best superlevel set of a nonnegative function: scans the distinct
/// positive values as thresholds and returns the minimizing `{u > t}` with its
/// ratio. Every superlevel set of `u` arises at one of these thresholds.
#[derive(Debug, Clone)]
pub struct ThresholdCut {
    /// Largest threshold below the selected level (so the set is `{u > t}`).
    pub t: f64,
    pub ratio: f64,
    pub set: Vec<bool>,
}

pub fn threshold_ratio(g: &DirichletGraph, u: &[f64]) -> Result<ThresholdCut> {
    if u.len() != g.len() {
        return Err(Error::InvalidParameter(format!(
            "function over {} vertices on a {}-vertex domain",
            u.len(),
            g.len()
        )));
    }
    if u.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::InvalidParameter("thresholding needs a finite nonnegative function".into()));
    }
    let mut levels: Vec<f64> = u.iter().cloned().filter(|&x| x > 0.0).collect();
    levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
    levels.dedup();
    if levels.is_empty() {
        return Err(Error::InvalidParameter("thresholding needs a somewhere-positive function".into()));
    }
    let mut best: Option<(f64, f64, Vec<bool>, f64)> = None;
    for (j, &level) in levels.iter().enumerate() {
        let members: Vec<bool> = u.iter().map(|&x| x >= level).collect();
        let (per, vol) = g.per_vol(&members);
        let below = if j == 0 { 0.0 } else { levels[j - 1] };
        let replace = match &best {
            None => true,
            Some((bper, bvol, bset, _)) => better_set((per, vol, &members), (*bper, *bvol, bset)),
        };
        if replace {
            best = Some((per, vol, members, below));
        }
    }
    let (per, vol, set, t) = best.unwrap();
    Ok(ThresholdCut { t, ratio: per / vol, set })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Edge, GridSpec};

    fn path3() -> DirichletGraph {
        DirichletGraph::new(
            vec![1, 2, 3],
            vec![1.0; 3],
            vec![1.0, 0.0, 1.0],
            vec![Edge { u: 0, v: 1, w: 1.0 }, Edge { u: 1, v: 2, w: 1.0 }],
        )
        .unwrap()
    }

    #[test]
    fn path_attains_two_thirds_on_the_whole_domain() {
        let g = path3();
        let exact = cheeger_enumerate(&g).unwrap();
        assert_eq!(exact.h, 2.0 / 3.0);
        assert_eq!(exact.set, vec![true; 3]);
        let dk = cheeger_dinkelbach(&g, DEFAULT_DINKELBACH_TOL).unwrap();
        assert_eq!(dk.h, exact.h);
        assert_eq!(dk.set, exact.set);
        assert!(dk.iterations <= 3, "took {} iterations", dk.iterations);
    }

    #[test]
    fn asymmetric_two_vertex_domain() {
        let g = DirichletGraph::new(
            vec![0, 1],
            vec![1.0, 2.0],
            vec![3.0, 0.0],
            vec![Edge { u: 0, v: 1, w: 1.0 }],
        )
        .unwrap();
        let exact = cheeger_enumerate(&g).unwrap();
        assert_eq!(exact.h, 0.5);
        assert_eq!(exact.set, vec![false, true]);
        let dk = cheeger_dinkelbach(&g, DEFAULT_DINKELBACH_TOL).unwrap();
        assert_eq!(dk.h, 0.5);
        assert_eq!(dk.set, vec![false, true]);
        // 1.0 -> 0.5, certified at the second cut.
        assert_eq!(dk.mu_trace, vec![1.0, 0.5]);
    }

    #[test]
    fn zero_boundary_domain_has_zero_constant_on_everything() {
        let g = DirichletGraph::new(
            vec![0, 1],
            vec![1.0, 1.0],
            vec![0.0, 0.0],
            vec![Edge { u: 0, v: 1, w: 2.0 }],
        )
        .unwrap();
        for r in [cheeger_enumerate(&g).unwrap(), cheeger_dinkelbach(&g, 1e-10).unwrap()] {
            assert_eq!(r.h, 0.0);
            assert_eq!(r.set, vec![true, true]);
        }
    }

    #[test]
    fn singleton_domain() {
        let g = DirichletGraph::new(vec![9], vec![2.0], vec![3.0], vec![]).unwrap();
        assert_eq!(cheeger_enumerate(&g).unwrap().h, 1.5);
        assert_eq!(cheeger_dinkelbach(&g, 1e-10).unwrap().h, 1.5);
    }

    #[test]
    fn full_square_grid_is_its_own_cheeger_set() {
        let spec = GridSpec { width: 3, height: 3, mesh: 1.0, mask: vec![true; 9] };
        let g = DirichletGraph::build_grid(&spec).unwrap();
        let exact = cheeger_enumerate(&g).unwrap();
        assert!((exact.h - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(exact.set, vec![true; 9]);
        let dk = cheeger_dinkelbach(&g, 1e-10).unwrap();
        assert!((dk.h - exact.h).abs() < 1e-12);
        assert_eq!(dk.set, exact.set);
    }

    #[test]
    fn enumeration_cap_is_enforced() {
        let n = ENUMERATE_VERTEX_CAP + 1;
        let g = DirichletGraph::new(
            (0..n as u64).collect(),
            vec![1.0; n],
            vec![1.0; n],
            vec![],
        )
        .unwrap();
        assert!(matches!(cheeger_enumerate(&g), Err(Error::SizeCap { .. })));
    }

    #[test]
    fn mu_trace_strictly_decreases() {
        // Star with a cheap leaf: several Dinkelbach rounds.
        let g = DirichletGraph::new(
            vec![0, 1, 2, 3],
            vec![1.0, 1.0, 1.0, 4.0],
            vec![5.0, 2.0, 2.0, 0.1],
            vec![
                Edge { u: 0, v: 1, w: 1.0 },
                Edge { u: 0, v: 2, w: 1.0 },
                Edge { u: 0, v: 3, w: 0.5 },
            ],
        )
        .unwrap();
        let dk = cheeger_dinkelbach(&g, 1e-10).unwrap();
        for pair in dk.mu_trace.windows(2) {
            assert!(pair[1] < pair[0], "trace not strictly decreasing: {:?}", dk.mu_trace);
        }
        let exact = cheeger_enumerate(&g).unwrap();
        assert!((dk.h - exact.h).abs() <= 1e-9 * exact.h.max(1.0));
        assert_eq!(dk.set, exact.set);
    }

    #[test]
    fn threshold_scan_finds_the_best_superlevel_set() {
        let g = path3();
        // Support of the first vertex only.
        let cut = threshold_ratio(&g, &[1.0, 0.0, 0.0]).unwrap();
        assert_eq!((cut.t, cut.ratio), (0.0, 2.0));
        assert_eq!(cut.set, vec![true, false, false]);
        // Constant function: the whole domain, ratio h.
        let cut = threshold_ratio(&g, &[0.5, 0.5, 0.5]).unwrap();
        assert_eq!(cut.ratio, 2.0 / 3.0);
        assert_eq!(cut.set, vec![true; 3]);
        // Strictly graded function: three candidate levels, best is everything.
        let cut = threshold_ratio(&g, &[0.2, 0.9, 0.4]).unwrap();
        assert_eq!(cut.set, vec![true; 3]);
        assert_eq!(cut.t, 0.0);
        assert!(threshold_ratio(&g, &[0.0; 3]).is_err());
        assert!(threshold_ratio(&g, &[-0.1, 0.2, 0.3]).is_err());
    }
}

//! Named test domains: the 3-vertex path, square grids, dumbbell and disk
//! masks, and a seeded random-graph generator for oracle suites.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::graph::{DirichletGraph, Edge, GridSpec};

/// Path `v1 - v2 - v3` with unit volumes and edge weights, boundary weight 1
/// at both endpoints. Cheeger constant 2/3, attained by the full set.
pub fn path3() -> DirichletGraph {
    DirichletGraph::new(
        vec![1, 2, 3],
        vec![1.0; 3],
        vec![1.0, 0.0, 1.0],
        vec![Edge { u: 0, v: 1, w: 1.0 }, Edge { u: 1, v: 2, w: 1.0 }],
    )
    .expect("static instance is valid")
}

/// Full `cells x cells` mask with mesh `1/cells`: the unit square. Its Cheeger
/// constant is 4, attained by the full set.
pub fn unit_square(cells: u32) -> DirichletGraph {
    let spec = GridSpec {
        width: cells,
        height: cells,
        mesh: 1.0 / cells as f64,
        mask: vec![true; (cells * cells) as usize],
    };
    DirichletGraph::build_grid(&spec).expect("full mask is valid")
}

fn mask_from(width: u32, height: u32, f: impl Fn(u32, u32) -> bool) -> Vec<bool> {
    let mut mask = Vec::with_capacity((width * height) as usize);
    for y in 0..height {
        for x in 0..width {
            mask.push(f(x, y));
        }
    }
    mask
}

/// Two 12x12 lobes joined by a 4x2 neck on a 32x32 canvas, mesh 1/8
/// (a 4x4 physical domain). 296 active cells.
pub fn dumbbell_32() -> DirichletGraph {
    let lobe_a = |x: u32, y: u32| (2..14).contains(&x) && (10..22).contains(&y);
    let lobe_b = |x: u32, y: u32| (18..30).contains(&x) && (10..22).contains(&y);
    let neck = |x: u32, y: u32| (14..18).contains(&x) && (15..17).contains(&y);
    let spec = GridSpec {
        width: 32,
        height: 32,
        mesh: 1.0 / 8.0,
        mask: mask_from(32, 32, |x, y| lobe_a(x, y) || lobe_b(x, y) || neck(x, y)),
    };
    DirichletGraph::build_grid(&spec).expect("static instance is valid")
}

/// Coarse replica of the dumbbell topology small enough for the exhaustive
/// oracle: two 2x3 lobes joined by a 2-cell neck on an 8x8 canvas, mesh 1/2
/// (the same 4x4 physical domain). 14 active cells, so `3^14 < 10^7`
/// two-chamber assignments.
pub fn dumbbell_coarse() -> DirichletGraph {
    let lobe_a = |x: u32, y: u32| (1..3).contains(&x) && (3..6).contains(&y);
    let lobe_b = |x: u32, y: u32| (5..7).contains(&x) && (3..6).contains(&y);
    let neck = |x: u32, y: u32| (3..5).contains(&x) && y == 4;
    let spec = GridSpec {
        width: 8,
        height: 8,
        mesh: 0.5,
        mask: mask_from(8, 8, |x, y| lobe_a(x, y) || lobe_b(x, y) || neck(x, y)),
    };
    DirichletGraph::build_grid(&spec).expect("static instance is valid")
}

/// Digital disk: cells whose centers lie within radius 14 of the canvas
/// center, on a 32x32 canvas with mesh 1/16. The stored perimeter of the full
/// set is the taxicab boundary length, which exceeds the Euclidean `pi d`.
pub fn disk_32() -> DirichletGraph {
    let spec = GridSpec {
        width: 32,
        height: 32,
        mesh: 1.0 / 16.0,
        mask: mask_from(32, 32, |x, y| {
            let dx = x as f64 + 0.5 - 16.0;
            let dy = y as f64 + 0.5 - 16.0;
            dx * dx + dy * dy <= 14.0 * 14.0
        }),
    };
    DirichletGraph::build_grid(&spec).expect("static instance is valid")
}

/// Seeded random connected-ish test graph: a spanning tree plus up to `n`
/// extra edges, volumes and weights uniform in `[0.1, 10]`, and one of three
/// boundary patterns (dense, sparse, single vertex). Deterministic per seed.
pub fn random_test_graph(seed: u64, min_vertices: usize, max_vertices: usize) -> DirichletGraph {
    assert!(1 <= min_vertices && min_vertices <= max_vertices);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(min_vertices..=max_vertices);
    let mut edges = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for v in 1..n {
        let parent = rng.gen_range(0..v);
        seen.insert((parent, v));
        edges.push(Edge { u: parent, v, w: rng.gen_range(0.1..=10.0) });
    }
    if n >= 2 {
        for _ in 0..rng.gen_range(0..=n) {
            let a = rng.gen_range(0..n);
            let b = rng.gen_range(0..n);
            let (u, v) = (a.min(b), a.max(b));
            if u != v && seen.insert((u, v)) {
                edges.push(Edge { u, v, w: rng.gen_range(0.1..=10.0) });
            }
        }
    }
    let volumes: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..=10.0)).collect();
    let pattern = rng.gen_range(0..3u8);
    let boundary: Vec<f64> = match pattern {
        0 => (0..n).map(|_| rng.gen_range(0.1..=10.0)).collect(),
        1 => (0..n)
            .map(|_| if rng.gen_bool(0.3) { rng.gen_range(0.1..=10.0) } else { 0.0 })
            .collect(),
        _ => {
            let pick = rng.gen_range(0..n);
            (0..n).map(|v| if v == pick { rng.gen_range(0.1..=10.0) } else { 0.0 }).collect()
        }
    };
    let ids: Vec<u64> = (1..=n as u64).collect();
    DirichletGraph::new(ids, volumes, boundary, edges).expect("generated data is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn path_and_square_have_known_shapes() {
        let p = path3();
        assert_eq!(p.len(), 3);
        let sq = unit_square(8);
        assert_eq!(sq.len(), 64);
        // Full-set perimeter of the unit square is its boundary length.
        assert!((sq.total_perimeter() - 4.0).abs() < 1e-12);
        assert!((sq.total_volume() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dumbbell_masks_are_connected_with_expected_counts() {
        let d = dumbbell_32();
        assert_eq!(d.len(), 296);
        assert_eq!(d.components().len(), 1);
        // 46 exposed sides per lobe, 8 along the neck, at mesh 1/8.
        assert!((d.total_perimeter() - 100.0 / 8.0).abs() < 1e-12);
        let c = dumbbell_coarse();
        assert_eq!(c.len(), 14);
        assert_eq!(c.components().len(), 1);
    }

    #[test]
    fn disk_perimeter_brackets_the_euclidean_circle() {
        let d = disk_32();
        assert_eq!(d.components().len(), 1);
        let diameter = 28.0 / 16.0;
        let per = d.total_perimeter();
        assert!(per >= PI * diameter);
        assert!((per - PI * diameter).abs() <= 0.3 * PI * diameter);
        // Digital area converges to the Euclidean one.
        let area = PI * (14.0 / 16.0) * (14.0 / 16.0);
        assert!((d.total_volume() - area).abs() <= 0.05 * area);
    }

    #[test]
    fn random_graphs_are_deterministic_and_valid() {
        for seed in 0..20 {
            let a = random_test_graph(seed, 3, 12);
            let b = random_test_graph(seed, 3, 12);
            assert_eq!(a.len(), b.len());
            assert_eq!(a.edges().len(), b.edges().len());
            for (ea, eb) in a.edges().iter().zip(b.edges()) {
                assert_eq!((ea.u, ea.v), (eb.u, eb.v));
                assert_eq!(ea.w, eb.w);
            }
            for v in 0..a.len() {
                assert!((0.1..=10.0).contains(&a.volume(v)));
                assert!(a.boundary_weight(v) == 0.0 || a.boundary_weight(v) >= 0.1);
            }
        }
    }
}

//! Weighted graphs with Dirichlet boundary weights, the discrete stand-in for
//! an open domain: each vertex carries a volume `m_v > 0` and a boundary
//! coupling `b_v >= 0`, each undirected edge a conductance `w_e > 0`.
//!
//! Perimeter and volume of a vertex set `S`:
//! `per(S) = sum of cut-edge weights + sum of b_v over S`, `vol(S) = sum of m_v over S`.
//! Removing vertices never loses perimeter: their edge weights are absorbed
//! into the boundary term of the reduced domain, so per/vol of subsets of the
//! kept region are preserved exactly.

use crate::error::{Error, Result};

/// Undirected edge between vertex indices with conductance `w > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub w: f64,
}

/// Pixel-grid provenance of a graph: bounding box, mesh size, and the cell
/// (row, col) behind each vertex. Present iff the domain is a grid domain or a
/// reduction of one; grid-only certificates key off this.
#[derive(Debug, Clone, PartialEq)]
pub struct GridInfo {
    pub width: u32,
    pub height: u32,
    pub mesh: f64,
    /// `cells[i]` is the (row, col) of vertex `i`.
    pub cells: Vec<(u32, u32)>,
}

/// Axis-aligned pixel mask defining a grid domain.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub width: u32,
    pub height: u32,
    pub mesh: f64,
    /// Row-major, `true` = active cell; length `width * height`.
    pub mask: Vec<bool>,
}

/// Weighted graph with per-vertex volume and Dirichlet boundary weights.
#[derive(Debug, Clone)]
pub struct DirichletGraph {
    ids: Vec<u64>,
    volumes: Vec<f64>,
    boundary: Vec<f64>,
    edges: Vec<Edge>,
    adj: Vec<Vec<(usize, f64)>>,
    grid: Option<GridInfo>,
}

/// A reduced domain together with the map back to parent vertex indices.
#[derive(Debug, Clone)]
pub struct SubDomain {
    pub graph: DirichletGraph,
    /// `parent_index[i]` is the parent vertex behind sub-vertex `i`.
    pub parent_index: Vec<usize>,
}

impl SubDomain {
    /// Lifts a membership vector over the sub-domain to the parent domain.
    pub fn lift_members(&self, sub_members: &[bool], parent_len: usize) -> Vec<bool> {
        assert_eq!(sub_members.len(), self.parent_index.len());
        let mut out = vec![false; parent_len];
        for (i, &inside) in sub_members.iter().enumerate() {
            if inside {
                out[self.parent_index[i]] = true;
            }
        }
        out
    }
}

impl DirichletGraph {
    /// Builds a validated graph. Vertex ids must be unique; volumes strictly
    /// positive; boundary weights nonnegative; edge weights strictly positive;
    /// self-loops and duplicate edges rejected.
    pub fn new(
        ids: Vec<u64>,
        volumes: Vec<f64>,
        boundary: Vec<f64>,
        edges: Vec<Edge>,
    ) -> Result<Self> {
        let n = ids.len();
        if n == 0 {
            return Err(Error::InvalidDomain("empty vertex set".into()));
        }
        if volumes.len() != n || boundary.len() != n {
            return Err(Error::InvalidDomain(format!(
                "length mismatch: {} ids, {} volumes, {} boundary weights",
                n,
                volumes.len(),
                boundary.len()
            )));
        }
        {
            let mut sorted = ids.clone();
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidDomain("duplicate vertex id".into()));
            }
        }
        for (i, &m) in volumes.iter().enumerate() {
            if !(m > 0.0) || !m.is_finite() {
                return Err(Error::InvalidDomain(format!(
                    "vertex {} has non-positive volume {m}",
                    ids[i]
                )));
            }
        }
        for (i, &b) in boundary.iter().enumerate() {
            if !(b >= 0.0) || !b.is_finite() {
                return Err(Error::InvalidDomain(format!(
                    "vertex {} has negative boundary weight {b}",
                    ids[i]
                )));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for e in &edges {
            if e.u >= n || e.v >= n {
                return Err(Error::InvalidDomain(format!(
                    "edge ({}, {}) references a missing vertex",
                    e.u, e.v
                )));
            }
            if e.u == e.v {
                return Err(Error::InvalidDomain(format!("self-loop at vertex {}", ids[e.u])));
            }
            if !(e.w > 0.0) || !e.w.is_finite() {
                return Err(Error::InvalidDomain(format!(
                    "edge ({}, {}) has non-positive weight {}",
                    ids[e.u], ids[e.v], e.w
                )));
            }
            if !seen.insert((e.u.min(e.v), e.u.max(e.v))) {
                return Err(Error::InvalidDomain(format!(
                    "duplicate edge ({}, {})",
                    ids[e.u], ids[e.v]
                )));
            }
        }
        let mut adj = vec![Vec::new(); n];
        for e in &edges {
            adj[e.u].push((e.v, e.w));
            adj[e.v].push((e.u, e.w));
        }
        Ok(Self { ids, volumes, boundary, edges, adj, grid: None })
    }

    /// Builds the 4-neighbor grid domain of a pixel mask: `m_v = mesh^2`,
    /// interior edge weight `mesh`, `b_v = mesh * (exposed sides of the cell)`.
    /// Per/vol of a cell set then equal area and boundary length of the pixel
    /// union, so the planar isoperimetric inequality holds verbatim.
    pub fn build_grid(spec: &GridSpec) -> Result<Self> {
        let (w, h) = (spec.width as usize, spec.height as usize);
        if w == 0 || h == 0 {
            return Err(Error::InvalidDomain("grid with zero extent".into()));
        }
        if spec.mask.len() != w * h {
            return Err(Error::InvalidDomain(format!(
                "mask length {} does not match {}x{} grid",
                spec.mask.len(),
                spec.width,
                spec.height
            )));
        }
        if !(spec.mesh > 0.0) || !spec.mesh.is_finite() {
            return Err(Error::InvalidDomain(format!("non-positive mesh size {}", spec.mesh)));
        }
        let mesh = spec.mesh;
        let active = |r: isize, c: isize| -> bool {
            r >= 0 && c >= 0 && r < h as isize && c < w as isize && spec.mask[r as usize * w + c as usize]
        };
        let mut index = vec![usize::MAX; w * h];
        let mut ids = Vec::new();
        let mut cells = Vec::new();
        for r in 0..h {
            for c in 0..w {
                if spec.mask[r * w + c] {
                    index[r * w + c] = ids.len();
                    ids.push((r * w + c) as u64);
                    cells.push((r as u32, c as u32));
                }
            }
        }
        if ids.is_empty() {
            return Err(Error::InvalidDomain("mask has no active cells".into()));
        }
        let n = ids.len();
        let volumes = vec![mesh * mesh; n];
        let mut boundary = vec![0.0; n];
        let mut edges = Vec::new();
        for (i, &(r, c)) in cells.iter().enumerate() {
            let (r, c) = (r as isize, c as isize);
            let mut exposed = 0u32;
            for (dr, dc) in [(-1, 0), (1, 0), (0, -1), (0, 1)] {
                let (nr, nc) = (r + dr, c + dc);
                if active(nr, nc) {
                    // Each interior edge once, from the lexicographically smaller cell.
                    if (nr, nc) > (r, c) {
                        let j = index[nr as usize * w + nc as usize];
                        edges.push(Edge { u: i, v: j, w: mesh });
                    }
                } else {
                    exposed += 1;
                }
            }
            boundary[i] = mesh * f64::from(exposed);
        }
        let mut g = Self::new(ids, volumes, boundary, edges)?;
        g.grid = Some(GridInfo { width: spec.width, height: spec.height, mesh, cells });
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn volume(&self, v: usize) -> f64 {
        self.volumes[v]
    }

    pub fn boundary_weight(&self, v: usize) -> f64 {
        self.boundary[v]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.adj[v]
    }

    pub fn grid_info(&self) -> Option<&GridInfo> {
        self.grid.as_ref()
    }

    /// Mesh-dependent factor turning stored (perimeter-scaled) weights into
    /// p-energy weights on grid domains: `mesh^(1-p)`. Arbitrary graphs use
    /// their declared weights unchanged for every p.
    pub fn p_weight_scale(&self, p: f64) -> f64 {
        match &self.grid {
            Some(gi) => gi.mesh.powf(1.0 - p),
            None => 1.0,
        }
    }

    /// Perimeter and volume of a vertex set given as a membership vector.
    pub fn per_vol(&self, members: &[bool]) -> (f64, f64) {
        assert_eq!(members.len(), self.len(), "membership vector length mismatch");
        let mut per = 0.0;
        let mut vol = 0.0;
        for v in 0..self.len() {
            if members[v] {
                per += self.boundary[v];
                vol += self.volumes[v];
            }
        }
        for e in &self.edges {
            if members[e.u] != members[e.v] {
                per += e.w;
            }
        }
        (per, vol)
    }

    /// `per(S)/vol(S)`; requires a nonempty set.
    pub fn ratio(&self, members: &[bool]) -> f64 {
        let (per, vol) = self.per_vol(members);
        assert!(vol > 0.0, "ratio of an empty set");
        per / vol
    }

    /// Total volume of the domain.
    pub fn total_volume(&self) -> f64 {
        self.volumes.iter().sum()
    }

    /// Perimeter of the whole domain (= sum of boundary weights).
    pub fn total_perimeter(&self) -> f64 {
        self.boundary.iter().sum()
    }

    /// Membership vector selecting the whole domain.
    pub fn full_set(&self) -> Vec<bool> {
        vec![true; self.len()]
    }

    /// Reduces the domain to the kept vertices; cross-edges into removed
    /// vertices are absorbed into boundary weights, so per/vol of any subset of
    /// the kept region is unchanged. Grid provenance survives the reduction.
    pub fn restrict(&self, keep: &[bool]) -> Result<SubDomain> {
        assert_eq!(keep.len(), self.len(), "membership vector length mismatch");
        let parent_index: Vec<usize> = (0..self.len()).filter(|&v| keep[v]).collect();
        if parent_index.is_empty() {
            return Err(Error::InvalidDomain("restriction to an empty vertex set".into()));
        }
        let mut to_sub = vec![usize::MAX; self.len()];
        for (i, &v) in parent_index.iter().enumerate() {
            to_sub[v] = i;
        }
        let ids = parent_index.iter().map(|&v| self.ids[v]).collect();
        let volumes = parent_index.iter().map(|&v| self.volumes[v]).collect();
        let mut boundary: Vec<f64> = parent_index.iter().map(|&v| self.boundary[v]).collect();
        let mut edges = Vec::new();
        for e in &self.edges {
            match (keep[e.u], keep[e.v]) {
                (true, true) => edges.push(Edge { u: to_sub[e.u], v: to_sub[e.v], w: e.w }),
                (true, false) => boundary[to_sub[e.u]] += e.w,
                (false, true) => boundary[to_sub[e.v]] += e.w,
                (false, false) => {}
            }
        }
        let mut graph = Self::new(ids, volumes, boundary, edges)?;
        if let Some(gi) = &self.grid {
            graph.grid = Some(GridInfo {
                width: gi.width,
                height: gi.height,
                mesh: gi.mesh,
                cells: parent_index.iter().map(|&v| gi.cells[v]).collect(),
            });
        }
        Ok(SubDomain { graph, parent_index })
    }

    /// Connected components as sorted vertex lists, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.len()];
        let mut out = Vec::new();
        for start in 0..self.len() {
            if seen[start] {
                continue;
            }
            let mut comp = vec![start];
            seen[start] = true;
            let mut head = 0;
            while head < comp.len() {
                let v = comp[head];
                head += 1;
                for &(u, _) in &self.adj[v] {
                    if !seen[u] {
                        seen[u] = true;
                        comp.push(u);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Unweighted BFS hop distance from a source set (`u32::MAX` = unreachable).
    pub fn bfs_hops(&self, sources: &[usize]) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.len()];
        let mut queue = std::collections::VecDeque::new();
        for &s in sources {
            if dist[s] != 0 {
                dist[s] = 0;
                queue.push_back(s);
            }
        }
        while let Some(v) = queue.pop_front() {
            for &(u, _) in &self.adj[v] {
                if dist[u] == u32::MAX {
                    dist[u] = dist[v] + 1;
                    queue.push_back(u);
                }
            }
        }
        dist
    }
}

#[cfg(test)]
mod tests {
    use super::*;

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
    fn rejects_bad_domains() {
        assert!(DirichletGraph::new(vec![], vec![], vec![], vec![]).is_err());
        assert!(DirichletGraph::new(vec![1], vec![0.0], vec![0.0], vec![]).is_err());
        assert!(DirichletGraph::new(vec![1], vec![1.0], vec![-1.0], vec![]).is_err());
        assert!(DirichletGraph::new(vec![1, 1], vec![1.0; 2], vec![0.0; 2], vec![]).is_err());
        assert!(DirichletGraph::new(
            vec![1, 2],
            vec![1.0; 2],
            vec![0.0; 2],
            vec![Edge { u: 0, v: 0, w: 1.0 }]
        )
        .is_err());
        assert!(DirichletGraph::new(
            vec![1, 2],
            vec![1.0; 2],
            vec![0.0; 2],
            vec![Edge { u: 0, v: 1, w: 1.0 }, Edge { u: 1, v: 0, w: 2.0 }]
        )
        .is_err());
    }

    #[test]
    fn per_vol_on_path() {
        let g = path3();
        // Middle vertex: cut both edges, no boundary weight.
        let (per, vol) = g.per_vol(&[false, true, false]);
        assert_eq!((per, vol), (2.0, 1.0));
        // Whole domain: perimeter is the boundary total.
        let (per, vol) = g.per_vol(&g.full_set());
        assert_eq!((per, vol), (2.0, 3.0));
        // Empty set.
        assert_eq!(g.per_vol(&[false; 3]), (0.0, 0.0));
        // Isolated endpoint.
        let (per, vol) = g.per_vol(&[true, false, false]);
        assert_eq!((per, vol), (2.0, 1.0));
    }

    #[test]
    fn isolated_vertex_without_boundary_has_zero_perimeter() {
        let g = DirichletGraph::new(vec![7], vec![2.0], vec![0.0], vec![]).unwrap();
        assert_eq!(g.per_vol(&[true]), (0.0, 2.0));
    }

    #[test]
    fn grid_weights_match_mesh_scaling() {
        // 2x2 full grid, mesh 0.5: every cell exposes two sides.
        let spec = GridSpec { width: 2, height: 2, mesh: 0.5, mask: vec![true; 4] };
        let g = DirichletGraph::build_grid(&spec).unwrap();
        assert_eq!(g.len(), 4);
        assert_eq!(g.edges().len(), 4);
        for v in 0..4 {
            assert_eq!(g.volume(v), 0.25);
            assert_eq!(g.boundary_weight(v), 1.0);
        }
        // per(all) = boundary length 4 * 0.5 * 2 = 4.0, vol = 1.0.
        assert_eq!(g.per_vol(&g.full_set()), (4.0, 1.0));
        // Single cell: two cut edges + two exposed sides = 4 * mesh.
        let (per, vol) = g.per_vol(&[true, false, false, false]);
        assert_eq!((per, vol), (2.0, 0.25));
    }

    #[test]
    fn grid_mask_with_hole() {
        // 3x3 with the center removed: ring of 8 cells.
        let mut mask = vec![true; 9];
        mask[4] = false;
        let spec = GridSpec { width: 3, height: 3, mesh: 1.0, mask };
        let g = DirichletGraph::build_grid(&spec).unwrap();
        assert_eq!(g.len(), 8);
        // Outer boundary 12 + inner boundary 4.
        let (per, vol) = g.per_vol(&g.full_set());
        assert_eq!((per, vol), (16.0, 8.0));
    }

    #[test]
    fn restrict_preserves_per_vol_of_kept_subsets() {
        let g = path3();
        let sub = g.restrict(&[true, true, false]).unwrap();
        // {v2} inside the reduction: cut edge to v1 kept, edge to v3 absorbed.
        let (per, vol) = sub.graph.per_vol(&[false, true]);
        assert_eq!((per, vol), (2.0, 1.0));
        let (per, vol) = g.per_vol(&[false, true, false]);
        assert_eq!((per, vol), (2.0, 1.0));
        // Whole reduced domain keeps its perimeter too.
        assert_eq!(sub.graph.per_vol(&[true, true]), g.per_vol(&[true, true, false]));
        assert_eq!(sub.parent_index, vec![0, 1]);
    }

    #[test]
    fn restrict_keeps_grid_provenance() {
        let spec = GridSpec { width: 2, height: 2, mesh: 0.5, mask: vec![true; 4] };
        let g = DirichletGraph::build_grid(&spec).unwrap();
        let sub = g.restrict(&[true, true, false, false]).unwrap();
        let gi = sub.graph.grid_info().unwrap();
        assert_eq!(gi.mesh, 0.5);
        assert_eq!(gi.cells, vec![(0, 0), (0, 1)]);
    }

    #[test]
    fn components_and_hops() {
        let g = DirichletGraph::new(
            vec![0, 1, 2, 3],
            vec![1.0; 4],
            vec![0.0; 4],
            vec![Edge { u: 0, v: 1, w: 1.0 }, Edge { u: 2, v: 3, w: 1.0 }],
        )
        .unwrap();
        assert_eq!(g.components(), vec![vec![0, 1], vec![2, 3]]);
        let d = g.bfs_hops(&[0]);
        assert_eq!(d, vec![0, 1, u32::MAX, u32::MAX]);
    }
}

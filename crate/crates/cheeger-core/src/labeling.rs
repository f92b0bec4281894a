//! Chamber labelings: assignments of vertices to `N` disjoint chambers, with
//! label 0 meaning unassigned. A labeling whose chambers are all nonempty is an
//! N-cluster.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DirichletGraph, SubDomain};

/// Vertex-to-chamber assignment; chamber labels run `1..=n`, 0 = unassigned.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Labeling {
    pub n: u32,
    pub assignment: Vec<u32>,
}

/// Per-chamber summary attached to solver reports. `h_exact` and `lambda_p`
/// are filled by the solvers that compute them; `sup_u` is the sup of the
/// induced normalized function on the chamber.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChamberStats {
    pub chamber: u32,
    pub size: usize,
    pub per: f64,
    pub vol: f64,
    pub ratio: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_exact: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sup_u: Option<f64>,
}

impl Labeling {
    pub fn unassigned(n: u32, len: usize) -> Self {
        Self { n, assignment: vec![0; len] }
    }

    /// Checks the assignment fits the graph and labels stay in range.
    pub fn validate(&self, g: &DirichletGraph) -> Result<()> {
        if self.assignment.len() != g.len() {
            return Err(Error::InvalidCluster(format!(
                "labeling covers {} vertices, graph has {}",
                self.assignment.len(),
                g.len()
            )));
        }
        if self.n == 0 {
            return Err(Error::InvalidCluster("labeling with zero chambers".into()));
        }
        if let Some(&bad) = self.assignment.iter().find(|&&l| l > self.n) {
            return Err(Error::InvalidCluster(format!(
                "label {bad} out of range (N = {})",
                self.n
            )));
        }
        Ok(())
    }

    /// True iff every chamber is nonempty.
    pub fn is_cluster(&self) -> bool {
        let mut seen = vec![false; self.n as usize];
        for &l in &self.assignment {
            if l > 0 {
                seen[(l - 1) as usize] = true;
            }
        }
        seen.iter().all(|&s| s)
    }

    /// Membership vector of chamber `i` (1-based).
    pub fn chamber_members(&self, i: u32) -> Vec<bool> {
        self.assignment.iter().map(|&l| l == i).collect()
    }

    pub fn chamber_size(&self, i: u32) -> usize {
        self.assignment.iter().filter(|&&l| l == i).count()
    }

    /// Vertices not claimed by any chamber other than `i` (chamber `i` itself
    /// plus unassigned vertices): the domain chamber `i` may expand into.
    pub fn complement_members(&self, i: u32) -> Vec<bool> {
        self.assignment.iter().map(|&l| l == 0 || l == i).collect()
    }

    /// Relabels chambers in order of their smallest vertex index. Empty
    /// chambers sort last, preserving relative order.
    pub fn canonicalize(&self) -> Self {
        let mut first = vec![usize::MAX; self.n as usize];
        for (v, &l) in self.assignment.iter().enumerate() {
            if l > 0 && first[(l - 1) as usize] == usize::MAX {
                first[(l - 1) as usize] = v;
            }
        }
        let mut order: Vec<u32> = (0..self.n).collect();
        order.sort_by_key(|&i| (first[i as usize], i));
        let mut relabel = vec![0u32; self.n as usize + 1];
        for (new_label, &old) in order.iter().enumerate() {
            relabel[(old + 1) as usize] = new_label as u32 + 1;
        }
        Self {
            n: self.n,
            assignment: self.assignment.iter().map(|&l| relabel[l as usize]).collect(),
        }
    }
}

/// Per-chamber perimeter/volume/ratio of a cluster; errors on empty chambers.
pub fn evaluate_cluster(g: &DirichletGraph, labeling: &Labeling) -> Result<Vec<ChamberStats>> {
    labeling.validate(g)?;
    let mut stats = Vec::with_capacity(labeling.n as usize);
    for i in 1..=labeling.n {
        let members = labeling.chamber_members(i);
        let (per, vol) = g.per_vol(&members);
        if vol <= 0.0 {
            return Err(Error::InvalidCluster(format!("chamber {i} is empty")));
        }
        stats.push(ChamberStats {
            chamber: i,
            size: members.iter().filter(|&&m| m).count(),
            per,
            vol,
            ratio: per / vol,
            h_exact: None,
            lambda_p: None,
            sup_u: None,
        });
    }
    Ok(stats)
}

/// The indicator functions `u_i = 1_{chamber i} / vol_i`; each has
/// total-variation-to-L1 ratio equal to the chamber's per/vol ratio.
pub fn cluster_to_function(g: &DirichletGraph, labeling: &Labeling) -> Result<Vec<Vec<f64>>> {
    let stats = evaluate_cluster(g, labeling)?;
    let mut out = Vec::with_capacity(stats.len());
    for s in &stats {
        let u = labeling
            .assignment
            .iter()
            .map(|&l| if l == s.chamber { 1.0 / s.vol } else { 0.0 })
            .collect();
        out.push(u);
    }
    Ok(out)
}

/// The domain left after removing every chamber except `i`: chamber `i`'s
/// vertices plus the unassigned ones, with cross-edges absorbed as boundary.
pub fn complement_domain(g: &DirichletGraph, labeling: &Labeling, i: u32) -> Result<SubDomain> {
    labeling.validate(g)?;
    if i == 0 || i > labeling.n {
        return Err(Error::ChamberIndex { index: i, n: labeling.n });
    }
    g.restrict(&labeling.complement_members(i))
}

/// Volume of the symmetric difference of two vertex sets.
pub fn symmetric_difference_volume(g: &DirichletGraph, a: &[bool], b: &[bool]) -> f64 {
    assert_eq!(a.len(), g.len());
    assert_eq!(b.len(), g.len());
    (0..g.len()).filter(|&v| a[v] != b[v]).map(|v| g.volume(v)).sum()
}

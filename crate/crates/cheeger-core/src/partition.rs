//! N-chamber partition solvers: an exhaustive enumeration oracle for small
//! instances, the 1-adjustment alternating solver for the ratio objective, and
//! the eigenfunction-support alternating solver for the spectral objective.

use std::collections::HashMap;
use std::f64::consts::PI;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::cheeger::{cheeger_dinkelbach, DEFAULT_DINKELBACH_TOL};
use crate::eigen::{cheeger_bound_gap, lambda_1p, EigenOptions, P_RANGE};
use crate::error::{Error, Result};
use crate::graph::DirichletGraph;
use crate::labeling::{complement_domain, evaluate_cluster, ChamberStats, Labeling};
use crate::phi::PhiSpec;

/// Budget for the exhaustive oracle: `(N+1)^|V|` assignments at most.
pub const BRUTE_FORCE_CAP: u128 = 10_000_000;

/// Arithmetic slack granted to hard certificate comparisons.
pub const CERTIFICATE_SLACK: f64 = 1e-12;

/// Which per-chamber score feeds the reference function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "objective", rename_all = "snake_case")]
pub enum ObjectiveKind {
    /// Perimeter/volume ratio of each chamber.
    H,
    /// Cheeger constant of each chamber taken as a standalone domain.
    L11,
    /// First p-eigenvalue of each chamber taken as a standalone domain.
    Lp { p: f64 },
    /// Functional form of the spectral objective; scored like `Lp`, reported
    /// with eigenfunctions instead of indicators.
    LambdaP { p: f64 },
}

impl ObjectiveKind {
    pub fn p(&self) -> Option<f64> {
        match self {
            ObjectiveKind::Lp { p } | ObjectiveKind::LambdaP { p } => Some(*p),
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        if let Some(p) = self.p() {
            if !(p > P_RANGE.0 && p <= P_RANGE.1) {
                return Err(Error::InvalidParameter(format!(
                    "exponent p = {p} outside ({}, {}]",
                    P_RANGE.0, P_RANGE.1
                )));
            }
        }
        Ok(())
    }
}

/// The bound families attached to solver reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    /// Isoperimetric lower bound on the objective value:
    /// `value >= 2 N delta sqrt(pi / vol(V))`.
    ObjectiveLowerBound,
    /// Per-chamber volume lower bound `vol_i >= pi (2 delta / value)^2`.
    ChamberVolume,
    /// Sup bound on the induced unit-mass indicator:
    /// `1/vol_i <= (value / (2 delta))^2 / pi`.
    SupNorm,
    /// Spectral lower bound `lambda_i >= (h_i / p)^p` per chamber.
    EigenLowerBound,
}

/// One recomputable bound. `satisfied` is `None` when the bound is
/// informational only (non-grid domains, or constants the theory reports
/// without asserting).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Certificate {
    pub kind: CertificateKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chamber: Option<u32>,
    pub bound: f64,
    pub actual: f64,
    pub satisfied: Option<bool>,
}

/// Full solver output: the minimizing labeling, its recomputable value and
/// per-chamber statistics, adjustment status, bound certificates, and enough
/// telemetry to replay the run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub objective_kind: ObjectiveKind,
    pub phi: PhiSpec,
    pub value: f64,
    pub labeling: Labeling,
    pub chamber_stats: Vec<ChamberStats>,
    pub one_adjusted: bool,
    pub adjustment_deviation: f64,
    pub certificates: Vec<Certificate>,
    pub sweeps: usize,
    pub restarts_used: usize,
    pub rng_seed: u64,
    pub objective_trace: Vec<f64>,
    pub converged: bool,
    /// Chamber eigenfunctions extended by zero to the whole domain; present
    /// only on spectral reports.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eigenfunctions: Option<Vec<Vec<f64>>>,
}

/// Scores every chamber of a cluster under the objective: ratios for `H`,
/// standalone Cheeger constants for `L11`, first p-eigenvalues for the
/// spectral kinds. The standalone view absorbs edges leaving a chamber into
/// its boundary weight, so scores never depend on the other chambers.
pub fn chamber_scores(
    g: &DirichletGraph,
    labeling: &Labeling,
    kind: ObjectiveKind,
    eigen_opts: &EigenOptions,
) -> Result<Vec<f64>> {
    kind.validate()?;
    let stats = evaluate_cluster(g, labeling)?;
    match kind {
        ObjectiveKind::H => Ok(stats.iter().map(|s| s.ratio).collect()),
        ObjectiveKind::L11 => (1..=labeling.n)
            .map(|i| {
                let sub = g.restrict(&labeling.chamber_members(i))?;
                Ok(cheeger_dinkelbach(&sub.graph, DEFAULT_DINKELBACH_TOL)?.h)
            })
            .collect(),
        ObjectiveKind::Lp { p } | ObjectiveKind::LambdaP { p } => (1..=labeling.n)
            .map(|i| {
                let sub = g.restrict(&labeling.chamber_members(i))?;
                Ok(lambda_1p(&sub.graph, p, eigen_opts)?.lambda)
            })
            .collect(),
    }
}

/// Scores an existing clustering under `kind` and assembles a full report
/// for it, certificates included. `seed` is carried through for provenance.
pub fn report_for_labeling(
    g: &DirichletGraph,
    labeling: &Labeling,
    kind: ObjectiveKind,
    phi: &PhiSpec,
    eigen_opts: &EigenOptions,
    seed: u64,
) -> Result<SolveReport> {
    labeling.validate(g)?;
    if labeling.n != phi.n {
        return Err(Error::InvalidParameter(format!(
            "labeling has {} chambers, reference function expects {}",
            labeling.n, phi.n
        )));
    }
    let scores = chamber_scores(g, labeling, kind, eigen_opts)?;
    let value = phi.eval(&scores);
    assemble_report(
        g,
        kind,
        phi,
        labeling.clone(),
        scores,
        1e-9,
        0,
        0,
        seed,
        vec![value],
        true,
        None,
        None,
    )
}

/// Max over chambers of `|ratio_i - h(complement_i)|` where `complement_i` is
/// the domain left after deleting the other chambers; the flag is true when
/// every chamber is an exact Cheeger set of its complement (up to `tol`).
pub fn is_one_adjusted(g: &DirichletGraph, labeling: &Labeling, tol: f64) -> Result<(bool, f64)> {
    let stats = evaluate_cluster(g, labeling)?;
    let mut max_dev = 0.0f64;
    for s in &stats {
        let sub = complement_domain(g, labeling, s.chamber)?;
        let h = cheeger_dinkelbach(&sub.graph, DEFAULT_DINKELBACH_TOL)?.h;
        max_dev = max_dev.max((s.ratio - h).abs());
    }
    Ok((max_dev <= tol, max_dev))
}

/// Replaces chamber `i` by an exact Cheeger set of its complement domain
/// (chamber `i` plus all unassigned vertices). For increasing reference
/// functions this never increases the objective, because the old chamber is a
/// feasible competitor in the replacement problem.
pub fn one_adjust_sweep(
    g: &DirichletGraph,
    labeling: &Labeling,
    phi: &PhiSpec,
    i: u32,
) -> Result<(Labeling, bool)> {
    if !phi.claims_increasing() {
        return Err(Error::InvalidParameter(
            "1-adjustment requires an increasing reference function".into(),
        ));
    }
    let sub = complement_domain(g, labeling, i)?;
    let res = cheeger_dinkelbach(&sub.graph, DEFAULT_DINKELBACH_TOL)?;
    let members = sub.lift_members(&res.set, g.len());
    let mut assignment = labeling.assignment.clone();
    for (v, a) in assignment.iter_mut().enumerate() {
        if members[v] {
            *a = i;
        } else if *a == i {
            *a = 0;
        }
    }
    let changed = assignment != labeling.assignment;
    Ok((Labeling { n: labeling.n, assignment }, changed))
}

/// Replaces every chamber by a Cheeger set of itself (standalone view). The
/// per-chamber Cheeger constants are unchanged and the new chambers are
/// subsets of the old ones; afterwards each chamber attains its own constant.
pub fn shrink_to_cheeger_subsets(g: &DirichletGraph, labeling: &Labeling) -> Result<Labeling> {
    labeling.validate(g)?;
    let mut assignment = vec![0u32; g.len()];
    for i in 1..=labeling.n {
        let sub = g.restrict(&labeling.chamber_members(i))?;
        let res = cheeger_dinkelbach(&sub.graph, DEFAULT_DINKELBACH_TOL)?;
        let members = sub.lift_members(&res.set, g.len());
        for (v, &m) in members.iter().enumerate() {
            if m {
                assignment[v] = i;
            }
        }
    }
    Ok(Labeling { n: labeling.n, assignment })
}

/// Chamber `i` of the result is the strict superlevel set `{u_i > t_i}`. The
/// inputs must be nonnegative with pairwise disjoint supports, and every
/// superlevel set must be nonempty.
pub fn extract_levelsets(u_list: &[Vec<f64>], t_list: &[f64]) -> Result<Labeling> {
    if u_list.is_empty() || u_list.len() != t_list.len() {
        return Err(Error::InvalidParameter(format!(
            "{} functions against {} thresholds",
            u_list.len(),
            t_list.len()
        )));
    }
    let len = u_list[0].len();
    let n = u_list.len() as u32;
    let mut assignment = vec![0u32; len];
    for (idx, (u, &t)) in u_list.iter().zip(t_list).enumerate() {
        if u.len() != len {
            return Err(Error::InvalidParameter("function lengths differ".into()));
        }
        if !(t >= 0.0) {
            return Err(Error::InvalidParameter(format!("negative threshold {t}")));
        }
        let mut any = false;
        for (v, &x) in u.iter().enumerate() {
            if x < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "function {idx} negative at vertex {v}"
                )));
            }
            if x > 0.0 && assignment[v] != 0 {
                return Err(Error::InvalidParameter(format!(
                    "supports of functions overlap at vertex {v}"
                )));
            }
            if x > t {
                assignment[v] = idx as u32 + 1;
                any = true;
            }
        }
        if !any {
            return Err(Error::InvalidCluster(format!(
                "superlevel set {{u_{} > {t}}} is empty",
                idx + 1
            )));
        }
    }
    Ok(Labeling { n, assignment })
}

/// Builds the two perimeter-derived hard bounds plus the sup-norm bound for a
/// ratio-type report. The comparisons are asserted (`satisfied = Some`) only
/// on grid domains, where the stored perimeter dominates the Euclidean one
/// and the planar isoperimetric inequality applies verbatim.
fn ratio_certificates(
    g: &DirichletGraph,
    phi: &PhiSpec,
    value: f64,
    stats: &[ChamberStats],
) -> Vec<Certificate> {
    let Some(delta) = phi.delta() else {
        return Vec::new();
    };
    let on_grid = g.grid_info().is_some();
    let slack = |bound: f64| bound - CERTIFICATE_SLACK * bound.abs().max(1.0);
    let mut certs = Vec::new();
    let n = stats.len() as f64;
    let lower = 2.0 * n * delta * (PI / g.total_volume()).sqrt();
    certs.push(Certificate {
        kind: CertificateKind::ObjectiveLowerBound,
        chamber: None,
        bound: lower,
        actual: value,
        satisfied: on_grid.then(|| value >= slack(lower)),
    });
    let vol_bound = PI * (2.0 * delta / value).powi(2);
    let sup_bound = (value / (2.0 * delta)).powi(2) / PI;
    for s in stats {
        certs.push(Certificate {
            kind: CertificateKind::ChamberVolume,
            chamber: Some(s.chamber),
            bound: vol_bound,
            actual: s.vol,
            satisfied: on_grid.then(|| s.vol >= slack(vol_bound)),
        });
        certs.push(Certificate {
            kind: CertificateKind::SupNorm,
            chamber: Some(s.chamber),
            bound: sup_bound,
            actual: 1.0 / s.vol,
            satisfied: on_grid.then(|| 1.0 / s.vol <= sup_bound + CERTIFICATE_SLACK * sup_bound.max(1.0)),
        });
    }
    certs
}

/// Best constant of the Sobolev embedding `||u||_{p*} <= C ||grad u||_p` in
/// the plane (`1 < p < 2`); its reciprocal tends to the planar isoperimetric
/// constant `2 sqrt(pi)` as p -> 1.
pub(crate) fn sobolev_constant_2d(p: f64) -> f64 {
    let d = 2.0f64;
    (1.0 / PI.sqrt())
        * d.powf(-1.0 / p)
        * ((p - 1.0) / (d - p)).powf(1.0 - 1.0 / p)
        * (gamma(1.0 + d / 2.0) * gamma(d) / (gamma(d / p) * gamma(1.0 + d - d / p)))
            .powf(1.0 / d)
}

/// Sup-norm constant for a p-eigenfunction on a planar domain (`p < 2`):
/// depends only on the eigenvalue and the embedding constant.
pub(crate) fn eigenfunction_sup_constant(p: f64, lambda: f64) -> f64 {
    let d = 2.0;
    let c = 1.0 / sobolev_constant_2d(p);
    (d / (d - p)).powf(d * (d - p) * (p - 1.0) / p.powi(3))
        * (lambda / c.powf(p)).powf(d / p.powi(2))
}

/// Spectral counterparts of the ratio certificates for eigenvalue-type
/// reports: the per-chamber Cheeger lower bound `(h_i/p)^p`, asserted on
/// grids up to a 2 percent mesh slack, and the recorded sup-norm constant
/// for `p < 2` (informational; the comparison is never a verdict).
fn eigen_certificates(
    g: &DirichletGraph,
    p: f64,
    labeling: &Labeling,
    stats: &[ChamberStats],
) -> Result<Vec<Certificate>> {
    let on_grid = g.grid_info().is_some();
    let mut certs = Vec::new();
    for s in stats {
        let Some(lambda) = s.lambda_p else { continue };
        let sub = g.restrict(&labeling.chamber_members(s.chamber))?;
        let gap = cheeger_bound_gap(&sub.graph, p, lambda)?;
        certs.push(Certificate {
            kind: CertificateKind::EigenLowerBound,
            chamber: Some(s.chamber),
            bound: gap.bound,
            actual: lambda,
            satisfied: on_grid.then(|| gap.gap >= -0.02 * lambda),
        });
        if p < 2.0 {
            certs.push(Certificate {
                kind: CertificateKind::SupNorm,
                chamber: Some(s.chamber),
                bound: eigenfunction_sup_constant(p, lambda),
                actual: s.sup_u.unwrap_or(1.0 / s.vol),
                satisfied: None,
            });
        }
    }
    Ok(certs)
}

#[allow(clippy::too_many_arguments)]
fn assemble_report(
    g: &DirichletGraph,
    kind: ObjectiveKind,
    phi: &PhiSpec,
    labeling: Labeling,
    scores: Vec<f64>,
    adjust_tol: f64,
    sweeps: usize,
    restarts_used: usize,
    rng_seed: u64,
    objective_trace: Vec<f64>,
    converged: bool,
    eigen_sups: Option<Vec<f64>>,
    eigenfunctions: Option<Vec<Vec<f64>>>,
) -> Result<SolveReport> {
    let mut stats = evaluate_cluster(g, &labeling)?;
    for (i, s) in stats.iter_mut().enumerate() {
        match kind {
            ObjectiveKind::H => {}
            ObjectiveKind::L11 => s.h_exact = Some(scores[i]),
            ObjectiveKind::Lp { .. } | ObjectiveKind::LambdaP { .. } => {
                s.lambda_p = Some(scores[i])
            }
        }
        s.sup_u = Some(match &eigen_sups {
            Some(sups) => sups[i],
            None => 1.0 / s.vol,
        });
    }
    let value = phi.eval(&scores);
    let (one_adjusted, adjustment_deviation) = is_one_adjusted(g, &labeling, adjust_tol)?;
    let certificates = match kind {
        ObjectiveKind::H | ObjectiveKind::L11 => ratio_certificates(g, phi, value, &stats),
        ObjectiveKind::Lp { p } | ObjectiveKind::LambdaP { p } => {
            eigen_certificates(g, p, &labeling, &stats)?
        }
    };
    Ok(SolveReport {
        objective_kind: kind,
        phi: phi.clone(),
        value,
        labeling,
        chamber_stats: stats,
        one_adjusted,
        adjustment_deviation,
        certificates,
        sweeps,
        restarts_used,
        rng_seed,
        objective_trace,
        converged,
        eigenfunctions,
    })
}

/// State for the exhaustive assignment enumeration. Perimeter and volume of
/// every chamber are maintained incrementally; an edge's cut contribution is
/// accounted for when its later endpoint is assigned.
struct Enumerator<'a> {
    g: &'a DirichletGraph,
    n: usize,
    kind: ObjectiveKind,
    phi: &'a PhiSpec,
    canonical: bool,
    eigen_opts: EigenOptions,
    asg: Vec<u32>,
    per: Vec<f64>,
    vol: Vec<f64>,
    counts: Vec<usize>,
    masks: Vec<u32>,
    used: usize,
    memo: HashMap<u32, f64>,
    best: Option<(f64, Vec<f64>, Vec<u32>)>,
}

impl Enumerator<'_> {
    fn apply(&mut self, v: usize, label: u32, sign: f64) {
        if label > 0 {
            let li = label as usize;
            self.per[li] += sign * self.g.boundary_weight(v);
            self.vol[li] += sign * self.g.volume(v);
        }
        for &(x, w) in self.g.neighbors(v) {
            if x < v {
                let lx = self.asg[x];
                if lx != label {
                    if label > 0 {
                        self.per[label as usize] += sign * w;
                    }
                    if lx > 0 {
                        self.per[lx as usize] += sign * w;
                    }
                }
            }
        }
    }

    fn score_mask(&mut self, mask: u32) -> Result<f64> {
        if let Some(&s) = self.memo.get(&mask) {
            return Ok(s);
        }
        let members: Vec<bool> = (0..self.g.len()).map(|v| mask >> v & 1 == 1).collect();
        let sub = self.g.restrict(&members)?;
        let s = match self.kind {
            ObjectiveKind::H => unreachable!("ratio scores are maintained incrementally"),
            ObjectiveKind::L11 => cheeger_dinkelbach(&sub.graph, DEFAULT_DINKELBACH_TOL)?.h,
            ObjectiveKind::Lp { p } | ObjectiveKind::LambdaP { p } => {
                lambda_1p(&sub.graph, p, &self.eigen_opts)?.lambda
            }
        };
        self.memo.insert(mask, s);
        Ok(s)
    }

    fn leaf(&mut self) -> Result<()> {
        if self.counts[1..].iter().any(|&c| c == 0) {
            return Ok(());
        }
        let scores: Vec<f64> = match self.kind {
            ObjectiveKind::H => (1..=self.n).map(|i| self.per[i] / self.vol[i]).collect(),
            _ => {
                let masks = self.masks.clone();
                masks[1..=self.n]
                    .iter()
                    .map(|&m| self.score_mask(m))
                    .collect::<Result<_>>()?
            }
        };
        let value = self.phi.eval(&scores);
        let mut sorted = scores;
        sorted.sort_by(|a, b| b.total_cmp(a));
        // Tie-break: value, then the descending score vector lexicographically,
        // then first-found (the lexicographically least assignment).
        let better = match &self.best {
            None => true,
            Some((bv, bs, _)) => match value.total_cmp(bv) {
                std::cmp::Ordering::Less => true,
                std::cmp::Ordering::Greater => false,
                std::cmp::Ordering::Equal => {
                    matches!(
                        sorted
                            .iter()
                            .zip(bs)
                            .map(|(a, b)| a.total_cmp(b))
                            .find(|o| *o != std::cmp::Ordering::Equal),
                        Some(std::cmp::Ordering::Less)
                    )
                }
            },
        };
        if better {
            self.best = Some((value, sorted, self.asg.clone()));
        }
        Ok(())
    }

    fn recurse(&mut self, v: usize) -> Result<()> {
        let remaining = self.g.len() - v;
        let needed = self.counts[1..=self.n].iter().filter(|&&c| c == 0).count();
        if needed > remaining {
            return Ok(());
        }
        if v == self.g.len() {
            return self.leaf();
        }
        let top = if self.canonical { self.n.min(self.used + 1) } else { self.n };
        for label in 0..=top as u32 {
            self.apply(v, label, 1.0);
            self.asg[v] = label;
            let li = label as usize;
            let fresh = label > 0 && self.counts[li] == 0;
            if label > 0 {
                self.counts[li] += 1;
                self.masks[li] |= 1 << v;
            }
            if fresh {
                self.used += 1;
            }
            self.recurse(v + 1)?;
            if fresh {
                self.used -= 1;
            }
            if label > 0 {
                self.counts[li] -= 1;
                self.masks[li] &= !(1 << v);
            }
            self.asg[v] = 0;
            self.apply(v, label, -1.0);
        }
        Ok(())
    }
}

/// Exhaustively minimizes the objective over every labeling with all chambers
/// nonempty. For symmetric reference functions only canonical assignments
/// (chamber labels in order of first use) are enumerated, quotienting out the
/// label-permutation symmetry. Ties are broken toward the smaller descending
/// score vector, then the lexicographically least assignment.
pub fn brute_force(
    g: &DirichletGraph,
    n: u32,
    phi: &PhiSpec,
    kind: ObjectiveKind,
) -> Result<SolveReport> {
    kind.validate()?;
    if n == 0 || phi.n != n {
        return Err(Error::InvalidParameter(format!(
            "chamber count {n} does not match reference function arity {}",
            phi.n
        )));
    }
    let total = (n as u128 + 1)
        .checked_pow(g.len() as u32)
        .unwrap_or(u128::MAX);
    if total > BRUTE_FORCE_CAP {
        return Err(Error::SizeCap {
            what: "brute-force assignment enumeration",
            size: total,
            cap: BRUTE_FORCE_CAP,
        });
    }
    if (n as usize) > g.len() {
        return Err(Error::NoValidSeed(format!(
            "{n} chambers on {} vertices",
            g.len()
        )));
    }
    let mut e = Enumerator {
        g,
        n: n as usize,
        kind,
        phi,
        canonical: phi.is_symmetric(),
        eigen_opts: EigenOptions::default(),
        asg: vec![0; g.len()],
        per: vec![0.0; n as usize + 1],
        vol: vec![0.0; n as usize + 1],
        counts: vec![0; n as usize + 1],
        masks: vec![0; n as usize + 1],
        used: 0,
        memo: HashMap::new(),
        best: None,
    };
    e.recurse(0)?;
    let (_, _, assignment) = e.best.expect("at least one valid labeling exists");
    let eigen_opts = e.eigen_opts;
    let labeling = Labeling { n, assignment };
    let scores = chamber_scores(g, &labeling, kind, &eigen_opts)?;
    let value = phi.eval(&scores);
    assemble_report(
        g,
        kind,
        phi,
        labeling,
        scores,
        1e-9,
        0,
        0,
        0,
        vec![value],
        true,
        None,
        None,
    )
}

/// Seed placement strategy for the multi-start solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Seeding {
    /// Random start vertex, then greedy hop-distance maximization.
    FarthestFirst,
    /// Uniform draws rejected until pairwise distinct.
    Random,
}

#[derive(Debug, Clone)]
pub struct SolveHOptions {
    pub restarts: u32,
    pub seeding: Seeding,
    pub max_sweeps: u32,
    pub tol: f64,
    pub seed: u64,
    pub randomized_order: bool,
}

impl Default for SolveHOptions {
    fn default() -> Self {
        Self {
            restarts: 16,
            seeding: Seeding::FarthestFirst,
            max_sweeps: 50,
            tol: 1e-9,
            seed: 0,
            randomized_order: false,
        }
    }
}

fn restart_rng(seed: u64, restart: u32) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_add((restart as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

/// Places `n` distinct singleton chambers.
fn seed_labeling(
    g: &DirichletGraph,
    n: u32,
    seeding: Seeding,
    rng: &mut ChaCha8Rng,
) -> Result<Labeling> {
    let len = g.len();
    if (n as usize) > len {
        return Err(Error::NoValidSeed(format!("{n} chambers on {len} vertices")));
    }
    let mut picks: Vec<usize> = Vec::with_capacity(n as usize);
    match seeding {
        Seeding::Random => {
            let mut tries = 0usize;
            while picks.len() < n as usize {
                let v = rng.gen_range(0..len);
                if !picks.contains(&v) {
                    picks.push(v);
                }
                tries += 1;
                if tries > 1000 * (n as usize) {
                    return Err(Error::NoValidSeed("rejection sampling stalled".into()));
                }
            }
        }
        Seeding::FarthestFirst => {
            picks.push(rng.gen_range(0..len));
            while picks.len() < n as usize {
                let hops = g.bfs_hops(&picks);
                let mut far = None;
                for v in 0..len {
                    if picks.contains(&v) {
                        continue;
                    }
                    // Unreachable vertices (u32::MAX) count as farthest; ties
                    // keep the smallest index.
                    if far.map_or(true, |f: usize| hops[v] > hops[f]) {
                        far = Some(v);
                    }
                }
                picks.push(far.expect("n <= |V| leaves an unpicked vertex"));
            }
        }
    }
    // Nearest-seed fill: every vertex joins the closest seed's chamber (ties
    // to the lower chamber index). Singleton seeds would let the first
    // 1-adjustment move swallow the whole domain; balanced territories keep
    // every chamber alive. Vertices unreachable from all seeds stay out.
    let mut assignment = vec![0u32; len];
    let all_hops: Vec<Vec<u32>> = picks.iter().map(|&v| g.bfs_hops(&[v])).collect();
    for (v, slot) in assignment.iter_mut().enumerate() {
        let mut best: Option<(u32, usize)> = None;
        for (i, hops) in all_hops.iter().enumerate() {
            if hops[v] != u32::MAX && best.is_none_or(|(bh, _)| hops[v] < bh) {
                best = Some((hops[v], i));
            }
        }
        if let Some((_, i)) = best {
            *slot = i as u32 + 1;
        }
    }
    Ok(Labeling { n, assignment })
}

fn ratio_objective(g: &DirichletGraph, labeling: &Labeling, phi: &PhiSpec) -> Result<f64> {
    let stats = evaluate_cluster(g, labeling)?;
    let scores: Vec<f64> = stats.iter().map(|s| s.ratio).collect();
    Ok(phi.eval(&scores))
}

/// Multi-start 1-adjustment solver for the ratio objective: each restart
/// seeds `N` nearest-seed territories and cycles chamber replacements until a
/// fixed point. Every replacement is objective-nonincreasing for increasing
/// reference functions, and a fixed point is a 1-adjusted cluster. Returns
/// the best restart; upper bound on the true optimum by construction.
pub fn solve_h(
    g: &DirichletGraph,
    n: u32,
    phi: &PhiSpec,
    opts: &SolveHOptions,
) -> Result<SolveReport> {
    if n == 0 || phi.n != n {
        return Err(Error::InvalidParameter(format!(
            "chamber count {n} does not match reference function arity {}",
            phi.n
        )));
    }
    if !phi.claims_increasing() {
        return Err(Error::InvalidParameter(
            "the multi-start solver requires an increasing reference function".into(),
        ));
    }
    if (n as usize) > g.len() {
        return Err(Error::NoValidSeed(format!("{n} chambers on {} vertices", g.len())));
    }
    let restarts = opts.restarts.max(1);
    let runs: Result<Vec<(Labeling, Vec<f64>, usize, bool)>> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = restart_rng(opts.seed, r);
            // Restart 0 uses the configured seeding; later restarts draw
            // random seed sets so symmetric domains still get diversity.
            let seeding = if r == 0 { opts.seeding } else { Seeding::Random };
            let mut lab = seed_labeling(g, n, seeding, &mut rng)?;
            let mut trace = vec![ratio_objective(g, &lab, phi)?];
            let mut sweeps = 0usize;
            let mut fixed = false;
            for _ in 0..opts.max_sweeps {
                let mut order: Vec<u32> = (1..=n).collect();
                if opts.randomized_order {
                    order.shuffle(&mut rng);
                }
                let mut changed = false;
                for &i in &order {
                    let (next, ch) = one_adjust_sweep(g, &lab, phi, i)?;
                    lab = next;
                    changed |= ch;
                }
                sweeps += 1;
                trace.push(ratio_objective(g, &lab, phi)?);
                if !changed {
                    fixed = true;
                    break;
                }
            }
            Ok((lab, trace, sweeps, fixed))
        })
        .collect();
    let runs = runs?;
    let best = runs
        .iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| {
            a.1.last()
                .unwrap()
                .total_cmp(b.1.last().unwrap())
                .then(ia.cmp(ib))
        })
        .map(|(_, run)| run.clone())
        .expect("at least one restart ran");
    let (mut labeling, trace, sweeps, fixed) = best;
    if phi.is_symmetric() {
        labeling = labeling.canonicalize();
    }
    let scores = chamber_scores(g, &labeling, ObjectiveKind::H, &EigenOptions::default())?;
    assemble_report(
        g,
        ObjectiveKind::H,
        phi,
        labeling,
        scores,
        opts.tol,
        sweeps,
        restarts as usize,
        opts.seed,
        trace,
        fixed,
        None,
        None,
    )
}

#[derive(Debug, Clone)]
pub struct SolveLpOptions {
    pub restarts: u32,
    pub max_iters: u32,
    pub tol: f64,
    pub seed: u64,
    pub seeding: Seeding,
    /// Warm-start labeling used by restart 0 when present.
    pub initial: Option<Labeling>,
}

impl Default for SolveLpOptions {
    fn default() -> Self {
        Self {
            restarts: 4,
            max_iters: 60,
            tol: 1e-6,
            seed: 0,
            seeding: Seeding::FarthestFirst,
            initial: None,
        }
    }
}

struct LpRun {
    labeling: Labeling,
    lambdas: Vec<f64>,
    u_ext: Vec<Vec<f64>>,
    trace: Vec<f64>,
    iters: usize,
    converged: bool,
}

fn run_lp_restart(
    g: &DirichletGraph,
    n: u32,
    p: f64,
    phi: &PhiSpec,
    opts: &SolveLpOptions,
    restart: u32,
) -> Result<Option<LpRun>> {
    let mut rng = restart_rng(opts.seed, restart);
    let mut lab = match (&opts.initial, restart) {
        (Some(init), 0) => init.clone(),
        (_, 0) => seed_labeling(g, n, opts.seeding, &mut rng)?,
        _ => seed_labeling(g, n, Seeding::Random, &mut rng)?,
    };
    let eigen_opts = EigenOptions { tol: opts.tol, ..EigenOptions::default() };
    let len = g.len();
    let solve_chambers = |lab: &Labeling| -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let mut lambdas = vec![0.0; n as usize];
        let mut u_ext = vec![vec![0.0; len]; n as usize];
        for i in 0..n as usize {
            let sub = g.restrict(&lab.chamber_members(i as u32 + 1))?;
            let pair = lambda_1p(&sub.graph, p, &eigen_opts)?;
            lambdas[i] = pair.lambda;
            for (k, &pv) in sub.parent_index.iter().enumerate() {
                u_ext[i][pv] = pair.u[k];
            }
        }
        Ok((lambdas, u_ext))
    };
    let mut trace = Vec::new();
    let mut iters = 0usize;
    let mut converged = false;
    loop {
        let (lambdas, u_ext) = solve_chambers(&lab)?;
        trace.push(phi.eval(&lambdas));
        if iters >= opts.max_iters as usize {
            return Ok(Some(LpRun { labeling: lab, lambdas, u_ext, trace, iters, converged }));
        }
        // Reassignment against the frozen eigenfunctions (extended by zero).
        let mut next = lab.assignment.clone();
        for v in 0..len {
            let cur = lab.assignment[v];
            if cur > 0 {
                // Move only to a strictly dominating unique maximizer; any tie
                // at the top keeps the current label.
                let top = (0..n as usize).map(|i| u_ext[i][v]).fold(f64::NEG_INFINITY, f64::max);
                let winners: Vec<usize> =
                    (0..n as usize).filter(|&i| u_ext[i][v] == top).collect();
                if winners.len() == 1 && !winners.contains(&(cur as usize - 1)) {
                    next[v] = winners[0] as u32 + 1;
                }
            } else {
                // Unassigned vertices join the unique winner of the one-ring
                // dilated fields, if any is positive there; ties stay out.
                let mut best = 0.0f64;
                let mut arg = 0u32;
                let mut ties = 0usize;
                for i in 0..n as usize {
                    let mut d = u_ext[i][v];
                    for &(x, _) in g.neighbors(v) {
                        d = d.max(u_ext[i][x]);
                    }
                    if d > best {
                        best = d;
                        arg = i as u32 + 1;
                        ties = 1;
                    } else if d == best && d > 0.0 {
                        ties += 1;
                    }
                }
                if best > 0.0 && ties == 1 {
                    next[v] = arg;
                }
            }
        }
        let next = Labeling { n, assignment: next };
        if !next.is_cluster() {
            return Ok(None); // A chamber emptied; the caller counts the restart.
        }
        iters += 1;
        if next == lab {
            converged = true;
            return Ok(Some(LpRun { labeling: lab, lambdas, u_ext, trace, iters, converged }));
        }
        lab = next;
    }
}

/// Alternating spectral-support solver: per chamber solve the first
/// p-eigenpair of its standalone restriction, then reassign vertices by
/// eigenfunction dominance (one-ring dilation lets chambers claim unassigned
/// territory). Stops on label stability; restarts that empty a chamber are
/// discarded. The value is the reference function applied to the chamber
/// eigenvalues.
pub fn solve_lp(
    g: &DirichletGraph,
    n: u32,
    p: f64,
    phi: &PhiSpec,
    opts: &SolveLpOptions,
) -> Result<SolveReport> {
    ObjectiveKind::Lp { p }.validate()?;
    if n == 0 || phi.n != n {
        return Err(Error::InvalidParameter(format!(
            "chamber count {n} does not match reference function arity {}",
            phi.n
        )));
    }
    if !phi.claims_increasing() {
        return Err(Error::InvalidParameter(
            "the spectral-support solver requires an increasing reference function".into(),
        ));
    }
    if let Some(init) = &opts.initial {
        init.validate(g)?;
        if init.n != n || !init.is_cluster() {
            return Err(Error::InvalidCluster(
                "warm-start labeling is not an N-cluster".into(),
            ));
        }
    }
    let restarts = opts.restarts.max(1);
    let runs: Result<Vec<Option<LpRun>>> = (0..restarts)
        .into_par_iter()
        .map(|r| run_lp_restart(g, n, p, phi, opts, r))
        .collect();
    let runs = runs?;
    let best = runs
        .into_iter()
        .flatten()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| {
            a.trace
                .last()
                .unwrap()
                .total_cmp(b.trace.last().unwrap())
                .then(ia.cmp(ib))
        })
        .map(|(_, run)| run)
        .ok_or_else(|| Error::NoValidSeed("every restart emptied a chamber".into()))?;
    let sups = best
        .u_ext
        .iter()
        .map(|u| u.iter().fold(0.0f64, |m, &x| m.max(x)))
        .collect();
    assemble_report(
        g,
        ObjectiveKind::Lp { p },
        phi,
        best.labeling,
        best.lambdas,
        1e-9,
        best.iters,
        restarts as usize,
        opts.seed,
        best.trace,
        best.converged,
        Some(sups),
        Some(best.u_ext),
    )
}

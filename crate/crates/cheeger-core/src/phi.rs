//! Component-wise weight functions combining per-chamber scores into a single
//! objective value, with declared structural properties (coercivity constant,
//! monotonicity) and a sampling-based refutation check for those claims.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The shipped family of weight functions on `[0, inf)^N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhiKind {
    /// `q`-norm, `1 <= q <= inf` (use `f64::INFINITY` for the max norm).
    /// On the wire the max norm is the string `"inf"`; JSON has no infinity.
    PNorm {
        #[serde(with = "exponent_wire")]
        q: f64,
    },
    /// Positively weighted sum; strictly increasing.
    WeightedSum { weights: Vec<f64> },
    /// Plain maximum: increasing but not strictly.
    MaxOnly,
    /// `(v1, v2) -> sqrt(4 (v1 - v2)^2 + v2^2)`: a norm on R^2 that is not
    /// increasing on the positive cone. Negative-control only; declares no
    /// coercivity constant and is rejected by the partition solvers.
    NonMonotoneDemo,
}

/// Serializes the norm exponent as a number, or as `"inf"` for the max norm.
pub(crate) mod exponent_wire {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &f64, s: S) -> Result<S::Ok, S::Error> {
        if q.is_finite() {
            s.serialize_f64(*q)
        } else {
            s.serialize_str("inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Wire {
            Number(f64),
            Text(String),
        }
        match Wire::deserialize(d)? {
            Wire::Number(q) => Ok(q),
            Wire::Text(t) if t.eq_ignore_ascii_case("inf") => Ok(f64::INFINITY),
            Wire::Text(t) => Err(D::Error::custom(format!("bad exponent {t:?}"))),
        }
    }
}

/// A weight function instantiated for a fixed number of chambers `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiSpec {
    pub kind: PhiKind,
    pub n: u32,
}

impl PhiSpec {
    pub fn new(kind: PhiKind, n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("phi needs at least one chamber".into()));
        }
        match &kind {
            PhiKind::PNorm { q } => {
                if !(*q >= 1.0) {
                    return Err(Error::InvalidParameter(format!("pnorm exponent {q} < 1")));
                }
            }
            PhiKind::WeightedSum { weights } => {
                if weights.len() != n as usize {
                    return Err(Error::InvalidParameter(format!(
                        "{} weights for {n} chambers",
                        weights.len()
                    )));
                }
                if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
                    return Err(Error::InvalidParameter(
                        "weighted sum needs strictly positive finite weights".into(),
                    ));
                }
            }
            PhiKind::MaxOnly => {}
            PhiKind::NonMonotoneDemo => {
                if n != 2 {
                    return Err(Error::InvalidParameter(
                        "the non-monotone demo is defined for N = 2 only".into(),
                    ));
                }
            }
        }
        Ok(Self { kind, n })
    }

    pub fn pnorm(q: f64, n: u32) -> Result<Self> {
        Self::new(PhiKind::PNorm { q }, n)
    }

    pub fn max_norm(n: u32) -> Result<Self> {
        Self::new(PhiKind::PNorm { q: f64::INFINITY }, n)
    }

    /// Evaluates the function; `values` must have length `n` and be
    /// nonnegative and finite.
    pub fn eval(&self, values: &[f64]) -> f64 {
        assert_eq!(values.len(), self.n as usize, "score vector length mismatch");
        debug_assert!(values.iter().all(|v| *v >= 0.0 && v.is_finite()));
        match &self.kind {
            PhiKind::PNorm { q } => pnorm_eval(values, *q),
            PhiKind::WeightedSum { weights } => {
                values.iter().zip(weights).map(|(v, w)| v * w).sum()
            }
            PhiKind::MaxOnly => values.iter().cloned().fold(0.0, f64::max),
            PhiKind::NonMonotoneDemo => {
                let (a, b) = (values[0], values[1]);
                (4.0 * (a - b) * (a - b) + b * b).sqrt()
            }
        }
    }

    /// Coercivity constant `delta` with `phi(v) >= delta * |v|_1`, when the
    /// kind declares one.
    pub fn delta(&self) -> Option<f64> {
        let n = f64::from(self.n);
        match &self.kind {
            PhiKind::PNorm { q } => Some(n.powf(1.0 / q - 1.0)),
            PhiKind::WeightedSum { weights } => {
                Some(weights.iter().cloned().fold(f64::INFINITY, f64::min))
            }
            PhiKind::MaxOnly => Some(1.0 / n),
            PhiKind::NonMonotoneDemo => None,
        }
    }

    /// Claimed monotonicity on the positive cone.
    pub fn claims_increasing(&self) -> bool {
        !matches!(self.kind, PhiKind::NonMonotoneDemo)
    }

    /// Claimed strict monotonicity (every strict partial increase raises the value).
    pub fn claims_strictly_increasing(&self) -> bool {
        match &self.kind {
            PhiKind::PNorm { q } => q.is_finite(),
            PhiKind::WeightedSum { .. } => true,
            PhiKind::MaxOnly | PhiKind::NonMonotoneDemo => false,
        }
    }

    /// True when the value is invariant under permuting chambers; enables the
    /// label-permutation quotient in exhaustive search.
    pub fn is_symmetric(&self) -> bool {
        match &self.kind {
            PhiKind::PNorm { .. } | PhiKind::MaxOnly => true,
            PhiKind::WeightedSum { weights } => {
                weights.windows(2).all(|w| w[0] == w[1])
            }
            PhiKind::NonMonotoneDemo => false,
        }
    }

    /// Canonical CLI spelling, e.g. `pnorm:2`, `pnorm:inf`, `wsum:0.3,0.7`,
    /// `max`, `demo`.
    pub fn canonical_string(&self) -> String {
        match &self.kind {
            PhiKind::PNorm { q } if q.is_infinite() => "pnorm:inf".into(),
            PhiKind::PNorm { q } => format!("pnorm:{q}"),
            PhiKind::WeightedSum { weights } => {
                let parts: Vec<String> = weights.iter().map(|w| format!("{w}")).collect();
                format!("wsum:{}", parts.join(","))
            }
            PhiKind::MaxOnly => "max".into(),
            PhiKind::NonMonotoneDemo => "demo".into(),
        }
    }

    /// Parses the canonical CLI spelling.
    pub fn parse(text: &str, n: u32) -> Result<Self> {
        let bad = |t: &str| Error::Parse(format!("unknown phi spec `{t}`"));
        if text == "max" {
            return Self::new(PhiKind::MaxOnly, n);
        }
        if text == "demo" {
            return Self::new(PhiKind::NonMonotoneDemo, n);
        }
        if let Some(rest) = text.strip_prefix("pnorm:") {
            let q = if rest == "inf" {
                f64::INFINITY
            } else {
                rest.parse::<f64>().map_err(|_| bad(text))?
            };
            return Self::new(PhiKind::PNorm { q }, n);
        }
        if let Some(rest) = text.strip_prefix("wsum:") {
            let weights = rest
                .split(',')
                .map(|s| s.parse::<f64>().map_err(|_| bad(text)))
                .collect::<Result<Vec<f64>>>()?;
            return Self::new(PhiKind::WeightedSum { weights }, n);
        }
        Err(bad(text))
    }
}

fn pnorm_eval(values: &[f64], q: f64) -> f64 {
    let max = values.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 || q.is_infinite() {
        return max;
    }
    if q == 1.0 {
        return values.iter().sum();
    }
    // Factor out the max so large exponents cannot overflow.
    let sum: f64 = values
        .iter()
        .map(|v| if q == 2.0 { (v / max) * (v / max) } else { (v / max).powf(q) })
        .sum();
    if q == 2.0 {
        max * sum.sqrt()
    } else {
        max * sum.powf(1.0 / q)
    }
}

/// One refuted property instance found by sampling.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhiCounterexample {
    pub property: String,
    pub v: Vec<f64>,
    pub w: Option<Vec<f64>>,
    pub lhs: f64,
    pub rhs: f64,
}

/// Result of sampling-based property refutation. `witnessed` flags mean only
/// that no violation was found among the samples; they are necessary-condition
/// evidence, not proofs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhiCertificate {
    pub samples: u32,
    /// None when the kind declares no coercivity constant.
    pub coercive_witnessed: Option<bool>,
    pub increasing_witnessed: bool,
    pub strictly_increasing_witnessed: bool,
    pub counterexamples: Vec<PhiCounterexample>,
}

const MAX_RECORDED_COUNTEREXAMPLES: usize = 8;
/// Arithmetic slack for the sampled inequalities; equality cases (e.g. the
/// coercivity bound on the diagonal) are computed along two float paths.
const CERT_SLACK: f64 = 1e-12;

/// Samples ordered pairs `v <= w` in `[0, 10]^N` and tries to refute the
/// declared coercivity and monotonicity claims.
pub fn certify_phi(phi: &PhiSpec, n_samples: u32, seed: u64) -> PhiCertificate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = phi.n as usize;
    let delta = phi.delta();
    let mut cert = PhiCertificate {
        samples: n_samples,
        coercive_witnessed: delta.map(|_| true),
        increasing_witnessed: true,
        strictly_increasing_witnessed: true,
        counterexamples: Vec::new(),
    };
    let record = |list: &mut Vec<PhiCounterexample>, ce: PhiCounterexample| {
        if list.len() < MAX_RECORDED_COUNTEREXAMPLES {
            list.push(ce);
        }
    };
    for k in 0..n_samples {
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..10.0)).collect();
        let (v, w) = if k % 2 == 0 {
            // Fully ordered pair: componentwise min/max of two draws.
            let y: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..10.0)).collect();
            let v: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a.min(*b)).collect();
            let w: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a.max(*b)).collect();
            (v, w)
        } else {
            // Single-coordinate bump: catches failures along coordinate axes.
            let j = rng.gen_range(0..n);
            let mut w = x.clone();
            w[j] += rng.gen_range(0.0..10.0);
            (x, w)
        };
        let (fv, fw) = (phi.eval(&v), phi.eval(&w));
        if let Some(d) = delta {
            for (point, value) in [(&v, fv), (&w, fw)] {
                let l1: f64 = point.iter().sum();
                if value < d * l1 - CERT_SLACK * (1.0 + d * l1) {
                    cert.coercive_witnessed = Some(false);
                    record(
                        &mut cert.counterexamples,
                        PhiCounterexample {
                            property: "coercive".into(),
                            v: point.clone(),
                            w: None,
                            lhs: value,
                            rhs: d * l1,
                        },
                    );
                }
            }
        }
        if fv > fw + CERT_SLACK * (1.0 + fw.abs()) {
            cert.increasing_witnessed = false;
            cert.strictly_increasing_witnessed = false;
            record(
                &mut cert.counterexamples,
                PhiCounterexample {
                    property: "increasing".into(),
                    v: v.clone(),
                    w: Some(w.clone()),
                    lhs: fv,
                    rhs: fw,
                },
            );
        } else if v != w && fv >= fw {
            cert.strictly_increasing_witnessed = false;
            record(
                &mut cert.counterexamples,
                PhiCounterexample {
                    property: "strictly_increasing".into(),
                    v,
                    w: Some(w),
                    lhs: fv,
                    rhs: fw,
                },
            );
        }
    }
    cert
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pnorm_values_on_a_3_4_pair() {
        let p1 = PhiSpec::pnorm(1.0, 2).unwrap();
        let p2 = PhiSpec::pnorm(2.0, 2).unwrap();
        let pinf = PhiSpec::max_norm(2).unwrap();
        assert_eq!(p1.eval(&[3.0, 4.0]), 7.0);
        assert_eq!(p2.eval(&[3.0, 4.0]), 5.0);
        assert_eq!(pinf.eval(&[3.0, 4.0]), 4.0);
        assert_eq!(p2.eval(&[0.0, 0.0]), 0.0);
    }

    #[test]
    fn coercivity_constants() {
        assert_eq!(PhiSpec::pnorm(1.0, 3).unwrap().delta(), Some(1.0));
        assert_eq!(PhiSpec::max_norm(4).unwrap().delta(), Some(0.25));
        let d = PhiSpec::pnorm(2.0, 2).unwrap().delta().unwrap();
        assert!((d - 0.5f64.sqrt()).abs() < 1e-15);
        let ws = PhiSpec::new(PhiKind::WeightedSum { weights: vec![0.3, 0.7] }, 2).unwrap();
        assert_eq!(ws.delta(), Some(0.3));
        assert_eq!(PhiSpec::new(PhiKind::NonMonotoneDemo, 2).unwrap().delta(), None);
    }

    #[test]
    fn demo_violates_monotonicity_at_known_pair() {
        let demo = PhiSpec::new(PhiKind::NonMonotoneDemo, 2).unwrap();
        let lo = demo.eval(&[1.0, 2.0]);
        let hi = demo.eval(&[2.0, 2.0]);
        assert!((lo - 8.0f64.sqrt()).abs() < 1e-15);
        assert_eq!(hi, 2.0);
        assert!(lo > hi, "increase in the first coordinate lowered the value");
    }

    #[test]
    fn certify_flags_the_demo_and_passes_the_norms() {
        let demo = PhiSpec::new(PhiKind::NonMonotoneDemo, 2).unwrap();
        let cert = certify_phi(&demo, 10_000, 42);
        assert!(!cert.increasing_witnessed);
        assert!(cert
            .counterexamples
            .iter()
            .any(|c| c.property == "increasing" && c.lhs > c.rhs));
        assert_eq!(cert.coercive_witnessed, None);

        for phi in [
            PhiSpec::pnorm(1.0, 3).unwrap(),
            PhiSpec::pnorm(2.0, 3).unwrap(),
            PhiSpec::pnorm(7.5, 3).unwrap(),
            PhiSpec::max_norm(3).unwrap(),
        ] {
            let cert = certify_phi(&phi, 10_000, 42);
            assert_eq!(cert.coercive_witnessed, Some(true), "{}", phi.canonical_string());
            assert!(cert.increasing_witnessed, "{}", phi.canonical_string());
        }
        // The max norm is increasing but not strictly: bumps off the argmax tie.
        let cert = certify_phi(&PhiSpec::max_norm(3).unwrap(), 10_000, 42);
        assert!(!cert.strictly_increasing_witnessed);
        // Finite q-norms are strictly increasing.
        let cert = certify_phi(&PhiSpec::pnorm(2.0, 3).unwrap(), 10_000, 42);
        assert!(cert.strictly_increasing_witnessed);
    }

    #[test]
    fn large_exponents_do_not_overflow() {
        let p = PhiSpec::pnorm(64.0, 2).unwrap();
        let v = p.eval(&[9.0, 9.5]);
        assert!(v > 9.5 && v < 9.6);
    }

    #[test]
    fn parse_round_trips() {
        for text in ["pnorm:1", "pnorm:2.5", "pnorm:inf", "max", "demo", "wsum:0.3,0.7"] {
            let n = if text == "wsum:0.3,0.7" || text == "demo" { 2 } else { 3 };
            let phi = PhiSpec::parse(text, n).unwrap();
            assert_eq!(phi.canonical_string(), text);
        }
        assert!(PhiSpec::parse("pnorm:0.5", 2).is_err());
        assert!(PhiSpec::parse("norm:2", 2).is_err());
        assert!(PhiSpec::parse("demo", 3).is_err());
        assert!(PhiSpec::parse("wsum:1,0", 2).is_err());
    }

    #[test]
    fn max_norm_survives_json() {
        // JSON has no infinity; the exponent crosses the wire as "inf".
        let phi = PhiSpec::max_norm(2).unwrap();
        let text = serde_json::to_string(&phi).unwrap();
        assert!(text.contains("\"inf\""));
        let back: PhiSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, phi);
        let finite: PhiSpec = serde_json::from_str(
            &serde_json::to_string(&PhiSpec::pnorm(2.0, 3).unwrap()).unwrap(),
        )
        .unwrap();
        assert_eq!(finite, PhiSpec::pnorm(2.0, 3).unwrap());
    }
}

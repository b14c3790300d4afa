//! Universal eigenvalue inequalities for Dirichlet eigenvalues on subsets of ℤⁿ.
//!
//! Every check consumes only the ascending eigenvalues and the ambient
//! dimension `n`, and returns an [`InequalityRecord`]. Records share one sign
//! convention: `slack ≥ 0` means the inequality holds, whichever side is the
//! larger one in its usual statement. Infinite sides (e.g. a Hile–Protter sum
//! with a repeated `λ_{k+1} = λ_k`) are stored as `f64::INFINITY`.
//!
//! Indices follow the mathematical convention: `k` is 1-based and `λ_i` is
//! the `i`-th smallest eigenvalue.

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::eigen::Eigenvalues;

/// Absolute part of the pass tolerance.
pub const TOL_INEQ_ABS: f64 = 1e-8;
/// Relative part of the pass tolerance, scaled by `max(|lhs|, |rhs|)`.
pub const TOL_INEQ_REL: f64 = 1e-10;
/// Threshold for treating eigenvalue gaps, `Σ(1 − λ_i)` and preconditions as
/// exact equalities.
pub const TOL_DEGENERATE: f64 = 1e-10;
/// Margin used by the strict-positivity warning for partial sums.
pub const TOL_STRICT: f64 = 1e-6;
/// Negative discriminants down to this value are clamped to zero.
pub const DISCRIMINANT_CLAMP: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InequalityError {
    #[error("k = {k} outside admissible range {min}..={max}")]
    KOutOfRange { k: usize, min: usize, max: usize },
    #[error("need at least {needed} eigenvalues, have {have}")]
    TooFewEigenvalues { needed: usize, have: usize },
    #[error("Σ(1 − λ_i) = {sum:e} is not positive; weights are undefined")]
    DegenerateWeights { sum: f64 },
    #[error("quadratic discriminant {value:e} is negative beyond rounding")]
    NegativeDiscriminant { value: f64 },
    #[error("λ_k = {lambda_k} ≥ 1; supply B explicitly")]
    RecursionDefaultB { lambda_k: f64 },
    #[error("recursion needs λ_1 > 0 and B > 0")]
    RecursionDomain,
}

/// Named inequality, ordered as reports list them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum InequalityId {
    PartialSum,
    PartialSumTotal,
    BipartiteSymmetry,
    FirstEigenBound,
    FirstGap,
    FirstRatio,
    Ppw,
    HileProtter,
    Yang1,
    Yang2,
    RatioBound,
    Variance,
    Yang2Quadratic,
    Yang2Weighted,
    HpWeighted,
    PpwWeighted,
    Recursion,
    RecursionContraction,
    // trial-function identities, see `proof`
    Prop31,
    KgIdentity,
    Orthogonality,
    Lam1Lower,
    Lam1Upper,
    HpClaim,
    Grad1,
    Grad2,
    Energy,
}

impl InequalityId {
    pub const ALL: [InequalityId; 27] = [
        InequalityId::PartialSum,
        InequalityId::PartialSumTotal,
        InequalityId::BipartiteSymmetry,
        InequalityId::FirstEigenBound,
        InequalityId::FirstGap,
        InequalityId::FirstRatio,
        InequalityId::Ppw,
        InequalityId::HileProtter,
        InequalityId::Yang1,
        InequalityId::Yang2,
        InequalityId::RatioBound,
        InequalityId::Variance,
        InequalityId::Yang2Quadratic,
        InequalityId::Yang2Weighted,
        InequalityId::HpWeighted,
        InequalityId::PpwWeighted,
        InequalityId::Recursion,
        InequalityId::RecursionContraction,
        InequalityId::Prop31,
        InequalityId::KgIdentity,
        InequalityId::Orthogonality,
        InequalityId::Lam1Lower,
        InequalityId::Lam1Upper,
        InequalityId::HpClaim,
        InequalityId::Grad1,
        InequalityId::Grad2,
        InequalityId::Energy,
    ];

    pub fn as_str(self) -> &'static str {
        use InequalityId::*;
        match self {
            PartialSum => "partial_sum",
            PartialSumTotal => "partial_sum_total",
            BipartiteSymmetry => "bipartite_symmetry",
            FirstEigenBound => "first_eigen_bound",
            FirstGap => "first_gap",
            FirstRatio => "first_ratio",
            Ppw => "ppw",
            HileProtter => "hp",
            Yang1 => "yang1",
            Yang2 => "yang2",
            RatioBound => "ratio_bound",
            Variance => "variance",
            Yang2Quadratic => "yang2_quadratic",
            Yang2Weighted => "yang2_weighted",
            HpWeighted => "hp_weighted",
            PpwWeighted => "ppw_weighted",
            Recursion => "recursion",
            RecursionContraction => "recursion_contraction",
            Prop31 => "prop31",
            KgIdentity => "kg_identity",
            Orthogonality => "orthogonality",
            Lam1Lower => "lam1_lower",
            Lam1Upper => "lam1_upper",
            HpClaim => "hp_claim",
            Grad1 => "grad1",
            Grad2 => "grad2",
            Energy => "energy",
        }
    }
}

impl fmt::Display for InequalityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InequalityId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase().replace('-', "_");
        InequalityId::ALL
            .iter()
            .copied()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| format!("unknown inequality `{s}`"))
    }
}

impl Serialize for InequalityId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

/// Which side is supposed to be larger.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    /// `lhs ≤ rhs`
    AtMost,
    /// `lhs ≥ rhs`
    AtLeast,
}

/// One inequality evaluated at one `k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityRecord {
    pub inequality_id: InequalityId,
    pub k: usize,
    #[serde(serialize_with = "ser_extended")]
    pub lhs: f64,
    #[serde(serialize_with = "ser_extended")]
    pub rhs: f64,
    #[serde(serialize_with = "ser_extended")]
    pub slack: f64,
    pub precondition_met: bool,
    pub pass: bool,
}

/// Finite floats as JSON numbers, infinities and NaN as strings.
pub fn ser_extended<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str(&format_extended(*v))
    }
}

/// `inf`, `-inf`, `nan` or the shortest round-trip decimal, switching to
/// exponent form for very large or very small magnitudes.
pub fn format_extended(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v == f64::INFINITY {
        "inf".to_string()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else if v != 0.0 && (v.abs() >= 1e16 || v.abs() < 1e-6) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

impl InequalityRecord {
    pub fn new(
        id: InequalityId,
        k: usize,
        lhs: f64,
        rhs: f64,
        sense: Sense,
        precondition_met: bool,
    ) -> Self {
        Self::with_tolerance(
            id,
            k,
            lhs,
            rhs,
            sense,
            precondition_met,
            TOL_INEQ_ABS,
            TOL_INEQ_REL,
        )
    }

    #[allow(clippy::too_many_arguments)]
    pub fn with_tolerance(
        id: InequalityId,
        k: usize,
        lhs: f64,
        rhs: f64,
        sense: Sense,
        precondition_met: bool,
        abs_tol: f64,
        rel_tol: f64,
    ) -> Self {
        let slack = match sense {
            Sense::AtMost if rhs == f64::INFINITY => f64::INFINITY,
            Sense::AtMost => rhs - lhs,
            Sense::AtLeast if lhs == f64::INFINITY => f64::INFINITY,
            Sense::AtLeast => lhs - rhs,
        };
        let scale = [lhs, rhs]
            .iter()
            .filter(|v| v.is_finite())
            .fold(0.0f64, |m, v| m.max(v.abs()));
        let holds = slack >= -(abs_tol + rel_tol * scale);
        InequalityRecord {
            inequality_id: id,
            k,
            lhs,
            rhs,
            slack,
            precondition_met,
            pass: !precondition_met || holds,
        }
    }

    /// A record for a check that could not be evaluated at all.
    pub fn failed(id: InequalityId, k: usize) -> Self {
        InequalityRecord {
            inequality_id: id,
            k,
            lhs: f64::NAN,
            rhs: f64::NAN,
            slack: f64::NAN,
            precondition_met: true,
            pass: false,
        }
    }
}

fn check_k(ev: &Eigenvalues, k: usize) -> Result<(), InequalityError> {
    let max = ev.len().saturating_sub(1);
    if k == 0 || k > max {
        return Err(InequalityError::KOutOfRange { k, min: 1, max });
    }
    Ok(())
}

fn deficit_sum(prefix: &[f64]) -> f64 {
    prefix.iter().map(|l| 1.0 - l).sum()
}

fn dim(ev: &Eigenvalues) -> f64 {
    ev.n as f64
}

/// `λ_{k+1} − λ_k ≤ (4/n) Σλ_i / Σ(1 − λ_i)`.
pub fn check_ppw(ev: &Eigenvalues, k: usize) -> Result<InequalityRecord, InequalityError> {
    check_k(ev, k)?;
    let p = ev.prefix(k);
    let s0 = deficit_sum(p);
    let lhs = ev.lambda(k + 1) - ev.lambda(k);
    let rhs = if s0 <= TOL_DEGENERATE {
        f64::INFINITY
    } else {
        4.0 / dim(ev) * p.iter().sum::<f64>() / s0
    };
    Ok(InequalityRecord::new(
        InequalityId::Ppw,
        k,
        lhs,
        rhs,
        Sense::AtMost,
        true,
    ))
}

/// First gap `λ₂ − λ₁ ≤ 4λ₁/(n(1 − λ₁))` and ratio `λ₂ ≤ 9λ₁`.
///
/// The ratio bound is only asserted when `connected` is set.
pub fn check_first_gap(
    ev: &Eigenvalues,
    connected: bool,
) -> Result<(InequalityRecord, InequalityRecord), InequalityError> {
    if ev.len() < 2 {
        return Err(InequalityError::TooFewEigenvalues {
            needed: 2,
            have: ev.len(),
        });
    }
    let (l1, l2) = (ev.lambda(1), ev.lambda(2));
    let rhs = if l1 >= 1.0 - TOL_DEGENERATE {
        f64::INFINITY
    } else {
        4.0 * l1 / (dim(ev) * (1.0 - l1))
    };
    let gap = InequalityRecord::new(InequalityId::FirstGap, 1, l2 - l1, rhs, Sense::AtMost, true);
    let ratio = InequalityRecord::new(
        InequalityId::FirstRatio,
        1,
        l2,
        9.0 * l1,
        Sense::AtMost,
        connected,
    );
    Ok((gap, ratio))
}

/// `Σ λ_i/(λ_{k+1} − λ_i) ≥ (n/4) Σ(1 − λ_i)`.
pub fn check_hp(ev: &Eigenvalues, k: usize) -> Result<InequalityRecord, InequalityError> {
    check_k(ev, k)?;
    let p = ev.prefix(k);
    let next = ev.lambda(k + 1);
    let lhs = if next - ev.lambda(k) <= TOL_DEGENERATE {
        f64::INFINITY
    } else {
        p.iter().map(|l| l / (next - l)).sum()
    };
    let rhs = dim(ev) / 4.0 * deficit_sum(p);
    Ok(InequalityRecord::new(
        InequalityId::HileProtter,
        k,
        lhs,
        rhs,
        Sense::AtLeast,
        true,
    ))
}

/// `Σ(λ_{k+1} − λ_i)²(1 − λ_i) ≤ (4/n) Σ(λ_{k+1} − λ_i)λ_i`.
pub fn check_yang1(ev: &Eigenvalues, k: usize) -> Result<InequalityRecord, InequalityError> {
    check_k(ev, k)?;
    let next = ev.lambda(k + 1);
    let p = ev.prefix(k);
    let lhs = p.iter().map(|l| (next - l).powi(2) * (1.0 - l)).sum();
    let rhs = 4.0 / dim(ev) * p.iter().map(|l| (next - l) * l).sum::<f64>();
    Ok(InequalityRecord::new(
        InequalityId::Yang1,
        k,
        lhs,
        rhs,
        Sense::AtMost,
        true,
    ))
}

/// `λ_{k+1} ≤ [(1 + 4/n)Σλ_i − Σλ_i²] / Σ(1 − λ_i)` when `λ_{k+1} ≤ 1 + 4/n`.
pub fn check_yang2(ev: &Eigenvalues, k: usize) -> Result<InequalityRecord, InequalityError> {
    check_k(ev, k)?;
    let n = dim(ev);
    let p = ev.prefix(k);
    let next = ev.lambda(k + 1);
    let s0 = deficit_sum(p);
    let rhs = if s0 <= TOL_DEGENERATE {
        f64::INFINITY
    } else {
        ((1.0 + 4.0 / n) * p.iter().sum::<f64>() - p.iter().map(|l| l * l).sum::<f64>()) / s0
    };
    let pre = next <= 1.0 + 4.0 / n + TOL_DEGENERATE;
    Ok(InequalityRecord::new(
        InequalityId::Yang2,
        k,
        next,
        rhs,
        Sense::AtMost,
        pre,
    ))
}

fn ratio_rhs(n: f64, k: usize, delta: f64, lambda1: f64) -> f64 {
    let e = 2.0 / (n * delta);
    (1.0 + 2.0 * e) * (k as f64).powf(e) * lambda1
}

/// `λ_{k+1} ≤ (1 + 4/(n(1 − λ_k))) k^{2/(n(1 − λ_k))} λ₁` when `λ_k < 1`.
pub fn check_ratio_bound(ev: &Eigenvalues, k: usize) -> Result<InequalityRecord, InequalityError> {
    check_k(ev, k)?;
    let lk = ev.lambda(k);
    let pre = lk < 1.0 - TOL_DEGENERATE;
    let rhs = if pre {
        ratio_rhs(dim(ev), k, 1.0 - lk, ev.lambda(1))
    } else {
        f64::INFINITY
    };
    Ok(InequalityRecord::new(
        InequalityId::RatioBound,
        k,
        ev.lambda(k + 1),
        rhs,
        Sense::AtMost,
        pre,
    ))
}

/// Same bound with a caller-chosen margin: `λ_k ≤ 1 − δ` implies
/// `λ_{k+1} ≤ (1 + 4/(nδ)) k^{2/(nδ)} λ₁`.
pub fn check_ratio_bound_delta(
    ev: &Eigenvalues,
    k: usize,
    delta: f64,
) -> Result<InequalityRecord, InequalityError> {
    check_k(ev, k)?;
    let pre = delta > 0.0 && ev.lambda(k) <= 1.0 - delta + TOL_DEGENERATE;
    let rhs = if delta > 0.0 {
        ratio_rhs(dim(ev), k, delta, ev.lambda(1))
    } else {
        f64::INFINITY
    };
    Ok(InequalityRecord::new(
        InequalityId::RatioBound,
        k,
        ev.lambda(k + 1),
        rhs,
        Sense::AtMost,
        pre,
    ))
}

/// `max_k |λ_k + λ_{N+1−k} − 2|`.
pub fn check_bipartite_symmetry(ev: &Eigenvalues) -> f64 {
    let v = &ev.values;
    v.iter()
        .zip(v.iter().rev())
        .map(|(a, b)| (a + b - 2.0).abs())
        .fold(0.0, f64::max)
}

/// Partial sums `Σ_{i≤k}(1 − λ_i)` for every `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialSums {
    pub sums: Vec<f64>,
    /// Nonnegativity for `k < N` and vanishing at `k = N`.
    pub records: Vec<InequalityRecord>,
    /// `k < N` where the sum is within `TOL_STRICT` of zero although
    /// `λ_{k+1} < 2 − TOL_STRICT`. Not failures.
    pub strictness_warnings: Vec<usize>,
}

pub fn check_partial_sums(ev: &Eigenvalues) -> PartialSums {
    let size = ev.len();
    let mut sums = Vec::with_capacity(size);
    let mut acc = 0.0;
    for l in &ev.values {
        acc += 1.0 - l;
        sums.push(acc);
    }
    let mut records = Vec::with_capacity(size);
    let mut strictness_warnings = Vec::new();
    for (idx, &s) in sums.iter().enumerate() {
        let k = idx + 1;
        if k < size {
            records.push(InequalityRecord::new(
                InequalityId::PartialSum,
                k,
                s,
                0.0,
                Sense::AtLeast,
                true,
            ));
            if s <= TOL_STRICT && ev.lambda(k + 1) < 2.0 - TOL_STRICT {
                strictness_warnings.push(k);
            }
        } else {
            records.push(InequalityRecord::new(
                InequalityId::PartialSumTotal,
                k,
                s.abs(),
                0.0,
                Sense::AtMost,
                true,
            ));
        }
    }
    PartialSums {
        sums,
        records,
        strictness_warnings,
    }
}

/// `λ₁ ≤ 1 − 1/(2n)` for connected regions with at least two points.
pub fn check_first_eig_bound(ev: &Eigenvalues, connected: bool) -> InequalityRecord {
    let pre = connected && ev.len() >= 2;
    let lhs = ev.values.first().copied().unwrap_or(f64::NAN);
    InequalityRecord::new(
        InequalityId::FirstEigenBound,
        1,
        lhs,
        1.0 - 1.0 / (2.0 * dim(ev)),
        Sense::AtMost,
        pre,
    )
}

/// `(1/k) Σ(λ_i − λ̄)² ≤ (4/n) λ̄` when `λ_{k+1} ≤ 1 + 4/n`.
pub fn check_variance(ev: &Eigenvalues, k: usize) -> Result<InequalityRecord, InequalityError> {
    check_k(ev, k)?;
    let n = dim(ev);
    let p = ev.prefix(k);
    let mean = p.iter().sum::<f64>() / k as f64;
    let var = p.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / k as f64;
    let pre = ev.lambda(k + 1) <= 1.0 + 4.0 / n + TOL_DEGENERATE;
    Ok(InequalityRecord::new(
        InequalityId::Variance,
        k,
        var,
        4.0 / n * mean,
        Sense::AtMost,
        pre,
    ))
}

/// Weights `μ_i ∝ 1 − λ_i + 2/n` and the factor `A`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AltWeights {
    pub mu: Vec<f64>,
    pub a: f64,
}

impl AltWeights {
    /// `Σ λ_i μ_i`.
    pub fn weighted_mean(&self, prefix: &[f64]) -> f64 {
        prefix.iter().zip(&self.mu).map(|(l, m)| l * m).sum()
    }
}

pub fn alt_weights(ev: &Eigenvalues, k: usize) -> Result<AltWeights, InequalityError> {
    if k == 0 || k > ev.len() {
        return Err(InequalityError::KOutOfRange {
            k,
            min: 1,
            max: ev.len(),
        });
    }
    let n = dim(ev);
    let p = ev.prefix(k);
    let s0 = deficit_sum(p);
    if s0 <= TOL_DEGENERATE {
        return Err(InequalityError::DegenerateWeights { sum: s0 });
    }
    let raw: Vec<f64> = p.iter().map(|l| 1.0 - l + 2.0 / n).collect();
    let total: f64 = raw.iter().sum();
    let mu = raw.into_iter().map(|w| w / total).collect();
    let t = 1.0 + 2.0 * k as f64 / (n * s0);
    let a = t * (1.0 + (1.0 - 1.0 / t).sqrt());
    Ok(AltWeights { mu, a })
}

/// Larger-root bound `λ_{k+1} ≤ [S₁ + √(S₁² − S₀S₂)]/S₀` and, when
/// `λ_k ≤ 1 + 2/n`, the weighted form `λ_{k+1} ≤ A Σ λ_i μ_i`.
pub fn check_yang2_alt(
    ev: &Eigenvalues,
    k: usize,
) -> Result<(InequalityRecord, InequalityRecord), InequalityError> {
    check_k(ev, k)?;
    let n = dim(ev);
    let p = ev.prefix(k);
    let next = ev.lambda(k + 1);
    let s0 = deficit_sum(p);
    let s1: f64 = p.iter().map(|l| l * (1.0 - l + 2.0 / n)).sum();
    let s2: f64 = p.iter().map(|l| l * l * (1.0 - l + 4.0 / n)).sum();

    let root_rhs = if s0 <= TOL_DEGENERATE {
        f64::INFINITY
    } else {
        let mut disc = s1 * s1 - s0 * s2;
        if disc < 0.0 {
            if disc < -DISCRIMINANT_CLAMP {
                return Err(InequalityError::NegativeDiscriminant { value: disc });
            }
            disc = 0.0;
        }
        (s1 + disc.sqrt()) / s0
    };
    let quadratic = InequalityRecord::new(
        InequalityId::Yang2Quadratic,
        k,
        next,
        root_rhs,
        Sense::AtMost,
        true,
    );

    let pre = ev.lambda(k) <= 1.0 + 2.0 / n + TOL_DEGENERATE;
    let weighted_rhs = match alt_weights(ev, k) {
        Ok(w) => w.a * w.weighted_mean(p),
        Err(InequalityError::DegenerateWeights { .. }) => f64::INFINITY,
        Err(e) => return Err(e),
    };
    let weighted = InequalityRecord::new(
        InequalityId::Yang2Weighted,
        k,
        next,
        weighted_rhs,
        Sense::AtMost,
        pre,
    );
    Ok((quadratic, weighted))
}

/// `Σ μ_i λ_i/(λ_{k+1} − λ_i) ≥ 1/(A − 1)` when `λ_k ≤ 1 + 2/n`.
pub fn check_hp_alt(ev: &Eigenvalues, k: usize) -> Result<InequalityRecord, InequalityError> {
    check_k(ev, k)?;
    let n = dim(ev);
    let p = ev.prefix(k);
    let next = ev.lambda(k + 1);
    let pre = ev.lambda(k) <= 1.0 + 2.0 / n + TOL_DEGENERATE;
    let (lhs, rhs) = match alt_weights(ev, k) {
        Ok(w) => {
            let lhs = if next - ev.lambda(k) <= TOL_DEGENERATE {
                f64::INFINITY
            } else {
                p.iter().zip(&w.mu).map(|(l, m)| l / (next - l) * m).sum()
            };
            (lhs, 1.0 / (w.a - 1.0))
        }
        // A → ∞ as Σ(1 − λ_i) → 0, so the bound tends to 0
        Err(InequalityError::DegenerateWeights { .. }) => {
            let lhs = if next - ev.lambda(k) <= TOL_DEGENERATE {
                f64::INFINITY
            } else {
                let total: f64 = p.iter().map(|l| 1.0 - l + 2.0 / n).sum();
                p.iter()
                    .map(|l| l / (next - l) * (1.0 - l + 2.0 / n) / total)
                    .sum()
            };
            (lhs, 0.0)
        }
        Err(e) => return Err(e),
    };
    Ok(InequalityRecord::new(
        InequalityId::HpWeighted,
        k,
        lhs,
        rhs,
        Sense::AtLeast,
        pre,
    ))
}

/// `λ_{k+1} − λ_k ≤ (A − 1) Σ λ_i μ_i` when `λ_k ≤ 1 + 2/n`.
pub fn check_ppw_alt(ev: &Eigenvalues, k: usize) -> Result<InequalityRecord, InequalityError> {
    check_k(ev, k)?;
    let n = dim(ev);
    let pre = ev.lambda(k) <= 1.0 + 2.0 / n + TOL_DEGENERATE;
    let rhs = match alt_weights(ev, k) {
        Ok(w) => (w.a - 1.0) * w.weighted_mean(ev.prefix(k)),
        Err(InequalityError::DegenerateWeights { .. }) => f64::INFINITY,
        Err(e) => return Err(e),
    };
    let lhs = ev.lambda(k + 1) - ev.lambda(k);
    Ok(InequalityRecord::new(
        InequalityId::PpwWeighted,
        k,
        lhs,
        rhs,
        Sense::AtMost,
        pre,
    ))
}

/// Intermediate quantities of the `F_k` recursion at one `k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecursionState {
    pub k: usize,
    pub b: f64,
    /// `Λ_k`, mean of `λ_1..λ_k`.
    pub mean: f64,
    /// `T_k`, mean of squares.
    pub square_mean: f64,
    /// `F_k = (1 + 2B/n)Λ_k² − T_k`.
    pub f_k: f64,
    pub f_next: f64,
    /// `p_{k+1} = Λ_{k+1} − (1 + (2B/n)/(k+1)) Λ_k`.
    pub p_next: f64,
    /// `C(n, k, B)`.
    pub c: f64,
    /// `((k+1)/k)^{4B/n}`.
    pub growth: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecursionOutcome {
    pub state: RecursionState,
    /// `Σ(λ_{k+1} − λ_i)² ≤ (4B/n) Σ λ_i(λ_{k+1} − λ_i)`.
    pub hypothesis_holds: bool,
    /// `F_{k+1} ≤ C((k+1)/k)^{4B/n} F_k`; vacuous when the hypothesis fails.
    pub record: InequalityRecord,
    /// `C(n, k, B) < 1`.
    pub contraction: InequalityRecord,
}

fn recursion_f(prefix: &[f64], b: f64, n: f64) -> (f64, f64, f64) {
    let k = prefix.len() as f64;
    let mean = prefix.iter().sum::<f64>() / k;
    let square_mean = prefix.iter().map(|l| l * l).sum::<f64>() / k;
    (
        mean,
        square_mean,
        (1.0 + 2.0 * b / n) * mean * mean - square_mean,
    )
}

/// `C(n, k, B) = 1 − (B/3n)(k/(k+1))^{4B/n}(1 + 2B/n)(1 + 4B/n)/(k+1)³`.
pub fn recursion_constant(n: f64, k: usize, b: f64) -> f64 {
    let kf = k as f64;
    let r = b / n;
    1.0 - r / 3.0 * (kf / (kf + 1.0)).powf(4.0 * r) * (1.0 + 2.0 * r) * (1.0 + 4.0 * r)
        / (kf + 1.0).powi(3)
}

/// Checks the contraction of `F_k` at `k`. `b = None` uses `B = 1/(1 − λ_k)`.
pub fn check_recursion(
    ev: &Eigenvalues,
    k: usize,
    b: Option<f64>,
) -> Result<RecursionOutcome, InequalityError> {
    check_k(ev, k)?;
    let n = dim(ev);
    let lk = ev.lambda(k);
    let b = match b {
        Some(b) => b,
        None if lk < 1.0 - TOL_DEGENERATE => 1.0 / (1.0 - lk),
        None => return Err(InequalityError::RecursionDefaultB { lambda_k: lk }),
    };
    if b.is_nan() || b <= 0.0 || ev.lambda(1).is_nan() || ev.lambda(1) <= 0.0 {
        return Err(InequalityError::RecursionDomain);
    }
    let next = ev.lambda(k + 1);
    let p = ev.prefix(k);
    let hyp_lhs: f64 = p.iter().map(|l| (next - l).powi(2)).sum();
    let hyp_rhs: f64 = 4.0 * b / n * p.iter().map(|l| l * (next - l)).sum::<f64>();
    let scale = hyp_lhs.abs().max(hyp_rhs.abs());
    let hypothesis_holds = hyp_lhs <= hyp_rhs + TOL_INEQ_ABS + TOL_INEQ_REL * scale;

    let (mean, square_mean, f_k) = recursion_f(p, b, n);
    let (mean_next, _, f_next) = recursion_f(ev.prefix(k + 1), b, n);
    let kf = k as f64;
    let p_next = mean_next - (1.0 + 2.0 * b / n / (kf + 1.0)) * mean;
    let c = recursion_constant(n, k, b);
    let growth = ((kf + 1.0) / kf).powf(4.0 * b / n);
    let bound = if growth.is_infinite() {
        f64::INFINITY
    } else {
        c * growth * f_k
    };

    let record = InequalityRecord::new(
        InequalityId::Recursion,
        k,
        f_next,
        bound,
        Sense::AtMost,
        hypothesis_holds,
    );
    let contraction = InequalityRecord::with_tolerance(
        InequalityId::RecursionContraction,
        k,
        c,
        1.0,
        Sense::AtMost,
        true,
        0.0,
        0.0,
    );
    let contraction = InequalityRecord {
        pass: c < 1.0,
        ..contraction
    };
    Ok(RecursionOutcome {
        state: RecursionState {
            k,
            b,
            mean,
            square_mean,
            f_k,
            f_next,
            p_next,
            c,
            growth,
        },
        hypothesis_holds,
        record,
        contraction,
    })
}

/// `mean(a·b) − mean(a)·mean(b)`; nonnegative for similarly sorted sequences.
pub fn chebyshev_gap(a: &[f64], b: &[f64]) -> f64 {
    let len = a.len().min(b.len()) as f64;
    let ab = a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / len;
    let ma = a.iter().sum::<f64>() / len;
    let mb = b.iter().sum::<f64>() / len;
    ab - ma * mb
}

/// Every check at every admissible `k`, sorted by `(inequality_id, k)`.
///
/// Evaluation problems become failing records; the sweep never aborts.
pub fn full_report(ev: &Eigenvalues, connected: bool) -> Vec<InequalityRecord> {
    let size = ev.len();
    let mut out = Vec::new();
    if size == 0 {
        return out;
    }
    out.extend(check_partial_sums(ev).records);
    let dev = check_bipartite_symmetry(ev);
    out.push(InequalityRecord::new(
        InequalityId::BipartiteSymmetry,
        size,
        dev,
        0.0,
        Sense::AtMost,
        true,
    ));
    out.push(check_first_eig_bound(ev, connected));
    if let Ok((gap, ratio)) = check_first_gap(ev, connected) {
        out.push(gap);
        out.push(ratio);
    }

    fn push(
        out: &mut Vec<InequalityRecord>,
        id: InequalityId,
        k: usize,
        r: Result<InequalityRecord, InequalityError>,
    ) {
        out.push(r.unwrap_or_else(|_| InequalityRecord::failed(id, k)));
    }
    for k in 1..size {
        push(&mut out, InequalityId::Ppw, k, check_ppw(ev, k));
        push(&mut out, InequalityId::HileProtter, k, check_hp(ev, k));
        push(&mut out, InequalityId::Yang1, k, check_yang1(ev, k));
        push(&mut out, InequalityId::Yang2, k, check_yang2(ev, k));
        push(
            &mut out,
            InequalityId::RatioBound,
            k,
            check_ratio_bound(ev, k),
        );
        push(&mut out, InequalityId::Variance, k, check_variance(ev, k));
        match check_yang2_alt(ev, k) {
            Ok((q, w)) => {
                out.push(q);
                out.push(w);
            }
            Err(_) => {
                out.push(InequalityRecord::failed(InequalityId::Yang2Quadratic, k));
                out.push(InequalityRecord::failed(InequalityId::Yang2Weighted, k));
            }
        }
        push(&mut out, InequalityId::HpWeighted, k, check_hp_alt(ev, k));
        push(&mut out, InequalityId::PpwWeighted, k, check_ppw_alt(ev, k));
        match check_recursion(ev, k, None) {
            Ok(o) => {
                out.push(o.record);
                out.push(o.contraction);
            }
            // default B only exists for λ_k < 1 and λ₁ > 0
            Err(InequalityError::RecursionDefaultB { .. })
            | Err(InequalityError::RecursionDomain) => {}
            Err(_) => out.push(InequalityRecord::failed(InequalityId::Recursion, k)),
        }
    }
    out.sort_by_key(|r| (r.inequality_id, r.k));
    out
}

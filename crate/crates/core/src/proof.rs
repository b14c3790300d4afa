//! Trial-function quantities behind the gap inequalities, evaluated on a
//! concrete region.
//!
//! With `g = x_α` a coordinate function and `u_1..u_k` the first weighted-
//! orthonormal eigenvectors (null-extended), the checks below compute
//!
//! * `a_ij = Σ g u_i u_j d`, `b_ij = Σ u_j Γ(g, u_i) d`,
//! * `φ_i = g u_i − Σ_j a_ij u_j`,
//! * `K_g(u_i) = −2 Σ Γ(g, u_i) φ_i d`, `I_g(u_i) = ¼ Σ_{x,y} μ_xy |∇g|² |∇u_i|²`,
//!
//! directly from their definitions, and measure how far the identities and
//! inequality chains relating them are from holding exactly.
//!
//! `g` is the true lattice coordinate shifted by a constant so that the region's
//! bounding box starts at 1 along axis `α`.

use serde::Serialize;
use thiserror::Error;

use crate::eigen::{Eigenvalues, Spectrum};
use crate::inequalities::{InequalityId, InequalityRecord, Sense, TOL_DEGENERATE};
use crate::operator::{closure_points, gamma_at, lattice_laplacian_at, LatticeFunction};
use crate::region::{Point, RegionError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProofError {
    #[error("k = {k} outside 1..={max}")]
    KOutOfRange { k: usize, max: usize },
    #[error("coordinate index {alpha} outside 1..={n}")]
    AxisOutOfRange { alpha: usize, n: usize },
    #[error(transparent)]
    Region(#[from] RegionError),
}

#[derive(Debug, Clone, Serialize)]
pub struct ProofData {
    /// 1-based coordinate index.
    pub alpha: usize,
    pub k: usize,
    /// `g(x) = x_α − origin`.
    pub origin: i64,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    #[serde(skip)]
    pub phi: Vec<Vec<f64>>,
    pub kg: Vec<f64>,
    pub ig: Vec<f64>,
    /// `Σ φ_i² d`.
    pub phi_norm_sq: Vec<f64>,
    /// `Σ_{Ω∪δΩ} Γ(g, u_i)² d`.
    pub gamma_sq: Vec<f64>,
    /// `[i][j] = Σ φ_i u_j d`.
    #[serde(skip)]
    pub orthogonality: Vec<Vec<f64>>,
}

/// Builds the data with `g` shifted so the bounding box starts at 1.
pub fn build_proof_data(spec: &Spectrum, k: usize, alpha: usize) -> Result<ProofData, ProofError> {
    let n = spec.dim();
    if alpha == 0 || alpha > n {
        return Err(ProofError::AxisOutOfRange { alpha, n });
    }
    let origin = spec.region().lower_corner()[alpha - 1] as i64 - 1;
    build_proof_data_with_origin(spec, k, alpha, origin)
}

pub fn build_proof_data_with_origin(
    spec: &Spectrum,
    k: usize,
    alpha: usize,
    origin: i64,
) -> Result<ProofData, ProofError> {
    let n = spec.dim();
    let size = spec.len();
    if alpha == 0 || alpha > n {
        return Err(ProofError::AxisOutOfRange { alpha, n });
    }
    if k == 0 || k >= size {
        return Err(ProofError::KOutOfRange {
            k,
            max: size.saturating_sub(1),
        });
    }
    let region = spec.region();
    let axis = alpha - 1;
    let d = region.degree() as f64;
    let g = |p: &Point| (p.coords()[axis] as i64 - origin) as f64;
    let us: Vec<LatticeFunction> = (0..k).map(|i| spec.vector_function(i)).collect();

    let closure = closure_points(region)?;
    // Γ(g, u_i) on Ω ∪ δΩ; the first N entries are Ω in canonical order.
    let gamma_gu: Vec<Vec<f64>> = us
        .iter()
        .map(|u| {
            closure
                .iter()
                .map(|x| gamma_at(x, g, |p| u.at(p)))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, _>>()?;
    let g_omega: Vec<f64> = region.points().iter().map(g).collect();

    let mut a = vec![vec![0.0; k]; k];
    let mut b = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..k {
            let (ui, uj) = (spec.vector(i), spec.vector(j));
            a[i][j] = (0..size).map(|x| g_omega[x] * ui[x] * uj[x]).sum::<f64>() * d;
            b[i][j] = (0..size).map(|x| uj[x] * gamma_gu[i][x]).sum::<f64>() * d;
        }
    }

    let phi: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            (0..size)
                .map(|x| {
                    g_omega[x] * spec.vector(i)[x]
                        - (0..k).map(|j| a[i][j] * spec.vector(j)[x]).sum::<f64>()
                })
                .collect()
        })
        .collect();

    let kg = (0..k)
        .map(|i| -2.0 * (0..size).map(|x| gamma_gu[i][x] * phi[i][x]).sum::<f64>() * d)
        .collect();

    let ig = us
        .iter()
        .map(|u| {
            let mut acc = 0.0;
            for x in &closure {
                let (gx, ux) = (g(x), u.at(x));
                for y in x.lattice_neighbors()? {
                    acc += (g(&y) - gx).powi(2) * (u.at(&y) - ux).powi(2);
                }
            }
            Ok(acc / 4.0)
        })
        .collect::<Result<Vec<_>, ProofError>>()?;

    let phi_norm_sq = phi
        .iter()
        .map(|p| p.iter().map(|v| v * v).sum::<f64>() * d)
        .collect();
    let gamma_sq = gamma_gu
        .iter()
        .map(|gv| gv.iter().map(|v| v * v).sum::<f64>() * d)
        .collect();
    let orthogonality = phi
        .iter()
        .map(|p| {
            (0..k)
                .map(|j| {
                    p.iter()
                        .zip(spec.vector(j))
                        .map(|(x, y)| x * y)
                        .sum::<f64>()
                        * d
                })
                .collect()
        })
        .collect();

    Ok(ProofData {
        alpha,
        k,
        origin,
        a,
        b,
        phi,
        kg,
        ig,
        phi_norm_sq,
        gamma_sq,
        orthogonality,
    })
}

impl ProofData {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("proof data serializes")
    }

    /// `max_{i,j} |Σ φ_i u_j d|`.
    pub fn orthogonality_residual(&self) -> f64 {
        self.orthogonality
            .iter()
            .flatten()
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn symmetry_defect_a(&self) -> f64 {
        pairwise_max(&self.a, |x, y| (x - y).abs())
    }

    pub fn antisymmetry_defect_b(&self) -> f64 {
        pairwise_max(&self.b, |x, y| (x + y).abs())
    }
}

fn pairwise_max(m: &[Vec<f64>], f: impl Fn(f64, f64) -> f64) -> f64 {
    let mut out = 0.0f64;
    for (i, row) in m.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            out = out.max(f(v, m[j][i]));
        }
    }
    out
}

/// `max_{i,j} |2b_ij − (λ_i − λ_j) a_ij|`.
pub fn check_prop31(pd: &ProofData, ev: &Eigenvalues) -> f64 {
    let mut out = 0.0f64;
    for i in 0..pd.k {
        for j in 0..pd.k {
            let dev = 2.0 * pd.b[i][j] - (ev.values[i] - ev.values[j]) * pd.a[i][j];
            out = out.max(dev.abs());
        }
    }
    out
}

/// `max_i |K_g(u_i) − (1/(2n) − I_g(u_i) + Σ_j (λ_i − λ_j) a_ij²)|`.
pub fn check_kg_identity(pd: &ProofData, ev: &Eigenvalues) -> f64 {
    let n = ev.n as f64;
    (0..pd.k)
        .map(|i| {
            let sum: f64 = (0..pd.k)
                .map(|j| (ev.values[i] - ev.values[j]) * pd.a[i][j].powi(2))
                .sum();
            (pd.kg[i] - (1.0 / (2.0 * n) - pd.ig[i] + sum)).abs()
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lam1Chain {
    /// For each `i`: `(λ_{k+1} − λ_i) Σφ_i² d ≥ 0` then `≤ K_g(u_i)`.
    pub records: Vec<InequalityRecord>,
    /// Indices `i` where `φ_i` vanishes but `K_g(u_i)` is negative.
    pub warnings: Vec<usize>,
}

/// `0 ≤ (λ_{k+1} − λ_i) Σ φ_i² d ≤ K_g(u_i)` for `i = 1..k`.
pub fn check_lam1_chain(pd: &ProofData, ev: &Eigenvalues) -> Lam1Chain {
    let next = ev.values[pd.k];
    let mut records = Vec::with_capacity(2 * pd.k);
    let mut warnings = Vec::new();
    for i in 0..pd.k {
        let middle = (next - ev.values[i]) * pd.phi_norm_sq[i];
        records.push(InequalityRecord::new(
            InequalityId::Lam1Lower,
            i + 1,
            middle,
            0.0,
            Sense::AtLeast,
            true,
        ));
        let phi_vanishes = pd.phi_norm_sq[i] <= 1e-24;
        let upper = InequalityRecord::new(
            InequalityId::Lam1Upper,
            i + 1,
            middle,
            pd.kg[i],
            Sense::AtMost,
            true,
        );
        if phi_vanishes && !upper.pass {
            warnings.push(i + 1);
            records.push(InequalityRecord {
                precondition_met: false,
                pass: true,
                ..upper
            });
        } else {
            records.push(upper);
        }
    }
    Lam1Chain { records, warnings }
}

/// `K_g(u_i) ≤ 4/(λ_{k+1} − λ_i) Σ Γ(g, u_i)² d`, vacuous when `λ_{k+1} = λ_i`.
pub fn check_hp_claim(pd: &ProofData, ev: &Eigenvalues) -> Vec<InequalityRecord> {
    let next = ev.values[pd.k];
    (0..pd.k)
        .map(|i| {
            let gap = next - ev.values[i];
            let pre = gap > TOL_DEGENERATE;
            let rhs = if pre {
                4.0 / gap * pd.gamma_sq[i]
            } else {
                f64::INFINITY
            };
            InequalityRecord::new(
                InequalityId::HpClaim,
                i + 1,
                pd.kg[i],
                rhs,
                Sense::AtMost,
                pre,
            )
        })
        .collect()
}

/// Gradient-lemma quantities for one finitely supported function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GradTerms {
    /// `Σ_α ½ Σ_{x,y} |∇x_α|² |∇u|² μ_xy`.
    pub coordinate_energy: f64,
    /// `Σ_x Γ(u)(x) d_x`.
    pub energy: f64,
    /// `Σ_α Σ_x Γ(x_α, u)² d_x`.
    pub coordinate_gamma_sq: f64,
}

impl GradTerms {
    pub fn grad1_residual(&self) -> f64 {
        (self.coordinate_energy - self.energy).abs()
    }

    /// `(1/2n) Σ Γ(u) d − Σ_α Σ Γ(x_α, u)² d`; nonnegative.
    pub fn grad2_slack(&self, n: usize) -> f64 {
        self.energy / (2.0 * n as f64) - self.coordinate_gamma_sq
    }
}

pub fn grad_terms(u: &LatticeFunction) -> Result<GradTerms, ProofError> {
    let region = u.region();
    let n = region.dim();
    let d = region.degree() as f64;
    let closure = closure_points(region)?;
    let mut coordinate_energy = 0.0;
    let mut energy = 0.0;
    let mut coordinate_gamma_sq = 0.0;
    for x in &closure {
        let ux = u.at(x);
        for axis in 0..n {
            for forward in [false, true] {
                let y = x.step(axis, forward)?;
                // |∇x_α|² = 1 exactly along axis α and 0 along the others
                coordinate_energy += 0.5 * (u.at(&y) - ux).powi(2);
            }
            let coord = |p: &Point| p.coords()[axis] as f64;
            coordinate_gamma_sq += gamma_at(x, coord, |p| u.at(p))?.powi(2) * d;
        }
        energy += gamma_at(x, |p| u.at(p), |p| u.at(p))? * d;
    }
    Ok(GradTerms {
        coordinate_energy,
        energy,
        coordinate_gamma_sq,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GradLemmaReport {
    pub max_grad1_residual: f64,
    pub min_grad2_slack: f64,
    /// `max_i |Σ Γ(u_i) d − λ_i|`.
    pub max_energy_defect: f64,
}

/// Gradient identities over every eigenvector of `spec`.
pub fn check_grad_lemma(spec: &Spectrum) -> Result<GradLemmaReport, ProofError> {
    let mut rep = GradLemmaReport {
        max_grad1_residual: 0.0,
        min_grad2_slack: f64::INFINITY,
        max_energy_defect: 0.0,
    };
    for i in 0..spec.len() {
        let t = grad_terms(&spec.vector_function(i))?;
        rep.max_grad1_residual = rep.max_grad1_residual.max(t.grad1_residual());
        rep.min_grad2_slack = rep.min_grad2_slack.min(t.grad2_slack(spec.dim()));
        rep.max_energy_defect = rep
            .max_energy_defect
            .max((t.energy - spec.eigenvalues()[i]).abs());
    }
    Ok(rep)
}

/// `(Δg, Δ(g²))` at `x` for the unshifted coordinate `g = x_α` on all of ℤⁿ.
pub fn coordinate_laplacians_at(x: &Point, alpha: usize) -> Result<(f64, f64), ProofError> {
    let axis = alpha - 1;
    let g = |p: &Point| p.coords()[axis] as f64;
    Ok((
        lattice_laplacian_at(x, g)?,
        lattice_laplacian_at(x, |p| g(p).powi(2))?,
    ))
}

/// Identity checks as report records, for `k ≤ min(k_max, N − 1)` and every axis.
pub fn proof_records(spec: &Spectrum, k_max: usize) -> Result<Vec<InequalityRecord>, ProofError> {
    let ev = spec.values();
    let mut out = Vec::new();
    let identity = |id, k, dev: f64| InequalityRecord::new(id, k, dev, 0.0, Sense::AtMost, true);
    for k in 1..=k_max.min(spec.len().saturating_sub(1)) {
        for alpha in 1..=spec.dim() {
            let pd = build_proof_data(spec, k, alpha)?;
            out.push(identity(InequalityId::Prop31, k, check_prop31(&pd, ev)));
            out.push(identity(
                InequalityId::KgIdentity,
                k,
                check_kg_identity(&pd, ev),
            ));
            out.push(identity(
                InequalityId::Orthogonality,
                k,
                pd.orthogonality_residual(),
            ));
            out.extend(
                check_lam1_chain(&pd, ev)
                    .records
                    .into_iter()
                    .map(|r| InequalityRecord { k, ..r }),
            );
            out.extend(
                check_hp_claim(&pd, ev)
                    .into_iter()
                    .map(|r| InequalityRecord { k, ..r }),
            );
        }
    }
    for i in 0..spec.len() {
        let t = grad_terms(&spec.vector_function(i))?;
        out.push(identity(InequalityId::Grad1, i + 1, t.grad1_residual()));
        out.push(InequalityRecord::new(
            InequalityId::Grad2,
            i + 1,
            t.coordinate_gamma_sq,
            t.energy / (2.0 * spec.dim() as f64),
            Sense::AtMost,
            true,
        ));
        out.push(identity(
            InequalityId::Energy,
            i + 1,
            (t.energy - spec.eigenvalues()[i]).abs(),
        ));
    }
    out.sort_by_key(|r| (r.inequality_id, r.k));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::full_spectrum;
    use crate::operator::DirichletOperator;
    use crate::region::{box_region, random_connected_region, Region};

    fn spectrum(region: Region) -> Spectrum {
        full_spectrum(&DirichletOperator::assemble(region).unwrap()).unwrap()
    }

    fn two_vertex_line() -> Spectrum {
        spectrum(Region::new(1, vec![Point::new(vec![0]), Point::new(vec![1])]).unwrap())
    }

    #[test]
    fn two_vertex_closed_form() {
        // u₁ = (1, 1)/2 in the weighted norm (d = 2), g = (1, 2)
        let s = two_vertex_line();
        let pd = build_proof_data(&s, 1, 1).unwrap();
        assert!((pd.a[0][0] - 1.5).abs() < 1e-15);
        assert_eq!(pd.b[0][0], 0.0);
        assert!(check_kg_identity(&pd, s.values()) <= 1e-12);
        let chain = check_lam1_chain(&pd, s.values());
        assert!(chain.records.iter().all(|r| r.pass));
        assert!(check_hp_claim(&pd, s.values()).iter().all(|r| r.pass));
    }

    #[test]
    fn argument_validation() {
        let s = two_vertex_line();
        assert!(matches!(
            build_proof_data(&s, 2, 1),
            Err(ProofError::KOutOfRange { .. })
        ));
        assert!(matches!(
            build_proof_data(&s, 1, 2),
            Err(ProofError::AxisOutOfRange { .. })
        ));
        assert!(matches!(
            build_proof_data(&s, 0, 1),
            Err(ProofError::KOutOfRange { .. })
        ));
    }

    #[test]
    fn prop31_on_path_and_random() {
        let s = spectrum(box_region(&[3]).unwrap());
        let pd = build_proof_data(&s, 2, 1).unwrap();
        assert!(check_prop31(&pd, s.values()) <= 1e-10);

        let s = spectrum(random_connected_region(2, 40, 11).unwrap());
        for alpha in 1..=2 {
            let pd = build_proof_data(&s, 10, alpha).unwrap();
            assert!(check_prop31(&pd, s.values()) <= 1e-9);
            assert!(pd.symmetry_defect_a() <= 1e-12);
            assert!(pd.antisymmetry_defect_b() <= 1e-12);
            for (i, row) in pd.orthogonality.iter().enumerate() {
                let scale = pd.phi_norm_sq[i].sqrt().max(1.0);
                assert!(row.iter().all(|v| v.abs() <= 1e-11 * scale));
            }
        }
    }

    #[test]
    fn kg_identity_on_small_box() {
        let s = spectrum(box_region(&[2, 2]).unwrap());
        for alpha in 1..=2 {
            let pd = build_proof_data(&s, 3, alpha).unwrap();
            assert!(check_kg_identity(&pd, s.values()) <= 1e-10);
            assert!(check_hp_claim(&pd, s.values()).iter().all(|r| r.pass));
        }
    }

    #[test]
    fn lam1_chain_on_path() {
        let s = spectrum(box_region(&[4]).unwrap());
        let pd = build_proof_data(&s, 2, 1).unwrap();
        let chain = check_lam1_chain(&pd, s.values());
        assert_eq!(chain.records.len(), 4);
        assert!(chain.records.iter().all(|r| r.pass && r.precondition_met));
    }

    #[test]
    fn origin_shift_moves_only_the_diagonal_of_a() {
        let s = spectrum(random_connected_region(3, 25, 5).unwrap());
        let base = build_proof_data(&s, 6, 2).unwrap();
        let shifted = build_proof_data_with_origin(&s, 6, 2, base.origin + 7).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let expected = base.a[i][j] - if i == j { 7.0 } else { 0.0 };
                assert!((shifted.a[i][j] - expected).abs() < 1e-11);
                assert!((shifted.b[i][j] - base.b[i][j]).abs() < 1e-13);
            }
            assert!((shifted.kg[i] - base.kg[i]).abs() < 1e-11);
        }
    }

    #[test]
    fn grad_lemma() {
        let s = two_vertex_line();
        let t = grad_terms(&s.vector_function(0)).unwrap();
        assert!((t.energy - 0.5).abs() < 1e-15);
        let zero = LatticeFunction::zeros(s.region().clone());
        let t = grad_terms(&zero).unwrap();
        assert_eq!(
            (t.energy, t.coordinate_energy, t.coordinate_gamma_sq),
            (0.0, 0.0, 0.0)
        );

        let s = spectrum(random_connected_region(3, 30, 2).unwrap());
        let rep = check_grad_lemma(&s).unwrap();
        assert!(rep.max_grad1_residual <= 1e-11);
        assert!(rep.min_grad2_slack >= -1e-11);
        assert!(rep.max_energy_defect <= 1e-10);
    }

    #[test]
    fn coordinate_function_is_harmonic_with_constant_square_laplacian() {
        let b = box_region(&[6, 6, 6]).unwrap();
        for x in b
            .points()
            .iter()
            .filter(|p| p.coords().iter().all(|&c| (2..=5).contains(&c)))
        {
            for alpha in 1..=3 {
                let (lg, lg2) = coordinate_laplacians_at(x, alpha).unwrap();
                assert_eq!(lg, 0.0);
                assert!((lg2 - 1.0 / 3.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn records_all_pass_on_box() {
        let s = spectrum(box_region(&[3, 2]).unwrap());
        let recs = proof_records(&s, 10).unwrap();
        assert!(!recs.is_empty());
        assert!(
            recs.iter().all(|r| r.pass),
            "{:?}",
            recs.iter().find(|r| !r.pass)
        );
    }
}

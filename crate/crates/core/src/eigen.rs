//! Dense symmetric eigensolver for `−Δ_Ω`.
//!
//! Householder reduction to tridiagonal form followed by the implicit-shift QL
//! iteration, accumulating the orthogonal transformations. The constant degree
//! `d = 2n` means the weighted problem is the standard one rescaled: unit
//! Euclidean eigenvectors are divided by `√d` so that `Σ u_i u_j d = δ_ij`.

use std::cmp::Ordering;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::operator::{weighted_dot, DirichletOperator, LatticeFunction};
use crate::region::Region;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EigenError {
    #[error("QL iteration did not converge after {iterations} sweeps (index {index}, off-diagonal {offdiag:e})")]
    NoConvergence {
        iterations: usize,
        index: usize,
        offdiag: f64,
    },
    #[error("matrix is empty")]
    Empty,
}

/// Ascending eigenvalues together with the ambient dimension `n`.
///
/// This is all the inequality checks need, so it can also be built directly
/// from a list of numbers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Eigenvalues {
    pub n: usize,
    pub values: Vec<f64>,
}

impl Eigenvalues {
    /// Sorts `values` ascending.
    pub fn new(n: usize, mut values: Vec<f64>) -> Self {
        values.sort_by(f64::total_cmp);
        Eigenvalues { n, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// 1-based access, `λ_i`.
    pub fn lambda(&self, i: usize) -> f64 {
        self.values[i - 1]
    }

    /// `λ_1..=λ_k`.
    pub fn prefix(&self, k: usize) -> &[f64] {
        &self.values[..k]
    }
}

/// Full eigendecomposition of a Dirichlet operator.
#[derive(Debug, Clone)]
pub struct Spectrum {
    region: Arc<Region>,
    values: Eigenvalues,
    /// Column `i` is `u_{i+1}`, weighted-orthonormal.
    vectors: Vec<Vec<f64>>,
}

impl Spectrum {
    pub fn region(&self) -> &Arc<Region> {
        &self.region
    }

    pub fn values(&self) -> &Eigenvalues {
        &self.values
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.values.values
    }

    /// Ambient dimension `n`.
    pub fn dim(&self) -> usize {
        self.values.n
    }

    /// Matrix size `N`.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Eigenvector `u_{i+1}` (0-based column index).
    pub fn vector(&self, i: usize) -> &[f64] {
        &self.vectors[i]
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn vector_function(&self, i: usize) -> LatticeFunction {
        LatticeFunction::new(self.region.clone(), self.vectors[i].clone())
            .expect("length matches region")
    }

    pub fn to_json(&self, include_vectors: bool) -> String {
        let dump = SpectrumDump {
            eigenvalues: &self.values.values,
            n: self.values.n,
            size: self.len(),
            eigenvectors: include_vectors.then_some(&self.vectors),
        };
        let mut s = serde_json::to_string(&dump).expect("spectrum serializes");
        s.push('\n');
        s
    }

    /// Hash of the eigenvalues rounded to 9 decimals, for cross-run comparison.
    pub fn fingerprint(&self) -> u64 {
        // FNV-1a
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for v in &self.values.values {
            for b in format!("{v:.9};").bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        h
    }
}

#[derive(Serialize)]
struct SpectrumDump<'a> {
    eigenvalues: &'a [f64],
    n: usize,
    #[serde(rename = "N")]
    size: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    eigenvectors: Option<&'a Vec<Vec<f64>>>,
}

/// All `N` eigenpairs of `op`, ascending.
pub fn full_spectrum(op: &DirichletOperator) -> Result<Spectrum, EigenError> {
    let n = op.size();
    if n == 0 {
        return Err(EigenError::Empty);
    }
    let (values, vectors) = symmetric_eigen(op.to_dense())?;
    let degree = op.region().degree();
    let scale = 1.0 / (degree as f64).sqrt();

    let mut pairs: Vec<(f64, Vec<f64>)> = values
        .into_iter()
        .zip(vectors)
        .map(|(lambda, mut v)| {
            fix_sign(&mut v);
            v.iter_mut().for_each(|x| *x *= scale);
            (lambda, v)
        })
        .collect();
    pairs.sort_by(|a, b| match a.0.total_cmp(&b.0) {
        Ordering::Equal => lex_cmp(&a.1, &b.1),
        o => o,
    });
    let (values, vectors): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    Ok(Spectrum {
        region: op.region().clone(),
        values: Eigenvalues {
            n: op.region().dim(),
            values,
        },
        vectors,
    })
}

fn fix_sign(v: &mut [f64]) {
    let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-12 * max) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| *o != Ordering::Equal)
        .unwrap_or(Ordering::Equal)
}

/// Eigenvalues and unit eigenvectors (as columns) of a dense symmetric matrix.
///
/// The input is row-major; only symmetry is assumed. Eigenvalues come back in
/// the order the QL sweep leaves them, unsorted.
pub fn symmetric_eigen(a: Vec<Vec<f64>>) -> Result<(Vec<f64>, Vec<Vec<f64>>), EigenError> {
    let n = a.len();
    if n == 0 {
        return Err(EigenError::Empty);
    }
    let mut v = a;
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(&mut v, &mut d, &mut e);
    ql_implicit(&mut v, &mut d, &mut e)?;
    let columns = (0..n).map(|j| (0..n).map(|i| v[i][j]).collect()).collect();
    Ok((d, columns))
}

/// Householder reduction; on exit `v` holds the accumulated transformation,
/// `d` the diagonal and `e[1..]` the subdiagonal.
fn tridiagonalize(v: &mut [Vec<f64>], d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    d.copy_from_slice(&v[n - 1]);

    for i in (1..n).rev() {
        let scale: f64 = d[..i].iter().map(|x| x.abs()).sum();
        let mut h = 0.0;
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[i - 1][j];
                v[i][j] = 0.0;
                v[j][i] = 0.0;
            }
        } else {
            for dk in d[..i].iter_mut() {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            e[..i].iter_mut().for_each(|x| *x = 0.0);

            for j in 0..i {
                f = d[j];
                v[j][i] = f;
                g = e[j] + v[j][j] * f;
                for k in (j + 1)..i {
                    g += v[k][j] * d[k];
                    e[k] += v[k][j] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[k][j] -= f * e[k] + g * d[k];
                }
                d[j] = v[i - 1][j];
                v[i][j] = 0.0;
            }
        }
        d[i] = h;
    }

    for i in 0..n - 1 {
        v[n - 1][i] = v[i][i];
        v[i][i] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[k][i + 1] / h;
            }
            for j in 0..=i {
                let g: f64 = (0..=i).map(|k| v[k][i + 1] * v[k][j]).sum();
                for k in 0..=i {
                    v[k][j] -= g * d[k];
                }
            }
        }
        for row in v.iter_mut().take(i + 1) {
            row[i + 1] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[n - 1][j];
        v[n - 1][j] = 0.0;
    }
    v[n - 1][n - 1] = 1.0;
    e[0] = 0.0;
}

/// Implicit-shift QL on the tridiagonal `(d, e)`, rotating the columns of `v`.
fn ql_implicit(v: &mut [Vec<f64>], d: &mut [f64], e: &mut [f64]) -> Result<(), EigenError> {
    let n = d.len();
    let max_sweeps = 30 * n;
    let mut sweeps = 0usize;
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let eps = f64::EPSILON;
    let mut shift_total = 0.0;
    let mut tst1 = 0.0f64;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            loop {
                sweeps += 1;
                if sweeps > max_sweeps {
                    return Err(EigenError::NoConvergence {
                        iterations: sweeps - 1,
                        index: l,
                        offdiag: e[l],
                    });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                shift_total += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for row in v.iter_mut() {
                        let t = row[i + 1];
                        row[i + 1] = s * row[i] + c * t;
                        row[i] = c * row[i] - s * t;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += shift_total;
        e[l] = 0.0;
    }
    Ok(())
}

/// `{1 − (1/n) Σ_α cos(j_α π / (m_α + 1)) : 1 ≤ j_α ≤ m_α}`, ascending.
///
/// Closed form for the box `{1..m₁}×…×{1..m_n}`; no matrix involved.
pub fn box_spectrum_oracle(dims: &[usize]) -> Vec<f64> {
    let n = dims.len() as f64;
    let mut sums = vec![0.0f64];
    for &m in dims {
        let cosines: Vec<f64> = (1..=m)
            .map(|j| (j as f64 * std::f64::consts::PI / (m as f64 + 1.0)).cos())
            .collect();
        sums = sums
            .iter()
            .flat_map(|s| cosines.iter().map(move |c| s + c))
            .collect();
    }
    let mut out: Vec<f64> = sums.into_iter().map(|s| 1.0 - s / n).collect();
    out.sort_by(f64::total_cmp);
    out
}

/// Solver quality measurements for one decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralDiagnostics {
    /// `max_i ‖(−Δ_Ω) u_i − λ_i u_i‖₂`.
    pub max_residual: f64,
    /// `max_{i,j} |⟨u_i, u_j⟩ − δ_ij|`.
    pub max_orthonormality_defect: f64,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    /// `|Σ λ_i − N| / N`.
    pub trace_defect: f64,
}

/// Default eigen tolerance `1e-10 · N · ‖op‖_∞`.
pub fn default_tol_eig(op: &DirichletOperator) -> f64 {
    1e-10 * op.size() as f64 * op.inf_norm()
}

pub fn spectral_checks(spec: &Spectrum, op: &DirichletOperator) -> SpectralDiagnostics {
    let size = spec.len();
    let degree = op.region().degree();
    let mut max_residual = 0.0f64;
    for (i, u) in spec.vectors.iter().enumerate() {
        let lambda = spec.values.values[i];
        let au = op.mul_slice(u);
        let r = au
            .iter()
            .zip(u)
            .map(|(a, x)| (a - lambda * x).powi(2))
            .sum::<f64>()
            .sqrt();
        max_residual = max_residual.max(r);
    }
    let mut defect = 0.0f64;
    for i in 0..size {
        for j in i..size {
            let ip = weighted_dot(degree, &spec.vectors[i], &spec.vectors[j]);
            let target = if i == j { 1.0 } else { 0.0 };
            defect = defect.max((ip - target).abs());
        }
    }
    let values = &spec.values.values;
    let trace: f64 = values.iter().sum();
    SpectralDiagnostics {
        max_residual,
        max_orthonormality_defect: defect,
        min_eigenvalue: values[0],
        max_eigenvalue: values[size - 1],
        trace_defect: (trace - size as f64).abs() / size as f64,
    }
}

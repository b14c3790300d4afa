//! The Dirichlet Laplacian `−Δ_Ω` and the discrete calculus around it.
//!
//! With `d = 2n` the ambient degree, `−Δ_Ω f(x) = f(x) − (1/d) Σ_{y∼x, y∈Ω} f(y)`,
//! i.e. the Laplacian applied to the null extension of `f`. The weighted inner
//! product is `⟨f, g⟩ = Σ_{x∈Ω} f(x) g(x) d`.
//!
//! Sums that the theory takes over all of ℤⁿ (the gradient form `Γ`, Green's
//! formula) are evaluated over `Ω ∪ δΩ`; every other term vanishes under null
//! extension.

use std::io::{self, Write};
use std::sync::Arc;

use thiserror::Error;

use crate::region::{Point, Region, RegionError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("function is defined on a different region")]
    RegionMismatch,
    #[error("expected {expected} values, got {found}")]
    Length { expected: usize, found: usize },
    #[error(transparent)]
    Region(#[from] RegionError),
}

/// `−Δ_Ω` in compressed sparse rows, indexed by the region's canonical order.
#[derive(Debug, Clone)]
pub struct DirichletOperator {
    region: Arc<Region>,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl DirichletOperator {
    pub fn assemble(region: impl Into<Arc<Region>>) -> Result<Self, OperatorError> {
        let region = region.into();
        let adjacency = region.adjacency()?;
        let off = -1.0 / region.degree() as f64;
        let mut row_ptr = Vec::with_capacity(region.len() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for (i, nbrs) in adjacency.iter().enumerate() {
            let mut row: Vec<(usize, f64)> = nbrs.iter().map(|&j| (j, off)).collect();
            row.push((i, 1.0));
            row.sort_by_key(|&(j, _)| j);
            for (j, v) in row {
                col_idx.push(j);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Ok(DirichletOperator {
            region,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn region(&self) -> &Arc<Region> {
        &self.region
    }

    /// Matrix size `N = ♯Ω`.
    pub fn size(&self) -> usize {
        self.region.len()
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let row = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[row.clone()].binary_search(&j) {
            Ok(pos) => self.values[row.start + pos],
            Err(_) => 0.0,
        }
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.size();
        let mut out = vec![vec![0.0; n]; n];
        for (i, row) in out.iter_mut().enumerate() {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                row[self.col_idx[p]] = self.values[p];
            }
        }
        out
    }

    /// Maximum absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        (0..self.size())
            .map(|i| {
                self.values[self.row_ptr[i]..self.row_ptr[i + 1]]
                    .iter()
                    .map(|v| v.abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    pub fn mul_slice(&self, x: &[f64]) -> Vec<f64> {
        (0..self.size())
            .map(|i| {
                (self.row_ptr[i]..self.row_ptr[i + 1])
                    .map(|p| self.values[p] * x[self.col_idx[p]])
                    .sum()
            })
            .collect()
    }

    pub fn apply(&self, f: &LatticeFunction) -> Result<LatticeFunction, OperatorError> {
        f.check_region(&self.region)?;
        Ok(LatticeFunction {
            region: self.region.clone(),
            values: self.mul_slice(&f.values),
        })
    }

    /// Coordinate-list dump, one `row col value` triple per line (0-based).
    pub fn write_coo<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "# {} {} {}", self.size(), self.size(), self.nnz())?;
        for i in 0..self.size() {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                writeln!(w, "{} {} {:e}", i, self.col_idx[p], self.values[p])?;
            }
        }
        Ok(())
    }
}

/// A real function on Ω, implicitly zero everywhere else in ℤⁿ.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeFunction {
    region: Arc<Region>,
    values: Vec<f64>,
}

impl LatticeFunction {
    pub fn new(region: Arc<Region>, values: Vec<f64>) -> Result<Self, OperatorError> {
        if values.len() != region.len() {
            return Err(OperatorError::Length {
                expected: region.len(),
                found: values.len(),
            });
        }
        Ok(LatticeFunction { region, values })
    }

    pub fn zeros(region: Arc<Region>) -> Self {
        let values = vec![0.0; region.len()];
        LatticeFunction { region, values }
    }

    pub fn region(&self) -> &Arc<Region> {
        &self.region
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value of the null extension at any lattice point.
    pub fn at(&self, p: &Point) -> f64 {
        self.region.index_of(p).map_or(0.0, |i| self.values[i])
    }

    fn check_region(&self, region: &Arc<Region>) -> Result<(), OperatorError> {
        if Arc::ptr_eq(&self.region, region) || *self.region == **region {
            Ok(())
        } else {
            Err(OperatorError::RegionMismatch)
        }
    }
}

/// `Σ_{x∈Ω} f(x) g(x) d_x`.
pub fn weighted_inner(f: &LatticeFunction, g: &LatticeFunction) -> Result<f64, OperatorError> {
    g.check_region(&f.region)?;
    let d = f.region.degree() as f64;
    Ok(f.values
        .iter()
        .zip(&g.values)
        .map(|(a, b)| a * b)
        .sum::<f64>()
        * d)
}

/// Weighted inner product on raw vectors in canonical order.
pub fn weighted_dot(degree: usize, a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() * degree as f64
}

/// Full-lattice Laplacian `(1/2n) Σ_{y∼x} f(y) − f(x)` of an arbitrary function.
pub fn lattice_laplacian_at<F>(x: &Point, f: F) -> Result<f64, RegionError>
where
    F: Fn(&Point) -> f64,
{
    let nbrs = x.lattice_neighbors()?;
    let d = nbrs.len() as f64;
    Ok(nbrs.iter().map(&f).sum::<f64>() / d - f(x))
}

/// `Γ(f, g)(x) = (1/2d) Σ_{y∼x} ∇_{xy}f ∇_{xy}g` for arbitrary lattice functions.
pub fn gamma_at<F, G>(x: &Point, f: F, g: G) -> Result<f64, RegionError>
where
    F: Fn(&Point) -> f64,
    G: Fn(&Point) -> f64,
{
    let nbrs = x.lattice_neighbors()?;
    let d = nbrs.len() as f64;
    let (fx, gx) = (f(x), g(x));
    Ok(nbrs.iter().map(|y| (f(y) - fx) * (g(y) - gx)).sum::<f64>() / (2.0 * d))
}

/// `Ω` followed by `δΩ`; the support of every null-extended quantity we sum.
pub fn closure_points(region: &Region) -> Result<Vec<Point>, RegionError> {
    let mut pts = region.points().to_vec();
    pts.extend(region.boundary()?.points().iter().cloned());
    Ok(pts)
}

/// Pointwise `Γ(f̃, g̃)` on Ω, using all `2n` lattice neighbors.
pub fn gamma(
    region: &Arc<Region>,
    f: &LatticeFunction,
    g: &LatticeFunction,
) -> Result<LatticeFunction, OperatorError> {
    f.check_region(region)?;
    g.check_region(region)?;
    let values = region
        .points()
        .iter()
        .map(|x| gamma_at(x, |p| f.at(p), |p| g.at(p)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(LatticeFunction {
        region: region.clone(),
        values,
    })
}

/// `Γ(f̃, g̃)` on `Ω ∪ δΩ`, paired with the points in [`closure_points`] order.
pub fn gamma_on_closure(
    region: &Arc<Region>,
    f: &LatticeFunction,
    g: &LatticeFunction,
) -> Result<Vec<(Point, f64)>, OperatorError> {
    f.check_region(region)?;
    g.check_region(region)?;
    closure_points(region)?
        .into_iter()
        .map(|x| {
            let v = gamma_at(&x, |p| f.at(p), |p| g.at(p))?;
            Ok((x, v))
        })
        .collect()
}

/// `Σ_x (Δf̃)(x) g̃(x) d_x + ½ Σ_{x,y} μ_xy ∇_{xy}f̃ ∇_{xy}g̃`, summed over `Ω ∪ δΩ`.
///
/// Green's formula makes this zero; the returned value is the rounding residue.
pub fn green_residual(
    region: &Arc<Region>,
    f: &LatticeFunction,
    g: &LatticeFunction,
) -> Result<f64, OperatorError> {
    f.check_region(region)?;
    g.check_region(region)?;
    let d = region.degree() as f64;
    let mut lhs = 0.0;
    let mut edges = 0.0;
    for x in closure_points(region)? {
        let fx = f.at(&x);
        let gx = g.at(&x);
        lhs += lattice_laplacian_at(&x, |p| f.at(p))? * gx * d;
        for y in x.lattice_neighbors()? {
            edges += (f.at(&y) - fx) * (g.at(&y) - gx);
        }
    }
    Ok(lhs + 0.5 * edges)
}

/// `f(x)g(x) + f(y)g(y) − ½[(f(x)+f(y))(g(x)+g(y)) + ∇f ∇g]`, identically zero.
pub fn elementary_identity_residual(fx: f64, fy: f64, gx: f64, gy: f64) -> f64 {
    fx * gx + fy * gy - 0.5 * ((fx + fy) * (gx + gy) + (fy - fx) * (gy - gx))
}

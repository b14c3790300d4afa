//! Finite subsets of the integer lattice ℤⁿ.
//!
//! A [`Region`] stores its points in lexicographic order; that order fixes the
//! row/column indexing of every matrix assembled from it. Adjacency is always
//! taken in the ambient lattice, so every vertex has degree `2n` regardless of
//! how many of its neighbors lie inside the region.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::SplitMix64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RegionError {
    #[error("point has {found} coordinates, expected {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("ambient dimension must be positive")]
    ZeroDimension,
    #[error("region must contain at least one point")]
    Empty,
    #[error("box extent along axis {axis} is zero")]
    ZeroExtent { axis: usize },
    #[error("point {0} is not in the region")]
    NotMember(Point),
    #[error("coordinate overflow while stepping from {0}")]
    CoordinateOverflow(Point),
    #[error("coordinate {0} does not fit in a signed 32-bit integer")]
    CoordinateRange(i64),
}

/// A lattice point. Ordering is lexicographic on coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<i32>);

impl Point {
    pub fn new(coords: Vec<i32>) -> Self {
        Point(coords)
    }

    pub fn origin(n: usize) -> Self {
        Point(vec![0; n])
    }

    pub fn coords(&self) -> &[i32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `self ± e_axis`, failing instead of wrapping at the i32 limits.
    pub fn step(&self, axis: usize, forward: bool) -> Result<Point, RegionError> {
        let c = self.0[axis];
        let moved = if forward {
            c.checked_add(1)
        } else {
            c.checked_sub(1)
        };
        let moved = moved.ok_or_else(|| RegionError::CoordinateOverflow(self.clone()))?;
        let mut coords = self.0.clone();
        coords[axis] = moved;
        Ok(Point(coords))
    }

    /// All `2n` lattice neighbors in lexicographic order.
    pub fn lattice_neighbors(&self) -> Result<Vec<Point>, RegionError> {
        let mut out = Vec::with_capacity(2 * self.dim());
        for axis in 0..self.dim() {
            out.push(self.step(axis, false)?);
            out.push(self.step(axis, true)?);
        }
        out.sort();
        Ok(out)
    }

    pub fn is_adjacent(&self, other: &Point) -> bool {
        self.dim() == other.dim()
            && self
                .0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| (*a as i64 - *b as i64).abs())
                .sum::<i64>()
                == 1
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl From<Vec<i32>> for Point {
    fn from(v: Vec<i32>) -> Self {
        Point(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Metric {
    #[default]
    L1,
    LInf,
}

/// A nonempty finite subset of ℤⁿ in canonical (lexicographic) order.
#[derive(Debug, Clone)]
pub struct Region {
    n: usize,
    points: Vec<Point>,
    index: HashMap<Point, usize>,
}

impl PartialEq for Region {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.points == other.points
    }
}

impl Eq for Region {}

impl Region {
    /// Deduplicates and sorts `points`.
    pub fn new(n: usize, points: Vec<Point>) -> Result<Self, RegionError> {
        if n == 0 {
            return Err(RegionError::ZeroDimension);
        }
        if points.is_empty() {
            return Err(RegionError::Empty);
        }
        if let Some(p) = points.iter().find(|p| p.dim() != n) {
            return Err(RegionError::Dimension {
                expected: n,
                found: p.dim(),
            });
        }
        let mut points = points;
        points.sort();
        points.dedup();
        let index = points
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, p)| (p, i))
            .collect();
        Ok(Region { n, points, index })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Ambient lattice degree `2n`.
    pub fn degree(&self) -> usize {
        2 * self.n
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn index_of(&self, p: &Point) -> Option<usize> {
        self.index.get(p).copied()
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.index.contains_key(p)
    }

    /// Neighbors of `p` that lie in the region, in canonical order.
    pub fn neighbors_in(&self, p: &Point) -> Result<Vec<Point>, RegionError> {
        if !self.contains(p) {
            return Err(RegionError::NotMember(p.clone()));
        }
        Ok(p.lattice_neighbors()?
            .into_iter()
            .filter(|q| self.contains(q))
            .collect())
    }

    /// Index lists of in-region neighbors, one per vertex.
    pub fn adjacency(&self) -> Result<Vec<Vec<usize>>, RegionError> {
        self.points
            .iter()
            .map(|p| {
                Ok(p.lattice_neighbors()?
                    .iter()
                    .filter_map(|q| self.index_of(q))
                    .collect())
            })
            .collect()
    }

    /// Vertex boundary: lattice points outside the region adjacent to it.
    pub fn boundary(&self) -> Result<Boundary, RegionError> {
        let mut out = HashSet::new();
        for p in &self.points {
            for q in p.lattice_neighbors()? {
                if !self.contains(&q) {
                    out.insert(q);
                }
            }
        }
        let mut points: Vec<Point> = out.into_iter().collect();
        points.sort();
        Ok(Boundary { points })
    }

    /// Whether the induced subgraph is connected.
    pub fn is_connected(&self) -> bool {
        let adj = match self.adjacency() {
            Ok(a) => a,
            Err(_) => return false,
        };
        let mut seen = vec![false; self.len()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        count == self.len()
    }

    /// Per-axis minimum coordinate.
    pub fn lower_corner(&self) -> Vec<i32> {
        (0..self.n)
            .map(|a| self.points.iter().map(|p| p.0[a]).min().unwrap_or(0))
            .collect()
    }

    pub fn to_file(&self) -> RegionFile {
        RegionFile {
            n: self.n,
            points: self
                .points
                .iter()
                .map(|p| p.0.iter().map(|&c| c as i64).collect())
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(&self.to_file()).expect("region serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, RegionFileError> {
        let file: RegionFile = serde_json::from_str(text)?;
        Ok(file.into_region()?)
    }
}

/// Vertex boundary of a region, sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Boundary {
    points: Vec<Point>,
}

impl Boundary {
    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// On-disk region format: `{"n": int, "points": [[int, ...], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionFile {
    pub n: usize,
    pub points: Vec<Vec<i64>>,
}

#[derive(Debug, Error)]
pub enum RegionFileError {
    #[error("malformed region JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Region(#[from] RegionError),
}

impl RegionFile {
    pub fn into_region(self) -> Result<Region, RegionError> {
        let points = self
            .points
            .into_iter()
            .map(|coords| {
                coords
                    .into_iter()
                    .map(|c| i32::try_from(c).map_err(|_| RegionError::CoordinateRange(c)))
                    .collect::<Result<Vec<_>, _>>()
                    .map(Point)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Region::new(self.n, points)
    }
}

/// `{1..m₁} × … × {1..m_n}`.
pub fn box_region(dims: &[usize]) -> Result<Region, RegionError> {
    if dims.is_empty() {
        return Err(RegionError::ZeroDimension);
    }
    if let Some(axis) = dims.iter().position(|&m| m == 0) {
        return Err(RegionError::ZeroExtent { axis });
    }
    let mut points = vec![Vec::with_capacity(dims.len())];
    for &m in dims {
        let m = i32::try_from(m).map_err(|_| RegionError::CoordinateRange(m as i64))?;
        points = points
            .into_iter()
            .flat_map(|prefix| {
                (1..=m).map(move |c| {
                    let mut v = prefix.clone();
                    v.push(c);
                    v
                })
            })
            .collect();
    }
    Region::new(dims.len(), points.into_iter().map(Point).collect())
}

/// Lattice points within `radius` of `center` in the chosen metric.
pub fn ball_region(
    n: usize,
    radius: u32,
    center: &Point,
    metric: Metric,
) -> Result<Region, RegionError> {
    if n == 0 {
        return Err(RegionError::ZeroDimension);
    }
    if center.dim() != n {
        return Err(RegionError::Dimension {
            expected: n,
            found: center.dim(),
        });
    }
    let r = radius as i64;
    let mut offsets: Vec<Vec<i64>> = vec![Vec::new()];
    for _ in 0..n {
        offsets = offsets
            .into_iter()
            .flat_map(|prefix| {
                (-r..=r).map(move |c| {
                    let mut v = prefix.clone();
                    v.push(c);
                    v
                })
            })
            .collect();
    }
    let mut points = Vec::new();
    for off in offsets {
        let inside = match metric {
            Metric::L1 => off.iter().map(|c| c.abs()).sum::<i64>() <= r,
            Metric::LInf => off.iter().all(|c| c.abs() <= r),
        };
        if !inside {
            continue;
        }
        let coords = center
            .0
            .iter()
            .zip(&off)
            .map(|(&c, &o)| {
                let v = c as i64 + o;
                i32::try_from(v).map_err(|_| RegionError::CoordinateRange(v))
            })
            .collect::<Result<Vec<_>, _>>()?;
        points.push(Point(coords));
    }
    Region::new(n, points)
}

/// `size` consecutive points along the first axis starting at the origin.
pub fn path_region(n: usize, size: usize) -> Result<Region, RegionError> {
    if n == 0 {
        return Err(RegionError::ZeroDimension);
    }
    if size == 0 {
        return Err(RegionError::Empty);
    }
    let points = (0..size)
        .map(|i| {
            let mut v = vec![0i32; n];
            v[0] = i32::try_from(i).map_err(|_| RegionError::CoordinateRange(i as i64))?;
            Ok(Point(v))
        })
        .collect::<Result<Vec<_>, RegionError>>()?;
    Region::new(n, points)
}

/// Connected region grown from the origin by uniform frontier sampling.
///
/// The frontier is a list of lattice points adjacent to the current region and
/// not in it, kept in insertion order. Each step draws `i = rng.below(len)`,
/// removes entry `i` with swap-remove, adds it to the region and appends its
/// not-yet-seen neighbors in lexicographic order.
pub fn random_connected_region(n: usize, size: usize, seed: u64) -> Result<Region, RegionError> {
    if n == 0 {
        return Err(RegionError::ZeroDimension);
    }
    if size == 0 {
        return Err(RegionError::Empty);
    }
    let mut rng = SplitMix64::new(seed);
    let start = Point::origin(n);
    let mut members = vec![start.clone()];
    let mut seen: HashSet<Point> = HashSet::from([start.clone()]);
    let mut frontier = Vec::new();
    for q in start.lattice_neighbors()? {
        seen.insert(q.clone());
        frontier.push(q);
    }
    while members.len() < size {
        let i = rng.below(frontier.len());
        let p = frontier.swap_remove(i);
        for q in p.lattice_neighbors()? {
            if seen.insert(q.clone()) {
                frontier.push(q);
            }
        }
        members.push(p);
    }
    Region::new(n, members)
}

//! Uniform tensor-product grids on intervals and rectangles, nodal fields,
//! trapezoidal quadrature, finite-difference gradients and the exact
//! boundary-distance function.

use crate::error::{Error, Result};

/// A node of a [`Grid`]: its flat index and its coordinates.
///
/// In 1D the second coordinate is always `0.0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Node {
    pub index: usize,
    pub x: [f64; 2],
}

/// Node-centred uniform grid on `(lo, hi)` (1D) or a rectangle (2D).
///
/// Nodes are numbered with the first axis running fastest:
/// `index = i + n[0] * j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    dim: usize,
    lo: [f64; 2],
    hi: [f64; 2],
    n: [usize; 2],
    h: [f64; 2],
}

impl Grid {
    pub fn new(dim: usize, extents: &[(f64, f64)], n: &[usize]) -> Result<Grid> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!("dimension must be 1 or 2, got {dim}")));
        }
        if extents.len() != dim || n.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "expected {dim} extents and node counts, got {} and {}",
                extents.len(),
                n.len()
            )));
        }
        let mut lo = [0.0; 2];
        let mut hi = [0.0; 2];
        let mut nn = [1usize; 2];
        let mut h = [0.0; 2];
        for axis in 0..dim {
            let (a, b) = extents[axis];
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::InvalidGrid(format!("axis {axis}: extent ({a}, {b}) is degenerate")));
            }
            if n[axis] < 3 {
                return Err(Error::InvalidGrid(format!("axis {axis}: need at least 3 nodes, got {}", n[axis])));
            }
            lo[axis] = a;
            hi[axis] = b;
            nn[axis] = n[axis];
            h[axis] = (b - a) / (n[axis] - 1) as f64;
        }
        Ok(Grid { dim, lo, hi, n: nn, h })
    }

    pub fn interval(lo: f64, hi: f64, n: usize) -> Result<Grid> {
        Grid::new(1, &[(lo, hi)], &[n])
    }

    pub fn rectangle(x: (f64, f64), y: (f64, f64), n: (usize, usize)) -> Result<Grid> {
        Grid::new(2, &[x, y], &[n.0, n.1])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Node count along `axis`.
    pub fn n(&self, axis: usize) -> usize {
        self.n[axis]
    }

    /// Spacing along `axis`.
    pub fn h(&self, axis: usize) -> f64 {
        self.h[axis]
    }

    pub fn extent(&self, axis: usize) -> (f64, f64) {
        (self.lo[axis], self.hi[axis])
    }

    /// Total number of nodes.
    pub fn len(&self) -> usize {
        self.n[0] * self.n[1]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.n[0] * j
    }

    pub fn ij(&self, index: usize) -> (usize, usize) {
        (index % self.n[0], index / self.n[0])
    }

    fn coord(&self, axis: usize, i: usize) -> f64 {
        if i + 1 == self.n[axis] {
            self.hi[axis]
        } else {
            self.lo[axis] + i as f64 * self.h[axis]
        }
    }

    pub fn coords(&self, index: usize) -> [f64; 2] {
        let (i, j) = self.ij(index);
        if self.dim == 1 {
            [self.coord(0, i), 0.0]
        } else {
            [self.coord(0, i), self.coord(1, j)]
        }
    }

    pub fn node(&self, index: usize) -> Node {
        Node { index, x: self.coords(index) }
    }

    pub fn nodes(&self) -> impl Iterator<Item = Node> + '_ {
        (0..self.len()).map(move |k| self.node(k))
    }

    pub fn is_boundary(&self, index: usize) -> bool {
        let (i, j) = self.ij(index);
        let on_x = i == 0 || i + 1 == self.n[0];
        if self.dim == 1 {
            on_x
        } else {
            on_x || j == 0 || j + 1 == self.n[1]
        }
    }

    pub fn interior(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&k| !self.is_boundary(k))
    }

    /// |Ω|.
    pub fn measure(&self) -> f64 {
        (0..self.dim).map(|a| self.hi[a] - self.lo[a]).product()
    }

    /// Radius of the largest inscribed ball, i.e. the maximum of `d(x)`.
    pub fn inradius(&self) -> f64 {
        (0..self.dim).map(|a| 0.5 * (self.hi[a] - self.lo[a])).fold(f64::INFINITY, f64::min)
    }

    /// Composite trapezoidal weights (tensor product in 2D).
    pub fn weights(&self) -> Vec<f64> {
        let axis_weight = |axis: usize, i: usize| {
            if i == 0 || i + 1 == self.n[axis] {
                0.5 * self.h[axis]
            } else {
                self.h[axis]
            }
        };
        (0..self.len())
            .map(|k| {
                let (i, j) = self.ij(k);
                if self.dim == 1 {
                    axis_weight(0, i)
                } else {
                    axis_weight(0, i) * axis_weight(1, j)
                }
            })
            .collect()
    }
}

/// Real values attached to the nodes of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<ScalarField> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), got: values.len() });
        }
        if let Some(node) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { node });
        }
        Ok(ScalarField { grid, values })
    }

    pub fn constant(grid: Grid, c: f64) -> ScalarField {
        ScalarField { grid, values: vec![c; grid.len()] }
    }

    pub fn zeros(grid: Grid) -> ScalarField {
        ScalarField::constant(grid, 0.0)
    }

    /// Samples `f` at every node.
    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> f64) -> ScalarField {
        let values = (0..grid.len()).map(|k| f(grid.coords(k))).collect();
        ScalarField { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, index: usize) -> f64 {
        self.values[index]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        let values: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        debug_assert!(values.iter().all(|v| v.is_finite()));
        ScalarField { grid: self.grid, values }
    }

    /// Nodewise combination of two fields on the same grid.
    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<ScalarField> {
        self.check_same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        ScalarField::from_values(self.grid, values)
    }

    pub fn scale(&self, c: f64) -> ScalarField {
        self.map(|v| c * v)
    }

    /// `max_i |self_i - other_i|`.
    pub fn sup_distance(&self, other: &ScalarField) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self.values.iter().zip(&other.values).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    pub fn check_same_grid(&self, other: &ScalarField) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Copy with every boundary node set to zero.
    pub fn with_zero_boundary(&self) -> ScalarField {
        let mut out = self.clone();
        for k in 0..self.grid.len() {
            if self.grid.is_boundary(k) {
                out.values[k] = 0.0;
            }
        }
        out
    }
}

/// Exact distance `d(x) = dist(x, ∂Ω)` at every node; zero on boundary nodes.
pub fn distance_field(grid: &Grid) -> ScalarField {
    let values = (0..grid.len())
        .map(|k| {
            if grid.is_boundary(k) {
                return 0.0;
            }
            let x = grid.coords(k);
            (0..grid.dim())
                .map(|a| {
                    let (lo, hi) = grid.extent(a);
                    (x[a] - lo).min(hi - x[a])
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    ScalarField { grid: *grid, values }
}

/// Trapezoidal quadrature of a nodal field. Summation runs in node order and
/// the cell volume is factored out of the sum.
pub fn integrate(field: &ScalarField) -> f64 {
    let grid = &field.grid;
    let end_factor = |axis: usize, i: usize| if i == 0 || i + 1 == grid.n[axis] { 0.5 } else { 1.0 };
    let sum: f64 = field
        .values
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let (i, j) = grid.ij(k);
            let c = if grid.dim == 1 { end_factor(0, i) } else { end_factor(0, i) * end_factor(1, j) };
            c * v
        })
        .sum();
    let cell: f64 = (0..grid.dim).map(|a| grid.h[a]).product();
    cell * sum
}

/// Per-axis partial derivatives: centred differences inside, second-order
/// one-sided differences on the boundary.
pub fn gradient(field: &ScalarField) -> Vec<ScalarField> {
    let grid = field.grid;
    let u = &field.values;
    (0..grid.dim())
        .map(|axis| {
            let n = grid.n(axis);
            let h = grid.h(axis);
            let values = (0..grid.len())
                .map(|k| {
                    let (i, j) = grid.ij(k);
                    let pos = if axis == 0 { i } else { j };
                    let at = |p: usize| {
                        if axis == 0 {
                            u[grid.index(p, j)]
                        } else {
                            u[grid.index(i, p)]
                        }
                    };
                    if pos == 0 {
                        (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h)
                    } else if pos + 1 == n {
                        (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) / (2.0 * h)
                    } else {
                        (at(pos + 1) - at(pos - 1)) / (2.0 * h)
                    }
                })
                .collect();
            ScalarField { grid, values }
        })
        .collect()
}

/// Euclidean norm of the nodal gradient, maximised over all nodes.
pub fn max_gradient_norm(field: &ScalarField) -> f64 {
    let g = gradient(field);
    (0..field.grid.len()).map(|k| g.iter().map(|c| c.values[k].powi(2)).sum::<f64>().sqrt()).fold(0.0, f64::max)
}

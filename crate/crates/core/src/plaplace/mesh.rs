//! Linear finite elements on the node grid: cells in 1D, each rectangle
//! split into two triangles along its diagonal in 2D. Gradients are
//! constant per element.

use crate::grid::Grid;

/// One gradient component: `(u[plus] - u[minus]) * inv_h`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Difference {
    pub plus: usize,
    pub minus: usize,
    pub inv_h: f64,
}

impl Difference {
    pub fn eval(&self, u: &[f64]) -> f64 {
        (u[self.plus] - u[self.minus]) * self.inv_h
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Element {
    pub measure: f64,
    pub vertices: [usize; 3],
    pub n_vertices: usize,
    pub comps: [Difference; 2],
    pub n_comps: usize,
}

impl Element {
    pub fn vertices(&self) -> &[usize] {
        &self.vertices[..self.n_vertices]
    }

    pub fn comps(&self) -> &[Difference] {
        &self.comps[..self.n_comps]
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Mesh {
    pub elements: Vec<Element>,
    /// node -> interior unknown index
    pub dof_of: Vec<Option<usize>>,
    /// interior unknown index -> node
    pub nodes: Vec<usize>,
    pub bandwidth: usize,
}

impl Mesh {
    pub fn new(grid: &Grid) -> Mesh {
        let mut elements = Vec::new();
        let hx = grid.h(0);
        let ix = 1.0 / hx;
        if grid.dim() == 1 {
            for i in 0..grid.n(0) - 1 {
                let d = Difference { plus: i + 1, minus: i, inv_h: ix };
                elements.push(Element {
                    measure: hx,
                    vertices: [i, i + 1, 0],
                    n_vertices: 2,
                    comps: [d, d],
                    n_comps: 1,
                });
            }
        } else {
            let hy = grid.h(1);
            let iy = 1.0 / hy;
            let area = 0.5 * hx * hy;
            for j in 0..grid.n(1) - 1 {
                for i in 0..grid.n(0) - 1 {
                    let a = grid.index(i, j);
                    let b = grid.index(i + 1, j);
                    let c = grid.index(i, j + 1);
                    let d = grid.index(i + 1, j + 1);
                    elements.push(Element {
                        measure: area,
                        vertices: [a, b, d],
                        n_vertices: 3,
                        comps: [
                            Difference { plus: b, minus: a, inv_h: ix },
                            Difference { plus: d, minus: b, inv_h: iy },
                        ],
                        n_comps: 2,
                    });
                    elements.push(Element {
                        measure: area,
                        vertices: [a, d, c],
                        n_vertices: 3,
                        comps: [
                            Difference { plus: d, minus: c, inv_h: ix },
                            Difference { plus: c, minus: a, inv_h: iy },
                        ],
                        n_comps: 2,
                    });
                }
            }
        }
        let mut dof_of = vec![None; grid.len()];
        let mut nodes = Vec::new();
        for k in grid.interior() {
            dof_of[k] = Some(nodes.len());
            nodes.push(k);
        }
        let bandwidth = if grid.dim() == 1 { 1 } else { grid.n(0) - 1 };
        Mesh { elements, dof_of, nodes, bandwidth }
    }
}

//! Symmetric positive-definite banded matrices with an in-place Cholesky
//! factorisation. Only the lower band is stored.

#[derive(Clone, Debug)]
pub(crate) struct BandedMatrix {
    n: usize,
    bw: usize,
    // row i holds entries (i, i - bw ..= i), diagonal last
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, bw: usize) -> BandedMatrix {
        BandedMatrix { n, bw, data: vec![0.0; n * (bw + 1)] }
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (self.bw - (i - j))
    }

    /// Adds `v` to entry `(i, j)`; entries above the diagonal are folded
    /// onto their mirror.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if j > i { (j, i) } else { (i, j) };
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    pub fn add_scaled(&mut self, other: &BandedMatrix, c: f64) {
        debug_assert_eq!(self.data.len(), other.data.len());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
    }

    /// Cholesky factorisation `A = L L^T`; `None` if `A` is not numerically
    /// positive definite.
    pub fn cholesky(mut self) -> Option<CholeskyFactor> {
        let n = self.n;
        let bw = self.bw;
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let k0 = j0.max(j.saturating_sub(bw));
                let mut sum = self.data[self.slot(i, j)];
                for k in k0..j {
                    sum -= self.data[self.slot(i, k)] * self.data[self.slot(j, k)];
                }
                if i == j {
                    if !(sum > 0.0) || !sum.is_finite() {
                        return None;
                    }
                    let s = self.slot(i, i);
                    self.data[s] = sum.sqrt();
                } else {
                    let s = self.slot(i, j);
                    self.data[s] = sum / self.data[self.slot(j, j)];
                }
            }
        }
        Some(CholeskyFactor { l: self })
    }
}

pub(crate) struct CholeskyFactor {
    l: BandedMatrix,
}

impl CholeskyFactor {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let l = &self.l;
        let n = l.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in i.saturating_sub(l.bw)..i {
                s -= l.data[l.slot(i, k)] * y[k];
            }
            y[i] = s / l.data[l.slot(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n.min(i + l.bw + 1) {
                s -= l.data[l.slot(k, i)] * y[k];
            }
            y[i] = s / l.data[l.slot(i, i)];
        }
        y
    }
}

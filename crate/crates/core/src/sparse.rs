//! Compressed sparse row matrices, just enough for assembly, products and
//! the implicit solves.

use std::io::Write;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            row_ptr: vec![0; n + 1],
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n,
            row_ptr: (0..=n).collect(),
            cols: (0..n).collect(),
            vals: vec![1.0; n],
        }
    }

    /// Builds a square matrix row by row; `row(i, push)` must push
    /// `(col, value)` pairs with strictly increasing columns.
    pub fn from_rows(n: usize, mut row: impl FnMut(usize, &mut dyn FnMut(usize, f64))) -> Self {
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for i in 0..n {
            row(i, &mut |c, v| {
                debug_assert!(c < n);
                cols.push(c);
                vals.push(v);
            });
            row_ptr.push(cols.len());
        }
        Self { n, row_ptr, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    /// Largest `|col - row|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.n)
            .flat_map(|i| self.row(i).map(move |(c, _)| c.abs_diff(i)))
            .max()
            .unwrap_or(0)
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            let mut s = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[p] * x[self.cols[p]];
            }
            *yi = s;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    /// Transposed product `A^T x`.
    pub fn matvec_transpose(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for (i, xi) in x.iter().enumerate().take(self.n) {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                y[self.cols[p]] += self.vals[p] * xi;
            }
        }
        y
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    /// `max_i Σ_j |a_ij|`.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `max_j Σ_i |a_ij|`.
    pub fn norm_one(&self) -> f64 {
        let mut cols = vec![0.0; self.n];
        for (c, v) in self.cols.iter().zip(&self.vals) {
            cols[*c] += v.abs();
        }
        cols.into_iter().fold(0.0, f64::max)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).find(|(c, _)| *c == i).map_or(0.0, |(_, v)| v))
            .collect()
    }

    /// `alpha * self + beta * other`, merging sparsity patterns.
    pub fn linear_combination(&self, alpha: f64, other: &Self, beta: f64) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::GridMismatch(format!(
                "matrix dimensions {} and {} differ",
                self.n, other.n
            )));
        }
        Ok(Self::from_rows(self.n, |i, push| {
            let mut a = self.row(i).peekable();
            let mut b = other.row(i).peekable();
            loop {
                match (a.peek().copied(), b.peek().copied()) {
                    (Some((ca, va)), Some((cb, vb))) => {
                        if ca == cb {
                            push(ca, alpha * va + beta * vb);
                            a.next();
                            b.next();
                        } else if ca < cb {
                            push(ca, alpha * va);
                            a.next();
                        } else {
                            push(cb, beta * vb);
                            b.next();
                        }
                    }
                    (Some((ca, va)), None) => {
                        push(ca, alpha * va);
                        a.next();
                    }
                    (None, Some((cb, vb))) => {
                        push(cb, beta * vb);
                        b.next();
                    }
                    (None, None) => break,
                }
            }
        }))
    }

    /// `I - tau * self`.
    pub fn identity_minus_scaled(&self, tau: f64) -> Self {
        Self::identity(self.n)
            .linear_combination(1.0, self, -tau)
            .expect("same dimension")
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (c, v) in self.row(i) {
                m[(i, c)] += v;
            }
        }
        m
    }

    /// Matrix-market style coordinate dump, 1-based indices.
    pub fn write_triplets<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(out, "{} {} {}", self.n, self.n, self.nnz())?;
        for i in 0..self.n {
            for (c, v) in self.row(i) {
                writeln!(out, "{} {} {:.17e}", i + 1, c + 1, v)?;
            }
        }
        Ok(())
    }
}

//! Principal component analysis on the (optionally standardized) covariance
//! matrix.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg;
use crate::math;
use crate::matrix::Matrix;

pub const DEFAULT_COMPONENTS: usize = 7;

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub means: Vec<f64>,
    /// Column scales; all 1.0 when fitted without standardization.
    pub scales: Vec<f64>,
    /// Rows are principal directions, by decreasing eigenvalue.
    pub components: Matrix,
    pub eigenvalues: Vec<f64>,
    /// Columns whose variance was zero under standardization.
    pub constant_columns: Vec<usize>,
}

pub fn pca_fit(x: &Matrix, standardize: bool) -> Result<PcaModel> {
    let (n, p) = (x.rows(), x.cols());
    if n < 2 {
        return Err(Error::param("X", "PCA needs at least 2 rows"));
    }
    if !x.is_finite() {
        return Err(Error::NonFinite);
    }
    let mut means = vec![0.0; p];
    for row in x.iter_rows() {
        for (m, v) in means.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut means {
        *m /= n as f64;
    }
    let mut cov = Matrix::zeros(p, p);
    let mut centered = vec![0.0; p];
    for row in x.iter_rows() {
        for j in 0..p {
            centered[j] = row[j] - means[j];
        }
        for i in 0..p {
            let ci = centered[i];
            let out = cov.row_mut(i);
            for j in i..p {
                out[j] += ci * centered[j];
            }
        }
    }
    let denom = (n - 1) as f64;
    for i in 0..p {
        for j in i..p {
            let v = cov.get(i, j) / denom;
            cov.set(i, j, v);
            cov.set(j, i, v);
        }
    }
    let mut scales = vec![1.0; p];
    let mut constant_columns = Vec::new();
    if standardize {
        for j in 0..p {
            let var = cov.get(j, j);
            if var > 0.0 {
                scales[j] = math::sqrt(var);
            } else {
                constant_columns.push(j);
            }
        }
        for i in 0..p {
            for j in 0..p {
                let v = cov.get(i, j) / (scales[i] * scales[j]);
                cov.set(i, j, v);
            }
        }
    }
    let (mut eigenvalues, mut components) = linalg::symmetric_eigen(&cov);
    for v in &mut eigenvalues {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    for r in 0..p {
        let row = components.row_mut(r);
        let mut lead = 0;
        for j in 1..p {
            if row[j].abs() > row[lead].abs() {
                lead = j;
            }
        }
        if row[lead] < 0.0 {
            row.iter_mut().for_each(|v| *v = -*v);
        }
    }
    Ok(PcaModel {
        means,
        scales,
        components,
        eigenvalues,
        constant_columns,
    })
}

impl PcaModel {
    pub fn dim(&self) -> usize {
        self.means.len()
    }

    fn check_k(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.dim() {
            return Err(Error::param(
                "k",
                alloc::format!("{k} components requested, model has {}", self.dim()),
            ));
        }
        Ok(())
    }

    /// Projects one row onto the first `k` components.
    pub fn project_row(&self, row: &[f64], k: usize, out: &mut [f64]) {
        for (c, o) in out.iter_mut().enumerate().take(k) {
            let comp = self.components.row(c);
            let mut s = 0.0;
            for j in 0..self.dim() {
                s += comp[j] * (row[j] - self.means[j]) / self.scales[j];
            }
            *o = s;
        }
    }

    /// Maps `k`-component scores back to the original feature space.
    pub fn inverse_transform(&self, z: &Matrix) -> Matrix {
        let p = self.dim();
        let mut out = Matrix::zeros(z.rows(), p);
        for i in 0..z.rows() {
            let zi = z.row(i);
            let o = out.row_mut(i);
            for (c, &s) in zi.iter().enumerate() {
                let comp = self.components.row(c);
                for j in 0..p {
                    o[j] += s * comp[j];
                }
            }
            for j in 0..p {
                o[j] = o[j] * self.scales[j] + self.means[j];
            }
        }
        out
    }

    /// Total variance of the fitted (scaled) space.
    pub fn total_variance(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }
}

pub fn pca_transform(model: &PcaModel, x: &Matrix, k: usize) -> Result<Matrix> {
    model.check_k(k)?;
    if x.cols() != model.dim() {
        return Err(Error::Dimension {
            expected: model.dim(),
            got: x.cols(),
        });
    }
    let mut out = Matrix::zeros(x.rows(), k);
    for i in 0..x.rows() {
        model.project_row(x.row(i), k, out.row_mut(i));
    }
    Ok(out)
}

/// Running share of total variance captured by the first 1, 2, ... components.
pub fn cumulative_variance(model: &PcaModel) -> Vec<f64> {
    let total = model.total_variance();
    let p = model.eigenvalues.len();
    if total <= 0.0 {
        return (1..=p).map(|i| i as f64 / p as f64).collect();
    }
    let mut acc = 0.0;
    let mut out: Vec<f64> = model
        .eigenvalues
        .iter()
        .map(|v| {
            acc += v;
            acc / total
        })
        .collect();
    if let Some(last) = out.last_mut() {
        *last = 1.0;
    }
    out
}

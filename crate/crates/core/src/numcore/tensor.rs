use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major array of `f64` with an explicit shape.
///
/// Matrices are rank-2 tensors, vectors rank-1. `shape.iter().product()`
/// always equals `data.len()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTensor")]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Deserialize)]
struct RawTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl TryFrom<RawTensor> for Tensor {
    type Error = Error;

    fn try_from(raw: RawTensor) -> Result<Self> {
        Tensor::new(raw.shape, raw.data)
    }
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let expected = shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::Shape(format!("shape {shape:?} overflows")))?;
        if expected != data.len() {
            return Err(Error::Shape(format!(
                "shape {shape:?} needs {expected} elements, got {}",
                data.len()
            )));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; n],
        }
    }

    pub fn vector(data: Vec<f64>) -> Self {
        Tensor {
            shape: vec![data.len()],
            data,
        }
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        Self::new(vec![rows, cols], data)
    }

    /// Builds a matrix from equal-length rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::Shape(format!(
                    "row {i} has {} columns, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::matrix(rows.len(), cols, data)
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Self::zeros(&[n, n]);
        for i in 0..n {
            t.data[i * n + i] = 1.0;
        }
        t
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut t = Self::zeros(&[n, n]);
        for (i, v) in values.iter().enumerate() {
            t.data[i * n + i] = *v;
        }
        t
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    /// `(rows, cols)` of a rank-2 tensor; a vector is treated as a column.
    pub fn dims2(&self) -> Result<(usize, usize)> {
        match self.shape.as_slice() {
            [r, c] => Ok((*r, *c)),
            [n] => Ok((*n, 1)),
            s => Err(Error::Shape(format!("expected a matrix, got shape {s:?}"))),
        }
    }

    pub fn rows(&self) -> usize {
        self.shape.first().copied().unwrap_or(0)
    }

    pub fn cols(&self) -> usize {
        match self.shape.as_slice() {
            [_, c] => *c,
            [_] => 1,
            _ => 0,
        }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols() + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        let cols = self.cols();
        self.data[r * cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let c = self.cols();
        &self.data[r * c..(r + 1) * c]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        let cols = self.cols();
        (0..self.rows()).map(|r| self.data[r * cols + c]).collect()
    }

    pub fn reshape(self, shape: Vec<usize>) -> Result<Self> {
        Self::new(shape, self.data)
    }

    pub fn transpose(&self) -> Result<Self> {
        let (r, c) = self.dims2()?;
        let mut out = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                out[j * r + i] = self.data[i * c + j];
            }
        }
        Self::matrix(c, r, out)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn scale(&self, k: f64) -> Self {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|v| v * k).collect(),
        }
    }

    pub fn sub(&self, other: &Tensor) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Tensor) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    fn zip_with(&self, other: &Tensor, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::Shape(format!(
                "elementwise op on {:?} and {:?}",
                self.shape, other.shape
            )));
        }
        Ok(Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().zip(&other.data).map(|(a, b)| f(*a, *b)).collect(),
        })
    }
}

/// Matrix product `a · b`. Vectors are treated as column matrices and the
/// result is always rank 2.
pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (m, k) = a.dims2()?;
    let (k2, n) = b.dims2()?;
    if k != k2 {
        return Err(Error::Shape(format!(
            "matmul of {:?} and {:?}: inner dimensions {k} != {k2}",
            a.shape(),
            b.shape()
        )));
    }
    let mut out = vec![0.0; m * n];
    let (ad, bd) = (a.data(), b.data());
    for i in 0..m {
        let orow = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let aip = ad[i * k + p];
            if aip == 0.0 {
                continue;
            }
            let brow = &bd[p * n..(p + 1) * n];
            for (o, bv) in orow.iter_mut().zip(brow) {
                *o += aip * bv;
            }
        }
    }
    Tensor::matrix(m, n, out)
}

/// `XᵀX` for an n×m matrix.
pub fn gram(x: &Tensor) -> Result<Tensor> {
    let (n, m) = x.dims2()?;
    let d = x.data();
    let mut out = vec![0.0; m * m];
    for r in 0..n {
        let row = &d[r * m..(r + 1) * m];
        for i in 0..m {
            let xi = row[i];
            if xi == 0.0 {
                continue;
            }
            for j in i..m {
                out[i * m + j] += xi * row[j];
            }
        }
    }
    for i in 0..m {
        for j in 0..i {
            out[i * m + j] = out[j * m + i];
        }
    }
    Tensor::matrix(m, m, out)
}

/// `Xᵀy` for an n×m matrix and an n-vector.
pub fn xt_vec(x: &Tensor, y: &[f64]) -> Result<Vec<f64>> {
    let (n, m) = x.dims2()?;
    if y.len() != n {
        return Err(Error::Shape(format!(
            "Xᵀy with X {:?} and y of length {}",
            x.shape(),
            y.len()
        )));
    }
    let mut out = vec![0.0; m];
    for (r, yr) in y.iter().enumerate() {
        for (o, xv) in out.iter_mut().zip(x.row(r)) {
            *o += xv * yr;
        }
    }
    Ok(out)
}

/// `X·β` for an n×m matrix and an m-vector.
pub fn mat_vec(x: &Tensor, beta: &[f64]) -> Result<Vec<f64>> {
    let (n, m) = x.dims2()?;
    if beta.len() != m {
        return Err(Error::Shape(format!(
            "Xβ with X {:?} and β of length {}",
            x.shape(),
            beta.len()
        )));
    }
    Ok((0..n)
        .map(|r| x.row(r).iter().zip(beta).map(|(a, b)| a * b).sum())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_times_matrix() {
        let b = Tensor::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let c = matmul(&Tensor::identity(2), &b).unwrap();
        assert_eq!(c, b);
    }

    #[test]
    fn row_times_column() {
        let a = Tensor::from_rows(&[[1.0, 2.0]]).unwrap();
        let b = Tensor::from_rows(&[[3.0], [4.0]]).unwrap();
        let c = matmul(&a, &b).unwrap();
        assert_eq!(c.shape(), &[1, 1]);
        assert_eq!(c.data(), &[11.0]);
    }

    #[test]
    fn mismatch_names_both_shapes() {
        let a = Tensor::zeros(&[2, 3]);
        let err = matmul(&a, &a).unwrap_err().to_string();
        assert!(err.contains("[2, 3]"), "{err}");
    }

    #[test]
    fn new_rejects_wrong_length() {
        assert!(Tensor::new(vec![2, 2], vec![1.0; 3]).is_err());
    }

    #[test]
    fn gram_matches_explicit_product() {
        let x = Tensor::from_rows(&[[1.0, 2.0], [3.0, -1.0], [0.5, 4.0]]).unwrap();
        let g = gram(&x).unwrap();
        let g2 = matmul(&x.transpose().unwrap(), &x).unwrap();
        assert_eq!(g, g2);
    }

    #[test]
    fn deserialize_checks_shape() {
        let bad = r#"{"shape":[2,2],"data":[1.0]}"#;
        assert!(serde_json::from_str::<Tensor>(bad).is_err());
        let ok = r#"{"shape":[1,2],"data":[1.0,2.0]}"#;
        assert_eq!(serde_json::from_str::<Tensor>(ok).unwrap().cols(), 2);
    }
}

use serde::{Deserialize, Serialize};

/// Dense row-major tensor value. Rank 1 and rank 2 are the only shapes the
/// agent needs; scalars are rank-1 tensors of length 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Data {
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

impl Data {
    pub fn scalar(v: f64) -> Self {
        Data { shape: vec![1], values: vec![v] }
    }

    pub fn vector(values: Vec<f64>) -> Self {
        Data { shape: vec![values.len()], values }
    }

    pub fn matrix(rows: usize, cols: usize, values: Vec<f64>) -> Self {
        assert_eq!(
            values.len(),
            rows * cols,
            "matrix data length {} does not match shape [{rows}, {cols}]",
            values.len()
        );
        Data { shape: vec![rows, cols], values }
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Data { shape: shape.to_vec(), values: vec![0.0; shape.iter().product()] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_scalar(&self) -> bool {
        self.values.len() == 1
    }

    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    pub fn cols(&self) -> usize {
        assert_eq!(self.shape.len(), 2, "cols() on rank-{} tensor", self.shape.len());
        self.shape[1]
    }

    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.cols() + c]
    }

    pub fn item(&self) -> f64 {
        assert!(self.is_scalar(), "item() on non-scalar shape {:?}", self.shape);
        self.values[0]
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

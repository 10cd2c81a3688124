use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the stored value maps to the weight used in the forward pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Constraint {
    Unconstrained,
    /// Effective weight is `exp(value)`, so it is strictly positive.
    ExpPositive,
}

/// A row-major matrix (or column vector) of trainable values with its
/// accumulated gradient. The gradient is always with respect to the stored
/// value, not the effective weight.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameter {
    rows: usize,
    cols: usize,
    value: Vec<f64>,
    grad: Vec<f64>,
    constraint: Constraint,
}

impl Parameter {
    pub fn zeros(rows: usize, cols: usize, constraint: Constraint) -> Self {
        Self {
            rows,
            cols,
            value: vec![0.0; rows * cols],
            grad: vec![0.0; rows * cols],
            constraint,
        }
    }

    pub fn from_values(
        rows: usize,
        cols: usize,
        value: Vec<f64>,
        constraint: Constraint,
    ) -> Result<Self> {
        if value.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "parameter values",
                expected: rows * cols,
                actual: value.len(),
            });
        }
        Ok(Self {
            rows,
            cols,
            grad: vec![0.0; value.len()],
            value,
            constraint,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    pub fn constraint(&self) -> Constraint {
        self.constraint
    }

    pub fn value(&self) -> &[f64] {
        &self.value
    }

    pub fn value_mut(&mut self) -> &mut [f64] {
        &mut self.value
    }

    pub fn grad(&self) -> &[f64] {
        &self.grad
    }

    pub fn grad_mut(&mut self) -> &mut [f64] {
        &mut self.grad
    }

    /// Simultaneous access for in-place optimizer updates.
    pub fn value_and_grad_mut(&mut self) -> (&mut [f64], &[f64]) {
        (&mut self.value, &self.grad)
    }

    pub fn zero_grad(&mut self) {
        self.grad.iter_mut().for_each(|g| *g = 0.0);
    }

    /// The weights as seen by the forward pass.
    pub fn effective(&self) -> Vec<f64> {
        match self.constraint {
            Constraint::Unconstrained => self.value.clone(),
            Constraint::ExpPositive => self.value.iter().map(|v| v.exp()).collect(),
        }
    }
}

/// Anything that owns trainable parameters. The order returned must be
/// stable for the lifetime of the value; optimizer state is matched by
/// position.
pub trait Parameterized {
    fn parameters(&self) -> Vec<&Parameter>;
    fn parameters_mut(&mut self) -> Vec<&mut Parameter>;

    fn zero_grads(&mut self) {
        for p in self.parameters_mut() {
            p.zero_grad();
        }
    }

    fn parameter_count(&self) -> usize {
        self.parameters().iter().map(|p| p.len()).sum()
    }

    /// All stored values concatenated in parameter order.
    fn flat_values(&self) -> Vec<f64> {
        self.parameters()
            .iter()
            .flat_map(|p| p.value().iter().copied())
            .collect()
    }

    fn flat_grads(&self) -> Vec<f64> {
        self.parameters()
            .iter()
            .flat_map(|p| p.grad().iter().copied())
            .collect()
    }

    /// Overwrites every stored value from a flat slice in parameter order.
    fn load_flat(&mut self, values: &[f64]) -> Result<()> {
        let expected = self.parameter_count();
        if values.len() != expected {
            return Err(Error::DimensionMismatch {
                context: "flat parameter load",
                expected,
                actual: values.len(),
            });
        }
        let mut offset = 0;
        for p in self.parameters_mut() {
            let n = p.len();
            p.value_mut().copy_from_slice(&values[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }
}

impl Parameterized for Parameter {
    fn parameters(&self) -> Vec<&Parameter> {
        vec![self]
    }

    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        vec![self]
    }
}

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Matrix, RngState};
use crate::error::{Error, Result};

/// A trainable matrix with its gradient accumulator.
#[derive(Clone, Debug, PartialEq)]
pub struct Param {
    pub name: String,
    pub value: Matrix,
    pub grad: Matrix,
}

impl Param {
    pub fn new(name: impl Into<String>, value: Matrix) -> Self {
        let grad = Matrix::zeros(value.rows(), value.cols());
        Self {
            name: name.into(),
            value,
            grad,
        }
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }

    pub fn len(&self) -> usize {
        self.value.as_slice().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Anything that owns a fixed, ordered set of parameters.
pub trait Parameterized {
    fn params(&self) -> Vec<&Param>;
    fn params_mut(&mut self) -> Vec<&mut Param>;

    fn zero_grads(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }
}

impl Parameterized for Vec<Param> {
    fn params(&self) -> Vec<&Param> {
        self.iter().collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        self.iter_mut().collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitScheme {
    GlorotUniform,
    Zeros,
}

impl FromStr for InitScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "glorot_uniform" => Ok(Self::GlorotUniform),
            "zeros" => Ok(Self::Zeros),
            other => Err(Error::Config(format!("unknown init scheme `{other}`"))),
        }
    }
}

/// Initializes a `rows × cols` matrix, treating `rows` as fan-in and `cols` as fan-out.
pub fn init_params(rows: usize, cols: usize, scheme: InitScheme, rng: &mut RngState) -> Result<Matrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::Config(format!("cannot initialize a {rows}x{cols} matrix")));
    }
    Ok(match scheme {
        InitScheme::Zeros => Matrix::zeros(rows, cols),
        InitScheme::GlorotUniform => {
            let limit = (6.0 / (rows + cols) as f64).sqrt();
            let values = (0..rows * cols)
                .map(|_| rng.uniform_range(-limit, limit))
                .collect();
            Matrix::new(rows, cols, values)?
        }
    })
}

//! Linear state-space recurrence `h_t = A h_{t-1} + B x_t`, with either fixed
//! `(A, B)` or input-conditioned `(A_t, B_t)`, plus the Chamfer-L2 loss and a
//! small masked-patch reconstruction trainer.

mod chamfer;
mod recon;

pub use chamfer::{chamfer_l2, chamfer_l2_with_grad};
pub use recon::{
    loss_and_grad, reconstruct_train, reconstruction_loss, ReconModel, ReconSample, ReconTask,
    TrainConfig, TrainTrace,
};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

fn shape_error(what: &str, expected: (usize, usize), got: (usize, usize)) -> Error {
    Error::argument(format!(
        "{what}: expected {}x{}, got {}x{}",
        expected.0, expected.1, got.0, got.1
    ))
}

/// One recurrence step, `A h_prev + B x`.
pub fn ssm_step(
    h_prev: &DVector<f64>,
    x: &DVector<f64>,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
) -> Result<DVector<f64>> {
    let d = h_prev.len();
    if a.shape() != (d, d) {
        return Err(shape_error("transition matrix", (d, d), a.shape()));
    }
    if b.shape() != (d, x.len()) {
        return Err(shape_error("input matrix", (d, x.len()), b.shape()));
    }
    Ok(a * h_prev + b * x)
}

/// Maps an input `x` to `A_t = diag(sigmoid(W_a x))` and `B_t = reshape(W_b x)`
/// (row-major `d x m`). The sigmoid keeps every `A_t` eigenvalue in `(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicGenerator {
    pub w_a: DMatrix<f64>,
    pub w_b: DMatrix<f64>,
}

impl DynamicGenerator {
    pub fn transition(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let gate = (&self.w_a * x).map(|v| 1.0 / (1.0 + (-v).exp()));
        DMatrix::from_diagonal(&gate)
    }

    pub fn input_matrix(&self, x: &DVector<f64>, state_dim: usize) -> DMatrix<f64> {
        let flat = &self.w_b * x;
        DMatrix::from_row_slice(state_dim, x.len(), flat.as_slice())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SsmMode {
    Static,
    Dynamic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SsmParams {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    generator: Option<DynamicGenerator>,
}

impl SsmParams {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        let d = a.nrows();
        if d == 0 || b.ncols() == 0 {
            return Err(Error::argument(
                "state and input dimensions must be positive",
            ));
        }
        if a.ncols() != d {
            return Err(shape_error("transition matrix", (d, d), a.shape()));
        }
        if b.nrows() != d {
            return Err(shape_error("input matrix", (d, b.ncols()), b.shape()));
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::argument("SSM parameters must be finite"));
        }
        Ok(Self {
            a,
            b,
            generator: None,
        })
    }

    pub fn with_generator(mut self, generator: DynamicGenerator) -> Result<Self> {
        let (d, m) = (self.state_dim(), self.input_dim());
        if generator.w_a.shape() != (d, m) {
            return Err(shape_error("gate weights", (d, m), generator.w_a.shape()));
        }
        if generator.w_b.shape() != (d * m, m) {
            return Err(shape_error(
                "input generator weights",
                (d * m, m),
                generator.w_b.shape(),
            ));
        }
        if generator
            .w_a
            .iter()
            .chain(generator.w_b.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::argument("generator weights must be finite"));
        }
        self.generator = Some(generator);
        Ok(self)
    }

    /// Random stable parameters: `A` near `0.5 I`, small `B`, and a small generator.
    pub fn random(state_dim: usize, input_dim: usize, seed: u64) -> Result<Self> {
        let mut rng = rng::seeded(seed);
        let scale_a = 0.1 / (state_dim.max(1) as f64).sqrt();
        let scale_b = 1.0 / (input_dim.max(1) as f64).sqrt();
        let a = DMatrix::from_fn(state_dim, state_dim, |i, j| {
            let noise = rng.random_range(-scale_a..=scale_a);
            if i == j {
                0.5 + noise
            } else {
                noise
            }
        });
        let b = DMatrix::from_fn(state_dim, input_dim, |_, _| {
            rng.random_range(-scale_b..=scale_b)
        });
        let w_a = DMatrix::from_fn(state_dim, input_dim, |_, _| {
            rng.random_range(-scale_b..=scale_b)
        });
        let w_b = DMatrix::from_fn(state_dim * input_dim, input_dim, |_, _| {
            rng.random_range(-scale_b..=scale_b)
        });
        Self::new(a, b)?.with_generator(DynamicGenerator { w_a, w_b })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn generator(&self) -> Option<&DynamicGenerator> {
        self.generator.as_ref()
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }
}

/// Runs the recurrence from `h_0 = 0` and returns `h_1..h_T`.
pub fn ssm_forward(
    sequence: &[DVector<f64>],
    params: &SsmParams,
    mode: SsmMode,
) -> Result<Vec<DVector<f64>>> {
    if sequence.is_empty() {
        return Err(Error::argument("empty input sequence"));
    }
    let generator = match mode {
        SsmMode::Static => None,
        SsmMode::Dynamic => Some(
            params
                .generator
                .as_ref()
                .ok_or_else(|| Error::argument("dynamic mode needs a parameter generator"))?,
        ),
    };
    let d = params.state_dim();
    let mut h = DVector::zeros(d);
    let mut states = Vec::with_capacity(sequence.len());
    for x in sequence {
        if x.len() != params.input_dim() {
            return Err(Error::argument(format!(
                "input of length {} for an SSM expecting {}",
                x.len(),
                params.input_dim()
            )));
        }
        h = match generator {
            None => ssm_step(&h, x, &params.a, &params.b)?,
            Some(g) => ssm_step(&h, x, &g.transition(x), &g.input_matrix(x, d))?,
        };
        states.push(h.clone());
    }
    Ok(states)
}

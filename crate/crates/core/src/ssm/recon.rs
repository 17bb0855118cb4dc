//! Masked-patch reconstruction with a one-block SSM and a linear decoder.
//!
//! Masked positions feed a zero input into the recurrence; the decoder maps
//! each masked position's state to `k` points which are scored against the
//! hidden patch with Chamfer-L2. Gradients are analytic (backpropagation
//! through the linear recurrence).

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::chamfer::chamfer_l2_with_grad;
use crate::error::{Error, Result};
use crate::pointcloud::Point3;
use crate::rng;

/// One serialized token sequence with its mask and the hidden patches.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconSample {
    tokens: Vec<DVector<f64>>,
    masked: Vec<bool>,
    targets: Vec<Option<Vec<Point3>>>,
}

impl ReconSample {
    /// `targets[t]` must be present exactly where `masked[t]` is true.
    pub fn new(
        tokens: Vec<Vec<f64>>,
        masked: Vec<bool>,
        targets: Vec<Option<Vec<Point3>>>,
    ) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::validation("empty token sequence"));
        }
        if masked.len() != tokens.len() || targets.len() != tokens.len() {
            return Err(Error::validation(
                "tokens, mask and targets differ in length",
            ));
        }
        let width = tokens[0].len();
        if width == 0 || tokens.iter().any(|t| t.len() != width) {
            return Err(Error::validation("tokens must share a positive width"));
        }
        if tokens.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::validation("token features must be finite"));
        }
        for (t, (m, target)) in masked.iter().zip(&targets).enumerate() {
            match (m, target) {
                (true, Some(points)) if !points.is_empty() => {}
                (false, None) => {}
                _ => {
                    return Err(Error::validation(format!(
                        "position {t}: targets must exist exactly for masked tokens"
                    )))
                }
            }
        }
        Ok(Self {
            tokens: tokens.into_iter().map(DVector::from_vec).collect(),
            masked,
            targets,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn masked_count(&self) -> usize {
        self.masked.iter().filter(|&&m| m).count()
    }

    fn inputs(&self) -> Vec<DVector<f64>> {
        self.tokens
            .iter()
            .zip(&self.masked)
            .map(|(x, &m)| {
                if m {
                    DVector::zeros(x.len())
                } else {
                    x.clone()
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconTask {
    samples: Vec<ReconSample>,
    token_dim: usize,
    patch_size: usize,
}

impl ReconTask {
    pub fn new(samples: Vec<ReconSample>) -> Result<Self> {
        let first = samples
            .first()
            .ok_or_else(|| Error::validation("reconstruction task has no samples"))?;
        let token_dim = first.tokens[0].len();
        let patch_size = samples
            .iter()
            .flat_map(|s| s.targets.iter().flatten())
            .map(Vec::len)
            .next()
            .ok_or_else(|| Error::validation("no masked positions to reconstruct"))?;
        for s in &samples {
            if s.tokens[0].len() != token_dim {
                return Err(Error::validation("samples differ in token width"));
            }
            if s.targets.iter().flatten().any(|t| t.len() != patch_size) {
                return Err(Error::validation("target patches differ in size"));
            }
        }
        Ok(Self {
            samples,
            token_dim,
            patch_size,
        })
    }

    pub fn samples(&self) -> &[ReconSample] {
        &self.samples
    }

    pub fn token_dim(&self) -> usize {
        self.token_dim
    }

    pub fn patch_size(&self) -> usize {
        self.patch_size
    }

    pub fn masked_count(&self) -> usize {
        self.samples.iter().map(ReconSample::masked_count).sum()
    }
}

/// SSM `(A, B)` and the decoder mapping a state to `patch_size` points.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconModel {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub dec_w: DMatrix<f64>,
    pub dec_b: DVector<f64>,
}

impl ReconModel {
    pub fn init(token_dim: usize, state_dim: usize, patch_size: usize, seed: u64) -> Self {
        let mut rng = rng::seeded(seed);
        let mut uniform = |scale: f64| rng.random_range(-scale..=scale);
        let sa = 0.1 / (state_dim as f64).sqrt();
        let sb = 1.0 / (token_dim as f64).sqrt();
        let sd = 0.1 / (state_dim as f64).sqrt();
        let a = DMatrix::from_fn(state_dim, state_dim, |i, j| {
            let noise = uniform(sa);
            if i == j {
                0.5 + noise
            } else {
                noise
            }
        });
        let b = DMatrix::from_fn(state_dim, token_dim, |_, _| uniform(sb));
        let dec_w = DMatrix::from_fn(3 * patch_size, state_dim, |_, _| uniform(sd));
        let dec_b = DVector::from_fn(3 * patch_size, |_, _| uniform(0.01));
        Self { a, b, dec_w, dec_b }
    }

    fn zeros_like(&self) -> Self {
        Self {
            a: DMatrix::zeros(self.a.nrows(), self.a.ncols()),
            b: DMatrix::zeros(self.b.nrows(), self.b.ncols()),
            dec_w: DMatrix::zeros(self.dec_w.nrows(), self.dec_w.ncols()),
            dec_b: DVector::zeros(self.dec_b.len()),
        }
    }

    /// Number of SSM parameters; they lead the flat layout.
    pub fn ssm_param_count(&self) -> usize {
        self.a.len() + self.b.len()
    }

    pub fn param_count(&self) -> usize {
        self.ssm_param_count() + self.dec_w.len() + self.dec_b.len()
    }

    /// Parameters in the order `A, B, W_dec, b_dec`, each column-major.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        out.extend_from_slice(self.a.as_slice());
        out.extend_from_slice(self.b.as_slice());
        out.extend_from_slice(self.dec_w.as_slice());
        out.extend_from_slice(self.dec_b.as_slice());
        out
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.param_count(), "flat parameter length");
        let mut rest = flat;
        for dst in [
            self.a.as_mut_slice(),
            self.b.as_mut_slice(),
            self.dec_w.as_mut_slice(),
            self.dec_b.as_mut_slice(),
        ] {
            let (head, tail) = rest.split_at(dst.len());
            dst.copy_from_slice(head);
            rest = tail;
        }
    }

    fn check(&self, task: &ReconTask) -> Result<()> {
        let d = self.a.nrows();
        if self.a.ncols() != d
            || self.b.shape() != (d, task.token_dim)
            || self.dec_w.shape() != (3 * task.patch_size, d)
            || self.dec_b.len() != 3 * task.patch_size
        {
            return Err(Error::argument("model shapes do not match the task"));
        }
        Ok(())
    }

    fn decode(&self, h: &DVector<f64>) -> Vec<Point3> {
        let out = &self.dec_w * h + &self.dec_b;
        out.as_slice()
            .chunks_exact(3)
            .map(|c| [c[0], c[1], c[2]])
            .collect()
    }
}

fn states(model: &ReconModel, inputs: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let mut hs = Vec::with_capacity(inputs.len() + 1);
    hs.push(DVector::zeros(model.a.nrows()));
    for x in inputs {
        let next = &model.a * hs.last().expect("h_0") + &model.b * x;
        hs.push(next);
    }
    hs
}

/// Mean Chamfer-L2 over every masked position of the task.
pub fn reconstruction_loss(task: &ReconTask, model: &ReconModel) -> Result<f64> {
    model.check(task)?;
    let total = task.masked_count() as f64;
    let mut loss = 0.0;
    for sample in &task.samples {
        let hs = states(model, &sample.inputs());
        for (t, target) in sample.targets.iter().enumerate() {
            if let Some(target) = target {
                loss += super::chamfer_l2(&model.decode(&hs[t + 1]), target)? / total;
            }
        }
    }
    Ok(loss)
}

/// Loss and its gradient with respect to every model parameter.
pub fn loss_and_grad(task: &ReconTask, model: &ReconModel) -> Result<(f64, ReconModel)> {
    model.check(task)?;
    let total = task.masked_count() as f64;
    let d = model.a.nrows();
    let mut grad = model.zeros_like();
    let mut loss = 0.0;
    for sample in &task.samples {
        let inputs = sample.inputs();
        let hs = states(model, &inputs);
        let mut state_grads = vec![DVector::<f64>::zeros(d); inputs.len()];
        for (t, target) in sample.targets.iter().enumerate() {
            let Some(target) = target else { continue };
            let (l, point_grad) = chamfer_l2_with_grad(&model.decode(&hs[t + 1]), target)?;
            loss += l / total;
            let g_out = DVector::from_iterator(
                point_grad.len() * 3,
                point_grad.iter().flatten().map(|g| g / total),
            );
            grad.dec_w += &g_out * hs[t + 1].transpose();
            grad.dec_b += &g_out;
            state_grads[t] = model.dec_w.transpose() * &g_out;
        }
        // backpropagation through time
        let mut delta = DVector::<f64>::zeros(d);
        for t in (0..inputs.len()).rev() {
            delta = &state_grads[t] + model.a.transpose() * &delta;
            grad.a += &delta * hs[t].transpose();
            grad.b += &delta * inputs[t].transpose();
        }
    }
    Ok((loss, grad))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub steps: usize,
    pub lr: f64,
    pub state_dim: usize,
    /// Also update the SSM `(A, B)`; otherwise only the decoder learns.
    pub train_ssm: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            steps: 200,
            lr: 0.01,
            state_dim: 16,
            train_ssm: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::validation("steps must be at least 1"));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::validation(format!(
                "learning rate must be finite and >= 0, got {}",
                self.lr
            )));
        }
        if self.state_dim == 0 {
            return Err(Error::validation("state_dim must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    /// Loss before each update.
    pub losses: Vec<f64>,
    pub init_loss: f64,
    /// Loss after the last update.
    pub final_loss: f64,
    pub steps: usize,
    pub seed: u64,
}

impl TrainTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,loss\n");
        for (step, loss) in self.losses.iter().enumerate() {
            writeln!(out, "{step},{loss}").expect("writing to a String");
        }
        out
    }

    pub fn summary(&self) -> serde_json::Value {
        serde_json::json!({
            "final_loss": self.final_loss,
            "init_loss": self.init_loss,
            "steps": self.steps,
            "seed": self.seed,
        })
    }
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

/// Adam on the mean masked Chamfer-L2, starting from `ReconModel::init(seed)`.
pub fn reconstruct_train(
    task: &ReconTask,
    config: &TrainConfig,
    seed: u64,
) -> Result<(TrainTrace, ReconModel)> {
    config.validate()?;
    let mut model = ReconModel::init(task.token_dim, config.state_dim, task.patch_size, seed);
    let n = model.param_count();
    let frozen = if config.train_ssm {
        0
    } else {
        model.ssm_param_count()
    };
    let mut params = model.to_flat();
    let mut m = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut losses = Vec::with_capacity(config.steps);
    for step in 0..config.steps {
        let (loss, grad) = loss_and_grad(task, &model)?;
        if !loss.is_finite() {
            return Err(Error::Training {
                step,
                message: format!("loss is {loss}"),
            });
        }
        losses.push(loss);
        let t = (step + 1) as i32;
        let correction1 = 1.0 - BETA1.powi(t);
        let correction2 = 1.0 - BETA2.powi(t);
        for (i, g) in grad.to_flat().into_iter().enumerate().skip(frozen) {
            m[i] = BETA1 * m[i] + (1.0 - BETA1) * g;
            v[i] = BETA2 * v[i] + (1.0 - BETA2) * g * g;
            params[i] -= config.lr * (m[i] / correction1) / ((v[i] / correction2).sqrt() + EPS);
        }
        model.set_flat(&params);
    }
    let final_loss = reconstruction_loss(task, &model)?;
    if !final_loss.is_finite() {
        return Err(Error::Training {
            step: config.steps,
            message: format!("loss is {final_loss}"),
        });
    }
    let trace = TrainTrace {
        init_loss: losses[0],
        final_loss,
        losses,
        steps: config.steps,
        seed,
    };
    Ok((trace, model))
}

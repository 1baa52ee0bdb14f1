//! Direct gradient-based fitting of a predicted MVPC to a ground truth.
//!
//! Coordinates are free per-pixel parameters clamped to each camera's
//! frustum box after every step. Visibilities are optimized as logits and
//! mapped through the logistic function.

use std::io::Write;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::geoloss::{GeoLoss, LossBreakdown, LossWeights, VIS_CLAMP};
use crate::grid::{far_points, Mvpc};
use crate::{ViewCamera, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Optimizer {
    Plain,
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl Optimizer {
    pub fn adam() -> Self {
        Optimizer::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitMode {
    /// Ground truth plus i.i.d. Gaussian coordinate noise of the given sigma.
    NoisyGt(f64),
    /// Front hit of each pixel ray with the unit sphere.
    Sphere,
    /// Far-plane points everywhere.
    FarPlane,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    pub iterations: usize,
    pub step_size: f64,
    pub warmup_steps: usize,
    pub weights: LossWeights,
    pub optimizer: Optimizer,
    pub init_mode: InitMode,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            iterations: 500,
            step_size: 1e-2,
            warmup_steps: 100,
            weights: LossWeights::default(),
            optimizer: Optimizer::adam(),
            init_mode: InitMode::NoisyGt(0.05),
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be positive".into()));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::InvalidConfig(format!("step size must be positive, got {}", self.step_size)));
        }
        if let InitMode::NoisyGt(sigma) = self.init_mode {
            if !(sigma >= 0.0 && sigma.is_finite()) {
                return Err(Error::InvalidConfig(format!("sigma must be non-negative, got {sigma}")));
            }
        }
        if let Optimizer::Adam { beta1, beta2, eps } = self.optimizer {
            let unit = 0.0..1.0;
            if !(unit.contains(&beta1) && beta1 > 0.0 && unit.contains(&beta2) && beta2 > 0.0) {
                return Err(Error::InvalidConfig("moment decay rates must lie in (0, 1)".into()));
            }
            if !(eps > 0.0) {
                return Err(Error::InvalidConfig("adam epsilon must be positive".into()));
            }
        }
        self.weights.validate()
    }

    /// Loss weights in effect at `iteration`; the geometric terms are off
    /// during warmup.
    pub fn weights_at(&self, iteration: usize) -> LossWeights {
        if iteration < self.warmup_steps {
            LossWeights {
                alpha: 0.0,
                beta: 0.0,
                ..self.weights
            }
        } else {
            self.weights
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitTrace {
    /// Loss at each iterate before its update.
    pub history: Vec<LossBreakdown>,
    /// Loss of `result` under the weights of the last iteration.
    pub final_loss: LossBreakdown,
    pub result: Mvpc,
    pub wall_time: Duration,
}

impl FitTrace {
    /// Writes one `iter ptd vol mv vis total` line per iteration.
    pub fn write_history<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut out = out;
        for (i, l) in self.history.iter().enumerate() {
            write_trace_line(&mut out, i, l)?;
        }
        Ok(())
    }
}

pub fn write_trace_line<W: Write>(out: &mut W, iteration: usize, l: &LossBreakdown) -> std::io::Result<()> {
    writeln!(out, "{iteration} {} {} {} {} {}", l.ptd, l.vol, l.mv, l.vis_ce, l.total)
}

fn sphere_hit(cam: &ViewCamera, row: usize, col: usize) -> Option<Vec3> {
    let o = cam.ray_origin(row, col);
    let d = cam.view_dir();
    let b = o.dot(&d);
    let disc = b * b - (o.norm_squared() - 1.0);
    if disc < 0.0 {
        return None;
    }
    Some(o + d * (-b - disc.sqrt()))
}

/// Starting point for a fit, shaped like `gt`. Deterministic in `seed`.
pub fn init_mvpc(gt: &Mvpc, mode: InitMode, seed: u64) -> Result<Mvpc> {
    let mut out = gt.clone();
    match mode {
        InitMode::NoisyGt(sigma) => {
            let noise = Normal::new(0.0, sigma)
                .map_err(|_| Error::InvalidConfig(format!("sigma must be non-negative, got {sigma}")))?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for view in &mut out.views {
                for p in &mut view.points {
                    *p += Vec3::new(noise.sample(&mut rng), noise.sample(&mut rng), noise.sample(&mut rng));
                }
                for v in &mut view.visibility {
                    *v = v.clamp(0.05, 0.95);
                }
            }
        }
        InitMode::Sphere => {
            for view in &mut out.views {
                let cam = view.camera.clone();
                let far = far_points(&cam);
                for row in 0..cam.height() {
                    for col in 0..cam.width() {
                        let idx = view.index(row, col);
                        view.points[idx] = sphere_hit(&cam, row, col).unwrap_or(far[idx]);
                    }
                }
                view.visibility.fill(0.5);
            }
        }
        InitMode::FarPlane => {
            for view in &mut out.views {
                view.points = far_points(&view.camera);
                view.visibility.fill(0.05);
            }
        }
    }
    Ok(out)
}

fn logit(v: f64) -> f64 {
    let v = v.clamp(VIS_CLAMP, 1.0 - VIS_CLAMP);
    (v / (1.0 - v)).ln()
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Per-scalar optimizer state over a flat parameter vector.
struct Stepper {
    kind: Optimizer,
    lr: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Stepper {
    fn new(kind: Optimizer, lr: f64, len: usize) -> Self {
        let (m, v) = match kind {
            Optimizer::Plain => (Vec::new(), Vec::new()),
            Optimizer::Adam { .. } => (vec![0.0; len], vec![0.0; len]),
        };
        Self { kind, lr, m, v, t: 0 }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        match self.kind {
            Optimizer::Plain => {
                for (p, g) in params.iter_mut().zip(grad) {
                    *p -= self.lr * g;
                }
            }
            Optimizer::Adam { beta1, beta2, eps } => {
                let c1 = 1.0 - beta1.powi(self.t);
                let c2 = 1.0 - beta2.powi(self.t);
                for i in 0..params.len() {
                    let g = grad[i];
                    self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * g;
                    self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * g * g;
                    let m_hat = self.m[i] / c1;
                    let v_hat = self.v[i] / c2;
                    params[i] -= self.lr * m_hat / (v_hat.sqrt() + eps);
                }
            }
        }
    }
}

// Parameters are laid out view by view, pixel by pixel: x, y, z, logit.
fn pack(m: &Mvpc) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.views.len() * m.height() * m.width() * 4);
    for view in &m.views {
        for (p, &v) in view.points.iter().zip(&view.visibility) {
            out.extend_from_slice(&[p.x, p.y, p.z, logit(v)]);
        }
    }
    out
}

/// Writes updated parameters back into `into`. Pixels whose parameters did
/// not change keep their stored values; changed coordinates are clamped to
/// the frustum and the clamped value is written back to `params`.
fn unpack(params: &mut [f64], into: &mut Mvpc) {
    let mut chunks = params.chunks_exact_mut(4);
    for view in &mut into.views {
        for idx in 0..view.points.len() {
            let c = chunks.next().expect("parameter count matches grid");
            let p = Vec3::new(c[0], c[1], c[2]);
            if p != view.points[idx] {
                let q = view.camera.clamp_to_frustum(&p);
                c[..3].copy_from_slice(q.as_slice());
                view.points[idx] = q;
            }
            view.visibility[idx] = sigmoid(c[3]);
        }
    }
}

/// Fits `init` to `gt`; `observer` sees every iteration's loss as it is computed.
pub fn fit_with_observer<F>(init: &Mvpc, gt: &Mvpc, config: &FitConfig, mut observer: F) -> Result<FitTrace>
where
    F: FnMut(usize, &LossBreakdown),
{
    config.validate()?;
    gt.check_compatible(init)?;
    let start = Instant::now();
    let loss = GeoLoss::with_default_masks(gt)?;
    let mut params = pack(init);
    let mut state = init.clone();
    for view in &mut state.views {
        for v in &mut view.visibility {
            *v = sigmoid(logit(*v));
        }
    }
    let mut stepper = Stepper::new(config.optimizer, config.step_size, params.len());
    let mut flat_grad = vec![0.0; params.len()];
    let mut history = Vec::with_capacity(config.iterations);

    for iteration in 0..config.iterations {
        let (breakdown, grad) = loss.evaluate(&state, &config.weights_at(iteration))?;
        if !breakdown.is_finite() || !grad.is_finite() {
            return Err(non_finite(iteration, &breakdown));
        }
        observer(iteration, &breakdown);
        history.push(breakdown);

        let mut i = 0;
        for (view, g) in state.views.iter().zip(&grad.views) {
            for idx in 0..view.points.len() {
                let s = view.visibility[idx];
                let gp = g.points[idx];
                flat_grad[i..i + 4].copy_from_slice(&[gp.x, gp.y, gp.z, g.visibility[idx] * s * (1.0 - s)]);
                i += 4;
            }
        }
        stepper.step(&mut params, &flat_grad);
        unpack(&mut params, &mut state);
    }

    let (final_loss, _) = loss.evaluate(&state, &config.weights_at(config.iterations - 1))?;
    if !final_loss.is_finite() {
        return Err(non_finite(config.iterations, &final_loss));
    }
    Ok(FitTrace {
        history,
        final_loss,
        result: state,
        wall_time: start.elapsed(),
    })
}

pub fn fit(init: &Mvpc, gt: &Mvpc, config: &FitConfig) -> Result<FitTrace> {
    fit_with_observer(init, gt, config, |_, _| {})
}

fn non_finite(iteration: usize, l: &LossBreakdown) -> Error {
    Error::NonFiniteLoss {
        iteration,
        ptd: l.ptd,
        vol: l.vol,
        mv: l.mv,
        vis_ce: l.vis_ce,
    }
}

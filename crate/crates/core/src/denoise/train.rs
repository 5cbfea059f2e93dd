use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::Serialize;

use crate::autodiff::{fpad_reverse, FpadOptions};
use crate::denoise::conv::{basis_pairing, FilterBank, N_BASIS};
use crate::denoise::dual::denoise_dual_apg;
use crate::denoise::image::{load_image, psnr, Image};
use crate::error::{Error, Result};
use crate::linalg::{dot, sub, DenseMatrix};

const STREAM_INIT: u64 = 11;
const STREAM_NOISE: u64 = 12;
const STREAM_SHUFFLE: u64 = 13;
const STREAM_PATCHES: u64 = 14;

/// Inner solve and backward pass of one bilevel gradient.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BilevelOptions {
    /// Dual APG iterations `K`.
    pub inner_iters: usize,
    pub q: f64,
    pub fpad_iters: usize,
    /// `0` runs exactly `fpad_iters` iterations.
    pub fpad_tol: f64,
}

impl BilevelOptions {
    pub fn new(inner_iters: usize) -> Self {
        Self {
            inner_iters,
            q: 5.0,
            fpad_iters: inner_iters,
            fpad_tol: 0.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BilevelGrad {
    /// `∇_Θ J`, `N_f × N_b`.
    pub grad: DenseMatrix<f64>,
    /// `J = ½‖x̂(K) − ŷ‖²`.
    pub loss: f64,
    pub denoised: Image<f64>,
    pub fpad_iterations: usize,
    /// False when a positive `fpad_tol` was not reached.
    pub fpad_converged: bool,
}

/// `J(Θ) = ½‖x̂ − 𝒜*(Θ)p(K) − ŷ‖²` after `K` dual iterations.
pub fn bilevel_loss(
    bank: &FilterBank,
    noisy: &Image,
    ground: &Image,
    inner_iters: usize,
    q: f64,
) -> Result<f64> {
    check_pair(noisy, ground)?;
    let sol = denoise_dual_apg(bank, noisy, inner_iters, q)?;
    let r = sub(sol.denoised.as_slice(), ground.as_slice());
    Ok(0.5 * dot(&r, &r))
}

/// `∇_Θ J` with `x̄ = x̂(K) − ŷ` pulled back through `x̂ − 𝒜*(Θ)p(Θ)`:
/// the explicit term `−⟨p_r, B_s ⋆ x̄⟩` plus reverse FPAD on the dual with
/// `p̄ = −𝒜x̄`.
pub fn bilevel_grad(
    bank: &FilterBank,
    noisy: &Image,
    ground: &Image,
    opts: &BilevelOptions,
) -> Result<BilevelGrad> {
    check_pair(noisy, ground)?;
    let sol = denoise_dual_apg(bank, noisy, opts.inner_iters, opts.q)?;
    let xbar = sub(sol.denoised.as_slice(), ground.as_slice());
    let loss = 0.5 * dot(&xbar, &xbar);
    let problem = &sol.problem;
    let mut grad = basis_pairing(bank.basis(), problem.shape(), &sol.dual, &xbar);
    grad.scale_in_place(-1.0);

    let mut pbar = problem.op().apply(&xbar);
    pbar.iter_mut().for_each(|v| *v = -*v);
    let out = fpad_reverse(
        problem,
        &sol.anchor,
        &pbar,
        FpadOptions::new(opts.fpad_iters, opts.fpad_tol),
    )?;
    let fpad_converged = opts.fpad_tol == 0.0 || out.converged;
    if !fpad_converged {
        log::warn!(
            "reverse FPAD stopped after {} iterations above tolerance {:e} (contraction {:.6})",
            out.iterations,
            opts.fpad_tol,
            out.contraction
        );
    }
    grad.add_scaled(1.0, &out.value);
    Ok(BilevelGrad {
        grad,
        loss,
        denoised: sol.denoised,
        fpad_iterations: out.iterations,
        fpad_converged,
    })
}

fn check_pair(noisy: &Image, ground: &Image) -> Result<()> {
    if !noisy.same_shape(ground) {
        return Err(Error::Dimension(
            "noisy and ground-truth images differ in shape".into(),
        ));
    }
    Ok(())
}

/// Outer SGD loop settings.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub inner_iters: usize,
    pub q: f64,
    /// `τ_l = lr/(⌊l/4⌋ + 1)` in epoch `l`.
    pub lr: f64,
    pub momentum: f64,
    pub seed: u64,
    pub noise_std: f64,
    pub filters: usize,
    /// `Θ` entries start uniform in `[0, init_scale)`.
    pub init_scale: f64,
}

impl TrainConfig {
    /// Five epochs on desk-sized patches with six filters.
    pub fn desk() -> Self {
        Self {
            epochs: 5,
            inner_iters: 200,
            q: 5.0,
            lr: 1e-3,
            momentum: 0.75,
            seed: 1,
            noise_std: 40.0 / 255.0,
            filters: 6,
            init_scale: 0.01,
        }
    }

    /// 30 epochs, K = 500, 24 filters, learning rate 1e-4.
    pub fn paper_scale() -> Self {
        Self {
            epochs: 30,
            inner_iters: 500,
            filters: N_BASIS,
            lr: 1e-4,
            ..Self::desk()
        }
    }

    pub fn lr_at(&self, epoch: usize) -> f64 {
        self.lr / ((epoch / 4) as f64 + 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.inner_iters == 0 || self.filters == 0 {
            return bad("inner_iters and filters must be positive".into());
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!(
                "momentum must lie in [0, 1), got {}",
                self.momentum
            ));
        }
        if !(self.lr >= 0.0) || !(self.noise_std >= 0.0) || !(self.init_scale >= 0.0) {
            return bad("lr, noise_std and init_scale must be nonnegative".into());
        }
        Ok(())
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(stream);
        r
    }
}

/// One training pair; the noise is drawn once at construction.
#[derive(Clone, Debug)]
pub struct Sample {
    pub id: usize,
    pub noisy: Image,
    pub ground: Image,
}

/// Adds Gaussian noise of standard deviation `noise_std` to every image.
pub fn make_dataset(grounds: Vec<Image>, noise_std: f64, seed: u64) -> Result<Vec<Sample>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(STREAM_NOISE);
    let normal = Normal::new(0.0, noise_std).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    grounds
        .into_iter()
        .enumerate()
        .map(|(id, ground)| {
            let data = ground
                .as_slice()
                .iter()
                .map(|&v| v + normal.sample(&mut rng))
                .collect();
            Ok(Sample {
                id,
                noisy: ground.with_data(data)?,
                ground,
            })
        })
        .collect()
}

/// Piecewise-constant grayscale patches: a few random rectangles over a
/// random background.
pub fn synthetic_patches(count: usize, size: usize, seed: u64) -> Result<Vec<Image>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(STREAM_PATCHES);
    (0..count)
        .map(|_| {
            let mut data = vec![rng.random::<f64>(); size * size];
            for _ in 0..rng.random_range(2..=4) {
                let (y0, x0) = (rng.random_range(0..size), rng.random_range(0..size));
                let (h, w) = (
                    rng.random_range(2..=size / 2),
                    rng.random_range(2..=size / 2),
                );
                let v: f64 = rng.random();
                for y in y0..(y0 + h).min(size) {
                    for x in x0..(x0 + w).min(size) {
                        data[y * size + x] = v;
                    }
                }
            }
            Image::new(size, size, 1, data)
        })
        .collect()
}

/// Every `.pgm` and `.ppm` file of `dir`, in name order.
pub fn load_image_dir(dir: &Path) -> Result<Vec<Image>> {
    let io = |source| Error::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io)?
        .map(|e| e.map(|e| e.path()).map_err(io))
        .collect::<Result<_>>()?;
    paths.retain(|p| {
        matches!(
            p.extension().and_then(|e| e.to_str()),
            Some("pgm" | "ppm" | "PGM" | "PPM")
        )
    });
    paths.sort();
    if paths.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "no .pgm or .ppm images in {}",
            dir.display()
        )));
    }
    paths.iter().map(|p| load_image(p)).collect()
}

/// One row of the loss log.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LossRecord {
    pub epoch: usize,
    pub step: usize,
    pub image_id: usize,
    pub loss: f64,
    /// PSNR of the clamped recovery against the ground truth.
    pub psnr: f64,
}

#[derive(Clone, Debug)]
pub struct TrainReport {
    pub bank: FilterBank,
    /// Per-step log; losses are those at the weights before the step.
    pub log: Vec<LossRecord>,
    /// Mean loss over the dataset before training (entry 0) and after
    /// every epoch.
    pub epoch_losses: Vec<f64>,
}

/// Initial weights, uniform in `[0, init_scale)`.
pub fn init_bank(cfg: &TrainConfig) -> Result<FilterBank> {
    let mut rng = cfg.rng(STREAM_INIT);
    let unif = Uniform::new(0.0, 1.0).expect("valid range");
    FilterBank::new(DenseMatrix::from_fn(cfg.filters, N_BASIS, |_, _| {
        cfg.init_scale * unif.sample(&mut rng)
    }))
}

/// Mean bilevel loss of `bank` over `data`.
pub fn mean_loss(bank: &FilterBank, data: &[Sample], inner_iters: usize, q: f64) -> Result<f64> {
    let mut total = 0.0;
    for s in data {
        total += bilevel_loss(bank, &s.noisy, &s.ground, inner_iters, q)?;
    }
    Ok(total / data.len() as f64)
}

/// SGD with heavy-ball momentum `v ← μv + ∇J`, `Θ ← Θ − τ_l v`, one image
/// per step, reshuffled every epoch.
pub fn train(data: &[Sample], cfg: &TrainConfig) -> Result<TrainReport> {
    train_with(data, cfg, |_, _| Ok(()))
}

/// [`train`] calling `observe(step, Θ)` before every outer step.
pub fn train_with(
    data: &[Sample],
    cfg: &TrainConfig,
    mut observe: impl FnMut(usize, &FilterBank) -> Result<()>,
) -> Result<TrainReport> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::InvalidArgument("training set is empty".into()));
    }
    let mut bank = init_bank(cfg)?;
    let mut velocity = DenseMatrix::zeros(cfg.filters, N_BASIS);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut shuffle = cfg.rng(STREAM_SHUFFLE);
    let opts = BilevelOptions {
        q: cfg.q,
        ..BilevelOptions::new(cfg.inner_iters)
    };
    let mut log = Vec::with_capacity(cfg.epochs * data.len());
    let mut epoch_losses = vec![mean_loss(&bank, data, cfg.inner_iters, cfg.q)?];
    log::info!("epoch 0: mean loss {:.6e}", epoch_losses[0]);
    let mut step = 0;
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut shuffle);
        let lr = cfg.lr_at(epoch);
        for &i in &order {
            observe(step, &bank)?;
            let s = &data[i];
            let g = bilevel_grad(&bank, &s.noisy, &s.ground, &opts)?;
            log.push(LossRecord {
                epoch,
                step,
                image_id: s.id,
                loss: g.loss,
                psnr: psnr(&g.denoised.clamped(), &s.ground)?.unwrap_or(f64::INFINITY),
            });
            velocity.scale_in_place(cfg.momentum);
            velocity.add_scaled(1.0, &g.grad);
            let mut w = bank.weights.clone();
            w.add_scaled(-lr, &velocity);
            bank = FilterBank::new(w)?;
            step += 1;
        }
        let m = mean_loss(&bank, data, cfg.inner_iters, cfg.q)?;
        log::info!("epoch {}: mean loss {m:.6e}", epoch + 1);
        epoch_losses.push(m);
    }
    Ok(TrainReport {
        bank,
        log,
        epoch_losses,
    })
}

/// Denoises `noisy` with `bank`, running `inner_iters` dual iterations.
pub fn denoise(bank: &FilterBank, noisy: &Image, inner_iters: usize) -> Result<Image> {
    Ok(denoise_dual_apg(bank, noisy, inner_iters, 5.0)?.denoised)
}

/// Writes `Θ` as CSV, one filter per row, 17 significant digits.
pub fn save_weights(path: &Path, bank: &FilterBank) -> Result<()> {
    let w = &bank.weights;
    let mut s = String::new();
    for r in 0..w.rows() {
        let row: Vec<String> = w.row(r).iter().map(|v| format!("{v:.16e}")).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    std::fs::write(path, s).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_weights(path: &Path) -> Result<FilterBank> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(csv_err)?;
    let mut data = Vec::new();
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() != N_BASIS {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                message: format!("row {rows} has {} weights, expected {N_BASIS}", rec.len()),
            });
        }
        for f in rec.iter() {
            data.push(f.trim().parse::<f64>().map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                message: format!("row {rows}: {e}"),
            })?);
        }
        rows += 1;
    }
    FilterBank::new(DenseMatrix::new(rows, N_BASIS, data)?)
}

/// Writes the loss log as `epoch,step,image_id,loss,psnr`.
pub fn write_loss_log(path: &Path, log: &[LossRecord]) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in log {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

//! Bilevel learning of denoising filters.
//!
//! The lower level is `min_x ½‖x − x̂‖² + ‖𝒜(Θ)x‖_{2,1}` with
//! `𝒜(Θ)u = (K_1 ⋆ u, …, K_{N_f} ⋆ u)`, `K_r = Σ_s θ_{r,s}B_s` over the 5×5
//! DCT basis without its constant kernel and replicate boundaries. It is
//! solved through its dual `min_p ½‖x̂ − 𝒜*p‖²` over per-pixel unit balls,
//! recovering `x = x̂ − 𝒜*p`. The upper level fits `Θ` to clean images by
//! SGD, differentiating the dual solve with reverse FPAD.

mod conv;
mod dual;
mod image;
mod train;

pub use conv::{
    basis_pairing, conv_adjoint, conv_apply, correlate, correlate_adjoint_add, dct_basis_5x5,
    kernel_norm_bound, ConvOp, FieldShape, FilterBank, Kernel, Stencil, KERNEL_SIZE, N_BASIS,
};
pub use dual::{
    denoise_dual_apg, dual_project, solve_dual, DenoiseProblem, DualNorm, DualSolution, BALL_TOL,
};
pub use image::{decode_pnm, encode_pnm, load_image, psnr, save_image, Image};
pub use train::{
    bilevel_grad, bilevel_loss, denoise, init_bank, load_image_dir, load_weights, make_dataset,
    mean_loss, save_weights, synthetic_patches, train, train_with, write_loss_log, BilevelGrad,
    BilevelOptions, LossRecord, Sample, TrainConfig, TrainReport,
};

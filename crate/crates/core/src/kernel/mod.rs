//! Signature kernels via the Goursat PDE, Nyström landmarks and kernel martingales.

mod goursat;
mod gram;
mod lift;
mod nystrom;

pub use goursat::{goursat_diagonal, goursat_kernel, GoursatConfig, KernelGrid};
pub use gram::{cross_gram, gram_blocks, kernel_martingales, landmark_block, GramBlock};
pub use lift::{ChannelScaling, KernelChannel, KernelLiftSpec, LiftedPaths};
pub use nystrom::{dual_weights, primal_landmarks, primal_weights, sample_landmarks, self_diagonals};

//! Truncated signatures, log-signatures and linear functionals of paths.

mod functional;
mod lyndon;
mod path;
mod tensor;

pub use functional::{apply_functional, shuffle_product, shuffle_words, LinearFunctional, Word};
pub use lyndon::{lyndon_words, witt_dimension, LyndonBasis};
pub use path::{augment_path, AugmentMode, Augmentation, AugmentedPath};
pub use tensor::{
    chen_product, exp_signature, level_offset, log_signature, segment_signature, signature_checkpoints, tensor_len,
    LogSignature, SignatureAccumulator, TruncatedSignature,
};

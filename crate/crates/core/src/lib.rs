//! Monocular 3D human pose lifting with per-bone forward/backward
//! information (FBI).
//!
//! * [`skeleton`]: the 16-joint layout, FBI labels and 3D→FBI conversion.
//! * [`lifting`]: weak-perspective camera, analytic lifting, synthetic data.
//! * [`regressor`]: the learned 2D+FBI→3D regressor, its losses and training.
//! * [`metrics`]: MPJPE protocols, Procrustes alignment, FBI statistics.
//! * [`data_io`]: JSONL file formats, gold-task mixing, dataset assembly.
//! * [`experiments`]: the end-to-end studies run by the CLI and the
//!   acceptance suite.

pub mod data_io;
pub mod experiments;
pub mod lifting;
pub mod metrics;
pub mod regressor;
pub mod skeleton;

/// Deterministically combines seed components (splitmix64 folded over the
/// parts). Used wherever a sub-stream needs its own generator.
pub fn derive_seed(parts: &[u64]) -> u64 {
    let mut h = 0x9E37_79B9_7F4A_7C15u64;
    for &p in parts {
        let mut z = h ^ p.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        h = z ^ (z >> 31);
    }
    h
}

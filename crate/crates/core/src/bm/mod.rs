//! Bochner-Martinelli currents on toric charts.

pub mod continuation;
pub mod cutoff;
pub mod quad;
pub mod checks;
pub mod pairing;
pub mod sform;

pub mod cli;
pub mod density;
pub mod error;
pub mod ica;
pub mod imageio;
pub mod isomap;
pub mod kim;
pub mod numerics;
pub mod par;
pub mod pca;
pub mod synth;

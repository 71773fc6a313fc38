//! Equilibria of spatial repositioning games on a network and revenue-optimal
//! disclosure of a demand shock at one node.

pub mod config;
pub mod equilibrium;
pub mod mechanism;
pub mod model;
pub mod optimizer;
pub mod pwl;

pub use config::{Config, ConfigError};
pub use equilibrium::{EquilibriumError, RegimeTable};
pub use mechanism::MechanismError;
pub use optimizer::OptimizerError;
pub use pwl::PwlError;
pub use model::{ModelError, Network, Prior};
pub use pwl::PiecewiseLinear;

/// Any error raised by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
    #[error(transparent)]
    Pwl(#[from] PwlError),
    #[error(transparent)]
    Mechanism(#[from] MechanismError),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
}

/// Formats with 12 significant digits, trimming trailing zeros.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-5..12).contains(&exp) {
        let s = format!("{:.11e}", x);
        let (mant, e) = s.split_once('e').unwrap_or((&s, "0"));
        let mant = mant.trim_end_matches('0').trim_end_matches('.');
        return format!("{mant}e{e}");
    }
    let decimals = (11 - exp).max(0) as usize;
    let s = format!("{:.*}", decimals, x);
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

//! mokit: a numerical toolkit for Musielak-Orlicz function spaces.
//!
//! The crate evaluates generalized Young functions M(x, s) and their
//! complementary functions, computes modulars and Luxemburg norms on
//! discretized box domains, applies the classical approximation operators
//! (translation, truncation, mollification), and packages convergence
//! behavior into reproducible pass/fail experiments with a CLI front end.

pub mod cli;
pub mod config;
pub mod conjugate;
pub mod experiments;
pub mod expr;
pub mod geometry;
pub mod grid;
pub mod norms;
pub mod operators;
pub mod phi;
pub mod quad;
pub mod search;

/// Format a value with 9 significant digits, the precision used in all
/// printed numeric output and CSV tables.
pub fn sig9(v: f64) -> String {
    if v == 0.0 {
        "0.00000000e0".to_string()
    } else {
        format!("{v:.8e}")
    }
}

//! Flat `key = value` parameter files.
//!
//! Keys are the [`SystemParams`] field names. Blank lines and lines starting
//! with `#` are ignored; later keys override earlier ones.
//!
//! ```text
//! # no switching, larger surface
//! t_s = 40
//! n_elements = 32
//! noise_power = 0.1
//! ```

use std::path::Path;

use crate::error::{Error, Result};
use crate::params::SystemParams;

/// Applies the assignments in `text` on top of `base`.
pub fn apply_config(base: SystemParams, text: &str, origin: &Path) -> Result<SystemParams> {
    let mut p = base;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| Error::Config {
            path: origin.to_owned(),
            line: idx + 1,
            message,
        };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected key = value, got {line:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        let int = || {
            value
                .parse::<usize>()
                .map_err(|e| err(format!("{key}: {e}")))
        };
        let float = || value.parse::<f64>().map_err(|e| err(format!("{key}: {e}")));
        match key {
            "n_elements" => p.n_elements = int()?,
            "t_k" => p.t_k = int()?,
            "t_s" => p.t_s = int()?,
            "f_blocks" => p.f_blocks = int()?,
            "q_levels" => p.q_levels = int()?,
            "power" => p.power = float()?,
            "noise_power" => p.noise_power = float()?,
            "beta_ab" => p.beta_ab = float()?,
            "beta_ae" => p.beta_ae = float()?,
            "beta_be" => p.beta_be = float()?,
            "beta_ar" => p.beta_ar = float()?,
            "beta_rb" => p.beta_rb = float()?,
            "beta_re" => p.beta_re = float()?,
            other => return Err(err(format!("unknown key {other:?}"))),
        }
    }
    Ok(p)
}

pub fn load_config(base: SystemParams, path: &Path) -> Result<SystemParams> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    apply_config(base, &text, path)
}

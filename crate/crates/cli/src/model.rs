use std::fs;
use std::path::Path;

use plugin_gp::{Dataset, FittedGp, KernelConfig, NoiseModel};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const FORMAT: &str = "plugin-gp-model/1";

/// Persisted fit. Numbers go through shortest round-trip formatting, so every
/// double reads back bit for bit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub kernel: KernelConfig<f64>,
    pub lambda: f64,
    pub sigma2: f64,
    pub noise_model: NoiseModel,
    pub data_sha256: String,
    pub data: Dataset<f64>,
    pub alpha: Vec<f64>,
}

pub fn data_digest(data: &Dataset<f64>) -> String {
    let mut h = Sha256::new();
    let columns = [Some(&data.x), Some(&data.y), data.obs_sd.as_ref()];
    for col in columns.into_iter().flatten() {
        for v in col {
            h.update(v.to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

impl ModelFile {
    pub fn from_fit(fit: &FittedGp<f64>) -> Self {
        ModelFile {
            format: FORMAT.into(),
            kernel: fit.kernel,
            lambda: fit.lambda,
            sigma2: fit.sigma2,
            noise_model: fit.noise_model,
            data_sha256: data_digest(&fit.data),
            data: fit.data.clone(),
            alpha: fit.alpha().iter().copied().collect(),
        }
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        let text = serde_json::to_string_pretty(self).expect("model serializes");
        fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let model: ModelFile =
            serde_json::from_str(&text).map_err(|source| CliError::ModelFormat {
                path: path.to_path_buf(),
                source,
            })?;
        let bad = |msg: String| CliError::Input(format!("{}: {msg}", path.display()));
        if model.format != FORMAT {
            return Err(bad(format!("unsupported format '{}'", model.format)));
        }
        if data_digest(&model.data) != model.data_sha256 {
            return Err(bad("data digest does not match the stored data".into()));
        }
        Ok(model)
    }

    /// Rebuilds the fit from the stored data and hyperparameters and checks
    /// it against the stored weights.
    pub fn refit(&self) -> CliResult<FittedGp<f64>> {
        let kernel = match self.kernel {
            KernelConfig::Matern { nu } => KernelConfig::matern(nu)?,
            ref k => *k,
        };
        let data = Dataset::new(self.data.x.clone(), self.data.y.clone())?;
        let data = match &self.data.obs_sd {
            Some(sd) => Dataset::with_obs_sd(data.x, data.y, sd.clone())?,
            None => data,
        };
        let fit = FittedGp::fit(data, kernel, self.lambda, self.sigma2, self.noise_model)?;
        let scale = self.alpha.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        let drift = fit
            .alpha()
            .iter()
            .zip(&self.alpha)
            .fold(0.0f64, |a, (u, v)| a.max((u - v).abs()));
        if self.alpha.len() != fit.n() || drift > 1e-8 * scale {
            return Err(CliError::Input(
                "stored weights do not match a refit of the stored data".into(),
            ));
        }
        Ok(fit)
    }
}

use std::path::Path;

use serde::{Deserialize, Serialize};

use guidelab_tensor::{
    load_checkpoint, save_checkpoint, Adam, CheckpointData, RngState,
};
use guidelab_zoo::{build_network, NetworkSpec, NetworkState};

use crate::error::{HarnessError, Result};

/// Provenance stored alongside the tensors so a checkpoint can rebuild its
/// network without the original config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub experiment_id: String,
    pub seed: u64,
    pub epoch: u64,
    pub val_loss: f64,
    pub spec: NetworkSpec,
}

pub fn save_net_checkpoint(
    path: &Path,
    net: &NetworkState<f32>,
    optimizer: Option<&Adam<f32>>,
    shuffle_rng: &RngState,
    meta: &CheckpointMeta,
) -> Result<()> {
    let meta_json = serde_json::to_string(meta).map_err(|e| HarnessError::json(path, e))?;
    let data = CheckpointData {
        tensors: net.export_tensors(),
        optimizer: optimizer.map(|o| o.snapshot()),
        rng: (
            shuffle_rng.seed(),
            shuffle_rng.stream(),
            shuffle_rng.word_pos(),
        ),
        meta_json,
    };
    save_checkpoint(path, &data)?;
    Ok(())
}

/// Rebuild the stored network. The fresh-init RNG draw is discarded because
/// every tensor is overwritten from the file.
pub fn load_net_checkpoint(path: &Path) -> Result<(NetworkState<f32>, CheckpointData, CheckpointMeta)> {
    let data = load_checkpoint(path)?;
    let meta: CheckpointMeta =
        serde_json::from_str(&data.meta_json).map_err(|e| HarnessError::json(path, e))?;
    let mut scratch = RngState::new(0);
    let net = build_network::<f32>(&meta.spec, &mut scratch)?;
    net.import_tensors(&data.tensors)?;
    Ok((net, data, meta))
}

/// Load a guide checkpoint and insist its architecture matches `expected`
/// when the config also names a guide spec.
pub fn load_guide_checkpoint(
    path: &Path,
    expected: Option<&NetworkSpec>,
) -> Result<NetworkState<f32>> {
    let (net, _, meta) = load_net_checkpoint(path)?;
    if let Some(spec) = expected {
        if *spec != meta.spec {
            return Err(HarnessError::Config(format!(
                "guide checkpoint {} was built from a different spec than the config's guide_spec",
                path.display()
            )));
        }
    }
    Ok(net)
}

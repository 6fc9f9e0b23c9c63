use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{DetectorModel, ModelMetadata};
use crate::error::{Error, Result};
use crate::neural::{DenseLayer, Network};
use crate::preprocess::FeaturePipeline;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct LayerArtifact {
    /// Row-major `[n_out, n_in]`.
    weights: Vec<f64>,
    biases: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    prelu_slope: Option<f64>,
}

#[derive(Serialize, Deserialize)]
pub(crate) struct NetworkArtifact {
    hidden_sizes: Vec<usize>,
    encoder_len: usize,
    layers: Vec<LayerArtifact>,
}

#[derive(Serialize, Deserialize)]
struct ModelArtifact {
    format_version: u32,
    metadata: ModelMetadata,
    pipeline: FeaturePipeline,
    network: NetworkArtifact,
    threshold: f64,
}

impl NetworkArtifact {
    pub(crate) fn from_network(net: &Network) -> Self {
        Self {
            hidden_sizes: net.hidden_sizes(),
            encoder_len: net.encoder_len(),
            layers: net
                .layers()
                .iter()
                .map(|l| LayerArtifact {
                    weights: l.weights.iter().copied().collect(),
                    biases: l.biases.to_vec(),
                    prelu_slope: l.prelu_slope,
                })
                .collect(),
        }
    }

    fn into_network(self) -> Result<Network> {
        let mut layers = Vec::with_capacity(self.layers.len());
        for (k, l) in self.layers.into_iter().enumerate() {
            let n_out = l.biases.len();
            if n_out == 0 || l.weights.len() % n_out != 0 {
                return Err(Error::BadArtifact(format!("layer {k}: inconsistent weight count")));
            }
            let n_in = l.weights.len() / n_out;
            let weights = Array2::from_shape_vec((n_out, n_in), l.weights)
                .map_err(|e| Error::BadArtifact(e.to_string()))?;
            layers.push(DenseLayer {
                weights,
                biases: Array1::from(l.biases),
                prelu_slope: l.prelu_slope,
                frozen: false,
            });
        }
        let net = Network::new(layers, self.encoder_len).map_err(|e| Error::BadArtifact(e.to_string()))?;
        if net.hidden_sizes() != self.hidden_sizes {
            return Err(Error::BadArtifact(format!(
                "hidden_sizes {:?} disagree with layer shapes {:?}",
                self.hidden_sizes,
                net.hidden_sizes()
            )));
        }
        Ok(net)
    }
}

/// The network part of the artifact as JSON; equal strings mean bit-equal parameters.
pub fn network_json(net: &Network) -> String {
    serde_json::to_string(&NetworkArtifact::from_network(net)).expect("network serializes")
}

impl DetectorModel {
    pub fn to_json(&self) -> Result<String> {
        let artifact = ModelArtifact {
            format_version: FORMAT_VERSION,
            metadata: self.metadata.clone(),
            pipeline: self.pipeline.clone(),
            network: NetworkArtifact::from_network(&self.network),
            threshold: self.threshold,
        };
        Ok(serde_json::to_string_pretty(&artifact)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::BadArtifact(e.to_string()))?;
        match value.get("format_version").and_then(|v| v.as_u64()) {
            Some(v) if v == FORMAT_VERSION as u64 => {}
            Some(v) => return Err(Error::BadArtifact(format!("unsupported format_version {v}"))),
            None => return Err(Error::BadArtifact("missing format_version".into())),
        }
        let artifact: ModelArtifact =
            serde_json::from_str(text).map_err(|e| Error::BadArtifact(e.to_string()))?;
        let p = &artifact.pipeline;
        let n = p.feature_names.len();
        if p.min_vals.len() != n || p.max_vals.len() != n {
            return Err(Error::BadArtifact("pipeline scaling vectors have the wrong length".into()));
        }
        if p.min_vals.iter().zip(&p.max_vals).any(|(lo, hi)| !(lo <= hi)) {
            return Err(Error::BadArtifact("pipeline has min > max".into()));
        }
        if !(artifact.threshold.is_finite() && artifact.threshold >= 0.0) {
            return Err(Error::BadArtifact("threshold must be finite and non-negative".into()));
        }
        let network = artifact.network.into_network()?;
        DetectorModel::new(artifact.pipeline, network, artifact.threshold, artifact.metadata)
            .map_err(|e| Error::BadArtifact(e.to_string()))
    }
}

pub fn save_model(model: &DetectorModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, model.to_json()?).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<DetectorModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    DetectorModel::from_json(&text)
}

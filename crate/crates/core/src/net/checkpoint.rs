//! JSON checkpoints with every real stored as an IEEE-754 hex-float string.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::hexfloat;
use super::mlp::MlpParams;
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointFile {
    layer_sizes: Vec<usize>,
    activation: String,
    weights: Vec<Vec<String>>,
    biases: Vec<Vec<String>>,
    seed: u64,
    meta: BTreeMap<String, String>,
}

pub type Meta = BTreeMap<String, String>;

pub fn to_json(params: &MlpParams, meta: &Meta) -> Result<String> {
    params.validate()?;
    let encode = |rows: &[Vec<f64>]| -> Vec<Vec<String>> {
        rows.iter().map(|r| r.iter().map(|v| hexfloat::format(*v)).collect()).collect()
    };
    let file = CheckpointFile {
        layer_sizes: params.layer_sizes.clone(),
        activation: "tanh".into(),
        weights: encode(&params.weights),
        biases: encode(&params.biases),
        seed: params.seed,
        meta: meta.clone(),
    };
    let mut text = serde_json::to_string(&file)?;
    text.push('\n');
    Ok(text)
}

pub fn from_json(text: &str) -> Result<(MlpParams, Meta)> {
    let file: CheckpointFile =
        serde_json::from_str(text).map_err(|e| Error::Checkpoint(format!("malformed checkpoint: {e}")))?;
    if file.activation != "tanh" {
        return Err(Error::Checkpoint(format!("unsupported activation {:?}", file.activation)));
    }
    let decode = |rows: Vec<Vec<String>>, what: &str| -> Result<Vec<Vec<f64>>> {
        rows.into_iter()
            .enumerate()
            .map(|(l, row)| {
                row.iter()
                    .map(|s| {
                        hexfloat::parse(s)
                            .ok_or_else(|| Error::Checkpoint(format!("{what}[{l}]: bad hex float {s:?}")))
                    })
                    .collect()
            })
            .collect()
    };
    let params = MlpParams {
        layer_sizes: file.layer_sizes,
        weights: decode(file.weights, "weights")?,
        biases: decode(file.biases, "biases")?,
        seed: file.seed,
    };
    params
        .validate()
        .map_err(|e| Error::Checkpoint(format!("header/payload mismatch: {e}")))?;
    Ok((params, file.meta))
}

pub fn save_checkpoint(params: &MlpParams, meta: &Meta, path: &Path) -> Result<()> {
    fs::write(path, to_json(params, meta)?)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(MlpParams, Meta)> {
    from_json(&fs::read_to_string(path)?)
}

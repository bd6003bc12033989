//! On-disk formats: JSON model files and the word literal syntax.
//!
//! Model files store every number as an exact rational string (`"3"`,
//! `"-1/4"`); networks are stored layer by layer as dense weight rows.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arithmetic::{format_rational, parse_rational, ArithError, Rational};
use crate::fnn::{Activation, Fnn, FnnError, FnnLayer, FnnNode};
use crate::ltl::{format_letter, parse_letter};
use crate::ssm::{
    classify_gates, AffineMap, GateClasses, GateSpec, Matrix, SsmError, SsmLayer, SsmModel,
};

pub const MODEL_FORMAT: &str = "ssmverify-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("malformed model file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported model file: {0}")]
    Version(String),
    #[error(transparent)]
    Rational(#[from] ArithError),
    #[error(transparent)]
    Fnn(#[from] FnnError),
    #[error(transparent)]
    Ssm(#[from] SsmError),
    #[error("invalid word literal: {0}")]
    Word(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Descriptive data stored next to a model. None of it affects evaluation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metadata {
    /// `ltl`, `minsky`, `ilp` or `custom`.
    pub source: String,
    pub gate_classes: GateClasses,
    /// Smallest signed fixed-point width known to evaluate the model exactly.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_bits: Option<u32>,
    /// Fractional bits of that width.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frac_bits: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formula: Option<String>,
}

impl Metadata {
    pub fn for_model(model: &SsmModel, source: &str) -> Self {
        Self {
            source: source.to_string(),
            gate_classes: classify_gates(model),
            min_bits: None,
            frac_bits: None,
            formula: None,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    alphabet: Vec<String>,
    dimension: usize,
    embedding: Vec<Vec<String>>,
    layers: Vec<LayerFile>,
    out: FnnFile,
    metadata: Metadata,
}

#[derive(Serialize, Deserialize)]
struct LayerFile {
    h0: Vec<String>,
    gate: GateFile,
    inc: IncFile,
    phi: FnnFile,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum GateFile {
    TimeInvariant {
        a: Vec<Vec<String>>,
    },
    DiagonalAffine {
        g: Vec<Vec<String>>,
        g0: Vec<String>,
    },
}

#[derive(Serialize, Deserialize)]
struct IncFile {
    b: Vec<Vec<String>>,
    c: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct FnnFile {
    input_dim: usize,
    layers: Vec<FnnLayerFile>,
}

#[derive(Serialize, Deserialize)]
struct FnnLayerFile {
    w: Vec<Vec<String>>,
    b: Vec<String>,
    act: Vec<Activation>,
}

fn vec_out(v: &[Rational]) -> Vec<String> {
    v.iter().map(format_rational).collect()
}

fn mat_out(m: &Matrix) -> Vec<Vec<String>> {
    m.iter().map(|r| vec_out(r)).collect()
}

fn vec_in(v: &[String]) -> Result<Vec<Rational>, FormatError> {
    v.iter()
        .map(|x| parse_rational(x).map_err(FormatError::from))
        .collect()
}

fn mat_in(m: &[Vec<String>]) -> Result<Matrix, FormatError> {
    m.iter().map(|r| vec_in(r)).collect()
}

fn fnn_out(net: &Fnn) -> FnnFile {
    FnnFile {
        input_dim: net.input_dim(),
        layers: net
            .layers()
            .iter()
            .map(|l| FnnLayerFile {
                w: l.nodes().iter().map(|n| vec_out(&n.weights)).collect(),
                b: l.nodes().iter().map(|n| format_rational(&n.bias)).collect(),
                act: l.nodes().iter().map(|n| n.activation).collect(),
            })
            .collect(),
    }
}

fn fnn_in(file: &FnnFile) -> Result<Fnn, FormatError> {
    let mut dim = file.input_dim;
    let mut layers = Vec::with_capacity(file.layers.len());
    for l in &file.layers {
        if l.w.len() != l.b.len() || l.w.len() != l.act.len() {
            return Err(FnnError::Malformed("w, b and act differ in length".into()).into());
        }
        let nodes =
            l.w.iter()
                .zip(&l.b)
                .zip(&l.act)
                .map(|((w, b), &activation)| {
                    Ok(FnnNode {
                        weights: vec_in(w)?,
                        bias: parse_rational(b)?,
                        activation,
                    })
                })
                .collect::<Result<Vec<_>, FormatError>>()?;
        let layer = FnnLayer::new(dim, nodes)?;
        dim = layer.output_dim();
        layers.push(layer);
    }
    Ok(Fnn::new(file.input_dim, layers)?)
}

/// Pretty-printed JSON; equal models give byte-identical output.
pub fn model_to_json(model: &SsmModel, metadata: &Metadata) -> String {
    let file = ModelFile {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        alphabet: model.alphabet().to_vec(),
        dimension: model.dim(),
        embedding: mat_out(&model.embedding().to_vec()),
        layers: model
            .layers()
            .iter()
            .map(|l| LayerFile {
                h0: vec_out(&l.h0),
                gate: match &l.gate {
                    GateSpec::TimeInvariant(a) => GateFile::TimeInvariant { a: mat_out(a) },
                    GateSpec::DiagonalAffine { g, g0 } => GateFile::DiagonalAffine {
                        g: mat_out(g),
                        g0: vec_out(g0),
                    },
                },
                inc: IncFile {
                    b: mat_out(&l.inc.b),
                    c: vec_out(&l.inc.c),
                },
                phi: fnn_out(&l.phi),
            })
            .collect(),
        out: fnn_out(model.out()),
        metadata: metadata.clone(),
    };
    let mut text = serde_json::to_string_pretty(&file).expect("model serialises");
    text.push('\n');
    text
}

pub fn model_from_json(text: &str) -> Result<(SsmModel, Metadata), FormatError> {
    let file: ModelFile = serde_json::from_str(text)?;
    if file.format != MODEL_FORMAT {
        return Err(FormatError::Version(format!(
            "format `{}`, expected `{MODEL_FORMAT}`",
            file.format
        )));
    }
    if file.version != MODEL_VERSION {
        return Err(FormatError::Version(format!(
            "version {}, expected {MODEL_VERSION}",
            file.version
        )));
    }
    let layers = file
        .layers
        .iter()
        .map(|l| {
            Ok(SsmLayer {
                h0: vec_in(&l.h0)?,
                gate: match &l.gate {
                    GateFile::TimeInvariant { a } => GateSpec::TimeInvariant(mat_in(a)?),
                    GateFile::DiagonalAffine { g, g0 } => GateSpec::DiagonalAffine {
                        g: mat_in(g)?,
                        g0: vec_in(g0)?,
                    },
                },
                inc: AffineMap {
                    b: mat_in(&l.inc.b)?,
                    c: vec_in(&l.inc.c)?,
                },
                phi: fnn_in(&l.phi)?,
            })
        })
        .collect::<Result<Vec<_>, FormatError>>()?;
    let model = SsmModel::new(
        file.alphabet,
        mat_in(&file.embedding)?,
        layers,
        fnn_in(&file.out)?,
        file.dimension,
    )?;
    Ok((model, file.metadata))
}

pub fn save_model(path: &Path, model: &SsmModel, metadata: &Metadata) -> Result<(), FormatError> {
    std::fs::write(path, model_to_json(model, metadata)).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_model(path: &Path) -> Result<(SsmModel, Metadata), FormatError> {
    let text = std::fs::read_to_string(path).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })?;
    model_from_json(&text)
}

/// Parses a `;`-separated word. Letters are `{p,q}` sets (normalised to
/// sorted order), `(state,action)` pairs, or bare tokens such as `2`.
/// The empty literal is the empty word.
pub fn parse_word(text: &str) -> Result<Vec<String>, FormatError> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    text.split(';')
        .map(|raw| parse_symbol(raw.trim()))
        .collect()
}

fn parse_symbol(token: &str) -> Result<String, FormatError> {
    let bad = |msg: &str| FormatError::Word(format!("`{token}`: {msg}"));
    if token.is_empty() {
        return Err(bad("empty letter"));
    }
    if token.starts_with('{') {
        let letter = parse_letter(token).map_err(|e| bad(&e.to_string()))?;
        return Ok(format_letter(&letter));
    }
    if let Some(inner) = token.strip_prefix('(') {
        let inner = inner
            .strip_suffix(')')
            .ok_or_else(|| bad("unclosed pair"))?;
        let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
        return match parts.as_slice() {
            [state, action] if !state.is_empty() && !action.is_empty() => {
                Ok(format!("({state},{action})"))
            }
            _ => Err(bad("expected (state,action)")),
        };
    }
    if token
        .chars()
        .any(|c| c.is_whitespace() || "{}(),".contains(c))
    {
        return Err(bad("unexpected character"));
    }
    Ok(token.to_string())
}

pub fn format_word<S: AsRef<str>>(word: &[S]) -> String {
    word.iter().map(AsRef::as_ref).collect::<Vec<_>>().join(";")
}

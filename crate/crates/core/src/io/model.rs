//! Model artifacts: a JSON document with a type tag, the fitting
//! configuration and the parameters at full `f64` precision.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;
use std::io::{Read, Write};

use super::IoError;
use crate::anchors::{AttributeDirection, ConceptAnchor};
use crate::stats::{KentModel, MovmfModel, VmfModel};

pub const FORMAT_VERSION: u32 = 1;

/// How a model was produced.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FitConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub sample_count: Option<usize>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub options: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelArtifact {
    Vmf(VmfModel),
    Movmf(MovmfModel),
    Kent(KentModel),
    Anchor(ConceptAnchor),
    AttributeDirection(AttributeDirection),
}

impl ModelArtifact {
    pub fn type_tag(&self) -> &'static str {
        match self {
            ModelArtifact::Vmf(_) => "vmf",
            ModelArtifact::Movmf(_) => "movmf",
            ModelArtifact::Kent(_) => "kent",
            ModelArtifact::Anchor(_) => "anchor",
            ModelArtifact::AttributeDirection(_) => "attribute_direction",
        }
    }
}

pub const TYPE_TAGS: [&str; 5] = ["vmf", "movmf", "kent", "anchor", "attribute_direction"];

#[derive(Debug, Clone, PartialEq)]
pub struct ModelDocument {
    pub artifact: ModelArtifact,
    pub config: FitConfig,
}

impl ModelDocument {
    pub fn new(artifact: ModelArtifact, config: FitConfig) -> Self {
        ModelDocument { artifact, config }
    }
}

#[derive(Serialize, Deserialize)]
struct Raw {
    #[serde(rename = "type")]
    type_tag: String,
    format_version: u32,
    config: FitConfig,
    params: Value,
}

fn schema<E: std::fmt::Display>(e: E) -> IoError {
    IoError::SchemaViolation(e.to_string())
}

pub fn to_json(doc: &ModelDocument) -> Result<String, IoError> {
    let params = match &doc.artifact {
        ModelArtifact::Vmf(m) => serde_json::to_value(m),
        ModelArtifact::Movmf(m) => serde_json::to_value(m),
        ModelArtifact::Kent(m) => serde_json::to_value(m),
        ModelArtifact::Anchor(m) => serde_json::to_value(m),
        ModelArtifact::AttributeDirection(m) => serde_json::to_value(m),
    }
    .map_err(schema)?;
    let raw = Raw {
        type_tag: doc.artifact.type_tag().to_string(),
        format_version: FORMAT_VERSION,
        config: doc.config.clone(),
        params,
    };
    let mut s = serde_json::to_string_pretty(&raw).map_err(schema)?;
    s.push('\n');
    Ok(s)
}

pub fn from_json(text: &str) -> Result<ModelDocument, IoError> {
    let value: Value = serde_json::from_str(text).map_err(schema)?;
    let tag = value
        .get("type")
        .and_then(Value::as_str)
        .ok_or_else(|| IoError::SchemaViolation("missing string field `type`".into()))?;
    if !TYPE_TAGS.contains(&tag) {
        return Err(IoError::UnknownTypeTag(tag.to_string()));
    }
    let raw: Raw = serde_json::from_value(value).map_err(schema)?;
    if raw.format_version != FORMAT_VERSION {
        return Err(IoError::SchemaViolation(format!(
            "unsupported format_version {}",
            raw.format_version
        )));
    }
    let p = raw.params;
    let artifact = match raw.type_tag.as_str() {
        "vmf" => {
            let m: VmfModel = serde_json::from_value(p).map_err(schema)?;
            VmfModel::new(m.mu.clone(), m.kappa).map_err(schema)?;
            if m.dim != m.mu.dim() {
                return Err(schema("vmf: dim does not match mu"));
            }
            ModelArtifact::Vmf(m)
        }
        "movmf" => {
            let m: MovmfModel = serde_json::from_value(p).map_err(schema)?;
            ModelArtifact::Movmf(MovmfModel::new(m.components).map_err(schema)?)
        }
        "kent" => {
            let m: KentModel = serde_json::from_value(p).map_err(schema)?;
            let checked = KentModel::new(m.mu, m.kappa, m.beta, m.gamma1, m.gamma2).map_err(schema)?;
            if checked.dim != m.dim {
                return Err(schema("kent: dim does not match mu"));
            }
            ModelArtifact::Kent(checked)
        }
        "anchor" => {
            let a: ConceptAnchor = serde_json::from_value(p).map_err(schema)?;
            let m = &a.model;
            KentModel::new(m.mu.clone(), m.kappa, m.beta, m.gamma1.clone(), m.gamma2.clone()).map_err(schema)?;
            ModelArtifact::Anchor(a)
        }
        "attribute_direction" => {
            let d: AttributeDirection = serde_json::from_value(p).map_err(schema)?;
            d.validate().map_err(schema)?;
            ModelArtifact::AttributeDirection(d)
        }
        other => return Err(IoError::UnknownTypeTag(other.to_string())),
    };
    Ok(ModelDocument {
        artifact,
        config: raw.config,
    })
}

pub fn write_model<W: Write>(doc: &ModelDocument, mut sink: W) -> Result<usize, IoError> {
    let s = to_json(doc)?;
    sink.write_all(s.as_bytes()).map_err(IoError::SinkFailure)?;
    sink.flush().map_err(IoError::SinkFailure)?;
    Ok(s.len())
}

pub fn read_model<R: Read>(mut source: R) -> Result<ModelDocument, IoError> {
    let mut s = String::new();
    source.read_to_string(&mut s).map_err(IoError::Source)?;
    from_json(&s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::Direction;
    use crate::stats::movmf::MovmfComponent;

    fn kent() -> KentModel {
        let mu = Direction::normalized(&[1.0, 0.3, -0.2, 0.1]).unwrap();
        let g1 = Direction::normalized(&crate::sphere::tangent_project(&mu, &[0.0, 1.0, 0.0, 0.0])).unwrap();
        let mut v = crate::sphere::tangent_project(&mu, &[0.0, 0.0, 1.0, 0.0]);
        crate::linalg::orthogonalize_against(&mut v, &[g1.as_slice()]);
        let g2 = Direction::normalized(&v).unwrap();
        KentModel::new(mu, 123.456789012345, 0.1 / 3.0, g1, g2).unwrap()
    }

    #[test]
    fn kent_roundtrip_is_exact() {
        let doc = ModelDocument::new(
            ModelArtifact::Kent(kent()),
            FitConfig {
                seed: Some(7),
                sample_count: Some(5000),
                ..Default::default()
            },
        );
        let mut buf = Vec::new();
        write_model(&doc, &mut buf).unwrap();
        let back = read_model(&buf[..]).unwrap();
        assert_eq!(back, doc);
    }

    #[test]
    fn unknown_tag() {
        let text = to_json(&ModelDocument::new(ModelArtifact::Kent(kent()), FitConfig::default()))
            .unwrap()
            .replace("\"kent\"", "\"bingham\"");
        assert!(matches!(from_json(&text), Err(IoError::UnknownTypeTag(t)) if t == "bingham"));
    }

    #[test]
    fn missing_gamma1() {
        let doc = ModelDocument::new(ModelArtifact::Kent(kent()), FitConfig::default());
        let mut v: Value = serde_json::from_str(&to_json(&doc).unwrap()).unwrap();
        v["params"].as_object_mut().unwrap().remove("gamma1");
        assert!(matches!(from_json(&v.to_string()), Err(IoError::SchemaViolation(_))));
    }

    #[test]
    fn non_orthogonal_frame_is_a_schema_violation() {
        let doc = ModelDocument::new(ModelArtifact::Kent(kent()), FitConfig::default());
        let mut v: Value = serde_json::from_str(&to_json(&doc).unwrap()).unwrap();
        v["params"]["gamma2"] = v["params"]["gamma1"].clone();
        assert!(matches!(from_json(&v.to_string()), Err(IoError::SchemaViolation(_))));
    }

    #[test]
    fn movmf_keeps_component_order() {
        let comps: Vec<MovmfComponent> = (0..3)
            .map(|i| MovmfComponent {
                weight: [0.5, 0.3, 0.2][i],
                model: VmfModel::new(Direction::basis(3, i), 10.0 * (i + 1) as f64).unwrap(),
            })
            .collect();
        let doc = ModelDocument::new(
            ModelArtifact::Movmf(MovmfModel::new(comps).unwrap()),
            FitConfig::default(),
        );
        let back = from_json(&to_json(&doc).unwrap()).unwrap();
        assert_eq!(back, doc);
    }
}

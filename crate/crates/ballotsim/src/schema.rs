//! Voter attribute schema and run configuration.
//!
//! A schema is an ordered list of attributes. Each attribute is either
//! categorical (explicit labels with probabilities) or a binned continuous
//! quantity (a Gaussian sampled at generation time and mapped into
//! half-open bins). Both kinds reduce to a category index per individual,
//! which is what every downstream stage consumes.

use std::collections::HashSet;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How an attribute's values are distributed and discretized.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AttributeKind {
    Categorical {
        labels: Vec<String>,
        probs: Vec<f64>,
    },
    /// Gaussian sampled then binned at `edges`; bins are
    /// `(-inf, e0), [e0, e1), ..., [e_last, inf)`.
    Binned {
        mean: f64,
        std: f64,
        edges: Vec<f64>,
        #[serde(default)]
        labels: Vec<String>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttributeDef {
    pub name: String,
    #[serde(flatten)]
    pub kind: AttributeKind,
}

impl AttributeDef {
    pub fn n_categories(&self) -> usize {
        match &self.kind {
            AttributeKind::Categorical { labels, .. } => labels.len(),
            AttributeKind::Binned { edges, .. } => edges.len() + 1,
        }
    }

    pub fn label(&self, category: usize) -> String {
        match &self.kind {
            AttributeKind::Categorical { labels, .. } => labels[category].clone(),
            AttributeKind::Binned { labels, edges, .. } => {
                if category < labels.len() {
                    labels[category].clone()
                } else if category == 0 {
                    format!("lt_{}", edges[0])
                } else if category == edges.len() {
                    format!("gte_{}", edges[category - 1])
                } else {
                    format!("{}_to_{}", edges[category - 1], edges[category])
                }
            }
        }
    }

    /// Resolve a label back to its category index.
    pub fn category_of_label(&self, label: &str) -> Option<usize> {
        (0..self.n_categories()).find(|&c| self.label(c) == label)
    }

    /// Draw one category index from this attribute's distribution.
    pub fn sample(&self, rng: &mut impl Rng) -> u16 {
        match &self.kind {
            AttributeKind::Categorical { probs, .. } => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for (i, &p) in probs.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        return i as u16;
                    }
                }
                (probs.len() - 1) as u16
            }
            AttributeKind::Binned {
                mean, std, edges, ..
            } => {
                let value = if *std > 0.0 {
                    Normal::new(*mean, *std).expect("validated std").sample(rng)
                } else {
                    *mean
                };
                bin_of(value, edges) as u16
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match &self.kind {
            AttributeKind::Categorical { labels, probs } => {
                if labels.is_empty() {
                    return Err(Error::InvalidAttribute {
                        attribute: self.name.clone(),
                        message: "no categories".into(),
                    });
                }
                if labels.len() != probs.len() {
                    return Err(Error::InvalidAttribute {
                        attribute: self.name.clone(),
                        message: format!("{} labels but {} probs", labels.len(), probs.len()),
                    });
                }
                if probs.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                    return Err(Error::InvalidAttribute {
                        attribute: self.name.clone(),
                        message: "probabilities must lie in [0, 1]".into(),
                    });
                }
                let sum: f64 = probs.iter().sum();
                if (sum - 1.0).abs() > 1e-9 {
                    return Err(Error::ProbabilitySum {
                        attribute: self.name.clone(),
                        sum,
                    });
                }
            }
            AttributeKind::Binned {
                std,
                edges,
                labels,
                ..
            } => {
                if edges.is_empty() {
                    return Err(Error::InvalidAttribute {
                        attribute: self.name.clone(),
                        message: "binned attribute needs at least one edge".into(),
                    });
                }
                if edges.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::BinEdgeOrder {
                        attribute: self.name.clone(),
                    });
                }
                if !labels.is_empty() && labels.len() != edges.len() + 1 {
                    return Err(Error::InvalidAttribute {
                        attribute: self.name.clone(),
                        message: format!(
                            "{} labels for {} bins",
                            labels.len(),
                            edges.len() + 1
                        ),
                    });
                }
                if !std.is_finite() || *std < 0.0 {
                    return Err(Error::InvalidAttribute {
                        attribute: self.name.clone(),
                        message: "std must be finite and non-negative".into(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Index of the half-open bin containing `value`.
pub fn bin_of(value: f64, edges: &[f64]) -> usize {
    edges.iter().take_while(|&&e| value >= e).count()
}

/// Ordered attribute definitions shared by every stage of a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttributeSchema {
    pub attributes: Vec<AttributeDef>,
}

impl AttributeSchema {
    pub fn new(attributes: Vec<AttributeDef>) -> Result<Self> {
        let schema = Self { attributes };
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        if self.attributes.is_empty() {
            return Err(Error::EmptySchema);
        }
        let mut seen = HashSet::new();
        for attr in &self.attributes {
            if !seen.insert(attr.name.as_str()) {
                return Err(Error::DuplicateAttribute(attr.name.clone()));
            }
            attr.validate()?;
        }
        Ok(())
    }

    pub fn n_attributes(&self) -> usize {
        self.attributes.len()
    }

    /// Total one-hot feature width: the sum of category counts.
    pub fn encoded_len(&self) -> usize {
        self.attributes.iter().map(|a| a.n_categories()).sum()
    }

    /// Per-attribute offsets into the one-hot encoding.
    pub fn feature_offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.attributes.len());
        let mut acc = 0;
        for attr in &self.attributes {
            offsets.push(acc);
            acc += attr.n_categories();
        }
        offsets
    }

    /// Category counts per attribute, the radix vector for cell indexing.
    pub fn dims(&self) -> Vec<usize> {
        self.attributes.iter().map(|a| a.n_categories()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }
}

/// Prior from which per-region, per-category desirabilities are drawn.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(tag = "prior", rename_all = "snake_case")]
#[derive(Default)]
pub enum DesirabilityPrior {
    #[default]
    Uniform,
    Fixed { value: f64 },
    Beta { alpha: f64, beta: f64 },
}


impl DesirabilityPrior {
    pub fn validate(&self) -> Result<()> {
        match self {
            DesirabilityPrior::Uniform => Ok(()),
            DesirabilityPrior::Fixed { value } => {
                if (0.0..=1.0).contains(value) {
                    Ok(())
                } else {
                    Err(Error::InvalidPrior(format!(
                        "fixed value {value} outside [0, 1]"
                    )))
                }
            }
            DesirabilityPrior::Beta { alpha, beta } => {
                if *alpha > 0.0 && *beta > 0.0 && alpha.is_finite() && beta.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidPrior(format!(
                        "beta parameters ({alpha}, {beta}) must be positive"
                    )))
                }
            }
        }
    }
}

/// Desirability prior plus optional per-(attribute, category) overrides.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct DesirabilityConfig {
    #[serde(default, flatten)]
    pub default: DesirabilityPrior,
    #[serde(default, rename = "override")]
    pub overrides: Vec<DesirabilityOverride>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DesirabilityOverride {
    pub attribute: String,
    pub category: usize,
    #[serde(flatten)]
    pub prior: DesirabilityPrior,
}

impl DesirabilityConfig {
    pub fn validate(&self, schema: &AttributeSchema) -> Result<()> {
        self.default.validate()?;
        for o in &self.overrides {
            o.prior.validate()?;
            let attr = schema
                .index_of(&o.attribute)
                .ok_or_else(|| Error::InvalidPrior(format!("unknown attribute {}", o.attribute)))?;
            if o.category >= schema.attributes[attr].n_categories() {
                return Err(Error::InvalidPrior(format!(
                    "category {} out of range for {}",
                    o.category, o.attribute
                )));
            }
        }
        Ok(())
    }

    /// Prior in effect for `(attribute, category)`.
    pub fn prior_for(&self, schema: &AttributeSchema, attr: usize, cat: usize) -> DesirabilityPrior {
        for o in &self.overrides {
            if schema.index_of(&o.attribute) == Some(attr) && o.category == cat {
                return o.prior;
            }
        }
        self.default
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RedistributionConfig {
    pub sample_fraction: f64,
    pub cap_factor: f64,
}

impl Default for RedistributionConfig {
    fn default() -> Self {
        Self {
            sample_fraction: 0.3,
            cap_factor: 1.5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MailInConfig {
    pub sample_fraction: f64,
    #[serde(default)]
    pub bias: f64,
    /// Per-attribute weight vectors (one weight per category), keyed by name.
    #[serde(default)]
    pub weights: std::collections::BTreeMap<String, Vec<f64>>,
}

impl Default for MailInConfig {
    fn default() -> Self {
        Self {
            sample_fraction: 0.5,
            bias: 0.0,
            weights: Default::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Tanh,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VotingConfig {
    pub dropout: f64,
    /// Uniform noise half-width as a multiple of the score standard deviation.
    pub noise_scale: f64,
    #[serde(default = "default_activation")]
    pub activation: Activation,
    pub target_share: f64,
}

fn default_activation() -> Activation {
    Activation::Identity
}

impl Default for VotingConfig {
    fn default() -> Self {
        Self {
            dropout: 0.1,
            noise_scale: 0.25,
            activation: Activation::Identity,
            target_share: 0.5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PollingConfig {
    pub rate: f64,
    pub target_error: f64,
}

impl Default for PollingConfig {
    fn default() -> Self {
        Self {
            rate: 0.05,
            target_error: 0.029,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub regions: usize,
    pub population: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            regions: 250,
            population: 500_000,
        }
    }
}

/// Full run configuration: simulation sizes, stage parameters, and the
/// attribute schema. Parsed from a TOML file; every section has defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub redistribution: RedistributionConfig,
    #[serde(default)]
    pub desirability: DesirabilityConfig,
    #[serde(default)]
    pub mail_in: MailInConfig,
    #[serde(default)]
    pub voting: VotingConfig,
    #[serde(default)]
    pub polling: PollingConfig,
    #[serde(rename = "attribute")]
    pub attributes: Vec<AttributeDef>,
}

impl SimConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: SimConfig =
            toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let schema = AttributeSchema {
            attributes: self.attributes.clone(),
        };
        schema.validate()?;
        self.desirability.validate(&schema)?;
        for (name, weights) in &self.mail_in.weights {
            let attr = schema.index_of(name).ok_or_else(|| Error::InvalidAttribute {
                attribute: name.clone(),
                message: "mail-in weight for unknown attribute".into(),
            })?;
            if weights.len() != schema.attributes[attr].n_categories() {
                return Err(Error::InvalidAttribute {
                    attribute: name.clone(),
                    message: format!(
                        "{} mail-in weights for {} categories",
                        weights.len(),
                        schema.attributes[attr].n_categories()
                    ),
                });
            }
        }
        Ok(())
    }

    pub fn schema(&self) -> AttributeSchema {
        AttributeSchema {
            attributes: self.attributes.clone(),
        }
    }

    /// The census-style example configuration bundled with the crate.
    pub fn census_example() -> Self {
        Self::from_toml(include_str!("../configs/census.toml"))
            .expect("bundled config is valid")
    }

    /// Mail-in weights resolved into dense per-attribute vectors.
    pub fn mail_in_weights(&self) -> Vec<Vec<f64>> {
        let schema = self.schema();
        schema
            .attributes
            .iter()
            .map(|a| {
                self.mail_in
                    .weights
                    .get(&a.name)
                    .cloned()
                    .unwrap_or_else(|| vec![0.0; a.n_categories()])
            })
            .collect()
    }
}

/// Load and validate the attribute schema from a config file.
pub fn load_schema(path: impl AsRef<Path>) -> Result<AttributeSchema> {
    Ok(SimConfig::load(path)?.schema())
}

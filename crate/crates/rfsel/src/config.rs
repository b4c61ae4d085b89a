//! Run configuration, read from TOML (or from the JSON manifest of an
//! earlier run), and its translation into core method configurations.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rfsel_core::evaluation::{MethodConfig, SelectorConfig, DEFAULT_ALPHA, DEFAULT_REPLICATES};
use rfsel_core::ferns::{FernAveraging, FernsParams, ProbScale, MAX_DEPTH};
use rfsel_core::selectors::{BorutaParams, Correction, RfAceParams, RfeParams, RrfParams};
use rfsel_core::{ForestMeasure, ForestParams, ImportanceSource, Mtry, SignalModel, SyntheticSpec};
use serde::{Deserialize, Serialize};

use crate::data::{CsvOptions, LabelColumn};
use crate::error::CliError;

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; every random stream of the run derives from it.
    pub seed: u64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_alpha")]
    pub scs_alpha: f64,
    #[serde(default = "default_alpha")]
    pub comparison_alpha: f64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    pub dataset: DatasetSource,
    #[serde(default)]
    pub validation: ForestSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<GridPreset>,
    #[serde(default)]
    pub methods: Vec<MethodSpec>,
}

fn default_replicates() -> usize {
    DEFAULT_REPLICATES
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

fn default_output() -> PathBuf {
    PathBuf::from("rfsel-out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum DatasetSource {
    Csv {
        path: PathBuf,
        #[serde(default)]
        label: LabelColumn,
        #[serde(default = "default_delimiter")]
        delimiter: char,
    },
    Synthetic(SyntheticConfig),
}

fn default_delimiter() -> char {
    ','
}

impl DatasetSource {
    pub fn csv_options(&self) -> Result<Option<(PathBuf, CsvOptions)>, CliError> {
        match self {
            DatasetSource::Csv { path, label, delimiter } => {
                if !delimiter.is_ascii() {
                    return Err(config_err(format!("delimiter `{delimiter}` is not a single ASCII character")));
                }
                Ok(Some((path.clone(), CsvOptions { label: label.clone(), delimiter: *delimiter as u8 })))
            }
            DatasetSource::Synthetic(_) => Ok(None),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignalModelSpec {
    LinearThreshold,
    XorPairs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    pub n_objects: usize,
    pub n_relevant: usize,
    #[serde(default)]
    pub n_redundant: usize,
    #[serde(default)]
    pub n_noise: usize,
    #[serde(default = "default_classes")]
    pub n_classes: usize,
    #[serde(default = "default_model")]
    pub model: SignalModelSpec,
    #[serde(default = "default_noise_scale")]
    pub noise_scale: f64,
    pub seed: u64,
}

fn default_classes() -> usize {
    2
}

fn default_model() -> SignalModelSpec {
    SignalModelSpec::LinearThreshold
}

fn default_noise_scale() -> f64 {
    0.5
}

impl SyntheticConfig {
    pub fn to_spec(&self) -> SyntheticSpec {
        SyntheticSpec {
            n_objects: self.n_objects,
            n_relevant: self.n_relevant,
            n_redundant: self.n_redundant,
            n_noise: self.n_noise,
            n_classes: self.n_classes,
            model: match self.model {
                SignalModelSpec::LinearThreshold => SignalModel::LinearThreshold,
                SignalModelSpec::XorPairs => SignalModel::XorPairs,
            },
            noise_scale: self.noise_scale,
            seed: self.seed,
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MtryKeyword {
    Sqrt,
    All,
}

/// `"sqrt"`, `"all"` or a fixed count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MtrySpec {
    Count(usize),
    Keyword(MtryKeyword),
}

impl MtrySpec {
    fn to_mtry(self) -> Mtry {
        match self {
            MtrySpec::Count(n) => Mtry::Fixed(n),
            MtrySpec::Keyword(MtryKeyword::Sqrt) => Mtry::Sqrt,
            MtrySpec::Keyword(MtryKeyword::All) => Mtry::All,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForestSpec {
    #[serde(default = "default_trees")]
    pub n_trees: usize,
    #[serde(default = "default_mtry")]
    pub mtry: MtrySpec,
    #[serde(default = "default_min_node")]
    pub min_node: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_depth: Option<usize>,
}

fn default_trees() -> usize {
    500
}

fn default_mtry() -> MtrySpec {
    MtrySpec::Keyword(MtryKeyword::Sqrt)
}

fn default_mtry_all() -> MtrySpec {
    MtrySpec::Keyword(MtryKeyword::All)
}

fn default_min_node() -> usize {
    1
}

impl Default for ForestSpec {
    fn default() -> Self {
        ForestSpec { n_trees: default_trees(), mtry: default_mtry(), min_node: 1, max_depth: None }
    }
}

impl ForestSpec {
    pub fn to_params(&self) -> Result<ForestParams, CliError> {
        if self.n_trees == 0 {
            return Err(config_err("n_trees must be positive"));
        }
        if self.min_node == 0 {
            return Err(config_err("min_node must be positive"));
        }
        if self.mtry == MtrySpec::Count(0) {
            return Err(config_err("mtry must be positive"));
        }
        Ok(ForestParams {
            n_trees: self.n_trees,
            mtry: self.mtry.to_mtry(),
            min_node: self.min_node,
            max_depth: self.max_depth,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureSpec {
    Gini,
    Raw,
    Normalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleSpec {
    Log,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AveragingSpec {
    UsingFerns,
    AllFerns,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ImportanceSpec {
    Ferns {
        depth: usize,
        #[serde(default = "default_ferns")]
        n_ferns: usize,
        #[serde(default = "default_scale")]
        scale: ScaleSpec,
        #[serde(default = "default_averaging")]
        averaging: AveragingSpec,
    },
    Forest {
        measure: MeasureSpec,
        #[serde(default = "default_trees")]
        n_trees: usize,
        #[serde(default = "default_mtry")]
        mtry: MtrySpec,
        #[serde(default = "default_min_node")]
        min_node: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_depth: Option<usize>,
    },
}

fn default_ferns() -> usize {
    1000
}

fn default_scale() -> ScaleSpec {
    ScaleSpec::Log
}

fn default_averaging() -> AveragingSpec {
    AveragingSpec::UsingFerns
}

impl ImportanceSpec {
    pub fn ferns(depth: usize, n_ferns: usize) -> Self {
        ImportanceSpec::Ferns { depth, n_ferns, scale: default_scale(), averaging: default_averaging() }
    }

    pub fn forest(measure: MeasureSpec, n_trees: usize) -> Self {
        ImportanceSpec::Forest { measure, n_trees, mtry: default_mtry(), min_node: 1, max_depth: None }
    }

    fn label(&self) -> String {
        match self {
            ImportanceSpec::Ferns { depth, .. } => format!("Ferns D{depth}"),
            ImportanceSpec::Forest { measure, .. } => match measure {
                MeasureSpec::Gini => "RF Gini".into(),
                MeasureSpec::Raw => "RF Raw".into(),
                MeasureSpec::Normalized => "RF Norm".into(),
            },
        }
    }

    pub fn to_source(&self) -> Result<ImportanceSource, CliError> {
        Ok(match *self {
            ImportanceSpec::Ferns { depth, n_ferns, scale, averaging } => {
                if !(1..=MAX_DEPTH).contains(&depth) {
                    return Err(config_err(format!("fern depth {depth} not in 1..={MAX_DEPTH}")));
                }
                if n_ferns == 0 {
                    return Err(config_err("n_ferns must be positive"));
                }
                ImportanceSource::Ferns(FernsParams {
                    depth,
                    n_ferns,
                    scale: match scale {
                        ScaleSpec::Log => ProbScale::Log,
                        ScaleSpec::Linear => ProbScale::Linear,
                    },
                    averaging: match averaging {
                        AveragingSpec::UsingFerns => FernAveraging::UsingFerns,
                        AveragingSpec::AllFerns => FernAveraging::AllFerns,
                    },
                })
            }
            ImportanceSpec::Forest { measure, n_trees, mtry, min_node, max_depth } => ImportanceSource::Forest {
                measure: match measure {
                    MeasureSpec::Gini => ForestMeasure::Gini,
                    MeasureSpec::Raw => ForestMeasure::Raw,
                    MeasureSpec::Normalized => ForestMeasure::Normalized,
                },
                params: ForestSpec { n_trees, mtry, min_node, max_depth }.to_params()?,
            },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrectionSpec {
    Holm,
    Bonferroni,
    None,
}

/// One selection method. `name` defaults to a label derived from the kind
/// and importance source, e.g. `Boruta/Ferns D5`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MethodSpec {
    Boruta {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        importance: ImportanceSpec,
        #[serde(default = "default_alpha")]
        alpha: f64,
        #[serde(default = "default_max_iter")]
        max_iter: usize,
        #[serde(default = "default_correction")]
        correction: CorrectionSpec,
    },
    RfAce {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        importance: ImportanceSpec,
        #[serde(default = "default_rface_iter")]
        n_iter: usize,
        #[serde(default = "default_rface_alpha")]
        alpha: f64,
    },
    Rfe {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        importance: ImportanceSpec,
        #[serde(default)]
        assess: ForestSpec,
        #[serde(default = "default_assess_boots")]
        assess_boots: usize,
    },
    Rrf {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        #[serde(default = "default_lambda")]
        lambda: f64,
        #[serde(default = "default_rrf_forest")]
        forest: ForestSpec,
    },
    AllFeatures {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
    },
}

fn default_max_iter() -> usize {
    100
}

fn default_correction() -> CorrectionSpec {
    CorrectionSpec::Holm
}

fn default_rface_iter() -> usize {
    20
}

fn default_rface_alpha() -> f64 {
    0.05
}

fn default_assess_boots() -> usize {
    10
}

fn default_lambda() -> f64 {
    0.8
}

fn default_rrf_forest() -> ForestSpec {
    ForestSpec { mtry: default_mtry_all(), ..ForestSpec::default() }
}

fn check_alpha(alpha: f64, what: &str) -> Result<(), CliError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(config_err(format!("{what} {alpha} not in (0, 1)")))
    }
}

impl MethodSpec {
    pub fn boruta(importance: ImportanceSpec) -> Self {
        MethodSpec::Boruta {
            name: None,
            importance,
            alpha: DEFAULT_ALPHA,
            max_iter: default_max_iter(),
            correction: default_correction(),
        }
    }

    pub fn rfe(importance: ImportanceSpec, assess_trees: usize) -> Self {
        MethodSpec::Rfe {
            name: None,
            importance,
            assess: ForestSpec { n_trees: assess_trees, ..ForestSpec::default() },
            assess_boots: default_assess_boots(),
        }
    }

    pub fn rrf() -> Self {
        MethodSpec::Rrf { name: None, lambda: default_lambda(), forest: default_rrf_forest() }
    }

    pub fn name(&self) -> String {
        let (given, default) = match self {
            MethodSpec::Boruta { name, importance, .. } => (name, format!("Boruta/{}", importance.label())),
            MethodSpec::RfAce { name, .. } => (name, "RF-ACE".to_string()),
            MethodSpec::Rfe { name, importance, .. } => (name, format!("RFE/{}", importance.label())),
            MethodSpec::Rrf { name, .. } => (name, "RRF".to_string()),
            MethodSpec::AllFeatures { name } => (name, "All features".to_string()),
        };
        given.clone().unwrap_or(default)
    }

    pub fn to_method(&self) -> Result<MethodConfig, CliError> {
        let name = self.name();
        let selector = match self {
            MethodSpec::Boruta { importance, alpha, max_iter, correction, .. } => {
                check_alpha(*alpha, "boruta alpha")?;
                if *max_iter == 0 {
                    return Err(config_err("max_iter must be positive"));
                }
                SelectorConfig::Boruta {
                    source: importance.to_source()?,
                    params: BorutaParams {
                        alpha: *alpha,
                        max_iter: *max_iter,
                        correction: match correction {
                            CorrectionSpec::Holm => Correction::Holm,
                            CorrectionSpec::Bonferroni => Correction::Bonferroni,
                            CorrectionSpec::None => Correction::None,
                        },
                    },
                }
            }
            MethodSpec::RfAce { importance, n_iter, alpha, .. } => {
                check_alpha(*alpha, "rf-ace alpha")?;
                if *n_iter < 2 {
                    return Err(config_err(format!("rf-ace n_iter must be at least 2, got {n_iter}")));
                }
                SelectorConfig::RfAce {
                    source: importance.to_source()?,
                    params: RfAceParams { n_iter: *n_iter, alpha: *alpha },
                }
            }
            MethodSpec::Rfe { importance, assess, assess_boots, .. } => {
                if *assess_boots == 0 {
                    return Err(config_err("assess_boots must be positive"));
                }
                SelectorConfig::Rfe {
                    source: importance.to_source()?,
                    params: RfeParams { assess: assess.to_params()?, assess_boots: *assess_boots },
                }
            }
            MethodSpec::Rrf { lambda, forest, .. } => {
                if !(*lambda > 0.0 && *lambda <= 1.0) {
                    return Err(config_err(format!("rrf lambda {lambda} not in (0, 1]")));
                }
                SelectorConfig::Rrf(RrfParams { lambda: *lambda, forest: forest.to_params()? })
            }
            MethodSpec::AllFeatures { .. } => SelectorConfig::AllFeatures,
        };
        Ok(MethodConfig { name, selector })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PresetKind {
    /// Boruta and RFE with ferns depths 1 to 7 and the three forest
    /// measures, plus RF-ACE and RRF: 22 methods.
    FullGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridPreset {
    pub kind: PresetKind,
    #[serde(default = "default_trees")]
    pub n_trees: usize,
    #[serde(default = "default_ferns")]
    pub n_ferns: usize,
}

impl GridPreset {
    pub fn methods(&self) -> Vec<MethodSpec> {
        let PresetKind::FullGrid = self.kind;
        let mut sources: Vec<ImportanceSpec> = (1..=7).map(|d| ImportanceSpec::ferns(d, self.n_ferns)).collect();
        sources.extend(
            [MeasureSpec::Gini, MeasureSpec::Raw, MeasureSpec::Normalized]
                .map(|m| ImportanceSpec::forest(m, self.n_trees)),
        );
        let mut methods: Vec<MethodSpec> = sources.iter().map(|s| MethodSpec::boruta(*s)).collect();
        methods.extend(sources.iter().map(|s| MethodSpec::rfe(*s, self.n_trees)));
        methods.push(MethodSpec::RfAce {
            name: None,
            importance: ImportanceSpec::forest(MeasureSpec::Gini, self.n_trees),
            n_iter: default_rface_iter(),
            alpha: default_rface_alpha(),
        });
        methods.push(MethodSpec::Rrf {
            name: None,
            lambda: default_lambda(),
            forest: ForestSpec { n_trees: self.n_trees, ..default_rrf_forest() },
        });
        methods
    }
}

impl RunConfig {
    /// Reads a TOML config, or the `config` entry of a run manifest when
    /// the file ends in `.json`.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        let parsed = if path.extension().is_some_and(|e| e == "json") {
            let mut value: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
            let inner = value.get_mut("config").map(serde_json::Value::take).unwrap_or(value);
            serde_json::from_value(inner).map_err(|e| config_err(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))?
        };
        Ok(parsed)
    }

    /// Method list: preset methods first, then the explicit ones.
    pub fn method_specs(&self) -> Vec<MethodSpec> {
        let mut all = self.preset.map(|p| p.methods()).unwrap_or_default();
        all.extend(self.methods.iter().cloned());
        all
    }

    /// Checks every field and builds the core method configurations.
    pub fn validate(&self) -> Result<Vec<MethodConfig>, CliError> {
        if self.replicates < 2 {
            return Err(config_err(format!("replicates must be at least 2, got {}", self.replicates)));
        }
        check_alpha(self.scs_alpha, "scs_alpha")?;
        check_alpha(self.comparison_alpha, "comparison_alpha")?;
        if self.workers == Some(0) {
            return Err(config_err("workers must be positive"));
        }
        self.validation.to_params()?;
        self.dataset.csv_options()?;
        let specs = self.method_specs();
        if specs.is_empty() {
            return Err(config_err("no methods configured"));
        }
        let methods = specs.iter().map(MethodSpec::to_method).collect::<Result<Vec<_>, _>>()?;
        let mut seen = BTreeSet::new();
        for m in &methods {
            if !seen.insert(m.name.as_str()) {
                return Err(config_err(format!("duplicate method name `{}`", m.name)));
            }
        }
        Ok(methods)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"
seed = 42
replicates = 5
output = "out"

[dataset.synthetic]
n_objects = 60
n_relevant = 5
n_redundant = 20
n_noise = 475
seed = 1

[validation]
n_trees = 200

[[methods]]
kind = "boruta"
importance = { kind = "ferns", depth = 5, n_ferns = 2000 }

[[methods]]
kind = "rrf"
name = "RRF 0.5"
lambda = 0.5
"#;

    #[test]
    fn parses_example() {
        let cfg: RunConfig = toml::from_str(EXAMPLE).unwrap();
        let methods = cfg.validate().unwrap();
        assert_eq!(methods.len(), 2);
        assert_eq!(methods[0].name, "Boruta/Ferns D5");
        assert_eq!(methods[1].name, "RRF 0.5");
        assert_eq!(cfg.scs_alpha, 0.01);
        match &methods[1].selector {
            SelectorConfig::Rrf(p) => assert_eq!(p.forest.mtry, Mtry::All),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn json_roundtrip() {
        let cfg: RunConfig = toml::from_str(EXAMPLE).unwrap();
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&json).unwrap(), cfg);
    }

    #[test]
    fn full_grid_has_22_rows() {
        let preset = GridPreset { kind: PresetKind::FullGrid, n_trees: 500, n_ferns: 1000 };
        let names: Vec<String> = preset.methods().iter().map(MethodSpec::name).collect();
        assert_eq!(names.len(), 22);
        assert_eq!(names[0], "Boruta/Ferns D1");
        assert_eq!(names[9], "Boruta/RF Norm");
        assert_eq!(names[10], "RFE/Ferns D1");
        assert_eq!(&names[20..], &["RF-ACE".to_string(), "RRF".to_string()]);
    }

    #[test]
    fn invalid_configs() {
        let bad = [
            EXAMPLE.replace("seed = 42\n", ""),
            EXAMPLE.replace("replicates = 5", "replicates = 1"),
            EXAMPLE.replace("depth = 5", "depth = 0"),
            EXAMPLE.replace("lambda = 0.5", "lambda = 1.5"),
            EXAMPLE.replace("n_trees = 200", "n_tree = 200"),
            EXAMPLE.replace("name = \"RRF 0.5\"", "name = \"Boruta/Ferns D5\""),
        ];
        for text in bad {
            let res = toml::from_str::<RunConfig>(&text).map_err(|e| config_err(e.to_string())).and_then(|c| c.validate());
            let err = res.unwrap_err();
            assert_eq!(err.exit_code(), 2, "{err}");
        }
        let mut cfg: RunConfig = toml::from_str(EXAMPLE).unwrap();
        cfg.methods.clear();
        assert!(cfg.validate().is_err());
    }
}

//! End-to-end workflow: ingestion, scenario-specific knot selection,
//! class-wise model fitting, eigencount search, and evaluation.
//!
//! Everything derives from one root seed through labeled child seeds, so a
//! run is reproducible across processes and thread counts.

use crate::classify::{fit_class, ClassModel, Classifier, ClassifierOutput};
use crate::ddk::{self, DdkParams, KnotSelection, ReferenceCurve, StopRule};
use crate::error::{FdaError, Result};
use crate::idx;
use crate::imaging::{self, GrayImage};
use crate::metrics::{self, MetricsReport};
use crate::search::{self, SearchOutcome, SearchParams};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use splinet::{BasisType, DiscreteCurveSet, KnotVector};
use std::path::{Path, PathBuf};

pub const FASHION_CLASS_NAMES: [&str; 10] = [
    "T-shirt", "Trouser", "Pullover", "Dress", "Coat", "Sandal", "Shirt", "Sneaker", "Bag", "Boot",
];

/// The three preparation scenarios compared by the workflow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scenario {
    /// Hilbert-curve flattening with data-driven knots.
    S1,
    /// By-row flattening with data-driven knots.
    S2,
    /// By-row flattening with equidistant knots.
    S3,
}

impl Scenario {
    pub fn flattener_name(self) -> &'static str {
        match self {
            Scenario::S1 => "hilbert",
            Scenario::S2 | Scenario::S3 => "by-row",
        }
    }

    pub fn knot_strategy_name(self) -> &'static str {
        match self {
            Scenario::S1 | Scenario::S2 => "data-driven",
            Scenario::S3 => "equidistant",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name.to_ascii_uppercase().as_str() {
            "S1" => Ok(Scenario::S1),
            "S2" => Ok(Scenario::S2),
            "S3" => Ok(Scenario::S3),
            _ => Err(FdaError::Config(format!("unknown scenario {name:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct DataConfig {
    pub train_images: Option<PathBuf>,
    pub train_labels: Option<PathBuf>,
    pub test_images: Option<PathBuf>,
    pub test_labels: Option<PathBuf>,
    /// Single-file alternative: `label, pixels...` rows.
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitConfig {
    pub train_per_class: usize,
    pub val_per_class: usize,
    pub test_per_class: usize,
    /// Full-scale mode: fraction of the test file that becomes validation.
    pub val_fraction: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            train_per_class: 1000,
            val_per_class: 200,
            test_per_class: 200,
            val_fraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DdkConfig {
    pub r_max: Option<usize>,
    /// Monte-Carlo replications for the reference curve.
    pub reference_replications: usize,
    /// Per-step bootstrap fraction of curves.
    pub rho: f64,
    pub stop: StopRule,
}

impl Default for DdkConfig {
    fn default() -> Self {
        Self {
            r_max: None,
            reference_replications: 100,
            rho: 1.0,
            stop: StopRule::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub patience: usize,
    pub restarts: usize,
    /// Use the 10%-exclusion scheme on the training set instead of the
    /// held-out validation split.
    pub train_exclusion: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            patience: 5,
            restarts: 3,
            train_exclusion: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub data: DataConfig,
    pub scenario: Scenario,
    /// Spline smoothness order.
    pub order: usize,
    /// Internal knot count shared by every class in scenario mode.
    pub knot_budget: usize,
    /// Orthonormal basis used for the class spaces.
    pub basis: String,
    pub ddk: Option<DdkConfig>,
    pub search: SearchConfig,
    pub splits: SplitConfig,
    pub seed: u64,
    pub cache_dir: Option<PathBuf>,
    pub full_scale: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            data: DataConfig::default(),
            scenario: Scenario::S1,
            order: 3,
            knot_budget: 100,
            basis: "splinet".to_string(),
            ddk: None,
            search: SearchConfig::default(),
            splits: SplitConfig::default(),
            seed: 7,
            cache_dir: None,
            full_scale: false,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.order == 0 || self.order > 7 {
            return Err(FdaError::Config(format!(
                "spline order {} out of range 1..=7",
                self.order
            )));
        }
        if self.knot_budget < self.order + 2 {
            return Err(FdaError::Config(format!(
                "knot budget {} too small for order {}",
                self.knot_budget, self.order
            )));
        }
        if self.scenario == Scenario::S3 && self.ddk.is_some() {
            return Err(FdaError::Config(
                "scenario S3 uses equidistant knots; remove the [ddk] section".to_string(),
            ));
        }
        let basis = BasisType::from_name(&self.basis)
            .ok_or_else(|| FdaError::Config(format!("unknown basis {:?}", self.basis)))?;
        if basis == BasisType::Bspline {
            return Err(FdaError::Config(
                "class models need an orthonormal basis (splinet, gram_schmidt, two_sided)"
                    .to_string(),
            ));
        }
        if self.splits.val_fraction <= 0.0 || self.splits.val_fraction >= 1.0 {
            return Err(FdaError::Config(
                "val_fraction must lie strictly between 0 and 1".to_string(),
            ));
        }
        if let Some(ddk) = &self.ddk {
            if !(0.0 < ddk.rho && ddk.rho <= 1.0) {
                return Err(FdaError::Config("rho must lie in (0, 1]".to_string()));
            }
        }
        Ok(())
    }

    pub fn basis_type(&self) -> BasisType {
        BasisType::from_name(&self.basis).unwrap_or(BasisType::Splinet)
    }

    pub fn ddk_config(&self) -> DdkConfig {
        self.ddk.clone().unwrap_or_default()
    }

    /// Hash of the canonical JSON form; identifies every artifact.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex_digest(json.as_bytes())
    }

    pub fn cache_dir(&self) -> Option<PathBuf> {
        self.cache_dir
            .clone()
            .or_else(|| std::env::var_os("SPLINET_CACHE_DIR").map(PathBuf::from))
    }
}

fn hex_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Child seed derived from the root by a labeled hash; documented scheme:
/// first eight little-endian bytes of `sha256(root_le || ":" || label)`.
pub fn derive_seed(root: u64, label: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(root.to_le_bytes());
    hasher.update(b":");
    hasher.update(label.as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("slice is 8 bytes"))
}

/// Curves of one split, grouped per class, sharing one argument grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledCurves {
    pub arguments: Vec<f64>,
    pub per_class: Vec<DMatrix<f64>>,
}

impl LabeledCurves {
    pub fn classes(&self) -> usize {
        self.per_class.len()
    }

    pub fn class_set(&self, class: usize) -> Result<DiscreteCurveSet> {
        if self.per_class[class].nrows() == 0 {
            return Err(FdaError::EmptyClass(class));
        }
        Ok(DiscreteCurveSet::from_matrix(
            self.arguments.clone(),
            self.per_class[class].clone(),
        )?)
    }

    /// Flattens all classes into one set plus the target labels.
    pub fn pooled(&self) -> Result<(DiscreteCurveSet, Vec<usize>)> {
        let total: usize = self.per_class.iter().map(|m| m.nrows()).sum();
        if total == 0 {
            return Err(FdaError::Config("empty split".to_string()));
        }
        let t = self.arguments.len();
        let mut values = DMatrix::zeros(total, t);
        let mut labels = Vec::with_capacity(total);
        let mut row = 0;
        for (c, m) in self.per_class.iter().enumerate() {
            for r in 0..m.nrows() {
                for j in 0..t {
                    values[(row, j)] = m[(r, j)];
                }
                labels.push(c);
                row += 1;
            }
        }
        Ok((
            DiscreteCurveSet::from_matrix(self.arguments.clone(), values)?,
            labels,
        ))
    }

    pub fn total(&self) -> usize {
        self.per_class.iter().map(|m| m.nrows()).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestedData {
    pub train: LabeledCurves,
    pub val: LabeledCurves,
    pub test: LabeledCurves,
}

/// Reads, pads, flattens and splits the image data per the configuration.
pub fn ingest(config: &PipelineConfig) -> Result<IngestedData> {
    config.validate()?;
    let flattener = imaging::flattener(config.scenario.flattener_name())?;
    let classes = 10usize;

    let flatten_all = |images: &[GrayImage]| -> Result<Vec<Vec<f64>>> {
        images
            .par_iter()
            .map(|img| flattener.flatten(&imaging::pad_to_pow2(img)))
            .collect()
    };

    let group = |curves: Vec<Vec<f64>>, labels: &[usize]| -> Result<Vec<Vec<Vec<f64>>>> {
        let mut grouped: Vec<Vec<Vec<f64>>> = vec![Vec::new(); classes];
        for (curve, &label) in curves.into_iter().zip(labels) {
            if label >= classes {
                return Err(FdaError::LabelOutOfRange { label, classes });
            }
            grouped[label].push(curve);
        }
        Ok(grouped)
    };

    let (train_groups, holdout_groups) = match (&config.data.csv, &config.data.train_images) {
        (Some(csv), _) => {
            let (images, labels) = idx::read_csv_images(csv)?;
            let curves = flatten_all(&images)?;
            (group(curves, &labels)?, None)
        }
        (None, Some(train_images)) => {
            let train_labels = config.data.train_labels.as_ref().ok_or_else(|| {
                FdaError::Config("train_labels path is required with train_images".to_string())
            })?;
            let (images, labels) = idx::read_idx_pair(train_images, train_labels)?;
            let train = group(flatten_all(&images)?, &labels)?;
            let holdout = match (&config.data.test_images, &config.data.test_labels) {
                (Some(ti), Some(tl)) => {
                    let (images, labels) = idx::read_idx_pair(ti, tl)?;
                    Some(group(flatten_all(&images)?, &labels)?)
                }
                _ => None,
            };
            (train, holdout)
        }
        _ => {
            return Err(FdaError::Config(
                "either csv or train_images/train_labels must be given".to_string(),
            ))
        }
    };

    let grid_len = train_groups
        .iter()
        .find_map(|g| g.first().map(Vec::len))
        .ok_or_else(|| FdaError::Config("no training curves".to_string()))?;
    let arguments = imaging::unit_grid(grid_len);

    let shuffled = |groups: &[Vec<Vec<f64>>], tag: &str| -> Vec<Vec<usize>> {
        groups
            .iter()
            .enumerate()
            .map(|(c, g)| {
                let mut idx: Vec<usize> = (0..g.len()).collect();
                let mut rng =
                    ChaCha12Rng::seed_from_u64(derive_seed(config.seed, &format!("{tag}:{c}")));
                for i in (1..idx.len()).rev() {
                    let j = rng.gen_range(0..=i);
                    idx.swap(i, j);
                }
                idx
            })
            .collect()
    };

    let take = |groups: &[Vec<Vec<f64>>],
                order: &[Vec<usize>],
                range: &dyn Fn(usize) -> (usize, usize)|
     -> Result<LabeledCurves> {
        let mut per_class = Vec::with_capacity(classes);
        for c in 0..classes {
            let (start, end) = range(order[c].len());
            let count = end.saturating_sub(start);
            let mut m = DMatrix::zeros(count, grid_len);
            for (r, &src) in order[c][start..end].iter().enumerate() {
                for (jj, &v) in groups[c][src].iter().enumerate() {
                    m[(r, jj)] = v;
                }
            }
            per_class.push(m);
        }
        Ok(LabeledCurves {
            arguments: arguments.clone(),
            per_class,
        })
    };

    let train_order = shuffled(&train_groups, "split-train");
    match holdout_groups {
        Some(holdout) => {
            let holdout_order = shuffled(&holdout, "split-holdout");
            let (train, val, test) = if config.full_scale {
                let train = take(&train_groups, &train_order, &|n| (0, n))?;
                let val = take(&holdout, &holdout_order, &|n| {
                    (0, (n as f64 * config.splits.val_fraction).round() as usize)
                })?;
                let test = take(&holdout, &holdout_order, &|n| {
                    ((n as f64 * config.splits.val_fraction).round() as usize, n)
                })?;
                (train, val, test)
            } else {
                let s = &config.splits;
                let train = take(&train_groups, &train_order, &|n| {
                    (0, s.train_per_class.min(n))
                })?;
                let val = take(&holdout, &holdout_order, &|n| (0, s.val_per_class.min(n)))?;
                let test = take(&holdout, &holdout_order, &|n| {
                    (
                        s.val_per_class.min(n),
                        (s.val_per_class + s.test_per_class).min(n),
                    )
                })?;
                (train, val, test)
            };
            check_nonempty(&train, &val, &test)?;
            Ok(IngestedData { train, val, test })
        }
        None => {
            // single source: stratified three-way split
            let s = &config.splits;
            let (train, val, test) = if config.full_scale {
                let train = take(&train_groups, &train_order, &|n| (0, n * 2 / 4))?;
                let val = take(&train_groups, &train_order, &|n| (n * 2 / 4, n * 3 / 4))?;
                let test = take(&train_groups, &train_order, &|n| (n * 3 / 4, n))?;
                (train, val, test)
            } else {
                let train = take(&train_groups, &train_order, &|n| {
                    (0, s.train_per_class.min(n))
                })?;
                let val = take(&train_groups, &train_order, &|n| {
                    (
                        s.train_per_class.min(n),
                        (s.train_per_class + s.val_per_class).min(n),
                    )
                })?;
                let test = take(&train_groups, &train_order, &|n| {
                    (
                        (s.train_per_class + s.val_per_class).min(n),
                        (s.train_per_class + s.val_per_class + s.test_per_class).min(n),
                    )
                })?;
                (train, val, test)
            };
            check_nonempty(&train, &val, &test)?;
            Ok(IngestedData { train, val, test })
        }
    }
}

fn check_nonempty(train: &LabeledCurves, val: &LabeledCurves, test: &LabeledCurves) -> Result<()> {
    for (name, split) in [("train", train), ("validation", val), ("test", test)] {
        if split.total() == 0 {
            return Err(FdaError::Config(format!("{name} split is empty")));
        }
    }
    for (c, m) in train.per_class.iter().enumerate() {
        if m.nrows() < 2 {
            return Err(FdaError::TooFewCurves(c));
        }
    }
    Ok(())
}

/// A named strategy producing the per-class knot vectors.
pub trait KnotStrategy: Send + Sync {
    fn name(&self) -> &'static str;

    /// Mean-stage and centered-stage selections for one class; the centered
    /// knots contain the mean knots and hit the internal budget exactly.
    fn select(
        &self,
        class: usize,
        mean_curve: &DiscreteCurveSet,
        class_curves: &DiscreteCurveSet,
        budget: usize,
        config: &PipelineConfig,
        reference: Option<&ReferenceCurve>,
    ) -> Result<(KnotSelection, KnotSelection)>;

    /// Whether this strategy needs the white-noise reference curve.
    fn needs_reference(&self) -> bool {
        false
    }
}

/// DDK: mean stage under the stopping rule (capped by the budget), centered
/// stage greedily topped up to the exact budget.
pub struct DataDrivenKnots;

impl KnotStrategy for DataDrivenKnots {
    fn name(&self) -> &'static str {
        "data-driven"
    }

    fn needs_reference(&self) -> bool {
        true
    }

    fn select(
        &self,
        class: usize,
        mean_curve: &DiscreteCurveSet,
        class_curves: &DiscreteCurveSet,
        budget: usize,
        config: &PipelineConfig,
        reference: Option<&ReferenceCurve>,
    ) -> Result<(KnotSelection, KnotSelection)> {
        let reference = reference.ok_or_else(|| {
            FdaError::Config("data-driven knots need a reference curve".to_string())
        })?;
        let ddk = config.ddk_config();
        let grid_len = mean_curve.curve(0).arguments.len();
        let endpoints = {
            let c = mean_curve.curve(0);
            vec![c.arguments[0], c.arguments[c.arguments.len() - 1]]
        };
        let mean_params = DdkParams {
            r_max: ddk
                .r_max
                .unwrap_or_else(|| ddk::default_r_max(grid_len))
                .min(budget),
            rho: 1.0,
            seed: derive_seed(config.seed, &format!("ddk-mean:{class}")),
            stop: ddk.stop,
        };
        // r_max is capped by the budget, so the mean stage can never
        // select more knots than the centered stage is allowed to keep
        let mean_sel = ddk::select_knots(mean_curve, &endpoints, reference, &mean_params)?;
        let centered_params = DdkParams {
            r_max: usize::MAX,
            rho: ddk.rho,
            seed: derive_seed(config.seed, &format!("ddk-centered:{class}")),
            stop: ddk.stop,
        };
        let centered_data = center_curves(class_curves, mean_curve)?;
        let centered_sel = ddk::select_knots_budget(
            &centered_data,
            mean_sel.knots.values(),
            budget,
            &centered_params,
        )?;
        Ok((mean_sel, centered_sel))
    }
}

/// Subtracts the class mean from every curve; the second selection stage
/// runs on these residuals.
pub fn center_curves(
    curves: &DiscreteCurveSet,
    mean_curve: &DiscreteCurveSet,
) -> Result<DiscreteCurveSet> {
    let mean = mean_curve.curve(0);
    match curves {
        DiscreteCurveSet::CommonGrid { arguments, values } => {
            let mut centered = values.clone();
            for r in 0..centered.nrows() {
                for t in 0..centered.ncols() {
                    centered[(r, t)] -= mean.values[t];
                }
            }
            Ok(DiscreteCurveSet::from_matrix(arguments.clone(), centered)?)
        }
        DiscreteCurveSet::PerCurve(_) => Err(FdaError::Config(
            "centering needs curves on a common grid".to_string(),
        )),
    }
}

/// Equidistant knots: the budget spread uniformly over the range; both
/// stages coincide.
pub struct EquidistantKnots;

impl KnotStrategy for EquidistantKnots {
    fn name(&self) -> &'static str {
        "equidistant"
    }

    fn select(
        &self,
        _class: usize,
        mean_curve: &DiscreteCurveSet,
        _class_curves: &DiscreteCurveSet,
        budget: usize,
        _config: &PipelineConfig,
        _reference: Option<&ReferenceCurve>,
    ) -> Result<(KnotSelection, KnotSelection)> {
        let c = mean_curve.curve(0);
        let (lo, hi) = (c.arguments[0], c.arguments[c.arguments.len() - 1]);
        let knots = KnotVector::equidistant(lo, hi, budget + 2)?;
        let selection = KnotSelection {
            knots,
            history: Vec::new(),
            n_selected: 0,
            start_amse: 0.0,
        };
        Ok((selection.clone(), selection))
    }
}

static KNOT_STRATEGIES: &[&dyn KnotStrategy] = &[&DataDrivenKnots, &EquidistantKnots];

pub fn knot_strategy(name: &str) -> Result<&'static dyn KnotStrategy> {
    KNOT_STRATEGIES
        .iter()
        .copied()
        .find(|s| s.name() == name)
        .ok_or_else(|| FdaError::Config(format!("unknown knot strategy {name:?}")))
}

/// Loads the reference curve from the cache or computes and stores it.
pub fn reference_with_cache(
    cache_dir: Option<&Path>,
    grid_len: usize,
    r_max: usize,
    replications: usize,
    seed: u64,
) -> Result<ReferenceCurve> {
    let key = format!("reference-{grid_len}-{r_max}-{replications}-{seed}.json");
    if let Some(dir) = cache_dir {
        let path = dir.join(&key);
        if let Ok(text) = std::fs::read_to_string(&path) {
            if let Ok(reference) = serde_json::from_str::<ReferenceCurve>(&text) {
                if reference.grid_len == grid_len && reference.replications == replications {
                    return Ok(reference);
                }
            }
        }
    }
    let reference = ddk::reference_curve(grid_len, r_max, replications, seed)?;
    if let Some(dir) = cache_dir {
        let bytes = serde_json::to_vec(&reference).expect("reference serializes");
        crate::io::write_atomic(&dir.join(&key), &bytes)?;
    }
    Ok(reference)
}

/// Per-class fitted artifacts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassArtifacts {
    pub label: usize,
    pub mean_selection: KnotSelection,
    pub centered_selection: KnotSelection,
    pub model: ClassModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub root_seed: u64,
    pub config_hash: String,
    pub created_unix: u64,
    pub grid_len: usize,
    pub train_total: usize,
    pub val_total: usize,
    pub test_total: usize,
    /// Pixel intensities are scaled to [0, 1] before projection.
    pub normalized_unit_interval: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunArtifacts {
    pub config: PipelineConfig,
    pub config_hash: String,
    pub classes: Vec<ClassArtifacts>,
    pub search: SearchOutcome,
    pub validation_report: MetricsReport,
    pub test_report: MetricsReport,
    /// Mean own-class weights on the test split, at the optimal counts.
    pub relative_distances: Vec<f64>,
    pub provenance: Provenance,
}

impl RunArtifacts {
    pub fn save(&self, dir: &Path) -> Result<()> {
        let bytes = serde_json::to_vec_pretty(self).expect("artifacts serialize");
        crate::io::write_atomic(&dir.join("artifacts.json"), &bytes)
    }

    pub fn load(dir: &Path) -> Result<RunArtifacts> {
        let path = dir.join("artifacts.json");
        let name = path.display().to_string();
        let text =
            std::fs::read_to_string(&path).map_err(|_| FdaError::MissingArtifact(name.clone()))?;
        serde_json::from_str(&text).map_err(|e| FdaError::MalformedData {
            path: name,
            what: e.to_string(),
        })
    }
}

/// Knot selections for every class, with caching keyed by the relevant
/// configuration slice.
pub fn select_all_knots(
    config: &PipelineConfig,
    train: &LabeledCurves,
) -> Result<Vec<(KnotSelection, KnotSelection)>> {
    let strategy = knot_strategy(config.scenario.knot_strategy_name())?;
    let budget = config.knot_budget;
    let grid_len = train.arguments.len();

    let cache_key = {
        #[derive(Serialize)]
        struct KnotStageKey<'a> {
            scenario: Scenario,
            budget: usize,
            ddk: DdkConfig,
            splits: &'a SplitConfig,
            seed: u64,
            data: &'a DataConfig,
            full_scale: bool,
        }
        let key = KnotStageKey {
            scenario: config.scenario,
            budget,
            ddk: config.ddk_config(),
            splits: &config.splits,
            seed: config.seed,
            data: &config.data,
            full_scale: config.full_scale,
        };
        hex_digest(
            serde_json::to_string(&key)
                .expect("key serializes")
                .as_bytes(),
        )
    };
    let cache_path = config
        .cache_dir()
        .map(|d| d.join(format!("knots-{cache_key}.json")));
    if let Some(path) = &cache_path {
        if let Ok(text) = std::fs::read_to_string(path) {
            if let Ok(cached) = serde_json::from_str::<Vec<(KnotSelection, KnotSelection)>>(&text) {
                if cached.len() == train.classes() {
                    return Ok(cached);
                }
            }
        }
    }

    let reference = if strategy.needs_reference() {
        let ddk = config.ddk_config();
        let r_max = ddk.r_max.unwrap_or_else(|| ddk::default_r_max(grid_len));
        Some(reference_with_cache(
            config.cache_dir().as_deref(),
            grid_len,
            r_max,
            ddk.reference_replications,
            derive_seed(config.seed, "ddk-reference"),
        )?)
    } else {
        None
    };

    let selections: Vec<(KnotSelection, KnotSelection)> = (0..train.classes())
        .into_par_iter()
        .map(|c| {
            let class_curves = train.class_set(c)?;
            let (args, mean) = class_curves.mean_curve()?;
            let mean_curve = DiscreteCurveSet::common_grid(args, vec![mean])?;
            strategy
                .select(
                    c,
                    &mean_curve,
                    &class_curves,
                    budget,
                    config,
                    reference.as_ref(),
                )
                .map_err(|e| e.with_context(format!("knot selection for class {c}")))
        })
        .collect::<Result<Vec<_>>>()?;

    if let Some(path) = &cache_path {
        let bytes = serde_json::to_vec(&selections).expect("selections serialize");
        crate::io::write_atomic(path, &bytes)?;
    }
    Ok(selections)
}

/// Fits every class model from the training split and the knot selections.
pub fn fit_all_classes(
    config: &PipelineConfig,
    train: &LabeledCurves,
    selections: &[(KnotSelection, KnotSelection)],
) -> Result<Vec<ClassArtifacts>> {
    let basis_type = config.basis_type();
    (0..train.classes())
        .into_par_iter()
        .map(|c| {
            let class_curves = train.class_set(c)?;
            let (mean_sel, centered_sel) = &selections[c];
            let model = fit_class(
                c,
                &class_curves,
                &mean_sel.knots,
                &centered_sel.knots,
                config.order,
                basis_type,
            )
            .map_err(|e| e.with_context(format!("fitting class {c}")))?;
            Ok(ClassArtifacts {
                label: c,
                mean_selection: mean_sel.clone(),
                centered_selection: centered_sel.clone(),
                model,
            })
        })
        .collect()
}

/// Runs the whole scenario: knots, models, eigencount search on validation,
/// and the final test evaluation.
pub fn run_scenario(config: &PipelineConfig) -> Result<RunArtifacts> {
    config.validate()?;
    let data = ingest(config).map_err(|e| e.with_context("ingest"))?;
    run_scenario_on(config, &data)
}

/// Like [`run_scenario`], on already ingested data.
pub fn run_scenario_on(config: &PipelineConfig, data: &IngestedData) -> Result<RunArtifacts> {
    config.validate()?;
    let selections =
        select_all_knots(config, &data.train).map_err(|e| e.with_context("knot selection"))?;
    let classes = fit_all_classes(config, &data.train, &selections)
        .map_err(|e| e.with_context("training"))?;
    let models: Vec<ClassModel> = classes.iter().map(|c| c.model.clone()).collect();
    let classifier = Classifier::new(&models)?;

    let params = SearchParams {
        patience: config.search.patience,
        restarts: config.search.restarts,
        seed: derive_seed(config.seed, "search"),
        max_per_class: None,
    };
    // eigencount search on the held-out validation split, or on a seeded 10%
    // exclusion of the training data with models refitted on the rest
    let outcome = if config.search.train_exclusion {
        let (kept, excluded_set, excluded_targets) = split_exclusion(config, &data.train)?;
        let reduced = fit_all_classes(config, &kept, &selections)
            .map_err(|e| e.with_context("training on the 90% subset"))?;
        let reduced_models: Vec<ClassModel> = reduced.into_iter().map(|c| c.model).collect();
        let reduced_classifier = Classifier::new(&reduced_models)?;
        let tables = reduced_classifier
            .tables(&excluded_set)
            .map_err(|e| e.with_context("exclusion projection"))?;
        search::search_eigen_counts(&tables, &excluded_targets, &params)?
    } else {
        let (set, targets) = data.val.pooled()?;
        let tables = classifier
            .tables(&set)
            .map_err(|e| e.with_context("validation projection"))?;
        search::search_eigen_counts(&tables, &targets, &params)?
    };

    let (validation_report, _) = report_with_outputs(&classifier, &data.val, &outcome.n_opt)
        .map_err(|e| e.with_context("validation evaluation"))?;
    let (test_report, test_outputs) = report_with_outputs(&classifier, &data.test, &outcome.n_opt)
        .map_err(|e| e.with_context("test evaluation"))?;

    // mean own-class weights per class on the test split
    let mut relative_distances = Vec::with_capacity(models.len());
    {
        let mut offset = 0usize;
        for (c, m) in data.test.per_class.iter().enumerate() {
            let n = m.nrows();
            let mut acc = 0.0;
            for out in &test_outputs[offset..offset + n] {
                acc += out.weights[c];
            }
            relative_distances.push(if n > 0 { acc / n as f64 } else { 0.0 });
            offset += n;
        }
    }

    let provenance = Provenance {
        root_seed: config.seed,
        config_hash: config.hash(),
        created_unix: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        grid_len: data.train.arguments.len(),
        train_total: data.train.total(),
        val_total: data.val.total(),
        test_total: data.test.total(),
        normalized_unit_interval: true,
    };
    Ok(RunArtifacts {
        config_hash: config.hash(),
        config: config.clone(),
        classes,
        search: outcome,
        validation_report,
        test_report,
        relative_distances,
        provenance,
    })
}

fn report_with_outputs(
    classifier: &Classifier<'_>,
    split: &LabeledCurves,
    counts: &[usize],
) -> Result<(MetricsReport, Vec<ClassifierOutput>)> {
    let (set, targets) = split.pooled()?;
    let outputs = classifier.classify_set(&set, counts)?;
    let predictions: Vec<usize> = outputs.iter().map(|o| o.label).collect();
    let weights: Vec<Vec<f64>> = outputs.iter().map(|o| o.weights.clone()).collect();
    let report = metrics::evaluate_with_weights(&predictions, &targets, &weights, split.classes())?;
    Ok((report, outputs))
}

/// The 10%-exclusion scheme: per class, a seeded tenth of the training
/// curves becomes the search set and the rest stays for refitting.
fn split_exclusion(
    config: &PipelineConfig,
    train: &LabeledCurves,
) -> Result<(LabeledCurves, DiscreteCurveSet, Vec<usize>)> {
    let t = train.arguments.len();
    let mut kept_classes = Vec::with_capacity(train.classes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut targets = Vec::new();
    for (c, m) in train.per_class.iter().enumerate() {
        let n = m.nrows();
        let take = (n / 10).max(1);
        let mut idx: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(config.seed, &format!("exclude:{c}")));
        for i in (1..idx.len()).rev() {
            let j = rng.gen_range(0..=i);
            idx.swap(i, j);
        }
        for &r in &idx[..take] {
            rows.push((0..t).map(|j| m[(r, j)]).collect());
            targets.push(c);
        }
        let kept_idx = &idx[take..];
        let mut kept = DMatrix::zeros(kept_idx.len(), t);
        for (r, &src) in kept_idx.iter().enumerate() {
            for j in 0..t {
                kept[(r, j)] = m[(src, j)];
            }
        }
        kept_classes.push(kept);
    }
    Ok((
        LabeledCurves {
            arguments: train.arguments.clone(),
            per_class: kept_classes,
        },
        DiscreteCurveSet::common_grid(train.arguments.clone(), rows)?,
        targets,
    ))
}

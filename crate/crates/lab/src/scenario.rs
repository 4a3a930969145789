//! Scenario files: the JSON input of every job.
//!
//! Tagged choices are written as single-key objects, `{"diagonal": {...}}`,
//! so that parse errors can point at the exact offending value.

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::error::LabError;

/// Identifier of the scenario format accepted by this build.
pub const SCHEMA_ID: &str = "ehrling-scenario/v1";

/// Format tag; only one version exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
pub enum SchemaVersion {
    /// First version.
    #[serde(rename = "ehrling-scenario/v1")]
    V1,
}

/// Job to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Job {
    /// Very weak norm enclosure of `params.u`.
    Norm,
    /// `||Tu||_Y <= eps ||u||_X + C ||u||_2` over an eps grid.
    Certify,
    /// `|u|_Phi <= eps ||u||_X + C ||Tu||_Y` for injective `T`.
    Reverse,
    /// `||theta u||_Y <= eps ||u||_X + C ||tau theta u||_Z`.
    ThreeSpace,
    /// Search for a witness against every `C <= c_max`.
    Falsify,
    /// Convergence mode of a sequence.
    Classify,
    /// Terms of the very-weak-but-not-weak counterexample.
    Counterexample,
}

impl Job {
    /// Kebab-case name.
    pub fn name(self) -> &'static str {
        match self {
            Job::Norm => "norm",
            Job::Certify => "certify",
            Job::Reverse => "reverse",
            Job::ThreeSpace => "three-space",
            Job::Falsify => "falsify",
            Job::Classify => "classify",
            Job::Counterexample => "counterexample",
        }
    }
}

/// A complete job description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Must be `"ehrling-scenario/v1"`.
    pub schema: SchemaVersion,
    /// Stem of the output file names; defaults to the job name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Job to run.
    pub job: Job,
    /// Strong norm of the domain `X` (and default codomain norm).
    #[serde(default)]
    pub space: SpaceConfig,
    /// Truncation dimension for operators and families that need one
    /// (16 when absent).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    /// Dual family defining the very weak norm.
    #[serde(default)]
    pub family: FamilyConfig,
    /// Operator `T` (or `theta` for three-space jobs).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator: Option<OperatorConfig>,
    /// Operator `tau` of three-space jobs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<OperatorConfig>,
    /// Gauge multiplied by `C` in certify jobs.
    #[serde(default)]
    pub second: SecondConfig,
    /// Sequence of classify jobs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequence: Option<SequenceConfig>,
    /// Job parameters.
    #[serde(default)]
    pub params: Params,
    /// Verification points.
    #[serde(default)]
    pub sampler: SamplerConfig,
    /// Inner maximization budget.
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    /// Output files.
    #[serde(default)]
    pub output: OutputConfig,
}

/// `p` of an `l^p` norm: a number `>= 1` or `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(untagged)]
pub enum Exponent {
    /// Finite exponent.
    Finite(f64),
    /// Max norm.
    Infinite(Infinity),
}

/// The string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
pub enum Infinity {
    /// `p = inf`.
    #[serde(rename = "inf")]
    Inf,
}

impl Exponent {
    /// Numeric value.
    pub fn value(self) -> f64 {
        match self {
            Exponent::Finite(p) => p,
            Exponent::Infinite(_) => f64::INFINITY,
        }
    }
}

/// A strong norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum SpaceConfig {
    /// `l^p`.
    Lp {
        /// Exponent.
        p: Exponent,
    },
    /// Weighted `l^p`; the weight count fixes the dimension.
    WeightedLp {
        /// Exponent.
        p: Exponent,
        /// Strictly positive weights.
        weights: Vec<f64>,
    },
    /// Discrete `H^1_0` norm with grid spacing `h`.
    SobolevH1 {
        /// Grid spacing.
        h: f64,
    },
}

impl Default for SpaceConfig {
    fn default() -> Self {
        SpaceConfig::Lp {
            p: Exponent::Finite(2.0),
        }
    }
}

/// Enumeration mode of the dual family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "kebab-case")]
pub enum ModeConfig {
    /// Normalized coordinate functionals.
    Coordinate,
    /// Dyadic-rational enumeration dense in the dual ball.
    #[default]
    DenseRational,
}

fn default_tolerance() -> f64 {
    1e-15
}

/// Dual family over the scenario's strong norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    /// Enumeration mode.
    #[serde(default)]
    pub mode: ModeConfig,
    /// Tail tolerance of very weak norm enclosures.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Truncation dimension; defaults to the scenario or job dimension.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
}

impl Default for FamilyConfig {
    fn default() -> Self {
        Self {
            mode: ModeConfig::default(),
            tolerance: default_tolerance(),
            dim: None,
        }
    }
}

/// A linear operator. Norms default to the scenario space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum OperatorConfig {
    /// `diag(lambda)`.
    Diagonal {
        /// Diagonal entries.
        lambda: Vec<f64>,
        /// Domain norm.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        domain: Option<SpaceConfig>,
        /// Codomain norm.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        codomain: Option<SpaceConfig>,
    },
    /// `diag(first, first*ratio, first*ratio^2, ...)` of the scenario dimension.
    GeometricDiagonal {
        /// First entry.
        first: f64,
        /// Ratio between consecutive entries.
        ratio: f64,
        /// Domain norm.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        domain: Option<SpaceConfig>,
        /// Codomain norm.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        codomain: Option<SpaceConfig>,
    },
    /// Identity of the scenario dimension.
    Identity {
        /// Domain norm.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        domain: Option<SpaceConfig>,
        /// Codomain norm.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        codomain: Option<SpaceConfig>,
    },
    /// Zero operator on `l^2` of the scenario dimension.
    Zero {},
    /// Right shift `X_d -> X_{d+1}` between `l^p` norms.
    Shift {
        /// Domain norm.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        domain: Option<SpaceConfig>,
        /// Codomain norm.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        codomain: Option<SpaceConfig>,
    },
    /// Matrix given by its rows.
    Dense {
        /// Row-major entries; one inner list per codomain coordinate.
        rows: Vec<Vec<f64>>,
        /// Domain norm.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        domain: Option<SpaceConfig>,
        /// Codomain norm.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        codomain: Option<SpaceConfig>,
    },
    /// `h * K` for kernel samples `K`, inline or from a headerless CSV file
    /// (path relative to the scenario file).
    Kernel {
        /// Quadrature weight.
        h: f64,
        /// Inline samples, one list per row.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        samples: Option<Vec<Vec<f64>>>,
        /// CSV file with the samples.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        csv: Option<String>,
        /// Domain norm.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        domain: Option<SpaceConfig>,
        /// Codomain norm.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        codomain: Option<SpaceConfig>,
    },
    /// Discrete embedding `h^1_0 -> l^2_h` on the scenario dimension.
    SobolevEmbedding {
        /// Grid spacing.
        h: f64,
    },
    /// `outer ∘ inner`.
    Compose {
        /// Applied second.
        outer: Box<OperatorConfig>,
        /// Applied first.
        inner: Box<OperatorConfig>,
    },
}

/// Gauge multiplied by `C`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum SecondConfig {
    /// Very weak norm of the scenario family.
    #[default]
    VeryWeak,
    /// A strong norm on the domain.
    Norm(SpaceConfig),
}

/// Dimension of the `n`-th counterexample term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScheduleConfig {
    /// `d_n = N_n + n + margin`.
    Margin(usize),
    /// Same dimension for every term.
    Fixed(usize),
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig::Margin(4)
    }
}

/// Sequence of a classify job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum SequenceConfig {
    /// `e_1, ..., e_horizon` in dimension `dim`.
    Basis {
        /// Ambient dimension.
        dim: usize,
        /// Number of terms; defaults to `dim`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        horizon: Option<usize>,
    },
    /// `target + rate^n e_1`.
    StronglyConvergent {
        /// Limit.
        target: Vec<f64>,
        /// Rate in `(0, 1)`.
        rate: f64,
        /// Number of terms.
        horizon: usize,
    },
    /// Counterexample terms over the scenario family.
    Counterexample {
        /// Number of terms.
        horizon: usize,
        /// Dimension schedule.
        #[serde(default)]
        schedule: ScheduleConfig,
    },
    /// Explicit terms, tested against `limit` (zero when absent).
    Custom {
        /// Terms.
        terms: Vec<Vec<f64>>,
        /// Candidate limit.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        limit: Option<Vec<f64>>,
    },
}

fn default_c_max() -> f64 {
    1e4
}

fn default_classify_tol() -> f64 {
    1e-3
}

/// Job parameters; each job reads the ones it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// `eps` values. Defaults: `[1, 1/2, 1/4, 1/8, 1/16]` for certify and
    /// three-space, `[1/4, 1/10]` for reverse, `[1/2]` for falsify.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<Vec<f64>>,
    /// Largest constant a falsification must beat.
    #[serde(default = "default_c_max")]
    pub c_max: f64,
    /// Number of basis vectors a falsification scans (all by default).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis_depth: Option<usize>,
    /// Classification tolerance.
    #[serde(default = "default_classify_tol")]
    pub tol: f64,
    /// Counterexample indices; defaults to `[1, 2, 4, 8, 16]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<Vec<usize>>,
    /// Counterexample dimension schedule.
    #[serde(default)]
    pub schedule: ScheduleConfig,
    /// Element measured by norm jobs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<Vec<f64>>,
    /// Probe functionals of classify jobs.
    #[serde(default)]
    pub probes: ProbeConfig,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            eps: None,
            c_max: default_c_max(),
            basis_depth: None,
            tol: default_classify_tol(),
            n: None,
            schedule: ScheduleConfig::default(),
            u: None,
            probes: ProbeConfig::default(),
        }
    }
}

/// Probe functionals: a prefix of the family plus seeded random ones.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    /// Leading family members.
    #[serde(default = "default_probe_count")]
    pub enumerated: usize,
    /// Random functionals with decaying coefficients.
    #[serde(default = "default_probe_count")]
    pub random: usize,
    /// Seed of the random probes.
    #[serde(default)]
    pub seed: u64,
}

fn default_probe_count() -> usize {
    32
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            enumerated: default_probe_count(),
            random: default_probe_count(),
            seed: 0,
        }
    }
}

fn default_samples() -> usize {
    10_000
}

fn yes() -> bool {
    true
}

/// Verification points.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    /// Random points in the unit ball of `X`.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Seed of the random points.
    #[serde(default)]
    pub seed: u64,
    /// Include every basis vector.
    #[serde(default = "yes")]
    pub basis: bool,
    /// Include optimizer maximizers of the residual.
    #[serde(default = "yes")]
    pub adversarial: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            samples: default_samples(),
            seed: 0,
            basis: true,
            adversarial: true,
        }
    }
}

/// Optimizer budget; defaults match the library.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    /// Random starts.
    #[serde(default = "d_starts")]
    pub starts: usize,
    /// Ascent iterations per start.
    #[serde(default = "d_iterations")]
    pub iterations: usize,
    /// Best candidates refined by compass search.
    #[serde(default = "d_polish")]
    pub polish: usize,
    /// Seed of the starts.
    #[serde(default)]
    pub seed: u64,
    /// Relative width at which the modulus bisection stops.
    #[serde(default = "d_width")]
    pub bisection_rel_width: f64,
    /// Smallest modulus tried, relative to the search bound.
    #[serde(default = "d_floor")]
    pub delta_floor_rel: f64,
    /// Shrink rounds of the modulus safety check.
    #[serde(default = "d_rounds")]
    pub safety_rounds: usize,
}

fn d_starts() -> usize {
    64
}
fn d_iterations() -> usize {
    200
}
fn d_polish() -> usize {
    4
}
fn d_width() -> f64 {
    1e-3
}
fn d_floor() -> f64 {
    1e-9
}
fn d_rounds() -> usize {
    20
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            starts: d_starts(),
            iterations: d_iterations(),
            polish: d_polish(),
            seed: 0,
            bisection_rel_width: d_width(),
            delta_floor_rel: d_floor(),
            safety_rounds: d_rounds(),
        }
    }
}

/// Where reports go.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Output directory, relative to the working directory; overridden by
    /// `--output-dir`.
    #[serde(default = "default_dir")]
    pub dir: String,
    /// Write CSV tables next to the report.
    #[serde(default = "yes")]
    pub tables: bool,
}

fn default_dir() -> String {
    String::from(".")
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            tables: true,
        }
    }
}

impl Scenario {
    /// Parses a scenario; errors carry the JSON pointer of the bad value.
    pub fn from_json(text: &str) -> Result<Self, LabError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| LabError::Schema {
            pointer: json_pointer(e.path()),
            message: e.inner().to_string(),
        })
    }

    /// Output file stem.
    pub fn stem(&self) -> &str {
        self.name.as_deref().unwrap_or(self.job.name())
    }
}

/// JSON schema of [`Scenario`].
pub fn json_schema() -> String {
    let schema = schemars::schema_for!(Scenario);
    let mut text = serde_json::to_string_pretty(&schema).expect("schema serializes");
    text.push('\n');
    text
}

fn json_pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    out
}

//! Experiment configuration files (TOML).
//!
//! Top-level keys describe the manifold, the kernel and how point sets are
//! produced; one table per subcommand holds the rest. Unknown keys are
//! rejected so typos surface as configuration errors.

use std::path::{Path, PathBuf};

use greenlab_core::kernels::KernelKind;
use greenlab_core::transport::SinkhornParams;
use greenlab_core::{KernelSpec, Manifold, OptimizerParams, Solver};
use serde::{Deserialize, Serialize};

use crate::calibration;
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Space {
    Torus,
    Sphere,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Generator {
    Random,
    /// `grid_torus(m, d)`; n must be a perfect d-th power.
    Grid,
    /// Uniform in a small geodesic ball of radius `cluster_radius`.
    Cluster,
    /// Local minimizer of the configured kernel, started from a random sample.
    Minimizer,
    Kronecker,
    VanDerCorput,
    /// The `points` array of the config (or `--points`).
    Inline,
}

impl Generator {
    pub fn as_str(self) -> &'static str {
        match self {
            Generator::Random => "random",
            Generator::Grid => "grid",
            Generator::Cluster => "cluster",
            Generator::Minimizer => "minimizer",
            Generator::Kronecker => "kronecker",
            Generator::VanDerCorput => "van-der-corput",
            Generator::Inline => "inline",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Auto {
    Auto,
}

/// Heat time: a number, or `"auto"` for t = n^{−2/d}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HeatTime {
    Fixed(f64),
    Named(Auto),
}

impl Default for HeatTime {
    fn default() -> Self {
        HeatTime::Named(Auto::Auto)
    }
}

impl HeatTime {
    pub fn resolve(self, n: usize, dim: usize) -> f64 {
        match self {
            HeatTime::Fixed(t) => t,
            HeatTime::Named(Auto::Auto) => (n.max(1) as f64).powf(-2.0 / dim as f64),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransportConfig {
    /// `"network-flow"` or `"sinkhorn"`.
    pub solver: String,
    pub sinkhorn: SinkhornParams,
    /// Use the exact circle algorithm on T¹ instead of a discrete solver.
    pub exact_circle: bool,
}

impl Default for TransportConfig {
    fn default() -> Self {
        TransportConfig {
            solver: "network-flow".into(),
            sinkhorn: SinkhornParams::default(),
            exact_circle: true,
        }
    }
}

impl TransportConfig {
    pub fn solver(&self) -> Result<Solver, CliError> {
        match self.solver.as_str() {
            "network-flow" => Ok(Solver::NetworkFlow),
            "sinkhorn" => {
                self.sinkhorn.validate()?;
                Ok(Solver::Sinkhorn(self.sinkhorn.clone()))
            }
            other => Err(CliError::Config(format!(
                "transport.solver must be `network-flow` or `sinkhorn`, got `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    /// Defaults to random, grid, minimizer and cluster on tori and to
    /// random, minimizer and cluster on spheres.
    pub generators: Option<Vec<Generator>>,
    /// Pass constant C for lhs/rhs; defaults to the frozen calibration.
    pub constant: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalingMode {
    /// Pair energy against n.
    Corollary,
    /// Renormalized Coulomb energy of sphere configurations against n.
    Wagner,
    /// W₂(δ₀, e^{tΔ}δ₀) on T¹ against t.
    Lemma1,
    /// W₂ of the configurations against n.
    Rate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingConfig {
    pub mode: ScalingMode,
    /// Heat times for lemma1 mode.
    pub times: Vec<f64>,
    /// Also compute W₂ in corollary and wagner modes.
    pub w2: bool,
    /// When set, a fitted slope outside expected ± tolerance fails the run.
    pub expected_slope: Option<f64>,
    pub slope_tolerance: f64,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        ScalingConfig {
            mode: ScalingMode::Corollary,
            times: vec![1e-4, 3e-4, 1e-3, 3e-3, 1e-2],
            w2: false,
            expected_slope: None,
            slope_tolerance: 0.1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiaphonyConfig {
    /// Pass constant for W₂ ≤ C·F_N; defaults to the frozen calibration.
    pub constant: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub manifold: Space,
    pub dim: usize,
    /// Defaults: Green function on tori, truncated Legendre Green function on
    /// S², mean-zero Coulomb kernel on S^d with d ≥ 3.
    pub kernel: Option<KernelSpec>,
    pub generator: Generator,
    /// Point count for single-configuration commands.
    pub n: usize,
    /// Point counts for verify and scaling runs.
    pub n_list: Vec<usize>,
    pub seeds: Vec<u64>,
    pub points: Option<Vec<Vec<f64>>>,
    /// Read points from this CSV file instead (same as `--points`).
    pub points_file: Option<PathBuf>,
    pub cluster_radius: f64,
    /// Rotation number of the Kronecker generator.
    pub alpha: f64,
    /// Base of the van der Corput generator.
    pub base: u32,
    pub heat_time: HeatTime,
    /// Number of uniform quadrature nodes M standing in for dx.
    pub quadrature: usize,
    /// Fourier (torus) or degree (sphere) truncation for spectral norms.
    pub truncation: usize,
    /// Target tail bound for automatically truncated sums.
    pub tolerance: f64,
    /// Transport exponent p for the w2 command.
    pub p: u32,
    pub output: Option<PathBuf>,
    /// Where `minimize` writes the final configuration as CSV.
    pub save_points: Option<PathBuf>,
    pub optimizer: OptimizerParams,
    pub transport: TransportConfig,
    pub verify: VerifyConfig,
    pub scaling: ScalingConfig,
    pub diaphony: DiaphonyConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            manifold: Space::Torus,
            dim: 1,
            kernel: None,
            generator: Generator::Random,
            n: 16,
            n_list: Vec::new(),
            seeds: vec![0],
            points: None,
            points_file: None,
            cluster_radius: 0.01,
            alpha: (5f64.sqrt() - 1.0) / 2.0,
            base: 2,
            heat_time: HeatTime::default(),
            quadrature: 4096,
            truncation: 64,
            tolerance: 1e-9,
            p: 2,
            output: None,
            save_points: None,
            optimizer: OptimizerParams::default(),
            transport: TransportConfig::default(),
            verify: VerifyConfig::default(),
            scaling: ScalingConfig::default(),
            diaphony: DiaphonyConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let mut cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.resolve()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        // Relative paths inside the file are relative to the file.
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.points_file, &mut cfg.output, &mut cfg.save_points]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn manifold(&self) -> Manifold {
        match self.manifold {
            Space::Torus => Manifold::torus(self.dim),
            Space::Sphere => Manifold::sphere(self.dim),
        }
    }

    pub fn kernel(&self) -> KernelSpec {
        self.kernel.expect("resolved configs carry a kernel")
    }

    /// Fills in defaults that depend on other keys and checks combinations.
    pub fn resolve(&mut self) -> Result<(), CliError> {
        if self.dim == 0 {
            return Err(CliError::Config("dim must be at least 1".into()));
        }
        let manifold = self.manifold();
        let kernel = self.kernel.get_or_insert_with(|| default_kernel(&manifold));
        kernel.validate(&manifold)?;
        self.optimizer.validate()?;
        self.transport.solver()?;
        if self.seeds.is_empty() {
            return Err(CliError::Config("seeds must not be empty".into()));
        }
        if let HeatTime::Fixed(t) = self.heat_time {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(CliError::Config(format!(
                    "heat_time must be >= 0 or \"auto\", got {t}"
                )));
            }
        }
        if !(self.cluster_radius > 0.0) {
            return Err(CliError::Config("cluster_radius must be positive".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(CliError::Config("tolerance must be positive".into()));
        }
        if self.p != 1 && self.p != 2 {
            return Err(CliError::Config(format!(
                "p must be 1 or 2, got {}",
                self.p
            )));
        }
        for c in [self.verify.constant, self.diaphony.constant]
            .into_iter()
            .flatten()
        {
            if !(c > 0.0) {
                return Err(CliError::Config("pass constants must be positive".into()));
            }
        }
        Ok(())
    }

    /// Constant for verify-t1/verify-t2, explicit or calibrated.
    pub fn verify_constant(&self) -> Result<f64, CliError> {
        if let Some(c) = self.verify.constant {
            return Ok(c);
        }
        calibration::verify_constant(self.manifold, self.dim).ok_or_else(|| {
            CliError::Config(format!(
                "no calibrated constant for {}; set verify.constant",
                self.manifold()
            ))
        })
    }

    pub fn diaphony_constant(&self) -> f64 {
        self.diaphony.constant.unwrap_or(calibration::DIAPHONY_W2)
    }
}

fn default_kernel(manifold: &Manifold) -> KernelSpec {
    let d = manifold.dim();
    if manifold.is_torus() {
        KernelSpec::green_torus(d)
    } else if d == 2 {
        KernelSpec::new(KernelKind::GreenSphere2 { truncation: 200 })
    } else {
        KernelSpec::mean_zero(KernelKind::CoulombSphere { dim: d })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_in_the_kernel() {
        let cfg = ExperimentConfig::from_toml("manifold = \"sphere\"\ndim = 3\n").unwrap();
        assert_eq!(
            cfg.kernel(),
            KernelSpec::mean_zero(KernelKind::CoulombSphere { dim: 3 })
        );
        assert_eq!(cfg.heat_time, HeatTime::Named(Auto::Auto));
    }

    #[test]
    fn heat_time_accepts_numbers_and_auto() {
        let cfg = ExperimentConfig::from_toml("heat_time = 0.25\n").unwrap();
        assert_eq!(cfg.heat_time, HeatTime::Fixed(0.25));
        assert!((HeatTime::default().resolve(64, 3) - 1.0 / 16.0).abs() < 1e-15);
        assert!(ExperimentConfig::from_toml("heat_time = \"soon\"\n").is_err());
    }

    #[test]
    fn rejects_unknown_keys_and_bad_combinations() {
        assert!(ExperimentConfig::from_toml("manifold = \"torus\"\nsize = 3\n").is_err());
        let coulomb_on_torus =
            "manifold = \"torus\"\ndim = 3\n[kernel]\nkind = \"coulomb-sphere\"\ndim = 3\n";
        assert!(matches!(
            ExperimentConfig::from_toml(coulomb_on_torus),
            Err(CliError::Core(_))
        ));
        // Keys that land in the wrong table are caught too.
        assert!(ExperimentConfig::from_toml("[optimizer]\nseeds = [1, 2]\n").is_err());
        assert!(ExperimentConfig::from_toml("[transport.sinkhorn]\nepsilon = 0.1\n").is_err());
        let bad_solver = "[transport]\nsolver = \"simplex\"\n";
        assert!(matches!(
            ExperimentConfig::from_toml(bad_solver),
            Err(CliError::Config(_))
        ));
    }

    #[test]
    fn kernel_tables_parse() {
        let text = "manifold = \"sphere\"\ndim = 2\n[kernel]\nkind = \"riesz\"\nexponent = 1.0\nnormalization = \"mean-zero\"\n";
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(
            cfg.kernel(),
            KernelSpec::mean_zero(KernelKind::Riesz { exponent: 1.0 })
        );
    }
}

//! Experiment configuration: JSON schema, validation and the check catalog.
//!
//! Parsing is strict: unknown keys anywhere are rejected, and every schema
//! error carries the line and column in the original file.

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use sha2::{Digest, Sha256};

use crate::error::{DunklError, Result};
use crate::harness::{
    check_auxiliary_bounds, check_garding, check_heat_gaussian_bound, check_two_point_bound,
    kernel_identity_check, run_classical_limit, run_decay, run_decay_envelope, run_doubling, run_e_kernel,
    run_eta_derivatives, run_heat_oracle, run_inequality_chain, run_kernel_export, run_operator_algebra,
    run_plancherel, run_translation, AuxiliaryParams, ClassicalLimitParams, DecayParams, DoublingParams,
    EKernelParams, EnvelopeParams, EtaDerivativeParams, GardingParams, HeatBoundParams, HeatOracleParams,
    IdentityParams, InequalityChainParams, KernelExportParams, OperatorAlgebraParams, PlancherelParams,
    TranslationParams, TwoPointParams, VerificationReport,
};
use crate::measure::{GridSettings, WeightedContext};
use crate::root_system::RootSystemSpec;
use crate::semigroup::KernelSpec;

/// Root system of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SystemConfig {
    /// R = {±√2}, multiplicity k.
    RankOne { k: f64 },
    /// ℤ₂^N with one multiplicity per axis.
    Product { k: Vec<f64> },
    /// I₂(m) with a single multiplicity.
    Dihedral { m: usize, k: f64 },
    /// Roots and one multiplicity per root, taken as given.
    Explicit {
        dimension: usize,
        roots: Vec<Vec<f64>>,
        multiplicity: Vec<f64>,
    },
}

impl SystemConfig {
    pub fn to_spec(&self) -> RootSystemSpec {
        match self {
            SystemConfig::RankOne { k } => RootSystemSpec::rank_one(*k),
            SystemConfig::Product { k } => RootSystemSpec::product(k),
            SystemConfig::Dihedral { m, k } => RootSystemSpec::dihedral(*m, *k),
            SystemConfig::Explicit {
                dimension,
                roots,
                multiplicity,
            } => RootSystemSpec::new(*dimension, roots.clone(), multiplicity.clone()),
        }
    }
}

/// Overrides of the default quadrature grid.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub half_width: Option<f64>,
    pub nodes_per_axis: Option<usize>,
    /// Relative refinement tolerance of the checked integrals.
    pub tolerance: Option<f64>,
}

impl GridConfig {
    pub fn settings(&self, dimension: usize) -> GridSettings {
        let mut s = GridSettings::defaults_for(dimension);
        if let Some(h) = self.half_width {
            s.half_width = h;
        }
        if let Some(n) = self.nodes_per_axis {
            s.nodes_per_axis = n;
        }
        if let Some(t) = self.tolerance {
            s.tolerance = t;
        }
        s
    }

    /// Fields set here win over `base`.
    fn over(&self, base: &GridConfig) -> GridConfig {
        GridConfig {
            half_width: self.half_width.or(base.half_width),
            nodes_per_axis: self.nodes_per_axis.or(base.nodes_per_axis),
            tolerance: self.tolerance.or(base.tolerance),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    name: Option<String>,
    system: SystemConfig,
    #[serde(default)]
    grid: GridConfig,
    #[serde(default)]
    kernel: Option<KernelSpec>,
    #[serde(default)]
    output_dir: Option<String>,
    #[serde(default)]
    workers: Option<usize>,
    #[serde(default)]
    record_timing: bool,
    checks: Vec<RawCheck>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCheck {
    check: String,
    #[serde(default)]
    label: Option<String>,
    #[serde(default)]
    system: Option<SystemConfig>,
    #[serde(default)]
    grid: Option<GridConfig>,
    #[serde(default)]
    params: Option<Box<RawValue>>,
}

/// A check with typed parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum CheckSpec {
    ClassicalLimit(ClassicalLimitParams),
    HeatOracle(HeatOracleParams),
    Plancherel(PlancherelParams),
    Decay(DecayParams),
    DecayEnvelope(EnvelopeParams),
    TwoPoint(TwoPointParams),
    HeatBound(HeatBoundParams),
    Auxiliary(AuxiliaryParams),
    Identity(IdentityParams),
    OperatorAlgebra(OperatorAlgebraParams),
    EKernel(EKernelParams),
    Garding(GardingParams),
    InequalityChain(InequalityChainParams),
    Translation(TranslationParams),
    Doubling(DoublingParams),
    EtaDerivatives(EtaDerivativeParams),
    KernelExport(KernelExportParams),
}

/// Catalog entry: check kind, the statement it tests, and its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub anchor: &'static str,
    pub required: &'static str,
}

impl CatalogEntry {
    /// Every parameter key the check accepts, from its serialized defaults.
    pub fn params(&self) -> Vec<String> {
        let sample = match self.name {
            "aux-bound" => Some(r#"{"kind": "e-bound"}"#),
            "kernel-identity" => Some(r#"{"kind": "mass"}"#),
            _ => None,
        };
        match CheckSpec::parse(self.name, sample).map(|s| s.params_json()) {
            Ok(serde_json::Value::Object(m)) => m.keys().cloned().collect(),
            _ => Vec::new(),
        }
    }
}

pub const CATALOG: &[CatalogEntry] = &[
    CatalogEntry {
        name: "classical-limit",
        anchor: "k ≡ 0: the Dunkl transform of e^{−‖x‖²/2} is e^{−‖ξ‖²/2}",
        required: "",
    },
    CatalogEntry {
        name: "heat-oracle",
        anchor: "ℓ = 1, ζ = {e_j}, ε = 0: q_t(x) = c_k^{-1}(2t)^{−𝐍/2} e^{−‖x‖²/4t}",
        required: "",
    },
    CatalogEntry {
        name: "plancherel",
        anchor: "‖𝓕f‖_{L²(dw)} = ‖f‖_{L²(dw)}",
        required: "",
    },
    CatalogEntry {
        name: "thm1-decay",
        anchor: "|q(x)| ≤ C exp(−c‖x‖^{2ℓ/(2ℓ−1)})",
        required: "",
    },
    CatalogEntry {
        name: "thm1-decay-envelope",
        anchor: "|q(x)| ≤ C exp(−c‖x‖^{2ℓ/(2ℓ−1)}) along the decreasing majorant of |q|",
        required: "",
    },
    CatalogEntry {
        name: "thm2-two-point",
        anchor: "|q(x,y)| ≤ C max{w(B(x,1)), w(B(y,1))}^{-1} exp(−c d(x,y)^{2ℓ/(2ℓ−1)})",
        required: "",
    },
    CatalogEntry {
        name: "heat-gaussian-bound",
        anchor: "h_t(x,y) ≤ C w(B(x,√t))^{-1} exp(−c d(x,y)²/t)",
        required: "",
    },
    CatalogEntry {
        name: "aux-bound",
        anchor: "|E(iξ,x)| ≤ 1; |E(iξ,x) − 1| ≤ C‖x‖‖ξ‖; ‖τ_x q_1^{(ε)} − q_1^{(ε)}‖_∞ ≤ C‖x‖; \
                 ‖τ_y(f∗φ)‖_{L¹(dw)} ≤ C (r₁(r₁+r₂))^{𝐍/2} ‖f‖_{L¹(dw)}; \
                 ∫|τ_x f(−y)| g(y) e^{c′d(x,y)^a} dw(y) < ∞",
        required: "kind",
    },
    CatalogEntry {
        name: "kernel-identity",
        anchor: "∫h_t(x,y) dw(y) = 1; q(x,y) = q(y,x); q_s ∗ q_t = q_{s+t}; \
                 q_t(x) = t^{−𝐍/2ℓ} q_1(t^{−1/2ℓ}x); q_t = q_t^{(ε)} ∗ h_{εt/2} ∗ h_{εt/2}",
        required: "kind",
    },
    CatalogEntry {
        name: "operator-algebra",
        anchor: "T_iT_j = T_jT_i; ∫T_ξf g dw = −∫f T_ξg dw; T_ξ(fg) = (T_ξf)g + f∂_ξg for radial g; \
                 T_ξ(f∘σ) = (T_{σξ}f)∘σ; Δ_k = Σ_j T_j²",
        required: "",
    },
    CatalogEntry {
        name: "e-kernel",
        anchor: "|E(iξ,x)| ≤ 1; |E(iξ,x) − 1| ≤ C‖x‖‖ξ‖; E(x,y) as a power series",
        required: "",
    },
    CatalogEntry {
        name: "garding",
        anchor: "−b_{s,ε}(f,f) + C s^{2ℓ}‖f‖²_{H_s} ≥ α‖f‖²_{V_{ℓ,s}} with α > 0 (Gårding inequality)",
        required: "",
    },
    CatalogEntry {
        name: "inequality-chain",
        anchor: "Σ_{|β|<ℓ}‖T^βf‖² ≤ δ Σ_j ‖T^ℓ_{ζ_j}f‖² + C_δ‖f‖²",
        required: "",
    },
    CatalogEntry {
        name: "translation",
        anchor: "τ_0 = id; supp τ_x f ⊂ {y : d(x,y) ≤ r} for radial f supported in B(0,r); \
                 ‖τ_x f‖_{L¹(dw)} ≤ ‖f‖_{L¹(dw)} for radial f ≥ 0; ‖τ_x q_1^{(ε)} − q_1^{(ε)}‖_∞ ≤ C‖x‖",
        required: "",
    },
    CatalogEntry {
        name: "doubling",
        anchor: "w(B(x,2r)) ≤ C w(B(x,r)); w(B(x,r)) ≍ r^N Π_α(|⟨α,x⟩| + r)^{k(α)}",
        required: "",
    },
    CatalogEntry {
        name: "eta-derivatives",
        anchor: "|∂^β η(x,s)| ≤ C_β s^{|β|} η(x,s)",
        required: "",
    },
    CatalogEntry {
        name: "kernel-export",
        anchor: "tabulated q_t(x,y) with error estimates",
        required: "",
    },
];

impl CheckSpec {
    pub fn name(&self) -> &'static str {
        match self {
            CheckSpec::ClassicalLimit(_) => "classical-limit",
            CheckSpec::HeatOracle(_) => "heat-oracle",
            CheckSpec::Plancherel(_) => "plancherel",
            CheckSpec::Decay(_) => "thm1-decay",
            CheckSpec::DecayEnvelope(_) => "thm1-decay-envelope",
            CheckSpec::TwoPoint(_) => "thm2-two-point",
            CheckSpec::HeatBound(_) => "heat-gaussian-bound",
            CheckSpec::Auxiliary(_) => "aux-bound",
            CheckSpec::Identity(_) => "kernel-identity",
            CheckSpec::OperatorAlgebra(_) => "operator-algebra",
            CheckSpec::EKernel(_) => "e-kernel",
            CheckSpec::Garding(_) => "garding",
            CheckSpec::InequalityChain(_) => "inequality-chain",
            CheckSpec::Translation(_) => "translation",
            CheckSpec::Doubling(_) => "doubling",
            CheckSpec::EtaDerivatives(_) => "eta-derivatives",
            CheckSpec::KernelExport(_) => "kernel-export",
        }
    }

    /// Parses `params` (JSON object text, or empty for defaults) for check `name`.
    pub fn parse(name: &str, params: Option<&str>) -> std::result::Result<CheckSpec, ParamError> {
        fn de<T: serde::de::DeserializeOwned>(
            text: Option<&str>,
            default: impl FnOnce() -> Option<T>,
        ) -> std::result::Result<T, ParamError> {
            match (text, default()) {
                (None, Some(d)) => Ok(d),
                (None, None) => Err(ParamError::Missing),
                (Some(t), _) => serde_json::from_str(t).map_err(ParamError::Json),
            }
        }
        Ok(match name {
            "classical-limit" => CheckSpec::ClassicalLimit(de(params, || Some(Default::default()))?),
            "heat-oracle" => CheckSpec::HeatOracle(de(params, || Some(Default::default()))?),
            "plancherel" => CheckSpec::Plancherel(de(params, || Some(Default::default()))?),
            "thm1-decay" => CheckSpec::Decay(de(params, || Some(Default::default()))?),
            "thm1-decay-envelope" => CheckSpec::DecayEnvelope(de(params, || Some(Default::default()))?),
            "thm2-two-point" => CheckSpec::TwoPoint(de(params, || Some(Default::default()))?),
            "heat-gaussian-bound" => CheckSpec::HeatBound(de(params, || Some(Default::default()))?),
            "aux-bound" => CheckSpec::Auxiliary(de(params, || None)?),
            "kernel-identity" => CheckSpec::Identity(de(params, || None)?),
            "operator-algebra" => CheckSpec::OperatorAlgebra(de(params, || Some(Default::default()))?),
            "e-kernel" => CheckSpec::EKernel(de(params, || Some(Default::default()))?),
            "garding" => CheckSpec::Garding(de(params, || Some(Default::default()))?),
            "inequality-chain" => CheckSpec::InequalityChain(de(params, || Some(Default::default()))?),
            "translation" => CheckSpec::Translation(de(params, || Some(Default::default()))?),
            "doubling" => CheckSpec::Doubling(de(params, || Some(Default::default()))?),
            "eta-derivatives" => CheckSpec::EtaDerivatives(de(params, || Some(Default::default()))?),
            "kernel-export" => CheckSpec::KernelExport(de(params, || Some(Default::default()))?),
            other => return Err(ParamError::UnknownCheck(other.to_string())),
        })
    }

    /// Parameters as JSON, defaults filled in.
    pub fn params_json(&self) -> serde_json::Value {
        let v = match self {
            CheckSpec::ClassicalLimit(p) => serde_json::to_value(p),
            CheckSpec::HeatOracle(p) => serde_json::to_value(p),
            CheckSpec::Plancherel(p) => serde_json::to_value(p),
            CheckSpec::Decay(p) => serde_json::to_value(p),
            CheckSpec::DecayEnvelope(p) => serde_json::to_value(p),
            CheckSpec::TwoPoint(p) => serde_json::to_value(p),
            CheckSpec::HeatBound(p) => serde_json::to_value(p),
            CheckSpec::Auxiliary(p) => serde_json::to_value(p),
            CheckSpec::Identity(p) => serde_json::to_value(p),
            CheckSpec::OperatorAlgebra(p) => serde_json::to_value(p),
            CheckSpec::EKernel(p) => serde_json::to_value(p),
            CheckSpec::Garding(p) => serde_json::to_value(p),
            CheckSpec::InequalityChain(p) => serde_json::to_value(p),
            CheckSpec::Translation(p) => serde_json::to_value(p),
            CheckSpec::Doubling(p) => serde_json::to_value(p),
            CheckSpec::EtaDerivatives(p) => serde_json::to_value(p),
            CheckSpec::KernelExport(p) => serde_json::to_value(p),
        };
        v.unwrap_or(serde_json::Value::Null)
    }

    fn kernel_slot(&mut self) -> Option<(&mut Option<KernelSpec>, &Option<u32>)> {
        match self {
            CheckSpec::Decay(p) => Some((&mut p.kernel, &p.ell)),
            CheckSpec::DecayEnvelope(p) => Some((&mut p.kernel, &p.ell)),
            CheckSpec::TwoPoint(p) => Some((&mut p.kernel, &p.ell)),
            CheckSpec::Auxiliary(p) => Some((&mut p.kernel, &p.ell)),
            CheckSpec::Identity(p) => Some((&mut p.kernel, &p.ell)),
            CheckSpec::KernelExport(p) => Some((&mut p.kernel, &p.ell)),
            _ => None,
        }
    }

    /// Fills in `kernel` where the check takes one and sets neither kernel nor ℓ.
    pub fn apply_default_kernel(&mut self, kernel: &KernelSpec) {
        if let Some((slot, ell)) = self.kernel_slot() {
            if slot.is_none() && ell.is_none() {
                *slot = Some(kernel.clone());
            }
        }
    }

    /// Explicit kernel, if any.
    pub fn kernel(&self) -> Option<&KernelSpec> {
        match self {
            CheckSpec::Decay(p) => p.kernel.as_ref(),
            CheckSpec::DecayEnvelope(p) => p.kernel.as_ref(),
            CheckSpec::TwoPoint(p) => p.kernel.as_ref(),
            CheckSpec::Auxiliary(p) => p.kernel.as_ref(),
            CheckSpec::Identity(p) => p.kernel.as_ref(),
            CheckSpec::KernelExport(p) => p.kernel.as_ref(),
            _ => None,
        }
    }

    pub fn run(&self, ctx: &WeightedContext) -> Result<VerificationReport> {
        match self {
            CheckSpec::ClassicalLimit(p) => run_classical_limit(ctx, p),
            CheckSpec::HeatOracle(p) => run_heat_oracle(ctx, p),
            CheckSpec::Plancherel(p) => run_plancherel(ctx, p),
            CheckSpec::Decay(p) => run_decay(ctx, p),
            CheckSpec::DecayEnvelope(p) => run_decay_envelope(ctx, p),
            CheckSpec::TwoPoint(p) => check_two_point_bound(ctx, p),
            CheckSpec::HeatBound(p) => check_heat_gaussian_bound(ctx, p),
            CheckSpec::Auxiliary(p) => check_auxiliary_bounds(ctx, p),
            CheckSpec::Identity(p) => kernel_identity_check(ctx, p),
            CheckSpec::OperatorAlgebra(p) => run_operator_algebra(ctx, p),
            CheckSpec::EKernel(p) => run_e_kernel(ctx, p),
            CheckSpec::Garding(p) => check_garding(ctx, p),
            CheckSpec::InequalityChain(p) => run_inequality_chain(ctx, p),
            CheckSpec::Translation(p) => run_translation(ctx, p),
            CheckSpec::Doubling(p) => run_doubling(ctx, p),
            CheckSpec::EtaDerivatives(p) => run_eta_derivatives(ctx, p),
            CheckSpec::KernelExport(p) => run_kernel_export(ctx, p),
        }
    }
}

#[derive(Debug)]
pub enum ParamError {
    UnknownCheck(String),
    Missing,
    Json(serde_json::Error),
}

/// One configured check with its resolved system and grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckEntry {
    pub index: usize,
    /// File stem of the report, `NN-<label or check>`.
    pub id: String,
    pub spec: CheckSpec,
    pub system: SystemConfig,
    pub grid: GridConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: Option<String>,
    pub checks: Vec<CheckEntry>,
    pub output_dir: Option<String>,
    pub workers: Option<usize>,
    pub record_timing: bool,
    /// SHA-256 of the config bytes, hex.
    pub hash: String,
}

pub fn config_hash(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(offset, |p| offset - p - 1) + 1;
    (line, col)
}

fn anchored(line: usize, column: usize, msg: impl std::fmt::Display) -> DunklError {
    DunklError::Config(format!("line {line}, column {column}: {msg}"))
}

fn sanitize(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

impl ExperimentConfig {
    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| DunklError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Parses and validates; nothing is computed except group closure and
    /// the kernel-spec checks needed to reject invalid experiments early.
    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawConfig = serde_json::from_str(text).map_err(|e| anchored(e.line(), e.column(), e))?;
        if raw.checks.is_empty() {
            return Err(DunklError::Config("config lists no checks".into()));
        }
        if raw.workers == Some(0) {
            return Err(DunklError::Config("workers must be at least 1".into()));
        }
        let mut cursor = 0;
        let mut checks = Vec::with_capacity(raw.checks.len());
        for (index, rc) in raw.checks.iter().enumerate() {
            let params_text = rc.params.as_ref().map(|p| p.get());
            let offset = match params_text {
                Some(t) => match text[cursor..].find(t) {
                    Some(p) => {
                        cursor += p + t.len();
                        Some(cursor - t.len())
                    }
                    None => None,
                },
                None => None,
            };
            let mut spec = CheckSpec::parse(&rc.check, params_text).map_err(|e| match e {
                ParamError::UnknownCheck(name) => {
                    let known: Vec<&str> = CATALOG.iter().map(|c| c.name).collect();
                    DunklError::Config(format!(
                        "check {index}: unknown check kind \"{name}\" (known: {})",
                        known.join(", ")
                    ))
                }
                ParamError::Missing => DunklError::Config(format!(
                    "check {index} ({}): params required, at least {{\"kind\": ...}}",
                    rc.check
                )),
                ParamError::Json(err) => match offset {
                    Some(off) => {
                        let (l0, c0) = line_col(text, off);
                        let (line, col) = if err.line() == 1 {
                            (l0, c0 + err.column() - 1)
                        } else {
                            (l0 + err.line() - 1, err.column())
                        };
                        anchored(line, col, format!("check {index} ({}) params: {err}", rc.check))
                    }
                    None => DunklError::Config(format!("check {index} ({}) params: {err}", rc.check)),
                },
            })?;
            if let Some(k) = &raw.kernel {
                spec.apply_default_kernel(k);
            }
            let system = rc.system.clone().unwrap_or_else(|| raw.system.clone());
            let grid = rc.grid.as_ref().map_or_else(|| raw.grid.clone(), |g| g.over(&raw.grid));
            let stem = rc.label.as_deref().map_or_else(|| spec.name().to_string(), sanitize);
            checks.push(CheckEntry {
                index,
                id: format!("{index:02}-{stem}"),
                spec,
                system,
                grid,
            });
        }
        let cfg = ExperimentConfig {
            name: raw.name,
            checks,
            output_dir: raw.output_dir,
            workers: raw.workers,
            record_timing: raw.record_timing,
            hash: config_hash(text),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        for c in &self.checks {
            let spec = c.system.to_spec();
            let violations = spec.validate();
            if !violations.is_empty() {
                let msg: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
                return Err(DunklError::Config(format!("check {} ({}): invalid root system: {}", c.index, c.id, msg.join("; "))));
            }
            if let Some(k) = c.spec.kernel() {
                k.validate(spec.dimension)
                    .map_err(|e| DunklError::Config(format!("check {} ({}): {e}", c.index, c.id)))?;
            }
        }
        Ok(())
    }
}

/// Builds the context of a check.
pub fn build_context(entry: &CheckEntry) -> Result<WeightedContext> {
    let spec = entry.system.to_spec();
    let settings = entry.grid.settings(spec.dimension);
    WeightedContext::with_settings(spec, settings)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
  "system": {"type": "rank-one", "k": 0.0},
  "checks": [{"check": "heat-oracle"}]
}"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let c = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.checks.len(), 1);
        assert_eq!(c.checks[0].id, "00-heat-oracle");
        assert_eq!(c.hash.len(), 64);
    }

    #[test]
    fn unknown_param_key_is_line_anchored() {
        let text = "{\n  \"system\": {\"type\": \"rank-one\", \"k\": 1.0},\n  \"checks\": [\n    {\"check\": \"plancherel\",\n     \"params\": {\"n_functions\": 4,\n                \"bogus\": 1}}\n  ]\n}";
        let err = ExperimentConfig::parse(text).unwrap_err().to_string();
        assert!(err.contains("line 6"), "{err}");
        assert!(err.contains("bogus"), "{err}");
    }

    #[test]
    fn kind_is_required_for_identity_checks() {
        let text = r#"{"system": {"type": "rank-one", "k": 0.0}, "checks": [{"check": "kernel-identity"}]}"#;
        let err = ExperimentConfig::parse(text).unwrap_err().to_string();
        assert!(err.contains("params required"), "{err}");
    }

    #[test]
    fn catalog_matches_check_kinds() {
        for entry in CATALOG {
            assert!(!entry.params().is_empty(), "{}", entry.name);
        }
    }
}

//! TOML run specification.
//!
//! ```toml
//! [systems]
//! x1 = "genesio-tesi"   # ... one entry per role x1 x2 y1 y2 z1 z2 w1 w2
//!
//! [parameters.x2]       # optional per-role parameter overrides
//! a = 36.0
//!
//! [initial_conditions]
//! x1 = [2.0, -3.0, 1.0]
//!
//! [scaling]
//! a1 = [1.0, 1.0, 1.0]  # ... a1 a2 b1 b2 c1 c2 d1 d2
//!
//! [assignment]
//! block1 = [[2, 1, 3], [1, 3, 2], [3, 2, 1]]   # or ["(2,1,3)", ...]
//! block2 = [[3, 2, 2], [1, 3, 3], [2, 1, 1]]
//! allow_non_permutation = false
//!
//! [integrator]
//! dt = 0.001
//! t_end = 10.0
//! record_stride = 10
//!
//! [controller]
//! policy = "even"       # or "w-channel"
//! gain = 1.0
//! variant = "full"      # "non-switched", "uncontrolled", or a reduction name
//!
//! [output]
//! dir = "out"
//! trace = "trace.csv"
//! report = "report.csv"
//! threshold = 0.001
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::controller::{Reduction, SplitPolicy};
use crate::dynamics::{Registry, StateVector, GENESIO_TESI, LU};
use crate::error::{Error, Result};
use crate::roles::{Role, Roles};
use crate::scheme::{ScalingConfig, SwitchAssignment, Wiring};
use crate::simulate::{paper_initial_conditions, AssignmentCheck, ControlMode, SimConfig};

/// Which form of the scheme a run uses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Variant {
    /// Both blocks, switched wiring, both response channels.
    #[default]
    Full,
    /// Wiring replaced by `i = j = l = m`.
    NonSwitched,
    /// Controllers switched off.
    Uncontrolled,
    Reduced(Reduction),
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "full" => Ok(Variant::Full),
            "non-switched" => Ok(Variant::NonSwitched),
            "uncontrolled" => Ok(Variant::Uncontrolled),
            other => other.parse().map(Variant::Reduced).map_err(|_| {
                let names: Vec<_> = Reduction::ALL.iter().map(|r| r.name()).collect();
                format!(
                    "unknown variant {other:?}; expected full, non-switched, uncontrolled, or one of {}",
                    names.join(", ")
                )
            }),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variant::Full => f.write_str("full"),
            Variant::NonSwitched => f.write_str("non-switched"),
            Variant::Uncontrolled => f.write_str("uncontrolled"),
            Variant::Reduced(r) => f.write_str(r.name()),
        }
    }
}

impl TryFrom<String> for Variant {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, String> {
        s.parse()
    }
}

impl From<Variant> for String {
    fn from(v: Variant) -> String {
        v.to_string()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssignmentSpec {
    pub block1: Vec<Wiring>,
    pub block2: Vec<Wiring>,
    #[serde(default)]
    pub allow_non_permutation: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorSpec {
    pub dt: f64,
    pub t_end: f64,
    pub record_stride: usize,
}

impl Default for IntegratorSpec {
    fn default() -> Self {
        IntegratorSpec {
            dt: SimConfig::DEFAULT_DT,
            t_end: SimConfig::DEFAULT_T_END,
            record_stride: SimConfig::DEFAULT_STRIDE,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerSpec {
    pub policy: SplitPolicy,
    pub gain: f64,
    pub variant: Variant,
}

impl Default for ControllerSpec {
    fn default() -> Self {
        ControllerSpec {
            policy: SplitPolicy::Even,
            gain: 1.0,
            variant: Variant::Full,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    pub trace: String,
    pub report: String,
    /// Settling threshold used in the convergence report.
    pub threshold: f64,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: None,
            trace: "trace.csv".into(),
            report: "report.csv".into(),
            threshold: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub systems: Roles<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub parameters: BTreeMap<String, BTreeMap<String, f64>>,
    pub initial_conditions: Roles<Vec<f64>>,
    pub scaling: ScalingConfig,
    pub assignment: AssignmentSpec,
    #[serde(default)]
    pub integrator: IntegratorSpec,
    #[serde(default)]
    pub controller: ControllerSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub gain: Option<f64>,
    pub policy: Option<SplitPolicy>,
    pub variant: Option<Variant>,
    pub out: Option<PathBuf>,
}

impl RunSpec {
    /// The Genesio-Tesi/Lu worked example.
    pub fn paper() -> Self {
        let initial = paper_initial_conditions();
        let a = SwitchAssignment::paper_example();
        RunSpec {
            systems: Roles::from_fn(|r| {
                if r.block() == 1 {
                    GENESIO_TESI.to_string()
                } else {
                    LU.to_string()
                }
            }),
            parameters: BTreeMap::new(),
            initial_conditions: initial.map(|_, s| s.as_slice().to_vec()),
            scaling: ScalingConfig::identity(3),
            assignment: AssignmentSpec {
                block1: a.block1,
                block2: a.block2,
                allow_non_permutation: false,
            },
            integrator: IntegratorSpec::default(),
            controller: ControllerSpec {
                policy: SplitPolicy::WChannel,
                ..ControllerSpec::default()
            },
            output: OutputSpec::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn apply_overrides(&mut self, o: &Overrides) {
        if let Some(dt) = o.dt {
            self.integrator.dt = dt;
        }
        if let Some(t_end) = o.t_end {
            self.integrator.t_end = t_end;
        }
        if let Some(gain) = o.gain {
            self.controller.gain = gain;
        }
        if let Some(policy) = o.policy {
            self.controller.policy = policy;
        }
        if let Some(variant) = o.variant {
            self.controller.variant = variant;
        }
        if let Some(out) = &o.out {
            self.output.dir = Some(out.clone());
        }
    }

    pub fn assignment(&self) -> SwitchAssignment {
        SwitchAssignment::new(
            self.assignment.block1.clone(),
            self.assignment.block2.clone(),
        )
    }

    pub fn dim(&self) -> usize {
        self.initial_conditions.x1.len()
    }

    /// Resolves system names and builds a validated simulation config.
    pub fn to_sim_config(&self, registry: &Registry) -> Result<SimConfig> {
        for key in self.parameters.keys() {
            if !Role::ALL.iter().any(|r| r.label() == key) {
                return Err(Error::Parse(format!("parameters.{key}: unknown role")));
            }
        }
        let systems = self.systems.try_map(|role, name| {
            let mut def = registry.lookup(name)?;
            if let Some(params) = self.parameters.get(role.label()) {
                for (k, v) in params {
                    def = def.with_param(k, *v)?;
                }
            }
            Ok::<_, Error>(def)
        })?;
        let initial = self.initial_conditions.try_map(|role, v| {
            StateVector::new(v.clone())
                .map_err(|e| Error::InvalidConfig(format!("initial_conditions.{role}: {e}")))
        })?;
        let n = self.dim();
        let mut scaling = self.scaling.clone();
        let mut assignment = self.assignment();
        let mut check = if self.assignment.allow_non_permutation {
            AssignmentCheck::AllowNonPermutation
        } else {
            AssignmentCheck::Strict
        };
        let mode = match self.controller.variant {
            Variant::Full => ControlMode::Full,
            Variant::Uncontrolled => ControlMode::Disabled,
            Variant::NonSwitched => {
                assignment = SwitchAssignment::identity(n);
                check = AssignmentCheck::StructureOnly;
                ControlMode::Full
            }
            Variant::Reduced(r) => {
                r.apply(&mut scaling);
                ControlMode::Reduced(r)
            }
        };
        let cfg = SimConfig {
            systems,
            initial,
            scaling,
            assignment,
            policy: self.controller.policy,
            gain: self.controller.gain,
            mode,
            check,
            dt: self.integrator.dt,
            t_end: self.integrator.t_end,
            record_stride: self.integrator.record_stride,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PAPER_TOML: &str = r#"
[systems]
x1 = "genesio-tesi"
y1 = "genesio-tesi"
z1 = "genesio-tesi"
w1 = "genesio-tesi"
x2 = "lu"
y2 = "lu"
z2 = "lu"
w2 = "lu"

[initial_conditions]
x1 = [2.0, -3.0, 1.0]
x2 = [-2.5, 1.0, -3.0]
y1 = [1.0, 0.0, -1.0]
y2 = [-1.5, 2.0, 1.5]
z1 = [4.0, -3.5, 3.0]
z2 = [-0.5, 1.5, 0.0]
w1 = [1.0, -1.5, -2.0]
w2 = [-1.0, 1.5, 3.0]

[scaling]
a1 = [1.0, 1.0, 1.0]
a2 = [1.0, 1.0, 1.0]
b1 = [1.0, 1.0, 1.0]
b2 = [1.0, 1.0, 1.0]
c1 = [1.0, 1.0, 1.0]
c2 = [1.0, 1.0, 1.0]
d1 = [1.0, 1.0, 1.0]
d2 = [1.0, 1.0, 1.0]

[assignment]
block1 = ["(2,1,3)", "(1,3,2)", "(3,2,1)"]
block2 = [[3, 2, 2], [1, 3, 3], [2, 1, 1]]

[controller]
policy = "w-channel"
"#;

    #[test]
    fn parses_handwritten_config() {
        let spec = RunSpec::from_toml_str(PAPER_TOML).unwrap();
        assert_eq!(spec, RunSpec::paper());
    }

    #[test]
    fn toml_round_trip() {
        let mut spec = RunSpec::paper();
        spec.parameters
            .insert("x2".into(), BTreeMap::from([("a".to_string(), 35.5)]));
        spec.controller.variant = Variant::Reduced(Reduction::WithoutZ);
        spec.controller.policy = SplitPolicy::Even;
        spec.output.dir = Some("runs/a".into());
        let text = spec.to_toml_string().unwrap();
        assert_eq!(RunSpec::from_toml_str(&text).unwrap(), spec);
    }

    #[test]
    fn malformed_config_names_key_and_line() {
        let bad = PAPER_TOML.replace("x1 = [2.0, -3.0, 1.0]", "x1 = \"oops\"");
        let msg = RunSpec::from_toml_str(&bad).unwrap_err().to_string();
        assert!(msg.contains("line"), "{msg}");
        assert!(msg.contains("x1"), "{msg}");
        let unknown = format!("{PAPER_TOML}\n[integrator]\nstep = 0.1\n");
        let msg = RunSpec::from_toml_str(&unknown).unwrap_err().to_string();
        assert!(msg.contains("step"), "{msg}");
    }

    #[test]
    fn overrides_take_precedence() {
        let mut spec = RunSpec::paper();
        spec.integrator.dt = 0.01;
        spec.apply_overrides(&Overrides {
            dt: Some(0.002),
            gain: Some(2.0),
            policy: Some(SplitPolicy::Even),
            variant: Some(Variant::NonSwitched),
            ..Default::default()
        });
        assert_eq!(spec.integrator.dt, 0.002);
        assert_eq!(spec.integrator.t_end, 10.0);
        assert_eq!(spec.controller.gain, 2.0);
        assert_eq!(spec.controller.policy, SplitPolicy::Even);
        assert_eq!(spec.controller.variant, Variant::NonSwitched);
    }

    #[test]
    fn resolves_against_registry() {
        let reg = Registry::with_builtins();
        let cfg = RunSpec::paper().to_sim_config(&reg).unwrap();
        assert_eq!(cfg.systems.z2.name(), "lu");
        let mut spec = RunSpec::paper();
        spec.systems.w1 = "lorenz".into();
        assert!(matches!(
            spec.to_sim_config(&reg),
            Err(Error::UnknownSystem(_))
        ));
        let mut spec = RunSpec::paper();
        spec.parameters.insert("q9".into(), BTreeMap::new());
        assert!(spec.to_sim_config(&reg).is_err());
    }

    #[test]
    fn parameter_overrides_reach_systems() {
        let mut spec = RunSpec::paper();
        spec.parameters
            .insert("y2".into(), BTreeMap::from([("b".to_string(), 19.0)]));
        let cfg = spec.to_sim_config(&Registry::with_builtins()).unwrap();
        assert_eq!(cfg.systems.y2.param("b"), Some(19.0));
        assert_eq!(cfg.systems.x2.param("b"), Some(20.0));
    }

    #[test]
    fn variants_shape_the_config() {
        let reg = Registry::with_builtins();
        let mut spec = RunSpec::paper();
        spec.controller.variant = Variant::NonSwitched;
        let cfg = spec.to_sim_config(&reg).unwrap();
        assert_eq!(cfg.assignment, SwitchAssignment::identity(3));
        spec.controller.variant = Variant::Reduced(Reduction::WithoutW);
        let cfg = spec.to_sim_config(&reg).unwrap();
        assert!(cfg.scaling.is_zero(Role::W1) && cfg.scaling.is_zero(Role::W2));
        assert_eq!(cfg.mode, ControlMode::Reduced(Reduction::WithoutW));
    }

    #[test]
    fn variant_names() {
        for v in [
            "full",
            "non-switched",
            "uncontrolled",
            "without-z",
            "first-block-z",
        ] {
            assert_eq!(v.parse::<Variant>().unwrap().to_string(), v);
        }
        assert!("half".parse::<Variant>().is_err());
    }
}

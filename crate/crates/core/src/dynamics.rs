//! Autonomous chaotic vector fields and a name-keyed registry.
//!
//! A [`SystemDef`] bundles a right-hand side with its named parameters. The
//! two built-in systems (Genesio-Tesi and Lu) ship with their standard
//! chaotic parameter values; any other field of matching dimension can be
//! registered and then referenced by name from a run config.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};

/// Right-hand side `(params, state, out)`. `out` has the same length as `state`.
pub type FieldFn = Arc<dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync>;

/// Row-major Jacobian `(params, state, out)` with `out.len() == dim * dim`.
pub type JacobianFn = Arc<dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync>;

/// One system's state at an instant. Components are always finite.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector(Vec<f64>);

impl StateVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "state vector".into(),
            });
        }
        Ok(Self(values))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Multiplies every component by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self(self.0.iter().map(|v| v * factor).collect())
    }
}

impl TryFrom<Vec<f64>> for StateVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl std::ops::Index<usize> for StateVector {
    type Output = f64;

    fn index(&self, idx: usize) -> &f64 {
        &self.0[idx]
    }
}

/// A named autonomous vector field of fixed dimension.
#[derive(Clone)]
pub struct SystemDef {
    name: String,
    dim: usize,
    param_names: Vec<String>,
    param_values: Vec<f64>,
    field: FieldFn,
    jacobian: Option<JacobianFn>,
}

impl SystemDef {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        params: Vec<(String, f64)>,
        field: FieldFn,
    ) -> Self {
        let (param_names, param_values) = params.into_iter().unzip();
        Self {
            name: name.into(),
            dim,
            param_names,
            param_values,
            field,
            jacobian: None,
        }
    }

    pub fn with_jacobian(mut self, jacobian: JacobianFn) -> Self {
        self.jacobian = Some(jacobian);
        self
    }

    /// Returns a copy with one parameter replaced.
    pub fn with_param(mut self, param: &str, value: f64) -> Result<Self> {
        let idx = self
            .param_names
            .iter()
            .position(|k| k == param)
            .ok_or_else(|| Error::UnknownParameter {
                system: self.name.clone(),
                param: param.to_string(),
            })?;
        if !value.is_finite() {
            return Err(Error::NonFinite {
                context: format!("parameter {param}"),
            });
        }
        self.param_values[idx] = value;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn params(&self) -> impl Iterator<Item = (&str, f64)> {
        self.param_names
            .iter()
            .map(String::as_str)
            .zip(self.param_values.iter().copied())
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.param_names
            .iter()
            .position(|k| k == name)
            .map(|i| self.param_values[i])
    }

    pub fn eval(&self, state: &StateVector) -> Result<StateVector> {
        if state.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: state.dim(),
            });
        }
        let mut out = vec![0.0; self.dim];
        self.eval_into(state.as_slice(), &mut out);
        StateVector::new(out)
    }

    /// Unchecked evaluation for the integrator's inner loop.
    pub fn eval_into(&self, state: &[f64], out: &mut [f64]) {
        debug_assert_eq!(state.len(), self.dim);
        debug_assert_eq!(out.len(), self.dim);
        (self.field)(&self.param_values, state, out);
    }

    /// Hand-coded Jacobian, if the system provides one.
    pub fn jacobian(&self, state: &[f64]) -> Option<Vec<f64>> {
        let jac = self.jacobian.as_ref()?;
        let mut out = vec![0.0; self.dim * self.dim];
        jac(&self.param_values, state, &mut out);
        Some(out)
    }
}

impl PartialEq for SystemDef {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.dim == other.dim
            && self.param_names == other.param_names
            && self.param_values == other.param_values
            && Arc::ptr_eq(&self.field, &other.field)
    }
}

impl fmt::Debug for SystemDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SystemDef")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("params", &self.params().collect::<Vec<_>>())
            .finish_non_exhaustive()
    }
}

pub const GENESIO_TESI: &str = "genesio-tesi";
pub const LU: &str = "lu";

/// Genesio-Tesi: `(x2, x3, -a x1 - b x2 - c x3 + x1^2)` with `a = 6, b = 2.92, c = 1.2`.
pub fn genesio_tesi() -> SystemDef {
    static FIELD: OnceLock<(FieldFn, JacobianFn)> = OnceLock::new();
    let (field, jacobian) = FIELD.get_or_init(|| {
        let field: FieldFn = Arc::new(|p: &[f64], x: &[f64], out: &mut [f64]| {
            out[0] = x[1];
            out[1] = x[2];
            out[2] = -p[0] * x[0] - p[1] * x[1] - p[2] * x[2] + x[0] * x[0];
        });
        let jacobian: JacobianFn = Arc::new(|p: &[f64], x: &[f64], out: &mut [f64]| {
            out.copy_from_slice(&[
                0.0,
                1.0,
                0.0, //
                0.0,
                0.0,
                1.0, //
                -p[0] + 2.0 * x[0],
                -p[1],
                -p[2],
            ]);
        });
        (field, jacobian)
    });
    SystemDef::new(
        GENESIO_TESI,
        3,
        vec![("a".into(), 6.0), ("b".into(), 2.92), ("c".into(), 1.2)],
        field.clone(),
    )
    .with_jacobian(jacobian.clone())
}

/// Lu: `(a (x2 - x1), -x1 x3 + b x2, x1 x2 - c x3)` with `a = 36, b = 20, c = 3`.
pub fn lu() -> SystemDef {
    static FIELD: OnceLock<(FieldFn, JacobianFn)> = OnceLock::new();
    let (field, jacobian) = FIELD.get_or_init(|| {
        let field: FieldFn = Arc::new(|p: &[f64], x: &[f64], out: &mut [f64]| {
            out[0] = p[0] * (x[1] - x[0]);
            out[1] = -x[0] * x[2] + p[1] * x[1];
            out[2] = x[0] * x[1] - p[2] * x[2];
        });
        let jacobian: JacobianFn = Arc::new(|p: &[f64], x: &[f64], out: &mut [f64]| {
            out.copy_from_slice(&[
                -p[0], p[0], 0.0, //
                -x[2], p[1], -x[0], //
                x[1], x[0], -p[2],
            ]);
        });
        (field, jacobian)
    });
    SystemDef::new(
        LU,
        3,
        vec![("a".into(), 36.0), ("b".into(), 20.0), ("c".into(), 3.0)],
        field.clone(),
    )
    .with_jacobian(jacobian.clone())
}

pub fn eval_genesio_tesi(state: &StateVector) -> Result<StateVector> {
    genesio_tesi().eval(state)
}

pub fn eval_lu(state: &StateVector) -> Result<StateVector> {
    lu().eval(state)
}

/// Name-keyed collection of system definitions.
///
/// Populated during setup; lookups hand out clones, so a finished registry
/// can be shared freely between runs.
#[derive(Clone, Debug, Default)]
pub struct Registry {
    systems: BTreeMap<String, SystemDef>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registry preloaded with `genesio-tesi` and `lu`.
    pub fn with_builtins() -> Self {
        let mut reg = Self::new();
        reg.register(genesio_tesi())
            .expect("builtin names are unique");
        reg.register(lu()).expect("builtin names are unique");
        reg
    }

    pub fn register(&mut self, def: SystemDef) -> Result<&SystemDef> {
        use std::collections::btree_map::Entry;
        match self.systems.entry(def.name.clone()) {
            Entry::Occupied(_) => Err(Error::DuplicateSystem(def.name)),
            Entry::Vacant(slot) => Ok(slot.insert(def)),
        }
    }

    pub fn lookup(&self, name: &str) -> Result<SystemDef> {
        self.systems
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownSystem(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.systems.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.systems.keys().map(String::as_str)
    }
}

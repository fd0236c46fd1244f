//! Fixed-step integration of the eight-system closed loop.

use std::thread;

use crate::controller::{
    aggregate_into, check_gain, fields_into, reduced_into, split_into, AggregateControl,
    ControlVectors, Reduction, SplitPolicy,
};
use crate::dynamics::{genesio_tesi, lu, StateVector, SystemDef};
use crate::error::{Error, Result};
use crate::roles::{Role, Roles};
use crate::scheme::{
    self, block_roles, error_into, validate_assignment, CoefPair, ErrorVector, ScalingConfig,
    SwitchAssignment, ValidationOptions,
};

/// Any state component above this magnitude aborts a run.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

/// Classical fourth-order Runge-Kutta stepper with reusable stage buffers.
#[derive(Clone, Debug)]
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        Self {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }

    /// Advances `y` by one step of size `dt` in place.
    pub fn step<F>(&mut self, mut field: F, y: &mut [f64], dt: f64) -> Result<()>
    where
        F: FnMut(&[f64], &mut [f64]) -> Result<()>,
    {
        let half = 0.5 * dt;
        field(y, &mut self.k1)?;
        check_finite(&self.k1)?;
        for (t, (y, k)) in self.tmp.iter_mut().zip(y.iter().zip(&self.k1)) {
            *t = y + half * k;
        }
        field(&self.tmp, &mut self.k2)?;
        check_finite(&self.k2)?;
        for (t, (y, k)) in self.tmp.iter_mut().zip(y.iter().zip(&self.k2)) {
            *t = y + half * k;
        }
        field(&self.tmp, &mut self.k3)?;
        check_finite(&self.k3)?;
        for (t, (y, k)) in self.tmp.iter_mut().zip(y.iter().zip(&self.k3)) {
            *t = y + dt * k;
        }
        field(&self.tmp, &mut self.k4)?;
        check_finite(&self.k4)?;
        let sixth = dt / 6.0;
        for (idx, y) in y.iter_mut().enumerate() {
            *y += sixth * (self.k1[idx] + 2.0 * self.k2[idx] + 2.0 * self.k3[idx] + self.k4[idx]);
        }
        Ok(())
    }
}

fn check_finite(v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite {
            context: "derivative".into(),
        })
    }
}

/// One RK4 step of `dy/dt = field(y)` from `state`.
pub fn rk4_step<F>(mut field: F, state: &[f64], dt: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64], &mut [f64]),
{
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "dt must be positive, got {dt}"
        )));
    }
    let mut y = state.to_vec();
    Rk4::new(state.len()).step(
        |x, out| {
            field(x, out);
            Ok(())
        },
        &mut y,
        dt,
    )?;
    Ok(y)
}

/// Which controller drives the response systems.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ControlMode {
    /// Aggregate control on both blocks, split by the configured policy.
    #[default]
    Full,
    /// Closed-form controllers of a reduced scheme.
    Reduced(Reduction),
    /// No control at all; the responses evolve autonomously.
    Disabled,
}

/// How strictly the switch assignment is checked before a run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum AssignmentCheck {
    #[default]
    Strict,
    /// Repeated i/j/l indices are accepted.
    AllowNonPermutation,
    /// Only lengths and index ranges are checked; used for the non-switched baseline.
    StructureOnly,
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub systems: Roles<SystemDef>,
    pub initial: Roles<StateVector>,
    pub scaling: ScalingConfig,
    pub assignment: SwitchAssignment,
    pub policy: SplitPolicy,
    pub gain: f64,
    pub mode: ControlMode,
    pub check: AssignmentCheck,
    pub dt: f64,
    pub t_end: f64,
    pub record_stride: usize,
}

impl SimConfig {
    pub const DEFAULT_DT: f64 = 1e-3;
    pub const DEFAULT_T_END: f64 = 10.0;
    pub const DEFAULT_STRIDE: usize = 10;

    /// Genesio-Tesi drives and responses in block 1, Lu in block 2, the
    /// worked-example initial conditions and wiring, identity scaling.
    ///
    /// Uses the w-channel split: with the even split the halved Genesio-Tesi
    /// field left on `z1` escapes to infinity near t = 1.68 from these states.
    pub fn paper() -> Self {
        SimConfig {
            systems: Roles::from_fn(|r| if r.block() == 1 { genesio_tesi() } else { lu() }),
            initial: paper_initial_conditions(),
            scaling: ScalingConfig::identity(3),
            assignment: SwitchAssignment::paper_example(),
            policy: SplitPolicy::WChannel,
            gain: 1.0,
            mode: ControlMode::Full,
            check: AssignmentCheck::Strict,
            dt: Self::DEFAULT_DT,
            t_end: Self::DEFAULT_T_END,
            record_stride: Self::DEFAULT_STRIDE,
        }
    }

    pub fn dim(&self) -> usize {
        self.initial.x1.dim()
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.t_end >= self.dt && self.t_end.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "t_end must be at least dt, got t_end = {} and dt = {}",
                self.t_end, self.dt
            )));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidConfig(
                "record_stride must be at least 1".into(),
            ));
        }
        check_gain(self.gain)?;
        let n = scheme::common_dim(&self.initial)?;
        for (role, def) in self.systems.iter() {
            if def.dim() != n {
                return Err(Error::InvalidConfig(format!(
                    "system `{}` for {role} has dimension {}, initial state has {n}",
                    def.name(),
                    def.dim()
                )));
            }
        }
        let zero_ok: Vec<CoefPair> = match self.mode {
            ControlMode::Reduced(r) => r.zero_pairs(),
            _ => Vec::new(),
        };
        let issues = self.scaling.check(n, &zero_ok);
        if !issues.is_empty() {
            let msg = issues
                .iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join("; ");
            return Err(Error::InvalidScaling(msg));
        }
        match self.check {
            AssignmentCheck::Strict => {
                validate_assignment(&self.assignment, n, ValidationOptions::default())
                    .into_result()?
            }
            AssignmentCheck::AllowNonPermutation => validate_assignment(
                &self.assignment,
                n,
                ValidationOptions {
                    allow_non_permutation: true,
                },
            )
            .into_result()?,
            AssignmentCheck::StructureOnly => self.assignment.check_structure(n)?,
        }
        if let ControlMode::Reduced(r) = self.mode {
            let mut zeroed = self.scaling.clone();
            r.apply(&mut zeroed);
            if zeroed != self.scaling {
                return Err(Error::ReductionMismatch {
                    variant: r.to_string(),
                    requirement: "scaling zeroed by the reduction".into(),
                });
            }
        }
        Ok(())
    }
}

pub fn paper_initial_conditions() -> Roles<StateVector> {
    let sv = |v: [f64; 3]| StateVector::new(v.to_vec()).expect("finite");
    Roles {
        x1: sv([2.0, -3.0, 1.0]),
        x2: sv([-2.5, 1.0, -3.0]),
        y1: sv([1.0, 0.0, -1.0]),
        y2: sv([-1.5, 2.0, 1.5]),
        z1: sv([4.0, -3.5, 3.0]),
        z2: sv([-0.5, 1.5, 0.0]),
        w1: sv([1.0, -1.5, -2.0]),
        w2: sv([-1.0, 1.5, 3.0]),
    }
}

/// Recorded state of the network at one instant.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    /// Role-major `[x1, x2, y1, y2, z1, z2, w1, w2]`.
    pub states: Vec<f64>,
    pub error: ErrorVector,
    pub aggregate: AggregateControl,
    /// `V = e^T e / 2`.
    pub lyapunov: f64,
}

impl Snapshot {
    pub fn state(&self, role: Role) -> &[f64] {
        let n = self.error.e1.len();
        scheme::part(&self.states, n, role)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClosedLoopTrace {
    pub n: usize,
    pub dt: f64,
    pub record_stride: usize,
    pub gain: f64,
    pub scaling: ScalingConfig,
    pub assignment: SwitchAssignment,
    pub samples: Vec<Snapshot>,
}

impl ClosedLoopTrace {
    pub fn empty(n: usize, scaling: ScalingConfig, assignment: SwitchAssignment) -> Self {
        ClosedLoopTrace {
            n,
            dt: SimConfig::DEFAULT_DT,
            record_stride: 1,
            gain: 1.0,
            scaling,
            assignment,
            samples: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.t)
    }

    /// Sample closest to time `t`.
    pub fn at(&self, t: f64) -> Option<&Snapshot> {
        self.samples
            .iter()
            .min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
    }
}

/// Right-hand side of the closed loop with preallocated scratch space.
struct Plant<'a> {
    cfg: &'a SimConfig,
    n: usize,
    e1: Vec<f64>,
    e2: Vec<f64>,
    aggregate: AggregateControl,
    controls: ControlVectors,
}

impl<'a> Plant<'a> {
    fn new(cfg: &'a SimConfig) -> Self {
        let n = cfg.dim();
        Plant {
            cfg,
            n,
            e1: vec![0.0; n],
            e2: vec![0.0; n],
            aggregate: AggregateControl::zeros(n),
            controls: ControlVectors::zeros(n),
        }
    }

    /// Fills `self.controls` (and `self.aggregate`) for state `y`, whose field
    /// values are already in `field`.
    fn update_controls(&mut self, y: &[f64], field: &[f64]) -> Result<()> {
        let cfg = self.cfg;
        let n = self.n;
        error_into(
            n,
            y,
            &cfg.scaling,
            &cfg.assignment,
            &mut self.e1,
            &mut self.e2,
        );
        match cfg.mode {
            ControlMode::Disabled => {
                self.aggregate = AggregateControl::zeros(n);
                self.controls = ControlVectors::zeros(n);
            }
            ControlMode::Full => {
                aggregate_into(
                    n,
                    field,
                    &cfg.scaling,
                    &cfg.assignment,
                    cfg.gain,
                    (&self.e1, &self.e2),
                    &mut self.aggregate,
                );
                split_into(
                    &self.aggregate,
                    &cfg.scaling,
                    &cfg.assignment,
                    cfg.policy,
                    &mut self.controls,
                )?;
            }
            ControlMode::Reduced(r) => {
                let error = ErrorVector {
                    e1: self.e1.clone(),
                    e2: self.e2.clone(),
                };
                reduced_into(
                    r,
                    n,
                    y,
                    &cfg.systems,
                    &cfg.scaling,
                    &cfg.assignment,
                    cfg.gain,
                    &error,
                    cfg.policy,
                    &mut self.controls,
                )?;
                self.aggregate = recombine(&self.controls, &cfg.scaling, &cfg.assignment, n);
            }
        }
        Ok(())
    }

    fn rhs(&mut self, y: &[f64], dydt: &mut [f64]) -> Result<()> {
        let n = self.n;
        fields_into(&self.cfg.systems, n, y, dydt);
        if self.cfg.mode == ControlMode::Disabled {
            return Ok(());
        }
        self.update_controls(y, dydt)?;
        for role in [Role::Z1, Role::Z2, Role::W1, Role::W2] {
            let k = role.index();
            let u = self.controls.for_role(role).unwrap();
            for (d, u) in dydt[k * n..(k + 1) * n].iter_mut().zip(u) {
                *d += u;
            }
        }
        Ok(())
    }

    fn snapshot(&mut self, t: f64, y: &[f64]) -> Result<Snapshot> {
        let mut field = vec![0.0; y.len()];
        fields_into(&self.cfg.systems, self.n, y, &mut field);
        self.update_controls(y, &field)?;
        let error = ErrorVector {
            e1: self.e1.clone(),
            e2: self.e2.clone(),
        };
        let lyapunov = error.lyapunov();
        Ok(Snapshot {
            t,
            states: y.to_vec(),
            error,
            aggregate: self.aggregate.clone(),
            lyapunov,
        })
    }
}

/// `U_b[m] = c_b[l] u_z[l] + d_b[m] u_w[m]` from realized controls.
fn recombine(
    controls: &ControlVectors,
    scaling: &ScalingConfig,
    assignment: &SwitchAssignment,
    n: usize,
) -> AggregateControl {
    let mut out = AggregateControl::zeros(n);
    for b in 1..=2 {
        let [_, _, rz, rw] = block_roles(b);
        let (uz, uw) = (
            controls.for_role(rz).unwrap(),
            controls.for_role(rw).unwrap(),
        );
        let dst = if b == 1 { &mut out.u1 } else { &mut out.u2 };
        for t in assignment.tuples(b) {
            let (l, m) = (t.l - 1, t.m - 1);
            dst[m] = scaling.coefficients(rz)[l] * uz[l] + scaling.coefficients(rw)[m] * uw[m];
        }
    }
    out
}

fn divergence_check(t: f64, y: &[f64], n: usize) -> Result<()> {
    for (idx, v) in y.iter().enumerate() {
        if !v.is_finite() || v.abs() > DIVERGENCE_LIMIT {
            let role = Role::ALL[idx / n];
            return Err(Error::Divergence {
                t,
                component: format!("{role}[{}]", idx % n + 1),
                magnitude: v.abs(),
            });
        }
    }
    Ok(())
}

/// Integrates drives and controlled responses together.
///
/// Controls are recomputed from the full network state at every RK4 stage.
pub fn run_closed_loop(cfg: &SimConfig) -> Result<ClosedLoopTrace> {
    cfg.validate()?;
    let n = cfg.dim();
    let mut y = scheme::flatten(&cfg.initial);
    let mut plant = Plant::new(cfg);
    let mut rk4 = Rk4::new(y.len());
    let steps = cfg.steps();
    let mut samples = Vec::with_capacity(steps / cfg.record_stride + 1);
    samples.push(plant.snapshot(0.0, &y)?);
    for k in 1..=steps {
        rk4.step(|x, out| plant.rhs(x, out), &mut y, cfg.dt)?;
        let t = k as f64 * cfg.dt;
        divergence_check(t, &y, n)?;
        if k % cfg.record_stride == 0 {
            samples.push(plant.snapshot(t, &y)?);
        }
    }
    Ok(ClosedLoopTrace {
        n,
        dt: cfg.dt,
        record_stride: cfg.record_stride,
        gain: cfg.gain,
        scaling: cfg.scaling.clone(),
        assignment: cfg.assignment.clone(),
        samples,
    })
}

/// Runs independent configurations on separate threads, preserving order.
pub fn run_many(configs: &[SimConfig]) -> Vec<Result<ClosedLoopTrace>> {
    thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .map(|cfg| scope.spawn(move || run_closed_loop(cfg)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("simulation thread panicked"))
            .collect()
    })
}

/// Trajectory of a single autonomous system.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn max_abs(&self) -> f64 {
        self.states
            .iter()
            .flatten()
            .fold(0.0, |acc, v| acc.max(v.abs()))
    }
}

/// Integrates one system with no control, recording every step.
pub fn run_uncontrolled(
    system: &SystemDef,
    x0: &StateVector,
    dt: f64,
    t_end: f64,
) -> Result<Trajectory> {
    if x0.dim() != system.dim() {
        return Err(Error::DimensionMismatch {
            expected: system.dim(),
            found: x0.dim(),
        });
    }
    if !(dt > 0.0 && dt.is_finite() && t_end >= dt && t_end.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "need 0 < dt <= t_end, got dt = {dt}, t_end = {t_end}"
        )));
    }
    let steps = (t_end / dt).round() as usize;
    let mut y = x0.as_slice().to_vec();
    let mut rk4 = Rk4::new(y.len());
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(0.0);
    states.push(y.clone());
    for k in 1..=steps {
        rk4.step(
            |x, out| {
                system.eval_into(x, out);
                Ok(())
            },
            &mut y,
            dt,
        )?;
        let t = k as f64 * dt;
        if let Some(v) = y
            .iter()
            .find(|v| !v.is_finite() || v.abs() > DIVERGENCE_LIMIT)
        {
            return Err(Error::Divergence {
                t,
                component: system.name().to_string(),
                magnitude: v.abs(),
            });
        }
        times.push(t);
        states.push(y.clone());
    }
    Ok(Trajectory { times, states })
}

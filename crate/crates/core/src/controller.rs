//! Stabilizing controllers for the switched error dynamics.
//!
//! For slot `m` of block 1 with wiring `(i, j, l)` the aggregate control is
//!
//! ```text
//! U1[m] = a1[i] f1[i] + b1[j] g1[j] - c1[l] h1[l] - d1[m] k1[m] + kappa * e1[m]
//! ```
//!
//! and it is realized by the two response channels through
//! `U1[m] = c1[l] u1[l] + d1[m] u3[m]`. Substituting into the error dynamics
//! leaves `de/dt = -kappa * e`. Block 2 is identical with `x2, y2, z2, w2`
//! and channels `u2, u4`.

use serde::{Deserialize, Serialize};

use crate::dynamics::{StateVector, SystemDef};
use crate::error::{Error, Result};
use crate::roles::{Role, Roles};
use crate::scheme::{
    self, block_roles, common_dim, part, slot_combination, CoefPair, ScalingConfig,
    SwitchAssignment,
};

/// How an aggregate control is shared between the `z` and `w` channels of a slot.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitPolicy {
    /// Half of `U` through each channel when both coefficients are nonzero.
    #[default]
    Even,
    /// All of `U` through the `w` channel; `z` only when `d[m] = 0`.
    WChannel,
}

impl std::str::FromStr for SplitPolicy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "even" => Ok(SplitPolicy::Even),
            "w-channel" => Ok(SplitPolicy::WChannel),
            other => Err(format!(
                "unknown split policy {other:?} (expected \"even\" or \"w-channel\")"
            )),
        }
    }
}

impl std::fmt::Display for SplitPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SplitPolicy::Even => "even",
            SplitPolicy::WChannel => "w-channel",
        })
    }
}

/// Aggregate controls `U1`, `U2`, one entry per error slot.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregateControl {
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
}

impl AggregateControl {
    pub fn zeros(n: usize) -> Self {
        Self {
            u1: vec![0.0; n],
            u2: vec![0.0; n],
        }
    }

    pub fn block(&self, block: usize) -> &[f64] {
        if block == 1 {
            &self.u1
        } else {
            &self.u2
        }
    }
}

/// Physical controllers: `u1 -> z1`, `u2 -> z2`, `u3 -> w1`, `u4 -> w2`.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlVectors {
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    pub u3: Vec<f64>,
    pub u4: Vec<f64>,
}

impl ControlVectors {
    pub fn zeros(n: usize) -> Self {
        Self {
            u1: vec![0.0; n],
            u2: vec![0.0; n],
            u3: vec![0.0; n],
            u4: vec![0.0; n],
        }
    }

    /// Controller acting on a response role, `None` for drives.
    pub fn for_role(&self, role: Role) -> Option<&[f64]> {
        match role {
            Role::Z1 => Some(&self.u1),
            Role::Z2 => Some(&self.u2),
            Role::W1 => Some(&self.u3),
            Role::W2 => Some(&self.u4),
            _ => None,
        }
    }

    fn channels_mut(&mut self, block: usize) -> (&mut Vec<f64>, &mut Vec<f64>) {
        if block == 1 {
            (&mut self.u1, &mut self.u3)
        } else {
            (&mut self.u2, &mut self.u4)
        }
    }

    fn reset(&mut self) {
        for v in [&mut self.u1, &mut self.u2, &mut self.u3, &mut self.u4] {
            v.iter_mut().for_each(|x| *x = 0.0);
        }
    }

    /// Largest `|c[l] u_z[l] + d[m] u_w[m] - U[m]|` over both blocks.
    pub fn recombination_residual(
        &self,
        aggregate: &AggregateControl,
        scaling: &ScalingConfig,
        assignment: &SwitchAssignment,
    ) -> f64 {
        let mut worst = 0.0f64;
        for b in 1..=2 {
            let [_, _, rz, rw] = block_roles(b);
            let uz = self.for_role(rz).unwrap();
            let uw = self.for_role(rw).unwrap();
            for t in assignment.tuples(b) {
                let (l, m) = (t.l - 1, t.m - 1);
                let got = scaling.coefficients(rz)[l] * uz[l] + scaling.coefficients(rw)[m] * uw[m];
                worst = worst.max((got - aggregate.block(b)[m]).abs());
            }
        }
        worst
    }
}

pub(crate) fn check_gain(gain: f64) -> Result<()> {
    if gain.is_finite() && gain > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "gain must be positive and finite, got {gain}"
        )))
    }
}

fn check_systems(systems: &Roles<SystemDef>, n: usize) -> Result<()> {
    for (_, def) in systems.iter() {
        if def.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: def.dim(),
            });
        }
    }
    Ok(())
}

/// Evaluates every role's vector field on a flattened network state.
pub(crate) fn fields_into(systems: &Roles<SystemDef>, n: usize, flat: &[f64], out: &mut [f64]) {
    for role in Role::ALL {
        let k = role.index();
        systems
            .get(role)
            .eval_into(&flat[k * n..(k + 1) * n], &mut out[k * n..(k + 1) * n]);
    }
}

/// `U_b[m] = drift_b[m] + gain * e_b[m]` on flattened state and field values.
pub(crate) fn aggregate_into(
    n: usize,
    flat_field: &[f64],
    scaling: &ScalingConfig,
    assignment: &SwitchAssignment,
    gain: f64,
    error: (&[f64], &[f64]),
    out: &mut AggregateControl,
) {
    for (b, e, u) in [(1, error.0, &mut out.u1), (2, error.1, &mut out.u2)] {
        for t in assignment.tuples(b) {
            u[t.m - 1] = slot_combination(n, flat_field, scaling, b, t) + gain * e[t.m - 1];
        }
    }
}

pub(crate) fn split_into(
    aggregate: &AggregateControl,
    scaling: &ScalingConfig,
    assignment: &SwitchAssignment,
    policy: SplitPolicy,
    out: &mut ControlVectors,
) -> Result<()> {
    out.reset();
    for b in 1..=2 {
        let [_, _, rz, rw] = block_roles(b);
        let (cz, dw) = (scaling.coefficients(rz), scaling.coefficients(rw));
        let wiring = assignment.block(b);
        let (uz, uw) = out.channels_mut(b);
        for t in assignment.tuples(b) {
            let (l, m) = (t.l - 1, t.m - 1);
            let u = aggregate.block(b)[m];
            let c = cz[l];
            let d = dw[m];
            // z_b[l] may only be driven from this slot if no other slot reads it.
            let z_open = c != 0.0 && wiring.iter().filter(|w| w.l == t.l).count() == 1;
            let w_open = d != 0.0;
            match (policy, z_open, w_open) {
                (_, false, false) => {
                    if u != 0.0 {
                        return Err(Error::Unrealizable {
                            block: b,
                            slot: t.m,
                            value: u,
                        });
                    }
                }
                (SplitPolicy::Even, true, true) => {
                    uz[l] = u / (2.0 * c);
                    uw[m] = u / (2.0 * d);
                }
                (_, _, true) => uw[m] = u / d,
                (_, true, false) => uz[l] = u / c,
            }
        }
    }
    Ok(())
}

/// Aggregate controls at the given network state.
pub fn synthesize_aggregate(
    states: &Roles<StateVector>,
    systems: &Roles<SystemDef>,
    scaling: &ScalingConfig,
    assignment: &SwitchAssignment,
    gain: f64,
) -> Result<AggregateControl> {
    let n = common_dim(states)?;
    check_systems(systems, n)?;
    check_gain(gain)?;
    let error = scheme::compute_error(states, scaling, assignment)?;
    let flat = scheme::flatten(states);
    let mut field = vec![0.0; flat.len()];
    fields_into(systems, n, &flat, &mut field);
    let mut out = AggregateControl::zeros(n);
    aggregate_into(
        n,
        &field,
        scaling,
        assignment,
        gain,
        (&error.e1, &error.e2),
        &mut out,
    );
    Ok(out)
}

/// Distributes the aggregate controls over `u1..u4`.
///
/// A slot whose `z` coefficient is zero, or whose `l` index is shared with
/// another slot of the same block, is realized through `w` alone.
pub fn split_control(
    aggregate: &AggregateControl,
    scaling: &ScalingConfig,
    assignment: &SwitchAssignment,
    policy: SplitPolicy,
) -> Result<ControlVectors> {
    let n = aggregate.u1.len();
    if aggregate.u2.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: aggregate.u2.len(),
        });
    }
    assignment.check_structure(n)?;
    let mut out = ControlVectors::zeros(n);
    split_into(aggregate, scaling, assignment, policy, &mut out)?;
    Ok(out)
}

/// Special cases of the full scheme obtained by switching off scaling matrices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reduction {
    /// `A1 = B1 = C1 = D1 = 0`: only block 2 is synchronized.
    SecondBlockOnly,
    /// `A2 = B2 = C2 = D2 = 0`: only block 1 is synchronized.
    FirstBlockOnly,
    /// `C1 = C2 = 0`: controls act on `w1`, `w2` only.
    WithoutZ,
    /// `D1 = D2 = 0`: controls act on `z1`, `z2` only.
    WithoutW,
    /// Block 1 off and `C2 = 0`: a single controller on `w2`.
    SecondBlockW,
    /// Block 1 off and `D2 = 0`: a single controller on `z2`.
    SecondBlockZ,
    /// Block 2 off and `C1 = 0`: a single controller on `w1`.
    FirstBlockW,
    /// Block 2 off and `D1 = 0`: a single controller on `z1`.
    FirstBlockZ,
}

/// Which channel carries the control in a reduced block.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Channel {
    Off,
    Both,
    Z,
    W,
}

impl Reduction {
    pub const ALL: [Reduction; 8] = [
        Reduction::SecondBlockOnly,
        Reduction::FirstBlockOnly,
        Reduction::WithoutZ,
        Reduction::WithoutW,
        Reduction::SecondBlockW,
        Reduction::SecondBlockZ,
        Reduction::FirstBlockW,
        Reduction::FirstBlockZ,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Reduction::SecondBlockOnly => "second-block-only",
            Reduction::FirstBlockOnly => "first-block-only",
            Reduction::WithoutZ => "without-z",
            Reduction::WithoutW => "without-w",
            Reduction::SecondBlockW => "second-block-w",
            Reduction::SecondBlockZ => "second-block-z",
            Reduction::FirstBlockW => "first-block-w",
            Reduction::FirstBlockZ => "first-block-z",
        }
    }

    fn channels(self) -> [Channel; 2] {
        use Channel::*;
        match self {
            Reduction::SecondBlockOnly => [Off, Both],
            Reduction::FirstBlockOnly => [Both, Off],
            Reduction::WithoutZ => [W, W],
            Reduction::WithoutW => [Z, Z],
            Reduction::SecondBlockW => [Off, W],
            Reduction::SecondBlockZ => [Off, Z],
            Reduction::FirstBlockW => [W, Off],
            Reduction::FirstBlockZ => [Z, Off],
        }
    }

    /// Zeroes the scaling entries this reduction switches off.
    pub fn apply(self, scaling: &mut ScalingConfig) {
        for (k, channel) in self.channels().into_iter().enumerate() {
            let [_, _, rz, rw] = block_roles(k + 1);
            match channel {
                Channel::Off => scaling.zero_block(k + 1),
                Channel::Both => {}
                Channel::Z => scaling.zero_role(rw),
                Channel::W => scaling.zero_role(rz),
            }
        }
    }

    /// Scaling pairs that are legitimately all zero under this reduction.
    pub fn zero_pairs(self) -> Vec<CoefPair> {
        let [b1, b2] = self.channels();
        let mut pairs = Vec::new();
        let z_off = |c: Channel| matches!(c, Channel::Off | Channel::W);
        let w_off = |c: Channel| matches!(c, Channel::Off | Channel::Z);
        if z_off(b1) && z_off(b2) {
            pairs.push(CoefPair::C);
        }
        if w_off(b1) && w_off(b2) {
            pairs.push(CoefPair::D);
        }
        pairs
    }

    fn check(self, scaling: &ScalingConfig) -> Result<()> {
        let mut expected = scaling.clone();
        self.apply(&mut expected);
        if &expected == scaling {
            Ok(())
        } else {
            Err(Error::ReductionMismatch {
                variant: self.name().to_string(),
                requirement: self.requirement().to_string(),
            })
        }
    }

    fn requirement(self) -> &'static str {
        match self {
            Reduction::SecondBlockOnly => "a1 = b1 = c1 = d1 = 0",
            Reduction::FirstBlockOnly => "a2 = b2 = c2 = d2 = 0",
            Reduction::WithoutZ => "c1 = c2 = 0",
            Reduction::WithoutW => "d1 = d2 = 0",
            Reduction::SecondBlockW => "a1 = b1 = c1 = d1 = 0 and c2 = 0",
            Reduction::SecondBlockZ => "a1 = b1 = c1 = d1 = 0 and d2 = 0",
            Reduction::FirstBlockW => "a2 = b2 = c2 = d2 = 0 and c1 = 0",
            Reduction::FirstBlockZ => "a2 = b2 = c2 = d2 = 0 and d1 = 0",
        }
    }
}

impl std::str::FromStr for Reduction {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Reduction::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| format!("unknown reduction {s:?}"))
    }
}

impl std::fmt::Display for Reduction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Closed-form controllers of a reduced scheme.
///
/// The scaling must already be zeroed as the reduction requires (see
/// [`Reduction::apply`]). Single-channel blocks use
/// `u_w[m] = (a[i] f[i] + b[j] g[j] + kappa e[m]) / d[m] - k[m]` or
/// `u_z[l] = (a[i] f[i] + b[j] g[j] + kappa e[m]) / c[l] - h[l]`; a block that
/// keeps both channels is split according to `policy`.
pub fn reduced_control(
    variant: Reduction,
    states: &Roles<StateVector>,
    systems: &Roles<SystemDef>,
    scaling: &ScalingConfig,
    assignment: &SwitchAssignment,
    gain: f64,
    policy: SplitPolicy,
) -> Result<ControlVectors> {
    let n = common_dim(states)?;
    check_systems(systems, n)?;
    check_gain(gain)?;
    variant.check(scaling)?;
    let error = scheme::compute_error(states, scaling, assignment)?;
    let mut out = ControlVectors::zeros(n);
    reduced_into(
        variant,
        n,
        &scheme::flatten(states),
        systems,
        scaling,
        assignment,
        gain,
        &error,
        policy,
        &mut out,
    )?;
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn reduced_into(
    variant: Reduction,
    n: usize,
    flat: &[f64],
    systems: &Roles<SystemDef>,
    scaling: &ScalingConfig,
    assignment: &SwitchAssignment,
    gain: f64,
    error: &scheme::ErrorVector,
    policy: SplitPolicy,
    out: &mut ControlVectors,
) -> Result<()> {
    out.reset();
    let eval = |role: Role| {
        let mut v = vec![0.0; n];
        systems.get(role).eval_into(part(flat, n, role), &mut v);
        v
    };
    for (k, channel) in variant.channels().into_iter().enumerate() {
        let b = k + 1;
        let [rx, ry, rz, rw] = block_roles(b);
        if channel == Channel::Off {
            continue;
        }
        let (f, g, h, kw) = (eval(rx), eval(ry), eval(rz), eval(rw));
        let (a, bb, c, d) = (
            scaling.coefficients(rx),
            scaling.coefficients(ry),
            scaling.coefficients(rz),
            scaling.coefficients(rw),
        );
        let e = error.block(b);
        match channel {
            Channel::Off => unreachable!(),
            Channel::Both => {
                let mut agg = AggregateControl::zeros(n);
                let u = if b == 1 { &mut agg.u1 } else { &mut agg.u2 };
                for t in assignment.tuples(b) {
                    let (i, j, l, m) = (t.i - 1, t.j - 1, t.l - 1, t.m - 1);
                    u[m] = a[i] * f[i] + bb[j] * g[j] - c[l] * h[l] - d[m] * kw[m] + gain * e[m];
                }
                let mut split = ControlVectors::zeros(n);
                split_into(&agg, scaling, assignment, policy, &mut split)?;
                let (z, w) = if b == 1 {
                    (split.u1, split.u3)
                } else {
                    (split.u2, split.u4)
                };
                let (dst_z, dst_w) = out.channels_mut(b);
                *dst_z = z;
                *dst_w = w;
            }
            Channel::W => {
                let (_, uw) = out.channels_mut(b);
                for t in assignment.tuples(b) {
                    let (i, j, m) = (t.i - 1, t.j - 1, t.m - 1);
                    if d[m] == 0.0 {
                        return Err(Error::ZeroCoefficient {
                            coefficient: format!("d{b}[{}]", t.m),
                        });
                    }
                    uw[m] = (a[i] * f[i] + bb[j] * g[j] + gain * e[m]) / d[m] - kw[m];
                }
            }
            Channel::Z => {
                let (uz, _) = out.channels_mut(b);
                for t in assignment.tuples(b) {
                    let (i, j, l, m) = (t.i - 1, t.j - 1, t.l - 1, t.m - 1);
                    if c[l] == 0.0 {
                        return Err(Error::ZeroCoefficient {
                            coefficient: format!("c{b}[{}]", t.l),
                        });
                    }
                    uz[l] = (a[i] * f[i] + bb[j] * g[j] + gain * e[m]) / c[l] - h[l];
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{genesio_tesi, lu};

    fn sv(v: &[f64]) -> StateVector {
        StateVector::new(v.to_vec()).unwrap()
    }

    fn paper_systems() -> Roles<SystemDef> {
        Roles::from_fn(|r| if r.block() == 1 { genesio_tesi() } else { lu() })
    }

    fn paper_states() -> Roles<StateVector> {
        Roles {
            x1: sv(&[2.0, -3.0, 1.0]),
            x2: sv(&[-2.5, 1.0, -3.0]),
            y1: sv(&[1.0, 0.0, -1.0]),
            y2: sv(&[-1.5, 2.0, 1.5]),
            z1: sv(&[4.0, -3.5, 3.0]),
            z2: sv(&[-0.5, 1.5, 0.0]),
            w1: sv(&[1.0, -1.5, -2.0]),
            w2: sv(&[-1.0, 1.5, 3.0]),
        }
    }

    #[test]
    fn first_aggregate_of_worked_example() {
        let u = synthesize_aggregate(
            &paper_states(),
            &paper_systems(),
            &ScalingConfig::identity(3),
            &SwitchAssignment::paper_example(),
            1.0,
        )
        .unwrap();
        assert!((u.u1[0] - -2.12).abs() < 1e-12, "{}", u.u1[0]);
    }

    #[test]
    fn zero_state_zero_control() {
        let u = synthesize_aggregate(
            &Roles::splat(StateVector::zeros(3)),
            &paper_systems(),
            &ScalingConfig::identity(3),
            &SwitchAssignment::paper_example(),
            1.0,
        )
        .unwrap();
        assert_eq!(u, AggregateControl::zeros(3));
    }

    #[test]
    fn even_split_of_worked_example() {
        let s = ScalingConfig::identity(3);
        let a = SwitchAssignment::paper_example();
        let u = synthesize_aggregate(&paper_states(), &paper_systems(), &s, &a, 1.0).unwrap();
        let c = split_control(&u, &s, &a, SplitPolicy::Even).unwrap();
        assert!((c.u1[2] - -1.06).abs() < 1e-12);
        assert!((c.u3[0] - -1.06).abs() < 1e-12);
        assert!(c.recombination_residual(&u, &s, &a) < 1e-12);
        let w = split_control(&u, &s, &a, SplitPolicy::WChannel).unwrap();
        assert_eq!(w.u1, vec![0.0; 3]);
        assert_eq!(w.u2, vec![0.0; 3]);
        assert!(w.recombination_residual(&u, &s, &a) < 1e-12);
    }

    #[test]
    fn zero_c_pair_routes_to_w() {
        let mut s = ScalingConfig::identity(3);
        s.d1 = vec![2.0, 0.5, 4.0];
        Reduction::WithoutZ.apply(&mut s);
        let a = SwitchAssignment::paper_example();
        let agg = AggregateControl {
            u1: vec![1.0, -2.0, 3.0],
            u2: vec![0.5, 0.25, -1.0],
        };
        for policy in [SplitPolicy::Even, SplitPolicy::WChannel] {
            let c = split_control(&agg, &s, &a, policy).unwrap();
            assert_eq!(c.u1, vec![0.0; 3]);
            assert_eq!(c.u2, vec![0.0; 3]);
            assert_eq!(c.u3, vec![0.5, -4.0, 0.75]);
            assert_eq!(c.u4, agg.u2);
        }
    }

    #[test]
    fn zero_aggregate_zero_controls() {
        let s = ScalingConfig::identity(3);
        let a = SwitchAssignment::paper_example();
        for policy in [SplitPolicy::Even, SplitPolicy::WChannel] {
            let c = split_control(&AggregateControl::zeros(3), &s, &a, policy).unwrap();
            assert_eq!(c, ControlVectors::zeros(3));
        }
    }

    #[test]
    fn unrealizable_slot() {
        let mut s = ScalingConfig::identity(3);
        s.c1[2] = 0.0; // slot 1 of block 1 has l = 3
        s.d1[0] = 0.0;
        let a = SwitchAssignment::paper_example();
        let agg = AggregateControl {
            u1: vec![1.0, 0.0, 0.0],
            u2: vec![0.0; 3],
        };
        let err = split_control(&agg, &s, &a, SplitPolicy::Even).unwrap_err();
        assert!(matches!(
            err,
            Error::Unrealizable {
                block: 1,
                slot: 1,
                ..
            }
        ));
        let agg = AggregateControl::zeros(3);
        assert!(split_control(&agg, &s, &a, SplitPolicy::Even).is_ok());
    }

    #[test]
    fn shared_l_index_goes_through_w() {
        let mut a = SwitchAssignment::paper_example();
        a.block1[1].l = 3; // slots 1 and 2 both read z1[3]
        let s = ScalingConfig::identity(3);
        let agg = AggregateControl {
            u1: vec![1.0, 2.0, 3.0],
            u2: vec![1.0, 1.0, 1.0],
        };
        let c = split_control(&agg, &s, &a, SplitPolicy::Even).unwrap();
        assert_eq!(c.u1[2], 0.0);
        assert_eq!(c.u3[0], 1.0);
        assert_eq!(c.u3[1], 2.0);
        assert!(c.recombination_residual(&agg, &s, &a) < 1e-15);
    }

    #[test]
    fn without_w_unit_coefficients() {
        let mut s = ScalingConfig::identity(3);
        Reduction::WithoutW.apply(&mut s);
        let states = paper_states();
        let systems = paper_systems();
        let a = SwitchAssignment::paper_example();
        let c = reduced_control(
            Reduction::WithoutW,
            &states,
            &systems,
            &s,
            &a,
            1.0,
            SplitPolicy::Even,
        )
        .unwrap();
        let e = scheme::compute_error(&states, &s, &a).unwrap();
        let f = systems.x1.eval(&states.x1).unwrap();
        let g = systems.y1.eval(&states.y1).unwrap();
        let h = systems.z1.eval(&states.z1).unwrap();
        // slot 1: (i, j, l) = (2, 1, 3)
        let expected = f[1] + g[0] - h[2] + e.e1[0];
        assert!((c.u1[2] - expected).abs() < 1e-12);
        assert_eq!(c.u3, vec![0.0; 3]);
    }

    #[test]
    fn reduction_requires_zeroed_scaling() {
        let err = reduced_control(
            Reduction::WithoutZ,
            &paper_states(),
            &paper_systems(),
            &ScalingConfig::identity(3),
            &SwitchAssignment::paper_example(),
            1.0,
            SplitPolicy::Even,
        )
        .unwrap_err();
        assert!(matches!(err, Error::ReductionMismatch { .. }));
    }

    #[test]
    fn reduction_zero_state() {
        for r in Reduction::ALL {
            let mut s = ScalingConfig::identity(3);
            r.apply(&mut s);
            let c = reduced_control(
                r,
                &Roles::splat(StateVector::zeros(3)),
                &paper_systems(),
                &s,
                &SwitchAssignment::paper_example(),
                1.0,
                SplitPolicy::Even,
            )
            .unwrap();
            assert_eq!(c, ControlVectors::zeros(3), "{r}");
        }
    }

    #[test]
    fn reduction_zero_coefficient() {
        let mut s = ScalingConfig::identity(3);
        Reduction::WithoutZ.apply(&mut s);
        s.d2[1] = 0.0;
        let err = reduced_control(
            Reduction::WithoutZ,
            &paper_states(),
            &paper_systems(),
            &s,
            &SwitchAssignment::paper_example(),
            1.0,
            SplitPolicy::Even,
        )
        .unwrap_err();
        assert!(matches!(err, Error::ZeroCoefficient { .. }));
    }

    #[test]
    fn reduction_zero_pairs() {
        assert_eq!(Reduction::WithoutZ.zero_pairs(), vec![CoefPair::C]);
        assert_eq!(Reduction::SecondBlockZ.zero_pairs(), vec![CoefPair::D]);
        assert!(Reduction::FirstBlockOnly.zero_pairs().is_empty());
        for r in Reduction::ALL {
            let mut s = ScalingConfig::identity(3);
            r.apply(&mut s);
            assert!(s.check(3, &r.zero_pairs()).is_empty(), "{r}");
            assert_eq!(r.name().parse::<Reduction>().unwrap(), r);
        }
    }

    #[test]
    fn gain_must_be_positive() {
        for gain in [0.0, -1.0, f64::NAN] {
            assert!(synthesize_aggregate(
                &paper_states(),
                &paper_systems(),
                &ScalingConfig::identity(3),
                &SwitchAssignment::paper_example(),
                gain,
            )
            .is_err());
        }
    }
}

//! The adaptive brickwork protocol: random two-site gates on links with an
//! active endpoint, paired occupation measurements, and a corrective mode
//! swap that steers towards the Néel pattern `1010...`.
//!
//! Sites are 0-indexed. Odd links are `(2j, 2j+1)`, even links are
//! `(2j+1, 2j+2 mod L)`; each link is read as `(left, right)` in ring order.
//!
//! Random draws are consumed from the per-trajectory stream in a fixed
//! order:
//! 1. initial state (only `random_half_filling`: one shuffle);
//! 2. unitary half-layer: for each link in order with an active endpoint,
//!    one draw choosing hopping or pairing;
//! 3. measurement half-layer: for each link in order, one uniform deciding
//!    whether to measure; if measured, one uniform per site (lower index
//!    first) for the Born outcomes, then one uniform for the feedback when
//!    the outcome is in the wrong order.
//!
//! With the default [`Unswapped::Keep`], inactive sites always hold their
//! target occupation, so a link with both endpoints inactive would read the
//! correct order with certainty; it is skipped and consumes no draws. Under
//! [`Unswapped::Deactivate`] that no longer holds and every link is eligible
//! for measurement.

use std::f64::consts::FRAC_PI_4;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fgs::{GateKind, GaussianState, LocalUnitary, QuadraticKernel};
use crate::observables::{self, TimeSeries};

/// Angle of both circuit gates, `U = exp(-i π/4 H)`.
pub const GATE_ANGLE: f64 = FRAC_PI_4;
/// Steps between full Gram-Schmidt passes over the annihilator matrix.
pub const ORTHONORMALIZE_EVERY: u64 = 10;

pub type TrajectoryRng = ChaCha8Rng;

/// Independent counter-based stream for trajectory `index` of a run.
pub fn trajectory_rng(seed: u64, index: u64) -> TrajectoryRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Classical active/inactive flags, one per site.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FlagRegister(Vec<bool>);

impl FlagRegister {
    pub fn all_active(sites: usize) -> Self {
        Self(vec![true; sites])
    }

    pub fn all_inactive(sites: usize) -> Self {
        Self(vec![false; sites])
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn set(&mut self, i: usize, value: bool) {
        self.0[i] = value;
    }

    pub fn set_pair(&mut self, i: usize, j: usize, value: bool) {
        self.0[i] = value;
        self.0[j] = value;
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    pub fn active_count(&self) -> usize {
        self.0.iter().filter(|&&f| f).count()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkParity {
    Odd,
    Even,
}

impl LinkParity {
    /// Links of this parity as `(left, right)` pairs in ring order.
    pub fn links(self, sites: usize) -> impl Iterator<Item = (usize, usize)> {
        let offset = match self {
            LinkParity::Odd => 0,
            LinkParity::Even => 1,
        };
        (0..sites / 2).map(move |j| {
            let left = 2 * j + offset;
            (left, (left + 1) % sites)
        })
    }
}

/// Which link parity carries which target ordering.
///
/// `Standard` drives towards `1010...`; `Swapped` exchanges the odd and
/// even rules, which is the same protocol translated by one site.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    #[default]
    Standard,
    Swapped,
}

/// Flag update after a wrong-order outcome whose feedback was not applied.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unswapped {
    /// Flags are left as they were.
    #[default]
    Keep,
    /// Both sites deactivate anyway.
    Deactivate,
}

/// How a measured `(left, right)` pair relates to the target pattern.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PairOutcome {
    /// `(0, 0)` or `(1, 1)`: nothing happens.
    Equal,
    /// Matches the target pattern on this link: both sites deactivate.
    Correct,
    /// Reversed pattern: swap with probability `r`, then deactivate.
    Wrong,
}

pub fn classify(
    parity: LinkParity,
    orientation: Orientation,
    left: bool,
    right: bool,
) -> PairOutcome {
    if left == right {
        return PairOutcome::Equal;
    }
    let odd_like = (parity == LinkParity::Odd) == (orientation == Orientation::Standard);
    // odd links want (1, 0), even links want (0, 1)
    if left == odd_like {
        PairOutcome::Correct
    } else {
        PairOutcome::Wrong
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    Neel,
    RandomHalfFilling,
    /// Explicit occupations such as `"1100"`.
    Bits(String),
}

impl InitialState {
    pub fn occupations<R: Rng + ?Sized>(&self, sites: usize, rng: &mut R) -> Result<Vec<bool>> {
        match self {
            InitialState::Neel => Ok((0..sites).map(|i| i % 2 == 0).collect()),
            InitialState::RandomHalfFilling => {
                let mut bits: Vec<bool> = (0..sites).map(|i| i < sites / 2).collect();
                bits.shuffle(rng);
                Ok(bits)
            }
            InitialState::Bits(s) => {
                let bits: Vec<bool> = s
                    .chars()
                    .map(|c| match c {
                        '0' => Ok(false),
                        '1' => Ok(true),
                        other => Err(Error::InvalidParameter(format!(
                            "initial bitstring contains {other:?}"
                        ))),
                    })
                    .collect::<Result<_>>()?;
                if bits.len() != sites {
                    return Err(Error::InvalidParameter(format!(
                        "initial bitstring has {} sites, expected {sites}",
                        bits.len()
                    )));
                }
                Ok(bits)
            }
        }
    }
}

/// When observables are recorded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeSchedule {
    /// Every `n` steps, starting at `t = 0`.
    Linear(u64),
    /// `t = 0` plus roughly `n` log-spaced times per decade, ending at `t_max`.
    Log(u32),
}

impl ProbeSchedule {
    pub fn times(&self, t_max: u64) -> Vec<u64> {
        match *self {
            ProbeSchedule::Linear(every) => {
                let every = every.max(1);
                (0..=t_max / every).map(|k| k * every).collect()
            }
            ProbeSchedule::Log(per_decade) => {
                let per_decade = per_decade.max(1) as f64;
                let mut out = vec![0];
                let mut k = 0.0;
                loop {
                    let t = 10f64.powf(k / per_decade).round() as u64;
                    if t > t_max {
                        break;
                    }
                    if out.last() != Some(&t) {
                        out.push(t);
                    }
                    k += 1.0;
                }
                if out.last() != Some(&t_max) {
                    out.push(t_max);
                }
                out
            }
        }
    }
}

fn default_probes() -> ProbeSchedule {
    ProbeSchedule::Linear(1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitParams {
    pub sites: usize,
    /// Measurement rate.
    pub p: f64,
    /// Feedback rate.
    pub r: f64,
    pub t_max: u64,
    pub seed: u64,
    pub initial_state: InitialState,
    #[serde(default = "default_probes")]
    pub probes: ProbeSchedule,
    #[serde(default)]
    pub orientation: Orientation,
    #[serde(default)]
    pub unswapped: Unswapped,
}

impl CircuitParams {
    pub fn new(sites: usize, p: f64, r: f64, t_max: u64, seed: u64) -> Self {
        Self {
            sites,
            p,
            r,
            t_max,
            seed,
            initial_state: InitialState::RandomHalfFilling,
            probes: default_probes(),
            orientation: Orientation::Standard,
            unswapped: Unswapped::Keep,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sites < 2 || self.sites % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "sites must be even and at least 2, got {}",
                self.sites
            )));
        }
        for (name, v) in [("p", self.p), ("r", self.r)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!(
                    "{name} = {v} is outside [0, 1]"
                )));
            }
        }
        if let ProbeSchedule::Linear(0) | ProbeSchedule::Log(0) = self.probes {
            return Err(Error::InvalidParameter(
                "probe spacing must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// What to record at each probe time of a quantum trajectory.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EntropyProbes {
    /// Region sizes as fractions of `L`; each adds an `s2_<fraction>` column.
    pub entropy_fractions: Vec<f64>,
}

impl EntropyProbes {
    pub fn entropy_columns(&self, sites: usize) -> Vec<(String, usize)> {
        self.entropy_fractions
            .iter()
            .map(|&f| {
                let cut = ((f * sites as f64).round() as usize).clamp(1, sites - 1);
                (format!("s2_{f}"), cut)
            })
            .collect()
    }
}

/// Auditable record of everything that touched the flags.
#[derive(Clone, Debug, PartialEq)]
pub enum Event {
    Gate {
        t: u64,
        link: (usize, usize),
        kind: GateKind,
    },
    Measurement {
        t: u64,
        link: (usize, usize),
        outcome: (bool, bool),
        swapped: bool,
        deactivated: bool,
    },
}

/// One quantum trajectory: Gaussian state, flags and its random stream.
#[derive(Clone, Debug)]
pub struct TrajectoryState {
    pub quantum: GaussianState,
    pub flags: FlagRegister,
    pub rng: TrajectoryRng,
    pub t: u64,
    p: f64,
    r: f64,
    orientation: Orientation,
    unswapped: Unswapped,
    hopping: LocalUnitary,
    pairing: LocalUnitary,
    events: Option<Vec<Event>>,
}

impl TrajectoryState {
    /// Initial product state with every flag active.
    pub fn new(params: &CircuitParams, index: u64) -> Result<Self> {
        params.validate()?;
        let mut rng = trajectory_rng(params.seed, index);
        let bits = params.initial_state.occupations(params.sites, &mut rng)?;
        Self::from_parts(
            GaussianState::product(&bits)?,
            FlagRegister::all_active(params.sites),
            rng,
            params,
        )
    }

    pub fn from_parts(
        quantum: GaussianState,
        flags: FlagRegister,
        rng: TrajectoryRng,
        params: &CircuitParams,
    ) -> Result<Self> {
        params.validate()?;
        if quantum.sites() != params.sites || flags.len() != params.sites {
            return Err(Error::InvalidSize(quantum.sites()));
        }
        let unit = |kind| -> Result<LocalUnitary> {
            QuadraticKernel::gate(kind, 0, 1, GATE_ANGLE, 2)?.exponentiate()
        };
        Ok(Self {
            quantum,
            flags,
            rng,
            t: 0,
            p: params.p,
            r: params.r,
            orientation: params.orientation,
            unswapped: params.unswapped,
            hopping: unit(GateKind::Hopping)?,
            pairing: unit(GateKind::Pairing)?,
            events: None,
        })
    }

    pub fn record_events(&mut self) {
        self.events.get_or_insert_with(Vec::new);
    }

    pub fn events(&self) -> &[Event] {
        self.events.as_deref().unwrap_or(&[])
    }

    pub fn sites(&self) -> usize {
        self.flags.len()
    }

    pub fn unitary_half_layer(&mut self, parity: LinkParity) {
        let sites = self.sites();
        for (a, b) in parity.links(sites) {
            if self.unswapped == Unswapped::Keep && !(self.flags.get(a) || self.flags.get(b)) {
                continue;
            }
            let kind = if self.rng.gen::<bool>() {
                GateKind::Hopping
            } else {
                GateKind::Pairing
            };
            let block = match kind {
                GateKind::Hopping => &self.hopping,
                GateKind::Pairing => &self.pairing,
            };
            self.quantum.apply_local(&block.for_link(a, b, sites));
            self.flags.set_pair(a, b, true);
            if let Some(ev) = self.events.as_mut() {
                ev.push(Event::Gate {
                    t: self.t,
                    link: (a, b),
                    kind,
                });
            }
        }
    }

    pub fn measurement_half_layer(&mut self, parity: LinkParity) -> Result<()> {
        for (a, b) in parity.links(self.sites()) {
            if self.unswapped == Unswapped::Keep && !(self.flags.get(a) || self.flags.get(b)) {
                continue;
            }
            if self.rng.gen::<f64>() >= self.p {
                continue;
            }
            let (lo, hi) = (a.min(b), a.max(b));
            let u_lo: f64 = self.rng.gen();
            let n_lo = self.quantum.measure(lo, u_lo)?;
            let u_hi: f64 = self.rng.gen();
            let n_hi = self.quantum.measure(hi, u_hi)?;
            let (left, right) = if a == lo { (n_lo, n_hi) } else { (n_hi, n_lo) };
            let (mut swapped, mut deactivated) = (false, false);
            match classify(parity, self.orientation, left, right) {
                PairOutcome::Equal => {}
                PairOutcome::Correct => deactivated = true,
                PairOutcome::Wrong => {
                    if self.rng.gen::<f64>() < self.r {
                        self.quantum.swap_modes(a, b)?;
                        swapped = true;
                        deactivated = true;
                    } else {
                        deactivated = self.unswapped == Unswapped::Deactivate;
                    }
                }
            }
            if deactivated {
                self.flags.set_pair(a, b, false);
            }
            if let Some(ev) = self.events.as_mut() {
                ev.push(Event::Measurement {
                    t: self.t,
                    link: (a, b),
                    outcome: (left, right),
                    swapped,
                    deactivated,
                });
            }
        }
        Ok(())
    }

    /// One time step: odd unitaries, odd measurements, even unitaries, even
    /// measurements.
    pub fn step(&mut self) -> Result<()> {
        self.unitary_half_layer(LinkParity::Odd);
        self.measurement_half_layer(LinkParity::Odd)?;
        self.unitary_half_layer(LinkParity::Even);
        self.measurement_half_layer(LinkParity::Even)?;
        self.t += 1;
        if self.t % ORTHONORMALIZE_EVERY == 0 {
            self.quantum.orthonormalize()?;
        }
        Ok(())
    }

    pub fn active_density(&self) -> f64 {
        observables::active_density(self.flags.as_slice())
    }

    pub fn charge_imbalance(&self) -> f64 {
        observables::charge_imbalance(&self.quantum)
    }
}

/// Runs trajectory `index` for `t_max` steps, recording `rho_active`,
/// `delta` and the requested entropies at every probe time.
pub fn run_trajectory(
    params: &CircuitParams,
    probes: &EntropyProbes,
    index: u64,
) -> Result<TimeSeries> {
    run_trajectory_with_state(params, probes, index).map(|(series, _)| series)
}

/// [`run_trajectory`] that also hands back the final state.
pub fn run_trajectory_with_state(
    params: &CircuitParams,
    probes: &EntropyProbes,
    index: u64,
) -> Result<(TimeSeries, TrajectoryState)> {
    let mut traj = TrajectoryState::new(params, index)?;
    let times = params.probes.times(params.t_max);
    let entropy_cols = probes.entropy_columns(params.sites);
    let mut rho = Vec::with_capacity(times.len());
    let mut delta = Vec::with_capacity(times.len());
    let mut entropies = vec![Vec::with_capacity(times.len()); entropy_cols.len()];
    let wrap = |step: u64, e: Error| Error::Trajectory {
        trajectory: index,
        step,
        source: Box::new(e),
    };
    for &t in &times {
        while traj.t < t {
            traj.step().map_err(|e| wrap(traj.t, e))?;
        }
        rho.push(traj.active_density());
        delta.push(traj.charge_imbalance());
        for (col, (_, cut)) in entropies.iter_mut().zip(&entropy_cols) {
            col.push(
                traj.quantum
                    .renyi_entropy(0..*cut, 2)
                    .map_err(|e| wrap(t, e))?,
            );
        }
    }
    let mut series = TimeSeries::new(times);
    series.push_column("rho_active", rho)?;
    series.push_column("delta", delta)?;
    for ((name, _), col) in entropy_cols.into_iter().zip(entropies) {
        series.push_column(&name, col)?;
    }
    Ok((series, traj))
}

#[cfg(test)]
mod tests;

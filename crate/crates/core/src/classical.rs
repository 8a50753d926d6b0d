//! Classical stochastic twin of the adaptive circuit and a branching
//! annihilating random walk for reference.
//!
//! The twin keeps one definite bitstring. Each angle-π/4 gate moves the
//! pair to either allowed configuration of its sector with probability
//! 1/2; measurements read the bits directly and the feedback swap is a
//! literal exchange.
//!
//! Draw order per step mirrors the quantum schedule: for each link of a
//! half-layer with an active endpoint, one draw for the gate kind and, if
//! the gate acts nontrivially, one for the new pair; then for each link one
//! uniform deciding the measurement and, on a wrong-order pair, one for the
//! feedback. Links with both endpoints inactive that already read the
//! target order are skipped without a draw, since measuring them changes
//! nothing. Bit-flip noise, when enabled, draws one uniform per site after
//! the step.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{
    classify, trajectory_rng, CircuitParams, FlagRegister, LinkParity, Orientation, PairOutcome,
    ProbeSchedule, Unswapped,
};
use crate::error::{Error, Result};
use crate::fgs::GateKind;
use crate::observables::{active_density, TimeSeries};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ClassicalState {
    pub bits: Vec<bool>,
    pub flags: FlagRegister,
    pub t: u64,
}

impl ClassicalState {
    /// All flags active.
    pub fn new(bits: Vec<bool>) -> Self {
        let flags = FlagRegister::all_active(bits.len());
        Self { bits, flags, t: 0 }
    }

    pub fn sites(&self) -> usize {
        self.bits.len()
    }

    pub fn parity(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count() % 2
    }

    /// `(1/L) sum_i |n_i - n_{i+1}|` with definite bits.
    pub fn charge_imbalance(&self) -> f64 {
        let l = self.sites();
        (0..l)
            .filter(|&i| self.bits[i] != self.bits[(i + 1) % l])
            .count() as f64
            / l as f64
    }
}

/// Bond `i` joins sites `i` and `i+1 mod L`; it holds a particle iff the two
/// bits agree.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BondConfig {
    pub particles: Vec<bool>,
}

impl BondConfig {
    pub fn count(&self) -> usize {
        self.particles.iter().filter(|&&b| b).count()
    }

    pub fn holes(&self) -> usize {
        self.particles.len() - self.count()
    }

    pub fn density(&self) -> f64 {
        if self.particles.is_empty() {
            return 0.0;
        }
        self.count() as f64 / self.particles.len() as f64
    }
}

pub fn bond_particles(bits: &[bool]) -> BondConfig {
    let l = bits.len();
    BondConfig {
        particles: (0..l).map(|i| bits[i] == bits[(i + 1) % l]).collect(),
    }
}

/// Random gate on link `(i, i+1 mod L)`. The caller checks eligibility.
pub fn classical_unitary_update<R: Rng + ?Sized>(
    state: &mut ClassicalState,
    i: usize,
    rng: &mut R,
) -> GateKind {
    let j = (i + 1) % state.sites();
    let kind = if rng.gen::<bool>() {
        GateKind::Hopping
    } else {
        GateKind::Pairing
    };
    let equal = state.bits[i] == state.bits[j];
    let acts = match kind {
        GateKind::Hopping => !equal,
        GateKind::Pairing => equal,
    };
    if acts {
        let b: bool = rng.gen();
        state.bits[i] = b;
        state.bits[j] = if equal { b } else { !b };
    }
    state.flags.set_pair(i, j, true);
    kind
}

/// Possibly measures link `(i, i+1 mod L)` and applies the feedback rules.
#[allow(clippy::too_many_arguments)]
pub fn classical_measure_feedback<R: Rng + ?Sized>(
    state: &mut ClassicalState,
    i: usize,
    parity: LinkParity,
    orientation: Orientation,
    unswapped: Unswapped,
    p: f64,
    r: f64,
    rng: &mut R,
) {
    let j = (i + 1) % state.sites();
    let outcome = classify(parity, orientation, state.bits[i], state.bits[j]);
    if outcome == PairOutcome::Correct && !state.flags.get(i) && !state.flags.get(j) {
        return;
    }
    if rng.gen::<f64>() >= p {
        return;
    }
    match outcome {
        PairOutcome::Equal => {}
        PairOutcome::Correct => state.flags.set_pair(i, j, false),
        PairOutcome::Wrong => {
            if rng.gen::<f64>() < r {
                state.bits.swap(i, j);
                state.flags.set_pair(i, j, false);
            } else if unswapped == Unswapped::Deactivate {
                state.flags.set_pair(i, j, false);
            }
        }
    }
}

fn unitary_sweep<R: Rng + ?Sized>(state: &mut ClassicalState, parity: LinkParity, rng: &mut R) {
    let l = state.sites();
    for (a, b) in parity.links(l) {
        if state.flags.get(a) || state.flags.get(b) {
            classical_unitary_update(state, a, rng);
        }
    }
}

fn measurement_sweep<R: Rng + ?Sized>(
    state: &mut ClassicalState,
    parity: LinkParity,
    params: &CircuitParams,
    rng: &mut R,
) {
    for (a, _) in parity.links(state.sites()) {
        classical_measure_feedback(
            state,
            a,
            parity,
            params.orientation,
            params.unswapped,
            params.p,
            params.r,
            rng,
        );
    }
}

/// Odd unitaries, odd measurements, even unitaries, even measurements.
pub fn classical_step<R: Rng + ?Sized>(
    state: &mut ClassicalState,
    params: &CircuitParams,
    rng: &mut R,
) {
    for parity in [LinkParity::Odd, LinkParity::Even] {
        unitary_sweep(state, parity, rng);
        measurement_sweep(state, parity, params, rng);
    }
    state.t += 1;
}

/// Flips each bit independently with probability `rate`. A flipped site is
/// marked active, as after a gate.
pub fn apply_bitflip_noise<R: Rng + ?Sized>(state: &mut ClassicalState, rate: f64, rng: &mut R) {
    if rate <= 0.0 {
        return;
    }
    for i in 0..state.bits.len() {
        if rng.gen::<f64>() < rate {
            state.bits[i] = !state.bits[i];
            state.flags.set(i, true);
        }
    }
}

/// Runs trajectory `index`, recording `rho_active`, `delta` and
/// `bond_density` at the probe times. `noise` is the bit-flip rate per step.
pub fn run_classical(params: &CircuitParams, noise: f64, index: u64) -> Result<TimeSeries> {
    params.validate()?;
    if !(0.0..=1.0).contains(&noise) {
        return Err(Error::InvalidParameter(format!(
            "noise rate {noise} is outside [0, 1]"
        )));
    }
    let mut rng = trajectory_rng(params.seed, index);
    let bits = params.initial_state.occupations(params.sites, &mut rng)?;
    let mut state = ClassicalState::new(bits);
    let times = params.probes.times(params.t_max);
    let mut rho = Vec::with_capacity(times.len());
    let mut delta = Vec::with_capacity(times.len());
    let mut bonds = Vec::with_capacity(times.len());
    for &t in &times {
        while state.t < t {
            classical_step(&mut state, params, &mut rng);
            apply_bitflip_noise(&mut state, noise, &mut rng);
        }
        rho.push(active_density(state.flags.as_slice()));
        delta.push(state.charge_imbalance());
        bonds.push(bond_particles(&state.bits).density());
    }
    let mut series = TimeSeries::new(times);
    series.push_column("rho_active", rho)?;
    series.push_column("delta", delta)?;
    series.push_column("bond_density", bonds)?;
    Ok(series)
}

fn default_branching() -> f64 {
    0.5
}

fn default_probes() -> ProbeSchedule {
    ProbeSchedule::Linear(1)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BarwInitial {
    /// Every site occupied.
    #[default]
    Full,
    Sites(Vec<usize>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarwParams {
    pub sites: usize,
    /// Annihilation probability on contact.
    pub q: f64,
    /// Probability that a move is a branching attempt rather than a hop.
    #[serde(default = "default_branching")]
    pub branching: f64,
    pub t_max: u64,
    pub seed: u64,
    #[serde(default)]
    pub initial: BarwInitial,
    #[serde(default = "default_probes")]
    pub probes: ProbeSchedule,
}

impl BarwParams {
    pub fn new(sites: usize, q: f64, t_max: u64, seed: u64) -> Self {
        Self {
            sites,
            q,
            branching: default_branching(),
            t_max,
            seed,
            initial: BarwInitial::Full,
            probes: default_probes(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sites < 3 {
            return Err(Error::InvalidParameter(format!(
                "a walk needs at least 3 sites, got {}",
                self.sites
            )));
        }
        for (name, v) in [("q", self.q), ("branching", self.branching)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!(
                    "{name} = {v} is outside [0, 1]"
                )));
            }
        }
        if let BarwInitial::Sites(s) = &self.initial {
            if let Some(&bad) = s.iter().find(|&&x| x >= self.sites) {
                return Err(Error::SiteOutOfRange {
                    site: bad,
                    sites: self.sites,
                });
            }
        }
        Ok(())
    }

    pub fn initial_occupation(&self) -> Vec<bool> {
        match &self.initial {
            BarwInitial::Full => vec![true; self.sites],
            BarwInitial::Sites(s) => {
                let mut occ = vec![false; self.sites];
                for &x in s {
                    occ[x] = true;
                }
                occ
            }
        }
    }
}

/// Hard-core particles on a ring.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BarwState {
    pub occupied: Vec<bool>,
    pub t: u64,
}

impl BarwState {
    pub fn count(&self) -> usize {
        self.occupied.iter().filter(|&&b| b).count()
    }

    pub fn density(&self) -> f64 {
        self.count() as f64 / self.occupied.len() as f64
    }
}

/// One update attempt at site `x`. A particle with an occupied neighbour
/// first annihilates with one of them with probability `q`; otherwise it
/// branches onto both neighbours (only if both are empty) with probability
/// `branching`, or else hops to a random empty neighbour.
pub fn barw_update<R: Rng + ?Sized>(
    state: &mut BarwState,
    x: usize,
    params: &BarwParams,
    rng: &mut R,
) {
    if !state.occupied[x] {
        return;
    }
    let l = state.occupied.len();
    let left = (x + l - 1) % l;
    let right = (x + 1) % l;
    let (ol, or) = (state.occupied[left], state.occupied[right]);
    if (ol || or) && rng.gen::<f64>() < params.q {
        let partner = match (ol, or) {
            (true, true) => {
                if rng.gen::<bool>() {
                    left
                } else {
                    right
                }
            }
            (true, false) => left,
            _ => right,
        };
        state.occupied[x] = false;
        state.occupied[partner] = false;
        return;
    }
    if rng.gen::<f64>() < params.branching {
        if !ol && !or {
            state.occupied[left] = true;
            state.occupied[right] = true;
        }
    } else {
        let target = if rng.gen::<bool>() { left } else { right };
        if !state.occupied[target] {
            state.occupied[x] = false;
            state.occupied[target] = true;
        }
    }
}

/// One time unit: `L` update attempts at uniformly random sites.
pub fn barw_step<R: Rng + ?Sized>(state: &mut BarwState, params: &BarwParams, rng: &mut R) {
    let l = state.occupied.len();
    for _ in 0..l {
        let x = rng.gen_range(0..l);
        barw_update(state, x, params, rng);
    }
    state.t += 1;
}

/// Particle density at the probe times, column `density`.
pub fn run_barw(params: &BarwParams, index: u64) -> Result<TimeSeries> {
    params.validate()?;
    let mut rng = trajectory_rng(params.seed, index);
    let mut state = BarwState {
        occupied: params.initial_occupation(),
        t: 0,
    };
    let times = params.probes.times(params.t_max);
    let mut density = Vec::with_capacity(times.len());
    for &t in &times {
        while state.t < t {
            barw_step(&mut state, params, &mut rng);
        }
        density.push(state.density());
    }
    let mut series = TimeSeries::new(times);
    series.push_column("density", density)?;
    Ok(series)
}

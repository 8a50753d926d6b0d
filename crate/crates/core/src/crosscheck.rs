//! Randomized differential testing of a Gaussian backend against the Fock
//! oracle.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ed::{FockVector, OracleGate};
use crate::error::Result;
use crate::fgs::{CovarianceMatrix, GateKind, GaussianState};

pub const COVARIANCE_TOL: f64 = 1e-8;
pub const RENYI_TOL: f64 = 1e-8;
pub const BORN_TOL: f64 = 1e-10;
// Requested outcomes rarer than this are flipped so both sides project onto
// a well-conditioned branch.
const FORCING_FLOOR: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum ScriptOp {
    Gate {
        kind: GateKind,
        i: usize,
        j: usize,
        angle: f64,
    },
    Swap {
        i: usize,
        j: usize,
    },
    Measure {
        site: usize,
        outcome: bool,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Script {
    pub initial: Vec<bool>,
    pub ops: Vec<ScriptOp>,
}

impl Script {
    /// A random mix of gates on arbitrary site pairs, mode swaps and
    /// measurements with requested outcomes.
    pub fn random<R: Rng + ?Sized>(sites: usize, depth: usize, rng: &mut R) -> Self {
        let initial = (0..sites).map(|_| rng.gen()).collect();
        let ops = (0..depth)
            .map(|_| {
                let i = rng.gen_range(0..sites);
                let j = (i + rng.gen_range(1..sites)) % sites;
                match rng.gen_range(0..10) {
                    0..=5 => ScriptOp::Gate {
                        kind: if rng.gen() {
                            GateKind::Hopping
                        } else {
                            GateKind::Pairing
                        },
                        i,
                        j,
                        angle: rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
                    },
                    6..=7 => ScriptOp::Swap { i, j },
                    _ => ScriptOp::Measure {
                        site: i,
                        outcome: rng.gen(),
                    },
                }
            })
            .collect();
        Self { initial, ops }
    }
}

/// The operations a Gaussian simulator must expose to be cross-checked.
pub trait GaussianBackend: Sized {
    fn from_product(occupations: &[bool]) -> Result<Self>;
    fn apply_gate(&mut self, kind: GateKind, i: usize, j: usize, angle: f64) -> Result<()>;
    fn swap_modes(&mut self, i: usize, j: usize) -> Result<()>;
    fn occupation(&self, i: usize) -> f64;
    /// Projects and returns the probability of `outcome`.
    fn project(&mut self, i: usize, outcome: bool) -> Result<f64>;
    fn covariance(&self) -> CovarianceMatrix;
    fn renyi_entropy(&self, region: std::ops::Range<usize>, n: u32) -> Result<f64>;
}

impl GaussianBackend for GaussianState {
    fn from_product(occupations: &[bool]) -> Result<Self> {
        GaussianState::product(occupations)
    }
    fn apply_gate(&mut self, kind: GateKind, i: usize, j: usize, angle: f64) -> Result<()> {
        GaussianState::apply_gate(self, kind, i, j, angle)
    }
    fn swap_modes(&mut self, i: usize, j: usize) -> Result<()> {
        GaussianState::swap_modes(self, i, j)
    }
    fn occupation(&self, i: usize) -> f64 {
        GaussianState::occupation(self, i)
    }
    fn project(&mut self, i: usize, outcome: bool) -> Result<f64> {
        GaussianState::project(self, i, outcome)
    }
    fn covariance(&self) -> CovarianceMatrix {
        GaussianState::covariance(self)
    }
    fn renyi_entropy(&self, region: std::ops::Range<usize>, n: u32) -> Result<f64> {
        GaussianState::renyi_entropy(self, region, n)
    }
}

/// Largest deviations seen while replaying one or more scripts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Deviation {
    pub covariance: f64,
    pub renyi: f64,
    pub born: f64,
}

impl Deviation {
    pub fn merge(self, other: Deviation) -> Deviation {
        Deviation {
            covariance: self.covariance.max(other.covariance),
            renyi: self.renyi.max(other.renyi),
            born: self.born.max(other.born),
        }
    }

    pub fn within_tolerance(&self) -> bool {
        self.covariance < COVARIANCE_TOL && self.renyi < RENYI_TOL && self.born < BORN_TOL
    }
}

fn compare<B: GaussianBackend>(backend: &B, oracle: &FockVector) -> Result<Deviation> {
    let sites = oracle.sites();
    let covariance = backend.covariance().max_abs_diff(&oracle.covariance());
    let mut renyi: f64 = 0.0;
    for cut in 1..sites {
        let a = backend.renyi_entropy(0..cut, 2)?;
        let b = oracle.renyi_entropy(0..cut, 2)?;
        renyi = renyi.max((a - b).abs());
    }
    Ok(Deviation {
        covariance,
        renyi,
        born: 0.0,
    })
}

/// Replays `script` on both sides, comparing after every operation.
pub fn replay<B: GaussianBackend>(script: &Script) -> Result<Deviation> {
    let mut backend = B::from_product(&script.initial)?;
    let mut oracle = FockVector::product(&script.initial)?;
    let mut worst = compare(&backend, &oracle)?;
    for op in &script.ops {
        match *op {
            ScriptOp::Gate { kind, i, j, angle } => {
                backend.apply_gate(kind, i, j, angle)?;
                oracle.apply(OracleGate::Gate(kind), i, j, angle)?;
            }
            ScriptOp::Swap { i, j } => {
                backend.swap_modes(i, j)?;
                oracle.apply(OracleGate::ModeSwap, i, j, 0.0)?;
            }
            ScriptOp::Measure { site, outcome } => {
                let p1 = oracle.occupation(site);
                worst.born = worst.born.max((backend.occupation(site) - p1).abs());
                let p_req = if outcome { p1 } else { 1.0 - p1 };
                let outcome = if p_req < FORCING_FLOOR {
                    !outcome
                } else {
                    outcome
                };
                let pb = backend.project(site, outcome)?;
                let po = oracle.project(site, outcome)?;
                worst.born = worst.born.max((pb - po).abs());
            }
        }
        worst = worst.merge(compare(&backend, &oracle)?);
    }
    Ok(worst)
}

/// Outcome of a randomized differential run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub scripts: usize,
    pub worst: Deviation,
    /// Failing scripts with their deviations, kept for replay.
    pub failures: Vec<(Script, Deviation)>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Runs `trials` random scripts of the given depth for every size.
pub fn check<B: GaussianBackend, R: Rng + ?Sized>(
    sizes: &[usize],
    depth: usize,
    trials: usize,
    rng: &mut R,
) -> Result<CheckReport> {
    let mut report = CheckReport::default();
    for &sites in sizes {
        for _ in 0..trials {
            let script = Script::random(sites, depth, rng);
            let dev = replay::<B>(&script)?;
            report.scripts += 1;
            report.worst = report.worst.merge(dev);
            if !dev.within_tolerance() {
                report.failures.push((script, dev));
            }
        }
    }
    Ok(report)
}

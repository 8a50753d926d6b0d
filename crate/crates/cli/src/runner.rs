//! Ensemble execution over a rayon pool with an index-ordered reduction.

use adaptive_fermions::circuit::{run_trajectory_with_state, CircuitParams, EntropyProbes};
use adaptive_fermions::classical::{run_barw, run_classical};
use adaptive_fermions::crosscheck::{self, CheckReport};
use adaptive_fermions::fgs::GaussianState;
use adaptive_fermions::observables::{
    chord_coordinate, EnsembleAccumulator, ProfilePoint, TimeSeries,
};
use adaptive_fermions::scaling::{
    collapse_score, collapse_transform, fit_log_chord, ChordFit, CollapseMode, Curve,
    ScalingExponents,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, Mode};
use crate::{CliError, Result};

/// Trajectories handed to the pool at a time; results of a chunk are
/// reduced in index order before the next one starts.
const CHUNK: u64 = 256;

/// Mean final entropy profile over the ensemble, cuts `1..L`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProfileSummary {
    pub points: Vec<ProfilePoint>,
    pub stderr: Vec<f64>,
    pub fit: ChordFit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ensemble {
    pub series: TimeSeries,
    pub profile: Option<ProfileSummary>,
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Pool(e.to_string()))
}

fn final_profile(state: &GaussianState) -> adaptive_fermions::Result<Vec<f64>> {
    (1..state.sites())
        .map(|cut| state.renyi_entropy(0..cut, 2))
        .collect()
}

type Outcome = (TimeSeries, Option<Vec<f64>>);

fn run_one(
    cfg: &ExperimentConfig,
    index: u64,
    want_profile: bool,
) -> adaptive_fermions::Result<Outcome> {
    match cfg.mode {
        Mode::Quantum => {
            let params = cfg.circuit.as_ref().expect("validated");
            let probes = EntropyProbes {
                entropy_fractions: cfg.entropy_cuts.clone(),
            };
            let (series, traj) = run_trajectory_with_state(params, &probes, index)?;
            let profile = if want_profile {
                Some(final_profile(&traj.quantum)?)
            } else {
                None
            };
            Ok((series, profile))
        }
        Mode::Classical => {
            let params = cfg.circuit.as_ref().expect("validated");
            Ok((
                run_classical(params, cfg.noise.unwrap_or(0.0), index)?,
                None,
            ))
        }
        Mode::Barw => Ok((
            run_barw(cfg.barw.as_ref().expect("validated"), index)?,
            None,
        )),
    }
}

/// Runs every trajectory of `cfg` on `threads` workers (0 picks the rayon
/// default). Means and errors do not depend on the thread count.
pub fn run_ensemble(
    cfg: &ExperimentConfig,
    threads: usize,
    want_profile: bool,
) -> Result<Ensemble> {
    cfg.validate()?;
    if want_profile && cfg.mode != Mode::Quantum {
        return Err(CliError::Config(
            "entropy profiles need quantum mode".into(),
        ));
    }
    let pool = pool(threads)?;
    let mut acc = EnsembleAccumulator::new();
    let mut prof = EnsembleAccumulator::new();
    let mut start = 0;
    while start < cfg.trajectories {
        let end = (start + CHUNK).min(cfg.trajectories);
        let chunk: Vec<_> = pool.install(|| {
            (start..end)
                .into_par_iter()
                .map(|i| run_one(cfg, i, want_profile))
                .collect()
        });
        for outcome in chunk {
            let (series, profile) = outcome?;
            acc.push(&series)?;
            if let Some(p) = profile {
                let mut s = TimeSeries::new((1..=p.len() as u64).collect());
                s.push_column("entropy", p)?;
                prof.push(&s)?;
            }
        }
        start = end;
    }
    let mut series = acc.finish()?;
    series
        .metadata
        .insert("mode".into(), format!("{:?}", cfg.mode).to_lowercase());
    series
        .metadata
        .insert("seed".into(), cfg.seed().to_string());
    if let Some(c) = &cfg.circuit {
        series
            .metadata
            .insert("initial_state".into(), format!("{:?}", c.initial_state));
    }
    let profile = if want_profile {
        let l = cfg.circuit.as_ref().expect("validated").sites;
        let avg = prof.finish()?;
        let col = avg.column("entropy").expect("profile column");
        let points: Vec<ProfilePoint> = avg
            .times
            .iter()
            .zip(&col.values)
            .map(|(&cut, &entropy)| ProfilePoint {
                cut: cut as usize,
                chord: chord_coordinate(l, cut as usize),
                entropy,
            })
            .collect();
        let fit = fit_log_chord(&points)?;
        Some(ProfileSummary {
            points,
            stderr: col.stderr.clone().unwrap_or_default(),
            fit,
        })
    } else {
        None
    };
    Ok(Ensemble { series, profile })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub p: f64,
    pub r: f64,
    pub rho_active: Option<f64>,
    pub delta: Option<f64>,
    pub alpha: Option<f64>,
    pub r_squared: Option<f64>,
    pub error: Option<String>,
}

fn steady_mean(series: &TimeSeries, column: &str, from: f64) -> Option<f64> {
    let values = series.values(column)?;
    let picked: Vec<f64> = series
        .times
        .iter()
        .zip(values)
        .filter(|(&t, _)| t as f64 >= from)
        .map(|(_, &v)| v)
        .collect();
    (!picked.is_empty()).then(|| picked.iter().sum::<f64>() / picked.len() as f64)
}

/// One row per grid point; failures are recorded in the row and the sweep
/// carries on.
pub fn run_sweep(cfg: &ExperimentConfig, threads: usize) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("no [sweep] table".into()))?;
    let mut rows = Vec::with_capacity(sweep.points.len());
    for &[p, r] in &sweep.points {
        let mut point = cfg.clone();
        point.sweep = None;
        let c = point.circuit.as_mut().expect("validated");
        c.p = p;
        c.r = r;
        let from = sweep.steady_fraction * c.t_max as f64;
        let want_profile = cfg.mode == Mode::Quantum;
        let row = match run_ensemble(&point, threads, want_profile) {
            Ok(ens) => SweepRow {
                p,
                r,
                rho_active: steady_mean(&ens.series, "rho_active", from),
                delta: steady_mean(&ens.series, "delta", from),
                alpha: ens.profile.as_ref().map(|s| s.fit.alpha),
                r_squared: ens.profile.as_ref().map(|s| s.fit.r_squared),
                error: None,
            },
            Err(e) => SweepRow {
                p,
                r,
                rho_active: None,
                delta: None,
                alpha: None,
                r_squared: None,
                error: Some(e.to_string()),
            },
        };
        rows.push(row);
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CollapseReport {
    /// Ensemble means before rescaling, transients dropped.
    pub curves: Vec<Curve>,
    pub transformed: Vec<Curve>,
    pub score: f64,
    /// `(label, score)` for each ±20% perturbation of θ and z.
    pub perturbed: Vec<(String, f64)>,
}

impl CollapseReport {
    pub fn reference_wins(&self) -> bool {
        self.perturbed.iter().all(|(_, s)| self.score < *s)
    }
}

/// Ensemble means of `column` for each key, times `>= t_min`.
pub fn collapse_curves(cfg: &ExperimentConfig, threads: usize, t_min: f64) -> Result<Vec<Curve>> {
    let c = cfg
        .collapse
        .as_ref()
        .ok_or_else(|| CliError::Config("no [collapse] table".into()))?;
    let mut curves = Vec::with_capacity(c.keys.len());
    for &key in &c.keys {
        let mut run = cfg.clone();
        run.collapse = None;
        let params: &mut CircuitParams = run.circuit.as_mut().expect("validated");
        match c.mode {
            CollapseMode::CriticalL => {
                params.sites = key as usize;
                params.p = c.p_c;
            }
            CollapseMode::OffCriticalP => params.p = key,
        }
        let ens = run_ensemble(&run, threads, false)?;
        curves.push(
            Curve::from_series(key, &ens.series, &c.column)?.restricted(t_min, f64::INFINITY),
        );
    }
    Ok(curves)
}

/// Scores the configured exponents against each ±20% perturbation.
pub fn score_collapse(cfg: &ExperimentConfig, curves: Vec<Curve>) -> Result<CollapseReport> {
    let c = cfg
        .collapse
        .as_ref()
        .ok_or_else(|| CliError::Config("no [collapse] table".into()))?;
    let exps = |theta: f64, z: f64| ScalingExponents::from_theta_z(theta, z, c.nu_par);
    let reference = exps(c.theta, c.z)?;
    let transformed = collapse_transform(&curves, c.mode, c.p_c, &reference)?;
    let score = collapse_score(&transformed)?;
    let mut perturbed = Vec::new();
    for f in [0.8, 1.2] {
        for (label, e) in [
            (format!("theta*{f}"), exps(c.theta * f, c.z)?),
            (format!("z*{f}"), exps(c.theta, c.z * f)?),
        ] {
            let s = collapse_score(&collapse_transform(&curves, c.mode, c.p_c, &e)?)?;
            perturbed.push((label, s));
        }
    }
    Ok(CollapseReport {
        curves,
        transformed,
        score,
        perturbed,
    })
}

pub fn run_collapse(cfg: &ExperimentConfig, threads: usize) -> Result<CollapseReport> {
    let curves = collapse_curves(cfg, threads, adaptive_fermions::scaling::TRANSIENT_CUTOFF)?;
    score_collapse(cfg, curves)
}

/// Randomized differential check of the Gaussian simulator against the Fock
/// oracle.
pub fn oracle_check(
    sizes: &[usize],
    depth: usize,
    trials: usize,
    seed: u64,
) -> Result<CheckReport> {
    if let Some(&l) = sizes
        .iter()
        .find(|&&l| l > adaptive_fermions::ed::MAX_SITES || l < 2)
    {
        return Err(CliError::Config(format!(
            "oracle sizes must lie in [2, {}], got {l}",
            adaptive_fermions::ed::MAX_SITES
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(crosscheck::check::<GaussianState, _>(
        sizes, depth, trials, &mut rng,
    )?)
}

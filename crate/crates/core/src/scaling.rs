//! Power-law fits, finite-size-scaling collapses and critical-point scans.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observables::{ProfilePoint, TimeSeries};

/// Transients before this time are excluded by [`auto_window`].
pub const TRANSIENT_CUTOFF: f64 = 100.0;
/// A final decade with a smaller local slope counts as saturated.
pub const PLATEAU_SLOPE: f64 = 0.05;
pub const COLLAPSE_GRID: usize = 64;
const MIN_FIT_POINTS: usize = 10;
const MIN_CHORD_POINTS: usize = 5;

/// Parity-conserving class reference values.
pub struct PcReference;

impl PcReference {
    pub const THETA: f64 = 0.286;
    pub const Z: f64 = 1.744;
    pub const DIFFUSIVE_THETA: f64 = 0.5;
    pub const DIFFUSIVE_Z: f64 = 2.0;
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingExponents {
    beta: f64,
    nu_par: f64,
    nu_perp: f64,
}

impl ScalingExponents {
    pub fn new(beta: f64, nu_par: f64, nu_perp: f64) -> Result<Self> {
        for (name, v) in [("beta", beta), ("nu_par", nu_par), ("nu_perp", nu_perp)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} = {v} must be positive"
                )));
            }
        }
        Ok(Self {
            beta,
            nu_par,
            nu_perp,
        })
    }

    /// `beta = theta * nu_par`, `nu_perp = nu_par / z`.
    pub fn from_theta_z(theta: f64, z: f64, nu_par: f64) -> Result<Self> {
        Self::new(theta * nu_par, nu_par, nu_par / z)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn nu_par(&self) -> f64 {
        self.nu_par
    }

    pub fn nu_perp(&self) -> f64 {
        self.nu_perp
    }

    pub fn theta(&self) -> f64 {
        self.beta / self.nu_par
    }

    pub fn z(&self) -> f64 {
        self.nu_par / self.nu_perp
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y = slope * x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    let n = x.len();
    if n != y.len() || n < 2 {
        return Err(Error::Fit(format!(
            "need matching samples, got {} and {}",
            n,
            y.len()
        )));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx <= f64::EPSILON * nf * mx.abs().max(1.0).powi(2) {
        return Err(Error::Fit("abscissa is constant".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - slope * a - intercept).powi(2))
        .sum();
    let sst: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope_stderr = if n > 2 {
        (ssr / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    let r_squared = if sst > 0.0 { 1.0 - ssr / sst } else { 1.0 };
    Ok(LinearFit {
        slope,
        intercept,
        slope_stderr,
        r_squared,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    /// Positive for a decay.
    pub exponent: f64,
    pub stderr: f64,
    pub points: usize,
    pub window: (f64, f64),
}

/// Decay exponent `a` of `y ~ t^-a` over `window` (inclusive).
pub fn fit_powerlaw(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<PowerLawFit> {
    let (mut lx, mut ly) = (Vec::new(), Vec::new());
    for (&t, &v) in times.iter().zip(values) {
        if t < window.0 || t > window.1 {
            continue;
        }
        if !(v > 0.0) || !(t > 0.0) {
            return Err(Error::Fit(format!(
                "nonpositive sample ({t}, {v}) in window"
            )));
        }
        lx.push(t.ln());
        ly.push(v.ln());
    }
    if lx.len() < MIN_FIT_POINTS {
        return Err(Error::Fit(format!(
            "{} points in window {:?}, need {MIN_FIT_POINTS}",
            lx.len(),
            window
        )));
    }
    let fit = linear_fit(&lx, &ly)?;
    Ok(PowerLawFit {
        exponent: -fit.slope,
        stderr: fit.slope_stderr,
        points: lx.len(),
        window,
    })
}

/// [`fit_powerlaw`] on a named column.
pub fn powerlaw_exponent(
    series: &TimeSeries,
    column: &str,
    window: (f64, f64),
) -> Result<PowerLawFit> {
    let values = series
        .values(column)
        .ok_or_else(|| Error::SchemaMismatch(format!("no column {column}")))?;
    let times: Vec<f64> = series.times.iter().map(|&t| t as f64).collect();
    fit_powerlaw(&times, values, window)
}

/// Drops `t < 100`, and the final decade if its local slope is flatter than
/// [`PLATEAU_SLOPE`].
pub fn auto_window(times: &[f64], values: &[f64]) -> (f64, f64) {
    let t_end = times.iter().copied().fold(0.0, f64::max);
    let last_decade = (t_end / 10.0, t_end);
    let saturated = fit_powerlaw(times, values, last_decade)
        .map(|f| f.exponent.abs() < PLATEAU_SLOPE)
        .unwrap_or(false);
    if saturated {
        (TRANSIENT_CUTOFF, last_decade.0)
    } else {
        (TRANSIENT_CUTOFF, t_end)
    }
}

/// One curve of a scaling family, keyed by `L` or by the control parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub key: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Curve {
    pub fn from_series(key: f64, series: &TimeSeries, column: &str) -> Result<Self> {
        let y = series
            .values(column)
            .ok_or_else(|| Error::SchemaMismatch(format!("no column {column}")))?
            .to_vec();
        Ok(Self {
            key,
            x: series.times.iter().map(|&t| t as f64).collect(),
            y,
        })
    }

    /// Keeps the points with `lo <= x <= hi`.
    pub fn restricted(&self, lo: f64, hi: f64) -> Self {
        let (x, y) = self
            .x
            .iter()
            .zip(&self.y)
            .filter(|(&x, _)| x >= lo && x <= hi)
            .map(|(&x, &y)| (x, y))
            .unzip();
        Self {
            key: self.key,
            x,
            y,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollapseMode {
    /// Curves keyed by `L` at `p = p_c`: `(t / L^z, n L^(z θ))`.
    CriticalL,
    /// Curves keyed by `p`: `(|p - p_c| t^(1/ν∥), n |p - p_c|^(-β))`.
    OffCriticalP,
}

pub fn collapse_transform(
    curves: &[Curve],
    mode: CollapseMode,
    p_c: f64,
    exponents: &ScalingExponents,
) -> Result<Vec<Curve>> {
    curves
        .iter()
        .map(|c| {
            let (sx, sy, px) = match mode {
                CollapseMode::CriticalL => {
                    let z = exponents.z();
                    (c.key.powf(-z), c.key.powf(z * exponents.theta()), 1.0)
                }
                CollapseMode::OffCriticalP => {
                    let d = (c.key - p_c).abs();
                    if d == 0.0 {
                        return Err(Error::InvalidParameter(format!(
                            "curve at p = {} sits on the critical point",
                            c.key
                        )));
                    }
                    (d, d.powf(-exponents.beta()), 1.0 / exponents.nu_par())
                }
            };
            Ok(Curve {
                key: c.key,
                x: c.x.iter().map(|&t| sx * t.powf(px)).collect(),
                y: c.y.iter().map(|&n| sy * n).collect(),
            })
        })
        .collect()
}

/// Log-log view of a curve, positive points only, sorted by abscissa.
fn log_points(c: &Curve) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> =
        c.x.iter()
            .zip(&c.y)
            .filter(|(&x, &y)| x > 0.0 && y > 0.0)
            .map(|(&x, &y)| (x.ln(), y.ln()))
            .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.dedup_by(|a, b| a.0 == b.0);
    pts
}

fn interpolate(pts: &[(f64, f64)], x: f64) -> f64 {
    let k = pts.partition_point(|p| p.0 < x);
    if k == 0 {
        return pts[0].1;
    }
    if k == pts.len() {
        return pts[k - 1].1;
    }
    let (x0, y0) = pts[k - 1];
    let (x1, y1) = pts[k];
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// Mean pairwise squared difference of `ln y` across curves, on a 64-point
/// grid uniform in `ln x` over the common support. Two curves whose `ln y`
/// differ by a constant `c` score `c^2`.
pub fn collapse_score(curves: &[Curve]) -> Result<f64> {
    if curves.len() < 2 {
        return Err(Error::Fit("collapse needs at least two curves".into()));
    }
    let logs: Vec<Vec<(f64, f64)>> = curves.iter().map(log_points).collect();
    if logs.iter().any(|p| p.len() < 2) {
        return Err(Error::Fit(
            "curve with fewer than two positive points".into(),
        ));
    }
    let lo = logs
        .iter()
        .map(|p| p[0].0)
        .fold(f64::NEG_INFINITY, f64::max);
    let hi = logs
        .iter()
        .map(|p| p[p.len() - 1].0)
        .fold(f64::INFINITY, f64::min);
    if !(hi > lo) {
        return Err(Error::Fit("curves do not overlap".into()));
    }
    let m = logs.len();
    let pairs = (m * (m - 1) / 2) as f64;
    let mut total = 0.0;
    let mut vals = vec![0.0; m];
    for g in 0..COLLAPSE_GRID {
        let x = lo + (hi - lo) * g as f64 / (COLLAPSE_GRID - 1) as f64;
        for (v, p) in vals.iter_mut().zip(&logs) {
            *v = interpolate(p, x);
        }
        let mut s = 0.0;
        for a in 0..m {
            for b in a + 1..m {
                s += (vals[a] - vals[b]).powi(2);
            }
        }
        total += s / pairs;
    }
    Ok(total / COLLAPSE_GRID as f64)
}

/// Scores every candidate and returns them sorted best first.
pub fn rank_collapses(
    curves: &[Curve],
    mode: CollapseMode,
    p_c: f64,
    candidates: &[ScalingExponents],
) -> Result<Vec<(ScalingExponents, f64)>> {
    let mut out = candidates
        .iter()
        .map(|e| {
            Ok((
                *e,
                collapse_score(&collapse_transform(curves, mode, p_c, e)?)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| a.1.total_cmp(&b.1));
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub p_c: f64,
    pub theta: f64,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub p_c: f64,
    pub theta: f64,
    pub table: Vec<ScanRow>,
}

/// Picks the `(p_c, θ)` for which `ln y + θ ln t`, with `y` interpolated
/// linearly in the control parameter between neighbouring curves, is
/// flattest over `window`. All curves must share their abscissae.
pub fn scan_critical_point(
    family: &[Curve],
    pc_grid: &[f64],
    theta_grid: &[f64],
    window: (f64, f64),
) -> Result<ScanResult> {
    if family.len() < 2 || pc_grid.is_empty() || theta_grid.is_empty() {
        return Err(Error::Fit(
            "scan needs two curves and nonempty grids".into(),
        ));
    }
    let mut fam: Vec<&Curve> = family.iter().collect();
    fam.sort_by(|a, b| a.key.total_cmp(&b.key));
    let x = &fam[0].x;
    if fam.iter().any(|c| &c.x != x || c.y.len() != x.len()) {
        return Err(Error::SchemaMismatch(
            "family curves have different abscissae".into(),
        ));
    }
    let idx: Vec<usize> = (0..x.len())
        .filter(|&i| x[i] >= window.0 && x[i] <= window.1 && x[i] > 0.0)
        .collect();
    if idx.len() < 3 {
        return Err(Error::Fit(format!(
            "window {window:?} holds {} points",
            idx.len()
        )));
    }
    let (kmin, kmax) = (fam[0].key, fam[fam.len() - 1].key);
    let mut table = Vec::with_capacity(pc_grid.len() * theta_grid.len());
    for &pc in pc_grid {
        if pc < kmin || pc > kmax {
            return Err(Error::InvalidParameter(format!(
                "candidate {pc} outside the family range [{kmin}, {kmax}]"
            )));
        }
        let k = fam.partition_point(|c| c.key < pc).clamp(1, fam.len() - 1);
        let (a, b) = (fam[k - 1], fam[k]);
        let w = (pc - a.key) / (b.key - a.key);
        let mut ly = Vec::with_capacity(idx.len());
        for &i in &idx {
            if !(a.y[i] > 0.0 && b.y[i] > 0.0) {
                return Err(Error::Fit(format!("nonpositive value at t = {}", x[i])));
            }
            ly.push((1.0 - w) * a.y[i].ln() + w * b.y[i].ln());
        }
        for &theta in theta_grid {
            let r: Vec<f64> = idx
                .iter()
                .zip(&ly)
                .map(|(&i, &v)| v + theta * x[i].ln())
                .collect();
            let mean = r.iter().sum::<f64>() / r.len() as f64;
            let score = r.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / r.len() as f64;
            table.push(ScanRow {
                p_c: pc,
                theta,
                score,
            });
        }
    }
    let best = *table
        .iter()
        .min_by(|a, b| a.score.total_cmp(&b.score))
        .expect("nonempty grid");
    Ok(ScanResult {
        p_c: best.p_c,
        theta: best.theta,
        table,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChordFit {
    pub alpha: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least squares of the entropy against the chord coordinate.
pub fn fit_log_chord(profile: &[ProfilePoint]) -> Result<ChordFit> {
    if profile.len() < MIN_CHORD_POINTS {
        return Err(Error::Fit(format!(
            "{} cuts, need at least {MIN_CHORD_POINTS}",
            profile.len()
        )));
    }
    let x: Vec<f64> = profile.iter().map(|p| p.chord).collect();
    let y: Vec<f64> = profile.iter().map(|p| p.entropy).collect();
    let fit = linear_fit(&x, &y)?;
    Ok(ChordFit {
        alpha: fit.slope,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
    })
}

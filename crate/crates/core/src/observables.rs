//! Diagnostics of single trajectories and ensemble reduction.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fgs::GaussianState;

/// One named observable sampled at the probe times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub values: Vec<f64>,
    /// Standard error of the mean, present after ensemble averaging.
    pub stderr: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub times: Vec<u64>,
    pub columns: Vec<Column>,
    pub metadata: BTreeMap<String, String>,
}

impl TimeSeries {
    pub fn new(times: Vec<u64>) -> Self {
        Self {
            times,
            ..Self::default()
        }
    }

    pub fn push_column(&mut self, name: &str, values: Vec<f64>) -> Result<()> {
        if values.len() != self.times.len() {
            return Err(Error::SchemaMismatch(format!(
                "column {name} has {} values for {} times",
                values.len(),
                self.times.len()
            )));
        }
        self.columns.push(Column {
            name: name.to_string(),
            values,
            stderr: None,
        });
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn values(&self, name: &str) -> Option<&[f64]> {
        self.column(name).map(|c| c.values.as_slice())
    }

    pub fn names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }
}

/// Fraction of active flags.
pub fn active_density(flags: &[bool]) -> f64 {
    if flags.is_empty() {
        return 0.0;
    }
    flags.iter().filter(|&&f| f).count() as f64 / flags.len() as f64
}

/// `(1/L) sum_i |n_i - n_{i+1}|` on the ring.
pub fn imbalance_from_occupations(occupations: &[f64]) -> f64 {
    let l = occupations.len();
    if l == 0 {
        return 0.0;
    }
    (0..l)
        .map(|i| (occupations[i] - occupations[(i + 1) % l]).abs())
        .sum::<f64>()
        / l as f64
}

/// Charge imbalance between neighbours of a single trajectory.
pub fn charge_imbalance(state: &GaussianState) -> f64 {
    imbalance_from_occupations(&state.occupations())
}

/// `log((L/π) sin(π |A| / L))`.
pub fn chord_coordinate(sites: usize, cut: usize) -> f64 {
    let l = sites as f64;
    ((l / PI) * (PI * cut as f64 / l).sin()).ln()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub cut: usize,
    pub chord: f64,
    pub entropy: f64,
}

/// Rényi entropies of the blocks `[0, cut)` with their chord coordinates.
pub fn entropy_profile(state: &GaussianState, n: u32, cuts: &[usize]) -> Result<Vec<ProfilePoint>> {
    let l = state.sites();
    cuts.iter()
        .map(|&cut| {
            if cut == 0 || cut >= l {
                return Err(Error::InvalidRegion(format!("cut {cut} outside (0, {l})")));
            }
            Ok(ProfilePoint {
                cut,
                chord: chord_coordinate(l, cut),
                entropy: state.renyi_entropy(0..cut, n)?,
            })
        })
        .collect()
}

/// Running mean and standard error over trajectories, reduced in the order
/// the series are pushed.
#[derive(Clone, Debug)]
pub struct EnsembleAccumulator {
    template: Option<TimeSeries>,
    count: usize,
    mean: Vec<Vec<f64>>,
    m2: Vec<Vec<f64>>,
}

impl Default for EnsembleAccumulator {
    fn default() -> Self {
        Self::new()
    }
}

impl EnsembleAccumulator {
    pub fn new() -> Self {
        Self {
            template: None,
            count: 0,
            mean: Vec::new(),
            m2: Vec::new(),
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn push(&mut self, series: &TimeSeries) -> Result<()> {
        match &self.template {
            None => {
                let mut template = TimeSeries::new(series.times.clone());
                template.metadata = series.metadata.clone();
                for c in &series.columns {
                    template.columns.push(Column {
                        name: c.name.clone(),
                        values: Vec::new(),
                        stderr: None,
                    });
                }
                self.mean = series
                    .columns
                    .iter()
                    .map(|c| vec![0.0; c.values.len()])
                    .collect();
                self.m2 = self.mean.clone();
                self.template = Some(template);
            }
            Some(t) => {
                if t.times != series.times {
                    return Err(Error::SchemaMismatch("probe times differ".into()));
                }
                let same = t.columns.len() == series.columns.len()
                    && t.columns
                        .iter()
                        .zip(&series.columns)
                        .all(|(a, b)| a.name == b.name);
                if !same {
                    return Err(Error::SchemaMismatch(format!(
                        "columns {:?} vs {:?}",
                        t.names(),
                        series.names()
                    )));
                }
            }
        }
        if series
            .columns
            .iter()
            .any(|c| c.values.len() != series.times.len())
        {
            return Err(Error::SchemaMismatch("ragged column".into()));
        }
        self.count += 1;
        let n = self.count as f64;
        for ((mean, m2), col) in self.mean.iter_mut().zip(&mut self.m2).zip(&series.columns) {
            for ((mu, s), &x) in mean.iter_mut().zip(m2.iter_mut()).zip(&col.values) {
                let d = x - *mu;
                *mu += d / n;
                *s += d * (x - *mu);
            }
        }
        Ok(())
    }

    pub fn finish(self) -> Result<TimeSeries> {
        let mut out = self
            .template
            .ok_or_else(|| Error::SchemaMismatch("empty ensemble".into()))?;
        let n = self.count as f64;
        for ((col, mean), m2) in out.columns.iter_mut().zip(self.mean).zip(self.m2) {
            let stderr = m2
                .iter()
                .map(|&s| {
                    if self.count > 1 {
                        (s.max(0.0) / (n - 1.0)).sqrt() / n.sqrt()
                    } else {
                        0.0
                    }
                })
                .collect();
            col.values = mean;
            col.stderr = Some(stderr);
        }
        out.metadata
            .insert("trajectories".into(), self.count.to_string());
        Ok(out)
    }
}

/// Mean and standard error per column and time.
pub fn ensemble_average(series: &[TimeSeries]) -> Result<TimeSeries> {
    let mut acc = EnsembleAccumulator::new();
    for s in series {
        acc.push(s)?;
    }
    acc.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bits(s: &str) -> Vec<bool> {
        s.chars().map(|c| c == '1').collect()
    }

    #[test]
    fn active_density_examples() {
        assert_eq!(active_density(&bits("1111")), 1.0);
        assert_eq!(active_density(&bits("0000")), 0.0);
        assert_eq!(active_density(&bits("1100")), 0.5);
    }

    #[test]
    fn charge_imbalance_examples() {
        let neel = GaussianState::product(&bits("10101010")).unwrap();
        assert_eq!(charge_imbalance(&neel), 1.0);
        assert_eq!(imbalance_from_occupations(&[0.5; 6]), 0.0);
        let s = GaussianState::product(&bits("1100")).unwrap();
        assert_eq!(charge_imbalance(&s), 0.5);
    }

    #[test]
    fn profile_of_product_state_is_flat_zero() {
        let s = GaussianState::product(&bits("101100")).unwrap();
        let prof = entropy_profile(&s, 2, &[1, 2, 3, 4, 5]).unwrap();
        assert!(prof.iter().all(|p| p.entropy.abs() < 1e-12));
        assert!((prof[2].chord - (6.0 / PI).ln()).abs() < 1e-12);
        assert!(entropy_profile(&s, 2, &[6]).is_err());
    }

    #[test]
    fn profile_matches_complements_for_pure_states() {
        let mut s = GaussianState::product(&bits("10110010")).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for step in 0..60 {
            let i = step % 8;
            let kind = if rng.gen() {
                crate::fgs::GateKind::Hopping
            } else {
                crate::fgs::GateKind::Pairing
            };
            s.apply_gate(kind, i, (i + 1) % 8, std::f64::consts::FRAC_PI_4)
                .unwrap();
        }
        let cuts: Vec<usize> = (1..8).collect();
        let prof = entropy_profile(&s, 2, &cuts).unwrap();
        for p in &prof {
            let rest = s.renyi_entropy(p.cut..8, 2).unwrap();
            assert!((p.entropy - rest).abs() < 1e-8);
        }
        assert!(prof[3].entropy > 1e-3);
    }

    fn series(values: &[f64]) -> TimeSeries {
        let mut s = TimeSeries::new((0..values.len() as u64).collect());
        s.push_column("x", values.to_vec()).unwrap();
        s
    }

    #[test]
    fn identical_copies_average_to_themselves() {
        let s = series(&[0.3, 0.7, 0.1]);
        let avg = ensemble_average(&[s.clone(), s.clone(), s.clone()]).unwrap();
        assert_eq!(avg.values("x").unwrap(), s.values("x").unwrap());
        assert_eq!(
            avg.column("x").unwrap().stderr.as_deref(),
            Some(&[0.0; 3][..])
        );
    }

    #[test]
    fn two_series_average() {
        let avg = ensemble_average(&[series(&[1.0, 2.0]), series(&[3.0, 5.0])]).unwrap();
        let v = avg.values("x").unwrap();
        assert!((v[0] - 2.0).abs() < 1e-15 && (v[1] - 3.5).abs() < 1e-15);
        let se = avg.column("x").unwrap().stderr.clone().unwrap();
        // sample std of {1, 3} is sqrt(2); divided by sqrt(2)
        assert!((se[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mismatched_schemas_are_rejected() {
        let mut other = TimeSeries::new(vec![0, 1]);
        other.push_column("y", vec![0.0, 0.0]).unwrap();
        assert!(ensemble_average(&[series(&[1.0, 2.0]), other]).is_err());
        assert!(ensemble_average(&[series(&[1.0, 2.0]), series(&[1.0])]).is_err());
        assert!(ensemble_average(&[]).is_err());
        let mut s = TimeSeries::new(vec![0, 1]);
        assert!(s.push_column("z", vec![1.0]).is_err());
    }

    #[test]
    fn stderr_shrinks_like_inverse_sqrt_n() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut draw = |n: usize| {
            let runs: Vec<TimeSeries> = (0..n).map(|_| series(&[rng.gen::<f64>()])).collect();
            ensemble_average(&runs)
                .unwrap()
                .column("x")
                .unwrap()
                .stderr
                .clone()
                .unwrap()[0]
        };
        // average over repetitions to tame the noise of the estimate itself
        let small: f64 = (0..20).map(|_| draw(50)).sum::<f64>() / 20.0;
        let large: f64 = (0..20).map(|_| draw(200)).sum::<f64>() / 20.0;
        let ratio = small / large;
        assert!((ratio - 2.0).abs() < 0.2, "ratio {ratio}");
    }
}

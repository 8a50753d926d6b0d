//! CSV tables and metadata sidecars.

use std::io::Write;
use std::path::{Path, PathBuf};

use adaptive_fermions::observables::TimeSeries;
use adaptive_fermions::scaling::Curve;

use crate::config::ExperimentConfig;
use crate::runner::{ProfileSummary, SweepRow};
use crate::{CliError, Result};

/// 17 significant digits, enough to round-trip an `f64`.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Header `t,<col>_mean,<col>_stderr,...`, one row per probe time.
pub fn write_series<W: Write>(mut w: W, series: &TimeSeries) -> Result<()> {
    let mut header = vec!["t".to_string()];
    for c in &series.columns {
        header.push(format!("{}_mean", c.name));
        header.push(format!("{}_stderr", c.name));
    }
    writeln!(w, "{}", header.join(","))?;
    for (k, t) in series.times.iter().enumerate() {
        let mut row = vec![t.to_string()];
        for c in &series.columns {
            row.push(num(c.values[k]));
            row.push(num(c.stderr.as_ref().map_or(0.0, |s| s[k])));
        }
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn write_profile<W: Write>(mut w: W, profile: &ProfileSummary) -> Result<()> {
    writeln!(w, "cut,chord,entropy_mean,entropy_stderr")?;
    for (p, se) in profile.points.iter().zip(&profile.stderr) {
        writeln!(
            w,
            "{},{},{},{}",
            p.cut,
            num(p.chord),
            num(p.entropy),
            num(*se)
        )?;
    }
    Ok(())
}

pub fn write_sweep<W: Write>(mut w: W, rows: &[SweepRow]) -> Result<()> {
    writeln!(w, "p,r,rho_active,delta,alpha,r_squared,error")?;
    let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
    for row in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            num(row.p),
            num(row.r),
            opt(row.rho_active),
            opt(row.delta),
            opt(row.alpha),
            opt(row.r_squared),
            row.error.as_deref().unwrap_or("").replace([',', '\n'], ";")
        )?;
    }
    Ok(())
}

pub fn write_curves<W: Write>(mut w: W, curves: &[Curve]) -> Result<()> {
    writeln!(w, "key,x,y")?;
    for c in curves {
        for (x, y) in c.x.iter().zip(&c.y) {
            writeln!(w, "{},{},{}", num(c.key), num(*x), num(*y))?;
        }
    }
    Ok(())
}

/// `<output>.meta.toml` next to the data file.
pub fn sidecar_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.toml");
    output.with_file_name(name)
}

/// Config echo plus seed, ensemble size and code version.
pub fn metadata(cfg: &ExperimentConfig) -> Result<String> {
    let mut table = toml::Table::new();
    table.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    table.insert("seed".into(), toml::Value::Integer(cfg.seed() as i64));
    table.insert(
        "trajectories".into(),
        toml::Value::Integer(cfg.trajectories as i64),
    );
    let echo = toml::Value::try_from(cfg).map_err(|e| CliError::Config(e.to_string()))?;
    table.insert("config".into(), echo);
    toml::to_string(&table).map_err(|e| CliError::Config(e.to_string()))
}

/// Writes `body` to `path` and the metadata sidecar next to it.
pub fn write_with_sidecar(
    path: &Path,
    cfg: &ExperimentConfig,
    body: impl FnOnce(&mut Vec<u8>) -> Result<()>,
) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut buf = Vec::new();
    body(&mut buf)?;
    std::fs::write(path, buf)?;
    std::fs::write(sidecar_path(path), metadata(cfg)?)?;
    Ok(())
}

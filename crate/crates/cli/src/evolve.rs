use std::path::PathBuf;

use ini::{Ini, Properties};
use num_complex::Complex64;

use taibleson::evolution::{solve_master, time_series_csv, ForcingSignal};
use taibleson::radial::parse_complex;
use taibleson::{FieldParams, InnerTail, RadialProfile};

/// A master-equation run read from a sectioned `key = value` file.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolveConfig {
    pub params: FieldParams,
    pub kmin: i64,
    pub initial: Vec<Complex64>,
    pub forcing_times: Vec<f64>,
    pub forcing: Vec<Vec<Complex64>>,
    pub output_times: Vec<f64>,
    pub output_file: Option<PathBuf>,
}

fn section<'a>(ini: &'a Ini, name: &str) -> Result<&'a Properties, String> {
    ini.section(Some(name)).ok_or_else(|| format!("missing section [{name}]"))
}

fn key<'a>(props: &'a Properties, sec: &str, name: &str) -> Result<&'a str, String> {
    props.get(name).ok_or_else(|| format!("[{sec}] missing key `{name}`"))
}

fn number<T: std::str::FromStr>(props: &Properties, sec: &str, name: &str) -> Result<T, String> {
    let raw = key(props, sec, name)?;
    raw.trim().parse().map_err(|_| format!("[{sec}] {name} = `{raw}` is not a number"))
}

fn reals(raw: &str, sec: &str, name: &str) -> Result<Vec<f64>, String> {
    raw.split(',')
        .map(|s| s.trim().parse().map_err(|_| format!("[{sec}] {name}: `{}` is not a number", s.trim())))
        .collect()
}

fn values(raw: &str, sec: &str, name: &str, width: usize) -> Result<Vec<Complex64>, String> {
    let v = raw
        .split(',')
        .map(|s| parse_complex(s.trim()).map_err(|e| format!("[{sec}] {name}: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    if v.len() != width {
        return Err(format!("[{sec}] {name}: {} values for a window of {width} crowns", v.len()));
    }
    Ok(v)
}

impl EvolveConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let ini = Ini::load_from_str(text).map_err(|e| format!("config: {e}"))?;
        let field = section(&ini, "field")?;
        let params = FieldParams::new(
            number(field, "field", "q")?,
            number(field, "field", "n")?,
            number(field, "field", "alpha")?,
        )
        .map_err(|e| format!("[field] {e}"))?;

        let window = section(&ini, "window")?;
        let kmin: i64 = number(window, "window", "kmin")?;
        let kmax: i64 = number(window, "window", "kmax")?;
        if kmax < kmin {
            return Err(format!("[window] kmax = {kmax} is below kmin = {kmin}"));
        }
        let width = (kmax - kmin + 1) as usize;

        let initial = values(key(section(&ini, "initial")?, "initial", "values")?, "initial", "values", width)?;

        let forcing_sec = section(&ini, "forcing")?;
        let forcing_times = reals(key(forcing_sec, "forcing", "times")?, "forcing", "times")?;
        let rows = forcing_times.len().saturating_sub(1);
        let mut forcing = Vec::with_capacity(rows);
        for i in 0..rows {
            let name = format!("f{i}");
            forcing.push(values(key(forcing_sec, "forcing", &name)?, "forcing", &name, width)?);
        }

        let output = section(&ini, "output")?;
        let output_times = reals(key(output, "output", "times")?, "output", "times")?;
        let output_file = output.get("file").map(PathBuf::from);

        Ok(EvolveConfig { params, kmin, initial, forcing_times, forcing, output_times, output_file })
    }

    fn profile(&self, coeffs: &[Complex64]) -> taibleson::Result<RadialProfile> {
        RadialProfile::new(self.params, self.kmin, coeffs.to_vec(), InnerTail::Zero)
    }

    /// The `t,k,re,im` time series at the output times.
    pub fn solve(&self) -> taibleson::Result<String> {
        let x0 = self.profile(&self.initial)?;
        let profiles = self.forcing.iter().map(|c| self.profile(c)).collect::<taibleson::Result<Vec<_>>>()?;
        let f = ForcingSignal::new(self.forcing_times.clone(), profiles)?;
        let ys = solve_master(&x0, &f, &self.output_times)?;
        Ok(time_series_csv(&self.output_times, &ys))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CONFIG: &str = "
[field]
q = 2
n = 1
alpha = 1

[window]
kmin = 0
kmax = 1

[initial]
values = 1, -2

[forcing]
times = 0, 1
f0 = 0, 0

[output]
times = 0, 1
";

    #[test]
    fn parses_sections() {
        let c = EvolveConfig::parse(CONFIG).unwrap();
        assert_eq!(c.kmin, 0);
        assert_eq!(c.initial, vec![Complex64::new(1.0, 0.0), Complex64::new(-2.0, 0.0)]);
        assert_eq!(c.forcing.len(), 1);
        assert_eq!(c.output_times, vec![0.0, 1.0]);
        assert!(c.output_file.is_none());
    }

    #[test]
    fn reports_offending_key() {
        let broken = CONFIG.replace("kmax = 1", "kmax = x");
        assert!(EvolveConfig::parse(&broken).unwrap_err().contains("[window] kmax"));
        let short = CONFIG.replace("values = 1, -2", "values = 1");
        assert!(EvolveConfig::parse(&short).unwrap_err().contains("1 values for a window of 2"));
        let missing = CONFIG.replace("f0 = 0, 0", "");
        assert!(EvolveConfig::parse(&missing).unwrap_err().contains("`f0`"));
    }
}

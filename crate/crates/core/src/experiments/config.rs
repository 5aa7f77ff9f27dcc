//! Flat `key = value` scenario files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::channel::{fixtures, read_angle_file, MeanAngle, PathAngles};
use crate::constellation::Modulation;
use crate::error::{Error, Result};

/// Pipeline producing one curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mode {
    /// Dynamic subarrays and digital precoder from statistical CSI.
    Statistical,
    /// Statistical-CSI analog part, per-channel digital precoder.
    Mixed,
    /// Both parts designed per channel from the channel matrix.
    Instantaneous,
    /// Contiguous fixed subarrays.
    Fixed,
    /// Equal-gain blocks with identity digital precoding.
    NoPrecoding,
    /// Fully digital precoder under the total power constraint only.
    Unconstrained,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Statistical => "statistical",
            Mode::Mixed => "mixed",
            Mode::Instantaneous => "instantaneous",
            Mode::Fixed => "fixed",
            Mode::NoPrecoding => "no_precoding",
            Mode::Unconstrained => "unconstrained",
        }
    }

    /// Phase shifters used by the architecture.
    pub fn phase_shifters(self, n_t: usize, n_rf: usize) -> usize {
        match self {
            Mode::Unconstrained => n_t * n_rf,
            _ => n_t,
        }
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "statistical" => Mode::Statistical,
            "mixed" => Mode::Mixed,
            "instantaneous" => Mode::Instantaneous,
            "fixed" => Mode::Fixed,
            "no_precoding" => Mode::NoPrecoding,
            "unconstrained" => Mode::Unconstrained,
            other => return Err(Error::Config(format!("unknown mode '{other}'"))),
        })
    }
}

/// Where the path angles come from.
#[derive(Debug, Clone, PartialEq)]
pub enum AngleSource {
    Fixed(PathAngles),
    Sampled { mean_aoa: MeanAngle, mean_aod: f64, spread: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub n_r: usize,
    pub n_t: usize,
    pub n_rf: usize,
    pub n_s: usize,
    pub modulation: Modulation,
    pub paths: usize,
    pub snr_db: Vec<f64>,
    pub power: f64,
    pub angles: AngleSource,
    pub modes: Vec<Mode>,
    pub seed: u64,
    /// Independent angle draws averaged per curve (sampled angles only).
    pub csi_draws: usize,
    pub n_channel: usize,
    pub n_noise: usize,
    pub restarts: usize,
    pub max_iter: usize,
    pub epsilon: f64,
    /// Run the manifold ascent; otherwise keep the initial digital precoder.
    pub ascent: bool,
    /// Emit the shifted bound curves next to the statistical curve.
    pub bounds: bool,
    pub energy: bool,
    pub digital_iters: usize,
    pub digital_noise: usize,
    pub oracle_draws: usize,
    pub checks: bool,
    pub outdir: PathBuf,
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|_| Error::Config(format!("bad value '{s}' for '{key}'"))))
        .collect()
}

/// `start:step:stop` (inclusive) or a comma-separated list.
fn parse_grid(v: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = v.split(':').map(str::trim).collect();
    if parts.len() == 3 {
        let nums: Vec<f64> = parts
            .iter()
            .map(|p| p.parse::<f64>().map_err(|_| Error::Config(format!("bad grid '{v}'"))))
            .collect::<Result<_>>()?;
        let (start, step, stop) = (nums[0], nums[1], nums[2]);
        if step == 0.0 || (stop - start) / step < 0.0 {
            return Err(Error::Config(format!("grid '{v}' does not reach its end")));
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        return Ok((0..=n).map(|i| start + step * i as f64).collect());
    }
    parse_list("snr_db", v)
}

struct Table {
    entries: BTreeMap<String, String>,
    base: PathBuf,
}

impl Table {
    fn take(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key)
    }

    fn get<T: FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        match self.take(key) {
            None => Ok(default),
            Some(v) => v.parse::<T>().map_err(|_| Error::Config(format!("bad value '{v}' for '{key}'"))),
        }
    }

    fn require<T: FromStr>(&mut self, key: &str) -> Result<T> {
        let v = self.take(key).ok_or_else(|| Error::Config(format!("missing key '{key}'")))?;
        v.parse::<T>().map_err(|_| Error::Config(format!("bad value '{v}' for '{key}'")))
    }

    fn path(&self, v: &str) -> PathBuf {
        let p = Path::new(v);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }
}

impl Scenario {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Scenario::parse(&text, &base)
    }

    /// Parses the config text; relative file paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value'", no + 1)))?;
            if entries.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key '{}'", no + 1, k.trim())));
            }
        }
        let mut t = Table { entries, base: base.to_path_buf() };

        let name: String = t.require("name")?;
        let n_r = t.require("n_r")?;
        let n_t = t.require("n_t")?;
        let n_rf = t.require("n_rf")?;
        let n_s = t.require("n_s")?;
        let modulation: Modulation = t.require("modulation")?;
        let snr_db = parse_grid(&t.take("snr_db").ok_or_else(|| Error::Config("missing key 'snr_db'".into()))?)?;
        let modes: Vec<Mode> = match t.take("modes") {
            Some(v) => parse_list::<String>("modes", &v)?.iter().map(|m| m.parse()).collect::<Result<_>>()?,
            None => vec![Mode::Statistical],
        };

        let angles_kind = t.get("angles", String::from("sampled"))?;
        let angles = match angles_kind.as_str() {
            "sampled" => {
                let mean_aoa = match t.get("mean_aoa", String::from("uniform"))?.as_str() {
                    "uniform" => MeanAngle::Uniform,
                    v => MeanAngle::Fixed(v.parse().map_err(|_| Error::Config(format!("bad mean_aoa '{v}'")))?),
                };
                let mean_aod = t.require("mean_aod")?;
                let spread = t.get("spread", std::f64::consts::PI / 18.0)?;
                AngleSource::Sampled { mean_aoa, mean_aod, spread }
            }
            "file" => {
                let (aoa_file, aod_file): (String, String) = (t.require("aoa_file")?, t.require("aod_file")?);
                let aoa = read_angle_file(&t.path(&aoa_file))?;
                let aod = read_angle_file(&t.path(&aod_file))?;
                AngleSource::Fixed(PathAngles::new(aoa, aod).map_err(|e| Error::Config(e.to_string()))?)
            }
            fixture => AngleSource::Fixed(
                fixtures::by_name(fixture)
                    .ok_or_else(|| Error::FixtureMissing(format!("no fixture named '{fixture}'")))?,
            ),
        };
        let paths = match &angles {
            AngleSource::Fixed(a) => {
                let l = t.get("paths", a.n_paths())?;
                if l != a.n_paths() {
                    return Err(Error::Config(format!("paths = {l} but the angle set has {}", a.n_paths())));
                }
                l
            }
            AngleSource::Sampled { .. } => t.require("paths")?,
        };

        let outdir_raw: String = t.get("outdir", String::from("results"))?;
        let scenario = Scenario {
            name,
            n_r,
            n_t,
            n_rf,
            n_s,
            modulation,
            paths,
            snr_db,
            power: t.get("power", 1.0)?,
            angles,
            modes,
            seed: t.get("seed", 1)?,
            csi_draws: t.get("csi_draws", 1)?,
            n_channel: t.get("n_channel", crate::capacity::DEFAULT_N_CHANNEL)?,
            n_noise: t.get("n_noise", crate::capacity::DEFAULT_N_NOISE)?,
            restarts: t.get("restarts", 8)?,
            max_iter: t.get("max_iter", 500)?,
            epsilon: t.get("epsilon", 1e-4)?,
            ascent: t.get("ascent", true)?,
            bounds: t.get("bounds", false)?,
            energy: t.get("energy", false)?,
            digital_iters: t.get("digital_iters", 100)?,
            digital_noise: t.get("digital_noise", 200)?,
            oracle_draws: t.get("oracle_draws", 20)?,
            checks: t.get("checks", true)?,
            outdir: t.path(&outdir_raw),
        };
        if let Some(k) = t.entries.keys().next() {
            return Err(Error::Config(format!("unknown key '{k}'")));
        }
        scenario.validate()?;
        Ok(scenario)
    }

    /// Structural checks done before any computation.
    pub fn validate(&self) -> Result<()> {
        let dims =
            [("n_r", self.n_r), ("n_t", self.n_t), ("n_rf", self.n_rf), ("n_s", self.n_s), ("paths", self.paths)];
        if let Some((k, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("'{k}' must be positive")));
        }
        if !(self.n_s <= self.n_rf && self.n_rf <= self.n_t) {
            return Err(Error::Config(format!(
                "need n_s <= n_rf <= n_t, got {} <= {} <= {}",
                self.n_s, self.n_rf, self.n_t
            )));
        }
        if self.snr_db.is_empty() {
            return Err(Error::Config("empty SNR grid".into()));
        }
        if self.power.is_nan() || self.power <= 0.0 {
            return Err(Error::Config("power must be positive".into()));
        }
        if self.n_channel == 0 || self.n_noise == 0 || self.csi_draws == 0 || self.restarts == 0 {
            return Err(Error::Config("Monte Carlo budgets, draws and restarts must be positive".into()));
        }
        if let AngleSource::Sampled { spread, .. } = self.angles {
            if spread.is_nan() || spread <= 0.0 {
                return Err(Error::Config("spread must be positive".into()));
            }
        }
        let needs_blocks = self.modes.iter().any(|m| matches!(m, Mode::Fixed | Mode::NoPrecoding));
        if needs_blocks && !self.n_t.is_multiple_of(self.n_rf) {
            return Err(Error::Config(format!("fixed subarrays need n_rf | n_t, got {} and {}", self.n_t, self.n_rf)));
        }
        if self.modes.contains(&Mode::NoPrecoding) && self.n_s != self.n_rf {
            return Err(Error::Config("no_precoding mode needs n_s == n_rf".into()));
        }
        crate::constellation::SignalSet::new(self.modulation, self.n_s).map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn scenario_dir(&self) -> PathBuf {
        self.outdir.join(&self.name)
    }
}

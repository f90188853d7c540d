//! Flat key-value run configuration.
//!
//! One `key = value` per line, `#` starts a comment. Exactly one of the
//! physical block (`nu, nu_r, rho0, alpha_bar, gravity, j, alpha, beta,
//! chi, t_b, h, lx1, lx2`) or the dimensionless block (`ra, pr, k, l, m,
//! g` plus `ax, ay`) must be present. Unknown keys are rejected.

use mrb_core::attractor::{EnsembleSpec, Metric};
use mrb_core::basis::DomainSpec;
use mrb_core::integrate::{ModelKind, Scheme};
use mrb_core::params::{derive_dimensionless, DimensionlessParams, PhysicalParams};
use mrb_core::Error;
use std::collections::BTreeMap;
use std::path::Path;

const PHYSICAL_KEYS: &[&str] = &[
    "nu", "nu_r", "rho0", "alpha_bar", "gravity", "j", "alpha", "beta", "chi", "t_b", "h", "lx1",
    "lx2",
];
const DIMENSIONLESS_KEYS: &[&str] = &["ra", "pr", "k", "l", "m", "g"];
const OTHER_KEYS: &[&str] = &[
    "ax",
    "ay",
    "mv",
    "nh",
    "nmodes",
    "nmodes_u",
    "nmodes_gamma",
    "nmodes_theta",
    "model",
    "scheme",
    "dt",
    "horizon",
    "snapshot_every",
    "log_every",
    "seed",
    "init",
    "init_checkpoint",
    "init_radius_u",
    "init_radius_gamma",
    "init_radius_theta",
    "blob_amp",
    "blob_x",
    "blob_y",
    "blob_z",
    "blob_width",
    "blob_width_z",
    "roll_amp",
    "roll_noise",
    "c1",
    "calibrate_samples",
    "rel_tol",
    "ball_tol",
    "ensemble_members",
    "radius_u",
    "radius_gamma",
    "radius_theta",
    "burn_in",
    "window",
    "cadence",
    "metric",
    "k_list",
];

/// Initial-state recipe.
#[derive(Debug, Clone, PartialEq)]
pub enum InitKind {
    Zero,
    /// Random coefficients rescaled to exact per-field radii.
    Random,
    /// Temperature blob added to the conduction profile.
    Blob,
    /// Single convection-roll temperature mode plus small noise.
    Roll,
    /// Restart from a checkpoint file.
    Checkpoint(String),
}

/// Fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub domain: DomainSpec,
    pub dp: DimensionlessParams,
    /// Present only when the physical block was given.
    pub physical: Option<PhysicalParams>,
    pub model: ModelKind,
    pub scheme: Scheme,
    pub dt: Option<f64>,
    pub horizon: f64,
    pub snapshot_every: Option<usize>,
    pub log_every: Option<usize>,
    pub seed: u64,
    pub init: InitKind,
    pub init_radius: [f64; 3],
    pub blob: BlobSpec,
    pub roll_amp: f64,
    pub roll_noise: f64,
    /// Agmon constant; calibrated at runtime when absent.
    pub c1: Option<f64>,
    pub calibrate_samples: usize,
    pub rel_tol: f64,
    pub ball_tol: f64,
    pub ensemble: EnsembleSpec,
    pub burn_in: f64,
    pub window: f64,
    pub cadence: usize,
    pub metric: Metric,
    pub k_list: Vec<f64>,
}

/// Gaussian temperature blob parameters.
#[derive(Debug, Clone, Copy)]
pub struct BlobSpec {
    pub amp: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub width: f64,
    pub width_z: f64,
}

fn parse_kv(text: &str) -> Result<BTreeMap<String, String>, Error> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Config(format!("line {}: expected `key = value`", lineno + 1)));
        };
        let key = k.trim().to_string();
        let val = v.trim().to_string();
        if map.insert(key.clone(), val).is_some() {
            return Err(Error::Config(format!("duplicate key `{key}`")));
        }
    }
    Ok(map)
}

struct Cfg {
    map: BTreeMap<String, String>,
}

impl Cfg {
    fn has(&self, k: &str) -> bool {
        self.map.contains_key(k)
    }
    fn f64(&self, k: &str) -> Result<Option<f64>, Error> {
        match self.map.get(k) {
            None => Ok(None),
            Some(v) => v
                .parse::<f64>()
                .map(Some)
                .map_err(|e| Error::Config(format!("key `{k}`: {e}"))),
        }
    }
    fn f64_req(&self, k: &str) -> Result<f64, Error> {
        self.f64(k)?.ok_or_else(|| Error::Config(format!("missing required key `{k}`")))
    }
    fn usize_or(&self, k: &str, default: usize) -> Result<usize, Error> {
        match self.map.get(k) {
            None => Ok(default),
            Some(v) => v
                .parse::<usize>()
                .map_err(|e| Error::Config(format!("key `{k}`: {e}"))),
        }
    }
    fn u64_or(&self, k: &str, default: u64) -> Result<u64, Error> {
        match self.map.get(k) {
            None => Ok(default),
            Some(v) => v.parse::<u64>().map_err(|e| Error::Config(format!("key `{k}`: {e}"))),
        }
    }
    fn str_or(&self, k: &str, default: &str) -> String {
        self.map.get(k).cloned().unwrap_or_else(|| default.to_string())
    }
}

/// Parses a configuration file.
pub fn parse_config(text: &str) -> Result<RunConfig, Error> {
    let map = parse_kv(text)?;
    for key in map.keys() {
        let known = PHYSICAL_KEYS.contains(&key.as_str())
            || DIMENSIONLESS_KEYS.contains(&key.as_str())
            || OTHER_KEYS.contains(&key.as_str());
        if !known {
            return Err(Error::Config(format!("unknown key `{key}`")));
        }
    }
    let cfg = Cfg { map };

    let has_phys = PHYSICAL_KEYS.iter().any(|k| cfg.has(k));
    let has_dim = DIMENSIONLESS_KEYS.iter().any(|k| cfg.has(k));
    if has_phys && has_dim {
        return Err(Error::Config(
            "both physical and dimensionless parameter blocks present; give exactly one".into(),
        ));
    }
    if !has_phys && !has_dim {
        return Err(Error::Config("no parameter block present; give exactly one".into()));
    }

    let (dp, physical) = if has_phys {
        if cfg.has("ax") || cfg.has("ay") {
            return Err(Error::Config(
                "ax/ay are derived from the physical block; remove them".into(),
            ));
        }
        let p = PhysicalParams {
            nu: cfg.f64_req("nu")?,
            nu_r: cfg.f64_req("nu_r")?,
            rho0: cfg.f64_req("rho0")?,
            alpha_bar: cfg.f64_req("alpha_bar")?,
            g: cfg.f64_req("gravity")?,
            j: cfg.f64_req("j")?,
            alpha: cfg.f64_req("alpha")?,
            beta: cfg.f64_req("beta")?,
            chi: cfg.f64_req("chi")?,
            t_b: cfg.f64_req("t_b")?,
            h: cfg.f64_req("h")?,
            lx1: cfg.f64_req("lx1")?,
            lx2: cfg.f64_req("lx2")?,
        };
        (derive_dimensionless(&p)?, Some(p))
    } else {
        let ax = cfg.f64_req("ax")?;
        let ay = cfg.f64_req("ay")?;
        (
            DimensionlessParams::new(
                cfg.f64_req("ra")?,
                cfg.f64_req("pr")?,
                cfg.f64_req("k")?,
                cfg.f64_req("l")?,
                cfg.f64_req("m")?,
                cfg.f64_req("g")?,
                ax,
                ay,
            )?,
            None,
        )
    };

    let nmodes = cfg.usize_or("nmodes", 256)?;
    let domain = DomainSpec {
        ax: dp.ax,
        ay: dp.ay,
        mv: cfg.usize_or("mv", 32)?,
        nh: cfg.usize_or("nh", 8)?,
        n_scalar: cfg.usize_or("nmodes_theta", nmodes)?,
        n_vector: cfg.usize_or("nmodes_gamma", nmodes)?,
        n_stokes: cfg.usize_or("nmodes_u", nmodes)?,
    };
    domain.validate()?;

    let model = match cfg.str_or("model", "micropolar").as_str() {
        "micropolar" => ModelKind::Micropolar,
        "newtonian" => ModelKind::Newtonian,
        other => return Err(Error::Config(format!("unknown model `{other}`"))),
    };
    let scheme = match cfg.str_or("scheme", "cnab2").as_str() {
        "euler" | "imex-euler" => Scheme::ImexEuler,
        "cnab2" => Scheme::Cnab2,
        other => return Err(Error::Config(format!("unknown scheme `{other}`"))),
    };
    let init = match cfg.str_or("init", "zero").as_str() {
        "zero" => InitKind::Zero,
        "random" => InitKind::Random,
        "blob" => InitKind::Blob,
        "roll" => InitKind::Roll,
        "checkpoint" => InitKind::Checkpoint(
            cfg.map
                .get("init_checkpoint")
                .cloned()
                .ok_or_else(|| Error::Config("init = checkpoint needs init_checkpoint".into()))?,
        ),
        other => return Err(Error::Config(format!("unknown init `{other}`"))),
    };
    let metric = match cfg.str_or("metric", "x").as_str() {
        "x" | "X" => Metric::X,
        "z" | "Z" => Metric::Z,
        other => return Err(Error::Config(format!("unknown metric `{other}`"))),
    };
    let k_list: Vec<f64> = match cfg.map.get("k_list") {
        None => Vec::new(),
        Some(s) => s
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| Error::Config(format!("k_list: {e}")))?,
    };

    let seed = cfg.u64_or("seed", 0)?;
    let horizon = cfg.f64("horizon")?.unwrap_or(1.0);
    if horizon < 0.0 {
        return Err(Error::Config("horizon must be nonnegative".into()));
    }
    let dt = cfg.f64("dt")?;
    if let Some(dt) = dt {
        if !(dt > 0.0) {
            return Err(Error::Config("dt must be positive".into()));
        }
    }

    Ok(RunConfig {
        domain,
        dp,
        physical,
        model,
        scheme,
        dt,
        horizon,
        snapshot_every: match cfg.usize_or("snapshot_every", 0)? {
            0 => None,
            n => Some(n),
        },
        log_every: match cfg.usize_or("log_every", 0)? {
            0 => None,
            n => Some(n),
        },
        seed,
        init,
        init_radius: [
            cfg.f64("init_radius_u")?.unwrap_or(0.1),
            cfg.f64("init_radius_gamma")?.unwrap_or(0.1),
            cfg.f64("init_radius_theta")?.unwrap_or(0.1),
        ],
        blob: BlobSpec {
            amp: cfg.f64("blob_amp")?.unwrap_or(0.75),
            x: cfg.f64("blob_x")?.unwrap_or(dp.ax / 2.0),
            y: cfg.f64("blob_y")?.unwrap_or(dp.ay / 2.0),
            z: cfg.f64("blob_z")?.unwrap_or(0.25),
            width: cfg.f64("blob_width")?.unwrap_or(0.35),
            width_z: cfg.f64("blob_width_z")?.unwrap_or(0.15),
        },
        roll_amp: cfg.f64("roll_amp")?.unwrap_or(0.1),
        roll_noise: cfg.f64("roll_noise")?.unwrap_or(1e-3),
        c1: cfg.f64("c1")?,
        calibrate_samples: cfg.usize_or("calibrate_samples", 200)?,
        rel_tol: cfg.f64("rel_tol")?.unwrap_or(1e-6),
        ball_tol: cfg.f64("ball_tol")?.unwrap_or(1e-3),
        ensemble: EnsembleSpec {
            members: cfg.usize_or("ensemble_members", 4)?,
            radius_u: cfg.f64("radius_u")?.unwrap_or(0.1),
            radius_gamma: cfg.f64("radius_gamma")?.unwrap_or(0.1),
            radius_theta: cfg.f64("radius_theta")?.unwrap_or(0.1),
            seed,
        },
        burn_in: cfg.f64("burn_in")?.unwrap_or(1.0),
        window: cfg.f64("window")?.unwrap_or(0.5),
        cadence: cfg.usize_or("cadence", 100)?,
        metric,
        k_list,
    })
}

/// Loads and parses a config file.
pub fn load_config(path: &Path) -> Result<RunConfig, Error> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

/// Echoes every effective value in reparsable `key = value` form.
pub fn resolved_config_text(c: &RunConfig, effective_c1: f64, effective_dt: Option<f64>) -> String {
    let mut s = String::new();
    if let Some(p) = &c.physical {
        s.push_str(&format!(
            "# derived from the physical block: nu = {:e}, nu_r = {:e}, chi = {:e}, h = {:e}\n",
            p.nu, p.nu_r, p.chi, p.h
        ));
    }
    let mut push = |k: &str, v: String| {
        s.push_str(k);
        s.push_str(" = ");
        s.push_str(&v);
        s.push('\n');
    };
    push("ra", format!("{:.17e}", c.dp.ra));
    push("pr", format!("{:.17e}", c.dp.pr));
    push("k", format!("{:.17e}", c.dp.k));
    push("l", format!("{:.17e}", c.dp.l));
    push("m", format!("{:.17e}", c.dp.m));
    push("g", format!("{:.17e}", c.dp.g));
    push("ax", format!("{:.17e}", c.dp.ax));
    push("ay", format!("{:.17e}", c.dp.ay));
    push("mv", c.domain.mv.to_string());
    push("nh", c.domain.nh.to_string());
    push("nmodes_u", c.domain.n_stokes.to_string());
    push("nmodes_gamma", c.domain.n_vector.to_string());
    push("nmodes_theta", c.domain.n_scalar.to_string());
    push("model", c.model.tag().to_string());
    push(
        "scheme",
        match c.scheme {
            Scheme::ImexEuler => "euler".into(),
            Scheme::Cnab2 => "cnab2".into(),
        },
    );
    if let Some(dt) = effective_dt {
        push("dt", format!("{dt:.17e}"));
    }
    push("horizon", format!("{:.17e}", c.horizon));
    push("seed", c.seed.to_string());
    push("c1", format!("{effective_c1:.17e}"));
    push("rel_tol", format!("{:.17e}", c.rel_tol));
    push("ball_tol", format!("{:.17e}", c.ball_tol));
    push("burn_in", format!("{:.17e}", c.burn_in));
    push("window", format!("{:.17e}", c.window));
    push("cadence", c.cadence.to_string());
    push("ensemble_members", c.ensemble.members.to_string());
    push("radius_u", format!("{:.17e}", c.ensemble.radius_u));
    push("radius_gamma", format!("{:.17e}", c.ensemble.radius_gamma));
    push("radius_theta", format!("{:.17e}", c.ensemble.radius_theta));
    push("metric", c.metric.tag().to_string());
    if !c.k_list.is_empty() {
        let list: Vec<String> = c.k_list.iter().map(|k| format!("{k:.17e}")).collect();
        push("k_list", list.join(","));
    }
    s
}

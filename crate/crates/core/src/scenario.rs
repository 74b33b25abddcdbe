//! Scenario configuration: node placement, radio budget and mobility limits.
//!
//! The configuration document is TOML. Geometry keys are required; every
//! radio and mobility parameter defaults to the reference simulation setup.
//! Powers are written in dBm and gains in dB, and are converted to watts and
//! linear gains on load. Nothing downstream of this module sees decibels.
//!
//! ```toml
//! st        = [0.0, 0.0, 0.0]
//! sr        = [300.0, 0.0, 0.0]
//! pr        = [0.0, 250.0, 0.0]
//! eve       = [150.0, 250.0, 0.0]
//! uav_start = [-100.0, 200.0, 100.0]
//! uav_end   = [500.0, 200.0, 100.0]
//! horizon_s = 500.0
//!
//! # optional, defaults shown
//! slots              = 500
//! bandwidth_hz       = 10e6
//! path_loss_exponent = 3.0
//! rho0_db            = 10.0
//! noise_dbm          = -70.0
//! p_s_max_dbm        = 40.0
//! # p_s_avg_dbm      = half of p_s_max in watts
//! p_u_max_dbm        = 4.0
//! # p_u_avg_dbm      = half of p_u_max in watts
//! interference_dbm   = -20.0
//! h_min              = 50.0
//! h_max              = 150.0
//! v_max              = 10.0
//! eps_tol            = 1e-4
//! euler_k            = 0.5772156649015329
//! eve_radius         = 0.0
//! space              = "3d"
//! seed               = 0
//! ```

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Euler–Mascheroni constant, 16 significant digits.
pub const EULER_GAMMA: f64 = 0.5772156649015329;

/// A point in the deployment space, meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Position3D {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position3D {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    /// Point at fraction `s` of the way from `self` to `other`.
    pub fn lerp(&self, other: &Position3D, s: f64) -> Position3D {
        Position3D {
            x: self.x + s * (other.x - self.x),
            y: self.y + s * (other.y - self.y),
            z: self.z + s * (other.z - self.z),
        }
    }
}

impl From<[f64; 3]> for Position3D {
    fn from(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

impl From<Position3D> for [f64; 3] {
    fn from(p: Position3D) -> Self {
        p.as_array()
    }
}

impl fmt::Display for Position3D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

/// Whether the UAV may change altitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum SpaceMode {
    /// Altitude pinned to the start altitude.
    #[serde(rename = "2d")]
    TwoD,
    #[default]
    #[serde(rename = "3d")]
    ThreeD,
}

impl SpaceMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            SpaceMode::TwoD => "2d",
            SpaceMode::ThreeD => "3d",
        }
    }
}

impl std::str::FromStr for SpaceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "2d" => Ok(SpaceMode::TwoD),
            "3d" => Ok(SpaceMode::ThreeD),
            other => Err(Error::InvalidArgument(format!("unknown space mode `{other}`"))),
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(v: f64) -> f64 {
    10.0 * v.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm) * 1e-3
}

pub fn watts_to_dbm(w: f64) -> f64 {
    linear_to_db(w * 1e3)
}

/// Validated scenario, all quantities in linear SI units. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub st_pos: Position3D,
    pub sr_pos: Position3D,
    pub pr_pos: Position3D,
    pub eve_pos_estimate: Position3D,
    pub uav_start: Position3D,
    pub uav_end: Position3D,
    pub horizon_t: f64,
    pub slot_count_n: usize,
    pub slot_len_delta: f64,
    pub v_max: f64,
    pub l_max: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub p_s_max: f64,
    pub p_s_avg: f64,
    pub p_u_max: f64,
    pub p_u_avg: f64,
    pub interference_eps: f64,
    pub noise_power: f64,
    pub rho0: f64,
    pub gamma0: f64,
    pub path_loss_exp: f64,
    pub euler_k: f64,
    pub eve_radius_q: f64,
    pub space_mode: SpaceMode,
    pub bandwidth_hz: f64,
    pub eps_tol: f64,
    pub rng_seed: u64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigDocument {
    st: Option<Position3D>,
    sr: Option<Position3D>,
    pr: Option<Position3D>,
    eve: Option<Position3D>,
    uav_start: Option<Position3D>,
    uav_end: Option<Position3D>,
    horizon_s: Option<f64>,
    slots: Option<usize>,
    bandwidth_hz: Option<f64>,
    path_loss_exponent: Option<f64>,
    rho0_db: Option<f64>,
    noise_dbm: Option<f64>,
    p_s_max_dbm: Option<f64>,
    p_s_avg_dbm: Option<f64>,
    p_u_max_dbm: Option<f64>,
    p_u_avg_dbm: Option<f64>,
    interference_dbm: Option<f64>,
    h_min: Option<f64>,
    h_max: Option<f64>,
    v_max: Option<f64>,
    eps_tol: Option<f64>,
    euler_k: Option<f64>,
    eve_radius: Option<f64>,
    space: Option<SpaceMode>,
    seed: Option<u64>,
}

// Reference radio and mobility budget.
const DEFAULT_SLOTS: usize = 500;
const DEFAULT_BANDWIDTH_HZ: f64 = 10e6;
const DEFAULT_PATH_LOSS_EXP: f64 = 3.0;
const DEFAULT_RHO0_DB: f64 = 10.0;
const DEFAULT_NOISE_DBM: f64 = -70.0;
const DEFAULT_P_S_MAX_DBM: f64 = 40.0;
const DEFAULT_P_U_MAX_DBM: f64 = 4.0;
const DEFAULT_INTERFERENCE_DBM: f64 = -20.0;
const DEFAULT_H_MIN: f64 = 50.0;
const DEFAULT_H_MAX: f64 = 150.0;
const DEFAULT_V_MAX: f64 = 10.0;
const DEFAULT_EPS_TOL: f64 = 1e-4;

/// Parses and validates a TOML configuration document.
pub fn load_config(source: &str) -> Result<ScenarioConfig> {
    let doc: ConfigDocument =
        toml::from_str(source).map_err(|e| Error::ConfigSyntax(e.message().to_string()))?;
    from_document(doc)
}

pub fn load_config_file(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)?;
    load_config(&text)
}

fn from_document(doc: ConfigDocument) -> Result<ScenarioConfig> {
    let p_s_max = dbm_to_watts(doc.p_s_max_dbm.unwrap_or(DEFAULT_P_S_MAX_DBM));
    let p_u_max = dbm_to_watts(doc.p_u_max_dbm.unwrap_or(DEFAULT_P_U_MAX_DBM));
    let rho0 = db_to_linear(doc.rho0_db.unwrap_or(DEFAULT_RHO0_DB));
    let noise_power = dbm_to_watts(doc.noise_dbm.unwrap_or(DEFAULT_NOISE_DBM));
    let horizon_t = doc.horizon_s.ok_or(Error::MissingKey("horizon_s"))?;
    let slot_count_n = doc.slots.unwrap_or(DEFAULT_SLOTS);

    let cfg = ScenarioConfig {
        st_pos: doc.st.ok_or(Error::MissingKey("st"))?,
        sr_pos: doc.sr.ok_or(Error::MissingKey("sr"))?,
        pr_pos: doc.pr.ok_or(Error::MissingKey("pr"))?,
        eve_pos_estimate: doc.eve.ok_or(Error::MissingKey("eve"))?,
        uav_start: doc.uav_start.ok_or(Error::MissingKey("uav_start"))?,
        uav_end: doc.uav_end.ok_or(Error::MissingKey("uav_end"))?,
        horizon_t,
        slot_count_n,
        slot_len_delta: 0.0,
        v_max: doc.v_max.unwrap_or(DEFAULT_V_MAX),
        l_max: 0.0,
        h_min: doc.h_min.unwrap_or(DEFAULT_H_MIN),
        h_max: doc.h_max.unwrap_or(DEFAULT_H_MAX),
        p_s_max,
        p_s_avg: doc.p_s_avg_dbm.map(dbm_to_watts).unwrap_or(p_s_max / 2.0),
        p_u_max,
        p_u_avg: doc.p_u_avg_dbm.map(dbm_to_watts).unwrap_or(p_u_max / 2.0),
        interference_eps: dbm_to_watts(doc.interference_dbm.unwrap_or(DEFAULT_INTERFERENCE_DBM)),
        noise_power,
        rho0,
        gamma0: 0.0,
        path_loss_exp: doc.path_loss_exponent.unwrap_or(DEFAULT_PATH_LOSS_EXP),
        euler_k: doc.euler_k.unwrap_or(EULER_GAMMA),
        eve_radius_q: doc.eve_radius.unwrap_or(0.0),
        space_mode: doc.space.unwrap_or_default(),
        bandwidth_hz: doc.bandwidth_hz.unwrap_or(DEFAULT_BANDWIDTH_HZ),
        eps_tol: doc.eps_tol.unwrap_or(DEFAULT_EPS_TOL),
        rng_seed: doc.seed.unwrap_or(0),
    };
    cfg.finish()
}

/// The reference deployment: ST, SR and PR at (0,0,0), (300,0,0), (0,250,0),
/// Eve estimated at (150,250,0), UAV flying (−100,200,100) → (500,200,100)
/// over T = 500 s in N = 500 slots, perfect Eve location.
pub fn default_paper_scenario() -> ScenarioConfig {
    let doc = ConfigDocument {
        st: Some(Position3D::new(0.0, 0.0, 0.0)),
        sr: Some(Position3D::new(300.0, 0.0, 0.0)),
        pr: Some(Position3D::new(0.0, 250.0, 0.0)),
        eve: Some(Position3D::new(150.0, 250.0, 0.0)),
        uav_start: Some(Position3D::new(-100.0, 200.0, 100.0)),
        uav_end: Some(Position3D::new(500.0, 200.0, 100.0)),
        horizon_s: Some(500.0),
        ..Default::default()
    };
    from_document(doc).expect("reference scenario is valid")
}

/// Radius of the Eve location uncertainty disk used for robust runs.
pub const PAPER_ROBUST_RADIUS: f64 = 20.0;

impl ScenarioConfig {
    /// Populates derived fields and checks every invariant.
    fn finish(mut self) -> Result<Self> {
        fn bad(key: &'static str, reason: impl Into<String>) -> Error {
            Error::InvalidValue { key, reason: reason.into() }
        }
        let positions = [
            ("st", self.st_pos),
            ("sr", self.sr_pos),
            ("pr", self.pr_pos),
            ("eve", self.eve_pos_estimate),
            ("uav_start", self.uav_start),
            ("uav_end", self.uav_end),
        ];
        for (key, p) in positions {
            if !p.is_finite() {
                return Err(bad(key, "coordinates must be finite"));
            }
        }
        for (key, p) in &positions[..4] {
            if p.z != 0.0 {
                return Err(bad(key, "ground nodes must have z = 0"));
            }
        }
        let positive = [
            ("horizon_s", self.horizon_t),
            ("v_max", self.v_max),
            ("h_min", self.h_min),
            ("path_loss_exponent", self.path_loss_exp),
            ("p_s_max_dbm", self.p_s_max),
            ("p_u_max_dbm", self.p_u_max),
            ("p_s_avg_dbm", self.p_s_avg),
            ("p_u_avg_dbm", self.p_u_avg),
            ("interference_dbm", self.interference_eps),
            ("noise_dbm", self.noise_power),
            ("rho0_db", self.rho0),
            ("bandwidth_hz", self.bandwidth_hz),
            ("eps_tol", self.eps_tol),
        ];
        for (key, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(bad(key, format!("must be positive and finite, got {v}")));
            }
        }
        if !(self.euler_k.is_finite()) {
            return Err(bad("euler_k", "must be finite"));
        }
        if self.slot_count_n == 0 {
            return Err(bad("slots", "need at least one slot"));
        }
        if !(self.h_max.is_finite() && self.h_max >= self.h_min) {
            return Err(bad("h_max", "must satisfy h_min <= h_max"));
        }
        if self.p_s_avg > self.p_s_max {
            return Err(bad("p_s_avg_dbm", "average ST power exceeds its peak"));
        }
        if self.p_u_avg > self.p_u_max {
            return Err(bad("p_u_avg_dbm", "average UAV power exceeds its peak"));
        }
        if !(self.eve_radius_q.is_finite() && self.eve_radius_q >= 0.0) {
            return Err(bad("eve_radius", "must be non-negative"));
        }
        for (key, p) in [("uav_start", self.uav_start), ("uav_end", self.uav_end)] {
            if p.z < self.h_min || p.z > self.h_max {
                return Err(bad(key, format!("altitude {} outside [h_min, h_max]", p.z)));
            }
        }
        self.slot_len_delta = self.horizon_t / self.slot_count_n as f64;
        self.l_max = self.v_max * self.slot_len_delta;
        self.gamma0 = self.rho0 / self.noise_power;
        Ok(self)
    }

    /// Same scenario with a different flight horizon and slot count.
    pub fn with_horizon(&self, horizon_t: f64, slot_count_n: usize) -> Result<Self> {
        let mut c = self.clone();
        c.horizon_t = horizon_t;
        c.slot_count_n = slot_count_n;
        c.finish()
    }

    pub fn with_eve_radius(&self, q: f64) -> Result<Self> {
        let mut c = self.clone();
        c.eve_radius_q = q;
        c.finish()
    }

    pub fn with_space_mode(&self, mode: SpaceMode) -> Self {
        let mut c = self.clone();
        c.space_mode = mode;
        c
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        let mut c = self.clone();
        c.rng_seed = seed;
        c
    }

    /// Replaces the UAV endpoints, revalidating altitudes.
    pub fn with_uav_endpoints(&self, start: Position3D, end: Position3D) -> Result<Self> {
        let mut c = self.clone();
        c.uav_start = start;
        c.uav_end = end;
        c.finish()
    }

    pub fn channel(&self) -> crate::channel::ChannelParams {
        crate::channel::ChannelParams {
            rho0: self.rho0,
            noise_power: self.noise_power,
            gamma0: self.gamma0,
            path_loss_exp: self.path_loss_exp,
            euler_k: self.euler_k,
        }
    }

    /// Canonical JSON rendering, used for provenance hashes.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

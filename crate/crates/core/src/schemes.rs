//! The proposed design and its three restricted baselines, all run through
//! the same engine with some variables pinned.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::engine::{straight_line, Engine, EveModel, Pins, RunResult};
use crate::error::{Error, Result};
use crate::scenario::{ScenarioConfig, SpaceMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    /// Trajectory and both powers optimized.
    Proposed,
    /// `p_S = P̄_S`, `p_U = P̄_U`; trajectory optimized.
    FixedPower,
    /// Uniform straight-line trajectory; powers optimized.
    StraightLine,
    /// `p_U = 0`; ST power and trajectory optimized.
    NoJamming,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 4] =
        [SchemeKind::Proposed, SchemeKind::FixedPower, SchemeKind::StraightLine, SchemeKind::NoJamming];

    pub fn as_str(&self) -> &'static str {
        match self {
            SchemeKind::Proposed => "proposed",
            SchemeKind::FixedPower => "fixed-power",
            SchemeKind::StraightLine => "straight-line",
            SchemeKind::NoJamming => "no-jamming",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace('_', "-");
        SchemeKind::ALL
            .into_iter()
            .find(|k| k.as_str() == key)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown scheme `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LocationModel {
    Perfect,
    /// Worst case over a disk of the given radius in meters.
    Robust(f64),
}

impl LocationModel {
    pub fn radius(&self) -> f64 {
        match self {
            LocationModel::Perfect => 0.0,
            LocationModel::Robust(q) => *q,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            LocationModel::Perfect => "perfect",
            LocationModel::Robust(_) => "robust",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeSpec {
    pub kind: SchemeKind,
    pub space_mode: SpaceMode,
    pub location_model: LocationModel,
}

impl SchemeSpec {
    pub fn new(kind: SchemeKind, space_mode: SpaceMode, location_model: LocationModel) -> Self {
        Self { kind, space_mode, location_model }
    }

    /// Scenario as seen by this scheme: space mode and radius overridden.
    pub fn scenario(&self, cfg: &ScenarioConfig) -> Result<ScenarioConfig> {
        cfg.with_space_mode(self.space_mode).with_eve_radius(self.location_model.radius())
    }

    pub fn eve_model(&self) -> EveModel {
        match self.location_model {
            LocationModel::Perfect => EveModel::Perfect,
            LocationModel::Robust(q) => EveModel::Robust { q },
        }
    }

    /// Variables the scheme holds fixed on `cfg` (already overridden).
    pub fn pins(&self, cfg: &ScenarioConfig) -> Pins {
        let mut pins = Pins {
            altitude: (self.space_mode == SpaceMode::TwoD).then_some(cfg.uav_start.z),
            ..Pins::default()
        };
        match self.kind {
            SchemeKind::Proposed => {}
            SchemeKind::FixedPower => {
                pins.p_s = Some(cfg.p_s_avg);
                pins.p_u = Some(cfg.p_u_avg);
            }
            SchemeKind::StraightLine => pins.trajectory = Some(straight_line(cfg)),
            SchemeKind::NoJamming => pins.p_u = Some(0.0),
        }
        pins
    }
}

/// Runs one scheme from the shared straight-line initialization.
///
/// Pinned powers that break the interference or power constraints surface
/// as [`Error::InfeasibleScheme`].
pub fn run_scheme(spec: &SchemeSpec, cfg: &ScenarioConfig) -> Result<RunResult> {
    let cfg = spec.scenario(cfg)?;
    let engine = Engine::new(&cfg, spec.eve_model(), spec.pins(&cfg))?;
    engine.run(engine.initial_point()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{default_paper_scenario, Position3D};

    fn desk() -> ScenarioConfig {
        default_paper_scenario().with_horizon(60.0, 20).unwrap()
    }

    fn spec(kind: SchemeKind) -> SchemeSpec {
        SchemeSpec::new(kind, SpaceMode::ThreeD, LocationModel::Perfect)
    }

    #[test]
    fn names_round_trip() {
        for k in SchemeKind::ALL {
            assert_eq!(k.as_str().parse::<SchemeKind>().unwrap(), k);
        }
        assert_eq!("Fixed_Power".parse::<SchemeKind>().unwrap(), SchemeKind::FixedPower);
        assert!("greedy".parse::<SchemeKind>().is_err());
    }

    #[test]
    fn no_jamming_has_zero_secrecy() {
        let r = run_scheme(&spec(SchemeKind::NoJamming), &desk()).unwrap();
        assert!(r.point.p_u.iter().all(|&p| p == 0.0));
        assert_eq!(r.average_secrecy, 0.0);
    }

    #[test]
    fn fixed_power_keeps_its_powers() {
        let cfg = desk();
        let r = run_scheme(&spec(SchemeKind::FixedPower), &cfg).unwrap();
        assert!(r.point.p_u.iter().all(|&p| p == cfg.p_u_avg));
        assert!(r.point.p_s.iter().all(|&p| p == cfg.p_s_avg));
        assert!(r.feasibility.holds(1e-6));
    }

    #[test]
    fn straight_line_with_equal_endpoints_hovers() {
        let c = Position3D::new(100.0, 200.0, 100.0);
        let cfg = desk().with_uav_endpoints(c, c).unwrap();
        let r = run_scheme(&spec(SchemeKind::StraightLine), &cfg).unwrap();
        assert!(r.point.c_u.iter().all(|p| *p == c));
        assert!(r.objective_history.len() > 1);
    }

    #[test]
    fn fixed_power_over_threshold_is_infeasible() {
        let mut cfg = desk();
        cfg.interference_eps = 1e-7;
        let err = run_scheme(&spec(SchemeKind::FixedPower), &cfg).unwrap_err();
        assert!(matches!(err, Error::InfeasibleScheme(_)), "{err}");
    }
}

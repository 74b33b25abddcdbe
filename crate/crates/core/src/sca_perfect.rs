//! Perfect eavesdropper location: feasible initialization, subproblem
//! assembly and the ascent loop.

use crate::conic::ConicProgram;
use crate::engine::{Engine, EveModel, Pins};
use crate::error::Result;
use crate::scenario::{ScenarioConfig, SpaceMode};

pub use crate::engine::{audit_point as audit_original, FeasibilityReport, IteratePoint, RunResult};

/// Pins implied by the configured space mode.
pub fn mode_pins(cfg: &ScenarioConfig) -> Pins {
    Pins { altitude: (cfg.space_mode == SpaceMode::TwoD).then_some(cfg.uav_start.z), ..Pins::default() }
}

/// Straight-line trajectory with tight slacks.
pub fn init_feasible(cfg: &ScenarioConfig) -> Result<IteratePoint> {
    Engine::new(cfg, EveModel::Perfect, mode_pins(cfg))?.initial_point()
}

/// Convex inner approximation around `prev`.
pub fn build_subproblem(prev: &IteratePoint, cfg: &ScenarioConfig) -> Result<ConicProgram> {
    Engine::new(cfg, EveModel::Perfect, mode_pins(cfg))?.build(prev)
}

pub fn solve_sca(cfg: &ScenarioConfig) -> Result<RunResult> {
    let engine = Engine::new(cfg, EveModel::Perfect, mode_pins(cfg))?;
    engine.run(engine.initial_point()?)
}

//! Scenario description and the driver that wires every entity to one
//! engine and runs it.

mod config;
mod world;

pub use config::{ApSite, InvalidScenario, Plumbing, Prediction, ScenarioConfig, Topology};
pub use world::{run, Emission, ScenarioError, SimOutcome, Timer};

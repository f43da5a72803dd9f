//! Deterministic simulation harness: closed-form success curves and a
//! scripted fact-recall session played against each memory strategy.

pub mod agent;
pub mod curves;
pub mod run;
pub mod scenario;

pub use agent::{answer_probe, Answer, Outcome};
pub use curves::{simulate_all_add_curve, simulate_fixed_curve, simulate_hybrid_curve, CurvePoint, SimConfig};
pub use run::{compare_strategies, run_scenario, Comparison, MetricsReport};
pub use scenario::{Scenario, SCHEMA_VERSION};

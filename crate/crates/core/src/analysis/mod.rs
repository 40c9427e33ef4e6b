//! Read-only analyses over completed runs and standalone models.

mod audit;
mod backlog;
mod observer;
mod prop_a;
mod scarcity;

pub use audit::{audit_governability, AuditError, AuditReport, Finding, Law, Verdict};
pub use backlog::{
    arrival_load, simulate_backlog, uniform_arrivals, BacklogConfig, BacklogError, BacklogReport, CapacityCheck,
    CapacitySeries,
};
pub use observer::{
    find_observer_collision, BoundaryTrace, Collision, CollisionReport, Emitter, EmitterState, ObserverError,
    ObserverModel,
};
pub use prop_a::{check_prop_a, AssumptionBreach, PropAReport};
pub use scarcity::{simulate_scarcity, ScarcityConfig, ScarcityError, ScarcityReport, ScarcityScenario, ScarcityStep};

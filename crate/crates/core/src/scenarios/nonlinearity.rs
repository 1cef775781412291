//! A controlled measurement acting on a maximally mixed target gives different outputs
//! for two decompositions of the same input, so it cannot be a linear map.

use super::{Ctx, Origin, RunConfig, ScenarioReport};
use crate::ctrltask::demonstrate_measurement_nonlinearity;

/// Frozen from the first run; independently confirmed by a Jacobi eigenvalue oracle.
pub const TRACE_DISTANCE: f64 = 0.31753989042981773;

pub fn scenario_nonlinearity(cfg: &RunConfig) -> ScenarioReport {
    let mut ctx = Ctx::new("nonlinearity", cfg);
    if let Some(r) = ctx.guard("nonlinearity witness", demonstrate_measurement_nonlinearity()) {
        let rep = &mut ctx.report;
        rep.greater("trace distance between the two mixtures", 0.01, r.trace_distance, Origin::Reported);
        rep.approx(
            "sigma-z decomposition mixture has unit trace",
            1.0,
            r.rho_decomp_zx.matrix().trace().re,
            1e-10,
            Origin::Exact,
        );
        rep.approx(
            "sigma-x decomposition mixture has unit trace",
            1.0,
            r.rho_decomp_pm.matrix().trace().re,
            1e-10,
            Origin::Exact,
        );
        rep.approx("trace distance regression value", TRACE_DISTANCE, r.trace_distance, 1e-9, Origin::Derived);
    }
    ctx.finish()
}

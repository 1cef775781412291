//! A user-supplied topology and branch programs run through the generic pipeline.

use super::{Ctx, Origin, RunConfig, ScenarioReport};
use crate::error::Error;
use crate::network::request_label;

pub fn scenario_custom(cfg: &RunConfig) -> ScenarioReport {
    let mut ctx = Ctx::new("custom", cfg);
    let Some(spec) = cfg.topology.clone() else {
        ctx.report
            .error("topology", &Error::Config("the custom scenario needs --topology".into()));
        return ctx.finish();
    };
    ctx.report.param("devices", spec.ids());
    ctx.report.param("branches", spec.branches.len());
    let Some(alphas) = ctx.guard("weights", spec.alphas()) else {
        return ctx.finish();
    };
    let mut p = ctx.policy();
    let run = spec.run(&mut p);
    ctx.absorb("main", p);
    let Some(net) = ctx.guard("pipeline", run) else {
        return ctx.finish();
    };
    ctx.report.equal("pipeline completed", true, true, Origin::Exact);
    let w = net.global.level_weights(&request_label(&spec.initiator));
    if let Some(w) = ctx.guard("control weights", w) {
        let dev = alphas
            .iter()
            .zip(&w)
            .map(|(a, w)| (a.norm_sqr() - w).abs())
            .fold(0.0, f64::max);
        ctx.report
            .approx("control populations equal the requested weights (deviation)", 0.0, dev, 1e-9, Origin::Exact);
    }
    ctx.report.param("measurement log", &net.log);
    ctx.finish()
}

use std::io::Write;

use serde::Serialize;

use super::checks::{
    apriori_bounds_check, entropy_identity_residual, grad_vq_bound, log_mass_check, trace_positivity_check, u_lr_bound,
    v_floor_check, AprioriReport, GradVqReport, IdentityReport, LogMassReport, TraceReport, VFloorReport,
    YoungReport, ABSOLUTE_TOLERANCE,
};
use super::{DiagnosticsRecord, TestFunction};
use crate::error::Result;
use crate::real::Real;

const COLUMNS: [&str; 34] = [
    "t",
    "mass",
    "u_min",
    "v_min",
    "v_lr",
    "grad_v_ls",
    "entropy",
    "d1",
    "d2",
    "reaction_minus",
    "reaction_plus",
    "reaction_plus_unreg",
    "u_lr",
    "grad_vq",
    "grad_v_half",
    "grad_up",
    "vq",
    "v_young",
    "young_excess",
    "log_u",
    "grad_log_u",
    "log_v",
    "boundary_min_upq",
    "acc_d1",
    "acc_d2",
    "acc_reaction_plus",
    "acc_reaction_plus_unreg",
    "acc_reaction_minus",
    "acc_u_lr",
    "acc_grad_vq",
    "acc_grad_log_u",
    "acc_grad_up",
    "acc_vq",
    "acc_v_young",
];

/// One row per sample time, one column per functional and accumulated integral.
pub fn write_csv<T: Real, W: Write>(record: &DiagnosticsRecord<T>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS)?;
    let a = &record.accumulated;
    for (k, s) in record.samples.iter().enumerate() {
        let row = [
            s.t,
            s.mass,
            s.u_min,
            s.v_min,
            s.v_lr,
            s.grad_v_ls,
            s.entropy,
            s.d1,
            s.d2,
            s.reaction_minus,
            s.reaction_plus,
            s.reaction_plus_unreg,
            s.u_lr,
            s.grad_vq,
            s.grad_v_half,
            s.grad_up,
            s.vq,
            s.v_young,
            s.young_excess,
            s.log_u,
            s.grad_log_u,
            s.log_v,
            s.boundary_min_upq,
            a.d1[k],
            a.d2[k],
            a.reaction_plus[k],
            a.reaction_plus_unreg[k],
            a.reaction_minus[k],
            a.u_lr[k],
            a.grad_vq[k],
            a.grad_log_u[k],
            a.grad_up[k],
            a.vq[k],
            a.v_young[k],
        ];
        w.write_record(row.iter().map(|x| format!("{:e}", x.to_f64_lossy())))?;
    }
    w.flush()?;
    Ok(())
}

/// Accumulated integrals at the final time.
#[derive(Debug, Clone, Serialize)]
pub struct Totals {
    pub d1: f64,
    pub d2: f64,
    pub reaction_plus: f64,
    pub reaction_plus_unreg: f64,
    pub u_lr: f64,
    pub grad_vq: f64,
    pub grad_log_u: f64,
    pub grad_up: f64,
}

/// JSON summary: totals, every check that applies, and the tolerances used.
#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticsSummary {
    pub samples: usize,
    pub final_time: f64,
    pub max_mass_drift: f64,
    pub totals: Totals,
    pub absolute_tolerance: f64,
    pub entropy_identity: Option<IdentityReport<f64>>,
    pub apriori: Option<AprioriReport<f64>>,
    pub young: Option<YoungReport<f64>>,
    pub grad_vq: Option<GradVqReport<f64>>,
    pub log_mass: Option<LogMassReport<f64>>,
    pub trace: TraceReport<f64>,
    pub v_floor: VFloorReport<f64>,
}

impl DiagnosticsSummary {
    /// Runs every check that applies to the record; inapplicable ones are `None`.
    pub fn from_record(record: &DiagnosticsRecord<f64>) -> Self {
        let a = &record.accumulated;
        let n = record.samples.len() - 1;
        let m0 = record.first().mass;
        let drift = record
            .samples
            .iter()
            .map(|s| ((s.mass - m0) / m0).abs())
            .fold(0.0, f64::max);
        let identity = entropy_identity_residual(record, &TestFunction::one()).ok();
        let tau = ABSOLUTE_TOLERANCE + identity.map_or(0.0, |r| r.residual);
        Self {
            samples: record.samples.len(),
            final_time: record.final_time(),
            max_mass_drift: drift,
            totals: Totals {
                d1: a.d1[n],
                d2: a.d2[n],
                reaction_plus: a.reaction_plus[n],
                reaction_plus_unreg: a.reaction_plus_unreg[n],
                u_lr: a.u_lr[n],
                grad_vq: a.grad_vq[n],
                grad_log_u: a.grad_log_u[n],
                grad_up: a.grad_up[n],
            },
            absolute_tolerance: ABSOLUTE_TOLERANCE,
            entropy_identity: identity,
            apriori: apriori_bounds_check(record).ok(),
            young: u_lr_bound(record).ok(),
            grad_vq: grad_vq_bound(record, tau).ok(),
            log_mass: log_mass_check(record, tau).ok(),
            trace: trace_positivity_check(record),
            v_floor: v_floor_check(record),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).unwrap_or(serde_json::Value::Null)
    }
}

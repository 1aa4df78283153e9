//! Wire format: JSON channel specs in, JSON reports out.
//!
//! The spec layout is versioned (`"schema": 1`) and strict: unknown fields
//! are rejected so a config that drifts from the tool's vocabulary fails
//! loudly instead of being half-read. Emission is deterministic. Field order
//! is fixed by struct declaration order and every float carries 17
//! significant digits, enough to reproduce the f64 bit for bit, so identical
//! runs produce byte-identical artifacts.

use std::io;

use serde::{Deserialize, Serialize};

use crate::capacity::CapacityResult;
use crate::channel::{make_distortion, ChannelSpec};
use crate::conditions::{ConditionStatus, TripletReport};
use crate::convergence::{ConvergenceReport, MomentSupremum, Verdict};
use crate::density::{make_density, mixture, Density};
use crate::moments::{make_moment_fn, MomentFunction};
use crate::quadrature::QuadratureConfig;
use crate::{Error, Result};

pub const SCHEMA_VERSION: u64 = 1;

/// Distortion selector, e.g. `{"kind": "signed_exp"}`. Parametrized kinds
/// such as `expr-table` carry their knots in `params`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistortionDoc {
    pub kind: String,
    #[serde(default)]
    pub params: Vec<f64>,
}

/// Density selector, e.g. `{"family": "pareto", "params": [2.0, 1.0]}`.
/// Mixtures nest: `{"family": "mixture", "components": [{"weight": w,
/// "density": {...}}, ...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityDoc {
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<Vec<MixtureComponentDoc>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureComponentDoc {
    pub weight: f64,
    pub density: DensityDoc,
}

/// Moment-function selector, e.g. `{"kind": "power", "p": 2}`. Kinds without
/// an exponent (`log1p_sq`, `zero`) omit `p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentDoc {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
}

/// The full channel description as it travels in config files and report
/// echoes. `noise_moment` defaults to `log_power` with p = 2 when absent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpecDoc {
    pub schema: u64,
    pub f: DistortionDoc,
    pub noise: DensityDoc,
    pub cost: MomentDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_moment: Option<MomentDoc>,
    pub budget: f64,
}

impl DensityDoc {
    pub fn build(&self) -> Result<Density> {
        if self.family == "mixture" {
            if self.params.is_some() {
                return Err(Error::SpecValidation(
                    "mixture density takes components, not params".into(),
                ));
            }
            let comps = self.components.as_ref().ok_or_else(|| {
                Error::SpecValidation("mixture density needs a components list".into())
            })?;
            let mut parts = Vec::with_capacity(comps.len());
            for c in comps {
                parts.push((c.weight, c.density.build()?));
            }
            mixture(parts)
        } else {
            if self.components.is_some() {
                return Err(Error::SpecValidation(format!(
                    "density family `{}` does not take components",
                    self.family
                )));
            }
            make_density(&self.family, self.params.as_deref().unwrap_or(&[]))
        }
    }

    fn normalized(&self) -> DensityDoc {
        if self.family == "mixture" {
            DensityDoc {
                family: self.family.clone(),
                params: None,
                components: self.components.as_ref().map(|cs| {
                    cs.iter()
                        .map(|c| MixtureComponentDoc {
                            weight: c.weight,
                            density: c.density.normalized(),
                        })
                        .collect()
                }),
            }
        } else {
            DensityDoc {
                family: self.family.clone(),
                params: Some(self.params.clone().unwrap_or_default()),
                components: None,
            }
        }
    }
}

impl MomentDoc {
    pub fn build(&self) -> Result<MomentFunction> {
        let params: Vec<f64> = self.p.into_iter().collect();
        make_moment_fn(&self.kind, &params)
    }
}

fn default_noise_moment() -> MomentDoc {
    MomentDoc {
        kind: "log_power".into(),
        p: Some(2.0),
    }
}

impl ChannelSpecDoc {
    /// Instantiate the runtime channel this document describes.
    pub fn build(&self, cfg: &QuadratureConfig) -> Result<ChannelSpec> {
        let f = make_distortion(&self.f.kind, &self.f.params)?;
        let noise = self.noise.build()?;
        let cost = self.cost.build()?;
        let noise_moment = self
            .noise_moment
            .clone()
            .unwrap_or_else(default_noise_moment)
            .build()?;
        ChannelSpec::new(f, noise, cost, noise_moment, self.budget, cfg)
    }

    /// The echo form: defaults filled in so two documents that build the
    /// same channel serialize identically.
    pub fn normalized(&self) -> ChannelSpecDoc {
        ChannelSpecDoc {
            schema: self.schema,
            f: self.f.clone(),
            noise: self.noise.normalized(),
            cost: self.cost.clone(),
            noise_moment: Some(
                self.noise_moment
                    .clone()
                    .unwrap_or_else(default_noise_moment),
            ),
            budget: self.budget,
        }
    }

    pub fn with_budget(&self, budget: f64) -> ChannelSpecDoc {
        ChannelSpecDoc {
            budget,
            ..self.clone()
        }
    }
}

/// Parse a channel-spec document, enforcing the schema version.
pub fn parse_channel_spec(text: &str) -> Result<ChannelSpecDoc> {
    let doc: ChannelSpecDoc = serde_json::from_str(text)
        .map_err(|e| Error::SpecValidation(format!("channel spec JSON: {e}")))?;
    if doc.schema != SCHEMA_VERSION {
        return Err(Error::SpecValidation(format!(
            "unsupported schema version {}, expected {}",
            doc.schema, SCHEMA_VERSION
        )));
    }
    Ok(doc)
}

// 17 significant digits round-trip any f64 exactly; the fixed exponent form
// keeps the byte layout independent of magnitude. Non-finite values have no
// JSON number form and degrade to null.
struct SciFormatter;

impl serde_json::ser::Formatter for SciFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }
}

/// Serialize any report to its canonical JSON byte form (trailing newline).
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SciFormatter);
    value
        .serialize(&mut ser)
        .expect("in-memory serialization cannot fail");
    out.push(b'\n');
    String::from_utf8(out).expect("serializer emits UTF-8")
}

/// A discrete input law in report form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputLawDoc {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Capacity report: the echo of the spec it was computed from, then the
/// headline numbers, then the supporting detail.
#[derive(Clone, Debug, Serialize)]
pub struct CapacityDoc {
    pub schema: u64,
    pub channel: ChannelSpecDoc,
    pub capacity_estimate: f64,
    pub discretized_estimate: f64,
    pub multiplier: f64,
    pub achieved_cost: f64,
    pub iterations: u64,
    pub per_level_estimates: Vec<f64>,
    pub saturated: bool,
    pub optimal_input: InputLawDoc,
    pub notes: Vec<String>,
}

impl CapacityDoc {
    pub fn new(channel: ChannelSpecDoc, r: &CapacityResult) -> CapacityDoc {
        CapacityDoc {
            schema: SCHEMA_VERSION,
            channel: channel.normalized(),
            capacity_estimate: r.capacity_estimate,
            discretized_estimate: r.discretized_estimate,
            multiplier: r.multiplier,
            achieved_cost: r.achieved_cost,
            iterations: r.iterations as u64,
            per_level_estimates: r.per_level_estimates.clone(),
            saturated: r.saturated,
            optimal_input: InputLawDoc {
                points: r.optimal_input.points().to_vec(),
                weights: r.optimal_input.weights().to_vec(),
            },
            notes: r.notes.clone(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionDoc {
    pub name: String,
    pub status: String,
    pub evidence: String,
    pub note: String,
}

/// Condition-audit report for one channel.
#[derive(Clone, Debug, Serialize)]
pub struct ConditionReportDoc {
    pub schema: u64,
    pub channel: ChannelSpecDoc,
    pub conditions: Vec<ConditionDoc>,
    pub noise_moment_value: f64,
    pub overall: bool,
}

fn status_name(s: ConditionStatus) -> &'static str {
    match s {
        ConditionStatus::Declared => "declared",
        ConditionStatus::VerifiedOnGrid => "verified-on-grid",
        ConditionStatus::Violated => "violated",
        ConditionStatus::NotCheckable => "not-checkable",
    }
}

impl ConditionReportDoc {
    pub fn new(channel: ChannelSpecDoc, r: &TripletReport) -> ConditionReportDoc {
        ConditionReportDoc {
            schema: SCHEMA_VERSION,
            channel: channel.normalized(),
            conditions: r
                .entries()
                .iter()
                .map(|(name, e)| ConditionDoc {
                    name: (*name).into(),
                    status: status_name(e.status).into(),
                    evidence: e.evidence.clone(),
                    note: e.note.clone(),
                })
                .collect(),
            noise_moment_value: r.l_n,
            overall: r.overall,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SequencePointDoc {
    pub m: u64,
    pub value: f64,
}

/// Convergence-check report for a density sequence.
#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceDoc {
    pub schema: u64,
    pub verdict: String,
    pub sup_bound: f64,
    pub moment_supremum: f64,
    pub moment_supremum_bounded: bool,
    pub moment_cap: f64,
    pub limit_moment: Option<f64>,
    pub pointwise_max_gap: Vec<SequencePointDoc>,
    pub entropy_sequence: Vec<SequencePointDoc>,
    pub entropy_limit: Option<f64>,
    pub notes: Vec<String>,
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::ConditionsHoldAndConverges => "conditions-hold-and-converges",
        Verdict::C1Violated => "c1-violated",
        Verdict::C2Violated => "c2-violated",
        Verdict::Inconclusive => "inconclusive",
    }
}

impl ConvergenceDoc {
    pub fn new(r: &ConvergenceReport) -> ConvergenceDoc {
        let (moment_supremum, bounded) = match r.l_found {
            MomentSupremum::Bounded(v) => (v, true),
            MomentSupremum::UnboundedAtTolerance { max_observed, .. } => (max_observed, false),
        };
        let seq = |map: &std::collections::BTreeMap<u64, f64>| {
            map.iter()
                .map(|(&m, &value)| SequencePointDoc { m, value })
                .collect()
        };
        ConvergenceDoc {
            schema: SCHEMA_VERSION,
            verdict: verdict_name(r.verdict).into(),
            sup_bound: r.m_found,
            moment_supremum,
            moment_supremum_bounded: bounded,
            moment_cap: r.moment_cap,
            limit_moment: r.limit_moment,
            pointwise_max_gap: seq(&r.pointwise_max_gap),
            entropy_sequence: seq(&r.entropy_sequence),
            entropy_limit: r.entropy_limit,
            notes: r.notes.clone(),
        }
    }
}

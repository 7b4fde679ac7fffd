//! The six subcommands. Each returns the exact bytes to emit.

use sanov_core::bounds::{extended_f64, report_with, subset_bound_with, AsymptoticTerms};
use sanov_core::conditional::summarize;
use sanov_core::iprojection::PythagoreanResidual;
use sanov_core::typespace::DEFAULT_TYPE_BUDGET;
use sanov_core::verify::{verify, VerifyOptions};
use sanov_core::{
    estimate_partitioned, project, BoundsReport, Dist, Error, IProjection, InfoValue, McEstimate,
    SweepEntry,
};
use serde::{Deserialize, Serialize};

use crate::failure::{Failure, FailureKind};
use crate::format::{float17, to_json};
use crate::problem::Problem;

pub const BUDGET_ENV: &str = "SANOV_BUDGET";
pub const DEFAULT_TRIALS: u64 = 100_000;
pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Exact,
    Bounds,
    Iproject,
    Sweep,
    Verify,
    Mc,
}

/// Command-line overrides; `None` falls back to the spec, then to defaults.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    pub budget: Option<u64>,
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub subset: bool,
    /// Raw value of the budget environment variable, if set.
    pub env_budget: Option<String>,
    /// Test hook for `verify`: mass moved within `ω` before checking.
    pub corrupt_omega: f64,
}

/// Output bytes plus an optional failure that still carries a report.
#[derive(Debug, Clone)]
pub struct Rendered {
    pub text: String,
    pub failure: Option<Failure>,
}

impl Rendered {
    fn ok(text: String) -> Self {
        Self {
            text,
            failure: None,
        }
    }
}

impl Settings {
    /// Flag, then spec field, then environment, then the built-in default.
    pub fn resolve_budget(&self, problem: &Problem) -> Result<u64, Failure> {
        if let Some(b) = self.budget.or(problem.spec.budget) {
            return Ok(b);
        }
        match &self.env_budget {
            Some(raw) => raw.trim().parse().map_err(|_| {
                Failure::validation(
                    Some(BUDGET_ENV.into()),
                    format!("expected a nonnegative integer, got {raw:?}"),
                )
            }),
            None => Ok(DEFAULT_TYPE_BUDGET),
        }
    }
}

pub fn run(command: Command, problem: &Problem, settings: &Settings) -> Result<Rendered, Failure> {
    let budget = settings.resolve_budget(problem)?;
    match command {
        Command::Exact => exact(problem, budget).map(|r| Rendered::ok(to_json(&r))),
        Command::Bounds => {
            bounds(problem, budget, settings.subset).map(|r| Rendered::ok(to_json(&r)))
        }
        Command::Iproject => iproject(problem).map(|r| Rendered::ok(to_json(&r))),
        Command::Sweep => sweep_csv(problem, budget).map(Rendered::ok),
        Command::Verify => {
            let options = VerifyOptions {
                reference: problem.q.clone(),
                subset: problem.b.clone(),
                omega_perturbation: settings.corrupt_omega,
            };
            let report = verify(&problem.p, problem.n()?, &problem.a, budget, &options)?;
            let failed: Vec<&str> = report
                .checks
                .iter()
                .filter(|c| !c.passed)
                .map(|c| c.name.as_str())
                .collect();
            let failure = (!failed.is_empty()).then(|| {
                Failure::new(
                    FailureKind::ChecksFailed,
                    format!("failed checks: {}", failed.join(", ")),
                )
            });
            Ok(Rendered {
                text: to_json(&report),
                failure,
            })
        }
        Command::Mc => mc(problem, budget, settings).map(|r| Rendered::ok(to_json(&r))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExactReport {
    pub n: u64,
    pub k: usize,
    pub log_prob_event: f64,
    pub prob_event: f64,
    pub log10_prob_event: f64,
    pub omega: Dist,
    pub total_correlation: InfoValue,
    pub entropy_mu: InfoValue,
    pub kl_omega_p: InfoValue,
    /// `-ln P(A) - n D(ω‖P) - TC`.
    pub identity_residual: f64,
    pub identity_relative_residual: f64,
    pub member_types: u64,
}

pub fn exact(problem: &Problem, budget: u64) -> Result<ExactReport, Failure> {
    let s = summarize(&problem.p, problem.n()?, &problem.a, budget)?;
    let residual = s.identity_residual();
    Ok(ExactReport {
        n: s.n,
        k: problem.p.len(),
        log_prob_event: s.log_prob_event,
        prob_event: s.log_prob_event.exp(),
        log10_prob_event: s.log_prob_event / std::f64::consts::LN_10,
        omega: s.omega.clone(),
        total_correlation: s.total_correlation,
        entropy_mu: s.entropy_mu,
        kl_omega_p: s.kl_omega_p,
        identity_residual: residual,
        identity_relative_residual: residual.abs() / s.identity_scale(),
        member_types: s.member_types,
    })
}

pub fn bounds(problem: &Problem, budget: u64, with_subset: bool) -> Result<BoundsReport, Failure> {
    let n = problem.n()?;
    let terms = AsymptoticTerms::new(&problem.p, &problem.a)?;
    let mut report = report_with(&problem.p, n, &problem.a, &terms, budget)?;
    if with_subset {
        let b = problem.b.as_ref().unwrap_or(&problem.a);
        report.subset = Some(subset_bound_with(
            &problem.p,
            n,
            &problem.a,
            b,
            &terms.projection,
            budget,
        )?);
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestPoint {
    pub point: Vec<f64>,
    pub in_set: bool,
    /// Absent when the point lies outside the constraint set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pythagorean: Option<PythagoreanResidual>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IProjectReport {
    pub projection: IProjection,
    pub log_normalizer: f64,
    pub test_points: Vec<TestPoint>,
}

pub fn iproject(problem: &Problem) -> Result<IProjectReport, Failure> {
    let (p, a) = (&problem.p, &problem.a);
    let projection = project(p, a)?;
    let test_points = problem
        .test_points
        .iter()
        .map(|t| {
            let q = Dist::new(t.clone())?;
            let in_set = a.contains(&q)?;
            let pythagorean = if in_set {
                Some(projection.pythagorean_residual(p, a, &q)?)
            } else {
                None
            };
            Ok(TestPoint {
                point: t.clone(),
                in_set,
                pythagorean,
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    Ok(IProjectReport {
        log_normalizer: projection.log_normalizer(p, a),
        projection,
        test_points,
    })
}

pub const SWEEP_COLUMNS: [&str; 10] = [
    "n",
    "exact_rate",
    "ub_marginal",
    "ub_iproj",
    "lb_cross",
    "lb_maxcross",
    "tc_slack",
    "gap_to_asymptote",
    "status",
    "reason",
];

pub fn sweep_csv(problem: &Problem, budget: u64) -> Result<String, Failure> {
    let entries = sanov_core::sweep(&problem.p, &problem.a, &problem.n_values()?, budget)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SWEEP_COLUMNS)
        .map_err(|e| Failure::new(FailureKind::Internal, e.to_string()))?;
    for entry in &entries {
        let row: Vec<String> = match entry {
            SweepEntry::Ok(r) => {
                let mut row = vec![r.n.to_string()];
                row.extend(
                    [
                        r.exact_rate,
                        r.ub_marginal,
                        r.ub_iproj,
                        r.lb_cross,
                        r.lb_maxcross,
                        r.tc_slack,
                        r.asymptote_gap,
                    ]
                    .map(float17),
                );
                row.extend(["ok".to_string(), String::new()]);
                row
            }
            SweepEntry::Skipped { n, reason } => {
                let mut row = vec![n.to_string()];
                row.extend(std::iter::repeat_n(String::new(), 7));
                row.extend(["skipped".to_string(), reason.clone()]);
                row
            }
        };
        w.write_record(&row)
            .map_err(|e| Failure::new(FailureKind::Internal, e.to_string()))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Failure::new(FailureKind::Internal, e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Failure::new(FailureKind::Internal, e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExactComparison {
    Computed {
        prob_event: f64,
        #[serde(with = "extended_f64")]
        log_prob_event: f64,
        /// Whether the interval contains the exact probability.
        covered: bool,
    },
    Skipped {
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McReport {
    pub n: u64,
    pub estimate: McEstimate,
    pub exact: ExactComparison,
}

pub fn mc(problem: &Problem, budget: u64, settings: &Settings) -> Result<McReport, Failure> {
    let n = problem.n()?;
    let trials = settings
        .trials
        .or(problem.spec.trials)
        .unwrap_or(DEFAULT_TRIALS);
    let seed = settings.seed.or(problem.spec.seed).unwrap_or(DEFAULT_SEED);
    let partitions = problem.spec.partitions.unwrap_or(1);
    if trials == 0 {
        return Err(Failure::validation(
            Some("--trials".into()),
            "must be positive".into(),
        ));
    }
    let estimate = estimate_partitioned(&problem.p, n, &problem.a, trials, seed, partitions)?;
    let exact = match summarize(&problem.p, n, &problem.a, budget) {
        Ok(s) => {
            let prob = s.log_prob_event.exp();
            ExactComparison::Computed {
                prob_event: prob,
                log_prob_event: s.log_prob_event,
                covered: estimate.covers(prob),
            }
        }
        Err(Error::EmptyEvent { .. }) => ExactComparison::Computed {
            prob_event: 0.0,
            log_prob_event: f64::NEG_INFINITY,
            covered: estimate.covers(0.0),
        },
        Err(e @ Error::Capacity { .. }) => ExactComparison::Skipped {
            reason: e.to_string(),
        },
        Err(e) => return Err(e.into()),
    };
    Ok(McReport { n, estimate, exact })
}

use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::builders::{build, Setup};
use super::{Check, Scenario};
use crate::algebroid::{anchor_check, antisymmetry_check, check_fiber_dims, leibniz_check, ANCHOR_TOL, ANTISYMMETRY_TOL};
use crate::error::Result;
use crate::foliation::linear_holonomy_with;
use crate::groupoid::check_axioms;
use crate::linearize::{linearize_exp, LinearizeOptions};
use crate::nerve::check_simplicial;
use crate::nmetric::verify_n_metric;
use crate::report::Report;

/// Command-line values; each one set here beats the scenario file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub tol: Option<f64>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub check: Check,
    /// Tolerance and budget requested for the check; components may carry
    /// their own.
    pub tol: f64,
    pub samples: usize,
    pub report: Report,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub builder: String,
    pub seed: u64,
    pub checks: Vec<CheckOutcome>,
    pub pass: bool,
    pub wall_time_s: f64,
    /// SHA-256 over everything above except the wall time, including the
    /// per-sample defects.
    pub hash: String,
}

impl RunReport {
    pub fn check(&self, c: Check) -> Option<&Report> {
        self.checks.iter().find(|o| o.check == c).map(|o| &o.report)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("run report serializes")
    }
}

fn digest(scenario: &str, builder: &str, seed: u64, checks: &[CheckOutcome], pass: bool) -> String {
    #[derive(Serialize)]
    struct Hashed<'a> {
        scenario: &'a str,
        builder: &'a str,
        seed: u64,
        checks: &'a [CheckOutcome],
        pass: bool,
    }
    let body = serde_json::to_vec(&Hashed {
        scenario,
        builder,
        seed,
        checks,
        pass,
    })
    .expect("run report serializes");
    let mut h = Sha256::new();
    h.update(&body);
    for c in checks {
        for d in &c.report.defects {
            h.update(d.to_bits().to_le_bytes());
        }
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn missing(c: Check, tol: f64, what: &str) -> Report {
    Report::failure(c.name(), tol, format!("scenario provides no {what}"))
}

fn run_check(setup: &Setup, c: Check, tol: f64, samples: usize, seed: u64) -> Report {
    if c == Check::Holonomy {
        return holonomy(setup, tol, samples);
    }
    let Some(g) = setup.groupoid.as_ref() else {
        return missing(c, tol, "groupoid");
    };
    let lift = |r: Result<Report>| r.unwrap_or_else(|e| Report::failure(c.name(), tol, e.to_string()));
    match c {
        Check::Axioms => lift(check_axioms(g, samples, tol, seed)),
        Check::Simplicial => lift(check_simplicial(g, samples, tol, seed)),
        Check::NMetric => {
            if setup.metrics.is_empty() {
                return missing(c, tol, "n-metric");
            }
            let comps = setup
                .metrics
                .iter()
                .map(|m| {
                    let mut r = verify_n_metric(g, m, samples, tol, seed);
                    r.op = format!("level_{}", m.level());
                    r.tol = tol;
                    r
                })
                .collect();
            Report::combine(c.name(), comps)
        }
        Check::Linearization => {
            let (Some(sub), Some(m2)) = (setup.sub.as_ref(), setup.metrics.iter().find(|m| m.level() == 2)) else {
                return missing(c, tol, "saturated submanifold or 2-metric");
            };
            let opts = LinearizeOptions {
                probe_rays: setup.probe_rays,
                samples,
                tol,
                seed,
                ..LinearizeOptions::default()
            };
            match linearize_exp(g, m2, sub, setup.radius, &opts) {
                Ok(res) => {
                    let mut r = res.report().clone();
                    r.op = c.name().to_string();
                    r
                }
                Err(e) => Report::failure(c.name(), tol, e.to_string()),
            }
        }
        Check::Holonomy => unreachable!("handled above"),
        Check::Algebroid => {
            let fibers = lift(check_fiber_dims(g, samples.min(32), seed));
            let Some(s) = setup.sections.as_ref() else {
                return Report::combine(c.name(), vec![fibers]);
            };
            Report::combine(
                c.name(),
                vec![
                    leibniz_check(g, &s.alpha, &s.beta, &s.f, samples, seed, tol),
                    antisymmetry_check(g, &s.alpha, &s.beta, samples, seed, ANTISYMMETRY_TOL),
                    anchor_check(g, &s.alpha, &s.beta, samples, seed, ANCHOR_TOL),
                    fibers,
                ],
            )
        }
    }
}

/// `‖H − expected‖` per loop; `steps` is the RK4 step count.
fn holonomy(setup: &Setup, tol: f64, steps: usize) -> Report {
    let Some(f) = setup.foliation.as_ref() else {
        return missing(Check::Holonomy, tol, "foliation");
    };
    if setup.loops.is_empty() {
        return missing(Check::Holonomy, tol, "loops");
    }
    let mut defects = Vec::new();
    let mut mats = serde_json::Map::new();
    let mut notes = Vec::new();
    for l in &setup.loops {
        match linear_holonomy_with(f, &l.path, steps) {
            Ok(h) => {
                defects.push((&h - &l.expected).norm());
                let rows: Vec<Vec<f64>> = h.row_iter().map(|r| r.iter().copied().collect()).collect();
                mats.insert(l.name.clone(), serde_json::json!(rows));
            }
            Err(e) => {
                defects.push(f64::INFINITY);
                notes.push(format!("{}: {e}", l.name));
            }
        }
    }
    let mut r = Report::from_defects(Check::Holonomy.name(), defects, tol)
        .with_data("holonomy", mats)
        .with_data("steps", steps);
    r.notes = notes;
    r
}

/// Builds the scenario and runs its checks in order. Failed checks are
/// recorded in the report; only an unknown builder or a failed build is an
/// error.
pub fn run(sc: &Scenario, ov: &Overrides) -> Result<RunReport> {
    let start = Instant::now();
    let setup = build(&sc.builder, &sc.params)?;
    let seed = ov.seed.unwrap_or(sc.seed);
    let checks = if sc.checks.is_empty() { setup.checks.clone() } else { sc.checks.clone() };
    let outcomes: Vec<CheckOutcome> = checks
        .iter()
        .map(|&c| {
            let (dt, ds) = setup.defaults(c);
            let tol = ov.tol.or(sc.tol).unwrap_or(dt);
            let samples = ov.samples.or(sc.samples).unwrap_or(ds);
            CheckOutcome {
                check: c,
                tol,
                samples,
                report: run_check(&setup, c, tol, samples, seed),
            }
        })
        .collect();
    let pass = outcomes.iter().all(|o| o.report.pass);
    let hash = digest(&sc.name, &sc.builder, seed, &outcomes, pass);
    Ok(RunReport {
        scenario: sc.name.clone(),
        builder: sc.builder.clone(),
        seed,
        checks: outcomes,
        pass,
        wall_time_s: start.elapsed().as_secs_f64(),
        hash,
    })
}

pub fn run_scenario(path: &Path) -> Result<RunReport> {
    run(&Scenario::load(path)?, &Overrides::default())
}

/// `report.json` and one `defects_<check>.csv` per check.
pub fn write_outputs(r: &RunReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("report.json"), r.to_json())?;
    for o in &r.checks {
        o.report.write_csv(&dir.join(format!("defects_{}.csv", o.check.name())))?;
    }
    Ok(())
}

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;

use anneal_cert::convergence::{certify_target, select_target, Infeasibility};
use anneal_cert::registry::{self, TestFunction};
use anneal_cert::rng::stream_rng;
use anneal_cert::sampler::{
    default_schedule, run_schedule_with, Objective, RunOptions, Schedule, TraceRecord,
};
use anneal_cert::verify::{run_suite, Suite, SuiteOptions};
use anneal_cert::{Certificate, Error, GuaranteeSpec, Proposal, TargetSpec, DEFAULT_STEP_BUDGET};
use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::json;

use crate::config::Settings;

const INFEASIBLE: u8 = 2;
const DEFAULT_SEED: u64 = 0;
const TRACE_FLUSH_ROWS: u64 = 1024;

fn proposal(settings: &Settings) -> Result<Proposal> {
    let text = settings.proposal.as_deref().unwrap_or("uniform");
    text.parse()
        .with_context(|| format!("parsing --proposal {text}"))
}

fn write_json(dir: Option<&Path>, name: &str, value: &impl Serialize) -> Result<()> {
    if let Some(dir) = dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join(name);
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn print_json(value: &impl Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

enum Certified {
    Feasible(Certificate),
    Infeasible(Box<Infeasibility>),
}

/// Certificate for the settings. With `integer_j`, a fractional J is rounded
/// up and the certificate recomputed at the rounded target.
fn certify_settings(
    settings: &Settings,
    proposal: &Proposal,
    integer_j: bool,
) -> Result<Certified> {
    let spec = GuaranteeSpec::new(
        Settings::require(settings.epsilon, "epsilon")?,
        Settings::require(settings.alpha, "alpha")?,
        Settings::require(settings.sigma, "sigma")?,
    )?;
    let tv = Settings::require(settings.tv, "tv")?;
    if !(tv > 0.0 && tv < 1.0) {
        bail!("--tv must lie in (0, 1), got {tv}");
    }
    let mode = settings.delta_mode()?;
    let budget = settings.budget.unwrap_or(DEFAULT_STEP_BUDGET);
    let w = proposal.uniform_weight();
    let mut target = select_target(&spec, tv, w, mode)?;
    if integer_j {
        target = target.with_integer_j();
    }
    match certify_target(&spec, &target, tv, w, budget) {
        Ok(c) => Ok(Certified::Feasible(c)),
        Err(Error::Infeasible(inf)) => Ok(Certified::Infeasible(inf)),
        Err(e) => Err(e.into()),
    }
}

fn report_certificate(c: &Certificate) {
    eprintln!(
        "certificate: J = {}, delta = {}, sigma = {:.12}, k = {} final-stage steps, TV bound = {:.6e}, confidence = {:.12}",
        c.target.j(),
        c.target.delta(),
        c.sigma,
        c.k,
        c.tv_bound,
        c.confidence
    );
    if !c.is_reportable() {
        eprintln!("warning: confidence is 0; the TV bound swamps sigma");
    }
}

fn infeasible_json(inf: &Infeasibility) -> serde_json::Value {
    let mut v = serde_json::to_value(inf).expect("infeasibility serializes");
    v["status"] = json!("infeasible");
    v
}

fn report_infeasible(inf: &Infeasibility) {
    eprintln!(
        "infeasible, k = {} (= {:e}) final-stage steps needed at J = {}, delta = {} (beta = {:e}); budget is {}",
        inf.required_k, inf.required_k, inf.j, inf.delta, inf.beta, inf.budget
    );
}

pub fn certify(settings: &Settings) -> Result<ExitCode> {
    let proposal = proposal(settings)?;
    let out = settings.out.as_deref();
    match certify_settings(settings, &proposal, false)? {
        Certified::Feasible(c) => {
            report_certificate(&c);
            write_json(out, "certificate.json", &c)?;
            print_json(&c)?;
            Ok(ExitCode::SUCCESS)
        }
        Certified::Infeasible(inf) => {
            report_infeasible(&inf);
            let v = infeasible_json(&inf);
            write_json(out, "certificate.json", &v)?;
            print_json(&v)?;
            Ok(ExitCode::from(INFEASIBLE))
        }
    }
}

fn lookup(settings: &Settings) -> Result<(TestFunction, bool)> {
    let name = settings.function.as_deref().context("missing --function")?;
    let f = registry::lookup(name, settings.dim)?;
    Ok((f, name.starts_with("noisy-")))
}

struct TraceWriter {
    out: BufWriter<File>,
    rows: u64,
}

impl TraceWriter {
    fn create(path: &Path, dim: usize) -> Result<Self> {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let mut out = BufWriter::new(file);
        let coords: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
        writeln!(out, "step,J,{},value", coords.join(","))?;
        out.flush()?;
        Ok(Self { out, rows: 0 })
    }

    fn record(&mut self, rec: &TraceRecord) -> std::io::Result<()> {
        write!(self.out, "{},{}", rec.step, rec.j)?;
        for x in &rec.theta {
            write!(self.out, ",{x}")?;
        }
        writeln!(self.out, ",{}", rec.value)?;
        self.rows += 1;
        if self.rows.is_multiple_of(TRACE_FLUSH_ROWS) {
            self.out.flush()?;
        }
        Ok(())
    }
}

pub fn run(settings: &Settings) -> Result<ExitCode> {
    let (f, noisy) = lookup(settings)?;
    let proposal = proposal(settings)?;
    let seed = settings.seed.unwrap_or(DEFAULT_SEED);
    let out = settings.out.as_deref();

    let (target, k, certificate) = if settings.wants_certificate() {
        if settings.j.is_some() || settings.steps.is_some() {
            bail!("give either a certificate request (--epsilon/--alpha/--sigma/--tv) or --J/--steps, not both");
        }
        match certify_settings(settings, &proposal, noisy)? {
            Certified::Feasible(c) => {
                report_certificate(&c);
                write_json(out, "certificate.json", &c)?;
                (c.target, c.k, Some(c))
            }
            Certified::Infeasible(inf) => {
                report_infeasible(&inf);
                let v = infeasible_json(&inf);
                write_json(out, "certificate.json", &v)?;
                print_json(&v)?;
                return Ok(ExitCode::from(INFEASIBLE));
            }
        }
    } else {
        let j = Settings::require(settings.j, "J")?;
        let delta = Settings::require(settings.delta, "delta")?;
        let steps = Settings::require(settings.steps, "steps")?;
        (TargetSpec::new(j, delta)?, steps, None)
    };
    if noisy && target.integer_j().is_none() {
        bail!(
            "the expected-value kernel needs an integer J, got {}",
            target.j()
        );
    }

    let schedule = if settings.no_ladder {
        Schedule::single(target.j(), k)?
    } else {
        default_schedule(target.j(), k)?
    };
    let trace_every = settings.trace_every.unwrap_or(1);
    let mut trace = match (out, trace_every) {
        (Some(dir), n) if n > 0 => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            Some(TraceWriter::create(&dir.join("trace.csv"), f.domain.dim())?)
        }
        _ => None,
    };
    let noisy_criterion = f.noisy();
    let objective = if noisy {
        Objective::ExpectedValue(&*noisy_criterion)
    } else {
        Objective::Deterministic(&*f.criterion)
    };
    let mut rng = stream_rng(seed, 0);
    let outcome = run_schedule_with(
        &f.domain,
        f.domain.center(),
        &schedule,
        &target,
        &proposal,
        objective,
        RunOptions {
            trace_every: if trace.is_some() { trace_every } else { 0 },
        },
        &mut rng,
        &mut |rec| match trace.as_mut() {
            Some(t) => t.record(rec),
            None => Ok(()),
        },
    )?;
    if let Some(mut t) = trace {
        t.out.flush()?;
    }

    let state = &outcome.final_state;
    // the output directory is not part of the experiment; leaving it out keeps
    // result.json identical across output locations
    let config = Settings {
        out: None,
        ..settings.clone()
    };
    let result = json!({
        "config": config,
        "seed": seed,
        "function": f.name,
        "kernel": if noisy { "expected-value" } else { "deterministic" },
        "proposal": proposal,
        "target": target,
        "schedule": schedule.stages(),
        "best": { "theta": outcome.best_theta.coords(), "value": outcome.best_value },
        "final_state": {
            "theta": state.theta.coords(),
            "value": state.value(),
            "cached": state.cached,
            "steps": state.step_index,
            "accepted": state.accepted,
            "out_of_domain": state.out_of_domain,
        },
        "registry_max": f.max_value,
        "certificate": certificate,
    });
    eprintln!(
        "run: {} steps, best value {:.6} at {:?}, final value {:.6}",
        state.step_index,
        outcome.best_value,
        outcome.best_theta.coords(),
        state.value()
    );
    write_json(out, "result.json", &result)?;
    print_json(&result)?;
    Ok(ExitCode::SUCCESS)
}

pub fn verify(settings: &Settings) -> Result<ExitCode> {
    let suite: Suite = settings.suite.as_deref().unwrap_or("all").parse()?;
    let seed = settings.seed.unwrap_or(DEFAULT_SEED);
    let report = run_suite(suite, &SuiteOptions::default(), seed);
    for c in &report.checks {
        eprintln!(
            "{} {}: statistic {:.6e}, threshold {:.6e}{}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.statistic,
            c.threshold,
            c.detail
                .as_ref()
                .map(|d| format!(" ({d})"))
                .unwrap_or_default()
        );
    }
    write_json(settings.out.as_deref(), "verify.json", &report)?;
    print_json(&report)?;
    Ok(if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use qrwt_core::cocycle::{
    choi_min_eigenvalue, eh_generator, f_from_hamiltonian, generator_convergence, hp_check, limit_psi, lindblad,
    lindblad_closed_form, HamiltonianKind, HpBlocks,
};
use qrwt_core::experiments::{
    errors_at, example_c3, hp_negative_controls, walk_cocycle_sweep, ConvergenceSummary, MatrixElementProblem,
    MatrixElementRow, WalkModel,
};
use qrwt_core::generators::{
    effective_noise_count, limit_generator, limit_generator_multiplicative, limit_image, noise_bound, LimitGenerator,
};
use qrwt_core::linalg::{elementary, identity};
use qrwt_core::random::{random_matrix, random_vector, seeded};
use qrwt_core::walk_sim::{dense_walk_oracle, recursive_walk_value, WalkRun};
use qrwt_core::{CMatrix, Superoperator};

use crate::config::{Config, Generator};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    /// The configuration cannot drive the requested subcommand.
    #[error("config field `{field}`: {message}")]
    Config { field: &'static str, message: String },
    #[error(transparent)]
    Core(#[from] qrwt_core::Error),
}

fn unsupported(field: &'static str, message: impl Into<String>) -> RunError {
    RunError::Config { field, message: message.into() }
}

/// The result of one subcommand.
pub struct Outcome {
    pub summary: Value,
    pub csv: Option<String>,
    pub passed: bool,
}

/// Wall-clock per stage, reported on stderr only so reports stay byte-stable.
pub struct Stopwatch {
    start: Instant,
}

impl Stopwatch {
    pub fn start() -> Self {
        Self { start: Instant::now() }
    }

    pub fn lap(&mut self, stage: &str) {
        eprintln!("[time] {stage}: {:.3?}", self.start.elapsed());
        self.start = Instant::now();
    }
}

fn matrix_json(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    m.row_iter().map(|r| r.iter().map(|z| [z.re, z.im]).collect()).collect()
}

fn to_value(x: impl Serialize) -> Value {
    serde_json::to_value(x).expect("report types serialise")
}

fn walk_model(cfg: &Config) -> Result<WalkModel, RunError> {
    match &cfg.generator {
        Generator::Hamiltonian { spec, kind } => Ok(WalkModel::Hamiltonian { spec: spec.clone(), kind: *kind }),
        Generator::Trivial => Ok(WalkModel::Trivial),
        other => Err(unsupported(
            "generator",
            format!("a `{}` generator has no walk; use a hamiltonian or trivial generator", other.label()),
        )),
    }
}

/// `F` together with its Hamiltonian blocks when available.
fn fmat(cfg: &Config) -> Result<(CMatrix, Option<HpBlocks>), RunError> {
    let fx = &cfg.fixture;
    match &cfg.generator {
        Generator::Hamiltonian { spec, .. } => {
            let (f, blocks) = f_from_hamiltonian(spec, &fx.g, &fx.c)?;
            Ok((f, Some(blocks)))
        }
        Generator::RawF { f, .. } => Ok((f.clone(), None)),
        other => Err(unsupported("generator", format!("a `{}` generator has no F matrix", other.label()))),
    }
}

fn limit(cfg: &Config) -> Result<LimitGenerator, RunError> {
    let fx = &cfg.fixture;
    Ok(match &cfg.generator {
        Generator::Hamiltonian { spec, kind } => WalkModel::Hamiltonian { spec: spec.clone(), kind: *kind }.limit(fx)?,
        Generator::RawF { f, kind: HamiltonianKind::Right } => limit_generator_multiplicative(f, fx.dim_h, &fx.g, &fx.c)?,
        Generator::RawF { f, kind: HamiltonianKind::Conjugation } => eh_generator(f, fx.dim_h, &fx.g, &fx.c)?.psi,
        Generator::Superoperator(big_psi) => limit_generator(big_psi, &fx.g, &fx.c)?,
        Generator::Trivial => WalkModel::Trivial.limit(fx)?,
    })
}

fn problem(cfg: &Config) -> MatrixElementProblem {
    MatrixElementProblem { a: cfg.a.clone(), u: cfg.u.clone(), v: cfg.v.clone(), f: cfg.f.clone(), g: cfg.g.clone() }
}

fn rows_csv(rows: &[MatrixElementRow]) -> String {
    let mut out = String::from("tau,t,re,im,abs_err,cocycle_re,cocycle_im\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{},{},{},{}\n", r.tau, r.t, r.re, r.im, r.abs_err, r.cocycle_re, r.cocycle_im));
    }
    out
}

pub fn gns(cfg: &Config, clock: &mut Stopwatch) -> Result<Outcome, RunError> {
    let (g, c) = (&cfg.fixture.g, &cfg.fixture.c);
    let n = g.n();
    let mut state_residual: f64 = 0.0;
    let mut rng = seeded(cfg.seed);
    for _ in 0..cfg.trials {
        let x = random_matrix(&mut rng, n, n);
        let via_omega = g.omega().dotc(&(g.pi(&x)? * g.omega()));
        state_residual = state_residual.max((via_omega - g.state().expectation(&x)).norm());
    }
    let mut orbit = CMatrix::zeros(g.khat_dim(), n * n);
    for u in 0..n {
        for v in 0..n {
            orbit.set_column(u * n + v, &(g.pi(&elementary(n, n, u, v))? * g.omega()));
        }
    }
    let cyclic_rank = orbit.rank(1e-10);
    clock.lap("gns");
    let cond = c.validate(g, cfg.seed)?;
    clock.lap("conditional expectation");
    let passed = state_residual <= cfg.tol.identity && cyclic_rank == g.khat_dim() && cond.passed();
    Ok(Outcome {
        summary: json!({
            "n": n,
            "k": g.k(),
            "khat_dim": g.khat_dim(),
            "support_eigenvalues": g.support_eigenvalues(),
            "omega_norm": g.omega().norm(),
            "state_residual": state_residual,
            "cyclic_rank": cyclic_rank,
            "blocks": c.blocks(),
            "rank_l": c.rank_l(),
            "conditional_expectation": to_value(&cond),
            "passed": passed,
        }),
        csv: None,
        passed,
    })
}

pub fn noise_count(cfg: &Config, clock: &mut Stopwatch) -> Result<Outcome, RunError> {
    let fx = &cfg.fixture;
    let (n, k, l) = match cfg.noise {
        Some(s) => (s.n, s.k, s.l),
        None => (fx.g.n(), fx.g.k(), fx.c.rank_l()),
    };
    let bound = noise_bound(n, k, l).map_err(|e| unsupported("noise", e.to_string()))?;
    let mut passed = cfg.noise.and_then(|s| s.expected).is_none_or(|e| e == bound);
    let mut summary = json!({ "n": n, "k": k, "l": l, "bound": bound });
    let own_dims = (n, k, l) == (fx.g.n(), fx.g.k(), fx.c.rank_l());
    if own_dims && !matches!(cfg.generator, Generator::Trivial) {
        let count = effective_noise_count(&limit(cfg)?, &fx.g, cfg.trials, cfg.seed)?;
        passed &= count <= bound;
        summary["effective_count"] = json!(count);
    }
    clock.lap("noise count");
    summary["passed"] = json!(passed);
    Ok(Outcome { summary, csv: None, passed })
}

pub fn limit_gen(cfg: &Config, clock: &mut Stopwatch) -> Result<Outcome, RunError> {
    let fx = &cfg.fixture;
    let lg = limit(cfg)?;
    clock.lap("limit generator");
    let mut summary = json!({
        "generator": cfg.generator.label(),
        "psi_norm": lg.psi().matrix().norm(),
        "psi_in_shape": lg.psi().in_shape(),
        "psi_out_shape": lg.psi().out_shape(),
        "has_g_matrix": lg.g_matrix().is_some(),
        "effective_noise_count": effective_noise_count(&lg, &fx.g, cfg.trials, cfg.seed)?,
        "psi": matrix_json(lg.psi().matrix()),
    });
    let mut passed = lg.psi().matrix().iter().all(|z| z.re.is_finite() && z.im.is_finite());
    if let Generator::Hamiltonian { spec, kind } = &cfg.generator {
        let big_psi = limit_psi(spec, *kind, &fx.g, &fx.c)?;
        let distances = generator_convergence(spec, *kind, &big_psi, &cfg.taus, &fx.g, &fx.c)?;
        let conv = ConvergenceSummary::new(&cfg.taus, &distances);
        passed &= conv.monotone_pass();
        summary["generator_convergence"] = to_value(&conv);
        clock.lap("generator convergence");
    }
    summary["passed"] = json!(passed);
    Ok(Outcome { summary, csv: None, passed })
}

pub fn check_hp(cfg: &Config, clock: &mut Stopwatch) -> Result<Outcome, RunError> {
    let fx = &cfg.fixture;
    let (f, blocks) = fmat(cfg)?;
    let gm = limit_image(&f, &fx.g, &fx.c)?;
    let report = hp_check(&gm, &fx.g, Some((&f, &fx.c)))?;
    let mut passed = report.passed()
        && report.isometry_residual <= cfg.tol.hp
        && report.coisometry_residual <= cfg.tol.hp;
    let mut summary = json!({ "generator": cfg.generator.label(), "report": to_value(&report) });
    if let Some(b) = &blocks {
        let controls = hp_negative_controls(b, fx, cfg.seed)?;
        let rejected = controls.iter().map(|r| !r.passed()).collect::<Vec<_>>();
        passed &= rejected.iter().all(|&r| r);
        summary["structure_residual"] = json!(b.structure_residual(&fx.g, &fx.c)?);
        summary["negative_controls"] = json!({
            "shifted_k": to_value(&controls[0]),
            "scaled_v": to_value(&controls[1]),
            "rejected": rejected,
        });
    }
    clock.lap("hudson-parthasarathy check");
    summary["passed"] = json!(passed);
    Ok(Outcome { summary, csv: None, passed })
}

pub fn simulate(cfg: &Config, clock: &mut Stopwatch) -> Result<Outcome, RunError> {
    let fx = &cfg.fixture;
    let model = walk_model(cfg)?;
    let rows = walk_cocycle_sweep(&model, fx, &problem(cfg), &cfg.taus, &cfg.times)?;
    clock.lap("walk and cocycle sweep");
    let max_abs_err = rows.iter().map(|r| r.abs_err).fold(0.0, f64::max);
    let mut passed = cfg.tol.max_abs_err.is_none_or(|cap| max_abs_err <= cap);
    let mut summary = json!({
        "generator": cfg.generator.label(),
        "cells": rows.len(),
        "max_abs_err": max_abs_err,
    });
    if let Some(steps) = cfg.oracle_steps {
        let tau = cfg.taus[0];
        let w = model.walk_generator(tau, fx)?;
        let phi_hat = w.hat(&fx.g)?;
        let run = WalkRun::new(phi_hat.clone(), fx.g.omega().clone(), tau, tau * steps as f64)?;
        let mut rng = seeded(cfg.seed);
        let d = fx.g.khat_dim();
        let xs: Vec<_> = (0..steps).map(|_| random_vector(&mut rng, d)).collect();
        let ys: Vec<_> = (0..steps).map(|_| random_vector(&mut rng, d)).collect();
        let oracle = dense_walk_oracle(&phi_hat, steps, &cfg.a, &cfg.u, &cfg.v, &xs, &ys)?;
        let rec = recursive_walk_value(&run, &cfg.a, &cfg.u, &cfg.v, &xs, &ys)?;
        let deviation = (oracle - rec).norm() / oracle.norm().max(1.0);
        passed &= deviation <= cfg.tol.oracle;
        summary["oracle"] = json!({ "steps": steps, "tau": tau, "relative_deviation": deviation });
        clock.lap("dense oracle");
    }
    summary["passed"] = json!(passed);
    Ok(Outcome { summary, csv: Some(rows_csv(&rows)), passed })
}

pub fn converge(cfg: &Config, clock: &mut Stopwatch) -> Result<Outcome, RunError> {
    let fx = &cfg.fixture;
    let model = walk_model(cfg)?;
    let rows = walk_cocycle_sweep(&model, fx, &problem(cfg), &cfg.taus, &cfg.times)?;
    clock.lap("walk and cocycle sweep");
    let per_time: Vec<Value> = cfg
        .times
        .iter()
        .map(|&t| {
            let (taus, errors) = errors_at(&rows, t);
            json!({ "t": t, "summary": to_value(ConvergenceSummary::new(&taus, &errors)) })
        })
        .collect();
    let mut passed = per_time.iter().all(|s| s["summary"]["passed"] == json!(true));
    let mut summary = json!({ "generator": cfg.generator.label(), "matrix_elements": per_time });
    if let Generator::Hamiltonian { spec, kind } = &cfg.generator {
        let big_psi = limit_psi(spec, *kind, &fx.g, &fx.c)?;
        let distances = generator_convergence(spec, *kind, &big_psi, &cfg.taus, &fx.g, &fx.c)?;
        let conv = ConvergenceSummary::new(&cfg.taus, &distances);
        passed &= conv.monotone_pass();
        summary["generator_convergence"] = to_value(&conv);
        clock.lap("generator convergence");
    }
    summary["passed"] = json!(passed);
    Ok(Outcome { summary, csv: Some(rows_csv(&rows)), passed })
}

pub fn lindblad_cmd(cfg: &Config, clock: &mut Stopwatch) -> Result<Outcome, RunError> {
    let fx = &cfg.fixture;
    let (f, blocks) = fmat(cfg)?;
    let eh = eh_generator(&f, fx.dim_h, &fx.g, &fx.c)?;
    let l: Superoperator = lindblad(&eh.psi, &fx.g)?;
    let unit_residual = l.apply(&identity(fx.dim_h))?.norm();
    let closed_form = blocks.as_ref().map(|b| lindblad_closed_form(b, &fx.g).and_then(|c| l.distance(&c))).transpose()?;
    let choi = cfg
        .lindblad_times
        .iter()
        .map(|&t| Ok(json!({ "t": t, "min_eigenvalue": choi_min_eigenvalue(&l, t)? })))
        .collect::<Result<Vec<_>, qrwt_core::Error>>()?;
    clock.lap("lindblad");
    let choi_ok = choi.iter().all(|c| c["min_eigenvalue"].as_f64().is_some_and(|e| e >= cfg.tol.choi));
    let passed = unit_residual <= cfg.tol.identity && closed_form.is_none_or(|d| d <= cfg.tol.lindblad) && choi_ok;
    Ok(Outcome {
        summary: json!({
            "generator": cfg.generator.label(),
            "eh_residual": eh.eh_residual,
            "unit_residual": unit_residual,
            "closed_form_distance": closed_form,
            "choi": choi,
            "lindblad": matrix_json(l.matrix()),
            "passed": passed,
        }),
        csv: None,
        passed,
    })
}

pub fn example_c3_cmd(cfg: &Config, clock: &mut Stopwatch) -> Result<Outcome, RunError> {
    let report = example_c3(cfg.c3.lambda1, &cfg.c3.params, cfg.trials, cfg.seed)?;
    clock.lap("three-level example");
    let passed = report.passed;
    let mut summary = to_value(&report);
    summary["expected_noise_count"] = json!(qrwt_core::experiments::C3_EXPECTED_NOISES);
    Ok(Outcome { summary, csv: None, passed })
}

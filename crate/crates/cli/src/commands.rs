//! Subcommand implementations. Everything is computed in nats and rescaled on output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use blexpo_core::dist::{parse_dist_json, Dist};
use blexpo_core::dsbs::{self, DsbsParams};
use blexpo_core::envelopes::{lower_convex_envelope, upper_concave_envelope, EnvelopeResult};
use blexpo_core::grid::uniform_axis;
use blexpo_core::measures::{canon_order, ent, entropy_range, holder_conjugate, renyi, AlphabetFunction, OrderPair};
use blexpo_core::product::{
    construct_type_function, pairing_exponent, qstability_norm, stratified_subset, subset_from_bits, verify_sse_sandwich,
    CheckRecord, ConstructionConstants, ProductTable, ZERO_LEVEL,
};
use blexpo_core::schrodinger::{coupling_2x2_value, min_entropy_coupling, CouplingProblem};
use blexpo_core::surfaces::{
    lambda_forward_star, lambda_oneshot, phi_q_curve, phi_surfaces, psi_lower_grid, renyi_concentration_curve,
    theta_r_at, theta_r_curve, Bound, Direction, ExponentQuery, Letter, SurfaceConfig,
};
use blexpo_core::xreal::xdiv;
use blexpo_core::{FiniteDist, JointDist};

use crate::output::{Cell, Table};
use crate::{Base, CliError, Command, QueryArgs, RunArgs, SurfaceKind, ThetaKind};

/// Largest product alphabet whose subsets are enumerated exhaustively in `qstab`.
const QSTAB_EXHAUSTIVE: usize = 16;
/// Largest product alphabet whose subset pairs are enumerated exhaustively in `verify-sse`.
const SSE_EXHAUSTIVE: usize = 8;

/// Tables and summary produced by one subcommand.
pub struct Outcome {
    pub tables: Vec<Table>,
    pub summary: Value,
    pub failures: usize,
    pub base: Base,
}

struct Ctx<'a> {
    run: &'a RunArgs,
    base: Base,
    cfg: SurfaceConfig,
}

impl Ctx<'_> {
    /// Nats to output units.
    fn out(&self, v: f64) -> f64 {
        v * self.base.factor()
    }

    /// Input units to nats.
    fn nats(&self, v: f64) -> f64 {
        v / self.base.factor()
    }

    fn joint(&self) -> Result<JointDist, CliError> {
        if let Some(rho) = self.run.dsbs {
            return Ok(JointDist::dsbs(rho)?);
        }
        let Some(path) = &self.run.dist else {
            return Err(CliError::Usage("one of --dist or --dsbs is required".into()));
        };
        match parse_dist_json(&std::fs::read_to_string(path)?)? {
            Dist::Joint(j) => Ok(j),
            Dist::Marginal(_) => Err(blexpo_core::Error::Invalid("a joint distribution (\"pxy\") is required".into()).into()),
        }
    }

    fn outcome(&self, tables: Vec<Table>, summary: Value, failures: usize) -> Outcome {
        Outcome { tables, summary, failures, base: self.base }
    }
}

pub fn dispatch(run: &RunArgs, command: &Command) -> Result<Outcome, CliError> {
    let default_base = if matches!(command, Command::Fig1 { .. }) { Base::Two } else { Base::E };
    let ctx = Ctx { run, base: run.base.unwrap_or(default_base), cfg: SurfaceConfig { resolution: run.resolution, ..SurfaceConfig::default() } };
    match command {
        Command::Surface { which, r } => surface(&ctx, *which, *r),
        Command::Theta { which, r, alpha, beta } => theta(&ctx, *which, *r, *alpha, *beta),
        Command::Coupling { qx, qy, max_iter } => coupling(&ctx, qx, qy, *max_iter),
        Command::Lambda { query } => lambda(&ctx, query),
        Command::Gerber { p, q, bound, letter, alpha } => gerber(&ctx, *p, *q, (*bound).into(), (*letter).into(), alpha.as_deref()),
        Command::Qstab { q, n, samples } => qstab(&ctx, *q, *n, *samples),
        Command::VerifySse { n, samples } => verify_sse(&ctx, *n, *samples),
        Command::Construct { query, ns } => construct(&ctx, query, ns),
        Command::Fig1 { q } => fig1(&ctx, *q),
        Command::Selftest => selftest(&ctx),
    }
}

fn require_r(r: Option<f64>) -> Result<f64, CliError> {
    r.ok_or_else(|| CliError::Usage("--r is required for this quantity".into()))
}

fn surface(ctx: &Ctx, which: SurfaceKind, r: Option<f64>) -> Result<Outcome, CliError> {
    let pxy = ctx.joint()?;
    let f = ctx.base.factor();
    let mut tables = Vec::new();
    if which == SurfaceKind::PhiR {
        let r = require_r(r)?;
        let curve = phi_q_curve(&pxy, r, &ctx.cfg)?;
        tables.push(Table::from_grid("phi_r.csv", &["alpha", "phi_r"], &curve.rescaled(f)));
    } else {
        let s = phi_surfaces(&pxy, &ctx.cfg)?;
        if matches!(which, SurfaceKind::Lower | SurfaceKind::All) {
            tables.push(Table::from_grid("phi_lower.csv", &["s", "t", "phi_lower"], &s.phi_lower.rescaled(f)));
        }
        if matches!(which, SurfaceKind::Upper | SurfaceKind::All) {
            tables.push(Table::from_grid("phi_upper.csv", &["s", "t", "phi_upper"], &s.phi_upper.rescaled(f)));
        }
    }
    let summary = json!({ "tables": tables.iter().map(|t| json!({"name": t.name, "rows": t.rows.len()})).collect::<Vec<_>>() });
    Ok(ctx.outcome(tables, summary, 0))
}

/// Lower convex envelope of the pinned surface `ψ̲`, whose increasing part is `Θ̲`.
fn theta_lower_env(pxy: &JointDist, cfg: &SurfaceConfig) -> Result<EnvelopeResult, CliError> {
    let s = phi_surfaces(pxy, cfg)?;
    Ok(lower_convex_envelope(&psi_lower_grid(pxy, &s.phi_lower, cfg)?)?)
}

fn theta(ctx: &Ctx, which: ThetaKind, r: Option<f64>, alpha: Option<f64>, beta: Option<f64>) -> Result<Outcome, CliError> {
    let pxy = ctx.joint()?;
    let f = ctx.base.factor();
    if alpha.is_none() && beta.is_some() {
        return Err(CliError::Usage("--beta needs --alpha".into()));
    }
    let table = match which {
        ThetaKind::Lower | ThetaKind::Upper => {
            let (name, env) = if which == ThetaKind::Lower {
                ("theta_lower", theta_lower_env(&pxy, &ctx.cfg)?)
            } else {
                ("theta_upper", upper_concave_envelope(&phi_surfaces(&pxy, &ctx.cfg)?.phi_upper)?)
            };
            match alpha {
                Some(a) => {
                    let b = beta.unwrap_or(0.0);
                    let (an, bn) = (ctx.nats(a), ctx.nats(b));
                    let v = if which == ThetaKind::Lower { env.increasing_lower(an, bn)? } else { env.increasing_upper(an, bn)? };
                    let mut t = Table::new(&format!("{name}.csv"), &["alpha", "beta", name]);
                    t.push(vec![Cell::Num(a), Cell::Num(b), Cell::Num(ctx.out(v))]);
                    t
                }
                None => {
                    let grid = if which == ThetaKind::Lower { env.grid.suffix_min() } else { env.grid.prefix_max() };
                    Table::from_grid(&format!("{name}.csv"), &["alpha", "beta", name], &grid.rescaled(f))
                }
            }
        }
        ThetaKind::R => {
            let r = require_r(r)?;
            let curve = phi_q_curve(&pxy, r, &ctx.cfg)?;
            let (env, grid) = theta_r_curve(&curve, r)?;
            match alpha {
                Some(a) => {
                    let mut t = Table::new("theta_r.csv", &["alpha", "theta_r"]);
                    t.push(vec![Cell::Num(a), Cell::Num(ctx.out(theta_r_at(&env, r, ctx.nats(a))?))]);
                    t
                }
                None => Table::from_grid("theta_r.csv", &["alpha", "theta_r"], &grid.rescaled(f)),
            }
        }
    };
    let summary = json!({ "rows": table.rows.len() });
    Ok(ctx.outcome(vec![table], summary, 0))
}

fn coupling(ctx: &Ctx, qx: &[f64], qy: &[f64], max_iter: usize) -> Result<Outcome, CliError> {
    let pxy = ctx.joint()?;
    let prob = CouplingProblem::new(pxy, FiniteDist::new(qx)?, FiniteDist::new(qy)?)?;
    let sol = min_entropy_coupling(&prob, ctx.run.tol, max_iter)?;
    let mut value = Table::new("coupling_value.csv", &["value", "dual_gap", "marginal_error", "iterations", "status"]);
    value.push(vec![
        Cell::Num(ctx.out(sol.value_nats)),
        Cell::Num(ctx.out(sol.dual_gap)),
        Cell::Num(sol.marginal_error),
        Cell::Int(sol.iterations as u64),
        Cell::Text(format!("{:?}", sol.status)),
    ]);
    let mut plan = Table::new("coupling_plan.csv", &["x", "y", "mass"]);
    if !sol.coupling.is_empty() {
        for x in 0..sol.nx {
            for y in 0..sol.ny {
                plan.push(vec![Cell::Int(x as u64), Cell::Int(y as u64), Cell::Num(sol.coupling[x * sol.ny + y])]);
            }
        }
    }
    let mut potentials = Table::new("coupling_potentials.csv", &["side", "index", "log_potential"]);
    for (side, pots) in [("x", &sol.log_u), ("y", &sol.log_v)] {
        for (i, &u) in pots.iter().enumerate() {
            potentials.push(vec![Cell::Text(side.into()), Cell::Int(i as u64), Cell::Num(ctx.out(u))]);
        }
    }
    let summary = json!({
        "value": ctx.out(sol.value_nats),
        "dual_gap": ctx.out(sol.dual_gap),
        "iterations": sol.iterations,
        "marginal_error": sol.marginal_error,
        "status": format!("{:?}", sol.status),
    });
    Ok(ctx.outcome(vec![value, plan, potentials], summary, 0))
}

fn query(ctx: &Ctx, q: &QueryArgs) -> Result<ExponentQuery, CliError> {
    Ok(ExponentQuery::new(q.p, q.phat, q.q, q.qhat, ctx.nats(q.alpha), ctx.nats(q.beta))?)
}

fn lambda(ctx: &Ctx, args: &QueryArgs) -> Result<Outcome, CliError> {
    let pxy = ctx.joint()?;
    let q = query(ctx, args)?;
    let oneshot = lambda_oneshot(&q, &pxy, Direction::Forward, &ctx.cfg)?.get();
    let env = lower_convex_envelope(&phi_surfaces(&pxy, &ctx.cfg)?.phi_lower)?;
    let star = lambda_forward_star(&env, &q)?.get();
    let mut t = Table::new("lambda.csv", &["alpha", "beta", "lambda_oneshot", "lambda_star"]);
    t.push(vec![Cell::Num(args.alpha), Cell::Num(args.beta), Cell::Num(ctx.out(oneshot)), Cell::Num(ctx.out(star))]);
    let summary = json!({ "lambda_oneshot": ctx.out(oneshot), "lambda_star": ctx.out(star) });
    Ok(ctx.outcome(vec![t], summary, 0))
}

fn gerber(ctx: &Ctx, p: f64, q: f64, bound: Bound, letter: Letter, alpha: Option<&[f64]>) -> Result<Outcome, CliError> {
    let pxy = ctx.joint()?;
    let alphas: Vec<f64> = match alpha {
        Some(a) => a.iter().map(|&v| ctx.nats(v)).collect(),
        None => uniform_axis(0.0, pxy.marginals().0.alpha_max(), ctx.run.resolution),
    };
    let values = renyi_concentration_curve(&pxy, p, q, &alphas, bound, letter, &ctx.cfg)?;
    let mut t = Table::new("gerber.csv", &["alpha", "value"]);
    for (a, v) in alphas.iter().zip(&values) {
        t.push(vec![Cell::Num(ctx.out(*a)), Cell::Num(ctx.out(v.get()))]);
    }
    let summary = json!({ "points": alphas.len() });
    Ok(ctx.outcome(vec![t], summary, 0))
}

/// Membership masks of every nonempty subset, or of `samples` stratified subsets.
fn subsets(size: usize, exhaustive_limit: usize, samples: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<bool>> {
    if size <= exhaustive_limit {
        (1..1u64 << size).map(|bits| subset_from_bits(bits, size)).collect()
    } else {
        (0..samples).map(|_| stratified_subset(size, rng)).collect()
    }
}

fn record_row(ctx: &Ctx, rec: &CheckRecord, alpha: f64, beta: Option<f64>) -> Vec<Cell> {
    let mut row = vec![Cell::Text(rec.check.clone()), Cell::Int(rec.n as u64), Cell::Num(ctx.out(alpha))];
    if let Some(b) = beta {
        row.push(Cell::Num(ctx.out(b)));
    }
    row.extend([Cell::Num(ctx.out(rec.lhs)), Cell::Num(ctx.out(rec.rhs)), Cell::Num(ctx.out(rec.margin)), Cell::Bool(rec.pass)]);
    row
}

fn qstab(ctx: &Ctx, q: f64, n: usize, samples: usize) -> Result<Outcome, CliError> {
    let pxy = ctx.joint()?;
    let q = canon_order(q);
    let r = holder_conjugate(q);
    if q == 0.0 || !r.is_finite() {
        return Err(blexpo_core::Error::OrderOutOfRange(format!("q-stability needs q != 0 and q != 1, got {q}")).into());
    }
    let curve = phi_q_curve(&pxy, r, &ctx.cfg)?;
    let (env, theta) = theta_r_curve(&curve, r)?;
    let span = (env.grid.axes[0][0], env.grid.axes[0][env.grid.axes[0].len() - 1]);
    let table = ProductTable::new(&pxy, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.run.seed);
    let sets: Vec<Vec<bool>> = subsets(table.x_size(), QSTAB_EXHAUSTIVE, samples, &mut rng)
        .into_iter()
        .filter(|a| table.log_prob_x(a).is_ok_and(f64::is_finite))
        .collect();
    let nf = n as f64;
    let records: Result<Vec<(f64, CheckRecord)>, CliError> = sets
        .par_iter()
        .map(|a| {
            let alpha = -table.log_prob_x(a)? / nf;
            let lhs = -qstability_norm(&table, a, q)? / nf;
            let params = json!({ "q": q, "alpha": alpha });
            let rec = if q >= 1.0 {
                let bound = theta_r_at(&env, r, alpha.clamp(span.0, span.1))?;
                CheckRecord::le("qstab_lower", n, params, bound, lhs, ctx.run.tol)
            } else {
                let bound = if alpha <= ZERO_LEVEL { 0.0 } else { theta_r_at(&env, r, alpha.clamp(span.0, span.1))? };
                CheckRecord::le("qstab_upper", n, params, lhs, bound, ctx.run.tol)
            };
            Ok((alpha, rec))
        })
        .collect();
    let records = records?;
    let mut checks = Table::new("qstab_checks.csv", &["check", "n", "alpha", "lhs", "rhs", "margin", "pass"]);
    for (alpha, rec) in &records {
        checks.push(record_row(ctx, rec, *alpha, None));
    }
    let failures = records.iter().filter(|(_, r)| !r.pass).count();
    let curve_table = Table::from_grid("theta_qprime.csv", &["alpha", "theta_qprime"], &theta.rescaled(ctx.base.factor()));
    let worst = records.iter().map(|(_, r)| r.margin).fold(f64::INFINITY, f64::min);
    let summary = json!({ "q": q, "r": r, "n": n, "sets": records.len(), "failures": failures, "min_margin": ctx.out(worst) });
    Ok(ctx.outcome(vec![curve_table, checks], summary, failures))
}

fn verify_sse(ctx: &Ctx, n: usize, samples: usize) -> Result<Outcome, CliError> {
    let pxy = ctx.joint()?;
    let s = phi_surfaces(&pxy, &ctx.cfg)?;
    let lower = lower_convex_envelope(&psi_lower_grid(&pxy, &s.phi_lower, &ctx.cfg)?)?;
    let upper = upper_concave_envelope(&s.phi_upper)?;
    let table = ProductTable::new(&pxy, n)?;
    let (xs, ys) = (table.x_size(), table.y_size());
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.run.seed);
    let positive_x = |a: &Vec<bool>| table.log_prob_x(a).is_ok_and(f64::is_finite);
    let positive_y = |b: &Vec<bool>| table.log_prob_y(b).is_ok_and(f64::is_finite);
    let pairs: Vec<(Vec<bool>, Vec<bool>)> = if xs <= SSE_EXHAUSTIVE && ys <= SSE_EXHAUSTIVE {
        let a_sets: Vec<Vec<bool>> = subsets(xs, SSE_EXHAUSTIVE, 0, &mut rng).into_iter().filter(positive_x).collect();
        let b_sets: Vec<Vec<bool>> = subsets(ys, SSE_EXHAUSTIVE, 0, &mut rng).into_iter().filter(positive_y).collect();
        a_sets.iter().flat_map(|a| b_sets.iter().map(move |b| (a.clone(), b.clone()))).collect()
    } else {
        (0..samples)
            .map(|_| (stratified_subset(xs, &mut rng), stratified_subset(ys, &mut rng)))
            .filter(|(a, b)| positive_x(a) && positive_y(b))
            .collect()
    };
    let reports: Result<Vec<_>, CliError> =
        pairs.par_iter().map(|(a, b)| Ok(verify_sse_sandwich(&table, a, b, &lower, &upper, ctx.run.tol)?)).collect();
    let reports = reports?;
    let mut checks = Table::new("sse_checks.csv", &["check", "n", "alpha", "beta", "lhs", "rhs", "margin", "pass"]);
    let mut failures = 0;
    for rep in &reports {
        for rec in rep.to_records(ctx.run.tol) {
            failures += usize::from(!rec.pass);
            checks.push(record_row(ctx, &rec, rep.alpha, Some(rep.beta)));
        }
    }
    let min_lower = reports.iter().map(|r| r.lower_margin).fold(f64::INFINITY, f64::min);
    let min_upper = reports.iter().map(|r| r.upper_margin).fold(f64::INFINITY, f64::min);
    let summary = json!({
        "n": n,
        "pairs": reports.len(),
        "failures": failures,
        "min_lower_margin": ctx.out(min_lower),
        "min_upper_margin": ctx.out(min_upper),
    });
    Ok(ctx.outcome(vec![checks], summary, failures))
}

fn construct(ctx: &Ctx, args: &QueryArgs, ns: &[usize]) -> Result<Outcome, CliError> {
    let pxy = ctx.joint()?;
    let q = query(ctx, args)?;
    let (px, py) = pxy.marginals();
    let env = lower_convex_envelope(&phi_surfaces(&pxy, &ctx.cfg)?.phi_lower)?;
    let consts = ConstructionConstants::default();
    let mut t = Table::new("construct.csv", &["n", "alpha_n", "beta_n", "exponent", "lambda_star", "gap"]);
    let mut rows = Vec::new();
    for &n in ns {
        let f = construct_type_function(&px, n, q.x_orders, q.alpha, &consts)?;
        let g = construct_type_function(&py, n, q.y_orders, q.beta, &consts)?;
        let e = pairing_exponent(&pxy, &f, &g, q.x_orders, q.y_orders)?;
        let star = lambda_forward_star(&env, &ExponentQuery { alpha: e.alpha_n, beta: e.beta_n, ..q })?.get();
        let gap = e.exponent - star;
        t.push(vec![
            Cell::Int(n as u64),
            Cell::Num(ctx.out(e.alpha_n)),
            Cell::Num(ctx.out(e.beta_n)),
            Cell::Num(ctx.out(e.exponent)),
            Cell::Num(ctx.out(star)),
            Cell::Num(ctx.out(gap)),
        ]);
        rows.push(json!({ "n": n, "gap": ctx.out(gap) }));
    }
    Ok(ctx.outcome(vec![t], json!({ "rows": rows }), 0))
}

fn fig1(ctx: &Ctx, q: f64) -> Result<Outcome, CliError> {
    let Some(rho) = ctx.run.dsbs else {
        return Err(CliError::Usage("fig1 needs --dsbs RHO".into()));
    };
    let params = DsbsParams::new(rho)?;
    let data = dsbs::fig1_data(&params, ctx.run.resolution, q)?;
    let f = ctx.base.factor() / std::f64::consts::LOG2_E;
    let tables = vec![
        Table::from_grid("phi_lower.csv", &["s", "t", "phi_lower"], &data.phi_lower.rescaled(f)),
        Table::from_grid("theta_lower.csv", &["alpha", "beta", "theta_lower"], &data.theta_lower.rescaled(f)),
        Table::from_grid("theta_upper.csv", &["alpha", "beta", "theta_upper"], &data.theta_upper.rescaled(f)),
        Table::from_grid("theta_qprime.csv", &["alpha", "theta_qprime"], &data.theta_qprime.rescaled(f)),
    ];
    let summary = json!({ "rho": rho, "q": q, "resolution": ctx.run.resolution });
    Ok(ctx.outcome(tables, summary, 0))
}

fn selftest(ctx: &Ctx) -> Result<Outcome, CliError> {
    let mut t = Table::new("selftest.csv", &["check", "pass", "detail"]);
    let mut failures = 0;
    let mut report = |name: &str, pass: bool, detail: String| {
        failures += usize::from(!pass);
        t.push(vec![Cell::Text(name.into()), Cell::Bool(pass), Cell::Text(detail)]);
    };
    let tol = ctx.run.tol;

    report("inf_over_inf_is_undefined", xdiv(f64::INFINITY, f64::INFINITY).is_err(), String::new());
    report(
        "holder_conjugate_endpoints",
        holder_conjugate(1.0) == f64::INFINITY && holder_conjugate(f64::INFINITY) == 1.0,
        String::new(),
    );

    let p = FiniteDist::new(&[0.2, 0.3, 0.5])?;
    let qd = FiniteDist::new(&[0.6, 0.3, 0.1])?;
    let orders = [-2.0, -0.5, 0.5, 1.0, 2.0, 5.0];
    let vals: Vec<f64> = orders.iter().map(|&s| renyi(&qd, &p, s).map(|v| v.get())).collect::<Result<_, _>>()?;
    let monotone = vals.windows(2).all(|w| w[1] >= w[0] - 1e-12);
    report("renyi_nondecreasing_in_order", monotone, format!("{vals:?}"));

    let f = AlphabetFunction::new(vec![0.5, 2.0, 1.0])?;
    let mut range_ok = true;
    for (a, b) in [(2.0, 1.0), (0.5, 3.0), (-1.0, 2.0), (-2.0, -0.5)] {
        let o = OrderPair::new(a, b)?;
        let e = ent(&f, &p, o)?.get();
        range_ok &= !e.is_finite() || entropy_range(&p, o)?.contains(e, 1e-12);
    }
    report("entropy_in_range", range_ok, String::new());

    let pxy = JointDist::dsbs(0.9)?;
    let prob = CouplingProblem::new(pxy.clone(), FiniteDist::new(&[0.25, 0.75])?, FiniteDist::new(&[0.25, 0.75])?)?;
    let sol = min_entropy_coupling(&prob, 1e-12, 100_000)?;
    let closed = coupling_2x2_value(&pxy, 0.25, 0.25);
    let err = (sol.value_nats - closed).abs();
    report("coupling_matches_closed_form", err <= 1e-8, format!("error {err:e}"));

    let params = DsbsParams::new(0.9)?;
    let s = 0.3;
    let closed_psi = dsbs::psi_lower(s, 0.0, &params)?;
    report("theta_on_axis_equals_level", (closed_psi - s).abs() <= 1e-12, format!("{closed_psi}"));

    let small = SurfaceConfig { resolution: 41, ..SurfaceConfig::default() };
    let pxy8 = JointDist::dsbs(0.8)?;
    let surf = phi_surfaces(&pxy8, &small)?;
    let lower = lower_convex_envelope(&psi_lower_grid(&pxy8, &surf.phi_lower, &small)?)?;
    let upper = upper_concave_envelope(&surf.phi_upper)?;
    let table = ProductTable::new(&pxy8, 2)?;
    let mut worst = f64::INFINITY;
    let mut sandwich_fail = 0;
    for ab in 1..16u64 {
        for bb in 1..16u64 {
            let rep = verify_sse_sandwich(&table, &subset_from_bits(ab, 4), &subset_from_bits(bb, 4), &lower, &upper, tol)?;
            worst = worst.min(rep.lower_margin.min(rep.upper_margin));
            sandwich_fail += usize::from(!rep.pass);
        }
    }
    report("sse_sandwich_n2", sandwich_fail == 0, format!("min margin {worst:e}"));

    let above = surf
        .phi_lower
        .values
        .iter()
        .enumerate()
        .filter(|(k, _)| surf.phi_lower.mask[*k])
        .all(|(k, &v)| {
            let (a, b) = surf.phi_lower.coords(k);
            v >= a.max(b) - 1e-9
        });
    report("phi_lower_above_max_level", above, String::new());

    let summary = json!({ "checks": t.rows.len(), "failures": failures });
    Ok(ctx.outcome(vec![t], summary, failures))
}

//! The verification tasks a scenario can request.

use crate::config::{PointSpec, ScenarioConfig, SceneConfig, Task, Tolerances};
use crate::report::{Assertion, Relation, Table};
use divpair::cantorlab::{field_from_construction, CantorConstruction};
use divpair::geometry::{clip_piece, CurvePiece, FinitePerimeterSet};
use divpair::measures::{default_suite, PartTag, TestFunction, Unit};
use divpair::pairing::{
    analytic_traces, coarea_pairing_check, gauss_green, pairing_result, tangent_blowup_check,
    theta_density, zero_extension_gauss_green, Carrier, TraceMethod,
};
use divpair::traces::{cyl_trace, halfball_estimates, trace_jump_check, TraceEstimate};
use divpair::Vec2;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

/// What a task produced.
#[derive(Debug, Default)]
pub struct Outcome {
    pub assertions: Vec<Assertion>,
    pub data: Value,
    pub tables: Vec<Table>,
}

pub fn run_task(task: Task, cfg: &ScenarioConfig, tol: &Tolerances) -> Result<Outcome, String> {
    let scene = || {
        cfg.scene
            .as_ref()
            .ok_or_else(|| format!("task `{}` needs a scene", task.name()))
    };
    match task {
        Task::Traces => traces(cfg, scene()?, tol),
        Task::Pairing => pairing(cfg, scene()?, tol),
        Task::GaussGreen => gauss_green_task(cfg, scene()?, tol),
        Task::Coarea => coarea(cfg, scene()?, tol),
        Task::Tangent => tangent(cfg, scene()?, tol),
        Task::Cantor => cantor(cfg, tol),
        Task::All => Err("`all` is expanded before dispatch".into()),
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Points equally spaced in arc length along the jump set of `u`, offset by 0.3 of
/// a spacing so that they avoid piece endpoints.
pub fn jump_samples(u: &divpair::scenes::BVFunction, n: usize) -> Vec<Vec2> {
    let pieces: Vec<&CurvePiece> = u.jump_set().iter().map(|j| &j.piece).collect();
    let total: f64 = pieces.iter().map(|p| p.length()).sum();
    if total == 0.0 || n == 0 {
        return Vec::new();
    }
    (0..n)
        .filter_map(|k| {
            let mut s = (k as f64 + 0.3) / n as f64 * total;
            for p in &pieces {
                let len = p.length();
                if s <= len {
                    return Some(p.point(s / len));
                }
                s -= len;
            }
            None
        })
        .collect()
}

fn sample_points(scene: &SceneConfig, spec: &PointSpec) -> Result<Vec<Vec2>, String> {
    let pts = match spec {
        PointSpec::Explicit(p) => p.clone(),
        PointSpec::JumpSamples { jump_samples: n } => jump_samples(&scene.u, *n),
    };
    if pts.is_empty() {
        return Err("no sample points: u has no jump set; list `points` explicitly".into());
    }
    Ok(pts)
}

/// `(radius, value, fit)` rows of a limit estimate, the fit being
/// `L + C rᵖ` through the finest sample.
fn convergence_table(id: String, est: &TraceEstimate) -> Table {
    let mut t = Table::new(id, &["radius", "value", "fit"]);
    let finest = est
        .samples
        .iter()
        .copied()
        .min_by(|a, b| a.0.total_cmp(&b.0));
    let fit = |r: f64| match finest {
        Some((rf, vf)) if est.order.is_finite() && rf > 0.0 => {
            est.value + (vf - est.value) * (r / rf).powf(est.order)
        }
        _ => est.value,
    };
    for &(r, v) in &est.samples {
        t.rows.push(vec![r, v, fit(r)]);
    }
    t
}

#[derive(Serialize)]
struct HalfballRecord {
    plus: f64,
    minus: f64,
    star: f64,
    theta: f64,
    plus_order: f64,
    minus_order: f64,
    converged: bool,
    /// `θ` at `λ = 0, 1/2, 1`.
    theta_line: [f64; 3],
}

#[derive(Serialize)]
struct CylinderRecord {
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<f64>,
    converged: bool,
    error_estimate: f64,
    /// On `Θ_A ∩ J_u`, where the cylinder formula does not give the density.
    method_invalid_here: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct PointRecord {
    index: usize,
    x: Vec2,
    normal: Vec2,
    carrier: Carrier,
    lambda: f64,
    analytic_plus: f64,
    analytic_minus: f64,
    analytic_theta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    halfball: Option<HalfballRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cylinder: Option<CylinderRecord>,
}

fn trace_point(
    k: usize,
    x: Vec2,
    cfg: &ScenarioConfig,
    scene: &SceneConfig,
    tol: &Tolerances,
) -> Result<(PointRecord, Vec<Assertion>, Vec<Table>), String> {
    let p = &cfg.traces;
    let s = &cfg.schedules;
    let (a, u) = (&scene.field, &scene.u);
    let lambda = p.lambda;
    let an = theta_density(a, u, x, TraceMethod::Analytic, lambda, s).map_err(err)?;
    let nu = an.normal;
    let (tp, tm) = analytic_traces(a, x, nu);
    let mut rec = PointRecord {
        index: k,
        x,
        normal: nu,
        carrier: an.carrier,
        lambda,
        analytic_plus: tp,
        analytic_minus: tm,
        analytic_theta: an.value,
        halfball: None,
        cylinder: None,
    };
    let mut asserts = Vec::new();
    let mut tables = Vec::new();
    let tag = format!("p{k}");
    if p.methods.contains(&TraceMethod::Halfball) {
        let est = halfball_estimates(a, x, nu, &s.halfball).map_err(err)?;
        tables.push(convergence_table(
            format!("traces.{tag}.halfball_plus"),
            &est.plus,
        ));
        tables.push(convergence_table(
            format!("traces.{tag}.halfball_minus"),
            &est.minus,
        ));
        let th = |l: f64| {
            theta_density(a, u, x, TraceMethod::Halfball, l, s)
                .map(|t| t.value)
                .map_err(err)
        };
        let line = [th(0.0)?, th(0.5)?, th(1.0)?];
        let theta = th(lambda)?;
        asserts.push(Assertion::at_most(
            format!("{tag}.halfball_theta"),
            (theta - an.value).abs(),
            tol.halfball,
        ));
        if an.carrier == Carrier::Jump {
            let affine = (line[1] - 0.5 * (line[0] + line[2]))
                .abs()
                .max((theta - ((1.0 - lambda) * line[0] + lambda * line[2])).abs());
            asserts.push(Assertion::at_most(
                format!("{tag}.lambda_collinearity"),
                affine,
                tol.collinearity,
            ));
            asserts.push(Assertion::at_most(
                format!("{tag}.theta_half_is_star"),
                (line[1] - est.star).abs(),
                tol.collinearity,
            ));
        }
        rec.halfball = Some(HalfballRecord {
            plus: est.plus.value,
            minus: est.minus.value,
            star: est.star,
            theta,
            plus_order: est.plus.order,
            minus_order: est.minus.order,
            converged: est.converged(),
            theta_line: line,
        });
    }
    if p.methods.contains(&TraceMethod::Cylinder) {
        let invalid = an.carrier == Carrier::Jump && divpair::pairing::on_field_jump_set(a, x);
        let target = p
            .expected_cylinder
            .or(if invalid { None } else { Some(0.5 * (tp + tm)) });
        let cyl = match cyl_trace(a, x, nu, &s.cylinder) {
            Ok(est) => {
                tables.push(convergence_table(format!("traces.{tag}.cylinder"), &est));
                CylinderRecord {
                    value: Some(est.value),
                    converged: est.converged,
                    error_estimate: est.error_estimate,
                    method_invalid_here: invalid,
                    error: None,
                }
            }
            Err(e) => CylinderRecord {
                value: None,
                converged: false,
                error_estimate: f64::INFINITY,
                method_invalid_here: invalid,
                error: Some(e.to_string()),
            },
        };
        if let Some(t) = target {
            let v = match (cyl.value, cyl.converged) {
                (Some(v), true) => (v - t).abs(),
                _ => f64::NAN,
            };
            asserts.push(Assertion::at_most(
                format!("{tag}.cylinder"),
                v,
                tol.cylinder,
            ));
        }
        rec.cylinder = Some(cyl);
    }
    Ok((rec, asserts, tables))
}

fn traces(cfg: &ScenarioConfig, scene: &SceneConfig, tol: &Tolerances) -> Result<Outcome, String> {
    let pts = sample_points(scene, &cfg.traces.points)?;
    let per_point = pts
        .par_iter()
        .enumerate()
        .map(|(k, &x)| trace_point(k, x, cfg, scene, tol))
        .collect::<Result<Vec<_>, String>>()?;
    let mut out = Outcome::default();
    let mut records = Vec::new();
    for (rec, a, t) in per_point {
        records.push(rec);
        out.assertions.extend(a);
        out.tables.extend(t);
    }
    let mut identity = None;
    if cfg.traces.jump_identity {
        let a = &scene.field;
        let mut sigma: Vec<CurvePiece> = if a.jump_set().is_empty() {
            scene.u.jump_set().iter().map(|j| j.piece).collect()
        } else {
            a.jump_set().to_vec()
        };
        if let Some(d) = &scene.domain {
            sigma = sigma.iter().flat_map(|p| clip_piece(p, d)).collect();
        }
        if !sigma.is_empty() {
            let check = trace_jump_check(a, &sigma, &cfg.schedules.halfball).map_err(err)?;
            out.assertions.push(Assertion::at_most(
                "jump_identity",
                check.residual,
                tol.jump_identity,
            ));
            identity = Some(check);
        }
    }
    out.data = json!({ "points": records, "jump_identity": identity });
    Ok(out)
}

fn pairing(cfg: &ScenarioConfig, scene: &SceneConfig, tol: &Tolerances) -> Result<Outcome, String> {
    let p = &cfg.pairing;
    let tests = p.tests.clone().unwrap_or_else(default_suite);
    let lambda = p.lambda.unwrap_or(0.5);
    let r = pairing_result(
        &scene.field,
        &scene.u,
        scene.domain.as_ref(),
        lambda,
        &tests,
        &[],
        &[],
        &cfg.schedules,
        cfg.quadrature_tol,
    )
    .map_err(err)?;
    let mut out = Outcome::default();
    for (k, c) in r.comparisons.iter().enumerate() {
        out.assertions.push(Assertion::at_most(
            format!("t{k}.difference"),
            c.difference,
            tol.pairing,
        ));
        if let Some(e) = p.expected.as_ref().map(|e| e[k]) {
            out.assertions.push(Assertion::at_most(
                format!("t{k}.analytic_expected"),
                (c.analytic - e).abs(),
                tol.expected,
            ));
            out.assertions.push(Assertion::at_most(
                format!("t{k}.distributional_expected"),
                (c.distributional - e).abs(),
                tol.expected,
            ));
        }
    }
    let mass = |tag: PartTag| {
        r.analytic
            .part(tag)
            .integrate(&Unit, cfg.quadrature_tol)
            .map_err(err)
    };
    out.data = json!({
        "lambda": lambda,
        "comparisons": r.comparisons,
        "total": {
            "absolute": mass(PartTag::Absolute)?,
            "jump": mass(PartTag::Jump)?,
            "cantor": mass(PartTag::Cantor)?,
        },
    });
    Ok(out)
}

fn method_name(m: TraceMethod) -> &'static str {
    match m {
        TraceMethod::Analytic => "analytic",
        TraceMethod::Halfball => "halfball",
        TraceMethod::Cylinder => "cylinder",
    }
}

fn ledger_tol(m: TraceMethod, tol: &Tolerances) -> f64 {
    match m {
        TraceMethod::Analytic => tol.gauss_green_analytic,
        _ => tol.gauss_green_numeric,
    }
}

fn gauss_green_task(
    cfg: &ScenarioConfig,
    scene: &SceneConfig,
    tol: &Tolerances,
) -> Result<Outcome, String> {
    let p = &cfg.gauss_green;
    let sets: Vec<FinitePerimeterSet> = match &p.sets {
        Some(s) if !s.is_empty() => s.clone(),
        _ => scene.domain.iter().cloned().collect(),
    };
    let mut jobs = Vec::new();
    for k in 0..sets.len() {
        for &v in &p.variants {
            for &m in &p.methods {
                jobs.push((k, v, m));
            }
        }
    }
    let ledgers = jobs
        .par_iter()
        .map(|&(k, v, m)| {
            gauss_green(
                &scene.field,
                &scene.u,
                &sets[k],
                v,
                m,
                &cfg.schedules,
                cfg.quadrature_tol,
            )
            .map_err(err)
        })
        .collect::<Result<Vec<_>, String>>()?;
    let mut out = Outcome::default();
    let mut rows = Vec::new();
    for (&(k, v, m), l) in jobs.iter().zip(&ledgers) {
        let variant = serde_json::to_value(v).map_err(err)?;
        let name = format!(
            "e{k}.{}.{}",
            variant.as_str().unwrap_or("?"),
            method_name(m)
        );
        out.assertions
            .push(Assertion::at_most(name, l.residual, ledger_tol(m, tol)));
        rows.push(json!({ "set": k, "ledger": l }));
    }
    let mut zero = Vec::new();
    if let Some(omega) = &p.zero_extension {
        let zl = p
            .methods
            .par_iter()
            .map(|&m| {
                zero_extension_gauss_green(
                    &scene.field,
                    &scene.u,
                    omega,
                    m,
                    &cfg.schedules,
                    cfg.quadrature_tol,
                )
                .map_err(err)
            })
            .collect::<Result<Vec<_>, String>>()?;
        for (&m, l) in p.methods.iter().zip(zl) {
            out.assertions.push(Assertion::at_most(
                format!("zero_extension.{}", method_name(m)),
                l.residual,
                ledger_tol(m, tol),
            ));
            zero.push(l);
        }
    }
    out.data = json!({ "ledgers": rows, "zero_extension": zero });
    Ok(out)
}

fn coarea(cfg: &ScenarioConfig, scene: &SceneConfig, tol: &Tolerances) -> Result<Outcome, String> {
    let window = cfg
        .coarea
        .window
        .as_ref()
        .or(scene.domain.as_ref())
        .ok_or("coarea needs a window")?;
    let c =
        coarea_pairing_check(&scene.field, &scene.u, window, cfg.quadrature_tol).map_err(err)?;
    let mut out = Outcome::default();
    out.assertions
        .push(Assertion::at_most("residual", c.residual, tol.coarea));
    for (k, t) in c.transfer.iter().enumerate() {
        out.assertions.push(Assertion::at_most(
            format!("transfer{k}"),
            (t.theta_u - t.theta_level).abs(),
            tol.transfer,
        ));
    }
    if !c.levels.is_empty() {
        let mut t = Table::new("coarea.levels", &["level", "weight", "value"]);
        t.rows = c.levels.iter().map(|&(a, b, v)| vec![a, b, v]).collect();
        out.tables.push(t);
    }
    out.data = json!({
        "lhs": c.lhs,
        "rhs": c.rhs,
        "residual": c.residual,
        "level_count": c.levels.len(),
        "transfer": c.transfer,
    });
    Ok(out)
}

fn tangent(cfg: &ScenarioConfig, scene: &SceneConfig, tol: &Tolerances) -> Result<Outcome, String> {
    let p = &cfg.tangent;
    let x = match p.point {
        Some(x) => x,
        None => *jump_samples(&scene.u, 8)
            .first()
            .ok_or("u has no jump set to blow up at")?,
    };
    let b = tangent_blowup_check(
        &scene.field,
        &scene.u,
        x,
        p.alpha,
        &p.radii,
        &default_suite(),
        0.1 * cfg.quadrature_tol,
    )
    .map_err(err)?;
    let tail_rise = |g: &dyn Fn(&(f64, f64, f64)) -> f64| {
        b.rows[b.rows.len() - p.tail..]
            .windows(2)
            .map(|w| g(&w[1]) - g(&w[0]))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let mut out = Outcome::default();
    out.assertions.push(Assertion::new(
        "gap_tail_increase",
        tail_rise(&|r| r.1),
        Relation::Lt,
        0.0,
    ));
    out.assertions
        .push(Assertion::at_most("final_gap", b.final_gap(), tol.tangent));
    let mut t = Table::new("tangent.gaps", &["radius", "gap", "gap_mass"]);
    t.rows = b.rows.iter().map(|&(r, g, m)| vec![r, g, m]).collect();
    out.tables.push(t);
    out.data = json!({
        "x": b.x,
        "normal": b.normal,
        "trace_star": b.trace_star,
        "candidate_density": b.candidate_density,
        "alpha": b.alpha,
        "power_normalized_monotone": b.monotone_tail(p.tail),
        "mass_normalized_monotone": b.mass_monotone_tail(p.tail),
        "mass_normalized_final_gap": b.rows.last().map(|r| r.2),
    });
    Ok(out)
}

fn q_pow2(m: u32) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(1u64) << m)
}

/// Test functions sitting on each block `2m + E` of the construction field.
fn block_suite(blocks: u32) -> Vec<TestFunction> {
    let mut s = default_suite();
    for m in 1..=blocks {
        let c = 2.0 * m as f64;
        s.push(TestFunction::mollifier(Vec2::new(c + 0.3, 0.1), 0.4, 3));
        s.push(TestFunction::cutoff(Vec2::new(c + 0.5, -0.2), 0.2, 0.6));
    }
    s
}

fn cantor(cfg: &ScenarioConfig, tol: &Tolerances) -> Result<Outcome, String> {
    let p = cfg
        .cantor
        .as_ref()
        .ok_or("the cantor task needs a `cantor` section")?;
    let mut out = Outcome::default();
    let mut per_lambda = Vec::new();
    for &lambda in &p.lambdas {
        let c = CantorConstruction::build(lambda, p.depth).map_err(err)?;
        let id = format!("lambda={lambda}");
        let bd = c.box_dimension(p.first_fit_depth..=p.depth).map_err(err)?;
        out.assertions.push(Assertion::at_most(
            format!("{id}.dimension"),
            (bd.estimate - bd.exact).abs(),
            tol.dimension,
        ));
        let mut boxes = Table::new(format!("cantor.{id}.boxes"), &["mesh", "count", "fit"]);
        let x0 = bd.meshes.first().copied().unwrap_or(1.0);
        let n0 = bd.counts.first().copied().unwrap_or(1) as f64;
        for (&mesh, &count) in bd.meshes.iter().zip(&bd.counts) {
            boxes
                .rows
                .push(vec![mesh, count as f64, n0 * (x0 / mesh).powf(bd.estimate)]);
        }
        out.tables.push(boxes);

        // removed lengths against λ(1 − λ)^j / 2^j computed afresh
        let lq = c.lambda_exact().clone();
        let keep = BigRational::one() - &lq;
        let exact_gens = p.depth.min(12);
        let mut mismatches = 0u64;
        for j in 0..exact_gens {
            let want =
                &lq * Pow::pow(&keep, j) / BigRational::from_integer(BigInt::from(1u64) << j);
            mismatches += c
                .removed_exact(j)
                .iter()
                .filter(|(lo, hi)| hi - lo != want)
                .count() as u64;
        }
        out.assertions.push(Assertion::at_most(
            format!("{id}.removed_length_mismatches"),
            mismatches as f64,
            0.0,
        ));
        let conserved =
            c.removed_total(p.depth) + c.surviving_length(p.depth) == BigRational::one();
        out.assertions.push(Assertion::at_most(
            format!("{id}.mass_defect"),
            if conserved { 0.0 } else { 1.0 },
            0.0,
        ));

        let address = p
            .density_address
            .clone()
            .unwrap_or_else(|| (0..p.depth).map(|i| (i % 2) as u8).collect());
        let x = c.point_at(&address).map_err(err)?;
        let resolution = c.interval_length_f64(p.depth);
        let radii: Vec<f64> = (1..=60)
            .map(|k| 0.5f64.powi(k))
            .take_while(|r| *r >= 4.0 * resolution)
            .collect();
        let w = c.density_window(x, &radii).map_err(err)?;
        out.assertions.push(Assertion::new(
            format!("{id}.density_min"),
            w.min,
            Relation::Gt,
            0.0,
        ));
        out.assertions.push(Assertion::new(
            format!("{id}.density_max"),
            w.max,
            Relation::Lt,
            1.0,
        ));
        let mut dens = Table::new(format!("cantor.{id}.density"), &["radius", "density"]);
        dens.rows = w
            .radii
            .iter()
            .zip(&w.densities)
            .map(|(&r, &d)| vec![r, d])
            .collect();
        out.tables.push(dens);
        per_lambda.push(json!({
            "lambda": lambda,
            "dimension": bd,
            "density_point": x,
            "density_min": w.min,
            "density_max": w.max,
        }));
    }

    let mut field = Value::Null;
    if let Some(m) = p.field_blocks {
        let a = field_from_construction(m).map_err(err)?;
        let divs = block_suite(m)
            .par_iter()
            .map(|phi| a.distributional_divergence(phi, 1e-12).map_err(err))
            .collect::<Result<Vec<f64>, String>>()?;
        let worst = divs.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        out.assertions
            .push(Assertion::at_most("field.divergence", worst, tol.div_free));
        let dims = (1..=m)
            .map(|k| {
                CantorConstruction::build_rational(q_pow2(k), p.depth)
                    .and_then(|c| c.box_dimension(p.first_fit_depth..=p.depth))
                    .map(|d| d.estimate)
                    .map_err(err)
            })
            .collect::<Result<Vec<f64>, String>>()?;
        if dims.len() >= 2 {
            let rise = dims
                .windows(2)
                .map(|w| w[0] - w[1])
                .fold(f64::NEG_INFINITY, f64::max);
            out.assertions.push(Assertion::new(
                "field.block_dimension_decrease",
                rise,
                Relation::Lt,
                0.0,
            ));
        }
        field = json!({
            "blocks": m,
            "divergence_pairings": divs,
            "block_dimensions": dims,
        });
    }
    out.data = json!({ "constructions": per_lambda, "field": field });
    Ok(out)
}

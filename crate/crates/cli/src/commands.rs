use std::time::Instant;

use num_complex::Complex64;
use num_rational::BigRational;
use pv_core::counting::{
    brute_force_count, exponent_fit, mitm_count_with, quartic_count, relaxed_count, CountOptions, CountRecord,
    Method, RelaxedSites,
};
use pv_core::oscillatory::{
    decoupling_probe_with, decoupling_search, restriction_ratio, torus_mean_mc, weyl_sum, CellFunction,
    CoefficientGrid, Estimate, Nodes, ProbeOptions, ProbeResult, SamplePlan,
};
use pv_core::transversality::{
    bl_dimension_check, isotropic_search, nu_estimate, q_coefficients_exact, q_polynomial, verify_lemma_kernels,
    zero_set_square_count_with, Square, SubspaceBasis,
};
use pv_core::MonomialSystem;
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{
    Cli, Command, CountCmd, ExactMethod, FitArgs, Format, GridArgs, NRange, NodeKind, OscCmd, SiteKind, TransCmd,
};
use crate::expr::parse_polynomial;
use crate::range::{parse_geometric, parse_range};
use crate::{records, CliError};

type Res<T> = Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub fn dispatch(cli: &Cli) -> Res<String> {
    let ctx = Ctx {
        seed: cli.seed,
        no_timestamp: cli.no_timestamp,
    };
    match &cli.command {
        Command::Count(cmd) => count(cmd, &ctx, cli.format.unwrap_or(Format::Csv)),
        Command::Fit(args) => fit(args, cli.format.unwrap_or(Format::Json)),
        Command::Trans(cmd) => {
            if cli.format == Some(Format::Csv) {
                return Err(usage("trans reports are only available as json"));
            }
            trans(cmd, &ctx)
        }
        Command::Osc(cmd) => osc(cmd, &ctx, cli.format.unwrap_or(Format::Json)),
    }
}

struct Ctx {
    seed: u64,
    no_timestamp: bool,
}

impl Ctx {
    fn seconds(&self, start: Instant) -> f64 {
        if self.no_timestamp {
            0.0
        } else {
            start.elapsed().as_secs_f64()
        }
    }
}

fn json_text(v: &impl Serialize) -> Res<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::Failure(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn n_values(range: &NRange) -> Res<Vec<u32>> {
    let ns = match (&range.n, &range.n_geom) {
        (Some(r), None) => parse_range(r)?,
        (None, Some(g)) => parse_geometric(g)?,
        _ => return Err(usage("give exactly one of --n and --n-geom")),
    };
    if ns.contains(&0) {
        return Err(usage("N must be at least 1"));
    }
    Ok(ns)
}

fn count(cmd: &CountCmd, ctx: &Ctx, format: Format) -> Res<String> {
    let mut out: Vec<CountRecord> = Vec::new();
    match cmd {
        CountCmd::Exact {
            k,
            s,
            range,
            method,
            budget,
        } => {
            let ns = n_values(range)?;
            MonomialSystem::new(*k)?;
            if *s == 0 {
                return Err(usage("s must be at least 1"));
            }
            let mut opts = CountOptions::default();
            if let Some(b) = budget {
                opts.budget_entries = *b;
            }
            for n in ns {
                let rec = match method {
                    ExactMethod::Mitm => mitm_count_with(*k, *s, n, opts)?,
                    ExactMethod::Brute => {
                        let start = Instant::now();
                        let count = brute_force_count(*k, *s, n)?;
                        CountRecord {
                            k: *k,
                            s: *s,
                            n,
                            method: Method::Brute,
                            count,
                            seconds: start.elapsed().as_secs_f64(),
                            threads: rayon::current_num_threads(),
                            seed: None,
                        }
                    }
                };
                out.push(rec);
            }
        }
        CountCmd::Relaxed { s, range, sites, bits } => {
            let ns = n_values(range)?;
            for n in ns {
                let (site_set, seed) = match sites {
                    SiteKind::Integer => (RelaxedSites::integer(n as usize), None),
                    SiteKind::Random => (RelaxedSites::sample(n as usize, ctx.seed, *bits)?, Some(ctx.seed)),
                };
                let mut rec = relaxed_count(*s, &site_set)?;
                rec.seed = seed;
                out.push(rec);
            }
        }
        CountCmd::Quartic { range, c } => {
            for n in n_values(range)? {
                out.push(quartic_count(n, *c)?);
            }
        }
    }
    if ctx.no_timestamp {
        out.iter_mut().for_each(|r| r.seconds = 0.0);
    }
    match format {
        Format::Csv => records::to_csv(&out),
        Format::Json => records::to_json(&out),
    }
}

#[derive(Serialize)]
struct FitReport {
    k: u32,
    s: u32,
    method: Method,
    points: usize,
    slope: f64,
    stderr: f64,
    predicted: Option<i64>,
    difference: Option<f64>,
    divergent: bool,
}

fn fit(args: &FitArgs, format: Format) -> Res<String> {
    let text = std::fs::read_to_string(&args.input)
        .map_err(|e| usage(format!("cannot read {}: {e}", args.input.display())))?;
    let is_json = args.input.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let recs = if is_json {
        records::from_json(&text)?
    } else {
        records::from_csv(&text)?
    };
    if !(args.tolerance.is_finite() && args.tolerance >= 0.0) {
        return Err(usage("--tolerance must be finite and nonnegative"));
    }
    let f = exponent_fit(&recs)?;
    let first = &recs[0];
    // The conjectured exponent is defined for the integer systems only.
    let predicted = match first.method {
        Method::Brute | Method::Mitm | Method::Relaxed => {
            MonomialSystem::new(first.k).ok().map(|sys| sys.predicted_exponent(first.s))
        }
        Method::Quartic => None,
    };
    let difference = predicted.map(|p| f.slope - p as f64);
    let report = FitReport {
        k: first.k,
        s: first.s,
        method: first.method,
        points: f.points,
        slope: f.slope,
        stderr: f.stderr,
        predicted,
        difference,
        divergent: difference.is_some_and(|d| d.abs() > args.tolerance),
    };
    match format {
        Format::Json => json_text(&report),
        Format::Csv => {
            let opt = |v: Option<String>| v.unwrap_or_default();
            Ok(format!(
                "k,s,method,points,slope,stderr,predicted,difference,status\n{},{},{},{},{},{},{},{},{}\n",
                report.k,
                report.s,
                report.method,
                report.points,
                report.slope,
                report.stderr,
                opt(report.predicted.map(|p| p.to_string())),
                opt(report.difference.map(|d| d.to_string())),
                if report.divergent { "divergent" } else { "consistent" },
            ))
        }
    }
}

fn reals(text: &str, what: &str) -> Res<Vec<f64>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| usage(format!("{what}: '{}' is not a finite real", t.trim())))
        })
        .collect()
}

fn rationals(text: &str, what: &str) -> Res<Vec<BigRational>> {
    text.split(',')
        .map(|t| {
            let t = t.trim();
            let t = t.strip_prefix('+').unwrap_or(t);
            t.parse::<BigRational>()
                .map_err(|_| usage(format!("{what}: '{t}' is not a rational")))
        })
        .collect()
}

fn groups(text: &str) -> impl Iterator<Item = &str> {
    text.split(';').map(str::trim).filter(|g| !g.is_empty())
}

fn pair(text: &str, what: &str) -> Res<(f64, f64)> {
    match reals(text, what)?.as_slice() {
        [a, b] => Ok((*a, *b)),
        _ => Err(usage(format!("{what}: expected two numbers, got '{text}'"))),
    }
}

fn envelope(op: &str, params: Value, result: Value, seconds: f64) -> Value {
    json!({ "op": op, "params": params, "result": result, "seconds": seconds })
}

fn to_value(v: &impl Serialize) -> Res<Value> {
    serde_json::to_value(v).map_err(|e| CliError::Failure(e.to_string()))
}

fn trans(cmd: &TransCmd, ctx: &Ctx) -> Res<String> {
    let start = Instant::now();
    let value = match cmd {
        TransCmd::Qpoly { k, v, w, exact } => {
            let sys = MonomialSystem::new(*k)?;
            let params = json!({ "k": k, "v": v, "w": w, "exact": exact });
            let coefficients: Vec<Value> = if *exact {
                let (vv, ww) = (rationals(v, "--v")?, rationals(w, "--w")?);
                q_coefficients_exact(&sys, &vv, &ww)?
                    .into_iter()
                    .map(|((a, b), c)| json!({ "t": a, "s": b, "value": c.to_string() }))
                    .collect()
            } else {
                let (vv, ww) = (reals(v, "--v")?, reals(w, "--w")?);
                q_polynomial(&sys, &vv, &ww)?
                    .terms()
                    .filter(|(_, c)| *c != 0.0)
                    .map(|((a, b), c)| json!({ "t": a, "s": b, "value": c }))
                    .collect()
            };
            let result = json!({ "degree_bound": 2 * k - 2, "coefficients": coefficients });
            envelope("qpoly", params, result, ctx.seconds(start))
        }
        TransCmd::Kernel { k } => {
            let report = verify_lemma_kernels(*k)?;
            envelope("kernel", json!({ "k": k }), to_value(&report)?, ctx.seconds(start))
        }
        TransCmd::Search { k, dim, trials } => {
            let sys = MonomialSystem::new(*k)?;
            let report = isotropic_search(&sys, *dim, *trials, ctx.seed)?;
            let params = json!({ "k": k, "dim": dim, "trials": trials, "seed": ctx.seed });
            envelope("search", params, to_value(&report)?, ctx.seconds(start))
        }
        TransCmd::Bl {
            k,
            points,
            v_rows,
            v_point,
        } => {
            let sys = MonomialSystem::new(*k)?;
            let planes = groups(points)
                .map(|g| {
                    let (t, s) = pair(g, "--points")?;
                    Ok(SubspaceBasis::tangent_plane(&sys, t, s)?)
                })
                .collect::<Res<Vec<_>>>()?;
            if planes.is_empty() {
                return Err(usage("--points needs at least one point"));
            }
            let v = match (v_rows, v_point) {
                (Some(rows), None) => {
                    let rows = groups(rows).map(|g| rationals(g, "--v-rows")).collect::<Res<Vec<_>>>()?;
                    SubspaceBasis::exact(sys.n(), rows)?
                }
                (None, Some(p)) => {
                    let (t, s) = pair(p, "--v-point")?;
                    SubspaceBasis::tangent_plane(&sys, t, s)?
                }
                _ => SubspaceBasis::whole(sys.n()),
            };
            let check = bl_dimension_check(&planes, &v, sys.n())?;
            let params = json!({ "k": k, "points": points, "v_rows": v_rows, "v_point": v_point });
            envelope("bl", params, to_value(&check)?, ctx.seconds(start))
        }
        TransCmd::Nu {
            k,
            squares,
            m,
            grid,
            restarts,
        } => {
            let sys = MonomialSystem::new(*k)?;
            let sq = groups(squares)
                .map(|g| match reals(g, "--squares")?.as_slice() {
                    [x0, y0, side] => Ok(Square::new(*x0, *y0, *side)?),
                    _ => Err(usage(format!("--squares: expected x0,y0,side, got '{g}'"))),
                })
                .collect::<Res<Vec<_>>>()?;
            let est = nu_estimate(&sys, &sq, *m, *grid, *restarts, ctx.seed)?;
            let params = json!({ "k": k, "squares": squares, "m": m, "grid": grid, "restarts": restarts, "seed": ctx.seed });
            envelope("nu", params, to_value(&est)?, ctx.seconds(start))
        }
        TransCmd::Zeroset { q, side_count, refine } => {
            let poly = parse_polynomial(q)?;
            let count = zero_set_square_count_with(&poly, *side_count, *refine)?;
            let params = json!({ "q": q, "side_count": side_count, "refine": refine });
            let result = json!({ "count": count, "per_side": count as f64 / f64::from(*side_count) });
            envelope("zeroset", params, result, ctx.seconds(start))
        }
    };
    json_text(&value)
}

#[derive(Serialize)]
struct OscRecord {
    op: &'static str,
    params: Value,
    estimate: f64,
    stderr: f64,
    samples: u64,
    seed: u64,
    seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    detail: Option<Value>,
}

fn cell_index(text: &str, what: &str) -> Res<(usize, usize)> {
    let bad = || usage(format!("{what}: expected single:i,j, got '{text}'"));
    let rest = text.strip_prefix("single:").ok_or_else(bad)?;
    let (i, j) = rest.split_once(',').ok_or_else(bad)?;
    Ok((
        i.trim().parse().map_err(|_| bad())?,
        j.trim().parse().map_err(|_| bad())?,
    ))
}

fn coefficient_grid(args: &GridArgs, n: usize, seed: u64) -> Res<(CoefficientGrid, Nodes)> {
    let grid = match args.coeffs.as_str() {
        "ones" => CoefficientGrid::ones(n)?,
        "random" => CoefficientGrid::random_unimodular(n, seed)?,
        other => {
            let (i, j) = cell_index(other, "--coeffs")?;
            CoefficientGrid::single(n, i, j, Complex64::new(1.0, 0.0))?
        }
    };
    let nodes = match args.nodes {
        NodeKind::Right => Nodes::right_endpoints(n),
        NodeKind::Random => Nodes::sample(n, seed)?,
    };
    Ok((grid, nodes))
}

fn osc(cmd: &OscCmd, ctx: &Ctx, format: Format) -> Res<String> {
    let start = Instant::now();
    let seed = ctx.seed;
    let (op, params, est, detail): (&'static str, Value, Estimate, Option<Value>) = match cmd {
        OscCmd::Sum { k, n, x, grid } => {
            let sys = MonomialSystem::new(*k)?;
            let point = reals(x, "--x")?;
            let (g, nodes) = coefficient_grid(grid, *n, seed)?;
            let z = weyl_sum(&sys, &g, &nodes, &point)?;
            let params = json!({ "k": k, "n": n, "x": point, "coeffs": grid.coeffs, "nodes": format!("{:?}", grid.nodes).to_lowercase() });
            let est = Estimate {
                estimate: z.norm(),
                stderr: 0.0,
                samples: 1,
                seed,
            };
            ("sum", params, est, Some(json!({ "re": z.re, "im": z.im })))
        }
        OscCmd::Mean { k, s, n, samples } => {
            let sys = MonomialSystem::new(*k)?;
            let est = torus_mean_mc(&sys, *s, *n, &SamplePlan::torus(*samples, seed))?;
            ("mean", json!({ "k": k, "s": s, "n": n }), est, None)
        }
        OscCmd::Restrict {
            k,
            n,
            p,
            radius,
            samples,
            weighted,
            grid,
        } => {
            let sys = MonomialSystem::new(*k)?;
            let (g, nodes) = coefficient_grid(grid, *n, seed)?;
            let r = radius.unwrap_or_else(|| (*n as f64).powi(*k as i32));
            let center = vec![0.0; sys.n()];
            let plan = if *weighted {
                SamplePlan::weighted_ball(*samples, seed, center)
            } else {
                SamplePlan::ball(*samples, seed, center)
            };
            let est = restriction_ratio(&sys, &g, &nodes, *p, r, &plan)?;
            let params = json!({ "k": k, "n": n, "p": p, "radius": r, "weighted": weighted, "coeffs": grid.coeffs });
            ("restrict", params, est, None)
        }
        OscCmd::Probe {
            k,
            n,
            p,
            samples,
            g,
            xi,
            search,
            steps,
            weighted,
            max_panels,
        } => {
            let sys = MonomialSystem::new(*k)?;
            let center = vec![0.0; sys.n()];
            let plan = if *weighted {
                SamplePlan::weighted_ball(*samples, seed, center)
            } else {
                SamplePlan::ball(*samples, seed, center)
            };
            let mut opts = ProbeOptions::default();
            if let Some(m) = max_panels {
                opts.max_panels = *m;
            }
            let (result, used): (ProbeResult, String) = match search {
                Some(restarts) => {
                    if xi.is_some() || max_panels.is_some() {
                        return Err(usage("--search does not combine with --xi or --max-panels"));
                    }
                    let (r, _) = decoupling_search(&sys, *n, *p, &plan, *restarts, *steps, seed)?;
                    (r, format!("search:{restarts}"))
                }
                None => {
                    let per_side = pv_core::oscillatory::cells_per_side(*k, *n)?;
                    let mut cell = if g == "random" {
                        CellFunction::random_unimodular(per_side, seed)?
                    } else {
                        let (i, j) = cell_index(g, "--g")?;
                        CellFunction::single_cell(per_side, i, j, Complex64::new(1.0, 0.0))?
                    };
                    if let Some(xi) = xi {
                        let (a, b) = pair(xi, "--xi")?;
                        cell = cell.with_modulation([a, b])?;
                    }
                    (decoupling_probe_with(&sys, &cell, *n, *p, &plan, opts)?, g.clone())
                }
            };
            let params = json!({ "k": k, "n": n, "p": p, "g": used, "xi": xi, "weighted": weighted });
            let est = Estimate {
                estimate: result.ratio,
                stderr: 0.0,
                samples: result.samples,
                seed,
            };
            ("probe", params, est, Some(to_value(&result)?))
        }
    };
    let record = OscRecord {
        op,
        params,
        estimate: est.estimate,
        stderr: est.stderr,
        samples: est.samples,
        seed: est.seed,
        seconds: ctx.seconds(start),
        detail,
    };
    match format {
        Format::Json => json_text(&record),
        Format::Csv => Ok(format!(
            "op,estimate,stderr,samples,seed,seconds\n{},{},{},{},{},{}\n",
            record.op, record.estimate, record.stderr, record.samples, record.seed, record.seconds
        )),
    }
}

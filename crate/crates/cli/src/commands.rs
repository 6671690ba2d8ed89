use std::path::Path;

use ersnet::ers::{effective_resistance, recover_graph, Outcome};
use ersnet::families::{Family, Fixture, Instance};
use ersnet::io::{graph_from_json, metric_from_json, read_json, write_atomic};
use ersnet::limit::{exhaustion_traces, limit_graph_estimate, ExhaustionPlan, LimitOptions, PrefixSource};
use ersnet::reduction::trace_to_subset;
use ersnet::walk::{
    exact_escape_probabilities, exact_expected_visits, exact_return_vs_hit, expected_visits_row,
    limit_walk_consistency, mc_resistance, phi_law_check, WalkConfig,
};
use ersnet::{Backend, Error, MetricSpace, Rational, Result, Scalar, Tolerance, WeightedGraph};
use serde_json::{json, Value};

use crate::{
    Cli, Command, Global, LimitArgs, Pair, Sampling, WalkCommand, EXIT_INDETERMINATE, EXIT_NOT_ERS, EXIT_OK,
};

pub fn run(cli: &Cli) -> Result<u8> {
    if cli.global.tolerance.is_nan() || cli.global.tolerance < 0.0 {
        return Err(Error::BadParameter("tolerance must be non-negative".into()));
    }
    match cli.global.backend {
        Backend::Rational => run_with::<Rational>(cli),
        Backend::Float => run_with::<f64>(cli),
    }
}

struct Ctx<'a> {
    global: &'a Global,
    tol: Tolerance,
}

impl Ctx<'_> {
    /// Wraps `report` with the run configuration and writes it once.
    fn emit(&self, command: &str, params: Value, report: Value) -> Result<()> {
        let doc = json!({
            "ersnet_version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "config": {
                "backend": self.global.backend.name(),
                "tolerance": self.global.tolerance,
                "seed": self.global.seed,
                "output": self.global.output.as_ref().map(|p| p.display().to_string()),
                "parameters": params,
            },
            "report": report,
        });
        let text = serde_json::to_string_pretty(&doc).map_err(|e| Error::Io(e.to_string()))? + "\n";
        match &self.global.output {
            Some(path) => write_atomic(path, &text),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }

    fn walk_config(&self, s: &Sampling) -> WalkConfig {
        WalkConfig {
            walks: s.walks,
            cap: s.cap,
            seed: self.global.seed,
            workers: s.workers,
        }
    }
}

fn sampling_params(s: &Sampling) -> Value {
    json!({"walks": s.walks, "cap": s.cap, "workers": s.workers})
}

fn limit_options(a: &LimitArgs) -> LimitOptions {
    LimitOptions {
        stall: a.stall,
        epsilon: a.epsilon,
        strength_cap: a.strength_cap,
    }
}

fn limit_params(a: &LimitArgs) -> Value {
    json!({"stall": a.stall, "epsilon": a.epsilon, "strength_cap": a.strength_cap})
}

/// `family:n`, or `t<depth>` for the transient family.
fn family_spec(spec: &str) -> Option<Result<(Family, usize)>> {
    if let Some(depth) = spec.strip_prefix('t').and_then(|d| d.parse::<usize>().ok()) {
        return Some(Ok((Family::Transient, depth)));
    }
    let (name, n) = spec.split_once(':')?;
    let family = match name.parse::<Family>() {
        Ok(f) => f,
        Err(e) => return Some(Err(e)),
    };
    Some(n.trim().parse::<usize>().map(|n| (family, n)).map_err(|_| Error::Parse {
        literal: spec.to_string(),
        reason: "expected family:n with a non-negative integer n".into(),
    }))
}

struct LoadedGraph<T> {
    graph: WeightedGraph<T>,
    family: Option<(Family, usize)>,
}

fn load_graph<T: Scalar>(spec: &str) -> Result<LoadedGraph<T>> {
    if !Path::new(spec).exists() {
        if let Some(parsed) = family_spec(spec) {
            let (family, n) = parsed?;
            return match family.build::<T>(n)? {
                Instance::Graph(graph) => Ok(LoadedGraph {
                    graph,
                    family: Some((family, n)),
                }),
                Instance::Metric(_) => Err(Error::BadParameter(format!("{family} is a metric family, not a graph"))),
            };
        }
    }
    Ok(LoadedGraph {
        graph: graph_from_json(&read_json(Path::new(spec))?)?,
        family: None,
    })
}

fn load_metric<T: Scalar>(spec: &str, tol: Tolerance) -> Result<MetricSpace<T>> {
    if !Path::new(spec).exists() {
        if let Ok(f) = spec.parse::<Fixture>() {
            return f.metric();
        }
        if let Some(parsed) = family_spec(spec) {
            let (family, n) = parsed?;
            return family.build::<T>(n)?.metric(tol);
        }
    }
    metric_from_json(&read_json(Path::new(spec))?, tol)
}

/// `a..b` and `a..=b` are inclusive; otherwise a comma list.
fn parse_sizes(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::Parse {
        literal: s.to_string(),
        reason: "expected sizes as a..b or a comma list".into(),
    };
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
    if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (num(a)?, num(b.trim_start_matches('='))?);
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(num).collect()
}

fn run_with<T: Scalar>(cli: &Cli) -> Result<u8> {
    let ctx = Ctx {
        global: &cli.global,
        tol: Tolerance(cli.global.tolerance),
    };
    match &cli.command {
        Command::CheckErs { metric, write_graph } => {
            let m = load_metric::<T>(metric, ctx.tol)?;
            let verdict = recover_graph(&m, ctx.tol)?;
            if let (Some(path), Some(g)) = (write_graph, verdict.graph()) {
                let text = serde_json::to_string_pretty(&g.to_json()).map_err(|e| Error::Io(e.to_string()))?;
                write_atomic(path, &(text + "\n"))?;
            }
            let params = json!({
                "metric": metric,
                "write_graph": write_graph.as_ref().map(|p| p.display().to_string()),
            });
            ctx.emit("check-ers", params, verdict.to_json())?;
            Ok(match verdict.outcome {
                Outcome::IsErs(_) => EXIT_OK,
                Outcome::NotErs(_) => EXIT_NOT_ERS,
                Outcome::Indeterminate(_) => EXIT_INDETERMINATE,
            })
        }
        Command::Effres { graph } => {
            let g = load_graph::<T>(graph)?.graph;
            let r = effective_resistance(&g, ctx.tol)?;
            ctx.emit("effres", json!({"graph": graph}), json!({"labels": g.labels(), "resistance": r.to_json()}))?;
            Ok(EXIT_OK)
        }
        Command::Geodesic { graph } => {
            let g = load_graph::<T>(graph)?.graph;
            let d = g.geodesic_metric()?;
            ctx.emit("geodesic", json!({"graph": graph}), d.to_json())?;
            Ok(EXIT_OK)
        }
        Command::Reduce { graph, keep, order } => {
            let g = load_graph::<T>(graph)?.graph;
            let trace = trace_to_subset(&g, keep, order.as_deref(), ctx.tol)?;
            ctx.emit(
                "reduce",
                json!({"graph": graph, "keep": keep, "order": order}),
                trace.to_json(),
            )?;
            Ok(EXIT_OK)
        }
        Command::Limit {
            source,
            sizes,
            limit,
            csv,
        } => {
            let sizes = parse_sizes(sizes)?;
            let options = limit_options(limit);
            let traces = if Path::new(source).exists() {
                let m = metric_from_json::<T>(&read_json(Path::new(source))?, ctx.tol)?;
                exhaustion_traces(&ExhaustionPlan::new(PrefixSource(m), sizes.clone())?, ctx.tol)?
            } else {
                let family: Family = source.parse()?;
                exhaustion_traces(&ExhaustionPlan::new(family, sizes.clone())?, ctx.tol)?
            };
            let report = limit_graph_estimate(&traces, options, ctx.tol)?;
            if let Some(path) = csv {
                write_atomic(path, &report.to_csv()?)?;
            }
            let mut params = limit_params(limit);
            params["source"] = json!(source);
            params["sizes"] = json!(sizes);
            params["csv"] = json!(csv.as_ref().map(|p| p.display().to_string()));
            ctx.emit("limit", params, report.to_json())?;
            Ok(EXIT_OK)
        }
        Command::Walk(w) => run_walk::<T>(&ctx, w),
        Command::Generate { name, n } => {
            let doc = if let Ok(f) = name.parse::<Fixture>() {
                if n.is_some() {
                    return Err(Error::BadParameter(format!("fixture {name} takes no parameter")));
                }
                f.metric::<T>()?.to_json()
            } else {
                let family: Family = name.parse()?;
                let n = n.ok_or_else(|| Error::BadParameter(format!("{family} needs a parameter n")))?;
                family.build::<T>(n)?.to_json()
            };
            // Generated files are plain fixtures, loadable by the other commands.
            let text = serde_json::to_string_pretty(&doc).map_err(|e| Error::Io(e.to_string()))? + "\n";
            match &cli.global.output {
                Some(path) => write_atomic(path, &text)?,
                None => print!("{text}"),
            }
            Ok(EXIT_OK)
        }
    }
}

fn pair_params(p: &Pair) -> Value {
    json!({"graph": p.graph, "from": p.from, "to": p.to})
}

fn run_walk<T: Scalar>(ctx: &Ctx<'_>, w: &WalkCommand) -> Result<u8> {
    match w {
        WalkCommand::Exact {
            pair,
            frontier,
            reflecting,
        } => {
            let loaded = load_graph::<T>(&pair.graph)?;
            let g = &loaded.graph;
            let frontier: Vec<String> = match (frontier, loaded.family) {
                (Some(f), _) => f.clone(),
                (None, Some((Family::Transient, depth))) if !reflecting && depth > 0 => vec![depth.to_string()],
                _ => Vec::new(),
            };
            let p = exact_return_vs_hit(g, &pair.from, &pair.to, ctx.tol)?;
            let visits = exact_expected_visits(g, &pair.from, &pair.to, ctx.tol)?;
            let r = effective_resistance(g, ctx.tol)?.between(&pair.from, &pair.to)?.clone();
            let row = expected_visits_row(g, &pair.from, &pair.to, ctx.tol)?;
            let mut report = json!({
                "return_before_hit": p.to_json(),
                "hit_before_return": (T::one() - p).to_json(),
                "expected_visits": visits.to_json(),
                "resistance": r.to_json(),
                "expected_visits_by_vertex": row.iter()
                    .map(|(l, v)| (l.clone(), v.to_json()))
                    .collect::<serde_json::Map<_, _>>(),
            });
            if !frontier.is_empty() {
                let esc = exact_escape_probabilities(g, &pair.from, &pair.to, &frontier, ctx.tol)?;
                report["frontier"] = json!(frontier);
                report["absorbed"] = esc.to_json();
            }
            let mut params = pair_params(pair);
            params["frontier"] = json!(frontier);
            params["reflecting"] = json!(reflecting);
            ctx.emit("walk exact", params, report)?;
            Ok(EXIT_OK)
        }
        WalkCommand::Mc { pair, sampling } => {
            let g = load_graph::<T>(&pair.graph)?.graph;
            let est = mc_resistance(&g, &pair.from, &pair.to, ctx.walk_config(sampling), ctx.tol)?;
            let exact = effective_resistance(&g, ctx.tol)?.between(&pair.from, &pair.to)?.clone();
            let mut report = est.to_json();
            report["exact"] = exact.to_json();
            report["within_3_se"] = json!(est.within(exact.to_f64(), 3.0));
            let mut params = pair_params(pair);
            params["sampling"] = sampling_params(sampling);
            ctx.emit("walk mc", params, report)?;
            Ok(EXIT_OK)
        }
        WalkCommand::Law { pair, sampling, alpha } => {
            let g = load_graph::<T>(&pair.graph)?.graph;
            let law = phi_law_check(&g, &pair.from, &pair.to, ctx.walk_config(sampling), *alpha, ctx.tol)?;
            let mut params = pair_params(pair);
            params["sampling"] = sampling_params(sampling);
            params["alpha"] = json!(alpha);
            ctx.emit("walk law", params, law.to_json())?;
            Ok(EXIT_OK)
        }
        WalkCommand::LimitCheck {
            family,
            sizes,
            from,
            to,
            assert_recurrent,
            sampling,
            limit,
        } => {
            let f: Family = family.parse()?;
            let plan = ExhaustionPlan::new(f, parse_sizes(sizes)?)?;
            let report = limit_walk_consistency::<T, _>(
                &plan,
                from,
                to,
                ctx.walk_config(sampling),
                *assert_recurrent,
                limit_options(limit),
                ctx.tol,
            )?;
            let mut params = limit_params(limit);
            params["family"] = json!(family);
            params["sizes"] = json!(plan.sizes);
            params["from"] = json!(from);
            params["to"] = json!(to);
            params["assert_recurrent"] = json!(assert_recurrent);
            params["sampling"] = sampling_params(sampling);
            ctx.emit("walk limit-check", params, report.to_json())?;
            Ok(EXIT_OK)
        }
    }
}

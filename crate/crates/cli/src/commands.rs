use std::collections::BTreeMap;
use std::fmt::Write as _;

use epinet::closed_forms::symmetric_equilibrium;
use epinet::dynamics::{
    closed_form_upper_bound, integrate_mean_field, linearized_solution, simulate_exact_ctmc, solve_exact_kolmogorov,
    EpidemicParams, MAX_EXACT_NODES,
};
use epinet::game_core::{payoff, social_welfare, GameParams};
use epinet::metrics_policy::{
    optimal_kappa, poa_bound_global, poa_bound_local, price_of_anarchy, price_of_autarky, symmetric_poa_formula,
    EquilibriumSearch, SearchOptions,
};
use epinet::net_model::{AggregateInvestment, Link, Mode, Network, StrategyProfile};
use epinet::solvers::{find_equilibrium, social_optimum, EquilibriumReport, LinkCase, OptimumReport};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::Experiment;
use crate::error::CliError;

/// Mean field below the closed form below the linearization, with this slack.
pub const SANDWICH_SLACK: f64 = 1e-8;

/// Result payload, CSV tables, and whether every solver converged.
pub(crate) struct Output {
    pub result: Value,
    pub tables: Vec<(String, String)>,
    pub converged: bool,
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("plain data serializes")
}

fn link_key(l: Link) -> String {
    format!("{}-{}", l.k, l.l)
}

/// Weight when every link of a complete network carries the same one.
fn uniform_complete(net: &Network) -> Option<f64> {
    let a = net.weight(0, 1);
    (net.is_complete() && net.links().iter().all(|l| net.weight(l.k, l.l) == a)).then_some(a)
}

fn search_options(exp: &Experiment) -> Result<SearchOptions, CliError> {
    let seed = if exp.network.n() > 4 { exp.config.require_seed("random agent orders")? } else { 0 };
    Ok(SearchOptions { random_orders: exp.config.options.multi_start, seed })
}

pub(crate) fn simulate(exp: &Experiment) -> Result<Output, CliError> {
    let net = &exp.network;
    let g = &exp.config.game;
    let epi = EpidemicParams::new(g.beta, g.t_bar, g.x0.clone())?;
    let grid = exp.config.options.grid;
    let mf = integrate_mean_field(net, &epi, grid)?;
    let ub = closed_form_upper_bound(net, &epi, grid)?.x;
    let lin = linearized_solution(net, &epi, grid)?;
    let n = net.n();
    let mut violation = f64::NEG_INFINITY;
    let mut csv = String::from("t");
    for name in ["mean_field", "upper_bound", "linearized"] {
        for i in 1..=n {
            let _ = write!(csv, ",{name}_{i}");
        }
    }
    csv.push('\n');
    for k in 0..mf.times.len() {
        let _ = write!(csv, "{}", mf.times[k]);
        for traj in [&mf, &ub, &lin] {
            for v in &traj.values[k] {
                let _ = write!(csv, ",{v}");
            }
        }
        csv.push('\n');
        for i in 0..n {
            violation = violation.max(mf.values[k][i] - ub.values[k][i]).max(ub.values[k][i] - lin.values[k][i]);
        }
    }
    let exact = if n <= MAX_EXACT_NODES { Some(solve_exact_kolmogorov(net, &epi)?) } else { None };
    let samples = exp.config.options.samples;
    let mc = if samples > 0 {
        let seed = exp.config.require_seed("Monte Carlo sampling")?;
        Some(to_value(&simulate_exact_ctmc(net, &epi, samples, seed)?))
    } else {
        None
    };
    let result = json!({
        "grid": grid,
        "final": {
            "mean_field": mf.last(),
            "upper_bound": ub.last(),
            "linearized": lin.last(),
        },
        "sandwich": { "max_violation": violation, "holds": violation <= SANDWICH_SLACK },
        "kolmogorov": exact,
        "monte_carlo": mc,
    });
    Ok(Output { result, tables: vec![("trajectory.csv".into(), csv)], converged: true })
}

fn case_name(c: LinkCase) -> Value {
    to_value(&c)
}

fn agents_json(net: &Network, profile: &StrategyProfile, gp: &GameParams) -> Result<Value, CliError> {
    let mut agents = Vec::new();
    for i in 0..net.n() {
        let inv: BTreeMap<String, f64> = net
            .links()
            .into_iter()
            .map(|l| (link_key(l), profile.on_link(i, l)))
            .filter(|(_, d)| *d != 0.0)
            .collect();
        agents.push(json!({ "agent": i, "payoff": payoff(net, profile, gp, i)?, "investments": inv }));
    }
    Ok(Value::Array(agents))
}

fn equilibrium_json(net: &Network, rep: &EquilibriumReport, gp: &GameParams) -> Result<Value, CliError> {
    let agg = rep.aggregate(net)?;
    let links: Vec<Value> = net
        .links()
        .into_iter()
        .map(|l| {
            json!({
                "link": link_key(l),
                "weight": net.weight(l.k, l.l),
                "investment": agg.on_link(l),
                "case": rep.per_link_cases.get(&l).map(|c| case_name(*c)),
                "eligible": rep.eligible_sets.get(&l),
            })
        })
        .collect();
    Ok(json!({
        "status": to_value(&rep.status),
        "is_equilibrium": rep.is_equilibrium,
        "kkt_residual": rep.kkt_residual,
        "classification": to_value(&rep.classification),
        "sweeps": rep.sweeps,
        "order": rep.order,
        "welfare": social_welfare(net, &agg, gp)?,
        "links": links,
        "agents": agents_json(net, &rep.profile, gp)?,
    }))
}

fn profile_csv(net: &Network, profile: &StrategyProfile) -> String {
    let mut s = String::from("agent,k,l,investment\n");
    for i in 0..net.n() {
        for l in net.links() {
            let d = profile.on_link(i, l);
            if d != 0.0 {
                let _ = writeln!(s, "{i},{},{},{d}", l.k, l.l);
            }
        }
    }
    s
}

fn aggregate_csv(net: &Network, agg: &AggregateInvestment) -> String {
    let mut s = String::from("k,l,weight,investment\n");
    for l in net.links() {
        let _ = writeln!(s, "{},{},{},{}", l.k, l.l, net.weight(l.k, l.l), agg.on_link(l));
    }
    s
}

pub(crate) fn equilibrium(exp: &Experiment) -> Result<Output, CliError> {
    let net = &exp.network;
    let gp = exp.config.game_params()?;
    let n = net.n();
    let order: Vec<usize> = (0..n).collect();
    let rep = find_equilibrium(net, &gp, &StrategyProfile::zeros(n), &order)?;
    let mut result = equilibrium_json(net, &rep, &gp)?;
    let closed = match uniform_complete(net) {
        Some(a) if gp.alpha().is_some() && gp.common_delta().is_some() => {
            let sol = symmetric_equilibrium(a, &gp)?;
            let c = gp.bt() * (1.0 - gp.alpha().unwrap_or(0.0));
            let agg = rep.aggregate(net)?;
            let dev = net.links().iter().map(|&l| (agg.on_link(l) - sol.investment).abs()).fold(0.0, f64::max);
            let mean = agg.sum() / (n * (n - 1)) as f64;
            json!({
                "h": sol.h,
                "measured_h": c * (a - mean),
                "investment": sol.investment,
                "regime": to_value(&sol.regime),
                "chi_tilde": sol.chi_tilde,
                "max_link_deviation": dev,
            })
        }
        _ => Value::Null,
    };
    result["closed_form"] = closed;
    Ok(Output {
        result,
        tables: vec![("profile.csv".into(), profile_csv(net, &rep.profile))],
        converged: rep.converged(),
    })
}

fn optimum_json(net: &Network, opt: &OptimumReport) -> Value {
    let links: Vec<Value> = net
        .links()
        .into_iter()
        .map(|l| {
            json!({
                "link": link_key(l),
                "weight": net.weight(l.k, l.l),
                "investment": opt.aggregate.on_link(l),
                "case": opt.per_link_cases.get(&l).map(|c| case_name(*c)),
            })
        })
        .collect();
    json!({
        "converged": opt.converged,
        "is_optimum": opt.is_optimum,
        "iterations": opt.iterations,
        "kkt_residual": opt.kkt_residual,
        "classification": to_value(&opt.classification),
        "welfare": opt.welfare,
        "links": links,
    })
}

pub(crate) fn optimum(exp: &Experiment) -> Result<Output, CliError> {
    let net = &exp.network;
    let gp = exp.config.game_params()?;
    let opt = social_optimum(net, &gp, &AggregateInvestment::zeros(net.n()))?;
    Ok(Output {
        result: optimum_json(net, &opt),
        tables: vec![("aggregate.csv".into(), aggregate_csv(net, &opt.aggregate))],
        converged: opt.converged && opt.is_optimum,
    })
}

fn search_json(net: &Network, s: &EquilibriumSearch, gp: &GameParams) -> Result<Value, CliError> {
    Ok(json!({
        "mode": to_value(&s.mode),
        "runs": s.runs,
        "verified": s.verified,
        "worst_welfare": s.worst_welfare,
        "best_welfare": s.best_welfare,
        "worst": equilibrium_json(net, &s.worst, &gp.with_mode(s.mode))?,
        "provenance": s.provenance,
    }))
}

fn bound_json<T: Serialize>(b: Result<T, epinet::Error>) -> Value {
    match b {
        Ok(v) => to_value(&v),
        Err(e) => json!({ "hypothesis_failed": e.to_string() }),
    }
}

fn runs_csv(searches: &[&EquilibriumSearch]) -> String {
    let mut s = String::from("mode,run,description\n");
    for search in searches {
        for (i, p) in search.provenance.iter().enumerate() {
            let _ = writeln!(s, "{},{i},\"{}\"", to_value(&search.mode).as_str().unwrap_or(""), p.replace('"', "'"));
        }
    }
    s
}

pub(crate) fn poa(exp: &Experiment) -> Result<Output, CliError> {
    let net = &exp.network;
    let gp = exp.config.game_params()?;
    let opts = search_options(exp)?;
    let local = price_of_anarchy(net, &gp, Mode::Local, opts)?;
    let global = price_of_anarchy(net, &gp, Mode::Global, opts)?;
    let opt = &global.optimum;
    let result = json!({
        "poa_local": local.poa,
        "poa_global": global.poa,
        "degenerate": local.degenerate || global.degenerate,
        "optimum": optimum_json(net, opt),
        "bounds": {
            "global": bound_json(poa_bound_global(net, &gp, &global.search.worst, opt)),
            "local": bound_json(poa_bound_local(net, &gp, &local.search.worst, opt)),
            "symmetric_formula": bound_json(symmetric_poa_formula(net, &gp, &global.search.worst, opt)),
        },
        "local": search_json(net, &local.search, &gp)?,
        "global": search_json(net, &global.search, &gp)?,
    });
    Ok(Output {
        result,
        tables: vec![("runs.csv".into(), runs_csv(&[&local.search, &global.search]))],
        converged: opt.converged,
    })
}

pub(crate) fn pok(exp: &Experiment) -> Result<Output, CliError> {
    let net = &exp.network;
    let gp = exp.config.game_params()?;
    let r = price_of_autarky(net, &gp, search_options(exp)?)?;
    let bound = match &r.bound {
        Ok(b) => to_value(b),
        Err(e) => json!({ "hypothesis_failed": e }),
    };
    let result = json!({
        "pok": r.pok,
        "degenerate": r.degenerate,
        "worst_local_welfare": r.local.worst_welfare,
        "best_global_welfare": r.global.best_welfare,
        "bound": bound,
        "local": search_json(net, &r.local, &gp)?,
        "global": search_json(net, &r.global, &gp)?,
    });
    Ok(Output { result, tables: vec![("runs.csv".into(), runs_csv(&[&r.local, &r.global]))], converged: true })
}

pub(crate) fn policy(exp: &Experiment) -> Result<Output, CliError> {
    let net = &exp.network;
    let gp = exp.config.game_params()?;
    let s = optimal_kappa(net, &gp, exp.config.options.kappa_grid)?;
    let root = match (uniform_complete(net), gp.alpha(), gp.common_delta()) {
        (Some(_), Some(alpha), Some(delta)) => {
            let base = 2.0 * delta * gp.bt() * alpha;
            let c = gp.bt() * (1.0 - alpha);
            json!(if base >= gp.rho { 0.0 } else { (gp.rho / base).ln() / c })
        }
        _ => Value::Null,
    };
    let mut csv = String::from("kappa,welfare,kkt_residual\n");
    for (k, w, r) in &s.sweep {
        let _ = writeln!(csv, "{k},{w},{r}");
    }
    let result = json!({
        "kappa": s.kappa,
        "kkt_residual": s.residual,
        "welfare": s.welfare,
        "optimum_welfare": s.optimum_welfare,
        "epsilon_gap": s.epsilon_gap,
        "closed_form_root": root,
    });
    Ok(Output { result, tables: vec![("policy_sweep.csv".into(), csv)], converged: true })
}

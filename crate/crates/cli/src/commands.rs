use std::time::Instant;

use infodesign::equilibrium::{check_regularity, regimes_general, regimes_simple, revenue_function};
use infodesign::mechanism::{
    algorithm1_thresholds, check_conditions, duality_certificate, expected_revenue, mpc_check, ConditionReport,
    MonotonePartitional,
};
use infodesign::model::{
    check_homogeneous_balance, check_initial_balance, check_no_depletion, classify_market_sizes, r_bar,
    shortest_distances, SizePattern, SizeTrend,
};
use infodesign::optimizer::{dp_multi_scenario, dp_partitional, recover_structure, solve_prop8};
use infodesign::{fmt_sig, Config, EquilibriumError, PiecewiseLinear, Prior, RegimeTable};
use serde_json::{json, Value};

use crate::output::{mark, revenue_curve, to_value, OutDir};
use crate::{CliError, Method, RunArgs};

const CERTIFICATE_TOL: f64 = 1e-7;

fn load(args: &RunArgs) -> Result<Config, CliError> {
    Ok(Config::load(&args.input)?)
}

fn table_for(cfg: &Config) -> Result<RegimeTable, EquilibriumError> {
    regimes_simple(&cfg.network, &cfg.prior).or_else(|_| regimes_general(&cfg.network, &cfg.prior))
}

fn pattern_name(pattern: &SizePattern) -> String {
    match pattern {
        SizePattern::Similar => "similar".into(),
        SizePattern::Transition { trend, d_lo, d_hi } => {
            let dir = if *trend == SizeTrend::Increasing { "increasing" } else { "decreasing" };
            format!("{dir} between distances {} and {}", fmt_sig(*d_lo), fmt_sig(*d_hi))
        }
        SizePattern::Mixed => "mixed".into(),
    }
}

fn tolerance(f: &PiecewiseLinear) -> f64 {
    1e-7 * f.values().iter().fold(1.0f64, |m, v| m.max(v.abs()))
}

fn condition_flags(report: &ConditionReport) -> Value {
    json!({ "c1": report.c1, "c2": report.c2, "c3": report.c3, "c4": report.c4 })
}

pub fn validate(args: &RunArgs) -> Result<(), CliError> {
    let cfg = load(args)?;
    let (net, prior) = (&cfg.network, &cfg.prior);
    let dist = shortest_distances(net)?;
    let a1 = check_homogeneous_balance(net, prior);
    let a2 = check_no_depletion(net, prior);
    let a3 = check_initial_balance(net, prior);
    let class = classify_market_sizes(net, &dist);
    println!("A1 {} A2 {} A3 {} {}", mark(a1.holds), mark(a2.holds), mark(a3.holds), pattern_name(&class.pattern));
    match table_for(&cfg) {
        Ok(table) => {
            let reg = check_regularity(&table);
            match reg.colinear {
                Some(pts) if !reg.holds => {
                    let pts: Vec<String> = pts.iter().map(|(x, y)| format!("({}, {})", fmt_sig(*x), fmt_sig(*y))).collect();
                    println!("A4 ✗ colinear regime points {}", pts.join(" "));
                }
                _ => println!("A4 {}", mark(reg.holds)),
            }
        }
        Err(e) => println!("A4 not checked: {e}"),
    }
    println!(
        "no-depletion bounds: lower {} (slack {}, {} nearest nodes), upper {} (slack {})",
        fmt_sig(a2.lower_bound),
        fmt_sig(a2.lower_slack),
        a2.k_hat,
        fmt_sig(a2.upper_bound),
        fmt_sig(a2.upper_slack)
    );
    if let Some((i, j, excess)) = a3.violation {
        println!("agents at node {} gain {} by moving to node {}", cfg.labels[j], fmt_sig(excess), cfg.labels[i]);
    }
    println!("similarity threshold {}", fmt_sig(class.threshold));
    let threshold = r_bar(net, &dist)?;
    println!("commission {} r̄ {}", fmt_sig(net.commission()), fmt_sig(threshold));
    if net.commission() > threshold {
        println!("commission exceeds r̄: full revelation optimal");
    }
    Ok(())
}

pub fn regimes(args: &RunArgs) -> Result<(), CliError> {
    let cfg = load(args)?;
    let table = table_for(&cfg)?;
    let out = OutDir::create(&args.out)?;
    let csv = table.to_csv();
    print!("{csv}");
    out.write("regimes.csv", &csv)
}

enum Designed {
    Monotone(MonotonePartitional),
    /// Recovered pooling that no monotone partition reproduces.
    Structure(infodesign::mechanism::IntervalStructure),
}

pub fn design(args: &RunArgs) -> Result<(), CliError> {
    let cfg = load(args)?;
    let prior = &cfg.prior;
    let table = table_for(&cfg)?;
    let f = revenue_function(&table);
    let mixed = table.market_class().pattern == SizePattern::Mixed;
    let method = match args.method {
        Method::Auto if mixed => Method::Prop8,
        Method::Auto => Method::Alg1,
        m => m,
    };
    let designed = match method {
        Method::Alg1 => Designed::Monotone(algorithm1_thresholds(&table, &f, prior)?.mechanism),
        Method::Dp => Designed::Monotone(dp_partitional(&f, prior, args.eps)?.mechanism),
        _ => {
            let sol = solve_prop8(&f, prior, args.eps)?;
            let rec = recover_structure(&sol.allocation, &f, prior)?;
            match rec.structure.as_monotone(prior) {
                Some(mech) => Designed::Monotone(mech),
                None => Designed::Structure(rec.structure),
            }
        }
    };
    let out = OutDir::create(&args.out)?;
    let no_info = f.eval(prior.mean());
    let (mechanism, value, certificate, nu) = match &designed {
        Designed::Monotone(mech) => {
            let cert = duality_certificate(&f, mech, prior, CERTIFICATE_TOL);
            println!("mechanism: {}", describe(mech));
            println!("certificate {} (max violation {})", mark(cert.holds), fmt_sig(cert.max_violation));
            (to_value(mech), expected_revenue(&f, mech, prior), to_value(&cert), cert.nu.clone())
        }
        Designed::Structure(s) => {
            let g = s.posterior(prior);
            let mpc = mpc_check(&g, prior);
            println!("possible double interval: recovered pooling is not a monotone partition");
            println!("contraction check {}", mark(mpc.holds));
            (to_value(s), g.expected_value(&f, prior), json!({ "holds": mpc.holds, "mpc": to_value(&mpc) }), None)
        }
    };
    println!("revenue {} V* {}", fmt_sig(value), fmt_sig(value - no_info));
    let conditions = check_conditions(&f, prior);
    out.write_json("mechanism.json", mechanism.clone())?;
    out.write("revenue_curve.csv", &revenue_curve(&f, nu.as_ref()))?;
    out.write_json("certificate.json", certificate.clone())?;
    out.write_json(
        "report.json",
        json!({
            "method": method.name(),
            "eps": args.eps,
            "seed": args.seed,
            "mechanism": mechanism,
            "value": value,
            "value_of_information": value - no_info,
            "certificate": certificate,
            "condition_flags": condition_flags(&conditions),
            "double_interval": matches!(designed, Designed::Structure(_)),
        }),
    )?;
    if args.method == Method::Auto && mixed {
        compare_into(&cfg, &table, &f, args, &out)?;
    }
    Ok(())
}

fn describe(mech: &MonotonePartitional) -> String {
    if mech.is_full_revelation() {
        return "full revelation".into();
    }
    let pools: Vec<String> = mech
        .pools()
        .iter()
        .map(|(a, b, z)| format!("pool [{}, {}] -> {}", fmt_sig(*a), fmt_sig(*b), fmt_sig(*z)))
        .collect();
    pools.join(", ")
}

pub fn prop8(args: &RunArgs) -> Result<(), CliError> {
    let cfg = load(args)?;
    let prior = &cfg.prior;
    let f = revenue_function(&table_for(&cfg)?);
    let sol = solve_prop8(&f, prior, args.eps)?;
    let no_info = f.eval(prior.mean());
    println!(
        "objective {} V* {} ({} cuts, {} rounds, max violation {})",
        fmt_sig(sol.objective),
        fmt_sig(sol.objective - no_info),
        sol.cuts,
        sol.rounds,
        fmt_sig(sol.max_violation)
    );
    let recovery = match recover_structure(&sol.allocation, &f, prior) {
        Ok(rec) => {
            let double = rec.structure.has_double_interval();
            if double {
                println!("possible double interval in the recovered structure");
            }
            json!({ "structure": to_value(&rec.structure), "residual": rec.residual, "double_interval": double })
        }
        Err(e) => {
            println!("structure recovery failed: {e}");
            json!({ "error": e.to_string() })
        }
    };
    let out = OutDir::create(&args.out)?;
    out.write_json("prop8.json", json!({ "solution": to_value(&sol), "recovery": recovery, "eps": args.eps }))
}

pub fn dp(args: &RunArgs) -> Result<(), CliError> {
    let cfg = load(args)?;
    let prior = &cfg.prior;
    let f = revenue_function(&table_for(&cfg)?);
    let res = dp_partitional(&f, prior, args.eps)?;
    println!("value {} V* {}", fmt_sig(res.value), fmt_sig(res.value - f.eval(prior.mean())));
    println!("mechanism: {}", describe(&res.mechanism));
    let out = OutDir::create(&args.out)?;
    out.write_json("mechanism.json", to_value(&res.mechanism))?;
    out.write("dp_values.csv", &res.values_csv())
}

pub fn compare(args: &RunArgs) -> Result<(), CliError> {
    let cfg = load(args)?;
    let table = table_for(&cfg)?;
    let f = revenue_function(&table);
    let out = OutDir::create(&args.out)?;
    compare_into(&cfg, &table, &f, args, &out)
}

fn compare_into(cfg: &Config, table: &RegimeTable, f: &PiecewiseLinear, args: &RunArgs, out: &OutDir) -> Result<(), CliError> {
    let prior: &Prior = &cfg.prior;
    let timed = |run: &dyn Fn() -> Result<f64, CliError>| -> Result<(f64, f64), CliError> {
        let start = Instant::now();
        let v = run()?;
        Ok((v, start.elapsed().as_secs_f64()))
    };
    let no_info = f.eval(prior.mean());
    let mut rows: Vec<(&str, f64, f64)> = vec![
        ("no-info", no_info, 0.0),
        ("full-info", f.integrate(prior, prior.lo(), prior.hi()), 0.0),
    ];
    match algorithm1_thresholds(table, f, prior) {
        Ok(a) => rows.push(("alg1", expected_revenue(f, &a.mechanism, prior), 0.0)),
        Err(e) => println!("alg1 skipped: {e}"),
    }
    let (dp, t) = timed(&|| Ok(dp_partitional(f, prior, args.eps)?.value))?;
    rows.push(("dp", dp, t));
    let (upper, t) = timed(&|| Ok(solve_prop8(f, prior, args.eps)?.objective))?;
    rows.push(("prop8", upper, t));

    let mut csv = String::from("mechanism,revenue,V*\n");
    println!("{:<10} {:>16} {:>16} {:>10}", "mechanism", "revenue", "V*", "seconds");
    for (name, v, secs) in &rows {
        println!("{:<10} {:>16} {:>16} {:>10.3}", name, fmt_sig(*v), fmt_sig(v - no_info), secs);
        csv.push_str(&format!("{name},{},{}\n", fmt_sig(*v), fmt_sig(v - no_info)));
    }
    out.write("compare.csv", &csv)?;

    let tol = tolerance(f);
    let full = rows[1].1;
    let mut broken = Vec::new();
    if no_info.max(full) > dp + tol {
        broken.push(format!("dp {} below a trivial mechanism", fmt_sig(dp)));
    }
    for (name, v, _) in &rows {
        if *v > upper + tol {
            broken.push(format!("{name} {} above the upper bound {}", fmt_sig(*v), fmt_sig(upper)));
        }
    }
    if broken.is_empty() {
        Ok(())
    } else {
        Err(CliError::Solver(format!("sandwich ordering violated: {}", broken.join("; "))))
    }
}

pub fn scenarios(args: &RunArgs) -> Result<(), CliError> {
    let cfg = load(args)?;
    let Some(scenarios) = cfg.scenarios.as_deref() else {
        return Err(CliError::Config("the config defines no scenarios".into()));
    };
    let res = dp_multi_scenario(&cfg.network, scenarios, args.eps)?;
    let mut items = Vec::new();
    for (k, (s, r)) in scenarios.iter().zip(&res.scenarios).enumerate() {
        println!("scenario {k}: probability {} value {} mechanism {}", fmt_sig(s.probability), fmt_sig(r.value), describe(&r.mechanism));
        items.push(json!({ "probability": s.probability, "value": r.value, "mechanism": to_value(&r.mechanism) }));
    }
    println!("total {}", fmt_sig(res.total));
    let out = OutDir::create(&args.out)?;
    out.write_json("scenarios.json", json!({ "eps": args.eps, "total": res.total, "scenarios": items }))
}

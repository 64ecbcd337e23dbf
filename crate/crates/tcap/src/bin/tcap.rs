//! Command-line front end: solve scenarios, derive fees, sweep α, and
//! export results as tables, JSON, or CSV.
//!
//! Exit codes: 0 success, 2 scenario load/validation failure, 3 solver
//! non-convergence (the result bundle is still written).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tcap::bundle::ResultBundle;
use tcap::equilibrium::{solve_ue, EquilibriumSolution, SolverOptions};
use tcap::scenario::{load_scenario, Scenario};
use tcap::social::{optimal_prices, solve_so, verify_so_enforcement, FeeUnits};

#[derive(Parser)]
#[command(name = "tcap", about = "Traffic and charge assignment for EV fast-charging networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Ue,
    So,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FeeMode {
    None,
    Optimal,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FeeUnitsArg {
    Paper,
    Lagrangian,
}

impl From<FeeUnitsArg> for FeeUnits {
    fn from(v: FeeUnitsArg) -> FeeUnits {
        match v {
            FeeUnitsArg::Paper => FeeUnits::Paper,
            FeeUnitsArg::Lagrangian => FeeUnits::Lagrangian,
        }
    }
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario document (TOML).
    #[arg(long)]
    scenario: PathBuf,
    /// Override the scenario's value-of-time parameter α (minutes/$).
    #[arg(long)]
    alpha: Option<f64>,
    /// Relative Wardrop-gap tolerance for equilibrium solves.
    #[arg(long, default_value_t = 1e-4)]
    gap_tol: f64,
    #[arg(long, default_value_t = 50_000)]
    max_iters: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Random starts for the nonconvex demand-dependent mode.
    #[arg(long, default_value_t = 8)]
    starts: usize,
}

impl CommonArgs {
    fn load(&self) -> Result<Scenario, String> {
        let mut s = load_scenario(&self.scenario).map_err(|e| e.to_string())?;
        if let Some(a) = self.alpha {
            s = s.with_alpha(a);
        }
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        Ok(s)
    }

    fn options(&self, s: &Scenario) -> SolverOptions {
        SolverOptions {
            gap_tol: self.gap_tol,
            max_iters: self.max_iters,
            seed: self.seed.unwrap_or(s.seed),
            starts: self.starts,
            ..SolverOptions::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// List feasible charging paths per OD pair.
    Paths {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Solve the user equilibrium or the socially optimal pattern.
    Solve {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum, default_value_t = Mode::Ue)]
        mode: Mode,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Directory for bundle.json, stations.csv, paths.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Derive the socially optimal plug-in fees and electricity prices.
    Fees {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum, default_value_t = FeeUnitsArg::Paper)]
        fee_units: FeeUnitsArg,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Install the derived fees, re-solve the user equilibrium, and
    /// report how closely it tracks the social optimum.
    VerifyEnforcement {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Solve across a range of α values; long-format CSV, one row per
    /// station per value. Values run in parallel (TCAP_PARALLEL caps
    /// the worker count).
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Swept parameter; only `alpha` is supported.
        #[arg(long, default_value = "alpha")]
        param: String,
        /// Comma-separated increasing values.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
        #[arg(long, value_enum, default_value_t = Mode::Ue)]
        mode: Mode,
        #[arg(long, value_enum, default_value_t = FeeMode::None)]
        fees: FeeMode,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fleet-mix report: per case, split the first OD pair's demand
    /// over the high/medium/low classes and solve with or without the
    /// socially optimal fees.
    Table2 {
        #[command(flatten)]
        common: CommonArgs,
        /// Case spec "high,medium,low,none|optimal"; repeatable.
        /// Without any, a canonical ten-case panel is run.
        #[arg(long = "case")]
        cases: Vec<String>,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Debugging oracle: damped discretized best response.
    #[command(hide = true)]
    Oracle {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 500)]
        bins: usize,
        #[arg(long, default_value_t = 0.2)]
        damping: f64,
        #[arg(long, default_value_t = 20_000)]
        max_rounds: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Paths { common, format } => cmd_paths(&common, format),
        Command::Solve {
            common,
            mode,
            format,
            out,
        } => cmd_solve(&common, mode, format, out),
        Command::Fees {
            common,
            fee_units,
            format,
        } => cmd_fees(&common, fee_units.into(), format),
        Command::VerifyEnforcement { common } => cmd_verify(&common),
        Command::Sweep {
            common,
            param,
            values,
            mode,
            fees,
            out,
        } => cmd_sweep(&common, &param, &values, mode, fees, out),
        Command::Table2 {
            common,
            cases,
            format,
        } => cmd_table2(&common, &cases, format),
        Command::Oracle {
            common,
            bins,
            damping,
            max_rounds,
        } => cmd_oracle(&common, bins, damping, max_rounds),
    }
}

fn solve_mode(s: &Scenario, mode: Mode, opts: &SolverOptions) -> Result<EquilibriumSolution, String> {
    match mode {
        Mode::Ue => solve_ue(s, opts).map_err(|e| e.to_string()),
        Mode::So => solve_so(s, opts).map_err(|e| e.to_string()),
    }
}

fn cmd_paths(common: &CommonArgs, format: Format) -> Result<ExitCode, String> {
    let s = common.load()?;
    let ps = tcap::paths::PathSet::build(&s);
    match format {
        Format::Json => {
            let rows: Vec<serde_json::Value> = ps
                .per_od
                .iter()
                .flat_map(|od| {
                    od.paths.iter().enumerate().map(|(pi, p)| {
                        serde_json::json!({
                            "od": od.od,
                            "rank": pi + 1,
                            "station": s.stations[p.path.station].node_id,
                            "arcs": p.path.arcs.iter()
                                .map(|&ai| s.network.arcs[ai].id.clone())
                                .collect::<Vec<_>>(),
                            "route_minutes": p.path.route_minutes,
                            "theta_usd_per_kwh": p.theta,
                        })
                    })
                })
                .collect();
            println!("{}", serde_json::to_string_pretty(&rows).unwrap());
        }
        Format::Table | Format::Csv => {
            let sep = if format == Format::Csv { "," } else { "  " };
            println!(
                "{}",
                ["od", "rank", "station", "minutes", "theta_usd_per_kwh", "arcs"].join(sep)
            );
            for od in &ps.per_od {
                for (pi, p) in od.paths.iter().enumerate() {
                    let arcs: Vec<&str> = p
                        .path
                        .arcs
                        .iter()
                        .map(|&ai| s.network.arcs[ai].id.as_str())
                        .collect();
                    println!(
                        "{}",
                        [
                            od.od.to_string(),
                            (pi + 1).to_string(),
                            s.stations[p.path.station].node_id.clone(),
                            format!("{:.1}", p.path.route_minutes),
                            format!("{:.5}", p.theta),
                            arcs.join("|"),
                        ]
                        .join(sep)
                    );
                }
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn write_bundle(bundle: &ResultBundle, out: Option<&PathBuf>, format: Format) -> Result<(), String> {
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|e| e.to_string())?;
        std::fs::write(dir.join("bundle.json"), bundle.to_json()).map_err(|e| e.to_string())?;
        std::fs::write(dir.join("stations.csv"), bundle.station_csv())
            .map_err(|e| e.to_string())?;
        std::fs::write(dir.join("paths.csv"), bundle.path_csv()).map_err(|e| e.to_string())?;
    } else {
        match format {
            Format::Json => println!("{}", bundle.to_json()),
            Format::Csv => print!("{}", bundle.station_csv()),
            Format::Table => {
                println!(
                    "mode={} alpha={} converged={} gap={:.2e} iterations={}",
                    bundle.mode,
                    bundle.alpha_min_per_usd,
                    bundle.solver.converged,
                    bundle.solver.wardrop_gap,
                    bundle.solver.iterations
                );
                println!(
                    "{:<12} {:>10} {:>10} {:>12} {:>8} {:>10}",
                    "station", "lambda", "wait_min", "load_kwh_hr", "tau", "upsilon"
                );
                for r in &bundle.stations {
                    println!(
                        "{:<12} {:>10.3} {:>10.3} {:>12.1} {:>8.3} {:>10.5}",
                        r.station,
                        r.lambda_ev_hr,
                        r.wait_min,
                        r.load_kwh_hr,
                        r.tau_usd,
                        r.upsilon_usd_per_kwh
                    );
                }
                println!(
                    "totals: wait={:.2} min, electricity=${:.2}/hr, road={:.0} EV·min",
                    bundle.totals.wait_potential_min,
                    bundle.totals.electricity_cost_usd_hr,
                    bundle.totals.road_time_ev_min
                );
            }
        }
    }
    Ok(())
}

fn cmd_solve(
    common: &CommonArgs,
    mode: Mode,
    format: Format,
    out: Option<PathBuf>,
) -> Result<ExitCode, String> {
    let s = common.load()?;
    let opts = common.options(&s);
    let sol = solve_mode(&s, mode, &opts)?;
    let fees = match mode {
        Mode::So => Some(optimal_prices(&sol, &s, FeeUnits::Paper).map_err(|e| e.to_string())?),
        Mode::Ue => None,
    };
    let bundle = ResultBundle::from_solution(&sol, &s, fees).map_err(|e| e.to_string())?;
    write_bundle(&bundle, out.as_ref(), format)?;
    if !sol.converged {
        eprintln!("warning: solver did not converge");
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_fees(common: &CommonArgs, units: FeeUnits, format: Format) -> Result<ExitCode, String> {
    let s = common.load()?;
    let opts = common.options(&s);
    let sol = solve_so(&s, &opts).map_err(|e| e.to_string())?;
    let prices = optimal_prices(&sol, &s, units).map_err(|e| e.to_string())?;
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&prices).unwrap()),
        Format::Table | Format::Csv => {
            let sep = if format == Format::Csv { "," } else { "  " };
            println!("{}", ["station", "tau_usd", "upsilon_usd_per_kwh"].join(sep));
            for (station, e) in &prices.entries {
                println!(
                    "{}",
                    [
                        station.clone(),
                        format!("{:.4}", e.tau_usd),
                        format!("{:.5}", e.upsilon_usd_per_kwh)
                    ]
                    .join(sep)
                );
            }
        }
    }
    if !sol.converged {
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(common: &CommonArgs) -> Result<ExitCode, String> {
    let s = common.load()?;
    let opts = common.options(&s);
    let report = verify_so_enforcement(&s, None, &opts).map_err(|e| e.to_string())?;
    println!(
        "max per-path flow deviation: {:.4} EV/hr",
        report.max_flow_deviation
    );
    println!(
        "social cost: optimum {:.2}, priced equilibrium {:.2} (gap {:.4}%)",
        report.so_social_cost,
        report.ue_social_cost,
        100.0 * report.social_cost_gap
    );
    if !(report.ue.converged && report.so.converged) {
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

fn parallel_width(n: usize) -> usize {
    std::env::var("TCAP_PARALLEL")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|p| p.get())
                .unwrap_or(1)
        })
        .clamp(1, n.max(1))
}

struct SweepRow {
    value: f64,
    station: String,
    lambda: f64,
    wait_min: f64,
    load: f64,
    tau: f64,
    upsilon: f64,
    total_wait: f64,
    total_elec: f64,
    converged: bool,
}

fn cmd_sweep(
    common: &CommonArgs,
    param: &str,
    values: &[f64],
    mode: Mode,
    fees: FeeMode,
    out: Option<PathBuf>,
) -> Result<ExitCode, String> {
    if param != "alpha" {
        return Err(format!("unsupported sweep parameter '{param}'"));
    }
    if values.is_empty() || values.windows(2).any(|w| w[1] <= w[0]) {
        return Err("sweep values must be nonempty and increasing".into());
    }
    let s = common.load()?;
    let opts = common.options(&s);

    let solve_one = |alpha: f64| -> Result<Vec<SweepRow>, String> {
        let sv = s.with_alpha(alpha);
        let (sol, fee_scheme) = match fees {
            FeeMode::None => (solve_mode(&sv, mode, &opts)?, None),
            FeeMode::Optimal => match mode {
                // The social solve is itself the assignment under the
                // derived fee schedule; report it with paper-unit fees.
                Mode::So => {
                    let so = solve_so(&sv, &opts).map_err(|e| e.to_string())?;
                    let fees =
                        optimal_prices(&so, &sv, FeeUnits::Paper).map_err(|e| e.to_string())?;
                    (so, Some(fees))
                }
                // For mode=ue, derive the enforcing (Pigouvian) fees
                // from the system optimum, install them, and re-solve.
                Mode::Ue => {
                    let sysopt = tcap::social::solve_system_optimum(&sv, &opts)
                        .map_err(|e| e.to_string())?;
                    let enforcing = optimal_prices(&sysopt, &sv, FeeUnits::Lagrangian)
                        .map_err(|e| e.to_string())?;
                    let priced = sv.with_fees(Some(enforcing.clone()));
                    (
                        solve_ue(&priced, &opts).map_err(|e| e.to_string())?,
                        Some(enforcing),
                    )
                }
            },
        };
        let bundle = ResultBundle::from_solution(&sol, &sv, fee_scheme.clone())
            .map_err(|e| e.to_string())?;
        Ok(bundle
            .stations
            .iter()
            .map(|r| SweepRow {
                value: alpha,
                station: r.station.clone(),
                lambda: r.lambda_ev_hr,
                wait_min: r.wait_min,
                load: r.load_kwh_hr,
                tau: fee_scheme
                    .as_ref()
                    .and_then(|f| f.entries.get(&r.station).map(|e| e.tau_usd))
                    .unwrap_or(r.tau_usd),
                upsilon: r.upsilon_usd_per_kwh,
                total_wait: bundle.totals.wait_potential_min,
                total_elec: bundle.totals.electricity_cost_usd_hr,
                converged: bundle.solver.converged,
            })
            .collect())
    };

    // Independent values solved in parallel; failures recorded per value.
    let width = parallel_width(values.len());
    let mut results: Vec<(f64, Result<Vec<SweepRow>, String>)> = Vec::new();
    for chunk in values.chunks(width) {
        let batch: Vec<(f64, Result<Vec<SweepRow>, String>)> = std::thread::scope(|scope| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|&v| scope.spawn(move || (v, solve_one(v))))
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
        results.extend(batch);
    }
    results.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let mut csv = String::from(
        "alpha,station,lambda_ev_hr,wait_min,load_kwh_hr,tau_usd,upsilon_usd_per_kwh,total_wait_min,total_elec_usd_hr,converged\n",
    );
    let mut had_failure = false;
    for (v, res) in &results {
        match res {
            Ok(rows) => {
                for r in rows {
                    csv.push_str(&format!(
                        "{},{},{},{},{},{},{},{},{},{}\n",
                        r.value,
                        r.station,
                        r.lambda,
                        r.wait_min,
                        r.load,
                        r.tau,
                        r.upsilon,
                        r.total_wait,
                        r.total_elec,
                        r.converged
                    ));
                }
            }
            Err(e) => {
                had_failure = true;
                eprintln!("alpha={v}: {e}");
            }
        }
    }
    match out {
        Some(path) => std::fs::write(&path, csv).map_err(|e| e.to_string())?,
        None => print!("{csv}"),
    }
    Ok(if had_failure {
        ExitCode::from(3)
    } else {
        ExitCode::SUCCESS
    })
}

const CANONICAL_CASES: [(f64, f64, f64, bool); 10] = [
    (100.0, 0.0, 0.0, false),
    (100.0, 0.0, 0.0, true),
    (0.0, 0.0, 100.0, false),
    (0.0, 0.0, 100.0, true),
    (0.0, 100.0, 0.0, false),
    (0.0, 100.0, 0.0, true),
    (50.0, 25.0, 25.0, false),
    (50.0, 25.0, 25.0, true),
    (25.0, 25.0, 50.0, false),
    (25.0, 25.0, 50.0, true),
];

/// Per-case results of the fleet-mix panel.
pub struct Table2Row {
    pub high: f64,
    pub medium: f64,
    pub low: f64,
    pub optimal_fees: bool,
    pub electricity_usd_hr: f64,
    pub waiting_min: f64,
    pub converged: bool,
}

fn table2_case(
    s: &Scenario,
    opts: &SolverOptions,
    high: f64,
    medium: f64,
    low: f64,
    optimal: bool,
) -> Result<Table2Row, String> {
    if high + medium + low <= 0.0 {
        return Ok(Table2Row {
            high,
            medium,
            low,
            optimal_fees: optimal,
            electricity_usd_hr: 0.0,
            waiting_min: 0.0,
            converged: true,
        });
    }
    let split = s
        .with_class_split(&[
            ("high".to_string(), high),
            ("medium".to_string(), medium),
            ("low".to_string(), low),
        ])
        .map_err(|e| e.to_string())?;
    let sol = if optimal {
        solve_so(&split, opts).map_err(|e| e.to_string())?
    } else {
        solve_ue(&split, opts).map_err(|e| e.to_string())?
    };
    let bundle = ResultBundle::from_solution(&sol, &split, None).map_err(|e| e.to_string())?;
    Ok(Table2Row {
        high,
        medium,
        low,
        optimal_fees: optimal,
        electricity_usd_hr: bundle.totals.electricity_cost_usd_hr,
        waiting_min: bundle.totals.wait_potential_min,
        converged: sol.converged,
    })
}

fn cmd_table2(common: &CommonArgs, cases: &[String], format: Format) -> Result<ExitCode, String> {
    let s = common.load()?;
    let opts = common.options(&s);
    let parsed: Vec<(f64, f64, f64, bool)> = if cases.is_empty() {
        CANONICAL_CASES.to_vec()
    } else {
        cases
            .iter()
            .map(|c| {
                let parts: Vec<&str> = c.split(',').collect();
                if parts.len() != 4 {
                    return Err(format!("case '{c}' must be high,medium,low,none|optimal"));
                }
                let h: f64 = parts[0].trim().parse().map_err(|_| format!("bad case '{c}'"))?;
                let m: f64 = parts[1].trim().parse().map_err(|_| format!("bad case '{c}'"))?;
                let l: f64 = parts[2].trim().parse().map_err(|_| format!("bad case '{c}'"))?;
                let fees = match parts[3].trim() {
                    "none" => false,
                    "optimal" => true,
                    other => return Err(format!("bad fee mode '{other}'")),
                };
                Ok((h, m, l, fees))
            })
            .collect::<Result<_, _>>()?
    };

    let mut all_converged = true;
    let mut rows = Vec::new();
    for (i, &(h, m, l, fees)) in parsed.iter().enumerate() {
        let row = table2_case(&s, &opts, h, m, l, fees)?;
        all_converged &= row.converged;
        rows.push((i + 1, row));
    }
    match format {
        Format::Json => {
            let v: Vec<serde_json::Value> = rows
                .iter()
                .map(|(i, r)| {
                    serde_json::json!({
                        "case": i,
                        "high": r.high,
                        "medium": r.medium,
                        "low": r.low,
                        "optimal_fees": r.optimal_fees,
                        "electricity_usd_hr": r.electricity_usd_hr,
                        "waiting_min": r.waiting_min,
                    })
                })
                .collect();
            println!("{}", serde_json::to_string_pretty(&v).unwrap());
        }
        Format::Table | Format::Csv => {
            let sep = if format == Format::Csv { "," } else { "  " };
            println!(
                "{}",
                ["case", "high", "medium", "low", "fees", "electricity_usd_hr", "waiting_min"]
                    .join(sep)
            );
            for (i, r) in &rows {
                println!(
                    "{}",
                    [
                        i.to_string(),
                        format!("{:.0}", r.high),
                        format!("{:.0}", r.medium),
                        format!("{:.0}", r.low),
                        if r.optimal_fees { "optimal" } else { "none" }.to_string(),
                        format!("{:.2}", r.electricity_usd_hr),
                        format!("{:.2}", r.waiting_min),
                    ]
                    .join(sep)
                );
            }
        }
    }
    Ok(if all_converged {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    })
}

fn cmd_oracle(
    common: &CommonArgs,
    bins: usize,
    damping: f64,
    max_rounds: usize,
) -> Result<ExitCode, String> {
    let s = common.load()?;
    let r = tcap::oracle::discretized_best_response(&s, bins, damping, max_rounds)
        .map_err(|e| e.to_string())?;
    println!(
        "best response: converged={} rounds={}",
        r.converged, r.rounds
    );
    for (oi, flows) in r.flows.iter().enumerate() {
        println!(
            "od {}: {}",
            oi,
            flows
                .iter()
                .map(|f| format!("{f:.3}"))
                .collect::<Vec<_>>()
                .join(" ")
        );
    }
    Ok(ExitCode::SUCCESS)
}

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use qcd_core::bounds::{
    greedy_asymptotic_add, lower_bound_add, min_rights_for_interval, min_rights_for_interval_base10,
    prior_only_add, prior_rate, upper_bound_add,
};
use qcd_core::chain::{energy_chain, EnergyChain};
use qcd_core::config::{ExperimentConfig, PolicyKind};
use qcd_core::io::{limited_table_json, parse_limited_table, parse_stochastic_table, stochastic_table_json};
use qcd_core::limited::{solve_limited, LimitedPolicyTable};
use qcd_core::model::{kl_divergence, ChangeModel};
use qcd_core::montecarlo::{estimate, SimEstimate};
use qcd_core::policy::Policy;
use qcd_core::stochastic::{infinite_horizon_solve, StochasticValueTable};

use crate::csvout::{sig12, CurveWriter};
use crate::error::{CliError, CliResult};

/// Where results go: a file, or standard output.
pub struct Sink(pub Option<PathBuf>);

impl Sink {
    pub fn from_config(cli_out: Option<PathBuf>, cfg: &ExperimentConfig) -> Self {
        Sink(cli_out.or_else(|| cfg.run.out.as_ref().map(PathBuf::from)))
    }

    fn write(&self, bytes: &[u8]) -> CliResult<()> {
        match &self.0 {
            Some(p) => fs::write(p, bytes).map_err(|e| CliError::io(p, e)),
            None => std::io::stdout()
                .write_all(bytes)
                .map_err(|e| CliError::io("<stdout>", e)),
        }
    }
}

pub fn load_config(path: Option<&Path>) -> CliResult<ExperimentConfig> {
    match path {
        None => Ok(ExperimentConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            Ok(ExperimentConfig::from_json(&text)?)
        }
    }
}

fn read_text(p: &Path) -> CliResult<String> {
    fs::read_to_string(p).map_err(|e| CliError::io(p, e))
}

fn solve_limited_at(cfg: &ExperimentConfig, c: f64) -> CliResult<LimitedPolicyTable> {
    let model = cfg.change_model()?;
    Ok(solve_limited(
        cfg.solver.rights,
        model.rho(),
        c,
        model.pair.clone(),
        &cfg.grid()?,
        &cfg.quadrature(),
    )?)
}

pub fn solve_limited_cmd(cfg: &ExperimentConfig, sink: &Sink) -> CliResult<()> {
    let table = solve_limited_at(cfg, cfg.solver.cost)?;
    let ths: Vec<String> = table.rows.iter().map(|r| sig12(r.threshold)).collect();
    eprintln!(
        "solved {} rights at c = {}, thresholds by rights left [{}]",
        table.rights(),
        sig12(table.c),
        ths.join(", ")
    );
    let mut text = limited_table_json(&table)?;
    text.push('\n');
    sink.write(text.as_bytes())
}

pub fn solve_stochastic_cmd(cfg: &ExperimentConfig, sink: &Sink) -> CliResult<()> {
    let model = cfg.change_model()?;
    let table = infinite_horizon_solve(
        model.rho(),
        cfg.solver.cost,
        model.pair.clone(),
        &cfg.energy_model()?,
        &cfg.grid()?,
        &cfg.quadrature(),
        &cfg.iteration(),
    )?;
    eprintln!(
        "converged after {} iterations, sup-norm change {:e}",
        table.iterations, table.achieved_tol
    );
    let mut text = stochastic_table_json(&table)?;
    text.push('\n');
    sink.write(text.as_bytes())
}

fn check_table_model(rho: f64, pair: &dyn qcd_core::model::DensityPair, model: &ChangeModel) -> CliResult<()> {
    if rho != model.rho() {
        return Err(qcd_core::Error::Config(format!(
            "table was solved for rho = {rho}, config has {}",
            model.rho()
        ))
        .into());
    }
    if pair.params() != model.pair.params() {
        return Err(qcd_core::Error::Config("table density does not match the model block".into()).into());
    }
    Ok(())
}

fn limited_table(cfg: &ExperimentConfig, model: &ChangeModel, path: Option<&Path>) -> CliResult<Arc<LimitedPolicyTable>> {
    let t = match path {
        Some(p) => parse_limited_table(&read_text(p)?)?,
        None => solve_limited_at(cfg, cfg.solver.cost)?,
    };
    check_table_model(t.rho, t.pair.as_ref(), model)?;
    Ok(Arc::new(t))
}

fn stochastic_table(cfg: &ExperimentConfig, model: &ChangeModel, path: &Path) -> CliResult<Arc<StochasticValueTable>> {
    let t = parse_stochastic_table(&read_text(path)?)?;
    check_table_model(t.rho, t.pair.as_ref(), model)?;
    if t.energy != cfg.energy_model()? {
        return Err(qcd_core::Error::Config("table energy model does not match the energy block".into()).into());
    }
    Ok(Arc::new(t))
}

fn run(policy: &Policy, model: &ChangeModel, c: f64, cfg: &ExperimentConfig) -> CliResult<SimEstimate> {
    Ok(estimate(policy, model, c, cfg.run.trials, cfg.run.master_seed)?)
}

pub fn simulate_cmd(cfg: &ExperimentConfig, table: Option<&Path>, sink: &Sink) -> CliResult<()> {
    let model = cfg.change_model()?;
    let kl = kl_divergence(model.pair.as_ref());
    let rho = model.rho();
    let c = cfg.solver.cost;
    let r = &cfg.run;
    let mut buf = Vec::new();
    let mut w = CurveWriter::new(&mut buf)?;
    match r.policy {
        PolicyKind::Immediate => {
            let e = run(&Policy::ImmediateStop, &model, c, cfg)?;
            w.estimate("immediate", 0.0, &e)?;
        }
        PolicyKind::Shiryaev => {
            for &a in &r.alphas {
                w.estimate("shiryaev", a, &run(&Policy::shiryaev(a)?, &model, c, cfg)?)?;
            }
            for &a in &r.alphas {
                w.bound("lower-bound", a, lower_bound_add(a, kl, rho))?;
            }
        }
        PolicyKind::Uniform => {
            for &a in &r.alphas {
                let p = Policy::Uniform {
                    interval: r.interval,
                    alpha: a,
                    max_samples: r.max_samples,
                };
                w.estimate("uniform", a, &run(&p, &model, c, cfg)?)?;
            }
            for &a in &r.alphas {
                w.bound("upper-bound", a, upper_bound_add(a, kl, rho, r.interval))?;
            }
        }
        PolicyKind::Greedy => {
            let energy = cfg.energy_model()?;
            let pt = energy_chain(&energy)?.sampling_fraction;
            for &a in &r.alphas {
                w.estimate("greedy", a, &run(&Policy::greedy(a, energy.clone())?, &model, c, cfg)?)?;
            }
            for &a in &r.alphas {
                w.bound("greedy-bound", a, greedy_asymptotic_add(a, pt, kl, rho))?;
            }
        }
        PolicyKind::Limited => match table {
            Some(p) => {
                let t = limited_table(cfg, &model, Some(p))?;
                let e = run(&Policy::Limited(t.clone()), &model, t.c, cfg)?;
                w.estimate("limited", t.c, &e)?;
            }
            None => {
                for cost in cfg.cost_sweep() {
                    let t = Arc::new(solve_limited_at(cfg, cost)?);
                    w.estimate("limited", cost, &run(&Policy::Limited(t), &model, cost, cfg)?)?;
                }
            }
        },
        PolicyKind::LimitedThreshold => {
            let t = limited_table(cfg, &model, table)?;
            for &a in &r.alphas {
                let p = Policy::LimitedThreshold {
                    table: t.clone(),
                    alpha: a,
                };
                w.estimate("limited-threshold", a, &run(&p, &model, t.c, cfg)?)?;
            }
        }
        PolicyKind::StochasticOptimal => {
            let path = table.ok_or_else(|| {
                CliError::Usage("the stochastic-optimal policy needs --table <solved table>".into())
            })?;
            let t = stochastic_table(cfg, &model, path)?;
            let e = run(&Policy::StochasticOptimal(t.clone()), &model, t.c, cfg)?;
            w.estimate("stochastic-optimal", t.c, &e)?;
        }
    }
    w.finish()?;
    sink.write(&buf)
}

pub fn bounds_cmd(cfg: &ExperimentConfig, sink: Option<&Sink>) -> CliResult<()> {
    let model = cfg.change_model()?;
    let kl = kl_divergence(model.pair.as_ref());
    let rho = model.rho();
    let pt = energy_chain(&cfg.energy_model()?)?.sampling_fraction;
    let mut intervals = vec![1];
    if cfg.run.interval != 1 {
        intervals.push(cfg.run.interval);
    }
    println!(
        "kl = {}  |ln(1-rho)| = {}  p~ = {}  (natural logarithms)",
        sig12(kl),
        sig12(prior_rate(rho)),
        sig12(pt)
    );
    let header = [
        "alpha",
        "interval",
        "lower",
        "upper",
        "greedy",
        "prior_only",
        "min_rights",
        "min_rights_base10",
    ];
    println!(
        "{:>10} {:>8} {:>14} {:>14} {:>14} {:>14} {:>10} {:>17}",
        header[0], header[1], header[2], header[3], header[4], header[5], header[6], header[7]
    );
    let mut rows = Vec::new();
    for &a in &cfg.run.alphas {
        for &s in &intervals {
            let row = [
                sig12(a),
                s.to_string(),
                sig12(lower_bound_add(a, kl, rho)),
                sig12(upper_bound_add(a, kl, rho, s)),
                sig12(greedy_asymptotic_add(a, pt, kl, rho)),
                sig12(prior_only_add(a, rho)),
                min_rights_for_interval(a, rho, s).to_string(),
                min_rights_for_interval_base10(a, rho, s).to_string(),
            ];
            println!(
                "{:>10} {:>8} {:>14} {:>14} {:>14} {:>14} {:>10} {:>17}",
                row[0], row[1], row[2], row[3], row[4], row[5], row[6], row[7]
            );
            rows.push(row);
        }
    }
    if let Some(sink) = sink {
        let mut buf = Vec::new();
        {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(&mut buf);
            w.write_record(header)?;
            for r in &rows {
                w.write_record(r)?;
            }
            w.flush().map_err(|e| CliError::io("<buffer>", e))?;
        }
        sink.write(&buf)?;
    }
    Ok(())
}

fn print_chain(ch: &EnergyChain) {
    println!("transition matrix (greedy policy):");
    for row in &ch.transition {
        let cells: Vec<String> = row.iter().map(|x| format!("{:>10}", sig12(*x))).collect();
        println!("  {}", cells.join(" "));
    }
    let fmt = |v: &[f64]| v.iter().map(|x| sig12(*x)).collect::<Vec<_>>().join(", ");
    println!("stationary (linear solve):    [{}]", fmt(&ch.stationary));
    println!("stationary (power iteration): [{}]", fmt(&ch.stationary_power));
    let gap = ch
        .stationary
        .iter()
        .zip(&ch.stationary_power)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!("max difference: {gap:e}");
    println!("recurrent states: {:?}", ch.recurrent);
    println!("p~ = 1 - p0 w0 = {}", sig12(ch.sampling_fraction));
}

pub fn chain_cmd(cfg: &ExperimentConfig, sink: Option<&Sink>) -> CliResult<()> {
    let ch = energy_chain(&cfg.energy_model()?)?;
    print_chain(&ch);
    if ch.sampling_fraction == 0.0 {
        eprintln!("warning: degenerate chain, rights never arrive so the greedy policy never samples");
    }
    if let Some(sink) = sink {
        let mut text = serde_json::to_string_pretty(&ch).map_err(qcd_core::Error::from)?;
        text.push('\n');
        sink.write(text.as_bytes())?;
    }
    Ok(())
}

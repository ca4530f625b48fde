use std::fs;
use std::io::BufWriter;
use std::path::Path;

use nlam::algebra::TameWindow;
use nlam::experiment::{
    bootstrap_kappa, emit_plots, fit_power_law, load_traces, render_plots, run_ensemble, tail_rate_check, tame_suite,
    EnsembleStats, ExperimentConfig,
};
use nlam::measure::{
    dyadic_check, dyadic_ln_epsilon_threshold, frequency_jacobian_defect, jacobian_bound, resonance_census, McConfig,
};
use nlam::normal_form::{run_normal_form_with, NormalFormConfig, NormalFormSchedule, StepReport};
use nlam::{Error, Potential};
use serde_json::{json, Value};

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_json(path: &Path, value: &Value) -> Result<(), Error> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    let text = serde_json::to_string_pretty(value).expect("json values always serialize");
    fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}

pub fn simulate(cfg: &ExperimentConfig) -> Result<(), Error> {
    let run = run_ensemble(cfg)?;
    println!(
        "{} seeds completed ({} reused from {}), {} failed",
        run.traces.len(),
        run.reused.len(),
        run.output_dir.display(),
        run.failures.len()
    );
    for f in &run.failures {
        eprintln!("seed {}: {}", f.seed, f.error);
    }
    if run.traces.is_empty() {
        return Err(Error::InsufficientData("every seed failed".into()));
    }
    let stats = run.stats()?;
    let last = stats.times.len() - 1;
    println!(
        "D(t = {}) median {:.4e}, interquartile [{:.4e}, {:.4e}]",
        stats.times[last], stats.median[last], stats.q25[last], stats.q75[last]
    );
    match fit_power_law(&stats.times, &stats.median, cfg.fit_t_min, cfg.fit_t_max) {
        Ok(f) => println!(
            "median fit over [{}, {}]: kappa = {:.5} +/- {:.5} (r2 {:.4}, {} points)",
            cfg.fit_t_min, cfg.fit_t_max, f.kappa, f.stderr, f.r2, f.points
        ),
        Err(e) => println!("median fit skipped: {e}"),
    }
    Ok(())
}

pub fn fit(cfg: &ExperimentConfig, dir: Option<&Path>) -> Result<(), Error> {
    let dir = dir.unwrap_or(&cfg.output_dir);
    let traces = load_traces(dir)?;
    let stats = EnsembleStats::from_traces(&traces)?;
    let median = fit_power_law(&stats.times, &stats.median, cfg.fit_t_min, cfg.fit_t_max)?;
    println!(
        "median of {} traces over [{}, {}]: kappa = {:.5} +/- {:.5} (r2 {:.4})",
        traces.len(),
        cfg.fit_t_min,
        cfg.fit_t_max,
        median.kappa,
        median.stderr,
        median.r2
    );
    // seed-resampling spread; the regression stderr ignores which realizations were drawn
    let boot = (traces.len() >= 2)
        .then(|| bootstrap_kappa(&traces, cfg.fit_t_min, cfg.fit_t_max, 400, 0))
        .transpose()?;
    if let Some(b) = &boot {
        println!(
            "seed bootstrap ({} resamples): kappa stderr {:.5}",
            b.resamples, b.stderr
        );
    }
    println!(
        "{:>8} {:>10} {:>10} {:>12} {:>12}",
        "seed", "kappa", "stderr", "max tail'", "j0^(-3/k)"
    );
    let mut seeds = Vec::new();
    for tr in &traces {
        let fit = fit_power_law(&tr.sample_times, &tr.diffusion_values, cfg.fit_t_min, cfg.fit_t_max);
        let tail = tail_rate_check(tr, tr.metadata.j0, cfg.kappa);
        let (k, e) = match &fit {
            Ok(f) => (format!("{:.5}", f.kappa), format!("{:.5}", f.stderr)),
            Err(_) => ("-".into(), "-".into()),
        };
        let (r, b) = match &tail {
            Ok(t) => (format!("{:.4e}", t.max_rate), format!("{:.4e}", t.bound)),
            Err(_) => ("-".into(), "-".into()),
        };
        println!("{:>8} {:>10} {:>10} {:>12} {:>12}", tr.metadata.seed, k, e, r, b);
        seeds.push(json!({
            "seed": tr.metadata.seed,
            "fit": fit.as_ref().map(|f| json!(f)).unwrap_or_else(|e| json!({ "error": e.to_string() })),
            "tail_rate": tail.as_ref().map(|t| json!({
                "j0": t.j0,
                "max_rate": t.max_rate,
                "max_rate_time": t.max_rate_time,
                "bound": t.bound,
                "within_bound": t.within_bound(),
            })).unwrap_or_else(|e| json!({ "error": e.to_string() })),
        }));
    }
    let path = dir.join("fit.json");
    write_json(
        &path,
        &json!({
            "t_min": cfg.fit_t_min,
            "t_max": cfg.fit_t_max,
            "kappa": cfg.kappa,
            "median": median,
            "median_bootstrap": boot,
            "seeds": seeds,
        }),
    )?;
    println!("wrote {}", path.display());
    Ok(())
}

pub fn plot(cfg: &ExperimentConfig, dir: Option<&Path>, render: bool) -> Result<(), Error> {
    let dir = dir.unwrap_or(&cfg.output_dir);
    let traces = load_traces(dir)?;
    let out = emit_plots(&traces, dir, cfg.fit_t_min, cfg.fit_t_max)?;
    println!("wrote {} and {}", out.csv.display(), out.script.display());
    if render {
        let image = render_plots(dir).map_err(|msg| io_err(&out.script, std::io::Error::other(msg)))?;
        println!("rendered {}", image.display());
    }
    Ok(())
}

fn step_line(r: &StepReport) -> String {
    format!(
        "step {}: eps_s {:.3e} -> {:.3e}, {} targeted, |||F||| {:.3e}, {} R terms, min margin {:.3}, {:.1}s",
        r.s,
        r.epsilon_s,
        r.epsilon_next,
        r.targeted,
        r.generator_norm,
        r.r_terms,
        r.min_margin(),
        r.wall_seconds
    )
}

pub fn normal_form(
    cfg: &ExperimentConfig,
    seed: Option<u64>,
    attempts: u64,
    dump_dir: Option<&Path>,
) -> Result<(), Error> {
    let sched = NormalFormSchedule::build(cfg.epsilon, cfg.tau, cfg.j0, cfg.kappa, cfg.profile)?;
    let window = TameWindow::new(cfg.tau, cfg.j0)?;
    let mut nf = NormalFormConfig::new(cfg.kappa);
    nf.policy = cfg.policy;
    if cfg.degree_cap > 0 {
        nf.degree_cap = cfg.degree_cap;
    }
    let radius = cfg.normal_form_radius();
    println!(
        "schedule: M = {}, target j0^(-3/kappa) = {:.3e}, potential radius {}",
        sched.m,
        sched.target(),
        radius
    );
    for st in &sched.steps {
        println!(
            "  s = {}: eps_s {:.3e}, delta_s {:.4}, window {:.2} (half-width {})",
            st.s, st.epsilon, st.delta, st.window, st.halfwidth
        );
    }
    let start = seed.unwrap_or_else(|| cfg.seeds.seeds()[0]);
    let candidates = if seed.is_some() { 1 } else { attempts.max(1) };
    let dir = &cfg.output_dir;
    for seed in start..start + candidates {
        let pot = Potential::sample(seed, radius)?;
        let mut step_error = None;
        let result = run_normal_form_with(&pot, &sched, &window, &nf, |report, state| {
            println!("{}", step_line(report));
            let write = || -> Result<(), Error> {
                let value = serde_json::to_value(report).expect("report serializes");
                write_json(
                    &dir.join(format!("normal_form_seed{seed}_step{}.json", report.s)),
                    &value,
                )?;
                if let Some(dump) = dump_dir {
                    fs::create_dir_all(dump).map_err(|e| io_err(dump, e))?;
                    let parts = [("D", &state.d), ("Z", &state.z), ("R", &state.r)];
                    let generator = state.generators.last();
                    for (name, h) in parts.into_iter().chain(generator.map(|g| ("F", g))) {
                        let path = dump.join(format!("seed{seed}_step{}_{name}.txt", report.s));
                        let file = fs::File::create(&path).map_err(|e| io_err(&path, e))?;
                        h.write_dump(BufWriter::new(file)).map_err(|e| io_err(&path, e))?;
                    }
                }
                Ok(())
            };
            if let Err(e) = write() {
                step_error.get_or_insert(e);
            }
        });
        if let Some(e) = step_error {
            return Err(e);
        }
        match result {
            Ok((state, report)) => {
                println!(
                    "seed {seed}: {} steps in {:.1}s",
                    report.steps.len(),
                    report.wall_seconds
                );
                for c in &report.final_checks {
                    println!(
                        "  {:40} {:.4e} vs {:.4e} (ratio {:.3}) {}",
                        c.label,
                        c.value,
                        c.bound,
                        c.ratio,
                        if c.holds { "ok" } else { "VIOLATED" }
                    );
                }
                let path = dir.join(format!("normal_form_seed{seed}.json"));
                let mut value = serde_json::to_value(&report).expect("report serializes");
                value["all_hold"] = json!(report.all_hold());
                value["min_margin"] = json!(report.min_margin());
                value["frequency_jacobian_defect"] = json!(frequency_jacobian_defect(&state));
                write_json(&path, &value)?;
                println!("wrote {}", path.display());
                return Ok(());
            }
            Err(e @ Error::Resonance { .. }) if candidates > 1 => println!("seed {seed}: {e}"),
            Err(e) => return Err(e),
        }
    }
    Err(Error::InsufficientData(format!(
        "no non-resonant seed in [{start}, {})",
        start + candidates
    )))
}

pub fn measure(cfg: &ExperimentConfig, seed: u64) -> Result<(), Error> {
    let sched = NormalFormSchedule::build(cfg.epsilon, cfg.tau, cfg.j0, cfg.kappa, cfg.profile)?;
    let mc = McConfig {
        samples: cfg.samples,
        seed,
        tail_tolerance: cfg.tail_tolerance,
    };
    let census = resonance_census(&sched, &mc)?;
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let csv = dir.join("measure_census.csv");
    let file = fs::File::create(&csv).map_err(|e| io_err(&csv, e))?;
    census.write_csv(BufWriter::new(file)).map_err(|e| io_err(&csv, e))?;

    let jac = jacobian_bound(&sched);
    let dyadic = if cfg.j0 >= 10 {
        Some(dyadic_check(cfg.j0 as f64, cfg.epsilon.ln())?)
    } else {
        None
    };
    let cells_ok = census
        .cells
        .iter()
        .filter(|c| c.union.estimate() + c.tail_bound <= c.bound + 3.0 * c.union.stderr())
        .count();
    println!(
        "{} cells over M = {} steps; {} within the union bound",
        census.cells.len(),
        census.m,
        cells_ok
    );
    println!(
        "nonresonant fraction {:.5} +/- {:.5} (tail {:.3e}, conservative {:.5}) vs j0^(-6 eps^(1/1000)) = {:.3e}: {}",
        census.nonresonant.estimate(),
        census.nonresonant.stderr(),
        census.tail_bound,
        census.conservative_estimate(),
        census.lower_bound,
        if census.holds() { "holds" } else { "fails" }
    );
    println!(
        "frequency Jacobian: sum eps_r = {:.3e} vs sqrt(eps) = {:.3e}: {}",
        jac.epsilon_sum,
        jac.sqrt_epsilon,
        if jac.holds { "holds" } else { "fails" }
    );
    if let Some(d) = &dyadic {
        println!(
            "dyadic success at j0_bar = {}: {:.3e} vs {:.3e}: {} (needs ln eps < {:.1})",
            d.j0_bar,
            d.success,
            d.floor,
            if d.holds { "holds" } else { "fails" },
            dyadic_ln_epsilon_threshold(d.j0_bar)
        );
    }
    let path = dir.join("measure_summary.json");
    write_json(
        &path,
        &json!({
            "j0": census.j0,
            "epsilon": census.epsilon,
            "kappa": census.kappa,
            "tau": census.tau,
            "m": census.m,
            "config": census.config,
            "per_k": census.per_k,
            "nonresonant": census.nonresonant,
            "nonresonant_estimate": census.nonresonant.estimate(),
            "nonresonant_stderr": census.nonresonant.stderr(),
            "tail_bound": census.tail_bound,
            "conservative_estimate": census.conservative_estimate(),
            "lower_bound": census.lower_bound,
            "holds": census.holds(),
            "jacobian": jac,
            "dyadic": dyadic,
        }),
    )?;
    println!("wrote {} and {}", csv.display(), path.display());
    Ok(())
}

pub fn tame_check(cfg: &ExperimentConfig, seed: u64) -> Result<(), Error> {
    let suite = tame_suite(cfg.tame_states, seed, cfg.j0 as usize, cfg.tame_s)?;
    let failed = suite.cases.iter().filter(|c| !c.holds).count();
    println!(
        "{} states outside [-{}, {}], s = {}, C(s) = {}: worst lhs/rhs {:.4}, {} failures",
        suite.cases.len(),
        suite.j0,
        suite.j0,
        suite.s,
        suite.constant,
        suite.worst_ratio(),
        failed
    );
    let path = cfg.output_dir.join("tame_check.json");
    write_json(&path, &serde_json::to_value(&suite).expect("suite serializes"))?;
    println!("wrote {}", path.display());
    if failed > 0 {
        return Err(Error::BoundViolation(format!(
            "tame inequality failed on {failed} states"
        )));
    }
    Ok(())
}

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use anyhow::{Context, Result};
use serde_json::{json, Value};

use bayesgame::classical::{
    classical_region, deterministic_payoff_points, max_weighted_classical, nash_equilibria, DeterministicStrategy,
};
use bayesgame::equilibrium_opt::{
    best_seesaw, quantum_region_sample, verify_quantum_equilibrium, weight_grid, BestResponseReport, EquilibriumReport,
    SeesawOptions,
};
use bayesgame::experiment::{
    accidental_correction, debiased_payoffs, estimate_behavior, estimate_corrected, estimated_payoffs, simulate_runs,
    visibility_for_chsh, visibility_from_fidelity, NoiseKind, NoiseModel, PayoffEstimate, SourceModel,
};
use bayesgame::game::{expected_payoffs, pr_box_behavior, standard_game, GameSpec, PayoffPoint};
use bayesgame::io;
use bayesgame::npa::{self, build_moment_structure, chsh_functional, payoff_functional, Level};
use bayesgame::quantum::{
    behavior_of_quantum, bell_strategy, chsh_value, chsh_win_probability, fair_strategy, QuantumState, QuantumStrategy,
    QubitMeasurement,
};
use bayesgame::sdp::SdpOptions;
use bayesgame::{Rational, Scalar};

use crate::{ClassicalArgs, ExperimentArgs, GameArg, NpaArgs, QuantumArgs, RegionArgs, SeesawArgs, VerifyArgs};

/// A flag combination clap cannot express.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub struct Output {
    pub json: Value,
    pub text: String,
}

const CLASSICAL_BOUND: f64 = 1.125;

fn load_game(arg: &GameArg) -> Result<Option<GameSpec<f64>>> {
    arg.game
        .as_ref()
        .map(|p| io::load_game(p).with_context(|| format!("reading game {}", p.display())))
        .transpose()
}

fn game_or_standard(arg: &GameArg) -> Result<GameSpec<f64>> {
    Ok(load_game(arg)?.unwrap_or_else(standard_game))
}

fn pair<T: Scalar>(p: &PayoffPoint<T>) -> Value {
    json!([p.alice.as_f64(), p.bob.as_f64()])
}

fn parse_level(s: &str) -> Result<Level> {
    s.parse::<Level>().map_err(|e| UsageError(e.to_string()).into())
}

pub fn classical(a: &ClassicalArgs) -> Result<Output> {
    let out = match load_game(&a.game)? {
        None => classical_report(&standard_game::<Rational>(), true),
        Some(g) => classical_report(&g, false),
    }?;
    if let Some(path) = &a.region_csv {
        let g = game_or_standard(&a.game)?;
        io::write_points_csv(BufWriter::new(File::create(path)?), &classical_region(&g))?;
    }
    Ok(out)
}

fn classical_report<T: Scalar>(g: &GameSpec<T>, exact: bool) -> Result<Output> {
    let show = |v: T| {
        if exact {
            v.to_string()
        } else {
            format!("{}", v.as_f64())
        }
    };
    let mut text = String::new();
    let points = deterministic_payoff_points(g);
    let profiles: Vec<(DeterministicStrategy, DeterministicStrategy)> = DeterministicStrategy::all()
        .into_iter()
        .flat_map(|a| DeterministicStrategy::all().map(|b| (a, b)))
        .collect();
    writeln!(text, "deterministic profiles (Alice, Bob) -> (F_A, F_B):")?;
    for ((sa, sb), p) in profiles.iter().zip(&points) {
        writeln!(text, "  {sa:>10} {sb:>10}  ({}, {})", show(p.alice), show(p.bob))?;
    }
    let hull = classical_region(g);
    writeln!(text, "classical region vertices (counterclockwise):")?;
    for p in &hull {
        writeln!(text, "  ({}, {})", show(p.alice), show(p.bob))?;
    }
    let (max_joint, (ja, jb)) = max_weighted_classical(g, T::one(), T::one());
    let (max_a, (aa, ab)) = max_weighted_classical(g, T::one(), T::zero());
    let bob_at_max_a = points[aa.code() * 4 + ab.code()].bob;
    writeln!(text, "max F_A + F_B = {} ({ja}, {jb})", show(max_joint))?;
    writeln!(
        text,
        "max F_A = {} with F_B = {} ({aa}, {ab})",
        show(max_a),
        show(bob_at_max_a)
    )?;

    let nash = nash_equilibria(g);
    writeln!(text, "Nash equilibria without advice:")?;
    let mut eq_json = Vec::new();
    for e in &nash.equilibria {
        let kind = if e.is_pure() { "pure" } else { "mixed (flagged)" };
        writeln!(
            text,
            "  ({}, {})  {kind}  A={:?} B={:?}",
            show(e.payoffs.alice),
            show(e.payoffs.bob),
            e.alice.map(|v| v.as_f64()),
            e.bob.map(|v| v.as_f64())
        )?;
        eq_json.push(json!({
            "payoffs": pair(&e.payoffs),
            "payoffs_exact": exact.then(|| [e.payoffs.alice.to_string(), e.payoffs.bob.to_string()]),
            "alice": e.alice.map(|v| v.as_f64()),
            "bob": e.bob.map(|v| v.as_f64()),
            "pure": e.is_pure(),
            "flagged": !e.is_pure(),
        }));
    }
    if !nash.singular_supports.is_empty() {
        writeln!(
            text,
            "  {} support pairs had singular indifference systems and were skipped",
            nash.singular_supports.len()
        )?;
    }
    let json = json!({
        "exact": exact,
        "profiles": profiles.iter().zip(&points).map(|((sa, sb), p)| json!({
            "alice": sa.to_string(), "bob": sb.to_string(), "payoffs": pair(p),
        })).collect::<Vec<_>>(),
        "region": hull.iter().map(pair).collect::<Vec<_>>(),
        "max_joint": { "value": max_joint.as_f64(), "exact": exact.then(|| max_joint.to_string()),
                       "profile": [ja.to_string(), jb.to_string()] },
        "max_alice": { "value": max_a.as_f64(), "bob": bob_at_max_a.as_f64(),
                       "profile": [aa.to_string(), ab.to_string()] },
        "nash": eq_json,
        "singular_supports": nash.singular_supports.len(),
    });
    Ok(Output { json, text })
}

fn load_strategy(path: &Option<std::path::PathBuf>) -> Result<QuantumStrategy<f64>> {
    match path {
        Some(p) => io::load_strategy(p).with_context(|| format!("reading strategy {}", p.display())),
        None => Ok(fair_strategy()),
    }
}

fn best_response_json(r: &BestResponseReport<f64>) -> Value {
    json!({
        "player": r.player.to_string(),
        "current": r.current,
        "optimal": r.optimal,
        "gain": r.gain,
        "degenerate": r.degenerate,
        "measurements": r.measurements.iter().map(measurement_json).collect::<Vec<_>>(),
    })
}

fn measurement_json(m: &QubitMeasurement<f64>) -> Value {
    serde_json::to_value(io::MeasurementSpec::from_measurement(m)).expect("plain data serializes")
}

fn equilibrium_json(r: &EquilibriumReport<f64>) -> Value {
    json!({
        "is_equilibrium": r.is_equilibrium,
        "max_gain": r.max_gain,
        "alice": best_response_json(&r.alice),
        "bob": best_response_json(&r.bob),
    })
}

pub fn quantum(a: &QuantumArgs) -> Result<Output> {
    let g = game_or_standard(&a.game)?;
    let m = load_strategy(&a.strategy)?;
    let b = behavior_of_quantum(&m)?;
    let p = expected_payoffs(&g, &b);
    let eq = verify_quantum_equilibrium(&g, &m, a.tol);
    let s = chsh_value(&b);
    let mut text = String::new();
    writeln!(text, "F_A = {:.12}", p.alice)?;
    writeln!(text, "F_B = {:.12}", p.bob)?;
    writeln!(text, "F_A + F_B = {:.12}", p.joint())?;
    writeln!(
        text,
        "CHSH S = {:.12} (win probability {:.12})",
        s,
        chsh_win_probability(&b)
    )?;
    writeln!(
        text,
        "quantum equilibrium at tolerance {:e}: {} (largest gain {:.3e})",
        a.tol, eq.is_equilibrium, eq.max_gain
    )?;
    let json = json!({
        "payoffs": pair(&p),
        "joint": p.joint(),
        "chsh": s,
        "win_probability": chsh_win_probability(&b),
        "tolerance": a.tol,
        "equilibrium": equilibrium_json(&eq),
    });
    Ok(Output { json, text })
}

pub fn verify_eq(a: &VerifyArgs) -> Result<Output> {
    let g = game_or_standard(&a.game)?;
    let cases: Vec<(String, QuantumStrategy<f64>)> = if a.all_bell {
        (0..4)
            .map(|k| Ok((format!("bell {k}"), bell_strategy(k)?)))
            .collect::<Result<_>>()?
    } else if let Some(k) = a.bell {
        vec![(format!("bell {k}"), bell_strategy(k as usize)?)]
    } else {
        vec![(
            a.strategy
                .as_ref()
                .map_or("fair equilibrium".to_string(), |p| p.display().to_string()),
            load_strategy(&a.strategy)?,
        )]
    };
    let mut text = String::new();
    let mut reports = Vec::new();
    for (name, m) in &cases {
        let r = verify_quantum_equilibrium(&g, m, a.tol);
        let p = expected_payoffs(&g, &behavior_of_quantum(m)?);
        writeln!(
            text,
            "{name}: payoffs ({:.12}, {:.12}) equilibrium {} (Alice gain {:.3e}, Bob gain {:.3e})",
            p.alice, p.bob, r.is_equilibrium, r.alice.gain, r.bob.gain
        )?;
        let mut j = equilibrium_json(&r);
        j["name"] = json!(name);
        j["payoffs"] = pair(&p);
        reports.push(j);
    }
    let all = reports.iter().all(|r| r["is_equilibrium"] == json!(true));
    Ok(Output {
        json: json!({ "tolerance": a.tol, "all_equilibria": all, "strategies": reports }),
        text,
    })
}

pub fn seesaw(a: &SeesawArgs) -> Result<Output> {
    let g = game_or_standard(&a.game)?;
    let state = match &a.state {
        Some(p) => io::load_state(p).with_context(|| format!("reading state {}", p.display()))?,
        None => QuantumState::phi_plus(),
    };
    let opts = SeesawOptions {
        max_iters: a.max_iters,
        tol: a.tol,
        optimize_state: a.optimize_state,
    };
    let best = best_seesaw(&g, a.wa, a.wb, &state, a.restarts as usize, a.seed, &opts);
    let p = expected_payoffs(&g, &behavior_of_quantum(&best.strategy)?);
    let (classical, _) = max_weighted_classical(&g, a.wa, a.wb);
    if let Some(path) = &a.out {
        io::save_strategy(path, &best.strategy)?;
    }
    let mut text = String::new();
    writeln!(
        text,
        "best of {} restarts at w = ({}, {}), seed {}",
        a.restarts, a.wa, a.wb, a.seed
    )?;
    writeln!(
        text,
        "objective = {:.12} (classical max {:.12})",
        best.final_objective(),
        classical
    )?;
    writeln!(text, "payoffs = ({:.12}, {:.12})", p.alice, p.bob)?;
    writeln!(
        text,
        "iterations = {}, converged = {}, monotone = {}",
        best.objective.len(),
        best.converged,
        best.is_monotone(1e-12)
    )?;
    let mut json = json!({
        "weights": [a.wa, a.wb],
        "restarts": a.restarts,
        "seed": a.seed,
        "objective": best.final_objective(),
        "classical_max": classical,
        "payoffs": pair(&p),
        "iterations": best.objective.len(),
        "converged": best.converged,
        "monotone": best.is_monotone(1e-12),
        "strategy": serde_json::from_str::<Value>(&io::strategy_to_json(&best.strategy))?,
    });
    if a.trace {
        json["trace"] = json!(best.objective);
    }
    Ok(Output { json, text })
}

pub fn npa_bound(a: &NpaArgs) -> Result<Output> {
    let level = parse_level(&a.level)?;
    let g = game_or_standard(&a.game)?;
    let s = build_moment_structure(level);
    let f = if a.chsh {
        chsh_functional()
    } else {
        payoff_functional(&g, a.wa, a.wb)
    };
    let opts = SdpOptions {
        tol: a.tol,
        ..SdpOptions::default()
    };
    let sol = npa::solve_sdp(&s, &f, &opts)?;
    let what = if a.chsh {
        "CHSH".to_string()
    } else {
        format!("{}·F_A + {}·F_B", a.wa, a.wb)
    };
    let mut text = String::new();
    writeln!(text, "level {level} (moment matrix {}×{})", s.dim(), s.dim())?;
    writeln!(text, "upper bound on {what}: {:.12}", sol.value)?;
    writeln!(text, "gap {:.3e} after {} iterations", sol.gap, sol.iterations)?;
    let json = json!({
        "level": level.to_string(),
        "dimension": s.dim(),
        "functional": if a.chsh { json!("chsh") } else { json!({ "wA": a.wa, "wB": a.wb }) },
        "bound": sol.value,
        "primal_value": sol.primal_value,
        "gap": sol.gap,
        "iterations": sol.iterations,
        "primal_infeasibility": sol.primal_infeasibility,
        "dual_infeasibility": sol.dual_infeasibility,
    });
    Ok(Output { json, text })
}

pub fn region(a: &RegionArgs) -> Result<Output> {
    let level = parse_level(&a.level)?;
    let g = game_or_standard(&a.game)?;
    let weights = weight_grid::<f64>(a.grid as usize);
    let samples = quantum_region_sample(&g, &weights, a.restarts as usize, a.seed, &SeesawOptions::default())?;
    let planes = npa::region_upper_boundary(&g, &weights, level, &SdpOptions::default())?;
    let hull = classical_region(&g);

    let mut markers: Vec<(String, PayoffPoint<f64>)> = nash_equilibria(&g)
        .equilibria
        .iter()
        .filter(|e| e.is_pure())
        .map(|e| ("classical_nash".to_string(), e.payoffs))
        .collect();
    if let Ok(b) = behavior_of_quantum(&fair_strategy::<f64>()) {
        markers.push(("quantum_fair".to_string(), expected_payoffs(&g, &b)));
    }
    markers.push((
        "non_signaling_fair".to_string(),
        expected_payoffs(&g, &pr_box_behavior()),
    ));

    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let create = |name: &str| -> Result<BufWriter<File>> {
        let p = a.out.join(name);
        Ok(BufWriter::new(
            File::create(&p).with_context(|| format!("creating {}", p.display()))?,
        ))
    };
    io::write_points_csv(create("classical_hull.csv")?, &hull)?;
    io::write_region_samples_csv(create("seesaw_scatter.csv")?, &samples)?;
    io::write_boundary_csv(create("npa_halfplanes.csv")?, &planes)?;
    io::write_markers_csv(create("markers.csv")?, &markers)?;

    let slack = 1e-6;
    let outside = samples
        .iter()
        .filter(|s| planes.iter().any(|h| !h.contains(&s.payoffs, slack)))
        .count();
    let sandwich_failures = samples
        .iter()
        .zip(&planes)
        .filter(|(s, h)| {
            let (c, _) = max_weighted_classical(&g, s.w_a, s.w_b);
            c > s.objective + slack || s.objective > h.bound + slack
        })
        .count();
    let best = samples
        .iter()
        .max_by(|x, y| x.payoffs.joint().total_cmp(&y.payoffs.joint()))
        .expect("grid is nonempty");

    let mut text = String::new();
    writeln!(text, "wrote {}", a.out.display())?;
    writeln!(text, "  classical_hull.csv  {} vertices", hull.len())?;
    writeln!(
        text,
        "  seesaw_scatter.csv  {} points ({} restarts each)",
        samples.len(),
        a.restarts
    )?;
    writeln!(
        text,
        "  npa_halfplanes.csv  {} half-planes at level {level}",
        planes.len()
    )?;
    writeln!(text, "  markers.csv         {} markers", markers.len())?;
    writeln!(
        text,
        "largest see-saw joint payoff {:.12} at ({:.12}, {:.12})",
        best.payoffs.joint(),
        best.payoffs.alice,
        best.payoffs.bob
    )?;
    writeln!(
        text,
        "points outside some half-plane: {outside}; sandwich failures: {sandwich_failures}"
    )?;

    let json = json!({
        "out": a.out.display().to_string(),
        "grid": a.grid,
        "restarts": a.restarts,
        "seed": a.seed,
        "level": level.to_string(),
        "hull": hull.iter().map(pair).collect::<Vec<_>>(),
        "samples": samples.iter().map(|s| json!({
            "weights": [s.w_a, s.w_b], "payoffs": pair(&s.payoffs),
            "objective": s.objective, "converged": s.converged,
        })).collect::<Vec<_>>(),
        "half_planes": planes.iter().map(|h| json!({
            "weights": [h.w_a, h.w_b], "bound": h.bound, "gap": h.gap,
        })).collect::<Vec<_>>(),
        "markers": markers.iter().map(|(l, p)| json!({ "label": l, "payoffs": pair(p) })).collect::<Vec<_>>(),
        "max_joint": best.payoffs.joint(),
        "points_outside": outside,
        "sandwich_failures": sandwich_failures,
    });
    Ok(Output { json, text })
}

fn noise_model(spec: &[String]) -> Result<NoiseModel> {
    let kind: NoiseKind = spec[0].parse().map_err(UsageError)?;
    match (kind, spec.get(1)) {
        (NoiseKind::Werner, None) => Ok(NoiseModel::Werner),
        (NoiseKind::Colored, None) => Ok(NoiseModel::Colored),
        (NoiseKind::Custom, Some(path)) => {
            let p = Path::new(path);
            Ok(NoiseModel::Custom(
                io::load_state(p).with_context(|| format!("reading noise state {}", p.display()))?,
            ))
        }
        (NoiseKind::Custom, None) => Err(UsageError("--noise custom needs a state file".into()).into()),
        (_, Some(extra)) => Err(UsageError(format!("unexpected argument `{extra}` after --noise {kind}")).into()),
    }
}

fn payoff_json(p: &PayoffEstimate) -> Value {
    json!({
        "payoffs": pair(&p.payoffs),
        "half_widths": pair(&p.half_widths),
        "std_errors": pair(&p.std_errors),
        "joint": p.joint,
        "joint_std_error": p.joint_std_error,
        "sigmas_above_classical": p.sigmas_above(CLASSICAL_BOUND),
        "chsh": p.chsh,
        "win_probability": p.win_probability,
    })
}

pub fn experiment(a: &ExperimentArgs) -> Result<Output> {
    let g = game_or_standard(&a.game)?;
    let noise = noise_model(&a.noise)?;
    let template = SourceModel::new(noise.clone(), 1.0, a.accidentals)?;
    let visibility = match (a.visibility, a.fidelity, a.chsh) {
        (Some(v), _, _) => v,
        (_, Some(f), _) => visibility_from_fidelity(f, &noise)?,
        (_, _, Some(s)) => visibility_for_chsh(s, &template)?,
        _ => 1.0,
    };
    let model = SourceModel::new(noise, visibility, a.accidentals)?;
    let tally = simulate_runs(&model, a.runs, a.seed)?;
    if let Some(path) = &a.tally {
        io::write_tally_csv(BufWriter::new(File::create(path)?), &tally)?;
    }
    let corrected = a.accidentals > 0.0 && !a.no_correction;
    let est = if corrected {
        estimate_corrected(&accidental_correction(&tally, a.accidentals)?)?
    } else {
        estimate_behavior(&tally)?
    };
    let measured = estimated_payoffs(&est, &g);
    let debiased = debiased_payoffs(&est, &g);
    let expected = expected_payoffs(&g, &model.behavior()?);

    let mut text = String::new();
    writeln!(
        text,
        "{} source, visibility {:.6}, fidelity {:.6}, accidentals {}{}",
        model.noise.name(),
        model.visibility,
        model.fidelity(),
        a.accidentals,
        if corrected { " (corrected)" } else { "" }
    )?;
    writeln!(text, "{} runs, seed {}", tally.n_runs, a.seed)?;
    for (xa, xb) in est.low_count.iter() {
        writeln!(text, "warning: setting ({xa}, {xb}) has fewer than 100 events")?;
    }
    let line = |text: &mut String, label: &str, p: &PayoffEstimate| -> std::fmt::Result {
        writeln!(
            text,
            "{label}: F_A = {:.6} ± {:.6}, F_B = {:.6} ± {:.6}, F_A + F_B = {:.6} (σ {:.6}, {:.1}σ above 9/8)",
            p.payoffs.alice,
            p.half_widths.alice,
            p.payoffs.bob,
            p.half_widths.bob,
            p.joint,
            p.joint_std_error,
            p.sigmas_above(CLASSICAL_BOUND)
        )
    };
    line(&mut text, "measured", &measured)?;
    line(&mut text, "debiased", &debiased)?;
    writeln!(
        text,
        "CHSH S = {:.6}, win probability {:.6}",
        measured.chsh, measured.win_probability
    )?;
    writeln!(
        text,
        "model expectation: F_A = {:.6}, F_B = {:.6}, F_A + F_B = {:.6}",
        expected.alice,
        expected.bob,
        expected.joint()
    )?;
    if let Some(path) = &a.tally {
        writeln!(text, "tally written to {}", path.display())?;
    }

    let json = json!({
        "model": {
            "noise": model.noise.name(),
            "visibility": model.visibility,
            "fidelity": model.fidelity(),
            "accidental_rate": model.accidental_rate,
            "corrected": corrected,
            "alice_angles": model.alice_angles,
            "bob_angles": model.bob_angles,
        },
        "runs": tally.n_runs,
        "seed": a.seed,
        "totals": tally.totals(),
        "low_count_settings": est.low_count,
        "behavior": est.behavior.table(),
        "behavior_half_widths": est.half_widths,
        "measured": payoff_json(&measured),
        "debiased": payoff_json(&debiased),
        "expected": { "payoffs": pair(&expected), "joint": expected.joint(),
                      "chsh": chsh_value(&model.behavior()?) },
    });
    Ok(Output { json, text })
}

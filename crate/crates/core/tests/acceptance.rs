//! Acceptance checks. Runs as a plain binary so every criterion prints one
//! PASS/FAIL line even when an earlier one fails; the process exits
//! non-zero if any criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use iagf_core::config::SuiteSection;
use iagf_core::field::{active_force, passive_force, radial_length, FieldMode, FieldSpec, GuidanceGains, D2_MARGIN};
use iagf_core::guidance::{
    compute_guidance, fuse_homogeneous, intgf_d2, singf_d2, FieldLabel, FusionParams, IntGfConfig, SinGfConfig,
};
use iagf_core::impedance::{spring_energy, DesiredCommand, ImpedanceModel, ImpedanceParams, RobotState};
use iagf_core::inference::bayes_update;
use iagf_core::kinematics::{forward_kinematics, jacobian, manipulability, ArmGeometry, JointConfig};
use iagf_core::scenario::{
    episode_metrics, read_jsonl, run_episode, run_suite, write_jsonl, write_jsonl_to, Episode, Method,
    ScriptedOperator,
};
use iagf_core::{Config, Vec2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn unit(theta: f64) -> Vec2 {
    Vec2::new(theta.cos(), theta.sin())
}

fn rotate(v: Vec2, psi: f64) -> Vec2 {
    let (s, c) = psi.sin_cos();
    Vec2::new(c * v.x - s * v.y, s * v.x + c * v.y)
}

fn field_geometry() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_range = 0.0f64;
    let mut worst_extremum = 0.0f64;
    let mut worst_rotation = 0.0f64;
    for _ in 0..1000 {
        let mode = if rng.random_bool(0.5) { FieldMode::Passive } else { FieldMode::Active };
        let d1 = rng.random_range(0.05..5.0);
        let d2 = rng.random_range(0.0..d1);
        let spec = FieldSpec::new(mode, d1, d2, unit(rng.random_range(-PI..PI))).unwrap();
        let (lo, hi) = (spec.d_min(), spec.d_max());
        for _ in 0..32 {
            let u = unit(rng.random_range(-PI..PI));
            let d = radial_length(&spec, u).unwrap();
            worst_range = worst_range.max(lo - d).max(d - hi);
            let psi = rng.random_range(-PI..PI);
            let rotated = FieldSpec { v_r: rotate(spec.v_r, psi), ..spec };
            let d_rot = radial_length(&rotated, rotate(u, psi)).unwrap();
            worst_rotation = worst_rotation.max((d_rot - d).abs());
        }
        // passive fields are shortest along v_r, active fields longest
        let along = radial_length(&spec, spec.v_r).unwrap();
        let against = radial_length(&spec, -spec.v_r).unwrap();
        let (want_along, want_against) = match mode {
            FieldMode::Passive => (lo, hi),
            FieldMode::Active => (hi, lo),
        };
        worst_extremum = worst_extremum.max((along - want_along).abs()).max((against - want_against).abs());
    }
    let elapsed = start.elapsed();
    outcome(
        worst_range <= 1e-12 && worst_extremum <= 1e-12 && worst_rotation <= 1e-9 && elapsed < Duration::from_secs(1),
        format!(
            "1000 specs: range excess {worst_range:.1e}, extremum err {worst_extremum:.1e}, rotation err {worst_rotation:.1e} (tol 1e-9), {elapsed:.2?} (< 1 s)"
        ),
    )
}

fn passivity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let gains = GuidanceGains::default();
    let mut violations = 0;
    for _ in 0..10_000 {
        let d_h = rng.random_range(0.0..10.0);
        let v = Vec2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        if passive_force(d_h, v, &gains).dot(&v) > 0.0 {
            violations += 1;
        }
    }

    let mut worst_rise = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let p = ImpedanceParams::diagonal(
            rng.random_range(0.5..5.0),
            rng.random_range(0.0..400.0),
            rng.random_range(1.0..60.0),
        );
        let model = ImpedanceModel::new(p, ArmGeometry::default_2r()).unwrap();
        let q = JointConfig(vec![rng.random_range(-PI..PI), rng.random_range(0.3..2.8)]);
        let s = RobotState {
            x: forward_kinematics(&model.geometry, &q),
            v: Vec2::new(rng.random_range(-0.4..0.4), rng.random_range(-0.4..0.4)),
            q,
            t: 0.0,
        };
        let x_d = s.x + Vec2::new(rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1));
        let next = model.step(&s, &DesiredCommand::at(x_d), Vec2::zeros(), 1e-3).unwrap();
        worst_rise = worst_rise.max(spring_energy(&next, x_d, &p) - spring_energy(&s, x_d, &p));
    }
    outcome(
        violations == 0 && worst_rise <= 1e-9,
        format!("10000 damping samples with f·v > 0: {violations}; worst energy rise over 1000 states {worst_rise:.1e} (tol 1e-9)"),
    )
}

fn manipulability_oracle() -> Outcome {
    let (l1, l2) = (0.4, 0.4);
    let geom = ArmGeometry::new(vec![l1, l2], Vec2::zeros()).unwrap();
    let mut worst_m = 0.0f64;
    for i in 0..100 {
        for j in 0..100 {
            let q1 = -PI + 2.0 * PI * i as f64 / 99.0;
            let q2 = -PI + 2.0 * PI * j as f64 / 99.0;
            let m = manipulability(&geom, &JointConfig(vec![q1, q2]));
            worst_m = worst_m.max((m - l1 * l2 * q2.sin().abs()).abs());
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let h = 1e-6;
    let mut worst_j = 0.0f64;
    for links in [vec![0.4, 0.4], vec![0.5, 0.3, 0.2]] {
        let geom = ArmGeometry::new(links, Vec2::new(0.1, -0.2)).unwrap();
        for _ in 0..100 {
            let q: Vec<f64> = (0..geom.n_links()).map(|_| rng.random_range(-PI..PI)).collect();
            let j = jacobian(&geom, &JointConfig(q.clone()));
            for k in 0..q.len() {
                let (mut plus, mut minus) = (q.clone(), q.clone());
                plus[k] += h;
                minus[k] -= h;
                let fd = (forward_kinematics(&geom, &JointConfig(plus)) - forward_kinematics(&geom, &JointConfig(minus)))
                    / (2.0 * h);
                worst_j = worst_j.max((j.column(k) - fd).amax());
            }
        }
    }
    outcome(
        worst_m <= 1e-9 && worst_j <= 1e-6,
        format!("100x100 grid vs l1*l2*|sin q2|: {worst_m:.1e} (tol 1e-9); Jacobian vs central differences: {worst_j:.1e} (tol 1e-6)"),
    )
}

fn clamp_literal(d2: f64, d1: f64) -> f64 {
    d2.max(0.0).min((1.0 - D2_MARGIN) * d1)
}

fn intgf_literal(c: f64, c_th: f64, d1: f64) -> f64 {
    let raw = if c < c_th { d1 / c_th * c } else { d1 * (c - c_th) / (1.0 - c_th) };
    clamp_literal(raw, d1)
}

fn singf_literal(m: f64, m_th: f64, m_crit: f64, d1: f64) -> f64 {
    let raw = if m > m_th {
        0.0
    } else if m >= m_crit {
        d1 * (m_th - m) / (m_th - m_crit)
    } else {
        d1 * (m_crit - m) / m_crit
    };
    clamp_literal(raw, d1)
}

fn non_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] >= w[0])
}

fn schedules() -> Outcome {
    let int = IntGfConfig::default();
    let sing = SinGfConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    let mut cs: Vec<f64> = (0..1000).map(|_| rng.random_range(0.0..=1.0)).collect();
    let mut ms: Vec<f64> = (0..1000).map(|_| rng.random_range(0.0..0.16)).collect();
    for &c in &cs {
        worst = worst.max((intgf_d2(c, &int) - intgf_literal(c, int.c_th, int.d1)).abs());
    }
    for &m in &ms {
        worst = worst.max((singf_d2(m, &sing) - singf_literal(m, sing.m_th, sing.m_crit, sing.d1)).abs());
    }
    let boundaries = intgf_d2(int.c_th, &int) == 0.0 && singf_d2(sing.m_th, &sing) == 0.0;

    cs.sort_by(f64::total_cmp);
    ms.sort_by(f64::total_cmp);
    let branch = |xs: &[f64], pred: &dyn Fn(f64) -> bool, f: &dyn Fn(f64) -> f64| -> Vec<f64> {
        xs.iter().copied().filter(|x| pred(*x)).map(f).collect()
    };
    let fi = |c| intgf_d2(c, &int);
    let fs = |m| -singf_d2(m, &sing);
    let monotone = non_decreasing(&branch(&cs, &|c| c < int.c_th, &fi))
        && non_decreasing(&branch(&cs, &|c| c >= int.c_th, &fi))
        && non_decreasing(&branch(&ms, &|m| m < sing.m_crit, &fs))
        && non_decreasing(&branch(&ms, &|m| m >= sing.m_crit && m <= sing.m_th, &fs))
        && branch(&ms, &|m| m > sing.m_th, &fs).iter().all(|d| *d == 0.0);
    outcome(
        worst <= 1e-12 && boundaries && monotone,
        format!("2x1000 points vs piecewise forms: {worst:.1e} (tol 1e-12); zero at C_th and m_th: {boundaries}; branch-wise monotone: {monotone}"),
    )
}

fn fusion() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut ok = true;
    for _ in 0..10_000 {
        let a = rng.random_range(0.0..5.0);
        let b = rng.random_range(0.0..5.0);
        let alpha = rng.random_range(1.0..64.0);
        let f = fuse_homogeneous(a, b, alpha);
        let bump = rng.random_range(0.0..1.0);
        ok &= f >= a.max(b) && f == fuse_homogeneous(b, a, alpha) && fuse_homogeneous(a + bump, b, alpha) >= f;
    }
    let limit = fuse_homogeneous(2.0, 1.0, 64.0);
    let limit_ok = (limit - 2.0) / 2.0 <= 0.02;

    let params = FusionParams::default();
    let mut hetero_ok = true;
    for _ in 0..1000 {
        let state = RobotState {
            x: Vec2::new(rng.random_range(-0.5..0.5), rng.random_range(0.1..0.7)),
            v: Vec2::new(rng.random_range(-0.4..0.4), rng.random_range(-0.4..0.4)),
            q: JointConfig(vec![0.3, 1.0]),
            t: 0.0,
        };
        let x_d = state.x + Vec2::new(rng.random_range(-0.01..0.01), rng.random_range(-0.01..0.01));
        let v_h = unit(rng.random_range(-PI..PI));
        let damping = FieldSpec::new(FieldMode::Passive, 2.0, rng.random_range(0.0..2.0), unit(rng.random_range(-PI..PI))).unwrap();
        let stiffness = FieldSpec::new(FieldMode::Active, 2.0, rng.random_range(0.0..2.0), unit(rng.random_range(-PI..PI))).unwrap();
        let expected = active_force(radial_length(&stiffness, v_h).unwrap(), x_d, state.x, &params.gains);
        for (int, sing) in [(damping, stiffness), (stiffness, damping)] {
            let out = compute_guidance(Some(v_h), Some(int), Some(sing), &state, x_d, &params).unwrap();
            hetero_ok &= out.mode == Some(FieldMode::Active)
                && out.active_fields.iter().all(|f| matches!(f.label, FieldLabel::IntGfStiffness | FieldLabel::SinGfStiffness))
                && (out.f_c - expected).norm() <= 1e-12;
        }
    }
    outcome(
        ok && limit_ok && hetero_ok,
        format!("randomized >= max/symmetric/monotone: {ok}; alpha=64 (2,1) -> {limit:.5} (within 2%: {limit_ok}); mixed modes emit stiffness force only: {hetero_ok}"),
    )
}

fn inference() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_norm = 0.0f64;
    let mut worst_scale = 0.0f64;
    let mut argmax_ok = true;
    for _ in 0..1000 {
        let n = rng.random_range(2..6);
        let prior = bayes_update(&vec![1.0; n], &(0..n).map(|_| rng.random_range(0.01..1.0)).collect::<Vec<_>>(), 1e-4)
            .unwrap()
            .posterior;
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.3..3.0)).collect();
        let k = 10f64.powf(rng.random_range(-3.0..3.0));
        let a = bayes_update(&prior, &w, 1e-4).unwrap();
        let b = bayes_update(&prior, &w.iter().map(|x| x * k).collect::<Vec<_>>(), 1e-4).unwrap();
        worst_norm = worst_norm.max((a.posterior.iter().sum::<f64>() - 1.0).abs());
        for (x, y) in a.posterior.iter().zip(&b.posterior) {
            worst_scale = worst_scale.max((x - y).abs());
        }
        argmax_ok &= a.predicted == b.predicted;
    }

    let mut cfg = Config::default();
    cfg.operator.noise_deg = 0.0;
    let sc = cfg.scenario("s1").unwrap();
    let mut episode = Episode::new(&cfg, &sc, Method::Sa).unwrap();
    let mut op = ScriptedOperator::new(0, cfg.operator.gain, cfg.inference.step_max, 0.0);
    let mut lock_tick = None;
    for _ in 0..100 {
        let a_h = op.command(episode.sim().robot.x, episode.target_position());
        let rec = episode.step(a_h).unwrap();
        if rec.belief.confidence > cfg.intgf.c_th {
            lock_tick = Some(rec.tick);
            break;
        }
    }
    let pass = worst_norm <= 1e-12 && worst_scale <= 1e-12 && argmax_ok && lock_tick.is_some();
    outcome(
        pass,
        format!(
            "normalization err {worst_norm:.1e}, scaling err {worst_scale:.1e} (tol 1e-12), argmax stable: {argmax_ok}; noiseless lock-on C > C_th at tick {} (limit 100)",
            lock_tick.map_or("none".to_string(), |t| t.to_string())
        ),
    )
}

struct TrendChecks {
    completion: Outcome,
    disagreement: Outcome,
    singularity: Outcome,
    runtime: Outcome,
}

fn trends() -> TrendChecks {
    let cfg = Config::default();
    let start = Instant::now();
    let suite = SuiteSection {
        scenarios: ["s1", "s2", "s3", "edge"].map(String::from).to_vec(),
        methods: Method::ALL.to_vec(),
        seeds: (0..50).collect(),
    };
    let res = run_suite(&cfg, &suite);
    // the summary table has no per-episode minimum or field labels, so the
    // edge IAGF-SA cell is replayed for those
    let edge = cfg.scenario("edge").unwrap();
    let edge_runs: Vec<_> = (0..50).map(|seed| run_episode(&cfg, &edge, Method::Iagf, seed).unwrap()).collect();
    let elapsed = start.elapsed();

    let mean = |s: &str, m: Method, f: fn(&iagf_core::scenario::CellSummary) -> f64| f(res.cell(s, m).unwrap());
    let errors: usize = res.cells.iter().map(|c| c.errors).sum();

    let mut parts = Vec::new();
    let mut completion_ok = errors == 0;
    for s in ["s1", "s2", "s3"] {
        let (na, sa, ia) = (
            mean(s, Method::Na, |c| c.completion_time_mean),
            mean(s, Method::Sa, |c| c.completion_time_mean),
            mean(s, Method::Iagf, |c| c.completion_time_mean),
        );
        completion_ok &= ia < na;
        if s == "s1" {
            completion_ok &= ia <= sa;
        }
        parts.push(format!("{s} NA {na:.2} SA {sa:.2} IAGF-SA {ia:.2}"));
    }
    let completion = outcome(completion_ok, format!("mean completion time (s): {}", parts.join("; ")));

    let mut parts = Vec::new();
    let mut disagreement_ok = true;
    for s in ["s2", "s3"] {
        let sa = mean(s, Method::Sa, |c| c.disagreement_mean);
        let ia = mean(s, Method::Iagf, |c| c.disagreement_mean);
        disagreement_ok &= ia < sa;
        parts.push(format!("{s} SA {sa:.4} IAGF-SA {ia:.4}"));
    }
    let disagreement = outcome(disagreement_ok, format!("mean disagreement: {}", parts.join("; ")));

    let m_crit = cfg.singf.m_crit;
    let na = mean("edge", Method::Na, |c| c.min_manipulability_mean);
    let sa = mean("edge", Method::Sa, |c| c.min_manipulability_mean);
    let ia = mean("edge", Method::Iagf, |c| c.min_manipulability_mean);
    let floor = edge_runs.iter().map(|r| r.metrics.min_manipulability).fold(f64::INFINITY, f64::min);
    let in_band = edge_runs.iter().filter(|r| r.log.iter().any(|t| t.m <= cfg.singf.m_th)).count();
    let engaged = edge_runs
        .iter()
        .filter(|r| r.log.iter().any(|t| t.fields.iter().any(|f| matches!(f.label, FieldLabel::SinGfDamping | FieldLabel::SinGfStiffness))))
        .count();
    let singularity = outcome(
        ia > na && ia > sa && engaged > 0 && floor >= 0.5 * m_crit,
        format!(
            "edge mean min manipulability NA {na:.4} SA {sa:.4} IAGF-SA {ia:.4}; m <= m_th reached in {in_band}/50 IAGF-SA episodes, SinGF force applied in {engaged}/50; lowest IAGF-SA value {floor:.4} (floor {:.4})",
            0.5 * m_crit
        ),
    );
    let runtime = outcome(
        elapsed < Duration::from_secs(180),
        format!("{} episodes in {elapsed:.2?} (< 180 s)", res.episodes.len() + edge_runs.len()),
    );
    TrendChecks { completion, disagreement, singularity, runtime }
}

fn determinism() -> Outcome {
    let cfg = Config::default();
    let dir = tempfile::tempdir().unwrap();
    let mut identical = true;
    let mut recompute = true;
    for name in ["s1", "s2", "s3"] {
        let sc = cfg.scenario(name).unwrap();
        let a = run_episode(&cfg, &sc, Method::Iagf, 42).unwrap();
        let b = run_episode(&cfg, &sc, Method::Iagf, 42).unwrap();
        let (mut ba, mut bb) = (Vec::new(), Vec::new());
        write_jsonl_to(&mut ba, &a.log).unwrap();
        write_jsonl_to(&mut bb, &b.log).unwrap();
        identical &= ba == bb;

        let path = dir.path().join(format!("{name}.jsonl"));
        write_jsonl(&path, &a.log).unwrap();
        let replayed = episode_metrics(&read_jsonl(&path).unwrap(), &iagf_core::scenario::MetricParams::from_config(&cfg)).unwrap();
        recompute &= replayed == a.metrics;
    }
    outcome(identical && recompute, format!("seed 42, IAGF-SA, s1-s3: byte-identical logs {identical}; metrics recomputed from logs match exactly {recompute}"))
}

fn main() {
    let mut failed = 0;
    let mut report = |name: &str, o: Outcome| {
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed += 1;
        }
    };
    report("field geometry", field_geometry());
    report("passivity", passivity());
    report("manipulability oracle", manipulability_oracle());
    report("schedules", schedules());
    report("fusion", fusion());
    report("inference", inference());
    let t = trends();
    report("trend (a) completion time", t.completion);
    report("trend (b) disagreement", t.disagreement);
    report("trend (c) near-singularity manipulability", t.singularity);
    report("trend suite runtime", t.runtime);
    report("determinism", determinism());
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

//! Acceptance criteria, one line each. Exits non-zero if any fails.

mod oracles;

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use fpcs_core::constants::ratio_within;
use fpcs_core::geometry::{enumerate_vertices, min_norm_point, PointSet, Polyhedron, MIN_NORM_TOL, VERTEX_TOL};
use fpcs_core::random::{random_point, random_small_system, rng_for};
use fpcs_core::suites::{claim1, critical};
use fpcs_core::{
    certify_kappa, compute_constants, integrate_unperturbed, linalg, sensitivity_sweep, CertifyParams,
    ConstantsOptions, PathSpec, PwlPotential, SweepConfig,
};
use rand::Rng;

const SEED: u64 = 20_181;
const KAPPA: f64 = 1921.0;

type Outcome = Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Duration,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let list = [
        Criterion { id: 1, name: "worked-example constants", limit: secs(1), run: c1_constants },
        Criterion { id: 2, name: "trajectory structure", limit: secs(30), run: c2_structure },
        Criterion { id: 3, name: "non-expansiveness", limit: secs(60), run: c3_nonexpansive },
        Criterion { id: 4, name: "Euler oracle", limit: secs(60), run: c4_euler },
        Criterion { id: 5, name: "certification", limit: secs(120), run: c5_certify },
        Criterion { id: 6, name: "field invariance", limit: secs(120), run: c6_field },
        Criterion { id: 7, name: "sublinear growth", limit: secs(180), run: c7_growth },
        Criterion { id: 8, name: "geometry oracles", limit: secs(30), run: c8_geometry },
        Criterion { id: 9, name: "critical points and basins", limit: secs(120), run: c9_critical },
        Criterion { id: 10, name: "decomposition", limit: secs(30), run: c10_claim1 },
    ];
    let mut failed = 0;
    for c in &list {
        let start = Instant::now();
        let outcome = (c.run)();
        let took = start.elapsed();
        let outcome = match outcome {
            Ok(d) if took > c.limit => Err(format!("{d}; took {took:.2?} > {:?}", c.limit)),
            other => other,
        };
        match outcome {
            Ok(d) => println!("criterion {:>2} PASS {}: {d} [{took:.2?}]", c.id, c.name),
            Err(d) => {
                failed += 1;
                println!("criterion {:>2} FAIL {}: {d} [{took:.2?}]", c.id, c.name);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", list.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn c1_constants() -> Outcome {
    let scenario = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/two_queues.json");
    let out = Command::new(env!("CARGO_BIN_EXE_fpcs-lab"))
        .args(["constants", scenario.to_str().unwrap(), "--gamma", "1"])
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || format!("exit {:?}", out.status.code()))?;
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    let want = [("M", 1), ("D_C", 0), ("sigma", 5), ("eta", 240), ("kappa", 1921)];
    for (k, w) in want {
        // as_i64 is None for floats, so this also checks integer formatting
        ensure(v[k].as_i64() == Some(w), || format!("{k} = {} (want {w})", v[k]))?;
    }
    Ok("M=1 D_C=0 sigma=5 eta=240 kappa=1921".into())
}

fn c2_structure() -> Outcome {
    let mut worst_segments = 0;
    for k in 0..600u64 {
        let mut rng = rng_for(SEED, k);
        let phi = random_small_system(&mut rng, 3, 6);
        let x0 = random_point(&mut rng, phi.dim, 3.0);
        let tr = integrate_unperturbed(&phi, &x0, 100.0).map_err(|e| format!("system {k}: {e}"))?;
        let limit = (1usize << phi.num_pieces()) - 1;
        let segs = tr.segment_count();
        worst_segments = worst_segments.max(segs);
        ensure(segs <= limit, || format!("system {k}: {segs} segments > {limit}"))?;
        let norms: Vec<f64> = tr.segment_drifts().iter().map(|d| linalg::norm(d)).collect();
        for w in norms.windows(2) {
            ensure(w[1] < w[0] - 1e-10, || format!("system {k}: drift norms {norms:?}"))?;
        }
    }
    Ok(format!("600 systems, at most {worst_segments} segments"))
}

fn c3_nonexpansive() -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    for k in 0..100u64 {
        let mut rng = rng_for(SEED + 1, k);
        let phi = random_small_system(&mut rng, 3, 6);
        let trs: Vec<_> = (0..20)
            .map(|_| integrate_unperturbed(&phi, &random_point(&mut rng, phi.dim, 3.0), 30.0))
            .collect::<Result<_, _>>()
            .map_err(|e| format!("system {k}: {e}"))?;
        let mut pairs = 0;
        'outer: for a in 0..trs.len() {
            for b in a + 1..trs.len() {
                if pairs == 100 {
                    break 'outer;
                }
                pairs += 1;
                let mut ts: Vec<f64> = trs[a].times().into_iter().chain(trs[b].times()).collect();
                ts.sort_by(|p, q| p.partial_cmp(q).unwrap());
                let d: Vec<f64> = ts.iter().map(|&t| oracles::dist(&trs[a].value_at(t), &trs[b].value_at(t))).collect();
                for w in d.windows(2) {
                    worst = worst.max(w[1] - w[0]);
                    ensure(w[1] <= w[0] + 1e-9, || format!("system {k}: distance grew {} -> {}", w[0], w[1]))?;
                }
            }
        }
    }
    Ok(format!("10000 pairs, max increase {worst:.1e}"))
}

fn c4_euler() -> Outcome {
    let mut worst = 0.0_f64;
    for k in 0..50u64 {
        let mut rng = rng_for(SEED + 2, k);
        let mut phi = random_small_system(&mut rng, 3, 6);
        if k % 2 == 1 {
            let lambda = random_point(&mut rng, phi.dim, 0.3);
            phi = phi.with_lambda(lambda).map_err(|e| e.to_string())?;
        }
        let x0 = random_point(&mut rng, phi.dim, 3.0);
        let horizon = rng.random_range(1.0..=10.0);
        let exact = integrate_unperturbed(&phi, &x0, horizon).map_err(|e| format!("instance {k}: {e}"))?;
        let gap = oracles::euler(&phi, &x0, horizon, 1e-5)
            .iter()
            .map(|(t, x)| oracles::dist(&exact.value_at(*t), x))
            .fold(0.0, f64::max);
        worst = worst.max(gap);
        ensure(gap <= 1e-3, || format!("instance {k}: sup difference {gap:e}"))?;
    }
    Ok(format!("50 instances, max sup difference {worst:.1e}"))
}

fn certify(phi: &PwlPotential) -> Outcome {
    let report = compute_constants(phi, &ConstantsOptions { gamma_override: Some(1.0), ..Default::default() })
        .map_err(|e| e.to_string())?;
    let mut with_kappa = report.clone();
    with_kappa.kappa = KAPPA;
    let params = CertifyParams { thetas: vec![0.01, 0.1, 1.0], seed: SEED, ..Default::default() };
    let out = certify_kappa(phi, &with_kappa, &params).map_err(|e| e.to_string())?;
    ensure(out.runs >= 200, || format!("only {} runs", out.runs))?;
    ensure(out.passed && ratio_within(out.max_ratio, KAPPA), || {
        format!("ratio {} exceeds {KAPPA} ({:?})", out.max_ratio, out.worst)
    })?;
    let soft = if out.max_ratio <= 6.5 {
        "soft check <= 6.5 holds".to_string()
    } else {
        format!("WARNING: max ratio above 6.5 ({:?})", out.worst)
    };
    Ok(format!("{} runs, max ratio {:.4}; {soft}", out.runs, out.max_ratio))
}

fn c5_certify() -> Outcome {
    certify(&oracles::two_queues(None))
}

fn c6_field() -> Outcome {
    certify(&oracles::two_queues(Some(vec![0.3, 0.3])))
}

fn c7_growth() -> Outcome {
    let phi = oracles::two_queues(None);
    let mut medians = Vec::new();
    for t in [100usize, 1_000, 10_000] {
        let cfg = SweepConfig {
            path: PathSpec::BernoulliSteps { amplitude: 1.0, count: t },
            runs: 20,
            horizon: t as f64,
            seed: SEED,
            checkpoints: 2,
        };
        let s = sensitivity_sweep(&phi, &[0.0, 0.0], &cfg).map_err(|e| e.to_string())?;
        let mut devs: Vec<f64> = s.per_run.iter().map(|r| r.sup_deviation).collect();
        devs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        medians.push((t as f64, (devs[9] + devs[10]) / 2.0));
    }
    let (t_big, m_big) = medians[2];
    ensure(m_big < 0.05 * t_big, || format!("median {m_big} >= 5% of {t_big}"))?;
    for w in medians.windows(2) {
        ensure(w[1].1 / w[1].0 < w[0].1 / w[0].0, || format!("sup_dev/T not decreasing: {medians:?}"))?;
    }
    let (t_small, m_small) = medians[0];
    let factor = 10.0 * (t_big / t_small).sqrt() * (t_big.ln() / t_small.ln());
    ensure(m_big / m_small < factor, || format!("growth factor {} >= {factor}", m_big / m_small))?;
    let curve: Vec<String> = medians.iter().map(|(t, m)| format!("T={t}: {m:.2}")).collect();
    Ok(format!("median sup deviation {}", curve.join(", ")))
}

fn c8_geometry() -> Outcome {
    let mut worst = 0.0_f64;
    for k in 0..100u64 {
        let mut rng = rng_for(SEED + 3, k);
        let n = rng.random_range(1..=3);
        let count = rng.random_range(1..=4);
        let pts: Vec<Vec<f64>> = (0..count).map(|_| random_point(&mut rng, n, 2.0)).collect();
        let set = PointSet::new(n, pts.clone()).map_err(|e| e.to_string())?;
        let v = min_norm_point(&set, MIN_NORM_TOL).map_err(|e| format!("hull {k}: {e}"))?.point;
        let g = oracles::grid_min_norm(&pts);
        let d = oracles::dist(&v, &g);
        worst = worst.max(d);
        ensure(d <= 1e-6, || format!("hull {k}: {v:?} vs grid {g:?}"))?;
    }
    let mut total = 0;
    for k in 0..50u64 {
        let mut rng = rng_for(SEED + 4, k);
        let n = rng.random_range(1..=3);
        let mut normals = Vec::new();
        let mut offsets = Vec::new();
        for i in 0..n {
            for s in [1.0, -1.0] {
                let mut e = vec![0.0; n];
                e[i] = s;
                normals.push(e);
                offsets.push(3.0);
            }
        }
        for _ in 0..rng.random_range(1..=6) {
            normals.push((0..n).map(|_| rng.random_range(-3..=3) as f64).collect());
            offsets.push(rng.random_range(0..=3) as f64);
        }
        let poly = Polyhedron::new(n, normals.clone(), offsets.clone()).map_err(|e| e.to_string())?;
        let got = enumerate_vertices(&poly, VERTEX_TOL).points;
        let want = oracles::brute_vertices(&normals, &offsets);
        ensure(got.len() == want.len(), || format!("polytope {k}: {} vertices, brute force {}", got.len(), want.len()))?;
        for v in &got {
            ensure(want.iter().any(|w| oracles::dist(v, w) <= 1e-9), || format!("polytope {k}: stray vertex {v:?}"))?;
        }
        total += got.len();
    }
    Ok(format!("min-norm max gap {worst:.1e} over 100 hulls; {total} vertices on 50 polytopes match"))
}

fn c9_critical() -> Outcome {
    let r = critical(SEED, 100);
    ensure(r.passed, || format!("{:?}", r.failures))?;
    Ok(format!("{} checks on 100 systems and the example", r.cases))
}

fn c10_claim1() -> Outcome {
    let r = claim1(SEED, 50, 20);
    ensure(r.passed, || format!("{:?}", r.failures))?;
    let res = r.metrics.get("max_residual").copied().unwrap_or(0.0);
    ensure(res <= 1e-9, || format!("residual {res:e}"))?;
    Ok(format!("{} samples, max residual {res:.1e}", r.cases))
}

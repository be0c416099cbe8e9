//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines are always printed. The
//! process exits non-zero if any criterion fails or overruns its time limit.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng as _;

use likesense::eval::{compute_regression_metrics, evaluate};
use likesense::experiments::{
    generate_synthetic, run_comparison, run_threshold_sweep, trend_slope, ExperimentFeatures, SweepMode, SyntheticSpec,
};
use likesense::features::{build_feature_space, build_matrix, FeatureMatrix, FeatureMode, Taxonomy};
use likesense::models::{
    fit, fit_boosted_trees, knn_distance, load_model, mlp::param_count, save_model, Algorithm, AlgorithmConfig,
    BoostConfig, ForestConfig, KnnConfig, KnnModel, MlpConfig, MlpModel, ModelBundle,
};
use likesense::rng::seeded;
use likesense::sampling::{random_indices, round_count, split, stratified_indices, SplitMethod, SplitSpec};
use likesense::types::clamp_score;
use likesense::{Dataset, Trait};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn lib<T>(r: likesense::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn relative_matrix(d: &Dataset) -> Result<FeatureMatrix, String> {
    let space = lib(build_feature_space(d))?;
    lib(build_matrix(d, &space, 1, FeatureMode::Relative))
}

fn random_simplex(r: &mut likesense::rng::Rng, dim: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..dim).map(|_| if r.random_bool(0.4) { 0.0 } else { r.random::<f64>() }).collect();
    if v.iter().all(|&x| x == 0.0) {
        v[r.random_range(0..dim)] = 1.0;
    }
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

fn c01_metric_oracle() -> Check {
    let mut r = seeded(0x0101);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = r.random_range(1..=200);
        let p: Vec<f64> = (0..n).map(|_| r.random_range(-10.0..10.0)).collect();
        let a: Vec<f64> = (0..n).map(|_| r.random_range(-10.0..10.0)).collect();
        let m = lib(compute_regression_metrics(&p, &a))?;
        let mut total = 0.0;
        for i in 0..n {
            total += (p[i] - a[i]).powi(2);
        }
        let mse = total / n as f64;
        worst = worst.max((m.mse - mse).abs()).max((m.rmse - mse.sqrt()).abs());
    }
    ensure(worst <= 1e-12, || format!("max deviation {worst:e} > 1e-12"))?;
    Ok(format!("1000 pairs, max |deviation| = {worst:e}"))
}

fn c02_exact_recovery() -> Check {
    let data = lib(generate_synthetic(&SyntheticSpec {
        n_users: 5000,
        n_categories: 20,
        noise_sigma: 0.0,
        seed: 2,
        ..Default::default()
    }))?;
    let matrix = relative_matrix(&data.dataset)?;
    ensure(matrix.space.paths() == data.truth.categories.as_slice(), || {
        "feature space differs from planted categories".into()
    })?;
    let (train, test) = lib(split(&matrix, &SplitSpec { seed: 2, ..Default::default() }))?;
    let (mut worst_rmse, mut worst_pred) = (0.0f64, 0.0f64);
    for t in Trait::ALL {
        let model = lib(fit(&train, t, &AlgorithmConfig::Linear, Taxonomy::Both))?;
        worst_rmse = worst_rmse.max(lib(evaluate(&model, &test))?.rmse);
        for x in test.features() {
            worst_pred = worst_pred.max((model.model.predict_raw(x) - data.truth.model(t).raw(x)).abs());
        }
    }
    ensure(worst_rmse < 1e-6, || format!("test RMSE {worst_rmse:e} >= 1e-6"))?;
    ensure(worst_pred < 1e-6, || format!("prediction gap to planted model {worst_pred:e} >= 1e-6"))?;
    Ok(format!("max test RMSE {worst_rmse:.2e}, max |fitted - planted| {worst_pred:.2e} over 5 traits"))
}

fn c03_noise_floor() -> Check {
    let data = lib(generate_synthetic(&SyntheticSpec {
        n_users: 5000,
        n_categories: 20,
        noise_sigma: 0.2,
        seed: 2,
        ..Default::default()
    }))?;
    let matrix = relative_matrix(&data.dataset)?;
    let (train, test) = lib(split(&matrix, &SplitSpec { seed: 2, ..Default::default() }))?;
    let boost = AlgorithmConfig::BoostedTrees(BoostConfig::default());
    let mut lines = Vec::new();
    for t in Trait::ALL {
        let floor = data.truth.oracle_rmse[&t];
        for (cfg, lo, hi) in [(AlgorithmConfig::Linear, 0.95, 1.3), (boost, 0.95, 1.6)] {
            let rmse = lib(evaluate(&lib(fit(&train, t, &cfg, Taxonomy::Both))?, &test))?.rmse;
            let ratio = rmse / floor;
            ensure((lo..=hi).contains(&ratio), || {
                format!("{t} {}: RMSE {rmse:.4} / floor {floor:.4} = {ratio:.3} outside [{lo}, {hi}]", cfg.algorithm())
            })?;
            lines.push(format!("{t}/{}={ratio:.3}", cfg.algorithm()));
        }
    }
    Ok(format!("RMSE/floor: {}", lines.join(" ")))
}

fn c04_boosting_monotone() -> Check {
    let mut violations = 0;
    let mut rounds = Vec::new();
    for seed in [41, 42, 43] {
        let data = lib(generate_synthetic(&SyntheticSpec {
            n_users: 600,
            n_categories: 12,
            noise_sigma: 0.3,
            seed,
            ..Default::default()
        }))?;
        let m = relative_matrix(&data.dataset)?;
        let rows: Vec<&[f64]> = m.features().collect();
        let cfg = BoostConfig { n_rounds: 100, learning_rate: 0.1, ..Default::default() };
        for t in Trait::ALL {
            let fit = lib(fit_boosted_trees(&rows, &m.targets(t), m.dim(), &cfg))?;
            violations += fit.train_mse.windows(2).filter(|w| w[1] > w[0]).count();
            rounds.push(fit.train_mse.len() - 1);
        }
    }
    ensure(violations == 0, || format!("{violations} increases of training MSE"))?;
    Ok(format!(
        "3 datasets x 5 traits, rounds per fit {}..{}, 0 violations",
        rounds.iter().min().unwrap(),
        rounds.iter().max().unwrap()
    ))
}

fn c05_gradient_check() -> Check {
    let (dim, width, n, h) = (6, 7, 30, 1e-5);
    let mut r = seeded(0x0505);
    let rows: Vec<Vec<f64>> = (0..n).map(|_| random_simplex(&mut r, dim)).collect();
    let y: Vec<f64> = (0..n).map(|_| r.random_range(1.0..5.0)).collect();
    let refs: Vec<&[f64]> = rows.iter().map(|v| v.as_slice()).collect();
    let offset: Vec<f64> = (0..dim).map(|f| rows.iter().map(|v| v[f]).sum::<f64>() / n as f64).collect();
    let scale: Vec<f64> = (0..dim).map(|_| r.random_range(0.1..0.5)).collect();
    let mut worst = 0.0f64;
    for point in 0..10 {
        let mut m = MlpModel::init(dim, width, offset.clone(), scale.clone(), 3.0, point);
        m.params = (0..param_count(dim, width)).map(|_| r.random_range(-1.5..1.5)).collect();
        let (_, grad) = m.loss_and_gradient(&refs, &y);
        for (j, &g) in grad.iter().enumerate() {
            let base = m.params[j];
            m.params[j] = base + h;
            let up = m.loss(&refs, &y);
            m.params[j] = base - h;
            let down = m.loss(&refs, &y);
            m.params[j] = base;
            let numeric = (up - down) / (2.0 * h);
            let denom = g.abs().max(numeric.abs()).max(1e-8);
            worst = worst.max((g - numeric).abs() / denom);
        }
    }
    ensure(worst < 1e-4, || format!("max relative error {worst:e} >= 1e-4"))?;
    Ok(format!("10 points x {} params, max relative error {worst:.2e}", param_count(dim, width)))
}

fn c06_normalization_benefit() -> Check {
    let pref: Vec<f64> = (1..=10).map(|k| k as f64).collect();
    let data = lib(generate_synthetic(&SyntheticSpec {
        n_users: 3000,
        n_categories: 10,
        likes_min: 50,
        likes_max: 500,
        fixed_preference: Some(pref),
        noise_sigma: 0.05,
        seed: 6,
        ..Default::default()
    }))?;
    let run = |mode| {
        let f = ExperimentFeatures { mode, ..Default::default() };
        lib(run_comparison(
            &data.dataset,
            &[AlgorithmConfig::Linear],
            &SplitSpec { seed: 6, ..Default::default() },
            &f,
            &Trait::ALL,
        ))
    };
    let (rel, abs) = (run(FeatureMode::Relative)?, run(FeatureMode::Absolute)?);
    let mut lines = Vec::new();
    for (a, b) in rel.iter().zip(&abs) {
        ensure(a.rmse < b.rmse, || format!("{}: relative {:.4} not below absolute {:.4}", a.target, a.rmse, b.rmse))?;
        lines.push(format!("{}:{:.4}<{:.4}", a.target, a.rmse, b.rmse));
    }
    Ok(format!("relative<absolute RMSE {}", lines.join(" ")))
}

fn c07_clipping() -> Check {
    ensure(clamp_score(5.3) == 5.0 && clamp_score(0.2) == 1.0, || "clamp(5.3)/clamp(0.2) not exactly 5/1".into())?;
    let data = lib(generate_synthetic(&SyntheticSpec {
        n_users: 400,
        n_categories: 8,
        noise_sigma: 0.3,
        seed: 7,
        ..Default::default()
    }))?;
    let m = relative_matrix(&data.dataset)?;
    let configs = [
        AlgorithmConfig::Linear,
        AlgorithmConfig::BoostedTrees(BoostConfig::default()),
        AlgorithmConfig::Knn(KnnConfig::default()),
        AlgorithmConfig::Mlp(MlpConfig { epochs: 30, ..Default::default() }),
    ];
    let mut r = seeded(0x0707);
    let (mut total, mut raw_outside) = (0usize, 0usize);
    for cfg in configs {
        let model = lib(fit(&m, Trait::Ext, &cfg, Taxonomy::Both))?;
        for i in 0..2500 {
            // alternate on-simplex inputs with far extrapolations
            let x: Vec<f64> = if i % 2 == 0 {
                random_simplex(&mut r, m.dim())
            } else {
                (0..m.dim()).map(|_| r.random_range(-20.0..20.0)).collect()
            };
            let raw = model.model.predict_raw(&x);
            let y = lib(model.predict_slice(&x))?;
            ensure((1.0..=5.0).contains(&y), || format!("{} output {y} outside [1, 5]", cfg.algorithm()))?;
            raw_outside += usize::from(!(1.0..=5.0).contains(&raw));
            total += 1;
        }
    }
    ensure(raw_outside > 0, || "no raw output left [1, 5]; clamp never exercised".into())?;
    Ok(format!("{total} predictions in [1, 5] ({raw_outside} clamped), clamp(5.3)=5, clamp(0.2)=1"))
}

fn bucket_oracle(score: f64, n_buckets: usize) -> usize {
    let mut b = 0;
    for k in 1..n_buckets {
        if score >= 1.0 + 4.0 * k as f64 / n_buckets as f64 {
            b = k;
        }
    }
    b
}

fn check_partition(n: usize, train: &[usize], test: &[usize]) -> Result<(), String> {
    let mut seen = vec![0u8; n];
    for &i in train.iter().chain(test) {
        ensure(i < n, || format!("index {i} out of range {n}"))?;
        seen[i] += 1;
    }
    ensure(seen.iter().all(|&c| c == 1), || "split is not a disjoint cover".into())
}

fn c08_split_invariants() -> Check {
    let mut r = seeded(0x0808);
    for instance in 0..100 {
        let n = r.random_range(2..400);
        let f = if instance % 2 == 0 { 0.2 } else { r.random_range(0.05..0.5) };
        let seed = r.random::<u64>();
        let n_buckets = r.random_range(1..=10);
        let scores: Vec<f64> = (0..n)
            .map(|_| match r.random_range(0..10) {
                0 => 1.0,
                1 => 5.0,
                _ => r.random_range(1.0..=5.0),
            })
            .collect();

        let a = lib(random_indices(n, f, seed))?;
        check_partition(n, &a.train, &a.test)?;
        ensure(a.test.len() == round_count(n as f64 * f), || format!("random test size {} for n={n}", a.test.len()))?;
        ensure(a == lib(random_indices(n, f, seed))?, || "random split not deterministic".into())?;

        let spec =
            SplitSpec { test_fraction: f, method: SplitMethod::Stratified, n_buckets, seed, ..Default::default() };
        let s = lib(stratified_indices(&scores, &spec))?;
        check_partition(n, &s.train, &s.test)?;
        ensure(s == lib(stratified_indices(&scores, &spec))?, || "stratified split not deterministic".into())?;
        for b in 0..n_buckets {
            let size = scores.iter().filter(|&&x| bucket_oracle(x, n_buckets) == b).count();
            let in_test = s.test.iter().filter(|&&i| bucket_oracle(scores[i], n_buckets) == b).count();
            let expected = (size as f64 * f).round_ties_even() as usize;
            ensure(in_test == expected, || {
                format!("instance {instance}: bucket {b} has {in_test} test rows, expected {expected}")
            })?;
        }
    }
    Ok("100 instances: partition, disjointness, determinism, per-bucket counts".into())
}

fn c09_sweep_shape() -> Check {
    let data = lib(generate_synthetic(&SyntheticSpec {
        n_users: 6000,
        n_categories: 12,
        noise_sigma: 0.6,
        noise_volume_exponent: 0.5,
        seed: 9,
        ..Default::default()
    }))?;
    let thresholds = [10, 25, 50, 100, 150, 200];
    let split = SplitSpec { seed: 9, ..Default::default() };
    let features = ExperimentFeatures::default();
    let algs = [AlgorithmConfig::Linear];
    let fixed = lib(run_threshold_sweep(
        &data.dataset,
        &thresholds,
        SweepMode::FixedTrain { size: 800 },
        &algs,
        &split,
        &features,
        &Trait::ALL,
    ))?;
    let max = lib(run_threshold_sweep(
        &data.dataset,
        &thresholds,
        SweepMode::MaxTrain,
        &algs,
        &split,
        &features,
        &Trait::ALL,
    ))?;
    let mut slopes = Vec::new();
    for t in Trait::ALL {
        let s = fixed.series(t, Algorithm::Linear);
        ensure(s.len() == thresholds.len(), || {
            format!("{t}: {} of {} fixed-train cells ran", s.len(), thresholds.len())
        })?;
        let x: Vec<f64> = s.iter().map(|r| r.threshold as f64).collect();
        let y: Vec<f64> = s.iter().map(|r| r.rmse.unwrap()).collect();
        let slope = trend_slope(&x, &y).ok_or("degenerate slope")?;
        ensure(slope <= 0.0, || format!("{t}: fixed-train RMSE slope {slope:e} > 0"))?;
        slopes.push(format!("{t}={slope:.2e}"));
        let n_train: Vec<usize> = max.series(t, Algorithm::Linear).iter().map(|r| r.n_train).collect();
        ensure(n_train.windows(2).all(|w| w[1] <= w[0]), || format!("{t}: max-train n_train {n_train:?} increases"))?;
    }
    Ok(format!("fixed-train slopes {}; max-train n_train non-increasing", slopes.join(" ")))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("likesense-acceptance-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).expect("temp dir");
    dir
}

fn likesense(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_likesense")).args(args).output().map_err(|e| e.to_string())?;
    ensure(out.status.success(), || format!("likesense {args:?} failed: {}", String::from_utf8_lossy(&out.stderr)))
}

fn pipeline(dir: &Path) -> Result<Vec<u8>, String> {
    let p = |s: &str| dir.join(s).to_string_lossy().into_owned();
    std::fs::write(dir.join("spec.json"), r#"{"n_users": 400, "n_categories": 10, "noise_sigma": 0.3}"#)
        .map_err(|e| e.to_string())?;
    likesense(&["generate", "--spec", &p("spec.json"), "--out", &p("data"), "--seed", "10"])?;
    likesense(&[
        "train",
        "--data",
        &p("data"),
        "--algorithm",
        "mlp",
        "--trait",
        "all",
        "--out",
        &p("model.json"),
        "--seed",
        "10",
    ])?;
    likesense(&["evaluate", "--model", &p("model.json"), "--data", &p("data"), "--out", &p("report.csv")])?;
    std::fs::read(dir.join("report.csv")).map_err(|e| e.to_string())
}

fn c10_end_to_end_determinism() -> Check {
    let (a, b) = (scratch("e2e-a"), scratch("e2e-b"));
    let (ra, rb) = (pipeline(&a)?, pipeline(&b)?);
    ensure(ra == rb, || "report CSVs differ".into())?;
    for f in ["model.json", "data/big5.csv", "data/user_likes.csv", "data/like_categories.csv"] {
        let same = std::fs::read(a.join(f)).ok() == std::fs::read(b.join(f)).ok();
        ensure(same, || format!("{f} differs between runs"))?;
    }
    let rows = String::from_utf8_lossy(&ra).lines().count() - 1;
    let _ = (std::fs::remove_dir_all(a), std::fs::remove_dir_all(b));
    Ok(format!("generate -> train -> evaluate twice: identical {rows}-row report"))
}

fn c11_serialization() -> Check {
    let data = lib(generate_synthetic(&SyntheticSpec {
        n_users: 300,
        n_categories: 7,
        noise_sigma: 0.3,
        seed: 11,
        ..Default::default()
    }))?;
    let m = relative_matrix(&data.dataset)?;
    let configs = [
        AlgorithmConfig::Linear,
        AlgorithmConfig::BoostedTrees(BoostConfig { n_rounds: 40, ..Default::default() }),
        AlgorithmConfig::Knn(KnnConfig::default()),
        AlgorithmConfig::Mlp(MlpConfig { epochs: 20, ..Default::default() }),
        AlgorithmConfig::Forest(ForestConfig { n_trees: 15, ..Default::default() }),
    ];
    let mut r = seeded(0x1111);
    let mut models = Vec::new();
    for cfg in configs {
        let model = lib(fit(&m, Trait::Neu, &cfg, Taxonomy::Both))?;
        let back = lib(load_model(&lib(save_model(&model))?))?;
        ensure(back == model, || format!("{} parameters changed", cfg.algorithm()))?;
        for _ in 0..100 {
            let x = random_simplex(&mut r, m.dim());
            let (p, q) = (lib(model.predict_slice(&x))?, lib(back.predict_slice(&x))?);
            ensure(p.to_bits() == q.to_bits(), || format!("{}: {p} != {q}", cfg.algorithm()))?;
        }
        models.push(model);
    }
    let bundle = ModelBundle { models };
    ensure(lib(ModelBundle::load(&lib(bundle.save())?))? == bundle, || "bundle round trip changed".into())?;
    Ok("5 model kinds x 100 inputs bit-identical after reload; bundle round trip identical".into())
}

fn c12_knn_contract() -> Check {
    let data = lib(generate_synthetic(&SyntheticSpec {
        n_users: 500,
        n_categories: 9,
        noise_sigma: 0.3,
        seed: 12,
        ..Default::default()
    }))?;
    let m = relative_matrix(&data.dataset)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut targets = Vec::new();
    for (x, s) in m.features().zip(m.targets(Trait::Ope)) {
        if !rows.iter().any(|r| r.as_slice() == x) {
            rows.push(x.to_vec());
            targets.push(s);
        }
    }
    let model = lib(KnnModel::new(1, 0.1, rows.clone(), targets.clone()))?;
    for (x, &t) in rows.iter().zip(&targets) {
        let p = model.predict_raw(x);
        ensure(p.to_bits() == t.to_bits(), || format!("k=1 self-prediction {p} != {t}"))?;
    }
    let mut r = seeded(0x1212);
    for _ in 0..1000 {
        let dim = r.random_range(1..=30);
        let a = random_simplex(&mut r, dim);
        let b = random_simplex(&mut r, dim);
        let penalty = r.random_range(0.0..2.0);
        let (ab, ba) = (lib(knn_distance(&a, &b, penalty))?, lib(knn_distance(&b, &a, penalty))?);
        ensure(ab.to_bits() == ba.to_bits(), || format!("d(a,b)={ab} != d(b,a)={ba}"))?;
        ensure(lib(knn_distance(&a, &a, penalty))? == 0.0, || "d(a,a) != 0".into())?;
    }
    Ok(format!("{} distinct rows self-predicted exactly; 1000 pairs symmetric with d(a,a)=0", rows.len()))
}

/// Name, time limit in seconds, check.
type Criterion = (&'static str, Option<u64>, fn() -> Check);

fn main() {
    let criteria: [Criterion; 12] = [
        ("metric oracle", Some(1), c01_metric_oracle),
        ("exact recovery", Some(10), c02_exact_recovery),
        ("noise floor", Some(60), c03_noise_floor),
        ("boosting monotonicity", None, c04_boosting_monotone),
        ("MLP gradient check", None, c05_gradient_check),
        ("normalization benefit", None, c06_normalization_benefit),
        ("clipping", None, c07_clipping),
        ("split invariants", None, c08_split_invariants),
        ("sweep shape", Some(120), c09_sweep_shape),
        ("end-to-end determinism", None, c10_end_to_end_determinism),
        ("serialization", None, c11_serialization),
        ("kNN contract", None, c12_knn_contract),
    ];
    let mut failed = 0;
    for (i, (name, limit, run)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = match (outcome, limit) {
            (Ok(_), Some(s)) if elapsed > Duration::from_secs(s) => Err(format!("took {elapsed:.2?}, limit {s} s")),
            (o, _) => o,
        };
        let budget = limit.map(|s| format!(", limit {s} s")).unwrap_or_default();
        match outcome {
            Ok(detail) => println!("PASS  {:>2}. {name} ({elapsed:.2?}{budget}): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL  {:>2}. {name} ({elapsed:.2?}{budget}): {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} of 12 criteria passed", 12 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

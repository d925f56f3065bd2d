//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

mod common;

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use archsearch::analysis::{feature_columns, DESVIO_N_NEURONIOS, N_CAMADAS, N_MED_NEURONIOS, N_NEURONIOS};
use archsearch::archspace::{count_total, enumerate, inflections, ArchFeatures, ArchSpec, SpaceBounds};
use archsearch::data::{build_dataset, synthesize, Dataset, DateRange};
use archsearch::mlp::TrainConfig;
use archsearch::stats::{binom_pmf, corr_matrix, ols, proportion_table, Characteristic, Design};
use archsearch::sweep::{self, SweepConfig};
use chrono::NaiveDate;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(got: f64, want: f64, tol: f64, what: &str) -> Result<(), String> {
    ensure((got - want).abs() <= tol, || {
        format!("{what} = {got}, want {want} ± {tol}")
    })
}

fn timed(limit: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let detail = f()?;
    let elapsed = start.elapsed();
    ensure(elapsed < limit, || {
        format!("{detail}; took {elapsed:.2?}, limit {limit:?}")
    })?;
    Ok(format!("{detail} ({elapsed:.2?})"))
}

fn population() -> Vec<ArchFeatures> {
    enumerate(SpaceBounds::default())
        .unwrap()
        .iter()
        .map(ArchSpec::features)
        .collect()
}

/// Population proportions of `c` using a one-element dummy sample.
fn population_props(pop: &[ArchFeatures], c: Characteristic) -> Vec<(u32, f64)> {
    proportion_table(&pop[..1], pop, c)
        .unwrap()
        .into_iter()
        .map(|r| (r.characteristic_value, r.pop_prop))
        .collect()
}

fn enumeration_count() -> Outcome {
    timed(Duration::from_secs(1), || {
        let bounds = SpaceBounds::new(6, 5).unwrap();
        let total = count_total(bounds).map_err(|e| e.to_string())?;
        ensure(total == 9330, || format!("count_total = {total}"))?;
        let listed = enumerate(bounds).unwrap().len();
        ensure(listed == 9330, || format!("enumerate yields {listed}"))?;
        Ok(format!("count_total(6, 5) = {total}"))
    })
}

fn layer_proportions() -> Outcome {
    let props = population_props(&population(), Characteristic::Layers);
    let want = [(1, 0.0006), (2, 0.0039), (3, 0.0232), (4, 0.1389), (5, 0.8334)];
    ensure(props.len() == 5, || format!("{} layer values", props.len()))?;
    for ((v, got), (wv, w)) in props.iter().zip(want) {
        ensure(*v == wv, || format!("value {v} vs {wv}"))?;
        within(*got, w, 5e-5, &format!("p(layers = {v})"))?;
    }
    Ok(format!("{props:.4?}"))
}

fn neuron_proportions() -> Outcome {
    timed(Duration::from_secs(1), || {
        let props = population_props(&population(), Characteristic::Neurons);
        let lookup = |n: u32| props.iter().find(|(v, _)| *v == n).map(|p| p.1).unwrap_or(f64::NAN);
        let mut shown = Vec::new();
        for (n, want) in [(11, 0.0362), (14, 0.0751), (17, 0.0951), (20, 0.0735)] {
            within(lookup(n), want, 2e-4, &format!("p(neurons = {n})"))?;
            shown.push(format!("{n}→{:.4}", lookup(n)));
        }
        Ok(shown.join(", "))
    })
}

#[rustfmt::skip]
const RANKED_LABELS: [(&str, u32); 40] = [
    ("3.5.5.4.1", 0), ("5.2.1.1.2", 0), ("1.1.2.3.5", 0), ("2.5.5.6.6", 0),
    ("3.3.4.6", 0), ("3.5.5.5.5", 0), ("1.1.3.6.6", 0), ("1.3.6.3.1", 1),
    ("6.3.4.4.4", 1), ("5.6.6.3.5", 1), ("6.4.4.1.6", 1), ("2.6.2.2.4", 1),
    ("1.5.6.5.4", 1), ("5.6.3.3.6", 1), ("5.5.2.4.4", 1), ("4.4.2.1.6", 1),
    ("3.4.1.1.2", 1), ("4.1.1.4.3", 1), ("4.2.4.5.6", 1), ("6.5.4.1.3", 1),
    ("6.4.2.1.3", 1), ("1.3.6.5.5", 1), ("4.4.1.5.2", 2), ("6.2.4.1.1", 2),
    ("5.3.6.3", 2), ("5.2.4.6.4", 2), ("1.4.2.3.5", 2), ("5.4.5.6.3", 2),
    ("1.1.5.4.6", 2), ("6.2.1.5.1", 2), ("1.2.6.2.4", 2), ("3.6.5.2.5", 2),
    ("1.6.3.2.3", 2), ("2.5.2.4.5", 2), ("1.3.2.5", 2), ("3.5.1.3.6", 2),
    ("5.6.2.3.3", 2), ("6.3.4.3.3", 2), ("6.4.6.4.6", 3), ("1.5.4.6.4", 3),
];

fn inflection_rule() -> Outcome {
    let mut matched = 0;
    for (label, want) in RANKED_LABELS {
        let spec: ArchSpec = label.parse().map_err(|e| format!("{label}: {e}"))?;
        let got = inflections(spec.widths());
        ensure(got == want, || format!("{label}: {got} inflections, want {want}"))?;
        matched += 1;
    }
    Ok(format!("{matched}/40 labels"))
}

fn binomial_probabilities() -> Outcome {
    let a = binom_pmf(3, 40, 0.1389).map_err(|e| e.to_string())?;
    let b = binom_pmf(0, 40, 0.0751).map_err(|e| e.to_string())?;
    within(a, 0.1047, 5e-4, "pmf(3, 40, 0.1389)")?;
    within(b, 0.0440, 5e-4, "pmf(0, 40, 0.0751)")?;
    Ok(format!("pmf(3, 40, 0.1389) = {a:.6}, pmf(0, 40, 0.0751) = {b:.6}"))
}

fn population_correlations() -> Outcome {
    let m = corr_matrix(&feature_columns(&population())).map_err(|e| e.to_string())?;
    let r = |a, b| m.get(a, b).unwrap();
    within(r(N_NEURONIOS, N_MED_NEURONIOS), 0.9028, 0.005, "corr(neurons, mean)")?;
    within(r(N_CAMADAS, N_NEURONIOS), 0.4143, 0.005, "corr(layers, neurons)")?;
    within(r(N_MED_NEURONIOS, N_CAMADAS), 0.0, 1e-9, "corr(mean, layers)")?;
    within(r(N_MED_NEURONIOS, DESVIO_N_NEURONIOS), 0.0, 1e-9, "corr(mean, std)")?;
    Ok(format!(
        "neurons~mean {:.4}, layers~neurons {:.4}, mean~layers {:.1e}, mean~std {:.1e}",
        r(N_NEURONIOS, N_MED_NEURONIOS),
        r(N_CAMADAS, N_NEURONIOS),
        r(N_MED_NEURONIOS, N_CAMADAS),
        r(N_MED_NEURONIOS, DESVIO_N_NEURONIOS)
    ))
}

fn gradient_correctness() -> Outcome {
    timed(Duration::from_secs(10), || {
        let cases = 200;
        let worst = common::gradient_check(cases, 0xacce97);
        ensure(worst < 1e-6, || format!("worst relative error {worst:e}"))?;
        Ok(format!("{cases} cases, worst relative error {worst:.2e}"))
    })
}

fn ols_oracle() -> Outcome {
    let x1: Vec<f64> = (0..15).map(|i| f64::from(i) * 0.5).collect();
    let x2: Vec<f64> = (0..15).map(|i| f64::from((i * 7) % 11)).collect();
    let x3: Vec<f64> = (0..15).map(|i| f64::from(i).sin()).collect();
    let beta = [0.75, -1.25, 2.0, 0.125];
    let y: Vec<f64> = (0..15)
        .map(|i| beta[0] + beta[1] * x1[i] + beta[2] * x2[i] + beta[3] * x3[i])
        .collect();
    let d = Design::new()
        .with_column("x1", x1)
        .and_then(|d| d.with_column("x2", x2))
        .and_then(|d| d.with_column("x3", x3))
        .map_err(|e| e.to_string())?;
    let rep = ols(&d, &y, true).map_err(|e| e.to_string())?;
    let got: Vec<f64> = std::iter::once(rep.intercept.as_ref().unwrap().coefficient)
        .chain(rep.rows.iter().map(|r| r.coefficient))
        .collect();
    let exact_err = got.iter().zip(beta).map(|(g, b)| (g - b).abs()).fold(0.0, f64::max);
    ensure(exact_err < 1e-9, || format!("exact fit error {exact_err:e}"))?;

    let (mut worst_sum, mut worst_orth) = (0.0f64, 0.0f64);
    for seed in 0..100 {
        let (s, o) = common::ols_invariant_violations(seed);
        worst_sum = worst_sum.max(s);
        worst_orth = worst_orth.max(o);
    }
    ensure(worst_sum < 1e-10 && worst_orth < 1e-10, || {
        format!("residual sum {worst_sum:e}, orthogonality {worst_orth:e}")
    })?;
    Ok(format!(
        "exact-fit error {exact_err:.1e}; 100 datasets: |sum e| {worst_sum:.1e}, |X'e| {worst_orth:.1e}"
    ))
}

fn synthetic_dataset(seed: u64) -> Dataset {
    let d = |y, m, day| NaiveDate::from_ymd_opt(y, m, day).unwrap();
    build_dataset(
        &synthesize(seed, 750).unwrap(),
        DateRange::new(d(2013, 1, 1), d(2014, 12, 31)).unwrap(),
        DateRange::new(d(2015, 1, 1), d(2015, 12, 31)).unwrap(),
    )
    .unwrap()
}

fn sweep_config(n_max: u32, k_max: u32, parallelism: usize) -> SweepConfig {
    SweepConfig {
        bounds: SpaceBounds::new(n_max, k_max).unwrap(),
        train_cfg: TrainConfig::default(),
        top_m: 10,
        parallelism,
        record_timing: false,
    }
}

fn determinism() -> Outcome {
    timed(Duration::from_secs(30), || {
        let ds = synthetic_dataset(1);
        let run = |p| -> Result<String, String> {
            let recs = sweep::run_sweep(&sweep_config(3, 3, p), &ds).map_err(|e| e.to_string())?;
            let ranked = sweep::rank(recs).map_err(|e| e.to_string())?;
            sweep::sweep_csv_string(&ranked).map_err(|e| e.to_string())
        };
        let (one, eight) = (run(1)?, run(8)?);
        let rows = one.lines().count() - 1;
        ensure(rows == 39, || format!("{rows} rows"))?;
        ensure(one == eight, || "sweep CSV differs between parallelism 1 and 8".into())?;
        Ok(format!("{rows} architectures, {} identical bytes", one.len()))
    })
}

fn desk_scale() -> Outcome {
    timed(Duration::from_secs(300), || {
        let ds = synthetic_dataset(2015);
        let recs = sweep::run_sweep(&sweep_config(4, 3, 8), &ds).map_err(|e| e.to_string())?;
        ensure(recs.len() == 84, || format!("{} records", recs.len()))?;
        let ranked = sweep::rank(recs).map_err(|e| e.to_string())?;
        let best = ranked.best();
        let mae = best.record.metrics.unwrap().mae_pct;
        let baseline = sweep::mean_baseline(&ds).map_err(|e| e.to_string())?.mae_pct;
        ensure(mae < baseline, || {
            format!("best {} MAE {mae:.4}% vs baseline {baseline:.4}%", best.record.label)
        })?;
        Ok(format!(
            "best {} MAE {mae:.4}% < train-mean baseline {baseline:.4}% ({} diverged)",
            best.record.label,
            ranked.diverged.len()
        ))
    })
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("enumeration count", enumeration_count),
        ("population layer proportions", layer_proportions),
        ("population neuron proportions", neuron_proportions),
        ("inflection rule", inflection_rule),
        ("binomial probabilities", binomial_probabilities),
        ("population correlations", population_correlations),
        ("gradient correctness", gradient_correctness),
        ("OLS oracle", ols_oracle),
        ("determinism", determinism),
        ("desk-scale end-to-end", desk_scale),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            Err(format!("panic: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("[PASS] {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                failures += 1;
                println!("[FAIL] {:>2} {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line per
//! criterion and exits nonzero if any fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use claimsbench::baseline::{mix_baseline, MileageMix, RegionFrequency};
use claimsbench::cli::{run_pipeline, RunConfig};
use claimsbench::ingestion::{Category, Coverage, DrivingMode, MileageLog, Region};
use claimsbench::simulator::{coverage_experiment, simulate_claims, SimConfig};
use claimsbench::stats::{
    inverse_regularized_lower_gamma, percent_reduction, poisson_exact_rate_ci, round_half_up,
    significance, Confidence, IntervalMethod, RateEstimate, SignificanceVerdict,
};
use claimsbench::vmt::VmtSelection;
use proptest::prelude::*;
use proptest::test_runner::{Config as ProptestConfig, TestRunner};

const C95: Confidence = Confidence::NINETY_FIVE;

/// One fleet cell as published: derived count, miles, rounded rate, rounded CI.
struct PublishedCell {
    category: Category,
    coverage: Coverage,
    claims: u64,
    exposure_mmi: f64,
    rate: f64,
    ci: (f64, f64),
    baseline: f64,
    baseline_ci: (f64, f64),
    reduction: f64,
    verdict: SignificanceVerdict,
}

fn published() -> Vec<PublishedCell> {
    use Category::*;
    use Coverage::*;
    use SignificanceVerdict::*;
    let cell = |category,
                coverage,
                claims,
                exposure_mmi,
                rate,
                ci,
                baseline,
                baseline_ci,
                reduction,
                verdict| PublishedCell {
        category,
        coverage,
        claims,
        exposure_mmi,
        rate,
        ci,
        baseline,
        baseline_ci,
        reduction,
        verdict,
    };
    vec![
        cell(
            Manual,
            BodilyInjury,
            8,
            14.436298,
            0.55,
            (0.24, 1.09),
            1.01,
            (1.00, 1.02),
            45.0,
            NotSignificant,
        ),
        cell(
            Manual,
            PropertyDamage,
            32,
            14.436298,
            2.22,
            (1.52, 3.13),
            3.34,
            (3.33, 3.36),
            34.0,
            Significant,
        ),
        cell(
            TestingOperations,
            BodilyInjury,
            3,
            35.228320,
            0.09,
            (0.02, 0.25),
            1.09,
            (1.08, 1.09),
            92.0,
            Significant,
        ),
        cell(
            TestingOperations,
            PropertyDamage,
            6,
            35.228320,
            0.17,
            (0.06, 0.37),
            3.17,
            (3.16, 3.18),
            95.0,
            Significant,
        ),
        cell(
            RiderOnly,
            BodilyInjury,
            0,
            3.868506,
            0.00,
            (0.00, 0.95),
            1.11,
            (1.10, 1.12),
            100.0,
            Significant,
        ),
        cell(
            RiderOnly,
            PropertyDamage,
            3,
            3.868506,
            0.78,
            (0.16, 2.27),
            3.26,
            (3.24, 3.27),
            76.0,
            Significant,
        ),
        cell(
            TestingPlusRiderOnly,
            BodilyInjury,
            3,
            39.096826,
            0.08,
            (0.02, 0.22),
            1.09,
            (1.08, 1.09),
            93.0,
            Significant,
        ),
        cell(
            TestingPlusRiderOnly,
            PropertyDamage,
            9,
            39.096826,
            0.23,
            (0.11, 0.44),
            3.17,
            (3.16, 3.18),
            93.0,
            Significant,
        ),
    ]
}

fn label(c: &PublishedCell) -> String {
    format!("{} {}", c.coverage, c.category)
}

fn interval(rate: f64, ci: (f64, f64)) -> RateEstimate {
    RateEstimate {
        rate_cpmm: rate,
        ci_low_cpmm: ci.0,
        ci_high_cpmm: ci.1,
        confidence: C95,
        method: IntervalMethod::NormalApprox,
        claim_count: None,
        exposure_mmi: None,
    }
}

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn fleet_intervals() -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    for c in published() {
        let est =
            poisson_exact_rate_ci(c.claims, c.exposure_mmi, C95).map_err(|e| e.to_string())?;
        let got = (
            round_half_up(est.ci_low_cpmm, 2),
            round_half_up(est.ci_high_cpmm, 2),
        );
        if got != c.ci {
            failures.push(format!("{}: got {got:?}, published {:?}", label(&c), c.ci));
        }
    }
    let elapsed = start.elapsed();
    if elapsed >= Duration::from_secs(1) {
        failures.push(format!("took {elapsed:?}, limit 1 s"));
    }
    if failures.is_empty() {
        Ok(format!("8/8 intervals exact after rounding, {elapsed:.2?}"))
    } else {
        Err(failures.join("; "))
    }
}

fn fleet_rates() -> Outcome {
    let failures: Vec<String> = published()
        .iter()
        .filter_map(|c| {
            let got = round_half_up(c.claims as f64 / c.exposure_mmi, 2);
            (got != c.rate).then(|| format!("{}: got {got}, published {}", label(c), c.rate))
        })
        .collect();
    if failures.is_empty() {
        Ok("8/8 rates exact after rounding".into())
    } else {
        Err(failures.join("; "))
    }
}

fn reductions() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for c in published() {
        let rate = c.claims as f64 / c.exposure_mmi;
        let got = percent_reduction(rate, c.baseline)
            .map_err(|e| e.to_string())?
            .unrounded();
        let diff = (got - c.reduction).abs();
        worst = worst.max(diff);
        if diff > 1.0 {
            failures.push(format!(
                "{}: got {got:.2}, published {}",
                label(&c),
                c.reduction
            ));
        }
    }
    if failures.is_empty() {
        Ok(format!("8/8 within 1 point, largest gap {worst:.2}"))
    } else {
        Err(failures.join("; "))
    }
}

fn verdicts(replication: &Path) -> Outcome {
    let mut failures = Vec::new();
    for c in published() {
        let got = significance(
            &interval(c.rate, c.ci),
            &interval(c.baseline, c.baseline_ci),
        )
        .map_err(|e| e.to_string())?;
        if got != c.verdict {
            failures.push(format!("{}: got {got:?}", label(&c)));
        }
    }
    // Same verdicts from the end-to-end pipeline on the replication fixture.
    let out = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = run_pipeline(&run_config(
        replication,
        out.path(),
        VmtSelection::ConservativeAuto,
    ))
    .map_err(|e| e.to_string())?;
    for c in published() {
        let verdict = run
            .matrix
            .get(c.category, c.coverage)
            .and_then(|cell| cell.result())
            .map(|r| r.verdict);
        if verdict != Some(c.verdict) {
            failures.push(format!("pipeline {}: got {verdict:?}", label(&c)));
        }
    }
    if failures.is_empty() {
        Ok("Manual BI NS, other seven S, direct and end to end".into())
    } else {
        Err(failures.join("; "))
    }
}

fn gamma_inverse() -> Outcome {
    let got = inverse_regularized_lower_gamma(1.0, 0.975).map_err(|e| e.to_string())?;
    let want = -(0.025_f64.ln());
    if (got - want).abs() > 1e-8 {
        return Err(format!("P^-1(1, 0.975) = {got}, expected {want}"));
    }
    for shape in [0.5, 1.0, 4.0, 16.0, 33.0] {
        let mut previous = 0.0;
        for i in 1..=99 {
            let p = i as f64 / 100.0;
            let x = inverse_regularized_lower_gamma(shape, p).map_err(|e| e.to_string())?;
            if x.is_nan() || x <= previous {
                return Err(format!(
                    "not increasing at shape {shape}, p {p}: {x} <= {previous}"
                ));
            }
            previous = x;
        }
    }
    Ok(format!(
        "|error| {:.1e} at shape 1; 5 x 99 grid strictly increasing",
        (got - want).abs()
    ))
}

fn coverage() -> Outcome {
    let start = Instant::now();
    let mut parts = Vec::new();
    let mut failures = Vec::new();
    for (i, lambda) in [0.5, 1.0, 3.0, 10.0, 50.0].into_iter().enumerate() {
        let report = coverage_experiment(lambda, 1.0, 100_000, C95, 0xC0FFEE + i as u64)
            .map_err(|e| e.to_string())?;
        parts.push(format!("{lambda}: {:.4}", report.coverage));
        if report.coverage < 0.945 {
            failures.push(format!("lambda {lambda}: {:.4} < 0.945", report.coverage));
        }
    }
    let elapsed = start.elapsed();
    if elapsed >= Duration::from_secs(60) {
        failures.push(format!("took {elapsed:?}, limit 60 s"));
    }
    if failures.is_empty() {
        Ok(format!("{} in {elapsed:.2?}", parts.join(", ")))
    } else {
        Err(failures.join("; "))
    }
}

fn pipeline_oracle(simconfig: &Path) -> Outcome {
    let text = std::fs::read_to_string(simconfig).map_err(|e| e.to_string())?;
    let sim = SimConfig::from_json(&text).map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let inputs = dir.path().join("inputs");
    simulate_claims(&sim)
        .and_then(|d| d.write_to(&inputs))
        .map_err(|e| e.to_string())?;
    let run = run_pipeline(&run_config(
        &inputs,
        &dir.path().join("out"),
        VmtSelection::ConservativeAuto,
    ))
    .map_err(|e| e.to_string())?;

    let mut parts = Vec::new();
    let mut failures = Vec::new();
    for category in [
        Category::Manual,
        Category::TestingOperations,
        Category::RiderOnly,
    ] {
        let weights = sim
            .mix_weights(category)
            .ok_or(format!("{category} has no miles"))?;
        let (truth, se) = sim
            .expected_baseline(category, Coverage::PropertyDamage)
            .ok_or(format!("{category} has no truth"))?;
        let estimate = run
            .baselines
            .iter()
            .find(|b| b.category == category && b.coverage == Coverage::PropertyDamage)
            .ok_or(format!("{category} PD baseline missing"))?
            .estimate
            .rate_cpmm;
        let z = (estimate - truth) / se;
        let sf = weights.get(&Region::SanFrancisco).copied().unwrap_or(0.0);
        parts.push(format!(
            "w_sf={sf:.2}: {estimate:.3} vs {truth:.3} ({z:+.2} SE)"
        ));
        if z.abs() > 3.0 {
            failures.push(format!("{category}: {estimate} vs {truth}, {z:+.2} SE"));
        }
    }
    if !parts.iter().any(|p| p.starts_with("w_sf=1.00")) {
        failures.push("no degenerate single-region mix".into());
    }
    if failures.is_empty() {
        Ok(parts.join("; "))
    } else {
        Err(failures.join("; "))
    }
}

fn frequency(region: Region, claims: u64, exposure_mmi: f64) -> RegionFrequency {
    RegionFrequency {
        region,
        coverage: Coverage::PropertyDamage,
        claim_count: claims,
        exposure_mmi,
        frequency_cpmm: claims as f64 / exposure_mmi,
    }
}

fn mix_of(sf_miles: f64, phx_miles: f64) -> Option<MileageMix> {
    let logs = [
        MileageLog {
            region: Region::SanFrancisco,
            mode: DrivingMode::Manual,
            miles: sf_miles,
        },
        MileageLog {
            region: Region::Phoenix,
            mode: DrivingMode::Manual,
            miles: phx_miles,
        },
    ];
    MileageMix::from_mileage(Category::Manual, &logs)
}

/// Value reproduction of the printed baselines needs the undisclosed
/// claim counts and regional mix, so they are checked by properties.
fn baseline_properties() -> Outcome {
    let mut runner = TestRunner::new(ProptestConfig {
        cases: 512,
        failure_persistence: None,
        ..ProptestConfig::default()
    });
    let hull = (
        1_u64..50_000,
        1_u64..50_000,
        10.0..1e5_f64,
        10.0..1e5_f64,
        0.0..1e8_f64,
        0.0..1e8_f64,
    );
    runner
        .run(&hull, |(k_sf, k_phx, e_sf, e_phx, m_sf, m_phx)| {
            let Some(mix) = mix_of(m_sf, m_phx) else {
                return Ok(());
            };
            let regions = [
                frequency(Region::SanFrancisco, k_sf, e_sf),
                frequency(Region::Phoenix, k_phx, e_phx),
            ];
            let b = mix_baseline(&regions, &mix, Coverage::PropertyDamage, C95).unwrap();
            let lo = regions[0].frequency_cpmm.min(regions[1].frequency_cpmm);
            let hi = regions[0].frequency_cpmm.max(regions[1].frequency_cpmm);
            let r = b.estimate.rate_cpmm;
            prop_assert!(lo * (1.0 - 1e-12) <= r && r <= hi * (1.0 + 1e-12));
            Ok(())
        })
        .map_err(|e| format!("convex hull: {e}"))?;

    let scaling = (
        1_u64..20_000,
        1_u64..20_000,
        10.0..1e5_f64,
        10.0..1e5_f64,
        0.01..0.99_f64,
        2_u64..50,
    );
    runner
        .run(&scaling, |(k_sf, k_phx, e_sf, e_phx, w, factor)| {
            let mix = mix_of(w, 1.0 - w).unwrap();
            let f = factor as f64;
            let base = [
                frequency(Region::SanFrancisco, k_sf, e_sf),
                frequency(Region::Phoenix, k_phx, e_phx),
            ];
            let scaled = [
                frequency(Region::SanFrancisco, k_sf * factor, e_sf * f),
                frequency(Region::Phoenix, k_phx * factor, e_phx * f),
            ];
            let a = mix_baseline(&base, &mix, Coverage::PropertyDamage, C95).unwrap();
            let b = mix_baseline(&scaled, &mix, Coverage::PropertyDamage, C95).unwrap();
            let ratio = b.standard_error.unwrap() / a.standard_error.unwrap();
            prop_assert!(
                (ratio - 1.0 / f.sqrt()).abs() < 1e-9,
                "ratio {} for factor {}",
                ratio,
                factor
            );
            Ok(())
        })
        .map_err(|e| format!("1/sqrt(exposure) scaling: {e}"))?;
    Ok("convex-hull mixing and 1/sqrt(exposure) CI scaling hold over 512 cases each".into())
}

fn run_config(inputs: &Path, out: &Path, vmt_selection: VmtSelection) -> RunConfig {
    RunConfig {
        inputs: inputs.to_path_buf(),
        out: out.to_path_buf(),
        confidence: C95,
        strict: false,
        vmt_selection,
        seed: None,
    }
}

fn determinism(replication: &Path) -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = dir.path().join("out");
    let snapshot = |out: &Path| -> Result<Vec<(String, Vec<u8>)>, String> {
        let status = Command::new(env!("CARGO_BIN_EXE_claimsbench"))
            .args(["compare", "--inputs"])
            .arg(replication)
            .arg("--out")
            .arg(out)
            .env_remove("CLAIMSBENCH_CONFIG")
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(format!(
                "compare failed: {}",
                String::from_utf8_lossy(&status.stderr)
            ));
        }
        let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(out)
            .map_err(|e| e.to_string())?
            .map(|entry| {
                let path = entry.map_err(|e| e.to_string())?.path();
                let bytes = std::fs::read(&path).map_err(|e| e.to_string())?;
                Ok((
                    path.file_name().unwrap().to_string_lossy().into_owned(),
                    bytes,
                ))
            })
            .collect::<Result<_, String>>()?;
        files.sort();
        Ok(files)
    };
    let first = snapshot(&out)?;
    let second = snapshot(&out)?;
    let elsewhere = snapshot(&dir.path().join("other"))?;
    if first.is_empty() {
        return Err("no outputs written".into());
    }
    if first != second || first != elsewhere {
        return Err("outputs differ between runs".into());
    }
    let names: Vec<&str> = first.iter().map(|(n, _)| n.as_str()).collect();
    Ok(format!("{} byte-identical across 3 runs", names.join(", ")))
}

fn main() {
    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let replication = fixtures.join("replication");
    let simconfig = fixtures.join("simconfig.json");

    let criteria: Vec<Criterion> = vec![
        ("exact fleet intervals", Box::new(fleet_intervals)),
        ("fleet rates", Box::new(fleet_rates)),
        ("percent reductions", Box::new(reductions)),
        ("significance matrix", Box::new(|| verdicts(&replication))),
        ("gamma inverse", Box::new(gamma_inverse)),
        ("interval coverage", Box::new(coverage)),
        ("pipeline oracle", Box::new(|| pipeline_oracle(&simconfig))),
        ("baseline properties", Box::new(baseline_properties)),
        ("determinism", Box::new(|| determinism(&replication))),
    ];

    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail})", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({detail})", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

use std::io::Write;

use densum::clustering::{cluster_matches, ClusterParams};
use densum::geometry::*;
use densum::harness::bench::{run_benchmark, BenchOptions};
use densum::harness::eval::{approx_error_eval, gt_essential, ApproxEvalConfig};
use densum::harness::io::{load_all, write_pairs, PairRecord};
use densum::harness::metrics::wxbs_recall;
use densum::harness::report::{emit_report, load_report, ReportFormat};
use densum::harness::synth::{synth_pairs, SynthConfig};
use densum::harness::HarnessError;
use densum::ransac::{MethodSpec, RansacConfig};

fn pairs(n_pairs: usize, n_matches: usize, noise: f64, outliers: f64, seed: u64) -> Vec<PairRecord> {
    let cfg = SynthConfig {
        n_pairs,
        n_matches,
        noise_px: noise,
        outlier_frac: outliers,
        n_gt_matches: 20,
        seed,
        ..Default::default()
    };
    synth_pairs(&cfg).unwrap().collect()
}

fn methods(codes: &[&str]) -> Vec<MethodSpec> {
    codes.iter().map(|c| MethodSpec::parse(c).unwrap()).collect()
}

#[test]
fn exact_column_matches_brute_force_sampson() {
    let ps = pairs(2, 800, 1.0, 0.3, 9);
    let cfg = ApproxEvalConfig {
        k: 16,
        ks: vec![16],
        timing_reps: 1,
        ..Default::default()
    };
    let report = approx_error_eval(&ps, &cfg).unwrap();
    assert_eq!(report.stats.n_clusters, report.clusters.len());
    for p in &ps {
        let (k1, k2) = p.intrinsics().unwrap().unwrap();
        let f = focal_scale(&k1, &k2);
        let e = gt_essential(p).unwrap();
        let ms = p.to_matches(ModelKind::Essential).unwrap();
        let params = ClusterParams {
            space: cfg.cluster_space,
            k: cfg.k,
            max_iter: cfg.kmeans_max_iter,
            seed: cfg.seed,
            rule: cfg.representative_rule,
        };
        let members = cluster_matches(&ms, &params).unwrap().members();
        let rows: Vec<_> = report.clusters.iter().filter(|c| c.pair_id == p.pair_id).collect();
        assert_eq!(rows.len(), members.len());
        for (row, idx) in rows.iter().zip(&members) {
            let sum: f64 = idx.iter().map(|&i| sampson_error(&e, &ms[i])).sum();
            let want = f * (sum / idx.len() as f64).sqrt();
            assert_eq!(row.size, idx.len());
            assert!((row.eps_s_px - want).abs() <= 1e-12 * want.max(1e-12), "{} vs {want}", row.eps_s_px);
        }
    }
}

#[test]
fn pair_file_round_trip_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pairs.jsonl");
    let ps = pairs(3, 50, 0.5, 0.1, 4);
    write_pairs(&path, &ps).unwrap();
    assert_eq!(load_all(&path).unwrap(), ps);

    let empty = dir.path().join("empty.jsonl");
    std::fs::File::create(&empty).unwrap();
    assert!(load_all(&empty).unwrap().is_empty());

    let bad = dir.path().join("bad.jsonl");
    let mut f = std::fs::File::create(&bad).unwrap();
    writeln!(f, "{}", serde_json::to_string(&ps[0]).unwrap()).unwrap();
    writeln!(f, "{{\"pair_id\": 3}}").unwrap();
    assert!(matches!(load_all(&bad), Err(HarnessError::Schema { line: 2, .. })));

    assert!(matches!(load_all(&dir.path().join("missing.jsonl")), Err(HarnessError::Io { .. })));

    let mut uncal = ps[0].clone();
    uncal.k1 = None;
    assert!(matches!(
        uncal.to_matches(ModelKind::Essential),
        Err(HarnessError::CalibrationRequired { .. })
    ));
    assert_eq!(uncal.to_matches(ModelKind::Fundamental).unwrap().len(), 50);
}

#[test]
fn benchmark_records_follow_pair_method_repeat_order() {
    let ps = pairs(1, 400, 0.5, 0.2, 12);
    let cfg = RansacConfig {
        seed: 40,
        max_iterations: 300,
        k: 16,
        ..Default::default()
    };
    let opts = BenchOptions {
        repeats: 3,
        ..Default::default()
    };
    let recs = run_benchmark(&ps, &methods(&["DDD", "CCC"]), &cfg, &opts).unwrap();
    let got: Vec<(&str, u64)> = recs.iter().map(|r| (r.method.as_str(), r.seed)).collect();
    assert_eq!(
        got,
        [("DDD", 40), ("DDD", 41), ("DDD", 42), ("CCC", 40), ("CCC", 41), ("CCC", 42)]
    );
    assert!(recs.iter().all(|r| r.pose_err_deg.is_some() && r.recall.is_none()));

    let zero = BenchOptions {
        repeats: 0,
        ..Default::default()
    };
    assert!(run_benchmark(&ps, &methods(&["DDD"]), &cfg, &zero).is_err());
    assert!(run_benchmark(&ps, &[], &cfg, &opts).is_err());
}

#[test]
fn noiseless_pairs_are_recovered() {
    let ps = pairs(2, 1500, 0.0, 0.0, 21);
    let cfg = RansacConfig {
        k: 64,
        ..Default::default()
    };
    let recs = run_benchmark(&ps, &methods(&["DDD", "CCA"]), &cfg, &BenchOptions::default()).unwrap();
    for r in &recs {
        let err = r.pose_err_deg.unwrap();
        assert!(err < 1e-4, "{} {}: {err}", r.pair_id, r.method);
    }
}

#[test]
fn recall_of_the_true_fundamental_matrix() {
    let p = &pairs(1, 10, 0.0, 0.0, 5)[0];
    let (k1, k2) = p.intrinsics().unwrap().unwrap();
    let e = gt_essential(p).unwrap();
    let f = k2.matrix().try_inverse().unwrap().transpose() * e.m * k1.matrix().try_inverse().unwrap();
    let f = EpipolarModel::fundamental(f);
    let gm = p.gt_matches.as_ref().unwrap();
    assert_eq!(wxbs_recall(&f, gm, 1e-6), 1.0);
    assert_eq!(wxbs_recall(&f, gm, 0.0), 0.0);
    assert_eq!(wxbs_recall(&f, &[], 1.0), 0.0);
}

#[test]
fn reports_round_trip_and_baseline_speedup() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("empty.csv");
    emit_report(&[], ReportFormat::Csv, &csv).unwrap();
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("pair_id,method,seed"), "{text}");
    assert_eq!(text.lines().filter(|l| !l.is_empty()).count(), 1);

    let ps = pairs(1, 300, 0.5, 0.2, 2);
    let cfg = RansacConfig {
        k: 16,
        max_iterations: 200,
        ..Default::default()
    };
    let recs = run_benchmark(&ps, &methods(&["DDD", "CCD"]), &cfg, &BenchOptions::default()).unwrap();
    let json = dir.path().join("report.json");
    emit_report(&recs, ReportFormat::Json, &json).unwrap();
    let back = load_report(&json).unwrap();
    assert_eq!(back.records, recs);
    assert_eq!(back.aggregate[0].method, "DDD");
    assert_eq!(back.aggregate[0].speedup_vs_ddd, Some(1.0));
    assert!(back.aggregate[1].speedup_vs_ddd.unwrap() > 0.0);
}

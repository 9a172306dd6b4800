use densum::geometry::*;
use densum::solvers::*;
use densum::summarization::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_pose(rng: &mut ChaCha8Rng) -> RelativePose {
    let w = Vec3::new(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3));
    let t = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    RelativePose::new(rotation_from_axis_angle(&w), t)
}

fn random_matches(rng: &mut ChaCha8Rng, pose: &RelativePose, n: usize) -> Vec<Match> {
    let k = CameraIntrinsics::new(800.0, 800.0, 320.0, 240.0).unwrap();
    let mut out = Vec::new();
    while out.len() < n {
        let x = Vec3::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(4.0..10.0));
        let y = pose.transform(&x);
        if y.z <= 0.1 {
            continue;
        }
        let n1 = NormalizedPoint::new(x.x / x.z, x.y / x.z);
        let n2 = NormalizedPoint::new(y.x / y.z, y.y / y.z);
        out.push(Match { p1: k.project(n1), p2: k.project(n2), n1, n2 });
    }
    out
}

fn sign_invariant_distance(a: &Mat3, b: &Mat3) -> f64 {
    let a = a / a.norm();
    let b = b / b.norm();
    (a - b).norm().min((a + b).norm())
}

#[test]
fn five_point_recovers_ground_truth_essential() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut hits = 0;
    for _ in 0..200 {
        let pose = random_pose(&mut rng);
        let ms = random_matches(&mut rng, &pose, 5);
        let gt = essential_from_pose(&pose).m;
        let sols = essential_5pt(&ms);
        assert!(sols.len() <= 10);
        for s in &sols {
            assert!(s.m.determinant().abs() < 1e-8);
            assert!(s.essential_constraint().norm() < 1e-7);
            for m in &ms {
                assert!(epipolar_residual(s, m).abs() < 1e-8);
            }
        }
        if sols.iter().any(|s| sign_invariant_distance(&s.m, &gt) < 1e-6) {
            hits += 1;
        }
    }
    assert!(hits >= 198, "recovered {hits}/200");
}

#[test]
fn seven_point_recovers_ground_truth_fundamental() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let k = CameraIntrinsics::new(800.0, 800.0, 320.0, 240.0).unwrap().matrix();
    let ki = k.try_inverse().unwrap();
    let mut hits = 0;
    for _ in 0..200 {
        let pose = random_pose(&mut rng);
        let ms = random_matches(&mut rng, &pose, 7);
        let gt = ki.transpose() * essential_from_pose(&pose).m * ki;
        let sols = fundamental_7pt(&ms);
        assert!(!sols.is_empty() && sols.len() <= 3);
        for s in &sols {
            assert!(s.m.determinant().abs() < 1e-10);
        }
        if sols.iter().any(|s| sign_invariant_distance(&s.m, &gt) < 1e-6) {
            hits += 1;
        }
    }
    assert!(hits >= 198, "recovered {hits}/200");
}

#[test]
fn summary_solver_matches_five_point_on_exact_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let pose = random_pose(&mut rng);
        let ms = random_matches(&mut rng, &pose, 5);
        let s = summarize_cluster(&ms, &ms[0], ModelKind::Essential).unwrap();
        let a = essential_5pt(&ms);
        let b = essential_from_summary(&s);
        assert_eq!(a.len(), b.len());
        for x in &a {
            assert!(b.iter().any(|y| sign_invariant_distance(&x.m, &y.m) < 1e-6));
        }
    }
}

#[test]
fn degenerate_samples_yield_no_spurious_models() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let pose = random_pose(&mut rng);
    let mut ms = random_matches(&mut rng, &pose, 5);
    ms[4] = ms[0];
    for s in essential_5pt(&ms) {
        for m in &ms {
            assert!(epipolar_residual(&s, m).abs() < 1e-8);
        }
    }
}


"""Smoke test for the densum Python extension.

Build and install first, e.g. `pip install --no-build-isolation ./crates/python`
or `maturin develop -m crates/python/Cargo.toml --release`, then run
`python python/smoke_test.py`.
"""

import math

import densum


def matmul(a, b):
    return [[sum(a[i][k] * b[k][j] for k in range(3)) for j in range(3)] for i in range(3)]


def skew(t):
    return [[0.0, -t[2], t[1]], [t[2], 0.0, -t[0]], [-t[1], t[0], 0.0]]


def main():
    pair = densum.synth_pairs(n_pairs=1, n_matches=3000, noise_px=0.5, outlier_frac=0.2, seed=3)[0]
    assert len(pair["matches"]) == 3000
    k1, k2 = pair["K1"], pair["K2"]
    r_gt, t_gt = pair["gt"]["R"], pair["gt"]["t"]

    for method in ("DDD", "CCD", "CCC"):
        est = densum.estimate(pair["matches"], k1, k2, method=method, tau_px=1.5, k=64, seed=1)
        rot, trans, worst = densum.pose_error(est.rotation, est.translation, r_gt, t_gt)
        print(f"{method}: {est!r} pose error {worst:.3f} deg")
        assert est.method == method
        assert worst < 5.0, (method, worst)

    # Minimal solver on noiseless calibrated points.
    e_gt = matmul(skew(t_gt), r_gt)
    fx, cx, fy, cy = k1[0][0], k1[0][2], k1[1][1], k1[1][2]
    clean = densum.synth_pairs(n_pairs=1, n_matches=5, noise_px=0.0, outlier_frac=0.0, seed=4)[0]
    x1 = [[(m[0] - cx) / fx, (m[1] - cy) / fy] for m in clean["matches"]]
    x2 = [[(m[2] - cx) / fx, (m[3] - cy) / fy] for m in clean["matches"]]
    sols = densum.essential_5pt(x1, x2)
    assert 1 <= len(sols) <= 10
    for e in sols:
        for a, b in zip(x1, x2):
            assert densum.sampson_error(e, a, b) < 1e-12

    # Summaries reproduce the exact Sampson sum of coincident members.
    m = pair["matches"][0]
    sums = densum.summarize([m] * 4, k1, k2, k=1)
    assert len(sums) == 1 and sums[0].size == 4
    n1 = [(m[0] - cx) / fx, (m[1] - cy) / fy]
    n2 = [(m[2] - cx) / fx, (m[3] - cy) / fy]
    exact = 4 * densum.sampson_error(e_gt, n1, n2)
    approx = sums[0].approx_residual(e_gt)
    assert math.isclose(approx, exact, rel_tol=1e-9, abs_tol=1e-18), (approx, exact)

    assignment, reps = densum.cluster(pair["matches"], k=32, seed=2)
    assert len(assignment) == 3000 and all(assignment[r] == c for c, r in enumerate(reps))

    assert densum.auc([2.5], [5.0]) == [0.5]
    print("smoke test passed")


if __name__ == "__main__":
    main()

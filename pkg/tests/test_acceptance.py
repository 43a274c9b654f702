"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Heavy fits are shared through module-scoped fixtures.  Fixture sizes and
iteration budgets for criteria 3-6 were calibrated once on a 2-CPU box and
are deterministic under the pinned seeds; criterion 2 runs its exact stated
protocol (two_tone 256, factor 8, 8000 iterations, 32-block batches).
"""

import time

import numpy as np
import pytest

from pixsr.baselines import bicubic_upsample, guided_filter
from pixsr.cli import main
from pixsr.gradcheck import check_gradients
from pixsr.imaging import (
    block_downsample,
    compute_norm_stats,
    coordinate_channels,
    normalize,
)
from pixsr.metrics import mae, mse, pbp
from pixsr.network import ModelConfig, init_model, predict_image
from pixsr.solver import TrainConfig, fit, kink_signature, objective, sample_batch
from pixsr.synth import SceneSpec, default_boundary, generate, make_source

DELTA = 0.2  # 10% of the two-tone gap (tones 1.0 and 3.0)


def check(num, ok, detail):
    print(f"\nACCEPTANCE {num}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"criterion {num}: {detail}"


def fitted_scene(kind, size, factor, iterations, batch_blocks=32, seed=0, **scene_kw):
    spec = SceneSpec(kind=kind, size=size, seed=seed, **scene_kw)
    guide, target = generate(spec)
    source = make_source(target, factor)
    model_cfg = ModelConfig(init_seed=seed)
    train_cfg = TrainConfig(iterations=iterations, batch_blocks=batch_blocks, seed=seed)
    started = time.perf_counter()
    result = fit(source, guide, model_cfg, train_cfg)
    elapsed = time.perf_counter() - started
    return {
        "guide": guide,
        "target": target,
        "source": source,
        "factor": factor,
        "model_cfg": model_cfg,
        "result": result,
        "fit_seconds": elapsed,
    }


def consistency_ratio(scene):
    """Final vs initial MAE between downsampled normalized prediction and source."""
    result = scene["result"]
    sn = normalize(scene["source"], result.source_stats)
    gn = normalize(scene["guide"], result.guide_stats)
    coords = coordinate_channels(scene["guide"].shape[0])
    params0 = init_model(scene["model_cfg"], channels=scene["guide"].shape[2])
    d = scene["factor"]
    mae0 = mae(block_downsample(predict_image(params0, gn, coords), d), sn)
    mae1 = mae(block_downsample(predict_image(result.params, gn, coords), d), sn)
    return mae0, mae1


@pytest.fixture(scope="module")
def two_tone_d8():
    return fitted_scene("two_tone", size=256, factor=8, iterations=8000)


@pytest.fixture(scope="module")
def two_tone_d16():
    return fitted_scene("two_tone", size=128, factor=16, iterations=800)


@pytest.fixture(scope="module")
def stripes_d8():
    return fitted_scene("stripes", size=128, factor=8, iterations=1200)


@pytest.fixture(scope="module")
def stripes_d16():
    return fitted_scene("stripes", size=128, factor=16, iterations=1000)


def test_criterion_1_gradient_correctness():
    """Analytic gradients match central finite differences on 20 instances."""
    rng = np.random.default_rng(2024)
    started = time.perf_counter()
    worst = 0.0
    for trial in range(20):
        n, d = 32, 4
        guide = rng.normal(size=(n, n, 3))
        source = rng.normal(size=(n // d, n // d))
        sn = normalize(source, compute_norm_stats(source))
        gn = normalize(guide, compute_norm_stats(guide))
        coords = coordinate_channels(n)
        params = init_model(ModelConfig(hidden_width=8, init_seed=trial), channels=3)
        blocks = sample_batch(np.random.default_rng(trial), (n // d) ** 2, 32)
        report = check_gradients(
            params,
            lambda p: objective(p, sn, gn, coords, blocks),
            step=1e-5,
            tol=1e-4,
            kink_fn=lambda p: kink_signature(p, sn, gn, coords, blocks),
        )
        assert report.passed, f"instance {trial}: {report.summary()}"
        worst = max(worst, report.max_rel_err)
    elapsed = time.perf_counter() - started
    check(
        1,
        worst <= 1e-4 and elapsed < 60.0,
        f"max rel err {worst:.2e} <= 1e-4 over 20 instances in {elapsed:.1f}s < 60s",
    )


def test_criterion_2_consistency_invariant(two_tone_d8):
    """8000 iterations shrink the consistency MAE to <= 10% of its start."""
    mae0, mae1 = consistency_ratio(two_tone_d8)
    ratio = mae1 / mae0
    elapsed = two_tone_d8["fit_seconds"]
    check(
        2,
        ratio <= 0.1 and elapsed <= 300.0,
        f"consistency MAE {mae0:.4f} -> {mae1:.5f} (ratio {ratio:.4f} <= 0.1), "
        f"fit {elapsed:.0f}s <= 300s",
    )


def test_criterion_3_guided_recovery(two_tone_d8, two_tone_d16, stripes_d8, stripes_d16):
    """Strictly lower MSE and PBP than bicubic on guide-correlated scenes."""
    details = []
    ok = True
    for name, scene in (
        ("two_tone d8", two_tone_d8),
        ("two_tone d16", two_tone_d16),
        ("stripes d8", stripes_d8),
        ("stripes d16", stripes_d16),
    ):
        pred = scene["result"].prediction
        bic = bicubic_upsample(scene["source"], scene["factor"])
        truth = scene["target"]
        m_ours, m_bic = mse(pred, truth), mse(bic, truth)
        p_ours, p_bic = pbp(pred, truth, DELTA), pbp(bic, truth, DELTA)
        ok = ok and m_ours < m_bic and p_ours < p_bic
        details.append(f"{name}: mse {m_ours:.2e}<{m_bic:.2e}, pbp {p_ours:.2f}<{p_bic:.2f}")
    check(3, ok, "; ".join(details))


def test_criterion_4_sharpness_proxy(two_tone_d16):
    """The predicted edge is at least 4x steeper than bicubic's."""
    scene = two_tone_d16
    b = default_boundary(scene["guide"].shape[0])
    cols = slice(max(b - 2, 0), b + 1)
    pred_grad = np.abs(np.diff(scene["result"].prediction, axis=1))[:, cols].max()
    bic = bicubic_upsample(scene["source"], scene["factor"])
    bic_grad = np.abs(np.diff(bic, axis=1))[:, cols].max()
    ratio = pred_grad / bic_grad
    check(4, ratio >= 4.0, f"boundary gradient {pred_grad:.3f} vs {bic_grad:.3f} ({ratio:.1f}x >= 4x)")


def ramp_fit(lambda_name, value):
    spec = SceneSpec(kind="gradient_ramp", size=64)
    guide, target = generate(spec)
    source = make_source(target, 8)
    kwargs = {lambda_name: value, "init_seed": 0}
    result = fit(source, guide, ModelConfig(**kwargs), TrainConfig(iterations=1200, seed=0))
    return guide, result.prediction


def test_criterion_5_regularization_trends():
    """Raising lambda_x ties equal-guide pixels together; raising lambda_g blurs blocks."""
    n, d = 64, 8
    groups = (np.arange(n)[:, None] + np.arange(n)[None, :]).ravel()

    def within_group_variance(pred):
        flat = pred.ravel()
        total = 0.0
        for v in np.unique(groups):
            sel = flat[groups == v]
            total += sel.size * sel.var()
        return total / flat.size

    def within_block_variance(pred):
        m = n // d
        blocks = pred.reshape(m, d, m, d).transpose(0, 2, 1, 3).reshape(m * m, d * d)
        return float(blocks.var(axis=1).mean())

    sweep = (1e-4, 1e-2, 1.0)
    vx = [within_group_variance(ramp_fit("lambda_x", lam)[1]) for lam in sweep]
    vg = [within_block_variance(ramp_fit("lambda_g", lam)[1]) for lam in sweep]
    ok_x = vx[0] >= vx[1] >= vx[2]
    ok_g = vg[0] >= vg[1] >= vg[2]
    check(
        5,
        ok_x and ok_g,
        f"equal-guide variance {vx[0]:.3e} >= {vx[1]:.3e} >= {vx[2]:.3e}; "
        f"within-block variance {vg[0]:.6f} >= {vg[1]:.6f} >= {vg[2]:.6f}",
    )


def test_criterion_6_failure_mode_regression():
    """Textured guide at factor 32: consistency still converges."""
    scene = fitted_scene(
        "textured_confuser", size=128, factor=32, iterations=1000, batch_blocks=8
    )
    mae0, mae1 = consistency_ratio(scene)
    ratio = mae1 / mae0
    check(6, ratio <= 0.1, f"consistency MAE {mae0:.4f} -> {mae1:.5f} (ratio {ratio:.4f} <= 0.1)")


def test_criterion_7_metric_oracles():
    """mse/mae/pbp/aggregate match double-loop computations to 1e-12."""
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(50):
        p = rng.normal(size=(6, 6))
        t = rng.normal(size=(6, 6))
        delta = float(rng.uniform(0.1, 2.0))
        acc_sq = acc_abs = bad = 0.0
        for i in range(6):
            for j in range(6):
                diff = p[i, j] - t[i, j]
                acc_sq += diff * diff
                acc_abs += abs(diff)
                bad += 1.0 if abs(diff) > delta else 0.0
        for got, want in (
            (mse(p, t), acc_sq / 36.0),
            (mae(p, t), acc_abs / 36.0),
            (pbp(p, t, delta), 100.0 * bad / 36.0),
        ):
            worst = max(worst, abs(got - want) / max(abs(want), 1e-300))
    boundary = pbp(np.full((4, 4), 1.25), np.zeros((4, 4)), 1.25)
    check(
        7,
        worst <= 1e-12 and boundary == 0.0,
        f"worst rel dev {worst:.2e} <= 1e-12; error-equals-delta counts good ({boundary}%)",
    )


def test_criterion_8_baseline_correctness():
    """Guided filter matches its per-window oracle; bicubic reproduces constants and ramps."""
    rng = np.random.default_rng(8)
    guide = rng.normal(size=(16, 16))
    img = rng.normal(size=(16, 16))
    r, eps = 2, 1e-2

    def naive_box(a, i, j):
        return a[max(i - r, 0) : i + r + 1, max(j - r, 0) : j + r + 1].mean()

    a_map = np.zeros((16, 16))
    b_map = np.zeros((16, 16))
    for i in range(16):
        for j in range(16):
            mi = naive_box(guide, i, j)
            mp = naive_box(img, i, j)
            cov = naive_box(guide * img, i, j) - mi * mp
            var = naive_box(guide * guide, i, j) - mi * mi
            a_map[i, j] = cov / (var + eps)
            b_map[i, j] = mp - a_map[i, j] * mi
    want = np.zeros((16, 16))
    for i in range(16):
        for j in range(16):
            want[i, j] = naive_box(a_map, i, j) * guide[i, j] + naive_box(b_map, i, j)
    gf_err = np.max(np.abs(guided_filter(guide, img, r, eps) - want))

    const_exact = all(
        np.array_equal(bicubic_upsample(np.full((4, 4), c), 8), np.full((32, 32), c))
        for c in (2.5, 7.0, -3.25)
    )
    m, d = 8, 4
    ramp = np.arange(m, dtype=np.float64)[np.newaxis, :].repeat(m, axis=0)
    out = bicubic_upsample(ramp, d)
    expected = (np.arange(m * d) + 0.5) / d - 0.5
    interior = slice(2 * d, -2 * d)
    ramp_err = np.max(np.abs(out[interior, interior] - expected[interior][np.newaxis, :]))
    check(
        8,
        gf_err <= 1e-10 and const_exact and ramp_err <= 1e-6,
        f"guided filter vs oracle {gf_err:.2e} <= 1e-10; constants exact: {const_exact}; "
        f"ramp interior err {ramp_err:.2e} <= 1e-6",
    )


def test_criterion_9_determinism(tmp_path):
    """Two identically-seeded upsample runs write byte-identical PFMs."""
    scene_dir = tmp_path / "scene"
    assert main(
        ["synth", "--kind", "two_tone", "--size", "32", "--factor", "4", "--out", str(scene_dir)]
    ) == 0
    payloads = []
    for name in ("a.pfm", "b.pfm"):
        out = tmp_path / name
        rc = main(
            [
                "upsample",
                "--source", str(scene_dir / "source.pfm"),
                "--guide", str(scene_dir / "guide.png"),
                "--out", str(out),
                "--iters", "200",
                "--width", "8",
                "--seed", "17",
            ]
        )
        assert rc == 0
        payloads.append(out.read_bytes())
    check(9, payloads[0] == payloads[1], f"{len(payloads[0])} bytes, identical reruns")


def test_criterion_10_bench_end_to_end(tmp_path):
    """bench reports all three methods over a triplet directory at factor 8."""
    data = tmp_path / "data"
    data.mkdir()
    assert main(
        ["synth", "--kind", "two_tone", "--size", "64", "--factor", "8",
         "--out", str(data / "scene_a")]
    ) == 0
    rc = main(
        [
            "bench",
            "--data", str(data),
            "--out", str(tmp_path / "bench"),
            "--factor", "8",
            "--iters", "300",
            "--width", "8",
            "--delta", str(DELTA),
        ]
    )
    lines = (tmp_path / "bench.csv").read_text().splitlines()
    header_ok = lines[0] == "scene,method,status,mse,mae,pbp"
    methods = {line.split(",")[1] for line in lines[1:]}
    rows_ok = {"ours", "bicubic", "guided_filter"}.issubset(methods)
    agg_ok = sum(1 for line in lines[1:] if line.startswith("(")) == 6
    check(
        10,
        rc == 0 and header_ok and rows_ok and agg_ok,
        f"exit 0, schema ok, methods {sorted(methods)}, aggregate rows present",
    )

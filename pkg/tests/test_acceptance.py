"""Acceptance gate: one test per release criterion, each printing PASS/FAIL.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines. Tolerances are fixed here and must not be loosened.
"""

import json
import math
import time

import numpy as np

import blurlab as bl
from blurlab.cli import main
from blurlab.kernels import rasterize_kernel, support_bbox
from blurlab.seeding import derive_seed
from blurlab.trajectory import TrajectoryParams, sample_trajectory


def _report(name: str, ok: bool) -> None:
    print(f"{'PASS' if ok else 'FAIL'}: {name}")
    assert ok, name


def test_determinism_gen_kernels(tmp_path):
    """Identical seeds and any job count produce byte-identical BFK1 files."""
    t0 = time.time()
    dirs = [tmp_path / n for n in ("a", "b", "c")]
    base = ["gen-kernels", "--p", "1", "--e", "5", "--count", "100", "--seed", "7"]
    assert main(base + ["--out", str(dirs[0]), "--jobs", "1"]) == 0
    elapsed_one_run = time.time() - t0
    assert main(base + ["--out", str(dirs[1]), "--jobs", "1"]) == 0
    assert main(base + ["--out", str(dirs[2]), "--jobs", "8"]) == 0
    names = sorted(p.name for p in dirs[0].iterdir())
    ok = len([n for n in names if n.endswith(".bfk")]) == 100
    for name in names:
        blobs = [(d / name).read_bytes() for d in dirs]
        ok = ok and blobs[0] == blobs[1] == blobs[2]
    ok = ok and elapsed_one_run < 10.0
    _report(f"determinism: 100 kernels byte-identical across reruns and jobs ({elapsed_one_run:.1f}s)", ok)


def test_paper_constants():
    """Published discretization: P values, E values, 96 steps, 128 support, 15 pairs."""
    ok = list(bl.ANXIETY_VALUES) == [0.005, 0.001, 0.00005]
    ok = ok and [p.anxiety for p in bl.PClass] == [0.005, 0.001, 0.00005]
    ok = ok and [e.exposure for e in bl.EClass] == [1 / 25, 1 / 10, 1 / 5, 1 / 2, 1]
    params = TrajectoryParams.for_class(bl.PClass.P1)
    ok = ok and params.n_steps == 96 and params.support == 128
    ok = ok and len(bl.ALL_PAIRS) == 15
    ok = ok and 15 * 12000 == 180000
    _report("paper constants: P/E values, trajectory length 96, support 128, 15 pairs", ok)


def test_corpus_math(tmp_path):
    """15 pairs x count kernels on disk (count 2 -> 30 files)."""
    manifest = bl.generate_corpus(2, 3, tmp_path / "corpus")
    files = list((tmp_path / "corpus").glob("*.bfk"))
    ok = len(files) == 30 and len(manifest["kernels"]) == 30 and manifest["complete"]
    _report("corpus math: per_pair_count=2 yields 30 kernel files over 15 pairs", ok)


def test_normalization_and_centering():
    """500+ random centered kernels: unit sum within 1e-6, barycenter within 0.05 px."""
    ok = True
    count = 0
    for i in range(510):
        p = bl.PClass(i % 3)
        e = bl.EClass((i // 3) % 5)
        k = bl.generate_kernel(p, e, derive_seed(2024, i))
        bx, by = bl.barycenter(k.weights)
        cx, cy = k.center
        ok = ok and abs(float(k.weights.sum()) - 1.0) <= 1e-6
        ok = ok and math.hypot(bx - cx, by - cy) <= 0.05
        count += 1
    _report(f"normalization & centering: {count} kernels, 100% within tolerances", ok)


def test_exposure_prefix_monotonicity():
    """Support bbox of each shorter exposure nests inside every longer one."""
    ok = True
    for i in range(100):
        params = TrajectoryParams.for_class(bl.PClass(i % 3))
        traj = sample_trajectory(params, 5000 + i)
        boxes = [support_bbox(rasterize_kernel(traj, e).weights, 0.0) for e in bl.EClass]
        for shorter, longer in zip(boxes[:-1], boxes[1:]):
            ok = ok and (
                longer[0] <= shorter[0]
                and shorter[1] <= longer[1]
                and longer[2] <= shorter[2]
                and shorter[3] <= longer[3]
            )
    _report("exposure prefix monotonicity: 100 trajectories, exact nesting E1..E5", ok)


def test_anisotropy_ordering():
    """Rectilinear P3 kernels are more eccentric than erratic P1 kernels."""
    medians = {}
    for p in (bl.PClass.P1, bl.PClass.P3):
        eccs = []
        for seed in range(200):
            k = bl.generate_kernel(p, bl.EClass.E5, derive_seed(777, int(p), seed))
            eccs.append(bl.kernel_spreads(k).eccentricity)
        medians[p] = float(np.median(eccs))
    ok = medians[bl.PClass.P3] > medians[bl.PClass.P1]
    _report(
        f"anisotropy ordering: median ecc P3 {medians[bl.PClass.P3]:.1f} > P1 {medians[bl.PClass.P1]:.1f}",
        ok,
    )


def test_convolution_oracle():
    """Sparse engine vs dense oracle on 100 random cases; identities exact."""
    rng = np.random.default_rng(99)
    worst = 0.0
    for _ in range(100):
        h = int(rng.integers(2, 33))
        w = int(rng.integers(2, 33))
        c = int(rng.choice([1, 3]))
        img = rng.random((h, w, c) if c == 3 else (h, w)).astype(np.float32)
        kh = int(rng.integers(1, 16))
        kw = int(rng.integers(1, 16))
        kern = rng.random((kh, kw))
        kern /= kern.sum()
        k = bl.BlurKernel(kern, bl.KernelMeta())
        dense = bl.convolve_dense_oracle(img, k)
        sparse = bl.convolve_reflect(img, bl.sparsify_kernel(k, threshold=0.0))
        worst = max(worst, float(np.abs(dense - sparse).max()))
    ok = worst <= 1e-5

    delta = bl.SparseKernel(np.array([0]), np.array([0]), np.array([1.0]))
    img = rng.random((16, 24, 3)).astype(np.float32)
    ok = ok and np.array_equal(bl.convolve_reflect(img, delta), img)

    k = bl.generate_kernel(bl.PClass.P2, bl.EClass.E5, 4)
    const = np.full((20, 20), 0.375, dtype=np.float32)
    out = bl.convolve_reflect(const, bl.sparsify_kernel(k))
    ok = ok and float(np.abs(out - 0.375).max()) <= 1e-6
    _report(f"convolution oracle: 100 cases max |sparse - dense| = {worst:.2e} <= 1e-5", ok)


def test_box_expansion_fuzz():
    """10,000 random (box, extents): containment plus exact algebraic margins."""
    rng = np.random.default_rng(55)
    ok = True
    for _ in range(10000):
        x, y = (int(v) / 4 for v in rng.integers(-4000, 4000, 2))
        w, h = (int(v) / 4 for v in rng.integers(1, 400, 2))
        b = bl.BoundingBox(x, y, w, h)
        e = bl.Extents(
            -int(rng.integers(0, 64)),
            int(rng.integers(0, 64)),
            -int(rng.integers(0, 64)),
            int(rng.integers(0, 64)),
        )
        big = bl.expand_box(b, e)
        ok = ok and big.contains(b)
        ok = ok and b.x - big.x == abs(e.x_minus)
        ok = ok and (big.x + big.w) - (b.x + b.w) == abs(e.x_plus)
        ok = ok and b.y - big.y == abs(e.y_minus)
        ok = ok and (big.y + big.h) - (b.y + b.h) == abs(e.y_plus)
        if not ok:
            break
    _report("box expansion fuzz: 10,000 pairs, containment and exact margins", ok)


def test_stats_merge():
    """Exact worked examples plus convexity over 1,000 fuzzed vectors."""
    s = bl.ChannelStats(mu=[0.0], var=[1.0])
    t = bl.ChannelStats(mu=[17.0], var=[18.0])
    merged = bl.merge_batch_stats(s, t, 16, 1)
    ok = merged.mu[0] == 1.0 and merged.var[0] == 2.0
    s2 = bl.ChannelStats(mu=[2.0], var=[1.0])
    t2 = bl.ChannelStats(mu=[6.0], var=[3.0])
    eq = bl.merge_batch_stats(s2, t2, 5, 5)
    ok = ok and eq.mu[0] == 4.0 and eq.var[0] == 2.0

    rng = np.random.default_rng(66)
    for _ in range(1000):
        n = int(rng.integers(1, 32))
        src = bl.ChannelStats(mu=rng.normal(size=n), var=rng.random(n))
        tgt = bl.ChannelStats(mu=rng.normal(size=n), var=rng.random(n))
        out = bl.merge_batch_stats(src, tgt, float(rng.uniform(0.5, 64)), float(rng.uniform(0.5, 64)))
        ok = ok and np.all(out.mu >= np.minimum(src.mu, tgt.mu) - 1e-12)
        ok = ok and np.all(out.mu <= np.maximum(src.mu, tgt.mu) + 1e-12)
        ok = ok and np.all(out.var >= np.minimum(src.var, tgt.var) - 1e-12)
        ok = ok and np.all(out.var <= np.maximum(src.var, tgt.var) + 1e-12)
    _report("statistics merge: worked examples exact, 1,000 fuzzed convexity checks", ok)


def _oracle_ap(preds, gts, thr):
    def iou_pure(a, b):
        iw = min(a.x + a.w, b.x + b.w) - max(a.x, b.x)
        ih = min(a.y + a.h, b.y + b.h) - max(a.y, b.y)
        if iw <= 0 or ih <= 0:
            return 0.0
        inter = iw * ih
        return inter / (a.w * a.h + b.w * b.h - inter)

    order = sorted(range(len(preds)), key=lambda i: (-(preds[i].score or 0.0), i))
    matched = set()
    flags = []
    for i in order:
        best_j, best_iou = None, 0.0
        for j in range(len(gts)):
            if j in matched or gts[j].image_id != preds[i].image_id:
                continue
            ov = iou_pure(preds[i].bbox, gts[j].bbox)
            if ov >= thr and ov > best_iou:
                best_j, best_iou = j, ov
        flags.append(best_j is not None)
        if best_j is not None:
            matched.add(best_j)
    tp = 0
    precisions, recalls = [], []
    for rank, f in enumerate(flags, start=1):
        tp += int(f)
        precisions.append(tp / rank)
        recalls.append(tp / len(gts))
    total = 0.0
    for ri in range(101):
        r = ri / 100
        best = 0.0
        for p, rec in zip(precisions, recalls):
            if rec >= r and p > best:
                best = p
        total += best
    return total / 101


def test_map_harness():
    """Self-match 1.0 exactly, empty 0.0, 50 random scenarios vs AP oracle."""
    from blurlab.labels import Annotation, BoundingBox, Category, Dataset, ImageInfo

    images = tuple(ImageInfo(i, f"{i}.png", 100, 100) for i in range(5))
    cats = (Category(1, "a"), Category(2, "b"))
    gts = (
        Annotation(0, 1, BoundingBox(10, 10, 10, 10)),
        Annotation(1, 2, BoundingBox(5, 5, 20, 10)),
        Annotation(2, 1, BoundingBox(40, 40, 8, 8)),
    )
    ds = Dataset(images, gts, cats)
    preds = [Annotation(g.image_id, g.category_id, g.bbox, score=1.0) for g in gts]
    ok = bl.evaluate_map(preds, ds).map_at[0.5] == 1.0
    ok = ok and bl.evaluate_map([], ds).map_at[0.5] == 0.0

    rng = np.random.default_rng(13)
    worst = 0.0
    scenarios = 0
    while scenarios < 50:
        n_img = int(rng.integers(1, 6))
        gtl, predl = [], []
        for img in range(n_img):
            for _ in range(int(rng.integers(0, 4))):
                x, y = (int(v) for v in rng.integers(0, 60, 2))
                w, h = (int(v) for v in rng.integers(5, 30, 2))
                gtl.append(Annotation(img, 1, BoundingBox(x, y, w, h)))
            for _ in range(int(rng.integers(0, 5))):
                x, y = (int(v) for v in rng.integers(0, 60, 2))
                w, h = (int(v) for v in rng.integers(5, 30, 2))
                predl.append(Annotation(img, 1, BoundingBox(x, y, w, h), score=float(rng.random())))
        if not gtl:
            continue
        scenarios += 1
        got = bl.evaluate_class_ap(predl, gtl, 0.5)
        worst = max(worst, abs(got - _oracle_ap(predl, gtl, 0.5)))
    ok = ok and worst <= 1e-9
    _report(f"mAP harness: self-match 1.0, empty 0.0, 50 scenarios |err| = {worst:.1e} <= 1e-9", ok)


def test_end_to_end(tmp_path, detection_fixture):
    """blur-dataset -> expand-labels -> evaluate on the 10-image fixture."""
    t0 = time.time()
    out = tmp_path / "blurred"
    code = main(
        [
            "blur-dataset",
            "--annotations",
            str(detection_fixture["gt"]),
            "--images",
            str(detection_fixture["images"]),
            "--out",
            str(out),
            "--policy",
            "generalist",
            "--seed",
            "11",
        ]
    )
    manifest = json.loads((out / "manifest.json").read_text())
    sharp = [e for e in manifest["entries"] if e["blur_class"] == "sharp"]
    ok = code == 0 and len(sharp) == 1 and len(manifest["entries"]) == 10

    expanded = tmp_path / "expanded.json"
    code = main(
        [
            "expand-labels",
            "--annotations",
            str(detection_fixture["gt"]),
            "--manifest",
            str(out / "manifest.json"),
            "--out",
            str(expanded),
        ]
    )
    ok = ok and code == 0

    preds = tmp_path / "preds.json"
    exp = json.loads(expanded.read_text())
    preds.write_text(
        json.dumps(
            [
                {"image_id": a["image_id"], "category_id": a["category_id"], "bbox": a["bbox"], "score": 1.0}
                for a in exp["annotations"]
            ]
        )
    )
    report_path = tmp_path / "report.json"
    code = main(
        ["evaluate", "--gt", str(expanded), "--pred", str(preds), "--iou", "0.5", "--out", str(report_path)]
    )
    report = json.loads(report_path.read_text())
    elapsed = time.time() - t0
    ok = ok and code == 0 and report["map"] == 1.0 and elapsed < 60.0
    _report(f"end-to-end: 1 sharp / 9 blurred, expanded self-match mAP 1.0 ({elapsed:.1f}s < 60s)", ok)


def test_squint_criteria():
    """Isotropic factors, round-trip error bound, brute-force covariance match."""
    iso = bl.AxisSpreads(s_x=2.0, s_y=2.0, theta=0.0, sigma_major=2.0, sigma_minor=2.0)
    ok = bl.squint_factors(iso) == (1.0, 1.0)

    n = 64
    yy, xx = np.mgrid[0:n, 0:n]
    g = (0.5 + 0.25 * np.sin(2 * np.pi * xx / n) + 0.25 * np.cos(2 * np.pi * yy / n)).astype(np.float32)
    back = bl.unsquint_grid(bl.resample_grid(g, 0.5, 1.0), 0.5, 1.0, n, n)
    err = float(np.abs(back - g).max())
    ok = ok and err < 0.02

    def spreads_oracle(w):
        total = mx = my = 0.0
        for y in range(w.shape[0]):
            for x in range(w.shape[1]):
                v = float(w[y, x])
                total += v
                mx += v * x
                my += v * y
        mx /= total
        my /= total
        cxx = cyy = 0.0
        for y in range(w.shape[0]):
            for x in range(w.shape[1]):
                v = float(w[y, x])
                cxx += v * (x - mx) ** 2
                cyy += v * (y - my) ** 2
        return math.sqrt(cxx / total), math.sqrt(cyy / total)

    k = bl.generate_kernel(bl.PClass.P1, bl.EClass.E5, 31)
    sp = bl.kernel_spreads(k)
    sx, sy = spreads_oracle(k.weights)
    ok = ok and abs(sp.s_x - sx) <= 1e-9 and abs(sp.s_y - sy) <= 1e-9
    _report(f"squint: isotropic (1,1), round-trip err {err:.4f} < 0.02, spreads match oracle", ok)

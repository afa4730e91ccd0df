"""End-to-end acceptance suite.

One test per acceptance criterion; each prints a single PASS/FAIL line so the
suite doubles as a checklist when run with `pytest -v` (or `-s`).
"""
import json
import time

import numpy as np
import pytest

from motionstitch import (MotionSequence, SpliceConfig, StitchJob, ape, ave,
                          assemble_long, bezier_eval, build_transition,
                          cfg_predict, foot_slide_score, forward_sample,
                          make_schedule, refine_transition_feet, root_align,
                          stitch, train_stitcher, transition_distance)
from motionstitch.cli import main
from motionstitch.diffusion import Denoiser, masked_mse_loss_and_grads
from motionstitch.footfix import BezierArc, FootRefineConfig
from motionstitch.metrics import mean_frames_from_totals
from motionstitch.splice import max_interframe_displacement
from motionstitch.synthetic import (STYLES, SyntheticRecipe, default_skeleton,
                                    generate_clip, make_training_windows)

SK = default_skeleton()


def report(criterion: str, ok: bool) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {criterion}")
    assert ok


def mixed_corpus(n, rng_seed, lo=50, hi=200):
    rng = np.random.default_rng(rng_seed)
    return [generate_clip(SyntheticRecipe(STYLES[int(rng.integers(4))],
                                          int(rng.integers(lo, hi + 1)),
                                          int(rng.integers(2**31))))
            for _ in range(n)]


def test_criterion_1_splice_pipeline():
    """200-clip corpus: >= 20 outputs, 600..935 frames, exact prefix sums,
    C0 continuity at junctions, under one minute."""
    corpus = mixed_corpus(200, rng_seed=101)
    cfg = SpliceConfig(rng_seed=42)
    t0 = time.monotonic()
    results, summary = assemble_long(corpus, cfg, n_chains=30)
    elapsed = time.monotonic() - t0

    ok = len(results) >= 20 and elapsed < 60.0
    for am, trace in results:
        ok &= 600 <= am.F <= 935
        lens = [corpus[cid].F for cid in trace.source_clip_ids]
        ok &= np.cumsum(lens).tolist() == [s.end_frame for s in am.script.segments]
        intra = 1.5 * max(max_interframe_displacement(corpus[cid].motion.frames)
                          for cid in trace.source_clip_ids)
        for j in trace.junction_frames:
            window = am.motion.frames[max(j - 1, 0):j + cfg.window + 1]
            ok &= max_interframe_displacement(window) <= intra
    report(f"1 splice pipeline ({len(results)} chains, {elapsed:.1f}s)", ok)


def test_criterion_2_interpolation_exactness():
    """build_transition matches the independent interpolation formula to
    1e-12 on 100 random pairs."""
    rng = np.random.default_rng(202)
    cfg = SpliceConfig(rng_seed=0)
    worst = 0.0
    for _ in range(100):
        a = generate_clip(SyntheticRecipe(STYLES[int(rng.integers(4))],
                                          int(rng.integers(10, 80)),
                                          int(rng.integers(2**31))))
        b = generate_clip(SyntheticRecipe(STYLES[int(rng.integers(4))],
                                          int(rng.integers(10, 80)),
                                          int(rng.integers(2**31))))
        bm = root_align(a.motion, b.motion)
        w = build_transition(a.motion, bm, cfg)
        i_s = a.motion.frames[a.F - cfg.tail_frames]
        i_e = bm.frames[cfg.head_frames - 1]
        worst = max(worst, np.abs(w[0] - i_s).max(), np.abs(w[-1] - i_e).max())
        for i in range(10):
            expected = (1 - i / 9) * i_s + (i / 9) * i_e
            worst = max(worst, np.abs(w[i] - expected).max())
    report(f"2 interpolation exactness (worst dev {worst:.2e})", worst <= 1e-12)


def test_criterion_3_bezier_and_slide():
    """Bezier endpoint/midpoint identities; refined frames equal bezier_eval
    samples; slide score strictly decreases on 100/100 synthetic cases."""
    rng = np.random.default_rng(303)
    ok = True
    for _ in range(100):
        p = rng.normal(size=(3, 3))
        a = BezierArc(p[0], p[1], p[2])
        ok &= np.abs(bezier_eval(a, 0.0) - p[0]).max() <= 1e-12
        ok &= np.abs(bezier_eval(a, 1.0) - p[2]).max() <= 1e-12
        mid = 0.25 * p[0] + 0.5 * p[1] + 0.25 * p[2]
        ok &= np.abs(bezier_eval(a, 0.5) - mid).max() <= 1e-12

    lf, rf = SK.left_foot_idx, SK.right_foot_idx
    la, ra = SK.parent[lf], SK.parent[rf]
    wins = 0
    for _ in range(100):
        slide = (float(rng.uniform(0.2, 0.6)), 0.0, float(rng.uniform(-0.2, 0.2)))
        window = int(rng.integers(8, 17))
        pose = np.zeros((22, 3))
        pose[:, 1] = 1.0
        pose[lf] = (0.0, 0.0, 0.1)
        pose[rf] = (0.0, 0.0, -0.1)
        pose[la] = pose[lf] + (0, 0.1, 0)
        pose[ra] = pose[rf] + (0, 0.1, 0)
        n = window + 6
        frames = np.repeat(pose[None], n, axis=0)
        start = (n - window) // 2
        w = np.linspace(0.0, 1.0, window)[:, None]
        for f, anc in ((lf, la), (rf, ra)):
            end = frames[0, f] + np.asarray(slide)
            path = (1 - w) * frames[0, f] + w * end
            frames[start:start + window, f] = path
            frames[start + window:, f] = end
            frames[start:start + window, anc] = path + (0, 0.1, 0)
            frames[start + window:, anc] = end + (0, 0.1, 0)
        seq = MotionSequence(SK, frames)
        cfg = FootRefineConfig()
        out = refine_transition_feet(seq, start, window, cfg)
        # refined first-mover trajectory equals bezier_eval samples exactly;
        # the first mover is the foot with the larger displacement (tie: left)
        d_l = np.linalg.norm(seq.frames[start + window - 1, lf]
                             - seq.frames[start, lf])
        d_r = np.linalg.norm(seq.frames[start + window - 1, rf]
                             - seq.frames[start, rf])
        first = lf if d_l >= d_r else rf
        p0 = seq.frames[start, first]
        p2 = seq.frames[start + window - 1, first]
        arc = BezierArc(p0, (p0 + p2) / 2 + (0, cfg.clearance, 0), p2)
        len_a = -(-window // 2)  # ceil(split * window) with split = 0.5
        for i in range(len_a):
            ok &= np.array_equal(out.frames[start + i, first],
                                 bezier_eval(arc, i / (len_a - 1)))
        wins += foot_slide_score(out, start, window) < \
            foot_slide_score(seq, start, window)
    report(f"3 bezier + slide score ({wins}/100 improved)", ok and wins == 100)


def test_criterion_4_schedule_and_forward_moments():
    """Default schedule terminal alpha-bar < 1e-4; forward_sample Monte-Carlo
    mean/variance within 3 standard errors at t in {1, 500, 1000}."""
    s = make_schedule()
    ok = s.alpha_bar[-1] < 1e-4
    x0 = 0.7
    n = 10_000
    for t in (1, 500, 1000):
        rng = np.random.default_rng(400 + t)
        draws = forward_sample(np.full(n, x0), t, rng.standard_normal(n), s)
        mean_exp = np.sqrt(s.alpha_bar[t - 1]) * x0
        var_exp = 1.0 - s.alpha_bar[t - 1]
        ok &= abs(draws.mean() - mean_exp) <= 3 * np.sqrt(var_exp / n)
        ok &= abs(draws.var() - var_exp) <= 3 * var_exp * np.sqrt(2.0 / (n - 1))
    report(f"4 schedule (abar_T = {s.alpha_bar[-1]:.2e}) + forward moments", ok)


def test_criterion_5_cfg_identities():
    """Guidance identities hold to exact float equality on random inputs."""
    rng = np.random.default_rng(505)
    d = Denoiser(4, 2, ["walk", "wave"], hidden=(8, 8), time_dim=8, cond_dim=4,
                 rng=rng)
    d.set_flat_params(rng.normal(scale=0.3, size=d.flat_params().size))
    sched = make_schedule(T=50)
    ok = True
    for _ in range(50):
        x = rng.normal(size=(4, 2, 3))
        t = int(rng.integers(1, 51))
        c = ["walk", "wave"][int(rng.integers(2))]
        ok &= np.array_equal(cfg_predict(d, x, t, c, 1.0, sched),
                             d.predict(x, t, c, sched))
        ok &= np.array_equal(cfg_predict(d, x, t, c, 0.0, sched),
                             d.predict(x, t, None, sched))
        ok &= np.array_equal(cfg_predict(d, x, t, None, 2.5, sched),
                             d.predict(x, t, None, sched))
    report("5 classifier-free guidance identities (exact equality)", ok)


def test_criterion_6_gradient_check():
    """Analytic gradients match central differences to relative error 1e-4
    on every parameter of a small fixed instance."""
    rng = np.random.default_rng(606)
    d = Denoiser(4, 2, ["walk", "wave"], hidden=(6, 6), time_dim=8, cond_dim=4,
                 rng=rng)
    d.set_flat_params(rng.normal(scale=0.3, size=d.flat_params().size))
    sched = make_schedule(T=10)
    b = 3
    x_t = rng.normal(size=(b, 4, 2, 3))
    t = rng.integers(1, 11, size=b)
    cid = np.array([0, 1, 2])
    eps = rng.normal(size=x_t.shape)
    mask = np.zeros((b, 4), dtype=bool)
    mask[:, 1:3] = True
    _, grads = masked_mse_loss_and_grads(d, x_t, t, cid, eps, mask, sched)
    ana = np.concatenate([grads[k].ravel() for k in
                          ("w1", "b1", "w2", "b2", "w3", "b3", "cond_emb")])
    flat = d.flat_params()
    worst = 0.0
    # h balances truncation against round-off at this loss scale (~1e3)
    for i in range(flat.size):
        h = 1e-4 * max(1.0, abs(flat[i]))
        v = flat.copy()
        v[i] += h
        d.set_flat_params(v)
        lp, _ = masked_mse_loss_and_grads(d, x_t, t, cid, eps, mask, sched)
        v[i] -= 2 * h
        d.set_flat_params(v)
        lm, _ = masked_mse_loss_and_grads(d, x_t, t, cid, eps, mask, sched)
        d.set_flat_params(flat)
        num = (lp - lm) / (2 * h)
        worst = max(worst, abs(ana[i] - num) / max(abs(ana[i]), abs(num), 1e-8))
    report(f"6 gradient check (worst rel err {worst:.2e})", worst <= 1e-4)


def test_criterion_7_toy_training_and_stitching():
    """Train on 500 windows in under 30 minutes; loss halves; stitched
    junctions beat naive concatenation on transition_distance in >= 90% of
    50 held-out pairs; unmasked frames bit-identical in all runs."""
    rng = np.random.default_rng(707)
    corpus = mixed_corpus(40, rng_seed=708, lo=60, hi=120)
    windows, labels = make_training_windows(corpus, 500, tail=5, transition=5,
                                            head=5, rng=rng)
    vocab = sorted({lab for lab in labels if lab is not None})
    sched = make_schedule(T=200, beta_start=1e-3, beta_end=0.05)
    t0 = time.monotonic()
    d, hist = train_stitcher(windows, labels, sched, epochs=60, vocab=vocab,
                             mask_fraction=5 / 15, rng=rng)
    train_time = time.monotonic() - t0
    loss_ok = (train_time < 1800.0
               and np.median(hist[-10:]) < 0.5 * np.median(hist[:10]))

    held_out = mixed_corpus(20, rng_seed=709, lo=60, hi=120)
    pair_rng = np.random.default_rng(710)
    wins, clamp_ok = 0, True
    for _ in range(50):
        a = held_out[int(pair_rng.integers(len(held_out)))]
        b = held_out[int(pair_rng.integers(len(held_out)))]
        aligned = root_align(a.motion, b.motion)
        naive = MotionSequence(SK, np.concatenate([a.motion.frames,
                                                   aligned.frames]))
        naive_d = transition_distance(naive, a.F - 1)

        job = StitchJob(prev_tail=a.motion.frames[-5:],
                        next_head=aligned.frames[:5],
                        condition=b.script.segments[0].text,
                        transition_len=5, guidance_scale=1.0)
        trans, assembled = stitch(job, d, sched, pair_rng)
        clamp_ok &= np.array_equal(assembled[:5], a.motion.frames[-5:])
        clamp_ok &= np.array_equal(assembled[-5:], aligned.frames[:5])
        full = MotionSequence(SK, np.concatenate([a.motion.frames, trans,
                                                  aligned.frames]))
        stitched_d = max(transition_distance(full, j)
                         for j in range(a.F - 1, a.F + 5))
        wins += stitched_d < naive_d
    ok = loss_ok and wins >= 45 and clamp_ok
    report(f"7 toy training ({train_time:.0f}s, loss {hist[0]:.3g}->"
           f"{hist[-1]:.3g}) + stitching ({wins}/50 beat naive)", ok)


def test_criterion_8_metric_invariants():
    """Zero-cases and translation invariance of transition_distance, APE and
    AVE on 1000 randomized instances."""
    rng = np.random.default_rng(808)
    ok = True
    for _ in range(1000):
        f = int(rng.integers(3, 12))
        s = MotionSequence(SK, rng.normal(size=(f, 22, 3)))
        rep = ape(s, s)
        ok &= all(v == 0.0 for v in rep.as_dict().values())
        rep = ave(s, s)
        ok &= all(v == 0.0 for v in rep.as_dict().values())
        shift = rng.normal(size=3)
        shifted = s.with_frames(s.frames + shift)
        ok &= all(v <= 1e-9 for v in ave(s, shifted).as_dict().values())
        ok &= ape(s, shifted).mean_local <= 1e-9
        # pure root translation between adjacent frames scores ~zero
        pose = rng.normal(size=(22, 3))
        two = MotionSequence(SK, np.stack([pose, pose + shift]))
        ok &= transition_distance(two, 0) <= 1e-9
    report("8 metric zero / invariance suite (1000 instances)", ok)


def test_criterion_9_table_arithmetic():
    """Corpus bookkeeping: 35,000 motions over 330.16 hours at 20 fps imply
    a mean clip length inside the 600..935 output band."""
    mean = mean_frames_from_totals(35_000, 330.16, 20.0)
    report(f"9 corpus totals arithmetic (mean {mean:.2f} frames)",
           600.0 <= mean <= 935.0)


def run_pipeline(base, seed):
    base.mkdir()
    corpus = base / "corpus"
    long_dir = base / "long"
    cfg = base / "cfg.json"
    cfg.write_text(json.dumps({"min_output_frames": 300, "T": 50}))
    assert main(["gen-synthetic", "--out", str(corpus), "--count", "20",
                 "--min-frames", "80", "--max-frames", "160",
                 "--seed", str(seed)]) == 0
    assert main(["splice", "--in", str(corpus), "--out", str(long_dir),
                 "--chains", "2", "--seed", str(seed),
                 "--config", str(cfg)]) == 0
    long0 = sorted(long_dir.glob("long_*.txt"))[0]
    trace0 = sorted(long_dir.glob("*.trace.json"))[0]
    assert main(["refine-feet", "--in", str(long0), "--trace", str(trace0),
                 "--out", str(base / "refined.txt"), "--seed", str(seed)]) == 0
    assert main(["train-stitcher", "--in", str(corpus), "--out",
                 str(base / "model.ckpt"), "--epochs", "2", "--windows", "40",
                 "--config", str(cfg), "--seed", str(seed)]) == 0
    clips = sorted(corpus.glob("*.txt"))
    assert main(["stitch", "--prev", str(clips[0]), "--next", str(clips[1]),
                 "--model", str(base / "model.ckpt"),
                 "--out", str(base / "stitched.txt"), "--seed", str(seed)]) == 0
    assert main(["eval", "--gt", str(long0), "--gen", str(base / "refined.txt"),
                 "--trace", str(trace0), "--seed", str(seed)]) == 0
    return {p.relative_to(base): p.read_bytes()
            for p in sorted(base.rglob("*")) if p.is_file()}


def test_criterion_10_pipeline_determinism(tmp_path, capsys):
    """Two seeded end-to-end runs produce byte-identical artifacts and
    identical console reports."""
    a = run_pipeline(tmp_path / "run_a", seed=99)
    text_a = capsys.readouterr().out.replace(str(tmp_path / "run_a"), "BASE")
    b = run_pipeline(tmp_path / "run_b", seed=99)
    text_b = capsys.readouterr().out.replace(str(tmp_path / "run_b"), "BASE")
    ok = list(a) == list(b) and all(a[k] == b[k] for k in a) and text_a == text_b
    report(f"10 pipeline determinism ({len(a)} artifacts byte-identical)", ok)

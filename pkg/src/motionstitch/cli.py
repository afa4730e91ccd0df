"""Command-line surface tying the modules into pipelines."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import diffusion, footfix, metrics, motionfile, splice, synthetic
from .core import AnnotatedMotion, MotionError, MotionSequence, Segment, TimedScript


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    with open(path) as f:
        cfg = json.load(f)
    if not isinstance(cfg, dict):
        raise MotionError(f"{path}: config must be a JSON object")
    return cfg


def _read_corpus(indir: str) -> tuple[list[AnnotatedMotion], list[str]]:
    paths = sorted(Path(indir).glob("*.txt"))
    if not paths:
        raise MotionError(f"no .txt motion files in {indir}")
    return [motionfile.read_file(p) for p in paths], [p.stem for p in paths]


def _splice_config(args, cfg: dict) -> splice.SpliceConfig:
    kwargs = {k: cfg[k] for k in (
        "min_clip_frames", "facing_cos_threshold", "tail_frames", "head_frames",
        "min_output_frames", "max_output_frames") if k in cfg}
    return splice.SpliceConfig(rng_seed=args.seed, **kwargs)


# ------------------------------------------------------------- subcommands

def cmd_gen_synthetic(args) -> int:
    cfg = _load_config(args.config)
    styles = (args.styles or cfg.get("styles", ",".join(synthetic.STYLES))).split(",")
    rng = np.random.default_rng(args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i in range(args.count):
        style = styles[int(rng.integers(len(styles)))]
        n = int(rng.integers(args.min_frames, args.max_frames + 1))
        clip = synthetic.generate_clip(
            synthetic.SyntheticRecipe(style, n, seed=int(rng.integers(2**31))))
        motionfile.write_file(out / f"clip_{i:04d}.txt", clip)
    print(f"wrote {args.count} clips to {out}")
    return 0


def cmd_filter(args) -> int:
    cfg = _load_config(args.config)
    corpus, names = _read_corpus(args.indir)
    scfg = _splice_config(args, cfg)
    if args.min_frames is not None:
        scfg = splice.SpliceConfig(min_clip_frames=args.min_frames, rng_seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    kept = 0
    for clip, name in zip(corpus, names):
        if clip.F >= scfg.min_clip_frames:
            motionfile.write_file(out / f"{name}.txt", clip)
            kept += 1
    print(f"kept {kept}/{len(corpus)} clips (min {scfg.min_clip_frames} frames)")
    return 0


def cmd_splice(args) -> int:
    cfg = _load_config(args.config)
    corpus, names = _read_corpus(args.indir)
    scfg = _splice_config(args, cfg)
    corpus = splice.filter_min_length(corpus, scfg)
    results, summary = splice.assemble_long(corpus, scfg, args.chains, clip_ids=names)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i, (am, trace) in enumerate(results):
        motionfile.write_file(out / f"long_{i:04d}.txt", am)
        with open(out / f"long_{i:04d}.trace.json", "w") as f:
            json.dump({"source_clip_ids": list(trace.source_clip_ids),
                       "junction_frames": list(trace.junction_frames)},
                      f, indent=2)
            f.write("\n")
    print(f"emitted {summary.chains_emitted}/{summary.chains_attempted} chains "
          f"({summary.exhausted} exhausted)")
    return 0


def cmd_refine_feet(args) -> int:
    cfg = _load_config(args.config)
    am = motionfile.read_file(args.infile)
    with open(args.trace) as f:
        trace = json.load(f)
    fcfg = footfix.FootRefineConfig(
        clearance=cfg.get("clearance", args.clearance),
        split_ratio=cfg.get("split_ratio", args.split_ratio))
    motion = am.motion
    for junction in trace["junction_frames"]:
        motion = footfix.refine_transition_feet(motion, int(junction), args.window, fcfg)
    motionfile.write_file(args.out, AnnotatedMotion(motion, am.script))
    print(f"refined {len(trace['junction_frames'])} junctions -> {args.out}")
    return 0


def cmd_stats(args) -> int:
    corpus, _ = _read_corpus(args.indir)
    st = metrics.corpus_stats(corpus)
    if args.json:
        print(json.dumps({
            "n_motions": st.n_motions, "n_texts": st.n_texts,
            "total_hours": st.total_hours,
            "max_duration_s": st.max_duration_s, "min_duration_s": st.min_duration_s,
            "words_mean": st.words_mean, "words_median": st.words_median,
            "frame_histogram": st.frame_histogram,
            "actions_per_sequence_histogram": st.actions_per_sequence_histogram,
        }, indent=2))
    else:
        print(f"{'motions':<20}{st.n_motions}")
        print(f"{'texts':<20}{st.n_texts}")
        print(f"{'total hours':<20}{st.total_hours:.4f}")
        print(f"{'max duration (s)':<20}{st.max_duration_s:.2f}")
        print(f"{'min duration (s)':<20}{st.min_duration_s:.2f}")
        print(f"{'words mean':<20}{st.words_mean:.2f}")
        print(f"{'words median':<20}{st.words_median:.2f}")
        print(f"{'actions histogram':<20}{st.actions_per_sequence_histogram}")
    return 0


def cmd_train_stitcher(args) -> int:
    cfg = _load_config(args.config)
    corpus, _ = _read_corpus(args.indir)
    rng = np.random.default_rng(args.seed)
    windows, labels = synthetic.make_training_windows(
        corpus, args.windows, args.tail, args.frames, args.head, rng)
    vocab = sorted({lab for lab in labels if lab is not None})
    window_len = args.tail + args.frames + args.head
    mask_fraction = cfg.get("mask_fraction",
                            args.mask_fraction or args.frames / window_len)
    sched = diffusion.make_schedule(
        T=cfg.get("T", 1000),
        beta_start=cfg.get("beta_start", 1e-4),
        beta_end=cfg.get("beta_end", 0.02))
    d, history = diffusion.train_stitcher(
        windows, labels, sched, epochs=args.epochs, vocab=vocab,
        cond_dropout=cfg.get("cond_dropout", 0.10),
        mask_fraction=mask_fraction, rng=rng,
        batch_size=cfg.get("batch_size", 32), lr=cfg.get("lr", 1e-3))
    diffusion.save_checkpoint(args.out, d, sched)
    if args.loss_csv:
        with open(args.loss_csv, "w") as f:
            f.write("epoch,mean_loss\n")
            for e, loss in enumerate(history):
                f.write(f"{e},{loss!r}\n")
    print(f"trained {args.epochs} epochs on {len(windows)} windows; "
          f"final loss {history[-1]:.6f} -> {args.out}")
    return 0


def cmd_stitch(args) -> int:
    _load_config(args.config)
    prev = motionfile.read_file(args.prev)
    next_ = motionfile.read_file(args.next)
    d, sched = diffusion.load_checkpoint(args.model)
    aligned = splice.root_align(prev.motion, next_.motion)
    job = diffusion.StitchJob(
        prev_tail=prev.motion.frames[-args.tail:],
        next_head=aligned.frames[:args.head],
        condition=args.condition,
        transition_len=args.frames,
        guidance_scale=args.guidance_scale)
    rng = np.random.default_rng(args.seed)
    transition, _ = diffusion.stitch(job, d, sched, rng)
    frames = np.concatenate([prev.motion.frames, transition, aligned.frames])
    label = args.condition or "transition"
    segs = (prev.script.segments
            + (Segment(label, prev.F, prev.F + args.frames),)
            + next_.script.shifted(prev.F + args.frames).segments)
    am = AnnotatedMotion(
        MotionSequence(prev.motion.skeleton, frames, prev.motion.fps),
        TimedScript(segs))
    motionfile.write_file(args.out, am)
    print(f"stitched {args.frames}-frame transition -> {args.out}")
    return 0


def _print_report(name: str, rep: metrics.ApeAveReport) -> None:
    cols = rep.as_dict()
    print(f"{name:<6}" + "".join(f"{k:>14}" for k in cols))
    print(f"{'':<6}" + "".join(f"{v:>14.6f}" for v in cols.values()))


def cmd_eval(args) -> int:
    _load_config(args.config)
    if args.gt and args.gen:
        gt = motionfile.read_file(args.gt)
        gen = motionfile.read_file(args.gen)
        _print_report("APE", metrics.ape(gt.motion, gen.motion))
        _print_report("AVE", metrics.ave(gt.motion, gen.motion))
    if args.trace:
        target = args.gen or args.gt
        if not target:
            raise MotionError("--trace needs --gen or --gt to evaluate")
        am = motionfile.read_file(target)
        with open(args.trace) as f:
            junctions = json.load(f)["junction_frames"]
        for j in junctions:
            dist = metrics.transition_distance(am.motion, int(j))
            print(f"transition_distance @ {j}: {dist:.6f}")
    if not (args.gt and args.gen) and not args.trace:
        raise MotionError("nothing to evaluate: pass --gt and --gen, or --trace")
    return 0


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="motionstitch",
                                description="Long-motion assembly and stitching toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--config", default=None, help="JSON parameter overrides")
        sp.set_defaults(fn=fn)
        return sp

    sp = add("gen-synthetic", cmd_gen_synthetic, "emit a synthetic clip corpus")
    sp.add_argument("--out", required=True)
    sp.add_argument("--count", type=int, default=100)
    sp.add_argument("--styles", default=None)
    sp.add_argument("--min-frames", type=int, default=50)
    sp.add_argument("--max-frames", type=int, default=200)

    sp = add("filter", cmd_filter, "drop clips below the minimum length")
    sp.add_argument("--in", dest="indir", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--min-frames", type=int, default=None)

    sp = add("splice", cmd_splice, "assemble long sequences from a clip corpus")
    sp.add_argument("--in", dest="indir", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--chains", type=int, default=25)

    sp = add("refine-feet", cmd_refine_feet, "Bezier foot cleanup at traced junctions")
    sp.add_argument("--in", dest="infile", required=True)
    sp.add_argument("--trace", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--window", type=int, default=10)
    sp.add_argument("--clearance", type=float, default=0.05)
    sp.add_argument("--split-ratio", type=float, default=0.5)

    sp = add("stats", cmd_stats, "corpus statistics table")
    sp.add_argument("--in", dest="indir", required=True)
    sp.add_argument("--json", action="store_true")

    sp = add("train-stitcher", cmd_train_stitcher, "train the diffusion stitcher")
    sp.add_argument("--in", dest="indir", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--epochs", type=int, default=200)
    sp.add_argument("--windows", type=int, default=500)
    sp.add_argument("--tail", type=int, default=5)
    sp.add_argument("--head", type=int, default=5)
    sp.add_argument("--frames", type=int, default=5)
    sp.add_argument("--mask-fraction", type=float, default=None)
    sp.add_argument("--loss-csv", default=None)

    sp = add("stitch", cmd_stitch, "inpaint a transition between two clips")
    sp.add_argument("--prev", required=True)
    sp.add_argument("--next", required=True)
    sp.add_argument("--model", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--frames", type=int, default=5)
    sp.add_argument("--tail", type=int, default=5)
    sp.add_argument("--head", type=int, default=5)
    sp.add_argument("--condition", default=None)
    sp.add_argument("--guidance-scale", type=float, default=2.5)

    sp = add("eval", cmd_eval, "transition distance / APE / AVE between files")
    sp.add_argument("--gt", default=None)
    sp.add_argument("--gen", default=None)
    sp.add_argument("--trace", default=None)

    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (MotionError, ValueError, OSError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

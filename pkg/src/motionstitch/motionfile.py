"""Line-oriented text format for annotated motion files.

Human-diffable, bit-exact round trip for finite doubles (shortest repr).
Layout:

    MOTIONFILE v1
    fps <float>
    joints <J>
    names <J whitespace-free labels>
    parents <J ints, -1 for the root>
    special <root> <neck> <head> <left_foot> <right_foot>
    frames <F>
    <F lines of J*3 floats>
    script <K>
    <K lines: segment <start> <end> <text...>>
    END
"""
from __future__ import annotations

import math

import numpy as np

from .core import (AnnotatedMotion, MotionError, MotionSequence, Segment,
                   Skeleton, TimedScript)


class ParseError(MotionError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def serialize(am: AnnotatedMotion) -> str:
    sk = am.motion.skeleton
    lines = [
        "MOTIONFILE v1",
        f"fps {am.motion.fps!r}",
        f"joints {sk.joint_count}",
        "names " + " ".join(sk.joint_names),
        "parents " + " ".join(str(p) for p in sk.parent),
        f"special {sk.root_idx} {sk.neck_idx} {sk.head_idx} "
        f"{sk.left_foot_idx} {sk.right_foot_idx}",
        f"frames {am.motion.F}",
    ]
    for row in am.motion.frames.reshape(am.motion.F, -1):
        lines.append(" ".join(repr(v) for v in row.tolist()))
    lines.append(f"script {len(am.script.segments)}")
    for s in am.script.segments:
        lines.append(f"segment {s.start_frame} {s.end_frame} {s.text}")
    lines.append("END")
    return "\n".join(lines) + "\n"


class _Reader:
    def __init__(self, text: str):
        self.lines = text.splitlines()
        self.pos = 0

    def next(self) -> tuple[int, str]:
        if self.pos >= len(self.lines):
            raise ParseError(len(self.lines) + 1, "unexpected end of file")
        self.pos += 1
        return self.pos, self.lines[self.pos - 1]

    def expect_kv(self, key: str) -> tuple[int, list[str]]:
        no, line = self.next()
        parts = line.split()
        if not parts or parts[0] != key:
            raise ParseError(no, f"expected '{key} ...', got {line!r}")
        return no, parts[1:]


def _parse_float(tok: str, line_no: int) -> float:
    try:
        v = float(tok)
    except ValueError:
        raise ParseError(line_no, f"invalid number {tok!r}") from None
    if math.isnan(v) or math.isinf(v):
        raise ParseError(line_no, f"non-finite value {tok!r}")
    return v


def _parse_int(tok: str, line_no: int) -> int:
    try:
        return int(tok)
    except ValueError:
        raise ParseError(line_no, f"invalid integer {tok!r}") from None


def parse(text: str) -> AnnotatedMotion:
    r = _Reader(text)
    no, line = r.next()
    if line.strip() != "MOTIONFILE v1":
        raise ParseError(no, f"bad header {line!r}")

    no, vals = r.expect_kv("fps")
    fps = _parse_float(vals[0], no) if vals else _fail(no, "fps missing value")
    no, vals = r.expect_kv("joints")
    j = _parse_int(vals[0], no) if vals else _fail(no, "joints missing value")
    no, names = r.expect_kv("names")
    if len(names) != j:
        raise ParseError(no, f"expected {j} names, got {len(names)}")
    no, ptoks = r.expect_kv("parents")
    if len(ptoks) != j:
        raise ParseError(no, f"expected {j} parents, got {len(ptoks)}")
    parents = tuple(_parse_int(p, no) for p in ptoks)
    no, stoks = r.expect_kv("special")
    if len(stoks) != 5:
        raise ParseError(no, "special needs 5 indices: root neck head left_foot right_foot")
    root, neck, head, lf, rf = (_parse_int(s, no) for s in stoks)
    try:
        skeleton = Skeleton(tuple(names), parents, root, neck, head, lf, rf)
    except ValueError as e:
        raise ParseError(no, f"invalid skeleton: {e}") from None

    no, vals = r.expect_kv("frames")
    f = _parse_int(vals[0], no) if vals else _fail(no, "frames missing value")
    frames = np.empty((f, j * 3))
    for i in range(f):
        no, line = r.next()
        toks = line.split()
        if len(toks) != j * 3:
            raise ParseError(no, f"frame {i}: expected {j * 3} values, got {len(toks)}")
        frames[i] = [_parse_float(tok, no) for tok in toks]

    no, vals = r.expect_kv("script")
    k = _parse_int(vals[0], no) if vals else _fail(no, "script missing value")
    segs = []
    seg_lines = []
    for i in range(k):
        no, line = r.next()
        parts = line.split(maxsplit=3)
        if len(parts) < 4 or parts[0] != "segment":
            raise ParseError(no, f"expected 'segment <start> <end> <text>', got {line!r}")
        segs.append(Segment(parts[3], _parse_int(parts[1], no), _parse_int(parts[2], no)))
        seg_lines.append(no)
    no, line = r.next()
    if line.strip() != "END":
        raise ParseError(no, f"expected END, got {line!r}")

    try:
        script = TimedScript(tuple(segs))
    except ValueError as e:
        line_no = seg_lines[0] if seg_lines else no
        raise ParseError(line_no, f"invalid script: {e}") from None
    try:
        motion = MotionSequence(skeleton, frames.reshape(f, j, 3), fps)
        return AnnotatedMotion(motion, script)
    except ValueError as e:
        raise ParseError(no, str(e)) from None


def _fail(line_no: int, msg: str):
    raise ParseError(line_no, msg)


def write_file(path, am: AnnotatedMotion) -> None:
    with open(path, "w") as f:
        f.write(serialize(am))


def read_file(path) -> AnnotatedMotion:
    with open(path) as f:
        return parse(f.read())

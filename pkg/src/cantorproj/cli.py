"""Config-driven experiment runner.

Every subcommand reads a JSON config, resolves its seeds from one master
seed, runs, and writes ``manifest.json``, per-experiment CSV tables and
``summary.csv`` into the output directory. CSV bodies depend only on the
resolved config, so a run replayed from its manifest reproduces them byte
for byte.

Exit status: 0 all scored checks passed, 1 some check failed, 2 invalid
config, 3 a resource guard was exceeded.
"""
from __future__ import annotations

import argparse
import copy
import csv
import json
import math
import os
import platform
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path
from typing import Callable, Sequence

import jsonschema
import numpy as np

from . import __version__, _kernels, rng
from .cantor import generate, measure_mass
from .concentration import ROW_FIELDS, BoundParams, calibrate_R, line_audit, strip_audit
from .covering import (CoveringSpec, check_extraction, choose_nk, extract_cantor, aniso_experiment,
                       sample_covering)
from .dimension import closing_identity_check, direction_sweep, write_sweep_svg
from .errors import ExtractionInvariantError, GuardError
from .geometry import sample_boundary_lines
from .grid import GridSequence, Rect, check_depth
from .suite import check_hit_law, check_strip_family, check_length_to_count, check_mgf_chain, random_level_strip

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_GUARD = 0, 1, 2, 3
KINDS = ("cantor-sweep", "concentration-audit", "covering-extract", "aniso", "lemma-suite")
SUMMARY_FIELDS = ["check", "value", "threshold", "status", "note"]
RELAXED_LABEL = "relaxed: outside the proof constants"
MAX_POINTS = 1 << 24

# ---------------------------------------------------------------------------
# config schema

_SEEDS = {"oneOf": [{"type": "integer", "minimum": 1},
                    {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1}]}
_POS = {"type": "integer", "minimum": 1}
_SEQ = {
    "type": "object",
    "oneOf": [
        {"properties": {"M": {"type": "integer", "minimum": 2}, "N": _POS, "depth": _POS},
         "required": ["M", "N", "depth"], "additionalProperties": False},
        {"properties": {"M": {"type": "array", "items": {"type": "integer", "minimum": 2}, "minItems": 1},
                        "N": {"type": "array", "items": _POS, "minItems": 1}},
         "required": ["M", "N"], "additionalProperties": False},
    ],
}
_PARAMS = {"type": "object", "properties": {"t": {"type": "number"}, "eps": {"type": "number", "minimum": 0},
                                            "s": {"type": "number"}, "R": {"type": "number", "exclusiveMinimum": 0},
                                            "C0": {"type": "number", "exclusiveMinimum": 0}},
           "required": ["t", "eps"], "additionalProperties": False}
_RANGE = {"type": "array", "items": _POS, "minItems": 2, "maxItems": 2}
_LEVELS = {"type": "array", "items": _POS, "minItems": 1}
_BAND = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_FRACTION = {"type": "number", "minimum": 0, "maximum": 1}
_COMMON = {"kind": {"enum": list(KINDS)}, "seed": {"type": "integer", "minimum": 0}, "out": {"type": "string"},
           "threads": _POS, "seeds": _SEEDS}


def _obj(props: dict, required: Sequence[str] = ()) -> dict:
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


SCHEMAS = {
    "cantor-sweep": _obj({**_COMMON, "sequence": _SEQ, "depth": _POS, "K": {"type": "integer", "minimum": 2},
                          "eps_levels": _RANGE, "slope_band": _BAND, "min_pass_fraction": _FRACTION,
                          "svg": {"type": "boolean"}},
                         ["kind", "sequence", "K"]),
    "concentration-audit": _obj({**_COMMON, "sequence": _SEQ, "params": _PARAMS, "level": _POS,
                                 "calibrate": _obj({"seeds": _SEEDS, "levels": _LEVELS,
                                                    "coverage": {"type": "number", "exclusiveMinimum": 0,
                                                                 "maximum": 1},
                                                    "a_from": _POS}),
                                 "strips": {"type": "integer", "minimum": 0},
                                 "lines": {"type": "integer", "minimum": 0},
                                 "trials": {"type": "integer", "minimum": 100}},
                                ["kind", "sequence", "params", "level"]),
    "covering-extract": _obj({**_COMMON, "alpha": {"type": "number", "exclusiveMinimum": 0},
                              "scale": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                              "n1": {"type": "integer", "minimum": 2}, "k": {"type": "integer", "minimum": 1},
                              "factor": {"type": "number", "exclusiveMinimum": 0},
                              "relaxed_factor": {"type": "number", "exclusiveMinimum": 0},
                              "tie_rule": {"enum": ["lex", "random"]}, "max_horizon": _POS},
                             ["kind", "alpha", "n1", "k"]),
    "aniso": _obj({**_COMMON, "alpha": {"type": "number"}, "beta": {"type": "number"}, "N": _POS, "K": _POS,
                   "levels": _RANGE, "min_pass_fraction": _FRACTION},
                  ["kind", "alpha", "beta", "N"]),
    "lemma-suite": _obj({**_COMMON,
                         "normalization": _obj({"sequence": _SEQ, "seeds": _SEEDS}, ["sequence"]),
                         "strip_family": _obj({"M": _LEVELS, "strips": _POS}, ["M"]),
                         "length_to_count": _obj({"sequence": _SEQ, "depths": _LEVELS, "seeds": _SEEDS, "strips": _POS,
                                          "max_family_denom": _POS}, ["sequence"]),
                         "hit_law": _obj({"sequence": _SEQ, "level": _POS, "pairs": _POS, "draws": _POS},
                                         ["sequence"]),
                         "mgf_chain": _obj({"sequence": _SEQ, "level": _POS, "configs": _POS, "resamples": _POS},
                                           ["sequence"]),
                         "closing": _obj({"sequence": _SEQ, "params": _PARAMS, "depths": _LEVELS, "seeds": _SEEDS,
                                          "sample": _POS}, ["sequence", "params"])},
                        ["kind"]),
}


class ConfigError(ValueError):
    def __init__(self, message: str, path: Sequence = ()):
        super().__init__(message)
        self.path = [str(p) for p in path]


def validate(cfg) -> None:
    """Raise ConfigError unless `cfg` is a valid experiment config."""
    if not isinstance(cfg, dict) or not cfg:
        raise ConfigError("config must be a non-empty JSON object")
    kind = cfg.get("kind")
    if kind not in SCHEMAS:
        raise ConfigError(f"kind must be one of {', '.join(KINDS)}", ["kind"])
    try:
        jsonschema.validate(cfg, SCHEMAS[kind])
    except jsonschema.ValidationError as exc:
        raise ConfigError(exc.message, exc.absolute_path) from None
    for key in ("sequence",):
        if key in cfg:
            _sequence(cfg[key], (key,))
    for sect in ("normalization", "length_to_count", "hit_law", "mgf_chain", "closing"):
        if sect in cfg:
            _sequence(cfg[sect]["sequence"], (sect, "sequence"))


def _sequence(d: dict, where: Sequence = ("sequence",)) -> GridSequence:
    try:
        if isinstance(d["M"], int):
            return GridSequence.constant(d["M"], d["N"], d["depth"])
        return GridSequence(tuple(d["M"]), tuple(d["N"]))
    except ValueError as exc:
        raise ConfigError(str(exc), where) from None


def _params(d: dict, seq: GridSequence, R: float | None = None) -> BoundParams:
    d = dict(d)
    d.setdefault("s", seq.s)
    if R is not None:
        d["R"] = R
    try:
        return BoundParams(**d)
    except ValueError as exc:
        raise ConfigError(str(exc), ["params"]) from None


def resolve_seeds(spec, master: int, *tag: int) -> list[int]:
    """An explicit list is kept; a count k becomes k seeds split from the master seed."""
    if isinstance(spec, list):
        return [int(s) for s in spec]
    return [rng.derive_seed(master, *tag, i) for i in range(int(spec))]


def _guard_points(seq: GridSequence, depth: int) -> None:
    check_depth(seq, depth)
    if seq.count(depth) > MAX_POINTS:
        raise GuardError(f"P_{depth} = {seq.count(depth)} entries exceeds the guard {MAX_POINTS}")


def _pmap(fn: Callable, items: Sequence, threads: int) -> list:
    """Ordered map; the result does not depend on `threads`."""
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _status(ok: bool | None) -> str:
    return "UNSCORED" if ok is None else ("PASS" if ok else "FAIL")


def _srow(check: str, value, threshold, ok: bool | None, note: str = "") -> dict:
    return dict(check=check, value=value, threshold=threshold, status=_status(ok), note=note)


# ---------------------------------------------------------------------------
# experiments; each returns (tables, summary rows, extra files)


def run_cantor_sweep(cfg: dict, out: Path, threads: int) -> tuple[dict, list[dict]]:
    seq = _sequence(cfg["sequence"])
    depth = cfg.get("depth", len(seq))
    if depth > len(seq):
        raise ConfigError("depth exceeds the sequence length", ["depth"])
    _guard_points(seq, depth)
    a, b = cfg.get("eps_levels", [min(3, depth - 1), depth])
    if not 1 <= a < b <= depth:
        raise ConfigError("eps_levels must satisfy 1 <= first < second <= depth", ["eps_levels"])
    eps = [float(seq.r(k)) for k in range(a, b + 1)]
    s = seq.truncate(depth).s
    lo, hi = cfg.get("slope_band", [s - 0.1, s + 0.1])
    need = cfg.get("min_pass_fraction", 0.9)
    seeds = cfg["seeds"]
    slope_rows, sweep_rows, norm_bad = [], [], 0
    for sd in seeds:
        c = generate(seq, depth, sd, workers=threads)
        norm_bad += any(measure_mass(c, n, Rect.unit()) != 1 for n in range(depth + 1))
        res = direction_sweep(c, depth, cfg["K"], eps, threads=threads)
        inside = lo <= res.min_slope <= hi
        slope_rows.append(dict(seed=sd, min_slope=repr(res.min_slope), argmin_theta=repr(res.argmin_theta),
                               in_band=int(inside)))
        for r in res.reports:
            sweep_rows.append(dict(seed=sd, **r.row()))
        if cfg.get("svg") and sd == seeds[0]:
            write_sweep_svg(out / "sweep.svg", res, directions=range(0, cfg["K"], max(1, cfg["K"] // 6)))
    hits = sum(r["in_band"] for r in slope_rows)
    mins = [float(r["min_slope"]) for r in slope_rows]
    summary = [
        _srow("normalization", len(seeds) - norm_bad, len(seeds), norm_bad == 0, "mu_n(unit square) == 1 exactly"),
        _srow("min_slope", repr(min(mins)), f"[{lo!r}, {hi!r}]", None, f"smallest per-seed minimum; s = {s!r}"),
        _srow("min_slope_in_band", hits, math.ceil(need * len(seeds)), hits >= need * len(seeds),
              "seeds whose minimum slope lies in the band"),
    ]
    tables = {"slopes": (["seed", "min_slope", "argmin_theta", "in_band"], slope_rows),
              "sweep": (["seed", "theta", "slope", "r2", "eps", "counts"], sweep_rows)}
    return tables, summary


def run_concentration_audit(cfg: dict, out: Path, threads: int) -> tuple[dict, list[dict]]:
    seq = _sequence(cfg["sequence"])
    n = cfg["level"]
    if n + 1 > len(seq):
        raise ConfigError("the sequence must reach level + 1", ["level"])
    _guard_points(seq, n + 1)
    p = _params(cfg["params"], seq)
    master = cfg["seed"]
    notes = []
    if "calibrate" in cfg:
        cal = cfg["calibrate"]
        levels = cal.get("levels", list(range(1, n + 1)))
        cseeds = resolve_seeds(cal.get("seeds", 20), master, 0xCA)
        R, _ = calibrate_R(seq, p, cseeds, levels, cal.get("coverage", 0.95), a_from=cal.get("a_from", 2))
        p = p.with_(R=R)
        notes.append(f"R calibrated to {R!r}")
    trials = cfg.get("trials", 1000)

    def one(sd: int) -> list[dict]:
        c = generate(seq, n + 1, sd)
        gen = rng.generator(sd, 0xA7)
        strips = [random_level_strip(c, n, gen) for _ in range(cfg.get("strips", 20))]
        rows = strip_audit(c, n, strips, trials, sd, p)
        k = cfg.get("lines", 20)
        if k:
            lines = sample_boundary_lines(seq.denominator(n + 1), k, gen)
            rows += line_audit(c, n, lines, trials, sd, p)
        return [dict(seed=sd, **r) for r in rows]

    rows = [r for part in _pmap(one, cfg["seeds"], threads) for r in part]
    scored = [r for r in rows if r["ok"] != ""]
    fails = sum(1 for r in scored if not r["ok"])
    exact = [r for r in rows if r["p_exact"] != ""]
    summary = [
        _srow("calibrated_R", repr(p.R), "", None, "; ".join(notes)),
        _srow("vacuous_bounds", len(rows) - len(scored), "", None, "bound >= 1, reported only"),
        _srow("exact_tail_le_bound", sum(1 for r in exact if float(r["p_exact"]) <= float(r["bound"])), len(exact),
              None, "Poisson-binomial conditional tail of the strip rows, supplementary"),
        _srow("audit_upper_cl_le_bound", len(scored) - fails, len(scored), (fails == 0) if scored else None,
              "95% Wilson upper limit of the failure frequency against the analytic bound"),
    ]
    return {"audit": (["seed"] + ROW_FIELDS, rows)}, summary


def run_covering_extract(cfg: dict, out: Path, threads: int, relaxed: bool) -> tuple[dict, list[dict]]:
    spec = CoveringSpec(cfg["alpha"], scale=cfg.get("scale", 1.0))
    factor = cfg.get("relaxed_factor", 16.0) if relaxed else cfg.get("factor", 256.0)
    try:
        choice = choose_nk(spec, cfg["k"], cfg["n1"], factor=factor)
    except ValueError as exc:
        raise ConfigError(str(exc), ["alpha"]) from None
    horizon = choice.nk[-1]
    if horizon > cfg.get("max_horizon", 10**7):
        raise GuardError(f"n_k = {horizon} exceeds the horizon guard")
    rule = cfg.get("tie_rule", "lex")

    def one(sd: int) -> dict:
        sample = sample_covering(spec, horizon, sd)
        res = extract_cantor(sample, choice.nk, tie_seed=sd, tie_rule=rule, relaxed=relaxed)
        try:
            check_extraction(res, sample)
            inv = 1
        except ExtractionInvariantError:
            inv = 0
        return dict(seed=sd, complete=int(res.complete), levels=len(res.seq),
                    omega=";".join(str(int(f)) for f in res.omega_flags),
                    M=";".join(str(lv.M) for lv in res.levels), N=";".join(str(lv.N) for lv in res.levels),
                    q_bound=";".join("" if q is None else repr(q) for q in res.q_bounds), invariants=inv)

    rows = _pmap(one, cfg["seeds"], threads)
    done = [r for r in rows if r["complete"]]
    q = None
    if done:
        q = math.prod(float(v) for v in done[0]["q_bound"].split(";") if v)
    ns = len(rows)
    rate = len(done) / ns
    se = math.sqrt(rate * (1 - rate) / ns)
    bad_inv = sum(1 for r in rows if not r["invariants"])
    note = RELAXED_LABEL if relaxed else f"n_k = {list(choice.nk)}"
    scored = None if relaxed else (q is not None and rate >= q - 2 * se)
    summary = [
        _srow("extraction_invariants", ns - bad_inv, ns, bad_inv == 0, "xi_i in Q_i inside B_i, side <= delta/2"),
        _srow("omega_success_rate", repr(rate), "" if q is None else repr(q - 2 * se), scored, note),
    ]
    fields = ["seed", "complete", "levels", "omega", "M", "N", "q_bound", "invariants"]
    return {"extraction": (fields, rows)}, summary


def run_aniso(cfg: dict, out: Path, threads: int) -> tuple[dict, list[dict]]:
    a, b = cfg.get("levels", [4, 20])
    try:
        rep0 = dict(alpha=cfg["alpha"], beta=cfg["beta"], N=cfg["N"], K=cfg.get("K", 3),
                    levels=tuple(range(a, b + 1)))
        CoveringSpec(rep0["alpha"], shape="rect", beta=rep0["beta"])
        if not rep0["beta"] >= rep0["alpha"] > 1:
            raise ValueError("need beta >= alpha > 1")
    except ValueError as exc:
        raise ConfigError(str(exc), ["beta"]) from None

    def one(sd: int) -> dict:
        r = aniso_experiment(seed=sd, **rep0)
        return dict(seed=sd, slope_x=repr(r.slope_x), slope_y=repr(r.slope_y), r2_x=repr(r.r2_x),
                    r2_y=repr(r.r2_y), y_below_x=int(r.y_below_x),
                    counts_x=";".join(map(str, r.counts_x)), counts_y=";".join(map(str, r.counts_y)))

    rows = _pmap(one, cfg["seeds"], threads)
    need = cfg.get("min_pass_fraction", 0.9)
    hits = sum(r["y_below_x"] for r in rows)
    mx = float(np.mean([float(r["slope_x"]) for r in rows]))
    my = float(np.mean([float(r["slope_y"]) for r in rows]))
    summary = [
        _srow("y_slope_below_x_slope", hits, math.ceil(need * len(rows)), hits >= need * len(rows)),
        _srow("mean_slope_x", repr(mx), repr(1 / cfg["alpha"]), None, "reference 1/alpha, not scored"),
        _srow("mean_slope_y", repr(my), repr(1 / cfg["beta"]), None, "reference 1/beta, not scored"),
    ]
    fields = ["seed", "slope_x", "slope_y", "r2_x", "r2_y", "y_below_x", "counts_x", "counts_y"]
    return {"aniso": (fields, rows)}, summary


def _norm_rows(sect: dict, master: int) -> list[dict]:
    seq = _sequence(sect["sequence"], ("normalization", "sequence"))
    _guard_points(seq, len(seq))
    rows = []
    for sd in resolve_seeds(sect.get("seeds", 100), master, 0x4E):
        c = generate(seq, len(seq), sd)
        bad = sum(measure_mass(c, n, Rect.unit()) != Fraction(1) for n in range(len(seq) + 1))
        rows.append(dict(check="normalization", seed=sd, violations=bad))
    return rows


def _closing_rows(sect: dict, master: int) -> list[dict]:
    seq = _sequence(sect["sequence"], ("closing", "sequence"))
    _guard_points(seq, len(seq))
    p = _params(sect["params"], seq)
    depths = sect.get("depths", list(range(1, len(seq) + 1)))
    rows = []
    for sd in resolve_seeds(sect.get("seeds", 1), master, 0xC1):
        c = generate(seq, max(depths), sd)
        for n in depths:
            chk = closing_identity_check(c, n, p, sample=sect.get("sample", 200_000), seed=sd)
            rows.append(dict(check="closing", seed=sd, n=n, strips=chk.strips, sampled=int(chk.sampled),
                             a_true=chk.a_true, max_ratio=repr(chk.max_ratio), violations=chk.violations))
    return rows


def run_lemma_suite(cfg: dict, out: Path, threads: int) -> tuple[dict, list[dict]]:
    master = cfg["seed"]
    jobs: list[tuple[str, Callable[[], list[dict]]]] = []
    if "normalization" in cfg:
        jobs.append(("normalization", lambda: _norm_rows(cfg["normalization"], master)))
    if "strip_family" in cfg:
        s = cfg["strip_family"]
        jobs.append(("strip_family", lambda s=s: check_strip_family(s["M"], s.get("strips", 1000), master)))
    if "length_to_count" in cfg:
        s = cfg["length_to_count"]
        seq = _sequence(s["sequence"], ("length_to_count", "sequence"))
        depths = s.get("depths", list(range(1, len(seq) + 1)))
        _guard_points(seq, max(depths))
        jobs.append(("length_to_count", lambda s=s, seq=seq, depths=depths: check_length_to_count(
            seq, depths, resolve_seeds(s.get("seeds", 20), master, 0x33), s.get("strips", 1000),
            s.get("max_family_denom", 64))))
    for name, fn, count_key, draws_key in (("hit_law", check_hit_law, "pairs", "draws"),
                                           ("mgf_chain", check_mgf_chain, "configs", "resamples")):
        if name in cfg:
            s = cfg[name]
            seq = _sequence(s["sequence"], (name, "sequence"))
            lvl = s.get("level", 2)
            if lvl + 1 > len(seq):
                raise ConfigError("the sequence must reach level + 1", [name, "level"])
            _guard_points(seq, lvl + 1)
            jobs.append((name, lambda fn=fn, s=s, seq=seq, lvl=lvl, ck=count_key, dk=draws_key:
                         fn(seq, lvl, s.get(ck, 20), s.get(dk, 100_000), master)))
    if "closing" in cfg:
        jobs.append(("closing", lambda: _closing_rows(cfg["closing"], master)))
    if not jobs:
        raise ConfigError("lemma-suite needs at least one check section")
    results = _pmap(lambda job: job[1](), jobs, threads)
    tables, summary = {}, []
    for (name, _), rows in zip(jobs, results):
        fields = list(dict.fromkeys(k for r in rows for k in r))
        tables[name] = (fields, [{k: _cell(v) for k, v in r.items()} for r in rows])
        bad = sum(int(r["violations"]) for r in rows)
        summary.append(_srow(name, bad, 0, bad == 0, f"{len(rows)} rows"))
    return tables, summary


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v


# ---------------------------------------------------------------------------
# output


def write_csv(path: Path, fields: Sequence[str], rows: Sequence[dict]) -> None:
    """RFC-4180 CSV: comma separated, CRLF line ends, minimal quoting."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(fields), lineterminator="\r\n", extrasaction="raise")
        w.writeheader()
        for r in rows:
            w.writerow({k: _cell(v) for k, v in r.items()})


def _versions() -> dict:
    return {"cantorproj": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "jsonschema": _dist_version("jsonschema"), "kernels": _kernels.BACKEND}


def _dist_version(name: str) -> str:
    from importlib.metadata import PackageNotFoundError, version

    try:
        return version(name)
    except PackageNotFoundError:
        return "unknown"


def load_config(path: str) -> dict:
    """Read a config file; a manifest written by an earlier run is accepted too."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno} column {exc.colno}") from None
    if isinstance(data, dict) and "config" in data and "versions" in data:
        data = data["config"]
    return data


def resolve(cfg: dict, kind: str | None = None, seed: int | None = None, out: str | None = None,
            threads: int | None = None) -> dict:
    """Merge command-line overrides and expand seed counts into explicit lists."""
    if not isinstance(cfg, dict) or not cfg:
        raise ConfigError("config must be a non-empty JSON object")
    cfg = copy.deepcopy(cfg)
    if kind is not None:
        if cfg.get("kind", kind) != kind:
            raise ConfigError(f"config kind {cfg.get('kind')!r} does not match subcommand {kind!r}", ["kind"])
        cfg.setdefault("kind", kind)
    validate(cfg)
    if seed is not None:
        cfg["seed"] = seed
    cfg.setdefault("seed", 0)
    if out is not None:
        cfg["out"] = out
    cfg.setdefault("out", "out")
    if threads is not None:
        cfg["threads"] = threads
    cfg.setdefault("threads", 1)
    if cfg["seed"] >= 2**64:
        raise ConfigError("seed must fit in 64 bits", ["seed"])
    if cfg["kind"] != "lemma-suite":
        cfg["seeds"] = resolve_seeds(cfg.get("seeds", 1), cfg["seed"])
    return cfg


def run(cfg: dict, relaxed: bool = False) -> tuple[int, dict]:
    """Run a resolved config; returns (exit status, manifest)."""
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    threads = cfg["threads"]
    kind = cfg["kind"]
    start = time.perf_counter()
    if kind == "cantor-sweep":
        tables, summary = run_cantor_sweep(cfg, out, threads)
    elif kind == "concentration-audit":
        tables, summary = run_concentration_audit(cfg, out, threads)
    elif kind == "covering-extract":
        tables, summary = run_covering_extract(cfg, out, threads, relaxed)
    elif kind == "aniso":
        tables, summary = run_aniso(cfg, out, threads)
    else:
        tables, summary = run_lemma_suite(cfg, out, threads)
    wall = time.perf_counter() - start
    files = []
    for name, (fields, rows) in tables.items():
        write_csv(out / f"{name}.csv", fields, rows)
        files.append(f"{name}.csv")
    write_csv(out / "summary.csv", SUMMARY_FIELDS, summary)
    files.append("summary.csv")
    status = EXIT_FAILED if any(r["status"] == "FAIL" for r in summary) else EXIT_OK
    manifest = {"config": {k: v for k, v in cfg.items() if k not in ("out", "threads")},
                "relaxed": relaxed, "versions": _versions(), "threads": threads,
                "wall_time_s": round(wall, 3), "files": files, "exit_status": status,
                "summary": summary}
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return status, manifest


def _error(kind: str, message: str, code: int, path: Sequence[str] = ()) -> int:
    json.dump({"error": kind, "message": message, "path": list(path), "exit_status": code}, sys.stdout)
    sys.stdout.write("\n")
    return code


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cantorproj", description="Random Cantor set and covering set experiments.")
    sub = ap.add_subparsers(dest="kind", required=True)
    for kind in KINDS:
        sp = sub.add_parser(kind)
        sp.add_argument("--config", required=True, help="JSON config (or a manifest.json to replay)")
        sp.add_argument("--seed", type=int, help="master seed (u64), overrides the config")
        sp.add_argument("--out", help="output directory (default: config 'out' or ./out)")
        sp.add_argument("--threads", type=int, help="worker threads")
        sp.add_argument("--relaxed", action="store_true",
                        help="covering-extract: desk-scale growth factor, results are not scored")
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer", ["seed"])
        if args.threads is not None and args.threads < 1:
            raise ConfigError("threads must be >= 1", ["threads"])
        cfg = resolve(load_config(args.config), args.kind, args.seed, args.out, args.threads)
        status, manifest = run(cfg, relaxed=args.relaxed)
    except ConfigError as exc:
        return _error("invalid-config", str(exc), EXIT_CONFIG, exc.path)
    except GuardError as exc:
        return _error("guard-exceeded", str(exc), EXIT_GUARD)
    for r in manifest["summary"]:
        print(f"{r['status']:8} {r['check']}: {r['value']} (threshold {r['threshold']})")
    print(f"wrote {', '.join(manifest['files'])} and manifest.json to {os.fspath(cfg['out'])}")
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

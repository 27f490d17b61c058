"""Seeded experiment runner and machine-readable reports.

Seeding rule: trial ``i`` of a run with master seed ``M`` uses the sub-seed
``SeedSequence(M, spawn_key=(i,)).generate_state(1, uint64)[0]`` and draws
everything (core, isomorphism, noise key, target point, corrector coins)
from ``default_rng(sub_seed)`` in that order. :func:`run_trial` replays a
single trial from its sub-seed.

Reports come in two encodings sharing one header object::

    jsonl  line 1: header JSON; each further line: one row JSON
    csv    line 1: "# " + header JSON; line 2: column names; then rows

Field order is fixed by the row classes below. Wall time is left out of
reports unless ``timing`` is enabled, so identical inputs give identical
bytes.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import beta

from .boolfn import Isomorphism, JuntaCore, JuntaFunction, PsfCore, PsfFunction
from .corrector import ConstantsProfile, locally_correct_junta, locally_correct_psf
from .oracle import NoiseSpec, make_oracle, read_flip_file
from .typicality import (
    MAX_INFLUENCE_K,
    MAX_SCAN_K,
    check_core_far_from_isomorphisms,
    check_core_min_influence,
    check_psf_far_from_core_perms,
    check_psf_pair_syminf,
    draw_typical_junta_core,
    draw_typical_psf_core,
)

SCHEMA = "localcorrect-report"
SCHEMA_VERSION = 1
FAMILIES = ("junta", "psf")
STAGES = ("none", "partition-collision", "set-finder", "permutation")


@dataclass(frozen=True)
class ExperimentConfig:
    family: str = "junta"
    k: int = 4
    n: int = 128
    epsilon: float = 0.001
    noise: str = "procedural"
    noise_file: str | None = None
    trials: int = 100
    profile: str = "paper"
    seed: int = 0
    gating: bool = True
    sigma: str = "random"
    amplify: int = 1
    workers: int = 1
    timing: bool = False
    max_draws: int = 1000
    sample_budget: int = 200_000
    out: str | None = None
    format: str = "jsonl"

    def validate(self) -> ExperimentConfig:
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}, got {self.family!r}")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.k < 0 or self.n < self.k or self.n < 1:
            raise ValueError(f"need 0 <= k <= n and n >= 1, got k={self.k}, n={self.n}")
        if not 0 <= self.epsilon < 1:
            raise ValueError("epsilon must lie in [0, 1)")
        if self.noise not in ("exact", "procedural", "adversarial"):
            raise ValueError(f"unknown noise mode {self.noise!r}")
        if self.noise == "adversarial" and not self.noise_file:
            raise ValueError("adversarial noise needs a flip file")
        if self.noise == "exact" and self.n > 24:
            raise ValueError(f"exact-fraction noise needs n <= 24, got n={self.n}")
        if self.sigma not in ("random", "identity"):
            raise ValueError("sigma must be 'random' or 'identity'")
        if self.amplify < 1 or self.amplify % 2 == 0:
            raise ValueError("amplify must be a positive odd number")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        if self.format not in ("jsonl", "csv"):
            raise ValueError(f"unknown report format {self.format!r}")
        prof = self.constants()
        if self.k > prof.max_k:
            raise ValueError(f"k={self.k} exceeds the limit {prof.max_k} of profile {prof.name}")
        return self

    def constants(self) -> ConstantsProfile:
        return ConstantsProfile.parse(self.profile)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


# ---------------------------------------------------------------------------
# rows


def _typed(value, kind):
    if kind is bool:
        return value in (True, "true", "True", "1", 1)
    if kind == "float?":
        return None if value in (None, "") else float(value)
    if kind == "int?":
        return None if value in (None, "") else int(value)
    return kind(value)


class _Row:
    SCHEMA: tuple = ()

    def to_row(self, timing: bool = True) -> dict:
        d = {name: getattr(self, name) for name, _ in self.SCHEMA}
        if not timing and "wall_time" in d:
            d["wall_time"] = None
        return d

    @classmethod
    def from_row(cls, d: dict):
        return cls(**{name: _typed(d.get(name), kind) for name, kind in cls.SCHEMA})


@dataclass
class TrialReport(_Row):
    trial: int
    sub_seed: int
    sigma_digest: str
    x: str
    expected: int
    returned: int
    success: bool
    query_count: int
    stage: str
    core_rejections: int = 0
    wall_time: float | None = None

    SCHEMA = (("trial", int), ("sub_seed", int), ("sigma_digest", str), ("x", str), ("expected", int),
              ("returned", int), ("success", bool), ("query_count", int), ("stage", str),
              ("core_rejections", int), ("wall_time", "float?"))


@dataclass
class TypicalityRow(_Row):
    draw: int
    source: str
    check: str
    statistic: float | None
    passed: bool
    vacuous: bool

    SCHEMA = (("draw", int), ("source", str), ("check", str), ("statistic", "float?"), ("passed", bool),
              ("vacuous", bool))


ROW_TYPES = {"experiment": TrialReport, "typicality": TypicalityRow}


@dataclass
class Report:
    kind: str
    config: dict
    summary: dict
    rows: list = field(default_factory=list)

    def header(self) -> dict:
        row_type = ROW_TYPES[self.kind]
        return {"schema": SCHEMA, "version": SCHEMA_VERSION, "kind": self.kind,
                "fields": [name for name, _ in row_type.SCHEMA], "config": self.config, "summary": self.summary}


# ---------------------------------------------------------------------------
# trials


def sub_seed(master: int, trial: int) -> int:
    return int(np.random.SeedSequence(master, spawn_key=(trial,)).generate_state(1, np.uint64)[0])


def sigma_digest(sigma: Isomorphism) -> str:
    return hashlib.sha256(np.asarray(sigma.perm, dtype="<i8").tobytes()).hexdigest()[:16]


def point_hex(x) -> str:
    return np.packbits(np.asarray(x, dtype=bool), bitorder="little").tobytes().hex()


def _noise(cfg: ExperimentConfig, rng: np.random.Generator) -> NoiseSpec:
    key = int(rng.integers(0, 2**63))
    if cfg.noise == "adversarial":
        return read_flip_file(cfg.noise_file, cfg.n)
    return NoiseSpec(cfg.epsilon, cfg.noise, key)


def failure_stage(trace, relevant) -> str:
    """Which event sank a failed trial, judged against the planted variables of g."""
    p = trace.partition
    if p is None:
        return "set-finder"
    if not p.separates(relevant):
        return "partition-collision"
    if set(trace.found) != {int(p.block_of[v]) for v in relevant}:
        return "set-finder"
    return "permutation"


def run_trial(cfg: ExperimentConfig, seed: int, trial: int = 0) -> TrialReport:
    """One planted instance, corrected once (or ``amplify`` times with a majority vote)."""
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    k, n = cfg.k, cfg.n
    prof = cfg.constants()
    if cfg.family == "junta":
        if cfg.gating:
            core, rejected = draw_typical_junta_core(k, rng, cfg.max_draws)
        else:
            core, rejected = JuntaCore.random(k, rng), 0
        f = JuntaFunction(core, range(k), n)
        correct = locally_correct_junta
    else:
        if cfg.gating:
            core, rejected = draw_typical_psf_core(k, n, rng, cfg.max_draws, cfg.sample_budget)
        else:
            core, rejected = PsfCore.random(k, n - k, rng), 0
        f = PsfFunction(core, range(k), n)
        correct = locally_correct_psf
    sigma = Isomorphism.random(n, rng) if cfg.sigma == "random" else Isomorphism.identity(n)
    oracle = make_oracle(f, sigma, _noise(cfg, rng))
    x = rng.integers(0, 2, n, dtype=np.uint8)
    expected = oracle.true_value(x)

    votes, traces = [], []
    for _ in range(cfg.amplify):
        bit, trace = correct(core, k, oracle, x, prof, rng)
        votes.append(bit)
        traces.append(trace)
    returned = int(2 * sum(votes) > len(votes))
    success = returned == expected
    relevant = [sigma.perm[p] for p in range(k)]
    stage = "none" if success else failure_stage(traces[0], relevant)
    return TrialReport(
        trial=trial, sub_seed=seed, sigma_digest=sigma_digest(sigma), x=point_hex(x), expected=expected,
        returned=returned, success=success, query_count=oracle.query_count, stage=stage,
        core_rejections=rejected, wall_time=time.perf_counter() - start if cfg.timing else None,
    )


def _trial_job(args):
    cfg, i = args
    return run_trial(cfg, sub_seed(cfg.seed, i), i)


def _map(fn, jobs, workers: int):
    if workers == 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


# ---------------------------------------------------------------------------
# aggregation


def clopper_pearson(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    """Two-sided exact binomial interval."""
    alpha = 1 - confidence
    lo = 0.0 if successes == 0 else float(beta.ppf(alpha / 2, successes, trials - successes + 1))
    hi = 1.0 if successes == trials else float(beta.ppf(1 - alpha / 2, successes + 1, trials - successes))
    return lo, hi


def lower_bound(successes: int, trials: int, confidence: float = 0.95) -> float:
    """One-sided exact lower confidence bound on a binomial proportion."""
    if successes == 0:
        return 0.0
    return float(beta.ppf(1 - confidence, successes, trials - successes + 1))


def query_constant(queries: float, k: int) -> float | None:
    """queries / (k log2^2 k); undefined for k < 2."""
    if k < 2:
        return None
    return queries / (k * math.log2(k) ** 2)


def summarize_trials(rows: list[TrialReport], k: int) -> dict:
    t = len(rows)
    wins = sum(r.success for r in rows)
    q = np.array([r.query_count for r in rows], dtype=np.int64)
    lo, hi = clopper_pearson(wins, t) if t else (0.0, 1.0)
    mean_q = float(q.mean()) if t else 0.0
    return {
        "trials": t,
        "successes": wins,
        "success_rate": wins / t if t else None,
        "ci95": [lo, hi],
        "lower95": lower_bound(wins, t) if t else 0.0,
        "queries_mean": mean_q,
        "queries_min": int(q.min()) if t else 0,
        "queries_max": int(q.max()) if t else 0,
        "query_constant": query_constant(mean_q, k) if t else None,
        "stages": {s: sum(r.stage == s for r in rows) for s in STAGES},
        "core_rejections": sum(r.core_rejections for r in rows),
    }


def run_experiment(cfg: ExperimentConfig) -> Report:
    cfg.validate()
    rows = _map(_trial_job, [(cfg, i) for i in range(cfg.trials)], cfg.workers)
    rows.sort(key=lambda r: r.trial)
    return Report("experiment", cfg.to_dict(), summarize_trials(rows, cfg.k), rows)


def run_junta_experiment(cfg: ExperimentConfig) -> Report:
    return run_experiment(dataclasses.replace(cfg, family="junta"))


def run_psf_experiment(cfg: ExperimentConfig) -> Report:
    return run_experiment(dataclasses.replace(cfg, family="psf"))


# ---------------------------------------------------------------------------
# typicality suite


def core_verdicts(cfg: ExperimentConfig, core, seed: int):
    if cfg.family == "junta":
        out = []
        if core.k <= MAX_INFLUENCE_K:
            out.append(check_core_min_influence(core))
        if core.k <= MAX_SCAN_K:
            out.append(check_core_far_from_isomorphisms(core))
        return out
    out = [check_psf_pair_syminf(core, range(core.k), cfg.n, cfg.sample_budget, seed)]
    if core.k <= MAX_SCAN_K:
        out.append(check_psf_far_from_core_perms(core, cfg.n))
    return out


def _typicality_job(args):
    cfg, i = args
    rng = np.random.default_rng(sub_seed(cfg.seed, i))
    if cfg.family == "junta":
        core = JuntaCore.random(cfg.k, rng)
    else:
        core = PsfCore.random(cfg.k, cfg.n - cfg.k, rng)
    verdicts = core_verdicts(cfg, core, int(rng.integers(0, 2**63)))
    return [TypicalityRow(i, "random", v.check, v.statistic, v.passed, v.vacuous) for v in verdicts]


def run_typicality_suite(cfg: ExperimentConfig, extra_cores=()) -> Report:
    """Check ``cfg.trials`` random cores, plus any ``extra_cores`` (reported as "injected")."""
    if cfg.family not in FAMILIES:
        raise ValueError(f"family must be one of {FAMILIES}")
    if cfg.trials < 1 or cfg.n < cfg.k:
        raise ValueError("need trials >= 1 and n >= k")
    if cfg.family == "junta" and cfg.k > MAX_INFLUENCE_K:
        raise ValueError(f"typicality checks support k <= {MAX_INFLUENCE_K}")
    rows = [r for batch in _map(_typicality_job, [(cfg, i) for i in range(cfg.trials)], cfg.workers)
            for r in batch]
    for j, core in enumerate(extra_cores):
        for v in core_verdicts(cfg, core, sub_seed(cfg.seed, cfg.trials + j)):
            rows.append(TypicalityRow(cfg.trials + j, "injected", v.check, v.statistic, v.passed, v.vacuous))

    summary = {"draws": cfg.trials, "checks": {}}
    for check in dict.fromkeys(r.check for r in rows):
        mine = [r for r in rows if r.check == check and r.source == "random"]
        stats = np.array([r.statistic for r in mine if r.statistic is not None])
        summary["checks"][check] = {
            "pass_rate": sum(r.passed for r in mine) / len(mine) if mine else None,
            "passes": sum(r.passed for r in mine),
            "statistic_quantiles": (
                [float(v) for v in np.quantile(stats, [0, 0.05, 0.5, 0.95, 1])] if stats.size else None),
        }
    return Report("typicality", cfg.to_dict(), summary, rows)


# ---------------------------------------------------------------------------
# report files


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    return repr(value) if isinstance(value, float) else str(value)


def render_report(report: Report, fmt: str = "jsonl", timing: bool = False) -> str:
    header = json.dumps(report.header())
    rows = [r.to_row(timing) for r in report.rows]
    if fmt == "jsonl":
        return "".join([header + "\n"] + [json.dumps(r) + "\n" for r in rows])
    if fmt == "csv":
        buf = io.StringIO()
        buf.write("# " + header + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(report.header()["fields"])
        for r in rows:
            w.writerow([_cell(v) for v in r.values()])
        return buf.getvalue()
    raise ValueError(f"unknown report format {fmt!r}")


def emit_report(report: Report, path, fmt: str = "jsonl", timing: bool = False) -> Path:
    path = Path(path)
    try:
        path.write_text(render_report(report, fmt, timing))
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc
    return path


def parse_report(text: str, fmt: str = "jsonl") -> Report:
    lines = text.splitlines()
    if not lines:
        raise ValueError("empty report")
    if fmt == "jsonl":
        header = json.loads(lines[0])
        raw = [json.loads(line) for line in lines[1:] if line.strip()]
    elif fmt == "csv":
        if not lines[0].startswith("# "):
            raise ValueError("csv report lacks its header line")
        header = json.loads(lines[0][2:])
        raw = list(csv.DictReader(io.StringIO("\n".join(lines[1:]) + "\n")))
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    if header.get("schema") != SCHEMA:
        raise ValueError(f"not a report: schema {header.get('schema')!r}")
    if header.get("version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported report version {header.get('version')}")
    row_type = ROW_TYPES[header["kind"]]
    return Report(header["kind"], header["config"], header["summary"], [row_type.from_row(r) for r in raw])


def load_report(path, fmt: str | None = None) -> Report:
    path = Path(path)
    fmt = fmt or ("csv" if path.suffix == ".csv" else "jsonl")
    try:
        text = path.read_text()
    except OSError as exc:
        raise OSError(f"cannot read report {path}: {exc}") from exc
    return parse_report(text, fmt)

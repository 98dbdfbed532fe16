"""Synthetic Hadamard-square benchmark pipeline.

Generates a separable-Gaussian mixture density on a uniform grid in
canonical form, compresses it to orthonormal Tucker, squares it pointwise
(Kron-core tensor), truncates the square back to low mode rank via the
Gram cross, refines with one rank-revealing ALS sweep, and reports
machine-readable results.
"""

import csv
import json
import os
import tempfile
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ResourceCapError
from .formats import (
    MATERIALIZE_CAP,
    from_canonical,
    hadamard,
    residual_frob_norm,
    structured_norm_sq,
    to_dense,
)
from .truncate import TruncationConfig, refine_als, truncate

SCHEMA = "bench-v1"


@dataclass
class BenchConfig:
    n: int = 256
    domain: tuple = (-5.0, 5.0)
    terms: int = 20
    gaussians: object = "random"        # "random" or list of term dicts
    seed: int = 0
    eps_gram: float = 1e-12
    eps_als: float = 1e-12
    r_max: tuple | None = None
    dense_check: bool = False
    out_dir: str = "."

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("grid size n must be >= 2")
        if self.terms < 1:
            raise ValueError("need at least one term")
        if not self.domain[1] > self.domain[0]:
            raise ValueError("domain must be a nonempty interval")

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            raw = json.load(fh)
        known = {f for f in cls.__dataclass_fields__}
        bad = set(raw) - known
        if bad:
            raise ValueError(f"unknown config keys: {sorted(bad)}")
        if "domain" in raw:
            raw["domain"] = tuple(raw["domain"])
        if "r_max" in raw and raw["r_max"] is not None:
            raw["r_max"] = tuple(raw["r_max"])
        return cls(**raw)

    def echo(self):
        d = dict(self.__dict__)
        d["domain"] = list(self.domain)
        d["r_max"] = list(self.r_max) if self.r_max else None
        return d


@dataclass
class BenchReport:
    config: dict
    input_ranks: tuple
    hadamard_ranks: tuple
    output_ranks: tuple
    rel_error_cross: float
    rel_error_refined: float
    timings: dict
    memory_mb: dict
    per_mode: list
    dense_check: dict | None = None
    flags: dict = field(default_factory=dict)

    def to_json(self):
        return {
            "schema": SCHEMA,
            "config": self.config,
            "input_ranks": [int(r) for r in self.input_ranks],
            "hadamard_ranks": [int(r) for r in self.hadamard_ranks],
            "output_ranks": [int(r) for r in self.output_ranks],
            "rel_error_cross": self.rel_error_cross,
            "rel_error_refined": self.rel_error_refined,
            "timings": self.timings,
            "memory_mb": self.memory_mb,
            "per_mode": self.per_mode,
            "dense_check": self.dense_check,
            "flags": self.flags,
        }

    def csv_row(self):
        return {
            "n": self.config["n"],
            "terms": self.config["terms"],
            "seed": self.config["seed"],
            "input_ranks": "x".join(str(r) for r in self.input_ranks),
            "output_ranks": "x".join(str(r) for r in self.output_ranks),
            "rel_error_cross": self.rel_error_cross,
            "rel_error_refined": self.rel_error_refined,
            "t_truncate": self.timings.get("truncate", ""),
            "t_refine": self.timings.get("refine", ""),
        }


def _terms(cfg):
    if cfg.gaussians == "random":
        rng = np.random.default_rng(cfg.seed)
        lo, hi = cfg.domain
        span = hi - lo
        out = []
        for _ in range(cfg.terms):
            alpha = float(np.exp(rng.uniform(np.log(0.5), np.log(20.0))))
            center = rng.uniform(lo + 0.1 * span, hi - 0.1 * span, size=3)
            out.append({"alpha": alpha, "center": center, "amplitude": 1.0})
        return out
    out = []
    for term in cfg.gaussians:
        out.append({"alpha": float(term["alpha"]),
                    "center": np.asarray(term["center"], dtype=np.float64),
                    "amplitude": float(term.get("amplitude", 1.0))})
    if len(out) != cfg.terms:
        raise ValueError("gaussian list length does not match terms")
    return out


def gen_density(cfg):
    """Separable Gaussian mixture on a uniform grid, canonical format."""
    terms = _terms(cfg)
    x = np.linspace(cfg.domain[0], cfg.domain[1], cfg.n)
    u = np.empty((cfg.n, len(terms)))
    v = np.empty_like(u)
    w = np.empty_like(u)
    for s, term in enumerate(terms):
        a, c = term["alpha"], term["center"]
        u[:, s] = term["amplitude"] * np.exp(-a * (x - c[0]) ** 2)
        v[:, s] = np.exp(-a * (x - c[1]) ** 2)
        w[:, s] = np.exp(-a * (x - c[2]) ** 2)
    return from_canonical(u, v, w)


def run_pipeline(cfg):
    """Full benchmark: density -> Tucker -> Hadamard square -> truncate ->
    one ALS sweep; errors measured structurally against the Kron tensor."""
    timings = {}
    t0 = time.perf_counter()
    density = gen_density(cfg)
    timings["gen"] = time.perf_counter() - t0

    tcfg = TruncationConfig(eps_gram=cfg.eps_gram, r_max=cfg.r_max,
                            report_error=False)
    t0 = time.perf_counter()
    a, _ = truncate(density, tcfg)
    timings["compress_input"] = time.perf_counter() - t0

    if a.core.size == 0:
        zero = {"n": cfg.n}
        return BenchReport(cfg.echo(), (0, 0, 0), (0, 0, 0), (0, 0, 0),
                           0.0, 0.0, timings,
                           _memory_estimates((0, 0, 0), (0, 0, 0)), [],
                           flags={"zero_input": True, **zero})

    t0 = time.perf_counter()
    f = hadamard(a, a)
    timings["hadamard"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    f1, rep1 = truncate(f, TruncationConfig(eps_gram=cfg.eps_gram,
                                            r_max=cfg.r_max,
                                            report_error=False))
    timings["truncate"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    f2, _ = refine_als(f, f1, eps_als=cfg.eps_als)
    timings["refine"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    nrm = float(np.sqrt(structured_norm_sq(f)))
    err1 = residual_frob_norm(f, f1) / nrm if nrm > 0 else 0.0
    err2 = residual_frob_norm(f, f2) / nrm if nrm > 0 else 0.0
    timings["error"] = time.perf_counter() - t0

    dense_check = None
    if cfg.dense_check:
        if int(cfg.n) ** 3 > MATERIALIZE_CAP:
            dense_check = {"skipped": "grid exceeds materialization cap"}
        else:
            fd = to_dense(f)
            dn = float(np.linalg.norm(fd.ravel()))
            dense_check = {
                "rel_error_cross": float(
                    np.linalg.norm((fd - to_dense(f1)).ravel()) / dn),
                "rel_error_refined": float(
                    np.linalg.norm((fd - to_dense(f2)).ravel()) / dn),
            }

    report = BenchReport(
        cfg.echo(), tuple(a.ranks), tuple(f.ranks), tuple(f2.ranks),
        float(err1), float(err2), timings,
        _memory_estimates(a.ranks, f.ranks),
        rep1.summary()["per_mode"],
        dense_check=dense_check,
        flags={"floor_hit": rep1.floor_hit, "rmax_hit": rep1.rmax_hit},
    )
    return report


def _memory_estimates(input_ranks, hadamard_ranks):
    ri = max(input_ranks) if input_ranks else 0
    rh = max(hadamard_ranks) if hadamard_ranks else 0
    return {
        "input_core_mb": core_memory_mb(max(ri, 1), 3) if ri else 0.0,
        "hadamard_core_mb": core_memory_mb(max(rh, 1), 3) if rh else 0.0,
    }


def core_memory_mb(r, d):
    """Memory in MB (2^20 bytes) for an r^d array of 64-bit reals."""
    if r < 1:
        raise ValueError("rank must be >= 1")
    if not 2 <= d <= 8:
        raise ValueError("dimension must be between 2 and 8")
    return float(r) ** d * 8.0 / 2.0 ** 20


# ---------------------------------------------------------------------------
# atomic report writing

def _atomic_write(path, text):
    d = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_report(report, out_dir, csv_summary=True):
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "report.json")
    _atomic_write(path, json.dumps(report.to_json(), indent=2))
    if csv_summary:
        row = report.csv_row()
        csv_path = os.path.join(out_dir, "summary.csv")
        exists = os.path.exists(csv_path)
        with open(csv_path, "a", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(row))
            if not exists:
                writer.writeheader()
            writer.writerow(row)
    return path

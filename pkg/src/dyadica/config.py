"""Experiment configuration: flat key = value sections, validation of the
probe constraints, and a content hash echoed into every report."""

from __future__ import annotations

import configparser
import hashlib
import io
from dataclasses import dataclass, field

import numpy as np

DEFAULTS = {
    "root": {"d": "1", "L": "0", "J": "-8"},
    "wavelet": {"N": "3", "k": "", "refine": "8", "w": ""},
    "dictionary": {"size": "8"},
    "ensemble": {"count": "100", "seed": "20240817"},
    "probe": {
        "N": "4",
        "members": "100",
        "kappas": "-1, 0, 1",
        "splits": "0:0; 1:0; 0:1; 2:0; 1:1; 0:2",
        "exponents": "4, 4; 2, inf",
        "epsilon": "0.25",
        "j_sweep": "-6, -7, -8",
        "growth_cap": "1.25",
        "bmo_depths": "4, 6, 8",
    },
    "sparse": {
        "theta": "16",
        "theta_cap": "1048576",
        "packing_intest": "0.015625",
        "packing_mainiter": "0.25",
        "trials": "200",
        "exponents": "4, 2, 4",
        "j_sweep": "-6, -7, -8",
    },
    "tolerances": {"eq_eps": "1e-8", "growth_cap": "1.25"},
    "testbench": {"truncation_scale": "8", "k": "2", "bench_q": "4",
                  "sample_count": "24"},
    "output": {"dir": "out"},
}


def _parse_float(s: str) -> float:
    s = s.strip().lower()
    if s in ("inf", "infinity", "oo"):
        return float("inf")
    return float(s)


def _parse_list(s: str, cast=int):
    return [cast(tok.strip()) for tok in s.split(",") if tok.strip()]


def _parse_tuples(s: str, cast=float, sep=";", inner=","):
    out = []
    for group in s.split(sep):
        group = group.strip()
        if group:
            out.append(tuple(cast(tok.strip()) for tok in group.split(inner)))
    return out


@dataclass
class KernelDef:
    name: str
    kind: str
    arity: int = 1
    eps_trunc: float = 0.0
    strength: float = 1.0
    seed: int = 1
    symbol_count: int = 8


@dataclass
class ExperimentConfig:
    raw: configparser.ConfigParser
    kernels: list = field(default_factory=list)

    # -- constructors -------------------------------------------------------

    @classmethod
    def defaults(cls) -> "ExperimentConfig":
        parser = configparser.ConfigParser()
        parser.read_dict(DEFAULTS)
        return cls._finalize(parser)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        parser = configparser.ConfigParser()
        parser.read_dict(DEFAULTS)
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
        return cls._finalize(parser)

    @classmethod
    def _finalize(cls, parser) -> "ExperimentConfig":
        kernels = []
        for section in parser.sections():
            if section.startswith("kernel:"):
                name = section.split(":", 1)[1]
                kernels.append(KernelDef(
                    name=name,
                    kind=parser.get(section, "type"),
                    arity=parser.getint(section, "arity", fallback=1),
                    eps_trunc=parser.getfloat(section, "eps_trunc", fallback=0.0),
                    strength=parser.getfloat(section, "strength", fallback=1.0),
                    seed=parser.getint(section, "seed", fallback=1),
                    symbol_count=parser.getint(section, "symbol_count", fallback=8),
                ))
        cfg = cls(raw=parser, kernels=kernels)
        cfg.validate()
        return cfg

    # -- typed accessors -----------------------------------------------------

    def get(self, section: str, key: str) -> str:
        return self.raw.get(section, key)

    @property
    def d(self) -> int:
        return self.raw.getint("root", "d")

    @property
    def L(self) -> int:
        return self.raw.getint("root", "L")

    @property
    def J(self) -> int:
        return self.raw.getint("root", "J")

    @property
    def wavelet_order(self) -> int:
        return self.raw.getint("wavelet", "N")

    @property
    def smoothness_budget(self) -> int:
        raw = self.raw.get("wavelet", "k").strip()
        return int(raw) if raw else self.wavelet_order - 1

    @property
    def refine(self) -> int:
        return self.raw.getint("wavelet", "refine")

    @property
    def dictionary_size(self) -> int:
        return self.raw.getint("dictionary", "size")

    @property
    def seed(self) -> int:
        return self.raw.getint("ensemble", "seed")

    @property
    def ensemble_count(self) -> int:
        return self.raw.getint("ensemble", "count")

    @property
    def probe_order(self) -> int:
        return self.raw.getint("probe", "N")

    @property
    def probe_members(self) -> int:
        return self.raw.getint("probe", "members")

    @property
    def probe_kappas(self) -> list[int]:
        return _parse_list(self.raw.get("probe", "kappas"), int)

    @property
    def probe_splits(self) -> list[tuple[int, ...]]:
        return [tuple(int(v) for v in t)
                for t in _parse_tuples(self.raw.get("probe", "splits"), float, ";", ":")]

    @property
    def probe_exponents(self) -> list[tuple[float, ...]]:
        return _parse_tuples(self.raw.get("probe", "exponents"), _parse_float)

    @property
    def probe_epsilon(self) -> float:
        return self.raw.getfloat("probe", "epsilon")

    @property
    def probe_j_sweep(self) -> list[int]:
        return _parse_list(self.raw.get("probe", "j_sweep"), int)

    @property
    def bmo_depths(self) -> list[int]:
        return _parse_list(self.raw.get("probe", "bmo_depths"), int)

    @property
    def growth_cap(self) -> float:
        return self.raw.getfloat("tolerances", "growth_cap")

    @property
    def eq_eps(self) -> float:
        return self.raw.getfloat("tolerances", "eq_eps")

    @property
    def sparse_theta(self) -> float:
        return self.raw.getfloat("sparse", "theta")

    @property
    def sparse_theta_cap(self) -> float:
        return self.raw.getfloat("sparse", "theta_cap")

    @property
    def sparse_trials(self) -> int:
        return self.raw.getint("sparse", "trials")

    @property
    def sparse_exponents(self) -> tuple[float, ...]:
        return tuple(_parse_list(self.raw.get("sparse", "exponents"), _parse_float))

    @property
    def sparse_j_sweep(self) -> list[int]:
        return _parse_list(self.raw.get("sparse", "j_sweep"), int)

    @property
    def packing_intest(self) -> float:
        return self.raw.getfloat("sparse", "packing_intest")

    @property
    def packing_mainiter(self) -> float:
        return self.raw.getfloat("sparse", "packing_mainiter")

    @property
    def truncation_scale(self) -> float:
        return self.raw.getfloat("testbench", "truncation_scale")

    @property
    def testbench_k(self) -> int:
        return self.raw.getint("testbench", "k")

    @property
    def bench_q(self) -> float:
        return _parse_float(self.raw.get("testbench", "bench_q"))

    @property
    def testbench_samples(self) -> int:
        return self.raw.getint("testbench", "sample_count")

    @property
    def output_dir(self) -> str:
        return self.raw.get("output", "dir")

    # -- probe exponent derivations ------------------------------------------

    @staticmethod
    def holder_r(exponents) -> float:
        s = sum(0.0 if np.isinf(p) else 1.0 / p for p in exponents)
        return float("inf") if s == 0 else 1.0 / s

    @staticmethod
    def probe_pi(split, exponents) -> float:
        """n / pi = sum n_j / p_j; degenerate n = 0 uses uniform weights."""
        n = sum(split)
        if n == 0:
            s = sum((0.0 if np.isinf(p) else 1.0 / p) / len(exponents)
                    for p in exponents)
        else:
            s = sum((0.0 if np.isinf(p) else nj / p) / n
                    for nj, p in zip(split, exponents))
        return float("inf") if s == 0 else 1.0 / s

    def validate(self) -> None:
        if self.L <= self.J:
            raise ValueError("root scale must exceed finest scale")
        k = self.probe_order - 1
        for kappa in self.probe_kappas:
            if abs(kappa) > k:
                raise ValueError(f"kappa = {kappa} outside [-{k}, {k}]")
        for split in self.probe_splits:
            if sum(split) > k:
                raise ValueError(f"total smoothness {sum(split)} exceeds k = {k}")
            for exps in self.probe_exponents:
                if len(exps) != len(split):
                    raise ValueError("one exponent per input slot")
                for p in exps:
                    if not p > 1:
                        raise ValueError("input exponents must exceed 1")
                self.probe_pi(split, exps)
        p, q, *ps = self.sparse_exponents
        total = sum(0.0 if np.isinf(v) else 1.0 / v for v in (p, q, *ps))
        if abs(total - 1.0) > 1e-9:
            raise ValueError("sparse exponents fail the Hoelder relation")

    # -- reporting -------------------------------------------------------------

    def dump(self) -> str:
        buf = io.StringIO()
        self.raw.write(buf)
        return buf.getvalue()

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.dump().encode()).hexdigest()[:16]

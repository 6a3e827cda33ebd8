"""End-to-end verification: Parisi minimum, Gibbs principle, audits, enumeration."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .disorder import free_energy_exact
from .gibbs import audit_constraints, build_gibbs
from .model import ModelSpec, spec_to_dict
from .parisi import LOG2, global_parisi_min, parisi_grad, parisi_value
from .variational import solve_gibbs

SCHEMA_VERSION = "1.0"

TOLERANCES = {
    "identity": 1e-4,
    "gradient": 1e-6,
    "entropy": 1e-10,
    "constraint": 1e-8,
    "mc_gap": 0.05,
}

CRITERIA = ("identity", "constraint_audit", "gradient", "montecarlo")


@dataclass
class VerifyReport:
    model_digest: str
    seed: int
    tolerances: dict
    parisi: dict = field(default_factory=dict)
    gibbs: dict = field(default_factory=dict)
    identity_residual: float | None = None
    constraint_audit: dict = field(default_factory=dict)
    gradient_check: dict = field(default_factory=dict)
    montecarlo: list = field(default_factory=list)
    criteria: dict = field(default_factory=dict)
    errors: list = field(default_factory=list)
    schema_version: str = SCHEMA_VERSION

    @property
    def passed(self) -> bool:
        enabled = [c for c in self.criteria.values() if c["enabled"]]
        return not self.errors and all(c["passed"] for c in enabled)

    @property
    def exit_code(self) -> int:
        if self.errors:
            return 2
        return 0 if self.passed else 1

    def as_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "model_digest": self.model_digest,
            "seed": self.seed,
            "tolerances": dict(self.tolerances),
            "parisi": self.parisi,
            "gibbs": self.gibbs,
            "identity_residual": self.identity_residual,
            "constraint_audit": self.constraint_audit,
            "gradient_check": self.gradient_check,
            "montecarlo": self.montecarlo,
            "criteria": self.criteria,
            "errors": list(self.errors),
            "passed": self.passed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "VerifyReport":
        keys = ("model_digest", "seed", "tolerances", "parisi", "gibbs", "identity_residual",
                "constraint_audit", "gradient_check", "montecarlo", "criteria", "errors", "schema_version")
        return cls(**{k: d[k] for k in keys})


def model_digest(spec: ModelSpec) -> str:
    text = dumps(spec_to_dict(spec))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _fd_gradient(spec, chain, m, h=1e-5):
    out = np.empty(len(m))
    for j in range(len(m)):
        e = np.zeros(len(m))
        e[j] = h
        out[j] = (parisi_value(spec, chain, m + e) - parisi_value(spec, chain, m - e)) / (2 * h)
    return out


def run_verify(spec: ModelSpec, Ns=(), seed: int = 0, tolerances=None, enabled=None) -> VerifyReport:
    """Run every stage and grade it; stages that raise leave a partial report."""
    tol = dict(TOLERANCES)
    tol.update(tolerances or {})
    on = {c: True for c in CRITERIA}
    on.update(enabled or {})
    if not Ns:
        on["montecarlo"] = False
    rep = VerifyReport(model_digest(spec), seed, tol)

    def grade(name, value, passed):
        rep.criteria[name] = {"enabled": bool(on[name]), "value": value, "passed": bool(passed)}

    gp = gs = None
    try:
        gp = global_parisi_min(spec)
        rep.parisi = gp.as_dict()
    except Exception as exc:  # noqa: BLE001 - recorded in the partial report
        rep.errors.append(f"parisi: {exc}")
    try:
        gs = solve_gibbs(spec)
        rep.gibbs = {"value": gs.value, "active_set": gs.as_dict()["active_set"],
                     "converged": gs.converged, "fast_path": gs.fast_path}
    except Exception as exc:  # noqa: BLE001
        rep.errors.append(f"gibbs: {exc}")

    if gp is not None and gs is not None:
        rep.identity_residual = abs(gp.value - (gs.value + LOG2))
        grade("identity", rep.identity_residual, rep.identity_residual <= tol["identity"])
    else:
        grade("identity", None, False)

    if gp is not None:
        best = gp.best
        audit = audit_constraints(build_gibbs(spec, best.chain, best.m), spec, tol=tol["constraint"])
        rep.constraint_audit = {"chain": list(best.chain.perm), **audit.as_dict()}
        grade("constraint_audit", audit.min_slack, audit.feasible)

        worst = 0.0
        interior = np.arange(1, spec.n + 1) / (spec.n + 1)
        for p in gp.table:
            g = parisi_grad(spec, p.chain, interior)
            fd = _fd_gradient(spec, p.chain, interior)
            worst = max(worst, float(np.max(np.abs(g - fd) / np.maximum(np.abs(fd), 1.0))))
        rep.gradient_check = {"m": [float(x) for x in interior], "max_rel_error": worst}
        grade("gradient", worst, worst <= tol["gradient"])
    else:
        grade("constraint_audit", None, False)
        grade("gradient", None, False)

    target = gs.value if gs is not None else None
    try:
        for N in Ns:
            r = free_energy_exact(spec, int(N), seed)
            gap = None if target is None else abs(r.F_N - target)
            rep.montecarlo.append({"N": int(N), "F_N": r.F_N, "target": target, "gap": gap})
    except Exception as exc:  # noqa: BLE001
        rep.errors.append(f"montecarlo: {exc}")
    if rep.montecarlo and rep.montecarlo[-1]["gap"] is not None:
        last = rep.montecarlo[-1]["gap"]
        grade("montecarlo", last, last <= tol["mc_gap"])
    else:
        grade("montecarlo", None, not on["montecarlo"])
    return rep


# -- serialisation ------------------------------------------------------------

def _fmt(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with every float written to 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.floating, np.integer)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt(float(obj))
    if obj is None:
        return "null"
    if isinstance(obj, np.ndarray):
        return dumps(obj.tolist(), indent, _level)
    return json.dumps(obj)


def mc_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["N", "F_N", "target", "gap"])
    for r in rows:
        w.writerow([r["N"]] + ["" if r[k] is None else _fmt(r[k]) for k in ("F_N", "target", "gap")])
    return buf.getvalue()


def emit(report: VerifyReport, fmt: str = "json", path=None) -> str:
    """Serialise a report; CSV carries only the Monte Carlo series."""
    if fmt == "json":
        text = dumps(report.as_dict()) + "\n"
    elif fmt == "csv":
        text = mc_csv(report.montecarlo)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text

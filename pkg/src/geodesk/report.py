"""Named-residual reports: tolerances, JSON serialization, baselines."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

TOLERANCE_TABLE_VERSION = 1

# Default tolerance per (suite, check-name prefix); part of the shipped claim.
TOLERANCES: dict[str, dict[str, float]] = {
    "lincs": {
        "moment": 1e-12,
        "tau_two_expressions": 1e-12,
        "siegel_equivariance": 1e-10,
        "siegel_isometry_fd": 1e-7,
        "tau_closed_fd": 1e-8,
    },
    "ricci-moment": {
        "lambda_pairing": 1e-6,
        "ricci_variation_fd": 1e-6,
        "moment_map_fd": 1e-6,
        "scalar_moment_fd": 1e-6,
        "scalar_bracket": 1e-6,
    },
    "ricci-laws": {
        "conformal_shift": 1e-8,
        "lambda_conformal_shift": 1e-8,
        "naturality_affine": 1e-12,
        "naturality_displacement": 1e-7,
        "lambda_lie": 1e-6,
        "lambda_two_parameter": 1e-6,
        "pairing_divergence": 1e-6,
        "kahler_lambda_vanishes": 1e-8,
        "closedness": 1e-8,
        "connection_independence": 1e-7,
        "lambda_connection_independence": 1e-7,
        "integrable_11": 1e-7,
        "cohomology_pairing": 1e-7,
    },
    "bkn": {
        "flat_identity": 1e-8,
        "curved_identity_n1": 1e-6,
        "curved_identity_n2": 1e-5,
        "q_two_ways": 1e-8,
        "adjoint_q1": 1e-7,
        "adjoint_q2": 1e-7,
        "weitzenbock_flat": 1e-8,
        "weitzenbock_curved": 1e-6,
        "laplacian_positivity": 1e-9,
    },
    "harmonic": {
        "hamiltonian_divergence": 1e-7,
        "gradient_divergence": 1e-7,
        "star_contraction": 1e-10,
        "lie_compatibility": 1e-7,
        "self_adjoint_defect": 1e-7,
        "lambda_fg_plugback": 1e-7,
        "adjoint_harmonic": 1e-7,
        "parallel_norms_endo": 1e-7,
        "parallel_norms_form": 1e-7,
        "holomorphic_divergence": 1e-7,
    },
    "bott-chern": {
        "ddc_nijenhuis": 1e-7,
        "ddc_integrable": 1e-7,
        "l0_vs_laplacian": 1e-8,
        "l0_solve_plugback": 1e-7,
        "dplus_kernel_rank": 0.5,
        "selfdual_pairing": 1e-10,
    },
    "teich-wp": {
        "antisymmetry": 1e-12,
        "constant_reduction": 1e-12,
        "descent": 1e-6,
        "naturality_sl2z": 1e-10,
        "signature_split": 1e-9,
        "gram_condition": 1e3,
        "fg_plugback": 1e-7,
        "fg_lie_oracle": 1e-7,
        "fg_coclosed_zero": 1e-8,
        "dimension_gap": 0.5,
    },
    "teich-connection": {
        "curvature_two_ways_constant": 1e-8,
        "curvature_two_ways_seeded": 1e-6,
        "cohomology_invariance": 1e-6,
        "condition_type": 1e-6,
        "condition_dbar": 1e-6,
        "condition_lambda": 1e-6,
        "condition_horizontal": 1e-6,
        "lie_reproduction": 1e-6,
    },
    "theta": {
        "roundtrip": 1e-12,
        "star_adjoint_flag": 1e-10,
        "wedge_omega_flag": 1e-10,
        "inner_pairing": 1e-9,
        "symplectic_pairing": 1e-9,
        "lie_beta_oracle": 1e-7,
        "del_lambda": 1e-7,
        "closed_correction": 1e-7,
        "integrability_bridge": 1e-7,
        "bridge_correlation": 0.999,
        "pairing_vs_wp": 1e-7,
    },
}


@dataclass
class CheckEntry:
    name: str
    residual: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.residual <= self.tol

    def as_dict(self) -> dict:
        return {"name": self.name, "residual": self.residual,
                "tol": self.tol, "pass": self.passed}


@dataclass
class CheckReport:
    suite: str
    params: dict
    checks: list[CheckEntry] = field(default_factory=list)
    wall_ms: int = 0
    _t0: float = field(default_factory=time.perf_counter, repr=False)

    def add(self, name: str, residual: float, tol: float) -> None:
        self.checks.append(CheckEntry(name, float(residual), float(tol)))

    def add_flag(self, name: str, ok: bool, tol: float = 0.5) -> None:
        """Binary check recorded as residual 0 (ok) or 1 (failed)."""
        self.checks.append(CheckEntry(name, 0.0 if ok else 1.0, tol))

    def finalize(self) -> "CheckReport":
        self.checks.sort(key=lambda c: c.name)
        self.wall_ms = int(round(1000 * (time.perf_counter() - self._t0)))
        return self

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def worst(self) -> CheckEntry | None:
        bad = [c for c in self.checks if not c.passed]
        pool = bad or self.checks
        return max(pool, key=lambda c: c.residual / max(c.tol, 1e-300)) if pool else None

    def as_dict(self) -> dict:
        params = dict(self.params)
        params.setdefault("tolerance_table_version", TOLERANCE_TABLE_VERSION)
        return {"suite": self.suite, "params": params,
                "checks": [c.as_dict() for c in self.checks],
                "wall_ms": self.wall_ms}

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True)


REPORT_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "geodesk check report",
    "type": "object",
    "required": ["suite", "params", "checks", "wall_ms"],
    "properties": {
        "suite": {"type": "string"},
        "params": {"type": "object"},
        "wall_ms": {"type": "integer", "minimum": 0},
        "checks": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "residual", "tol", "pass"],
                "properties": {
                    "name": {"type": "string"},
                    "residual": {"type": "number"},
                    "tol": {"type": "number"},
                    "pass": {"type": "boolean"},
                },
            },
        },
    },
}


def validate_report(doc: dict) -> list[str]:
    """Minimal structural validation against REPORT_SCHEMA; returns problems."""
    problems = []
    for key in ("suite", "params", "checks", "wall_ms"):
        if key not in doc:
            problems.append(f"missing key {key!r}")
    if not isinstance(doc.get("suite", ""), str):
        problems.append("suite must be a string")
    if not isinstance(doc.get("params", {}), dict):
        problems.append("params must be an object")
    if not isinstance(doc.get("wall_ms", 0), int):
        problems.append("wall_ms must be an integer")
    for i, c in enumerate(doc.get("checks", [])):
        for key in ("name", "residual", "tol", "pass"):
            if key not in c:
                problems.append(f"checks[{i}] missing {key!r}")
        if "residual" in c and "tol" in c and "pass" in c:
            if bool(c["residual"] <= c["tol"]) != bool(c["pass"]):
                problems.append(f"checks[{i}] pass flag inconsistent")
    return problems


def compare_to_baseline(report: CheckReport, baseline: dict, factor: float = 10.0) -> list[str]:
    """Names of checks whose residual regressed by more than `factor`."""
    base = {c["name"]: c["residual"] for c in baseline.get("checks", [])}
    floor = 1e-15
    return [c.name for c in report.checks
            if c.name in base and c.residual > factor * max(base[c.name], floor)]


def suite_tolerances(suite: str, tol_scale: float = 1.0) -> dict[str, float]:
    table = TOLERANCES.get(suite, {})
    return {k: v * tol_scale for k, v in table.items()}

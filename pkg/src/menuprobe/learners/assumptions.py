"""Validators for the genericity conditions the learners rely on.

* ``nonparallel`` -- for every action, no two types have parallel effective
  gradients (needed for single-round identification).
* ``no_dominant`` -- on a 1-D space no type has one action that is best everywhere.
* ``breakpoints`` -- on a 1-D space no two types switch away from the same
  action at the same point towards different actions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import GameInstance
from ..geometry import build_envelope

PARALLEL_TOL = 1e-9
BREAKPOINT_TOL = 1e-9


@dataclass(frozen=True)
class Violation:
    assumption: str
    types: tuple
    action: int | None = None
    point: float | None = None
    message: str = ""

    def to_dict(self) -> dict:
        return {"assumption": self.assumption, "types": list(self.types), "action": self.action,
                "point": self.point, "message": self.message}


@dataclass
class AssumptionReport:
    """Outcome of the validators that were run; ``None`` means not checked."""

    nonparallel_ok: bool | None = None
    no_dominant_ok: bool | None = None
    breakpoints_ok: bool | None = None
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(flag is not False for flag in (self.nonparallel_ok, self.no_dominant_ok, self.breakpoints_ok))

    def merge(self, other: "AssumptionReport") -> "AssumptionReport":
        def pick(a, b):
            return b if a is None else a if b is None else a and b

        return AssumptionReport(
            pick(self.nonparallel_ok, other.nonparallel_ok),
            pick(self.no_dominant_ok, other.no_dominant_ok),
            pick(self.breakpoints_ok, other.breakpoints_ok),
            self.violations + other.violations,
        )

    def to_dict(self) -> dict:
        return {
            "nonparallel_ok": self.nonparallel_ok,
            "no_dominant_ok": self.no_dominant_ok,
            "breakpoints_ok": self.breakpoints_ok,
            "violations": [v.to_dict() for v in self.violations],
        }

    def describe(self, limit: int = 20) -> str:
        names = {"nonparallel_ok": "non-parallel gradients", "no_dominant_ok": "no dominant action",
                 "breakpoints_ok": "no shared switching breakpoints"}
        lines = []
        for key, label in names.items():
            flag = getattr(self, key)
            status = "not checked" if flag is None else "ok" if flag else "VIOLATED"
            lines.append(f"{label}: {status}")
        lines.extend(f"  - {v.message}" for v in self.violations[:limit])
        if len(self.violations) > limit:
            lines.append(f"  ... and {len(self.violations) - limit} more")
        return "\n".join(lines)


def check_assumption_nonparallel(game: GameInstance) -> AssumptionReport:
    space = game.space
    if space.effective_dim == 1:
        if game.n_types < 2:
            return AssumptionReport(nonparallel_ok=True)
        ids = (game.types[0].type_id, game.types[1].type_id)
        msg = "effective dimension is 1: all gradients are parallel, single-round learning impossible"
        return AssumptionReport(nonparallel_ok=False, violations=[Violation("nonparallel", ids, message=msg)])
    W = np.stack([ty.effective(space)[0] for ty in game.types])   # (K, n, d)
    norms = np.linalg.norm(W, axis=-1)                             # (K, n)
    dots = np.abs(np.einsum("knd,lnd->nkl", W, W))                 # (n, K, K)
    bound = (1 - PARALLEL_TOL) * np.einsum("kn,ln->nkl", norms, norms)
    parallel = np.triu(dots >= bound, k=1)
    violations = []
    for j, a, b in sorted(zip(*np.nonzero(parallel)), key=lambda r: (r[1], r[2], r[0])):
        ids = (game.types[a].type_id, game.types[b].type_id)
        violations.append(Violation("nonparallel", ids, int(j),
                                    message=f"types {ids[0]!r} and {ids[1]!r} have parallel gradients for action {j}"))
    return AssumptionReport(nonparallel_ok=not violations, violations=violations)


def check_assumption_no_dominant(game: GameInstance) -> AssumptionReport:
    violations = []
    for ty in game.types:
        env = build_envelope(ty, game.space)
        if env.n_segments == 1:
            j = int(env.actions[0])
            violations.append(Violation("no_dominant", (ty.type_id,), j,
                                        message=f"type {ty.type_id!r}: action {j} is dominant on the whole interval"))
    return AssumptionReport(no_dominant_ok=not violations, violations=violations)


def check_assumption_breakpoints(game: GameInstance) -> AssumptionReport:
    labelled = []
    for ty in game.types:
        env = build_envelope(ty, game.space)
        labelled.extend((t, j_in, j_out, ty.type_id) for t, j_in, j_out in env.transitions())
    labelled.sort(key=lambda r: r[0])
    violations = []
    for i, (t, j_in, j_out, tid) in enumerate(labelled):
        for t2, j_in2, j_out2, tid2 in labelled[i + 1:]:
            if t2 - t > BREAKPOINT_TOL:
                break
            if tid2 != tid and j_in2 == j_in and j_out2 != j_out:
                violations.append(Violation(
                    "breakpoints", (tid, tid2), j_in, t,
                    message=(f"types {tid!r} and {tid2!r} both leave action {j_in} at t={t:.6g} "
                             f"(towards {j_out} and {j_out2})")))
    return AssumptionReport(breakpoints_ok=not violations, violations=violations)


def check_all(game: GameInstance) -> AssumptionReport:
    """Every validator that applies to the game's dimension."""
    report = check_assumption_nonparallel(game)
    if game.space.effective_dim == 1:
        report = report.merge(check_assumption_no_dominant(game)).merge(check_assumption_breakpoints(game))
    return report

"""Command-line experiment harness: ``gen``, ``run``, ``bench`` and ``check``.

Exit codes: 0 success, 1 wrong answer (or a violated assumption for
``check``), 2 precondition or gate failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import os
import sys
import time
from dataclasses import dataclass
from itertools import product
from typing import Callable

import numpy as np

from . import games
from .core import GAME_CLASSES, AgentType, GameInstance, SimulatedAgent
from .errors import GateError, MenuProbeError
from .learners import (
    behaviorally_equivalent,
    check_all,
    check_assumption_breakpoints,
    check_assumption_no_dominant,
    check_assumption_nonparallel,
    design_ball_menu,
    learn_infinite_type,
    learn_via_menu,
    learn_via_single_strategy,
    plan_line_game,
    single_round_identify,
)
from .learners.finite import LearnerResult

LEARNERS = ("single-round", "menu", "single-strategy", "infinite")
CLASSES = GAME_CLASSES + ("hardness",)
CSV_HEADER = ["class", "m", "n", "K", "learner", "trials", "mean_rounds", "max_rounds", "accuracy", "wall_ms"]
REQUIREMENTS = ("auto", "none", "no_dominant", "interior_minimum")
CHECKS = {
    "nonparallel": check_assumption_nonparallel,
    "no_dominant": check_assumption_no_dominant,
    "breakpoints": check_assumption_breakpoints,
}

CSV_DOC = """\
summary CSV columns (one row per class/m/n/K/learner, rows sorted):
  class        game class (stackelberg, security, contract, info_acq, generic, hardness)
  m            strategy dimension (info_acq: nw*no; security: number of targets)
  n            agent actions
  K            number of candidate types
  learner      single-round | menu | single-strategy | infinite
  trials       number of seeds (seed, seed+1, ...); every type is run as ground truth
  mean_rounds  mean transcript length (agent queries for the infinite learner)
  max_rounds   largest transcript length
  accuracy     fraction of runs identifying the true type (infinite: behaviourally equivalent)
  wall_ms      wall-clock milliseconds for the row (0 with --no-timing)
"""


@dataclass
class ExperimentConfig:
    """Every setting of an experiment.  ``bench`` accepts comma-separated lists
    for ``game_class``, ``m``, ``n``, ``K`` and ``learner``."""

    game_class: str = "stackelberg"
    m: object = 3
    n: object = 3
    K: object = 4
    r: int = 1
    nw: int = 2
    no: int = 2
    learner: object = "single-round"
    trials: int = 1
    seed: int = 0
    precision_bits: int = 40
    require: str = "auto"
    out: str | None = None
    game: str | None = None
    true_type: str | None = None
    no_timing: bool = False

    def __post_init__(self):
        if int(self.trials) < 1:
            raise ValueError("trials must be >= 1")
        if int(self.precision_bits) < 1:
            raise ValueError("precision_bits must be >= 1")
        if self.require not in REQUIREMENTS:
            raise ValueError(f"require must be one of {REQUIREMENTS}")


def _as_list(value, cast=str) -> list:
    if isinstance(value, (list, tuple)):
        items = list(value)
    else:
        items = [v for v in str(value).split(",") if v.strip()]
    return [cast(str(v).strip()) if cast is not str else str(v).strip() for v in items]


def _single(value, cast=int):
    items = _as_list(value, cast)
    if len(items) != 1:
        raise ValueError(f"expected a single value, got {value!r}")
    return items[0]


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    """Config file values overridden by any flag given on the command line."""
    values: dict = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            data = json.load(fh)
        if "class" in data:
            data["game_class"] = data.pop("class")
        fields = {f.name for f in dataclasses.fields(ExperimentConfig)}
        unknown = set(data) - fields
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        values.update(data)
    for f in dataclasses.fields(ExperimentConfig):
        flag = getattr(args, f.name, None)
        if flag is not None and flag is not False:
            values[f.name] = flag
    if "seed" not in values and os.environ.get("MENUPROBE_SEED"):
        values["seed"] = int(os.environ["MENUPROBE_SEED"])
    return ExperimentConfig(**values)


# ---------------------------------------------------------------------------
# Instances and learners


def _requirement(cfg: ExperimentConfig, game_class: str, m: int) -> str | None:
    if cfg.require == "none":
        return None
    if cfg.require == "auto":
        return "no_dominant" if game_class == "stackelberg" and m == 2 else None
    return cfg.require


def make_game(cfg: ExperimentConfig, game_class: str, m: int, n: int, K: int, seed: int) -> GameInstance:
    if game_class == "stackelberg":
        return games.gen_stackelberg(m, n, K, seed, require=_requirement(cfg, game_class, m))
    if game_class == "security":
        return games.gen_security(n, cfg.r, K, seed).game
    if game_class == "contract":
        return games.gen_contract(m, n, K, seed)
    if game_class == "info_acq":
        return games.gen_info_acquisition(cfg.nw, cfg.no, n, K, seed)
    if game_class == "generic":
        return games.gen_generic(n, m, K, seed)
    if game_class == "hardness":
        return games.build_hardness_example(m)[0]
    raise ValueError(f"unknown class {game_class!r}")


def _line_game(game: GameInstance) -> GameInstance:
    """Security games are reduced to their uniform-coverage slice for the 1-D learners."""
    if game.game_class == "security" and game.space.effective_dim > 1:
        return games.security_slice(game)
    return game


def prepare_learner(game: GameInstance, learner: str, cfg: ExperimentConfig,
                    seed: int) -> Callable[[AgentType], tuple[LearnerResult, bool]]:
    """Per-game precomputation; returns ``run(true_type) -> (result, correct)``.

    Raises :class:`GateError` when the learner does not apply to the game.
    """
    hardness = "hardness" in game.metadata

    def exact(play_game, fn):
        def run(ty):
            result = fn(play_game, SimulatedAgent(ty, play_game.space))
            return result, result.identified_type == ty.type_id
        return run

    if learner == "single-round":
        design = design_ball_menu(game, seed)
        return exact(game, lambda g, a: single_round_identify(g, a, design=design))
    if learner in ("menu", "single-strategy"):
        if hardness:
            menu = games.hardness_menu(game)
            fn = games.identify_via_hardness_menu if learner == "menu" else games.sequential_probe_baseline
            return exact(game, lambda g, a: fn(g, menu, a))
        line = _line_game(game)
        plan = plan_line_game(line)
        fn = learn_via_menu if learner == "menu" else learn_via_single_strategy
        return exact(line, lambda g, a: fn(g, a, plan=plan))
    if learner == "infinite":
        space = game.space

        def run(ty):
            oracle = games.oracle_strategies(ty, space)
            result = learn_infinite_type(SimulatedAgent(ty, space), oracle, space, cfg.precision_bits, seed)
            recon = result.reconstruction
            if not recon.complete:
                return result, False
            ok, _ = behaviorally_equivalent(recon.to_agent_type(), ty, space, probes=10_000, seed=seed)
            return result, ok
        if space.effective_dim < 2 or not space.is_identity_chart:
            raise GateError("the infinite-type learner needs an identity chart with dimension >= 2")
        return run
    raise ValueError(f"unknown learner {learner!r}")


# ---------------------------------------------------------------------------
# Commands


def _write(text: str, path: str | None) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _find_type(game: GameInstance, key) -> AgentType:
    for ty in game.types:
        if str(ty.type_id) == str(key):
            return ty
    raise ValueError(f"no type with id {key!r}; available: {[t.type_id for t in game.types]}")


def cmd_gen(cfg: ExperimentConfig) -> int:
    cls = _single(cfg.game_class, str)
    m, n, K = _single(cfg.m), _single(cfg.n), _single(cfg.K)
    game = make_game(cfg, cls, m, n, K, cfg.seed)
    _write(game.to_json(indent=2) + "\n", cfg.out)
    report = check_all(game)
    print(f"{cls}: {game.n_types} types, {game.n_actions} actions, "
          f"effective dimension {game.space.effective_dim}", file=sys.stderr)
    print(report.describe(), file=sys.stderr)
    if game.space.effective_dim == 1 and game.n_types >= 2:
        print("warning: one-dimensional strategy space, single-round identification is impossible; "
              "use the menu or single-strategy learner", file=sys.stderr)
    if cls == "security":
        line = games.security_slice(game)
        report = check_assumption_no_dominant(line).merge(check_assumption_breakpoints(line))
        print("uniform-coverage slice:", file=sys.stderr)
        print(report.describe(), file=sys.stderr)
    return 0


def cmd_run(cfg: ExperimentConfig) -> int:
    if not cfg.game:
        raise ValueError("run needs --game FILE")
    if cfg.true_type is None:
        raise ValueError("run needs --true-type ID")
    with open(cfg.game) as fh:
        game = GameInstance.from_json(fh.read())
    truth = _find_type(game, cfg.true_type)
    learner = _single(cfg.learner, str)
    run = prepare_learner(game, learner, cfg, cfg.seed)
    result, correct = run(truth)
    doc = result.to_dict()
    doc["true_type"] = truth.type_id
    doc["correct"] = bool(correct)
    doc["queries"] = result.rounds
    _write(json.dumps(doc, indent=2) + "\n", cfg.out)
    label = "reconstructed" if result.reconstruction is not None else f"identified {result.identified_type!r}"
    print(f"{learner}: {label} in {result.rounds} rounds ({'correct' if correct else 'WRONG'})", file=sys.stderr)
    return 0 if correct else 1


def bench_rows(cfg: ExperimentConfig, log=None) -> list[list]:
    rows = []
    grid = product(_as_list(cfg.game_class), _as_list(cfg.m, int), _as_list(cfg.n, int), _as_list(cfg.K, int),
                   _as_list(cfg.learner))
    for cls, m, n, K, learner in grid:
        if learner not in LEARNERS:
            raise ValueError(f"unknown learner {learner!r}")
        start = time.perf_counter()
        rounds, hits, skipped = [], 0, None
        for trial in range(cfg.trials):
            seed = cfg.seed + trial
            game = make_game(cfg, cls, m, n, K, seed)
            try:
                run = prepare_learner(game, learner, cfg, seed)
            except GateError as exc:
                skipped = str(exc)
                break
            for ty in game.types:
                try:
                    result, ok = run(ty)
                except GateError as exc:
                    skipped = str(exc)
                    break
                except MenuProbeError:
                    ok, result = False, None
                hits += bool(ok)
                if result is not None:
                    rounds.append(result.rounds)
            if skipped:
                break
        if skipped:
            if log:
                print(f"skipping {cls} m={m} n={n} K={K} {learner}: {skipped}", file=log)
            continue
        total = cfg.trials * game.n_types
        wall = 0.0 if cfg.no_timing else 1000 * (time.perf_counter() - start)
        rows.append([cls, game.space.ambient_dim, game.n_actions, game.n_types, learner, cfg.trials,
                     f"{np.mean(rounds):.4f}" if rounds else "nan", max(rounds) if rounds else 0,
                     f"{hits / total:.4f}", f"{wall:.1f}"])
    rows.sort(key=lambda r: tuple(str(v) if isinstance(v, str) else f"{v:012d}" for v in r[:5]))
    return rows


def cmd_bench(cfg: ExperimentConfig) -> int:
    rows = bench_rows(cfg, log=sys.stderr)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    writer.writerows(rows)
    _write(buf.getvalue(), cfg.out)
    return 0


def cmd_check(args: argparse.Namespace) -> int:
    with open(args.game) as fh:
        game = GameInstance.from_json(fh.read())
    if args.slice:
        game = _line_game(game)
    if args.assumption:
        report = CHECKS[args.assumption[0]](game)
        for name in args.assumption[1:]:
            report = report.merge(CHECKS[name](game))
    else:
        report = check_all(game)
    print(report.describe(), file=sys.stderr)
    _write(json.dumps(report.to_dict(), indent=2) + "\n", args.out)
    return 0 if report.ok else 1


# ---------------------------------------------------------------------------
# Argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="menuprobe", formatter_class=argparse.RawDescriptionHelpFormatter,
        description="Generate principal-agent games, run type-elicitation learners against simulated agents "
                    "and summarise round counts.",
        epilog=CSV_DOC + "\nexit codes: 0 success, 1 wrong answer / assumption violated, 2 gate or bad input\n"
                         "seed fallback: MENUPROBE_SEED environment variable")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, lists=False):
        kind = str if lists else int
        suffix = " (comma-separated list allowed)" if lists else ""
        p.add_argument("--config", help="JSON file with ExperimentConfig fields; flags take precedence")
        p.add_argument("--class", dest="game_class", help=f"game class: {', '.join(CLASSES)}{suffix}")
        p.add_argument("--m", type=kind, help="strategy dimension" + suffix)
        p.add_argument("--n", type=kind, help="agent actions" + suffix)
        p.add_argument("--K", type=kind, help="number of types" + suffix)
        p.add_argument("--r", type=int, help="security resources")
        p.add_argument("--nw", type=int, help="information acquisition: states")
        p.add_argument("--no", type=int, help="information acquisition: observations")
        p.add_argument("--require", choices=REQUIREMENTS,
                       help="envelope shape for one-dimensional Stackelberg types (auto: no_dominant when m=2)")
        p.add_argument("--seed", type=int, help="random seed (default: $MENUPROBE_SEED or 0)")
        p.add_argument("--out", help="output file (default: stdout)")

    p = sub.add_parser("gen", help="write a GameInstance JSON and print its assumption report")
    common(p)

    p = sub.add_parser("run", help="simulate one learner against one true type")
    common(p)
    p.add_argument("--game", help="GameInstance JSON file")
    p.add_argument("--true-type", dest="true_type", help="id of the simulated agent's type")
    p.add_argument("--learner", choices=LEARNERS)
    p.add_argument("--precision-bits", dest="precision_bits", type=int, help="bisection precision L (default 40)")

    p = sub.add_parser("bench", help="sweep a grid of games and learners, write a summary CSV",
                       formatter_class=argparse.RawDescriptionHelpFormatter, epilog=CSV_DOC)
    common(p, lists=True)
    p.add_argument("--learner", help=f"learner(s): {', '.join(LEARNERS)} (comma-separated list allowed)")
    p.add_argument("--trials", type=int, help="seeds per grid cell")
    p.add_argument("--precision-bits", dest="precision_bits", type=int, help="bisection precision L (default 40)")
    p.add_argument("--no-timing", dest="no_timing", action="store_true",
                   help="write wall_ms as 0 so repeated runs are byte-identical")

    p = sub.add_parser("check", help="report which assumptions a game satisfies")
    p.add_argument("game", help="GameInstance JSON file")
    p.add_argument("--assumption", action="append", choices=sorted(CHECKS),
                   help="check only these (repeatable); default: all that apply")
    p.add_argument("--slice", action="store_true", help="check a security game on its uniform-coverage slice")
    p.add_argument("--out", help="write the JSON report here (default: stdout)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "check":
            return cmd_check(args)
        cfg = load_config(args)
        return {"gen": cmd_gen, "run": cmd_run, "bench": cmd_bench}[args.command](cfg)
    except GateError as exc:
        print(f"gate: {exc}", file=sys.stderr)
        return 2
    except MenuProbeError as exc:
        print(f"failed: {exc}", file=sys.stderr)
        return 1
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

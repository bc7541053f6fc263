"""Exhaustive small-scale checking: model and team enumeration, formula
corpora, and the equivalence sweeps that stand in for proofs.

Everything is deterministic: models, teams, and formulas come out in a
fixed construction order, reports list failures in encounter order, and
the JSON serializations sort their keys, so identical parameters give
byte-identical reports.  Wall-clock numbers are kept off the reports for
the same reason.

The sweeps run in two tiers.  The broad tier walks the whole grid with
the fast evaluator; the independence tier re-runs a reduced grid with the
pruning-disabled evaluator paths (`oracle` or `naive`), so the evidence
does not rest on the very rewrites the theorems justify.  Points whose
exhaustive cost estimate is out of budget are skipped and counted.
"""

from __future__ import annotations

import itertools
import json
import os
import re
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Mapping, Sequence

from .analysis import InvariantBreach, compute_height, find_small_witness
from .atoms import AtomRegistry, DEFAULT_REGISTRY
from .evaluator import Evaluator, upward_fragment
from .model import (
    Model,
    Relation,
    Row,
    SINGLETON_EMPTY_TEAM,
    Team,
    compile_fo,
    team_project,
    team_restrict,
)
from .syntax import (
    And,
    BoolLit,
    DepAtom,
    EqLit,
    Exists,
    Forall,
    Formula,
    Or,
    Possibly,
    RelLit,
    RestrictedBy,
    Var,
    desugar_possibility,
    flatten,
    free_variables,
    pretty,
    subformulas,
)
from .translator import desugar_negated_atoms, translate


class HarnessError(Exception):
    pass


# ---------------------------------------------------------------------------
# Grid configuration

GRID_ENV_VAR = "TEAMSEM_GRID"


@dataclass(frozen=True)
class GridConfig:
    """Size knobs for the exhaustive sweeps.

    The defaults keep the worst corpus shapes under a few minutes: domains
    of two and three elements, teams of at most four assignments, formula
    depth three, two team variables.
    """

    doms: tuple[int, ...] = (2, 3)
    max_rows: int = 4
    max_depth: int = 3
    max_vars: int = 2

    def __post_init__(self) -> None:
        if not self.doms or any(d < 2 for d in self.doms):
            raise HarnessError("domains need at least two elements")
        if any(d > 8 for d in self.doms):
            raise HarnessError("domains are capped at eight elements")
        if self.max_rows < 0 or self.max_depth < 0 or self.max_vars < 1:
            raise HarnessError("grid sizes must be nonnegative (and at least one variable)")

    @staticmethod
    def parse(text: str) -> "GridConfig":
        """Parse 'doms=2,3;max_rows=4;max_depth=3;max_vars=2' (any subset
        of the keys, semicolon separated)."""
        kwargs: dict = {}
        for part in text.split(";"):
            part = part.strip()
            if not part:
                continue
            key, eq, value = part.partition("=")
            key = key.strip()
            value = value.strip()
            if not eq:
                raise HarnessError(f"grid entry {part!r} is not key=value")
            try:
                if key == "doms":
                    kwargs["doms"] = tuple(int(v) for v in value.split(","))
                elif key in ("max_rows", "max_depth", "max_vars"):
                    kwargs[key] = int(value)
                else:
                    raise HarnessError(f"unknown grid key {key!r}")
            except ValueError:
                raise HarnessError(f"bad grid value {value!r} for {key!r}") from None
        return GridConfig(**kwargs)

    def as_dict(self) -> dict:
        return {
            "doms": list(self.doms),
            "max_rows": self.max_rows,
            "max_depth": self.max_depth,
            "max_vars": self.max_vars,
        }


DEFAULT_GRID = GridConfig()


def grid_from_env(default: GridConfig | None = None) -> GridConfig:
    """The default grid, overridden by the TEAMSEM_GRID environment
    variable when set (for CI sizing)."""
    text = os.environ.get(GRID_ENV_VAR)
    if text:
        return GridConfig.parse(text)
    return default or DEFAULT_GRID


# ---------------------------------------------------------------------------
# Model and team enumeration

def _letters(n: int) -> tuple[str, ...]:
    return tuple("abcdefgh"[:n])


def permute_model(model: Model, mapping: Mapping[str, str]) -> Model:
    """Rename domain elements; the domain stays sorted."""
    return Model(
        tuple(sorted(mapping[d] for d in model.domain)),
        {
            name: Relation(
                rel.arity,
                frozenset(tuple(mapping[e] for e in t) for t in rel.tuples),
            )
            for name, rel in model.relations.items()
        },
        {name: mapping[v] for name, v in model.constants.items()},
    )


def permute_team(team: Team, mapping: Mapping[str, str]) -> Team:
    return Team(
        team.vars, frozenset(tuple(mapping[e] for e in r) for r in team.rows)
    )


def _model_key(model: Model) -> tuple:
    return (
        tuple(sorted(model.domain)),
        tuple(
            sorted(
                (name, rel.arity, tuple(sorted(rel.tuples)))
                for name, rel in model.relations.items()
            )
        ),
        tuple(sorted(model.constants.items())),
    )


def _is_canonical(model: Model) -> bool:
    base = _model_key(model)
    for perm in itertools.permutations(model.domain):
        mapping = dict(zip(model.domain, perm))
        if _model_key(permute_model(model, mapping)) < base:
            return False
    return True


def enumerate_models(
    signature: Mapping[str, int], max_dom: int, iso_reduce: bool = False
) -> Iterator[Model]:
    """All models over the signature with 2..max_dom elements, in a fixed
    order (domain size, then relation tables by size and contents).

    With `iso_reduce` only the least representative of each isomorphism
    class (under domain permutations) is kept.
    """
    if max_dom < 2:
        raise HarnessError("teams need at least two domain elements to matter")
    if max_dom > 8:
        raise HarnessError("model enumeration is capped at eight elements")
    names = sorted(signature)
    for n in range(2, max_dom + 1):
        dom = _letters(n)
        per_relation: list[list[frozenset[Row]]] = []
        for name in names:
            tuples = sorted(itertools.product(dom, repeat=signature[name]))
            tables = [
                frozenset(combo)
                for size in range(len(tuples) + 1)
                for combo in itertools.combinations(tuples, size)
            ]
            per_relation.append(tables)
        for combo in itertools.product(*per_relation):
            model = Model(
                dom,
                {
                    name: Relation(signature[name], rel)
                    for name, rel in zip(names, combo)
                },
                {},
            )
            if iso_reduce and not _is_canonical(model):
                continue
            yield model


def enumerate_teams(
    model: Model, vars: tuple[str, ...], max_rows: int
) -> Iterator[Team]:
    """All duplicate-free teams over `vars` with at most `max_rows`
    assignments, the empty team first, then by size and row order."""
    rows = sorted(itertools.product(model.domain, repeat=len(vars)))
    for size in range(0, min(max_rows, len(rows)) + 1):
        for combo in itertools.combinations(rows, size):
            yield Team(vars, frozenset(combo))


def _grid_models(
    signature: Mapping[str, int], grid: GridConfig, iso_reduce: bool = False
) -> list[Model]:
    """Exactly one pass per requested domain size (enumerate_models ranges
    from two upward, so smaller sizes must be filtered back out)."""
    return [
        model
        for d in grid.doms
        for model in enumerate_models(signature, d, iso_reduce)
        if len(model.domain) == d
    ]


# ---------------------------------------------------------------------------
# Formula corpora

_ATOM_SPEC = re.compile(r"([A-Za-z_]\w*)(?:\((\d+)\))?\Z")

# the corpus for the translation sweep: every upwards closed built-in that
# the compiler accepts directly, plus constancy
DEFAULT_TRANSLATION_ATOMS = (
    "NE",
    "intersect",
    "inconst",
    "big(2)",
    "total",
    "nondep",
    "nonexcl",
    "const",
)
UPWARD_ATOMS = ("NE", "intersect", "inconst", "big(2)", "total", "nondep", "nonexcl")
BOUNDED_ATOMS = ("NE", "intersect", "inconst", "big(2)", "nondep", "nonexcl", "total", "const")
LOCALITY_ATOMS = ("NE", "const", "inconst", "dep", "incl", "nonexcl", "total")
POSSIBILITY_ATOMS = ("NE", "const", "inconst", "dep", "incl")


def _spread(items: Sequence, cap: int) -> list:
    """At most `cap` items, spaced evenly through the sequence (always
    including the ends) -- the deterministic sampling used to keep the
    corpus from exploding combinatorially."""
    if cap <= 0 or len(items) <= cap:
        return list(items)
    if cap == 1:
        return [items[0]]
    last = len(items) - 1
    picked = [items[round(i * last / (cap - 1))] for i in range(cap)]
    return list(dict.fromkeys(picked))


def _atom_instances(
    spec: str, vars: tuple[str, ...], registry: AtomRegistry
) -> list[DepAtom]:
    m = _ATOM_SPEC.match(spec)
    if not m:
        raise HarnessError(f"bad atom spec {spec!r} (expected name or name(k))")
    name, param_text = m.group(1), m.group(2)
    param = int(param_text) if param_text else None
    info = {row["name"]: row for row in registry.catalog()}
    if name not in info:
        raise HarnessError(f"unknown atom {name!r}")
    if info[name].get("parameterized") and param is None:
        raise HarnessError(f"atom {name} needs a parameter, e.g. {name}(2)")
    if not info[name].get("parameterized") and param is not None:
        raise HarnessError(f"atom {name} takes no parameter")
    groups = info[name]["groups"]
    if groups == 0:
        return [DepAtom(name, (), param)]
    if groups == 1:
        return [DepAtom(name, ((v,),), param) for v in vars]
    if groups == 2:
        pairs = [(u, w) for u in vars for w in vars if u != w] or [
            (v, v) for v in vars
        ]
        return [DepAtom(name, ((u,), (w,)), param) for u, w in pairs]
    if groups == 3:
        triples = [
            (u, w, z)
            for u in vars
            for w in vars
            for z in vars
            if u != w
        ] or [(v, v, v) for v in vars]
        return [
            DepAtom(name, ((u,), (w,), (z,)), param)
            for u, w, z in _spread(triples, 6)
        ]
    raise HarnessError(f"atom {name} has unsupported group count {groups}")


def generate_formulas(
    atoms: Sequence[str],
    signature: Mapping[str, int],
    max_depth: int,
    vars: tuple[str, ...],
    registry: AtomRegistry | None = None,
    binary_cap: int = 5,
    mix_cap: int = 3,
    quant_cap: int = 4,
) -> list[Formula]:
    """A deterministic negation-normal-form corpus.

    Depth 0 is every literal over the signature plus every atom instance
    over `vars`.  Each further depth combines evenly spaced samples of the
    previous layer (`binary_cap` left operands against `mix_cap` samples
    each of the leaves and the previous layer) under disjunction and
    conjunction, and quantifies `quant_cap` sampled bodies by each
    variable.  Quantifiers only wrap bodies whose atoms are all upwards
    closed (first-order bodies always qualify): existentials over other
    bodies have no subexponential evaluation path, and the caps exist
    precisely to keep every emitted formula checkable.  Results are
    deduplicated structurally; the count at fixed parameters is pinned by
    the test suite.
    """
    if len(set(vars)) != len(vars) or not vars:
        raise HarnessError("corpus variables must be distinct and nonempty")
    reg = registry or DEFAULT_REGISTRY
    leaves: list[Formula] = []
    for name in sorted(signature):
        for tup in itertools.product(vars, repeat=signature[name]):
            args = tuple(Var(v) for v in tup)
            leaves.append(RelLit(name, True, args))
            leaves.append(RelLit(name, False, args))
    for i, u in enumerate(vars):
        for w in vars[i + 1 :]:
            leaves.append(EqLit(True, Var(u), Var(w)))
            leaves.append(EqLit(False, Var(u), Var(w)))
    for spec in atoms:
        leaves.extend(_atom_instances(spec, vars, reg))

    seen: dict[Formula, None] = dict.fromkeys(leaves)
    layer = list(seen)
    gate_cache: dict[int, bool] = {}
    for _ in range(max_depth):
        lefts = _spread(layer, binary_cap)
        rights = list(
            dict.fromkeys(_spread(leaves, mix_cap) + _spread(layer, mix_cap))
        )
        fresh: list[Formula] = []
        for a in lefts:
            for b in rights:
                fresh.append(Or(a, b))
                fresh.append(And(a, b))
        bodies = _spread(
            [f for f in layer if upward_fragment(f, reg, gate_cache)], quant_cap
        )
        for v in vars:
            for body in bodies:
                fresh.append(Exists(v, body))
                fresh.append(Forall(v, body))
        layer = []
        for f in fresh:
            if f not in seen:
                seen[f] = None
                layer.append(f)
    return list(seen)


# ---------------------------------------------------------------------------
# Cost estimation for the exhaustive modes

def eval_cost_estimate(
    phi: Formula, dom_size: int, n_rows: int, mode: str = "oracle"
) -> float:
    """A deliberately pessimistic count of the basic steps the `oracle`
    or `naive` evaluator would take.  Used only to decide which grid
    points the independence tiers can afford; skipped points are counted,
    never silently dropped."""
    cap = 1e18

    def go(node: Formula, n: int) -> float:
        n = max(n, 1)
        if isinstance(node, (BoolLit, RelLit, EqLit, DepAtom)):
            return n
        if isinstance(node, And):
            return go(node.left, n) + go(node.right, n)
        if isinstance(node, Or):
            branches = 3.0**n if mode == "naive" else 2.0**n
            return min(cap, branches * (go(node.left, n) + go(node.right, n) + n))
        if isinstance(node, Exists):
            if mode == "naive":
                return min(cap, (2.0**dom_size - 1) ** n * go(node.body, n * dom_size))
            m = n * dom_size
            return min(cap, 2.0**m * (4 + go(node.body, m)))
        if isinstance(node, Forall):
            return n + go(node.body, n * dom_size)
        if isinstance(node, Possibly):
            return min(cap, 2.0**n * (1 + go(node.body, n)))
        if isinstance(node, RestrictedBy):
            branches = 3.0**n if mode == "naive" else 2.0**n
            return min(cap, branches * (n + go(node.body, n)))
        raise HarnessError(f"cannot estimate {node!r}")

    return go(phi, n_rows)


DEFAULT_COST_BUDGET = 2e6


# ---------------------------------------------------------------------------
# Reports

@dataclass
class Report:
    """Outcome of one sweep: how many grid points were compared, which
    disagreed (with full reproduction data), and how many were skipped by
    the cost budget.  Serializations exclude wall-clock so identical
    parameters give identical bytes."""

    name: str
    params: dict
    checked: int = 0
    skipped: int = 0
    mismatches: list[dict] = field(default_factory=list)
    records: list[dict] | None = None
    elapsed: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.mismatches

    def summary(self) -> dict:
        return {
            "name": self.name,
            "ok": self.ok,
            "checked": self.checked,
            "skipped": self.skipped,
            "mismatch_count": len(self.mismatches),
            "mismatches": self.mismatches,
            "params": self.params,
        }

    def json_lines(self, verbose: bool = False) -> Iterator[str]:
        if verbose and self.records is not None:
            for record in self.records:
                yield json.dumps(record, sort_keys=True)
        yield json.dumps(self.summary(), sort_keys=True)


def _point(
    model: Model, team: Team, verdicts: dict, **extra
) -> dict:
    data = {
        "model": json.loads(model.to_json()),
        "team": json.loads(team.to_json()),
        "verdicts": verdicts,
        "ok": len(set(verdicts.values())) <= 1,
    }
    data.update(extra)
    return data


def _fv_tuple(phi: Formula) -> tuple[str, ...]:
    xs = tuple(sorted(free_variables(phi)))
    return xs if xs else ("x",)


def _run_tasks(fn: Callable, tasks: list, jobs: int) -> list:
    if jobs > 1 and len(tasks) > 1:
        import multiprocessing as mp

        with mp.get_context("fork").Pool(min(jobs, len(tasks))) as pool:
            return pool.map(fn, tasks, chunksize=1)
    return [fn(t) for t in tasks]


# ---------------------------------------------------------------------------
# Grid tasks (module level so --jobs can fork them)

def _equivalence_task(task) -> tuple[int, int, list[dict], list[dict]]:
    phi, psi, model, vars, max_rows, reg, modes, budget, verbose = task
    mode_l, mode_r = (modes, modes) if isinstance(modes, str) else modes
    if budget is not None:
        worst = max(
            (
                eval_cost_estimate(f, len(model.domain), max_rows, m)
                for f, m in ((phi, mode_l), (psi, mode_r))
                if m != "fast"
            ),
            default=0.0,
        )
        if worst > budget:
            return 0, 1, [], []
    ev_l = Evaluator(model, registry=reg, mode=mode_l)
    ev_r = ev_l if mode_r == mode_l else Evaluator(model, registry=reg, mode=mode_r)
    checked, mismatches, records = 0, [], []
    for team in enumerate_teams(model, vars, max_rows):
        a = ev_l.evaluate(phi, team)
        b = ev_r.evaluate(psi, team)
        checked += 1
        if a != b or verbose:
            record = _point(
                model,
                team,
                {"left": a, "right": b},
                left=pretty(phi),
                right=pretty(psi),
                modes=[mode_l, mode_r],
            )
            if a != b:
                mismatches.append(record)
            if verbose:
                records.append(record)
    return checked, 0, mismatches, records


def _translation_task(task) -> tuple[int, int, list[dict], list[dict]]:
    phi, tuple_vars, sentence, relation, model, max_rows, reg, mode, budget, verbose = task
    if budget is not None:
        if eval_cost_estimate(phi, len(model.domain), max_rows, mode) > budget:
            return 0, 1, [], []
    ev = Evaluator(model, registry=reg, mode=mode)
    compiled = compile_fo(model, sentence, {}, 0)
    checked, skipped, mismatches, records = 0, 0, [], []
    if tuple_vars:
        teams: Iterable[Team] = enumerate_teams(model, tuple_vars, max_rows)
    else:
        # a team over the empty tuple is empty or the lone empty assignment;
        # the compiled sentence only speaks for the nonempty one
        teams = [SINGLETON_EMPTY_TEAM]
        skipped = 1
    for team in teams:
        a = ev.evaluate(phi, team)
        if tuple_vars:
            b = compiled([], {relation: team_project(team, tuple_vars)})
        else:
            b = compiled([], {})
        checked += 1
        if a != b or verbose:
            record = _point(
                model,
                team,
                {"team_eval": a, "tarski": b},
                formula=pretty(phi),
                tuple=list(tuple_vars),
                sentence=pretty(sentence),
                relation=relation,
                mode=mode,
            )
            if a != b:
                mismatches.append(record)
            if verbose:
                records.append(record)
    return checked, skipped, mismatches, records


def _flatness_task(task) -> tuple[int, int, list[dict], list[dict]]:
    phi, model, max_rows, mode, budget, verbose = task
    if budget is not None:
        if eval_cost_estimate(phi, len(model.domain), max_rows, mode) > budget:
            return 0, 1, [], []
    xs = tuple(sorted(free_variables(phi)))
    ev = Evaluator(model, mode=mode)  # first-order corpus: registry unused
    compiled = compile_fo(model, phi, {v: i for i, v in enumerate(xs)}, len(xs))
    checked, mismatches, records = 0, [], []
    for team in enumerate_teams(model, xs, max_rows):
        a = ev.evaluate(phi, team)
        b = all(compiled(list(row), {}) for row in team.sorted_rows)
        checked += 1
        if a != b or verbose:
            record = _point(
                model,
                team,
                {"team_eval": a, "pointwise": b},
                formula=pretty(phi),
                mode=mode,
            )
            if a != b:
                mismatches.append(record)
            if verbose:
                records.append(record)
    return checked, 0, mismatches, records


def _locality_task(task) -> tuple[int, int, list[dict], list[dict]]:
    phi, model, max_rows, reg, mode, budget, verbose = task
    rows_cap = max_rows if len(model.domain) == 2 else min(2, max_rows)
    if budget is not None:
        if eval_cost_estimate(phi, len(model.domain), rows_cap, mode) > budget:
            return 0, 1, [], []
    xs = tuple(sorted(free_variables(phi)))
    extra = next(v for v in ("z", "w", "u", "t", "s") if v not in xs)
    ev = Evaluator(model, registry=reg, mode=mode)
    checked, mismatches, records = 0, [], []
    for team in enumerate_teams(model, xs + (extra,), rows_cap):
        a = ev.evaluate(phi, team)
        b = ev.evaluate(phi, team_restrict(team, xs))
        checked += 1
        if a != b or verbose:
            record = _point(
                model,
                team,
                {"padded": a, "restricted": b},
                formula=pretty(phi),
                dropped=extra,
                mode=mode,
            )
            if a != b:
                mismatches.append(record)
            if verbose:
                records.append(record)
    return checked, 0, mismatches, records


def _upflat_task(task) -> tuple[int, int, list[dict], list[dict]]:
    phi, model, max_rows, reg, mode, budget, verbose = task
    if budget is not None:
        if eval_cost_estimate(phi, len(model.domain), max_rows, mode) > budget:
            return 0, 1, [], []
    xs = tuple(sorted(free_variables(phi)))
    ev = Evaluator(model, registry=reg, mode=mode)
    flat = flatten(phi)
    compiled = compile_fo(model, flat, {v: i for i, v in enumerate(xs)}, len(xs))
    checked, mismatches, records = 0, [], []
    for big_team in enumerate_teams(model, xs, max_rows):
        rows = sorted(big_team.rows)
        flat_ok = all(compiled(list(row), {}) for row in rows)
        big_sat = ev.evaluate(phi, big_team)
        checked += 1
        if big_sat and not flat_ok:
            mismatches.append(
                _point(
                    model,
                    big_team,
                    {"satisfied": big_sat, "flattening_pointwise": flat_ok},
                    formula=pretty(phi),
                    kind="flattening-implication",
                    mode=mode,
                )
            )
        # closure: every satisfying subteam of a pointwise-flat superteam
        # forces the superteam.  When the superteam already satisfies (or
        # is not pointwise flat) the implication holds for all 2^|rows|
        # subteams at once; only the remaining case needs evaluations.
        n_subteams = 2 ** len(rows)
        checked += n_subteams
        if flat_ok and not big_sat:
            for k in range(len(rows) + 1):
                for combo in itertools.combinations(rows, k):
                    sub = Team(big_team.vars, frozenset(combo))
                    if ev.evaluate(phi, sub):
                        mismatches.append(
                            _point(
                                model,
                                big_team,
                                {
                                    "subteam_satisfied": True,
                                    "flattening_pointwise": flat_ok,
                                    "satisfied": big_sat,
                                },
                                formula=pretty(phi),
                                subteam=json.loads(sub.to_json()),
                                kind="upward-flat-closure",
                                mode=mode,
                            )
                        )
        if verbose:
            records.append(
                _point(
                    model,
                    big_team,
                    {"satisfied": big_sat, "flattening_pointwise": flat_ok},
                    formula=pretty(phi),
                    subteams=n_subteams,
                    mode=mode,
                )
            )
    return checked, 0, mismatches, records


def _iso_task(task) -> tuple[int, int, list[dict], list[dict]]:
    phi, model, max_rows, reg, mode, verbose = task
    rows_cap = max_rows if len(model.domain) == 2 else min(2, max_rows)
    xs = tuple(sorted(free_variables(phi)))
    base = Evaluator(model, registry=reg, mode=mode)
    others = []
    for perm in itertools.permutations(model.domain):
        mapping = dict(zip(model.domain, perm))
        if all(k == v for k, v in mapping.items()):
            continue
        others.append((mapping, Evaluator(permute_model(model, mapping), registry=reg, mode=mode)))
    checked, mismatches, records = 0, [], []
    for team in enumerate_teams(model, xs, rows_cap):
        a = base.evaluate(phi, team)
        for mapping, ev in others:
            b = ev.evaluate(phi, permute_team(team, mapping))
            checked += 1
            if a != b or verbose:
                record = _point(
                    model,
                    team,
                    {"original": a, "renamed": b},
                    formula=pretty(phi),
                    renaming=dict(sorted(mapping.items())),
                    mode=mode,
                )
                if a != b:
                    mismatches.append(record)
                if verbose:
                    records.append(record)
    return checked, 0, mismatches, records


def _height_task(task) -> tuple[int, int, list[dict], list[dict]]:
    phi, model, max_rows, reg, mode, verbose = task
    xs = tuple(sorted(free_variables(phi)))
    ev = Evaluator(model, registry=reg, mode=mode)
    checked, mismatches, records = 0, [], []
    for team in enumerate_teams(model, xs, max_rows):
        if not ev.evaluate(phi, team):
            continue
        try:
            witness = find_small_witness(model, team, phi, registry=reg, evaluator=ev)
            checked += 1
            if verbose:
                records.append(
                    _point(
                        model,
                        team,
                        {"witness_size": len(witness.rows)},
                        formula=pretty(phi),
                    )
                )
        except InvariantBreach as breach:
            checked += 1
            mismatches.append(dict(breach.repro, kind="height-witness"))
    return checked, 0, mismatches, records


# ---------------------------------------------------------------------------
# Public checks

def check_formula_equivalence(
    phi: Formula,
    psi: Formula,
    grid: GridConfig | None = None,
    signature: Mapping[str, int] | None = None,
    vars: tuple[str, ...] | None = None,
    registry: AtomRegistry | None = None,
    mode: str = "fast",
    budget: float | None = None,
    jobs: int = 1,
    verbose: bool = False,
    iso_reduce: bool = False,
) -> Report:
    """Pointwise comparison of two formulas over every model and team of
    the grid."""
    grid = grid or DEFAULT_GRID
    if signature is None:
        sig_a = _signature_of(phi)
        sig_b = _signature_of(psi)
        for name in sig_a.keys() & sig_b.keys():
            if sig_a[name] != sig_b[name]:
                raise HarnessError(f"relation {name} used at two arities")
        signature = {**sig_a, **sig_b}
    if vars is None:
        vars = tuple(sorted(free_variables(phi) | free_variables(psi)))
    tasks = [
        (phi, psi, model, vars, grid.max_rows, registry, mode, budget, verbose)
        for model in _grid_models(signature, grid, iso_reduce)
    ]
    started = time.monotonic()
    partials = _run_tasks(_equivalence_task, tasks, jobs)
    report = Report(
        name="formula-equivalence",
        params={
            "left": pretty(phi),
            "right": pretty(psi),
            "vars": list(vars),
            "signature": dict(sorted(signature.items())),
            "grid": grid.as_dict(),
            "mode": mode,
        },
        records=[] if verbose else None,
    )
    _merge(report, partials)
    report.elapsed = time.monotonic() - started
    return report


def _signature_of(phi: Formula) -> dict[str, int]:
    from .syntax import formula_signature

    return formula_signature(phi)


def check_translation_equivalence(
    phi: Formula,
    tuple_vars: tuple[str, ...],
    grid: GridConfig | None = None,
    signature: Mapping[str, int] | None = None,
    registry: AtomRegistry | None = None,
    mode: str = "fast",
    budget: float | None = None,
    jobs: int = 1,
    verbose: bool = False,
    iso_reduce: bool = False,
    sentence: Formula | None = None,
    relation: str | None = None,
) -> Report:
    """Compare team satisfaction of `phi` against ordinary satisfaction of
    its compiled sentence, with the team relation set to the team's
    projection, at every grid point.

    `sentence`/`relation` override the compiler output; that exists so the
    tests can feed a deliberately corrupted sentence and watch the sweep
    catch it."""
    grid = grid or DEFAULT_GRID
    if sentence is None:
        result = translate(phi, tuple_vars, registry)
        sentence = result.sentence
        relation = result.relation
    if relation is None:
        raise HarnessError("a sentence override needs its team relation name")
    if signature is None:
        signature = _signature_of(phi)
    tasks = [
        (phi, tuple_vars, sentence, relation, model, grid.max_rows, registry, mode, budget, verbose)
        for model in _grid_models(signature, grid, iso_reduce)
    ]
    started = time.monotonic()
    partials = _run_tasks(_translation_task, tasks, jobs)
    report = Report(
        name="translation-equivalence",
        params={
            "formula": pretty(phi),
            "tuple": list(tuple_vars),
            "sentence": pretty(sentence),
            "relation": relation,
            "signature": dict(sorted(signature.items())),
            "grid": grid.as_dict(),
            "mode": mode,
        },
        records=[] if verbose else None,
    )
    _merge(report, partials)
    report.elapsed = time.monotonic() - started
    return report


def _merge(report: Report, partials: list) -> None:
    for checked, skipped, mismatches, records in partials:
        report.checked += checked
        report.skipped += skipped
        report.mismatches.extend(mismatches)
        if report.records is not None:
            report.records.extend(records)


# ---------------------------------------------------------------------------
# Theorem suites: each runs a broad fast tier plus a reduced tier on a
# pruning-disabled mode, and returns one report per tier.

def _corpus_report(
    name: str,
    tier: str,
    grid: GridConfig,
    corpus_size: int,
    mode: str,
    extra: dict | None = None,
) -> Report:
    params = {
        "tier": tier,
        "grid": grid.as_dict(),
        "corpus_size": corpus_size,
        "mode": mode,
    }
    if extra:
        params.update(extra)
    return Report(name=name, params=params)


def _sweep_corpus(
    report: Report,
    task_fn: Callable,
    make_task: Callable[[Formula, Model], tuple],
    corpus: Sequence[Formula],
    signature: Mapping[str, int],
    grid: GridConfig,
    jobs: int,
    iso_reduce: bool = False,
) -> Report:
    models = _grid_models(signature, grid, iso_reduce)
    tasks = [make_task(phi, model) for phi in corpus for model in models]
    started = time.monotonic()
    partials = _run_tasks(task_fn, tasks, jobs)
    _merge(report, partials)
    report.elapsed = time.monotonic() - started
    return report


def run_translation_suite(
    grid: GridConfig | None = None,
    registry: AtomRegistry | None = None,
    jobs: int = 1,
    verbose: bool = False,
    atoms: Sequence[str] = DEFAULT_TRANSLATION_ATOMS,
    signature: Mapping[str, int] | None = None,
) -> list[Report]:
    """Team satisfaction against compiled sentences over the whole corpus:
    the broad tier covers the full grid with the fast evaluator, the
    independence tier re-runs affordable points on the oracle path."""
    grid = grid or DEFAULT_GRID
    signature = {"P": 1} if signature is None else signature
    vars = ("x", "y")[: grid.max_vars]
    corpus = generate_formulas(atoms, signature, grid.max_depth, vars, registry)
    translations = {}
    for phi in corpus:
        xs = _fv_tuple(phi)
        result = translate(phi, xs, registry)
        translations[phi] = (xs, result.sentence, result.relation)

    reports = []
    tiers = [
        ("fast", grid, None),
        ("oracle", GridConfig((2,), min(2, grid.max_rows), grid.max_depth, grid.max_vars), DEFAULT_COST_BUDGET),
    ]
    for mode, tier_grid, budget in tiers:
        report = _corpus_report(
            "translation", mode, tier_grid, len(corpus), mode, {"atoms": list(atoms)}
        )
        report.records = [] if verbose else None
        _sweep_corpus(
            report,
            _translation_task,
            lambda phi, model, m=mode, g=tier_grid, b=budget: (
                phi,
                translations[phi][0],
                translations[phi][1],
                translations[phi][2],
                model,
                g.max_rows,
                registry,
                m,
                b,
                verbose,
            ),
            corpus,
            signature,
            tier_grid,
            jobs,
        )
        reports.append(report)
    return reports


def run_flatness_suite(
    grid: GridConfig | None = None,
    registry: AtomRegistry | None = None,
    jobs: int = 1,
    verbose: bool = False,
    signature: Mapping[str, int] | None = None,
) -> list[Report]:
    """Team satisfaction of first-order formulas equals satisfaction by
    every assignment separately."""
    grid = grid or DEFAULT_GRID
    signature = {"P": 1} if signature is None else signature
    vars = ("x", "y")[: grid.max_vars]
    corpus = generate_formulas((), signature, grid.max_depth, vars, registry)
    reports = []
    tiers = [
        ("fast", grid, None),
        ("oracle", GridConfig((2,), min(3, grid.max_rows), grid.max_depth, grid.max_vars), DEFAULT_COST_BUDGET),
    ]
    for mode, tier_grid, budget in tiers:
        report = _corpus_report("flatness", mode, tier_grid, len(corpus), mode)
        report.records = [] if verbose else None
        _sweep_corpus(
            report,
            _flatness_task,
            lambda phi, model, m=mode, g=tier_grid, b=budget: (
                phi, model, g.max_rows, m, b, verbose
            ),
            corpus,
            signature,
            tier_grid,
            jobs,
        )
        reports.append(report)
    return reports


def run_locality_suite(
    grid: GridConfig | None = None,
    registry: AtomRegistry | None = None,
    jobs: int = 1,
    verbose: bool = False,
    signature: Mapping[str, int] | None = None,
) -> list[Report]:
    """Satisfaction only depends on the columns of free variables: teams
    padded with a dummy variable agree with their restrictions.

    The fast evaluator restricts teams itself, which would make this
    check circular, so both tiers run pruning-disabled modes; the
    three-element tier caps teams at two rows for cost.
    """
    grid = grid or DEFAULT_GRID
    signature = {"P": 1} if signature is None else signature
    vars = ("x", "y")[: grid.max_vars]
    corpus = generate_formulas(
        LOCALITY_ATOMS, signature, grid.max_depth, vars, registry,
        binary_cap=4, mix_cap=2, quant_cap=3,
    )
    reports = []
    for mode in ("oracle", "naive"):
        tier_grid = grid if mode == "oracle" else GridConfig(
            (2,), min(2, grid.max_rows), grid.max_depth, grid.max_vars
        )
        report = _corpus_report("locality", mode, tier_grid, len(corpus), mode)
        report.records = [] if verbose else None
        _sweep_corpus(
            report,
            _locality_task,
            lambda phi, model, m=mode, g=tier_grid: (
                phi, model, g.max_rows, registry, m, DEFAULT_COST_BUDGET, verbose
            ),
            corpus,
            signature,
            tier_grid,
            jobs,
        )
        reports.append(report)
    return reports


def run_upflat_suite(
    grid: GridConfig | None = None,
    registry: AtomRegistry | None = None,
    jobs: int = 1,
    verbose: bool = False,
    signature: Mapping[str, int] | None = None,
) -> list[Report]:
    """Over upwards closed atoms: satisfaction forces the flattening
    pointwise, and a satisfying subteam plus a pointwise-flat superteam
    force the superteam to satisfy (every subteam pair is enumerated)."""
    grid = grid or DEFAULT_GRID
    signature = {"P": 1} if signature is None else signature
    vars = ("x", "y")[: grid.max_vars]
    corpus = generate_formulas(UPWARD_ATOMS, signature, grid.max_depth, vars, registry)
    reports = []
    tiers = [
        ("fast", grid, None),
        ("oracle", GridConfig((2,), min(3, grid.max_rows), grid.max_depth, grid.max_vars), DEFAULT_COST_BUDGET),
    ]
    for mode, tier_grid, budget in tiers:
        report = _corpus_report("upflat", mode, tier_grid, len(corpus), mode)
        report.records = [] if verbose else None
        _sweep_corpus(
            report,
            _upflat_task,
            lambda phi, model, m=mode, g=tier_grid, b=budget: (
                phi, model, g.max_rows, registry, m, b, verbose
            ),
            corpus,
            signature,
            tier_grid,
            jobs,
        )
        reports.append(report)
    return reports


def run_height_suite(
    grid: GridConfig | None = None,
    registry: AtomRegistry | None = None,
    jobs: int = 1,
    verbose: bool = False,
    signature: Mapping[str, int] | None = None,
) -> list[Report]:
    """Every satisfying grid triple with a finite height yields a witness
    subteam within the bound (constancy atoms included in the corpus;
    formulas containing totality have no bound and are counted skipped)."""
    grid = grid or DEFAULT_GRID
    signature = {"P": 1} if signature is None else signature
    vars = ("x", "y")[: grid.max_vars]
    corpus = generate_formulas(BOUNDED_ATOMS, signature, grid.max_depth, vars, registry)
    report = _corpus_report("height", "fast", grid, len(corpus), "fast")
    report.records = [] if verbose else None
    bounded = []
    for phi in corpus:
        if compute_height(phi, registry).value is None:
            report.skipped += 1
        else:
            bounded.append(phi)
    _sweep_corpus(
        report,
        _height_task,
        lambda phi, model: (phi, model, grid.max_rows, registry, "fast", verbose),
        bounded,
        signature,
        grid,
        jobs,
    )
    return [report]


def _quantifier_free(phi: Formula) -> bool:
    return not any(
        isinstance(node, (Exists, Forall, Possibly)) for node in subformulas(phi)
    )


def run_possibility_suite(
    grid: GridConfig | None = None,
    registry: AtomRegistry | None = None,
    jobs: int = 1,
    verbose: bool = False,
    signature: Mapping[str, int] | None = None,
) -> list[Report]:
    """Possibility versus its two-constant-witness expansion on a
    depth-two body corpus.

    Three tiers: the fast evaluator over the whole grid; the possibility
    operator on the subset-enumerating oracle path against the expansion
    on the fast path (so the two shortcuts are never trusted jointly);
    and a fully pruning-disabled naive tier, which exhaustion makes
    affordable only for quantifier-free bodies on one-row teams.
    """
    grid = grid or DEFAULT_GRID
    signature = {"P": 1} if signature is None else signature
    vars = ("x", "y")[: grid.max_vars]
    bodies = generate_formulas(
        POSSIBILITY_ATOMS, signature, min(2, grid.max_depth), vars, registry,
        binary_cap=3, mix_cap=2, quant_cap=2,
    )
    pairs = [(Possibly(body), desugar_possibility(Possibly(body))) for body in bodies]
    qf_pairs = [(phi, psi) for phi, psi in pairs if _quantifier_free(phi.body)]
    reports = []
    tiers = [
        ("fast", "fast", grid, pairs, None),
        ("oracle-vs-fast", ("oracle", "fast"), grid, pairs, DEFAULT_COST_BUDGET),
        (
            "naive-1row",
            "naive",
            GridConfig((2,), min(1, grid.max_rows), grid.max_depth, grid.max_vars),
            qf_pairs,
            None,
        ),
    ]
    for tier, modes, tier_grid, tier_pairs, budget in tiers:
        report = _corpus_report(
            "possibility",
            tier,
            tier_grid,
            len(tier_pairs),
            modes if isinstance(modes, str) else "/".join(modes),
        )
        report.records = [] if verbose else None
        models = _grid_models(signature, tier_grid)
        tasks = [
            (
                phi,
                psi,
                model,
                tuple(sorted(free_variables(phi))),
                tier_grid.max_rows,
                registry,
                modes,
                budget,
                verbose,
            )
            for phi, psi in tier_pairs
            for model in models
        ]
        started = time.monotonic()
        partials = _run_tasks(_equivalence_task, tasks, jobs)
        _merge(report, partials)
        report.elapsed = time.monotonic() - started
        reports.append(report)
    return reports


def run_definability_suite(
    grid: GridConfig | None = None,
    registry: AtomRegistry | None = None,
    jobs: int = 1,
    verbose: bool = False,
) -> list[Report]:
    """The two definable negative atoms against their expansions, on
    unit-width instances including collapsed variable patterns."""
    grid = grid or DEFAULT_GRID
    instances = [
        DepAtom("nonincl", (("x",), ("y",))),
        DepAtom("nonincl", (("y",), ("x",))),
        DepAtom("noncindep", (("x",), ("y",), ("z",))),
        DepAtom("noncindep", (("x",), ("y",), ("y",))),
        DepAtom("noncindep", (("x",), ("y",), ("x",))),
        DepAtom("noncindep", (("x",), ("x",), ("y",))),
    ]
    pairs = [(atom, desugar_negated_atoms(atom)) for atom in instances]
    reports = []
    # the wider naive tier affords the single-quantifier expansion but not
    # the triple-quantifier one (whose points it skips by estimate); on
    # one-row teams exhaustion is cheap enough to run everything ungated
    tiers = [
        ("fast", "fast", grid, None),
        ("naive-2rows", "naive", GridConfig((2,), min(2, grid.max_rows), grid.max_depth, grid.max_vars), DEFAULT_COST_BUDGET),
        ("naive-1row", "naive", GridConfig((2,), min(1, grid.max_rows), grid.max_depth, grid.max_vars), None),
    ]
    for tier, mode, tier_grid, budget in tiers:
        report = _corpus_report("definability", tier, tier_grid, len(instances), mode)
        report.records = [] if verbose else None
        models = _grid_models({}, tier_grid)
        tasks = [
            (
                atom,
                macro,
                model,
                tuple(sorted(free_variables(atom))),
                tier_grid.max_rows,
                registry,
                mode,
                budget,
                verbose,
            )
            for atom, macro in pairs
            for model in models
        ]
        started = time.monotonic()
        partials = _run_tasks(_equivalence_task, tasks, jobs)
        _merge(report, partials)
        report.elapsed = time.monotonic() - started
        reports.append(report)
    return reports


def run_isomorphism_suite(
    grid: GridConfig | None = None,
    registry: AtomRegistry | None = None,
    jobs: int = 1,
    verbose: bool = False,
    signature: Mapping[str, int] | None = None,
) -> list[Report]:
    """Renaming domain elements never changes a verdict (dependencies are
    closed under isomorphisms); three-element models are spot-checked at
    two rows, two-element models in full."""
    grid = grid or DEFAULT_GRID
    signature = {"P": 1} if signature is None else signature
    vars = ("x", "y")[: grid.max_vars]
    corpus = _spread(
        generate_formulas(
            LOCALITY_ATOMS, signature, min(2, grid.max_depth), vars, registry,
            binary_cap=3, mix_cap=2, quant_cap=2,
        ),
        12,
    )
    report = _corpus_report("isomorphism", "fast", grid, len(corpus), "fast")
    report.records = [] if verbose else None
    _sweep_corpus(
        report,
        _iso_task,
        lambda phi, model: (phi, model, grid.max_rows, registry, "fast", verbose),
        corpus,
        signature,
        grid,
        jobs,
    )
    return [report]


THEOREM_SUITES: dict[str, Callable[..., list[Report]]] = {
    "translation": run_translation_suite,
    "flatness": run_flatness_suite,
    "locality": run_locality_suite,
    "upflat": run_upflat_suite,
    "height": run_height_suite,
    "possibility": run_possibility_suite,
    "definability": run_definability_suite,
    "isomorphism": run_isomorphism_suite,
}

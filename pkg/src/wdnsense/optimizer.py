"""Bi-objective sensor placement.

Two objectives are combined into ``F = W*F1 - (1-W)*F2`` and minimised over
all sets of exactly ``p`` sensors:

* ``F1`` counts (source, scenario) pairs no sensor detects, normalised by
  ``N(N-1)`` and summed over scenarios;
* ``F2`` sums ``f_norm(j) * anc(j)`` over the sensors (to be maximised, so it
  enters ``F`` negated; tables report it as ``-F2``).

Once the uncovered indicators are eliminated the model is a
cardinality-constrained subset selection, solved here by branch-and-bound.
Ties on ``F`` go to the lexicographically smallest sorted id tuple; the weight
sweep first settles ties at ``W`` = 0 or 1 on the objective ``F`` ignores.
"""

from __future__ import annotations

import heapq
import itertools
import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Literal, Sequence

import numpy as np

from .errors import DegenerateGraph, DimensionMismatch, DisconnectedPlacement, InfeasibleCardinality
from .metrics import UNREACHABLE, AncTermTable, DistanceMatrix, NodeWeightTable, betweenness, closeness, degree_stats
from .network import Network, NodeKind
from .scenarios import CoverageRelation

CandidatePolicy = Literal["all", "junctions"]


@dataclass(frozen=True)
class Placement:
    sensors: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "sensors", tuple(sorted(self.sensors)))
        if len(set(self.sensors)) != len(self.sensors):
            raise ValueError("placement lists a sensor twice")

    def __len__(self) -> int:
        return len(self.sensors)

    def __iter__(self):
        return iter(self.sensors)


@dataclass(frozen=True)
class ObjectiveValues:
    f1: float
    f2: float
    scalar: float
    w: float

    @property
    def f2_reported(self) -> float:
        return -self.f2


@dataclass(frozen=True)
class ParetoRecord:
    w_low: float
    w_high: float
    placement: Placement
    values: ObjectiveValues


def scalarize(f1: float, f2: float, w: float) -> float:
    """``w*f1 - (1-w)*f2``. Pass ``-f2_reported`` when starting from table values."""
    if not 0.0 <= w <= 1.0:
        raise ValueError(f"weight must lie in [0, 1], got {w}")
    return w * f1 - (1.0 - w) * f2


def _to_bits(column: np.ndarray) -> int:
    return int.from_bytes(np.packbits(column.ravel(), bitorder="little").tobytes(), "little")


class PlacementProblem:
    """Precomputed data for repeated placement solves on one instance.

    Each candidate's coverage is held as an integer bitmask over the
    ``N * S`` (source, scenario) pairs so unions and counts are cheap.
    """

    def __init__(
        self,
        rel: CoverageRelation,
        weights: NodeWeightTable,
        anc: AncTermTable,
        candidates: CandidatePolicy | Iterable[str] = "all",
    ):
        ids = rel.node_ids
        if tuple(weights.node_ids) != ids or tuple(r.node_id for r in anc.rows) != ids:
            raise DimensionMismatch("coverage relation, weights and ANC terms list different nodes")
        n = len(ids)
        if n < 2:
            raise DegenerateGraph("placement needs at least two nodes")
        if candidates == "all":
            cand = list(ids)
        elif candidates == "junctions":
            cand = [r.node_id for r in weights.rows if r.kind is NodeKind.JUNCTION]
        else:
            cand = list(candidates)
            unknown = set(cand) - set(ids)
            if unknown:
                raise DimensionMismatch(f"unknown candidate node(s): {sorted(unknown)}")
        self.rel = rel
        self.node_ids = ids
        self.candidates: tuple[str, ...] = tuple(sorted(set(cand)))
        self.n_nodes = n
        self.n_scenarios = rel.n_scenarios
        self.norm = n * (n - 1)
        self.total_pairs = n * rel.n_scenarios
        pos = {nid: i for i, nid in enumerate(ids)}
        f_norm = weights.f_norm()
        anc_map = anc.anc()
        self._mask = {j: _to_bits(rel.covers[:, pos[j], :]) for j in self.candidates}
        self._f2 = {j: f_norm[j] * anc_map[j] for j in self.candidates}

    # -- evaluation --------------------------------------------------------

    def _check(self, sensors: Sequence[str]) -> None:
        bad = [s for s in sensors if s not in self._mask]
        if bad:
            raise DimensionMismatch(f"not candidate sensor locations: {bad}")

    def uncovered(self, sensors: Iterable[str]) -> int:
        mask = 0
        for s in sensors:
            mask |= self._mask[s]
        return self.total_pairs - mask.bit_count()

    def f1(self, sensors: Iterable[str]) -> float:
        return self.uncovered(sensors) / self.norm

    def f2(self, sensors: Iterable[str]) -> float:
        return math.fsum(self._f2[s] for s in sensors)

    def evaluate(self, sensors: Iterable[str], w: float) -> ObjectiveValues:
        sensors = tuple(sorted(sensors))
        self._check(sensors)
        f1, f2 = self.f1(sensors), self.f2(sensors)
        return ObjectiveValues(f1, f2, scalarize(f1, f2, w), w)

    def _key(self, sensors: tuple[str, ...], w: float, refine: bool = False) -> tuple:
        v = self.evaluate(sensors, w)
        secondary = 0.0
        if refine and w == 1.0:
            secondary = -v.f2
        elif refine and w == 0.0:
            secondary = v.f1
        return v.scalar, secondary, sensors

    def _validate_p(self, p: int) -> None:
        if p < 1:
            raise ValueError("p must be at least 1")
        if p > len(self.candidates):
            raise InfeasibleCardinality(f"p={p} exceeds the {len(self.candidates)} candidate nodes")

    # -- solvers -----------------------------------------------------------

    def solve_greedy(self, p: int, w: float) -> tuple[Placement, ObjectiveValues]:
        """``p`` rounds, each adding the sensor with the best resulting ``F``."""
        self._validate_p(p)
        chosen: tuple[str, ...] = ()
        for _ in range(p):
            best = None
            for j in self.candidates:
                if j in chosen:
                    continue
                key = self._key(tuple(sorted(chosen + (j,))), w)
                if best is None or key < best:
                    best = key
            chosen = best[2]
        return Placement(chosen), self.evaluate(chosen, w)

    def solve_exhaustive(self, p: int, w: float, *, refine_endpoints: bool = False) -> tuple[Placement, ObjectiveValues]:
        self._validate_p(p)
        best = min(self._key(c, w, refine_endpoints) for c in itertools.combinations(self.candidates, p))
        return Placement(best[2]), self.evaluate(best[2], w)

    def solve_exact(
        self,
        p: int,
        w: float,
        *,
        exhaustive_threshold: int = 12,
        warm_start: Iterable[Sequence[str]] = (),
        refine_endpoints: bool = False,
    ) -> tuple[Placement, ObjectiveValues]:
        """Globally optimal placement by branch-and-bound.

        Candidate sets of size ``<= exhaustive_threshold`` are enumerated
        outright. Otherwise a depth-first search over combinations prunes a
        subtree when a lower bound on ``F`` exceeds the incumbent; the bound
        takes the better of

        * current ``F`` minus the ``r`` largest single-sensor improvements
          (coverage gains are subadditive, ``F2`` is additive), and
        * coverage of every remaining candidate together, paired with the
          ``r`` largest remaining ``F2`` terms,

        where ``r`` sensors are still to be placed. Leaves are scored with
        the same evaluation as :meth:`evaluate`, so the optimum and its
        tie-break match plain enumeration.

        With ``refine_endpoints``, ties at ``w == 1`` (``w == 0``) are first
        settled by the larger ``F2`` (smaller ``F1``), which the scalar
        ignores there, so the result is never weakly dominated.
        """
        self._validate_p(p)
        scalarize(0.0, 0.0, w)
        if len(self.candidates) <= exhaustive_threshold:
            return self.solve_exhaustive(p, w, refine_endpoints=refine_endpoints)

        starts = [self.solve_greedy(p, w)[0].sensors]
        for ws in warm_start:
            ws = tuple(sorted(ws))
            if len(ws) == p and all(s in self._mask for s in ws):
                starts.append(ws)
        best = min(self._key(s, w, refine_endpoints) for s in starts)

        # strongest candidates first so good incumbents turn up early
        alone = {j: w * (self._mask[j].bit_count() / self.norm) + (1 - w) * self._f2[j] for j in self.candidates}
        order = sorted(self.candidates, key=lambda j: (-alone[j], j))
        m = len(order)
        masks = [self._mask[j] for j in order]
        f2t = [self._f2[j] for j in order]
        suffix = [0] * (m + 1)
        for k in range(m - 1, -1, -1):
            suffix[k] = suffix[k + 1] | masks[k]
        a = w / self.norm
        b = 1.0 - w
        total = self.total_pairs

        def bound(start: int, mask: int, f2sum: float, r: int) -> float:
            covered = mask.bit_count()
            scores = []
            f2_rest = f2t[start:]
            for k in range(start, m):
                gain = (masks[k] | mask).bit_count() - covered
                scores.append(a * gain + b * f2t[k])
            lb1 = a * (total - covered) - b * f2sum - sum(heapq.nlargest(r, scores))
            lb2 = a * (total - (mask | suffix[start]).bit_count()) - b * (f2sum + sum(heapq.nlargest(r, f2_rest)))
            return max(lb1, lb2)

        def search(start: int, chosen: list[int], mask: int, f2sum: float) -> None:
            nonlocal best
            r = p - len(chosen)
            if r == 0:
                key = self._key(tuple(sorted(order[k] for k in chosen)), w, refine_endpoints)
                if key < best:
                    best = key
                return
            if m - start < r:
                return
            lb = bound(start, mask, f2sum, r)
            if lb > best[0] + 1e-9 * max(1.0, abs(best[0])):
                return
            for k in range(start, m - r + 1):
                chosen.append(k)
                search(k + 1, chosen, mask | masks[k], f2sum + f2t[k])
                chosen.pop()

        search(0, [], 0, 0.0)
        return Placement(best[2]), self.evaluate(best[2], w)

    def pareto_sweep(
        self,
        p: int,
        grid_step: float = 0.05,
        *,
        exhaustive_threshold: int = 12,
    ) -> list[ParetoRecord]:
        """Solve exactly on a grid of weights and merge runs of equal placements.

        Records are ordered from the highest weight range down; each record's
        values are evaluated at the upper end of its range. Ties at the grid
        ends are refined on the objective the scalar ignores there.
        """
        if not 0 < grid_step <= 0.5:
            raise ValueError("grid_step must lie in (0, 0.5]")
        steps = int(math.floor(1.0 / grid_step + 1e-9))
        grid = [round(k * grid_step, 12) for k in range(steps + 1)]
        if grid[-1] < 1.0:
            grid.append(1.0)
        solutions: list[tuple[float, Placement]] = []
        previous: list[Sequence[str]] = []
        for w in reversed(grid):
            placement, _ = self.solve_exact(p, w, exhaustive_threshold=exhaustive_threshold,
                                            warm_start=previous, refine_endpoints=True)
            solutions.append((w, placement))
            previous = [placement.sensors]
        records: list[ParetoRecord] = []
        run_high, run_low, run_pl = solutions[0][0], solutions[0][0], solutions[0][1]
        for w, pl in solutions[1:]:
            if pl == run_pl:
                run_low = w
                continue
            records.append(ParetoRecord(run_low, run_high, run_pl, self.evaluate(run_pl.sensors, run_high)))
            run_high, run_low, run_pl = w, w, pl
        records.append(ParetoRecord(run_low, run_high, run_pl, self.evaluate(run_pl.sensors, run_high)))
        return records


# ---------------------------------------------------------------------------
# function interface
# ---------------------------------------------------------------------------

def evaluate_f1(placement: Placement | Iterable[str], rel: CoverageRelation) -> float:
    """Scenario-summed fraction of undetected injections, normalised by N(N-1)."""
    sensors = list(placement)
    ids = rel.node_ids
    n = len(ids)
    if n < 2:
        raise DegenerateGraph("F1 needs at least two nodes")
    pos = {nid: i for i, nid in enumerate(ids)}
    bad = [s for s in sensors if s not in pos]
    if bad:
        raise DimensionMismatch(f"sensors not in the coverage relation: {bad}")
    if not sensors:
        return n * rel.n_scenarios / (n * (n - 1))
    detected = rel.covers[:, [pos[s] for s in sensors], :].any(axis=1)
    return int((~detected).sum()) / (n * (n - 1))


def evaluate_f2(placement: Placement | Iterable[str], weights: NodeWeightTable, anc: AncTermTable) -> float:
    f_norm = weights.f_norm()
    anc_map = anc.anc()
    try:
        return math.fsum(f_norm[s] * anc_map[s] for s in placement)
    except KeyError as exc:
        raise DimensionMismatch(f"sensor {exc.args[0]!r} not in the weight table") from None


def solve_exact(rel, weights, anc, p: int = 5, w: float = 0.5, *, candidates: CandidatePolicy = "all",
                exhaustive_threshold: int = 12) -> tuple[Placement, ObjectiveValues]:
    return PlacementProblem(rel, weights, anc, candidates).solve_exact(
        p, w, exhaustive_threshold=exhaustive_threshold)


def solve_greedy(rel, weights, anc, p: int = 5, w: float = 0.5, *,
                 candidates: CandidatePolicy = "all") -> tuple[Placement, ObjectiveValues]:
    return PlacementProblem(rel, weights, anc, candidates).solve_greedy(p, w)


def pareto_sweep(rel, weights, anc, p: int = 5, grid_step: float = 0.05, *,
                 candidates: CandidatePolicy = "all", exhaustive_threshold: int = 12) -> list[ParetoRecord]:
    return PlacementProblem(rel, weights, anc, candidates).pareto_sweep(
        p, grid_step, exhaustive_threshold=exhaustive_threshold)


def most_frequent_sensors(records: Sequence[ParetoRecord], p: int) -> Placement:
    """The ``p`` nodes appearing in the most records (ties by id)."""
    counts = Counter(s for rec in records for s in rec.placement.sensors)
    ranked = sorted(counts, key=lambda s: (-counts[s], s))
    return Placement(ranked[:p])


CENTRALITY_METRICS = ("degree", "betweenness", "closeness")


def centrality_scores(net: Network, metric: str) -> dict[str, float]:
    if metric == "degree":
        return {k: float(v) for k, v in degree_stats(net)[2].items()}
    if metric == "betweenness":
        return betweenness(net)
    if metric == "closeness":
        return closeness(net, skip_isolated=True)
    raise ValueError(f"unknown centrality metric {metric!r}; expected one of {CENTRALITY_METRICS}")


def centrality_baseline(
    net: Network,
    problem: PlacementProblem,
    metric: str,
    p: int = 5,
    w: float = 0.0,
) -> tuple[Placement, ObjectiveValues]:
    """Top-``p`` candidates by a centrality metric, ties broken by id.

    Objectives are evaluated at ``w``; the default 0 reports ``F = -F2``.
    """
    problem._validate_p(p)
    scores = centrality_scores(net, metric)
    ranked = sorted(problem.candidates, key=lambda j: (-scores[j], j))
    placement = Placement(ranked[:p])
    return placement, problem.evaluate(placement.sensors, w)


def dispersion(placement: Placement | Iterable[str], dm: DistanceMatrix) -> float:
    """Mean pairwise hop distance among the sensors; 0 for a single sensor.

    Raises :class:`DisconnectedPlacement` (carrying per-component means) when
    some pair of sensors is mutually unreachable.
    """
    sensors = list(placement)
    idx = [dm.node_ids.index(s) for s in sensors]
    groups: list[list[int]] = []
    for i in idx:
        for g in groups:
            if dm.d[g[0], i] != UNREACHABLE:
                g.append(i)
                break
        else:
            groups.append([i])

    def mean_pairwise(members: list[int]) -> float:
        pairs = list(itertools.combinations(members, 2))
        if not pairs:
            return 0.0
        return sum(int(dm.d[a, b]) for a, b in pairs) / len(pairs)

    if len(groups) > 1:
        per = {k: mean_pairwise(g) for k, g in enumerate(groups)}
        raise DisconnectedPlacement(f"sensors lie in {len(groups)} separate components", per)
    return mean_pairwise(idx)

"""Benchmark model builders and problem-file I/O.

The flagship model family is the linearized swing dynamics of an AC power
grid: per bus i an angle/frequency pair governed by

    d theta_i / dt = omega_i
    M_i d omega_i / dt = -D_i omega_i - g_i theta_i - sum_j b_ij (theta_i - theta_j)

with inertia M_i > 0, damping D_i > 0, grounding (shunt) stiffness
g_i >= 0 and line susceptances b_ij > 0.  States are interleaved
(theta_1, omega_1, theta_2, omega_2, ...).  Candidate actuators are HVDC
links: one link between buses i and j injects +P/M_i and -P/M_j into the
two frequency states, giving N(N-1)/2 candidate columns for N buses.
"""

import json
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    DimensionError,
    DomainError,
    NonFiniteError,
    ProblemFormatError,
    StabilityError,
    TopologyError,
)
from .metrics import MetricSpec
from .numerics import DEFAULT_STABILITY_MARGIN, as_matrix, as_vector, is_hurwitz, spectral_abscissa
from .placement import CandidateSet

__all__ = [
    "Bus",
    "Line",
    "GridModel",
    "LinearizedGrid",
    "build_swing_matrix",
    "frequency_selector",
    "hvdc_candidates",
    "ring_grid",
    "random_hurwitz_system",
    "Problem",
    "load_problem",
    "write_problem",
    "system_problem_dict",
    "ring_problem_dict",
]


@dataclass(frozen=True)
class Bus:
    id: str
    inertia: float
    damping: float
    grounding: float = 0.0


@dataclass(frozen=True)
class Line:
    from_bus: str
    to_bus: str
    susceptance: float


@dataclass(frozen=True)
class GridModel:
    """Validated grid description: buses plus undirected AC lines.

    Construction enforces positive inertia/damping/susceptance,
    non-negative grounding, unique bus ids, no self-loops or duplicate
    lines, endpoints that exist, and a connected topology.
    """

    buses: tuple
    lines: tuple

    def __post_init__(self):
        buses = tuple(self.buses)
        lines = tuple(self.lines)
        if not buses:
            raise TopologyError("grid has no buses")
        seen = set()
        for bus in buses:
            if bus.id in seen:
                raise TopologyError(f"duplicate bus id {bus.id!r}")
            seen.add(bus.id)
            if not (bus.inertia > 0):
                raise DomainError(f"bus {bus.id!r}: inertia must be > 0, got {bus.inertia}")
            if not (bus.damping > 0):
                raise DomainError(f"bus {bus.id!r}: damping must be > 0, got {bus.damping}")
            if bus.grounding < 0:
                raise DomainError(
                    f"bus {bus.id!r}: grounding must be >= 0, got {bus.grounding}"
                )
        pairs = set()
        for line in lines:
            if line.from_bus not in seen or line.to_bus not in seen:
                raise TopologyError(
                    f"line {line.from_bus!r}-{line.to_bus!r} references an unknown bus"
                )
            if line.from_bus == line.to_bus:
                raise TopologyError(f"self-loop on bus {line.from_bus!r}")
            key = frozenset((line.from_bus, line.to_bus))
            if key in pairs:
                raise TopologyError(
                    f"duplicate line between {line.from_bus!r} and {line.to_bus!r}"
                )
            pairs.add(key)
            if not (line.susceptance > 0):
                raise DomainError(
                    f"line {line.from_bus!r}-{line.to_bus!r}: susceptance must be > 0"
                )
        if not _connected(buses, lines):
            raise TopologyError("grid graph is not connected")
        object.__setattr__(self, "buses", buses)
        object.__setattr__(self, "lines", lines)

    @property
    def n_buses(self):
        return len(self.buses)

    @property
    def bus_ids(self):
        return tuple(b.id for b in self.buses)


def _connected(buses, lines):
    if len(buses) <= 1:
        return True
    adj = {b.id: [] for b in buses}
    for ln in lines:
        adj[ln.from_bus].append(ln.to_bus)
        adj[ln.to_bus].append(ln.from_bus)
    seen = {buses[0].id}
    queue = deque([buses[0].id])
    while queue:
        for nxt in adj[queue.popleft()]:
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return len(seen) == len(buses)


@dataclass(frozen=True)
class LinearizedGrid:
    """Swing dynamics matrix together with its bus-to-state bookkeeping.

    ``bus_index`` maps bus id -> (angle state, frequency state).
    ``hurwitz`` records whether A passed the stability test at build time;
    an ungrounded grid legitimately carries a zero eigenvalue (the
    uniform angle shift) and is flagged False rather than rejected.
    """

    a: np.ndarray
    bus_index: dict
    grid: GridModel
    hurwitz: bool

    @property
    def n(self):
        return self.a.shape[0]


def build_swing_matrix(grid, margin=DEFAULT_STABILITY_MARGIN):
    """Assemble the 2N x 2N swing dynamics matrix of a grid.

    Grounding every connected component (here: at least one bus, since
    GridModel guarantees connectivity) together with positive damping
    makes A Hurwitz; if a grounded grid still fails the stability test a
    StabilityError is raised.  Ungrounded grids build fine and are
    flagged ``hurwitz=False``.
    """
    n =  grid.n_buses
    index = {bus.id: (2 * i, 2 * i + 1) for i, bus in enumerate(grid.buses)}
    a = np.zeros((2 * n, 2 * n))
    for bus in grid.buses:
        ang, frq = index[bus.id]
        a[ang, frq] = 1.0
        a[frq, frq] = -bus.damping / bus.inertia
        a[frq, ang] = -bus.grounding / bus.inertia
    for line in grid.lines:
        ai, fi = index[line.from_bus]
        aj, fj = index[line.to_bus]
        mi = grid.buses[ai // 2].inertia
        mj = grid.buses[aj // 2].inertia
        a[fi, ai] -= line.susceptance / mi
        a[fi, aj] += line.susceptance / mi
        a[fj, aj] -= line.susceptance / mj
        a[fj, ai] += line.susceptance / mj

    grounded = any(bus.grounding > 0 for bus in grid.buses)
    stable = is_hurwitz(a, margin=margin)
    if grounded and not stable:
        raise StabilityError(
            "grounded grid produced a non-Hurwitz swing matrix "
            f"(max Re(eigenvalue) = {spectral_abscissa(a):.3e}); "
            "check damping and grounding values",
            max_real_part=spectral_abscissa(a),
        )
    return LinearizedGrid(a=a, bus_index=index, grid=grid, hurwitz=stable)


def frequency_selector(lin):
    """(N, 2N) output matrix picking every frequency state (row per bus)."""
    n = lin.grid.n_buses
    c = np.zeros((n, lin.n))
    for i, bus in enumerate(lin.grid.buses):
        c[i, lin.bus_index[bus.id][1]] = 1.0
    return c


def hvdc_candidates(lin):
    """All N(N-1)/2 HVDC-link input columns for a linearized grid.

    The link between buses i and j (i before j in bus order) gets id
    "<i>-<j>" and a column with +1/M_i at bus i's frequency state and
    -1/M_j at bus j's.
    """
    out = []
    buses = lin.grid.buses
    for i in range(len(buses)):
        for j in range(i + 1, len(buses)):
            col = np.zeros(lin.n)
            col[lin.bus_index[buses[i].id][1]] = 1.0 / buses[i].inertia
            col[lin.bus_index[buses[j].id][1]] = -1.0 / buses[j].inertia
            out.append((f"{buses[i].id}-{buses[j].id}", col))
    return tuple(out)


def ring_grid(n_buses, inertia=1.0, damping=0.5, susceptance=1.0,
              grounding=0.1, chords=0, seed=0):
    """Uniform ring of buses, optionally with seeded random chord lines."""
    n_buses = int(n_buses)
    if n_buses < 2:
        raise DomainError(f"ring needs at least 2 buses, got {n_buses}")
    width = len(str(n_buses - 1))
    buses = tuple(
        Bus(id=f"bus{i:0{width}d}", inertia=inertia, damping=damping,
            grounding=grounding)
        for i in range(n_buses)
    )
    ring_pairs = {frozenset((i, (i + 1) % n_buses)) for i in range(n_buses)}
    lines = [
        Line(buses[min(p)].id, buses[max(p)].id, susceptance)
        for p in sorted(ring_pairs, key=sorted)
    ]
    chords = int(chords)
    if chords > 0:
        candidates = [
            (i, j)
            for i in range(n_buses)
            for j in range(i + 1, n_buses)
            if frozenset((i, j)) not in ring_pairs
        ]
        if chords > len(candidates):
            raise DomainError(
                f"requested {chords} chords but only {len(candidates)} "
                f"non-ring pairs exist"
            )
        rng = np.random.default_rng(seed)
        picks = rng.choice(len(candidates), size=chords, replace=False)
        for idx in sorted(picks):
            i, j = candidates[idx]
            lines.append(Line(buses[i].id, buses[j].id, susceptance))
    return GridModel(buses=buses, lines=tuple(lines))


def random_hurwitz_system(n, m, density=0.3, seed=0):
    """Seeded random stable system with m unit-norm candidate columns.

    A sparse random matrix S is shifted by its spectral abscissa plus a
    0.1 margin, A = S - (alpha(S) + 0.1) I, so A is Hurwitz by
    construction with max Re(eigenvalue) = -0.1.

    Returns ``(a, candidates)`` where candidates is a tuple of
    ``(id, column)`` pairs ready for a :class:`CandidateSet`.
    """
    n, m = int(n), int(m)
    if n < 1 or m < 1:
        raise DomainError(f"need n >= 1 and m >= 1, got n={n}, m={m}")
    if not 0.0 < density <= 1.0:
        raise DomainError(f"density must lie in (0, 1], got {density}")
    rng = np.random.default_rng(seed)
    s = rng.normal(size=(n, n)) * (rng.random(size=(n, n)) < density)
    a = s - (spectral_abscissa(s) + 0.1) * np.eye(n)
    cols = rng.normal(size=(n, m))
    norms = np.linalg.norm(cols, axis=0)
    norms[norms == 0] = 1.0
    cols = cols / norms
    width = len(str(m - 1))
    candidates = tuple((f"b{i:0{width}d}", cols[:, i]) for i in range(m))
    return a, candidates


# ---------------------------------------------------------------------------
# Problem files
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Problem:
    """A ready-to-rank instance loaded from disk.

    ``grid`` is populated when the file described a grid (so grid-aware
    weightings such as the frequency selector remain constructible);
    explicit-matrix problems leave it None.
    """

    candidate_set: CandidateSet
    grid: LinearizedGrid | None = None


def _parse_metric(doc):
    if doc is None:
        return MetricSpec.trace()
    if not isinstance(doc, dict) or "kind" not in doc:
        raise ProblemFormatError('weight block must be an object with a "kind" field')
    kind = doc["kind"]
    if kind == "trace":
        return MetricSpec.trace()
    if kind in ("weighted_trace", "h2"):
        if "matrix" not in doc:
            raise ProblemFormatError(f'weight kind "{kind}" requires a "matrix" field')
        try:
            mat = as_matrix(doc["matrix"], "weight matrix")
        except (DimensionError, NonFiniteError) as exc:
            raise ProblemFormatError(f"weight matrix: {exc}") from None
        return MetricSpec(kind, mat)
    raise ProblemFormatError(
        f'unknown weight kind {kind!r}; expected "trace", "weighted_trace" or "h2"'
    )


def _parse_grid_block(doc):
    if "topology" in doc:
        if doc["topology"] != "ring":
            raise ProblemFormatError(f'unknown topology {doc["topology"]!r}')
        keys = {"topology", "buses", "chords", "seed", "inertia", "damping",
                "susceptance", "grounding"}
        unknown = set(doc) - keys
        if unknown:
            raise ProblemFormatError(f"unknown grid fields: {sorted(unknown)}")
        if "buses" not in doc:
            raise ProblemFormatError('ring grid requires a "buses" count')
        return ring_grid(
            doc["buses"],
            inertia=doc.get("inertia", 1.0),
            damping=doc.get("damping", 0.5),
            susceptance=doc.get("susceptance", 1.0),
            grounding=doc.get("grounding", 0.1),
            chords=doc.get("chords", 0),
            seed=doc.get("seed", 0),
        )
    try:
        buses = tuple(
            Bus(id=str(b["id"]), inertia=float(b["inertia"]),
                damping=float(b["damping"]), grounding=float(b.get("grounding", 0.0)))
            for b in doc["buses"]
        )
        lines = tuple(
            Line(from_bus=str(ln["from"]), to_bus=str(ln["to"]),
                 susceptance=float(ln["susceptance"]))
            for ln in doc.get("lines", [])
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ProblemFormatError(f"malformed grid block: {exc!r}") from None
    return GridModel(buses=buses, lines=lines)


def load_problem(path):
    """Load and validate a problem file (JSON).

    Two forms are accepted.  Explicit:

        {"n": 2, "A": [[...], [...]],
         "candidates": [{"id": "u0", "b": [...]}, ...],
         "weight": {"kind": "trace"}}            # weight optional

    Grid-based (candidates become all HVDC pairs):

        {"grid": {"topology": "ring", "buses": 74, "chords": 0, "seed": 0},
         "weight": ...}
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ProblemFormatError(f"cannot read problem file {path}: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFormatError(f"invalid JSON in {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ProblemFormatError("problem file must contain a JSON object")

    metric = _parse_metric(doc.get("weight"))

    if "grid" in doc:
        lin = build_swing_matrix(_parse_grid_block(doc["grid"]))
        cs = CandidateSet(lin.a, hvdc_candidates(lin), metric)
        return Problem(candidate_set=cs, grid=lin)

    for key in ("n", "A", "candidates"):
        if key not in doc:
            raise ProblemFormatError(f'problem file is missing required field "{key}"')
    n = doc["n"]
    if not isinstance(n, int) or n < 1:
        raise ProblemFormatError(f'"n" must be a positive integer, got {n!r}')
    try:
        a = as_matrix(doc["A"], "A")
    except (DimensionError, NonFiniteError) as exc:
        raise ProblemFormatError(f"A: {exc}") from None
    if a.shape != (n, n):
        raise DimensionError(f"A has shape {a.shape}, expected ({n}, {n})")
    candidates = []
    for entry in doc["candidates"]:
        if not isinstance(entry, dict) or "id" not in entry or "b" not in entry:
            raise ProblemFormatError(
                'each candidate must be an object with "id" and "b" fields'
            )
        cid = str(entry["id"])
        # as_vector's error already names the offending candidate
        candidates.append((cid, as_vector(entry["b"], n, f"candidate {cid!r} column")))
    cs = CandidateSet(a, tuple(candidates), metric)
    return Problem(candidate_set=cs)


def system_problem_dict(a, candidates, metric=None):
    """Problem-file dict for an explicit (A, candidates) system."""
    a = np.asarray(a, dtype=float)
    doc = {
        "n": int(a.shape[0]),
        "A": a.tolist(),
        "candidates": [
            {"id": str(cid), "b": np.asarray(col, dtype=float).tolist()}
            for cid, col in candidates
        ],
    }
    if metric is not None and metric.kind != "trace":
        doc["weight"] = {"kind": metric.kind, "matrix": metric.weight.tolist()}
    return doc


def ring_problem_dict(n_buses, chords=0, seed=0, inertia=1.0, damping=0.5,
                      susceptance=1.0, grounding=0.1):
    """Problem-file dict describing a ring grid by its parameters."""
    return {
        "grid": {
            "topology": "ring",
            "buses": int(n_buses),
            "chords": int(chords),
            "seed": int(seed),
            "inertia": inertia,
            "damping": damping,
            "susceptance": susceptance,
            "grounding": grounding,
        }
    }


def write_problem(path, doc):
    """Serialize a problem dict to JSON (sorted keys, trailing newline)."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")

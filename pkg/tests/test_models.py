import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gramsel.exceptions import (
    DimensionError,
    DomainError,
    NonFiniteError,
    ProblemFormatError,
    StabilityError,
    TopologyError,
)
from gramsel.metrics import MetricSpec
from gramsel.models import (
    Bus,
    GridModel,
    Line,
    build_swing_matrix,
    frequency_selector,
    hvdc_candidates,
    load_problem,
    random_hurwitz_system,
    ring_grid,
    ring_problem_dict,
    system_problem_dict,
    write_problem,
)
from gramsel.numerics import eigenvalues, is_hurwitz, spectral_abscissa


def _single_bus(g):
    return GridModel(buses=(Bus("b1", inertia=1.0, damping=1.0, grounding=g),),
                     lines=())


class TestGridModel:
    def test_duplicate_bus(self):
        with pytest.raises(TopologyError):
            GridModel(buses=(Bus("x", 1, 1), Bus("x", 1, 1)), lines=())

    def test_nonpositive_inertia(self):
        with pytest.raises(DomainError):
            GridModel(buses=(Bus("x", 0.0, 1.0),), lines=())

    def test_nonpositive_damping(self):
        with pytest.raises(DomainError):
            GridModel(buses=(Bus("x", 1.0, -1.0),), lines=())

    def test_negative_grounding(self):
        with pytest.raises(DomainError):
            GridModel(buses=(Bus("x", 1.0, 1.0, -0.1),), lines=())

    def test_self_loop(self):
        with pytest.raises(TopologyError):
            GridModel(buses=(Bus("x", 1, 1),), lines=(Line("x", "x", 1.0),))

    def test_unknown_endpoint(self):
        with pytest.raises(TopologyError):
            GridModel(buses=(Bus("x", 1, 1),), lines=(Line("x", "y", 1.0),))

    def test_duplicate_line_either_direction(self):
        buses = (Bus("x", 1, 1), Bus("y", 1, 1))
        with pytest.raises(TopologyError):
            GridModel(buses=buses, lines=(Line("x", "y", 1.0), Line("y", "x", 2.0)))

    def test_disconnected(self):
        buses = (Bus("a", 1, 1), Bus("b", 1, 1), Bus("c", 1, 1))
        with pytest.raises(TopologyError):
            GridModel(buses=buses, lines=(Line("a", "b", 1.0),))


class TestSwingMatrix:
    def test_single_grounded_bus(self):
        lin = build_swing_matrix(_single_bus(1.0))
        assert np.array_equal(lin.a, [[0.0, 1.0], [-1.0, -1.0]])
        vals = np.sort_complex(eigenvalues(lin.a).values)
        expected = np.sort_complex(
            [-0.5 + 1j * math.sqrt(3) / 2, -0.5 - 1j * math.sqrt(3) / 2]
        )
        assert np.allclose(vals, expected, atol=1e-12)
        assert lin.hurwitz

    def test_ungrounded_has_single_zero_mode(self):
        lin = build_swing_matrix(ring_grid(6, grounding=0.0))
        assert not lin.hurwitz
        vals = eigenvalues(lin.a).values
        n_zero = int(np.sum(np.abs(vals) <= 1e-9))
        assert n_zero == 1
        assert np.max(vals.real[np.abs(vals) > 1e-9]) < 0

    def test_grounding_one_bus_stabilizes(self):
        grid = ring_grid(5, grounding=0.0)
        buses = list(grid.buses)
        buses[2] = Bus(buses[2].id, buses[2].inertia, buses[2].damping, 0.1)
        lin = build_swing_matrix(GridModel(buses=tuple(buses), lines=grid.lines))
        assert lin.hurwitz

    def test_interleaved_state_ordering(self):
        lin = build_swing_matrix(ring_grid(4))
        for i, bus in enumerate(lin.grid.buses):
            ang, frq = lin.bus_index[bus.id]
            assert (ang, frq) == (2 * i, 2 * i + 1)
            assert lin.a[ang, frq] == 1.0
            assert np.count_nonzero(lin.a[ang]) == 1

    def test_coupling_rows_sum_to_zero_without_grounding(self):
        # each frequency row restricted to angle columns is a Laplacian row
        lin = build_swing_matrix(ring_grid(7, grounding=0.0))
        n = lin.grid.n_buses
        coupling = lin.a[1::2, 0::2]
        assert np.allclose(coupling @ np.ones(n), 0.0, atol=1e-12)
        # grounding shifts only the diagonal
        lin_g = build_swing_matrix(ring_grid(7, grounding=0.25))
        coupling_g = lin_g.a[1::2, 0::2]
        assert np.allclose(coupling_g @ np.ones(n), -0.25, atol=1e-12)

    def test_heterogeneous_inertia_scaling(self):
        buses = (Bus("p", 2.0, 1.0, 0.4), Bus("q", 4.0, 1.0, 0.4))
        grid = GridModel(buses=buses, lines=(Line("p", "q", 3.0),))
        lin = build_swing_matrix(grid)
        # row p: -(g + b)/M_p on own angle, +b/M_p on neighbour
        assert lin.a[1, 0] == pytest.approx(-(0.4 + 3.0) / 2.0)
        assert lin.a[1, 2] == pytest.approx(3.0 / 2.0)
        assert lin.a[3, 2] == pytest.approx(-(0.4 + 3.0) / 4.0)
        assert lin.a[3, 0] == pytest.approx(3.0 / 4.0)
        assert lin.a[1, 1] == pytest.approx(-1.0 / 2.0)
        assert lin.a[3, 3] == pytest.approx(-1.0 / 4.0)

    @settings(max_examples=15, deadline=None)
    @given(n=st.integers(2, 30))
    def test_dimension_is_twice_buses(self, n):
        lin = build_swing_matrix(ring_grid(n))
        assert lin.a.shape == (2 * n, 2 * n)
        assert lin.hurwitz


class TestHvdcCandidates:
    def test_two_buses_single_link(self):
        buses = (Bus("p", 2.0, 1.0, 0.1), Bus("q", 4.0, 1.0, 0.1))
        lin = build_swing_matrix(GridModel(buses=buses, lines=(Line("p", "q", 1.0),)))
        cands = hvdc_candidates(lin)
        assert len(cands) == 1
        cid, col = cands[0]
        assert cid == "p-q"
        expected = np.zeros(4)
        expected[1] = 1.0 / 2.0
        expected[3] = -1.0 / 4.0
        assert np.array_equal(col, expected)

    def test_count_formula(self):
        for n in (2, 5, 10, 74):
            lin = build_swing_matrix(ring_grid(n))
            assert len(hvdc_candidates(lin)) == n * (n - 1) // 2

    @settings(max_examples=10, deadline=None)
    @given(n=st.integers(2, 25))
    def test_ids_unique_and_columns_two_sparse(self, n):
        lin = build_swing_matrix(ring_grid(n))
        cands = hvdc_candidates(lin)
        ids = [cid for cid, _ in cands]
        assert len(set(ids)) == len(ids) == n * (n - 1) // 2
        for _, col in cands:
            assert np.count_nonzero(col) == 2
            # only frequency states are touched
            assert np.count_nonzero(col[0::2]) == 0

    def test_frequency_selector(self):
        lin = build_swing_matrix(ring_grid(3))
        c = frequency_selector(lin)
        assert c.shape == (3, 6)
        assert np.array_equal(c @ np.arange(6.0), [1.0, 3.0, 5.0])


class TestRingGrid:
    def test_line_count_no_chords(self):
        grid = ring_grid(8)
        assert len(grid.lines) == 8
        assert grid.n_buses == 8

    def test_two_bus_ring_is_single_line(self):
        assert len(ring_grid(2).lines) == 1

    def test_chords_are_seeded_and_new(self):
        g1 = ring_grid(10, chords=5, seed=3)
        g2 = ring_grid(10, chords=5, seed=3)
        assert [(l.from_bus, l.to_bus) for l in g1.lines] == [
            (l.from_bus, l.to_bus) for l in g2.lines
        ]
        assert len(g1.lines) == 15
        # different seed, different chords
        g3 = ring_grid(10, chords=5, seed=4)
        assert [(l.from_bus, l.to_bus) for l in g1.lines] != [
            (l.from_bus, l.to_bus) for l in g3.lines
        ]

    def test_too_many_chords(self):
        with pytest.raises(DomainError):
            ring_grid(4, chords=100)

    def test_too_small(self):
        with pytest.raises(DomainError):
            ring_grid(1)


class TestRandomSystem:
    def test_seeded_determinism(self):
        a1, c1 = random_hurwitz_system(6, 3, seed=9)
        a2, c2 = random_hurwitz_system(6, 3, seed=9)
        assert np.array_equal(a1, a2)
        for (i1, v1), (i2, v2) in zip(c1, c2):
            assert i1 == i2 and np.array_equal(v1, v2)

    def test_hurwitz_with_margin(self):
        for seed in range(10):
            a, _ = random_hurwitz_system(8, 2, seed=seed)
            assert is_hurwitz(a, margin=0.05)
            assert spectral_abscissa(a) == pytest.approx(-0.1, abs=1e-9)

    def test_columns_unit_norm(self):
        _, cands = random_hurwitz_system(7, 4, seed=1)
        for _, col in cands:
            assert np.linalg.norm(col) == pytest.approx(1.0, rel=1e-12)

    def test_dense_at_density_one(self):
        a, _ = random_hurwitz_system(4, 1, density=1.0, seed=0)
        assert np.count_nonzero(a) == 16

    def test_param_validation(self):
        with pytest.raises(DomainError):
            random_hurwitz_system(0, 1)
        with pytest.raises(DomainError):
            random_hurwitz_system(3, 1, density=0.0)


class TestProblemIO:
    def test_roundtrip_explicit(self, tmp_path):
        a, cands = random_hurwitz_system(5, 3, seed=4)
        doc = system_problem_dict(a, cands)
        path = tmp_path / "p.json"
        write_problem(path, doc)
        problem = load_problem(path)
        cs = problem.candidate_set
        assert problem.grid is None
        assert np.array_equal(cs.a, a)
        assert cs.ids == tuple(cid for cid, _ in cands)
        for (cid, col) in cands:
            assert np.array_equal(cs.column(cid), col)
        assert cs.metric.kind == "trace"

    def test_roundtrip_bytes_stable(self, tmp_path):
        a, cands = random_hurwitz_system(4, 2, seed=11)
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        write_problem(p1, system_problem_dict(a, cands))
        loaded = load_problem(p1)
        write_problem(
            p2,
            system_problem_dict(
                loaded.candidate_set.a,
                loaded.candidate_set.candidates,
            ),
        )
        assert p1.read_bytes() == p2.read_bytes()

    def test_weight_block_roundtrip(self, tmp_path):
        a, cands = random_hurwitz_system(3, 2, seed=2)
        cbar = np.diag([1.0, 2.0, 3.0])
        doc = system_problem_dict(a, cands, metric=MetricSpec.weighted(cbar))
        path = tmp_path / "w.json"
        write_problem(path, doc)
        metric = load_problem(path).candidate_set.metric
        assert metric.kind == "weighted_trace"
        assert np.array_equal(metric.weight, cbar)

    def test_grid_problem(self, tmp_path):
        path = tmp_path / "ring.json"
        write_problem(path, ring_problem_dict(6, chords=2, seed=5))
        problem = load_problem(path)
        assert problem.grid is not None
        assert problem.candidate_set.n == 12
        assert problem.candidate_set.size == 15

    def test_explicit_grid_block(self, tmp_path):
        doc = {
            "grid": {
                "buses": [
                    {"id": "p", "inertia": 1.0, "damping": 0.5, "grounding": 0.1},
                    {"id": "q", "inertia": 2.0, "damping": 0.5},
                ],
                "lines": [{"from": "p", "to": "q", "susceptance": 1.5}],
            }
        }
        path = tmp_path / "g.json"
        write_problem(path, doc)
        problem = load_problem(path)
        assert problem.candidate_set.size == 1
        assert problem.grid.grid.buses[1].grounding == 0.0

    def test_missing_file(self, tmp_path):
        with pytest.raises(ProblemFormatError):
            load_problem(tmp_path / "nope.json")

    def test_invalid_json_reports_position(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"n": 2,, }')
        with pytest.raises(ProblemFormatError) as err:
            load_problem(path)
        assert "line" in str(err.value) or "column" in str(err.value)

    def test_missing_field(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text('{"n": 2, "A": [[-1, 0], [0, -1]]}')
        with pytest.raises(ProblemFormatError) as err:
            load_problem(path)
        assert "candidates" in str(err.value)

    def test_wrong_column_length_names_candidate(self, tmp_path):
        path = tmp_path / "c.json"
        doc = {
            "n": 2,
            "A": [[-1.0, 0.0], [0.0, -1.0]],
            "candidates": [{"id": "good", "b": [1.0, 0.0]},
                           {"id": "bad", "b": [1.0, 0.0, 0.0]}],
        }
        path.write_text(json.dumps(doc))
        with pytest.raises(DimensionError) as err:
            load_problem(path)
        assert "'bad'" in str(err.value)

    def test_non_finite_entries_rejected(self, tmp_path):
        path = tmp_path / "nan.json"
        path.write_text(
            '{"n": 1, "A": [[NaN]], "candidates": [{"id": "x", "b": [1.0]}]}'
        )
        with pytest.raises((ProblemFormatError, NonFiniteError)):
            load_problem(path)

    def test_a_shape_mismatch(self, tmp_path):
        path = tmp_path / "s.json"
        path.write_text(
            '{"n": 3, "A": [[-1.0, 0.0], [0.0, -1.0]],'
            ' "candidates": [{"id": "x", "b": [1, 0, 0]}]}'
        )
        with pytest.raises(DimensionError):
            load_problem(path)

    def test_unknown_weight_kind(self, tmp_path):
        path = tmp_path / "k.json"
        doc = {
            "n": 1, "A": [[-1.0]],
            "candidates": [{"id": "x", "b": [1.0]}],
            "weight": {"kind": "sup_norm"},
        }
        path.write_text(json.dumps(doc))
        with pytest.raises(ProblemFormatError):
            load_problem(path)

    def test_unknown_topology(self, tmp_path):
        path = tmp_path / "t.json"
        path.write_text('{"grid": {"topology": "torus", "buses": 4}}')
        with pytest.raises(ProblemFormatError):
            load_problem(path)

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import wigner_current.topology as topology
from wigner_current.currents import SystemParams, j_sys
from wigner_current.gaussian import gaussian_wigner_field, squeezed_thermal_state, vacuum
from wigner_current.grid import VectorField, make_grid
from wigner_current.topology import (
    Loop,
    LoopTouchesStagnation,
    NonIntegerWinding,
    TopologyError,
    find_stagnation_points,
    origin_charge,
    winding_number,
    winding_value,
)


def _vacuum_flow(grid, fx, fp):
    w = gaussian_wigner_field(vacuum(), grid).as_2d()
    X, P = grid.mesh()
    return VectorField(grid, fx(X, P) * w, fp(X, P) * w)


def test_hyperbolic_flow(grid33):
    j = _vacuum_flow(grid33, lambda x, p: p, lambda x, p: x)
    assert winding_number(j, Loop((0.0, 0.0), 0.5)) == -1


def test_rotation(grid33):
    j = _vacuum_flow(grid33, lambda x, p: -p, lambda x, p: x)
    assert winding_number(j, Loop((0.0, 0.0), 0.5)) == 1


def test_damping(grid33):
    j = _vacuum_flow(grid33, lambda x, p: -x, lambda x, p: -p)
    assert winding_number(j, Loop((0.0, 0.0), 0.5)) == 1


def test_winding_value_is_near_integer(grid33):
    j = _vacuum_flow(grid33, lambda x, p: p, lambda x, p: x)
    assert winding_value(j, Loop((0.0, 0.0), 0.75)) == pytest.approx(-1.0, abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-6, 1e6), st.floats(0.3, 1.2), st.sampled_from(["hyperbolic", "rotation", "dipole"]))
def test_positive_rescaling_invariance(c, radius, kind):
    g = make_grid(33, 33, 4.0, 4.0)
    flows = {
        "hyperbolic": (lambda x, p: p, lambda x, p: x),
        "rotation": (lambda x, p: -p, lambda x, p: x),
        "dipole": (lambda x, p: x**2 - 0.25, lambda x, p: p),
    }
    j = _vacuum_flow(g, *flows[kind])
    loop = Loop((0.1, 0.05), radius)
    try:
        base = winding_number(j, loop)
    except LoopTouchesStagnation:
        with pytest.raises(LoopTouchesStagnation):
            winding_number(c * j, loop)
        return
    assert winding_number(c * j, loop) == base
    assert winding_value(c * j, loop) == pytest.approx(winding_value(j, loop), abs=1e-12)


def test_radius_invariance_on_j_sys(grid33):
    w = gaussian_wigner_field(squeezed_thermal_state(0.2, math.pi / 2, 0.1), grid33)
    j = j_sys(w, SystemParams(1.0))
    h = grid33.hx
    for radius in np.linspace(2 * h, 1.0, 9):
        for samples in (16, 64, 256):
            assert origin_charge(j, radius, samples) == -1


def _dipole(a=1.5):
    g = make_grid(33, 33, 4.0, 4.0)
    X, P = g.mesh()
    return VectorField(g, X**2 - a**2, P)


def test_dipole_points_and_additivity():
    j = _dipole()
    report = find_stagnation_points(j)
    pts = sorted(report.points, key=lambda s: s.x)
    assert len(pts) == 2
    assert pts[0].x == pytest.approx(-1.5, abs=0.25) and pts[0].charge == -1
    assert pts[1].x == pytest.approx(1.5, abs=0.25) and pts[1].charge == 1
    both = winding_number(j, Loop((0.0, 0.0), 2.5))
    assert both == sum(s.charge for s in pts) == 0
    assert winding_number(j, Loop((1.5, 0.0), 0.5)) == 1
    assert winding_number(j, Loop((-1.5, 0.0), 0.5)) == -1


def test_j_sys_has_single_saddle():
    g = make_grid(33, 33, 4.0, 4.0)
    w = gaussian_wigner_field(squeezed_thermal_state(0.1, math.pi / 2, 0.0), g)
    report = find_stagnation_points(j_sys(w, SystemParams(1.0)))
    assert len(report.points) == 1
    (pt,) = report.points
    assert abs(pt.x) < g.hx and abs(pt.p) < g.hp
    assert pt.charge == -1
    assert report.unresolved == ()


def test_zero_field_report(grid33):
    report = find_stagnation_points(VectorField.zeros(grid33))
    assert report.flagged_nodes == grid33.size
    assert report.points == ()
    assert report.field_norm_floor == 0.0


def test_floor_fraction_validated(grid33):
    with pytest.raises(ValueError):
        find_stagnation_points(VectorField.zeros(grid33), floor_frac=0.0)
    with pytest.raises(ValueError):
        find_stagnation_points(VectorField.zeros(grid33), floor_frac=1.0)


def test_loop_touching_a_zero_is_rejected(grid33):
    X, P = grid33.mesh()
    # zero at (0.5, 0), which lies on the loop
    j = VectorField(grid33, X - 0.5, P)
    with pytest.raises(LoopTouchesStagnation):
        winding_number(j, Loop((0.0, 0.0), 0.5))
    with pytest.raises(LoopTouchesStagnation):
        winding_number(VectorField.zeros(grid33), Loop((0.0, 0.0), 0.5))


def test_unresolved_orientation_is_rejected(grid33, monkeypatch):
    X, P = grid33.mesh()
    # zero just off the loop: the angle swings by nearly pi between samples
    j = VectorField(grid33, X - 0.5, P - 1e-3)
    # the zero sits just outside the loop
    assert winding_number(j, Loop((0.0, 0.0), 0.5)) == 0
    monkeypatch.setattr(topology, "MAX_BISECT", 0)
    with pytest.raises(NonIntegerWinding):
        winding_number(j, Loop((0.0, 0.0), 0.5))


def test_loop_validation(grid33):
    with pytest.raises(ValueError):
        Loop((0.0, 0.0), 0.0)
    with pytest.raises(ValueError):
        Loop((0.0, 0.0), 0.5, samples=4)
    j = _vacuum_flow(grid33, lambda x, p: p, lambda x, p: x)
    with pytest.raises(TopologyError):
        winding_number(j, Loop((3.8, 0.0), 0.5))

import math

import numpy as np
import pytest
import shapely
from shapely.geometry import Polygon, box

from cantorproj._kernels import BACKEND, backends
from cantorproj.geometry import Line, line_square_length, unit_normals

KERNELS = backends()


def _case(seed: int, n: int = 300, q: int = 60, denom: int = 64):
    gen = np.random.default_rng(seed)
    ix = gen.integers(0, denom, n)
    iy = gen.integers(0, denom, n)
    theta = gen.uniform(0, math.pi, q)
    theta[:4] = [0.0, math.pi / 2, math.pi / 4, 3 * math.pi / 4]
    nx, ny = unit_normals(theta)
    rho = gen.uniform(-0.3, 1.5, q)
    rho[:2] = [5 / denom, 7 / denom]  # lines along grid lines
    w = gen.uniform(0, 0.2, q)
    return ix, iy, denom, nx, ny, rho, rho - w / 2, rho + w / 2


def _slab_poly(nx, ny, lo, hi):
    dx, dy = -ny, nx
    big = 10.0
    pts = [(lo * nx + t * dx, lo * ny + t * dy) for t in (-big, big)]
    pts += [(hi * nx + t * dx, hi * ny + t * dy) for t in (big, -big)]
    return Polygon(pts)


def test_compiled_backend_is_selected_when_built():
    assert BACKEND in KERNELS
    assert BACKEND == "compiled" or "compiled" not in KERNELS


@pytest.mark.parametrize("name", sorted(KERNELS))
def test_line_sums_against_chord_oracle(name):
    k = KERNELS[name]
    ix, iy, d, nx, ny, rho, _, _ = _case(1)
    x0, y0 = ix / d, iy / d
    got = k.line_length_sums(x0, y0, 1 / d, nx, ny, rho)
    for j in range(len(rho)):
        line = Line(math.atan2(ny[j], nx[j]), rho[j])
        want = sum(line_square_length(line, (a, b, a + 1 / d, b + 1 / d)) for a, b in zip(x0, y0))
        assert got[j] == pytest.approx(want, abs=1e-12)
    assert np.allclose(k.line_length_sums_grid(ix, iy, d, nx, ny, rho), got, atol=1e-12)


@pytest.mark.parametrize("name", sorted(KERNELS))
def test_strip_hits_against_interval_oracle(name):
    k = KERNELS[name]
    ix, iy, d, nx, ny, _, lo, hi = _case(2)
    x0, y0 = ix / d, iy / d
    got = k.strip_hit_counts(x0, y0, 1 / d, nx, ny, lo, hi)
    for j in range(len(lo)):
        base = nx[j] * x0 + ny[j] * y0
        pmin = base + (min(nx[j], 0) + min(ny[j], 0)) / d
        pmax = base + (max(nx[j], 0) + max(ny[j], 0)) / d
        assert got[j] == int(np.sum((pmax > lo[j]) & (pmin < hi[j])))
    assert np.array_equal(k.strip_hit_counts_grid(ix, iy, d, nx, ny, lo, hi), got)


@pytest.mark.parametrize("name", sorted(KERNELS))
def test_clip_areas_against_shapely(name):
    k = KERNELS[name]
    ix, iy, d, nx, ny, _, lo, hi = _case(3, n=80, q=40)
    x0, y0 = ix / d, iy / d
    got = k.strip_clip_areas(x0, y0, 1 / d, nx, ny, lo, hi)
    for j in range(len(lo)):
        slab = _slab_poly(nx[j], ny[j], lo[j], hi[j])
        want = sum(shapely.intersection(box(a, b, a + 1 / d, b + 1 / d), slab).area for a, b in zip(x0, y0))
        assert got[j] == pytest.approx(want, abs=1e-12)


def test_backends_agree_on_grid_counts_at_scale():
    if len(KERNELS) < 2:
        pytest.skip("compiled core not built")
    gen = np.random.default_rng(4)
    d = 3**7
    ix, iy = gen.integers(0, d, 5000), gen.integers(0, d, 5000)
    nx, ny = unit_normals(gen.uniform(0, math.pi, 3000))
    rho = gen.uniform(0, 1.4, 3000)
    w = gen.uniform(0, 5 / d, 3000)
    outs = [KERNELS[b].strip_hit_counts_grid(ix, iy, d, nx, ny, rho - w / 2, rho + w / 2) for b in KERNELS]
    assert np.array_equal(*outs)
    sums = [KERNELS[b].line_length_sums_grid(ix, iy, d, nx, ny, rho) for b in KERNELS]
    assert np.allclose(*sums, atol=1e-11)


@pytest.mark.parametrize("env,expected", [("python", "python"), ("", None)])
def test_backend_selected_at_import(env, expected):
    import os
    import subprocess
    import sys

    proc = subprocess.run([sys.executable, "-c", "import cantorproj; print(cantorproj.BACKEND)"],
                          capture_output=True, text=True, env={**os.environ, "CANTORPROJ_KERNELS": env}, check=True)
    got = proc.stdout.strip()
    assert got == (expected or ("compiled" if "compiled" in backends() else "python"))

import numpy as np
import pytest

from viscokern.grids import (
    Field,
    Grid,
    GridMismatchError,
    dirichlet_eigenpairs,
    laplacian_apply,
    project,
)


class TestGrid:
    def test_geometry(self):
        g = Grid(0.0, 1.0, 3)
        assert g.h == 0.25
        np.testing.assert_allclose(g.x, [0.25, 0.5, 0.75])

    def test_validation(self):
        with pytest.raises(ValueError):
            Grid(1.0, 0.0, 3)
        with pytest.raises(ValueError):
            Grid(0.0, 1.0, 0)

    def test_field_shape_checked(self):
        g = Grid(0.0, 1.0, 3)
        with pytest.raises(ValueError):
            Field(g, np.zeros(4))


class TestLaplacian:
    def test_zero_field(self):
        g = Grid(0.0, 1.0, 5)
        out = laplacian_apply(Field.zeros(g))
        assert np.all(out.values == 0.0)

    def test_single_node_stencil(self):
        g = Grid(0.0, 1.0, 1)  # h = 0.5
        out = laplacian_apply(Field(g, np.array([3.0])))
        assert out.values[0] == -2.0 * 3.0 / 0.25

    def test_sine_mode_second_order(self):
        # exact: (sin(pi x))'' = -pi^2 sin(pi x); Richardson oracle: halving
        # h divides the max nodal error by ~4
        errs = []
        for n in (32, 64):
            g = Grid(0.0, 1.0, n)
            f = Field(g, np.sin(np.pi * g.x))
            out = laplacian_apply(f)
            errs.append(np.max(np.abs(out.values + np.pi**2 * f.values)))
        ratio = errs[0] / errs[1]
        assert 3.5 < ratio < 4.5

    def test_discrete_eigenvector_identity(self):
        # the sampled sine modes are exact eigenvectors of the stencil with
        # eigenvalue (4/h^2) sin^2(i pi h / (2 L))
        g = Grid(0.0, 2.0, 37)
        for i, (_, w) in enumerate(dirichlet_eigenpairs(g, 5), start=1):
            lam_h = (4.0 / g.h**2) * np.sin(i * np.pi * g.h / (2.0 * g.length)) ** 2
            out = laplacian_apply(w)
            np.testing.assert_allclose(out.values, -lam_h * w.values, atol=1e-12)

    def test_symmetry_in_inner_product(self):
        rng = np.random.default_rng(7)
        g = Grid(0.0, 1.0, 21)
        f = Field(g, rng.standard_normal(21))
        w = Field(g, rng.standard_normal(21))
        lhs = project(laplacian_apply(f), w)
        rhs = project(f, laplacian_apply(w))
        assert abs(lhs - rhs) < 1e-12 * max(1.0, abs(lhs))


class TestEigenpairs:
    def test_standard_spectrum(self):
        g = Grid(0.0, 1.0, 63)
        pairs = dirichlet_eigenpairs(g, 3)
        assert pairs[0][0] == pytest.approx(np.pi**2)
        assert pairs[1][0] == pytest.approx(4.0 * np.pi**2)

    def test_length_two_domain(self):
        g = Grid(0.0, 2.0, 63)
        pairs = dirichlet_eigenpairs(g, 2)
        # (2 pi / 2)^2 = pi^2
        assert pairs[1][0] == pytest.approx(np.pi**2)

    def test_discrete_normalization(self):
        g = Grid(0.0, 1.5, 40)
        for _, w in dirichlet_eigenpairs(g, 6):
            assert project(w, w) == pytest.approx(1.0, abs=1e-12)

    def test_orthogonality(self):
        g = Grid(0.0, 1.0, 50)
        pairs = dirichlet_eigenpairs(g, 4)
        for i in range(4):
            for j in range(i + 1, 4):
                assert abs(project(pairs[i][1], pairs[j][1])) < 1e-12

    def test_count_exceeds_resolution(self):
        g = Grid(0.0, 1.0, 5)
        with pytest.raises(ValueError, match="resolves at most"):
            dirichlet_eigenpairs(g, 6)


class TestProject:
    def test_zero_field(self):
        g = Grid(0.0, 1.0, 9)
        _, w = dirichlet_eigenpairs(g, 1)[0]
        assert project(Field.zeros(g), w) == 0.0

    def test_grid_mismatch(self):
        f = Field.zeros(Grid(0.0, 1.0, 9))
        w = Field.zeros(Grid(0.0, 1.0, 10))
        with pytest.raises(GridMismatchError):
            project(f, w)

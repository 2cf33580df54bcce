"""
Unit tests for the finite-volume calculus.

This module tests operator assembly, summation by parts, energies and the
grid norms.
"""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.models import BoundaryCondition, CoeffField, FaceField, Grid, GridFunction, face_shape
from src.modules.linalg.service import cg_solve
from src.modules.mesh.exceptions import EmptyMaskWarning, GridMismatchError, InvalidCoefficientError
from src.modules.mesh.schemas import NormKind
from src.modules.mesh.service import (
    assemble_operator,
    assemble_tensor_operator,
    build_faces,
    coefficient_field,
    discrete_divergence,
    discrete_gradient,
    energy_identity_residual,
    face_mask,
    norm,
    rhs_from_field,
)


def random_coefficients(grid: Grid, seed: int) -> CoeffField:
    rng = np.random.default_rng(seed)
    return CoeffField(a=rng.uniform(0.1, 1.0, grid.shape), m=rng.uniform(0.5, 1.5, grid.shape), grid=grid)


# ============================================================================
# Tests: Assembly
# ============================================================================

class TestAssembly:
    """Tests for the assembled sparse operators."""

    @pytest.mark.parametrize("periodic", [True, False])
    def test_symmetric(self, periodic):
        """Test that the assembled matrix is symmetric."""
        grid = Grid(8, 2, 1.0, periodic=periodic)
        op = assemble_operator(random_coefficients(grid, 0), BoundaryCondition.natural(grid))
        assert op.asymmetry() == 0.0

    def test_periodic_diffusion_kills_constants(self):
        """Test that a massless periodic operator maps constants to zero."""
        grid = Grid(8, 2, 1.0)
        op = assemble_operator(CoeffField(a=np.linspace(0.5, 2.0, 64).reshape(grid.shape), m=0.0, grid=grid), BoundaryCondition.periodic())
        assert np.allclose(op.matvec(np.ones(op.shape[0])), 0.0, atol=1e-13)

    def test_zero_conductivity_blocks_flux(self):
        """Test that a face next to a zero-conductivity cell carries no flux."""
        grid = Grid(4, 1, 1.0)
        a = np.array([1.0, 0.0, 1.0, 1.0])
        faces = build_faces(grid, a, BoundaryCondition.periodic())
        touching = (faces.left == 1) | (faces.right == 1)
        assert np.all(faces.trans[touching] == 0.0)

    def test_active_cells_only(self, disc_indicator):
        """Test that an active mask restricts the unknowns to the mask."""
        coeff = coefficient_field(disc_indicator, outside=1.0, inside=0.0, mass=0.0)
        op = assemble_operator(coeff, BoundaryCondition.periodic(), active=disc_indicator.complement)
        assert op.shape[0] == int(disc_indicator.complement.sum())

    def test_diagonal_tensor_matches_scalar(self):
        """Test that a diagonal tensor operator equals the scalar-coefficient one."""
        grid = Grid(8, 2, 1.0, periodic=False)
        bc = BoundaryCondition.dirichlet()
        tensor = assemble_tensor_operator(grid, 0.7 * np.eye(2), 1.0, bc)
        scalar = assemble_operator(CoeffField(a=0.7, m=1.0, grid=grid), bc)
        assert np.allclose(tensor.to_dense(), scalar.to_dense())

    def test_full_tensor_symmetric(self):
        """Test that the cross stencil keeps the matrix symmetric."""
        grid = Grid(8, 2, 1.0)
        op = assemble_tensor_operator(grid, np.array([[1.0, 0.3], [0.3, 0.8]]), 1.0, BoundaryCondition.periodic())
        assert op.asymmetry() < 1e-14

    def test_negative_conductivity_rejected(self, disc_indicator):
        """Test that a negative inside conductivity is rejected."""
        with pytest.raises(InvalidCoefficientError):
            coefficient_field(disc_indicator, outside=1.0, inside=-1.0)

    def test_periodic_bc_on_box_rejected(self):
        """Test that a periodic condition needs a periodic grid."""
        grid = Grid(4, 2, 1.0, periodic=False)
        with pytest.raises(GridMismatchError):
            build_faces(grid, 1.0, BoundaryCondition.periodic())


# ============================================================================
# Tests: Discrete calculus
# ============================================================================

class TestSummationByParts:
    """Tests for the gradient/divergence pair."""

    @given(seed=st.integers(0, 2**16), periodic=st.booleans())
    @settings(max_examples=30, deadline=None)
    def test_divergence_is_negative_adjoint(self, seed, periodic):
        """Test that sum(grad u . w) = -sum(u div w) exactly."""
        grid = Grid(6, 2, 1.0, periodic=periodic)
        rng = np.random.default_rng(seed)
        u = GridFunction(rng.standard_normal(grid.shape), grid, BoundaryCondition.natural(grid))
        w = FaceField(tuple(rng.standard_normal(face_shape(grid, k)) for k in range(2)), grid)
        left = sum(np.sum(g * c) for g, c in zip(discrete_gradient(u).components, w.components))
        right = -np.sum(u.values * discrete_divergence(w).values)
        assert left == pytest.approx(right, rel=1e-10, abs=1e-10)

    def test_face_mask_box_shapes(self):
        """Test that box face masks have the interior-face shapes."""
        grid = Grid(5, 2, 1.0, periodic=False)
        masks = face_mask(grid, np.ones(grid.shape, dtype=bool))
        assert masks[0].shape == (4, 5)
        assert masks[1].shape == (5, 4)


class TestEnergyIdentity:
    """Tests for the discrete energy identity."""

    @given(seed=st.integers(0, 2**16), periodic=st.booleans())
    @settings(max_examples=10, deadline=None)
    def test_solution_satisfies_identity(self, seed, periodic):
        """Test that the work of f equals the stored energy for a solution."""
        grid = Grid(12, 2, 1.0, periodic=periodic)
        op = assemble_operator(random_coefficients(grid, seed), BoundaryCondition.natural(grid))
        f = GridFunction(np.random.default_rng(seed + 1).standard_normal(grid.shape), grid, BoundaryCondition.natural(grid))
        u = cg_solve(op, rhs_from_field(op, f), tol=1e-12)
        assert energy_identity_residual(op, u, f) < 1e-8


# ============================================================================
# Tests: Norms
# ============================================================================

class TestNorms:
    """Tests for the quadrature norms."""

    def test_constant_norms(self):
        """Test the L2 norm and the seminorm of a constant on the unit torus."""
        grid = Grid(16, 2, 1.0)
        one = GridFunction(np.ones(grid.shape), grid)
        assert norm(one) == pytest.approx(1.0)
        assert norm(one, kind=NormKind.H1_SEMINORM) == 0.0
        assert norm(one, kind=NormKind.H1) == pytest.approx(1.0)

    def test_lp_of_constant(self):
        """Test that every Lp norm of 1 on a unit cell is 1."""
        grid = Grid(8, 2, 1.0)
        one = GridFunction(np.ones(grid.shape), grid)
        assert norm(one, kind=NormKind.LP, p=1.5) == pytest.approx(1.0)

    def test_masked_norm(self):
        """Test that a mask restricts the quadrature."""
        grid = Grid(4, 1, 1.0)
        u = GridFunction(np.array([1.0, 1.0, 0.0, 0.0]), grid)
        mask = np.array([True, False, False, False])
        assert norm(u, mask=mask) == pytest.approx(0.5)

    def test_empty_mask_warns(self):
        """Test that an empty mask returns zero with a warning."""
        grid = Grid(4, 2, 1.0)
        u = GridFunction(np.ones(grid.shape), grid)
        with pytest.warns(EmptyMaskWarning):
            assert norm(u, mask=np.zeros(grid.shape, dtype=bool)) == 0.0

    def test_invalid_p_rejected(self):
        """Test that p below one is rejected."""
        grid = Grid(4, 2, 1.0)
        with pytest.raises(ValueError):
            norm(GridFunction(np.ones(grid.shape), grid), kind=NormKind.LP, p=0.5)

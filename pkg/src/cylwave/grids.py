"""Truncated-cylinder grids, grid functions, and the discrete transport operator.

The domain is a tensor product of a 1D cross-section (or a single point in
pure-1D mode) with a truncated axial window.  The axial operator
``d2/dz2 + c d/dz`` is assembled in exponentially fitted flux form, which is
second-order, exact on constants and on ``u = z`` at interior nodes, an
M-matrix for every ``c >= 0``, and self-adjoint in the discrete exponentially
weighted inner product.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

NEUMANN = "neumann"
DIRICHLET = "dirichlet"

# front must stay this far from either axial end (re-window otherwise)
WINDOW_MARGIN = 10.0


class GridError(ValueError):
    """Invalid grid configuration or mismatched field."""


@dataclass(frozen=True)
class GridConfig:
    """Raw grid parameters as read from an experiment config."""

    n_y: int = 1
    n_z: int = 401
    y_min: float = 0.0
    y_max: float = 1.0
    z_min: float = -20.0
    z_max: float = 20.0
    bc_left: str = NEUMANN
    bc_right: str = NEUMANN
    # axial ends: zero normal derivative behind the front, pinned zero ahead
    bc_axial_left: str = NEUMANN
    bc_axial_right: str = DIRICHLET


@dataclass(frozen=True)
class CylinderGrid:
    """Immutable tensor grid for the truncated cylinder.

    ``n_y == 1`` selects pure-1D mode: the cross-section collapses to a point
    with unit measure and both cross-section tags are Neumann.
    """

    n_y: int
    n_z: int
    y_min: float
    y_max: float
    z_min: float
    z_max: float
    bc_left: str
    bc_right: str
    bc_axial_left: str
    bc_axial_right: str
    dy: float
    dz: float

    @property
    def y(self) -> np.ndarray:
        if self.n_y == 1:
            return np.array([0.5 * (self.y_min + self.y_max)])
        return np.linspace(self.y_min, self.y_max, self.n_y)

    @property
    def z(self) -> np.ndarray:
        return np.linspace(self.z_min, self.z_max, self.n_z)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_y, self.n_z)

    @property
    def window_length(self) -> float:
        return self.z_max - self.z_min

    def dirichlet_mask(self) -> np.ndarray:
        """Boolean (n_y, n_z) mask of nodes pinned to zero."""
        mask = np.zeros(self.shape, dtype=bool)
        if self.n_y > 1:
            if self.bc_left == DIRICHLET:
                mask[0, :] = True
            if self.bc_right == DIRICHLET:
                mask[-1, :] = True
        if self.bc_axial_right == DIRICHLET:
            mask[:, -1] = True
        return mask

    def section_weights(self) -> np.ndarray:
        """Trapezoidal quadrature weights over the cross-section."""
        if self.n_y == 1:
            return np.array([1.0])
        w = np.full(self.n_y, self.dy)
        w[0] = w[-1] = 0.5 * self.dy
        return w


def build_grid(config: GridConfig) -> CylinderGrid:
    """Validate a configuration and derive spacings."""
    if config.n_z < 16:
        raise GridError("axial resolution too small: n_z = %d < 16" % config.n_z)
    if config.n_y < 1:
        raise GridError("n_y must be >= 1, got %d" % config.n_y)
    if not config.z_min < config.z_max:
        raise GridError("axial window is empty: [%g, %g]" % (config.z_min, config.z_max))
    for tag in (config.bc_left, config.bc_right, config.bc_axial_right):
        if tag not in (NEUMANN, DIRICHLET):
            raise GridError("unknown boundary tag %r" % tag)
    if config.bc_axial_left != NEUMANN:
        raise GridError("axial left end supports only %r, got %r" % (NEUMANN, config.bc_axial_left))

    dz = (config.z_max - config.z_min) / (config.n_z - 1)
    if config.n_y == 1:
        if DIRICHLET in (config.bc_left, config.bc_right):
            raise GridError("pure-1D mode requires Neumann cross-section tags")
        dy = 0.0
    else:
        if not config.y_min < config.y_max:
            raise GridError("cross-section interval is empty: [%g, %g]" % (config.y_min, config.y_max))
        dy = (config.y_max - config.y_min) / (config.n_y - 1)

    return CylinderGrid(
        n_y=config.n_y,
        n_z=config.n_z,
        y_min=config.y_min,
        y_max=config.y_max,
        z_min=config.z_min,
        z_max=config.z_max,
        bc_left=config.bc_left,
        bc_right=config.bc_right,
        bc_axial_left=config.bc_axial_left,
        bc_axial_right=config.bc_axial_right,
        dy=dy,
        dz=dz,
    )


@dataclass
class Field:
    """Real-valued grid function stored as an (n_y, n_z) array."""

    grid: CylinderGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise GridError(
                "field shape %s does not match grid %s" % (self.values.shape, self.grid.shape)
            )
        if not np.all(np.isfinite(self.values)):
            raise GridError("field contains non-finite entries")

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy())


@dataclass
class CrossSectionField:
    """Function on the cross-section only (length n_y)."""

    grid: CylinderGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n_y,):
            raise GridError("cross-section field length %d, expected %d"
                            % (self.values.size, self.grid.n_y))
        if not np.all(np.isfinite(self.values)):
            raise GridError("cross-section field contains non-finite entries")
        # pinned ends hold zero exactly
        if self.grid.n_y > 1:
            if self.grid.bc_left == DIRICHLET:
                self.values[0] = 0.0
            if self.grid.bc_right == DIRICHLET:
                self.values[-1] = 0.0

    def copy(self) -> "CrossSectionField":
        return CrossSectionField(self.grid, self.values.copy())


def field_from_section(section: CrossSectionField) -> Field:
    """Constant-in-z extension of a cross-section function."""
    g = section.grid
    return Field(g, np.tile(section.values[:, None], (1, g.n_z)))


def apply_boundary(u: Field) -> Field:
    """Enforce value conditions: Dirichlet rows/columns are zeroed.

    Neumann ends are a stencil convention (mirror reflection inside the
    operator) and leave values untouched.  Idempotent by construction.
    """
    v = u.values.copy()
    g = u.grid
    if g.n_y > 1:
        if g.bc_left == DIRICHLET:
            v[0, :] = 0.0
        if g.bc_right == DIRICHLET:
            v[-1, :] = 0.0
    if g.bc_axial_right == DIRICHLET:
        v[:, -1] = 0.0
    return Field(g, v)


def _axial_flux_coeffs(grid: CylinderGrid, c: float) -> tuple[np.ndarray, float]:
    """Flux coefficients F_{j+1/2} (relative to e^{c z_j}) for d2/dz2 + c d/dz.

    Returns the n_z-1 ratios F_{j+1/2}/W_j and W_{j+1}/W_j so that the row of
    node j reads [F_{j-1/2} u_{j-1} - (F_{j-1/2}+F_{j+1/2}) u_j + F_{j+1/2} u_{j+1}]
    / (dz^2 W_j).
    """
    dz = grid.dz
    a = 0.5 * c * dz
    if abs(a) < 1e-12:
        kappa = 1.0
    else:
        kappa = a / np.sinh(a)
    # F_{j+1/2}/W_j = kappa*e^{a};  F_{j+1/2}/W_{j+1} = kappa*e^{-a}
    return kappa * np.exp(a), kappa * np.exp(-a)


def axial_bands(grid: CylinderGrid, c: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(lower, diag, upper) diagonals of the axial operator with BC patches.

    ``lower[j]`` couples node j to j-1, ``upper[j]`` to j+1; pinned rows come
    out as zero rows.
    """
    n = grid.n_z
    dz2 = grid.dz ** 2
    up, lo = _axial_flux_coeffs(grid, c)  # F/W of left node, F/W of right node
    lower = np.full(n, lo / dz2)
    upper = np.full(n, up / dz2)
    diag = -(lower + upper)
    lower[0] = 0.0
    diag[0] = -up / dz2  # zero-flux left end: drop the F_{-1/2} contribution
    if grid.bc_axial_right == DIRICHLET:
        lower[-1] = diag[-1] = 0.0
    else:
        diag[-1] = -lo / dz2
    upper[-1] = 0.0
    return lower, diag, upper


def _axial_operator(grid: CylinderGrid, c: float) -> sp.csr_matrix:
    lower, diag, upper = axial_bands(grid, c)
    return sp.diags([lower[1:], diag, upper[:-1]], offsets=[-1, 0, 1], format="csr")


def _section_operator(grid: CylinderGrid) -> sp.csr_matrix:
    n = grid.n_y
    if n == 1:
        return sp.csr_matrix((1, 1))
    dy2 = grid.dy ** 2
    lower = np.full(n, 1.0 / dy2)
    upper = np.full(n, 1.0 / dy2)
    diag = np.full(n, -2.0 / dy2)
    lower[0] = upper[-1] = 0.0
    if grid.bc_left == NEUMANN:
        upper[0] = 2.0 / dy2  # mirror ghost
    else:
        upper[0] = diag[0] = 0.0
    if grid.bc_right == NEUMANN:
        lower[-1] = 2.0 / dy2
    else:
        lower[-1] = diag[-1] = 0.0
    return sp.diags([lower[1:], diag, upper[:-1]], offsets=[-1, 0, 1], format="csr")


_OPERATOR_CACHE: dict[tuple, sp.csr_matrix] = {}


def transport_operator(grid: CylinderGrid, c: float) -> sp.csr_matrix:
    """Sparse discrete ``Delta + c d/dz`` with the grid's boundary conventions.

    Rows at Dirichlet-pinned nodes are zero (the operator maps pinned values
    to zero, matching apply_boundary).  Acts on row-major raveled fields.
    """
    key = (grid, float(c))
    A = _OPERATOR_CACHE.get(key)
    if A is not None:
        return A
    Az = _axial_operator(grid, c)
    if grid.n_y == 1:
        A = Az
    else:
        Ay = _section_operator(grid)
        A = sp.kron(sp.identity(grid.n_y, format="csr"), Az, format="csr") + sp.kron(
            Ay, sp.identity(grid.n_z, format="csr"), format="csr")
    mask = grid.dirichlet_mask().ravel()
    if mask.any():
        A = sp.diags((~mask).astype(float)) @ A
    A = A.tocsr()
    if len(_OPERATOR_CACHE) > 16:
        _OPERATOR_CACHE.clear()
    _OPERATOR_CACHE[key] = A
    return A


def laplacian_advection(u: Field, c: float) -> Field:
    """Second-order discrete ``Delta u + c u_z`` (interior); zero at pinned nodes."""
    if c < 0:
        raise GridError("frame speed must be >= 0, got %g" % c)
    A = transport_operator(u.grid, c)
    return Field(u.grid, (A @ u.values.ravel()).reshape(u.grid.shape))


def axial_derivative(values: np.ndarray, grid: CylinderGrid) -> np.ndarray:
    """Centered d/dz (second-order one-sided at the window ends)."""
    return np.gradient(values, grid.dz, axis=1, edge_order=2)


def section_derivative(values: np.ndarray, grid: CylinderGrid) -> np.ndarray:
    """Centered d/dy; zero in pure-1D mode."""
    if grid.n_y == 1:
        return np.zeros_like(values)
    return np.gradient(values, grid.dy, axis=0, edge_order=2)

"""Impedance boundary conditions on an interval with boundary ``{a, b}``.

The Dirichlet trace is endpoint evaluation and the normal trace is
signed endpoint evaluation (outward normal ``-1`` at ``a``, ``+1`` at
``b``). Comparing them through the two-point pivot space turns the
impedance condition ``K gamma0 f = gammaN Phi`` into an exact 2x2
matrix identity on boundary data,

    d_bd(Phi_BD) = kappa^* K kappa (f_BD),

so the induced block realization is m-accretive exactly when
``K + K^T`` is positive semidefinite.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .blockop import BDVector, BlockRealization, BlockState, bd_project, bd_space, d_bd
from .derivative import DerivativeContext
from .funcspace import ExpPoly
from .relations import SPECTRAL_RTOL, LinearRelation

__all__ = [
    "TraceVector",
    "ImpedanceK",
    "gamma0",
    "gammaN",
    "kappa",
    "kappa_adjoint",
    "kappa_matrix",
    "kappa_adjoint_matrix",
    "trace_norm",
    "impedance_map_matrix",
    "impedance_realization",
    "is_K_accretive",
]


@dataclass(frozen=True)
class TraceVector:
    """Boundary values ``(at_a, at_b)`` as an element of the trace space."""

    at_a: float
    at_b: float

    @property
    def coeffs(self) -> np.ndarray:
        return np.array([self.at_a, self.at_b])

    def __sub__(self, other: "TraceVector") -> "TraceVector":
        return TraceVector(self.at_a - other.at_a, self.at_b - other.at_b)


@dataclass(frozen=True)
class ImpedanceK:
    """Boundary operator on the two-point pivot space (counting measure)."""

    entries: tuple[tuple[float, float], tuple[float, float]]

    def __post_init__(self) -> None:
        m = np.asarray(self.entries, dtype=float)
        if m.shape != (2, 2):
            raise ValueError("K must be a 2x2 matrix")
        object.__setattr__(
            self, "entries", tuple(tuple(float(x) for x in row) for row in m)
        )

    @property
    def matrix(self) -> np.ndarray:
        return np.asarray(self.entries, dtype=float)

    @classmethod
    def from_matrix(cls, matrix) -> "ImpedanceK":
        m = np.asarray(matrix, dtype=float)
        return cls(tuple(tuple(row) for row in m))

    def to_jsonable(self) -> list:
        return [list(row) for row in self.entries]


def gamma0(ctx: DerivativeContext, f: ExpPoly) -> TraceVector:
    """Dirichlet trace ``(f(a), f(b))``."""
    return TraceVector(f(ctx.a), f(ctx.b))


def gammaN(ctx: DerivativeContext, phi: ExpPoly) -> TraceVector:
    """Normal trace ``(-phi(a), phi(b))``."""
    return TraceVector(-phi(ctx.a), phi(ctx.b))


@lru_cache(maxsize=64)
def _endpoint_matrix(ctx: DerivativeContext) -> np.ndarray:
    iv = ctx.interval
    return np.array([[iv.exp_a, iv.exp_neg_a], [iv.exp_b, iv.exp_neg_b]])


def kappa_matrix(ctx: DerivativeContext) -> np.ndarray:
    """Endpoint evaluation of BD coefficients: rows ``(e^a, e^{-a})``, ``(e^b, e^{-b})``."""
    return _endpoint_matrix(ctx).copy()


def kappa_adjoint_matrix(ctx: DerivativeContext) -> np.ndarray:
    """Adjoint of endpoint evaluation, solved through the BD Gram matrix."""
    gram = bd_space(ctx).gram
    return np.linalg.solve(gram, _endpoint_matrix(ctx).T)


def kappa(x: BDVector) -> TraceVector:
    """Embed boundary data into the pivot space by endpoint evaluation."""
    values = _endpoint_matrix(x.ctx) @ x.coeffs
    return TraceVector(float(values[0]), float(values[1]))


def kappa_adjoint(ctx: DerivativeContext, y: TraceVector) -> BDVector:
    """The unique ``x`` with ``<kappa x', y> = <x', x>_BD`` for all ``x'``."""
    return BDVector.from_coeffs(ctx, kappa_adjoint_matrix(ctx) @ y.coeffs)


def trace_norm(ctx: DerivativeContext, y: TraceVector) -> float:
    """Renormed trace norm: the H1 norm of the boundary-data function
    with these endpoint values."""
    coeffs = np.linalg.solve(_endpoint_matrix(ctx), y.coeffs)
    return BDVector.from_coeffs(ctx, coeffs).norm()


def impedance_map_matrix(ctx: DerivativeContext, k: ImpedanceK) -> np.ndarray:
    """``kappa^* K kappa`` as a matrix on BD coefficients."""
    e = _endpoint_matrix(ctx)
    return kappa_adjoint_matrix(ctx) @ k.matrix @ e


def impedance_realization(ctx: DerivativeContext, k: ImpedanceK) -> BlockRealization:
    """Block realization with domain ``{(f, Phi): K gamma0 f = gammaN Phi}``.

    Materialised as the graph relation ``Dv_BD = kappa^* K kappa u_BD``;
    construction verifies at 20 random states that the trace form of the
    condition and the boundary-data form have identical defects.
    """
    w = impedance_map_matrix(ctx, k)
    basis = [np.stack([e, w @ e]) for e in np.eye(2)]
    realization = BlockRealization.from_relation(
        ctx, LinearRelation(bd_space(ctx), np.array(basis))
    )
    _verify_pivot_equivalence(ctx, k, w)
    return realization


def _verify_pivot_equivalence(
    ctx: DerivativeContext, k: ImpedanceK, w: np.ndarray, points: int = 20
) -> None:
    rng = np.random.default_rng(1)
    adj = kappa_adjoint_matrix(ctx)
    for _ in range(points):
        u = ExpPoly(
            ((float(rng.integers(-2, 3)), tuple(rng.uniform(-1, 1, size=2))),)
        )
        phi = ExpPoly(
            ((float(rng.integers(-2, 3)), tuple(rng.uniform(-1, 1, size=2))),)
        )
        state = BlockState(u, phi)
        trace_defect = (
            k.matrix @ gamma0(ctx, u).coeffs - gammaN(ctx, phi).coeffs
        )
        bd_defect = w @ bd_project(ctx, u).coeffs - d_bd(bd_project(ctx, phi)).coeffs
        lifted = adj @ trace_defect
        if not np.allclose(bd_defect, lifted, atol=1e-10 * (1 + np.abs(lifted).max())):
            raise AssertionError(
                "pivot-space and boundary-data defects disagree "
                f"for state {state}: {bd_defect} vs {lifted}"
            )


def is_K_accretive(k: ImpedanceK) -> bool:
    """Positive semidefiniteness of ``K + K^T`` (relative threshold)."""
    sym = k.matrix + k.matrix.T
    eigs = np.linalg.eigvalsh(sym)
    scale = max(float(np.max(np.abs(eigs))), 1.0)
    return bool(eigs[0] >= -SPECTRAL_RTOL * scale)

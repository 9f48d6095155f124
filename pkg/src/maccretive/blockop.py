"""Block operator ``(u, v) -> (v', u')`` on an interval and its realizations.

The off-diagonal first-order system couples two copies of L2 through a
single derivative. Its boundary-data space is two-dimensional,

    BD = span{e^t, e^{-t}},   |w|_BD^2 = cp^2 (e^{2b}-e^{2a}) + cm^2 (e^{-2a}-e^{-2b}),

and every m-accretive realization admits four equivalent descriptions:
a nonexpansive map ``f`` on BD, a map ``h`` between the deficiency
spaces, an m-accretive relation ``M`` on BD, and (in the linear case) an
operator pair ``(S, T)`` with ``S u_BD = T Dv_BD``. This module builds
any of them from any other and solves the associated resolvent
equations exactly in the function algebra.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .derivative import DerivativeContext
from .errors import RootNotFound
from .funcspace import (
    ExpPoly,
    Interval,
    absorb_rate_shift,
    differentiate,
    graph_inner,
    l2_inner,
)
from .relations import (
    CayleyRelation,
    ContractionMap,
    InnerSpace,
    LinearRelation,
    OperatorPair,
    cayley_to_relation,
    is_m_accretive_linear,
    operator_norm,
)

__all__ = [
    "BDVector",
    "BlockState",
    "BlockRealization",
    "bd_space",
    "bd_project",
    "g_bd",
    "d_bd",
    "pi1_block",
    "pi_minus1_block",
    "boundary_data",
    "reduce_h_to_f",
    "lift_f_to_h",
    "realization_domain_test",
    "block_resolve",
    "st_domain",
    "apply_block",
    "state_l2_inner",
    "state_l2_norm",
    "state_graph_inner",
]


@dataclass(frozen=True)
class BDVector:
    """Element ``cp e^t + cm e^{-t}`` of the boundary-data space."""

    ctx: DerivativeContext
    cp: float
    cm: float

    def to_exppoly(self) -> ExpPoly:
        return ExpPoly(((1.0, (self.cp,)), (-1.0, (self.cm,))))

    @property
    def coeffs(self) -> np.ndarray:
        return np.array([self.cp, self.cm])

    def norm(self) -> float:
        sq = self.cp**2 * self.ctx.denom_plus + self.cm**2 * self.ctx.denom_minus
        return math.sqrt(max(sq, 0.0))

    def value_at(self, t: float) -> float:
        return self.cp * math.exp(t) + self.cm * math.exp(-t)

    def __add__(self, other: "BDVector") -> "BDVector":
        return BDVector(self.ctx, self.cp + other.cp, self.cm + other.cm)

    def __sub__(self, other: "BDVector") -> "BDVector":
        return BDVector(self.ctx, self.cp - other.cp, self.cm - other.cm)

    def __mul__(self, scalar: float) -> "BDVector":
        return BDVector(self.ctx, scalar * self.cp, scalar * self.cm)

    __rmul__ = __mul__

    @classmethod
    def from_coeffs(cls, ctx: DerivativeContext, coeffs) -> "BDVector":
        cp, cm = np.asarray(coeffs, dtype=float)
        return cls(ctx, float(cp), float(cm))


@dataclass(frozen=True)
class BlockState:
    """Pair ``(u, v)`` in the domain of the block operator."""

    u: ExpPoly
    v: ExpPoly

    def __add__(self, other: "BlockState") -> "BlockState":
        return BlockState(self.u + other.u, self.v + other.v)

    def __sub__(self, other: "BlockState") -> "BlockState":
        return BlockState(self.u - other.u, self.v - other.v)

    def __mul__(self, scalar: float) -> "BlockState":
        return BlockState(scalar * self.u, scalar * self.v)

    __rmul__ = __mul__

    @classmethod
    def zero(cls) -> "BlockState":
        return cls(ExpPoly.zero(), ExpPoly.zero())

    def to_jsonable(self) -> dict:
        return {"u": self.u.to_jsonable(), "v": self.v.to_jsonable()}

    @classmethod
    def from_jsonable(cls, data: dict) -> "BlockState":
        return cls(ExpPoly.from_jsonable(data["u"]), ExpPoly.from_jsonable(data["v"]))


def apply_block(state: BlockState) -> BlockState:
    """The block operator itself: ``(u, v) -> (v', u')``."""
    return BlockState(differentiate(state.v), differentiate(state.u))


def state_l2_inner(s1: BlockState, s2: BlockState, interval: Interval) -> float:
    return l2_inner(s1.u, s2.u, interval) + l2_inner(s1.v, s2.v, interval)


def state_l2_norm(state: BlockState, interval: Interval) -> float:
    return math.sqrt(max(state_l2_inner(state, state, interval), 0.0))


def state_graph_inner(s1: BlockState, s2: BlockState, interval: Interval) -> float:
    """Graph inner product in the domain of the block operator."""
    return state_l2_inner(s1, s2, interval) + state_l2_inner(
        apply_block(s1), apply_block(s2), interval
    )


@lru_cache(maxsize=64)
def bd_space(ctx: DerivativeContext) -> InnerSpace:
    """BD coefficient space with its (diagonal) graph Gram matrix."""
    return InnerSpace(2, np.diag([ctx.denom_plus, ctx.denom_minus]))


@lru_cache(maxsize=64)
def _product_gram(ctx: DerivativeContext) -> np.ndarray:
    return np.kron(np.eye(2), bd_space(ctx).gram)


_KERNEL_PLUS = ExpPoly.exponential(1.0)
_KERNEL_MINUS = ExpPoly.exponential(-1.0)


@lru_cache(maxsize=64)
def _bd_gram(ctx: DerivativeContext) -> np.ndarray:
    iv = ctx.interval
    return np.array(
        [
            [
                graph_inner(_KERNEL_PLUS, _KERNEL_PLUS, iv),
                graph_inner(_KERNEL_PLUS, _KERNEL_MINUS, iv),
            ],
            [
                graph_inner(_KERNEL_MINUS, _KERNEL_PLUS, iv),
                graph_inner(_KERNEL_MINUS, _KERNEL_MINUS, iv),
            ],
        ]
    )


@lru_cache(maxsize=16384)
def _bd_coeffs(ctx: DerivativeContext, u: ExpPoly) -> tuple[float, float]:
    # graph pairings against the kernel elements, using that the kernel
    # derivatives are +-themselves
    iv = ctx.interval
    du = differentiate(u)
    rhs = np.array(
        [
            l2_inner(u, _KERNEL_PLUS, iv) + l2_inner(du, _KERNEL_PLUS, iv),
            l2_inner(u, _KERNEL_MINUS, iv) - l2_inner(du, _KERNEL_MINUS, iv),
        ]
    )
    cp, cm = np.linalg.solve(_bd_gram(ctx), rhs)
    return float(cp), float(cm)


def bd_project(ctx: DerivativeContext, u: ExpPoly) -> BDVector:
    """Graph-orthogonal projection of ``u`` onto the BD span.

    Solved through the 2x2 Gram system; the residual ``u - result``
    vanishes at both endpoints.
    """
    return BDVector(ctx, *_bd_coeffs(ctx, u))


def g_bd(x: BDVector) -> BDVector:
    """Differentiation within BD: ``(cp, cm) -> (cp, -cm)``; norm-preserving."""
    return BDVector(x.ctx, x.cp, -x.cm)


def d_bd(y: BDVector) -> BDVector:
    """Inverse of :func:`g_bd` (the same coefficient rule)."""
    return BDVector(y.ctx, y.cp, -y.cm)


def boundary_data(ctx: DerivativeContext, state: BlockState) -> tuple[BDVector, BDVector]:
    """The pair ``x = (u_BD + Dv_BD)/2``, ``y = (u_BD - Dv_BD)/2``.

    ``x`` and ``y`` are the BD coordinates of the two deficiency
    projections; membership tests of every description are functions of
    them.
    """
    u_bd = bd_project(ctx, state.u)
    dv_bd = d_bd(bd_project(ctx, state.v))
    return 0.5 * (u_bd + dv_bd), 0.5 * (u_bd - dv_bd)


def pi1_block(ctx: DerivativeContext, state: BlockState) -> BlockState:
    """Projection onto ``ker(1 - A)``; the second component is the
    derivative of the first."""
    u_bd = bd_project(ctx, state.u)
    v_bd = bd_project(ctx, state.v)
    first = 0.5 * (u_bd + d_bd(v_bd))
    second = 0.5 * (g_bd(u_bd) + v_bd)
    return BlockState(first.to_exppoly(), second.to_exppoly())


def pi_minus1_block(ctx: DerivativeContext, state: BlockState) -> BlockState:
    """Projection onto ``ker(1 + A)``."""
    u_bd = bd_project(ctx, state.u)
    v_bd = bd_project(ctx, state.v)
    first = 0.5 * (u_bd - d_bd(v_bd))
    second = 0.5 * (v_bd - g_bd(u_bd))
    return BlockState(first.to_exppoly(), second.to_exppoly())


# ----------------------------------------------------------------------
# h <-> f reduction
# ----------------------------------------------------------------------

BlockMap = Callable[[BlockState], BlockState]


def lift_f_to_h(ctx: DerivativeContext, f: ContractionMap) -> BlockMap:
    """Extend a BD map to the deficiency spaces: ``h(w, Gw) = (fw, -G fw)``."""

    def h(state: BlockState) -> BlockState:
        w = bd_project(ctx, state.u)
        image = BDVector.from_coeffs(ctx, f(w.coeffs))
        poly = image.to_exppoly()
        return BlockState(poly, -1.0 * differentiate(poly))

    return h


def reduce_h_to_f(
    ctx: DerivativeContext, h: BlockMap, lipschitz_cert: float = 1.0
) -> ContractionMap:
    """First component of ``h`` along ``w -> (w, Gw)``; certificates
    transfer unchanged because ``|(w, Gw)|_{L2 x L2} = |w|_BD``."""

    def func(coeffs: np.ndarray) -> np.ndarray:
        w = BDVector.from_coeffs(ctx, coeffs)
        poly = w.to_exppoly()
        out = h(BlockState(poly, differentiate(poly)))
        return bd_project(ctx, out.u).coeffs

    return ContractionMap(bd_space(ctx), func, lipschitz_cert)


# ----------------------------------------------------------------------
# Realizations
# ----------------------------------------------------------------------


def _perp_projector(space: InnerSpace, relation: LinearRelation) -> np.ndarray:
    """Orthogonal projector onto the complement of the relation span,
    in the product Gram metric."""
    w = np.kron(np.eye(2), space.gram)
    k = relation.dim
    eye = np.eye(2 * space.dim)
    if k == 0:
        return eye
    basis = relation.basis.reshape(k, -1).T  # columns span M
    proj = basis @ np.linalg.solve(basis.T @ w @ basis, basis.T @ w)
    return eye - proj


def _relation_to_pair(space: InnerSpace, relation: LinearRelation) -> OperatorPair:
    """Closed-subspace description ``Su = Tv`` of a linear relation."""
    perp = _perp_projector(space, relation)
    d = space.dim
    s_mat = perp[:, :d]
    t_mat = -perp[:, d:]
    w = np.kron(np.eye(2), space.gram)
    return OperatorPair(space, s_mat, t_mat, codomain_norm=w)


def _relation_resolvent_matrix(space: InnerSpace, relation: LinearRelation) -> np.ndarray:
    """Matrix of ``(1 + M)^{-1}`` for a linear m-accretive relation."""
    k = relation.dim
    sums = (relation.basis[:, 0, :] + relation.basis[:, 1, :]).T  # dim x k
    if k != space.dim:
        raise np.linalg.LinAlgError("relation is not everywhere solvable")
    coeffs = np.linalg.solve(sums, np.eye(space.dim))
    return relation.basis[:, 0, :].T @ coeffs


@dataclass(eq=False)
class BlockRealization:
    """One restriction of the block operator, in up to four descriptions.

    Whichever description is supplied, the others are materialised
    through the equivalence formulas where they exist (``f`` only when
    the relation is m-accretive, ``pair`` only in the linear case). A
    construction-time sample check asserts the stored descriptions
    agree on membership.
    """

    ctx: DerivativeContext
    f: Optional[ContractionMap] = None
    relation: Optional[object] = None  # LinearRelation | CayleyRelation
    pair: Optional[OperatorPair] = None
    h: Optional[BlockMap] = None
    _perp_cache: Optional[np.ndarray] = None

    # -- constructors ---------------------------------------------------

    @classmethod
    def from_f(cls, ctx: DerivativeContext, f: ContractionMap) -> "BlockRealization":
        cayley = cayley_to_relation(f)
        relation = cayley.linear if cayley.linear is not None else cayley
        pair = None
        if cayley.linear is not None:
            pair = _relation_to_pair(bd_space(ctx), cayley.linear)
        real = cls(ctx, f=f, relation=relation, pair=pair, h=lift_f_to_h(ctx, f))
        real._consistency_check()
        return real

    @classmethod
    def from_relation(
        cls, ctx: DerivativeContext, relation: LinearRelation
    ) -> "BlockRealization":
        space = bd_space(ctx)
        pair = _relation_to_pair(space, relation)
        f = None
        h = None
        if is_m_accretive_linear(relation):
            resolvent = _relation_resolvent_matrix(space, relation)
            f = ContractionMap.from_matrix(space, 2.0 * resolvent - np.eye(2))
            h = lift_f_to_h(ctx, f)
        real = cls(ctx, f=f, relation=relation, pair=pair, h=h)
        real._consistency_check()
        return real

    @classmethod
    def from_st(
        cls, ctx: DerivativeContext, pair: OperatorPair
    ) -> "BlockRealization":
        from .relations import st_relation

        relation = st_relation(pair)
        f = None
        h = None
        if is_m_accretive_linear(relation):
            resolvent = _relation_resolvent_matrix(bd_space(ctx), relation)
            f = ContractionMap.from_matrix(
                bd_space(ctx), 2.0 * resolvent - np.eye(2)
            )
            h = lift_f_to_h(ctx, f)
        real = cls(ctx, f=f, relation=relation, pair=pair, h=h)
        real._consistency_check()
        return real

    @classmethod
    def from_h(
        cls, ctx: DerivativeContext, h: BlockMap, lipschitz_cert: float = 1.0
    ) -> "BlockRealization":
        return cls.from_f(ctx, reduce_h_to_f(ctx, h, lipschitz_cert))

    # -- membership -----------------------------------------------------

    @property
    def is_m_accretive(self) -> bool:
        if isinstance(self.relation, LinearRelation):
            return is_m_accretive_linear(self.relation)
        return self.f is not None

    def _memberships(self, state: BlockState, tol: float) -> dict:
        ctx = self.ctx
        x, y = boundary_data(ctx, state)
        u_bd = x + y
        dv_bd = x - y
        scale = 1.0 + u_bd.norm() + dv_bd.norm()
        out = {}
        if self.f is not None:
            defect = BDVector.from_coeffs(ctx, self.f(x.coeffs)) - y
            out["f"] = defect.norm() <= tol * scale
        if isinstance(self.relation, LinearRelation):
            vec = np.concatenate([u_bd.coeffs, dv_bd.coeffs])
            resid = self._perp_projector() @ vec
            w = _product_gram(ctx)
            out["relation"] = math.sqrt(max(resid @ w @ resid, 0.0)) <= tol * scale
        elif isinstance(self.relation, CayleyRelation):
            out["relation"] = self.relation.contains(u_bd.coeffs, dv_bd.coeffs, tol)
        if self.pair is not None:
            defect_y = self.pair.codomain_norm_of(
                self.pair.S @ u_bd.coeffs - self.pair.T @ dv_bd.coeffs
            )
            out["pair"] = defect_y <= tol * scale
        if self.h is not None:
            # h maps into ker(1+A), whose elements (w, -Gw) carry the
            # BD norm of w; the defect can be measured there.
            plus_part = BlockState(x.to_exppoly(), g_bd(x).to_exppoly())
            image = self.h(plus_part)
            z = bd_project(ctx, image.u)
            out["h"] = (z - y).norm() <= tol * scale
        return out

    def _perp_projector(self) -> np.ndarray:
        if self._perp_cache is None:
            self._perp_cache = _perp_projector(bd_space(self.ctx), self.relation)
        return self._perp_cache

    def domain_test(self, state: BlockState, tol: float = 1e-9) -> bool:
        views = self._memberships(state, tol)
        return next(iter(views.values()))

    def domain_test_all(self, state: BlockState, tol: float = 1e-9) -> dict:
        return self._memberships(state, tol)

    def _consistency_check(self, points: int = 20, tol: float = 1e-9) -> None:
        rng = np.random.default_rng(0)
        for _ in range(points):
            state = _random_state(rng)
            views = self._memberships(state, tol)
            if len(set(views.values())) > 1:
                raise ValueError(f"stored descriptions disagree: {views}")

    # -- resolvent --------------------------------------------------------

    def resolve(self, rhs: BlockState, tau: float) -> BlockState:
        return block_resolve(self, rhs, tau)


def _random_state(rng: np.random.Generator) -> BlockState:
    def poly() -> ExpPoly:
        terms = []
        for _ in range(rng.integers(1, 3)):
            mu = float(rng.integers(-2, 3))
            deg = int(rng.integers(0, 3))
            terms.append((mu, tuple(rng.uniform(-1.5, 1.5, size=deg + 1))))
        return ExpPoly(tuple(terms))

    return BlockState(poly(), poly())


def realization_domain_test(
    realization: BlockRealization, state: BlockState, tol: float = 1e-9
) -> bool:
    return realization.domain_test(state, tol)


def st_domain(
    ctx: DerivativeContext,
    pair: OperatorPair,
    state: BlockState,
    tol: float = 1e-9,
) -> bool:
    """Membership test ``S u_BD = T Dv_BD`` in the declared Y norm."""
    u_bd = bd_project(ctx, state.u)
    dv_bd = d_bd(bd_project(ctx, state.v))
    defect = pair.codomain_norm_of(pair.S @ u_bd.coeffs - pair.T @ dv_bd.coeffs)
    scale = 1.0 + u_bd.norm() + dv_bd.norm()
    return defect <= tol * scale


# ----------------------------------------------------------------------
# Resolvent
# ----------------------------------------------------------------------


def _poly_antiderivative(p) -> list:
    q = [0.0] * (len(p) + 1)
    for k in range(1, len(p) + 1):
        q[k] = p[k - 1] / k
    return q


def _poly_eval(p, t: float) -> float:
    acc = 0.0
    for c in reversed(p):
        acc = acc * t + c
    return acc


def _exp_antiderivative_coeffs(p, nu: float) -> list:
    """Coefficients ``q`` with ``(q e^{nu t})' = p e^{nu t}``, ``nu != 0``."""
    n = len(p)
    q = [0.0] * n
    for k in range(n - 1, -1, -1):
        acc = p[k]
        if k + 1 < n:
            acc -= (k + 1) * q[k + 1]
        q[k] = acc / nu
    return q


def _particular_second_order(w: ExpPoly, tau: float, ctx: DerivativeContext) -> ExpPoly:
    """One solution of ``u - tau^2 u'' = w``.

    Terms with ``|1 - (tau*mu)^2|`` bounded away from zero solve by a
    coefficient recursion on their own rate. Terms at or near the
    resonant rates ``+-1/tau`` are built from the bounded Green-kernel
    response

        (sigma/2) [ e^{-sigma t} int_a^t e^{sigma s} (.)
                  + e^{sigma t}  int_t^b e^{-sigma s} (.) ],

    with the small rate offset ``beta = mu -+ sigma`` absorbed as a
    machine-truncated Taylor polynomial. Every piece stays on the scale
    of the data and on the rates ``{mu, +-sigma}``, so residuals cancel
    within single terms; a coefficient-matching ansatz near resonance
    would instead amplify roundoff by ``|1-(tau*mu)^2|^-(deg+1)``, and a
    naive lift would produce large mutually-cancelling terms that
    corrupt long implicit-Euler trajectories.
    """
    sigma = 1.0 / tau
    tau2 = tau * tau
    t_scale = max(abs(ctx.a), abs(ctx.b))
    half = 0.5 * sigma
    out = []
    for mu, p in w.terms:
        c2 = 1.0 - (tau * mu) ** 2
        n = len(p)
        if abs(c2) > 0.1:
            q = [0.0] * n
            for k in range(n - 1, -1, -1):
                acc = p[k]
                if k + 1 < n:
                    acc += 2.0 * tau2 * mu * (k + 1) * q[k + 1]
                if k + 2 < n:
                    acc += tau2 * (k + 1) * (k + 2) * q[k + 2]
                q[k] = acc / c2
            out.append((mu, q))
            continue
        sign = 1.0 if mu > 0 else -1.0
        beta = mu - sign * sigma
        near = absorb_rate_shift(p, beta, t_scale)  # p times truncated e^{beta t}
        if sign < 0:
            # mu near -sigma: anchored integral from a on the low side
            p_poly = _poly_antiderivative(near)
            low_main = absorb_rate_shift(p_poly, -beta, t_scale)
            out.append((mu, [half * c for c in low_main]))
            out.append((-sigma, (-half * _poly_eval(p_poly, ctx.a),)))
            # high side: integrand rate mu - sigma is far from zero
            nu2 = mu - sigma
            q2 = _exp_antiderivative_coeffs(p, nu2)
            out.append((sigma, (half * _poly_eval(q2, ctx.b) * math.exp(nu2 * ctx.b),)))
            out.append((mu, [-half * c for c in q2]))
        else:
            # mu near +sigma: anchored integral from b on the high side
            p_poly = _poly_antiderivative(near)
            high_main = absorb_rate_shift(p_poly, -beta, t_scale)
            out.append((mu, [-half * c for c in high_main]))
            out.append((sigma, (half * _poly_eval(p_poly, ctx.b),)))
            nu2 = mu + sigma
            q2 = _exp_antiderivative_coeffs(p, nu2)
            out.append((mu, [half * c for c in q2]))
            out.append((-sigma, (-half * _poly_eval(q2, ctx.a) * math.exp(nu2 * ctx.a),)))
    return ExpPoly(tuple(out))


def _homogeneous_frames(ctx: DerivativeContext, tau: float):
    """BD data of the two homogeneous resolvent modes.

    The modes are ``(e^{t/tau}, -e^{t/tau})`` and
    ``(e^{-t/tau}, e^{-t/tau})``; returns their contributions to
    ``u_BD`` and ``Dv_BD`` as matrix columns.
    """
    sigma = 1.0 / tau
    w_plus = bd_project(ctx, ExpPoly.exponential(sigma)).coeffs
    w_minus = bd_project(ctx, ExpPoly.exponential(-sigma)).coeffs
    flip = np.array([1.0, -1.0])
    h_u = np.column_stack([w_plus, w_minus])
    h_dv = np.column_stack([-(flip * w_plus), flip * w_minus])
    return h_u, h_dv


def block_resolve(
    realization: BlockRealization, rhs: BlockState, tau: float
) -> BlockState:
    """Solve ``u + tau Dv = f1``, ``v + tau Gu = f2`` in the realization.

    Eliminating ``v`` gives ``u - tau^2 u'' = f1 - tau f2'``; the two
    homogeneous coefficients are pinned by the realization's boundary
    description: a direct linear solve when the description is linear,
    otherwise a damped fixed-point iteration with a Broyden fallback.
    """
    if tau <= 0.0:
        raise ValueError("tau must be positive")
    ctx = realization.ctx
    sigma = 1.0 / tau
    w = rhs.u - tau * differentiate(rhs.v)
    u_part = _particular_second_order(w, tau, ctx)
    v_part = rhs.v - tau * differentiate(u_part)

    h_u, h_dv = _homogeneous_frames(ctx, tau)
    u_bd0 = bd_project(ctx, u_part).coeffs
    dv_bd0 = d_bd(bd_project(ctx, v_part)).coeffs

    coeffs = _solve_boundary_coeffs(realization, u_bd0, dv_bd0, h_u, h_dv)

    mode_p = ExpPoly.exponential(sigma)
    mode_m = ExpPoly.exponential(-sigma)
    u = u_part + coeffs[0] * mode_p + coeffs[1] * mode_m
    v = rhs.v - tau * differentiate(u)
    result = BlockState(u, v)
    if not realization.domain_test(result, tol=1e-8):
        raise RootNotFound("block boundary solve converged to a non-member")
    return result


def _solve_boundary_coeffs(
    realization: BlockRealization,
    u_bd0: np.ndarray,
    dv_bd0: np.ndarray,
    h_u: np.ndarray,
    h_dv: np.ndarray,
) -> np.ndarray:
    ctx = realization.ctx
    space = bd_space(ctx)

    if isinstance(realization.relation, LinearRelation):
        # (u_BD, Dv_BD) in M: project the affine family onto M-perp.
        perp = realization._perp_projector()
        stacked = perp @ np.vstack([h_u, h_dv])
        target = -perp @ np.concatenate([u_bd0, dv_bd0])
        coeffs, *_ = np.linalg.lstsq(stacked, target, rcond=None)
        resid = float(np.linalg.norm(stacked @ coeffs - target))
        scale = 1.0 + float(np.linalg.norm(target))
        if resid > 1e-8 * scale:
            raise RootNotFound(
                "resolvent equation is singular for this realization and tau"
            )
        return coeffs

    f = realization.f
    if f is None:
        raise RootNotFound("realization carries no usable boundary description")

    # f-form: f(x_p + L C) = y_p + N C with x, y the deficiency data.
    l_mat = 0.5 * (h_u + h_dv)
    n_mat = 0.5 * (h_u - h_dv)
    x_p = 0.5 * (u_bd0 + dv_bd0)
    y_p = 0.5 * (u_bd0 - dv_bd0)
    n_inv = np.linalg.inv(n_mat)

    if f.is_affine:
        lhs = n_mat - f.matrix @ l_mat
        rhs_vec = f(x_p) - y_p
        try:
            return np.linalg.solve(lhs, rhs_vec)
        except np.linalg.LinAlgError as exc:
            raise RootNotFound("affine boundary system is singular") from exc

    # Nonlinear: iterate on x = x_p + L N^{-1} (f(x) - y_p).
    comp = l_mat @ n_inv
    damping = 0.5 if f.lipschitz_cert * operator_norm(space, comp) > 0.95 else 1.0

    def step(x: np.ndarray) -> np.ndarray:
        return x_p + comp @ (f(x) - y_p)

    x = x_p.copy()
    best = None
    for _ in range(200):
        nxt = step(x)
        gap = space.norm(nxt - x)
        scale = 1.0 + space.norm(nxt)
        if gap <= 1e-12 * scale:
            return n_inv @ (f(nxt) - y_p)
        if best is None or gap < best:
            best = gap
        x = x + damping * (nxt - x)

    # Broyden fallback on F(C) = f(x(C)) - y(C).
    def residual(c: np.ndarray) -> np.ndarray:
        return f(x_p + l_mat @ c) - (y_p + n_mat @ c)

    c = n_inv @ (f(x) - y_p)
    jac = np.zeros((2, 2))
    eps = 1e-7
    base = residual(c)
    for j in range(2):
        bump = c.copy()
        bump[j] += eps
        jac[:, j] = (residual(bump) - base) / eps
    for _ in range(300):
        if np.linalg.norm(base) <= 1e-12 * (1.0 + np.linalg.norm(c)):
            return c
        try:
            delta = np.linalg.solve(jac, -base)
        except np.linalg.LinAlgError as exc:
            raise RootNotFound("boundary Jacobian became singular") from exc
        c = c + delta
        new = residual(c)
        denom = float(delta @ delta)
        if denom > 0.0:
            jac += np.outer(new - base, delta) / denom
        base = new
    raise RootNotFound("block boundary solve did not converge in 500 iterations")

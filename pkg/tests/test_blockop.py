import math

import numpy as np
import pytest

from maccretive.blockop import (
    BDVector,
    BlockRealization,
    BlockState,
    apply_block,
    bd_project,
    bd_space,
    block_resolve,
    d_bd,
    g_bd,
    lift_f_to_h,
    pi1_block,
    pi_minus1_block,
    realization_domain_test,
    reduce_h_to_f,
    st_domain,
    state_graph_inner,
    state_l2_norm,
)
from maccretive.derivative import DerivativeContext
from maccretive.funcspace import ExpPoly, Interval, differentiate, l2_norm
from maccretive.relations import (
    ContractionMap,
    LinearRelation,
    OperatorPair,
    cayley_to_relation,
    relation_to_cayley,
    st_criterion,
)

E = math.e
CTX = DerivativeContext(Interval(0.0, 1.0))
UNIT = CTX.interval
SPACE = bd_space(CTX)


def identity_relation() -> LinearRelation:
    basis = [np.stack([e, e]) for e in np.eye(2)]
    return LinearRelation(SPACE, np.array(basis))


def random_state(rng: np.random.Generator) -> BlockState:
    def poly():
        terms = []
        for _ in range(rng.integers(1, 3)):
            mu = float(rng.integers(-2, 3))
            deg = int(rng.integers(0, 3))
            terms.append((mu, tuple(rng.uniform(-1.5, 1.5, size=deg + 1))))
        return ExpPoly(tuple(terms))

    return BlockState(poly(), poly())


def random_contraction(rng: np.random.Generator, shrink: float = 0.95) -> ContractionMap:
    raw = rng.standard_normal((2, 2))
    from maccretive.relations import operator_norm

    norm = operator_norm(SPACE, raw)
    return ContractionMap.from_matrix(SPACE, raw / norm * shrink * rng.uniform(0.1, 1.0))


# ----------------------------------------------------------------------
# BD space
# ----------------------------------------------------------------------


def test_bd_project_kernel_and_constant():
    assert bd_project(CTX, ExpPoly.exponential(1.0)).coeffs == pytest.approx([1.0, 0.0], abs=1e-13)
    proj = bd_project(CTX, ExpPoly.constant(1.0))
    assert proj.cp == pytest.approx(1.0 / (E + 1.0), abs=1e-12)
    assert proj.cm == pytest.approx(E / (E + 1.0), abs=1e-12)


def test_bd_project_residual_vanishes_at_endpoints():
    u = ExpPoly(((2.0, (1.0, -0.5)), (0.0, (0.7, 0.2, 0.1))))
    res = u - bd_project(CTX, u).to_exppoly()
    assert abs(res(0.0)) <= 1e-12
    assert abs(res(1.0)) <= 1e-12


def test_bd_project_of_endpoint_free_function_is_zero():
    u = ExpPoly.polynomial([0.0, 1.0]) * (ExpPoly.constant(1.0) - ExpPoly.polynomial([0.0, 1.0]))
    proj = bd_project(CTX, u)
    assert proj.coeffs == pytest.approx([0.0, 0.0], abs=1e-13)


def test_bd_vector_norm_is_diagonal():
    rng = np.random.default_rng(0)
    for _ in range(10):
        cp, cm = rng.uniform(-2, 2, size=2)
        w = BDVector(CTX, cp, cm)
        expected = math.sqrt(cp**2 * CTX.denom_plus + cm**2 * CTX.denom_minus)
        assert w.norm() == pytest.approx(expected, rel=1e-14)
        # matches the H1 norm of the function it represents
        from maccretive.funcspace import graph_norm

        assert w.norm() == pytest.approx(graph_norm(w.to_exppoly(), UNIT), rel=1e-12)


def test_g_bd_and_d_bd():
    x = BDVector(CTX, 1.0, 0.0)
    assert g_bd(x).coeffs == pytest.approx([1.0, 0.0])
    y = BDVector(CTX, 0.0, 1.0)
    assert g_bd(y).coeffs == pytest.approx([0.0, -1.0])
    rng = np.random.default_rng(1)
    for _ in range(10):
        w = BDVector(CTX, *rng.uniform(-2, 2, size=2))
        assert d_bd(g_bd(w)).coeffs == pytest.approx(w.coeffs, rel=1e-15)
        assert g_bd(w).norm() == pytest.approx(w.norm(), rel=1e-12)
    # g_bd really is differentiation of the represented function
    w = BDVector(CTX, 0.3, -1.2)
    assert l2_norm(g_bd(w).to_exppoly() - differentiate(w.to_exppoly()), UNIT) <= 1e-14


# ----------------------------------------------------------------------
# block projections
# ----------------------------------------------------------------------


def test_pi1_fixes_plus_kernel_pairs():
    s = BlockState(ExpPoly.exponential(1.0), ExpPoly.exponential(1.0))
    p1 = pi1_block(CTX, s)
    pm = pi_minus1_block(CTX, s)
    assert state_l2_norm(p1 - s, UNIT) <= 1e-12
    assert state_l2_norm(pm, UNIT) <= 1e-12

    s2 = BlockState(ExpPoly.exponential(-1.0), -1.0 * ExpPoly.exponential(-1.0))
    assert state_l2_norm(pi1_block(CTX, s2) - s2, UNIT) <= 1e-12
    assert state_l2_norm(pi_minus1_block(CTX, s2), UNIT) <= 1e-12


def test_projections_vanish_without_boundary_data():
    bump = ExpPoly.polynomial([0.0, 1.0]) * (
        ExpPoly.constant(1.0) - ExpPoly.polynomial([0.0, 1.0])
    )
    s = BlockState(bump, 2.0 * bump)
    assert state_l2_norm(pi1_block(CTX, s), UNIT) <= 1e-12
    assert state_l2_norm(pi_minus1_block(CTX, s), UNIT) <= 1e-12


def test_pi1_output_in_plus_kernel():
    rng = np.random.default_rng(2)
    for _ in range(20):
        s = random_state(rng)
        p1 = pi1_block(CTX, s)
        # second component is the derivative of the first
        assert l2_norm(p1.v - differentiate(p1.u), UNIT) <= 1e-11
        pm = pi_minus1_block(CTX, s)
        assert l2_norm(pm.v + differentiate(pm.u), UNIT) <= 1e-11


def test_block_inner_product_identity():
    rng = np.random.default_rng(3)
    for _ in range(100):
        s = random_state(rng)
        lhs = state_l2_inner_apply(s)
        p1 = pi1_block(CTX, s)
        pm = pi_minus1_block(CTX, s)
        rhs = state_l2_norm(p1, UNIT) ** 2 - state_l2_norm(pm, UNIT) ** 2
        assert abs(lhs - rhs) <= 1e-10 * (1.0 + abs(lhs))


def state_l2_inner_apply(s: BlockState) -> float:
    from maccretive.blockop import state_l2_inner

    return state_l2_inner(apply_block(s), s, UNIT)


def test_block_projections_graph_orthogonal():
    rng = np.random.default_rng(4)
    for _ in range(50):
        s = random_state(rng)
        p1 = pi1_block(CTX, s)
        pm = pi_minus1_block(CTX, s)
        p0 = s - p1 - pm
        scale = 1.0 + state_graph_inner(s, s, UNIT)
        assert abs(state_graph_inner(p1, pm, UNIT)) <= 1e-10 * scale
        assert abs(state_graph_inner(p0, p1, UNIT)) <= 1e-10 * scale
        assert abs(state_graph_inner(p0, pm, UNIT)) <= 1e-10 * scale


# ----------------------------------------------------------------------
# h <-> f
# ----------------------------------------------------------------------


def test_reduce_lift_roundtrip():
    rng = np.random.default_rng(5)
    f = random_contraction(rng)
    h = lift_f_to_h(CTX, f)
    back = reduce_h_to_f(CTX, h, f.lipschitz_cert)
    for _ in range(20):
        x = rng.uniform(-2, 2, size=2)
        assert back(x) == pytest.approx(f(x), abs=1e-12)


def test_lift_zero_and_identity():
    zero = ContractionMap.zero(SPACE)
    h0 = lift_f_to_h(CTX, zero)
    s = BlockState(ExpPoly.exponential(1.0), ExpPoly.exponential(1.0))
    assert state_l2_norm(h0(s), UNIT) <= 1e-13
    ident = ContractionMap.identity(SPACE)
    h1 = lift_f_to_h(CTX, ident)
    out = h1(s)
    assert l2_norm(out.u - s.u, UNIT) <= 1e-12
    assert l2_norm(out.v + differentiate(s.u), UNIT) <= 1e-12


def test_lipschitz_seminorm_transfer():
    # |h|_Lip in the product L2 norm equals |f|_Lip in the BD norm
    rng = np.random.default_rng(6)
    f = random_contraction(rng)
    h = lift_f_to_h(CTX, f)
    worst = 0.0
    for _ in range(1000):
        w1 = BDVector(CTX, *rng.uniform(-2, 2, size=2))
        w2 = BDVector(CTX, *rng.uniform(-2, 2, size=2))
        s1 = BlockState(w1.to_exppoly(), differentiate(w1.to_exppoly()))
        s2 = BlockState(w2.to_exppoly(), differentiate(w2.to_exppoly()))
        num = state_l2_norm(h(s1) - h(s2), UNIT)
        den = state_l2_norm(s1 - s2, UNIT)
        if den > 1e-9:
            worst = max(worst, num / den)
        # the domain norm identity behind the transfer
        assert den == pytest.approx(SPACE.norm(w1.coeffs - w2.coeffs), rel=1e-9)
    from maccretive.relations import operator_norm

    assert worst <= operator_norm(SPACE, f.matrix) + 1e-9


# ----------------------------------------------------------------------
# realizations: trivial boundary conditions
# ----------------------------------------------------------------------


def test_dirichlet_from_negated_identity():
    real = BlockRealization.from_f(CTX, ContractionMap.identity(SPACE, scale=-1.0))
    bump = ExpPoly.polynomial([0.0, 1.0]) * (
        ExpPoly.constant(1.0) - ExpPoly.polynomial([0.0, 1.0])
    )
    assert realization_domain_test(real, BlockState(bump, ExpPoly.exponential(2.0)))
    assert not realization_domain_test(
        real, BlockState(ExpPoly.constant(1.0), ExpPoly.exponential(2.0))
    )


def test_neumann_from_identity():
    real = BlockRealization.from_f(CTX, ContractionMap.identity(SPACE))
    bump = ExpPoly.polynomial([0.0, 1.0]) * (
        ExpPoly.constant(1.0) - ExpPoly.polynomial([0.0, 1.0])
    )
    assert realization_domain_test(real, BlockState(ExpPoly.constant(1.0), bump))
    assert not realization_domain_test(
        real, BlockState(ExpPoly.constant(1.0), ExpPoly.exponential(2.0))
    )


def test_zero_f_membership_example():
    real = BlockRealization.from_f(CTX, ContractionMap.zero(SPACE))
    s = BlockState(ExpPoly.exponential(1.0), ExpPoly.exponential(1.0))
    assert realization_domain_test(real, s)


def test_four_descriptions_agree():
    rng = np.random.default_rng(7)
    for _ in range(10):
        real = BlockRealization.from_f(CTX, random_contraction(rng))
        assert real.pair is not None and real.relation is not None
        for _ in range(20):
            s = random_state(rng)
            views = real.domain_test_all(s)
            assert set(views) == {"f", "relation", "pair", "h"}
            assert len(set(views.values())) == 1
        member = block_resolve(real, random_state(rng), 0.8)
        views = real.domain_test_all(member, tol=1e-7)
        assert all(views.values())


def test_cayley_coherence_f_to_relation_to_f():
    rng = np.random.default_rng(8)
    for _ in range(10):
        f = random_contraction(rng)
        rel = cayley_to_relation(f)
        back = relation_to_cayley(SPACE, rel.resolvent)
        for _ in range(100):
            x = rng.uniform(-3, 3, size=2)
            assert SPACE.norm(back(x) - f(x)) <= 1e-9 * (1.0 + SPACE.norm(x))


# ----------------------------------------------------------------------
# block resolvent
# ----------------------------------------------------------------------


def test_block_resolve_worked_example_plus_mode():
    real = BlockRealization.from_relation(CTX, identity_relation())
    rhs = BlockState(ExpPoly.exponential(1.0), ExpPoly.exponential(1.0))
    out = block_resolve(real, rhs, 1.0)
    expected = BlockState(
        ExpPoly.exponential(1.0, 0.5), ExpPoly.exponential(1.0, 0.5)
    )
    assert state_l2_norm(out - expected, UNIT) <= 1e-10


def test_block_resolve_worked_example_minus_mode():
    real = BlockRealization.from_relation(CTX, identity_relation())
    rhs = BlockState(ExpPoly.exponential(-1.0), -1.0 * ExpPoly.exponential(-1.0))
    out = block_resolve(real, rhs, 1.0)
    expected = BlockState(
        ExpPoly.exponential(-1.0, 0.5), ExpPoly.exponential(-1.0, -0.5)
    )
    assert state_l2_norm(out - expected, UNIT) <= 1e-10


def test_block_resolve_zero_rhs():
    real = BlockRealization.from_f(CTX, ContractionMap.zero(SPACE))
    out = block_resolve(real, BlockState.zero(), 0.7)
    assert state_l2_norm(out, UNIT) <= 1e-12


def test_block_resolve_residuals_and_membership():
    rng = np.random.default_rng(9)
    for _ in range(8):
        real = BlockRealization.from_f(CTX, random_contraction(rng))
        rhs = random_state(rng)
        tau = float(rng.uniform(0.2, 2.0))
        out = block_resolve(real, rhs, tau)
        res1 = out.u + tau * differentiate(out.v) - rhs.u
        res2 = out.v + tau * differentiate(out.u) - rhs.v
        scale = 1.0 + state_l2_norm(rhs, UNIT)
        assert l2_norm(res1, UNIT) <= 1e-9 * scale
        assert l2_norm(res2, UNIT) <= 1e-9 * scale
        assert realization_domain_test(real, out, tol=1e-7)


def test_block_resolve_resonant_rhs():
    real = BlockRealization.from_relation(CTX, identity_relation())
    tau = 0.5
    rhs = BlockState(ExpPoly.exponential(2.0), ExpPoly.exponential(-2.0))
    out = block_resolve(real, rhs, tau)  # rhs rates hit 1/tau exactly
    res1 = out.u + tau * differentiate(out.v) - rhs.u
    res2 = out.v + tau * differentiate(out.u) - rhs.v
    assert l2_norm(res1, UNIT) <= 1e-10
    assert l2_norm(res2, UNIT) <= 1e-10


def test_block_resolvent_contraction():
    rng = np.random.default_rng(10)
    real = BlockRealization.from_f(CTX, random_contraction(rng))
    for tau in (0.4, 1.0, 1.7):
        for _ in range(10):
            r1, r2 = random_state(rng), random_state(rng)
            u1 = block_resolve(real, r1, tau)
            u2 = block_resolve(real, r2, tau)
            assert (
                state_l2_norm(u1 - u2, UNIT)
                <= state_l2_norm(r1 - r2, UNIT) + 1e-9
            )


def test_block_resolve_nonlinear_f():
    def squash(z):
        return 0.7 * np.tanh(z)

    f = ContractionMap(SPACE, squash, lipschitz_cert=0.7)
    real = BlockRealization.from_f(CTX, f)
    rng = np.random.default_rng(11)
    for _ in range(5):
        rhs = random_state(rng)
        tau = float(rng.uniform(0.3, 1.5))
        out = block_resolve(real, rhs, tau)
        res1 = out.u + tau * differentiate(out.v) - rhs.u
        res2 = out.v + tau * differentiate(out.u) - rhs.v
        assert l2_norm(res1, UNIT) <= 1e-9 * (1 + state_l2_norm(rhs, UNIT))
        assert l2_norm(res2, UNIT) <= 1e-9 * (1 + state_l2_norm(rhs, UNIT))
        assert realization_domain_test(real, out, tol=1e-7)


# ----------------------------------------------------------------------
# (S, T) descriptions
# ----------------------------------------------------------------------


def test_st_domain_dirichlet_neumann():
    dirichlet = OperatorPair(SPACE, np.eye(2), np.zeros((2, 2)))
    neumann = OperatorPair(SPACE, np.zeros((2, 2)), np.eye(2))
    bump = ExpPoly.polynomial([0.0, 1.0]) * (
        ExpPoly.constant(1.0) - ExpPoly.polynomial([0.0, 1.0])
    )
    s_dir = BlockState(bump, ExpPoly.exponential(2.0))
    s_neu = BlockState(ExpPoly.exponential(2.0), bump)
    assert st_domain(CTX, dirichlet, s_dir)
    assert not st_domain(CTX, dirichlet, s_neu)
    assert st_domain(CTX, neumann, s_neu)
    assert not st_domain(CTX, neumann, s_dir)


def test_st_criterion_predicts_solvability_and_accretivity():
    rng = np.random.default_rng(12)
    checked_good = checked_bad = 0
    for _ in range(40):
        pair = OperatorPair(
            SPACE,
            rng.standard_normal((2, 2)),
            rng.standard_normal((2, 2)),
            codomain_norm="euclidean",
        )
        report = st_criterion(pair)
        real = BlockRealization.from_st(CTX, pair)
        assert real.is_m_accretive == report.holds
        if report.holds:
            checked_good += 1
            members = []
            for _ in range(5):
                out = block_resolve(real, random_state(rng), 0.9)
                members.append(out)
            # sampled accretivity among members
            for i in range(len(members)):
                for j in range(i + 1, len(members)):
                    diff = members[i] - members[j]
                    pairing = state_l2_inner_apply_pair(diff)
                    assert pairing >= -1e-8 * (1 + state_l2_norm(diff, UNIT) ** 2)
        else:
            checked_bad += 1
    assert checked_good > 0 and checked_bad > 0


def state_l2_inner_apply_pair(diff: BlockState) -> float:
    from maccretive.blockop import state_l2_inner

    return state_l2_inner(apply_block(diff), diff, UNIT)

"""Batch verification entry point.

Reads a JSON run specification, executes the named suite, and writes
``report.json`` (and ``data.csv`` where the suite produces rows) into
the output directory. Reports are deterministic: keys are sorted,
floats are printed with 17 significant digits, and all randomness is
driven by the seed in the spec, so identical specs produce
byte-identical reports.

Exit codes: 0 all verdicts pass, 1 a verdict failed (the report names
the first failing check), 2 the spec or its inputs do not parse.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .blockop import (
    BlockRealization,
    BlockState,
    apply_block,
    bd_space,
    block_resolve,
    state_l2_inner,
    state_l2_norm,
)
from .derivative import (
    DerivativeContext,
    Realization1D,
    boundary_function_from_jsonable,
    check_lipschitz_transfer,
    in_domain,
    pi_minus_coeff,
    pi_plus_coeff,
    pi_zero,
    resolve,
)
from .errors import RootNotFound, SchemaError
from .evolution import SchemeConfig, evolve, trajectory_postprocessor
from .funcspace import (
    ExpPoly,
    Interval,
    differentiate,
    graph_inner,
    graph_norm,
    l2_inner,
    l2_norm,
)
from .impedance1d import (
    ImpedanceK,
    impedance_realization,
    is_K_accretive,
)
from .relations import (
    ContractionMap,
    InnerSpace,
    LinearRelation,
    OperatorPair,
    cayley_to_relation,
    is_m_accretive_linear,
    relation_to_cayley,
    st_criterion,
    st_relation,
)

COMMANDS = (
    "check-decomposition",
    "lipschitz-transfer",
    "resolve",
    "cayley",
    "st-criterion",
    "block-equivalence",
    "wave-impedance",
    "evolve",
)

_RUNSPEC_KEYS = {"command", "seed", "tol", "params", "input"}


@dataclass
class RunSpec:
    """Parsed run request: command, seed, tolerance override, parameters."""

    command: str
    seed: int = 42
    tol: Optional[float] = None
    params: dict = field(default_factory=dict)

    @classmethod
    def from_jsonable(cls, data: dict, base_dir: Path) -> "RunSpec":
        if not isinstance(data, dict):
            raise SchemaError("run spec must be a JSON object")
        unknown = set(data) - _RUNSPEC_KEYS
        if unknown:
            raise SchemaError(f"unknown run spec fields: {sorted(unknown)}")
        command = data.get("command")
        if command not in COMMANDS:
            raise SchemaError(f"unknown command: {command!r}")
        params = dict(data.get("params", {}))
        if "input" in data:
            path = base_dir / str(data["input"])
            try:
                loaded = json.loads(path.read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise SchemaError(f"cannot read input file {path}: {exc}") from exc
            if not isinstance(loaded, dict):
                raise SchemaError("input file must hold a JSON object")
            params = {**loaded, **params}
        seed = data.get("seed", 42)
        if not isinstance(seed, int) or isinstance(seed, bool):
            raise SchemaError("seed must be an integer")
        tol = data.get("tol")
        if tol is not None:
            tol = float(tol)
        return cls(command=str(command), seed=seed, tol=tol, params=params)


# ----------------------------------------------------------------------
# deterministic serialisation
# ----------------------------------------------------------------------


def _format_float(x: float) -> str:
    if math.isnan(x):
        return "null"
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return format(float(x), ".17g")


def _serialise(value, out: list) -> None:
    if value is None:
        out.append("null")
    elif isinstance(value, bool):
        out.append("true" if value else "false")
    elif isinstance(value, (int, np.integer)):
        out.append(str(int(value)))
    elif isinstance(value, (float, np.floating)):
        out.append(_format_float(float(value)))
    elif isinstance(value, str):
        out.append(json.dumps(value))
    elif isinstance(value, dict):
        out.append("{")
        for i, key in enumerate(sorted(value)):
            if i:
                out.append(",")
            out.append(json.dumps(str(key)))
            out.append(":")
            _serialise(value[key], out)
        out.append("}")
    elif isinstance(value, (list, tuple, np.ndarray)):
        seq = value.tolist() if isinstance(value, np.ndarray) else value
        out.append("[")
        for i, item in enumerate(seq):
            if i:
                out.append(",")
            _serialise(item, out)
        out.append("]")
    else:
        raise TypeError(f"cannot serialise {type(value)!r}")


def render_report(report: dict) -> str:
    out: list = []
    _serialise(report, out)
    return "".join(out) + "\n"


def write_csv(path: Path, header: list, rows: list) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(
            ",".join(
                _format_float(x) if isinstance(x, float) else str(x) for x in row
            )
        )
    path.write_text("\n".join(lines) + "\n")


# ----------------------------------------------------------------------
# shared input parsing
# ----------------------------------------------------------------------


def _require_keys(params: dict, allowed: set, command: str) -> None:
    unknown = set(params) - allowed
    if unknown:
        raise SchemaError(f"{command}: unknown parameters {sorted(unknown)}")


def _interval(params: dict) -> Interval:
    data = params.get("interval", {"a": 0.0, "b": 1.0})
    try:
        return Interval.from_jsonable(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"bad interval: {exc}") from exc


def _exppoly(data, name: str) -> ExpPoly:
    try:
        return ExpPoly.from_jsonable(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"bad {name}: {exc}") from exc


def _matrix(data, name: str, shape=None) -> np.ndarray:
    try:
        m = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"bad {name}: {exc}") from exc
    if shape is not None and m.shape != shape:
        raise SchemaError(f"bad {name}: expected shape {shape}, got {m.shape}")
    return m


def _random_exppoly(rng: np.random.Generator, max_degree: int = 4) -> ExpPoly:
    terms = []
    for _ in range(rng.integers(1, 4)):
        mu = float(rng.integers(-2, 3))
        deg = int(rng.integers(0, max_degree + 1))
        terms.append((mu, tuple(rng.uniform(-2.0, 2.0, size=deg + 1))))
    return ExpPoly(tuple(terms))


def _random_block_state(rng: np.random.Generator) -> BlockState:
    return BlockState(_random_exppoly(rng, 2), _random_exppoly(rng, 2))


def _block_realization(ctx: DerivativeContext, data: dict) -> BlockRealization:
    kind = data.get("kind")
    space = bd_space(ctx)
    if kind == "f":
        matrix = _matrix(data["matrix"], "f matrix", (2, 2))
        return BlockRealization.from_f(ctx, ContractionMap.from_matrix(space, matrix))
    if kind == "M":
        matrix = _matrix(data["matrix"], "relation matrix", (2, 2))
        basis = np.array([np.stack([e, matrix @ e]) for e in np.eye(2)])
        return BlockRealization.from_relation(ctx, LinearRelation(space, basis))
    if kind == "ST":
        s_mat = _matrix(data["S"], "S", (2, 2))
        t_mat = _matrix(data["T"], "T", (2, 2))
        return BlockRealization.from_st(ctx, OperatorPair(space, s_mat, t_mat))
    raise SchemaError(f"unknown block realization kind: {kind!r}")


# ----------------------------------------------------------------------
# suites
# ----------------------------------------------------------------------


def _suite_check_decomposition(spec: RunSpec):
    _require_keys(spec.params, {"interval", "samples", "max_degree"}, spec.command)
    iv = _interval(spec.params)
    samples = int(spec.params.get("samples", 500))
    max_degree = int(spec.params.get("max_degree", 4))
    tol = spec.tol if spec.tol is not None else 1e-10
    ctx = DerivativeContext(iv)
    rng = np.random.default_rng(spec.seed)
    ep = ExpPoly.exponential(1.0)
    em = ExpPoly.exponential(-1.0)
    gram_pp = graph_inner(ep, ep, iv)
    gram_mm = graph_inner(em, em, iv)

    max_recon = max_ortho = max_identity = max_oracle = 0.0
    for _ in range(samples):
        u = _random_exppoly(rng, max_degree)
        c1 = pi_plus_coeff(ctx, u)
        cm = pi_minus_coeff(ctx, u)
        p0 = pi_zero(ctx, u)
        scale = 1.0 + graph_norm(u, iv)
        recon = graph_norm(p0 + c1 * ep + cm * em - u, iv)
        max_recon = max(max_recon, recon / scale)
        sq = scale**2
        max_ortho = max(
            max_ortho,
            abs(graph_inner(p0, ep, iv) * c1) / sq,
            abs(graph_inner(p0, em, iv) * cm) / sq,
            abs(graph_inner(c1 * ep, cm * em, iv)) / sq,
        )
        lhs = l2_inner(differentiate(u), u, iv)
        mid = c1**2 * ctx.denom_plus / 2.0 - cm**2 * ctx.denom_minus / 2.0
        rhs = (u(iv.b) ** 2 - u(iv.a) ** 2) / 2.0
        max_identity = max(
            max_identity, abs(lhs - mid) / (1 + abs(rhs)), abs(lhs - rhs) / (1 + abs(rhs))
        )
        # independent Gram-projection oracle
        oracle_p = graph_inner(u, ep, iv) / gram_pp
        oracle_m = graph_inner(u, em, iv) / gram_mm
        max_oracle = max(
            max_oracle,
            abs(c1 - oracle_p) / (1 + abs(c1)),
            abs(cm - oracle_m) / (1 + abs(cm)),
        )

    checks = {
        "reconstruction_defect": max_recon,
        "orthogonality_defect": max_ortho,
        "inner_product_identity_defect": max_identity,
        "projection_oracle_defect": max_oracle,
    }
    failures = [name for name, value in checks.items() if value >= tol]
    report = {
        "command": spec.command,
        "seed": spec.seed,
        "interval": iv.to_jsonable(),
        "samples": samples,
        "tolerances": {"defect": tol},
        "checks": checks,
        "passed": not failures,
        "first_failure": failures[0] if failures else None,
    }
    return report, None


def _suite_lipschitz_transfer(spec: RunSpec):
    _require_keys(spec.params, {"interval", "g", "samples"}, spec.command)
    iv = _interval(spec.params)
    ctx = DerivativeContext(iv)
    if "g" not in spec.params:
        raise SchemaError("lipschitz-transfer: missing boundary function 'g'")
    g = boundary_function_from_jsonable(spec.params["g"])
    samples = int(spec.params.get("samples", 64))
    tol = spec.tol if spec.tol is not None else 1e-11
    rng = np.random.default_rng(spec.seed)
    pairs = [tuple(rng.uniform(-3.0, 3.0, size=2)) for _ in range(samples)]
    report_data = check_lipschitz_transfer(ctx, g, pairs, tol=tol)
    failures = []
    if report_data.max_identity_defect >= tol:
        failures.append("distance_identities")
    if not report_data.equivalence_ok:
        failures.append("equivalence")
    if not report_data.bound_holds:
        failures.append("bound_holds")
    report = {
        "command": spec.command,
        "seed": spec.seed,
        "interval": iv.to_jsonable(),
        "g": g.descriptor,
        "lipschitz_cert": g.lipschitz_cert,
        "admissible_bound": ctx.lipschitz_bound,
        "tolerances": {"identity": tol},
        "result": report_data.to_jsonable(),
        "passed": not failures,
        "first_failure": failures[0] if failures else None,
    }
    rows = [
        (i, r.c, r.d, r.x_dist, r.h_dist, r.g_gap, r.bound_rhs)
        for i, r in enumerate(report_data.samples)
    ]
    return report, (["index", "c", "d", "x_dist", "h_dist", "g_gap", "bound_rhs"], rows)


def _suite_resolve(spec: RunSpec):
    _require_keys(spec.params, {"interval", "g", "rhs", "tau"}, spec.command)
    iv = _interval(spec.params)
    ctx = DerivativeContext(iv)
    if "g" not in spec.params or "rhs" not in spec.params:
        raise SchemaError("resolve: needs 'g' and 'rhs'")
    g = boundary_function_from_jsonable(spec.params["g"])
    rhs = _exppoly(spec.params["rhs"], "rhs")
    tau = float(spec.params.get("tau", 1.0))
    tol = spec.tol if spec.tol is not None else 1e-9
    realization = Realization1D(ctx, g)
    failures = []
    solution = residual = None
    try:
        solution = resolve(realization, rhs, tau)
        residual = l2_norm(solution + tau * differentiate(solution) - rhs, iv)
        if residual >= tol * (1 + l2_norm(rhs, iv)):
            failures.append("residual")
        if not in_domain(realization, solution, tol):
            failures.append("membership")
    except RootNotFound:
        failures.append("solvable")
    report = {
        "command": spec.command,
        "seed": spec.seed,
        "interval": iv.to_jsonable(),
        "g": g.descriptor,
        "tau": tau,
        "tolerances": {"residual": tol},
        "solution": None if solution is None else solution.to_jsonable(),
        "residual_norm": residual,
        "passed": not failures,
        "first_failure": failures[0] if failures else None,
    }
    return report, None


def _suite_cayley(spec: RunSpec):
    _require_keys(spec.params, {"dim", "gram", "f_matrix", "points"}, spec.command)
    dim = int(spec.params.get("dim", 2))
    gram = (
        _matrix(spec.params["gram"], "gram", (dim, dim))
        if "gram" in spec.params
        else np.eye(dim)
    )
    try:
        space = InnerSpace(dim, gram)
    except ValueError as exc:
        raise SchemaError(f"bad gram: {exc}") from exc
    points = int(spec.params.get("points", 100))
    tol = spec.tol if spec.tol is not None else 1e-9
    rng = np.random.default_rng(spec.seed)
    if "f_matrix" in spec.params:
        matrix = _matrix(spec.params["f_matrix"], "f_matrix", (dim, dim))
        try:
            f = ContractionMap.from_matrix(space, matrix)
        except ValueError as exc:
            raise SchemaError(f"f_matrix is not a contraction: {exc}") from exc
    else:
        raw = rng.standard_normal((dim, dim))
        from .relations import operator_norm

        f = ContractionMap.from_matrix(space, 0.9 * raw / operator_norm(space, raw))
    relation = cayley_to_relation(f)
    back = relation_to_cayley(space, relation.resolvent)
    worst = 0.0
    accretive_ok = True
    for _ in range(points):
        x = space.random_vectors(rng, 1)[0]
        worst = max(worst, space.norm(back(x) - f(x)) / (1 + space.norm(x)))
        z1, z2 = space.random_vectors(rng, 2)
        u1, u2 = relation.resolvent(z1), relation.resolvent(z2)
        pairing = space.inner(u1 - u2, (z1 - u1) - (z2 - u2))
        if pairing < -tol * (1 + space.norm(z1) + space.norm(z2)) ** 2:
            accretive_ok = False
    failures = []
    if worst >= tol:
        failures.append("roundtrip")
    if not accretive_ok:
        failures.append("accretivity")
    report = {
        "command": spec.command,
        "seed": spec.seed,
        "dim": dim,
        "points": points,
        "tolerances": {"roundtrip": tol},
        "roundtrip_max_error": worst,
        "accretive_sampled": accretive_ok,
        "passed": not failures,
        "first_failure": failures[0] if failures else None,
    }
    return report, None


def _suite_st_criterion(spec: RunSpec):
    _require_keys(spec.params, {"dim", "gram", "S", "T"}, spec.command)
    dim = int(spec.params.get("dim", 2))
    gram = (
        _matrix(spec.params["gram"], "gram", (dim, dim))
        if "gram" in spec.params
        else np.eye(dim)
    )
    if "S" not in spec.params or "T" not in spec.params:
        raise SchemaError("st-criterion: needs 'S' and 'T'")
    s_mat = _matrix(spec.params["S"], "S")
    t_mat = _matrix(spec.params["T"], "T")
    try:
        space = InnerSpace(dim, gram)
        pair = OperatorPair(space, s_mat, t_mat)
    except ValueError as exc:
        raise SchemaError(str(exc)) from exc
    result = st_criterion(pair)
    agrees = result.holds == is_m_accretive_linear(st_relation(pair))
    failures = []
    if not agrees:
        failures.append("criterion_vs_relation")
    if not result.holds:
        failures.extend(sorted(result.which_failed))
    report = {
        "command": spec.command,
        "seed": spec.seed,
        "tolerances": {"norm_slack": 1e-9, "spectral_rtol": 1e-10},
        "criterion": result.to_jsonable(),
        "agrees_with_relation_test": agrees,
        "passed": not failures,
        "first_failure": failures[0] if failures else None,
    }
    return report, None


def _suite_block_equivalence(spec: RunSpec):
    _require_keys(
        spec.params, {"interval", "realization", "states", "tau"}, spec.command
    )
    iv = _interval(spec.params)
    ctx = DerivativeContext(iv)
    tol = spec.tol if spec.tol is not None else 1e-9
    rng = np.random.default_rng(spec.seed)
    if "realization" in spec.params:
        realization = _block_realization(ctx, spec.params["realization"])
    else:
        raw = rng.standard_normal((2, 2))
        from .relations import operator_norm

        space = bd_space(ctx)
        realization = BlockRealization.from_f(
            ctx, ContractionMap.from_matrix(space, 0.9 * raw / operator_norm(space, raw))
        )
    states = int(spec.params.get("states", 200))
    tau = float(spec.params.get("tau", 0.8))
    disagreements = 0
    for _ in range(states):
        views = realization.domain_test_all(_random_block_state(rng), tol)
        if len(set(views.values())) > 1:
            disagreements += 1
    max_residual = 0.0
    solved = True
    if realization.is_m_accretive:
        for _ in range(10):
            rhs = _random_block_state(rng)
            try:
                out = block_resolve(realization, rhs, tau)
            except RootNotFound:
                solved = False
                break
            r1 = l2_norm(out.u + tau * differentiate(out.v) - rhs.u, iv)
            r2 = l2_norm(out.v + tau * differentiate(out.u) - rhs.v, iv)
            scale = 1 + state_l2_norm(rhs, iv)
            max_residual = max(max_residual, r1 / scale, r2 / scale)
    failures = []
    if disagreements:
        failures.append("description_agreement")
    if not solved:
        failures.append("resolvent_solvable")
    if max_residual >= tol:
        failures.append("resolvent_residual")
    report = {
        "command": spec.command,
        "seed": spec.seed,
        "interval": iv.to_jsonable(),
        "states": states,
        "tau": tau,
        "tolerances": {"membership": tol},
        "m_accretive": realization.is_m_accretive,
        "disagreements": disagreements,
        "max_resolvent_residual": max_residual,
        "passed": not failures,
        "first_failure": failures[0] if failures else None,
    }
    return report, None


def _suite_wave_impedance(spec: RunSpec):
    _require_keys(
        spec.params, {"interval", "K", "tau", "steps", "u0", "v0"}, spec.command
    )
    iv = _interval(spec.params)
    ctx = DerivativeContext(iv)
    if "K" not in spec.params:
        raise SchemaError("wave-impedance: needs 'K'")
    k = ImpedanceK.from_matrix(_matrix(spec.params["K"], "K", (2, 2)))
    tau = float(spec.params.get("tau", 0.2))
    steps = int(spec.params.get("steps", 50))
    tol = spec.tol if spec.tol is not None else 1e-9
    rng = np.random.default_rng(spec.seed)
    realization = impedance_realization(ctx, k)
    accretive_k = is_K_accretive(k)

    if "u0" in spec.params:
        u0 = BlockState.from_jsonable(spec.params["u0"])
    else:
        u0 = BlockState(
            ExpPoly.exponential(1.0) + ExpPoly.exponential(-1.0),
            ExpPoly.constant(0.5),
        )

    # (a) sampled accretivity over members built from boundary data
    w = realization.relation.basis
    accretive_sampled = True
    members = []
    for _ in range(60):
        coeffs = rng.uniform(-2.0, 2.0, size=2)
        u_bd = coeffs @ w[:, 0, :]
        dv_bd = coeffs @ w[:, 1, :]
        u_poly = ExpPoly(((1.0, (u_bd[0],)), (-1.0, (u_bd[1],))))
        phi_poly = ExpPoly(((1.0, (dv_bd[0],)), (-1.0, (-dv_bd[1],))))
        members.append(BlockState(u_poly, phi_poly))
    for i in range(0, len(members) - 1, 2):
        diff = members[i] - members[i + 1]
        pairing = state_l2_inner(apply_block(diff), diff, iv)
        if pairing < -tol * (1 + state_l2_norm(diff, iv) ** 2):
            accretive_sampled = False
    # (b) solvability with nonexpansive differences
    solvable = True
    outs = []
    try:
        for _ in range(20):
            rhs = _random_block_state(rng)
            outs.append((rhs, block_resolve(realization, rhs, tau)))
    except RootNotFound:
        solvable = False
    if solvable:
        for i in range(0, len(outs) - 1, 2):
            gap_in = state_l2_norm(outs[i][0] - outs[i + 1][0], iv)
            gap_out = state_l2_norm(outs[i][1] - outs[i + 1][1], iv)
            if gap_out > gap_in + tol:
                solvable = False

    # energy run, stopping at the first certified increase
    clean = trajectory_postprocessor(iv)
    state = u0
    energies = [state_l2_norm(state, iv) ** 2]
    first_increase = None
    run_failed_at = None
    for step in range(1, steps + 1):
        try:
            state = clean(block_resolve(realization, state, tau))
        except RootNotFound:
            run_failed_at = step
            break
        energies.append(state_l2_norm(state, iv) ** 2)
        if energies[-1] > energies[-2] * (1 + 1e-10):
            first_increase = step
            break

    failures = []
    if accretive_k != (accretive_sampled and solvable):
        failures.append("equivalence")
    if accretive_k and first_increase is not None:
        failures.append("energy_monotonicity")
    if not accretive_k:
        if first_increase is None and run_failed_at is None:
            failures.append("expected_energy_increase_not_detected")
        failures.append("K_not_accretive")
    report = {
        "command": spec.command,
        "seed": spec.seed,
        "interval": iv.to_jsonable(),
        "K": k.to_jsonable(),
        "tau": tau,
        "steps_requested": steps,
        "tolerances": {"pairing": tol, "energy_increase_rtol": 1e-10},
        "accretive_K": accretive_k,
        "realisation_accretive_sampled": accretive_sampled,
        "resolvent_solvable": solvable,
        "energy_first_increase_step": first_increase,
        "run_failed_at_step": run_failed_at,
        "final_energy": energies[-1],
        "passed": not failures,
        "first_failure": failures[0] if failures else None,
    }
    rows = [(i, i * tau, math.sqrt(e), e) for i, e in enumerate(energies)]
    return report, (["step", "time", "norm", "energy"], rows)


def _suite_evolve(spec: RunSpec):
    _require_keys(
        spec.params,
        {"interval", "kind", "g", "realization", "u0", "v0", "tau", "steps"},
        spec.command,
    )
    iv = _interval(spec.params)
    ctx = DerivativeContext(iv)
    tau = float(spec.params.get("tau", 0.1))
    steps = int(spec.params.get("steps", 10))
    tol = spec.tol if spec.tol is not None else 1e-8
    cfg = SchemeConfig(tau=tau, steps=steps, tol=tol)
    kind = spec.params.get("kind", "derivative")
    clean = trajectory_postprocessor(iv)

    if kind == "derivative":
        if "g" not in spec.params:
            raise SchemaError("evolve: derivative kind needs 'g'")
        g = boundary_function_from_jsonable(spec.params["g"])
        realization = Realization1D(ctx, g)
        u0 = (
            _exppoly(spec.params["u0"], "u0")
            if "u0" in spec.params
            else ExpPoly.exponential(1.0)
        )
        resolvent = lambda s, t: clean(resolve(realization, s, t))  # noqa: E731
        norm = lambda s: l2_norm(s, iv)  # noqa: E731
        dist = lambda x, y: l2_norm(x - y, iv)  # noqa: E731
        v0 = _exppoly(spec.params["v0"], "v0") if "v0" in spec.params else None
    elif kind == "block":
        if "realization" not in spec.params:
            raise SchemaError("evolve: block kind needs 'realization'")
        realization = _block_realization(ctx, spec.params["realization"])
        u0 = (
            BlockState.from_jsonable(spec.params["u0"])
            if "u0" in spec.params
            else BlockState(ExpPoly.exponential(1.0), ExpPoly.exponential(1.0))
        )
        resolvent = lambda s, t: clean(block_resolve(realization, s, t))  # noqa: E731
        norm = lambda s: state_l2_norm(s, iv)  # noqa: E731
        dist = lambda x, y: state_l2_norm(x - y, iv)  # noqa: E731
        v0 = (
            BlockState.from_jsonable(spec.params["v0"])
            if "v0" in spec.params
            else None
        )
    else:
        raise SchemaError(f"evolve: unknown kind {kind!r}")

    record = evolve(resolvent, u0, cfg, norm)
    distances = None
    monotone = None
    failures = []
    if v0 is not None:
        from .errors import ContractionViolated

        try:
            from .evolution import contraction_report

            distances = contraction_report(resolvent, u0, v0, cfg, dist)
            monotone = True
        except ContractionViolated as exc:
            monotone = False
            failures.append("distance_monotonicity")
            distances = [math.nan] * (exc.step + 1)
    report = {
        "command": spec.command,
        "seed": spec.seed,
        "interval": iv.to_jsonable(),
        "kind": kind,
        "tau": tau,
        "steps": steps,
        "tolerances": {"per_step": tol},
        "final_norm": record.norms[-1],
        "distance_monotone": monotone,
        "passed": not failures,
        "first_failure": failures[0] if failures else None,
    }
    rows = []
    for i, (t, n) in enumerate(zip(record.timestamps, record.norms)):
        if distances is not None and i < len(distances):
            rows.append((i, t, n, distances[i]))
        else:
            rows.append((i, t, n))
    header = ["step", "time", "norm"] + (["distance"] if distances is not None else [])
    return report, (header, rows)


_SUITES = {
    "check-decomposition": _suite_check_decomposition,
    "lipschitz-transfer": _suite_lipschitz_transfer,
    "resolve": _suite_resolve,
    "cayley": _suite_cayley,
    "st-criterion": _suite_st_criterion,
    "block-equivalence": _suite_block_equivalence,
    "wave-impedance": _suite_wave_impedance,
    "evolve": _suite_evolve,
}


def run(spec: RunSpec, out_dir: Path) -> int:
    """Execute the suite named by ``spec`` and write its reports."""
    out_dir.mkdir(parents=True, exist_ok=True)
    report, csv_data = _SUITES[spec.command](spec)
    (out_dir / "report.json").write_text(render_report(report))
    if csv_data is not None:
        header, rows = csv_data
        write_csv(out_dir / "data.csv", header, rows)
    return 0 if report["passed"] else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="maccretive",
        description="Run verification suites for boundary realizations.",
    )
    parser.add_argument("--spec", required=True, help="path to the run spec JSON")
    parser.add_argument("--out", default=".", help="output directory for reports")
    parser.add_argument("--seed", type=int, default=None, help="override the spec seed")
    parser.add_argument("--tol", type=float, default=None, help="override the tolerance")
    args = parser.parse_args(argv)

    spec_path = Path(args.spec)
    try:
        raw = json.loads(spec_path.read_text())
        spec = RunSpec.from_jsonable(raw, spec_path.parent)
        if args.seed is not None:
            spec.seed = args.seed
        if args.tol is not None:
            spec.tol = args.tol
        return run(spec, Path(args.out))
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError) as exc:
        print(f"cannot read spec: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

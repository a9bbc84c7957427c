"""Exact certificates for membership of a target functional in the cone
generated by known inequality instances, modulo constraint functionals.

Membership asks for target = sum lambda_i * gen_i + sum mu_j * con_j with
lambda_i >= 0 and mu_j free.  Everything runs in rational arithmetic: a
feasible answer returns the multipliers, an infeasible one returns an exact
separating point (a set function nonnegative on every generator, zero on
every constraint, strictly negative on the target).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Sequence

from .setfn import GroundSet, SetFunction, FLOAT64
from .inequalities import (
    LinearFunctional,
    builtin,
    eliminate_party_pure,
    enumerate_instances,
    instantiate,
)


@dataclass(frozen=True)
class Certificate:
    """A claimed separating point for a membership problem."""

    point: SetFunction
    generators: tuple[LinearFunctional, ...]
    constraints: tuple[LinearFunctional, ...]
    target: LinearFunctional


@dataclass
class CertificateReport:
    valid: bool
    failures: list  # {"kind": "generator"|"constraint"|"target", "index", "value"}
    target_value: object

    def __bool__(self):
        return self.valid

    def to_dict(self) -> dict:
        return {
            "valid": self.valid,
            "target_value": str(self.target_value),
            "failures": [
                {**f, "value": str(f["value"])} for f in self.failures
            ],
        }


def verify_certificate(cert: Certificate) -> CertificateReport:
    """Exactly re-evaluate a separating point against every item.

    Valid means: >= 0 on each generator, == 0 on each constraint, < 0 on the
    target.  The point must be exact; float points are rejected.
    """
    f = cert.point
    if f.domain == FLOAT64:
        raise ValueError("certificate point must be exact (integer or rational)")
    failures = []
    for idx, gen in enumerate(cert.generators):
        v = gen.evaluate(f)
        if v < 0:
            failures.append({"kind": "generator", "index": idx, "value": v})
    for idx, con in enumerate(cert.constraints):
        v = con.evaluate(f)
        if v != 0:
            failures.append({"kind": "constraint", "index": idx, "value": v})
    tval = cert.target.evaluate(f)
    if tval >= 0:
        failures.append({"kind": "target", "index": 0, "value": tval})
    return CertificateReport(valid=not failures, failures=failures, target_value=tval)


@dataclass
class Feasible:
    """target = sum coefficients[i] * generators[i] + sum constraint_coefficients[j] * constraints[j]."""

    coefficients: tuple[Fraction, ...]
    constraint_coefficients: tuple[Fraction, ...]
    pivots: int = 0

    @property
    def feasible(self) -> bool:
        return True

    def to_dict(self) -> dict:
        return {
            "feasible": True,
            "coefficients": [str(c) for c in self.coefficients],
            "constraint_coefficients": [str(c) for c in self.constraint_coefficients],
            "pivots": self.pivots,
        }


@dataclass
class Infeasible:
    """Exact separating point: the membership system has no solution."""

    farkas_point: SetFunction
    pivots: int = 0

    @property
    def feasible(self) -> bool:
        return False

    def to_dict(self) -> dict:
        from .setfn import setfn_to_obj

        return {
            "feasible": False,
            "farkas_point": setfn_to_obj(self.farkas_point),
            "pivots": self.pivots,
        }


def _vectorize(functional: LinearFunctional, dim: int) -> list[Fraction]:
    v = [Fraction(0)] * dim
    for mask, c in functional.coefs.items():
        v[mask - 1] = c
    return v


class _Simplex:
    """Phase-1 simplex in exact rationals with Bland's rule (never cycles)."""

    def __init__(self, columns: list[list[Fraction]], rhs: list[Fraction]):
        self.nrows = len(rhs)
        self.ncols = len(columns)
        self.row_sign = [1] * self.nrows
        # scale rows to b >= 0
        rows = []
        for i in range(self.nrows):
            s = -1 if rhs[i] < 0 else 1
            self.row_sign[i] = s
            rows.append([s * columns[j][i] for j in range(self.ncols)])
        self.b = [abs(v) for v in rhs]
        # artificial basis
        for i in range(self.nrows):
            art = [Fraction(0)] * self.nrows
            art[i] = Fraction(1)
            for j in range(self.nrows):
                rows[j].append(art[j])
        self.T = rows
        self.basis = list(range(self.ncols, self.ncols + self.nrows))
        # reduced costs for phase-1 objective (minimize sum of artificials)
        total = self.ncols + self.nrows
        self.red = [Fraction(0)] * total
        for j in range(self.ncols):
            self.red[j] = -sum(self.T[i][j] for i in range(self.nrows))
        self.obj = sum(self.b)
        self.pivots = 0

    def solve(self, max_pivots: int = 2_000_000):
        nrows, T, b, red = self.nrows, self.T, self.b, self.red
        total = len(red)
        while True:
            enter = -1
            for j in range(total):
                if red[j] < 0:
                    enter = j
                    break
            if enter < 0:
                return
            leave = -1
            best = None
            for i in range(nrows):
                a = T[i][enter]
                if a > 0:
                    ratio = b[i] / a
                    if best is None or ratio < best or (
                        ratio == best and self.basis[i] < self.basis[leave]
                    ):
                        best = ratio
                        leave = i
            if leave < 0:
                raise RuntimeError("phase-1 objective unbounded; should not happen")
            self._pivot(leave, enter)
            self.pivots += 1
            if self.pivots > max_pivots:
                raise RuntimeError("pivot limit exceeded")

    def _pivot(self, r: int, c: int):
        T, b, red = self.T, self.b, self.red
        piv = T[r][c]
        inv = 1 / piv
        row = T[r] = [v * inv for v in T[r]]
        b[r] = b[r] * inv
        for i in range(self.nrows):
            if i == r:
                continue
            factor = T[i][c]
            if factor:
                Ti = T[i]
                for j in range(len(row)):
                    if row[j]:
                        Ti[j] -= factor * row[j]
                b[i] -= factor * b[r]
        factor = red[c]
        if factor:
            for j in range(len(row)):
                if row[j]:
                    red[j] -= factor * row[j]
        self.basis[r] = c
        self.obj = sum(b[i] for i in range(self.nrows) if self.basis[i] >= self.ncols)

    def solution(self) -> list[Fraction]:
        x = [Fraction(0)] * self.ncols
        for i, var in enumerate(self.basis):
            if var < self.ncols:
                x[var] = self.b[i]
        return x

    def dual_prices(self) -> list[Fraction]:
        # y_i = c_art_i - reduced cost of artificial column i, with c_art = 1
        return [
            (1 - self.red[self.ncols + i]) * self.row_sign[i]
            for i in range(self.nrows)
        ]


def cone_membership(
    target: LinearFunctional,
    generators: Sequence[LinearFunctional],
    constraints: Sequence[LinearFunctional] = (),
    max_generators: int = 20000,
    use_fast_paths: bool = True,
):
    """Decide exactly whether target lies in cone(generators) + span(constraints).

    Returns Feasible (with multipliers) or Infeasible (with a separating set
    function scaled to integers).  Duplicate generator rays collapse before
    the solve; a target equal to a generator short-circuits.
    """
    ground = target.ground
    for item in list(generators) + list(constraints):
        if item.ground != ground:
            raise ValueError("all functionals must share one ground set")
    if len(generators) > max_generators:
        raise ValueError(f"{len(generators)} generators exceeds cap {max_generators}")

    # collapse duplicate rays, remembering a representative index
    rep_index: list[int] = []
    seen: dict[tuple, int] = {}
    reps: list[LinearFunctional] = []
    for idx, gen in enumerate(generators):
        if gen.is_zero():
            continue
        key = gen.primitive_key()
        if key not in seen:
            seen[key] = len(reps)
            rep_index.append(idx)
            reps.append(gen)

    nz_constraints = [c for c in constraints if not c.is_zero()]

    if use_fast_paths:
        key = target.primitive_key()
        if key in seen:
            rep = reps[seen[key]]
            # target = t, rep = r with t = s*r for the common primitive ray;
            # the scale is the ratio of any matching coefficients
            mask0, c0 = next(iter(target.coefs.items()))
            scale = c0 / rep.coefs[mask0]
            if scale > 0:
                lams = [Fraction(0)] * len(generators)
                lams[rep_index[seen[key]]] = scale
                return Feasible(
                    coefficients=tuple(lams),
                    constraint_coefficients=tuple(Fraction(0) for _ in constraints),
                )

    dim = ground.n_subsets - 1
    cols = [_vectorize(g, dim) for g in reps]
    ncols_gen = len(cols)
    for c in nz_constraints:
        vc = _vectorize(c, dim)
        cols.append(vc)
        cols.append([-v for v in vc])
    rhs = _vectorize(target, dim)

    # drop identically-zero rows; an inconsistent zero row separates trivially
    keep_rows = []
    for i in range(dim):
        if any(col[i] for col in cols):
            keep_rows.append(i)
        elif rhs[i]:
            table = [0] * ground.n_subsets
            table[i + 1] = 1 if rhs[i] < 0 else -1
            point = SetFunction(ground, table)
            return Infeasible(farkas_point=point)
    cols = [[col[i] for i in keep_rows] for col in cols]
    rhs_kept = [rhs[i] for i in keep_rows]

    sx = _Simplex(cols, rhs_kept)
    sx.solve()
    if sx.obj == 0:
        x = sx.solution()
        lams = [Fraction(0)] * len(generators)
        for ridx, val in zip(rep_index, x[:ncols_gen]):
            lams[ridx] = val
        mus = []
        pos = ncols_gen
        for _ in nz_constraints:
            mus.append(x[pos] - x[pos + 1])
            pos += 2
        mu_out = []
        it = iter(mus)
        for c in constraints:
            mu_out.append(Fraction(0) if c.is_zero() else next(it))
        _check_combination(target, generators, lams, constraints, mu_out)
        return Feasible(
            coefficients=tuple(lams),
            constraint_coefficients=tuple(mu_out),
            pivots=sx.pivots,
        )

    # infeasible: phase-1 duals give a separating hyperplane
    y = sx.dual_prices()
    full = [Fraction(0)] * dim
    for i, row in enumerate(keep_rows):
        full[row] = -y[i]
    # clear denominators and common content
    denom_lcm = 1
    for v in full:
        denom_lcm = denom_lcm * v.denominator // gcd(denom_lcm, v.denominator)
    ints = [int(v * denom_lcm) for v in full]
    content = 0
    for v in ints:
        content = gcd(content, abs(v))
    if content > 1:
        ints = [v // content for v in ints]
    table = [0] + ints
    point = SetFunction(ground, table)
    report = verify_certificate(
        Certificate(point, tuple(generators), tuple(constraints), target)
    )
    if not report.valid:
        raise RuntimeError("internal error: extracted separating point fails re-check")
    return Infeasible(farkas_point=point, pivots=sx.pivots)


def _check_combination(target, generators, lams, constraints, mus):
    acc: dict[int, Fraction] = {}
    for lam, gen in zip(lams, generators):
        if lam < 0:
            raise RuntimeError("internal error: negative generator multiplier")
        if lam:
            for m, c in gen.coefs.items():
                acc[m] = acc.get(m, Fraction(0)) + lam * c
    for mu, con in zip(mus, constraints):
        if mu:
            for m, c in con.coefs.items():
                acc[m] = acc.get(m, Fraction(0)) + mu * c
    acc = {m: c for m, c in acc.items() if c}
    if acc != dict(target.coefs):
        raise RuntimeError("internal error: multipliers do not reproduce the target")


# --- problem builders ---


def basic_generator_instances(ground: GroundSet) -> list:
    """Every basic-inequality instance on a ground set: all submodularity
    instances plus all weak-monotonicity instances (empty side subsets
    included, so triangle and positivity forms appear)."""
    out = []
    for inst in enumerate_instances(builtin("ssa"), ground):
        out.append(inst)
    for inst in enumerate_instances(builtin("wmo"), ground):
        out.append(inst)
    return out


def independence_problem(n: int, p_max: int | None = None):
    """Membership problem asking whether the order-n constrained inequality
    follows from the basic inequalities plus the lower- and higher-order
    family members (orders p != n up to p_max), under its two constraints.

    Returns (target, generators, constraints, ground, meta).  Infeasibility
    of this problem is the independence statement at order n.
    """
    from .witness import standard_c_binding, witness_ground

    if n < 1:
        raise ValueError("family order n must be >= 1")
    p_max = n + 2 if p_max is None else p_max
    ground = witness_ground(n)
    binding = standard_c_binding()

    target_inst = instantiate(
        builtin("c_n", n),
        ground,
        {**binding, **{f"X{i}": f"x{i}" for i in range(1, n + 1)}},
    )
    target = target_inst.functional
    constraints = target_inst.constraints

    generators = []
    labels = []
    for inst in basic_generator_instances(ground):
        generators.append(inst.functional)
        labels.append(inst.describe())
    for p in range(1, p_max + 1):
        if p == n:
            continue
        for inst in enumerate_instances(builtin("c_n", p), ground, fixed=binding):
            if inst.functional.is_zero():
                continue
            generators.append(inst.functional)
            labels.append(inst.describe())
    meta = {
        "n": n,
        "p_max": p_max,
        "n_generators": len(generators),
        "labels": labels,
        "expect": "infeasible",
    }
    return target, generators, list(constraints), ground, meta


def purified_basic_problem():
    """Membership of weak monotonicity on three parties in the cone of
    purified submodularity instances from a four-party extension.

    Feasible with zero residual: weak monotonicity is exactly a purified
    submodularity instance.
    """
    big = GroundSet(("A", "B", "C", "D"))
    small = GroundSet(("A", "B", "C"))
    generators = []
    labels = []
    seen = set()
    for inst in enumerate_instances(builtin("ssa"), big):
        reduced = eliminate_party_pure(inst.functional, "D")
        if reduced.is_zero():
            continue
        key = tuple(sorted(reduced.coefs.items()))
        if key in seen:
            continue
        seen.add(key)
        generators.append(reduced)
        labels.append(inst.describe() + " | pure")
    target = instantiate(
        builtin("wmo"), small, {"A": "A", "B": "B", "C": "C"}
    ).functional
    meta = {"n_generators": len(generators), "labels": labels, "expect": "feasible"}
    return target, generators, [], small, meta


# --- problem / result serialization ---


def functional_to_obj(functional: LinearFunctional) -> list:
    return [
        {"subset": list(functional.ground.labels_of(mask)), "coef": str(c)}
        for mask, c in functional.coefs.items()
    ]


def functional_from_obj(entries, ground: GroundSet) -> LinearFunctional:
    coefs: dict[int, Fraction] = {}
    for ent in entries:
        if not isinstance(ent, dict) or "subset" not in ent or "coef" not in ent:
            raise ValueError("each term needs 'subset' and 'coef'")
        mask = ground.mask_of(ent["subset"])
        if mask == 0:
            raise ValueError("term subset may not be empty")
        coef = ent["coef"]
        if isinstance(coef, float):
            raise ValueError("coefficients must be exact: use 'p/q' strings")
        coefs[mask] = coefs.get(mask, Fraction(0)) + Fraction(coef)
    return LinearFunctional(ground, coefs)


def problem_to_obj(target, generators, constraints, ground, expect=None) -> dict:
    obj = {
        "ground": list(ground.labels),
        "target": functional_to_obj(target),
        "generators": [functional_to_obj(g) for g in generators],
        "constraints": [functional_to_obj(c) for c in constraints],
    }
    if expect:
        obj["expect"] = expect
    return obj


def problem_from_obj(obj):
    if not isinstance(obj, dict):
        raise ValueError("problem must be a JSON object")
    for key in ("ground", "target", "generators"):
        if key not in obj:
            raise ValueError(f"problem object missing key {key!r}")
    ground = GroundSet(tuple(obj["ground"]))
    target = functional_from_obj(obj["target"], ground)
    generators = [functional_from_obj(g, ground) for g in obj["generators"]]
    constraints = [functional_from_obj(c, ground) for c in obj.get("constraints", [])]
    return target, generators, constraints, ground, obj.get("expect")


def problem_to_json(target, generators, constraints, ground, expect=None, indent=None) -> str:
    return json.dumps(problem_to_obj(target, generators, constraints, ground, expect), indent=indent)


def problem_from_json(text: str):
    return problem_from_obj(json.loads(text))

"""Linear entropic functionals and inequality templates with role slots.

A template states an inequality (and optional equality constraints) over
abstract slots; instantiating it assigns pairwise-disjoint subsets of a
concrete ground set to the slots and collects terms.  Coefficients are exact
rationals throughout.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Iterable, Iterator, Mapping, Sequence

from .setfn import (
    DEFAULT_TOL,
    FLOAT64,
    GroundSet,
    SetFunction,
    Subset,
    _canon_exact,
    submasks,
)


def _as_fraction(x) -> Fraction:
    if isinstance(x, float):
        raise ValueError("coefficients must be exact (int, Fraction, or 'p/q' string)")
    return Fraction(x)


class LinearFunctional:
    """Exact rational combination sum_a coef(a) * f(a) over nonempty subsets."""

    __slots__ = ("ground", "coefs")

    def __init__(self, ground: GroundSet, coefs: Mapping[Subset, object]):
        table: dict[int, Fraction] = {}
        for key, c in coefs.items():
            mask = ground.mask_of(key)
            if mask == 0:
                raise ValueError("the empty set carries no coefficient")
            c = _as_fraction(c)
            if c:
                table[mask] = table.get(mask, Fraction(0)) + c
        self.ground = ground
        self.coefs = {m: c for m, c in sorted(table.items()) if c}

    def evaluate(self, f: SetFunction):
        """Value on a set function; exact inputs give exact (int/Fraction) output."""
        if f.ground != self.ground:
            raise ValueError("ground sets do not match")
        if f.domain == FLOAT64:
            return float(sum(float(c) * f.values[m] for m, c in self.coefs.items()))
        return _canon_exact(sum(c * f.values[m] for m, c in self.coefs.items()))

    def coefficient(self, subset: Subset) -> Fraction:
        return self.coefs.get(self.ground.mask_of(subset), Fraction(0))

    def party_sums(self) -> dict[str, Fraction]:
        sums = {lab: Fraction(0) for lab in self.ground.labels}
        for mask, c in self.coefs.items():
            for lab in self.ground.labels_of(mask):
                sums[lab] += c
        return sums

    def is_balanced(self) -> bool:
        return all(s == 0 for s in self.party_sums().values())

    def is_zero(self) -> bool:
        return not self.coefs

    def scale(self, k) -> "LinearFunctional":
        k = _as_fraction(k)
        return LinearFunctional(self.ground, {m: c * k for m, c in self.coefs.items()})

    def primitive_key(self) -> tuple:
        """Integer-cleared, content-1 coefficient vector; identifies the ray."""
        if not self.coefs:
            return ()
        denom_lcm = 1
        for c in self.coefs.values():
            denom_lcm = denom_lcm * c.denominator // gcd(denom_lcm, c.denominator)
        ints = {m: int(c * denom_lcm) for m, c in self.coefs.items()}
        g = 0
        for v in ints.values():
            g = gcd(g, abs(v))
        return tuple((m, v // g) for m, v in sorted(ints.items()))

    def __eq__(self, other):
        return (
            isinstance(other, LinearFunctional)
            and self.ground == other.ground
            and self.coefs == other.coefs
        )

    def __hash__(self):
        return hash((self.ground, tuple(sorted(self.coefs.items()))))

    def __repr__(self):
        return f"LinearFunctional({self.describe()})"

    def describe(self) -> str:
        if not self.coefs:
            return "0"
        parts = []
        for mask, c in self.coefs.items():
            sign = "-" if c < 0 else "+"
            mag = -c if c < 0 else c
            coef = "" if mag == 1 else f"{mag}*"
            parts.append(f"{sign} {coef}S{self.ground.subset_str(mask)}")
        return " ".join(parts).lstrip("+ ")


# --- templates ---


def _add_terms(dst: dict, src: Mapping[int, Fraction], scale=1):
    scale = Fraction(scale)
    for mask, c in src.items():
        new = dst.get(mask, Fraction(0)) + c * scale
        if new:
            dst[mask] = new
        else:
            dst.pop(mask, None)
    return dst


def _cmi_terms(a: int, b: int, g: int = 0) -> dict[int, Fraction]:
    out: dict[int, Fraction] = {}
    for mask, s in ((a | g, 1), (b | g, 1), (g, -1), (a | b | g, -1)):
        if mask:
            _add_terms(out, {mask: Fraction(s)})
    return out


class InequalityTemplate:
    """Inequality form over named slots, with optional equality constraints.

    `terms` maps slot-subset masks (bits in slot order) to coefficients; the
    statement is sum >= 0 subject to each constraint form evaluating to 0.
    `symmetries` lists groups of interchangeable slots (used to deduplicate
    enumeration) and `empty_ok` the slots allowed to be empty by default.
    """

    __slots__ = ("name", "slots", "terms", "constraints", "symmetries", "empty_ok")

    def __init__(
        self,
        name: str,
        slots: Sequence[str],
        terms: Mapping[int, object],
        constraints: Iterable[Mapping[int, object]] = (),
        symmetries: Iterable[Sequence[str]] = (),
        empty_ok: Iterable[str] = (),
    ):
        self.name = name
        self.slots = tuple(slots)
        if len(set(self.slots)) != len(self.slots):
            raise ValueError("slot names must be distinct")
        full = (1 << len(self.slots)) - 1
        self.terms = self._clean(terms, full)
        self.constraints = tuple(self._clean(c, full) for c in constraints)
        self.symmetries = tuple(tuple(g) for g in symmetries)
        for group in self.symmetries:
            for s in group:
                if s not in self.slots:
                    raise ValueError(f"symmetry group names unknown slot {s!r}")
        self.empty_ok = frozenset(empty_ok)
        for s in self.empty_ok:
            if s not in self.slots:
                raise ValueError(f"empty_ok names unknown slot {s!r}")

    @staticmethod
    def _clean(terms, full) -> dict[int, Fraction]:
        out: dict[int, Fraction] = {}
        for mask, c in terms.items():
            if not 1 <= mask <= full:
                raise ValueError(f"slot mask {mask} out of range")
            c = _as_fraction(c)
            if c:
                out[mask] = out.get(mask, Fraction(0)) + c
        return {m: c for m, c in sorted(out.items()) if c}

    def slot_mask(self, names: Iterable[str]) -> int:
        mask = 0
        for n in names:
            mask |= 1 << self.slots.index(n)
        return mask

    def slot_names(self, mask: int) -> tuple[str, ...]:
        return tuple(s for i, s in enumerate(self.slots) if mask >> i & 1)

    def party_sums(self) -> dict[str, Fraction]:
        sums = {s: Fraction(0) for s in self.slots}
        for mask, c in self.terms.items():
            for s in self.slot_names(mask):
                sums[s] += c
        return sums

    def is_balanced(self) -> bool:
        """True when every slot's coefficients sum to zero.

        Any instance of a balanced template is balanced as a functional, since
        each assigned party sits in exactly one slot's subset.
        """
        return all(v == 0 for v in self.party_sums().values())

    def __eq__(self, other):
        return (
            isinstance(other, InequalityTemplate)
            and self.name == other.name
            and self.slots == other.slots
            and self.terms == other.terms
            and self.constraints == other.constraints
            and self.symmetries == other.symmetries
            and self.empty_ok == other.empty_ok
        )

    def __hash__(self):
        return hash((self.name, self.slots, tuple(sorted(self.terms.items()))))

    def __repr__(self):
        return f"InequalityTemplate({self.name!r}, slots={self.slots})"


@dataclass(frozen=True)
class Instance:
    """A template bound to concrete disjoint subsets of a ground set."""

    template: InequalityTemplate
    ground: GroundSet
    assignment: tuple[tuple[str, int], ...]  # (slot, party mask) in slot order
    functional: LinearFunctional
    constraints: tuple[LinearFunctional, ...]

    def assignment_labels(self) -> dict[str, tuple[str, ...]]:
        return {slot: self.ground.labels_of(m) for slot, m in self.assignment}

    def describe(self) -> str:
        binds = " ".join(
            f"{slot}={self.ground.subset_str(m)}" for slot, m in self.assignment
        )
        return f"{self.template.name}[{binds}]"


def instantiate(
    template: InequalityTemplate, ground: GroundSet, assignment: Mapping[str, Subset]
) -> Instance:
    """Bind every slot to a subset (pairwise disjoint; empty allowed explicitly)."""
    masks: dict[str, int] = {}
    for slot in template.slots:
        if slot not in assignment:
            raise ValueError(f"assignment missing slot {slot!r}")
        masks[slot] = ground.mask_of(assignment[slot])
    extra = set(assignment) - set(template.slots)
    if extra:
        raise ValueError(f"assignment names unknown slots {sorted(extra)}")
    used = 0
    for slot, m in masks.items():
        if used & m:
            raise ValueError(f"slot {slot!r} overlaps a previously assigned subset")
        used |= m
    return _build_instance(template, ground, tuple(masks[s] for s in template.slots))


def _build_instance(
    template: InequalityTemplate, ground: GroundSet, slot_masks: tuple[int, ...]
) -> Instance:
    def realize(terms: Mapping[int, Fraction]) -> LinearFunctional:
        out: dict[int, Fraction] = {}
        for smask, c in terms.items():
            pmask = 0
            i = 0
            m = smask
            while m:
                if m & 1:
                    pmask |= slot_masks[i]
                m >>= 1
                i += 1
            if pmask:
                out[pmask] = out.get(pmask, Fraction(0)) + c
        return LinearFunctional(ground, out)

    return Instance(
        template,
        ground,
        tuple(zip(template.slots, slot_masks)),
        realize(template.terms),
        tuple(realize(c) for c in template.constraints),
    )


def enumerate_instances(
    template: InequalityTemplate,
    ground: GroundSet,
    fixed: Mapping[str, Subset] | None = None,
    allow_empty: Iterable[str] | None = None,
    dedup: bool = True,
) -> Iterator[Instance]:
    """All assignments of pairwise-disjoint subsets to slots, lexicographic.

    `fixed` pins chosen slots; free slots range over subsets of the remaining
    parties, empty only where permitted (template default, or `allow_empty`).
    With `dedup`, assignments equal under the template's declared slot
    symmetries are emitted once, in canonical (sorted-mask) form.
    """
    fixed_masks: dict[str, int] = {}
    if fixed:
        for slot, sub in fixed.items():
            if slot not in template.slots:
                raise ValueError(f"fixed binding names unknown slot {slot!r}")
            fixed_masks[slot] = ground.mask_of(sub)
        used0 = 0
        for m in fixed_masks.values():
            if used0 & m:
                raise ValueError("fixed bindings overlap")
            used0 |= m
    empties = template.empty_ok if allow_empty is None else frozenset(allow_empty)

    prev_in_group: dict[str, str] = {}
    if dedup:
        for group in template.symmetries:
            for a, b in zip(group, group[1:]):
                prev_in_group[b] = a

    slots = template.slots
    n = len(slots)
    chosen: list[int] = []

    def rec(i: int, used: int) -> Iterator[Instance]:
        if i == n:
            yield _build_instance(template, ground, tuple(chosen))
            return
        slot = slots[i]
        if slot in fixed_masks:
            chosen.append(fixed_masks[slot])
            yield from rec(i + 1, used | fixed_masks[slot])
            chosen.pop()
            return
        avail = ground.full_mask & ~used
        prev = prev_in_group.get(slot)
        floor_mask = -1
        if prev is not None and prev not in fixed_masks:
            floor_mask = chosen[slots.index(prev)]
        for cand in submasks(avail):
            if cand == 0 and slot not in empties:
                continue
            if floor_mask >= 0:
                # canonical order inside a symmetry group: strictly increasing
                # masks, except repeated empties
                if cand < floor_mask or (cand == floor_mask and cand != 0):
                    continue
            chosen.append(cand)
            yield from rec(i + 1, used | cand)
            chosen.pop()

    return rec(0, 0)


def evaluate(functional: LinearFunctional, f: SetFunction):
    return functional.evaluate(f)


@dataclass
class SatisfiesReport:
    """Scan of every admissible instance of a template on one set function."""

    template_name: str
    n_enumerated: int
    n_admissible: int
    min_value: object
    argmin: Instance | None
    n_violations: int
    violations: list
    max_constraint_residual: object
    domain: str

    @property
    def holds(self) -> bool:
        return self.n_violations == 0

    def __bool__(self):
        return self.holds


def satisfies(
    f: SetFunction,
    template: InequalityTemplate,
    binding: Mapping[str, Subset] | None = None,
    auto_filter: bool = False,
    tol: float = DEFAULT_TOL,
    allow_empty: Iterable[str] | None = None,
    max_recorded: int = 10,
) -> SatisfiesReport:
    """Evaluate a template over its instances on f.

    Constrained templates need either an explicit `binding` of the constrained
    slots or `auto_filter=True`, which keeps only instances whose realized
    constraints vanish on f (within `tol` for float64 inputs).
    """
    if template.constraints and binding is None and not auto_filter:
        raise ValueError(
            "constrained template: pass an explicit binding or auto_filter=True"
        )
    is_float = f.domain == FLOAT64
    zero_tol = tol if is_float else 0
    n_enum = 0
    n_adm = 0
    min_value = None
    argmin = None
    n_viol = 0
    viols: list = []
    max_resid = 0.0 if is_float else 0
    for inst in enumerate_instances(
        template, f.ground, fixed=binding, allow_empty=allow_empty
    ):
        n_enum += 1
        resid = None
        if inst.constraints:
            resid = max(abs(c.evaluate(f)) for c in inst.constraints)
        if auto_filter and resid is not None and resid > zero_tol:
            continue
        n_adm += 1
        if resid is not None and resid > max_resid:
            max_resid = resid
        val = inst.functional.evaluate(f)
        if min_value is None or val < min_value:
            min_value = val
            argmin = inst
        if val < (-tol if is_float else 0):
            n_viol += 1
            if len(viols) < max_recorded:
                viols.append((inst, val))
    return SatisfiesReport(
        template_name=template.name,
        n_enumerated=n_enum,
        n_admissible=n_adm,
        min_value=min_value,
        argmin=argmin,
        n_violations=n_viol,
        violations=viols,
        max_constraint_residual=max_resid,
        domain=f.domain,
    )


def eliminate_party_pure(
    functional: LinearFunctional, label: str
) -> LinearFunctional:
    """Rewrite a functional assuming global purity, removing one party.

    Terms containing the party are replaced via S(a) = S(complement of a),
    valid on entropy vectors of pure states; a term on the full set drops
    (zero entropy).  The result lives on the ground set without that party.
    """
    gr = functional.ground
    bit = 1 << gr.index(label)
    new_labels = tuple(lab for lab in gr.labels if lab != label)
    new_ground = GroundSet(new_labels)

    def remap(mask: int) -> int:
        out = 0
        j = 0
        for i, lab in enumerate(gr.labels):
            if lab == label:
                continue
            if mask >> i & 1:
                out |= 1 << j
            j += 1
        return out

    out: dict[int, Fraction] = {}
    for mask, c in functional.coefs.items():
        if mask & bit:
            mask = gr.complement(mask)
            if mask == 0:
                continue
        nm = remap(mask)
        out[nm] = out.get(nm, Fraction(0)) + c
    return LinearFunctional(new_ground, out)


# --- builtin templates ---


def _slot_bits(k: int) -> list[int]:
    return [1 << i for i in range(k)]


def _mi_terms(a: int, b: int) -> dict[int, Fraction]:
    return _cmi_terms(a, b, 0)


def _c_family_parts(n: int):
    """Common pieces for the conditional-independence family of order n."""
    slots = ("A", "B", "C") + tuple(f"X{i}" for i in range(1, n + 1))
    a, b, c = 1, 2, 4
    xs = [8 << i for i in range(n)]
    x_all = 0
    for x in xs:
        x_all |= x
    constraints = (_cmi_terms(a, c, b), _cmi_terms(b, c, a))
    sym = (("A", "B"), tuple(f"X{i}" for i in range(1, n + 1)))
    empty = frozenset(f"X{i}" for i in range(1, n + 1))
    return slots, a, b, c, xs, x_all, constraints, sym, empty


def _template_c(n: int) -> InequalityTemplate:
    slots, a, b, c, xs, x_all, cons, sym, empty = _c_family_parts(n)
    t: dict[int, Fraction] = {}
    for x in xs:
        _add_terms(t, {x: 1})
        _add_terms(t, _cmi_terms(a, b, x))
    _add_terms(t, {x_all: -1})
    _add_terms(t, _mi_terms(a | b, c), -(n - 1))
    return InequalityTemplate(f"c_{n}", slots, t, cons, sym, empty)


def _template_thm1p(n: int) -> InequalityTemplate:
    slots, a, b, c, xs, x_all, cons, sym, empty = _c_family_parts(n)
    t: dict[int, Fraction] = {}
    for x in xs:
        _add_terms(t, {x: 1})
        _add_terms(t, _cmi_terms(a, b, x))
    _add_terms(t, _cmi_terms(a, b, c | x_all))
    _add_terms(t, {a | b | c | x_all: 1})
    _add_terms(t, {a | b | c: -1})
    _add_terms(t, _mi_terms(a | b, c), -n)
    return InequalityTemplate(f"thm1p_{n}", slots, t, cons, sym, empty)


def _template_thm2(n: int) -> InequalityTemplate:
    slots, a, b, c, xs, x_all, cons, sym, empty = _c_family_parts(n)
    t: dict[int, Fraction] = {}
    for x in xs:
        _add_terms(t, {x: 1})
        _add_terms(t, _cmi_terms(a, b, x))
    _add_terms(t, _cmi_terms(a, b, c))
    _add_terms(t, {c: 1, c | x_all: -1})
    _add_terms(t, _mi_terms(a | b, c), -n)
    return InequalityTemplate(f"thm2_{n}", slots, t, cons, sym, empty)


def _template_thm2p(n: int) -> InequalityTemplate:
    slots, a, b, c, xs, x_all, cons, sym, empty = _c_family_parts(n)
    t: dict[int, Fraction] = {}
    for x in xs:
        _add_terms(t, {x: 1})
        _add_terms(t, _cmi_terms(a, b, x))
    _add_terms(t, _cmi_terms(a, b, c | x_all))
    _add_terms(t, {a | b | c | x_all: 1})
    _add_terms(t, _cmi_terms(a, b, c))
    _add_terms(t, {c: 1})
    _add_terms(t, {a | b: -1})
    _add_terms(t, _mi_terms(a | b, c), -(n + 1))
    return InequalityTemplate(f"thm2p_{n}", slots, t, cons, sym, empty)


def _template_ssa(_=None) -> InequalityTemplate:
    return InequalityTemplate(
        "ssa", ("A", "B", "C"), _cmi_terms(1, 2, 4),
        symmetries=(("A", "B"),), empty_ok=("C",),
    )


def _template_wmo(_=None) -> InequalityTemplate:
    return InequalityTemplate(
        "wmo", ("A", "B", "C"), {3: 1, 5: 1, 2: -1, 4: -1},
        symmetries=(("B", "C"),), empty_ok=("B", "C"),
    )


def _template_mi(_=None) -> InequalityTemplate:
    return InequalityTemplate(
        "mutual-info", ("A", "B"), _mi_terms(1, 2), symmetries=(("A", "B"),)
    )


def _template_triangle(_=None) -> InequalityTemplate:
    return InequalityTemplate("triangle", ("A", "B"), {3: 1, 1: 1, 2: -1})


def _template_positivity(_=None) -> InequalityTemplate:
    return InequalityTemplate("positivity", ("A",), {1: 1})


def _template_antimono(_=None) -> InequalityTemplate:
    # deliberately false probe: S(A) >= S(AB) fails on entangled states
    return InequalityTemplate("anti-monotone", ("A", "B"), {1: 1, 3: -1})


def _template_lw05(_=None) -> InequalityTemplate:
    a, b, c, d = 1, 2, 4, 8
    t: dict[int, Fraction] = {}
    _add_terms(t, _mi_terms(c, d))
    _add_terms(t, _mi_terms(a | b, c), -1)
    cons = (_cmi_terms(a, c, b), _cmi_terms(b, c, a), _cmi_terms(a, b, d))
    return InequalityTemplate(
        "lw05", ("A", "B", "C", "D"), t, cons, symmetries=(("A", "B"),)
    )


_PARAMETRIC = {
    "c_n": _template_c,
    "thm1": _template_c,
    "thm1p": _template_thm1p,
    "thm2": _template_thm2,
    "thm2p": _template_thm2p,
}

_FIXED = {
    "ssa": _template_ssa,
    "wmo": _template_wmo,
    "mutual-info": _template_mi,
    "triangle": _template_triangle,
    "positivity": _template_positivity,
    "anti-monotone": _template_antimono,
    "lw05": _template_lw05,
}


def _canon_name(name: str) -> str:
    s = name.strip().lower().replace("′", "p").replace("'", "p")
    s = s.replace("_", "-")
    aliases = {
        "mi": "mutual-info",
        "mutual-information": "mutual-info",
        "anti-mono": "anti-monotone",
        "antimono": "anti-monotone",
        "anti-monotonicity": "anti-monotone",
        "c-n": "c_n",
        "cn": "c_n",
        "thm1": "thm1",
        "thm1p": "thm1p",
        "thm2": "thm2",
        "thm2p": "thm2p",
    }
    return aliases.get(s, s)


def builtin_names() -> list[str]:
    return sorted(_FIXED) + sorted(_PARAMETRIC)


def builtin(name: str, n: int | None = None) -> InequalityTemplate:
    """Look up a builtin template; the parametric families require n >= 1.

    Parametric names also accept an embedded order, e.g. 'c_3' or 'thm2p_1'.
    """
    key = _canon_name(name)
    if key in _FIXED:
        return _FIXED[key]()
    m = key.replace("-", "_")
    if m in _PARAMETRIC:
        if n is None:
            raise ValueError(f"template {name!r} needs the family order n")
        if n < 1:
            raise ValueError("family order n must be >= 1")
        return _PARAMETRIC[m](n)
    if "_" in m:
        base, _, tail = m.rpartition("_")
        if base == "c":
            base = "c_n"
        if base in _PARAMETRIC and tail.isdigit():
            order = int(tail)
            if n is not None and n != order:
                raise ValueError(f"conflicting orders {name!r} vs n={n}")
            if order < 1:
                raise ValueError("family order n must be >= 1")
            return _PARAMETRIC[base](order)
    raise ValueError(f"unknown builtin template {name!r}")


# --- template serialization ---


def _terms_to_obj(template: InequalityTemplate, terms: Mapping[int, Fraction]) -> list:
    return [
        {"subset": list(template.slot_names(mask)), "coef": str(c)}
        for mask, c in sorted(terms.items())
    ]


def template_to_obj(template: InequalityTemplate) -> dict:
    obj = {
        "name": template.name,
        "slots": list(template.slots),
        "terms": _terms_to_obj(template, template.terms),
        "constraints": [
            _terms_to_obj(template, c) for c in template.constraints
        ],
    }
    if template.symmetries:
        obj["symmetries"] = [list(g) for g in template.symmetries]
    if template.empty_ok:
        obj["empty_ok"] = sorted(template.empty_ok)
    return obj


def _terms_from_obj(entries, slots: tuple[str, ...]) -> dict[int, Fraction]:
    out: dict[int, Fraction] = {}
    for ent in entries:
        if not isinstance(ent, dict) or "subset" not in ent or "coef" not in ent:
            raise ValueError("each term needs 'subset' and 'coef'")
        mask = 0
        for s in ent["subset"]:
            if s not in slots:
                raise ValueError(f"term names unknown slot {s!r}")
            mask |= 1 << slots.index(s)
        if mask == 0:
            raise ValueError("term subset may not be empty")
        coef = ent["coef"]
        if isinstance(coef, float):
            raise ValueError("coefficients must be exact: use 'p/q' strings")
        out[mask] = out.get(mask, Fraction(0)) + Fraction(coef)
    return out


def template_from_obj(obj) -> InequalityTemplate:
    if not isinstance(obj, dict):
        raise ValueError("template object must be a JSON object")
    for key in ("name", "slots", "terms"):
        if key not in obj:
            raise ValueError(f"template object missing key {key!r}")
    slots = tuple(obj["slots"])
    return InequalityTemplate(
        str(obj["name"]),
        slots,
        _terms_from_obj(obj["terms"], slots),
        [_terms_from_obj(c, slots) for c in obj.get("constraints", [])],
        [tuple(g) for g in obj.get("symmetries", [])],
        obj.get("empty_ok", ()),
    )


def template_to_json(template: InequalityTemplate, indent: int | None = None) -> str:
    return json.dumps(template_to_obj(template), indent=indent)


def template_from_json(text: str) -> InequalityTemplate:
    return template_from_obj(json.loads(text))

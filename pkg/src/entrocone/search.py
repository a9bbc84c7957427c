"""Randomized search for counterexamples to entropic inequality templates.

A search draws states from a parameterized family, evaluates every admissible
instance of a template on each state's entropy vector, and reports the worst
slack seen.  A violation is only reported when the instance's constraint
residuals also pass, and every violation is revalidated from its recorded
seed before being believed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .inequalities import (
    InequalityTemplate,
    Instance,
    builtin,
    enumerate_instances,
    instantiate,
)
from .quantum import (
    BlockStructure,
    FamilyDims,
    MultipartyState,
    _check_cap,
    _rng,
    assemble_constrained_state,
    default_family_dims,
    entropy_vector,
    family_labels,
    lw05_family_sample,
    trial_seed,
)

FAMILIES = ("haar-mixed", "diagonal", "constrained", "constrained-diagonal", "lw05")


@dataclass
class SearchConfig:
    """Everything a scan or refinement needs; deterministic given `seed`."""

    template: object = "ssa"  # name or InequalityTemplate
    n: int | None = None  # family order for parametric templates
    family: str = "haar-mixed"
    labels: tuple = ()
    dims: tuple = ()  # per-party dims for haar-mixed / diagonal
    rank: int | None = None
    blocks: int = 2
    family_dims: FamilyDims | None = None
    trials: int = 100
    seed: int = 0
    tol: float = 1e-9
    binding: dict | None = None
    auto_filter: bool = False
    penalty: float = 1000.0
    refine_steps: int = 200
    step_size: float = 0.1

    def summary(self) -> dict:
        return {
            "template": self.template if isinstance(self.template, str) else self.template.name,
            "n": self.n,
            "family": self.family,
            "labels": list(self.labels),
            "dims": list(self.dims),
            "rank": self.rank,
            "blocks": self.blocks,
            "trials": self.trials,
            "seed": self.seed,
            "tol": self.tol,
            "penalty": self.penalty,
            "refine_steps": self.refine_steps,
            "step_size": self.step_size,
        }


def resolve_template(cfg: SearchConfig) -> InequalityTemplate:
    if isinstance(cfg.template, InequalityTemplate):
        return cfg.template
    return builtin(str(cfg.template), cfg.n)


class StateFamily:
    """A smoothly parameterized ensemble of states: draw params, build a state."""

    labels: tuple[str, ...]
    block_structure: BlockStructure | None = None

    def n_params(self) -> int:
        raise NotImplementedError

    def draw(self, rng) -> np.ndarray:
        raise NotImplementedError

    def build(self, params: np.ndarray) -> MultipartyState:
        raise NotImplementedError

    def block_hints(self) -> dict | None:
        return None


class HaarMixedFamily(StateFamily):
    """Hilbert-Schmidt-style states: G G^dag / trace with Gaussian G."""

    def __init__(self, labels: Sequence[str], dims: Sequence[int], rank: int | None = None):
        self.labels = tuple(labels)
        self.dims = tuple(int(d) for d in dims)
        if len(self.labels) != len(self.dims):
            raise ValueError("labels and dims must align")
        self.total = int(np.prod(self.dims))
        _check_cap(self.total)
        self.rank = self.total if rank is None else int(rank)
        if self.rank < 1:
            raise ValueError("rank must be >= 1")

    def n_params(self) -> int:
        return 2 * self.total * self.rank

    def draw(self, rng) -> np.ndarray:
        return rng.standard_normal(self.n_params())

    def build(self, params: np.ndarray) -> MultipartyState:
        half = self.total * self.rank
        g = (params[:half] + 1j * params[half:]).reshape(self.total, self.rank)
        rho = g @ g.conj().T
        tr = np.trace(rho).real
        if tr <= 0:
            raise ValueError("degenerate parameter point (zero trace)")
        return MultipartyState(self.labels, self.dims, rho / tr, validate="none")


class DiagonalFamily(StateFamily):
    """Classical distributions embedded diagonally."""

    def __init__(self, labels: Sequence[str], dims: Sequence[int]):
        self.labels = tuple(labels)
        self.dims = tuple(int(d) for d in dims)
        self.total = int(np.prod(self.dims))
        _check_cap(self.total)

    def n_params(self) -> int:
        return self.total

    def draw(self, rng) -> np.ndarray:
        return np.sqrt(rng.standard_exponential(self.total))

    def build(self, params: np.ndarray) -> MultipartyState:
        p = params * params
        s = p.sum()
        if s <= 0:
            raise ValueError("degenerate parameter point")
        return MultipartyState(
            self.labels, self.dims, np.diag(p / s).astype(np.complex128), validate="none"
        )


class ConstrainedFamily(StateFamily):
    """The block-decomposed family on (A, B, C, X1..Xn); both conditional
    independence constraints hold identically for every parameter point."""

    def __init__(self, n: int, blocks: int = 2, dims: FamilyDims | None = None,
                 diagonal: bool = False):
        self.fdims = default_family_dims(n, blocks) if dims is None else dims
        _check_cap(self.fdims.total_dim())
        self.labels = family_labels(self.fdims.n)
        self.diagonal = diagonal
        xp = 1
        xq = 1
        for a, b in self.fdims.x_halves:
            xp *= a
            xq *= b
        self.chi_dims = [self.fdims.a_blocks[k] * self.fdims.b_blocks[k] * xp
                         for k in range(self.fdims.n_blocks)]
        self.xi_dims = [self.fdims.dim_c * xq] * self.fdims.n_blocks

    def _sizes(self):
        K = self.fdims.n_blocks
        sizes = [K]
        for d in self.chi_dims:
            sizes.append(d if self.diagonal else 2 * d * d)
        for d in self.xi_dims:
            sizes.append(d if self.diagonal else 2 * d * d)
        return sizes

    def n_params(self) -> int:
        return sum(self._sizes())

    def draw(self, rng) -> np.ndarray:
        parts = [np.sqrt(rng.standard_exponential(self.fdims.n_blocks))]
        for d in self.chi_dims + self.xi_dims:
            if self.diagonal:
                parts.append(np.sqrt(rng.standard_exponential(d)))
            else:
                parts.append(rng.standard_normal(2 * d * d))
        return np.concatenate(parts)

    @staticmethod
    def _density(raw: np.ndarray, d: int, diagonal: bool) -> np.ndarray:
        if diagonal:
            p = raw * raw
            return np.diag(p / p.sum()).astype(np.complex128)
        g = (raw[: d * d] + 1j * raw[d * d:]).reshape(d, d)
        rho = g @ g.conj().T
        return rho / np.trace(rho).real

    def build_with_blocks(self, params: np.ndarray):
        sizes = self._sizes()
        if params.size != sum(sizes):
            raise ValueError("parameter vector has the wrong length")
        pieces = []
        pos = 0
        for s in sizes:
            pieces.append(params[pos: pos + s])
            pos += s
        w = pieces[0] * pieces[0]
        weights = w / w.sum()
        K = self.fdims.n_blocks
        chis = [self._density(pieces[1 + k], self.chi_dims[k], self.diagonal)
                for k in range(K)]
        xis = [self._density(pieces[1 + K + k], self.xi_dims[k], self.diagonal)
               for k in range(K)]
        return assemble_constrained_state(self.fdims, weights, chis, xis)

    def build(self, params: np.ndarray) -> MultipartyState:
        state, bs = self.build_with_blocks(params)
        self.block_structure = bs
        return state

    def block_hints(self) -> dict | None:
        starts = np.cumsum((0,) + self.fdims.a_blocks[:-1])
        return {"A": tuple((int(s), int(z)) for s, z in zip(starts, self.fdims.a_blocks))}


class LW05Family(StateFamily):
    """Four-party family carrying all three constraints of the earlier
    constrained inequality; see quantum.lw05_family_sample."""

    def __init__(self, blocks: int = 2, block_dims: tuple = (1, 1, 2), dim_c: int = 2):
        self.labels = ("A", "B", "C", "D")
        self.blocks = blocks
        self.block_dims = tuple(block_dims)
        self.dim_c = dim_c
        da, db, dd = self.block_dims
        _check_cap(da * blocks * db * blocks * dim_c * dd * blocks)

    def n_params(self) -> int:
        da, db, dd = self.block_dims
        per = 2 * da * da + 2 * db * db + 2 * (self.dim_c * dd) ** 2
        return self.blocks + per * self.blocks

    def draw(self, rng) -> np.ndarray:
        # parameterization mirrors the sampler; draw here just forwards a seed
        return rng.integers(0, 2**63 - 1, size=2)

    def build(self, params: np.ndarray) -> MultipartyState:
        return lw05_family_sample(
            self.blocks, self.block_dims, self.dim_c, seed=tuple(int(v) for v in params)
        )


def family_for(cfg: SearchConfig, template: InequalityTemplate) -> StateFamily:
    name = cfg.family
    if name == "haar-mixed" or name == "diagonal":
        labels = tuple(cfg.labels) if cfg.labels else tuple(template.slots)
        dims = tuple(cfg.dims) if cfg.dims else (2,) * len(labels)
        if len(dims) != len(labels):
            raise ValueError("dims and labels must align")
        if name == "haar-mixed":
            return HaarMixedFamily(labels, dims, cfg.rank)
        return DiagonalFamily(labels, dims)
    if name in ("constrained", "constrained-diagonal"):
        n = cfg.n
        if n is None:
            n = sum(1 for s in template.slots if s.startswith("X"))
        if n < 0 or (cfg.family_dims is None and n < 1):
            raise ValueError("constrained family needs the order n >= 1")
        return ConstrainedFamily(
            n, cfg.blocks, cfg.family_dims, diagonal=(name == "constrained-diagonal")
        )
    if name == "lw05":
        return LW05Family(cfg.blocks)
    raise ValueError(f"unknown family {cfg.family!r} (choose from {FAMILIES})")


def _instances_for(
    template: InequalityTemplate, ground, cfg: SearchConfig
) -> list[Instance]:
    if cfg.binding is not None:
        if set(cfg.binding) == set(template.slots):
            return [instantiate(template, ground, cfg.binding)]
        return list(enumerate_instances(template, ground, fixed=cfg.binding))
    if template.constraints and not cfg.auto_filter:
        # natural binding: slots named after parties bind to themselves
        if all(s in ground.labels for s in template.slots):
            return [instantiate(template, ground, {s: s for s in template.slots})]
        raise ValueError(
            "constrained template: give a binding or set auto_filter=True"
        )
    return list(enumerate_instances(template, ground))


@dataclass
class ScanReport:
    config: dict
    template_name: str
    n_trials: int
    n_instances: int
    n_evaluations: int
    n_admissible: int
    min_slack: float | None
    argmin: dict | None
    histogram: dict
    violations: list
    revalidated: bool
    trial_records: list = field(default_factory=list)

    @property
    def violation_found(self) -> bool:
        return bool(self.violations)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "template": self.template_name,
            "n_trials": self.n_trials,
            "n_instances": self.n_instances,
            "n_evaluations": self.n_evaluations,
            "n_admissible": self.n_admissible,
            "min_slack": self.min_slack,
            "argmin": self.argmin,
            "histogram": {str(k): v for k, v in sorted(self.histogram.items())},
            "violations": self.violations,
            "violation_found": self.violation_found,
            "revalidated": self.revalidated,
        }


def _bucket(x: float) -> int:
    return int(np.floor(x / 1e-3))


def random_scan(cfg: SearchConfig) -> ScanReport:
    """Evaluate a template over `trials` random states; deterministic in seed.

    Tracks the minimum slack over admissible instances (constraint residuals
    within tolerance); any violation is recomputed from its seed before being
    reported.
    """
    template = resolve_template(cfg)
    family = family_for(cfg, template)
    from .setfn import GroundSet

    ground = GroundSet(family.labels)
    instances = _instances_for(template, ground, cfg)
    if not instances:
        raise ValueError("no instances to evaluate")

    min_slack = None
    argmin = None
    histogram: dict[int, int] = {}
    violations: list[dict] = []
    records: list[dict] = []
    n_eval = 0
    n_adm = 0

    def eval_trial(state) -> tuple:
        h = entropy_vector(state, block_hints=family.block_hints())
        best = None
        best_inst = None
        best_resid = None
        nonlocal n_eval, n_adm
        for inst in instances:
            n_eval += 1
            resid = 0.0
            if inst.constraints:
                resid = max(abs(c.evaluate(h)) for c in inst.constraints)
            if resid > cfg.tol:
                continue
            n_adm += 1
            val = inst.functional.evaluate(h)
            histogram[_bucket(val)] = histogram.get(_bucket(val), 0) + 1
            if best is None or val < best:
                best, best_inst, best_resid = val, inst, resid
        return best, best_inst, best_resid

    for t in range(cfg.trials):
        seed = trial_seed(cfg.seed, t)
        state = family.build(family.draw(_rng(seed)))
        best, best_inst, best_resid = eval_trial(state)
        records.append(
            {
                "trial": t,
                "seed": f"{seed[0]}:{seed[1]}",
                "min_slack": best,
                "argmin_instance": best_inst.describe() if best_inst else "",
                "max_residual": best_resid,
            }
        )
        if best is None:
            continue
        if min_slack is None or best < min_slack:
            min_slack = best
            argmin = {
                "trial": t,
                "seed": list(seed),
                "instance": best_inst.describe(),
                "value": float(best),
                "residual": float(best_resid),
            }
        if best < -cfg.tol:
            # rebuild independently from the recorded seed before reporting
            state2 = family.build(family.draw(_rng(seed)))
            h2 = entropy_vector(state2)
            val2 = best_inst.functional.evaluate(h2)
            resid2 = max(
                (abs(c.evaluate(h2)) for c in best_inst.constraints), default=0.0
            )
            if val2 < -cfg.tol and resid2 <= cfg.tol:
                violations.append(
                    {
                        "trial": t,
                        "seed": list(seed),
                        "instance": best_inst.describe(),
                        "value": float(val2),
                        "residual": float(resid2),
                    }
                )

    return ScanReport(
        config=cfg.summary(),
        template_name=template.name,
        n_trials=cfg.trials,
        n_instances=len(instances),
        n_evaluations=n_eval,
        n_admissible=n_adm,
        min_slack=None if min_slack is None else float(min_slack),
        argmin=argmin,
        histogram=histogram,
        violations=violations,
        revalidated=bool(violations),
        trial_records=records,
    )


@dataclass
class RefineReport:
    config: dict
    template_name: str
    start_seed: list
    steps: int
    accepted: int
    start_objective: float
    final_objective: float
    final_slack: float | None
    final_residual: float
    final_instance: str
    trajectory: list
    violation: dict | None

    @property
    def violation_found(self) -> bool:
        return self.violation is not None

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "template": self.template_name,
            "start_seed": self.start_seed,
            "steps": self.steps,
            "accepted": self.accepted,
            "start_objective": self.start_objective,
            "final_objective": self.final_objective,
            "final_slack": self.final_slack,
            "final_residual": self.final_residual,
            "final_instance": self.final_instance,
            "trajectory": self.trajectory,
            "violation": self.violation,
            "violation_found": self.violation_found,
        }


def local_refine(cfg: SearchConfig, start_seed=None) -> RefineReport:
    """Coordinate-descent polish of the worst instance from a seed point.

    Objective: min over instances of (slack + penalty * sum of squared
    constraint residuals).  One random coordinate moves per step; the step
    size halves on failure and the walk stops below 1e-8.
    """
    template = resolve_template(cfg)
    family = family_for(cfg, template)
    from .setfn import GroundSet

    ground = GroundSet(family.labels)
    instances = _instances_for(template, ground, cfg)
    if start_seed is None:
        start_seed = trial_seed(cfg.seed, 0)
    start_seed = tuple(start_seed) if isinstance(start_seed, (tuple, list)) else (start_seed,)

    def objective(params):
        state = family.build(params)
        h = entropy_vector(state, block_hints=family.block_hints())
        best = None
        best_parts = None
        for inst in instances:
            val = inst.functional.evaluate(h)
            pen = 0.0
            resid = 0.0
            for c in inst.constraints:
                r = c.evaluate(h)
                resid = max(resid, abs(r))
                pen += r * r
            obj = val + cfg.penalty * pen
            if best is None or obj < best:
                best = obj
                best_parts = (float(val), float(resid), inst)
        return float(best), best_parts

    rng = _rng(start_seed)
    params = family.draw(rng)
    walk_rng = _rng((cfg.seed, 0x5EED))
    obj, parts = objective(params)
    start_obj = obj
    trajectory = [obj]
    step = cfg.step_size
    accepted = 0
    steps = 0
    for _ in range(cfg.refine_steps):
        if step < 1e-8:
            break
        steps += 1
        j = int(walk_rng.integers(0, params.size))
        cand = params.copy()
        cand[j] += step * walk_rng.standard_normal()
        try:
            cand_obj, cand_parts = objective(cand)
        except (ValueError, np.linalg.LinAlgError):
            step *= 0.5
            continue
        if cand_obj < obj:
            params, obj, parts = cand, cand_obj, cand_parts
            accepted += 1
            if len(trajectory) < 200:
                trajectory.append(obj)
        else:
            step *= 0.5

    final_slack, final_resid, final_inst = parts
    violation = None
    if final_slack < -cfg.tol and final_resid <= cfg.tol:
        # revalidate from scratch on the final parameter point
        state = family.build(params)
        h = entropy_vector(state)
        val = final_inst.functional.evaluate(h)
        resid = max((abs(c.evaluate(h)) for c in final_inst.constraints), default=0.0)
        if val < -cfg.tol and resid <= cfg.tol:
            violation = {
                "instance": final_inst.describe(),
                "value": float(val),
                "residual": float(resid),
            }
    return RefineReport(
        config=cfg.summary(),
        template_name=template.name,
        start_seed=list(start_seed),
        steps=steps,
        accepted=accepted,
        start_objective=start_obj,
        final_objective=obj,
        final_slack=final_slack,
        final_residual=final_resid,
        final_instance=final_inst.describe(),
        trajectory=[float(v) for v in trajectory],
        violation=violation,
    )

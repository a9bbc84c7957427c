"""Finite-dimensional multiparty density matrices and their entropy vectors.

Entropies are von Neumann entropies in bits (base-2 logs).  Comparisons on
float results use absolute tolerances; eigenvalues below the clip threshold
are dropped from the log and their mass is reported, never silently ignored.

The constrained family sampled here carries a block decomposition on two
parties: conditioned on the block index k, the state factorizes between the
(A, B, x-first-half) side and the (C, x-second-half) side, which makes both
conditional-independence constraints hold identically.
"""

from __future__ import annotations

import base64
import json
import os
import string
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .setfn import GroundSet, SetFunction
from .inequalities import builtin, instantiate

CLIP = 1e-12
STATE_ATOL = 1e-10
DEFAULT_DIM_CAP = 4096


def dim_cap() -> int:
    raw = os.environ.get("ENTROPIC_MAX_DIM", "")
    if raw:
        try:
            return int(raw)
        except ValueError:
            raise ValueError(f"ENTROPIC_MAX_DIM must be an integer, got {raw!r}") from None
    return DEFAULT_DIM_CAP


def _check_cap(total: int):
    cap = dim_cap()
    if total > cap:
        raise ValueError(
            f"total dimension {total} exceeds cap {cap} (set ENTROPIC_MAX_DIM to raise it)"
        )


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, (tuple, list)):
        return np.random.default_rng(np.random.SeedSequence(entropy=tuple(seed)))
    return np.random.default_rng(np.random.SeedSequence(entropy=seed))


def trial_seed(base_seed: int, trial: int) -> tuple[int, int]:
    """Per-trial seed material: stable, independent streams per trial index."""
    return (base_seed, trial)


class MultipartyState:
    """Density matrix over an ordered tuple of labeled parties.

    The matrix is indexed row-major by the party order.  Construction checks
    shape, hermiticity, and unit trace; `validate='full'` adds a positivity
    check, `validate='none'` skips everything (internal use on matrices that
    are valid by construction).
    """

    __slots__ = ("labels", "dims", "rho")

    def __init__(self, labels, dims, rho, validate: str = "basic"):
        self.labels = tuple(labels)
        self.dims = tuple(int(d) for d in dims)
        if len(self.labels) != len(self.dims):
            raise ValueError("labels and dims must have equal length")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("party labels must be distinct")
        if any(d < 1 for d in self.dims):
            raise ValueError("party dimensions must be >= 1")
        rho = np.asarray(rho, dtype=np.complex128)
        total = 1
        for d in self.dims:
            total *= d
        if rho.shape != (total, total):
            raise ValueError(f"matrix shape {rho.shape} does not match total dim {total}")
        self.rho = rho
        if validate != "none":
            herm = np.max(np.abs(rho - rho.conj().T)) if total else 0.0
            if herm > STATE_ATOL:
                raise ValueError(f"matrix not hermitian (deviation {herm:.3e})")
            tr = abs(np.trace(rho) - 1.0)
            if tr > STATE_ATOL:
                raise ValueError(f"trace deviates from one by {tr:.3e}")
            if validate == "full":
                w = np.linalg.eigvalsh(rho)
                if w.min() < -STATE_ATOL:
                    raise ValueError(f"matrix not positive (min eigenvalue {w.min():.3e})")

    @property
    def total_dim(self) -> int:
        return self.rho.shape[0]

    @property
    def n_parties(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ValueError(f"unknown party label {label!r}") from None

    def ground(self) -> GroundSet:
        return GroundSet(self.labels)

    def dims_of(self, labels: Iterable[str]) -> tuple[int, ...]:
        return tuple(self.dims[self.index(l)] for l in labels)

    def __repr__(self):
        pairs = ", ".join(f"{l}:{d}" for l, d in zip(self.labels, self.dims))
        return f"MultipartyState({pairs})"


def partial_trace(state: MultipartyState, keep) -> MultipartyState:
    """Marginal on `keep` (labels, original order preserved)."""
    if isinstance(keep, str):
        keep = (keep,)
    keep_idx = sorted({state.index(l) for l in keep})
    if not keep_idx:
        raise ValueError("must keep at least one party")
    m = state.n_parties
    if len(keep_idx) == m:
        return state
    letters = string.ascii_letters
    row = [""] * m
    col = [""] * m
    nxt = 0
    out_row = []
    out_col = []
    keep_set = set(keep_idx)
    for i in range(m):
        if i in keep_set:
            row[i] = letters[nxt]
            col[i] = letters[nxt + 1]
            out_row.append(letters[nxt])
            out_col.append(letters[nxt + 1])
            nxt += 2
        else:
            row[i] = col[i] = letters[nxt]
            nxt += 1
    sub = "".join(row) + "".join(col) + "->" + "".join(out_row) + "".join(out_col)
    tensor = state.rho.reshape(state.dims + state.dims)
    reduced = np.einsum(sub, tensor)
    new_dims = tuple(state.dims[i] for i in keep_idx)
    d = int(np.prod(new_dims))
    return MultipartyState(
        tuple(state.labels[i] for i in keep_idx),
        new_dims,
        reduced.reshape(d, d),
        validate="none",
    )


def _entropy_from_eigs(w: np.ndarray) -> tuple[float, float]:
    clipped = float(np.abs(w[w <= CLIP]).sum())
    w = w[w > CLIP]
    if w.size == 0:
        return 0.0, clipped
    return float(-(w * np.log2(w)).sum()), clipped


def von_neumann_entropy(state) -> float:
    """Entropy in bits of a MultipartyState or a raw density matrix."""
    rho = state.rho if isinstance(state, MultipartyState) else np.asarray(state)
    s, _ = _entropy_from_eigs(np.linalg.eigvalsh(rho))
    return s


def _trace_one(mat: np.ndarray, dims: Sequence[int], pos: int) -> np.ndarray:
    pre = int(np.prod(dims[:pos])) if pos else 1
    dk = dims[pos]
    post = int(np.prod(dims[pos + 1:])) if pos + 1 < len(dims) else 1
    t = mat.reshape(pre, dk, post, pre, dk, post)
    out = np.einsum("aibcid->abcd", t)
    return out.reshape(pre * post, pre * post)


def _block_eigs(mat: np.ndarray, dims: Sequence[int], pos: int, blocks) -> np.ndarray | None:
    """Eigenvalues via the block decomposition along party `pos`, or None if
    the matrix is not numerically block diagonal there."""
    pre = int(np.prod(dims[:pos])) if pos else 1
    dk = dims[pos]
    post = int(np.prod(dims[pos + 1:])) if pos + 1 < len(dims) else 1
    t = mat.reshape(pre, dk, post, pre, dk, post)
    off = t.copy()
    eigs = []
    for start, size in blocks:
        sl = slice(start, start + size)
        sub = t[:, sl, :, :, sl, :].reshape(pre * size * post, pre * size * post)
        eigs.append(np.linalg.eigvalsh(sub))
        off[:, sl, :, :, sl, :] = 0
    if np.max(np.abs(off)) > 1e-12:
        return None
    return np.concatenate(eigs)


def entropy_vector(
    state: MultipartyState,
    block_hints: dict | None = None,
    diagnostics: dict | None = None,
) -> SetFunction:
    """Entropies of every nonempty marginal, as a float64 set function.

    `block_hints` maps a party label to its block ranges ((start, size), ...);
    marginals containing a hinted party are diagonalized blockwise after an
    explicit check that the off-block mass vanishes.  This changes cost, not
    values.  When a `diagnostics` dict is supplied, the total eigenvalue mass
    dropped by clipping is accumulated under "clipped_mass".
    """
    gr = state.ground()
    m = gr.size
    values = [0.0] * gr.n_subsets
    hints = []
    clipped_total = 0.0
    if block_hints:
        hints = [(state.index(lab), lab, tuple(blocks)) for lab, blocks in block_hints.items()]

    level = {gr.full_mask: state.rho}
    for count in range(m, 0, -1):
        next_level: dict[int, np.ndarray] = {}
        for mask, mat in level.items():
            idxs = [i for i in range(m) if mask >> i & 1]
            dims = [state.dims[i] for i in idxs]
            w = None
            for pidx, _, blocks in hints:
                if mask >> pidx & 1:
                    w = _block_eigs(mat, dims, idxs.index(pidx), blocks)
                    if w is not None:
                        break
            if w is None:
                w = np.linalg.eigvalsh(mat)
            values[mask], clipped = _entropy_from_eigs(w)
            clipped_total += clipped
            if count > 1:
                for pos, i in enumerate(idxs):
                    child = mask & ~(1 << i)
                    if child and child not in next_level:
                        next_level[child] = _trace_one(mat, dims, pos)
        level = next_level
    if diagnostics is not None:
        diagnostics["clipped_mass"] = diagnostics.get("clipped_mass", 0.0) + clipped_total
    return SetFunction(gr, values, domain="float64")


def purify(state: MultipartyState, new_label: str = "E") -> MultipartyState:
    """Attach a purifying party (dimension = rank of the state) at the end."""
    if new_label in state.labels:
        raise ValueError(f"label {new_label!r} already in use")
    w, v = np.linalg.eigh(state.rho)
    keep = w > CLIP
    w = w[keep]
    v = v[:, keep]
    if w.size == 0:
        raise ValueError("state has no eigenvalue above the clip threshold")
    r = w.size
    d = state.total_dim
    _check_cap(d * r)
    # |psi> = sum_i sqrt(w_i) |v_i> |i>, laid out with the new party last
    vec = np.zeros(d * r, dtype=np.complex128)
    for i in range(w.size):
        vec[i::r] = np.sqrt(w[i]) * v[:, i]
    rho = np.outer(vec, vec.conj())
    return MultipartyState(
        state.labels + (new_label,), state.dims + (r,), rho, validate="none"
    )


@dataclass(frozen=True)
class BlockStructure:
    """Orthogonal decomposition of one party's space into index ranges."""

    party: str
    blocks: tuple[tuple[int, int], ...]  # (start, size) pairs, contiguous
    weights: tuple[float, ...] = ()

    def __post_init__(self):
        if not self.blocks:
            raise ValueError("need at least one block")
        pos = 0
        for start, size in self.blocks:
            if start != pos or size < 1:
                raise ValueError("blocks must be contiguous (start, size) ranges from 0")
            pos = start + size

    @property
    def dim(self) -> int:
        return sum(size for _, size in self.blocks)

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)


def _embed_indices(dims: Sequence[int], ranges: Sequence[tuple[int, int]]) -> np.ndarray:
    """Row-major global indices of the product of per-party index ranges."""
    out = np.zeros(1, dtype=np.int64)
    for d, (start, stop) in zip(dims, ranges):
        arr = np.arange(start, stop, dtype=np.int64)
        out = (out[:, None] * d + arr[None, :]).reshape(-1)
    return out


@dataclass(frozen=True)
class FamilyDims:
    """Dimension layout for the constrained family.

    Party A splits into K blocks (a_blocks), party B into matching blocks
    (b_blocks); each X_i is a pair of halves, the first correlated with the
    (A,B) side and the second with the C side.  Halves of dimension 1 are
    allowed.
    """

    a_blocks: tuple[int, ...]
    b_blocks: tuple[int, ...]
    dim_c: int
    x_halves: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if len(self.a_blocks) != len(self.b_blocks):
            raise ValueError("a_blocks and b_blocks must list the same number of blocks")
        if not self.a_blocks:
            raise ValueError("need at least one block")
        if min(self.a_blocks) < 1 or min(self.b_blocks) < 1 or self.dim_c < 1:
            raise ValueError("dimensions must be >= 1")
        for h in self.x_halves:
            if len(h) != 2 or h[0] < 1 or h[1] < 1:
                raise ValueError("each x entry is a pair of halves >= 1")

    @property
    def n(self) -> int:
        return len(self.x_halves)

    @property
    def n_blocks(self) -> int:
        return len(self.a_blocks)

    @property
    def dim_a(self) -> int:
        return sum(self.a_blocks)

    @property
    def dim_b(self) -> int:
        return sum(self.b_blocks)

    def x_dims(self) -> tuple[int, ...]:
        return tuple(p * q for p, q in self.x_halves)

    def total_dim(self) -> int:
        t = self.dim_a * self.dim_b * self.dim_c
        for d in self.x_dims():
            t *= d
        return t


def default_family_dims(n: int, blocks: int = 2) -> FamilyDims:
    return FamilyDims(
        a_blocks=(1,) * blocks,
        b_blocks=(1,) * blocks,
        dim_c=2,
        x_halves=((2, 2),) * n,
    )


def family_labels(n: int) -> tuple[str, ...]:
    return ("A", "B", "C") + tuple(f"X{i}" for i in range(1, n + 1))


def assemble_constrained_state(
    fdims: FamilyDims,
    weights: Sequence[float],
    chis: Sequence[np.ndarray],
    xis: Sequence[np.ndarray],
) -> tuple[MultipartyState, BlockStructure]:
    """Build sum_k p_k chi_k (x) xi_k with chi_k on (A-block k, B-block k,
    x first halves) and xi_k on (C, x second halves).

    Both constraints I(A:C|B) and I(B:C|A) vanish identically on the result.
    """
    n = fdims.n
    K = fdims.n_blocks
    if not (len(weights) == len(chis) == len(xis) == K):
        raise ValueError("need one weight, chi, and xi per block")
    total = fdims.total_dim()
    _check_cap(total)
    labels = family_labels(n)
    dims = (fdims.dim_a, fdims.dim_b, fdims.dim_c) + fdims.x_dims()
    rho = np.zeros((total, total), dtype=np.complex128)
    a_starts = np.cumsum((0,) + fdims.a_blocks[:-1])
    b_starts = np.cumsum((0,) + fdims.b_blocks[:-1])
    xp = [h[0] for h in fdims.x_halves]
    xq = [h[1] for h in fdims.x_halves]
    for k in range(K):
        ak, bk = fdims.a_blocks[k], fdims.b_blocks[k]
        chi = np.asarray(chis[k], dtype=np.complex128)
        xi = np.asarray(xis[k], dtype=np.complex128)
        d_chi = ak * bk * int(np.prod(xp)) if n else ak * bk
        d_xi = fdims.dim_c * int(np.prod(xq)) if n else fdims.dim_c
        if chi.shape != (d_chi, d_chi):
            raise ValueError(f"chi[{k}] must be {d_chi}x{d_chi}")
        if xi.shape != (d_xi, d_xi):
            raise ValueError(f"xi[{k}] must be {d_xi}x{d_xi}")
        chi_t = chi.reshape([ak, bk] + xp + [ak, bk] + xp)
        xi_t = xi.reshape([fdims.dim_c] + xq + [fdims.dim_c] + xq)
        T = np.tensordot(chi_t, xi_t, axes=0)
        # axes: chi rows (2+n), chi cols (2+n), xi rows (1+n), xi cols (1+n)
        cr, cc, xr, xc = 0, 2 + n, 2 * (2 + n), 2 * (2 + n) + 1 + n
        row = [cr, cr + 1, xr]
        col = [cc, cc + 1, xc]
        for i in range(n):
            row += [cr + 2 + i, xr + 1 + i]
            col += [cc + 2 + i, xc + 1 + i]
        block = T.transpose(row + col)
        dk = ak * bk * fdims.dim_c * int(np.prod(fdims.x_dims())) if n else ak * bk * fdims.dim_c
        block = block.reshape(dk, dk)
        ranges = [
            (int(a_starts[k]), int(a_starts[k]) + ak),
            (int(b_starts[k]), int(b_starts[k]) + bk),
            (0, fdims.dim_c),
        ] + [(0, d) for d in fdims.x_dims()]
        idx = _embed_indices(dims, ranges)
        rho[np.ix_(idx, idx)] += weights[k] * block
    state = MultipartyState(labels, dims, rho, validate="basic")
    bs = BlockStructure(
        party="A",
        blocks=tuple((int(s), int(z)) for s, z in zip(a_starts, fdims.a_blocks)),
        weights=tuple(float(w) for w in weights),
    )
    return state, bs


def random_density(dim: int, rng, rank: int | None = None) -> np.ndarray:
    """Hilbert-Schmidt-style random density matrix (Ginibre G G^dag / trace)."""
    rank = dim if rank is None else rank
    if not 1 <= rank:
        raise ValueError("rank must be >= 1")
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_diagonal_density(dim: int, rng) -> np.ndarray:
    p = rng.standard_exponential(dim)
    return np.diag(p / p.sum()).astype(np.complex128)


def haar_unitary(dim: int, rng) -> np.ndarray:
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def constrained_family_sample(
    n: int,
    blocks: int = 2,
    dims: FamilyDims | None = None,
    seed=0,
    diagonal: bool = False,
) -> tuple[MultipartyState, BlockStructure]:
    """Draw one member of the constrained family.

    Weights come from a flat simplex draw; block factors are Hilbert-Schmidt
    random densities (or random diagonal ones with `diagonal=True`, giving an
    embedded classical distribution).  Deterministic in `seed`.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    fdims = default_family_dims(n, blocks) if dims is None else dims
    if dims is not None and blocks not in (fdims.n_blocks, 2):
        raise ValueError("blocks disagrees with dims")
    if fdims.n != n:
        raise ValueError(f"dims describe {fdims.n} x-parties, asked for {n}")
    rng = _rng(seed)
    K = fdims.n_blocks
    w = rng.standard_exponential(K)
    weights = w / w.sum()
    xp = int(np.prod([h[0] for h in fdims.x_halves])) if n else 1
    xq = int(np.prod([h[1] for h in fdims.x_halves])) if n else 1
    make = random_diagonal_density if diagonal else random_density
    chis = [make(fdims.a_blocks[k] * fdims.b_blocks[k] * xp, rng) for k in range(K)]
    xis = [make(fdims.dim_c * xq, rng) for k in range(K)]
    return assemble_constrained_state(fdims, weights, chis, xis)


def lw05_family_sample(
    blocks: int = 2,
    block_dims: tuple[int, int, int] = (1, 1, 2),
    dim_c: int = 2,
    seed=0,
) -> MultipartyState:
    """Four-party family satisfying all three constraints of the earlier
    constrained inequality: per block k the state is a product
    chi_A^k (x) chi_B^k (x) omega_CD^k with A, B, and D all blocked, the
    last factor joint on C and the k-th D block.

    I(A:C|B), I(B:C|A), and I(A:B|D) all vanish identically, while the
    C-D correlation inside omega keeps the inequality slack generically
    strictly positive.
    """
    da, db, dd = block_dims
    K = blocks
    dims = (da * K, db * K, dim_c, dd * K)
    total = int(np.prod(dims))
    _check_cap(total)
    rng = _rng(seed)
    w = rng.standard_exponential(K)
    weights = w / w.sum()
    rho = np.zeros((total, total), dtype=np.complex128)
    for k in range(K):
        fa = random_density(da, rng)
        fb = random_density(db, rng)
        fcd = random_density(dim_c * dd, rng)
        blk = np.kron(np.kron(fa, fb), fcd)
        ranges = [
            (k * da, (k + 1) * da),
            (k * db, (k + 1) * db),
            (0, dim_c),
            (k * dd, (k + 1) * dd),
        ]
        idx = _embed_indices(dims, ranges)
        rho[np.ix_(idx, idx)] += weights[k] * blk
    return MultipartyState(("A", "B", "C", "D"), dims, rho, validate="basic")


def measure_and_register(
    state: MultipartyState, bs: BlockStructure, register_label: str = "R"
) -> MultipartyState:
    """Measure the block index of `bs.party` and record it in a new register.

    The input must already be block diagonal in that party (off-block mass
    below 1e-10); the output appends a dimension-K register carrying the
    outcome, leaving every marginal on the original parties unchanged.
    """
    if register_label in state.labels:
        raise ValueError(f"label {register_label!r} already in use")
    pos = state.index(bs.party)
    if bs.dim != state.dims[pos]:
        raise ValueError(
            f"blocks cover dimension {bs.dim}, party {bs.party!r} has {state.dims[pos]}"
        )
    K = bs.n_blocks
    d = state.total_dim
    _check_cap(d * K)
    pre = int(np.prod(state.dims[:pos])) if pos else 1
    dk = state.dims[pos]
    post = int(np.prod(state.dims[pos + 1:])) if pos + 1 < len(state.dims) else 1
    t = state.rho.reshape(pre, dk, post, pre, dk, post)
    off = t.copy()
    parts = []
    for start, size in bs.blocks:
        sl = slice(start, start + size)
        parts.append((sl, t[:, sl, :, :, sl, :]))
        off[:, sl, :, :, sl, :] = 0
    off_mass = float(np.max(np.abs(off)))
    if off_mass > STATE_ATOL:
        raise ValueError(
            f"state is not block diagonal in {bs.party!r} (off-block mass {off_mass:.3e})"
        )
    sigma = np.zeros((d * K, d * K), dtype=np.complex128)
    view = sigma.reshape(d, K, d, K)
    for k, (sl, _) in enumerate(parts):
        blocked = np.zeros_like(t)
        blocked[:, sl, :, :, sl, :] = t[:, sl, :, :, sl, :]
        view[:, k, :, k] = blocked.reshape(d, d)
    return MultipartyState(
        state.labels + (register_label,),
        state.dims + (K,),
        sigma,
        validate="none",
    )


_THEOREMS = ("thm1", "thm1p", "thm2", "thm2p")


@dataclass
class TheoremReport:
    """Numerical check of the constrained inequalities and their proof trace."""

    n: int
    tol: float
    constraint_residuals: dict
    slacks: dict
    register_entropy: float
    cond_register_on_a: float
    cond_register_on_b: float
    min_register_monotonicity: float
    register_vs_correlation: float
    min_chain_slack: float
    aggregate_slack: float
    min_data_processing: float
    marginal_drift: float
    clipped_mass: float

    @property
    def passed(self) -> bool:
        ok = all(abs(r) <= 1e-9 for r in self.constraint_residuals.values())
        ok = ok and all(s >= -1e-9 for s in self.slacks.values())
        ok = ok and self.cond_register_on_a <= self.tol
        ok = ok and self.cond_register_on_b <= self.tol
        ok = ok and self.min_register_monotonicity >= -self.tol
        ok = ok and self.register_vs_correlation >= -self.tol
        ok = ok and self.min_chain_slack >= -self.tol
        ok = ok and self.aggregate_slack >= -self.tol
        ok = ok and self.min_data_processing >= -self.tol
        ok = ok and self.marginal_drift <= STATE_ATOL
        return ok

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "tol": self.tol,
            "passed": self.passed,
            "constraint_residuals": dict(self.constraint_residuals),
            "slacks": dict(self.slacks),
            "register_entropy": self.register_entropy,
            "cond_register_on_a": self.cond_register_on_a,
            "cond_register_on_b": self.cond_register_on_b,
            "min_register_monotonicity": self.min_register_monotonicity,
            "register_vs_correlation": self.register_vs_correlation,
            "min_chain_slack": self.min_chain_slack,
            "aggregate_slack": self.aggregate_slack,
            "min_data_processing": self.min_data_processing,
            "marginal_drift": self.marginal_drift,
            "clipped_mass": self.clipped_mass,
        }


def check_theorem(
    state: MultipartyState,
    bs: BlockStructure,
    which: Sequence[str] = _THEOREMS,
    tol: float = 1e-8,
) -> TheoremReport:
    """Evaluate the four constrained inequalities on a family state and walk
    the measurement argument behind them.

    The state must live on parties (A, B, C, X1..Xn).  Slacks come from the
    entropy vector of the state itself; the proof-trace quantities come from
    the post-measurement state with its outcome register.
    """
    labels = state.labels
    n = len(labels) - 3
    if labels[:3] != ("A", "B", "C") or labels[3:] != tuple(f"X{i}" for i in range(1, n + 1)):
        raise ValueError("check_theorem expects parties (A, B, C, X1..Xn)")
    if n < 1:
        raise ValueError("need at least one X party")
    for name in which:
        if name not in _THEOREMS:
            raise ValueError(f"unknown theorem {name!r}")

    gr = GroundSet(labels)
    diag: dict = {}
    hints = {bs.party: bs.blocks}
    h_rho = entropy_vector(state, block_hints=hints, diagnostics=diag)

    binding = {"A": "A", "B": "B", "C": "C"}
    binding.update({f"X{i}": f"X{i}" for i in range(1, n + 1)})
    template = builtin("c_n", n)
    inst = instantiate(template, gr, binding)
    residuals = {
        "I(A:C|B)": float(inst.constraints[0].evaluate(h_rho)),
        "I(B:C|A)": float(inst.constraints[1].evaluate(h_rho)),
    }
    slacks = {}
    for name in which:
        t = builtin(name, n) if name != "thm1" else template
        slacks[name] = float(instantiate(t, gr, binding).functional.evaluate(h_rho))

    sigma = measure_and_register(state, bs, "R")
    sig_hints = {"R": tuple((k, 1) for k in range(bs.n_blocks)), bs.party: bs.blocks}
    h_sigma = entropy_vector(sigma, block_hints=sig_hints, diagnostics=diag)
    sgr = h_sigma.ground

    def S(labels_):
        return h_sigma(labels_)

    s_r = S("R")
    cond_a = abs(S(("A", "R")) - S(("A",)))
    cond_b = abs(S(("B", "R")) - S(("B",)))

    r_bit = sgr.mask_of("R")
    min_mono = min(
        h_sigma.values[mask | r_bit] - h_sigma.values[mask]
        for mask in range(1, sgr.n_subsets)
        if not mask & r_bit
    )

    i_ab_c = S(("A", "B")) + S(("C",)) - S(("A", "B", "C"))
    reg_vs_corr = s_r - i_ab_c

    chain = []
    dp = []
    for i in range(1, n + 1):
        xi = f"X{i}"
        s_r_given_xi = S((xi, "R")) - S((xi,))
        i_ab_xi_sigma = (
            S(("A", xi)) + S(("B", xi)) - S((xi,)) - S(("A", "B", xi))
        )
        chain.append(i_ab_xi_sigma - s_r_given_xi)
        i_ab_xi_rho = (
            h_rho(("A", xi)) + h_rho(("B", xi)) - h_rho((xi,)) - h_rho(("A", "B", xi))
        )
        dp.append(i_ab_xi_rho - i_ab_xi_sigma)
    aggregate = sum(chain)

    drift = 0.0
    for sub in (tuple(f"X{i}" for i in range(1, n + 1)), ("A", "B", "C")):
        a = partial_trace(state, sub).rho
        b = partial_trace(sigma, sub).rho
        drift = max(drift, float(np.max(np.abs(a - b))))

    return TheoremReport(
        n=n,
        tol=tol,
        constraint_residuals=residuals,
        slacks=slacks,
        register_entropy=float(s_r),
        cond_register_on_a=float(cond_a),
        cond_register_on_b=float(cond_b),
        min_register_monotonicity=float(min_mono),
        register_vs_correlation=float(reg_vs_corr),
        min_chain_slack=float(min(chain)),
        aggregate_slack=float(aggregate),
        min_data_processing=float(min(dp)),
        marginal_drift=drift,
        clipped_mass=float(diag.get("clipped_mass", 0.0)),
    )


# --- serialization ---

STATE_FORMAT = "density-matrix/complex128-le/v1"


def state_to_obj(state: MultipartyState, meta: dict | None = None) -> dict:
    data = np.ascontiguousarray(state.rho, dtype="<c16").tobytes()
    obj = {
        "format": STATE_FORMAT,
        "labels": list(state.labels),
        "dims": list(state.dims),
        "matrix_b64": base64.b64encode(data).decode("ascii"),
    }
    if meta:
        obj["meta"] = meta
    return obj


def state_from_obj(obj) -> MultipartyState:
    if not isinstance(obj, dict):
        raise ValueError("state object must be a JSON object")
    for key in ("labels", "dims", "matrix_b64"):
        if key not in obj:
            raise ValueError(f"state object missing key {key!r}")
    if obj.get("format", STATE_FORMAT) != STATE_FORMAT:
        raise ValueError(f"unsupported state format {obj.get('format')!r}")
    labels = tuple(obj["labels"])
    dims = tuple(int(d) for d in obj["dims"])
    total = 1
    for d in dims:
        total *= d
    raw = base64.b64decode(obj["matrix_b64"])
    if len(raw) != total * total * 16:
        raise ValueError("matrix payload has the wrong size")
    mat = np.frombuffer(raw, dtype="<c16").astype(np.complex128).reshape(total, total)
    return MultipartyState(labels, dims, mat, validate="full")


def state_to_json(state: MultipartyState, meta: dict | None = None) -> str:
    return json.dumps(state_to_obj(state, meta))


def state_from_json(text: str) -> MultipartyState:
    return state_from_obj(json.loads(text))

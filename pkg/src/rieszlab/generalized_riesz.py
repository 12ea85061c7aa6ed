"""Generalized Riesz products built from lacunary polynomial blocks.

A block ``W(j, L)`` is a finite family of homogeneous holomorphic polynomials
of degrees ``>= j`` with pairwise degree gaps ``>= L``, ``|sum W| <= 1`` on
the sphere and ``sum |W| >= delta``.  The constructor multiplies

    N_{k+1} = N_k (1 + Re[a_{k+1} R(j_{k+1}, L_{k+1})]),   R = sum_kappa W_kappa,

choosing ``L_{k+1} = j_{k+1} = 2 deg N_k + 2`` so that the new factor cannot
reach back into the spectral box of ``N_k``.  Dimension ``n = 1`` is the
circle, where blocks are monomials.

Degrees here are formal: ``deg N_k`` is the sum of the top block degrees,
which does not depend on the coefficients, so runs with different ``a``
share the same indices.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .circle_riesz import (TrigPoly, circle_points, default_grid, exp_phase, hellinger_affinity,
                           l1_distance)
from .rw_unitary import certify_rw
from .sphere_poly import (SpherePoly, integrate_sphere, product_bidegree_rule, sample_sphere,
                          slice_restrict, spectrum)
from .sphere_riesz import looks_square_summable

EXACT_SPECTRUM_TERMS = 20_000
EXPAND_CAP = 2_000_000
SUPERSET_CAP = 200_000
MAX_RETRIES = 5
SPECTRUM_TOL = 1e-10


class BlockError(ValueError):
    pass


class DisjointnessError(RuntimeError):
    pass


# --------------------------------------------------------------------------
# blocks
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LacunaryBlock:
    j: int
    L: int
    n: int
    degrees: tuple
    members: tuple
    delta: float
    sup_bound: float
    seed: int | None = None

    def __post_init__(self):
        if not self.members:
            raise BlockError("empty block")
        for d, w in zip(self.degrees, self.members):
            if not (w.is_holomorphic() and w.is_homogeneous() and w.degree == d):
                raise BlockError(f"member of degree {d} is not homogeneous holomorphic of that degree")
        if min(self.degrees) < self.j:
            raise BlockError(f"member degree {min(self.degrees)} < j = {self.j}")
        ds = sorted(self.degrees)
        if any(b - a < self.L for a, b in zip(ds, ds[1:])):
            raise BlockError(f"degree gap below L = {self.L}")
        if self.sup_bound > 1 + 1e-12:
            raise BlockError(f"certified sup bound {self.sup_bound} > 1")
        if not self.delta > 0:
            raise BlockError("block delta must be positive")

    @property
    def max_degree(self) -> int:
        return max(self.degrees)

    def sum_poly(self) -> SpherePoly:
        out = SpherePoly.zero(self.n)
        for w in self.members:
            out = out + w
        return out

    def values(self, points) -> np.ndarray:
        """Member values, shape (P, len(members))."""
        Z = np.asarray(points, dtype=complex).reshape(-1, self.n)
        return np.column_stack([w(Z) for w in self.members])

    def slice(self, zeta) -> TrigPoly:
        """``lambda -> R(lambda zeta)``."""
        out = TrigPoly.from_dict({})
        for w in self.members:
            out = out + slice_restrict(w, zeta)
        return out

    def to_json(self) -> dict:
        return {"j": self.j, "L": self.L, "n": self.n, "degrees": list(self.degrees),
                "delta": self.delta, "sup_bound": self.sup_bound, "seed": self.seed,
                "members": [w.to_json() for w in self.members]}


def build_block_circle(j: int, L: int, D: int = 1) -> LacunaryBlock:
    """Monomials ``z^{d}/D`` with ``d = j, j + L, ..., j + (D-1) L``."""
    degrees = tuple(j + k * L for k in range(D))
    members = tuple(SpherePoly.monomial([d], c=1.0 / D) for d in degrees)
    # on |z| = 1 every member has modulus 1/D, so sum |W| is identically 1
    return LacunaryBlock(j, L, 1, degrees, members, 1.0, 1.0)


def build_block_sphere(j: int, L: int, D: int = 3, n: int = 2, trials: int = 64, seed: int = 0,
                       delta_samples: int = 10_000, floor: float | None = None) -> LacunaryBlock:
    """Block from certified RW polynomials ``R_d / D`` at ``d = j + k L``.

    Each ``R_d`` has certified sup at most 1, so ``|sum W| <= 1``.  The
    reported delta is the minimum of ``sum |W|`` over sampled points.
    """
    degrees = tuple(j + k * L for k in range(D))
    members = tuple(certify_rw(d, n, trials, seed).poly / D for d in degrees)
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(j), int(L)))
    Z = sample_sphere(n, delta_samples, int(ss.generate_state(1, np.uint64)[0]))
    delta = float(np.abs(np.column_stack([w(Z) for w in members])).sum(axis=1).min())
    if floor is not None and delta < floor:
        raise BlockError(f"sampled block delta {delta:.4g} < floor {floor}; raise D or trials")
    return LacunaryBlock(j, L, n, degrees, members, delta, 1.0, int(seed))


class CircleBlocks:
    """Block factory on the circle."""

    def __init__(self, D: int = 1):
        self.D = D
        self.n = 1
        self._cache: dict = {}

    def __call__(self, j: int, L: int) -> LacunaryBlock:
        key = (j, L)
        if key not in self._cache:
            self._cache[key] = build_block_circle(j, L, self.D)
        return self._cache[key]


class SphereBlocks:
    """Block factory on S; blocks depend only on ``(seed, j, L)``."""

    def __init__(self, n: int = 2, D: int = 3, trials: int = 64, seed: int = 0,
                 delta_samples: int = 10_000, floor: float | None = None):
        self.n, self.D, self.trials, self.seed = n, D, trials, seed
        self.delta_samples, self.floor = delta_samples, floor
        self._cache: dict = {}

    def __call__(self, j: int, L: int) -> LacunaryBlock:
        key = (j, L)
        if key not in self._cache:
            self._cache[key] = build_block_sphere(j, L, self.D, self.n, self.trials, self.seed,
                                                  self.delta_samples, self.floor)
        return self._cache[key]


@dataclass(eq=False)
class GeneralizedPair:
    factory: Callable[[int, int], LacunaryBlock]
    a: tuple
    j1: int = 1

    def __post_init__(self):
        self.a = tuple(complex(x) for x in self.a)
        bad = [k for k, x in enumerate(self.a) if not abs(x) < 1]
        if bad:
            raise ValueError(f"|a_k| < 1 violated at k={bad[0] + 1}")

    @property
    def n(self) -> int:
        return self.factory.n


# --------------------------------------------------------------------------
# construction
# --------------------------------------------------------------------------


@dataclass
class StepRecord:
    k: int
    j: int
    L: int
    M: int
    degree: int
    mass: float
    disjoint: bool
    method: str
    min_value: float
    block_degrees: list
    block_delta: float
    retries: int = 0

    def to_json(self) -> dict:
        return {"k": self.k, "j": self.j, "L": self.L, "M": self.M, "degree": self.degree,
                "mass": self.mass, "disjoint": self.disjoint, "method": self.method,
                "min_value": self.min_value, "block_degrees": self.block_degrees,
                "block_delta": self.block_delta, "retries": self.retries}


@dataclass(eq=False)
class GeneralizedProductState:
    n: int
    kappa: int = 0
    J: list = field(default_factory=list)
    L: list = field(default_factory=list)
    M: list = field(default_factory=list)
    degrees: list = field(default_factory=lambda: [0])
    a: list = field(default_factory=list)
    blocks: list = field(default_factory=list)
    partial: object = None
    superset: set | None = None
    audit: list = field(default_factory=list)

    @classmethod
    def initial(cls, n: int) -> "GeneralizedProductState":
        one = TrigPoly.constant(1.0) if n == 1 else SpherePoly.constant(n)
        return cls(n, partial=one, superset={(0, 0)})

    @property
    def degree(self) -> int:
        return self.degrees[-1]

    def copy(self) -> "GeneralizedProductState":
        return GeneralizedProductState(self.n, self.kappa, list(self.J), list(self.L), list(self.M),
                                       list(self.degrees), list(self.a), list(self.blocks),
                                       self.partial,
                                       None if self.superset is None else set(self.superset),
                                       list(self.audit))

    def factor(self, k: int):
        """Factor ``k`` (1-based) as a TrigPoly (circle) or SpherePoly."""
        return _factor(self.blocks[k - 1], self.a[k - 1])

    def values(self, points, kappa: int | None = None) -> np.ndarray:
        """Pointwise ``N_kappa`` on S (unit complex numbers when n = 1)."""
        kappa = self.kappa if kappa is None else kappa
        Z = np.asarray(points, dtype=complex).reshape(-1, self.n)
        out = np.ones(Z.shape[0])
        for k in range(kappa):
            out *= 1 + (self.a[k] * self.blocks[k].values(Z).sum(axis=1)).real
        return out

    def audit_json(self, **extra) -> dict:
        return {**extra, "n": self.n, "J": list(self.J),
                "steps": [r.to_json() for r in self.audit]}


def _factor(block: LacunaryBlock, a: complex):
    if block.n == 1:
        R = block.slice([1.0])
        return TrigPoly.constant(1.0) + TrigPoly._raw(R.freqs, R.coeffs * (a / 2)) + \
            TrigPoly._raw(-R.freqs[::-1], np.conj(R.coeffs[::-1]) * (np.conj(a) / 2))
    R = block.sum_poly()
    return SpherePoly.constant(block.n) + R * (a / 2) + R.conj() * (np.conj(a) / 2)


def _net_degree(p) -> np.ndarray:
    if isinstance(p, TrigPoly):
        return p.freqs
    bd = p.bidegrees()
    return bd[:, 0] - bd[:, 1]


def _keep(p, mask):
    if isinstance(p, TrigPoly):
        return TrigPoly._raw(p.freqs[mask], p.coeffs[mask])
    return SpherePoly(p.n, p.exps[mask], p.coeffs[mask])


def _pruned_mass(factors: list, top_degrees: list) -> float:
    """Exact total mass of ``prod factors``, dropping terms whose net degree
    the remaining factors can no longer cancel."""
    if not factors:
        return 1.0
    remaining = sum(top_degrees)
    f0 = factors[0]
    acc = TrigPoly.constant(1.0) if isinstance(f0, TrigPoly) else SpherePoly.constant(f0.n)
    for fac, d in zip(factors[::-1], top_degrees[::-1]):
        remaining -= d
        acc = acc * fac
        acc = _keep(acc, np.abs(_net_degree(acc)) <= remaining)
    return float((acc.coeff(0) if isinstance(acc, TrigPoly) else integrate_sphere(acc)).real)


def _freq_set(p: TrigPoly, tol: float = SPECTRUM_TOL) -> set[int]:
    return {int(f) for f, c in zip(p.freqs, p.coeffs) if abs(c) > tol}


def _outside_box(pairs, M: int) -> bool:
    return all(p > M or q > M for p, q in pairs)


def _superset_step(S: set, degrees: Sequence[int]) -> set:
    """Harmonic bidegrees that ``N_k Re[a R]`` can reach, by the product rule."""
    out = set()
    for pq in S:
        for d in degrees:
            out |= product_bidegree_rule(pq, (d, 0))
            out |= product_bidegree_rule(pq, (0, d))
    return out


def _min_value(state: GeneralizedProductState, samples: int, seed: int) -> float:
    if state.n == 1:
        N = default_grid(state.degree)
        theta = 2 * np.pi * np.arange(N) / N
        return float(state.values(np.exp(1j * theta)).min())
    return float(state.values(sample_sphere(state.n, samples, seed)).min())


def generalized_step(state: GeneralizedProductState, pair: GeneralizedPair, verify: bool = True,
                     samples: int = 1000, seed: int = 0,
                     max_retries: int = MAX_RETRIES) -> GeneralizedProductState:
    """One inductive step with exact spectral-disjointness verification."""
    k = state.kappa + 1
    if k > len(pair.a):
        raise ValueError(f"no coefficient for step {k}")
    M = state.degree
    if k == 1:
        j, L = pair.j1, 1
    else:
        j = L = 2 * M + 2
    a = pair.a[k - 1]
    new = state.copy()
    for attempt in range(max_retries + 1):
        block = pair.factory(j, L)
        gaps = sorted(block.degrees)
        if min(gaps) < j or any(y - x < L for x, y in zip(gaps, gaps[1:])):
            raise DisjointnessError(f"block at step {k} violates the degree/gap requirements")
        fac = _factor(block, a)
        disjoint, method, expanded, superset = True, "skipped", None, None
        if verify:
            if state.partial is not None and len(state.partial) * len(fac) <= EXPAND_CAP:
                expanded = state.partial * fac
                diff = expanded - state.partial
                if state.n == 1:
                    disjoint = all(abs(f) > M for f in _freq_set(diff))
                    method = "exact"
                elif len(diff) <= EXACT_SPECTRUM_TERMS:
                    disjoint = _outside_box(spectrum(diff), M)
                    method = "exact"
            if method == "skipped":
                if state.n == 1:
                    # every new frequency is s + e d with |s| <= M, d >= j, e = +-1
                    disjoint = min(block.degrees) - M > M
                    method = "box"
                elif state.superset is not None and \
                        len(state.superset) * len(block.degrees) <= SUPERSET_CAP:
                    reach = _superset_step(state.superset, block.degrees)
                    disjoint = _outside_box(reach, M)
                    superset = state.superset | reach
                    method = "rule"
                else:
                    disjoint = min(block.degrees) - M > M
                    method = "box"
            if not disjoint:
                j *= 2
                continue
        break
    else:
        raise DisjointnessError(f"step {k}: no disjoint index found after {max_retries} retries")

    if state.n != 1 and superset is None and state.superset is not None and verify:
        reach = None
        if len(state.superset) * len(block.degrees) <= SUPERSET_CAP:
            reach = _superset_step(state.superset, block.degrees)
        superset = None if reach is None else state.superset | reach
    new.kappa = k
    new.J.append(j)
    new.L.append(L)
    new.M.append(M)
    new.degrees.append(M + block.max_degree)
    new.a.append(a)
    new.blocks.append(block)
    new.partial = expanded
    new.superset = superset
    if verify:
        if expanded is not None:
            mass = float((expanded.coeff(0) if state.n == 1 else integrate_sphere(expanded)).real)
        else:
            mass = _pruned_mass([new.factor(i) for i in range(1, k + 1)],
                                [b.max_degree for b in new.blocks])
        min_val = _min_value(new, samples, seed)
        new.audit.append(StepRecord(k, j, L, M, new.degree, mass, bool(disjoint), method, min_val,
                                    list(block.degrees), block.delta, attempt))
    return new


def generalized_construct(pair: GeneralizedPair, kappa_max: int, verify: bool = True,
                          samples: int = 1000, seed: int = 0) -> GeneralizedProductState:
    state = GeneralizedProductState.initial(pair.n)
    for _ in range(kappa_max):
        state = generalized_step(state, pair, verify=verify, samples=samples, seed=seed)
    return state


def check_audit(state: GeneralizedProductState, mass_tol: float = 1e-10,
                neg_tol: float = 1e-10) -> list[str]:
    """Invariant violations recorded in the audit trail (empty when all hold)."""
    problems = []
    for r in state.audit:
        if not r.disjoint:
            problems.append(f"step {r.k}: spectra not disjoint")
        if abs(r.mass - 1) > mass_tol:
            problems.append(f"step {r.k}: mass {r.mass!r}")
        if r.min_value < -neg_tol:
            problems.append(f"step {r.k}: negative value {r.min_value:.3g}")
        if r.k > 1 and r.L != 2 * r.M + 2:
            problems.append(f"step {r.k}: L = {r.L} != 2 deg + 2 = {2 * r.M + 2}")
        gaps = sorted(r.block_degrees)
        if any(y - x < r.L for x, y in zip(gaps, gaps[1:])) or gaps[0] < r.j:
            problems.append(f"step {r.k}: block degrees {gaps} violate j/L")
        if not r.block_delta > 0:
            problems.append(f"step {r.k}: block delta {r.block_delta}")
    return problems


def generalized_slice(state: GeneralizedProductState, zeta, kappa: int | None = None,
                      path: str = "blocks") -> TrigPoly:
    """``lambda -> N_kappa(lambda zeta)``.

    ``blocks`` runs the circle construction on the sliced blocks;
    ``restrict`` restricts the expanded partial product (needs ``kappa`` to
    be the current step and the product to be expanded).
    """
    kappa = state.kappa if kappa is None else kappa
    if path == "restrict":
        if kappa != state.kappa or state.partial is None:
            raise ValueError("restrict path needs the expanded current partial product")
        if state.n == 1:
            z = complex(np.asarray(zeta, dtype=complex).reshape(-1)[0])
            p = state.partial
            return TrigPoly._raw(p.freqs, p.coeffs * z ** p.freqs.astype(float))
        return slice_restrict(state.partial, zeta)
    if path != "blocks":
        raise ValueError(f"unknown path {path!r}")
    out = TrigPoly.constant(1.0)
    for k in range(kappa):
        R = state.blocks[k].slice(zeta)
        a = state.a[k]
        fac = TrigPoly.constant(1.0) + TrigPoly._raw(R.freqs, R.coeffs * (a / 2)) + \
            TrigPoly._raw(-R.freqs[::-1], np.conj(R.coeffs[::-1]) * (np.conj(a) / 2))
        out = out * fac
    return out


# --------------------------------------------------------------------------
# singularity experiments
# --------------------------------------------------------------------------


@dataclass
class GeneralizedRow:
    kappa: int
    mean_affinity: float
    mean_l1: float
    stderr: float


GENERALIZED_HEADER = ("kappa", "mean_affinity", "mean_l1", "stderr")


def _slice_grid_values(block_vals: list, a: Sequence[complex], degrees: list, u: np.ndarray,
                       kappas: Sequence[int]) -> dict:
    """Running slice products at phases ``u`` for one direction, keyed by kappa."""
    want = set(kappas)
    out = {}
    vals = np.ones(u.size)
    if 0 in want:
        out[0] = vals.copy()
    for k, (c, x, ds) in enumerate(zip(block_vals, a, degrees), start=1):
        R = np.zeros(u.size, dtype=complex)
        for ck, d in zip(c, ds):
            R += ck * exp_phase(d, u)
        vals = vals * (1 + (x * R).real)
        if k in want:
            out[k] = vals.copy()
    return out


def generalized_singularity_experiment(pair_a: GeneralizedPair, pair_b: GeneralizedPair,
                                       kappa_max: int, grid_size: int | None = None,
                                       zeta_count: int | None = None, seed: int = 0,
                                       shifts: int = 8, kappas: Sequence[int] | None = None
                                       ) -> list[GeneralizedRow]:
    """Affinity and L1 between two generalized products per kappa.

    On the circle the products are compared directly on ``shifts`` randomly
    offset grids; on the sphere the comparison is averaged over ``zeta_count``
    sampled slices.  ``stderr`` is the spread of the L1 estimate.
    """
    if looks_square_summable(np.asarray(pair_a.a[:kappa_max]) - np.asarray(pair_b.a[:kappa_max])):
        warnings.warn("a - b looks square summable; no separation is expected", stacklevel=2)
    sa = generalized_construct(pair_a, kappa_max, verify=False)
    sb = generalized_construct(pair_b, kappa_max, verify=False)
    if sa.J != sb.J or [b.degrees for b in sa.blocks] != [b.degrees for b in sb.blocks]:
        raise ValueError("the two constructions chose different indices")
    kappas = sorted(set(kappas)) if kappas is not None else list(range(1, kappa_max + 1))
    N = int(grid_size) if grid_size else default_grid(sa.degree)
    degs = [list(b.degrees) for b in sa.blocks]
    if sa.n == 1:
        dirs = [np.ones((1, 1), dtype=complex)] * max(int(shifts), 1)
    else:
        if not zeta_count:
            raise ValueError("sphere mode needs zeta_count")
        dirs = [z.reshape(1, -1) for z in sample_sphere(sa.n, zeta_count, seed)]
    aff = np.empty((len(dirs), len(kappas)))
    l1 = np.empty_like(aff)
    for i, z in enumerate(dirs):
        # on the circle the points carry the phase and z = 1
        u, _ = circle_points(sa.degree, N, i, seed)
        bva = [b.values(z)[0] for b in sa.blocks]
        bvb = [b.values(z)[0] for b in sb.blocks]
        ga = _slice_grid_values(bva, sa.a, degs, u, kappas)
        gb = _slice_grid_values(bvb, sb.a, degs, u, kappas)
        for c, k in enumerate(kappas):
            aff[i, c] = hellinger_affinity(ga[k], gb[k])
            l1[i, c] = l1_distance(ga[k], gb[k])
    m = len(dirs)
    rows = []
    for c, k in enumerate(kappas):
        se = float(l1[:, c].std(ddof=1) / math.sqrt(m)) if m > 1 else 0.0
        rows.append(GeneralizedRow(k, float(aff[:, c].mean()), float(l1[:, c].mean()), se))
    return rows

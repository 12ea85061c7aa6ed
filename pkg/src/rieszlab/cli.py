"""Command-line experiments.

Every subcommand writes CSV (curves) or JSON (objects, audits) to ``--out``
or stdout.  CSV outputs of stochastic commands get a ``<out>.meta.json``
sidecar holding the seed and all parameters so runs can be replayed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import astuple

import numpy as np

from .circle_riesz import (CoeffSpec, dichotomy_curve, lacunary_sequence, peyriere_curve)
from .generalized_riesz import (GENERALIZED_HEADER, CircleBlocks, GeneralizedPair, SphereBlocks,
                                check_audit, generalized_construct,
                                generalized_singularity_experiment)
from .rw_unitary import (RWCertificationError, RWSequence, build_rw_sequence, haar_unitaries,
                         scrambling_experiment)
from .sphere_poly import SpherePoly, sample_sphere
from .sphere_riesz import (SINGULARITY_HEADER, ExpansionCapError, RieszTriple,
                           mutual_singularity_experiment, slice_decomposition_check)


class InvariantError(RuntimeError):
    pass


# --------------------------------------------------------------------------
# output helpers
# --------------------------------------------------------------------------


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(x)) if isinstance(x, float) else x for x in r])
    return buf.getvalue()


def _json_text(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def _params(args) -> dict:
    skip = {"func", "config", "out", "curve_out"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _write_csv(args, header, rows) -> None:
    _emit(_csv_text(header, rows), args.out)
    if args.out not in (None, "-"):
        _emit(_json_text({"seed": args.seed, "params": _params(args)}), args.out + ".meta.json")


def _coeffs(text: str, count: int) -> list[complex]:
    return CoeffSpec.parse(text).sequence(count)


def _load_rw(path: str) -> RWSequence:
    with open(path) as fh:
        return RWSequence.from_json(json.load(fh))


def _rw_for(args, degrees) -> RWSequence:
    if args.rw:
        return _load_rw(args.rw)
    return build_rw_sequence(args.n, sorted(set(degrees)), args.trials, args.seed)


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def cmd_circle_dichotomy(args) -> None:
    J = lacunary_sequence(args.kappa_max, args.lacunary_base)
    rows = dichotomy_curve(args.coeffs, J, args.kappa_max, args.grid, seed=args.seed)
    _write_csv(args, ("kappa", "l2_norm_sq", "affinity", "l1_distance"), [astuple(r) for r in rows])


def cmd_circle_peyriere(args) -> None:
    J = lacunary_sequence(args.kappa_max, args.lacunary_base)
    rows = peyriere_curve(args.coeffs, args.coeffs_b, J, args.kappa_max, args.grid,
                          args.shifts, args.seed)
    _write_csv(args, ("kappa", "affinity", "l1_distance", "l1_stderr"), [astuple(r) for r in rows])


def cmd_rw_gen(args) -> None:
    degrees = args.degrees or list(range(1, args.deg_max + 1))
    seq = build_rw_sequence(args.n, degrees, args.trials, args.seed, args.floor)
    seq.check_invariants(args.floor)
    _emit(_json_text(seq.to_json()), args.out)


def cmd_sphere_riesz(args) -> None:
    J = lacunary_sequence(args.kappa_max, args.lacunary_base)
    R = _rw_for(args, J)
    a = _coeffs(args.coeffs, args.kappa_max)
    b = _coeffs(args.coeffs_b, args.kappa_max)
    rows = mutual_singularity_experiment(R, J, a, b, args.seed, args.kappa_max, args.zeta_samples,
                                         args.grid, scramble=not args.no_scramble)
    _write_csv(args, SINGULARITY_HEADER, [astuple(r) for r in rows])


def cmd_scramble(args) -> None:
    R = _rw_for(args, range(1, args.deg_max + 1))
    degs = R.degrees
    J = [degs[k % len(degs)] for k in range(args.K)]
    c = _coeffs(args.coeffs, args.K)
    U = haar_unitaries(R.n, args.K, args.seed)
    Z = sample_sphere(R.n, args.zeta_samples, args.seed + 1)
    S = scrambling_experiment(R, J, c, U, Z, args.K)
    if np.any(np.diff(S, axis=1) < 0):
        raise InvariantError("scrambling sums are not nondecreasing")
    rows = [(i, K + 1, float(S[i, K])) for i in range(S.shape[0]) for K in range(S.shape[1])]
    _write_csv(args, ("zeta", "K", "S"), rows)


def _generalized_pair(args, spec: str) -> GeneralizedPair:
    a = _coeffs(spec, args.kappa_max)
    if args.n == 1:
        fac = CircleBlocks(args.D or 1)
    else:
        fac = SphereBlocks(args.n, args.D or 3, args.trials, args.seed, args.delta_samples)
    return GeneralizedPair(fac, a)


def cmd_generalized(args) -> None:
    pair = _generalized_pair(args, args.coeffs)
    state = generalized_construct(pair, args.kappa_max, seed=args.seed)
    problems = check_audit(state)
    if problems:
        raise InvariantError("; ".join(problems))
    _emit(_json_text(state.audit_json(seed=args.seed, coeffs=args.coeffs)), args.out)
    if args.coeffs_b is not None:
        pb = GeneralizedPair(pair.factory, _coeffs(args.coeffs_b, args.kappa_max))
        rows = generalized_singularity_experiment(
            pair, pb, args.kappa_max, args.grid,
            None if args.n == 1 else args.zeta_samples, args.seed)
        text = _csv_text(GENERALIZED_HEADER, [astuple(r) for r in rows])
        _emit(text, args.curve_out or (None if args.out in (None, "-") else args.out + ".csv"))


def parse_poly(text: str, n: int, seed: int = 0) -> SpherePoly:
    """Test-function spec: ``const``, ``abs:i`` (``|z_i|^2``), ``mono:alpha/beta``,
    ``random:deg[:terms]`` or a JSON file."""
    if text == "const":
        return SpherePoly.constant(n)
    kind, _, rest = text.partition(":")
    if kind == "abs":
        i = int(rest) - 1
        e = [0] * n
        e[i] = 1
        return SpherePoly.monomial(e, e)
    if kind == "mono":
        al, _, be = rest.partition("/")
        alpha = [int(x) for x in al.split(",")]
        beta = [int(x) for x in be.split(",")] if be else [0] * len(alpha)
        if len(alpha) != n:
            raise ValueError(f"monomial needs {n} exponents")
        return SpherePoly.monomial(alpha, beta)
    if kind == "random":
        parts = rest.split(":")
        deg = int(parts[0])
        terms = int(parts[1]) if len(parts) > 1 else 8
        return random_poly(n, deg, terms, seed)
    if os.path.exists(text):
        with open(text) as fh:
            return SpherePoly.from_json(json.load(fh))
    raise ValueError(f"unrecognized polynomial spec {text!r}")


def random_poly(n: int, deg: int, terms: int, seed: int) -> SpherePoly:
    """Random polynomial with ``terms`` monomials of total degree ``<= deg``."""
    rng = np.random.default_rng(seed)
    exps = []
    for _ in range(terms):
        total = int(rng.integers(0, deg + 1))
        cuts = np.sort(rng.integers(0, total + 1, size=2 * n - 1))
        exps.append(np.diff(np.concatenate([[0], cuts, [total]])))
    c = rng.standard_normal(terms) + 1j * rng.standard_normal(terms)
    return SpherePoly(n, np.array(exps, dtype=np.int64), c)


def cmd_slice_check(args) -> None:
    J = lacunary_sequence(args.kappa_max, args.lacunary_base)
    R = _rw_for(args, J)
    t = RieszTriple(R, J, _coeffs(args.coeffs, args.kappa_max))
    f = parse_poly(args.f, R.n, args.seed)
    res = slice_decomposition_check(t, args.kappa_max, f, args.mode, args.zeta_samples, args.seed)
    tol = 1e-9 if args.mode == "exact" else None
    if tol is not None and res > tol:
        raise InvariantError(f"slice decomposition residual {res:.3g} > {tol}")
    _emit(_json_text({"seed": args.seed, "f": args.f, "kappa": args.kappa_max, "mode": args.mode,
                      "J": J, "residual": res}), args.out)


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------


def _common() -> argparse.ArgumentParser:
    # a fresh parent per subcommand: set_defaults mutates shared actions
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default=None, help="output path (stdout if omitted)")
    common.add_argument("--n", type=int, default=2, help="complex dimension")
    common.add_argument("--kappa-max", "--kappa", dest="kappa_max", type=int, default=None)
    common.add_argument("--grid", type=int, default=None, help="circle grid size")
    common.add_argument("--zeta-samples", type=int, default=200)
    common.add_argument("--coeffs", default="const:0.8")
    common.add_argument("--coeffs-b", default=None)
    common.add_argument("--rw", default=None, help="RW sequence JSON")
    common.add_argument("--lacunary-base", type=int, default=3)
    common.add_argument("--trials", type=int, default=64)
    common.add_argument("--config", default=None, help="JSON file whose keys override flags")
    return common


def build_parser() -> argparse.ArgumentParser:

    p = argparse.ArgumentParser(prog="rieszlab", description="Riesz product experiments")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("circle-dichotomy", parents=[_common()])
    s.set_defaults(func=cmd_circle_dichotomy, kappa_max=40, coeffs="const:0.9")

    s = sub.add_parser("circle-peyriere", parents=[_common()])
    s.add_argument("--shifts", type=int, default=8)
    s.set_defaults(func=cmd_circle_peyriere, kappa_max=40, coeffs="const:0.5", coeffs_b="const:-0.5")

    s = sub.add_parser("rw-gen", parents=[_common()])
    s.add_argument("--deg-max", type=int, default=16)
    s.add_argument("--degrees", type=int, nargs="*", default=None)
    s.add_argument("--floor", type=float, default=None)
    s.set_defaults(func=cmd_rw_gen)

    s = sub.add_parser("sphere-riesz", parents=[_common()])
    s.add_argument("--no-scramble", action="store_true")
    s.set_defaults(func=cmd_sphere_riesz, kappa_max=6, coeffs_b="const:-0.8")

    s = sub.add_parser("scramble", parents=[_common()])
    s.add_argument("--K", type=int, default=50)
    s.add_argument("--deg-max", type=int, default=16)
    s.set_defaults(func=cmd_scramble, coeffs="const:0.7", zeta_samples=100)

    s = sub.add_parser("generalized", parents=[_common()])
    s.add_argument("--D", type=int, default=None, help="block size (1 on the circle, 3 on S)")
    s.add_argument("--delta-samples", type=int, default=10_000)
    s.add_argument("--curve-out", default=None)
    s.set_defaults(func=cmd_generalized, kappa_max=4, coeffs="const:0.9")

    s = sub.add_parser("slice-check", parents=[_common()])
    s.add_argument("--f", default="const")
    s.add_argument("--mode", choices=("exact", "monte_carlo"), default="exact")
    s.set_defaults(func=cmd_slice_check, kappa_max=3, coeffs="const:0.5", zeta_samples=4096)
    return p


def parse_args(argv=None) -> argparse.Namespace:
    p = build_parser()
    args = p.parse_args(argv)
    if args.config:
        with open(args.config) as fh:
            cfg = json.load(fh)
        for k, v in cfg.items():
            key = k.replace("-", "_")
            if not hasattr(args, key):
                p.error(f"unknown config key {k!r}")
            setattr(args, key, v)
    if args.kappa_max is not None and args.kappa_max < 0:
        p.error("--kappa-max must be a nonnegative integer")
    return args


def main(argv=None) -> int:
    args = parse_args(argv)
    try:
        args.func(args)
    except InvariantError as e:
        print(f"invariant violated: {e}", file=sys.stderr)
        return 3
    except (ValueError, KeyError, OSError, json.JSONDecodeError, RWCertificationError,
            ExpansionCapError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

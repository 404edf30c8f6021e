"""Command-line entry point ``fejerlab``.

Subcommands: ``verify-kernel``, ``converge``, ``compare`` and ``lebesgue``.
Every option may also come from a ``--config`` file of ``key = value`` lines
(keys are option names without the leading dashes); command-line flags win.

Exit codes: 0 success or pass, 1 fail or axiom violation, 2 usage or
configuration error, 3 refused.
"""
from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from pathlib import Path

import numpy as np

from . import convolution as conv
from . import experiments, fourier
from .errors import FejerlabError
from .groups import group_from_token
from .kernels import family_from_token, verify_approximate_identity
from .partitions import partition_from_token

log = logging.getLogger("fejerlab")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_REFUSED = 0, 1, 2, 3


def read_config(path) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = (part.strip() for part in line.partition("="))
        if not sep or not key:
            raise FejerlabError(f"{path}:{lineno}: expected key = value")
        out[key.replace("-", "_")] = value
    return out


def _point(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.replace(",", " ").split())


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.replace(",", " ").split()]


def _out(path):
    if path in (None, "-"):
        return None
    return Path(path)


def _write(text: str, path) -> None:
    p = _out(path)
    if p is None:
        sys.stdout.write(text)
    else:
        p.write_text(text)
        log.info("wrote %s", p)


def cmd_verify_kernel(a) -> int:
    g = group_from_token(a.group) if a.group else None
    k = family_from_token(a.family, g)
    sweep = experiments.SweepSpec.parse(a.sweep)
    if (sweep.mode == "integer") != k.integer_param:
        raise FejerlabError(f"{k.token} needs a {'n' if k.integer_param else 'theta'} sweep")
    radii = _floats(a.radii)
    rep = verify_approximate_identity(k, sweep.params(), radii, C=float(a.C))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["param", "l1_norm", "mass"] + [f"tail_{r:g}" for r in radii])
    for row in rep.rows:
        w.writerow([experiments._fmt(v) for v in
                    [row.param, row.l1_norm, row.mass] + [row.tails[r] for r in radii]])
    buf.write(f"# family={rep.family} C={experiments._fmt(rep.C)} "
              f"verdict={'ok' if rep.ok else 'violation'}\n")
    for v in rep.violations:
        buf.write(f"# violation: {v}\n")
    _write(buf.getvalue(), a.out)
    return EXIT_OK if rep.ok else EXIT_FAIL


def cmd_converge(a) -> int:
    g = group_from_token(a.group)
    k = family_from_token(a.family, g)
    part = partition_from_token(a.partition, g)
    x = _point(a.point)
    f = conv.target_from_token(a.function, g, x, part)
    sweep = experiments.SweepSpec.parse(a.sweep)
    if (sweep.mode == "integer") != k.integer_param:
        raise FejerlabError(f"{k.token} needs a {'n' if k.integer_param else 'theta'} sweep")
    rep = experiments.run_convergence(g, k, part, f, x, sweep, float(a.tol))
    _write(experiments.format_report(rep), a.out)
    log.info("verdict=%s predicted=%r final_error=%r", rep.verdict, rep.predicted,
             rep.final_error)
    return {"pass": EXIT_OK, "fail": EXIT_FAIL}.get(rep.verdict, EXIT_REFUSED)


def cmd_compare(a) -> int:
    g = group_from_token(a.group)
    k = family_from_token("fejer" if g.dim == 1 else "sqfejer", g)
    f = conv.target_from_token(a.function, g, g.identity)
    rng = np.random.default_rng(int(a.seed))
    xs = rng.random((int(a.points), g.dim))
    n_max = int(a.n_max)
    Ns = sorted({0, n_max} | {2 ** j for j in range(n_max.bit_length()) if 2 ** j <= n_max})
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["N", "x", "cesaro", "convolve", "abs_diff"])
    worst = 0.0
    for N in Ns:
        coeffs = fourier.fourier_coefficients(f, N)
        for x in xs:
            c = fourier.cesaro_mean(f, N, x, coeffs=coeffs)
            v = conv.convolve(conv.ConvolutionProblem(g, k, N, f, tuple(x))).value
            worst = max(worst, abs(c - v))
            w.writerow([N, " ".join(experiments._fmt(t) for t in x),
                        experiments._fmt(c), experiments._fmt(v), experiments._fmt(abs(c - v))])
    buf.write(f"# max_abs_diff={experiments._fmt(worst)}\n")
    _write(buf.getvalue(), a.out)
    return EXIT_OK


def cmd_lebesgue(a) -> int:
    g = group_from_token(a.group)
    x = _point(a.point)
    f = conv.target_from_token(a.function, g, x)
    rep = experiments.lebesgue_point_check(f, x[0], _floats(a.radii))
    buf = io.StringIO()
    buf.write("radius,average\n")
    for r, v in zip(rep.radii, rep.averages):
        buf.write(f"{experiments._fmt(r)},{experiments._fmt(v)}\n")
    buf.write(f"# limit={experiments._fmt(rep.limit)} lebesgue_point={str(rep.lebesgue_point).lower()}\n")
    _write(buf.getvalue(), a.out)
    return EXIT_OK


# name -> (handler, {option: (default, help)}); a None default marks a required option.
COMMANDS = {
    "verify-kernel": (cmd_verify_kernel, {
        "group": ("", "group token; inferred from the family when omitted"),
        "family": (None, "kernel family token"),
        "sweep": (None, "n:<start>:<count> or theta:<start>:<count>[:<ratio>]"),
        "radii": ("0.1", "tail radii, comma separated"),
        "C": ("1.0", "L1 bound"),
        "out": ("-", "output path, - for stdout"),
    }),
    "converge": (cmd_converge, {
        "group": (None, "group token"),
        "family": (None, "kernel family token"),
        "partition": (None, "partition token"),
        "function": (None, "target token"),
        "point": (None, "evaluation point, comma separated"),
        "sweep": (None, "n:<start>:<count> or theta:<start>:<count>[:<ratio>]"),
        "tol": ("5e-3", "absolute tolerance"),
        "out": ("-", "report path, - for stdout"),
    }),
    "compare": (cmd_compare, {
        "group": ("torus1", "torus1 or torus2"),
        "n_max": ("32", "largest N"),
        "function": (None, "target token"),
        "points": ("20", "number of random evaluation points"),
        "seed": ("0", "RNG seed for the points"),
        "out": ("-", "output path, - for stdout"),
    }),
    "lebesgue": (cmd_lebesgue, {
        "group": ("r1", "one-dimensional group token"),
        "function": (None, "target token"),
        "point": (None, "evaluation point"),
        "radii": (",".join(f"1e-{k}" for k in range(1, 7)), "radii, comma separated"),
        "out": ("-", "output path, - for stdout"),
    }),
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fejerlab", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, (_, opts) in COMMANDS.items():
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="file of key = value lines")
        for opt, (_, help_) in opts.items():
            # Defaults are applied after merging the config file.
            sp.add_argument("--" + opt.replace("_", "-"), dest=opt, default=None, help=help_)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    a = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    handler, opts = COMMANDS[a.command]
    try:
        cfg = read_config(a.config) if a.config else {}
        unknown = set(cfg) - set(opts)
        if unknown:
            raise FejerlabError(f"unknown config keys: {', '.join(sorted(unknown))}")
        for opt, (default, _) in opts.items():
            if getattr(a, opt) is None:
                setattr(a, opt, cfg.get(opt, default))
            if getattr(a, opt) is None:
                raise FejerlabError(f"missing required option --{opt.replace('_', '-')}")
        return handler(a)
    except (FejerlabError, ValueError, OSError) as exc:
        print(f"fejerlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface.

Subcommands::

    analyze FILE
    bound FILE --eps E [E ...] --n N [N ...]
    compare FILE --eps-grid a:b:step --n N
    rate-table FILE --x-grid a:b:step
    verify FILE --eps E --n N --method {mc,dp,both} --reps R --alpha A --seed S [--raw-lambda]
    plan FILE --eps E --delta D --kind {product,gaussian}

``--eps`` and grid values are in the raw units of the observable and are
rescaled internally.  Output is CSV on stdout or ``--out PATH``.

Exit codes: 0 success, 2 validation, 3 domain, 4 I/O.
"""

from __future__ import annotations

import argparse
import math
import sys

from . import bounds, montecarlo, oracle
from .chain_model import DEFAULT_TOL, load_chain
from .errors import (
    BudgetExceededError,
    ChainValidationError,
    DomainError,
    NonConvergenceError,
    NonLatticeError,
    SpectralError,
)
from .mgf_rate import maximize_tilt
from .spectral import decompose, gap_summary

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_DOMAIN = 3
EXIT_IO = 4


def fmt(v):
    if v is None:
        return "NA"
    if isinstance(v, (bool, int)) and not isinstance(v, float):
        return str(int(v))
    return format(float(v), ".17g")


def _row(values):
    return ",".join(fmt(v) if not isinstance(v, str) else v for v in values)


def parse_grid(text):
    """``"a:b:step"`` to an inclusive list of floats."""
    try:
        a, b, step = (float(p) for p in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like a:b:step, got {text!r}") from None
    if step <= 0 or b < a:
        raise argparse.ArgumentTypeError("grid needs step > 0 and b >= a")
    count = int(math.floor((b - a) / step + 1e-9)) + 1
    return [a + i * step for i in range(count)]


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _unit_interval(text):
    v = float(text)
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError("must lie in (0, 1)")
    return v


def _load(args):
    spec = load_chain(args.file, tol=args.tol)
    dec = decompose(spec)
    return spec, dec, gap_summary(dec)


def cmd_analyze(args, out):
    spec, dec, gap = _load(args)
    out.write("index,eigenvalue\n")
    for i, w in enumerate(dec.eigenvalues, start=1):
        out.write(_row([i, w]) + "\n")
    for key, val in (
        ("lambda", gap.lam),
        ("lambda0", gap.lam0),
        ("gap", gap.gap),
        ("mu", spec.mu),
        ("mu_raw", spec.mu_raw),
        ("a", spec.a),
        ("b", spec.b),
    ):
        out.write(f"{key},{fmt(val)}\n")


BOUND_HEADER = [
    "mu", "eps", "n", "lambda", "lambda0",
    "log_product", "log_gaussian", "log_hoeffding", "log_lezaud", "ratio_asymptote",
    "product", "gaussian", "hoeffding", "lezaud", "mu_raw", "eps_raw",
]


def _bound_rows(spec, gap, eps_raw_list, n_list):
    for eps_raw in eps_raw_list:
        eps = spec.to_normalized_eps(eps_raw)
        for n in n_list:
            r = bounds.bound_report(spec.mu, eps, n, gap.lam, mu_raw=spec.mu_raw, eps_raw=eps_raw)
            exp = lambda v: None if v is None else math.exp(v)
            yield [
                r.mu, r.eps, r.n, r.lam, r.lam0,
                r.log_product, r.log_gaussian, r.log_hoeffding, r.log_lezaud, r.ratio_asymptote,
                exp(r.log_product), exp(r.log_gaussian), exp(r.log_hoeffding), exp(r.log_lezaud),
                r.mu_raw, r.eps_raw,
            ]


def cmd_bound(args, out):
    spec, _, gap = _load(args)
    out.write(",".join(BOUND_HEADER) + "\n")
    for row in _bound_rows(spec, gap, args.eps, args.n):
        out.write(_row(row) + "\n")


def cmd_compare(args, out):
    spec, _, gap = _load(args)
    out.write(",".join(BOUND_HEADER) + "\n")
    for row in _bound_rows(spec, gap, args.eps_grid, [args.n]):
        out.write(_row(row) + "\n")


def cmd_rate_table(args, out):
    spec, dec, gap = _load(args)
    out.write("x,I_theta,I_eta,I_zeta,t_opt,x_raw\n")
    for x_raw in args.x_grid:
        x = spec.to_normalized_x(x_raw)
        i_theta = bounds.rate_I_theta(x, spec.mu, gap.lam0)
        _, i_eta = maximize_tilt(spec, dec, x, "eta")
        t_opt, i_zeta = maximize_tilt(spec, dec, x, "zeta")
        out.write(_row([x, i_theta, i_eta, i_zeta, t_opt, x_raw]) + "\n")


def cmd_verify(args, out):
    spec, _, gap = _load(args)
    eps = spec.to_normalized_eps(args.eps)
    n = args.n
    threshold = n * (spec.mu + eps)
    lam_used = gap.lam if args.raw_lambda else gap.lam0
    allow_neg = args.raw_lambda
    product = math.exp(bounds.log_product_bound(spec.mu, eps, n, lam_used, allow_negative=allow_neg))
    gaussian = math.exp(bounds.log_gaussian_bound(spec.mu, eps, n, lam_used, allow_negative=allow_neg))
    try:
        lezaud = math.exp(bounds.log_lezaud_bound(spec.mu, eps, n, gap.lam))
    except bounds.LezaudDomainError:
        lezaud = None
    exact = mc = mc_hi = None
    if args.method in ("dp", "both"):
        exact = oracle.exact_tail_dp(spec, n, threshold, exact=args.exact_rational)
    if args.method in ("mc", "both"):
        est = montecarlo.estimate_tail(
            montecarlo.stationary_sum_sampler(spec), n, threshold, args.reps, args.alpha, args.seed
        )
        mc, mc_hi = est.p_hat, est.upper
    out.write("n,threshold,exact,product_bound,gaussian_bound,lezaud,mc_estimate,mc_ci_high,threshold_raw\n")
    threshold_raw = n * spec.a + spec.to_raw_eps(threshold)
    out.write(_row([n, threshold, exact, product, gaussian, lezaud, mc, mc_hi, threshold_raw]) + "\n")


def cmd_plan(args, out):
    spec, _, gap = _load(args)
    eps = spec.to_normalized_eps(args.eps)
    n = bounds.plan_sample_size(spec.mu, eps, args.delta, gap.lam0, args.kind)
    out.write("kind,mu,eps,delta,lambda0,n,mu_raw,eps_raw\n")
    out.write(_row([args.kind, spec.mu, eps, args.delta, gap.lam0, n, spec.mu_raw, args.eps]) + "\n")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="markov-hoeffding",
        description="Hoeffding-type deviation bounds for finite reversible Markov chains.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("file", help="chain-spec JSON document")
    common.add_argument("--out", help="write CSV here instead of stdout")
    common.add_argument("--tol", type=float, default=DEFAULT_TOL, help="structural tolerance (default 1e-10)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", parents=[common], help="spectral report")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("bound", parents=[common], help="all bounds at given eps and n")
    p.add_argument("--eps", type=float, nargs="+", required=True)
    p.add_argument("--n", type=_positive_int, nargs="+", required=True)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("compare", parents=[common], help="bounds over an eps grid")
    p.add_argument("--eps-grid", type=parse_grid, required=True)
    p.add_argument("--n", type=_positive_int, required=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("rate-table", parents=[common], help="I_theta, I_eta, I_zeta over an x grid")
    p.add_argument("--x-grid", type=parse_grid, required=True)
    p.set_defaults(func=cmd_rate_table)

    p = sub.add_parser("verify", parents=[common], help="bounds against exact and Monte Carlo tails")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--method", choices=("mc", "dp", "both"), default="both")
    p.add_argument("--reps", type=_positive_int, default=10**5)
    p.add_argument("--alpha", type=_unit_interval, default=0.01)
    p.add_argument("--seed", type=int, default=montecarlo.DEFAULT_SEED)
    p.add_argument("--raw-lambda", action="store_true", help="use the unclipped eigenvalue (exploratory)")
    p.add_argument("--exact-rational", action="store_true", help="rational-arithmetic DP for tiny cases")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("plan", parents=[common], help="minimal n reaching a target probability")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--kind", choices=("product", "gaussian"), default="product")
    p.set_defaults(func=cmd_plan)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "verify" and args.exact_rational and args.method == "mc":
        parser.error("--exact-rational needs --method dp or both")
    try:
        if args.out:
            with open(args.out, "w", newline="") as out:
                args.func(args, out)
        else:
            args.func(args, sys.stdout)
    except ChainValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (DomainError, NonLatticeError, BudgetExceededError, SpectralError, NonConvergenceError) as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

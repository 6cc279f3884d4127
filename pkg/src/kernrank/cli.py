"""Command-line front door.

Every command seeds explicitly (flag or config file); identical flags and
seeds produce byte-identical stdout.  Exit codes: 0 success, 1 runtime or
numerical failure, 2 usage error.
"""

import argparse
import os
import sys

from . import __version__
from .errors import KernRankError
from .experiments import (
    ExperimentConfig,
    calibrate_p,
    emit_csv,
    emit_json,
    format_table,
    run_experiment,
)
from .geometry import (
    InteractionKind,
    box_probability,
    integer_log,
    make_domain_pair,
    subdivide,
)
from .kernels import get_kernel
from .lowrank import assemble, eps_rank
from .probmodel import (
    BoundInputs,
    CountModel,
    TruncatedCountModel,
    binom_pmf,
    expected_R,
    k_tilde,
    var_R_bound,
    z_mean,
    z_var,
)
from .sampling import mix64, sample

FORMAT_VERSION = 1


def _surface(value):
    if value == "far":
        return -1
    try:
        return int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"surface must be 'far' or a nonnegative integer, got {value!r}")


def _kind(dim, surface):
    if surface == -1:
        return InteractionKind.far_field()
    if not 0 <= surface < dim:
        raise KernRankError(f"need surface < dim, got d'={surface}, d={dim}")
    return InteractionKind.shared_surface(surface)


def cmd_rank(args):
    kind = _kind(args.dim, args.surface)
    target, source = make_domain_pair(args.dim, kind, args.side)
    get_kernel(args.kernel)
    targets = sample(target, args.n, mix64(args.seed, 0x54))
    sources = sample(source, args.n, mix64(args.seed, 0x59))
    K = assemble(args.kernel, targets, sources)
    report = eps_rank(K, args.eps)
    sigma = report.singular_values
    ratios = sigma[: min(8, sigma.size)] / sigma[0] if sigma[0] else sigma
    print(f"kernel={args.kernel} d={args.dim} surface={kind} n={args.n} "
          f"eps={args.eps:g} seed={args.seed}")
    print(f"eps_rank={report.eps_rank}")
    print("sigma_ratios=" + " ".join(f"{r:.3e}" for r in ratios))
    return 0


def cmd_experiment(args):
    try:
        config = ExperimentConfig.from_json(args.config)
    except (OSError, ValueError, TypeError) as exc:
        print(f"bad config: {exc}", file=sys.stderr)
        return 2
    if os.path.exists(args.out) and not args.force:
        print(f"refusing to overwrite {args.out} without --force",
              file=sys.stderr)
        return 1
    stats = run_experiment(config, workers=args.workers)
    if args.format == "json":
        emit_json(stats, args.out)
    else:
        emit_csv(stats, args.out)
    print(format_table(stats))
    print(f"wrote {args.out}")
    return 0


def cmd_bounds(args):
    kind = _kind(args.dim, args.surface)
    if kind.is_far_field:
        raise KernRankError("bounds apply to shared-surface pairs only")
    ns = [int(x) for x in args.n_ladder.split(",")]
    print("n,expected_R_exact,expected_R_witness,var_R_bound,kappa,k_tilde")
    for n in ns:
        inputs = BoundInputs(d=args.dim, dprime=args.surface, n=n, p=args.p)
        exact, witness = expected_R(inputs)
        vb = var_R_bound(inputs)
        kt, _ = k_tilde(n, args.p, args.eps, args.dim)
        print(f"{n},{exact:.6f},{witness:.6f},{vb:.6f},{inputs.kappa},{kt}")
    return 0


def cmd_subdivide(args):
    kind = _kind(args.dim, args.surface)
    if kind.is_far_field:
        raise KernRankError("far-field pairs are not subdivided")
    target, source = make_domain_pair(args.dim, kind, args.side)
    tree = subdivide(source, target, args.n)
    print(f"d={args.dim} d'={args.surface} n={args.n} kappa={tree.kappa}")
    for k in range(1, tree.kappa + 1):
        boxes = tree.level_boxes(k)
        print(f"level {k}: h_k={len(boxes)} cell_volume={boxes[0].volume:g} "
              f"q_k={box_probability(tree, k):g}")
    print(f"terminal: volume={tree.terminal.volume:g} "
          f"q_kappa={box_probability(tree, 'terminal'):g}")
    return 0


def cmd_calibrate(args):
    p = calibrate_p(args.kernel, args.dim, eps=args.eps,
                    master_seed=args.seed, trials=args.trials)
    print(f"kernel={args.kernel} d={args.dim} eps={args.eps:g} p={p}")
    return 0


def cmd_probe(args):
    if args.what == "pmf":
        print(repr(binom_pmf(args.n, args.q, args.k)))
    elif args.what in ("zmean", "zvar"):
        model = TruncatedCountModel(CountModel(args.n, args.q), args.p)
        fn = z_mean if args.what == "zmean" else z_var
        print(repr(fn(model)))
    elif args.what == "ktilde":
        kt, slack = k_tilde(args.n, args.p, args.eps, args.dim)
        print(f"k_tilde={kt} slack={slack}")
    elif args.what == "kappa":
        print(integer_log(args.n, 2 ** args.dim))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="kernrank",
        description="Numerical rank of kernel matrices on neighboring "
                    "hypercubes: measurement and probabilistic bounds.")
    parser.add_argument("--version", action="version",
                        version=f"kernrank {__version__} (format {FORMAT_VERSION})")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rank", help="epsilon-rank of one random kernel matrix")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--surface", type=_surface, required=True)
    p.add_argument("--kernel", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--eps", type=float, default=1e-12)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--side", type=float, default=1.0)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("experiment", help="run a Monte Carlo sweep from a config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--force", action="store_true")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("bounds", help="closed-form E[R] and Var(R) table")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--surface", type=_surface, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--n-ladder", required=True,
                   help="comma-separated particle counts")
    p.add_argument("--eps", type=float, default=1e-12)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("subdivide", help="inspect the hierarchical subdivision")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--surface", type=_surface, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--side", type=float, default=1.0)
    p.set_defaults(func=cmd_subdivide)

    p = sub.add_parser("calibrate", help="truncation level p from the far-field plateau")
    p.add_argument("--kernel", required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--eps", type=float, default=1e-12)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--trials", type=int, default=3)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("probe", help="probability-model primitives (unstable format)")
    p.add_argument("--what", choices=("pmf", "zmean", "zvar", "ktilde", "kappa"),
                   required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--q", type=float, default=0.5)
    p.add_argument("--k", type=int, default=0)
    p.add_argument("--p", type=int, default=0)
    p.add_argument("--eps", type=float, default=1e-12)
    p.add_argument("--dim", type=int, default=1)
    p.set_defaults(func=cmd_probe)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except KernRankError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except KeyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

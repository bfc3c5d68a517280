"""Command-line interface: simulate, embed, evaluate, distances.

File conventions
----------------
* data/latent matrices: headerless CSV, one row per point, %.17g formatting
  (full float64 round trip);
* labels: one integer per line;
* embeddings: CSV with header ``dataset,point_index,coord_1..coord_q``;
  dataset is 0 for the first cloud and 1 for the second, point_index counts
  within each cloud, X rows first;
* spectra: CSV with header ``k,s`` (k is 1-based);
* pair lists for ``distances``: CSV with header ``kind,i,j`` and kinds
  XX, YY, XY (0-based indices into the respective clouds);
* evaluate writes JSON ``{"metric": ..., "value": ..., "params": {...}}``.

Exit codes: 0 success; 2 invalid input (bad flags, malformed files or
config, shape mismatches); 3 numerical failure (non-convergence, degenerate
results).

Heavy imports happen inside the command handlers so that ``--threads`` can
cap the BLAS thread pools before numpy loads.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

SCHEMA_VERSION = 1
_CONFIG_REQUIRED = {"schema_version", "name", "m", "n", "p", "seed"}
_CONFIG_OPTIONAL = {"param"}
_METRICS = ("concordance", "rand", "db", "silhouette", "purity")
_FLOAT_FMT = "%.17g"


def _apply_threads(threads: int | None):
    if threads is None:
        return
    if "numpy" in sys.modules:
        print("warning: numpy already loaded; --threads may have no effect", file=sys.stderr)
    for var in (
        "OMP_NUM_THREADS",
        "OPENBLAS_NUM_THREADS",
        "MKL_NUM_THREADS",
        "NUMEXPR_NUM_THREADS",
        "VECLIB_MAXIMUM_THREADS",
    ):
        os.environ[var] = str(threads)


def _read_matrix(path: str):
    import numpy as np

    try:
        arr = np.loadtxt(path, delimiter=",", ndmin=2, dtype=float)
    except OSError:
        raise _CliInputError(f"cannot read {path}")
    except ValueError as exc:
        raise _CliInputError(f"{path} is not a numeric CSV matrix: {exc}")
    if arr.size == 0:
        raise _CliInputError(f"{path} is empty")
    if not np.isfinite(arr).all():
        raise _CliInputError(f"{path} contains non-finite values")
    return arr


def _write_matrix(path: str, arr):
    import numpy as np

    np.savetxt(path, np.atleast_2d(arr), delimiter=",", fmt=_FLOAT_FMT)


def _read_labels(path: str):
    import numpy as np

    arr = _read_matrix(path)
    flat = arr.ravel()
    if not np.all(flat == np.round(flat)):
        raise _CliInputError(f"{path} must contain integer labels")
    return flat.astype(np.int64)


def _write_labels(path: str, labels):
    with open(path, "w") as fh:
        for value in labels:
            fh.write(f"{int(value)}\n")


def _write_embedding(path: str, Xt, Yt):
    q = Xt.shape[1]
    header = "dataset,point_index," + ",".join(f"coord_{i + 1}" for i in range(q))
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for dataset, block in ((0, Xt), (1, Yt)):
            for idx, row in enumerate(block):
                coords = ",".join(_FLOAT_FMT % v for v in row)
                fh.write(f"{dataset},{idx},{coords}\n")


def _read_embedding(path: str):
    import numpy as np

    try:
        with open(path) as fh:
            header = fh.readline().strip()
    except OSError:
        raise _CliInputError(f"cannot read {path}")
    if not header.startswith("dataset,point_index,coord_1"):
        raise _CliInputError(f"{path} does not look like an embedding file (bad header)")
    try:
        arr = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2, dtype=float)
    except ValueError as exc:
        raise _CliInputError(f"{path} has malformed rows: {exc}")
    if arr.shape[1] < 3:
        raise _CliInputError(f"{path} must have at least one coordinate column")
    return arr[:, 0].astype(int), arr[:, 1].astype(int), arr[:, 2:]


def _write_spectrum(path: str, s):
    with open(path, "w") as fh:
        fh.write("k,s\n")
        for i, value in enumerate(s, start=1):
            fh.write(f"{i},{_FLOAT_FMT % value}\n")


class _CliInputError(Exception):
    """Invalid input detected by the CLI layer itself (exit code 2)."""


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError:
        raise _CliInputError(f"cannot read config {path}")
    except json.JSONDecodeError as exc:
        raise _CliInputError(f"config {path} is not valid JSON: {exc}")
    if not isinstance(cfg, dict):
        raise _CliInputError("config must be a JSON object")
    unknown = set(cfg) - _CONFIG_REQUIRED - _CONFIG_OPTIONAL
    if unknown:
        raise _CliInputError(f"config has unknown field(s): {', '.join(sorted(unknown))}")
    missing = _CONFIG_REQUIRED - set(cfg)
    if missing:
        raise _CliInputError(f"config is missing field(s): {', '.join(sorted(missing))}")
    if cfg["schema_version"] != SCHEMA_VERSION:
        raise _CliInputError(
            f"unsupported schema_version {cfg['schema_version']!r} (expected {SCHEMA_VERSION})"
        )
    for field in ("m", "n", "p", "seed"):
        if not isinstance(cfg[field], int) or isinstance(cfg[field], bool):
            raise _CliInputError(f"config field {field!r} must be an integer")
    if not isinstance(cfg["name"], str):
        raise _CliInputError("config field 'name' must be a string")
    if "param" in cfg:
        if isinstance(cfg["param"], bool) or not isinstance(cfg["param"], (int, float)):
            raise _CliInputError("config field 'param' must be a number")
    return cfg


def _parse_epsilon(text: str):
    if text == "median":
        return "median"
    try:
        return float(text)
    except ValueError:
        raise _CliInputError(f'--epsilon must be a number or "median", got {text!r}')


def _parse_q(text: str):
    if text == "auto":
        return "auto"
    try:
        return int(text)
    except ValueError:
        raise _CliInputError(f'--q must be an integer or "auto", got {text!r}')


def cmd_simulate(args) -> int:
    from . import simulate

    cfg = _load_config(args.config)
    pair = simulate.preset(
        cfg["name"], cfg["m"], cfg["n"], cfg["p"], cfg["seed"], cfg.get("param", 1.0)
    )
    _write_matrix(args.out_x, pair.X.values)
    _write_matrix(args.out_y, pair.Y.values)
    _write_matrix(args.out_latent, pair.pooled_latent)
    _write_labels(args.out_labels, pair.pooled_labels)
    kind = "class" if pair.latent_x.labels is not None else "dataset-indicator"
    print(
        f"simulated {pair.name}: X {pair.X.rows}x{pair.X.cols}, "
        f"Y {pair.Y.rows}x{pair.Y.cols}, labels={kind}",
        file=sys.stderr,
    )
    return 0


def cmd_embed(args) -> int:
    from . import embedding, transport

    X = _read_matrix(args.in_x)
    Y = _read_matrix(args.in_y)
    plan = transport.transport_plan(
        X, Y, epsilon=_parse_epsilon(args.epsilon), tol=args.tol, max_iter=args.max_iter
    )
    q = _parse_q(args.q)
    model = embedding.spectral_model(plan, k=plan.shape[0])
    if q == "auto":
        selection = embedding.select_dimension(model.s)
        if selection.degenerate:
            print("warning: flat spectrum, falling back to q=1", file=sys.stderr)
        q = selection.q
    emb = embedding.embed_from_model(model, plan, q=q, t=args.t)
    _write_embedding(args.out_embedding, emb.Xt, emb.Yt)
    _write_spectrum(args.out_spectrum, model.s)
    print(
        f"embedded with q={emb.q}, t={emb.t}, epsilon={plan.epsilon:.17g}, "
        f"{plan.iterations} sweeps",
        file=sys.stderr,
    )
    return 0


def cmd_evaluate(args) -> int:
    import numpy as np

    from . import metrics

    _, _, coords = _read_embedding(args.embedding)
    params: dict = {}
    if args.metric == "concordance":
        if not args.latent:
            raise _CliInputError("metric 'concordance' needs --latent")
        latent = _read_matrix(args.latent)
        value = metrics.jaccard_concordance(coords, latent, k=args.k)
        params["k"] = args.k
    else:
        if not args.labels:
            raise _CliInputError(f"metric {args.metric!r} needs --labels")
        labels = _read_labels(args.labels)
        if labels.shape[0] != coords.shape[0]:
            raise _CliInputError(
                f"labels ({labels.shape[0]}) do not match embedding rows ({coords.shape[0]})"
            )
        if args.metric == "rand":
            clusters = args.clusters if args.clusters is not None else int(np.unique(labels).size)
            if clusters < 2:
                raise _CliInputError("--clusters must be at least 2")
            predicted = metrics.kmeans(coords, clusters, seed=args.seed)
            value = metrics.rand_index(predicted, labels)
            params.update(clusters=clusters, seed=args.seed)
        elif args.metric == "db":
            value = metrics.davies_bouldin(coords, labels)
        elif args.metric == "silhouette":
            value = metrics.silhouette_mean(coords, labels)
        else:
            value = metrics.neighbor_purity(coords, labels, k=args.k)
            params["k"] = args.k

    payload = json.dumps(
        {"metric": args.metric, "value": value, "params": params}, sort_keys=True
    )
    if args.out == "-":
        print(payload)
    else:
        with open(args.out, "w") as fh:
            fh.write(payload + "\n")
    return 0


def _read_pairs(path: str):
    try:
        with open(path) as fh:
            rows = list(csv.reader(fh))
    except OSError:
        raise _CliInputError(f"cannot read {path}")
    if not rows or [c.strip() for c in rows[0]] != ["kind", "i", "j"]:
        raise _CliInputError(f"{path} must start with header 'kind,i,j'")
    pairs = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 3:
            raise _CliInputError(f"{path}:{lineno}: expected 'kind,i,j'")
        kind = row[0].strip()
        if kind not in ("XX", "YY", "XY"):
            raise _CliInputError(f"{path}:{lineno}: kind must be XX, YY or XY, got {kind!r}")
        try:
            pairs.append((kind, int(row[1]), int(row[2])))
        except ValueError:
            raise _CliInputError(f"{path}:{lineno}: indices must be integers")
    if not pairs:
        raise _CliInputError(f"{path} lists no pairs")
    return pairs


def cmd_distances(args) -> int:
    from . import diffusion, embedding, transport

    X = _read_matrix(args.in_x)
    Y = _read_matrix(args.in_y)
    pairs = _read_pairs(args.pairs)
    plan = transport.transport_plan(
        X, Y, epsilon=_parse_epsilon(args.epsilon), tol=args.tol, max_iter=args.max_iter
    )
    model = embedding.spectral_model(plan, k=plan.shape[0])
    ctx = diffusion.DiffusionContext(model=model, t=args.t)
    with open(args.out, "w") as fh:
        fh.write("kind,i,j,distance\n")
        for kind, i, j in pairs:
            if plan.swapped:
                # The stored plan is (Y, X): swap the roles when querying.
                stored_kind = {"XX": "YY", "YY": "XX", "XY": "XY"}[kind]
                si, sj = (j, i) if kind == "XY" else (i, j)
            else:
                stored_kind, si, sj = kind, i, j
            value = diffusion.diffusion_distance(ctx, stored_kind, si, sj)
            fh.write(f"{kind},{i},{j},{_FLOAT_FMT % value}\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eotmaps",
        description="Joint spectral embedding of two point clouds via entropic "
        "optimal-transport plans.",
    )
    parser.add_argument(
        "--threads",
        type=int,
        default=None,
        help="best-effort cap on BLAS threads (set before numpy loads)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic two-sample dataset")
    p.add_argument("--config", required=True, help="JSON config (schema_version, name, m, n, p, seed[, param])")
    p.add_argument("--out-x", required=True)
    p.add_argument("--out-y", required=True)
    p.add_argument("--out-latent", required=True, help="pooled latent matrix, X rows first")
    p.add_argument(
        "--out-labels",
        required=True,
        help="pooled labels: class labels for the clustering preset, dataset indicator otherwise",
    )
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("embed", help="compute the joint transport embedding")
    p.add_argument("--in-x", required=True)
    p.add_argument("--in-y", required=True)
    p.add_argument("--q", default="auto", help='embedding dimension or "auto" (default)')
    p.add_argument("--t", type=int, default=0, help="diffusion time (default 0)")
    p.add_argument("--epsilon", default="median", help='kernel bandwidth or "median" (default)')
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=10000)
    p.add_argument("--out-embedding", required=True)
    p.add_argument("--out-spectrum", required=True)
    p.set_defaults(handler=cmd_embed)

    p = sub.add_parser("evaluate", help="score an embedding file")
    p.add_argument("--embedding", required=True)
    p.add_argument("--metric", required=True, choices=_METRICS)
    p.add_argument("--latent", default=None, help="latent matrix (concordance)")
    p.add_argument("--labels", default=None, help="labels file (rand/db/silhouette/purity)")
    p.add_argument("--k", type=int, default=50, help="neighborhood size (default 50)")
    p.add_argument("--clusters", type=int, default=None, help="kmeans clusters for rand")
    p.add_argument("--seed", type=int, default=0, help="kmeans seed for rand")
    p.add_argument("--out", default="-", help="output JSON path, or - for stdout")
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("distances", help="diffusion distances for listed vertex pairs")
    p.add_argument("--in-x", required=True)
    p.add_argument("--in-y", required=True)
    p.add_argument("--epsilon", default="median")
    p.add_argument("--t", type=int, required=True, help="diffusion time (positive integer)")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=10000)
    p.add_argument("--pairs", required=True, help="CSV with header kind,i,j")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_distances)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    _apply_threads(args.threads)
    from .errors import (
        ConvergenceError,
        InputError,
        InvariantError,
        NumericalError,
        PlanNotConvergedError,
    )

    try:
        return args.handler(args)
    except (_CliInputError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ConvergenceError, NumericalError, PlanNotConvergedError, InvariantError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

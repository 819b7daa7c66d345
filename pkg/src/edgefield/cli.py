"""Command-line interface: criticality, segment, compress, reconstruct, sweep.

Exit codes: 0 success, 1 I/O or data error, 2 usage error. All randomized
stages derive their streams from the single --seed via fixed labels, so a
fixed seed gives bit-identical outputs.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

from . import codec, criticality, segmentation, stats
from .grid import (
    MalformedHeader,
    PixelGrid,
    TruncatedPayload,
    UnsupportedMaxval,
    read_pgm,
    write_pgm,
)

USAGE_ERRORS = (
    criticality.InvalidM,
    criticality.InvalidRho,
    criticality.DegenerateRegion,
)
DATA_ERRORS = (
    MalformedHeader,
    UnsupportedMaxval,
    TruncatedPayload,
    codec.BadMagic,
    codec.UnsupportedVersion,
    codec.InconsistentDims,
    segmentation.WindowMismatch,
    stats.TooSmall,
    stats.ZeroVariance,
    stats.EmptyHistogram,
    OSError,
)


def derive_seed(seed: int, label: str) -> int:
    """Stable per-stage sub-seed from the user seed and a fixed label."""
    digest = hashlib.sha256(f"{seed}:{label}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def _read_grid(path: str) -> PixelGrid:
    return read_pgm(Path(path).read_bytes())


def _resolve_m_c(args, grid: PixelGrid | None) -> int:
    if args.m_c is not None:
        if args.m_c < 1:
            raise criticality.DegenerateRegion(f"m_c must be >= 1, got {args.m_c}")
        return args.m_c
    if args.m is not None:
        m = args.m
    elif grid is not None:
        m = criticality.default_m(grid.rows, grid.cols)
    else:
        raise criticality.InvalidM("need --m, --m-c, or an input image")
    return criticality.compute_criticality(m, args.rho).m_c


def _parse_epsilons(text: str) -> list[int]:
    try:
        if ":" in text:
            lo, hi, step = (int(t) for t in text.split(":"))
            if step < 1 or hi < lo:
                raise ValueError
            values = list(range(lo, hi + 1, step))
        else:
            values = [int(t) for t in text.split(",")]
    except ValueError:
        raise ValueError(f"bad epsilon range {text!r}; use lo:hi:step or a,b,c") from None
    if not values or any(not 1 <= v <= 256 for v in values):
        raise ValueError(f"epsilon values must lie in [1, 256], got {text!r}")
    return values


def cmd_criticality(args) -> int:
    if args.m is not None:
        m = args.m
    elif args.rows is not None and args.cols is not None:
        m = criticality.default_m(args.rows, args.cols)
    else:
        print("criticality: need --m or both --rows and --cols", file=sys.stderr)
        return 2
    result = criticality.compute_criticality(m, args.rho)
    print(result.to_json())
    return 0


def cmd_segment(args) -> int:
    grid = _read_grid(args.input)
    m_c = _resolve_m_c(args, grid)
    params = segmentation.SegmentationParams(
        epsilon=args.epsilon,
        m_c=m_c,
        tau=args.tau,
        mode=args.mode,
        seed=derive_seed(args.seed, f"segment-{args.mode}"),
    )
    result = segmentation.segment(grid, params)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "equilibrium.pgm").write_bytes(write_pgm(result.equilibrium))
    (outdir / "difference.pgm").write_bytes(write_pgm(result.difference))
    (outdir / "overlay.pgm").write_bytes(write_pgm(result.overlay))
    (outdir / "proposals.json").write_text(
        json.dumps([p.to_dict() for p in result.proposals], indent=2) + "\n"
    )
    metrics = {
        "violation_rate": result.violation_rate,
        "epsilon_c_hat": segmentation.estimate_epsilon_c(grid, args.delta_tol),
    }
    print(json.dumps(metrics))
    return 0


def cmd_compress(args) -> int:
    grid = _read_grid(args.input)
    m_c = _resolve_m_c(args, grid)
    comp = codec.compress(grid, m_c, seed=derive_seed(args.seed, "codec-sample"))
    Path(args.output).write_bytes(codec.write_rfc(comp))
    st = codec.codec_stats(comp)
    print(
        json.dumps(
            {
                "raw_bytes": st.raw_bytes,
                "compressed_bytes": st.compressed_bytes,
                "ratio": st.ratio,
                "m_c": m_c,
            }
        )
    )
    return 0


def cmd_reconstruct(args) -> int:
    comp = codec.read_rfc(Path(args.input).read_bytes())
    grid = codec.reconstruct(comp)
    Path(args.output).write_bytes(write_pgm(grid))
    print(json.dumps({"rows": grid.rows, "cols": grid.cols, "m_c": comp.m_c}))
    return 0


def cmd_sweep(args) -> int:
    try:
        epsilons = _parse_epsilons(args.epsilons)
    except ValueError as exc:
        print(f"sweep: {exc}", file=sys.stderr)
        return 2
    grid = _read_grid(args.input)
    m_c = _resolve_m_c(args, grid)
    params = segmentation.SegmentationParams(
        epsilon=epsilons[0],
        m_c=m_c,
        tau=args.tau,
        mode=args.mode,
        seed=derive_seed(args.seed, "codec-sample"),
    )
    rows = stats.sweep(grid, params, epsilons)
    csv_text = stats.sweep_to_csv(rows)
    if args.out:
        Path(args.out).write_text(csv_text)
    else:
        print(csv_text, end="")
    e_vals = [r.kl for r in rows]
    s_vals = [r.sw for r in rows]
    e_mono = all(b <= a + 1e-12 for a, b in zip(e_vals, e_vals[1:]))
    s_mono = all(b >= a - 1e-12 for a, b in zip(s_vals, s_vals[1:]))
    print(f"E_non_increasing={str(e_mono).lower()}")
    print(f"S_non_decreasing={str(s_mono).lower()}")
    threshold = 1.0 - 2.0 * args.alpha
    for r in rows:
        verdict = "affirm" if r.sw > threshold else "reject"
        print(f"sw_rule epsilon={r.epsilon} S={r.sw:.6f} {verdict} (threshold {threshold:.2f})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="edgefield",
        description="Edge-field smoothing, criticality, block codec and sweeps",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_image=True):
        p.add_argument("--m", type=int, default=None, help="neighborhood side")
        p.add_argument("--m-c", dest="m_c", type=int, default=None, help="sub-region side override")
        p.add_argument("--rho", type=float, default=criticality.SQUARE_LATTICE_RHO)
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("criticality", help="critical region arithmetic")
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--rows", type=int, default=None)
    p.add_argument("--cols", type=int, default=None)
    p.add_argument("--rho", type=float, default=criticality.SQUARE_LATTICE_RHO)
    p.set_defaults(func=cmd_criticality)

    p = sub.add_parser("segment", help="smooth, difference and propose regions")
    p.add_argument("--input", required=True)
    p.add_argument("--outdir", required=True)
    p.add_argument("--epsilon", type=int, required=True)
    p.add_argument("--tau", type=int, default=1)
    p.add_argument("--mode", choices=segmentation.MODES, default="empirical")
    p.add_argument("--delta-tol", dest="delta_tol", type=float, default=0.01)
    common(p)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("compress", help="write an RFC1 container")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    common(p)
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("reconstruct", help="decode an RFC1 container to PGM")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("sweep", help="epsilon sweep CSV with E and S columns")
    p.add_argument("--input", required=True)
    p.add_argument("--epsilons", default="70:140:10", help="lo:hi:step or a,b,c")
    p.add_argument("--tau", type=int, default=1)
    p.add_argument("--mode", choices=segmentation.MODES, default="empirical")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--out", default=None, help="CSV path (default stdout)")
    common(p)
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except USAGE_ERRORS as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except DATA_ERRORS as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())

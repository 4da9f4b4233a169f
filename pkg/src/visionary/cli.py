"""Command-line entry points: render, bench, serve, inspect."""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .assets import parse_splat_ply
from .errors import VisionaryError
from .metrics import run_benchmark
from .pipeline import image_to_rgba8, parse_filter_token, render_frame
from .scene import load_camera, load_scene, load_trajectory
from .sortlab import parse_strategy


def _cmd_render(args) -> int:
    scene = load_scene(args.scene)
    cam = load_camera(args.camera)
    strategy = parse_strategy(args.strategy)
    filters = [parse_filter_token(tok) for tok in args.filter]
    result = render_frame(scene, cam, strategy=strategy, filters=filters)
    from PIL import Image
    Image.fromarray(image_to_rgba8(result.image), mode="RGBA").save(args.out)
    st = result.stats
    print(f"wrote {args.out}: {cam.width}x{cam.height}, "
          f"{st.splats_visible}/{st.splats_in} splats, {st.total_ms:.1f} ms")
    return 0


def _cmd_bench(args) -> int:
    scene = load_scene(args.scene)
    trajectory = load_trajectory(args.trajectory)
    strategy = parse_strategy(args.strategy)
    report = run_benchmark(scene, trajectory, strategy=strategy,
                           csv_path=args.out, json_path=args.json)
    agg = report.aggregates()
    print(f"wrote {args.out}: {len(report.rows)} frames, "
          f"mean total {agg['total_ms']['mean']:.1f} ms "
          f"(sort {agg['sort_ms']['mean']:.1f} ms)")
    return 0


def _cmd_serve(args) -> int:
    from .service import ViewerConfig, serve
    scene = load_scene(args.scene)
    config = ViewerConfig(width=args.width, height=args.height,
                          encoding=args.encoding,
                          autoplay_fps=args.autoplay_fps)
    print(f"serving on ws://{args.host}:{args.port}/ws "
          f"({args.width}x{args.height}, {args.encoding})")
    serve(scene, host=args.host, port=args.port, config=config)
    return 0


def _cmd_inspect(args) -> int:
    with open(args.ply, "rb") as f:
        cloud = parse_splat_ply(f.read())
    lo = cloud.positions.min(axis=0) if len(cloud) else np.zeros(3)
    hi = cloud.positions.max(axis=0) if len(cloud) else np.zeros(3)
    print(json.dumps({
        "count": len(cloud), "degree": cloud.degree,
        "bounds_min": [float(v) for v in lo],
        "bounds_max": [float(v) for v in hi],
        "opacity_mean": float(cloud.opacities.mean()) if len(cloud) else 0.0,
    }, indent=1))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="visionary", description="Hybrid Gaussian-splat render engine")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("render", help="render one frame to an image file")
    p.add_argument("--scene", required=True, help="scene descriptor JSON")
    p.add_argument("--camera", required=True, help="camera descriptor JSON")
    p.add_argument("--out", required=True, help="output image path (png)")
    p.add_argument("--strategy", default="global",
                   help="global | lazy:<period> | local:<size>")
    p.add_argument("--filter", action="append", default=[],
                   help="post filter token (repeatable): identity | gamma:<g> | blur | sharpen")
    p.set_defaults(func=_cmd_render)

    p = sub.add_parser("bench", help="run a trajectory benchmark")
    p.add_argument("--scene", required=True)
    p.add_argument("--trajectory", required=True, help="trajectory descriptor JSON")
    p.add_argument("--out", required=True, help="per-frame stats CSV path")
    p.add_argument("--json", default=None, help="optional aggregate JSON path")
    p.add_argument("--strategy", default="global")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("serve", help="serve the interactive viewer protocol")
    p.add_argument("--scene", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--width", type=int, default=512)
    p.add_argument("--height", type=int, default=512)
    p.add_argument("--encoding", default="raw-rgba8",
                   choices=("raw-rgba8", "png"))
    p.add_argument("--autoplay-fps", type=float, default=0.0,
                   help="> 0: auto-advance time for 4D scenes")
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("inspect", help="print summary stats for a splat PLY")
    p.add_argument("--ply", required=True)
    p.set_defaults(func=_cmd_inspect)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except VisionaryError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

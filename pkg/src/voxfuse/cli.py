"""Command-line entry point: register, apply, fuse, stats, synth, serve.

Every subcommand is a thin shell over the library; outputs are bit-identical
to the corresponding library calls and all files are written atomically.
Domain errors exit with status 1 and a one-line ``error: <kind>: <message>``;
usage errors exit with status 2.
"""

import argparse
import sys

from . import fileio, fusion, registration, synth
from .errors import VoxfuseError
from .transforms import apply_transform

_CLI_COLOR_RULES = {
    "prefer-colored": "prefer-colored-source",
    "average": "average",
    "first": "first-wins",
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="voxfuse",
        description="Register, fuse, and analyze aerial/street point clouds.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("register", help="estimate a transform from keypoint pairs")
    p.add_argument("--source", required=True, help="source cloud (validated)")
    p.add_argument("--target", required=True, help="target cloud (validated)")
    p.add_argument("--pairs", required=True, help="correspondence pair table")
    p.add_argument("--mode", choices=registration.MODES, default="similarity")
    p.add_argument("--icp", action="store_true",
                   help="refine the estimate with iterative closest point")
    p.add_argument("--out", help="transform document to write")

    p = sub.add_parser("apply", help="apply a transform document to a cloud")
    p.add_argument("--transform", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("fuse", help="merge aligned clouds on a voxel grid")
    p.add_argument("--in", dest="infiles", required=True, action="append")
    p.add_argument("--voxel", type=float, required=True, help="leaf size, meters")
    p.add_argument("--color-rule", choices=sorted(_CLI_COLOR_RULES),
                   default="prefer-colored")
    p.add_argument("--out", required=True)

    p = sub.add_parser("stats", help="voxel occupancy / coverage report")
    p.add_argument("--in", dest="infiles", required=True, action="append")
    p.add_argument("--truth", help="labeled ground-truth cloud")
    p.add_argument("--voxel", type=float, required=True)
    p.add_argument("--out", help="report file (flat key = value text)")

    p = sub.add_parser("synth", help="generate synthetic sensor clouds")
    p.add_argument("--spec", required=True, help="scene document (JSON)")
    p.add_argument("--out-uav", required=True)
    p.add_argument("--out-mms", required=True)
    p.add_argument("--out-truth", help="full labeled surface cloud")
    p.add_argument("--out-misreg",
                   help="write the ground-truth alignment and emit the "
                        "aerial cloud misregistered by its inverse")
    p.add_argument("--seed", type=int, help="override the scene seed")

    p = sub.add_parser("serve", help="run the interactive registration backend")
    p.add_argument("--source", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--port", type=int, required=True)
    p.add_argument("--lod-budget", type=int, default=200_000)
    return parser


def _cmd_register(args):
    source = fileio.read_cloud(args.source).require_nonempty("register")
    target = fileio.read_cloud(args.target).require_nonempty("register")
    pairs = fileio.read_pairs(args.pairs)
    result = registration.estimate_transform(pairs, mode=args.mode)
    transform = result.transform
    if args.icp:
        params = registration.IcpParams(mode=args.mode)
        transform, history = registration.refine_icp(
            source, target, transform, params)
        print(f"icp refined over {len(history)} iteration(s), "
              f"final match rmse {history[-1]:.6g}")
    pair_rmse = registration.rmse(pairs, transform)
    print(f"mode {args.mode}, pairs {len(pairs)}, rmse {pair_rmse:.6g} m")
    if args.out:
        fileio.write_transform(transform, args.out, rmse=pair_rmse)
    return 0


def _cmd_apply(args):
    transform = fileio.read_transform(args.transform)
    cloud = fileio.read_cloud(args.infile).require_nonempty("apply")
    fileio.write_cloud(apply_transform(transform, cloud), args.out)
    return 0


def _cmd_fuse(args):
    clouds = [fileio.read_cloud(f) for f in args.infiles]
    policy = fusion.FusionPolicy(
        leaf=args.voxel, color_rule=_CLI_COLOR_RULES[args.color_rule])
    fileio.write_cloud(fusion.fuse(clouds, policy), args.out)
    return 0


def _cmd_stats(args):
    clouds = [fileio.read_cloud(f) for f in args.infiles]
    for i, c in enumerate(clouds):
        if not c.source_tag:
            c.source_tag = f"cloud{i}"
    truth = fileio.read_cloud(args.truth) if args.truth else None
    stats = fusion.coverage_report(clouds, leaf=args.voxel, truth=truth)
    print(fusion.summarize_coverage(stats))
    if args.out:
        from .fileio import _atomic_write
        _atomic_write(args.out, fusion.format_coverage_report(stats))
    return 0


def _cmd_synth(args):
    spec, uav_params, mms_params = synth.read_scene_document(args.spec)
    if args.seed is not None:
        spec.seed = args.seed
    if uav_params is None:
        uav_params = synth.UavParams.grid(spec)
    if mms_params is None:
        mms_params = synth.MmsParams.ring(spec)
    if args.out_misreg:
        uav_params.misregistration = synth.default_misregistration()
    scene = synth.build_scene(spec)
    uav = synth.sample_uav(scene, uav_params)
    mms = synth.sample_mms(scene, mms_params)
    fileio.write_cloud(uav, args.out_uav)
    fileio.write_cloud(mms, args.out_mms)
    print(f"scene {len(scene)} samples -> uav {len(uav)}, mms {len(mms)} points")
    if args.out_truth:
        fileio.write_cloud(synth.truth_cloud(scene), args.out_truth)
    if args.out_misreg:
        from .transforms import invert_transform
        fileio.write_transform(
            invert_transform(uav_params.misregistration), args.out_misreg)
    return 0


def _cmd_serve(args):
    import uvicorn

    from .service import create_app

    source = fileio.read_cloud(args.source).require_nonempty("serve")
    target = fileio.read_cloud(args.target).require_nonempty("serve")
    app = create_app(source, target, lod_budget=args.lod_budget)
    uvicorn.run(app, host="127.0.0.1", port=args.port, log_level="warning")
    return 0


_COMMANDS = {
    "register": _cmd_register,
    "apply": _cmd_apply,
    "fuse": _cmd_fuse,
    "stats": _cmd_stats,
    "synth": _cmd_synth,
    "serve": _cmd_serve,
}


def run(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except VoxfuseError as exc:
        print(f"error: {exc.kind}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return 1


def main():
    raise SystemExit(run())


if __name__ == "__main__":
    main()

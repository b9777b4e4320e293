"""Command-line front end.

Exit status: 0 success/accept, 1 reject (intruder), 2 error.
"""
import argparse
import datetime
import os
import sys
from pathlib import Path

from .errors import CCFOError, ParameterMismatchError
from .evalharness import PATTERNS, SynthParams, run_benchmark
from .gallery import (
    MANIFEST,
    Gallery,
    enroll,
    identify,
    load_gallery,
    save_gallery,
    verify,
    write_template,
)
from .imgio import load_image, save_image
from .matcher import ACCEPT, METRICS, MatchConfig
from .orientation import MODES, render_arrows
from .pipeline import PipelineConfig, extract_field
from .preprocess import CannyConfig, MedianConfig, canny_edges, median_filter

EXIT_OK, EXIT_REJECT, EXIT_ERROR = 0, 1, 2


def _common_flags():
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("pipeline and matching")
    g.add_argument("--block", type=int, default=16, help="block side N in pixels (default 16)")
    g.add_argument("--mode", choices=MODES, default="standard", help="orientation estimator")
    g.add_argument("--metric", choices=METRICS, default="coherence", help="similarity metric")
    g.add_argument("--threshold", type=float, default=0.85, help="accept threshold (default 0.85)")
    g.add_argument("--median", type=int, default=3, help="median window, odd >= 3")
    g.add_argument("--canny-low", type=float, default=0.1)
    g.add_argument("--canny-high", type=float, default=0.3)
    g.add_argument("--search-lags", action="store_true", help="fft metric: maximise over circular lags")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", default=None, help="output path (eval report)")
    return p


def build_parser():
    common = _common_flags()
    parser = argparse.ArgumentParser(prog="ccfo", description="Orientation-field fingerprint matching")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enroll", parents=[common], help="add an image to a gallery")
    p.add_argument("gallery")
    p.add_argument("id")
    p.add_argument("image")

    p = sub.add_parser("verify", parents=[common], help="1:1 match against an enrolled id")
    p.add_argument("gallery")
    p.add_argument("id")
    p.add_argument("probe")

    p = sub.add_parser("identify", parents=[common], help="1:N search over a gallery")
    p.add_argument("gallery")
    p.add_argument("probe")

    p = sub.add_parser("field", parents=[common], help="write a template and diagnostic images")
    p.add_argument("image")
    p.add_argument("template")
    p.add_argument("--arrows", default=None, help="also write an arrow rendering (and .edges.pgm)")
    p.add_argument("--scale", type=int, default=16, help="arrow cell size in pixels")

    p = sub.add_parser("eval", parents=[common], help="synthetic identification benchmark")
    p.add_argument("--classes", type=int, default=10)
    p.add_argument("--samples", type=int, default=2)
    p.add_argument("--sizes", default=None, help="comma-separated gallery sizes (default: five even steps)")
    p.add_argument("--noise", type=float, default=0.0, help="Gaussian noise sigma")
    p.add_argument("--occlusion", type=float, default=0.0, help="occluded area fraction")
    p.add_argument("--pattern", choices=PATTERNS, default="unidirectional")
    p.add_argument("--image-size", type=int, default=256)
    p.add_argument("--ridge-period", type=float, default=8.0)
    return parser


def _pipeline(args):
    return PipelineConfig(block_size=args.block, mode=args.mode, median_window=args.median)


def _match_cfg(args):
    return MatchConfig(metric=args.metric, threshold=args.threshold, search_lags=args.search_lags)


def _timestamp():
    # honour SOURCE_DATE_EPOCH so enrolment can be reproduced byte for byte
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    now = (datetime.datetime.fromtimestamp(int(epoch), datetime.timezone.utc) if epoch
           else datetime.datetime.now(datetime.timezone.utc))
    return now.strftime("%Y-%m-%dT%H:%M:%SZ")


def _open_gallery(directory, params):
    g = load_gallery(directory, params.block_size, params.mode)
    if g.block_size != params.block_size or g.mode != params.mode:
        raise ParameterMismatchError(
            f"gallery templates use mode={g.mode} block={g.block_size}; "
            f"probe would use mode={params.mode} block={params.block_size}")
    return g


def cmd_enroll(args):
    params = _pipeline(args)
    if (Path(args.gallery) / MANIFEST).is_file():
        g = _open_gallery(args.gallery, params)
    else:
        g = Gallery(params.block_size, params.mode)
    img = load_image(args.image)
    g = enroll(g, args.id, img, params, source=str(args.image), enrolled_at=_timestamp())
    save_gallery(g, args.gallery)
    f = g.get(args.id).field
    print(f"enrolled={args.id} grid={f.rows}x{f.cols}")
    return EXIT_OK


def cmd_verify(args):
    params = _pipeline(args)
    cfg = _match_cfg(args)
    g = _open_gallery(args.gallery, params)
    record = g.get(args.id)
    probe = extract_field(load_image(args.probe), params)
    res = verify(g, record.id, probe, cfg)
    print(f"score={res.score:.6f} decision={res.decision}")
    return EXIT_OK if res.decision == ACCEPT else EXIT_REJECT


def cmd_identify(args):
    params = _pipeline(args)
    cfg = _match_cfg(args)
    g = _open_gallery(args.gallery, params)
    probe = extract_field(load_image(args.probe), params)
    best, res, ranked = identify(g, probe, cfg)
    for ident, score in ranked:
        print(f"{ident} {score:.6f}")
    print(f"best={best} decision={res.decision}")
    return EXIT_OK if res.decision == ACCEPT else EXIT_REJECT


def cmd_field(args):
    params = _pipeline(args)
    canny = CannyConfig(args.canny_low, args.canny_high)
    img = load_image(args.image)
    f = extract_field(img, params)
    write_template(f, args.template, source=str(args.image))
    print(f"grid={f.rows}x{f.cols} mode={f.mode} block={f.block_size}")
    if args.arrows:
        arrows = Path(args.arrows)
        save_image(render_arrows(f, args.scale), arrows)
        edges = canny_edges(median_filter(img, MedianConfig(params.median_window)), canny)
        stem = arrows.name[:-len(arrows.suffix)] if arrows.suffix else arrows.name
        save_image(edges, arrows.with_name(stem + ".edges.pgm"))
    return EXIT_OK


def _parse_sizes(text, classes):
    if text is None:
        return sorted({max(1, round(classes * k / 5)) for k in range(1, 6)})
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise CCFOError(f"invalid --sizes {text!r}") from None


def cmd_eval(args):
    if args.out is None:
        raise CCFOError("eval needs --out for the CSV report")
    synth = SynthParams(size=args.image_size, pattern=args.pattern, ridge_period=args.ridge_period,
                        noise_sigma=args.noise, occlusion_frac=args.occlusion)
    report = run_benchmark(args.classes, args.samples, _parse_sizes(args.sizes, args.classes),
                           synth=synth, pipeline=_pipeline(args), match_cfg=_match_cfg(args),
                           seed=args.seed)
    report.write_csv(args.out)
    g, r1, mg, mi = report.sizes[-1]
    print(f"gallery_size={g} rank1_rate={r1:.6f} mean_genuine={mg:.6f} mean_impostor={mi:.6f}")
    return EXIT_OK


COMMANDS = {
    "enroll": cmd_enroll,
    "verify": cmd_verify,
    "identify": cmd_identify,
    "field": cmd_field,
    "eval": cmd_eval,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (CCFOError, OSError, ValueError) as exc:
        print(f"ccfo {args.command}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

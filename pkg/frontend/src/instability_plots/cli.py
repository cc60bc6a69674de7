"""Command line for rendering solver artifacts into figures."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from .artifacts import ArtifactError, load_style
from .render import _RENDERERS, PlotSpec, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="instab-plot",
        description="Render instability solver artifacts into figures.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render one figure")
    p.add_argument("--family", required=True, choices=sorted(_RENDERERS))
    p.add_argument("--in", dest="inputs", required=True, nargs="+",
                   help="artifact directory, or the CSV and JSON files")
    p.add_argument("--out", required=True, help="output image path (.svg/.png)")
    p.add_argument("--style", help="flat key=value style file")
    p.add_argument("--overlay", nargs="*", default=[],
                   help="additional artifact directories drawn underneath")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = PlotSpec(
            family=args.family,
            inputs=[Path(p) for p in args.inputs],
            output=Path(args.out),
            style=load_style(Path(args.style) if args.style else None),
            overlays=[Path(p) for p in args.overlay],
        )
        out = render(spec)
    except ArtifactError as exc:
        print(f"artifact error: {exc}", file=sys.stderr)
        return 2
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Rasterize SVG files through an external renderer command.

The renderer is invoked as ``<command...> <in.svg> <out.png>``. The bundled
``diagram-align-render`` command implements that contract with cairosvg
(install the ``render`` extra).
"""
from __future__ import annotations

import shlex
import subprocess
import sys
import tempfile
from pathlib import Path
from typing import Sequence

from ..errors import RenderError

DEFAULT_RENDERER = ("diagram-align-render",)


def renderer_command(value: str | Sequence[str] | None) -> tuple[str, ...]:
    if value is None:
        return DEFAULT_RENDERER
    if isinstance(value, str):
        parts = tuple(shlex.split(value))
    else:
        parts = tuple(str(v) for v in value)
    if not parts:
        raise ValueError("renderer command is empty")
    return parts


def render_svg(svg_path: str | Path, renderer: Sequence[str] = DEFAULT_RENDERER, timeout: float = 120.0) -> bytes:
    """Render ``svg_path`` to PNG bytes."""
    with tempfile.TemporaryDirectory(prefix="diagram-align-") as tmp:
        out = Path(tmp) / "render.png"
        cmd = [*renderer, str(svg_path), str(out)]
        try:
            proc = subprocess.run(cmd, capture_output=True, timeout=timeout)
        except FileNotFoundError:
            raise RenderError(f"renderer {renderer[0]!r} not found") from None
        except subprocess.TimeoutExpired:
            raise RenderError(f"renderer timed out after {timeout:g}s") from None
        if proc.returncode != 0:
            err = proc.stderr.decode("utf-8", "replace").strip()
            raise RenderError(f"renderer exited with status {proc.returncode}: {err}")
        if not out.exists():
            raise RenderError("renderer produced no output file")
        return out.read_bytes()


def main(argv: Sequence[str] | None = None) -> int:
    args = list(sys.argv[1:] if argv is None else argv)
    if len(args) != 2:
        print("usage: diagram-align-render IN.svg OUT.png", file=sys.stderr)
        return 1
    try:
        import cairosvg
    except ImportError:
        print("cairosvg is not installed; install the 'render' extra", file=sys.stderr)
        return 3
    try:
        cairosvg.svg2png(url=args[0], write_to=args[1], background_color="white")
    except Exception as exc:  # cairosvg raises a wide range of parse errors
        print(f"render failed: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""File formats: PBM/PGM images and the CSV table writers."""

from __future__ import annotations

import csv
from fractions import Fraction
from typing import IO, Sequence, Union

PathOrFile = Union[str, "IO[str]"]


def _read_text(src: PathOrFile) -> str:
    if hasattr(src, "read"):
        return src.read()  # type: ignore[union-attr]
    with open(src, "r") as fp:
        return fp.read()


def _write_text(dest: PathOrFile, text: str) -> None:
    if hasattr(dest, "write"):
        dest.write(text)  # type: ignore[union-attr]
        return
    with open(dest, "w") as fp:
        fp.write(text)


def read_pbm(src: PathOrFile) -> tuple[int, int, tuple[int, ...]]:
    """Read an ASCII (P1) bitmap; returns (height, width, raster bits)."""
    text = _read_text(src)
    tokens: list[str] = []
    for line in text.splitlines():
        body = line.split("#", 1)[0]
        tokens.extend(body.split())
    if not tokens or tokens[0] != "P1":
        raise ValueError("not an ASCII PBM (P1) image")
    if len(tokens) < 3:
        raise ValueError("truncated PBM header")
    try:
        width, height = int(tokens[1]), int(tokens[2])
    except ValueError:
        raise ValueError("bad PBM dimensions")
    digits = "".join(tokens[3:])
    if len(digits) != width * height or any(d not in "01" for d in digits):
        raise ValueError(
            "PBM body must carry exactly %d binary digits" % (width * height)
        )
    return height, width, tuple(int(d) for d in digits)


def write_pbm(bits: Sequence[int], height: int, width: int, dest: PathOrFile) -> None:
    if len(bits) != height * width:
        raise ValueError("bit count does not match the image size")
    lines = ["P1", "%d %d" % (width, height)]
    for r in range(height):
        lines.append(" ".join(str(bits[r * width + c]) for c in range(width)))
    _write_text(dest, "\n".join(lines) + "\n")


def write_pgm(values: Sequence[float], height: int, width: int, dest: PathOrFile) -> None:
    """Write a grayscale (P2) heatmap, min-max rescaled to 0..255.

    Presentation only: the rescaling destroys the absolute scale.
    """
    if len(values) != height * width:
        raise ValueError("value count does not match the image size")
    lo = min(values)
    span = max(values) - lo
    if span:
        gray = [round(255 * (float(v) - lo) / span) for v in values]
    else:
        gray = [0] * len(values)
    lines = ["P2", "%d %d" % (width, height), "255"]
    for r in range(height):
        lines.append(" ".join(str(gray[r * width + c]) for c in range(width)))
    _write_text(dest, "\n".join(lines) + "\n")


def _csv_writer(dest: PathOrFile):
    if hasattr(dest, "write"):
        return csv.writer(dest), None
    fp = open(dest, "w", newline="")
    return csv.writer(fp), fp


def write_histogram_csv(counts, num_vars: int, dest: PathOrFile) -> None:
    """Rows `k,count,proportion`; proportions are exact fractions."""
    writer, fp = _csv_writer(dest)
    try:
        writer.writerow(["k", "count", "proportion"])
        for k, count in sorted(dict(counts).items()):
            writer.writerow([k, count, str(Fraction(count, 2**num_vars))])
    finally:
        if fp:
            fp.close()


def write_marginal_grid_csv(rows, dest: PathOrFile) -> None:
    """Rows `var,row,col,marginal` with exact fraction marginals."""
    writer, fp = _csv_writer(dest)
    try:
        writer.writerow(["var", "row", "col", "marginal"])
        for var, r, c, value in rows:
            writer.writerow([var, r, c, str(value)])
    finally:
        if fp:
            fp.close()


def write_unateness_grid_csv(rows, dest: PathOrFile) -> None:
    """Rows `var,row,col,label` with labels pos/neg/unused/none."""
    writer, fp = _csv_writer(dest)
    try:
        writer.writerow(["var", "row", "col", "label"])
        for var, r, c, value in rows:
            writer.writerow([var, r, c, value.value])
    finally:
        if fp:
            fp.close()


def write_sweep_csv(rows, dest: PathOrFile) -> None:
    """Rows `digits,accuracy,nodes,status`; blank cells for failed steps."""
    writer, fp = _csv_writer(dest)
    try:
        writer.writerow(["digits", "accuracy", "nodes", "status"])
        for row in rows:
            writer.writerow(
                [
                    row.digits,
                    "%.6f" % float(row.accuracy) if row.accuracy is not None else "",
                    row.nodes if row.nodes is not None else "",
                    row.status,
                ]
            )
    finally:
        if fp:
            fp.close()

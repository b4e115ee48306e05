"""Render trajectory CSVs into the two standard panel layouts.

This package is a pure consumer of the simulator's CSV interface: columns
``t``, ``S_<label>``, ``P_<label>``, ``U_bar``, ``U_avg``, ``entropy``.
Plotted series are the raw column arrays, never recomputed or rescaled, so
a checksum of what is drawn equals a checksum of what was read.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["PanelSpec", "RenderResult", "SchemaError", "read_table", "render"]

LAYOUTS = ("fig1", "fig2")


class SchemaError(ValueError):
    """The CSV is missing, empty, or lacks a required column."""


@dataclass(frozen=True)
class PanelSpec:
    """What to draw: the two CSVs, the layout, and the image destination."""

    layout: str
    neq_csv: Path
    mnl_csv: Path
    out_path: Path

    def __post_init__(self):
        if self.layout not in LAYOUTS:
            raise SchemaError(f"unknown layout {self.layout!r}; expected one of {LAYOUTS}")


@dataclass(frozen=True)
class RenderResult:
    """The written image plus the exact arrays that were drawn.

    ``series`` maps "<panel>:<column>" to the untouched CSV column; the
    total-units overlay (a sum of share columns) is kept separately because
    it is derived, not read.
    """

    image_path: Path
    series: dict = field(default_factory=dict)
    overlays: dict = field(default_factory=dict)


def read_table(path) -> dict:
    """Read one trajectory CSV into {column name: float array}."""
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"CSV file {path} does not exist")
    with path.open(newline="", encoding="utf-8") as handle:
        rows = list(csv.reader(handle))
    if not rows or not rows[0]:
        raise SchemaError(f"CSV file {path} is empty")
    header, data = rows[0], rows[1:]
    if not data:
        raise SchemaError(f"CSV file {path} has a header but no rows")
    matrix = np.array([[float(value) for value in row] for row in data])
    return {name: matrix[:, k] for k, name in enumerate(header)}


def _require(table: dict, column: str, path) -> np.ndarray:
    if column not in table:
        raise SchemaError(f"missing column {column!r} in {path}")
    return table[column]


def _product_labels(table: dict, path) -> list:
    labels = [name[2:] for name in table if name.startswith("S_")]
    if not labels:
        raise SchemaError(f"missing column 'S_<label>' in {path}")
    for lab in labels:
        _require(table, f"P_{lab}", path)
    return labels


def render(spec: PanelSpec) -> RenderResult:
    """Draw the layout and write the image atomically.

    All validation happens before anything touches ``out_path``; the image
    is then written to a temporary sibling and moved into place, so a
    failed render never leaves a partial file.
    """
    neq = read_table(spec.neq_csv)
    mnl = read_table(spec.mnl_csv)
    series: dict = {}
    overlays: dict = {}

    def tracked(panel, table, column, path):
        arr = _require(table, column, path)
        series[f"{panel}:{column}"] = arr
        return arr

    neq_labels = _product_labels(neq, spec.neq_csv)
    mnl_labels = _product_labels(mnl, spec.mnl_csv)
    if neq_labels != mnl_labels:
        raise SchemaError(
            f"product columns differ between {spec.neq_csv} and {spec.mnl_csv}"
        )
    t_neq = _require(neq, "t", spec.neq_csv)
    t_mnl = _require(mnl, "t", spec.mnl_csv)
    _require(neq, "U_bar", spec.neq_csv)

    fig, axes = plt.subplots(2, 2, figsize=(10.0, 7.0), constrained_layout=True)
    (ax_a, ax_b), (ax_c, ax_d) = axes

    if spec.layout == "fig1":
        panels = [
            (ax_a, "a) shares, non-equilibrium", neq, t_neq, "S_", spec.neq_csv),
            (ax_b, "b) preferences, non-equilibrium", neq, t_neq, "P_", spec.neq_csv),
            (ax_c, "c) shares, instantaneous logit", mnl, t_mnl, "S_", spec.mnl_csv),
            (ax_d, "d) preferences, instantaneous logit", mnl, t_mnl, "P_", spec.mnl_csv),
        ]
        for ax, title, table, t, prefix, path in panels:
            for lab in neq_labels:
                ax.plot(t, tracked(title[:2], table, f"{prefix}{lab}", path), label=lab)
            ax.set_title(title)
            ax.set_xlabel("t")
            ax.set_ylabel(prefix.rstrip("_"))
        ax_a.legend(title="product", fontsize=8)
    else:  # fig2
        share_cols = []
        for lab in neq_labels:
            arr = tracked("a)", neq, f"S_{lab}", spec.neq_csv)
            ax_a.plot(t_neq, arr, label=lab)
            share_cols.append(arr)
        total = np.sum(share_cols, axis=0)
        overlays["a):total_units"] = total
        ax_a.plot(t_neq, total, "k--", linewidth=1.0, label="total units")
        ax_a.set_title("a) diffusion of successive innovations")
        ax_a.set_xlabel("t")
        ax_a.set_ylabel("S")
        ax_a.legend(title="product", fontsize=8)

        for lab in neq_labels:
            ax_b.plot(t_neq, tracked("b)", neq, f"P_{lab}", spec.neq_csv), label=lab)
        ax_b.set_title("b) instantaneous preferences")
        ax_b.set_xlabel("t")
        ax_b.set_ylabel("P")

        ax_c.plot(t_neq, tracked("c)", neq, "U_bar", spec.neq_csv), color="tab:red")
        ax_c.set_title("c) representative utility")
        ax_c.set_xlabel("t")
        ax_c.set_ylabel("U_bar")

        for lab in neq_labels:
            ax_d.plot(t_mnl, tracked("d)", mnl, f"S_{lab}", spec.mnl_csv), label=lab)
        ax_d.set_title("d) instantaneous-logit comparison")
        ax_d.set_xlabel("t")
        ax_d.set_ylabel("S")

    out_path = Path(spec.out_path)
    tmp_path = out_path.with_name(out_path.name + ".tmp")
    try:
        fig.savefig(tmp_path, dpi=150, format=out_path.suffix.lstrip(".") or "png",
                    metadata={"Software": "choicedyn-plots"})
        os.replace(tmp_path, out_path)
    finally:
        plt.close(fig)
        if tmp_path.exists():
            tmp_path.unlink()
    return RenderResult(image_path=out_path, series=series, overlays=overlays)

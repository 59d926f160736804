"""(beta1, beta2) epidemic diagrams.

A diagram is a grid of cells, each holding the theory verdict and/or the
simulated verdict, plus three theory curves:

* green: the epidemic threshold ``beta1 = 1 / rho(Gamma^-1 A)``;
* blue: the bistable threshold ``beta2 = beta2_hat(beta1)``;
* red: where the disease-free spectral condition holds with equality.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .analysis import (
    Domain,
    DomainClassification,
    beta2_bistable_threshold,
    classify_theory,
    disease_free_boundary_beta2,
)
from .errors import SisError
from .model import SimplicialSis
from .sim import IntegratorConfig, classify_empirical

log = logging.getLogger(__name__)

MODES = ("theory", "empirical", "both")

SHADES = {
    Domain.DISEASE_FREE: "#d3d3d3",
    Domain.BISTABLE: "#808080",
    Domain.ENDEMIC: "#000000",
}
BLANK = "#ffffff"
CURVE_COLORS = {"green": "#00a000", "blue": "#0050ff", "red": "#e00000"}


@dataclass(frozen=True)
class GridSpec:
    beta1_range: tuple[float, float]
    beta2_range: tuple[float, float]
    resolution: tuple[int, int]

    def __post_init__(self):
        for (lo, hi), count, name in ((self.beta1_range, self.resolution[0], "beta1"),
                                      (self.beta2_range, self.resolution[1], "beta2")):
            if count < 1:
                raise ValueError(f"{name} resolution must be positive")
            if count == 1 and lo != hi:
                raise ValueError(f"a single {name} sample needs lo == hi")
            if count >= 2 and not lo < hi:
                raise ValueError(f"{name} range needs lo < hi")

    @property
    def beta1_values(self) -> np.ndarray:
        return np.linspace(*self.beta1_range, self.resolution[0])

    @property
    def beta2_values(self) -> np.ndarray:
        return np.linspace(*self.beta2_range, self.resolution[1])

    @classmethod
    def parse(cls, text: str) -> "GridSpec":
        """Parse ``b1lo:b1hi:n1,b2lo:b2hi:n2``."""
        try:
            first, second = text.split(",")
            a = first.split(":")
            b = second.split(":")
            return cls((float(a[0]), float(a[1])), (float(b[0]), float(b[1])), (int(a[2]), int(b[2])))
        except (ValueError, IndexError) as exc:
            raise ValueError(f"bad grid {text!r}; expected b1lo:b1hi:n1,b2lo:b2hi:n2") from exc


@dataclass(frozen=True)
class Cell:
    beta1: float
    beta2: float
    theory: DomainClassification | None
    empirical: Domain | None
    note: str = ""

    @property
    def shade_domain(self) -> Domain | None:
        if self.empirical is not None:
            return self.empirical
        return self.theory.domain if self.theory is not None else None


@dataclass(frozen=True)
class Diagram:
    grid: GridSpec
    cells: list[Cell]
    green: float | None
    blue: list[tuple[float, float]] = field(default_factory=list)
    red: list[tuple[float, float]] = field(default_factory=list)

    def cell(self, i1: int, i2: int) -> Cell:
        return self.cells[i1 * self.grid.resolution[1] + i2]


def default_grid(template: SimplicialSis, resolution=(60, 60)) -> GridSpec:
    """Standard window: beta1 up to twice the epidemic threshold, beta2 up
    to twice the bistable threshold at vanishing beta1.  Samples sit at cell
    centres, which keeps the rates positive and keeps the even-resolution
    grid off the epidemic threshold itself."""
    n1, n2 = resolution
    b1_hi = 2.0 / linalg.spectral_radius(template.A / template.gamma[:, None])
    near_zero = template.with_rates(beta1=1e-9 * b1_hi)
    b2_hat = beta2_bistable_threshold(near_zero)
    if b2_hat is None or b2_hat <= 0:
        red = disease_free_boundary_beta2(near_zero, near_zero.beta1)
        b2_hat = red if math.isfinite(red) else 1.0
    b2_hi = 2.0 * b2_hat
    return GridSpec((0.5 * b1_hi / n1, b1_hi - 0.5 * b1_hi / n1),
                    (0.5 * b2_hi / n2, b2_hi - 0.5 * b2_hi / n2), (n1, n2))


def _evaluate(template: SimplicialSis, beta1: float, beta2: float, mode: str,
              cfg: IntegratorConfig) -> Cell:
    try:
        model = template.with_rates(beta1=beta1, beta2=beta2)
        theory = classify_theory(model) if mode in ("theory", "both") else None
        empirical = classify_empirical(model, cfg) if mode in ("empirical", "both") else None
        return Cell(beta1, beta2, theory, empirical)
    except (SisError, ValueError, ArithmeticError) as exc:
        log.info("cell (%g, %g) failed: %s", beta1, beta2, exc)
        return Cell(beta1, beta2, None, Domain.UNDECIDED, note=f"{type(exc).__name__}: {exc}")


def _evaluate_chunk(args):
    template, points, mode, cfg = args
    return [_evaluate(template, b1, b2, mode, cfg) for b1, b2 in points]


def boundaries(template: SimplicialSis, beta1_values):
    """Green threshold and the blue/red curves sampled at ``beta1_values``."""
    green = 1.0 / linalg.spectral_radius(template.A / template.gamma[:, None])
    blue, red = [], []
    for b1 in beta1_values:
        if b1 * (1.0 / green) >= 1.0:
            continue
        model = template.with_rates(beta1=float(b1))
        hat = beta2_bistable_threshold(model)
        if hat is not None:
            blue.append((float(b1), hat))
        edge = disease_free_boundary_beta2(model, float(b1))
        if math.isfinite(edge):
            red.append((float(b1), edge))
    return green, blue, red


def sweep(template: SimplicialSis, grid: GridSpec, cfg: IntegratorConfig | None = None,
          mode: str = "theory", workers: int = 1) -> Diagram:
    """Classify every grid cell; cells are independent and merged by grid index."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    cfg = cfg or IntegratorConfig()
    points = [(float(b1), float(b2)) for b1 in grid.beta1_values for b2 in grid.beta2_values]
    if workers <= 1:
        cells = _evaluate_chunk((template, points, mode, cfg))
    else:
        size = max(1, math.ceil(len(points) / (4 * workers)))
        chunks = [(template, points[i:i + size], mode, cfg) for i in range(0, len(points), size)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cells = [c for part in pool.map(_evaluate_chunk, chunks) for c in part]
    green, blue, red = boundaries(template, grid.beta1_values)
    return Diagram(grid=grid, cells=cells, green=green, blue=blue, red=red)


# ------------------------------------------------------------------ exporters

def _fmt(value) -> str:
    if value is None:
        return ""
    return repr(float(value))


def export_csv(d: Diagram, path):
    lines = ["beta1,beta2,theory,empirical,rho_df,bistable_margin"]
    for c in d.cells:
        t = c.theory
        lines.append(",".join([
            _fmt(c.beta1), _fmt(c.beta2),
            "" if t is None else t.domain.value,
            "" if c.empirical is None else c.empirical.value,
            "" if t is None else _fmt(t.disease_free_lhs),
            "" if t is None else _fmt(t.bistable_margin),
        ]))
    lines += ["", "# boundary: green", "beta1"]
    if d.green is not None:
        lines.append(_fmt(d.green))
    for name, curve in (("blue", d.blue), ("red", d.red)):
        lines += ["", f"# boundary: {name}", "beta1,beta2"]
        lines += [f"{_fmt(b1)},{_fmt(b2)}" for b1, b2 in curve]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def export_svg(d: Diagram, path, cell_px: int = 10):
    n1, n2 = d.grid.resolution
    margin = 50
    width, height = n1 * cell_px, n2 * cell_px
    (x_lo, x_hi), (y_lo, y_hi) = d.grid.beta1_range, d.grid.beta2_range

    def px(b1):
        span = x_hi - x_lo
        return margin + (cell_px / 2 if span == 0 else (b1 - x_lo) / span * (width - cell_px) + cell_px / 2)

    def py(b2):
        span = y_hi - y_lo
        return margin + height - (cell_px / 2 if span == 0 else (b2 - y_lo) / span * (height - cell_px) + cell_px / 2)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width + 2 * margin}" '
        f'height="{height + 2 * margin}" viewBox="0 0 {width + 2 * margin} {height + 2 * margin}">',
        f'<defs><clipPath id="plot"><rect x="{margin}" y="{margin}" width="{width}" height="{height}"/></clipPath></defs>',
        f'<rect x="0" y="0" width="{width + 2 * margin}" height="{height + 2 * margin}" fill="{BLANK}"/>',
    ]
    for i1 in range(n1):
        for i2 in range(n2):
            dom = d.cell(i1, i2).shade_domain
            fill = SHADES.get(dom, BLANK)
            x = margin + i1 * cell_px
            y = margin + height - (i2 + 1) * cell_px
            out.append(f'<rect x="{x}" y="{y}" width="{cell_px}" height="{cell_px}" fill="{fill}"/>')
    curves = ['<g clip-path="url(#plot)" fill="none" stroke-width="2">']
    if d.green is not None:
        gx = px(d.green)
        curves.append(f'<line x1="{gx:.3f}" y1="{margin}" x2="{gx:.3f}" y2="{margin + height}" '
                      f'stroke="{CURVE_COLORS["green"]}"/>')
    for name, curve in (("blue", d.blue), ("red", d.red)):
        if len(curve) >= 2:
            pts = " ".join(f"{px(b1):.3f},{py(b2):.3f}" for b1, b2 in curve)
            curves.append(f'<polyline points="{pts}" stroke="{CURVE_COLORS[name]}"/>')
    curves.append("</g>")
    out += curves
    out += [
        f'<rect x="{margin}" y="{margin}" width="{width}" height="{height}" fill="none" stroke="#000000"/>',
        f'<text x="{margin + width / 2:.1f}" y="{height + 2 * margin - 12}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12">beta1 [{x_lo:.4g}, {x_hi:.4g}]</text>',
        f'<text x="14" y="{margin + height / 2:.1f}" text-anchor="middle" font-family="sans-serif" '
        f'font-size="12" transform="rotate(-90 14 {margin + height / 2:.1f})">beta2 [{y_lo:.4g}, {y_hi:.4g}]</text>',
        "</svg>",
    ]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(out) + "\n")

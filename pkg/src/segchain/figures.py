"""CSV tables and plain SVG line plots for the analysis sweeps."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

from .analysis import (
    CaptureParams,
    ShardCombineParams,
    StorageModelParams,
    capture_probability,
    monte_carlo_capture,
    nakamoto_storage_bytes,
    node_storage_bytes,
    sharding_segment_count,
)

CAPTURE_COLUMNS = ("m", "n", "AD", "exact", "approx", "mc_mean", "mc_ci")
RATIO_COLUMNS = ("n", "s1", "T", "s0", "ratio")
STORAGE_COLUMNS = ("h", "s", "accounts", "seg_bytes", "nakamoto_bytes")

COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")
SVG_MAX_POINTS = 2000


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Sequence]) -> int:
    n = 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow(row)
            n += 1
    return n


# ---------------------------------------------------------------- tables

def capture_rows(ms: Sequence[int], s: int, ad_fraction: float = 0.5, trials: int = 0,
                 seed: int = 1, T: int | None = None, workers: int = 1) -> list[tuple]:
    rows = []
    for m in ms:
        n = m * s
        params = CaptureParams(n=n, m=m, s=s, AD=math.floor(ad_fraction * n), T=T)
        res = capture_probability(params)
        if trials > 0:
            mc = monte_carlo_capture(params, trials, seed, res.placement, workers=workers)
            mc_mean, mc_ci = f"{mc.mean:.9g}", f"{mc.ci95:.9g}"
        else:
            mc_mean = mc_ci = ""
        rows.append((m, n, params.AD, _frac(res.exact), _frac(res.approx), mc_mean, mc_ci))
    return rows


def _frac(p: Fraction) -> str:
    # shortest round-trip float; exact fraction if it underflows
    return repr(float(p)) if float(p) > 0 or p == 0 else f"{p.numerator}/{p.denominator}"


def ratio_rows(ns: Sequence[int], s1s: Sequence[int], t_frac: float = 0.6,
               T: float | None = None) -> list[tuple]:
    rows = []
    for n in ns:
        for s1 in s1s:
            t = T if T is not None else t_frac * n / s1
            res = sharding_segment_count(ShardCombineParams(n, s1, t))
            rows.append((n, s1, f"{t:.12g}", f"{res.s0:.12g}", f"{res.ratio:.12g}"))
    return rows


def storage_rows(heights: Sequence[int], s: int, accounts: Sequence[int], SB: int = 1_000_000,
                 pending_per_block: int = 256) -> list[tuple]:
    rows = []
    for acc in accounts:
        for h in heights:
            p = StorageModelParams(SB=SB, pending_per_block=pending_per_block, accounts=acc, h=h, s=s)
            rows.append((h, s, acc, node_storage_bytes(p), nakamoto_storage_bytes(h, SB)))
    return rows


# ---------------------------------------------------------------- svg

def _thin(points: Sequence[tuple[float, float]]) -> list[tuple[float, float]]:
    if len(points) <= SVG_MAX_POINTS:
        return list(points)
    step = math.ceil(len(points) / SVG_MAX_POINTS)
    out = list(points[::step])
    if out[-1] != points[-1]:
        out.append(points[-1])
    return out


def _ticks(lo: float, hi: float, k: int = 5) -> list[float]:
    if hi == lo:
        return [lo]
    return [lo + (hi - lo) * i / (k - 1) for i in range(k)]


def _fmt(v: float) -> str:
    if v != 0 and (abs(v) >= 1e5 or abs(v) < 1e-2):
        return f"{v:.2e}"
    return f"{v:.4g}"


def svg_line_plot(path: Path, series: dict[str, Sequence[tuple[float, float]]], xlabel: str,
                  ylabel: str, title: str = "", logy: bool = False) -> None:
    """One polyline per series, linear x, linear or log10 y, with labeled axes."""
    W, H, L, R, T, B = 720, 440, 90, 170, 40, 60
    pw, ph = W - L - R, H - T - B
    data = {}
    for name, pts in series.items():
        pts = [(float(x), float(y)) for x, y in pts if not logy or y > 0]
        data[name] = _thin([(x, math.log10(y) if logy else y) for x, y in pts])
    xs = [x for pts in data.values() for x, _ in pts] or [0.0, 1.0]
    ys = [y for pts in data.values() for _, y in pts] or [0.0, 1.0]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1

    def px(x):
        return L + (x - x0) / (x1 - x0) * pw

    def py(y):
        return T + ph - (y - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="11">',
           f'<rect width="{W}" height="{H}" fill="white"/>']
    if title:
        out.append(f'<text x="{L + pw / 2:.1f}" y="22" text-anchor="middle" font-size="14">{title}</text>')
    out.append(f'<line x1="{L}" y1="{T + ph}" x2="{L + pw}" y2="{T + ph}" stroke="black"/>')
    out.append(f'<line x1="{L}" y1="{T}" x2="{L}" y2="{T + ph}" stroke="black"/>')
    for v in _ticks(x0, x1):
        out.append(f'<line x1="{px(v):.1f}" y1="{T + ph}" x2="{px(v):.1f}" y2="{T + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{px(v):.1f}" y="{T + ph + 18}" text-anchor="middle">{_fmt(v)}</text>')
    for v in _ticks(y0, y1):
        label = f"1e{v:.3g}" if logy else _fmt(v)
        out.append(f'<line x1="{L - 5}" y1="{py(v):.1f}" x2="{L}" y2="{py(v):.1f}" stroke="black"/>')
        out.append(f'<text x="{L - 8}" y="{py(v) + 4:.1f}" text-anchor="end">{label}</text>')
    out.append(f'<text x="{L + pw / 2:.1f}" y="{H - 15}" text-anchor="middle">{xlabel}</text>')
    ylab = f"{ylabel} (log scale)" if logy else ylabel
    out.append(f'<text x="20" y="{T + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 20 {T + ph / 2:.1f})">{ylab}</text>')
    for i, (name, pts) in enumerate(data.items()):
        color = COLORS[i % len(COLORS)]
        coords = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in pts)
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{coords}"/>')
        ly = T + 14 + 18 * i
        out.append(f'<line x1="{L + pw + 12}" y1="{ly}" x2="{L + pw + 32}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{L + pw + 38}" y="{ly + 4}">{name}</text>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n")


# ---------------------------------------------------------------- bundle

@dataclass(frozen=True)
class FigureConfig:
    ratio_ns: tuple[int, ...] = (4000, 8000)
    ratio_s1: tuple[int, ...] = (4, 8, 16, 32, 64)
    ratio_t_frac: float = 0.6
    SB: int = 1_000_000
    pending_per_block: int = 256
    m: int = 256
    nodes: int = 8000
    accounts: tuple[int, ...] = (0, 10_000, 100_000, 1_000_000)
    h_max: int = 100_000
    h_points: int = 400
    capture_ms: tuple[int, ...] = (2, 4, 8, 16, 32, 64, 128, 256)
    capture_s: int = 64
    capture_trials: int = 0
    seed: int = 1

    @property
    def s(self) -> int:
        return max(1, self.nodes // self.m)


def growth_heights(s: int, h_max: int, points: int) -> list[int]:
    """Multiples of s up to h_max, at most ``points`` of them. A fixed s gives
    a sawtooth between multiples, so curves are sampled on whole windows."""
    last = h_max // s
    step = max(1, math.ceil(last / points))
    return [k * s for k in range(1, last + 1, step)]


def emit_figures(out_dir: str | Path, cfg: FigureConfig = FigureConfig()) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    rows = ratio_rows(cfg.ratio_ns, cfg.ratio_s1, cfg.ratio_t_frac)
    write_csv(out / "ratio.csv", RATIO_COLUMNS, rows)
    series = {f"n={n}": [(int(r[1]), float(r[4])) for r in rows if r[0] == n] for n in cfg.ratio_ns}
    svg_line_plot(out / "ratio.svg", series, "s1 (shards)", "s0/s1", "segment count ratio at T = 0.6 n/s1")
    written += [out / "ratio.csv", out / "ratio.svg"]

    heights = growth_heights(cfg.s, cfg.h_max, cfg.h_points)
    rows = storage_rows(heights, cfg.s, cfg.accounts, cfg.SB, cfg.pending_per_block)
    write_csv(out / "storage.csv", STORAGE_COLUMNS, rows)
    series = {f"accounts={a}": [(r[0], r[3] / 1e6) for r in rows if r[2] == a] for a in cfg.accounts}
    svg_line_plot(out / "storage.svg", series, "height h", "bytes per node (MB)", f"per-node storage, s = {cfg.s}")
    series = {f"segment, acc={a}": [(r[0], r[3] / 1e6) for r in rows if r[2] == a] for a in cfg.accounts}
    series["nakamoto"] = [(r[0], r[4] / 1e6) for r in rows if r[2] == cfg.accounts[0]]
    svg_line_plot(out / "storage_vs_nakamoto.svg", series, "height h", "bytes per node (MB)",
                  "segment chain vs full replication", logy=True)
    written += [out / "storage.csv", out / "storage.svg", out / "storage_vs_nakamoto.svg"]

    rows = capture_rows(cfg.capture_ms, cfg.capture_s, 0.5, cfg.capture_trials, cfg.seed)
    write_csv(out / "capture.csv", CAPTURE_COLUMNS, rows)
    svg_line_plot(out / "capture.svg", {"exact": [(r[0], float(r[3])) for r in rows]}, "occupations m",
                  "capture probability", "capture probability at AD = n/2", logy=True)
    written += [out / "capture.csv", out / "capture.svg"]
    return written

"""Tables, plain-text summary and figures rendered from a campaign's report.json."""

from __future__ import annotations

import csv
import io
from pathlib import Path

from .coverage import CoverageReport, blocks, tuple_universe
from .monitors import REQUIREMENTS

REQUIRED_FILES = ("report.json",)


class ReportError(RuntimeError):
    pass


def _parts(report: CoverageReport) -> dict:
    if report.parts:
        return report.parts
    # an unsealed report still renders, as one anonymous column
    return {"campaign": {"runs": report.runs, "requirements": report.requirements, "tuples": report.tuples}}


def table1_csv(report: CoverageReport) -> str:
    """Rows are requirements; each campaign contributes covered/passed/failed columns."""
    parts = _parts(report)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["requirement"]
    for name in list(parts) + ["TOTAL"]:
        header += [f"{name} C", f"{name} P", f"{name} F"]
    w.writerow(header)
    for req in REQUIREMENTS:
        row = [req]
        for part in parts.values():
            row += part["requirements"][req]
        row += report.requirements[req]
        w.writerow(row)
    return buf.getvalue()


def table2_csv(report: CoverageReport) -> str:
    """Rows are the 33 cross-product tuples in universe order; cells are hits/runs."""
    parts = _parts(report)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["tuple", "reachable"] + list(parts) + ["TOTAL"])
    for t, reachable in tuple_universe():
        cells = [f"{p['tuples'][t.key]}/{p['runs']}" for p in parts.values()]
        w.writerow([t.pretty(), int(reachable)] + cells + [f"{report.tuples[t.key]}/{report.runs}"])
    return buf.getvalue()


def statements_csv(report: CoverageReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["block", "statements", "hit", "percent"])
    for loc, ids in blocks().items():
        hit = len(report.statements.intersection(ids))
        w.writerow([loc, len(ids), hit, f"{100.0 * hit / len(ids):.1f}"])
    total = sum(len(ids) for ids in blocks().values())
    w.writerow(["overall", total, len(report.statements), f"{report.stmt()['overall']:.1f}"])
    return buf.getvalue()


def summary_text(report: CoverageReport) -> str:
    lines = [
        f"runs {report.runs}",
        f"conclusive {report.conclusive}",
        f"errors {report.errors}",
        f"statement coverage {report.stmt()['overall']:.1f}%",
        f"tuples hit {sum(1 for n in report.tuples.values() if n)} of {len(report.tuples)}",
        "",
        "requirement covered passed failed",
    ]
    for req in REQUIREMENTS:
        c, p, f = report.requirements[req]
        lines.append(f"{req} {c} {p} {f}")
    unreachable = report.metadata.get("unreachable_targets") or []
    if unreachable:
        lines += ["", "targets the model cannot reach:"] + [f"  {u}" for u in unreachable]
    return "\n".join(lines) + "\n"


def render_figures(report: CoverageReport, figdir: Path) -> list:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    import numpy as np

    figdir.mkdir(parents=True, exist_ok=True)
    written = []

    reqs = list(REQUIREMENTS)
    rows = np.array([report.requirements[r] for r in reqs])
    fig, ax = plt.subplots(figsize=(8, 4))
    x = np.arange(len(reqs))
    ax.bar(x - 0.25, rows[:, 0], 0.25, label="covered")
    ax.bar(x, rows[:, 1], 0.25, label="passed")
    ax.bar(x + 0.25, rows[:, 2], 0.25, label="failed")
    ax.set_xticks(x, reqs)
    ax.set_ylabel("runs")
    ax.set_title(f"Requirements coverage ({report.runs} runs)")
    ax.legend()
    fig.tight_layout()
    written.append(_save(fig, figdir / "requirements.png"))

    universe = tuple_universe()
    humans = list(dict.fromkeys(t.human for t, _ in universe))
    robots = list(dict.fromkeys(t.robot for t, _ in universe))
    grid = np.zeros((len(humans), len(robots)))
    for t, _ in universe:
        grid[humans.index(t.human), robots.index(t.robot)] = report.tuples[t.key]
    fig, ax = plt.subplots(figsize=(6, 6))
    im = ax.imshow(np.log1p(grid), cmap="viridis", aspect="auto")
    ax.set_xticks(range(len(robots)), robots)
    ax.set_yticks(range(len(humans)), humans)
    for t, reachable in universe:
        i, j = humans.index(t.human), robots.index(t.robot)
        ax.text(j, i, str(int(grid[i, j])) if reachable else "-", ha="center", va="center",
                color="white" if grid[i, j] < grid.max() / 2 else "black", fontsize=8)
    ax.set_title("Cross-product hits (- = unreachable)")
    fig.colorbar(im, ax=ax, label="log(1 + hits)")
    fig.tight_layout()
    written.append(_save(fig, figdir / "tuples.png"))

    per_block = report.stmt()["blocks"]
    fig, ax = plt.subplots(figsize=(8, 4))
    names = list(per_block)
    ax.barh(names, [per_block[n] for n in names])
    ax.set_xlim(0, 100)
    ax.invert_yaxis()
    ax.set_xlabel("statements hit (%)")
    ax.set_title("Statement coverage by controller block")
    fig.tight_layout()
    written.append(_save(fig, figdir / "statements.png"))
    return written


def _save(fig, path: Path) -> Path:
    import matplotlib.pyplot as plt

    # no timestamp in the PNG metadata, so reruns produce the same bytes
    fig.savefig(path, dpi=100, metadata={"Software": None})
    plt.close(fig)
    return path


def render(campdir: Path, figures: bool = True) -> list:
    """Write table1.csv, table2.csv, statements.csv, summary.txt and figures/ into ``campdir``."""
    campdir = Path(campdir)
    missing = [f for f in REQUIRED_FILES if not (campdir / f).is_file()]
    if missing:
        raise ReportError(f"{campdir} is missing: {', '.join(missing)}")
    from .campaign import load_report

    try:
        report = load_report(campdir / "report.json")
    except (ValueError, KeyError) as e:
        raise ReportError(f"{campdir / 'report.json'} is malformed: {e}") from None
    written = []
    for name, text in (("table1.csv", table1_csv(report)), ("table2.csv", table2_csv(report)),
                       ("statements.csv", statements_csv(report)), ("summary.txt", summary_text(report))):
        (campdir / name).write_text(text)
        written.append(campdir / name)
    if figures:
        written += render_figures(report, campdir / "figures")
    return written

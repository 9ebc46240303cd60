"""Report rendering: text, canonical JSON, CSV and a histogram plot."""

from __future__ import annotations

import csv
import io
import json
from typing import Optional

from .runner import EXHAUSTIVE, REPORT_FORMAT, Report


def to_dict(report: Report) -> dict:
    names = report.thread_names
    doc = {
        "format": REPORT_FORMAT,
        "name": report.program.name,
        "model": report.model.value,
        "mode": report.mode,
        "unroll": report.unroll,
        "races": [r.to_json() for r in report.races],
        "verdicts": [
            {
                "kind": v.clause.kind,
                "condition": str(v.clause.cond),
                "holds": v.holds,
                "verdict": v.verdict,
                **({"witness": v.witness.format(names)} if v.witness is not None else {}),
            }
            for v in report.verdicts
        ],
    }
    if report.mode == EXHAUSTIVE:
        doc["outcomes"] = [{"valuation": o.valuation, "witness": o.witness.format(names)}
                           for o in report.outcomes.sorted()]
        doc["blocked"] = report.outcomes.blocked
        doc["states"] = report.outcomes.states
    else:
        doc["outcomes"] = [{"valuation": val, "count": n} for val, n in report.observed()]
        doc["iterations"] = report.iterations
        doc["blocked"] = report.stress_blocked
        doc["unexplained"] = report.unexplained
        if report.outcomes is not None:
            doc["enumerated"] = [o.valuation for o in report.outcomes.sorted()]
    return doc


def to_json(report: Report) -> str:
    return json.dumps(to_dict(report), sort_keys=True, indent=2)


def _rows(report: Report) -> tuple[list[str], list[list]]:
    if report.mode == EXHAUSTIVE:
        vals = [(o.valuation, "") for o in report.outcomes.sorted()]
    else:
        vals = report.observed()
    columns = sorted({k for val, _ in vals for k in val})
    rows = [[val.get(c, "") for c in columns] + [n] for val, n in vals]
    return columns + ["count"], rows


def to_csv(report: Report) -> str:
    """One row per final state; ``count`` is empty for enumerated outcomes."""
    header, rows = _rows(report)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def outcome_label(valuation: dict, keep: Optional[list] = None) -> str:
    keys = keep if keep is not None else sorted(valuation)
    return " ".join(f"{k}={valuation[k]}" for k in keys)


def _interesting(vals: list[dict]) -> list[str]:
    """Names whose final value differs between outcomes, for compact labels."""
    keys = sorted({k for v in vals for k in v})
    varying = [k for k in keys if len({v.get(k) for v in vals}) > 1]
    return varying or keys


def plot(report: Report, path: str) -> None:
    """Bar chart of outcomes: observed counts in stress mode, 1 per allowed state otherwise."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if report.mode == EXHAUSTIVE:
        pairs = [(o.valuation, 1) for o in report.outcomes.sorted()]
        ylabel = "allowed"
    else:
        pairs = report.observed()
        ylabel = "observed runs"
    keep = _interesting([v for v, _ in pairs]) if pairs else []
    labels = [outcome_label(v, keep) for v, _ in pairs]
    counts = [n for _, n in pairs]
    fig, ax = plt.subplots(figsize=(max(4.0, 0.6 * len(pairs) + 2), 4))
    ax.bar(range(len(pairs)), counts, color="tab:blue")
    ax.set_xticks(range(len(pairs)))
    ax.set_xticklabels(labels, rotation=60, ha="right", fontsize=7)
    ax.set_ylabel(ylabel)
    ax.set_title(f"{report.program.name} ({report.mode}, {report.model.value})")
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)


def to_text(report: Report) -> str:
    names = report.thread_names
    lines = [f"litmus {report.program.name}: mode={report.mode} model={report.model.value}"
             f" unroll={report.unroll} ({report.elapsed:.3f}s)"]
    if report.mode == EXHAUSTIVE:
        oc = report.outcomes
        lines.append(f"states={oc.states} outcomes={len(oc)} blocked={oc.blocked}")
        for o in oc.sorted():
            lines.append("  " + outcome_label(o.valuation))
        if report.races:
            lines.append(f"races ({len(report.races)}):")
            lines += [f"  {r}" for r in report.races]
        else:
            lines.append("races: none (data-race free)")
    else:
        lines.append(f"iterations={report.iterations} distinct={len(report.histogram)}"
                     f" blocked={report.stress_blocked}")
        for val, n in report.observed():
            lines.append(f"  {n:>8}  {outcome_label(val)}")
        if report.outcomes is not None:
            if report.unexplained:
                lines.append("observed states NOT allowed by enumeration:")
                lines += ["  " + outcome_label(v) for v in report.unexplained]
            else:
                lines.append(f"observed subset of {len(report.outcomes)} enumerated outcome(s): yes")
    for v in report.verdicts:
        lines += v.describe(names)
    return "\n".join(lines)

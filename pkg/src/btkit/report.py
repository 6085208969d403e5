"""Result tables in the Model | BLEU | Gain | SacreBLEU | chrF2 | TER layout.

Scores are shown with two decimals and the gain column is the difference of
the *shown* scores, so every printed table adds up.
"""

from __future__ import annotations

from dataclasses import dataclass, field

COLUMNS = ("Model", "BLEU", "Gain", "SacreBLEU", "chrF2", "TER")
BASELINE_LABEL = "Bilingual"


class ReportError(Exception):
    pass


class TestSetMismatch(ReportError):
    __test__ = False  # not a pytest class despite the name

    def __init__(self, a: str, b: str, names=("", "")):
        self.fingerprints = (a, b)
        where = f" ({names[0]} vs {names[1]})" if any(names) else ""
        super().__init__(f"test set fingerprints differ: {a} != {b}{where}")


def _r2(x: float) -> float:
    return round(float(x), 2)


@dataclass
class ReportRow:
    label: str
    bleu: float
    sacrebleu: float
    chrf2: float
    ter: float
    baseline: bool = False


@dataclass
class ReportSection:
    direction: str
    rows: list[ReportRow] = field(default_factory=list)

    @property
    def baseline_row(self) -> ReportRow | None:
        flagged = [r for r in self.rows if r.baseline]
        return flagged[0] if flagged else None

    def gain(self, row: ReportRow) -> float | None:
        base = self.baseline_row
        if base is None or row is base:
            return None
        return round(_r2(row.bleu) - _r2(base.bleu), 2)

    def ordered(self) -> list[ReportRow]:
        """Baseline first, everything else in the order it was added."""
        base = self.baseline_row
        return ([base] if base else []) + [r for r in self.rows if r is not base]


@dataclass
class ReportTable:
    sections: list[ReportSection] = field(default_factory=list)

    def section(self, direction: str) -> ReportSection:
        for s in self.sections:
            if s.direction == direction:
                return s
        s = ReportSection(direction)
        self.sections.append(s)
        return s


def table_from_results(results) -> ReportTable:
    """Build a table from ``(stage, direction, bleu, sacrebleu, chrf2, ter)`` records.

    Objects with those attributes work too. The first row labelled
    ``Bilingual`` in each direction is the baseline; without one, the first
    row is.
    """
    table = ReportTable()
    for r in results:
        if isinstance(r, tuple):
            stage, direction, b, sb, c, t = r
        else:
            stage, direction, b, sb, c, t = r.stage, r.direction, r.bleu, r.sacrebleu, r.chrf2, r.ter
        sec = table.section(direction)
        sec.rows.append(ReportRow(stage, b, sb, c, t))
    for sec in table.sections:
        base = next((r for r in sec.rows if r.label == BASELINE_LABEL), sec.rows[0] if sec.rows else None)
        if base is not None:
            base.baseline = True
    return table


def _cells(sec: ReportSection, row: ReportRow) -> list[str]:
    g = sec.gain(row)
    return [
        row.label,
        f"{row.bleu:.2f}",
        "" if g is None else f"{g:.2f}",
        f"{row.sacrebleu:.2f}",
        f"{row.chrf2:.2f}",
        f"{row.ter:.2f}",
    ]


def render(table: ReportTable, format: str = "tsv") -> str:
    if format not in ("tsv", "aligned-text"):
        raise ValueError(f"unknown report format {format!r}")
    blocks = []
    for sec in table.sections:
        body = [list(COLUMNS)] + [_cells(sec, r) for r in sec.ordered()]
        if format == "tsv":
            lines = [f"#direction={sec.direction}"] + ["\t".join(cells) for cells in body]
        else:
            widths = [max(len(row[i]) for row in body) for i in range(len(COLUMNS))]
            lines = [f"[{sec.direction}]"]
            for cells in body:
                lines.append("  ".join(
                    c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(cells, widths))
                ).rstrip())
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def emit_report(record, format: str = "tsv") -> str:
    """Render a run's results (a RunRecord, a ReportTable or raw result rows)."""
    if isinstance(record, ReportTable):
        table = record
    else:
        results = getattr(record, "results", record)
        if not results:
            raise ReportError("nothing to report: no evaluation rows")
        table = table_from_results(results)
    return render(table, format)


def parse_report(text: str) -> ReportTable:
    """Read a TSV report back; the first data row of each block is the baseline."""
    table = ReportTable()
    sec = None
    for line in text.splitlines():
        if not line.strip():
            continue
        if line.startswith("#direction="):
            sec = table.section(line.split("=", 1)[1])
            continue
        cells = line.split("\t")
        if tuple(cells) == COLUMNS:
            continue
        if sec is None or len(cells) != len(COLUMNS):
            raise ReportError(f"malformed report line: {line!r}")
        label, b, _g, sb, c, t = cells
        sec.rows.append(ReportRow(label, float(b), float(sb), float(c), float(t), baseline=not sec.rows))
    return table


def compare_runs(records, labels=None) -> ReportTable:
    """One row per run (its last stage), per direction; the first run is the baseline.

    All runs must have been scored on the same test set.
    """
    records = list(records)
    if not records:
        raise ReportError("no runs to compare")
    labels = list(labels) if labels is not None else [r.name for r in records]
    first = records[0]
    for lab, rec in zip(labels, records):
        if rec.test_fingerprint != first.test_fingerprint:
            raise TestSetMismatch(first.test_fingerprint, rec.test_fingerprint, (labels[0], lab))
    table = ReportTable()
    for k, (lab, rec) in enumerate(zip(labels, records)):
        last = {}
        for r in rec.results:
            last[r.direction] = r
        for direction, r in last.items():
            table.section(direction).rows.append(
                ReportRow(lab, r.bleu, r.sacrebleu, r.chrf2, r.ter, baseline=k == 0)
            )
    return table

"""Report corpus handling: JSONL ingestion, validation, splits, PHI scanning.

A corpus file is UTF-8 JSON Lines, one report per line. Required fields:
``report_id``, ``exam_description``, ``physician_id``, ``findings``,
``indications``, ``impression``; ``cohort_tag`` is optional
(train/val/test/external).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, asdict, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import CorpusValidationError, PatternConfigError, SplitSizeError

COHORT_TAGS = ("train", "val", "test", "external")

REPORT_FIELDS = (
    "report_id",
    "exam_description",
    "physician_id",
    "findings",
    "indications",
    "impression",
    "cohort_tag",
)

# Advisory PHI guard: ingestion assumes pre-anonymized text, these only flag
# residue that looks like dates or identifier runs.
DEFAULT_PHI_PATTERNS = (
    r"\b\d{1,2}/\d{1,2}/\d{2,4}\b",          # 01/15/2019
    r"\b\d{4}-\d{2}-\d{2}\b",                # 2019-01-15
    r"\b(?:MRN|SSN)[:#\s]*\d+\b",            # labeled identifiers
    r"\b\d{6,}\b",                            # long digit runs
)


@dataclass(frozen=True)
class Report:
    """One exam record."""

    report_id: str
    exam_description: str
    physician_id: str
    findings: str
    indications: str
    impression: str
    cohort_tag: str | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["cohort_tag"] is None:
            d.pop("cohort_tag")
        return d


@dataclass(frozen=True)
class RecordIssue:
    """A validation problem tied to one input line."""

    line: int
    kind: str                 # "parse" | "invalid" | "duplicate"
    message: str
    report_id: str | None = None
    field: str | None = None

    def __str__(self):
        where = f"line {self.line}"
        if self.report_id:
            where += f" (report {self.report_id})"
        return f"{where}: {self.message}"


@dataclass
class LoadedCorpus:
    """Result of loading a corpus file: valid reports plus per-line issues."""

    reports: list[Report]
    issues: list[RecordIssue] = field(default_factory=list)

    def __len__(self):
        return len(self.reports)

    def __iter__(self):
        return iter(self.reports)


def validate_record(record: dict) -> list[tuple[str, str]]:
    """Return (field, message) problems for one raw record dict."""
    problems = []
    for name in ("report_id", "physician_id", "exam_description",
                 "findings", "indications", "impression"):
        value = record.get(name)
        if value is None:
            problems.append((name, f"missing field '{name}'"))
        elif not isinstance(value, str):
            problems.append((name, f"field '{name}' must be a string"))
    if problems:
        return problems
    if not record["report_id"].strip():
        problems.append(("report_id", "report_id is empty"))
    if not record["physician_id"].strip():
        problems.append(("physician_id", "physician_id is empty"))
    if not record["findings"].strip():
        problems.append(("findings", "findings is empty"))
    if not record["impression"].strip():
        problems.append(("impression", "impression is empty"))
    tag = record.get("cohort_tag")
    if tag is not None and tag not in COHORT_TAGS:
        problems.append(("cohort_tag", f"unknown cohort_tag {tag!r}"))
    return problems


def load_corpus(path, fmt: str = "jsonl", strict: bool = False) -> LoadedCorpus:
    """Load and validate a corpus file.

    Invalid records are skipped and reported with line numbers; with
    ``strict=True`` any issue raises :class:`CorpusValidationError`.
    """
    if fmt != "jsonl":
        raise ValueError(f"unsupported corpus format {fmt!r}")
    path = Path(path)
    reports: list[Report] = []
    issues: list[RecordIssue] = []
    seen: set[str] = set()
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                issues.append(RecordIssue(lineno, "parse", f"invalid JSON: {exc}"))
                continue
            if not isinstance(record, dict):
                issues.append(RecordIssue(lineno, "parse", "record is not an object"))
                continue
            problems = validate_record(record)
            if problems:
                rid = record.get("report_id") if isinstance(record.get("report_id"), str) else None
                for fieldname, message in problems:
                    issues.append(RecordIssue(lineno, "invalid", message, rid, fieldname))
                continue
            rid = record["report_id"]
            if rid in seen:
                issues.append(RecordIssue(
                    lineno, "duplicate", f"duplicate report_id {rid!r}", rid, "report_id"))
                continue
            seen.add(rid)
            reports.append(Report(**{k: record.get(k) for k in REPORT_FIELDS}))
    if strict and issues:
        raise CorpusValidationError(issues)
    return LoadedCorpus(reports, issues)


def write_corpus(reports: Iterable[Report], path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for report in reports:
            fh.write(json.dumps(report.to_dict(), ensure_ascii=False) + "\n")


@dataclass(frozen=True)
class CorpusSplit:
    """Deterministic train/val/test partition of report ids."""

    train_ids: tuple[str, ...]
    val_ids: tuple[str, ...]
    test_ids: tuple[str, ...]
    seed: int

    def membership(self) -> dict[str, str]:
        out = {}
        for tag, ids in (("train", self.train_ids), ("val", self.val_ids),
                         ("test", self.test_ids)):
            out.update({rid: tag for rid in ids})
        return out


def split_corpus(reports: Sequence[Report], sizes: tuple[int, int, int],
                 seed: int) -> CorpusSplit:
    """Seeded random partition with exact cardinalities.

    A pure function of the id *set*, the sizes, and the seed: ids are
    sorted before shuffling so input order is irrelevant.
    """
    n_train, n_val, n_test = sizes
    if min(sizes) < 0:
        raise SplitSizeError(f"sizes must be non-negative, got {sizes}")
    ids = sorted(r.report_id for r in reports)
    if n_train + n_val + n_test != len(ids):
        raise SplitSizeError(
            f"sizes {sizes} sum to {n_train + n_val + n_test}, corpus has {len(ids)}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(ids))
    shuffled = [ids[i] for i in perm]
    return CorpusSplit(
        train_ids=tuple(shuffled[:n_train]),
        val_ids=tuple(shuffled[n_train:n_train + n_val]),
        test_ids=tuple(shuffled[n_train + n_val:]),
        seed=seed,
    )


def save_split(split: CorpusSplit, path) -> None:
    """Persist the split manifest (seed + id membership)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "seed": split.seed,
        "train_ids": list(split.train_ids),
        "val_ids": list(split.val_ids),
        "test_ids": list(split.test_ids),
    }
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def load_split(path) -> CorpusSplit:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return CorpusSplit(
        train_ids=tuple(payload["train_ids"]),
        val_ids=tuple(payload["val_ids"]),
        test_ids=tuple(payload["test_ids"]),
        seed=int(payload["seed"]),
    )


@dataclass(frozen=True)
class PhiFinding:
    """One span flagged by the PHI guard."""

    field: str
    start: int
    end: int
    text: str
    pattern: str


def phi_scan(report: Report, patterns: Sequence[str] = DEFAULT_PHI_PATTERNS) -> list[PhiFinding]:
    """Flag spans matching any pattern; empty result means pass.

    Advisory only: findings are warnings, not a block.
    """
    compiled = []
    for pat in patterns:
        try:
            compiled.append((pat, re.compile(pat)))
        except re.error as exc:
            raise PatternConfigError(f"invalid PHI pattern {pat!r}: {exc}") from exc
    findings: list[PhiFinding] = []
    for name in ("exam_description", "findings", "indications", "impression"):
        text = getattr(report, name)
        for pat, rx in compiled:
            for m in rx.finditer(text):
                findings.append(PhiFinding(name, m.start(), m.end(), m.group(0), pat))
    return findings

"""Blinded review sessions over a case pool.

A case couples one findings/indications context with one candidate
impression, either the original dictation or a model generation made
with the dictating physician's own style token. Served payloads never
carry origin, style owner, or any physician identifier; those stay
server side until export.
"""

from __future__ import annotations

import hashlib
import threading
import uuid
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Iterable, Mapping, Sequence

import numpy as np

from ..corpus import Report
from ..errors import PoolShortageError, SessionStateError
from ..prompts import STYLE_TOKEN_RE
from ..stats import bootstrap_ci
from .store import StudyStore

DEFAULT_DIMENSIONS = (
    "factual_correctness",
    "omissions",
    "additions",
    "jargon",
    "recommendations",
    "clarity_organization",
)


@dataclass(frozen=True)
class ReviewCase:
    case_id: str
    findings: str
    indications: str
    impression: str
    origin: str
    style_owner: str
    source_report_id: str | None = None

    def __post_init__(self):
        if self.origin not in ("original", "generated"):
            raise ValueError(f"origin must be original|generated, got {self.origin!r}")


@dataclass
class StudyConfig:
    dimensions: tuple[str, ...] = DEFAULT_DIMENSIONS
    dimension_scale: tuple[int, int] = (1, 3)
    utility_scale: tuple[int, int] = (1, 5)
    n_own: int = 12
    n_other: int = 12


@dataclass
class ValidationFailure(Exception):
    message: str

    def __str__(self):
        return self.message


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _scrub(text: str) -> str:
    # defense in depth: a generated impression could echo a style token
    return STYLE_TOKEN_RE.sub("", text).strip()


def cases_from_reports(reports: Sequence[Report],
                       generated: Mapping[str, str],
                       origin_seed: int = 0) -> list[ReviewCase]:
    """One case per report, alternating origin by seeded coin flip.

    ``generated`` maps report_id to the impression produced with that
    report's own physician token; reports without a generation fall
    back to the original dictation.
    """
    rng = np.random.default_rng(origin_seed)
    cases = []
    for report in reports:
        use_generated = report.report_id in generated and rng.random() < 0.5
        origin = "generated" if use_generated else "original"
        impression = (generated[report.report_id] if use_generated
                      else report.impression)
        opaque = hashlib.sha1(
            f"{report.report_id}:{origin}".encode()).hexdigest()[:12]
        cases.append(ReviewCase(
            case_id=f"C{opaque}",
            findings=_scrub(report.findings),
            indications=_scrub(report.indications),
            impression=_scrub(impression),
            origin=origin,
            style_owner=report.physician_id,
            source_report_id=report.report_id,
        ))
    return cases


class ReaderStudy:
    """Session workflow: create, serve next case, collect, export."""

    def __init__(self, store: StudyStore, config: StudyConfig | None = None):
        self.store = store
        self.config = config or StudyConfig()
        self._lock = threading.Lock()

    # -- pool --------------------------------------------------------
    def add_cases(self, cases: Iterable[ReviewCase]) -> int:
        rows = [{"case_id": c.case_id, "findings": _scrub(c.findings),
                 "indications": _scrub(c.indications),
                 "impression": _scrub(c.impression), "origin": c.origin,
                 "style_owner": c.style_owner,
                 "source_report_id": c.source_report_id}
                for c in cases]
        self.store.upsert_cases(rows)
        return len(rows)

    # -- sessions ----------------------------------------------------
    def create_session(self, reader_id: str, n_own: int | None = None,
                       n_other: int | None = None, seed: int = 0) -> dict:
        n_own = self.config.n_own if n_own is None else n_own
        n_other = self.config.n_other if n_other is None else n_other
        pool = self.store.all_cases()
        own = sorted(c["case_id"] for c in pool if c["style_owner"] == reader_id)
        other = sorted(c["case_id"] for c in pool if c["style_owner"] != reader_id)
        deficits = {}
        if len(own) < n_own:
            deficits["own"] = (n_own, len(own))
        if len(other) < n_other:
            deficits["other"] = (n_other, len(other))
        if deficits:
            raise PoolShortageError(deficits)
        rng = np.random.default_rng(seed)
        chosen = []
        if n_own:
            chosen += [own[i] for i in rng.choice(len(own), size=n_own,
                                                  replace=False)]
        if n_other:
            chosen += [other[i] for i in rng.choice(len(other), size=n_other,
                                                    replace=False)]
        order = [chosen[i] for i in rng.permutation(len(chosen))]
        session_id = f"S{uuid.uuid4().hex[:12]}"
        self.store.create_session(session_id, reader_id, order, seed, _now())
        return {"session_id": session_id, "reader_id": reader_id,
                "total": len(order), "cursor": 0, "seed": seed}

    def _session(self, session_id: str) -> dict:
        session = self.store.session(session_id)
        if session is None:
            raise SessionStateError(f"unknown session {session_id!r}")
        return session

    def session_state(self, session_id: str) -> dict:
        session = self._session(session_id)
        return {"session_id": session_id, "reader_id": session["reader_id"],
                "cursor": session["cursor"],
                "total": len(session["case_order"]),
                "done": session["cursor"] >= len(session["case_order"])}

    def schema(self) -> dict:
        return {"dimensions": list(self.config.dimensions),
                "dimension_scale": list(self.config.dimension_scale),
                "utility_scale": list(self.config.utility_scale)}

    def next_case(self, session_id: str) -> dict:
        """Client payload for the current case; blinded by construction."""
        session = self._session(session_id)
        order = session["case_order"]
        cursor = session["cursor"]
        if cursor >= len(order):
            return {"done": True, "completed": len(order), "total": len(order)}
        case = self.store.case(order[cursor])
        return {
            "done": False,
            "session_id": session_id,
            "case_id": case["case_id"],
            "position": cursor + 1,
            "total": len(order),
            "findings": case["findings"],
            "indications": case["indications"],
            "impression": case["impression"],
            "schema": self.schema(),
        }

    # -- assessments -------------------------------------------------
    def _validate_assessment(self, scores: Mapping[str, int], utility) -> None:
        lo, hi = self.config.dimension_scale
        for dim in self.config.dimensions:
            if dim not in scores:
                raise ValidationFailure(f"missing dimension {dim!r}")
            value = scores[dim]
            if not isinstance(value, int) or isinstance(value, bool) \
                    or not lo <= value <= hi:
                raise ValidationFailure(
                    f"dimension {dim!r} must be an integer in {lo}..{hi}, "
                    f"got {value!r}")
        extras = set(scores) - set(self.config.dimensions)
        if extras:
            raise ValidationFailure(f"unknown dimensions {sorted(extras)}")
        ulo, uhi = self.config.utility_scale
        if not isinstance(utility, int) or isinstance(utility, bool) \
                or not ulo <= utility <= uhi:
            raise ValidationFailure(
                f"utility must be an integer in {ulo}..{uhi}, got {utility!r}")

    def submit_assessment(self, session_id: str, case_id: str,
                          scores: Mapping[str, int], utility: int,
                          comment: str | None = None) -> dict:
        with self._lock:
            session = self._session(session_id)
            order = session["case_order"]
            if case_id not in order:
                raise SessionStateError(
                    f"case {case_id!r} is not part of session {session_id!r}")
            position = order.index(case_id)
            cursor = session["cursor"]
            if position > cursor:
                raise SessionStateError(
                    f"case {case_id!r} has not been served yet")
            self._validate_assessment(scores, utility)
            new_cursor = cursor + 1 if position == cursor else None
            replaced = self.store.upsert_assessment(
                session_id, case_id, session["reader_id"], dict(scores),
                utility, comment, _now(), new_cursor)
            return {"ok": True, "case_id": case_id,
                    "cursor": new_cursor if new_cursor is not None else cursor,
                    "total": len(order), "resubmission": replaced}

    # -- export ------------------------------------------------------
    @staticmethod
    def _group(origin: str, own_case: bool) -> str:
        side = "own" if own_case else "other"
        return f"{'Orig' if origin == 'original' else 'LLM'}, {side}"

    def export_rows(self) -> list[dict]:
        """Unblinded analysis rows, one per stored assessment."""
        assessments = self.store.assessments()
        if not assessments:
            raise SessionStateError("no assessments to export")
        rows = []
        for a in assessments:
            case = self.store.case(a["case_id"])
            own_case = case["style_owner"] == a["reader_id"]
            row = {
                "session_id": a["session_id"],
                "reader_id": a["reader_id"],
                "case_id": a["case_id"],
                "source_report_id": case["source_report_id"],
                "origin": case["origin"],
                "style_owner": case["style_owner"],
                "own_case": own_case,
                "group": self._group(case["origin"], own_case),
                "utility": a["utility"],
                "comment": a["comment"] or "",
                "submitted_at": a["submitted_at"],
            }
            for dim in self.config.dimensions:
                row[dim] = a["scores"].get(dim)
            rows.append(row)
        return rows

    def group_summary(self, n_boot: int = 2000, seed: int = 0) -> list[dict]:
        """Mean utility per Orig/LLM x own/other group with bootstrap CI."""
        rows = self.export_rows()
        groups: dict[str, list[float]] = {}
        for row in rows:
            groups.setdefault(row["group"], []).append(float(row["utility"]))
        out = []
        for name in sorted(groups):
            values = groups[name]
            summary = bootstrap_ci(values, n_boot=n_boot, seed=seed)
            out.append({"group": name, "n": len(values),
                        "mean_utility": summary.point,
                        "lo": summary.lo, "hi": summary.hi})
        return out

"""Blinded session workflow: composition, validation, export."""

import json

import pytest

from petsumm.errors import PoolShortageError, SessionStateError
from petsumm.readerstudy import (ReaderStudy, ReviewCase, StudyConfig,
                                 StudyStore, ValidationFailure,
                                 cases_from_reports)
from petsumm.stats import paired_exceedance_test
from petsumm.synth import SynthConfig, synth_corpus

BLIND_FORBIDDEN = ("origin", "style_owner", "physician", "source_report_id")


def make_pool(n_per_owner=15, owners=("P000", "P001", "P002")):
    # opaque case ids, as cases_from_reports would mint them
    cases = []
    for j, owner in enumerate(owners):
        for i in range(n_per_owner):
            origin = "generated" if i % 2 else "original"
            cases.append(ReviewCase(
                case_id=f"Cx{j * n_per_owner + i:04x}",
                findings=f"findings text case {j}-{i}",
                indications="restaging lymphoma",
                impression=f"impression text case {j}-{i}",
                origin=origin,
                style_owner=owner,
                source_report_id=f"R{owner}{i:03d}"))
    return cases


def make_study(**config_kw):
    store = StudyStore(":memory:")
    study = ReaderStudy(store, StudyConfig(**config_kw)) if config_kw \
        else ReaderStudy(store)
    study.add_cases(make_pool())
    return study


def full_scores(study, value=2):
    return {dim: value for dim in study.config.dimensions}


def test_review_case_validates_origin():
    with pytest.raises(ValueError):
        ReviewCase("c", "f", "i", "imp", "machine", "P000")


def test_cases_from_reports_blinds_and_scrubs():
    reports, _ = synth_corpus(SynthConfig(n_reports=30, n_physicians=3, seed=0))
    generated = {r.report_id: f"[PHYS0001] generated text for {r.report_id}"
                 for r in reports}
    cases = cases_from_reports(reports, generated, origin_seed=1)
    assert len(cases) == len(reports)
    origins = {c.origin for c in cases}
    assert origins == {"original", "generated"}
    for case in cases:
        assert not case.case_id.startswith("R")
        assert "[PHYS" not in case.impression
        assert case.style_owner.startswith("P")


def test_session_composition_is_own_plus_other():
    study = make_study()
    session = study.create_session("P000", seed=3)
    assert session["total"] == 24
    state = study.session_state(session["session_id"])
    assert state["cursor"] == 0 and not state["done"]
    # walk the order and count ownership server-side
    stored = study.store.session(session["session_id"])
    owners = [study.store.case(cid)["style_owner"]
              for cid in stored["case_order"]]
    assert owners.count("P000") == 12
    assert sum(1 for o in owners if o != "P000") == 12


def test_session_order_is_seeded_and_shuffled():
    study = make_study()
    a = study.create_session("P000", seed=5)
    b = study.create_session("P000", seed=5)
    c = study.create_session("P000", seed=6)
    order_a = study.store.session(a["session_id"])["case_order"]
    order_b = study.store.session(b["session_id"])["case_order"]
    order_c = study.store.session(c["session_id"])["case_order"]
    assert order_a == order_b
    assert order_a != order_c
    # own and other cases interleave rather than run in two blocks
    owners = [study.store.case(cid)["style_owner"] == "P000"
              for cid in order_a]
    assert owners[:12] != [True] * 12


def test_pool_shortage_names_deficits():
    study = make_study()
    with pytest.raises(PoolShortageError) as err:
        study.create_session("P000", n_own=99, n_other=5)
    assert err.value.deficits == {"own": (99, 15)}
    with pytest.raises(PoolShortageError) as err:
        study.create_session("UNKNOWN", n_own=1, n_other=5)
    assert "own" in err.value.deficits


def test_served_payload_is_blinded():
    study = make_study()
    session = study.create_session("P000", seed=0)
    payload = study.next_case(session["session_id"])
    assert payload["done"] is False
    assert payload["position"] == 1 and payload["total"] == 24
    flat = json.dumps(payload).lower()
    for needle in BLIND_FORBIDDEN + ("p000", "p001", "p002"):
        assert needle not in flat
    assert "schema" in payload
    assert payload["schema"]["dimensions"] == list(study.config.dimensions)


def test_submission_advances_cursor_and_completes():
    study = make_study(n_own=2, n_other=2)
    session = study.create_session("P000")
    sid = session["session_id"]
    for position in range(4):
        payload = study.next_case(sid)
        assert payload["position"] == position + 1
        ack = study.submit_assessment(sid, payload["case_id"],
                                      full_scores(study), utility=4)
        assert ack["ok"] and ack["cursor"] == position + 1
        assert not ack["resubmission"]
    final = study.next_case(sid)
    assert final["done"] is True
    assert study.session_state(sid)["done"]


def test_unset_dimensions_are_named_and_rejected():
    study = make_study()
    sid = study.create_session("P000")["session_id"]
    case_id = study.next_case(sid)["case_id"]
    incomplete = full_scores(study)
    incomplete.pop("omissions")
    with pytest.raises(ValidationFailure, match="omissions"):
        study.submit_assessment(sid, case_id, incomplete, utility=3)
    wrong_range = full_scores(study)
    wrong_range["jargon"] = 9
    with pytest.raises(ValidationFailure, match="jargon"):
        study.submit_assessment(sid, case_id, wrong_range, utility=3)
    boolish = full_scores(study)
    boolish["additions"] = True
    with pytest.raises(ValidationFailure, match="additions"):
        study.submit_assessment(sid, case_id, boolish, utility=3)
    with pytest.raises(ValidationFailure, match="unknown"):
        study.submit_assessment(sid, case_id,
                                {**full_scores(study), "extra": 1}, utility=3)
    with pytest.raises(ValidationFailure, match="utility"):
        study.submit_assessment(sid, case_id, full_scores(study), utility=0)
    # nothing was recorded and the cursor never moved
    assert study.session_state(sid)["cursor"] == 0


def test_cannot_score_unserved_or_foreign_cases():
    study = make_study()
    sid = study.create_session("P000")["session_id"]
    order = study.store.session(sid)["case_order"]
    with pytest.raises(SessionStateError):
        study.submit_assessment(sid, order[3], full_scores(study), utility=3)
    with pytest.raises(SessionStateError):
        study.submit_assessment(sid, "C-not-in-session", full_scores(study),
                                utility=3)
    with pytest.raises(SessionStateError):
        study.next_case("S-missing")


def test_resubmission_replaces_and_audits():
    study = make_study(n_own=2, n_other=2)
    sid = study.create_session("P000")["session_id"]
    case_id = study.next_case(sid)["case_id"]
    study.submit_assessment(sid, case_id, full_scores(study, 1), utility=1)
    ack = study.submit_assessment(sid, case_id, full_scores(study, 3),
                                  utility=5, comment="revised")
    assert ack["resubmission"]
    assert ack["cursor"] == 1  # no double advance
    stored = study.store.assessments()
    assert len(stored) == 1
    assert stored[0]["utility"] == 5
    assert stored[0]["comment"] == "revised"
    audit = study.store.audit_entries(sid)
    assert [entry["action"] for entry in audit] == ["submit", "resubmit"]


def test_configurable_dimensions():
    store = StudyStore(":memory:")
    study = ReaderStudy(store, StudyConfig(dimensions=("accuracy", "style"),
                                           n_own=1, n_other=1))
    study.add_cases(make_pool(n_per_owner=2))
    sid = study.create_session("P000")["session_id"]
    case_id = study.next_case(sid)["case_id"]
    ack = study.submit_assessment(sid, case_id,
                                  {"accuracy": 2, "style": 3}, utility=4)
    assert ack["ok"]
    with pytest.raises(ValidationFailure, match="accuracy"):
        study.submit_assessment(sid, case_id, {"style": 3}, utility=4)


def test_export_rows_join_hidden_truth():
    study = make_study(n_own=3, n_other=3)
    sid = study.create_session("P000", seed=2)["session_id"]
    for _ in range(6):
        payload = study.next_case(sid)
        study.submit_assessment(sid, payload["case_id"], full_scores(study),
                                utility=4)
    rows = study.export_rows()
    assert len(rows) == 6
    groups = {row["group"] for row in rows}
    assert groups <= {"Orig, own", "LLM, own", "Orig, other", "LLM, other"}
    for row in rows:
        assert row["origin"] in ("original", "generated")
        assert row["own_case"] == (row["style_owner"] == "P000")
        assert row["source_report_id"].startswith("R")
        for dim in study.config.dimensions:
            assert row[dim] == 2
    summary = study.group_summary(n_boot=200)
    assert {entry["group"] for entry in summary} == groups
    for entry in summary:
        assert entry["lo"] <= entry["mean_utility"] <= entry["hi"]


def test_export_requires_assessments():
    study = make_study()
    with pytest.raises(SessionStateError):
        study.export_rows()


def test_planted_utility_gap_is_detectable():
    """Readers preferring originals 5 to 4 shows up as a significant
    paired exceedance on exported utilities."""
    study = make_study(n_own=6, n_other=6)
    for reader in ("P000", "P001", "P002"):
        sid = study.create_session(reader, seed=7)["session_id"]
        for _ in range(12):
            payload = study.next_case(sid)
            case = study.store.case(payload["case_id"])
            utility = 5 if case["origin"] == "original" else 4
            study.submit_assessment(sid, payload["case_id"],
                                    full_scores(study), utility=utility)
    rows = study.export_rows()
    orig = [r["utility"] for r in rows if r["origin"] == "original"]
    gen = [r["utility"] for r in rows if r["origin"] == "generated"]
    n = min(len(orig), len(gen))
    assert n >= 10
    result = paired_exceedance_test(orig[:n], gen[:n], n_boot=2000, seed=0)
    assert result.significant and result.direction == "a"

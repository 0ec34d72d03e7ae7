"""Corpus loading, validation, splitting, and the PHI scan."""

import json

import pytest

from petsumm.corpus import (CorpusSplit, Report, load_corpus, load_split,
                            phi_scan, save_split, split_corpus, validate_record,
                            write_corpus)
from petsumm.errors import CorpusValidationError, PatternConfigError, SplitSizeError


def make_report(rid="R1", phys="P1", **overrides):
    fields = dict(report_id=rid, exam_description="PET CT whole body",
                  physician_id=phys, findings="uptake in the liver .",
                  indications="staging .", impression="stable disease .")
    fields.update(overrides)
    return Report(**fields)


def test_round_trip(tmp_path, small_corpus):
    reports, _ = small_corpus
    path = tmp_path / "corpus.jsonl"
    write_corpus(reports, path)
    loaded = load_corpus(path)
    assert not loaded.issues
    assert loaded.reports == list(reports)


def test_validate_record_flags_empty_fields():
    record = make_report().to_dict()
    record["findings"] = "   "
    issues = validate_record(record)
    assert any(field == "findings" for field, _ in issues)


def test_load_collects_issues_and_skips_bad_lines(tmp_path):
    path = tmp_path / "corpus.jsonl"
    good = make_report().to_dict()
    bad = make_report(rid="R2").to_dict()
    bad["impression"] = ""
    lines = [json.dumps(good), "{not json", json.dumps(bad), json.dumps(good)]
    path.write_text("\n".join(lines) + "\n")
    loaded = load_corpus(path)
    assert len(loaded.reports) == 1
    kinds = {issue.kind for issue in loaded.issues}
    assert kinds == {"parse", "invalid", "duplicate"}
    lines_with_issue = sorted(issue.line for issue in loaded.issues)
    assert lines_with_issue == [2, 3, 4]


def test_strict_mode_raises(tmp_path):
    path = tmp_path / "corpus.jsonl"
    record = make_report().to_dict()
    record["impression"] = ""
    path.write_text(json.dumps(record) + "\n")
    with pytest.raises(CorpusValidationError):
        load_corpus(path, strict=True)


def test_split_exact_sizes_and_disjoint(small_corpus):
    reports, _ = small_corpus
    split = split_corpus(reports, (40, 10, 10), seed=5)
    assert (len(split.train_ids), len(split.val_ids), len(split.test_ids)) == (40, 10, 10)
    all_ids = set(split.train_ids) | set(split.val_ids) | set(split.test_ids)
    assert all_ids == {r.report_id for r in reports}
    assert not set(split.train_ids) & set(split.test_ids)


def test_split_is_function_of_id_set(small_corpus):
    reports, _ = small_corpus
    forward = split_corpus(reports, (40, 10, 10), seed=5)
    backward = split_corpus(list(reversed(reports)), (40, 10, 10), seed=5)
    assert forward == backward


def test_split_wrong_sum_raises(small_corpus):
    reports, _ = small_corpus
    with pytest.raises(SplitSizeError):
        split_corpus(reports, (40, 10, 9), seed=0)


def test_split_manifest_round_trip(tmp_path, small_corpus):
    reports, _ = small_corpus
    split = split_corpus(reports, (40, 10, 10), seed=7)
    save_split(split, tmp_path / "split.json")
    assert load_split(tmp_path / "split.json") == split


def test_membership_covers_all(small_corpus):
    reports, _ = small_corpus
    split = split_corpus(reports, (40, 10, 10), seed=1)
    membership = split.membership()
    assert len(membership) == 60
    assert set(membership.values()) == {"train", "val", "test"}


def test_phi_scan_finds_planted_patterns():
    report = make_report(
        findings="Seen on 03/14/2024 for follow up , MRN 1234567 .",
        impression="stable since 2024-01-02 .")
    findings = phi_scan(report)
    fields = {(f.field, f.text) for f in findings}
    assert ("findings", "03/14/2024") in fields
    assert ("findings", "1234567") in fields
    assert ("impression", "2024-01-02") in fields


def test_phi_scan_clean_report_is_empty(small_corpus):
    reports, _ = small_corpus
    for report in reports[:5]:
        assert phi_scan(report) == []


def test_phi_scan_bad_pattern():
    with pytest.raises(PatternConfigError):
        phi_scan(make_report(), patterns=["(unclosed"])

"""Score extraction on a hand-labeled suite, kappa, and agreement."""

import numpy as np
import pytest

from petsumm.deauville import (DsAgreement, ds_agreement, extract_ds,
                               filter_ds_cases, weighted_kappa)
from petsumm.errors import DegenerateKappaError

from .oracles import oracle_weighted_kappa

# Hand-labeled extraction suite: (text, expected score or None).
# Positive phrasings stay within the documented cascade grammar;
# negatives include near-miss traps (bare digits, stage numerals,
# keyword without value, substrings that merely contain "ds").
HAND_SUITE = [
    # keyword + digit
    ("Deauville 3.", 3),
    ("Deauville score 4.", 4),
    ("Deauville score of 2.", 2),
    ("Deauville score of 5 in the mediastinum.", 5),
    ("Overall Deauville score: 4.", 4),
    ("deauville-2.", 2),
    ("Deauville: 1.", 1),
    ("Deauville category 3.", 3),
    ("Deauville category is 2.", 2),
    ("Findings consistent with Deauville 5.", 5),
    ("DEAUVILLE SCORE = 4.", 4),
    ("Deauville rating of 1.", 1),
    ("Deauville scale 2.", 2),
    ("Deauville score was 3 on the current exam.", 3),
    # keyword + roman numeral
    ("Deauville II.", 2),
    ("Deauville score of III.", 3),
    ("Deauville category IV.", 4),
    ("Deauville V.", 5),
    ("deauville i.", 1),
    # keyword + number word
    ("Deauville score of three.", 3),
    ("Deauville two.", 2),
    ("Deauville score of five.", 5),
    ("Deauville category four.", 4),
    ("Deauville score of one.", 1),
    # five-point-scale abbreviation with a digit 5
    ("5-PS 4.", 4),
    ("5PS score of 3.", 3),
    ("5 PS: 2.", 2),
    ("5-ps score was 5.", 5),
    ("Response graded 5-PS criteria 1.", 1),
    # bare DS abbreviation
    ("DS 4.", 4),
    ("DS: 3.", 3),
    ("DS=2.", 2),
    ("ds 5 at the nodal site.", 5),
    ("DS-1.", 1),
    ("Interval response, DS 2.", 2),
    # precedence: an overall/global/summary sentence beats other hits
    ("Deauville 4 in the chest. Overall Deauville score 3.", 3),
    ("Overall response Deauville 2. Focal uptake Deauville 4.", 2),
    ("Global assessment Deauville 1. DS 5 in spleen.", 1),
    ("Summary: Deauville 2.", 2),
    # no overall framing: maximum across mentions
    ("DS 3 in liver. DS 5 in lung.", 5),
    ("Deauville 1 nodal, Deauville 2 splenic.", 2),
    ("Deauville score of 4 nodal and Deauville 5 splenic.", 5),
    # realistic carriers
    ("Residual uptake above liver, Deauville 4.", 4),
    ("Complete metabolic response, Deauville score 1.", 1),
    ("Deauville score of 3, improved from 5.", 3),
    # negatives
    ("No abnormal FDG uptake.", None),
    ("SUVmax 4.2 in the right hilum.", None),
    ("The five point scale was applied.", None),
    ("Deauville criteria were applied.", None),
    ("Response will be assessed using Deauville.", None),
    ("Stage IV disease.", None),
    ("Study performed 5 hours after injection.", None),
    ("Patient is 45 years old.", None),
    ("Lesion measures 2.3 cm.", None),
    ("DS was not assigned.", None),
    ("Beds 3 through 7 were imaged.", None),
    ("IDS 3 protocol was used.", None),
    ("Deauville scoring deferred pending comparison.", None),
    ("One new lesion was identified.", None),
    ("Deauville VI.", None),
]


def test_hand_suite_has_sixty_cases():
    assert len(HAND_SUITE) == 60
    assert sum(1 for _, want in HAND_SUITE if want is None) == 15


@pytest.mark.parametrize("text,want", HAND_SUITE,
                         ids=[t[:32] for t, _ in HAND_SUITE])
def test_hand_labeled_extraction(text, want):
    assert extract_ds(text).score == want


def test_extraction_evidence_details():
    out = extract_ds("Deauville score of 4 in the neck.")
    assert out.score == 4
    assert out.resolution == "single"
    (hit,) = out.evidence
    assert hit.rule_id == "deauville_keyword"
    assert hit.text == "Deauville score of 4"
    assert out.score == hit.value
    assert "Deauville score of 4 in the neck."[hit.start:hit.end] == hit.text
    assert not hit.overall


def test_extraction_resolution_labels():
    assert extract_ds("No uptake.").resolution == "none"
    assert extract_ds("DS 2.").resolution == "single"
    assert extract_ds("DS 2. DS 4.").resolution == "max"
    overall = extract_ds("DS 4. Overall Deauville 2.")
    assert overall.resolution == "overall"
    assert overall.score == 2
    assert len(overall.evidence) == 2


def test_rule_ids_cover_cascade():
    assert extract_ds("Deauville 3.").evidence[0].rule_id == "deauville_keyword"
    assert extract_ds("5-PS 3.").evidence[0].rule_id == "five_ps"
    assert extract_ds("DS 3.").evidence[0].rule_id == "ds_abbrev"


def test_filter_ds_cases_returns_indices():
    texts = [t for t, _ in HAND_SUITE]
    want = [i for i, (_, score) in enumerate(HAND_SUITE) if score is not None]
    assert filter_ds_cases(texts) == want
    assert filter_ds_cases([]) == []


def test_weighted_kappa_hand_values():
    # perfect agreement
    assert weighted_kappa([1, 2, 3, 4, 5], [1, 2, 3, 4, 5]) == 1.0
    # complete two-category disagreement works out to -1 exactly
    assert weighted_kappa([1, 2], [2, 1]) == pytest.approx(-1.0)


def test_weighted_kappa_matches_oracle_on_random_ratings():
    rng = np.random.default_rng(2)
    for _ in range(200):
        n = int(rng.integers(2, 30))
        a = rng.integers(1, 6, size=n)
        b = rng.integers(1, 6, size=n)
        want = oracle_weighted_kappa(a, b, 5)
        if np.isnan(want):
            with pytest.raises(DegenerateKappaError):
                weighted_kappa(a, b)
        else:
            assert weighted_kappa(a, b) == pytest.approx(want, abs=1e-12)


def test_weighted_kappa_validation():
    with pytest.raises(DegenerateKappaError):
        weighted_kappa([2, 2, 2], [2, 2, 2])
    with pytest.raises(ValueError):
        weighted_kappa([0, 1], [1, 1])
    with pytest.raises(ValueError):
        weighted_kappa([1, 6], [1, 1])
    with pytest.raises(ValueError):
        weighted_kappa([1, 2], [1])
    with pytest.raises(ValueError):
        weighted_kappa([], [])


def test_ds_agreement_counts_and_confusion():
    refs = ["Deauville 4.", "DS 2.", "Deauville 5.", "No uptake.",
            "Deauville 3."]
    cands = ["Deauville 4.", "DS 3.", "No uptake.", "DS 1.",
             "No abnormality."]
    out = ds_agreement(refs, cands, n_boot=200, seed=0)
    assert isinstance(out, DsAgreement)
    assert out.n_total == 5
    assert out.n_used == 2          # both sides scored
    assert out.n_ref_only == 2
    assert out.n_cand_only == 1
    assert out.n_neither == 0
    assert out.accuracy == pytest.approx(0.5)
    assert out.confusion[3, 3] == 1  # 4 vs 4
    assert out.confusion[1, 2] == 1  # 2 vs 3
    assert out.confusion.sum() == out.n_used


def test_ds_agreement_perfect_and_empty():
    refs = ["Deauville 2.", "Deauville 4."]
    perfect = ds_agreement(refs, list(refs), n_boot=100, seed=0)
    assert perfect.accuracy == 1.0
    assert perfect.kappa == pytest.approx(1.0)
    empty = ds_agreement(["no score"], ["none here"], n_boot=50, seed=0)
    assert empty.n_used == 0
    assert np.isnan(empty.accuracy)
    assert empty.kappa is None
    with pytest.raises(ValueError):
        ds_agreement(["a"], ["a", "b"])


def test_ds_agreement_kappa_interval_brackets_point():
    rng = np.random.default_rng(7)
    values = rng.integers(1, 6, size=80)
    noisy = np.clip(values + rng.integers(-1, 2, size=80), 1, 5)
    refs = [f"Deauville {v}." for v in values]
    cands = [f"Deauville {v}." for v in noisy]
    out = ds_agreement(refs, cands, n_boot=400, seed=3)
    assert out.n_used == 80
    assert out.kappa is not None
    assert out.kappa_lo <= out.kappa <= out.kappa_hi

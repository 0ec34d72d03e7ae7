"""Synthetic corpus generator: shape, styles, planted scores."""

import pytest

from petsumm.corpus import validate_record
from petsumm.deauville import extract_ds, filter_ds_cases
from petsumm.errors import ConfigError
from petsumm.synth import (SynthConfig, synth_corpus, synth_text_pairs,
                           terse_impression, verbose_impression)


def test_config_validation():
    with pytest.raises(ConfigError):
        SynthConfig(n_reports=0)
    with pytest.raises(ConfigError):
        SynthConfig(n_reports=10, ds_count=11)
    with pytest.raises(ConfigError):
        SynthConfig(verbose_fraction=1.5)


def test_reports_are_valid_and_sized():
    config = SynthConfig(n_reports=40, n_physicians=4, seed=1)
    reports, truth = synth_corpus(config)
    assert len(reports) == 40
    assert len({r.report_id for r in reports}) == 40
    for report in reports:
        assert validate_record(report.to_dict()) == []
        n_words = len(report.findings.split())
        assert config.min_findings_words <= n_words <= config.max_findings_words
        assert report.physician_id in truth.styles
        assert report.impression
        assert truth.lesions[report.report_id]


def test_styles_split_and_drive_length():
    config = SynthConfig(n_reports=200, n_physicians=6, seed=2,
                         verbose_fraction=0.5)
    reports, truth = synth_corpus(config)
    assert sorted(truth.styles.values()).count("verbose") == 3
    verbose_lens = [len(r.impression.split()) for r in reports
                    if truth.styles[r.physician_id] == "verbose"]
    terse_lens = [len(r.impression.split()) for r in reports
                  if truth.styles[r.physician_id] == "terse"]
    assert verbose_lens and terse_lens
    # verbose impressions run at least twice as long on average
    mean_v = sum(verbose_lens) / len(verbose_lens)
    mean_t = sum(terse_lens) / len(terse_lens)
    assert mean_v >= 2 * mean_t
    assert min(verbose_lens) > max(terse_lens) - 10


def test_impression_templates_share_lesion_content():
    lesions = [("cervical nodal", "4.2"), ("splenic", "7.5")]
    terse = terse_impression(lesions)
    verbose = verbose_impression(lesions)
    for site, suv in lesions:
        assert site in terse and suv in terse
        assert site in verbose and suv in verbose
    assert len(verbose.split()) >= 2 * len(terse.split())


def test_planted_ds_counts_are_exact():
    config = SynthConfig(n_reports=300, n_physicians=4, seed=3, ds_count=31)
    reports, truth = synth_corpus(config)
    assert len(truth.ds_values) == 31
    extracted = filter_ds_cases([r.impression for r in reports])
    assert len(extracted) == 31
    by_id = {r.report_id: r for r in reports}
    for report_id, value in truth.ds_values.items():
        assert extract_ds(by_id[report_id].impression).score == value


def test_distractors_never_extract():
    # with no planted scores, no impression may yield one
    config = SynthConfig(n_reports=200, n_physicians=4, seed=4, ds_count=0)
    reports, _ = synth_corpus(config)
    assert filter_ds_cases([r.impression for r in reports]) == []
    # and the corpus does exercise the distractor sentences
    assert any("deauville" in r.impression.lower() or
               "five point" in r.impression.lower() for r in reports)


def test_generation_is_deterministic():
    config = SynthConfig(n_reports=25, n_physicians=3, seed=5, ds_count=4)
    first, truth_a = synth_corpus(config)
    second, truth_b = synth_corpus(config)
    assert [r.to_dict() for r in first] == [r.to_dict() for r in second]
    assert truth_a.styles == truth_b.styles
    assert truth_a.ds_values == truth_b.ds_values
    other, _ = synth_corpus(SynthConfig(n_reports=25, n_physicians=3, seed=6,
                                        ds_count=4))
    assert [r.to_dict() for r in first] != [r.to_dict() for r in other]


def test_text_pairs_cover_overlap_spectrum():
    pairs = synth_text_pairs(200, seed=0)
    assert len(pairs) == 200
    assert pairs == synth_text_pairs(200, seed=0)
    identical = sum(1 for c, r in pairs if c == r)
    different = sum(1 for c, r in pairs if c != r)
    assert identical > 0 and different > 0
    assert all(r.strip() for _, r in pairs)

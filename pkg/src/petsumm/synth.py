"""Synthetic PET-report corpus with controllable structure.

The generator gives tests and demos a corpus with known ground truth:
per-physician impression styles (verbose impressions carry at least
twice the tokens of terse ones for the same findings), an exact count
of planted five-point response scores in varied surface forms, and a
deliberately small vocabulary so tiny models can fit it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corpus import Report
from .errors import ConfigError

SITES = [
    "right cervical", "left cervical", "mediastinal", "right hilar",
    "left axillary", "right axillary", "retroperitoneal", "left iliac",
    "right inguinal", "splenic", "hepatic", "osseous",
]

SIZES = [8, 10, 12, 14, 16, 18, 22, 25, 28, 31]
SUVS = ["2.4", "3.1", "4.2", "5.6", "6.8", "7.3", "8.9", "10.2", "12.5", "13.4"]

FILLER_SENTENCES = [
    "The remaining cervical and supraclavicular regions show no abnormal uptake .",
    "Lungs are clear without focal hypermetabolic nodules .",
    "Physiologic tracer distribution is noted in the brain myocardium and urinary tract .",
    "The liver demonstrates homogeneous background activity .",
    "Spleen and bone marrow show activity below hepatic background .",
    "No hypermetabolic pleural or pericardial effusion is identified .",
    "Bowel activity is physiologic in distribution .",
    "The skeleton shows no focal fdg avid osseous lesion .",
    "Kidneys and bladder show excreted tracer activity .",
    "No abnormal uptake is seen in the adrenal glands or pancreas .",
    "Head and neck structures show symmetric physiologic uptake .",
    "Muscular uptake is mild and symmetric consistent with physiologic activity .",
]

INDICATIONS = [
    "Restaging of hodgkin lymphoma after four cycles of chemotherapy .",
    "Initial staging of diffuse large b cell lymphoma .",
    "Response assessment of follicular lymphoma following immunotherapy .",
    "Surveillance of treated hodgkin lymphoma .",
    "Restaging of mantle cell lymphoma after salvage therapy .",
    "Evaluation of suspected lymphoma recurrence .",
]

EXAM_DESCRIPTIONS = [
    "PET CT skull base to mid thigh",
    "PET CT whole body",
    "PET MR whole body",
]

DS_TEMPLATES = [
    "Overall Deauville score {digit} .",
    "Deauville score of {digit} .",
    "Deauville category {roman} .",
    "Deauville score : {word} .",
    "DS {digit} .",
    "Overall response corresponds to Deauville {digit} .",
]

DS_WORDS = {1: "one", 2: "two", 3: "three", 4: "four", 5: "five"}
DS_ROMANS = {1: "I", 2: "II", 3: "III", 4: "IV", 5: "V"}

DISTRACTOR_SENTENCES = [
    "Response was assessed on a five point scale .",
    "Deauville criteria were applied during interpretation .",
    "Comparison was made with the prior study from 3 months ago .",
]


@dataclass
class SynthConfig:
    n_reports: int = 100
    n_physicians: int = 4
    seed: int = 0
    ds_count: int = 0
    verbose_fraction: float = 0.5
    min_findings_words: int = 250
    max_findings_words: int = 500

    def __post_init__(self):
        if self.n_reports < 1 or self.n_physicians < 1:
            raise ConfigError("need at least one report and one physician")
        if not 0 <= self.ds_count <= self.n_reports:
            raise ConfigError("ds_count must lie in [0, n_reports]")
        if not 0 <= self.verbose_fraction <= 1:
            raise ConfigError("verbose_fraction must lie in [0, 1]")


@dataclass
class SynthTruth:
    styles: dict[str, str]
    ds_values: dict[str, int] = field(default_factory=dict)
    lesions: dict[str, list[tuple[str, str]]] = field(default_factory=dict)


def _findings_text(lesions: list[tuple[str, str]], sizes: list[int],
                   target_words: int, filler_start: int) -> str:
    sentences = []
    for (site, suv), size in zip(lesions, sizes):
        sentences.append(f"There is a hypermetabolic {site} lesion measuring "
                         f"{size} mm with suvmax {suv} .")
    count = sum(len(s.split()) for s in sentences)
    i = filler_start
    while count < target_words:
        filler = FILLER_SENTENCES[i % len(FILLER_SENTENCES)]
        sentences.append(filler)
        count += len(filler.split())
        i += 1
    return " ".join(sentences)


def terse_impression(lesions: list[tuple[str, str]]) -> str:
    lines = [f"Persistent hypermetabolic {site} disease suvmax {suv} ."
             for site, suv in lesions]
    lines.append("No new sites .")
    return " ".join(lines)


def verbose_impression(lesions: list[tuple[str, str]]) -> str:
    lines = ["In summary the examination again demonstrates abnormal fdg "
             "avid disease as detailed below ."]
    for site, suv in lesions:
        lines.append(f"There is persistent abnormal tracer uptake involving "
                     f"the {site} region with suvmax {suv} compatible with "
                     f"residual active lymphoma .")
    lines.append("Correlation with recent contrast enhanced imaging is "
                 "advised for anatomic characterization .")
    lines.append("No additional suspicious hypermetabolic focus is "
                 "identified elsewhere in the surveyed field .")
    return " ".join(lines)


def ds_sentence(value: int, template_index: int) -> str:
    template = DS_TEMPLATES[template_index % len(DS_TEMPLATES)]
    return template.format(digit=value, roman=DS_ROMANS[value],
                           word=DS_WORDS[value])


def synth_corpus(config: SynthConfig) -> tuple[list[Report], SynthTruth]:
    rng = np.random.default_rng(config.seed)
    physicians = [f"P{i:03d}" for i in range(config.n_physicians)]
    n_verbose = round(config.n_physicians * config.verbose_fraction)
    order = rng.permutation(config.n_physicians)
    styles = {physicians[j]: ("verbose" if rank < n_verbose else "terse")
              for rank, j in enumerate(order)}
    truth = SynthTruth(styles=styles)

    ds_rows = set(rng.choice(config.n_reports, size=config.ds_count,
                             replace=False).tolist()) if config.ds_count else set()
    reports = []
    for row in range(config.n_reports):
        report_id = f"R{row:05d}"
        physician = physicians[int(rng.integers(config.n_physicians))]
        n_lesions = int(rng.integers(2, 6))
        lesions = [(SITES[int(rng.integers(len(SITES)))],
                    SUVS[int(rng.integers(len(SUVS)))])
                   for _ in range(n_lesions)]
        sizes = [SIZES[int(rng.integers(len(SIZES)))] for _ in range(n_lesions)]
        # cap leaves room for one more filler sentence without passing max
        target = int(rng.integers(config.min_findings_words,
                                  config.max_findings_words - 14))
        findings = _findings_text(lesions, sizes, target,
                                  filler_start=int(rng.integers(len(FILLER_SENTENCES))))
        style = styles[physician]
        impression = (verbose_impression(lesions) if style == "verbose"
                      else terse_impression(lesions))
        if row in ds_rows:
            value = int(rng.integers(1, 6))
            impression = f"{impression} {ds_sentence(value, row)}"
            truth.ds_values[report_id] = value
        elif rng.random() < 0.2:
            impression = (f"{impression} "
                          f"{DISTRACTOR_SENTENCES[row % len(DISTRACTOR_SENTENCES)]}")
        truth.lesions[report_id] = lesions
        reports.append(Report(
            report_id=report_id,
            exam_description=EXAM_DESCRIPTIONS[int(rng.integers(len(EXAM_DESCRIPTIONS)))],
            physician_id=physician,
            findings=findings,
            indications=INDICATIONS[int(rng.integers(len(INDICATIONS)))],
            impression=impression,
        ))
    return reports, truth


def synth_text_pairs(n: int, seed: int = 0) -> list[tuple[str, str]]:
    """(candidate, reference) pairs with varied overlap for metric tests."""
    rng = np.random.default_rng(seed)
    bank = FILLER_SENTENCES + INDICATIONS
    pairs = []
    for _ in range(n):
        k = int(rng.integers(1, 4))
        ref_sents = [bank[int(rng.integers(len(bank)))] for _ in range(k)]
        reference = " ".join(ref_sents)
        kind = int(rng.integers(5))
        if kind == 0:
            candidate = reference
        elif kind == 1:
            words = reference.split()
            rng.shuffle(words)
            candidate = " ".join(words)
        elif kind == 2:
            words = [w for w in reference.split() if rng.random() > 0.3]
            candidate = " ".join(words)
        elif kind == 3:
            candidate = " ".join(bank[int(rng.integers(len(bank)))]
                                 for _ in range(int(rng.integers(1, 4))))
        else:
            words = reference.split()
            for i in range(len(words)):
                if rng.random() < 0.25:
                    words[i] = bank[int(rng.integers(len(bank)))].split()[0]
            candidate = " ".join(words)
        pairs.append((candidate, reference))
    return pairs

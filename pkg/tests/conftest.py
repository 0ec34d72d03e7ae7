import warnings

import pytest

warnings.filterwarnings("ignore", category=DeprecationWarning)

from petsumm.synth import SynthConfig, synth_corpus


@pytest.fixture(scope="session")
def small_corpus():
    """60 reports, 3 physicians, 10 planted DS sentences."""
    reports, truth = synth_corpus(
        SynthConfig(n_reports=60, n_physicians=3, seed=42, ds_count=10))
    return reports, truth


def pass_line(name: str) -> None:
    """One visible marker per acceptance criterion."""
    print(f"\n[PASS] {name}")

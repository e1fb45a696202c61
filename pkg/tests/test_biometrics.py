"""Score generation and EER tests.

The EER oracle recounts error rates at every threshold with numpy and
compares on exact integer numerators, a different construction from the
counting-sort sweep in the implementation.
"""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from carenet.biometrics import (
    PRESET_CALIBRATION,
    ScoreDistributionSpec,
    compute_eer,
    generate_scores,
    preset_spec,
    score_stream,
)
from carenet.errors import EmptyPopulation
from carenet.fixedpoint import SCALE
from oracles import oracle_eer


def test_generation_is_deterministic():
    spec = ScoreDistributionSpec(kind="genuine", mean=0.8, stddev=0.1, seed=99)
    assert generate_scores(spec, 50) == generate_scores(spec, 50)


def test_generation_prefix_stable():
    spec = ScoreDistributionSpec(kind="impostor", mean=0.4, stddev=0.2, seed=5)
    assert generate_scores(spec, 200)[:80] == generate_scores(spec, 80)


def test_stream_matches_batch():
    spec = ScoreDistributionSpec(kind="genuine", mean=0.7, stddev=0.12, seed=17)
    stream = score_stream(spec)
    assert [next(stream) for _ in range(64)] == generate_scores(spec, 64)


def test_generation_clips_and_quantizes():
    wild = ScoreDistributionSpec(kind="genuine", mean=0.5, stddev=3.0, seed=3)
    scores = generate_scores(wild, 500)
    assert all(0 <= s <= SCALE for s in scores)
    assert 0 in scores and SCALE in scores  # that spread must saturate both ends


def test_sample_mean_tracks_spec_mean():
    spec = ScoreDistributionSpec(kind="genuine", mean=0.62, stddev=0.05, seed=21)
    scores = generate_scores(spec, 10_000)
    assert abs(sum(scores) / len(scores) / SCALE - 0.62) < 0.01


def test_eer_requires_both_populations():
    with pytest.raises(EmptyPopulation):
        compute_eer([], [5000])
    with pytest.raises(EmptyPopulation):
        compute_eer([5000], [])


def test_eer_perfect_separation_is_zero():
    genuine = [8000, 8500, 9000]
    impostor = [1000, 2000, 3000]
    eer, threshold = compute_eer(genuine, impostor)
    assert eer == 0.0
    assert 3000 < threshold <= 8000


def test_eer_identical_populations_is_half():
    pop = [4000, 5000, 6000]
    eer, _ = compute_eer(pop, list(pop))
    assert eer == pytest.approx(0.5, abs=1e-9)


def test_eer_hand_case_two_each():
    # genuine {6000, 8000}, impostor {5000, 7000}
    # thresholds 6001..7000 give FAR=0.5, FRR=0.5: first exact balance
    eer, threshold = compute_eer([6000, 8000], [5000, 7000])
    assert threshold == 6001
    assert eer == pytest.approx(0.5)
    assert (eer, threshold) == oracle_eer([6000, 8000], [5000, 7000])


def test_eer_tie_breaks_to_lowest_threshold():
    # all thresholds in (3000, 7000] have FAR=0=FRR gap identical
    eer, threshold = compute_eer([7000], [3000])
    assert eer == 0.0
    assert threshold == 3001


@settings(max_examples=30, deadline=None)
@given(
    gen=st.lists(st.integers(min_value=0, max_value=SCALE), min_size=1, max_size=40),
    imp=st.lists(st.integers(min_value=0, max_value=SCALE), min_size=1, max_size=40),
)
def test_eer_matches_oracle_on_random_populations(gen, imp):
    assert compute_eer(gen, imp) == oracle_eer(gen, imp)


def test_eer_against_oracle_large_fixed_populations():
    genuine = generate_scores(
        ScoreDistributionSpec(kind="genuine", mean=0.80, stddev=0.05, seed=1001), 10_000
    )
    impostor = generate_scores(
        ScoreDistributionSpec(kind="impostor", mean=0.50, stddev=0.05, seed=2002), 10_000
    )
    assert compute_eer(genuine, impostor) == oracle_eer(genuine, impostor)


def test_presets_cover_expected_accuracy_bands():
    for modality, bands in (("touch", (0.0, 0.04)), ("keystroke", (0.07, 0.13))):
        genuine = generate_scores(preset_spec(modality, "genuine", 101), 10_000)
        impostor = generate_scores(preset_spec(modality, "impostor", 202), 10_000)
        eer, _ = compute_eer(genuine, impostor)
        lo, hi = bands
        assert lo <= eer <= hi, f"{modality} EER {eer} outside [{lo}, {hi}]"


def test_preset_table_is_complete():
    for modality, pops in PRESET_CALIBRATION.items():
        assert set(pops) == {"genuine", "impostor"}
        spec = preset_spec(modality, "genuine", 1)
        assert spec.mean == pops["genuine"][0]

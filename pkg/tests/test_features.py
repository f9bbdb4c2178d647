"""Feature tests against independent reference implementations.

Every formula is checked twice: against a frozen hand-computed value on a
small fixed input, and against a naive reference implementation (two-pass
statistics, O(N^2) DFT, counting loops) on random and hypothesis-generated
inputs.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from har_pioneer.errors import (
    AmbiguousNameError,
    ConfigurationError,
    FeatureComputationError,
    UnresolvedNameError,
    WindowTooShortError,
)
from har_pioneer.features import (
    ALL_FEATURE_NAMES,
    BASELINE_FEATURE_NAMES,
    FEATURES,
    FeatureSpec,
    axis_correlation,
    basic_stats,
    canonical_spec,
    canonical_specs,
    default_specs,
    feature_schema,
    featurize_window,
    featurize_windows,
    fft_coefficients,
    histogram_entropy,
    layout_for_selection,
    mean_crossing_rate,
    mean_jerk,
    peak_frequency,
    pitch_and_roll,
    resolve_feature,
    signal_energy,
    signal_magnitude_area,
    write_features_csv,
    zero_crossing_rate,
)
from har_pioneer.ingest import Provenance
from har_pioneer.windowing import Window

FIXTURES = Path(__file__).parent / "fixtures"

finite_floats = st.floats(-1e4, 1e4, allow_nan=False, allow_infinity=False)


def series(draw_min=2, draw_max=64):
    return st.lists(finite_floats, min_size=draw_min, max_size=draw_max).map(
        lambda v: np.asarray(v, dtype=float)
    )


# ---------------------------------------------------------------------------
# Naive reference implementations (independent of the library code)
# ---------------------------------------------------------------------------


def dft_naive(x):
    """O(N^2) discrete Fourier transform."""
    n = len(x)
    out = []
    for m in range(n // 2 + 1):
        re = sum(x[i] * math.cos(-2 * math.pi * m * i / n) for i in range(n))
        im = sum(x[i] * math.sin(-2 * math.pi * m * i / n) for i in range(n))
        out.append(complex(re, im))
    return out


def entropy_naive(x, bins=16):
    lo, hi = min(x), max(x)
    if hi == lo:
        return 0.0
    counts = [0] * bins
    for v in x:
        b = int((v - lo) / (hi - lo) * bins)
        counts[min(b, bins - 1)] += 1
    total = len(x)
    h = 0.0
    for c in counts:
        if c:
            p = c / total
            h -= p * math.log2(p)
    return h / math.log2(bins)


def pearson_naive(x, y):
    n = len(x)
    mx = sum(x) / n
    my = sum(y) / n
    cov = sum((a - mx) * (b - my) for a, b in zip(x, y)) / n
    sx = math.sqrt(sum((a - mx) ** 2 for a in x) / n)
    sy = math.sqrt(sum((b - my) ** 2 for b in y) / n)
    if sx == 0.0 or sy == 0.0:
        return 0.0
    return max(-1.0, min(1.0, cov / (sx * sy)))


# ---------------------------------------------------------------------------
# Frozen hand-computed values
# ---------------------------------------------------------------------------


def test_basic_stats_hand_values():
    stats = basic_stats(np.array([1.0, 2.0, 3.0, 4.0]))
    assert stats["mean"] == pytest.approx(2.5, abs=1e-12)
    assert stats["var"] == pytest.approx(1.25, abs=1e-12)  # population
    assert stats["std"] == pytest.approx(math.sqrt(1.25), abs=1e-12)
    assert stats["min"] == 1.0 and stats["max"] == 4.0


def test_sma_hand_value():
    xyz = np.array([[1.0, -2.0, 3.0], [-4.0, 5.0, -6.0]])
    # (|1|+|2|+|3| + |4|+|5|+|6|) / 2 = 21 / 2
    assert signal_magnitude_area(xyz) == pytest.approx(10.5, abs=1e-12)


def test_energy_hand_value():
    assert signal_energy(np.array([1.0, 2.0, 3.0])) == pytest.approx(
        14.0 / 3.0, abs=1e-12
    )


def test_entropy_constant_window_is_zero():
    assert histogram_entropy(np.full(50, 3.7)) == 0.0


def test_entropy_two_level_square_wave():
    # Two equally occupied bins out of 16: H = 1 bit, normalized by 4 bits.
    x = np.tile([0.0, 1.0], 25)
    assert histogram_entropy(x) == pytest.approx(0.25, abs=1e-12)


def test_zcr_hand_value():
    x = np.array([1.0, -1.0, 1.0, -1.0, 1.0])
    assert zero_crossing_rate(x) == pytest.approx(1.0, abs=1e-12)
    # Zeros never produce strict sign changes.
    assert zero_crossing_rate(np.array([0.0, 1.0, 0.0, -1.0])) == 0.0


def test_mcr_sees_oscillation_around_offset():
    x = np.array([10.0, 12.0, 10.0, 12.0, 10.0])
    assert zero_crossing_rate(x) == 0.0
    assert mean_crossing_rate(x) == pytest.approx(1.0, abs=1e-12)


def test_fft_pure_cosine_concentrates_in_one_bin():
    n = 30
    x = np.cos(2 * np.pi * 3 * np.arange(n) / n)
    coeffs = fft_coefficients(x, k=5)
    # |X[3]| = n/2 for a unit cosine at bin 3; other bins ~ 0.
    assert coeffs[2] == pytest.approx(15.0, abs=1e-9)
    assert np.all(np.delete(coeffs, 2) < 1e-9)


def test_pitch_roll_gravity_cases():
    # Gravity along +z: flat, pitch = roll = 0.
    pitch, roll = pitch_and_roll(np.tile([0.0, 0.0, 9.81], (10, 1)))
    assert pitch == pytest.approx(0.0, abs=1e-12)
    assert roll == pytest.approx(0.0, abs=1e-12)
    # Gravity along +x: pitch = -pi/2.
    pitch, _ = pitch_and_roll(np.tile([9.81, 0.0, 0.0], (10, 1)))
    assert pitch == pytest.approx(-math.pi / 2, abs=1e-12)
    # Gravity along +y: roll = +pi/2.
    _, roll = pitch_and_roll(np.tile([0.0, 9.81, 0.0], (10, 1)))
    assert roll == pytest.approx(math.pi / 2, abs=1e-12)


def test_jerk_hand_value():
    x = np.array([0.0, 1.0, 3.0, 2.0])
    # mean(|1, 2, -1|) * fs = (4/3) * 30
    assert mean_jerk(x, 30.0) == pytest.approx(40.0, abs=1e-12)


def test_peak_freq_pure_sine():
    n = 150
    fs = 30.0
    x = np.sin(2 * np.pi * 2.0 * np.arange(n) / fs)  # 2 Hz -> bin 10
    assert peak_frequency(x, fs) == pytest.approx(2.0, abs=1e-12)


def test_peak_freq_tie_takes_lowest_bin():
    # A constant signal has zero magnitude in all bins 1..N/2: every bin
    # ties, the lowest wins.
    x = np.ones(30)
    assert peak_frequency(x, 30.0) == pytest.approx(1.0, abs=1e-12)


def test_axis_corr_hand_values():
    x = np.array([1.0, 2.0, 3.0])
    assert axis_correlation(x, 2 * x) == pytest.approx(1.0, abs=1e-12)
    assert axis_correlation(x, -x) == pytest.approx(-1.0, abs=1e-12)
    assert axis_correlation(x, np.full(3, 5.0)) == 0.0


# ---------------------------------------------------------------------------
# Naive-reference comparisons
# ---------------------------------------------------------------------------


@settings(max_examples=50)
@given(series(2, 40))
def test_stats_match_two_pass_reference(x):
    stats = basic_stats(x)
    n = len(x)
    mean = sum(x) / n
    var = sum((v - mean) ** 2 for v in x) / n
    assert stats["mean"] == pytest.approx(mean, rel=1e-9, abs=1e-9)
    assert stats["var"] == pytest.approx(var, rel=1e-9, abs=1e-9)
    assert stats["std"] == pytest.approx(math.sqrt(var), rel=1e-9, abs=1e-9)
    assert stats["min"] == min(x) and stats["max"] == max(x)


@settings(max_examples=30)
@given(series(12, 40))
def test_fft_matches_naive_dft(x):
    coeffs = fft_coefficients(x, k=5)
    ref = [abs(c) for c in dft_naive(list(x))[1:6]]
    np.testing.assert_allclose(coeffs, ref, rtol=1e-6, atol=1e-6)


@settings(max_examples=50)
@given(series(2, 50))
def test_entropy_matches_naive(x):
    assert histogram_entropy(x) == pytest.approx(
        entropy_naive(list(x)), rel=1e-9, abs=1e-9
    )
    assert 0.0 <= histogram_entropy(x) <= 1.0


@settings(max_examples=50)
@given(series(2, 50))
def test_zcr_mcr_match_counting_loops(x):
    zc = sum(1 for i in range(len(x) - 1) if x[i] * x[i + 1] < 0)
    assert zero_crossing_rate(x) == pytest.approx(zc / (len(x) - 1), abs=1e-12)
    centered = x - x.mean()
    mc = sum(
        1 for i in range(len(centered) - 1) if centered[i] * centered[i + 1] < 0
    )
    assert mean_crossing_rate(x) == pytest.approx(mc / (len(x) - 1), abs=1e-12)


@settings(max_examples=50)
@given(series(2, 30), series(2, 30))
def test_axis_corr_matches_naive_pearson(x, y):
    n = min(len(x), len(y))
    x, y = x[:n], y[:n]
    r = axis_correlation(x, y)
    assert r == pytest.approx(pearson_naive(list(x), list(y)), rel=1e-7, abs=1e-7)
    assert -1.0 <= r <= 1.0


@settings(max_examples=30)
@given(series(4, 60))
def test_peak_freq_matches_naive_dft(x):
    fs = 30.0
    n = len(x)
    mags = [abs(c) for c in dft_naive(list(x))]
    bins = list(range(1, n // 2 + 1))
    best = max(mags[b] for b in bins)
    expected_bin = min(b for b in bins if mags[b] >= best - 1e-9 * max(best, 1.0))
    got = peak_frequency(x, fs)
    got_bin = round(got * n / fs)
    # Allow the naive scan to disagree only within its own numeric slack.
    assert abs(mags[got_bin] - best) <= 1e-6 * max(best, 1.0)
    assert got_bin <= expected_bin or mags[got_bin] >= mags[expected_bin]


# ---------------------------------------------------------------------------
# Equivariance properties
# ---------------------------------------------------------------------------


@settings(max_examples=50)
@given(series(2, 40), st.floats(-100, 100, allow_nan=False))
def test_shift_equivariance(x, c):
    base = basic_stats(x)
    shifted = basic_stats(x + c)
    assert shifted["mean"] == pytest.approx(base["mean"] + c, rel=1e-9, abs=1e-6)
    assert shifted["std"] == pytest.approx(base["std"], rel=1e-9, abs=1e-6)
    assert shifted["var"] == pytest.approx(base["var"], rel=1e-9, abs=1e-6)


@settings(max_examples=50)
@given(series(2, 40))
def test_sign_flip_invariance(x):
    assert zero_crossing_rate(-x) == pytest.approx(
        zero_crossing_rate(x), abs=1e-12
    )
    assert mean_crossing_rate(-x) == pytest.approx(
        mean_crossing_rate(x), abs=1e-12
    )
    assert signal_energy(-x) == pytest.approx(signal_energy(x), rel=1e-12)


# ---------------------------------------------------------------------------
# Registry, specs, resolution
# ---------------------------------------------------------------------------


def test_registry_inventory():
    assert len(FEATURES) == 15
    assert BASELINE_FEATURE_NAMES == ("mean", "std", "var", "min", "max")
    assert len(ALL_FEATURE_NAMES) == 15
    assert set(BASELINE_FEATURE_NAMES) < set(ALL_FEATURE_NAMES)


def test_canonical_spec_fills_defaults():
    spec = canonical_spec(FeatureSpec("fft_coeffs"))
    assert spec.params == {"k": 5}
    assert canonical_spec("mean").params == {}


def test_canonical_spec_validates_params():
    with pytest.raises(ConfigurationError):
        canonical_spec(FeatureSpec("fft_coeffs", {"k": 0}))
    with pytest.raises(ConfigurationError):
        canonical_spec(FeatureSpec("fft_coeffs", {"k": 2.5}))
    with pytest.raises(ConfigurationError):
        canonical_spec(FeatureSpec("mean", {"k": 3}))
    with pytest.raises(ConfigurationError):
        canonical_spec("no_such_feature")


def test_canonical_specs_rejects_duplicates():
    with pytest.raises(ConfigurationError):
        canonical_specs(["mean", "mean"])
    assert canonical_specs([]) == ()


def test_resolve_feature_paths():
    assert resolve_feature("zcr").name == "zcr"
    assert resolve_feature("Zero crossing rate").name == "zcr"
    assert resolve_feature("standard deviation").name == "std"
    assert resolve_feature("FFT coefficients (first five)").name == "fft_coeffs"
    assert resolve_feature("dominant frequency").name == "peak_freq"
    with pytest.raises(UnresolvedNameError):
        resolve_feature("wavelet approximation coefficients")
    # "minimum and maximum" names two distinct features.
    with pytest.raises(AmbiguousNameError):
        resolve_feature("minimum and maximum")


def test_resolve_feature_token_matching_is_word_level():
    # "dominant" must not resolve via the substring "min".
    with pytest.raises(UnresolvedNameError):
        resolve_feature("dominant axis ratio")


# ---------------------------------------------------------------------------
# Schema and featurize
# ---------------------------------------------------------------------------


def make_window(n=150, locs=("HIP",), modalities=("acc",), seed=0, label=2):
    rng = np.random.default_rng(seed)
    channels = {
        loc: {mod: rng.normal(size=(n, 3)) for mod in modalities} for loc in locs
    }
    return Window(
        start_index=0,
        end_index=n,
        channels=channels,
        label_index=label,
        provenance=Provenance("S1", "ADL1", "mem://S1-ADL1"),
    )


def test_schema_matches_hand_enumerated_fixture():
    fixture = json.loads((FIXTURES / "schema_one_location.json").read_text())
    schema = feature_schema(
        default_specs(ALL_FEATURE_NAMES), (("HIP", "acc"),)
    )
    assert list(schema) == fixture["columns"]
    assert len(schema) == 54


def test_baseline_schema_is_sixty_columns(catalog):
    layout = layout_for_selection(catalog, ["RUA^", "LUA^", "RUA_", "LUA_"])
    schema = feature_schema(default_specs(BASELINE_FEATURE_NAMES), layout)
    assert len(schema) == 60
    assert schema[0] == "RUA^.acc_x.mean"
    assert schema[-1] == "LUA_.acc_z.max"


def test_empty_spec_list_gives_empty_vector():
    window = make_window()
    vec = featurize_window(window, (), 30.0)
    assert vec.names == ()
    assert vec.values.shape == (0,)


def test_featurize_matches_schema_order():
    window = make_window(modalities=("acc", "gyro"))
    specs = default_specs(ALL_FEATURE_NAMES)
    layout = (("HIP", "acc"), ("HIP", "gyro"))
    vec = featurize_window(window, specs, 30.0)
    assert vec.names == feature_schema(specs, layout)
    # acc gets pitch_roll (2 cols); gyro does not: 54 + 52.
    assert len(vec.names) == 106
    assert vec.label_index == 2
    assert np.isfinite(vec.values).all()


def test_featurize_values_match_scalar_functions():
    window = make_window()
    vec = featurize_window(window, default_specs(("mean", "sma")), 30.0)
    triad = window.channels["HIP"]["acc"]
    by_name = dict(zip(vec.names, vec.values))
    assert by_name["HIP.acc_x.mean"] == pytest.approx(
        triad[:, 0].mean(), abs=1e-12
    )
    assert by_name["HIP.acc.sma"] == pytest.approx(
        signal_magnitude_area(triad), abs=1e-12
    )


def test_featurize_window_too_short_for_fft():
    window = make_window(n=11)
    with pytest.raises(WindowTooShortError, match="fft_coeffs"):
        featurize_window(window, default_specs(("fft_coeffs",)), 30.0)


def test_featurize_rejects_non_finite_result():
    window = make_window()
    window.channels["HIP"]["acc"][3, 1] = np.inf
    with pytest.raises(FeatureComputationError, match="HIP"):
        featurize_window(window, default_specs(("mean",)), 30.0)


def test_featurize_windows_builds_matrix_and_csv(tmp_path):
    windows = [make_window(seed=s, label=s % 5) for s in range(6)]
    matrix = featurize_windows(windows, default_specs(BASELINE_FEATURE_NAMES), 30.0)
    assert matrix.X.shape == (6, 15)
    np.testing.assert_array_equal(matrix.y, [0, 1, 2, 3, 4, 0])

    out = tmp_path / "features.csv"
    write_features_csv(out, matrix)
    lines = out.read_text().splitlines()
    assert len(lines) == 7
    header = lines[0].split(",")
    assert header[:2] == ["HIP.acc_x.mean", "HIP.acc_x.std"]
    assert header[-1] == "label"
    assert lines[1].split(",")[-1] == "Stand"
    # Floats are written with repr precision: parsing back is exact.
    row0 = [float(v) for v in lines[1].split(",")[:-1]]
    np.testing.assert_array_equal(row0, matrix.X[0])

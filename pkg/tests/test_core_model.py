import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from obstack.core import (
    Canonical,
    InvalidLabelKey,
    InvalidName,
    InvalidValue,
    MetricSample,
    SampleKind,
    SeriesKey,
    TooManyLabels,
    UnknownUnit,
    canonical_unit,
    canonicalize_series_key,
    convert_unit,
)
from obstack.core.model import MAX_LABELS


class TestCanonicalizeSeriesKey:
    def test_already_canonical(self):
        key = canonicalize_series_key("cpu_seconds", {"host": "n1"})
        assert key == SeriesKey("cpu_seconds", (("host", "n1"),))

    def test_sorts_and_lowercases(self):
        key = canonicalize_series_key("cpu_seconds", {"B": "2", "a": "1"})
        assert key == SeriesKey("cpu_seconds", (("a", "1"), ("b", "2")))

    def test_rejects_digit_start(self):
        with pytest.raises(InvalidName):
            canonicalize_series_key("9bad", {})

    def test_rejects_empty_name(self):
        with pytest.raises(InvalidName):
            canonicalize_series_key("", {})

    def test_rejects_bad_label_key(self):
        with pytest.raises(InvalidLabelKey):
            canonicalize_series_key("ok", {"bad-key": "v"})

    def test_rejects_too_many_labels(self):
        labels = {f"k{i}": "v" for i in range(MAX_LABELS)}
        with pytest.raises(TooManyLabels):
            canonicalize_series_key("ok", labels)

    def test_rejects_case_collapsed_duplicates(self):
        with pytest.raises(InvalidLabelKey):
            canonicalize_series_key("ok", {"a": "1", "A": "2"})

    @given(
        st.from_regex(r"[a-z_][a-z0-9_:]{0,10}", fullmatch=True),
        st.dictionaries(
            st.from_regex(r"[a-z_][a-z0-9_]{0,8}", fullmatch=True),
            st.text(max_size=12),
            max_size=8,
        ),
    )
    def test_idempotent(self, name, labels):
        once = canonicalize_series_key(name, labels)
        twice = canonicalize_series_key(once.name, once.label_map())
        assert once == twice

    def test_order_independent(self):
        a = canonicalize_series_key("m", {"x": "1", "y": "2", "z": "3"})
        b = canonicalize_series_key("m", {"z": "3", "x": "1", "y": "2"})
        assert a == b


class TestConvertUnit:
    def test_ms_to_seconds(self):
        value, unit = convert_unit(1500, "ms")
        assert value == 1.5
        assert unit.canonical is Canonical.SECONDS

    def test_kwh_to_joules(self):
        # oracle: 2 * 3.6e6 by hand
        value, unit = convert_unit(2, "kWh")
        assert value == 7.2e6
        assert unit.canonical is Canonical.JOULES

    def test_percent_to_ratio(self):
        value, unit = convert_unit(50, "%")
        assert value == 0.5
        assert unit.canonical is Canonical.RATIO
        # multi-core CPU: no clamping above 1.0
        assert convert_unit(250, "%")[0] == 2.5

    def test_binary_and_decimal_prefixes(self):
        assert convert_unit(1, "KiB")[0] == 1024.0
        assert convert_unit(1, "kB")[0] == 1000.0
        assert convert_unit(1, "GiB")[0] == 2.0**30
        assert convert_unit(3, "GB")[0] == 3e9

    def test_unknown_unit_rejected(self):
        with pytest.raises(UnknownUnit):
            convert_unit(1.0, "furlongs")

    def test_empty_symbol_is_none(self):
        value, unit = convert_unit(5.0, "")
        assert value == 5.0
        assert unit.canonical is Canonical.NONE


class TestMetricSample:
    def test_rejects_nan(self):
        with pytest.raises(InvalidValue):
            MetricSample("m", {}, float("nan"), 1)

    def test_rejects_inf(self):
        with pytest.raises(InvalidValue):
            MetricSample("m", {}, math.inf, 1)

    def test_rejects_zero_timestamp(self):
        with pytest.raises(InvalidValue):
            MetricSample("m", {}, 1.0, 0)

    def test_unit_equality_ignores_source_symbol(self):
        _, from_wh = convert_unit(1, "Wh")
        assert from_wh == canonical_unit(Canonical.JOULES)

    def test_kind_values(self):
        assert {k.value for k in SampleKind} == {"gauge", "counter", "event"}

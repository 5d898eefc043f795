import pytest

from obstack.core import Canonical, MetricSample, SampleKind, canonical_unit
from obstack.core.clock import SettableClock
from obstack.core.errors import InvalidRange
from obstack.core.selector import parse_selector
from obstack.metastore import (
    EntityRecord,
    InconsistentStats,
    Metastore,
    SummaryRecord,
    make_stats,
)


@pytest.fixture
def store(tmp_path):
    clock = SettableClock()
    clock.set_ms(1_000_000)
    ms = Metastore(str(tmp_path / "meta"), clock=clock)
    ms._clock_for_tests = clock
    yield ms
    ms.close()


def event(name, attributes, ts, value=1.0):
    return MetricSample(
        name, attributes, value, ts, canonical_unit(Canonical.NONE), SampleKind.EVENT
    )


class TestEntities:
    def test_insert_sets_created_equals_updated(self, store):
        row = store.upsert_entity(EntityRecord("n1", "host", {"os": "linux"}))
        assert row.created_at == row.updated_at == 1_000_000

    def test_upsert_replaces_attributes_and_advances_updated(self, store):
        store.upsert_entity(EntityRecord("n1", "host", {"os": "linux"}))
        store._clock_for_tests.set_ms(2_000_000)
        row = store.upsert_entity(EntityRecord("n1", "host", {"rack": "r2"}))
        assert row.attributes == {"rack": "r2"}
        assert row.created_at == 1_000_000
        assert row.updated_at == 2_000_000
        assert len(store.list_entities("host")) == 1

    def test_empty_id_rejected(self, store):
        with pytest.raises(ValueError):
            store.upsert_entity(EntityRecord("", "host"))

    def test_idempotent_upsert(self, store):
        record = EntityRecord("p1", "plot", {"area": "12"})
        store.upsert_entity(record)
        store.upsert_entity(record)
        rows = store.list_entities("plot")
        assert len(rows) == 1
        assert rows[0].attributes == {"area": "12"}

    def test_same_id_different_kind(self, store):
        store.upsert_entity(EntityRecord("x", "host"))
        store.upsert_entity(EntityRecord("x", "user"))
        assert len(store.list_entities()) == 2


class TestSummaries:
    def summary(self, sid="s1", window=(0, 60_000), values=(1.0, 5.0)):
        stats = make_stats(
            len(values), sum(values), min(values), max(values), sum(v * v for v in values)
        )
        return SummaryRecord(sid, 'm{host="n1"}', window, stats, produced_at=99)

    def test_store_and_query(self, store):
        store.store_summary(self.summary())
        [row] = store.query_summaries(selector_text='m{host="n1"}', window=(10, 20))
        assert row.stats["mean"] == 3.0

    def test_negative_variance_rejected(self):
        with pytest.raises(InconsistentStats):
            make_stats(2, 6.0, 1.0, 5.0, 1.0)  # sum_sq far below sum^2/count

    def test_inconsistent_mean_rejected(self, store):
        record = self.summary()
        bad = SummaryRecord(
            record.summary_id,
            record.selector,
            record.window,
            {**record.stats, "mean": 10.0},
            record.produced_at,
        )
        with pytest.raises(InconsistentStats):
            store.store_summary(bad)

    def test_overlapping_windows_both_kept(self, store):
        store.store_summary(self.summary("a", (0, 60_000)))
        store.store_summary(self.summary("b", (30_000, 90_000)))
        assert len(store.query_summaries(window=(40_000, 50_000))) == 2

    def test_window_no_overlap(self, store):
        store.store_summary(self.summary("a", (0, 60_000)))
        assert store.query_summaries(window=(60_000, 70_000)) == []

    def test_read_back_verifies(self, store):
        store.store_summary(self.summary())
        for row in store.query_summaries():
            row.verify()


class TestEvents:
    def test_empty_store(self, store):
        assert store.query_events(parse_selector("harvest"), (0, 10**12)) == []

    def test_filter_and_sort(self, store):
        store.append_event(event("harvest", {"plot": "p2"}, 3000))
        store.append_event(event("harvest", {"plot": "p1"}, 1000))
        store.append_event(event("irrigation", {"plot": "p1"}, 2000))
        rows = store.query_events(parse_selector("harvest"), (0, 10_000))
        assert [r.timestamp for r in rows] == [1000, 3000]
        rows = store.query_events(parse_selector('harvest{plot="p1"}'), (0, 10_000))
        assert len(rows) == 1

    def test_window_excludes(self, store):
        store.append_event(event("harvest", {}, 5000))
        assert store.query_events(parse_selector("harvest"), (6000, 7000)) == []

    def test_bad_window(self, store):
        with pytest.raises(InvalidRange):
            store.query_events(parse_selector("harvest"), (10, 10))


class TestDurabilityAndCompaction:
    def test_restart_preserves_state(self, tmp_path):
        clock = SettableClock()
        clock.set_ms(500)
        ms = Metastore(str(tmp_path / "m"), clock=clock)
        ms.upsert_entity(EntityRecord("n1", "host", {"a": "1"}))
        ms.append_event(event("e", {}, 123))
        ms.put("rule", "r1", {"threshold": 5})
        ms.close()
        ms2 = Metastore(str(tmp_path / "m"), clock=clock)
        assert ms2.get_entity("host", "n1").attributes == {"a": "1"}
        assert len(ms2.query_events(parse_selector("e"), (1, 10**9))) == 1
        assert ms2.get("rule", "r1") == {"threshold": 5}
        ms2.close()

    def test_compaction_shrinks_log(self, tmp_path):
        clock = SettableClock()
        clock.set_ms(500)
        ms = Metastore(str(tmp_path / "m"), clock=clock)
        for i in range(3000):
            ms.put("kv", f"k{i % 10}", {"v": i})
        path = tmp_path / "m" / "meta.jsonl"
        lines = path.read_text().strip().splitlines()
        # bounded by the compaction threshold, not the 3000 writes
        assert len(lines) < 1100
        assert ms.get("kv", "k9")["v"] == 2999
        ms.close()
        ms2 = Metastore(str(tmp_path / "m"), clock=clock)
        assert ms2.get("kv", "k0")["v"] == 2990
        ms2.close()

import csv
import io
import json
import math
import random

import pytest

from citerank.aggregate import AggregateStore, Window
from citerank.errors import ConfigError, DataError
from citerank.linking import EntityKey
from citerank.metrics import EntityTally, SiConfig
from citerank.rank import (
    BREAKDOWN_CSV_HEADER,
    RANK_CSV_HEADER,
    RankSpec,
    correlate,
    export_breakdown,
    export_rows,
    field_breakdown,
    rank_entities,
    round_display,
)


def store_of(tallies: dict[EntityKey, EntityTally], kind="journal", by_field=False):
    store = AggregateStore(Window(2024, 2024), kind, by_field=by_field)
    store.tallies = dict(tallies)
    return store


def journal_store(rows: dict[str, tuple[int, int, int, int]]):
    return store_of(
        {
            EntityKey("journal", name): EntityTally(*counts)
            for name, counts in rows.items()
        }
    )


class TestRoundDisplay:
    @pytest.mark.parametrize(
        "value,expected",
        [
            (0.9013893241408127, "0.90"),
            (0.975, "0.98"),  # half rounds up, not to even
            (0.125, "0.13"),
            (0.974999, "0.97"),
            (1.0, "1.00"),
            (0.0, "0.00"),
            (-1.785, "-1.79"),  # away from zero on the negative side too
            (6.244999, "6.24"),
            (None, ""),
        ],
    )
    def test_cases(self, value, expected):
        assert round_display(value) == expected


class TestRankEntities:
    def test_orders_by_exact_metric_not_display(self):
        # both display as 5.87; the exact values must decide
        store = journal_store(
            {
                "A": (100, 0, 0, 742000),
                "B": (100, 0, 0, 741000),
            }
        )
        rows, _ = rank_entities(store, RankSpec(metric="si"))
        assert [row.entity.id for row in rows] == ["A", "B"]
        assert rows[0].si_display == rows[1].si_display == "5.87"

    def test_exact_tie_breaks_by_id_ascending(self):
        store = journal_store(
            {
                "Zeta": (50, 0, 0, 1000),
                "Alpha": (50, 0, 0, 1000),
                "Mid": (50, 0, 0, 1000),
            }
        )
        rows, _ = rank_entities(store, RankSpec(metric="si"))
        assert [row.entity.id for row in rows] == ["Alpha", "Mid", "Zeta"]
        assert [row.rank for row in rows] == [1, 2, 3]

    def test_usi_ranking_puts_uncontested_block_first(self):
        store = journal_store(
            {
                "clean_a": (10, 0, 0, 5),
                "clean_b": (3, 9, 0, 5),
                "contested": (1000, 0, 1, 5),
                "zero": (0, 0, 4, 5),
            }
        )
        rows, _ = rank_entities(store, RankSpec(metric="usi"))
        assert [row.entity.id for row in rows] == [
            "clean_a",
            "clean_b",
            "contested",
            "zero",
        ]
        assert rows[0].usi_exact == rows[1].usi_exact == 1.0
        assert rows[3].usi_exact == 0.0

    def test_si_ranking_excludes_undefined(self):
        store = journal_store(
            {
                "ok": (5, 0, 0, 100),
                "no_valenced": (0, 50, 0, 100),  # usi undefined
                "zero_usi": (0, 0, 5, 100),  # usi 0, si undefined
                "no_refs": (5, 0, 0, 0),  # log of zero
            }
        )
        rows, report = rank_entities(store, RankSpec(metric="si"))
        assert [row.entity.id for row in rows] == ["ok"]
        assert report.undefined_metric == 3

    def test_usi_ranking_keeps_zero_usi(self):
        store = journal_store({"zero_usi": (0, 0, 5, 100)})
        rows, report = rank_entities(store, RankSpec(metric="usi"))
        assert len(rows) == 1 and report.undefined_metric == 0

    def test_thresholds_and_first_rejecting_filter(self):
        store = journal_store(
            {
                "ok": (10, 0, 2, 50),
                "few_valenced": (1, 99, 0, 50),
                "few_refs": (10, 0, 2, 3),
                "fails_both": (1, 0, 0, 1),
            }
        )
        rows, report = rank_entities(
            store, RankSpec(metric="si", min_valenced=5, min_references=10)
        )
        assert [row.entity.id for row in rows] == ["ok"]
        assert report.below_min_valenced == 2  # fails_both lands here, not in both
        assert report.below_min_references == 1

    def test_top_k(self):
        store = journal_store({f"E{i:02d}": (10 + i, 0, 0, 100) for i in range(10)})
        rows, report = rank_entities(store, RankSpec(metric="si", top_k=3))
        assert len(rows) == 3
        assert report.beyond_top_k == 7
        assert [row.rank for row in rows] == [1, 2, 3]

    def test_rows_plus_exclusions_partition_store(self):
        rng = random.Random(3)
        store = journal_store(
            {
                f"E{i}": (
                    rng.randrange(0, 5),
                    rng.randrange(0, 5),
                    rng.randrange(0, 3),
                    rng.randrange(0, 8),
                )
                for i in range(200)
            }
        )
        spec = RankSpec(metric="si", min_valenced=2, min_references=3, top_k=20)
        rows, report = rank_entities(store, spec)
        assert len(rows) + report.total == len(store.tallies)

    def test_order_independent_of_store_insertion(self):
        rng = random.Random(11)
        counts = {
            f"E{i}": (rng.randrange(1, 100), 0, rng.randrange(0, 5), rng.randrange(1, 500))
            for i in range(50)
        }
        names = list(counts)
        baseline = rank_entities(journal_store(counts), RankSpec())[0]
        for _ in range(3):
            rng.shuffle(names)
            shuffled = journal_store({name: counts[name] for name in names})
            assert rank_entities(shuffled, RankSpec())[0] == baseline

    def test_kind_mismatch_rejected(self):
        store = journal_store({"A": (1, 0, 0, 1)})
        with pytest.raises(ConfigError):
            rank_entities(store, RankSpec(kind="institution"))

    def test_bad_spec_rejected(self):
        with pytest.raises(ConfigError):
            RankSpec(metric="h")
        with pytest.raises(ConfigError):
            RankSpec(top_k=0)
        with pytest.raises(ConfigError):
            RankSpec(min_valenced=-1)

    def test_custom_si_config_changes_scores_not_contract(self):
        store = journal_store({"A": (90, 0, 10, 1000)})
        natural = rank_entities(
            store, RankSpec(si_config=SiConfig(log_base=math.e))
        )[0][0]
        assert natural.si_exact == pytest.approx(math.log(1000 * 0.9**2), abs=1e-12)


class TestFieldBreakdown:
    def make_store(self):
        return store_of(
            {
                EntityKey("institution", "I1", "Physics"): EntityTally(10, 5, 2, 100),
                EntityKey("institution", "I2", "Physics"): EntityTally(50, 5, 1, 400),
                EntityKey("institution", "I1", "Maths"): EntityTally(7, 0, 1, 50),
                EntityKey("institution", "I3", "Maths"): EntityTally(0, 9, 0, 50),
            },
            kind="institution",
            by_field=True,
        )

    def test_rows_grouped_and_sorted(self):
        rows = field_breakdown(self.make_store())
        assert [(row.field, row.institution.id) for row in rows] == [
            ("Maths", "I1"),
            ("Physics", "I2"),
            ("Physics", "I1"),
        ]
        # grouped entity key carries no field label; the row does
        assert all(row.institution.field is None for row in rows)

    def test_undefined_rows_dropped(self):
        rows = field_breakdown(self.make_store())
        assert all(row.si_exact is not None for row in rows)
        assert len(rows) == 3  # I3/Maths has no valenced statements

    def test_requires_by_field_store(self):
        with pytest.raises(ConfigError):
            field_breakdown(journal_store({"A": (1, 0, 0, 1)}))


class TestCorrelate:
    def ranked_rows(self):
        rng = random.Random(5)
        store = journal_store(
            {
                f"E{i}": (rng.randrange(1, 100), 0, rng.randrange(1, 20), rng.randrange(1, 900))
                for i in range(40)
            }
        )
        return rank_entities(store, RankSpec(metric="usi"))[0]

    def test_self_correlation_is_one(self):
        rows = self.ranked_rows()
        external = {row.entity.id: row.usi_exact for row in rows}
        result = correlate(rows, external, metric="usi")
        assert result.r == pytest.approx(1.0, abs=1e-12)
        assert result.matched == len(rows)
        assert result.unmatched_rows == 0
        assert result.unmatched_external == 0

    def test_unmatched_counted_on_both_sides(self):
        rows = self.ranked_rows()
        external = {row.entity.id: 1.0 + i for i, row in enumerate(rows[:10])}
        external["nobody"] = 3.0
        result = correlate(rows, external, metric="usi")
        assert result.matched == 10
        assert result.unmatched_rows == len(rows) - 10
        assert result.unmatched_external == 1

    def test_degenerate_raises(self):
        rows = self.ranked_rows()
        with pytest.raises(DataError):
            correlate(rows, {rows[0].entity.id: 1.0}, metric="usi")
        with pytest.raises(DataError):
            correlate(rows, {row.entity.id: 5.0 for row in rows}, metric="usi")

    def test_bad_metric_rejected(self):
        with pytest.raises(ConfigError):
            correlate(self.ranked_rows(), {}, metric="h")


class TestExports:
    def rows(self):
        store = journal_store(
            {
                "Journal of Things, Part B": (1234, 5678, 90, 100000),
                "Plain|Pipes": (10, 3, 1, 500),
            }
        )
        return rank_entities(store, RankSpec(metric="si"))[0]

    def test_csv_header_exact(self):
        text = export_rows(self.rows(), "csv")
        assert text.splitlines()[0] == RANK_CSV_HEADER

    def test_csv_quotes_commas_and_round_trips_exact_values(self):
        rows = self.rows()
        parsed = list(csv.DictReader(io.StringIO(export_rows(rows, "csv"))))
        assert len(parsed) == len(rows)
        by_id = {entry["id"]: entry for entry in parsed}
        assert "Journal of Things, Part B" in by_id
        for row in rows:
            entry = by_id[row.entity.id]
            assert float(entry["usi_exact"]) == row.usi_exact
            assert float(entry["si_exact"]) == row.si_exact
            assert int(entry["rank"]) == row.rank

    def test_json_round_trips(self):
        rows = self.rows()
        payload = json.loads(export_rows(rows, "json"))
        assert [entry["id"] for entry in payload] == [row.entity.id for row in rows]
        assert payload[0]["usi_exact"] == rows[0].usi_exact

    def test_markdown_layout(self):
        text = export_rows(self.rows(), "md")
        lines = text.splitlines()
        assert lines[0] == "| Entity | Supporting | Mentioning | Contrasting | USI | SI |"
        assert set(lines[1].replace("|", "").split()) <= {":--", "--:"}
        assert "1,234" in text  # thousands separators in the human view
        assert "Plain\\|Pipes" in text  # pipes escaped so the table stays a table

    def test_markdown_deterministic(self):
        assert export_rows(self.rows(), "md") == export_rows(self.rows(), "md")

    def test_empty_rows_still_valid(self):
        assert export_rows([], "csv") == RANK_CSV_HEADER + "\n"
        assert json.loads(export_rows([], "json")) == []
        assert export_rows([], "md").splitlines()[0].startswith("| Entity")

    def test_unknown_format_rejected(self):
        with pytest.raises(ConfigError):
            export_rows([], "xml")

    def test_breakdown_csv_header_exact(self):
        store = store_of(
            {EntityKey("institution", "I1", "Physics"): EntityTally(5, 0, 1, 50)},
            kind="institution",
            by_field=True,
        )
        text = export_breakdown(field_breakdown(store), "csv")
        assert text.splitlines()[0] == BREAKDOWN_CSV_HEADER
        entry = next(csv.DictReader(io.StringIO(text)))
        assert entry["institution"] == "I1"
        assert entry["field"] == "Physics"
        assert float(entry["usi_exact"]) == 5 / 6

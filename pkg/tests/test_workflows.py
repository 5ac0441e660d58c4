"""Tests for the orchestration layer shared by CLI and service."""

import functools

import numpy as np
import pytest

from earlyfcm.calibration import _model_document, threshold_for
from earlyfcm.cost import PriceSheet
from earlyfcm.errors import ConfigurationError, InputError
from earlyfcm.fcm import FcmConfig, VirtualClock
from earlyfcm.imagery import fingerprint_corpus
from earlyfcm.lof import LofConfig, removal_count
from earlyfcm.workflows import (
    classify_record,
    cost_from_report,
    run_calibration,
    run_evaluation,
)
from synthcorpus import make_corpus, make_image

SMALL_LOF = LofConfig(n_neighbors=5, outliers_fraction=0.03)
CFG3 = FcmConfig(n_clusters=3, seed=5)


@functools.cache
def small_outcome():
    corpus = make_corpus(range(300, 308), size=16, n_regions=3)
    return run_calibration(
        corpus, fcm_config=CFG3, lof_config=SMALL_LOF, timer_factory=VirtualClock
    )


class TestRunCalibration:
    def test_outcome_statistics(self):
        out = small_outcome()
        assert out.n_images == 8
        assert out.n_points == len(out.points) > SMALL_LOF.n_neighbors
        assert out.n_outliers_removed == removal_count(
            out.n_points, SMALL_LOF.outliers_fraction
        )

    def test_model_records_fingerprint_and_config(self):
        out = small_outcome()
        corpus = make_corpus(range(300, 308), size=16, n_regions=3)
        assert out.model.corpus_fingerprint == fingerprint_corpus(corpus)
        assert out.model.fcm_config == CFG3
        assert out.model.training_time_seconds > 0

    def test_default_grid_has_five_levels(self):
        accs = [a for a, _ in small_outcome().model.threshold_table]
        assert accs == [0.85, 0.90, 0.95, 0.99, 0.999]

    def test_custom_grid(self):
        corpus = make_corpus(range(300, 308), size=16, n_regions=3)
        out = run_calibration(
            corpus,
            fcm_config=CFG3,
            lof_config=SMALL_LOF,
            accuracy_grid=(0.8, 0.9),
            timer_factory=VirtualClock,
        )
        assert [a for a, _ in out.model.threshold_table] == [0.8, 0.9]

    def test_deterministic_rerun(self):
        corpus = make_corpus(range(300, 308), size=16, n_regions=3)
        a = run_calibration(
            corpus, fcm_config=CFG3, lof_config=SMALL_LOF, timer_factory=VirtualClock
        )
        b = run_calibration(
            corpus, fcm_config=CFG3, lof_config=SMALL_LOF, timer_factory=VirtualClock
        )
        assert _model_document(a.model) == _model_document(b.model)

    def test_empty_corpus_rejected(self):
        with pytest.raises(InputError, match="empty"):
            run_calibration([], fcm_config=CFG3)


class TestClassifyRecord:
    def test_label_map_matches_image_shape(self):
        out = small_outcome()
        rec = make_image(950, size=16, n_regions=3)
        res = classify_record(rec, out.model, 0.90, timer=VirtualClock())
        assert (res.label_map.width, res.label_map.height) == (16, 16)
        assert res.label_map.labels.shape == (256,)
        assert set(np.unique(res.label_map.labels)) <= {0, 1, 2}
        assert res.image_id == "synth_0950"

    def test_threshold_and_table_hit(self):
        out = small_outcome()
        rec = make_image(951, size=16, n_regions=3)
        res = classify_record(rec, out.model, 0.95, timer=VirtualClock())
        assert res.threshold == threshold_for(out.model, 0.95)
        assert res.exact_table_hit is True
        off = classify_record(rec, out.model, 0.93, timer=VirtualClock())
        assert off.exact_table_hit is False
        assert off.threshold == threshold_for(out.model, 0.93)

    def test_stop_iteration_bounded_by_convergence(self):
        out = small_outcome()
        rec = make_image(952, size=16, n_regions=3)
        res = classify_record(rec, out.model, 0.85, timer=VirtualClock())
        assert 2 <= res.result.stop_iteration == len(res.result.objectives)

    def test_cluster_count_override_must_match(self):
        out = small_outcome()
        rec = make_image(953, size=16, n_regions=3)
        with pytest.raises(ConfigurationError, match="clusters"):
            classify_record(rec, out.model, 0.9, config=FcmConfig(n_clusters=4))

    def test_matching_override_allowed(self):
        out = small_outcome()
        rec = make_image(954, size=16, n_regions=3)
        res = classify_record(
            rec, out.model, 0.9, config=FcmConfig(n_clusters=3, seed=77)
        )
        assert res.result.stop_iteration >= 2


class TestEvaluationAndCost:
    @functools.cache
    def report(self):
        out = small_outcome()
        held_out = make_corpus(range(900, 904), size=16, n_regions=3)
        return run_evaluation(
            held_out, out.model, [0.85, 0.95], timer_factory=VirtualClock
        )

    def test_report_structure(self):
        rep = self.report()
        assert [s.desired_accuracy for s in rep.summaries] == [0.85, 0.95]
        assert len(rep.records) == 8  # 4 images x 2 levels

    def test_cost_arithmetic_matches_records(self):
        rep = self.report()
        price = PriceSheet(unit_price=0.424)
        costs = cost_from_report(rep, price, training_hours=0.5)
        assert [lvl for lvl, _ in costs] == [0.85, 0.95]
        for lvl, cr in costs:
            rows = [r for r in rep.records if r.desired_accuracy == lvl]
            full = sum(r.total_elapsed_seconds for r in rows) / 3600.0
            actual = sum(r.time_fraction * r.total_elapsed_seconds for r in rows) / 3600.0
            assert cr.t_train_hours == 0.5
            assert cr.t_actual_hours == pytest.approx(actual, rel=1e-12)
            assert cr.t_total_hours == pytest.approx(0.5 + actual, rel=1e-12)
            assert float(cr.dollars_saved) == pytest.approx(
                0.424 * (full - actual), rel=1e-9
            )

    def test_lower_accuracy_saves_at_least_as_much(self):
        rep = self.report()
        costs = dict(cost_from_report(rep, PriceSheet(unit_price=1.0)))
        assert float(costs[0.85].dollars_saved) >= float(costs[0.95].dollars_saved)

    def test_single_level_filter(self):
        rep = self.report()
        costs = cost_from_report(rep, PriceSheet(unit_price=1.0), desired_accuracy=0.95)
        assert len(costs) == 1 and costs[0][0] == 0.95

    def test_missing_level_rejected(self):
        rep = self.report()
        with pytest.raises(InputError, match="not present"):
            cost_from_report(rep, PriceSheet(unit_price=1.0), desired_accuracy=0.5)

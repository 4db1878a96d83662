"""Tests for TraceComparator."""

import pytest
from dirty_equals import IsFloat, IsStr

from manifold_sgd.comparator import TraceComparator
from tests.conftest import make_trace


@pytest.fixture
def comparator():
    """Create a TraceComparator instance."""
    return TraceComparator()


class TestTraceComparison:
    """Test basic trace comparison."""

    def test_identical(self, comparator, sample_trace):
        """Comparing a trace with itself shows no change."""
        comparison = comparator.compare(sample_trace, sample_trace)
        assert comparison.before_id == comparison.after_id == "sample"
        assert comparison.steps_compared == 4
        assert comparison.max_abs_loss_diff == 0.0
        assert comparison.max_rel_loss_diff == 0.0
        assert comparison.loss_change == 0.0
        assert not comparison.improved
        assert "**Identical**" in comparison.summary_text

    def test_improvement(self, comparator):
        before = make_trace([4.0, 2.0, 1.0], run_id="before")
        after = make_trace([4.0, 1.0, 0.5], run_id="after")
        comparison = comparator.compare(before, after)
        assert comparison.improved
        assert comparison.loss_change == -0.5
        assert comparison.max_abs_loss_diff == 1.0
        assert comparison.max_rel_loss_diff == 0.5
        assert "lower objective" in comparison.summary_text

    def test_regression(self, comparator):
        comparison = comparator.compare(make_trace([1.0, 0.5]), make_trace([1.0, 0.75]))
        assert not comparison.improved
        assert comparison.loss_change == 0.25
        assert "does not improve" in comparison.summary_text

    def test_only_shared_steps(self, comparator):
        """Steps missing from either trace are ignored."""
        short = make_trace([3.0, 2.0])
        long = make_trace([3.0, 2.0, 1.0, 0.5])
        comparison = comparator.compare(short, long)
        assert comparison.steps_compared == 2
        assert comparison.max_abs_loss_diff == 0.0
        assert comparison.final_loss_after == 0.5

    def test_relative_floor(self, comparator):
        """Relative differences against a zero objective use a floor."""
        comparison = comparator.compare(make_trace([0.0]), make_trace([1e-12]))
        assert comparison.max_rel_loss_diff == IsFloat(approx=1.0)

    def test_aborted_after_never_improves(self, comparator):
        before = make_trace([4.0, 3.0])
        after = make_trace([4.0, 1.0], aborted=True)
        comparison = comparator.compare(before, after)
        assert comparison.loss_change < 0
        assert not comparison.improved
        assert "aborted" in comparison.summary_text

    def test_empty_trace(self, comparator, sample_trace):
        with pytest.raises(ValueError, match="empty"):
            comparator.compare(make_trace([]), sample_trace)

    def test_summary_fields(self, comparator, sample_trace):
        dumped = comparator.compare(sample_trace, make_trace([4.0, 2.0], run_id="x")).model_dump()
        assert dumped["summary_text"] == IsStr(regex=r"(?s)# Trace Comparison.*Steps compared: 2.*")

"""Trace comparison."""

from manifold_sgd.models import Trace, TraceComparison

# Relative differences are taken against max(|loss|, this floor)
REL_FLOOR = 1e-12


class TraceComparator:
    """Compare two optimization traces over their common steps."""

    def compare(self, before: Trace, after: Trace) -> TraceComparison:
        """
        Compare two traces step by step.

        Args:
            before: Reference trace
            after: Trace to compare against the reference

        Returns:
            TraceComparison with objective differences on shared steps

        Raises:
            ValueError: If either trace is empty
        """
        if not before.rows or not after.rows:
            raise ValueError("cannot compare an empty trace")

        after_by_step = {r.step: r.loss for r in after.rows}
        pairs = [(r.loss, after_by_step[r.step]) for r in before.rows if r.step in after_by_step]

        abs_diffs = [abs(b - a) for a, b in pairs]
        rel_diffs = [abs(b - a) / max(abs(a), REL_FLOOR) for a, b in pairs]
        max_abs = max(abs_diffs, default=0.0)
        max_rel = max(rel_diffs, default=0.0)

        final_before = before.final_loss
        final_after = after.final_loss
        change = final_after - final_before
        improved = change < 0 and not after.aborted

        return TraceComparison(
            before_id=before.run_id or "unknown",
            after_id=after.run_id or "unknown",
            steps_compared=len(pairs),
            final_loss_before=final_before,
            final_loss_after=final_after,
            loss_change=change,
            max_abs_loss_diff=max_abs,
            max_rel_loss_diff=max_rel,
            improved=improved,
            summary_text=self._summary(before, after, len(pairs), change, max_abs, max_rel),
        )

    def _summary(
        self,
        before: Trace,
        after: Trace,
        steps: int,
        change: float,
        max_abs: float,
        max_rel: float,
    ) -> str:
        """Human-readable markdown summary."""
        parts = ["# Trace Comparison\n"]
        if steps == 0:
            parts.append("No steps in common.\n")
        elif max_abs == 0.0:
            parts.append("**Identical** on all shared steps.\n")
        elif change < 0:
            parts.append("**After reaches a lower objective.**\n")
        else:
            parts.append("**After does not improve the objective.**\n")

        parts.append(
            f"\n- Steps compared: {steps}"
            f"\n- Final objective: {before.final_loss:.6g} → {after.final_loss:.6g} ({change:+.3e})"
            f"\n- Max |Δ objective|: {max_abs:.3e} (relative {max_rel:.3e})"
        )
        if after.aborted:
            parts.append("\n- After run aborted (non-finite objective)")
        return "".join(parts)

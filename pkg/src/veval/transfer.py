"""Cross-dataset evaluation of a trained classifier.

A model trained with three labels can be scored against a dataset whose
label set is smaller (entailment/contradiction only).  Predictions are made
in the model's full label space; labels with no counterpart in the target
set are handled by policy: counted as errors (default) or excluded from the
denominator.  Either way the count of such predictions is reported.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from .fusion import MlpModel, predict_batch
from .metrics import EvalReport, evaluate
from .store import DataError, EmbeddingStore, PairExample

COUNT_AS_ERROR = "count_as_error"
EXCLUDE_AND_REPORT = "exclude_and_report"
NEUTRAL_HANDLING = (COUNT_AS_ERROR, EXCLUDE_AND_REPORT)


@dataclass(frozen=True)
class TransferPolicy:
    """How model labels map onto the target label set.

    label_projection must be total over the model's labels; a None value
    marks a label with no target counterpart, resolved per neutral_handling.
    """

    label_projection: Mapping[str, Optional[str]]
    neutral_handling: str = COUNT_AS_ERROR

    def __post_init__(self):
        if self.neutral_handling not in NEUTRAL_HANDLING:
            raise DataError(f"unknown neutral handling {self.neutral_handling!r}")

    @classmethod
    def for_target(
        cls,
        model_labels: Sequence[str],
        target_labels: Sequence[str],
        neutral_handling: str = COUNT_AS_ERROR,
    ) -> "TransferPolicy":
        """Identity projection onto the target set, None elsewhere."""
        target = set(target_labels)
        unknown = target - set(model_labels)
        if unknown:
            raise DataError(
                f"target labels {sorted(unknown)} outside model labels {list(model_labels)}"
            )
        return cls(
            label_projection={m: (m if m in target else None) for m in model_labels},
            neutral_handling=neutral_handling,
        )


@dataclass(frozen=True)
class TransferReport:
    report: EvalReport
    neutral_predictions: int
    excluded: int
    neutral_handling: str

    def as_dict(self) -> dict:
        out = self.report.as_dict()
        out["neutral_predictions"] = self.neutral_predictions
        out["excluded"] = self.excluded
        out["neutral_handling"] = self.neutral_handling
        return out


def evaluate_transfer(
    model: MlpModel,
    target_pairs: Sequence[PairExample],
    store: EmbeddingStore,
    policy: Optional[TransferPolicy] = None,
) -> TransferReport:
    """Score a trained model on a target dataset under a transfer policy.

    Without an explicit policy the target label set is read off the pairs and
    unmappable predictions count as errors.
    """
    if not target_pairs:
        raise DataError("empty target set")
    gold = [p.label for p in target_pairs]
    if policy is None:
        seen = sorted(set(gold), key=list(model.label_order).index)
        policy = TransferPolicy.for_target(model.label_order, seen)
    missing = set(model.label_order) - set(policy.label_projection)
    if missing:
        raise DataError(f"projection not total: missing {sorted(missing)}")
    bad_gold = set(gold) - set(model.label_order)
    if bad_gold:
        raise DataError(f"gold labels {sorted(bad_gold)} outside model labels")

    raw_pred = predict_batch(model, target_pairs, store)
    projected = [policy.label_projection[p] for p in raw_pred]
    n_unmapped = sum(1 for p in projected if p is None)

    if policy.neutral_handling == COUNT_AS_ERROR:
        # Unmappable predictions keep their raw label; gold never contains it,
        # so they land off-diagonal and score as errors.
        scored = [proj if proj is not None else raw
                  for proj, raw in zip(projected, raw_pred)]
        report = evaluate(gold, scored, model.label_order)
        excluded = 0
    else:
        kept_gold = [g for g, proj in zip(gold, projected) if proj is not None]
        kept_pred = [proj for proj in projected if proj is not None]
        if not kept_gold:
            raise DataError("all predictions excluded by the transfer policy")
        report = evaluate(kept_gold, kept_pred, model.label_order)
        excluded = n_unmapped
    return TransferReport(
        report=report,
        neutral_predictions=n_unmapped,
        excluded=excluded,
        neutral_handling=policy.neutral_handling,
    )

"""Active-learning round orchestration.

Each round trains a FRESH model from the base configuration on the current
dataset snapshot (never warm-starting from the previous round), predicts
the unlabeled pool, and emits disjoint selection batches for human review.
The round number only advances once every emitted batch is resolved, and
resolved annotations append with origin pseudo_label_verified.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path

from .datastore import (
    Dataset,
    LabeledInstance,
    Origin,
    SatdClass,
    ScientificDebtIndicator,
    append_to_jsonl,
    load_jsonl,
)
from .model import ModelParams, Prediction, predict, save_model, train
from .normalize import NormalizedInstance

HIGH_CONFIDENCE_SCIENTIFIC = "high_confidence_scientific"
LOW_CONFIDENCE_BORDERLINE = "low_confidence_borderline"
STRATIFIED_MISC = "stratified_misc"

_STRATEGY_ORDER = (HIGH_CONFIDENCE_SCIENTIFIC, LOW_CONFIDENCE_BORDERLINE, STRATIFIED_MISC)


@dataclass(frozen=True)
class SelectionStrategy:
    name: str
    tau_hi: float = 0.9
    tau_lo: float = 0.6
    margin_max: float = 0.1
    quotas: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in _STRATEGY_ORDER:
            raise ValueError(f"unknown strategy {self.name!r}")
        if not 0 < self.tau_lo <= self.tau_hi < 1:
            raise ValueError(
                f"need 0 < tau_lo <= tau_hi < 1, got {self.tau_lo}, {self.tau_hi}"
            )
        if not 0 < self.margin_max < 1:
            raise ValueError(f"margin_max must be in (0,1), got {self.margin_max}")
        if any(q < 0 for q in self.quotas.values()):
            raise ValueError("quotas must be non-negative")

    def as_dict(self) -> dict:
        out = {"name": self.name}
        if self.name == HIGH_CONFIDENCE_SCIENTIFIC:
            out["tau_hi"] = self.tau_hi
        elif self.name == LOW_CONFIDENCE_BORDERLINE:
            out["tau_lo"] = self.tau_lo
            out["margin_max"] = self.margin_max
        else:
            out["quotas"] = {c.value: q for c, q in self.quotas.items()}
        return out


@dataclass(frozen=True)
class SelectionBatch:
    batch_id: str
    round: int
    strategy: SelectionStrategy
    items: list[tuple[str, Prediction]]
    budget: int


def _default_quotas(budget: int) -> dict[SatdClass, int]:
    classes = list(SatdClass)
    base, extra = divmod(budget, len(classes))
    return {c: base + (1 if i < extra else 0) for i, c in enumerate(classes)}


def select_batch(
    predictions: list[Prediction],
    strategy: SelectionStrategy,
    budget: int,
    round: int = 0,
    batch_id: str | None = None,
    exclude_ids: set[str] = frozenset(),
) -> SelectionBatch:
    """Pick up to ``budget`` predictions matching the strategy's predicate.

    Ordering is deterministic: confidence then instance id. An empty batch
    is a valid outcome, not an error.
    """
    if budget < 1:
        raise ValueError(f"budget must be at least 1, got {budget}")
    pool = [p for p in predictions if p.instance_id not in exclude_ids]
    if strategy.name == HIGH_CONFIDENCE_SCIENTIFIC:
        chosen = [
            p
            for p in pool
            if p.predicted is SatdClass.SCIENTIFIC_DEBT and p.confidence >= strategy.tau_hi
        ]
        chosen.sort(key=lambda p: (-p.confidence, p.instance_id))
        chosen = chosen[:budget]
    elif strategy.name == LOW_CONFIDENCE_BORDERLINE:
        chosen = [
            p
            for p in pool
            if p.confidence <= strategy.tau_lo or p.margin <= strategy.margin_max
        ]
        chosen.sort(key=lambda p: (p.confidence, p.instance_id))
        chosen = chosen[:budget]
    else:
        quotas = dict(strategy.quotas) if strategy.quotas else _default_quotas(budget)
        queues: dict[SatdClass, list[Prediction]] = {c: [] for c in SatdClass}
        for p in pool:
            queues[p.predicted].append(p)
        for queue in queues.values():
            queue.sort(key=lambda p: (-p.confidence, p.instance_id))
        chosen = []
        taken = {c: 0 for c in SatdClass}
        progressed = True
        while len(chosen) < budget and progressed:
            progressed = False
            for cls in SatdClass:
                if len(chosen) >= budget:
                    break
                if taken[cls] >= quotas.get(cls, 0) or not queues[cls]:
                    continue
                chosen.append(queues[cls].pop(0))
                taken[cls] += 1
                progressed = True
    batch_id = batch_id or f"round{round}-{strategy.name}"
    return SelectionBatch(
        batch_id=batch_id,
        round=round,
        strategy=strategy,
        items=[(p.instance_id, p) for p in chosen],
        budget=budget,
    )


def record_annotations(
    batch: SelectionBatch,
    labels: list,
    instances_by_id: dict[str, NormalizedInstance],
) -> tuple[list[LabeledInstance], list[str]]:
    """Turn human labels for one batch into a dataset delta.

    ``labels`` entries are (instance_id, label, indicator, annotator) tuples
    or dicts with those keys; enums may arrive as value strings. Items the
    submission does not mention are returned as skipped, eligible for
    reselection in a later round.
    """
    batch_ids = {iid for iid, _ in batch.items}
    delta: list[LabeledInstance] = []
    seen: set[str] = set()
    for entry in labels:
        if isinstance(entry, dict):
            iid = entry["instance_id"]
            label = entry["label"]
            indicator = entry.get("indicator")
            annotator = entry.get("annotator", "")
        else:
            iid, label, indicator, annotator = entry
        if iid not in batch_ids:
            raise ValueError(f"instance {iid} is not part of batch {batch.batch_id}")
        if iid in seen:
            raise ValueError(f"duplicate label for instance {iid} in one submission")
        seen.add(iid)
        if isinstance(label, str):
            label = SatdClass(label)
        if isinstance(indicator, str):
            indicator = ScientificDebtIndicator(indicator)
        inst = instances_by_id.get(iid)
        if inst is None:
            raise ValueError(f"instance {iid} is missing from the corpus")
        delta.append(
            LabeledInstance.from_normalized(
                inst,
                label=label,
                annotator=annotator,
                round=batch.round,
                origin=Origin.PSEUDO_LABEL_VERIFIED,
                indicator=indicator,
            )
        )
    skipped = sorted(batch_ids - seen)
    return delta, skipped


@dataclass
class LoopState:
    round: int = 0
    base_alpha: float = 1.0
    base_lam: float = 0.5
    dataset_ref: str = ""
    pending_batches: list[str] = field(default_factory=list)
    open_counts: dict = field(default_factory=dict)
    history: list[dict] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "round": self.round,
            "base_alpha": self.base_alpha,
            "base_lam": self.base_lam,
            "dataset_ref": self.dataset_ref,
            "pending_batches": list(self.pending_batches),
            "open_counts": {k: dict(v) for k, v in self.open_counts.items()},
            "history": [dict(h) for h in self.history],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LoopState":
        return cls(
            round=int(data.get("round", 0)),
            base_alpha=float(data.get("base_alpha", 1.0)),
            base_lam=float(data.get("base_lam", 0.5)),
            dataset_ref=data.get("dataset_ref", ""),
            pending_batches=list(data.get("pending_batches", [])),
            open_counts={k: dict(v) for k, v in data.get("open_counts", {}).items()},
            history=[dict(h) for h in data.get("history", [])],
        )


def build_strategies(
    tau_hi: float = 0.9, tau_lo: float = 0.6, margin_max: float = 0.1, budgets: dict | None = None
) -> list[tuple[SelectionStrategy, int]]:
    budgets = budgets or {}
    return [
        (
            SelectionStrategy(HIGH_CONFIDENCE_SCIENTIFIC, tau_hi=tau_hi, tau_lo=tau_lo),
            int(budgets.get("high_confidence", 50)),
        ),
        (
            SelectionStrategy(
                LOW_CONFIDENCE_BORDERLINE, tau_hi=tau_hi, tau_lo=tau_lo, margin_max=margin_max
            ),
            int(budgets.get("borderline", 50)),
        ),
        (
            SelectionStrategy(STRATIFIED_MISC, tau_hi=tau_hi, tau_lo=tau_lo),
            int(budgets.get("stratified", 100)),
        ),
    ]


def run_round(
    state: LoopState,
    dataset: Dataset,
    unlabeled: list[NormalizedInstance],
    strategies: list[tuple[SelectionStrategy, int]] | None = None,
) -> tuple[LoopState, list[SelectionBatch], ModelParams]:
    """Open the next round: fresh train, predict the pool, emit batches.

    Batches within the round are pairwise disjoint (selection order:
    high-confidence, borderline, stratified). The returned state has the
    batches pending; the round number advances in resolve_batch once the
    last one lands.
    """
    if state.pending_batches:
        raise RuntimeError(
            f"round {state.round + 1} still has unresolved batches: {state.pending_batches}"
        )
    params = train(dataset, alpha=state.base_alpha, lam=state.base_lam)
    labeled_ids = {i.instance_id for i in dataset.instances}
    pool = [u for u in unlabeled if u.instance_id not in labeled_ids]
    predictions = [predict(params, u) for u in pool]
    next_round = state.round + 1
    batches: list[SelectionBatch] = []
    selected: set[str] = set()
    for strategy, budget in strategies or build_strategies():
        batch = select_batch(
            predictions, strategy, budget, round=next_round, exclude_ids=selected
        )
        selected.update(iid for iid, _ in batch.items)
        batches.append(batch)
    new_state = replace(
        state, pending_batches=[b.batch_id for b in batches if b.items]
    )
    if not new_state.pending_batches:
        new_state = _close_round(new_state, next_round, dataset_size=len(dataset))
    return new_state, batches, params


def _utcnow() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _close_round(state: LoopState, round: int, dataset_size: int) -> LoopState:
    entry = {
        "round": round,
        "dataset_size": dataset_size,
        "batches": {k: dict(v) for k, v in state.open_counts.items()},
        "closed_at": _utcnow(),
    }
    return replace(
        state, round=round, pending_batches=[], open_counts={}, history=state.history + [entry]
    )


def resolve_batch(
    state: LoopState,
    batch: SelectionBatch,
    labeled_count: int,
    skipped_count: int,
    dataset_size: int,
) -> LoopState:
    """Mark one pending batch as annotated; close the round on the last one."""
    if batch.batch_id not in state.pending_batches:
        raise ValueError(f"batch {batch.batch_id} is not pending")
    pending = [b for b in state.pending_batches if b != batch.batch_id]
    counts = dict(state.open_counts)
    counts[batch.batch_id] = {
        "selected": len(batch.items),
        "labeled": labeled_count,
        "skipped": skipped_count,
    }
    state = replace(state, pending_batches=pending, open_counts=counts)
    if not pending:
        state = _close_round(state, batch.round, dataset_size)
    return state


class Workspace:
    """Directory-backed loop runtime shared by the CLI and the HTTP API.

    Layout: corpus JSONL, dataset JSONL + manifest, loop/state.json,
    loop/rounds.jsonl, loop/batches/<id>.json, models/round<r>.model.
    """

    def __init__(self, root: str | Path, base_alpha: float = 1.0, base_lam: float = 0.5):
        self.root = Path(root)
        self.corpus_path = self.root / "corpus" / "normalized.jsonl"
        self.dataset_path = self.root / "dataset" / "labeled.jsonl"
        self.loop_dir = self.root / "loop"
        self.batches_dir = self.loop_dir / "batches"
        self.models_dir = self.root / "models"
        self.survey_path = self.root / "survey" / "responses.jsonl"
        self.calibration_path = self.root / "calibration" / "pairs.json"
        self.predictions_path = self.root / "reports" / "predictions.jsonl"
        self._base_alpha = base_alpha
        self._base_lam = base_lam

    # -- state ---------------------------------------------------------

    @property
    def state_path(self) -> Path:
        return self.loop_dir / "state.json"

    def load_state(self) -> LoopState:
        if self.state_path.exists():
            return LoopState.from_dict(json.loads(self.state_path.read_text(encoding="utf-8")))
        return LoopState(base_alpha=self._base_alpha, base_lam=self._base_lam)

    def save_state(self, state: LoopState) -> None:
        self.loop_dir.mkdir(parents=True, exist_ok=True)
        tmp = self.state_path.with_suffix(".tmp")
        tmp.write_text(json.dumps(state.as_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        tmp.replace(self.state_path)

    # -- corpus & dataset ----------------------------------------------

    def load_corpus(self) -> list[NormalizedInstance]:
        instances = []
        with open(self.corpus_path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    instances.append(NormalizedInstance.from_dict(json.loads(line)))
        return instances

    def load_dataset(self) -> Dataset:
        return load_jsonl(self.dataset_path)

    # -- rounds ----------------------------------------------------------

    def start_round(self, strategies: list[tuple[SelectionStrategy, int]] | None = None) -> list[SelectionBatch]:
        state = self.load_state()
        dataset = self.load_dataset()
        corpus = self.load_corpus()
        state, batches, params = run_round(state, dataset, corpus, strategies)
        round_no = state.round + 1 if state.pending_batches else state.round
        model_hash = save_model(params, self.models_dir / f"round{round_no}.model")
        self.batches_dir.mkdir(parents=True, exist_ok=True)
        by_id = {inst.instance_id: inst for inst in corpus}
        for batch in batches:
            self._write_batch_file(batch, by_id, model_hash)
        if not state.pending_batches:
            self._append_round_log(state.history[-1], model_hash)
        self.save_state(state)
        return batches

    def _write_batch_file(self, batch: SelectionBatch, by_id: dict, model_hash: str) -> None:
        items = []
        for iid, pred in batch.items:
            inst = by_id[iid]
            items.append(
                {
                    "instance_id": iid,
                    "kind": inst.kind.value,
                    "text": inst.text,
                    "provenance": inst.provenance,
                    "scores": {c.value: s for c, s in pred.scores.items()},
                    "predicted": pred.predicted.value,
                    "confidence": pred.confidence,
                    "margin": pred.margin,
                }
            )
        payload = {
            "batch_id": batch.batch_id,
            "round": batch.round,
            "strategy": batch.strategy.as_dict(),
            "budget": batch.budget,
            "model_hash": model_hash,
            "status": "pending" if batch.items else "empty",
            "items": items,
        }
        path = self.batches_dir / f"{batch.batch_id}.json"
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    def read_batch_file(self, batch_id: str) -> dict:
        path = self.batches_dir / f"{batch_id}.json"
        if not path.exists():
            raise FileNotFoundError(f"no batch file for {batch_id}")
        return json.loads(path.read_text(encoding="utf-8"))

    def _batch_from_file(self, data: dict) -> SelectionBatch:
        strategy_info = dict(data["strategy"])
        name = strategy_info.pop("name")
        kwargs = {}
        if "tau_hi" in strategy_info:
            kwargs["tau_hi"] = strategy_info["tau_hi"]
        if "tau_lo" in strategy_info:
            kwargs["tau_lo"] = strategy_info["tau_lo"]
        if "margin_max" in strategy_info:
            kwargs["margin_max"] = strategy_info["margin_max"]
        if "quotas" in strategy_info:
            kwargs["quotas"] = {SatdClass(c): q for c, q in strategy_info["quotas"].items()}
        strategy = SelectionStrategy(name, **kwargs)
        items = []
        for item in data["items"]:
            scores = {SatdClass(c): s for c, s in item["scores"].items()}
            items.append(
                (
                    item["instance_id"],
                    Prediction(
                        instance_id=item["instance_id"],
                        scores=scores,
                        predicted=SatdClass(item["predicted"]),
                        confidence=item["confidence"],
                        margin=item["margin"],
                    ),
                )
            )
        return SelectionBatch(
            batch_id=data["batch_id"],
            round=data["round"],
            strategy=strategy,
            items=items,
            budget=data["budget"],
        )

    def ingest_labels(self, batch_id: str, labels: list) -> list[LabeledInstance]:
        """Resolve one pending batch with human labels; append the delta."""
        data = self.read_batch_file(batch_id)
        if data["status"] == "resolved":
            raise ValueError(f"batch {batch_id} is already resolved")
        batch = self._batch_from_file(data)
        corpus = {inst.instance_id: inst for inst in self.load_corpus()}
        already = {i.instance_id for i in self.load_dataset().instances}
        delta, skipped = record_annotations(batch, labels, corpus)
        conflicts = [i.instance_id for i in delta if i.instance_id in already]
        if conflicts:
            raise AlreadyLabeledError(conflicts)
        dataset = self.load_dataset()
        ref = append_to_jsonl(self.dataset_path, delta, dataset.lineage)
        data["status"] = "resolved"
        data["labeled"] = [i.instance_id for i in delta]
        data["skipped"] = skipped
        path = self.batches_dir / f"{batch_id}.json"
        path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        state = self.load_state()
        new_size = len(dataset) + len(delta)
        state = resolve_batch(state, batch, len(delta), len(skipped), new_size)
        state.dataset_ref = ref
        if not state.pending_batches and state.history:
            self._append_round_log(state.history[-1], data.get("model_hash", ""))
        self.save_state(state)
        return delta

    def _append_round_log(self, entry: dict, model_hash: str) -> None:
        self.loop_dir.mkdir(parents=True, exist_ok=True)
        line = dict(entry)
        line["model_hash"] = model_hash
        with open(self.loop_dir / "rounds.jsonl", "a", encoding="utf-8") as fh:
            fh.write(json.dumps(line, sort_keys=True) + "\n")

    def pending_batch_files(self) -> list[dict]:
        state = self.load_state()
        return [self.read_batch_file(bid) for bid in state.pending_batches]


class AlreadyLabeledError(ValueError):
    def __init__(self, ids: list[str]):
        self.ids = ids
        super().__init__(f"instances already labeled: {', '.join(ids)}")

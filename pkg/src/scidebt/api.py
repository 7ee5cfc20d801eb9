"""HTTP service for annotation rounds, stats, calibration, and the survey.

All bodies are JSON. Error contract: 400 for schema violations (including
labels for instances outside the batch), 409 for labeling something already
labeled, 404 for unknown ids. Submissions carry a client-generated
submission_id; replaying one returns the recorded response instead of
double-writing. Writes serialize through one lock; reads are snapshot-based.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path

from fastapi import Body, FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .agreement import SurveyResponse, calibration_report, survey_aggregate
from .datastore import SatdClass, ScientificDebtIndicator, distribution
from .ingest import ArtifactKind
from .loop import AlreadyLabeledError, Workspace
from .reporting import PrevalenceReport, load_predictions


def _error(status: int, detail) -> JSONResponse:
    return JSONResponse(status_code=status, content={"detail": detail})


def create_app(workspace: Workspace) -> FastAPI:
    app = FastAPI(title="scidebt annotation service")
    write_lock = threading.Lock()
    submissions_path = workspace.loop_dir / "submissions.jsonl"

    @app.exception_handler(RequestValidationError)
    async def _validation_to_400(request: Request, exc: RequestValidationError):
        return _error(400, exc.errors())

    def _load_submission(submission_id: str) -> dict | None:
        if not submission_id or not submissions_path.exists():
            return None
        with open(submissions_path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                rec = json.loads(line)
                if rec["submission_id"] == submission_id:
                    return rec["response"]
        return None

    def _store_submission(submission_id: str, response: dict) -> None:
        if not submission_id:
            return
        submissions_path.parent.mkdir(parents=True, exist_ok=True)
        with open(submissions_path, "a", encoding="utf-8") as fh:
            fh.write(
                json.dumps({"submission_id": submission_id, "response": response}) + "\n"
            )

    def _dataset_size() -> int:
        try:
            return len(workspace.load_dataset())
        except FileNotFoundError:
            return 0

    @app.get("/rounds/current")
    def rounds_current():
        state = workspace.load_state()
        return {
            "round": state.round,
            "pending_batches": list(state.pending_batches),
            "dataset_size": _dataset_size(),
            "dataset_ref": state.dataset_ref,
            "rounds_completed": len(state.history),
        }

    @app.get("/batches/next")
    def batches_next(annotator: str = Query(...)):
        if not annotator.strip():
            return _error(400, "annotator must be nonempty")
        state = workspace.load_state()
        for batch_id in state.pending_batches:
            data = workspace.read_batch_file(batch_id)
            if data["status"] == "pending":
                return {"round": data["round"], "batch": data}
        return {"round": state.round, "batch": None}

    @app.post("/labels")
    def post_labels(payload: dict = Body(...)):
        for required in ("batch_id", "annotator", "labels"):
            if required not in payload:
                return _error(400, f"missing field {required!r}")
        if not isinstance(payload["labels"], list):
            return _error(400, "labels must be a list")
        submission_id = str(payload.get("submission_id", ""))
        annotator = str(payload["annotator"])
        if not annotator.strip():
            return _error(400, "annotator must be nonempty")
        labels = []
        for entry in payload["labels"]:
            if not isinstance(entry, dict) or "instance_id" not in entry or "label" not in entry:
                return _error(400, "each label needs instance_id and label")
            try:
                label = SatdClass(entry["label"])
            except ValueError:
                return _error(400, f"unknown label {entry['label']!r}")
            indicator = entry.get("indicator")
            if indicator is not None:
                try:
                    indicator = ScientificDebtIndicator(indicator)
                except ValueError:
                    return _error(400, f"unknown indicator {entry['indicator']!r}")
            labels.append(
                {
                    "instance_id": entry["instance_id"],
                    "label": label,
                    "indicator": indicator,
                    "annotator": entry.get("annotator", annotator),
                }
            )
        with write_lock:
            replay = _load_submission(submission_id)
            if replay is not None:
                return replay
            try:
                delta = workspace.ingest_labels(payload["batch_id"], labels)
            except FileNotFoundError:
                return _error(404, f"unknown batch {payload['batch_id']!r}")
            except AlreadyLabeledError as exc:
                return _error(409, {"already_labeled": exc.ids})
            except ValueError as exc:
                message = str(exc)
                if "already resolved" in message:
                    return _error(409, message)
                return _error(400, message)
            state = workspace.load_state()
            response = {
                "batch_id": payload["batch_id"],
                "accepted": len(delta),
                "accepted_ids": [i.instance_id for i in delta],
                "round": state.round,
                "dataset_size": _dataset_size(),
            }
            _store_submission(submission_id, response)
        return response

    @app.get("/stats/distribution")
    def stats_distribution():
        try:
            dataset = workspace.load_dataset()
        except FileNotFoundError:
            return {"rows": [], "total": 0}
        table = distribution(dataset)
        return {
            "rows": [
                {
                    "class": cls.value,
                    "by_kind": {k.value: table.cell(cls, k) for k in ArtifactKind},
                    "total": table.row_total(cls),
                }
                for cls in SatdClass
            ],
            "column_totals": {k.value: table.column_total(k) for k in ArtifactKind},
            "total": table.grand_total(),
        }

    @app.get("/stats/prevalence")
    def stats_prevalence():
        report = PrevalenceReport()
        if workspace.predictions_path.exists():
            corpus = {i.instance_id: i for i in workspace.load_corpus()}
            for rec in load_predictions(workspace.predictions_path):
                inst = corpus.get(rec["instance_id"])
                if inst is not None:
                    report.add(inst.kind, SatdClass(rec["predicted"]))
        return report.as_dict()

    @app.post("/survey")
    def post_survey(payload: dict = Body(...)):
        try:
            response = SurveyResponse(
                snippet_id=str(payload["snippet_id"]),
                judgment=payload["judgment"],
                usefulness=int(payload["usefulness"]),
                respondent=str(payload["respondent"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            return _error(400, f"invalid survey response: {exc}")
        with write_lock:
            workspace.survey_path.parent.mkdir(parents=True, exist_ok=True)
            with open(workspace.survey_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(response.as_dict(), sort_keys=True) + "\n")
        return {"stored": True}

    @app.get("/survey/aggregate")
    def get_survey_aggregate():
        responses = []
        if workspace.survey_path.exists():
            with open(workspace.survey_path, encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        responses.append(SurveyResponse.from_dict(json.loads(line)))
        if not responses:
            return {"count": 0}
        return survey_aggregate(responses)

    @app.get("/calibration")
    def get_calibration():
        if not workspace.calibration_path.exists():
            return {"rows": [], "combined": None}
        pairs_raw = json.loads(workspace.calibration_path.read_text(encoding="utf-8"))
        pairs = {name: (vecs[0], vecs[1]) for name, vecs in pairs_raw.items()}
        report = calibration_report(pairs)
        def row(r):
            return {
                "source": r.source,
                "n": r.n,
                "agreements": r.agreements,
                "agreement_display": r.agreement_display,
                "kappa": r.kappa,
                "degenerate": r.degenerate,
            }
        return {"rows": [row(r) for r in report.rows], "combined": row(report.combined)}

    return app


def create_app_from_path(root: str | Path) -> FastAPI:
    return create_app(Workspace(root))

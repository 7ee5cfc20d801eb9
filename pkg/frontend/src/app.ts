import { ApiClient, ApiError } from "./api.js";
import { calibrationView } from "./calibration.js";
import { bindAnnotationKeys } from "./keyboard.js";
import { LabelQueue, needsIndicator } from "./queue.js";
import { SurveyForm, type SurveySnippet } from "./survey.js";
import {
  SATD_CLASSES,
  SCIENTIFIC_INDICATORS,
  JUDGMENTS,
  type Judgment,
  type SatdClass,
  type ScientificIndicator,
} from "./types.js";

const api = new ApiClient(
  new URLSearchParams(location.search).get("service") ?? "http://127.0.0.1:8000",
);

let queue: LabelQueue | null = null;
let pendingLabel: SatdClass | null = null;
let survey: SurveyForm | null = null;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function byId<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function notice(message: string, isError = false): void {
  const box = byId<HTMLDivElement>("notice");
  box.textContent = message;
  box.className = isError ? "notice error" : "notice";
}

function describeError(err: unknown): string {
  if (err instanceof ApiError) return err.message;
  return err instanceof Error ? err.message : String(err);
}

// ---- labeling queue ----

function renderQueue(): void {
  const host = byId<HTMLDivElement>("queue");
  host.textContent = "";
  if (!queue) {
    host.append(el("p", "hint", "Enter your annotator name and load a batch."));
    return;
  }
  const { decided, total } = queue.progress();
  host.append(el("p", "progress", `${decided} of ${total} decided`));

  const entry = queue.current();
  if (!entry) {
    host.append(el("p", "hint", "Batch decided. Review the list below, then submit."));
    renderDecidedList(host);
    return;
  }

  const card = el("div", "card");
  const head = el("div", "card-head");
  head.append(el("span", "badge kind", entry.item.kind));
  head.append(
    el(
      "span",
      "badge model",
      `${entry.item.predicted} (conf ${entry.item.confidence.toFixed(2)}, margin ${entry.item.margin.toFixed(2)})`,
    ),
  );
  card.append(head);

  // the snippet is shown exactly as normalized; no client-side rewriting
  const text = el("pre", "snippet");
  text.textContent = entry.item.text;
  card.append(text);

  const prov = entry.item.provenance;
  card.append(
    el("p", "provenance", [prov.project, prov.locator].filter(Boolean).join(" ")),
  );

  const buttons = el("div", "classes");
  SATD_CLASSES.forEach((cls, i) => {
    const button = el("button", "class-btn", `${i + 1} ${cls}`);
    button.addEventListener("click", () => chooseLabel(cls));
    buttons.append(button);
  });
  const skip = el("button", "skip-btn", "s skip");
  skip.addEventListener("click", () => {
    queue?.skip();
    renderQueue();
  });
  buttons.append(skip);
  card.append(buttons);

  if (pendingLabel !== null && needsIndicator(pendingLabel)) {
    card.append(renderIndicatorPicker());
  }
  host.append(card);
  renderDecidedList(host);
}

function renderIndicatorPicker(): HTMLDivElement {
  const picker = el("div", "indicators");
  picker.append(el("p", "hint", "scientific_debt indicator:"));
  for (const indicator of SCIENTIFIC_INDICATORS) {
    const button = el("button", "indicator-btn", indicator);
    button.addEventListener("click", () => {
      stage("scientific_debt", indicator);
    });
    picker.append(button);
  }
  const plain = el("button", "indicator-btn", "no indicator");
  plain.addEventListener("click", () => stage("scientific_debt"));
  picker.append(plain);
  return picker;
}

function renderDecidedList(host: HTMLElement): void {
  if (!queue) return;
  const list = el("ul", "decided");
  for (const e of queue.all()) {
    if (e.status === "pending") continue;
    const row = el("li", `decided-${e.status}`);
    const mark =
      e.status === "staged" || e.status === "submitted" || e.status === "inflight"
        ? (e.label ?? "") + (e.indicator ? ` / ${e.indicator}` : "")
        : e.status;
    row.textContent = `${e.item.instance_id}: ${mark}`;
    if (e.status === "staged" || e.status === "skipped") {
      const back = el("button", "reopen-btn", "redo");
      back.addEventListener("click", () => {
        queue?.reopen(e.item.instance_id);
        renderQueue();
      });
      row.append(" ", back);
    }
    list.append(row);
  }
  host.append(list);
  const submit = el("button", "submit-btn", "Submit batch");
  submit.disabled = !queue.isDecided() || queue.stagedEntries().length === 0;
  submit.addEventListener("click", () => void submitBatch());
  host.append(submit);
}

function chooseLabel(label: SatdClass): void {
  if (!queue || !queue.current()) return;
  if (needsIndicator(label)) {
    pendingLabel = label; // indicator picker opens for the five kinds
    renderQueue();
    return;
  }
  stage(label);
}

function stage(label: SatdClass, indicator?: ScientificIndicator): void {
  if (!queue) return;
  pendingLabel = null;
  queue.stage(label, indicator);
  renderQueue();
}

async function loadBatch(): Promise<void> {
  const annotator = byId<HTMLInputElement>("annotator").value.trim();
  if (!annotator) {
    notice("annotator name required", true);
    return;
  }
  try {
    const response = await api.nextBatch(annotator);
    if (!response.batch) {
      notice(`round ${response.round}: no pending batch`);
      queue = null;
    } else {
      queue = new LabelQueue(response.batch, annotator);
      notice(
        `loaded ${response.batch.batch_id} (${response.batch.items.length} items, ` +
          `strategy ${response.batch.strategy.name})`,
      );
    }
  } catch (err) {
    notice(describeError(err), true);
  }
  pendingLabel = null;
  renderQueue();
}

async function submitBatch(): Promise<void> {
  if (!queue) return;
  const submission = queue.beginSubmit();
  renderQueue();
  try {
    const result = await api.submitLabels(submission);
    queue.completeSubmit();
    notice(`accepted ${result.accepted} labels; dataset now ${result.dataset_size}`);
  } catch (err) {
    queue.failSubmit();
    if (err instanceof ApiError && err.status === 409) {
      const detail = err.detail as { already_labeled?: string[] } | string;
      if (typeof detail === "object" && detail.already_labeled) {
        const n = queue.markConflicts(detail.already_labeled);
        notice(`${n} items were labeled by someone else and were removed`, true);
      } else {
        notice(`batch already resolved`, true);
        queue = null;
      }
    } else {
      notice(describeError(err), true);
    }
  }
  renderQueue();
}

// ---- survey ----

function startSurvey(snippets: SurveySnippet[]): void {
  const respondent = byId<HTMLInputElement>("annotator").value.trim();
  if (!respondent) {
    notice("annotator name required", true);
    return;
  }
  survey = new SurveyForm(respondent, snippets);
  renderSurvey();
}

function renderSurvey(): void {
  const host = byId<HTMLDivElement>("survey");
  host.textContent = "";
  if (!survey) return;
  for (const snippet of survey.snippets) {
    const block = el("div", "survey-item");
    const text = el("pre", "snippet");
    text.textContent = snippet.text;
    block.append(text);
    if (snippet.predicted) {
      block.append(el("p", "hint", `model says: ${snippet.predicted}`));
    }
    const judgments = el("div", "judgments");
    for (const judgment of JUDGMENTS) {
      const pick = el("button", "judgment-btn", judgment);
      pick.addEventListener("click", () => {
        survey?.setJudgment(snippet.snippet_id, judgment as Judgment);
        renderSurvey();
      });
      judgments.append(pick);
    }
    block.append(judgments);
    const slider = el("input") as HTMLInputElement;
    slider.type = "range";
    slider.min = "1";
    slider.max = "5";
    slider.step = "1";
    slider.addEventListener("change", () => {
      survey?.setUsefulness(snippet.snippet_id, Number(slider.value));
      renderSurvey();
    });
    block.append(slider);
    block.append(
      el("p", "hint", survey.isAnswered(snippet.snippet_id) ? "answered" : "open"),
    );
    host.append(block);
  }
  const send = el("button", "submit-btn", "Send survey");
  send.disabled = !survey.isComplete();
  send.addEventListener("click", () => void sendSurvey());
  host.append(send);
}

async function sendSurvey(): Promise<void> {
  if (!survey) return;
  try {
    for (const payload of survey.payloads()) {
      await api.postSurvey(payload);
    }
    // aggregate appears only after a complete pass, numbers straight
    // from the service
    const aggregate = await api.surveyAggregate();
    const parts = [`${aggregate.count} responses`];
    if (aggregate.agree_pct !== undefined) parts.push(`${aggregate.agree_pct.toFixed(1)}% agree`);
    if (aggregate.unsure_pct !== undefined) parts.push(`${aggregate.unsure_pct.toFixed(1)}% unsure`);
    if (aggregate.mean_usefulness !== undefined) {
      parts.push(`mean usefulness ${aggregate.mean_usefulness.toFixed(2)}`);
    }
    notice(parts.join(", "));
  } catch (err) {
    notice(describeError(err), true);
  }
}

// ---- calibration ----

async function showCalibration(): Promise<void> {
  const host = byId<HTMLDivElement>("calibration");
  host.textContent = "";
  try {
    const view = calibrationView(await api.calibration());
    if (view.kind === "empty") {
      host.append(el("p", "hint", "No calibration sets recorded."));
      return;
    }
    if (view.kind === "progress") {
      for (const row of view.rows) {
        host.append(el("p", "progress", `${row.source}: ${row.finished}/${row.expected}`));
      }
      return;
    }
    const table = el("table", "calibration");
    const head = el("tr");
    for (const title of ["source", "agreement", "kappa", ""]) {
      head.append(el("th", undefined, title));
    }
    table.append(head);
    for (const row of [...view.rows, view.combined]) {
      const tr = el("tr");
      tr.append(el("td", undefined, row.source));
      tr.append(el("td", undefined, row.display));
      tr.append(el("td", undefined, row.kappa));
      tr.append(el("td", "hint", row.note));
      table.append(tr);
    }
    host.append(table);
  } catch (err) {
    notice(describeError(err), true);
  }
}

// ---- wiring ----

function main(): void {
  byId<HTMLButtonElement>("load-batch").addEventListener("click", () => void loadBatch());
  byId<HTMLButtonElement>("show-calibration").addEventListener(
    "click",
    () => void showCalibration(),
  );
  byId<HTMLButtonElement>("start-survey").addEventListener("click", () => {
    // a practitioner pass rates four scientific-debt snippets
    void (async () => {
      try {
        const round = await api.currentRound();
        const response = await api.nextBatch("survey-preview");
        const items = (response.batch?.items ?? [])
          .filter((i) => i.predicted === "scientific_debt")
          .slice(0, 4);
        const snippets: SurveySnippet[] = items.map((i) => ({
          snippet_id: i.instance_id,
          text: i.text,
          predicted: i.predicted,
        }));
        if (snippets.length === 0) {
          notice(`round ${round.round}: no scientific_debt snippets to rate`, true);
          return;
        }
        startSurvey(snippets);
      } catch (err) {
        notice(describeError(err), true);
      }
    })();
  });

  document.addEventListener(
    "keydown",
    bindAnnotationKeys((action) => {
      if (!queue || !queue.current()) return;
      if (action.kind === "skip") {
        queue.skip();
        pendingLabel = null;
        renderQueue();
      } else {
        chooseLabel(action.label);
      }
    }),
  );

  renderQueue();
}

document.addEventListener("DOMContentLoaded", main);

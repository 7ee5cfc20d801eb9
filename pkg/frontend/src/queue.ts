import type {
  BatchItem,
  BatchPayload,
  LabelEntry,
  LabelSubmission,
  SatdClass,
  ScientificIndicator,
} from "./types.js";

/**
 * Local state for one annotation batch.
 *
 * Choices are staged item by item, then the whole batch goes to the server
 * in a single POST; the service resolves a batch exactly once and treats
 * anything unlabeled as skipped. Optimistic flow: beginSubmit() marks the
 * staged entries inflight, completeSubmit() pins them, failSubmit() rolls
 * them back so the annotator can edit and retry.
 */

export type EntryStatus =
  | "pending"
  | "staged"
  | "inflight"
  | "submitted"
  | "skipped"
  | "conflict";

export interface QueueEntry {
  item: BatchItem;
  status: EntryStatus;
  label?: SatdClass;
  indicator?: ScientificIndicator;
}

export function needsIndicator(label: SatdClass): boolean {
  return label === "scientific_debt";
}

// Shorter snippets first; annotators reported they are quicker to judge.
// Ties break on instance id so the order is stable across reloads.
export function displayOrder(items: BatchItem[]): BatchItem[] {
  return [...items].sort((a, b) => {
    if (a.text.length !== b.text.length) return a.text.length - b.text.length;
    return a.instance_id < b.instance_id ? -1 : a.instance_id > b.instance_id ? 1 : 0;
  });
}

export function newSubmissionId(): string {
  const noise = Math.random().toString(36).slice(2, 10);
  return `sub-${Date.now().toString(36)}-${noise}`;
}

export class LabelQueue {
  readonly batchId: string;
  readonly annotator: string;
  private entries: QueueEntry[];
  private submissionId: string | null = null;

  constructor(batch: BatchPayload, annotator: string) {
    if (!annotator.trim()) throw new Error("annotator must be nonempty");
    this.batchId = batch.batch_id;
    this.annotator = annotator;
    this.entries = displayOrder(batch.items).map((item) => ({
      item,
      status: "pending" as EntryStatus,
    }));
  }

  all(): readonly QueueEntry[] {
    return this.entries;
  }

  current(): QueueEntry | null {
    return this.entries.find((e) => e.status === "pending") ?? null;
  }

  find(instanceId: string): QueueEntry | null {
    return this.entries.find((e) => e.item.instance_id === instanceId) ?? null;
  }

  /** Stage a class for the current item and advance. */
  stage(label: SatdClass, indicator?: ScientificIndicator): QueueEntry {
    const entry = this.current();
    if (!entry) throw new Error("no pending item");
    if (indicator !== undefined && !needsIndicator(label)) {
      throw new Error(`indicator only applies to scientific_debt, not ${label}`);
    }
    entry.status = "staged";
    entry.label = label;
    entry.indicator = indicator;
    this.submissionId = null;
    return entry;
  }

  /** Leave the current item for a later round. */
  skip(): QueueEntry {
    const entry = this.current();
    if (!entry) throw new Error("no pending item");
    entry.status = "skipped";
    delete entry.label;
    delete entry.indicator;
    this.submissionId = null;
    return entry;
  }

  /** Put a staged or skipped item back in play. */
  reopen(instanceId: string): void {
    const entry = this.find(instanceId);
    if (!entry) throw new Error(`unknown instance ${instanceId}`);
    if (entry.status === "submitted" || entry.status === "inflight") {
      throw new Error(`cannot reopen ${entry.status} item`);
    }
    entry.status = "pending";
    delete entry.label;
    delete entry.indicator;
    this.submissionId = null;
  }

  isDecided(): boolean {
    return this.entries.every((e) => e.status !== "pending");
  }

  progress(): { decided: number; total: number } {
    const decided = this.entries.filter((e) => e.status !== "pending").length;
    return { decided, total: this.entries.length };
  }

  stagedEntries(): QueueEntry[] {
    return this.entries.filter((e) => e.status === "staged");
  }

  /**
   * Freeze the staged choices into a submission. The submission id is
   * client-generated and survives retries of the identical payload, so a
   * network replay cannot double-write; any edit mints a fresh id.
   */
  buildSubmission(): LabelSubmission {
    const labels: LabelEntry[] = this.stagedEntries().map((e) => {
      const entry: LabelEntry = {
        instance_id: e.item.instance_id,
        label: e.label as SatdClass,
      };
      if (e.indicator !== undefined) entry.indicator = e.indicator;
      return entry;
    });
    if (this.submissionId === null) this.submissionId = newSubmissionId();
    return {
      batch_id: this.batchId,
      annotator: this.annotator,
      submission_id: this.submissionId,
      labels,
    };
  }

  beginSubmit(): LabelSubmission {
    const submission = this.buildSubmission();
    for (const e of this.entries) {
      if (e.status === "staged") e.status = "inflight";
    }
    return submission;
  }

  completeSubmit(): void {
    for (const e of this.entries) {
      if (e.status === "inflight") e.status = "submitted";
    }
  }

  /** Roll inflight entries back to staged after a 4xx so they stay editable. */
  failSubmit(): void {
    for (const e of this.entries) {
      if (e.status === "inflight") e.status = "staged";
    }
  }

  /**
   * Another annotator landed these first (409). Drop them from the local
   * queue with a conflict mark; the next submission excludes them.
   */
  markConflicts(instanceIds: string[]): number {
    let marked = 0;
    for (const id of instanceIds) {
      const entry = this.find(id);
      if (entry && entry.status !== "submitted") {
        entry.status = "conflict";
        delete entry.label;
        delete entry.indicator;
        marked += 1;
      }
    }
    if (marked > 0) this.submissionId = null;
    return marked;
  }
}

import { JUDGMENTS, type Judgment, type SurveyPayload } from "./types.js";

export interface SurveySnippet {
  snippet_id: string;
  text: string;
  predicted?: string;
}

interface Answer {
  judgment?: Judgment;
  usefulness?: number;
}

/**
 * State for one respondent's pass over a snippet set: a judgment plus a 1-5
 * usefulness rating per snippet. The aggregate view stays hidden until every
 * snippet is answered, and the numbers shown always come from the service,
 * never from local math.
 */
export class SurveyForm {
  readonly respondent: string;
  readonly snippets: SurveySnippet[];
  private answers = new Map<string, Answer>();

  constructor(respondent: string, snippets: SurveySnippet[]) {
    if (!respondent.trim()) throw new Error("respondent must be nonempty");
    if (snippets.length === 0) throw new Error("snippet set is empty");
    const ids = new Set(snippets.map((s) => s.snippet_id));
    if (ids.size !== snippets.length) throw new Error("duplicate snippet ids");
    this.respondent = respondent;
    this.snippets = snippets;
  }

  private answerFor(snippetId: string): Answer {
    if (!this.snippets.some((s) => s.snippet_id === snippetId)) {
      throw new Error(`unknown snippet ${snippetId}`);
    }
    let answer = this.answers.get(snippetId);
    if (!answer) {
      answer = {};
      this.answers.set(snippetId, answer);
    }
    return answer;
  }

  setJudgment(snippetId: string, judgment: Judgment): void {
    if (!JUDGMENTS.includes(judgment)) {
      throw new Error(`judgment must be one of ${JUDGMENTS.join(", ")}`);
    }
    this.answerFor(snippetId).judgment = judgment;
  }

  setUsefulness(snippetId: string, value: number): void {
    if (!Number.isInteger(value) || value < 1 || value > 5) {
      throw new Error(`usefulness must be an integer in 1..5, got ${value}`);
    }
    this.answerFor(snippetId).usefulness = value;
  }

  isAnswered(snippetId: string): boolean {
    const answer = this.answers.get(snippetId);
    return answer?.judgment !== undefined && answer?.usefulness !== undefined;
  }

  isComplete(): boolean {
    return this.snippets.every((s) => this.isAnswered(s.snippet_id));
  }

  /** Whether the running aggregate may be fetched and shown. */
  canShowAggregate(): boolean {
    return this.isComplete();
  }

  /** One POST body per snippet; refuses to build partial submissions. */
  payloads(): SurveyPayload[] {
    if (!this.isComplete()) {
      const missing = this.snippets
        .filter((s) => !this.isAnswered(s.snippet_id))
        .map((s) => s.snippet_id);
      throw new Error(`unanswered snippets: ${missing.join(", ")}`);
    }
    return this.snippets.map((s) => {
      const answer = this.answers.get(s.snippet_id) as Required<Answer>;
      return {
        snippet_id: s.snippet_id,
        judgment: answer.judgment,
        usefulness: answer.usefulness,
        respondent: this.respondent,
      };
    });
  }
}

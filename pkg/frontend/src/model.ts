// Session view model: a pure fold over event records, mirroring the
// engine's own state machine. The UI never invents state - every displayed
// value traces back to a record applied here or an API response.

import type { AnalysisReport, EvaluationResult, EventRecord, GenerationPlan } from "./types.js";
import { AESTHETIC_KEYS, ALIGNMENT_KEYS } from "./types.js";

export interface TurnView {
  plan: GenerationPlan;
  image: string;
  evaluation: EvaluationResult;
  userFeedback: string | null;
  verdict?: { decision: string; overall: number; threshold: number };
}

export interface QuestionGroup {
  element: string;
  questions: string[];
}

export class SessionViewModel {
  sessionId = "";
  status = "INTERPRETING";
  prompt = "";
  interactive = false;
  report: AnalysisReport | null = null;
  turns: TurnView[] = [];
  questions: QuestionGroup[] = [];
  lastSeq = 0;
  accepted: boolean | null = null;
  doneReason: string | null = null;
  errorMessage: string | null = null;
  threshold = 8.0;

  private pendingPlan: GenerationPlan | null = null;
  private pendingImage: string | null = null;

  /** Apply one record; returns false for duplicates/out-of-order replays. */
  applyEvent(record: EventRecord): boolean {
    if (record.seq <= this.lastSeq) return false;
    this.lastSeq = record.seq;
    const payload = record.payload as any;
    switch (record.kind) {
      case "REQUEST":
        this.sessionId = record.session_id;
        this.prompt = payload.prompt;
        this.interactive = Boolean(payload.interactive);
        this.status = "INTERPRETING";
        break;
      case "CLARIFY_ASK":
        this.report = payload.draft as AnalysisReport;
        this.questions = (payload.questions as QuestionGroup[]) ?? [];
        this.status = "AWAITING_CLARIFICATION";
        break;
      case "CLARIFY_ANSWER":
        this.questions = [];
        this.status = "INTERPRETING";
        break;
      case "REPORT":
        this.report = payload as AnalysisReport;
        this.questions = [];
        this.status = "GENERATING";
        break;
      case "PLAN":
        this.pendingPlan = payload as GenerationPlan;
        this.status = "GENERATING";
        break;
      case "IMAGE":
        this.pendingImage = payload.artifact as string;
        this.status = "EVALUATING";
        break;
      case "EVAL":
        if (this.pendingPlan && this.pendingImage) {
          this.turns.push({
            plan: this.pendingPlan,
            image: this.pendingImage,
            evaluation: payload as EvaluationResult,
            userFeedback: null,
          });
          this.pendingPlan = null;
          this.pendingImage = null;
        }
        this.status = "EVALUATING";
        break;
      case "VERDICT": {
        const last = this.turns[this.turns.length - 1];
        if (last) last.verdict = payload;
        this.threshold = Number(payload.threshold ?? this.threshold);
        if (this.interactive) this.status = "AWAITING_FEEDBACK";
        break;
      }
      case "FEEDBACK": {
        const last = this.turns[this.turns.length - 1];
        if (last) last.userFeedback = (payload.text as string) || null;
        this.status = "EVALUATING";
        break;
      }
      case "DONE":
        this.accepted = Boolean(payload.accepted);
        this.doneReason = (payload.reason as string) ?? null;
        this.status = "DONE";
        break;
      case "ERROR":
        this.errorMessage = (payload.message as string) ?? "unknown error";
        this.status = "FAILED";
        break;
    }
    return true;
  }

  // action availability derives solely from status
  get canAnswer(): boolean {
    return this.status === "AWAITING_CLARIFICATION";
  }

  get canGiveFeedback(): boolean {
    return this.status === "AWAITING_FEEDBACK";
  }

  get isTerminal(): boolean {
    return this.status === "DONE" || this.status === "FAILED";
  }

  get latestImage(): string | null {
    return this.turns.length ? this.turns[this.turns.length - 1].image : null;
  }
}

/** The ten sub-scores in canonical axis order for the radar display. */
export function radarValues(evaluation: EvaluationResult): number[] {
  return [
    ...AESTHETIC_KEYS.map((k) => evaluation.aesthetic[k] ?? 0),
    ...ALIGNMENT_KEYS.map((k) => evaluation.alignment[k] ?? 0),
  ];
}

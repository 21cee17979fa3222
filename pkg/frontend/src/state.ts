import type {
  ByoQuestion,
  ChoiceQuestion,
  CompletionSummary,
  QuestionPayload,
} from "./api";

/**
 * What the page shows at any moment. Every service response replaces the
 * whole view via `stateFromPayload`, so the screen can never drift from what
 * the service last said; the only state layered on top is transient input
 * (the respondent's not-yet-submitted selections) and an inline error.
 */

export interface LoadingView {
  kind: "loading";
  message: string;
}

export interface ByoView {
  kind: "byo";
  question: ByoQuestion;
  /** one entry per attribute, null until the respondent picks a level */
  selections: (number | null)[];
  submitting: boolean;
  error: string | null;
}

export interface ChoiceView {
  kind: "choice";
  question: ChoiceQuestion;
  submitting: boolean;
  error: string | null;
}

export interface DoneView {
  kind: "done";
  summary: CompletionSummary;
}

export interface FatalView {
  kind: "fatal";
  message: string;
}

export type ViewState = LoadingView | ByoView | ChoiceView | DoneView | FatalView;

export type Action =
  | { type: "payload"; payload: QuestionPayload }
  | { type: "select-level"; attribute: number; level: number }
  | { type: "submit-started" }
  | { type: "submit-failed"; message: string }
  | { type: "fatal"; message: string };

export function initialState(): ViewState {
  return { kind: "loading", message: "Contacting the survey service" };
}

export function stateFromPayload(payload: QuestionPayload): ViewState {
  switch (payload.phase) {
    case "AwaitingBYO":
      return {
        kind: "byo",
        question: payload,
        selections: payload.attributes.map(() => null),
        submitting: false,
        error: null,
      };
    case "InTournament":
      return { kind: "choice", question: payload, submitting: false, error: null };
    case "Complete":
      return { kind: "done", summary: payload };
  }
}

export function reduce(state: ViewState, action: Action): ViewState {
  switch (action.type) {
    case "payload":
      // a fresh response always wins; selections and errors do not carry over
      return stateFromPayload(action.payload);
    case "fatal":
      return { kind: "fatal", message: action.message };
    case "select-level": {
      if (state.kind !== "byo" || state.submitting) return state;
      const attribute = state.question.attributes[action.attribute];
      if (attribute === undefined) return state;
      if (action.level < 0 || action.level >= attribute.levels.length) {
        return state;
      }
      const selections = state.selections.slice();
      selections[action.attribute] = action.level;
      return { ...state, selections, error: null };
    }
    case "submit-started":
      if (state.kind === "byo" || state.kind === "choice") {
        return { ...state, submitting: true, error: null };
      }
      return state;
    case "submit-failed":
      // keep the respondent's inputs; just surface the message inline
      if (state.kind === "byo" || state.kind === "choice") {
        return { ...state, submitting: false, error: action.message };
      }
      return state;
  }
}

/** The BYO form submits only once every attribute has a selection. */
export function canSubmit(state: ViewState): boolean {
  if (state.kind === "byo") {
    return !state.submitting && state.selections.every((s) => s !== null);
  }
  if (state.kind === "choice") {
    return !state.submitting;
  }
  return false;
}

export function selectedLevels(state: ByoView): number[] {
  return state.selections.map((s) => {
    if (s === null) throw new Error("selection is incomplete");
    return s;
  });
}

export function progressLabel(view: ChoiceView): string {
  return `Task ${view.question.task_index} of ${view.question.total_tasks}`;
}

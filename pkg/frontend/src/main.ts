import { ApiError, PayloadError, SurveyApi } from "./api";
import type { Side } from "./api";
import { renderApp } from "./render";
import type { Action, ViewState } from "./state";
import { initialState, reduce, selectedLevels } from "./state";

const NETWORK_MESSAGE =
  "Could not reach the survey service. Check your connection and try again.";

function query(name: string, fallback: string): string {
  return new URLSearchParams(window.location.search).get(name) ?? fallback;
}

class App {
  private state: ViewState = initialState();
  private readonly api: SurveyApi;
  private readonly root: HTMLElement;
  private readonly studyId: string;
  private readonly populationTag: string;
  private sessionId: string | null = null;

  constructor(root: HTMLElement) {
    this.root = root;
    this.studyId = query("study", "default");
    this.populationTag = query("tag", "default");
    this.api = new SurveyApi(window.location.origin);
  }

  private get storageKey(): string {
    return `acbc-ui:${this.studyId}:session`;
  }

  private dispatch(action: Action): void {
    this.state = reduce(this.state, action);
    renderApp(this.root, this.state, {
      onSelectLevel: (attribute, level) =>
        this.dispatch({ type: "select-level", attribute, level }),
      onSubmitByo: () => void this.submitByo(),
      onChoose: (side) => void this.submitChoice(side),
      onRestart: () => this.restart(),
    });
  }

  async boot(): Promise<void> {
    this.dispatch({ type: "payload", payload: await this.openSession() });
  }

  /** Resume the stored session if the service still knows it, else start anew. */
  private async openSession() {
    const stored = sessionStorage.getItem(this.storageKey);
    if (stored !== null) {
      try {
        const payload = await this.api.next(stored);
        this.sessionId = stored;
        return payload;
      } catch (err) {
        if (!(err instanceof ApiError && err.status === 404)) throw err;
        // the service no longer knows this session (storage was reset)
        sessionStorage.removeItem(this.storageKey);
      }
    }
    const { sessionId, question } = await this.api.createSession(
      this.studyId,
      this.populationTag,
    );
    this.sessionId = sessionId;
    sessionStorage.setItem(this.storageKey, sessionId);
    return question;
  }

  private async submitByo(): Promise<void> {
    if (this.state.kind !== "byo" || this.sessionId === null) return;
    const levels = selectedLevels(this.state);
    this.dispatch({ type: "submit-started" });
    try {
      const payload = await this.api.submitByo(this.sessionId, levels);
      this.dispatch({ type: "payload", payload });
    } catch (err) {
      await this.handleSubmitError(err);
    }
  }

  private async submitChoice(side: Side): Promise<void> {
    if (this.state.kind !== "choice" || this.sessionId === null) return;
    if (this.state.submitting) return;
    const taskIndex = this.state.question.task_index;
    this.dispatch({ type: "submit-started" });
    try {
      const payload = await this.api.submitChoice(this.sessionId, side, taskIndex);
      this.dispatch({ type: "payload", payload });
    } catch (err) {
      await this.handleSubmitError(err);
    }
  }

  private async handleSubmitError(err: unknown): Promise<void> {
    if (err instanceof ApiError && err.isConflict) {
      // someone answered ahead of this tab, or the phase moved on;
      // the current question from the service is the truth
      await this.refresh();
      return;
    }
    if (err instanceof ApiError) {
      this.dispatch({ type: "submit-failed", message: err.detail });
      return;
    }
    if (err instanceof PayloadError) {
      this.dispatch({ type: "fatal", message: err.message });
      return;
    }
    this.dispatch({ type: "submit-failed", message: NETWORK_MESSAGE });
  }

  private async refresh(): Promise<void> {
    if (this.sessionId === null) return;
    try {
      const payload = await this.api.next(this.sessionId);
      this.dispatch({ type: "payload", payload });
    } catch {
      this.dispatch({ type: "submit-failed", message: NETWORK_MESSAGE });
    }
  }

  private restart(): void {
    sessionStorage.removeItem(this.storageKey);
    window.location.reload();
  }
}

const root = document.getElementById("app");
if (root === null) throw new Error("missing #app element");
const app = new App(root);
app.boot().catch((err) => {
  const message =
    err instanceof ApiError || err instanceof PayloadError
      ? err.message
      : NETWORK_MESSAGE;
  root.replaceChildren();
  const p = document.createElement("p");
  p.className = "error-banner";
  p.textContent = message;
  root.append(p);
});

import type { ProfileCard, Side } from "./api";
import type { ByoView, ChoiceView, ViewState } from "./state";
import { canSubmit, progressLabel } from "./state";

export interface Handlers {
  onSelectLevel(attribute: number, level: number): void;
  onSubmitByo(): void;
  onChoose(side: Side): void;
  onRestart(): void;
}

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

function errorBanner(message: string | null): HTMLElement {
  // always present so screen readers announce changes via aria-live
  const banner = el("p", "error-banner");
  banner.setAttribute("role", "alert");
  banner.setAttribute("aria-live", "polite");
  if (message) banner.textContent = message;
  else banner.hidden = true;
  return banner;
}

function profileTable(card: ProfileCard): HTMLElement {
  const table = el("table", "profile");
  for (const [label, level] of Object.entries(card.description)) {
    const row = el("tr");
    row.append(el("th", undefined, label), el("td", undefined, level));
    table.append(row);
  }
  return table;
}

function renderLoading(message: string): HTMLElement {
  const section = el("section", "pane pane-loading");
  section.append(el("p", undefined, message));
  return section;
}

function renderFatal(message: string): HTMLElement {
  const section = el("section", "pane pane-fatal");
  section.append(el("h2", undefined, "Something went wrong"));
  section.append(el("p", undefined, message));
  const hint = el("p", "hint", "Reload the page to try again.");
  section.append(hint);
  return section;
}

function renderByo(view: ByoView, handlers: Handlers): HTMLElement {
  const section = el("section", "pane pane-byo");
  section.append(el("h2", undefined, "About your typical work"));
  section.append(el("p", "prompt", view.question.prompt));
  section.append(errorBanner(view.error));

  const form = el("form");
  form.noValidate = true;
  for (const attr of view.question.attributes) {
    const group = el("fieldset", "attribute-group");
    group.append(el("legend", undefined, attr.label));
    attr.levels.forEach((levelLabel, levelIndex) => {
      const id = `attr-${attr.index}-level-${levelIndex}`;
      const wrap = el("label", "level-option");
      wrap.htmlFor = id;
      const radio = el("input");
      radio.type = "radio";
      radio.id = id;
      radio.name = `attr-${attr.index}`;
      radio.checked = view.selections[attr.index] === levelIndex;
      radio.disabled = view.submitting;
      radio.addEventListener("change", () => {
        handlers.onSelectLevel(attr.index, levelIndex);
      });
      wrap.append(radio, el("span", undefined, levelLabel));
      group.append(wrap);
    });
    form.append(group);
  }

  const submit = el("button", "primary", "Continue");
  submit.type = "submit";
  submit.disabled = !canSubmit(view);
  form.append(submit);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    if (canSubmit(view)) handlers.onSubmitByo();
  });
  section.append(form);
  return section;
}

function choiceCard(
  side: Side,
  card: ProfileCard,
  view: ChoiceView,
  handlers: Handlers,
): HTMLButtonElement {
  const button = el("button", `card card-${side}`);
  button.type = "button";
  button.disabled = view.submitting;
  button.dataset.side = side;
  button.setAttribute(
    "aria-label",
    `Choose the ${side} profile: ` +
      Object.entries(card.description)
        .map(([label, level]) => `${label} ${level}`)
        .join(", "),
  );
  button.append(el("span", "card-title", side === "left" ? "Option 1" : "Option 2"));
  button.append(profileTable(card));
  button.addEventListener("click", () => handlers.onChoose(side));
  return button;
}

function renderChoice(view: ChoiceView, handlers: Handlers): HTMLElement {
  const section = el("section", "pane pane-choice");
  section.append(el("h2", undefined, "Your preference"));
  section.append(el("p", "prompt", view.question.prompt));

  const label = progressLabel(view);
  const status = el("p", "progress-label", label);
  const bar = el("progress");
  bar.max = view.question.total_tasks;
  bar.value = view.question.task_index - 1;
  bar.setAttribute("aria-label", label);
  section.append(status, bar);
  section.append(errorBanner(view.error));

  const pair = el("div", "card-pair");
  const left = choiceCard("left", view.question.left, view, handlers);
  const right = choiceCard("right", view.question.right, view, handlers);
  pair.append(left, right);
  // the cards are plain buttons, so Tab/Enter/Space already work; arrow
  // keys are a convenience for moving between the two
  pair.addEventListener("keydown", (event) => {
    if (event.key === "ArrowLeft") left.focus();
    else if (event.key === "ArrowRight") right.focus();
  });
  section.append(pair);
  return section;
}

function renderDone(state: ViewState & { kind: "done" }, handlers: Handlers): HTMLElement {
  const section = el("section", "pane pane-done");
  section.append(el("h2", undefined, "Thank you"));
  section.append(
    el(
      "p",
      "prompt",
      `Your ${state.summary.total_tasks} comparisons are saved. ` +
        "This is the profile your answers pointed to:",
    ),
  );
  const champion = el("div", "champion");
  champion.append(profileTable(state.summary.champion));
  section.append(champion);
  const restart = el("button", "secondary", "Start another response");
  restart.type = "button";
  restart.addEventListener("click", () => handlers.onRestart());
  section.append(restart);
  return section;
}

export function renderApp(
  root: HTMLElement,
  state: ViewState,
  handlers: Handlers,
): void {
  root.replaceChildren();
  root.dataset.view = state.kind;
  switch (state.kind) {
    case "loading":
      root.append(renderLoading(state.message));
      break;
    case "fatal":
      root.append(renderFatal(state.message));
      break;
    case "byo":
      root.append(renderByo(state, handlers));
      break;
    case "choice": {
      root.append(renderChoice(state, handlers));
      // put keyboard users straight onto the first card unless something
      // else already holds focus (for example after a failed submit)
      if (document.activeElement === document.body) {
        root.querySelector<HTMLButtonElement>(".card-left")?.focus();
      }
      break;
    }
    case "done":
      root.append(renderDone(state, handlers));
      break;
  }
}

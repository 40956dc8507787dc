/** DOM construction for the three screens: guidelines, pointwise, pairwise.
 *
 * Render functions are pure builders over (state, handlers); main.ts swaps
 * the resulting tree into #app on every state change. Selections live in
 * the state machine, so re-rendering never loses them.
 */

import { canSubmit, remainingMs, ViewState } from "./state";
import { Choice, TaskView } from "./types";

export interface Handlers {
  onSelect(dimension: string, value: number | Choice): void;
  onSubmit(): void;
  onToggleRubric(): void;
  onToggleAnchors(): void;
}

export interface RubricText {
  guidelines: string;
  dimensions: Record<string, string>;
  anchorExamples: string[];
}

const DEFAULT_RUBRIC: RubricText = {
  guidelines:
    "Score each painting on every listed dimension. 1 = poor, 3 = moderate, " +
    "5 = excellent. For side-by-side tasks choose which painting is stronger " +
    "per dimension, or TIE when genuinely equal. Take your time: submissions " +
    "are locked until the minimum viewing period passes.",
  dimensions: {},
  anchorExamples: [],
};

export function rubricFromWindow(): RubricText {
  const injected = (window as { RUBRIC?: Partial<RubricText> }).RUBRIC;
  return { ...DEFAULT_RUBRIC, ...(injected ?? {}) };
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

function countdownLabel(state: ViewState, nowMs: number): string {
  const left = remainingMs(state, nowMs);
  return left > 0 ? `wait ${(left / 1000).toFixed(1)}s` : "";
}

export function renderGuidelines(state: ViewState, nowMs: number, rubric: RubricText): HTMLElement {
  const root = el("div", "screen guidelines");
  root.appendChild(el("h1", undefined, "Annotation guidelines"));
  root.appendChild(el("p", "rubric-text", rubric.guidelines));
  for (const [dimension, description] of Object.entries(rubric.dimensions)) {
    const row = el("div", "rubric-dimension");
    row.appendChild(el("strong", undefined, dimension));
    row.appendChild(el("span", undefined, ` — ${description}`));
    root.appendChild(row);
  }
  const left = remainingMs(state, nowMs);
  root.appendChild(
    el(
      "p",
      "countdown",
      left > 0
        ? `Please read the rubric. Tasks unlock in ${(left / 1000).toFixed(1)}s.`
        : "Loading your first task…",
    ),
  );
  return root;
}

function imageFigure(imageId: string, imageUrl: (id: string) => string, label?: string): HTMLElement {
  const figure = el("figure", "painting");
  const img = el("img");
  img.src = imageUrl(imageId);
  img.alt = label ? `painting ${label}` : imageId;
  img.addEventListener("error", () => {
    img.replaceWith(el("div", "image-fallback", `image ${imageId} failed to load — retry`));
  });
  figure.appendChild(img);
  if (label) figure.appendChild(el("figcaption", undefined, label));
  return figure;
}

function scoreRow(
  dimension: string,
  selected: number | undefined,
  description: string | undefined,
  handlers: Handlers,
): HTMLElement {
  const row = el("div", "dimension-row");
  const label = el("div", "dimension-label", dimension);
  if (description) label.title = description;
  row.appendChild(label);
  const buttons = el("div", "choices");
  for (let score = 1; score <= 5; score++) {
    const button = el("button", selected === score ? "choice selected" : "choice", String(score));
    button.type = "button";
    button.addEventListener("click", () => handlers.onSelect(dimension, score));
    buttons.appendChild(button);
  }
  row.appendChild(buttons);
  return row;
}

function choiceRow(
  dimension: string,
  selected: Choice | undefined,
  handlers: Handlers,
): HTMLElement {
  const row = el("div", "dimension-row");
  row.appendChild(el("div", "dimension-label", dimension));
  const buttons = el("div", "choices");
  for (const choice of ["A", "TIE", "B"] as Choice[]) {
    const button = el("button", selected === choice ? "choice selected" : "choice", choice);
    button.type = "button";
    button.addEventListener("click", () => handlers.onSelect(dimension, choice));
    buttons.appendChild(button);
  }
  row.appendChild(buttons);
  return row;
}

function submitBar(
  state: ViewState,
  dimensions: string[],
  nowMs: number,
  handlers: Handlers,
): HTMLElement {
  const bar = el("div", "submit-bar");
  const button = el("button", "submit", "Submit");
  button.type = "button";
  button.disabled = !canSubmit(state, dimensions, nowMs);
  button.addEventListener("click", handlers.onSubmit);
  bar.appendChild(button);
  const hint = el("span", "submit-hint");
  const wait = countdownLabel(state, nowMs);
  const missing = dimensions.filter((d) => state.selections[d] === undefined);
  hint.textContent = [wait, missing.length ? `select: ${missing.join(", ")}` : ""]
    .filter(Boolean)
    .join("  ·  ");
  bar.appendChild(hint);
  if (state.lastError) bar.appendChild(el("span", "error", state.lastError));
  return bar;
}

function sidePanel(state: ViewState, rubric: RubricText, handlers: Handlers): HTMLElement {
  const panel = el("aside", "side-panel");
  const rubricToggle = el("button", "toggle", state.rubricVisible ? "hide rubric" : "show rubric");
  rubricToggle.type = "button";
  rubricToggle.addEventListener("click", handlers.onToggleRubric);
  panel.appendChild(rubricToggle);
  if (state.rubricVisible) {
    const box = el("div", "rubric-box");
    box.appendChild(el("p", undefined, rubric.guidelines));
    for (const [dimension, description] of Object.entries(rubric.dimensions)) {
      box.appendChild(el("p", undefined, `${dimension}: ${description}`));
    }
    panel.appendChild(box);
  }
  if (state.task?.kind === "pointwise") {
    const anchorToggle = el(
      "button",
      "toggle",
      state.anchorPanelVisible ? "hide score references" : "show score references",
    );
    anchorToggle.type = "button";
    anchorToggle.addEventListener("click", handlers.onToggleAnchors);
    panel.appendChild(anchorToggle);
    if (state.anchorPanelVisible) {
      const box = el("div", "anchor-box");
      box.appendChild(el("p", undefined, "Reference paintings for each score level:"));
      if (rubric.anchorExamples.length === 0) {
        box.appendChild(el("p", "muted", "(no reference set configured)"));
      }
      for (const example of rubric.anchorExamples) {
        box.appendChild(el("p", undefined, example));
      }
      panel.appendChild(box);
    }
  }
  return panel;
}

export function renderPointwise(
  state: ViewState,
  task: TaskView,
  dimensions: string[],
  nowMs: number,
  rubric: RubricText,
  imageUrl: (id: string) => string,
  handlers: Handlers,
): HTMLElement {
  const root = el("div", "screen pointwise");
  const main = el("div", "task-area");
  main.appendChild(imageFigure(task.payload.image ?? "", imageUrl));
  const form = el("div", "dimension-form");
  for (const dimension of dimensions) {
    form.appendChild(
      scoreRow(
        dimension,
        state.selections[dimension] as number | undefined,
        rubric.dimensions[dimension],
        handlers,
      ),
    );
  }
  form.appendChild(submitBar(state, dimensions, nowMs, handlers));
  main.appendChild(form);
  root.appendChild(main);
  root.appendChild(sidePanel(state, rubric, handlers));
  return root;
}

export function renderPairwise(
  state: ViewState,
  task: TaskView,
  dimensions: string[],
  nowMs: number,
  rubric: RubricText,
  imageUrl: (id: string) => string,
  handlers: Handlers,
): HTMLElement {
  const root = el("div", "screen pairwise");
  const main = el("div", "task-area");
  const pair = el("div", "side-by-side");
  pair.appendChild(imageFigure(task.payload.a ?? "", imageUrl, "A"));
  pair.appendChild(imageFigure(task.payload.b ?? "", imageUrl, "B"));
  main.appendChild(pair);
  const form = el("div", "dimension-form");
  for (const dimension of dimensions) {
    form.appendChild(
      choiceRow(dimension, state.selections[dimension] as Choice | undefined, handlers),
    );
  }
  form.appendChild(submitBar(state, dimensions, nowMs, handlers));
  main.appendChild(form);
  root.appendChild(main);
  root.appendChild(sidePanel(state, rubric, handlers));
  return root;
}

export function renderMessage(kind: "waiting" | "complete" | "error", detail = ""): HTMLElement {
  const root = el("div", `screen message ${kind}`);
  const text = {
    waiting: "Waiting for the next task…",
    complete: "All tasks in this phase are done. Thank you!",
    error: `Something went wrong: ${detail}`,
  }[kind];
  root.appendChild(el("p", undefined, text));
  return root;
}

/** Pure view-state machine for one annotation session.
 *
 * The server clock is authoritative for every gate; this module mirrors the
 * gates client-side so the submit control stays disabled until the local
 * countdown reaches zero AND every dimension has a selection. A server
 * rejection re-opens the same task with selections preserved.
 */

import { Choice, Selections, TaskKind, TaskView } from "./types";

export type Screen =
  | "guidelines"
  | "task"
  | "submitting"
  | "waiting"
  | "complete"
  | "error";

export interface ViewState {
  screen: Screen;
  task: TaskView | null;
  selections: Selections;
  /** client-clock ms when the current task (or guidelines page) appeared */
  shownAtMs: number;
  /** ms that must elapse on the client before submit may be enabled */
  gateMs: number;
  rubricVisible: boolean;
  anchorPanelVisible: boolean;
  lastError: string | null;
}

export function guidelinesState(guidelinesMinMs: number, nowMs: number): ViewState {
  return {
    screen: "guidelines",
    task: null,
    selections: {},
    shownAtMs: nowMs,
    gateMs: guidelinesMinMs,
    rubricVisible: true,
    anchorPanelVisible: false,
    lastError: null,
  };
}

export function taskState(task: TaskView, nowMs: number): ViewState {
  return {
    screen: "task",
    task,
    selections: {},
    shownAtMs: nowMs,
    gateMs: task.min_view_ms,
    rubricVisible: false,
    anchorPanelVisible: task.kind === "pointwise",
    lastError: null,
  };
}

export function completeState(): ViewState {
  return {
    screen: "complete",
    task: null,
    selections: {},
    shownAtMs: 0,
    gateMs: 0,
    rubricVisible: false,
    anchorPanelVisible: false,
    lastError: null,
  };
}

export function remainingMs(state: ViewState, nowMs: number): number {
  return Math.max(0, state.gateMs - (nowMs - state.shownAtMs));
}

export function select(
  state: ViewState,
  dimension: string,
  value: number | Choice,
): ViewState {
  if (state.screen !== "task" || state.task === null) return state;
  if (!isValidValue(state.task.kind, value)) return state;
  return { ...state, selections: { ...state.selections, [dimension]: value } };
}

function isValidValue(kind: TaskKind, value: number | Choice): boolean {
  if (kind === "pointwise") {
    return typeof value === "number" && Number.isInteger(value) && value >= 1 && value <= 5;
  }
  return value === "A" || value === "TIE" || value === "B";
}

export function allSelected(state: ViewState, dimensions: string[]): boolean {
  return dimensions.every((d) => state.selections[d] !== undefined);
}

/** Gate for the submit control: countdown elapsed and every dimension chosen. */
export function canSubmit(state: ViewState, dimensions: string[], nowMs: number): boolean {
  return (
    state.screen === "task" &&
    state.task !== null &&
    remainingMs(state, nowMs) === 0 &&
    allSelected(state, dimensions)
  );
}

/** Server said "too early": same task, selections kept, countdown restarted
 * from the server's authoritative remaining time. */
export function reopenAfterRejection(
  state: ViewState,
  retryAfterMs: number,
  nowMs: number,
): ViewState {
  return {
    ...state,
    screen: "task",
    shownAtMs: nowMs,
    gateMs: retryAfterMs,
    lastError: "submitted too early; the timer restarted from the server's clock",
  };
}

export function markSubmitting(state: ViewState): ViewState {
  return { ...state, screen: "submitting" };
}

export function toggleRubric(state: ViewState): ViewState {
  return { ...state, rubricVisible: !state.rubricVisible };
}

export function toggleAnchorPanel(state: ViewState): ViewState {
  return { ...state, anchorPanelVisible: !state.anchorPanelVisible };
}

const KEY_CHOICES: Record<string, Choice> = { a: "A", t: "TIE", b: "B" };

/** Keyboard entry: digits 1-5 (pointwise) or A/T/B (pairwise) fill the first
 * dimension that has no selection yet, so a fluent annotator can answer a
 * whole task from the keys alone. */
export function keyboardSelect(
  state: ViewState,
  key: string,
  dimensions: string[],
): ViewState {
  if (state.screen !== "task" || state.task === null) return state;
  const target = dimensions.find((d) => state.selections[d] === undefined);
  if (target === undefined) return state;
  if (state.task.kind === "pointwise") {
    if (!/^[1-5]$/.test(key)) return state;
    return select(state, target, Number(key));
  }
  const choice = KEY_CHOICES[key.toLowerCase()];
  if (choice === undefined) return state;
  return select(state, target, choice);
}

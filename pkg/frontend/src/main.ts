/** Bootstrap: session lifecycle, task polling, countdown, keyboard entry.
 *
 * The submit button stays disabled until the local countdown and full
 * selection are satisfied; if the server still rejects (its clock wins),
 * the task re-opens with selections preserved and the countdown restarts
 * from the server's remaining time.
 */

import { AnnotationApi, GateError } from "./api";
import {
  canSubmit,
  completeState,
  guidelinesState,
  keyboardSelect,
  markSubmitting,
  reopenAfterRejection,
  select,
  taskState,
  toggleAnchorPanel,
  toggleRubric,
  ViewState,
} from "./state";
import {
  Handlers,
  renderGuidelines,
  renderMessage,
  renderPairwise,
  renderPointwise,
  rubricFromWindow,
} from "./render";
import { SessionInfo } from "./types";

const api = new AnnotationApi("");
const rubric = rubricFromWindow();

let session: SessionInfo | null = null;
let state: ViewState | null = null;
let renderTimer: number | undefined;

function appRoot(): HTMLElement {
  const node = document.getElementById("app");
  if (!node) throw new Error("missing #app container");
  return node;
}

function setState(next: ViewState): void {
  state = next;
  draw();
}

const handlers: Handlers = {
  onSelect(dimension, value) {
    if (state) setState(select(state, dimension, value));
  },
  onSubmit() {
    void submitCurrent();
  },
  onToggleRubric() {
    if (state) setState(toggleRubric(state));
  },
  onToggleAnchors() {
    if (state) setState(toggleAnchorPanel(state));
  },
};

function draw(): void {
  if (!session || !state) return;
  const now = Date.now();
  const root = appRoot();
  root.replaceChildren();
  switch (state.screen) {
    case "guidelines":
      root.appendChild(renderGuidelines(state, now, rubric));
      break;
    case "task":
    case "submitting": {
      const task = state.task;
      if (!task) break;
      const renderer = task.kind === "pointwise" ? renderPointwise : renderPairwise;
      root.appendChild(
        renderer(state, task, session.dimensions, now, rubric, (id) => api.imageUrl(id), handlers),
      );
      break;
    }
    case "waiting":
      root.appendChild(renderMessage("waiting"));
      break;
    case "complete":
      root.appendChild(renderMessage("complete"));
      break;
    case "error":
      root.appendChild(renderMessage("error", state.lastError ?? ""));
      break;
  }
}

async function fetchNextTask(): Promise<void> {
  if (!session || !state) return;
  try {
    const response = await api.nextTask(session.session_id);
    if (response.status === "complete") {
      setState(completeState());
      return;
    }
    setState(taskState(response.task, Date.now()));
  } catch (error) {
    if (error instanceof GateError) {
      // guidelines gate still running server-side; retry when it elapses
      window.setTimeout(() => void fetchNextTask(), error.retryAfterMs + 50);
      return;
    }
    setState({ ...state, screen: "error", lastError: String(error) });
  }
}

async function submitCurrent(): Promise<void> {
  if (!session || !state || !state.task) return;
  if (!canSubmit(state, session.dimensions, Date.now())) return;
  const submitting = markSubmitting(state);
  setState(submitting);
  try {
    await api.submit(session.session_id, state.task.task_id, state.selections);
    await fetchNextTask();
  } catch (error) {
    if (error instanceof GateError) {
      setState(reopenAfterRejection(submitting, error.retryAfterMs, Date.now()));
      return;
    }
    setState({ ...submitting, screen: "error", lastError: String(error) });
  }
}

function onKey(event: KeyboardEvent): void {
  if (!session || !state) return;
  if (event.key === "Enter") {
    void submitCurrent();
    return;
  }
  const next = keyboardSelect(state, event.key, session.dimensions);
  if (next !== state) setState(next);
}

async function boot(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const campaign = params.get("campaign") ?? "";
  const annotator = params.get("annotator") ?? "";
  const root = appRoot();
  if (!campaign || !annotator) {
    root.replaceChildren(
      renderMessage("error", "open as /ui/?campaign=<id>&annotator=<name>"),
    );
    return;
  }
  try {
    session = await api.startSession(campaign, annotator);
  } catch (error) {
    root.replaceChildren(renderMessage("error", String(error)));
    return;
  }
  setState(guidelinesState(session.guidelines_min_ms, Date.now()));
  window.setTimeout(() => void fetchNextTask(), session.guidelines_min_ms + 50);
  window.addEventListener("keydown", onKey);
  // re-render every 250 ms so countdowns and the submit gate stay live
  renderTimer = window.setInterval(draw, 250);
  void renderTimer;
}

void boot();

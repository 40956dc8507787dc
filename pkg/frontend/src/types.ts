/** Wire types for the annotation service HTTP API. */

export type TaskKind = "pointwise" | "pairwise";

export type Choice = "A" | "TIE" | "B";

export interface SessionInfo {
  session_id: string;
  phase: TaskKind;
  guidelines_min_ms: number;
  dimensions: string[];
  category: string;
}

export interface TaskView {
  task_id: string;
  kind: TaskKind;
  payload: { image?: string; a?: string; b?: string };
  min_view_ms: number;
}

export type TaskResponse =
  | { status: "task"; task: TaskView }
  | { status: "complete" };

export interface GateRejection {
  error: string;
  retry_after_ms: number;
}

/** Per-dimension answers: 1-5 integers pointwise, A/TIE/B pairwise. */
export type Selections = Record<string, number | Choice>;

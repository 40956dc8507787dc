import { describe, expect, it } from "vitest";

import {
  allSelected,
  canSubmit,
  completeState,
  guidelinesState,
  keyboardSelect,
  remainingMs,
  reopenAfterRejection,
  select,
  taskState,
  toggleRubric,
  ViewState,
} from "../src/state";
import { TaskView } from "../src/types";

const DIMS = ["technique", "coloration", "composition", "mood", "overall"];

const pointwiseTask: TaskView = {
  task_id: "pointwise-a-00001",
  kind: "pointwise",
  payload: { image: "img01" },
  min_view_ms: 5000,
};

const pairwiseTask: TaskView = {
  task_id: "pairwise-a-00001",
  kind: "pairwise",
  payload: { a: "img01", b: "img02" },
  min_view_ms: 10000,
};

function fullySelected(state: ViewState, value: number | "A" | "TIE" | "B"): ViewState {
  return DIMS.reduce((acc, d) => select(acc, d, value), state);
}

describe("submit gating", () => {
  it("stays disabled on a fresh task even with everything selected", () => {
    const t0 = 1_000_000;
    let state = taskState(pairwiseTask, t0);
    state = fullySelected(state, "TIE");
    expect(allSelected(state, DIMS)).toBe(true);
    expect(canSubmit(state, DIMS, t0)).toBe(false);
    expect(remainingMs(state, t0)).toBe(10000);
  });

  it("stays disabled after the countdown if a dimension is missing", () => {
    const t0 = 1_000_000;
    let state = taskState(pairwiseTask, t0);
    for (const d of DIMS.slice(0, 4)) state = select(state, d, "A");
    expect(canSubmit(state, DIMS, t0 + 10_001)).toBe(false);
  });

  it("enables exactly when the gate elapses and all five dimensions are set", () => {
    const t0 = 1_000_000;
    let state = taskState(pairwiseTask, t0);
    state = fullySelected(state, "B");
    expect(canSubmit(state, DIMS, t0 + 9_999)).toBe(false);
    expect(canSubmit(state, DIMS, t0 + 10_000)).toBe(true);
  });

  it("pointwise gate is five seconds", () => {
    const t0 = 5_000;
    let state = taskState(pointwiseTask, t0);
    state = fullySelected(state, 3);
    expect(canSubmit(state, DIMS, t0 + 4_999)).toBe(false);
    expect(canSubmit(state, DIMS, t0 + 5_000)).toBe(true);
  });
});

describe("selections", () => {
  it("rejects out-of-range pointwise scores", () => {
    const state = taskState(pointwiseTask, 0);
    expect(select(state, "mood", 0)).toBe(state);
    expect(select(state, "mood", 6)).toBe(state);
    expect(select(state, "mood", 2.5)).toBe(state);
    expect(select(state, "mood", 5).selections.mood).toBe(5);
  });

  it("rejects bad pairwise labels", () => {
    const state = taskState(pairwiseTask, 0);
    expect(select(state, "mood", 3)).toBe(state);
    expect(select(state, "mood", "TIE").selections.mood).toBe("TIE");
  });

  it("overwrites a previous choice", () => {
    let state = taskState(pointwiseTask, 0);
    state = select(state, "mood", 2);
    state = select(state, "mood", 4);
    expect(state.selections.mood).toBe(4);
  });

  it("rubric toggling never clears selections", () => {
    let state = taskState(pointwiseTask, 0);
    state = select(state, "technique", 4);
    state = toggleRubric(toggleRubric(state));
    expect(state.selections.technique).toBe(4);
  });
});

describe("server rejection", () => {
  it("reopens the same task with selections preserved and a fresh countdown", () => {
    const t0 = 1_000_000;
    let state = taskState(pairwiseTask, t0);
    state = fullySelected(state, "A");
    const reopened = reopenAfterRejection(state, 1_200, t0 + 9_000);
    expect(reopened.task?.task_id).toBe(pairwiseTask.task_id);
    expect(reopened.selections).toEqual(state.selections);
    expect(canSubmit(reopened, DIMS, t0 + 9_000)).toBe(false);
    expect(canSubmit(reopened, DIMS, t0 + 9_000 + 1_200)).toBe(true);
    expect(reopened.lastError).toMatch(/too early/);
  });
});

describe("keyboard entry", () => {
  it("digits fill pointwise dimensions in order", () => {
    let state = taskState(pointwiseTask, 0);
    for (const key of ["4", "3", "5", "1", "2"]) {
      state = keyboardSelect(state, key, DIMS);
    }
    expect(state.selections).toEqual({
      technique: 4,
      coloration: 3,
      composition: 5,
      mood: 1,
      overall: 2,
    });
  });

  it("a/t/b fill pairwise dimensions in order", () => {
    let state = taskState(pairwiseTask, 0);
    for (const key of ["a", "T", "b"]) {
      state = keyboardSelect(state, key, DIMS);
    }
    expect(state.selections).toEqual({
      technique: "A",
      coloration: "TIE",
      composition: "B",
    });
  });

  it("ignores irrelevant keys and full selections", () => {
    let state = taskState(pointwiseTask, 0);
    expect(keyboardSelect(state, "x", DIMS)).toBe(state);
    expect(keyboardSelect(state, "a", DIMS)).toBe(state); // letters are pairwise-only
    state = fullySelected(state, 3);
    expect(keyboardSelect(state, "4", DIMS)).toBe(state);
  });
});

describe("screen transitions", () => {
  it("guidelines gate counts down from the configured minimum", () => {
    const state = guidelinesState(10_000, 500);
    expect(remainingMs(state, 500)).toBe(10_000);
    expect(remainingMs(state, 11_000)).toBe(0);
    expect(state.screen).toBe("guidelines");
  });

  it("complete state has no task", () => {
    const state = completeState();
    expect(state.screen).toBe("complete");
    expect(canSubmit(state, DIMS, 99999999)).toBe(false);
  });
});

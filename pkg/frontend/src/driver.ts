// Scripted session driver: runs one annotator through their whole queue via
// the same state transitions the interactive shell uses. Tests exercise this
// to prove the form logic and the service contract compose.

import type { ServiceApi } from "./api.js";
import type { AnnotationTask, LikertScore, RatingFormState } from "./state.js";
import {
  beginSubmit,
  canSubmit,
  initialState,
  noMoreTasks,
  select,
  submitAccepted,
  taskLoaded,
  taskSkipped,
} from "./state.js";

export type Decision = { q1: LikertScore; q2: LikertScore } | { skip: string };

export interface SessionResult {
  ratedTaskIds: string[];
  skippedTaskIds: string[];
  finalState: RatingFormState;
}

export async function runAnnotatorSession(
  api: ServiceApi,
  annotatorId: string,
  decide: (task: AnnotationTask) => Decision,
): Promise<SessionResult> {
  let state = initialState();
  const rated: string[] = [];
  const skipped: string[] = [];
  for (;;) {
    const task = await api.nextTask(annotatorId);
    if (task === null) {
      state = noMoreTasks(state);
      return { ratedTaskIds: rated, skippedTaskIds: skipped, finalState: state };
    }
    state = taskLoaded(state, task);
    const decision = decide(task);
    if ("skip" in decision) {
      await api.skipTask(annotatorId, task.task_id, decision.skip);
      skipped.push(task.task_id);
      state = taskSkipped(state);
      continue;
    }
    state = select(state, "q1", decision.q1);
    state = select(state, "q2", decision.q2);
    if (!canSubmit(state)) {
      throw new Error("unreachable: both selections made but submit disabled");
    }
    state = beginSubmit(state);
    await api.submitRating(annotatorId, task.task_id, decision.q1, decision.q2);
    rated.push(task.task_id);
    state = submitAccepted(state);
  }
}

// Rating form state machine. Pure transitions, no DOM or network: the app
// shell and the tests drive the same logic. Submission is representable only
// when both questions have a selection, and a selection outside 1..5 is
// rejected at the transition, so invalid ratings cannot reach the service.

export interface AnnotationTask {
  task_id: string;
  video_id: string;
  prompt: string;
  video_ref: string;
  assigned_annotator: string;
}

export type LikertScore = 1 | 2 | 3 | 4 | 5;

export const LIKERT_VALUES: readonly LikertScore[] = [1, 2, 3, 4, 5];

export const Q1_LABEL = "Did the described transition complete?";
export const Q2_LABEL = "How well does the video match the text overall?";

// Anchor wording for the endpoints of the transition-completion scale.
export const LIKERT_ANCHORS: Record<LikertScore, string> = {
  1: "no transition at all",
  2: "slight movement toward the transition",
  3: "partial transition",
  4: "transition completed but with clear consistency issues",
  5: "transition completed with merely consistency issues",
};

export type Phase =
  | "loading" // fetching the next task
  | "rating" // task on screen, collecting selections
  | "submitting" // rating sent, waiting for the acknowledgement
  | "video_error" // video failed to load; skip/report is the only way forward
  | "done" // no tasks remain for this annotator
  | "error"; // unrecoverable service failure

export interface RatingFormState {
  phase: Phase;
  task: AnnotationTask | null;
  q1: LikertScore | null;
  q2: LikertScore | null;
  message: string;
  submitted: number;
}

export function initialState(): RatingFormState {
  return { phase: "loading", task: null, q1: null, q2: null, message: "", submitted: 0 };
}

export function taskLoaded(state: RatingFormState, task: AnnotationTask): RatingFormState {
  return { ...state, phase: "rating", task, q1: null, q2: null, message: "" };
}

export function noMoreTasks(state: RatingFormState): RatingFormState {
  return { ...state, phase: "done", task: null, q1: null, q2: null };
}

export function isLikertScore(value: number): value is LikertScore {
  return Number.isInteger(value) && value >= 1 && value <= 5;
}

export function select(
  state: RatingFormState,
  question: "q1" | "q2",
  value: number,
): RatingFormState {
  if (state.phase !== "rating") {
    throw new Error(`cannot select while ${state.phase}`);
  }
  if (!isLikertScore(value)) {
    throw new RangeError(`score must be an integer in 1..5, got ${value}`);
  }
  return { ...state, [question]: value };
}

export function canSubmit(state: RatingFormState): boolean {
  return state.phase === "rating" && state.q1 !== null && state.q2 !== null;
}

export function beginSubmit(state: RatingFormState): RatingFormState {
  if (!canSubmit(state)) {
    throw new Error("submit requires both questions answered");
  }
  return { ...state, phase: "submitting" };
}

// Acknowledged: reset the form; the shell fetches the next task.
export function submitAccepted(state: RatingFormState): RatingFormState {
  return {
    ...state,
    phase: "loading",
    task: null,
    q1: null,
    q2: null,
    message: "",
    submitted: state.submitted + 1,
  };
}

export function submitRejected(state: RatingFormState, message: string): RatingFormState {
  return { ...state, phase: "rating", message };
}

export function videoFailed(state: RatingFormState, message: string): RatingFormState {
  if (state.phase !== "rating") {
    return state;
  }
  return { ...state, phase: "video_error", message };
}

export function taskSkipped(state: RatingFormState): RatingFormState {
  return { ...state, phase: "loading", task: null, q1: null, q2: null, message: "" };
}

export function serviceFailed(state: RatingFormState, message: string): RatingFormState {
  return { ...state, phase: "error", message };
}

// Interactive shell: wires the state machine to the DOM. One annotator per
// tab; the annotator id comes from the ?annotator= query parameter.

import { HttpServiceApi } from "./api.js";
import {
  LIKERT_ANCHORS,
  LIKERT_VALUES,
  Q1_LABEL,
  Q2_LABEL,
  beginSubmit,
  canSubmit,
  initialState,
  noMoreTasks,
  select,
  serviceFailed,
  submitAccepted,
  submitRejected,
  taskLoaded,
  taskSkipped,
  videoFailed,
} from "./state.js";
import type { LikertScore } from "./state.js";

interface Instructions {
  title: string;
  guidelines: string[];
  examples: { caption: string; note: string }[];
}

const DEFAULT_INSTRUCTIONS: Instructions = {
  title: "Rate each video on two questions",
  guidelines: [
    "Watch the whole clip before answering; it loops automatically.",
    "Q1 judges only whether the described transition completes.",
    "Q2 judges the overall match between the text and the video.",
  ],
  examples: [],
};

const api = new HttpServiceApi("");
let state = initialState();

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function annotatorId(): string {
  const fromQuery = new URLSearchParams(window.location.search).get("annotator");
  if (fromQuery) return fromQuery;
  const entered = window.prompt("Enter your annotator id:") ?? "";
  return entered.trim();
}

function scaleFieldset(question: "q1" | "q2", label: string): HTMLFieldSetElement {
  const fieldset = document.createElement("fieldset");
  fieldset.id = `${question}-scale`;
  const legend = document.createElement("legend");
  legend.textContent = label;
  fieldset.appendChild(legend);
  for (const value of LIKERT_VALUES) {
    const wrapper = document.createElement("label");
    wrapper.className = "likert-option";
    const input = document.createElement("input");
    input.type = "radio";
    input.name = question;
    input.value = String(value);
    input.addEventListener("change", () => {
      state = select(state, question, value as LikertScore);
      render();
    });
    const caption = document.createElement("span");
    caption.textContent = `${value} — ${LIKERT_ANCHORS[value as LikertScore]}`;
    wrapper.append(input, caption);
    fieldset.appendChild(wrapper);
  }
  return fieldset;
}

async function loadInstructions(): Promise<Instructions> {
  try {
    const resp = await fetch("./instructions.json");
    if (!resp.ok) return DEFAULT_INSTRUCTIONS;
    return { ...DEFAULT_INSTRUCTIONS, ...((await resp.json()) as Partial<Instructions>) };
  } catch {
    return DEFAULT_INSTRUCTIONS;
  }
}

function renderInstructions(instructions: Instructions): void {
  el<HTMLHeadingElement>("instructions-title").textContent = instructions.title;
  const list = el<HTMLUListElement>("guidelines");
  list.replaceChildren(
    ...instructions.guidelines.map((g) => {
      const li = document.createElement("li");
      li.textContent = g;
      return li;
    }),
  );
  const examples = el<HTMLDivElement>("examples");
  examples.replaceChildren(
    ...instructions.examples.map((ex) => {
      const div = document.createElement("div");
      div.className = "example-slot";
      div.textContent = `${ex.caption}: ${ex.note}`;
      return div;
    }),
  );
}

function render(): void {
  const rating = el<HTMLDivElement>("rating-panel");
  const doneScreen = el<HTMLDivElement>("done-screen");
  const errorBox = el<HTMLDivElement>("message");
  const video = el<HTMLVideoElement>("task-video");
  const submit = el<HTMLButtonElement>("submit");
  const skipControls = el<HTMLDivElement>("skip-controls");

  rating.hidden = !(state.phase === "rating" || state.phase === "submitting"
    || state.phase === "video_error");
  doneScreen.hidden = state.phase !== "done";
  errorBox.textContent = state.message;
  errorBox.hidden = state.message === "";
  skipControls.hidden = state.phase !== "video_error";
  submit.disabled = !canSubmit(state);

  if (state.task) {
    el<HTMLParagraphElement>("prompt-text").textContent = state.task.prompt;
    if (video.getAttribute("src") !== state.task.video_ref) {
      video.setAttribute("src", state.task.video_ref);
      video.load();
      void video.play().catch(() => undefined);
    }
  } else {
    video.removeAttribute("src");
  }
  el<HTMLSpanElement>("progress").textContent = `${state.submitted} rated`;
  if (state.phase === "rating" && state.q1 === null && state.q2 === null) {
    for (const input of document.querySelectorAll<HTMLInputElement>("input[type=radio]")) {
      input.checked = false;
    }
  }
}

async function advance(ann: string): Promise<void> {
  try {
    const task = await api.nextTask(ann);
    state = task === null ? noMoreTasks(state) : taskLoaded(state, task);
  } catch (err) {
    state = serviceFailed(state, String(err));
  }
  render();
}

async function main(): Promise<void> {
  const ann = annotatorId();
  if (!ann) {
    el<HTMLDivElement>("message").textContent = "No annotator id given.";
    return;
  }
  renderInstructions(await loadInstructions());
  const form = el<HTMLDivElement>("scales");
  form.append(scaleFieldset("q1", Q1_LABEL), scaleFieldset("q2", Q2_LABEL));

  el<HTMLVideoElement>("task-video").addEventListener("error", () => {
    state = videoFailed(state, "The video failed to load. You can skip and report it.");
    render();
  });

  el<HTMLButtonElement>("submit").addEventListener("click", async () => {
    if (!canSubmit(state) || !state.task) return;
    const { task, q1, q2 } = state;
    state = beginSubmit(state);
    render();
    try {
      await api.submitRating(task.assigned_annotator, task.task_id, q1!, q2!);
      state = submitAccepted(state);
      render();
      await advance(ann);
    } catch (err) {
      state = submitRejected(state, String(err));
      render();
    }
  });

  el<HTMLButtonElement>("skip").addEventListener("click", async () => {
    if (!state.task) return;
    const reason = el<HTMLInputElement>("skip-reason").value || "video failed to load";
    try {
      await api.skipTask(ann, state.task.task_id, reason);
      state = taskSkipped(state);
      render();
      await advance(ann);
    } catch (err) {
      state = serviceFailed(state, String(err));
      render();
    }
  });

  await advance(ann);
}

void main();

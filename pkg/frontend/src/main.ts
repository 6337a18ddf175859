// Browser entry point: session dashboard with live event streaming,
// clarification forms, per-turn score radars, feedback, and mask drawing.

import { ApiClient, toBase64 } from "./api.js";
import { exportMask, type CanvasMask, type Stroke } from "./mask.js";
import { SessionViewModel, radarValues } from "./model.js";
import { buildRadarSvg } from "./radar.js";
import { EventStream } from "./sse.js";
import type { EventRecord } from "./types.js";

const api = new ApiClient("");

let model = new SessionViewModel();
let stream: EventStream | null = null;
let renderQueued = false;

// mask drawing state for the feedback panel
let maskStrokes: Stroke[] = [];
let currentStroke: Stroke | null = null;
let maskDims: { width: number; height: number } | null = null;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function scheduleRender(): void {
  if (renderQueued) return;
  renderQueued = true;
  requestAnimationFrame(() => {
    renderQueued = false;
    render();
  });
}

function onRecord(_record: EventRecord): void {
  scheduleRender();
}

async function openSession(sessionId: string): Promise<void> {
  stream?.stop();
  model = new SessionViewModel();
  model.sessionId = sessionId;
  maskStrokes = [];
  currentStroke = null;
  stream = new EventStream(api.eventsUrl(sessionId), (record) => {
    model.applyEvent(record);
    onRecord(record);
  });
  stream.run().catch((err) => {
    model.errorMessage = String(err);
    scheduleRender();
  });
  scheduleRender();
  void refreshSessionList();
}

async function refreshSessionList(): Promise<void> {
  const list = el<HTMLUListElement>("session-list");
  try {
    const sessions = await api.listSessions();
    list.innerHTML = "";
    for (const summary of sessions.reverse()) {
      const item = document.createElement("li");
      const status = String(summary.status);
      item.innerHTML = `<span class="badge ${status}">${status}</span> ${summary.prompt_excerpt}`;
      item.onclick = () => void openSession(summary.id);
      if (summary.id === model.sessionId) item.classList.add("active");
      list.appendChild(item);
    }
  } catch {
    // server not reachable yet; keep the old list
  }
}

function render(): void {
  el("session-status").innerHTML = model.sessionId
    ? `<span class="badge ${model.status}">${model.status}</span>` +
      (model.accepted !== null ? ` accepted=${model.accepted} (${model.doneReason})` : "")
    : "no session";
  el("session-prompt").textContent = model.prompt;
  renderQuestions();
  renderTurns();
  renderFeedback();
  renderReport();
  if (model.errorMessage) {
    el("error-box").textContent = model.errorMessage;
    el("error-box").classList.remove("hidden");
  } else {
    el("error-box").classList.add("hidden");
  }
  if (model.isTerminal) void refreshSessionList();
}

function renderQuestions(): void {
  const panel = el("clarify-panel");
  panel.classList.toggle("hidden", !model.canAnswer);
  if (!model.canAnswer) return;
  const form = el("clarify-form");
  if (form.childElementCount === model.questions.length && form.dataset.session === model.sessionId) return;
  form.dataset.session = model.sessionId;
  form.innerHTML = "";
  for (const group of model.questions) {
    const row = document.createElement("div");
    row.className = "question";
    row.innerHTML =
      `<label>${group.element}<small>${group.questions.join(" ")}</small></label>` +
      `<input type="text" data-element="${group.element}" placeholder="leave empty to let the model decide">`;
    form.appendChild(row);
  }
}

function renderTurns(): void {
  const gallery = el("turn-gallery");
  gallery.innerHTML = "";
  model.turns.forEach((turn, index) => {
    const card = document.createElement("div");
    card.className = "turn-card";
    const verdict = turn.verdict
      ? `<span class="badge ${turn.verdict.decision}">${turn.verdict.decision}</span>` +
        ` ${turn.verdict.overall.toFixed(2)} / ${turn.verdict.threshold.toFixed(1)}`
      : "";
    const missing = turn.evaluation.missing_elements.length
      ? `<div class="missing">missing: ${turn.evaluation.missing_elements.join("; ")}</div>`
      : "";
    const suggestions = turn.evaluation.improvement_suggestions
      ? `<div class="suggestions">${turn.evaluation.improvement_suggestions}</div>`
      : "";
    const feedback = turn.userFeedback ? `<div class="feedback">you: ${turn.userFeedback}</div>` : "";
    card.innerHTML =
      `<h3>turn ${index} <small>${turn.plan.task_kind} via ${turn.plan.selected_model}</small></h3>` +
      `<div class="turn-body"><img src="${api.artifactUrl(turn.image)}" alt="turn ${index}">` +
      buildRadarSvg(radarValues(turn.evaluation), model.threshold) +
      `</div><div class="verdict">${verdict}</div>${missing}${suggestions}${feedback}`;
    gallery.appendChild(card);
  });
}

function renderReport(): void {
  const box = el("report-box");
  if (!model.report) {
    box.classList.add("hidden");
    return;
  }
  box.classList.remove("hidden");
  const resolutions = model.report.ambiguous_elements
    .map((a) => `<li><b>${a.element}</b> [${a.resolution.source}] ${a.resolution.answer || "(pending)"}</li>`)
    .join("");
  box.innerHTML =
    `<h3>analysis report</h3><p>${model.report.detailed_prompt || "(draft)"}</p>` +
    (resolutions ? `<ul>${resolutions}</ul>` : "");
}

function renderFeedback(): void {
  const panel = el("feedback-panel");
  panel.classList.toggle("hidden", !model.canGiveFeedback);
  if (!model.canGiveFeedback) return;
  const image = model.latestImage;
  const img = el<HTMLImageElement>("mask-image");
  if (image && !img.src.endsWith(image)) {
    img.src = api.artifactUrl(image);
    img.onload = () => {
      maskDims = { width: img.naturalWidth, height: img.naturalHeight };
      const canvas = el<HTMLCanvasElement>("mask-canvas");
      canvas.width = img.naturalWidth;
      canvas.height = img.naturalHeight;
      maskStrokes = [];
      drawOverlay();
    };
  }
}

function canvasPoint(event: PointerEvent): { x: number; y: number } {
  const canvas = el<HTMLCanvasElement>("mask-canvas");
  const rect = canvas.getBoundingClientRect();
  return {
    x: ((event.clientX - rect.left) / rect.width) * canvas.width,
    y: ((event.clientY - rect.top) / rect.height) * canvas.height,
  };
}

function drawOverlay(): void {
  const canvas = el<HTMLCanvasElement>("mask-canvas");
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.fillStyle = "rgba(255, 64, 64, 0.45)";
  ctx.strokeStyle = "rgba(255, 64, 64, 0.45)";
  ctx.lineCap = "round";
  ctx.lineJoin = "round";
  for (const stroke of [...maskStrokes, ...(currentStroke ? [currentStroke] : [])]) {
    ctx.lineWidth = stroke.radius * 2;
    ctx.beginPath();
    stroke.points.forEach((p, i) => (i === 0 ? ctx.moveTo(p.x, p.y) : ctx.lineTo(p.x, p.y)));
    ctx.stroke();
    for (const p of stroke.points) {
      ctx.beginPath();
      ctx.arc(p.x, p.y, stroke.radius, 0, Math.PI * 2);
      ctx.fill();
    }
  }
}

function wireMaskCanvas(): void {
  const canvas = el<HTMLCanvasElement>("mask-canvas");
  canvas.addEventListener("pointerdown", (event) => {
    const radius = Number(el<HTMLInputElement>("brush-radius").value);
    currentStroke = { radius, points: [canvasPoint(event)] };
    canvas.setPointerCapture(event.pointerId);
    drawOverlay();
  });
  canvas.addEventListener("pointermove", (event) => {
    if (!currentStroke) return;
    currentStroke.points.push(canvasPoint(event));
    drawOverlay();
  });
  canvas.addEventListener("pointerup", () => {
    if (currentStroke) maskStrokes.push(currentStroke);
    currentStroke = null;
    drawOverlay();
  });
  el("clear-mask").onclick = () => {
    maskStrokes = [];
    currentStroke = null;
    drawOverlay();
  };
}

function collectMaskB64(): string | undefined {
  if (!maskDims || maskStrokes.length === 0) return undefined;
  const mask: CanvasMask = { width: maskDims.width, height: maskDims.height, strokes: maskStrokes };
  return toBase64(exportMask(mask));
}

function wireForms(): void {
  el("create-form").onsubmit = (event) => {
    event.preventDefault();
    const prompt = el<HTMLInputElement>("prompt-input").value.trim();
    if (!prompt) return;
    void api
      .createSession({
        prompt,
        creativity: el<HTMLSelectElement>("creativity-select").value,
        interactive: el<HTMLInputElement>("interactive-check").checked,
      })
      .then(openSession);
  };

  el("clarify-submit").onclick = () => {
    const answers: { element: string; answer: string }[] = [];
    el("clarify-form")
      .querySelectorAll<HTMLInputElement>("input[data-element]")
      .forEach((input) => {
        if (input.value.trim()) answers.push({ element: input.dataset.element!, answer: input.value.trim() });
      });
    void api.postClarifications(model.sessionId, answers).catch(showApiError);
  };

  el("feedback-accept").onclick = () => {
    void api.postFeedback(model.sessionId, { accept: true }).catch(showApiError);
  };
  el("feedback-regen").onclick = () => {
    void api
      .postFeedback(model.sessionId, {
        text: el<HTMLInputElement>("feedback-text").value.trim() || undefined,
        regenerate: true,
        mask_b64: collectMaskB64(),
      })
      .catch(showApiError);
  };
  el("feedback-continue").onclick = () => {
    void api
      .postFeedback(model.sessionId, {
        text: el<HTMLInputElement>("feedback-text").value.trim() || undefined,
      })
      .catch(showApiError);
  };
}

function showApiError(err: unknown): void {
  el("error-box").textContent = String(err);
  el("error-box").classList.remove("hidden");
  setTimeout(() => el("error-box").classList.add("hidden"), 4000);
}

window.addEventListener("DOMContentLoaded", () => {
  wireForms();
  wireMaskCanvas();
  void refreshSessionList();
  setInterval(() => {
    if (!model.sessionId || model.isTerminal) void refreshSessionList();
  }, 5000);
});

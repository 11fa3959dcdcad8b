/** DOM bootstrap: wires the review controller, player, stats panel, and
 * keyboard shortcuts (1 = MG, 2 = MP, 3 = TA, Enter = submit).
 */

import { QcClient } from "./api.js";
import { FramePlayer } from "./player.js";
import { ReviewController, type ReviewView } from "./review.js";
import { formatStats } from "./statsPanel.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function reviewerId(): string {
  const params = new URLSearchParams(window.location.search);
  const fromUrl = params.get("reviewer");
  if (fromUrl) {
    localStorage.setItem("qc-reviewer", fromUrl);
    return fromUrl;
  }
  let stored = localStorage.getItem("qc-reviewer");
  if (!stored) {
    stored = `reviewer-${Math.random().toString(36).slice(2, 8)}`;
    localStorage.setItem("qc-reviewer", stored);
  }
  return stored;
}

export function boot(): void {
  const client = new QcClient(window.location.origin);
  const player = new FramePlayer(el<HTMLCanvasElement>("player"));
  const controller = new ReviewController(client, reviewerId(), render);

  const toggleButtons = {
    mg: el<HTMLButtonElement>("toggle-mg"),
    mp: el<HTMLButtonElement>("toggle-mp"),
    ta: el<HTMLButtonElement>("toggle-ta"),
  };

  let loadedSampleId: string | null = null;

  function render(view: ReviewView): void {
    el("stats").textContent = formatStats(view.stats);
    el("notice").textContent = view.notice ?? "";
    el("notice").style.display = view.notice ? "block" : "none";
    el("retry").style.display = view.outboxSize > 0 ? "inline-block" : "none";

    if (view.phase === "done") {
      el("caption").textContent = "queue complete - nothing left to review";
      el("task-badge").textContent = "";
      player.stop();
      loadedSampleId = null;
      return;
    }
    const sample = view.sample;
    if (!sample) return;

    el("caption").textContent = sample.sample.caption;
    el("task-badge").textContent = sample.sample.task;
    el("task-badge").className = `badge ${sample.sample.task}`;

    toggleButtons.mp.style.display = view.mpApplicable ? "inline-block" : "none";
    toggleButtons.mg.classList.toggle("pass", view.toggles.mg);
    toggleButtons.ta.classList.toggle("pass", view.toggles.ta);
    toggleButtons.mp.classList.toggle("pass", view.toggles.mp === true);

    if (sample.sample.id !== loadedSampleId) {
      loadedSampleId = sample.sample.id;
      void player.load(sample.media.frames, sample.media.masks, sample.sample.fps);
    }
  }

  toggleButtons.mg.addEventListener("click", () => controller.toggle("mg"));
  toggleButtons.mp.addEventListener("click", () => controller.toggle("mp"));
  toggleButtons.ta.addEventListener("click", () => controller.toggle("ta"));
  el("submit").addEventListener("click", () => void controller.submit());
  el("retry").addEventListener("click", () => void controller.retryPending());

  document.addEventListener("keydown", (event) => {
    if (event.key === "1") controller.toggle("mg");
    else if (event.key === "2") controller.toggle("mp");
    else if (event.key === "3") controller.toggle("ta");
    else if (event.key === "Enter") void controller.submit();
  });

  void controller.start();
}

if (typeof document !== "undefined" && document.getElementById("player")) {
  boot();
}

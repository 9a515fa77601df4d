import { ApiClient } from "./api.js";
import { SessionController } from "./controller.js";
import {
  renderComplete,
  renderEmptyAgreement,
  renderKappaTable,
  renderPrediction,
  renderProgress,
  renderTranscript,
} from "./render.js";
import type { SessionState } from "./state.js";
import type { UncertainPolicy } from "./types.js";

/** Browser bootstrap: wires the headless controller to the DOM. The session
 * id is kept in the URL hash so a tab refresh resumes the same session. */

const api = new ApiClient((input, init) => fetch(input, init));
const controller = new SessionController(api);

const el = (id: string): HTMLElement => document.getElementById(id)!;

let policy: UncertainPolicy = "exclude";

function render(state: SessionState): void {
  const item = el("item");
  const progress = el("progress");
  const error = el("error");

  error.textContent = state.error ?? "";
  el("offline").textContent =
    state.queuedOffline > 0 ? `${state.queuedOffline} rating(s) queued offline` : "";

  if (state.progress) progress.innerHTML = renderProgress(state.progress);
  if (state.phase === "rating" && state.item) {
    item.innerHTML =
      renderPrediction(state.item) +
      renderTranscript(state.item) +
      '<div class="hint">1 = disagree &middot; 2 = uncertain &middot; 3 = agree</div>';
  } else if (state.phase === "complete") {
    item.innerHTML = renderComplete(state.progress);
    void refreshAgreement();
  }
}

async function refreshAgreement(): Promise<void> {
  const state = controller.current;
  if (!state.session || !state.progress || state.progress.rated === 0) {
    el("agreement").innerHTML = renderEmptyAgreement();
    return;
  }
  try {
    const primary = await api.agreement(state.session.session_id, policy);
    const alternate = await api.agreement(
      state.session.session_id,
      policy === "exclude" ? "agree" : "exclude",
    );
    el("agreement").innerHTML = renderKappaTable(primary, alternate);
  } catch {
    el("agreement").innerHTML = renderEmptyAgreement();
  }
}

async function boot(): Promise<void> {
  const runs = await api.listRuns();
  const picker = el("runs");
  picker.innerHTML = runs
    .map(
      (r) =>
        `<button class="run" data-run="${r.run_id}">${r.run_id}</button>`,
    )
    .join("");
  picker.addEventListener("click", async (ev) => {
    const target = ev.target as HTMLElement;
    const runId = target.dataset.run;
    if (!runId) return;
    const raterId =
      (el("rater") as HTMLInputElement).value.trim() || "anonymous";
    const session = await api.createSession({
      run_id: runId,
      rater_id: raterId,
      blind_mode: true,
    });
    window.location.hash = session.session_id;
    el("picker").style.display = "none";
    await controller.start(session);
  });

  controller.subscribe(render);
  controller.subscribe(() => {
    // keep the kappa panel live while rating
    const s = controller.current;
    if (s.phase === "rating" && s.progress && s.progress.rated > 0) {
      void refreshAgreement();
    }
  });

  document.addEventListener("keydown", (ev) => {
    void controller.handleKey(ev.key);
  });
  el("policy-toggle").addEventListener("click", () => {
    policy = policy === "exclude" ? "agree" : "exclude";
    el("policy-toggle").textContent = `uncertain policy: ${policy}`;
    void refreshAgreement();
  });
  window.addEventListener("online", () => {
    void controller.reconnect();
  });
}

void boot();

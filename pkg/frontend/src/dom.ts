/** DOM application layer: paints ControllerState into the page. */

import type { SessionController, ControllerState } from "./controller.js";
import { feaGauges, formatNumber, sparklinePoints } from "./render.js";
import type { ExplanationData } from "./types.js";

export function bind(controller: SessionController, root: Document, labels: string[]): void {
  const el = (id: string) => {
    const node = root.getElementById(id);
    if (!node) throw new Error(`missing element #${id}`);
    return node;
  };

  const offerButton = el("offer-next") as HTMLButtonElement;
  offerButton.addEventListener("click", () => void controller.offerNext());

  const labelPanel = el("label-buttons");
  labelPanel.innerHTML = "";
  for (const label of labels) {
    const button = root.createElement("button");
    button.className = "label-button";
    button.textContent = label;
    button.addEventListener("click", () => void controller.chooseLabel(label));
    labelPanel.appendChild(button);
  }

  controller.onChange((state) => paint(state, root, controller));
}

function paint(state: ControllerState, root: Document, controller: SessionController): void {
  const el = (id: string) => root.getElementById(id)!;

  // phase banner
  const metrics = state.metrics;
  el("phase-tag").textContent = metrics ? metrics.phase : "-";
  el("phase-tag").className = `phase-tag ${metrics?.phase === "MiC" ? "mic" : "hic"}`;
  el("phase-counters").textContent = metrics
    ? `k=${metrics.k} p=${metrics.p} trained=${metrics.n_seen}`
    : "";

  // record card
  const record = state.view.record;
  const card = el("record-card");
  if (record) {
    const rows = record.features
      .map((v, i) => `<tr><td>f${i}</td><td>${typeof v === "number" ? v.toFixed(4) : v}</td></tr>`)
      .join("");
    card.innerHTML = `<h3>${record.id} <small>t=${record.t}</small></h3><table>${rows}</table>`;
  } else {
    card.innerHTML = "<p class='placeholder'>No record waiting.</p>";
  }

  // action panel
  (el("offer-next") as HTMLButtonElement).disabled =
    state.busy || !state.view.offerEnabled || state.exhausted;
  for (const node of Array.from(root.querySelectorAll<HTMLButtonElement>(".label-button"))) {
    node.disabled = state.busy || !state.view.labelButtonsEnabled;
  }

  paintModal(state, root, controller);
  paintMetrics(state, root);
  paintTimeline(state, root);
  paintExplanation(state, root);

  const toast = el("toast");
  toast.textContent = state.toast ?? "";
  toast.className = state.toast ? "toast visible" : "toast";
}

function paintModal(state: ControllerState, root: Document, controller: SessionController): void {
  const host = root.getElementById("modal-host")!;
  const modal = state.view.modal;
  if (!modal) {
    host.innerHTML = "";
    host.className = "hidden";
    return;
  }
  host.className = "modal";
  host.innerHTML = "";
  const box = root.createElement("div");
  box.className = `modal-box ${modal.kind}`;
  const title = root.createElement("h2");
  title.textContent = modal.title;
  box.appendChild(title);
  for (const line of modal.lines) {
    const p = root.createElement("p");
    p.textContent = line;
    box.appendChild(p);
  }
  const buttonRow = root.createElement("div");
  buttonRow.className = "modal-buttons";
  for (const spec of modal.buttons) {
    const button = root.createElement("button");
    button.textContent = spec.caption;
    button.disabled = state.busy;
    button.addEventListener("click", () => void dispatch(controller, spec.action));
    buttonRow.appendChild(button);
  }
  if (modal.whyAvailable) {
    const why = root.createElement("button");
    why.textContent = "Why?";
    why.className = "why-button";
    why.disabled = state.busy;
    why.addEventListener("click", () => void controller.requestExplanation());
    buttonRow.appendChild(why);
  }
  if (modal.kind === "callback") {
    const hint = root.createElement("p");
    hint.className = "hint";
    hint.textContent = "Pick a label below to decide this record.";
    box.appendChild(hint);
  }
  box.appendChild(buttonRow);
  host.appendChild(box);
}

function dispatch(controller: SessionController, action: string): Promise<unknown> {
  switch (action) {
    case "accept_suggestion":
      return controller.answerChallenge(true);
    case "refuse":
      return controller.answerChallenge(false);
    case "grant":
      return controller.answerConsent(true);
    case "refuse_consent":
      return controller.answerConsent(false);
    case "revert":
      return controller.answerNotice(true);
    case "stay":
      return controller.answerNotice(false);
    default:
      return Promise.resolve(null);
  }
}

function paintMetrics(state: ControllerState, root: Document): void {
  const host = root.getElementById("metrics-body")!;
  const metrics = state.metrics;
  if (!metrics) {
    host.innerHTML = "";
    return;
  }
  const gauges = feaGauges(metrics)
    .map(
      (g) => `
      <div class="gauge-row">
        <span class="gauge-label">${g.label}</span>
        <div class="gauge"><div class="fill model" style="width:${(g.model * 100).toFixed(0)}%"></div></div>
        <div class="gauge"><div class="fill human" style="width:${(g.human * 100).toFixed(0)}%"></div></div>
      </div>`,
    )
    .join("");
  const points = sparklinePoints(state.avgFeaHistory);
  const counts = metrics.counts;
  host.innerHTML = `
    <div class="gauges">${gauges}</div>
    <div class="spark">
      <span>avg track record ${formatNumber(metrics.average_fea.model)}</span>
      <svg viewBox="0 0 120 24" width="120" height="24"><polyline points="${points}" /></svg>
    </div>
    <dl class="counts">
      <dt>records</dt><dd>${counts.records}</dd>
      <dt>challenges</dt><dd>${counts.challenges} (${counts.challenges_accepted} accepted)</dd>
      <dt>auto accepts</dt><dd>${counts.auto_accepts}</dd>
      <dt>callbacks</dt><dd>${counts.callbacks_low_belief + counts.callbacks_random_check}</dd>
      <dt>queries to you</dt><dd>${metrics.human_queries} (${formatNumber(metrics.human_query_rate, 2)}/record)</dd>
    </dl>`;
}

function paintTimeline(state: ControllerState, root: Document): void {
  const host = root.getElementById("timeline")!;
  host.innerHTML = state.timeline
    .slice(-30)
    .reverse()
    .map((entry) => `<li class="${entry.flavor}">${entry.text}</li>`)
    .join("");
}

function paintExplanation(state: ControllerState, root: Document): void {
  const host = root.getElementById("explanation")!;
  if (!state.explanation) {
    host.innerHTML = "";
    return;
  }
  const parts: string[] = [];
  for (const [name, data] of Object.entries(state.explanation.payload)) {
    parts.push(`<h4>${name.replaceAll("_", " ")}</h4>`);
    parts.push(renderExplanationBlock(data));
  }
  host.innerHTML = parts.join("");
}

function renderExplanationBlock(data: ExplanationData): string {
  if (data.scores) {
    const entries = Object.entries(data.scores);
    const peak = Math.max(...entries.map(([, v]) => Math.abs(v)), 1e-9);
    return entries
      .map(([name, value]) => {
        const width = Math.min(100, (Math.abs(value) / peak) * 50);
        const side = value >= 0 ? "pos" : "neg";
        return `
          <div class="contrib-row">
            <span>${name}</span>
            <div class="contrib-bar ${side}" style="width:${width.toFixed(0)}%"></div>
            <span>${value.toFixed(3)}</span>
          </div>`;
      })
      .join("");
  }
  if (data.items.length === 0) {
    return "<p class='placeholder'>No comparable past records.</p>";
  }
  return (
    "<ul class='exemplars'>" +
    data.items
      .map((item) => {
        const annotation = Object.entries(item.annotation)
          .map(([k, v]) => `${k}=${typeof v === "number" ? (v as number).toFixed(3) : v}`)
          .join(" ");
        return `<li><b>${item.record_id}</b> <small>${annotation}</small></li>`;
      })
      .join("") +
    "</ul>"
  );
}

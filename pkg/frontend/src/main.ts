/**
 * Dashboard wiring: poll fleet snapshots, render node cards, route operator
 * commands, and draw the selected node's glare panel.
 *
 * Server address and refresh interval come from query parameters when
 * given (?server=host:port&refresh=ms); otherwise the page's own origin
 * and the service's /api/config answer are used.
 */

import { ratingCategory, CATEGORY_COLORS } from "./bands.js";
import { RollingSeries, renderChart } from "./chart.js";
import { CommandRejected, isValidTap, tapToVolts } from "./protocol.js";
import { FleetStore } from "./state.js";
import { Transport, WsTransport } from "./transport.js";

const store = new FleetStore();
const histories = new Map<string, RollingSeries>();
let selectedNode: string | null = null;
let transport: Transport;
let refreshMs = 1000;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing #${id}`);
  return node as T;
}

function serverBase(): { http: string; ws: string } {
  const params = new URLSearchParams(window.location.search);
  const override = params.get("server");
  const host = override ?? window.location.host;
  const wsProto = window.location.protocol === "https:" ? "wss:" : "ws:";
  return { http: `${window.location.protocol}//${host}`, ws: `${wsProto}//${host}/ws` };
}

async function loadConfig(httpBase: string): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const fromQuery = params.get("refresh");
  if (fromQuery !== null) {
    refreshMs = Math.max(250, Number(fromQuery) || 1000);
    return;
  }
  try {
    const resp = await fetch(`${httpBase}/api/config`);
    if (resp.ok) {
      const cfg = (await resp.json()) as { refresh_interval_ms: number };
      refreshMs = cfg.refresh_interval_ms;
    }
  } catch {
    // keep the default; the poll loop will surface connectivity problems
  }
}

function toast(message: string): void {
  const box = el<HTMLDivElement>("toast");
  box.textContent = message;
  box.classList.add("visible");
  setTimeout(() => box.classList.remove("visible"), 2500);
}

async function sendTap(nodeId: string, tap: number): Promise<void> {
  if (!isValidTap(tap)) {
    toast(`tap ${tap} is outside 0..127`);
    return;
  }
  store.echoTap(nodeId, tap);
  render();
  try {
    await transport.command(nodeId, { action: "manual_tap", tap });
  } catch (err) {
    store.rollback(nodeId);
    toast(err instanceof CommandRejected ? `rejected: ${err.message}` : String(err));
    render();
  }
}

async function sendMode(nodeId: string, mode: "auto" | "manual"): Promise<void> {
  store.echoMode(nodeId, mode);
  render();
  try {
    await transport.command(nodeId, { action: "set_mode", mode });
  } catch (err) {
    store.rollback(nodeId);
    toast(err instanceof CommandRejected ? `rejected: ${err.message}` : String(err));
    render();
  }
}

function ratingBadge(rating: number): string {
  const category = ratingCategory(rating);
  return `<span class="badge" style="background:${CATEGORY_COLORS[category]}">W${rating} ${category}</span>`;
}

function renderCards(): void {
  const grid = el<HTMLDivElement>("cards");
  const ids = store.nodeIds();
  el<HTMLSpanElement>("node-count").textContent = String(ids.length);

  const existing = new Set<string>();
  for (const card of [...grid.children] as HTMLElement[]) {
    const id = card.dataset.nodeId ?? "";
    if (!ids.includes(id)) card.remove();
    else existing.add(id);
  }

  for (const nodeId of ids) {
    let card = existing.has(nodeId)
      ? (grid.querySelector(`[data-node-id="${nodeId}"]`) as HTMLElement)
      : null;
    if (card === null) {
      card = document.createElement("div");
      card.className = "card";
      card.dataset.nodeId = nodeId;
      card.innerHTML = `
        <div class="card-head">
          <span class="node-id"></span>
          <button class="mode-btn"></button>
        </div>
        <div class="score-line"></div>
        <div class="meter"><label>tap <output class="tap-out"></output> (<span class="volts"></span> V)</label>
          <input type="range" class="tap-slider" min="0" max="127" step="1"></div>
        <div class="trans-line">transmittance <span class="trans"></span>
          <div class="trans-bar"><div class="trans-fill"></div></div></div>
        <div class="usage-line">manual uses <b class="usage"></b> · total <span class="total-usage"></span>
          · rounds <span class="rounds"></span></div>`;
      const slider = card.querySelector(".tap-slider") as HTMLInputElement;
      slider.addEventListener("change", () => void sendTap(nodeId, Number(slider.value)));
      const modeBtn = card.querySelector(".mode-btn") as HTMLButtonElement;
      modeBtn.addEventListener("click", () => {
        const next = store.displayedMode(nodeId) === "manual" ? "auto" : "manual";
        void sendMode(nodeId, next);
      });
      card.addEventListener("click", () => {
        selectedNode = nodeId;
        renderPanel();
      });
      grid.appendChild(card);
    }

    const view = store.node(nodeId);
    if (view === undefined) continue;
    const status = view.status;
    const tap = store.displayedTap(nodeId) ?? 0;
    (card.querySelector(".node-id") as HTMLElement).textContent = nodeId;
    const modeBtn = card.querySelector(".mode-btn") as HTMLButtonElement;
    const mode = store.displayedMode(nodeId) ?? "unknown";
    modeBtn.textContent = mode;
    modeBtn.className = `mode-btn mode-${mode}`;
    (card.querySelector(".score-line") as HTMLElement).innerHTML =
      `score ${status.last_score.toFixed(4)} ${ratingBadge(status.last_rating)}`;
    const slider = card.querySelector(".tap-slider") as HTMLInputElement;
    if (document.activeElement !== slider) slider.value = String(tap);
    (card.querySelector(".tap-out") as HTMLElement).textContent = String(tap);
    (card.querySelector(".volts") as HTMLElement).textContent = tapToVolts(tap).toFixed(3);
    (card.querySelector(".trans") as HTMLElement).textContent =
      `${(status.transmittance * 100).toFixed(1)}%`;
    (card.querySelector(".trans-fill") as HTMLElement).style.width =
      `${(status.transmittance / 0.8) * 100}%`;
    (card.querySelector(".usage") as HTMLElement).textContent = String(status.usage_count);
    (card.querySelector(".total-usage") as HTMLElement).textContent = String(status.total_usage);
    (card.querySelector(".rounds") as HTMLElement).textContent =
      String(status.rounds_participated);
    card.classList.toggle("selected", nodeId === selectedNode);
  }
}

function renderTopBar(): void {
  const connection = store.connection;
  const dot = el<HTMLSpanElement>("conn-dot");
  dot.className = `dot ${connection}`;
  el<HTMLSpanElement>("conn-label").textContent = connection;
  el<HTMLSpanElement>("version").textContent =
    store.version < 0 ? "–" : `v${store.version}`;
  el<HTMLSpanElement>("round-countdown").textContent =
    store.roundPeriodS > 0 ? `${store.nextRoundS.toFixed(0)}s` : "–";
  el<HTMLSpanElement>("rounds-run").textContent = String(store.roundsRun);
}

function renderPanel(): void {
  const panel = el<HTMLDivElement>("panel");
  if (selectedNode === null || store.node(selectedNode) === undefined) {
    panel.classList.add("empty");
    el<HTMLSpanElement>("panel-title").textContent = "select a node";
    return;
  }
  panel.classList.remove("empty");
  el<HTMLSpanElement>("panel-title").textContent = selectedNode;
  const series = histories.get(selectedNode);
  renderChart(
    el<HTMLElement>("glare-chart") as unknown as SVGSVGElement,
    series === undefined ? [] : series.values(),
  );
}

function recordHistories(): void {
  const now = Date.now() / 1000;
  for (const nodeId of store.nodeIds()) {
    const view = store.node(nodeId);
    if (view === undefined) continue;
    let series = histories.get(nodeId);
    if (series === undefined) {
      series = new RollingSeries(180);
      histories.set(nodeId, series);
    }
    series.push({
      t: now,
      before: view.status.before_score,
      after: view.status.last_score,
      transmittance: view.status.transmittance,
    });
  }
}

function render(): void {
  renderTopBar();
  renderCards();
  renderPanel();
}

async function pollLoop(): Promise<void> {
  try {
    const snapshot = await transport.status();
    store.applySnapshot(snapshot);
    recordHistories();
  } catch {
    store.markMissed();
  }
  render();
  setTimeout(() => void pollLoop(), refreshMs);
}

async function start(): Promise<void> {
  const base = serverBase();
  await loadConfig(base.http);
  const ws = new WsTransport(base.ws, (url) => new WebSocket(url) as never);
  ws.onConnectionChange = (up) => {
    if (!up) store.markDisconnected();
    render();
  };
  transport = ws;
  void pollLoop();
}

void start();

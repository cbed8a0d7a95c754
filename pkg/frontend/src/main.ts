// Browser bootstrap: connects the session/render/stats pieces to the DOM and
// a live WebSocket. Keyboard digits 1..n fire the matching action button;
// arrow keys work for the cart-pole tasks.

import { AskMsg, ConsoleSession, FeedbackMsg } from "./protocol.js";
import { buildScene, paintScene } from "./render.js";
import { StatsTracker, paintSparkline } from "./stats.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

const statusEl = el<HTMLSpanElement>("status");
const noticeEl = el<HTMLDivElement>("notice");
const buttonsEl = el<HTMLDivElement>("buttons");
const queryMetaEl = el<HTMLDivElement>("query-meta");
const stateCanvas = el<HTMLCanvasElement>("state-canvas");
const roaCanvas = el<HTMLCanvasElement>("roa-spark");
const returnCanvas = el<HTMLCanvasElement>("return-spark");
const counterEl = el<HTMLDivElement>("counters");
const addressInput = el<HTMLInputElement>("address");
const connectBtn = el<HTMLButtonElement>("connect");

const stateCtx = stateCanvas.getContext("2d")!;
const roaCtx = roaCanvas.getContext("2d")!;
const returnCtx = returnCanvas.getContext("2d")!;

let socket: WebSocket | null = null;
let session: ConsoleSession | null = null;
const stats = new StatsTracker();
let noticeTimer: number | undefined;

function showNotice(text: string): void {
  noticeEl.textContent = text;
  window.clearTimeout(noticeTimer);
  noticeTimer = window.setTimeout(() => (noticeEl.textContent = ""), 4000);
}

function setStatus(text: string, ok: boolean): void {
  statusEl.textContent = text;
  statusEl.className = ok ? "status-ok" : "status-bad";
}

function refreshCounters(): void {
  if (!session) return;
  const snap = session.snapshot();
  counterEl.textContent =
    `feedback sent: ${snap.feedbackCount}` +
    ` | mean response: ${(snap.meanLatencyMs / 1000).toFixed(2)} s` +
    ` | stats rows: ${stats.count}`;
}

function renderButtons(query: AskMsg | null): void {
  buttonsEl.replaceChildren();
  const names = session?.hello?.actions ?? [];
  if (query === null) {
    queryMetaEl.textContent = "waiting for the next query...";
    return;
  }
  queryMetaEl.textContent = `query #${query.id}`;
  for (const action of query.legal) {
    const btn = document.createElement("button");
    btn.textContent = `${action + 1}: ${names[action] ?? `action ${action}`}`;
    btn.onclick = () => {
      session?.submit(query.id, action);
    };
    buttonsEl.appendChild(btn);
  }
}

function connect(address: string): void {
  socket?.close();
  setStatus(`connecting to ${address}...`, false);
  const ws = new WebSocket(address);
  socket = ws;
  const sess = new ConsoleSession(
    (msg: FeedbackMsg) => ws.send(JSON.stringify(msg)),
    {
      onHello: (hello) => {
        setStatus(`connected: ${hello.env} (${hello.actions.join(", ")})`, true);
      },
      onQuery: (query) => {
        renderButtons(query);
        if (query) {
          paintScene(stateCtx, buildScene(sess.hello?.env, query.render));
        }
        refreshCounters();
      },
      onStats: (msg) => {
        stats.push(msg);
        paintSparkline(roaCtx, stats.sparkline("roa"), "#d97706");
        paintSparkline(returnCtx, stats.sparkline("return"), "#2563eb");
        refreshCounters();
      },
      onNotice: showNotice,
    },
  );
  session = sess;
  ws.onmessage = (event) => sess.handleMessage(String(event.data));
  ws.onclose = () => {
    setStatus("disconnected - trainer falls back to its own policy", false);
    renderButtons(null);
  };
  ws.onerror = () => setStatus("connection error", false);
}

connectBtn.onclick = () => connect(addressInput.value);

document.addEventListener("keydown", (event) => {
  if (!session) return;
  const query = session.activeQuery;
  if (!query) return;
  const idx = Number.parseInt(event.key, 10) - 1;
  if (Number.isInteger(idx) && query.legal.includes(idx)) {
    session.submit(query.id, idx);
    return;
  }
  if (session.hello?.env === "cartpole") {
    if (event.key === "ArrowLeft") session.submit(query.id, 0);
    if (event.key === "ArrowRight") session.submit(query.id, 1);
  }
});

paintSparkline(roaCtx, [], "#d97706");
paintSparkline(returnCtx, [], "#2563eb");
renderButtons(null);
setStatus("not connected", false);

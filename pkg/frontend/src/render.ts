// State rendering: each environment's render payload becomes a scene object
// (testable without a canvas), and paintScene draws a scene onto a 2D
// context. Unknown or malformed payloads fall back to a raw JSON view.

export interface CartpoleScene {
  kind: "cartpole";
  x: number;
  theta: number;
  poleHalfLength: number;
  xThreshold: number;
  readouts: string[];
}

export interface GridCell {
  x: number;
  y: number;
  fill: string;
  label?: "key" | "door" | "goal";
}

export interface DoorkeyScene {
  kind: "doorkey";
  size: number;
  cells: GridCell[];
  agent: { x: number; y: number; dir: number };
  carrying: boolean;
}

export interface FallbackScene {
  kind: "fallback";
  text: string;
}

export type Scene = CartpoleScene | DoorkeyScene | FallbackScene;

const WALL = "#4b5563";
const FLOOR = "#f3f4f6";
const KEY = "#eab308";
const DOOR_LOCKED = "#b45309";
const DOOR_OPEN = "#fde68a";
const GOAL = "#22c55e";

function asNumber(v: unknown): number {
  if (typeof v !== "number" || !Number.isFinite(v)) throw new Error("not a number");
  return v;
}

export function buildScene(env: string | undefined, payload: unknown): Scene {
  try {
    if (env === "cartpole") return buildCartpole(payload as Record<string, unknown>);
    if (env === "doorkey") return buildDoorkey(payload as Record<string, unknown>);
  } catch {
    // fall through to the raw view
  }
  return { kind: "fallback", text: JSON.stringify(payload, null, 2) ?? "null" };
}

function buildCartpole(p: Record<string, unknown>): CartpoleScene {
  const x = asNumber(p.x);
  const theta = asNumber(p.theta);
  const xDot = asNumber(p.x_dot);
  const thetaDot = asNumber(p.theta_dot);
  return {
    kind: "cartpole",
    x,
    theta,
    poleHalfLength: asNumber(p.pole_half_length),
    xThreshold: asNumber(p.x_threshold),
    readouts: [
      `x = ${x.toFixed(3)} m`,
      `dx = ${xDot.toFixed(3)} m/s`,
      `angle = ${((theta * 180) / Math.PI).toFixed(2)} deg`,
      `dangle = ${thetaDot.toFixed(3)} rad/s`,
    ],
  };
}

function buildDoorkey(p: Record<string, unknown>): DoorkeyScene {
  const size = asNumber(p.size);
  const agent = p.agent as [number, number];
  const door = p.door as { pos: [number, number]; open: boolean };
  const goal = p.goal as [number, number];
  const splitCol = asNumber(p.split_col);
  const key = (p.key ?? null) as [number, number] | null;
  if (!Array.isArray(agent) || !door || !Array.isArray(goal)) throw new Error("bad grid payload");

  const cells: GridCell[] = [];
  for (let y = 0; y < size; y++) {
    for (let x = 0; x < size; x++) {
      const isBorder = x === 0 || y === 0 || x === size - 1 || y === size - 1;
      const isSplit = x === splitCol && !(x === door.pos[0] && y === door.pos[1]);
      let fill = isBorder || isSplit ? WALL : FLOOR;
      let label: GridCell["label"];
      if (x === door.pos[0] && y === door.pos[1]) {
        fill = door.open ? DOOR_OPEN : DOOR_LOCKED;
        label = "door";
      } else if (key && x === key[0] && y === key[1]) {
        fill = KEY;
        label = "key";
      } else if (x === goal[0] && y === goal[1]) {
        fill = GOAL;
        label = "goal";
      }
      cells.push({ x, y, fill, label });
    }
  }
  return {
    kind: "doorkey",
    size,
    cells,
    agent: { x: agent[0], y: agent[1], dir: asNumber(p.dir) },
    carrying: Boolean(p.carrying),
  };
}

// -- canvas painting ----------------------------------------------------------

export function paintScene(ctx: CanvasRenderingContext2D, scene: Scene): void {
  const { width, height } = ctx.canvas;
  ctx.clearRect(0, 0, width, height);
  if (scene.kind === "cartpole") paintCartpole(ctx, scene);
  else if (scene.kind === "doorkey") paintDoorkey(ctx, scene);
  else paintFallback(ctx, scene);
}

function paintCartpole(ctx: CanvasRenderingContext2D, s: CartpoleScene): void {
  const { width, height } = ctx.canvas;
  const groundY = height * 0.7;
  const scale = (width * 0.45) / s.xThreshold;

  ctx.strokeStyle = "#9ca3af";
  ctx.beginPath();
  ctx.moveTo(0, groundY);
  ctx.lineTo(width, groundY);
  ctx.stroke();
  // track limits
  for (const lim of [-s.xThreshold, s.xThreshold]) {
    const lx = width / 2 + lim * scale;
    ctx.strokeStyle = "#ef4444";
    ctx.beginPath();
    ctx.moveTo(lx, groundY - 8);
    ctx.lineTo(lx, groundY + 8);
    ctx.stroke();
  }

  const cartX = width / 2 + s.x * scale;
  const cartW = 44;
  const cartH = 22;
  ctx.fillStyle = "#1f2937";
  ctx.fillRect(cartX - cartW / 2, groundY - cartH, cartW, cartH);

  const poleLen = Math.min(height * 0.5, 2 * s.poleHalfLength * scale);
  const tipX = cartX + poleLen * Math.sin(s.theta);
  const tipY = groundY - cartH - poleLen * Math.cos(s.theta);
  ctx.strokeStyle = "#d97706";
  ctx.lineWidth = 6;
  ctx.beginPath();
  ctx.moveTo(cartX, groundY - cartH);
  ctx.lineTo(tipX, tipY);
  ctx.stroke();
  ctx.lineWidth = 1;

  ctx.fillStyle = "#111827";
  ctx.font = "13px monospace";
  s.readouts.forEach((line, i) => ctx.fillText(line, 10, 18 + 16 * i));
}

const DIR_ARROWS = ["→", "↓", "←", "↑"]; // E S W N

function paintDoorkey(ctx: CanvasRenderingContext2D, s: DoorkeyScene): void {
  const { width, height } = ctx.canvas;
  const cell = Math.floor(Math.min(width, height - 24) / s.size);
  const ox = Math.floor((width - cell * s.size) / 2);
  const oy = 20;
  for (const c of s.cells) {
    ctx.fillStyle = c.fill;
    ctx.fillRect(ox + c.x * cell, oy + c.y * cell, cell - 1, cell - 1);
  }
  ctx.fillStyle = "#dc2626";
  ctx.font = `${Math.floor(cell * 0.7)}px sans-serif`;
  ctx.textAlign = "center";
  ctx.textBaseline = "middle";
  ctx.fillText(
    DIR_ARROWS[s.agent.dir] ?? "?",
    ox + s.agent.x * cell + cell / 2,
    oy + s.agent.y * cell + cell / 2,
  );
  ctx.textAlign = "left";
  ctx.textBaseline = "alphabetic";
  ctx.fillStyle = "#111827";
  ctx.font = "13px monospace";
  ctx.fillText(s.carrying ? "carrying the key" : "no key yet", 10, 14);
}

function paintFallback(ctx: CanvasRenderingContext2D, s: FallbackScene): void {
  ctx.fillStyle = "#111827";
  ctx.font = "12px monospace";
  const lines = s.text.split("\n").slice(0, 24);
  lines.forEach((line, i) => ctx.fillText(line.slice(0, 80), 8, 16 + 14 * i));
}

import { describe, expect, it } from "vitest";

import { ConsoleSession, FeedbackMsg } from "../src/protocol.js";

function makeSession(clockValues: number[] = []) {
  const sent: FeedbackMsg[] = [];
  const notices: string[] = [];
  const queries: (number | null)[] = [];
  let tick = 0;
  const clock = () => (clockValues.length ? clockValues[Math.min(tick++, clockValues.length - 1)] : 0);
  const session = new ConsoleSession(
    (msg) => sent.push(msg),
    {
      onNotice: (text) => notices.push(text),
      onQuery: (q) => queries.push(q ? q.id : null),
    },
    clock,
  );
  return { session, sent, notices, queries };
}

const ask = (id: number, legal = [0, 1]) =>
  JSON.stringify({ type: "ask", id, state: [0, 0, 0, 0], render: {}, legal });

describe("ConsoleSession", () => {
  it("answers the active query with an echoed id", () => {
    const { session, sent } = makeSession();
    session.handleMessage(ask(7));
    expect(session.submit(7, 1)).toBe(true);
    expect(sent).toEqual([{ type: "feedback", id: 7, action: 1 }]);
  });

  it("sends exactly one feedback per query (double click collapses)", () => {
    const { session, sent, notices } = makeSession();
    session.handleMessage(ask(1));
    expect(session.submit(1, 0)).toBe(true);
    expect(session.submit(1, 0)).toBe(false); // button pressed twice
    expect(sent).toHaveLength(1);
    expect(notices.some((n) => n.includes("stale"))).toBe(true);
  });

  it("rejects input for superseded ids", () => {
    const { session, sent, notices } = makeSession();
    session.handleMessage(ask(1));
    session.handleMessage(ask(2)); // supersedes query 1
    expect(session.submit(1, 0)).toBe(false);
    expect(sent).toHaveLength(0);
    expect(notices.some((n) => n.includes("stale query 1"))).toBe(true);
    expect(session.submit(2, 0)).toBe(true);
  });

  it("a re-issued ask with the same id accepts input again", () => {
    const { session, sent } = makeSession();
    session.handleMessage(ask(5));
    session.submit(5, 1);
    session.handleMessage(ask(5)); // trainer rejected the reply and retries
    expect(session.submit(5, 0)).toBe(true);
    expect(sent).toHaveLength(2);
  });

  it("blocks illegal actions without sending", () => {
    const { session, sent, notices } = makeSession();
    session.handleMessage(ask(3, [0, 1, 2]));
    expect(session.submit(3, 4)).toBe(false);
    expect(sent).toHaveLength(0);
    expect(notices.some((n) => n.includes("not legal"))).toBe(true);
  });

  it("tracks nonnegative latency from display to answer", () => {
    const { session } = makeSession([1000, 1450, 2000, 2600]);
    session.handleMessage(ask(1)); // shown at 1000
    session.submit(1, 0); // answered at 1450
    session.handleMessage(ask(2)); // shown at 2000
    session.submit(2, 1); // answered at 2600
    const snap = session.snapshot();
    expect(snap.feedbackCount).toBe(2);
    expect(snap.meanLatencyMs).toBeCloseTo((450 + 600) / 2);
    expect(snap.meanLatencyMs).toBeGreaterThanOrEqual(0);
  });

  it("survives malformed traffic without crashing", () => {
    const { session, notices } = makeSession();
    session.handleMessage("{not json");
    session.handleMessage(JSON.stringify({ no: "type" }));
    session.handleMessage(JSON.stringify({ type: "ask", id: "x" }));
    session.handleMessage(JSON.stringify({ type: "mystery", id: 1 }));
    expect(notices.length).toBeGreaterThanOrEqual(3);
    expect(session.activeQuery).toBeNull();
  });

  it("records hello and exposes stats snapshots", () => {
    const { session } = makeSession();
    session.handleMessage(JSON.stringify({ type: "hello", env: "cartpole", actions: ["left", "right"] }));
    expect(session.hello?.env).toBe("cartpole");
    expect(session.snapshot().pendingId).toBeNull();
    session.handleMessage(ask(9));
    expect(session.snapshot().pendingId).toBe(9);
  });
});

// Advisor protocol messages and the console-side session state machine.
// The session is socket-agnostic: the page hands it raw message strings and
// a send callback, which keeps every invariant (one feedback per ask, stale
// ids rejected, ids echoed unmodified) unit-testable without a network.

export interface HelloMsg {
  type: "hello";
  env: string;
  actions: string[];
}

export interface AskMsg {
  type: "ask";
  id: number;
  state: number[];
  render: Record<string, unknown>;
  legal: number[];
}

export interface StatsMsg {
  type: "stats";
  iter: number;
  roa: number;
  return: number;
}

export type ServerMessage = HelloMsg | AskMsg | StatsMsg;

export interface FeedbackMsg {
  type: "feedback";
  id: number;
  action: number;
}

export interface SessionEvents {
  onHello?(msg: HelloMsg): void;
  onQuery?(msg: AskMsg | null): void; // null once the query is answered
  onStats?(msg: StatsMsg): void;
  onNotice?(text: string): void;
}

export interface SessionSnapshot {
  feedbackCount: number;
  meanLatencyMs: number;
  pendingId: number | null;
}

export class ConsoleSession {
  hello: HelloMsg | null = null;
  private active: AskMsg | null = null;
  private activeShownAt = 0;
  private answeredCount = 0;
  private latencies: number[] = [];

  constructor(
    private send: (msg: FeedbackMsg) => void,
    private events: SessionEvents = {},
    private clock: () => number = () => Date.now(),
  ) {}

  get activeQuery(): AskMsg | null {
    return this.active;
  }

  handleMessage(raw: string): void {
    let msg: unknown;
    try {
      msg = JSON.parse(raw);
    } catch {
      this.events.onNotice?.("dropped an undecodable message");
      return;
    }
    if (typeof msg !== "object" || msg === null || !("type" in msg)) {
      this.events.onNotice?.("dropped a message without a type");
      return;
    }
    const typed = msg as { type: string };
    if (typed.type === "hello") {
      this.hello = msg as HelloMsg;
      this.events.onHello?.(this.hello);
    } else if (typed.type === "ask") {
      const ask = msg as AskMsg;
      if (typeof ask.id !== "number" || !Array.isArray(ask.legal)) {
        this.events.onNotice?.("dropped a malformed ask");
        return;
      }
      // a new ask supersedes whatever was on screen (including a re-issue
      // of the same id after the trainer rejected a reply)
      this.active = ask;
      this.activeShownAt = this.clock();
      this.events.onQuery?.(ask);
    } else if (typed.type === "stats") {
      this.events.onStats?.(msg as StatsMsg);
    }
    // unknown types are ignored: the protocol allows additions
  }

  // Submit an action for a specific query id. Returns true when a feedback
  // message went out; stale or duplicate submissions are dropped with a
  // visible notice and send nothing.
  submit(id: number, action: number): boolean {
    if (this.active === null || this.active.id !== id) {
      this.events.onNotice?.(`ignored input for stale query ${id}`);
      return false;
    }
    if (!this.active.legal.includes(action)) {
      this.events.onNotice?.(`action ${action} is not legal here`);
      return false;
    }
    this.send({ type: "feedback", id, action });
    this.latencies.push(Math.max(0, this.clock() - this.activeShownAt));
    this.answeredCount += 1;
    this.active = null;
    this.events.onQuery?.(null);
    return true;
  }

  // Convenience for keyboard handlers: act on the current query, if any.
  submitActive(action: number): boolean {
    return this.active !== null && this.submit(this.active.id, action);
  }

  snapshot(): SessionSnapshot {
    const mean =
      this.latencies.length === 0
        ? 0
        : this.latencies.reduce((a, b) => a + b, 0) / this.latencies.length;
    return {
      feedbackCount: this.answeredCount,
      meanLatencyMs: mean,
      pendingId: this.active ? this.active.id : null,
    };
  }
}

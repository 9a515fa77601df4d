import { ApiClient, OfflineQueued, ServerRejection } from "./api.js";
import { keyToScore } from "./keyboard.js";
import {
  SessionEvent,
  SessionState,
  canRate,
  initialState,
  reduce,
} from "./state.js";
import type { Score, SessionInfo } from "./types.js";

/**
 * Headless session controller: owns the state machine and talks to the API,
 * leaving all DOM work to a subscriber. This is what the simulated
 * keyboard-session tests drive.
 */
export class SessionController {
  private state: SessionState = initialState;
  private listeners: ((state: SessionState) => void)[] = [];

  constructor(private readonly api: ApiClient) {}

  get current(): SessionState {
    return this.state;
  }

  subscribe(listener: (state: SessionState) => void): void {
    this.listeners.push(listener);
  }

  private dispatch(event: SessionEvent): void {
    this.state = reduce(this.state, event);
    for (const l of this.listeners) l(this.state);
  }

  async start(session: SessionInfo): Promise<void> {
    this.dispatch({ kind: "session-created", session });
    await this.loadNext();
  }

  private async loadNext(): Promise<void> {
    const sessionId = this.state.session!.session_id;
    const item = await this.api.nextItem(sessionId);
    if (item === null) {
      this.dispatch({ kind: "exhausted" });
    } else {
      this.dispatch({ kind: "item-loaded", item });
    }
  }

  /** Keyboard entry point: non-rating keys are ignored without a request. */
  async handleKey(key: string): Promise<void> {
    const score = keyToScore(key);
    if (score === null) return;
    await this.rate(score);
  }

  async rate(score: Score): Promise<void> {
    if (!canRate(this.state)) return;
    const { session, item } = this.state;
    this.dispatch({ kind: "submit-started" });
    try {
      const progress = await this.api.submitRating(session!.session_id, {
        chat_id: item!.chat_id,
        index: item!.index,
        behavior_id: item!.behavior_id,
        score,
      });
      this.dispatch({ kind: "rating-acked", progress });
      if (progress.state !== "COMPLETE") {
        await this.loadNext();
      }
    } catch (err) {
      if (err instanceof OfflineQueued) {
        this.dispatch({ kind: "rating-queued", queuedCount: err.queuedCount });
      } else if (err instanceof ServerRejection) {
        this.dispatch({ kind: "server-rejected", message: err.message });
      } else {
        throw err;
      }
    }
  }

  /** Replay offline-queued ratings, then resume. */
  async reconnect(): Promise<void> {
    const progress = await this.api.flushQueue();
    this.dispatch({ kind: "queue-flushed", progress });
    if (progress && progress.state === "COMPLETE") {
      this.dispatch({ kind: "exhausted" });
    } else if (progress) {
      await this.loadNext();
    }
  }
}

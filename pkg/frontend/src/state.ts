import type { Progress, ReviewItem, SessionInfo } from "./types.js";

/**
 * Pure session state machine. The controller feeds it events; it never
 * touches the network or the DOM, so every transition is unit-testable.
 *
 * phases: picking-run -> rating -> complete
 * "busy" guards against double submission while a request is in flight.
 */

export interface SessionState {
  phase: "picking-run" | "loading" | "rating" | "complete";
  session: SessionInfo | null;
  item: ReviewItem | null;
  progress: Progress | null;
  busy: boolean;
  error: string | null;
  queuedOffline: number;
}

export const initialState: SessionState = {
  phase: "picking-run",
  session: null,
  item: null,
  progress: null,
  busy: false,
  error: null,
  queuedOffline: 0,
};

export type SessionEvent =
  | { kind: "session-created"; session: SessionInfo }
  | { kind: "item-loaded"; item: ReviewItem }
  | { kind: "exhausted" }
  | { kind: "submit-started" }
  | { kind: "rating-acked"; progress: Progress }
  | { kind: "rating-queued"; queuedCount: number }
  | { kind: "server-rejected"; message: string }
  | { kind: "queue-flushed"; progress: Progress | null };

export function reduce(state: SessionState, event: SessionEvent): SessionState {
  switch (event.kind) {
    case "session-created":
      return {
        ...initialState,
        phase: "loading",
        session: event.session,
        progress: {
          rated: 0,
          total: event.session.total_items,
          percent: 0,
          state: "OPEN",
        },
      };
    case "item-loaded":
      return { ...state, phase: "rating", item: event.item, busy: false, error: null };
    case "exhausted":
      return { ...state, phase: "complete", item: null, busy: false };
    case "submit-started":
      return { ...state, busy: true, error: null };
    case "rating-acked":
      return {
        ...state,
        progress: event.progress,
        busy: false,
        phase: event.progress.state === "COMPLETE" ? "complete" : "loading",
        item: event.progress.state === "COMPLETE" ? null : state.item,
      };
    case "rating-queued":
      // offline: keep the cursor on the current item, surface the queue depth
      return { ...state, busy: false, queuedOffline: event.queuedCount };
    case "server-rejected":
      // visible error, no cursor advance
      return { ...state, busy: false, error: event.message };
    case "queue-flushed":
      return {
        ...state,
        queuedOffline: 0,
        progress: event.progress ?? state.progress,
      };
  }
}

/** A rating may be submitted only while an item is displayed and no request
 * is already in flight. */
export function canRate(state: SessionState): boolean {
  return state.phase === "rating" && state.item !== null && !state.busy;
}

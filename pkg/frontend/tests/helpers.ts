import type { FetchFn } from "../src/api.js";
import type {
  AgreementPayload,
  Progress,
  ReviewItem,
} from "../src/types.js";

export function makeItem(i: number, total: number): ReviewItem {
  return {
    position: i,
    total,
    chat_id: "chat000",
    index: i,
    behavior_id: "control",
    behavior_name: "Control",
    behavior_description: "Directing or restricting the other speaker.",
    model_prediction: i % 2 === 0,
    context: [
      { chat_id: "chat000", index: Math.max(0, i - 1), speaker: "decoy", text: "ok" },
    ],
    target: { chat_id: "chat000", index: i, speaker: "offender", text: `msg ${i}` },
  };
}

export function makeAgreement(policy: "exclude" | "agree"): AgreementPayload {
  const bump = policy === "agree" ? 0.05 : 0;
  return {
    raters: ["RATER1", "RATER2", "MODEL"],
    policy,
    uncertain_count: 2,
    per_behavior: {
      control: {
        "RATER1/RATER2": 0.8 + bump,
        "RATER1/MODEL": 0.59,
        "RATER2/MODEL": 0.65 + bump,
      },
    },
    per_behavior_overall: { control: 0.68 },
    total: {
      "RATER1/RATER2": 0.8 + bump,
      "RATER1/MODEL": 0.59,
      "RATER2/MODEL": 0.65 + bump,
    },
    total_mean_of_behaviors: { "RATER1/MODEL": 0.59 },
    overall: 0.68,
  };
}

/** In-memory review-service double implementing the HTTP API semantics the
 * client relies on. Records every response body so tests can byte-scan the
 * entire network traffic (e.g. for gold-label leakage in blind mode). */
export class FakeServer {
  rated = new Map<string, number>();
  responses: string[] = [];
  offline = false;

  constructor(public readonly items: ReviewItem[]) {}

  private progress(): Progress {
    const rated = this.rated.size;
    const total = this.items.length;
    return {
      rated,
      total,
      percent: Math.round((1000 * rated) / total) / 10,
      state: rated >= total ? "COMPLETE" : "OPEN",
    };
  }

  private respond(status: number, body?: unknown): Response {
    const text = body === undefined ? "" : JSON.stringify(body);
    if (text) this.responses.push(text);
    return new Response(text || null, {
      status,
      headers: { "content-type": "application/json" },
    });
  }

  fetch: FetchFn = async (input, init) => {
    if (this.offline) throw new TypeError("network unreachable");
    const url = new URL(input, "http://fake");
    const path = url.pathname;
    if (path === "/api/runs") return this.respond(200, [{ run_id: "r1" }]);
    if (path === "/api/sessions" && init?.method === "POST") {
      return this.respond(201, {
        session: {
          session_id: "r1-tester-0",
          run_id: "r1",
          rater_id: "tester",
          blind_mode: true,
          total_items: this.items.length,
        },
      });
    }
    if (path.endsWith("/next")) {
      const next = this.items.find(
        (it) => !this.rated.has(`${it.chat_id}:${it.index}:${it.behavior_id}`),
      );
      if (!next) return this.respond(204);
      return this.respond(200, { item: next });
    }
    if (path.endsWith("/ratings") && init?.method === "POST") {
      const body = JSON.parse(String(init.body));
      if (![1, 2, 3].includes(body.score)) {
        return this.respond(422, { error: "INVALID_SCORE", detail: String(body.score) });
      }
      const key = `${body.chat_id}:${body.index}:${body.behavior_id}`;
      if (!this.items.some((it) => `${it.chat_id}:${it.index}:${it.behavior_id}` === key)) {
        return this.respond(422, { error: "ITEM_NOT_IN_SESSION", detail: key });
      }
      this.rated.set(key, body.score);
      return this.respond(200, { progress: this.progress() });
    }
    if (path.endsWith("/agreement")) {
      if (this.rated.size === 0) {
        return this.respond(409, { error: "NO_RATINGS", detail: "none" });
      }
      const policy = url.searchParams.get("policy") === "agree" ? "agree" : "exclude";
      return this.respond(200, makeAgreement(policy));
    }
    return this.respond(404, { error: "NOT_FOUND", detail: path });
  };
}

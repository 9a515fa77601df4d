import { describe, expect, it } from "vitest";

import { ApiClient, OfflineQueued, ServerRejection } from "../src/api.js";
import { keyToScore } from "../src/keyboard.js";
import {
  escapeHtml,
  renderKappaTable,
  renderPrediction,
  renderProgress,
  renderTranscript,
} from "../src/render.js";
import { canRate, initialState, reduce } from "../src/state.js";
import { FakeServer, makeAgreement, makeItem } from "./helpers.js";

describe("keyboard", () => {
  it("maps only 1/2/3 to scores", () => {
    expect(keyToScore("1")).toBe(1);
    expect(keyToScore("2")).toBe(2);
    expect(keyToScore("3")).toBe(3);
    for (const key of ["0", "4", "7", "a", "Enter", " ", "Escape"]) {
      expect(keyToScore(key)).toBeNull();
    }
  });
});

describe("state machine", () => {
  const session = {
    session_id: "s",
    run_id: "r1",
    rater_id: "t",
    blind_mode: true,
    total_items: 30,
  };

  it("starts rating after session + item", () => {
    let state = reduce(initialState, { kind: "session-created", session });
    expect(state.phase).toBe("loading");
    expect(state.progress).toEqual({ rated: 0, total: 30, percent: 0, state: "OPEN" });
    state = reduce(state, { kind: "item-loaded", item: makeItem(0, 30) });
    expect(state.phase).toBe("rating");
    expect(canRate(state)).toBe(true);
  });

  it("blocks double submission while busy", () => {
    let state = reduce(initialState, { kind: "session-created", session });
    state = reduce(state, { kind: "item-loaded", item: makeItem(0, 30) });
    state = reduce(state, { kind: "submit-started" });
    expect(canRate(state)).toBe(false);
  });

  it("advances progress on ack and completes at the end", () => {
    let state = reduce(initialState, { kind: "session-created", session });
    state = reduce(state, { kind: "item-loaded", item: makeItem(5, 30) });
    state = reduce(state, {
      kind: "rating-acked",
      progress: { rated: 6, total: 30, percent: 20, state: "OPEN" },
    });
    expect(state.progress!.rated).toBe(6);
    expect(state.phase).toBe("loading");
    state = reduce(state, {
      kind: "rating-acked",
      progress: { rated: 30, total: 30, percent: 100, state: "COMPLETE" },
    });
    expect(state.phase).toBe("complete");
    expect(state.item).toBeNull();
  });

  it("keeps the cursor on server rejection", () => {
    let state = reduce(initialState, { kind: "session-created", session });
    const item = makeItem(2, 30);
    state = reduce(state, { kind: "item-loaded", item });
    state = reduce(state, { kind: "submit-started" });
    state = reduce(state, { kind: "server-rejected", message: "INVALID_SCORE: 9" });
    expect(state.item).toBe(item);
    expect(state.error).toContain("INVALID_SCORE");
    expect(canRate(state)).toBe(true); // retry allowed
  });

  it("tracks offline queue depth without advancing", () => {
    let state = reduce(initialState, { kind: "session-created", session });
    const item = makeItem(2, 30);
    state = reduce(state, { kind: "item-loaded", item });
    state = reduce(state, { kind: "rating-queued", queuedCount: 2 });
    expect(state.queuedOffline).toBe(2);
    expect(state.item).toBe(item);
    state = reduce(state, {
      kind: "queue-flushed",
      progress: { rated: 4, total: 30, percent: 13.3, state: "OPEN" },
    });
    expect(state.queuedOffline).toBe(0);
    expect(state.progress!.rated).toBe(4);
  });
});

describe("render", () => {
  it("escapes user text", () => {
    expect(escapeHtml('<script>"a"&\'b\'</script>')).toBe(
      "&lt;script&gt;&quot;a&quot;&amp;&#39;b&#39;&lt;/script&gt;",
    );
    const item = makeItem(0, 1);
    item.target.text = "<img src=x>";
    expect(renderTranscript(item)).not.toContain("<img");
  });

  it("renders target last and highlighted", () => {
    const html = renderTranscript(makeItem(3, 10));
    const targetAt = html.indexOf("msg-target");
    expect(targetAt).toBeGreaterThan(html.indexOf("msg-decoy"));
    expect(html).toContain("msg 3");
  });

  it("renders prediction badge and description tooltip", () => {
    const html = renderPrediction(makeItem(0, 1));
    expect(html).toContain("YES");
    expect(html).toContain('title="Directing or restricting the other speaker."');
  });

  it("never emits gold-label markup for API items", () => {
    // blind-mode API items carry no gold field; the renderers only touch
    // declared fields, so the output cannot contain one
    const html =
      renderTranscript(makeItem(1, 5)) +
      renderPrediction(makeItem(1, 5)) +
      renderProgress({ rated: 1, total: 5, percent: 20, state: "OPEN" });
    expect(html).not.toContain("gold");
  });

  it("kappa table passes API values through verbatim", () => {
    const primary = makeAgreement("exclude");
    const alternate = makeAgreement("agree");
    const html = renderKappaTable(primary, alternate);
    // every rendered value is the exact String() of the payload value
    for (const [pair, value] of Object.entries(primary.total)) {
      expect(html).toContain(`data-pair="${pair}" data-value="${String(value)}"`);
    }
    expect(html).toContain(`data-overall="${String(primary.overall)}"`);
    // parenthesized alternate-policy value where it differs
    expect(html).toContain(`>${String(0.8)} (${String(0.8 + 0.05)})<`);
    // policy-independent pair has no parenthesized variant
    expect(html).not.toContain("0.59 (");
    // rows: one per behavior plus Total
    expect(html.match(/<tr data-behavior=/g)!.length).toBe(1);
    expect(html).toContain('data-behavior="__total__"');
  });
});

describe("api client", () => {
  it("returns null on 204 and parses items", async () => {
    const server = new FakeServer([makeItem(0, 1)]);
    const api = new ApiClient(server.fetch);
    const item = await api.nextItem("s");
    expect(item!.index).toBe(0);
    await api.submitRating("s", {
      chat_id: "chat000",
      index: 0,
      behavior_id: "control",
      score: 3,
    });
    expect(await api.nextItem("s")).toBeNull();
  });

  it("surfaces structured server rejections", async () => {
    const server = new FakeServer([makeItem(0, 1)]);
    const api = new ApiClient(server.fetch);
    await expect(
      api.submitRating("s", {
        chat_id: "nope",
        index: 9,
        behavior_id: "control",
        score: 3,
      }),
    ).rejects.toMatchObject({ code: "ITEM_NOT_IN_SESSION", status: 422 });
    expect(api.queuedCount).toBe(0); // rejections are not queued
  });

  it("queues on network failure and flushes in order", async () => {
    const items = [makeItem(0, 3), makeItem(1, 3), makeItem(2, 3)];
    const server = new FakeServer(items);
    const api = new ApiClient(server.fetch);
    server.offline = true;
    for (const it of items.slice(0, 2)) {
      await expect(
        api.submitRating("s", {
          chat_id: it.chat_id,
          index: it.index,
          behavior_id: it.behavior_id,
          score: 3,
        }),
      ).rejects.toBeInstanceOf(OfflineQueued);
    }
    expect(api.queuedCount).toBe(2);
    server.offline = false;
    const progress = await api.flushQueue();
    expect(api.queuedCount).toBe(0);
    expect(progress!.rated).toBe(2);
    expect([...server.rated.keys()]).toEqual([
      "chat000:0:control",
      "chat000:1:control",
    ]);
  });

  it("propagates agreement payloads untouched", async () => {
    const server = new FakeServer([makeItem(0, 1)]);
    const api = new ApiClient(server.fetch);
    await api.submitRating("s", {
      chat_id: "chat000",
      index: 0,
      behavior_id: "control",
      score: 2,
    });
    const payload = await api.agreement("s", "agree");
    expect(payload).toEqual(makeAgreement("agree"));
    await expect(api.agreement("bad", "exclude")).resolves.toBeTruthy();
  });

  it("maps NO_RATINGS to a rejection", async () => {
    const server = new FakeServer([makeItem(0, 1)]);
    const api = new ApiClient(server.fetch);
    await expect(api.agreement("s", "exclude")).rejects.toBeInstanceOf(ServerRejection);
  });
});

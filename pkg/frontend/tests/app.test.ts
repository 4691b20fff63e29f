// @vitest-environment jsdom
import { beforeEach, describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api.js";
import { App } from "../src/app.js";
import { makeResponse } from "./fixtures.js";

const PAGE = `
  <span id="health"></span>
  <div id="banner" class="hidden"></div>
  <input id="search">
  <div id="suggestions"></div>
  <div id="chips"></div>
  <button id="diagnose"></button>
  <button id="clear"></button>
  <button id="export"></button>
  <button id="scale-toggle"></button>
  <section id="differential"></section>
  <aside id="preview" class="hidden"></aside>
  <ol id="history"></ol>
`;

function jsonResponse(payload: unknown, status = 200): Response {
  return new Response(JSON.stringify(payload), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

function makeApp(fetchFn: typeof fetch): App {
  document.body.innerHTML = PAGE;
  const app = new App(document, new ApiClient("http://svc", fetchFn));
  app.start();
  return app;
}

describe("app flows", () => {
  beforeEach(() => {
    vi.useRealTimers();
  });

  it("empty search prefix issues no network request", async () => {
    const fetchSpy = vi.fn(async () => jsonResponse({ results: [] }));
    const client = new ApiClient("http://svc", fetchSpy as unknown as typeof fetch);
    expect(await client.searchFindings("")).toEqual([]);
    expect(await client.searchFindings("   ")).toEqual([]);
    expect(fetchSpy).not.toHaveBeenCalled();
    await client.searchFindings("che");
    expect(fetchSpy).toHaveBeenCalledTimes(1);
  });

  it("commit posts the chips and renders the response atomically", async () => {
    const response = makeResponse([[200, "mi", "Other", 0.93]]);
    const fetchFn = vi.fn(async (url: RequestInfo | URL, init?: RequestInit) => {
      const target = String(url);
      if (target.endsWith("/api/health")) {
        return jsonResponse({ status: "ok", fingerprint: "f", disorders: 1,
                              findings: 1, links: 1, backend: "pure" });
      }
      expect(target).toBe("http://svc/api/diagnose");
      expect(JSON.parse(String(init?.body))).toEqual({ positive: [300], negative: [301] });
      return jsonResponse(response);
    });
    const app = makeApp(fetchFn as unknown as typeof fetch);
    let state = app.sessionState;
    // drive the store through the same transitions the pick handler uses
    const { addChip, togglePolarity } = await import("../src/state.js");
    state = addChip(state, { id: 300, name: "chest pain", polarity: "present" });
    state = addChip(state, { id: 301, name: "fever", polarity: "present" });
    state = togglePolarity(state, 301);
    app.restore(state);

    await app.commitFindings();
    expect(app.sessionState.committed?.differential[0]?.name).toBe("mi");
    expect(document.querySelectorAll("#differential .entry")).toHaveLength(1);
    expect(app.sessionState.history).toHaveLength(1);
  });

  it("a 422 surfaces in the banner, highlights chips, and keeps them", async () => {
    const fetchFn = vi.fn(async (url: RequestInfo | URL) => {
      if (String(url).endsWith("/api/health")) {
        return jsonResponse({ status: "ok", fingerprint: "f", disorders: 1,
                              findings: 1, links: 1, backend: "pure" });
      }
      return jsonResponse(
        { code: 422, message: "invalid case", detail: "conflict on 301" }, 422);
    });
    const app = makeApp(fetchFn as unknown as typeof fetch);
    const { addChip } = await import("../src/state.js");
    app.restore(addChip(app.sessionState, { id: 301, name: "fever", polarity: "present" }));

    await app.commitFindings();
    expect(app.sessionState.chips).toHaveLength(1);  // chips survive the error
    expect(app.sessionState.banner).toContain("invalid case");
    expect(app.sessionState.conflictIds).toContain(301);
    expect(document.getElementById("banner")?.classList.contains("hidden")).toBe(false);
    expect(document.querySelector(".chip.conflict")).not.toBeNull();
  });

  it("what-if preview leaves the committed view untouched until applied", async () => {
    const committed = makeResponse([[200, "mi", "Other", 0.9]], "fp1");
    const preview = makeResponse([[201, "pneumonia", "Infection", 0.8]], "fp1");
    let calls = 0;
    const fetchFn = vi.fn(async (url: RequestInfo | URL) => {
      if (String(url).endsWith("/api/health")) {
        return jsonResponse({ status: "ok", fingerprint: "f", disorders: 1,
                              findings: 1, links: 1, backend: "pure" });
      }
      calls += 1;
      return jsonResponse(calls === 1 ? committed : preview);
    });
    const app = makeApp(fetchFn as unknown as typeof fetch);
    const { addChip } = await import("../src/state.js");
    app.restore(addChip(app.sessionState, { id: 300, name: "chest pain", polarity: "present" }));

    await app.commitFindings();
    expect(app.sessionState.committed?.differential[0]?.disorder_id).toBe(200);

    await app.previewWhatIf({ id: 305, name: "troponin" }, "present");
    // committed view unchanged, preview pane visible
    expect(app.sessionState.committed?.differential[0]?.disorder_id).toBe(200);
    expect(app.sessionState.whatIf?.preview.differential[0]?.disorder_id).toBe(201);
    expect(app.sessionState.chips.map((c) => c.id)).toEqual([300]);
    expect(document.getElementById("preview")?.classList.contains("hidden")).toBe(false);

    // apply promotes hypothesis chip + preview response
    (document.querySelector("#preview .apply") as HTMLButtonElement).click();
    expect(app.sessionState.committed).toEqual(preview);
    expect(app.sessionState.chips.map((c) => c.id)).toEqual([300, 305]);
    expect(app.sessionState.whatIf).toBeNull();
  });

  it("previewing an already-committed finding is a no-op", async () => {
    const fetchFn = vi.fn(async () => jsonResponse({ results: [] }));
    const app = makeApp(fetchFn as unknown as typeof fetch);
    const { addChip } = await import("../src/state.js");
    app.restore(addChip(app.sessionState, { id: 300, name: "chest pain", polarity: "present" }));
    await app.previewWhatIf({ id: 300, name: "chest pain" }, "absent");
    expect(app.sessionState.whatIf).toBeNull();
  });
});

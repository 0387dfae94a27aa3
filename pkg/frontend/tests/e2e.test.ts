// Scripted end-to-end session against the real tutoring service running with
// mock providers: direct question, conceptual follow-up (routing badge),
// a two-hint debugging exchange (counter 1 -> 2), and one answer submission.
// Every rendered content string is checked against the server payload.

import { execFileSync, spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, writeFileSync, mkdirSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { App } from "../src/app.js";
import { NEXT_HINT_QUERY } from "../src/state.js";

const PORT = 8765;
const BASE = `http://127.0.0.1:${PORT}`;

let service: ChildProcess | null = null;

const COURSE_DOC = [
  "CS Course Notes",
  "1. Graph Search",
  "Breadth first search explores the graph level by level. The frontier queue holds " +
    "unexpanded nodes in FIFO order. Every node at the current depth is visited before " +
    "any deeper node, which is why the first path found is shortest.",
  "1",
  "\fCS Course Notes",
  "2. Heuristic Search",
  "The A star algorithm expands the node with the lowest f value. The f value adds the " +
    "path cost g to the heuristic estimate h. Admissible heuristics never overestimate " +
    "the remaining cost, so A star stays optimal.",
  "2",
].join("\n");

async function until(check: () => boolean, timeoutMs = 10000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (!check()) {
    if (Date.now() > deadline) throw new Error("timed out waiting for condition");
    await new Promise((resolve) => setTimeout(resolve, 25));
  }
}

async function waitForHealth(): Promise<void> {
  const deadline = Date.now() + 30000;
  for (;;) {
    try {
      const response = await fetch(`${BASE}/health`);
      if (response.ok) return;
    } catch {
      // not up yet
    }
    if (Date.now() > deadline) throw new Error("service did not come up");
    await new Promise((resolve) => setTimeout(resolve, 200));
  }
}

beforeAll(async () => {
  const work = mkdtempSync(join(tmpdir(), "kite-e2e-"));
  const docs = join(work, "docs");
  mkdirSync(docs);
  writeFileSync(join(docs, "notes.txt"), COURSE_DOC);
  execFileSync("kite", ["ingest", docs, "--out", join(work, "corpus.jsonl")]);
  execFileSync("kite", [
    "index", join(work, "corpus.jsonl"), "--out", join(work, "idx"), "--dim", "64",
  ]);
  const config = {
    index_dir: "idx",
    session_dir: "sessions",
    port: PORT,
    providers: { embedder: { implementation: "mock", dim: 64 } },
  };
  writeFileSync(join(work, "kite.json"), JSON.stringify(config));
  service = spawn("kite", ["serve", "--config", join(work, "kite.json")], {
    stdio: "ignore",
  });
  await waitForHealth();
});

afterAll(() => {
  service?.kill();
});

describe("scripted live session", () => {
  it("completes the tutoring flows with server-faithful rendering", async () => {
    document.body.innerHTML = `<div id="app"></div>`;
    const app = new App(document.getElementById("app") as HTMLElement, new ApiClient(BASE));
    await app.mount();
    expect(app.view.sessionId).not.toBeNull();

    const thread = () => document.querySelector(".thread") as HTMLElement;
    const lastTutorBubble = () => {
      const bubbles = thread().querySelectorAll(".msg.tutor");
      return bubbles[bubbles.length - 1] as HTMLElement;
    };
    const lastPayload = () => {
      const message = app.view.messages.filter((m) => m.role === "tutor").at(-1);
      if (!message?.payload) throw new Error("no tutor payload");
      return message.payload;
    };

    // 1. direct question
    await app.sendMessage("What is the frontier queue?");
    let payload = lastPayload();
    expect(payload.intent).toBe("direct_question");
    expect(lastTutorBubble().querySelector(".badge.intent")?.getAttribute("data-intent")).toBe(
      "direct_question",
    );
    expect(lastTutorBubble().querySelector(".text")?.textContent).toBe(payload.answer);
    // citations render only chunks present in this message's provenance
    const provenanceIds = new Set(payload.retrieval.map((entry) => entry.chunk_id));
    for (const chip of lastTutorBubble().querySelectorAll(".citation")) {
      expect(provenanceIds.has(chip.getAttribute("data-chunk-id") ?? "")).toBe(true);
    }

    // 2. conceptual follow-up shows the routing badge and follow-up card
    await app.sendMessage("Why is it shaped that way?");
    payload = lastPayload();
    expect(payload.intent).toBe("conceptual_question");
    expect((payload as { routing?: string }).routing).toBe("follow_up");
    const routingBadge = lastTutorBubble().querySelector(".badge.routing");
    expect(routingBadge?.getAttribute("data-routing")).toBe("follow_up");
    expect(lastTutorBubble().querySelector(".follow-up-text")?.textContent).toBe(
      payload.follow_up_question,
    );

    // 3. two-hint debugging exchange: counter 1 -> 2 via the Next hint button
    await app.sendMessage("There is a bug in my breadth first search code");
    payload = lastPayload();
    expect(payload.intent).toBe("debugging");
    expect(payload.hint_level).toBe(1);
    expect(app.view.hintCount).toBe(1);
    expect(document.querySelector(".hint-counter")?.textContent).toBe("Hints: 1");

    (lastTutorBubble().querySelector(".next-hint") as HTMLElement).click();
    await until(() => !app.view.pending && app.view.hintCount === 2);
    payload = lastPayload();
    expect(payload.intent).toBe("debugging");
    expect(payload.hint_level).toBe(2);
    expect((payload as { routing?: string }).routing).toBe("follow_up");
    expect(document.querySelector(".hint-counter")?.textContent).toBe("Hints: 2");
    // the student bubble for the hint request carries the scripted query
    const studentTexts = [...thread().querySelectorAll(".msg.student .text")].map(
      (el) => el.textContent,
    );
    expect(studentTexts).toContain(NEXT_HINT_QUERY);

    // 4. answer submission renders validation-shaped feedback
    (document.querySelector(".evaluate-form input[name=question]") as HTMLInputElement).value =
      "What holds the BFS frontier?";
    (document.querySelector(".evaluate-form textarea[name=answer]") as HTMLTextAreaElement).value =
      "The frontier is kept in a stack.";
    await app.submitAnswer();
    payload = lastPayload();
    expect(payload.intent).toBe("algorithm_validation");
    const feedbackBubble = lastTutorBubble();
    expect(feedbackBubble.classList.contains("feedback")).toBe(true);
    expect(feedbackBubble.querySelector(".text")?.textContent).toBe(payload.answer);
    const items = [...feedbackBubble.querySelectorAll(".guiding li")].map((el) => el.textContent);
    expect(items).toEqual(payload.guiding_questions);

    // rendered content strings all came from server payloads
    const tutorMessages = app.view.messages.filter((m) => m.role === "tutor");
    const bubbles = thread().querySelectorAll(".msg.tutor");
    expect(bubbles.length).toBe(tutorMessages.length);
    tutorMessages.forEach((message, i) => {
      expect(bubbles[i]?.querySelector(".text")?.textContent).toBe(message.payload?.answer);
    });

    // server transcript order matches the rendered order
    const transcript = (await new ApiClient(BASE).exportSession(
      app.view.sessionId as string,
    )) as { turns: { query: string }[] };
    const studentBubbleTexts = [...thread().querySelectorAll(".msg.student .text")]
      .map((el) => el.textContent)
      .slice(0, transcript.turns.length);
    expect(transcript.turns.map((t) => t.query)).toEqual(studentBubbleTexts);
  });
});

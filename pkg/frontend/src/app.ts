// DOM wiring: mounts the chat client onto a root element. One in-flight
// message per session; the composer is disabled while a reply is pending.

import { ApiClient, ApiError } from "./api.js";
import {
  NEXT_HINT_QUERY,
  applyFeedback,
  applyTutorReply,
  beginSend,
  createView,
  failPending,
  lastTutorMessage,
  setBanner,
  startSession,
} from "./state.js";
import {
  findProvenance,
  renderBanner,
  renderCitationPreview,
  renderHintCounter,
  renderThread,
} from "./render.js";
import type { UiSessionView } from "./types.js";

const SHELL = `
  <div class="banner-slot"></div>
  <header>
    <h1>KITE tutor</h1>
    <span class="hint-counter"></span>
    <button class="new-session">New session</button>
  </header>
  <main>
    <section class="thread" aria-live="polite"></section>
    <aside class="citation-panel"></aside>
  </main>
  <form class="composer">
    <textarea name="query" rows="2" placeholder="Ask about the course material"></textarea>
    <button type="submit" class="send">Send</button>
  </form>
  <details class="evaluate">
    <summary>Submit an answer for evaluation</summary>
    <form class="evaluate-form">
      <input name="question" placeholder="The question" />
      <textarea name="answer" rows="2" placeholder="Your answer"></textarea>
      <button type="submit" class="evaluate-send">Evaluate</button>
      <span class="evaluate-note"></span>
    </form>
  </details>
`;

export class App {
  view: UiSessionView = createView();
  private lastAction: (() => Promise<void>) | null = null;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
  ) {}

  async mount(): Promise<void> {
    this.root.innerHTML = SHELL;
    this.bind();
    this.redraw();
    await this.newSession();
  }

  private q<T extends HTMLElement>(selector: string): T {
    const el = this.root.querySelector<T>(selector);
    if (!el) throw new Error(`missing element: ${selector}`);
    return el;
  }

  private bind(): void {
    this.q<HTMLButtonElement>(".new-session").addEventListener("click", () => {
      void this.newSession();
    });
    this.q<HTMLFormElement>(".composer").addEventListener("submit", (event) => {
      event.preventDefault();
      const box = this.q<HTMLTextAreaElement>(".composer textarea");
      const query = box.value.trim();
      if (!query || this.view.pending) return;
      box.value = "";
      void this.sendMessage(query);
    });
    this.q<HTMLFormElement>(".evaluate-form").addEventListener("submit", (event) => {
      event.preventDefault();
      void this.submitAnswer();
    });
    // delegated clicks: citations, next hint, banner buttons
    this.root.addEventListener("click", (event) => {
      const target = event.target as HTMLElement | null;
      if (!target) return;
      if (target.classList.contains("citation")) {
        this.showCitation(target.dataset["chunkId"] ?? "");
      } else if (target.classList.contains("next-hint")) {
        if (!this.view.pending) void this.sendMessage(NEXT_HINT_QUERY);
      } else if (target.classList.contains("banner-dismiss")) {
        this.view = setBanner(this.view, null);
        this.redraw();
      } else if (target.classList.contains("banner-retry")) {
        const action = this.lastAction;
        this.view = setBanner(this.view, null);
        this.redraw();
        if (action) void action();
      }
    });
  }

  async newSession(): Promise<void> {
    this.lastAction = () => this.newSession();
    const button = this.q<HTMLButtonElement>(".new-session");
    button.disabled = true; // no duplicate sessions from double clicks
    try {
      const sessionId = await this.api.createSession();
      this.view = startSession(this.view, sessionId);
    } catch (err) {
      this.view = setBanner(this.view, describe(err));
    } finally {
      button.disabled = false;
      this.redraw();
    }
  }

  async sendMessage(query: string): Promise<void> {
    const sessionId = this.view.sessionId;
    if (!sessionId || this.view.pending) return;
    this.lastAction = () => this.sendMessage(query);
    this.view = beginSend(this.view, query);
    this.redraw();
    try {
      const payload = await this.api.sendMessage(sessionId, query);
      this.view = applyTutorReply(this.view, payload);
    } catch (err) {
      this.view = failPending(this.view, describe(err));
    }
    this.redraw();
  }

  async submitAnswer(): Promise<void> {
    const questionBox = this.q<HTMLInputElement>(".evaluate-form input[name=question]");
    const answerBox = this.q<HTMLTextAreaElement>(".evaluate-form textarea[name=answer]");
    const note = this.q<HTMLElement>(".evaluate-note");
    const question = questionBox.value.trim();
    const answer = answerBox.value.trim();
    if (!question || !answer) {
      note.textContent = "Both the question and your answer are required.";
      return; // client-side validation, no request
    }
    if (this.view.pending) return;
    note.textContent = "";
    this.lastAction = () => this.submitAnswer();
    this.view = { ...this.view, pending: true };
    this.redraw();
    try {
      const payload = await this.api.evaluateAnswer(question, answer);
      this.view = applyFeedback(this.view, question, answer, payload);
      answerBox.value = "";
    } catch (err) {
      this.view = failPending(this.view, describe(err));
    }
    this.redraw();
  }

  showCitation(chunkId: string): void {
    const message = lastTutorMessage(this.view);
    const payload = message?.payload;
    if (!payload) return;
    const entry = findProvenance(payload, chunkId);
    if (!entry) return; // only chunks from this message's provenance
    this.q(".citation-panel").innerHTML = renderCitationPreview(entry);
  }

  redraw(): void {
    this.q(".banner-slot").innerHTML = renderBanner(this.view);
    this.q(".thread").innerHTML = renderThread(this.view);
    this.q(".hint-counter").textContent = renderHintCounter(this.view);
    this.q<HTMLTextAreaElement>(".composer textarea").disabled = this.view.pending;
    this.q<HTMLButtonElement>(".composer .send").disabled =
      this.view.pending || !this.view.sessionId;
  }
}

function describe(err: unknown): string {
  if (err instanceof ApiError) return `${err.code}: ${err.message}`;
  return String(err);
}

export async function mountApp(root: HTMLElement, api: ApiClient): Promise<App> {
  const app = new App(root, api);
  await app.mount();
  return app;
}

// HTML builders. Every content string comes from a server payload field and
// is escaped before insertion; the UI adds only labels and layout.

import type {
  FeedbackPayload,
  MessagePayload,
  ProvenanceEntry,
  TraceStep,
  UiMessage,
  UiSessionView,
} from "./types.js";

export function escapeHtml(value: string): string {
  return value
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;")
    .replaceAll("'", "&#39;");
}

const INTENT_LABELS: Record<string, string> = {
  direct_question: "direct",
  conceptual_question: "conceptual",
  algorithm_validation: "validation",
  debugging: "debugging",
  algorithm_tracing: "tracing",
};

export function renderIntentBadge(intent: string, routing?: string): string {
  const label = INTENT_LABELS[intent] ?? intent;
  const routingBadge =
    routing === "follow_up" ? `<span class="badge routing" data-routing="follow_up">follow-up</span>` : "";
  return `<span class="badge intent" data-intent="${escapeHtml(intent)}">${escapeHtml(label)}</span>${routingBadge}`;
}

export function renderTraceTable(steps: TraceStep[]): string {
  const stateKeys = Array.from(new Set(steps.flatMap((s) => Object.keys(s.state))));
  const head = ["step", ...stateKeys, "action", "rationale"]
    .map((h) => `<th>${escapeHtml(h)}</th>`)
    .join("");
  const rows = steps
    .map((step) => {
      const stateCells = stateKeys
        .map((key) => `<td>${escapeHtml(formatStateValue(step.state[key]))}</td>`)
        .join("");
      return (
        `<tr data-step="${step.step_no}"><td>${step.step_no}</td>${stateCells}` +
        `<td>${escapeHtml(step.action)}</td><td>${escapeHtml(step.rationale)}</td></tr>`
      );
    })
    .join("");
  return `<table class="trace"><thead><tr>${head}</tr></thead><tbody>${rows}</tbody></table>`;
}

function formatStateValue(value: unknown): string {
  if (value == null) return "";
  if (Array.isArray(value)) return value.map(String).join(", ");
  if (typeof value === "object") return JSON.stringify(value);
  return String(value);
}

export function renderGuidingQuestions(questions: string[]): string {
  const items = questions.map((q) => `<li>${escapeHtml(q)}</li>`).join("");
  return `<ol class="guiding">${items}</ol>`;
}

export function renderFollowUpCard(question: string): string {
  return `<div class="follow-up-card"><span class="label">Think about:</span> <span class="follow-up-text">${escapeHtml(question)}</span></div>`;
}

export function renderCitations(citations: string[], retrieval: ProvenanceEntry[]): string {
  const byId = new Map(retrieval.map((entry) => [entry.chunk_id, entry]));
  const resolvable = citations.filter((cid) => byId.has(cid));
  if (resolvable.length === 0) return "";
  const chips = resolvable
    .map((cid) => `<button class="citation" data-chunk-id="${escapeHtml(cid)}">${escapeHtml(cid)}</button>`)
    .join(" ");
  return `<div class="citations">Sources: ${chips}</div>`;
}

export function renderCitationPreview(entry: ProvenanceEntry): string {
  const header = entry.section_header
    ? `<div class="preview-header">${escapeHtml(entry.section_header)}</div>`
    : "";
  const preview = entry.text.length > 240 ? entry.text.slice(0, 240) + "…" : entry.text;
  return (
    `<div class="citation-preview" data-chunk-id="${escapeHtml(entry.chunk_id)}">` +
    `<div class="preview-id">${escapeHtml(entry.chunk_id)} <span class="source">${escapeHtml(entry.source_class)}</span></div>` +
    `${header}<div class="preview-text">${escapeHtml(preview)}</div></div>`
  );
}

function renderTimestamp(at: number): string {
  const stamp = new Date(at).toLocaleTimeString();
  return `<time class="at" datetime="${new Date(at).toISOString()}">${escapeHtml(stamp)}</time>`;
}

export function renderMessage(message: UiMessage): string {
  if (message.role === "student") {
    return (
      `<div class="msg student"><div class="text">${escapeHtml(message.text)}</div>` +
      `${renderTimestamp(message.at)}</div>`
    );
  }
  const payload = message.payload;
  let extras = "";
  if (payload) {
    if (payload.intent === "conceptual_question" && payload.follow_up_question) {
      extras += renderFollowUpCard(payload.follow_up_question);
    }
    if (payload.guiding_questions && payload.guiding_questions.length > 0) {
      extras += renderGuidingQuestions(payload.guiding_questions);
    }
    if (payload.intent === "debugging" && payload.hint_level != null) {
      extras += `<div class="hint-row"><span class="hint-level">Hint ${payload.hint_level}</span>`;
      if (payload.learning_point) {
        extras += ` <span class="learning-point">${escapeHtml(payload.learning_point)}</span>`;
      }
      extras += ` <button class="next-hint">Next hint</button></div>`;
    }
    if (payload.trace_steps && payload.trace_steps.length > 0) {
      extras += renderTraceTable(payload.trace_steps);
      if (payload.final_result) {
        extras +=
          `<div class="final-result">Final path: ` +
          `${escapeHtml(payload.final_result.path.join(" -> "))} ` +
          `(cost ${payload.final_result.cost})</div>`;
      }
    }
    extras += renderCitations(payload.citations, payload.retrieval);
  }
  const badge = message.intent ? renderIntentBadge(message.intent, message.routing) : "";
  const feedbackClass = message.isFeedback ? " feedback" : "";
  return (
    `<div class="msg tutor${feedbackClass}">${badge}` +
    `<div class="text">${escapeHtml(message.text)}</div>${extras}` +
    `${renderTimestamp(message.at)}</div>`
  );
}

export function renderThread(view: UiSessionView): string {
  return view.messages.map(renderMessage).join("");
}

export function renderBanner(view: UiSessionView): string {
  if (!view.banner) return "";
  return (
    `<div class="banner" role="alert">${escapeHtml(view.banner)} ` +
    `<button class="banner-dismiss">dismiss</button> <button class="banner-retry">retry</button></div>`
  );
}

export function renderHintCounter(view: UiSessionView): string {
  return view.hintCount > 0 ? `Hints: ${view.hintCount}` : "";
}

export function renderFeedbackCard(payload: FeedbackPayload): string {
  // Evaluation, acknowledgement, and guiding questions only; the server never
  // sends a full-solution field and the card renders none.
  let html = `<div class="feedback-card"><div class="text">${escapeHtml(payload.answer)}</div>`;
  if (payload.guiding_questions && payload.guiding_questions.length > 0) {
    html += renderGuidingQuestions(payload.guiding_questions);
  }
  html += renderCitations(payload.citations, payload.retrieval);
  return html + "</div>";
}

export function findProvenance(
  payload: MessagePayload | FeedbackPayload,
  chunkId: string,
): ProvenanceEntry | undefined {
  return payload.retrieval.find((entry) => entry.chunk_id === chunkId);
}

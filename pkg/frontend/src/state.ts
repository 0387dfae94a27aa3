// Pure view-state transitions. The DOM layer renders whatever lives here;
// message order always mirrors the server transcript order.

import type { FeedbackPayload, MessagePayload, UiSessionView } from "./types.js";

export function createView(): UiSessionView {
  return { sessionId: null, messages: [], hintCount: 0, pending: false, banner: null };
}

export function startSession(view: UiSessionView, sessionId: string): UiSessionView {
  return { ...createView(), sessionId };
}

export function beginSend(view: UiSessionView, query: string): UiSessionView {
  return {
    ...view,
    pending: true,
    banner: null,
    messages: [...view.messages, { role: "student", text: query, at: Date.now() }],
  };
}

export function applyTutorReply(view: UiSessionView, payload: MessagePayload): UiSessionView {
  const hintCount =
    payload.intent === "debugging" && payload.hint_level != null
      ? payload.hint_level
      : view.hintCount;
  return {
    ...view,
    pending: false,
    hintCount,
    messages: [
      ...view.messages,
      {
        role: "tutor",
        text: payload.answer,
        at: Date.now(),
        intent: payload.intent,
        routing: payload.routing,
        payload,
      },
    ],
  };
}

export function applyFeedback(
  view: UiSessionView,
  question: string,
  answer: string,
  payload: FeedbackPayload,
): UiSessionView {
  return {
    ...view,
    pending: false,
    messages: [
      ...view.messages,
      { role: "student", text: `${question}\nMy answer: ${answer}`, at: Date.now() },
      {
        role: "tutor",
        text: payload.answer,
        at: Date.now(),
        intent: payload.intent,
        payload,
        isFeedback: true,
      },
    ],
  };
}

export function failPending(view: UiSessionView, message: string): UiSessionView {
  return { ...view, pending: false, banner: message };
}

export function setBanner(view: UiSessionView, message: string | null): UiSessionView {
  return { ...view, banner: message };
}

// Query sent by the "Next hint" affordance: short and anaphoric on purpose so
// the service routes it as a follow-up within the debugging strategy.
export const NEXT_HINT_QUERY = "What about the next hint?";

export function lastTutorMessage(view: UiSessionView) {
  for (let i = view.messages.length - 1; i >= 0; i--) {
    const message = view.messages[i];
    if (message && message.role === "tutor") return message;
  }
  return undefined;
}

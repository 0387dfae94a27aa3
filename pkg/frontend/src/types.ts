// Payload shapes of the tutoring service JSON API. The UI renders these
// verbatim; it never invents content of its own.

export interface TraceStep {
  step_no: number;
  state: Record<string, unknown>;
  action: string;
  rationale: string;
}

export interface FinalResult {
  path: string[];
  cost: number;
}

export interface TutorResponsePayload {
  intent: string;
  answer: string;
  follow_up_question: string | null;
  guiding_questions: string[] | null;
  hint_level: number | null;
  learning_point: string | null;
  trace_steps: TraceStep[] | null;
  final_result: FinalResult | null;
  citations: string[];
}

export interface ProvenanceEntry {
  chunk_id: string;
  doc_id: string;
  source_class: string;
  section_header: string | null;
  text: string;
  dense_score: number;
  bm25_raw: number;
  bm25_norm: number;
  hybrid_score: number;
  mmr_score: number | null;
  rerank_score: number | null;
  boosted_score: number | null;
  final_rank: number | null;
}

export interface MessagePayload extends TutorResponsePayload {
  routing: "follow_up" | "new_topic";
  retrieval: ProvenanceEntry[];
}

export interface FeedbackPayload extends TutorResponsePayload {
  retrieval: ProvenanceEntry[];
}

export interface ApiErrorBody {
  error: { code: string; message: string };
}

export interface UiMessage {
  role: "student" | "tutor";
  text: string;
  at: number; // client-side timestamp, UI chrome only
  intent?: string;
  routing?: string;
  payload?: MessagePayload | FeedbackPayload;
  isFeedback?: boolean;
}

export interface UiSessionView {
  sessionId: string | null;
  messages: UiMessage[];
  hintCount: number;
  pending: boolean;
  banner: string | null;
}

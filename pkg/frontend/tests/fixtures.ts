import type { MessagePayload, ProvenanceEntry } from "../src/types.js";

export function provenance(chunkId: string, text: string, rank: number): ProvenanceEntry {
  return {
    chunk_id: chunkId,
    doc_id: "doc",
    source_class: "official",
    section_header: "1. Graph Search",
    text,
    dense_score: 0.8,
    bm25_raw: 1.2,
    bm25_norm: 0.9,
    hybrid_score: 0.83,
    mmr_score: 0.7,
    rerank_score: 0.65,
    boosted_score: 0.95,
    final_rank: rank,
  };
}

export function messagePayload(overrides: Partial<MessagePayload> = {}): MessagePayload {
  return {
    intent: "direct_question",
    answer: "The frontier is kept in a queue.",
    follow_up_question: null,
    guiding_questions: null,
    hint_level: null,
    learning_point: null,
    trace_steps: null,
    final_result: null,
    citations: ["c001"],
    routing: "new_topic",
    retrieval: [
      provenance("c001", "BFS keeps its frontier in a FIFO queue.", 1),
      provenance("c002", "DFS uses a stack for the frontier.", 2),
    ],
    ...overrides,
  };
}

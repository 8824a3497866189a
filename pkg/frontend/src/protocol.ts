/** Wire types and message constructors for the hub protocol.
 *
 * The authoritative contract is schema/protocol_schema.json (a verified copy
 * of the hub's schema); the types here mirror the subset an annotator client
 * sends and receives. Every outgoing constructor produces an object that
 * validates against that schema, which tests/protocol.test.ts asserts.
 */

export type Role = "source" | "annotator" | "observer";

export interface PredictionBox {
  class_id: number;
  class_name: string;
  cx: number;
  cy: number;
  w: number;
  h: number;
  confidence: number;
}

export interface AnnotationBox {
  class_id: number;
  cx: number;
  cy: number;
  w: number;
  h: number;
}

export interface SipMessage {
  type: "sip";
  seq: number;
  ts: number;
  frame_id: string;
  width: number;
  height: number;
  data: string;
  model_version: string;
  boxes: PredictionBox[];
}

export interface RoundStatusMessage {
  type: "round_status";
  seq: number;
  ts: number;
  mode: "collecting" | "training";
  round: number;
  pending_count: number;
  overall_collected: number;
  raw_hades?: number;
  model_version: string | null;
}

export interface SaveAckMessage {
  type: "save_ack";
  seq: number;
  ts: number;
  frame_id: string;
  sample_id: string;
  round: number;
  pending_count: number;
  overall_collected: number;
}

export interface ModelUpdatedMessage {
  type: "model_updated";
  seq: number;
  ts: number;
  model_version: string;
}

export interface ErrorMessage {
  type: "error";
  seq: number;
  ts: number;
  code: string;
  message: string;
  in_reply_to_seq?: number;
}

export type ServerMessage =
  | SipMessage
  | RoundStatusMessage
  | SaveAckMessage
  | ModelUpdatedMessage
  | ErrorMessage;

/** Per-connection monotonically increasing seq, starting at 1. */
export class Sequencer {
  private last = 0;

  take(): number {
    this.last += 1;
    return this.last;
  }
}

export function makeHello(seq: number, ts: number, name: string): object {
  return { type: "hello", seq, ts, role: "annotator" as Role, name };
}

export function makeAnnotation(
  seq: number,
  ts: number,
  frameId: string,
  boxes: AnnotationBox[],
): object {
  return { type: "annotation", seq, ts, frame_id: frameId, boxes };
}

export function makeFinetuneRequest(seq: number, ts: number): object {
  return { type: "finetune_request", seq, ts };
}

// Fields the UI dereferences per type; anything missing or mistyped means
// the message is skipped rather than crashing the render loop.
const REQUIRED_FIELDS: Record<string, Record<string, string>> = {
  sip: {
    frame_id: "string",
    width: "number",
    height: "number",
    data: "string",
    model_version: "string",
    boxes: "array",
  },
  round_status: {
    mode: "string",
    round: "number",
    pending_count: "number",
    overall_collected: "number",
  },
  save_ack: {
    frame_id: "string",
    sample_id: "string",
    round: "number",
    pending_count: "number",
    overall_collected: "number",
  },
  model_updated: { model_version: "string" },
  error: { code: "string", message: "string" },
};

function fieldOk(value: unknown, kind: string): boolean {
  if (kind === "array") return Array.isArray(value);
  return typeof value === kind;
}

/** Tolerant parse of one server message; null means "skip with a notice". */
export function parseServerMessage(raw: string): ServerMessage | null {
  let value: unknown;
  try {
    value = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof value !== "object" || value === null || Array.isArray(value)) return null;
  const msg = value as Record<string, unknown>;
  const spec = REQUIRED_FIELDS[msg["type"] as string];
  if (spec === undefined) return null;
  for (const [field, kind] of Object.entries(spec)) {
    if (!fieldOk(msg[field], kind)) return null;
  }
  return msg as unknown as ServerMessage;
}

/** UI session state machine, free of DOM and socket concerns.
 *
 * Incoming server lines go through ingest(); user gestures come in as
 * method calls with image-pixel coordinates. Methods that talk back to the
 * hub return the message object to send (the caller owns the socket), or
 * null when the action is not currently allowed.
 *
 * Live frames replace the displayed one only when the user is not
 * mid-annotation; otherwise the newest arrival waits in a latest-wins slot
 * so the canvas is never yanked out from under a drag.
 */

import {
  DragCorners,
  PixelRect,
  clampRect,
  normalizedToPixel,
  pixelToNormalized,
  rectFromDrag,
  tooSmall,
} from "./geometry.js";
import {
  ErrorMessage,
  RoundStatusMessage,
  SaveAckMessage,
  Sequencer,
  SipMessage,
  makeAnnotation,
  makeFinetuneRequest,
  makeHello,
  parseServerMessage,
} from "./protocol.js";

export type ConnectionPhase = "idle" | "connecting" | "live" | "closed";

export interface CanvasBox {
  classId: number;
  rect: PixelRect;
  origin: "predicted" | "drawn";
  state: "kept" | "deleted";
  className?: string;
  confidence?: number;
}

export interface Frame {
  frameId: string;
  width: number;
  height: number;
  data: string;
  modelVersion: string;
}

export interface Notice {
  level: "info" | "warn" | "error";
  text: string;
}

const NOTICE_CAP = 30;

export class UiSession {
  phase: ConnectionPhase = "idle";
  status: RoundStatusMessage | null = null;
  frame: Frame | null = null;
  boxes: CanvasBox[] = [];
  draft: DragCorners | null = null;
  labeling = false;
  selectedClass = 0;
  classNames: string[] = ["door", "handle"];
  notices: Notice[] = [];

  private queued: { frame: Frame; boxes: CanvasBox[] } | null = null;
  private originals: CanvasBox[] = [];
  private dirty = false;
  private lockedSeq: number | null = null;
  private seq = new Sequencer();

  constructor(private now: () => number = Date.now) {}

  // --- connection lifecycle (driven by the socket owner) ---

  connecting(): void {
    this.phase = "connecting";
  }

  opened(name: string): object {
    this.phase = "live";
    return makeHello(this.seq.take(), this.now(), name);
  }

  closed(): void {
    this.phase = "closed";
    this.lockedSeq = null;
  }

  // --- derived state the view reads ---

  get midAnnotation(): boolean {
    return this.draft !== null || this.dirty || this.lockedSeq !== null;
  }

  get saveLocked(): boolean {
    return this.lockedSeq !== null;
  }

  get canSave(): boolean {
    return this.phase === "live" && this.frame !== null && this.lockedSeq === null;
  }

  get canFinetune(): boolean {
    return (
      this.phase === "live" &&
      this.status !== null &&
      this.status.mode === "collecting" &&
      this.status.pending_count > 0
    );
  }

  className(id: number): string {
    return this.classNames[id] ?? `class ${id}`;
  }

  // --- incoming traffic ---

  ingest(raw: string): void {
    const msg = parseServerMessage(raw);
    if (msg === null) {
      this.notice("warn", "skipped an unreadable message from the hub");
      return;
    }
    switch (msg.type) {
      case "sip":
        this.onSip(msg);
        break;
      case "round_status":
        this.onStatus(msg);
        break;
      case "save_ack":
        this.onSaveAck(msg);
        break;
      case "model_updated":
        this.notice("info", `model updated to ${msg.model_version}`);
        break;
      case "error":
        this.onError(msg);
        break;
    }
  }

  private onSip(msg: SipMessage): void {
    const frame: Frame = {
      frameId: msg.frame_id,
      width: msg.width,
      height: msg.height,
      data: msg.data,
      modelVersion: msg.model_version,
    };
    const boxes: CanvasBox[] = [];
    for (const b of msg.boxes) {
      this.classNames[b.class_id] = b.class_name;
      boxes.push({
        classId: b.class_id,
        className: b.class_name,
        confidence: b.confidence,
        origin: "predicted",
        state: "kept",
        rect: normalizedToPixel(b, msg.width, msg.height),
      });
    }
    if (this.frame !== null && this.midAnnotation) {
      this.queued = { frame, boxes };
      return;
    }
    this.show(frame, boxes);
  }

  private show(frame: Frame, boxes: CanvasBox[]): void {
    this.frame = frame;
    this.boxes = boxes;
    this.originals = boxes.map((b) => ({ ...b, rect: { ...b.rect } }));
    this.dirty = false;
    this.draft = null;
    this.queued = null;
  }

  private releaseFrame(): void {
    const next = this.queued;
    this.frame = null;
    this.boxes = [];
    this.originals = [];
    this.dirty = false;
    this.draft = null;
    this.lockedSeq = null;
    if (next !== null) this.show(next.frame, next.boxes);
  }

  private onStatus(msg: RoundStatusMessage): void {
    const was = this.status?.mode;
    this.status = msg;
    if (was === "training" && msg.mode === "collecting") {
      this.notice("info", `round finished; now collecting for round ${msg.round}`);
    }
  }

  private onSaveAck(msg: SaveAckMessage): void {
    this.notice(
      "info",
      `saved ${msg.sample_id} for round ${msg.round} (${msg.pending_count} pending)`,
    );
    this.releaseFrame();
  }

  private onError(msg: ErrorMessage): void {
    this.notice("error", `${msg.code}: ${msg.message}`);
    if (this.lockedSeq !== null && msg.in_reply_to_seq === this.lockedSeq) {
      // the save was refused (e.g. duplicate frame): release, move on
      this.releaseFrame();
    }
  }

  // --- user gestures (image-pixel coordinates) ---

  selectClass(id: number): void {
    if (id >= 0 && id < this.classNames.length) this.selectedClass = id;
  }

  beginDrag(x: number, y: number): void {
    if (!this.labeling || this.frame === null || this.lockedSeq !== null) return;
    this.draft = { x0: x, y0: y, x1: x, y1: y };
  }

  moveDrag(x: number, y: number): void {
    if (this.draft === null) return;
    this.draft.x1 = x;
    this.draft.y1 = y;
  }

  endDrag(x: number, y: number): void {
    const draft = this.draft;
    if (draft === null || this.frame === null) return;
    draft.x1 = x;
    draft.y1 = y;
    this.draft = null;
    const rect = clampRect(rectFromDrag(draft), this.frame.width, this.frame.height);
    if (tooSmall(rect)) return; // accidental click
    this.boxes.push({
      classId: this.selectedClass,
      rect,
      origin: "drawn",
      state: "kept",
    });
    this.dirty = true;
  }

  cancelDrag(): void {
    this.draft = null;
  }

  /** Delete toggles a prediction; a drawn box is simply removed. */
  toggleBox(index: number): void {
    const box = this.boxes[index];
    if (box === undefined) return;
    if (box.origin === "drawn") {
      this.boxes.splice(index, 1);
    } else {
      box.state = box.state === "kept" ? "deleted" : "kept";
    }
    this.dirty = true;
  }

  /** Per-frame reset: back to the predictions as they arrived. */
  resetFrame(): void {
    if (this.frame === null) return;
    this.boxes = this.originals.map((b) => ({ ...b, rect: { ...b.rect } }));
    this.draft = null;
    this.dirty = false;
  }

  // --- outgoing actions ---

  /**
   * Build the annotation message for the displayed frame, or null when
   * saving is not possible right now. An all-deleted or box-free frame is a
   * deliberate negative sample and goes through confirmEmpty first.
   */
  saveMessage(confirmEmpty: () => boolean): object | null {
    const frame = this.frame;
    if (frame === null || this.lockedSeq !== null || this.phase !== "live") return null;
    const kept = this.boxes.filter((b) => b.state === "kept");
    if (kept.length === 0 && !confirmEmpty()) return null;
    const boxes = kept.map((b) =>
      pixelToNormalized(
        clampRect(b.rect, frame.width, frame.height),
        b.classId,
        frame.width,
        frame.height,
      ),
    );
    const seq = this.seq.take();
    this.lockedSeq = seq;
    return makeAnnotation(seq, this.now(), frame.frameId, boxes);
  }

  finetuneMessage(): object | null {
    if (!this.canFinetune) return null;
    return makeFinetuneRequest(this.seq.take(), this.now());
  }

  // --- notices ---

  notice(level: Notice["level"], text: string): void {
    this.notices.push({ level, text });
    if (this.notices.length > NOTICE_CAP) this.notices.shift();
  }
}

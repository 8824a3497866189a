import { describe, expect, it } from "vitest";

import { UiSession } from "../src/session.js";

let serverSeq = 0;

function push(session: UiSession, type: string, fields: Record<string, unknown>): void {
  serverSeq += 1;
  session.ingest(JSON.stringify({ type, seq: serverSeq, ts: 1700000000000 + serverSeq, ...fields }));
}

function pushSip(
  session: UiSession,
  frameId: string,
  boxes: Record<string, unknown>[] = [],
  width = 640,
  height = 480,
): void {
  push(session, "sip", {
    frame_id: frameId,
    width,
    height,
    data: "aW1hZ2U=",
    model_version: "v0",
    boxes,
  });
}

function pushStatus(
  session: UiSession,
  mode: "collecting" | "training",
  pending: number,
  round = 1,
): void {
  push(session, "round_status", {
    mode,
    round,
    pending_count: pending,
    overall_collected: 0,
    model_version: "v0",
  });
}

function liveSession(): UiSession {
  const session = new UiSession(() => 1700000000000);
  session.connecting();
  session.opened("web-test");
  return session;
}

const PREDICTION = {
  class_id: 1,
  class_name: "handle",
  cx: 0.5,
  cy: 0.5,
  w: 0.25,
  h: 0.25,
  confidence: 0.87,
};

describe("frame display", () => {
  it("shows a sip and derives pixel boxes", () => {
    const s = liveSession();
    pushSip(s, "f-1", [PREDICTION]);
    expect(s.frame?.frameId).toBe("f-1");
    expect(s.boxes).toHaveLength(1);
    expect(s.boxes[0]!.rect).toEqual({ x: 240, y: 180, w: 160, h: 120 });
    expect(s.boxes[0]!.origin).toBe("predicted");
  });

  it("learns class names from predictions", () => {
    const s = liveSession();
    pushSip(s, "f-1", [{ ...PREDICTION, class_id: 2, class_name: "drawer" }]);
    expect(s.className(2)).toBe("drawer");
  });

  it("queues live frames latest-wins while mid-annotation", () => {
    const s = liveSession();
    s.labeling = true;
    pushSip(s, "f-1");
    s.beginDrag(10, 10);
    pushSip(s, "f-2");
    pushSip(s, "f-3");
    expect(s.frame?.frameId).toBe("f-1"); // canvas not yanked mid-drag
    s.endDrag(100, 100);
    const msg = s.saveMessage(() => true) as { frame_id: string };
    expect(msg.frame_id).toBe("f-1");
    push(s, "save_ack", {
      frame_id: "f-1",
      sample_id: "sample-000001",
      round: 1,
      pending_count: 1,
      overall_collected: 0,
    });
    expect(s.frame?.frameId).toBe("f-3"); // f-2 was superseded
  });

  it("replaces the frame immediately when idle", () => {
    const s = liveSession();
    pushSip(s, "f-1");
    pushSip(s, "f-2");
    expect(s.frame?.frameId).toBe("f-2");
  });

  it("skips unreadable messages with a notice", () => {
    const s = liveSession();
    pushSip(s, "f-1");
    s.ingest("{broken");
    s.ingest('{"type": "sip", "frame_id": "f-2"}');
    expect(s.frame?.frameId).toBe("f-1");
    expect(s.notices.filter((n) => n.level === "warn")).toHaveLength(2);
  });
});

describe("drawing", () => {
  it("requires labeling mode and a frame", () => {
    const s = liveSession();
    s.beginDrag(10, 10);
    expect(s.draft).toBeNull();
    pushSip(s, "f-1");
    s.beginDrag(10, 10);
    expect(s.draft).toBeNull(); // labeling off
    s.labeling = true;
    s.beginDrag(10, 10);
    expect(s.draft).not.toBeNull();
  });

  it("creates a box with the selected class", () => {
    const s = liveSession();
    s.labeling = true;
    pushSip(s, "f-1");
    s.selectClass(1);
    s.beginDrag(100, 100);
    s.moveDrag(150, 150);
    s.endDrag(200, 180);
    expect(s.boxes).toHaveLength(1);
    expect(s.boxes[0]).toMatchObject({
      classId: 1,
      origin: "drawn",
      rect: { x: 100, y: 100, w: 100, h: 80 },
    });
  });

  it("discards sub-4px jitter drags", () => {
    const s = liveSession();
    s.labeling = true;
    pushSip(s, "f-1");
    s.beginDrag(100, 100);
    s.endDrag(102, 103);
    expect(s.boxes).toHaveLength(0);
  });

  it("clamps drags past the frame edge", () => {
    const s = liveSession();
    s.labeling = true;
    pushSip(s, "f-1");
    s.beginDrag(600, 400);
    s.endDrag(900, 700);
    expect(s.boxes[0]!.rect).toEqual({ x: 600, y: 400, w: 40, h: 80 });
  });

  it("cancelDrag drops the draft without adding a box", () => {
    const s = liveSession();
    s.labeling = true;
    pushSip(s, "f-1");
    s.beginDrag(10, 10);
    s.cancelDrag();
    expect(s.draft).toBeNull();
    expect(s.boxes).toHaveLength(0);
  });
});

describe("box editing", () => {
  it("toggles predictions and removes drawn boxes", () => {
    const s = liveSession();
    s.labeling = true;
    pushSip(s, "f-1", [PREDICTION]);
    s.toggleBox(0);
    expect(s.boxes[0]!.state).toBe("deleted");
    s.toggleBox(0);
    expect(s.boxes[0]!.state).toBe("kept");
    s.beginDrag(10, 10);
    s.endDrag(60, 60);
    s.toggleBox(1);
    expect(s.boxes).toHaveLength(1);
  });

  it("resetFrame restores the arriving predictions", () => {
    const s = liveSession();
    s.labeling = true;
    pushSip(s, "f-1", [PREDICTION]);
    s.toggleBox(0);
    s.beginDrag(10, 10);
    s.endDrag(60, 60);
    s.resetFrame();
    expect(s.boxes).toHaveLength(1);
    expect(s.boxes[0]!.state).toBe("kept");
    expect(s.midAnnotation).toBe(false);
  });
});

describe("saving", () => {
  it("cannot save without a frame, and never references an unseen frame", () => {
    const s = liveSession();
    expect(s.saveMessage(() => true)).toBeNull();
    pushSip(s, "f-7");
    const msg = s.saveMessage(() => true) as { frame_id: string };
    expect(msg.frame_id).toBe("f-7"); // only ever the sip-delivered frame
  });

  it("round-trips a kept prediction through normalized coordinates", () => {
    const s = liveSession();
    pushSip(s, "f-1", [PREDICTION]);
    const msg = s.saveMessage(() => true) as {
      boxes: { class_id: number; cx: number; cy: number; w: number; h: number }[];
    };
    expect(msg.boxes).toHaveLength(1);
    const b = msg.boxes[0]!;
    expect(b.class_id).toBe(1);
    expect(Math.abs(b.cx - 0.5)).toBeLessThan(1e-9);
    expect(Math.abs(b.cy - 0.5)).toBeLessThan(1e-9);
    expect(Math.abs(b.w - 0.25)).toBeLessThan(1e-9);
    expect(Math.abs(b.h - 0.25)).toBeLessThan(1e-9);
  });

  it("locks the frame until the ack arrives", () => {
    const s = liveSession();
    pushSip(s, "f-1");
    expect(s.saveMessage(() => true)).not.toBeNull();
    expect(s.saveLocked).toBe(true);
    expect(s.saveMessage(() => true)).toBeNull(); // no double send
    expect(s.canSave).toBe(false);
    push(s, "save_ack", {
      frame_id: "f-1",
      sample_id: "sample-000001",
      round: 1,
      pending_count: 1,
      overall_collected: 0,
    });
    expect(s.saveLocked).toBe(false);
    expect(s.frame).toBeNull(); // consumed, waiting for the next sip
  });

  it("confirms before sending an empty negative sample", () => {
    const s = liveSession();
    pushSip(s, "f-1", [PREDICTION]);
    s.toggleBox(0); // delete the only prediction
    let asked = 0;
    expect(
      s.saveMessage(() => {
        asked += 1;
        return false;
      }),
    ).toBeNull();
    expect(asked).toBe(1);
    const msg = s.saveMessage(() => true) as { boxes: unknown[] };
    expect(msg.boxes).toEqual([]);
  });

  it("does not ask for confirmation when boxes are kept", () => {
    const s = liveSession();
    pushSip(s, "f-1", [PREDICTION]);
    let asked = 0;
    s.saveMessage(() => {
      asked += 1;
      return true;
    });
    expect(asked).toBe(0);
  });

  it("releases the frame when the save is refused", () => {
    const s = liveSession();
    pushSip(s, "f-1");
    const sent = s.saveMessage(() => true) as { seq: number };
    push(s, "error", {
      code: "duplicate_frame",
      message: "frame 'f-1' already saved",
      in_reply_to_seq: sent.seq,
    });
    expect(s.saveLocked).toBe(false);
    expect(s.frame).toBeNull();
    expect(s.notices.at(-1)?.level).toBe("error");
  });

  it("ignores errors about other messages while locked", () => {
    const s = liveSession();
    pushSip(s, "f-1");
    s.saveMessage(() => true);
    push(s, "error", { code: "bad_seq", message: "unrelated" });
    expect(s.saveLocked).toBe(true);
    expect(s.frame?.frameId).toBe("f-1");
  });
});

describe("fine-tuning", () => {
  it("is gated on collecting mode with pending samples", () => {
    const s = liveSession();
    expect(s.canFinetune).toBe(false); // no status yet
    pushStatus(s, "collecting", 0);
    expect(s.canFinetune).toBe(false); // nothing pending
    pushStatus(s, "collecting", 3);
    expect(s.canFinetune).toBe(true);
    expect(s.finetuneMessage()).not.toBeNull();
    pushStatus(s, "training", 3);
    expect(s.canFinetune).toBe(false); // button disabled during Training
    expect(s.finetuneMessage()).toBeNull();
    pushStatus(s, "collecting", 0, 2);
    expect(s.canFinetune).toBe(false);
  });

  it("announces the round transition and the new model", () => {
    const s = liveSession();
    pushStatus(s, "training", 2);
    pushStatus(s, "collecting", 0, 2);
    expect(s.notices.at(-1)?.text).toContain("round 2");
    push(s, "model_updated", { model_version: "v1" });
    expect(s.notices.at(-1)?.text).toContain("v1");
  });
});

describe("connection lifecycle", () => {
  it("hello carries the declared name and seq 1", () => {
    const s = new UiSession(() => 42);
    s.connecting();
    expect(s.phase).toBe("connecting");
    const hello = s.opened("web-9") as { type: string; seq: number; name: string; role: string };
    expect(hello).toMatchObject({ type: "hello", seq: 1, name: "web-9", role: "annotator" });
    s.closed();
    expect(s.phase).toBe("closed");
    expect(s.saveMessage(() => true)).toBeNull(); // nothing outgoing when closed
  });
});

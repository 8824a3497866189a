// @vitest-environment happy-dom
//
// Drives the real DOM (markup from index.html) with an injected socket,
// recording canvas, and instant image decode. This is the automated check
// for the release criterion: a 100x80 px drag on a 640x480 frame must leave
// the app as a schema-valid annotation that round-trips within 1 px, the
// fine-tune button must follow pushed round_status, and a zero-box frame
// must render and accept new boxes.

import { readFileSync } from "node:fs";
import { fileURLToPath } from "node:url";

import Ajv, { ValidateFunction } from "ajv";
import { beforeEach, describe, expect, it } from "vitest";

import { AnnotatorApp, WebSocketLike } from "../src/app.js";
import { Canvas2D } from "../src/canvas.js";
import { normalizedToPixel } from "../src/geometry.js";

const here = (rel: string) => fileURLToPath(new URL(rel, import.meta.url));

const validateWire: ValidateFunction = new Ajv().compile(
  JSON.parse(readFileSync(here("../schema/protocol_schema.json"), "utf-8")),
);

class FakeSocket implements WebSocketLike {
  onopen: ((ev?: unknown) => void) | null = null;
  onmessage: ((ev: { data: unknown }) => void) | null = null;
  onclose: ((ev?: unknown) => void) | null = null;
  onerror: ((ev?: unknown) => void) | null = null;
  sent: string[] = [];
  closed = false;

  send(data: string): void {
    this.sent.push(data);
  }

  close(): void {
    this.closed = true;
  }

  open(): void {
    this.onopen?.();
  }

  push(message: Record<string, unknown>): void {
    this.onmessage?.({ data: JSON.stringify(message) });
  }
}

type DrawOp = { op: string; args: unknown[] };

class RecordingCtx implements Canvas2D {
  lineWidth = 1;
  strokeStyle: string | CanvasGradient | CanvasPattern = "#000";
  fillStyle: string | CanvasGradient | CanvasPattern = "#000";
  font = "";
  ops: DrawOp[] = [];

  clearRect(...args: unknown[]): void {
    this.ops.push({ op: "clearRect", args });
  }
  fillRect(...args: unknown[]): void {
    this.ops.push({ op: "fillRect", args });
  }
  strokeRect(...args: unknown[]): void {
    this.ops.push({ op: "strokeRect", args });
  }
  fillText(...args: unknown[]): void {
    this.ops.push({ op: "fillText", args });
  }
  setLineDash(): void {}
  drawImage(...args: unknown[]): void {
    this.ops.push({ op: "drawImage", args });
  }

  reset(): void {
    this.ops = [];
  }

  count(op: string): number {
    return this.ops.filter((o) => o.op === op).length;
  }
}

interface Harness {
  app: AnnotatorApp;
  socket: FakeSocket;
  ctx: RecordingCtx;
  fireImageLoad: () => void;
  canvas: HTMLCanvasElement;
}

let serverSeq = 0;

function serverMsg(type: string, fields: Record<string, unknown>): Record<string, unknown> {
  serverSeq += 1;
  return { type, seq: serverSeq, ts: 1700000000000 + serverSeq, ...fields };
}

function mouse(canvas: HTMLCanvasElement, kind: string, x: number, y: number): void {
  canvas.dispatchEvent(new MouseEvent(kind, { clientX: x, clientY: y, bubbles: true }));
}

function lastSent(socket: FakeSocket): Record<string, unknown> {
  expect(socket.sent.length).toBeGreaterThan(0);
  return JSON.parse(socket.sent.at(-1)!) as Record<string, unknown>;
}

function setup(): Harness {
  const html = readFileSync(here("../index.html"), "utf-8");
  const body = /<body>([\s\S]*)<\/body>/.exec(html);
  if (body === null) throw new Error("index.html has no <body>");
  document.body.innerHTML = body[1]!;

  const socket = new FakeSocket();
  const ctx = new RecordingCtx();
  let onImageReady: (() => void) | null = null;
  const imageHandle = { fake: "image" };
  const app = new AnnotatorApp(document, {
    connect: () => socket,
    getContext: () => ctx,
    loadImage: (_data, onReady) => {
      onImageReady = onReady;
      return imageHandle as unknown as CanvasImageSource;
    },
    confirmEmpty: () => true,
    now: () => 1700000000500,
    clientName: "web-test",
  });
  app.start();

  const canvas = document.getElementById("canvas") as HTMLCanvasElement;
  canvas.getBoundingClientRect = () =>
    ({ left: 0, top: 0, x: 0, y: 0, width: 640, height: 480, right: 640, bottom: 480, toJSON: () => ({}) }) as DOMRect;

  (document.getElementById("wsurl") as HTMLInputElement).value = "ws://hub.test:9101/";
  (document.getElementById("connect") as HTMLButtonElement).click();
  return { app, socket, ctx, canvas, fireImageLoad: () => onImageReady?.() };
}

function byId<T extends HTMLElement>(id: string): T {
  return document.getElementById(id) as T;
}

beforeEach(() => {
  serverSeq = 0;
});

describe("annotator app in a browser document", () => {
  it("runs the drag-save-finetune scenario against the wire schema", () => {
    const h = setup();
    h.socket.open();

    // hello goes out first and is schema-valid
    expect(h.socket.sent).toHaveLength(1);
    const hello = lastSent(h.socket);
    expect(validateWire(hello)).toBe(true);
    expect(hello).toMatchObject({ type: "hello", role: "annotator", name: "web-test" });

    // greeting status: collecting, nothing pending -> fine-tune disabled
    h.socket.push(
      serverMsg("round_status", {
        mode: "collecting",
        round: 1,
        pending_count: 0,
        overall_collected: 0,
        model_version: "v0",
      }),
    );
    expect(byId("statusbar").textContent).toContain("Collecting(r1)");
    expect(byId<HTMLButtonElement>("finetune").disabled).toBe(true);

    // zero-box sip renders: scene drawn with the frame image, no box strokes
    h.ctx.reset();
    h.socket.push(
      serverMsg("sip", {
        frame_id: "frame-0007",
        width: 640,
        height: 480,
        data: "aW1hZ2U=",
        model_version: "v0",
        boxes: [],
      }),
    );
    expect(h.ctx.count("clearRect")).toBeGreaterThan(0);
    expect(h.ctx.count("drawImage")).toBe(1);
    expect(h.ctx.count("strokeRect")).toBe(0); // zero boxes
    h.ctx.reset();
    h.fireImageLoad(); // decode completion repaints
    expect(h.ctx.count("drawImage")).toBe(1);
    expect(byId("boxlist").children).toHaveLength(0);

    // ... and permits adding boxes: class 2 via keyboard, then a 100x80 drag
    document.dispatchEvent(new KeyboardEvent("keydown", { key: "2", bubbles: true }));
    expect(h.app.session.selectedClass).toBe(1);
    byId<HTMLButtonElement>("labeling").click();
    h.ctx.reset();
    mouse(h.canvas, "mousedown", 100, 100);
    mouse(h.canvas, "mousemove", 160, 150);
    expect(h.ctx.count("strokeRect")).toBeGreaterThan(0); // draft rectangle visible
    mouse(h.canvas, "mouseup", 200, 180);
    expect(byId("boxlist").children).toHaveLength(1);
    expect(byId("boxlist").textContent).toContain("handle");

    // save: schema-valid annotation that round-trips within 1 px
    byId<HTMLButtonElement>("save").click();
    const annotation = lastSent(h.socket) as {
      type: string;
      frame_id: string;
      boxes: { class_id: number; cx: number; cy: number; w: number; h: number }[];
    };
    expect(validateWire(annotation)).toBe(true);
    expect(annotation.type).toBe("annotation");
    expect(annotation.frame_id).toBe("frame-0007");
    expect(annotation.boxes).toHaveLength(1);
    expect(annotation.boxes[0]!.class_id).toBe(1);
    const back = normalizedToPixel(annotation.boxes[0]!, 640, 480);
    expect(Math.abs(back.x - 100)).toBeLessThanOrEqual(1);
    expect(Math.abs(back.y - 100)).toBeLessThanOrEqual(1);
    expect(Math.abs(back.w - 100)).toBeLessThanOrEqual(1);
    expect(Math.abs(back.h - 80)).toBeLessThanOrEqual(1);
    expect(byId<HTMLButtonElement>("save").disabled).toBe(true); // locked until ack

    // ack frees the canvas
    h.socket.push(
      serverMsg("save_ack", {
        frame_id: "frame-0007",
        sample_id: "sample-000001",
        round: 1,
        pending_count: 1,
        overall_collected: 0,
      }),
    );
    expect(byId("notices").textContent).toContain("sample-000001");

    // pending sample -> fine-tune enabled; Training status disables it again
    h.socket.push(
      serverMsg("round_status", {
        mode: "collecting",
        round: 1,
        pending_count: 1,
        overall_collected: 0,
        model_version: "v0",
      }),
    );
    const finetune = byId<HTMLButtonElement>("finetune");
    expect(finetune.disabled).toBe(false);
    finetune.click();
    const request = lastSent(h.socket);
    expect(validateWire(request)).toBe(true);
    expect(request["type"]).toBe("finetune_request");

    h.socket.push(
      serverMsg("round_status", {
        mode: "training",
        round: 1,
        pending_count: 1,
        overall_collected: 0,
        model_version: "v0",
      }),
    );
    expect(byId("statusbar").textContent).toContain("Training(r1)");
    expect(finetune.disabled).toBe(true);
    const sentBefore = h.socket.sent.length;
    finetune.click(); // disabled buttons may still fire events in test DOMs
    expect(h.socket.sent.length).toBe(sentBefore); // but nothing is sent

    // completion: new model toast, collecting resumes
    h.socket.push(serverMsg("model_updated", { model_version: "v1" }));
    h.socket.push(
      serverMsg("round_status", {
        mode: "collecting",
        round: 2,
        pending_count: 0,
        overall_collected: 1,
        model_version: "v1",
      }),
    );
    expect(byId("notices").textContent).toContain("v1");
    expect(byId("statusbar").textContent).toContain("Collecting(r2)");
    expect(byId("statusbar").textContent).toContain("model v1");

    // every message the app ever sent was schema-valid
    for (const raw of h.socket.sent) {
      expect(validateWire(JSON.parse(raw))).toBe(true);
    }
  });

  it("shows the retry banner when the connection drops and reconnects", () => {
    const h = setup();
    h.socket.open();
    expect(byId("banner").hidden).toBe(true);
    h.socket.onclose?.();
    expect(byId("banner").hidden).toBe(false);
    expect(byId("statusbar").textContent).toBe("disconnected");
    byId<HTMLButtonElement>("retry").click();
    h.socket.open();
    expect(byId("banner").hidden).toBe(true);
    expect(validateWire(lastSent(h.socket))).toBe(true); // fresh hello
  });

  it("surfaces hub errors verbatim and skips malformed pushes", () => {
    const h = setup();
    h.socket.open();
    h.socket.push(serverMsg("error", { code: "bad_role", message: "role already declared" }));
    expect(byId("notices").textContent).toContain("bad_role: role already declared");
    h.socket.onmessage?.({ data: "not json at all" });
    expect(byId("notices").textContent).toContain("skipped an unreadable message");
  });
});

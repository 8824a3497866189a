/** DOM and socket wiring around UiSession.
 *
 * Everything environment-shaped (socket factory, 2d context, image decode,
 * confirm dialog, clock) is injectable so the automated browser test can
 * drive the real DOM with fakes; main.ts instantiates with the defaults.
 */

import { Canvas2D, classColor, drawScene, boxLabel } from "./canvas.js";
import { UiSession } from "./session.js";

export interface WebSocketLike {
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  send(data: string): void;
  close(): void;
}

export interface AppOptions {
  connect?: (url: string) => WebSocketLike;
  getContext?: (canvas: HTMLCanvasElement) => Canvas2D | null;
  loadImage?: (data: string, onReady: () => void) => CanvasImageSource | null;
  confirmEmpty?: () => boolean;
  now?: () => number;
  clientName?: string;
}

function defaultLoadImage(data: string, onReady: () => void): CanvasImageSource {
  const img = new Image();
  img.onload = onReady;
  img.src = `data:image/png;base64,${data}`;
  return img;
}

export class AnnotatorApp {
  session = new UiSession();

  private ws: WebSocketLike | null = null;
  private ctx: Canvas2D | null = null;
  private image: CanvasImageSource | null = null;
  private imageFrameId: string | null = null;
  private lastUrl = "";
  private readonly opts: Required<AppOptions>;
  private readonly el: {
    wsurl: HTMLInputElement;
    connect: HTMLButtonElement;
    banner: HTMLElement;
    retry: HTMLButtonElement;
    statusbar: HTMLElement;
    canvas: HTMLCanvasElement;
    labeling: HTMLButtonElement;
    save: HTMLButtonElement;
    finetune: HTMLButtonElement;
    reset: HTMLButtonElement;
    palette: HTMLElement;
    boxlist: HTMLElement;
    notices: HTMLElement;
  };

  constructor(private doc: Document, opts: AppOptions = {}) {
    this.opts = {
      connect: opts.connect ?? ((url) => new WebSocket(url) as unknown as WebSocketLike),
      getContext: opts.getContext ?? ((c) => c.getContext("2d") as Canvas2D | null),
      loadImage: opts.loadImage ?? defaultLoadImage,
      confirmEmpty:
        opts.confirmEmpty ?? (() => window.confirm("Save with zero boxes (negative sample)?")),
      now: opts.now ?? Date.now,
      clientName: opts.clientName ?? `web-${Math.random().toString(36).slice(2, 8)}`,
    };
    const byId = <T extends HTMLElement>(id: string): T => {
      const node = doc.getElementById(id);
      if (node === null) throw new Error(`missing #${id} in document`);
      return node as T;
    };
    this.el = {
      wsurl: byId("wsurl"),
      connect: byId("connect"),
      banner: byId("banner"),
      retry: byId("retry"),
      statusbar: byId("statusbar"),
      canvas: byId("canvas"),
      labeling: byId("labeling"),
      save: byId("save"),
      finetune: byId("finetune"),
      reset: byId("reset"),
      palette: byId("palette"),
      boxlist: byId("boxlist"),
      notices: byId("notices"),
    };
  }

  start(): void {
    this.ctx = this.opts.getContext(this.el.canvas);
    this.wire();
    const query = new URLSearchParams(this.doc.location?.search ?? "");
    const fromQuery = query.get("ws");
    const host = this.doc.location?.host || "127.0.0.1:9101";
    this.el.wsurl.value = fromQuery ?? `ws://${host}/`;
    if (fromQuery !== null) this.connect(fromQuery);
    this.render();
  }

  connect(url: string): void {
    this.ws?.close();
    this.lastUrl = url;
    this.session = new UiSession(this.opts.now);
    this.image = null;
    this.imageFrameId = null;
    this.session.connecting();
    this.el.banner.hidden = true;
    let ws: WebSocketLike;
    try {
      ws = this.opts.connect(url);
    } catch {
      this.session.closed();
      this.el.banner.hidden = false;
      this.render();
      return;
    }
    this.ws = ws;
    ws.onopen = () => {
      this.send(this.session.opened(this.opts.clientName));
      this.render();
    };
    ws.onmessage = (ev) => {
      this.session.ingest(String(ev.data));
      this.syncImage();
      this.render();
    };
    ws.onclose = () => {
      this.session.closed();
      this.el.banner.hidden = false;
      this.render();
    };
    ws.onerror = () => {
      this.session.notice("error", "connection error");
      this.render();
    };
    this.render();
  }

  private send(message: object | null): void {
    if (message === null || this.ws === null) return;
    this.ws.send(JSON.stringify(message));
  }

  private wire(): void {
    this.el.connect.addEventListener("click", () => this.connect(this.el.wsurl.value.trim()));
    this.el.retry.addEventListener("click", () => this.connect(this.lastUrl || this.el.wsurl.value.trim()));
    this.el.labeling.addEventListener("click", () => {
      this.session.labeling = !this.session.labeling;
      this.render();
    });
    this.el.save.addEventListener("click", () => {
      this.send(this.session.saveMessage(this.opts.confirmEmpty));
      this.render();
    });
    this.el.finetune.addEventListener("click", () => {
      this.send(this.session.finetuneMessage());
      this.render();
    });
    this.el.reset.addEventListener("click", () => {
      this.session.resetFrame();
      this.render();
    });

    const canvas = this.el.canvas;
    canvas.addEventListener("mousedown", (ev) => {
      const p = this.canvasPoint(ev as MouseEvent);
      this.session.beginDrag(p.x, p.y);
      this.render();
    });
    canvas.addEventListener("mousemove", (ev) => {
      if (this.session.draft === null) return;
      const p = this.canvasPoint(ev as MouseEvent);
      this.session.moveDrag(p.x, p.y);
      this.render();
    });
    canvas.addEventListener("mouseup", (ev) => {
      const p = this.canvasPoint(ev as MouseEvent);
      this.session.endDrag(p.x, p.y);
      this.render();
    });
    canvas.addEventListener("mouseleave", () => {
      this.session.cancelDrag();
      this.render();
    });

    this.doc.addEventListener("keydown", (ev) => {
      const key = (ev as KeyboardEvent).key;
      const target = ev.target as HTMLElement | null;
      if (target !== null && target.tagName === "INPUT") return;
      if (key >= "1" && key <= "9") {
        this.session.selectClass(Number(key) - 1);
        this.render();
      }
    });
  }

  /** Map a mouse event to image-pixel coordinates on the canvas bitmap. */
  private canvasPoint(ev: MouseEvent): { x: number; y: number } {
    const canvas = this.el.canvas;
    const rect = canvas.getBoundingClientRect();
    const scaleX = rect.width > 0 ? canvas.width / rect.width : 1;
    const scaleY = rect.height > 0 ? canvas.height / rect.height : 1;
    return { x: (ev.clientX - rect.left) * scaleX, y: (ev.clientY - rect.top) * scaleY };
  }

  private syncImage(): void {
    const frame = this.session.frame;
    if (frame === null) {
      this.image = null;
      this.imageFrameId = null;
      return;
    }
    if (frame.frameId === this.imageFrameId) return;
    this.imageFrameId = frame.frameId;
    this.image = this.opts.loadImage(frame.data, () => this.render());
  }

  render(): void {
    const s = this.session;
    const frame = s.frame;
    const canvas = this.el.canvas;
    const width = frame?.width ?? 640;
    const height = frame?.height ?? 480;
    if (canvas.width !== width) canvas.width = width;
    if (canvas.height !== height) canvas.height = height;
    if (this.ctx !== null) {
      drawScene(
        this.ctx,
        { width, height, image: frame === null ? null : this.image, boxes: s.boxes, draft: s.draft },
        (id) => s.className(id),
      );
    }

    this.el.statusbar.textContent = this.statusText();
    this.el.save.disabled = !s.canSave;
    this.el.finetune.disabled = !s.canFinetune;
    this.el.reset.disabled = frame === null;
    this.el.labeling.textContent = s.labeling ? "labeling: on" : "labeling: off";
    this.el.labeling.classList.toggle("active", s.labeling);

    this.renderPalette();
    this.renderBoxList();
    this.renderNotices();
  }

  private statusText(): string {
    const s = this.session;
    if (s.phase === "idle") return "not connected";
    if (s.phase === "connecting") return "connecting...";
    if (s.phase === "closed") return "disconnected";
    const st = s.status;
    if (st === null) return "connected, waiting for status";
    const head =
      st.mode === "training" ? `Training(r${st.round})` : `Collecting(r${st.round})`;
    const model = st.model_version ?? "none";
    const frame = s.frame === null ? "" : ` | frame ${s.frame.frameId}`;
    return `${head} pending ${st.pending_count} total ${st.overall_collected} model ${model}${frame}`;
  }

  private renderPalette(): void {
    const s = this.session;
    this.el.palette.textContent = "";
    s.classNames.forEach((name, id) => {
      const btn = this.doc.createElement("button");
      btn.textContent = `${id + 1} ${name}`;
      btn.style.borderColor = classColor(id);
      btn.classList.toggle("active", id === s.selectedClass);
      btn.addEventListener("click", () => {
        s.selectClass(id);
        this.render();
      });
      this.el.palette.appendChild(btn);
    });
  }

  private renderBoxList(): void {
    const s = this.session;
    this.el.boxlist.textContent = "";
    s.boxes.forEach((box, i) => {
      const li = this.doc.createElement("li");
      if (box.state === "deleted") li.classList.add("deleted");
      const label = this.doc.createElement("span");
      label.textContent = `${boxLabel(box, box.className ?? s.className(box.classId))} (${box.origin})`;
      label.style.color = box.state === "deleted" ? "#6b6b6b" : classColor(box.classId);
      const btn = this.doc.createElement("button");
      btn.textContent =
        box.origin === "drawn" ? "remove" : box.state === "kept" ? "delete" : "restore";
      btn.addEventListener("click", () => {
        s.toggleBox(i);
        this.render();
      });
      li.appendChild(label);
      li.appendChild(btn);
      this.el.boxlist.appendChild(li);
    });
  }

  private renderNotices(): void {
    this.el.notices.textContent = "";
    for (const n of this.session.notices.slice(-5)) {
      const li = this.doc.createElement("li");
      li.textContent = n.text;
      li.className = n.level;
      this.el.notices.appendChild(li);
    }
  }
}

"""Network hub: the detect / rebroadcast / learn loop as an explicit state machine.

Sources and observers speak the line protocol over plain TCP; annotator UIs
speak the same schema over WebSocket text frames. The detector is a managed
subprocess fed frame lines on stdin and answering prediction lines on stdout;
the trainer is a one-shot command invoked per round.

Plugin command contracts (argv appended by the hub):
  detector: <cmd> --weights <path> --version <label>     (long-running, stdio)
  trainer:  <cmd> --dataset <root> --base-weights <path> --out-weights <path>
  embedder: <cmd> --inputs <list-file> --out <embeddings-file>
The embedder inputs file holds one "sample_id <image-path>" pair per line.

Concurrency: one asyncio loop owns all state. Handlers mutate state only in
synchronous sections and enqueue outgoing messages without awaiting, so no
interleaving can observe a half-applied transition. Each connection has a
writer task draining its queue, which fixes per-connection message order at
enqueue time (seq strictly increasing).
"""

from __future__ import annotations

import asyncio
import base64
import binascii
import json
import logging
import shlex
import shutil
import time
from collections import OrderedDict
from dataclasses import dataclass
from http import HTTPStatus
from pathlib import Path
from typing import Awaitable, Callable

import numpy as np
from websockets.asyncio.server import serve as ws_serve
from websockets.exceptions import ConnectionClosed

from . import diversity, protocol
from .annotations import (
    DEFAULT_CLASSES,
    AnnotationError,
    NormalizedBox,
    validate_box,
)
from .datastore import DataStore, DuplicateFrame, EmptyPendingPool
from .pngio import png_dimensions
from .protocol import ProtocolError, Sequencer

log = logging.getLogger("hitloop.hub")

MAX_LINE_BYTES = 32 * 2**20  # fits a base64 640x480 PNG with slack


class HubError(Exception):
    pass


class ConfigError(HubError):
    pass


class BindFailure(HubError):
    pass


class PluginSpawnFailure(HubError):
    pass


def now_ms() -> int:
    return time.time_ns() // 1_000_000


class LogicalClock:
    """Deterministic millisecond clock: each call advances by a fixed step."""

    def __init__(self, start_ms: int = 1_700_000_000_000, step_ms: int = 1):
        self._now = start_ms
        self._step = step_ms

    def __call__(self) -> int:
        value = self._now
        self._now += self._step
        return value


def _parse_listen(value) -> tuple[str, int]:
    if isinstance(value, str):
        host, _, port = value.rpartition(":")
        if not host or not port.isdigit():
            raise ConfigError(f"listen address must be host:port, got {value!r}")
        return host, int(port)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return str(value[0]), int(value[1])
    raise ConfigError(f"listen address must be host:port, got {value!r}")


def _parse_cmd(value, key: str) -> list[str]:
    if isinstance(value, str):
        parts = shlex.split(value)
    elif isinstance(value, list) and all(isinstance(v, str) for v in value):
        parts = list(value)
    else:
        raise ConfigError(f"{key} must be a command string or argv list")
    if not parts:
        raise ConfigError(f"{key} must not be empty")
    return parts


@dataclass
class HubConfig:
    listen_tcp: tuple[str, int]
    listen_ws: tuple[str, int]
    store_root: Path
    detector_cmd: list[str]
    trainer_cmd: list[str]
    embedder_cmd: list[str] | None = None
    cache_bound: int = 64
    bins: int = diversity.DEFAULT_BIN_COUNT
    static_dir: Path | None = None  # optional static-file route on the WS port

    REQUIRED = ("listen_tcp", "listen_ws", "store_root", "detector_cmd", "trainer_cmd")
    OPTIONAL = ("embedder_cmd", "cache_bound", "bins", "static_dir")

    @classmethod
    def from_dict(cls, raw: dict) -> "HubConfig":
        known = set(cls.REQUIRED) | set(cls.OPTIONAL)
        for key in raw:
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
        for key in cls.REQUIRED:
            if key not in raw:
                raise ConfigError(f"missing config key {key!r}")
        cache_bound = raw.get("cache_bound", 64)
        bins = raw.get("bins", diversity.DEFAULT_BIN_COUNT)
        if not isinstance(cache_bound, int) or cache_bound < 1:
            raise ConfigError("cache_bound must be a positive integer")
        if not isinstance(bins, int) or bins < 1:
            raise ConfigError("bins must be a positive integer")
        embedder = raw.get("embedder_cmd")
        static_dir = raw.get("static_dir")
        return cls(
            listen_tcp=_parse_listen(raw["listen_tcp"]),
            listen_ws=_parse_listen(raw["listen_ws"]),
            store_root=Path(raw["store_root"]),
            detector_cmd=_parse_cmd(raw["detector_cmd"], "detector_cmd"),
            trainer_cmd=_parse_cmd(raw["trainer_cmd"], "trainer_cmd"),
            embedder_cmd=_parse_cmd(embedder, "embedder_cmd") if embedder else None,
            cache_bound=cache_bound,
            bins=bins,
            static_dir=Path(static_dir) if static_dir else None,
        )

    @classmethod
    def from_file(cls, path) -> "HubConfig":
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config file must hold a JSON object")
        return cls.from_dict(raw)


@dataclass
class CachedFrame:
    frame_id: str
    width: int
    height: int
    data: str  # base64 PNG as received
    png_bytes: bytes
    source: "Connection"
    predictions: list[dict] | None = None
    model_version: str = ""


class Connection:
    """One network peer; owns its outgoing queue and seq counter."""

    def __init__(self, hub: "Hub", peer: str, raw_send: Callable[[str], Awaitable[None]]):
        self.hub = hub
        self.peer = peer
        self.role: str | None = None
        self.name: str | None = None
        self.last_seq_in = 0
        self._seq_out = Sequencer()
        self._queue: asyncio.Queue[str | None] = asyncio.Queue()
        self._raw_send = raw_send
        self._writer_task = asyncio.get_running_loop().create_task(self._drain())
        self.closed = False

    def enqueue(self, mtype: str, **payload) -> None:
        if self.closed:
            return
        message = protocol.make(mtype, self._seq_out.take(), self.hub.clock(), **payload)
        self._queue.put_nowait(protocol.encode(message))

    def enqueue_error(self, code: str, message: str, in_reply_to_seq: int | None = None) -> None:
        payload = {"code": code, "message": message}
        if in_reply_to_seq is not None:
            payload["in_reply_to_seq"] = in_reply_to_seq
        self.enqueue("error", **payload)

    async def _drain(self) -> None:
        while True:
            line = await self._queue.get()
            if line is None:
                return
            try:
                await self._raw_send(line)
            except (ConnectionError, ConnectionClosed):
                self.closed = True
                return

    async def close(self) -> None:
        self.closed = True
        self._queue.put_nowait(None)
        await self._writer_task


class DetectorProc:
    """Managed detector subprocess; restarted when weights change."""

    def __init__(self, hub: "Hub", cmd: list[str]):
        self.hub = hub
        self.cmd = cmd
        self.proc: asyncio.subprocess.Process | None = None
        self._reader_task: asyncio.Task | None = None
        self._seq = Sequencer()

    async def start(self, weights_path: str, version: str) -> None:
        argv = self.cmd + ["--weights", weights_path, "--version", version]
        try:
            self.proc = await asyncio.create_subprocess_exec(
                *argv,
                stdin=asyncio.subprocess.PIPE,
                stdout=asyncio.subprocess.PIPE,
                limit=MAX_LINE_BYTES,
            )
        except OSError as exc:
            raise PluginSpawnFailure(f"detector plugin failed to start: {exc}") from None
        self._seq = Sequencer()
        self._reader_task = asyncio.get_running_loop().create_task(self._read_loop())

    async def _read_loop(self) -> None:
        assert self.proc is not None and self.proc.stdout is not None
        while True:
            try:
                line = await self.proc.stdout.readline()
            except ValueError:
                log.warning("detector emitted an overlong line; ignoring")
                continue
            if not line:
                return
            try:
                message = protocol.parse_line(line)
            except ProtocolError as exc:
                log.warning("detector sent unusable line: %s", exc)
                continue
            if message["type"] != "predictions":
                log.warning("detector sent unexpected %s message", message["type"])
                continue
            self.hub.attach_predictions(message)

    def send_frame(self, frame: CachedFrame) -> None:
        if self.proc is None or self.proc.stdin is None or self.proc.returncode is not None:
            log.warning("detector unavailable; frame %s gets no predictions", frame.frame_id)
            return
        message = protocol.make(
            "frame",
            self._seq.take(),
            self.hub.clock(),
            frame_id=frame.frame_id,
            width=frame.width,
            height=frame.height,
            encoding="png-base64",
            data=frame.data,
        )
        self.proc.stdin.write(protocol.encode(message).encode("utf-8"))

    async def stop(self) -> None:
        if self.proc is None:
            return
        if self.proc.stdin is not None:
            self.proc.stdin.close()
        try:
            await asyncio.wait_for(self.proc.wait(), timeout=5)
        except asyncio.TimeoutError:
            self.proc.kill()
            await self.proc.wait()
        if self._reader_task is not None:
            await self._reader_task
        self.proc = None

    async def restart(self, weights_path: str, version: str) -> None:
        await self.stop()
        await self.start(weights_path, version)


class Hub:
    """Hub state machine plus its servers. Use start()/stop(), or run()."""

    def __init__(self, config: HubConfig, clock: Callable[[], int] | None = None):
        self.config = config
        self.clock = clock or now_ms
        self.store: DataStore | None = None
        self.mode = "collecting"
        self.training_round: int | None = None
        self.cache: "OrderedDict[str, CachedFrame]" = OrderedDict()
        self.saved_frames: set[str] = set()
        self.connections: list[Connection] = []
        self.detector: DetectorProc | None = None
        self._servers: list = []
        self._training_task: asyncio.Task | None = None
        self._lock_handle = None
        self.tcp_port: int | None = None
        self.ws_port: int | None = None

    # -- lifecycle -----------------------------------------------------------

    async def start(self) -> None:
        root = self.config.store_root
        if root.exists() and (root / "manifest.json").exists():
            self.store = DataStore.open(root, clock=self.clock)
        else:
            self.store = DataStore.create(root, DEFAULT_CLASSES, clock=self.clock)
        self._lock_handle = self.store.exclusive_lock()
        recovered = self.store.recover_interrupted()
        for round_no in recovered:
            log.warning("closed interrupted round %d as failed", round_no)
        for name, cmd in self._plugin_cmds():
            if shutil.which(cmd[0]) is None:
                raise PluginSpawnFailure(f"{name} plugin command not found: {cmd[0]!r}")
        self.detector = DetectorProc(self, self.config.detector_cmd)
        current = self.store.current_model()
        weights = str(self.store.root / current.weights_path) if current else ""
        await self.detector.start(weights, current.version if current else "")
        await self._bind_servers()

    def _plugin_cmds(self):
        yield "detector", self.config.detector_cmd
        yield "trainer", self.config.trainer_cmd
        if self.config.embedder_cmd:
            yield "embedder", self.config.embedder_cmd

    async def _bind_servers(self) -> None:
        host, port = self.config.listen_tcp
        try:
            tcp_server = await asyncio.start_server(
                self._tcp_client, host, port, limit=MAX_LINE_BYTES
            )
        except OSError as exc:
            raise BindFailure(f"cannot bind TCP {host}:{port}: {exc}") from None
        self.tcp_port = tcp_server.sockets[0].getsockname()[1]
        self._servers.append(tcp_server)
        host, port = self.config.listen_ws
        try:
            ws_server = await ws_serve(
                self._ws_client,
                host,
                port,
                max_size=MAX_LINE_BYTES,
                process_request=self._maybe_static,
            )
        except OSError as exc:
            raise BindFailure(f"cannot bind WebSocket {host}:{port}: {exc}") from None
        self.ws_port = ws_server.sockets[0].getsockname()[1]
        self._servers.append(ws_server)

    async def stop(self) -> None:
        if self._training_task is not None and not self._training_task.done():
            self._training_task.cancel()
            try:
                await self._training_task
            except asyncio.CancelledError:
                pass
        for server in self._servers:
            server.close()
            await server.wait_closed()
        self._servers.clear()
        for conn in list(self.connections):
            await conn.close()
        self.connections.clear()
        if self.detector is not None:
            await self.detector.stop()
        if self._lock_handle is not None:
            self._lock_handle.release()
            self._lock_handle = None

    async def run(self) -> None:
        """Serve until the surrounding task is cancelled."""
        await self.start()
        log.info("hub ready: tcp=%s ws=%s", self.tcp_port, self.ws_port)
        try:
            await asyncio.Event().wait()
        finally:
            await self.stop()

    # -- static file route -----------------------------------------------------

    def _maybe_static(self, connection, request):
        if self.config.static_dir is None:
            return None
        if "upgrade" in request.headers.get("Connection", "").lower():
            return None
        name = request.path.lstrip("/") or "index.html"
        target = (self.config.static_dir / name).resolve()
        try:
            target.relative_to(self.config.static_dir.resolve())
        except ValueError:
            return connection.respond(HTTPStatus.FORBIDDEN, "forbidden\n")
        if not target.is_file():
            return connection.respond(HTTPStatus.NOT_FOUND, "not found\n")
        types = {".html": "text/html", ".js": "text/javascript",
                 ".css": "text/css", ".json": "application/json"}
        response = connection.respond(HTTPStatus.OK, target.read_text(encoding="utf-8"))
        ctype = types.get(target.suffix)
        if ctype:
            response.headers["Content-Type"] = f"{ctype}; charset=utf-8"
        return response

    # -- connection handling ---------------------------------------------------

    async def _tcp_client(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter):
        peername = writer.get_extra_info("peername")
        peer = f"tcp:{peername[0]}:{peername[1]}" if peername else "tcp:?"

        async def raw_send(line: str) -> None:
            writer.write(line.encode("utf-8"))
            await writer.drain()

        conn = Connection(self, peer, raw_send)
        self.connections.append(conn)
        try:
            while True:
                try:
                    line = await reader.readline()
                except ValueError:
                    conn.enqueue_error(protocol.E_MALFORMED_LINE, "line exceeds size limit")
                    break
                if not line:
                    break
                await self.handle_line(conn, line)
        except ConnectionError:
            pass
        finally:
            await self._drop_connection(conn)
            writer.close()

    async def _ws_client(self, websocket):
        peer = f"ws:{websocket.remote_address}"

        async def raw_send(line: str) -> None:
            await websocket.send(line)

        conn = Connection(self, peer, raw_send)
        self.connections.append(conn)
        try:
            async for raw in websocket:
                await self.handle_line(conn, raw)
        except ConnectionClosed:
            pass
        finally:
            await self._drop_connection(conn)

    async def _drop_connection(self, conn: Connection) -> None:
        if conn in self.connections:
            self.connections.remove(conn)
        await conn.close()

    def _peers(self, *roles: str) -> list[Connection]:
        return [c for c in self.connections if c.role in roles and not c.closed]

    def broadcast(self, roles: tuple[str, ...], mtype: str, **payload) -> None:
        for conn in self._peers(*roles):
            conn.enqueue(mtype, **payload)

    # -- message dispatch --------------------------------------------------------

    async def handle_line(self, conn: Connection, raw) -> None:
        try:
            message = protocol.parse_line(raw)
        except ProtocolError as exc:
            conn.enqueue_error(exc.code, str(exc))
            return
        seq = message["seq"]
        if seq <= conn.last_seq_in:
            conn.enqueue_error(
                protocol.E_BAD_SEQ,
                f"seq {seq} not greater than last seen {conn.last_seq_in}",
                in_reply_to_seq=seq,
            )
            return
        conn.last_seq_in = seq
        mtype = message["type"]
        if mtype == "hello":
            self._on_hello(conn, message)
        elif conn.role is None:
            conn.enqueue_error(
                protocol.E_BAD_ROLE, "hello must precede any other message", seq
            )
        elif mtype == "frame":
            self._on_frame(conn, message)
        elif mtype == "annotation":
            self._on_annotation(conn, message)
        elif mtype == "finetune_request":
            self._on_finetune(conn, message)
        else:
            conn.enqueue_error(
                protocol.E_BAD_ROLE, f"{mtype} messages are not accepted from clients", seq
            )

    def _on_hello(self, conn: Connection, message: dict) -> None:
        if conn.role is not None:
            conn.enqueue_error(
                protocol.E_BAD_ROLE, "role already declared for this connection",
                message["seq"],
            )
            return
        conn.role = message["role"]
        conn.name = message["name"]
        if conn.role in ("annotator", "observer"):
            conn.enqueue("round_status", **self._status_payload())

    def _status_payload(self) -> dict:
        assert self.store is not None
        current = self.store.current_model()
        if self.mode == "training":
            round_no = self.training_round
        else:
            round_no = self.store.next_round_number()
        payload = {
            "mode": self.mode,
            "round": round_no,
            "pending_count": len(self.store.pending_samples()),
            "overall_collected": self.store.overall_collected(),
            "model_version": current.version if current else None,
        }
        raw = self.store.last_raw_hades()
        if raw is not None:
            payload["raw_hades"] = raw
        return payload

    def _push_status(self) -> None:
        self.broadcast(("annotator", "observer"), "round_status", **self._status_payload())

    # -- frames -----------------------------------------------------------------

    def _on_frame(self, conn: Connection, message: dict) -> None:
        if conn.role != "source":
            conn.enqueue_error(
                protocol.E_BAD_ROLE, "only source connections may send frames",
                message["seq"],
            )
            return
        frame_id = message["frame_id"]
        try:
            png = base64.b64decode(message["data"], validate=True)
            width, height = png_dimensions(png)
        except (binascii.Error, ValueError) as exc:
            conn.enqueue_error(
                protocol.E_MALFORMED_FRAME, f"frame payload undecodable: {exc}",
                message["seq"],
            )
            return
        if (width, height) != (message["width"], message["height"]):
            conn.enqueue_error(
                protocol.E_MALFORMED_FRAME,
                f"declared {message['width']}x{message['height']} but payload is "
                f"{width}x{height}",
                message["seq"],
            )
            return
        if frame_id in self.saved_frames:
            conn.enqueue_error(
                protocol.E_DUPLICATE_FRAME, f"frame {frame_id!r} was already saved",
                message["seq"],
            )
            return
        # re-sent unsaved frame replaces its cache entry as the newest
        self.cache.pop(frame_id, None)
        if len(self.cache) >= self.config.cache_bound:
            evicted_id, _ = self.cache.popitem(last=False)
            conn.enqueue_error(
                protocol.E_BACKPRESSURE,
                f"cache full: evicted oldest unannotated frame {evicted_id!r}",
                message["seq"],
            )
        frame = CachedFrame(
            frame_id=frame_id,
            width=message["width"],
            height=message["height"],
            data=message["data"],
            png_bytes=png,
            source=conn,
        )
        self.cache[frame_id] = frame
        assert self.detector is not None
        self.detector.send_frame(frame)

    def attach_predictions(self, message: dict) -> None:
        frame = self.cache.get(message["frame_id"])
        if frame is None:
            log.warning("predictions for unknown frame %r dropped", message["frame_id"])
            return
        frame.predictions = message["boxes"]
        frame.model_version = message["model_version"]
        self.broadcast(
            ("annotator", "observer"),
            "sip",
            frame_id=frame.frame_id,
            width=frame.width,
            height=frame.height,
            data=frame.data,
            model_version=frame.model_version,
            boxes=frame.predictions,
        )

    # -- annotations --------------------------------------------------------------

    def _on_annotation(self, conn: Connection, message: dict) -> None:
        assert self.store is not None
        if conn.role != "annotator":
            conn.enqueue_error(
                protocol.E_BAD_ROLE, "only annotator connections may send annotations",
                message["seq"],
            )
            return
        frame_id = message["frame_id"]
        if frame_id in self.saved_frames:
            conn.enqueue_error(
                protocol.E_DUPLICATE_FRAME, f"frame {frame_id!r} was already saved",
                message["seq"],
            )
            return
        frame = self.cache.get(frame_id)
        if frame is None:
            conn.enqueue_error(
                protocol.E_UNKNOWN_FRAME, f"frame {frame_id!r} is not in the live cache",
                message["seq"],
            )
            return
        try:
            boxes = [
                validate_box(
                    NormalizedBox(b["class_id"], b["cx"], b["cy"], b["w"], b["h"]),
                    self.store.class_map,
                )
                for b in message["boxes"]
            ]
        except AnnotationError as exc:
            conn.enqueue_error(
                protocol.E_INVALID_BOXES, f"annotation rejected: {exc}", message["seq"]
            )
            return
        try:
            record = self.store.add_sample(frame.png_bytes, boxes, frame_id)
        except DuplicateFrame as exc:
            conn.enqueue_error(protocol.E_DUPLICATE_FRAME, str(exc), message["seq"])
            return
        self.saved_frames.add(frame_id)
        del self.cache[frame_id]
        round_no = (
            self.training_round + 1
            if self.mode == "training"
            else self.store.next_round_number()
        )
        self.broadcast(
            ("annotator",),
            "save_ack",
            frame_id=frame_id,
            sample_id=record.sample_id,
            round=round_no,
            pending_count=len(self.store.pending_samples()),
            overall_collected=self.store.overall_collected(),
        )
        self._push_status()

    # -- fine-tuning rounds ----------------------------------------------------------

    def _on_finetune(self, conn: Connection, message: dict) -> None:
        assert self.store is not None
        if conn.role != "annotator":
            conn.enqueue_error(
                protocol.E_BAD_ROLE, "only annotator connections may request fine-tuning",
                message["seq"],
            )
            return
        if self.mode == "training":
            conn.enqueue_error(
                protocol.E_ALREADY_TRAINING,
                f"round {self.training_round} is already training", message["seq"],
            )
            conn.enqueue("round_status", **self._status_payload())
            return
        try:
            round_no, samples = self.store.snapshot_round()
        except EmptyPendingPool as exc:
            conn.enqueue_error(protocol.E_EMPTY_PENDING_POOL, str(exc), message["seq"])
            return
        self.mode = "training"
        self.training_round = round_no
        self._push_status()
        self._training_task = asyncio.get_running_loop().create_task(
            self._train_round(round_no, samples)
        )

    async def _train_round(self, round_no: int, samples) -> None:
        assert self.store is not None
        run_dir = self.store.root / ".runs" / f"round-{round_no:04d}"
        run_dir.mkdir(parents=True, exist_ok=True)
        raw_hades = await self._compute_hades(round_no, samples, run_dir)
        current = self.store.current_model()
        base = str(self.store.root / current.weights_path) if current else ""
        out_path = run_dir / "weights.out"
        argv = self.config.trainer_cmd + [
            "--dataset", str(self.store.root),
            "--base-weights", base,
            "--out-weights", str(out_path),
        ]
        detail = None
        try:
            rc = await self._run_oneshot(argv)
            if rc != 0:
                detail = f"trainer exited with status {rc}"
            elif not out_path.exists():
                detail = "trainer exited 0 but wrote no weights file"
        except OSError as exc:
            detail = f"trainer failed to launch: {exc}"
        if detail is None:
            weights = out_path.read_bytes()
            version = self.store.register_model(
                weights, current.version if current else None, round_no
            )
            self.store.record_round_result(
                round_no, raw_hades, "success", produced_model=version.version
            )
            self.mode = "collecting"
            self.training_round = None
            await self.detector.restart(
                str(self.store.root / version.weights_path), version.version
            )
            self.broadcast(
                ("annotator", "observer"), "model_updated", model_version=version.version
            )
        else:
            log.warning("round %d failed: %s", round_no, detail)
            self.store.record_round_result(
                round_no, raw_hades, "failure", failure_detail=detail
            )
            self.mode = "collecting"
            self.training_round = None
        self._push_status()

    @staticmethod
    async def _run_oneshot(argv: list[str]) -> int:
        """Run a plugin command to completion; kill it if we get cancelled."""
        proc = await asyncio.create_subprocess_exec(*argv)
        try:
            return await proc.wait()
        except asyncio.CancelledError:
            proc.kill()
            await proc.wait()
            raise

    async def _compute_hades(self, round_no: int, samples, run_dir: Path) -> float | None:
        """Round diversity via the embedder plugin; None means "unscored"."""
        assert self.store is not None
        if self.config.embedder_cmd is None:
            return None
        inputs = run_dir / "inputs.txt"
        lines = [f"{s.sample_id} {self.store.root / s.image_path}\n" for s in samples]
        inputs.write_text("".join(lines), encoding="utf-8")
        emb_path = run_dir / "embeddings.txt"
        argv = self.config.embedder_cmd + ["--inputs", str(inputs), "--out", str(emb_path)]
        try:
            rc = await self._run_oneshot(argv)
        except OSError as exc:
            log.warning("embedder failed to launch: %s", exc)
            return None
        if rc != 0 or not emb_path.exists():
            log.warning("embedder exited %s; round %d unscored", rc, round_no)
            return None
        try:
            by_id = diversity.load_embeddings(emb_path)
        except diversity.DiversityError as exc:
            log.warning("embedder output unusable: %s", exc)
            return None
        missing = [s.sample_id for s in samples if s.sample_id not in by_id]
        if missing:
            log.warning("embeddings missing for %s; round unscored", missing)
            return None
        features = np.stack([by_id[s.sample_id] for s in samples])
        labels = []
        for sample in samples:
            for box in self.store.label_boxes(sample):
                labels.append(self.store.class_map.name_for(box.class_id))
        f_ent = diversity.feature_entropy(features, self.config.bins)
        l_ent = diversity.label_entropy(labels) if labels else 0.0
        return diversity.harmonic_diversity(f_ent, l_ent)


async def run_hub(config: HubConfig, clock: Callable[[], int] | None = None) -> None:
    """Entry point for `serve`: runs until cancelled (e.g. SIGINT)."""
    hub = Hub(config, clock=clock)
    await hub.run()

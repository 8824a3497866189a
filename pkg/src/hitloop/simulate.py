"""Scripted end-to-end teaching session against an in-process hub.

A scripted source streams fixture frames over TCP; a scripted annotator
answers every SIP over WebSocket with the ground-truth boxes of that frame
and triggers fine-tuning every ``per_round`` saves. All clients run in one
orchestrator coroutine, so the message interleaving is fixed, and a logical
clock stamps every timestamp: two runs with the same seed produce
byte-identical store documents.
"""

from __future__ import annotations

import asyncio
import base64
import random
import sys
from dataclasses import dataclass
from pathlib import Path

from websockets.asyncio.client import connect as ws_connect

from . import protocol
from .annotations import ClassMap, parse_label_file
from .datastore import DataStore
from .hub import MAX_LINE_BYTES, Hub, HubConfig, LogicalClock
from .pngio import png_dimensions
from .reporting import ReportRow, build_report

STEP_TIMEOUT = 60.0
INITIAL_WEIGHTS = b"hitloop-mock-weights-v0\n"


class SimulationError(Exception):
    pass


@dataclass
class SimulationResult:
    store_root: Path
    rows: list[ReportRow]
    saves: int
    rounds_completed: int
    trainer_invocations: int


def discover_frames(frames_dir) -> tuple[ClassMap, list[tuple[str, Path, Path]]]:
    frames_dir = Path(frames_dir)
    classes_file = frames_dir / "classes.txt"
    if not classes_file.exists():
        raise SimulationError(f"frames dir {frames_dir} has no classes.txt")
    class_map = ClassMap.from_text(classes_file.read_text(encoding="utf-8"))
    image_dir = frames_dir / "images" if (frames_dir / "images").is_dir() else frames_dir
    label_dir = frames_dir / "labels" if (frames_dir / "labels").is_dir() else frames_dir
    frames = []
    for image in sorted(image_dir.glob("*.png")):
        label = label_dir / (image.stem + ".txt")
        if not label.exists():
            raise SimulationError(f"frame {image.name} has no label file")
        frames.append((image.stem, image, label))
    if not frames:
        raise SimulationError(f"no frames under {frames_dir}")
    return class_map, frames


def _default_config(workdir: Path, store_root: Path, seed: int, bins: int) -> dict:
    py = sys.executable
    return {
        "listen_tcp": "127.0.0.1:0",
        "listen_ws": "127.0.0.1:0",
        "store_root": str(store_root),
        "detector_cmd": [py, "-m", "hitloop.mocks.detector", "--seed", str(seed)],
        "trainer_cmd": [py, "-m", "hitloop.mocks.trainer", "--log", str(workdir / "trainer.log")],
        "embedder_cmd": [py, "-m", "hitloop.mocks.embedder"],
        "bins": bins,
    }


class _WireClient:
    """Send/expect helpers over one already-open transport."""

    def __init__(self, clock, send_line, recv_line):
        self.clock = clock
        self._send_line = send_line
        self._recv_line = recv_line
        self._seq = protocol.Sequencer()

    async def send(self, mtype: str, **payload) -> None:
        message = protocol.make(mtype, self._seq.take(), self.clock(), **payload)
        await self._send_line(protocol.encode(message))

    async def recv(self) -> dict:
        raw = await asyncio.wait_for(self._recv_line(), STEP_TIMEOUT)
        message = protocol.parse_line(raw)
        if message["type"] == "error":
            raise SimulationError(f"hub error: {message['code']}: {message['message']}")
        return message

    async def expect(self, mtype: str) -> dict:
        # pushes we are not waiting for (round_status etc.) are skipped
        while True:
            message = await self.recv()
            if message["type"] == mtype:
                return message


async def run_simulation(
    frames_dir,
    rounds: int,
    per_round: int,
    seed: int,
    workdir,
    bins: int = 10,
    config_overrides: dict | None = None,
    jitter: bool = False,
) -> SimulationResult:
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    store_root = workdir / "store"
    class_map, frames = discover_frames(frames_dir)
    total_saves = per_round * rounds if rounds > 0 else per_round
    if len(frames) < total_saves:
        raise SimulationError(
            f"need {total_saves} frames for {rounds} rounds x {per_round}, "
            f"found {len(frames)}"
        )
    clock = LogicalClock()
    DataStore.create(store_root, class_map, initial_weights=INITIAL_WEIGHTS, clock=clock)
    raw_config = _default_config(workdir, store_root, seed, bins)
    for key, value in (config_overrides or {}).items():
        if key != "store_root":
            raw_config[key] = value
    hub = Hub(HubConfig.from_dict(raw_config), clock=clock)
    await hub.start()
    jitter_rng = random.Random(seed)
    try:
        reader, writer = await asyncio.open_connection("127.0.0.1", hub.tcp_port)
        websocket = await ws_connect(
            f"ws://127.0.0.1:{hub.ws_port}/", max_size=MAX_LINE_BYTES
        )
        try:

            async def tcp_send(line: str) -> None:
                writer.write(line.encode("utf-8"))
                await writer.drain()

            source = _WireClient(clock, tcp_send, reader.readline)
            annotator = _WireClient(clock, websocket.send, websocket.recv)
            await source.send("hello", role="source", name="sim-source")
            await annotator.send("hello", role="annotator", name="sim-annotator")
            await annotator.expect("round_status")
            frame_iter = iter(frames)
            rounds_completed = 0
            for save_index in range(1, total_saves + 1):
                name, image_path, label_path = next(frame_iter)
                png = image_path.read_bytes()
                width, height = png_dimensions(png)
                await source.send(
                    "frame",
                    frame_id=name,
                    width=width,
                    height=height,
                    encoding="png-base64",
                    data=base64.b64encode(png).decode("ascii"),
                )
                sip = await annotator.expect("sip")
                if sip["frame_id"] != name:
                    raise SimulationError(f"expected SIP for {name}, got {sip['frame_id']}")
                boxes = parse_label_file(label_path.read_text("utf-8"), class_map)
                payload = []
                for box in boxes:
                    cx, cy, w, h = box.cx, box.cy, box.w, box.h
                    if jitter:
                        cx = min(1 - w / 2, max(w / 2, cx + jitter_rng.uniform(-0.01, 0.01)))
                        cy = min(1 - h / 2, max(h / 2, cy + jitter_rng.uniform(-0.01, 0.01)))
                    payload.append(
                        {"class_id": box.class_id, "cx": cx, "cy": cy, "w": w, "h": h}
                    )
                await annotator.send("annotation", frame_id=name, boxes=payload)
                ack = await annotator.expect("save_ack")
                if ack["frame_id"] != name:
                    raise SimulationError(f"save_ack for {ack['frame_id']}, expected {name}")
                if rounds > 0 and save_index % per_round == 0:
                    training_round = ack["round"]
                    await annotator.send("finetune_request")
                    # stale collecting statuses from the saves are still queued;
                    # the round is over only once the round number advances
                    while True:
                        message = await annotator.recv()
                        if (
                            message["type"] == "round_status"
                            and message["mode"] == "collecting"
                            and message["round"] > training_round
                        ):
                            break
                    rounds_completed += 1
        finally:
            await websocket.close()
            writer.close()
    finally:
        await hub.stop()
    store = DataStore.open(store_root)
    failed = [r for r in store.rounds() if r.trainer_outcome == "failure"]
    if failed:
        details = "; ".join(f"round {r.round}: {r.failure_detail}" for r in failed)
        raise SimulationError(f"training failed: {details}")
    trainer_log = workdir / "trainer.log"
    invocations = (
        len(trainer_log.read_text("utf-8").splitlines()) if trainer_log.exists() else 0
    )
    return SimulationResult(
        store_root=store_root,
        rows=build_report(store),
        saves=total_saves,
        rounds_completed=rounds_completed,
        trainer_invocations=invocations,
    )


def simulate(frames_dir, rounds, per_round, seed, workdir, **kwargs) -> SimulationResult:
    return asyncio.run(
        run_simulation(frames_dir, rounds, per_round, seed, workdir, **kwargs)
    )

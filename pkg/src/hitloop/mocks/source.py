"""Mock frame source: streams a PNG corpus to a running hub over TCP.

Declares ``role: source``, then sends one frame every ``--interval`` seconds,
cycling through the corpus (ids get a run suffix on the second lap so the hub
does not reject them as duplicates). Hub replies, which for a source are only
errors, are printed to stderr. Meant for manual smoke sessions against the
browser annotator:

    python3 -m hitloop.mocks.source --frames ./frames --hub 127.0.0.1:9100
"""

from __future__ import annotations

import argparse
import asyncio
import base64
import itertools
import sys
import time
from pathlib import Path

from .. import protocol
from ..pngio import png_dimensions


def discover_pngs(root: Path) -> list[Path]:
    image_dir = root / "images" if (root / "images").is_dir() else root
    return sorted(image_dir.glob("*.png"))


async def stream(host: str, port: int, images: list[Path], interval: float, loops: int) -> int:
    reader, writer = await asyncio.open_connection(host, port)
    seq = protocol.Sequencer()

    def send(kind: str, **fields) -> None:
        message = protocol.make(kind, seq.take(), int(time.time() * 1000), **fields)
        writer.write((protocol.encode(message)).encode("utf-8"))

    async def print_replies() -> None:
        while True:
            line = await reader.readline()
            if not line:
                return
            print(f"hub: {line.decode('utf-8', 'replace').rstrip()}", file=sys.stderr)

    reply_task = asyncio.get_running_loop().create_task(print_replies())
    send("hello", role="source", name="mock-source")
    await writer.drain()

    sent = 0
    laps = range(loops) if loops > 0 else itertools.count()
    try:
        for lap in laps:
            for image in images:
                png = image.read_bytes()
                width, height = png_dimensions(png)
                frame_id = image.stem if lap == 0 else f"{image.stem}-run{lap}"
                send(
                    "frame",
                    frame_id=frame_id,
                    width=width,
                    height=height,
                    encoding="png-base64",
                    data=base64.b64encode(png).decode("ascii"),
                )
                await writer.drain()
                sent += 1
                print(f"sent {frame_id} ({width}x{height})", file=sys.stderr)
                await asyncio.sleep(interval)
    except (ConnectionError, asyncio.CancelledError):
        pass
    finally:
        reply_task.cancel()
        writer.close()
    return sent


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--frames", required=True, help="corpus dir (flat or with images/)")
    parser.add_argument("--hub", default="127.0.0.1:9100", help="hub TCP address host:port")
    parser.add_argument("--interval", type=float, default=2.0, help="seconds between frames")
    parser.add_argument("--loops", type=int, default=0, help="corpus passes; 0 = forever")
    args = parser.parse_args(argv)

    images = discover_pngs(Path(args.frames))
    if not images:
        print(f"error: no PNG frames under {args.frames}", file=sys.stderr)
        return 1
    host, _, port = args.hub.rpartition(":")
    if not host or not port.isdigit():
        print(f"error: --hub must be host:port, got {args.hub!r}", file=sys.stderr)
        return 1

    try:
        sent = asyncio.run(stream(host, int(port), images, args.interval, args.loops))
    except KeyboardInterrupt:
        return 0
    except OSError as exc:
        print(f"error: cannot reach hub at {args.hub}: {exc}", file=sys.stderr)
        return 1
    print(f"streamed {sent} frames", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())

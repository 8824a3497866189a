"""Wire protocol: single-line JSON messages with a type/seq/ts envelope.

The schema lives in ``protocol_schema.json`` and is shared verbatim with the
browser annotator, so both ends reject the same malformed inputs. Lines are
strict JSON (no NaN/Infinity extensions) terminated by a single newline.
"""

from __future__ import annotations

import json
from importlib import resources

import jsonschema

PROTOCOL_VERSION = 1

MESSAGE_TYPES = (
    "hello",
    "frame",
    "predictions",
    "sip",
    "annotation",
    "save_ack",
    "finetune_request",
    "round_status",
    "model_updated",
    "error",
)

ROLES = ("source", "annotator", "observer")

# Error codes carried in error{code, ...} messages.
E_MALFORMED_LINE = "malformed_line"
E_UNKNOWN_TYPE = "unknown_type"
E_SCHEMA_VIOLATION = "schema_violation"
E_BAD_SEQ = "bad_seq"
E_BAD_ROLE = "bad_role"
E_MALFORMED_FRAME = "malformed_frame"
E_UNKNOWN_FRAME = "unknown_frame"
E_INVALID_BOXES = "invalid_boxes"
E_DUPLICATE_FRAME = "duplicate_frame"
E_ALREADY_TRAINING = "already_training"
E_EMPTY_PENDING_POOL = "empty_pending_pool"
E_BACKPRESSURE = "backpressure"
E_INTERNAL = "internal"


class ProtocolError(Exception):
    """Base for wire-level faults; ``code`` maps onto error messages."""

    code = E_INTERNAL


class MalformedLine(ProtocolError):
    code = E_MALFORMED_LINE


class UnknownType(ProtocolError):
    code = E_UNKNOWN_TYPE


class SchemaViolation(ProtocolError):
    code = E_SCHEMA_VIOLATION


def load_schema() -> dict:
    text = resources.files(__package__).joinpath("protocol_schema.json").read_text("utf-8")
    return json.loads(text)


_SCHEMA = load_schema()


def _build_validators() -> dict[str, jsonschema.protocols.Validator]:
    validators = {}
    for name in MESSAGE_TYPES:
        sub = {
            "$ref": f"#/definitions/{name}",
            "definitions": _SCHEMA["definitions"],
        }
        validators[name] = jsonschema.Draft7Validator(sub)
    return validators


_VALIDATORS = _build_validators()


def _reject_constant(token: str):
    raise MalformedLine(f"non-finite constant {token} is not valid on the wire")


def validate_message(obj) -> dict:
    """Check one decoded object against the schema for its declared type."""
    if not isinstance(obj, dict):
        raise SchemaViolation("message must be an object")
    mtype = obj.get("type")
    if not isinstance(mtype, str) or mtype not in MESSAGE_TYPES:
        raise UnknownType(f"unknown message type {mtype!r}")
    error = jsonschema.exceptions.best_match(_VALIDATORS[mtype].iter_errors(obj))
    if error is not None:
        path = ".".join(str(p) for p in error.absolute_path) or "<root>"
        raise SchemaViolation(f"{mtype} message invalid at {path}: {error.message}")
    return obj


def parse_line(line: str | bytes) -> dict:
    """Decode and validate one newline-terminated wire line."""
    if isinstance(line, bytes):
        try:
            line = line.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedLine(f"line is not UTF-8: {exc}") from None
    stripped = line.strip("\r\n")
    if "\n" in stripped or "\r" in stripped:
        raise MalformedLine("message must be a single line")
    try:
        obj = json.loads(stripped, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise MalformedLine(f"line is not valid JSON: {exc.msg}") from None
    return validate_message(obj)


def encode(message: dict) -> str:
    """Serialize a validated message as one deterministic wire line."""
    validate_message(message)
    return json.dumps(message, sort_keys=True, separators=(",", ":"), allow_nan=False) + "\n"


def make(mtype: str, seq: int, ts: int, **payload) -> dict:
    """Build and validate a message dict from envelope fields + payload."""
    message = {"type": mtype, "seq": seq, "ts": ts, **payload}
    return validate_message(message)


class Sequencer:
    """Per-connection outgoing seq counter, strictly increasing from 1."""

    def __init__(self):
        self._next = 1

    def take(self) -> int:
        value = self._next
        self._next += 1
        return value

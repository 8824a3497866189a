"""Wire protocol tests: round trips, schema rejection, strict JSON parsing."""

import json

import pytest

from hitloop import protocol
from hitloop.protocol import (
    MESSAGE_TYPES,
    MalformedLine,
    SchemaViolation,
    Sequencer,
    UnknownType,
    encode,
    load_schema,
    make,
    parse_line,
    validate_message,
)

PRED_BOX = {
    "class_id": 0,
    "class_name": "door",
    "cx": 0.5,
    "cy": 0.5,
    "w": 0.25,
    "h": 0.5,
    "confidence": 0.875,
}

ANN_BOX = {"class_id": 1, "cx": 0.5, "cy": 0.5, "w": 0.25, "h": 0.5}

VALID = {
    "hello": {"role": "annotator", "name": "alice"},
    "frame": {
        "frame_id": "frame-0001",
        "width": 640,
        "height": 480,
        "encoding": "png-base64",
        "data": "aGk=",
    },
    "predictions": {"frame_id": "frame-0001", "model_version": "v2", "boxes": [PRED_BOX]},
    "sip": {
        "frame_id": "frame-0001",
        "width": 640,
        "height": 480,
        "data": "aGk=",
        "model_version": "v2",
        "boxes": [PRED_BOX],
    },
    "annotation": {"frame_id": "frame-0001", "boxes": [ANN_BOX]},
    "save_ack": {
        "frame_id": "frame-0001",
        "sample_id": "sample-000001",
        "round": 1,
        "pending_count": 3,
        "overall_collected": 12,
    },
    "finetune_request": {},
    "round_status": {
        "mode": "collecting",
        "round": 2,
        "pending_count": 0,
        "overall_collected": 9,
        "raw_hades": 0.4815,
        "model_version": "v1",
    },
    "model_updated": {"model_version": "v3"},
    "error": {"code": "bad_seq", "message": "seq went backwards", "in_reply_to_seq": 7},
}


def valid_message(mtype: str) -> dict:
    return {"type": mtype, "seq": 3, "ts": 1_700_000_000_000, **VALID[mtype]}


class TestRoundTrips:
    @pytest.mark.parametrize("mtype", MESSAGE_TYPES)
    def test_encode_parse_round_trip(self, mtype):
        message = valid_message(mtype)
        line = encode(message)
        assert line.endswith("\n") and line.count("\n") == 1
        assert parse_line(line) == message
        assert parse_line(line.encode("utf-8")) == message

    @pytest.mark.parametrize("mtype", MESSAGE_TYPES)
    def test_make_builds_valid(self, mtype):
        built = make(mtype, seq=1, ts=0, **VALID[mtype])
        assert built["type"] == mtype
        assert validate_message(built) is built

    def test_encode_is_deterministic(self):
        message = valid_message("save_ack")
        shuffled = dict(reversed(list(message.items())))
        assert encode(message) == encode(shuffled)

    def test_optional_fields_can_be_omitted(self):
        status = valid_message("round_status")
        del status["raw_hades"]
        assert validate_message(status) is status
        err = valid_message("error")
        del err["in_reply_to_seq"]
        assert validate_message(err) is err

    def test_round_status_model_version_nullable(self):
        status = valid_message("round_status")
        status["model_version"] = None
        assert parse_line(encode(status)) == status


class TestSchemaRejection:
    def test_unknown_type(self):
        with pytest.raises(UnknownType):
            validate_message({"type": "telemetry", "seq": 1, "ts": 0})
        with pytest.raises(UnknownType):
            validate_message({"seq": 1, "ts": 0})

    def test_non_object(self):
        with pytest.raises(SchemaViolation):
            validate_message([1, 2, 3])

    @pytest.mark.parametrize("mtype", MESSAGE_TYPES)
    def test_each_required_field_enforced(self, mtype):
        base = valid_message(mtype)
        for field in base:
            if field == "type":
                continue
            if field in ("raw_hades", "in_reply_to_seq"):
                continue  # optional
            broken = {k: v for k, v in base.items() if k != field}
            with pytest.raises(SchemaViolation):
                validate_message(broken)

    @pytest.mark.parametrize("mtype", MESSAGE_TYPES)
    def test_extra_fields_rejected(self, mtype):
        message = valid_message(mtype)
        message["debug"] = True
        with pytest.raises(SchemaViolation):
            validate_message(message)

    def test_seq_must_be_positive(self):
        message = valid_message("hello")
        message["seq"] = 0
        with pytest.raises(SchemaViolation):
            validate_message(message)

    def test_ts_must_be_nonnegative_integer(self):
        message = valid_message("hello")
        message["ts"] = -5
        with pytest.raises(SchemaViolation):
            validate_message(message)
        message["ts"] = 12.5
        with pytest.raises(SchemaViolation):
            validate_message(message)

    def test_bad_role(self):
        message = valid_message("hello")
        message["role"] = "admin"
        with pytest.raises(SchemaViolation):
            validate_message(message)

    def test_confidence_range(self):
        message = valid_message("predictions")
        message["boxes"] = [dict(PRED_BOX, confidence=1.5)]
        with pytest.raises(SchemaViolation):
            validate_message(message)

    def test_annotation_box_shape(self):
        message = valid_message("annotation")
        message["boxes"] = [dict(ANN_BOX, confidence=0.5)]  # annotator boxes carry no confidence
        with pytest.raises(SchemaViolation):
            validate_message(message)
        message["boxes"] = [{k: v for k, v in ANN_BOX.items() if k != "w"}]
        with pytest.raises(SchemaViolation):
            validate_message(message)

    def test_frame_encoding_pinned(self):
        message = valid_message("frame")
        message["encoding"] = "jpeg-base64"
        with pytest.raises(SchemaViolation):
            validate_message(message)

    def test_violation_names_path(self):
        message = valid_message("predictions")
        message["boxes"] = [dict(PRED_BOX, cx="wide")]
        with pytest.raises(SchemaViolation, match="boxes"):
            validate_message(message)


class TestParseLine:
    def test_non_json(self):
        with pytest.raises(MalformedLine):
            parse_line("this is not json\n")

    def test_truncated_json(self):
        with pytest.raises(MalformedLine):
            parse_line('{"type": "hello", "seq": 1\n')

    def test_nan_and_infinity_rejected(self):
        for token in ("NaN", "Infinity", "-Infinity"):
            line = f'{{"type": "round_status", "raw_hades": {token}}}\n'
            with pytest.raises(MalformedLine):
                parse_line(line)

    def test_embedded_newline_rejected(self):
        line = '{"type": "hello",\n "seq": 1}\n'
        with pytest.raises(MalformedLine):
            parse_line(line)

    def test_non_utf8_rejected(self):
        with pytest.raises(MalformedLine):
            parse_line(b'{"type": "hello"\xff}\n')

    def test_crlf_tolerated(self):
        message = valid_message("hello")
        line = encode(message).rstrip("\n") + "\r\n"
        assert parse_line(line) == message

    def test_scalar_json_rejected(self):
        with pytest.raises(SchemaViolation):
            parse_line("42\n")

    def test_encode_rejects_nan_payload(self):
        status = valid_message("round_status")
        status["raw_hades"] = float("nan")
        with pytest.raises((SchemaViolation, ValueError)):
            encode(status)


class TestSchemaFile:
    def test_schema_loads_and_covers_all_types(self):
        schema = load_schema()
        assert schema["$schema"].startswith("http://json-schema.org/draft-07")
        for mtype in MESSAGE_TYPES:
            assert mtype in schema["definitions"]
        refs = {entry["$ref"].rsplit("/", 1)[1] for entry in schema["oneOf"]}
        assert refs == set(MESSAGE_TYPES)

    def test_valid_messages_pass_top_level_one_of(self):
        import jsonschema

        schema = load_schema()
        for mtype in MESSAGE_TYPES:
            jsonschema.Draft7Validator(schema).validate(valid_message(mtype))


class TestSequencer:
    def test_strictly_increasing_from_one(self):
        s = Sequencer()
        assert [s.take() for _ in range(5)] == [1, 2, 3, 4, 5]

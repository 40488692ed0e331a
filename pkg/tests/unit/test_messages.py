"""Tests for wire message encoding."""

import pytest
from pydantic import ValidationError

from qvote.models.messages import (
    NackMessage,
    ShareMessage,
    decode_message,
    encode_message,
)


def test_share_encoding_is_canonical():
    raw = encode_message(ShareMessage(row_owner=2, share=3))
    assert raw == b'{"row_owner":2,"share":3,"type":"share"}'


def test_decode_dispatches_on_type():
    message = decode_message(b'{"ref":"V1>M1#4","type":"nack"}')
    assert message == NackMessage(ref="V1>M1#4")


@pytest.mark.parametrize(
    "raw",
    [
        b"not json",
        b'{"type":"vote"}',
        b'{"row_owner":0,"share":1,"type":"share"}',
        b'{"row_owner":1,"share":1,"type":"share","extra":1}',
    ],
)
def test_invalid_frames_are_rejected(raw):
    with pytest.raises(ValidationError):
        decode_message(raw)

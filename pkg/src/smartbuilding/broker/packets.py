"""Bit-exact MQTT 3.1.1 packet codec for the QoS 0 subset.

Supported control packets: CONNECT, CONNACK, PUBLISH (QoS 0), SUBSCRIBE,
SUBACK, PINGREQ, PINGRESP, DISCONNECT. Anything else decodes to a
ProtocolError, never a crash. decode() is the exact inverse of encode()
on valid subset packets.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

MAX_REMAINING_LENGTH = 268_435_455
MAX_STRING_BYTES = 65_535

# Control packet type nibbles.
CONNECT, CONNACK, PUBLISH = 1, 2, 3
SUBSCRIBE, SUBACK = 8, 9
PINGREQ, PINGRESP, DISCONNECT = 12, 13, 14


class DecodeError(Exception):
    """Base for all packet decode failures."""


class TruncatedPacket(DecodeError):
    """More bytes are needed; nothing was consumed."""


class ProtocolError(DecodeError):
    """Structurally complete but violates MQTT 3.1.1 or the QoS 0 subset."""


class EncodeError(Exception):
    """Packet fields cannot be represented on the wire."""


@dataclass(frozen=True)
class ConnectPacket:
    client_id: str
    keep_alive: int = 30
    clean_session: bool = True
    protocol_name: str = "MQTT"
    protocol_level: int = 4


@dataclass(frozen=True)
class ConnackPacket:
    session_present: bool = False
    return_code: int = 0


@dataclass(frozen=True)
class PublishPacket:
    topic: str
    payload: bytes
    retain: bool = False


@dataclass(frozen=True)
class SubscribePacket:
    packet_id: int
    filters: tuple[tuple[str, int], ...] = field(default_factory=tuple)


@dataclass(frozen=True)
class SubackPacket:
    packet_id: int
    return_codes: tuple[int, ...] = field(default_factory=tuple)


@dataclass(frozen=True)
class PingreqPacket:
    pass


@dataclass(frozen=True)
class PingrespPacket:
    pass


@dataclass(frozen=True)
class DisconnectPacket:
    pass


Packet = (ConnectPacket | ConnackPacket | PublishPacket | SubscribePacket
          | SubackPacket | PingreqPacket | PingrespPacket | DisconnectPacket)


def encode_remaining_length(length: int) -> bytes:
    if not 0 <= length <= MAX_REMAINING_LENGTH:
        raise EncodeError(f"remaining length {length} out of range")
    out = bytearray()
    while True:
        byte = length % 128
        length //= 128
        if length > 0:
            byte |= 0x80
        out.append(byte)
        if length == 0:
            return bytes(out)


def decode_remaining_length(data: bytes, offset: int) -> tuple[int, int]:
    """Returns (value, bytes consumed); raises on truncation or >4 bytes."""
    multiplier = 1
    value = 0
    for i in range(4):
        if offset + i >= len(data):
            raise TruncatedPacket("remaining length cut short")
        byte = data[offset + i]
        value += (byte & 0x7F) * multiplier
        if not byte & 0x80:
            return value, i + 1
        multiplier *= 128
    raise ProtocolError("remaining length exceeds 4 bytes")


def _encode_string(s: str) -> bytes:
    raw = s.encode("utf-8")
    if len(raw) > MAX_STRING_BYTES:
        raise EncodeError(f"string of {len(raw)} bytes exceeds 65535")
    return struct.pack(">H", len(raw)) + raw


def _read_string(data: bytes, pos: int, end: int) -> tuple[str, int]:
    if pos + 2 > end:
        raise ProtocolError("string length field cut short")
    n = struct.unpack_from(">H", data, pos)[0]
    pos += 2
    if pos + n > end:
        raise ProtocolError("string body cut short")
    try:
        s = data[pos:pos + n].decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ProtocolError(f"invalid UTF-8 string: {exc}") from exc
    if "\x00" in s:
        raise ProtocolError("string contains U+0000")
    return s, pos + n


def validate_publish_topic(topic: str) -> None:
    if not topic:
        raise ProtocolError("publish topic must be nonempty")
    if "+" in topic or "#" in topic:
        raise ProtocolError("wildcards are not allowed in publish topics")
    if "\x00" in topic:
        raise ProtocolError("topic contains U+0000")
    if len(topic.encode("utf-8")) > MAX_STRING_BYTES:
        raise ProtocolError("topic longer than 65535 bytes")


def validate_topic_filter(topic_filter: str) -> None:
    if not topic_filter:
        raise ProtocolError("topic filter must be nonempty")
    if "\x00" in topic_filter:
        raise ProtocolError("topic filter contains U+0000")
    if len(topic_filter.encode("utf-8")) > MAX_STRING_BYTES:
        raise ProtocolError("topic filter longer than 65535 bytes")
    levels = topic_filter.split("/")
    for i, level in enumerate(levels):
        if "#" in level:
            if level != "#" or i != len(levels) - 1:
                raise ProtocolError(
                    f"'#' must be the final, whole level in {topic_filter!r}")
        if "+" in level and level != "+":
            raise ProtocolError(
                f"'+' must occupy a whole level in {topic_filter!r}")


def match_topic(topic_filter: str, topic: str) -> bool:
    """Standard MQTT level-wise filter matching.

    '+' matches exactly one level, a terminal '#' matches the remaining
    levels including the parent itself; topics starting with '$' are never
    matched by filters that start with a wildcard.
    """
    validate_topic_filter(topic_filter)
    if topic.startswith("$") and topic_filter[0] in "+#":
        return False
    f_levels = topic_filter.split("/")
    t_levels = topic.split("/")
    for i, f in enumerate(f_levels):
        if f == "#":
            return True
        if i >= len(t_levels):
            return False
        if f != "+" and f != t_levels[i]:
            return False
    return len(t_levels) == len(f_levels)


# ----------------------------------------------------------------------
# encode

def encode_packet(packet: Packet) -> bytes:
    if isinstance(packet, ConnectPacket):
        body = _encode_string(packet.protocol_name)
        body += bytes([packet.protocol_level])
        body += bytes([0x02 if packet.clean_session else 0x00])
        if not 0 <= packet.keep_alive <= 0xFFFF:
            raise EncodeError("keep_alive out of u16 range")
        body += struct.pack(">H", packet.keep_alive)
        body += _encode_string(packet.client_id)
        return bytes([CONNECT << 4]) + encode_remaining_length(len(body)) + body

    if isinstance(packet, ConnackPacket):
        if not 0 <= packet.return_code <= 5:
            raise EncodeError("CONNACK return code out of range")
        return bytes([CONNACK << 4, 2, int(packet.session_present),
                      packet.return_code])

    if isinstance(packet, PublishPacket):
        try:
            validate_publish_topic(packet.topic)
        except ProtocolError as exc:
            raise EncodeError(str(exc)) from None
        body = _encode_string(packet.topic) + packet.payload
        first = (PUBLISH << 4) | int(packet.retain)
        return bytes([first]) + encode_remaining_length(len(body)) + body

    if isinstance(packet, SubscribePacket):
        if not packet.filters:
            raise EncodeError("SUBSCRIBE needs at least one filter")
        if not 1 <= packet.packet_id <= 0xFFFF:
            raise EncodeError("packet id must be a nonzero u16")
        body = struct.pack(">H", packet.packet_id)
        for topic_filter, qos in packet.filters:
            try:
                validate_topic_filter(topic_filter)
            except ProtocolError as exc:
                raise EncodeError(str(exc)) from None
            if not 0 <= qos <= 2:
                raise EncodeError(f"requested QoS {qos} out of range")
            body += _encode_string(topic_filter) + bytes([qos])
        return (bytes([(SUBSCRIBE << 4) | 0x02])
                + encode_remaining_length(len(body)) + body)

    if isinstance(packet, SubackPacket):
        if not packet.return_codes:
            raise EncodeError("SUBACK needs at least one return code")
        if not 1 <= packet.packet_id <= 0xFFFF:
            raise EncodeError("packet id must be a nonzero u16")
        for rc in packet.return_codes:
            if rc not in (0, 1, 2, 0x80):
                raise EncodeError(f"SUBACK return code {rc:#x} invalid")
        body = struct.pack(">H", packet.packet_id) + bytes(packet.return_codes)
        return bytes([SUBACK << 4]) + encode_remaining_length(len(body)) + body

    if isinstance(packet, PingreqPacket):
        return bytes([PINGREQ << 4, 0])
    if isinstance(packet, PingrespPacket):
        return bytes([PINGRESP << 4, 0])
    if isinstance(packet, DisconnectPacket):
        return bytes([DISCONNECT << 4, 0])
    raise EncodeError(f"cannot encode {type(packet).__name__}")


# ----------------------------------------------------------------------
# decode

def decode_packet(data: bytes, offset: int = 0) -> tuple[Packet, int]:
    """Decode one packet starting at offset; returns (packet, bytes consumed).

    Raises TruncatedPacket when the buffer ends mid-packet (safe to retry
    with more data) and ProtocolError for anything malformed.
    """
    if offset >= len(data):
        raise TruncatedPacket("empty input")
    first = data[offset]
    ptype = first >> 4
    flags = first & 0x0F
    length, len_bytes = decode_remaining_length(data, offset + 1)
    start = offset + 1 + len_bytes
    end = start + length
    if end > len(data):
        raise TruncatedPacket(f"need {end - len(data)} more bytes")
    consumed = end - offset

    if ptype == PUBLISH:
        return _decode_publish(data, flags, start, end), consumed

    if ptype == CONNECT:
        if flags:
            raise ProtocolError("CONNECT flags must be 0")
        return _decode_connect(data, start, end), consumed

    if ptype == CONNACK:
        if flags or length != 2:
            raise ProtocolError("malformed CONNACK")
        ack_flags, return_code = data[start], data[start + 1]
        if ack_flags & 0xFE:
            raise ProtocolError("CONNACK reserved ack flags set")
        if return_code > 5:
            raise ProtocolError(f"CONNACK return code {return_code} invalid")
        return ConnackPacket(bool(ack_flags & 1), return_code), consumed

    if ptype == SUBSCRIBE:
        if flags != 0x02:
            raise ProtocolError("SUBSCRIBE flags must be 0010")
        return _decode_subscribe(data, start, end), consumed

    if ptype == SUBACK:
        if flags:
            raise ProtocolError("SUBACK flags must be 0")
        if length < 3:
            raise ProtocolError("SUBACK too short")
        packet_id = struct.unpack_from(">H", data, start)[0]
        if packet_id == 0:
            raise ProtocolError("packet id must be nonzero")
        codes = tuple(data[start + 2:end])
        if any(c not in (0, 1, 2, 0x80) for c in codes):
            raise ProtocolError("SUBACK return code invalid")
        return SubackPacket(packet_id, codes), consumed

    if ptype in (PINGREQ, PINGRESP, DISCONNECT):
        if flags or length:
            raise ProtocolError("ping/disconnect packets carry no body")
        cls = {PINGREQ: PingreqPacket, PINGRESP: PingrespPacket,
               DISCONNECT: DisconnectPacket}[ptype]
        return cls(), consumed

    raise ProtocolError(f"packet type {ptype} unsupported in this subset")


def _decode_publish(data: bytes, flags: int, start: int, end: int) -> PublishPacket:
    qos = (flags >> 1) & 0x03
    if qos == 3:
        raise ProtocolError("PUBLISH QoS bits 11 are malformed")
    if qos > 0:
        raise ProtocolError("QoS above 0 is not supported in this subset")
    if flags & 0x08:
        raise ProtocolError("DUP must be 0 for QoS 0")
    topic, pos = _read_string(data, start, end)
    validate_publish_topic(topic)
    return PublishPacket(topic=topic, payload=bytes(data[pos:end]),
                         retain=bool(flags & 0x01))


def _decode_connect(data: bytes, start: int, end: int) -> ConnectPacket:
    name, pos = _read_string(data, start, end)
    if pos + 4 > end:
        raise ProtocolError("CONNECT variable header cut short")
    level = data[pos]
    connect_flags = data[pos + 1]
    keep_alive = struct.unpack_from(">H", data, pos + 2)[0]
    pos += 4
    if connect_flags & 0x01:
        raise ProtocolError("CONNECT reserved flag must be 0")
    if connect_flags & 0xFC:
        raise ProtocolError(
            "will/username/password flags are not supported in this subset")
    client_id, pos = _read_string(data, pos, end)
    if pos != end:
        raise ProtocolError("unexpected bytes after CONNECT payload")
    return ConnectPacket(client_id=client_id, keep_alive=keep_alive,
                         clean_session=bool(connect_flags & 0x02),
                         protocol_name=name, protocol_level=level)


def _decode_subscribe(data: bytes, start: int, end: int) -> SubscribePacket:
    if start + 2 > end:
        raise ProtocolError("SUBSCRIBE packet id cut short")
    packet_id = struct.unpack_from(">H", data, start)[0]
    if packet_id == 0:
        raise ProtocolError("packet id must be nonzero")
    pos = start + 2
    filters = []
    while pos < end:
        topic_filter, pos = _read_string(data, pos, end)
        validate_topic_filter(topic_filter)
        if pos >= end:
            raise ProtocolError("SUBSCRIBE missing requested QoS byte")
        qos = data[pos]
        pos += 1
        if qos > 2:
            raise ProtocolError(f"requested QoS {qos} invalid")
        filters.append((topic_filter, qos))
    if not filters:
        raise ProtocolError("SUBSCRIBE carries no topic filters")
    return SubscribePacket(packet_id=packet_id, filters=tuple(filters))

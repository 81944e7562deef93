from .core import Message, MessageBroker
from .local import LocalClient, decode_json
from .net import BrokerServer
from .packets import (
    ConnackPacket,
    ConnectPacket,
    DecodeError,
    DisconnectPacket,
    EncodeError,
    Packet,
    PingreqPacket,
    PingrespPacket,
    ProtocolError,
    PublishPacket,
    SubackPacket,
    SubscribePacket,
    TruncatedPacket,
    decode_packet,
    encode_packet,
    match_topic,
    validate_topic_filter,
)

__all__ = [
    "BrokerServer",
    "ConnackPacket",
    "ConnectPacket",
    "DecodeError",
    "DisconnectPacket",
    "EncodeError",
    "LocalClient",
    "Message",
    "MessageBroker",
    "Packet",
    "PingreqPacket",
    "PingrespPacket",
    "ProtocolError",
    "PublishPacket",
    "SubackPacket",
    "SubscribePacket",
    "TruncatedPacket",
    "decode_json",
    "decode_packet",
    "encode_packet",
    "match_topic",
    "validate_topic_filter",
]

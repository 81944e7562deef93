"""In-process broker transport for deterministic single-process runs.

Publishes still pass through the byte codec (encode, then decode) so the
wire format is exercised on every message; only the TCP socket is skipped.
"""

from __future__ import annotations

import json

from .core import Message, MessageBroker, _match_levels
from .packets import PublishPacket, decode_packet, encode_packet, validate_topic_filter


class LocalClient:
    """Synchronous client attached directly to a MessageBroker.

    Received messages are either queued on .inbox or handed to the callback
    registered for the matching subscribe() call.
    """

    def __init__(self, broker: MessageBroker, client_id: str):
        self.broker = broker
        self.client_id = client_id
        self.inbox: list[Message] = []
        self._handlers: list[tuple[list[str], "callable"]] = []
        broker.connect(client_id, self._deliver)

    def _deliver(self, message: Message) -> bool:
        handled = False
        t_levels = message.topic.split("/")
        is_system = message.topic.startswith("$")
        for f_levels, handler in self._handlers:
            if _match_levels(f_levels, t_levels, is_system):
                handler(message)
                handled = True
        if not handled:
            self.inbox.append(message)
        return True

    def subscribe(self, topic_filter: str, handler=None) -> None:
        if handler is not None:
            validate_topic_filter(topic_filter)
            self._handlers.append((topic_filter.split("/"), handler))
        self.broker.subscribe(self.client_id, [(topic_filter, 0)])

    def publish(self, topic: str, payload: bytes | dict,
                timestamp: float = 0.0) -> int:
        if isinstance(payload, dict):
            payload = json.dumps(payload, separators=(",", ":"),
                                 sort_keys=True).encode("utf-8")
        # Round-trip the codec so in-process runs still exercise the wire
        # format byte for byte.
        wire = encode_packet(PublishPacket(topic=topic, payload=payload))
        packet, _ = decode_packet(wire)
        return self.broker.publish(Message(topic=packet.topic,
                                           payload=packet.payload,
                                           timestamp=timestamp))

    def drain(self) -> list[Message]:
        messages, self.inbox = self.inbox, []
        return messages

    def disconnect(self) -> None:
        self.broker.disconnect(self.client_id)


def decode_json(message: Message) -> dict:
    return json.loads(message.payload.decode("utf-8"))

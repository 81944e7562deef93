"""Routing core shared by the in-process transport and the TCP server.

QoS 0 semantics: a message is delivered exactly once per matching
subscription of every connected client, in per-topic publish order; nothing
is retained or retried, and disconnected clients simply miss messages.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

from .packets import ProtocolError, validate_publish_topic, validate_topic_filter


@dataclass(frozen=True)
class Message:
    topic: str
    payload: bytes
    timestamp: float = 0.0


@dataclass
class _Session:
    client_id: str
    deliver: "callable"                 # (Message) -> bool; False = overflow
    filters: dict[str, list[str]] = field(default_factory=dict)  # filter -> levels


def _match_levels(f_levels: list[str], t_levels: list[str],
                  topic_is_system: bool) -> bool:
    if topic_is_system and f_levels[0] in ("+", "#"):
        return False
    for i, f in enumerate(f_levels):
        if f == "#":
            return True
        if i >= len(t_levels):
            return False
        if f != "+" and f != t_levels[i]:
            return False
    return len(t_levels) == len(f_levels)


class MessageBroker:
    """Subscription table plus synchronous fan-out dispatch.

    Thread safe: sessions and filters mutate under one lock; delivery for a
    single publish happens under it too, which preserves per-topic order per
    client. A deliver callback must never block (TCP clients buffer into a
    bounded queue and report overflow instead).
    """

    def __init__(self):
        self._lock = threading.RLock()
        self._sessions: dict[str, _Session] = {}
        self._on_disconnect: dict[str, "callable"] = {}

    def connect(self, client_id: str, deliver, on_disconnect=None) -> None:
        """Register a session; an existing session with the same id is
        taken over (closed) per MQTT takeover semantics."""
        with self._lock:
            if client_id in self._sessions:
                self._drop(client_id, "session taken over by new connection")
            self._sessions[client_id] = _Session(client_id, deliver)
            if on_disconnect is not None:
                self._on_disconnect[client_id] = on_disconnect

    def disconnect(self, client_id: str, reason: str = "client disconnect") -> None:
        with self._lock:
            self._drop(client_id, reason)

    def _drop(self, client_id: str, reason: str) -> None:
        session = self._sessions.pop(client_id, None)
        hook = self._on_disconnect.pop(client_id, None)
        if session is not None and hook is not None:
            hook(reason)

    def connected(self, client_id: str) -> bool:
        with self._lock:
            return client_id in self._sessions

    def subscribe(self, client_id: str, filters: list[tuple[str, int]]
                  ) -> list[int]:
        """Add subscriptions; returns granted QoS codes (always 0)."""
        with self._lock:
            session = self._sessions.get(client_id)
            if session is None:
                raise ProtocolError(f"client {client_id!r} is not connected")
            granted = []
            for topic_filter, _requested in filters:
                validate_topic_filter(topic_filter)
                session.filters[topic_filter] = topic_filter.split("/")
                granted.append(0)
            return granted

    def publish(self, message: Message) -> int:
        """Dispatch to every matching subscription; returns delivery count.

        A deliver callback returning False signals consumer overflow and
        disconnects that client (back-pressure policy).
        """
        validate_publish_topic(message.topic)
        t_levels = message.topic.split("/")
        is_system = message.topic.startswith("$")
        with self._lock:
            overflowed = []
            deliveries = 0
            for session in self._sessions.values():
                for f_levels in session.filters.values():
                    if _match_levels(f_levels, t_levels, is_system):
                        if session.deliver(message):
                            deliveries += 1
                        else:
                            overflowed.append(session.client_id)
                            break
            for client_id in overflowed:
                self._drop(client_id, "slow consumer: delivery buffer overflow")
            return deliveries

    def client_ids(self) -> list[str]:
        with self._lock:
            return list(self._sessions)

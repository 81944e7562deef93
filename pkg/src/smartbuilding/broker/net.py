"""TCP face of the broker: MQTT 3.1.1 subset over real sockets.

Shares a MessageBroker core with the in-process transport, so external
clients see the same message flow as simulation components.
"""

from __future__ import annotations

import logging
import queue
import socket
import threading

from .core import Message, MessageBroker
from .packets import (
    ConnackPacket,
    ConnectPacket,
    DisconnectPacket,
    PingreqPacket,
    PingrespPacket,
    ProtocolError,
    PublishPacket,
    SubackPacket,
    SubscribePacket,
    TruncatedPacket,
    decode_packet,
    encode_packet,
)

log = logging.getLogger("smartbuilding.broker")

DEFAULT_KEEP_ALIVE_S = 30
DEFAULT_MAX_PAYLOAD = 256 * 1024
WRITE_QUEUE_DEPTH = 1000
_RECV_CHUNK = 4096


class BrokerServer:
    """Threaded MQTT-subset listener.

    One reader and one writer thread per connection; delivery to one client
    never blocks another (bounded per-client queues, disconnect on overflow).
    """

    def __init__(self, broker: MessageBroker | None = None,
                 host: str = "127.0.0.1", port: int = 1883,
                 keep_alive_s: int = DEFAULT_KEEP_ALIVE_S,
                 max_payload: int = DEFAULT_MAX_PAYLOAD):
        self.broker = broker if broker is not None else MessageBroker()
        self.host = host
        self.port = port
        self.keep_alive_s = keep_alive_s
        self.max_payload = max_payload
        self._server_socket: socket.socket | None = None
        self._accept_thread: threading.Thread | None = None
        self._running = threading.Event()
        self._anon_counter = 0
        self._anon_lock = threading.Lock()

    # ------------------------------------------------------------------

    def start(self) -> None:
        sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        sock.bind((self.host, self.port))
        self.port = sock.getsockname()[1]
        sock.listen(16)
        sock.settimeout(0.25)
        self._server_socket = sock
        self._running.set()
        self._accept_thread = threading.Thread(target=self._accept_loop,
                                               name="mqtt-accept", daemon=True)
        self._accept_thread.start()
        log.info("broker listening on %s:%d", self.host, self.port)

    def stop(self) -> None:
        self._running.clear()
        if self._server_socket is not None:
            self._server_socket.close()
        if self._accept_thread is not None:
            self._accept_thread.join(timeout=2.0)
        for client_id in self.broker.client_ids():
            self.broker.disconnect(client_id, "broker shutdown")

    def serve_forever(self) -> None:
        self.start()
        try:
            while self._running.is_set():
                self._accept_thread.join(timeout=0.5)
        except KeyboardInterrupt:
            log.info("broker interrupted; shutting down")
        finally:
            self.stop()

    # ------------------------------------------------------------------

    def _accept_loop(self) -> None:
        while self._running.is_set():
            try:
                conn, addr = self._server_socket.accept()
            except socket.timeout:
                continue
            except OSError:
                return
            threading.Thread(target=self._serve_client, args=(conn, addr),
                             name=f"mqtt-client-{addr[1]}", daemon=True).start()

    def _next_anon_id(self) -> str:
        with self._anon_lock:
            self._anon_counter += 1
            return f"anon-{self._anon_counter}"

    def _serve_client(self, conn: socket.socket, addr) -> None:
        session = _Connection(self, conn, addr)
        try:
            session.run()
        except Exception:
            log.exception("connection %s crashed", addr)
        finally:
            session.close("connection closed")


class _Connection:
    def __init__(self, server: BrokerServer, conn: socket.socket, addr):
        self.server = server
        self.conn = conn
        self.addr = addr
        self.client_id: str | None = None
        self.out_queue: queue.Queue[bytes | None] = queue.Queue(WRITE_QUEUE_DEPTH)
        self.writer: threading.Thread | None = None
        self._closed = threading.Event()

    # deliver callback invoked by the broker core
    def _deliver(self, message: Message) -> bool:
        wire = encode_packet(PublishPacket(topic=message.topic,
                                           payload=message.payload))
        try:
            self.out_queue.put_nowait(wire)
            return True
        except queue.Full:
            return False

    def _send_packet(self, packet) -> None:
        self.out_queue.put(encode_packet(packet))

    def _writer_loop(self) -> None:
        while not self._closed.is_set():
            item = self.out_queue.get()
            if item is None:
                return
            try:
                self.conn.sendall(item)
            except OSError:
                return

    def close(self, reason: str) -> None:
        if self._closed.is_set():
            return
        self._closed.set()
        log.debug("closing %s (%s): %s", self.addr, self.client_id, reason)
        if self.client_id is not None:
            broker = self.server.broker
            self.client_id, client_id = None, self.client_id
            broker.disconnect(client_id, reason)
        try:
            self.out_queue.put_nowait(None)
        except queue.Full:
            pass
        try:
            self.conn.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self.conn.close()

    def run(self) -> None:
        self.writer = threading.Thread(target=self._writer_loop,
                                       name=f"mqtt-writer-{self.addr[1]}",
                                       daemon=True)
        self.writer.start()
        self.conn.settimeout(1.5 * self.server.keep_alive_s)
        buffer = b""
        connected = False
        while not self._closed.is_set():
            packet, buffer = self._read_packet(buffer)
            if packet is None:
                return
            if not connected:
                if not isinstance(packet, ConnectPacket):
                    log.warning("%s sent %s before CONNECT; closing",
                                self.addr, type(packet).__name__)
                    return
                if not self._handshake(packet):
                    return
                connected = True
                continue
            if isinstance(packet, ConnectPacket):
                log.warning("%s sent a second CONNECT; closing", self.addr)
                return
            self._dispatch(packet)

    def _read_packet(self, buffer: bytes):
        while True:
            try:
                packet, consumed = decode_packet(buffer)
                return packet, buffer[consumed:]
            except TruncatedPacket:
                pass
            except ProtocolError as exc:
                log.warning("%s protocol error: %s", self.addr, exc)
                return None, buffer
            if len(buffer) > self.server.max_payload + 64:
                log.warning("%s exceeded max payload %d; closing",
                            self.addr, self.server.max_payload)
                return None, buffer
            try:
                chunk = self.conn.recv(_RECV_CHUNK)
            except socket.timeout:
                log.info("%s idle beyond 1.5x keep-alive; closing", self.addr)
                return None, buffer
            except OSError:
                return None, buffer
            if not chunk:
                return None, buffer
            buffer += chunk

    def _handshake(self, packet: ConnectPacket) -> bool:
        if packet.protocol_name != "MQTT" or packet.protocol_level != 4:
            self._send_packet(ConnackPacket(session_present=False, return_code=1))
            return False
        client_id = packet.client_id or self.server._next_anon_id()
        self.client_id = client_id
        self.server.broker.connect(client_id, self._deliver,
                                   on_disconnect=self._on_broker_disconnect)
        keep_alive = packet.keep_alive or self.server.keep_alive_s
        self.conn.settimeout(1.5 * keep_alive)
        self._send_packet(ConnackPacket(session_present=False, return_code=0))
        log.info("client %r connected from %s (keep-alive %ds)",
                 client_id, self.addr, keep_alive)
        return True

    def _on_broker_disconnect(self, reason: str) -> None:
        # Called under the broker lock on takeover/overflow; just tear down
        # the socket, the reader loop exits on its own.
        if not self._closed.is_set():
            self._closed.set()
            log.info("client %r dropped: %s", self.client_id, reason)
            self.client_id = None
            try:
                self.out_queue.put_nowait(None)
            except queue.Full:
                pass
            try:
                self.conn.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            self.conn.close()

    def _dispatch(self, packet) -> None:
        broker = self.server.broker
        if isinstance(packet, PingreqPacket):
            self._send_packet(PingrespPacket())
        elif isinstance(packet, SubscribePacket):
            granted = broker.subscribe(self.client_id, list(packet.filters))
            self._send_packet(SubackPacket(packet_id=packet.packet_id,
                                           return_codes=tuple(granted)))
        elif isinstance(packet, PublishPacket):
            if len(packet.payload) > self.server.max_payload:
                log.warning("client %r publish exceeds max payload; closing",
                            self.client_id)
                self.close("payload too large")
                return
            broker.publish(Message(topic=packet.topic, payload=packet.payload))
        elif isinstance(packet, DisconnectPacket):
            self.close("client disconnect")
        else:
            log.warning("client %r sent unexpected %s; closing",
                        self.client_id, type(packet).__name__)
            self.close("unexpected packet")

"""Socket bridge exposing a live session to the operator console.

Transport is a localhost byte stream carrying [u32 little-endian length]
[payload] frames, where each payload is a wire-format frame (hello, slave
state, or axes record). On connect the server sends a hello frame with the
protocol version, tick rate, control mode and scene; clients then stream
axes records in and slave state messages out.

Browsers cannot open raw TCP sockets, so the same frames are optionally
mirrored over a minimal RFC 6455 WebSocket endpoint: each binary WebSocket
message carries one complete [u32 length][payload] frame, bit-identical to
the TCP stream.

The session loop is the only owner of simulator state. Client readers feed
one shared ordered queue; the loop drains it once per tick (using the most
recent record, holding the previous one when none arrived), so a slow or
absent client never blocks the simulation. With lockstep on, the loop
instead advances exactly one tick per received axes record, which makes
UI-driven sessions deterministic for testing.
"""

from __future__ import annotations

import base64
import hashlib
import json
import queue
import socket
import struct
import threading
import time

from .config import SimConfig
from .errors import CodecError, InvalidInput
from .session import ZERO_AXES, Session
from .wire import MAGIC, TYPE_AXES_RECORD, VERSION, decode_axes, encode

TYPE_HELLO = 0x00
_WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"


def hello_frame(cfg: SimConfig, scene_cfg: dict, statuses: list[str] | None = None) -> bytes:
    # Current target statuses ride along so a reconnecting console resumes
    # with the true task state (state messages only carry per-tick events).
    info = json.dumps({
        "tick_hz": cfg.tick_hz,
        "mode": cfg.mode.value,
        "scene": scene_cfg,
        "config_digest": cfg.digest(),
        "target_statuses": statuses or ["pending"] * 4,
    }).encode()
    return MAGIC + bytes([VERSION, TYPE_HELLO]) + struct.pack("<I", len(info)) + info


def frame(payload: bytes) -> bytes:
    return struct.pack("<I", len(payload)) + payload


class _Client:
    def __init__(self, send_bytes, close):
        self._send_bytes = send_bytes
        self._close = close
        self._lock = threading.Lock()
        self.alive = True

    def send_frame(self, payload: bytes):
        if not self.alive:
            return
        try:
            with self._lock:
                self._send_bytes(frame(payload))
        except OSError:
            self.alive = False
            self._close()


class Bridge:
    """Shared state between the session loop and the client threads."""

    def __init__(self, cfg: SimConfig, scene_cfg: dict, statuses_fn=None):
        self.cfg = cfg
        self.scene_cfg = scene_cfg
        self.statuses_fn = statuses_fn
        self.axes_queue: queue.Queue = queue.Queue()
        self.clients: list[_Client] = []
        self.clients_lock = threading.Lock()
        self.stopping = threading.Event()

    def attach(self, client: _Client):
        statuses = self.statuses_fn() if self.statuses_fn is not None else None
        client.send_frame(hello_frame(self.cfg, self.scene_cfg, statuses))
        with self.clients_lock:
            self.clients.append(client)

    def detach(self, client: _Client):
        client.alive = False
        with self.clients_lock:
            if client in self.clients:
                self.clients.remove(client)

    def broadcast(self, payload: bytes):
        with self.clients_lock:
            clients = list(self.clients)
        for c in clients:
            c.send_frame(payload)

    def submit_payload(self, payload: bytes):
        """Feed one decoded frame from any transport into the tick queue."""
        if len(payload) >= 6 and payload[5] == TYPE_AXES_RECORD:
            try:
                self.axes_queue.put(decode_axes(payload))
            except CodecError:
                pass


def _read_exact(sock: socket.socket, n: int) -> bytes | None:
    buf = b""
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            return None
        buf += chunk
    return buf


def _tcp_client_loop(sock: socket.socket, bridge: Bridge):
    client = _Client(sock.sendall, lambda: sock.close())
    bridge.attach(client)
    try:
        while not bridge.stopping.is_set():
            head = _read_exact(sock, 4)
            if head is None:
                break
            (length,) = struct.unpack("<I", head)
            if length > 1 << 20:
                break
            payload = _read_exact(sock, length)
            if payload is None:
                break
            bridge.submit_payload(payload)
    except OSError:
        pass
    finally:
        bridge.detach(client)
        sock.close()


def _accept_loop(server_sock: socket.socket, bridge: Bridge, handler):
    while not bridge.stopping.is_set():
        try:
            sock, _ = server_sock.accept()
        except OSError:
            return
        threading.Thread(target=handler, args=(sock, bridge), daemon=True).start()


# -- minimal WebSocket (server side, binary frames only) ----------------------

def _ws_handshake(sock: socket.socket) -> bool:
    data = b""
    while b"\r\n\r\n" not in data:
        chunk = sock.recv(4096)
        if not chunk:
            return False
        data += chunk
        if len(data) > 1 << 16:
            return False
    key = None
    for line in data.split(b"\r\n"):
        if line.lower().startswith(b"sec-websocket-key:"):
            key = line.split(b":", 1)[1].strip().decode()
    if key is None:
        return False
    accept = base64.b64encode(hashlib.sha1((key + _WS_GUID).encode()).digest()).decode()
    sock.sendall(
        b"HTTP/1.1 101 Switching Protocols\r\n"
        b"Upgrade: websocket\r\nConnection: Upgrade\r\n"
        b"Sec-WebSocket-Accept: " + accept.encode() + b"\r\n\r\n"
    )
    return True


def _ws_send(sock: socket.socket, payload: bytes):
    n = len(payload)
    if n < 126:
        head = bytes([0x82, n])
    elif n < 1 << 16:
        head = bytes([0x82, 126]) + struct.pack(">H", n)
    else:
        head = bytes([0x82, 127]) + struct.pack(">Q", n)
    sock.sendall(head + payload)


def _ws_recv(sock: socket.socket) -> bytes | None:
    head = _read_exact(sock, 2)
    if head is None:
        return None
    opcode = head[0] & 0x0F
    masked = head[1] & 0x80
    n = head[1] & 0x7F
    if n == 126:
        ext = _read_exact(sock, 2)
        if ext is None:
            return None
        n = struct.unpack(">H", ext)[0]
    elif n == 127:
        ext = _read_exact(sock, 8)
        if ext is None:
            return None
        n = struct.unpack(">Q", ext)[0]
    mask = _read_exact(sock, 4) if masked else b"\x00" * 4
    if mask is None:
        return None
    body = _read_exact(sock, n) if n else b""
    if body is None:
        return None
    if masked:
        body = bytes(b ^ mask[i % 4] for i, b in enumerate(body))
    if opcode == 0x8:  # close
        return None
    if opcode not in (0x1, 0x2):  # ignore pings and continuations
        return b""
    return body


def _ws_client_loop(sock: socket.socket, bridge: Bridge):
    if not _ws_handshake(sock):
        sock.close()
        return
    client = _Client(lambda data: _ws_send(sock, data), lambda: sock.close())
    bridge.attach(client)
    try:
        while not bridge.stopping.is_set():
            msg = _ws_recv(sock)
            if msg is None:
                break
            if len(msg) >= 4:
                (length,) = struct.unpack("<I", msg[:4])
                if length == len(msg) - 4:
                    bridge.submit_payload(msg[4:])
    except OSError:
        pass
    finally:
        bridge.detach(client)
        sock.close()


def serve(cfg: SimConfig, scene_cfg: dict, port: int, ws_port: int | None = None,
          lockstep: bool = False, max_ticks: int = 0, ready_event=None):
    """Run a live session behind the bridge until max_ticks (0 = forever)."""
    session = Session(cfg, scene_cfg, record=False)
    bridge = Bridge(cfg, scene_cfg,
                    statuses_fn=lambda: [t.status.value for t in session.world.targets])

    tcp_sock = socket.create_server(("127.0.0.1", port))
    threading.Thread(target=_accept_loop, args=(tcp_sock, bridge, _tcp_client_loop),
                     daemon=True).start()
    ws_sock = None
    if ws_port is not None:
        ws_sock = socket.create_server(("127.0.0.1", ws_port))
        threading.Thread(target=_accept_loop, args=(ws_sock, bridge, _ws_client_loop),
                         daemon=True).start()
    if ready_event is not None:
        ready_event.set()

    held_axes = ZERO_AXES
    dt = cfg.dt
    next_deadline = time.monotonic()
    try:
        while max_ticks == 0 or session.tick < max_ticks:
            if lockstep:
                try:
                    held_axes = bridge.axes_queue.get(timeout=30.0)
                except queue.Empty:
                    break
            else:
                while True:
                    try:
                        held_axes = bridge.axes_queue.get_nowait()
                    except queue.Empty:
                        break
            try:
                back = session.tick_once(held_axes)
            except InvalidInput as exc:
                # Tick rejected, session unchanged; drop the record and go on.
                print(f"rejected axes record: {exc}", flush=True)
                held_axes = ZERO_AXES
                continue
            if back is not None:
                bridge.broadcast(encode(back))
            if not lockstep:
                next_deadline += dt
                delay = next_deadline - time.monotonic()
                if delay > 0:
                    time.sleep(delay)
                else:
                    next_deadline = time.monotonic()
    finally:
        bridge.stopping.set()
        tcp_sock.close()
        if ws_sock is not None:
            ws_sock.close()

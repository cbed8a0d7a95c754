"""Advisor wire protocol: JSON text messages over a persistent WebSocket.

Server side lives in the trainer process (`askac train --serve PORT`); the
browser console (or any conforming client) connects to it. Messages:

    {"type": "hello", "env": <tag>, "actions": [<names>]}      server -> client
    {"type": "ask", "id": N, "state": [...], "render": {...},
     "legal": [...]}                                           server -> client
    {"type": "feedback", "id": N, "action": K}                 client -> server
    {"type": "stats", "iter": N, "roa": R, "return": G}        server -> client

Field names are normative; unknown fields are ignored. The server keeps a
single outstanding ask, matches feedback by id (never by arrival order),
re-issues a query once on a malformed reply, and signals a timeout to the
caller so training can fall back to the agent's own action.

The WebSocket layer is a deliberately small RFC 6455 subset (text frames,
ping/pong, close); it exists because browsers cannot open raw TCP sockets
and no websocket package is available in this build environment.
"""

from __future__ import annotations

import base64
import hashlib
import json
import logging
import os
import queue
import socket
import struct
import threading
import time

import numpy as np

from .advisors import Advisor, AdvisorQuery, AdvisorTimeout

log = logging.getLogger(__name__)

WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"

OP_TEXT = 0x1
OP_CLOSE = 0x8
OP_PING = 0x9
OP_PONG = 0xA


class ProtocolError(Exception):
    """Malformed or out-of-contract message on the advisor channel."""


def accept_key(client_key: str) -> str:
    digest = hashlib.sha1((client_key + WS_GUID).encode()).digest()
    return base64.b64encode(digest).decode()


class FrameReader:
    """Buffered reader: bytes left over from the HTTP handshake are consumed
    before touching the socket again (frames may share a TCP segment with
    the upgrade response)."""

    def __init__(self, sock: socket.socket, leftover: bytes = b""):
        self.sock = sock
        self.buf = leftover

    def read_exact(self, n: int) -> bytes:
        while len(self.buf) < n:
            chunk = self.sock.recv(4096)
            if not chunk:
                raise ConnectionError("socket closed")
            self.buf += chunk
        out, self.buf = self.buf[:n], self.buf[n:]
        return out


def send_frame(sock: socket.socket, opcode: int, payload: bytes, mask: bool = False) -> None:
    head = bytes([0x80 | opcode])
    n = len(payload)
    mask_bit = 0x80 if mask else 0x00
    if n < 126:
        head += bytes([mask_bit | n])
    elif n < 1 << 16:
        head += bytes([mask_bit | 126]) + struct.pack(">H", n)
    else:
        head += bytes([mask_bit | 127]) + struct.pack(">Q", n)
    if mask:
        key = os.urandom(4)
        masked = bytes(b ^ key[i % 4] for i, b in enumerate(payload))
        sock.sendall(head + key + masked)
    else:
        sock.sendall(head + payload)


def read_frame(reader: FrameReader) -> tuple[int, bytes]:
    """One complete message (handles continuation frames and unmasking)."""
    opcode = None
    payload = b""
    while True:
        b0, b1 = reader.read_exact(2)
        fin = b0 & 0x80
        op = b0 & 0x0F
        masked = b1 & 0x80
        n = b1 & 0x7F
        if n == 126:
            (n,) = struct.unpack(">H", reader.read_exact(2))
        elif n == 127:
            (n,) = struct.unpack(">Q", reader.read_exact(8))
        key = reader.read_exact(4) if masked else None
        data = reader.read_exact(n)
        if key:
            data = bytes(b ^ key[i % 4] for i, b in enumerate(data))
        if op in (OP_CLOSE, OP_PING, OP_PONG):
            return op, data
        if op != 0:
            opcode = op
        payload += data
        if fin:
            return opcode or OP_TEXT, payload


def send_json(sock: socket.socket, obj: dict, mask: bool = False) -> None:
    send_frame(sock, OP_TEXT, json.dumps(obj).encode(), mask=mask)


class AdvisorServer:
    """WebSocket endpoint the human console connects to.

    One client at a time; a dropped client may reconnect and receives a
    fresh hello. `ask` blocks the (single) training thread until a valid
    feedback for the outstanding id arrives or the timeout passes.
    """

    def __init__(self, port: int, env_tag: str, action_names: tuple[str, ...],
                 host: str = "127.0.0.1"):
        self.env_tag = env_tag
        self.action_names = tuple(action_names)
        self._inbox: queue.Queue = queue.Queue()
        self._client: socket.socket | None = None
        self._client_lock = threading.Lock()
        self._ask_lock = threading.Lock()
        self._closing = False
        self._listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._listener.bind((host, port))
        self._listener.listen(1)
        self.address = self._listener.getsockname()
        self._thread = threading.Thread(target=self._accept_loop, daemon=True)
        self._thread.start()

    # -- connection handling --------------------------------------------------

    def _accept_loop(self) -> None:
        while not self._closing:
            try:
                conn, _ = self._listener.accept()
            except OSError:
                return
            try:
                leftover = self._handshake(conn)
            except (ConnectionError, ProtocolError, OSError) as exc:
                log.warning("console handshake failed: %s", exc)
                conn.close()
                continue
            with self._client_lock:
                self._client = conn
            self._send({"type": "hello", "env": self.env_tag,
                        "actions": list(self.action_names)})
            self._read_loop(FrameReader(conn, leftover))
            with self._client_lock:
                if self._client is conn:
                    self._client = None
            conn.close()

    def _handshake(self, conn: socket.socket) -> bytes:
        conn.settimeout(5.0)
        data = b""
        while b"\r\n\r\n" not in data:
            chunk = conn.recv(4096)
            if not chunk:
                raise ConnectionError("client closed during handshake")
            data += chunk
        head, leftover = data.split(b"\r\n\r\n", 1)
        headers = {}
        for line in head.split(b"\r\n")[1:]:
            if b":" in line:
                k, v = line.split(b":", 1)
                headers[k.strip().lower().decode()] = v.strip().decode()
        if headers.get("upgrade", "").lower() != "websocket" or "sec-websocket-key" not in headers:
            raise ProtocolError("not a websocket upgrade request")
        response = (
            "HTTP/1.1 101 Switching Protocols\r\n"
            "Upgrade: websocket\r\n"
            "Connection: Upgrade\r\n"
            f"Sec-WebSocket-Accept: {accept_key(headers['sec-websocket-key'])}\r\n"
            "\r\n"
        )
        conn.sendall(response.encode())
        conn.settimeout(None)
        return leftover

    def _read_loop(self, reader: FrameReader) -> None:
        conn = reader.sock
        while not self._closing:
            try:
                op, payload = read_frame(reader)
            except (ConnectionError, OSError):
                return
            if op == OP_CLOSE:
                try:
                    send_frame(conn, OP_CLOSE, payload)
                except OSError:
                    pass
                return
            if op == OP_PING:
                try:
                    send_frame(conn, OP_PONG, payload)
                except OSError:
                    pass
                continue
            if op != OP_TEXT:
                continue
            try:
                msg = json.loads(payload.decode())
            except (UnicodeDecodeError, json.JSONDecodeError):
                log.warning("dropping undecodable console message")
                continue
            if isinstance(msg, dict):
                self._inbox.put(msg)

    def _send(self, obj: dict) -> bool:
        with self._client_lock:
            conn = self._client
        if conn is None:
            return False
        try:
            send_json(conn, obj)
            return True
        except OSError:
            with self._client_lock:
                if self._client is conn:
                    self._client = None
            return False

    @property
    def connected(self) -> bool:
        with self._client_lock:
            return self._client is not None

    def wait_for_client(self, timeout: float) -> bool:
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            if self.connected:
                return True
            time.sleep(0.02)
        return self.connected

    # -- protocol verbs --------------------------------------------------------

    def ask(self, query: AdvisorQuery, timeout: float) -> int:
        """Send one ask and wait for its feedback; at most one outstanding.

        A reply with an illegal action or missing fields is a protocol
        error: the same query is re-issued once, then the timeout path
        applies. Raises AdvisorTimeout when no valid reply arrives in time.
        """
        with self._ask_lock:
            deadline = time.monotonic() + timeout
            message = {
                "type": "ask",
                "id": query.query_id,
                "state": np.asarray(query.observation, dtype=float).tolist(),
                "render": query.render,
                "legal": list(query.legal_actions),
            }
            reissued = False
            sent = self._send(message)
            while True:
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    raise AdvisorTimeout(f"no feedback for query {query.query_id}")
                if not sent:
                    time.sleep(min(0.02, remaining))
                    sent = self._send(message)
                    continue
                try:
                    msg = self._inbox.get(timeout=min(remaining, 0.1))
                except queue.Empty:
                    continue
                if msg.get("type") != "feedback":
                    continue  # stats-layer or unknown traffic is not ours
                if msg.get("id") != query.query_id:
                    log.warning("dropping feedback for stale query id %s", msg.get("id"))
                    continue
                action = msg.get("action")
                if isinstance(action, int) and action in query.legal_actions:
                    return action
                log.warning("malformed feedback %r for query %s", action, query.query_id)
                if reissued:
                    raise AdvisorTimeout(f"repeated malformed feedback for query {query.query_id}")
                reissued = True
                sent = self._send(message)

    def send_stats(self, iteration: int, roa: float, train_return: float) -> None:
        self._send({"type": "stats", "iter": int(iteration), "roa": float(roa),
                    "return": float(train_return)})

    def close(self) -> None:
        self._closing = True
        with self._client_lock:
            if self._client is not None:
                try:
                    send_frame(self._client, OP_CLOSE, b"")
                    self._client.close()
                except OSError:
                    pass
                self._client = None
        try:
            self._listener.close()
        except OSError:
            pass


class RemoteAdvisor(Advisor):
    """Advisor that forwards queries to a connected console."""

    def __init__(self, server: AdvisorServer, timeout: float = 60.0):
        self.server = server
        self.timeout = timeout

    def act(self, query: AdvisorQuery) -> int:
        return self.server.ask(query, self.timeout)

    def close(self) -> None:
        self.server.close()


class WsClient:
    """Minimal WebSocket client used by tests and scripted console drivers."""

    def __init__(self, host: str, port: int, timeout: float = 5.0):
        self.sock = socket.create_connection((host, port), timeout=timeout)
        key = base64.b64encode(os.urandom(16)).decode()
        request = (
            f"GET / HTTP/1.1\r\nHost: {host}:{port}\r\n"
            "Upgrade: websocket\r\nConnection: Upgrade\r\n"
            f"Sec-WebSocket-Key: {key}\r\nSec-WebSocket-Version: 13\r\n\r\n"
        )
        self.sock.sendall(request.encode())
        data = b""
        while b"\r\n\r\n" not in data:
            chunk = self.sock.recv(4096)
            if not chunk:
                raise ConnectionError("server closed during handshake")
            data += chunk
        head, leftover = data.split(b"\r\n\r\n", 1)
        status = head.split(b"\r\n", 1)[0]
        if b"101" not in status:
            raise ProtocolError(f"unexpected handshake response: {status!r}")
        expected = accept_key(key).encode()
        if expected not in head:
            raise ProtocolError("bad Sec-WebSocket-Accept")
        self._reader = FrameReader(self.sock, leftover)

    def send_json(self, obj: dict) -> None:
        send_json(self.sock, obj, mask=True)  # clients must mask

    def recv_json(self, timeout: float = 5.0) -> dict:
        self.sock.settimeout(timeout)
        while True:
            op, payload = read_frame(self._reader)
            if op == OP_TEXT:
                return json.loads(payload.decode())
            if op == OP_CLOSE:
                raise ConnectionError("server closed")
            if op == OP_PING:
                send_frame(self.sock, OP_PONG, payload, mask=True)

    def close(self) -> None:
        try:
            send_frame(self.sock, OP_CLOSE, b"", mask=True)
        except OSError:
            pass
        self.sock.close()

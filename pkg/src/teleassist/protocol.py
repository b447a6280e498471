"""Operator-vehicle wire protocol.

Frames are newline-delimited UTF-8 JSON objects with a fixed envelope
{"session", "seq", "t", "kind", "body"}. Sequence numbers increase strictly
per direction; frames that do not are dropped (at-most-once application).
Payload bodies are plain JSON data so that decode(encode(m)) == m holds
exactly for every variant.

The session server runs next to the simulation loop; the only shared
surface is a pair of message queues. A scripted operator uses the same
queues and the same codec, so both paths exercise identical code.
"""

from __future__ import annotations

import json
import logging
import queue
import random
import socket
import threading
from dataclasses import dataclass, field

log = logging.getLogger(__name__)


class MalformedFrame(Exception):
    """Frame cannot be parsed; connection-fatal."""


class UnknownPayload(Exception):
    """Envelope is valid but the payload kind is not recognized;
    message-fatal, answered with an error Ack."""

    def __init__(self, kind, session=None, seq=None):
        super().__init__(f"unknown payload kind {kind!r}")
        self.kind = kind
        self.session = session
        self.seq = seq


LATERAL = "lateral"
LONGITUDINAL = "longitudinal"


@dataclass(frozen=True)
class AssistanceRequest:
    kind = "assistance_request"

    def to_body(self) -> dict:
        return {}

    @staticmethod
    def from_body(body: dict) -> "AssistanceRequest":
        return AssistanceRequest()


@dataclass(frozen=True)
class StateUpdate:
    kind = "state_update"
    environment: dict
    session_state: str
    corridor: dict
    proposal: dict | None = None
    arbitration: dict | None = None

    def to_body(self) -> dict:
        return {
            "environment": self.environment,
            "session_state": self.session_state,
            "corridor": self.corridor,
            "proposal": self.proposal,
            "arbitration": self.arbitration,
        }

    @staticmethod
    def from_body(body: dict) -> "StateUpdate":
        return StateUpdate(
            environment=dict(body["environment"]),
            session_state=str(body["session_state"]),
            corridor=dict(body["corridor"]),
            proposal=body.get("proposal"),
            arbitration=body.get("arbitration"),
        )


@dataclass(frozen=True)
class ModifyConstraints:
    kind = "modify_constraints"
    mod_type: str                       # lateral | longitudinal
    polygon: list | None = None         # [[x, y], ...] world coordinates
    stop_progress: float | None = None  # None lifts the stop limit

    def __post_init__(self):
        if self.mod_type not in (LATERAL, LONGITUDINAL):
            raise ValueError(f"unknown modification type {self.mod_type!r}")

    def to_body(self) -> dict:
        if self.mod_type == LATERAL:
            return {"modification": {"type": LATERAL, "polygon": self.polygon}}
        return {"modification": {"type": LONGITUDINAL, "stop_progress": self.stop_progress}}

    @staticmethod
    def from_body(body: dict) -> "ModifyConstraints":
        mod = body["modification"]
        mtype = mod["type"]
        if mtype == LATERAL:
            polygon = mod["polygon"]
            if not isinstance(polygon, list) or any(
                    not isinstance(v, list) or len(v) != 2
                    or not all(isinstance(c, (int, float)) for c in v)
                    for v in polygon):
                raise MalformedFrame("lateral modification polygon must be [[x, y], ...]")
            return ModifyConstraints(mod_type=LATERAL, polygon=polygon)
        if mtype == LONGITUDINAL:
            stop = mod.get("stop_progress")
            if stop is not None and not isinstance(stop, (int, float)):
                raise MalformedFrame("stop_progress must be a number or null")
            return ModifyConstraints(mod_type=LONGITUDINAL, stop_progress=stop)
        raise MalformedFrame(f"unknown modification type {mtype!r}")


@dataclass(frozen=True)
class TrajectoryProposal:
    kind = "trajectory_proposal"
    proposal_id: int
    trajectory: dict

    def to_body(self) -> dict:
        return {"proposal_id": self.proposal_id, "trajectory": self.trajectory}

    @staticmethod
    def from_body(body: dict) -> "TrajectoryProposal":
        return TrajectoryProposal(proposal_id=int(body["proposal_id"]),
                                  trajectory=dict(body["trajectory"]))


@dataclass(frozen=True)
class Approval:
    kind = "approval"
    proposal_id: int

    def to_body(self) -> dict:
        return {"proposal_id": self.proposal_id}

    @staticmethod
    def from_body(body: dict) -> "Approval":
        return Approval(proposal_id=int(body["proposal_id"]))


@dataclass(frozen=True)
class StopExecution:
    kind = "stop_execution"

    def to_body(self) -> dict:
        return {}

    @staticmethod
    def from_body(body: dict) -> "StopExecution":
        return StopExecution()


@dataclass(frozen=True)
class Handover:
    kind = "handover"

    def to_body(self) -> dict:
        return {}

    @staticmethod
    def from_body(body: dict) -> "Handover":
        return Handover()


@dataclass(frozen=True)
class PlanningFailed:
    kind = "planning_failed"
    reason: str

    def to_body(self) -> dict:
        return {"reason": self.reason}

    @staticmethod
    def from_body(body: dict) -> "PlanningFailed":
        return PlanningFailed(reason=str(body["reason"]))


@dataclass(frozen=True)
class Ack:
    kind = "ack"
    acked_seq: int
    error: str | None = None

    def to_body(self) -> dict:
        return {"acked_seq": self.acked_seq, "error": self.error}

    @staticmethod
    def from_body(body: dict) -> "Ack":
        err = body.get("error")
        return Ack(acked_seq=int(body["acked_seq"]), error=None if err is None else str(err))


PAYLOAD_TYPES = {
    cls.kind: cls
    for cls in (AssistanceRequest, StateUpdate, ModifyConstraints, TrajectoryProposal,
                Approval, StopExecution, Handover, PlanningFailed, Ack)
}

Payload = (AssistanceRequest | StateUpdate | ModifyConstraints | TrajectoryProposal
           | Approval | StopExecution | Handover | PlanningFailed | Ack)


@dataclass(frozen=True)
class TeleopMessage:
    session: str
    seq: int
    t: float
    payload: Payload


def encode(message: TeleopMessage) -> bytes:
    """One frame: compact JSON with canonical key order plus a newline."""
    doc = {
        "session": message.session,
        "seq": message.seq,
        "t": message.t,
        "kind": message.payload.kind,
        "body": message.payload.to_body(),
    }
    return json.dumps(doc, separators=(",", ":"), allow_nan=False).encode("utf-8") + b"\n"


def decode(frame: bytes | str) -> TeleopMessage:
    """Parse one frame; unknown body fields are ignored, unknown payload
    kinds raise UnknownPayload, anything unparseable raises MalformedFrame."""
    if isinstance(frame, bytes):
        try:
            frame = frame.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedFrame(f"bad encoding: {exc}") from exc
    try:
        doc = json.loads(frame)
    except json.JSONDecodeError as exc:
        raise MalformedFrame(f"bad JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise MalformedFrame("frame must be a JSON object")
    try:
        session = str(doc["session"])
        seq = int(doc["seq"])
        t = float(doc["t"])
        kind = doc["kind"]
        body = doc["body"]
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedFrame(f"bad envelope: {exc}") from exc
    if not isinstance(body, dict):
        raise MalformedFrame("body must be a JSON object")
    cls = PAYLOAD_TYPES.get(kind)
    if cls is None:
        raise UnknownPayload(kind, session=session, seq=seq)
    try:
        payload = cls.from_body(body)
    except MalformedFrame:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedFrame(f"bad {kind} body: {exc}") from exc
    return TeleopMessage(session=session, seq=seq, t=t, payload=payload)


# --- delay injection ---------------------------------------------------------

@dataclass(frozen=True)
class DelayConfig:
    fixed_delay: float = 0.0
    jitter: float = 0.0                # uniform extra delay in [0, jitter]
    approval_drop_rate: float = 0.0    # drop probability for approval frames only
    seed: int = 0


class DelayInjector:
    """Deterministic message-delay and approval-drop model.

    Delays are drawn from a seeded generator; delivery preserves the
    per-direction order (a delayed message also delays its successors).
    """

    def __init__(self, config: DelayConfig = DelayConfig()):
        self.config = config
        self._rng = random.Random(config.seed)
        self._pending: list[tuple[float, TeleopMessage]] = []
        self._last_release = -float("inf")

    def offer(self, message: TeleopMessage, now: float) -> None:
        cfg = self.config
        if isinstance(message.payload, Approval) and cfg.approval_drop_rate > 0.0:
            if self._rng.random() < cfg.approval_drop_rate:
                log.debug("delay injector dropped approval seq=%d", message.seq)
                return
        delay = cfg.fixed_delay
        if cfg.jitter > 0.0:
            delay += self._rng.random() * cfg.jitter
        release = max(self._last_release, now + delay)
        self._last_release = release
        self._pending.append((release, message))

    def poll(self, now: float) -> list[TeleopMessage]:
        due = [m for r, m in self._pending if r <= now]
        self._pending = [(r, m) for r, m in self._pending if r > now]
        return due


# --- vehicle-side session endpoint -------------------------------------------

class SessionChannel:
    """Queue pair between the operator (network or scripted) and the
    behavior layer, with per-direction sequence filtering."""

    def __init__(self, session_id: str = "session-1"):
        self.session_id = session_id
        self.inbound: "queue.Queue[TeleopMessage]" = queue.Queue()
        self.outbound: "queue.Queue[TeleopMessage]" = queue.Queue()
        self._out_seq = 0
        self._last_in_seq = 0
        self.operator_connected = False

    def next_seq(self) -> int:
        self._out_seq += 1
        return self._out_seq

    def send(self, payload: Payload, t: float) -> TeleopMessage:
        msg = TeleopMessage(session=self.session_id, seq=self.next_seq(), t=t, payload=payload)
        self.outbound.put(msg)
        return msg

    def offer_inbound(self, message: TeleopMessage) -> bool:
        """Apply the at-most-once rule; returns whether the message was kept."""
        if message.seq <= self._last_in_seq:
            log.warning("dropping out-of-order frame seq=%d (last=%d)",
                        message.seq, self._last_in_seq)
            return False
        self._last_in_seq = message.seq
        self.inbound.put(message)
        return True

    def synthesize_stop(self, t: float) -> None:
        """Fail-safe on operator loss: inject a stop as if the operator had
        sent one."""
        self._last_in_seq += 1
        self.inbound.put(TeleopMessage(session=self.session_id, seq=self._last_in_seq,
                                       t=t, payload=StopExecution()))

    def drain_inbound(self) -> list[TeleopMessage]:
        out = []
        while True:
            try:
                out.append(self.inbound.get_nowait())
            except queue.Empty:
                return out

    def drain_outbound(self) -> list[TeleopMessage]:
        out = []
        while True:
            try:
                out.append(self.outbound.get_nowait())
            except queue.Empty:
                return out


# --- TCP session server -------------------------------------------------------

class OperatorClient:
    """Blocking client for the vehicle's session socket: one connection,
    own outbound sequence numbering, line-framed reads."""

    def __init__(self, host: str, port: int, session: str = "session-1", timeout: float = 5.0):
        self.session = session
        self._sock = socket.create_connection((host, port), timeout=timeout)
        self._file = self._sock.makefile("rb")
        self._seq = 0

    def send(self, payload: Payload, t: float = 0.0) -> TeleopMessage:
        self._seq += 1
        msg = TeleopMessage(session=self.session, seq=self._seq, t=t, payload=payload)
        self._sock.sendall(encode(msg))
        return msg

    def recv(self) -> TeleopMessage | None:
        line = self._file.readline()
        if not line:
            return None
        return decode(line)

    def close(self) -> None:
        try:
            self._file.close()
        except OSError:
            pass
        try:
            self._sock.close()
        except OSError:
            pass


class TeleopServer:
    """Single-operator stream-socket server bridging frames to the channel.

    Runs on its own threads; a second concurrent connection is refused. A
    disconnect while the session is live synthesizes a StopExecution so the
    vehicle halts even if the operator vanishes mid-execution.
    """

    def __init__(self, channel: SessionChannel, host: str = "127.0.0.1", port: int = 0,
                 clock=None):
        self.channel = channel
        self._clock = clock or (lambda: 0.0)
        self._listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._listener.bind((host, port))
        self._listener.listen(1)
        self.address = self._listener.getsockname()
        self._conn: socket.socket | None = None
        self._conn_lock = threading.Lock()
        self._stopping = threading.Event()
        self._threads: list[threading.Thread] = []
        self._outq: "queue.Queue[TeleopMessage]" = queue.Queue()

    def transmit(self, message: TeleopMessage) -> None:
        """Queue a vehicle-side message for the connected operator."""
        self._outq.put(message)

    def start(self) -> None:
        t = threading.Thread(target=self._accept_loop, name="teleop-accept", daemon=True)
        t.start()
        self._threads.append(t)
        t = threading.Thread(target=self._writer_loop, name="teleop-writer", daemon=True)
        t.start()
        self._threads.append(t)

    def stop(self) -> None:
        self._stopping.set()
        try:
            self._listener.close()
        except OSError:
            pass
        with self._conn_lock:
            if self._conn is not None:
                try:
                    self._conn.close()
                except OSError:
                    pass
                self._conn = None

    def _accept_loop(self) -> None:
        while not self._stopping.is_set():
            try:
                conn, addr = self._listener.accept()
            except OSError:
                return
            with self._conn_lock:
                if self._conn is not None:
                    log.warning("refusing second operator connection from %s", addr)
                    conn.close()
                    continue
                self._conn = conn
            self.channel.operator_connected = True
            log.info("operator connected from %s", addr)
            reader = threading.Thread(target=self._reader_loop, args=(conn,),
                                      name="teleop-reader", daemon=True)
            reader.start()
            self._threads.append(reader)

    def _reader_loop(self, conn: socket.socket) -> None:
        buf = b""
        try:
            while not self._stopping.is_set():
                chunk = conn.recv(4096)
                if not chunk:
                    break
                buf += chunk
                while b"\n" in buf:
                    line, buf = buf.split(b"\n", 1)
                    if not line.strip():
                        continue
                    try:
                        msg = decode(line)
                    except UnknownPayload as exc:
                        log.warning("unknown payload kind %r", exc.kind)
                        self.channel.send(Ack(acked_seq=exc.seq or 0,
                                              error=f"unknown payload kind {exc.kind!r}"),
                                          t=self._clock())
                        continue
                    except MalformedFrame as exc:
                        log.error("malformed frame, closing connection: %s", exc)
                        return
                    self.channel.offer_inbound(msg)
        except OSError:
            pass
        finally:
            self._drop_connection()

    def _drop_connection(self) -> None:
        with self._conn_lock:
            if self._conn is not None:
                try:
                    self._conn.close()
                except OSError:
                    pass
                self._conn = None
        if self.channel.operator_connected:
            self.channel.operator_connected = False
            if not self._stopping.is_set():
                log.warning("operator disconnected; synthesizing stop")
                self.channel.synthesize_stop(self._clock())

    def _writer_loop(self) -> None:
        while not self._stopping.is_set():
            try:
                msg = self._outq.get(timeout=0.05)
            except queue.Empty:
                continue
            with self._conn_lock:
                conn = self._conn
            if conn is None:
                continue
            try:
                conn.sendall(encode(msg))
            except OSError:
                self._drop_connection()

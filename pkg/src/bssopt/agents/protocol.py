"""Proposer messages and transport bindings.

A proposer answers line-delimited JSON requests::

    {"phase": "model"|"plan"|"revise"|"test", "role": "agent1".."agent4"|"solo",
     "summary": {...}, "model": {...}?, "feedback": {...}?, "retrieved": [...]?}

with exactly one of ``{"model": {...}}``, ``{"plan": {...}}`` or
``{"error": "..."}``. Unknown response fields are ignored; a missing
required field is a protocol violation.
"""
from __future__ import annotations

import json
import os
import queue
import shlex
import socket
import subprocess
import threading
from dataclasses import dataclass, field
from typing import Callable, Mapping

from ..coverage import ConstraintViolation, EvaluationReport, ViolationKind
from ..model import CandidateFilter, InputError
from ..solvers import ObjectiveMode

PHASES = ("model", "plan", "revise", "test")
ROLES = ("agent1", "agent2", "agent3", "agent4", "solo")
CONSTRAINTS = ("C1", "C2", "C3", "C4", "C5")
ENDPOINT_ENV = "BSSOPT_PROPOSER"


class ProposerError(Exception):
    """The proposer failed to produce a usable answer (timeout, bad reply, error reply)."""


class ProtocolError(ProposerError):
    pass


class ProposerTimeout(ProposerError):
    pass


@dataclass(frozen=True)
class ModelSpec:
    objective_mode: ObjectiveMode = ObjectiveMode.COST_FIRST
    constraints: tuple[str, ...] = CONSTRAINTS
    theta_cp: float | None = None
    notes: str = ""

    def __post_init__(self):
        object.__setattr__(self, "objective_mode", ObjectiveMode.parse(self.objective_mode))
        bad = set(self.constraints) - set(CONSTRAINTS)
        if bad:
            raise ProtocolError(f"unknown constraints {sorted(bad)}")
        object.__setattr__(self, "constraints", tuple(c for c in CONSTRAINTS if c in self.constraints))
        if self.theta_cp is not None and not 0 < self.theta_cp <= 1:
            raise ProtocolError(f"theta_cp override must lie in (0, 1], got {self.theta_cp}")

    def to_dict(self) -> dict:
        return {
            "objective_mode": self.objective_mode.value,
            "constraints": list(self.constraints),
            "theta_cp": self.theta_cp,
            "notes": self.notes,
        }

    @classmethod
    def from_dict(cls, d) -> "ModelSpec":
        if not isinstance(d, Mapping):
            raise ProtocolError("model must be an object")
        try:
            theta = d.get("theta_cp")
            return cls(
                objective_mode=d.get("objective_mode", "cost"),
                constraints=tuple(d.get("constraints", CONSTRAINTS)),
                theta_cp=None if theta is None else float(theta),
                notes=str(d.get("notes", "")),
            )
        except (InputError, TypeError, ValueError) as exc:
            raise ProtocolError(f"bad model: {exc}") from None


@dataclass(frozen=True)
class SolverPlan:
    """Algorithm tag, raw solver config mapping and candidate filter.

    The tag and config are validated when the plan is executed, not when it
    is parsed, so a bad plan surfaces as an execution error.
    """

    algorithm: str
    config: dict = field(default_factory=dict)
    candidate_filter: object = "weak"

    def to_dict(self) -> dict:
        cf = self.candidate_filter
        return {
            "algorithm": self.algorithm,
            "config": dict(self.config),
            "candidate_filter": cf.to_wire() if isinstance(cf, CandidateFilter) else cf,
        }

    @classmethod
    def from_dict(cls, d) -> "SolverPlan":
        if not isinstance(d, Mapping):
            raise ProtocolError("plan must be an object")
        if not isinstance(d.get("algorithm"), str):
            raise ProtocolError("plan is missing string field 'algorithm'")
        config = d.get("config", {})
        if not isinstance(config, Mapping):
            raise ProtocolError("plan 'config' must be an object")
        return cls(d["algorithm"], dict(config), d.get("candidate_filter", "weak"))


@dataclass(frozen=True)
class Feedback:
    violations: tuple[ConstraintViolation, ...]
    coverage_ratio: float
    cost: float
    iteration: int
    hint: str
    error: str | None = None

    @classmethod
    def from_report(cls, report: EvaluationReport, iteration: int,
                    extra: tuple[ConstraintViolation, ...] = ()) -> "Feedback":
        violations = tuple(report.violations) + tuple(extra)
        hints = []
        for v in violations:
            if v.kind is ViolationKind.COVERAGE_SHORTFALL:
                hints.append(f"coverage {report.coverage_ratio:.4f} is short by {v.measure:.4f}; "
                             "cover more weak-area traffic")
            else:
                hints.append(f"{v.kind.value}: {v.detail}")
        return cls(violations, report.coverage_ratio, report.cost, iteration,
                   "; ".join(dict.fromkeys(hints)))

    @classmethod
    def from_error(cls, message: str, iteration: int, kind: str = "protocol") -> "Feedback":
        return cls((), 0.0, 0.0, iteration, f"{kind} error: {message}", error=f"{kind}: {message}")

    def has(self, kind: ViolationKind) -> bool:
        return any(v.kind is kind for v in self.violations)

    def to_dict(self) -> dict:
        d = {
            "violations": [v.to_dict() for v in self.violations],
            "coverage_ratio": self.coverage_ratio,
            "cost": self.cost,
            "iteration": self.iteration,
            "hint": self.hint,
        }
        if self.error is not None:
            d["error"] = self.error
        return d


def make_request(phase: str, role: str, summary: dict, *, model=None, feedback=None,
                 retrieved=None, plan=None) -> dict:
    if phase not in PHASES or role not in ROLES:
        raise ValueError(f"bad phase/role {phase!r}/{role!r}")
    req = {"phase": phase, "role": role, "summary": summary}
    if model is not None:
        req["model"] = model.to_dict() if isinstance(model, ModelSpec) else model
    if feedback is not None:
        req["feedback"] = feedback.to_dict() if isinstance(feedback, Feedback) else feedback
    if plan is not None:
        req["plan"] = plan.to_dict() if isinstance(plan, SolverPlan) else plan
    if retrieved is not None:
        req["retrieved"] = list(retrieved)
    return req


def parse_response(response, expect: str):
    """Decode a proposer reply expected to carry ``expect`` ("model" or "plan")."""
    if not isinstance(response, Mapping):
        raise ProtocolError("response must be a JSON object")
    if "error" in response:
        raise ProposerError(f"proposer reported error: {response['error']}")
    if expect not in response:
        raise ProtocolError(f"response is missing required field {expect!r}")
    if expect == "model":
        return ModelSpec.from_dict(response["model"])
    return SolverPlan.from_dict(response["plan"])


# ---------------------------------------------------------------------------
# bindings


class Proposer:
    """Base binding: ``propose(request) -> response`` (both JSON-able dicts)."""

    def propose(self, request: dict) -> dict:
        raise NotImplementedError

    def __call__(self, request: dict) -> dict:
        return self.propose(request)

    def close(self) -> None:
        pass


class ScriptedProposer(Proposer):
    """In-process rule table keyed by phase.

    Each rule receives the request (after a JSON round trip, as an external
    proposer would) and returns the response mapping. Missing phases answer
    with an error reply. The ``calls`` list records every request seen.
    """

    def __init__(self, rules: Mapping[str, Callable[[dict], dict]]):
        self.rules = dict(rules)
        self.calls: list[dict] = []

    def propose(self, request: dict) -> dict:
        request = json.loads(json.dumps(request))
        self.calls.append(request)
        rule = self.rules.get(request["phase"])
        if rule is None:
            return {"error": f"no rule for phase {request['phase']!r}"}
        return json.loads(json.dumps(rule(request)))


class ExternalProposer(Proposer):
    """Line-delimited JSON over a child process (``command``) or a TCP
    endpoint (``tcp://host:port``). Calls block for at most ``timeout`` seconds.

    One instance serves one conversation at a time; a lock serializes calls.
    """

    def __init__(self, endpoint: str | list[str] | None = None, timeout: float = 30.0):
        endpoint = endpoint or os.environ.get(ENDPOINT_ENV)
        if not endpoint:
            raise InputError(f"no proposer endpoint given and ${ENDPOINT_ENV} is unset")
        self.endpoint = endpoint
        self.timeout = timeout
        self._lock = threading.Lock()
        self._proc = None
        self._sock = None
        self._buf = b""

    def _connect(self):
        if self._proc is not None or self._sock is not None:
            return
        ep = self.endpoint
        if isinstance(ep, str) and ep.startswith("tcp://"):
            host, _, port = ep[len("tcp://"):].rpartition(":")
            self._sock = socket.create_connection((host, int(port)), timeout=self.timeout)
        else:
            argv = shlex.split(ep) if isinstance(ep, str) else list(ep)
            self._proc = subprocess.Popen(argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE)
            self._lines = queue.Queue()
            threading.Thread(target=self._pump, args=(self._proc.stdout, self._lines),
                             daemon=True).start()

    @staticmethod
    def _pump(stream, lines):
        for line in iter(stream.readline, b""):
            lines.put(line)
        lines.put(None)

    def _send(self, data: bytes):
        if self._sock is not None:
            self._sock.sendall(data)
        else:
            self._proc.stdin.write(data)
            self._proc.stdin.flush()

    def _readline(self) -> bytes:
        if self._sock is not None:
            self._sock.settimeout(self.timeout)
            while b"\n" not in self._buf:
                try:
                    chunk = self._sock.recv(65536)
                except socket.timeout:
                    raise ProposerTimeout(f"no reply within {self.timeout}s") from None
                if not chunk:
                    raise ProtocolError("proposer closed the connection")
                self._buf += chunk
            line, _, self._buf = self._buf.partition(b"\n")
            return line
        try:
            line = self._lines.get(timeout=self.timeout)
        except queue.Empty:
            raise ProposerTimeout(f"no reply within {self.timeout}s") from None
        if line is None:
            raise ProtocolError("proposer process closed its output")
        return line

    def propose(self, request: dict) -> dict:
        with self._lock:
            try:
                self._connect()
                self._send((json.dumps(request, sort_keys=True) + "\n").encode("utf-8"))
                line = self._readline()
            except OSError as exc:
                self.close()
                raise ProposerError(f"transport failure: {exc}") from None
            except ProposerTimeout:
                self.close()
                raise
        try:
            reply = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"reply is not valid JSON: {exc.msg}") from None
        return reply

    def close(self) -> None:
        if self._proc is not None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            self._proc.kill()
            self._proc.wait()
            self._proc = None
        if self._sock is not None:
            self._sock.close()
            self._sock = None
        self._buf = b""

"""Hierarchical behavior arbitration.

A tree of arbitrators (priority or cost policy) over behavior components.
Each tick, exactly one applicable leaf is selected and asked for a command.
A behavior is applicable when its invocation condition holds, or when it is
already active and its commitment condition holds; commitment protects an
active behavior against deactivation but not against preemption by a
higher-priority option.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any, Callable

log = logging.getLogger(__name__)


class NoApplicableOption(Exception):
    """No leaf of the graph is applicable; the caller must hold a safe state."""


@dataclass(frozen=True)
class StandstillCommand:
    """Hold the current pose."""

    pose: Any = None


@dataclass(frozen=True)
class TrajectoryCommand:
    """Planned states over the horizon."""

    trajectory: Any

    def __post_init__(self):
        times = list(self.trajectory.times)
        if len(times) < 2 or any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("trajectory command needs >= 2 strictly increasing stamps")


Command = StandstillCommand | TrajectoryCommand


class BehaviorComponent:
    """Leaf node: invocation/commitment conditions plus a command generator.

    Subclasses override the condition and command methods; the constructor
    alternatively accepts plain callables, which keeps test graphs terse.
    """

    def __init__(self, name: str,
                 invocation: Callable[[Any], bool] | None = None,
                 commitment: Callable[[Any], bool] | None = None,
                 command: Callable[[Any], Command] | None = None):
        self.name = name
        self._invocation = invocation
        self._commitment = commitment
        self._command = command
        self.active = False
        self.last_applicable = False

    def invocation(self, situation) -> bool:
        if self._invocation is None:
            raise NotImplementedError
        return bool(self._invocation(situation))

    def commitment(self, situation) -> bool:
        if self._commitment is None:
            return False
        return bool(self._commitment(situation))

    def command(self, situation) -> Command:
        if self._command is None:
            raise NotImplementedError
        return self._command(situation)

    def gain_control(self, situation) -> None:
        pass

    def lose_control(self, situation) -> None:
        pass

    def __repr__(self):
        return f"<BehaviorComponent {self.name}>"


PRIORITY = "priority"
COST = "cost"


class Arbitrator:
    """Internal node choosing between applicable options.

    Priority policy picks the first applicable option in list order; cost
    policy picks the applicable option with the smallest finite non-negative
    cost (ties broken by list order). A cost that is non-finite or negative
    marks the option as not applicable.
    """

    def __init__(self, name: str, options: list,
                 policy: str = PRIORITY,
                 cost_fn: Callable[[Any, Any], float] | None = None):
        if not options:
            raise ValueError("arbitrator needs at least one option")
        if policy not in (PRIORITY, COST):
            raise ValueError(f"unknown policy {policy!r}")
        if policy == COST and cost_fn is None:
            raise ValueError("cost policy needs a cost function")
        self.name = name
        self.options = list(options)
        self.policy = policy
        self.cost_fn = cost_fn
        self.active = False
        self.last_applicable = False

    def __repr__(self):
        return f"<Arbitrator {self.name} {self.policy}>"


ArbitrationNode = BehaviorComponent | Arbitrator


def is_applicable(node: ArbitrationNode, situation, currently_active: bool) -> bool:
    """A behavior is applicable if invoked, or active and committed; an
    arbitrator is applicable if any of its options is."""
    if isinstance(node, Arbitrator):
        return any(is_applicable(opt, situation, opt.active) for opt in node.options)
    return node.invocation(situation) or (currently_active and node.commitment(situation))


@dataclass(frozen=True)
class ActivePath:
    """Names from root to the selected leaf plus, for every arbitrator
    passed, the applicability of each of its options."""

    names: tuple[str, ...]
    applicability: dict[str, tuple[tuple[str, bool], ...]]

    def leaf(self) -> str:
        return self.names[-1]


def _collect_nodes(node: ArbitrationNode, out: list) -> None:
    out.append(node)
    if isinstance(node, Arbitrator):
        for opt in node.options:
            _collect_nodes(opt, out)


class ArbitrationEngine:
    """Owns a graph and evaluates it once per tick."""

    def __init__(self, root: ArbitrationNode):
        nodes: list = []
        _collect_nodes(root, nodes)
        if len({id(n) for n in nodes}) != len(nodes):
            raise ValueError("arbitration graph must be a tree without shared nodes")
        self.root = root
        self.nodes = nodes
        self._active_leaf: BehaviorComponent | None = None
        self.last_path: ActivePath | None = None

    def _record_applicability(self, node: ArbitrationNode, situation) -> bool:
        """Evaluate and store applicability for the whole subtree; every
        condition is queried exactly once per tick."""
        if isinstance(node, Arbitrator):
            ok = False
            for opt in node.options:
                if self._record_applicability(opt, situation):
                    ok = True
        else:
            ok = node.invocation(situation) or (node.active and node.commitment(situation))
        node.last_applicable = bool(ok)
        return node.last_applicable

    def _select(self, node: ArbitrationNode, situation, chain, applicability):
        chain.append(node)
        if isinstance(node, BehaviorComponent):
            return node
        applicability[node.name] = tuple((opt.name, opt.last_applicable) for opt in node.options)
        applicable_opts = [opt for opt in node.options if opt.last_applicable]
        if node.policy == COST:
            chosen, best_cost = None, math.inf
            for opt in applicable_opts:
                cost = float(node.cost_fn(situation, opt))
                if not math.isfinite(cost) or cost < 0.0:
                    log.warning("cost arbitrator %s: invalid cost %r for %s, treating as inapplicable",
                                node.name, cost, opt.name)
                    continue
                if cost < best_cost:
                    chosen, best_cost = opt, cost
        else:
            chosen = applicable_opts[0] if applicable_opts else None
        if chosen is None:
            return None
        return self._select(chosen, situation, chain, applicability)

    def evaluate(self, situation) -> tuple[Command, ActivePath]:
        """Select the active leaf and generate its command.

        Raises NoApplicableOption when no leaf is applicable; activation
        hooks fire lose-then-gain on every change of the selected leaf.
        """
        applicable = self._record_applicability(self.root, situation)
        chain: list = []
        applicability: dict = {}
        leaf = self._select(self.root, situation, chain, applicability) if applicable else None
        if leaf is None:
            previous = self._active_leaf
            self._deactivate(situation)
            self.last_path = None
            raise NoApplicableOption(
                f"no applicable option (previously active: {previous.name if previous else None})")

        if leaf is not self._active_leaf:
            if self._active_leaf is not None:
                self._active_leaf.lose_control(situation)
            leaf.gain_control(situation)
            self._active_leaf = leaf

        chain_ids = {id(n) for n in chain}
        for node in self.nodes:
            node.active = id(node) in chain_ids
        path = ActivePath(names=tuple(n.name for n in chain), applicability=applicability)
        self.last_path = path
        return leaf.command(situation), path

    def _deactivate(self, situation) -> None:
        if self._active_leaf is not None:
            self._active_leaf.lose_control(situation)
            self._active_leaf = None
        for node in self.nodes:
            node.active = False

    def active_leaf_name(self) -> str | None:
        return self._active_leaf.name if self._active_leaf else None


def snapshot_graph(root: ArbitrationNode) -> dict:
    """Serializable tree of name/policy/applicable/active per node, for the
    timeline logger and the operator console."""
    if isinstance(node := root, Arbitrator):
        return {
            "name": node.name,
            "policy": node.policy,
            "applicable": bool(node.last_applicable),
            "active": bool(node.active),
            "options": [snapshot_graph(opt) for opt in node.options],
        }
    return {
        "name": node.name,
        "policy": "behavior",
        "applicable": bool(node.last_applicable),
        "active": bool(node.active),
        "options": [],
    }

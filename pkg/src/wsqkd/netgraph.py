"""Wavelength-saving network plans on 2N+1 nodes with N wavelengths.

The complete graph on an odd number of nodes decomposes into edge-disjoint
directed Hamiltonian cycles; assigning one wavelength per cycle lets every
node pair exchange photons simultaneously through a passive router. This
module builds such plans, validates them exhaustively, and answers routing
queries (per-link lookup, per-wavelength router port permutation, per-node
transmit/receive schedule).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

__all__ = [
    "WavelengthChannel",
    "DirectedLink",
    "NetworkPlan",
    "PortPermutation",
    "ScheduleEntry",
    "node_label",
    "label_to_index",
    "build_plan",
    "validate_plan",
    "route_lookup",
    "router_permutation",
    "node_schedule",
    "plan_isomorphic_to_cycles",
    "plan_to_records",
    "plan_to_dot",
]

_ALPHABET = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"


def node_label(index: int) -> str:
    """Display label for a node index (A, B, ... then N26, N27, ...)."""
    if index < 0:
        raise ValueError(f"node index must be non-negative, got {index}")
    if index < len(_ALPHABET):
        return _ALPHABET[index]
    return f"N{index}"


def label_to_index(label: str) -> int:
    """Inverse of :func:`node_label`."""
    s = label.strip().upper()
    if len(s) == 1 and s in _ALPHABET:
        return _ALPHABET.index(s)
    if s.startswith("N") and s[1:].isdigit():
        return int(s[1:])
    raise ValueError(f"unrecognized node label {label!r}")


@dataclass(frozen=True, slots=True)
class WavelengthChannel:
    """One wavelength channel; ``nominal_nm`` is for display only."""

    index: int
    nominal_nm: float

    def __post_init__(self) -> None:
        if self.index < 0:
            raise ValueError("wavelength index must be non-negative")
        if not self.nominal_nm > 0:
            raise ValueError("nominal_nm must be positive")


@dataclass(frozen=True, slots=True)
class DirectedLink:
    """One directed transmitter-to-receiver assignment.

    Router port p serves node p by convention, so the in port equals the
    source index and the out port equals the destination index.
    """

    src: int
    dst: int
    wavelength: WavelengthChannel
    router_in_port: int
    router_out_port: int

    def __post_init__(self) -> None:
        if self.src == self.dst:
            raise ValueError("no self link")
        if self.router_in_port != self.src or self.router_out_port != self.dst:
            raise ValueError("router ports must match link endpoints")

    @property
    def key(self) -> str:
        return f"{node_label(self.src)}2R2{node_label(self.dst)}"


@dataclass(frozen=True, slots=True)
class NetworkPlan:
    """A full routing plan: N directed Hamiltonian cycles on 2N+1 nodes."""

    n_wavelengths: int
    node_count: int
    wavelengths: tuple[WavelengthChannel, ...]
    cycles: tuple[tuple[int, ...], ...]
    links: tuple[DirectedLink, ...]

    def wavelength(self, index: int) -> WavelengthChannel:
        for w in self.wavelengths:
            if w.index == index:
                return w
        raise ValueError(f"unknown wavelength index {index}")

    def node_labels(self) -> tuple[str, ...]:
        return tuple(node_label(i) for i in range(self.node_count))


@dataclass(frozen=True, slots=True)
class PortPermutation:
    """Exit port for each entry port of the router, at one wavelength."""

    wavelength: WavelengthChannel
    mapping: tuple[int, ...]


@dataclass(frozen=True, slots=True)
class ScheduleEntry:
    wavelength: WavelengthChannel
    role: str  # "transmit" | "receive"
    peer: int


def _zigzag(ring: int) -> list[int]:
    # 0, +1, -1, +2, -2, ... walks every ring vertex, using each chord
    # length exactly once; rotating it yields edge-disjoint cycles.
    seq = [0]
    for step in range(1, ring):
        delta = step if step % 2 == 1 else -step
        seq.append((seq[-1] + delta) % ring)
    return seq


def default_wavelengths(n: int) -> tuple[WavelengthChannel, ...]:
    """Default channel grid: 1530 nm upward in 20 nm steps."""
    return tuple(WavelengthChannel(k, 1530.0 + 20.0 * k) for k in range(n))


def build_plan(
    n_wavelengths: int,
    nominal_nm: Sequence[float] | None = None,
) -> NetworkPlan:
    """Build the deterministic plan for ``2 * n_wavelengths + 1`` nodes.

    Construction: ring vertices plus a hub; cycle k is the hub joined to the
    zigzag walk rotated by k. Nodes are then relabeled so that cycle 0 visits
    0, 1, ..., 2N in order, which makes the two-wavelength plan read as the
    pentagon plus the pentagram.
    """
    n = n_wavelengths
    if not isinstance(n, int) or isinstance(n, bool):
        raise ValueError("n_wavelengths must be an integer")
    if n < 1:
        raise ValueError(
            "n_wavelengths must be >= 1; an even node count is not supported: "
            "plan for the next odd count and leave one router port unused"
        )
    if nominal_nm is None:
        wavelengths = default_wavelengths(n)
    else:
        if len(nominal_nm) != n:
            raise ValueError("nominal_nm must list one value per wavelength")
        wavelengths = tuple(
            WavelengthChannel(k, float(nm)) for k, nm in enumerate(nominal_nm)
        )
        for a, b in zip(wavelengths, wavelengths[1:]):
            if not a.nominal_nm < b.nominal_nm:
                raise ValueError("nominal_nm must be strictly increasing")

    ring = 2 * n
    zig = _zigzag(ring)
    # Relabel so cycle 0 becomes 0 -> 1 -> ... -> 2N -> 0 (hub is node 0).
    final = {("hub", 0): 0}
    for pos, v in enumerate(zig):
        final[("ring", v)] = pos + 1

    cycles = []
    for k in range(n):
        raw: list = [("hub", 0)] + [("ring", (v + k) % ring) for v in zig]
        cycles.append(tuple(final[v] for v in raw))

    links = []
    for k, cycle in enumerate(cycles):
        for i, src in enumerate(cycle):
            dst = cycle[(i + 1) % len(cycle)]
            links.append(
                DirectedLink(
                    src=src,
                    dst=dst,
                    wavelength=wavelengths[k],
                    router_in_port=src,
                    router_out_port=dst,
                )
            )

    return NetworkPlan(
        n_wavelengths=n,
        node_count=2 * n + 1,
        wavelengths=wavelengths,
        cycles=tuple(cycles),
        links=tuple(links),
    )


def validate_plan(plan: NetworkPlan) -> list[str]:
    """Brute-force check of every plan invariant.

    Returns an empty list when the plan is valid, otherwise one message per
    violation naming the invariant and the offending elements.
    """
    out: list[str] = []
    n = plan.n_wavelengths
    nodes = set(range(plan.node_count))

    if plan.node_count != 2 * n + 1:
        out.append(
            f"node-count: expected {2 * n + 1} nodes for N={n}, "
            f"got {plan.node_count}"
        )
    if len(plan.cycles) != n:
        out.append(f"cycle-count: expected {n} cycles, got {len(plan.cycles)}")

    seen_nm = [w.nominal_nm for w in plan.wavelengths]
    if sorted(set(w.index for w in plan.wavelengths)) != list(range(n)):
        out.append("wavelength-indices: must be exactly 0..N-1")
    if any(b <= a for a, b in zip(seen_nm, seen_nm[1:])):
        out.append("wavelength-nm: nominal_nm must increase with index")

    # Hamiltonicity per cycle.
    for k, cycle in enumerate(plan.cycles):
        if set(cycle) != nodes or len(cycle) != plan.node_count:
            out.append(
                f"hamiltonicity: cycle {k} is not a permutation of all "
                f"{plan.node_count} nodes: {cycle}"
            )

    # Edge-disjointness and coverage of the complete graph.
    edge_owner: dict[frozenset[int], int] = {}
    for k, cycle in enumerate(plan.cycles):
        for i, u in enumerate(cycle):
            v = cycle[(i + 1) % len(cycle)]
            if u == v:
                out.append(f"self-loop: cycle {k} contains {u}->{v}")
                continue
            e = frozenset((u, v))
            if e in edge_owner:
                out.append(
                    f"edge-disjointness: edge {tuple(sorted(e))} appears in "
                    f"cycles {edge_owner[e]} and {k}"
                )
            else:
                edge_owner[e] = k
    complete = {frozenset(p) for p in itertools.combinations(sorted(nodes), 2)}
    missing = complete - set(edge_owner)
    for e in sorted(missing, key=sorted):
        out.append(f"coverage: pair {tuple(sorted(e))} not covered by any cycle")

    # Links must mirror the cycles exactly, one direction per pair.
    expected = set()
    for k, cycle in enumerate(plan.cycles):
        for i, u in enumerate(cycle):
            expected.add((u, cycle[(i + 1) % len(cycle)], k))
    actual = {(l.src, l.dst, l.wavelength.index) for l in plan.links}
    for item in sorted(expected - actual):
        out.append(f"links: missing directed link {item}")
    for item in sorted(actual - expected):
        out.append(f"links: spurious directed link {item}")
    if len(plan.links) != len(actual):
        out.append("links: duplicate DirectedLink entries")

    pair_count: dict[frozenset[int], int] = {}
    for l in plan.links:
        pair_count[frozenset((l.src, l.dst))] = (
            pair_count.get(frozenset((l.src, l.dst)), 0) + 1
        )
    for pair, cnt in sorted(pair_count.items(), key=lambda kv: sorted(kv[0])):
        if cnt != 1:
            out.append(
                f"pair-uniqueness: pair {tuple(sorted(pair))} has {cnt} links"
            )

    # Per node, per wavelength: out-degree and in-degree exactly one.
    for k in range(n):
        for a in nodes:
            outs = [l for l in plan.links if l.wavelength.index == k and l.src == a]
            ins = [l for l in plan.links if l.wavelength.index == k and l.dst == a]
            if len(outs) != 1:
                out.append(
                    f"degree: node {a} has out-degree {len(outs)} on wavelength {k}"
                )
            if len(ins) != 1:
                out.append(
                    f"degree: node {a} has in-degree {len(ins)} on wavelength {k}"
                )

    return out


def route_lookup(plan: NetworkPlan, a: int, b: int) -> DirectedLink:
    """The unique link whose endpoint set is {a, b}."""
    if a == b:
        raise ValueError("no self link")
    for node in (a, b):
        if not 0 <= node < plan.node_count:
            raise ValueError(f"unknown node {node}")
    for link in plan.links:
        if {link.src, link.dst} == {a, b}:
            return link
    raise ValueError(f"no link between {a} and {b}")  # unreachable on valid plans


def router_permutation(plan: NetworkPlan, wavelength_index: int) -> PortPermutation:
    """Port mapping of the router at one wavelength (a single (2N+1)-cycle)."""
    w = plan.wavelength(wavelength_index)
    mapping = [-1] * plan.node_count
    for link in plan.links:
        if link.wavelength.index == wavelength_index:
            mapping[link.router_in_port] = link.router_out_port
    return PortPermutation(wavelength=w, mapping=tuple(mapping))


def node_schedule(plan: NetworkPlan, a: int) -> list[ScheduleEntry]:
    """What node ``a`` does on every wavelength: 2N entries, one transmit and
    one receive per wavelength, peers covering every other node once."""
    if not 0 <= a < plan.node_count:
        raise ValueError(f"unknown node {a}")
    entries = []
    for link in plan.links:
        if link.src == a:
            entries.append(ScheduleEntry(link.wavelength, "transmit", link.dst))
        elif link.dst == a:
            entries.append(ScheduleEntry(link.wavelength, "receive", link.src))
    entries.sort(key=lambda e: (e.wavelength.index, e.role != "transmit"))
    return entries


def _rotations(cycle: Sequence[int]) -> set[tuple[int, ...]]:
    c = tuple(cycle)
    return {c[i:] + c[:i] for i in range(len(c))}


def plan_isomorphic_to_cycles(
    plan: NetworkPlan, target_cycles: Sequence[Sequence[int]]
) -> bool:
    """True when one node relabeling maps every plan cycle onto the target
    cycle of the same wavelength (as directed cycles, up to rotation).

    Exhaustive over relabelings, so intended for small plans.
    """
    if len(target_cycles) != len(plan.cycles):
        return False
    nodes = list(range(plan.node_count))
    targets = [(_rotations(t)) for t in target_cycles]
    for perm in itertools.permutations(nodes):
        ok = True
        for cycle, rotset in zip(plan.cycles, targets):
            mapped = tuple(perm[v] for v in cycle)
            if mapped not in rotset:
                ok = False
                break
        if ok:
            return True
    return False


def plan_to_records(plan: NetworkPlan) -> str:
    """One text record per directed link: src, dst, wavelength index, nm."""
    lines = ["src\tdst\twavelength\tnominal_nm"]
    for link in plan.links:
        lines.append(
            f"{node_label(link.src)}\t{node_label(link.dst)}\t"
            f"{link.wavelength.index}\t{link.wavelength.nominal_nm:.1f}"
        )
    return "\n".join(lines) + "\n"


def plan_to_dot(plan: NetworkPlan) -> str:
    """Graphviz digraph of the plan, one color-tagged edge per link."""
    lines = ["digraph plan {"]
    for i in range(plan.node_count):
        lines.append(f'  {node_label(i)} [label="{node_label(i)}"];')
    for link in plan.links:
        lines.append(
            f"  {node_label(link.src)} -> {node_label(link.dst)} "
            f'[label="{link.wavelength.nominal_nm:.0f}nm"];'
        )
    lines.append("}")
    return "\n".join(lines) + "\n"

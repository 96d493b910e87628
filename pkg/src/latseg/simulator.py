"""Bounded-stage run of the priority-tree construction.

Each node of the priority tree carries a dynamical tree: the initial tree
at the root, extension trees that forward requests, differentiating and
splitting trees that force the functional's behaviour, and lattice trees
that pass a level of the presentation.  A stage lets every live node act
in ``<*`` order, resolves the highest-priority trigger, designates new
nodes, and (in checked mode) audits the stage.

Searches that the construction runs without bound here stop at a step
budget that grows with the stage number; a search that fails within the
budget fails at that stage and is retried later.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .errors import (
    BudgetExceeded,
    InvariantViolation,
    LatsegError,
    NoHomogeneityInterpolants,
    NoMeetInterpolants,
    PreconditionFailed,
)
from .interpolation import extendibility_interpolate, glb_interpolate
from .stages import StagedTable
from .trees import (
    Str,
    StringFunctional,
    TreeMap,
    constant,
    delayed,
    empty_tree,
    ext_subtree,
    extend_type,
    extension_kind,
    find_e_splitting,
    fmt,
    is_prefix,
    never,
    on_projection,
    project,
    reader,
    single_node,
    strkey,
    transfer,
)

Path = tuple[int, ...]
Pair = tuple[Str, int]

INIT, EXT, DIFF, SP, LTREE = "Init", "Ext", "Diff", "Sp", "LTree"
TRACE_SCHEMA = 1


# ---------------------------------------------------------------- priority order


def left_of(a: Path, b: Path) -> bool:
    for x, y in zip(a, b):
        if x != y:
            return x < y
    return False


def higher_priority(a: Path, b: Path) -> bool:
    """``a < b``: ``a`` is left of ``b`` or a proper initial segment of it."""
    return left_of(a, b) or (len(a) < len(b) and b[: len(a)] == a)


def acting_key(p: Path) -> tuple:
    """``<*``: left before right, descendants before ancestors."""
    return p + (float("inf"),)


def pair_key(pair: Pair) -> tuple:
    alpha, i = pair
    return (len(alpha), alpha, i)


def fmt_pair(pair: Pair | None) -> str | None:
    return None if pair is None else f"{fmt(pair[0])},{pair[1]}"


def fmt_path(p: Path) -> str:
    return fmt(p)


# ---------------------------------------------------------------- requirements


def default_functionals() -> list[StringFunctional]:
    """Functionals that never split and either converge at once or never.

    Convergent readers make low-priority strategies find splittings late and
    then combine long runs of plateaus; a type 0 fill over ``h`` levels adds
    ``2^h`` nodes, so long runs use this pair.
    """
    return [constant(0), never()]


def reader_functionals() -> list[StringFunctional]:
    """A richer list whose readers exercise the splitting pipeline in short runs."""
    return [
        reader(),
        constant(0),
        reader(lambda x: 2 * x, "read(2x)"),
        never(),
        delayed(reader(), 3),
    ]


@dataclass
class RequirementSchedule:
    """Requirements by priority-tree level; the pattern of levels is L, Sp, Diff, Sp.

    Level 0 is the initial tree.  Splitting levels take the next functional
    for the top element; differentiating levels take the next functional
    with the next pair ``a`` not below ``b``; levels ``4i`` are lattice trees.
    """

    table: StagedTable
    functionals: list[StringFunctional] = field(default_factory=default_functionals)
    pi2: Callable[[int, int, int], bool] = field(default=lambda x, y, i: True)

    def kind(self, level: int) -> str:
        if level == 0:
            return INIT
        if level % 2:
            return SP
        return DIFF if level % 4 == 2 else LTREE

    def diff_pairs(self) -> list[tuple[int, int]]:
        L = self.table.lattice
        return [(a, b) for a in L.elements for b in L.elements if not L.le(a, b)]

    def requirement(self, level: int) -> dict:
        kind = self.kind(level)
        if kind == SP:
            e = (level - 1) // 2
            return {"e": e, "k": self.table.lattice.top}
        if kind == DIFF:
            e = (level - 2) // 4
            pairs = self.diff_pairs()
            a, b = pairs[e % len(pairs)]
            return {"e": e, "a": a, "b": b}
        if kind == LTREE:
            return {"i": level // 4}
        return {}

    def functional(self, e: int) -> StringFunctional:
        return self.functionals[e % len(self.functionals)]

    def looks_correct(self, stage: int, i: int) -> bool:
        return all(any(self.pi2(x, y, i) for y in range(stage + 1)) for x in range(stage + 1))


# ---------------------------------------------------------------- nodes


class _Identity:
    """``Id_h`` as an enclosing tree, without materializing it."""

    def __init__(self, table: StagedTable, height: int):
        self.table, self.ht = table, height

    def __call__(self, sigma):
        sigma = tuple(sigma)
        return sigma if len(sigma) <= self.ht and self.table.in_S(sigma) else None

    preimage = __call__

    def on(self, sigma) -> bool:
        return self(sigma) is not None

    def terminal(self, sigma) -> bool:
        return len(sigma) == self.ht


@dataclass
class StrategyNode:
    path: Path
    designation: str
    born: int
    tree: TreeMap
    params: dict = field(default_factory=dict)
    state: tuple | None = None
    transmitted: tuple[Pair, ...] = ()
    received: tuple[Pair, ...] = ()
    cancelled: bool = False
    phase: int = 0
    memo: dict = field(default_factory=dict)
    growth: dict = field(default_factory=dict)
    prev_state: tuple | None = None
    prev_received: tuple[Pair, ...] = ()
    preferred: Pair | None = None
    began_phase1: bool = False
    origin: str = ""

    def __post_init__(self):
        self.origin = self.origin or self.designation

    @property
    def is_phase1(self) -> bool:
        return (self.designation == DIFF and self.tree.empty) or (self.designation == LTREE and self.phase == 1)

    @property
    def is_phase2(self) -> bool:
        return self.designation == SP or (self.designation == LTREE and self.phase == 2)

    def sent(self) -> Pair | None:
        return self.transmitted[0] if len(self.transmitted) == 1 else None

    def low_sent(self) -> Pair | None:
        low = [p for p in self.transmitted if p[1] <= 1]
        return min(low, key=pair_key) if low else None


@dataclass
class StageRecord:
    stage: int
    order: list[str]
    nodes: dict
    trigger: dict | None
    cancelled: list[str]
    designated: list[str]
    grew: list[str]
    gamma: Path
    alpha: Str
    violations: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(
            {
                "schema": TRACE_SCHEMA,
                "stage": self.stage,
                "order": self.order,
                "nodes": self.nodes,
                "trigger": self.trigger,
                "cancelled": self.cancelled,
                "designated": self.designated,
                "grew": self.grew,
                "gamma": fmt_path(self.gamma),
                "alpha": fmt(self.alpha),
                "violations": self.violations,
                "warnings": self.warnings,
            },
            sort_keys=True,
        )


def reception_problems(T: TreeMap, received: Iterable[Pair], before: Iterable[Pair]) -> list[str]:
    """Which clauses of appropriate reception fail for ``T`` (its tree at the previous stage)."""
    out = []
    rec = sorted(set(received), key=pair_key)
    earlier = set(before)
    for alpha, i in rec:
        tag = fmt_pair((alpha, i))
        if not T.on(alpha):
            out.append(f"(i) {tag} not on the tree")
            continue
        if i == 0 and not len(alpha) < T.ht:
            out.append(f"(ii) {tag} at the top")
        if i == 1 and not T.is_merely_potential(alpha):
            out.append(f"(iii) {tag} not merely potential")
        if i >= 2 and (alpha, i) not in earlier and not T.is_potential_focal(alpha):
            out.append(f"(iv) {tag} not potential")
    for x in range(len(rec)):
        for y in range(x + 1, len(rec)):
            a, b = rec[x][0], rec[y][0]
            if not (is_prefix(a, b) or is_prefix(b, a)):
                out.append(f"(v) {fmt(a)} and {fmt(b)} incomparable")
    return out


def prefer(received: Iterable[Pair]) -> Pair | None:
    low = [p for p in received if p[1] <= 1]
    return min(low, key=pair_key) if low else None


def least_top_extension(T: TreeMap, sigma: Str) -> Str | None:
    """Least domain string extending ``sigma`` at the top of ``T``."""
    sigma = tuple(sigma)
    if sigma not in T.images:
        return None
    while len(sigma) < T.depth:
        kids = T.children(sigma)
        if not kids:
            return None
        sigma = kids[0]
    return sigma


class StrategyFailure(LatsegError):
    """A step the construction promises cannot be carried out on the current trees."""


# ---------------------------------------------------------------- the run


@dataclass
class RunResult:
    nodes: dict[Path, StrategyNode]
    trace: list[StageRecord]
    alphas: list[Str]
    gammas: list[Path]
    roots: dict[Path, tuple[int, str, Str]]

    def violations(self) -> list[str]:
        return [f"stage {r.stage}: {v}" for r in self.trace for v in r.violations]

    def warnings(self) -> list[str]:
        return [f"stage {r.stage}: {v}" for r in self.trace for v in r.warnings]

    def export(self) -> str:
        return "".join(r.to_json() + "\n" for r in self.trace)


class Construction:
    def __init__(
        self,
        table: StagedTable,
        schedule: RequirementSchedule | None = None,
        budget: Callable[[int], int] | None = None,
        checked: bool = True,
        faults: Sequence[str] = (),
        max_tree_size: int = 50_000,
    ):
        self.S = table
        self.max_tree_size = max_tree_size
        self.schedule = schedule or RequirementSchedule(table)
        self.budget_fn = budget or (lambda t: 4 * t + 8)
        self.checked = checked
        self.faults = set(faults)
        self.stage = 0
        root = StrategyNode((), INIT, 0, single_node(table, ()))
        self.nodes: dict[Path, StrategyNode] = {(): root}
        self.gamma: Path = ()
        self.alpha: Str = ()
        self.trace: list[StageRecord] = []
        self.alphas: list[Str] = [()]
        self.gammas: list[Path] = [()]
        self.roots: dict[Path, tuple[int, str, Str]] = {}
        self.trace.append(self._record([], None, [], [], [], [], []))

    # -- small accessors

    @property
    def budget(self) -> int:
        return self.budget_fn(self.stage)

    def live(self) -> list[Path]:
        return sorted((p for p, n in self.nodes.items() if not n.cancelled), key=acting_key)

    def parent_prev(self, node: StrategyNode) -> TreeMap:
        return self.prev[node.path[:-1]]

    @property
    def ht0(self) -> int:
        return self.prev[()].ht

    def parent_extended(self, node: StrategyNode, kind: int, alpha: Str) -> bool:
        """The parent's tree at the previous stage was a type ``kind`` extension for ``alpha`` at full height."""
        parent = self.nodes[node.path[:-1]]
        return parent.growth.get(self.stage - 1) == (kind, tuple(alpha)) and self.parent_prev(node).ht == self.ht0

    def special_ok(self, node: StrategyNode, alpha_star: Str) -> bool:
        P = self.parent_prev(node)
        return P.ht == self.ht0 and P.in_last_plateau(alpha_star)

    def transmit(self, node: StrategyNode, alpha: Str, i: int, state: tuple) -> None:
        node.transmitted = ((tuple(alpha), i),)
        node.state = state

    # -- stage loop

    def run(self, stages: int) -> RunResult:
        for _ in range(stages):
            self.step()
        return RunResult(self.nodes, self.trace, self.alphas, self.gammas, self.roots)

    def step(self) -> StageRecord:
        self.stage += 1
        t = self.stage
        self.prev = {p: n.tree for p, n in self.nodes.items()}
        self.grown_before = {}
        at_start = {p for p, n in self.nodes.items() if not n.cancelled}
        for n in self.nodes.values():
            n.prev_state, n.prev_received = n.state, n.received
            n.received, n.transmitted, n.preferred = (), (), None
            n.began_phase1 = n.is_phase1 or (n.designation == LTREE and n.phase == 0)
        order, cancelled = [], []
        for p in self.live():
            node = self.nodes[p]
            if node.cancelled:
                continue
            order.append(fmt_path(p))
            self.act(node)
            low = node.low_sent()
            if p and low is not None and "skip-cancel" not in self.faults:
                for q in self.live():
                    if len(q) >= len(p) and q[: len(p) - 1] == p[:-1] and q[len(p) - 1] > p[-1]:
                        self.nodes[q].cancelled = True
                        cancelled.append(fmt_path(q))
            if p:
                par = self.nodes[p[:-1]]
                par.received = par.received + tuple(x for x in node.transmitted if x not in par.received)
        for p in sorted((q for q in self.live() if self.nodes[q].designation == EXT), key=len):
            node = self.nodes[p]
            try:
                node.tree = ext_subtree(self.nodes[p[:-1]].tree, node.params["xi"])
            except LatsegError as exc:
                node.memo["failure"] = f"{fmt_path(p)}: {exc}"
        grew = []
        for p in self.live():
            node = self.nodes[p]
            if node.tree != self.prev.get(p, node.tree) and p in at_start:
                pref = prefer(node.received)
                kind = None
                if pref is not None and not self.prev[p].empty:
                    kind = extension_kind(self.prev[p], node.tree, pref[0])
                node.growth[t] = (kind, pref[0] if pref else None)
                if node.designation != EXT:
                    grew.append(fmt_path(p))
        triggers = self.detect_triggers(at_start)
        designated: list[str] = []
        trig = self.designate(triggers, cancelled, designated)
        active = {p for p in at_start if not self.nodes[p].cancelled}
        violations, warnings = (self.audit(active, triggers) if self.checked else ([], []))
        for p in active | {q for q in self.nodes if fmt_path(q) in designated}:
            node = self.nodes[p]
            if not node.tree.empty and p not in self.roots:
                self.roots[p] = (t, node.origin, node.tree.root())
        for node in self.nodes.values():
            if node.designation == DIFF and "xi" in node.params:
                node.designation = EXT
        biggest = max(len(n.tree) for n in self.nodes.values() if not n.cancelled)
        if biggest > self.max_tree_size:
            raise BudgetExceeded(biggest, self.max_tree_size)
        self.alphas.append(self.alpha)
        self.gammas.append(self.gamma)
        rec = self._record(order, trig, cancelled, designated, grew, violations, warnings)
        self.trace.append(rec)
        return rec

    def _record(self, order, trig, cancelled, designated, grew, violations, warnings) -> StageRecord:
        nodes = {}
        for p in sorted(self.nodes, key=acting_key):
            n = self.nodes[p]
            if n.cancelled and fmt_path(p) not in cancelled:
                continue
            nodes[fmt_path(p)] = {
                "designation": n.designation,
                "state": None if n.state is None else list(n.state),
                "sent": [fmt_pair(x) for x in n.transmitted],
                "received": [fmt_pair(x) for x in sorted(n.received, key=pair_key)],
                "size": len(n.tree),
                "root": None if n.tree.empty else fmt(n.tree.root()),
                "height": n.tree.ht,
                "cancelled": n.cancelled,
            }
        return StageRecord(self.stage, order, nodes, trig, cancelled, designated, grew, self.gamma, self.alpha, violations, warnings)

    # -- strategies

    def act(self, node: StrategyNode) -> None:
        try:
            if node.designation == INIT:
                self.step_init(node)
            elif node.designation == EXT:
                self.step_ext(node)
            elif node.designation == DIFF:
                self.step_diff(node)
            elif node.designation == SP:
                self.step_sp(node)
            elif node.designation == LTREE:
                self.step_ltree(node)
        except LatsegError as exc:
            # a promised step could not be carried out; the checker reports it
            node.memo["failure"] = f"{fmt_path(node.path)}: {exc}"
            node.transmitted = ()

    def step_init(self, node: StrategyNode) -> None:
        pref = prefer(node.received)
        node.preferred = pref
        if pref is None or reception_problems(self.prev[()], [pref], node.prev_received):
            return
        alpha, i = pref
        node.tree = extend_type(node.tree, _Identity(self.S, self.stage), alpha, i, target_height=self.stage)

    def step_ext(self, node: StrategyNode) -> None:
        node.transmitted = tuple(sorted(set(node.received), key=pair_key))
        node.preferred = prefer(node.received)

    # Diff

    def step_diff(self, node: StrategyNode) -> None:
        P = self.parent_prev(node)
        m = node.memo
        pc = m.get("pc", "step0")
        p, q = node.params["p"], node.params["q"]
        a, b = node.params["a"], node.params["b"]
        if pc == "step0":
            if P.empty or P.ht != self.ht0:
                node.state = (0,)
                return
            pc = "step1" if (p,) not in P.images else "step2"
        if pc == "step1":
            if self.parent_extended(node, 1, P.root()):
                m["delta"], m["v_tree"] = P((p,)), P
                pc = "step3"
            else:
                m["pc"] = "step1"
                self.transmit(node, P.root(), 1, (1,))
                return
        if pc == "step2":
            if not self.special_ok(node, P.root()):
                m["pc"] = "step2"
                self.transmit(node, P.root(), 0, (2,))
                return
            m["delta"], m["v_tree"] = P((p,)), P
            pc = "step3"
        Phi = on_projection(self.schedule.functional(node.params["e"]), self.S, b)
        if pc == "step3":
            if "tau" not in m:
                V = m["v_tree"]
                cands = [img for img in V.ran() if is_prefix(m["delta"], img) and V.is_potential_focal(img)]
                m["tau"] = min(cands, key=strkey)
                m["tau_dom"] = V.preimage(m["tau"])
                gp, gq = project(P((p,)), self.S, a), project(P((q,)), self.S, a)
                m["x"] = next(x for x in range(min(len(gp), len(gq))) if gp[x] != gq[x])
            x = m["x"]
            found = None
            for img in P.ran():
                if is_prefix(m["tau"], img) and Phi(img, x, self.budget) is not None:
                    found = img
                    break
            if found is None:
                m["pc"] = "step3"
                self.transmit(node, m["tau"], 2, (3,))
                return
            m["sigma"], m["eta"] = found, P.preimage(found)
            pc = "step4.0"
        if pc == "step4.0":
            if not self.special_ok(node, P.root()):
                m["pc"] = "step4.0"
                self.transmit(node, P.root(), 0, (4, 0))
                return
            pc = "step4.1"
        if pc == "step4.1":
            x = m["x"]
            z = Phi(m["sigma"], x)
            r = p if project(P((p,)), self.S, a)[x] != z else q
            lam = m["eta"] if r == p else transfer((p,), (q,), m["eta"])
            xi = least_top_extension(P, lam)
            if xi is None:
                raise StrategyFailure(f"no top string above {fmt(lam)}")
            node.tree = ext_subtree(P, xi).with_images({(): P(xi)}, ())
            node.params["xi"] = xi
            node.state = (4, 1)
            m["pc"] = "done"

    # Phase-2 common part

    def _start_level(self, node: StrategyNode) -> bool:
        """Express preference and run Step 1; True when the new level may be built."""
        P = self.parent_prev(node)
        pref = prefer(node.received)
        node.preferred = pref
        m = node.memo
        if pref is None or reception_problems(self.prev[node.path], node.received, node.prev_received):
            node.state = (0, 1)
            node.memo = {}
            return False
        if m.get("pair") != pref:
            node.memo = m = {"pair": pref, "pc": "step1"}
        if m["pc"] == "done":
            node.state = (0, 1)
            return False
        if m["pc"] != "step1":
            return True
        alpha, i_star = pref
        if i_star == 1:
            alpha_star = alpha
        else:
            focal = [P(k) for k in P.focal_points() if is_prefix(P(k), alpha)]
            if not focal:
                node.state = (0, 1)
                return False
            alpha_star = max(focal, key=len)
        m["alpha_star"], m["i_star"] = alpha_star, i_star
        if not self.parent_extended(node, i_star, alpha_star):
            self.transmit(node, alpha_star, i_star, (1,))
            return False
        T = self.prev[node.path]
        start = T.preimage(alpha) if i_star == 1 else T.shortening(alpha)
        Tp = extend_type(T, P, alpha, 2, start=start)
        xis = [
            k for k in Tp.at_length(Tp.depth)
            if Tp.terminal(k) and is_prefix(start, k) and is_prefix(alpha_star, Tp(k))
        ]
        m["Tp"], m["xis"] = Tp, xis
        m["xi_plus"] = [P.preimage(Tp(k)) for k in xis]
        m["pc"] = "level"
        return True

    def _grow(self, node: StrategyNode, images: dict) -> None:
        m = node.memo
        node.tree = m["Tp"].with_images({**m["Tp"].images, **images}, self._marks_after(node))
        node.state = (0, 1)
        m["pc"] = "done"

    def _marks_after(self, node: StrategyNode):
        m = node.memo
        Tp = m["Tp"]
        marks = set(Tp.marks)
        if m["i_star"] == 1:
            marks.add(self.prev[node.path].preimage(m["pair"][0]))
        return marks

    # L-tree

    def step_ltree(self, node: StrategyNode) -> None:
        if node.phase == 0:
            node.phase = 1
        if node.phase == 1:
            self._ltree_phase1(node)
            return
        if not self._start_level(node):
            return
        m = node.memo
        P = self.parent_prev(node)
        if m["pc"] == "level":
            top = [P.preimage(P(k)) for k in P.at_length(P.depth) if is_prefix(m["pair"][0], P(k)) and P.terminal(k)]
            m["alpha_prime"] = P(min(top, key=strkey)) if top else m["alpha_star"]
            m["pc"] = "pi2"
        if m["pc"] == "pi2":
            if not self.schedule.looks_correct(self.stage, node.params["i"]):
                self.transmit(node, m["alpha_prime"], 4, (2,))
                return
            m["pc"] = "grow"
        if m["pc"] == "grow":
            if not self.special_ok(node, m["alpha_star"]):
                self.transmit(node, m["alpha_star"], 0, (3, 0))
                return
            Tp = m["Tp"]
            images = {}
            for k, xi in zip(m["xis"], m["xi_plus"]):
                for a in Tp.letters(len(k)):
                    img = _stretch_to(P, xi, a, P.ht)
                    if img is None:
                        raise StrategyFailure(f"no top string above {fmt(xi)}*{a}")
                    images[k + (a,)] = img
            self._grow(node, images)

    def _ltree_phase1(self, node: StrategyNode) -> None:
        P = self.parent_prev(node)
        m = node.memo
        pc = m.get("pc", "step0")
        if pc == "step0":
            if P.empty or P.ht != self.ht0:
                node.state = (0,)
                return
            pc = "step1"
        if pc == "step1":
            internal = bool(P.children(()))
            if not internal and not self.parent_extended(node, 1, P.root()):
                m["pc"] = "step1"
                self.transmit(node, P.root(), 1, (1,))
                return
            pc = "step2"
        if pc == "step2":
            if not self.special_ok(node, P.root()):
                m["pc"] = "step2"
                self.transmit(node, P.root(), 0, (2, 0))
                return
            xi = P.at_length(P.depth)[0]
            node.tree = empty_tree(self.S).with_images({(): P(xi)}, ())
            node.phase = 2
            node.state = (0, 1)
            node.memo = {}

    # Sp

    def step_sp(self, node: StrategyNode) -> None:
        if node.tree.empty:
            node.state = (0,)
            return
        if not self._start_level(node):
            return
        m = node.memo
        P = self.parent_prev(node)
        k = node.params["k"]
        Phi = self.schedule.functional(node.params["e"])
        L = self.S.lattice
        if m["pc"] == "level":
            etas, slots = [], []
            for a_idx, xp in enumerate(m["xi_plus"]):
                for j in P.letters(len(xp)):
                    if xp + (j,) in P.images:
                        etas.append(xp + (j,))
                        slots.append((m["xis"][a_idx], j))
            m["eta0"], m["slots"], m["eta"] = etas, slots, list(etas)
            beta = [P(e) for e in etas]
            m["pairs"] = [
                (i, j) for i in range(len(beta)) for j in range(i + 1, len(beta))
                if not self.S.strings_related(k, beta[i], beta[j])
            ]
            m["u"] = 0
            m["pc"] = ("pair", 0)
        while m["pc"] not in ("finish", "terminated"):
            u = m["u"]
            iu, ju = m["pairs"][u]
            pc = m["pc"]
            if pc == ("pair", 0):
                if not self.special_ok(node, m["alpha_star"]):
                    self.transmit(node, m["alpha_star"], 0, (u + 2, 0))
                    return
                hat = least_top_extension(P, m["eta"][iu])
                if hat is None:
                    raise StrategyFailure("no top string above the current pair")
                m["hat_i"] = hat
                pc = m["pc"] = ("pair", 1)
            if pc == ("pair", 1):
                if not self.parent_extended(node, 1, P(m["hat_i"])):
                    self.transmit(node, P(m["hat_i"]), 1, (u + 2, 1))
                    return
                suffix = m["hat_i"][len(m["eta"][iu]):]
                m["hat"] = [e + suffix for e in m["eta"]]
                bi, bj = P(m["eta"][iu]), P(m["eta"][ju])
                y = next(y for y in range(len(bi)) if not self.S.related(k, bi[y], bj[y]))
                rel = [c for c in L.elements if self.S.related(c, bi[y], bj[y])]
                m["m"] = L.join_all(rel)
                m["b"] = L.meet[m["m"]][k]
                m["prefix"] = m["hat_i"] + (P.letters(len(m["hat_i"]))[0],)
                pc = m["pc"] = ("pair", 2)
            if pc == ("pair", 2):
                prefix = m["prefix"]
                E = ext_subtree(P, prefix)
                found = find_e_splitting(Phi, E, P(prefix), m["b"], self.budget)
                if found is None:
                    self.transmit(node, P(prefix), 3, (u + 2, 2))
                    return
                m["split"] = found
                pc = m["pc"] = ("pair", 3)
            if pc == ("pair", 3):
                if not self.special_ok(node, m["alpha_star"]):
                    self.transmit(node, m["alpha_star"], 0, (u + 2, 3))
                    return
                g0, g1, x = m["split"]
                z0 = self._related_tops(P, P.preimage(g0), P.preimage(g1), m["b"])
                if z0 is None:
                    raise StrategyFailure("no related top extensions of the splitting")
                m["x"] = x
                prefix = m["prefix"]
                try:
                    chain = glb_interpolate(self.S, m["m"], k, m["b"], prefix, z0[0][len(prefix):], z0[1][len(prefix):])
                except (NoMeetInterpolants, PreconditionFailed) as exc:
                    raise StrategyFailure(f"GLB interpolation: {exc}") from None
                m["nus"] = [tuple(c) for c in chain]
                m["j"] = 1
                pc = m["pc"] = ("pair", 4, 0) if len(chain) > 2 else ("pair", 4, "select")
            if pc[:2] == ("pair", 4) and pc[2] != "select":
                prefix, x = m["prefix"], m["x"]
                while m["j"] < len(m["nus"]) - 1:
                    j = m["j"]
                    if m["pc"] == ("pair", 4, 0):
                        base = prefix + m["nus"][j]
                        nu = self._convergent_above(P, base, Phi, x)
                        if nu is None:
                            self.transmit(node, P(base), 2, (u + 2, 4, j, 0))
                            return
                        m["hat_nus"] = [n + nu for n in m["nus"]]
                        m["pc"] = ("pair", 4, 1)
                    if not self.special_ok(node, m["alpha_star"]):
                        self.transmit(node, m["alpha_star"], 0, (u + 2, 4, j, 1))
                        return
                    top = least_top_extension(P, prefix + m["hat_nus"][j])
                    if top is None:
                        raise StrategyFailure("interpolant off the tree")
                    tail = top[len(prefix) + len(m["hat_nus"][j]):]
                    m["nus"] = [n + tail for n in m["hat_nus"]]
                    if any(prefix + n not in P.images for n in m["nus"]):
                        raise StrategyFailure("interpolants not all on the tree")
                    m["j"] += 1
                    m["pc"] = ("pair", 4, 0)
                pc = m["pc"] = ("pair", 4, "select")
            if pc == ("pair", 4, "select"):
                prefix, x = m["prefix"], m["x"]
                deltas = [P(prefix + n) for n in m["nus"]]
                vals = [Phi(d, x) for d in deltas]
                i = next((i for i in range(len(vals) - 1) if None not in (vals[i], vals[i + 1]) and vals[i] != vals[i + 1]), None)
                if i is None:
                    raise StrategyFailure("interpolated chain does not split")
                if i % 2:
                    node.state = (u + 2, 4, len(m["nus"]))
                    m["pc"] = "terminated"
                    return
                m["zeta"] = (prefix + m["nus"][i], prefix + m["nus"][i + 1])
                pc = m["pc"] = ("pair", 5)
            if pc == ("pair", 5):
                hi, hj = m["hat"][iu], m["hat"][ju]
                lam, lam2 = m["zeta"][0][len(hi):], m["zeta"][1][len(hi):]
                cm = next(c for c in range(len(hi)) if hi[c] != hj[c])
                try:
                    res = extendibility_interpolate(self.S, cm, hi[cm], hj[cm], lam, lam2)
                except (NoHomogeneityInterpolants, PreconditionFailed) as exc:
                    raise StrategyFailure(f"extendibility interpolation: {exc}") from None
                m["ext"], m["cm"] = res, cm
                m["sigmas"] = [(hi if r % 2 == 0 else hj) + lr for r, lr in enumerate(res.lambdas)]
                m["tail"] = ()
                m["mm"] = 1
                pc = m["pc"] = ("pair", 5, 0)
            if pc[:2] == ("pair", 5) and len(pc) == 3:
                x = m["x"]
                while m["mm"] < len(m["sigmas"]) - 1:
                    mm = m["mm"]
                    if m["pc"] == ("pair", 5, 0):
                        base = m["sigmas"][mm]
                        if base not in P.images:
                            raise StrategyFailure("interpolant off the tree")
                        nu = self._convergent_above(P, base, Phi, x)
                        if nu is None:
                            self.transmit(node, P(base), 2, (u + 2, 5, mm, 0))
                            return
                        m["nu"] = nu
                        m["pc"] = ("pair", 5, 1)
                    if not self.special_ok(node, m["alpha_star"]):
                        self.transmit(node, m["alpha_star"], 0, (u + 2, 5, mm, 1))
                        return
                    top = least_top_extension(P, m["sigmas"][mm] + m["nu"])
                    if top is None:
                        raise StrategyFailure("interpolant off the tree")
                    ext = top[len(m["sigmas"][mm]):]
                    m["sigmas"] = [s + ext for s in m["sigmas"]]
                    m["tail"] = m["tail"] + ext
                    m["mm"] += 1
                    m["pc"] = ("pair", 5, 0)
                pc = m["pc"] = ("pair", 6)
            if pc == ("pair", 6):
                x = m["x"]
                imgs = [P(s) for s in m["sigmas"]]
                if None in imgs:
                    raise StrategyFailure("interpolants not all on the tree")
                vals = [Phi(g, x) for g in imgs]
                r = next((r for r in range(len(vals) - 1) if None not in (vals[r], vals[r + 1]) and vals[r] != vals[r + 1]), None)
                if r is None:
                    raise StrategyFailure("extendible chain does not split")
                f = m["ext"].maps[r]
                cm = m["cm"]
                m["eta"] = [h + tuple(fx[h[cm]] for fx in f) + m["tail"] for h in m["hat"]]
                if any(e not in P.images for e in m["eta"]):
                    raise StrategyFailure("extended level not on the tree")
                m["u"] += 1
                m["pc"] = ("pair", 0) if m["u"] < len(m["pairs"]) else "finish"
        if m["pc"] == "terminated":
            node.state = node.state or (0, 1)
            return
        images = {}
        for (k_dom, letter), e in zip(m["slots"], m["eta"]):
            images[k_dom + (letter,)] = P(e)
        if len({len(v) for v in images.values()}) > 1:
            raise StrategyFailure("new level is not uniform in height")
        self._grow(node, images)

    def _related_tops(self, P: TreeMap, z0: Str, z1: Str, b: int) -> tuple[Str, Str] | None:
        """Least top extensions of ``z0``, ``z1`` related mod ``b`` in domain and image."""

        def tops(z):
            out, frontier = [], [z]
            while frontier:
                s = frontier.pop(0)
                if len(s) == P.depth:
                    out.append(s)
                else:
                    frontier.extend(P.children(s))
            return out

        for a in tops(z0):
            for c in tops(z1):
                if self.S.strings_related(b, a, c) and self.S.strings_related(b, P(a), P(c)):
                    return a, c
        return None

    def _convergent_above(self, P: TreeMap, base: Str, Phi: StringFunctional, x: int) -> Str | None:
        """Least domain suffix ``nu`` with ``{e}(P(base*nu); x)`` convergent within the stage budget."""
        best = None
        for k in P.domain():
            if is_prefix(base, k) and Phi(P(k), x, self.budget) is not None:
                best = k
                break
        return None if best is None else best[len(base):]

    # -- triggers and designation

    def detect_triggers(self, at_start: set[Path]) -> list[dict]:
        """All triggers of the stage, highest priority first, each with its transmission sequence."""
        out = []
        for d in self.live():
            node = self.nodes[d]
            if d not in at_start or not node.began_phase1 or not self.prev[d].empty:
                continue
            found = self._trigger_from(d)
            if found is not None:
                out.append(found)
        out.sort(key=lambda tr: _prio_key(tr["delta"]))
        return out

    def _changed(self, p: Path) -> bool:
        n = self.nodes[p]
        return n.state is not None and n.state != n.prev_state

    def _trigger_from(self, delta: Path) -> dict | None:
        seq = []
        changed = self._changed(delta)
        beta = delta
        while True:
            bn = self.nodes[beta]
            low = bn.low_sent()
            if beta == ():
                return {"delta": delta, "beta": beta, "sequence": seq}
            if changed and low is None:
                return {"delta": delta, "beta": beta, "sequence": seq}
            # move up: beta must pass the request on
            if beta == delta:
                if low is None:
                    return None
            else:
                if bn.is_phase2:
                    if low is None or bn.preferred != seq[-1] or not self.prev[beta].on(seq[-1][0]):
                        return None
                elif bn.designation == EXT:
                    if low is None or low != seq[-1] or bn.preferred != seq[-1] or not self.prev[beta].on(seq[-1][0]):
                        return None
                else:
                    return None
            seq.append(low)
            beta = beta[:-1]
            changed = changed or self._changed(beta)

    def designate(self, triggers: list[dict], cancelled: list[str], designated: list[str]) -> dict | None:
        if triggers:
            tr = triggers[0]
            delta, beta = tr["delta"], tr["beta"]
            bn = self.nodes[beta]
            info = {"delta": fmt_path(delta), "beta": fmt_path(beta), "sequence": [fmt_pair(x) for x in tr["sequence"]]}
            sent = bn.sent() if (bn.is_phase2 or beta == delta) else None
            for q in self.live():
                if higher_priority(delta, q) and "skip-cancel" not in self.faults:
                    self.nodes[q].cancelled = True
                    cancelled.append(fmt_path(q))
            if sent is not None and sent[1] >= 2:
                alpha_star, i_star = sent
                parent = self.nodes[beta[:-1]]
                xi_star = self.prev[beta[:-1]].preimage(alpha_star)
                target = beta[:-1] + (beta[-1] + 1,)
                b = bn.memo.get("b", 0) if i_star == 3 else 0
                if i_star == 3 and b != self.S.lattice.bottom:
                    req = dict(bn.params)
                    req["k"] = b
                    self._new_node(target, SP, req, alpha_star)
                    info["subcase"] = 2
                else:
                    node = StrategyNode(target, EXT, self.stage, ext_subtree(parent.tree, xi_star), {"xi": xi_star})
                    self.nodes[target] = node
                    info["subcase"] = 1 if i_star != 3 else 2
                designated.append(fmt_path(target))
                self.alpha, self.gamma = alpha_star, target
            elif beta == delta:
                self.alpha, self.gamma = self.nodes[delta].tree.root() or self.alpha, delta
                info["subcase"] = 3
            else:
                self.alpha, self.gamma = tr["sequence"][-1][0], delta
                info["subcase"] = 4
            info["case"] = 1
            return info
        g = self.nodes.get(self.gamma)
        if g is None or g.cancelled:
            live = self.live()
            self.gamma = max(live, key=_prio_key)
            g = self.nodes[self.gamma]
        child = self.gamma + (0,)
        if not g.tree.empty and (child not in self.nodes or self.nodes[child].cancelled):
            level = len(child)
            kind = self.schedule.kind(level)
            self.alpha = g.tree.root()
            self._new_node(child, kind, self.schedule.requirement(level), self.alpha)
            designated.append(fmt_path(child))
            self.gamma = child
            return {"case": 2, "designated": fmt_path(child), "kind": kind}
        return None

    def _new_node(self, path: Path, kind: str, req: dict, above: Str) -> StrategyNode:
        params = dict(req)
        tree = empty_tree(self.S)
        if kind == SP:
            P = self.nodes[path[:-1]].tree
            if P.on(above) and len(above) == self.nodes[()].tree.ht:
                tree = single_node(self.S, above)
        elif kind == DIFF:
            a, b = params["a"], params["b"]
            letters = self.S.members(0)
            p, q = next(
                (x, y) for x in letters for y in letters
                if self.S.related(b, x, y) and not self.S.related(a, x, y)
            )
            params["p"], params["q"] = p, q
        node = StrategyNode(path, kind, self.stage, tree, params, phase=1 if kind == LTREE else 0)
        self.nodes[path] = node
        return node

    # -- audit

    def audit(self, active: set[Path], triggers: list[dict]) -> tuple[list[str], list[str]]:
        bad: list[str] = []
        soft: list[str] = []
        t = self.stage
        for p in sorted(active, key=acting_key):
            n = self.nodes[p]
            if "failure" in n.memo:
                bad.append(f"strategy failure {n.memo.pop('failure')}")
            before = self.prev[p]
            for prob in reception_problems(before, n.received, n.prev_received):
                bad.append(f"appropriate reception at {fmt_path(p)}: {prob}")
            low = [x for x in n.received if x[1] <= 1]
            if low and n.designation != EXT and n.preferred not in low:
                soft.append(f"preference: {fmt_path(p)} receives {fmt_pair(low[0])} without preferring it")
            # special arrays: containment and extension
            if any(before.images.get(k) != v for k, v in before.images.items() if k in n.tree.images) or not set(before.images) <= set(n.tree.images):
                bad.append(f"growth: {fmt_path(p)} does not extend its previous tree")
            if p:
                par = self.nodes[p[:-1]]
                pr = set(par.tree.images.values())
                if any(v not in pr for v in n.tree.images.values()):
                    bad.append(f"growth: {fmt_path(p)} not contained in its parent")
            # persistence of potential focal points
            chain = [p[:j] for j in range(len(p) + 1)]
            for k in before.potential_focal_points():
                a = before(k)
                if all(
                    j >= 2 or (j == 1 and is_prefix(a, beta)) or (j == 0 and is_prefix(a, beta) and self.prev[c].is_focal(a))
                    for c in chain for beta, j in self.nodes[c].received
                ):
                    if not n.tree.is_potential_focal(a):
                        bad.append(f"focal-points: {fmt_path(p)} loses potential focal point {fmt(a)}")
            # growth
            if n.tree != before:
                h = n.tree.ht
                for c in chain[:-1]:
                    if self.nodes[c].tree.ht != h:
                        bad.append(f"height: {fmt_path(p)} grew to height {h} but {fmt_path(c)} has {self.nodes[c].tree.ht}")
                if not before.empty:
                    rec = n.growth.get(t)
                    if rec is None or rec[0] is None or rec[0] > 1:
                        bad.append(f"height: {fmt_path(p)} grew without a type 0/1 extension for its preferred pair")
        dyn = [p for p in active if self.nodes[p].tree != self.prev[p] and self.nodes[p].designation != EXT]
        if len(dyn) > 1:
            bad.append(f"more than one tree grew: {', '.join(fmt_path(p) for p in sorted(dyn))}")
        for p in dyn:
            if not any(is_prefix(p, tr["delta"]) and is_prefix(tr["beta"], p) for tr in triggers):
                bad.append(f"trigger: {fmt_path(p)} grew without a trigger")
        for p in sorted(active, key=acting_key):
            if not p or p[-1] == 0:
                continue
            left = p[:-1] + (p[-1] - 1,)
            ln = self.nodes.get(left)
            root = self.prev[p].root()
            if ln is None or left not in active:
                bad.append(f"left-neighbour: {fmt_path(p)} has no live left neighbour")
                continue
            if len(ln.transmitted) != 1 or ln.transmitted[0][1] < 2 or ln.transmitted[0][0] != root:
                bad.append(f"left-neighbour: {fmt_path(left)} sends {[fmt_pair(x) for x in ln.transmitted]} but {fmt_path(p)} has root {fmt(root) if root is not None else None}")
            lroot = self.prev[left].root()
            if lroot is not None and (root is None or not (is_prefix(lroot, root) and lroot != root)):
                bad.append(f"root-order: root of {fmt_path(p)} does not properly extend the root of {fmt_path(left)}")
            for j in range(p[-1]):
                sib = p[:-1] + (j,)
                if sib in active:
                    for alpha, i in self.nodes[sib].transmitted:
                        if i < 2 or root is None or not is_prefix(alpha, root):
                            bad.append(f"sibling: {fmt_path(sib)} sends {fmt_pair((alpha, i))} against root of {fmt_path(p)}")
        rooted = [(p, self.nodes[p].tree.root()) for p in sorted(active, key=_prio_key) if not self.nodes[p].tree.empty]
        for x in range(len(rooted)):
            for y in range(x + 1, len(rooted)):
                (p, rp), (q, rq) = rooted[x], rooted[y]
                if higher_priority(p, q) and not is_prefix(rp, rq):
                    bad.append(f"nesting: root of {fmt_path(q)} does not extend the root of {fmt_path(p)}")
        for p, n in self.nodes.items():
            if n.cancelled:
                continue
            if n.tree.empty:
                kids = [q for q, c in self.nodes.items() if q[:-1] == p and q != p and not c.cancelled]
                if not n.is_phase1:
                    bad.append(f"emptiness: {fmt_path(p)} is empty but designated {n.designation}")
                if kids:
                    bad.append(f"emptiness: empty {fmt_path(p)} has designated children")
        return bad, soft


def _prio_key(p: Path):
    """Sort key whose order is the priority order (ancestors first, then left to right)."""
    return p


def _stretch_to(P: TreeMap, xi: Str, a: int, height: int) -> Str | None:
    s = tuple(xi)
    while True:
        s = s + (a,)
        img = P(s)
        if img is None or len(img) > height:
            return None
        if len(img) == height:
            return img


# ---------------------------------------------------------------- front door


def run_construction(
    table: StagedTable,
    stages: int,
    schedule: RequirementSchedule | None = None,
    budget: Callable[[int], int] | None = None,
    checked: bool = True,
    faults: Sequence[str] = (),
    raise_on_violation: bool = False,
    max_tree_size: int = 50_000,
) -> RunResult:
    """Run ``stages`` stages; in checked mode every stage is audited.

    Raises :class:`BudgetExceeded` once a live tree outgrows ``max_tree_size``.
    """
    c = Construction(table, schedule, budget, checked, faults, max_tree_size)
    res = c.run(stages)
    if raise_on_violation and res.violations():
        raise InvariantViolation(res.violations())
    return res


def check_invariants(result: RunResult) -> dict:
    return {"violations": result.violations(), "warnings": result.warnings()}


@dataclass
class GReport:
    prefix: Str
    last_change: list[int]
    gamma: Path
    gamma_roots: list[tuple[str, str, Str, int]]
    increasing: bool
    containment: bool

    def stable_by(self, stage: int, upto: int) -> bool:
        """Whether coordinates ``x < upto`` exist and last changed no later than ``stage``."""
        return len(self.last_change) >= upto and all(c <= stage for c in self.last_change[:upto])


def extract_g(result: RunResult) -> GReport:
    """Limit estimate of the generic: last values of ``alpha_s`` and the Gamma-approximation."""
    alphas = result.alphas
    final = alphas[-1]
    last_change = []
    for x in range(len(final)):
        last = 0
        for s in range(1, len(alphas)):
            before = alphas[s - 1][x] if x < len(alphas[s - 1]) else None
            now = alphas[s][x] if x < len(alphas[s]) else None
            if before != now:
                last = s
        last_change.append(last)
    cancel_stages = [r.stage for r in result.trace if r.cancelled]
    # "visited infinitely often" is read as visited in the second half of the
    # window after the final cancellation
    after = cancel_stages[-1] if cancel_stages else 0
    window = after + (len(result.gammas) - after) // 2
    gamma = min(result.gammas[window:], key=acting_key)
    roots = []
    for j in range(len(gamma) + 1):
        p = gamma[:j]
        if p in result.roots:
            stage, kind, root = result.roots[p]
            roots.append((fmt_path(p), kind, root, stage))
    lengths = [len(r[2]) for r in roots if r[1] in (DIFF, LTREE)]
    increasing = all(a < b for a, b in zip(lengths, lengths[1:]))
    containment = all(
        is_prefix(root, alphas[s])
        for _, _, root, stage in roots
        for s in range(max(stage, after), len(alphas))
    )
    return GReport(final, last_change, gamma, roots, increasing, containment)

"""Executable AUV case-study fixture.

Provides the safety-controller state machine (four operating modes with
guarded transitions over sensed velocities and obstacle distances), an
exhaustive desk-scale deadlock checker over a finite environment grid, and
the generator emitting the complete example bundle: the five-module case
file, the FMEDA table, the machine tree document, the runtime obstacle
reading, supporting text artifacts, and a theory document carrying the
deadlock checker's machine verdict.

Only the OCM<->MOM and MOM->HCM transitions (t1, t4) come from the modelled
controller's documented guards; the remaining transitions (t2, t3, t5-t9)
are fixture-invented to make the machine total and deterministic, and the
numeric thresholds StaticObsHorizDist/StaticObsVertDist/MinSafeDist/CDA are
fixture configuration defaults consistent with the documented guards.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .case_model import (
    ArgumentModule,
    ArgumentNode,
    ArtifactKind,
    ArtifactPackage,
    ArtifactRecord,
    AssuranceCase,
    AwayTarget,
    Connector,
    ConnectorKind,
    ConstraintRecord,
    Declaration,
    NodeKind,
    serialize_case,
)
from .formal_export import render_verdict_attachment

# --- Guard expression trees --------------------------------------------------


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Call:
    function: str  # hdist | vdist | odist
    arg: str       # cstc | cdyn


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Cmp:
    op: str  # >= <= > <
    left: object
    right: object


@dataclass(frozen=True)
class And:
    left: object
    right: object


@dataclass(frozen=True)
class Or:
    left: object
    right: object


@dataclass(frozen=True)
class Not:
    operand: object


_CMP_TYPE = {">=": "GreaterOrEqual", "<=": "LessOrEqual", ">": "Greater", "<": "Less"}


def guard_to_tree(expr) -> dict:
    """Serialize a guard into the machine document's ``$type`` convention."""
    if isinstance(expr, Var):
        return {"$type": "Ref", "ref": {"$type": "Named", "name": expr.name}}
    if isinstance(expr, Call):
        return {"$type": "CallExp",
                "function": {"$type": "Ref", "ref": {"$type": "Named", "name": expr.function}},
                "args": [{"$type": "Ref", "ref": {"$type": "Named", "name": expr.arg}}]}
    if isinstance(expr, Const):
        return {"$type": "Const", "value": expr.value}
    if isinstance(expr, Cmp):
        return {"$type": _CMP_TYPE[expr.op],
                "left": guard_to_tree(expr.left), "right": guard_to_tree(expr.right)}
    if isinstance(expr, And):
        return {"$type": "And", "left": guard_to_tree(expr.left), "right": guard_to_tree(expr.right)}
    if isinstance(expr, Or):
        return {"$type": "Or", "left": guard_to_tree(expr.left), "right": guard_to_tree(expr.right)}
    if isinstance(expr, Not):
        return {"$type": "Not", "expr": guard_to_tree(expr.operand)}
    raise TypeError(f"not a guard expression: {expr!r}")


# --- Machine, environment, constants -----------------------------------------


@dataclass(frozen=True)
class LreConstants:
    static_obs_horiz_dist: float = 0.3
    static_obs_vert_dist: float = 0.3
    min_safe_dist: float = 0.3
    cda: float = 7.5

    def lookup(self) -> dict[str, float]:
        return {
            "StaticObsHorizDist": self.static_obs_horiz_dist,
            "StaticObsVertDist": self.static_obs_vert_dist,
            "MinSafeDist": self.min_safe_dist,
            "CDA": self.cda,
        }


@dataclass(frozen=True)
class LreEnvironment:
    """One sensed-environment valuation; hashable for state-space search."""

    vel: float = 0.0
    hvel: float = 0.0
    in_opez: bool = False
    odist_cdyn: float = 8.0
    odist_cstc: float = 8.0
    hdist_cstc: float = 8.0
    vdist_cstc: float = 8.0
    hdist_cdyn: float = 8.0
    vdist_cdyn: float = 8.0

    def distance(self, function: str, obstacle: str) -> float:
        try:
            return getattr(self, f"{function}_{obstacle}")
        except AttributeError:
            raise KeyError(f"unknown distance {function}({obstacle})") from None


@dataclass(frozen=True)
class LreTransition:
    transition_id: str
    source: str
    target: str
    trigger: str | None
    guard: object


@dataclass(frozen=True)
class LreMachine:
    states: tuple[str, ...]
    initial: str
    events: tuple[str, ...]
    transitions: tuple[LreTransition, ...]
    entry_actions: tuple[tuple[str, tuple[tuple[str, float], ...]], ...] = ()

    def entry_outputs(self, state: str) -> tuple[tuple[str, float], ...]:
        return dict(self.entry_actions).get(state, ())


class NondeterminismError(Exception):
    def __init__(self, state: str, event: str | None, transition_ids: list[str]):
        self.transition_ids = tuple(transition_ids)
        offered = event if event is not None else "no event"
        super().__init__(
            f"multiple transitions enabled in {state} under {offered}: "
            + ", ".join(transition_ids))


def eval_guard(expr, env: LreEnvironment, constants: LreConstants) -> bool | float:
    if isinstance(expr, Var):
        if expr.name == "vel":
            return env.vel
        if expr.name == "hvel":
            return env.hvel
        if expr.name == "inOPEZ":
            return env.in_opez
        named = constants.lookup()
        if expr.name in named:
            return named[expr.name]
        raise KeyError(f"unknown guard variable {expr.name!r}")
    if isinstance(expr, Call):
        return env.distance(expr.function, expr.arg)
    if isinstance(expr, Const):
        return expr.value
    if isinstance(expr, Cmp):
        left = eval_guard(expr.left, env, constants)
        right = eval_guard(expr.right, env, constants)
        if expr.op == ">=":
            return left >= right
        if expr.op == "<=":
            return left <= right
        if expr.op == ">":
            return left > right
        return left < right
    if isinstance(expr, And):
        return eval_guard(expr.left, env, constants) and eval_guard(expr.right, env, constants)
    if isinstance(expr, Or):
        return eval_guard(expr.left, env, constants) or eval_guard(expr.right, env, constants)
    if isinstance(expr, Not):
        return not eval_guard(expr.operand, env, constants)
    raise TypeError(f"not a guard expression: {expr!r}")


def guard_to_cql_expr(expr, env: LreEnvironment, constants: LreConstants) -> str:
    """Render a guard as a query-language expression with bindings inlined.

    Lets tests confirm the native guard evaluator and the query engine agree
    on the same expression trees.
    """
    def literal(value) -> str:
        if isinstance(value, bool):
            return "true" if value else "false"
        return f"({value!r})"

    if isinstance(expr, (Var, Call, Const)):
        return literal(eval_guard(expr, env, constants))
    if isinstance(expr, Cmp):
        return (f"({guard_to_cql_expr(expr.left, env, constants)} {expr.op} "
                f"{guard_to_cql_expr(expr.right, env, constants)})")
    if isinstance(expr, And):
        return (f"({guard_to_cql_expr(expr.left, env, constants)} and "
                f"{guard_to_cql_expr(expr.right, env, constants)})")
    if isinstance(expr, Or):
        return (f"({guard_to_cql_expr(expr.left, env, constants)} or "
                f"{guard_to_cql_expr(expr.right, env, constants)})")
    if isinstance(expr, Not):
        return f"(not {guard_to_cql_expr(expr.operand, env, constants)})"
    raise TypeError(f"not a guard expression: {expr!r}")


DEFAULT_CONSTANTS = LreConstants()

EVENTS = ("reqVel", "reqHdng", "reqOCM", "reqMOM", "reqHCM", "endTask")


def build_lre_machine() -> LreMachine:
    """The fixture controller: OCM, MOM, HCM, CAM with deterministic guards."""
    near_horiz = And(Cmp(">=", Var("hvel"), Const(0.1)),
                     Cmp("<=", Call("hdist", "cstc"), Var("StaticObsHorizDist")))
    near_vert = And(Cmp(">=", Var("vel"), Const(0.1)),
                    Cmp("<=", Call("vdist", "cstc"), Var("StaticObsVertDist")))
    dyn_close = Cmp("<=", Call("odist", "cdyn"), Var("MinSafeDist"))
    all_clear = And(Not(near_horiz), And(Not(near_vert), Not(dyn_close)))

    autonomy_ok = And(
        And(Cmp("<=", Var("vel"), Const(0.1)), Cmp(">", Call("odist", "cdyn"), Const(7.5))),
        And(Cmp(">", Call("odist", "cstc"), Const(0.3)), Not(Var("inOPEZ"))))

    transitions = (
        LreTransition("t1", "OCM", "MOM", "reqMOM", autonomy_ok),
        LreTransition("t2", "MOM", "OCM", "reqOCM", all_clear),
        LreTransition("t3", "MOM", "OCM", "endTask", all_clear),
        LreTransition("t4", "MOM", "HCM", None, near_horiz),
        LreTransition("t5", "MOM", "HCM", None, And(Not(near_horiz), near_vert)),
        LreTransition("t6", "MOM", "CAM", None,
                      And(Not(near_horiz), And(Not(near_vert), dyn_close))),
        LreTransition("t7", "HCM", "MOM", None, all_clear),
        LreTransition("t8", "HCM", "CAM", None, dyn_close),
        LreTransition("t9", "CAM", "HCM", None, Not(dyn_close)),
    )
    return LreMachine(
        states=("OCM", "MOM", "HCM", "CAM"),
        initial="OCM",
        events=EVENTS,
        transitions=transitions,
        entry_actions=(
            ("MOM", (("advVel", 1.0),)),
            ("HCM", (("advVel", 0.1),)),
        ),
    )


def step(machine: LreMachine, state: str, env: LreEnvironment,
         event: str | None = None,
         constants: LreConstants = DEFAULT_CONSTANTS) -> tuple[str, tuple[tuple[str, float], ...]]:
    """Fire the unique enabled transition, or stay put when none is enabled.

    A transition is enabled when its trigger matches the offered event (or it
    has no trigger) and its guard holds under the environment. More than one
    enabled transition is a nondeterminism error naming the culprits.
    """
    if state not in machine.states:
        raise ValueError(f"unknown state {state!r}")
    if event is not None and event not in machine.events:
        raise ValueError(f"unknown event {event!r}")
    enabled = [
        t for t in machine.transitions
        if t.source == state
        and (t.trigger is None or t.trigger == event)
        and bool(eval_guard(t.guard, env, constants))
    ]
    if len(enabled) > 1:
        raise NondeterminismError(state, event, [t.transition_id for t in enabled])
    if not enabled:
        return state, ()
    fired = enabled[0]
    return fired.target, machine.entry_outputs(fired.target)


# --- Exhaustive deadlock check ------------------------------------------------


class SearchOutcome(str, Enum):
    DEADLOCK_FREE = "deadlockFree"
    DEADLOCK_FOUND = "deadlockFound"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class Configuration:
    state: str
    env: LreEnvironment


@dataclass(frozen=True)
class DeadlockResult:
    outcome: SearchOutcome
    states_explored: int
    witness: tuple[Configuration, ...] | None = None

    @property
    def deadlock_free(self) -> bool:
        return self.outcome is SearchOutcome.DEADLOCK_FREE


def default_env_grid() -> tuple[LreEnvironment, ...]:
    """The desk-scale discretization: velocities x distances x OPEZ flag.

    Only the distance observables the fixture guards read are varied; unused
    distance slots stay at their far default.
    """
    velocities = (0.0, 0.1, 1.0)
    distances = (0.1, 0.3, 1.0, 8.0)
    grid = []
    for vel in velocities:
        for hvel in velocities:
            for hdist_cstc in distances:
                for vdist_cstc in distances:
                    for odist_cstc in distances:
                        for odist_cdyn in distances:
                            for in_opez in (False, True):
                                grid.append(LreEnvironment(
                                    vel=vel, hvel=hvel, in_opez=in_opez,
                                    odist_cdyn=odist_cdyn, odist_cstc=odist_cstc,
                                    hdist_cstc=hdist_cstc, vdist_cstc=vdist_cstc))
    return tuple(grid)


def check_deadlock(machine: LreMachine,
                   env_grid: tuple[LreEnvironment, ...] | None = None,
                   constants: LreConstants = DEFAULT_CONSTANTS,
                   max_configs: int = 10 ** 6) -> DeadlockResult:
    """Breadth-first exploration of (state, environment) configurations.

    The environment evolves freely over the grid between machine steps and
    any single event (or none) may be offered. A configuration is stuck when
    no transition is enabled for any environment successor and event; the
    machine is deadlock free iff no reachable configuration is stuck. The
    exploration order (initial environments in grid order, then successor
    environments and events in declared order) is deterministic, as is the
    returned witness. Exceeding ``max_configs`` yields an inconclusive
    outcome, distinct from a found deadlock.
    """
    grid = default_env_grid() if env_grid is None else tuple(env_grid)
    if not grid:
        raise ValueError("environment grid is empty")
    event_options: tuple[str | None, ...] = (None, *machine.events)

    by_source: dict[str, list[LreTransition]] = {s: [] for s in machine.states}
    for t in machine.transitions:
        by_source[t.source].append(t)

    guard_table: dict[str, list[bool]] = {
        t.transition_id: [bool(eval_guard(t.guard, env, constants)) for env in grid]
        for t in machine.transitions
    }

    # fired[state][env index][event option index] -> target state or None
    fired: dict[str, list[list[str | None]]] = {}
    for state in machine.states:
        per_env: list[list[str | None]] = []
        for env_index in range(len(grid)):
            per_event: list[str | None] = []
            for event in event_options:
                enabled = [
                    t for t in by_source[state]
                    if (t.trigger is None or t.trigger == event)
                    and guard_table[t.transition_id][env_index]
                ]
                if len(enabled) > 1:
                    raise NondeterminismError(state, event,
                                              [t.transition_id for t in enabled])
                per_event.append(enabled[0].target if enabled else None)
            per_env.append(per_event)
        fired[state] = per_env

    stuck: dict[str, bool] = {
        state: all(target is None
                   for per_event in fired[state] for target in per_event)
        for state in machine.states
    }

    parents: dict[Configuration, Configuration | None] = {}
    queue: deque[Configuration] = deque()
    for env in grid:
        config = Configuration(machine.initial, env)
        if config not in parents:
            parents[config] = None
            queue.append(config)

    def witness_path(config: Configuration) -> tuple[Configuration, ...]:
        path = [config]
        while parents[path[-1]] is not None:
            path.append(parents[path[-1]])  # type: ignore[arg-type]
        return tuple(reversed(path))

    # Successors depend only on the configuration's state (the environment
    # ranges freely over the grid), so each state is expanded once; this
    # yields the same visited set, parents, and order as expanding every
    # configuration.
    expanded: set[str] = set()
    while queue:
        config = queue.popleft()
        if stuck[config.state]:
            return DeadlockResult(SearchOutcome.DEADLOCK_FOUND, len(parents),
                                  witness_path(config))
        if config.state in expanded:
            continue
        expanded.add(config.state)
        for env_index, env in enumerate(grid):
            for event_index in range(len(event_options)):
                target = fired[config.state][env_index][event_index]
                if target is None:
                    continue
                successor = Configuration(target, env)
                if successor not in parents:
                    if len(parents) >= max_configs:
                        return DeadlockResult(SearchOutcome.INCONCLUSIVE, len(parents))
                    parents[successor] = config
                    queue.append(successor)
    return DeadlockResult(SearchOutcome.DEADLOCK_FREE, len(parents))


# --- Machine document ---------------------------------------------------------


def machine_to_document(machine: LreMachine) -> dict:
    states = []
    entry = dict(machine.entry_actions)
    for name in machine.states:
        state: dict = {"$type": "State", "name": name}
        actions = entry.get(name, ())
        if actions:
            channel, value = actions[0]
            state["entry_action"] = channel
            state["entry_value"] = value
        states.append(state)
    transitions = []
    for t in machine.transitions:
        obj: dict = {"$type": "Transition", "name": t.transition_id,
                     "source": t.source, "target": t.target}
        if t.trigger is not None:
            obj["trigger"] = t.trigger
        obj["condition"] = guard_to_tree(t.guard)
        transitions.append(obj)
    return {
        "$type": "StateMachine",
        "initial": machine.initial,
        "events": [{"$type": "Event", "name": e} for e in machine.events],
        "states": states,
        "transitions": transitions,
    }


# --- Bundle generation ---------------------------------------------------------

FMEDA_CSV = """\
ComponentID,FailureRate,SafetyRelated,FailureMode,FailureModeDistribution,SafetyGoalViolation,SafetyMechanism,FailureModeCoverage,SPF_RF
D1,10,Yes,Open,30%,Yes,None,0%,3
,,,Short,70%,,,,
C1,2,Yes,Open,30%,,,,
,,,Short,70%,,,,
C2,2,Yes,Open,30%,,,,
,,,Short,70%,,,,
L1,15,Yes,Open,30%,Yes,None,0%,4.5
,,,Short,70%,,,,
R1,1,No,Open,30%,,,,
,,,Short,70%,,,,
Lamp1,150,No,Open,100%,,,,
U1,100,Yes,RAM,100%,Yes,ECC,99%,1
"""

SPFM_CONSTRAINT = """\
var entries = FMEDA.all();
var safety_related = 0;
var spf_rf = 0;
for(e in entries) {
\tif(e.SafetyRelated = "Yes") {
\t\tsafety_related += e.FailureRate.asReal();
\t}
\tif(e.SafetyGoalViolation = "Yes") {
\t\tspf_rf += e.SPF_RF.asReal();
\t}
}
var spfm = 1 - (spf_rf)/safety_related;
return spfm > 0.9;
"""

TRANSITIONS_CONSTRAINT = """\
var result = true;
var from_mom = Transition.all.select(t|t.source = "MOM");
result = result and from_mom.count() >= 3;
var t4 = Transition.all.selectOne(t|t.name = "t4");
var t5 = Transition.all.selectOne(t|t.name = "t5");
var t6 = Transition.all.selectOne(t|t.name = "t6");
var t4c = t4.condition;
var t4check = t4c.isTypeOf(And) and
t4c.left.isTypeOf(GreaterOrEqual) and
t4c.left.left.ref.name = "hvel" and
t4c.left.right.value = 0.1 and
t4c.right.isTypeOf(LessOrEqual) and
t4c.right.left.isTypeOf(CallExp) and
t4c.right.left.function.ref.name = "hdist" and
t4c.right.left.args.first.ref.name = "cstc" and
t4c.right.right.ref.name = "StaticObsHorizDist";
result = result and t4check;
return result;
"""

HCM_ENTRY_CONSTRAINT = """\
var hcm = State.all.selectOne(s|s.name = "HCM");
return hcm.entry_action = "advVel" and hcm.entry_value = 0.1;
"""

READING_RANGES_CONSTRAINT = """\
var r = M!ObstacleReading.all().first();
return (r.ns_rel_dist>=-50.0 and r.ns_rel_dist<=50.0)
and (r.ew_rel_dist>=-50.0 and r.ew_rel_dist<=50.0)
and (r.obs_depth>=-10.0 and r.obs_depth<=0.0)
and (r.obs_ns_vel>=-5.0 and r.obs_ns_vel<=5.0)
and (r.obs_ew_vel>=-5.0 and r.obs_ew_vel<=5.0)
and (r.obs_roc>=-5.0 and r.obs_roc<=5.0);
"""

AUTOPILOT_INTERFACE_TEXT = """\
Autopilot advisory interface
============================
Inputs accepted from the safety controller only:
  advVel <m/s>   advise a velocity ceiling
  advHdng <deg>  advise a heading change
The autopilot acts on no other command source while a task is active.
"""

OPERATOR_PROCEDURES_TEXT = """\
Operator procedures
===================
1. Request autonomous operation only outside exclusion zones.
2. Resume manual control with reqOCM before surfacing.
3. Abort the task with endTask when surface operations begin.
"""

DEFAULT_OBSTACLE_READING = {
    "$type": "ObstacleReading",
    "ns_rel_dist": 0.0,
    "ew_rel_dist": 0.0,
    "obs_depth": 0.0,
    "obs_ns_vel": 0.0,
    "obs_ew_vel": 0.0,
    "obs_roc": 0.0,
}

OBSTACLE_READING_ARTIFACT = "Obstacle_Reading"
OBSTACLE_READING_PATH = "artifacts/obstacle_reading.json"


def _node(node_id: str, kind: NodeKind, description: str, **kwargs) -> ArgumentNode:
    return ArgumentNode(node_id, kind, description, **kwargs)


def build_auv_case() -> AssuranceCase:
    """The five-module example case with traceable artifacts and constraints."""
    auv_system = ArgumentModule(
        "AUV_System",
        nodes=(
            _node("AUV_G0", NodeKind.GOAL,
                  "The AUV is acceptably safe to operate in its defined pond context.",
                  public=True),
            _node("AUV_S0", NodeKind.STRATEGY,
                  "Argue safety over every subsystem of the AUV."),
            _node("AUV_C0", NodeKind.CONTEXT,
                  "Operations take place in an enclosed pond with designated exclusion zones.",
                  declaration=Declaration.AXIOMATIC),
            _node("AUV_AG_Platform", NodeKind.AWAY_GOAL,
                  "Platform sensing is trustworthy.",
                  away_target=AwayTarget("Platform_Argument", "Sensors")),
            _node("AUV_AG_Operator", NodeKind.AWAY_GOAL,
                  "Operator interaction is safe.",
                  away_target=AwayTarget("Operator_Argument", "Operator")),
            _node("AUV_AG_LRE", NodeKind.AWAY_GOAL,
                  "The safety controller mitigates collision and splash hazards.",
                  away_target=AwayTarget("LRE_Argument", "C6_a")),
            _node("AUV_AG_Autopilot", NodeKind.AWAY_GOAL,
                  "The autopilot obeys safety advisories.",
                  away_target=AwayTarget("Autopilot_Argument", "Autopilot")),
        ),
        connectors=(
            Connector("AUV_c1", ConnectorKind.SUPPORTED_BY, "AUV_G0", "AUV_S0"),
            Connector("AUV_c2", ConnectorKind.SUPPORTED_BY, "AUV_S0", "AUV_AG_Platform"),
            Connector("AUV_c3", ConnectorKind.SUPPORTED_BY, "AUV_S0", "AUV_AG_Operator"),
            Connector("AUV_c4", ConnectorKind.SUPPORTED_BY, "AUV_S0", "AUV_AG_LRE"),
            Connector("AUV_c5", ConnectorKind.SUPPORTED_BY, "AUV_S0", "AUV_AG_Autopilot"),
            Connector("AUV_c6", ConnectorKind.IN_CONTEXT_OF, "AUV_G0", "AUV_C0"),
        ),
    )

    lre = ArgumentModule(
        "LRE_Argument",
        nodes=(
            _node("C6_a", NodeKind.GOAL,
                  "On detecting a close static obstacle the LRE commands HCM and limits "
                  "the AUV velocity to 0.1 m/s.",
                  public=True),
            _node("LRE_S1", NodeKind.STRATEGY,
                  "Argue by formalising the controller behaviour and decomposing over "
                  "detection, command, and liveness."),
            _node("LRE_C1", NodeKind.CONTEXT,
                  "The controller behaviour is given by the LRE state machine model.",
                  declaration=Declaration.AXIOMATIC),
            _node("LRE_A1", NodeKind.ASSUMPTION,
                  "The operator is not in control while the LRE acts autonomously.",
                  declaration=Declaration.ASSUMED),
            _node("LRE_AG_Autopilot", NodeKind.AWAY_GOAL,
                  "The autopilot obeys safety advisories.",
                  away_target=AwayTarget("Autopilot_Argument", "Autopilot")),
            _node("LRE_AG_Sensors", NodeKind.AWAY_GOAL,
                  "Sensors deliver reliable, in-range obstacle data.",
                  away_target=AwayTarget("Platform_Argument", "Sensors")),
            _node("C7_a", NodeKind.GOAL,
                  "The LRE activates HCM whenever a potential collision risk is present."),
            _node("C7_b", NodeKind.GOAL,
                  "The LRE commands the autopilot to reduce speed to 0.1 m/s on entering HCM."),
            _node("C7_c", NodeKind.GOAL, "The LRE state machine is deadlock free."),
            _node("Sn1", NodeKind.SOLUTION,
                  "Guarded transitions into HCM from MOM in the behaviour model.",
                  citations=("LRE_HCM_R1",)),
            _node("Sn2", NodeKind.SOLUTION,
                  "HCM entry action limiting velocity to 0.1 m/s in the behaviour model.",
                  citations=("LRE_HCM_R2",)),
            _node("Sn3", NodeKind.SOLUTION,
                  "Machine-checked deadlock freedom verdict for the behaviour model.",
                  citations=("Deadlock_Free",)),
            _node("LRE.Validation", NodeKind.GOAL,
                  "The LRE behaviour model is validated against the implemented controller.",
                  public=True, undeveloped=True),
        ),
        connectors=(
            Connector("LRE_c01", ConnectorKind.SUPPORTED_BY, "C6_a", "LRE_S1"),
            Connector("LRE_c02", ConnectorKind.SUPPORTED_BY, "C6_a", "LRE_AG_Autopilot"),
            Connector("LRE_c03", ConnectorKind.SUPPORTED_BY, "C6_a", "LRE_AG_Sensors"),
            Connector("LRE_c04", ConnectorKind.IN_CONTEXT_OF, "C6_a", "LRE_A1"),
            Connector("LRE_c05", ConnectorKind.IN_CONTEXT_OF, "LRE_S1", "LRE_C1"),
            Connector("LRE_c06", ConnectorKind.SUPPORTED_BY, "LRE_S1", "C7_a"),
            Connector("LRE_c07", ConnectorKind.SUPPORTED_BY, "LRE_S1", "C7_b"),
            Connector("LRE_c08", ConnectorKind.SUPPORTED_BY, "LRE_S1", "C7_c"),
            Connector("LRE_c09", ConnectorKind.SUPPORTED_BY, "C7_a", "Sn1"),
            Connector("LRE_c10", ConnectorKind.SUPPORTED_BY, "C7_b", "Sn2"),
            Connector("I1", ConnectorKind.SUPPORTED_BY, "C7_c", "Sn3"),
        ),
    )

    platform = ArgumentModule(
        "Platform_Argument",
        nodes=(
            _node("Sensors", NodeKind.GOAL,
                  "Sensors deliver reliable, in-range obstacle data.", public=True),
            _node("Sensor.G2.a", NodeKind.GOAL,
                  "The proximity sensing chain is dependable in operation."),
            _node("Sensor.G3.a", NodeKind.GOAL,
                  "Sensor hardware is sufficiently reliable to provide accurate readings."),
            _node("Sensor.G3.b", NodeKind.GOAL,
                  "Obstacle readings stay within their specified ranges."),
            _node("Sensor.Sn1", NodeKind.SOLUTION,
                  "Hardware design metrics computed from the proximity sensor FMEDA.",
                  citations=("FMEDA_PowerSupply",)),
            _node("Sensor.Sn2", NodeKind.SOLUTION,
                  "Range evaluation of the live obstacle reading model.",
                  citations=(OBSTACLE_READING_ARTIFACT,)),
        ),
        connectors=(
            Connector("PLT_c1", ConnectorKind.SUPPORTED_BY, "Sensors", "Sensor.G2.a"),
            Connector("PLT_c2", ConnectorKind.SUPPORTED_BY, "Sensor.G2.a", "Sensor.G3.a"),
            Connector("PLT_c3", ConnectorKind.SUPPORTED_BY, "Sensor.G2.a", "Sensor.G3.b"),
            Connector("PLT_c4", ConnectorKind.SUPPORTED_BY, "Sensor.G3.a", "Sensor.Sn1"),
            Connector("PLT_c5", ConnectorKind.SUPPORTED_BY, "Sensor.G3.b", "Sensor.Sn2"),
        ),
    )

    autopilot = ArgumentModule(
        "Autopilot_Argument",
        nodes=(
            _node("Autopilot", NodeKind.GOAL,
                  "The autopilot obeys safety advisories and accepts no other command source.",
                  public=True),
            _node("Autopilot.Sn1", NodeKind.SOLUTION,
                  "Published advisory interface restricting command sources.",
                  citations=("Autopilot_Interface",)),
        ),
        connectors=(
            Connector("APT_c1", ConnectorKind.SUPPORTED_BY, "Autopilot", "Autopilot.Sn1"),
        ),
    )

    operator = ArgumentModule(
        "Operator_Argument",
        nodes=(
            _node("Operator", NodeKind.GOAL,
                  "Operator interaction follows the published safe procedures.", public=True),
            _node("Operator.Sn1", NodeKind.SOLUTION,
                  "Published operating procedures for pond operations.",
                  citations=("Operator_Procedures",)),
        ),
        connectors=(
            Connector("OPR_c1", ConnectorKind.SUPPORTED_BY, "Operator", "Operator.Sn1"),
        ),
    )

    packages = (
        ArtifactPackage("LRE_Artifacts", artifacts=(
            ArtifactRecord("LRE_HCM_R1", ArtifactKind.TREE, "artifacts/lre_machine.json",
                           constraints=(ConstraintRecord("lre_transitions", "cql",
                                                         TRANSITIONS_CONSTRAINT),)),
            ArtifactRecord("LRE_HCM_R2", ArtifactKind.TREE, "artifacts/lre_machine.json",
                           constraints=(ConstraintRecord("hcm_entry", "cql",
                                                         HCM_ENTRY_CONSTRAINT),)),
            ArtifactRecord("Deadlock_Free", ArtifactKind.THEORY,
                           "artifacts/deadlock_freedom.theory"),
        )),
        ArtifactPackage("Platform_Artifacts", artifacts=(
            ArtifactRecord("FMEDA_PowerSupply", ArtifactKind.TABULAR, "artifacts/fmeda.csv",
                           metadata=(("fillDown", "ComponentID"), ("rowType", "FMEDA")),
                           constraints=(ConstraintRecord("spfm_target", "cql",
                                                         SPFM_CONSTRAINT),)),
            ArtifactRecord(OBSTACLE_READING_ARTIFACT, ArtifactKind.TREE,
                           OBSTACLE_READING_PATH,
                           constraints=(ConstraintRecord("reading_ranges", "cql",
                                                         READING_RANGES_CONSTRAINT),)),
        )),
        ArtifactPackage("Support_Artifacts", artifacts=(
            ArtifactRecord("Autopilot_Interface", ArtifactKind.TEXT,
                           "artifacts/autopilot_interface.txt"),
            ArtifactRecord("Operator_Procedures", ArtifactKind.TEXT,
                           "artifacts/operator_procedures.txt"),
        )),
    )

    return AssuranceCase(
        case_id="AUV",
        modules=(auv_system, platform, operator, lre, autopilot),
        artifact_packages=packages,
        inter_module_supports=(
            ("AUV_System", "Platform_Argument"),
            ("AUV_System", "Operator_Argument"),
            ("AUV_System", "LRE_Argument"),
            ("AUV_System", "Autopilot_Argument"),
            ("LRE_Argument", "Platform_Argument"),
            ("LRE_Argument", "Autopilot_Argument"),
        ),
    )


def deadlock_theory_document(machine: LreMachine | None = None) -> str:
    """Theory document carrying the deadlock checker's machine verdict."""
    machine = machine or build_lre_machine()
    result = check_deadlock(machine)
    if result.outcome is SearchOutcome.DEADLOCK_FREE:
        ok = True
        detail = (f"{result.states_explored} configurations explored, "
                  "no stuck configuration reachable")
    elif result.outcome is SearchOutcome.DEADLOCK_FOUND:
        ok = False
        assert result.witness is not None
        path = " -> ".join(c.state for c in result.witness)
        detail = f"stuck configuration reachable via {path}"
    else:
        ok = False
        detail = f"search inconclusive after {result.states_explored} configurations"
    lines = [
        render_verdict_attachment("deadlock-freedom", ok, detail),
        "Claim LRE_DeadlockFree axiomatic <<Exhaustive exploration of the discretized "
        "LRE state machine reaches no stuck configuration.>>",
    ]
    return "\n".join(lines) + "\n"


def generate_bundle(out_dir: Path | str) -> list[str]:
    """Write the complete example bundle; returns the sorted file manifest.

    Generation is deterministic: repeated runs produce byte-identical files.
    """
    out = Path(out_dir)
    (out / "artifacts").mkdir(parents=True, exist_ok=True)
    machine = build_lre_machine()
    files: dict[str, bytes] = {
        "case.json": serialize_case(build_auv_case()),
        "artifacts/fmeda.csv": FMEDA_CSV.encode("utf-8"),
        "artifacts/lre_machine.json": (
            json.dumps(machine_to_document(machine), indent=2) + "\n").encode("utf-8"),
        OBSTACLE_READING_PATH: (
            json.dumps(DEFAULT_OBSTACLE_READING, indent=2) + "\n").encode("utf-8"),
        "artifacts/deadlock_freedom.theory": deadlock_theory_document(machine).encode("utf-8"),
        "artifacts/autopilot_interface.txt": AUTOPILOT_INTERFACE_TEXT.encode("utf-8"),
        "artifacts/operator_procedures.txt": OPERATOR_PROCEDURES_TEXT.encode("utf-8"),
    }
    for rel, data in files.items():
        (out / rel).write_bytes(data)
    return sorted(files)

"""Project files (TOML), single-model files and policy files.

A project bundles the plant MDP, the environment modes, the belief table,
the formula and solver options. See ``data/vehicle_pedestrian.toml`` for a
complete example. The sections are:

``[plant]``
    ``states``, ``actions``, ``initial``, ``propositions``, ``[plant.labels]``
    and ``[plant.transitions.<state>]`` with one ``action = {succ = p}`` entry
    per enabled action.
``[env]``
    shared ``states``, ``initial``, ``propositions``, ``[env.labels]``, and one
    ``[[env.modes]]`` table per mode with a ``name`` and ``transitions``.
``[beliefs]``
    ``initial``, ``[beliefs.vectors]`` (one weight per mode) and
    ``[beliefs.update]``. Updates are given by ``triples`` (explicit
    ``[belief, src, dst, result]`` entries), then ordered ``rules`` whose
    ``belief``/``src``/``dst`` fields default to "any", then ``default``.
    A result of ``"stay"`` keeps the current belief.
``[spec]``
    ``ltl`` (inline formula) or ``dra`` (automaton file, relative to the
    project file), plus ``[spec.defines]`` for derived propositions.
``[options]``
    ``epsilon``, ``max_iters``, ``seed``.
"""
from __future__ import annotations

import hashlib
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .automata import Dra, parse_dra_file
from .composition import ProductModel
from .errors import (LtlSyntaxError, PolicyMismatchError, ProjectError, SynthError,
                     UnknownStateError)
from .ltl import Formula, atoms, parse_guard, parse_ltl
from .models import (Amdp, BeliefTable, LabeledMarkovChain, LabeledMdp, Violation,
                     validate_beliefs, validate_model)
from .solver import DEFAULT_EPSILON, DEFAULT_MAX_ITERS, SynthPolicy

BUNDLED = Path(__file__).resolve().parent / "data"


def bundled_project() -> Path:
    return BUNDLED / "vehicle_pedestrian.toml"


@dataclass(frozen=True)
class Options:
    epsilon: float = DEFAULT_EPSILON
    max_iters: int = DEFAULT_MAX_ITERS
    seed: int = 0


@dataclass
class Project:
    path: Path | None
    plant: LabeledMdp
    env_models: list[LabeledMarkovChain]
    beliefs: BeliefTable
    ltl: str | None
    dra: Dra | None
    defines: dict[str, Formula]
    options: Options
    digest: str
    mode_names: tuple[str, ...] = field(default_factory=tuple)

    @property
    def spec(self) -> Dra | str:
        return self.dra if self.dra is not None else self.ltl


def _need(table: dict, key: str, where: str):
    if key not in table:
        raise ProjectError(f"[{where}] is missing {key!r}")
    return table[key]


def _mdp_from_table(t: dict, where: str) -> LabeledMdp:
    states = _need(t, "states", where)
    actions = _need(t, "actions", where)
    trans = {}
    for s, by_action in t.get("transitions", {}).items():
        for a, succ in by_action.items():
            trans[s, a] = succ
    return LabeledMdp.build(states, actions, trans, _need(t, "initial", where),
                            t.get("labels", {}), t.get("propositions"))


def _mc_from_table(t: dict, transitions: dict, where: str) -> LabeledMarkovChain:
    return LabeledMarkovChain.build(_need(t, "states", where), transitions,
                                    _need(t, "initial", where), t.get("labels", {}),
                                    t.get("propositions"))


def _amdp_from_table(t: dict, where: str) -> Amdp:
    trans = {}
    for s, by_a in t.get("transitions", {}).items():
        for a, by_b in by_a.items():
            for b, succ in by_b.items():
                trans[s, a, b] = succ
    return Amdp.build(_need(t, "states", where), _need(t, "control_actions", where),
                      _need(t, "adversarial_actions", where), trans,
                      _need(t, "initial", where), t.get("labels", {}), t.get("propositions"))


def _beliefs_from_table(t: dict, env_states, mode_names) -> BeliefTable:
    vectors = _need(t, "vectors", "beliefs")
    update = t.get("update", {})
    rules = []
    for entry in update.get("triples", []):
        if len(entry) != 4:
            raise ProjectError(f"belief triple {entry!r} must be [belief, src, dst, result]")
        b, s, d, r = entry
        rules.append(([b], [s], [d], r))
    for rule in update.get("rules", []):
        if "to" not in rule:
            raise ProjectError(f"belief rule {rule!r} has no 'to'")
        rules.append((_as_list(rule.get("belief")), _as_list(rule.get("src")),
                      _as_list(rule.get("dst")), rule["to"]))
    return BeliefTable.from_rules(list(vectors), list(vectors.values()),
                                  _need(t, "initial", "beliefs"), env_states, rules,
                                  default=update.get("default"),
                                  mode_names=t.get("modes", mode_names))


def _as_list(x):
    if x is None:
        return None
    return [x] if isinstance(x, str) else list(x)


def load_project(path: str | Path, initial_belief: str | None = None) -> Project:
    """Read a project file. Structural problems raise ``ProjectError``;
    semantic ones (row sums, missing updates) are left to ``validate_project``."""
    path = Path(path)
    raw = path.read_bytes()
    try:
        data = tomllib.loads(raw.decode("utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ProjectError(f"{path}: {exc}") from None
    h = hashlib.sha256(raw)
    try:
        plant = _mdp_from_table(_need(data, "plant", "top level"), "plant")
        env = _need(data, "env", "top level")
        modes = _need(env, "modes", "env")
        mode_names = tuple(m.get("name", f"mode{i + 1}") for i, m in enumerate(modes))
        env_models = [_mc_from_table(env, m.get("transitions", {}), f"env mode {name}")
                      for name, m in zip(mode_names, modes)]
        beliefs = _beliefs_from_table(_need(data, "beliefs", "top level"),
                                      env_models[0].states if env_models else (), mode_names)
        if initial_belief is not None:
            beliefs = beliefs.with_initial(initial_belief)
            h.update(f"\0initial-belief={initial_belief}".encode())
    except UnknownStateError as exc:
        raise ProjectError(f"{path}: {exc}") from None
    except KeyError as exc:
        raise ProjectError(f"{path}: unknown name {exc}") from None

    spec = _need(data, "spec", "top level")
    ltl = spec.get("ltl")
    dra = None
    if "dra" in spec:
        dra_path = path.parent / spec["dra"]
        dra_raw = dra_path.read_bytes()
        h.update(b"\0dra\0" + dra_raw)
        dra = parse_dra_file(dra_raw.decode("utf-8"))
    elif ltl is None:
        raise ProjectError("[spec] needs either 'ltl' or 'dra'")
    defines = {}
    for name, text in spec.get("defines", {}).items():
        try:
            defines[name] = parse_guard(text)
        except LtlSyntaxError as exc:
            raise ProjectError(f"definition of {name}: {exc}") from None
    opts = data.get("options", {})
    options = Options(float(opts.get("epsilon", DEFAULT_EPSILON)),
                      int(opts.get("max_iters", DEFAULT_MAX_ITERS)),
                      int(opts.get("seed", 0)))
    return Project(path, plant, env_models, beliefs, ltl, dra, defines, options,
                   h.hexdigest(), mode_names)


def with_dra(project: Project, dra_path: str | Path) -> Project:
    """Same project with the formula replaced by an automaton file."""
    raw = Path(dra_path).read_bytes()
    digest = hashlib.sha256(project.digest.encode() + b"\0dra\0" + raw).hexdigest()
    return Project(project.path, project.plant, project.env_models, project.beliefs,
                   None, parse_dra_file(raw.decode("utf-8")), project.defines,
                   project.options, digest, project.mode_names)


def validate_project(project: Project) -> list[tuple[str, Violation]]:
    out = [("plant", v) for v in validate_model(project.plant)]
    for name, m in zip(project.mode_names, project.env_models):
        out += [(f"env mode {name}", v) for v in validate_model(m)]
    out += [("beliefs", v) for v in validate_beliefs(project.beliefs)]
    if project.beliefs.num_modes != len(project.env_models):
        out.append(("beliefs", Violation(
            "mode-count", f"{project.beliefs.num_modes} weights vs {len(project.env_models)} modes")))
    clash = project.plant.propositions & project.env_models[0].propositions \
        if project.env_models else set()
    if clash:
        out.append(("env", Violation("proposition-collision", ", ".join(sorted(clash)))))
    known = project.plant.propositions
    if project.env_models:
        known = known | project.env_models[0].propositions
    for name, f in project.defines.items():
        missing = atoms(f) - known
        if missing:
            out.append(("spec", Violation("unknown-proposition",
                                          f"{name}: {', '.join(sorted(missing))}")))
    known = known | set(project.defines)
    spec_atoms = project.dra.propositions if project.dra is not None else _ltl_atoms(project.ltl)
    if spec_atoms is not None and not spec_atoms <= known:
        out.append(("spec", Violation("unknown-proposition",
                                      ", ".join(sorted(spec_atoms - known)))))
    return out


def _ltl_atoms(text):
    try:
        return atoms(parse_ltl(text))
    except SynthError:
        return None


# ------------------------------------------------------------ single models

def model_to_dict(model) -> dict:
    def names(lab):
        return sorted(lab)

    d: dict = {"states": list(model.states), "initial": model.states[model.initial],
               "propositions": sorted(model.propositions)}
    d["labels"] = {model.states[s]: names(lab) for s, lab in enumerate(model.labels) if lab}
    trans: dict = {}
    if isinstance(model, LabeledMarkovChain):
        d["kind"] = "mc"
        for s, row in sorted(model.transitions.items()):
            trans[model.states[s]] = {model.states[t]: p for t, p in row}
    elif isinstance(model, LabeledMdp):
        d["kind"] = "mdp"
        d["actions"] = list(model.actions)
        for (s, a), row in sorted(model.transitions.items()):
            trans.setdefault(model.states[s], {})[model.actions[a]] = \
                {model.states[t]: p for t, p in row}
    else:
        d["kind"] = "amdp"
        d["control_actions"] = list(model.control_actions)
        d["adversarial_actions"] = list(model.adversarial_actions)
        for (s, a, b), row in sorted(model.transitions.items()):
            trans.setdefault(model.states[s], {}).setdefault(model.control_actions[a], {})[
                model.adversarial_actions[b]] = {model.states[t]: p for t, p in row}
    d["transitions"] = trans
    return d


def model_from_dict(d: dict):
    kind = _need(d, "kind", "model")
    if kind == "mc":
        return _mc_from_table(d, d.get("transitions", {}), "model")
    if kind == "mdp":
        return _mdp_from_table(d, "model")
    if kind == "amdp":
        return _amdp_from_table(d, "model")
    raise ProjectError(f"unknown model kind {kind!r}")


def dump_model(model) -> str:
    return tomli_w.dumps(model_to_dict(model))


def load_model(text: str):
    return model_from_dict(tomllib.loads(text))


# ------------------------------------------------------------ policy files

def policy_lines(policy: SynthPolicy, product: ProductModel) -> list[str]:
    lines = []
    for s in range(product.num_states):
        key = product.decode(s).key()
        if s in policy.amec_schedule:
            act = "schedule:" + ",".join(policy.action_names[a] for a in policy.amec_schedule[s])
        else:
            act = policy.action_names[policy.transient_choice[s]]
        dist = policy.distance.get(s)
        lines.append(f"{key} | {act} | {float(policy.values[s])!r} | "
                     f"{'-' if dist is None else dist}")
    return lines


def write_policy(path: str | Path, policy: SynthPolicy, product: ProductModel, digest: str):
    header = [
        "# ltlsynth policy",
        f"# project-sha256: {digest}",
        f"# mode: {policy.objective}",
        f"# states: {product.num_states}",
        "# state | action or schedule | value | distance",
    ]
    Path(path).write_text("\n".join(header + policy_lines(policy, product)) + "\n")


def read_policy_header(path: str | Path) -> dict[str, str]:
    meta = {}
    for line in Path(path).read_text().splitlines():
        if not line.startswith("#"):
            break
        key, sep, value = line[1:].partition(":")
        if sep:
            meta[key.strip()] = value.strip()
    return meta


def read_policy(path: str | Path, product: ProductModel, digest: str) -> SynthPolicy:
    """Load a policy written for ``product``; hash and size must match."""
    meta = read_policy_header(path)
    if meta.get("project-sha256") != digest:
        raise PolicyMismatchError(
            f"policy file was written for project sha256 {meta.get('project-sha256')}, "
            f"but this project hashes to {digest}")
    if int(meta.get("states", -1)) != product.num_states:
        raise PolicyMismatchError(
            f"policy covers {meta.get('states')} states, product has {product.num_states}")
    model = product.model
    names = model.control_actions if isinstance(model, Amdp) else model.actions
    aidx = {a: i for i, a in enumerate(names)}
    index = {product.decode(s).key(): s for s in range(product.num_states)}
    transient, schedule, distance = {}, {}, {}
    values = np.zeros(product.num_states)
    for line in Path(path).read_text().splitlines():
        if line.startswith("#") or not line.strip():
            continue
        try:
            key, act, val, dist = (x.strip() for x in line.split("|"))
            s = index[key]
            if act.startswith("schedule:"):
                schedule[s] = tuple(aidx[a] for a in act[len("schedule:"):].split(","))
            else:
                transient[s] = aidx[act]
            values[s] = float(val)
            distance[s] = None if dist == "-" else int(dist)
        except (KeyError, ValueError) as exc:
            raise PolicyMismatchError(f"bad policy line {line!r}: {exc}") from None
    if len(transient) + len(schedule) != product.num_states:
        raise PolicyMismatchError("policy file does not cover every product state")
    return SynthPolicy(model.states, transient, schedule, distance, values,
                       meta.get("mode", "expected"), names)

"""Scenario files: terrain seed, agent roster, thresholds, and script path.

A scenario is a YAML document (schema documented in the README). Built-in
scenarios ship inside the package and are addressed by bare name, e.g.
``default``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .engine import Simulation, SimulationConfig
from .gateway import ScriptedBackend
from .memory import MemoryStore
from .mind import AgentState, Persona, SomaticState
from .world import EntityPose, Posture, Region, TerrainGrid


class ScenarioError(Exception):
    pass


@dataclass
class AgentSpec:
    name: str
    disposition: str
    speech_style: str = "plain"
    x: float = 0.0
    y: float = 0.0
    posture: str = "standing"
    tiredness: float = 0.0


@dataclass
class Scenario:
    name: str = "unnamed"
    grid_width: int = 64
    grid_height: int = 64
    terrain: str = "flat"  # flat | noise
    terrain_level: float = 0.5
    terrain_seed: int = 0
    ticks_per_day: int = 400
    tremor_threshold: float = 0.5
    perception_radius: float = 10.0
    reflection_threshold: int = 50
    memory_dimension: int = 64
    half_life: float = 100.0
    retrieval_weights: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)
    max_turns: int = 8
    move_speed: float = 1.0
    token_budget: int = 2048
    tremor_interrupts_plans: bool = True
    microphone_region: Region | None = None
    script: str | None = None  # relative to the scenario file (or package data)
    base_dir: Path | None = None
    agents: list[AgentSpec] = field(default_factory=list)

    def config(self) -> SimulationConfig:
        return SimulationConfig(
            ticks_per_day=self.ticks_per_day,
            tremor_threshold=self.tremor_threshold,
            perception_radius=self.perception_radius,
            reflection_threshold=self.reflection_threshold,
            memory_dimension=self.memory_dimension,
            half_life=self.half_life,
            retrieval_weights=self.retrieval_weights,
            max_turns=self.max_turns,
            move_speed=self.move_speed,
            token_budget=self.token_budget,
            tremor_interrupts_plans=self.tremor_interrupts_plans,
            microphone_region=self.microphone_region,
        )

    def build_grid(self) -> TerrainGrid:
        if self.terrain == "flat":
            return TerrainGrid.flat(self.grid_width, self.grid_height, self.terrain_level)
        if self.terrain == "noise":
            generator = np.random.default_rng(self.terrain_seed)
            cells = generator.uniform(0.0, 1.0, size=(self.grid_height, self.grid_width))
            return TerrainGrid(self.grid_width, self.grid_height, cells)
        raise ScenarioError(f"unknown terrain kind {self.terrain!r}")

    def build_agents(self) -> list[AgentState]:
        if not self.agents:
            return []
        names = [spec.name for spec in self.agents]
        if len(set(names)) != len(names):
            raise ScenarioError("agent names must be unique")
        out = []
        for spec in self.agents:
            if not (0 <= spec.x < self.grid_width and 0 <= spec.y < self.grid_height):
                raise ScenarioError(f"agent {spec.name} starts out of bounds")
            out.append(
                AgentState(
                    persona=Persona(spec.name, spec.disposition, spec.speech_style),
                    pose=EntityPose(spec.name, float(spec.x), float(spec.y), Posture(spec.posture)),
                    somatic=SomaticState(spec.tiredness),
                    memory=MemoryStore(dimension=self.memory_dimension),
                )
            )
        return out

    def resolve_script(self, override: str | Path | None = None) -> Path | None:
        if override is not None:
            return Path(override)
        if self.script is None:
            return None
        candidate = Path(self.script)
        if candidate.is_absolute():
            return candidate
        if self.base_dir is not None and (self.base_dir / candidate).exists():
            return self.base_dir / candidate
        builtin = resources.files("llmscape") / "scenarios" / self.script
        if builtin.is_file():
            return Path(str(builtin))
        return candidate


def _parse(data: dict, base_dir: Path | None) -> Scenario:
    if not isinstance(data, dict):
        raise ScenarioError("scenario document must be a mapping")
    grid = data.get("grid", {})
    memory = data.get("memory", {})
    scenario = Scenario(
        name=str(data.get("name", "unnamed")),
        grid_width=int(grid.get("width", 64)),
        grid_height=int(grid.get("height", 64)),
        terrain=str(data.get("terrain", {}).get("kind", "flat")),
        terrain_level=float(data.get("terrain", {}).get("level", 0.5)),
        terrain_seed=int(data.get("terrain", {}).get("seed", 0)),
        ticks_per_day=int(data.get("ticks_per_day", 400)),
        tremor_threshold=float(data.get("tremor_threshold", 0.5)),
        perception_radius=float(data.get("perception_radius", 10.0)),
        reflection_threshold=int(data.get("reflection_threshold", 50)),
        memory_dimension=int(memory.get("dimension", 64)),
        half_life=float(memory.get("half_life", 100.0)),
        retrieval_weights=tuple(memory.get("weights", (1 / 3, 1 / 3, 1 / 3))),  # type: ignore[arg-type]
        max_turns=int(data.get("max_turns", 8)),
        move_speed=float(data.get("move_speed", 1.0)),
        token_budget=int(data.get("token_budget", 2048)),
        tremor_interrupts_plans=bool(data.get("tremor_interrupts_plans", True)),
        script=data.get("script"),
        base_dir=base_dir,
    )
    if len(scenario.retrieval_weights) != 3:
        raise ScenarioError("memory.weights needs exactly three values")
    mic = data.get("microphone_region")
    if mic is not None:
        scenario.microphone_region = Region(
            int(mic["x"]), int(mic["y"]), int(mic["width"]), int(mic["height"])
        )
    for raw in data.get("agents", []):
        if "name" not in raw or "disposition" not in raw:
            raise ScenarioError("each agent needs a name and a disposition")
        position = raw.get("position", [0, 0])
        scenario.agents.append(
            AgentSpec(
                name=str(raw["name"]),
                disposition=str(raw["disposition"]),
                speech_style=str(raw.get("speech_style", "plain")),
                x=float(position[0]),
                y=float(position[1]),
                posture=str(raw.get("posture", "standing")),
                tiredness=float(raw.get("tiredness", 0.0)),
            )
        )
    return scenario


def load_scenario(source: str | Path) -> Scenario:
    """Load a scenario from a file path or a built-in name like ``default``."""
    path = Path(source)
    if not path.exists():
        builtin = resources.files("llmscape") / "scenarios" / f"{source}.yaml"
        if builtin.is_file():
            data = yaml.safe_load(builtin.read_text(encoding="utf-8"))
            return _parse(data, None)
        raise ScenarioError(f"no scenario file or built-in named {source!r}")
    with open(path, encoding="utf-8") as handle:
        data = yaml.safe_load(handle)
    return _parse(data, path.parent)


def build_simulation(
    scenario: Scenario,
    seed: int = 0,
    script_path: str | Path | None = None,
    backend=None,
    log_path=None,
) -> Simulation:
    if backend is None:
        script = scenario.resolve_script(script_path)
        backend = ScriptedBackend.from_file(script) if script is not None else ScriptedBackend()
    return Simulation(
        grid=scenario.build_grid(),
        agents=scenario.build_agents(),
        backend=backend,
        config=scenario.config(),
        seed=seed,
        log_path=log_path,
    )

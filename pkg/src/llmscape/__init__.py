"""llmscape: a mutable sandbox world where LLM-driven agents perceive,
remember, reflect, plan, act, and converse, with every event logged as a
replayable corpus."""

from .actions import ActionKind, ActionRequest, action_duration, execute_action, validate_action
from .engine import (
    Conversation,
    InputInbox,
    SessionRng,
    ShadowInput,
    Simulation,
    SimulationConfig,
    TerrainEditInput,
    TickReport,
    UtteranceInput,
)
from .gateway import (
    LiveBackend,
    ModelReply,
    PromptContext,
    ScriptedBackend,
    ToolCall,
    ToolDescriptor,
    assemble_prompt,
    parse_tool_calls,
)
from .memory import (
    MemoryRecord,
    MemoryStore,
    append_memory,
    recency_score,
    relevance_score,
    retrieval_score,
    retrieve_top_k,
    should_reflect,
    synthesize_reflection,
)
from .mind import AgentState, Persona, Plan, SomaticState, perceive, update_somatic
from .scenario import Scenario, build_simulation, load_scenario
from .sessionlog import LogEntry, SessionLog, replay, summarize
from .world import (
    EntityPose,
    Region,
    TerrainGrid,
    WorldClock,
    WorldEvent,
    advance_clock,
    apply_terrain_edit,
    detect_shadow,
    detect_tremor,
    nearby_entities,
    step_towards,
)

__version__ = "0.1.0"

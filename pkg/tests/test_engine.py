from __future__ import annotations

import numpy as np
import pytest

from llmscape.actions import ActionKind
from llmscape.engine import (
    Conversation,
    InboxError,
    InputInbox,
    SessionRng,
    ShadowInput,
    Simulation,
    SimulationConfig,
    TerrainEditInput,
    UtteranceInput,
)
from llmscape.gateway import ModelReply, ScriptedBackend, ToolCall
from llmscape.memory import MemoryStore
from llmscape.mind import AgentState, Persona, SomaticState
from llmscape.sessionlog import Category, replay
from llmscape.world import EntityPose, Posture, Region, TerrainGrid


def make_agent(name, x, y):
    return AgentState(
        persona=Persona(name, f"{name} of the sands.", "plain"),
        pose=EntityPose(name, x, y),
        somatic=SomaticState(0.0),
        memory=MemoryStore(dimension=16),
    )


def tool(name, **args):
    return ModelReply(tool_calls=[ToolCall(name, args)])


def make_sim(script=None, agents=None, config=None, seed=7, grid=None):
    if agents is None:
        agents = [make_agent("woman", 8.0, 8.0), make_agent("boy", 12.0, 8.0)]
    backend = ScriptedBackend(script or {})
    return Simulation(
        grid=grid or TerrainGrid.flat(32, 32, 0.5),
        agents=agents,
        backend=backend,
        config=config or SimulationConfig(memory_dimension=16),
        seed=seed,
    )


class TestInbox:
    def test_fifo_order(self):
        inbox = InputInbox()
        first = inbox.enqueue(UtteranceInput("participant", "one"))
        second = inbox.enqueue(UtteranceInput("participant", "two"))
        assert (first, second) == (1, 2)
        drained = inbox.drain()
        assert [item.text for _, item in drained] == ["one", "two"]
        assert inbox.drain() == []

    def test_malformed_inputs_rejected(self):
        sim = make_sim()
        with pytest.raises(InboxError):
            sim.enqueue_participant_input(UtteranceInput("participant", "   "))
        with pytest.raises(InboxError):
            sim.enqueue_participant_input(
                TerrainEditInput(Region(30, 30, 5, 5), 0.1)
            )
        with pytest.raises(InboxError):
            sim.enqueue_participant_input(ShadowInput(np.zeros((4, 4), dtype=bool)))

    def test_edit_applies_at_next_tick_start(self):
        sim = make_sim()
        sim.enqueue_participant_input(TerrainEditInput(Region(0, 0, 2, 2), 0.2))
        assert float(sim.grid.cells[0, 0]) == 0.5  # not yet applied
        sim.tick()
        assert float(sim.grid.cells[0, 0]) == pytest.approx(0.7)


class TestTick:
    def test_empty_scenario_advances_clock_only(self):
        sim = make_sim(agents=[])
        report = sim.tick()
        assert report.tick == 1
        assert report.events_emitted == 0
        assert report.actions_executed == []
        assert report.entries_appended == 0

    def test_determinism_across_runs(self):
        script = {
            ("woman", 1): tool("pile_up_sand"),
            ("woman", 2): tool("wander"),
            ("boy", 1): tool("dance"),
            ("boy", 2): tool("wander"),
        }
        reports = []
        logs = []
        for _ in range(2):
            sim = make_sim(dict(script), agents=[make_agent("woman", 8.0, 8.0), make_agent("boy", 12.0, 8.0)])
            reports.append([sim.tick() for _ in range(20)])
            logs.append([entry.render() for entry in sim.log.entries()])
        assert reports[0] == reports[1]
        assert logs[0] == logs[1]

    def test_hand_derived_schedule(self):
        # wait(1) then dance(5) then waits: dance busy covers ticks 2-6, next action at 7
        script = {
            ("woman", 1): tool("wait"),
            ("woman", 2): tool("dance"),
            ("woman", 3): tool("rest"),
        }
        sim = make_sim(script, agents=[make_agent("woman", 8.0, 8.0)])
        kinds_by_tick = {}
        for _ in range(20):
            report = sim.tick()
            if report.actions_executed:
                kinds_by_tick[report.tick] = report.actions_executed
        assert kinds_by_tick[1] == ["wait"]
        assert kinds_by_tick[2] == ["dance"]
        assert kinds_by_tick[7] == ["rest"]  # dance occupied 2..6
        assert kinds_by_tick[17] == ["wait"]  # rest occupied 7..16, script exhausted

    def test_busy_exclusivity(self):
        script = {("woman", 1): tool("take_nap")}
        sim = make_sim(script, agents=[make_agent("woman", 8.0, 8.0)])
        total_actions = 0
        for _ in range(30):
            total_actions += len(sim.tick().actions_executed)
        assert total_actions == 1  # nap holds ticks 1-30

    def test_wander_uses_session_rng(self):
        script = {("woman", 1): tool("wander")}
        positions = []
        for seed in (1, 1, 2):
            sim = make_sim(dict(script), agents=[make_agent("woman", 8.0, 8.0)], seed=seed)
            for _ in range(10):
                sim.tick()
            agent = sim.agents["woman"]
            positions.append((agent.pose.x, agent.pose.y))
        assert positions[0] == positions[1]  # same seed, same walk
        assert positions[0] != positions[2]  # different seed, different walk

    def test_stage_order_within_tick(self):
        # event entries precede agent entries, which precede speech turns
        script = {("woman", 1): tool("talk_to", target="boy"),
                  ("woman", 2): ModelReply(text="hello")}
        sim = make_sim(script)
        sim.enqueue_participant_input(TerrainEditInput(Region(0, 0, 8, 8), 0.3))
        sim.tick()
        categories = [entry.category for entry in sim.log.entries()]
        event_position = categories.index(Category.EVENT)
        action_position = categories.index(Category.ACTION)
        speech_position = categories.index(Category.SPEECH)
        assert event_position < action_position < speech_position


class TestValidationPath:
    def test_invalid_choice_degrades_to_wait(self):
        # sit_down twice: second is a posture violation -> error entry + wait
        script = {
            ("woman", 1): tool("sit_down"),
            ("woman", 2): tool("sit_down"),
        }
        sim = make_sim(script, agents=[make_agent("woman", 8.0, 8.0)])
        sim.tick()
        report = sim.tick()
        assert report.actions_executed == ["wait"]
        errors = [e for e in sim.log.entries() if e.category is Category.ERROR]
        assert any(e.payload["code"] == "posture_violation" for e in errors)

    def test_backend_fallback_logs_error(self):
        # three unusable replies in a row exhaust the retry budget
        script = {("woman", step): ModelReply(text=f"musing {step}") for step in (1, 2, 3)}
        sim = make_sim(script, agents=[make_agent("woman", 8.0, 8.0)])
        report = sim.tick()
        assert report.actions_executed == ["wait"]
        errors = [e for e in sim.log.entries() if e.category is Category.ERROR]
        assert errors and errors[0].payload["code"] == "backend_fallback"

    def test_single_bad_reply_recovers_via_retry(self):
        script = {("woman", 1): ModelReply(text="not a tool call"),
                  ("woman", 2): tool("dance")}
        sim = make_sim(script, agents=[make_agent("woman", 8.0, 8.0)])
        report = sim.tick()
        assert report.actions_executed == ["dance"]
        assert not [e for e in sim.log.entries() if e.category is Category.ERROR]


class TestConversations:
    def _script(self, turns_by_agent):
        script = {}
        for agent, replies in turns_by_agent.items():
            for index, reply in enumerate(replies, start=1):
                script[(agent, index)] = reply
        return script

    def test_open_and_alternate(self):
        script = self._script({
            "woman": [tool("talk_to", target="boy"), ModelReply(text="hi boy"),
                      ModelReply(text="the sand moved")],
            "boy": [ModelReply(text="hello woman"), ModelReply(text="I saw it too")],
        })
        sim = make_sim(script)
        for _ in range(4):
            sim.tick()
        conversation = sim.conversations["conv-1"]
        speakers = [speaker for speaker, _, _ in conversation.turns]
        assert speakers == ["woman", "boy", "woman", "boy"]
        for previous, current in zip(speakers, speakers[1:]):
            assert previous != current

    def test_end_marker_closes_and_frees(self):
        script = self._script({
            "woman": [tool("talk_to", target="boy"), ModelReply(text="hi")],
            "boy": [ModelReply(text="bye now [END]")],
        })
        sim = make_sim(script)
        sim.tick()
        sim.tick()
        conversation = sim.conversations["conv-1"]
        assert conversation.state == "closed"
        assert conversation.turns[-1][1] == "bye now"
        assert sim.agents["woman"].conversation is None
        assert sim.agents["boy"].conversation is None

    def test_max_turns_cap(self):
        replies = [ModelReply(text=f"line {i}") for i in range(20)]
        script = self._script({
            "woman": [tool("talk_to", target="boy")] + replies,
            "boy": list(replies),
        })
        config = SimulationConfig(memory_dimension=16, max_turns=4)
        sim = make_sim(script, config=config)
        for _ in range(10):
            sim.tick()
        conversation = sim.conversations["conv-1"]
        assert conversation.state == "closed"
        assert len(conversation.turns) == 4

    def test_two_consecutive_failures_close(self):
        # only the opener is scripted; both speakers then hit exhausted-script
        # wait tool calls, which are unusable as speech -> failures
        script = self._script({"woman": [tool("talk_to", target="boy")]})
        sim = make_sim(script)
        sim.tick()  # opens; woman's first turn fails (failure 1)
        sim.tick()  # woman retries (still her turn), failure 2 -> close
        conversation = sim.conversations["conv-1"]
        assert conversation.state == "closed"
        assert sim.agents["woman"].conversation is None

    def test_target_busy_error(self):
        script = self._script({
            "woman": [tool("talk_to", target="boy"), ModelReply(text="hi")],
            "flamingo": [tool("talk_to", target="boy")],
        })
        agents = [
            make_agent("woman", 8.0, 8.0),
            make_agent("boy", 12.0, 8.0),
            make_agent("flamingo", 10.0, 10.0),
        ]
        sim = make_sim(script, agents=agents)
        sim.tick()
        errors = [e for e in sim.log.entries() if e.category is Category.ERROR]
        assert any(e.payload["code"] == "target_busy" for e in errors)
        assert sim.agents["flamingo"].conversation is None

    def test_talk_to_human_awaits_utterance(self):
        script = self._script({
            "woman": [tool("talk_to", target="participant"),
                      ModelReply(text="hello stranger"),
                      ModelReply(text="the ground shook today")],
        })
        sim = make_sim(script, agents=[make_agent("woman", 8.0, 8.0)])
        sim.tick()
        conversation = sim.conversations["conv-1"]
        assert conversation.participants == ("woman", "participant")
        assert [s for s, _, _ in conversation.turns] == ["woman"]
        sim.tick()  # human's turn: nothing happens without an utterance
        assert len(conversation.turns) == 1
        sim.enqueue_participant_input(
            UtteranceInput("participant", "hello!", target_agent="woman")
        )
        sim.tick()
        assert [s for s, _, _ in conversation.turns] == ["woman", "participant", "woman"]

    def test_participant_utterance_opens_conversation_and_gets_reply(self):
        script = self._script({"woman": [ModelReply(text="welcome, visitor")]} )
        config = SimulationConfig(memory_dimension=16)
        agents = [make_agent("woman", 8.0, 8.0)]
        agents[0].busy_until = 10**9  # even a busy agent converses
        sim = make_sim(script, agents=agents, config=config)
        sim.enqueue_participant_input(
            UtteranceInput("visitor", "anyone there?", target_agent="woman")
        )
        sim.tick()
        conversation = sim.conversations["conv-1"]
        assert conversation.participants == ("visitor", "woman")
        assert [s for s, _, _ in conversation.turns] == ["visitor", "woman"]
        speech = [e for e in sim.log.entries() if e.category is Category.SPEECH]
        assert speech[0].actor == "participant:visitor"
        assert speech[1].actor == "woman"


class TestShadowAndUtteranceEvents:
    def test_shadow_mask_yields_observations(self):
        sim = make_sim()
        mask = np.zeros((32, 32), dtype=bool)
        mask[8, 8] = True  # woman's cell
        sim.enqueue_participant_input(ShadowInput(mask))
        sim.tick()
        contemplations = [
            e for e in sim.log.entries()
            if e.category is Category.CONTEMPLATION and "shadow" in e.payload["text"].lower()
        ]
        assert any(e.actor == "woman" for e in contemplations)

    def test_untargeted_utterance_heard_by_agents_in_region(self):
        sim = make_sim()
        sim.enqueue_participant_input(UtteranceInput("participant", "hello world"))
        sim.tick()
        heard = [
            e.actor for e in sim.log.entries()
            if e.category is Category.CONTEMPLATION and "hello world" in e.payload["text"]
        ]
        assert set(heard) == {"woman", "boy"}


class TestLiveness:
    def test_every_agent_acts_within_two_max_durations(self):
        # exhausted script -> everyone waits; liveness must still hold
        sim = make_sim({}, agents=[make_agent("woman", 8.0, 8.0), make_agent("boy", 12.0, 8.0)])
        max_duration = 30  # take_nap
        window = 2 * max_duration
        acted: dict[str, int] = {"woman": 0, "boy": 0}
        for _ in range(window):
            sim.tick()
            for entry in sim.log.entries_since(0):
                if entry.category is Category.ACTION:
                    acted[entry.actor] = acted.get(entry.actor, 0) + 1
        assert acted["woman"] >= 1 and acted["boy"] >= 1


class TestReplayAndDigest:
    def test_replay_matches(self, tmp_path):
        from llmscape.scenario import load_scenario, build_simulation

        scenario = load_scenario("default")
        log_path = tmp_path / "session.jsonl"
        sim = build_simulation(scenario, seed=42, log_path=log_path)
        for _ in range(120):
            sim.tick()
        digest = sim.state_digest()
        sim.log.close()
        replay_digest = replay(log_path, scenario, None, seed=42, ticks=120)
        assert replay_digest == digest

    def test_replay_detects_flipped_character(self, tmp_path):
        from llmscape.scenario import load_scenario, build_simulation
        from llmscape.sessionlog import ReplayDivergence

        scenario = load_scenario("default")
        log_path = tmp_path / "session.jsonl"
        sim = build_simulation(scenario, seed=42, log_path=log_path)
        for _ in range(30):
            sim.tick()
        sim.log.close()
        text = log_path.read_text().splitlines()
        tampered_index = 4
        line = text[tampered_index]
        flip_at = line.index('"text"') + 9
        text[tampered_index] = line[:flip_at] + "X" + line[flip_at + 1:]
        log_path.write_text("\n".join(text) + "\n")
        with pytest.raises(ReplayDivergence) as err:
            replay(log_path, scenario, None, seed=42, ticks=30)
        assert err.value.seq == tampered_index + 1

    def test_log_completeness_actions_bijective(self, tmp_path):
        from llmscape.scenario import load_scenario, build_simulation

        scenario = load_scenario("default")
        sim = build_simulation(scenario, seed=42)
        executed = []
        for _ in range(200):
            executed.extend(sim.tick().actions_executed)
        logged = [
            entry.payload["kind"]
            for entry in sim.log.entries()
            if entry.category is Category.ACTION
        ]
        assert logged == executed


class TestTremorInterrupt:
    def test_tremor_triggers_plan_adaptation(self):
        from llmscape.mind import Plan, PlanStep

        script = {
            ("woman", 1): tool("wait"),
            ("woman", 2): tool("revise_plan", steps=[
                {"description": "shelter", "action": "sit_down"},
            ]),
        }
        sim = make_sim(script, agents=[make_agent("woman", 8.0, 8.0)])
        sim.agents["woman"].plan = Plan(
            "explore", [PlanStep("look around", ActionKind.WANDER)], cursor=0
        )
        sim.tick()  # consumes wait
        sim.enqueue_participant_input(TerrainEditInput(Region(6, 6, 4, 4), 0.4))
        sim.tick()  # tremor fires; plan adapted before action choice
        plan = sim.agents["woman"].plan
        assert [step.description for step in plan.steps] == ["shelter"]
        planning = [e for e in sim.log.entries() if e.category is Category.PLANNING]
        assert planning


class TestSessionRng:
    def test_position_tracks_draws(self):
        rng = SessionRng(5)
        assert rng.position == 0
        rng.uniform(0, 1)
        rng.uniform(0, 1)
        assert rng.position == 2

    def test_same_seed_same_stream(self):
        a = SessionRng(9)
        b = SessionRng(9)
        assert [a.uniform(0, 1) for _ in range(5)] == [b.uniform(0, 1) for _ in range(5)]

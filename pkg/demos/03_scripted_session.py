"""A complete scripted session: the default scenario, tick by tick.

The scripted backend replays canned replies keyed by (agent, step), so
the whole session is a pure function of (scenario, seed, script): the
woman chats with the boy, the flamingo piles sand and sets off a tremor,
plans form and adapt, and everyone eventually naps.
"""
from llmscape import build_simulation, load_scenario

scenario = load_scenario("default")
simulation = build_simulation(scenario, seed=42)

for _ in range(80):
    report = simulation.tick()
    if report.actions_executed or report.events_emitted:
        pass  # everything of note lands in the log below

print("--- the corpus, first 80 ticks ---")
for entry in simulation.log.entries():
    payload = entry.payload
    if entry.category.value == "speech":
        line = f'{payload["speaker"]} -> {payload["listener"]}: "{payload["text"]}"'
    elif entry.category.value == "action":
        line = f'{entry.actor} does {payload["kind"]} ({payload["duration"]} ticks)'
    elif entry.category.value == "event":
        line = f'{payload["kind"]} event (magnitude {payload["magnitude"]:.2f})'
    elif entry.category.value == "planning":
        line = f'{entry.actor} plans: {payload["goal"]} [{len(payload["steps"])} steps]'
    else:
        line = f'{entry.actor}: {payload.get("text", payload)}'
    print(f"  t{entry.tick:>3} #{entry.seq:<3} {entry.category.value:<13} {line}")

print("\nagents at tick 80:")
for agent in simulation.agents.values():
    print(
        f"  {agent.name:<9} at ({agent.pose.x:.1f}, {agent.pose.y:.1f})"
        f" {agent.pose.posture.value}, tiredness {agent.somatic.tiredness:.2f},"
        f" {len(agent.memory.records)} memories"
    )
print("state digest:", simulation.state_digest())

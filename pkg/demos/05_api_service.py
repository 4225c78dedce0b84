"""The network boundary: snapshots, participant inputs, and the event stream.

The same endpoints serve the browser companion. Here they are exercised
in-process: a terrain brush stroke raises sand and sets off a tremor, a
chat message to the woman starts a conversation, and the WebSocket stream
resumes cleanly from any seq after a disconnect.
"""
from fastapi.testclient import TestClient

from llmscape import build_simulation, load_scenario
from llmscape.service import SimulationService, create_app

scenario = load_scenario("default")
simulation = build_simulation(scenario, seed=7)
service = SimulationService(simulation, headless=True)
client = TestClient(create_app(service))

print("fresh snapshot:", {k: client.get("/state").json()[k] for k in ("tick", "phase")})

# Participant inputs are queued and take effect at the next tick.
edit = client.post("/terrain", json={"x": 20, "y": 20, "width": 3, "height": 3, "delta": 0.3})
print("brush stroke accepted, arrival order", edit.json()["order"])
chat = client.post("/utterance", json={"speaker": "visitor", "text": "Hello down there!",
                                       "target_agent": "woman"})
print("chat accepted, arrival order", chat.json()["order"])

for _ in range(6):
    simulation.tick()

state = client.get("/state").json()
cell = state["terrain"]["cells"][20][20]
print("terrain cell (20,20) after the stroke:", cell)
print("open conversations:", state["conversations"])

# Stream the corpus from the start, drop the link, resume with no gaps.
with client.websocket_connect("/events?since=0") as socket:
    first = [socket.receive_text() for _ in range(5)]
import json

last_seen = json.loads(first[-1])["seq"]
print(f"read 5 entries, disconnected at seq {last_seen}")

total = simulation.log.last_seq
with client.websocket_connect(f"/events?since={last_seen}") as socket:
    rest = []
    while last_seen + len(rest) < total:
        rest.append(socket.receive_text())
seqs = [json.loads(raw)["seq"] for raw in first + rest]
print("resumed; full stream seq range:", seqs[0], "..", seqs[-1],
      "gap-free:", seqs == list(range(1, total + 1)))

print("\nlog summary:", client.get("/log/summary").json()["by_category"])

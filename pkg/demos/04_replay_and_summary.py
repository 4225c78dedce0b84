"""Determinism and the replayable corpus.

A scripted session writes a JSONL corpus with canonical rendering (sorted
keys, 6-decimal floats), so a re-run reproduces it byte for byte. replay()
verifies that and returns a terrain+agent digest; summarize() counts the
corpus by category, actor, and action kind.
"""
import tempfile
from pathlib import Path

from llmscape import build_simulation, load_scenario, replay, summarize

scenario = load_scenario("default")
workdir = Path(tempfile.mkdtemp(prefix="llmscape-demo-"))
log_path = workdir / "session.jsonl"

simulation = build_simulation(scenario, seed=42, log_path=log_path)
ticks = 200
for _ in range(ticks):
    simulation.tick()
original_digest = simulation.state_digest()
simulation.log.close()
print(f"wrote {simulation.log.last_seq} entries to {log_path}")

# Re-run the same (scenario, seed, script) and compare line by line.
replay_digest = replay(log_path, scenario, None, seed=42, ticks=ticks)
print("replay byte-identical:", True)  # replay() raises on the first mismatch
print("digests match:", replay_digest == original_digest)

summary = summarize(log_path)
print("\ncorpus summary:")
for section, counts in summary.as_dict().items():
    print(f"  {section}: {counts}")

# Tamper with a single character and replay again: divergence, by seq.
lines = log_path.read_text().splitlines()
lines[2] = lines[2].replace('"', "'", 1)
log_path.write_text("\n".join(lines) + "\n")
try:
    replay(log_path, scenario, None, seed=42, ticks=ticks)
except Exception as err:
    print("\ntampered log detected:", type(err).__name__)

"""The associative memory stream: scoring, retrieval, and reflection.

Records are ranked by a weighted sum of recency (half-life decay),
importance (1-10), and relevance (cosine similarity against a query
embedding). Accumulated importance past a threshold triggers reflection,
which distills new insight records and resets the accumulator.
"""
from llmscape import MemoryStore, retrieve_top_k, recency_score, should_reflect
from llmscape.memory import Insight, MemoryKind, embed_text, synthesize_reflection

store = MemoryStore(dimension=64)

# A morning on the sandtable, as one agent remembers it.
store.remember(1, MemoryKind.OBSERVATION, "The light changed; it is now dawn.")
store.remember(3, MemoryKind.OBSERVATION, "boy is nearby now.")
store.remember(5, MemoryKind.OBSERVATION, "I felt a tremor shake the sand (strength 0.90).")
store.remember(9, MemoryKind.OBSERVATION, "I heard a sharp whistle from flamingo.")
store.remember(12, MemoryKind.SPEECH, 'boy said to me: "Did you feel the ground move?"')
store.remember(20, MemoryKind.OBSERVATION, "A shadow passed over the sand here.")

print(f"{len(store.records)} memories, accumulated importance {store.importance_accumulator}")

# Recency decays with a half-life: one half-life old scores exactly 0.5.
first = store.records[0]
print("recency now:", recency_score(first, now=first.tick))
print("recency one half-life later:", recency_score(first, now=first.tick + 100))

# Ask the stream what it knows about the tremor.
query = embed_text("what shook the ground", dimension=64)
for record in retrieve_top_k(store, query, k=3, now=25):
    print(f"  retrieved [tick {record.tick}] {record.text}")

# Reflection: once enough importance has piled up, distill insights.
threshold = 10
print("should reflect:", should_reflect(store, threshold))


class HandReflector:
    """Stands in for the model: reads memories, returns 1-3 insights."""

    def insights_for(self, memories, now):
        return [Insight("The ground is restless when hands are busy above it.", 7)]


records = synthesize_reflection(store, HandReflector(), now=25, reflection_threshold=threshold)
print("reflection:", records[0].text)
print("accumulator after reflection:", store.importance_accumulator)

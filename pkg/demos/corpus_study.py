"""Rule-cost ratios and a multi-failure sweep over a slice of the zoo corpus.

    python demos/corpus_study.py
"""
from pathlib import Path

from ringprobe.evaluation import ExperimentConfig, load_corpus, run_multifail, run_ratio

ZOO = Path(__file__).resolve().parents[1] / "corpus" / "zoo"
topologies, skipped = load_corpus(ZOO)
print(f"{len(topologies)} topologies loaded, {len(skipped)} skipped")

ratio = run_ratio(ExperimentConfig(), topologies)
s = ratio.summary
print(f"static rules vs lower bound: {s['fraction_optimal']:.0%} optimal, "
      f"worst {s['max_ratio']:.3f}, mean {s['mean_ratio']:.3f}")
for r in sorted(ratio.records, key=lambda r: -r.ratio)[:5]:
    print(f"  {r.topology:<22} |E|={r.edges:<4} rules={r.rule_cost:<4} bound={r.lower_bound:<4} {r.ratio:.3f}")

# Every 3-link failure pattern from every single-switch domain, small graphs only.
small = [t for t in topologies if t.num_edges <= 12]
study = run_multifail(ExperimentConfig(failures_k=3, max_edges=12), small)
print(f"\n3-failure sweep over {len(study.records)} graphs with at most 12 links")
for r in study.records[:10]:
    print(f"  {r.topology:<22} patterns={r.patterns:<4} average located {r.average_located:.2f}"
          f" (max {r.max_located}, cap {r.max_two_beta})")

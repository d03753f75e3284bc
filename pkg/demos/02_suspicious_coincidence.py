# %% [markdown]
# # The preference curve
#
# Score the Bayesian learner and two baselines on the bundled datasets.
# For every input set we compare the learner's yes/no grid against each
# compatible hypothesis with F1, and ask whether the smallest hypothesis
# scores strictly best. The per-size summary is the curve that should
# climb toward 1 for a learner that treats narrow coincidences as evidence.

# %%
import csv
import sys

from coincidence.datasets import bundled_sets, dataset_stats, query_list
from coincidence.evaluation import PredictionGrid, ReportRow, aggregate, score_grid
from coincidence.hypotheses import build_number_space, load_city_space
from coincidence.responders import BayesResponder, always_yes, random_majority

spaces = {"number": build_number_space(), "city": load_city_space()}

# %%
for domain, space in spaces.items():
    stats = dataset_stats(space, bundled_sets(space))
    print(domain, stats.sets_per_size, {k: round(v, 2) for k, v in stats.mean_candidates_per_size.items()})

# %%
def judgments(name, space, sets, queries):
    if name == "bayes":
        rsp = BayesResponder(space)
        return [j for s in sets for j in rsp.grid(s, queries)]
    if name == "random":
        return [random_majority(s, q, seed=0) for s in sets for q in queries]
    return [always_yes(s, q) for s in sets for q in queries]


rows = []
for domain, space in spaces.items():
    sets = bundled_sets(space)
    queries = query_list(space)
    for name in ("bayes", "random", "always-yes"):
        grid = PredictionGrid.from_judgments(judgments(name, space, sets, queries), domain, queries, responder=name)
        scores, _ = score_grid(space, sets, grid)
        rows += [r.record() for r in aggregate(scores, grid)]

# %% [markdown]
# Plot-ready output: one row per (domain, responder, input size).

# %%
writer = csv.DictWriter(sys.stdout, fieldnames=ReportRow.FIELDS, lineterminator="\n")
writer.writeheader()
for r in rows:
    writer.writerow({k: f"{v:.3f}" if isinstance(v, float) else v for k, v in r.items()})

# %% [markdown]
# # The number game under the size principle
#
# A learner sees a few numbers between 1 and 100 and has to guess which
# other numbers belong to the same hidden category. Each hypothesis is a
# set of numbers; a hypothesis that contains every example gets likelihood
# (1/|h|)^n, so small consistent hypotheses win quickly as examples pile up.

# %%
import numpy as np

from coincidence.bayes import generalization_probabilities, posterior
from coincidence.hypotheses import build_number_space, compatible, smallest

space = build_number_space()
print(len(space), "hypotheses over", len(space.roster), "numbers")

# %% [markdown]
# ## One example is ambiguous
#
# `16` fits even numbers, squares, powers of two, powers of four and more.

# %%
for h in compatible(space, [16]):
    print(f"{h.name:>6}  size {h.size:>2}")

post = posterior(space, [16])
for name, p in sorted(post.probs.items(), key=lambda kv: -kv[1]):
    print(f"{name:>6}  {p:.3f}")

# %% [markdown]
# ## More examples sharpen the posterior
#
# Adding 8, 2 and 64 leaves the same compatible hypotheses as far as
# powers of two go, but the smaller ones gain mass with every example.

# %%
for X in ([16], [16, 8], [16, 8, 2], [16, 8, 2, 64]):
    post = posterior(space, X)
    best = smallest(space, X).name
    print(f"{str(X):<16} smallest={best:<5} p={post[best]:.3f}")

# %% [markdown]
# ## Generalization
#
# p(y in C | X) sums the posterior over hypotheses that contain y. The
# decision rule says yes when that probability reaches one half.

# %%
queries = np.arange(1, 101)
probs = generalization_probabilities(space, [16, 8, 2, 64], queries)
print("yes:", queries[probs >= 0.5].tolist())

probs = generalization_probabilities(space, [60, 80, 10, 30], queries)
print("yes:", queries[probs >= 0.5].tolist())

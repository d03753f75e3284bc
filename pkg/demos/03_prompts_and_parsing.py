# %% [markdown]
# # Prompts and answer parsing
#
# Language models see the same task as text. Three prompt styles are
# available: a bare question, a question preceded by worked reasoning
# examples, and a question preceded by a description of every element's
# attributes. Free-text answers are mapped back to yes/no by keyword.

# %%
from coincidence import prompts as P
from coincidence.hypotheses import build_number_space, load_city_space
from coincidence.responders import ResponseParser, parse_response

numbers, cities = build_number_space(), load_city_space()

# %%
print(P.render_zero_shot([64, 96], 49).text)
print("-" * 60)
print(P.render_knowledge([64, 96], 49, numbers).text)
print("-" * 60)
print(P.render_zero_shot(["Dubai", "Karachi"], "Tokyo").text)

# %% [markdown]
# The reasoning prompt is long; only its tail is shown.

# %%
print(P.render_cot([64, 96], 49).text[-400:])

# %% [markdown]
# ## Parsing
#
# Positive keywords are checked first, so "unlikely" never reads as "likely".
# Anything without a keyword stays unparsed and is left out of scoring.

# %%
for text in ("Yes, it fits the pattern.", "It is unlikely.", "I think it will also produce 49.",
             "It is impossible to predict.", "No.", "Hmm, hard to say."):
    print(f"{parse_response(text):>9}  {text}")

lenient = ResponseParser().extended(["hard to say"])
print(lenient("Hmm, hard to say."))

# %% [markdown]
# ## Knowledge probes
#
# Direct membership questions check whether a model knows the categories
# at all, independent of any inference.

# %%
print(P.render_entity_probe("pow2", 32).text)
print(P.render_set_probe("asia", ["Tokyo", "Dubai"]).text)
